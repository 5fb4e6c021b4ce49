#![no_std]
#![doc = "Gibbs point processes with non-hereditary hardcore interactions: geometry, models, oracles, simulation and two-step estimation."]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod config;
pub mod estimate;
pub mod geometry;
pub mod gnz;
pub mod models;
pub mod oracle;
pub mod sampler;
