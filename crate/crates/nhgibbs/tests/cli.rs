use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nhgibbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhgibbs"))
        .args(args)
        .env_remove("NHGIBBS_SEED")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const HARD_SPHERE: &str = "model = hard_sphere\nsteps = 0.5\nalpha = 2\ntheta = 0.5\n";

fn simulate(spec: &str, out: &Path, extra: &[&str]) -> Output {
    let out = out.to_str().unwrap();
    let mut args = vec!["simulate", "--model-spec", spec, "--window", "6", "--burn", "2000", "--keep", "20", "--thin", "100", "--seed", "42", "--out", out];
    args.extend_from_slice(extra);
    nhgibbs(&args)
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_str().unwrap().to_string(), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn simulate_is_reproducible() {
    let t = tempfile::tempdir().unwrap();
    let spec = write(t.path(), "hs.spec", HARD_SPHERE);
    let a = t.path().join("a");
    let b = t.path().join("b");
    assert_eq!(code(&simulate(&spec, &a, &["--oracle"])), 0);
    assert_eq!(code(&simulate(&spec, &b, &[])), 0);
    let files = dir_bytes(&a);
    assert_eq!(files.len(), 21);
    assert!(files.iter().any(|(n, _)| n == "chain.meta"));
    assert!(files.iter().any(|(n, _)| n == "sample_00019.csv"));
    assert_eq!(files, dir_bytes(&b));
}

#[test]
fn seed_comes_from_the_environment_unless_given() {
    let t = tempfile::tempdir().unwrap();
    let spec = write(t.path(), "hs.spec", HARD_SPHERE);
    let run = |out: &str, seed: Option<&str>, env: Option<&str>| {
        let out = t.path().join(out);
        let mut c = Command::new(env!("CARGO_BIN_EXE_nhgibbs"));
        c.args(["simulate", "--model-spec", &spec, "--window", "5", "--burn", "500", "--keep", "2", "--thin", "50", "--out"])
            .arg(&out)
            .env_remove("NHGIBBS_SEED");
        if let Some(s) = seed {
            c.args(["--seed", s]);
        }
        if let Some(e) = env {
            c.env("NHGIBBS_SEED", e);
        }
        assert!(c.status().unwrap().success());
        dir_bytes(&out)
    };
    let from_env = run("e", None, Some("9"));
    let from_flag = run("f", Some("9"), None);
    let overridden = run("o", Some("9"), Some("10"));
    let other = run("x", None, Some("10"));
    assert_eq!(from_env, from_flag);
    assert_eq!(from_flag, overridden);
    assert_ne!(from_env, other);
}

#[test]
fn knn_without_cluster_moves_is_refused() {
    let t = tempfile::tempdir().unwrap();
    let spec = write(
        t.path(),
        "knn.spec",
        "model = knn\nk = 2\nphi = truncated_linear\nphi_c = 1\nalpha = 1\ntheta = 1\np_birth = 0.3\np_death = 0.3\np_move = 0.4\np_cluster_birth = 0\np_cluster_death = 0\n",
    );
    let o = simulate(&spec, &t.path().join("out"), &[]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("cluster"), "{err}");
}

#[test]
fn estimate_pipeline() {
    let t = tempfile::tempdir().unwrap();
    let spec = write(t.path(), "hs.spec", HARD_SPHERE);
    let arch = t.path().join("arch");
    assert_eq!(code(&simulate(&spec, &arch, &[])), 0);
    let pattern = arch.join("sample_00019.csv");
    let out1 = t.path().join("e1.csv");
    let out2 = t.path().join("e2.csv");
    for out in [&out1, &out2] {
        let o = nhgibbs(&[
            "estimate", "--model-spec", &spec, "--pattern", pattern.to_str().unwrap(), "--boundary", "torus", "--quad", "100",
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&out1).unwrap();
    assert_eq!(text, fs::read_to_string(&out2).unwrap());
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "alpha_hat,epsilon,attained,theta_hat_1,pll,grad_norm,iters,at_boundary,removable_count,n_points,L"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let alpha_hat: f64 = row[0].parse().unwrap();
    let theta: f64 = row[3].parse().unwrap();
    assert!(alpha_hat <= 2.0 && theta.is_finite());
    assert_eq!(row[10], "6");

    // plane reading of the same pattern goes through minus sampling
    let o = nhgibbs(&[
        "estimate", "--model-spec", &spec, "--pattern", pattern.to_str().unwrap(), "--boundary", "plane", "--quad", "100",
        "--out", t.path().join("plane.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn two_point_knn_pattern_is_invalid_input() {
    let t = tempfile::tempdir().unwrap();
    let spec = write(t.path(), "knn.spec", "model = knn\nk = 2\nphi = constant\nphi_c = 1\nalpha = 1\ntheta = 1\n");
    let pat = write(t.path(), "p.csv", "# side = 5\nx,y\n1,1\n1.3,1\n");
    let o = nhgibbs(&["estimate", "--model-spec", &spec, "--pattern", &pat, "--boundary", "torus", "--out", t.path().join("e.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("undefined"));
}

#[test]
fn gnz_check_poisson_and_corruption() {
    let t = tempfile::tempdir().unwrap();
    let spec = write(t.path(), "p.spec", "model = poisson\n");
    let arch = t.path().join("arch");
    assert_eq!(code(&simulate(&spec, &arch, &[])), 0);
    let out = t.path().join("gnz.csv");
    let o = nhgibbs(&["gnz-check", "--model-spec", &spec, "--samples", arch.to_str().unwrap(), "--functionals", "constant_one", "--quad", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "constant_one");
    assert_eq!(row[2], "36");

    let hs = write(t.path(), "hs.spec", HARD_SPHERE);
    let harch = t.path().join("harch");
    assert_eq!(code(&simulate(&hs, &harch, &[])), 0);
    fs::write(harch.join("sample_00007.csv"), "# side = 6\nx,y\n1,1\n1.1,1\n").unwrap();
    let o = nhgibbs(&["gnz-check", "--model-spec", &hs, "--samples", harch.to_str().unwrap(), "--quad", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sample_00007.csv"));

    let empty = t.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let o = nhgibbs(&["gnz-check", "--model-spec", &hs, "--samples", empty.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn gnz_breach_exits_with_one() {
    let t = tempfile::tempdir().unwrap();
    // samples drawn at theta = 0 checked against a strongly repulsive model
    let arch = t.path().join("arch");
    let free = write(t.path(), "free.spec", "model = hard_sphere\nsteps = 0.5\nalpha = 2\ntheta = 0\n");
    assert_eq!(code(&simulate(&free, &arch, &[])), 0);
    let strong = write(t.path(), "strong.spec", "model = hard_sphere\nsteps = 0.5\nalpha = 2\ntheta = 3\n");
    let o = nhgibbs(&["gnz-check", "--model-spec", &strong, "--samples", arch.to_str().unwrap(), "--quad", "25", "--out", t.path().join("g.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn study_outputs() {
    let t = tempfile::tempdir().unwrap();
    let cfg = write(
        t.path(),
        "study.cfg",
        &format!("{HARD_SPHERE}ladder = 4,5\nreplicates = 2\nseed = 1\nburn_per_area = 50\nquad = 25\n"),
    );
    let a = t.path().join("a");
    let b = t.path().join("b");
    for (out, threads) in [(&a, "2"), (&b, "1")] {
        let o = nhgibbs(&["--threads", threads, "study", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
    let study = fs::read_to_string(a.join("study.csv")).unwrap();
    assert!(study.starts_with("L,replicate,alpha_hat,theta_hat_1,abs_err_alpha,abs_err_theta"));
    assert_eq!(study.lines().count(), 5);
    assert!(a.join("trend.csv").exists());

    let one = write(
        t.path(),
        "one.cfg",
        &format!("{HARD_SPHERE}ladder = 4\nreplicates = 2\nseed = 1\nburn_per_area = 50\nquad = 25\n"),
    );
    let c = t.path().join("c");
    assert_eq!(code(&nhgibbs(&["study", "--config", &one, "--out", c.to_str().unwrap()])), 0);
    assert!(c.join("summary.csv").exists());
    assert!(!c.join("trend.csv").exists());
}

#[test]
fn invalid_arguments() {
    assert_eq!(code(&nhgibbs(&["simulate", "--window", "5"])), 2);
    assert_eq!(code(&nhgibbs(&["frobnicate"])), 2);
    let t = tempfile::tempdir().unwrap();
    let spec = write(t.path(), "bad.spec", "model = hard_sphere\nsteps = 0.5\nalpha = 2\ntheta = 0.5\ncolour = blue\n");
    let o = simulate(&spec, &t.path().join("o"), &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let o = simulate(&t.path().join("missing.spec").to_str().unwrap().to_string(), &t.path().join("o"), &[]);
    assert_eq!(code(&o), 2);
    let help = nhgibbs(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("burn_per_area"));
}
