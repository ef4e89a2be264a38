use std::path::Path;
use std::process::{Command, Output};

fn structrade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_structrade")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const QUICK: &str = "[model]\nextension = 100\n";

#[test]
fn steady_writes_long_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ss");
    let o = structrade(&["steady", "--synthetic", "audit:5:3", "--out", out.to_str().unwrap(), "--family", "h-ces"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let omega = std::fs::read_to_string(out.join("omega.csv")).unwrap();
    assert!(omega.starts_with("country,partner,sector,year,value\n"));
    let cfg = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(cfg.contains("preference_family"));
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    assert_eq!(code(&structrade(&["steady", "--out", o])), 2, "missing input");
    assert_eq!(code(&structrade(&["steady", "--synthetic", "moon:1", "--out", o])), 2);
    assert_eq!(code(&structrade(&["steady", "--synthetic", "audit:1:3", "--family", "cobb", "--out", o])), 2);
    assert_eq!(code(&structrade(&["steady", "--synthetic", "audit:1:3", "--tol-price", "-1", "--out", o])), 2);

    let bad = dir.path().join("bad.txt");
    write(&bad, "name = x\nsurprise_year = 2001\n[override]\nimporters = *\n");
    let o2 = structrade(&["scenario", "run", bad.to_str().unwrap(), "--synthetic", "twin:3", "--out", o]);
    assert_eq!(code(&o2), 2);
    assert!(String::from_utf8_lossy(&o2.stderr).contains("line"));
}

#[test]
fn non_convergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.toml");
    write(&cfg, "[model]\nextension = 100\n[model.tol]\nmax_outer_iter = 2\n");
    let o = structrade(&[
        "transition",
        "--synthetic",
        "audit:5:3",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn transition_resumes_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, QUICK);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let base = ["transition", "--synthetic", "audit:5:3", "--config", cfg.to_str().unwrap()];
    let o = structrade(&[&base[..], &["--out", a.to_str().unwrap()]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ck = a.join("checkpoint.csv");
    let o = structrade(&[&base[..], &["--out", b.to_str().unwrap(), "--resume", ck.to_str().unwrap()]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let msg = String::from_utf8_lossy(&o.stderr);
    let iters: usize = msg.split("solved in ").nth(1).and_then(|r| r.split(' ').next()).and_then(|n| n.parse().ok()).expect("iteration count");
    assert!(iters <= 1, "{msg}");
}

#[test]
fn scenario_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, QUICK);
    let sc = dir.path().join("war.txt");
    write(
        &sc,
        "name = manufacturing tariff\nsurprise_year = 2001\nfamilies = nh-ces\n\n[override]\nimporters = home\nexporters = *\nsectors = manufacturing\nyears = 2001..\nchange_pp = 10\n",
    );
    let run = |out: &Path| {
        let o = structrade(&[
            "scenario",
            "run",
            sc.to_str().unwrap(),
            "--synthetic",
            "twin:3",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a);
    run(&b);
    for f in ["summary.csv", "scenario.txt", "nh-ces/welfare.csv", "nh-ces/va.csv", "nh-ces/consumption.csv"] {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        assert!(!x.is_empty() && x == y, "{f} differs");
    }
}

#[test]
fn sweep_writes_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tc.toml");
    write(&cfg, "[twocountry]\npoints = 11\ntau_max = 0.5\n");
    let out = dir.path().join("o");
    let o = structrade(&["twocountry", "sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("schedule.csv")).unwrap();
    assert_eq!(text.lines().count(), 12);
}
