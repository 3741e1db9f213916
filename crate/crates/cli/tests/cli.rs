use std::path::Path;
use std::process::Command;

fn minvar() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minvar"))
}

fn synth(dir: &Path) {
    let spec = dir.join("spec.toml");
    std::fs::write(&spec, "assets = 3\ndays = 190\nintraday_points = 40\nseed = 5\n").unwrap();
    let status = minvar()
        .args(["synth", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(dir.join("data"))
        .status()
        .unwrap();
    assert!(status.success());
    // short windows so the test stays small
    let cfg = std::fs::read_to_string(dir.join("data/backtest.toml")).unwrap();
    let cfg = cfg.replace(
        "[data]",
        "ec_grid = [1.0, 1.5, \"inf\"]\n\n[windows]\nunit = \"days\"\nin_sample = 120\nout_of_sample = 35\n\n[data]",
    );
    std::fs::write(dir.join("data/backtest.toml"), cfg).unwrap();
}

#[test]
fn synth_backtest_report_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    let tmp = tmp.path();
    synth(tmp);
    let out = tmp.join("run");
    let status = minvar()
        .args(["backtest", "--threads", "2", "--config"])
        .arg(tmp.join("data/backtest.toml"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["pv.csv", "to.csv", "to_exact.csv", "ceq.csv", "betc.csv", "report.json", "manifest.json", "covariances.csv", "weights.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let pv = std::fs::read_to_string(out.join("pv.csv")).unwrap();
    assert_eq!(pv.lines().count(), 1 + 5 * 3);

    // the persisted covariances give the same downstream tables
    let again = tmp.join("again");
    let status = minvar()
        .args(["backtest", "--config"])
        .arg(tmp.join("data/backtest.toml"))
        .arg("--from-cov")
        .arg(out.join("covariances.csv"))
        .arg("--out")
        .arg(&again)
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["pv.csv", "to.csv", "ceq.csv", "weights.csv", "envelope.csv"] {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }

    let re = tmp.join("re");
    let status = minvar().args(["report", "--in"]).arg(&out).arg("--out").arg(&re).status().unwrap();
    assert!(status.success());
    for f in ["pv.csv", "betc.csv", "summary.json", "weights.csv", "manifest.json"] {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), std::fs::read(re.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[data]\nassets = [\"A\"]\ncovariances = \"c.csv\"\nbogus = 1\n").unwrap();
    let status = minvar().args(["backtest", "--out", "x", "--config"]).arg(&bad).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let missing = tmp.path().join("missing.toml");
    std::fs::write(&missing, "[data]\nassets = [\"A\"]\ncovariances = \"nowhere.csv\"\n").unwrap();
    let status = minvar()
        .args(["backtest", "--config"])
        .arg(&missing)
        .arg("--out")
        .arg(tmp.path().join("o"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}
