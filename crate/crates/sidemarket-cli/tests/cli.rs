//! End-to-end tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sidemarket"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn subscription_ne_emits_expected_row() {
    let out = bin()
        .args(["subscription-ne", "--config"])
        .arg(config("subscription_base.cfg"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "swept_var,swept_value,p_s,p_c_or_c,q,D,p_a,u_isp,u_cp,p_t,regime"
    );
    assert_eq!(lines[1].split(',').count(), 11);
    assert!(lines[1].contains("7.35983263598"));
    assert!(lines[1].ends_with("interior"));
}

#[test]
fn sweep_is_byte_identical_across_runs_and_workers() {
    let run = |workers: &str| {
        let out = bin()
            .args(["sweep", "--workers", workers, "--config"])
            .arg(config("subscription_pt_sweep.cfg"))
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        out.stdout
    };
    let first = run("1");
    let second = run("1");
    let parallel = run("6");
    assert_eq!(first, second);
    assert_eq!(first, parallel);
    let text = String::from_utf8_lossy(&first);
    assert_eq!(text.lines().count(), 12);
    // Along the side-payment sweep the ISP price falls and the CP price
    // rises row over row.
    let column = |line: &str, i: usize| -> f64 {
        line.split(',').nth(i).unwrap().parse().unwrap()
    };
    let rows: Vec<&str> = text.lines().skip(1).collect();
    for pair in rows.windows(2) {
        assert!(column(pair[1], 2) < column(pair[0], 2));
        assert!(column(pair[1], 3) > column(pair[0], 3));
    }
}

#[test]
fn sweep_writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("rows.csv");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(config("ad_pt_sweep.cfg"))
        .arg("--out")
        .arg(&dest)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&dest).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.ends_with('\n'));
    // Investment column is nonincreasing along the side payment.
    let investments: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    for pair in investments.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-9);
    }
}

#[test]
fn bargain_reports_negotiated_transfer() {
    let out = bin()
        .args(["bargain", "--config"])
        .arg(config("subscription_prebargain.cfg"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("8.83919597990"));

    let ad = bin()
        .args(["bargain", "--config"])
        .arg(config("ad_prebargain.cfg"))
        .output()
        .unwrap();
    assert!(ad.status.success(), "{}", stderr(&ad));
    // Negotiated transfer is negative at high investment efficiency.
    let row = stdout(&ad);
    let p_t: f64 = row
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(9)
        .unwrap()
        .parse()
        .unwrap();
    assert!(p_t < 0.0, "p_t = {p_t}");
}

#[test]
fn invalid_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();

    let missing = dir.path().join("missing_alpha.cfg");
    std::fs::write(&missing, "model=subscription\nD0=200\nbeta=0.5\nrho=0.5\np_r=1\n").unwrap();
    let out = bin()
        .args(["subscription-ne", "--config"])
        .arg(&missing)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("alpha"));

    let unknown = dir.path().join("unknown.cfg");
    std::fs::write(&unknown, "model=subscription\nwat=1\n").unwrap();
    let out = bin()
        .args(["subscription-ne", "--config"])
        .arg(&unknown)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"));

    // Wrong model for the subcommand.
    let out = bin()
        .args(["ad-ne", "--config"])
        .arg(config("subscription_base.cfg"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Bargain subcommand without bargain keys.
    let out = bin()
        .args(["bargain", "--config"])
        .arg(config("subscription_base.cfg"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Sweep subcommand without sweep keys.
    let out = bin()
        .args(["sweep", "--config"])
        .arg(config("subscription_base.cfg"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_suites_report_and_exit() {
    for suite in ["lemma4", "lemma6", "kernels"] {
        let out = bin().args(["verify", suite]).output().unwrap();
        assert!(
            out.status.success(),
            "suite {suite}: {}\n{}",
            stdout(&out),
            stderr(&out)
        );
        let text = stdout(&out);
        assert!(text.contains("[PASS]"));
        assert!(!text.contains("[FAIL]"));
    }

    let out = bin().args(["verify", "no-such-suite"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
