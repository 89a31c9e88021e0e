use std::process::{Command, Output};

fn twr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twr-noma")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const QUICK: &[&str] = &["--iterations", "2000", "--seed", "5"];

#[test]
fn default_config_feeds_back_in() {
    let o = twr(&["--print-default-config"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("schema_version = 1\n"));
    assert!(text.contains("noma.a1 = 0.8\n"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table1.conf");
    std::fs::write(&path, &text).unwrap();
    let mut args = vec!["sweep", "--config", path.to_str().unwrap(), "--snr", "10:20:10", "--signals", "x1"];
    args.extend(QUICK);
    let o = twr(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn eighteen_row_sweep() {
    let mut args = vec!["sweep", "--metric", "outage", "--signals", "x1,x2", "--mode", "ipsic", "--snr", "0:40:5"];
    args.extend(QUICK);
    let o = twr(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 19);
    assert_eq!(lines[0], "snr_db,signal,metric,mode,analytic,asymptotic,mc_mean,mc_ci_low,mc_ci_high,feasible");
    assert!(lines[1].starts_with("0,x1,outage,ipsic,"));
    assert!(lines[2].starts_with("0,x2,outage,ipsic,"));
}

#[test]
fn output_bytes_do_not_depend_on_workers() {
    let run = |workers: &str| {
        let mut args = vec!["sweep", "--preset", "fig2", "--snr", "0:40:10", "--workers", workers, "--iterations", "70000"];
        args.extend(["--seed", "11"]);
        let o = twr(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        o.stdout
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("8"));
}

#[test]
fn config_errors_exit_one() {
    let o = twr(&["sweep", "--set", "noma.b2=0.7"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("b1 + b2 = 1"), "{}", stderr(&o));

    let o = twr(&["sweep", "--set", "noma.z9=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("noma.z9"));

    let o = twr(&["sweep", "--signals", ",", "--iterations", "2000"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("empty signal set"));

    assert_eq!(twr(&["sweep", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(twr(&["sweep", "--preset", "fig99"]).status.code(), Some(1));
    assert_eq!(twr(&["sweep", "--config", "/nonexistent/x.conf"]).status.code(), Some(1));
}

#[test]
fn unwritable_output_names_the_path() {
    let mut args = vec!["sweep", "--signals", "x1", "--snr", "10:10:1", "--out", "/nonexistent-dir/out.csv"];
    args.extend(QUICK);
    let o = twr(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent-dir/out.csv"), "{}", stderr(&o));
}

#[test]
fn plot_script_written_beside_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig6.csv");
    let mut args = vec!["sweep", "--preset", "fig6", "--snr", "10:30:10", "--out", csv.to_str().unwrap(), "--emit-plot"];
    args.extend(QUICK);
    let o = twr(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = std::fs::read_to_string(&csv).unwrap();
    // 3 points x 2 signals x 2 modes
    assert_eq!(table.lines().count(), 13);
    let script = std::fs::read_to_string(dir.path().join("fig6.py")).unwrap();
    assert!(script.contains("fig6.csv"));
}

#[test]
fn validate_exit_codes() {
    let o = twr(&["validate", "--criterion", "7", "--criterion", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS") || l.starts_with("profile")));

    let o = twr(&["validate", "--criterion", "7", "--profile", "strict"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rel <= 5e-11"));

    // NOMA does not beat the orthogonal baseline at 10 dB with these parameters
    let o = twr(&["validate", "--criterion", "8", "--iterations", "20000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL [ 8]"));

    let o = twr(&["validate", "--set", "noma.b2=0.7"]);
    assert_eq!(o.status.code(), Some(1));
}
