use std::path::Path;
use std::process::{Command, Output};

fn ris_fas(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris-fas"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = "\
axis = tx_power_dbm
values = 4, 6, 8
grid_n1 = 2
grid_n2 = 1
rqmc_samples = 512
rqmc_randomizations = 8
";

#[test]
fn run_writes_csv_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.cfg", SMALL);
    let out = ris_fas(&["run", &cfg, "--out", "a.csv", "--plot-script"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("axis,op,op_se,dor,dor_se,"));
    let gp = std::fs::read_to_string(dir.path().join("a.gp")).unwrap();
    assert!(gp.contains("'a.csv'"));
    // progress goes to stderr, not into the data
    assert!(String::from_utf8_lossy(&out.stderr).contains("3/3"));
}

#[test]
fn stdout_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.cfg", SMALL);
    let a = ris_fas(&["run", &cfg, "--seed", "9", "--mc-trials", "2000"], dir.path());
    let b = ris_fas(&["run", &cfg, "--seed", "9", "--mc-trials", "2000"], dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    let trials_col = text.lines().next().unwrap().split(',').position(|c| c == "mc_trials").unwrap();
    assert_eq!(row.split(',').nth(trials_col), Some("2000"));
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cfg", "axis = ports_n\nvalues = 1\nfoo = 2\n");
    let out = ris_fas(&["run", &bad], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("foo"), "{err}");

    let empty = write(dir.path(), "empty.cfg", "");
    let out = ris_fas(&["run", &empty], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("axis"));

    assert_eq!(ris_fas(&["preset", "fig9z"], dir.path()).status.code(), Some(1));
    assert_eq!(ris_fas(&["frobnicate"], dir.path()).status.code(), Some(1));
    let cfg = write(dir.path(), "a.cfg", SMALL);
    assert_eq!(ris_fas(&["run", &cfg, "--plot-script"], dir.path()).status.code(), Some(1));
    assert_eq!(ris_fas(&["run", &cfg, "--mc-trials", "5"], dir.path()).status.code(), Some(1));
}

#[test]
fn runtime_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.cfg", SMALL);
    let out = ris_fas(&["run", &cfg, "--out", "/no/such/dir/a.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/dir/a.csv"));
}

#[test]
fn help_documents_config_keys() {
    let out = ris_fas(&["run", "--help"], Path::new("."));
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("delay_threshold_s") && text.contains("dBm"));
}

#[test]
fn validate_corr_reports_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "g.cfg",
        "axis = tx_power_dbm\nvalues = 0\ngrid_n1 = 2\ngrid_n2 = 2\ngrid_w1 = 0.5\ngrid_w2 = 0.5\n",
    );
    let out = ris_fas(
        &["validate-corr", &cfg, "--samples", "200000", "--out", "r.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("max abs error"));
    let m = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(m.lines().count(), 4);
    // an impossible tolerance turns into a runtime failure
    let out = ris_fas(
        &["validate-corr", &cfg, "--samples", "20000", "--tolerance", "1e-9"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dump_gains_writes_every_trial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.cfg", SMALL);
    let out = ris_fas(
        &["dump-gains", &cfg, "--trials", "1500", "--out", "g.bin", "--point", "2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::metadata(dir.path().join("g.bin")).unwrap().len(), 1500 * 8);
    let out = ris_fas(
        &["dump-gains", &cfg, "--trials", "1500", "--out", "g.csv", "--format", "csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert_eq!(text.lines().count(), 1500);
    assert!(text.lines().all(|l| l.parse::<f64>().unwrap() >= 0.0));
    let out = ris_fas(
        &["dump-gains", &cfg, "--trials", "1500", "--out", "g.csv", "--point", "3"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}
