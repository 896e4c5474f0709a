use std::path::Path;
use std::process::{Command, Output};

use clap::ValueEnum;
use fisherloc::output::Table;
use fisherloc::sweep::{columns, Quantity};

fn fisherloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fisherloc")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Parses a CSV produced by `sweep` into a header and numeric rows.
fn parse_table(bytes: &[u8]) -> Table {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|x| x.parse::<f64>().unwrap()).collect()).collect();
    Table { header, rows }
}

fn sweep(args: &[&str]) -> Table {
    let mut all = vec!["sweep"];
    all.extend_from_slice(args);
    let o = fisherloc(&all);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    parse_table(&o.stdout)
}

#[test]
fn help_succeeds() {
    assert_eq!(code(&fisherloc(&["--help"])), 0);
    let o = fisherloc(&["sweep", "--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("blink_ge_coflu"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["--bogus"][..],
        &["sweep", "--quantity", "nope"],
        &["sweep", "--quantity", "bounds-xy", "--grid", "1:0:10"],
        &["sweep", "--quantity", "bounds-xy", "--grid", "0:1:1"],
        &["simulate", "--trials", "5"],
        &["simulate", "--scenario", "blinking", "--trials", "1"],
        &["fim", "--dim", "3"],
        &["fim", "--delta", "1"],
        &["fim", "--positions", "0,1;2"],
    ] {
        let o = fisherloc(args);
        assert_eq!(code(&o), 1, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn failed_write_exits_two_and_leaves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("taken");
    std::fs::create_dir(&target).unwrap();
    let t = target.to_str().unwrap();
    let o = fisherloc(&["sweep", "--quantity", "bounds-xy", "--grid", "0.5:1:3", "--out", t]);
    assert_eq!(code(&o), 2);
    let left: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(left, ["taken"]);
    assert_eq!(std::fs::read_dir(&target).unwrap().count(), 0);

    let missing = dir.path().join("missing").join("x.csv");
    let o = fisherloc(&["fim", "--out", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!missing.exists());
}

#[test]
fn default_verify_run_has_no_failures() {
    let o = fisherloc(&["verify"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(!text.contains("verdict=FAIL"));
    for claim in
        ["Additivity", "Cohen", "Invariance", "Theorem2A", "Theorem2B", "Theorem1ProofStep", "Theorem4A", "Theorem4B"]
    {
        assert!(text.contains(&format!("claim={claim}")), "{claim}");
    }
}

#[test]
fn anisotropic_invariance_fails_with_exit_three() {
    let o = fisherloc(&["verify", "--suite", "anisotropic"]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("verdict=FAIL"));
}

#[test]
fn zero_separation_is_indeterminate_not_fail() {
    let o = fisherloc(&["verify", "--suite", "theorem2,theorem4", "--grid", "0:1:2", "--delta", "0"]);
    assert_eq!(code(&o), 0);
    let zero: Vec<String> =
        stdout(&o).lines().filter(|l| l.contains("min_sep=0 ") || l.contains("sep=0 ")).map(String::from).collect();
    assert_eq!(zero.len(), 4, "{zero:?}");
    assert!(zero.iter().all(|l| l.contains("verdict=INDETERMINATE")));
}

#[test]
fn certificates_go_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("certs.txt");
    let o = fisherloc(&["verify", "--suite", "cohen", "--out", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().contains("verdict=INDETERMINATE"));
}

#[test]
fn sweep_columns_follow_help() {
    for q in
        ["bounds-xy", "bounds-cs", "bounds-eig", "efficiency", "qbounds-xy", "qbounds-cs", "qbounds-eig", "qefficiency"]
    {
        let t = sweep(&["--quantity", q, "--grid", "0.1:3:7"]);
        let want = columns(Quantity::from_str(q, false).unwrap());
        assert_eq!(t.header, want);
        assert_eq!(t.rows.len(), 7);
    }
}

#[test]
fn blinking_cs_bounds_equal_l0_at_equal_brightness() {
    let t = sweep(&["--quantity", "bounds-cs", "--delta", "0"]);
    for name in ["blink_Lcc_over_L0", "blink_Lss_over_L0"] {
        assert!(t.column(name).unwrap().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
    let t = sweep(&["--quantity", "bounds-cs", "--delta", "0.5", "--grid", "0.5:2:4"]);
    assert!(t.column("blink_Lcc_over_L0").unwrap().iter().all(|v| (v - 1.0 / 0.75).abs() < 1e-12));
}

#[test]
fn quantum_bounds_coincide_at_zero_separation() {
    let t = sweep(&["--quantity", "qbounds-xy", "--grid", "0:1:3"]);
    assert_eq!(t.column("s_over_sigma").unwrap()[0], 0.0);
    for name in ["coflu_L11_over_L0", "coflu_L22_over_L0", "blink_L11_over_L0"] {
        assert!((t.column(name).unwrap()[0] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn blinking_efficiency_is_h0_and_rows_are_ordered() {
    let t = sweep(&["--quantity", "efficiency"]);
    for name in ["blink_Htot_over_H0", "blink_Hind_over_H0", "blink_Heig_over_H0"] {
        assert!(t.column(name).unwrap().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
    assert!(t.column("blink_ge_coflu").unwrap().iter().all(|&v| v == 1.0));
    assert!(t.column("h_ordered").unwrap().iter().all(|&v| v == 1.0));
    let t = sweep(&["--quantity", "qefficiency", "--delta", "0.5"]);
    assert!(t.column("h_ordered").unwrap().iter().all(|&v| v == 1.0));
}

#[test]
fn blinking_bounds_never_exceed_cofluorescent_ones() {
    for q in ["bounds-xy", "bounds-cs", "bounds-eig", "qbounds-xy", "qbounds-eig"] {
        let t = sweep(&["--quantity", q]);
        assert!(t.column("blink_le_coflu").unwrap().iter().all(|&v| v == 1.0), "{q}");
    }
}

#[test]
fn sweep_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.csv");
    let args = ["sweep", "--quantity", "bounds-eig", "--grid", "0.2:4:9", "--delta", "0.25"];
    let o = fisherloc(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", p.to_str().unwrap()]);
    assert_eq!(code(&fisherloc(&with_out)), 0);
    assert_eq!(std::fs::read(&p).unwrap(), o.stdout);
}

fn simulate_to(dir: &Path, name: &str, extra: &[&str]) -> (Vec<u8>, Vec<u8>, String) {
    let p = dir.join(format!("{name}.csv"));
    let mut args = vec!["simulate"];
    args.extend_from_slice(extra);
    args.extend(["--out", p.to_str().unwrap()]);
    let o = fisherloc(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read(dir.join(format!("{name}.summary.csv"))).unwrap();
    (std::fs::read(&p).unwrap(), summary, stdout(&o))
}

#[test]
fn simulate_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let flags = ["--scenario", "cofluorescent", "--sep", "2", "--trials", "12", "--seed", "4"];
    let a = simulate_to(dir.path(), "a", &flags);
    let b = simulate_to(dir.path(), "b", &flags);
    assert_eq!(a, b);
    let mut other = flags.to_vec();
    other[7] = "5";
    let c = simulate_to(dir.path(), "c", &other);
    assert_ne!(a.0, c.0);
    let text = String::from_utf8(a.0).unwrap();
    assert_eq!(text.lines().next().unwrap(), "trial,x1_hat,x2_hat,log_likelihood,converged,flag");
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn two_trials_are_flagged_low_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let (_, summary, out) = simulate_to(dir.path(), "t", &["--scenario", "blinking", "--trials", "2"]);
    assert!(out.lines().any(|l| l == "low_statistics=1"), "{out}");
    let summary = String::from_utf8(summary).unwrap();
    assert!(summary.starts_with("key,value\n"));
    assert!(summary.contains("low_statistics,1"));
    for key in ["cov_emp_x1_x1", "crb_x1_x1", "h_tot_emp", "h_ind_bound", "h_eig_emp_se"] {
        assert!(summary.contains(&format!("\n{key},")), "{key}");
    }
}

#[test]
fn single_configuration_reports() {
    let o = fisherloc(&["fim", "--sep", "12", "--weights", "0.5,0.5"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("blinking.F=[[5000, 0], [0, 5000]]"));

    let o = fisherloc(&["qfim", "--sep", "2"]);
    assert!(stdout(&o).contains("cofluorescent.beta=0.18393972058572117"));

    let o = fisherloc(&["bounds", "--sep", "0"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("cofluorescent.L=inf,inf"));
    assert!(text.contains("cofluorescent.rank=1"));

    let o = fisherloc(&["efficiency", "--dim", "2", "--positions", "0,0;1,0.5", "--scenario", "cofluorescent"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("cofluorescent.h_tot="));
}
