use std::path::Path;
use std::process::Command;

use eh_opt::cli::format::num;
use eh_opt::cli::run;
use eh_opt::{algorithm1, theta_log_theta_model, SystemParams};

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn eh(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("eh-opt").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

/// Header line and data rows as string fields, skipping `#` metadata.
fn table(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<String> {
    let i = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].clone()).collect()
}

fn floats(v: &[String]) -> Vec<f64> {
    v.iter().map(|s| s.parse().unwrap()).collect()
}

fn metadata<'a>(csv: &'a str, key: &str) -> Option<&'a str> {
    csv.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn solve_single_header_and_library_round_trip() {
    let o = eh(&[
        "solve-single",
        "--eta",
        "0.5",
        "--g",
        "0",
        "--e-avg",
        "0.5",
        "--e-lim",
        "3",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let (header, rows) = table(&o.stdout);
    assert_eq!(
        header.join(","),
        "eta,g,e_avg,e_lim,model,case,theta,e_i,e_e,alpha,rate,bits_per_use"
    );
    assert_eq!(rows.len(), 1);
    let p = SystemParams::new(0.5, 0.0, 0.5, 3.0).unwrap();
    let lib = algorithm1(&p, &theta_log_theta_model()).unwrap();
    let row = &rows[0];
    assert_eq!(row[5], lib.best.case.letter());
    assert_eq!(row[6], num(lib.full.theta));
    assert_eq!(row[7], num(lib.full.e_i));
    assert_eq!(row[8], num(lib.full.e_e));
    assert_eq!(row[9], num(lib.full.alpha));
    assert_eq!(row[11], num(lib.full.bits_per_use));
}

#[test]
fn solve_single_zero_budget_gives_zero_bits() {
    let o = eh(&["solve-single", "--eta", "0.5", "--g", "0.25", "--e-avg", "0.5"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let (header, rows) = table(&o.stdout);
    assert_eq!(floats(&column(&header, &rows, "bits_per_use")), vec![0.0]);
}

#[test]
fn solve_single_golden() {
    assert_eq!(eh(&["solve-single"]).stdout, golden("solve_single_default.csv"));
}

#[test]
fn invalid_parameters_exit_nonzero_with_diagnostic() {
    for args in [
        &["solve-single", "--eta", "2"][..],
        &["solve-single", "--e-avg", "4", "--e-lim", "3"],
        &["solve-single", "--g", "0.3", "--e-avg", "0.5"],
        &["solve-multi", "--blocks", "3", "--g-list", "0.1,0.1"],
        &["solve-multi", "--blocks", "0"],
        &["region-map", "--e-lim", "0"],
    ] {
        let o = eh(args);
        assert_eq!(o.code, 1, "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
        assert!(o.stderr.starts_with("error: "), "{args:?}: {}", o.stderr);
    }
}

#[test]
fn malformed_flags_are_usage_errors() {
    for args in [
        &["solve-single", "--bogus"][..],
        &["solve-single", "--eta", "abc"],
        &["solve-single", "--ed-model", "cubic"],
        &["sweep-single", "--sweep", "e_avg:1:0:0.1"],
        &["region-map", "--grid", "0x4"],
        &["solve-multi", "--g-list", "0.1,-1"],
        &["frobnicate"],
        &[],
    ] {
        let o = eh(args);
        assert_eq!(o.code, 2, "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn help_and_version_go_to_stdout() {
    for flag in ["--help", "--version"] {
        let o = eh(&[flag]);
        assert_eq!(o.code, 0);
        assert!(!o.stdout.is_empty());
        assert!(o.stderr.is_empty());
    }
}

#[test]
fn sweep_single_optimized_dominates_baseline() {
    let o = eh(&[
        "sweep-single",
        "--eta",
        "0.5",
        "--e-lim",
        "3",
        "--sweep",
        "e_avg:0.1:2.9:0.1",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let (header, rows) = table(&o.stdout);
    assert_eq!(rows.len(), 29);
    let opt = floats(&column(&header, &rows, "bits_per_use"));
    let base = floats(&column(&header, &rows, "baseline_bits_per_use"));
    for (i, (o, b)) in opt.iter().zip(&base).enumerate() {
        assert!(o + 1e-12 >= *b, "row {i}: {o} < {b}");
    }
    for w in opt.windows(2) {
        assert!(w[1] + 1e-12 >= w[0], "{w:?}");
    }
    // The optimization gap closes as the average constraint approaches the peak.
    let ratio = floats(&column(&header, &rows, "ratio"));
    assert!(ratio[28] < ratio[4]);
    assert!(ratio[4] > 1.0);
}

#[test]
fn sweep_single_marks_invalid_points() {
    let o = eh(&["sweep-single", "--g", "0.2", "--sweep", "e_avg:0.2:0.6:0.2"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let (header, rows) = table(&o.stdout);
    let case = column(&header, &rows, "case");
    assert_eq!(case[0], "invalid");
    assert_ne!(case[2], "invalid");
}

#[test]
fn region_map_golden_and_invalid_cells() {
    let o = eh(&["region-map", "--grid", "8x8"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.stdout, golden("region_map_8x8.csv"));
    let o = eh(&["region-map", "--g", "0.5", "--grid", "10x10"]);
    let (header, rows) = table(&o.stdout);
    assert_eq!(header.join(","), "e_lim,e_avg,case,margin");
    assert_eq!(rows.len(), 100);
    for r in &rows {
        let (e_lim, e_avg): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        let valid = e_avg < e_lim && 0.5 * e_avg >= 0.5;
        assert_eq!(r[2] != "invalid", valid, "{r:?}");
    }
}

#[test]
fn solve_multi_reports_every_block() {
    let o = eh(&["solve-multi", "--g-list", "0.1,0.2,0.05", "--e-avg", "0.8"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let (header, rows) = table(&o.stdout);
    assert_eq!(header.join(","), "block,g,t,case,theta,e_i,e_e,alpha,rate,bits_per_use");
    assert_eq!(column(&header, &rows, "block"), vec!["1", "2", "3"]);
    let total: f64 = floats(&column(&header, &rows, "bits_per_use")).iter().sum();
    let reported: f64 = metadata(&o.stdout, "total").unwrap().parse().unwrap();
    assert!((total - reported).abs() < 1e-10);
}

#[test]
fn sweep_multi_threshold_behaviour() {
    let args = [
        "sweep-multi",
        "--eta",
        "1",
        "--e-lim",
        "4",
        "--g",
        "0.1",
        "--blocks",
        "4",
        "--sweep",
        "e_avg:0.2:3.8:0.2",
    ];
    let o = eh(&args);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let (header, rows) = table(&o.stdout);
    let u: f64 = metadata(&o.stdout, "u").unwrap().parse().unwrap();
    let e_avg = floats(&column(&header, &rows, "e_avg"));
    let bound = floats(&column(&header, &rows, "bound"));
    let total = floats(&column(&header, &rows, "total"));
    let achieved = column(&header, &rows, "achieved");
    let u_col = column(&header, &rows, "u");
    for i in 0..rows.len() {
        assert!(bound[i] + 1e-12 >= total[i], "row {i}");
        assert_eq!(achieved[i] == "true", e_avg[i] <= u, "e_avg {}", e_avg[i]);
        assert_eq!(u_col[i], u_col[0]);
    }
    let near_u = eh(&[
        "sweep-multi",
        "--eta",
        "1",
        "--e-lim",
        "4",
        "--g",
        "0.1",
        "--sweep",
        "e_avg:1.9:2.2:0.1",
    ]);
    assert_eq!(near_u.stdout, golden("sweep_multi_threshold.csv"));
}

#[test]
fn verify_default_run_passes_deterministically() {
    let first = eh(&["verify", "--seed", "42"]);
    assert_eq!(first.code, 0, "{}\n{}", first.stdout, first.stderr);
    let (header, rows) = table(&first.stdout);
    assert_eq!(header.join(","), "check,instances,passed,max_error,tolerance,status");
    assert_eq!(
        column(&header, &rows, "check"),
        vec!["p2_grid", "p8_grid", "lp_vertices", "multi_n1"]
    );
    assert!(column(&header, &rows, "status").iter().all(|s| s == "pass"));
    let second = eh(&["verify", "--seed", "42"]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn verify_failure_lists_instance_parameters() {
    let o = eh(&["verify", "--instances", "2", "--grid", "40x40", "--tol-scale", "1e-12"]);
    assert_eq!(o.code, 1);
    assert!(o.stdout.contains(",fail"));
    let line = o.stderr.lines().find(|l| l.starts_with("FAIL p2_grid")).unwrap();
    for key in ["eta=", "g=", "e_avg=", "e_lim=", "model="] {
        assert!(line.contains(key), "{line}");
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("single.csv");
    let o = eh(&["solve-single", "--out", path.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.is_empty());
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        golden("solve_single_default.csv")
    );

    let missing = dir.path().join("no/such/dir/out.csv");
    let o = eh(&["solve-single", "--out", missing.to_str().unwrap()]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("cannot write"));
}

fn binary(args: &[&str], threads: &str) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_eh-opt"))
        .args(args)
        .env("EH_OPT_THREADS", threads)
        .output()
        .unwrap()
}

#[test]
fn output_is_independent_of_thread_count() {
    let args = ["region-map", "--grid", "12x12"];
    let one = binary(&args, "1");
    let many = binary(&args, "4");
    assert!(one.status.success());
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(String::from_utf8(one.stdout).unwrap(), eh(&args).stdout);
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = binary(&["solve-single"], "lots");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("EH_OPT_THREADS"));
}
