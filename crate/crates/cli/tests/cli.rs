use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dort(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dort"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn dort")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn schema() -> jsonschema::JSONSchema {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report-v1.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&schema).expect("valid schema")
}

fn check_report(path: &Path) -> Value {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let s = schema();
    if let Err(errors) = s.validate(&v) {
        let msgs: Vec<String> = errors.map(|e| format!("{e} at {}", e.instance_path)).collect();
        panic!("{} violates the schema:\n{}", path.display(), msgs.join("\n"));
    }
    assert_eq!(v["schema_version"], 1);
    v
}

#[test]
fn solve_mono_separates_mu_branches() {
    let dir = tempfile::tempdir().unwrap();
    let o = dort(&["solve", "--preset", "mono", "--ns", "200", "--nomega", "12", "--rhs-one"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("solution.csv"));
    assert_eq!(header, ["t", "mu", "nu", "I"]);
    assert_eq!(rows.len(), 200 * 12);
    let report = check_report(&dir.path().join("solve_report.json"));
    assert_eq!(report["solver"]["converged"], true);
    assert!(report["solver"]["true_residual"].as_f64().unwrap() <= 1e-11);

    // rays next to μ = 0 on either side differ by far more than the
    // variation along t within one branch
    let mid = 100;
    let at = |i: usize, k: usize| num(&rows[i * 12 + k][3]);
    let jump = (at(mid, 5) - at(mid, 6)).abs();
    let along = (at(mid, 5) - at(mid + 1, 5)).abs();
    assert!(jump > 10.0 * along, "jump {jump}, along {along}");
    assert!(num(&rows[mid * 12 + 5][1]) < 0.0 && num(&rows[mid * 12 + 6][1]) > 0.0);
}

#[test]
fn no_scattering_returns_rhs_in_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let o = dort(
        &["solve", "--preset", "mono", "--ns", "20", "--rhs-one", "--gamma-scale", "0"],
        dir.path(),
    );
    assert!(o.status.success());
    let report = check_report(&dir.path().join("solve_report.json"));
    assert_eq!(report["solver"]["iterations"], 1);
    let (_, rows) = read_csv(&dir.path().join("solution.csv"));
    assert!(rows.iter().all(|r| (num(&r[3]) - 1.0).abs() < 1e-14));
}

#[test]
fn repeated_runs_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["solve", "--preset", "coherent", "--ns", "15", "--nomega", "6", "--nnu", "7"];
    assert!(dort(&args, a.path()).status.success());
    assert!(dort(&args, b.path()).status.success());
    let read = |d: &Path| std::fs::read(d.join("solution.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn mono_table_rows_in_config_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = dort(
        &["table", "--preset", "mono", "--ns", "10,20,40", "--nomega", "12,24", "--threads", "3"],
        dir.path(),
    );
    assert!(o.status.success());
    let (header, rows) = read_csv(&dir.path().join("table.csv"));
    assert_eq!(
        header,
        [
            "N_s",
            "N_Omega",
            "N_nu",
            "N",
            "cluster_fraction_paper_interval",
            "cluster_fraction_symmetric",
            "min_modulus"
        ]
    );
    let keys: Vec<(String, String)> = rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    let want: Vec<(String, String)> = [(10, 12), (10, 24), (20, 12), (20, 24), (40, 12), (40, 24)]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    assert_eq!(keys, want);
    assert!((num(&rows[0][4]) - 0.683).abs() < 0.005);
    let report = check_report(&dir.path().join("table_report.json"));
    assert_eq!(report["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn line_tables_match_reference_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = dort(&["table", "--preset", "coherent", "--ns", "10", "--nnu", "10"], dir.path());
    assert!(o.status.success());
    let (_, rows) = read_csv(&dir.path().join("table.csv"));
    assert!((num(&rows[0][4]) - 0.983).abs() < 0.005);

    let dir = tempfile::tempdir().unwrap();
    let o = dort(&["table", "--preset", "crd", "--ns", "10,20", "--nnu", "10,20"], dir.path());
    assert!(o.status.success());
    let (_, rows) = read_csv(&dir.path().join("table.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| num(&r[4]) > 0.992));
}

#[test]
fn over_cap_cells_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let o = dort(
        &["table", "--preset", "mono", "--ns", "10,100", "--dense-cap", "500"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds the dense cap"));
    let (_, rows) = read_csv(&dir.path().join("table.csv"));
    assert_eq!(rows.len(), 1);
    let report = check_report(&dir.path().join("table_report.json"));
    assert_eq!(report["skipped"].as_array().unwrap().len(), 1);
}

#[test]
fn spectrum_writes_sorted_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let o = dort(&["spectrum", "--preset", "mono", "--ns", "10"], dir.path());
    assert!(o.status.success());
    let (header, rows) = read_csv(&dir.path().join("eigenvalues.csv"));
    assert_eq!(header, ["re", "im", "modulus"]);
    assert_eq!(rows.len(), 120);
    let m: Vec<f64> = rows.iter().map(|r| num(&r[2])).collect();
    assert!(m.windows(2).all(|w| w[0] <= w[1]));
    let report = check_report(&dir.path().join("spectrum_report.json"));
    assert_eq!(report["spectrum"]["min_modulus"].as_f64().unwrap(), m[0]);

    let o = dort(&["spectrum", "--preset", "mono", "--ns", "10", "--dense-cap", "50"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn coherent_ladder_counts_stay_flat() {
    let dir = tempfile::tempdir().unwrap();
    let o = dort(
        &[
            "convergence", "--preset", "coherent", "--ns", "10,20,30,50", "--nnu", "10,20,30,50",
            "--nomega", "10", "--rhs-one",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = check_report(&dir.path().join("convergence_report.json"));
    let runs = report["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 8);
    let gmres: Vec<u64> = runs
        .iter()
        .filter(|r| r["method"] == "gmres")
        .map(|r| r["iterations"].as_u64().unwrap())
        .collect();
    assert!(gmres.last().unwrap() - gmres[0] <= 3, "{gmres:?}");
    assert!(runs.iter().all(|r| r["converged"] == true));
    let (header, rows) = read_csv(&dir.path().join("convergence.csv"));
    assert_eq!(header, ["size", "N", "method", "iteration", "relative_residual", "converged"]);
    assert_eq!(rows[0][0], "10x10x10");
}

#[test]
fn identity_ladder_has_single_step_histories() {
    let dir = tempfile::tempdir().unwrap();
    let o = dort(
        &["convergence", "--preset", "mono", "--ns", "10,20,40", "--gamma-scale", "0", "--rhs-one"],
        dir.path(),
    );
    assert!(o.status.success());
    let report = check_report(&dir.path().join("convergence_report.json"));
    for r in report["runs"].as_array().unwrap() {
        assert_eq!(r["residual_history"].as_array().unwrap().len(), 1);
    }
}

#[test]
fn aniso2d_solve_writes_ray_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let o = dort(&["solve", "--preset", "aniso2d", "--nx", "6", "--ny", "5", "--nomega", "4"], dir.path());
    assert!(o.status.success());
    let (header, rows) = read_csv(&dir.path().join("rays.csv"));
    assert_eq!(header, ["ray", "line", "x", "y"]);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&num(&r[2])) && (0.0..=1.0).contains(&num(&r[3]))));
    let (header, rows) = read_csv(&dir.path().join("solution.csv"));
    assert_eq!(header, ["x", "t", "mu", "chi", "I"]);
    assert_eq!(rows.len(), 6 * 5 * 4);
    check_report(&dir.path().join("solve_report.json"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(dort(&["solve", "--preset", "nope"], dir.path()).status.code(), Some(1));
    assert_eq!(dort(&["solve", "--ns", "10,20"], dir.path()).status.code(), Some(1));
    assert_eq!(dort(&["solve", "--max-iter", "1"], dir.path()).status.code(), Some(2));
    // the report is still written for a stalled solve
    let v = check_report(&dir.path().join("solve_report.json"));
    assert_eq!(v["solver"]["converged"], false);
    assert_eq!(
        dort(&["convergence", "--ns", "10,20", "--max-iter", "2"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "preset = \"crd\"\nns = 12\nnomega = 4\nnnu = [3]\nsolver = \"bicgstab\"\n").unwrap();
    let o = dort(&["solve", "--config", cfg.to_str().unwrap(), "--ns", "8"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = check_report(&dir.path().join("solve_report.json"));
    assert_eq!(v["config"]["preset"], "crd");
    assert_eq!(v["config"]["ns"][0], 8);
    assert_eq!(v["solver"]["method"], "bicgstab");
}
