use std::path::Path;
use std::process::{Command, Output};

use sixvertex::config::{IdentitiesSection, RunConfig, SourceConfig, ThermoConfig};
use sixvertex::pool::build_pool;
use sixvertex::surface::{build_surface_parallel, read_surface, surface_from_str, surface_to_string, write_surface};
use sixvertex::sweep::sweep_verify;
use sixvertex::AppError;
use sixvertex::commands::identity_grid;
use sixvertex_core::flow::SurfaceSpec;
use sixvertex_core::kernels::Sign;
use sixvertex_core::thermo::ThermoOptions;

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sixvertex"))
        .current_dir(dir)
        .env_remove("SIXVERTEX_WORKERS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn small_identities() -> IdentitiesSection {
    IdentitiesSection {
        q: vec![0.4],
        h: vec![0.0, 0.05],
        u: vec![0.3],
        w: vec![0.45],
        thermo: ThermoConfig::with_nodes(128),
        ..IdentitiesSection::default()
    }
}

#[test]
fn free_energy_writes_a_record_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(dir.path(), &["free-energy", "--q", "0.4", "--H", "0.05", "--u", "0.3", "--m-nodes", "128", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let line = text(&out.stdout);
    assert!(line.starts_with("free-energy: q = 0.4"), "{line}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/free_energy.json")).unwrap()).unwrap();
    assert!((json["value"].as_f64().unwrap() - 0.18662232).abs() < 1e-7);
    assert!(dir.path().join("o/free_energy.csv").exists());
}

#[test]
fn domain_errors_exit_with_input_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(dir.path(), &["free-energy", "--q", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).starts_with("error:"));
}

#[test]
fn usage_errors_exit_with_input_status() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin(dir.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(bin(dir.path(), &["free-energy", "--q", "abc"]).status.code(), Some(2));
}

#[test]
fn missing_config_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(dir.path(), &["--config", "absent.json", "check-kernels"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("absent.json"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"schema_version": 1, "free_energy": {"qq": 0.4}}"#).unwrap();
    let out = bin(dir.path(), &["--config", "c.json", "free-energy"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("qq"));
}

#[test]
fn schema_version_is_checked() {
    let p = Path::new("c.json");
    assert!(RunConfig::from_json(r#"{"schema_version": 1}"#, p).is_ok());
    match RunConfig::from_json(r#"{"schema_version": 2}"#, p) {
        Err(e @ AppError::Config { .. }) => assert_eq!(e.exit_code(), 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn config_values_reach_the_command() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"schema_version": 1, "check_kernels": {"eta": 1.0, "u": 0.35, "h": 0.02}}"#,
    )
    .unwrap();
    let out = bin(dir.path(), &["--config", "c.json", "--out", "o", "check-kernels"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&text(&out.stdout)).unwrap();
    assert_eq!(json["u"], 0.35);
}

#[test]
fn identity_sweep_prints_per_identity_maxima() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({ "schema_version": 1, "verify_identities": small_identities() });
    std::fs::write(dir.path().join("c.json"), cfg.to_string()).unwrap();
    let out = bin(dir.path(), &["--config", "c.json", "--out", "o", "--workers", "2", "verify-identities"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let line = text(&out.stdout);
    assert!(line.contains("2/2 points ok") && line.contains("r1 =") && line.contains("r3 ="), "{line}");
    let rows = csv::Reader::from_path(dir.path().join("o/identities.csv")).unwrap().records().count();
    assert_eq!(rows, 2);
}

#[test]
fn empty_grid_gives_an_empty_report() {
    let sec = IdentitiesSection { q: vec![], ..small_identities() };
    let grid = identity_grid(&sec).unwrap();
    assert!(grid.is_empty());
    let report = sweep_verify(&grid, &build_pool(Some(1)).unwrap());
    assert!(report.results.is_empty());
    assert_eq!(report.summary.points, 0);
    assert_eq!(report.summary.succeeded, 0);
}

#[test]
fn bad_points_are_flagged_without_stopping_the_sweep() {
    let sec = IdentitiesSection { q: vec![0.4, 1.5], h: vec![0.0], ..small_identities() };
    let report = sweep_verify(&identity_grid(&sec).unwrap(), &build_pool(Some(2)).unwrap());
    assert_eq!(report.results.len(), 2);
    assert!(report.results[0].is_ok());
    let f = report.results[1].as_ref().unwrap_err();
    assert!(f.input_error);
    assert_eq!((f.index, f.q), (1, 1.5));
    assert_eq!(report.summary.succeeded, 1);
    assert_eq!(report.summary.failures.len(), 1);
}

#[test]
fn sweep_results_do_not_depend_on_worker_count() {
    let grid = identity_grid(&small_identities()).unwrap();
    let a = sweep_verify(&grid, &build_pool(Some(1)).unwrap());
    let b = sweep_verify(&grid, &build_pool(Some(3)).unwrap());
    assert_eq!(a.summary.max_residual, b.summary.max_residual);
    assert_eq!(a.reports().count(), b.reports().count());
}

#[test]
fn finite_difference_source_is_selectable() {
    let sec = IdentitiesSection { h: vec![0.05], source: SourceConfig::FiniteDifference, ..small_identities() };
    let report = sweep_verify(&identity_grid(&sec).unwrap(), &build_pool(None).unwrap());
    assert_eq!(report.summary.source, "finite-difference");
    assert!(report.summary.overall_max() < 1e-3);
}

#[test]
fn worker_count_comes_from_flag_or_environment() {
    use sixvertex::pool::{worker_count, WORKERS_ENV};
    assert_eq!(worker_count(Some(3)).unwrap(), Some(3));
    assert!(worker_count(Some(0)).is_err());
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sixvertex"))
        .current_dir(dir.path())
        .env(WORKERS_ENV, "many")
        .args(["--out", "o", "verify-identities", "--m-nodes", "64"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains(WORKERS_ENV));
}

fn tiny_spec() -> SurfaceSpec {
    SurfaceSpec {
        eta: 1.0,
        s_range: (0.38, 0.42),
        t_range: (0.28, 0.32),
        u_range: (0.3, 0.4),
        ns: 3,
        nt: 3,
        nu: 2,
        branch: Sign::Plus,
        thermo: ThermoOptions { m_nodes: 64, ..ThermoOptions::default() },
    }
}

#[test]
fn surface_text_round_trips_exactly() {
    let surf = build_surface_parallel(&tiny_spec(), &build_pool(Some(2)).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    write_surface(&surf, &path).unwrap();
    let back = read_surface(&path).unwrap();
    assert_eq!(back.spec(), surf.spec());
    assert_eq!(back.values(), surf.values());
    assert_eq!(surface_to_string(&back), surface_to_string(&surf));
}

#[test]
fn malformed_surface_files_are_rejected() {
    let surf = build_surface_parallel(&tiny_spec(), &build_pool(Some(1)).unwrap()).unwrap();
    let good = surface_to_string(&surf);
    let p = Path::new("s.txt");
    let cases = [
        good.replacen("version 1", "version 9", 1),
        good.replacen("branch +", "branch x", 1),
        good.lines().take(good.lines().count() - 1).collect::<Vec<_>>().join("\n"),
        good.replacen("values", "values extra", 1),
        String::new(),
    ];
    for c in cases {
        match surface_from_str(&c, p) {
            Err(e) => assert_eq!(e.exit_code(), 2, "{e}"),
            Ok(_) => panic!("accepted malformed surface"),
        }
    }
}

#[test]
fn missing_surface_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(dir.path(), &["evolve", "--surface", "nope.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("nope.txt"));
}

#[test]
fn csv_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["xfer-eigen", "--n-sites", "6", "--v-amplitude", "0.05"];
    let mut a = args.to_vec();
    a.extend(["--out", "a"]);
    let mut b = args.to_vec();
    b.extend(["--out", "b"]);
    assert_eq!(bin(dir.path(), &a).status.code(), Some(0));
    assert_eq!(bin(dir.path(), &b).status.code(), Some(0));
    let ra = std::fs::read(dir.path().join("a/xfer.csv")).unwrap();
    let rb = std::fs::read(dir.path().join("b/xfer.csv")).unwrap();
    assert!(!ra.is_empty());
    assert_eq!(ra, rb);
}

#[test]
fn bethe_solve_agrees_with_transfer_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(dir.path(), &["--out", "o", "bethe-solve", "--n-sites", "6", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/bethe.json")).unwrap()).unwrap();
    if let Some(r) = json["relative_error"].as_f64() {
        assert!(r < 1e-9);
    }
    let roots = csv::Reader::from_path(dir.path().join("o/bethe_roots.csv")).unwrap().records().count();
    assert_eq!(roots, 2);
}
