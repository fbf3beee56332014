use lochrig::commands::{run_evolve, run_kernels, run_rate, RECORD_FILE};
use lochrig::config::RunConfig;
use lochrig::field::RegularizingField;
use lochrig::par::ExecPolicy;
use lochrig::record::{CsvTable, OutputSink, RunRecord};
use std::path::Path;

fn small() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.grid.nodes = 16;
    cfg.evolution.dt = 0.02;
    cfg.evolution.t_final = 0.04;
    cfg.evolution.save_every = 1;
    cfg.rate.trace_level = 6;
    cfg.spectral.omega_prime_max = 12.0;
    cfg.spectral.omega_step = 0.2;
    cfg
}

fn read_record(dir: &Path) -> RunRecord {
    RunRecord::from_json(&std::fs::read_to_string(dir.join(RECORD_FILE)).unwrap()).unwrap()
}

#[test]
fn shipped_config_is_the_default() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    assert_eq!(RunConfig::load(&path).unwrap(), RunConfig::default());
}

#[test]
fn evolve_outputs_parse_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small();
    let rec = run_evolve(&cfg, ExecPolicy::Sequential, &mut OutputSink::new(Some(dir.path())).unwrap()).unwrap();
    assert!(rec.all_passed());
    assert_eq!(rec.files.len(), 4);

    let back = read_record(dir.path());
    assert_eq!(back, rec);
    assert_eq!(back.hash(), rec.hash());

    let initial = RegularizingField::from_source(cfg.spatial_grid().unwrap(), &cfg.field()).unwrap();
    let t = CsvTable::parse(&std::fs::read_to_string(dir.path().join("snapshot_0000.csv")).unwrap()).unwrap();
    assert_eq!(t.columns, ["x", "y", "z", "f", "s1", "s2", "s3"]);
    assert_eq!(t.rows.len(), initial.grid.len());
    for (k, row) in t.rows.iter().enumerate() {
        assert_eq!(row[3], initial.f[k]);
        assert_eq!(&row[4..], &initial.s[k]);
    }
}

#[test]
fn constant_data_stays_constant() {
    let mut cfg = small();
    cfg.physics.lambda = 0.0;
    let dir = tempfile::tempdir().unwrap();
    run_evolve(&cfg, ExecPolicy::Sequential, &mut OutputSink::new(Some(dir.path())).unwrap()).unwrap();
    let t = CsvTable::parse(&std::fs::read_to_string(dir.path().join("snapshot_0002.csv")).unwrap()).unwrap();
    assert!(t.rows.iter().all(|r| r[3..] == [1.0, 0.0, 0.0, 0.0]));
}

#[test]
fn rate_and_kernel_tables_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small();
    let rec = run_rate(&cfg, ExecPolicy::default(), &mut OutputSink::new(Some(dir.path())).unwrap()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("trace_table.csv")).unwrap();
    let t = CsvTable::parse(&text).unwrap();
    assert_eq!(t.render(), text);
    assert_eq!(rec.outputs["b1"], 0.0);
    assert_eq!(read_record(dir.path()).hash(), rec.hash());

    let rec = run_kernels(&cfg, ExecPolicy::default(), &mut OutputSink::new(Some(dir.path())).unwrap()).unwrap();
    assert!(rec.files.contains(&"kernel_radial.csv".to_string()));
    let diag = CsvTable::parse(&std::fs::read_to_string(dir.path().join("kernel_diagonal.csv")).unwrap()).unwrap();
    // F at w = -m and w = m lies on the shell edge where kappa = 0
    assert_eq!(diag.rows[0][1..], [0.0, 0.0]);
}

#[test]
fn records_without_output_dir_list_no_files() {
    let rec = run_kernels(&small(), ExecPolicy::Sequential, &mut OutputSink::none()).unwrap();
    assert!(rec.files.is_empty());
}
