use lmfo::experiment::{emit_spiral_traces, ExperimentConfig, SpiralConfig};
use lmfo::spiral::{linspace, trace_spiral, SpiralKernel, SpiralKind};
use lmfo::stats::{ave_std, build_report, ranksum_p, RunBatch};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn normal_branch_matches_reference_values() {
    // Reference: two-sided asymptotic Mann-Whitney with continuity and tie correction.
    let a: Vec<f64> = (1..=10).map(f64::from).collect();
    let b: Vec<f64> = (4..14).map(|v| v as f64 + 0.5).collect();
    assert!((ranksum_p(&a, &b) - 0.031209012771740218).abs() < 1e-9);
    let a = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0, 5.0, 5.0];
    let b = [3.0, 3.0, 4.0, 4.0, 5.0, 5.0, 6.0, 6.0, 7.0, 7.0];
    assert!((ranksum_p(&a, &b) - 0.015856209681046226).abs() < 1e-9);
}

#[test]
fn exact_branch_small_cases() {
    assert_eq!(ranksum_p(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]), 0.1);
    // Identical samples: nothing is more central than the observed split.
    assert_eq!(ranksum_p(&[2.0, 2.0], &[2.0, 2.0]), 1.0);
    // One against one: either order is equally extreme.
    assert_eq!(ranksum_p(&[1.0], &[2.0]), 1.0);
}

#[test]
fn report_from_batches() {
    let batch = |name: &str, losses: &[f64]| RunBatch {
        algorithm: name.into(),
        final_losses: losses.to_vec(),
        classification_rates: vec![90.0; losses.len()],
        curves: vec![vec![1.0]; losses.len()],
    };
    let report = build_report(
        &[batch("MFO", &[1.0, 2.0, 3.0]), batch("PSO", &[4.0, 5.0, 6.0])],
        "MFO",
    )
    .unwrap();
    let csv = report.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "algorithm,mse_ave,mse_std,p_value,classification_rate");
    assert_eq!(lines[1], "MFO,2,1,N/A,90");
    assert_eq!(lines[2], "PSO,5,1,0.1,90");
    assert!(!report.row("PSO").unwrap().significant);
    assert!(report.render_text().contains("**2.000000e0**"));
    let s = ave_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
    assert_eq!(s.ave, 5.0);
    assert!((s.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-15);
}

#[test]
fn equiangular_radius_grows_and_archimedean_hits_origin() {
    let ts = linspace(0.0, 1.0, 101);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pts = trace_spiral(&SpiralKernel::new(SpiralKind::Equiangular, 0.5), &ts, &mut rng).unwrap();
    let radii: Vec<f64> = pts.iter().map(|(x, y)| x.hypot(*y)).collect();
    assert!(radii.windows(2).all(|w| w[1] > w[0]));
    let origin = trace_spiral(&SpiralKernel::new(SpiralKind::Archimedean, 2.0), &[0.0], &mut rng).unwrap();
    assert_eq!(origin[0], (0.0, 0.0));
}

#[test]
fn six_trace_files() {
    let dir = tempfile::tempdir().unwrap();
    let files = emit_spiral_traces(&SpiralConfig::default(), dir.path()).unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 6);
    assert!(names.contains(&"spiral_LMFO1_archimedean.csv".to_string()));
    assert!(names.contains(&"spiral_LMFO6_random.csv".to_string()));
}

#[test]
fn shipped_example_config_parses() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/example.toml");
    let cfg = ExperimentConfig::load(path).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.algorithms().unwrap().len(), cfg.roster.len());
    let again = ExperimentConfig::from_toml_str(&cfg.to_toml()).unwrap();
    assert_eq!(again, cfg);
}

#[test]
fn config_errors_are_reported() {
    assert!(ExperimentConfig::from_toml_str("[protocol]\nruns = 0\n").is_err());
    assert!(ExperimentConfig::from_toml_str("roster = []\n").is_err());
    assert!(ExperimentConfig::from_toml_str("[protocol]\nbogus = 1\n").is_err());
    let bad = ExperimentConfig::from_toml_str("roster = [{ algorithm = \"LMFO9\" }]\n");
    assert!(bad.is_err() || bad.unwrap().algorithms().is_err());
}
