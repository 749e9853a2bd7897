use std::fs;

use isac_core::experiments::{
    evaluate_selection_robustness, export_dataset, read_manifest, robustness_csv, run_sweep, Method, Selector,
    SweepSpec, SweepVar, CLEAN_FILE, LOOKUP_FILE, PI_FILE,
};
use isac_core::{Enumeration, SystemConfig};

fn config() -> SystemConfig {
    let mut cfg = SystemConfig::default();
    cfg.n = 8;
    cfg.k = 4;
    cfg.n_rf = 4;
    cfg.n_ds = 2;
    cfg.t = 2;
    cfg.l = 2;
    cfg.m = 4;
    cfg.g = 2;
    cfg.n_prime = 4;
    cfg.max_outer = 6;
    cfg.max_inner = 40;
    cfg
}

#[test]
fn zero_bandwidth_makes_bsc_irrelevant() {
    let mut base = config();
    base.bandwidth = 0.0;
    let spec = SweepSpec {
        variable: SweepVar::Snr,
        values: vec![0.0],
        trials: 4,
        methods: vec![Method::OptBsc, Method::OptNobsc, Method::RandBsc, Method::RandNobsc],
        base,
        enumeration: Enumeration::Gss,
    };
    let res = run_sweep(&spec).unwrap();
    let get = |m| res.records.iter().filter(|r| r.method == m).map(|r| r.se).collect::<Vec<_>>();
    assert_eq!(get(Method::OptBsc), get(Method::OptNobsc));
    assert_eq!(get(Method::RandBsc), get(Method::RandNobsc));
}

#[test]
fn snr_sweep_increases_every_method() {
    let spec = SweepSpec {
        variable: SweepVar::Snr,
        values: vec![-10.0, 0.0, 10.0],
        trials: 2,
        methods: Method::ALL.to_vec(),
        base: config(),
        enumeration: Enumeration::Gss,
    };
    let res = run_sweep(&spec).unwrap();
    for m in Method::ALL {
        let s = res.series(m);
        assert!(s.windows(2).all(|w| w[1].mean > w[0].mean), "{}", m.as_str());
    }
}

#[test]
fn epsilon_sweep_endpoint() {
    let spec = SweepSpec {
        variable: SweepVar::Epsilon,
        values: vec![0.5, 1.0],
        trials: 2,
        methods: vec![Method::FdFull, Method::FdCommOnly],
        base: config(),
        enumeration: Enumeration::Gss,
    };
    let res = run_sweep(&spec).unwrap();
    assert_eq!(res.row(1.0, Method::FdFull).unwrap().mean, res.row(1.0, Method::FdCommOnly).unwrap().mean);
    assert!(res.row(0.5, Method::FdFull).unwrap().mean < res.row(0.5, Method::FdCommOnly).unwrap().mean);
}

#[test]
fn dataset_layout_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    let snrs = [15.0, 20.0, 25.0];
    let manifest = export_dataset(&cfg, 3, 2, &snrs, 2, dir.path()).unwrap();
    assert_eq!(manifest.count, 3 * 2 * cfg.m * snrs.len());
    assert_eq!(manifest.shape, [8, 4 + 2, 2]);
    assert_eq!(manifest.num_classes, 6);
    assert!(manifest.labels.iter().all(|&l| l < 6));
    assert!(manifest.complete);
    assert_eq!(read_manifest(dir.path()).unwrap(), manifest);

    let sample = manifest.sample_bytes();
    assert_eq!(fs::metadata(dir.path().join(PI_FILE)).unwrap().len(), manifest.count as u64 * sample);
    assert_eq!(fs::metadata(dir.path().join(CLEAN_FILE)).unwrap().len(), (3 * cfg.m) as u64 * sample);
    assert!(manifest.offsets.iter().enumerate().all(|(i, &o)| o == i as u64 * sample));
    let lookup = fs::read_to_string(dir.path().join(LOOKUP_FILE)).unwrap();
    assert_eq!(lookup.lines().count(), 1 + 3 * 6);

    let blob = fs::read(dir.path().join(PI_FILE)).unwrap();
    assert!(blob.chunks(4).all(|b| f32::from_le_bytes(b.try_into().unwrap()).is_finite()));

    let again = tempfile::tempdir().unwrap();
    export_dataset(&cfg, 3, 2, &snrs, 2, again.path()).unwrap();
    assert_eq!(fs::read(again.path().join(PI_FILE)).unwrap(), blob);
}

#[test]
fn injected_noise_matches_snr() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config();
    cfg.n = 16;
    cfg.n_prime = 16;
    cfg.k = 8;
    cfg.g = 4;
    let manifest = export_dataset(&cfg, 2, 1, &[10.0], 1, dir.path()).unwrap();
    let floats = |name: &str| -> Vec<f64> {
        fs::read(dir.path().join(name))
            .unwrap()
            .chunks(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect()
    };
    let (noisy, clean) = (floats(PI_FILE), floats(CLEAN_FILE));
    assert_eq!(noisy.len(), clean.len());
    let signal: f64 = clean.iter().map(|x| x * x).sum();
    let noise: f64 = noisy.iter().zip(&clean).map(|(a, b)| (a - b).powi(2)).sum();
    assert_eq!(manifest.count, 2 * cfg.m);
    assert!((noise / signal / 0.1 - 1.0).abs() < 0.03, "{}", noise / signal);
}

#[test]
fn missing_manifest_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert!(read_manifest(dir.path()).is_err());
}

#[test]
fn robustness_clean_inputs_reproduce_labels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    export_dataset(&cfg, 3, 1, &[20.0], 2, dir.path()).unwrap();
    let rows = evaluate_selection_robustness(
        dir.path(),
        &Selector::ModelBased { draws: 2 },
        &[f64::INFINITY, -20.0],
    )
    .unwrap();
    assert_eq!(rows[0].accuracy, 1.0);
    assert_eq!(rows[0].mean_se, rows[0].mean_label_se);
    for r in &rows {
        assert!(r.mean_se <= r.mean_label_se + 1e-12);
        assert_eq!(r.evaluations, 6);
    }
    assert!(robustness_csv(&rows).starts_with("snr_test,accuracy,mean_SE,mean_label_SE,evaluations\ninf,1.0"));
}

#[test]
fn learned_labels_are_scored_against_lookup() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    let manifest = export_dataset(&cfg, 2, 1, &[20.0], 1, dir.path()).unwrap();
    let perfect: Vec<_> = manifest.labels.iter().enumerate().map(|(i, &l)| (5.0, i, l)).collect();
    let wrong: Vec<_> = manifest.labels.iter().enumerate().map(|(i, &l)| (-5.0, i, (l + 1) % 6)).collect();
    let preds: Vec<_> = wrong.into_iter().chain(perfect).collect();
    let rows = evaluate_selection_robustness(dir.path(), &Selector::LearnedLabels(preds), &[]).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].snr_test, -5.0);
    assert_eq!(rows[0].accuracy, 0.0);
    assert_eq!(rows[1].accuracy, 1.0);
    assert!(rows[0].mean_se <= rows[0].mean_label_se);

    let bad = vec![(0.0, manifest.count + 1, 0)];
    assert!(evaluate_selection_robustness(dir.path(), &Selector::LearnedLabels(bad), &[]).is_err());
}
