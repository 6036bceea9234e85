use std::fs;

use irb::estimate::NoiseClass;
use irb::fit::FitModel;
use irb::study::{
    analyze, load_dataset, simulate, simulate_to_dir, AnalysisOptions, RunManifest, SimulationConfig,
};

fn reference_run() -> SimulationConfig {
    SimulationConfig::from_json(
        r#"{
            "qubits": 1,
            "lengths": [2, 4, 8, 16, 24, 32, 48, 64, 80, 96],
            "sequences": 32,
            "seed": 2012,
            "retain_raw": true,
            "noise": {
                "gate": { "type": "depolarizing", "p": 0.984 },
                "prep": { "type": "depolarizing", "p": 0.97 }
            },
            "interleaved": [
                { "gate": "X90", "error": { "type": "depolarizing", "p": 0.994 } },
                { "gate": "Y90", "error": { "type": "depolarizing", "p": 0.994 } }
            ]
        }"#,
    )
    .unwrap()
}

#[test]
fn simulate_writes_every_output_and_manifest_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let config = reference_run();
    let manifest = simulate_to_dir(&config, dir.path(), Some(2)).unwrap();
    assert_eq!(manifest.outputs.len(), 6);
    for file in &manifest.outputs {
        assert!(dir.path().join(file).is_file(), "{file}");
    }
    let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let echoed: RunManifest = serde_json::from_str(&text).unwrap();
    assert_eq!(echoed.config.plan().unwrap(), config.plan().unwrap());
    assert!(echoed.gamma.unwrap().gamma == 0.0);

    let csv = load_dataset(&dir.path().join("standard.csv")).unwrap();
    let json = load_dataset(&dir.path().join("standard.json")).unwrap();
    assert_eq!(csv.points.len(), json.points.len());
    assert!(json.raw.is_some() && csv.raw.is_none());
}

#[test]
fn same_seed_gives_identical_csv_bytes() {
    let config = reference_run();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    simulate_to_dir(&config, a.path(), Some(1)).unwrap();
    simulate_to_dir(&config, b.path(), Some(4)).unwrap();
    for name in ["standard.csv", "interleaved-X90.csv", "interleaved-Y90.csv"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }
}

#[test]
fn depolarizing_pair_recovers_injected_error() {
    let files = simulate(&reference_run(), None).unwrap();
    let injected = (1.0 - 0.994) / 2.0;
    for interleaved in &files[1..] {
        for model in [FitModel::Zeroth, FitModel::First] {
            let options = AnalysisOptions {
                model,
                noise_class: NoiseClass::General,
                bootstrap: Some(200),
                seed: 1,
            };
            let analysis = analyze(&files[0].dataset, &interleaved.dataset, 1, &options).unwrap();
            assert!((analysis.report.r_est.value - injected).abs() < 1e-9);
            assert!(analysis.report.contains(injected));
            let declared = AnalysisOptions {
                noise_class: NoiseClass::Depolarizing,
                ..options
            };
            let exact = analyze(&files[0].dataset, &interleaved.dataset, 1, &declared).unwrap();
            assert_eq!(exact.report.bound, 0.0);
        }
    }
}
