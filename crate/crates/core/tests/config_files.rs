use std::path::{Path, PathBuf};

use mchd_core::experiment::ExperimentConfig;
use mchd_core::ingest::{load_montage, SyntheticSubjectConfig, CANONICAL_MONTAGE};

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config")
}

#[test]
fn montage_file_is_canonical() {
    assert_eq!(
        load_montage(&config_dir().join("montage18.txt")).unwrap(),
        CANONICAL_MONTAGE
    );
}

#[test]
fn synthetic_config_matches_builder() {
    let cfg = ExperimentConfig::load(&config_dir().join("synthetic.toml")).unwrap();
    assert_eq!(
        cfg.data.synthetic,
        vec![SyntheticSubjectConfig::with_modes("syn", 3, 2, 10, 6, 1).unwrap()]
    );
    assert_eq!(cfg.variants.len(), 4);
}

#[test]
fn chbmit_config_loads() {
    let cfg = ExperimentConfig::load(&config_dir().join("chbmit.toml")).unwrap();
    assert_eq!(cfg.data.factor, 10);
    assert!(cfg.data.manifest.unwrap().ends_with("prepared/manifest.json"));
}
