//! The shipped configuration files describe the default experiments.

use std::path::{Path, PathBuf};

use mibench::harness::{Experiment, ExperimentConfig};

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

#[test]
fn shipped_configs_match_defaults() {
    for experiment in Experiment::ALL {
        let path = shipped(&format!("{}.cfg", experiment.name()));
        let cfg = ExperimentConfig::from_path(&path, Some(experiment)).unwrap();
        cfg.validate().unwrap();
        let mut defaults = ExperimentConfig::defaults(experiment);
        defaults.output_dir = cfg.output_dir.clone();
        assert_eq!(cfg, defaults, "{}", path.display());
    }
}
