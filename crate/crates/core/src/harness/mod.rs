//! Experiment configuration, the canned experiments, acceptance checks and
//! CSV output.

pub mod checks;
pub mod config;
pub mod csv;
pub mod experiments;
pub mod workers;

pub use config::{
    CodingConfig, CriticTraining, EstimatorSetup, Experiment, ExperimentConfig, LemmaConfig,
};
pub use experiments::{
    run, run_autoencoder, run_awgn_estimators, run_bsc_estimators, run_lemma_check,
    summarize_bias_variance, AutoencoderRun, CurveRow, LemmaReport, RunRecord, SummaryRow,
};
pub use workers::{parallel_map, worker_count, THREADS_ENV};
