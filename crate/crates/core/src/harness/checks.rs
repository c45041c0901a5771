//! Pass/fail criteria evaluated on finished runs.

use std::fmt;

use crate::estimators::EstimatorKind;

use super::config::Experiment;
use super::experiments::RunRecord;

/// Band for the Gaussian-task final-window means, bits.
pub const AWGN_BAND_BITS: (f64, f64) = (7.5, 10.5);
/// `log2 64`: InfoNCE cannot exceed `log K` with a batch of 64.
pub const NCE_CAP_BITS: f64 = 6.0;
/// Centre of the BSC band as printed for the binary experiment.
pub const BSC_CENTER_BITS: f64 = 0.5004;
pub const BSC_HALF_WIDTH_BITS: f64 = 0.1;
/// Statistical slack allowed above the true MI for the RJE lower bound.
pub const RJE_SLACK_BITS: f64 = 0.3;
/// Multiplier on the SMILE partition-variance bound.
pub const PARTITION_SLACK: f64 = 1.5;
pub const BLER_TARGET: f64 = 0.05;
pub const UNTRAINED_BLER: f64 = 15.0 / 16.0;
pub const UNTRAINED_BLER_TOL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn new(
        id: &'static str,
        name: &'static str,
        passed: bool,
        detail: impl Into<String>,
    ) -> Self {
        CriterionResult {
            id,
            name,
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {} {}: {}", self.id, self.name, self.detail)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn fmt_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", items.join(" "))
}

fn variance_of(record: &RunRecord, kind: EstimatorKind) -> Option<f64> {
    record
        .summary
        .iter()
        .find(|r| r.estimator == kind)
        .map(|r| r.variance_bits2)
}

/// Every criterion that `record` carries evidence for.
pub fn check_record(record: &RunRecord) -> Vec<CriterionResult> {
    match record.config.experiment {
        Experiment::AwgnEstimators => {
            let mut out = vec![check_awgn_bands(record), check_rje_lower_bound(record)];
            out.extend(check_variance_ordering(record));
            out
        }
        Experiment::BscEstimators => vec![check_bsc_band(record), check_rje_lower_bound(record)],
        Experiment::Autoencoder => check_autoencoder(record),
        Experiment::LemmaCheck => vec![check_lemma(record)],
    }
}

pub fn check_lemma(record: &RunRecord) -> CriterionResult {
    match &record.lemma {
        None => CriterionResult::new("2", "lemma suite", false, "no lemma report"),
        Some(l) => {
            let expected = record.config.lemma.distributions * record.config.lemma.grid_points;
            CriterionResult::new(
                "2",
                "lemma suite",
                l.violations() == 0 && l.checked() == expected,
                format!(
                    "{} of {} (set, a) combinations violate the bound",
                    l.violations(),
                    l.checked()
                ),
            )
        }
    }
}

pub fn check_awgn_bands(record: &RunRecord) -> CriterionResult {
    let (lo, hi) = AWGN_BAND_BITS;
    let mut passed = true;
    let mut parts = Vec::new();
    for kind in [
        EstimatorKind::Mine,
        EstimatorKind::Nwj,
        EstimatorKind::Smile,
        EstimatorKind::Rje,
    ] {
        let means = record.final_means(kind);
        let ok = !means.is_empty() && means.iter().all(|m| (lo..=hi).contains(m));
        passed &= ok;
        parts.push(format!("{kind} {}", fmt_list(&means)));
    }
    let nce_max = record
        .curves
        .iter()
        .filter(|r| r.estimator == EstimatorKind::Nce)
        .map(|r| r.estimate_bits)
        .fold(f64::NEG_INFINITY, f64::max);
    let nce_ok = nce_max.is_finite() && nce_max <= NCE_CAP_BITS;
    passed &= nce_ok;
    parts.push(format!("nce max {nce_max:.3}"));
    CriterionResult::new(
        "4",
        "gaussian estimator bands",
        passed,
        format!("final means in [{lo}, {hi}]: {}", parts.join("; ")),
    )
}

pub fn check_bsc_band(record: &RunRecord) -> CriterionResult {
    let (lo, hi) = (
        BSC_CENTER_BITS - BSC_HALF_WIDTH_BITS,
        BSC_CENTER_BITS + BSC_HALF_WIDTH_BITS,
    );
    let mut passed = true;
    let mut parts = Vec::new();
    for kind in EstimatorKind::ALL {
        let means = record.final_means(kind);
        let ok = !means.is_empty() && means.iter().all(|m| (lo..=hi).contains(m));
        passed &= ok;
        parts.push(format!("{kind} {}", fmt_list(&means)));
    }
    CriterionResult::new(
        "5",
        "binary estimator bands",
        passed,
        format!("final means in [{lo:.4}, {hi:.4}]: {}", parts.join("; ")),
    )
}

/// The seed-averaged RJE final-window mean stays below the truth plus slack.
pub fn check_rje_lower_bound(record: &RunRecord) -> CriterionResult {
    let id = match record.config.experiment {
        Experiment::BscEstimators => "6b",
        _ => "6a",
    };
    let means = record.final_means(EstimatorKind::Rje);
    let Some(truth) = record.true_mi_bits else {
        return CriterionResult::new(
            id,
            "rje lower bound",
            false,
            "no true MI for this experiment",
        );
    };
    if means.is_empty() {
        return CriterionResult::new(id, "rje lower bound", false, "rje was not run");
    }
    let m = mean(&means);
    CriterionResult::new(
        id,
        "rje lower bound",
        m <= truth + RJE_SLACK_BITS,
        format!(
            "mean {m:.4} <= {truth:.4} + {RJE_SLACK_BITS} (per seed {})",
            fmt_list(&means)
        ),
    )
}

pub fn check_variance_ordering(record: &RunRecord) -> Vec<CriterionResult> {
    let vars = (
        variance_of(record, EstimatorKind::Mine),
        variance_of(record, EstimatorKind::Smile),
        variance_of(record, EstimatorKind::Rje),
    );
    let ordering = match vars {
        (Some(mine), Some(smile), Some(rje)) => CriterionResult::new(
            "7a",
            "variance ordering",
            smile < mine && rje < mine,
            format!("var smile {smile:.4}, rje {rje:.4}, mine {mine:.4}"),
        ),
        _ => CriterionResult::new(
            "7a",
            "variance ordering",
            false,
            "summary needs mine, smile and rje with >= 5 seeds",
        ),
    };
    let partition = if record.partition.is_empty() {
        CriterionResult::new(
            "7b",
            "smile partition variance",
            false,
            "no partition reruns recorded",
        )
    } else {
        let worst = record
            .partition
            .iter()
            .map(|p| p.variance / (p.bound * PARTITION_SLACK))
            .fold(0.0, f64::max);
        let p0 = &record.partition[0];
        let detail: Vec<String> = record
            .partition
            .iter()
            .map(|p| format!("{:.3e}", p.variance))
            .collect();
        // For reference only: the range bound (M - m)^2 / (4n) for values in [e^-tau, e^tau].
        let squared = record
            .config
            .setup(EstimatorKind::Smile)
            .map(|s| p0.bound * (s.spec.tau.exp() - (-s.spec.tau).exp()));
        CriterionResult::new(
            "7b",
            "smile partition variance",
            worst <= 1.0,
            format!(
                "variances [{}] vs {PARTITION_SLACK} x {:.3e} ({} reruns; squared-range bound {})",
                detail.join(" "),
                p0.bound,
                p0.reruns,
                squared.map_or("n/a".to_string(), |v| format!("{v:.3e}"))
            ),
        )
    };
    vec![ordering, partition]
}

pub fn check_autoencoder(record: &RunRecord) -> Vec<CriterionResult> {
    let db = record.config.coding.schedule.ebno_db;
    let runs = &record.autoencoder;
    let mut kinds: Vec<EstimatorKind> = runs.iter().map(|r| r.estimator).collect();
    kinds.dedup();
    let complete = EstimatorKind::ALL.iter().all(|k| kinds.contains(k));
    let mut out = vec![CriterionResult::new(
        "8a",
        "autoencoder completes",
        complete,
        format!(
            "{} runs over [{}]",
            runs.len(),
            kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(" ")
        ),
    )];
    let blers: Vec<(EstimatorKind, Option<f64>)> =
        runs.iter().map(|r| (r.estimator, r.bler_at(db))).collect();
    let bler_ok = !blers.is_empty()
        && blers
            .iter()
            .all(|(_, b)| b.is_some_and(|b| b < BLER_TARGET));
    let parts: Vec<String> = blers
        .iter()
        .map(|(k, b)| format!("{k} {}", b.map_or("n/a".to_string(), |b| format!("{b:.4}"))))
        .collect();
    out.push(CriterionResult::new(
        "8b",
        "trained bler",
        bler_ok,
        format!("BLER at {db} dB < {BLER_TARGET}: {}", parts.join(", ")),
    ));
    let untrained: Vec<f64> = runs.iter().map(|r| r.untrained_bler).collect();
    let u = if untrained.is_empty() {
        f64::NAN
    } else {
        mean(&untrained)
    };
    out.push(CriterionResult::new(
        "8c",
        "untrained bler",
        (u - UNTRAINED_BLER).abs() <= UNTRAINED_BLER_TOL,
        format!("mean {u:.4} vs {UNTRAINED_BLER:.4} +- {UNTRAINED_BLER_TOL}"),
    ));
    out
}
