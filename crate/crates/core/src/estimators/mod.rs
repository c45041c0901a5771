//! Variational mutual-information estimators evaluated on a [`ScoreMatrix`].
//!
//! Every estimator has the form `joint_mean - partition_term`. The joint
//! mean averages the diagonal scores; the partition term is a functional of
//! the marginal (off-diagonal) scores and is where the estimators differ:
//!
//! | estimator | partition term |
//! |-----------|----------------|
//! | MINE  | `log mean exp(s)` |
//! | NWJ   | `mean exp(s - 1)` |
//! | NCE   | `mean_i [logsumexp_j s_ij - log K]` (full rows) |
//! | SMILE | `log mean clip(exp(s), e^-tau, e^tau)` |
//! | RJE   | `a mean log(1 + a exp(s)) / (1 - sqrt(b/a)) - log a` |
//!
//! Values are computed in nats; reports also carry bits.

mod bounds;
mod critic;
mod rje;
mod stats;

pub use bounds::{
    js_gradient, js_value, mine_estimate, mine_gradient, nce_estimate, nce_gradient, nwj_estimate,
    nwj_gradient, smile_estimate, smile_gradient, MineEmaState,
};
pub use critic::{Critic, CriticStep};
pub use rje::{
    golden_section_a, moment_ratio, rje_estimate, rje_gradient, rje_inner_bound, rje_partition,
    RjeParams,
};
pub use stats::{per_step_stats, sample_variance, RerunStats};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sampling::ScoreMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    Mine,
    Nwj,
    Nce,
    Smile,
    Rje,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Mine,
        EstimatorKind::Nwj,
        EstimatorKind::Nce,
        EstimatorKind::Smile,
        EstimatorKind::Rje,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Mine => "mine",
            EstimatorKind::Nwj => "nwj",
            EstimatorKind::Nce => "nce",
            EstimatorKind::Smile => "smile",
            EstimatorKind::Rje => "rje",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::config(format!("unknown estimator `{s}`")))
    }
}

/// How RJE picks `a` once `b` is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AStrategy {
    /// `a = c * b`, `c > 1`.
    FixedMultiple(f64),
    /// Golden-section minimization of the partition term over `(b, a_max]`.
    GoldenSection { a_max: f64 },
}

/// What the SMILE critic ascends during training. The reported value is
/// the clipped DV estimate either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmileTraining {
    /// The Jensen-Shannon bound, as in the reference SMILE implementation.
    JsSurrogate,
    /// The clipped DV estimate itself. Its joint term is unbounded, so this
    /// diverges; kept for comparison.
    Direct,
}

/// Which estimator to run and its hyperparameters. Each field is read only
/// by the estimator that owns it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    /// SMILE clip level and RJE critic bound.
    pub tau: f64,
    /// MINE moving-average decay for the gradient denominator.
    pub ema_decay: f64,
    pub a_strategy: AStrategy,
    /// Lower limit for RJE's `b`.
    pub b_floor: f64,
    /// Use this `b` for every batch instead of the per-batch moment ratio.
    pub fixed_b: Option<f64>,
    pub smile_training: SmileTraining,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind) -> Self {
        let tau = match kind {
            EstimatorKind::Rje => 6.0,
            _ => 5.0,
        };
        EstimatorSpec {
            kind,
            tau,
            ema_decay: 0.99,
            a_strategy: AStrategy::FixedMultiple(2.0),
            b_floor: 1.0,
            fixed_b: None,
            smile_training: SmileTraining::JsSurrogate,
        }
    }

    pub fn mine() -> Self {
        Self::new(EstimatorKind::Mine)
    }

    pub fn nwj() -> Self {
        Self::new(EstimatorKind::Nwj)
    }

    pub fn nce() -> Self {
        Self::new(EstimatorKind::Nce)
    }

    pub fn smile(tau: f64) -> Self {
        EstimatorSpec {
            tau,
            ..Self::new(EstimatorKind::Smile)
        }
    }

    pub fn rje(tau: f64) -> Self {
        EstimatorSpec {
            tau,
            ..Self::new(EstimatorKind::Rje)
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            EstimatorKind::Smile | EstimatorKind::Rje
                if !(self.tau > 0.0 && self.tau.is_finite()) =>
            {
                Err(Error::config(format!(
                    "tau must be positive, got {}",
                    self.tau
                )))
            }
            EstimatorKind::Mine if !(0.0..1.0).contains(&self.ema_decay) => Err(Error::config(
                format!("EMA decay must lie in [0, 1), got {}", self.ema_decay),
            )),
            EstimatorKind::Rje => {
                if !(self.b_floor >= 1.0) {
                    return Err(Error::config(format!(
                        "b floor must be >= 1, got {}",
                        self.b_floor
                    )));
                }
                if let Some(b) = self.fixed_b {
                    if !(b >= 1.0 && b.is_finite()) {
                        return Err(Error::config(format!("fixed b must be >= 1, got {b}")));
                    }
                }
                match self.a_strategy {
                    AStrategy::FixedMultiple(c) if !(c > 1.0 && c.is_finite()) => {
                        Err(Error::config(format!("a multiple must exceed 1, got {c}")))
                    }
                    AStrategy::GoldenSection { a_max } if !(a_max > 1.0 && a_max.is_finite()) => {
                        Err(Error::config(format!("a_max must exceed 1, got {a_max}")))
                    }
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }
}

/// Result of one evaluation; `value_nats = joint_mean - partition_term`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub value_nats: f64,
    pub value_bits: f64,
    pub joint_mean: f64,
    pub partition_term: f64,
    pub rje_a: Option<f64>,
    pub rje_b: Option<f64>,
}

impl EstimateReport {
    pub(crate) fn new(joint_mean: f64, partition_term: f64) -> Self {
        let value_nats = joint_mean - partition_term;
        EstimateReport {
            value_nats,
            value_bits: value_nats / std::f64::consts::LN_2,
            joint_mean,
            partition_term,
            rje_a: None,
            rje_b: None,
        }
    }
}

/// Mutable per-run estimator state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimatorState {
    pub mine_ema: MineEmaState,
}

/// An estimate together with `d value / d score` for every flat score entry.
#[derive(Debug, Clone)]
pub struct Objective {
    pub report: EstimateReport,
    pub score_grad: Vec<f64>,
}

/// Evaluates the estimator named by `spec`.
pub fn estimate(
    scores: &ScoreMatrix,
    spec: &EstimatorSpec,
    _state: &EstimatorState,
) -> Result<EstimateReport> {
    spec.validate()?;
    match spec.kind {
        EstimatorKind::Mine => mine_estimate(scores),
        EstimatorKind::Nwj => nwj_estimate(scores),
        EstimatorKind::Nce => nce_estimate(scores),
        EstimatorKind::Smile => smile_estimate(scores, spec.tau),
        EstimatorKind::Rje => rje_estimate(scores, spec),
    }
}

/// Estimate plus the training gradient the estimator ascends. MINE's
/// gradient uses (and advances) the moving average in `state`; SMILE follows
/// its [`SmileTraining`] choice.
pub fn objective(
    scores: &ScoreMatrix,
    spec: &EstimatorSpec,
    state: &mut EstimatorState,
) -> Result<Objective> {
    let report = estimate(scores, spec, state)?;
    let score_grad = match spec.kind {
        EstimatorKind::Mine => mine_gradient(scores, &mut state.mine_ema, spec.ema_decay),
        EstimatorKind::Nwj => nwj_gradient(scores),
        EstimatorKind::Nce => nce_gradient(scores),
        EstimatorKind::Smile => match spec.smile_training {
            SmileTraining::JsSurrogate => js_gradient(scores),
            SmileTraining::Direct => smile_gradient(scores, spec.tau),
        },
        EstimatorKind::Rje => {
            let params = RjeParams {
                a: report.rje_a.expect("rje report carries a"),
                b: report.rje_b.expect("rje report carries b"),
            };
            rje_gradient(scores, params)
        }
    };
    if score_grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::numeric(format!(
            "{} score gradient is not finite",
            spec.kind
        )));
    }
    Ok(Objective { report, score_grad })
}

/// `log(mean(exp(v)))`, max-shifted.
pub(crate) fn log_mean_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + (v - max).exp(), n + 1));
    max + (sum / n as f64).ln()
}

pub(crate) fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_round_trips_through_names() {
        for k in EstimatorKind::ALL {
            assert_eq!(k.name().parse::<EstimatorKind>().unwrap(), k);
        }
        assert!("js".parse::<EstimatorKind>().is_err());
    }

    #[test]
    fn validation() {
        assert!(EstimatorSpec::smile(0.0).validate().is_err());
        assert!(EstimatorSpec::rje(6.0).validate().is_ok());
        let mut s = EstimatorSpec::rje(6.0);
        s.a_strategy = AStrategy::FixedMultiple(1.0);
        assert!(s.validate().is_err());
        s.a_strategy = AStrategy::FixedMultiple(2.0);
        s.b_floor = 0.5;
        assert!(s.validate().is_err());
        // tau is irrelevant to NWJ
        let mut n = EstimatorSpec::nwj();
        n.tau = -1.0;
        assert!(n.validate().is_ok());
    }

    #[test]
    fn dispatch_constant_scores_mine_is_zero() {
        let s = ScoreMatrix::from_flat(vec![0.3; 16], 4).unwrap();
        let r = estimate(&s, &EstimatorSpec::mine(), &EstimatorState::default()).unwrap();
        assert!(r.value_nats.abs() < 1e-15);
    }

    #[test]
    fn dispatch_smile_wide_clip_equals_mine() {
        let flat: Vec<f64> = (0..25).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let s = ScoreMatrix::from_flat(flat, 5).unwrap();
        let st = EstimatorState::default();
        let a = estimate(&s, &EstimatorSpec::smile(20.0), &st).unwrap();
        let b = estimate(&s, &EstimatorSpec::mine(), &st).unwrap();
        assert!((a.value_nats - b.value_nats).abs() < 1e-12);
    }

    #[test]
    fn bits_are_nats_over_ln2() {
        let flat: Vec<f64> = (0..9).map(|i| i as f64 * 0.3 - 1.0).collect();
        let s = ScoreMatrix::from_flat(flat, 3).unwrap();
        let mut st = EstimatorState::default();
        for k in EstimatorKind::ALL {
            let r = objective(&s, &EstimatorSpec::new(k), &mut st)
                .unwrap()
                .report;
            assert!(
                (r.value_bits - r.value_nats / std::f64::consts::LN_2).abs() < 1e-15,
                "{k}"
            );
            assert!((r.value_nats - (r.joint_mean - r.partition_term)).abs() < 1e-12);
        }
    }

    #[test]
    fn log_mean_exp_is_stable() {
        let v = [1000.0, 1000.0];
        assert!((log_mean_exp(v.iter().copied()) - 1000.0).abs() < 1e-12);
        let v = [-1000.0, -1000.0 + 2f64.ln()];
        assert!((log_mean_exp(v.iter().copied()) - (-1000.0 + 1.5f64.ln())).abs() < 1e-9);
    }
}
