//! Reverse-Jensen estimator.
//!
//! For `X >= 0` with `b = E[X^2] / E[X]^2` and any `a > b`,
//!
//! ```text
//! log E[X] <= a E[log(1 + a X)] / (1 - sqrt(b / a)) - log a
//! ```
//!
//! RJE replaces the DV partition term `log E_q[e^f]` by this upper bound
//! (with `X = e^f` on the marginal scores), so the estimate never exceeds
//! MINE on the same batch. `a` and `b` are re-solved per batch and held
//! constant in the gradient.

use crate::error::{Error, Result};
use crate::sampling::ScoreMatrix;

use super::{mean, AStrategy, EstimateReport, EstimatorSpec};

/// Relative width at which the golden-section search stops.
const GOLDEN_REL_TOL: f64 = 1e-6;
/// Lower end of the search bracket, as a multiple of `b`.
const BRACKET_LO: f64 = 1.0 + 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RjeParams {
    pub a: f64,
    pub b: f64,
}

pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_a_b(a: f64, b: f64) -> Result<()> {
    if !(a > b) || !a.is_finite() {
        return Err(Error::domain(format!(
            "reverse-Jensen bound needs a > b, got a={a}, b={b}"
        )));
    }
    Ok(())
}

fn denominator(a: f64, b: f64) -> f64 {
    1.0 - (b / a).sqrt()
}

/// Right-hand side of the reverse-Jensen inequality for samples `x >= 0`.
pub fn rje_inner_bound(samples: &[f64], a: f64, b: f64) -> Result<f64> {
    check_a_b(a, b)?;
    if samples.is_empty() {
        return Err(Error::shape("no samples"));
    }
    if let Some(x) = samples.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(Error::domain(format!(
            "samples must be finite and nonnegative, got {x}"
        )));
    }
    let mean_log = mean(samples.iter().map(|&x| (a * x).ln_1p()));
    Ok(a * mean_log / denominator(a, b) - a.ln())
}

/// `E[X^2] / E[X]^2` for `X = e^s`, computed shift-invariantly.
pub fn moment_ratio(log_samples: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = log_samples.clone().fold(f64::NEG_INFINITY, f64::max);
    let (m1, m2, n) = log_samples.fold((0.0, 0.0, 0usize), |(m1, m2, n), s| {
        let e = (s - max).exp();
        (m1 + e, m2 + e * e, n + 1)
    });
    let n = n as f64;
    (m2 / n) / (m1 / n).powi(2)
}

/// Reverse-Jensen partition term on the marginal scores of `scores`.
pub fn rje_partition(scores: &ScoreMatrix, a: f64, b: f64) -> Result<f64> {
    check_a_b(a, b)?;
    let ln_a = a.ln();
    let mean_log = mean(scores.marginal_iter().map(|s| softplus(ln_a + s)));
    Ok(a * mean_log / denominator(a, b) - ln_a)
}

/// Minimizes `a -> term(a)` over `(lo, hi]` by golden-section search; the
/// upper endpoint itself is kept if it scores lower than the interior optimum.
fn golden_section(term: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let eval = |a: f64| {
        let v = term(a);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::numeric(format!(
                "partition bound is not finite at a={a}"
            )))
        }
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut left, mut right) = (lo, hi);
    let mut c = right - inv_phi * (right - left);
    let mut d = left + inv_phi * (right - left);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    while right - left > GOLDEN_REL_TOL * 0.5 * (c.abs() + d.abs()) {
        if fc < fd {
            right = d;
            d = c;
            fd = fc;
            c = right - inv_phi * (right - left);
            fc = eval(c)?;
        } else {
            left = c;
            c = d;
            fc = fd;
            d = left + inv_phi * (right - left);
            fd = eval(d)?;
        }
    }
    let mid = 0.5 * (left + right);
    let candidates = [(mid, eval(mid)?), (c, fc), (d, fd), (hi, eval(hi)?)];
    let best = candidates
        .into_iter()
        .fold((f64::NAN, f64::INFINITY), |best, cand| {
            if cand.1 < best.1 {
                cand
            } else {
                best
            }
        });
    Ok(best.0)
}

/// The `a` in `(b, a_max]` that minimizes the reverse-Jensen bound on `samples`.
pub fn golden_section_a(samples: &[f64], b: f64, a_max: f64) -> Result<f64> {
    check_a_b(a_max, b)?;
    rje_inner_bound(samples, a_max, b)?;
    golden_section(
        |a| rje_inner_bound(samples, a, b).unwrap_or(f64::NAN),
        b * BRACKET_LO,
        a_max,
    )
}

fn select_params(scores: &ScoreMatrix, spec: &EstimatorSpec) -> Result<RjeParams> {
    let b = match spec.fixed_b {
        Some(b) => b,
        None => moment_ratio(scores.marginal_iter()).max(spec.b_floor),
    };
    if !b.is_finite() {
        return Err(Error::numeric("moment ratio is not finite"));
    }
    let a = match spec.a_strategy {
        AStrategy::FixedMultiple(c) => c * b,
        AStrategy::GoldenSection { a_max } => {
            check_a_b(a_max, b)?;
            golden_section(
                |a| rje_partition(scores, a, b).unwrap_or(f64::NAN),
                b * BRACKET_LO,
                a_max,
            )?
        }
    };
    check_a_b(a, b)?;
    Ok(RjeParams { a, b })
}

/// `mean(joint) - [a mean log(1 + a e^s) / (1 - sqrt(b/a)) - log a]` over the
/// marginal scores. Scores must lie in `[-tau, tau]`.
pub fn rje_estimate(scores: &ScoreMatrix, spec: &EstimatorSpec) -> Result<EstimateReport> {
    let tau = spec.tau;
    if let Some(s) = scores.as_flat().iter().find(|s| s.abs() > tau) {
        return Err(Error::domain(format!(
            "critic score {s} lies outside [-{tau}, {tau}]"
        )));
    }
    let params = select_params(scores, spec)?;
    let joint = mean((0..scores.k()).map(|i| scores.get(i, i)));
    let mut report = EstimateReport::new(joint, rje_partition(scores, params.a, params.b)?);
    report.rje_a = Some(params.a);
    report.rje_b = Some(params.b);
    Ok(report)
}

/// Score gradient with `a`, `b` held fixed:
/// `d/d marginal_j = -a / (1 - sqrt(b/a)) * sigmoid(log a + s_j) / M`.
pub fn rje_gradient(scores: &ScoreMatrix, params: RjeParams) -> Vec<f64> {
    let k = scores.k();
    let m = scores.num_marginal() as f64;
    let ln_a = params.a.ln();
    let scale = params.a / denominator(params.a, params.b) / m;
    scores
        .as_flat()
        .iter()
        .enumerate()
        .map(|(idx, &s)| {
            if idx / k == idx % k {
                1.0 / k as f64
            } else {
                -scale * sigmoid(ln_a + s)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::mine_estimate;
    use crate::tensor::{relative_error, Rng};

    #[test]
    fn unit_samples_hand_value() {
        // 4 ln 5 / (1 - 1/2) - ln 4
        let v = rje_inner_bound(&[1.0; 10], 4.0, 1.0).unwrap();
        assert!((v - 11.489208938352911).abs() < 1e-12, "{v}");
        assert!(v >= 0.0);
    }

    #[test]
    fn a_not_above_b_is_domain_error() {
        assert!(matches!(
            rje_inner_bound(&[1.0], 1.0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            rje_inner_bound(&[1.0], 0.5, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            rje_inner_bound(&[-1.0], 3.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn bound_blows_up_as_a_approaches_b() {
        let near = rje_inner_bound(&[1.0, 2.0], 1.0 + 1e-9, 1.0).unwrap();
        let far = rje_inner_bound(&[1.0, 2.0], 2.0, 1.0).unwrap();
        assert!(near > 1e8 * far.abs().max(1.0));
    }

    #[test]
    fn constant_zero_critic_closed_form() {
        // X = 1, b = 1, a = 2: 0 - [2 ln 3 / (1 - sqrt(1/2)) - ln 2]
        let s = ScoreMatrix::from_flat(vec![0.0; 16], 4).unwrap();
        let r = rje_estimate(&s, &EstimatorSpec::rje(6.0)).unwrap();
        assert!(
            (r.value_nats + 6.808646770960868).abs() < 1e-12,
            "{}",
            r.value_nats
        );
        assert_eq!(r.rje_b, Some(1.0));
        assert_eq!(r.rje_a, Some(2.0));
    }

    #[test]
    fn rejects_scores_outside_critic_bound() {
        let s = ScoreMatrix::from_flat(vec![0.0, 7.0, 0.0, 0.0], 2).unwrap();
        assert!(matches!(
            rje_estimate(&s, &EstimatorSpec::rje(6.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn golden_beats_fixed_multiple() {
        let mut rng = Rng::new(3);
        let x: Vec<f64> = (0..500).map(|_| rng.normal().exp()).collect();
        let m1 = x.iter().sum::<f64>() / 500.0;
        let m2 = x.iter().map(|v| v * v).sum::<f64>() / 500.0;
        let b = m2 / (m1 * m1);
        let a_max = 50.0 * b;
        let a = golden_section_a(&x, b, a_max).unwrap();
        let g = |a| rje_inner_bound(&x, a, b).unwrap();
        assert!(a > b && a <= a_max);
        assert!(g(a) <= g(2.0 * b));
        assert!(g(a) <= g(a_max));
        assert!(g(a) >= m1.ln());
    }

    #[test]
    fn golden_estimator_bounded_by_mine() {
        let mut rng = Rng::new(5);
        let s = ScoreMatrix::from_flat((0..64).map(|_| 2.0 * rng.normal().tanh()).collect(), 8)
            .unwrap();
        let mut spec = EstimatorSpec::rje(6.0);
        spec.a_strategy = AStrategy::GoldenSection { a_max: 1e3 };
        let golden = rje_estimate(&s, &spec).unwrap();
        let fixed = rje_estimate(&s, &EstimatorSpec::rje(6.0)).unwrap();
        assert!(golden.value_nats >= fixed.value_nats - 1e-9);
        assert!(golden.value_nats <= mine_estimate(&s).unwrap().value_nats);
        spec.a_strategy = AStrategy::GoldenSection { a_max: 1.0 + 1e-3 };
        spec.fixed_b = Some(2.0);
        assert!(matches!(rje_estimate(&s, &spec), Err(Error::Domain(_))));
    }

    #[test]
    fn fixed_global_b_is_used() {
        let s = ScoreMatrix::from_flat(vec![0.5, -1.0, 2.0, 0.1], 2).unwrap();
        let mut spec = EstimatorSpec::rje(6.0);
        spec.fixed_b = Some(3.0);
        let r = rje_estimate(&s, &spec).unwrap();
        assert_eq!((r.rje_a, r.rje_b), (Some(6.0), Some(3.0)));
    }

    #[test]
    fn gradient_matches_finite_differences_with_a_b_frozen() {
        let mut rng = Rng::new(9);
        let s = ScoreMatrix::from_flat((0..49).map(|_| 3.0 * rng.normal().tanh()).collect(), 7)
            .unwrap();
        let r = rje_estimate(&s, &EstimatorSpec::rje(6.0)).unwrap();
        let p = RjeParams {
            a: r.rje_a.unwrap(),
            b: r.rje_b.unwrap(),
        };
        let g = rje_gradient(&s, p);
        let value = |flat: Vec<f64>| {
            let m = ScoreMatrix::from_flat(flat, 7).unwrap();
            let joint = mean((0..7).map(|i| m.get(i, i)));
            joint - rje_partition(&m, p.a, p.b).unwrap()
        };
        for i in 0..49 {
            let mut plus = s.as_flat().to_vec();
            plus[i] += 1e-5;
            let mut minus = s.as_flat().to_vec();
            minus[i] -= 1e-5;
            let numeric = (value(plus) - value(minus)) / 2e-5;
            assert!(
                relative_error(g[i], numeric) < 1e-6,
                "{i}: {} vs {numeric}",
                g[i]
            );
        }
    }

    #[test]
    fn moment_ratio_is_scale_invariant() {
        let s = [0.1, -0.7, 1.3, 0.0];
        let shifted: Vec<f64> = s.iter().map(|v| v + 500.0).collect();
        let a = moment_ratio(s.iter().copied());
        let b = moment_ratio(shifted.iter().copied());
        assert!((a - b).abs() < 1e-12);
        assert!((moment_ratio([2.0; 5].into_iter()) - 1.0).abs() < 1e-15);
    }
}
