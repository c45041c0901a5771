use crate::error::Result;
use crate::sampling::ScoreMatrix;

use super::rje::{sigmoid, softplus};
use super::{log_mean_exp, mean, EstimateReport};

/// Moving average of the MINE partition term `E_q[e^f]`, kept in log space.
/// Empty until the first batch initializes it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MineEmaState {
    log_value: Option<f64>,
}

impl MineEmaState {
    pub fn value(&self) -> Option<f64> {
        self.log_value.map(f64::exp)
    }

    pub fn log_value(&self) -> Option<f64> {
        self.log_value
    }

    /// `ema <- d * ema + (1 - d) * batch`, or `ema <- batch` on first use.
    fn update(&mut self, log_batch_mean: f64, decay: f64) -> f64 {
        let next = match self.log_value {
            None => log_batch_mean,
            Some(_) if decay == 0.0 => log_batch_mean,
            Some(prev) => {
                let a = decay.ln() + prev;
                let b = (1.0 - decay).ln() + log_batch_mean;
                let m = a.max(b);
                m + ((a - m).exp() + (b - m).exp()).ln()
            }
        };
        self.log_value = Some(next);
        next
    }
}

fn joint_mean(scores: &ScoreMatrix) -> f64 {
    mean((0..scores.k()).map(|i| scores.get(i, i)))
}

fn joint_grad(scores: &ScoreMatrix) -> Vec<f64> {
    let k = scores.k();
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        g[i * k + i] = 1.0 / k as f64;
    }
    g
}

/// Donsker-Varadhan: `mean(joint) - log mean(exp(marginal))`.
pub fn mine_estimate(scores: &ScoreMatrix) -> Result<EstimateReport> {
    Ok(EstimateReport::new(
        joint_mean(scores),
        log_mean_exp(scores.marginal_iter()),
    ))
}

/// MINE ascent direction with the moving-average denominator:
/// `d/d joint_i = 1/K`, `d/d marginal_j = -exp(s_j) / (M * ema)`.
/// The average is advanced with this batch before it is used.
pub fn mine_gradient(scores: &ScoreMatrix, ema: &mut MineEmaState, decay: f64) -> Vec<f64> {
    let log_batch = log_mean_exp(scores.marginal_iter());
    let log_ema = ema.update(log_batch, decay);
    let m = scores.num_marginal() as f64;
    let mut g = joint_grad(scores);
    for (idx, (gi, &s)) in g.iter_mut().zip(scores.as_flat()).enumerate() {
        if !scores.is_diagonal(idx) {
            *gi = -(s - log_ema).exp() / m;
        }
    }
    g
}

/// `mean(joint) - mean(exp(marginal - 1))`.
pub fn nwj_estimate(scores: &ScoreMatrix) -> Result<EstimateReport> {
    let partition = (log_mean_exp(scores.marginal_iter()) - 1.0).exp();
    Ok(EstimateReport::new(joint_mean(scores), partition))
}

pub fn nwj_gradient(scores: &ScoreMatrix) -> Vec<f64> {
    let m = scores.num_marginal() as f64;
    let mut g = joint_grad(scores);
    for (idx, (gi, &s)) in g.iter_mut().zip(scores.as_flat()).enumerate() {
        if !scores.is_diagonal(idx) {
            *gi = -(s - 1.0).exp() / m;
        }
    }
    g
}

fn row_log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

/// InfoNCE over full rows: `mean_i [s_ii - logsumexp_j s_ij] + log K`.
pub fn nce_estimate(scores: &ScoreMatrix) -> Result<EstimateReport> {
    let k = scores.k();
    let log_k = (k as f64).ln();
    let partition = mean((0..k).map(|i| row_log_sum_exp(scores.row(i)) - log_k));
    Ok(EstimateReport::new(joint_mean(scores), partition))
}

/// `d/d s_ij = (1[i == j] - softmax_i(j)) / K`.
pub fn nce_gradient(scores: &ScoreMatrix) -> Vec<f64> {
    let k = scores.k();
    let inv_k = 1.0 / k as f64;
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        let row = scores.row(i);
        let lse = row_log_sum_exp(row);
        for (j, &s) in row.iter().enumerate() {
            let p = (s - lse).exp();
            g[i * k + j] = (f64::from(u8::from(i == j)) - p) * inv_k;
        }
    }
    g
}

/// DV bound with the marginal `exp(s)` clipped to `[e^-tau, e^tau]`.
pub fn smile_estimate(scores: &ScoreMatrix, tau: f64) -> Result<EstimateReport> {
    let clipped = scores.marginal_iter().map(|s| s.clamp(-tau, tau));
    Ok(EstimateReport::new(
        joint_mean(scores),
        log_mean_exp(clipped),
    ))
}

/// Gradient of [`smile_estimate`]; zero for marginal scores outside `[-tau, tau]`.
pub fn smile_gradient(scores: &ScoreMatrix, tau: f64) -> Vec<f64> {
    let log_sum = log_mean_exp(scores.marginal_iter().map(|s| s.clamp(-tau, tau)))
        + (scores.num_marginal() as f64).ln();
    let mut g = joint_grad(scores);
    for (idx, (gi, &s)) in g.iter_mut().zip(scores.as_flat()).enumerate() {
        if !scores.is_diagonal(idx) {
            *gi = if (-tau..=tau).contains(&s) {
                -(s - log_sum).exp()
            } else {
                0.0
            };
        }
    }
    g
}

/// Jensen-Shannon (f-GAN) bound `mean(-softplus(-joint)) - mean(softplus(marginal))`.
/// Not an MI estimate itself; its maximizer is the log density ratio.
pub fn js_value(scores: &ScoreMatrix) -> f64 {
    let joint = mean((0..scores.k()).map(|i| -softplus(-scores.get(i, i))));
    joint - mean(scores.marginal_iter().map(softplus))
}

/// Gradient of [`js_value`]: `sigmoid(-s)/K` on the diagonal, `-sigmoid(s)/M` elsewhere.
pub fn js_gradient(scores: &ScoreMatrix) -> Vec<f64> {
    let k = scores.k() as f64;
    let m = scores.num_marginal() as f64;
    scores
        .as_flat()
        .iter()
        .enumerate()
        .map(|(idx, &s)| {
            if scores.is_diagonal(idx) {
                sigmoid(-s) / k
            } else {
                -sigmoid(s) / m
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{relative_error, Rng};

    fn const_scores(k: usize, c: f64) -> ScoreMatrix {
        ScoreMatrix::from_flat(vec![c; k * k], k).unwrap()
    }

    fn random_scores(k: usize, scale: f64, seed: u64) -> ScoreMatrix {
        let mut rng = Rng::new(seed);
        ScoreMatrix::from_flat((0..k * k).map(|_| scale * rng.normal()).collect(), k).unwrap()
    }

    fn finite_difference(f: impl Fn(&ScoreMatrix) -> f64, s: &ScoreMatrix, h: f64) -> Vec<f64> {
        (0..s.as_flat().len())
            .map(|i| {
                let mut p = s.as_flat().to_vec();
                p[i] += h;
                let mut m = s.as_flat().to_vec();
                m[i] -= h;
                let fp = f(&ScoreMatrix::from_flat(p, s.k()).unwrap());
                let fm = f(&ScoreMatrix::from_flat(m, s.k()).unwrap());
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    fn assert_close(analytic: &[f64], numeric: &[f64], tol: f64) {
        for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
            assert!(
                relative_error(*a, *n) < tol,
                "entry {i}: analytic {a}, numeric {n}"
            );
        }
    }

    #[test]
    fn mine_closed_forms() {
        for c in [-3.0, 0.0, 2.5] {
            assert!(mine_estimate(&const_scores(4, c)).unwrap().value_nats.abs() < 1e-12);
        }
        let s = ScoreMatrix::assemble(&[1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert!((mine_estimate(&s).unwrap().value_nats - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mine_gradient_normalization() {
        let s = random_scores(6, 1.0, 1);
        let mut ema = MineEmaState::default();
        let g = mine_gradient(&s, &mut ema, 0.99);
        assert!(g
            .iter()
            .enumerate()
            .filter(|(i, _)| s.is_diagonal(*i))
            .all(|(_, &v)| v == 1.0 / 6.0));
        // First batch initializes the average to the batch mean.
        let marginal_sum: f64 = g
            .iter()
            .enumerate()
            .filter(|(i, _)| !s.is_diagonal(*i))
            .map(|(_, v)| v)
            .sum();
        assert!((marginal_sum + 1.0).abs() < 1e-12);
    }

    #[test]
    fn mine_zero_decay_is_plain_batch_gradient() {
        let s1 = random_scores(5, 1.0, 2);
        let s2 = random_scores(5, 2.0, 3);
        let mut ema = MineEmaState::default();
        mine_gradient(&s1, &mut ema, 0.0);
        let g = mine_gradient(&s2, &mut ema, 0.0);
        let numeric = finite_difference(|s| mine_estimate(s).unwrap().value_nats, &s2, 1e-5);
        assert_close(&g, &numeric, 1e-6);
    }

    #[test]
    fn mine_ema_moves_towards_batch() {
        let mut ema = MineEmaState::default();
        mine_gradient(&const_scores(3, 0.0), &mut ema, 0.9);
        assert!((ema.value().unwrap() - 1.0).abs() < 1e-15);
        mine_gradient(&const_scores(3, 2f64.ln()), &mut ema, 0.9);
        assert!((ema.value().unwrap() - 1.1).abs() < 1e-12);
    }

    #[test]
    fn nwj_closed_forms() {
        for k in [2, 5, 9] {
            assert_eq!(nwj_estimate(&const_scores(k, 1.0)).unwrap().value_nats, 0.0);
        }
        let v = nwj_estimate(&const_scores(3, 0.0)).unwrap().value_nats;
        assert!((v + (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn nce_closed_forms_and_bound() {
        assert!(
            nce_estimate(&const_scores(8, 1.7))
                .unwrap()
                .value_nats
                .abs()
                < 1e-12
        );
        let k = 64;
        let flat = (0..k * k)
            .map(|i| if i / k == i % k { 40.0 } else { -40.0 })
            .collect();
        let v = nce_estimate(&ScoreMatrix::from_flat(flat, k).unwrap())
            .unwrap()
            .value_nats;
        assert!(v <= (k as f64).ln());
        assert!(((k as f64).ln() - v).abs() < 1e-12);
        assert!(v / std::f64::consts::LN_2 <= 6.0);
    }

    #[test]
    fn smile_matches_mine_when_clip_inactive() {
        let s = random_scores(7, 1.0, 4);
        let max = s.as_flat().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let a = smile_estimate(&s, max + 0.01).unwrap().value_nats;
        let b = mine_estimate(&s).unwrap().value_nats;
        assert!((a - b).abs() < 1e-12);
        assert!(
            smile_estimate(&const_scores(4, -4.0), 5.0)
                .unwrap()
                .value_nats
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn smile_clip_zeroes_gradient() {
        let s = ScoreMatrix::assemble(&[0.0, 0.0, 0.0], &[9.0, -9.0, 0.5, 0.1, -0.2, 0.3]).unwrap();
        let g = smile_gradient(&s, 5.0);
        assert_eq!(g[1], 0.0);
        assert_eq!(g[2], 0.0);
        assert!(g[3] < 0.0);
    }

    #[test]
    fn js_constant_critic() {
        // f = 0 gives -2 log 2 for any batch.
        assert!((js_value(&const_scores(5, 0.0)) + 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn score_gradients_match_finite_differences() {
        let s = random_scores(6, 1.5, 7);
        let h = 1e-5;
        assert_close(
            &nwj_gradient(&s),
            &finite_difference(|s| nwj_estimate(s).unwrap().value_nats, &s, h),
            1e-6,
        );
        assert_close(
            &nce_gradient(&s),
            &finite_difference(|s| nce_estimate(s).unwrap().value_nats, &s, h),
            1e-6,
        );
        assert_close(&js_gradient(&s), &finite_difference(js_value, &s, h), 1e-6);
        assert_close(
            &smile_gradient(&s, 2.0),
            &finite_difference(|s| smile_estimate(s, 2.0).unwrap().value_nats, &s, h),
            1e-6,
        );
    }
}
