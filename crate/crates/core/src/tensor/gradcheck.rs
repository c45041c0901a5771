use crate::error::Result;

use super::matrix::Matrix;
use super::mlp::Mlp;
use super::rng::Rng;

/// Gradients smaller than this in both routes are compared absolutely.
const ABS_FLOOR: f64 = 1e-6;

/// Minimum number of parameters probed by [`gradient_check`].
pub const MIN_PROBES: usize = 200;

/// `|a - b| / max(|a|, |b|, 1e-6)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(ABS_FLOOR)
}

/// Compares backpropagated parameter gradients against central differences.
///
/// `loss_fn` maps network outputs to `(loss, d loss / d outputs)`. At least
/// [`MIN_PROBES`] parameters (all of them for small networks) are perturbed
/// by `±h`; the largest relative error is returned.
pub fn gradient_check<F>(
    net: &Mlp,
    loss_fn: F,
    inputs: &Matrix,
    h: f64,
    rng: &mut Rng,
) -> Result<f64>
where
    F: Fn(&Matrix) -> Result<(f64, Matrix)>,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let (out, cache) = net.forward(inputs)?;
    let (_, out_grad) = loss_fn(&out)?;
    let (analytic, _) = net.backward(&cache, &out_grad)?;

    let n = net.num_params();
    let probes: Vec<usize> = if n <= MIN_PROBES {
        (0..n).collect()
    } else {
        (0..MIN_PROBES).map(|_| rng.below(n)).collect()
    };

    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for i in probes {
        let original = probe.params()[i];
        probe.params_mut()[i] = original + h;
        let plus = loss_fn(&probe.forward(inputs)?.0)?.0;
        probe.params_mut()[i] = original - h;
        let minus = loss_fn(&probe.forward(inputs)?.0)?.0;
        probe.params_mut()[i] = original;
        let numeric = (plus - minus) / (2.0 * h);
        worst = worst.max(relative_error(analytic.0[i], numeric));
    }
    Ok(worst)
}
