use crate::error::{Error, Result};

/// Per-step statistics over independent runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RerunStats {
    pub runs: usize,
    pub mean: Vec<f64>,
    /// Unbiased (n - 1) variance.
    pub variance: Vec<f64>,
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Mean and variance across `traces` at every step.
pub fn per_step_stats(traces: &[Vec<f64>], min_runs: usize) -> Result<RerunStats> {
    if traces.len() < min_runs {
        return Err(Error::config(format!(
            "need at least {min_runs} independent runs, got {}",
            traces.len()
        )));
    }
    let steps = traces[0].len();
    if traces.iter().any(|t| t.len() != steps) {
        return Err(Error::shape("traces have different lengths"));
    }
    let mut mean = Vec::with_capacity(steps);
    let mut variance = Vec::with_capacity(steps);
    let mut column = vec![0.0; traces.len()];
    for s in 0..steps {
        for (c, t) in column.iter_mut().zip(traces) {
            *c = t[s];
        }
        mean.push(column.iter().sum::<f64>() / column.len() as f64);
        variance.push(sample_variance(&column));
    }
    Ok(RerunStats {
        runs: traces.len(),
        mean,
        variance,
    })
}
