//! Joint batches and the all-pairs layout that feeds a joint critic.
//!
//! From `K` joint draws `(x_i, y_i)` the critic is evaluated on every pair
//! `(x_i, y_j)`. Diagonal entries score joint samples; the `K(K-1)`
//! off-diagonal entries score samples from the product of marginals.

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// `K` aligned joint draws: row `i` of `x` pairs with row `i` of `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    x: Matrix,
    y: Matrix,
}

impl SampleBatch {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::shape(format!(
                "x has {} rows but y has {}",
                x.rows(),
                y.rows()
            )));
        }
        Ok(SampleBatch { x, y })
    }

    pub fn k(&self) -> usize {
        self.x.rows()
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    /// Copy with `y` rolled by one row, pairing `x_i` with `y_{i+1}`.
    pub fn shifted(&self) -> SampleBatch {
        let k = self.k();
        let mut y = Matrix::zeros(k, self.y.cols());
        for i in 0..k {
            y.row_mut(i).copy_from_slice(self.y.row((i + 1) % k));
        }
        SampleBatch {
            x: self.x.clone(),
            y,
        }
    }
}

/// Critic input rows: row `i*K + j` is `[x_i | y_j]`.
pub fn critic_inputs(batch: &SampleBatch) -> Result<Matrix> {
    let k = batch.k();
    if k < 2 {
        return Err(Error::config("all-pairs sampling needs K >= 2"));
    }
    let (dx, dy) = (batch.x.cols(), batch.y.cols());
    let mut out = Matrix::zeros(k * k, dx + dy);
    for i in 0..k {
        let xi = batch.x.row(i);
        for j in 0..k {
            let row = out.row_mut(i * k + j);
            row[..dx].copy_from_slice(xi);
            row[dx..].copy_from_slice(batch.y.row(j));
        }
    }
    Ok(out)
}

/// Sums the critic-input gradient back onto the joint batch:
/// `d x_i = sum_j g[(i, j), x-part]` and `d y_j = sum_i g[(i, j), y-part]`.
pub fn fold_input_grads(grad: &Matrix, k: usize, dx: usize) -> Result<(Matrix, Matrix)> {
    if grad.rows() != k * k || grad.cols() < dx {
        return Err(Error::shape(format!(
            "input gradient {:?} does not match K={k}, dx={dx}",
            grad.shape()
        )));
    }
    let dy = grad.cols() - dx;
    let mut gx = Matrix::zeros(k, dx);
    let mut gy = Matrix::zeros(k, dy);
    for i in 0..k {
        for j in 0..k {
            let row = grad.row(i * k + j);
            for (a, b) in gx.row_mut(i).iter_mut().zip(&row[..dx]) {
                *a += b;
            }
            for (a, b) in gy.row_mut(j).iter_mut().zip(&row[dx..]) {
                *a += b;
            }
        }
    }
    Ok((gx, gy))
}

/// `K x K` critic scores, entry `(i, j) = f(x_i, y_j)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    k: usize,
    scores: Vec<f64>,
}

impl ScoreMatrix {
    /// Splits a flat `K^2` score vector into its joint/marginal layout.
    pub fn from_flat(scores: Vec<f64>, k: usize) -> Result<Self> {
        if k < 2 || scores.len() != k * k {
            return Err(Error::shape(format!(
                "{} scores do not form a {k}x{k} score matrix",
                scores.len()
            )));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::numeric(format!("non-finite critic score at {i}")));
        }
        Ok(ScoreMatrix { k, scores })
    }

    /// Inverse of [`joint`](Self::joint) plus [`marginal`](Self::marginal).
    pub fn assemble(joint: &[f64], marginal: &[f64]) -> Result<Self> {
        let k = joint.len();
        if k < 2 || marginal.len() != k * (k - 1) {
            return Err(Error::shape("joint/marginal view lengths are inconsistent"));
        }
        let mut scores = Vec::with_capacity(k * k);
        let mut off = marginal.iter();
        for i in 0..k {
            for j in 0..k {
                scores.push(if i == j {
                    joint[i]
                } else {
                    *off.next().unwrap()
                });
            }
        }
        Self::from_flat(scores, k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.scores
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.scores[i * self.k..(i + 1) * self.k]
    }

    /// Diagonal (joint) scores.
    pub fn joint(&self) -> Vec<f64> {
        (0..self.k).map(|i| self.get(i, i)).collect()
    }

    /// Off-diagonal (marginal) scores in row-major order, diagonal skipped.
    pub fn marginal(&self) -> Vec<f64> {
        self.marginal_iter().collect()
    }

    pub fn marginal_iter(&self) -> impl Iterator<Item = f64> + Clone + '_ {
        let k = self.k;
        self.scores
            .iter()
            .enumerate()
            .filter(move |(idx, _)| idx / k != idx % k)
            .map(|(_, &s)| s)
    }

    pub fn num_marginal(&self) -> usize {
        self.k * (self.k - 1)
    }

    #[inline]
    pub fn is_diagonal(&self, flat_index: usize) -> bool {
        flat_index / self.k == flat_index % self.k
    }
}

/// Alias kept for the flat-to-layout entry point.
pub fn split_scores(flat: Vec<f64>, k: usize) -> Result<ScoreMatrix> {
    ScoreMatrix::from_flat(flat, k)
}
