//! Channel simulators, power normalization, Eb/N0 conversion and the
//! closed-form mutual information of the two reference channels.
//!
//! Signals are real-valued; a block of `n` real dimensions is one codeword.

use crate::error::{Error, Result};
use crate::sampling::SampleBatch;
use crate::tensor::{Matrix, Rng};

/// Additive white Gaussian noise with per-dimension variance `noise_var`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnChannel {
    dim: usize,
    noise_var: f64,
}

impl AwgnChannel {
    pub fn new(dim: usize, noise_var: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("AWGN dimension must be positive"));
        }
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(Error::config(format!(
                "AWGN noise variance must be positive, got {noise_var}"
            )));
        }
        Ok(AwgnChannel { dim, noise_var })
    }

    /// The degenerate zero-noise channel, `y = x`.
    pub fn noiseless(dim: usize) -> Self {
        AwgnChannel {
            dim,
            noise_var: 0.0,
        }
    }

    /// Channel whose noise matches `ebno_db` for `bits_per_dim` information bits per real dimension.
    pub fn from_ebno(dim: usize, ebno_db: f64, bits_per_dim: f64) -> Result<Self> {
        Self::new(dim, ebno_db_to_noise_var(ebno_db, bits_per_dim)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Fresh noise draw for `rows` codewords.
    pub fn sample_noise(&self, rows: usize, rng: &mut Rng) -> Matrix {
        let sd = self.noise_var.sqrt();
        let data = (0..rows * self.dim).map(|_| sd * rng.normal()).collect();
        Matrix::from_vec(rows, self.dim, data).expect("noise shape")
    }

    pub fn transmit(&self, x: &Matrix, rng: &mut Rng) -> Result<Matrix> {
        if x.cols() != self.dim {
            return Err(Error::shape(format!(
                "channel carries {} dimensions, codewords have {}",
                self.dim,
                x.cols()
            )));
        }
        if self.noise_var == 0.0 {
            return Ok(x.clone());
        }
        x.add(&self.sample_noise(x.rows(), rng))
    }
}

/// Binary symmetric channel with crossover probability `flip_prob`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BscChannel {
    flip_prob: f64,
}

impl BscChannel {
    pub fn new(flip_prob: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&flip_prob) {
            return Err(Error::config(format!(
                "BSC flip probability must lie in [0, 0.5], got {flip_prob}"
            )));
        }
        Ok(BscChannel { flip_prob })
    }

    pub fn flip_prob(&self) -> f64 {
        self.flip_prob
    }

    pub fn transmit_bit(&self, bit: bool, rng: &mut Rng) -> bool {
        bit ^ rng.bernoulli(self.flip_prob)
    }
}

/// `k` i.i.d. pairs with `x ~ N(0, signal_var I_d)` and `y = x + z`, `z ~ N(0, noise_var I_d)`.
pub fn sample_awgn_joint(
    signal_var: f64,
    noise_var: f64,
    dim: usize,
    k: usize,
    rng: &mut Rng,
) -> Result<SampleBatch> {
    if k < 2 {
        return Err(Error::config("a joint batch needs at least two pairs"));
    }
    if !(signal_var > 0.0) || !(noise_var >= 0.0) || dim == 0 {
        return Err(Error::config(format!(
            "invalid AWGN source: signal_var={signal_var}, noise_var={noise_var}, dim={dim}"
        )));
    }
    let (sx, sz) = (signal_var.sqrt(), noise_var.sqrt());
    let mut x = Matrix::zeros(k, dim);
    let mut y = Matrix::zeros(k, dim);
    for i in 0..k {
        for c in 0..dim {
            let xv = sx * rng.normal();
            let zv = if noise_var == 0.0 {
                0.0
            } else {
                sz * rng.normal()
            };
            x.set(i, c, xv);
            y.set(i, c, xv + zv);
        }
    }
    SampleBatch::new(x, y)
}

/// `(d/2) log2(1 + signal_var / noise_var)`.
pub fn awgn_true_mi_bits(signal_var: f64, noise_var: f64, dim: usize) -> f64 {
    0.5 * dim as f64 * (signal_var / noise_var).ln_1p() / std::f64::consts::LN_2
}

/// `k` pairs with `x ~ Bern(1/2)` and `y = x xor z`, `z ~ Bern(flip_prob)`, embedded as 0.0 / 1.0.
pub fn sample_bsc_joint(flip_prob: f64, k: usize, rng: &mut Rng) -> Result<SampleBatch> {
    let channel = BscChannel::new(flip_prob)?;
    if k < 2 {
        return Err(Error::config("a joint batch needs at least two pairs"));
    }
    let mut x = Matrix::zeros(k, 1);
    let mut y = Matrix::zeros(k, 1);
    for i in 0..k {
        let bit = rng.bernoulli(0.5);
        let out = channel.transmit_bit(bit, rng);
        x.set(i, 0, f64::from(u8::from(bit)));
        y.set(i, 0, f64::from(u8::from(out)));
    }
    SampleBatch::new(x, y)
}

/// Binary entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy_bits(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

/// `1 - h_b(flip_prob)`.
pub fn bsc_true_mi_bits(flip_prob: f64) -> f64 {
    1.0 - binary_entropy_bits(flip_prob)
}

/// Noise variance per real dimension at `ebno_db`, for unit signal power per
/// real dimension and `bits_per_dim` information bits per real dimension:
/// `1 / (2 R 10^(ebno_db / 10))`.
pub fn ebno_db_to_noise_var(ebno_db: f64, bits_per_dim: f64) -> Result<f64> {
    if !(bits_per_dim > 0.0) {
        return Err(Error::config(format!(
            "rate must be positive, got {bits_per_dim}"
        )));
    }
    Ok(1.0 / (2.0 * bits_per_dim * 10f64.powf(ebno_db / 10.0)))
}

/// How codeword power is constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerNormalization {
    /// One scalar for the whole batch: mean of `x^2` over all entries is 1.
    #[default]
    BatchAverage,
    /// Every codeword scaled to mean square 1 over its own dimensions.
    PerCodeword,
}

impl PowerNormalization {
    pub fn apply(self, x: &Matrix) -> Result<Matrix> {
        match self {
            PowerNormalization::BatchAverage => normalize_power(x),
            PowerNormalization::PerCodeword => {
                let mut out = x.clone();
                for r in 0..x.rows() {
                    let row = out.row_mut(r);
                    let ms = row.iter().map(|v| v * v).sum::<f64>() / row.len() as f64;
                    if !(ms > 0.0) {
                        return Err(Error::numeric(format!("codeword {r} is all zero")));
                    }
                    let s = ms.sqrt().recip();
                    row.iter_mut().for_each(|v| *v *= s);
                }
                Ok(out)
            }
        }
    }

    /// Pulls `grad` (with respect to the normalized output) back to the raw
    /// input. `input` and `output` are the pair seen by [`apply`](Self::apply).
    pub fn backward(self, input: &Matrix, output: &Matrix, grad: &Matrix) -> Matrix {
        // x = u / r with r = sqrt(mean u^2):  du = (g - x * mean(g . x)) / r
        let pull = |u: &[f64], x: &[f64], g: &[f64], du: &mut [f64]| {
            let n = u.len() as f64;
            let r = (u.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
            let gx = g.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / n;
            for ((d, &gi), &xi) in du.iter_mut().zip(g).zip(x) {
                *d = (gi - xi * gx) / r;
            }
        };
        let mut du = Matrix::zeros(input.rows(), input.cols());
        match self {
            PowerNormalization::BatchAverage => {
                pull(
                    input.as_slice(),
                    output.as_slice(),
                    grad.as_slice(),
                    du.as_mut_slice(),
                );
            }
            PowerNormalization::PerCodeword => {
                for r in 0..input.rows() {
                    pull(input.row(r), output.row(r), grad.row(r), du.row_mut(r));
                }
            }
        }
        du
    }
}

/// Scales the batch by one scalar so the mean of `x^2` over every entry is 1.
pub fn normalize_power(x: &Matrix) -> Result<Matrix> {
    let ms = x.mean_square();
    if !(ms > 0.0) || !ms.is_finite() {
        return Err(Error::numeric("cannot normalize an all-zero batch"));
    }
    Ok(x.scale(ms.sqrt().recip()))
}

/// A source of joint `(x, y)` draws with known mutual information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointSource {
    /// Gaussian input through AWGN.
    Gaussian {
        signal_var: f64,
        noise_var: f64,
        dim: usize,
    },
    /// Uniform bit through a BSC.
    Binary { flip_prob: f64 },
}

impl JointSource {
    pub fn gaussian_snr(snr: f64, dim: usize) -> Self {
        JointSource::Gaussian {
            signal_var: snr,
            noise_var: 1.0,
            dim,
        }
    }

    pub fn sample(&self, k: usize, rng: &mut Rng) -> Result<SampleBatch> {
        match *self {
            JointSource::Gaussian {
                signal_var,
                noise_var,
                dim,
            } => sample_awgn_joint(signal_var, noise_var, dim, k, rng),
            JointSource::Binary { flip_prob } => sample_bsc_joint(flip_prob, k, rng),
        }
    }

    pub fn true_mi_bits(&self) -> f64 {
        match *self {
            JointSource::Gaussian {
                signal_var,
                noise_var,
                dim,
            } => awgn_true_mi_bits(signal_var, noise_var, dim),
            JointSource::Binary { flip_prob } => bsc_true_mi_bits(flip_prob),
        }
    }

    /// Columns of `x` and of `y`.
    pub fn dims(&self) -> (usize, usize) {
        match *self {
            JointSource::Gaussian { dim, .. } => (dim, dim),
            JointSource::Binary { .. } => (1, 1),
        }
    }
}
