use crate::error::{Error, Result};

use super::matrix::{gemm, Matrix, Operand};
use super::rng::Rng;

/// Activation applied to the last layer; hidden layers are always ReLU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputActivation {
    Identity,
    /// `tau * tanh(z)`, so outputs stay in `[-tau, tau]`.
    ScaledTanh(f64),
}

/// Feedforward network with ReLU hidden layers.
///
/// All parameters live in one flat vector, layer by layer: the
/// `fan_in x fan_out` weight block (row-major) followed by the `fan_out`
/// biases. A forward pass computes `A_l = act(A_{l-1} W_l + b_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
    offsets: Vec<usize>,
    output: OutputActivation,
}

/// Per-layer activations of one forward pass; index 0 is the input batch.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Matrix>,
}

impl ForwardCache {
    pub fn input(&self) -> &Matrix {
        &self.activations[0]
    }

    pub fn output(&self) -> &Matrix {
        self.activations
            .last()
            .expect("cache holds at least the input")
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.activations
    }
}

/// Gradient with the same flat layout as [`Mlp::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads(pub Vec<f64>);

impl ParamGrads {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn layout(dims: &[usize]) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(dims.len() - 1);
    let mut total = 0;
    for w in dims.windows(2) {
        offsets.push(total);
        total += w[0] * w[1] + w[1];
    }
    (offsets, total)
}

fn validate(dims: &[usize], output: OutputActivation) -> Result<()> {
    if dims.len() < 3 {
        return Err(Error::config(format!(
            "network needs input, at least one hidden and an output layer, got {dims:?}"
        )));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::config(format!(
            "layer sizes must be positive: {dims:?}"
        )));
    }
    if let OutputActivation::ScaledTanh(tau) = output {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::config(format!(
                "tanh scale must be positive, got {tau}"
            )));
        }
    }
    Ok(())
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(dims: &[usize], output: OutputActivation, rng: &mut Rng) -> Result<Self> {
        validate(dims, output)?;
        let (offsets, total) = layout(dims);
        let mut params = vec![0.0; total];
        for (l, w) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let start = offsets[l];
            for p in &mut params[start..start + fan_in * fan_out] {
                *p = rng.uniform_in(-bound, bound);
            }
        }
        Ok(Mlp {
            dims: dims.to_vec(),
            params,
            offsets,
            output,
        })
    }

    pub fn from_params(dims: &[usize], output: OutputActivation, params: Vec<f64>) -> Result<Self> {
        validate(dims, output)?;
        let (offsets, total) = layout(dims);
        if params.len() != total {
            return Err(Error::shape(format!(
                "network {dims:?} has {total} parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::numeric("non-finite parameter"));
        }
        Ok(Mlp {
            dims: dims.to_vec(),
            params,
            offsets,
            output,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    fn weights(&self, layer: usize) -> &[f64] {
        let (fi, fo) = (self.dims[layer], self.dims[layer + 1]);
        let s = self.offsets[layer];
        &self.params[s..s + fi * fo]
    }

    fn biases(&self, layer: usize) -> &[f64] {
        let (fi, fo) = (self.dims[layer], self.dims[layer + 1]);
        let s = self.offsets[layer] + fi * fo;
        &self.params[s..s + fo]
    }

    /// Runs the batch `inputs` (one sample per row) through the network.
    pub fn forward(&self, inputs: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::shape(format!(
                "network expects {} input columns, got {}",
                self.input_dim(),
                inputs.cols()
            )));
        }
        let batch = inputs.rows();
        let last = self.num_layers() - 1;
        let mut activations = Vec::with_capacity(self.dims.len());
        activations.push(inputs.clone());
        for l in 0..self.num_layers() {
            let (fi, fo) = (self.dims[l], self.dims[l + 1]);
            let mut z = Matrix::zeros(batch, fo);
            let bias = self.biases(l);
            for r in 0..batch {
                z.row_mut(r).copy_from_slice(bias);
            }
            gemm(
                Operand::plain(&activations[l]),
                Operand::raw(self.weights(l), fi, fo),
                z.as_mut_slice(),
                1.0,
            );
            let act = z.as_mut_slice();
            if l < last {
                act.iter_mut().for_each(|v| *v = v.max(0.0));
            } else if let OutputActivation::ScaledTanh(tau) = self.output {
                act.iter_mut().for_each(|v| *v = tau * v.tanh());
            }
            activations.push(z);
        }
        let out = activations.last().unwrap();
        out.ensure_finite("network forward")?;
        Ok((out.clone(), ForwardCache { activations }))
    }

    /// Gradients of `<output_grad, outputs>` with respect to every parameter
    /// and every input entry. The ReLU derivative at exactly zero is zero.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_grad: &Matrix,
    ) -> Result<(ParamGrads, Matrix)> {
        let acts = &cache.activations;
        if acts.len() != self.dims.len() || acts.iter().zip(&self.dims).any(|(a, &d)| a.cols() != d)
        {
            return Err(Error::shape("forward cache does not match this network"));
        }
        let batch = cache.input().rows();
        if output_grad.shape() != (batch, self.output_dim()) {
            return Err(Error::shape(format!(
                "output gradient is {:?}, expected {:?}",
                output_grad.shape(),
                (batch, self.output_dim())
            )));
        }
        output_grad.ensure_finite("output gradient")?;

        let mut grads = vec![0.0; self.params.len()];
        let mut delta = output_grad.clone();
        if let OutputActivation::ScaledTanh(tau) = self.output {
            for (d, &o) in delta
                .as_mut_slice()
                .iter_mut()
                .zip(cache.output().as_slice())
            {
                *d *= tau - o * o / tau;
            }
        }
        for l in (0..self.num_layers()).rev() {
            let (fi, fo) = (self.dims[l], self.dims[l + 1]);
            let s = self.offsets[l];
            let (wgrad, rest) = grads[s..].split_at_mut(fi * fo);
            gemm(
                Operand::transposed(&acts[l]),
                Operand::plain(&delta),
                wgrad,
                0.0,
            );
            let bgrad = &mut rest[..fo];
            for row in delta.iter_rows() {
                for (b, d) in bgrad.iter_mut().zip(row) {
                    *b += d;
                }
            }
            let mut prev = Matrix::zeros(batch, fi);
            gemm(
                Operand::plain(&delta),
                Operand::raw(self.weights(l), fi, fo).t(),
                prev.as_mut_slice(),
                0.0,
            );
            if l > 0 {
                for (p, &a) in prev.as_mut_slice().iter_mut().zip(acts[l].as_slice()) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::numeric("non-finite parameter gradient"));
        }
        delta.ensure_finite("input gradient")?;
        Ok((ParamGrads(grads), delta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_sized_critic_parameter_count() {
        let net = Mlp::new(
            &[2, 256, 256, 1],
            OutputActivation::Identity,
            &mut Rng::new(0),
        )
        .unwrap();
        assert_eq!(net.num_params(), 66817);
        for l in 0..3 {
            assert!(net.biases(l).iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = Mlp::new(&[3, 8, 4], OutputActivation::Identity, &mut Rng::new(5)).unwrap();
        let b = Mlp::new(&[3, 8, 4], OutputActivation::Identity, &mut Rng::new(5)).unwrap();
        assert!(a
            .params()
            .iter()
            .zip(b.params())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        let bound = (6.0f64 / 11.0).sqrt();
        assert!(a.weights(0).iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn rejects_bad_dims() {
        let mut rng = Rng::new(0);
        assert!(matches!(
            Mlp::new(&[2, 1], OutputActivation::Identity, &mut rng),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Mlp::new(&[2, 0, 1], OutputActivation::Identity, &mut rng),
            Err(Error::Config(_))
        ));
        assert!(Mlp::new(&[2, 3, 1], OutputActivation::ScaledTanh(0.0), &mut rng).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::from_params(
            &[3, 5, 2],
            OutputActivation::Identity,
            vec![0.0; 3 * 5 + 5 + 5 * 2 + 2],
        )
        .unwrap();
        let x = Matrix::filled(4, 3, 1.5);
        let (y, _) = net.forward(&x).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_chain_passes_positive_input() {
        // 1-1-1-1 with unit weights and zero biases.
        let net = Mlp::from_params(
            &[1, 1, 1, 1],
            OutputActivation::Identity,
            vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        )
        .unwrap();
        let (y, _) = net.forward(&Matrix::filled(1, 1, 2.0)).unwrap();
        assert_eq!(y.as_slice(), &[2.0]);
    }

    #[test]
    fn scaled_tanh_saturates_within_bound() {
        let net = Mlp::from_params(
            &[1, 1, 1],
            OutputActivation::ScaledTanh(6.0),
            vec![1e6, 0.0, 1e6, 0.0],
        )
        .unwrap();
        let (y, _) = net.forward(&Matrix::filled(1, 1, 1e3)).unwrap();
        assert!(y.get(0, 0) <= 6.0 && y.get(0, 0) >= -6.0);
        assert_eq!(y.get(0, 0), 6.0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let net = Mlp::new(&[2, 4, 1], OutputActivation::Identity, &mut Rng::new(1)).unwrap();
        assert!(matches!(
            net.forward(&Matrix::zeros(3, 5)),
            Err(Error::Shape(_))
        ));
        let (_, cache) = net.forward(&Matrix::zeros(3, 2)).unwrap();
        assert!(matches!(
            net.backward(&cache, &Matrix::zeros(2, 1)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn zero_output_grad_gives_zero_grads() {
        let net = Mlp::new(&[2, 4, 4, 1], OutputActivation::Identity, &mut Rng::new(1)).unwrap();
        let x = Matrix::from_rows(&[vec![0.3, -0.2], vec![1.0, 2.0]]).unwrap();
        let (_, cache) = net.forward(&x).unwrap();
        let (g, gx) = net.backward(&cache, &Matrix::zeros(2, 1)).unwrap();
        assert_eq!(g.max_abs(), 0.0);
        assert!(gx.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_is_bitwise_deterministic() {
        let net = Mlp::new(
            &[4, 16, 16, 1],
            OutputActivation::ScaledTanh(6.0),
            &mut Rng::new(3),
        )
        .unwrap();
        let mut rng = Rng::new(9);
        let x = Matrix::from_vec(10, 4, (0..40).map(|_| rng.normal()).collect()).unwrap();
        let (a, _) = net.forward(&x).unwrap();
        let (b, _) = net.forward(&x).unwrap();
        assert!(a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}
