use crate::error::Result;
use crate::sampling::{critic_inputs, fold_input_grads, SampleBatch, ScoreMatrix};
use crate::tensor::{
    ForwardCache, Matrix, Mlp, Nadam, NadamConfig, OutputActivation, ParamGrads, Rng,
};

use super::{
    estimate, objective, EstimateReport, EstimatorKind, EstimatorSpec, EstimatorState, Objective,
};

/// Joint critic `f(x, y)` on concatenated inputs, with its optimizer and the
/// state of the estimator it is trained for.
#[derive(Debug, Clone)]
pub struct Critic {
    net: Mlp,
    opt: Nadam,
    spec: EstimatorSpec,
    state: EstimatorState,
    dx: usize,
}

/// Objective gradient with respect to the joint batch, critic held fixed.
#[derive(Debug, Clone)]
pub struct CriticStep {
    pub report: EstimateReport,
    pub grad_x: Matrix,
    pub grad_y: Matrix,
}

impl Critic {
    /// RJE critics get a `tau * tanh` output so they stay inside the bounded family.
    pub fn new(
        dx: usize,
        dy: usize,
        hidden: &[usize],
        spec: EstimatorSpec,
        adam: NadamConfig,
        rng: &mut Rng,
    ) -> Result<Self> {
        spec.validate()?;
        let output = match spec.kind {
            EstimatorKind::Rje => OutputActivation::ScaledTanh(spec.tau),
            _ => OutputActivation::Identity,
        };
        let mut dims = vec![dx + dy];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let net = Mlp::new(&dims, output, rng)?;
        let opt = Nadam::new(net.num_params(), adam);
        Ok(Critic {
            net,
            opt,
            spec,
            state: EstimatorState::default(),
            dx,
        })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn spec(&self) -> &EstimatorSpec {
        &self.spec
    }

    pub fn state(&self) -> &EstimatorState {
        &self.state
    }

    /// Scores every `(x_i, y_j)` pair in one forward pass.
    pub fn scores(&self, batch: &SampleBatch) -> Result<(ScoreMatrix, ForwardCache)> {
        let inputs = critic_inputs(batch)?;
        let (out, cache) = self.net.forward(&inputs)?;
        Ok((ScoreMatrix::from_flat(out.into_vec(), batch.k())?, cache))
    }

    /// Estimate on `batch` without touching any state.
    pub fn evaluate(&self, batch: &SampleBatch) -> Result<EstimateReport> {
        let (scores, _) = self.scores(batch)?;
        estimate(&scores, &self.spec, &self.state)
    }

    fn objective_and_cache(&mut self, batch: &SampleBatch) -> Result<(Objective, ForwardCache)> {
        let (scores, cache) = self.scores(batch)?;
        let obj = objective(&scores, &self.spec, &mut self.state)?;
        Ok((obj, cache))
    }

    /// Gradient of the estimator objective with respect to the critic
    /// parameters (ascent direction), without applying it.
    pub fn param_gradient(&mut self, batch: &SampleBatch) -> Result<(EstimateReport, ParamGrads)> {
        let (obj, cache) = self.objective_and_cache(batch)?;
        let k2 = obj.score_grad.len();
        let out_grad = Matrix::from_vec(k2, 1, obj.score_grad)?;
        let (grads, _) = self.net.backward(&cache, &out_grad)?;
        Ok((obj.report, grads))
    }

    /// One NADAM ascent step on the critic. Returns the estimate measured
    /// before the update.
    pub fn train_step(&mut self, batch: &SampleBatch, lr: f64) -> Result<EstimateReport> {
        let (report, grads) = self.param_gradient(batch)?;
        let descent: Vec<f64> = grads.0.iter().map(|g| -g).collect();
        self.opt.step(self.net.params_mut(), &descent, lr)?;
        Ok(report)
    }

    /// Objective gradient with respect to the batch itself.
    pub fn input_gradients(&mut self, batch: &SampleBatch) -> Result<CriticStep> {
        let (obj, cache) = self.objective_and_cache(batch)?;
        let k2 = obj.score_grad.len();
        let out_grad = Matrix::from_vec(k2, 1, obj.score_grad)?;
        let (_, gin) = self.net.backward(&cache, &out_grad)?;
        let (grad_x, grad_y) = fold_input_grads(&gin, batch.k(), self.dx)?;
        Ok(CriticStep {
            report: obj.report,
            grad_x,
            grad_y,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::sample_awgn_joint;

    #[test]
    fn zero_learning_rate_keeps_critic() {
        let mut rng = Rng::new(1);
        let mut c = Critic::new(
            2,
            2,
            &[8, 8],
            EstimatorSpec::nwj(),
            NadamConfig::default(),
            &mut rng,
        )
        .unwrap();
        let before = c.net().params().to_vec();
        let batch = sample_awgn_joint(1.0, 1.0, 2, 8, &mut rng).unwrap();
        c.train_step(&batch, 0.0).unwrap();
        assert_eq!(c.net().params(), &before[..]);
    }

    #[test]
    fn rje_critic_is_bounded() {
        let mut rng = Rng::new(2);
        let c = Critic::new(
            1,
            1,
            &[8, 8],
            EstimatorSpec::rje(6.0),
            NadamConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(
            c.net().output_activation(),
            OutputActivation::ScaledTanh(6.0)
        );
    }
}
