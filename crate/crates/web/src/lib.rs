//! WebAssembly bindings for the demo page in `www/`.

use wasm_bindgen::prelude::*;

use mibench::channels::{AwgnChannel, JointSource, PowerNormalization};
use mibench::coding::{
    evaluate_bler, export_constellation, train_critic, train_decoder, train_encoder_alternating, CodedChannel, Decoder,
    Encoder, MessageSet, RunRngs, TrainingSchedule,
};
use mibench::estimators::{rje_inner_bound, Critic, EstimatorKind, EstimatorSpec};
use mibench::harness::experiments::{a_grid, lemma_samples};
use mibench::harness::{Experiment, ExperimentConfig};
use mibench::tensor::{NadamConfig, Rng, Stream};

fn js_err(e: mibench::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// The estimator as the command-line experiments configure it by default.
fn default_spec(name: &str) -> Result<EstimatorSpec, JsError> {
    let kind: EstimatorKind = name.parse().map_err(js_err)?;
    let defaults = ExperimentConfig::defaults(Experiment::AwgnEstimators);
    Ok(defaults.setup(kind).map_or(EstimatorSpec::new(kind), |s| s.spec))
}

/// The reverse-Jensen bound over an `a` grid for one random sample set.
#[wasm_bindgen]
pub struct LemmaCurve {
    a: Vec<f64>,
    bound: Vec<f64>,
    b: f64,
    log_mean: f64,
}

#[wasm_bindgen]
impl LemmaCurve {
    #[wasm_bindgen(getter)]
    pub fn a(&self) -> Vec<f64> {
        self.a.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn bound(&self) -> Vec<f64> {
        self.bound.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn b(&self) -> f64 {
        self.b
    }

    #[wasm_bindgen(getter, js_name = logMean)]
    pub fn log_mean(&self) -> f64 {
        self.log_mean
    }
}

/// `family` is one of `lognormal`, `exponential`, `constant`, `two_point`.
#[wasm_bindgen(js_name = lemmaCurve)]
pub fn lemma_curve(family: &str, samples: usize, points: usize, a_max_factor: f64, seed: u64) -> Result<LemmaCurve, JsError> {
    let mut rng = Rng::stream(seed, Stream::Other(1));
    let x = lemma_samples(family, samples.max(1), &mut rng).map_err(js_err)?;
    let n = x.len() as f64;
    let m1 = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| v * v).sum::<f64>() / n;
    let b = (m2 / (m1 * m1)).max(1.0);
    let a = a_grid(b, a_max_factor, points.max(1));
    let bound = a.iter().map(|&a| rje_inner_bound(&x, a, b)).collect::<mibench::Result<_>>().map_err(js_err)?;
    Ok(LemmaCurve {
        a,
        bound,
        b,
        log_mean: m1.ln(),
    })
}

/// One critic learning the MI of a Gaussian channel, stepped from the page.
#[wasm_bindgen]
pub struct EstimatorSession {
    critic: Critic,
    source: JointSource,
    rngs: RunRngs,
    batch: usize,
    lr: f64,
}

#[wasm_bindgen]
impl EstimatorSession {
    #[wasm_bindgen(constructor)]
    pub fn new(estimator: &str, snr: f64, dim: usize, hidden: usize, batch: usize, lr: f64, seed: u64) -> Result<EstimatorSession, JsError> {
        let source = JointSource::gaussian_snr(snr, dim);
        let (dx, dy) = source.dims();
        let mut init = Rng::stream(seed, Stream::Init);
        let critic = Critic::new(dx, dy, &[hidden, hidden], default_spec(estimator)?, NadamConfig::default(), &mut init)
            .map_err(js_err)?;
        Ok(EstimatorSession {
            critic,
            source,
            rngs: RunRngs::new(seed),
            batch,
            lr,
        })
    }

    #[wasm_bindgen(js_name = trueMiBits)]
    pub fn true_mi_bits(&self) -> f64 {
        self.source.true_mi_bits()
    }

    /// Runs `steps` training steps and returns their estimates in bits.
    pub fn train(&mut self, steps: usize) -> Result<Vec<f64>, JsError> {
        train_critic(&mut self.critic, &mut self.source, steps, self.batch, self.lr, &mut self.rngs).map_err(js_err)
    }
}

/// A reduced autoencoder: 16 messages in two dimensions.
#[wasm_bindgen]
pub struct AutoencoderSession {
    encoder: Encoder,
    critic: Critic,
    decoder: Decoder,
    channel: AwgnChannel,
    rngs: RunRngs,
    eval: Rng,
    schedule: TrainingSchedule,
}

#[wasm_bindgen]
impl AutoencoderSession {
    #[wasm_bindgen(constructor)]
    pub fn new(estimator: &str, ebno_db: f64, hidden: usize, seed: u64) -> Result<AutoencoderSession, JsError> {
        let messages = MessageSet::new(16, 2).map_err(js_err)?;
        let adam = NadamConfig::default();
        let mut init = Rng::stream(seed, Stream::Init);
        let layers = [hidden, hidden];
        let encoder = Encoder::new(messages, &layers, PowerNormalization::BatchAverage, adam, &mut init).map_err(js_err)?;
        let critic = Critic::new(2, 2, &layers, default_spec(estimator)?, adam, &mut init).map_err(js_err)?;
        let decoder = Decoder::new(messages, &layers, adam, &mut init).map_err(js_err)?;
        let schedule = TrainingSchedule {
            ebno_db,
            ..TrainingSchedule::default()
        };
        Ok(AutoencoderSession {
            encoder,
            critic,
            decoder,
            channel: AwgnChannel::from_ebno(2, ebno_db, messages.rate()).map_err(js_err)?,
            rngs: RunRngs::new(seed),
            eval: Rng::stream(seed, Stream::Eval),
            schedule,
        })
    }

    /// Critic steps on the current code; returns the estimates in bits.
    #[wasm_bindgen(js_name = trainCritic)]
    pub fn train_critic(&mut self, steps: usize) -> Result<Vec<f64>, JsError> {
        let mut sampler = CodedChannel {
            encoder: &self.encoder,
            channel: &self.channel,
        };
        let k = self.schedule.batch_size;
        train_critic(&mut self.critic, &mut sampler, steps, k, self.schedule.lr, &mut self.rngs).map_err(js_err)
    }

    /// One encoder epoch of `steps` steps followed by one critic refresh.
    #[wasm_bindgen(js_name = trainEncoder)]
    pub fn train_encoder(&mut self, steps: usize) -> Result<Vec<f64>, JsError> {
        let schedule = TrainingSchedule {
            encoder_epochs: 1,
            encoder_iters_per_epoch: steps.max(1),
            ..self.schedule
        };
        train_encoder_alternating(&mut self.encoder, &mut self.critic, &self.channel, &schedule, &mut self.rngs).map_err(js_err)
    }

    /// Decoder steps; returns the cross-entropy per step in nats.
    #[wasm_bindgen(js_name = trainDecoder)]
    pub fn train_decoder(&mut self, steps: usize) -> Result<Vec<f64>, JsError> {
        let schedule = TrainingSchedule {
            decoder_epochs: 1,
            decoder_iters_per_epoch: steps.max(1),
            ..self.schedule
        };
        train_decoder(&mut self.decoder, &self.encoder, &self.channel, &schedule, &mut self.rngs).map_err(js_err)
    }

    /// Codewords as `[x0, x1, x0, x1, ...]` in message order.
    pub fn constellation(&self) -> Result<Vec<f64>, JsError> {
        Ok(export_constellation(&self.encoder).map_err(js_err)?.into_vec())
    }

    pub fn bler(&mut self, trials: usize) -> Result<f64, JsError> {
        Ok(evaluate_bler(&self.encoder, &self.decoder, &self.channel, trials, &mut self.eval)
            .map_err(js_err)?
            .bler)
    }
}
