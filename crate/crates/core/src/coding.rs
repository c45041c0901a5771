//! Learned channel coding: a message encoder trained to maximize the
//! critic's mutual-information estimate, followed by a softmax decoder.
//!
//! Training runs in three phases: pretraining the critic on the untrained
//! encoder's output, alternating encoder epochs (critic frozen) with short
//! critic refreshes, and finally fitting the decoder against the frozen code.

use crate::channels::{AwgnChannel, JointSource, PowerNormalization};
use crate::error::{Error, Result};
use crate::estimators::{Critic, EstimateReport};
use crate::sampling::SampleBatch;
use crate::tensor::{
    ForwardCache, Matrix, Mlp, Nadam, NadamConfig, OutputActivation, ParamGrads, Rng, Stream,
};

/// `M` equiprobable messages sent as `n` real dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessageSet {
    count: usize,
    block_len: usize,
}

impl MessageSet {
    pub fn new(count: usize, block_len: usize) -> Result<Self> {
        if count < 2 || !count.is_power_of_two() {
            return Err(Error::config(format!(
                "message count must be a power of two >= 2, got {count}"
            )));
        }
        if block_len == 0 {
            return Err(Error::config("block length must be positive"));
        }
        Ok(MessageSet { count, block_len })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Information bits per real dimension, `log2(M) / n`.
    pub fn rate(&self) -> f64 {
        (self.count as f64).log2() / self.block_len as f64
    }

    pub fn draw(&self, k: usize, rng: &mut Rng) -> Vec<usize> {
        (0..k).map(|_| rng.below(self.count)).collect()
    }
}

pub fn one_hot(messages: &[usize], count: usize) -> Matrix {
    let mut m = Matrix::zeros(messages.len(), count);
    for (r, &msg) in messages.iter().enumerate() {
        m.set(r, msg, 1.0);
    }
    m
}

/// Iteration counts and rates for the three training phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSchedule {
    pub critic_pretrain_iters: usize,
    pub encoder_epochs: usize,
    pub encoder_iters_per_epoch: usize,
    pub critic_tune_iters_per_epoch: usize,
    pub decoder_epochs: usize,
    pub decoder_iters_per_epoch: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub ebno_db: f64,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        TrainingSchedule {
            critic_pretrain_iters: 500,
            encoder_epochs: 5,
            encoder_iters_per_epoch: 400,
            critic_tune_iters_per_epoch: 1,
            decoder_epochs: 5,
            decoder_iters_per_epoch: 400,
            batch_size: 64,
            lr: 0.005,
            ebno_db: 7.0,
        }
    }
}

impl TrainingSchedule {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("critic_pretrain_iters", self.critic_pretrain_iters),
            ("encoder_epochs", self.encoder_epochs),
            ("encoder_iters_per_epoch", self.encoder_iters_per_epoch),
            (
                "critic_tune_iters_per_epoch",
                self.critic_tune_iters_per_epoch,
            ),
            ("decoder_epochs", self.decoder_epochs),
            ("decoder_iters_per_epoch", self.decoder_iters_per_epoch),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::config(format!("{name} must be positive")));
        }
        if self.batch_size < 2 {
            return Err(Error::config("batch_size must be at least 2"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::config(format!("invalid learning rate {}", self.lr)));
        }
        if !self.ebno_db.is_finite() {
            return Err(Error::config("ebno_db must be finite"));
        }
        Ok(())
    }
}

/// The random streams a training run consumes.
#[derive(Debug, Clone)]
pub struct RunRngs {
    /// Message draws.
    pub batch: Rng,
    /// Channel noise and source samples.
    pub channel: Rng,
}

impl RunRngs {
    pub fn new(seed: u64) -> Self {
        RunRngs {
            batch: Rng::stream(seed, Stream::Batch),
            channel: Rng::stream(seed, Stream::Channel),
        }
    }
}

/// Codewords of one batch with everything needed to backpropagate into the encoder.
#[derive(Debug, Clone)]
pub struct EncodedBatch {
    pub messages: Vec<usize>,
    /// Normalized codewords.
    pub x: Matrix,
    raw: Matrix,
    cache: ForwardCache,
}

/// One-hot message -> MLP -> power normalization.
#[derive(Debug, Clone)]
pub struct Encoder {
    net: Mlp,
    opt: Nadam,
    messages: MessageSet,
    norm: PowerNormalization,
}

impl Encoder {
    pub fn new(
        messages: MessageSet,
        hidden: &[usize],
        norm: PowerNormalization,
        adam: NadamConfig,
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut dims = vec![messages.count()];
        dims.extend_from_slice(hidden);
        dims.push(messages.block_len());
        let net = Mlp::new(&dims, OutputActivation::Identity, rng)?;
        let opt = Nadam::new(net.num_params(), adam);
        Ok(Encoder {
            net,
            opt,
            messages,
            norm,
        })
    }

    pub fn messages(&self) -> MessageSet {
        self.messages
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn forward(&self, messages: &[usize]) -> Result<EncodedBatch> {
        if let Some(&m) = messages.iter().find(|&&m| m >= self.messages.count()) {
            return Err(Error::config(format!(
                "message {m} outside the message set"
            )));
        }
        let (raw, cache) = self
            .net
            .forward(&one_hot(messages, self.messages.count()))?;
        let x = self.norm.apply(&raw)?;
        Ok(EncodedBatch {
            messages: messages.to_vec(),
            x,
            raw,
            cache,
        })
    }

    /// Normalized codewords for `messages`.
    pub fn encode_batch(&self, messages: &[usize]) -> Result<Matrix> {
        Ok(self.forward(messages)?.x)
    }

    /// Parameter gradient of `<grad_x, x>` for a batch produced by [`forward`](Self::forward).
    pub fn backward(&self, enc: &EncodedBatch, grad_x: &Matrix) -> Result<ParamGrads> {
        let du = self.norm.backward(&enc.raw, &enc.x, grad_x);
        Ok(self.net.backward(&enc.cache, &du)?.0)
    }

    fn ascend(&mut self, grads: &ParamGrads, lr: f64) -> Result<()> {
        let descent: Vec<f64> = grads.0.iter().map(|g| -g).collect();
        self.opt.step(self.net.params_mut(), &descent, lr)
    }

    /// Every message once, in order, normalized as one uniformly weighted batch.
    pub fn constellation(&self) -> Result<Matrix> {
        let all: Vec<usize> = (0..self.messages.count()).collect();
        self.encode_batch(&all)
    }
}

/// Softmax classifier from received signals back to messages.
#[derive(Debug, Clone)]
pub struct Decoder {
    net: Mlp,
    opt: Nadam,
}

impl Decoder {
    pub fn new(
        messages: MessageSet,
        hidden: &[usize],
        adam: NadamConfig,
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut dims = vec![messages.block_len()];
        dims.extend_from_slice(hidden);
        dims.push(messages.count());
        let net = Mlp::new(&dims, OutputActivation::Identity, rng)?;
        let opt = Nadam::new(net.num_params(), adam);
        Ok(Decoder { net, opt })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn logits(&self, y: &Matrix) -> Result<Matrix> {
        Ok(self.net.forward(y)?.0)
    }

    /// Argmax decisions; ties go to the lowest message index.
    pub fn decode(&self, y: &Matrix) -> Result<Vec<usize>> {
        let logits = self.logits(y)?;
        Ok(logits
            .iter_rows()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                        if v > best.1 {
                            (i, v)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect())
    }

    /// Mean cross-entropy of `labels` under the decoder's softmax.
    pub fn cross_entropy(&self, y: &Matrix, labels: &[usize]) -> Result<f64> {
        Ok(softmax_cross_entropy(&self.logits(y)?, labels)?.0)
    }

    /// One NADAM step on the mean cross-entropy; returns the loss before the step.
    pub fn train_step(&mut self, y: &Matrix, labels: &[usize], lr: f64) -> Result<f64> {
        let (logits, cache) = self.net.forward(y)?;
        let (loss, grad) = softmax_cross_entropy(&logits, labels)?;
        let (grads, _) = self.net.backward(&cache, &grad)?;
        self.opt.step(self.net.params_mut(), &grads.0, lr)?;
        Ok(loss)
    }
}

/// Mean `-log softmax(logits)[label]` and its gradient `(softmax - onehot) / B`.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    if logits.rows() != labels.len() {
        return Err(Error::shape("one label per logit row required"));
    }
    let b = labels.len() as f64;
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - row[label];
        for (g, &v) in grad.row_mut(r).iter_mut().zip(row) {
            *g = (v - lse).exp() / b;
        }
        grad.row_mut(r)[label] -= 1.0 / b;
    }
    Ok((loss / b, grad))
}

/// Anything that can hand the critic a fresh joint batch.
pub trait JointSampler {
    fn sample(&mut self, k: usize, rngs: &mut RunRngs) -> Result<SampleBatch>;
}

impl JointSampler for JointSource {
    fn sample(&mut self, k: usize, rngs: &mut RunRngs) -> Result<SampleBatch> {
        JointSource::sample(self, k, &mut rngs.channel)
    }
}

/// Uniform messages through a (frozen) encoder and an AWGN channel.
pub struct CodedChannel<'a> {
    pub encoder: &'a Encoder,
    pub channel: &'a AwgnChannel,
}

impl JointSampler for CodedChannel<'_> {
    fn sample(&mut self, k: usize, rngs: &mut RunRngs) -> Result<SampleBatch> {
        let messages = self.encoder.messages().draw(k, &mut rngs.batch);
        let x = self.encoder.encode_batch(&messages)?;
        let y = self.channel.transmit(&x, &mut rngs.channel)?;
        SampleBatch::new(x, y)
    }
}

/// Ascends the critic's estimator objective for `iters` steps with fresh
/// batches. Returns the per-step estimate in bits.
pub fn train_critic(
    critic: &mut Critic,
    sampler: &mut impl JointSampler,
    iters: usize,
    k: usize,
    lr: f64,
    rngs: &mut RunRngs,
) -> Result<Vec<f64>> {
    let mut trace = Vec::with_capacity(iters);
    for step in 0..iters {
        let batch = sampler
            .sample(k, rngs)
            .map_err(|e| e.context(format!("critic step {step}")))?;
        let report = critic
            .train_step(&batch, lr)
            .map_err(|e| e.context(format!("critic step {step}")))?;
        trace.push(report.value_bits);
    }
    Ok(trace)
}

/// Objective and encoder-parameter gradient for fixed messages and a fixed
/// noise draw, critic frozen. The gradient reaches the encoder through both
/// the `x` inputs of the critic and `y = x + noise`.
pub fn encoder_gradient(
    encoder: &Encoder,
    critic: &mut Critic,
    messages: &[usize],
    noise: &Matrix,
) -> Result<(EstimateReport, ParamGrads)> {
    let enc = encoder.forward(messages)?;
    let y = enc.x.add(noise)?;
    let batch = SampleBatch::new(enc.x.clone(), y)?;
    let step = critic.input_gradients(&batch)?;
    let grad_x = step.grad_x.add(&step.grad_y)?;
    Ok((step.report, encoder.backward(&enc, &grad_x)?))
}

/// Alternating phase: per epoch, `encoder_iters_per_epoch` ascent steps on
/// the encoder with the critic frozen, then `critic_tune_iters_per_epoch`
/// critic steps with the encoder frozen. Returns the encoder-step estimates in bits.
pub fn train_encoder_alternating(
    encoder: &mut Encoder,
    critic: &mut Critic,
    channel: &AwgnChannel,
    schedule: &TrainingSchedule,
    rngs: &mut RunRngs,
) -> Result<Vec<f64>> {
    let k = schedule.batch_size;
    let mut trace = Vec::with_capacity(schedule.encoder_epochs * schedule.encoder_iters_per_epoch);
    for epoch in 0..schedule.encoder_epochs {
        for step in 0..schedule.encoder_iters_per_epoch {
            let ctx = || format!("encoder epoch {epoch} step {step}");
            let messages = encoder.messages().draw(k, &mut rngs.batch);
            let noise = channel.sample_noise(k, &mut rngs.channel);
            let (report, grads) = encoder_gradient(encoder, critic, &messages, &noise)
                .map_err(|e| e.context(ctx()))?;
            encoder
                .ascend(&grads, schedule.lr)
                .map_err(|e| e.context(ctx()))?;
            trace.push(report.value_bits);
        }
        let mut sampler = CodedChannel { encoder, channel };
        train_critic(
            critic,
            &mut sampler,
            schedule.critic_tune_iters_per_epoch,
            k,
            schedule.lr,
            rngs,
        )
        .map_err(|e| e.context(format!("critic refresh after epoch {epoch}")))?;
    }
    Ok(trace)
}

/// Fits the decoder by cross-entropy on noisy receptions of the frozen
/// constellation. Returns the per-step loss in nats.
pub fn train_decoder(
    decoder: &mut Decoder,
    encoder: &Encoder,
    channel: &AwgnChannel,
    schedule: &TrainingSchedule,
    rngs: &mut RunRngs,
) -> Result<Vec<f64>> {
    let table = encoder.constellation()?;
    let k = schedule.batch_size;
    let mut trace = Vec::with_capacity(schedule.decoder_epochs * schedule.decoder_iters_per_epoch);
    for epoch in 0..schedule.decoder_epochs {
        for step in 0..schedule.decoder_iters_per_epoch {
            let messages = encoder.messages().draw(k, &mut rngs.batch);
            let y = channel.transmit(&rows_of(&table, &messages), &mut rngs.channel)?;
            let loss = decoder
                .train_step(&y, &messages, schedule.lr)
                .map_err(|e| e.context(format!("decoder epoch {epoch} step {step}")))?;
            trace.push(loss);
        }
    }
    Ok(trace)
}

fn rows_of(table: &Matrix, messages: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(messages.len(), table.cols());
    for (r, &m) in messages.iter().enumerate() {
        out.row_mut(r).copy_from_slice(table.row(m));
    }
    out
}

/// Monte-Carlo block error rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BlerReport {
    pub bler: f64,
    pub trials: usize,
    pub errors: usize,
    pub sent_per_message: Vec<usize>,
    pub errors_per_message: Vec<usize>,
}

pub const MIN_BLER_TRIALS: usize = 10_000;
const BLER_CHUNK: usize = 4096;

/// Sends `trials` uniform messages from the constellation through `channel`
/// and counts wrong decisions.
pub fn evaluate_bler(
    encoder: &Encoder,
    decoder: &Decoder,
    channel: &AwgnChannel,
    trials: usize,
    rng: &mut Rng,
) -> Result<BlerReport> {
    if trials < MIN_BLER_TRIALS {
        return Err(Error::config(format!(
            "BLER needs at least {MIN_BLER_TRIALS} trials, got {trials}"
        )));
    }
    let set = encoder.messages();
    let table = encoder.constellation()?;
    let mut sent = vec![0; set.count()];
    let mut wrong = vec![0; set.count()];
    let mut remaining = trials;
    while remaining > 0 {
        let n = remaining.min(BLER_CHUNK);
        remaining -= n;
        let messages = set.draw(n, rng);
        let y = channel.transmit(&rows_of(&table, &messages), rng)?;
        for (&m, d) in messages.iter().zip(decoder.decode(&y)?) {
            sent[m] += 1;
            if d != m {
                wrong[m] += 1;
            }
        }
    }
    let errors = wrong.iter().sum();
    Ok(BlerReport {
        bler: errors as f64 / trials as f64,
        trials,
        errors,
        sent_per_message: sent,
        errors_per_message: wrong,
    })
}

/// Normalized codewords, one row per message in message order.
pub fn export_constellation(encoder: &Encoder) -> Result<Matrix> {
    encoder.constellation()
}

/// Smallest Euclidean distance between two distinct codewords.
pub fn min_pairwise_distance(codewords: &Matrix) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..codewords.rows() {
        for j in i + 1..codewords.rows() {
            let d: f64 = codewords
                .row(i)
                .iter()
                .zip(codewords.row(j))
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            best = best.min(d.sqrt());
        }
    }
    best
}
