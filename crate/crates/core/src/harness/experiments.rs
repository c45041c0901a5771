use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Exp, LogNormal};

use crate::channels::{AwgnChannel, JointSource};
use crate::coding::{
    evaluate_bler, export_constellation, min_pairwise_distance, train_critic, train_decoder,
    train_encoder_alternating, CodedChannel, Decoder, Encoder, RunRngs, MIN_BLER_TRIALS,
};
use crate::error::{Error, Result};
use crate::estimators::{rje_inner_bound, sample_variance, Critic, EstimatorKind, EstimatorSpec};
use crate::tensor::{Matrix, NadamConfig, Rng, Stream};

use super::config::{Experiment, ExperimentConfig};
use super::csv::{
    fmt_real, write_atomic, CsvTable, BLER_HEADER, CONSTELLATION_HEADER, CURVES_HEADER,
    LEMMA_HEADER, PARTITION_HEADER, SUMMARY_HEADER,
};
use super::workers::parallel_map;

/// Seeds required before bias and variance are reported.
pub const MIN_SUMMARY_SEEDS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub estimator: EstimatorKind,
    pub seed: u64,
    pub step: usize,
    pub estimate_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub estimator: EstimatorKind,
    pub true_mi_bits: f64,
    pub mean_bias_bits: f64,
    pub variance_bits2: f64,
    pub seeds: usize,
}

/// Spread of a trained SMILE critic's partition term `mean clip(e^f)` over
/// fresh batches, next to the `(e^tau - e^-tau) / (4n)` bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionRow {
    pub estimator: EstimatorKind,
    pub seed: u64,
    pub reruns: usize,
    pub mean: f64,
    pub variance: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlerPoint {
    pub ebno_db: f64,
    pub bler: f64,
    pub trials: usize,
}

/// Everything one autoencoder training run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderRun {
    pub estimator: EstimatorKind,
    pub seed: u64,
    /// Critic pretraining followed by the encoder steps, in bits.
    pub mi_trace: Vec<f64>,
    pub pretrain_steps: usize,
    pub decoder_loss: Vec<f64>,
    pub constellation: Matrix,
    pub untrained_min_distance: f64,
    pub trained_min_distance: f64,
    /// Mean BLER of untrained encoder/decoder pairs at the training Eb/N0.
    pub untrained_bler: f64,
    pub bler: Vec<BlerPoint>,
}

impl AutoencoderRun {
    pub fn bler_at(&self, ebno_db: f64) -> Option<f64> {
        self.bler
            .iter()
            .find(|p| p.ebno_db == ebno_db)
            .map(|p| p.bler)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaRow {
    pub set: usize,
    pub family: &'static str,
    pub b: f64,
    pub a: f64,
    pub bound: f64,
    pub log_mean: f64,
}

impl LemmaRow {
    pub fn violated(&self) -> bool {
        !(self.bound >= self.log_mean)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub rows: Vec<LemmaRow>,
}

impl LemmaReport {
    pub fn checked(&self) -> usize {
        self.rows.len()
    }

    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violated()).count()
    }
}

/// Output of one experiment, reproducible from `config`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub true_mi_bits: Option<f64>,
    /// Sorted by (estimator name, seed, step).
    pub curves: Vec<CurveRow>,
    pub summary: Vec<SummaryRow>,
    pub partition: Vec<PartitionRow>,
    pub autoencoder: Vec<AutoencoderRun>,
    pub lemma: Option<LemmaReport>,
}

impl RunRecord {
    pub(crate) fn new(config: &ExperimentConfig) -> Self {
        RunRecord {
            config: config.clone(),
            true_mi_bits: None,
            curves: Vec::new(),
            summary: Vec::new(),
            partition: Vec::new(),
            autoencoder: Vec::new(),
            lemma: None,
        }
    }

    /// The trace of one (estimator, seed) run.
    pub fn trace(&self, estimator: EstimatorKind, seed: u64) -> Vec<f64> {
        self.curves
            .iter()
            .filter(|r| r.estimator == estimator && r.seed == seed)
            .map(|r| r.estimate_bits)
            .collect()
    }

    /// Final-window mean per seed, in seed order.
    pub fn final_means(&self, estimator: EstimatorKind) -> Vec<f64> {
        let w = self.config.final_window;
        let mut seeds = self.config.seeds.clone();
        seeds.sort_unstable();
        seeds
            .into_iter()
            .map(|s| self.trace(estimator, s))
            .filter(|t| t.len() >= w)
            .map(|t| final_window_mean(&t, w))
            .collect()
    }

    /// Named CSV tables, ready to write.
    pub fn tables(&self) -> Vec<(String, CsvTable)> {
        let mut out = Vec::new();
        if !self.curves.is_empty() {
            let mut t = CsvTable::new(CURVES_HEADER);
            for r in &self.curves {
                t.push(vec![
                    r.step.to_string(),
                    r.estimator.to_string(),
                    r.seed.to_string(),
                    fmt_real(r.estimate_bits),
                ]);
            }
            out.push(("curves.csv".to_string(), t));
        }
        if !self.summary.is_empty() {
            let mut t = CsvTable::new(SUMMARY_HEADER);
            for r in &self.summary {
                t.push(vec![
                    r.estimator.to_string(),
                    fmt_real(r.true_mi_bits),
                    fmt_real(r.mean_bias_bits),
                    fmt_real(r.variance_bits2),
                    r.seeds.to_string(),
                ]);
            }
            out.push(("summary.csv".to_string(), t));
        }
        if !self.partition.is_empty() {
            let mut t = CsvTable::new(PARTITION_HEADER);
            for r in &self.partition {
                t.push(vec![
                    r.estimator.to_string(),
                    r.seed.to_string(),
                    r.reruns.to_string(),
                    fmt_real(r.mean),
                    fmt_real(r.variance),
                    fmt_real(r.bound),
                ]);
            }
            out.push(("partition.csv".to_string(), t));
        }
        let mut by_estimator: Vec<EstimatorKind> =
            self.autoencoder.iter().map(|r| r.estimator).collect();
        by_estimator.dedup();
        for kind in by_estimator {
            let mut bler = CsvTable::new(BLER_HEADER);
            for run in self.autoencoder.iter().filter(|r| r.estimator == kind) {
                let mut c = CsvTable::new(CONSTELLATION_HEADER);
                for (m, row) in run.constellation.iter_rows().enumerate() {
                    let mut cells = vec![m.to_string()];
                    cells.extend(row.iter().map(|&v| fmt_real(v)));
                    c.push(cells);
                }
                out.push((format!("constellation_{kind}_seed{}.csv", run.seed), c));
                for p in &run.bler {
                    bler.push(vec![
                        fmt_real(p.ebno_db),
                        fmt_real(p.bler),
                        p.trials.to_string(),
                        run.seed.to_string(),
                    ]);
                }
            }
            out.push((format!("bler_{kind}.csv"), bler));
        }
        if let Some(l) = &self.lemma {
            let mut t = CsvTable::new(LEMMA_HEADER);
            for r in &l.rows {
                t.push(vec![
                    r.set.to_string(),
                    r.family.to_string(),
                    fmt_real(r.b),
                    fmt_real(r.a),
                    fmt_real(r.bound),
                    fmt_real(r.log_mean),
                    u8::from(r.violated()).to_string(),
                ]);
            }
            out.push(("lemma_check.csv".to_string(), t));
        }
        out
    }

    /// Validates every table, then writes them and the config snapshot into
    /// `dir`. Nothing is written if any table fails validation.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let tables = self.tables();
        for (name, t) in &tables {
            t.validate().map_err(|e| e.context(name.clone()))?;
        }
        let mut written = Vec::with_capacity(tables.len() + 1);
        for (name, t) in &tables {
            let path = dir.join(name);
            t.write_atomic(&path)?;
            written.push(path);
        }
        let snapshot = dir.join("config.snapshot");
        write_atomic(&snapshot, self.config.to_config_string().as_bytes())?;
        written.push(snapshot);
        Ok(written)
    }
}

pub fn final_window_mean(trace: &[f64], window: usize) -> f64 {
    let tail = &trace[trace.len() - window..];
    tail.iter().sum::<f64>() / window as f64
}

/// Dispatches on `config.experiment`.
pub fn run(config: &ExperimentConfig, workers: usize) -> Result<RunRecord> {
    config.validate()?;
    match config.experiment {
        Experiment::AwgnEstimators => run_awgn_estimators(config, workers),
        Experiment::BscEstimators => run_bsc_estimators(config, workers),
        Experiment::Autoencoder => run_autoencoder(config, workers),
        Experiment::LemmaCheck => run_lemma_check(config),
    }
}

pub fn run_awgn_estimators(config: &ExperimentConfig, workers: usize) -> Result<RunRecord> {
    if !matches!(config.source, JointSource::Gaussian { .. }) {
        return Err(Error::config("awgn_estimators needs a Gaussian channel"));
    }
    run_estimators(config, workers)
}

pub fn run_bsc_estimators(config: &ExperimentConfig, workers: usize) -> Result<RunRecord> {
    if !matches!(config.source, JointSource::Binary { .. }) {
        return Err(Error::config("bsc_estimators needs a binary channel"));
    }
    run_estimators(config, workers)
}

struct EstimatorRun {
    trace: Vec<f64>,
    partition: Option<PartitionRow>,
}

fn jobs(config: &ExperimentConfig) -> Vec<(EstimatorKind, u64)> {
    let mut jobs: Vec<(EstimatorKind, u64)> = config
        .estimators
        .iter()
        .flat_map(|e| config.seeds.iter().map(move |&s| (e.spec.kind, s)))
        .collect();
    jobs.sort_by(|a, b| a.0.name().cmp(b.0.name()).then(a.1.cmp(&b.1)));
    jobs
}

fn run_estimators(config: &ExperimentConfig, workers: usize) -> Result<RunRecord> {
    let jobs = jobs(config);
    let runs = parallel_map(&jobs, workers, |&(kind, seed)| {
        estimator_run(config, kind, seed).map_err(|e| e.context(format!("{kind} seed {seed}")))
    })?;
    let mut record = RunRecord::new(config);
    let true_mi = config.source.true_mi_bits();
    record.true_mi_bits = Some(true_mi);
    for (&(kind, seed), run) in jobs.iter().zip(runs) {
        record
            .curves
            .extend(run.trace.iter().enumerate().map(|(step, &v)| CurveRow {
                estimator: kind,
                seed,
                step,
                estimate_bits: v,
            }));
        record.partition.extend(run.partition);
    }
    if config.seeds.len() >= MIN_SUMMARY_SEEDS {
        record.summary = summarize_bias_variance(&record, true_mi)?;
    }
    Ok(record)
}

fn estimator_run(
    config: &ExperimentConfig,
    kind: EstimatorKind,
    seed: u64,
) -> Result<EstimatorRun> {
    let setup = config
        .setup(kind)
        .expect("job built from the estimator list");
    let (dx, dy) = config.source.dims();
    let mut init = Rng::stream(seed, Stream::Init);
    let mut critic = Critic::new(
        dx,
        dy,
        &config.training.hidden,
        setup.spec,
        NadamConfig::default(),
        &mut init,
    )?;
    let mut rngs = RunRngs::new(seed);
    let mut source = config.source;
    let trace = train_critic(
        &mut critic,
        &mut source,
        config.training.iters,
        config.training.batch_size,
        setup.lr,
        &mut rngs,
    )?;
    let partition = if kind == EstimatorKind::Smile && config.partition_reruns >= 2 {
        Some(smile_partition_spread(
            &critic,
            &config.source,
            config.training.batch_size,
            config.partition_reruns,
            seed,
        )?)
    } else {
        None
    };
    Ok(EstimatorRun { trace, partition })
}

/// Scores `reruns` fresh batches with a frozen SMILE critic and measures the
/// spread of `mean clip(e^f, e^-tau, e^tau)` over the marginal pairs.
pub fn smile_partition_spread(
    critic: &Critic,
    source: &JointSource,
    k: usize,
    reruns: usize,
    seed: u64,
) -> Result<PartitionRow> {
    let tau = critic.spec().tau;
    let mut rng = Rng::stream(seed, Stream::Eval);
    let mut values = Vec::with_capacity(reruns);
    let mut n = 0;
    for _ in 0..reruns {
        let batch = source.sample(k, &mut rng)?;
        let (scores, _) = critic.scores(&batch)?;
        n = scores.num_marginal();
        let total: f64 = scores
            .marginal_iter()
            .map(|s| s.clamp(-tau, tau).exp())
            .sum();
        values.push(total / n as f64);
    }
    Ok(PartitionRow {
        estimator: EstimatorKind::Smile,
        seed,
        reruns,
        mean: values.iter().sum::<f64>() / reruns as f64,
        variance: sample_variance(&values),
        bound: (tau.exp() - (-tau).exp()) / (4.0 * n as f64),
    })
}

/// Bias of the final-window mean against `true_mi_bits` and its variance
/// across seeds, one row per estimator.
pub fn summarize_bias_variance(record: &RunRecord, true_mi_bits: f64) -> Result<Vec<SummaryRow>> {
    let mut kinds: Vec<EstimatorKind> = record.curves.iter().map(|r| r.estimator).collect();
    kinds.sort_by_key(|k| k.name());
    kinds.dedup();
    kinds
        .into_iter()
        .map(|kind| {
            let means = record.final_means(kind);
            if means.len() < MIN_SUMMARY_SEEDS {
                return Err(Error::config(format!(
                    "bias/variance summary needs at least {MIN_SUMMARY_SEEDS} seeds per estimator, {kind} has {}",
                    means.len()
                )));
            }
            let mean = means.iter().sum::<f64>() / means.len() as f64;
            Ok(SummaryRow {
                estimator: kind,
                true_mi_bits,
                mean_bias_bits: mean - true_mi_bits,
                variance_bits2: sample_variance(&means),
                seeds: means.len(),
            })
        })
        .collect()
}

pub fn run_autoencoder(config: &ExperimentConfig, workers: usize) -> Result<RunRecord> {
    let jobs = jobs(config);
    let runs = parallel_map(&jobs, workers, |&(kind, seed)| {
        autoencoder_run(config, kind, seed).map_err(|e| e.context(format!("{kind} seed {seed}")))
    })?;
    let mut record = RunRecord::new(config);
    for run in &runs {
        record
            .curves
            .extend(run.mi_trace.iter().enumerate().map(|(step, &v)| CurveRow {
                estimator: run.estimator,
                seed: run.seed,
                step,
                estimate_bits: v,
            }));
    }
    record.autoencoder = runs;
    Ok(record)
}

/// Independent untrained (encoder, decoder) pairs averaged for the chance baseline.
pub const UNTRAINED_INITS: usize = 200;

/// Chance-level BLER: the mean over [`UNTRAINED_INITS`] freshly initialized pairs,
/// [`MIN_BLER_TRIALS`] trials each. A single init can land anywhere from 0.87 to 1.
pub fn untrained_baseline(
    config: &ExperimentConfig,
    seed: u64,
    channel: &AwgnChannel,
) -> Result<f64> {
    let c = &config.coding;
    let adam = NadamConfig::default();
    let mut total = 0.0;
    for i in 0..UNTRAINED_INITS as u64 {
        let mut init = Rng::stream(seed, Stream::Other(10_000 + i));
        let encoder = Encoder::new(c.messages, &c.hidden, c.power, adam, &mut init)?;
        let decoder = Decoder::new(c.messages, &c.hidden, adam, &mut init)?;
        let mut eval = Rng::stream(seed, Stream::Other(20_000 + i));
        total += evaluate_bler(&encoder, &decoder, channel, MIN_BLER_TRIALS, &mut eval)?.bler;
    }
    Ok(total / UNTRAINED_INITS as f64)
}

/// One full pretrain / alternate / decode run followed by the BLER sweep.
pub fn autoencoder_run(
    config: &ExperimentConfig,
    kind: EstimatorKind,
    seed: u64,
) -> Result<AutoencoderRun> {
    let c = &config.coding;
    let sc = &c.schedule;
    let spec: EstimatorSpec = config
        .setup(kind)
        .map_or_else(|| EstimatorSpec::new(kind), |s| s.spec);
    let n = c.messages.block_len();
    let rate = c.messages.rate();
    let adam = NadamConfig::default();

    let mut init = Rng::stream(seed, Stream::Init);
    let mut encoder = Encoder::new(c.messages, &c.hidden, c.power, adam, &mut init)?;
    let mut critic = Critic::new(n, n, &config.training.hidden, spec, adam, &mut init)?;
    let mut decoder = Decoder::new(c.messages, &c.hidden, adam, &mut init)?;
    let channel = AwgnChannel::from_ebno(n, sc.ebno_db, rate)?;
    let mut rngs = RunRngs::new(seed);

    let untrained_min_distance = min_pairwise_distance(&export_constellation(&encoder)?);
    let untrained_bler = untrained_baseline(config, seed, &channel)?;

    let mut mi_trace = {
        let mut sampler = CodedChannel {
            encoder: &encoder,
            channel: &channel,
        };
        train_critic(
            &mut critic,
            &mut sampler,
            sc.critic_pretrain_iters,
            sc.batch_size,
            sc.lr,
            &mut rngs,
        )
        .map_err(|e| e.context("critic pretraining"))?
    };
    let pretrain_steps = mi_trace.len();
    mi_trace.extend(train_encoder_alternating(
        &mut encoder,
        &mut critic,
        &channel,
        sc,
        &mut rngs,
    )?);
    let decoder_loss = train_decoder(&mut decoder, &encoder, &channel, sc, &mut rngs)?;

    let constellation = export_constellation(&encoder)?;
    let mut bler = Vec::with_capacity(c.bler_ebno_db.len());
    for (i, &db) in c.bler_ebno_db.iter().enumerate() {
        let ch = AwgnChannel::from_ebno(n, db, rate)?;
        let mut rng = Rng::stream(seed, Stream::Other(100 + i as u64));
        let report = evaluate_bler(&encoder, &decoder, &ch, c.bler_trials, &mut rng)?;
        bler.push(BlerPoint {
            ebno_db: db,
            bler: report.bler,
            trials: report.trials,
        });
    }
    Ok(AutoencoderRun {
        estimator: kind,
        seed,
        mi_trace,
        pretrain_steps,
        decoder_loss,
        untrained_min_distance,
        trained_min_distance: min_pairwise_distance(&constellation),
        constellation,
        untrained_bler,
        bler,
    })
}

const LEMMA_FAMILIES: [&str; 4] = ["lognormal", "exponential", "constant", "two_point"];

/// Draws one nonnegative sample set of the given family with randomized parameters.
pub fn lemma_samples(family: &str, n: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    Ok(match family {
        "lognormal" => {
            let mu = rng.uniform_in(-1.0, 1.0);
            let sigma = rng.uniform_in(0.1, 2.0);
            let d = LogNormal::new(mu, sigma).map_err(|e| Error::config(e.to_string()))?;
            (0..n).map(|_| d.sample(rng.as_rand())).collect()
        }
        "exponential" => {
            let rate = rng.uniform_in(0.2, 5.0);
            let d = Exp::new(rate).map_err(|e| Error::config(e.to_string()))?;
            (0..n).map(|_| d.sample(rng.as_rand())).collect()
        }
        "constant" => vec![rng.uniform_in(0.05, 20.0); n],
        "two_point" => {
            let lo = rng.uniform_in(0.0, 1.0);
            let hi = lo + rng.uniform_in(0.5, 20.0);
            let p = rng.uniform_in(0.05, 0.95);
            (0..n)
                .map(|_| if rng.bernoulli(p) { hi } else { lo })
                .collect()
        }
        other => return Err(Error::config(format!("unknown sample family `{other}`"))),
    })
}

/// `(b, factor * b]` split into `points` equal steps, `b` itself excluded.
pub fn a_grid(b: f64, factor: f64, points: usize) -> Vec<f64> {
    (1..=points)
        .map(|i| b + (factor * b - b) * i as f64 / points as f64)
        .collect()
}

pub fn run_lemma_check(config: &ExperimentConfig) -> Result<RunRecord> {
    let l = &config.lemma;
    let mut rows = Vec::with_capacity(l.distributions * l.grid_points);
    let mut rng = Rng::stream(config.seeds[0], Stream::Other(1));
    for set in 0..l.distributions {
        let family = LEMMA_FAMILIES[set % LEMMA_FAMILIES.len()];
        let x = lemma_samples(family, l.samples, &mut rng)?;
        let n = x.len() as f64;
        let m1 = x.iter().sum::<f64>() / n;
        let m2 = x.iter().map(|v| v * v).sum::<f64>() / n;
        // Cauchy-Schwarz gives m2 >= m1^2; only rounding can push it below.
        let b = (m2 / (m1 * m1)).max(1.0);
        let log_mean = m1.ln();
        for a in a_grid(b, l.a_max_factor, l.grid_points) {
            rows.push(LemmaRow {
                set,
                family,
                b,
                a,
                bound: rje_inner_bound(&x, a, b)?,
                log_mean,
            });
        }
    }
    let mut record = RunRecord::new(config);
    record.lemma = Some(LemmaReport { rows });
    Ok(record)
}
