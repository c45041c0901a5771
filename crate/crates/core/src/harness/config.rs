//! Experiment configuration files.
//!
//! ```text
//! # comment
//! experiment = awgn_estimators
//! seeds = 0, 1, 2, 3, 4
//!
//! [channel]
//! snr = 4
//! dim = 8
//! ```
//!
//! One `key = value` per line, `[section]` headers, `#` comments. Keys
//! before the first header belong to the top-level section. Every key must
//! be known; duplicates are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channels::{JointSource, PowerNormalization};
use crate::coding::{MessageSet, TrainingSchedule, MIN_BLER_TRIALS};
use crate::error::{Error, Result};
use crate::estimators::{AStrategy, EstimatorKind, EstimatorSpec, SmileTraining};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    AwgnEstimators,
    BscEstimators,
    Autoencoder,
    LemmaCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::AwgnEstimators,
        Experiment::BscEstimators,
        Experiment::Autoencoder,
        Experiment::LemmaCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::AwgnEstimators => "awgn_estimators",
            Experiment::BscEstimators => "bsc_estimators",
            Experiment::Autoencoder => "autoencoder",
            Experiment::LemmaCheck => "lemma_check",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| Error::config(format!("unknown experiment `{s}`")))
    }
}

/// Raw `section -> key -> (value, line)` map.
#[derive(Debug, Clone, Default)]
struct RawConfig {
    entries: BTreeMap<(String, String), (String, usize)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        Error::config(format!("line {lineno}: unterminated section header"))
                    })?
                    .trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(Error::config(format!(
                        "line {lineno}: bad section name `{name}`"
                    )));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {lineno}: expected `key = value`")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::config(format!("line {lineno}: empty key")));
            }
            let slot = (section.clone(), key.to_string());
            if let Some((_, first)) = entries.get(&slot) {
                return Err(Error::config(format!(
                    "line {lineno}: duplicate key `{}` (first set on line {first})",
                    display_key(&slot)
                )));
            }
            entries.insert(slot, (value.trim().to_string(), lineno));
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn get<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>> {
        match self.take(section, key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| {
                Error::config(format!(
                    "line {line}: invalid value `{v}` for `{}`",
                    display_key(&(section.to_string(), key.to_string()))
                ))
            }),
        }
    }

    fn get_list<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        match self.take(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|_| {
                        Error::config(format!(
                            "line {line}: invalid list item `{}` for `{}`",
                            item.trim(),
                            display_key(&(section.to_string(), key.to_string()))
                        ))
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    fn reject_leftovers(&self) -> Result<()> {
        match self.entries.iter().next() {
            None => Ok(()),
            Some((slot, (_, line))) => Err(Error::config(format!(
                "line {line}: unknown key `{}`",
                display_key(slot)
            ))),
        }
    }
}

fn display_key((section, key): &(String, String)) -> String {
    if section.is_empty() {
        key.clone()
    } else {
        format!("{section}.{key}")
    }
}

/// Critic training loop shared by the estimator experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticTraining {
    pub iters: usize,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
}

/// One estimator to run, with its own learning rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSetup {
    pub spec: EstimatorSpec,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodingConfig {
    pub messages: MessageSet,
    pub schedule: TrainingSchedule,
    pub hidden: Vec<usize>,
    pub power: PowerNormalization,
    pub bler_trials: usize,
    pub bler_ebno_db: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaConfig {
    pub distributions: usize,
    pub grid_points: usize,
    pub samples: usize,
    /// Grid spans `(b, a_max_factor * b]`.
    pub a_max_factor: f64,
}

/// Fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Trailing steps averaged for the summary statistics.
    pub final_window: usize,
    pub source: JointSource,
    pub training: CriticTraining,
    pub estimators: Vec<EstimatorSetup>,
    /// Fresh batches scored by each trained SMILE critic to measure the
    /// spread of its partition term. Zero disables the measurement.
    pub partition_reruns: usize,
    pub coding: CodingConfig,
    pub lemma: LemmaConfig,
}

const ESTIMATOR_LR: f64 = 0.0005;

/// Per-estimator defaults for the estimator experiments. RJE holds `b` at
/// its floor of 1 (so `a = 2`): with the per-batch moment ratio the bounded
/// critic saturates at `-tau` early in training and stops learning.
fn default_setup(kind: EstimatorKind) -> EstimatorSetup {
    let mut spec = EstimatorSpec::new(kind);
    if kind == EstimatorKind::Rje {
        spec.fixed_b = Some(1.0);
    }
    EstimatorSetup {
        spec,
        lr: ESTIMATOR_LR,
    }
}

impl ExperimentConfig {
    /// Defaults for `experiment`; these are what an empty config section yields.
    pub fn defaults(experiment: Experiment) -> Self {
        let source = match experiment {
            Experiment::BscEstimators => JointSource::Binary { flip_prob: 0.11 },
            _ => JointSource::gaussian_snr(4.0, 8),
        };
        let estimators = [
            EstimatorKind::Mine,
            EstimatorKind::Nwj,
            EstimatorKind::Smile,
            EstimatorKind::Rje,
            EstimatorKind::Nce,
        ]
        .into_iter()
        .map(default_setup)
        .collect();
        ExperimentConfig {
            experiment,
            seeds: (0..5).collect(),
            output_dir: PathBuf::from("out"),
            final_window: 50,
            source,
            training: CriticTraining {
                iters: 500,
                batch_size: 64,
                hidden: vec![256, 256],
            },
            estimators,
            partition_reruns: 100,
            coding: CodingConfig {
                messages: MessageSet::new(16, 2).expect("16 messages in 2 dimensions"),
                schedule: TrainingSchedule::default(),
                hidden: vec![256, 256],
                power: PowerNormalization::BatchAverage,
                bler_trials: 100_000,
                bler_ebno_db: (0..=10).map(f64::from).collect(),
            },
            lemma: LemmaConfig {
                distributions: 100,
                grid_points: 50,
                samples: 10_000,
                a_max_factor: 100.0,
            },
        }
    }

    pub fn from_path(path: &Path, experiment: Option<Experiment>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_for(&text, experiment).map_err(|e| e.context(path.display().to_string()))
    }

    /// Applies `--seed`: a single seed replaces the configured list.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds = vec![seed];
        self
    }

    pub fn setup(&self, kind: EstimatorKind) -> Option<&EstimatorSetup> {
        self.estimators.iter().find(|s| s.spec.kind == kind)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::config("seeds must be distinct"));
        }
        match self.source {
            JointSource::Gaussian {
                signal_var,
                noise_var,
                dim,
            } => {
                if !(signal_var > 0.0 && signal_var.is_finite())
                    || !(noise_var > 0.0 && noise_var.is_finite())
                {
                    return Err(Error::config(
                        "channel variances must be positive and finite",
                    ));
                }
                if dim == 0 {
                    return Err(Error::config("channel.dim must be positive"));
                }
            }
            JointSource::Binary { flip_prob } => {
                if !(0.0..=0.5).contains(&flip_prob) {
                    return Err(Error::config(format!(
                        "channel.flip_prob must lie in [0, 0.5], got {flip_prob}"
                    )));
                }
            }
        }
        let t = &self.training;
        if t.iters == 0 {
            return Err(Error::config("training.iters must be positive"));
        }
        if t.batch_size < 2 {
            return Err(Error::config("training.batch_size must be at least 2"));
        }
        if t.hidden.iter().any(|&h| h == 0) {
            return Err(Error::config("hidden layer widths must be positive"));
        }
        if self.final_window == 0 || self.final_window > t.iters {
            return Err(Error::config(format!(
                "final_window must lie in 1..={}, got {}",
                t.iters, self.final_window
            )));
        }
        if self.estimators.is_empty() {
            return Err(Error::config("at least one estimator is required"));
        }
        for e in &self.estimators {
            e.spec
                .validate()
                .map_err(|err| err.context(e.spec.kind.name()))?;
            if !(e.lr >= 0.0 && e.lr.is_finite()) {
                return Err(Error::config(format!(
                    "{}.lr must be non-negative, got {}",
                    e.spec.kind, e.lr
                )));
            }
        }
        let c = &self.coding;
        c.schedule.validate()?;
        if c.hidden.iter().any(|&h| h == 0) {
            return Err(Error::config("autoencoder.hidden widths must be positive"));
        }
        if c.bler_trials < MIN_BLER_TRIALS {
            return Err(Error::config(format!(
                "autoencoder.bler_trials must be at least {MIN_BLER_TRIALS}"
            )));
        }
        if c.bler_ebno_db.is_empty() || c.bler_ebno_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(
                "autoencoder BLER grid must be a non-empty list of finite values",
            ));
        }
        let l = &self.lemma;
        if l.distributions == 0 || l.grid_points == 0 || l.samples == 0 {
            return Err(Error::config("lemma counts must be positive"));
        }
        if !(l.a_max_factor > 1.0 && l.a_max_factor.is_finite()) {
            return Err(Error::config("lemma.a_max_factor must exceed 1"));
        }
        Ok(())
    }

    /// Canonical config text. Parsing it yields `self` back.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let list = |v: &[usize]| {
            v.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(s, "experiment = {}", self.experiment.name());
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "seeds = {}", seeds.join(", "));
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s, "final_window = {}", self.final_window);
        let _ = writeln!(s, "\n[channel]");
        match self.source {
            JointSource::Gaussian {
                signal_var,
                noise_var,
                dim,
            } => {
                let _ = writeln!(
                    s,
                    "signal_var = {signal_var:?}\nnoise_var = {noise_var:?}\ndim = {dim}"
                );
            }
            JointSource::Binary { flip_prob } => {
                let _ = writeln!(s, "flip_prob = {flip_prob:?}");
            }
        }
        let _ = writeln!(s, "\n[training]");
        let names: Vec<&str> = self.estimators.iter().map(|e| e.spec.kind.name()).collect();
        let _ = writeln!(s, "estimators = {}", names.join(", "));
        let _ = writeln!(s, "iters = {}", self.training.iters);
        let _ = writeln!(s, "batch_size = {}", self.training.batch_size);
        let _ = writeln!(s, "hidden = {}", list(&self.training.hidden));
        let _ = writeln!(s, "partition_reruns = {}", self.partition_reruns);
        for e in &self.estimators {
            let _ = writeln!(s, "\n[{}]", e.spec.kind);
            let _ = writeln!(s, "lr = {:?}", e.lr);
            match e.spec.kind {
                EstimatorKind::Mine => {
                    let _ = writeln!(s, "ema_decay = {:?}", e.spec.ema_decay);
                }
                EstimatorKind::Smile => {
                    let training = match e.spec.smile_training {
                        SmileTraining::JsSurrogate => "js",
                        SmileTraining::Direct => "direct",
                    };
                    let _ = writeln!(s, "tau = {:?}\ntraining = {training}", e.spec.tau);
                }
                EstimatorKind::Rje => {
                    let _ = writeln!(s, "tau = {:?}", e.spec.tau);
                    match e.spec.a_strategy {
                        AStrategy::FixedMultiple(c) => {
                            let _ = writeln!(s, "a_strategy = fixed\na_multiple = {c:?}");
                        }
                        AStrategy::GoldenSection { a_max } => {
                            let _ = writeln!(s, "a_strategy = golden\na_max = {a_max:?}");
                        }
                    }
                    let _ = writeln!(s, "b_floor = {:?}", e.spec.b_floor);
                    match e.spec.fixed_b {
                        Some(b) => writeln!(s, "fixed_b = {b:?}"),
                        None => writeln!(s, "fixed_b = none"),
                    }
                    .expect("writing to a String");
                }
                EstimatorKind::Nwj | EstimatorKind::Nce => {}
            }
        }
        let c = &self.coding;
        let sc = &c.schedule;
        let _ = writeln!(s, "\n[autoencoder]");
        let _ = writeln!(
            s,
            "messages = {}\nblock_len = {}",
            c.messages.count(),
            c.messages.block_len()
        );
        let _ = writeln!(s, "hidden = {}", list(&c.hidden));
        let power = match c.power {
            PowerNormalization::BatchAverage => "batch",
            PowerNormalization::PerCodeword => "per_codeword",
        };
        let _ = writeln!(s, "power = {power}");
        let _ = writeln!(
            s,
            "critic_pretrain_iters = {}\nencoder_epochs = {}\nencoder_iters_per_epoch = {}\ncritic_tune_iters_per_epoch = {}",
            sc.critic_pretrain_iters, sc.encoder_epochs, sc.encoder_iters_per_epoch, sc.critic_tune_iters_per_epoch
        );
        let _ = writeln!(
            s,
            "decoder_epochs = {}\ndecoder_iters_per_epoch = {}\nbatch_size = {}\nlr = {:?}\nebno_db = {:?}",
            sc.decoder_epochs, sc.decoder_iters_per_epoch, sc.batch_size, sc.lr, sc.ebno_db
        );
        let _ = writeln!(s, "bler_trials = {}", c.bler_trials);
        let grid: Vec<String> = c.bler_ebno_db.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(s, "bler_ebno_db = {}", grid.join(", "));
        let l = &self.lemma;
        let _ = writeln!(s, "\n[lemma]");
        let _ = writeln!(
            s,
            "distributions = {}\ngrid_points = {}\nsamples = {}\na_max_factor = {:?}",
            l.distributions, l.grid_points, l.samples, l.a_max_factor
        );
        s
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        ExperimentConfig::parse_for(text, None)
    }
}

impl ExperimentConfig {
    /// Parses `text`; `experiment` (from the command line) stands in for a
    /// missing `experiment` key and must agree with it when both are given.
    pub fn parse_for(text: &str, experiment: Option<Experiment>) -> Result<Self> {
        let mut raw = RawConfig::parse(text)?;
        let experiment: Experiment = match (raw.take("", "experiment"), experiment) {
            (Some((v, line)), cli) => {
                let named: Experiment = v
                    .parse()
                    .map_err(|e: Error| e.context(format!("line {line}")))?;
                if cli.is_some_and(|c| c != named) {
                    return Err(Error::config(format!(
                        "config is for `{}` but `{}` was requested",
                        named.name(),
                        cli.unwrap().name()
                    )));
                }
                named
            }
            (None, Some(cli)) => cli,
            (None, None) => return Err(Error::config("missing `experiment`")),
        };
        let mut cfg = ExperimentConfig::defaults(experiment);

        if let Some(seeds) = raw.get_list("", "seeds")? {
            cfg.seeds = seeds;
        }
        if let Some((v, _)) = raw.take("", "output_dir") {
            cfg.output_dir = PathBuf::from(v);
        }
        if let Some(w) = raw.get("", "final_window")? {
            cfg.final_window = w;
        }

        cfg.source = parse_source(&mut raw, cfg.source)?;

        if let Some(iters) = raw.get("training", "iters")? {
            cfg.training.iters = iters;
        }
        if let Some(k) = raw.get("training", "batch_size")? {
            cfg.training.batch_size = k;
        }
        if let Some(h) = raw.get_list("training", "hidden")? {
            cfg.training.hidden = h;
        }
        if let Some(n) = raw.get("training", "partition_reruns")? {
            cfg.partition_reruns = n;
        }
        let kinds: Vec<EstimatorKind> = match raw.get_list("training", "estimators")? {
            Some(k) => k,
            None => cfg.estimators.iter().map(|e| e.spec.kind).collect(),
        };
        let mut seen = kinds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != kinds.len() {
            return Err(Error::config(
                "training.estimators lists an estimator twice",
            ));
        }
        cfg.estimators = kinds
            .into_iter()
            .map(|k| parse_estimator(&mut raw, k))
            .collect::<Result<_>>()?;
        // Sections for estimators that are not run may still carry keys; they
        // are parsed (so typos are caught) and dropped.
        for k in EstimatorKind::ALL {
            if cfg.setup(k).is_none() {
                parse_estimator(&mut raw, k)?;
            }
        }

        parse_coding(&mut raw, &mut cfg.coding)?;

        let l = &mut cfg.lemma;
        if let Some(v) = raw.get("lemma", "distributions")? {
            l.distributions = v;
        }
        if let Some(v) = raw.get("lemma", "grid_points")? {
            l.grid_points = v;
        }
        if let Some(v) = raw.get("lemma", "samples")? {
            l.samples = v;
        }
        if let Some(v) = raw.get("lemma", "a_max_factor")? {
            l.a_max_factor = v;
        }

        raw.reject_leftovers()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_source(raw: &mut RawConfig, default: JointSource) -> Result<JointSource> {
    let snr: Option<f64> = raw.get("channel", "snr")?;
    let signal_var: Option<f64> = raw.get("channel", "signal_var")?;
    let noise_var: Option<f64> = raw.get("channel", "noise_var")?;
    let dim: Option<usize> = raw.get("channel", "dim")?;
    let flip: Option<f64> = raw.get("channel", "flip_prob")?;
    match default {
        JointSource::Gaussian {
            signal_var: s0,
            noise_var: n0,
            dim: d0,
        } => {
            if flip.is_some() {
                return Err(Error::config(
                    "channel.flip_prob applies to the BSC experiment only",
                ));
            }
            if snr.is_some() && signal_var.is_some() {
                return Err(Error::config(
                    "set either channel.snr or channel.signal_var, not both",
                ));
            }
            let noise_var = noise_var.unwrap_or(if signal_var.is_some() { 1.0 } else { n0 });
            let signal_var = match (snr, signal_var) {
                (Some(snr), _) => snr * noise_var,
                (None, Some(s)) => s,
                (None, None) => s0 / n0 * noise_var,
            };
            Ok(JointSource::Gaussian {
                signal_var,
                noise_var,
                dim: dim.unwrap_or(d0),
            })
        }
        JointSource::Binary { flip_prob } => {
            if snr.is_some() || signal_var.is_some() || noise_var.is_some() || dim.is_some() {
                return Err(Error::config(
                    "the BSC experiment only accepts channel.flip_prob",
                ));
            }
            Ok(JointSource::Binary {
                flip_prob: flip.unwrap_or(flip_prob),
            })
        }
    }
}

fn parse_estimator(raw: &mut RawConfig, kind: EstimatorKind) -> Result<EstimatorSetup> {
    let section = kind.name();
    let EstimatorSetup { mut spec, lr } = default_setup(kind);
    let lr = raw.get(section, "lr")?.unwrap_or(lr);
    match kind {
        EstimatorKind::Mine => {
            if let Some(d) = raw.get(section, "ema_decay")? {
                spec.ema_decay = d;
            }
        }
        EstimatorKind::Smile => {
            if let Some(t) = raw.get(section, "tau")? {
                spec.tau = t;
            }
            if let Some((v, line)) = raw.take(section, "training") {
                spec.smile_training = match v.as_str() {
                    "js" => SmileTraining::JsSurrogate,
                    "direct" => SmileTraining::Direct,
                    _ => {
                        return Err(Error::config(format!(
                            "line {line}: smile.training must be `js` or `direct`"
                        )))
                    }
                };
            }
        }
        EstimatorKind::Rje => {
            if let Some(t) = raw.get(section, "tau")? {
                spec.tau = t;
            }
            let strategy = raw.take(section, "a_strategy");
            let multiple: Option<f64> = raw.get(section, "a_multiple")?;
            let a_max: Option<f64> = raw.get(section, "a_max")?;
            spec.a_strategy = match strategy.as_ref().map(|(v, l)| (v.as_str(), *l)) {
                None | Some(("fixed", _)) => {
                    if a_max.is_some() {
                        return Err(Error::config("rje.a_max requires a_strategy = golden"));
                    }
                    AStrategy::FixedMultiple(multiple.unwrap_or(2.0))
                }
                Some(("golden", _)) => {
                    if multiple.is_some() {
                        return Err(Error::config("rje.a_multiple requires a_strategy = fixed"));
                    }
                    AStrategy::GoldenSection {
                        a_max: a_max.unwrap_or(100.0),
                    }
                }
                Some((other, line)) => {
                    return Err(Error::config(format!(
                        "line {line}: rje.a_strategy must be `fixed` or `golden`, got `{other}`"
                    )))
                }
            };
            if let Some(b) = raw.get(section, "b_floor")? {
                spec.b_floor = b;
            }
            if let Some((v, line)) = raw.take(section, "fixed_b") {
                spec.fixed_b = match v.as_str() {
                    "none" => None,
                    _ => Some(v.parse().map_err(|_| {
                        Error::config(format!(
                            "line {line}: rje.fixed_b must be a number or `none`, got `{v}`"
                        ))
                    })?),
                };
            }
        }
        EstimatorKind::Nwj | EstimatorKind::Nce => {}
    }
    Ok(EstimatorSetup { spec, lr })
}

fn parse_coding(raw: &mut RawConfig, c: &mut CodingConfig) -> Result<()> {
    const S: &str = "autoencoder";
    let count = raw.get(S, "messages")?.unwrap_or(c.messages.count());
    let block = raw.get(S, "block_len")?.unwrap_or(c.messages.block_len());
    c.messages = MessageSet::new(count, block)?;
    if let Some(h) = raw.get_list(S, "hidden")? {
        c.hidden = h;
    }
    if let Some((v, line)) = raw.take(S, "power") {
        c.power = match v.as_str() {
            "batch" => PowerNormalization::BatchAverage,
            "per_codeword" => PowerNormalization::PerCodeword,
            _ => {
                return Err(Error::config(format!(
                    "line {line}: autoencoder.power must be `batch` or `per_codeword`"
                )))
            }
        };
    }
    let sc = &mut c.schedule;
    let counts: [(&str, &mut usize); 7] = [
        ("critic_pretrain_iters", &mut sc.critic_pretrain_iters),
        ("encoder_epochs", &mut sc.encoder_epochs),
        ("encoder_iters_per_epoch", &mut sc.encoder_iters_per_epoch),
        (
            "critic_tune_iters_per_epoch",
            &mut sc.critic_tune_iters_per_epoch,
        ),
        ("decoder_epochs", &mut sc.decoder_epochs),
        ("decoder_iters_per_epoch", &mut sc.decoder_iters_per_epoch),
        ("batch_size", &mut sc.batch_size),
    ];
    for (key, slot) in counts {
        if let Some(v) = raw.get(S, key)? {
            *slot = v;
        }
    }
    if let Some(v) = raw.get(S, "lr")? {
        sc.lr = v;
    }
    if let Some(v) = raw.get(S, "ebno_db")? {
        sc.ebno_db = v;
    }
    if let Some(v) = raw.get(S, "bler_trials")? {
        c.bler_trials = v;
    }
    if let Some(v) = raw.get_list(S, "bler_ebno_db")? {
        c.bler_ebno_db = v;
    }
    Ok(())
}
