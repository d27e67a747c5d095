//! Alternating minimization over minibatches.
//!
//! Each epoch encodes a minibatch under the current weights, forms the
//! correlation matrix `B` (optionally corrected for masking noise) and
//! refits the weights to it. Both halves are convex; alternation never
//! increases `L(W, E) = Σᵥ γ(wᵥ, bᵥ)` on a fixed batch.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{DataBatch, ModelFile};
use crate::decoder::{self, CorrelationMatrix, DecoderConfig, DecoderWeights};
use crate::encoder::{self, EncoderConfig, EncodingMode, Encodings};
use crate::error::{Error, Result};
use crate::kernel::{self, KernelId, LossKernel};

const STREAM_INIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_RESAMPLE: u64 = 4;

/// Corruption applied to each minibatch before encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    /// Replaces a fraction of entries by a ±1 draw whose mean is the entry.
    ZeroMean,
    /// Flips a fraction of the +1 bits to −1.
    Masking,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NoiseKind::None),
            "zero_mean" | "zero-mean" => Ok(NoiseKind::ZeroMean),
            "masking" | "mask" => Ok(NoiseKind::Masking),
            other => Err(Error::InvalidConfig(format!(
                "unknown noise kind `{other}` (expected none, zero_mean or masking)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseSpec {
    pub kind: NoiseKind,
    /// Fraction ρ of entries corrupted.
    pub rate: f64,
}

impl DenoiseSpec {
    pub fn masking(rate: f64) -> Self {
        Self {
            kind: NoiseKind::Masking,
            rate,
        }
    }

    pub fn zero_mean(rate: f64) -> Self {
        Self {
            kind: NoiseKind::ZeroMean,
            rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            NoiseKind::Masking => (0.0..1.0).contains(&self.rate),
            _ => (0.0..=1.0).contains(&self.rate),
        };
        if !ok {
            return Err(Error::OutOfRange {
                context: "noise rate",
                value: self.rate,
                range: if self.kind == NoiseKind::Masking { "[0, 1)" } else { "[0, 1]" },
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightInit {
    /// I.i.d. standard normal.
    #[default]
    Gaussian,
    Zeros,
}

impl std::str::FromStr for WeightInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "normal" => Ok(WeightInit::Gaussian),
            "zeros" | "zero" => Ok(WeightInit::Zeros),
            other => Err(Error::InvalidConfig(format!("unknown weight init `{other}`"))),
        }
    }
}

/// Training settings. Every field is a flat TOML key of the same name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub encoding_mode: EncodingMode,
    pub kernel: KernelId,
    pub seed: u64,
    pub l1_epsilon: f64,
    pub weight_init: WeightInit,
    pub noise: NoiseKind,
    pub noise_rate: f64,
    /// Reuse the same minibatch every epoch.
    pub fixed_batch: bool,
    /// Warm-start encodings from the previous epoch when the batch is unchanged.
    pub warm_start_encodings: bool,
    /// Redraw ±1 bits from randomized-bit data every epoch.
    pub resample_bits: bool,
    /// Evaluate the stopping metric every this many epochs.
    pub eval_every: usize,
    /// Evaluations without improvement before stopping; 0 disables.
    pub patience: usize,
    pub encoder_max_iters: usize,
    pub encoder_tolerance: f64,
    pub decoder_learning_rate: f64,
    pub decoder_max_iters: usize,
    pub decoder_tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let enc = EncoderConfig::default();
        let dec = DecoderConfig::default();
        Self {
            hidden: 32,
            epochs: 500,
            minibatch_size: 250,
            encoding_mode: EncodingMode::BinaryBox,
            kernel: KernelId::CrossEntropy,
            seed: 0,
            l1_epsilon: 0.0,
            weight_init: WeightInit::Gaussian,
            noise: NoiseKind::None,
            noise_rate: 0.0,
            fixed_batch: false,
            warm_start_encodings: true,
            resample_bits: false,
            eval_every: 1,
            patience: 20,
            encoder_max_iters: enc.max_iters,
            encoder_tolerance: enc.tolerance,
            decoder_learning_rate: dec.learning_rate,
            decoder_max_iters: dec.max_iters,
            decoder_tolerance: dec.tolerance,
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig {
            max_iters: self.encoder_max_iters,
            tolerance: self.encoder_tolerance,
            ..EncoderConfig::default()
        }
    }

    pub fn decoder_config(&self) -> DecoderConfig {
        DecoderConfig {
            learning_rate: self.decoder_learning_rate,
            max_iters: self.decoder_max_iters,
            tolerance: self.decoder_tolerance,
            l1_epsilon: self.l1_epsilon,
            ..DecoderConfig::default()
        }
    }

    pub fn denoise_spec(&self) -> Option<DenoiseSpec> {
        match self.noise {
            NoiseKind::None => None,
            kind => Some(DenoiseSpec {
                kind,
                rate: self.noise_rate,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.hidden == 0 {
            return fail("hidden must be at least 1");
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if self.minibatch_size == 0 {
            return fail("minibatch_size must be at least 1");
        }
        if self.eval_every == 0 {
            return fail("eval_every must be at least 1");
        }
        if self.kernel == KernelId::Custom {
            return fail("custom kernels are only available through the library API");
        }
        if let Some(spec) = self.denoise_spec() {
            spec.validate()?;
        }
        self.encoder_config().validate()?;
        self.decoder_config().validate()
    }
}

/// Statistics of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Reconstruction loss of the epoch's (clean) batch under the new weights.
    pub loss: f64,
    /// `½ Σᵥ γ(wᵥ, bᵥ)` on the same batch.
    pub slack_bound: f64,
    /// `L(W_{t−1}, E_t)`, including the L1 term.
    pub objective_after_encode: f64,
    /// `L(W_t, E_t)`, including the L1 term.
    pub objective_after_decode: f64,
    /// Stopping metric, when evaluated this epoch.
    pub eval_loss: Option<f64>,
    pub enc_iters: usize,
    pub dec_iters: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub records: Vec<EpochRecord>,
    /// Weights with the best stopping metric.
    pub weights: DecoderWeights,
    /// Weights after the last epoch run.
    pub final_weights: DecoderWeights,
    /// Encodings of the last epoch's batch, as passed to the final weight fit.
    pub final_encodings: Encodings,
    /// Indices into the training data of the last epoch's batch.
    pub final_batch: Vec<usize>,
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub config: TrainConfig,
}

impl TrainReport {
    /// CSV with header `epoch,loss,slack_bound,enc_iters,dec_iters,seconds`.
    pub fn to_csv(&self) -> String {
        self.csv(true)
    }

    /// Same as [`to_csv`](Self::to_csv) with the wall-time column zeroed.
    pub fn to_csv_untimed(&self) -> String {
        self.csv(false)
    }

    fn csv(&self, timed: bool) -> String {
        let mut out = String::from("epoch,loss,slack_bound,enc_iters,dec_iters,seconds\n");
        for r in &self.records {
            let secs = if timed { r.seconds } else { 0.0 };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.epoch, r.loss, r.slack_bound, r.enc_iters, r.dec_iters, secs
            )
            .unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn model_file(&self) -> ModelFile {
        ModelFile::new(
            &self.weights,
            self.config.encoding_mode,
            self.config.seed,
            self.config.to_toml(),
        )
    }

    pub fn last(&self) -> &EpochRecord {
        self.records.last().expect("at least one epoch")
    }
}

/// `L(W, E) = Σᵥ [−bᵥᵀwᵥ + (1/n) Σᵢ Ψ(wᵥᵀe⁽ⁱ⁾) + ε‖wᵥ‖₁]` with `B = XEᵀ/n`.
pub fn alternation_objective(
    w: &DecoderWeights,
    x: &DataBatch,
    e: &Encodings,
    kernel: &LossKernel,
    l1_epsilon: f64,
) -> Result<f64> {
    let b = encoder::correlations(x, e)?;
    objective_with(w, &b, e, kernel, l1_epsilon)
}

fn objective_with(
    w: &DecoderWeights,
    b: &CorrelationMatrix,
    e: &Encodings,
    kernel: &LossKernel,
    l1_epsilon: f64,
) -> Result<f64> {
    let l1 = l1_epsilon * w.w().iter().map(|v| v.abs()).sum::<f64>();
    Ok(2.0 * decoder::game_value(w, b, e, kernel)? + l1)
}

/// Flips each +1 entry to −1 with probability `rate`.
pub fn apply_masking<R: Rng + ?Sized>(x: &DataBatch, rate: f64, rng: &mut R) -> Result<DataBatch> {
    DenoiseSpec::masking(rate).validate()?;
    require_bits(x, "masking noise")?;
    let out = x
        .x()
        .mapv(|v| if v > 0.0 && rng.random::<f64>() < rate { -1.0 } else { v });
    DataBatch::new(out, true)
}

/// Replaces each entry, with probability `rate`, by a ±1 draw of mean equal
/// to the entry. Leaves ±1 entries unchanged.
pub fn apply_zero_mean_noise<R: Rng + ?Sized>(x: &DataBatch, rate: f64, rng: &mut R) -> Result<DataBatch> {
    DenoiseSpec::zero_mean(rate).validate()?;
    let out = x.x().mapv(|v| {
        if rng.random::<f64>() < rate {
            if rng.random::<f64>() < 0.5 * (1.0 + v) {
                1.0
            } else {
                -1.0
            }
        } else {
            v
        }
    });
    DataBatch::new(out, x.binarized())
}

fn require_bits(x: &DataBatch, context: &'static str) -> Result<()> {
    if let Some(&v) = x.x().iter().find(|v| v.abs() != 1.0) {
        return Err(Error::OutOfRange {
            context,
            value: v,
            range: "{-1, +1}",
        });
    }
    Ok(())
}

fn corrupt<R: Rng + ?Sized>(x: &DataBatch, spec: DenoiseSpec, rng: &mut R) -> Result<DataBatch> {
    match spec.kind {
        NoiseKind::None => Ok(x.clone()),
        NoiseKind::Masking => apply_masking(x, spec.rate, rng),
        NoiseKind::ZeroMean => apply_zero_mean_noise(x, spec.rate, rng),
    }
}

/// Correlation bias `δ` introduced by the noise.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseCorrection {
    /// V×H.
    pub delta: Array2<f64>,
    /// Visible bits with no surviving +1 entry; their rows of `δ` are zero.
    pub empty_rows: Vec<usize>,
}

/// `δ = (1/n)(X̂ − X)Eᵀ` when the clean data is known; otherwise an
/// estimate from the corrupted data alone.
///
/// Under masking the estimate rescales the surviving +1 positions by
/// `1/(1−ρ)`, which gives `δᵥₕ = −2ρ/((1−ρ)n) Σ_{i: x̂ᵥᵢ=+1} eₕᵢ`. It is
/// unbiased over the mask draw for fixed encodings.
pub fn denoise_correction(
    x_hat: &DataBatch,
    e: &Encodings,
    spec: DenoiseSpec,
    x_clean: Option<&DataBatch>,
) -> Result<DenoiseCorrection> {
    spec.validate()?;
    if x_hat.len() != e.len() {
        return Err(Error::dims("denoise correction (n)", x_hat.len(), e.len()));
    }
    if x_hat.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = x_hat.len() as f64;
    let (v, h) = (x_hat.visible(), e.hidden());
    if let Some(clean) = x_clean {
        if clean.x().dim() != x_hat.x().dim() {
            return Err(Error::dims(
                "clean vs corrupted data",
                format!("{:?}", x_hat.x().dim()),
                format!("{:?}", clean.x().dim()),
            ));
        }
        let diff = x_hat.x() - clean.x();
        return Ok(DenoiseCorrection {
            delta: diff.dot(&e.e().t()) / n,
            empty_rows: Vec::new(),
        });
    }
    match spec.kind {
        NoiseKind::None | NoiseKind::ZeroMean => Ok(DenoiseCorrection {
            delta: Array2::zeros((v, h)),
            empty_rows: Vec::new(),
        }),
        NoiseKind::Masking => {
            require_bits(x_hat, "masking correction")?;
            let survivors = x_hat.x().mapv(|x| if x > 0.0 { 1.0 } else { 0.0 });
            let scale = -2.0 * spec.rate / ((1.0 - spec.rate) * n);
            let delta = survivors.dot(&e.e().t()) * scale;
            let empty_rows: Vec<usize> = survivors
                .outer_iter()
                .enumerate()
                .filter(|(_, row)| row.sum() == 0.0)
                .map(|(r, _)| r)
                .collect();
            if !empty_rows.is_empty() {
                log::warn!(
                    "masking correction: {} visible bits have no surviving +1 entry; δ set to 0",
                    empty_rows.len()
                );
            }
            Ok(DenoiseCorrection { delta, empty_rows })
        }
    }
}

/// Loss summary of a model on a dataset.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Mean per-example reconstruction loss.
    pub loss: f64,
    pub slack_bound: f64,
    pub per_example: Array1<f64>,
    pub encodings: Encodings,
    pub reconstructions: Array2<f64>,
}

/// Encodes `data` under `w`, decodes, and scores the reconstructions.
/// Never refits weights.
pub fn evaluate(
    data: &DataBatch,
    w: &DecoderWeights,
    kernel: &LossKernel,
    mode: EncodingMode,
    enc_cfg: &EncoderConfig,
) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.visible() != w.visible() {
        return Err(Error::dims("evaluation data vs weights (V)", w.visible(), data.visible()));
    }
    let e = encoder::encode_batch(data, w, kernel, mode, enc_cfg, None)?.encodings;
    score(data, w, kernel, e)
}

/// Scores given encodings without re-encoding.
pub fn score(data: &DataBatch, w: &DecoderWeights, kernel: &LossKernel, e: Encodings) -> Result<Evaluation> {
    let recon = decoder::decode(&e, w, kernel)?;
    let loss = kernel::reconstruction_loss_clamped(data, &recon, kernel)?;
    let mut per_example = Array1::zeros(data.len());
    for (i, out) in per_example.iter_mut().enumerate() {
        *out = data
            .x()
            .column(i)
            .iter()
            .zip(recon.column(i).iter())
            .map(|(&x, &r)| kernel.bit_loss(x, kernel.clamp_for_loss(r)))
            .sum();
    }
    let b = encoder::correlations(data, &e)?;
    let slack_bound = decoder::game_value(w, &b, &e, kernel)?;
    Ok(Evaluation {
        loss,
        slack_bound,
        per_example,
        encodings: e,
        reconstructions: recon,
    })
}

/// Runs alternating minimization. See [`Trainer`] for held-out data,
/// custom kernels and per-epoch callbacks.
pub fn train(data: &DataBatch, config: &TrainConfig) -> Result<TrainReport> {
    Trainer::new(config.clone())?.run(data)
}

/// Configurable training run.
pub struct Trainer<'a> {
    config: TrainConfig,
    kernel: LossKernel,
    holdout: Option<&'a DataBatch>,
    initial_weights: Option<DecoderWeights>,
    on_epoch: Option<Box<dyn FnMut(&EpochRecord) + 'a>>,
}

impl<'a> Trainer<'a> {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let kernel = LossKernel::from_id(config.kernel)?;
        Ok(Self {
            config,
            kernel,
            holdout: None,
            initial_weights: None,
            on_epoch: None,
        })
    }

    /// Uses `kernel` in place of the configured identifier.
    pub fn kernel(mut self, kernel: LossKernel) -> Self {
        self.config.kernel = kernel.id();
        self.kernel = kernel;
        self
    }

    /// Early stopping is measured on `holdout` instead of the training stream.
    pub fn holdout(mut self, holdout: &'a DataBatch) -> Self {
        self.holdout = Some(holdout);
        self
    }

    pub fn initial_weights(mut self, w: DecoderWeights) -> Self {
        self.initial_weights = Some(w);
        self
    }

    pub fn on_epoch(mut self, f: impl FnMut(&EpochRecord) + 'a) -> Self {
        self.on_epoch = Some(Box::new(f));
        self
    }

    pub fn run(mut self, data: &DataBatch) -> Result<TrainReport> {
        let cfg = self.config.clone();
        let kernel = self.kernel.clone();
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(h) = self.holdout {
            if h.visible() != data.visible() {
                return Err(Error::dims("holdout vs training data (V)", data.visible(), h.visible()));
            }
        }
        let spec = cfg.denoise_spec();
        if spec.map(|s| s.kind) == Some(NoiseKind::Masking) && !cfg.resample_bits {
            require_bits(data, "masking noise")?;
        }
        let (v, n) = (data.visible(), data.len());
        let enc_cfg = cfg.encoder_config();
        let dec_cfg = cfg.decoder_config();

        let rng_for = |stream: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            r.set_stream(stream);
            r
        };
        let mut rng_shuffle = rng_for(STREAM_SHUFFLE);
        let mut rng_noise = rng_for(STREAM_NOISE);
        let mut rng_resample = rng_for(STREAM_RESAMPLE);

        let mut w = match self.initial_weights.take() {
            Some(w0) => {
                if w0.w().dim() != (v, cfg.hidden) {
                    return Err(Error::dims(
                        "initial weights",
                        format!("{v}×{}", cfg.hidden),
                        format!("{:?}", w0.w().dim()),
                    ));
                }
                DecoderWeights::new(w0.into_inner(), kernel.id())?
            }
            None => match cfg.weight_init {
                WeightInit::Gaussian => {
                    DecoderWeights::gaussian(v, cfg.hidden, kernel.id(), &mut rng_for(STREAM_INIT))
                }
                WeightInit::Zeros => DecoderWeights::zeros(v, cfg.hidden, kernel.id()),
            },
        };

        let bs = cfg.minibatch_size.min(n);
        let stable = bs == n || cfg.fixed_batch;
        let mut order: Vec<usize> = (0..n).collect();
        if bs < n {
            order.shuffle(&mut rng_shuffle);
        }
        let mut cursor = 0;
        let mut warm: Option<Encodings> = None;

        let mut records = Vec::with_capacity(cfg.epochs);
        let mut best = (f64::INFINITY, 0usize, w.clone());
        let mut since_best = 0;
        let mut stopped_early = false;
        let mut last_batch = Vec::new();

        for epoch in 1..=cfg.epochs {
            let started = Instant::now();
            if !stable && cursor + bs > n {
                order.shuffle(&mut rng_shuffle);
                cursor = 0;
            }
            let idx = &order[cursor..cursor + bs];
            if !stable {
                cursor += bs;
            }
            let mut clean = if bs == n { data.clone() } else { data.select(idx) };
            if cfg.resample_bits {
                clean = clean.sample_bits(&mut rng_resample);
            }
            let input = match spec {
                Some(s) => corrupt(&clean, s, &mut rng_noise)?,
                None => clean.clone(),
            };

            let init = if stable && cfg.warm_start_encodings {
                warm.as_ref()
            } else {
                None
            };
            let enc = encoder::encode_batch(&input, &w, &kernel, cfg.encoding_mode, &enc_cfg, init)?;
            let e = enc.encodings;
            let mut b = encoder::correlations(&input, &e)?;
            if let Some(s) = spec {
                let corr = denoise_correction(&input, &e, s, None)?;
                let mut fixed = b.b() - &corr.delta;
                if cfg.encoding_mode == EncodingMode::BinaryBox {
                    // Outside [-1,1] the slack is unbounded below for box encodings.
                    fixed.mapv_inplace(|c| c.clamp(-1.0, 1.0));
                }
                b = CorrelationMatrix::new(fixed, b.n_source())?;
            }
            let objective_after_encode = objective_with(&w, &b, &e, &kernel, cfg.l1_epsilon)?;

            let fit = decoder::fit_weights(&e, &b, &kernel, &dec_cfg, Some(&w))?;
            w = fit.weights;

            let slack_bound = decoder::game_value(&w, &b, &e, &kernel)?;
            let l1 = cfg.l1_epsilon * w.w().iter().map(|x| x.abs()).sum::<f64>();
            let recon = decoder::decode(&e, &w, &kernel)?;
            let loss = kernel::reconstruction_loss_clamped(&clean, &recon, &kernel)?;

            let eval_loss = if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
                Some(match self.holdout {
                    Some(h) => evaluate(h, &w, &kernel, cfg.encoding_mode, &enc_cfg)?.loss,
                    None => loss,
                })
            } else {
                None
            };

            let record = EpochRecord {
                epoch,
                loss,
                slack_bound,
                objective_after_encode,
                objective_after_decode: 2.0 * slack_bound + l1,
                eval_loss,
                enc_iters: enc.iterations.iter().copied().max().unwrap_or(0),
                dec_iters: fit.iterations.iter().copied().max().unwrap_or(0),
                seconds: started.elapsed().as_secs_f64(),
            };
            log::info!(
                "epoch {epoch}: loss {:.6} slack bound {:.6} ({} enc / {} dec iters)",
                record.loss,
                record.slack_bound,
                record.enc_iters,
                record.dec_iters
            );
            if let Some(f) = self.on_epoch.as_mut() {
                f(&record);
            }
            records.push(record);
            warm = Some(e);
            last_batch = idx.to_vec();

            if let Some(metric) = eval_loss {
                if metric < best.0 {
                    best = (metric, epoch, w.clone());
                    since_best = 0;
                } else {
                    since_best += 1;
                    if cfg.patience > 0 && since_best >= cfg.patience {
                        stopped_early = true;
                        break;
                    }
                }
            }
        }

        Ok(TrainReport {
            records,
            weights: best.2,
            final_weights: w,
            final_encodings: warm.expect("at least one epoch ran"),
            final_batch: last_batch,
            best_epoch: best.1,
            stopped_early,
            config: cfg,
        })
    }
}
