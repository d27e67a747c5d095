//! Command-line interface. Exit codes: 0 success, 1 runtime error, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;

use crate::data::{
    binarize, export_images, load_dataset, load_model, read_matrix_csv, save_model, write_matrix_csv,
    Binarization, DataBatch, DataFormat, ImageLayout, ModelFile, RawDataset,
};
use crate::decoder::{decode, DecoderWeights};
use crate::encoder::{encode_batch, EncoderConfig, EncodingMode, Encodings};
use crate::error::Error;
use crate::kernel::{KernelId, LossKernel};
use crate::trainer::{self, TrainConfig, Trainer};

#[derive(Debug, Parser)]
#[command(name = "pcae", version, about = "Pairwise correlation autoencoder")]
pub struct Cli {
    /// Worker threads for the solvers (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it with a per-epoch report.
    Train(TrainArgs),
    /// Print the mean reconstruction loss and slack bound of a model on a dataset.
    Eval(EvalArgs),
    /// Write the encodings of a dataset (one example per row).
    Encode(EncodeArgs),
    /// Decode an encodings CSV into reconstructions (one example per row).
    Decode(DecodeArgs),
    /// Encode then decode a dataset.
    Reconstruct(ReconstructArgs),
    /// Export the decoding of each basis encoding as a PGM tile sheet.
    BasisViz(BasisVizArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset file.
    #[arg(long)]
    pub data: PathBuf,
    /// csv, idx or raw_f32 (default: from the file name).
    #[arg(long)]
    pub format: Option<String>,
    /// stochastic or pass-through.
    #[arg(long, default_value = "stochastic")]
    pub binarization: String,
    /// Use only the first N examples.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// TOML file of training settings; flags win on conflict.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Report CSV path (default: model path with extension `report.csv`).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Held-out dataset for early stopping (same format options as --data).
    #[arg(long)]
    pub holdout: Option<PathBuf>,

    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub minibatch_size: Option<usize>,
    /// binary or real.
    #[arg(long)]
    pub encoding_mode: Option<String>,
    /// xent or hamming.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub l1_epsilon: Option<f64>,
    /// gaussian or zeros.
    #[arg(long)]
    pub weight_init: Option<String>,
    /// none, zero_mean or masking.
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub noise_rate: Option<f64>,
    #[arg(long)]
    pub fixed_batch: Option<bool>,
    #[arg(long)]
    pub warm_start_encodings: Option<bool>,
    #[arg(long)]
    pub resample_bits: Option<bool>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub encoder_max_iters: Option<usize>,
    #[arg(long)]
    pub encoder_tolerance: Option<f64>,
    #[arg(long)]
    pub decoder_learning_rate: Option<f64>,
    #[arg(long)]
    pub decoder_max_iters: Option<usize>,
    #[arg(long)]
    pub decoder_tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Score with this kernel instead of the model's (xent or hamming).
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long, default_value_t = EncoderConfig::default().max_iters)]
    pub encoder_max_iters: usize,
    #[arg(long, default_value_t = EncoderConfig::default().tolerance)]
    pub encoder_tolerance: f64,
    /// Seed for binarization.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Write per-example losses to this CSV.
    #[arg(long)]
    pub per_example: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Encodings CSV, one example per row.
    #[arg(long)]
    pub encodings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ImageArgs {
    /// Image width in pixels (default: square root of V).
    #[arg(long)]
    pub width: Option<usize>,
    /// Image height in pixels.
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub tiles_per_row: usize,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the reconstructions as a PGM tile sheet.
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[command(flatten)]
    pub layout: ImageArgs,
}

#[derive(Debug, Args)]
pub struct BasisVizArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// PGM output path.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub layout: ImageArgs,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::UnknownKernel(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Failure::Usage(format!("cannot build thread pool: {e}"))),
        },
        None => dispatch(cli.command),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::BasisViz(a) => cmd_basis_viz(a),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> CliResult<T> {
    s.parse::<T>().map_err(Failure::from)
}

fn load_raw(args: &DataArgs) -> CliResult<RawDataset> {
    load_raw_from(&args.data, args)
}

fn load_raw_from(path: &Path, args: &DataArgs) -> CliResult<RawDataset> {
    let format = match &args.format {
        Some(f) => parse::<DataFormat>(f)?,
        None => DataFormat::infer(path),
    };
    let mut raw = load_dataset(path, format)?;
    if let Some(n) = args.limit {
        raw = raw.truncate(n);
    }
    if raw.is_empty() {
        return Err(Error::EmptyDataset.into());
    }
    Ok(raw)
}

fn binarization(args: &DataArgs) -> CliResult<Binarization> {
    match args.binarization.as_str() {
        "stochastic" => Ok(Binarization::Stochastic),
        "pass-through" | "pass_through" | "none" => Ok(Binarization::PassThrough),
        other => Err(Failure::Usage(format!(
            "unknown binarization `{other}` (expected stochastic or pass-through)"
        ))),
    }
}

fn to_batch(raw: &RawDataset, args: &DataArgs, seed: u64) -> CliResult<DataBatch> {
    Ok(binarize(raw, binarization(args)?, seed)?)
}

/// Merges the config file with the flags given, flags winning.
pub fn resolve_train_config(args: &TrainArgs) -> std::result::Result<TrainConfig, String> {
    let mut table = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            text.parse::<toml::Table>()
                .map_err(|e| format!("invalid config {}: {e}", path.display()))?
        }
        None => toml::Table::new(),
    };
    let mut set = |key: &str, value: Option<toml::Value>| {
        if let Some(v) = value {
            table.insert(key.to_string(), v);
        }
    };
    let int = |v: Option<usize>| v.map(|x| toml::Value::Integer(x as i64));
    let float = |v: Option<f64>| v.map(toml::Value::Float);
    let text = |v: &Option<String>| v.clone().map(toml::Value::String);
    let flag = |v: Option<bool>| v.map(toml::Value::Boolean);
    set("hidden", int(args.hidden));
    set("epochs", int(args.epochs));
    set("minibatch_size", int(args.minibatch_size));
    set("encoding_mode", text(&args.encoding_mode));
    set("kernel", text(&args.kernel));
    set("seed", args.seed.map(|s| toml::Value::Integer(s as i64)));
    set("l1_epsilon", float(args.l1_epsilon));
    set("weight_init", text(&args.weight_init));
    set("noise", text(&args.noise));
    set("noise_rate", float(args.noise_rate));
    set("fixed_batch", flag(args.fixed_batch));
    set("warm_start_encodings", flag(args.warm_start_encodings));
    set("resample_bits", flag(args.resample_bits));
    set("eval_every", int(args.eval_every));
    set("patience", int(args.patience));
    set("encoder_max_iters", int(args.encoder_max_iters));
    set("encoder_tolerance", float(args.encoder_tolerance));
    set("decoder_learning_rate", float(args.decoder_learning_rate));
    set("decoder_max_iters", int(args.decoder_max_iters));
    set("decoder_tolerance", float(args.decoder_tolerance));
    if !table.contains_key("hidden") {
        return Err("the number of hidden units is required (--hidden or `hidden` in --config)".into());
    }
    let config: TrainConfig = table.try_into().map_err(|e: toml::de::Error| e.to_string())?;
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn cmd_train(args: TrainArgs) -> CliResult<()> {
    let config = resolve_train_config(&args).map_err(Failure::Usage)?;
    let raw = load_raw(&args.data)?;
    let data = to_batch(&raw, &args.data, config.seed)?;
    let holdout = match &args.holdout {
        Some(p) => Some(to_batch(&load_raw_from(p, &args.data)?, &args.data, config.seed)?),
        None => None,
    };
    let mut trainer = Trainer::new(config)?;
    if let Some(h) = holdout.as_ref() {
        trainer = trainer.holdout(h);
    }
    let report = trainer.run(&data)?;
    save_model(&report.model_file(), &args.out)?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| args.out.with_extension("report.csv"));
    report.write_csv(&report_path)?;
    let last = report.last();
    println!("epochs     {}", report.records.len());
    println!("best_epoch {}", report.best_epoch);
    println!("loss       {}", last.loss);
    println!("slack      {}", last.slack_bound);
    println!("model      {}", args.out.display());
    println!("report     {}", report_path.display());
    Ok(())
}

struct Loaded {
    file: ModelFile,
    weights: DecoderWeights,
    kernel: LossKernel,
    enc_cfg: EncoderConfig,
}

fn load(args: &ModelArgs) -> CliResult<Loaded> {
    let file = load_model(&args.model)?;
    let id = match &args.kernel {
        Some(k) => parse::<KernelId>(k)?,
        None => file.kernel_id,
    };
    let kernel = LossKernel::from_id(id)?;
    let weights = DecoderWeights::new(file.weights.clone(), id)?;
    let enc_cfg = EncoderConfig {
        max_iters: args.encoder_max_iters,
        tolerance: args.encoder_tolerance,
        ..EncoderConfig::default()
    };
    enc_cfg.validate()?;
    Ok(Loaded {
        file,
        weights,
        kernel,
        enc_cfg,
    })
}

fn model_batch(m: &Loaded, args: &DataArgs, seed: u64) -> CliResult<(RawDataset, DataBatch)> {
    let raw = load_raw(args)?;
    if raw.visible() != m.weights.visible() {
        return Err(Failure::Runtime(Error::dims(
            "dataset vs model (V)",
            m.weights.visible(),
            raw.visible(),
        )));
    }
    let batch = to_batch(&raw, args, seed)?;
    Ok((raw, batch))
}

fn cmd_eval(args: EvalArgs) -> CliResult<()> {
    let m = load(&args.model)?;
    let (_, batch) = model_batch(&m, &args.data, args.model.seed)?;
    let ev = trainer::evaluate(&batch, &m.weights, &m.kernel, m.file.encoding_mode, &m.enc_cfg)?;
    println!("kernel      {}", m.kernel.id());
    println!("examples    {}", batch.len());
    println!("loss        {}", ev.loss);
    println!("slack_bound {}", ev.slack_bound);
    if let Some(path) = &args.per_example {
        let mut out = String::from("example,loss\n");
        for (i, l) in ev.per_example.iter().enumerate() {
            out.push_str(&format!("{i},{l}\n"));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn encodings_of(m: &Loaded, batch: &DataBatch) -> CliResult<Encodings> {
    Ok(encode_batch(batch, &m.weights, &m.kernel, m.file.encoding_mode, &m.enc_cfg, None)?.encodings)
}

fn cmd_encode(args: EncodeArgs) -> CliResult<()> {
    let m = load(&args.model)?;
    let (_, batch) = model_batch(&m, &args.data, args.model.seed)?;
    let e = encodings_of(&m, &batch)?;
    write_matrix_csv(&args.out, &e.e().t().to_owned())?;
    println!("wrote {} encodings of {} bits to {}", e.len(), e.hidden(), args.out.display());
    Ok(())
}

fn cmd_decode(args: DecodeArgs) -> CliResult<()> {
    let m = load(&args.model)?;
    let rows = read_matrix_csv(&args.encodings)?;
    if rows.ncols() != m.weights.hidden() {
        return Err(Failure::Runtime(Error::dims(
            "encodings vs model (H)",
            m.weights.hidden(),
            rows.ncols(),
        )));
    }
    let e = Encodings::new(rows.t().to_owned(), m.file.encoding_mode)?;
    let recon = decode(&e, &m.weights, &m.kernel)?;
    write_matrix_csv(&args.out, &recon.t().to_owned())?;
    println!("wrote {} reconstructions to {}", e.len(), args.out.display());
    Ok(())
}

fn layout_for(args: &ImageArgs, visible: usize, shape: Option<(usize, usize)>) -> CliResult<ImageLayout> {
    let layout = match (args.width, args.height, shape) {
        (Some(w), Some(h), _) => ImageLayout::new(w, h),
        (Some(w), None, _) if w > 0 && visible % w == 0 => ImageLayout::new(w, visible / w),
        (None, Some(h), _) if h > 0 && visible % h == 0 => ImageLayout::new(visible / h, h),
        (None, None, Some((h, w))) => ImageLayout::new(w, h),
        (None, None, None) => ImageLayout::for_visible(visible),
        _ => {
            return Err(Failure::Usage(format!(
                "image size does not divide the {visible} visible bits"
            )))
        }
    };
    if layout.width * layout.height != visible {
        return Err(Failure::Usage(format!(
            "image size {}×{} does not match {visible} visible bits",
            layout.width, layout.height
        )));
    }
    Ok(layout.tiles_per_row(args.tiles_per_row))
}

fn cmd_reconstruct(args: ReconstructArgs) -> CliResult<()> {
    let m = load(&args.model)?;
    let (raw, batch) = model_batch(&m, &args.data, args.model.seed)?;
    let e = encodings_of(&m, &batch)?;
    let recon = decode(&e, &m.weights, &m.kernel)?;
    write_matrix_csv(&args.out, &recon.t().to_owned())?;
    println!("wrote {} reconstructions to {}", e.len(), args.out.display());
    if let Some(path) = &args.images {
        let layout = layout_for(&args.layout, raw.visible(), raw.image_shape)?;
        export_images(recon.view(), layout, path)?;
        println!("wrote image sheet to {}", path.display());
    }
    Ok(())
}

/// Column `h` is `+1` at `h` and `−1` (binary) or `0` (real) elsewhere.
pub fn basis_encodings(hidden: usize, mode: EncodingMode) -> Encodings {
    let off = match mode {
        EncodingMode::BinaryBox => -1.0,
        EncodingMode::Unconstrained => 0.0,
    };
    let e = Array2::from_shape_fn((hidden, hidden), |(r, c)| if r == c { 1.0 } else { off });
    Encodings::new(e, mode).expect("basis encodings are feasible")
}

fn cmd_basis_viz(args: BasisVizArgs) -> CliResult<()> {
    let file = load_model(&args.model)?;
    let weights = file.decoder_weights()?;
    let kernel = LossKernel::from_id(file.kernel_id)?;
    let basis = basis_encodings(weights.hidden(), file.encoding_mode);
    let tiles = decode(&basis, &weights, &kernel)?;
    let layout = layout_for(&args.layout, weights.visible(), None)?;
    let (w, h) = export_images(tiles.view(), layout, &args.out)?;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "wrote {} tiles ({w}×{h} sheet) to {}", weights.hidden(), args.out.display());
    Ok(())
}
