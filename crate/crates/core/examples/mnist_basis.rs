//! Trains on the bundled 2,000-image MNIST subset and writes two PGM tile
//! sheets: the decoding of each hidden unit's basis encoding, and a few
//! reconstructions next to their binarized inputs.
//!
//! Run with `cargo run --release --example mnist_basis [OUT_DIR]`.

use std::path::{Path, PathBuf};

use pcae::data::{export_images, ImageLayout};
use pcae::{binarize, decode, evaluate, load_dataset, Binarization, DataFormat, LossKernel, TrainConfig, Trainer};

pub const MNIST_SUBSET: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/mnist-2000-images.idx3-ubyte");

pub fn run_with(out_dir: &Path, examples: usize, epochs: usize) -> pcae::Result<f64> {
    let raw = load_dataset(MNIST_SUBSET, DataFormat::IdxImages)?.truncate(examples);
    let data = binarize(&raw, Binarization::Stochastic, 0)?;
    let config = TrainConfig {
        hidden: 32,
        epochs,
        minibatch_size: 250,
        encoder_max_iters: 50,
        decoder_max_iters: 200,
        patience: 0,
        ..TrainConfig::default()
    };
    let report = Trainer::new(config.clone())?
        .on_epoch(|r| {
            if r.epoch % 5 == 0 {
                println!("epoch {:>3}: loss {:7.2}  ({:.2}s)", r.epoch, r.loss, r.seconds);
            }
        })
        .run(&data)?;

    let kernel = LossKernel::cross_entropy();
    let basis = pcae::cli::basis_encodings(32, config.encoding_mode);
    let tiles = decode(&basis, &report.weights, &kernel)?;
    let layout = ImageLayout::new(28, 28).tiles_per_row(8);
    export_images(tiles.view(), layout, out_dir.join("basis.pgm"))?;

    let sample = data.select(&(0..10).collect::<Vec<_>>());
    let ev = evaluate(&sample, &report.weights, &kernel, config.encoding_mode, &config.encoder_config())?;
    let both = ndarray::concatenate(ndarray::Axis(1), &[sample.x().view(), ev.reconstructions.view()])
        .expect("same height");
    export_images(both.view(), layout.tiles_per_row(10), out_dir.join("reconstructions.pgm"))?;
    println!("wrote {} and {}", out_dir.join("basis.pgm").display(), out_dir.join("reconstructions.pgm").display());
    Ok(report.last().loss)
}

pub fn run_example() -> pcae::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    let tmp;
    let dir = match out.as_deref() {
        Some(d) => d,
        None => {
            tmp = tempfile::tempdir().expect("temporary directory");
            tmp.path()
        }
    };
    let loss = run_with(dir, 2000, 20)?;
    println!("final training loss {loss:.2} (neutral {:.2})", 784.0 * std::f64::consts::LN_2);
    Ok(())
}

#[allow(dead_code)]
fn main() -> pcae::Result<()> {
    run_example()
}
