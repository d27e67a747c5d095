//! Denoising: train on masked inputs and correct the correlations for the
//! bias the mask introduces. Also compares the correction estimated from
//! the corrupted data alone against the exact one.
//!
//! Run with `cargo run --release --example denoising`.

use ndarray::Array2;
use pcae::trainer::{apply_masking, denoise_correction};
use pcae::{
    encode_batch, evaluate, train, DataBatch, DecoderWeights, DenoiseSpec, EncoderConfig, EncodingMode, KernelId,
    LossKernel, NoiseKind, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stripes(v: usize, n: usize, seed: u64) -> DataBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::from_elem((v, n), -1.0);
    for i in 0..n {
        let phase = rng.random_range(0..3);
        for r in (phase..v).step_by(3) {
            x[[r, i]] = 1.0;
        }
    }
    DataBatch::new(x, true).expect("±1 data")
}

pub fn run_example() -> pcae::Result<()> {
    let rho = 0.3;
    let data = stripes(18, 300, 4);

    // The correction on a fixed encoding: estimate vs exact.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w = DecoderWeights::gaussian(18, 3, KernelId::CrossEntropy, &mut rng);
    let kernel = LossKernel::cross_entropy();
    let masked = apply_masking(&data, rho, &mut rng)?;
    let e = encode_batch(&masked, &w, &kernel, EncodingMode::BinaryBox, &EncoderConfig::default(), None)?.encodings;
    let spec = DenoiseSpec::masking(rho);
    let est = denoise_correction(&masked, &e, spec, None)?.delta;
    let exact = denoise_correction(&masked, &e, spec, Some(&data))?.delta;
    let err = (&est - &exact).iter().fold(0.0_f64, |a, d| a.max(d.abs()));
    let size = exact.iter().fold(0.0_f64, |a, d| a.max(d.abs()));
    println!("largest |δ| {size:.4}, largest estimation error {err:.4}");

    let base = TrainConfig {
        hidden: 3,
        epochs: 25,
        minibatch_size: 100,
        patience: 0,
        seed: 1,
        ..TrainConfig::default()
    };
    let denoised = TrainConfig {
        noise: NoiseKind::Masking,
        noise_rate: rho,
        ..base.clone()
    };
    let test = stripes(18, 100, 6);
    for (name, cfg) in [("plain", &base), ("denoising", &denoised)] {
        let report = train(&data, cfg)?;
        let clean = evaluate(&test, &report.weights, &kernel, cfg.encoding_mode, &cfg.encoder_config())?;
        let noisy_test = apply_masking(&test, rho, &mut ChaCha8Rng::seed_from_u64(8))?;
        let e = encode_batch(&noisy_test, &report.weights, &kernel, cfg.encoding_mode, &cfg.encoder_config(), None)?;
        let from_noisy = pcae::trainer::score(&test, &report.weights, &kernel, e.encodings)?;
        println!(
            "{name:>9}: clean-input loss {:.4}, masked-input loss {:.4}",
            clean.loss, from_noisy.loss
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pcae::Result<()> {
    run_example()
}
