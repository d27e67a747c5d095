//! The decoder: given encodings `E` and correlations `B`, fit the weights
//! by minimizing each visible bit's slack, then check the optimality
//! certificate `B̌ = (1/n) Ψ′(WE) Eᵀ = B` and the game value.
//!
//! Run with `cargo run --example optimal_decoder`.

use ndarray::Array2;
use pcae::decoder::{fit_weights, game_value, hallucinated_correlations, DecoderConfig};
use pcae::{correlations, decode, reconstruction_loss, DataBatch, EncodingMode, Encodings, LossKernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> pcae::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (v, h, n) = (6, 3, 40);
    let e = Encodings::new(
        Array2::from_shape_simple_fn((h, n), || rng.random_range(-1.0..=1.0)),
        EncodingMode::BinaryBox,
    )?;
    let x = DataBatch::new(
        Array2::from_shape_simple_fn((v, n), || if rng.random::<f64>() < 0.5 { 1.0 } else { -1.0 }),
        true,
    )?;
    let b = correlations(&x, &e)?;
    let kernel = LossKernel::cross_entropy();

    let fit = fit_weights(&e, &b, &kernel, &DecoderConfig::default(), None)?;
    let b_check = hallucinated_correlations(&e, &fit.weights, &kernel)?;
    let gap = (&b_check - b.b()).iter().fold(0.0_f64, |a, d| a.max(d.abs()));
    println!("Adagrad iterations (max over bits): {}", fit.max_iterations());
    println!("‖B̌ − B‖∞ = {gap:.2e}");

    let value = game_value(&fit.weights, &b, &e, &kernel)?;
    let recon = decode(&e, &fit.weights, &kernel)?;
    let loss = reconstruction_loss(&x, &recon, &kernel)?;
    println!("game value {value:.6}  actual loss {loss:.6}  neutral {:.6}", v as f64 * std::f64::consts::LN_2);
    assert!(value >= loss - 1e-9);
    Ok(())
}

#[allow(dead_code)]
fn main() -> pcae::Result<()> {
    run_example()
}
