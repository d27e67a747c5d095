//! L1 regularization of the decoder weights. Larger penalties drive more
//! weights exactly to zero at some cost in reconstruction loss.
//!
//! Run with `cargo run --release --example l1_sparsity`.

use ndarray::Array2;
use pcae::{train, DataBatch, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> pcae::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    // Bits 0..4 follow one source, 4..8 another, the rest are noise.
    let n = 300;
    let mut x = Array2::zeros((12, n));
    for i in 0..n {
        let a = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let b = if rng.random::<bool>() { 1.0 } else { -1.0 };
        for r in 0..12 {
            x[[r, i]] = match r {
                0..4 => a,
                4..8 => b,
                _ => if rng.random::<bool>() { 1.0 } else { -1.0 },
            };
        }
    }
    let data = DataBatch::new(x, true)?;

    let mut last_zeros = 0;
    for eps in [0.0, 0.02, 0.1] {
        let cfg = TrainConfig {
            hidden: 2,
            epochs: 20,
            minibatch_size: n,
            l1_epsilon: eps,
            patience: 0,
            ..TrainConfig::default()
        };
        let report = train(&data, &cfg)?;
        let w = report.final_weights.w();
        let zeros = w.iter().filter(|v| **v == 0.0).count();
        println!("ε = {eps:<5} loss {:7.4}  zero weights {zeros:>2} of {}", report.last().loss, w.len());
        assert!(zeros >= last_zeros || eps == 0.0);
        last_zeros = zeros;
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pcae::Result<()> {
    run_example()
}
