//! End-to-end training on synthetic data drawn around a few prototypes,
//! followed by evaluation, a model-file round trip and the CSV report.
//!
//! Run with `cargo run --release --example train_synthetic`.

use ndarray::Array2;
use pcae::data::{load_model, save_model};
use pcae::{evaluate, train, DataBatch, LossKernel, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` examples of `v` bits: a random prototype out of `k`, each bit flipped with probability `flip`.
pub fn prototype_data(v: usize, k: usize, n: usize, flip: f64, seed: u64) -> DataBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let protos = Array2::from_shape_simple_fn((v, k), || if rng.random::<bool>() { 1.0 } else { -1.0 });
    let mut x = Array2::zeros((v, n));
    for i in 0..n {
        let p = rng.random_range(0..k);
        for r in 0..v {
            let bit = protos[[r, p]];
            x[[r, i]] = if rng.random::<f64>() < flip { -bit } else { bit };
        }
    }
    DataBatch::new(x, true).expect("±1 data")
}

pub fn run_example() -> pcae::Result<()> {
    let all = prototype_data(20, 4, 500, 0.05, 3);
    let data = all.select(&(0..400).collect::<Vec<_>>());
    let holdout = all.select(&(400..500).collect::<Vec<_>>());
    let config = TrainConfig {
        hidden: 4,
        epochs: 30,
        minibatch_size: 100,
        seed: 7,
        ..TrainConfig::default()
    };
    let report = train(&data, &config)?;
    for r in report.records.iter().step_by(5) {
        println!("epoch {:>3}: loss {:8.4}  slack bound {:8.4}", r.epoch, r.loss, r.slack_bound);
    }

    let kernel = LossKernel::cross_entropy();
    let ev = evaluate(&holdout, &report.weights, &kernel, config.encoding_mode, &config.encoder_config())?;
    println!("held-out loss {:.4} (neutral {:.4})", ev.loss, 20.0 * std::f64::consts::LN_2);

    let dir = tempfile::tempdir().expect("temporary directory");
    let path = dir.path().join("synthetic.pcae");
    save_model(&report.model_file(), &path)?;
    let back = load_model(&path)?;
    assert_eq!(back.weights, *report.weights.w());
    println!("model round trip ok ({} bytes)", std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0));
    print!("{}", report.to_csv().lines().take(3).collect::<Vec<_>>().join("\n"));
    println!("\n...");
    Ok(())
}

#[allow(dead_code)]
fn main() -> pcae::Result<()> {
    run_example()
}
