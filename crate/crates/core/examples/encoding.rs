//! The encoder: each example's encoding minimizes its feature distortion
//! `Σᵥ [−xᵥ wᵥᵀe + Ψ(wᵥᵀe)]`, over the box `[-1,1]^H` or over all of `R^H`.
//! In the unconstrained case the solution satisfies `Wᵀ(X̌ − X) = 0`.
//!
//! Run with `cargo run --example encoding`.

use ndarray::Array2;
use pcae::decoder::hallucinated_data;
use pcae::encoder::distortion;
use pcae::{encode_batch, DataBatch, DecoderWeights, EncoderConfig, EncodingMode, KernelId, LossKernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> pcae::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (v, h, n) = (8, 3, 5);
    let w = DecoderWeights::gaussian(v, h, KernelId::CrossEntropy, &mut rng);
    let x = DataBatch::new(
        Array2::from_shape_simple_fn((v, n), || if rng.random::<bool>() { 1.0 } else { -1.0 }),
        true,
    )?;
    let kernel = LossKernel::cross_entropy();
    let cfg = EncoderConfig::default();

    for mode in [EncodingMode::BinaryBox, EncodingMode::Unconstrained] {
        let res = encode_batch(&x, &w, &kernel, mode, &cfg, None)?;
        let e = &res.encodings;
        println!("{} encodings ({} max iterations):", mode.as_str(), res.max_iterations());
        for i in 0..n {
            let d = distortion(e.e().column(i), x.x().column(i), &w, &kernel)?;
            let col: Vec<String> = e.e().column(i).iter().map(|v| format!("{v:+.3}")).collect();
            println!("  example {i}: e = [{}]  distortion {:.4}", col.join(", "), d.value);
        }
        if mode == EncodingMode::Unconstrained {
            let resid = hallucinated_data(e, &w, &kernel)? - x.x();
            let cert = w.w().t().dot(&resid);
            let worst = cert.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
            println!("  ‖Wᵀ(X̌ − X)‖∞ = {worst:.2e}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pcae::Result<()> {
    run_example()
}
