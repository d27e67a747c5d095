//! Loss kernels: the closed forms, a kernel built from user-supplied partial
//! losses, and the quantities the solvers use (Ψ, Ψ′ and the transfer).
//!
//! Run with `cargo run --example kernels`.

use pcae::kernel::{LossKernel, PartialLossPair};

pub fn run_example() -> pcae::Result<()> {
    let xent = LossKernel::cross_entropy();
    let hamming = LossKernel::hamming();
    // The same cross-entropy partials, solved numerically.
    let general = LossKernel::general(PartialLossPair::new(
        |x| (2.0 / (1.0 + x)).ln(),
        |x| (2.0 / (1.0 - x)).ln(),
    ))?;

    println!("{:>6} | {:>10} {:>10} {:>10} | {:>8} {:>8}", "m", "Ψ xent", "Ψ general", "Ψ hamming", "x̃ xent", "x̃ ham");
    for m in [-6.0, -2.0, -0.5, 0.0, 0.5, 2.0, 6.0] {
        println!(
            "{m:>6.1} | {:>10.6} {:>10.6} {:>10.6} | {:>8.4} {:>8.4}",
            xent.psi(m),
            general.psi(m),
            hamming.psi(m),
            xent.transfer(m),
            hamming.transfer(m)
        );
        assert!((xent.psi(m) - general.psi(m)).abs() < 1e-8);
    }

    // Squared loss saturates: its transfer hits ±1 at finite logits.
    let squared = LossKernel::general(PartialLossPair::new(
        |x| 0.25 * (1.0 - x) * (1.0 - x),
        |x| 0.25 * (1.0 + x) * (1.0 + x),
    ))?;
    println!("squared-loss transfer at m = 0.5, 1, 3: {:.4} {:.4} {:.4}",
        squared.transfer(0.5), squared.transfer(1.0), squared.transfer(3.0));

    // Partial losses must be monotone in the right directions.
    let bad = LossKernel::general(PartialLossPair::new(|x| x * x, |x| x * x));
    println!("non-monotone partials rejected: {}", bad.is_err());
    assert!(bad.is_err());
    Ok(())
}

#[allow(dead_code)]
fn main() -> pcae::Result<()> {
    run_example()
}
