use ndarray::array;
use pcae::data::ImageLayout;
use pcae::{binarize, load_dataset, train, Binarization, DataBatch, DataFormat, TrainConfig};

const MNIST_SUBSET: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/mnist-2000-images.idx3-ubyte");

fn psi(m: f64) -> f64 {
    (1.0 + m.exp()).ln() + (1.0 + (-m).exp()).ln()
}

fn ternary(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..100 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    f(0.5 * (lo + hi))
}

/// `min_E L(w, E)` for H = 1; each example's encoding is a 1-D convex problem.
fn profile(w: [f64; 2], x: &[[f64; 4]; 2]) -> f64 {
    (0..4)
        .map(|i| {
            ternary(-1.0, 1.0, |e| {
                (0..2).map(|v| -x[v][i] * w[v] * e + psi(w[v] * e)).sum::<f64>()
            })
        })
        .sum::<f64>()
        / 4.0
}

#[test]
fn tiny_instance_reaches_global_minimum() {
    let x = [[0.8, 0.6, -0.7, -0.5], [0.4, 0.5, -0.6, -0.3]];
    let data = DataBatch::new(array![[0.8, 0.6, -0.7, -0.5], [0.4, 0.5, -0.6, -0.3]], false).unwrap();
    let cfg = TrainConfig {
        hidden: 1,
        epochs: 200,
        minibatch_size: 4,
        fixed_batch: true,
        patience: 0,
        seed: 11,
        ..TrainConfig::default()
    };
    let report = train(&data, &cfg).unwrap();
    let w = report.final_weights.w();
    let trained = profile([w[[0, 0]], w[[1, 0]]], &x);

    // Coarse grid, then a shrinking local search around the best point.
    let mut best = ([0.0, 0.0], profile([0.0, 0.0], &x));
    for a in -40..=40 {
        for b in -40..=40 {
            let p = [a as f64 * 0.25, b as f64 * 0.25];
            let v = profile(p, &x);
            if v < best.1 {
                best = (p, v);
            }
        }
    }
    let mut step = 0.25;
    while step > 1e-6 {
        let mut moved = false;
        for (da, db) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let p = [best.0[0] + da * step, best.0[1] + db * step];
            let v = profile(p, &x);
            if v < best.1 {
                best = (p, v);
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    assert!(trained <= best.1 + 1e-2, "trained {trained} vs global {}", best.1);
    assert!(trained >= best.1 - 1e-6, "trained {trained} below the oracle minimum {}", best.1);
}

#[test]
fn mnist_fixture_loads_as_images() {
    let raw = load_dataset(MNIST_SUBSET, DataFormat::IdxImages).unwrap();
    assert_eq!((raw.len(), raw.visible()), (2000, 784));
    assert_eq!(raw.image_shape, Some((28, 28)));
    assert!(raw.rows().iter().all(|v| (0.0..=1.0).contains(v)));
    // Digits are mostly background.
    let mean = raw.rows().mean().unwrap();
    assert!(mean > 0.05 && mean < 0.25, "mean intensity {mean}");
    assert_eq!(ImageLayout::for_visible(raw.visible()), ImageLayout::new(28, 28));

    let a = binarize(&raw, Binarization::Stochastic, 9).unwrap();
    let b = binarize(&raw, Binarization::Stochastic, 9).unwrap();
    assert_eq!(a.x(), b.x());
    assert!(a.binarized() && a.x().iter().all(|&v| v == 1.0 || v == -1.0));
    let c = binarize(&raw, Binarization::Stochastic, 10).unwrap();
    assert_ne!(a.x(), c.x());

    let p = binarize(&raw.clone().truncate(5), Binarization::PassThrough, 0).unwrap();
    assert!(!p.binarized());
    assert_eq!(p.x()[[300, 2]], 2.0 * raw.rows()[[2, 300]] - 1.0);
}
