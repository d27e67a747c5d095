//! Optimal encoding given decoding weights.
//!
//! Each example is encoded independently as the minimizer of its total
//! feature distortion `Σᵥ [−xᵥ wᵥᵀe + Ψ(wᵥᵀe)]`, over the box `[-1,1]^H`
//! (randomized binary encodings) or over all of `ℝ^H`. The problem is convex
//! in `e`, and is solved by projected gradient descent with a backtracking
//! line search, batched over columns with matrix products.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataBatch;
use crate::decoder::{CorrelationMatrix, DecoderWeights};
use crate::error::{Error, Result};
use crate::kernel::LossKernel;

/// Feasible set of an encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncodingMode {
    /// Randomized bits in `[-1,1]^H`.
    #[serde(rename = "binary", alias = "binary_box")]
    BinaryBox,
    /// Unconstrained real encodings.
    #[serde(rename = "real", alias = "unconstrained")]
    Unconstrained,
}

impl EncodingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EncodingMode::BinaryBox => "binary",
            EncodingMode::Unconstrained => "real",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            EncodingMode::BinaryBox => 0,
            EncodingMode::Unconstrained => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(EncodingMode::BinaryBox),
            1 => Some(EncodingMode::Unconstrained),
            _ => None,
        }
    }

    #[inline]
    fn project(self, v: f64) -> f64 {
        match self {
            EncodingMode::BinaryBox => v.clamp(-1.0, 1.0),
            EncodingMode::Unconstrained => v,
        }
    }
}

impl std::str::FromStr for EncodingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "binary_box" | "bin" => Ok(EncodingMode::BinaryBox),
            "real" | "unconstrained" => Ok(EncodingMode::Unconstrained),
            other => Err(Error::InvalidConfig(format!(
                "unknown encoding mode `{other}` (expected `binary` or `real`)"
            ))),
        }
    }
}

/// Encodings `E`, one column per example (H×n).
#[derive(Debug, Clone, PartialEq)]
pub struct Encodings {
    e: Array2<f64>,
    mode: EncodingMode,
}

impl Encodings {
    pub fn new(e: Array2<f64>, mode: EncodingMode) -> Result<Self> {
        for &v in e.iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite("encodings".into()));
            }
            if mode == EncodingMode::BinaryBox && v.abs() > 1.0 {
                return Err(Error::OutOfRange {
                    context: "binary encodings",
                    value: v,
                    range: "[-1, 1]",
                });
            }
        }
        Ok(Self { e, mode })
    }

    pub fn zeros(hidden: usize, n: usize, mode: EncodingMode) -> Self {
        Self {
            e: Array2::zeros((hidden, n)),
            mode,
        }
    }

    pub fn e(&self) -> &Array2<f64> {
        &self.e
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.e
    }

    pub fn mode(&self) -> EncodingMode {
        self.mode
    }

    pub fn hidden(&self) -> usize {
        self.e.nrows()
    }

    /// Number of encoded examples.
    pub fn len(&self) -> usize {
        self.e.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.e.ncols() == 0
    }

    /// Columns at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            e: self.e.select(Axis(1), idx),
            mode: self.mode,
        }
    }
}

/// Total feature distortion of one example and its per-bit terms.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDistortion {
    pub value: f64,
    pub per_bit: Vec<f64>,
}

/// Projected-gradient settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub max_iters: usize,
    /// Exit once `‖P(e − g) − e‖∞` falls to this value.
    pub tolerance: f64,
    pub armijo: f64,
    pub shrink: f64,
    pub initial_step: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            max_iters: 300,
            tolerance: 1e-6,
            armijo: 1e-4,
            shrink: 0.5,
            initial_step: 1.0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::InvalidConfig("armijo constant must lie in (0,1)".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidConfig("line-search shrink must lie in (0,1)".into()));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::InvalidConfig("initial step must be positive".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidConfig("encoder tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// Result of [`encode_batch`].
#[derive(Debug, Clone)]
pub struct EncodeResult {
    pub encodings: Encodings,
    /// Projected-gradient iterations per example.
    pub iterations: Vec<usize>,
    /// Examples that stopped at the iteration cap.
    pub capped: usize,
}

impl EncodeResult {
    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }
}

/// `Σᵥ [−xᵥ·(wᵥᵀe) + Ψ(wᵥᵀe)]` for a single example.
pub fn distortion(
    e_i: ArrayView1<f64>,
    x_i: ArrayView1<f64>,
    w: &DecoderWeights,
    kernel: &LossKernel,
) -> Result<FeatureDistortion> {
    if e_i.len() != w.hidden() {
        return Err(Error::dims("distortion encoding", w.hidden(), e_i.len()));
    }
    if x_i.len() != w.visible() {
        return Err(Error::dims("distortion example", w.visible(), x_i.len()));
    }
    let m = w.w().dot(&e_i);
    let per_bit: Vec<f64> = m
        .iter()
        .zip(x_i.iter())
        .map(|(&m, &x)| -x * m + kernel.psi(m))
        .collect();
    Ok(FeatureDistortion {
        value: per_bit.iter().sum(),
        per_bit,
    })
}

fn check_batch_dims(e: &Encodings, x: &DataBatch, w: &DecoderWeights) -> Result<()> {
    if e.hidden() != w.hidden() {
        return Err(Error::dims("encodings vs weights (H)", w.hidden(), e.hidden()));
    }
    if x.visible() != w.visible() {
        return Err(Error::dims("data vs weights (V)", w.visible(), x.visible()));
    }
    if e.len() != x.len() {
        return Err(Error::dims("encodings vs data (n)", x.len(), e.len()));
    }
    Ok(())
}

/// Per-example distortion gradients: column `i` is `Wᵀ(Ψ′(We⁽ⁱ⁾) − x⁽ⁱ⁾)`.
pub fn distortion_gradient_batch(
    e: &Encodings,
    x: &DataBatch,
    w: &DecoderWeights,
    kernel: &LossKernel,
) -> Result<Array2<f64>> {
    check_batch_dims(e, x, w)?;
    let mut r = w.w().dot(e.e());
    r.mapv_inplace(|m| kernel.psi_prime(m));
    r -= x.x();
    Ok(w.w().t().dot(&r))
}

const CHUNK: usize = 64;
const MAX_STEP: f64 = 1e8;
const MIN_STEP: f64 = 1e-20;

/// Column-wise distortions of `E` given logits `M = WE`.
fn column_distortions(m: &Array2<f64>, x: &Array2<f64>, kernel: &LossKernel) -> Array1<f64> {
    let mut out = Array1::zeros(m.ncols());
    for (mr, xr) in m.outer_iter().zip(x.outer_iter()) {
        for ((o, &mv), &xv) in out.iter_mut().zip(mr.iter()).zip(xr.iter()) {
            *o += -xv * mv + kernel.psi(mv);
        }
    }
    out
}

fn encode_chunk(
    x: &Array2<f64>,
    mut e: Array2<f64>,
    w: &Array2<f64>,
    kernel: &LossKernel,
    mode: EncodingMode,
    cfg: &EncoderConfig,
) -> Result<(Array2<f64>, Vec<usize>, usize)> {
    let n = e.ncols();
    let mut iterations = vec![cfg.max_iters; n];
    let mut step = vec![cfg.initial_step; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut capped = n;

    for it in 0..cfg.max_iters {
        if active.is_empty() {
            break;
        }
        let ea = e.select(Axis(1), &active);
        let xa = x.select(Axis(1), &active);
        let mut m = w.dot(&ea);
        let f = column_distortions(&m, &xa, kernel);
        m.mapv_inplace(|v| kernel.psi_prime(v));
        m -= &xa;
        let g = w.t().dot(&m);
        if g.iter().any(|v| !v.is_finite()) || f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("encoder gradient at iteration {it}")));
        }

        // Stationarity test, then line search on the columns still moving.
        let mut pending: Vec<usize> = Vec::with_capacity(active.len());
        for (a, &col) in active.iter().enumerate() {
            let resid = ea
                .column(a)
                .iter()
                .zip(g.column(a).iter())
                .fold(0.0_f64, |acc, (&ev, &gv)| acc.max((mode.project(ev - gv) - ev).abs()));
            if resid <= cfg.tolerance {
                iterations[col] = it;
                capped -= 1;
            } else {
                pending.push(a);
            }
        }
        let mut still_active = Vec::with_capacity(pending.len());
        while !pending.is_empty() {
            let mut trial = Array2::zeros((ea.nrows(), pending.len()));
            for (t, &a) in pending.iter().enumerate() {
                let s = step[active[a]];
                for h in 0..ea.nrows() {
                    trial[[h, t]] = mode.project(ea[[h, a]] - s * g[[h, a]]);
                }
            }
            let xt = xa.select(Axis(1), &pending);
            let ft = column_distortions(&w.dot(&trial), &xt, kernel);
            let mut retry = Vec::new();
            for (t, &a) in pending.iter().enumerate() {
                let col = active[a];
                let mut decrease = 0.0;
                let mut moved = false;
                for h in 0..ea.nrows() {
                    let d = trial[[h, t]] - ea[[h, a]];
                    decrease += g[[h, a]] * d;
                    moved |= d != 0.0;
                }
                if !moved {
                    // Step underflowed without leaving the current point.
                    iterations[col] = it;
                    capped -= 1;
                } else if ft[t] <= f[a] + cfg.armijo * decrease {
                    e.column_mut(col).assign(&trial.column(t));
                    step[col] = (step[col] * 2.0).min(MAX_STEP);
                    still_active.push(col);
                } else {
                    step[col] *= cfg.shrink;
                    if step[col] < MIN_STEP {
                        iterations[col] = it;
                        capped -= 1;
                    } else {
                        retry.push(a);
                    }
                }
            }
            pending = retry;
        }
        still_active.sort_unstable();
        active = still_active;
    }
    Ok((e, iterations, capped))
}

/// Computes `Enc(x⁽ⁱ⁾; W)` for every column of `x`.
///
/// Starts from `init` when given, zeros otherwise. With `W = 0` the
/// objective is constant and the starting point is returned unchanged.
pub fn encode_batch(
    x: &DataBatch,
    w: &DecoderWeights,
    kernel: &LossKernel,
    mode: EncodingMode,
    cfg: &EncoderConfig,
    init: Option<&Encodings>,
) -> Result<EncodeResult> {
    cfg.validate()?;
    let n = x.len();
    let start = match init {
        Some(init) => {
            if init.hidden() != w.hidden() || init.len() != n {
                return Err(Error::dims(
                    "initial encodings",
                    format!("{}×{}", w.hidden(), n),
                    format!("{}×{}", init.hidden(), init.len()),
                ));
            }
            let mut e = init.e().clone();
            e.mapv_inplace(|v| mode.project(v));
            e
        }
        None => Array2::zeros((w.hidden(), n)),
    };
    check_batch_dims(&Encodings { e: start.clone(), mode }, x, w)?;

    if w.w().iter().all(|v| *v == 0.0) {
        return Ok(EncodeResult {
            encodings: Encodings::new(start, mode)?,
            iterations: vec![0; n],
            capped: 0,
        });
    }

    let chunks: Vec<(usize, usize)> = (0..n)
        .step_by(CHUNK)
        .map(|lo| (lo, (lo + CHUNK).min(n)))
        .collect();
    let solved: Vec<(Array2<f64>, Vec<usize>, usize)> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let xs = x.x().slice(ndarray::s![.., lo..hi]).to_owned();
            let es = start.slice(ndarray::s![.., lo..hi]).to_owned();
            encode_chunk(&xs, es, w.w(), kernel, mode, cfg)
        })
        .collect::<Result<_>>()?;

    let mut e = Array2::zeros((w.hidden(), n));
    let mut iterations = Vec::with_capacity(n);
    let mut capped = 0;
    for (&(lo, hi), (es, its, c)) in chunks.iter().zip(solved) {
        e.slice_mut(ndarray::s![.., lo..hi]).assign(&es);
        iterations.extend(its);
        capped += c;
    }
    if capped > 0 {
        log::debug!("encoder: {capped} of {n} examples reached the iteration cap ({})", cfg.max_iters);
    }
    Ok(EncodeResult {
        encodings: Encodings::new(e, mode)?,
        iterations,
        capped,
    })
}

/// Pairwise correlations `B = (1/n) X Eᵀ`.
pub fn correlations(x: &DataBatch, e: &Encodings) -> Result<CorrelationMatrix> {
    if x.len() != e.len() {
        return Err(Error::dims("correlations (n)", x.len(), e.len()));
    }
    if x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let b = x.x().dot(&e.e().t()) / x.len() as f64;
    CorrelationMatrix::new(b, x.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelId;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const LN2: f64 = std::f64::consts::LN_2;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Array2<f64> {
        Array2::from_shape_simple_fn((r, c), || scale * (2.0 * rng.random::<f64>() - 1.0))
    }

    fn weights(w: Array2<f64>) -> DecoderWeights {
        DecoderWeights::new(w, KernelId::CrossEntropy).unwrap()
    }

    fn batch(x: Array2<f64>) -> DataBatch {
        DataBatch::new(x, false).unwrap()
    }

    #[test]
    fn distortion_examples() {
        let k = LossKernel::cross_entropy();
        let w = weights(array![[0.3, -1.0], [2.0, 0.5], [0.0, 1.0]]);
        let d = distortion(array![0.0, 0.0].view(), array![1.0, -1.0, 0.5].view(), &w, &k).unwrap();
        assert!((d.value - 3.0 * 2.0 * LN2).abs() < 1e-14);
        assert!((d.value - d.per_bit.iter().sum::<f64>()).abs() < 1e-15);

        let w1 = weights(array![[1.0]]);
        let d = distortion(array![1.0].view(), array![1.0].view(), &w1, &k).unwrap();
        let expect = 2.0 * (1.0 + (-1f64).exp()).ln();
        assert!((d.value - expect).abs() < 1e-14);
        assert!((d.value - 0.6265).abs() < 1e-4);
    }

    #[test]
    fn distortion_invariant_under_joint_sign_flip() {
        let k = LossKernel::cross_entropy();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random_matrix(&mut rng, 4, 2, 2.0);
        let x = random_matrix(&mut rng, 4, 1, 1.0).column(0).to_owned();
        let e = random_matrix(&mut rng, 2, 1, 1.0).column(0).to_owned();
        let a = distortion(e.view(), x.view(), &weights(w.clone()), &k).unwrap();
        let b = distortion(e.view(), (-&x).view(), &weights(-w), &k).unwrap();
        assert!((a.value - b.value).abs() < 1e-13);
    }

    #[test]
    fn gradient_trivial_cases() {
        let k = LossKernel::cross_entropy();
        let x = batch(array![[1.0, -0.5], [0.25, 0.0]]);
        let e = Encodings::new(array![[0.5, -1.0]], EncodingMode::BinaryBox).unwrap();
        let g = distortion_gradient_batch(&e, &x, &DecoderWeights::zeros(2, 1, KernelId::CrossEntropy), &k).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));

        // Choose x = Ψ′(We) so the residual vanishes.
        let w = weights(array![[1.0], [-2.0]]);
        let xh = w.w().dot(e.e()).mapv(|m| k.psi_prime(m));
        let g = distortion_gradient_batch(&e, &batch(xh), &w, &k).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let k = LossKernel::cross_entropy();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let w = weights(random_matrix(&mut rng, 3, 2, 2.0));
            let x = batch(random_matrix(&mut rng, 3, 4, 1.0));
            let e = Encodings::new(random_matrix(&mut rng, 2, 4, 1.0), EncodingMode::Unconstrained).unwrap();
            let g = distortion_gradient_batch(&e, &x, &w, &k).unwrap();
            let h = 1e-6;
            for i in 0..4 {
                for j in 0..2 {
                    let mut ep = e.e().column(i).to_owned();
                    let mut em = ep.clone();
                    ep[j] += h;
                    em[j] -= h;
                    let xi = x.x().column(i);
                    let fd = (distortion(ep.view(), xi, &w, &k).unwrap().value
                        - distortion(em.view(), xi, &w, &k).unwrap().value)
                        / (2.0 * h);
                    assert!((g[[j, i]] - fd).abs() <= 1e-5 * (1.0 + fd.abs()));
                }
            }
        }
    }

    #[test]
    fn single_bit_pushes_to_boundary() {
        let k = LossKernel::cross_entropy();
        let w = weights(array![[1.0]]);
        let x = batch(array![[1.0]]);
        let r = encode_batch(&x, &w, &k, EncodingMode::BinaryBox, &EncoderConfig::default(), None).unwrap();
        assert_eq!(r.encodings.e()[[0, 0]], 1.0);
    }

    #[test]
    fn zero_weights_return_initialization() {
        let k = LossKernel::cross_entropy();
        let x = batch(array![[1.0, -1.0], [0.5, 0.0]]);
        let init = Encodings::new(array![[0.25, -0.75], [1.0, 0.0]], EncodingMode::BinaryBox).unwrap();
        let w = DecoderWeights::zeros(2, 2, KernelId::CrossEntropy);
        let r = encode_batch(&x, &w, &k, EncodingMode::BinaryBox, &EncoderConfig::default(), Some(&init)).unwrap();
        assert_eq!(r.encodings, init);
        let r = encode_batch(&x, &w, &k, EncodingMode::BinaryBox, &EncoderConfig::default(), None).unwrap();
        assert!(r.encodings.e().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn tiny_instance_matches_grid_search() {
        let k = LossKernel::cross_entropy();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let w = weights(random_matrix(&mut rng, 2, 1, 3.0));
            let x = batch(random_matrix(&mut rng, 2, 1, 1.0));
            let r = encode_batch(&x, &w, &k, EncodingMode::BinaryBox, &EncoderConfig::default(), None).unwrap();
            let f = |e: f64| distortion(array![e].view(), x.x().column(0), &w, &k).unwrap().value;
            let best = (0..=20_000)
                .map(|i| -1.0 + i as f64 * 1e-4)
                .min_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap())
                .unwrap();
            assert!((r.encodings.e()[[0, 0]] - best).abs() <= 1e-3, "{} vs {}", r.encodings.e()[[0, 0]], best);
        }
    }

    #[test]
    fn unconstrained_optimum_is_stationary() {
        let k = LossKernel::cross_entropy();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = weights(random_matrix(&mut rng, 5, 2, 1.5));
        let x = batch(random_matrix(&mut rng, 5, 9, 0.8));
        let cfg = EncoderConfig {
            max_iters: 5000,
            tolerance: 1e-8,
            ..EncoderConfig::default()
        };
        let r = encode_batch(&x, &w, &k, EncodingMode::Unconstrained, &cfg, None).unwrap();
        assert_eq!(r.capped, 0);
        let g = distortion_gradient_batch(&r.encodings, &x, &w, &k).unwrap();
        assert!(g.iter().all(|v| v.abs() <= 1e-6));
    }

    #[test]
    fn iterates_descend_and_stay_in_box() {
        let k = LossKernel::cross_entropy();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = weights(random_matrix(&mut rng, 6, 3, 2.0));
        let x = batch(random_matrix(&mut rng, 6, 5, 1.0));
        let mut prev: Option<Vec<f64>> = None;
        for iters in 0..30 {
            let cfg = EncoderConfig {
                max_iters: iters,
                ..EncoderConfig::default()
            };
            let r = encode_batch(&x, &w, &k, EncodingMode::BinaryBox, &cfg, None).unwrap();
            assert!(r.encodings.e().iter().all(|v| v.abs() <= 1.0));
            let vals: Vec<f64> = (0..5)
                .map(|i| distortion(r.encodings.e().column(i), x.x().column(i), &w, &k).unwrap().value)
                .collect();
            if let Some(p) = &prev {
                for (a, b) in vals.iter().zip(p) {
                    assert!(a <= b);
                }
            }
            prev = Some(vals);
        }
    }

    #[test]
    fn correlations_examples() {
        let x = batch(array![[1.0, -1.0]]);
        let e = Encodings::new(array![[1.0, 1.0]], EncodingMode::BinaryBox).unwrap();
        assert_eq!(correlations(&x, &e).unwrap().b(), &array![[0.0]]);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs = random_matrix(&mut rng, 3, 8, 1.0).mapv(|v: f64| v.signum());
        let es = random_matrix(&mut rng, 2, 8, 1.0).mapv(|v: f64| v.signum());
        let b = correlations(&batch(xs.clone()), &Encodings::new(es.clone(), EncodingMode::BinaryBox).unwrap()).unwrap();
        for v in 0..3 {
            for h in 0..2 {
                let mut s = 0.0;
                for i in 0..8 {
                    s += xs[[v, i]] * es[[h, i]];
                }
                assert!((b.b()[[v, h]] - s / 8.0).abs() < 1e-15);
            }
        }

        // X = E gives a symmetric PSD Gram matrix.
        let g = correlations(&batch(xs.clone()), &Encodings::new(xs.clone(), EncodingMode::BinaryBox).unwrap()).unwrap();
        assert_eq!(g.b(), &g.b().t().to_owned());
        for _ in 0..20 {
            let z = random_matrix(&mut rng, 3, 1, 1.0).column(0).to_owned();
            assert!(z.dot(&g.b().dot(&z)) >= -1e-12);
        }
    }

    proptest! {
        #[test]
        fn distortion_convex_in_encoding(seed in 0u64..10_000, lam in 0.0f64..=1.0) {
            let k = LossKernel::cross_entropy();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = weights(random_matrix(&mut rng, 4, 3, 3.0));
            let x = random_matrix(&mut rng, 4, 1, 1.0).column(0).to_owned();
            let a = random_matrix(&mut rng, 3, 1, 1.0).column(0).to_owned();
            let b = random_matrix(&mut rng, 3, 1, 1.0).column(0).to_owned();
            let f = |e: &Array1<f64>| distortion(e.view(), x.view(), &w, &k).unwrap().value;
            let mid = &a * lam + &b * (1.0 - lam);
            prop_assert!(f(&mid) <= lam * f(&a) + (1.0 - lam) * f(&b) + 1e-10);
        }

        #[test]
        fn encoding_commutes_with_permutation(seed in 0u64..1_000) {
            let k = LossKernel::cross_entropy();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = weights(random_matrix(&mut rng, 5, 3, 2.0));
            let x = random_matrix(&mut rng, 5, 7, 1.0);
            let mut perm: Vec<usize> = (0..7).collect();
            for i in (1..7).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let cfg = EncoderConfig::default();
            let a = encode_batch(&batch(x.clone()), &w, &k, EncodingMode::BinaryBox, &cfg, None).unwrap();
            let b = encode_batch(&batch(x.select(Axis(1), &perm)), &w, &k, EncodingMode::BinaryBox, &cfg, None).unwrap();
            let a_perm = a.encodings.select(&perm);
            for (p, q) in a_perm.e().iter().zip(b.encodings.e().iter()) {
                prop_assert!((p - q).abs() <= 1e-12);
            }
        }
    }
}
