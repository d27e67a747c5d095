//! Worst-case optimal decoding.
//!
//! Given encodings `E` (H×n) and pairwise correlations `B = XEᵀ/n` (V×H),
//! the decoder that minimizes worst-case reconstruction loss over every
//! dataset consistent with `B` is a layer of sigmoid neurons. Its weights
//! `wᵥ` solve the convex per-bit problems
//!
//! ```text
//! wᵥ* = argmin_w  −bᵥᵀw + (1/n) Σᵢ Ψ(wᵀe⁽ⁱ⁾) + ε‖w‖₁
//! ```
//!
//! and half the summed optimal slack is the game value, an upper bound on
//! the loss of any such dataset.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::Encodings;
use crate::error::{Error, Result};
use crate::kernel::{KernelId, LossKernel};

/// Decoding weights, one row `wᵥ` per visible bit.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderWeights {
    w: Array2<f64>,
    kernel_id: KernelId,
}

impl DecoderWeights {
    pub fn new(w: Array2<f64>, kernel_id: KernelId) -> Result<Self> {
        if w.nrows() == 0 || w.ncols() == 0 {
            return Err(Error::dims("decoder weights", "V ≥ 1 and H ≥ 1", format!("{:?}", w.dim())));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("decoder weights".into()));
        }
        Ok(Self { w, kernel_id })
    }

    pub fn zeros(visible: usize, hidden: usize, kernel_id: KernelId) -> Self {
        Self {
            w: Array2::zeros((visible, hidden)),
            kernel_id,
        }
    }

    /// I.i.d. standard normal entries.
    pub fn gaussian<R: Rng + ?Sized>(
        visible: usize,
        hidden: usize,
        kernel_id: KernelId,
        rng: &mut R,
    ) -> Self {
        let w = Array2::from_shape_simple_fn((visible, hidden), || rng.sample(StandardNormal));
        Self { w, kernel_id }
    }

    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.w
    }

    pub fn kernel_id(&self) -> KernelId {
        self.kernel_id
    }

    pub fn visible(&self) -> usize {
        self.w.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w.ncols()
    }
}

/// Pairwise correlations between visible and encoded bits.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    b: Array2<f64>,
    n_source: usize,
}

impl CorrelationMatrix {
    /// Entries must be finite. They lie in [-1,1] whenever the encodings
    /// do; unconstrained encodings can produce larger values.
    pub fn new(b: Array2<f64>, n_source: usize) -> Result<Self> {
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("correlation matrix".into()));
        }
        Ok(Self { b, n_source })
    }

    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn visible(&self) -> usize {
        self.b.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.b.ncols()
    }
}

/// Adagrad settings for the per-bit weight problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub learning_rate: f64,
    pub accumulator_offset: f64,
    pub max_iters: usize,
    /// Exit once the ∞-norm of the (sub)gradient falls to this value.
    pub tolerance: f64,
    pub l1_epsilon: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            accumulator_offset: 1e-8,
            max_iters: 2000,
            tolerance: 1e-6,
            l1_epsilon: 0.0,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("decoder learning rate must be positive".into()));
        }
        if !(self.l1_epsilon >= 0.0 && self.l1_epsilon.is_finite()) {
            return Err(Error::InvalidConfig("l1_epsilon must be non-negative".into()));
        }
        if !(self.tolerance >= 0.0) || !(self.accumulator_offset >= 0.0) {
            return Err(Error::InvalidConfig(
                "decoder tolerance and accumulator offset must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Result of [`fit_weights`].
#[derive(Debug, Clone)]
pub struct DecoderFit {
    pub weights: DecoderWeights,
    /// Adagrad iterations taken per visible bit.
    pub iterations: Vec<usize>,
    /// Visible bits whose solve stopped at the iteration cap.
    pub capped: Vec<usize>,
}

impl DecoderFit {
    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }
}

fn check_row_dims(w_v: &ArrayView1<f64>, b_v: &ArrayView1<f64>, e: &Encodings) -> Result<()> {
    if w_v.len() != e.hidden() {
        return Err(Error::dims("slack weights", e.hidden(), w_v.len()));
    }
    if b_v.len() != e.hidden() {
        return Err(Error::dims("slack correlations", e.hidden(), b_v.len()));
    }
    if e.len() == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

fn row_logits(w_v: &ArrayView1<f64>, e: &ArrayView2<f64>, out: &mut Array1<f64>) {
    out.fill(0.0);
    for (wh, eh) in w_v.iter().zip(e.outer_iter()) {
        if *wh != 0.0 {
            out.scaled_add(*wh, &eh);
        }
    }
}

fn row_slack(
    w_v: &ArrayView1<f64>,
    b_v: &ArrayView1<f64>,
    e: &ArrayView2<f64>,
    kernel: &LossKernel,
    l1: f64,
    scratch: &mut Array1<f64>,
) -> f64 {
    row_logits(w_v, e, scratch);
    let n = e.ncols() as f64;
    let well = scratch.iter().map(|&m| kernel.psi(m)).sum::<f64>() / n;
    let mut s = -b_v.dot(w_v) + well;
    if l1 > 0.0 {
        s += l1 * w_v.iter().map(|v| v.abs()).sum::<f64>();
    }
    s
}

/// Smooth part of the slack gradient, `−bᵥ + (1/n) Σᵢ Ψ′(wᵥᵀe⁽ⁱ⁾) e⁽ⁱ⁾`.
fn row_smooth_gradient(
    w_v: &ArrayView1<f64>,
    b_v: &ArrayView1<f64>,
    e: &ArrayView2<f64>,
    kernel: &LossKernel,
    logits: &mut Array1<f64>,
    out: &mut Array1<f64>,
) {
    row_logits(w_v, e, logits);
    logits.mapv_inplace(|m| kernel.psi_prime(m));
    let n = e.ncols() as f64;
    for ((g, eh), bh) in out.iter_mut().zip(e.outer_iter()).zip(b_v.iter()) {
        *g = eh.dot(logits) / n - bh;
    }
}

/// Bitwise slack `−bᵥᵀwᵥ + (1/n) Σᵢ Ψ(wᵥᵀe⁽ⁱ⁾) + ε‖wᵥ‖₁`.
pub fn slack(
    w_v: ArrayView1<f64>,
    b_v: ArrayView1<f64>,
    e: &Encodings,
    kernel: &LossKernel,
    l1_epsilon: f64,
) -> Result<f64> {
    check_row_dims(&w_v, &b_v, e)?;
    let mut scratch = Array1::zeros(e.len());
    Ok(row_slack(&w_v, &b_v, &e.e().view(), kernel, l1_epsilon, &mut scratch))
}

/// Gradient of [`slack`]; the L1 term contributes `ε·sign(w)` (0 at 0).
pub fn slack_gradient(
    w_v: ArrayView1<f64>,
    b_v: ArrayView1<f64>,
    e: &Encodings,
    kernel: &LossKernel,
    l1_epsilon: f64,
) -> Result<Array1<f64>> {
    check_row_dims(&w_v, &b_v, e)?;
    let mut logits = Array1::zeros(e.len());
    let mut g = Array1::zeros(e.hidden());
    row_smooth_gradient(&w_v, &b_v, &e.e().view(), kernel, &mut logits, &mut g);
    if l1_epsilon > 0.0 {
        for (gh, wh) in g.iter_mut().zip(w_v.iter()) {
            if *wh != 0.0 {
                *gh += l1_epsilon * wh.signum();
            }
        }
    }
    Ok(g)
}

struct RowFit {
    w: Array1<f64>,
    iterations: usize,
    capped: bool,
}

fn fit_row(
    w0: ArrayView1<f64>,
    b_v: ArrayView1<f64>,
    e: &ArrayView2<f64>,
    kernel: &LossKernel,
    cfg: &DecoderConfig,
    row: usize,
) -> Result<RowFit> {
    let h = w0.len();
    let eps = cfg.l1_epsilon;
    let mut w = w0.to_owned();
    let mut acc = Array1::<f64>::zeros(h);
    let mut g = Array1::<f64>::zeros(h);
    let mut scratch = Array1::<f64>::zeros(e.ncols());

    let start = row_slack(&w0, &b_v, e, kernel, eps, &mut scratch);
    let mut iterations = cfg.max_iters;
    let mut capped = true;
    for it in 0..cfg.max_iters {
        row_smooth_gradient(&w.view(), &b_v, e, kernel, &mut scratch, &mut g);
        if eps > 0.0 {
            // Minimum-norm subgradient of the L1 term.
            for (gh, wh) in g.iter_mut().zip(w.iter()) {
                if *wh != 0.0 {
                    *gh += eps * wh.signum();
                } else if gh.abs() <= eps {
                    *gh = 0.0;
                } else {
                    *gh -= eps * gh.signum();
                }
            }
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "decoder gradient for visible bit {row} at iteration {it}"
            )));
        }
        if g.iter().fold(0.0_f64, |a, v| a.max(v.abs())) <= cfg.tolerance {
            iterations = it;
            capped = false;
            break;
        }
        for ((wh, ah), gh) in w.iter_mut().zip(acc.iter_mut()).zip(g.iter()) {
            *ah += gh * gh;
            let next = *wh - cfg.learning_rate * gh / (ah.sqrt() + cfg.accumulator_offset);
            // Under L1 a coordinate that crosses zero stops there.
            *wh = if eps > 0.0 && *wh != 0.0 && next.signum() != wh.signum() {
                0.0
            } else {
                next
            };
        }
    }

    // Adagrad is not a descent method; never hand back something worse
    // than the warm start.
    let end = row_slack(&w.view(), &b_v, e, kernel, eps, &mut scratch);
    if !end.is_finite() {
        return Err(Error::NonFinite(format!("decoder slack for visible bit {row}")));
    }
    if end > start {
        w.assign(&w0);
    }
    Ok(RowFit {
        w,
        iterations,
        capped,
    })
}

/// Solves the V independent bitwise slack minimizations.
///
/// `init` warm-starts the solver; without it every row starts at zero.
pub fn fit_weights(
    e: &Encodings,
    b: &CorrelationMatrix,
    kernel: &LossKernel,
    cfg: &DecoderConfig,
    init: Option<&DecoderWeights>,
) -> Result<DecoderFit> {
    cfg.validate()?;
    if b.hidden() != e.hidden() {
        return Err(Error::dims("correlations vs encodings (H)", e.hidden(), b.hidden()));
    }
    if e.len() == 0 {
        return Err(Error::EmptyDataset);
    }
    let (v, h) = (b.visible(), b.hidden());
    let zeros;
    let w0 = match init {
        Some(w) => {
            if w.w().dim() != (v, h) {
                return Err(Error::dims(
                    "initial decoder weights",
                    format!("{v}×{h}"),
                    format!("{:?}", w.w().dim()),
                ));
            }
            w.w()
        }
        None => {
            zeros = Array2::zeros((v, h));
            &zeros
        }
    };
    let ev = e.e().view();
    let rows: Vec<RowFit> = (0..v)
        .into_par_iter()
        .map(|r| fit_row(w0.row(r), b.b().row(r), &ev, kernel, cfg, r))
        .collect::<Result<_>>()?;

    let mut w = Array2::zeros((v, h));
    let mut iterations = Vec::with_capacity(v);
    let mut capped = Vec::new();
    for (r, fit) in rows.into_iter().enumerate() {
        w.row_mut(r).assign(&fit.w);
        iterations.push(fit.iterations);
        if fit.capped {
            capped.push(r);
        }
    }
    if !capped.is_empty() {
        log::warn!(
            "decoder: {} of {} visible bits reached the iteration cap ({})",
            capped.len(),
            v,
            cfg.max_iters
        );
    }
    Ok(DecoderFit {
        weights: DecoderWeights::new(w, kernel.id())?,
        iterations,
        capped,
    })
}

fn check_model_dims(e: &Encodings, w: &DecoderWeights) -> Result<()> {
    if w.hidden() != e.hidden() {
        return Err(Error::dims("decoder weights vs encodings (H)", e.hidden(), w.hidden()));
    }
    Ok(())
}

/// Logits `WE` (V×n).
pub fn logits(e: &Encodings, w: &DecoderWeights) -> Result<Array2<f64>> {
    check_model_dims(e, w)?;
    Ok(w.w().dot(e.e()))
}

/// Reconstructions: entry (v,i) is `transfer(wᵥᵀe⁽ⁱ⁾)`.
pub fn decode(e: &Encodings, w: &DecoderWeights, kernel: &LossKernel) -> Result<Array2<f64>> {
    let mut m = logits(e, w)?;
    m.mapv_inplace(|v| kernel.transfer(v));
    Ok(m)
}

/// Hallucinated data `Ψ′(WE)`.
pub fn hallucinated_data(e: &Encodings, w: &DecoderWeights, kernel: &LossKernel) -> Result<Array2<f64>> {
    let mut m = logits(e, w)?;
    m.mapv_inplace(|v| kernel.psi_prime(v));
    Ok(m)
}

/// Hallucinated correlations `B̌ = (1/n) Ψ′(WE) Eᵀ`; equal to `B` at the optimum.
pub fn hallucinated_correlations(
    e: &Encodings,
    w: &DecoderWeights,
    kernel: &LossKernel,
) -> Result<Array2<f64>> {
    let xh = hallucinated_data(e, w, kernel)?;
    Ok(xh.dot(&e.e().t()) / e.len() as f64)
}

/// Game value `½ Σᵥ γ(wᵥ, bᵥ)` without the L1 term.
pub fn game_value(
    w: &DecoderWeights,
    b: &CorrelationMatrix,
    e: &Encodings,
    kernel: &LossKernel,
) -> Result<f64> {
    check_model_dims(e, w)?;
    if b.b().dim() != w.w().dim() {
        return Err(Error::dims(
            "correlations vs weights",
            format!("{:?}", w.w().dim()),
            format!("{:?}", b.b().dim()),
        ));
    }
    if e.len() == 0 {
        return Err(Error::EmptyDataset);
    }
    let ev = e.e().view();
    let mut scratch = Array1::zeros(e.len());
    let total: f64 = w
        .w()
        .axis_iter(Axis(0))
        .zip(b.b().axis_iter(Axis(0)))
        .map(|(wv, bv)| row_slack(&wv, &bv, &ev, kernel, 0.0, &mut scratch))
        .sum();
    Ok(0.5 * total)
}
