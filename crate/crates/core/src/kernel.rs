//! Reconstruction-loss kernels.
//!
//! A kernel bundles a pair of partial losses `ℓ₊`, `ℓ₋` (the loss of a
//! reconstruction `x̃ ∈ [-1,1]` against true labels +1 and -1) with the
//! quantities the optimal decoder is built from:
//!
//! * the link `Γ(x) = ℓ₋(x) − ℓ₊(x)` and its clamped pseudoinverse,
//! * the potential well `Ψ`, whose average over encodings forms the slack
//!   function minimized by the decoder,
//! * the transfer function mapping a logit `wᵀe` to a reconstruction.
//!
//! Cross-entropy and Hamming have closed forms. Any other pair satisfying
//! the monotonicity requirement goes through [`LossKernel::general`], which
//! assembles `Ψ` and the transfer piecewise and inverts `Γ` by bisection.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::DataBatch;
use crate::error::{Error, Result};

/// Shared scalar function.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of ordered interior points used to validate monotonicity.
pub const MONOTONICITY_SAMPLES: usize = 64;

/// Clamp applied to cross-entropy reconstructions before they are fed back
/// into the partial losses.
pub const LOSS_CLAMP: f64 = 1e-12;

const GAMMA_INVERSE_TOL: f64 = 1e-10;

/// Identifier of a kernel, as used in configuration and model files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelId {
    #[serde(rename = "xent")]
    CrossEntropy,
    #[serde(rename = "hamming")]
    Hamming,
    #[serde(rename = "custom")]
    Custom,
}

impl KernelId {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelId::CrossEntropy => "xent",
            KernelId::Hamming => "hamming",
            KernelId::Custom => "custom",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            KernelId::CrossEntropy => 0,
            KernelId::Hamming => 1,
            KernelId::Custom => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(KernelId::CrossEntropy),
            1 => Some(KernelId::Hamming),
            2 => Some(KernelId::Custom),
            _ => None,
        }
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xent" | "cross-entropy" | "cross_entropy" => Ok(KernelId::CrossEntropy),
            "hamming" => Ok(KernelId::Hamming),
            other => Err(Error::UnknownKernel(other.to_string())),
        }
    }
}

/// Partial losses against true labels +1 (`loss_plus`) and -1 (`loss_minus`).
///
/// `loss_plus` must be decreasing and `loss_minus` increasing on (-1,1).
/// Derivatives and the link `Γ` may be supplied analytically; otherwise they
/// are obtained numerically.
#[derive(Clone)]
pub struct PartialLossPair {
    loss_plus: ScalarFn,
    loss_minus: ScalarFn,
    d_plus: Option<ScalarFn>,
    d_minus: Option<ScalarFn>,
    gamma: Option<ScalarFn>,
}

/// Partial-loss values at the endpoints of [-1,1]; any of them may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoints {
    pub plus_at_minus_one: f64,
    pub plus_at_one: f64,
    pub minus_at_minus_one: f64,
    pub minus_at_one: f64,
}

impl Endpoints {
    pub fn all_finite(&self) -> bool {
        [
            self.plus_at_minus_one,
            self.plus_at_one,
            self.minus_at_minus_one,
            self.minus_at_one,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

impl PartialLossPair {
    pub fn new(
        loss_plus: impl Fn(f64) -> f64 + Send + Sync + 'static,
        loss_minus: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            loss_plus: Arc::new(loss_plus),
            loss_minus: Arc::new(loss_minus),
            d_plus: None,
            d_minus: None,
            gamma: None,
        }
    }

    pub fn with_derivatives(
        mut self,
        d_plus: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d_minus: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.d_plus = Some(Arc::new(d_plus));
        self.d_minus = Some(Arc::new(d_minus));
        self
    }

    pub fn with_gamma(mut self, gamma: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.gamma = Some(Arc::new(gamma));
        self
    }

    /// `ℓ±(x) = ln(2 / (1 ± x))`.
    pub fn cross_entropy() -> Self {
        Self::new(|x| (2.0 / (1.0 + x)).ln(), |x| (2.0 / (1.0 - x)).ln())
    }

    /// `ℓ±(x) = (1 ∓ x) / 2`.
    pub fn hamming() -> Self {
        Self::new(|x| 0.5 * (1.0 - x), |x| 0.5 * (1.0 + x))
    }

    pub fn loss_plus(&self, x: f64) -> f64 {
        (self.loss_plus)(x)
    }

    pub fn loss_minus(&self, x: f64) -> f64 {
        (self.loss_minus)(x)
    }

    pub fn gamma(&self, x: f64) -> f64 {
        match &self.gamma {
            Some(g) => g(x),
            None => self.loss_minus(x) - self.loss_plus(x),
        }
    }

    pub fn endpoints(&self) -> Endpoints {
        Endpoints {
            plus_at_minus_one: self.loss_plus(-1.0),
            plus_at_one: self.loss_plus(1.0),
            minus_at_minus_one: self.loss_minus(-1.0),
            minus_at_one: self.loss_minus(1.0),
        }
    }

    fn d_plus(&self, x: f64) -> f64 {
        match &self.d_plus {
            Some(d) => d(x),
            None => central_difference(&*self.loss_plus, x),
        }
    }

    fn d_minus(&self, x: f64) -> f64 {
        match &self.d_minus {
            Some(d) => d(x),
            None => central_difference(&*self.loss_minus, x),
        }
    }

    /// Checks the monotonicity requirement on [`MONOTONICITY_SAMPLES`]
    /// ordered interior points.
    pub fn validate(&self) -> Result<()> {
        let xs = (0..MONOTONICITY_SAMPLES)
            .map(|k| -1.0 + 2.0 * (k + 1) as f64 / (MONOTONICITY_SAMPLES + 1) as f64);
        let mut prev: Option<(f64, f64, f64, f64)> = None;
        for x in xs {
            let (p, m, g) = (self.loss_plus(x), self.loss_minus(x), self.gamma(x));
            if !(p.is_finite() && m.is_finite() && g.is_finite()) {
                return Err(Error::InvalidKernel(format!(
                    "partial losses must be finite on (-1,1); not at x = {x}"
                )));
            }
            if let Some((px, pp, pm, pg)) = prev {
                if p > pp {
                    return Err(Error::InvalidKernel(format!(
                        "loss_plus increases between x = {px} and x = {x}"
                    )));
                }
                if m < pm {
                    return Err(Error::InvalidKernel(format!(
                        "loss_minus decreases between x = {px} and x = {x}"
                    )));
                }
                if g <= pg {
                    return Err(Error::InvalidKernel(format!(
                        "link loss_minus - loss_plus is not strictly increasing between x = {px} and x = {x}"
                    )));
                }
            }
            prev = Some((x, p, m, g));
        }
        Ok(())
    }
}

impl fmt::Debug for PartialLossPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartialLossPair")
            .field("endpoints", &self.endpoints())
            .field("analytic_derivatives", &self.d_plus.is_some())
            .field("analytic_gamma", &self.gamma.is_some())
            .finish()
    }
}

fn central_difference(f: &(dyn Fn(f64) -> f64 + Send + Sync), x: f64) -> f64 {
    // Step scales with the distance to the nearest endpoint so that losses
    // with a pole at ±1 stay well resolved.
    let room = 1.0 - x.abs();
    let h = (1e-5 * room.min(1.0)).max(4.0 * f64::EPSILON);
    let (lo, hi) = ((x - h).max(-1.0), (x + h).min(1.0));
    (f(hi) - f(lo)) / (hi - lo)
}

/// A reconstruction-loss kernel. Immutable and cheap to clone.
#[derive(Clone)]
pub struct LossKernel {
    inner: KernelImpl,
}

#[derive(Clone)]
enum KernelImpl {
    CrossEntropy,
    Hamming,
    General(Arc<GeneralKernel>),
}

struct GeneralKernel {
    partials: PartialLossPair,
    gamma_lo: f64,
    gamma_hi: f64,
    ends: Endpoints,
}

impl LossKernel {
    pub fn cross_entropy() -> Self {
        Self {
            inner: KernelImpl::CrossEntropy,
        }
    }

    pub fn hamming() -> Self {
        Self {
            inner: KernelImpl::Hamming,
        }
    }

    /// Builds a kernel from arbitrary partial losses.
    pub fn general(partials: PartialLossPair) -> Result<Self> {
        partials.validate()?;
        let ends = partials.endpoints();
        let gamma_lo = partials.gamma(-1.0);
        let gamma_hi = partials.gamma(1.0);
        if gamma_lo.is_nan() || gamma_hi.is_nan() {
            return Err(Error::InvalidKernel(
                "link is undefined at an endpoint of [-1,1]".into(),
            ));
        }
        Ok(Self {
            inner: KernelImpl::General(Arc::new(GeneralKernel {
                partials,
                gamma_lo,
                gamma_hi,
                ends,
            })),
        })
    }

    /// Closed-form kernel for a configuration identifier.
    pub fn from_id(id: KernelId) -> Result<Self> {
        match id {
            KernelId::CrossEntropy => Ok(Self::cross_entropy()),
            KernelId::Hamming => Ok(Self::hamming()),
            KernelId::Custom => Err(Error::InvalidKernel(
                "custom kernels must be supplied through the library API".into(),
            )),
        }
    }

    pub fn id(&self) -> KernelId {
        match self.inner {
            KernelImpl::CrossEntropy => KernelId::CrossEntropy,
            KernelImpl::Hamming => KernelId::Hamming,
            KernelImpl::General(_) => KernelId::Custom,
        }
    }

    pub fn loss_plus(&self, x: f64) -> f64 {
        match &self.inner {
            KernelImpl::CrossEntropy => (2.0 / (1.0 + x)).ln(),
            KernelImpl::Hamming => 0.5 * (1.0 - x),
            KernelImpl::General(g) => g.partials.loss_plus(x),
        }
    }

    pub fn loss_minus(&self, x: f64) -> f64 {
        match &self.inner {
            KernelImpl::CrossEntropy => (2.0 / (1.0 - x)).ln(),
            KernelImpl::Hamming => 0.5 * (1.0 + x),
            KernelImpl::General(g) => g.partials.loss_minus(x),
        }
    }

    /// Link `Γ(x) = ℓ₋(x) − ℓ₊(x)`.
    pub fn gamma(&self, x: f64) -> f64 {
        match &self.inner {
            KernelImpl::CrossEntropy => ((1.0 + x) / (1.0 - x)).ln(),
            KernelImpl::Hamming => x,
            KernelImpl::General(g) => g.partials.gamma(x),
        }
    }

    /// Pseudoinverse of `Γ`, saturating at ±1 outside `(Γ(-1), Γ(1))`.
    pub fn gamma_inverse(&self, m: f64) -> f64 {
        match &self.inner {
            KernelImpl::CrossEntropy => (0.5 * m).tanh(),
            KernelImpl::Hamming => m.clamp(-1.0, 1.0),
            KernelImpl::General(g) => g.gamma_inverse(m),
        }
    }

    /// Potential well `Ψ(m)`.
    pub fn psi(&self, m: f64) -> f64 {
        match &self.inner {
            KernelImpl::CrossEntropy => {
                let a = m.abs();
                a + 2.0 * (-a).exp().ln_1p()
            }
            KernelImpl::Hamming => m.abs().max(1.0),
            KernelImpl::General(g) => g.psi(m),
        }
    }

    /// Derivative of `Ψ` (a subgradient at kinks).
    pub fn psi_prime(&self, m: f64) -> f64 {
        match &self.inner {
            KernelImpl::CrossEntropy => (0.5 * m).tanh(),
            KernelImpl::Hamming => {
                if m.abs() > 1.0 {
                    m.signum()
                } else {
                    0.0
                }
            }
            KernelImpl::General(g) => g.psi_prime(m),
        }
    }

    /// Optimal reconstruction of a bit with logit `m`.
    pub fn transfer(&self, m: f64) -> f64 {
        match &self.inner {
            KernelImpl::CrossEntropy => (0.5 * m).tanh(),
            KernelImpl::Hamming => m.clamp(-1.0, 1.0),
            KernelImpl::General(g) => g.transfer(m),
        }
    }

    /// Pulls a reconstruction off any endpoint where a partial loss is
    /// infinite, so it can be scored without producing `inf`.
    pub fn clamp_for_loss(&self, x: f64) -> f64 {
        match &self.inner {
            KernelImpl::CrossEntropy => x.clamp(-1.0 + LOSS_CLAMP, 1.0 - LOSS_CLAMP),
            KernelImpl::Hamming => x,
            KernelImpl::General(g) => {
                let lo = if g.ends.plus_at_minus_one.is_finite() {
                    -1.0
                } else {
                    -1.0 + LOSS_CLAMP
                };
                let hi = if g.ends.minus_at_one.is_finite() {
                    1.0
                } else {
                    1.0 - LOSS_CLAMP
                };
                x.clamp(lo, hi)
            }
        }
    }

    /// Expected loss of reconstruction `x_tilde` against a randomized bit `x`.
    pub fn bit_loss(&self, x: f64, x_tilde: f64) -> f64 {
        let wp = 0.5 * (1.0 + x);
        let wm = 0.5 * (1.0 - x);
        // A zero weight must not multiply an infinite partial loss.
        let plus = if wp == 0.0 { 0.0 } else { wp * self.loss_plus(x_tilde) };
        let minus = if wm == 0.0 { 0.0 } else { wm * self.loss_minus(x_tilde) };
        plus + minus
    }
}

impl GeneralKernel {
    fn gamma_inverse(&self, m: f64) -> f64 {
        if m <= self.gamma_lo {
            return -1.0;
        }
        if m >= self.gamma_hi {
            return 1.0;
        }
        let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return mid;
            }
            // Relative to the distance from the nearest endpoint.
            if hi - lo <= GAMMA_INVERSE_TOL * (1.0 - mid.abs()) {
                return mid;
            }
            if self.partials.gamma(mid) < m {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    fn psi(&self, m: f64) -> f64 {
        if m <= self.gamma_lo {
            -m + 2.0 * self.ends.minus_at_minus_one
        } else if m >= self.gamma_hi {
            m + 2.0 * self.ends.plus_at_one
        } else {
            let x = self.gamma_inverse(m);
            self.partials.loss_plus(x) + self.partials.loss_minus(x)
        }
    }

    /// At a kink `m = Γ(±1)` this is the one-sided derivative from inside.
    fn psi_prime(&self, m: f64) -> f64 {
        if m < self.gamma_lo {
            -1.0
        } else if m > self.gamma_hi {
            1.0
        } else {
            let x = self.gamma_inverse(m);
            let (dp, dm) = (self.partials.d_plus(x), self.partials.d_minus(x));
            (dp + dm) / (dm - dp)
        }
    }

    fn transfer(&self, m: f64) -> f64 {
        if m <= self.gamma_lo {
            -1.0
        } else if m >= self.gamma_hi {
            1.0
        } else {
            self.gamma_inverse(m)
        }
    }
}

impl fmt::Debug for LossKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.inner {
            KernelImpl::CrossEntropy => f.write_str("LossKernel(xent)"),
            KernelImpl::Hamming => f.write_str("LossKernel(hamming)"),
            KernelImpl::General(g) => f
                .debug_struct("LossKernel")
                .field("partials", &g.partials)
                .field("gamma_range", &(g.gamma_lo, g.gamma_hi))
                .finish(),
        }
    }
}

/// Mean over examples of the summed per-bit loss, `(1/n) Σ_i Σ_v ℓ(x_vi, x̃_vi)`.
///
/// Fails with [`Error::LossOverflow`] when a saturated reconstruction
/// disagrees with its label.
pub fn reconstruction_loss(x: &DataBatch, x_tilde: &Array2<f64>, kernel: &LossKernel) -> Result<f64> {
    total_loss(x, x_tilde, kernel, false)
}

/// Like [`reconstruction_loss`], with reconstructions pulled off infinite
/// endpoints first (see [`LossKernel::clamp_for_loss`]). Always finite.
pub fn reconstruction_loss_clamped(x: &DataBatch, x_tilde: &Array2<f64>, kernel: &LossKernel) -> Result<f64> {
    total_loss(x, x_tilde, kernel, true)
}

fn total_loss(x: &DataBatch, x_tilde: &Array2<f64>, kernel: &LossKernel, clamp: bool) -> Result<f64> {
    if x.x().dim() != x_tilde.dim() {
        return Err(Error::dims(
            "reconstruction",
            format!("{:?}", x.x().dim()),
            format!("{:?}", x_tilde.dim()),
        ));
    }
    if x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for ((v, i), &xv) in x.x().indexed_iter() {
        let mut r = x_tilde[[v, i]];
        if clamp {
            r = kernel.clamp_for_loss(r);
        }
        let l = kernel.bit_loss(xv, r);
        if !l.is_finite() {
            return Err(Error::LossOverflow { example: i, bit: v });
        }
        total += l;
    }
    Ok(total / x.len() as f64)
}
