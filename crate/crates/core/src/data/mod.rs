//! Datasets, binarization and file formats.
//!
//! Internally examples are *columns* (`X` is V×n). Every on-disk format
//! stores one example per *row*; loaders and writers transpose.

mod formats;
mod model;
mod pgm;

pub use formats::{load_dataset, read_matrix_csv, write_matrix_csv, DataFormat};
pub use model::{load_model, save_model, ModelFile, MODEL_MAGIC, MODEL_VERSION};
pub use pgm::{export_images, pgm_bytes, pixel_value, write_pgm, ImageLayout};

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Raw intensities in [0,1], one example per row (n×V).
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    rows: Array2<f64>,
    pub source: String,
    /// (height, width) when the examples are images.
    pub image_shape: Option<(usize, usize)>,
}

impl RawDataset {
    /// Values must already lie in [0,1].
    pub fn new(rows: Array2<f64>, source: impl Into<String>) -> Result<Self> {
        for &v in rows.iter() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange {
                    context: "raw dataset",
                    value: v,
                    range: "[0, 1]",
                });
            }
        }
        Ok(Self {
            rows,
            source: source.into(),
            image_shape: None,
        })
    }

    /// Rescales globally to [0,1] by min–max when any value falls outside it.
    pub fn normalized(mut rows: Array2<f64>, source: impl Into<String>) -> Result<Self> {
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("raw dataset".into()));
        }
        let (lo, hi) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if rows.len() > 0 && (lo < 0.0 || hi > 1.0) {
            let span = hi - lo;
            if span > 0.0 {
                rows.mapv_inplace(|v| (v - lo) / span);
            } else {
                rows.fill(0.5);
            }
        }
        Self::new(rows, source)
    }

    pub fn with_image_shape(mut self, height: usize, width: usize) -> Self {
        self.image_shape = Some((height, width));
        self
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn visible(&self) -> usize {
        self.rows.ncols()
    }

    /// First `n` examples.
    pub fn truncate(mut self, n: usize) -> Self {
        if n < self.len() {
            self.rows = self.rows.slice(ndarray::s![..n, ..]).to_owned();
        }
        self
    }
}

/// Data matrix `X` (V×n) of randomized bits in [-1,1].
#[derive(Debug, Clone, PartialEq)]
pub struct DataBatch {
    x: Array2<f64>,
    binarized: bool,
}

impl DataBatch {
    pub fn new(x: Array2<f64>, binarized: bool) -> Result<Self> {
        for &v in x.iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite("data batch".into()));
            }
            if binarized && v != 1.0 && v != -1.0 {
                return Err(Error::OutOfRange {
                    context: "binarized data batch",
                    value: v,
                    range: "{-1, +1}",
                });
            }
            if v.abs() > 1.0 {
                return Err(Error::OutOfRange {
                    context: "data batch",
                    value: v,
                    range: "[-1, 1]",
                });
            }
        }
        Ok(Self { x, binarized })
    }

    /// Builds a batch from one-example-per-row data (n×V).
    pub fn from_rows(rows: &Array2<f64>, binarized: bool) -> Result<Self> {
        Self::new(rows.t().to_owned(), binarized)
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.x
    }

    pub fn visible(&self) -> usize {
        self.x.nrows()
    }

    /// Number of examples.
    pub fn len(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.x.ncols() == 0
    }

    pub fn binarized(&self) -> bool {
        self.binarized
    }

    /// Examples at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select(Axis(1), idx),
            binarized: self.binarized,
        }
    }

    /// Draws ±1 bits with `P(+1) = (1 + x)/2` for every entry.
    pub fn sample_bits<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let x = self.x.mapv(|v| {
            if rng.random::<f64>() < 0.5 * (1.0 + v) {
                1.0
            } else {
                -1.0
            }
        });
        Self { x, binarized: true }
    }
}

/// How raw intensities become bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Binarization {
    /// +1 with probability equal to the intensity, −1 otherwise.
    #[default]
    Stochastic,
    /// Keeps the intensity as a randomized bit, `p ↦ 2p − 1`.
    PassThrough,
}

/// Converts raw intensities to a data batch. Reproducible for a fixed seed.
pub fn binarize(raw: &RawDataset, mode: Binarization, seed: u64) -> Result<DataBatch> {
    for &p in raw.rows.iter() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange {
                context: "binarize",
                value: p,
                range: "[0, 1]",
            });
        }
    }
    let t = raw.rows.t();
    match mode {
        Binarization::PassThrough => DataBatch::new(t.mapv(|p| 2.0 * p - 1.0), false),
        Binarization::Stochastic => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Draw in on-disk (row-major) order so results do not depend on layout.
            let drawn = raw
                .rows
                .mapv(|p| if rng.random::<f64>() < p { 1.0 } else { -1.0 });
            DataBatch::new(drawn.t().to_owned(), true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn binarize_extremes_and_pass_through() {
        let raw = RawDataset::new(array![[0.0, 1.0, 0.75]], "t").unwrap();
        for seed in 0..20 {
            let b = binarize(&raw, Binarization::Stochastic, seed).unwrap();
            assert!(b.binarized());
            assert_eq!(b.x()[[0, 0]], -1.0);
            assert_eq!(b.x()[[1, 0]], 1.0);
        }
        let p = binarize(&raw, Binarization::PassThrough, 0).unwrap();
        assert_eq!(p.x()[[2, 0]], 0.5);
        assert!(!p.binarized());
    }

    #[test]
    fn binarize_half_is_unbiased() {
        let n = 100_000;
        let raw = RawDataset::new(Array2::from_elem((n, 1), 0.5), "t").unwrap();
        let b = binarize(&raw, Binarization::Stochastic, 42).unwrap();
        let mean = b.x().sum() / n as f64;
        assert!(mean.abs() <= 3.0 * (1.0 / n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn binarize_is_reproducible() {
        let raw = RawDataset::new(Array2::from_elem((50, 7), 0.3), "t").unwrap();
        let a = binarize(&raw, Binarization::Stochastic, 9).unwrap();
        let b = binarize(&raw, Binarization::Stochastic, 9).unwrap();
        let c = binarize(&raw, Binarization::Stochastic, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn binarize_rejects_out_of_range() {
        let raw = RawDataset {
            rows: array![[1.5]],
            source: "t".into(),
            image_shape: None,
        };
        assert!(matches!(
            binarize(&raw, Binarization::Stochastic, 0),
            Err(Error::OutOfRange { .. })
        ));
        assert!(RawDataset::new(array![[-0.1]], "t").is_err());
    }

    #[test]
    fn normalization_rescales_only_when_needed() {
        let r = RawDataset::normalized(array![[0.2, 0.4]], "t").unwrap();
        assert_eq!(r.rows(), &array![[0.2, 0.4]]);
        let r = RawDataset::normalized(array![[-1.0, 1.0], [0.0, 1.0]], "t").unwrap();
        assert_eq!(r.rows(), &array![[0.0, 1.0], [0.5, 1.0]]);
    }

    #[test]
    fn batch_validation() {
        assert!(DataBatch::new(array![[0.5]], true).is_err());
        assert!(DataBatch::new(array![[1.5]], false).is_err());
        let b = DataBatch::from_rows(&array![[1.0, -1.0, 1.0]], true).unwrap();
        assert_eq!((b.visible(), b.len()), (3, 1));
    }
}
