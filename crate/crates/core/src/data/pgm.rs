//! Grayscale PGM (P5) output.

use std::fs;
use std::path::Path;

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Arrangement of image columns into a tile sheet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageLayout {
    pub width: usize,
    pub height: usize,
    /// Tiles per row of the sheet.
    pub tiles_per_row: usize,
    /// Black border between tiles, in pixels.
    pub padding: usize,
}

impl ImageLayout {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            tiles_per_row: 10,
            padding: 1,
        }
    }

    /// Square images when `visible` is a perfect square, else a single row.
    pub fn for_visible(visible: usize) -> Self {
        let side = (visible as f64).sqrt().round() as usize;
        if side * side == visible {
            Self::new(side, side)
        } else {
            Self::new(visible, 1)
        }
    }

    pub fn tiles_per_row(mut self, n: usize) -> Self {
        self.tiles_per_row = n.max(1);
        self
    }

    pub fn padding(mut self, p: usize) -> Self {
        self.padding = p;
        self
    }
}

/// Maps [-1,1] linearly onto 0..=255, rounding half to even (0 ↦ 128).
pub fn pixel_value(x: f64) -> u8 {
    let scaled = ((x.clamp(-1.0, 1.0) + 1.0) * 0.5 * 255.0).round_ties_even();
    scaled as u8
}

/// Encodes a P5 image.
pub fn pgm_bytes(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if pixels.len() != width * height {
        return Err(Error::dims("pgm pixels", width * height, pixels.len()));
    }
    fs::write(path, pgm_bytes(width, height, pixels)).map_err(|e| Error::io(path, e))
}

/// Writes every column of `images` (V×k, entries in [-1,1]) as one tile of
/// a sheet. Returns the sheet dimensions.
pub fn export_images(
    images: ArrayView2<f64>,
    layout: ImageLayout,
    path: impl AsRef<Path>,
) -> Result<(usize, usize)> {
    let (v, k) = images.dim();
    if layout.width * layout.height != v {
        return Err(Error::dims(
            "image layout",
            v,
            format!("{}×{}", layout.width, layout.height),
        ));
    }
    if k == 0 {
        return Err(Error::EmptyDataset);
    }
    let cols = layout.tiles_per_row.min(k);
    let rows = k.div_ceil(cols);
    let p = layout.padding;
    let sheet_w = cols * layout.width + (cols + 1) * p;
    let sheet_h = rows * layout.height + (rows + 1) * p;
    let mut pixels = vec![0u8; sheet_w * sheet_h];
    for (t, img) in images.columns().into_iter().enumerate() {
        let (tr, tc) = (t / cols, t % cols);
        let y0 = p + tr * (layout.height + p);
        let x0 = p + tc * (layout.width + p);
        for y in 0..layout.height {
            for x in 0..layout.width {
                pixels[(y0 + y) * sheet_w + x0 + x] = pixel_value(img[y * layout.width + x]);
            }
        }
    }
    write_pgm(path, sheet_w, sheet_h, &pixels)?;
    Ok((sheet_w, sheet_h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn pixel_mapping() {
        assert_eq!(pixel_value(-1.0), 0);
        assert_eq!(pixel_value(1.0), 255);
        assert_eq!(pixel_value(0.0), 128);
    }

    #[test]
    fn constant_images() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        let layout = ImageLayout::new(2, 2).padding(0);
        export_images(Array2::from_elem((4, 1), -1.0).view(), layout, &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&bytes[11..], &[0, 0, 0, 0]);
        export_images(Array2::from_elem((4, 1), 1.0).view(), layout, &p).unwrap();
        assert_eq!(&fs::read(&p).unwrap()[11..], &[255; 4]);
    }

    #[test]
    fn sheet_geometry() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.pgm");
        let layout = ImageLayout::new(3, 2).tiles_per_row(2).padding(1);
        let dims = export_images(Array2::zeros((6, 3)).view(), layout, &p).unwrap();
        assert_eq!(dims, (2 * 3 + 3, 2 * 2 + 3));
        assert!(export_images(Array2::zeros((5, 1)).view(), layout, &p).is_err());
    }
}
