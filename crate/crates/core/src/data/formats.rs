use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use super::RawDataset;
use crate::error::{Error, Result};

/// Dataset file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    /// Comma-separated values, one example per line, header optional.
    Csv,
    /// IDX image file (big-endian, magic `0x00000803`), bytes scaled by 1/255.
    IdxImages,
    /// Little-endian `u32` n, `u32` V, then n·V little-endian `f32`.
    RawF32,
}

impl DataFormat {
    /// Guesses from the file extension; defaults to CSV.
    pub fn infer(path: &Path) -> Self {
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        if name.ends_with("idx3-ubyte") || name.ends_with(".idx") {
            DataFormat::IdxImages
        } else if name.ends_with(".f32") || name.ends_with(".raw") {
            DataFormat::RawF32
        } else {
            DataFormat::Csv
        }
    }
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DataFormat::Csv),
            "idx" | "idx_images" | "idx-images" => Ok(DataFormat::IdxImages),
            "raw_f32" | "raw-f32" | "f32" => Ok(DataFormat::RawF32),
            other => Err(Error::InvalidConfig(format!("unknown data format `{other}`"))),
        }
    }
}

/// Loads a dataset, normalized to [0,1].
pub fn load_dataset(path: impl AsRef<Path>, format: DataFormat) -> Result<RawDataset> {
    let path = path.as_ref();
    let source = path.display().to_string();
    match format {
        DataFormat::Csv => RawDataset::normalized(read_matrix_csv(path)?, source),
        DataFormat::IdxImages => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let (rows, h, w) = parse_idx_images(path, &bytes)?;
            Ok(RawDataset::new(rows, source)?.with_image_shape(h, w))
        }
        DataFormat::RawF32 => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            RawDataset::normalized(parse_raw_f32(path, &bytes)?, source)
        }
    }
}

fn header_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn be_u32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

pub(crate) fn parse_idx_images(path: &Path, bytes: &[u8]) -> Result<(Array2<f64>, usize, usize)> {
    if bytes.len() < 16 {
        return Err(header_error(path, "file shorter than the 16-byte IDX header"));
    }
    let magic = be_u32(&bytes[0..4]);
    if magic != 0x0000_0803 {
        return Err(header_error(path, format!("bad magic 0x{magic:08x}, expected 0x00000803")));
    }
    let n = be_u32(&bytes[4..8]) as usize;
    let h = be_u32(&bytes[8..12]) as usize;
    let w = be_u32(&bytes[12..16]) as usize;
    let expected = n
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(|| header_error(path, "declared dimensions overflow"))?;
    let payload = &bytes[16..];
    if payload.len() != expected {
        return Err(header_error(
            path,
            format!("header declares {n}×{h}×{w} = {expected} bytes, payload has {}", payload.len()),
        ));
    }
    let rows = Array2::from_shape_vec((n, h * w), payload.iter().map(|&b| b as f64 / 255.0).collect())
        .expect("length checked above");
    Ok((rows, h, w))
}

pub(crate) fn parse_raw_f32(path: &Path, bytes: &[u8]) -> Result<Array2<f64>> {
    if bytes.len() < 8 {
        return Err(header_error(path, "file shorter than the 8-byte (n, V) header"));
    }
    let n = le_u32(&bytes[0..4]) as usize;
    let v = le_u32(&bytes[4..8]) as usize;
    let payload = &bytes[8..];
    let expected = n
        .checked_mul(v)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| header_error(path, "declared dimensions overflow"))?;
    if payload.len() != expected {
        return Err(header_error(
            path,
            format!("header declares n={n}, V={v} ({expected} bytes), payload has {}", payload.len()),
        ));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(Array2::from_shape_vec((n, v), values).expect("length checked above"))
}

/// Reads a numeric CSV, one row per line. A non-numeric first line is
/// treated as a header.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, 0, e))?;
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, idx, e))?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let parsed = match parsed {
            Ok(p) => p,
            Err(_) if idx == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    record: idx,
                    reason: e.to_string(),
                })
            }
        };
        match width {
            None => width = Some(parsed.len()),
            Some(w) if w != parsed.len() => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    record: idx,
                    reason: format!("expected {w} fields, found {}", parsed.len()),
                })
            }
            _ => {}
        }
        values.extend(parsed);
        rows += 1;
    }
    let width = width.unwrap_or(0);
    Ok(Array2::from_shape_vec((rows, width), values).expect("row widths checked"))
}

fn csv_error(path: &Path, record: usize, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            record,
            reason: format!("{other:?}"),
        },
    }
}

/// Writes `rows` as CSV, one matrix row per line, using the shortest
/// round-tripping float representation.
pub fn write_matrix_csv(path: impl AsRef<Path>, rows: &Array2<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, 0, e))?;
    for (i, row) in rows.outer_iter().enumerate() {
        writer
            .write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| csv_error(path, i, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn csv_row_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "0,0.5,1\n").unwrap();
        let r = load_dataset(&p, DataFormat::Csv).unwrap();
        assert_eq!(r.rows(), &array![[0.0, 0.5, 1.0]]);

        fs::write(&p, "a,b,c\n0,0.5,1\n1,1,0\n").unwrap();
        let r = load_dataset(&p, DataFormat::Csv).unwrap();
        assert_eq!(r.rows(), &array![[0.0, 0.5, 1.0], [1.0, 1.0, 0.0]]);

        fs::write(&p, "0,0.5,1\n1,1\n").unwrap();
        assert!(matches!(load_dataset(&p, DataFormat::Csv), Err(Error::Parse { .. })));
        fs::write(&p, "0,0.5,1\n1,x,0\n").unwrap();
        assert!(matches!(load_dataset(&p, DataFormat::Csv), Err(Error::Parse { .. })));
    }

    #[test]
    fn idx_fixture() {
        let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        bytes.extend([0u8, 255, 51, 102, 255, 255, 0, 0]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.idx3-ubyte");
        fs::write(&p, &bytes).unwrap();
        assert_eq!(DataFormat::infer(&p), DataFormat::IdxImages);
        let r = load_dataset(&p, DataFormat::IdxImages).unwrap();
        assert_eq!((r.len(), r.visible()), (2, 4));
        assert_eq!(r.image_shape, Some((2, 2)));
        assert_eq!(r.rows()[[0, 2]], 0.2);
        assert_eq!(r.rows()[[0, 3]], 0.4);

        bytes[3] = 1;
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(load_dataset(&p, DataFormat::IdxImages), Err(Error::MalformedHeader { .. })));
        bytes[3] = 3;
        bytes.pop();
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(load_dataset(&p, DataFormat::IdxImages), Err(Error::MalformedHeader { .. })));
    }

    #[test]
    fn raw_f32_header_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.f32");
        let mut bytes = Vec::new();
        bytes.extend(2u32.to_le_bytes());
        bytes.extend(3u32.to_le_bytes());
        for v in [0.0f32, 0.25, 0.5, 0.75, 1.0, 0.125] {
            bytes.extend(v.to_le_bytes());
        }
        fs::write(&p, &bytes).unwrap();
        let r = load_dataset(&p, DataFormat::RawF32).unwrap();
        assert_eq!(r.rows(), &array![[0.0, 0.25, 0.5], [0.75, 1.0, 0.125]]);

        bytes[0] = 3;
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(load_dataset(&p, DataFormat::RawF32), Err(Error::MalformedHeader { .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_dataset("/nonexistent/file.csv", DataFormat::Csv),
            Err(Error::Io { .. })
        ));
        assert!(matches!(
            load_dataset("/nonexistent/file.f32", DataFormat::RawF32),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn matrix_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = array![[0.1, -1.0 / 3.0], [1e-300, 2.5]];
        write_matrix_csv(&p, &m).unwrap();
        assert_eq!(read_matrix_csv(&p).unwrap(), m);
    }
}
