//! Row-major matrices and the flat float32 tensor file format.
//!
//! A tensor on disk is a pair of files: `<stem>.f32` holding little-endian
//! 32-bit floats in row-major order, and `<stem>.json` holding
//! `{"shape": [...], "dtype": "float32", "layout": "row-major"}`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }
}

impl<T> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != cols {
                return Err(Error::shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend(r);
        }
        Ok(Self {
            rows: n,
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

/// JSON sidecar describing a flat tensor file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorHeader {
    pub shape: Vec<usize>,
    pub dtype: String,
    #[serde(default = "default_layout")]
    pub layout: String,
}

fn default_layout() -> String {
    "row-major".to_string()
}

impl TensorHeader {
    pub fn float32(shape: Vec<usize>) -> Self {
        Self {
            shape,
            dtype: "float32".into(),
            layout: default_layout(),
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Paths of the data and sidecar files for a tensor stem or either file.
pub fn tensor_paths(path: &Path) -> (PathBuf, PathBuf) {
    let stem = match path.extension().and_then(|e| e.to_str()) {
        Some("f32") | Some("json") | Some("bin") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let data = if path.extension().and_then(|e| e.to_str()) == Some("bin") {
        path.to_path_buf()
    } else {
        stem.with_extension("f32")
    };
    (data, stem.with_extension("json"))
}

pub fn write_tensor(path: &Path, shape: &[usize], values: impl IntoIterator<Item = f32>) -> Result<()> {
    let (data_path, header_path) = tensor_paths(path);
    let header = TensorHeader::float32(shape.to_vec());
    let mut bytes = Vec::with_capacity(header.len() * 4);
    let mut count = 0usize;
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
        count += 1;
    }
    if count != header.len() {
        return Err(Error::shape(format!(
            "tensor of shape {shape:?} needs {} values, got {count}",
            header.len()
        )));
    }
    write_atomic(&data_path, &bytes)?;
    write_atomic(&header_path, serde_json::to_string_pretty(&header)?.as_bytes())
}

pub fn read_tensor(path: &Path) -> Result<(TensorHeader, Vec<f32>)> {
    let (data_path, header_path) = tensor_paths(path);
    let text = fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
    let header: TensorHeader = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: header_path.clone(),
        reason: e.to_string(),
    })?;
    if header.dtype != "float32" {
        return Err(Error::Format {
            path: header_path,
            reason: format!("unsupported dtype {}", header.dtype),
        });
    }
    let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    if bytes.len() != header.len() * 4 {
        return Err(Error::Format {
            path: data_path,
            reason: format!(
                "expected {} bytes for shape {:?}, found {}",
                header.len() * 4,
                header.shape,
                bytes.len()
            ),
        });
    }
    let values = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok((header, values))
}

/// Loads a 2-D float matrix from a tensor file pair or a headerless CSV.
pub fn read_matrix(path: &Path) -> Result<Matrix<f64>> {
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        return read_csv_matrix(path);
    }
    let (header, values) = read_tensor(path)?;
    let (rows, cols) = match header.shape.as_slice() {
        [r, c] => (*r, *c),
        [r, rest @ ..] => (*r, rest.iter().product()),
        [] => (0, 0),
    };
    Matrix::from_vec(rows, cols, values.into_iter().map(f64::from).collect())
}

pub fn read_csv_matrix(path: &Path) -> Result<Matrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Format {
            path: path.into(),
            reason: e.to_string(),
        })?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Format {
            path: path.into(),
            reason: e.to_string(),
        })?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|e| Error::Format {
                    path: path.into(),
                    reason: format!("bad number `{s}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Matrix::from_rows(rows)
}

pub fn write_matrix(path: &Path, m: &Matrix<f64>) -> Result<()> {
    write_tensor(path, &[m.rows(), m.cols()], m.as_slice().iter().map(|&v| v as f32))
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("emb");
        let vals: Vec<f32> = (0..12).map(|i| i as f32 * 0.5 - 1.0).collect();
        write_tensor(&p, &[3, 4], vals.clone()).unwrap();
        let (h, back) = read_tensor(&dir.path().join("emb.f32")).unwrap();
        assert_eq!(h.shape, vec![3, 4]);
        assert_eq!(h.layout, "row-major");
        assert_eq!(back, vals);
        let m = read_matrix(&p).unwrap();
        assert_eq!(m.shape(), (3, 4));
        assert_eq!(m[(2, 3)], 4.5);
    }

    #[test]
    fn tensor_rejects_truncated_data() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t");
        write_tensor(&p, &[2, 2], [1.0, 2.0, 3.0, 4.0]).unwrap();
        fs::write(dir.path().join("t.f32"), [0u8; 12]).unwrap();
        assert!(matches!(read_tensor(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn csv_matrix() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(&p, "1, 2, 3\n4,5,6\n").unwrap();
        let m = read_matrix(&p).unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::from_rows(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
