//! Minimal dense row-major matrix substrate for the forward kernels.
//!
//! Weight files carry matrices as JSON with declared shapes
//! (`{"rows": r, "cols": c, "data": [...]}`); deserialization re-checks the
//! shape and finiteness invariants.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::KernelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = String;

    fn try_from(repr: MatrixRepr) -> Result<Self, Self::Error> {
        Matrix::new(repr.rows, repr.cols, repr.data).map_err(|e| e.to_string())
    }
}

impl From<Matrix> for MatrixRepr {
    fn from(m: Matrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, KernelError> {
        if data.len() != rows * cols {
            return Err(KernelError::ShapeMismatch {
                detail: format!("{rows}x{cols} matrix needs {} values, got {}", rows * cols, data.len()),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(KernelError::NonFinite);
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, KernelError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(KernelError::ShapeMismatch {
                detail: "ragged rows".to_string(),
            });
        }
        Matrix::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Uniform entries in [-1, 1).
    pub fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, KernelError> {
        if self.cols != other.rows {
            return Err(KernelError::ShapeMismatch {
                detail: format!(
                    "cannot multiply {}x{} by {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, KernelError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(KernelError::ShapeMismatch {
                detail: format!(
                    "cannot add {}x{} and {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Horizontal concatenation of equal-height matrices.
    pub fn hconcat(parts: &[Matrix]) -> Result<Matrix, KernelError> {
        let Some(first) = parts.first() else {
            return Err(KernelError::ShapeMismatch {
                detail: "hconcat of no matrices".to_string(),
            });
        };
        let rows = first.rows;
        if parts.iter().any(|m| m.rows != rows) {
            return Err(KernelError::ShapeMismatch {
                detail: "hconcat height mismatch".to_string(),
            });
        }
        let cols: usize = parts.iter().map(|m| m.cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let mut offset = 0;
            for part in parts {
                out.data[i * cols + offset..i * cols + offset + part.cols]
                    .copy_from_slice(part.row(i));
                offset += part.cols;
            }
        }
        Ok(out)
    }

    /// Vertical slices of width `width`, in order.
    pub fn hsplit(&self, width: usize) -> Result<Vec<Matrix>, KernelError> {
        if width == 0 || !self.cols.is_multiple_of(width) {
            return Err(KernelError::ShapeMismatch {
                detail: format!("cannot split {} columns into chunks of {width}", self.cols),
            });
        }
        let parts = self.cols / width;
        let mut out = Vec::with_capacity(parts);
        for p in 0..parts {
            let mut m = Matrix::zeros(self.rows, width);
            for i in 0..self.rows {
                for j in 0..width {
                    m.set(i, j, self.get(i, p * width + j));
                }
            }
            out.push(m);
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn construction_checks() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::from_rows(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn matmul_and_transpose() {
        let a = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(vec![vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap();
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab.data(), &[19.0, 22.0, 43.0, 50.0]);
        assert_eq!(a.transpose().data(), &[1.0, 3.0, 2.0, 4.0]);
        assert!(a.matmul(&Matrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = Matrix::random(3, 3, &mut rng);
        let i = Matrix::identity(3);
        assert!(a.matmul(&i).unwrap().max_abs_diff(&a) == 0.0);
    }

    #[test]
    fn concat_split_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let parts: Vec<Matrix> = (0..3).map(|_| Matrix::random(2, 4, &mut rng)).collect();
        let joined = Matrix::hconcat(&parts).unwrap();
        assert_eq!(joined.cols(), 12);
        let split = joined.hsplit(4).unwrap();
        assert_eq!(split, parts);
        assert!(joined.hsplit(5).is_err());
    }

    #[test]
    fn weight_file_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = Matrix::random(3, 2, &mut rng);
        let json = serde_json::to_string(&m).unwrap();
        let back: Matrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        // declared shape must match the data length
        let bad = r#"{"rows": 2, "cols": 2, "data": [1.0, 2.0, 3.0]}"#;
        assert!(serde_json::from_str::<Matrix>(bad).is_err());
    }
}
