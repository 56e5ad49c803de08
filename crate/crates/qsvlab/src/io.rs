//! JSON formats for matrices, states and subspaces.
//!
//! A matrix is stored as `{"dims": [..], "re": [[..]], "im": [[..]]}` with
//! row-major nested arrays. A subspace uses the same layout with one column
//! per spanning vector.

use crate::error::{QsvError, Result};
use crate::qmath::{self, c64, CMat};
use crate::states::{DensityMatrix, Subspace};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_mat(m: &CMat, dims: &[usize]) -> Self {
        let (re, im) = qmath::to_real_matrix_pair(m);
        MatrixJson { dims: dims.to_vec(), re, im }
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        Self::from_mat(rho.mat(), rho.dims())
    }

    pub fn from_subspace(v: &Subspace) -> Self {
        Self::from_mat(v.basis(), v.dims())
    }

    /// Rebuilds the matrix; a missing or empty `im` block means a real matrix.
    pub fn to_mat(&self) -> Result<CMat> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, |r| r.len());
        if rows == 0 || cols == 0 || self.re.iter().any(|r| r.len() != cols) {
            return Err(QsvError::Io("matrix rows are empty or ragged".into()));
        }
        let has_im = !self.im.is_empty();
        if has_im && (self.im.len() != rows || self.im.iter().any(|r| r.len() != cols)) {
            return Err(QsvError::Io("imaginary block does not match the real block".into()));
        }
        Ok(CMat::from_fn(rows, cols, |i, j| c64(self.re[i][j], if has_im { self.im[i][j] } else { 0.0 })))
    }

    fn check_rows(&self, m: &CMat) -> Result<()> {
        let n = qmath::dims_product(&self.dims)?;
        if m.nrows() != n {
            return Err(QsvError::Shape(format!("{} rows for shape {:?}", m.nrows(), self.dims)));
        }
        Ok(())
    }

    /// Square operator with the stored shape.
    pub fn to_operator(&self) -> Result<CMat> {
        let m = self.to_mat()?;
        self.check_rows(&m)?;
        if m.ncols() != m.nrows() {
            return Err(QsvError::Shape("operator must be square".into()));
        }
        Ok(m)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::new_clipped(self.to_operator()?, self.dims.clone())
    }

    /// Span of the columns (orthonormalized).
    pub fn to_subspace(&self) -> Result<Subspace> {
        let m = self.to_mat()?;
        self.check_rows(&m)?;
        Subspace::span(&m, self.dims.clone())
    }
}

/// Reads a value, either bare or wrapped in the `outputs` field of a saved
/// command result.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bad = |e: String| QsvError::Io(format!("{}: {e}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if let Some(obj) = value.as_object_mut() {
        if obj.contains_key("command") && obj.contains_key("outputs") {
            value = obj.remove("outputs").unwrap_or_default();
        }
    }
    serde_json::from_value(value).map_err(|e| bad(e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| QsvError::Io(format!("{}: {e}", path.display())))
}
