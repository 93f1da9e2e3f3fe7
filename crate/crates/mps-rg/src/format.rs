//! JSON encodings of matrices and matrix product states.
//!
//! A complex number is a two-element array `[re, im]`. An MPS file is
//!
//! ```text
//! {"d": 2, "D": 2, "tensors": [[[[re, im], ...], ...], ...], "boundary": [[[re, im], ...], ...]}
//! ```
//!
//! with `tensors` indexed `[p][row][col]` and `boundary` optional
//! (identity when absent, giving periodic boundary conditions).

use mps_rg_core::linalg::{ComplexMatrix, C64};
use mps_rg_core::mps::MatrixProductState;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpsFile {
    pub d: usize,
    #[serde(rename = "D")]
    pub bond_dim: usize,
    pub tensors: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<JsonMatrix>,
}

pub fn complex_to_json(z: C64) -> JsonComplex {
    [z.re, z.im]
}

pub fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|&z| complex_to_json(z)).collect())
        .collect()
}

/// Parses a dense matrix, checking that it is `rows x cols` and finite.
pub fn matrix_from_json(m: &JsonMatrix, rows: usize, cols: usize, what: &str) -> CliResult<ComplexMatrix> {
    if m.len() != rows {
        return Err(CliError::invalid(format!(
            "{what}: expected {rows} rows, found {}",
            m.len()
        )));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::invalid(format!(
                "{what}: row {i} has {} entries, expected {cols}",
                row.len()
            )));
        }
        data.extend(row.iter().map(|&[re, im]| C64::new(re, im)));
    }
    ComplexMatrix::from_vec(rows, cols, data).map_err(|e| CliError::invalid(format!("{what}: {e}")))
}

/// Square matrix of any size.
pub fn square_from_json(m: &JsonMatrix, what: &str) -> CliResult<ComplexMatrix> {
    matrix_from_json(m, m.len(), m.len(), what)
}

impl MpsFile {
    pub fn from_state(mps: &MatrixProductState) -> Self {
        Self {
            d: mps.phys_dim(),
            bond_dim: mps.bond_dim(),
            tensors: mps.tensors().iter().map(matrix_to_json).collect(),
            boundary: (!mps.has_periodic_boundary()).then(|| matrix_to_json(mps.boundary())),
        }
    }

    pub fn to_state(&self) -> CliResult<MatrixProductState> {
        if self.d == 0 || self.bond_dim == 0 {
            return Err(CliError::invalid("d and D must be positive"));
        }
        if self.tensors.len() != self.d {
            return Err(CliError::invalid(format!(
                "expected {} tensors (d), found {}",
                self.d,
                self.tensors.len()
            )));
        }
        let tensors = self
            .tensors
            .iter()
            .enumerate()
            .map(|(p, t)| matrix_from_json(t, self.bond_dim, self.bond_dim, &format!("tensor {p}")))
            .collect::<CliResult<Vec<_>>>()?;
        let state = match &self.boundary {
            None => MatrixProductState::new(tensors),
            Some(b) => {
                let b = matrix_from_json(b, self.bond_dim, self.bond_dim, "boundary")?;
                MatrixProductState::with_boundary(tensors, b)
            }
        };
        Ok(state?)
    }
}

/// Parses MPS JSON text.
pub fn parse_mps(text: &str) -> CliResult<MatrixProductState> {
    let file: MpsFile = serde_json::from_str(text).map_err(|e| CliError::invalid(format!("parse error: {e}")))?;
    file.to_state()
}

pub fn mps_to_json(mps: &MatrixProductState) -> String {
    serde_json::to_string_pretty(&MpsFile::from_state(mps)).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use mps_rg_core::models::make_preset;

    #[test]
    fn round_trip() {
        for name in ["aklt", "cluster"] {
            let s = make_preset(name, &[]).unwrap();
            assert_eq!(parse_mps(&mps_to_json(&s)).unwrap(), s);
        }
        let w = make_preset("w", &[0.2]).unwrap();
        assert!(!mps_to_json(&w).contains("boundary"));
        let edge = mps_rg_core::linalg::ComplexMatrix::from_real_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        let w = w.replace_boundary(edge).unwrap();
        assert!(mps_to_json(&w).contains("boundary"));
        assert_eq!(parse_mps(&mps_to_json(&w)).unwrap(), w);
    }

    #[test]
    fn rejects_bad_shapes() {
        let bad = [
            r#"{"d": 2, "D": 1, "tensors": [[[[1, 0]]]]}"#,
            r#"{"d": 1, "D": 2, "tensors": [[[[1, 0], [0, 0]]]]}"#,
            r#"{"d": 1, "D": 1, "tensors": [[[[0, 0]]]]}"#,
            r#"{"d": 1, "D": 1, "tensors": [[[[1, 0]]]], "extra": 1}"#,
            r#"{"d": 1, "D": 1, "tensors": [[[[1]]]]}"#,
            "{not json",
        ];
        for text in bad {
            let err = parse_mps(text).unwrap_err();
            assert_eq!(err.code(), 2, "{text}");
        }
    }

    #[test]
    fn accepts_explicit_boundary() {
        let s = parse_mps(r#"{"d": 1, "D": 2, "tensors": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]], "boundary": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]}"#)
            .unwrap();
        assert!(!s.has_periodic_boundary());
    }
}
