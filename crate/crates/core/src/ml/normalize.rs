use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Per-column min-max scaling learned on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationModel {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationModel {
    pub fn fit(train: &DMatrix<f64>) -> Result<Self> {
        if train.nrows() < 2 {
            return Err(Error::InvalidArgument(format!(
                "normalization needs at least 2 training rows, got {}",
                train.nrows()
            )));
        }
        let min = train.column_iter().map(|c| c.min()).collect();
        let max = train.column_iter().map(|c| c.max()).collect();
        Ok(Self { min, max })
    }

    /// Maps training ranges onto [0,1], clamping values outside them; constant columns give 0.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.min.len() {
            return Err(Error::InvalidArgument(format!(
                "{} columns, normalizer fitted on {}",
                x.ncols(),
                self.min.len()
            )));
        }
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            let (lo, hi) = (self.min[j], self.max[j]);
            if hi > lo {
                ((x[(i, j)].clamp(lo, hi) - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.0
            }
        }))
    }

    /// SHA-256 over the exact bit patterns of the fitted bounds.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for v in self.min.iter().chain(&self.max) {
            h.update(v.to_bits().to_le_bytes());
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let train = DMatrix::from_row_slice(3, 2, &[2.0, 5.0, 4.0, 5.0, 6.0, 5.0]);
        let m = NormalizationModel::fit(&train).unwrap();
        let t = m.transform(&train).unwrap();
        assert_eq!(t.column(0).as_slice(), &[0.0, 0.5, 1.0]);
        assert_eq!(t.column(1).as_slice(), &[0.0, 0.0, 0.0]);

        let m = NormalizationModel::fit(&DMatrix::from_row_slice(2, 1, &[0.0, 6.0])).unwrap();
        let t = m.transform(&DMatrix::from_row_slice(2, 1, &[10.0, -3.0])).unwrap();
        assert_eq!(t.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn needs_two_rows_and_matching_width() {
        assert!(NormalizationModel::fit(&DMatrix::zeros(1, 3)).is_err());
        let m = NormalizationModel::fit(&DMatrix::zeros(2, 3)).unwrap();
        assert!(m.transform(&DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn checksum_tracks_bits() {
        let a = NormalizationModel::fit(&DMatrix::from_row_slice(2, 1, &[0.0, 1.0])).unwrap();
        let mut b = a.clone();
        assert_eq!(a.checksum(), b.checksum());
        b.max[0] = f64::from_bits(b.max[0].to_bits() + 1);
        assert_ne!(a.checksum(), b.checksum());
    }
}
