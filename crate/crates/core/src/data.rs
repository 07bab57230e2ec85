use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng;

/// Label carried by rows drawn from the "real" distribution ℙ.
pub const REAL: u8 = 1;
/// Label carried by rows drawn from the "synthetic" distribution ℚ.
pub const SYNTHETIC: u8 = 0;

/// An `n × p` sample matrix, optionally labelled by source.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: DenseMatrix,
    labels: Option<Vec<u8>>,
}

impl Dataset {
    pub fn new(samples: DenseMatrix) -> Self {
        Self {
            samples,
            labels: None,
        }
    }

    pub fn labeled(samples: DenseMatrix, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != samples.rows() {
            return Err(Error::DimensionMismatch {
                expected: samples.rows(),
                found: labels.len(),
            });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidParameter("labels must be 0 or 1".into()));
        }
        Ok(Self {
            samples,
            labels: Some(labels),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Ok(Self::new(DenseMatrix::from_rows(rows)?))
    }

    /// One-dimensional dataset from scalar values.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Ok(Self::new(DenseMatrix::from_row_major(
            values.len(),
            1,
            values.to_vec(),
        )?))
    }

    /// Stacks `real` (label 1) over `synthetic` (label 0).
    pub fn stack_labeled(real: &Dataset, synthetic: &Dataset) -> Result<Self> {
        if real.dim() != synthetic.dim() {
            return Err(Error::DimensionMismatch {
                expected: real.dim(),
                found: synthetic.dim(),
            });
        }
        let p = real.dim();
        let mut data = Vec::with_capacity((real.len() + synthetic.len()) * p);
        data.extend_from_slice(real.samples.as_slice());
        data.extend_from_slice(synthetic.samples.as_slice());
        let mut labels = vec![REAL; real.len()];
        labels.resize(real.len() + synthetic.len(), SYNTHETIC);
        Self::labeled(
            DenseMatrix::from_row_major(real.len() + synthetic.len(), p, data)?,
            labels,
        )
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.samples.cols()
    }

    #[inline]
    pub fn samples(&self) -> &DenseMatrix {
        &self.samples
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.samples.row(i)
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.samples.row_iter()
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn into_parts(self) -> (DenseMatrix, Option<Vec<u8>>) {
        (self.samples, self.labels)
    }

    /// Rows at `indices`, in that order, keeping labels.
    pub fn select(&self, indices: &[usize]) -> Self {
        let p = self.dim();
        let mut data = Vec::with_capacity(indices.len() * p);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        let samples = DenseMatrix::from_row_major(indices.len(), p, data)
            .expect("rows of a valid matrix are finite");
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        Self { samples, labels }
    }

    /// Splits a labelled dataset into its (real, synthetic) parts.
    pub fn split_by_label(&self) -> Result<(Dataset, Dataset)> {
        let labels = self.labels.as_ref().ok_or_else(|| {
            Error::InvalidParameter("dataset has no labels to split on".into())
        })?;
        let real: Vec<usize> = (0..self.len()).filter(|&i| labels[i] == REAL).collect();
        let synth: Vec<usize> = (0..self.len())
            .filter(|&i| labels[i] == SYNTHETIC)
            .collect();
        let mut r = self.select(&real);
        let mut s = self.select(&synth);
        r.labels = None;
        s.labels = None;
        Ok((r, s))
    }

    /// Copy with every label flipped.
    pub fn with_flipped_labels(&self) -> Self {
        Self {
            samples: self.samples.clone(),
            labels: self
                .labels
                .as_ref()
                .map(|l| l.iter().map(|&v| 1 - v).collect()),
        }
    }

    /// Shuffles `0..len` and returns the first `fraction` of indices as the
    /// evaluation part and the rest as training.
    pub fn split_indices(len: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
        let mut idx: Vec<usize> = (0..len).collect();
        idx.shuffle(&mut rng::seeded(seed));
        let n_eval = ((len as f64) * fraction).round() as usize;
        let n_eval = n_eval.clamp(usize::from(len > 1), len.saturating_sub(1));
        let train = idx.split_off(n_eval);
        (idx, train)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stack_and_split_round_trip() {
        let a = Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Dataset::from_rows(&[vec![5.0, 6.0]]).unwrap();
        let s = Dataset::stack_labeled(&a, &b).unwrap();
        assert_eq!(s.labels().unwrap(), &[1, 1, 0]);
        let (r, q) = s.split_by_label().unwrap();
        assert_eq!(r, a);
        assert_eq!(q, b);
    }

    #[test]
    fn stack_rejects_dimension_mismatch() {
        let a = Dataset::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let b = Dataset::from_rows(&[vec![5.0]]).unwrap();
        assert!(matches!(
            Dataset::stack_labeled(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn split_indices_partition() {
        let (e, t) = Dataset::split_indices(30, 1.0 / 3.0, 9);
        assert_eq!(e.len(), 10);
        assert_eq!(t.len(), 20);
        let mut all: Vec<usize> = e.iter().chain(&t).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
    }
}
