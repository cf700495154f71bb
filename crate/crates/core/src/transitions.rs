//! Per-phase log of observed feature differences.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{PodError, Result};
use crate::features::DiffVector;

/// Ordered multiset of difference vectors collected during one phase.
/// Duplicates and zero rows are kept: row frequency is what the singular
/// values measure.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiffDataset {
    rows: Vec<DiffVector>,
    phase_index: usize,
}

impl DiffDataset {
    pub fn new(phase_index: usize) -> Self {
        DiffDataset {
            rows: Vec::new(),
            phase_index,
        }
    }

    pub fn with_capacity(phase_index: usize, capacity: usize) -> Self {
        DiffDataset {
            rows: Vec::with_capacity(capacity),
            phase_index,
        }
    }

    pub fn phase_index(&self) -> usize {
        self.phase_index
    }

    pub fn rows(&self) -> &[DiffVector] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.rows.first().map(DiffVector::len)
    }

    pub fn record(&mut self, v: DiffVector) -> Result<()> {
        if let Some(dim) = self.dim() {
            if dim != v.len() {
                return Err(PodError::contract(format!(
                    "difference of length {} recorded into dataset of width {dim}",
                    v.len()
                )));
            }
        }
        self.rows.push(v);
        Ok(())
    }

    /// Dense `rows x dim` matrix in insertion order.
    pub fn as_matrix(&self) -> Result<DMatrix<f64>> {
        let dim = self.dim().ok_or(PodError::EmptyDataset)?;
        Ok(DMatrix::from_fn(self.rows.len(), dim, |r, c| {
            f64::from(self.rows[r].components()[c])
        }))
    }

    /// Debug dump: one difference vector per line, signed integers.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(|e| PodError::csv(path, e))?;
        for row in &self.rows {
            w.write_record(row.components().iter().map(|c| c.to_string()))
                .map_err(|e| PodError::csv(path, e))?;
        }
        w.flush().map_err(|e| PodError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[i8]) -> DiffVector {
        DiffVector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn record_keeps_duplicates() {
        let mut d = DiffDataset::new(0);
        d.record(v(&[0, 1])).unwrap();
        assert_eq!(d.len(), 1);
        d.record(v(&[0, 1])).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.rows()[0], d.rows()[1]);
    }

    #[test]
    fn record_rejects_width_change() {
        let mut d = DiffDataset::new(0);
        d.record(v(&[0, 1])).unwrap();
        assert!(matches!(
            d.record(v(&[0, 1, 0])),
            Err(PodError::ContractViolation(_))
        ));
    }

    #[test]
    fn matrix_shape_and_rank() {
        let mut d = DiffDataset::new(3);
        assert!(matches!(d.as_matrix(), Err(PodError::EmptyDataset)));
        d.record(v(&[0, 1])).unwrap();
        let m = d.as_matrix().unwrap();
        assert_eq!(m, DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));

        let mut d = DiffDataset::new(0);
        for _ in 0..3 {
            d.record(v(&[1, -1, 0])).unwrap();
        }
        assert_eq!(d.as_matrix().unwrap().rank(1e-9), 1);
    }

    #[test]
    fn csv_dump() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let mut d = DiffDataset::new(0);
        d.record(v(&[1, -1, 0])).unwrap();
        d.record(v(&[0, 0, 1])).unwrap();
        d.write_csv(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "1,-1,0\n0,0,1\n");
    }
}
