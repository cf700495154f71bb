//! Eigenpurposes: right-singular directions of the difference matrix whose
//! singular value clears the noise threshold.

use std::cmp::Ordering;
use std::path::Path;

use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{PodError, Result};

/// Components at or below this magnitude count as zero when picking the
/// canonical sign of a direction.
pub const CANONICAL_ZERO: f64 = 1e-12;

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpurpose {
    /// Unit direction with `sign` already applied.
    pub direction: Vec<f64>,
    pub singular_value: f64,
    pub sign: Sign,
    pub source_phase: usize,
}

impl Eigenpurpose {
    pub fn dim(&self) -> usize {
        self.direction.len()
    }
}

/// Flips `e` so that its first nonzero component is positive.
pub fn canonicalize(e: &[f64]) -> Result<Vec<f64>> {
    let lead = e
        .iter()
        .find(|x| x.abs() > CANONICAL_ZERO)
        .ok_or_else(|| PodError::contract("cannot canonicalize a zero vector"))?;
    Ok(if *lead < 0.0 {
        e.iter().map(|x| -x).collect()
    } else {
        e.to_vec()
    })
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Computes the SVD of `d` and returns, for every singular value strictly
/// above `kappa`, the pair `(+e, -e)` of eigenpurposes.
///
/// Output order is singular value descending, then canonical direction
/// lexicographically, `+` before `-`.
pub fn extract(d: &DMatrix<f64>, kappa: f64, source_phase: usize) -> Result<Vec<Eigenpurpose>> {
    if d.nrows() == 0 || d.ncols() == 0 {
        return Err(PodError::EmptyDataset);
    }
    if !(kappa >= 0.0) {
        return Err(PodError::contract(format!("kappa must be >= 0, got {kappa}")));
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(PodError::NumericalFailure("non-finite entry in dataset".into()));
    }

    let svd = SVD::try_new(d.clone(), false, true, SVD_EPS, SVD_MAX_ITERS)
        .ok_or_else(|| PodError::NumericalFailure("SVD did not converge".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| PodError::NumericalFailure("SVD returned no right vectors".into()))?;

    let mut kept: Vec<(f64, Vec<f64>)> = Vec::new();
    for (j, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > kappa {
            let row: Vec<f64> = v_t.row(j).iter().copied().collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(PodError::NumericalFailure(format!(
                    "degenerate right-singular vector for sigma = {sigma}"
                )));
            }
            let unit: Vec<f64> = row.iter().map(|x| x / norm).collect();
            kept.push((sigma, canonicalize(&unit)?));
        }
    }
    kept.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| lexicographic(&a.1, &b.1)));

    Ok(kept
        .into_iter()
        .flat_map(|(sigma, dir)| {
            let neg: Vec<f64> = dir.iter().map(|x| -x).collect();
            [(Sign::Plus, dir), (Sign::Minus, neg)]
                .into_iter()
                .map(move |(sign, direction)| Eigenpurpose {
                    direction,
                    singular_value: sigma,
                    sign,
                    source_phase,
                })
        })
        .collect())
}

/// Writes `sign, sigma, v_0 .. v_{dim-1}`, one purpose per line.
pub fn write_purposes_csv(path: &Path, purposes: &[Eigenpurpose], dim: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| PodError::csv(path, e))?;
    let mut header = vec!["sign".to_string(), "sigma".to_string()];
    header.extend((0..dim).map(|i| format!("v_{i}")));
    w.write_record(&header).map_err(|e| PodError::csv(path, e))?;
    for p in purposes {
        let mut rec = vec![p.sign.symbol().to_string(), format!("{:.12}", p.singular_value)];
        rec.extend(p.direction.iter().map(|x| format!("{x:.12}")));
        w.write_record(&rec).map_err(|e| PodError::csv(path, e))?;
    }
    w.flush().map_err(|e| PodError::io(path, e))
}
