//! Binary two's-complement state features, optionally with the three least
//! significant bits hidden.

use serde::{Deserialize, Serialize};

use crate::error::{PodError, Result};
use crate::ring::{Ring, RingState};

/// Number of low-order bits hidden under partial observability.
pub const HIDDEN_LOW_BITS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservabilityMode {
    Full,
    Partial,
}

impl std::str::FromStr for ObservabilityMode {
    type Err = PodError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(ObservabilityMode::Full),
            "partial" => Ok(ObservabilityMode::Partial),
            other => Err(PodError::InvalidConfig(format!(
                "unknown observability mode {other:?} (expected full|partial)"
            ))),
        }
    }
}

impl std::fmt::Display for ObservabilityMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ObservabilityMode::Full => "full",
            ObservabilityMode::Partial => "partial",
        })
    }
}

/// Binary feature vector, most significant bit first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureVector(Vec<u8>);

impl FeatureVector {
    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| f64::from(b)).collect()
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(PodError::contract(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(FeatureVector)
    }
}

impl std::fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Componentwise difference of two feature vectors; entries in {-1, 0, 1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiffVector(Vec<i8>);

impl DiffVector {
    pub fn new(components: Vec<i8>) -> Result<Self> {
        if let Some(bad) = components.iter().find(|c| !(-1..=1).contains(*c)) {
            return Err(PodError::contract(format!(
                "difference component {bad} outside {{-1, 0, 1}}"
            )));
        }
        Ok(DiffVector(components))
    }

    pub fn components(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn negated(&self) -> DiffVector {
        DiffVector(self.0.iter().map(|c| -c).collect())
    }

    /// `eᵀ d`, accumulated in component order.
    pub fn dot(&self, e: &[f64]) -> Result<f64> {
        if e.len() != self.0.len() {
            return Err(PodError::contract(format!(
                "dimension mismatch: direction has {}, difference has {}",
                e.len(),
                self.0.len()
            )));
        }
        Ok(self
            .0
            .iter()
            .zip(e)
            .fold(0.0, |acc, (&d, &w)| acc + f64::from(d) * w))
    }
}

/// `next - prev`, componentwise.
pub fn diff(next: &FeatureVector, prev: &FeatureVector) -> Result<DiffVector> {
    if next.len() != prev.len() {
        return Err(PodError::contract(format!(
            "feature length mismatch: {} vs {}",
            next.len(),
            prev.len()
        )));
    }
    Ok(DiffVector(
        next.0
            .iter()
            .zip(&prev.0)
            .map(|(&a, &b)| a as i8 - b as i8)
            .collect(),
    ))
}

/// Encodes ring states under one observability mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureCodec {
    ring: Ring,
    mode: ObservabilityMode,
}

impl FeatureCodec {
    pub fn new(ring: Ring, mode: ObservabilityMode) -> Result<Self> {
        if mode == ObservabilityMode::Partial && ring.bits() <= HIDDEN_LOW_BITS {
            return Err(PodError::InvalidConfig(format!(
                "partial observability hides {HIDDEN_LOW_BITS} bits; ring has only {}",
                ring.bits()
            )));
        }
        Ok(FeatureCodec { ring, mode })
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn mode(&self) -> ObservabilityMode {
        self.mode
    }

    fn hidden(&self) -> u32 {
        match self.mode {
            ObservabilityMode::Full => 0,
            ObservabilityMode::Partial => HIDDEN_LOW_BITS,
        }
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        (self.ring.bits() - self.hidden()) as usize
    }

    pub fn encode(&self, s: RingState) -> FeatureVector {
        let pattern = self.ring.index(s);
        FeatureVector(
            (self.hidden()..self.ring.bits())
                .rev()
                .map(|k| ((pattern >> k) & 1) as u8)
                .collect(),
        )
    }

    /// Feature difference observed on the transition `prev -> next`.
    pub fn transition(&self, prev: RingState, next: RingState) -> DiffVector {
        diff(&self.encode(next), &self.encode(prev)).expect("codec produces equal lengths")
    }

    /// Real-valued feature table indexed by ring state index.
    pub fn feature_table(&self) -> Vec<Vec<f64>> {
        self.ring
            .states()
            .map(|s| self.encode(s).to_f64())
            .collect()
    }
}
