//! Deterministic ring world: `L = 2^bits` positions in two's-complement
//! range `[-L/2, L/2 - 1]`, two primitive actions, no reward.

use serde::{Deserialize, Serialize};

use crate::error::{PodError, Result};

/// Largest supported bit width. Keeps every position representable in `i64`
/// and every state table addressable.
pub const MAX_BITS: u32 = 30;

/// A position on the ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RingState(pub i64);

impl RingState {
    pub const ORIGIN: RingState = RingState(0);

    pub fn position(self) -> i64 {
        self.0
    }
}

impl std::fmt::Display for RingState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrimitiveAction {
    Left,
    Right,
}

impl PrimitiveAction {
    /// Fixed enumeration order; also the argmax tie-break order.
    pub const ALL: [PrimitiveAction; 2] = [PrimitiveAction::Left, PrimitiveAction::Right];

    pub fn index(self) -> usize {
        match self {
            PrimitiveAction::Left => 0,
            PrimitiveAction::Right => 1,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            PrimitiveAction::Left => PrimitiveAction::Right,
            PrimitiveAction::Right => PrimitiveAction::Left,
        }
    }
}

/// Ring geometry. Cheap to copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ring {
    bits: u32,
}

impl Ring {
    pub fn new(bits: u32) -> Result<Self> {
        if bits == 0 || bits > MAX_BITS {
            return Err(PodError::InvalidConfig(format!(
                "ring bit width must be in 1..={MAX_BITS}, got {bits}"
            )));
        }
        Ok(Ring { bits })
    }

    /// Builds a ring from its length, which must be `2^bits`.
    pub fn with_length(length: u64, bits: u32) -> Result<Self> {
        let ring = Ring::new(bits)?;
        if ring.len() as u64 != length {
            return Err(PodError::InvalidConfig(format!(
                "ring length {length} is not 2^{bits}"
            )));
        }
        Ok(ring)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of states `L`.
    pub fn len(&self) -> usize {
        1usize << self.bits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn half(&self) -> i64 {
        1i64 << (self.bits - 1)
    }

    fn mask(&self) -> i64 {
        (1i64 << self.bits) - 1
    }

    pub fn min_position(&self) -> i64 {
        -self.half()
    }

    pub fn max_position(&self) -> i64 {
        self.half() - 1
    }

    pub fn contains(&self, s: RingState) -> bool {
        (self.min_position()..=self.max_position()).contains(&s.0)
    }

    pub fn check(&self, s: RingState) -> Result<()> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(PodError::contract(format!(
                "position {} outside ring [{}, {}]",
                s.0,
                self.min_position(),
                self.max_position()
            )))
        }
    }

    /// Wraps an arbitrary integer into the two's-complement range.
    pub fn wrap(&self, raw: i64) -> RingState {
        let low = raw & self.mask();
        RingState(if low >= self.half() { low - (1i64 << self.bits) } else { low })
    }

    /// Table index of a state: its `bits`-wide two's-complement pattern.
    /// Neighbouring positions have neighbouring indices modulo `L`.
    pub fn index(&self, s: RingState) -> usize {
        (s.0 & self.mask()) as usize
    }

    pub fn state_at(&self, index: usize) -> RingState {
        self.wrap(index as i64)
    }

    /// All states in index order.
    pub fn states(&self) -> impl Iterator<Item = RingState> + '_ {
        (0..self.len()).map(move |i| self.state_at(i))
    }

    pub fn step(&self, s: RingState, a: PrimitiveAction) -> RingState {
        match a {
            PrimitiveAction::Left => self.wrap(s.0 - 1),
            PrimitiveAction::Right => self.wrap(s.0 + 1),
        }
    }

    /// Index of the successor of state `index` under `a`.
    pub fn step_index(&self, index: usize, a: PrimitiveAction) -> usize {
        let n = self.len();
        match a {
            PrimitiveAction::Left => (index + n - 1) % n,
            PrimitiveAction::Right => (index + 1) % n,
        }
    }

    /// Shortest arc length between two positions, in `[0, L/2]`.
    pub fn distance(&self, a: RingState, b: RingState) -> u64 {
        let l = self.len() as u64;
        let d = (a.0 - b.0).rem_euclid(l as i64) as u64;
        d.min(l - d)
    }
}

impl Default for Ring {
    fn default() -> Self {
        Ring { bits: 12 }
    }
}
