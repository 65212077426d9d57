//! Integer-valued linear array geometries and the set algebra (sum sets,
//! shifts, apertures, ULA-segment detection) used by every other module.
//!
//! Positions live on the half-wavelength grid: element `n` sits at `n λ/2`.
//! All values are immutable after construction and all operations are pure,
//! so everything here is safe for unrestricted concurrent use.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Errors produced when constructing or combining array geometries.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("sensor position set must not be empty")]
    Empty,
    #[error("negative sensor position {0}")]
    NegativePosition(i64),
    #[error("duplicate sensor position {0}")]
    DuplicatePosition(i64),
    #[error("basic subarray must be normalized to min 0 (got min {0})")]
    BasicNotNormalized(i64),
    #[error("shift {shift} is invalid: position {missing} not in parent array")]
    InvalidShift { shift: i64, missing: i64 },
}

/// A finite set of non-negative integer sensor locations, strictly
/// increasing, in half-wavelength units. Represents a physical or virtual
/// linear array, a basic subarray, or a shift set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct SensorPositions {
    positions: Vec<i64>,
}

impl SensorPositions {
    /// Builds a position set from arbitrary-order input. Rejects empty
    /// input, negative positions, and duplicates.
    pub fn new(positions: impl Into<Vec<i64>>) -> Result<Self, GeometryError> {
        let mut positions = positions.into();
        if positions.is_empty() {
            return Err(GeometryError::Empty);
        }
        if let Some(&bad) = positions.iter().find(|&&p| p < 0) {
            return Err(GeometryError::NegativePosition(bad));
        }
        positions.sort_unstable();
        if let Some(w) = positions.windows(2).find(|w| w[0] == w[1]) {
            return Err(GeometryError::DuplicatePosition(w[0]));
        }
        Ok(Self { positions })
    }

    /// Uniform linear array `{0, 1, ..., n-1}`.
    pub fn ula(n: usize) -> Self {
        assert!(n > 0, "ULA must have at least one element");
        Self {
            positions: (0..n as i64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.positions.iter().copied()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.positions
    }

    pub fn min_position(&self) -> i64 {
        self.positions[0]
    }

    pub fn max_position(&self) -> i64 {
        *self.positions.last().unwrap()
    }

    /// Aperture `max - min`.
    pub fn aperture(&self) -> i64 {
        self.max_position() - self.min_position()
    }

    pub fn contains(&self, position: i64) -> bool {
        self.positions.binary_search(&position).is_ok()
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.iter().all(|p| other.contains(p))
    }

    /// Translates every position so that the smallest becomes 0 (first
    /// sensor as the reference sensor). Returns the normalized set and the
    /// offset that was removed.
    pub fn normalized(&self) -> (Self, i64) {
        let offset = self.min_position();
        let positions = self.positions.iter().map(|p| p - offset).collect();
        (Self { positions }, offset)
    }

    /// All positions shifted by `delta`; the result must stay non-negative.
    pub fn translated(&self, delta: i64) -> Result<Self, GeometryError> {
        if self.min_position() + delta < 0 {
            return Err(GeometryError::NegativePosition(self.min_position() + delta));
        }
        Ok(Self {
            positions: self.positions.iter().map(|p| p + delta).collect(),
        })
    }

    /// Sum set `{x + y : x in self, y in other}`, sorted and deduplicated.
    pub fn sum_set(&self, other: &Self) -> Self {
        let mut sums: Vec<i64> = self
            .iter()
            .flat_map(|x| other.iter().map(move |y| x + y))
            .collect();
        sums.sort_unstable();
        sums.dedup();
        Self { positions: sums }
    }

    /// Longest run of consecutive integers (unit spacing), as
    /// `(start, length)`. Ties broken by the smallest start.
    pub fn longest_ula_segment(&self) -> (i64, usize) {
        let mut best = (self.positions[0], 1usize);
        let mut run_start = self.positions[0];
        let mut run_len = 1usize;
        for w in self.positions.windows(2) {
            if w[1] == w[0] + 1 {
                run_len += 1;
            } else {
                run_start = w[1];
                run_len = 1;
            }
            if run_len > best.1 {
                best = (run_start, run_len);
            }
        }
        best
    }
}

impl fmt::Display for SensorPositions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.positions.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

impl TryFrom<Vec<i64>> for SensorPositions {
    type Error = GeometryError;
    fn try_from(v: Vec<i64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<SensorPositions> for Vec<i64> {
    fn from(s: SensorPositions) -> Vec<i64> {
        s.positions
    }
}

/// All shifts `delta >= 0` such that `basic + delta` is contained in
/// `parent`, sorted ascending. `basic` must be normalized (min 0); with
/// `0 in basic`, every valid shift is itself an element of `parent`.
pub fn valid_shifts(basic: &SensorPositions, parent: &SensorPositions) -> Vec<i64> {
    debug_assert_eq!(basic.min_position(), 0, "basic subarray must be normalized");
    parent
        .iter()
        .filter(|&delta| basic.iter().all(|b| parent.contains(b + delta)))
        .collect()
}

/// Transmit/receive array pair of a co-located MIMO radar. The virtual
/// array it synthesizes is the sum co-array `tx + rx`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MimoArrayPair {
    pub tx: SensorPositions,
    pub rx: SensorPositions,
}

impl MimoArrayPair {
    pub fn new(tx: SensorPositions, rx: SensorPositions) -> Self {
        Self { tx, rx }
    }

    /// The sum co-array `tx + rx`.
    pub fn virtual_array(&self) -> SensorPositions {
        self.tx.sum_set(&self.rx)
    }

    /// True iff every transmit/receive pair maps to a distinct virtual
    /// element, i.e. `|tx + rx| = |tx| * |rx|`.
    pub fn is_non_redundant(&self) -> bool {
        self.virtual_array().len() == self.tx.len() * self.rx.len()
    }
}

/// A sum-set decomposition `(S_b, S_c)` of a parent array `S`: every
/// shifted copy `S_b + delta` for `delta in S_c` is contained in `S`.
///
/// Canonical form: `min(S_b) = 0` and the shifts are absolute offsets in
/// the parent's coordinate frame. This removes the translation ambiguity
/// between the two factors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    basic: SensorPositions,
    shifts: SensorPositions,
    parent: SensorPositions,
}

impl Decomposition {
    /// Validates the defining membership `basic + delta ⊆ parent` for every
    /// shift, plus the canonical normalization of `basic`.
    pub fn new(
        basic: SensorPositions,
        shifts: SensorPositions,
        parent: SensorPositions,
    ) -> Result<Self, GeometryError> {
        if basic.min_position() != 0 {
            return Err(GeometryError::BasicNotNormalized(basic.min_position()));
        }
        for delta in shifts.iter() {
            for b in basic.iter() {
                if !parent.contains(b + delta) {
                    return Err(GeometryError::InvalidShift {
                        shift: delta,
                        missing: b + delta,
                    });
                }
            }
        }
        Ok(Self {
            basic,
            shifts,
            parent,
        })
    }

    /// The trivial decomposition `(S - min(S), {min(S)})` covering the whole
    /// array as a single subarray.
    pub fn identity(parent: SensorPositions) -> Self {
        let (basic, offset) = parent.normalized();
        Self {
            basic,
            shifts: SensorPositions::new(vec![offset]).unwrap(),
            parent,
        }
    }

    pub fn basic(&self) -> &SensorPositions {
        &self.basic
    }

    pub fn shifts(&self) -> &SensorPositions {
        &self.shifts
    }

    pub fn parent(&self) -> &SensorPositions {
        &self.parent
    }

    /// Number of subarray sensors `N_s`.
    pub fn n_s(&self) -> usize {
        self.basic.len()
    }

    /// Number of shifted copies `L` (effective snapshot columns).
    pub fn l(&self) -> usize {
        self.shifts.len()
    }
}
