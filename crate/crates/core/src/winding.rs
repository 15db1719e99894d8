//! Exact integer arithmetic for windings and winding phases along loops.
//!
//! All phases that occur in the model are roots of unity of order 8 or 16;
//! representing them by their integer exponent keeps every identity exact.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::config::LoopSet;
use crate::error::{FkError, Result};
use crate::lattice::CornerId;

/// A unit complex number `e^{i k pi/4}` with `k` taken mod 8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhaseEighth(u8);

impl PhaseEighth {
    pub fn new(k: i64) -> Self {
        PhaseEighth(k.rem_euclid(8) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn mul(self, other: PhaseEighth) -> PhaseEighth {
        PhaseEighth::new(self.0 as i64 + other.0 as i64)
    }

    pub fn conj(self) -> PhaseEighth {
        PhaseEighth::new(-(self.0 as i64))
    }

    /// Ratio `self / other`.
    pub fn div(self, other: PhaseEighth) -> PhaseEighth {
        self.mul(other.conj())
    }

    /// Square root with the even-exponent branch: the representative
    /// exponent in `[0,8)` is carried over unchanged into sixteenths.
    pub fn sqrt(self) -> PhaseSixteenth {
        PhaseSixteenth::new(self.0 as i64)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(1.0, self.0 as f64 * PI / 4.0)
    }
}

/// A unit complex number `e^{i k pi/8}` with `k` taken mod 16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhaseSixteenth(u8);

impl PhaseSixteenth {
    pub fn new(k: i64) -> Self {
        PhaseSixteenth(k.rem_euclid(16) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn mul(self, other: PhaseSixteenth) -> PhaseSixteenth {
        PhaseSixteenth::new(self.0 as i64 + other.0 as i64)
    }

    pub fn conj(self) -> PhaseSixteenth {
        PhaseSixteenth::new(-(self.0 as i64))
    }

    /// Some(+1) or Some(-1) when the phase is real, None otherwise.
    pub fn real_sign(self) -> Option<i8> {
        match self.0 {
            0 => Some(1),
            8 => Some(-1),
            _ => None,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        // Exact values on the 16-th roots of unity up to one rounding each.
        Complex64::from_polar(1.0, self.0 as f64 * PI / 8.0)
    }
}

/// A winding `w = q * pi/2` counted as right turns minus left turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuarterTurns(pub i64);

impl QuarterTurns {
    pub fn radians(self) -> f64 {
        self.0 as f64 * PI / 2.0
    }

    /// `e^{-i w / 2}` as an exact sixteenth phase.
    pub fn half_phase(self) -> PhaseSixteenth {
        PhaseSixteenth::new(-2 * self.0)
    }
}

/// Winding of the loop arc from `from` to the first arrival at `to`,
/// walked along the loop's canonical (primal-left) orientation.
pub fn path_winding(loops: &LoopSet, from: CornerId, to: CornerId) -> Result<QuarterTurns> {
    if from == to {
        return Err(FkError::IdenticalCorners);
    }
    let (l1, p1) = loops.position_of(from)?;
    let (l2, p2) = loops.position_of(to)?;
    if l1 != l2 {
        return Err(FkError::NotCoLooped(from, to));
    }
    Ok(QuarterTurns(loops.arc_turns(l1, p1, p2)))
}

/// The winding phase `phi(gamma, from, to) in {+1, -1}` of the canonical arc,
/// computed as `(-1)^{m/8}` with `m = a1 - a2 - 2q`.
///
/// `m` is divisible by 8 for every co-looped pair; a failure of that
/// divisibility signals a loop-extraction bug and panics.
pub fn winding_phase(loops: &LoopSet, from: CornerId, to: CornerId) -> Result<i8> {
    let q = path_winding(loops, from, to)?;
    let a1 = loops.domain().corner(from)?.orientation_eighth as i64;
    let a2 = loops.domain().corner(to)?.orientation_eighth as i64;
    Ok(phase_sign(a1, a2, q.0))
}

/// `(-1)^{(a1 - a2 - 2q)/8}`, asserting the exponent is a multiple of 8.
pub(crate) fn phase_sign(a1: i64, a2: i64, q: i64) -> i8 {
    let m = a1 - a2 - 2 * q;
    assert!(
        m % 8 == 0,
        "winding phase ill-defined: a1={a1} a2={a2} q={q} gives m={m}"
    );
    if (m / 8).rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}
