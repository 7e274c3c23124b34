//! Eigenphase conventions shared by every engine.
//!
//! Phases are reported in `(-π, π]`. Two eigenvalues belong to the same
//! measurement outcome when their circular distance is below [`CLUSTER_TOL`].

use std::f64::consts::PI;

/// Eigenvalues closer than this (in radians, circularly) form one projector.
pub const CLUSTER_TOL: f64 = 1e-9;

/// Born probabilities below this are excluded from the sample space.
pub const PROB_FLOOR: f64 = 1e-12;

/// Grid used to key phases when comparing distributions produced by
/// different arithmetic routes.
pub const KEY_RESOLUTION: f64 = 1e-7;

const SNAP: f64 = 1e-12;

/// Maps any real phase into `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut y = x - two_pi * (x / two_pi).round();
    if y <= -PI + SNAP {
        y += two_pi;
    }
    if y > PI {
        y -= two_pi;
    }
    // the +2π branch above can land a hair past π
    if (y - PI).abs() < SNAP {
        y = PI;
    }
    y
}

/// Distance on the circle between two phases.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// True when `x` is congruent to zero modulo 2π within [`CLUSTER_TOL`].
pub fn is_trivial_phase(x: f64) -> bool {
    circular_distance(x, 0.0) < CLUSTER_TOL
}

/// Integer key for a phase on a [`KEY_RESOLUTION`] grid, with `-π ≡ π`.
pub fn phase_key(x: f64) -> i64 {
    let y = wrap_phase(x);
    let q = (y / KEY_RESOLUTION).round() as i64;
    let qmax = (PI / KEY_RESOLUTION).round() as i64;
    if q <= -qmax {
        qmax
    } else {
        q
    }
}

/// Circular mean of a non-empty set of phases.
pub fn circular_mean(phases: &[f64]) -> f64 {
    let (s, c) = phases
        .iter()
        .fold((0.0, 0.0), |(s, c), p| (s + p.sin(), c + p.cos()));
    wrap_phase(s.atan2(c))
}
