//! Phase spaces and hyperbolic maps.
//!
//! A [`HyperbolicMap`] bundles the forward action `f`, its differential `Df`,
//! the phase-space metric, and an oracle for the unstable direction `E^u`.
//! The unstable expansion coefficient `Φ(p) = -log|Df|E^u_p|` is never stored;
//! it is accumulated along orbits by transporting a tangent vector.

mod cat;
mod solenoid;

pub use cat::{CatMap, TorusPoint};
pub use solenoid::{SolenoidMap, SolenoidPoint, SolenoidVariant};

use crate::potential::Potential;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("matrix [[{a}, {b}], [{c}, {d}]] has determinant {det}, expected 1")]
    NotUnimodular { a: i64, b: i64, c: i64, d: i64, det: i64 },
    #[error("matrix trace {trace} is not hyperbolic (need |trace| > 2)")]
    NotHyperbolic { trace: i64 },
    #[error("contraction {0} outside (0, 1/2)")]
    BadContraction(f64),
    #[error("map image leaves the interior of the solid torus at {0:?}")]
    ImageNotInterior([f64; 3]),
    #[error("point carries no stored backward orbit")]
    NoHistory,
    #[error("point {0:?} is not close enough to the attractor to resolve its backward branch")]
    OffAttractor([f64; 3]),
    #[error("tangent vector is degenerate (norm {0:e})")]
    DegenerateTangent(f64),
}

/// A point of a phase space, addressable coordinate by coordinate.
pub trait PhasePoint: Copy + Send + Sync + std::fmt::Debug + PartialEq {
    const DIM: usize;
    /// Column names used in CSV exports.
    const AXES: &'static [&'static str];

    fn coord(&self, axis: usize) -> f64;

    fn coords(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (axis, slot) in out.iter_mut().enumerate().take(Self::DIM) {
            *slot = self.coord(axis);
        }
        out
    }
}

/// Tangent vectors are plain coordinate arrays.
pub trait TangentVector: Copy + Send + Sync + std::fmt::Debug + PartialEq {
    fn norm(&self) -> f64;
    fn scaled(&self, s: f64) -> Self;
    fn dot(&self, other: &Self) -> f64;

    fn normalized(&self) -> Self {
        self.scaled(1.0 / self.norm())
    }
}

impl<const N: usize> TangentVector for [f64; N] {
    fn norm(&self) -> f64 {
        self.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        for c in out.iter_mut() {
            *c *= s;
        }
        out
    }

    fn dot(&self, other: &Self) -> f64 {
        self.iter().zip(other).map(|(a, b)| a * b).sum()
    }
}

/// A uniformly hyperbolic map with a one-dimensional unstable bundle.
///
/// Implementations are immutable after construction and shareable across
/// threads.
pub trait HyperbolicMap: Send + Sync {
    type Point: PhasePoint;
    type Vector: TangentVector;

    fn apply(&self, p: &Self::Point) -> Self::Point;

    /// Global inverse, when the map has one that is numerically usable.
    fn apply_inverse(&self, p: &Self::Point) -> Result<Self::Point, SystemError>;

    /// `Df_p v`.
    fn differential(&self, p: &Self::Point, v: &Self::Vector) -> Self::Vector;

    fn distance(&self, a: &Self::Point, b: &Self::Point) -> f64;

    /// Shortest displacement vector from `from` to `to`.
    fn displacement(&self, from: &Self::Point, to: &Self::Point) -> Self::Vector;

    /// `p + t·v`, reduced back into the phase space.
    fn translate(&self, p: &Self::Point, v: &Self::Vector, t: f64) -> Self::Point;

    /// Unit vector spanning `E^u_p`.
    fn unstable_direction(&self, p: &Self::Point) -> Result<Self::Vector, SystemError>;

    /// Unit vector spanning `E^s_p`, for systems whose stable bundle is one
    /// dimensional and explicitly known.
    fn stable_direction(&self, _p: &Self::Point) -> Option<Self::Vector> {
        None
    }

    /// A short arc of unstable manifold starting at `x` with arclength `delta`.
    fn local_unstable_seed(
        &self,
        x: &Self::Point,
        delta: f64,
    ) -> Result<crate::curves::SeedCurve<Self::Point, Self::Vector>, SystemError>;
}

/// Log of the stretch factor of `Df_p` along `u`, i.e. `-Φ(p)` when `u`
/// spans `E^u_p`, together with the normalized image tangent.
pub fn unstable_log_jacobian<S: HyperbolicMap>(
    system: &S,
    p: &S::Point,
    u: &S::Vector,
) -> Result<(f64, S::Vector), SystemError> {
    let len = u.norm();
    if len.is_nan() || len < 1e-300 {
        return Err(SystemError::DegenerateTangent(len));
    }
    let image = system.differential(p, u);
    let image_len = image.norm();
    if image_len.is_nan() || image_len < 1e-300 {
        return Err(SystemError::DegenerateTangent(image_len));
    }
    Ok(((image_len / len).ln(), image.scaled(1.0 / image_len)))
}

/// One step of tangent transport: returns `(f(p), normalized Df_p u, log stretch)`.
/// `u` must already be normalized.
#[inline]
pub(crate) fn transport<S: HyperbolicMap>(system: &S, p: &S::Point, u: &S::Vector) -> (S::Point, S::Vector, f64) {
    let image = system.differential(p, u);
    let len = image.norm();
    (system.apply(p), image.scaled(1.0 / len), len.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `Σ_{i=0}^{n-1} G(f^i p)`
    Forward,
    /// `Σ_{i=1}^{n} G(f^{-i} p)`
    Backward,
}

/// Birkhoff sum of `potential` along the orbit of `p`.
///
/// When the potential involves `Φ`, the unstable direction is transported
/// along the orbit starting from [`HyperbolicMap::unstable_direction`].
pub fn birkhoff_sum<S: HyperbolicMap>(
    system: &S,
    potential: &Potential,
    p: &S::Point,
    n: usize,
    direction: Direction,
) -> Result<f64, SystemError> {
    if n == 0 {
        return Ok(0.0);
    }
    let needs_phi = potential.uses_expansion();
    let mut total = 0.0;
    match direction {
        Direction::Forward => {
            let mut point = *p;
            let mut tangent = if needs_phi {
                Some(system.unstable_direction(p)?)
            } else {
                None
            };
            for _ in 0..n {
                let phi = match tangent {
                    Some(u) => {
                        let (stretch, image) = unstable_log_jacobian(system, &point, &u)?;
                        tangent = Some(image);
                        -stretch
                    }
                    None => 0.0,
                };
                total += potential.value(&point, phi);
                point = system.apply(&point);
            }
        }
        Direction::Backward => {
            let mut point = *p;
            for _ in 0..n {
                point = system.apply_inverse(&point)?;
                let phi = if needs_phi {
                    let u = system.unstable_direction(&point)?;
                    -unstable_log_jacobian(system, &point, &u)?.0
                } else {
                    0.0
                };
                total += potential.value(&point, phi);
            }
        }
    }
    Ok(total)
}
