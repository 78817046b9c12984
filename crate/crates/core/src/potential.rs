//! Scalar potentials `G` on phase space.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::systems::PhasePoint;

/// `amplitude · cos(2π(kx·u + ky·v − phase))` on the first two coordinates
/// `(u, v)` of a point. `phase` is in turns, so `phase = 1/4` turns a cosine
/// into a sine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierMode {
    pub kx: i32,
    pub ky: i32,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

impl FourierMode {
    pub fn cos(kx: i32, ky: i32) -> Self {
        Self {
            kx,
            ky,
            amplitude: 1.0,
            phase: 0.0,
        }
    }

    pub fn sin(kx: i32, ky: i32) -> Self {
        Self {
            kx,
            ky,
            amplitude: 1.0,
            phase: 0.25,
        }
    }

    /// `amplitude · sin(2πx)`
    pub fn sin_x(amplitude: f64) -> Self {
        Self {
            amplitude,
            ..Self::sin(1, 0)
        }
    }

    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        self.amplitude * (TAU * (self.kx as f64 * u + self.ky as f64 * v - self.phase)).cos()
    }
}

type CustomFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum PotentialKind {
    Zero,
    /// `Φ = -log|Df|E^u|`, supplied by the caller from tangent transport.
    UnstableExpansion,
    Fourier(Vec<FourierMode>),
    Custom(CustomFn),
}

impl fmt::Debug for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::UnstableExpansion => write!(f, "UnstableExpansion"),
            Self::Fourier(modes) => f.debug_tuple("Fourier").field(modes).finish(),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// A bounded potential plus an additive constant.
#[derive(Debug, Clone)]
pub struct Potential {
    kind: PotentialKind,
    offset: f64,
}

impl Potential {
    pub fn zero() -> Self {
        Self {
            kind: PotentialKind::Zero,
            offset: 0.0,
        }
    }

    pub fn unstable_expansion() -> Self {
        Self {
            kind: PotentialKind::UnstableExpansion,
            offset: 0.0,
        }
    }

    pub fn fourier(modes: Vec<FourierMode>) -> Self {
        Self {
            kind: PotentialKind::Fourier(modes),
            offset: 0.0,
        }
    }

    pub fn custom(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            kind: PotentialKind::Custom(Arc::new(f)),
            offset: 0.0,
        }
    }

    /// `G + c`.
    pub fn shifted(mut self, c: f64) -> Self {
        self.offset += c;
        self
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn uses_expansion(&self) -> bool {
        matches!(self.kind, PotentialKind::UnstableExpansion)
    }

    /// `G(p)`, where `phi` is `Φ(p)` along whatever tangent the caller is
    /// transporting. Ignored unless the potential is the unstable expansion.
    #[inline]
    pub fn value<P: PhasePoint>(&self, p: &P, phi: f64) -> f64 {
        let base = match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::UnstableExpansion => phi,
            PotentialKind::Fourier(modes) => {
                let (u, v) = (p.coord(0), p.coord(1));
                modes.iter().map(|m| m.eval(u, v)).sum()
            }
            PotentialKind::Custom(f) => {
                let coords = p.coords();
                f(&coords[..P::DIM])
            }
        };
        base + self.offset
    }

    /// An upper bound for `‖G‖_∞` when one is known in closed form.
    pub fn sup_norm_bound(&self) -> Option<f64> {
        let base = match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Fourier(modes) => modes.iter().map(|m| m.amplitude.abs()).sum(),
            PotentialKind::UnstableExpansion | PotentialKind::Custom(_) => return None,
        };
        Some(base + self.offset.abs())
    }

    /// `‖G‖_∞` estimated on a `k × k` grid of the first two coordinates
    /// (remaining coordinates zero), with `Φ` held at `phi`.
    pub fn sup_norm_on_grid(&self, k: usize, phi: f64) -> f64 {
        let mut best = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let p = crate::systems::TorusPoint::new(i as f64 / k as f64, j as f64 / k as f64);
                best = best.max(self.value(&p, phi).abs());
            }
        }
        best
    }
}
