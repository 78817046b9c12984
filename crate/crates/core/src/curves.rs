//! Pieces of unstable manifold and their forward images.
//!
//! A curve is stored as samples of a fixed seed parametrization `γ: [0, 1] → M`.
//! The sample with parameter `t` at generation `g` is `f^g(γ(t))`, so every
//! sample carries its whole backward orbit implicitly: its ancestors are
//! recovered by replaying the seed. Refinement bisects in parameter space
//! and maps the new seed point forward, which keeps those orbits exact.

use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::reduce::{self, BLOCK};
use crate::systems::{HyperbolicMap, PhasePoint, SystemError, TangentVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("seed length must be positive, got {0}")]
    BadDelta(f64),
    #[error("need at least two waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("waypoint segment {segment} has zero length")]
    DegenerateSegment { segment: usize },
    #[error("segment {segment} is within {angle:e} rad of the stable direction")]
    TangentToStable { segment: usize, angle: f64 },
    #[error("refinement needs more than {limit} points")]
    PointBudgetExceeded { limit: usize },
    #[error("refinement cannot close the gap at parameter {param} (image is discontinuous)")]
    RefinementStalled { param: f64 },
    #[error("invalid refinement policy: {0}")]
    BadPolicy(&'static str),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// A parametrized curve `γ: [0, 1] → M` that seeds the push-forward.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedCurve<P, V> {
    /// `γ(t) = start + t·length·direction`, `direction` a unit vector.
    Segment { start: P, direction: V, length: f64 },
    /// Piecewise geodesic through `vertices`; `legs` holds unit direction and
    /// length of each piece.
    Polyline {
        vertices: Vec<P>,
        legs: Vec<(V, f64)>,
        total: f64,
    },
    /// `γ(t) = f^depth(base + t·span·scale·direction)`: the forward image of a
    /// tiny transverse segment, which lands exponentially close to the
    /// unstable leaf through `f^depth(base)`.
    Pullback {
        base: P,
        direction: V,
        scale: f64,
        depth: u32,
        span: f64,
    },
}

/// One transport step: image point and normalized image tangent.
#[inline]
pub(crate) fn step<S: HyperbolicMap>(system: &S, p: &S::Point, u: &S::Vector) -> (S::Point, S::Vector) {
    (system.apply(p), system.differential(p, u).normalized())
}

impl<P: PhasePoint, V: TangentVector> SeedCurve<P, V> {
    /// Point and unit tangent at parameter `t`.
    pub fn anchor<S>(&self, system: &S, t: f64) -> (P, V)
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        match self {
            Self::Segment {
                start,
                direction,
                length,
            } => (system.translate(start, direction, t * length), *direction),
            Self::Polyline { vertices, legs, total } => {
                let mut s = t * total;
                let last = legs.len() - 1;
                for (i, (dir, len)) in legs.iter().enumerate() {
                    if s < *len || i == last {
                        return (system.translate(&vertices[i], dir, s), *dir);
                    }
                    s -= len;
                }
                unreachable!("polyline has at least one leg")
            }
            Self::Pullback {
                base,
                direction,
                scale,
                depth,
                span,
            } => {
                let mut p = system.translate(base, direction, t * span * scale);
                let mut u = direction.normalized();
                for _ in 0..*depth {
                    (p, u) = step(system, &p, &u);
                }
                (p, u)
            }
        }
    }

    pub fn point<S>(&self, system: &S, t: f64) -> P
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        self.anchor(system, t).0
    }

    /// Whether the seed is a piece of unstable manifold (as opposed to an
    /// arbitrary transverse curve).
    pub fn is_invariant(&self) -> bool {
        !matches!(self, Self::Polyline { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Insertion {
    /// Bisect in seed parameter and map the new seed point forward.
    #[default]
    MidpointPreimage,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementPolicy {
    /// Largest allowed phase-space distance between consecutive samples.
    pub max_spacing: f64,
    /// Cap on the number of samples in one curve.
    pub max_points: usize,
    pub insertion: Insertion,
    /// Parameter gaps at or below this are never bisected further.
    pub min_param_gap: f64,
}

impl Default for RefinementPolicy {
    fn default() -> Self {
        Self {
            max_spacing: 1e-2,
            max_points: 50_000_000,
            insertion: Insertion::MidpointPreimage,
            min_param_gap: 1e-15,
        }
    }
}

impl RefinementPolicy {
    pub fn with_spacing(max_spacing: f64) -> Self {
        Self {
            max_spacing,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        if self.max_spacing.is_nan() || self.max_spacing <= 0.0 {
            return Err(CurveError::BadPolicy("max_spacing must be positive"));
        }
        if self.max_points < 2 {
            return Err(CurveError::BadPolicy("max_points must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<P, V> {
    /// Seed parameter in `[0, 1]`.
    pub param: f64,
    pub point: P,
    /// Unit tangent, the normalized push-forward of the seed tangent.
    pub tangent: V,
}

#[derive(Debug, Clone)]
pub struct UnstableCurve<P, V> {
    seed: Arc<SeedCurve<P, V>>,
    samples: Vec<Sample<P, V>>,
    generation: usize,
}

impl<P: PhasePoint, V: TangentVector> UnstableCurve<P, V> {
    /// `W^u_δ(x)`: an arc of unstable manifold from `x` of arclength `delta`.
    pub fn seed_segment<S>(system: &S, x: &P, delta: f64, policy: &RefinementPolicy) -> Result<Self, CurveError>
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(CurveError::BadDelta(delta));
        }
        let seed = system.local_unstable_seed(x, delta)?;
        Self::from_seed(system, seed, policy)
    }

    /// A curve through `waypoints`, consecutive waypoints joined by the
    /// shortest geodesic. Rejected if any piece is tangent to a known stable
    /// direction.
    pub fn seed_arbitrary<S>(system: &S, waypoints: &[P], policy: &RefinementPolicy) -> Result<Self, CurveError>
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        if waypoints.len() < 2 {
            return Err(CurveError::TooFewWaypoints(waypoints.len()));
        }
        let mut legs = Vec::with_capacity(waypoints.len() - 1);
        for (segment, pair) in waypoints.windows(2).enumerate() {
            let d = system.displacement(&pair[0], &pair[1]);
            let len = d.norm();
            if len.is_nan() || len <= 0.0 {
                return Err(CurveError::DegenerateSegment { segment });
            }
            let dir = d.scaled(1.0 / len);
            if let Some(stable) = system.stable_direction(&pair[0]) {
                let cos = (dir.dot(&stable) / stable.norm()).abs().min(1.0);
                let angle = cos.acos();
                if angle < 1e-3 {
                    return Err(CurveError::TangentToStable { segment, angle });
                }
            }
            legs.push((dir, len));
        }
        let total = legs.iter().map(|(_, l)| l).sum();
        let seed = SeedCurve::Polyline {
            vertices: waypoints[..waypoints.len() - 1].to_vec(),
            legs,
            total,
        };
        Self::from_seed(system, seed, policy)
    }

    /// Samples `seed` at generation zero, refined to the spacing bound.
    pub fn from_seed<S>(system: &S, seed: SeedCurve<P, V>, policy: &RefinementPolicy) -> Result<Self, CurveError>
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        policy.validate()?;
        let seed = Arc::new(seed);
        let probe = 64;
        let rough: f64 = (0..probe)
            .map(|i| {
                let a = seed.point(system, i as f64 / probe as f64);
                let b = seed.point(system, (i + 1) as f64 / probe as f64);
                system.distance(&a, &b)
            })
            .sum();
        let segments = ((rough / (0.9 * policy.max_spacing)).ceil() as usize).max(1);
        if segments + 1 > policy.max_points {
            return Err(CurveError::PointBudgetExceeded {
                limit: policy.max_points,
            });
        }
        let initial: Vec<Sample<P, V>> = (0..=segments)
            .into_par_iter()
            .map(|i| {
                let param = i as f64 / segments as f64;
                let (point, tangent) = seed.anchor(system, param);
                Sample { param, point, tangent }
            })
            .collect();
        let mut curve = Self {
            seed,
            samples: Vec::new(),
            generation: 0,
        };
        curve.samples = curve.refine(system, initial, 0, policy)?;
        Ok(curve)
    }

    pub fn seed(&self) -> &SeedCurve<P, V> {
        &self.seed
    }

    pub fn samples(&self) -> &[Sample<P, V>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    /// `false` for curves seeded through arbitrary waypoints; their `Φ` is
    /// the stretch along the curve's own tangent.
    pub fn is_invariant(&self) -> bool {
        self.seed.is_invariant()
    }

    /// `f^steps(γ(t))` and its transported unit tangent.
    pub fn replay<S>(&self, system: &S, t: f64, steps: usize) -> (P, V)
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        let (mut p, mut u) = self.seed.anchor(system, t);
        for _ in 0..steps {
            (p, u) = step(system, &p, &u);
        }
        (p, u)
    }

    /// The generation-`g` ancestor of sample `index` (`g ≤ generation`).
    pub fn ancestor<S>(&self, system: &S, index: usize, g: usize) -> Option<(P, V)>
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        if g > self.generation {
            return None;
        }
        let s = self.samples.get(index)?;
        Some(self.replay(system, s.param, g))
    }

    /// Backward Birkhoff sum `Σ_{i=1}^{k} G(f^{-i} y)` at sample `index`,
    /// resolved from the stored orbit. `Φ` is taken along the transported
    /// tangent.
    pub fn backward_birkhoff_sum<S>(
        &self,
        system: &S,
        potential: &crate::potential::Potential,
        index: usize,
        k: usize,
    ) -> Result<f64, SystemError>
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        if k > self.generation {
            return Err(SystemError::NoHistory);
        }
        let s = self.samples.get(index).ok_or(SystemError::NoHistory)?;
        let (mut p, mut u) = self.replay(system, s.param, self.generation - k);
        let mut total = 0.0;
        for _ in 0..k {
            let image = system.differential(&p, &u);
            let len = image.norm();
            total += potential.value(&p, -len.ln());
            p = system.apply(&p);
            u = image.scaled(1.0 / len);
        }
        Ok(total)
    }

    /// The image curve `f(curve)`, refined so consecutive samples stay within
    /// `max_spacing`.
    pub fn advance<S>(&self, system: &S, policy: &RefinementPolicy) -> Result<Self, CurveError>
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        policy.validate()?;
        let images: Vec<Sample<P, V>> = self
            .samples
            .par_iter()
            .map(|s| {
                let (point, tangent) = step(system, &s.point, &s.tangent);
                Sample {
                    param: s.param,
                    point,
                    tangent,
                }
            })
            .collect();
        let generation = self.generation + 1;
        let samples = self.refine(system, images, generation, policy)?;
        Ok(Self {
            seed: Arc::clone(&self.seed),
            samples,
            generation,
        })
    }

    /// Advances `n` times.
    pub fn advance_by<S>(&self, system: &S, n: usize, policy: &RefinementPolicy) -> Result<Self, CurveError>
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        let mut curve = self.clone();
        for _ in 0..n {
            curve = curve.advance(system, policy)?;
        }
        Ok(curve)
    }

    fn refine<S>(
        &self,
        system: &S,
        coarse: Vec<Sample<P, V>>,
        generation: usize,
        policy: &RefinementPolicy,
    ) -> Result<Vec<Sample<P, V>>, CurveError>
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        let pairs = coarse.len().saturating_sub(1);
        let chunks: Vec<Vec<Sample<P, V>>> = (0..reduce::block_count(pairs))
            .into_par_iter()
            .map(|b| {
                let mut out = Vec::with_capacity(BLOCK + 16);
                for i in b * BLOCK..((b + 1) * BLOCK).min(pairs) {
                    out.push(coarse[i]);
                    self.bisect(system, &coarse[i], &coarse[i + 1], generation, policy, &mut out)?;
                    if out.len() > policy.max_points {
                        return Err(CurveError::PointBudgetExceeded {
                            limit: policy.max_points,
                        });
                    }
                }
                Ok(out)
            })
            .collect::<Result<_, _>>()?;
        let total: usize = chunks.iter().map(Vec::len).sum::<usize>() + 1;
        if total > policy.max_points {
            return Err(CurveError::PointBudgetExceeded {
                limit: policy.max_points,
            });
        }
        let mut samples = Vec::with_capacity(total);
        for chunk in chunks {
            samples.extend(chunk);
        }
        if let Some(last) = coarse.last() {
            samples.push(*last);
        }
        Ok(samples)
    }

    fn bisect<S>(
        &self,
        system: &S,
        a: &Sample<P, V>,
        b: &Sample<P, V>,
        generation: usize,
        policy: &RefinementPolicy,
        out: &mut Vec<Sample<P, V>>,
    ) -> Result<(), CurveError>
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        if system.distance(&a.point, &b.point) <= policy.max_spacing {
            return Ok(());
        }
        if b.param - a.param <= policy.min_param_gap {
            return Err(CurveError::RefinementStalled { param: a.param });
        }
        if out.len() > policy.max_points {
            return Err(CurveError::PointBudgetExceeded {
                limit: policy.max_points,
            });
        }
        let param = 0.5 * (a.param + b.param);
        let (point, tangent) = self.replay(system, param, generation);
        let mid = Sample { param, point, tangent };
        self.bisect(system, a, &mid, generation, policy, out)?;
        out.push(mid);
        self.bisect(system, &mid, b, generation, policy, out)
    }

    fn trapezoid(lengths: &[f64]) -> Vec<f64> {
        let n = lengths.len() + 1;
        (0..n)
            .map(|j| {
                let left = if j > 0 { lengths[j - 1] } else { 0.0 };
                let right = if j < n - 1 { lengths[j] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }

    fn segment_lengths<S>(system: &S, points: &[P]) -> Vec<f64>
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        points.par_windows(2).map(|w| system.distance(&w[0], &w[1])).collect()
    }

    /// Trapezoidal arclength weights, one per sample; they sum to the total
    /// chord length of the curve.
    pub fn arclength_elements<S>(&self, system: &S) -> Vec<f64>
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        let points: Vec<P> = self.samples.iter().map(|s| s.point).collect();
        Self::trapezoid(&Self::segment_lengths(system, &points))
    }

    pub fn arclength<S>(&self, system: &S) -> f64
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        let points: Vec<P> = self.samples.iter().map(|s| s.point).collect();
        reduce::sum(&Self::segment_lengths(system, &points))
    }

    /// Seed points `γ(t_j)` for the current parameter set.
    pub fn seed_points<S>(&self, system: &S) -> Vec<P>
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        self.samples
            .par_iter()
            .map(|s| self.seed.point(system, s.param))
            .collect()
    }

    /// Arclength weights of the seed `W` itself (the volume `λ`), evaluated
    /// at the current, possibly refined, parameter set.
    pub fn seed_elements<S>(&self, system: &S) -> Vec<f64>
    where
        S: HyperbolicMap<Point = P, Vector = V>,
    {
        Self::trapezoid(&Self::segment_lengths(system, &self.seed_points(system)))
    }

    /// Writes `generation,param,<coords>` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "generation,param")?;
        for axis in P::AXES {
            write!(out, ",{axis}")?;
        }
        writeln!(out)?;
        for s in &self.samples {
            write!(out, "{},{}", self.generation, s.param)?;
            for axis in 0..P::DIM {
                write!(out, ",{}", s.point.coord(axis))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
