use std::f64::consts::TAU;

use super::cat::{reduce_unit, wrap_half};
use super::{HyperbolicMap, PhasePoint, SystemError, TangentVector};
use crate::curves::SeedCurve;

/// A point of the solid torus `M = R/Z × D²`; `theta` is measured in turns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolenoidPoint {
    pub theta: f64,
    pub x: f64,
    pub y: f64,
}

impl SolenoidPoint {
    pub fn new(theta: f64, x: f64, y: f64) -> Self {
        Self {
            theta: reduce_unit(theta),
            x,
            y,
        }
    }

    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl PhasePoint for SolenoidPoint {
    const DIM: usize = 3;
    const AXES: &'static [&'static str] = &["theta", "x", "y"];

    fn coord(&self, axis: usize) -> f64 {
        match axis {
            0 => self.theta,
            1 => self.x,
            2 => self.y,
            _ => panic!("solenoid has three coordinates, asked for axis {axis}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolenoidVariant {
    /// `(2θ, c·x + cos(2πθ)/2, c·y + sin(2πθ)/2)`
    #[default]
    Corrected,
    /// `(2θ, c·x + cos(θ)/2, c·x + sin(θ)/2)` with `θ` read as radians.
    Verbatim,
}

/// Number of pull-back steps used to place a seed arc on the attractor and
/// to power-iterate the unstable direction.
pub const POWER_ITERATIONS: u32 = 20;

/// The Smale–Williams solenoid on the solid torus.
#[derive(Debug, Clone, PartialEq)]
pub struct SolenoidMap {
    contraction: f64,
    variant: SolenoidVariant,
}

impl SolenoidMap {
    pub fn new(contraction: f64, variant: SolenoidVariant) -> Result<Self, SystemError> {
        if !(contraction > 0.0 && contraction < 0.5) {
            return Err(SystemError::BadContraction(contraction));
        }
        let map = Self { contraction, variant };
        if let Some(p) = map.interior_violation(8) {
            return Err(SystemError::ImageNotInterior(p.coords()));
        }
        Ok(map)
    }

    pub fn contraction(&self) -> f64 {
        self.contraction
    }

    pub fn variant(&self) -> SolenoidVariant {
        self.variant
    }

    /// Samples `M` on a `k × k × k` grid (turns × radius × polar angle) and
    /// returns the first point whose image fails to land in `int(M)`.
    pub fn interior_violation(&self, k: usize) -> Option<SolenoidPoint> {
        for i in 0..k {
            let theta = i as f64 / k as f64;
            for j in 0..k {
                let r = j as f64 / (k - 1).max(1) as f64;
                for l in 0..k {
                    let phi = TAU * l as f64 / k as f64;
                    let p = SolenoidPoint::new(theta, r * phi.cos(), r * phi.sin());
                    if self.apply(&p).radius() >= 1.0 {
                        return Some(p);
                    }
                }
            }
        }
        None
    }

    /// Forward-iterates `p` so that it lies within `c^n` of the attractor.
    pub fn settle(&self, p: &SolenoidPoint, n: usize) -> SolenoidPoint {
        (0..n).fold(*p, |q, _| self.apply(&q))
    }

    fn circle(&self, theta: f64) -> (f64, f64) {
        match self.variant {
            SolenoidVariant::Corrected => ((TAU * theta).cos() / 2.0, (TAU * theta).sin() / 2.0),
            SolenoidVariant::Verbatim => (theta.cos() / 2.0, theta.sin() / 2.0),
        }
    }

    /// Candidate preimage of `p` on the branch with angle `theta`, before
    /// clamping into the disk.
    fn solve_branch(&self, p: &SolenoidPoint, theta: f64) -> SolenoidPoint {
        let (cx, cy) = self.circle(theta);
        let c = self.contraction;
        match self.variant {
            SolenoidVariant::Corrected => SolenoidPoint {
                theta,
                x: (p.x - cx) / c,
                y: (p.y - cy) / c,
            },
            SolenoidVariant::Verbatim => SolenoidPoint {
                theta,
                x: (p.x - cx) / c,
                y: 0.0,
            },
        }
    }

    /// Approximate `depth`-step backward orbit of a point near the attractor.
    ///
    /// Only the angular branch is recovered reliably; disk coordinates lose a
    /// factor `1/c` of accuracy per step, which forward iteration contracts
    /// away again. Points are clamped into `M`.
    pub fn pull_back(&self, p: &SolenoidPoint, depth: u32) -> Result<SolenoidPoint, SystemError> {
        let mut current = *p;
        // rounding noise after k steps back is about 1e-15 / c^k
        let mut noise = 1e-14;
        for _ in 0..depth {
            let half = current.theta / 2.0;
            let mut best: Option<(f64, SolenoidPoint, f64)> = None;
            for theta in [half, half + 0.5] {
                let raw = self.solve_branch(&current, theta);
                let r = raw.radius();
                let q = if r > 1.0 {
                    SolenoidPoint {
                        theta,
                        x: raw.x / r,
                        y: raw.y / r,
                    }
                } else {
                    raw
                };
                let residual = self.distance(&self.apply(&q), &current);
                if best.is_none_or(|(res, _, _)| residual < res) {
                    best = Some((residual, q, r));
                }
            }
            let (_, q, r) = best.expect("two branches examined");
            if noise < 1e-3 && r > 1.0 + noise {
                return Err(SystemError::OffAttractor(p.coords()));
            }
            noise /= self.contraction;
            current = q;
        }
        Ok(current)
    }

    fn pulled_arc_length(&self, base: &SolenoidPoint, span: f64, samples: usize) -> f64 {
        let seed = self.pulled_seed(*base, span);
        let mut prev = seed.point(self, 0.0);
        let mut total = 0.0;
        for i in 1..=samples {
            let next = seed.point(self, i as f64 / samples as f64);
            total += self.distance(&prev, &next);
            prev = next;
        }
        total
    }

    fn pulled_seed(&self, base: SolenoidPoint, span: f64) -> SeedCurve<SolenoidPoint, [f64; 3]> {
        SeedCurve::Pullback {
            base,
            direction: [1.0, 0.0, 0.0],
            scale: 0.5f64.powi(POWER_ITERATIONS as i32),
            depth: POWER_ITERATIONS,
            span,
        }
    }
}

impl HyperbolicMap for SolenoidMap {
    type Point = SolenoidPoint;
    type Vector = [f64; 3];

    fn apply(&self, p: &SolenoidPoint) -> SolenoidPoint {
        let (cx, cy) = self.circle(p.theta);
        let c = self.contraction;
        let (x, y) = match self.variant {
            SolenoidVariant::Corrected => (c * p.x + cx, c * p.y + cy),
            SolenoidVariant::Verbatim => (c * p.x + cx, c * p.x + cy),
        };
        SolenoidPoint::new(2.0 * p.theta, x, y)
    }

    fn apply_inverse(&self, _p: &SolenoidPoint) -> Result<SolenoidPoint, SystemError> {
        Err(SystemError::NoHistory)
    }

    fn differential(&self, p: &SolenoidPoint, v: &[f64; 3]) -> [f64; 3] {
        let c = self.contraction;
        match self.variant {
            SolenoidVariant::Corrected => {
                let (s, co) = (TAU * p.theta).sin_cos();
                [
                    2.0 * v[0],
                    -std::f64::consts::PI * s * v[0] + c * v[1],
                    std::f64::consts::PI * co * v[0] + c * v[2],
                ]
            }
            SolenoidVariant::Verbatim => {
                let (s, co) = p.theta.sin_cos();
                [2.0 * v[0], -s / 2.0 * v[0] + c * v[1], co / 2.0 * v[0] + c * v[1]]
            }
        }
    }

    fn distance(&self, a: &SolenoidPoint, b: &SolenoidPoint) -> f64 {
        let dt = wrap_half(b.theta - a.theta);
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        (dt * dt + dx * dx + dy * dy).sqrt()
    }

    fn displacement(&self, from: &SolenoidPoint, to: &SolenoidPoint) -> [f64; 3] {
        [wrap_half(to.theta - from.theta), to.x - from.x, to.y - from.y]
    }

    fn translate(&self, p: &SolenoidPoint, v: &[f64; 3], t: f64) -> SolenoidPoint {
        SolenoidPoint::new(p.theta + t * v[0], p.x + t * v[1], p.y + t * v[2])
    }

    fn unstable_direction(&self, p: &SolenoidPoint) -> Result<[f64; 3], SystemError> {
        let mut q = self.pull_back(p, POWER_ITERATIONS)?;
        let mut u = [1.0, 0.0, 0.0];
        for _ in 0..POWER_ITERATIONS {
            u = self.differential(&q, &u).normalized();
            q = self.apply(&q);
        }
        Ok(u)
    }

    fn local_unstable_seed(
        &self,
        x: &SolenoidPoint,
        delta: f64,
    ) -> Result<SeedCurve<SolenoidPoint, [f64; 3]>, SystemError> {
        let base = self.pull_back(x, POWER_ITERATIONS)?;
        // arclength is close to linear in the angular span; a few secant
        // rescalings pin it to delta
        let mut span = delta;
        for _ in 0..4 {
            let len = self.pulled_arc_length(&base, span, 4096);
            span *= delta / len;
        }
        Ok(self.pulled_seed(base, span))
    }
}
