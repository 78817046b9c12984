use super::{HyperbolicMap, PhasePoint, SystemError};
use crate::curves::SeedCurve;

/// A point of the torus `R²/Z²`, both coordinates in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

#[inline]
pub(crate) fn reduce_unit(v: f64) -> f64 {
    let r = v - v.floor();
    // v slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed representative of `v` modulo 1 in `[-1/2, 1/2)`.
#[inline]
pub(crate) fn wrap_half(v: f64) -> f64 {
    v - (v + 0.5).floor()
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self {
            x: reduce_unit(x),
            y: reduce_unit(y),
        }
    }
}

impl PhasePoint for TorusPoint {
    const DIM: usize = 2;
    const AXES: &'static [&'static str] = &["x", "y"];

    fn coord(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => panic!("torus has two coordinates, asked for axis {axis}"),
        }
    }
}

/// Linear hyperbolic toral automorphism `(x, y) ↦ (ax + by, cx + dy) mod 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CatMap {
    a: i64,
    b: i64,
    c: i64,
    d: i64,
    lambda_u: f64,
    slope_u: f64,
    unstable: [f64; 2],
    stable: [f64; 2],
}

fn eigenvector(a: i64, b: i64, c: i64, d: i64, mu: f64) -> [f64; 2] {
    let v = if b != 0 {
        [b as f64, mu - a as f64]
    } else {
        [mu - d as f64, c as f64]
    };
    let len = (v[0] * v[0] + v[1] * v[1]).sqrt();
    // orient with non-negative x component so seeds run left to right
    let sign = if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        -1.0
    } else {
        1.0
    };
    [sign * v[0] / len, sign * v[1] / len]
}

impl CatMap {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self, SystemError> {
        let det = a * d - b * c;
        if det != 1 {
            return Err(SystemError::NotUnimodular { a, b, c, d, det });
        }
        let trace = a + d;
        if trace.abs() <= 2 {
            return Err(SystemError::NotHyperbolic { trace });
        }
        let t = trace as f64;
        let root = (t * t - 4.0).sqrt();
        // signed eigenvalues; the expanding one has the same sign as the trace
        let (mu_u, mu_s) = if trace > 0 {
            ((t + root) / 2.0, (t - root) / 2.0)
        } else {
            ((t - root) / 2.0, (t + root) / 2.0)
        };
        let unstable = eigenvector(a, b, c, d, mu_u);
        let stable = eigenvector(a, b, c, d, mu_s);
        Ok(Self {
            a,
            b,
            c,
            d,
            lambda_u: mu_u.abs(),
            slope_u: unstable[1] / unstable[0],
            unstable,
            stable,
        })
    }

    /// The classical Arnol'd map `[[2, 1], [1, 1]]`.
    pub fn arnold() -> Self {
        Self::new(2, 1, 1, 1).expect("[[2,1],[1,1]] is hyperbolic")
    }

    pub fn matrix(&self) -> [[i64; 2]; 2] {
        [[self.a, self.b], [self.c, self.d]]
    }

    pub fn inverse_matrix(&self) -> [[i64; 2]; 2] {
        [[self.d, -self.b], [-self.c, self.a]]
    }

    pub fn trace(&self) -> i64 {
        self.a + self.d
    }

    /// Expanding eigenvalue modulus, `> 1`.
    pub fn lambda_u(&self) -> f64 {
        self.lambda_u
    }

    /// Slope of the unstable eigendirection.
    pub fn slope_u(&self) -> f64 {
        self.slope_u
    }

    /// Topological entropy `log λ_u`.
    pub fn entropy(&self) -> f64 {
        self.lambda_u.ln()
    }

    /// Operator 2-norm of the matrix.
    pub fn operator_norm(&self) -> f64 {
        let [[a, b], [c, d]] = self.matrix().map(|r| r.map(|v| v as f64));
        // largest singular value of a 2x2 matrix
        let s = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        ((s + (s * s - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt()
    }

    /// Exact action on a rational point `(nx, ny) / den`, numerators reduced
    /// into `[0, den)`.
    pub fn apply_rational(&self, num: [i64; 2], den: i64) -> [i64; 2] {
        let m = self.matrix();
        mat_vec_mod(&m, num, den)
    }

    pub fn apply_inverse_rational(&self, num: [i64; 2], den: i64) -> [i64; 2] {
        mat_vec_mod(&self.inverse_matrix(), num, den)
    }

    /// `A^n` in 128-bit integer arithmetic.
    pub fn matrix_power(&self, n: u32) -> [[i128; 2]; 2] {
        let m = self.matrix().map(|r| r.map(i128::from));
        let mut acc = [[1i128, 0], [0, 1]];
        for _ in 0..n {
            acc = [
                [
                    acc[0][0] * m[0][0] + acc[0][1] * m[1][0],
                    acc[0][0] * m[0][1] + acc[0][1] * m[1][1],
                ],
                [
                    acc[1][0] * m[0][0] + acc[1][1] * m[1][0],
                    acc[1][0] * m[0][1] + acc[1][1] * m[1][1],
                ],
            ];
        }
        acc
    }

    fn linear(&self, m: &[[i64; 2]; 2], p: &TorusPoint) -> TorusPoint {
        TorusPoint::new(
            m[0][0] as f64 * p.x + m[0][1] as f64 * p.y,
            m[1][0] as f64 * p.x + m[1][1] as f64 * p.y,
        )
    }
}

fn mat_vec_mod(m: &[[i64; 2]; 2], v: [i64; 2], den: i64) -> [i64; 2] {
    let (den, v0, v1) = (den as i128, v[0] as i128, v[1] as i128);
    let x = (m[0][0] as i128 * v0 + m[0][1] as i128 * v1).rem_euclid(den);
    let y = (m[1][0] as i128 * v0 + m[1][1] as i128 * v1).rem_euclid(den);
    [x as i64, y as i64]
}

impl HyperbolicMap for CatMap {
    type Point = TorusPoint;
    type Vector = [f64; 2];

    fn apply(&self, p: &TorusPoint) -> TorusPoint {
        self.linear(&self.matrix(), p)
    }

    fn apply_inverse(&self, p: &TorusPoint) -> Result<TorusPoint, SystemError> {
        Ok(self.linear(&self.inverse_matrix(), p))
    }

    fn differential(&self, _p: &TorusPoint, v: &[f64; 2]) -> [f64; 2] {
        [
            self.a as f64 * v[0] + self.b as f64 * v[1],
            self.c as f64 * v[0] + self.d as f64 * v[1],
        ]
    }

    fn distance(&self, a: &TorusPoint, b: &TorusPoint) -> f64 {
        let dx = wrap_half(b.x - a.x);
        let dy = wrap_half(b.y - a.y);
        (dx * dx + dy * dy).sqrt()
    }

    fn displacement(&self, from: &TorusPoint, to: &TorusPoint) -> [f64; 2] {
        [wrap_half(to.x - from.x), wrap_half(to.y - from.y)]
    }

    fn translate(&self, p: &TorusPoint, v: &[f64; 2], t: f64) -> TorusPoint {
        TorusPoint::new(p.x + t * v[0], p.y + t * v[1])
    }

    fn unstable_direction(&self, _p: &TorusPoint) -> Result<[f64; 2], SystemError> {
        Ok(self.unstable)
    }

    fn stable_direction(&self, _p: &TorusPoint) -> Option<[f64; 2]> {
        Some(self.stable)
    }

    fn local_unstable_seed(&self, x: &TorusPoint, delta: f64) -> Result<SeedCurve<TorusPoint, [f64; 2]>, SystemError> {
        Ok(SeedCurve::Segment {
            start: *x,
            direction: self.unstable,
            length: delta,
        })
    }
}
