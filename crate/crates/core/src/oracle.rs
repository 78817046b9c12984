//! Exact periodic orbits of toral automorphisms.
//!
//! Points of period dividing `n` solve `(A^n − I) x ∈ Z²`. With the Smith
//! form `U (A^n − I) V = diag(s₁, s₂)` they are `x = V (k₁/s₁, k₂/s₂) mod 1`,
//! `|s₁ s₂| = |tr A^n − 2|` of them. All arithmetic is integral.

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::gibbs::{Atom, WeightedAtoms};
use crate::potential::Potential;
use crate::reduce;
use crate::systems::{CatMap, TorusPoint};

pub const MAX_PERIOD: u32 = 16;
pub const MAX_ORBIT_POINTS: u64 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("period must be at least 1")]
    ZeroPeriod,
    #[error("period {period} exceeds the supported maximum {max}")]
    PeriodTooLarge { period: u32, max: u32 },
    #[error("{count} periodic points exceed the enumeration limit {max}")]
    TooManyPoints { count: u64, max: u64 },
}

/// `(U, D, V)` with `U m V = D`, `D` diagonal with `0 <= d₀ | d₁`, and
/// `U`, `V` unimodular.
pub type SmithForm = ([[i128; 2]; 2], [i128; 2], [[i128; 2]; 2]);

pub fn smith_normal_form(m: [[i128; 2]; 2]) -> SmithForm {
    let mut a = m;
    let mut u = [[1i128, 0], [0, 1]];
    let mut v = [[1i128, 0], [0, 1]];

    loop {
        // Move a smallest nonzero entry to the pivot.
        let mut best: Option<(usize, usize)> = None;
        for i in 0..2 {
            for j in 0..2 {
                if a[i][j] != 0 && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else {
            return (u, [0, 0], v);
        };
        if pi == 1 {
            a.swap(0, 1);
            u.swap(0, 1);
        }
        if pj == 1 {
            for row in a.iter_mut().chain(v.iter_mut()) {
                row.swap(0, 1);
            }
        }
        let p = a[0][0];

        let q = a[1][0].div_euclid(p);
        for j in 0..2 {
            a[1][j] -= q * a[0][j];
            u[1][j] -= q * u[0][j];
        }
        let q = a[0][1].div_euclid(p);
        for i in 0..2 {
            a[i][1] -= q * a[i][0];
            v[i][1] -= q * v[i][0];
        }
        if a[1][0] != 0 || a[0][1] != 0 {
            continue;
        }
        if a[1][1] % p != 0 {
            for j in 0..2 {
                a[0][j] += a[1][j];
                u[0][j] += u[1][j];
            }
            continue;
        }
        for (k, row) in a.iter_mut().enumerate() {
            if row[k] < 0 {
                row.iter_mut().for_each(|x| *x = -*x);
                u[k].iter_mut().for_each(|x| *x = -*x);
            }
        }
        return (u, [a[0][0], a[1][1]], v);
    }
}

/// All points with `f^n x = x`, stored as numerators over a common
/// denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicOrbitSet {
    period: u32,
    numerators: Vec<[i64; 2]>,
    denominator: i64,
}

impl PeriodicOrbitSet {
    pub fn period(&self) -> u32 {
        self.period
    }

    pub fn count(&self) -> usize {
        self.numerators.len()
    }

    pub fn denominator(&self) -> i64 {
        self.denominator
    }

    pub fn numerators(&self) -> &[[i64; 2]] {
        &self.numerators
    }

    pub fn point(&self, i: usize) -> TorusPoint {
        let [x, y] = self.numerators[i];
        let d = self.denominator as f64;
        TorusPoint::new(x as f64 / d, y as f64 / d)
    }

    /// Writes `num_x,num_y,denom` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "num_x,num_y,denom")?;
        for [x, y] in &self.numerators {
            writeln!(out, "{x},{y},{}", self.denominator)?;
        }
        Ok(())
    }
}

pub fn enumerate_fixed_points(system: &CatMap, n: u32) -> Result<PeriodicOrbitSet, OracleError> {
    if n == 0 {
        return Err(OracleError::ZeroPeriod);
    }
    if n > MAX_PERIOD {
        return Err(OracleError::PeriodTooLarge {
            period: n,
            max: MAX_PERIOD,
        });
    }
    let mut m = system.matrix_power(n);
    m[0][0] -= 1;
    m[1][1] -= 1;
    let count = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).unsigned_abs() as u64;
    if count > MAX_ORBIT_POINTS {
        return Err(OracleError::TooManyPoints {
            count,
            max: MAX_ORBIT_POINTS,
        });
    }
    let (_, [s1, s2], v) = smith_normal_form(m);
    let step = s2 / s1;
    let numerators = (0..s1)
        .into_par_iter()
        .flat_map_iter(|k1| {
            (0..s2).map(move |k2| {
                let y = [k1 * step, k2];
                let x = [
                    (v[0][0] * y[0] + v[0][1] * y[1]).rem_euclid(s2),
                    (v[1][0] * y[0] + v[1][1] * y[1]).rem_euclid(s2),
                ];
                [x[0] as i64, x[1] as i64]
            })
        })
        .collect();
    Ok(PeriodicOrbitSet {
        period: n,
        numerators,
        denominator: s2 as i64,
    })
}

/// `S_n G(p)` for every point of the set, orbits followed exactly.
pub fn periodic_birkhoff_sums(system: &CatMap, orbits: &PeriodicOrbitSet, potential: &Potential) -> Vec<f64> {
    let phi = -system.entropy();
    let den = orbits.denominator;
    let d = den as f64;
    orbits
        .numerators
        .par_iter()
        .map(|&start| {
            let mut num = start;
            let mut total = 0.0;
            for _ in 0..orbits.period {
                let p = TorusPoint::new(num[0] as f64 / d, num[1] as f64 / d);
                total += potential.value(&p, phi);
                num = system.apply_rational(num, den);
            }
            total
        })
        .collect()
}

/// `Σ_{f^n p = p} exp(S_n G(p)) δ_p`, normalized.
pub fn periodic_gibbs_estimate(
    system: &CatMap,
    potential: &Potential,
    n: u32,
) -> Result<WeightedAtoms<TorusPoint>, OracleError> {
    let orbits = enumerate_fixed_points(system, n)?;
    let weights = reduce::softmax(&periodic_birkhoff_sums(system, &orbits, potential));
    let atoms = weights
        .into_iter()
        .enumerate()
        .map(|(i, weight)| Atom {
            point: orbits.point(i),
            weight,
            generation: 0,
        })
        .collect();
    Ok(WeightedAtoms::from_normalized(atoms))
}

/// `(1/n) log Σ_{f^n p = p} exp(S_n G(p))`.
pub fn periodic_pressure(system: &CatMap, potential: &Potential, n: u32) -> Result<f64, OracleError> {
    let orbits = enumerate_fixed_points(system, n)?;
    Ok(reduce::log_sum_exp(&periodic_birkhoff_sums(system, &orbits, potential)) / n as f64)
}
