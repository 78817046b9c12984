//! Pressure and entropy estimators.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::curves::{CurveError, RefinementPolicy, UnstableCurve};
use crate::gibbs::{density_log_terms, GibbsError};
use crate::oracle::{self, OracleError};
use crate::potential::Potential;
use crate::reduce::{self, BLOCK};
use crate::systems::{transport, CatMap, HyperbolicMap, SystemError, TorusPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PressureError {
    #[error("n_max = {n_max} outside the supported range {min}..={max}")]
    BadHorizon { n_max: usize, min: usize, max: usize },
    #[error("epsilon must be 1/2^k, got {0}")]
    BadEpsilon(f64),
    #[error("grid pitch must be 1/m for an integer m, got {0}")]
    BadPitch(f64),
    #[error("grid pitch {pitch} exceeds epsilon/4 = {}", epsilon / 4.0)]
    GridTooCoarse { pitch: f64, epsilon: f64 },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Gibbs(#[from] GibbsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureMethod {
    CurveGrowth,
    SeparatedSets,
    PeriodicOrbits,
    /// `(1/n) log` of the arclength of `f^n W`.
    VolumeGrowth,
}

impl fmt::Display for PressureMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CurveGrowth => "curve-growth",
            Self::SeparatedSets => "separated-sets",
            Self::PeriodicOrbits => "periodic-orbits",
            Self::VolumeGrowth => "volume-growth",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureSeries {
    /// `(n, (1/n) log Z_n)`, sorted by `n`.
    pub entries: Vec<(usize, f64)>,
    pub extrapolated: f64,
    pub method: PressureMethod,
}

impl PressureSeries {
    /// `n·v_n − (n−1)·v_{n−1}` from the last two entries, which removes a
    /// `C/n` term. A single entry is returned as is.
    pub fn from_entries(method: PressureMethod, entries: Vec<(usize, f64)>) -> Self {
        let extrapolated = match entries.as_slice() {
            [] => f64::NAN,
            [(_, v)] => *v,
            [.., (m, a), (n, b)] => {
                let (m, n) = (*m as f64, *n as f64);
                (n * b - m * a) / (n - m)
            }
        };
        Self {
            entries,
            extrapolated,
            method,
        }
    }

    pub fn last(&self) -> Option<f64> {
        self.entries.last().map(|e| e.1)
    }

    pub fn value_at(&self, n: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == n).map(|e| e.1)
    }

    /// Rows `method,n,value,extrapolated`, without a header.
    pub fn write_rows<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (n, v) in &self.entries {
            writeln!(out, "{},{n},{v},{}", self.method, self.extrapolated)?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "method,n,value,extrapolated")?;
        self.write_rows(out)
    }
}

/// Running `log Σ exp` as `(max, Σ exp(v − max))`.
#[derive(Debug, Clone, Copy)]
struct LseAcc {
    max: f64,
    scaled: f64,
}

impl LseAcc {
    const EMPTY: Self = Self {
        max: f64::NEG_INFINITY,
        scaled: 0.0,
    };

    fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v > self.max {
            self.scaled = self.scaled * (self.max - v).exp() + 1.0;
            self.max = v;
        } else {
            self.scaled += (v - self.max).exp();
        }
    }

    fn merge(self, other: Self) -> Self {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if self.max == f64::NEG_INFINITY {
            return other;
        }
        let max = self.max.max(other.max);
        Self {
            max,
            scaled: self.scaled * (self.max - max).exp() + other.scaled * (other.max - max).exp(),
        }
    }

    fn value(self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

fn merge_pairwise(parts: &[Vec<LseAcc>], width: usize) -> Vec<LseAcc> {
    match parts.len() {
        0 => vec![LseAcc::EMPTY; width],
        1 => parts[0].clone(),
        len => {
            let (lo, hi) = parts.split_at(len / 2);
            let (a, b) = (merge_pairwise(lo, width), merge_pairwise(hi, width));
            a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()
        }
    }
}

/// `log Z_n^G` for `n = 1..=n_max` on the quadrature of one curve at
/// generation `≥ n_max`.
fn log_partitions<S: HyperbolicMap>(
    system: &S,
    curve: &UnstableCurve<S::Point, S::Vector>,
    potential: &Potential,
    n_max: usize,
) -> Vec<f64> {
    let elements = curve.seed_elements(system);
    let seed = curve.seed();
    let samples = curve.samples();
    let parts: Vec<Vec<LseAcc>> = (0..reduce::block_count(samples.len()))
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![LseAcc::EMPTY; n_max];
            for j in b * BLOCK..((b + 1) * BLOCK).min(samples.len()) {
                let log_el = elements[j].ln();
                let (mut p, mut u) = seed.anchor(system, samples[j].param);
                let mut sum = 0.0;
                for slot in acc.iter_mut() {
                    let (next, image, stretch) = transport(system, &p, &u);
                    sum += potential.value(&p, -stretch) + stretch;
                    slot.push(sum + log_el);
                    (p, u) = (next, image);
                }
            }
            acc
        })
        .collect();
    merge_pairwise(&parts, n_max).into_iter().map(LseAcc::value).collect()
}

/// `log Z_n^G = log ∫_W exp(Σ_{k<n} (G − Φ)(f^k y)) dλ(y)`. A curve already
/// at generation `n` or later is used as it is.
pub fn log_partition<S: HyperbolicMap>(
    system: &S,
    seed: &UnstableCurve<S::Point, S::Vector>,
    potential: &Potential,
    n: usize,
    policy: &RefinementPolicy,
) -> Result<f64, PressureError> {
    if n == 0 {
        return Err(PressureError::BadHorizon {
            n_max: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    let advanced;
    let curve = if seed.generation() >= n {
        seed
    } else {
        advanced = seed.advance_by(system, n - seed.generation(), policy)?;
        &advanced
    };
    Ok(reduce::log_sum_exp(&density_log_terms(system, curve, potential, n)?))
}

/// `(1/n) log Z_n^G` for `n = 1..=n_max`, all on the quadrature of the
/// generation-`n_max` curve (or of `seed` itself if it is at least that far
/// along).
pub fn pressure_curve_growth<S: HyperbolicMap>(
    system: &S,
    seed: &UnstableCurve<S::Point, S::Vector>,
    potential: &Potential,
    n_max: usize,
    policy: &RefinementPolicy,
) -> Result<PressureSeries, PressureError> {
    if n_max < 2 {
        return Err(PressureError::BadHorizon {
            n_max,
            min: 2,
            max: usize::MAX,
        });
    }
    let advanced;
    let curve = if seed.generation() >= n_max {
        seed
    } else {
        advanced = seed.advance_by(system, n_max - seed.generation(), policy)?;
        &advanced
    };
    let entries = log_partitions(system, curve, potential, n_max)
        .into_iter()
        .enumerate()
        .map(|(i, z)| (i + 1, z / (i + 1) as f64))
        .collect();
    Ok(PressureSeries::from_entries(PressureMethod::CurveGrowth, entries))
}

/// `(1/n) log` of the arclength of `f^n W` for `n = 1..=n_max`.
pub fn entropy_volume_growth<S: HyperbolicMap>(
    system: &S,
    seed: &UnstableCurve<S::Point, S::Vector>,
    n_max: usize,
    policy: &RefinementPolicy,
) -> Result<PressureSeries, PressureError> {
    if n_max < 2 {
        return Err(PressureError::BadHorizon {
            n_max,
            min: 2,
            max: usize::MAX,
        });
    }
    let mut curve = seed.clone();
    let mut entries = Vec::with_capacity(n_max);
    for n in seed.generation() + 1..=n_max {
        curve = curve.advance(system, policy)?;
        entries.push((n, curve.arclength(system).ln() / n as f64));
    }
    Ok(PressureSeries::from_entries(PressureMethod::VolumeGrowth, entries))
}

/// `(1/n) log Σ_{f^n p = p} exp(S_n G(p))` for `n = 1..=n_max`.
pub fn pressure_periodic_orbits(
    system: &CatMap,
    potential: &Potential,
    n_max: u32,
) -> Result<PressureSeries, PressureError> {
    if n_max == 0 {
        return Err(PressureError::BadHorizon {
            n_max: 0,
            min: 1,
            max: oracle::MAX_PERIOD as usize,
        });
    }
    let entries = (1..=n_max)
        .map(|n| Ok((n as usize, oracle::periodic_pressure(system, potential, n)?)))
        .collect::<Result<_, PressureError>>()?;
    Ok(PressureSeries::from_entries(PressureMethod::PeriodicOrbits, entries))
}

pub const MAX_SEPARATED_HORIZON: usize = 10;

/// Greedy `(n, ε)`-separated sets on the grid `pitch·Z² mod 1`.
///
/// Candidates are taken in order of decreasing `G^n`, ties broken
/// row-major, and accepted when their Bowen distance
/// `max_{i<n} d(f^i x, f^i y)` to every accepted point exceeds `ε`.
pub fn pressure_separated_sets(
    system: &CatMap,
    potential: &Potential,
    n_max: usize,
    epsilon: f64,
    pitch: f64,
) -> Result<PressureSeries, PressureError> {
    if !(1..=MAX_SEPARATED_HORIZON).contains(&n_max) {
        return Err(PressureError::BadHorizon {
            n_max,
            min: 1,
            max: MAX_SEPARATED_HORIZON,
        });
    }
    let k = -epsilon.log2();
    if !(epsilon > 0.0 && k.fract() == 0.0 && k >= 0.0) {
        return Err(PressureError::BadEpsilon(epsilon));
    }
    let side = (1.0 / pitch).round();
    if !(pitch > 0.0 && pitch <= 1.0 && (side * pitch - 1.0).abs() < 1e-12) {
        return Err(PressureError::BadPitch(pitch));
    }
    if pitch > epsilon / 4.0 {
        return Err(PressureError::GridTooCoarse { pitch, epsilon });
    }
    let side = side as usize;
    let offset = potential.offset();
    let shape = potential.clone().shifted(-offset);
    let phi = -system.entropy();
    let entries = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let log_z = SeparatedSearch::new(system, n, epsilon).run(&shape, phi, side);
            (n, log_z / n as f64 + offset)
        })
        .collect();
    Ok(PressureSeries::from_entries(PressureMethod::SeparatedSets, entries))
}

struct SeparatedSearch<'a> {
    system: &'a CatMap,
    n: usize,
    epsilon: f64,
    /// Time at which candidates are bucketed.
    hash_time: usize,
    /// Cells per axis of the bucket grid.
    cells: i64,
}

impl<'a> SeparatedSearch<'a> {
    fn new(system: &'a CatMap, n: usize, epsilon: f64) -> Self {
        let mut hash_time = 0;
        let mut radius = epsilon;
        // Bowen-close pairs stay close under the linear lift when the
        // wrap-around cannot skip a lattice translate.
        if (1.0 + system.operator_norm()) * epsilon < 1.0 {
            let u = system
                .unstable_direction(&TorusPoint::new(0.0, 0.0))
                .unwrap_or([1.0, 0.0]);
            let s = system
                .stable_direction(&TorusPoint::new(0.0, 0.0))
                .unwrap_or([0.0, 1.0]);
            let sin = (u[0] * s[1] - u[1] * s[0]).abs();
            let proj = 1.0 / sin;
            let lambda = system.lambda_u();
            for m in 0..n {
                let r = epsilon * proj * (lambda.powi(-((n - 1 - m) as i32)) + lambda.powi(-(m as i32)));
                if r < radius {
                    radius = r;
                    hash_time = m;
                }
            }
        }
        let cells = ((1.0 / radius).floor() as i64).max(1);
        Self {
            system,
            n,
            epsilon,
            hash_time,
            cells,
        }
    }

    fn cell(&self, p: &TorusPoint) -> (i64, i64) {
        let c = self.cells;
        (
            ((p.x * c as f64) as i64).min(c - 1),
            ((p.y * c as f64) as i64).min(c - 1),
        )
    }

    fn neighbors(&self, (i, j): (i64, i64)) -> Vec<(i64, i64)> {
        let c = self.cells;
        let mut out = Vec::with_capacity(9);
        for di in -1..=1 {
            for dj in -1..=1 {
                let key = ((i + di).rem_euclid(c), (j + dj).rem_euclid(c));
                if !out.contains(&key) {
                    out.push(key);
                }
            }
        }
        out
    }

    fn separated(&self, a: &TorusPoint, b: &TorusPoint) -> bool {
        let (mut p, mut q) = (*a, *b);
        for i in 0..self.n {
            if i > 0 {
                p = self.system.apply(&p);
                q = self.system.apply(&q);
            }
            if self.system.distance(&p, &q) > self.epsilon {
                return true;
            }
        }
        false
    }

    /// `log Σ_{x ∈ S} exp(G^n(x))` for the greedy set `S`.
    fn run(&self, potential: &Potential, phi: f64, side: usize) -> f64 {
        let total = side * side;
        let start = |idx: usize| TorusPoint::new((idx % side) as f64 / side as f64, (idx / side) as f64 / side as f64);
        let sums: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|idx| {
                let mut p = start(idx);
                let mut s = 0.0;
                for _ in 0..self.n {
                    s += potential.value(&p, phi);
                    p = self.system.apply(&p);
                }
                s
            })
            .collect();
        let mut order: Vec<usize> = (0..total).collect();
        order.par_sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));

        let mut buckets: HashMap<(i64, i64), Vec<TorusPoint>> = HashMap::new();
        let mut accepted = Vec::new();
        for idx in order {
            let x = start(idx);
            let hashed = (0..self.hash_time).fold(x, |p, _| self.system.apply(&p));
            let key = self.cell(&hashed);
            let clash = self.neighbors(key).into_iter().any(|k| {
                buckets
                    .get(&k)
                    .is_some_and(|pts| pts.iter().any(|y| !self.separated(&x, y)))
            });
            if !clash {
                buckets.entry(key).or_default().push(x);
                accepted.push(sums[idx]);
            }
        }
        reduce::log_sum_exp(&accepted)
    }
}
