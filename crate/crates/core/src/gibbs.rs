//! Weighted push-forward of unstable-curve volume.
//!
//! For a seed `W` with volume `λ`, the measure `λ_n` has density
//! proportional to `exp(Σ_{i<n} (G − Φ)(f^i y))` with respect to `λ`, and
//! the averaged measure is `μ_n = (1/n) Σ_{k<n} f^k_* λ_n`. Densities are
//! computed once on the seed samples and then transported unchanged to every
//! generation.

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::curves::{CurveError, RefinementPolicy, UnstableCurve};
use crate::potential::Potential;
use crate::reduce::{self, Compensated, BLOCK};
use crate::systems::{transport, HyperbolicMap, PhasePoint, SystemError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GibbsError {
    #[error("curve is at generation {generation}, densities for n = {needed} need that many steps of history")]
    MissingHistory { generation: usize, needed: usize },
    #[error("atom {index} has invalid weight {weight}")]
    BadWeight { index: usize, weight: f64 },
    #[error("push-forward chain needs n >= 1")]
    EmptyChain,
    #[error("potential depends on Φ and cannot be integrated against bare atoms")]
    NeedsTangent,
    #[error("ball radius must be positive, got {0}")]
    BadRadius(f64),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<P> {
    pub point: P,
    pub weight: f64,
    /// Number of map applications between the seed and this atom.
    pub generation: usize,
}

/// A finite measure `Σ w_j δ_{p_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAtoms<P> {
    atoms: Vec<Atom<P>>,
    normalized: bool,
}

impl<P: PhasePoint> WeightedAtoms<P> {
    pub fn new(atoms: Vec<Atom<P>>) -> Result<Self, GibbsError> {
        for (index, a) in atoms.iter().enumerate() {
            if !(a.weight >= 0.0 && a.weight.is_finite()) {
                return Err(GibbsError::BadWeight {
                    index,
                    weight: a.weight,
                });
            }
        }
        let mut out = Self {
            atoms,
            normalized: false,
        };
        out.normalized = (out.total_mass() - 1.0).abs() <= 1e-10;
        Ok(out)
    }

    /// Atoms whose weights come from a softmax and already sum to one.
    pub(crate) fn from_normalized(atoms: Vec<Atom<P>>) -> Self {
        Self {
            atoms,
            normalized: true,
        }
    }

    pub fn atoms(&self) -> &[Atom<P>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total_mass(&self) -> f64 {
        let w: Vec<f64> = self.atoms.iter().map(|a| a.weight).collect();
        reduce::sum(&w)
    }

    /// Rescales to total mass one. A zero measure is left untouched.
    pub fn normalize(&mut self) {
        let mass = self.total_mass();
        if mass > 0.0 {
            for a in &mut self.atoms {
                a.weight /= mass;
            }
            self.normalized = true;
        }
    }

    /// Writes `<coords>,weight,generation` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for axis in P::AXES {
            write!(out, "{axis},")?;
        }
        writeln!(out, "weight,generation")?;
        for a in &self.atoms {
            for axis in 0..P::DIM {
                write!(out, "{},", a.point.coord(axis))?;
            }
            writeln!(out, "{},{}", a.weight, a.generation)?;
        }
        Ok(())
    }
}

/// A discrete measure that can be visited block by block.
///
/// Block boundaries are fixed by the measure, never by the thread pool, so
/// every reduction over them is reproducible bit for bit.
pub trait AtomicMeasure<P>: Sync {
    fn block_count(&self) -> usize;
    fn visit_block(&self, block: usize, visit: &mut dyn FnMut(&P, f64));
}

impl<P: PhasePoint> AtomicMeasure<P> for WeightedAtoms<P> {
    fn block_count(&self) -> usize {
        reduce::block_count(self.atoms.len())
    }

    fn visit_block(&self, block: usize, visit: &mut dyn FnMut(&P, f64)) {
        let end = ((block + 1) * BLOCK).min(self.atoms.len());
        for a in &self.atoms[block * BLOCK..end] {
            visit(&a.point, a.weight);
        }
    }
}

/// `Σ_j w_j · f(p_j)` for `K` observables in one pass.
pub fn weighted_sums<P, M, F, const K: usize>(mu: &M, f: F) -> [f64; K]
where
    M: AtomicMeasure<P> + ?Sized,
    F: Fn(&P) -> [f64; K] + Sync + Send,
{
    reduce::block_reduce(mu.block_count(), |b| {
        let mut acc = [Compensated::default(); K];
        mu.visit_block(b, &mut |p, w| {
            let values = f(p);
            for (slot, v) in acc.iter_mut().zip(values) {
                slot.add(w * v);
            }
        });
        acc.map(|c| c.value())
    })
}

/// A metric ball `{p : d(p, center) < radius}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSpec<P> {
    pub center: P,
    pub radius: f64,
}

impl<P: PhasePoint> BallSpec<P> {
    pub fn new(center: P, radius: f64) -> Result<Self, GibbsError> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(GibbsError::BadRadius(radius));
        }
        Ok(Self { center, radius })
    }

    /// On the unit torus a ball of radius below 1/2 is an embedded disk.
    pub fn is_embedded(&self) -> bool {
        self.radius < 0.5
    }
}

pub fn measure_of_ball<S, M>(system: &S, mu: &M, ball: &BallSpec<S::Point>) -> f64
where
    S: HyperbolicMap,
    M: AtomicMeasure<S::Point> + ?Sized,
{
    weighted_sums(mu, |p| {
        [if system.distance(p, &ball.center) < ball.radius {
            1.0
        } else {
            0.0
        }]
    })[0]
}

/// Measures of several balls in one pass.
pub fn measure_of_balls<S, M>(system: &S, mu: &M, balls: &[BallSpec<S::Point>]) -> Vec<f64>
where
    S: HyperbolicMap,
    M: AtomicMeasure<S::Point> + ?Sized,
{
    balls.iter().map(|ball| measure_of_ball(system, mu, ball)).collect()
}

pub fn integrate<P, M>(mu: &M, f: &Potential) -> Result<f64, GibbsError>
where
    P: PhasePoint,
    M: AtomicMeasure<P> + ?Sized,
{
    if f.uses_expansion() {
        return Err(GibbsError::NeedsTangent);
    }
    Ok(weighted_sums(mu, |p| [f.value(p, 0.0)])[0])
}

/// Per-sample `log(exp(Σ_{i<n}(G − Φ)(f^i z_j)) · λ_j)` on the seed, where
/// `λ_j` are the seed's trapezoidal arclength weights at the curve's
/// parameter set. `Φ` is accumulated along the transported tangent.
pub(crate) fn density_log_terms<S>(
    system: &S,
    curve: &UnstableCurve<S::Point, S::Vector>,
    potential: &Potential,
    n: usize,
) -> Result<Vec<f64>, GibbsError>
where
    S: HyperbolicMap,
{
    if n > curve.generation() {
        return Err(GibbsError::MissingHistory {
            generation: curve.generation(),
            needed: n,
        });
    }
    let elements = curve.seed_elements(system);
    let seed = curve.seed();
    Ok(curve
        .samples()
        .par_iter()
        .zip(elements.par_iter())
        .map(|(s, &el)| {
            let (mut p, mut u) = seed.anchor(system, s.param);
            let mut acc = 0.0;
            for _ in 0..n {
                let (next, image, stretch) = transport(system, &p, &u);
                // (G - Φ) with Φ = -stretch
                acc += potential.value(&p, -stretch) + stretch;
                (p, u) = (next, image);
            }
            acc + el.ln()
        })
        .collect())
}

/// `f^n_* λ_n` for a curve at generation `n`: atoms at the curve's current
/// points carrying the normalized densities of `λ_n`.
pub fn density_weights<S>(
    system: &S,
    curve: &UnstableCurve<S::Point, S::Vector>,
    potential: &Potential,
) -> Result<WeightedAtoms<S::Point>, GibbsError>
where
    S: HyperbolicMap,
{
    let n = curve.generation();
    let weights = reduce::softmax(&density_log_terms(system, curve, potential, n)?);
    let atoms = curve
        .samples()
        .iter()
        .zip(weights)
        .map(|(s, weight)| Atom {
            point: s.point,
            weight,
            generation: n,
        })
        .collect();
    Ok(WeightedAtoms::from_normalized(atoms))
}

/// The measures `f^k_* λ_n`, `k = 0..n`, sharing one weight vector.
///
/// Atoms of element `k` are the generation-`k` images of the seed samples of
/// the generation-`n` curve. Images are recomputed on demand from the seed
/// points, so memory stays linear in the number of samples.
#[derive(Debug, Clone)]
pub struct PushforwardChain<'s, S: HyperbolicMap> {
    system: &'s S,
    origins: Vec<S::Point>,
    weights: Vec<f64>,
    n: usize,
}

impl<'s, S: HyperbolicMap> PushforwardChain<'s, S> {
    /// Builds the chain for `λ_n` from a generation-zero seed curve.
    pub fn build(
        system: &'s S,
        seed: &UnstableCurve<S::Point, S::Vector>,
        potential: &Potential,
        n: usize,
        policy: &RefinementPolicy,
    ) -> Result<Self, GibbsError> {
        if n == 0 {
            return Err(GibbsError::EmptyChain);
        }
        let curve = seed.advance_by(system, n.saturating_sub(seed.generation()), policy)?;
        Self::from_curve(system, &curve, potential, n)
    }

    /// Uses an already advanced curve; `n` must not exceed its generation.
    pub fn from_curve(
        system: &'s S,
        curve: &UnstableCurve<S::Point, S::Vector>,
        potential: &Potential,
        n: usize,
    ) -> Result<Self, GibbsError> {
        if n == 0 {
            return Err(GibbsError::EmptyChain);
        }
        let weights = reduce::softmax(&density_log_terms(system, curve, potential, n)?);
        Ok(Self {
            system,
            origins: curve.seed_points(system),
            weights,
            n,
        })
    }

    /// The unweighted chain `f^k_* λ` with `λ` the normalized seed volume.
    pub fn volume(system: &'s S, curve: &UnstableCurve<S::Point, S::Vector>, n: usize) -> Result<Self, GibbsError> {
        if n == 0 {
            return Err(GibbsError::EmptyChain);
        }
        let elements = curve.seed_elements(system);
        let total = reduce::sum(&elements);
        let weights = elements.iter().map(|e| e / total).collect();
        Ok(Self {
            system,
            origins: curve.seed_points(system),
            weights,
            n,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn system(&self) -> &'s S {
        self.system
    }

    /// Densities of `λ_n` on the seed samples, summing to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn origins(&self) -> &[S::Point] {
        &self.origins
    }

    /// Lazy view of `f^k_* λ_n`.
    pub fn element_view(&self, k: usize) -> ChainElement<'_, 's, S> {
        assert!(k < self.n, "element {k} of a chain of length {}", self.n);
        ChainElement { chain: self, k }
    }

    /// `f^k_* λ_n`, materialized.
    pub fn element(&self, k: usize) -> WeightedAtoms<S::Point> {
        let view = self.element_view(k);
        let atoms = self
            .origins
            .par_iter()
            .zip(self.weights.par_iter())
            .map(|(p, &weight)| Atom {
                point: view.image(p),
                weight,
                generation: k,
            })
            .collect();
        WeightedAtoms::from_normalized(atoms)
    }

    /// All elements in order, one materialized at a time.
    pub fn elements(&self) -> impl Iterator<Item = WeightedAtoms<S::Point>> + '_ {
        let system = self.system;
        let mut current: Option<Vec<S::Point>> = None;
        (0..self.n).map(move |k| {
            let points = match current.take() {
                None => self.origins.clone(),
                Some(prev) => prev.par_iter().map(|p| system.apply(p)).collect(),
            };
            let atoms = points
                .iter()
                .zip(&self.weights)
                .map(|(p, &weight)| Atom {
                    point: *p,
                    weight,
                    generation: k,
                })
                .collect();
            current = Some(points);
            WeightedAtoms::from_normalized(atoms)
        })
    }
}

/// `f^k_* λ_n` without materialized atoms.
pub struct ChainElement<'c, 's, S: HyperbolicMap> {
    chain: &'c PushforwardChain<'s, S>,
    k: usize,
}

impl<S: HyperbolicMap> ChainElement<'_, '_, S> {
    fn image(&self, p: &S::Point) -> S::Point {
        (0..self.k).fold(*p, |q, _| self.chain.system.apply(&q))
    }
}

impl<S: HyperbolicMap> AtomicMeasure<S::Point> for ChainElement<'_, '_, S> {
    fn block_count(&self) -> usize {
        reduce::block_count(self.chain.origins.len())
    }

    fn visit_block(&self, block: usize, visit: &mut dyn FnMut(&S::Point, f64)) {
        let end = ((block + 1) * BLOCK).min(self.chain.origins.len());
        for j in block * BLOCK..end {
            visit(&self.image(&self.chain.origins[j]), self.chain.weights[j]);
        }
    }
}

/// `μ_n = (1/n) Σ_{k<n} f^k_* λ_n`, visited seed sample by seed sample.
pub struct CesaroMeasure<'c, 's, S: HyperbolicMap> {
    chain: &'c PushforwardChain<'s, S>,
}

pub fn cesaro<'c, 's, S: HyperbolicMap>(chain: &'c PushforwardChain<'s, S>) -> CesaroMeasure<'c, 's, S> {
    CesaroMeasure { chain }
}

impl<S: HyperbolicMap> CesaroMeasure<'_, '_, S> {
    pub fn n(&self) -> usize {
        self.chain.n
    }

    /// Concatenation of all chain elements with weights divided by `n`.
    pub fn to_atoms(&self) -> WeightedAtoms<S::Point> {
        let n = self.chain.n as f64;
        let mut atoms = Vec::with_capacity(self.chain.n * self.chain.origins.len());
        for element in self.chain.elements() {
            atoms.extend(element.atoms.into_iter().map(|a| Atom {
                weight: a.weight / n,
                ..a
            }));
        }
        WeightedAtoms::from_normalized(atoms)
    }
}

impl<S: HyperbolicMap> AtomicMeasure<S::Point> for CesaroMeasure<'_, '_, S> {
    fn block_count(&self) -> usize {
        reduce::block_count(self.chain.origins.len())
    }

    fn visit_block(&self, block: usize, visit: &mut dyn FnMut(&S::Point, f64)) {
        let chain = self.chain;
        let inv_n = 1.0 / chain.n as f64;
        let end = ((block + 1) * BLOCK).min(chain.origins.len());
        for j in block * BLOCK..end {
            let w = chain.weights[j] * inv_n;
            let mut p = chain.origins[j];
            for k in 0..chain.n {
                if k > 0 {
                    p = chain.system.apply(&p);
                }
                visit(&p, w);
            }
        }
    }
}

/// `|∫F dμ_n − ∫F∘f dμ_n|`, with `F∘f` evaluated by mapping each atom.
pub fn invariance_defect<S: HyperbolicMap>(chain: &PushforwardChain<'_, S>, f: &Potential) -> Result<f64, GibbsError> {
    if f.uses_expansion() {
        return Err(GibbsError::NeedsTangent);
    }
    let system = chain.system;
    let [direct, shifted] = weighted_sums(&cesaro(chain), |p| [f.value(p, 0.0), f.value(&system.apply(p), 0.0)]);
    Ok((direct - shifted).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::FourierMode;
    use crate::systems::{CatMap, TorusPoint};

    fn small_chain_setup() -> (CatMap, UnstableCurve<TorusPoint, [f64; 2]>, RefinementPolicy) {
        let cat = CatMap::arnold();
        let policy = RefinementPolicy::with_spacing(0.02);
        let seed = UnstableCurve::seed_segment(&cat, &TorusPoint::new(0.0, 0.0), 1.0, &policy).unwrap();
        (cat, seed, policy)
    }

    #[test]
    fn atoms_reject_negative_weights() {
        let p = TorusPoint::new(0.0, 0.0);
        assert!(matches!(
            WeightedAtoms::new(vec![Atom {
                point: p,
                weight: -0.1,
                generation: 0
            }]),
            Err(GibbsError::BadWeight { index: 0, .. })
        ));
        let mut mu = WeightedAtoms::new(vec![
            Atom {
                point: p,
                weight: 2.0,
                generation: 0,
            },
            Atom {
                point: p,
                weight: 6.0,
                generation: 0,
            },
        ])
        .unwrap();
        assert!(!mu.is_normalized());
        mu.normalize();
        assert!(mu.is_normalized());
        assert_eq!(mu.atoms()[1].weight, 0.75);
    }

    #[test]
    fn ball_edge_cases() {
        let cat = CatMap::arnold();
        let atoms: Vec<_> = (0..10)
            .map(|i| Atom {
                point: TorusPoint::new(0.05 * i as f64, 0.9),
                weight: 0.1,
                generation: 0,
            })
            .collect();
        let mu = WeightedAtoms::new(atoms).unwrap();
        let whole = BallSpec::new(TorusPoint::new(0.3, 0.3), 1.0).unwrap();
        assert!(!whole.is_embedded());
        assert!((measure_of_ball(&cat, &mu, &whole) - 1.0).abs() < 1e-15);
        let empty = BallSpec::new(TorusPoint::new(0.5, 0.4), 0.1).unwrap();
        assert_eq!(measure_of_ball(&cat, &mu, &empty), 0.0);
        assert!(BallSpec::new(TorusPoint::new(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn integrate_constants() {
        let (cat, seed, policy) = small_chain_setup();
        let chain = PushforwardChain::build(&cat, &seed, &Potential::zero(), 4, &policy).unwrap();
        let mu = cesaro(&chain);
        assert!((integrate(&mu, &Potential::zero().shifted(1.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((integrate(&mu, &Potential::zero().shifted(-2.5)).unwrap() + 2.5).abs() < 1e-12);
        assert_eq!(
            integrate(&mu, &Potential::unstable_expansion()),
            Err(GibbsError::NeedsTangent)
        );
        assert!(invariance_defect(&chain, &Potential::zero().shifted(1.0)).unwrap() < 1e-15);
    }

    #[test]
    fn chain_elements_are_consistent() {
        let (cat, seed, policy) = small_chain_setup();
        let g = Potential::fourier(vec![FourierMode::sin_x(0.1)]);
        let chain = PushforwardChain::build(&cat, &seed, &g, 5, &policy).unwrap();
        assert_eq!(
            PushforwardChain::build(&cat, &seed, &g, 0, &policy).unwrap_err(),
            GibbsError::EmptyChain
        );
        for (k, element) in chain.elements().enumerate() {
            assert!((element.total_mass() - 1.0).abs() < 1e-10);
            assert_eq!(element, chain.element(k));
            let lazy = measure_of_ball(
                &cat,
                &chain.element_view(k),
                &BallSpec::new(TorusPoint::new(0.5, 0.5), 0.3).unwrap(),
            );
            let eager = measure_of_ball(&cat, &element, &BallSpec::new(TorusPoint::new(0.5, 0.5), 0.3).unwrap());
            assert!((lazy - eager).abs() < 1e-14);
        }
        let mu = cesaro(&chain);
        let flat = mu.to_atoms();
        assert_eq!(flat.len(), 5 * chain.origins().len());
        assert!((flat.total_mass() - 1.0).abs() < 1e-10);
        let ball = BallSpec::new(TorusPoint::new(0.0, 0.0), 1.0 / 3.0).unwrap();
        assert!((measure_of_ball(&cat, &mu, &ball) - measure_of_ball(&cat, &flat, &ball)).abs() < 1e-12);
    }

    #[test]
    fn single_element_cesaro_is_the_element() {
        let (cat, seed, policy) = small_chain_setup();
        let chain = PushforwardChain::build(&cat, &seed, &Potential::zero(), 1, &policy).unwrap();
        let flat = cesaro(&chain).to_atoms();
        assert_eq!(flat, chain.element(0));
    }

    #[test]
    fn missing_history() {
        let (cat, seed, _) = small_chain_setup();
        assert_eq!(
            PushforwardChain::from_curve(&cat, &seed, &Potential::zero(), 2).unwrap_err(),
            GibbsError::MissingHistory {
                generation: 0,
                needed: 2
            }
        );
    }

    #[test]
    fn csv_export() {
        let (cat, seed, policy) = small_chain_setup();
        let chain = PushforwardChain::build(&cat, &seed, &Potential::zero(), 2, &policy).unwrap();
        let mut buf = Vec::new();
        chain.element(1).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y,weight,generation\n"));
        assert!(text.lines().nth(1).unwrap().ends_with(",1"));
    }
}
