//! End-to-end acceptance checks. Every test writes one `PASS`/`FAIL` line to
//! stderr (bypassing output capture) and then asserts.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rayon::prelude::*;
use unstable_gibbs::cli::{run_config, Command};
use unstable_gibbs::gibbs::{measure_of_balls, AtomicMeasure};
use unstable_gibbs::oracle::{enumerate_fixed_points, periodic_gibbs_estimate, periodic_pressure};
use unstable_gibbs::pressure::{entropy_volume_growth, pressure_curve_growth, pressure_separated_sets};
use unstable_gibbs::{
    cesaro, density_weights, invariance_defect, BallSpec, CatMap, ExperimentConfig, FourierMode, HyperbolicMap,
    Potential, PushforwardChain, RefinementPolicy, SolenoidMap, SolenoidPoint, SolenoidVariant, TorusPoint,
    UnstableCurve,
};

const N: usize = 12;
const SPACING: f64 = 1e-2;

fn entropy() -> f64 {
    ((3.0 + 5f64.sqrt()) / 2.0).ln()
}

fn heavy() -> MutexGuard<'static, ()> {
    static HEAVY: Mutex<()> = Mutex::new(());
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: &str, ok: bool, detail: String) {
    let line = format!("acceptance {id}: {} | {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "acceptance {id} failed: {detail}");
}

fn balls() -> [BallSpec<TorusPoint>; 2] {
    [
        BallSpec::new(TorusPoint::new(0.0, 0.0), 1.0 / 3.0).unwrap(),
        BallSpec::new(TorusPoint::new(0.5, 0.5), 1.0 / 3.0).unwrap(),
    ]
}

fn sine_potential() -> Potential {
    Potential::fourier(vec![FourierMode::sin_x(0.1)])
}

fn test_functions() -> [(&'static str, Potential); 3] {
    [
        ("cos 2πx", Potential::fourier(vec![FourierMode::cos(1, 0)])),
        ("sin 2πy", Potential::fourier(vec![FourierMode::sin(0, 1)])),
        ("cos 2π(x+y)", Potential::fourier(vec![FourierMode::cos(1, 1)])),
    ]
}

/// The `G = 0` experiment on the unit unstable segment at the origin,
/// advanced one generation at a time up to `N`.
struct CatRun {
    curve: UnstableCurve<TorusPoint, [f64; 2]>,
    /// `μ_n(B_1), μ_n(B_2)` for `n = 1..=N`.
    masses: Vec<Vec<f64>>,
    /// Invariance defects of the three test functions for `n = 1..=N`.
    defects: Vec<[f64; 3]>,
    /// Arclength of `f^n W` for `n = 0..=N`.
    lengths: Vec<f64>,
    /// Time spent advancing, weighting and measuring balls.
    measure_time: Duration,
}

fn cat_run() -> &'static CatRun {
    static RUN: OnceLock<CatRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let cat = CatMap::arnold();
        let policy = RefinementPolicy::with_spacing(SPACING);
        let balls = balls();
        let tests = test_functions();
        let started = Instant::now();
        let mut curve = UnstableCurve::seed_segment(&cat, &TorusPoint::new(0.0, 0.0), 1.0, &policy).unwrap();
        let mut measure_time = started.elapsed();
        let mut lengths = vec![curve.arclength(&cat)];
        let mut masses = Vec::new();
        let mut defects = Vec::new();
        for n in 1..=N {
            let t = Instant::now();
            curve = curve.advance(&cat, &policy).unwrap();
            let chain = PushforwardChain::from_curve(&cat, &curve, &Potential::zero(), n).unwrap();
            masses.push(measure_of_balls(&cat, &cesaro(&chain), &balls));
            measure_time += t.elapsed();
            defects.push(tests.each_ref().map(|(_, f)| invariance_defect(&chain, f).unwrap()));
            lengths.push(curve.arclength(&cat));
        }
        CatRun {
            curve,
            masses,
            defects,
            lengths,
            measure_time,
        }
    })
}

#[test]
fn acceptance_1_zero_potential_ball_masses() {
    let _guard = heavy();
    let run = cat_run();
    let target = std::f64::consts::PI / 9.0;
    let [b1, b2] = [run.masses[N - 1][0], run.masses[N - 1][1]];
    let secs = run.measure_time.as_secs_f64();
    let ok = (b1 - target).abs() <= 0.02 && (b2 - target).abs() <= 0.02 && secs <= 180.0;
    report(
        "1",
        ok,
        format!("μ12(B1) = {b1:.5}, μ12(B2) = {b2:.5}, target π/9 = {target:.5} ± 0.02, time {secs:.1}s ≤ 180s"),
    );
}

/// `(μ_12(B_i), oracle(B_i))` for the sine potential.
fn sine_masses() -> &'static ([f64; 2], [f64; 2]) {
    static MASSES: OnceLock<([f64; 2], [f64; 2])> = OnceLock::new();
    MASSES.get_or_init(|| {
        let cat = CatMap::arnold();
        let g = sine_potential();
        let balls = balls();
        let chain = PushforwardChain::from_curve(&cat, &cat_run().curve, &g, N).unwrap();
        let mu = measure_of_balls(&cat, &cesaro(&chain), &balls);
        let oracle = periodic_gibbs_estimate(&cat, &g, 14).unwrap();
        let o = measure_of_balls(&cat, &oracle, &balls);
        ([mu[0], mu[1]], [o[0], o[1]])
    })
}

#[test]
fn acceptance_2a_sine_potential_matches_periodic_orbits() {
    let _guard = heavy();
    let (mu, oracle) = sine_masses();
    let gaps = [(mu[0] - oracle[0]).abs(), (mu[1] - oracle[1]).abs()];
    report(
        "2a",
        gaps.iter().all(|g| *g < 0.02),
        format!(
            "μ12 = ({:.5}, {:.5}), period-14 oracle = ({:.5}, {:.5}), gaps ({:.5}, {:.5}) < 0.02",
            mu[0], mu[1], oracle[0], oracle[1], gaps[0], gaps[1]
        ),
    );
}

#[test]
fn acceptance_2b_sine_potential_separates_the_balls() {
    let _guard = heavy();
    let (mu, oracle) = sine_masses();
    let gap = (mu[0] - mu[1]).abs();
    report(
        "2b",
        gap >= 0.01,
        format!(
            "|μ12(B1) − μ12(B2)| = {gap:.5}, required ≥ 0.01; period-14 oracle gap {:.5}",
            (oracle[0] - oracle[1]).abs()
        ),
    );
}

#[test]
fn acceptance_3_srb_weights_are_arclength() {
    let _guard = heavy();
    let cat = CatMap::arnold();
    let curve = &cat_run().curve;
    let phi = Potential::unstable_expansion();

    let elements = curve.seed_elements(&cat);
    let total = unstable_gibbs::reduce::sum(&elements);
    let weights = density_weights(&cat, curve, &phi).unwrap();
    let weight_err = weights
        .atoms()
        .par_iter()
        .zip(elements.par_iter())
        .map(|(a, e)| (a.weight - e / total).abs())
        .reduce(|| 0.0, f64::max);

    let weighted = PushforwardChain::from_curve(&cat, curve, &phi, N).unwrap();
    let plain = PushforwardChain::volume(&cat, curve, N).unwrap();
    let mut chain_err = 0.0f64;
    let mut points_equal = true;
    for k in 0..N {
        let (a, b) = (weighted.element_view(k), plain.element_view(k));
        let (err, same) = (0..a.block_count())
            .into_par_iter()
            .map(|blk| {
                let mut left = Vec::new();
                let mut right = Vec::new();
                a.visit_block(blk, &mut |p, w| left.push((*p, w)));
                b.visit_block(blk, &mut |p, w| right.push((*p, w)));
                let same = left.len() == right.len() && left.iter().zip(&right).all(|(x, y)| x.0 == y.0);
                let err = left
                    .iter()
                    .zip(&right)
                    .map(|(x, y)| (x.1 - y.1).abs())
                    .fold(0.0, f64::max);
                (err, same)
            })
            .reduce(|| (0.0, true), |x, y| (x.0.max(y.0), x.1 && y.1));
        chain_err = chain_err.max(err);
        points_equal &= same;
    }
    report(
        "3",
        weight_err <= 1e-12 && chain_err <= 1e-12 && points_equal,
        format!(
            "max weight error {weight_err:.2e}, max chain atom error {chain_err:.2e} over {N} elements, atoms coincide: {points_equal}"
        ),
    );
}

#[test]
fn acceptance_4_pressure_identities() {
    let _guard = heavy();
    let cat = CatMap::arnold();
    let policy = RefinementPolicy::with_spacing(SPACING);
    let curve = &cat_run().curve;
    let h = entropy();
    let c = 0.37;
    let mut checks = Vec::new();

    let srb = pressure_curve_growth(&cat, curve, &Potential::unstable_expansion(), N, &policy).unwrap();
    checks.push((
        srb.extrapolated.abs() <= 1e-6,
        format!("CAT P(Φ) = {:.2e}", srb.extrapolated),
    ));

    let sol = SolenoidMap::new(0.1, SolenoidVariant::Corrected).unwrap();
    let x = sol.settle(&SolenoidPoint::new(0.0, 0.0, 0.0), 30);
    let sol_seed = UnstableCurve::seed_segment(&sol, &x, 1.0, &policy).unwrap();
    let sol_srb = pressure_curve_growth(&sol, &sol_seed, &Potential::unstable_expansion(), N, &policy).unwrap();
    checks.push((
        sol_srb.extrapolated.abs() <= 1e-6,
        format!("solenoid P(Φ) = {:.2e}", sol_srb.extrapolated),
    ));

    let zero = pressure_curve_growth(&cat, curve, &Potential::zero(), N, &policy).unwrap();
    checks.push((
        (zero.extrapolated - h).abs() <= 1e-2,
        format!("curve-growth P(0) = {:.6}", zero.extrapolated),
    ));

    let exact = (710645f64).ln() / 14.0;
    let periodic = periodic_pressure(&cat, &Potential::zero(), 14).unwrap();
    checks.push((
        (periodic - exact).abs() <= 1e-5,
        format!("periodic P(0) = {periodic:.7} vs {exact:.7}"),
    ));

    let separated = pressure_separated_sets(&cat, &Potential::zero(), 8, 0.125, 1.0 / 1024.0).unwrap();
    checks.push((
        (separated.extrapolated - h).abs() <= 8e-2,
        format!("separated-set P(0) = {:.5}", separated.extrapolated),
    ));

    let g = sine_potential();
    let gc = g.clone().shifted(c);
    let a = pressure_curve_growth(&cat, curve, &g, N, &policy).unwrap();
    let b = pressure_curve_growth(&cat, curve, &gc, N, &policy).unwrap();
    let curve_shift = a
        .entries
        .iter()
        .zip(&b.entries)
        .map(|(x, y)| (y.1 - x.1 - c).abs())
        .fold((b.extrapolated - a.extrapolated - c).abs(), f64::max);
    let a = pressure_separated_sets(&cat, &g, 8, 0.125, 1.0 / 1024.0).unwrap();
    let b = pressure_separated_sets(&cat, &gc, 8, 0.125, 1.0 / 1024.0).unwrap();
    let separated_shift = a
        .entries
        .iter()
        .zip(&b.entries)
        .map(|(x, y)| (y.1 - x.1 - c).abs())
        .fold((b.extrapolated - a.extrapolated - c).abs(), f64::max);
    let periodic_shift =
        (periodic_pressure(&cat, &gc, 14).unwrap() - periodic_pressure(&cat, &g, 14).unwrap() - c).abs();
    let shift = curve_shift.max(separated_shift).max(periodic_shift);
    checks.push((
        shift <= 1e-9,
        format!("shift law errors {curve_shift:.1e}/{separated_shift:.1e}/{periodic_shift:.1e}"),
    ));

    let ok = checks.iter().all(|c| c.0);
    let detail: Vec<String> = checks.into_iter().map(|c| c.1).collect();
    report("4", ok, detail.join("; "));
}

#[test]
fn acceptance_5_invariance_defect_bound() {
    let _guard = heavy();
    let run = cat_run();
    let names = test_functions().map(|(name, _)| name);
    let mut worst = (f64::NEG_INFINITY, 0, "");
    for (i, row) in run.defects.iter().enumerate() {
        let n = i + 1;
        for (d, name) in row.iter().zip(names) {
            let slack = d - 2.0 / n as f64;
            if slack > worst.0 {
                worst = (slack, n, name);
            }
        }
    }
    report(
        "5",
        worst.0 <= 1e-10,
        format!("worst defect − 2/n = {:.4} at n = {} for {}", worst.0, worst.1, worst.2),
    );
}

#[test]
fn acceptance_6_curve_growth() {
    let _guard = heavy();
    let cat = CatMap::arnold();
    let run = cat_run();
    let h = entropy();
    let cat_err = (3..=N)
        .map(|n| ((run.lengths[n].ln() - run.lengths[0].ln()) / n as f64 - h).abs())
        .fold(0.0, f64::max);

    let policy = RefinementPolicy::with_spacing(SPACING);
    let sol = SolenoidMap::new(0.1, SolenoidVariant::Corrected).unwrap();
    let x = sol.settle(&SolenoidPoint::new(0.0, 0.0, 0.0), 30);
    let seed = UnstableCurve::seed_segment(&sol, &x, 1.0, &policy).unwrap();
    let sol_rate = entropy_volume_growth(&sol, &seed, 8, &policy)
        .unwrap()
        .value_at(8)
        .unwrap();

    let mut runner = TestRunner::new(ProptestConfig {
        cases: 10,
        ..ProptestConfig::default()
    });
    let strategy = (0.0f64..1.0, 0.0f64..1.0, 0.05f64..1.0, 0.004f64..0.05);
    let spacing = runner.run(&strategy, |(x, y, delta, spacing)| {
        let policy = RefinementPolicy::with_spacing(spacing);
        let mut curve = UnstableCurve::seed_segment(&cat, &TorusPoint::new(x, y), delta, &policy).unwrap();
        for _ in 0..6 {
            curve = curve.advance(&cat, &policy).unwrap();
            let gap = curve
                .samples()
                .windows(2)
                .map(|w| cat.distance(&w[0].point, &w[1].point))
                .fold(0.0, f64::max);
            proptest::prop_assert!(gap <= spacing, "gap {} > {}", gap, spacing);
        }
        Ok(())
    });

    report(
        "6",
        cat_err <= 1e-6 && (sol_rate - 2f64.ln()).abs() <= 5e-2 && spacing.is_ok(),
        format!(
            "CAT max |rate − h| = {cat_err:.2e} for 3 ≤ n ≤ {N}; solenoid rate at n = 8: {sol_rate:.5}; spacing property over 10 seeds: {}",
            if spacing.is_ok() { "holds".to_string() } else { format!("{spacing:?}") }
        ),
    );
}

#[test]
fn acceptance_7_oracle_exactness() {
    let _guard = heavy();
    let cat = CatMap::arnold();
    let mut failures = Vec::new();
    let mut total = 0usize;
    for n in 1..=14u32 {
        let set = enumerate_fixed_points(&cat, n).unwrap();
        let a = cat.matrix_power(n);
        let expected = (a[0][0] + a[1][1] - 2) as usize;
        let distinct: HashSet<_> = set.numerators().iter().collect();
        let den = set.denominator();
        let periodic = set
            .numerators()
            .par_iter()
            .all(|&p| (0..n).fold(p, |q, _| cat.apply_rational(q, den)) == p);
        if set.count() != expected || distinct.len() != expected || !periodic {
            failures.push(n);
        }
        total += set.count();
    }
    report(
        "7",
        failures.is_empty(),
        format!("{total} points for n = 1..=14 checked exactly; failing periods {failures:?}"),
    );
}

#[test]
fn acceptance_8_arbitrary_seed() {
    let _guard = heavy();
    let cat = CatMap::arnold();
    let policy = RefinementPolicy::with_spacing(SPACING);
    let flat = [TorusPoint::new(0.0, 0.5), TorusPoint::new(0.5, 0.5)];
    let seed = UnstableCurve::seed_arbitrary(&cat, &flat, &policy).unwrap();
    let chain = PushforwardChain::build(&cat, &seed, &Potential::zero(), N, &policy).unwrap();
    let flat_mass = measure_of_balls(&cat, &cesaro(&chain), &balls()[..1])[0];
    drop(chain);
    let unstable_mass = cat_run().masses[N - 1][0];
    let change = (flat_mass - unstable_mass).abs();
    report(
        "8",
        change < 0.03,
        format!("μ12(B1): horizontal seed {flat_mass:.5}, unstable seed {unstable_mass:.5}, change {change:.5} < 0.03"),
    );
}

type Artifact = (String, Vec<u8>);

#[test]
fn acceptance_9_determinism_across_threads() {
    let _guard = heavy();
    let dir = tempfile::tempdir().unwrap();
    let mut outputs: Vec<(usize, Vec<Artifact>)> = Vec::new();
    for threads in [1usize, 4, 8] {
        let config = ExperimentConfig {
            threads: Some(threads),
            ..ExperimentConfig::default()
        };
        let out = dir.path().join(format!("t{threads}"));
        let mut files = Vec::new();
        for command in [Command::Measure, Command::Pressure, Command::Oracle] {
            for path in run_config(command, &config, Some(&out)).unwrap() {
                let name = path.file_name().unwrap().to_string_lossy().into_owned();
                files.push((name, fs::read(&path).unwrap()));
            }
        }
        outputs.push((threads, files));
    }
    let reference = &outputs[0].1;
    let mismatches: Vec<String> = outputs[1..]
        .iter()
        .flat_map(|(t, files)| {
            files
                .iter()
                .zip(reference)
                .filter(|(a, b)| a != b)
                .map(move |(a, _)| format!("{} at {t} threads", a.0))
        })
        .collect();
    let names: Vec<&str> = reference.iter().map(|f| f.0.as_str()).collect();
    report(
        "9",
        mismatches.is_empty() && outputs.iter().all(|o| o.1.len() == reference.len()),
        format!("files {names:?} compared across 1/4/8 threads; mismatches {mismatches:?}"),
    );
}
