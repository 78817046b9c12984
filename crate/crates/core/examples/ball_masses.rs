//! Ball masses of the averaged measures for the CAT map, with and without a
//! potential, next to the periodic-orbit estimate.

use std::time::Instant;

use unstable_gibbs::oracle::periodic_gibbs_estimate;
use unstable_gibbs::{
    cesaro, measure_of_ball, BallSpec, CatMap, FourierMode, Potential, PushforwardChain, RefinementPolicy, TorusPoint,
    UnstableCurve,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_max: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(12);
    let cat = CatMap::arnold();
    let policy = RefinementPolicy::with_spacing(1e-2);
    let balls = [
        BallSpec::new(TorusPoint::new(0.0, 0.0), 1.0 / 3.0)?,
        BallSpec::new(TorusPoint::new(0.5, 0.5), 1.0 / 3.0)?,
    ];
    let potentials = [
        ("G = 0", Potential::zero()),
        ("G = sin(2πx)/10", Potential::fourier(vec![FourierMode::sin_x(0.1)])),
    ];
    for (label, g) in &potentials {
        println!("{label}");
        let started = Instant::now();
        let mut curve = UnstableCurve::seed_segment(&cat, &TorusPoint::new(0.0, 0.0), 1.0, &policy)?;
        for n in 1..=n_max {
            curve = curve.advance(&cat, &policy)?;
            let chain = PushforwardChain::from_curve(&cat, &curve, g, n)?;
            let mu = cesaro(&chain);
            let [b1, b2] = [0, 1].map(|i| measure_of_ball(&cat, &mu, &balls[i]));
            println!(
                "  n = {n:2}  samples = {:9}  μ(B1) = {b1:.5}  μ(B2) = {b2:.5}",
                curve.len()
            );
        }
        let oracle = periodic_gibbs_estimate(&cat, g, 14)?;
        let [o1, o2] = [0, 1].map(|i| measure_of_ball(&cat, &oracle, &balls[i]));
        println!("  period 14 oracle: μ(B1) = {o1:.5}  μ(B2) = {o2:.5}");
        println!("  elapsed {:.1?}", started.elapsed());
    }
    println!("π/9 = {:.5}", std::f64::consts::PI / 9.0);
    Ok(())
}
