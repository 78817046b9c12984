//! SRB measure and pressure on the solid-torus solenoid.

use unstable_gibbs::pressure::{entropy_volume_growth, pressure_curve_growth};
use unstable_gibbs::{
    cesaro, measure_of_ball, BallSpec, Potential, PushforwardChain, RefinementPolicy, SolenoidMap, SolenoidPoint,
    SolenoidVariant, UnstableCurve,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 8;
    let sol = SolenoidMap::new(0.1, SolenoidVariant::Corrected)?;
    let policy = RefinementPolicy::with_spacing(1e-2);
    let start = sol.settle(&SolenoidPoint::new(0.0, 0.0, 0.0), 30);
    let seed = UnstableCurve::seed_segment(&sol, &start, 1.0, &policy)?;

    let chain = PushforwardChain::build(&sol, &seed, &Potential::unstable_expansion(), n, &policy)?;
    let mu = cesaro(&chain);
    for center in [SolenoidPoint::new(0.0, 0.5, 0.0), SolenoidPoint::new(0.5, 0.0, 0.5)] {
        let ball = BallSpec::new(center, 1.0 / 3.0)?;
        println!("μ_{n}(B({center:?}, 1/3)) = {:.5}", measure_of_ball(&sol, &mu, &ball));
    }
    let srb = pressure_curve_growth(&sol, &seed, &Potential::unstable_expansion(), n, &policy)?;
    println!("P(Φ) ≈ {:.2e}", srb.extrapolated);
    let growth = entropy_volume_growth(&sol, &seed, n, &policy)?;
    println!("entropy ≈ {:.5} (log 2 = {:.5})", growth.extrapolated, 2f64.ln());
    Ok(())
}
