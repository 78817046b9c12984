//! Pressure of a potential on the CAT map from every estimator.

use unstable_gibbs::pressure::{
    entropy_volume_growth, pressure_curve_growth, pressure_periodic_orbits, pressure_separated_sets,
};
use unstable_gibbs::{CatMap, FourierMode, Potential, PressureSeries, RefinementPolicy, TorusPoint, UnstableCurve};

fn show(series: &PressureSeries) {
    println!("{}: extrapolated {:.8}", series.method, series.extrapolated);
    for (n, v) in &series.entries {
        println!("  n = {n:2}  {v:.8}");
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cat = CatMap::arnold();
    let policy = RefinementPolicy::with_spacing(1e-2);
    let seed = UnstableCurve::seed_segment(&cat, &TorusPoint::new(0.0, 0.0), 1.0, &policy)?;
    let g = Potential::fourier(vec![FourierMode::sin_x(0.1)]);
    println!("h = {:.8}", cat.entropy());
    show(&pressure_curve_growth(&cat, &seed, &g, 10, &policy)?);
    show(&pressure_separated_sets(&cat, &g, 6, 0.125, 1.0 / 512.0)?);
    show(&pressure_periodic_orbits(&cat, &g, 12)?);
    show(&entropy_volume_growth(&cat, &seed, 10, &policy)?);
    Ok(())
}
