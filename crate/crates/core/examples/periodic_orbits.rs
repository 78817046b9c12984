//! Exact enumeration of CAT map fixed points of `f^n` and the resulting
//! equilibrium-state estimate.

use unstable_gibbs::oracle::{enumerate_fixed_points, periodic_gibbs_estimate, periodic_pressure};
use unstable_gibbs::{measure_of_ball, BallSpec, CatMap, FourierMode, Potential, TorusPoint};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cat = CatMap::arnold();
    for n in 1..=10 {
        let set = enumerate_fixed_points(&cat, n)?;
        println!(
            "n = {n:2}  count = {:6}  denominator = {}",
            set.count(),
            set.denominator()
        );
    }
    let first = enumerate_fixed_points(&cat, 3)?;
    println!(
        "period-3 points: {:?}",
        (0..first.count()).map(|i| first.point(i)).collect::<Vec<_>>()
    );

    let g = Potential::fourier(vec![FourierMode::sin_x(0.1)]);
    let mu = periodic_gibbs_estimate(&cat, &g, 12)?;
    let ball = BallSpec::new(TorusPoint::new(0.0, 0.0), 1.0 / 3.0)?;
    println!("μ(B(0, 1/3)) = {:.5}", measure_of_ball(&cat, &mu, &ball));
    println!("pressure at n = 12: {:.8}", periodic_pressure(&cat, &g, 12)?);
    Ok(())
}
