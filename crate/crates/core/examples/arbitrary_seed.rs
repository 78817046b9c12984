//! Averaged measures grown from a polyline that is not an unstable curve.

use unstable_gibbs::{
    cesaro, measure_of_ball, BallSpec, CatMap, Potential, PushforwardChain, RefinementPolicy, TorusPoint, UnstableCurve,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cat = CatMap::arnold();
    let policy = RefinementPolicy::with_spacing(1e-2);
    let ball = BallSpec::new(TorusPoint::new(0.0, 0.0), 1.0 / 3.0)?;
    let seeds = [
        ("horizontal", vec![TorusPoint::new(0.0, 0.5), TorusPoint::new(0.5, 0.5)]),
        (
            "zigzag",
            vec![
                TorusPoint::new(0.1, 0.1),
                TorusPoint::new(0.4, 0.3),
                TorusPoint::new(0.2, 0.8),
            ],
        ),
    ];
    for (label, points) in &seeds {
        let seed = UnstableCurve::seed_arbitrary(&cat, points, &policy)?;
        for n in [4, 8, 10] {
            let chain = PushforwardChain::build(&cat, &seed, &Potential::zero(), n, &policy)?;
            println!(
                "{label:10}  n = {n:2}  μ(B) = {:.5}",
                measure_of_ball(&cat, &cesaro(&chain), &ball)
            );
        }
    }
    println!("π/9 = {:.5}", std::f64::consts::PI / 9.0);
    Ok(())
}
