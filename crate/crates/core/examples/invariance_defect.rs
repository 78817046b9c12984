//! Weak-star invariance of the averaged measures tested against Fourier modes.

use unstable_gibbs::{
    cesaro, integrate, invariance_defect, CatMap, FourierMode, Potential, PushforwardChain, RefinementPolicy,
    TorusPoint, UnstableCurve,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cat = CatMap::arnold();
    let policy = RefinementPolicy::with_spacing(1e-2);
    let g = Potential::fourier(vec![FourierMode::sin_x(0.1)]);
    let tests = [FourierMode::cos(1, 0), FourierMode::sin(0, 1), FourierMode::cos(1, 1)];
    let mut curve = UnstableCurve::seed_segment(&cat, &TorusPoint::new(0.0, 0.0), 1.0, &policy)?;
    for n in 1..=9 {
        curve = curve.advance(&cat, &policy)?;
        let chain = PushforwardChain::from_curve(&cat, &curve, &g, n)?;
        let mu = cesaro(&chain);
        print!("n = {n}  bound 2/n = {:.4}", 2.0 / n as f64);
        for mode in &tests {
            let f = Potential::fourier(vec![*mode]);
            print!(
                "  ∫F = {:+.4} defect = {:.4}",
                integrate(&mu, &f)?,
                invariance_defect(&chain, &f)?
            );
        }
        println!();
    }
    Ok(())
}
