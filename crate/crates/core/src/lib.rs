//! Gibbs measures of hyperbolic attractors, approximated by pushing forward
//! weighted volume on local unstable curves.

pub mod cli;
pub mod config;
pub mod curves;
pub mod gibbs;
pub mod oracle;
pub mod potential;
pub mod pressure;
pub mod reduce;
pub mod systems;

pub use config::ExperimentConfig;
pub use curves::{CurveError, RefinementPolicy, SeedCurve, UnstableCurve};
pub use gibbs::{
    cesaro, density_weights, integrate, invariance_defect, measure_of_ball, Atom, AtomicMeasure, BallSpec, GibbsError,
    PushforwardChain, WeightedAtoms,
};
pub use potential::{FourierMode, Potential};
pub use pressure::{PressureMethod, PressureSeries};
pub use systems::{CatMap, HyperbolicMap, SolenoidMap, SolenoidPoint, SolenoidVariant, SystemError, TorusPoint};
