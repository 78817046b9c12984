//! Experiment runner behind the `unstable-gibbs` binary.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, SeedConfig, SystemConfig, VariantConfig};
use crate::curves::{CurveError, UnstableCurve};
use crate::gibbs::{cesaro, integrate, invariance_defect, measure_of_balls, BallSpec, GibbsError, PushforwardChain};
use crate::oracle::{self, OracleError};
use crate::potential::Potential;
use crate::pressure::{self, PressureError};
use crate::systems::{
    CatMap, HyperbolicMap, PhasePoint, SolenoidMap, SolenoidPoint, SolenoidVariant, SystemError, TorusPoint,
};

pub const THREADS_ENV: &str = "UG_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Measure,
    Pressure,
    Oracle,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("point budget exceeded: `refinement.max_points` = {limit}")]
    PointBudget { limit: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical failure: {0}")]
    Numerics(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::PointBudget { .. } => 3,
            Self::Unsupported(_) => 4,
            Self::Numerics(_) | Self::Io(_) => 1,
        }
    }

    fn invalid(field: &str, message: impl ToString) -> Self {
        Self::Config(ConfigError::invalid(field, message.to_string()))
    }
}

impl From<SystemError> for RunError {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::NotUnimodular { .. } | SystemError::NotHyperbolic { .. } => Self::invalid("system.matrix", e),
            SystemError::BadContraction(_) | SystemError::ImageNotInterior(_) => Self::invalid("system.contraction", e),
            SystemError::OffAttractor(_) => Self::invalid("seed.point", e),
            other => Self::Numerics(other.to_string()),
        }
    }
}

impl From<CurveError> for RunError {
    fn from(e: CurveError) -> Self {
        match e {
            CurveError::PointBudgetExceeded { limit } => Self::PointBudget { limit },
            CurveError::BadDelta(_) => Self::invalid("seed.delta", e),
            CurveError::TooFewWaypoints(_)
            | CurveError::DegenerateSegment { .. }
            | CurveError::TangentToStable { .. } => Self::invalid("seed.points", e),
            CurveError::BadPolicy(_) => Self::invalid("refinement", e),
            CurveError::System(s) => s.into(),
            other => Self::Numerics(other.to_string()),
        }
    }
}

impl From<GibbsError> for RunError {
    fn from(e: GibbsError) -> Self {
        match e {
            GibbsError::Curve(c) => c.into(),
            GibbsError::System(s) => s.into(),
            GibbsError::BadRadius(_) => Self::invalid("balls", e),
            other => Self::Numerics(other.to_string()),
        }
    }
}

impl From<OracleError> for RunError {
    fn from(e: OracleError) -> Self {
        Self::invalid("oracle.period", e)
    }
}

impl From<PressureError> for RunError {
    fn from(e: PressureError) -> Self {
        match e {
            PressureError::BadEpsilon(_) => Self::invalid("pressure.epsilon", e),
            PressureError::BadPitch(_) | PressureError::GridTooCoarse { .. } => Self::invalid("pressure.grid_pitch", e),
            PressureError::BadHorizon { .. } => Self::invalid("pressure.separated_n_max", e),
            PressureError::Oracle(_) => Self::invalid("pressure.periodic_n_max", e),
            PressureError::Curve(c) => c.into(),
            PressureError::Gibbs(g) => g.into(),
            PressureError::System(s) => s.into(),
        }
    }
}

/// Thread count from the config, else from `UG_THREADS`, else rayon's default.
pub fn thread_count(config: &ExperimentConfig) -> Result<Option<usize>, RunError> {
    if config.threads.is_some() {
        return Ok(config.threads);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(RunError::invalid(
                THREADS_ENV,
                format!("expected a positive integer, got {v:?}"),
            )),
        },
        Err(_) => Ok(None),
    }
}

/// Loads `config_path`, runs `command` and returns the files written.
pub fn run(command: Command, config_path: &Path, out: Option<&Path>) -> Result<Vec<PathBuf>, RunError> {
    let config = ExperimentConfig::load(config_path)?;
    run_config(command, &config, out)
}

pub fn run_config(command: Command, config: &ExperimentConfig, out: Option<&Path>) -> Result<Vec<PathBuf>, RunError> {
    config.validate()?;
    let out_dir = out
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(config)? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| RunError::Numerics(e.to_string()))?;
    fs::create_dir_all(&out_dir)?;
    pool.install(|| match command {
        Command::Measure => run_measure(config, &out_dir),
        Command::Pressure => run_pressure(config, &out_dir),
        Command::Oracle => run_oracle(config, &out_dir),
    })
}

/// A configured system together with its seed curve and balls.
pub struct Setup<S: HyperbolicMap> {
    pub system: S,
    pub seed: UnstableCurve<S::Point, S::Vector>,
    pub balls: Vec<BallSpec<S::Point>>,
}

fn torus_point(c: &[f64]) -> TorusPoint {
    TorusPoint::new(c[0], c[1])
}

fn solenoid_point(c: &[f64]) -> SolenoidPoint {
    SolenoidPoint::new(c[0], c[1], c[2])
}

fn build_setup<S: HyperbolicMap>(
    system: S,
    config: &ExperimentConfig,
    point: impl Fn(&[f64]) -> S::Point,
    place_seed: impl Fn(&S, S::Point) -> S::Point,
) -> Result<Setup<S>, RunError> {
    let policy = config.refinement.policy();
    let seed = match &config.seed {
        SeedConfig::Segment { point: p, delta } => {
            let origin = vec![0.0; S::Point::DIM];
            let x = place_seed(&system, point(p.as_deref().unwrap_or(&origin)));
            UnstableCurve::seed_segment(&system, &x, *delta, &policy)?
        }
        SeedConfig::Waypoints { points } => {
            let pts: Vec<S::Point> = points.iter().map(|p| point(p)).collect();
            UnstableCurve::seed_arbitrary(&system, &pts, &policy)?
        }
    };
    let balls = config
        .balls()
        .iter()
        .map(|b| BallSpec::new(point(&b.center), b.radius))
        .collect::<Result<_, _>>()?;
    Ok(Setup { system, seed, balls })
}

pub fn cat_setup(config: &ExperimentConfig) -> Result<Setup<CatMap>, RunError> {
    let SystemConfig::Cat { matrix: [a, b, c, d] } = config.system else {
        return Err(RunError::Unsupported("expected a cat system".into()));
    };
    build_setup(CatMap::new(a, b, c, d)?, config, torus_point, |_, x| x)
}

pub fn solenoid_setup(config: &ExperimentConfig) -> Result<Setup<SolenoidMap>, RunError> {
    let SystemConfig::Solenoid {
        contraction,
        variant,
        settle,
    } = config.system
    else {
        return Err(RunError::Unsupported("expected a solenoid system".into()));
    };
    let variant = match variant {
        VariantConfig::Corrected => SolenoidVariant::Corrected,
        VariantConfig::Verbatim => SolenoidVariant::Verbatim,
    };
    build_setup(
        SolenoidMap::new(contraction, variant)?,
        config,
        solenoid_point,
        |s, x| s.settle(&x, settle),
    )
}

fn create(dir: &Path, name: &str) -> io::Result<(PathBuf, BufWriter<fs::File>)> {
    let path = dir.join(name);
    let file = fs::File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

/// Ball masses of `μ_n` for every `n = 1..=n_max`.
pub struct MeasureTable {
    /// `values[n - 1][ball]`
    pub values: Vec<Vec<f64>>,
    /// `(∫F dμ_n, |∫F dμ_n − ∫F∘f dμ_n|)` per `n` and test function.
    pub observables: Vec<Vec<(f64, f64)>>,
}

pub fn measure_table<S: HyperbolicMap>(
    setup: &Setup<S>,
    potential: &Potential,
    config: &ExperimentConfig,
) -> Result<MeasureTable, RunError> {
    let policy = config.refinement.policy();
    let tests: Vec<Potential> = config
        .test_functions
        .iter()
        .map(|m| Potential::fourier(vec![*m]))
        .collect();
    let mut curve = setup.seed.clone();
    let mut values = Vec::with_capacity(config.n_max);
    let mut observables = Vec::with_capacity(config.n_max);
    for n in 1..=config.n_max {
        curve = curve.advance(&setup.system, &policy)?;
        let chain = PushforwardChain::from_curve(&setup.system, &curve, potential, n)?;
        let mu = cesaro(&chain);
        values.push(measure_of_balls(&setup.system, &mu, &setup.balls));
        let row = tests
            .iter()
            .map(|f| Ok((integrate(&mu, f)?, invariance_defect(&chain, f)?)))
            .collect::<Result<Vec<_>, GibbsError>>()?;
        observables.push(row);
    }
    Ok(MeasureTable { values, observables })
}

pub fn run_measure(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let potential = config.potential.build();
    let (table, reference) = match config.system {
        SystemConfig::Cat { .. } => {
            let setup = cat_setup(config)?;
            let reference = setup.balls.first().map(|b| std::f64::consts::PI * b.radius * b.radius);
            (measure_table(&setup, &potential, config)?, reference)
        }
        SystemConfig::Solenoid { .. } => (measure_table(&solenoid_setup(config)?, &potential, config)?, None),
    };

    let mut written = Vec::new();
    let (path, mut csv) = create(out_dir, "measure.csv")?;
    writeln!(csv, "n,ball_id,value")?;
    for (i, row) in table.values.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            writeln!(csv, "{},{},{v}", i + 1, b + 1)?;
        }
    }
    csv.flush()?;
    written.push(path);

    if !config.test_functions.is_empty() {
        let (path, mut csv) = create(out_dir, "observables.csv")?;
        writeln!(csv, "n,function_id,integral,invariance_defect")?;
        for (i, row) in table.observables.iter().enumerate() {
            for (f, (integral, defect)) in row.iter().enumerate() {
                writeln!(csv, "{},{},{integral},{defect}", i + 1, f + 1)?;
            }
        }
        csv.flush()?;
        written.push(path);
    }

    let path = out_dir.join("measure.svg");
    fs::write(&path, bar_chart_svg(&table.values, reference))?;
    written.push(path);
    Ok(written)
}

pub fn run_pressure(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let potential = config.potential.build();
    let policy = config.refinement.policy();
    let n_max = config.n_max.max(2);
    let mut series = Vec::new();
    match config.system {
        SystemConfig::Cat { .. } => {
            let setup = cat_setup(config)?;
            series.push(pressure::pressure_curve_growth(
                &setup.system,
                &setup.seed,
                &potential,
                n_max,
                &policy,
            )?);
            if config.potential.is_zero() {
                series.push(pressure::entropy_volume_growth(
                    &setup.system,
                    &setup.seed,
                    n_max,
                    &policy,
                )?);
            }
            let p = &config.pressure;
            series.push(pressure::pressure_separated_sets(
                &setup.system,
                &potential,
                p.separated_n_max,
                p.epsilon,
                p.grid_pitch,
            )?);
            series.push(pressure::pressure_periodic_orbits(
                &setup.system,
                &potential,
                p.periodic_n_max,
            )?);
        }
        SystemConfig::Solenoid { .. } => {
            let setup = solenoid_setup(config)?;
            series.push(pressure::pressure_curve_growth(
                &setup.system,
                &setup.seed,
                &potential,
                n_max,
                &policy,
            )?);
            if config.potential.is_zero() {
                series.push(pressure::entropy_volume_growth(
                    &setup.system,
                    &setup.seed,
                    n_max,
                    &policy,
                )?);
            }
        }
    }
    let (path, mut csv) = create(out_dir, "pressure.csv")?;
    writeln!(csv, "method,n,value,extrapolated")?;
    for s in &series {
        s.write_rows(&mut csv)?;
    }
    csv.flush()?;
    Ok(vec![path])
}

pub fn run_oracle(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    if matches!(config.system, SystemConfig::Solenoid { .. }) {
        return Err(RunError::Unsupported("periodic-orbit oracle needs a cat system".into()));
    }
    let setup = cat_setup(config)?;
    let potential = config.potential.build();
    let period = config.oracle.period;
    let count = oracle::enumerate_fixed_points(&setup.system, period)?.count();
    let mu = oracle::periodic_gibbs_estimate(&setup.system, &potential, period)?;
    let pressure = oracle::periodic_pressure(&setup.system, &potential, period)?;
    let values = measure_of_balls(&setup.system, &mu, &setup.balls);

    let (path, mut csv) = create(out_dir, "oracle.csv")?;
    writeln!(csv, "period,count,ball_id,value,pressure")?;
    if values.is_empty() {
        writeln!(csv, "{period},{count},0,1,{pressure}")?;
    }
    for (b, v) in values.iter().enumerate() {
        writeln!(csv, "{period},{count},{},{v},{pressure}", b + 1)?;
    }
    csv.flush()?;
    Ok(vec![path])
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Grouped bar chart of `values[n - 1][ball]` with an optional dashed
/// reference line.
pub fn bar_chart_svg(values: &[Vec<f64>], reference: Option<f64>) -> String {
    let (width, height) = (720.0, 420.0);
    let (left, right, top, bottom) = (60.0, 20.0, 30.0, 50.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let peak = values
        .iter()
        .flatten()
        .copied()
        .chain(reference)
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let y_max = if peak > 0.0 { peak * 1.1 } else { 1.0 };
    let y = |v: f64| top + plot_h * (1.0 - v.clamp(0.0, y_max) / y_max);
    let groups = values.len().max(1) as f64;
    let per_group = values.iter().map(Vec::len).max().unwrap_or(0).max(1) as f64;
    let group_w = plot_w / groups;
    let bar_w = group_w * 0.8 / per_group;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g stroke="black" stroke-width="1"><line x1="{left}" y1="{top}" x2="{left}" y2="{}"/><line x1="{left}" y1="{}" x2="{}" y2="{}"/></g>"#,
        top + plot_h,
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    for k in 0..=4 {
        let v = y_max * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.3}</text>"#,
            left - 6.0,
            y(v) + 4.0
        );
    }
    for (i, row) in values.iter().enumerate() {
        let x0 = left + group_w * i as f64 + group_w * 0.1;
        for (b, v) in row.iter().enumerate() {
            let top_y = y(*v);
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{top_y:.2}" width="{bar_w:.2}" height="{:.2}" fill="{}"/>"#,
                x0 + bar_w * b as f64,
                top + plot_h - top_y,
                PALETTE[b % PALETTE.len()]
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            left + group_w * (i as f64 + 0.5),
            top + plot_h + 16.0,
            i + 1
        );
    }
    if let Some(r) = reference {
        let _ = writeln!(
            s,
            r#"<line x1="{left}" y1="{:.2}" x2="{}" y2="{:.2}" stroke="black" stroke-dasharray="6 4"/>"#,
            y(r),
            left + plot_w,
            y(r)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">n</text>"#,
        left + plot_w / 2.0,
        height - 12.0
    );
    for b in 0..per_group as usize {
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="10" width="10" height="10" fill="{}"/><text x="{}" y="19" font-family="sans-serif" font-size="11">B{}</text>"#,
            left + 60.0 * b as f64,
            PALETTE[b % PALETTE.len()],
            left + 60.0 * b as f64 + 14.0,
            b + 1
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(
            RunError::from(CurveError::PointBudgetExceeded { limit: 5 }).exit_code(),
            3
        );
        assert_eq!(RunError::from(CurveError::BadDelta(-1.0)).exit_code(), 2);
        assert_eq!(RunError::Unsupported("x".into()).exit_code(), 4);
        assert_eq!(RunError::from(PressureError::BadEpsilon(0.3)).exit_code(), 2);
        assert_eq!(RunError::from(SystemError::NotHyperbolic { trace: 2 }).exit_code(), 2);
    }

    #[test]
    fn config_threads_win_over_environment() {
        let config = ExperimentConfig {
            threads: Some(3),
            ..Default::default()
        };
        assert_eq!(thread_count(&config).unwrap(), Some(3));
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = bar_chart_svg(&[vec![0.3, 0.5], vec![0.35, 0.36]], Some(0.349));
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 1 + 4 + 2);
        assert!(svg.contains("stroke-dasharray"));
        assert!(!bar_chart_svg(&[], None).contains("NaN"));
    }
}
