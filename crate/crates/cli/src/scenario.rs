use std::f64::consts::TAU;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use cyclic_pursuit::diagnostics::{
    assess, convex_trap_check, fit_oracle, lambda_min_check, rate_identity_check,
    torus_homotopy_class, ConvergenceOptions, TrapRegion,
};
use cyclic_pursuit::engine::{
    run, EventKind, IntegratorConfig, PursuitLoop, RunFailure, TrajectoryRecord,
};
use cyclic_pursuit::spaces::{Dumbbell, Euclidean, FlatQuotient, QuotientKind, SphereLike};
use cyclic_pursuit::{Manifold, ManifoldPoint, Tolerances};

use crate::config::{
    locate, parse_toml, ConfigError, Expectation, InitialConfig, ScenarioConfig, SpaceConfig,
    TrapConfig,
};

pub const OUTPUT_DIR_ENV: &str = "PURSUIT_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "pursuit-out";

#[derive(Debug)]
pub enum BuiltSpace {
    Euclidean(Euclidean<f64>),
    Flat(FlatQuotient<f64>),
    Sphere(SphereLike<f64>),
    Dumbbell(Dumbbell<f64>),
}

impl BuiltSpace {
    pub fn manifold(&self) -> &dyn Manifold<f64> {
        match self {
            BuiltSpace::Euclidean(s) => s,
            BuiltSpace::Flat(s) => s,
            BuiltSpace::Sphere(s) => s,
            BuiltSpace::Dumbbell(s) => s,
        }
    }

    fn torus(&self) -> Option<&FlatQuotient<f64>> {
        match self {
            BuiltSpace::Flat(s) if matches!(s.kind(), QuotientKind::Torus { .. }) => Some(s),
            _ => None,
        }
    }
}

/// A validated scenario, ready to run.
#[derive(Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub space: BuiltSpace,
    pub initial: Vec<ManifoldPoint<f64>>,
    pub integrator: IntegratorConfig<f64>,
}

struct Checker<'a> {
    text: Option<&'a str>,
}

impl Checker<'_> {
    fn at(&self, table: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            message: message.into(),
            line: self.text.and_then(|t| locate(t, table, key)),
        }
    }

    fn positive(&self, table: &str, key: &str, v: f64) -> Result<(), ConfigError> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(self.at(
                table,
                key,
                format!("{table}.{key} must be positive, got {v}"),
            ))
        }
    }
}

/// Parses and validates scenario text.
pub fn load(text: &str) -> Result<Scenario, ConfigError> {
    let config = parse_toml(text)?;
    build(config, Some(text))
}

/// Validates a config; `text` (when available) is used for line numbers.
pub fn build(config: ScenarioConfig, text: Option<&str>) -> Result<Scenario, ConfigError> {
    let ck = Checker { text };
    if config.name.is_empty()
        || !config
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(ck.at(
            "",
            "name",
            "name must be non-empty and use only [A-Za-z0-9_-]",
        ));
    }
    let integ = &config.integrator;
    ck.positive("integrator", "dt_max", integ.dt_max)?;
    ck.positive("integrator", "t_max", integ.t_max)?;
    if !(integ.step_safety > 0.0 && integ.step_safety <= 1.0) {
        return Err(ck.at(
            "integrator",
            "step_safety",
            format!(
                "integrator.step_safety must lie in (0, 1], got {}",
                integ.step_safety
            ),
        ));
    }
    if integ.record_every == 0 {
        return Err(ck.at(
            "integrator",
            "record_every",
            "integrator.record_every must be at least 1",
        ));
    }
    if let Some(eps) = integ.capture_eps {
        ck.positive("integrator", "capture_eps", eps)?;
    }
    let diag = &config.diagnostics;
    if diag.grid == 0 {
        return Err(ck.at("diagnostics", "grid", "diagnostics.grid must be at least 1"));
    }
    ck.positive("diagnostics", "conv_rel", diag.conv_rel)?;
    ck.positive("diagnostics", "length_rel", diag.length_rel)?;
    ck.positive("diagnostics", "collapse_time_tol", diag.collapse_time_tol)?;

    let space = build_space(&config, &ck)?;
    let m = space.manifold();
    if let Some(oracle) = &diag.oracle {
        m.closed_geodesic(&oracle.selector())
            .map_err(|e| ck.at("diagnostics", "oracle", format!("oracle: {e}")))?;
    }
    let initial = build_initial(&config, &space, &ck)?;

    let inj = m.capabilities().injectivity_radius;
    let n = initial.len();
    for i in 0..n {
        let j = (i + 1) % n;
        // Other geometry failures (e.g. shooting) surface from the run as
        // solver errors.
        let d = match m.dist(&initial[i], &initial[j]) {
            Ok(d) => d,
            Err(cyclic_pursuit::GeometryError::OutOfInjectivity { distance, .. }) => {
                distance.max(inj)
            }
            Err(_) => continue,
        };
        if !(d < inj) {
            let key = match config.initial {
                InitialConfig::Points { .. } => "points",
                _ => "kind",
            };
            return Err(ck.at(
                "initial",
                key,
                format!(
                    "bugs {i} and {j} start {d} apart, which is not below the injectivity \
                     radius {inj}; consecutive bugs must start closer than inj(M) so that \
                     each chaser has a unique shortest geodesic to its prey"
                ),
            ));
        }
    }
    let integrator = IntegratorConfig {
        dt_max: integ.dt_max,
        capture_eps: integ.capture_eps,
        step_safety: integ.step_safety,
        t_max: integ.t_max,
        record_every: integ.record_every,
    };
    integrator
        .validate(inj)
        .map_err(|e| ck.at("integrator", "capture_eps", e.to_string()))?;
    if let Some(TrapConfig::Ball { center, radius }) = &diag.trap {
        m.point(center)
            .map_err(|e| ck.at("diagnostics", "trap", format!("trap center: {e}")))?;
        if !(*radius > 0.0 && *radius < 0.5 * inj) {
            return Err(ck.at(
                "diagnostics",
                "trap",
                format!("trap ball radius must lie in (0, inj / 2 = {})", 0.5 * inj),
            ));
        }
    }
    if let Some(TrapConfig::Tube { radius }) = &diag.trap {
        ck.positive("diagnostics", "trap", *radius)?;
        if diag.oracle.is_none() {
            return Err(ck.at(
                "diagnostics",
                "trap",
                "a tube trap needs diagnostics.oracle",
            ));
        }
    }
    Ok(Scenario {
        config,
        space,
        initial,
        integrator,
    })
}

fn tolerances(config: &ScenarioConfig) -> Tolerances<f64> {
    let mut tol = Tolerances::default();
    if let Some(t) = &config.tolerances {
        if let Some(v) = t.point_eq {
            tol.point_eq = v;
        }
        if let Some(v) = t.shooting_residual {
            tol.shooting_residual = v;
        }
        if let Some(v) = t.fd_step {
            tol.fd_step = v;
        }
        if let Some(v) = t.newton_max_iter {
            tol.newton_max_iter = v;
        }
        if let Some(v) = t.shooting_restarts {
            tol.shooting_restarts = v;
        }
    }
    tol
}

fn build_space(config: &ScenarioConfig, ck: &Checker) -> Result<BuiltSpace, ConfigError> {
    let bad = |e: cyclic_pursuit::GeometryError| ck.at("space", "type", format!("space: {e}"));
    let tol = tolerances(config);
    Ok(match &config.space {
        SpaceConfig::Euclidean { dim } => BuiltSpace::Euclidean(Euclidean::new(*dim).map_err(bad)?),
        SpaceConfig::Torus { periods } => BuiltSpace::Flat(
            FlatQuotient::torus(periods)
                .map_err(bad)?
                .with_tolerances(tol),
        ),
        SpaceConfig::Mobius { length, half_width } => BuiltSpace::Flat(
            FlatQuotient::mobius(*length, *half_width)
                .map_err(bad)?
                .with_tolerances(tol),
        ),
        SpaceConfig::Sphere { radius } => BuiltSpace::Sphere(
            SphereLike::sphere(*radius)
                .map_err(bad)?
                .with_tolerances(tol),
        ),
        SpaceConfig::Rp2 { radius } => BuiltSpace::Sphere(
            SphereLike::projective_plane(*radius)
                .map_err(bad)?
                .with_tolerances(tol),
        ),
        SpaceConfig::Dumbbell => BuiltSpace::Dumbbell(Dumbbell::dumbbell().with_tolerances(tol)),
    })
}

fn build_initial(
    config: &ScenarioConfig,
    space: &BuiltSpace,
    ck: &Checker,
) -> Result<Vec<ManifoldPoint<f64>>, ConfigError> {
    let m = space.manifold();
    let bad = |key: &str, msg: String| ck.at("initial", key, msg);
    let point = |c: &[f64]| {
        m.point(c)
            .map_err(|e| bad("kind", format!("initial point: {e}")))
    };
    let need_n = |n: usize| {
        if n < 2 {
            Err(bad("n", format!("initial.n must be at least 2, got {n}")))
        } else {
            Ok(())
        }
    };
    let pts = match &config.initial {
        InitialConfig::Points { points } => {
            if points.len() < 2 {
                return Err(bad(
                    "points",
                    "at least two initial points are needed".into(),
                ));
            }
            points
                .iter()
                .map(|c| point(c))
                .collect::<Result<Vec<_>, _>>()?
        }
        InitialConfig::RegularNgon { n, radius, center } => {
            need_n(*n)?;
            ck.positive("initial", "radius", *radius)?;
            let dim = m.coord_dim();
            let BuiltSpace::Euclidean(_) = space else {
                return Err(bad("kind", "regular_ngon needs a euclidean space".into()));
            };
            if dim < 2 {
                return Err(bad("kind", "regular_ngon needs dim >= 2".into()));
            }
            let center = if center.is_empty() {
                vec![0.0; dim]
            } else {
                center.clone()
            };
            if center.len() != dim {
                return Err(bad("center", format!("center must have {dim} coordinates")));
            }
            (0..*n)
                .map(|k| {
                    let a = TAU * k as f64 / *n as f64;
                    let mut c = center.clone();
                    c[0] += radius * a.cos();
                    c[1] += radius * a.sin();
                    point(&c)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        InitialConfig::RandomCube { n, side, seed } => {
            need_n(*n)?;
            ck.positive("initial", "side", *side)?;
            let BuiltSpace::Euclidean(e) = space else {
                return Err(bad("kind", "random_cube needs a euclidean space".into()));
            };
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..*n)
                .map(|_| {
                    let c: Vec<f64> = (0..e.dim()).map(|_| side * rng.gen::<f64>()).collect();
                    point(&c)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        InitialConfig::GeodesicPerturbed { n, noise, seed } => {
            need_n(*n)?;
            if !(*noise >= 0.0 && noise.is_finite()) {
                return Err(bad(
                    "noise",
                    format!("initial.noise must be non-negative, got {noise}"),
                ));
            }
            let Some(oracle_cfg) = &config.diagnostics.oracle else {
                return Err(bad(
                    "kind",
                    "geodesic_perturbed needs diagnostics.oracle".into(),
                ));
            };
            let oracle = m
                .closed_geodesic(&oracle_cfg.selector())
                .map_err(|e| ck.at("diagnostics", "oracle", format!("oracle: {e}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let geo = |e: cyclic_pursuit::GeometryError| bad("noise", format!("perturbation: {e}"));
            (0..*n)
                .map(|k| {
                    let s = (k as f64 + rng.gen_range(-0.25..0.25)) / *n as f64;
                    let offset = if *noise > 0.0 {
                        rng.gen_range(-*noise..=*noise)
                    } else {
                        0.0
                    };
                    let normal = oracle.normal_at(m, s).map_err(geo)?;
                    m.exp(&normal.scaled(offset)).map_err(geo)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        InitialConfig::RandomCap {
            n,
            angle,
            seed,
            center,
        } => {
            need_n(*n)?;
            let BuiltSpace::Sphere(_) = space else {
                return Err(bad("kind", "random_cap needs a sphere or rp2 space".into()));
            };
            if !(*angle > 0.0 && *angle < std::f64::consts::FRAC_PI_2) {
                return Err(bad(
                    "angle",
                    format!("initial.angle must lie in (0, pi/2), got {angle}"),
                ));
            }
            let c = point(center)?;
            let frame = m.orthonormal_frame(&c);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let cos_max = angle.cos();
            (0..*n)
                .map(|_| {
                    let z = 1.0 - rng.gen::<f64>() * (1.0 - cos_max);
                    let phi = TAU * rng.gen::<f64>();
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let x: Vec<f64> = (0..3)
                        .map(|i| {
                            z * c.coords()[i]
                                + rho * (phi.cos() * frame[0][i] + phi.sin() * frame[1][i])
                        })
                        .collect();
                    point(&x)
                })
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    Ok(pts)
}

#[derive(Clone, Debug, Serialize)]
pub struct EventRecord {
    pub t: f64,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bugs: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateSummary {
    pub max_residual: f64,
    pub threshold: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaMinSummary {
    pub lambda_min: f64,
    pub first_below: Option<f64>,
    pub collapsed: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrapSummary {
    pub entered_at: Option<f64>,
    pub first_violation: Option<f64>,
    pub max_excursion: f64,
    pub trapped: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HomotopySummary {
    pub initial: Vec<i64>,
    pub final_class: Vec<i64>,
    pub preserved: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub verdict: String,
    pub expected: Expectation,
    pub expectation_met: bool,
    pub exit_code: i32,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collapse_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conv_dist: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_dist_to_image: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_length: Option<f64>,
    pub theta_max_initial: f64,
    pub theta_max_final: f64,
    pub initial_length: f64,
    pub final_length: f64,
    pub t_final: f64,
    pub steps: usize,
    pub rate_identity: RateSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<LambdaMinSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trap: Option<TrapSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homotopy: Option<HomotopySummary>,
    /// Failed checks that make the expectation fail.
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub events: Vec<EventRecord>,
}

#[derive(Debug, Serialize)]
struct Versions {
    pursuit_cli: &'static str,
    cyclic_pursuit: &'static str,
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    config_hash: String,
    config: &'a ScenarioConfig,
    versions: Versions,
    wall_time_s: f64,
    steps: usize,
    rejected_steps: usize,
    samples: usize,
    capture_eps: f64,
    outputs: Outputs,
}

#[derive(Clone, Debug, Serialize)]
pub struct Outputs {
    pub trajectory: PathBuf,
    pub report: PathBuf,
    pub metadata: PathBuf,
}

/// Result of a scenario run; the files are already on disk.
#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: Report,
    pub record: Option<TrajectoryRecord<f64>>,
    pub outputs: Outputs,
    pub wall_time_s: f64,
}

/// Output directory: the environment override, then the config, then the
/// default.
pub fn output_dir(config: &ScenarioConfig) -> PathBuf {
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
        return PathBuf::from(dir);
    }
    PathBuf::from(config.output.dir.as_deref().unwrap_or(DEFAULT_OUTPUT_DIR))
}

fn outputs(config: &ScenarioConfig, dir: &Path) -> Outputs {
    let name = &config.name;
    let pick = |given: &Option<String>, suffix: &str| {
        dir.join(given.clone().unwrap_or_else(|| format!("{name}.{suffix}")))
    };
    Outputs {
        trajectory: pick(&config.output.trajectory, "trajectory.csv"),
        report: pick(&config.output.report, "report.json"),
        metadata: pick(&config.output.metadata, "metadata.json"),
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Trajectory CSV: a `# config_hash:` line, a header and one row per bug and
/// recorded sample.
pub fn trajectory_csv(
    hash: &str,
    coord_dim: usize,
    record: &TrajectoryRecord<f64>,
) -> Result<Vec<u8>, csv::Error> {
    let mut buf = format!("# config_hash: {hash}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header = vec!["t".to_string(), "bug_index".into(), "live_group".into()];
        header.extend((0..coord_dim).map(|k| format!("coord_{k}")));
        header.extend(["l_total".to_string(), "theta_max".into()]);
        w.write_record(&header)?;
        for s in &record.samples {
            let t = s.state.t().to_string();
            let l = s.length.to_string();
            let th = s.theta_max.to_string();
            for (i, p) in s.state.positions().iter().enumerate() {
                let mut row = vec![t.clone(), i.to_string(), s.state.leader_of(i).to_string()];
                row.extend(p.coords().iter().map(|c| c.to_string()));
                row.push(l.clone());
                row.push(th.clone());
                w.write_record(&row)?;
            }
        }
        w.flush()?;
    }
    Ok(buf)
}

fn events(record: &TrajectoryRecord<f64>) -> Vec<EventRecord> {
    record
        .events
        .iter()
        .map(|e| match &e.kind {
            EventKind::Merge { bugs } => EventRecord {
                t: e.t,
                kind: "merge",
                bugs: Some(bugs.clone()),
                message: None,
            },
            EventKind::Collapse => EventRecord {
                t: e.t,
                kind: "collapse",
                bugs: None,
                message: None,
            },
            EventKind::SolverFailure { message } => EventRecord {
                t: e.t,
                kind: "solver_failure",
                bugs: None,
                message: Some(message.clone()),
            },
        })
        .collect()
}

fn homotopy(
    space: &BuiltSpace,
    record: &TrajectoryRecord<f64>,
) -> Option<Result<HomotopySummary, String>> {
    let torus = space.torus()?;
    let class = |s: &cyclic_pursuit::engine::Sample<f64>| {
        PursuitLoop::from_state(torus, &s.state)
            .and_then(|lp| torus_homotopy_class(torus, &lp))
            .map_err(|e| e.to_string())
    };
    let run = || -> Result<HomotopySummary, String> {
        let initial = class(&record.samples[0])?;
        let mut preserved = true;
        let mut last = initial.clone();
        for s in record.samples.iter().skip(1) {
            if s.state.is_collapsed() {
                break;
            }
            last = class(s)?;
            preserved &= last == initial;
        }
        Ok(HomotopySummary {
            initial,
            final_class: last,
            preserved,
        })
    };
    Some(run())
}

/// Runs a validated scenario and writes its trajectory, report and metadata.
pub fn run_scenario(scenario: &Scenario) -> std::io::Result<Outcome> {
    run_scenario_in(scenario, &output_dir(&scenario.config))
}

pub fn run_scenario_in(scenario: &Scenario, dir: &Path) -> std::io::Result<Outcome> {
    let config = &scenario.config;
    let hash = config.hash();
    let m = scenario.space.manifold();
    let started = Instant::now();
    let result = run(m, scenario.initial.clone(), &scenario.integrator);
    let (record, error) = match result {
        Ok(r) => (Some(r), None),
        Err(failure) => {
            let RunFailure { error, partial } = *failure;
            (partial, Some(error.to_string()))
        }
    };

    let mut failures = Vec::new();
    let mut report = Report {
        scenario: config.name.clone(),
        verdict: "solver_error".into(),
        expected: config.expect,
        expectation_met: false,
        exit_code: 2,
        config_hash: hash.clone(),
        collapse_time: None,
        conv_dist: None,
        length_gap: None,
        sup_dist_to_image: None,
        best_c: None,
        oracle_length: None,
        theta_max_initial: 0.0,
        theta_max_final: 0.0,
        initial_length: 0.0,
        final_length: 0.0,
        t_final: 0.0,
        steps: 0,
        rate_identity: RateSummary {
            max_residual: 0.0,
            threshold: 0.0,
            holds: false,
        },
        lambda_min: None,
        trap: None,
        homotopy: None,
        failures: Vec::new(),
        error: error.clone(),
        events: Vec::new(),
    };

    if let Some(rec) = &record {
        report.collapse_time = rec.collapse_time;
        report.theta_max_initial = rec.samples[0].theta_max;
        report.theta_max_final = rec.last().theta_max;
        report.initial_length = rec.initial_length;
        report.final_length = rec.last().length;
        report.t_final = rec.final_state.t();
        report.steps = rec.steps;
        let rate = rate_identity_check(rec);
        report.rate_identity = RateSummary {
            max_residual: rate.max_residual,
            threshold: rate.threshold,
            holds: rate.holds,
        };
        report.events = events(rec);
    }

    if let (Some(rec), None) = (&record, &error) {
        let diagnostics = (|| -> Result<(), String> {
            let diag = &config.diagnostics;
            let selector = diag.oracle.as_ref().map(|o| o.selector());
            let opts = ConvergenceOptions {
                grid: diag.grid,
                conv_rel: diag.conv_rel,
                length_rel: diag.length_rel,
                ..Default::default()
            };
            let a = assess(m, rec, selector.as_ref(), &opts).map_err(|e| e.to_string())?;
            report.verdict = a.verdict.name().into();
            if let Some(r) = &a.report {
                report.conv_dist = Some(r.conv_dist);
                report.length_gap = Some(r.length_gap);
                report.sup_dist_to_image = Some(r.sup_dist_to_image);
                report.best_c = Some(r.best_c);
                report.oracle_length = Some(r.oracle.length());
            }
            if !report.rate_identity.holds {
                failures.push(format!(
                    "rate identity residual {:e} exceeds {:e}",
                    report.rate_identity.max_residual, report.rate_identity.threshold
                ));
            }
            if let Some(check) = lambda_min_check(m, rec) {
                if !check.holds {
                    failures.push(
                        "loop shorter than the shortest closed geodesic did not collapse".into(),
                    );
                }
                report.lambda_min = Some(LambdaMinSummary {
                    lambda_min: check.lambda_min,
                    first_below: check.first_below,
                    collapsed: check.collapsed,
                    holds: check.holds,
                });
            }
            if let Some(h) = homotopy(&scenario.space, rec) {
                let h = h?;
                if !h.preserved {
                    failures.push("homotopy class changed during the run".into());
                }
                report.homotopy = Some(h);
            }
            if let Some(trap) = &diag.trap {
                let region = match trap {
                    TrapConfig::Ball { center, radius } => TrapRegion::Ball {
                        center: m.point(center).map_err(|e| e.to_string())?,
                        radius: *radius,
                    },
                    TrapConfig::Tube { radius } => {
                        let selector = selector.as_ref().expect("validated");
                        // The tube surrounds the family member the run settles on.
                        let lp = PursuitLoop::from_state(m, &rec.final_state)
                            .map_err(|e| e.to_string())?;
                        TrapRegion::Tube {
                            oracle: fit_oracle(m, &lp, selector).map_err(|e| e.to_string())?,
                            radius: *radius,
                        }
                    }
                };
                let t = convex_trap_check(m, rec, &region).map_err(|e| e.to_string())?;
                if !t.trapped() {
                    failures.push(match (t.entered_at, t.first_violation) {
                        (None, _) => "bugs never entered the trap region".into(),
                        (_, Some(v)) => format!("bugs left the trap region at t = {v}"),
                        _ => unreachable!(),
                    });
                }
                report.trap = Some(TrapSummary {
                    entered_at: t.entered_at,
                    first_violation: t.first_violation,
                    max_excursion: t.max_excursion,
                    trapped: t.trapped(),
                });
            }
            if let (Some(expected), Some(tc)) = (diag.collapse_time, rec.collapse_time) {
                if (tc - expected).abs() > diag.collapse_time_tol {
                    failures.push(format!(
                        "collapse at t = {tc}, expected {expected} +/- {}",
                        diag.collapse_time_tol
                    ));
                }
            }
            Ok(())
        })();
        match diagnostics {
            Ok(()) => {
                let verdict_ok = match (report.verdict.as_str(), config.expect) {
                    ("undecided", _) => false,
                    (_, Expectation::Any) => true,
                    ("collapsed", Expectation::Collapsed)
                    | ("converged", Expectation::Converged) => true,
                    _ => false,
                };
                if !verdict_ok && report.verdict != "undecided" {
                    failures.push(format!(
                        "verdict {} does not match the expectation {:?}",
                        report.verdict, config.expect
                    ));
                }
                report.expectation_met = verdict_ok && failures.is_empty();
                report.exit_code = if report.expectation_met { 0 } else { 1 };
            }
            Err(e) => {
                report.verdict = "solver_error".into();
                report.error = Some(format!("diagnostics failed: {e}"));
            }
        }
    }
    report.failures = failures;
    let wall_time_s = started.elapsed().as_secs_f64();

    let outs = outputs(config, dir);
    if let Some(rec) = &record {
        let csv = trajectory_csv(&hash, m.coord_dim(), rec).map_err(std::io::Error::other)?;
        write_atomic(&outs.trajectory, &csv)?;
    }
    write_atomic(&outs.report, &serde_json::to_vec_pretty(&report)?)?;
    let meta = Metadata {
        config_hash: hash,
        config,
        versions: Versions {
            pursuit_cli: env!("CARGO_PKG_VERSION"),
            cyclic_pursuit: cyclic_pursuit::VERSION,
        },
        wall_time_s,
        steps: record.as_ref().map_or(0, |r| r.steps),
        rejected_steps: record.as_ref().map_or(0, |r| r.rejected_steps),
        samples: record.as_ref().map_or(0, |r| r.samples.len()),
        capture_eps: record.as_ref().map_or(0.0, |r| r.capture_eps),
        outputs: outs.clone(),
    };
    write_atomic(&outs.metadata, &serde_json::to_vec_pretty(&meta)?)?;
    Ok(Outcome {
        exit_code: report.exit_code,
        report,
        record,
        outputs: outs,
        wall_time_s,
    })
}
