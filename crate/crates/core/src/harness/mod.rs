//! End-to-end experiments: generate an exact solution, perturb it, measure the
//! defect, run the requested constructions and verify each of them.
//!
//! ```json
//! {"carrier":"lattice1","base":{"linear":[2.0],"constant":5.0},
//!  "noise":{"type":"seeded_uniform","amplitude":0.1,"seed":7},
//!  "methods":["mean","dyadic"],"folner_k":512}
//! ```
//! With `components = d` the pipeline runs on `ℂᵈ`-valued functions, one
//! component per scalar run with noise seed `seed + i`; vector quantities use
//! the max norm.

pub mod io;

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::carrier::file::CarrierFile;
use crate::carrier::{bundled, Carrier, MeanCapability};
use crate::defect::{jensen_defect, DefectReport};
use crate::error::{JensenError, Result};
use crate::funcspace::file::ComplexLit;
use crate::funcspace::{BoundedFn, Noise, NoiseKind, Oracle};
use crate::stabilize::{
    jensen_approximant, Method, StabilizationResult, StabilizationSummary, StabilizeOptions,
};
use crate::verify::{
    agreement_of, verify_solution, AgreementReport, VerificationReport, VerifyOptions,
};
use crate::{DEFAULT_CONVERGENCE_TOL, DEFAULT_DYADIC_N, DEFAULT_TOLERANCE};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "JENSEN_STAB_WORKERS";

/// Sizes the global rayon pool; `None` reads [`WORKERS_ENV`] and otherwise keeps rayon's default.
pub fn configure_workers(workers: Option<usize>) -> Result<()> {
    let n = match workers {
        Some(n) => Some(n),
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                JensenError::Incompatible(format!(
                    "{WORKERS_ENV} must be a positive integer, got {v:?}"
                ))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(JensenError::Incompatible(format!(
                "{WORKERS_ENV} must be positive"
            )));
        }
        // a pool that is already set up (tests, repeated calls) is kept
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// A bundled carrier name or an inline carrier document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CarrierSpec {
    Bundled(String),
    Inline(CarrierFile),
}

impl CarrierSpec {
    pub fn resolve(&self) -> Result<Carrier> {
        match self {
            CarrierSpec::Bundled(name) => bundled::by_name(name).ok_or_else(|| {
                JensenError::Incompatible(format!(
                    "unknown bundled carrier {name:?}; expected one of {}",
                    bundled::NAMES.join(", ")
                ))
            }),
            CarrierSpec::Inline(file) => file.clone().into_carrier(),
        }
    }
}

/// `x ↦ a·x + c`; only constants on finite carriers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseSpec {
    #[serde(default)]
    pub linear: Vec<ComplexLit>,
    pub constant: ComplexLit,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Mean, Method::Dyadic]
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_convergence_tol() -> f64 {
    DEFAULT_CONVERGENCE_TOL
}

fn default_dyadic_n() -> u32 {
    DEFAULT_DYADIC_N
}

fn default_power_levels() -> Vec<u32> {
    vec![1, 2, 3]
}

fn default_components() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub carrier: CarrierSpec,
    pub base: BaseSpec,
    #[serde(default)]
    pub noise: Option<Noise>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub folner_k: Option<i64>,
    #[serde(default = "default_dyadic_n")]
    pub dyadic_n: u32,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_convergence_tol")]
    pub convergence_tol: f64,
    #[serde(default = "default_power_levels")]
    pub power_levels: Vec<u32>,
    #[serde(default = "default_components")]
    pub components: usize,
}

impl ExperimentConfig {
    pub fn new(carrier: CarrierSpec, base: BaseSpec) -> Self {
        ExperimentConfig {
            name: None,
            carrier,
            base,
            noise: None,
            methods: default_methods(),
            folner_k: None,
            dyadic_n: DEFAULT_DYADIC_N,
            tolerance: DEFAULT_TOLERANCE,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            power_levels: default_power_levels(),
            components: 1,
        }
    }

    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|source| JensenError::Json {
            context: "experiment config".into(),
            source,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.components == 0 {
            return Err(JensenError::Incompatible(
                "components must be at least 1".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(JensenError::Incompatible("no methods requested".into()));
        }
        if !(self.tolerance >= 0.0 && self.convergence_tol >= 0.0) {
            return Err(JensenError::Incompatible(
                "tolerances must be nonnegative".into(),
            ));
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        Ok(())
    }

    /// Noise of component `i`: the configured noise with seed `seed + i`.
    pub fn component_noise(&self, i: usize) -> Option<Noise> {
        self.noise.clone().map(|mut n| {
            n.seed = n.seed.wrapping_add(i as u64);
            n
        })
    }

    /// The scalar config whose run equals component `i` of this one.
    pub fn component(&self, i: usize) -> Self {
        ExperimentConfig {
            noise: self.component_noise(i),
            components: 1,
            ..self.clone()
        }
    }

    pub fn stabilize_options(&self, delta: f64) -> StabilizeOptions {
        StabilizeOptions {
            folner_k: self.folner_k,
            dyadic_n: self.dyadic_n,
            convergence_tol: self.convergence_tol,
            delta: Some(delta),
        }
    }

    pub fn verify_options(&self, delta: f64) -> VerifyOptions {
        VerifyOptions {
            tolerance: self.tolerance,
            power_levels: self.power_levels.clone(),
            delta: Some(delta),
        }
    }
}

/// An exact Jensen solution: a constant on a finite carrier, `a·x + c` on ℤᵈ.
pub fn generate_solution(carrier: Arc<Carrier>, spec: &BaseSpec) -> Result<BoundedFn> {
    let constant: Complex64 = spec.constant.into();
    let linear: Vec<Complex64> = spec.linear.iter().copied().map(Into::into).collect();
    let f = match carrier.as_ref() {
        Carrier::Finite(_) => {
            if linear.iter().any(|a| *a != Complex64::new(0.0, 0.0)) {
                return Err(JensenError::Incompatible(
                    "a finite carrier only has constant Jensen solutions; drop the linear part"
                        .into(),
                ));
            }
            BoundedFn::constant(carrier, constant)?
        }
        Carrier::Lattice(l) => {
            let linear = if linear.is_empty() {
                vec![Complex64::new(0.0, 0.0); l.dim()]
            } else {
                linear
            };
            if linear.len() != l.dim() {
                return Err(JensenError::Incompatible(format!(
                    "linear part has {} coefficients for a {}-dimensional lattice",
                    linear.len(),
                    l.dim()
                )));
            }
            BoundedFn::oracle(carrier, Oracle::affine(linear, constant))?
        }
    };
    Ok(f)
}

/// `f + noise`, with `|noise| ≤ ε` pointwise.
pub fn perturb(f: &BoundedFn, noise: &Noise) -> Result<BoundedFn> {
    noise.validate()?;
    let carrier = Arc::clone(f.carrier());
    if let Some(o) = f.as_oracle() {
        if o.noise.is_some() {
            return Err(JensenError::Incompatible(
                "function already carries noise".into(),
            ));
        }
        let mut o = o.clone();
        o.noise = Some(noise.clone());
        return BoundedFn::oracle(carrier, o);
    }
    match carrier.as_ref() {
        Carrier::Finite(_) => {
            if noise.kind == NoiseKind::Parity {
                return Err(JensenError::Incompatible(
                    "parity noise needs lattice coordinates".into(),
                ));
            }
            BoundedFn::tabulate(Arc::clone(&carrier), |x| {
                let i = x.index().expect("finite element") as i64;
                Ok(f.evaluate(x)? + noise.sample(&[i]))
            })
        }
        Carrier::Lattice(_) => Err(JensenError::Capability(
            "only oracle functions can be perturbed on a lattice".into(),
        )),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub kind: String,
    pub message: String,
}

impl StageError {
    fn new(stage: &str, e: &JensenError) -> Self {
        StageError {
            stage: stage.into(),
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

/// Cross-check of the measured δ against `4ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticCheck {
    pub bound: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub summary: Option<StabilizationSummary>,
    pub verification: Option<VerificationReport>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub index: usize,
    pub noise: Option<Noise>,
    pub defect: Option<DefectReport>,
    pub analytic_check: Option<AnalyticCheck>,
    pub methods: Vec<MethodReport>,
    pub agreement: Option<AgreementReport>,
    pub errors: Vec<StageError>,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub components: Vec<ComponentReport>,
    /// Max-norm defect over the components.
    pub delta: Option<f64>,
    /// Largest stability supremum over components and methods.
    pub stability_sup: Option<f64>,
    pub errors: Vec<StageError>,
    pub pass: bool,
    pub wall_times: Vec<StageTime>,
}

impl ExperimentReport {
    /// The same report with every timing set to zero, for byte comparisons.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        for t in &mut r.wall_times {
            t.seconds = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> String {
        io::to_json(self)
    }
}

struct Timer(Vec<StageTime>);

impl Timer {
    fn time<T>(&mut self, stage: String, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push(StageTime {
            stage,
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }
}

/// Solutions built during a run, kept for callers that want the functions themselves.
pub struct ExperimentRun {
    pub report: ExperimentReport,
    /// Perturbed input of each component.
    pub inputs: Vec<Option<BoundedFn>>,
    pub solutions: Vec<Vec<StabilizationResult>>,
}

fn run_component(
    config: &ExperimentConfig,
    carrier: &Arc<Carrier>,
    i: usize,
    timer: &mut Timer,
) -> (ComponentReport, Option<BoundedFn>, Vec<StabilizationResult>) {
    let tag = |stage: &str| {
        if config.components > 1 {
            format!("{stage}[{i}]")
        } else {
            stage.to_owned()
        }
    };
    let noise = config.component_noise(i);
    let mut report = ComponentReport {
        index: i,
        noise: noise.clone(),
        defect: None,
        analytic_check: None,
        methods: Vec::new(),
        agreement: None,
        errors: Vec::new(),
        pass: false,
    };
    let mut solutions = Vec::new();

    let base = match timer.time(tag("generate"), || {
        generate_solution(Arc::clone(carrier), &config.base)
    }) {
        Ok(f) => f,
        Err(e) => {
            report.errors.push(StageError::new("generate", &e));
            return (report, None, solutions);
        }
    };
    let f = match &noise {
        Some(n) => match timer.time(tag("perturb"), || perturb(&base, n)) {
            Ok(f) => f,
            Err(e) => {
                report.errors.push(StageError::new("perturb", &e));
                return (report, None, solutions);
            }
        },
        None => base,
    };
    let defect = match timer.time(tag("defect"), || jensen_defect(&f)) {
        Ok(d) => d,
        Err(e) => {
            report.errors.push(StageError::new("defect", &e));
            return (report, Some(f), solutions);
        }
    };
    let delta = defect.delta;
    let amplitude = noise.as_ref().map_or(0.0, |n| n.amplitude);
    report.analytic_check = Some(AnalyticCheck {
        bound: 4.0 * amplitude,
        delta,
        tolerance: config.tolerance,
        holds: delta <= 4.0 * amplitude + config.tolerance,
    });
    report.defect = Some(defect);

    let sopts = config.stabilize_options(delta);
    let vopts = config.verify_options(delta);
    let mut mean_unavailable = None;
    for &method in &config.methods {
        let stage = format!("stabilize:{}", method.name());
        let result = match timer.time(tag(&stage), || jensen_approximant(&f, method, &sopts)) {
            Ok(r) => r,
            Err(e) => {
                if method == Method::Mean && matches!(e, JensenError::Capability(_)) {
                    mean_unavailable = Some(e.to_string());
                }
                report.errors.push(StageError::new(&stage, &e));
                report.methods.push(MethodReport {
                    method,
                    summary: None,
                    verification: None,
                    pass: false,
                });
                continue;
            }
        };
        let stage = format!("verify:{}", method.name());
        let verification = match timer.time(tag(&stage), || verify_solution(&f, &result, &vopts)) {
            Ok(v) => Some(v),
            Err(e) => {
                report.errors.push(StageError::new(&stage, &e));
                None
            }
        };
        report.methods.push(MethodReport {
            method,
            summary: Some(result.summary()),
            pass: verification.as_ref().is_some_and(|v| v.pass),
            verification,
        });
        solutions.push(result);
    }

    let find = |m: Method| solutions.iter().find(|r| r.method == m);
    let other = find(Method::Dyadic).or_else(|| find(Method::DyadicFull));
    report.agreement = match (find(Method::Mean), other) {
        (Some(mean), Some(dyadic)) => {
            match timer.time(tag("agreement"), || {
                agreement_of(mean, dyadic, config.tolerance)
            }) {
                Ok(a) => Some(a),
                Err(e) => {
                    report.errors.push(StageError::new("agreement", &e));
                    None
                }
            }
        }
        (None, Some(_))
            if mean_unavailable.is_some() || carrier.mean_capability() == MeanCapability::None =>
        {
            Some(AgreementReport::skipped(
                mean_unavailable.unwrap_or_else(|| "carrier has no invariant mean".into()),
                config.tolerance,
            ))
        }
        _ => None,
    };
    report.pass = report.errors.is_empty()
        && report.methods.iter().all(|m| m.pass)
        && report.agreement.as_ref().is_none_or(|a| a.holds);
    (report, Some(f), solutions)
}

/// Runs the full pipeline. Stage failures are recorded in the report, never raised.
pub fn run_experiment(config: &ExperimentConfig) -> ExperimentReport {
    run_experiment_with_outputs(config).report
}

pub fn run_experiment_with_outputs(config: &ExperimentConfig) -> ExperimentRun {
    let mut timer = Timer(Vec::new());
    let mut report = ExperimentReport {
        config: config.clone(),
        components: Vec::new(),
        delta: None,
        stability_sup: None,
        errors: Vec::new(),
        pass: false,
        wall_times: Vec::new(),
    };
    let mut inputs = Vec::new();
    let mut solutions = Vec::new();
    let carrier = timer.time("carrier".into(), || {
        config.validate()?;
        config.carrier.resolve().map(Arc::new)
    });
    match carrier {
        Err(e) => report.errors.push(StageError::new("config", &e)),
        Ok(carrier) => {
            for i in 0..config.components {
                let (c, f, s) = run_component(config, &carrier, i, &mut timer);
                report.components.push(c);
                inputs.push(f);
                solutions.push(s);
            }
        }
    }
    let deltas: Vec<f64> = report
        .components
        .iter()
        .filter_map(|c| c.defect.as_ref().map(|d| d.delta))
        .collect();
    report.delta = (deltas.len() == report.components.len() && !deltas.is_empty())
        .then(|| deltas.iter().copied().fold(0.0, f64::max));
    report.stability_sup = report
        .components
        .iter()
        .flat_map(|c| &c.methods)
        .filter_map(|m| m.verification.as_ref().map(|v| v.stability.stability_sup))
        .reduce(f64::max);
    report.pass = report.errors.is_empty()
        && !report.components.is_empty()
        && report.components.iter().all(|c| c.pass);
    report.wall_times = timer.0;
    ExperimentRun {
        report,
        inputs,
        solutions,
    }
}
