//! Checks on a constructed solution: residuals, the stability bound, the
//! structural identities of Jensen solutions and agreement between methods.
//!
//! Every check carries an itemized allowance `paper_bound + budget + tolerance`
//! so a failure points at one layer.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::carrier::{Element, PairDomain};
use crate::defect::{
    drygas_term, element_scan, inequality_suite, jensen_defect, jensen_term, pair_scan,
    InequalityRecord, PhiInput,
};
use crate::error::{JensenError, Result};
use crate::funcspace::{even_odd_at, BoundedFn};
use crate::scan::Supremum;
use crate::stabilize::{jensen_approximant, Method, StabilizationResult, StabilizeOptions};
use crate::DEFAULT_TOLERANCE;

/// A measured supremum against `paper_bound + budget + tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub measured: f64,
    pub paper_bound: f64,
    pub budget: f64,
    pub tolerance: f64,
    pub allowance: f64,
    pub holds: bool,
    pub witness: Vec<String>,
}

impl BoundCheck {
    pub fn new(name: &str, measured: f64, paper_bound: f64, budget: f64, tolerance: f64) -> Self {
        let allowance = paper_bound + budget + tolerance;
        BoundCheck {
            name: name.into(),
            measured,
            paper_bound,
            budget,
            tolerance,
            allowance,
            holds: measured <= allowance,
            witness: Vec::new(),
        }
    }

    fn with_witness(mut self, witness: Vec<String>) -> Self {
        self.witness = witness;
        self
    }
}

/// Supremum of an equation's residual over the window pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub equation: String,
    pub value: f64,
    pub witness: Vec<String>,
    pub pairs_evaluated: usize,
    /// Pairs left out because a product fell outside a tabulated window.
    pub pairs_skipped: usize,
}

fn residual(
    g: &BoundedFn,
    equation: &str,
    term: impl Fn(&Element, &Element) -> Result<Complex64> + Sync,
) -> Result<Residual> {
    let c = g.carrier();
    let domain = c.window_pairs();
    let s = pair_scan(&domain, term)?;
    Ok(Residual {
        equation: equation.into(),
        value: s.value,
        witness: s
            .index
            .map(|i| {
                let (x, y) = domain.pair(i);
                vec![c.label(x), c.label(y)]
            })
            .unwrap_or_default(),
        pairs_evaluated: s.evaluated,
        pairs_skipped: s.skipped,
    })
}

/// sup `|g(xy) + g(xσ(y)) − 2g(x)|` over window pairs with products inside `g`'s domain.
pub fn jensen_residual(g: &BoundedFn) -> Result<Residual> {
    residual(g, "jensen", |x, y| jensen_term(g, x, y))
}

/// sup `|g(yx) + g(σ(y)x) − 2g(x) − g(y) − g(σ(y))|` over window pairs.
pub fn drygas_residual(g: &BoundedFn) -> Result<Residual> {
    residual(g, "drygas", |x, y| drygas_term(g, x, y))
}

/// A residual measured against `budget_factor·budget + tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualCheck {
    #[serde(flatten)]
    pub residual: Residual,
    pub budget: f64,
    pub tolerance: f64,
    pub allowance: f64,
    pub holds: bool,
}

impl ResidualCheck {
    fn new(residual: Residual, budget: f64, tolerance: f64) -> Self {
        let allowance = budget + tolerance;
        ResidualCheck {
            holds: residual.value <= allowance,
            residual,
            budget,
            tolerance,
            allowance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityCheck {
    /// sup over the window of `|f(x) − g(x) − offset|`.
    pub stability_sup: f64,
    pub witness: Option<String>,
    /// `3δ + error_budget + tolerance`.
    pub theorem: BoundCheck,
    /// `3δ/2 + error_budget + tolerance`, only for the dyadic limit of the full `f`.
    pub lemma: Option<BoundCheck>,
}

impl StabilityCheck {
    pub fn holds(&self) -> bool {
        self.theorem.holds && self.lemma.as_ref().is_none_or(|l| l.holds)
    }
}

/// Compares `f − g − offset` with `3δ` (and with `3δ/2` for [`Method::DyadicFull`]).
pub fn stability_bound_check(
    f: &BoundedFn,
    result: &StabilizationResult,
    delta: f64,
    tolerance: f64,
) -> Result<StabilityCheck> {
    let c = f.carrier();
    let points = c.window_elements();
    let s = element_scan(&points, |x| {
        Ok(f.evaluate(x)? - result.g.evaluate(x)? - result.offset)
    })?;
    let witness = s.index.map(|i| c.label(&points[i]));
    let labels: Vec<String> = witness.iter().cloned().collect();
    let theorem = BoundCheck::new(
        "stability_3delta",
        s.value,
        3.0 * delta,
        result.error_budget,
        tolerance,
    )
    .with_witness(labels.clone());
    let lemma = (result.method == Method::DyadicFull).then(|| {
        BoundCheck::new(
            "stability_3delta_half",
            s.value,
            1.5 * delta,
            result.error_budget,
            tolerance,
        )
        .with_witness(labels)
    });
    Ok(StabilityCheck {
        stability_sup: s.value,
        witness,
        theorem,
        lemma,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub name: String,
    pub expression: String,
    /// Dyadic exponent for the power identity.
    pub n: Option<u32>,
    pub measured: f64,
    /// Multiple of the solution's error budget admitted.
    pub budget: f64,
    pub tolerance: f64,
    pub allowance: f64,
    pub holds: bool,
    pub witness: Option<String>,
    pub evaluated: usize,
    /// Points whose products left `g`'s domain.
    pub skipped: usize,
}

#[allow(clippy::too_many_arguments)]
fn identity(
    name: &str,
    expression: &str,
    n: Option<u32>,
    s: Supremum,
    points: &[Element],
    label: impl Fn(&Element) -> String,
    budget: f64,
    tolerance: f64,
) -> IdentityRecord {
    let allowance = budget + tolerance;
    IdentityRecord {
        name: name.into(),
        expression: expression.into(),
        n,
        measured: s.value,
        budget,
        tolerance,
        allowance,
        holds: s.value <= allowance,
        witness: s.index.map(|i| label(&points[i])),
        evaluated: s.evaluated,
        skipped: s.skipped,
    }
}

/// The identities every Jensen solution satisfies:
/// `gᵉ(x) = g(e)`, `g(xσ(x)) = g(e)` and `g(x^(2ⁿ)) + (2ⁿ − 1)g(e) = 2ⁿg(x)`.
///
/// `budget` bounds `|g − g*|` for some exact solution `g*`; the allowances are
/// `2·budget`, `2·budget` and `2ⁿ⁺¹·budget` on top of `tolerance`.
pub fn identity_checks(
    g: &BoundedFn,
    n_list: &[u32],
    budget: f64,
    tolerance: f64,
) -> Result<Vec<IdentityRecord>> {
    let c = g.carrier();
    let points = c.window_elements();
    let ge = g.evaluate(&c.neutral())?;
    let label = |x: &Element| c.label(x);
    let mut out = Vec::with_capacity(2 + n_list.len());
    out.push(identity(
        "even_part_is_constant",
        "|gᵉ(x) − g(e)|",
        None,
        element_scan(&points, |x| Ok(even_odd_at(g, x)?.0 - ge))?,
        &points,
        label,
        2.0 * budget,
        tolerance,
    ));
    out.push(identity(
        "x_sigma_x_is_neutral",
        "|g(xσ(x)) − g(e)|",
        None,
        element_scan(&points, |x| {
            Ok(g.evaluate(&c.compose(x, &c.involute(x)?)?)? - ge)
        })?,
        &points,
        label,
        2.0 * budget,
        tolerance,
    ));
    for &n in n_list {
        let p = 2f64.powi(n as i32);
        out.push(identity(
            "dyadic_power",
            "|g(x^(2ⁿ)) + (2ⁿ − 1)g(e) − 2ⁿg(x)|",
            Some(n),
            element_scan(&points, |x| {
                Ok(g.evaluate(&c.dyadic_power(x, n)?)? + ge * (p - 1.0) - g.evaluate(x)? * p)
            })?,
            &points,
            label,
            2.0 * p * budget,
            tolerance,
        ));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementStatus {
    Evaluated,
    SkippedNoMean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub status: AgreementStatus,
    /// sup over the window of `|g_mean − g_dyadic|`.
    pub sup: f64,
    pub witness: Option<String>,
    pub budget_mean: f64,
    pub budget_dyadic: f64,
    pub tolerance: f64,
    pub allowance: f64,
    pub holds: bool,
    pub reason: Option<String>,
}

impl AgreementReport {
    pub fn skipped(reason: String, tolerance: f64) -> Self {
        AgreementReport {
            status: AgreementStatus::SkippedNoMean,
            sup: 0.0,
            witness: None,
            budget_mean: 0.0,
            budget_dyadic: 0.0,
            tolerance,
            allowance: tolerance,
            holds: true,
            reason: Some(reason),
        }
    }
}

/// Compares two already constructed solutions.
pub fn agreement_of(
    mean: &StabilizationResult,
    dyadic: &StabilizationResult,
    tolerance: f64,
) -> Result<AgreementReport> {
    let c = mean.g.carrier();
    let points = c.window_elements();
    let s = element_scan(&points, |x| Ok(mean.g.evaluate(x)? - dyadic.g.evaluate(x)?))?;
    let allowance = mean.error_budget + dyadic.error_budget + tolerance;
    Ok(AgreementReport {
        status: AgreementStatus::Evaluated,
        sup: s.value,
        witness: s.index.map(|i| c.label(&points[i])),
        budget_mean: mean.error_budget,
        budget_dyadic: dyadic.error_budget,
        tolerance,
        allowance,
        holds: s.value <= allowance,
        reason: None,
    })
}

/// Builds the mean and dyadic solutions of `f` and compares them.
///
/// A carrier without a usable mean yields status `skipped_no_mean`.
pub fn method_agreement(
    f: &BoundedFn,
    opts: &StabilizeOptions,
    tolerance: f64,
) -> Result<AgreementReport> {
    let mean = match jensen_approximant(f, Method::Mean, opts) {
        Ok(r) => r,
        Err(JensenError::Capability(reason)) => {
            return Ok(AgreementReport::skipped(reason, tolerance))
        }
        Err(e) => return Err(e),
    };
    let dyadic = jensen_approximant(f, Method::Dyadic, opts)?;
    agreement_of(&mean, &dyadic, tolerance)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub tolerance: f64,
    /// Exponents `n` for the power identity.
    pub power_levels: Vec<u32>,
    /// Jensen defect of `f`; measured when absent.
    pub delta: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            tolerance: DEFAULT_TOLERANCE,
            power_levels: vec![1, 2, 3],
            delta: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Construction that produced the solution; absent for a bare solution table.
    pub method: Option<Method>,
    pub delta: f64,
    pub tolerance: f64,
    pub error_budget: f64,
    /// Allowance `4·budget + tolerance`.
    pub jensen_residual_of_g: ResidualCheck,
    /// Mean method only; allowance `tolerance` on finite groups and `12·budget + tolerance` on lattices.
    pub drygas_residual_of_phi: Option<ResidualCheck>,
    pub stability: StabilityCheck,
    pub identity_records: Vec<IdentityRecord>,
    pub inequality_records: Vec<InequalityRecord>,
    pub pass: bool,
}

/// Runs every check on one constructed solution of `f`.
pub fn verify_solution(
    f: &BoundedFn,
    result: &StabilizationResult,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    let tol = opts.tolerance;
    let delta = match opts.delta {
        Some(d) => d,
        None => jensen_defect(f)?.delta,
    };
    let b = result.error_budget;
    let jensen = ResidualCheck::new(jensen_residual(&result.g)?, 4.0 * b, tol);
    let drygas = match &result.phi {
        Some(phi) => Some(ResidualCheck::new(drygas_residual(phi)?, 12.0 * b, tol)),
        None => None,
    };
    let stability = stability_bound_check(f, result, delta, tol)?;
    let identity_records = identity_checks(&result.g, &opts.power_levels, b, tol)?;
    let phi = result.phi.as_ref().map(|phi| PhiInput { phi, budget: b });
    let inequality_records = inequality_suite(f, delta, phi, tol)?;
    let pass = jensen.holds
        && drygas.as_ref().is_none_or(|d| d.holds)
        && stability.holds()
        && identity_records.iter().all(|r| r.holds)
        && inequality_records.iter().all(|r| r.holds);
    Ok(VerificationReport {
        method: Some(result.method),
        delta,
        tolerance: tol,
        error_budget: b,
        jensen_residual_of_g: jensen,
        drygas_residual_of_phi: drygas,
        stability,
        identity_records,
        inequality_records,
        pass,
    })
}

/// Window pairs over which residuals of a function on `g`'s carrier are scanned.
pub fn residual_domain(g: &BoundedFn) -> PairDomain {
    g.carrier().window_pairs()
}
