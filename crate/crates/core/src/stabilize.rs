//! Constructions of the exact solution near an approximate one.
//!
//! * dyadic limit `g(x) = lim 2⁻ⁿ (f(x^(2ⁿ)) − f(e))`, on `f°` or on the full `f`;
//! * the mean construction `φ(y) = m{x ↦ f°(yx) − f°(xσ(y))}`, `g = φ/2`;
//! * the Forti–Sikorska reconstruction of a Drygas solution from `fᵉ`, `f°`.
//!
//! Means are exact uniform averages on finite groups and centered box averages
//! on ℤᵈ. The box average is not invariant, and its deviation is carried in
//! the result's `error_budget`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::carrier::{box_symmetric_difference, Carrier, Element, MeanCapability};
use crate::defect::jensen_defect;
use crate::error::{JensenError, Result};
use crate::funcspace::{even_odd_at, odd_part, BoundedFn};
use crate::{DEFAULT_CONVERGENCE_TOL, DEFAULT_DYADIC_N};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// φ/2 from the (approximate) invariant mean.
    Mean,
    /// Dyadic limit of the odd part.
    Dyadic,
    /// Dyadic limit of the full function (the 3δ/2 construction).
    DyadicFull,
    /// Drygas reconstruction from even and odd parts.
    FortiSikorska,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mean => "mean",
            Method::Dyadic => "dyadic",
            Method::DyadicFull => "dyadic_full",
            Method::FortiSikorska => "forti_sikorska",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = JensenError;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "mean" => Ok(Method::Mean),
            "dyadic" => Ok(Method::Dyadic),
            "dyadic_full" => Ok(Method::DyadicFull),
            "forti_sikorska" => Ok(Method::FortiSikorska),
            other => Err(JensenError::Incompatible(format!(
                "unknown method {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizeOptions {
    /// Følner radius for the mean on lattices; defaults to the carrier's `folner_max`.
    pub folner_k: Option<i64>,
    pub dyadic_n: u32,
    pub convergence_tol: f64,
    /// Jensen defect of `f`; measured when absent.
    pub delta: Option<f64>,
}

impl Default for StabilizeOptions {
    fn default() -> Self {
        StabilizeOptions {
            folner_k: None,
            dyadic_n: DEFAULT_DYADIC_N,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            delta: None,
        }
    }
}

/// A limit computed at one point, with the successive differences it went through.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitTrace {
    pub value: Complex64,
    /// Index `n` of the returned iterate.
    pub iterations: u32,
    /// `trace[j] = |g_{j+1} − g_j|`.
    pub trace: Vec<f64>,
}

fn non_convergence(trace: Vec<f64>) -> JensenError {
    JensenError::NonConvergence {
        iterations: trace.len(),
        last: trace.last().copied().unwrap_or(f64::NAN),
        trace,
    }
}

fn overflow_hint(e: JensenError, n: u32) -> JensenError {
    match e {
        JensenError::Overflow(msg) => JensenError::Overflow(format!(
            "{msg} at dyadic level {n}; use a smaller iteration limit (affine oracles converge long before overflow)"
        )),
        other => other,
    }
}

/// Iterates `gₙ(x) = 2⁻ⁿ (f(x^(2ⁿ)) − f(e))` until `|gₙ − gₙ₋₁| ≤ tol`.
pub fn dyadic_limit(f: &BoundedFn, x: &Element, n_max: u32, tol: f64) -> Result<LimitTrace> {
    let c = f.carrier();
    let fe = f.evaluate(&c.neutral())?;
    let mut power = x.clone();
    let mut prev = f.evaluate(x)? - fe;
    let mut trace = Vec::new();
    for n in 1..=n_max {
        power = c.compose(&power, &power).map_err(|e| overflow_hint(e, n))?;
        let g = (f.evaluate(&power)? - fe) * 2f64.powi(-(n as i32));
        let diff = (g - prev).norm();
        trace.push(diff);
        if diff <= tol {
            return Ok(LimitTrace {
                value: g,
                iterations: n,
                trace,
            });
        }
        prev = g;
    }
    Err(non_convergence(trace))
}

/// The n-th partial expression of the Forti–Sikorska reconstruction at `x`.
///
/// ```text
/// 2⁻²ⁿ { fᵉ(x^(2ⁿ)) + ½ Σₖ 2ᵏ⁻¹ [ fᵉ((x^m σ(x)^m)^(2ᵏ⁻¹)) + fᵉ((σ(x)^m x^m)^(2ᵏ⁻¹)) ] },  m = 2ⁿ⁻ᵏ
/// + 2⁻ⁿ { f°(x^(2ⁿ)) + ½ Σₖ [ fᵉ((x^j σ(x)^j)^(2ⁿ⁻ᵏ)) − fᵉ((σ(x)^j x^j)^(2ⁿ⁻ᵏ)) ] },       j = 2ᵏ⁻¹
/// ```
pub fn forti_sikorska_level(f: &BoundedFn, x: &Element, n: u32) -> Result<Complex64> {
    let c = f.carrier();
    let sx = c.involute(x)?;
    let pow = |z: &Element, m: u32| c.dyadic_power(z, m).map_err(|e| overflow_hint(e, n));
    let even = |z: &Element| even_odd_at(f, z).map(|p| p.0);

    let xn = pow(x, n)?;
    let (fe_xn, fo_xn) = even_odd_at(f, &xn)?;
    let mut even_sum = Complex64::new(0.0, 0.0);
    let mut odd_sum = Complex64::new(0.0, 0.0);
    for k in 1..=n {
        let (xm, sxm) = (pow(x, n - k)?, pow(&sx, n - k)?);
        let a = pow(&c.compose(&xm, &sxm)?, k - 1)?;
        let b = pow(&c.compose(&sxm, &xm)?, k - 1)?;
        even_sum += (even(&a)? + even(&b)?) * 2f64.powi(k as i32 - 1);

        let (xj, sxj) = (pow(x, k - 1)?, pow(&sx, k - 1)?);
        let a = pow(&c.compose(&xj, &sxj)?, n - k)?;
        let b = pow(&c.compose(&sxj, &xj)?, n - k)?;
        odd_sum += even(&a)? - even(&b)?;
    }
    let even_block = (fe_xn + even_sum * 0.5) * 2f64.powi(-2 * n as i32);
    let odd_block = (fo_xn + odd_sum * 0.5) * 2f64.powi(-(n as i32));
    Ok(even_block + odd_block)
}

/// Evaluates [`forti_sikorska_level`] for `n = 0, 1, …` until successive levels agree to `tol`.
pub fn forti_sikorska_reconstruct(
    f: &BoundedFn,
    x: &Element,
    n_max: u32,
    tol: f64,
) -> Result<LimitTrace> {
    let mut prev = forti_sikorska_level(f, x, 0)?;
    let mut trace = Vec::new();
    for n in 1..=n_max {
        let v = forti_sikorska_level(f, x, n)?;
        let diff = (v - prev).norm();
        trace.push(diff);
        if diff <= tol {
            return Ok(LimitTrace {
                value: v,
                iterations: n,
                trace,
            });
        }
        prev = v;
    }
    Err(non_convergence(trace))
}

/// Value of an (approximate) invariant mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanValue {
    #[serde(with = "crate::funcspace::file::pair_serde")]
    pub value: Complex64,
    /// Følner radius, or the group order for exact uniform means.
    pub k_used: u64,
    /// `|m{h} − m{x ↦ h(tx)}|` for the carrier's probe generator `t`.
    pub invariance_residual: f64,
}

fn averaging_set(c: &Carrier, k: i64) -> Result<Vec<Element>> {
    match c.mean_capability() {
        MeanCapability::ExactUniform => Ok(c.window_elements()),
        MeanCapability::Folner => c.folner_set(k),
        MeanCapability::None => Err(JensenError::Capability(
            "finite monoid that is not a group has no invariant mean".into(),
        )),
    }
}

fn average(points: &[Element], h: impl Fn(&Element) -> Result<Complex64>) -> Result<Complex64> {
    let mut sum = Complex64::new(0.0, 0.0);
    for x in points {
        sum += h(x)?;
    }
    Ok(sum / points.len() as f64)
}

fn k_used(c: &Carrier, k: i64) -> u64 {
    match c {
        Carrier::Finite(fc) => fc.order() as u64,
        Carrier::Lattice(_) => k as u64,
    }
}

/// Mean of `h` over the whole finite group, or over the Følner box of radius `k`.
pub fn folner_mean(h: &BoundedFn, k: i64) -> Result<MeanValue> {
    let c = h.carrier();
    let points = averaging_set(c, k)?;
    let value = average(&points, |x| h.evaluate(x))?;
    let t = c.probe_generator();
    let moved = average(&points, |x| h.evaluate(&c.compose(&t, x)?))?;
    Ok(MeanValue {
        value,
        k_used: k_used(c, k),
        invariance_residual: (value - moved).norm(),
    })
}

/// φ tabulated on the window, with the diagnostics of the mean that produced it.
#[derive(Clone, Debug)]
pub struct PhiConstruction {
    pub phi: BoundedFn,
    pub k_used: u64,
    /// Largest measured `|m{u} − m{u translated}|` over the integrands.
    pub max_invariance_residual: f64,
    /// Bound on `|φ(y)/2 − g*(y)|` over the window, `g*` the exact solution.
    pub budget: f64,
}

fn folner_radius(c: &Carrier, k: Option<i64>) -> Result<i64> {
    match c {
        Carrier::Lattice(l) => Ok(k.unwrap_or(l.folner_max())),
        Carrier::Finite(_) => Ok(k.unwrap_or(0)),
    }
}

/// Boundary budget of the box mean for `φ(y)/2`: `A·|F Δ (F+2y)| / (2|F|)`.
fn phi_half_budget(amplitude: f64, k: i64, y: &Element) -> f64 {
    let coords = y.coords().expect("lattice element");
    let doubled: Vec<i64> = coords.iter().map(|c| c.saturating_mul(2)).collect();
    let side = (2 * k + 1) as f64;
    let size = side.powi(coords.len() as i32);
    amplitude * box_symmetric_difference(k, &doubled) as f64 / (2.0 * size)
}

/// `φ(y) = m{x ↦ f°(yx) − f°(xσ(y))}` for every window `y`.
pub fn phi_mean_construction(f: &BoundedFn, k: Option<i64>) -> Result<PhiConstruction> {
    let c = Arc::clone(f.carrier());
    let k = folner_radius(&c, k)?;
    let points = averaging_set(&c, k)?;
    let amplitude = match c.mean_capability() {
        MeanCapability::Folner => Some(f.odd_deviation_bound().ok_or_else(|| {
            JensenError::Capability(
                "the box mean on a lattice needs an oracle function (translates leave any table)"
                    .into(),
            )
        })?),
        _ => None,
    };
    let fo = odd_part(f);
    let t = c.probe_generator();
    let window = c.window_elements();
    let per_point = window
        .par_iter()
        .map(|y| {
            let sy = c.involute(y)?;
            let u = |x: &Element| -> Result<Complex64> {
                Ok(fo.evaluate(&c.compose(y, x)?)? - fo.evaluate(&c.compose(x, &sy)?)?)
            };
            let value = average(&points, u)?;
            let moved = average(&points, |x| u(&c.compose(&t, x)?))?;
            Ok((value, (value - moved).norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    let budget = match amplitude {
        Some(a) => window
            .iter()
            .map(|y| phi_half_budget(a, k, y))
            .fold(0.0, f64::max),
        None => 0.0,
    };
    let max_invariance_residual = per_point.iter().map(|p| p.1).fold(0.0, f64::max);
    let values: Vec<Complex64> = per_point.into_iter().map(|p| p.0).collect();
    let phi = match c.as_ref() {
        Carrier::Finite(_) => BoundedFn::table(Arc::clone(&c), values)?,
        Carrier::Lattice(l) => BoundedFn::window_table(Arc::clone(&c), l.window_radius(), values)?,
    };
    Ok(PhiConstruction {
        phi,
        k_used: k_used(&c, k),
        max_invariance_residual,
        budget,
    })
}

/// Both sides of the two mean-invariance identities used to show φ is a Drygas solution.
///
/// Returns `[|m{(u)_σ(y)} − m{u}|, |m{_y v} − m{v}|]` with
/// `u = f°_σ(z) + f°_z − 2f°` and `v = _z f° + _σ(z) f° − 2f°`.
pub fn mean_invariance_gaps(
    f: &BoundedFn,
    y: &Element,
    z: &Element,
    k: Option<i64>,
) -> Result<[f64; 2]> {
    let c = f.carrier();
    let k = folner_radius(c, k)?;
    let points = averaging_set(c, k)?;
    let fo = odd_part(f);
    let (sy, sz) = (c.involute(y)?, c.involute(z)?);
    let u = |x: &Element| -> Result<Complex64> {
        Ok(
            fo.evaluate(&c.compose(x, &sz)?)? + fo.evaluate(&c.compose(x, z)?)?
                - fo.evaluate(x)? * 2.0,
        )
    };
    let v = |x: &Element| -> Result<Complex64> {
        Ok(
            fo.evaluate(&c.compose(z, x)?)? + fo.evaluate(&c.compose(&sz, x)?)?
                - fo.evaluate(x)? * 2.0,
        )
    };
    let right = average(&points, |x| u(&c.compose(x, &sy)?))? - average(&points, u)?;
    let left = average(&points, |x| v(&c.compose(y, x)?))? - average(&points, v)?;
    Ok([right.norm(), left.norm()])
}

/// Budget for [`mean_invariance_gaps`] on a lattice: `4A·|F Δ (F+t)| / |F|` for translation `t`.
pub fn mean_invariance_budget(f: &BoundedFn, t: &Element, k: i64) -> Option<f64> {
    let coords = t.coords()?;
    let a = f.odd_deviation_bound()?;
    let size = ((2 * k + 1) as f64).powi(coords.len() as i32);
    Some(4.0 * a * box_symmetric_difference(k, coords) as f64 / size)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanDiagnostics {
    pub k_used: u64,
    pub max_invariance_residual: f64,
    pub budget: f64,
}

/// The constructed solution `g` (tabulated on the window, `g(e) = 0`) and how it was obtained.
#[derive(Clone, Debug)]
pub struct StabilizationResult {
    pub g: BoundedFn,
    pub offset: Complex64,
    pub method: Method,
    pub iterations_or_k: u64,
    /// Sup over the window of successive differences, one entry per level.
    pub convergence_trace: Vec<f64>,
    /// A-posteriori bound on `sup |g − g*|`.
    pub error_budget: f64,
    /// δ the budget was computed from.
    pub delta: f64,
    /// φ itself, for the mean method.
    pub phi: Option<BoundedFn>,
    pub mean: Option<MeanDiagnostics>,
}

/// Everything in a [`StabilizationResult`] except the tabulated functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizationSummary {
    pub method: Method,
    #[serde(with = "crate::funcspace::file::pair_serde")]
    pub offset: Complex64,
    pub iterations_or_k: u64,
    pub error_budget: f64,
    pub delta: f64,
    pub convergence_trace: Vec<f64>,
    pub mean: Option<MeanDiagnostics>,
}

impl StabilizationResult {
    pub fn summary(&self) -> StabilizationSummary {
        StabilizationSummary {
            method: self.method,
            offset: self.offset,
            iterations_or_k: self.iterations_or_k,
            error_budget: self.error_budget,
            delta: self.delta,
            convergence_trace: self.convergence_trace.clone(),
            mean: self.mean.clone(),
        }
    }

    /// Rebuilds a result from a stored solution table and its summary.
    ///
    /// For the mean method φ is recovered as `2g` (φ(e) = 0 exactly).
    pub fn from_summary(g: BoundedFn, s: StabilizationSummary) -> Result<Self> {
        let phi = match s.method {
            Method::Mean => Some(BoundedFn::tabulate(Arc::clone(g.carrier()), |x| {
                Ok(g.evaluate(x)? * 2.0)
            })?),
            _ => None,
        };
        Ok(StabilizationResult {
            g,
            offset: s.offset,
            method: s.method,
            iterations_or_k: s.iterations_or_k,
            convergence_trace: s.convergence_trace,
            error_budget: s.error_budget,
            delta: s.delta,
            phi,
            mean: s.mean,
        })
    }
}

/// Runs a pointwise limit on every window point in lock step, so the trace is a sup-norm trace.
fn sweep<F>(c: &Carrier, n_max: u32, tol: f64, level: F) -> Result<(Vec<Complex64>, Vec<f64>, u32)>
where
    F: Fn(&Element, u32) -> Result<Complex64> + Sync,
{
    let window = c.window_elements();
    let eval = |n: u32| {
        window
            .par_iter()
            .map(|x| level(x, n))
            .collect::<Result<Vec<_>>>()
    };
    let mut prev = eval(0)?;
    let mut trace = Vec::new();
    for n in 1..=n_max {
        let cur = eval(n)?;
        let diff = prev
            .iter()
            .zip(&cur)
            .map(|(a, b)| (b - a).norm())
            .fold(0.0, f64::max);
        trace.push(diff);
        if diff <= tol {
            return Ok((cur, trace, n));
        }
        prev = cur;
    }
    Err(non_convergence(trace))
}

/// Iterate `gₙ(x) = 2⁻ⁿ (h(x^(2ⁿ)) − h(e))` at level `n`.
fn dyadic_iterate(h: &BoundedFn, x: &Element, n: u32) -> Result<Complex64> {
    let c = h.carrier();
    let he = h.evaluate(&c.neutral())?;
    let p = c.dyadic_power(x, n).map_err(|e| overflow_hint(e, n))?;
    Ok((h.evaluate(&p)? - he) * 2f64.powi(-(n as i32)))
}

fn tabulate_with_zero_neutral(c: &Arc<Carrier>, mut values: Vec<Complex64>) -> Result<BoundedFn> {
    let e = c.neutral();
    if let Some(i) = c.window_elements().iter().position(|x| *x == e) {
        values[i] = Complex64::new(0.0, 0.0);
    }
    match c.as_ref() {
        Carrier::Finite(_) => BoundedFn::table(Arc::clone(c), values),
        Carrier::Lattice(l) => BoundedFn::window_table(Arc::clone(c), l.window_radius(), values),
    }
}

/// Builds the Jensen (or Drygas) solution near `f − f(e)` with the requested method.
pub fn jensen_approximant(
    f: &BoundedFn,
    method: Method,
    opts: &StabilizeOptions,
) -> Result<StabilizationResult> {
    let c = Arc::clone(f.carrier());
    let offset = f.evaluate(&c.neutral())?;
    let delta = match opts.delta {
        Some(d) => d,
        None => jensen_defect(f)?.delta,
    };
    match method {
        Method::Mean => {
            let pc = phi_mean_construction(f, opts.folner_k)?;
            let half = pc
                .phi
                .window_values()?
                .into_iter()
                .map(|(_, v)| v / 2.0)
                .collect();
            let g = tabulate_with_zero_neutral(&c, half)?;
            Ok(StabilizationResult {
                g,
                offset,
                method,
                iterations_or_k: pc.k_used,
                convergence_trace: Vec::new(),
                error_budget: pc.budget,
                delta,
                mean: Some(MeanDiagnostics {
                    k_used: pc.k_used,
                    max_invariance_residual: pc.max_invariance_residual,
                    budget: pc.budget,
                }),
                phi: Some(pc.phi),
            })
        }
        Method::Dyadic | Method::DyadicFull => {
            let h = if method == Method::Dyadic {
                odd_part(f)
            } else {
                f.clone()
            };
            let (values, trace, n) = sweep(&c, opts.dyadic_n, opts.convergence_tol, |x, n| {
                dyadic_iterate(&h, x, n)
            })?;
            let tail = 1.5 * delta * 2f64.powi(-(n as i32));
            let last = trace.last().copied().unwrap_or(0.0);
            Ok(StabilizationResult {
                g: tabulate_with_zero_neutral(&c, values)?,
                offset,
                method,
                iterations_or_k: u64::from(n),
                convergence_trace: trace,
                error_budget: tail.max(last),
                delta,
                phi: None,
                mean: None,
            })
        }
        Method::FortiSikorska => {
            let (values, trace, n) = sweep(&c, opts.dyadic_n, opts.convergence_tol, |x, n| {
                forti_sikorska_level(f, x, n)
            })?;
            let last = trace.last().copied().unwrap_or(0.0);
            Ok(StabilizationResult {
                g: tabulate_with_zero_neutral(&c, values)?,
                offset,
                method,
                iterations_or_k: u64::from(n),
                convergence_trace: trace,
                error_budget: last,
                delta,
                phi: None,
                mean: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carrier::bundled;
    use crate::defect::drygas_defect;
    use crate::funcspace::{Noise, Oracle};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn z(v: i64) -> Element {
        Element::Lattice(vec![v])
    }

    fn line(window: i64, folner: i64) -> Arc<Carrier> {
        Arc::new(bundled::lattice(1, window, folner))
    }

    fn oracle(car: Arc<Carrier>, a: f64, c0: f64, q: f64, noise: Option<Noise>) -> BoundedFn {
        BoundedFn::oracle(
            car,
            Oracle {
                linear: vec![c(a)],
                constant: c(c0),
                quadratic: (q != 0.0).then(|| vec![vec![c(q)]]),
                noise,
            },
        )
        .unwrap()
    }

    #[test]
    fn dyadic_limit_of_affine_function() {
        let f = oracle(line(4, 8), 2.0, 5.0, 0.0, None);
        let r = dyadic_limit(&f, &z(1), 40, 1e-10).unwrap();
        // gₙ = 2 exactly: f(2ⁿ) − f(0) = 2ⁿ⁺¹
        assert_eq!(r.value, c(2.0));
        assert_eq!(r.iterations, 1);
        assert_eq!(r.trace, vec![0.0]);
    }

    #[test]
    fn dyadic_limit_of_constant_is_zero() {
        for car in [Arc::new(bundled::s3()), line(4, 8)] {
            let f = BoundedFn::constant(Arc::clone(&car), c(7.0)).unwrap();
            for x in car.window_elements() {
                assert_eq!(dyadic_limit(&f, &x, 40, 1e-10).unwrap().value, c(0.0));
            }
        }
    }

    #[test]
    fn dyadic_iterates_for_affine_plus_constant_offset() {
        // f(x) = 2x + 5 without subtracting f(e) would give 2 + 5·2⁻ⁿ; check that sequence directly
        let f = oracle(line(4, 8), 2.0, 5.0, 0.0, None);
        let car = f.carrier();
        for n in 0..10u32 {
            let p = car.dyadic_power(&z(1), n).unwrap();
            let raw = f.evaluate(&p).unwrap() * 2f64.powi(-(n as i32));
            assert_eq!(raw, c(2.0 + 5.0 * 2f64.powi(-(n as i32))));
        }
    }

    #[test]
    fn dyadic_non_convergence_carries_trace() {
        let f = oracle(
            line(4, 8),
            1.0,
            0.0,
            0.0,
            Some(Noise::seeded_uniform(1.0, 9)),
        );
        match dyadic_limit(&f, &z(3), 3, 1e-14) {
            Err(JensenError::NonConvergence {
                iterations, trace, ..
            }) => {
                assert_eq!(iterations, 3);
                assert_eq!(trace.len(), 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dyadic_overflow_is_an_error() {
        let f = oracle(
            line(4, 8),
            1.0,
            0.0,
            0.0,
            Some(Noise::seeded_uniform(1.0, 9)),
        );
        let err = dyadic_limit(&f, &z(1 << 40), 40, 0.0).unwrap_err();
        assert!(matches!(err, JensenError::Overflow(m) if m.contains("smaller iteration limit")));
    }

    #[test]
    fn forti_sikorska_on_constants() {
        for car in [Arc::new(bundled::s3()), Arc::new(bundled::q8()), line(4, 8)] {
            let f = BoundedFn::constant(Arc::clone(&car), c(3.0)).unwrap();
            for x in car.window_elements() {
                for n in 0..8 {
                    let v = forti_sikorska_level(&f, &x, n).unwrap();
                    assert!((v - c(3.0 * 2f64.powi(-(n as i32)))).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn forti_sikorska_reproduces_exact_drygas_solution() {
        let car = line(6, 12);
        let f = oracle(Arc::clone(&car), 1.0, 0.0, 1.0, None);
        for x in car.window_elements() {
            let r = forti_sikorska_reconstruct(&f, &x, 30, 1e-12).unwrap();
            assert!((r.value - f.evaluate(&x).unwrap()).norm() < 1e-12);
        }
    }

    /// Level values straight from the displayed formula, written independently with
    /// explicit integer multiples on ℤ¹ (σ = negation).
    fn brute_level(f: &BoundedFn, x: i64, n: u32) -> Complex64 {
        let ev = |t: i64| (f.evaluate(&z(t)).unwrap() + f.evaluate(&z(-t)).unwrap()) / 2.0;
        let od = |t: i64| (f.evaluate(&z(t)).unwrap() - f.evaluate(&z(-t)).unwrap()) / 2.0;
        let p = |m: u32| 1i64 << m;
        let mut even = ev(x * p(n));
        let mut odd = od(x * p(n));
        for k in 1..=n {
            let m = p(n - k);
            let s = (x * m + (-x) * m) * p(k - 1);
            even += (ev(s) + ev(s)) * (p(k - 1) as f64) * 0.5;
            let j = p(k - 1);
            let s = (x * j + (-x) * j) * p(n - k);
            odd += (ev(s) - ev(s)) * 0.5;
        }
        even / 4f64.powi(n as i32) + odd / 2f64.powi(n as i32)
    }

    #[test]
    fn forti_sikorska_matches_brute_force_on_noisy_input() {
        let car = line(5, 10);
        let f = oracle(
            Arc::clone(&car),
            -0.5,
            1.0,
            0.75,
            Some(Noise::seeded_uniform(0.2, 4)),
        );
        for x in -5..=5 {
            for n in 0..12 {
                let a = forti_sikorska_level(&f, &z(x), n).unwrap();
                let b = brute_level(&f, x, n);
                assert!((a - b).norm() < 1e-12, "x={x} n={n}");
            }
        }
        // geometric approach to the exact Drygas part x ↦ 0.75x² − 0.5x
        for x in -5..=5i64 {
            let r = forti_sikorska_reconstruct(&f, &z(x), 40, 1e-11).unwrap();
            let exact = 0.75 * (x * x) as f64 - 0.5 * x as f64;
            assert!((r.value - c(exact)).norm() < 1e-9, "x={x}");
            // level n is the exact part plus 2⁻ⁿ·f(e) plus at most 2¹⁻ⁿε of noise
            for (j, d) in r.trace.iter().enumerate() {
                let scale = 2f64.powi(-(j as i32));
                assert!(*d <= 3.0 * 0.2 * scale + 0.5 * scale + 1e-12);
            }
        }
    }

    #[test]
    fn forti_sikorska_nonabelian_constant_plus_noise_converges() {
        let car = Arc::new(bundled::s3());
        let noise = Noise::seeded_uniform(0.5, 2);
        let vals = (0..6).map(|i| c(1.0) + noise.sample(&[i])).collect();
        let f = BoundedFn::table(Arc::clone(&car), vals).unwrap();
        for x in car.window_elements() {
            let r = forti_sikorska_reconstruct(&f, &x, 60, 1e-12).unwrap();
            // the only Drygas solution at bounded distance on a finite group is 0
            assert!(r.value.norm() < 1e-9);
        }
    }

    #[test]
    fn uniform_mean_examples() {
        let s3 = Arc::new(bundled::s3());
        let k = BoundedFn::constant(Arc::clone(&s3), c(4.0)).unwrap();
        let m = folner_mean(&k, 0).unwrap();
        assert_eq!(m.value, c(4.0));
        assert_eq!(m.k_used, 6);
        assert_eq!(m.invariance_residual, 0.0);
        let mut v = vec![c(0.0); 6];
        v[3] = c(1.0);
        let ind = BoundedFn::table(Arc::clone(&s3), v).unwrap();
        let m = folner_mean(&ind, 0).unwrap();
        assert!((m.value - c(1.0 / 6.0)).norm() < 1e-16);
        assert!(m.invariance_residual < 1e-16);
        assert!(matches!(
            folner_mean(
                &BoundedFn::constant(Arc::new(bundled::monoid3()), c(1.0)).unwrap(),
                0
            ),
            Err(JensenError::Capability(_))
        ));
    }

    #[test]
    fn alternating_box_mean() {
        let car = line(4, 600);
        let alt = oracle(Arc::clone(&car), 0.0, 0.0, 0.0, Some(Noise::parity(1.0)));
        for k in [1i64, 2, 63, 64, 512] {
            let m = folner_mean(&alt, k).unwrap();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((m.value - c(sign / (2 * k + 1) as f64)).norm() < 1e-15);
            // |F Δ (F+1)| / |F| · sup|h|
            assert!(m.invariance_residual <= 2.0 * 2.0 / (2 * k + 1) as f64 + 1e-15);
        }
    }

    #[test]
    fn phi_of_constant_is_zero() {
        for car in [Arc::new(bundled::q8()), line(4, 16)] {
            let f = BoundedFn::constant(Arc::clone(&car), c(2.5)).unwrap();
            let pc = phi_mean_construction(&f, Some(8)).unwrap();
            for (_, v) in pc.phi.window_values().unwrap() {
                assert_eq!(v, c(0.0));
            }
        }
    }

    #[test]
    fn phi_of_additive_is_exact_for_every_k() {
        let car = line(8, 64);
        let f = oracle(Arc::clone(&car), 3.0, 0.0, 0.0, None);
        for k in [8, 9, 31, 64] {
            let pc = phi_mean_construction(&f, Some(k)).unwrap();
            assert_eq!(pc.budget, 0.0);
            for (y, v) in pc.phi.window_values().unwrap() {
                let y = y.coords().unwrap()[0] as f64;
                assert!((v - c(6.0 * y)).norm() < 1e-12);
            }
        }
    }

    /// Brute-force box sum of `f°(y+x) − f°(x−y)` with the odd part written out.
    fn brute_phi(f: &BoundedFn, y: i64, k: i64) -> Complex64 {
        let fo = |t: i64| (f.evaluate(&z(t)).unwrap() - f.evaluate(&z(-t)).unwrap()) / 2.0;
        let mut s = c(0.0);
        for x in -k..=k {
            s += fo(y + x) - fo(x - y);
        }
        s / (2 * k + 1) as f64
    }

    #[test]
    fn phi_boundary_bound_against_brute_force() {
        let car = line(12, 64);
        let eps = 0.3;
        let f = oracle(
            Arc::clone(&car),
            1.5,
            2.0,
            0.0,
            Some(Noise::seeded_uniform(eps, 8)),
        );
        for k in [12i64, 20, 64] {
            let pc = phi_mean_construction(&f, Some(k)).unwrap();
            for y in -12..=12i64 {
                let v = pc.phi.evaluate(&z(y)).unwrap();
                assert!((v - brute_phi(&f, y, k)).norm() < 1e-12);
                let bound = 2.0 * eps * (2 * y.abs()) as f64 / (2 * k + 1) as f64;
                assert!((v - c(3.0 * y as f64)).norm() <= bound + 1e-12);
                assert!((v / 2.0 - c(1.5 * y as f64)).norm() <= pc.budget + 1e-12);
            }
        }
    }

    #[test]
    fn phi_on_finite_groups_is_drygas() {
        for car in [bundled::s3(), bundled::q8(), bundled::cyclic(6)] {
            let car = Arc::new(car);
            let noise = Noise::seeded_uniform(1.0, 77);
            let vals = car
                .window_elements()
                .iter()
                .map(|x| Complex64::new(0.5, 0.5) + noise.sample(&[x.index().unwrap() as i64]))
                .collect();
            let f = BoundedFn::table(Arc::clone(&car), vals).unwrap();
            let pc = phi_mean_construction(&f, None).unwrap();
            assert_eq!(pc.budget, 0.0);
            assert!(pc.max_invariance_residual < 1e-15);
            assert!(drygas_defect(&pc.phi).unwrap().delta < 1e-12);
        }
    }

    #[test]
    fn mean_needs_capability_and_oracle() {
        let m3 = Arc::new(bundled::monoid3());
        let f = BoundedFn::constant(m3, c(1.0)).unwrap();
        assert!(matches!(
            phi_mean_construction(&f, None),
            Err(JensenError::Capability(_))
        ));
        let car = line(3, 6);
        let table = BoundedFn::tabulate(Arc::clone(&car), |_| Ok(c(1.0))).unwrap();
        assert!(matches!(
            phi_mean_construction(&table, None),
            Err(JensenError::Capability(_))
        ));
        let o = oracle(car, 1.0, 0.0, 0.0, None);
        assert!(phi_mean_construction(&o, Some(7)).is_err());
    }

    #[test]
    fn mean_invariance_identities() {
        let s3 = Arc::new(bundled::s3());
        let noise = Noise::seeded_uniform(1.0, 5);
        let vals = (0..6).map(|i| noise.sample(&[i])).collect();
        let f = BoundedFn::table(Arc::clone(&s3), vals).unwrap();
        for y in s3.window_elements() {
            for zz in s3.window_elements() {
                let gaps = mean_invariance_gaps(&f, &y, &zz, None).unwrap();
                assert!(gaps[0] < 1e-15 && gaps[1] < 1e-15);
            }
        }
        let car = line(4, 32);
        let f = oracle(
            Arc::clone(&car),
            2.0,
            1.0,
            0.0,
            Some(Noise::seeded_uniform(0.4, 6)),
        );
        for y in -4..=4 {
            for zz in -4..=4 {
                let gaps = mean_invariance_gaps(&f, &z(y), &z(zz), Some(32)).unwrap();
                let b_right = mean_invariance_budget(&f, &z(-y), 32).unwrap();
                let b_left = mean_invariance_budget(&f, &z(y), 32).unwrap();
                assert!(gaps[0] <= b_right + 1e-12);
                assert!(gaps[1] <= b_left + 1e-12);
            }
        }
    }

    #[test]
    fn fixed_point_for_exact_solutions() {
        let opts = StabilizeOptions::default();
        let affine = oracle(line(16, 64), 2.0, 5.0, 0.0, None);
        let constant =
            BoundedFn::constant(Arc::new(bundled::s3()), Complex64::new(3.0, 2.0)).unwrap();
        for f in [affine, constant] {
            let fe = f.evaluate(&f.carrier().neutral()).unwrap();
            for m in [
                Method::Mean,
                Method::Dyadic,
                Method::DyadicFull,
                Method::FortiSikorska,
            ] {
                let r = jensen_approximant(&f, m, &opts).unwrap();
                assert_eq!(r.offset, fe);
                assert_eq!(r.g.evaluate(&f.carrier().neutral()).unwrap(), c(0.0));
                for (x, g) in r.g.window_values().unwrap() {
                    let want = f.evaluate(&x).unwrap() - fe;
                    assert!((g - want).norm() <= 1e-9, "{m:?} at {x}");
                }
            }
        }
    }

    #[test]
    fn affine_plus_parity_noise() {
        let f = oracle(line(16, 128), 2.0, 5.0, 0.0, Some(Noise::parity(0.1)));
        let opts = StabilizeOptions::default();
        for m in [Method::Mean, Method::Dyadic] {
            let r = jensen_approximant(&f, m, &opts).unwrap();
            assert_eq!(r.offset, c(5.1));
            for (x, g) in r.g.window_values().unwrap() {
                let want = 2.0 * x.coords().unwrap()[0] as f64;
                assert!((g - c(want)).norm() <= r.error_budget + 1e-9);
            }
        }
    }

    #[test]
    fn z2_example_solution_is_zero() {
        let f = BoundedFn::table(Arc::new(bundled::z2()), vec![c(0.0), c(1.0)]).unwrap();
        for m in [Method::Mean, Method::Dyadic, Method::DyadicFull] {
            let r = jensen_approximant(&f, m, &StabilizeOptions::default()).unwrap();
            assert_eq!(r.offset, c(0.0));
            for (_, g) in r.g.window_values().unwrap() {
                assert!(g.norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn dyadic_cauchy_property_and_homogeneity() {
        let car = line(16, 64);
        let f = oracle(
            Arc::clone(&car),
            -1.0,
            0.3,
            0.0,
            Some(Noise::seeded_uniform(0.5, 12)),
        );
        let delta = jensen_defect(&f).unwrap().delta;
        for x in car.window_elements() {
            let r = dyadic_limit(&f, &x, 40, 1e-10).unwrap();
            for (n, d) in r.trace.iter().enumerate() {
                assert!(*d <= 2f64.powi(-(n as i32 + 1)) * 1.5 * delta + 1e-12);
            }
        }
        let r = jensen_approximant(&f, Method::DyadicFull, &StabilizeOptions::default()).unwrap();
        for x in car.window_elements() {
            let x2 = car.compose(&x, &x).unwrap();
            if let Ok(g2) = r.g.evaluate(&x2) {
                assert!(
                    (g2 - r.g.evaluate(&x).unwrap() * 2.0).norm() <= 3.0 * r.error_budget + 1e-9
                );
            }
        }
    }

    #[test]
    fn monoid_supports_dyadic_but_not_mean() {
        let m3 = Arc::new(bundled::monoid3());
        let f = BoundedFn::table(Arc::clone(&m3), vec![c(1.0), c(1.2), c(0.9)]).unwrap();
        assert!(jensen_approximant(&f, Method::Dyadic, &StabilizeOptions::default()).is_ok());
        assert!(jensen_approximant(&f, Method::Mean, &StabilizeOptions::default()).is_err());
    }

    #[test]
    fn method_names_parse() {
        for m in [
            Method::Mean,
            Method::Dyadic,
            Method::DyadicFull,
            Method::FortiSikorska,
        ] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!(
            "forti-sikorska".parse::<Method>().unwrap(),
            Method::FortiSikorska
        );
        assert!("newton".parse::<Method>().is_err());
    }
}
