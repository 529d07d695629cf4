//! Bounded complex-valued functions on carriers.
//!
//! A [`BoundedFn`] is either a table (total on a finite carrier, or on a box
//! of a lattice), a closed-form oracle on ℤᵈ, or a lazy transform of another
//! function (even/odd part, translate, constant shift). Oracles are what make
//! dyadic powers `x^(2^n)` evaluable: they leave every finite window.

pub mod file;
mod noise;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::carrier::{box_index, box_points, Carrier, Element};
use crate::error::{JensenError, Result};
use crate::scan::{sup_scan, Supremum};

pub use noise::{Noise, NoiseKind};

/// Closed-form function on ℤᵈ: `xᵀQx + a·x + c + noise(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Oracle {
    pub linear: Vec<Complex64>,
    pub constant: Complex64,
    /// Optional quadratic form, row-major `d × d`.
    pub quadratic: Option<Vec<Vec<Complex64>>>,
    pub noise: Option<Noise>,
}

impl Oracle {
    pub fn affine(linear: Vec<Complex64>, constant: Complex64) -> Self {
        Oracle {
            linear,
            constant,
            quadratic: None,
            noise: None,
        }
    }

    /// Sup of `|f(x) − xᵀQx − a·x − c|`.
    pub fn amplitude(&self) -> f64 {
        self.noise.as_ref().map_or(0.0, |n| n.amplitude)
    }

    fn eval(&self, coords: &[i64]) -> Complex64 {
        let mut v = self.constant;
        for (a, &x) in self.linear.iter().zip(coords) {
            v += a * x as f64;
        }
        if let Some(q) = &self.quadratic {
            for (row, &xi) in q.iter().zip(coords) {
                for (qij, &xj) in row.iter().zip(coords) {
                    v += qij * (xi as f64 * xj as f64);
                }
            }
        }
        if let Some(n) = &self.noise {
            v += n.sample(coords);
        }
        v
    }
}

/// Lazy transforms of a base function.
#[derive(Clone, Debug, PartialEq)]
pub enum Transform {
    /// `x ↦ (f(x) + f(σx)) / 2`
    Even,
    /// `x ↦ (f(x) − f(σx)) / 2`
    Odd,
    /// `x ↦ f(yx)`
    LeftTranslate(Element),
    /// `x ↦ f(xy)`
    RightTranslate(Element),
    /// `x ↦ f(x) − c`
    Shift(Complex64),
}

#[derive(Clone, Debug)]
enum Repr {
    Table(Arc<Vec<Complex64>>),
    Window {
        radius: i64,
        values: Arc<Vec<Complex64>>,
    },
    Oracle(Arc<Oracle>),
    Derived(Arc<(BoundedFn, Transform)>),
}

/// A complex-valued function on a carrier.
#[derive(Clone, Debug)]
pub struct BoundedFn {
    carrier: Arc<Carrier>,
    repr: Repr,
}

impl BoundedFn {
    /// Table on a finite carrier, indexed by element index.
    pub fn table(carrier: Arc<Carrier>, values: Vec<Complex64>) -> Result<Self> {
        let n = match carrier.as_ref() {
            Carrier::Finite(c) => c.order(),
            Carrier::Lattice(_) => {
                return Err(JensenError::MalformedFunction(
                    "index tables need a finite carrier; use window_table on lattices".into(),
                ))
            }
        };
        if values.len() != n {
            return Err(JensenError::MalformedFunction(format!(
                "table has {} values for {n} elements",
                values.len()
            )));
        }
        check_finite(&carrier, &values, Element::Finite)?;
        Ok(BoundedFn {
            carrier,
            repr: Repr::Table(Arc::new(values)),
        })
    }

    /// Table on the lattice box `[-radius, radius]^d`, in [`Carrier::window_elements`] order.
    pub fn window_table(
        carrier: Arc<Carrier>,
        radius: i64,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        let dim = match carrier.as_ref() {
            Carrier::Lattice(l) => l.dim(),
            Carrier::Finite(_) => {
                return Err(JensenError::MalformedFunction(
                    "window tables need a lattice carrier".into(),
                ))
            }
        };
        let expected = ((2 * radius + 1) as usize).pow(dim as u32);
        if radius < 0 || values.len() != expected {
            return Err(JensenError::MalformedFunction(format!(
                "box of radius {radius} needs {expected} values, got {}",
                values.len()
            )));
        }
        let points = box_points(dim, radius);
        check_finite(&carrier, &values, |i| points[i].clone())?;
        Ok(BoundedFn {
            carrier,
            repr: Repr::Window {
                radius,
                values: Arc::new(values),
            },
        })
    }

    pub fn oracle(carrier: Arc<Carrier>, oracle: Oracle) -> Result<Self> {
        let dim = match carrier.as_ref() {
            Carrier::Lattice(l) => l.dim(),
            Carrier::Finite(_) => {
                return Err(JensenError::MalformedFunction(
                    "oracle functions live on lattices".into(),
                ))
            }
        };
        let quad_ok = oracle
            .quadratic
            .as_ref()
            .is_none_or(|q| q.len() == dim && q.iter().all(|r| r.len() == dim));
        if oracle.linear.len() != dim || !quad_ok {
            return Err(JensenError::MalformedFunction(format!(
                "oracle coefficients do not match dimension {dim}"
            )));
        }
        let coeffs_finite = oracle
            .linear
            .iter()
            .chain(oracle.quadratic.iter().flatten().flatten())
            .chain(std::iter::once(&oracle.constant))
            .all(|c| c.is_finite());
        if !coeffs_finite {
            return Err(JensenError::NonFinite("oracle coefficients".into()));
        }
        if let Some(n) = &oracle.noise {
            n.validate()?;
        }
        Ok(BoundedFn {
            carrier,
            repr: Repr::Oracle(Arc::new(oracle)),
        })
    }

    /// The constant function `c`.
    pub fn constant(carrier: Arc<Carrier>, c: Complex64) -> Result<Self> {
        match carrier.as_ref() {
            Carrier::Finite(fc) => {
                let n = fc.order();
                Self::table(carrier, vec![c; n])
            }
            Carrier::Lattice(l) => {
                let dim = l.dim();
                Self::oracle(
                    carrier,
                    Oracle::affine(vec![Complex64::new(0.0, 0.0); dim], c),
                )
            }
        }
    }

    /// Tabulates `value` on the carrier's window (all of a finite carrier).
    pub fn tabulate<F>(carrier: Arc<Carrier>, value: F) -> Result<Self>
    where
        F: Fn(&Element) -> Result<Complex64> + Sync,
    {
        let points = carrier.window_elements();
        let values = points.par_iter().map(&value).collect::<Result<Vec<_>>>()?;
        match carrier.as_ref() {
            Carrier::Finite(_) => Self::table(carrier, values),
            Carrier::Lattice(l) => {
                let r = l.window_radius();
                Self::window_table(carrier, r, values)
            }
        }
    }

    pub fn carrier(&self) -> &Arc<Carrier> {
        &self.carrier
    }

    pub fn as_oracle(&self) -> Option<&Oracle> {
        match &self.repr {
            Repr::Oracle(o) => Some(o),
            _ => None,
        }
    }

    /// True for finite tables and lattice window tables.
    pub fn is_tabulated(&self) -> bool {
        matches!(self.repr, Repr::Table(_) | Repr::Window { .. })
    }

    /// Radius of the box a lattice table is defined on.
    pub fn window_radius(&self) -> Option<i64> {
        match &self.repr {
            Repr::Window { radius, .. } => Some(*radius),
            _ => None,
        }
    }

    /// Whether `x` can be evaluated without leaving a tabulated domain.
    pub fn is_defined_at(&self, x: &Element) -> bool {
        self.evaluate(x).is_ok()
    }

    /// Bound on `|f°(x) − A(x)|` for an additive odd `A`, when the representation provides one.
    ///
    /// For an oracle, `A` is the linear part and the bound is the noise amplitude
    /// (the quadratic and constant parts are even).
    pub fn odd_deviation_bound(&self) -> Option<f64> {
        match &self.repr {
            Repr::Oracle(o) => Some(o.amplitude()),
            Repr::Derived(d) => match &d.1 {
                Transform::Shift(_) | Transform::Odd => d.0.odd_deviation_bound(),
                _ => None,
            },
            _ => None,
        }
    }

    /// Noise amplitude of an oracle; `None` for other representations.
    pub fn noise_amplitude(&self) -> Option<f64> {
        self.as_oracle().map(Oracle::amplitude)
    }

    /// `f(x)`.
    pub fn evaluate(&self, x: &Element) -> Result<Complex64> {
        self.carrier.check(x)?;
        let v = match &self.repr {
            Repr::Table(values) => values[x.index().expect("checked finite element")],
            Repr::Window { radius, values } => {
                let coords = x.coords().expect("checked lattice element");
                let i = box_index(coords, *radius)
                    .ok_or_else(|| JensenError::OutOfDomain(self.carrier.label(x)))?;
                values[i]
            }
            Repr::Oracle(o) => o.eval(x.coords().expect("checked lattice element")),
            Repr::Derived(d) => {
                let (base, t) = (&d.0, &d.1);
                match t {
                    Transform::Even => even_odd_at(base, x)?.0,
                    Transform::Odd => even_odd_at(base, x)?.1,
                    Transform::LeftTranslate(y) => base.evaluate(&self.carrier.compose(y, x)?)?,
                    Transform::RightTranslate(y) => base.evaluate(&self.carrier.compose(x, y)?)?,
                    Transform::Shift(c) => base.evaluate(x)? - c,
                }
            }
        };
        if !v.is_finite() {
            return Err(JensenError::NonFinite(self.carrier.label(x)));
        }
        Ok(v)
    }

    fn derive(&self, t: Transform) -> BoundedFn {
        BoundedFn {
            carrier: Arc::clone(&self.carrier),
            repr: Repr::Derived(Arc::new((self.clone(), t))),
        }
    }

    fn map_finite_table(&self, t: Transform) -> Option<BoundedFn> {
        let Repr::Table(_) = &self.repr else {
            return None;
        };
        let lazy = self.derive(t);
        let values = self
            .carrier
            .window_elements()
            .iter()
            .map(|x| lazy.evaluate(x))
            .collect::<Result<Vec<_>>>()
            .ok()?;
        Some(BoundedFn {
            carrier: Arc::clone(&self.carrier),
            repr: Repr::Table(Arc::new(values)),
        })
    }

    fn transformed(&self, t: Transform) -> BoundedFn {
        self.map_finite_table(t.clone())
            .unwrap_or_else(|| self.derive(t))
    }

    /// Values on the carrier's window, in window order.
    pub fn window_values(&self) -> Result<Vec<(Element, Complex64)>> {
        self.carrier
            .window_elements()
            .into_iter()
            .map(|x| self.evaluate(&x).map(|v| (x, v)))
            .collect()
    }

    /// Stored values of a table representation, with their elements.
    pub fn table_entries(&self) -> Option<Vec<(Element, Complex64)>> {
        match &self.repr {
            Repr::Table(values) => Some(
                values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (Element::Finite(i), *v))
                    .collect(),
            ),
            Repr::Window { radius, values } => {
                let dim = match self.carrier.as_ref() {
                    Carrier::Lattice(l) => l.dim(),
                    Carrier::Finite(_) => unreachable!("window tables live on lattices"),
                };
                Some(
                    box_points(dim, *radius)
                        .into_iter()
                        .zip(values.iter().copied())
                        .collect(),
                )
            }
            _ => None,
        }
    }
}

fn check_finite(
    carrier: &Carrier,
    values: &[Complex64],
    element: impl Fn(usize) -> Element,
) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(JensenError::NonFinite(carrier.label(&element(i)))),
        None => Ok(()),
    }
}

/// `(fᵉ(x), f°(x))` from the same two evaluations `f(x)`, `f(σx)`.
pub fn even_odd_at(f: &BoundedFn, x: &Element) -> Result<(Complex64, Complex64)> {
    let a = f.evaluate(x)?;
    let b = f.evaluate(&f.carrier.involute(x)?)?;
    Ok(((a + b) / 2.0, (a - b) / 2.0))
}

pub fn evaluate(f: &BoundedFn, x: &Element) -> Result<Complex64> {
    f.evaluate(x)
}

/// `fᵉ(x) = (f(x) + f(σ(x))) / 2`.
pub fn even_part(f: &BoundedFn) -> BoundedFn {
    f.transformed(Transform::Even)
}

/// `f°(x) = (f(x) − f(σ(x))) / 2`.
pub fn odd_part(f: &BoundedFn) -> BoundedFn {
    f.transformed(Transform::Odd)
}

/// `x ↦ f(yx)`.
pub fn left_translate(y: &Element, f: &BoundedFn) -> Result<BoundedFn> {
    f.carrier.check(y)?;
    Ok(f.transformed(Transform::LeftTranslate(y.clone())))
}

/// `x ↦ f(xy)`.
pub fn right_translate(f: &BoundedFn, y: &Element) -> Result<BoundedFn> {
    f.carrier.check(y)?;
    Ok(f.transformed(Transform::RightTranslate(y.clone())))
}

/// `x ↦ f(x) − c`.
pub fn shift(f: &BoundedFn, c: Complex64) -> BoundedFn {
    f.transformed(Transform::Shift(c))
}

/// Largest modulus over the window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupNorm {
    pub value: f64,
    pub witness: Option<String>,
}

pub fn sup_norm_window(f: &BoundedFn) -> Result<SupNorm> {
    let points = f.carrier.window_elements();
    let s: Supremum = sup_scan(points.len(), |i| {
        f.evaluate(&points[i]).map(|v| Some(v.norm()))
    })?;
    Ok(SupNorm {
        value: s.value,
        witness: s.index.map(|i| f.carrier.label(&points[i])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carrier::bundled;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn z(v: i64) -> Element {
        Element::Lattice(vec![v])
    }

    fn line(window: i64) -> Arc<Carrier> {
        Arc::new(bundled::lattice(1, window, 4 * window))
    }

    fn quad_plus_linear(carrier: Arc<Carrier>) -> BoundedFn {
        BoundedFn::oracle(
            carrier,
            Oracle {
                linear: vec![c(1.0, 0.0)],
                constant: c(0.0, 0.0),
                quadratic: Some(vec![vec![c(1.0, 0.0)]]),
                noise: None,
            },
        )
        .unwrap()
    }

    #[test]
    fn constants_and_affine_oracles() {
        let l = line(4);
        let five = BoundedFn::constant(Arc::clone(&l), c(5.0, 0.0)).unwrap();
        assert_eq!(five.evaluate(&z(-3)).unwrap(), c(5.0, 0.0));
        let s3 = Arc::new(bundled::s3());
        let k = BoundedFn::constant(Arc::clone(&s3), c(5.0, 0.0)).unwrap();
        assert_eq!(k.evaluate(&Element::Finite(4)).unwrap(), c(5.0, 0.0));

        let f = BoundedFn::oracle(l, Oracle::affine(vec![c(2.0, 0.0)], c(5.0, 0.0))).unwrap();
        assert_eq!(f.evaluate(&z(3)).unwrap(), c(11.0, 0.0));
    }

    #[test]
    fn parity_noise_formula() {
        let f = BoundedFn::oracle(
            line(4),
            Oracle {
                noise: Some(Noise::parity(0.1)),
                ..Oracle::affine(vec![c(2.0, 0.0)], c(5.0, 0.0))
            },
        )
        .unwrap();
        assert_eq!(f.evaluate(&z(4)).unwrap(), c(2.0 * 4.0 + 5.0 + 0.1, 0.0));
        assert_eq!(f.evaluate(&z(3)).unwrap(), c(2.0 * 3.0 + 5.0 - 0.1, 0.0));
    }

    #[test]
    fn odd_function_has_zero_even_part() {
        let l = line(6);
        let f = BoundedFn::oracle(
            Arc::clone(&l),
            Oracle::affine(vec![c(1.0, 0.0)], c(0.0, 0.0)),
        )
        .unwrap();
        let e = even_part(&f);
        let o = odd_part(&f);
        for x in l.window_elements() {
            assert_eq!(e.evaluate(&x).unwrap(), c(0.0, 0.0));
            assert_eq!(o.evaluate(&x).unwrap(), f.evaluate(&x).unwrap());
        }
    }

    #[test]
    fn constant_has_zero_odd_part() {
        for carrier in [Arc::new(bundled::q8()), line(3)] {
            let f = BoundedFn::constant(Arc::clone(&carrier), c(3.0, -1.5)).unwrap();
            for x in carrier.window_elements() {
                assert_eq!(even_part(&f).evaluate(&x).unwrap(), c(3.0, -1.5));
                assert_eq!(odd_part(&f).evaluate(&x).unwrap(), c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn quadratic_plus_linear_splits() {
        let l = line(8);
        let f = quad_plus_linear(Arc::clone(&l));
        for x in l.window_elements() {
            let t = x.coords().unwrap()[0] as f64;
            assert_eq!(even_part(&f).evaluate(&x).unwrap(), c(t * t, 0.0));
            assert_eq!(odd_part(&f).evaluate(&x).unwrap(), c(t, 0.0));
        }
    }

    #[test]
    fn translates() {
        let l = line(5);
        let f = quad_plus_linear(Arc::clone(&l));
        let e = l.neutral();
        let same = left_translate(&e, &f).unwrap();
        for x in l.window_elements() {
            assert_eq!(same.evaluate(&x).unwrap(), f.evaluate(&x).unwrap());
            let lt = left_translate(&z(3), &f).unwrap();
            let rt = right_translate(&f, &z(3)).unwrap();
            let moved = l.compose(&x, &z(3)).unwrap();
            assert_eq!(lt.evaluate(&x).unwrap(), f.evaluate(&moved).unwrap());
            assert_eq!(rt.evaluate(&x).unwrap(), f.evaluate(&moved).unwrap());
        }

        let s3 = Arc::new(bundled::s3());
        let values: Vec<Complex64> = (0..6).map(|i| c(i as f64, 0.0)).collect();
        let g = BoundedFn::table(Arc::clone(&s3), values).unwrap();
        let t12 = s3.parse_label("(12)").unwrap();
        let t13 = s3.parse_label("(13)").unwrap();
        let c132 = s3.parse_label("(132)").unwrap();
        let lt = left_translate(&t12, &g).unwrap();
        assert_eq!(lt.evaluate(&t13).unwrap(), g.evaluate(&c132).unwrap());
        // right translate differs on a nonabelian group: (13)(12) = (123)
        let rt = right_translate(&g, &t12).unwrap();
        let c123 = s3.parse_label("(123)").unwrap();
        assert_eq!(rt.evaluate(&t13).unwrap(), g.evaluate(&c123).unwrap());
    }

    #[test]
    fn window_tables_refuse_to_extrapolate() {
        let l = line(3);
        let f = BoundedFn::tabulate(Arc::clone(&l), |x| {
            Ok(c(x.coords().unwrap()[0] as f64, 0.0))
        })
        .unwrap();
        assert_eq!(f.evaluate(&z(-3)).unwrap(), c(-3.0, 0.0));
        assert!(matches!(
            f.evaluate(&z(4)),
            Err(JensenError::OutOfDomain(_))
        ));
        let shifted = left_translate(&z(1), &f).unwrap();
        assert!(shifted.evaluate(&z(3)).is_err());
        assert_eq!(shifted.evaluate(&z(2)).unwrap(), c(3.0, 0.0));
    }

    #[test]
    fn tables_reject_bad_shapes_and_values() {
        let s3 = Arc::new(bundled::s3());
        assert!(BoundedFn::table(Arc::clone(&s3), vec![c(0.0, 0.0); 5]).is_err());
        let mut v = vec![c(0.0, 0.0); 6];
        v[2] = c(f64::NAN, 0.0);
        assert!(matches!(
            BoundedFn::table(Arc::clone(&s3), v),
            Err(JensenError::NonFinite(_))
        ));
        assert!(BoundedFn::oracle(s3, Oracle::affine(vec![], c(0.0, 0.0))).is_err());
        assert!(BoundedFn::oracle(line(2), Oracle::affine(vec![], c(0.0, 0.0))).is_err());
        assert!(BoundedFn::table(line(2), vec![]).is_err());
    }

    #[test]
    fn sup_norms() {
        let l = line(4);
        let five = BoundedFn::constant(Arc::clone(&l), c(5.0, 0.0)).unwrap();
        assert_eq!(sup_norm_window(&five).unwrap().value, 5.0);
        let zero = BoundedFn::constant(Arc::clone(&l), c(0.0, 0.0)).unwrap();
        let s = sup_norm_window(&zero).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.witness.as_deref(), Some("-4"));
        let noise = BoundedFn::oracle(
            l,
            Oracle {
                noise: Some(Noise::parity(0.1)),
                ..Oracle::affine(vec![c(0.0, 0.0)], c(0.0, 0.0))
            },
        )
        .unwrap();
        assert_eq!(sup_norm_window(&noise).unwrap().value, 0.1);
    }

    #[test]
    fn seeded_noise_is_bounded_and_deterministic() {
        let l = Arc::new(bundled::lattice(2, 6, 8));
        let make = |seed| {
            BoundedFn::oracle(
                Arc::clone(&l),
                Oracle {
                    noise: Some(Noise::seeded_uniform(0.05, seed)),
                    ..Oracle::affine(vec![c(0.0, 0.0); 2], c(0.0, 0.0))
                },
            )
            .unwrap()
        };
        let (f, g, h) = (make(7), make(7), make(8));
        let mut differs = false;
        for x in l.window_elements() {
            let v = f.evaluate(&x).unwrap();
            assert!(v.norm() <= 0.05);
            assert_eq!(v.re.to_bits(), g.evaluate(&x).unwrap().re.to_bits());
            assert_eq!(v.im.to_bits(), g.evaluate(&x).unwrap().im.to_bits());
            differs |= v != h.evaluate(&x).unwrap();
        }
        assert!(differs);
    }
}
