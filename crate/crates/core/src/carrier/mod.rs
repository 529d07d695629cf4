//! Semigroups with neutral element and involution.
//!
//! Two kinds of carrier are supported: finite monoids given by a Cayley table
//! (groups among them get an exact uniform mean), and the integer lattices
//! ℤᵈ with addition, negation as involution, and centered Følner boxes.

pub mod bundled;
pub mod file;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{JensenError, Result};

/// A point of a carrier: an index into a finite table or an integer vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Finite(usize),
    Lattice(Vec<i64>),
}

impl Element {
    pub fn index(&self) -> Option<usize> {
        match self {
            Element::Finite(i) => Some(*i),
            Element::Lattice(_) => None,
        }
    }

    pub fn coords(&self) -> Option<&[i64]> {
        match self {
            Element::Finite(_) => None,
            Element::Lattice(v) => Some(v),
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Finite(i) => write!(f, "#{i}"),
            Element::Lattice(v) => write!(f, "{}", lattice_label(v)),
        }
    }
}

fn lattice_label(v: &[i64]) -> String {
    v.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
}

/// Which invariant mean the carrier can realize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanCapability {
    /// Uniform average over a finite group; translation invariant exactly.
    ExactUniform,
    /// Box averages over ℤᵈ; invariant up to a boundary fraction.
    Folner,
    /// Finite monoid that is not a group.
    None,
}

/// Finite monoid with involution, stored as a row-major Cayley table.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteCarrier {
    elements: Vec<String>,
    op: Vec<usize>,
    involution: Vec<usize>,
    neutral: usize,
    is_group: bool,
}

impl FiniteCarrier {
    /// Builds a carrier from labels, a square table of indices and an involution table.
    ///
    /// Only structural well-formedness is checked here (shape, index ranges,
    /// distinct labels). The algebraic axioms are the job of [`validate_carrier`].
    /// When `neutral` is `None` a two-sided identity is searched for.
    pub fn new(
        elements: Vec<String>,
        op: Vec<Vec<usize>>,
        involution: Vec<usize>,
        neutral: Option<usize>,
    ) -> Result<Self> {
        let n = elements.len();
        if n == 0 {
            return Err(JensenError::MalformedCarrier("no elements".into()));
        }
        for (i, label) in elements.iter().enumerate() {
            if elements[..i].contains(label) {
                return Err(JensenError::MalformedCarrier(format!(
                    "duplicate element label {label:?}"
                )));
            }
        }
        if op.len() != n || op.iter().any(|row| row.len() != n) {
            return Err(JensenError::MalformedCarrier(format!(
                "operation table must be {n}x{n}"
            )));
        }
        if involution.len() != n {
            return Err(JensenError::MalformedCarrier(format!(
                "involution table must have {n} entries"
            )));
        }
        let flat: Vec<usize> = op.into_iter().flatten().collect();
        if let Some(bad) = flat.iter().chain(&involution).find(|&&k| k >= n) {
            return Err(JensenError::MalformedCarrier(format!(
                "index {bad} out of range for {n} elements"
            )));
        }
        let neutral = match neutral {
            Some(e) if e < n => e,
            Some(e) => {
                return Err(JensenError::MalformedCarrier(format!(
                    "neutral index {e} out of range"
                )))
            }
            None => find_identity(n, &flat).ok_or(JensenError::NoNeutral)?,
        };
        let is_group = latin_square(n, &flat);
        Ok(FiniteCarrier {
            elements,
            op: flat,
            involution,
            neutral,
            is_group,
        })
    }

    /// Builds the table by evaluating `product` on every ordered pair.
    pub fn from_fn(
        elements: Vec<String>,
        product: impl Fn(usize, usize) -> usize,
        involution: impl Fn(usize) -> usize,
        neutral: Option<usize>,
    ) -> Result<Self> {
        let n = elements.len();
        let op = (0..n)
            .map(|x| (0..n).map(|y| product(x, y)).collect())
            .collect();
        let inv = (0..n).map(involution).collect();
        Self::new(elements, op, inv, neutral)
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.elements
    }

    pub fn neutral_index(&self) -> usize {
        self.neutral
    }

    pub fn is_group(&self) -> bool {
        self.is_group
    }

    #[inline]
    pub fn product(&self, x: usize, y: usize) -> usize {
        self.op[x * self.order() + y]
    }

    #[inline]
    pub fn sigma(&self, x: usize) -> usize {
        self.involution[x]
    }

    /// Rows of the Cayley table, for serialization.
    pub fn table_rows(&self) -> Vec<Vec<usize>> {
        self.op
            .chunks(self.order())
            .map(<[usize]>::to_vec)
            .collect()
    }

    pub fn involution_table(&self) -> &[usize] {
        &self.involution
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.elements.iter().position(|l| l == label)
    }
}

fn find_identity(n: usize, op: &[usize]) -> Option<usize> {
    (0..n).find(|&e| (0..n).all(|x| op[e * n + x] == x && op[x * n + e] == x))
}

fn latin_square(n: usize, op: &[usize]) -> bool {
    let is_perm = |entries: &mut dyn Iterator<Item = usize>| {
        let mut seen = vec![false; n];
        for k in entries {
            if std::mem::replace(&mut seen[k], true) {
                return false;
            }
        }
        true
    };
    (0..n).all(|r| is_perm(&mut (0..n).map(|c| op[r * n + c])))
        && (0..n).all(|c| is_perm(&mut (0..n).map(|r| op[r * n + c])))
}

/// The lattice ℤᵈ with an evaluation window and a largest Følner radius.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeCarrier {
    dim: usize,
    window_radius: i64,
    folner_max: i64,
}

impl LatticeCarrier {
    pub fn new(dim: usize, window_radius: i64, folner_max: i64) -> Result<Self> {
        if dim == 0 || window_radius <= 0 || folner_max <= 0 {
            return Err(JensenError::MalformedCarrier(
                "lattice dim, window and folner_max must be positive".into(),
            ));
        }
        if folner_max < window_radius {
            return Err(JensenError::MalformedCarrier(format!(
                "folner_max {folner_max} is smaller than the window radius {window_radius}"
            )));
        }
        Ok(LatticeCarrier {
            dim,
            window_radius,
            folner_max,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window_radius(&self) -> i64 {
        self.window_radius
    }

    pub fn folner_max(&self) -> i64 {
        self.folner_max
    }

    /// Lattice points of the box `[-r, r]^dim` in lexicographic order, first coordinate slowest.
    pub fn box_points(&self, r: i64) -> Vec<Element> {
        box_points(self.dim, r)
    }
}

pub(crate) fn box_points(dim: usize, r: i64) -> Vec<Element> {
    let side = (2 * r + 1) as usize;
    let total = side.pow(dim as u32);
    (0..total)
        .map(|mut i| {
            let mut v = vec![0i64; dim];
            for c in v.iter_mut().rev() {
                *c = (i % side) as i64 - r;
                i /= side;
            }
            Element::Lattice(v)
        })
        .collect()
}

/// Position of `coords` inside the box `[-r, r]^d` under the ordering of [`box_points`].
pub(crate) fn box_index(coords: &[i64], r: i64) -> Option<usize> {
    let side = 2 * r + 1;
    let mut idx: i64 = 0;
    for &c in coords {
        if c < -r || c > r {
            return None;
        }
        idx = idx * side + (c + r);
    }
    Some(idx as usize)
}

/// A semigroup with neutral element and involution.
#[derive(Clone, Debug, PartialEq)]
pub enum Carrier {
    Finite(FiniteCarrier),
    Lattice(LatticeCarrier),
}

impl Carrier {
    pub fn neutral(&self) -> Element {
        match self {
            Carrier::Finite(c) => Element::Finite(c.neutral),
            Carrier::Lattice(l) => Element::Lattice(vec![0; l.dim]),
        }
    }

    pub fn mean_capability(&self) -> MeanCapability {
        match self {
            Carrier::Finite(c) if c.is_group => MeanCapability::ExactUniform,
            Carrier::Finite(_) => MeanCapability::None,
            Carrier::Lattice(_) => MeanCapability::Folner,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Carrier::Finite(_))
    }

    pub fn check(&self, x: &Element) -> Result<()> {
        match (self, x) {
            (Carrier::Finite(c), Element::Finite(i)) if *i < c.order() => Ok(()),
            (Carrier::Lattice(l), Element::Lattice(v)) if v.len() == l.dim => Ok(()),
            _ => Err(JensenError::InvalidElement(format!(
                "{x} does not belong to this carrier"
            ))),
        }
    }

    /// The product `xy`.
    pub fn compose(&self, x: &Element, y: &Element) -> Result<Element> {
        self.check(x)?;
        self.check(y)?;
        match (self, x, y) {
            (Carrier::Finite(c), Element::Finite(i), Element::Finite(j)) => {
                Ok(Element::Finite(c.product(*i, *j)))
            }
            (Carrier::Lattice(_), Element::Lattice(a), Element::Lattice(b)) => a
                .iter()
                .zip(b)
                .map(|(p, q)| {
                    p.checked_add(*q)
                        .ok_or_else(|| JensenError::Overflow(format!("{x} + {y}")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Element::Lattice),
            _ => unreachable!("checked above"),
        }
    }

    /// The involution `σ(x)`.
    pub fn involute(&self, x: &Element) -> Result<Element> {
        self.check(x)?;
        match (self, x) {
            (Carrier::Finite(c), Element::Finite(i)) => Ok(Element::Finite(c.sigma(*i))),
            (Carrier::Lattice(_), Element::Lattice(v)) => v
                .iter()
                .map(|c| {
                    c.checked_neg()
                        .ok_or_else(|| JensenError::Overflow(format!("-({x})")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Element::Lattice),
            _ => unreachable!("checked above"),
        }
    }

    /// `x^(2^n)` by `n` repeated squarings.
    pub fn dyadic_power(&self, x: &Element, n: u32) -> Result<Element> {
        let mut acc = x.clone();
        for _ in 0..n {
            acc = self.compose(&acc, &acc)?;
        }
        self.check(&acc)?;
        Ok(acc)
    }

    /// Elements the suprema range over: the whole finite carrier, or the lattice window.
    pub fn window_elements(&self) -> Vec<Element> {
        match self {
            Carrier::Finite(c) => (0..c.order()).map(Element::Finite).collect(),
            Carrier::Lattice(l) => l.box_points(l.window_radius),
        }
    }

    pub fn window_pairs(&self) -> PairDomain {
        PairDomain::new(self.window_elements())
    }

    /// Centered Følner box of radius `k`.
    pub fn folner_set(&self, k: i64) -> Result<Vec<Element>> {
        match self {
            Carrier::Lattice(l) if k >= 1 && k <= l.folner_max => Ok(l.box_points(k)),
            Carrier::Lattice(l) => Err(JensenError::Capability(format!(
                "Følner radius {k} outside 1..={}",
                l.folner_max
            ))),
            Carrier::Finite(_) => Err(JensenError::Capability(
                "finite carriers have no Følner sequence".into(),
            )),
        }
    }

    pub fn label(&self, x: &Element) -> String {
        match (self, x) {
            (Carrier::Finite(c), Element::Finite(i)) if *i < c.order() => c.elements[*i].clone(),
            (_, Element::Lattice(v)) => lattice_label(v),
            (_, other) => other.to_string(),
        }
    }

    pub fn parse_label(&self, label: &str) -> Result<Element> {
        match self {
            Carrier::Finite(c) => c
                .index_of(label)
                .map(Element::Finite)
                .ok_or_else(|| JensenError::InvalidElement(format!("unknown label {label:?}"))),
            Carrier::Lattice(_) => {
                let coords = label
                    .split(',')
                    .map(|s| s.trim().parse::<i64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| {
                        JensenError::InvalidElement(format!("bad lattice label {label:?}"))
                    })?;
                let x = Element::Lattice(coords);
                self.check(&x)?;
                Ok(x)
            }
        }
    }

    /// A generator used to probe translation invariance of means.
    pub fn probe_generator(&self) -> Element {
        match self {
            Carrier::Finite(c) => Element::Finite(if c.neutral == 0 && c.order() > 1 {
                1
            } else {
                0
            }),
            Carrier::Lattice(l) => {
                let mut v = vec![0; l.dim];
                v[0] = 1;
                Element::Lattice(v)
            }
        }
    }
}

/// `|F Δ (F + t)|` for the centered box `F = [-k, k]^d`.
pub fn box_symmetric_difference(k: i64, shift: &[i64]) -> u128 {
    let side = (2 * k + 1) as u128;
    let full = side.pow(shift.len() as u32);
    let overlap: u128 = shift
        .iter()
        .map(|t| side.saturating_sub(t.unsigned_abs() as u128))
        .product();
    2 * (full - overlap)
}

/// Ordered pairs of window elements, `x` outer and `y` inner.
///
/// Pair `i` is `(elements[i / w], elements[i % w])` with `w` the window size,
/// so any split of `0..len()` into ranges is a deterministic partition.
#[derive(Clone, Debug)]
pub struct PairDomain {
    elements: Vec<Element>,
}

impl PairDomain {
    pub fn new(elements: Vec<Element>) -> Self {
        PairDomain { elements }
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len() * self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn pair(&self, i: usize) -> (&Element, &Element) {
        let w = self.elements.len();
        (&self.elements[i / w], &self.elements[i % w])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Element, &Element)> + '_ {
        (0..self.len()).map(move |i| self.pair(i))
    }

    /// Splits the index range into `parts` contiguous, disjoint chunks.
    pub fn chunks(&self, parts: usize) -> Vec<Range<usize>> {
        let parts = parts.max(1);
        let len = self.len();
        let step = len.div_ceil(parts).max(1);
        (0..len)
            .step_by(step)
            .map(|s| s..(s + step).min(len))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Neutral,
    Involutive,
    Associativity,
    AntiHomomorphism,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub axiom: Axiom,
    /// Element labels witnessing the failure (one, two or three of them).
    pub witness: Vec<String>,
    /// The same witness as indices into the element list.
    pub witness_indices: Vec<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub kind: String,
    pub is_group: bool,
    pub mean_capability: MeanCapability,
    pub violation: Option<Violation>,
}

/// Exhaustively checks the monoid-with-involution axioms.
///
/// Axioms are checked in the order neutral, involutive, associativity,
/// anti-homomorphism; the first failing one is reported with the
/// lexicographically first witness.
pub fn validate_carrier(c: &Carrier) -> ValidationReport {
    let fc = match c {
        Carrier::Lattice(_) => {
            return ValidationReport {
                pass: true,
                kind: "lattice".into(),
                is_group: true,
                mean_capability: MeanCapability::Folner,
                violation: None,
            }
        }
        Carrier::Finite(fc) => fc,
    };
    let violation = first_violation(fc);
    ValidationReport {
        pass: violation.is_none(),
        kind: "finite".into(),
        is_group: fc.is_group,
        mean_capability: c.mean_capability(),
        violation,
    }
}

fn first_violation(c: &FiniteCarrier) -> Option<Violation> {
    let n = c.order();
    let e = c.neutral;
    let label = |i: usize| c.elements[i].clone();
    let make = |axiom, idx: Vec<usize>, detail: String| Violation {
        axiom,
        witness: idx.iter().map(|&i| label(i)).collect(),
        witness_indices: idx,
        detail,
    };

    if let Some(x) = (0..n).find(|&x| c.product(e, x) != x || c.product(x, e) != x) {
        return Some(make(
            Axiom::Neutral,
            vec![x],
            format!(
                "declared neutral {:?} is not a two-sided identity at {:?}; carrier has no neutral element{}",
                label(e),
                label(x),
                match find_identity(n, &c.op) {
                    Some(id) => format!(" other than {:?}", label(id)),
                    None => String::new(),
                }
            ),
        ));
    }
    if let Some(x) = (0..n).find(|&x| c.sigma(c.sigma(x)) != x) {
        return Some(make(
            Axiom::Involutive,
            vec![x],
            format!("σ(σ({})) = {}", label(x), label(c.sigma(c.sigma(x)))),
        ));
    }
    for x in 0..n {
        for y in 0..n {
            let xy = c.product(x, y);
            for z in 0..n {
                let left = c.product(xy, z);
                let right = c.product(x, c.product(y, z));
                if left != right {
                    return Some(make(
                        Axiom::Associativity,
                        vec![x, y, z],
                        format!(
                            "({}{}){} = {} but {}({}{}) = {}",
                            label(x),
                            label(y),
                            label(z),
                            label(left),
                            label(x),
                            label(y),
                            label(z),
                            label(right)
                        ),
                    ));
                }
            }
        }
    }
    for x in 0..n {
        for y in 0..n {
            let lhs = c.sigma(c.product(x, y));
            let rhs = c.product(c.sigma(y), c.sigma(x));
            if lhs != rhs {
                return Some(make(
                    Axiom::AntiHomomorphism,
                    vec![x, y],
                    format!(
                        "σ({}{}) = {} but σ({})σ({}) = {}",
                        label(x),
                        label(y),
                        label(lhs),
                        label(y),
                        label(x),
                        label(rhs)
                    ),
                ));
            }
        }
    }
    None
}
