//! Deterministic parallel supremum scans.
//!
//! Every scan is a max-reduction over an index range. Ties resolve to the
//! smallest index and errors to the error at the smallest index, so the
//! result does not depend on how rayon splits the range.

use rayon::prelude::*;

use crate::error::{JensenError, Result};

/// Outcome of a scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Supremum {
    /// Largest value seen; 0 when nothing was evaluated.
    pub value: f64,
    /// Index attaining `value` (first in index order).
    pub index: Option<usize>,
    pub evaluated: usize,
    /// Indices whose term was undefined (e.g. outside a tabulated window).
    pub skipped: usize,
}

struct Acc {
    best: Option<(f64, usize)>,
    evaluated: usize,
    skipped: usize,
    error: Option<(usize, JensenError)>,
}

impl Acc {
    fn empty() -> Self {
        Acc {
            best: None,
            evaluated: 0,
            skipped: 0,
            error: None,
        }
    }

    fn push(mut self, i: usize, term: Result<Option<f64>>) -> Self {
        match term {
            Ok(Some(v)) => {
                self.evaluated += 1;
                self.best = better(self.best, Some((v, i)));
            }
            Ok(None) => self.skipped += 1,
            Err(e) => {
                if self.error.as_ref().is_none_or(|(j, _)| i < *j) {
                    self.error = Some((i, e));
                }
            }
        }
        self
    }

    fn merge(self, other: Self) -> Self {
        let error = match (self.error, other.error) {
            (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        Acc {
            best: better(self.best, other.best),
            evaluated: self.evaluated + other.evaluated,
            skipped: self.skipped + other.skipped,
            error,
        }
    }
}

fn better(a: Option<(f64, usize)>, b: Option<(f64, usize)>) -> Option<(f64, usize)> {
    match (a, b) {
        (Some(x), Some(y)) => {
            let take_y = y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) || (x.0.is_nan() && !y.0.is_nan());
            Some(if take_y { y } else { x })
        }
        (x, y) => x.or(y),
    }
}

/// Maximum of `term(i)` over `0..len`; `Ok(None)` terms are skipped and counted.
pub fn sup_scan<F>(len: usize, term: F) -> Result<Supremum>
where
    F: Fn(usize) -> Result<Option<f64>> + Sync,
{
    let acc = (0..len)
        .into_par_iter()
        .with_min_len(64)
        .fold(Acc::empty, |acc, i| acc.push(i, term(i)))
        .reduce(Acc::empty, Acc::merge);
    if let Some((_, e)) = acc.error {
        return Err(e);
    }
    Ok(Supremum {
        value: acc.best.map_or(0.0, |b| b.0),
        index: acc.best.map(|b| b.1),
        evaluated: acc.evaluated,
        skipped: acc.skipped,
    })
}

/// Turns an out-of-domain evaluation into a skipped term.
pub fn skip_out_of_domain(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(JensenError::OutOfDomain(_)) => Ok(None),
        Err(e) => Err(e),
    }
}
