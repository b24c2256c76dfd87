//! One-dimensional adaptive quadrature on top of the double-exponential rule.
//!
//! The tanh-sinh rule copes with integrable endpoint singularities by itself;
//! when its own error estimate misses the target the interval is bisected.

use std::cell::RefCell;

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 12;

/// Integral of `f` over `[a, b]` with absolute error target `tol`.
/// Returns the value and the accumulated error estimate.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    if !(tol > 0.0) {
        return Err(Error::config("quadrature tolerance must be positive"));
    }
    let whole = de(&f, a, b, tol);
    let (v, e) = refine(&f, a, b, tol, whole, 0);
    if e > tol {
        return Err(Error::Accuracy {
            requested: tol,
            achieved: e,
        });
    }
    Ok((v, e))
}

fn de(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let out = quadrature::double_exponential::integrate(f, a, b, tol);
    (out.integral, out.error_estimate)
}

/// The rule's own estimate is conservative near endpoint singularities, so
/// the gap between the whole-interval value and the sum of its halves also
/// counts as an error estimate.
fn refine(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> (f64, f64) {
    if whole.1 <= tol || depth >= MAX_DEPTH {
        return whole;
    }
    let m = 0.5 * (a + b);
    let left = de(f, a, m, 0.5 * tol);
    let right = de(f, m, b, 0.5 * tol);
    let sum = left.0 + right.0;
    let gap = (whole.0 - sum).abs();
    if gap <= tol {
        return (sum, gap.min(left.1 + right.1));
    }
    let (l, el) = refine(f, a, m, 0.5 * tol, left, depth + 1);
    let (r, er) = refine(f, m, b, 0.5 * tol, right, depth + 1);
    (l + r, el + er)
}

/// Collects the first error raised inside a nested integrand, where the
/// closure signature cannot return a `Result`.
#[derive(Default)]
pub(crate) struct ErrorSlot(RefCell<Option<Error>>);

impl ErrorSlot {
    pub(crate) fn unwrap_or_record(&self, r: Result<(f64, f64)>) -> f64 {
        match r {
            Ok((v, _)) => v,
            Err(e) => {
                self.0.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    }

    pub(crate) fn check(self) -> Result<()> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}
