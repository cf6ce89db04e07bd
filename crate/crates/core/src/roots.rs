//! Bracketed scalar root finding on top of the `roots` crate's Brent solver.

use roots::{find_root_brent, Convergency, SearchError};

/// Stops when the bracket is narrower than `rel * |x|` (plus a tiny absolute
/// floor) or the residual is exactly representable as zero.
struct RelativeTolerance {
    rel: f64,
    abs: f64,
    max_iter: usize,
}

impl Convergency<f64> for RelativeTolerance {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }

    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        let scale = x1.abs().max(x2.abs());
        (x1 - x2).abs() <= self.rel * scale + self.abs
    }

    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter >= self.max_iter
    }
}

/// Finds a root of `f` inside `[lo, hi]` to relative tolerance `rel`.
pub(crate) fn brent<F>(lo: f64, hi: f64, rel: f64, f: F) -> Result<f64, SearchError>
where
    F: FnMut(f64) -> f64,
{
    let mut conv = RelativeTolerance {
        rel,
        abs: f64::MIN_POSITIVE,
        max_iter: 200,
    };
    find_root_brent(lo, hi, f, &mut conv)
}

pub(crate) fn describe(err: SearchError) -> String {
    match err {
        SearchError::NoBracketing => "bracket does not enclose a sign change".into(),
        SearchError::NoConvergency => "iteration limit reached".into(),
        SearchError::ZeroDerivative => "zero derivative".into(),
    }
}
