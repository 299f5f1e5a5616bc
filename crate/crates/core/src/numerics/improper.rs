use super::quadrature::integrate;
use super::{NumericsError, QuadResult};

/// Doublings of the mapped range that must each grow the partial integral
/// before it is called divergent.
const DIVERGENCE_RUN: usize = 8;

/// Which way the mapped coordinate runs away from `x`.
#[derive(Clone, Copy)]
enum Direction {
    Lower,
    Upper,
}

/// Change of variables `t ∈ [0, ∞) → y`, returning `(y, dy/dt magnitude)`.
struct Map {
    x: f64,
    end: f64,
    direction: Direction,
    scale: f64,
}

impl Map {
    fn new(end: f64, x: f64, direction: Direction) -> Self {
        Map { x, end, direction, scale: x.abs().max(1.0) }
    }

    fn point(&self, t: f64) -> (f64, f64) {
        match (self.end.is_finite(), self.direction) {
            // Geometric approach to a finite endpoint: y − end = (x − end)·e^{−t}.
            (true, _) => {
                let y = self.end + (self.x - self.end) * (-t).exp();
                // Use the offset actually represented by y so g stays consistent.
                (y, (y - self.end).abs())
            }
            (false, Direction::Lower) => {
                let e = t.exp();
                (self.x - self.scale * (e - 1.0), self.scale * e)
            }
            (false, Direction::Upper) => {
                let e = t.exp();
                (self.x + self.scale * (e - 1.0), self.scale * e)
            }
        }
    }

    /// Largest useful `t`: beyond it the mapped point no longer moves.
    fn t_max(&self) -> f64 {
        if self.end.is_finite() {
            let span = (self.x - self.end).abs();
            // Offsets below ~2^-40·|end| are too coarsely represented to integrate.
            let floor = if self.end == 0.0 { 1e-300 } else { self.end.abs() * 2f64.powi(-40) };
            (span / floor).ln().max(1.0)
        } else {
            700.0
        }
    }
}

fn improper(f: &mut dyn FnMut(f64) -> f64, map: Map, abs_tol: f64, rel_tol: f64) -> Result<QuadResult, NumericsError> {
    let t_max = map.t_max();
    let growth_tol = if rel_tol > 0.0 { rel_tol } else { abs_tol }.min(1e-2);
    let mut g = |t: f64| {
        let (y, jac) = map.point(t);
        let v = f(y);
        // f may be infinite exactly where the Jacobian vanishes.
        if jac == 0.0 {
            0.0
        } else {
            v * jac
        }
    };

    let mut sum = 0.0;
    let mut err = 0.0;
    let mut subdivisions = 0;
    let mut lo = 0.0;
    let mut hi: f64 = 1.0;
    let mut growth_run = 0;
    let mut prev_increment = f64::NAN;

    loop {
        hi = hi.min(t_max);
        // A relative floor keeps huge chunks of a divergent integrand resolvable.
        let chunk_rel = (rel_tol / 4.0).max(64.0 * f64::EPSILON);
        let chunk = match integrate(&mut g, lo, hi, abs_tol / 16.0, chunk_rel) {
            Ok(r) => r,
            // Overflow towards the open end, or after sustained growth, is
            // read as divergence; NaN stays an evaluation error.
            Err(NumericsError::NonFinite { x }) if growth_run > 0 || g(x).is_infinite() => {
                return Err(NumericsError::Divergent { partial: sum });
            }
            Err(NumericsError::NonFinite { x }) => {
                return Err(NumericsError::NonFinite { x: map.point(x).0 });
            }
            Err(e) => return Err(e),
        };
        subdivisions += chunk.subdivisions;
        let old = sum;
        sum += chunk.value;
        err += chunk.error_estimate;
        let tol_eff = abs_tol.max(rel_tol * sum.abs());

        let increment = chunk.value.abs();
        let grew = sum.abs() > old.abs() * (1.0 + 10.0 * growth_tol) && lo > 0.0;
        let sustained = !(prev_increment > 0.0) || increment >= 0.5 * prev_increment;
        if grew && sustained {
            growth_run += 1;
        } else if lo > 0.0 {
            growth_run = 0;
        }
        prev_increment = increment;
        if growth_run >= DIVERGENCE_RUN {
            return Err(NumericsError::Divergent { partial: sum });
        }

        // Tail past `hi` bounded by an exponential fit through g(lo), g(hi).
        let g_hi = g(hi).abs();
        let g_lo = g(lo.max(0.5 * hi)).abs();
        if !g_hi.is_finite() {
            return Err(NumericsError::Divergent { partial: sum });
        }
        let tail = if g_hi == 0.0 {
            0.0
        } else if g_lo > g_hi {
            let rate = (g_lo / g_hi).ln() / (hi - lo.max(0.5 * hi));
            g_hi / rate
        } else {
            f64::INFINITY
        };
        if g_hi < 1e-3 * tol_eff && tail <= 0.1 * tol_eff {
            err += tail;
            return Ok(QuadResult { value: sum, error_estimate: err, subdivisions: subdivisions.max(1) });
        }
        if hi >= t_max {
            // Nothing left to resolve in floating point.
            if growth_run > 0 && tail.is_infinite() {
                return Err(NumericsError::Divergent { partial: sum });
            }
            if tail.is_finite() && tail <= tol_eff {
                err += tail;
                return Ok(QuadResult { value: sum, error_estimate: err, subdivisions: subdivisions.max(1) });
            }
            return Err(NumericsError::NonConvergence { value: sum, error_estimate: err + tail });
        }
        lo = hi;
        hi *= 2.0;
    }
}

fn check_args(lower: f64, x: f64, tol: f64) -> Result<(), NumericsError> {
    if !(tol > 0.0) || !x.is_finite() || !(lower < x) || lower.is_nan() {
        return Err(NumericsError::InvalidInput(format!("need lower < x finite and tol > 0, got {lower}, {x}, {tol}")));
    }
    Ok(())
}

/// `∫_lower^x f(y) dy` where `lower` may be `-∞` or a singular finite point.
///
/// The range is mapped onto `t ∈ [0, ∞)` (geometric approach to a finite
/// endpoint, exponential stretch for an infinite one) and integrated in
/// doubling chunks. Returns `Divergent` when the partial integral keeps
/// growing over eight consecutive doublings; that verdict is a heuristic.
pub fn improper_lower_integral<F>(mut f: F, lower: f64, x: f64, tol: f64) -> Result<QuadResult, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    check_args(lower, x, tol)?;
    improper(&mut f, Map::new(lower, x, Direction::Lower), tol, 0.0)
}

/// `∫_x^upper f(y) dy`, the mirror image of [`improper_lower_integral`].
pub fn improper_upper_integral<F>(mut f: F, x: f64, upper: f64, tol: f64) -> Result<QuadResult, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    if !(tol > 0.0) || !x.is_finite() || !(x < upper) {
        return Err(NumericsError::InvalidInput(format!("need x < upper and tol > 0, got {x}, {upper}, {tol}")));
    }
    improper(&mut f, Map::new(upper, x, Direction::Upper), tol, 0.0)
}

/// Relative-tolerance variant used where integrands span many decades.
pub(crate) fn improper_lower_rel(
    f: &mut dyn FnMut(f64) -> f64,
    lower: f64,
    x: f64,
    rel_tol: f64,
) -> Result<QuadResult, NumericsError> {
    check_args(lower, x, rel_tol)?;
    improper(f, Map::new(lower, x, Direction::Lower), f64::MIN_POSITIVE, rel_tol)
}

pub(crate) fn improper_upper_rel(
    f: &mut dyn FnMut(f64) -> f64,
    x: f64,
    upper: f64,
    rel_tol: f64,
) -> Result<QuadResult, NumericsError> {
    if !(rel_tol > 0.0) || !x.is_finite() || !(x < upper) {
        return Err(NumericsError::InvalidInput(format!("need x < upper, got {x}, {upper}")));
    }
    improper(f, Map::new(upper, x, Direction::Upper), f64::MIN_POSITIVE, rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_from_minus_infinity() {
        let r = improper_lower_integral(|y: f64| (2.0 * 0.5 * y).exp(), f64::NEG_INFINITY, 0.0, 1e-10).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn singular_finite_endpoint() {
        // Oracle: sqrt(pi)·erfi(1)/e.
        let r = improper_lower_integral(|y: f64| y.powf(-0.5) * (y - 1.0).exp(), 0.0, 1.0, 1e-10).unwrap();
        assert!((r.value - 1.076_159_013_825_5).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn log_divergence() {
        let r = improper_lower_integral(|y| 1.0 / y, 0.0, 1.0, 1e-8);
        assert!(matches!(r, Err(NumericsError::Divergent { .. })), "{r:?}");
    }

    #[test]
    fn constant_to_minus_infinity_diverges() {
        let r = improper_lower_integral(|_| 1.0, f64::NEG_INFINITY, 0.0, 1e-8);
        assert!(matches!(r, Err(NumericsError::Divergent { .. })), "{r:?}");
    }

    #[test]
    fn nonzero_finite_endpoint() {
        // ∫_2^3 (y-2)^{-1/2} dy = 2. Resolution near a nonzero endpoint is
        // limited by the spacing of floats around it.
        let r = improper_lower_integral(|y: f64| (y - 2.0).powf(-0.5), 2.0, 3.0, 1e-5).unwrap();
        assert!((r.value - 2.0).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn upper_power_law() {
        // ∫_1^∞ y^{-3} dy = 1/2
        let r = improper_upper_integral(|y: f64| y.powi(-3), 1.0, f64::INFINITY, 1e-10).unwrap();
        assert!((r.value - 0.5).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn upper_growth_diverges() {
        let r = improper_upper_integral(|y: f64| y.exp(), 0.0, f64::INFINITY, 1e-8);
        assert!(matches!(r, Err(NumericsError::Divergent { .. })), "{r:?}");
        let r = improper_upper_integral(|y: f64| 1.0 / y, 1.0, f64::INFINITY, 1e-8);
        assert!(matches!(r, Err(NumericsError::Divergent { .. })), "{r:?}");
    }

    #[test]
    fn relative_variant_handles_tiny_scales() {
        let mut f = |y: f64| 1e-200 * (3.0 * y).exp();
        let r = improper_lower_rel(&mut f, f64::NEG_INFINITY, 1.0, 1e-12).unwrap();
        let exact = 1e-200 * 3f64.exp() / 3.0;
        assert!(((r.value - exact) / exact).abs() < 1e-11, "{r:?}");
    }
}
