use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::gauss::{G7_WEIGHTS, GK15_NODES, GK15_WEIGHTS};
use super::{NumericsError, QuadResult, EVAL_BUDGET};

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn checked<F: FnMut(f64) -> f64>(f: &mut F, x: f64) -> Result<f64, NumericsError> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(NumericsError::NonFinite { x })
    }
}

/// One Gauss–Kronrod 15 panel with the QUADPACK error heuristic.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Segment, NumericsError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = checked(f, center)?;
    let mut res_g = fc * G7_WEIGHTS[3];
    let mut res_k = fc * GK15_WEIGHTS[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * GK15_NODES[j];
        let f1 = checked(f, center - dx)?;
        let f2 = checked(f, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += GK15_WEIGHTS[j] * (f1 + f2);
        res_abs += GK15_WEIGHTS[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += G7_WEIGHTS[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = GK15_WEIGHTS[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += GK15_WEIGHTS[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    res_abs *= scale;
    res_asc *= scale;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Segment { a, b, value: res_k * half, error: err })
}

/// Globally adaptive Gauss–Kronrod integration over a finite interval.
///
/// Stops once the summed error estimate is below `max(abs_tol, rel_tol·|value|)`.
/// Nodes are strictly interior, so integrable endpoint singularities are fine.
pub(crate) fn integrate<F>(f: &mut F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<QuadResult, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || !(a < b) {
        return Err(NumericsError::InvalidInput(format!("need finite a < b, got [{a}, {b}]")));
    }
    if !(abs_tol >= 0.0 && rel_tol >= 0.0) || (abs_tol == 0.0 && rel_tol == 0.0) {
        return Err(NumericsError::InvalidInput("tolerance must be positive".into()));
    }
    let min_width = (b - a) * 2f64.powi(-200);
    let first = gk15(f, a, b)?;
    let mut evals = 15;
    let mut heap = BinaryHeap::new();
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    // Segments too narrow to split keep their contribution here.
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    let mut subdivisions = 1;

    loop {
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target {
            // Running sums drift; confirm against a fresh sum before stopping.
            let (v, e) = heap.iter().fold((frozen_value, frozen_error), |(v, e), s| (v + s.value, e + s.error));
            value = v;
            error = e;
            if error <= abs_tol.max(rel_tol * value.abs()) {
                return Ok(QuadResult { value, error_estimate: error, subdivisions });
            }
        }
        let Some(worst) = heap.pop() else {
            break;
        };
        let mid = 0.5 * (worst.a + worst.b);
        if worst.b - worst.a < min_width || mid <= worst.a || mid >= worst.b {
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        if evals + 30 > EVAL_BUDGET {
            heap.push(worst);
            break;
        }
        let left = gk15(f, worst.a, mid)?;
        let right = gk15(f, mid, worst.b)?;
        evals += 30;
        subdivisions += 1;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    let (value, error) = heap.iter().fold((frozen_value, frozen_error), |(v, e), s| (v + s.value, e + s.error));
    if error <= abs_tol.max(rel_tol * value.abs()) {
        Ok(QuadResult { value, error_estimate: error, subdivisions })
    } else {
        Err(NumericsError::NonConvergence { value, error_estimate: error })
    }
}

/// Adaptive quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_quadrature<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(NumericsError::InvalidInput(format!("tol must be positive, got {tol}")));
    }
    integrate(&mut f, a, b, tol, 0.0)
}
