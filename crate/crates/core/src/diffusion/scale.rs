use serde::Serialize;

use super::{DiffusionError, DiffusionSpec};
use crate::numerics::gauss::{GL4_NODES, GL4_WEIGHTS, GL8_NODES, GL8_WEIGHTS};
use crate::numerics::{improper_lower_rel, integrate, NumericsError};

/// Cached node of the scale function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub x: f64,
    /// `B(x) = ∫_w^x 2b/σ²`.
    pub big_b: f64,
    /// `log s(x)`.
    pub log_s: f64,
}

impl GridPoint {
    pub fn s(&self) -> f64 {
        self.log_s.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSpeedOptions {
    /// Relative accuracy target for `s` and absolute target for `B`.
    pub tol: f64,
    /// Top of the cached grid. Evaluation above it still works but
    /// re-integrates from the last node on every call.
    pub upper: Option<f64>,
}

impl ScaleSpeedOptions {
    pub fn new(tol: f64) -> Self {
        ScaleSpeedOptions { tol, upper: None }
    }
}

/// Lowest cached node sits this fraction of `w − ℓ` above a finite `ℓ`.
const FLOOR_FRACTION: f64 = 1e-12;
/// Default grid top above a finite `ℓ`, as a multiple of `w − ℓ`.
const CEILING_FACTOR: f64 = 1e4;
/// Half-width of the grid around `w` when `ℓ = −∞`, in units of the scale.
const INFINITE_HALF_WIDTH: f64 = 64.0;
const MAX_SEGMENTS: usize = 500_000;

/// Scale function `s`, its density `s' = e^{−B}` and the speed density
/// `m' = 2σ^{−2}e^{B}` of a diffusion, normalized so that `s(ℓ+) = 0`.
///
/// `B` and `log s` are cached on a grid. Between nodes the value is
/// re-integrated from the node below with a fixed Gauss rule, so `s` is
/// strictly increasing and continuous across nodes. Nothing is stored as
/// `e^B`, so strongly drifted models do not overflow.
#[derive(Debug, Clone)]
pub struct ScaleSpeed {
    spec: DiffusionSpec,
    tol: f64,
    threshold: f64,
    grid: Vec<GridPoint>,
}

/// `(∫_a^x β, ∫_a^x e^{−∫_a^y β} dy)` by an 8-point outer rule whose inner
/// integrals are accumulated with 4-point rules between consecutive nodes.
fn local_increment(spec: &DiffusionSpec, a: f64, x: f64) -> (f64, f64) {
    if x == a {
        return (0.0, 0.0);
    }
    let half = 0.5 * (x - a);
    let mid = 0.5 * (x + a);
    let panel = |lo: f64, hi: f64| {
        let h = 0.5 * (hi - lo);
        let m = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for k in 0..4 {
            acc += GL4_WEIGHTS[k] * spec.beta(m + h * GL4_NODES[k]);
        }
        acc * h
    };
    let mut cum = 0.0;
    let mut prev = a;
    let mut outer = 0.0;
    for k in 0..8 {
        let node = mid + half * GL8_NODES[k];
        cum += panel(prev, node);
        outer += GL8_WEIGHTS[k] * (-cum).exp();
        prev = node;
    }
    cum += panel(prev, x);
    (cum, outer * half)
}

/// `∫_y^{anchor} β` for `y < anchor`, in a coordinate that keeps singular
/// behaviour at `ℓ` smooth.
pub(super) fn integral_beta_down(spec: &DiffusionSpec, y: f64, anchor: f64, tol: f64) -> Result<f64, NumericsError> {
    if y >= anchor {
        return Ok(0.0);
    }
    let ell = spec.ell;
    if ell.is_finite() {
        let span = anchor - ell;
        let u = (span / (y - ell)).ln();
        let mut g = |t: f64| {
            let p = ell + span * (-t).exp();
            spec.beta(p) * (p - ell)
        };
        Ok(integrate(&mut g, 0.0, u, tol, tol)?.value)
    } else {
        let l = spec.scale();
        let u = ((anchor - y) / l).ln_1p();
        let mut g = |t: f64| {
            let e = t.exp();
            spec.beta(anchor - l * (e - 1.0)) * l * e
        };
        Ok(integrate(&mut g, 0.0, u, tol, tol)?.value)
    }
}

/// `∫_{anchor}^y β` for `y > anchor`, stretched logarithmically.
pub(super) fn integral_beta_up(spec: &DiffusionSpec, anchor: f64, y: f64, tol: f64) -> Result<f64, NumericsError> {
    if y <= anchor {
        return Ok(0.0);
    }
    let l = anchor.abs().max(spec.scale());
    let u = ((y - anchor) / l).ln_1p();
    let mut g = |t: f64| {
        let e = t.exp();
        spec.beta(anchor + l * (e - 1.0)) * l * e
    };
    Ok(integrate(&mut g, 0.0, u, tol, tol)?.value)
}

#[derive(Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    d_b: f64,
    inc: f64,
}

impl ScaleSpeed {
    pub fn spec(&self) -> &DiffusionSpec {
        &self.spec
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Cached `(x, B, log s)` nodes, ascending in `x`.
    pub fn grid(&self) -> &[GridPoint] {
        &self.grid
    }

    pub fn ell(&self) -> f64 {
        self.spec.ell
    }

    fn nonfinite(what: &'static str, x: f64) -> DiffusionError {
        DiffusionError::NonFinite { what, x }
    }

    /// Natural step away from `x`: geometric near a finite endpoint, linear
    /// otherwise, and never much more than one unit of `B`.
    fn natural_step(&self, x: f64, upward: bool) -> f64 {
        let mut h = if self.spec.ell.is_finite() {
            let d = x - self.spec.ell;
            if upward {
                d * (2f64.powf(0.25) - 1.0)
            } else {
                d * (1.0 - 2f64.powf(-0.25))
            }
        } else {
            0.25 * self.spec.scale()
        };
        let beta = self.spec.beta(x).abs();
        if beta.is_finite() && beta * h > 1.0 {
            h = 1.0 / beta;
        }
        h
    }

    fn checked_increment(&self, lo: f64, hi: f64) -> Result<(f64, f64), DiffusionError> {
        let (d_b, inc) = local_increment(&self.spec, lo, hi);
        if d_b.is_finite() && inc.is_finite() {
            Ok((d_b, inc))
        } else {
            let bad = [lo, 0.5 * (lo + hi), hi].into_iter().find(|&y| !self.spec.beta(y).is_finite()).unwrap_or(lo);
            Err(Self::nonfinite("2b/sigma^2", bad))
        }
    }

    /// One segment `[lo, hi]`, accepted once a two-panel evaluation agrees.
    fn segment(&self, lo: f64, hi: f64) -> Result<Option<Segment>, DiffusionError> {
        let (d_b, inc) = self.checked_increment(lo, hi)?;
        let mid = 0.5 * (lo + hi);
        let (d1, i1) = self.checked_increment(lo, mid)?;
        let (d2, i2) = self.checked_increment(mid, hi)?;
        let d_fine = d1 + d2;
        let i_fine = i1 + (-d1).exp() * i2;
        let ok = (d_b - d_fine).abs() <= self.threshold * d_fine.abs().max(1.0)
            && (inc - i_fine).abs() <= self.threshold * i_fine;
        Ok(ok.then_some(Segment { lo, hi, d_b, inc }))
    }

    /// Walks from `start` towards `stop`, returning accepted segments in walk order.
    fn walk(&self, start: f64, stop: f64) -> Result<Vec<Segment>, DiffusionError> {
        let upward = stop > start;
        let mut out = Vec::new();
        let mut pos = start;
        let mut prev_h = f64::INFINITY;
        while pos != stop {
            if out.len() >= MAX_SEGMENTS {
                return Err(NumericsError::NonConvergence { value: pos, error_estimate: f64::INFINITY }.into());
            }
            let mut h = self.natural_step(pos, upward).min(2.0 * prev_h);
            let mut tries = 0;
            let seg = loop {
                let remaining = (stop - pos).abs();
                let (lo, hi, last) = if h >= remaining {
                    if upward {
                        (pos, stop, true)
                    } else {
                        (stop, pos, true)
                    }
                } else if upward {
                    (pos, pos + h, false)
                } else {
                    (pos - h, pos, false)
                };
                if let Some(seg) = self.segment(lo, hi)? {
                    break (seg, last);
                }
                tries += 1;
                if tries > 60 || hi - lo <= 8.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                    return Err(NumericsError::NonConvergence { value: pos, error_estimate: f64::INFINITY }.into());
                }
                h = 0.5 * (hi - lo);
            };
            let (seg, last) = seg;
            prev_h = seg.hi - seg.lo;
            pos = if last {
                stop
            } else if upward {
                seg.hi
            } else {
                seg.lo
            };
            out.push(seg);
        }
        Ok(out)
    }

    fn floor_and_ceiling(spec: &DiffusionSpec, upper: Option<f64>) -> Result<(f64, f64), DiffusionError> {
        let l = spec.scale();
        let (floor, default_top) = if spec.ell.is_finite() {
            (spec.ell + FLOOR_FRACTION * l, spec.ell + CEILING_FACTOR * l)
        } else {
            (spec.w - INFINITE_HALF_WIDTH * l, spec.w + INFINITE_HALF_WIDTH * l)
        };
        let top = upper.unwrap_or(default_top).max(spec.w + 0.25 * l);
        if !top.is_finite() {
            return Err(DiffusionError::InvalidSpec(format!("grid top must be finite, got {top}")));
        }
        Ok((floor, top))
    }

    /// `(B(x), log s(x))` for `x` at or below the lowest node.
    fn below_floor(&self, x: f64) -> Result<(f64, f64), DiffusionError> {
        let node = self.grid[0];
        let jx = integral_beta_down(&self.spec, x, node.x, 1e-2 * self.tol)?;
        let big_b = node.big_b - jx;
        let rel = 0.1 * self.tol;
        let mut err = None;
        let mut f = |y: f64| match integral_beta_down(&self.spec, y, node.x, 1e-2 * self.tol) {
            Ok(j) => (j - jx).exp(),
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        };
        let r = improper_lower_rel(&mut f, self.spec.ell, x, rel);
        if let Some(e) = err {
            return Err(e.into());
        }
        match r {
            Ok(q) => Ok((big_b, -big_b + q.value.ln())),
            Err(NumericsError::Divergent { .. }) => Err(DiffusionError::AssumptionViolated(
                "s(ℓ+) divergent: ∫_ℓ s' does not converge (heuristic classification)".into(),
            )),
            Err(e) => Err(e.into()),
        }
    }

    fn advance(&self, node: GridPoint, x: f64, seg: Segment) -> GridPoint {
        debug_assert!(seg.lo == node.x);
        let big_b = node.big_b + seg.d_b;
        let ratio = (-node.big_b - node.log_s).exp();
        GridPoint { x, big_b, log_s: node.log_s + (ratio * seg.inc).ln_1p() }
    }

    /// `(B(x), log s(x))` for any `x` in the state space.
    pub fn point(&self, x: f64) -> Result<GridPoint, DiffusionError> {
        self.spec.check_domain(x)?;
        let first = self.grid[0];
        let last = *self.grid.last().expect("grid is never empty");
        if x < first.x {
            let (big_b, log_s) = self.below_floor(x)?;
            return Ok(GridPoint { x, big_b, log_s });
        }
        if x > last.x {
            let mut node = last;
            for seg in self.walk(last.x, x)? {
                node = self.advance(node, seg.hi, seg);
            }
            return Ok(GridPoint { x, ..node });
        }
        let i = self.grid.partition_point(|p| p.x <= x) - 1;
        let node = self.grid[i];
        if node.x == x {
            return Ok(node);
        }
        let (d_b, inc) = self.checked_increment(node.x, x)?;
        Ok(self.advance(node, x, Segment { lo: node.x, hi: x, d_b, inc }))
    }

    /// `B(x) = ∫_w^x 2b/σ²`.
    pub fn big_b(&self, x: f64) -> Result<f64, DiffusionError> {
        Ok(self.point(x)?.big_b)
    }

    /// `s'(x) = e^{−B(x)}`.
    pub fn s_prime(&self, x: f64) -> Result<f64, DiffusionError> {
        Ok((-self.big_b(x)?).exp())
    }

    pub fn log_s(&self, x: f64) -> Result<f64, DiffusionError> {
        Ok(self.point(x)?.log_s)
    }

    /// `s(x) = ∫_ℓ^x s'`, with `s(ℓ+) = 0`.
    pub fn s(&self, x: f64) -> Result<f64, DiffusionError> {
        Ok(self.log_s(x)?.exp())
    }

    /// `s'(x)/s(x)`, formed in log space so it stays finite where `s` underflows.
    pub fn s_prime_over_s(&self, x: f64) -> Result<f64, DiffusionError> {
        let p = self.point(x)?;
        let v = (-p.big_b - p.log_s).exp();
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(Self::nonfinite("s'/s", x))
        }
    }

    /// `log m'(x) = log 2 − 2 log|σ(x)| + B(x)`.
    pub fn log_m_prime(&self, x: f64) -> Result<f64, DiffusionError> {
        let sigma = self.spec.sigma_at(x);
        if !(sigma * sigma > 0.0) {
            return Err(Self::nonfinite("sigma^2", x));
        }
        Ok(std::f64::consts::LN_2 - 2.0 * sigma.abs().ln() + self.big_b(x)?)
    }

    /// Speed density `m'(x) = 2σ^{−2}(x)e^{B(x)}`.
    pub fn m_prime(&self, x: f64) -> Result<f64, DiffusionError> {
        let sigma = self.spec.sigma_at(x);
        Ok(2.0 / (sigma * sigma) * self.big_b(x)?.exp())
    }

    /// `∫_a^b s'`. Short ranges are integrated directly instead of
    /// differencing two values of `s`, which avoids cancellation.
    pub fn s_prime_integral(&self, a: f64, b: f64) -> Result<f64, DiffusionError> {
        self.spec.check_domain(a)?;
        self.spec.check_domain(b)?;
        if a == b {
            return Ok(0.0);
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        if hi - lo <= self.natural_step(lo, true) {
            let p = self.point(lo)?;
            let (_, inc) = self.checked_increment(lo, hi)?;
            return Ok(sign * (-p.big_b).exp() * inc);
        }
        Ok(sign * (self.s(hi)? - self.s(lo)?))
    }
}

/// Builds the scale and speed densities with relative accuracy `tol`.
///
/// Fails with `AssumptionViolated` when `∫_ℓ s'` diverges, i.e. when the
/// process is not attracted to `ℓ`.
pub fn build_scale_speed(spec: &DiffusionSpec, tol: f64) -> Result<ScaleSpeed, DiffusionError> {
    ScaleSpeed::build(spec, ScaleSpeedOptions::new(tol))
}

impl ScaleSpeed {
    pub fn build(spec: &DiffusionSpec, options: ScaleSpeedOptions) -> Result<ScaleSpeed, DiffusionError> {
        spec.validate()?;
        let tol = options.tol;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(DiffusionError::InvalidSpec(format!("tol must lie in (0, 1), got {tol}")));
        }
        let (floor, top) = Self::floor_and_ceiling(spec, options.upper)?;
        let mut ss = ScaleSpeed { spec: spec.clone(), tol, threshold: (1e-3 * tol).max(1e-14), grid: Vec::new() };

        let w = spec.w;
        let down = ss.walk(w, floor)?;
        let up = ss.walk(w, top)?;

        // B at the nodes, from B(w) = 0 outwards.
        let mut xs = Vec::with_capacity(down.len() + up.len() + 1);
        let mut bs = Vec::with_capacity(xs.capacity());
        let mut b = 0.0;
        let mut lower_part = vec![(w, 0.0)];
        for seg in &down {
            b -= seg.d_b;
            lower_part.push((seg.lo, b));
        }
        for &(x, b) in lower_part.iter().rev() {
            xs.push(x);
            bs.push(b);
        }
        b = 0.0;
        for seg in &up {
            b += seg.d_b;
            xs.push(seg.hi);
            bs.push(b);
        }
        let segments: Vec<Segment> = down.iter().rev().chain(up.iter()).copied().collect();

        ss.grid.push(GridPoint { x: xs[0], big_b: bs[0], log_s: f64::NAN });
        let (_, log_s0) = ss.below_floor(xs[0])?;
        ss.grid[0].log_s = log_s0;
        for (i, seg) in segments.iter().enumerate() {
            let node = ss.grid[i];
            let mut next = ss.advance(node, seg.hi, *seg);
            // Keep the cumulative B from the walk so B(w) = 0 exactly.
            next.big_b = bs[i + 1];
            next.x = xs[i + 1];
            ss.grid.push(next);
        }
        if !ss.grid.iter().all(|p| p.log_s.is_finite() && p.big_b.is_finite()) {
            return Err(DiffusionError::NonFinite { what: "log s", x: w });
        }
        Ok(ss)
    }
}
