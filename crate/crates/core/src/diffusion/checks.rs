use serde::Serialize;

use super::scale::{integral_beta_down, integral_beta_up};
use super::{DiffusionError, DiffusionSpec, ScaleSpeed};
use crate::expr::Expr;
use crate::numerics::{
    finite_difference_derivs, improper_lower_integral, improper_lower_rel, improper_upper_rel, NumericsError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Whether the process is transient to `ℓ`: `s(ℓ+)` finite and `s(∞) = ∞`.
///
/// Both flags rest on a numerical divergence heuristic, which the verdict
/// texts say explicitly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub s_ell_finite: bool,
    pub s_infinity_infinite: bool,
    pub left_verdict: String,
    pub right_verdict: String,
    pub overall: Verdict,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.overall == Verdict::Pass
    }
}

enum Classified {
    Finite(f64),
    Divergent,
    Unknown(String),
}

fn classify(r: Result<crate::numerics::QuadResult, NumericsError>) -> Classified {
    match r {
        Ok(q) => Classified::Finite(q.value),
        Err(NumericsError::Divergent { .. }) => Classified::Divergent,
        Err(e) => Classified::Unknown(e.to_string()),
    }
}

/// Classifies `∫_ℓ^w s'` and `∫_w^∞ s'`.
pub fn check_assumptions(spec: &DiffusionSpec, tol: f64) -> AssumptionReport {
    let w = spec.w;
    let inner = 1e-2 * tol;
    let ell_text = if spec.ell.is_finite() { format!("{}", spec.ell) } else { "-inf".to_string() };

    let mut lower_err = None;
    let mut f_low = |y: f64| match integral_beta_down(spec, y, w, inner) {
        Ok(j) => j.exp(),
        Err(e) => {
            lower_err.get_or_insert(e.to_string());
            f64::NAN
        }
    };
    let lower = match (spec.validate(), classify(improper_lower_rel(&mut f_low, spec.ell, w, tol))) {
        (Err(e), _) => Classified::Unknown(e.to_string()),
        (_, c) => match lower_err {
            Some(e) => Classified::Unknown(e),
            None => c,
        },
    };

    let mut upper_err = None;
    let mut f_up = |y: f64| match integral_beta_up(spec, w, y, inner) {
        Ok(b) => (-b).exp(),
        Err(e) => {
            upper_err.get_or_insert(e.to_string());
            f64::NAN
        }
    };
    let upper = match classify(improper_upper_rel(&mut f_up, w, f64::INFINITY, tol)) {
        c @ Classified::Divergent => c,
        c => match upper_err {
            Some(e) => Classified::Unknown(e),
            None => c,
        },
    };

    let caveat = "numerical divergence heuristic, not a proof";
    let (s_ell_finite, left_verdict) = match lower {
        Classified::Finite(v) => (true, format!("ell={ell_text}: s(ℓ+) finite, ∫_ℓ^w s' = {v:.6e} ({caveat})")),
        Classified::Divergent => (
            false,
            format!("ell={ell_text}: s(ℓ+) divergent, ∫_ℓ^w s' classified infinite; the process does not converge to ℓ ({caveat})"),
        ),
        Classified::Unknown(e) => (false, format!("ell={ell_text}: inconclusive, {e}")),
    };
    let (s_infinity_infinite, right_verdict) = match upper {
        Classified::Divergent => (true, format!("+inf: s(∞) = ∞, ∫_w^∞ s' classified infinite ({caveat})")),
        Classified::Finite(v) => {
            (false, format!("+inf: s(∞) finite, ∫_w^∞ s' = {v:.6e}; the process can drift to +∞ ({caveat})"))
        }
        Classified::Unknown(e) => (false, format!("+inf: inconclusive, {e}")),
    };
    let overall = if s_ell_finite && s_infinity_infinite { Verdict::Pass } else { Verdict::Fail };
    AssumptionReport { s_ell_finite, s_infinity_infinite, left_verdict, right_verdict, overall }
}

/// `P^y{T_z < ∞}`: one when `y ≥ z`, otherwise `s(y)/s(z)`.
///
/// Assumes the process is transient to `ℓ` (see [`check_assumptions`]).
pub fn hitting_probability(ss: &ScaleSpeed, y: f64, z: f64) -> Result<f64, DiffusionError> {
    ss.spec().check_domain(y)?;
    ss.spec().check_domain(z)?;
    if y >= z {
        return Ok(1.0);
    }
    Ok((ss.log_s(y)? - ss.log_s(z)?).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroHitVerdict {
    /// `∫_0^K x^{-1}σ^{-2}` diverges: `dY = σ(Y)Y dW` stays positive.
    NoHit,
    /// The integral converges: zero is reached.
    Hits,
    /// The heuristic could not classify the integral.
    Inconclusive,
}

/// Classifies whether `dY = σ(Y)·Y dW` reaches zero, via `∫_0^K x^{-1}σ^{-2}(x) dx`.
pub fn driftless_zero_hit_test(sigma_factor: &Expr, k: f64, tol: f64) -> Result<ZeroHitVerdict, DiffusionError> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(DiffusionError::InvalidSpec(format!("K must be positive, got {k}")));
    }
    let mut eval_err = None;
    let f = |x: f64| match sigma_factor.eval(x) {
        Ok(s) => 1.0 / (x * s * s),
        Err(e) => {
            eval_err.get_or_insert(e);
            f64::NAN
        }
    };
    let r = improper_lower_integral(f, 0.0, k, tol);
    if let Some(e) = eval_err {
        return Err(e.into());
    }
    match r {
        Ok(_) => Ok(ZeroHitVerdict::Hits),
        Err(NumericsError::Divergent { .. }) => Ok(ZeroHitVerdict::NoHit),
        Err(NumericsError::NonFinite { x }) => Err(DiffusionError::NonFinite { what: "x^-1 sigma^-2", x }),
        Err(NumericsError::InvalidInput(m)) => Err(DiffusionError::InvalidSpec(m)),
        Err(NumericsError::NonConvergence { .. }) => Ok(ZeroHitVerdict::Inconclusive),
    }
}

/// `½σ²(x)f''(x) + b(x)f'(x)` by central differences with step `h`.
pub fn apply_generator<F>(spec: &DiffusionSpec, f: F, x: f64, h: f64) -> Result<f64, DiffusionError>
where
    F: FnMut(f64) -> f64,
{
    let (d1, d2) = finite_difference_derivs(f, x, h)?;
    let sigma = spec.sigma_at(x);
    let b = spec.drift(x);
    if !(sigma.is_finite() && b.is_finite()) {
        return Err(DiffusionError::NonFinite { what: "coefficients", x });
    }
    // Skip terms whose derivative vanishes so a constant f gives exactly 0.
    let diffusion = if d2 == 0.0 { 0.0 } else { 0.5 * sigma * sigma * d2 };
    let transport = if d1 == 0.0 { 0.0 } else { b * d1 };
    Ok(diffusion + transport)
}
