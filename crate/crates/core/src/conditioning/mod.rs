//! The diffusion conditioned to escape to `+∞`, obtained as the Doob
//! h-transform with `h = s`, plus the characteristics of general h-transforms.

use std::sync::Arc;

use serde::Serialize;

use crate::diffusion::{
    build_scale_speed, check_assumptions, DiffusionError, DiffusionSpec, ScaleSpeed, ScaleSpeedOptions,
};
use crate::expr::Expr;
use crate::numerics::finite_difference_derivs;

/// Attached to every h-transform output: the library takes `h` on trust.
pub const EXCESSIVE_WARNING: &str = "h is assumed excessive for the base process; this is not verified";

/// `b(x) + σ²(x)·s'(x)/s(x)`, the drift of the conditioned process.
///
/// The ratio `s'/s` is formed as `exp(−B − log s)` so it stays finite even
/// where `s` itself underflows.
pub fn conditioned_drift(ss: &ScaleSpeed, spec: &DiffusionSpec, x: f64) -> Result<f64, DiffusionError> {
    spec.check_domain(x)?;
    let b = spec.drift(x);
    let sigma = spec.sigma_at(x);
    let v = b + sigma * sigma * ss.s_prime_over_s(x)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DiffusionError::NonFinite { what: "conditioned drift", x })
    }
}

/// The conditioned process `Z`: same volatility, drift `b̃ = b + σ²s'/s`.
#[derive(Debug, Clone)]
pub struct ConditionedDiffusion {
    ss: Arc<ScaleSpeed>,
}

impl ConditionedDiffusion {
    pub fn from_scale_speed(ss: Arc<ScaleSpeed>) -> Self {
        ConditionedDiffusion { ss }
    }

    pub fn base(&self) -> &DiffusionSpec {
        self.ss.spec()
    }

    pub fn scale_speed(&self) -> &Arc<ScaleSpeed> {
        &self.ss
    }

    pub fn b_tilde(&self, x: f64) -> Result<f64, DiffusionError> {
        conditioned_drift(&self.ss, self.ss.spec(), x)
    }

    /// `σ²(x)·s'(x)/s(x)`, always positive.
    pub fn correction(&self, x: f64) -> Result<f64, DiffusionError> {
        let sigma = self.base().sigma_at(x);
        Ok(sigma * sigma * self.ss.s_prime_over_s(x)?)
    }

    pub fn sigma(&self, x: f64) -> f64 {
        self.base().sigma_at(x)
    }
}

/// Checks transience to `ℓ`, builds the scale function and bundles the
/// conditioned drift.
pub fn condition_to_infinity(spec: &DiffusionSpec, tol: f64) -> Result<ConditionedDiffusion, DiffusionError> {
    condition_to_infinity_with(spec, ScaleSpeedOptions::new(tol))
}

pub fn condition_to_infinity_with(
    spec: &DiffusionSpec,
    options: ScaleSpeedOptions,
) -> Result<ConditionedDiffusion, DiffusionError> {
    let report = check_assumptions(spec, options.tol);
    if !report.passed() {
        return Err(DiffusionError::AssumptionViolated(format!("{}; {}", report.left_verdict, report.right_verdict)));
    }
    let ss = ScaleSpeed::build(spec, options)?;
    Ok(ConditionedDiffusion::from_scale_speed(Arc::new(ss)))
}

/// Convenience for callers that only have a spec.
pub fn build_conditioned(
    spec: &DiffusionSpec,
    tol: f64,
) -> Result<(ConditionedDiffusion, Arc<ScaleSpeed>), DiffusionError> {
    let ss = Arc::new(build_scale_speed(spec, tol)?);
    Ok((ConditionedDiffusion::from_scale_speed(ss.clone()), ss))
}

/// The weight `h` of an h-transform.
#[derive(Debug, Clone, PartialEq)]
pub enum HFunction {
    /// A user expression, claimed excessive.
    Expr(Expr),
    /// The scale function itself, which conditions on escaping to `+∞`.
    Scale,
}

impl HFunction {
    pub fn log_h(&self, ss: &ScaleSpeed, x: f64) -> Result<f64, DiffusionError> {
        match self {
            HFunction::Scale => ss.log_s(x),
            HFunction::Expr(e) => {
                let h = e.eval(x)?;
                if h > 0.0 {
                    Ok(h.ln())
                } else {
                    Err(DiffusionError::NonFinite { what: "log h (h must be positive)", x })
                }
            }
        }
    }

    /// `h'(x)/h(x)`; exact for the scale function, central differences otherwise.
    pub fn log_derivative(&self, ss: &ScaleSpeed, x: f64, step: f64) -> Result<f64, DiffusionError> {
        match self {
            HFunction::Scale => ss.s_prime_over_s(x),
            HFunction::Expr(_) => {
                let mut err = None;
                let (d1, _) = finite_difference_derivs(
                    |y| match self.log_h(ss, y) {
                        Ok(v) => v,
                        Err(e) => {
                            err.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    x,
                    step,
                )
                .map_err(|e| err.clone().unwrap_or(e.into()))?;
                Ok(d1)
            }
        }
    }
}

/// Scale and speed densities of the h-transform at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HTransformChars {
    pub x: f64,
    /// `h(x)^{-2}·s'(x)`.
    pub s_h_prime: f64,
    /// `h(x)^2·m'(x)`.
    pub m_h_prime: f64,
    pub log_s_h_prime: f64,
    pub log_m_h_prime: f64,
    pub warning: &'static str,
}

pub fn h_transform_chars(ss: &ScaleSpeed, h: &HFunction, x: f64) -> Result<HTransformChars, DiffusionError> {
    ss.spec().check_domain(x)?;
    let log_h = h.log_h(ss, x)?;
    let log_s_h_prime = -2.0 * log_h - ss.big_b(x)?;
    let log_m_h_prime = 2.0 * log_h + ss.log_m_prime(x)?;
    // Plain products where they are representable, so h ≡ 1 returns s' and
    // m' bit for bit; the log form covers the rest.
    let h2 = (2.0 * log_h).exp();
    let s_h = ss.s_prime(x)? / h2;
    let m_h = ss.m_prime(x)? * h2;
    let (s_h_prime, m_h_prime) =
        if s_h.is_normal() && m_h.is_normal() { (s_h, m_h) } else { (log_s_h_prime.exp(), log_m_h_prime.exp()) };
    Ok(HTransformChars { x, s_h_prime, m_h_prime, log_s_h_prime, log_m_h_prime, warning: EXCESSIVE_WARNING })
}

/// Drift implied by the transformed scale density: `−½σ²·(log s_h')'`,
/// which equals `b + σ²h'/h`.
pub fn h_transform_drift(ss: &ScaleSpeed, h: &HFunction, x: f64, step: f64) -> Result<f64, DiffusionError> {
    let spec = ss.spec();
    let sigma = spec.sigma_at(x);
    let mut err = None;
    let (d1, _) = finite_difference_derivs(
        |y| match h_transform_chars(ss, h, y) {
            Ok(c) => c.log_s_h_prime,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        x,
        step,
    )
    .map_err(|e| err.clone().unwrap_or(e.into()))?;
    Ok(-0.5 * sigma * sigma * d1)
}

/// Generator of the h-transform, `(1/(h²m'))·((h²/s')f')'`, applied to `f`.
///
/// Expanding the outer derivative with `(1/s')' = β/s'` gives
/// `½σ²f'' + (b + σ²h'/h)f'`, which is what is evaluated.
pub fn apply_h_generator<F>(ss: &ScaleSpeed, h: &HFunction, f: F, x: f64, step: f64) -> Result<f64, DiffusionError>
where
    F: FnMut(f64) -> f64,
{
    let spec = ss.spec();
    let (d1, d2) = finite_difference_derivs(f, x, step)?;
    let sigma = spec.sigma_at(x);
    let drift = spec.drift(x) + sigma * sigma * h.log_derivative(ss, x, step)?;
    let diffusion = if d2 == 0.0 { 0.0 } else { 0.5 * sigma * sigma * d2 };
    let transport = if d1 == 0.0 { 0.0 } else { drift * d1 };
    Ok(diffusion + transport)
}

/// `s(x_t)/s(x_0)`, the weight that turns base-process samples into
/// expectations under the conditioned law.
pub fn q_weight(ss: &ScaleSpeed, x0: f64, xt: f64) -> Result<f64, DiffusionError> {
    Ok(log_q_weight(ss, x0, xt)?.exp())
}

pub fn log_q_weight(ss: &ScaleSpeed, x0: f64, xt: f64) -> Result<f64, DiffusionError> {
    ss.spec().check_domain(x0)?;
    ss.spec().check_domain(xt)?;
    if x0 == xt {
        return Ok(0.0);
    }
    Ok(ss.log_s(xt)? - ss.log_s(x0)?)
}
