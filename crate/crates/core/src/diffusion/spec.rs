use serde::{Deserialize, Serialize};

use super::DiffusionError;
use crate::expr::Expr;

/// Built-in models with closed-form coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Preset {
    /// `dX = −μ dt + dW` on `(−∞, ∞)`.
    BmDrift { mu: f64 },
    /// `dX = μX dt + σ₀X dW` on `(0, ∞)`.
    Gbm { mu: f64, sigma0: f64 },
    /// `dX = (μX − κX²) dt + σ₀X dW` on `(0, ∞)`.
    Logistic { mu: f64, kappa: f64, sigma0: f64 },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::BmDrift { .. } => "bm_drift",
            Preset::Gbm { .. } => "gbm",
            Preset::Logistic { .. } => "logistic",
        }
    }

    fn drift(&self, x: f64) -> f64 {
        match *self {
            Preset::BmDrift { mu } => -mu,
            Preset::Gbm { mu, .. } => mu * x,
            Preset::Logistic { mu, kappa, .. } => mu * x - kappa * (x * x),
        }
    }

    fn sigma(&self, x: f64) -> f64 {
        match *self {
            Preset::BmDrift { .. } => 1.0,
            Preset::Gbm { sigma0, .. } | Preset::Logistic { sigma0, .. } => sigma0 * x,
        }
    }

    fn exprs(&self) -> (Expr, Expr) {
        let src = match *self {
            Preset::BmDrift { mu } => (format!("-({mu:?})"), "1".to_string()),
            Preset::Gbm { mu, sigma0 } => (format!("({mu:?})*x"), format!("({sigma0:?})*x")),
            Preset::Logistic { mu, kappa, sigma0 } => {
                (format!("({mu:?})*x - ({kappa:?})*x^2"), format!("({sigma0:?})*x"))
            }
        };
        (Expr::parse(&src.0).expect("preset drift parses"), Expr::parse(&src.1).expect("preset sigma parses"))
    }

    fn domain(&self) -> (f64, f64) {
        match self {
            Preset::BmDrift { .. } => (f64::NEG_INFINITY, 0.0),
            Preset::Gbm { .. } | Preset::Logistic { .. } => (0.0, 1.0),
        }
    }
}

/// A diffusion `dX = b(X)dt + σ(X)dW` on `(ell, ∞)` with reference point `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    pub name: String,
    pub b: Expr,
    pub sigma: Expr,
    /// Left endpoint, possibly `-inf`.
    pub ell: f64,
    /// Reference point where `B(w) = 0` and `s'(w) = 1`.
    pub w: f64,
    /// Set when the coefficients come from a preset; enables native evaluation.
    pub preset: Option<Preset>,
}

impl DiffusionSpec {
    pub fn new(name: impl Into<String>, b: Expr, sigma: Expr, ell: f64, w: f64) -> Result<Self, DiffusionError> {
        let spec = DiffusionSpec { name: name.into(), b, sigma, ell, w, preset: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_preset(preset: Preset) -> Result<Self, DiffusionError> {
        let (b, sigma) = preset.exprs();
        let (ell, w) = preset.domain();
        let spec = DiffusionSpec { name: preset.name().to_string(), b, sigma, ell, w, preset: Some(preset) };
        spec.validate()?;
        Ok(spec)
    }

    pub fn bm_drift(mu: f64) -> Self {
        Self::from_preset(Preset::BmDrift { mu }).expect("valid preset")
    }

    pub fn gbm(mu: f64, sigma0: f64) -> Result<Self, DiffusionError> {
        Self::from_preset(Preset::Gbm { mu, sigma0 })
    }

    pub fn logistic(mu: f64, kappa: f64, sigma0: f64) -> Result<Self, DiffusionError> {
        Self::from_preset(Preset::Logistic { mu, kappa, sigma0 })
    }

    /// Same process with a different reference point.
    pub fn with_reference(&self, w: f64) -> Result<Self, DiffusionError> {
        let mut s = self.clone();
        s.w = w;
        s.validate()?;
        Ok(s)
    }

    /// Drift `b(x)`; NaN where the expression is undefined.
    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        match &self.preset {
            Some(p) => p.drift(x),
            None => self.b.eval_or_nan(x),
        }
    }

    /// Volatility `σ(x)`; NaN where the expression is undefined.
    #[inline]
    pub fn sigma_at(&self, x: f64) -> f64 {
        match &self.preset {
            Some(p) => p.sigma(x),
            None => self.sigma.eval_or_nan(x),
        }
    }

    /// `2b(x)/σ²(x)`, the integrand of `B`.
    #[inline]
    pub fn beta(&self, x: f64) -> f64 {
        let s = self.sigma_at(x);
        2.0 * self.drift(x) / (s * s)
    }

    pub fn in_domain(&self, x: f64) -> bool {
        x > self.ell && x.is_finite()
    }

    pub fn check_domain(&self, x: f64) -> Result<(), DiffusionError> {
        if self.in_domain(x) {
            Ok(())
        } else {
            Err(DiffusionError::OutOfDomain { x, ell: self.ell })
        }
    }

    /// Typical length scale around the reference point.
    pub fn scale(&self) -> f64 {
        if self.ell.is_finite() {
            self.w - self.ell
        } else {
            self.w.abs().max(1.0)
        }
    }

    /// Points in `(ℓ, ∞)` where the coefficients are spot-checked.
    pub fn sample_points(&self) -> Vec<f64> {
        let w = self.w;
        let l = self.scale();
        if self.ell.is_finite() {
            (-8..=4).map(|k| self.ell + l * 10f64.powi(k)).chain(std::iter::once(w)).collect()
        } else {
            (-16..=16).map(|k| w + l * 4.0 * k as f64).collect()
        }
    }

    pub fn validate(&self) -> Result<(), DiffusionError> {
        if self.ell.is_nan() || self.ell == f64::INFINITY {
            return Err(DiffusionError::InvalidSpec(format!("left endpoint must be real or -inf, got {}", self.ell)));
        }
        if !self.w.is_finite() || self.w <= self.ell {
            return Err(DiffusionError::InvalidSpec(format!(
                "reference point w = {} must be finite and above ell = {}",
                self.w, self.ell
            )));
        }
        if let Some(Preset::Gbm { sigma0, .. } | Preset::Logistic { sigma0, .. }) = self.preset {
            if sigma0 == 0.0 || !sigma0.is_finite() {
                return Err(DiffusionError::InvalidSpec(format!("sigma0 must be nonzero, got {sigma0}")));
            }
        }
        for x in self.sample_points() {
            let b = self.b.eval(x)?;
            let s = self.sigma.eval(x)?;
            if !b.is_finite() {
                return Err(DiffusionError::NonFinite { what: "b", x });
            }
            if !(s * s > 0.0) || !(s * s).is_finite() {
                return Err(DiffusionError::InvalidSpec(format!(
                    "sigma(x)^2 must be positive and finite, got {s} at x = {x}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_native_matches_expression() {
        let specs = [
            DiffusionSpec::bm_drift(0.5),
            DiffusionSpec::gbm(0.1, 1.0).unwrap(),
            DiffusionSpec::logistic(0.5, 0.1, 1.2).unwrap(),
            DiffusionSpec::logistic(-0.3, 2.0, 0.7).unwrap(),
        ];
        for spec in &specs {
            for x in [0.01, 0.5, 1.0, 3.7, 40.0] {
                let b = spec.b.eval(x).unwrap();
                let s = spec.sigma.eval(x).unwrap();
                assert!((spec.drift(x) - b).abs() <= 1e-14 * b.abs().max(1.0), "{} b({x})", spec.name);
                assert!((spec.sigma_at(x) - s).abs() <= 1e-14 * s.abs().max(1.0), "{} sigma({x})", spec.name);
            }
        }
    }

    #[test]
    fn rejects_bad_reference_point() {
        let spec = DiffusionSpec::gbm(0.1, 1.0).unwrap();
        assert!(spec.with_reference(0.0).is_err());
        assert!(spec.with_reference(-1.0).is_err());
        assert!(spec.with_reference(2.0).is_ok());
    }

    #[test]
    fn rejects_degenerate_sigma() {
        let r = DiffusionSpec::new("flat", Expr::parse("0").unwrap(), Expr::parse("x - 2").unwrap(), 0.0, 2.0);
        assert!(r.is_err());
        assert!(DiffusionSpec::gbm(0.1, 0.0).is_err());
        let r = DiffusionSpec::new(
            "root",
            Expr::parse("0").unwrap(),
            Expr::parse("sqrt(x)").unwrap(),
            f64::NEG_INFINITY,
            0.0,
        );
        assert!(r.is_err());
    }
}
