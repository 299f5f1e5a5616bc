use serde::{Deserialize, Serialize};

use super::{DiffusionError, DiffusionSpec, Preset};
use crate::expr::Expr;

/// Model description as read from `key=value` text.
///
/// Every field is optional so that layers can be merged: preset defaults,
/// then a model file or inline spec, then individual overrides. Giving `b`
/// or `sigma` alongside a preset turns the preset into a starting point for
/// a custom model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
}

fn invalid(msg: String) -> DiffusionError {
    DiffusionError::InvalidSpec(msg)
}

fn parse_real(key: &str, value: &str) -> Result<f64, DiffusionError> {
    match value.trim() {
        "-inf" | "-infinity" | "−inf" => Ok(f64::NEG_INFINITY),
        v => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| invalid(format!("{key}: expected a real number, got '{v}'"))),
    }
}

impl ModelConfig {
    /// Parses model-file text: one `key=value` per line, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, DiffusionError> {
        let mut cfg = ModelConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected key=value, got '{line}'", lineno + 1)))?;
            cfg.set(key.trim(), value.trim()).map_err(|e| invalid(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    /// Parses an inline spec such as `logistic` or `preset=gbm,mu=0.2,sigma0=1`.
    /// A bare word is taken as the preset name.
    pub fn parse_inline(text: &str) -> Result<Self, DiffusionError> {
        let mut cfg = ModelConfig::default();
        for part in text.split([',', ';', '\n']).map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                Some((k, v)) => cfg.set(k.trim(), v.trim())?,
                None => cfg.set("preset", part)?,
            }
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), DiffusionError> {
        match key {
            "name" => self.name = Some(value.to_string()),
            "preset" => {
                if !matches!(value, "bm_drift" | "gbm" | "logistic") {
                    return Err(invalid(format!("unknown preset '{value}' (expected bm_drift, gbm or logistic)")));
                }
                self.preset = Some(value.to_string());
            }
            "mu" => self.mu = Some(parse_real(key, value)?),
            "kappa" => self.kappa = Some(parse_real(key, value)?),
            "sigma0" => self.sigma0 = Some(parse_real(key, value)?),
            "b" => {
                Expr::parse(value)?;
                self.b = Some(value.to_string());
            }
            "sigma" => {
                Expr::parse(value)?;
                self.sigma = Some(value.to_string());
            }
            "ell" => self.ell = Some(parse_real(key, value)?),
            "w" => {
                let w = parse_real(key, value)?;
                if !w.is_finite() {
                    return Err(invalid("w must be finite".into()));
                }
                self.w = Some(w);
            }
            _ => return Err(invalid(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(&mut self, top: &ModelConfig) {
        macro_rules! take {
            ($($f:ident),*) => {$( if top.$f.is_some() { self.$f = top.$f.clone(); } )*};
        }
        take!(name, preset, mu, kappa, sigma0, b, sigma, ell, w);
    }

    fn preset_value(&self) -> Result<Option<Preset>, DiffusionError> {
        let Some(name) = self.preset.as_deref() else {
            if self.mu.is_some() || self.kappa.is_some() || self.sigma0.is_some() {
                return Err(invalid("mu, kappa and sigma0 only apply together with preset=".into()));
            }
            return Ok(None);
        };
        let preset = match name {
            "bm_drift" => {
                if self.kappa.is_some() || self.sigma0.is_some() {
                    return Err(invalid("bm_drift takes only mu".into()));
                }
                Preset::BmDrift { mu: self.mu.unwrap_or(0.5) }
            }
            "gbm" => {
                if self.kappa.is_some() {
                    return Err(invalid("gbm takes mu and sigma0".into()));
                }
                Preset::Gbm { mu: self.mu.unwrap_or(0.1), sigma0: self.sigma0.unwrap_or(1.0) }
            }
            "logistic" => Preset::Logistic {
                mu: self.mu.unwrap_or(0.5),
                kappa: self.kappa.unwrap_or(0.1),
                sigma0: self.sigma0.unwrap_or(1.2),
            },
            other => return Err(invalid(format!("unknown preset '{other}'"))),
        };
        Ok(Some(preset))
    }

    /// Builds and validates the model.
    pub fn resolve(&self) -> Result<DiffusionSpec, DiffusionError> {
        match self.preset_value()? {
            Some(preset) => {
                let base = DiffusionSpec::from_preset(preset)?;
                let custom = self.b.is_some() || self.sigma.is_some() || self.ell.is_some_and(|l| l != base.ell);
                let w = self.w.unwrap_or(base.w);
                if custom {
                    let b = match &self.b {
                        Some(src) => Expr::parse(src)?,
                        None => base.b.clone(),
                    };
                    let sigma = match &self.sigma {
                        Some(src) => Expr::parse(src)?,
                        None => base.sigma.clone(),
                    };
                    let name = self.name.clone().unwrap_or_else(|| format!("custom({})", preset.name()));
                    DiffusionSpec::new(name, b, sigma, self.ell.unwrap_or(base.ell), w)
                } else {
                    let mut spec = base.with_reference(w)?;
                    if let Some(name) = &self.name {
                        spec.name = name.clone();
                    }
                    Ok(spec)
                }
            }
            None => {
                let b = self.b.as_deref().ok_or_else(|| invalid("missing b= (or preset=)".into()))?;
                let sigma = self.sigma.as_deref().ok_or_else(|| invalid("missing sigma= (or preset=)".into()))?;
                let ell = self.ell.unwrap_or(f64::NEG_INFINITY);
                let w = self.w.unwrap_or(if ell.is_finite() { ell + 1.0 } else { 0.0 });
                let name = self.name.clone().unwrap_or_else(|| "custom".to_string());
                DiffusionSpec::new(name, Expr::parse(b)?, Expr::parse(sigma)?, ell, w)
            }
        }
    }

    /// Fully materialized configuration that resolves back to `spec`.
    pub fn from_spec(spec: &DiffusionSpec) -> Self {
        let mut cfg =
            ModelConfig { name: Some(spec.name.clone()), ell: Some(spec.ell), w: Some(spec.w), ..Default::default() };
        match spec.preset {
            Some(p) => {
                cfg.preset = Some(p.name().to_string());
                match p {
                    Preset::BmDrift { mu } => cfg.mu = Some(mu),
                    Preset::Gbm { mu, sigma0 } => {
                        cfg.mu = Some(mu);
                        cfg.sigma0 = Some(sigma0);
                    }
                    Preset::Logistic { mu, kappa, sigma0 } => {
                        cfg.mu = Some(mu);
                        cfg.kappa = Some(kappa);
                        cfg.sigma0 = Some(sigma0);
                    }
                }
            }
            None => {
                cfg.b = Some(spec.b.to_string());
                cfg.sigma = Some(spec.sigma.to_string());
            }
        }
        cfg
    }

    /// Model-file text for this configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        let real = |v: f64| if v == f64::NEG_INFINITY { "-inf".to_string() } else { format!("{v:?}") };
        if let Some(v) = &self.name {
            line("name", v.clone());
        }
        if let Some(v) = &self.preset {
            line("preset", v.clone());
        }
        if let Some(v) = self.mu {
            line("mu", real(v));
        }
        if let Some(v) = self.kappa {
            line("kappa", real(v));
        }
        if let Some(v) = self.sigma0 {
            line("sigma0", real(v));
        }
        if let Some(v) = &self.b {
            line("b", v.clone());
        }
        if let Some(v) = &self.sigma {
            line("sigma", v.clone());
        }
        if let Some(v) = self.ell {
            line("ell", real(v));
        }
        if let Some(v) = self.w {
            line("w", real(v));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_defaults() {
        let spec = ModelConfig::parse("preset=logistic\n").unwrap().resolve().unwrap();
        assert_eq!(spec.preset, Some(Preset::Logistic { mu: 0.5, kappa: 0.1, sigma0: 1.2 }));
        assert_eq!((spec.ell, spec.w), (0.0, 1.0));
    }

    #[test]
    fn file_format() {
        let text = "# standard example\nname = my bm\nb = -0.5\nsigma = 1\nell = -inf\nw = 0\n";
        let spec = ModelConfig::parse(text).unwrap().resolve().unwrap();
        assert_eq!(spec.name, "my bm");
        assert_eq!(spec.ell, f64::NEG_INFINITY);
        assert!(spec.preset.is_none());
        assert_eq!(spec.drift(3.0), -0.5);
    }

    #[test]
    fn layering() {
        let mut cfg = ModelConfig::parse_inline("gbm").unwrap();
        cfg.overlay(&ModelConfig::parse_inline("mu=0.7").unwrap());
        cfg.overlay(&ModelConfig::parse_inline("sigma0=2,w=3").unwrap());
        let spec = cfg.resolve().unwrap();
        assert_eq!(spec.preset, Some(Preset::Gbm { mu: 0.7, sigma0: 2.0 }));
        assert_eq!(spec.w, 3.0);
    }

    #[test]
    fn explicit_coefficient_makes_custom_model() {
        let spec = ModelConfig::parse_inline("preset=gbm,b=0.2*x").unwrap().resolve().unwrap();
        assert!(spec.preset.is_none());
        assert_eq!(spec.ell, 0.0);
        assert!((spec.sigma_at(2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(ModelConfig::parse("b 1").is_err());
        assert!(ModelConfig::parse("colour=red").is_err());
        assert!(ModelConfig::parse("preset=ou").is_err());
        assert!(ModelConfig::parse("b=sin(x)").is_err());
        assert!(ModelConfig::parse("mu=abc").is_err());
        assert!(ModelConfig::parse("b=1").unwrap().resolve().is_err());
        assert!(ModelConfig::parse("mu=1\nb=1\nsigma=1").unwrap().resolve().is_err());
        assert!(ModelConfig::parse("preset=bm_drift\nkappa=1").unwrap().resolve().is_err());
    }

    #[test]
    fn materialized_round_trip() {
        for spec in [
            DiffusionSpec::bm_drift(0.25),
            DiffusionSpec::logistic(0.5, 0.1, 1.2).unwrap(),
            DiffusionSpec::new("c", Expr::parse("-x").unwrap(), Expr::parse("1").unwrap(), f64::NEG_INFINITY, 0.5)
                .unwrap(),
        ] {
            let text = ModelConfig::from_spec(&spec).to_text();
            let back = ModelConfig::parse(&text).unwrap().resolve().unwrap();
            assert_eq!(back, spec, "{text}");
        }
    }
}
