use super::NumericsError;

/// Central five-point estimates of `f'(x)` and `f''(x)`.
///
/// Truncation error is O(h^4) for smooth `f`; round-off grows like
/// `eps * |f| / h^2` in the second derivative.
pub fn finite_difference_derivs<F>(mut f: F, x: f64, h: f64) -> Result<(f64, f64), NumericsError>
where
    F: FnMut(f64) -> f64,
{
    if !(h > 0.0) || !x.is_finite() {
        return Err(NumericsError::InvalidInput(format!("need h > 0 and finite x, got h = {h}, x = {x}")));
    }
    let mut eval = |y: f64| {
        let v = f(y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NumericsError::NonFinite { x: y })
        }
    };
    let fm2 = eval(x - 2.0 * h)?;
    let fm1 = eval(x - h)?;
    let f0 = eval(x)?;
    let fp1 = eval(x + h)?;
    let fp2 = eval(x + 2.0 * h)?;
    let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
    let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
    Ok((d1, d2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let (d1, d2) = finite_difference_derivs(|x| x * x, 3.0, 1e-4).unwrap();
        assert!((d1 - 6.0).abs() < 1e-8, "{d1}");
        assert!((d2 - 2.0).abs() < 1e-5, "{d2}");
    }

    #[test]
    fn constant_is_exact() {
        let (d1, d2) = finite_difference_derivs(|_| 7.0, 0.3, 1e-4).unwrap();
        assert_eq!((d1, d2), (0.0, 0.0));
    }

    #[test]
    fn exponential() {
        let (d1, d2) = finite_difference_derivs(f64::exp, 0.0, 1e-4).unwrap();
        assert!((d1 - 1.0).abs() < 1e-7);
        assert!((d2 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn non_finite_reported() {
        let r = finite_difference_derivs(|x| 1.0 / x, 0.0, 1.0);
        assert!(matches!(r, Err(NumericsError::NonFinite { .. })));
    }
}
