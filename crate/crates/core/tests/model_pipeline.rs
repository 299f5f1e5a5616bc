use std::sync::OnceLock;

use condiff::conditioning::{h_transform_chars, q_weight, ConditionedDiffusion, HFunction};
use condiff::diffusion::{build_scale_speed, DiffusionSpec, ModelConfig, ScaleSpeed};
use condiff::expr::Expr;
use proptest::prelude::*;

fn logistic_ss() -> &'static ScaleSpeed {
    static SS: OnceLock<ScaleSpeed> = OnceLock::new();
    SS.get_or_init(|| build_scale_speed(&DiffusionSpec::logistic(0.5, 0.1, 1.2).unwrap(), 1e-9).unwrap())
}

#[test]
fn model_file_round_trip_keeps_results() {
    let text = "# logistic growth\npreset=logistic\nmu=0.5\nkappa=0.1\nsigma0=1.2\n";
    let spec = ModelConfig::parse(text).unwrap().resolve().unwrap();
    let again = ModelConfig::parse(&ModelConfig::from_spec(&spec).to_text()).unwrap().resolve().unwrap();
    assert_eq!(spec, again);
    let ss = build_scale_speed(&spec, 1e-9).unwrap();
    assert_eq!(ss.log_s(2.5).unwrap(), logistic_ss().log_s(2.5).unwrap());
}

#[test]
fn custom_expression_matches_preset() {
    let custom = ModelConfig::parse_inline("b=0.5*x - 0.1*x^2,sigma=1.2*x,ell=0,w=1").unwrap().resolve().unwrap();
    assert!(custom.preset.is_none());
    let ss = build_scale_speed(&custom, 1e-9).unwrap();
    for x in [1e-3, 0.3, 1.0, 7.0, 40.0] {
        let a = ss.log_s(x).unwrap();
        let b = logistic_ss().log_s(x).unwrap();
        assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "x={x}: {a} vs {b}");
    }
}

#[test]
fn h_equal_to_one_is_the_base_process() {
    let ss = logistic_ss();
    let one = HFunction::Expr(Expr::parse("1").unwrap());
    for x in [0.01, 1.0, 50.0] {
        let c = h_transform_chars(ss, &one, x).unwrap();
        assert_eq!(c.s_h_prime, ss.s_prime(x).unwrap());
        assert_eq!(c.m_h_prime, ss.m_prime(x).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scale_is_increasing(x in 1e-6..500.0f64, dx in 1e-6..10.0f64) {
        let ss = logistic_ss();
        prop_assert!(ss.log_s(x + dx).unwrap() > ss.log_s(x).unwrap());
    }

    #[test]
    fn correction_is_positive(x in 1e-6..2000.0f64) {
        let cd = ConditionedDiffusion::from_scale_speed(std::sync::Arc::new(logistic_ss().clone()));
        prop_assert!(cd.correction(x).unwrap() > 0.0);
    }

    #[test]
    fn product_of_h_densities_is_invariant(x in 1e-3..100.0f64, c in 0.1..5.0f64) {
        let ss = logistic_ss();
        let base = ss.s_prime(x).unwrap() * ss.m_prime(x).unwrap();
        for h in [HFunction::Scale, HFunction::Expr(Expr::parse(&format!("x + {c}")).unwrap())] {
            let ch = h_transform_chars(ss, &h, x).unwrap();
            let prod = (ch.log_s_h_prime + ch.log_m_h_prime).exp();
            prop_assert!(((prod - base) / base).abs() < 1e-10);
        }
    }

    #[test]
    fn weights_compose(x in 0.01..20.0f64, y in 0.01..20.0f64, z in 0.01..20.0f64) {
        let ss = logistic_ss();
        let lhs = q_weight(ss, x, y).unwrap() * q_weight(ss, y, z).unwrap();
        let rhs = q_weight(ss, x, z).unwrap();
        prop_assert!(((lhs - rhs) / rhs).abs() < 1e-12);
    }
}
