//! Fixed quadrature tables.
//!
//! All rules here use interior nodes only, so integrands are never evaluated at
//! the ends of an interval.

/// Gauss–Kronrod 15-point abscissae on [-1, 1] (non-negative half, descending).
/// Odd indices are the embedded 7-point Gauss nodes.
pub(crate) const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

pub(crate) const GK15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// 7-point Gauss weights matching `GK15_NODES[1]`, `[3]`, `[5]`, `[7]`.
pub(crate) const G7_WEIGHTS: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// 4-point Gauss–Legendre rule on [-1, 1], ascending.
pub(crate) const GL4_NODES: [f64; 4] =
    [-0.861_136_311_594_052_6, -0.339_981_043_584_856_26, 0.339_981_043_584_856_26, 0.861_136_311_594_052_6];
pub(crate) const GL4_WEIGHTS: [f64; 4] =
    [0.347_854_845_137_453_7, 0.652_145_154_862_546_2, 0.652_145_154_862_546_2, 0.347_854_845_137_453_7];

/// 8-point Gauss–Legendre rule on [-1, 1], ascending.
pub(crate) const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_78,
    0.183_434_642_495_649_78,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
pub(crate) const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_69,
    0.222_381_034_453_374_34,
    0.313_706_645_877_887_05,
    0.362_683_783_378_361_77,
    0.362_683_783_378_361_77,
    0.313_706_645_877_887_05,
    0.222_381_034_453_374_34,
    0.101_228_536_290_376_69,
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let gk: f64 = 2.0 * GK15_WEIGHTS[..7].iter().sum::<f64>() + GK15_WEIGHTS[7];
        let g7: f64 = 2.0 * G7_WEIGHTS[..3].iter().sum::<f64>() + G7_WEIGHTS[3];
        assert!((gk - 2.0).abs() < 1e-15);
        assert!((g7 - 2.0).abs() < 1e-15);
        assert!((GL4_WEIGHTS.iter().sum::<f64>() - 2.0).abs() < 1e-15);
        assert!((GL8_WEIGHTS.iter().sum::<f64>() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gl8_integrates_degree_15_exactly() {
        // ∫_{-1}^{1} x^14 dx = 2/15
        let v: f64 = GL8_NODES.iter().zip(GL8_WEIGHTS.iter()).map(|(x, w)| w * x.powi(14)).sum();
        assert!((v - 2.0 / 15.0).abs() < 1e-15);
    }
}
