use serde::Serialize;

use super::MonteCarloError;

/// Sorted sample with its right-continuous empirical CDF.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

/// A sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
}

impl MeanEstimate {
    /// Mean and standard error of `values`, summed in order.
    pub fn of(values: impl IntoIterator<Item = f64>) -> MeanEstimate {
        let mut n = 0u64;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for v in values {
            n += 1;
            let d = v - mean;
            mean += d / n as f64;
            m2 += d * (v - mean);
        }
        let std_error = if n > 1 { (m2 / (n - 1) as f64 / n as f64).sqrt() } else { 0.0 };
        MeanEstimate { mean, std_error, n }
    }
}

impl EmpiricalDistribution {
    /// Sorts `samples`; NaN is rejected because it has no place in a CDF.
    pub fn new(mut samples: Vec<f64>) -> Result<Self, MonteCarloError> {
        if samples.iter().any(|v| v.is_nan()) {
            return Err(MonteCarloError::ConfigInvalid("sample contains NaN".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalDistribution { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `#{samples ≤ x}/n`.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.partition_point(|&v| v <= x) as f64 / self.samples.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.mean_of(|x| x).mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let e = self.mean_of(|x| x);
        e.std_error * e.std_error * e.n as f64
    }

    /// Mean of `g` over the sample with its standard error.
    pub fn mean_of(&self, g: impl Fn(f64) -> f64) -> MeanEstimate {
        MeanEstimate::of(self.samples.iter().map(|&x| g(x)))
    }

    /// Lower empirical quantile, `q ∈ [0, 1]`.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        if self.samples.is_empty() || !(0.0..=1.0).contains(&q) {
            return None;
        }
        let k = ((q * self.samples.len() as f64).ceil() as usize).clamp(1, self.samples.len());
        Some(self.samples[k - 1])
    }
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F₁ − F₂|` by a merge scan.
pub fn ks_statistic(e1: &EmpiricalDistribution, e2: &EmpiricalDistribution) -> Result<f64, MonteCarloError> {
    if e1.is_empty() || e2.is_empty() {
        return Err(MonteCarloError::EmptySample);
    }
    let (a, b) = (e1.samples(), e2.samples());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // Step past every sample equal to the smallest pending value, so ties
        // are compared after both CDFs have jumped.
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}
