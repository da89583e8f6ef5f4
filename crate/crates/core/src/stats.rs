//! Empirical distributions.

use crate::error::{Error, Result};

/// Sorted samples with their empirical CDF levels `i / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    pub values: Vec<f64>,
    pub levels: Vec<f64>,
}

impl EmpiricalCdf {
    /// Linear-interpolation quantile on the sorted samples, `q ∈ [0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.values.len();
        let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        self.values[lo] + (self.values[hi] - self.values[lo]) * frac
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Fraction of samples `≤ x`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let count = self.values.partition_point(|&v| v <= x);
        count as f64 / self.values.len() as f64
    }
}

pub fn cdf(samples: &[f64]) -> Result<EmpiricalCdf> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("samples", "NaN sample"));
    }
    let mut values = samples.to_vec();
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len() as f64;
    let levels = (1..=values.len()).map(|i| i as f64 / n).collect();
    Ok(EmpiricalCdf { values, levels })
}

pub fn quantile(samples: &[f64], q: f64) -> Result<f64> {
    Ok(cdf(samples)?.quantile(q))
}

pub fn mean(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}
