//! One-sample Kolmogorov–Smirnov test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Sup-distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("KS statistic needs at least one sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::domain("KS statistic received NaN samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Asymptotic Kolmogorov p-value with Stephens' small-sample correction.
pub fn kolmogorov_pvalue(statistic: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * statistic;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = f64::from(k);
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsTest> {
    let statistic = ks_statistic(samples, cdf)?;
    Ok(KsTest {
        statistic,
        p_value: kolmogorov_pvalue(statistic, samples.len()),
        n: samples.len(),
    })
}
