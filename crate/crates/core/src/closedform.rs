//! Closed-form worst-case ergodic capacity for pathloss exponent 4.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mma::sigma_z;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Shadowing variance above which the exponential expansion behind the
/// closed form is no longer accurate.
pub const SHADOWING_GUARD: f64 = 0.405_465_108_108_164_4; // ln 1.5

/// `H_n = 1 + 1/2 + ... + 1/n`.
pub fn harmonic_number(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("harmonic numbers start at n = 1"));
    }
    // Summing small terms first keeps the rounding error at a few ulps.
    Ok((1..=n).rev().map(|k| 1.0 / f64::from(k)).sum())
}

/// `ln n + gamma + 1/(2n)`.
pub fn harmonic_number_approx(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("harmonic numbers start at n = 1"));
    }
    let n = f64::from(n);
    Ok(n.ln() + EULER_GAMMA + 0.5 / n)
}

/// Inputs of the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormInputs {
    pub n_aps: u32,
    pub sigma_z_sq: f64,
}

impl ClosedFormInputs {
    pub fn new(n_aps: u32, shadow_std_db: f64) -> Result<Self> {
        if n_aps < 3 {
            return Err(Error::domain(format!(
                "the closed form needs at least 3 APs, got {n_aps}"
            )));
        }
        if !(shadow_std_db.is_finite() && shadow_std_db >= 0.0) {
            return Err(Error::invalid(
                "shadow_std_db",
                format!("must be non-negative and finite, got {shadow_std_db}"),
            ));
        }
        Ok(Self {
            n_aps,
            sigma_z_sq: sigma_z(shadow_std_db).powi(2),
        })
    }

    /// `2 e^{sigma_z^2} / (3 (N - 2))`.
    pub fn b_bar(&self) -> f64 {
        2.0 * self.sigma_z_sq.exp() / (3.0 * (f64::from(self.n_aps) - 2.0))
    }

    pub fn within_guard(&self) -> bool {
        self.sigma_z_sq <= SHADOWING_GUARD
    }
}

/// Approximate worst-case (center) ergodic capacity in b/s/Hz for an
/// interference-limited network with pathloss exponent 4.
pub fn worst_ergodic_alpha4(n_aps: u32, shadow_std_db: f64) -> Result<f64> {
    let inputs = ClosedFormInputs::new(n_aps, shadow_std_db)?;
    if !inputs.within_guard() {
        log::warn!(
            "shadowing variance {:.3} exceeds ln 1.5; the closed form is outside its accuracy range",
            inputs.sigma_z_sq
        );
    }
    Ok(evaluate(&inputs))
}

fn evaluate(inputs: &ClosedFormInputs) -> f64 {
    let n = f64::from(inputs.n_aps);
    let sz2 = inputs.sigma_z_sq;
    let b = inputs.b_bar();
    let head = EULER_GAMMA
        + 0.5 / n
        + (n * (n - 2.0).sqrt() / (n - 1.0).powf(1.5)).ln()
        + 0.5 * ((n - 2.0) / (n - 1.0)).ln()
        + 0.5 * b.ln_1p();
    let tail = ((n * b.ln_1p()).exp_m1())
        * (((1.0 + 1.5 * (-sz2).exp() * (n - 2.0)) / (n - 1.0)).ln() - 0.5 / (n - 1.0));
    n / LN_2 * (head + tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic_number(1).unwrap(), 1.0);
        assert_relative_eq!(
            harmonic_number(5).unwrap(),
            137.0 / 60.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            harmonic_number(100).unwrap(),
            5.187_377_517_639_621,
            max_relative = 1e-14
        );
        let gap = harmonic_number_approx(100).unwrap() - harmonic_number(100).unwrap();
        assert!(gap.abs() < 1e-4);
        assert!(harmonic_number(0).is_err());
    }

    #[test]
    fn closed_form_values() {
        // Term-by-term evaluation at 40 digits.
        assert_relative_eq!(
            worst_ergodic_alpha4(5, 0.0).unwrap(),
            7.553_857_083_741_875,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            worst_ergodic_alpha4(3, 0.0).unwrap(),
            2.658_024_700_930_295,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            worst_ergodic_alpha4(5, 6.0).unwrap(),
            -687.778_793_114_643_7,
            max_relative = 1e-10
        );
    }

    #[test]
    fn rejects_small_networks() {
        assert!(worst_ergodic_alpha4(2, 0.0).is_err());
        assert!(worst_ergodic_alpha4(3, -1.0).is_err());
    }

    #[test]
    fn increasing_in_n_without_shadowing() {
        let mut prev = 0.0;
        for n in 3..=100 {
            let v = worst_ergodic_alpha4(n, 0.0).unwrap();
            assert!(v > prev, "N = {n}");
            prev = v;
        }
    }

    #[test]
    fn guard() {
        assert!(ClosedFormInputs::new(5, 0.0).unwrap().within_guard());
        assert!(!ClosedFormInputs::new(5, 6.0).unwrap().within_guard());
    }
}
