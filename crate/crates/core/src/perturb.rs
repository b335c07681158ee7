//! Small-offset behaviour near the disk center: mean SIR in dB, its change
//! with the offset `d`, second-order moment corrections and polynomial fits.

use std::f64::consts::LN_10;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::average_over_serving;
use crate::error::{Error, Result};
use crate::geometry::{self, EvalPoint};
use crate::mma::{self, NetworkModel};
use crate::quadrature::{integrate, Tolerance};

/// Largest offset, as a fraction of the radius, accepted by [`delta_sir_avg_db`].
pub const MAX_DELTA_OFFSET: f64 = 0.5;
/// Offset fraction beyond which the small-offset regime is questionable.
pub const WARN_DELTA_OFFSET: f64 = 0.2;
/// Largest offset fraction accepted by [`taylor_correction_terms`].
pub const MAX_TAYLOR_OFFSET: f64 = 0.2;

fn check_sir_model(model: &NetworkModel) -> Result<()> {
    if !model.is_interference_limited() {
        return Err(Error::invalid(
            "noise_power",
            "the mean-SIR analysis covers interference-limited networks only",
        ));
    }
    if model.n_aps() < 3 {
        return Err(Error::invalid("n_aps", "at least three APs are required"));
    }
    Ok(())
}

/// Mean over the serving distance of the conditional mean SIR, in dB.
pub fn sir_avg_db(point: EvalPoint, model: &NetworkModel) -> Result<f64> {
    model.disk().validate(point)?;
    check_sir_model(model)?;
    let v = average_over_serving(
        point,
        model,
        |r1| mma::sir_params(r1, point, model),
        |p| p.mu + 0.5 * p.sigma_sq(),
    )?;
    Ok(10.0 / LN_10 * v)
}

/// Change of [`sir_avg_db`] between `point` and the center.
pub fn delta_sir_avg_db(point: EvalPoint, model: &NetworkModel) -> Result<f64> {
    model.disk().validate(point)?;
    check_sir_model(model)?;
    let big_r = model.disk().radius_km();
    let d = point.d_km();
    if d > MAX_DELTA_OFFSET * big_r {
        return Err(Error::domain(format!(
            "offset {d} km exceeds {MAX_DELTA_OFFSET} of the radius"
        )));
    }
    if d > WARN_DELTA_OFFSET * big_r {
        log::warn!("offset {d} km is outside the small-offset regime");
    }
    if d == 0.0 {
        return Ok(0.0);
    }
    Ok(sir_avg_db(point, model)? - sir_avg_db(EvalPoint::CENTER, model)?)
}

/// `delta_sir_avg_db` at every offset of `grid`, in order.
pub fn delta_profile(model: &NetworkModel, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    grid.par_iter()
        .map(|&d| Ok((d, delta_sir_avg_db(EvalPoint::new(d)?, model)?)))
        .collect()
}

/// Second-order corrections of the interference moments and the matched
/// denominator parameters when the user moves from the center to offset `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorCorrections {
    pub delta_m1: f64,
    pub delta_m2: f64,
    pub delta_mu_denom: f64,
    pub delta_sigma_sq_denom: f64,
}

/// `-p d R^(-p-1) + p(p+1)/2 d^2 R^(-p-2) + int_R^(R+d) G_d(r) p r^(-p-1) dr`.
fn moment_shift(p: f64, r1: f64, d: f64, big_r: f64) -> Result<f64> {
    let taylor = -p * d * big_r.powf(-p - 1.0) + 0.5 * p * (p + 1.0) * d * d * big_r.powf(-p - 2.0);
    let f1 = geometry::cdf(r1, d, big_r);
    let survival = 1.0 - f1;
    let g = |r: f64| (geometry::cdf(r, d, big_r) - f1) / survival * p * r.powf(-p - 1.0);
    let tail = integrate(g, &[big_r, big_r + d], Tolerance::new(1e-15, 1e-12))?.value;
    Ok(taylor + tail)
}

/// Moment and parameter corrections at serving distance `r1` for offset `d`.
pub fn taylor_correction_terms(d: f64, r1: f64, model: &NetworkModel) -> Result<TaylorCorrections> {
    let point = EvalPoint::new(d)?;
    model.disk().validate(point)?;
    check_sir_model(model)?;
    let big_r = model.disk().radius_km();
    if d > MAX_TAYLOR_OFFSET * big_r {
        return Err(Error::domain(format!(
            "offset {d} km exceeds {MAX_TAYLOR_OFFSET} of the radius"
        )));
    }
    if !(r1 > 0.0 && r1 < big_r) {
        return Err(Error::domain(format!(
            "r1 must lie strictly inside the disk, got {r1}"
        )));
    }
    if d == 0.0 {
        return Ok(TaylorCorrections {
            delta_m1: 0.0,
            delta_m2: 0.0,
            delta_mu_denom: 0.0,
            delta_sigma_sq_denom: 0.0,
        });
    }
    let alpha = model.alpha();
    let k = f64::from(model.n_aps() - 1);
    let s = model.tx_power_mw();
    let sz2 = model.sigma_z_sq();

    let delta1 = moment_shift(alpha, r1, d, big_r)?;
    let delta2 = moment_shift(2.0 * alpha, r1, d, big_r)?;
    // R^-alpha plus the G_d integral over [r1, R].
    let e1_d = geometry::moment(alpha, r1, d, big_r)?;
    let base = e1_d - (big_r + d).powf(-alpha) + big_r.powf(-alpha)
        - (delta1 + alpha * d * big_r.powf(-alpha - 1.0)
            - 0.5 * alpha * (alpha + 1.0) * d * d * big_r.powf(-alpha - 2.0));

    let delta_m1 = k * s * (0.5 * sz2).exp() * delta1;
    let delta_m2 = 2.0 * k * s * s * (2.0 * sz2).exp() * delta2
        + k * (k - 1.0) * s * s * sz2.exp() * (delta1 * delta1 + 2.0 * base * delta1);

    let m0 = mma::interference_moments(r1, EvalPoint::CENTER, model)?;
    let l1 = (delta_m1 / m0.m1).ln_1p();
    let l2 = (delta_m2 / m0.m2).ln_1p();
    Ok(TaylorCorrections {
        delta_m1,
        delta_m2,
        delta_mu_denom: 2.0 * l1 - 0.5 * l2,
        delta_sigma_sq_denom: -2.0 * l1 + l2,
    })
}

/// Least-squares polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    /// Highest degree first.
    pub coefficients: Vec<f64>,
    pub degree: usize,
    pub residual_rms: f64,
}

impl PolyFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().fold(0.0, |acc, &c| acc * x + c)
    }
}

pub const DEFAULT_FIT_DEGREE: usize = 3;

/// Least-squares fit of a polynomial of `degree` to `(x, y)` samples.
pub fn fit_delta_poly(samples: &[(f64, f64)], degree: usize) -> Result<PolyFit> {
    if degree < 1 {
        return Err(Error::invalid("degree", "must be at least 1"));
    }
    if samples
        .iter()
        .any(|(x, y)| !x.is_finite() || !y.is_finite())
    {
        return Err(Error::domain("fit samples must be finite"));
    }
    let mut xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < degree + 1 {
        return Err(Error::RankDeficient {
            distinct: xs.len(),
            degree,
        });
    }
    // Columns in the scaled variable x / scale keep the system well conditioned.
    let scale = samples
        .iter()
        .fold(0.0f64, |m, s| m.max(s.0.abs()))
        .max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(samples.len(), degree + 1, |i, j| {
        (samples[i].0 / scale).powi((degree - j) as i32)
    });
    let b = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.rank(smax * 1e-12) < degree + 1 {
        return Err(Error::RankDeficient {
            distinct: xs.len(),
            degree,
        });
    }
    let scaled = svd
        .solve(&b, smax * 1e-12)
        .map_err(|e| Error::domain(format!("least-squares solve failed: {e}")))?;
    let coefficients: Vec<f64> = scaled
        .iter()
        .enumerate()
        .map(|(j, c)| c / scale.powi((degree - j) as i32))
        .collect();
    let mut fit = PolyFit {
        coefficients,
        degree,
        residual_rms: 0.0,
    };
    let sq: f64 = samples
        .iter()
        .map(|&(x, y)| (fit.eval(x) - y).powi(2))
        .sum();
    fit.residual_rms = (sq / samples.len() as f64).sqrt();
    Ok(fit)
}

/// Default offset grid: 11 points on `[0, 0.5 R]`.
pub fn default_offset_grid(radius_km: f64) -> Vec<f64> {
    (0..=10)
        .map(|i| radius_km * f64::from(5 * i) / 100.0)
        .collect()
}
