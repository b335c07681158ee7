//! Distance laws for uniformly placed access points in a disk.
//!
//! All distances are in km. The evaluation point sits at distance `d` from
//! the disk center; by rotational symmetry that scalar is all that matters.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};

/// Below this survival mass the conditioning set `[r1, R + d]` is treated as a point.
const DEGENERATE_SURVIVAL: f64 = 1e-10;

/// Circular deployment area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskGeometry {
    radius_km: f64,
}

impl DiskGeometry {
    pub fn new(radius_km: f64) -> Result<Self> {
        if !(radius_km.is_finite() && radius_km > 0.0) {
            return Err(Error::invalid(
                "radius_km",
                format!("must be positive and finite, got {radius_km}"),
            ));
        }
        Ok(Self { radius_km })
    }

    pub fn radius_km(&self) -> f64 {
        self.radius_km
    }

    pub fn area_km2(&self) -> f64 {
        PI * self.radius_km * self.radius_km
    }

    /// Checks that `point` lies inside this disk.
    pub fn validate(&self, point: EvalPoint) -> Result<()> {
        if point.d_km > self.radius_km {
            return Err(Error::domain(format!(
                "evaluation point d = {} km lies outside the disk of radius {} km",
                point.d_km, self.radius_km
            )));
        }
        Ok(())
    }

    /// Largest possible AP distance seen from `point`.
    pub fn max_distance(&self, point: EvalPoint) -> f64 {
        self.radius_km + point.d_km
    }
}

/// Distance of the evaluation location from the disk center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    d_km: f64,
}

impl EvalPoint {
    pub const CENTER: EvalPoint = EvalPoint { d_km: 0.0 };

    pub fn new(d_km: f64) -> Result<Self> {
        if !(d_km.is_finite() && d_km >= 0.0) {
            return Err(Error::invalid(
                "d_km",
                format!("must be non-negative and finite, got {d_km}"),
            ));
        }
        Ok(Self { d_km })
    }

    pub fn d_km(&self) -> f64 {
        self.d_km
    }
}

fn check_distance(name: &str, r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::domain(format!(
            "{name} must be non-negative and finite, got {r}"
        )));
    }
    Ok(())
}

fn check_n_aps(n_aps: u32) -> Result<()> {
    if n_aps < 1 {
        return Err(Error::invalid("n_aps", "at least one AP is required"));
    }
    Ok(())
}

/// Unchecked CDF of the distance to one uniformly placed AP.
pub(crate) fn cdf(r: f64, d: f64, big_r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r >= big_r + d {
        return 1.0;
    }
    if r <= big_r - d {
        let x = r / big_r;
        return x * x;
    }
    // Lens between the disk and a circle of radius r around the point,
    // written as two circular segments.
    let lens = r * r * x_minus_sin(2.0 * half_angle_at_point(r, d, big_r))
        + big_r * big_r * x_minus_sin(2.0 * half_angle_at_center(r, d, big_r));
    (lens / (2.0 * PI * big_r * big_r)).clamp(0.0, 1.0)
}

/// `x - sin x` without cancellation near zero.
fn x_minus_sin(x: f64) -> f64 {
    if x.abs() < 0.1 {
        let x2 = x * x;
        x * x2 / 6.0
            * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0 * (1.0 - x2 / 110.0))))
    } else {
        x - x.sin()
    }
}

/// Half-angle at the evaluation point of the arc of radius r inside the disk.
fn half_angle_at_point(r: f64, d: f64, big_r: f64) -> f64 {
    // sin^2(theta/2) = (R^2 - (r - d)^2) / (4 d r)
    let s = (big_r - r + d) * (big_r + r - d) / (4.0 * d * r);
    2.0 * s.clamp(0.0, 1.0).sqrt().asin()
}

/// Half-angle at the disk center of the boundary arc within distance r.
fn half_angle_at_center(r: f64, d: f64, big_r: f64) -> f64 {
    // sin^2(theta/2) = (r^2 - (R - d)^2) / (4 d R)
    let s = (r - big_r + d) * (r + big_r - d) / (4.0 * d * big_r);
    2.0 * s.clamp(0.0, 1.0).sqrt().asin()
}

/// Unchecked density of the distance to one uniformly placed AP.
pub(crate) fn pdf(r: f64, d: f64, big_r: f64) -> f64 {
    if r <= 0.0 || r >= big_r + d {
        return 0.0;
    }
    let r2 = big_r * big_r;
    if r <= big_r - d {
        return 2.0 * r / r2;
    }
    2.0 * r * half_angle_at_point(r, d, big_r) / (PI * r2)
}

/// Unchecked survival `(1 - F)^n` of the nearest of `n` APs.
fn nearest_survival(r: f64, n: u32, d: f64, big_r: f64) -> f64 {
    let s = 1.0 - cdf(r, d, big_r);
    if n == 1 {
        s
    } else {
        s.powf(f64::from(n))
    }
}

/// CDF of the distance from `point` to one AP placed uniformly in `disk`.
pub fn arbitrary_ap_cdf(r: f64, point: EvalPoint, disk: DiskGeometry) -> Result<f64> {
    disk.validate(point)?;
    check_distance("r", r)?;
    Ok(cdf(r, point.d_km, disk.radius_km))
}

/// Density of the distance from `point` to one AP placed uniformly in `disk`.
pub fn arbitrary_ap_pdf(r: f64, point: EvalPoint, disk: DiskGeometry) -> Result<f64> {
    disk.validate(point)?;
    check_distance("r", r)?;
    Ok(pdf(r, point.d_km, disk.radius_km))
}

/// CDF of the distance from `point` to the nearest of `n_aps` APs.
pub fn nearest_ap_cdf(r1: f64, n_aps: u32, point: EvalPoint, disk: DiskGeometry) -> Result<f64> {
    disk.validate(point)?;
    check_distance("r1", r1)?;
    check_n_aps(n_aps)?;
    if n_aps == 1 {
        return Ok(cdf(r1, point.d_km, disk.radius_km));
    }
    Ok(1.0 - nearest_survival(r1, n_aps, point.d_km, disk.radius_km))
}

/// Density of the nearest-AP distance.
pub fn nearest_ap_pdf(r1: f64, n_aps: u32, point: EvalPoint, disk: DiskGeometry) -> Result<f64> {
    disk.validate(point)?;
    check_distance("r1", r1)?;
    check_n_aps(n_aps)?;
    Ok(nearest_pdf(r1, n_aps, point.d_km, disk.radius_km))
}

pub(crate) fn nearest_pdf(r1: f64, n: u32, d: f64, big_r: f64) -> f64 {
    let f = pdf(r1, d, big_r);
    if f == 0.0 {
        return 0.0;
    }
    let tail = if n == 1 {
        1.0
    } else {
        nearest_survival(r1, n - 1, d, big_r)
    };
    f64::from(n) * tail * f
}

/// Distance below which the nearest of `n_aps` APs lies with probability `q`.
pub fn nearest_ap_quantile(
    q: f64,
    n_aps: u32,
    point: EvalPoint,
    disk: DiskGeometry,
) -> Result<f64> {
    disk.validate(point)?;
    check_n_aps(n_aps)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!(
            "quantile level must lie in [0, 1], got {q}"
        )));
    }
    Ok(nearest_quantile(q, n_aps, point.d_km, disk.radius_km))
}

pub(crate) fn nearest_quantile(q: f64, n: u32, d: f64, big_r: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return big_r + d;
    }
    // Single-AP level p with 1 - (1 - p)^n = q.
    let p = -((-q).ln_1p() / f64::from(n)).exp_m1();
    let inner = big_r - d;
    if p <= (inner / big_r).powi(2) {
        return big_r * p.sqrt();
    }
    let (mut lo, mut hi) = (inner, big_r + d);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid, d, big_r) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// CDF of an interferer's distance given that the nearest AP is at `r1`.
pub fn interferer_conditional_cdf(
    rj: f64,
    r1: f64,
    point: EvalPoint,
    disk: DiskGeometry,
) -> Result<f64> {
    disk.validate(point)?;
    check_distance("rj", rj)?;
    check_distance("r1", r1)?;
    let (d, big_r) = (point.d_km, disk.radius_km);
    let f1 = cdf(r1, d, big_r);
    if f1 >= 1.0 {
        return Err(Error::domain(format!(
            "conditioning distance r1 = {r1} km leaves no room for interferers"
        )));
    }
    if rj <= r1 {
        return Ok(0.0);
    }
    if rj >= big_r + d {
        return Ok(1.0);
    }
    Ok(((cdf(rj, d, big_r) - f1) / (1.0 - f1)).clamp(0.0, 1.0))
}

fn check_moment_args(exponent: f64, r1: f64, point: EvalPoint, disk: DiskGeometry) -> Result<()> {
    disk.validate(point)?;
    if !(exponent.is_finite() && exponent > 0.0) {
        return Err(Error::domain(format!(
            "exponent must be positive and finite, got {exponent}"
        )));
    }
    if !(r1.is_finite() && r1 > 0.0) {
        return Err(Error::domain(format!(
            "r1 must be positive and finite, got {r1}"
        )));
    }
    if r1 > disk.max_distance(point) {
        return Err(Error::domain(format!(
            "r1 = {r1} km exceeds the farthest possible AP distance {} km",
            disk.max_distance(point)
        )));
    }
    Ok(())
}

/// `expm1(a t) / a`, continuous at `a = 0`.
fn expm1_over(a: f64, t: f64) -> f64 {
    if a == 0.0 {
        t
    } else {
        (a * t).exp_m1() / a
    }
}

/// `E[r^-p | r1]` for an interferer seen from the center, `p > 2`.
fn center_moment(p: f64, r1: f64, big_r: f64) -> Result<f64> {
    if p <= 2.0 {
        return Err(Error::domain(format!(
            "the center moment requires an exponent above 2, got {p}"
        )));
    }
    let u = (r1 / big_r).ln();
    if u >= 0.0 {
        return Ok(big_r.powf(-p));
    }
    // 2 (r1^(2-p) - R^(2-p)) / ((p-2)(R^2 - r1^2)) written in u = ln(r1/R)
    let num = ((2.0 - p) * u).exp_m1();
    let den = (p - 2.0) * -(2.0 * u).exp_m1();
    Ok(2.0 * big_r.powf(-p) * num / den)
}

/// Integrates `G(r) p r^(-p-1)` over the inner branch `[r1, c]`, where `F = r^2/R^2`.
fn inner_branch_part(p: f64, r1: f64, c: f64, big_r: f64, survival: f64) -> f64 {
    if c <= r1 {
        return 0.0;
    }
    let t = (c / r1).ln();
    let bracket = expm1_over(2.0 - p, t) + (-p * t).exp_m1() / p;
    p * r1.powf(2.0 - p) / (big_r * big_r * survival) * bracket
}

/// Conditional inverse-power moment `E[r_j^(-exponent) | r1]` of an interferer distance.
///
/// At the center a closed form is used; elsewhere the inner branch of the
/// distance law is integrated analytically and the lens branch by adaptive
/// quadrature of the conditional CDF.
pub fn conditional_inverse_power_moment(
    exponent: f64,
    r1: f64,
    point: EvalPoint,
    disk: DiskGeometry,
) -> Result<f64> {
    check_moment_args(exponent, r1, point, disk)?;
    moment(exponent, r1, point.d_km, disk.radius_km)
}

pub(crate) fn moment(p: f64, r1: f64, d: f64, big_r: f64) -> Result<f64> {
    if d == 0.0 {
        return center_moment(p, r1, big_r);
    }
    let far = big_r + d;
    let f1 = cdf(r1, d, big_r);
    let survival = 1.0 - f1;
    if survival < DEGENERATE_SURVIVAL {
        return Ok(r1.powf(-p));
    }
    let c = big_r - d;
    let inner = inner_branch_part(p, r1, c, big_r, survival);
    let start = r1.max(c);
    let base = far.powf(-p);
    let lens = if start < far {
        let g = |r: f64| ((cdf(r, d, big_r) - f1) / survival) * p * r.powf(-p - 1.0);
        let tol = Tolerance::new(1e-13 * base, 1e-11);
        integrate(g, &[start, far], tol)?.value
    } else {
        0.0
    };
    Ok(base + inner + lens)
}

/// Same moment as [`conditional_inverse_power_moment`] but by quadrature alone,
/// without any closed-form pieces. Used to cross-check the fast paths.
pub fn conditional_inverse_power_moment_quadrature(
    exponent: f64,
    r1: f64,
    point: EvalPoint,
    disk: DiskGeometry,
) -> Result<f64> {
    check_moment_args(exponent, r1, point, disk)?;
    let (d, big_r, p) = (point.d_km, disk.radius_km, exponent);
    let far = big_r + d;
    let f1 = cdf(r1, d, big_r);
    let survival = 1.0 - f1;
    if survival < DEGENERATE_SURVIVAL {
        return Ok(r1.powf(-p));
    }
    // Geometric panels follow the r^(-p-1) decay away from r1.
    let mut breaks = vec![r1];
    let mut x = 2.0 * r1;
    while x < far {
        breaks.push(x);
        x *= 2.0;
    }
    let c = big_r - d;
    if c > r1 && c < far {
        breaks.push(c);
    }
    breaks.push(far);
    breaks.sort_by(f64::total_cmp);
    let g = |r: f64| ((cdf(r, d, big_r) - f1) / survival) * p * r.powf(-p - 1.0);
    let base = far.powf(-p);
    let tail = integrate(g, &breaks, Tolerance::new(1e-14 * base, 1e-12))?.value;
    Ok(base + tail)
}
