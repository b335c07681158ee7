//! Coverage probability, capacity coverage and ergodic capacity.

use std::collections::HashMap;
use std::f64::consts::{LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, EvalPoint};
use crate::mma::{self, LognormalParams, NetworkModel};
use crate::quadrature::{integrate, try_integrate, Tolerance};

/// Quantile levels of the serving distance used as initial panel edges.
const PANEL_QUANTILES: [f64; 11] = [0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99];

/// Tolerance of the outer integral over the serving distance.
pub const OUTER_TOLERANCE: Tolerance = Tolerance::new(1e-9, 1e-9);

/// Integrand level below which the ergodic integral is truncated.
pub const ERGODIC_TRUNCATION: f64 = 1e-6;

/// Gaussian tail probability `P(X > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Probability that a lognormal variate with `params` exceeds `threshold`.
pub fn conditional_coverage(threshold: f64, params: LognormalParams) -> Result<f64> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::domain(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    Ok(exceedance(threshold.ln(), params))
}

fn exceedance(ln_t: f64, params: LognormalParams) -> f64 {
    if params.sigma == 0.0 {
        return if ln_t < params.mu { 1.0 } else { 0.0 };
    }
    q_function((ln_t - params.mu) / params.sigma)
}

/// What a coverage query compares against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverageQuery {
    /// Linear SIR or SINR threshold.
    Sinr { threshold: f64 },
    /// Per-user capacity threshold in b/s/Hz.
    Capacity { c0: f64 },
}

impl CoverageQuery {
    pub fn sinr(threshold: f64) -> Result<Self> {
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(Error::invalid(
                "threshold",
                format!("must be positive and finite, got {threshold}"),
            ));
        }
        Ok(Self::Sinr { threshold })
    }

    pub fn sinr_db(threshold_db: f64) -> Result<Self> {
        if !threshold_db.is_finite() {
            return Err(Error::invalid(
                "threshold_db",
                format!("must be finite, got {threshold_db}"),
            ));
        }
        Self::sinr(10f64.powf(threshold_db / 10.0))
    }

    pub fn capacity(c0: f64) -> Result<Self> {
        if !(c0.is_finite() && c0 >= 0.0) {
            return Err(Error::invalid(
                "c0",
                format!("must be non-negative and finite, got {c0}"),
            ));
        }
        Ok(Self::Capacity { c0 })
    }

    /// Equivalent linear SINR threshold for a network of `n_aps` APs.
    pub fn linear_threshold(&self, n_aps: u32) -> f64 {
        match *self {
            Self::Sinr { threshold } => threshold,
            Self::Capacity { c0 } => capacity_threshold(c0, n_aps),
        }
    }
}

/// SINR needed for a per-user capacity of `c0` when the band is shared by `n_aps` users.
pub fn capacity_threshold(c0: f64, n_aps: u32) -> f64 {
    (c0 / f64::from(n_aps) * LN_2).exp_m1()
}

/// Expected AP count `pi R^2 lambda`, rounded half to even.
pub fn density_to_n_aps(density_per_km2: f64, radius_km: f64) -> Result<u32> {
    if !(density_per_km2.is_finite() && density_per_km2 > 0.0) {
        return Err(Error::invalid(
            "density",
            format!("must be positive and finite, got {density_per_km2}"),
        ));
    }
    let expected = std::f64::consts::PI * radius_km * radius_km * density_per_km2;
    let n = expected.round_ties_even();
    if !(1.0..=f64::from(u32::MAX)).contains(&n) {
        return Err(Error::invalid(
            "density",
            format!("gives {expected} expected APs, which does not round to a valid count"),
        ));
    }
    Ok(n as u32)
}

fn check_model(model: &NetworkModel) -> Result<()> {
    if model.n_aps() < 2 && model.is_interference_limited() {
        return Err(Error::invalid(
            "n_aps",
            "an interference-limited network needs at least two APs",
        ));
    }
    Ok(())
}

/// Panel edges for integrals over the serving distance.
pub(crate) fn serving_breakpoints(point: EvalPoint, model: &NetworkModel) -> Vec<f64> {
    let (d, big_r, n) = (point.d_km(), model.disk().radius_km(), model.n_aps());
    let mut breaks = vec![0.0, big_r + d];
    breaks.extend(
        PANEL_QUANTILES
            .iter()
            .map(|&q| geometry::nearest_quantile(q, n, d, big_r)),
    );
    if d > 0.0 {
        breaks.push(big_r - d);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

/// Averages `g(params(r1))` against the serving-distance density.
pub(crate) fn average_over_serving<G, P>(
    point: EvalPoint,
    model: &NetworkModel,
    mut params: P,
    g: G,
) -> Result<f64>
where
    G: Fn(LognormalParams) -> f64,
    P: FnMut(f64) -> Result<LognormalParams>,
{
    let (d, big_r, n) = (point.d_km(), model.disk().radius_km(), model.n_aps());
    let breaks = serving_breakpoints(point, model);
    let integrand = |r1: f64| -> Result<f64> {
        let f = geometry::nearest_pdf(r1, n, d, big_r);
        if f == 0.0 {
            return Ok(0.0);
        }
        Ok(g(params(r1)?) * f)
    };
    Ok(try_integrate(integrand, &breaks, OUTER_TOLERANCE)?.value)
}

fn coverage_with<P>(ln_t: f64, point: EvalPoint, model: &NetworkModel, params: P) -> Result<f64>
where
    P: FnMut(f64) -> Result<LognormalParams>,
{
    if ln_t == f64::NEG_INFINITY {
        return Ok(1.0);
    }
    let value = average_over_serving(point, model, params, |p| exceedance(ln_t, p))?;
    Ok(value.clamp(0.0, 1.0))
}

/// Coverage probability `P(SINR > T)` averaged over AP placements.
pub fn coverage_probability(
    query: CoverageQuery,
    point: EvalPoint,
    model: &NetworkModel,
) -> Result<f64> {
    model.disk().validate(point)?;
    check_model(model)?;
    let t = query.linear_threshold(model.n_aps());
    coverage_with(t.ln(), point, model, |r1| {
        mma::sinr_params(r1, point, model)
    })
}

/// Probability that the per-user capacity exceeds `c0` b/s/Hz.
pub fn capacity_coverage(c0: f64, point: EvalPoint, model: &NetworkModel) -> Result<f64> {
    coverage_probability(CoverageQuery::capacity(c0)?, point, model)
}

/// Ergodic per-user capacity and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicCapacity {
    /// b/s/Hz.
    pub value: f64,
    /// Upper limit of the capacity-coverage integral.
    pub truncation_c0: f64,
    /// Error estimate of the quadrature.
    pub error: f64,
}

/// Memoizes the conditional link law over the serving distance.
struct LinkCache<'a> {
    point: EvalPoint,
    model: &'a NetworkModel,
    cache: HashMap<u64, LognormalParams>,
}

impl<'a> LinkCache<'a> {
    fn new(point: EvalPoint, model: &'a NetworkModel) -> Self {
        Self {
            point,
            model,
            cache: HashMap::new(),
        }
    }

    fn params(&mut self, r1: f64) -> Result<LognormalParams> {
        if let Some(p) = self.cache.get(&r1.to_bits()) {
            return Ok(*p);
        }
        let p = mma::sinr_params(r1, self.point, self.model)?;
        self.cache.insert(r1.to_bits(), p);
        Ok(p)
    }

    fn capacity_coverage(&mut self, c0: f64) -> Result<f64> {
        if c0 == 0.0 {
            return Ok(1.0);
        }
        let ln_t = capacity_threshold(c0, self.model.n_aps()).ln();
        let (point, model) = (self.point, self.model);
        coverage_with(ln_t, point, model, |r1| self.params(r1))
    }

    fn truncation(&mut self) -> Result<f64> {
        let mut upper = 1.0;
        while self.capacity_coverage(upper)? >= ERGODIC_TRUNCATION {
            upper *= 2.0;
            if upper > 1e6 {
                return Err(Error::domain(
                    "capacity coverage does not decay below the truncation level",
                ));
            }
        }
        Ok(upper)
    }
}

/// Ergodic capacity as the integral of capacity coverage over the target.
pub fn ergodic_capacity(point: EvalPoint, model: &NetworkModel) -> Result<ErgodicCapacity> {
    model.disk().validate(point)?;
    check_model(model)?;
    let mut link = LinkCache::new(point, model);
    let upper = link.truncation()?;
    // The integrand is smooth in c0; a few initial panels keep the bisection short.
    let breaks: Vec<f64> = (0..=8).map(|i| upper * f64::from(i) / 8.0).collect();
    let integral = try_integrate(
        |c0| link.capacity_coverage(c0),
        &breaks,
        Tolerance::new(1e-7, 1e-7),
    )?;
    Ok(ErgodicCapacity {
        value: integral.value.max(0.0),
        truncation_c0: upper,
        error: integral.error,
    })
}

/// Same integral by the trapezoid rule on `steps` equal intervals.
pub fn ergodic_capacity_trapezoid(
    point: EvalPoint,
    model: &NetworkModel,
    steps: usize,
) -> Result<f64> {
    model.disk().validate(point)?;
    check_model(model)?;
    if steps == 0 {
        return Err(Error::invalid("steps", "at least one interval is required"));
    }
    let mut link = LinkCache::new(point, model);
    let upper = link.truncation()?;
    let h = upper / steps as f64;
    let mut sum = 0.5 * (link.capacity_coverage(0.0)? + link.capacity_coverage(upper)?);
    for i in 1..steps {
        sum += link.capacity_coverage(h * i as f64)?;
    }
    Ok(sum * h)
}

/// Mean of the nearest-AP distance; handy for sanity checks of the outer grid.
pub fn mean_serving_distance(point: EvalPoint, model: &NetworkModel) -> Result<f64> {
    model.disk().validate(point)?;
    let (d, big_r, n) = (point.d_km(), model.disk().radius_km(), model.n_aps());
    let breaks = serving_breakpoints(point, model);
    Ok(integrate(
        |r| r * geometry::nearest_pdf(r, n, d, big_r),
        &breaks,
        OUTER_TOLERANCE,
    )?
    .value)
}
