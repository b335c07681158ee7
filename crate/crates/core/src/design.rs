//! Network dimensioning and parametric sweeps.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{self, CoverageQuery};
use crate::error::{Error, Result};
use crate::geometry::{DiskGeometry, EvalPoint};
use crate::mma::NetworkModel;

pub const DEFAULT_N_MAX: u32 = 10_000;
/// Smallest AP count the solver considers.
pub const MIN_DESIGN_APS: u32 = 3;

/// Everything about a deployment except the AP count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub radius_km: f64,
    pub alpha: f64,
    pub shadow_std_db: f64,
    pub tx_power_dbm: f64,
    pub noise_power_dbm: Option<f64>,
}

impl Scenario {
    pub fn interference_limited(radius_km: f64, alpha: f64, shadow_std_db: f64) -> Self {
        Self {
            radius_km,
            alpha,
            shadow_std_db,
            tx_power_dbm: 0.0,
            noise_power_dbm: None,
        }
    }

    pub fn model(&self, n_aps: u32) -> Result<NetworkModel> {
        NetworkModel::new(
            DiskGeometry::new(self.radius_km)?,
            n_aps,
            self.alpha,
            self.shadow_std_db,
            self.tx_power_dbm,
            self.noise_power_dbm,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.model(MIN_DESIGN_APS).map(|_| ())
    }
}

/// What the design has to guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignTarget {
    /// `P(C > c0) >= min_probability` at the worst point.
    CapacityCoverage { c0: f64, min_probability: f64 },
    /// Ergodic capacity at the worst point at least `min_capacity` b/s/Hz.
    ErgodicCapacity { min_capacity: f64 },
}

impl DesignTarget {
    fn validate(&self) -> Result<()> {
        match *self {
            Self::CapacityCoverage {
                c0,
                min_probability,
            } => {
                if !(c0.is_finite() && c0 > 0.0) {
                    return Err(Error::invalid("c0", format!("must be positive, got {c0}")));
                }
                if !(min_probability > 0.0 && min_probability < 1.0) {
                    return Err(Error::invalid(
                        "min_probability",
                        format!("must lie in (0, 1), got {min_probability}"),
                    ));
                }
            }
            Self::ErgodicCapacity { min_capacity } => {
                if !(min_capacity.is_finite() && min_capacity > 0.0) {
                    return Err(Error::invalid(
                        "min_capacity",
                        format!("must be positive, got {min_capacity}"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn threshold(&self) -> f64 {
        match *self {
            Self::CapacityCoverage {
                min_probability, ..
            } => min_probability,
            Self::ErgodicCapacity { min_capacity } => min_capacity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub target: DesignTarget,
    pub scenario: Scenario,
    pub n_max: u32,
}

impl DesignSpec {
    pub fn new(target: DesignTarget, scenario: Scenario) -> Self {
        Self {
            target,
            scenario,
            n_max: DEFAULT_N_MAX,
        }
    }

    pub fn with_n_max(mut self, n_max: u32) -> Self {
        self.n_max = n_max;
        self
    }

    /// Evaluation points: the center, plus the edge when noise is present.
    pub fn worst_case_points(&self) -> Vec<EvalPoint> {
        let mut points = vec![EvalPoint::CENTER];
        if self.scenario.noise_power_dbm.is_some() {
            points.push(EvalPoint::new(self.scenario.radius_km).expect("radius is positive"));
        }
        points
    }

    /// Target metric at the worst candidate point for `n_aps` APs.
    pub fn evaluate(&self, n_aps: u32) -> Result<f64> {
        let model = self.scenario.model(n_aps)?;
        let mut worst = f64::INFINITY;
        for point in self.worst_case_points() {
            let v = match self.target {
                DesignTarget::CapacityCoverage { c0, .. } => {
                    coverage::capacity_coverage(c0, point, &model)?
                }
                DesignTarget::ErgodicCapacity { .. } => {
                    coverage::ergodic_capacity(point, &model)?.value
                }
            };
            worst = worst.min(v);
        }
        Ok(worst)
    }
}

/// Result of [`required_aps`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignOutcome {
    pub n_aps: u32,
    /// Target metric achieved at `n_aps`.
    pub value: f64,
    /// Metric at `n_aps - 1`, when that count is admissible.
    pub value_below: Option<f64>,
    pub density_per_km2: f64,
    /// Whether a monotonicity violation forced a linear scan.
    pub linear_scan: bool,
    /// Every evaluated `(N, metric)` pair in increasing `N`.
    pub evaluations: Vec<(u32, f64)>,
}

struct Search<'a> {
    spec: &'a DesignSpec,
    memo: BTreeMap<u32, f64>,
}

impl Search<'_> {
    fn value(&mut self, n: u32) -> Result<f64> {
        if let Some(&v) = self.memo.get(&n) {
            return Ok(v);
        }
        let v = self.spec.evaluate(n)?;
        self.memo.insert(n, v);
        Ok(v)
    }

    fn meets(&mut self, n: u32) -> Result<bool> {
        Ok(self.value(n)? >= self.spec.target.threshold())
    }

    fn monotone(&self) -> bool {
        self.memo
            .values()
            .zip(self.memo.values().skip(1))
            .all(|(a, b)| *b >= *a - 1e-12)
    }

    fn infeasible(&self) -> Error {
        let (best_n_aps, best_value) =
            self.memo
                .iter()
                .fold((0, f64::NEG_INFINITY), |best, (&n, &v)| {
                    if v > best.1 {
                        (n, v)
                    } else {
                        best
                    }
                });
        Error::Infeasible {
            n_max: self.spec.n_max,
            best_n_aps,
            best_value,
        }
    }

    /// Doubling then bisection; `None` when monotonicity fails along the way.
    fn bracketed(&mut self) -> Result<Option<u32>> {
        let n_max = self.spec.n_max;
        if self.meets(MIN_DESIGN_APS)? {
            return Ok(Some(MIN_DESIGN_APS));
        }
        let mut lo = MIN_DESIGN_APS;
        let mut hi = MIN_DESIGN_APS;
        loop {
            if hi == n_max {
                return Err(self.infeasible());
            }
            hi = hi.saturating_mul(2).min(n_max);
            let ok = self.meets(hi)?;
            if !self.monotone() {
                return Ok(None);
            }
            if ok {
                break;
            }
            lo = hi;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let ok = self.meets(mid)?;
            if !self.monotone() {
                return Ok(None);
            }
            if ok {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(hi))
    }

    fn linear(&mut self) -> Result<u32> {
        for n in MIN_DESIGN_APS..=self.spec.n_max {
            if self.meets(n)? {
                return Ok(n);
            }
        }
        Err(self.infeasible())
    }
}

/// Smallest AP count meeting the design target at the worst-case point.
pub fn required_aps(spec: &DesignSpec) -> Result<DesignOutcome> {
    spec.target.validate()?;
    spec.scenario.validate()?;
    if spec.n_max < MIN_DESIGN_APS {
        return Err(Error::invalid(
            "n_max",
            format!("must be at least {MIN_DESIGN_APS}, got {}", spec.n_max),
        ));
    }
    let mut search = Search {
        spec,
        memo: BTreeMap::new(),
    };
    let mut linear_scan = false;
    let mut n = match search.bracketed()? {
        Some(n) => n,
        None => {
            log::warn!("capacity is not monotone in N on the search path; scanning linearly");
            linear_scan = true;
            search.linear()?
        }
    };
    // Postcondition: the target holds at n and fails at n - 1.
    let below_fails = n == MIN_DESIGN_APS || !search.meets(n - 1)?;
    if !search.meets(n)? || !below_fails {
        log::warn!("bracketing postcondition failed at N = {n}; scanning linearly");
        linear_scan = true;
        n = search.linear()?;
    }
    let value = search.value(n)?;
    let value_below = if n > MIN_DESIGN_APS {
        Some(search.value(n - 1)?)
    } else {
        None
    };
    let area = DiskGeometry::new(spec.scenario.radius_km)?.area_km2();
    Ok(DesignOutcome {
        n_aps: n,
        value,
        value_below,
        density_per_km2: f64::from(n) / area,
        linear_scan,
        evaluations: search.memo.into_iter().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub d_km: f64,
    pub coverage: f64,
}

/// Coverage along a radius; rows follow the order of `grid`.
pub fn radial_profile(
    model: &NetworkModel,
    query: CoverageQuery,
    grid: &[f64],
) -> Result<Vec<ProfileRow>> {
    grid.par_iter()
        .map(|&d| {
            let coverage = coverage::coverage_probability(query, EvalPoint::new(d)?, model)?;
            Ok(ProfileRow { d_km: d, coverage })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub density_per_km2: f64,
    pub n_aps: u32,
    pub coverage: f64,
}

/// Coverage at `point` for each AP density.
pub fn density_sweep(
    scenario: &Scenario,
    densities: &[f64],
    query: CoverageQuery,
    point: EvalPoint,
) -> Result<Vec<DensityRow>> {
    densities
        .par_iter()
        .map(|&density| {
            let n_aps = coverage::density_to_n_aps(density, scenario.radius_km)?;
            let model = scenario.model(n_aps)?;
            Ok(DensityRow {
                density_per_km2: density,
                n_aps,
                coverage: coverage::coverage_probability(query, point, &model)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrRow {
    pub snr_t_db: f64,
    pub coverage: f64,
}

/// Coverage at `point` as the transmit SNR `tx / noise` varies; the
/// transmit power of `model` is kept and the noise power adjusted.
pub fn snr_sweep(
    model: &NetworkModel,
    snr_t_db: &[f64],
    query: CoverageQuery,
    point: EvalPoint,
) -> Result<Vec<SnrRow>> {
    snr_t_db
        .par_iter()
        .map(|&snr| {
            if !snr.is_finite() {
                return Err(Error::invalid(
                    "snr_t_db",
                    format!("must be finite, got {snr}"),
                ));
            }
            let noise_mw = model.tx_power_mw() * 10f64.powf(-snr / 10.0);
            let m = model.with_noise_mw(noise_mw)?;
            Ok(SnrRow {
                snr_t_db: snr,
                coverage: coverage::coverage_probability(query, point, &m)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(shadow: f64) -> Scenario {
        Scenario::interference_limited(1.0, 3.87, shadow)
    }

    #[test]
    fn vanishing_target_gives_floor() {
        let spec = DesignSpec::new(
            DesignTarget::CapacityCoverage {
                c0: 5.0,
                min_probability: 1e-9,
            },
            scenario(6.0),
        );
        let out = required_aps(&spec).unwrap();
        assert_eq!(out.n_aps, 3);
        assert_eq!(out.value_below, None);
    }

    #[test]
    fn solution_satisfies_postcondition() {
        let spec = DesignSpec::new(
            DesignTarget::CapacityCoverage {
                c0: 8.0,
                min_probability: 0.6,
            },
            scenario(0.0),
        );
        let out = required_aps(&spec).unwrap();
        assert!(out.value >= 0.6);
        assert!(out.value_below.unwrap() < 0.6);
        assert_eq!(out.value, spec.evaluate(out.n_aps).unwrap());
        assert!(!out.linear_scan);
    }

    #[test]
    fn ergodic_target() {
        let spec = DesignSpec::new(
            DesignTarget::ErgodicCapacity { min_capacity: 10.0 },
            Scenario::interference_limited(1.0, 4.0, 0.0),
        );
        let out = required_aps(&spec).unwrap();
        assert!(out.value >= 10.0);
        assert!(out.value_below.unwrap() < 10.0);
    }

    #[test]
    fn infeasible_within_cap() {
        let spec = DesignSpec::new(
            DesignTarget::CapacityCoverage {
                c0: 5.0,
                min_probability: 0.99,
            },
            scenario(6.0),
        )
        .with_n_max(8);
        match required_aps(&spec) {
            Err(Error::Infeasible {
                n_max, best_value, ..
            }) => {
                assert_eq!(n_max, 8);
                assert!(best_value < 0.99);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_targets() {
        let bad = DesignSpec::new(
            DesignTarget::CapacityCoverage {
                c0: 5.0,
                min_probability: 1.0,
            },
            scenario(6.0),
        );
        assert!(matches!(
            required_aps(&bad),
            Err(Error::InvalidParameter {
                field: "min_probability",
                ..
            })
        ));
        let bad = DesignSpec::new(
            DesignTarget::CapacityCoverage {
                c0: 0.0,
                min_probability: 0.5,
            },
            scenario(6.0),
        );
        assert!(required_aps(&bad).is_err());
    }

    #[test]
    fn noisy_design_checks_the_edge() {
        let mut s = scenario(0.0);
        s.noise_power_dbm = Some(-20.0);
        let spec = DesignSpec::new(
            DesignTarget::CapacityCoverage {
                c0: 2.0,
                min_probability: 0.5,
            },
            s,
        );
        assert_eq!(spec.worst_case_points().len(), 2);
        let out = required_aps(&spec).unwrap();
        assert!(out.value >= 0.5);
    }

    #[test]
    fn profile_keeps_order() {
        let model = scenario(6.0).model(3).unwrap();
        let grid = [0.9, 0.0, 0.5];
        let rows = radial_profile(&model, CoverageQuery::sinr(1.0).unwrap(), &grid).unwrap();
        assert_eq!(rows.iter().map(|r| r.d_km).collect::<Vec<_>>(), grid);
    }

    #[test]
    fn snr_sweep_increases_towards_interference_limit() {
        let model = scenario(0.0).model(5).unwrap();
        let q = CoverageQuery::sinr(1.0).unwrap();
        let rows = snr_sweep(&model, &[0.0, 10.0, 20.0, 40.0], q, EvalPoint::CENTER).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].coverage >= w[0].coverage);
        }
        let sir = coverage::coverage_probability(q, EvalPoint::CENTER, &model).unwrap();
        assert!((rows[3].coverage - sir).abs() < 1e-3);
    }
}
