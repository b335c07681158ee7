use std::path::Path;

use fincov::coverage::{self, CoverageQuery, OUTER_TOLERANCE};
use fincov::design::{self, DesignSpec, DesignTarget, Scenario, DEFAULT_N_MAX};
use fincov::montecarlo::{self, SimConfig, DEFAULT_TRIALS};
use fincov::{closedform, perturb, EvalPoint, NetworkModel};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::args::{Command, Common, ConfigFile, FitUnit, Format, TargetKind, Threshold};
use crate::output::{Cell, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fincov::Error),
    #[error("invalid `{field}`: {reason}")]
    Usage { field: &'static str, reason: String },
    #[error("config file {path}: {reason}")]
    Config { path: String, reason: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } | CliError::Config { .. } => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                fincov::Error::Domain(_) | fincov::Error::InvalidParameter { .. } => 2,
                fincov::Error::Infeasible { .. } => 4,
                fincov::Error::Quadrature { .. }
                | fincov::Error::RankDeficient { .. }
                | fincov::Error::DegenerateRealization => 3,
            },
        }
    }
}

fn usage(field: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Usage {
        field,
        reason: reason.into(),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn load_config(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    toml::from_str(&text).map_err(|e| CliError::Config {
        path: path.display().to_string(),
        reason: e.message().to_owned(),
    })
}

const DEFAULT_RADIUS_KM: f64 = 1.0;
const DEFAULT_ALPHA: f64 = 3.87;
const DEFAULT_DENSITY: f64 = 1.0;

/// How the AP count was specified.
#[derive(Debug, Clone, Copy)]
enum ApCount {
    Count(u32),
    Density(f64),
}

/// Scenario after merging defaults, config file and flags.
struct Resolved {
    format: Format,
    scenario: Scenario,
    n_aps: u32,
    config: Map<String, Value>,
}

impl Resolved {
    fn new(common: &Common, cfg: &ConfigFile) -> CliResult<Self> {
        let format = common.format.or(cfg.format).unwrap_or(Format::Csv);
        let scenario = Scenario {
            radius_km: common
                .radius_km
                .or(cfg.radius_km)
                .unwrap_or(DEFAULT_RADIUS_KM),
            alpha: common.alpha.or(cfg.alpha).unwrap_or(DEFAULT_ALPHA),
            shadow_std_db: common.shadow_db.or(cfg.shadow_db).unwrap_or(0.0),
            tx_power_dbm: common.tx_power_dbm.or(cfg.tx_power_dbm).unwrap_or(0.0),
            noise_power_dbm: common.noise_power_dbm.or(cfg.noise_power_dbm),
        };
        let aps = match (common.n_aps, common.density) {
            (Some(_), Some(_)) => {
                return Err(usage("n_aps", "give either --n-aps or --density, not both"))
            }
            (Some(n), None) => ApCount::Count(n),
            (None, Some(l)) => ApCount::Density(l),
            (None, None) => match (cfg.n_aps, cfg.density) {
                (Some(_), Some(_)) => {
                    return Err(usage("n_aps", "config sets both n_aps and density"))
                }
                (Some(n), None) => ApCount::Count(n),
                (None, Some(l)) => ApCount::Density(l),
                (None, None) => ApCount::Density(DEFAULT_DENSITY),
            },
        };
        let n_aps = match aps {
            ApCount::Count(n) => n,
            ApCount::Density(l) => coverage::density_to_n_aps(l, scenario.radius_km)?,
        };

        let mut config = Map::new();
        config.insert("radius_km".into(), scenario.radius_km.into());
        match aps {
            ApCount::Count(_) => {
                config.insert("density".into(), Value::Null);
            }
            ApCount::Density(l) => {
                config.insert("density".into(), l.into());
            }
        }
        config.insert("n_aps".into(), n_aps.into());
        config.insert("alpha".into(), scenario.alpha.into());
        config.insert("shadow_db".into(), scenario.shadow_std_db.into());
        config.insert("tx_power_dbm".into(), scenario.tx_power_dbm.into());
        config.insert(
            "noise_power_dbm".into(),
            scenario.noise_power_dbm.map_or(Value::Null, Value::from),
        );
        Ok(Self {
            format,
            scenario,
            n_aps,
            config,
        })
    }

    fn model(&self) -> CliResult<NetworkModel> {
        Ok(self.scenario.model(self.n_aps)?)
    }

    fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.config.insert(key.to_owned(), value.into());
    }

    fn report(&self, command: &str, columns: Vec<&'static str>) -> Report {
        let mut r = Report::new(command, self.config.clone(), columns);
        r.meta
            .insert("outer_abs_tol".into(), OUTER_TOLERANCE.abs.into());
        r.meta
            .insert("outer_rel_tol".into(), OUTER_TOLERANCE.rel.into());
        r
    }
}

/// The threshold flags win over the config file as a pair.
fn resolve_query(
    flags: &Threshold,
    cfg: &ConfigFile,
    r: &mut Resolved,
) -> CliResult<CoverageQuery> {
    let (threshold_db, c0) = if flags.threshold_db.is_some() || flags.c0.is_some() {
        (flags.threshold_db, flags.c0)
    } else {
        (cfg.threshold_db, cfg.c0)
    };
    let query = match (threshold_db, c0) {
        (Some(_), Some(_)) => {
            return Err(usage(
                "c0",
                "give either a SINR threshold or a capacity target",
            ))
        }
        (None, Some(c0)) => {
            r.set("c0", c0);
            CoverageQuery::capacity(c0)?
        }
        (t, None) => {
            let t = t.unwrap_or(0.0);
            r.set("threshold_db", t);
            CoverageQuery::sinr_db(t)?
        }
    };
    Ok(query)
}

fn point(d_km: f64) -> CliResult<EvalPoint> {
    Ok(EvalPoint::new(d_km)?)
}

fn step_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as i64;
    (0..=n).map(|i| start + step * i as f64).collect()
}

fn default_thresholds() -> Vec<f64> {
    step_grid(-10.0, 20.0, 1.0)
}

fn default_d_grid(radius_km: f64) -> Vec<f64> {
    let n = (radius_km / 0.05 + 1e-9).floor() as i64;
    (0..=n).map(|i| (5 * i) as f64 / 100.0).collect()
}

fn non_empty(field: &'static str, v: Vec<f64>) -> CliResult<Vec<f64>> {
    if v.is_empty() {
        return Err(usage(field, "list must not be empty"));
    }
    Ok(v)
}

fn list_value(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::from(x)).collect())
}

pub fn execute(command: &Command) -> CliResult<(Report, Format)> {
    let common = command.common();
    let cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => ConfigFile::default(),
    };
    let mut r = Resolved::new(common, &cfg)?;
    let name = command.name();

    let report = match command {
        Command::Coverage {
            d_km, threshold_db, ..
        } => {
            let d = d_km.or(cfg.d_km).unwrap_or(0.0);
            let ts = match threshold_db {
                Some(ts) => ts.clone(),
                None => cfg
                    .thresholds_db
                    .clone()
                    .or(cfg.threshold_db.map(|t| vec![t]))
                    .unwrap_or_else(default_thresholds),
            };
            let ts = non_empty("threshold_db", ts)?;
            r.set("d_km", d);
            r.set("threshold_db", list_value(&ts));
            let model = r.model()?;
            let p = point(d)?;
            let mut rep = r.report(name, vec!["d_km", "threshold_db", "coverage"]);
            for t in ts {
                let c = coverage::coverage_probability(CoverageQuery::sinr_db(t)?, p, &model)?;
                rep.push(vec![d.into(), t.into(), c.into()]);
            }
            rep
        }
        Command::Capacity { d_km, c0, .. } => {
            let d = d_km.or(cfg.d_km).unwrap_or(0.0);
            let cs = c0
                .clone()
                .or(cfg.c0.map(|c| vec![c]))
                .ok_or_else(|| usage("c0", "a capacity target is required"))?;
            let cs = non_empty("c0", cs)?;
            r.set("d_km", d);
            r.set("c0", list_value(&cs));
            let model = r.model()?;
            let p = point(d)?;
            let mut rep = r.report(name, vec!["d_km", "c0", "capacity_coverage"]);
            for c in cs {
                let v = coverage::capacity_coverage(c, p, &model)?;
                rep.push(vec![d.into(), c.into(), v.into()]);
            }
            rep
        }
        Command::Ergodic { d_km, .. } => {
            let ds = d_km
                .clone()
                .or(cfg.d_km.map(|d| vec![d]))
                .unwrap_or_else(|| vec![0.0]);
            let ds = non_empty("d_km", ds)?;
            r.set("d_km", list_value(&ds));
            let model = r.model()?;
            let mut rep = r.report(name, vec!["d_km", "ergodic_bps_hz", "truncation_c0"]);
            for d in ds {
                let e = coverage::ergodic_capacity(point(d)?, &model)?;
                rep.push(vec![d.into(), e.value.into(), e.truncation_c0.into()]);
            }
            rep
        }
        Command::Worstcap4 { .. } => {
            let inputs = closedform::ClosedFormInputs::new(r.n_aps, r.scenario.shadow_std_db)?;
            let v = closedform::worst_ergodic_alpha4(r.n_aps, r.scenario.shadow_std_db)?;
            let mut rep = r.report(
                name,
                vec!["n_aps", "shadow_db", "worst_ergodic_bps_hz", "within_guard"],
            );
            rep.push(vec![
                r.n_aps.into(),
                r.scenario.shadow_std_db.into(),
                v.into(),
                inputs.within_guard().into(),
            ]);
            rep
        }
        Command::Profile {
            threshold, d_grid, ..
        } => {
            let query = resolve_query(threshold, &cfg, &mut r)?;
            let grid = d_grid
                .clone()
                .or(cfg.d_grid.clone())
                .unwrap_or_else(|| default_d_grid(r.scenario.radius_km));
            let grid = non_empty("d_grid", grid)?;
            r.set("d_grid", list_value(&grid));
            let model = r.model()?;
            let mut rep = r.report(name, vec!["d_km", "coverage"]);
            for row in design::radial_profile(&model, query, &grid)? {
                rep.push(vec![row.d_km.into(), row.coverage.into()]);
            }
            rep
        }
        Command::SweepDensity {
            threshold,
            d_km,
            densities,
            ..
        } => {
            let query = resolve_query(threshold, &cfg, &mut r)?;
            let d = d_km.or(cfg.d_km).unwrap_or(0.0);
            let ls = densities
                .clone()
                .or(cfg.densities.clone())
                .unwrap_or_else(|| vec![1.0, 2.0, 5.0, 10.0, 30.0]);
            let ls = non_empty("densities", ls)?;
            r.set("d_km", d);
            r.set("densities", list_value(&ls));
            let mut rep = r.report(name, vec!["density_per_km2", "n_aps", "coverage"]);
            for row in design::density_sweep(&r.scenario, &ls, query, point(d)?)? {
                rep.push(vec![
                    row.density_per_km2.into(),
                    row.n_aps.into(),
                    row.coverage.into(),
                ]);
            }
            rep
        }
        Command::SweepSnr {
            threshold,
            d_km,
            snr_db,
            ..
        } => {
            let query = resolve_query(threshold, &cfg, &mut r)?;
            let d = d_km.or(cfg.d_km).unwrap_or(0.0);
            let snrs = snr_db
                .clone()
                .or(cfg.snr_db.clone())
                .unwrap_or_else(|| step_grid(-10.0, 40.0, 5.0));
            let snrs = non_empty("snr_db", snrs)?;
            r.set("d_km", d);
            r.set("snr_db", list_value(&snrs));
            let model = r.model()?;
            let mut rep = r.report(name, vec!["snr_t_db", "coverage"]);
            for row in design::snr_sweep(&model, &snrs, query, point(d)?)? {
                rep.push(vec![row.snr_t_db.into(), row.coverage.into()]);
            }
            rep
        }
        Command::Design {
            target,
            c0,
            min_prob,
            min_capacity,
            n_max,
            ..
        } => {
            let kind = target.or(cfg.target).unwrap_or(TargetKind::Coverage);
            let n_max = n_max.or(cfg.n_max).unwrap_or(DEFAULT_N_MAX);
            let target = match kind {
                TargetKind::Coverage => {
                    let c0 = c0
                        .or(cfg.c0)
                        .ok_or_else(|| usage("c0", "a capacity target is required"))?;
                    let p = min_prob
                        .or(cfg.min_prob)
                        .ok_or_else(|| usage("min_prob", "a coverage probability is required"))?;
                    r.set("target", "coverage");
                    r.set("c0", c0);
                    r.set("min_prob", p);
                    DesignTarget::CapacityCoverage {
                        c0,
                        min_probability: p,
                    }
                }
                TargetKind::Ergodic => {
                    let m = min_capacity.or(cfg.min_capacity).ok_or_else(|| {
                        usage("min_capacity", "a required ergodic capacity is required")
                    })?;
                    r.set("target", "ergodic");
                    r.set("min_capacity", m);
                    DesignTarget::ErgodicCapacity { min_capacity: m }
                }
            };
            r.set("n_max", n_max);
            // The AP count is the output here, not an input.
            r.config.shift_remove("n_aps");
            r.config.shift_remove("density");
            let spec = DesignSpec::new(target, r.scenario).with_n_max(n_max);
            let out = design::required_aps(&spec)?;
            let mut rep = r.report(name, vec!["quantity", "value"]);
            rep.push(vec!["n_aps".into(), out.n_aps.into()]);
            rep.push(vec!["value".into(), out.value.into()]);
            if let Some(below) = out.value_below {
                rep.push(vec!["value_below".into(), below.into()]);
            }
            rep.push(vec!["density_per_km2".into(), out.density_per_km2.into()]);
            rep.push(vec![
                "evaluations".into(),
                (out.evaluations.len() as u64).into(),
            ]);
            rep.meta
                .insert("linear_scan".into(), out.linear_scan.into());
            rep
        }
        Command::Simulate {
            threshold,
            d_km,
            trials,
            seed,
            antithetic,
            ..
        } => {
            let query = resolve_query(threshold, &cfg, &mut r)?;
            let ds = d_km
                .clone()
                .or(cfg.d_km.map(|d| vec![d]))
                .unwrap_or_else(|| vec![0.0]);
            let ds = non_empty("d_km", ds)?;
            let trials = trials.or(cfg.trials).unwrap_or(DEFAULT_TRIALS);
            let seed = seed.or(cfg.seed).unwrap_or(0);
            let antithetic = antithetic.or(cfg.antithetic).unwrap_or(false);
            r.set("d_km", list_value(&ds));
            r.set("trials", trials);
            r.set("seed", seed);
            r.set("antithetic", antithetic);
            let sim = SimConfig::new(trials, seed)?.with_antithetic(antithetic);
            let model = r.model()?;
            let mut rep = r.report(
                name,
                vec!["d_km", "mc_coverage", "std_error", "analytic_coverage"],
            );
            for d in ds {
                let p = point(d)?;
                let est = montecarlo::estimate_coverage(query, p, &model, &sim)?;
                let analytic = coverage::coverage_probability(query, p, &model)?;
                rep.push(vec![
                    d.into(),
                    est.value.into(),
                    est.std_error.into(),
                    analytic.into(),
                ]);
            }
            rep.meta.insert("seed".into(), seed.into());
            rep.meta.insert("trials".into(), trials.into());
            rep
        }
        Command::PerturbFit {
            d_grid,
            degree,
            fit_unit,
            ..
        } => {
            let grid = d_grid
                .clone()
                .or(cfg.d_grid.clone())
                .unwrap_or_else(|| perturb::default_offset_grid(r.scenario.radius_km));
            let grid = non_empty("d_grid", grid)?;
            let degree = degree.or(cfg.degree).unwrap_or(perturb::DEFAULT_FIT_DEGREE);
            let unit = fit_unit.or(cfg.fit_unit).unwrap_or(FitUnit::M);
            r.set("d_grid", list_value(&grid));
            r.set("degree", degree as u64);
            r.set(
                "fit_unit",
                match unit {
                    FitUnit::M => "m",
                    FitUnit::Km => "km",
                },
            );
            let model = r.model()?;
            let scale = match unit {
                FitUnit::M => 1000.0,
                FitUnit::Km => 1.0,
            };
            let profile = perturb::delta_profile(&model, &grid)?;
            let samples: Vec<(f64, f64)> = profile.iter().map(|&(d, v)| (d * scale, v)).collect();
            let fit = perturb::fit_delta_poly(&samples, degree)?;
            let max_abs = profile.iter().fold(0.0_f64, |m, &(_, v)| m.max(v.abs()));
            let mut rep = r.report(name, vec!["quantity", "value"]);
            // a0 multiplies the highest power of d.
            for (k, c) in fit.coefficients.iter().enumerate() {
                rep.push(vec![Cell::Text(format!("a{k}")), (*c).into()]);
            }
            rep.push(vec!["residual_rms_db".into(), fit.residual_rms.into()]);
            rep.push(vec!["max_abs_delta_db".into(), max_abs.into()]);
            rep
        }
    };
    Ok((report, r.format))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let t = default_thresholds();
        assert_eq!(t.len(), 31);
        assert_eq!(t[0], -10.0);
        assert_eq!(t[30], 20.0);
        let d = default_d_grid(1.0);
        assert_eq!(d.len(), 21);
        assert!((d[20] - 1.0).abs() < 1e-12);
        assert_eq!(step_grid(-10.0, 40.0, 5.0).len(), 11);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            CliError::from(fincov::Error::Domain("x".into())).exit_code(),
            2
        );
        assert_eq!(
            CliError::from(fincov::Error::Infeasible {
                n_max: 1,
                best_n_aps: 1,
                best_value: 0.0
            })
            .exit_code(),
            4
        );
        assert_eq!(
            CliError::from(fincov::Error::RankDeficient {
                distinct: 1,
                degree: 3
            })
            .exit_code(),
            3
        );
        assert_eq!(usage("alpha", "bad").exit_code(), 2);
    }
}
