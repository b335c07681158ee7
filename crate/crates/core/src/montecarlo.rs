//! Monte-Carlo simulation of the finite network.
//!
//! Every trial draws from its own ChaCha8 stream keyed by the seed and the
//! trial index, so estimates do not depend on how trials are scheduled
//! across threads.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::CoverageQuery;
use crate::error::{Error, Result};
use crate::geometry::{self, DiskGeometry, EvalPoint};
use crate::mma::NetworkModel;

pub const DEFAULT_TRIALS: u64 = 100_000;

const CHUNK: u64 = 4096;

/// Substream offsets inside a trial's stream.
const POSITIONS: u8 = 0;
const FADING: u8 = 1;
const SHADOWING: u8 = 2;

/// Acceptance rate below which conditional rejection sampling is refused.
const MIN_ACCEPTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub antithetic: bool,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Result<Self> {
        if trials < 1 {
            return Err(Error::invalid("trials", "at least one trial is required"));
        }
        Ok(Self {
            trials,
            seed,
            antithetic: false,
        })
    }

    pub fn with_antithetic(mut self, antithetic: bool) -> Self {
        self.antithetic = antithetic;
        self
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            seed: 0,
            antithetic: false,
        }
    }
}

/// Monte-Carlo point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub value: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Per-AP random channel state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelDraw {
    /// `|h|^2`, unit-mean exponential.
    pub rayleigh_power: f64,
    /// Shadowing loss `L` in dB; the linear gain is `10^(-L/10)`.
    pub shadow_db: f64,
    /// Distance from the user, km.
    pub distance: f64,
}

impl ChannelDraw {
    pub fn shadow_gain(&self) -> f64 {
        10f64.powf(-self.shadow_db / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    /// Distance to a user located at `point` on the positive x axis.
    pub fn distance_to(&self, point: EvalPoint) -> f64 {
        (self.x - point.d_km()).hypot(self.y)
    }
}

/// Generator for substream `sub` of trial `trial`.
pub fn substream(seed: u64, trial: u64, sub: u8) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng.set_word_pos(u128::from(sub) << 40);
    rng
}

fn uniform_in_disk<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Position {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = 2.0 * PI * rng.gen::<f64>();
    Position {
        x: r * theta.cos(),
        y: r * theta.sin(),
    }
}

/// `n_aps` points uniformly distributed in `disk`.
pub fn sample_ap_positions<R: Rng + ?Sized>(
    n_aps: u32,
    disk: DiskGeometry,
    rng: &mut R,
) -> Vec<Position> {
    (0..n_aps)
        .map(|_| uniform_in_disk(disk.radius_km(), rng))
        .collect()
}

/// Instantaneous SINR with nearest-AP association.
///
/// Ties in distance go to the lowest index. Returns `+inf` when there is
/// neither interference nor noise.
pub fn realize_sinr(draws: &[ChannelDraw], model: &NetworkModel) -> Result<f64> {
    let serving = draws
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.distance.total_cmp(&b.1.distance).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::domain("at least one AP is required"))?;
    if draws[serving].distance <= 0.0 {
        return Err(Error::DegenerateRealization);
    }
    let s = model.tx_power_mw();
    let alpha = model.alpha();
    let power = |c: &ChannelDraw| s * c.rayleigh_power * c.distance.powf(-alpha) * c.shadow_gain();
    let signal = power(&draws[serving]);
    let interference: f64 = draws
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != serving)
        .map(|(_, c)| power(c))
        .sum();
    let denom = model.noise_power_mw() + interference;
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(signal / denom)
}

/// Draws one network realization for trial `trial`, with the shadowing sign
/// flipped when `mirror` is set.
fn draw_trial(
    point: EvalPoint,
    model: &NetworkModel,
    seed: u64,
    trial: u64,
    shadow_signs: &[f64],
) -> Result<Vec<f64>> {
    let n = model.n_aps();
    let mut pos_rng = substream(seed, trial, POSITIONS);
    let mut fad_rng = substream(seed, trial, FADING);
    let mut sh_rng = substream(seed, trial, SHADOWING);
    let fading: Vec<f64> = (0..n).map(|_| fad_rng.sample(Exp1)).collect();
    let shadow: Vec<f64> = (0..n)
        .map(|_| model.shadow_std_db() * sh_rng.sample::<f64, _>(StandardNormal))
        .collect();
    loop {
        let positions = sample_ap_positions(n, model.disk(), &mut pos_rng);
        let mut out = Vec::with_capacity(shadow_signs.len());
        let mut degenerate = false;
        for &sign in shadow_signs {
            let draws: Vec<ChannelDraw> = positions
                .iter()
                .zip(&fading)
                .zip(&shadow)
                .map(|((p, &h), &l)| ChannelDraw {
                    rayleigh_power: h,
                    shadow_db: sign * l,
                    distance: p.distance_to(point),
                })
                .collect();
            match realize_sinr(&draws, model) {
                Ok(v) => out.push(v),
                Err(Error::DegenerateRealization) => {
                    degenerate = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !degenerate {
            return Ok(out);
        }
    }
}

/// Running first and second moments of `K` statistics.
#[derive(Clone, Copy)]
struct Accumulator<const K: usize> {
    sum: [f64; K],
    sum_sq: [f64; K],
}

impl<const K: usize> Accumulator<K> {
    fn new() -> Self {
        Self {
            sum: [0.0; K],
            sum_sq: [0.0; K],
        }
    }

    fn push(&mut self, x: [f64; K]) {
        for (k, v) in x.into_iter().enumerate() {
            self.sum[k] += v;
            self.sum_sq[k] += v * v;
        }
    }

    fn merge(&mut self, other: &Self) {
        for k in 0..K {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
    }
}

/// Mean and standard error of each statistic over `trials` independent trials.
///
/// Chunks are reduced in index order, so the result does not depend on the
/// thread count.
fn run_trials<const K: usize, F>(trials: u64, f: F) -> Result<[SimEstimate; K]>
where
    F: Fn(u64) -> Result<[f64; K]> + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let partial: Vec<Result<Accumulator<K>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new();
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                acc.push(f(t)?);
            }
            Ok(acc)
        })
        .collect();
    let mut total = Accumulator::<K>::new();
    for p in partial {
        total.merge(&p?);
    }
    let n = trials as f64;
    Ok(std::array::from_fn(|k| {
        let mean = total.sum[k] / n;
        let var = (total.sum_sq[k] / n - mean * mean).max(0.0);
        SimEstimate {
            value: mean,
            std_error: (var / n).sqrt(),
            trials,
        }
    }))
}

fn shadow_signs(sim: &SimConfig, model: &NetworkModel) -> &'static [f64] {
    if sim.antithetic && model.shadow_std_db() > 0.0 {
        &[1.0, -1.0]
    } else {
        &[1.0]
    }
}

fn check_simulable(point: EvalPoint, model: &NetworkModel) -> Result<()> {
    model.disk().validate(point)?;
    if model.n_aps() < 2 && model.is_interference_limited() {
        return Err(Error::invalid(
            "n_aps",
            "a single AP without noise has unbounded SINR",
        ));
    }
    Ok(())
}

/// Fraction of trials whose SINR (or per-user capacity) exceeds the query threshold.
pub fn estimate_coverage(
    query: CoverageQuery,
    point: EvalPoint,
    model: &NetworkModel,
    sim: &SimConfig,
) -> Result<SimEstimate> {
    check_simulable(point, model)?;
    let t = query.linear_threshold(model.n_aps());
    let signs = shadow_signs(sim, model);
    let [est] = run_trials(sim.trials, |trial| {
        let sinr = draw_trial(point, model, sim.seed, trial, signs)?;
        let hits = sinr.iter().filter(|&&x| x > t).count();
        Ok([hits as f64 / sinr.len() as f64])
    })?;
    Ok(est)
}

/// Mean per-user capacity `N log2(1 + SINR)`.
pub fn estimate_ergodic(
    point: EvalPoint,
    model: &NetworkModel,
    sim: &SimConfig,
) -> Result<SimEstimate> {
    check_simulable(point, model)?;
    let n = f64::from(model.n_aps());
    let signs = shadow_signs(sim, model);
    let [est] = run_trials(sim.trials, |trial| {
        let sinr = draw_trial(point, model, sim.seed, trial, signs)?;
        let c: f64 = sinr
            .iter()
            .map(|x| n * x.ln_1p() / std::f64::consts::LN_2)
            .sum();
        Ok([c / sinr.len() as f64])
    })?;
    Ok(est)
}

/// Sampled `E[I]` and `E[I^2]` of the interference given the serving distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub m1: SimEstimate,
    pub m2: SimEstimate,
}

fn conditional_interferer<R: Rng + ?Sized>(
    r1: f64,
    point: EvalPoint,
    disk: DiskGeometry,
    rng: &mut R,
) -> f64 {
    loop {
        let r = uniform_in_disk(disk.radius_km(), rng).distance_to(point);
        if r > r1 {
            return r;
        }
    }
}

fn check_conditioning(r1: f64, point: EvalPoint, model: &NetworkModel) -> Result<()> {
    model.disk().validate(point)?;
    if model.n_aps() < 2 {
        return Err(Error::invalid("n_aps", "at least two APs are required"));
    }
    if !(r1.is_finite() && r1 > 0.0) {
        return Err(Error::domain(format!("r1 must be positive, got {r1}")));
    }
    let survival = 1.0 - geometry::cdf(r1, point.d_km(), model.disk().radius_km());
    if survival < MIN_ACCEPTANCE {
        return Err(Error::domain(format!(
            "r1 = {r1} km leaves too little area for rejection sampling"
        )));
    }
    Ok(())
}

/// Signal power and aggregate interference with the serving AP pinned at `r1`.
fn conditional_draw(
    r1: f64,
    point: EvalPoint,
    model: &NetworkModel,
    seed: u64,
    trial: u64,
) -> (f64, f64) {
    let n = model.n_aps() as usize;
    let mut pos_rng = substream(seed, trial, POSITIONS);
    let mut fad_rng = substream(seed, trial, FADING);
    let mut sh_rng = substream(seed, trial, SHADOWING);
    let s = model.tx_power_mw();
    let alpha = model.alpha();
    let sigma_l = model.shadow_std_db();
    let mut gain = |r: f64| {
        let h: f64 = fad_rng.sample(Exp1);
        let l = sigma_l * sh_rng.sample::<f64, _>(StandardNormal);
        s * h * r.powf(-alpha) * 10f64.powf(-l / 10.0)
    };
    let signal = gain(r1);
    let interference = (1..n)
        .map(|_| {
            gain(conditional_interferer(
                r1,
                point,
                model.disk(),
                &mut pos_rng,
            ))
        })
        .sum();
    (signal, interference)
}

/// Monte-Carlo interference moments given the serving distance `r1`.
pub fn sample_interference_moments(
    r1: f64,
    point: EvalPoint,
    model: &NetworkModel,
    sim: &SimConfig,
) -> Result<MomentEstimate> {
    check_conditioning(r1, point, model)?;
    let [m1, m2] = run_trials(sim.trials, |trial| {
        let (_, i) = conditional_draw(r1, point, model, sim.seed, trial);
        Ok([i, i * i])
    })?;
    Ok(MomentEstimate { m1, m2 })
}

/// SINR samples given the serving distance `r1`.
pub fn sample_conditional_sinr(
    r1: f64,
    point: EvalPoint,
    model: &NetworkModel,
    sim: &SimConfig,
) -> Result<Vec<f64>> {
    check_conditioning(r1, point, model)?;
    let noise = model.noise_power_mw();
    Ok((0..sim.trials)
        .into_par_iter()
        .map(|trial| {
            let (sig, i) = conditional_draw(r1, point, model, sim.seed, trial);
            sig / (noise + i)
        })
        .collect())
}

/// Nearest-AP distances over `sim.trials` independent placements.
pub fn sample_nearest_distances(
    n_aps: u32,
    point: EvalPoint,
    disk: DiskGeometry,
    sim: &SimConfig,
) -> Result<Vec<f64>> {
    disk.validate(point)?;
    if n_aps < 1 {
        return Err(Error::invalid("n_aps", "at least one AP is required"));
    }
    Ok((0..sim.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = substream(sim.seed, trial, POSITIONS);
            sample_ap_positions(n_aps, disk, &mut rng)
                .iter()
                .map(|p| p.distance_to(point))
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// Probability-integral transforms `G(r_j | r1)` of every interferer distance,
/// pooled over `sim.trials` placements.
///
/// Given `r1` the interferer distances are i.i.d. with CDF `G(. | r1)`, so the
/// pooled values are i.i.d. uniform when the conditional law is right.
pub fn sample_interferer_pits(
    n_aps: u32,
    point: EvalPoint,
    disk: DiskGeometry,
    sim: &SimConfig,
) -> Result<Vec<f64>> {
    disk.validate(point)?;
    if n_aps < 2 {
        return Err(Error::invalid("n_aps", "at least two APs are required"));
    }
    let per_trial: Vec<Vec<f64>> = (0..sim.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = substream(sim.seed, trial, POSITIONS);
            let mut dist: Vec<f64> = sample_ap_positions(n_aps, disk, &mut rng)
                .iter()
                .map(|p| p.distance_to(point))
                .collect();
            let serving = dist
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            let r1 = dist.swap_remove(serving);
            dist.iter()
                .map(|&r| geometry::interferer_conditional_cdf(r, r1, point, disk))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}
