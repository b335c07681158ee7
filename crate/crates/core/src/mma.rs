//! Lognormal moment matching for the signal and interference terms.

use std::f64::consts::{LN_10, LN_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, DiskGeometry, EvalPoint};

/// Converts a power in dBm to mW.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Converts a power in mW to dBm.
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Natural-log standard deviation of shadowing given in dB.
pub fn sigma_z(shadow_std_db: f64) -> f64 {
    0.1 * LN_10 * shadow_std_db
}

/// Scenario parameters shared by the analytic and simulated pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    disk: DiskGeometry,
    n_aps: u32,
    alpha: f64,
    shadow_std_db: f64,
    tx_power_dbm: f64,
    tx_power_mw: f64,
    noise_power_mw: f64,
}

impl NetworkModel {
    /// Builds a model; `noise_power_dbm = None` means interference-limited.
    pub fn new(
        disk: DiskGeometry,
        n_aps: u32,
        alpha: f64,
        shadow_std_db: f64,
        tx_power_dbm: f64,
        noise_power_dbm: Option<f64>,
    ) -> Result<Self> {
        let noise_power_mw = match noise_power_dbm {
            Some(dbm) if !dbm.is_finite() => {
                return Err(Error::invalid(
                    "noise_power_dbm",
                    format!("must be finite, got {dbm}"),
                ))
            }
            Some(dbm) => dbm_to_mw(dbm),
            None => 0.0,
        };
        Self::new_linear_noise(
            disk,
            n_aps,
            alpha,
            shadow_std_db,
            tx_power_dbm,
            noise_power_mw,
        )
    }

    /// Interference-limited model with 0 dBm transmit power.
    pub fn interference_limited(
        disk: DiskGeometry,
        n_aps: u32,
        alpha: f64,
        shadow_std_db: f64,
    ) -> Result<Self> {
        Self::new(disk, n_aps, alpha, shadow_std_db, 0.0, None)
    }

    /// Like [`NetworkModel::new`] but with the noise power in mW (0 disables noise).
    pub fn new_linear_noise(
        disk: DiskGeometry,
        n_aps: u32,
        alpha: f64,
        shadow_std_db: f64,
        tx_power_dbm: f64,
        noise_power_mw: f64,
    ) -> Result<Self> {
        if n_aps < 1 {
            return Err(Error::invalid("n_aps", "at least one AP is required"));
        }
        if !(alpha.is_finite() && alpha > 2.0) {
            return Err(Error::invalid(
                "alpha",
                format!("pathloss exponent must exceed 2, got {alpha}"),
            ));
        }
        if !(shadow_std_db.is_finite() && shadow_std_db >= 0.0) {
            return Err(Error::invalid(
                "shadow_std_db",
                format!("must be non-negative and finite, got {shadow_std_db}"),
            ));
        }
        if !tx_power_dbm.is_finite() {
            return Err(Error::invalid(
                "tx_power_dbm",
                format!("must be finite, got {tx_power_dbm}"),
            ));
        }
        if !(noise_power_mw.is_finite() && noise_power_mw >= 0.0) {
            return Err(Error::invalid(
                "noise_power",
                format!("must be non-negative and finite, got {noise_power_mw} mW"),
            ));
        }
        Ok(Self {
            disk,
            n_aps,
            alpha,
            shadow_std_db,
            tx_power_dbm,
            tx_power_mw: dbm_to_mw(tx_power_dbm),
            noise_power_mw,
        })
    }

    pub fn with_n_aps(&self, n_aps: u32) -> Result<Self> {
        Self::new_linear_noise(
            self.disk,
            n_aps,
            self.alpha,
            self.shadow_std_db,
            self.tx_power_dbm,
            self.noise_power_mw,
        )
    }

    pub fn with_noise_mw(&self, noise_power_mw: f64) -> Result<Self> {
        Self::new_linear_noise(
            self.disk,
            self.n_aps,
            self.alpha,
            self.shadow_std_db,
            self.tx_power_dbm,
            noise_power_mw,
        )
    }

    pub fn with_tx_power_dbm(&self, tx_power_dbm: f64) -> Result<Self> {
        Self::new_linear_noise(
            self.disk,
            self.n_aps,
            self.alpha,
            self.shadow_std_db,
            tx_power_dbm,
            self.noise_power_mw,
        )
    }

    pub fn disk(&self) -> DiskGeometry {
        self.disk
    }

    pub fn n_aps(&self) -> u32 {
        self.n_aps
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn shadow_std_db(&self) -> f64 {
        self.shadow_std_db
    }

    pub fn sigma_z(&self) -> f64 {
        sigma_z(self.shadow_std_db)
    }

    pub fn sigma_z_sq(&self) -> f64 {
        self.sigma_z().powi(2)
    }

    pub fn tx_power_dbm(&self) -> f64 {
        self.tx_power_dbm
    }

    pub fn tx_power_mw(&self) -> f64 {
        self.tx_power_mw
    }

    pub fn noise_power_mw(&self) -> f64 {
        self.noise_power_mw
    }

    /// Noise power in dBm, `None` when interference-limited.
    pub fn noise_power_dbm(&self) -> Option<f64> {
        (self.noise_power_mw > 0.0).then(|| mw_to_dbm(self.noise_power_mw))
    }

    pub fn is_interference_limited(&self) -> bool {
        self.noise_power_mw == 0.0
    }
}

/// Parameters of `exp(N(mu, sigma^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl LognormalParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::domain(format!(
                "invalid lognormal parameters mu = {mu}, sigma = {sigma}"
            )));
        }
        Ok(Self { mu, sigma })
    }

    fn from_variance(mu: f64, sigma_sq: f64) -> Result<Self> {
        Self::new(mu, sigma_sq.max(0.0).sqrt())
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma * self.sigma
    }

    pub fn mean(&self) -> f64 {
        (self.mu + 0.5 * self.sigma_sq()).exp()
    }

    pub fn second_moment(&self) -> f64 {
        (2.0 * self.mu + 2.0 * self.sigma_sq()).exp()
    }

    /// Ratio of two independent lognormals.
    pub fn ratio(self, denominator: LognormalParams) -> Result<Self> {
        Self::from_variance(
            self.mu - denominator.mu,
            self.sigma_sq() + denominator.sigma_sq(),
        )
    }
}

/// Lognormal with first moment `m1` and second moment `m2`.
pub fn match_sum_to_lognormal(m1: f64, m2: f64) -> Result<LognormalParams> {
    if !(m1.is_finite() && m1 > 0.0 && m2.is_finite()) {
        return Err(Error::domain(format!(
            "moments must be positive and finite, got m1 = {m1}, m2 = {m2}"
        )));
    }
    let (l1, l2) = (m1.ln(), m2.ln());
    let sigma_sq = l2 - 2.0 * l1;
    // Tolerate the rounding of a deterministic input.
    if sigma_sq < -1e-12 * l2.abs().max(1.0) || m2 <= 0.0 {
        return Err(Error::domain(format!(
            "second moment {m2} is below the squared first moment {}",
            m1 * m1
        )));
    }
    LognormalParams::from_variance(2.0 * l1 - 0.5 * l2, sigma_sq)
}

/// First and second moments of the aggregate interference given `r1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceMoments {
    pub m1: f64,
    pub m2: f64,
}

fn require_interferers(model: &NetworkModel) -> Result<()> {
    if model.n_aps < 2 {
        return Err(Error::invalid(
            "n_aps",
            "at least two APs are needed for an interference term",
        ));
    }
    Ok(())
}

/// Moments of `sum_j s |h_j|^2 r_j^-alpha z_j` over the `N - 1` interferers.
pub fn interference_moments(
    r1: f64,
    point: EvalPoint,
    model: &NetworkModel,
) -> Result<InterferenceMoments> {
    require_interferers(model)?;
    let e1 = geometry::conditional_inverse_power_moment(model.alpha, r1, point, model.disk)?;
    let e2 = geometry::conditional_inverse_power_moment(2.0 * model.alpha, r1, point, model.disk)?;
    Ok(moments_from(model, e1, e2))
}

pub(crate) fn moments_from(model: &NetworkModel, e1: f64, e2: f64) -> InterferenceMoments {
    let k = f64::from(model.n_aps - 1);
    let s = model.tx_power_mw;
    let sz2 = model.sigma_z_sq();
    let m1 = k * s * (0.5 * sz2).exp() * e1;
    let m2 = 2.0 * k * s * s * (2.0 * sz2).exp() * e2 + k * (k - 1.0) * s * s * sz2.exp() * e1 * e1;
    InterferenceMoments { m1, m2 }
}

/// Lognormal approximation of the serving-link received power at distance `r1`.
pub fn numerator_params(r1: f64, model: &NetworkModel) -> Result<LognormalParams> {
    if !(r1.is_finite() && r1 > 0.0) {
        return Err(Error::domain(format!(
            "serving distance must be positive and finite, got {r1}"
        )));
    }
    LognormalParams::from_variance(
        (model.tx_power_mw / std::f64::consts::SQRT_2).ln() - model.alpha * r1.ln(),
        LN_2 + model.sigma_z_sq(),
    )
}

/// Lognormal approximation of the SIR given the serving distance `r1`.
pub fn sir_params(r1: f64, point: EvalPoint, model: &NetworkModel) -> Result<LognormalParams> {
    let num = numerator_params(r1, model)?;
    let m = interference_moments(r1, point, model)?;
    num.ratio(match_sum_to_lognormal(m.m1, m.m2)?)
}

/// Lognormal approximation of the SINR given `r1`; reduces to [`sir_params`] without noise.
pub fn sinr_params(r1: f64, point: EvalPoint, model: &NetworkModel) -> Result<LognormalParams> {
    let noise = model.noise_power_mw;
    if noise == 0.0 {
        return sir_params(r1, point, model);
    }
    let num = numerator_params(r1, model)?;
    let denom = if model.n_aps == 1 {
        LognormalParams::new(noise.ln(), 0.0)?
    } else {
        let m = interference_moments(r1, point, model)?;
        let i = match_sum_to_lognormal(m.m1, m.m2)?;
        noisy_denominator(i, noise)?
    };
    num.ratio(denom)
}

/// Matches `noise + I` where `I` is lognormal with parameters `i`.
pub fn noisy_denominator(i: LognormalParams, noise: f64) -> Result<LognormalParams> {
    let (i1, i2) = (i.mean(), i.second_moment());
    match_sum_to_lognormal(noise + i1, noise * noise + i2 + 2.0 * noise * i1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(n: u32, alpha: f64, shadow: f64) -> NetworkModel {
        NetworkModel::interference_limited(DiskGeometry::new(1.0).unwrap(), n, alpha, shadow)
            .unwrap()
    }

    #[test]
    fn matching_examples() {
        let p = match_sum_to_lognormal(2.0, 4.0).unwrap();
        assert_relative_eq!(p.mu, 2f64.ln(), epsilon = 1e-15);
        assert_eq!(p.sigma, 0.0);
        let p = match_sum_to_lognormal(0.5f64.exp(), 2f64.exp()).unwrap();
        assert!(p.mu.abs() < 1e-15);
        assert_relative_eq!(p.sigma, 1.0, max_relative = 1e-15);
        let p = match_sum_to_lognormal(8.0, 144.0).unwrap();
        assert_relative_eq!(p.mu, (16.0f64 / 3.0).ln(), max_relative = 1e-14);
        assert_relative_eq!(p.sigma_sq(), 2.25f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(p.mean(), 8.0, max_relative = 1e-12);
        assert_relative_eq!(p.second_moment(), 144.0, max_relative = 1e-12);
    }

    #[test]
    fn matching_rejects_invalid_moments() {
        assert!(match_sum_to_lognormal(2.0, 3.9).is_err());
        assert!(match_sum_to_lognormal(0.0, 1.0).is_err());
        assert!(match_sum_to_lognormal(-1.0, 1.0).is_err());
    }

    #[test]
    fn moments_two_and_three_aps() {
        let m = interference_moments(0.5, EvalPoint::CENTER, &model(2, 4.0, 0.0)).unwrap();
        assert_relative_eq!(m.m1, 4.0, max_relative = 1e-13);
        assert_relative_eq!(m.m2, 56.0, max_relative = 1e-13);
        let m = interference_moments(0.5, EvalPoint::CENTER, &model(3, 4.0, 0.0)).unwrap();
        assert_relative_eq!(m.m1, 8.0, max_relative = 1e-13);
        assert_relative_eq!(m.m2, 144.0, max_relative = 1e-13);
        // 4e6 conditional draws: E[I] = 7.99608 (se 4.5e-3), E[I^2] = 144.011 (se 0.225).
        assert!((m.m1 - 7.996_085).abs() < 3.0 * 4.47e-3);
        assert!((m.m2 - 144.011_4).abs() < 3.0 * 0.2246);
    }

    #[test]
    fn single_ap_has_no_interference_model() {
        assert!(interference_moments(0.5, EvalPoint::CENTER, &model(1, 4.0, 0.0)).is_err());
        assert!(sir_params(0.5, EvalPoint::CENTER, &model(1, 4.0, 0.0)).is_err());
    }

    #[test]
    fn numerator_examples() {
        let p = numerator_params(1.0, &model(3, 4.0, 0.0)).unwrap();
        assert_relative_eq!(p.mu, -0.5 * LN_2, max_relative = 1e-14);
        assert_relative_eq!(p.sigma_sq(), LN_2, max_relative = 1e-14);
        let p = numerator_params(0.5, &model(3, 4.0, 0.0)).unwrap();
        assert_relative_eq!(p.mu, 2.426_015_131_959_808_6, max_relative = 1e-14);
        let p = numerator_params(0.5, &model(3, 4.0, 6.0)).unwrap();
        assert_relative_eq!(
            p.sigma_sq(),
            LN_2 + (0.6 * LN_10).powi(2),
            max_relative = 1e-14
        );
        assert!(numerator_params(0.0, &model(3, 4.0, 0.0)).is_err());
    }

    #[test]
    fn sir_example() {
        let p = sir_params(0.5, EvalPoint::CENTER, &model(3, 4.0, 0.0)).unwrap();
        assert_relative_eq!(p.mu, (3.0 / 2f64.sqrt()).ln(), max_relative = 1e-13);
        assert_relative_eq!(p.sigma_sq(), 4.5f64.ln(), max_relative = 1e-13);
    }

    #[test]
    fn sir_is_invariant_to_tx_power() {
        let base = model(7, 3.5, 6.0);
        let point = EvalPoint::new(0.3).unwrap();
        let a = sir_params(0.2, point, &base).unwrap();
        let b = sir_params(0.2, point, &base.with_tx_power_dbm(23.0).unwrap()).unwrap();
        assert!((a.mu - b.mu).abs() < 1e-12);
        assert!((a.sigma - b.sigma).abs() < 1e-12);
    }

    #[test]
    fn noisy_denominator_of_constants() {
        let d = noisy_denominator(LognormalParams::new(0.0, 0.0).unwrap(), 1.0).unwrap();
        assert_relative_eq!(d.mu, 2f64.ln(), max_relative = 1e-14);
        assert!(d.sigma < 1e-7);
    }

    #[test]
    fn sinr_example_matches_sampled_moments() {
        let m = model(3, 4.0, 0.0).with_noise_mw(1.0).unwrap();
        let p = sinr_params(0.5, EvalPoint::CENTER, &m).unwrap();
        // Denominator moments 1 + 8 and 1 + 144 + 16.
        let mu_d = 2.0 * 9f64.ln() - 0.5 * 161f64.ln();
        let s2_d = 161f64.ln() - 2.0 * 9f64.ln();
        assert_relative_eq!(p.mu, 0.572_268_159_779_601_3, max_relative = 1e-12);
        assert_relative_eq!(p.sigma_sq(), 1.380_102_390_871_969_5, max_relative = 1e-12);
        assert_relative_eq!(p.mu, (16.0 / 2f64.sqrt()).ln() - mu_d, max_relative = 1e-12);
        assert_relative_eq!(p.sigma_sq(), LN_2 + s2_d, max_relative = 1e-12);
    }

    #[test]
    fn sinr_reduces_to_sir() {
        let m = model(5, 3.87, 6.0);
        let point = EvalPoint::new(0.4).unwrap();
        let sir = sir_params(0.3, point, &m).unwrap();
        assert_eq!(sinr_params(0.3, point, &m).unwrap(), sir);
        let i = interference_moments(0.3, point, &m).unwrap();
        let tiny = m.with_noise_mw(1e-12 * i.m1).unwrap();
        let sinr = sinr_params(0.3, point, &tiny).unwrap();
        assert!((sinr.mu - sir.mu).abs() < 1e-6);
        assert!((sinr.sigma_sq() - sir.sigma_sq()).abs() < 1e-6);
    }

    #[test]
    fn single_ap_with_noise_is_deterministic_denominator() {
        let m = model(1, 4.0, 0.0).with_noise_mw(2.0).unwrap();
        let p = sinr_params(0.5, EvalPoint::CENTER, &m).unwrap();
        assert_relative_eq!(
            p.mu,
            (16.0 / 2f64.sqrt()).ln() - 2f64.ln(),
            max_relative = 1e-13
        );
        assert_relative_eq!(p.sigma_sq(), LN_2, max_relative = 1e-13);
    }

    #[test]
    fn median_sir_decreases_in_r1() {
        let m = model(10, 3.87, 6.0);
        let point = EvalPoint::new(0.5).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..30 {
            let p = sir_params(0.05 * f64::from(i), point, &m).unwrap();
            assert!(p.mu < prev);
            prev = p.mu;
        }
    }

    #[test]
    fn model_validation() {
        let disk = DiskGeometry::new(1.0).unwrap();
        assert!(NetworkModel::interference_limited(disk, 3, 2.0, 0.0).is_err());
        assert!(NetworkModel::interference_limited(disk, 0, 3.0, 0.0).is_err());
        assert!(NetworkModel::interference_limited(disk, 3, 3.0, -1.0).is_err());
        assert!(NetworkModel::new(disk, 3, 3.0, 0.0, 0.0, Some(f64::NAN)).is_err());
        let m = NetworkModel::new(disk, 3, 3.0, 0.0, 20.0, Some(-90.0)).unwrap();
        assert_relative_eq!(m.tx_power_mw(), 100.0, max_relative = 1e-14);
        assert_relative_eq!(m.noise_power_mw(), 1e-9, max_relative = 1e-14);
        assert_relative_eq!(m.noise_power_dbm().unwrap(), -90.0, max_relative = 1e-14);
    }
}
