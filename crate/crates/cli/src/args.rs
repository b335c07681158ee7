use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "fincov",
    version,
    about = "Coverage, capacity and dimensioning for finite small-cell networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitUnit {
    M,
    Km,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Coverage,
    Ergodic,
}

/// Scenario and output flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML file supplying defaults; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the table here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Disk radius in km
    #[arg(long)]
    pub radius_km: Option<f64>,
    /// Number of APs (exclusive with --density)
    #[arg(long)]
    pub n_aps: Option<u32>,
    /// AP density per km^2, rounded to a count (exclusive with --n-aps)
    #[arg(long)]
    pub density: Option<f64>,
    /// Pathloss exponent
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Shadowing standard deviation in dB
    #[arg(long)]
    pub shadow_db: Option<f64>,
    /// Transmit power in dBm
    #[arg(long, allow_negative_numbers = true)]
    pub tx_power_dbm: Option<f64>,
    /// Noise power in dBm; omit for an interference-limited network
    #[arg(long, allow_negative_numbers = true)]
    pub noise_power_dbm: Option<f64>,
}

/// Threshold flags: an SINR threshold or a capacity target.
#[derive(Debug, Clone, Args)]
pub struct Threshold {
    /// SINR threshold in dB
    #[arg(long, allow_negative_numbers = true)]
    pub threshold_db: Option<f64>,
    /// Per-user capacity target in b/s/Hz (replaces the SINR threshold)
    #[arg(long)]
    pub c0: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SINR coverage at one point for one or more thresholds
    Coverage {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        d_km: Option<f64>,
        /// Comma-separated thresholds in dB (default -10..20 step 1)
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        threshold_db: Option<Vec<f64>>,
    },
    /// Capacity coverage at one point for one or more targets
    Capacity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        d_km: Option<f64>,
        /// Comma-separated capacity targets in b/s/Hz
        #[arg(long, value_delimiter = ',')]
        c0: Option<Vec<f64>>,
    },
    /// Ergodic per-user capacity
    Ergodic {
        #[command(flatten)]
        common: Common,
        /// Comma-separated offsets from the center in km
        #[arg(long, value_delimiter = ',')]
        d_km: Option<Vec<f64>>,
    },
    /// Closed-form worst-case ergodic capacity for pathloss exponent 4
    Worstcap4 {
        #[command(flatten)]
        common: Common,
    },
    /// Coverage along a radius
    Profile {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        threshold: Threshold,
        /// Comma-separated offsets in km (default 0..R step 0.05)
        #[arg(long, value_delimiter = ',')]
        d_grid: Option<Vec<f64>>,
    },
    /// Coverage against AP density
    SweepDensity {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        threshold: Threshold,
        #[arg(long)]
        d_km: Option<f64>,
        /// Comma-separated densities per km^2 (default 1,2,5,10,30)
        #[arg(long, value_delimiter = ',')]
        densities: Option<Vec<f64>>,
    },
    /// Coverage against transmit SNR
    SweepSnr {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        threshold: Threshold,
        #[arg(long)]
        d_km: Option<f64>,
        /// Comma-separated transmit SNR values in dB (default -10..40 step 5)
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        snr_db: Option<Vec<f64>>,
    },
    /// Minimum AP count meeting a target at the worst-case point
    Design {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        target: Option<TargetKind>,
        /// Capacity target in b/s/Hz for coverage designs
        #[arg(long)]
        c0: Option<f64>,
        /// Required capacity coverage probability
        #[arg(long)]
        min_prob: Option<f64>,
        /// Required ergodic capacity in b/s/Hz
        #[arg(long)]
        min_capacity: Option<f64>,
        /// Largest AP count to consider
        #[arg(long)]
        n_max: Option<u32>,
    },
    /// Monte-Carlo coverage with the analytic value alongside
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        threshold: Threshold,
        /// Comma-separated offsets in km
        #[arg(long, value_delimiter = ',')]
        d_km: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Pair every shadowing draw with its mirror image
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        antithetic: Option<bool>,
    },
    /// Polynomial fit of the mean-SIR change near the center
    PerturbFit {
        #[command(flatten)]
        common: Common,
        /// Comma-separated offsets in km (default 0..0.5R step 0.05R)
        #[arg(long, value_delimiter = ',')]
        d_grid: Option<Vec<f64>>,
        #[arg(long)]
        degree: Option<usize>,
        /// Unit of d in the fitted polynomial
        #[arg(long, value_enum)]
        fit_unit: Option<FitUnit>,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Coverage { common, .. }
            | Command::Capacity { common, .. }
            | Command::Ergodic { common, .. }
            | Command::Worstcap4 { common }
            | Command::Profile { common, .. }
            | Command::SweepDensity { common, .. }
            | Command::SweepSnr { common, .. }
            | Command::Design { common, .. }
            | Command::Simulate { common, .. }
            | Command::PerturbFit { common, .. } => common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Coverage { .. } => "coverage",
            Command::Capacity { .. } => "capacity",
            Command::Ergodic { .. } => "ergodic",
            Command::Worstcap4 { .. } => "worstcap4",
            Command::Profile { .. } => "profile",
            Command::SweepDensity { .. } => "sweep-density",
            Command::SweepSnr { .. } => "sweep-snr",
            Command::Design { .. } => "design",
            Command::Simulate { .. } => "simulate",
            Command::PerturbFit { .. } => "perturb-fit",
        }
    }
}

/// Keys accepted in a config file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub format: Option<Format>,
    pub radius_km: Option<f64>,
    pub n_aps: Option<u32>,
    pub density: Option<f64>,
    pub alpha: Option<f64>,
    pub shadow_db: Option<f64>,
    pub tx_power_dbm: Option<f64>,
    pub noise_power_dbm: Option<f64>,
    pub d_km: Option<f64>,
    pub threshold_db: Option<f64>,
    pub thresholds_db: Option<Vec<f64>>,
    pub c0: Option<f64>,
    pub d_grid: Option<Vec<f64>>,
    pub densities: Option<Vec<f64>>,
    pub snr_db: Option<Vec<f64>>,
    pub target: Option<TargetKind>,
    pub min_prob: Option<f64>,
    pub min_capacity: Option<f64>,
    pub n_max: Option<u32>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub antithetic: Option<bool>,
    pub degree: Option<usize>,
    pub fit_unit: Option<FitUnit>,
}
