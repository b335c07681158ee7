//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The integration range is supplied as a sorted list of breakpoints. Each
//! panel is integrated with the 15-point Kronrod rule, and the panel with the
//! largest error estimate is bisected until the summed estimate drops below
//! `max(abs, rel * |value|)`. Breakpoints let callers pin kinks and mass
//! concentrations so that the bisection never has to discover them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Stopping rule for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_segments: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            max_segments: 4000,
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-10, 1e-10)
    }
}

/// Value and error estimate of a converged integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    lower: f64,
    upper: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F>(f: &mut F, lower: f64, upper: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    let f_center = f(center)?;
    let mut kronrod = WGK[7] * f_center;
    let mut gauss = WG[3] * f_center;
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        kronrod += w * (f1 + f2);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    if !value.is_finite() {
        return Err(Error::domain(format!(
            "integrand is not finite on [{lower}, {upper}]"
        )));
    }
    Ok(Segment {
        lower,
        upper,
        value,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Integrates a fallible integrand over the panels delimited by `breakpoints`.
///
/// Breakpoints must be finite and non-decreasing; zero-width panels are
/// skipped.
pub fn try_integrate<F>(mut f: F, breakpoints: &[f64], tol: Tolerance) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    if breakpoints.len() < 2 {
        return Err(Error::domain("quadrature needs at least two breakpoints"));
    }
    if breakpoints.iter().any(|b| !b.is_finite()) || breakpoints.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain(format!(
            "breakpoints must be finite and sorted: {breakpoints:?}"
        )));
    }

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod(&mut f, w[0], w[1])?);
            evaluations += 15;
        }
    }

    let lower = breakpoints[0];
    let upper = breakpoints[breakpoints.len() - 1];
    loop {
        let value: f64 = heap.iter().map(|s| s.value).sum();
        let error: f64 = heap.iter().map(|s| s.error).sum();
        if error <= tol.target(value) {
            return Ok(Integral {
                value,
                error,
                evaluations,
            });
        }
        let worst = match heap.peek() {
            Some(s) => s,
            None => {
                return Ok(Integral {
                    value: 0.0,
                    error: 0.0,
                    evaluations,
                })
            }
        };
        let mid = 0.5 * (worst.lower + worst.upper);
        let resolvable = mid > worst.lower && mid < worst.upper;
        if heap.len() >= tol.max_segments || !resolvable {
            return Err(Error::Quadrature {
                lower,
                upper,
                value,
                achieved: error,
                requested: tol.target(value),
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        heap.push(kronrod(&mut f, worst.lower, mid)?);
        heap.push(kronrod(&mut f, mid, worst.upper)?);
        evaluations += 30;
    }
}

/// Infallible-integrand convenience wrapper around [`try_integrate`].
pub fn integrate<F>(mut f: F, breakpoints: &[f64], tol: Tolerance) -> Result<Integral>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), breakpoints, tol)
}
