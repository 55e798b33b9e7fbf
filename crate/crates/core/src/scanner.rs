//! Security thresholds, optimal preparation noise, and parameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::security::{key_rate, ProtocolParams};

/// Absolute tolerance in `T` for threshold bisection.
pub const THRESHOLD_TOLERANCE: f64 = 1e-5;
/// Lowest transmission probed when bracketing a threshold.
pub const TRANSMISSION_FLOOR: f64 = 1e-3;
/// Absolute tolerance in `κ` for the golden-section search.
pub const KAPPA_TOLERANCE: f64 = 1e-3;

const MAX_BISECTIONS: usize = 60;
const PANELS: usize = 64;
// inner tolerance used while optimizing over κ, so t_min(κ) is smooth at the κ tolerance
const FINE_TOLERANCE: f64 = 1e-11;

/// Minimal transmission that still yields a positive key rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub t_min: f64,
    /// `−10·log₁₀ t_min`.
    pub loss_db: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl ThresholdResult {
    fn new(t_min: f64, converged: bool, iterations: usize) -> Self {
        Self {
            t_min,
            loss_db: transmission_to_db(t_min),
            converged,
            iterations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_min <= 1.0) {
            return Err(Error::domain("t_min", self.t_min, "must lie in (0, 1]"));
        }
        if !self.loss_db.is_finite() || (self.loss_db - transmission_to_db(self.t_min)).abs() > 1e-9 {
            return Err(Error::domain("loss_db", self.loss_db, "inconsistent with t_min"));
        }
        Ok(())
    }
}

/// Optimal preparation noise and the threshold it achieves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalNoise {
    pub kappa: f64,
    pub threshold: ThresholdResult,
}

/// Key rates over a `κ × T` grid; `rates[i][j]` belongs to `kappa_axis[i]`, `t_axis[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourGrid {
    pub kappa_axis: Vec<f64>,
    pub t_axis: Vec<f64>,
    pub rates: Vec<Vec<f64>>,
    pub params_base: ProtocolParams,
}

/// Where a grid row turns secure when scanned from low to high transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecurityEdge {
    /// Positive over the whole transmission axis.
    SecureEverywhere,
    /// Linearly interpolated transmission of the last sign change.
    Crossing(f64),
    /// Not positive at the top of the axis.
    NeverSecure,
}

impl ContourGrid {
    pub fn validate(&self) -> Result<()> {
        self.params_base.validate()?;
        validate_axis("kappa_axis", &self.kappa_axis, 0.0, f64::INFINITY)?;
        validate_axis("t_axis", &self.t_axis, f64::MIN_POSITIVE, 1.0)?;
        if self.rates.len() != self.kappa_axis.len()
            || self.rates.iter().any(|row| row.len() != self.t_axis.len())
        {
            return Err(Error::Parse(format!(
                "rate matrix shape does not match axes ({} x {})",
                self.kappa_axis.len(),
                self.t_axis.len()
            )));
        }
        if self.rates.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::Parse("non-finite rate in grid".into()));
        }
        Ok(())
    }

    pub fn security_edge(&self, row: usize) -> SecurityEdge {
        let rates = &self.rates[row];
        match rates.iter().rposition(|&r| r <= 0.0) {
            None => SecurityEdge::SecureEverywhere,
            Some(j) if j + 1 == rates.len() => SecurityEdge::NeverSecure,
            Some(j) => {
                let (t0, t1) = (self.t_axis[j], self.t_axis[j + 1]);
                let (r0, r1) = (rates[j], rates[j + 1]);
                SecurityEdge::Crossing(t0 + (t1 - t0) * (-r0) / (r1 - r0))
            }
        }
    }
}

/// One point of a rate-versus-loss curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub loss_db: f64,
    pub transmission: f64,
    pub rate: f64,
}

pub fn transmission_to_db(t: f64) -> f64 {
    -10.0 * t.log10()
}

pub fn db_to_transmission(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

fn rate_at(p: &ProtocolParams, t: f64) -> Result<f64> {
    key_rate(&p.with_transmission(t)).map(|b| b.key_rate)
}

/// Bisection for the zero of `R(T)` at the default tolerance.
pub fn threshold_transmission(p: &ProtocolParams) -> Result<ThresholdResult> {
    threshold_transmission_with_tolerance(p, THRESHOLD_TOLERANCE)
}

/// Bisection for the zero of `R(T)` on `[TRANSMISSION_FLOOR, 1]`.
///
/// If the full interval does not bracket a sign change, it is split into 64
/// panels scanned downward from `T = 1`, and the first panel with a sign change
/// is bisected. If there is none, the result is reported as non-converged at
/// the floor.
pub fn threshold_transmission_with_tolerance(p: &ProtocolParams, tol: f64) -> Result<ThresholdResult> {
    p.validate()?;
    let r_top = rate_at(p, 1.0)?;
    if r_top <= 0.0 {
        return Err(Error::InsecureAtUnity { rate: r_top });
    }
    let r_floor = rate_at(p, TRANSMISSION_FLOOR)?;
    let (mut lo, mut hi) = (TRANSMISSION_FLOOR, 1.0);
    if r_floor > 0.0 {
        let width = (1.0 - TRANSMISSION_FLOOR) / PANELS as f64;
        let mut bracket = None;
        let mut upper = 1.0;
        for k in (0..PANELS).rev() {
            let lower = TRANSMISSION_FLOOR + width * k as f64;
            if rate_at(p, lower)? <= 0.0 {
                bracket = Some((lower, upper));
                break;
            }
            upper = lower;
        }
        match bracket {
            Some((l, h)) => (lo, hi) = (l, h),
            None => return Ok(ThresholdResult::new(TRANSMISSION_FLOOR, false, 0)),
        }
    }

    let mut iterations = 0;
    while hi - lo > tol && iterations < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if rate_at(p, mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Ok(ThresholdResult::new(0.5 * (lo + hi), hi - lo <= tol, iterations))
}

/// Golden-section search for the preparation noise minimizing the threshold transmission.
pub fn optimal_preparation_noise(p: &ProtocolParams, kappa_range: (f64, f64)) -> Result<OptimalNoise> {
    let (a, b) = kappa_range;
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && a <= b) {
        return Err(Error::domain("kappa_range", a, "need finite 0 <= min <= max"));
    }
    let t_min = |kappa: f64| -> Result<f64> {
        threshold_transmission_with_tolerance(&p.with_preparation_noise(kappa), FINE_TOLERANCE).map(|r| r.t_min)
    };

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (t_min(x1)?, t_min(x2)?);
    while hi - lo > KAPPA_TOLERANCE {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = t_min(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = t_min(x2)?;
        }
    }
    let (mut best_k, mut best_t) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    // a minimum on the boundary is only approached, never sampled, by the bracket
    for edge in [a, b] {
        let f = t_min(edge)?;
        if f <= best_t {
            best_k = edge;
            best_t = f;
        }
    }
    let threshold = threshold_transmission(&p.with_preparation_noise(best_k))?;
    Ok(OptimalNoise {
        kappa: best_k,
        threshold,
    })
}

fn validate_axis(name: &'static str, axis: &[f64], lo: f64, hi: f64) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::domain(name, f64::NAN, "axis must not be empty"));
    }
    if let Some(&bad) = axis.iter().find(|&&v| !(v >= lo && v <= hi)) {
        return Err(Error::domain(name, bad, "axis value out of range"));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain(name, f64::NAN, "axis must be strictly ascending"));
    }
    Ok(())
}

/// Key rate at every `(κ, T)` pair; other parameters from `base`.
pub fn scan_grid(base: &ProtocolParams, kappa_axis: &[f64], t_axis: &[f64]) -> Result<ContourGrid> {
    base.validate()?;
    validate_axis("kappa_axis", kappa_axis, 0.0, f64::INFINITY)?;
    validate_axis("t_axis", t_axis, f64::MIN_POSITIVE, 1.0)?;
    let rates = kappa_axis
        .par_iter()
        .map(|&kappa| {
            let p = base.with_preparation_noise(kappa);
            t_axis.iter().map(|&t| rate_at(&p, t)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContourGrid {
        kappa_axis: kappa_axis.to_vec(),
        t_axis: t_axis.to_vec(),
        rates,
        params_base: *base,
    })
}

/// Key rate along a loss axis in dB.
pub fn rate_vs_loss_curve(base: &ProtocolParams, loss_db_axis: &[f64]) -> Result<Vec<CurvePoint>> {
    base.validate()?;
    if let Some(&bad) = loss_db_axis.iter().find(|&&l| !(l.is_finite() && l >= 0.0)) {
        return Err(Error::domain("loss_db", bad, "losses must be finite and >= 0"));
    }
    loss_db_axis
        .par_iter()
        .map(|&loss_db| {
            let transmission = db_to_transmission(loss_db);
            Ok(CurvePoint {
                loss_db,
                transmission,
                rate: rate_at(base, transmission)?,
            })
        })
        .collect()
}

/// First loss at which a curve stops being secure, by linear interpolation.
pub fn zero_crossing_loss(points: &[CurvePoint]) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        (a.rate > 0.0 && b.rate <= 0.0)
            .then(|| a.loss_db + (b.loss_db - a.loss_db) * a.rate / (a.rate - b.rate))
    })
}

/// `n` evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    end
                } else {
                    start + (end - start) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}
