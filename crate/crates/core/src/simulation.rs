//! Monte-Carlo prepare-and-measure runs and the channel estimators applied to them.
//!
//! Per quadrature, Alice draws a modulation `a ~ N(0, V_S)`. Her noisy source adds
//! `N(0, κ)` preparation noise plus one unit of vacuum. The channel mixes in Eve's mode
//! of variance `W` with weight `1 − T`. Bob's heterodyne detector halves the
//! field and adds one more vacuum unit:
//!
//! ```text
//! y = √(T/2)·(a + n_prep + n_0) + √((1−T)/2)·n_E + n_det/√2
//! ```
//!
//! The resulting per-quadrature signal-to-noise ratio reproduces the analytic
//! heterodyne mutual information exactly.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::security::{key_rate_with_mutual_info, KeyRateBreakdown, ProtocolParams};

/// Transmission above which the excess-noise inversion is singular.
pub const UNITY_TRANSMISSION_GUARD: f64 = 1e-6;

const MIN_MI_SAMPLES: usize = 100;

/// How channel loss is realised in a simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelMode {
    /// Modulation and preparation noise pre-scaled by `√T`, channel noise synthesized.
    ScaledModulation,
    /// Signal, vacuum and Eve's mode mixed on an explicit beamsplitter.
    #[default]
    ExplicitBeamsplitter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: ProtocolParams,
    pub n_samples: usize,
    pub seed: u64,
    pub channel_mode: ChannelMode,
}

impl RunConfig {
    pub fn new(params: ProtocolParams, n_samples: usize, seed: u64) -> Self {
        Self {
            params,
            n_samples,
            seed,
            channel_mode: ChannelMode::default(),
        }
    }

    pub fn with_channel_mode(mut self, mode: ChannelMode) -> Self {
        self.channel_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_samples < 2 {
            return Err(Error::domain("n_samples", self.n_samples as f64, "need at least 2 samples"));
        }
        Ok(())
    }

    /// The matching unity-transmission calibration run, on an independent seed.
    pub fn calibration(&self) -> RunConfig {
        RunConfig {
            params: self.params.with_transmission(1.0),
            seed: self.seed.wrapping_add(0x9E37_79B9_7F4A_7C15),
            ..*self
        }
    }
}

/// One raw-key sample: Alice's modulation and Bob's heterodyne outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub a_x: f64,
    pub a_p: f64,
    pub y_x: f64,
    pub y_p: f64,
}

impl QuadratureRecord {
    pub fn is_finite(&self) -> bool {
        self.a_x.is_finite() && self.a_p.is_finite() && self.y_x.is_finite() && self.y_p.is_finite()
    }

    fn quadrature(&self, q: Quadrature) -> (f64, f64) {
        match q {
            Quadrature::X => (self.a_x, self.y_x),
            Quadrature::P => (self.a_p, self.y_p),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Quadrature {
    X,
    P,
}

const QUADRATURES: [Quadrature; 2] = [Quadrature::X, Quadrature::P];

/// Channel parameters estimated from simulated data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub t_hat: f64,
    /// `None` when the transmission estimate is at unity and the excess noise is unidentifiable.
    pub w_hat: Option<f64>,
    pub i_hat: f64,
    pub n_used: usize,
}

impl EstimationResult {
    pub fn validate(&self) -> Result<()> {
        if !self.t_hat.is_finite() || self.t_hat < 0.0 {
            return Err(Error::domain("t_hat", self.t_hat, "must be finite and >= 0"));
        }
        if let Some(w) = self.w_hat {
            if !w.is_finite() {
                return Err(Error::domain("w_hat", w, "must be finite"));
            }
        }
        if !self.i_hat.is_finite() || self.i_hat < 0.0 {
            return Err(Error::domain("i_hat", self.i_hat, "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Estimates plus the key rate evaluated at them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedRate {
    pub estimate: EstimationResult,
    pub breakdown: KeyRateBreakdown,
}

/// Generates `cfg.n_samples` records, deterministic in `cfg.seed`.
pub fn simulate_run(cfg: &RunConfig) -> Result<Vec<QuadratureRecord>> {
    cfg.validate()?;
    let p = &cfg.params;
    let t = p.transmission;
    let sig_a = p.modulation_variance.sqrt();
    let sig_prep = p.preparation_noise.sqrt();
    let sig_eve = p.eve_variance.sqrt();
    let half = std::f64::consts::FRAC_1_SQRT_2;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut z = move || -> f64 { StandardNormal.sample(&mut rng) };

    let mut quadrature = match cfg.channel_mode {
        ChannelMode::ExplicitBeamsplitter => {
            let (gt, gr) = ((t / 2.0).sqrt(), ((1.0 - t) / 2.0).sqrt());
            Box::new(move || {
                let a = sig_a * z();
                let field = a + sig_prep * z() + z();
                let eve = sig_eve * z();
                (a, gt * field + gr * eve + half * z())
            }) as Box<dyn FnMut() -> (f64, f64)>
        }
        ChannelMode::ScaledModulation => {
            let st = t.sqrt();
            let channel_noise = (t + (1.0 - t) * p.eve_variance).sqrt();
            Box::new(move || {
                let a = sig_a * z();
                let scaled = st * (a + sig_prep * z());
                (a, half * (scaled + channel_noise * z() + z()))
            })
        }
    };

    Ok((0..cfg.n_samples)
        .map(|_| {
            let (a_x, y_x) = quadrature();
            let (a_p, y_p) = quadrature();
            QuadratureRecord { a_x, a_p, y_x, y_p }
        })
        .collect())
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    var_a: f64,
    var_y: f64,
    cov: f64,
}

impl Moments {
    fn residual_variance(&self) -> f64 {
        (self.var_y - self.cov * self.cov / self.var_a).max(0.0)
    }
}

fn moments(records: &[QuadratureRecord], q: Quadrature) -> Result<Moments> {
    let n = records.len();
    if n < 2 {
        return Err(Error::Estimation(format!("need at least 2 records, got {n}")));
    }
    let (mut sa, mut sy) = (0.0, 0.0);
    for r in records {
        let (a, y) = r.quadrature(q);
        sa += a;
        sy += y;
    }
    let (ma, my) = (sa / n as f64, sy / n as f64);
    let (mut saa, mut syy, mut say) = (0.0, 0.0, 0.0);
    for r in records {
        let (a, y) = r.quadrature(q);
        let (da, dy) = (a - ma, y - my);
        saa += da * da;
        syy += dy * dy;
        say += da * dy;
    }
    let m = Moments {
        var_a: saa / (n - 1) as f64,
        var_y: syy / (n - 1) as f64,
        cov: say / (n - 1) as f64,
    };
    if !(m.var_a.is_finite() && m.var_y.is_finite() && m.cov.is_finite()) {
        return Err(Error::Estimation("non-finite sample moments".into()));
    }
    Ok(m)
}

/// `T̂ = (cov(y,a)_signal / cov(y,a)_calibration)²`, averaged over both quadratures.
pub fn estimate_transmission(signal: &[QuadratureRecord], calibration: &[QuadratureRecord]) -> Result<f64> {
    let mut total = 0.0;
    for q in QUADRATURES {
        let cal = moments(calibration, q)?.cov;
        if cal.abs() < 1e-12 {
            return Err(Error::Estimation(
                "calibration covariance vanishes: no modulation present".into(),
            ));
        }
        let sig = moments(signal, q)?.cov;
        total += (sig / cal).powi(2);
    }
    Ok(total / 2.0)
}

/// Excess-noise estimate `Ŵ` from the residual after least-squares removal of the modulation.
///
/// The trusted preparation noise `kappa` is subtracted explicitly. Estimates below 1
/// are returned as-is but logged as unphysical.
pub fn estimate_excess_noise(signal: &[QuadratureRecord], t_hat: f64, kappa: f64) -> Result<f64> {
    if !(t_hat > 0.0) || !t_hat.is_finite() {
        return Err(Error::domain("t_hat", t_hat, "transmission estimate must be > 0"));
    }
    if t_hat >= 1.0 - UNITY_TRANSMISSION_GUARD {
        return Err(Error::Estimation(format!(
            "excess noise is undefined at unity transmission (t_hat = {t_hat})"
        )));
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::domain("kappa", kappa, "preparation noise must be >= 0"));
    }
    let mut total = 0.0;
    for q in QUADRATURES {
        let m = moments(signal, q)?;
        if m.var_a < 1e-12 {
            return Err(Error::Estimation("no modulation in signal records".into()));
        }
        let r = m.residual_variance();
        total += (2.0 * r - 1.0 - t_hat * (1.0 + kappa)) / (1.0 - t_hat);
    }
    let w_hat = total / 2.0;
    if w_hat < 1.0 {
        warn!("excess-noise estimate W = {w_hat} is below the vacuum level (unphysical)");
    }
    Ok(w_hat)
}

/// Gaussian-channel mutual information `Σ_q ½ log₂(1/(1−ρ_q²))` from sample correlations.
pub fn empirical_mutual_information(signal: &[QuadratureRecord]) -> Result<f64> {
    if signal.len() < MIN_MI_SAMPLES {
        return Err(Error::Estimation(format!(
            "need at least {MIN_MI_SAMPLES} records, got {}",
            signal.len()
        )));
    }
    let mut total = 0.0;
    for q in QUADRATURES {
        let m = moments(signal, q)?;
        let denom = (m.var_a * m.var_y).sqrt();
        if !(denom > 0.0) {
            return Err(Error::DegenerateData("zero variance in a quadrature".into()));
        }
        let rho = m.cov / denom;
        if !(rho.abs() < 1.0) {
            return Err(Error::DegenerateData(format!("|correlation| = {} >= 1", rho.abs())));
        }
        total += -0.5 * (1.0 - rho * rho).log2();
    }
    Ok(total)
}

/// Estimates `T̂`, `Ŵ` and `Î` from records and evaluates `β·Î − χ` at the estimates.
///
/// `V_S` and `κ` are taken from `params` (Alice's own settings). For the Holevo
/// bound, `T̂` is capped at 1 and `Ŵ` is floored at the vacuum level; at unity
/// transmission `χ` does not depend on `W`.
pub fn rate_from_records(
    params: &ProtocolParams,
    signal: &[QuadratureRecord],
    calibration: &[QuadratureRecord],
) -> Result<SimulatedRate> {
    params.validate()?;
    let t_hat = estimate_transmission(signal, calibration)?;
    let i_hat = empirical_mutual_information(signal)?;
    let w_hat = if t_hat < 1.0 - UNITY_TRANSMISSION_GUARD {
        Some(estimate_excess_noise(signal, t_hat, params.preparation_noise)?)
    } else {
        None
    };
    let estimate = EstimationResult {
        t_hat,
        w_hat,
        i_hat,
        n_used: signal.len(),
    };

    let eval = params
        .with_transmission(t_hat.min(1.0))
        .with_eve_variance(w_hat.unwrap_or(1.0).max(1.0));
    let breakdown = key_rate_with_mutual_info(&eval, i_hat)?;
    Ok(SimulatedRate { estimate, breakdown })
}

/// Simulates `cfg`, then estimates and evaluates the key rate against `calibration`.
pub fn end_to_end_rate(cfg: &RunConfig, calibration: &[QuadratureRecord]) -> Result<SimulatedRate> {
    let signal = simulate_run(cfg)?;
    rate_from_records(&cfg.params, &signal, calibration)
}
