//! Entangling-cloner channel and asymptotic key rates for heterodyne detection.
//!
//! The entanglement-based picture has four modes: Alice's kept mode `A`, the
//! mode sent to Bob `B`, Eve's mode that enters the channel beamsplitter `E1`,
//! and Eve's kept purification `E2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    beamsplitter, condition_on_heterodyne, epr_state, eve_epr_state, partial_state, symplectic_spectrum,
    CovarianceMatrix,
};

pub const MODE_ALICE: usize = 0;
pub const MODE_BOB: usize = 1;
pub const MODE_EVE_CHANNEL: usize = 2;
pub const MODE_EVE_KEPT: usize = 3;

/// Which party's data the other corrects towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Bob corrects towards Alice; Eve's information is conditioned on Alice.
    Direct,
    /// Alice corrects towards Bob; Eve's information is conditioned on Bob.
    Reverse,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Direct => "direct",
            Direction::Reverse => "reverse",
        }
    }

    fn conditioning_mode(self) -> usize {
        match self {
            Direction::Direct => MODE_ALICE,
            Direction::Reverse => MODE_BOB,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" | "dr" => Ok(Direction::Direct),
            "reverse" | "rr" => Ok(Direction::Reverse),
            other => Err(Error::Parse(format!(
                "unknown reconciliation direction '{other}' (expected direct or reverse)"
            ))),
        }
    }
}

/// One protocol instance. Variances are in shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Alice's Gaussian modulation variance `V_S`.
    pub modulation_variance: f64,
    /// Trusted preparation noise `κ` above shot noise.
    pub preparation_noise: f64,
    /// Channel transmittance `T`.
    pub transmission: f64,
    /// Variance `W` of Eve's injected EPR state.
    pub eve_variance: f64,
    /// Reconciliation efficiency `β`.
    pub reconciliation_efficiency: f64,
    pub direction: Direction,
}

impl Default for ProtocolParams {
    /// The experiment's operating point: `V_S = 32`, `W = 1.11`, `β = 0.95`, no preparation
    /// noise, direct reconciliation, unity transmission.
    fn default() -> Self {
        Self {
            modulation_variance: 32.0,
            preparation_noise: 0.0,
            transmission: 1.0,
            eve_variance: 1.11,
            reconciliation_efficiency: 0.95,
            direction: Direction::Direct,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        let finite_at_least = |name, v: f64, lo: f64, reason| {
            if v.is_finite() && v >= lo {
                Ok(())
            } else {
                Err(Error::domain(name, v, reason))
            }
        };
        finite_at_least("modulation_variance", self.modulation_variance, 0.0, "must be finite and >= 0")?;
        finite_at_least("preparation_noise", self.preparation_noise, 0.0, "must be finite and >= 0")?;
        finite_at_least("eve_variance", self.eve_variance, 1.0, "must be finite and >= 1")?;
        if !(0.0..=1.0).contains(&self.transmission) {
            return Err(Error::domain("transmission", self.transmission, "must lie in [0, 1]"));
        }
        let beta = self.reconciliation_efficiency;
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::domain("reconciliation_efficiency", beta, "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Variance of Alice's kept EPR mode, `μ = V_S + 1`.
    pub fn mu(&self) -> f64 {
        self.modulation_variance + 1.0
    }

    /// Noise carried by the prepared light, `V_0 = 1 + κ`.
    pub fn v0(&self) -> f64 {
        1.0 + self.preparation_noise
    }

    /// Total variance of the mode sent to Bob, `V = μ + κ`.
    pub fn sent_variance(&self) -> f64 {
        self.mu() + self.preparation_noise
    }

    pub fn with_transmission(mut self, t: f64) -> Self {
        self.transmission = t;
        self
    }

    pub fn with_preparation_noise(mut self, kappa: f64) -> Self {
        self.preparation_noise = kappa;
        self
    }

    pub fn with_eve_variance(mut self, w: f64) -> Self {
        self.eve_variance = w;
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_efficiency(mut self, beta: f64) -> Self {
        self.reconciliation_efficiency = beta;
        self
    }

    pub fn with_modulation_variance(mut self, vs: f64) -> Self {
        self.modulation_variance = vs;
        self
    }
}

/// Everything that goes into one key-rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateBreakdown {
    /// `I(A:B)` in bits per channel use.
    pub mutual_info: f64,
    /// Holevo bound `χ(E:X)` in bits per channel use.
    pub holevo: f64,
    /// `β·I(A:B) − χ(E:X)`.
    pub key_rate: f64,
    /// Eve's symplectic eigenvalues, descending.
    pub eve_spectrum: (f64, f64),
    /// Eve's symplectic eigenvalues conditioned on the reference party, descending.
    pub conditional_spectrum: (f64, f64),
}

impl KeyRateBreakdown {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.mutual_info,
            self.holevo,
            self.key_rate,
            self.eve_spectrum.0,
            self.eve_spectrum.1,
            self.conditional_spectrum.0,
            self.conditional_spectrum.1,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("key-rate breakdown contains a non-finite value".into()));
        }
        if self.holevo < -1e-9 {
            return Err(Error::domain("holevo", self.holevo, "Holevo bound must be >= 0"));
        }
        for nu in [
            self.eve_spectrum.0,
            self.eve_spectrum.1,
            self.conditional_spectrum.0,
            self.conditional_spectrum.1,
        ] {
            if nu < 1.0 - crate::gaussian::PHYSICAL_TOLERANCE {
                return Err(Error::domain("symplectic eigenvalue", nu, "must be >= 1"));
            }
        }
        Ok(())
    }
}

/// Shannon information between Alice's modulation and Bob's heterodyne outcomes (both quadratures).
pub fn mutual_information(p: &ProtocolParams) -> Result<f64> {
    p.validate()?;
    Ok(mutual_information_unchecked(p))
}

fn mutual_information_unchecked(p: &ProtocolParams) -> f64 {
    let t = p.transmission;
    let noise = (1.0 - t) * p.eve_variance + t * p.v0() + 1.0;
    ((noise + t * p.modulation_variance) / noise).log2()
}

/// Joint covariance of `(A, B, E1, E2)` after Eve's beamsplitter.
pub fn joint_state_after_channel(p: &ProtocolParams) -> Result<CovarianceMatrix> {
    p.validate()?;
    let alice = epr_state(p.mu(), p.preparation_noise)?;
    let eve = eve_epr_state(p.eve_variance)?;
    beamsplitter(&alice.direct_sum(&eve), MODE_BOB, MODE_EVE_CHANNEL, p.transmission)
}

/// Closed-form symplectic eigenvalues `(ν_E+, ν_E−)` of Eve's two modes.
pub fn eve_spectrum_analytic(p: &ProtocolParams) -> Result<(f64, f64)> {
    p.validate()?;
    let (t, w) = (p.transmission, p.eve_variance);
    let e_v = (1.0 - t) * p.sent_variance() + t * w;
    let root = ((e_v + w).powi(2) - 4.0 * t * (w * w - 1.0)).sqrt();
    Ok((0.5 * (root + (e_v - w)), 0.5 * (root - (e_v - w))))
}

struct HolevoParts {
    chi: f64,
    eve: (f64, f64),
    conditional: (f64, f64),
}

fn holevo_parts(p: &ProtocolParams) -> Result<HolevoParts> {
    let joint = joint_state_after_channel(p)?;
    let eve = partial_state(&joint, &[MODE_EVE_CHANNEL, MODE_EVE_KEPT])?;
    let eve_spec = symplectic_spectrum(&eve)?;

    let conditioned = condition_on_heterodyne(&joint, p.direction.conditioning_mode())?;
    // the measured mode is 0 or 1, so Eve's modes sit at 1 and 2 afterwards
    let eve_given_x = partial_state(&conditioned, &[1, 2])?;
    let cond_spec = symplectic_spectrum(&eve_given_x)?;

    let chi = eve_spec.entropy()? - cond_spec.entropy()?;
    Ok(HolevoParts {
        chi,
        eve: (eve_spec[0], eve_spec[1]),
        conditional: (cond_spec[0], cond_spec[1]),
    })
}

/// Holevo bound `χ(E:X) = S(E) − S(E|X)` with `X` Alice (direct) or Bob (reverse).
pub fn holevo(p: &ProtocolParams) -> Result<f64> {
    holevo_parts(p).map(|h| h.chi)
}

/// Asymptotic secret key rate under collective attacks.
pub fn key_rate(p: &ProtocolParams) -> Result<KeyRateBreakdown> {
    let mutual_info = mutual_information(p)?;
    key_rate_with_mutual_info(p, mutual_info)
}

/// Key rate with an externally supplied `I(A:B)`, e.g. an estimate from data.
pub fn key_rate_with_mutual_info(p: &ProtocolParams, mutual_info: f64) -> Result<KeyRateBreakdown> {
    let parts = holevo_parts(p)?;
    Ok(KeyRateBreakdown {
        mutual_info,
        holevo: parts.chi,
        key_rate: p.reconciliation_efficiency * mutual_info - parts.chi,
        eve_spectrum: parts.eve,
        conditional_spectrum: parts.conditional,
    })
}
