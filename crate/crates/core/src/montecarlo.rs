//! Seeded photon-counting simulation of the amplified readout.
//!
//! A run draws the number of photons reaching post-selection from a Poisson
//! law at `rate · duration`, keeps each with the post-selection probability,
//! and splits the survivors between the `+` and `−` detectors with
//! `P(+) = (1 + V cos κ)/2`.
//!
//! Every draw comes from a ChaCha20 stream keyed by the run seed. Distinct
//! consumers of the same seed use distinct stream ids, so the amplified and
//! unamplified arms of a comparison never share random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{run_protocol, ProtocolConfig};
use crate::qstate::sigma_x_expectation;

pub(crate) const STREAM_AMPLIFIED: u64 = 0;
pub(crate) const STREAM_CONVENTIONAL: u64 = 1;

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Interference contrast in `[0, 1]`.
    pub visibility: f64,
    /// Standard deviation (radians) of a per-run Gaussian offset on the
    /// signal retardance.
    pub lcvr_jitter_std: f64,
    /// Dark counts per second, added independently to each detector.
    pub dark_rate: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { visibility: 1.0, lcvr_jitter_std: 0.0, dark_rate: 0.0 }
    }
}

impl NoiseModel {
    pub fn with_visibility(visibility: f64) -> Self {
        Self { visibility, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::Validation(format!("visibility {} outside [0, 1]", self.visibility)));
        }
        if !(self.lcvr_jitter_std >= 0.0 && self.lcvr_jitter_std.is_finite()) {
            return Err(Error::Validation("LCVR jitter must be finite and >= 0".into()));
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(Error::Validation("dark rate must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Which pointer quantity sets the detector split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointerStatistics {
    /// `P(+) = (1 + V cos κ)/2` with `κ` the exact relative phase of the
    /// post-selected pointer.
    #[default]
    RelativePhase,
    /// `P(+) = (1 + V⟨σ̂x⟩)/2` from the full normalized pointer, including
    /// the amplitude imbalance between `|↑⟩` and `|↓⟩` at finite `θ`.
    ExactExpectation,
}

/// Outcome of one counting run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountData {
    pub n_plus: u64,
    pub n_minus: u64,
    /// Photons reaching post-selection.
    pub n_input: u64,
    /// Photons surviving post-selection (before dark counts).
    pub n_postselected: u64,
    pub duration: f64,
    pub rate: f64,
    pub seed: u64,
    /// Signal phase actually applied, after jitter.
    pub theta_applied: f64,
    pub config: ProtocolConfig,
    pub noise: NoiseModel,
}

impl CountData {
    pub fn n_detected(&self) -> u64 {
        self.n_plus + self.n_minus
    }

    pub fn record(&self) -> CountRecord {
        let c = &self.config;
        CountRecord {
            seed: self.seed,
            rate: self.rate,
            duration: self.duration,
            n_input: self.n_input,
            n_postselected: self.n_postselected,
            n_plus: self.n_plus,
            n_minus: self.n_minus,
            theta: c.theta,
            theta_applied: self.theta_applied,
            alpha: c.alpha,
            beta: c.beta,
            mu: c.mu,
            nu: c.nu,
            gamma: c.gamma,
            eta: c.eta,
            visibility: self.noise.visibility,
            lcvr_jitter_std: self.noise.lcvr_jitter_std,
            dark_rate: self.noise.dark_rate,
        }
    }
}

/// Flat form of [`CountData`] for one CSV row; carries everything needed
/// to replay the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub seed: u64,
    pub rate: f64,
    pub duration: f64,
    pub n_input: u64,
    pub n_postselected: u64,
    pub n_plus: u64,
    pub n_minus: u64,
    pub theta: f64,
    pub theta_applied: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub nu: f64,
    pub gamma: f64,
    pub eta: f64,
    pub visibility: f64,
    pub lcvr_jitter_std: f64,
    pub dark_rate: f64,
}

pub(crate) fn poisson(rng: &mut ChaCha20Rng, mean: f64) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::Validation(format!("poisson mean {mean}: {e}")))?;
    Ok(d.sample(rng) as u64)
}

pub(crate) fn binomial(rng: &mut ChaCha20Rng, n: u64, p: f64) -> Result<u64> {
    let d = Binomial::new(n, p.clamp(0.0, 1.0))
        .map_err(|e| Error::Validation(format!("binomial p = {p}: {e}")))?;
    Ok(d.sample(rng))
}

pub fn simulate_counts(cfg: &ProtocolConfig, noise: &NoiseModel, rate: f64, duration: f64, seed: u64) -> Result<CountData> {
    simulate_counts_with(cfg, noise, rate, duration, seed, PointerStatistics::default())
}

pub fn simulate_counts_with(
    cfg: &ProtocolConfig,
    noise: &NoiseModel,
    rate: f64,
    duration: f64,
    seed: u64,
    statistics: PointerStatistics,
) -> Result<CountData> {
    noise.validate()?;
    if !(rate > 0.0 && rate.is_finite() && duration > 0.0 && duration.is_finite()) {
        return Err(Error::Validation("rate and duration must be positive".into()));
    }
    let mut rng = rng_for(seed, STREAM_AMPLIFIED);

    let mut theta_applied = cfg.theta;
    if noise.lcvr_jitter_std > 0.0 {
        let jitter = Normal::new(0.0, noise.lcvr_jitter_std)
            .map_err(|e| Error::Validation(format!("jitter: {e}")))?;
        theta_applied += jitter.sample(&mut rng);
    }
    let outcome = run_protocol(&cfg.with_theta(theta_applied))?;
    let coherence = match statistics {
        PointerStatistics::RelativePhase => outcome.kappa_exact.cos(),
        PointerStatistics::ExactExpectation => sigma_x_expectation(&outcome.pointer)?,
    };
    let p_plus = 0.5 * (1.0 + noise.visibility * coherence);

    let n_input = poisson(&mut rng, rate * duration)?;
    let n_postselected = binomial(&mut rng, n_input, outcome.success_prob)?;
    let mut n_plus = binomial(&mut rng, n_postselected, p_plus)?;
    let mut n_minus = n_postselected - n_plus;
    if noise.dark_rate > 0.0 {
        n_plus += poisson(&mut rng, noise.dark_rate * duration)?;
        n_minus += poisson(&mut rng, noise.dark_rate * duration)?;
    }

    Ok(CountData {
        n_plus,
        n_minus,
        n_input,
        n_postselected,
        duration,
        rate,
        seed,
        theta_applied,
        config: *cfg,
        noise: *noise,
    })
}

/// `⟨σ̂x⟩` estimate `(N₊ − N₋)/(N₊ + N₋)` and its binomial standard error.
pub fn sigma_x_from_counts(c: &CountData) -> Result<(f64, f64)> {
    sigma_x_from_pair(c.n_plus, c.n_minus)
}

pub(crate) fn sigma_x_from_pair(n_plus: u64, n_minus: u64) -> Result<(f64, f64)> {
    let n = n_plus + n_minus;
    if n == 0 {
        return Err(Error::InsufficientData("no detected photons"));
    }
    let n = n as f64;
    let est = (n_plus as f64 - n_minus as f64) / n;
    Ok((est, ((1.0 - est * est).max(0.0) / n).sqrt()))
}
