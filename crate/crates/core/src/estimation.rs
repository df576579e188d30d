//! Calibration of the selection ratio, phase inference from counts, and the
//! unamplified interferometer used as a baseline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::{
    binomial, rng_for, sigma_x_from_counts, sigma_x_from_pair, simulate_counts, CountData, NoiseModel,
    STREAM_CONVENTIONAL,
};
use crate::protocol::{invert_amplification, magnification, ProtocolConfig};

/// Selection ratio recovered from a zero-signal post-selection probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub p_hat: f64,
    pub r_hat: f64,
    /// Waveplate tilt with `sin(2δ) = √p`, degrees.
    pub delta_hat: f64,
    pub h_hat: f64,
    pub std_error_p: f64,
}

/// `r = (√p − √(1−p)) / (√p + √(1−p))`, `h = 1/(1 + r)`.
pub fn calibrate_r(p_hat: f64) -> Result<CalibrationResult> {
    if !(p_hat > 0.0 && p_hat < 1.0) {
        return Err(Error::CalibrationBoundary { p: p_hat });
    }
    let (s, c) = (p_hat.sqrt(), (1.0 - p_hat).sqrt());
    let r_hat = (s - c) / (s + c);
    Ok(CalibrationResult {
        p_hat,
        r_hat,
        delta_hat: 0.5 * s.asin().to_degrees(),
        h_hat: magnification(r_hat)?,
        std_error_p: 0.0,
    })
}

impl CalibrationResult {
    /// Calibration from `survivors` out of `trials` photons at zero signal.
    pub fn from_counts(survivors: u64, trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InsufficientData("no photons in calibration run"));
        }
        let p = survivors as f64 / trials as f64;
        let mut cal = calibrate_r(p)?;
        cal.std_error_p = (p * (1.0 - p) / trials as f64).sqrt();
        Ok(cal)
    }

    /// Noise-free calibration for a known ratio `r > −1`.
    pub fn from_ratio(r: f64) -> Result<Self> {
        if !(r > -1.0 && r.is_finite()) {
            return Err(Error::Validation(format!("ratio {r} must be finite and > -1")));
        }
        let (a, b) = ((1.0 + r).powi(2), (1.0 - r).powi(2));
        let mut cal = calibrate_r(a / (a + b))?;
        // keep r bit-exact; p is only used for reporting
        cal.r_hat = r;
        cal.h_hat = magnification(r)?;
        Ok(cal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub kappa_hat: f64,
    pub theta_hat: f64,
    pub sigma_x_hat: f64,
    pub std_error_sigma_x: f64,
    /// Delta-method error of `κ̂`; infinite when `κ̂ = 0`.
    pub std_error_kappa: f64,
    /// Leading-order sensitivity `1/(h√N)`.
    pub analytic_sensitivity: f64,
    /// `Δ⟨σ̂x⟩ / (V h |sin(h θ̂)|)`; infinite when `h θ̂ = 0`.
    pub std_error_theta: f64,
    /// `σ̂x / V` fell outside `[−1, 1]` and was clamped.
    pub clamped: bool,
    pub n_detected: u64,
}

/// `Δθ = Δ⟨σ̂x⟩ / (h sin(hθ))` with the binomial
/// `Δ⟨σ̂x⟩ = |sin(hθ)| / √N`.
pub fn analytic_sensitivity(theta: f64, h: f64, n_detected: u64) -> Result<f64> {
    if n_detected == 0 {
        return Err(Error::InsufficientData("no detected photons"));
    }
    let s = (h * theta).sin();
    if !s.is_finite() || s.abs() < 1e-12 {
        return Err(Error::UndefinedSensitivity { h, theta });
    }
    let delta_sigma = s.abs() / (n_detected as f64).sqrt();
    Ok(delta_sigma / (h * s).abs())
}

fn estimate_from_sigma(
    sigma_x: f64,
    std_error: f64,
    n_detected: u64,
    r: f64,
    h: f64,
    visibility: f64,
) -> Result<PhaseEstimate> {
    if !(visibility > 0.0 && visibility <= 1.0) {
        return Err(Error::Validation(format!("visibility {visibility} must be in (0, 1]")));
    }
    let ratio = sigma_x / visibility;
    let clamped = ratio.abs() > 1.0;
    // arccos branch: only ⟨σ̂x⟩ is measured, so κ̂ ≥ 0.
    let kappa_hat = ratio.clamp(-1.0, 1.0).acos();
    let theta_hat = invert_amplification(kappa_hat, r)?;
    let per_kappa = std_error / visibility;
    let sk = kappa_hat.sin();
    let sh = (h * theta_hat).sin().abs();
    Ok(PhaseEstimate {
        kappa_hat,
        theta_hat,
        sigma_x_hat: sigma_x,
        std_error_sigma_x: std_error,
        std_error_kappa: if sk > 0.0 { per_kappa / sk } else { f64::INFINITY },
        analytic_sensitivity: 1.0 / (h * (n_detected as f64).sqrt()),
        std_error_theta: if sh > 0.0 { per_kappa / (h * sh) } else { f64::INFINITY },
        clamped,
        n_detected,
    })
}

/// Reads `κ̂ = arccos(σ̂x / V)` from the counts and inverts the
/// amplification with the calibrated ratio.
pub fn estimate_phase(c: &CountData, cal: &CalibrationResult, noise: &NoiseModel) -> Result<PhaseEstimate> {
    if cal.r_hat.is_nan() || cal.r_hat.abs() >= 1.0 {
        return Err(Error::Validation(format!("calibrated r = {} must satisfy |r| < 1", cal.r_hat)));
    }
    let (sx, se) = sigma_x_from_counts(c)?;
    estimate_from_sigma(sx, se, c.n_detected(), cal.r_hat, cal.h_hat, noise.visibility)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineEstimate {
    pub estimate: PhaseEstimate,
    /// `arccos(V)`: the phase whose fringe reading equals the zero-phase
    /// reading of an interferometer with visibility `V`.
    pub precision_floor: f64,
}

/// Unamplified Mach–Zehnder readout: `n_detected` photons split with
/// `P(+) = (1 + V cos θ)/2`, no post-selection.
pub fn conventional_baseline(theta: f64, n_detected: u64, visibility: f64, seed: u64) -> Result<BaselineEstimate> {
    if !theta.is_finite() {
        return Err(Error::Validation("theta must be finite".into()));
    }
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::Validation(format!("visibility {visibility} outside [0, 1]")));
    }
    let mut rng = rng_for(seed, STREAM_CONVENTIONAL);
    let n_plus = binomial(&mut rng, n_detected, 0.5 * (1.0 + visibility * theta.cos()))?;
    let (sx, se) = sigma_x_from_pair(n_plus, n_detected - n_plus)?;
    Ok(BaselineEstimate {
        estimate: estimate_from_sigma(sx, se, n_detected, 0.0, 1.0, visibility)?,
        precision_floor: visibility.acos(),
    })
}

/// How the photon budget is shared between the two arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetMode {
    /// The baseline detects as many photons as survive post-selection.
    #[default]
    EqualDetected,
    /// The baseline detects every photon the amplified arm sent in.
    EqualInput,
}

impl std::str::FromStr for BudgetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal-detected" => Ok(BudgetMode::EqualDetected),
            "equal-input" => Ok(BudgetMode::EqualInput),
            other => Err(Error::Validation(format!(
                "unknown budget mode '{other}' (expected equal-detected or equal-input)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub rate: f64,
    pub duration: f64,
    pub mode: BudgetMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub seed: u64,
    pub n_input: u64,
    pub amplified: PhaseEstimate,
    pub conventional: PhaseEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub mean_theta_hat: f64,
    pub bias: f64,
    /// Sample standard deviation of `θ̂` across seeds.
    pub std_theta_hat: f64,
    pub mean_analytic_sensitivity: f64,
    pub mean_n_detected: f64,
    pub precision_floor: f64,
    pub clamped_runs: usize,
}

impl ArmSummary {
    fn from_estimates<'a>(theta: f64, floor: f64, it: impl Iterator<Item = &'a PhaseEstimate> + Clone) -> Self {
        let n = it.clone().count() as f64;
        let mean = |f: fn(&PhaseEstimate) -> f64| it.clone().map(f).sum::<f64>() / n;
        let mean_theta_hat = mean(|e| e.theta_hat);
        let var = it.clone().map(|e| (e.theta_hat - mean_theta_hat).powi(2)).sum::<f64>() / (n - 1.0);
        Self {
            mean_theta_hat,
            bias: mean_theta_hat - theta,
            std_theta_hat: var.sqrt(),
            mean_analytic_sensitivity: mean(|e| e.analytic_sensitivity),
            mean_n_detected: mean(|e| e.n_detected as f64),
            precision_floor: floor,
            clamped_runs: it.filter(|e| e.clamped).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub theta: f64,
    pub r: f64,
    pub h: f64,
    pub budget: Budget,
    pub noise: NoiseModel,
    pub rows: Vec<ComparisonRow>,
    pub amplified: ArmSummary,
    pub conventional: ArmSummary,
    /// Conventional over amplified `θ̂` spread.
    pub std_ratio: f64,
    /// `arccos(V)` over `arccos(V)/h`.
    pub floor_ratio: f64,
}

/// Runs the amplified protocol and the unamplified baseline for every seed
/// and summarizes both arms. Rows keep the order of `seeds`.
pub fn compare_protocols(
    theta: f64,
    cal: &CalibrationResult,
    budget: &Budget,
    noise: &NoiseModel,
    seeds: &[u64],
) -> Result<ComparisonReport> {
    if seeds.len() < 2 {
        return Err(Error::InsufficientData("a comparison needs at least two seeds"));
    }
    let cfg = ProtocolConfig::from_ratio(cal.r_hat, theta)?;
    let rows = seeds
        .par_iter()
        .map(|&seed| {
            let counts = simulate_counts(&cfg, noise, budget.rate, budget.duration, seed)?;
            let amplified = estimate_phase(&counts, cal, noise)?;
            let n_conv = match budget.mode {
                BudgetMode::EqualDetected => counts.n_detected(),
                BudgetMode::EqualInput => counts.n_input,
            };
            let conventional = conventional_baseline(theta, n_conv, noise.visibility, seed)?.estimate;
            Ok(ComparisonRow { seed, n_input: counts.n_input, amplified, conventional })
        })
        .collect::<Result<Vec<_>>>()?;

    let conv_floor = noise.visibility.acos();
    let amp_floor = conv_floor / cal.h_hat;
    let amplified = ArmSummary::from_estimates(theta, amp_floor, rows.iter().map(|r| &r.amplified));
    let conventional = ArmSummary::from_estimates(theta, conv_floor, rows.iter().map(|r| &r.conventional));
    Ok(ComparisonReport {
        theta,
        r: cal.r_hat,
        h: cal.h_hat,
        budget: *budget,
        noise: *noise,
        std_ratio: conventional.std_theta_hat / amplified.std_theta_hat,
        floor_ratio: cal.h_hat,
        rows,
        amplified,
        conventional,
    })
}
