//! TOML run configuration.
//!
//! Waveplate angles are in degrees, phases in radians, rates in photons/s
//! and durations in seconds. Every section is optional; omitted keys take
//! the defaults below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wmpa_core::{NoiseModel, PointerStatistics, ProtocolConfig};

use crate::error::{config, usage, Categorize, Category, CliResult};

pub const DEFAULT_THETAS: [f64; 4] = [0.03, 0.05, 0.08, 0.1];
pub const DEFAULT_MAGNIFICATIONS: [f64; 3] = [3.0, 5.0, 10.0];

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: ProtocolSection,
    pub signal: SignalSection,
    pub source: SourceSection,
    pub noise: NoiseSection,
    pub run: RunSection,
    pub calibration: CalibrationSection,
    pub compare: CompareSection,
    pub fig2: Fig2Section,
    pub sweep: SweepSection,
    pub train_check: TrainCheckSection,
    /// Where files go, not what they contain: left out of the echo so the
    /// same run written to two places is byte-identical.
    #[serde(skip_serializing)]
    pub output: OutputSection,
}

/// Geometry: exactly one of `delta_deg`, `r`, or all of `alpha..eta`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Delta(f64),
    Ratio(f64),
    /// `[α, β, μ, ν, γ, η]`
    Explicit([f64; 6]),
}

impl Geometry {
    pub fn at(&self, theta: f64) -> wmpa_core::Result<ProtocolConfig> {
        match *self {
            Geometry::Delta(d) => ProtocolConfig::from_delta(d, theta),
            Geometry::Ratio(r) => ProtocolConfig::from_ratio(r, theta),
            Geometry::Explicit([a, b, m, n, g, e]) => ProtocolConfig::new(a, b, m, n, g, e, theta),
        }
    }

    /// Equal-weight pre-selection, which the zero-signal calibration assumes.
    pub fn balanced(&self) -> bool {
        match *self {
            Geometry::Explicit([a, b, ..]) => (a - b).abs() < 1e-12,
            _ => true,
        }
    }
}

impl ProtocolSection {
    pub fn geometry(&self) -> CliResult<Geometry> {
        let explicit = [self.alpha, self.beta, self.mu, self.nu, self.gamma, self.eta];
        let names = ["alpha", "beta", "mu", "nu", "gamma", "eta"];
        let given = explicit.iter().filter(|v| v.is_some()).count();
        let kinds = usize::from(self.delta_deg.is_some()) + usize::from(self.r.is_some()) + usize::from(given > 0);
        if kinds == 0 {
            return Err(usage(
                "missing protocol geometry: set protocol.delta_deg (or protocol.r, or protocol.alpha..eta)",
            ));
        }
        if kinds > 1 {
            return Err(config("protocol: give exactly one of delta_deg, r, or alpha..eta"));
        }
        if let Some(d) = self.delta_deg {
            return Ok(Geometry::Delta(d));
        }
        if let Some(r) = self.r {
            return Ok(Geometry::Ratio(r));
        }
        let missing: Vec<_> = names.iter().zip(&explicit).filter(|(_, v)| v.is_none()).map(|(n, _)| *n).collect();
        if !missing.is_empty() {
            return Err(config(format!("protocol: missing {}", missing.join(", "))));
        }
        Ok(Geometry::Explicit(explicit.map(Option::unwrap)))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSection {
    /// Signal phases, radians.
    pub thetas: Vec<f64>,
}

impl Default for SignalSection {
    fn default() -> Self {
        Self { thetas: DEFAULT_THETAS.to_vec() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    /// Photons/s reaching post-selection.
    pub rate: f64,
    /// Counting window, s.
    pub duration: f64,
}

impl Default for SourceSection {
    fn default() -> Self {
        Self { rate: 8e5, duration: 10.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub visibility: f64,
    /// Gaussian retardance jitter per run, radians.
    pub lcvr_jitter_std: f64,
    /// Dark counts per detector, 1/s.
    pub dark_rate: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let n = NoiseModel::default();
        Self { visibility: n.visibility, lcvr_jitter_std: n.lcvr_jitter_std, dark_rate: n.dark_rate }
    }
}

impl NoiseSection {
    pub fn model(&self) -> NoiseModel {
        NoiseModel { visibility: self.visibility, lcvr_jitter_std: self.lcvr_jitter_std, dark_rate: self.dark_rate }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Explicit seed list; overrides `first_seed`/`seed_count`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    pub first_seed: u64,
    pub seed_count: u64,
    pub statistics: PointerStatistics,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seeds: None, first_seed: 0, seed_count: 100, statistics: PointerStatistics::default() }
    }
}

impl RunSection {
    pub fn seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (self.first_seed..self.first_seed + self.seed_count).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationMode {
    /// Zero-signal counting run, `p̂ = survivors / input`.
    Simulated,
    /// Ratio taken from the configured geometry.
    Exact,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    /// `simulated` or `exact`.
    pub mode: String,
    /// Keep this apart from the run seeds: equal seeds share the photon
    /// number draw.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self { mode: "simulated".into(), seed: 1 << 32, rate: None, duration: None }
    }
}

impl CalibrationSection {
    pub fn mode(&self) -> CliResult<CalibrationMode> {
        match self.mode.as_str() {
            "simulated" => Ok(CalibrationMode::Simulated),
            "exact" => Ok(CalibrationMode::Exact),
            other => Err(usage(format!("calibration.mode: unknown mode '{other}' (expected simulated or exact)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    /// `equal-detected` or `equal-input`.
    pub mode: String,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self { mode: "equal-detected".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig2Section {
    pub magnifications: Vec<f64>,
}

impl Default for Fig2Section {
    fn default() -> Self {
        Self { magnifications: DEFAULT_MAGNIFICATIONS.to_vec() }
    }
}

/// Sweep points: tilts or magnifications, not both.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas_deg: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub magnifications: Option<Vec<f64>>,
}

impl SweepSection {
    pub fn points(&self) -> CliResult<Vec<Geometry>> {
        match (&self.deltas_deg, &self.magnifications) {
            (Some(_), Some(_)) => Err(config("sweep: give deltas_deg or magnifications, not both")),
            (Some(d), None) => Ok(d.iter().map(|&d| Geometry::Delta(d)).collect()),
            (None, Some(h)) => Ok(h.iter().map(|&h| Geometry::Ratio(1.0 / h - 1.0)).collect()),
            (None, None) => Err(usage("sweep needs sweep.deltas_deg or sweep.magnifications")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainCheckSection {
    pub delta_points: usize,
    pub delta_min_deg: f64,
    pub delta_max_deg: f64,
    pub theta_points: usize,
    pub theta_max: f64,
    pub tolerance: f64,
    /// Custom train document, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    /// Signal phase the custom train is compared at.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl Default for TrainCheckSection {
    fn default() -> Self {
        Self {
            delta_points: 20,
            delta_min_deg: 0.5,
            delta_max_deg: 22.0,
            theta_points: 20,
            theta_max: 0.2,
            tolerance: 1e-12,
            train: None,
            theta: None,
        }
    }
}

impl TrainCheckSection {
    pub fn grid(&self) -> Vec<(f64, f64)> {
        let step = |lo: f64, hi: f64, n: usize, i: usize| if n > 1 { lo + (hi - lo) * i as f64 / (n - 1) as f64 } else { lo };
        (0..self.delta_points)
            .flat_map(|i| {
                let d = step(self.delta_min_deg, self.delta_max_deg, self.delta_points, i);
                (0..self.theta_points).map(move |j| (d, step(0.0, self.theta_max, self.theta_points, j)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// File stem; defaults to the command name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

fn positive(field: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config(format!("{field}: must be positive and finite, got {v}")))
    }
}

fn finite_list(field: &str, v: &[f64]) -> CliResult<()> {
    if v.is_empty() {
        return Err(config(format!("{field}: must not be empty")));
    }
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(config(format!("{field}[{i}]: must be finite, got {}", v[i]))),
        None => Ok(()),
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config(format!("{origin}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, or the defaults when no file is given. Relative paths
    /// inside the file resolve against its directory.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))
            .category(Category::Io)?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(t) = &cfg.train_check.train {
            cfg.train_check.train = Some(base.join(t));
        }
        if let Some(d) = &cfg.output.dir {
            cfg.output.dir = Some(base.join(d));
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        finite_list("signal.thetas", &self.signal.thetas)?;
        positive("source.rate", self.source.rate)?;
        positive("source.duration", self.source.duration)?;
        self.noise.model().validate().map_err(|e| config(format!("noise: {e}")))?;
        if self.run.seeds().is_empty() {
            return Err(config("run: at least one seed is required"));
        }
        if let Some(r) = self.calibration.rate {
            positive("calibration.rate", r)?;
        }
        if let Some(d) = self.calibration.duration {
            positive("calibration.duration", d)?;
        }
        finite_list("fig2.magnifications", &self.fig2.magnifications)?;
        for (i, &h) in self.fig2.magnifications.iter().enumerate() {
            positive(&format!("fig2.magnifications[{i}]"), h)?;
        }
        if let Some(d) = &self.sweep.deltas_deg {
            finite_list("sweep.deltas_deg", d)?;
        }
        if let Some(h) = &self.sweep.magnifications {
            finite_list("sweep.magnifications", h)?;
            for (i, &h) in h.iter().enumerate() {
                positive(&format!("sweep.magnifications[{i}]"), h)?;
            }
        }
        let tc = &self.train_check;
        if tc.delta_points == 0 || tc.theta_points == 0 {
            return Err(config("train_check: delta_points and theta_points must be at least 1"));
        }
        positive("train_check.tolerance", tc.tolerance)?;
        if !(tc.delta_min_deg > 0.0 && tc.delta_min_deg <= tc.delta_max_deg && tc.delta_max_deg < 22.5) {
            return Err(config("train_check: need 0 < delta_min_deg <= delta_max_deg < 22.5"));
        }
        if !tc.theta_max.is_finite() {
            return Err(config("train_check.theta_max: must be finite"));
        }
        Ok(())
    }

    pub fn calibration_rate(&self) -> f64 {
        self.calibration.rate.unwrap_or(self.source.rate)
    }

    pub fn calibration_duration(&self) -> f64 {
        self.calibration.duration.unwrap_or(self.source.duration)
    }

    /// `--seed` shifts the seed range (or list) to start at `seed`.
    pub fn set_first_seed(&mut self, seed: u64) {
        let n = self.run.seeds().len() as u64;
        self.run.first_seed = seed;
        if self.run.seeds.is_some() {
            self.run.seeds = Some((seed..seed + n).collect());
        }
    }

    /// One-line JSON of the resolved configuration.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
