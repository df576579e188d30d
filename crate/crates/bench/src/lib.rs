//! Fixtures shared by the criterion benches.

use wmpa_core::{ProtocolConfig, Result};

/// The three magnifications of the small-signal sweep, as selection ratios.
pub const RATIOS: [f64; 3] = [-2.0 / 3.0, -0.8, -0.9];

pub fn config(r: f64, theta: f64) -> Result<ProtocolConfig> {
    ProtocolConfig::from_ratio(r, theta)
}
