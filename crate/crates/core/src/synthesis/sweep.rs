use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::threshold::{threshold_depth, TargetKind, ThresholdResult, ThresholdSettings};
use crate::drive::{drive_hamiltonian, DriveModel};
use crate::error::{Error, Result};
use crate::quantum::{expm_hermitian, UnitaryMatrix};
use crate::rng::derive_seed;

/// `δ/α` of the iToffoli operating point.
pub fn itoffoli_delta_ratio() -> f64 {
    (27.0f64 / 5.0).sqrt()
}

/// Square-pulse duration that closes the iToffoli: the off-`|00>` rotations
/// complete one full turn at `δ = √(27/5) α`.
pub fn itoffoli_tau_eff(alpha: f64) -> f64 {
    2.0 * PI / (alpha * (1.0 + 27.0 / 5.0f64).sqrt())
}

/// `exp(-i τ/2 (α Z_c1 X_t + α X_t Z_c2 + α X_t + δ Y_t))`.
pub fn delta_gate(alpha: f64, delta: f64, tau_eff: f64) -> Result<UnitaryMatrix> {
    if !(alpha.is_finite() && delta.is_finite() && tau_eff.is_finite()) {
        return Err(Error::invalid("delta gate parameters must be finite"));
    }
    let h = drive_hamiltonian(&DriveModel::new(alpha, alpha, alpha, delta));
    expm_hermitian(&h, 0.5 * tau_eff)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSettings {
    pub clifford: ThresholdSettings,
    pub haar: ThresholdSettings,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            clifford: ThresholdSettings {
                n_targets: 20,
                m_start: 1,
                m_max: 12,
                ..Default::default()
            },
            haar: ThresholdSettings {
                n_targets: 20,
                m_start: 7,
                m_max: 12,
                ..Default::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta_over_alpha: f64,
    pub m_cliff: Option<usize>,
    pub m_haar: Option<usize>,
    pub clifford: ThresholdResult,
    pub haar: ThresholdResult,
}

impl SweepPoint {
    /// Depth needed for arbitrary circuits: the larger of the two thresholds.
    pub fn combined(&self) -> Option<usize> {
        Some(self.m_cliff?.max(self.m_haar?))
    }
}

/// Threshold depths of `G(δ)` over a grid of `δ/α`, with `α` and `τ_eff`
/// held at the iToffoli values. Every grid point uses the same target
/// ensembles.
pub fn sweep_delta(
    delta_over_alpha: &[f64],
    alpha: f64,
    tau_eff: f64,
    settings: &SweepSettings,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if delta_over_alpha.is_empty() {
        return Err(Error::invalid("delta grid: must not be empty"));
    }
    settings.clifford.validate()?;
    settings.haar.validate()?;
    let (cliff_seed, haar_seed) = (derive_seed(seed, 0), derive_seed(seed, 1));
    delta_over_alpha
        .iter()
        .map(|&r| {
            let g = delta_gate(alpha, r * alpha, tau_eff)?;
            log::info!("delta/alpha = {r:.4}");
            let clifford = threshold_depth(&g, TargetKind::Clifford, &settings.clifford, cliff_seed)?;
            let haar = threshold_depth(&g, TargetKind::Haar, &settings.haar, haar_seed)?;
            Ok(SweepPoint {
                delta_over_alpha: r,
                m_cliff: clifford.threshold,
                m_haar: haar.threshold,
                clifford,
                haar,
            })
        })
        .collect()
}
