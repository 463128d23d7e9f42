use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clifford::sample_clifford3;
use super::optimize::{synthesize_from, SynthesisSettings};
use crate::error::{Error, Result};
use crate::quantum::{random_haar_unitary, UnitaryMatrix};
use crate::rng::{derive_seed, derive_seed2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Clifford,
    Haar,
}

impl TargetKind {
    pub fn label(self) -> &'static str {
        match self {
            TargetKind::Clifford => "clifford",
            TargetKind::Haar => "haar",
        }
    }

    /// Target `index` of the ensemble drawn from `seed`.
    pub fn target(self, seed: u64, index: usize) -> Result<UnitaryMatrix> {
        let s = derive_seed(seed, index as u64);
        match self {
            TargetKind::Clifford => Ok(sample_clifford3(s)),
            TargetKind::Haar => random_haar_unitary(8, s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdSettings {
    pub n_targets: usize,
    pub m_start: usize,
    pub m_max: usize,
    /// Extra rounds of fresh restarts for targets that fail at a depth whose
    /// success rate dropped below the previous one.
    pub reseed_rounds: usize,
    /// Stop at the first depth with full success.
    pub stop_at_threshold: bool,
    pub synthesis: SynthesisSettings,
}

impl Default for ThresholdSettings {
    fn default() -> Self {
        Self {
            n_targets: 50,
            m_start: 1,
            m_max: 12,
            reseed_rounds: 1,
            stop_at_threshold: true,
            synthesis: SynthesisSettings::default(),
        }
    }
}

impl ThresholdSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_targets == 0 {
            return Err(Error::invalid("n_targets: must be >= 1"));
        }
        if self.m_start == 0 {
            return Err(Error::invalid("m_start: must be >= 1"));
        }
        if self.m_max < self.m_start {
            return Err(Error::invalid("m_max: must be >= m_start"));
        }
        self.synthesis.validate()
    }
}

/// Success rate at one depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRate {
    pub depth: usize,
    pub successes: usize,
    pub n_targets: usize,
    pub rate: f64,
    /// Largest best infidelity among the targets.
    pub worst_infidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub kind: TargetKind,
    /// Least depth with 100% success, if reached by `m_max`.
    pub threshold: Option<usize>,
    pub curve: Vec<DepthRate>,
    /// Success rate still decreased with depth after re-seeding.
    pub non_monotone: bool,
}

impl ThresholdResult {
    pub fn rate_at(&self, depth: usize) -> Option<f64> {
        self.curve.iter().find(|r| r.depth == depth).map(|r| r.rate)
    }
}

fn run_depth(
    gate: &UnitaryMatrix,
    targets: &[UnitaryMatrix],
    depth: usize,
    settings: &SynthesisSettings,
    seed: u64,
    first_restart: usize,
    which: &[usize],
) -> Result<Vec<(usize, f64)>> {
    which
        .par_iter()
        .map(|&i| {
            let s = derive_seed2(seed, i as u64, depth as u64);
            synthesize_from(&targets[i], gate, depth, settings, s, first_restart).map(|r| (i, r.best_infidelity))
        })
        .collect()
}

/// Least depth at which every target of the ensemble is synthesized, with the
/// success-rate curve from `m_start` up.
pub fn threshold_depth(
    gate: &UnitaryMatrix,
    kind: TargetKind,
    settings: &ThresholdSettings,
    seed: u64,
) -> Result<ThresholdResult> {
    settings.validate()?;
    if gate.dim() != 8 {
        return Err(Error::InvalidDimension(gate.dim()));
    }
    let targets = (0..settings.n_targets)
        .map(|i| kind.target(seed, i))
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<usize> = (0..settings.n_targets).collect();
    let syn = &settings.synthesis;
    let mut curve: Vec<DepthRate> = Vec::new();
    let mut non_monotone = false;
    let mut threshold = None;
    for depth in settings.m_start..=settings.m_max {
        let mut best = vec![f64::INFINITY; settings.n_targets];
        for (i, f) in run_depth(gate, &targets, depth, syn, seed, 0, &all)? {
            best[i] = f;
        }
        let count = |b: &[f64]| b.iter().filter(|f| **f < syn.threshold).count();
        let prev = curve.last().map(|r| r.successes).unwrap_or(0);
        let mut round = 0;
        while count(&best) < prev && round < settings.reseed_rounds {
            round += 1;
            let failing: Vec<usize> = all.iter().copied().filter(|i| best[*i] >= syn.threshold).collect();
            for (i, f) in run_depth(gate, &targets, depth, syn, seed, round * syn.restarts, &failing)? {
                best[i] = best[i].min(f);
            }
        }
        let successes = count(&best);
        if successes < prev {
            non_monotone = true;
        }
        let rate = successes as f64 / settings.n_targets as f64;
        log::info!("{} m={depth}: {successes}/{} succeeded", kind.label(), settings.n_targets);
        curve.push(DepthRate {
            depth,
            successes,
            n_targets: settings.n_targets,
            rate,
            worst_infidelity: best.iter().copied().fold(0.0, f64::max),
        });
        if successes == settings.n_targets {
            threshold.get_or_insert(depth);
            if settings.stop_at_threshold {
                break;
            }
        }
    }
    Ok(ThresholdResult {
        kind,
        threshold,
        curve,
        non_monotone,
    })
}
