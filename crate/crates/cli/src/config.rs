//! Run configuration: one JSON document with a block per pipeline. Every
//! field has a default, so `{}` reproduces the reference device scenario.

use std::path::{Path, PathBuf};

use itoffoli::benchmarking::CbConfig;
use itoffoli::calibration::{amplitude_for_duration, CalibrationSettings, REFERENCE_GATE_DURATION};
use itoffoli::noise::DeviceNoiseModel;
use itoffoli::synthesis::{SweepSettings, ThresholdSettings};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub device: DeviceNoiseModel,
    pub pulse: PulseConfig,
    pub calibration: CalibrationSettings,
    pub simulation: SimulationConfig,
    pub rabi: RabiConfig,
    pub cb: CbSection,
    pub truth_table: TruthTableConfig,
    pub ptm: PtmConfig,
    pub error_budget: ErrorBudgetConfig,
    pub synthesis: SynthesisConfig,
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    /// Control-1 drive amplitude in rad/ns. Absent: the amplitude whose
    /// calibrated effective duration is `gate_duration_ns`.
    pub a_c1: Option<f64>,
    pub gate_duration_ns: f64,
    pub phi_c1: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            a_c1: None,
            gate_duration_ns: REFERENCE_GATE_DURATION,
            phi_c1: 0.0,
        }
    }
}

impl PulseConfig {
    pub fn amplitude(&self) -> CliResult<f64> {
        match self.a_c1 {
            Some(a) => Ok(a),
            None => amplitude_for_duration(self.gate_duration_ns)
                .map_err(|e| CliError::config("pulse.gate_duration_ns", e.to_string())),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub seed: u64,
    /// Calibrate against the ideal device (no ZZ, no decoherence, perfect
    /// readout) even when the device block carries noise.
    pub noiseless_calibration: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiConfig {
    pub points: usize,
    /// Oscillation periods of `Ω^{oth}` spanned by the duration grid.
    pub periods: f64,
    pub shots: Option<u64>,
}

impl Default for RabiConfig {
    fn default() -> Self {
        Self {
            points: 64,
            periods: 2.0,
            shots: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CbSection {
    pub depths: Vec<usize>,
    pub samples_per_depth: usize,
    pub shots: Option<u64>,
    /// Duration of each single-qubit twirl layer; sets its decoherence.
    pub twirl_gate_ns: f64,
    pub readout: bool,
}

impl Default for CbSection {
    fn default() -> Self {
        let c = CbConfig::default();
        Self {
            depths: c.depths,
            samples_per_depth: c.samples_per_depth,
            shots: c.shots,
            twirl_gate_ns: 30.0,
            readout: false,
        }
    }
}

impl CbSection {
    pub fn to_config(&self, seed: u64) -> CbConfig {
        CbConfig {
            depths: self.depths.clone(),
            samples_per_depth: self.samples_per_depth,
            shots: self.shots,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruthTableConfig {
    pub shots: Option<u64>,
    pub readout: bool,
    /// Monte-Carlo reruns for the uncertainty; needs `shots`.
    pub mc_runs: usize,
}

impl Default for TruthTableConfig {
    fn default() -> Self {
        Self {
            shots: Some(4096),
            readout: true,
            mc_runs: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PtmConfig {
    pub shots: Option<u64>,
    pub readout: bool,
    pub mc_runs: usize,
}

impl Default for PtmConfig {
    fn default() -> Self {
        Self {
            shots: Some(4096),
            readout: true,
            mc_runs: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorBudgetConfig {
    pub tau_grid_ns: Vec<f64>,
}

impl Default for ErrorBudgetConfig {
    fn default() -> Self {
        Self {
            tau_grid_ns: vec![482.0, 353.0, 280.0, 243.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateChoice {
    Itoffoli,
    Toffoli,
}

impl GateChoice {
    pub fn label(self) -> &'static str {
        match self {
            GateChoice::Itoffoli => "itoffoli",
            GateChoice::Toffoli => "toffoli",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeltaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for DeltaGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 3.0,
            step: 0.25,
        }
    }
}

impl DeltaGrid {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + self.step * i as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisConfig {
    pub gates: Vec<GateChoice>,
    pub clifford: ThresholdSettings,
    pub haar: ThresholdSettings,
    pub delta_grid: DeltaGrid,
    pub sweep: SweepSettings,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            gates: vec![GateChoice::Itoffoli, GateChoice::Toffoli],
            clifford: ThresholdSettings::default(),
            haar: ThresholdSettings::default(),
            delta_grid: DeltaGrid::default(),
            sweep: SweepSettings::default(),
        }
    }
}

/// Maps a core validation error onto a field path below `prefix`. Core
/// messages name the offending field before the first colon.
fn scoped(prefix: &str, err: itoffoli::Error) -> CliError {
    match err {
        itoffoli::Error::InvalidInput(msg) => match msg.split_once(": ") {
            Some((field, rest)) if !field.contains(' ') => CliError::config(format!("{prefix}.{field}"), rest),
            _ => CliError::config(prefix, msg),
        },
        other => CliError::config(prefix, other.to_string()),
    }
}

fn check(ok: bool, path: &str, msg: &str) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(path, msg))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(if path == "." { "<root>".into() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.device.validate().map_err(|e| scoped("device", e))?;
        if let Some(a) = self.pulse.a_c1 {
            check(a > 0.0 && a.is_finite(), "pulse.a_c1", "must be > 0")?;
        }
        check(
            self.pulse.gate_duration_ns > self.calibration.ramp,
            "pulse.gate_duration_ns",
            "must exceed the ramp length",
        )?;
        check(self.pulse.phi_c1.is_finite(), "pulse.phi_c1", "must be finite")?;
        self.calibration.validate().map_err(|e| scoped("calibration", e))?;
        check(self.rabi.points >= 8, "rabi.points", "must be >= 8")?;
        check(self.rabi.periods >= 1.0, "rabi.periods", "must be >= 1")?;
        check(self.rabi.shots != Some(0), "rabi.shots", "must be >= 1")?;
        self.cb.to_config(0).validate().map_err(|e| scoped("cb", e))?;
        check(self.cb.twirl_gate_ns >= 0.0, "cb.twirl_gate_ns", "must be >= 0")?;
        check(self.truth_table.shots != Some(0), "truth_table.shots", "must be >= 1")?;
        check(self.ptm.shots != Some(0), "ptm.shots", "must be >= 1")?;
        check(
            !self.error_budget.tau_grid_ns.is_empty(),
            "error_budget.tau_grid_ns",
            "must not be empty",
        )?;
        for (i, t) in self.error_budget.tau_grid_ns.iter().enumerate() {
            check(
                *t > self.calibration.ramp && t.is_finite(),
                &format!("error_budget.tau_grid_ns[{i}]"),
                "must exceed the ramp length",
            )?;
        }
        let s = &self.synthesis;
        check(!s.gates.is_empty(), "synthesis.gates", "must not be empty")?;
        s.clifford.validate().map_err(|e| scoped("synthesis.clifford", e))?;
        s.haar.validate().map_err(|e| scoped("synthesis.haar", e))?;
        s.sweep.clifford.validate().map_err(|e| scoped("synthesis.sweep.clifford", e))?;
        s.sweep.haar.validate().map_err(|e| scoped("synthesis.sweep.haar", e))?;
        let g = &s.delta_grid;
        check(g.start >= 0.0, "synthesis.delta_grid.start", "must be >= 0")?;
        check(g.step > 0.0, "synthesis.delta_grid.step", "must be > 0")?;
        check(g.stop >= g.start, "synthesis.delta_grid.stop", "must be >= start")?;
        Ok(())
    }

    /// Noise used while calibrating.
    pub fn calibration_noise(&self) -> Option<&DeviceNoiseModel> {
        (!self.simulation.noiseless_calibration).then_some(&self.device)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn defaults_round_trip() {
        let text = serde_json::to_string(&RunConfig::default()).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_field_reports_its_path() {
        let err = RunConfig::from_json(r#"{"cb": {"depth": [2, 4]}}"#).unwrap_err();
        match err {
            CliError::Config { path, .. } => assert_eq!(path, "cb.depth"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn type_error_reports_nested_path() {
        let err = RunConfig::from_json(r#"{"synthesis": {"clifford": {"n_targets": "many"}}}"#).unwrap_err();
        match err {
            CliError::Config { path, .. } => assert_eq!(path, "synthesis.clifford.n_targets"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn invalid_values_report_field_paths() {
        let mut cfg = RunConfig::default();
        cfg.device.qubits[1].t2_echo_us = 500.0;
        match cfg.validate().unwrap_err() {
            CliError::Config { path, .. } => assert_eq!(path, "device.qubits[1].t2_echo_us"),
            e => panic!("{e}"),
        }
        let mut cfg = RunConfig::default();
        cfg.cb.depths = vec![2, 3, 4];
        match cfg.validate().unwrap_err() {
            CliError::Config { path, .. } => assert_eq!(path, "cb.depths"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn delta_grid_includes_endpoints() {
        let v = DeltaGrid::default().values();
        assert_eq!(v.len(), 13);
        assert_eq!(v[0], 0.0);
        assert!((v[12] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn default_amplitude_targets_reference_duration() {
        let a = PulseConfig::default().amplitude().unwrap();
        assert!((a - amplitude_for_duration(353.0).unwrap()).abs() < 1e-15);
    }
}
