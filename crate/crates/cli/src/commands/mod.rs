use std::path::{Path, PathBuf};

use itoffoli::calibration::CalibratedGate;
use itoffoli::drive::ideal_itoffoli;
use itoffoli::noise::noisy_gate_channel;
use itoffoli::quantum::{ptm_of_unitary, QuantumChannel};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

mod benchmark;
mod budget;
mod calibrate;
mod rabi;
mod synthesize;

pub use benchmark::{benchmark, Protocol};
pub use budget::error_budget;
pub use calibrate::calibrate;
pub use rabi::{rabi, ControlArg};
pub use synthesize::{synthesize, SynthesisMode, TargetArg};

pub const GATE_ARTIFACT: &str = "calibrated_gate.json";

/// Resolved settings shared by every command.
pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl Context {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Loads the gate written by `calibrate`.
    pub fn calibrated_gate(&self) -> CliResult<CalibratedGate> {
        let path = self.path(GATE_ARTIFACT);
        if !path.is_file() {
            return Err(CliError::MissingArtifact {
                path,
                command: "itoffoli calibrate",
            });
        }
        read_json(&path)
    }

    /// Calibrated gate followed by decoherence over its duration, and the
    /// ideal channel it approximates.
    pub fn gate_channel(&self, gate: &CalibratedGate) -> CliResult<(QuantumChannel, QuantumChannel)> {
        let ch = noisy_gate_channel(&gate.unitary()?, &self.config.device, gate.tau, None)?;
        Ok((ch, ptm_of_unitary(&ideal_itoffoli())))
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
