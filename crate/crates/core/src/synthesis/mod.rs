//! Circuit synthesis: how many layers of a fixed three-qubit gate, interleaved
//! with arbitrary single-qubit rotations, are needed to hit a target unitary.

mod ansatz;
mod clifford;
mod optimize;
mod sweep;
mod threshold;

pub use ansatz::{ansatz_unitary, euler_su2, param_count, AnsatzCircuit, PARAMS_PER_LAYER};
pub use clifford::{sample_clifford3, CliffordTableau};
pub use optimize::{synthesize, synthesize_from, SynthesisResult, SynthesisSettings};
pub use sweep::{delta_gate, itoffoli_delta_ratio, itoffoli_tau_eff, sweep_delta, SweepPoint, SweepSettings};
pub use threshold::{threshold_depth, DepthRate, TargetKind, ThresholdResult, ThresholdSettings};
