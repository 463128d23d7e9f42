//! Characterization protocols: truth table, cycle benchmarking, process
//! tomography and Monte-Carlo error bars.

mod cb;
mod fit;
mod measure;
mod montecarlo;
mod tomography;
mod truth_table;

pub use cb::{cb_process_fidelity, cb_run, CbChannel, CbConfig, CbCycle, CbEstimate, CbResult};
pub use fit::{fit_exponential_decay, DecayFit, P_MAX};
pub use montecarlo::{monte_carlo_uncertainty, MonteCarloSummary};
pub use tomography::{project_cptp, ptm_tomography, ptm_tomography_with, ProjectionSettings, TomographyResult, PREPARATIONS};
pub use truth_table::{truth_table, truth_table_fidelity, truth_table_fidelity_against, TruthTable};
