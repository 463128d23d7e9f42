use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_exponential_decay, sample_stderr};
use super::measure::{basis_distribution, parity_expectation, product_pauli_vector, sample_frequencies};
use crate::error::{Error, Result};
use crate::noise::ReadoutModel;
use crate::quantum::{ptm_of_unitary, Pauli, PauliString, QuantumChannel, UnitaryMatrix};
use crate::rng::{derive_seed2, rng_from_seed};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CbConfig {
    pub depths: Vec<usize>,
    pub samples_per_depth: usize,
    /// Shots per sequence; `None` uses exact expectations.
    pub shots: Option<u64>,
    pub seed: u64,
}

impl Default for CbConfig {
    fn default() -> Self {
        Self {
            depths: vec![2, 4, 16, 32],
            samples_per_depth: 30,
            shots: None,
            seed: 0,
        }
    }
}

impl CbConfig {
    pub fn validate(&self) -> Result<()> {
        let mut distinct = self.depths.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(Error::invalid("depths: need at least two distinct depths"));
        }
        if let Some(m) = self.depths.iter().find(|m| **m < 2 || **m % 2 != 0) {
            return Err(Error::invalid(format!("depths: {m} is not an even depth >= 2")));
        }
        if self.samples_per_depth == 0 {
            return Err(Error::invalid("samples_per_depth: must be >= 1"));
        }
        if self.shots == Some(0) {
            return Err(Error::invalid("shots: must be >= 1"));
        }
        Ok(())
    }
}

/// One benchmarked cycle expressed in the frame of its ideal gate: the cycle
/// noise is `R_gate R_ideal^T`, so the non-Clifford ideal gate never has to be
/// propagated through the twirl.
#[derive(Clone, Debug)]
pub struct CbCycle {
    gate_noise: DMatrix<f64>,
    ideal: DMatrix<f64>,
    twirl_noise: Option<DMatrix<f64>>,
    readout: Option<ReadoutModel>,
}

impl CbCycle {
    pub fn new(gate: &QuantumChannel, ideal: &UnitaryMatrix) -> Result<Self> {
        if gate.n_qubits() != 3 || ideal.n_qubits() != 3 {
            return Err(Error::InvalidDimension(gate.hilbert_dim()));
        }
        let r_ideal = ptm_of_unitary(ideal).ptm().clone();
        Ok(Self {
            gate_noise: gate.ptm() * r_ideal.transpose(),
            ideal: r_ideal,
            twirl_noise: None,
            readout: None,
        })
    }

    /// Noise of each random Pauli layer, acting before the gate.
    pub fn with_twirl_noise(mut self, noise: &QuantumChannel) -> Result<Self> {
        if noise.n_qubits() != 3 {
            return Err(Error::InvalidDimension(noise.hilbert_dim()));
        }
        self.twirl_noise = Some(noise.ptm().clone());
        Ok(self)
    }

    pub fn with_readout(mut self, readout: ReadoutModel) -> Self {
        self.readout = Some(readout);
        self
    }

    fn cycle_noise(&self, include_gate: bool) -> DMatrix<f64> {
        match (include_gate, &self.twirl_noise) {
            (true, None) => self.gate_noise.clone(),
            (true, Some(t)) => &self.gate_noise * (&self.ideal * t * self.ideal.transpose()),
            (false, None) => DMatrix::identity(64, 64),
            (false, Some(t)) => t.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbChannel {
    pub pauli: String,
    /// Mean expectation per configured depth.
    pub means: Vec<f64>,
    pub amplitude: f64,
    pub p: f64,
    /// Fit standard error of `p`.
    pub stderr: f64,
    /// Standard error of `p` propagated from sample-to-sample spread.
    pub sample_stderr: f64,
    /// Fit failed; excluded from the aggregate.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbResult {
    pub depths: Vec<usize>,
    pub channels: Vec<CbChannel>,
    /// Mean Pauli fidelity over the unflagged channels.
    pub aggregate: f64,
    pub stderr: f64,
    pub sample_stderr: f64,
    pub flagged: usize,
}

impl CbResult {
    /// Result holding given Pauli fidelities with zero uncertainty.
    pub fn from_fidelities(p: &[f64]) -> Result<Self> {
        if p.len() != 64 {
            return Err(Error::DimensionMismatch(p.len(), 64));
        }
        let channels = p
            .iter()
            .enumerate()
            .map(|(k, p)| CbChannel {
                pauli: PauliString::from_index(k).label(),
                means: Vec::new(),
                amplitude: 1.0,
                p: *p,
                stderr: 0.0,
                sample_stderr: 0.0,
                flagged: false,
            })
            .collect();
        Ok(Self::aggregate(Vec::new(), channels))
    }

    fn aggregate(depths: Vec<usize>, channels: Vec<CbChannel>) -> Self {
        let good: Vec<&CbChannel> = channels.iter().filter(|c| !c.flagged).collect();
        let n = good.len() as f64;
        let aggregate = good.iter().map(|c| c.p).sum::<f64>() / n;
        let stderr = good.iter().map(|c| c.stderr.powi(2)).sum::<f64>().sqrt() / n;
        let sample_stderr = good.iter().map(|c| c.sample_stderr.powi(2)).sum::<f64>().sqrt() / n;
        let flagged = channels.len() - good.len();
        Self {
            depths,
            channels,
            aggregate,
            stderr,
            sample_stderr,
            flagged,
        }
    }
}

/// Ratio estimate with fit and sample uncertainties.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbEstimate {
    pub fidelity: f64,
    pub stderr: f64,
    pub sample_stderr: f64,
}

fn commutation_signs() -> Vec<DVector<f64>> {
    let all: Vec<PauliString> = PauliString::all().collect();
    all.iter()
        .map(|q| DVector::from_iterator(64, all.iter().map(|p| if p.commutes_with(q) { 1.0 } else { -1.0 })))
        .collect()
}

fn initial_state(k: &PauliString) -> DVector<f64> {
    let bloch = k.0.map(|p| match p {
        Pauli::X => [1.0, 1.0, 0.0, 0.0],
        Pauli::Y => [1.0, 0.0, 1.0, 0.0],
        _ => [1.0, 0.0, 0.0, 1.0],
    });
    product_pauli_vector(&bloch)
}

/// Runs cycle benchmarking on all 64 Pauli channels. With `include_gate`
/// false only the twirl layers are benchmarked (the reference).
pub fn cb_run(cycle: &CbCycle, config: &CbConfig, include_gate: bool) -> Result<CbResult> {
    config.validate()?;
    let noise = cycle.cycle_noise(include_gate);
    let signs = commutation_signs();
    let stream = if include_gate { 1 } else { 2 };
    let channels: Vec<CbChannel> = (0..64usize)
        .into_par_iter()
        .map(|k| run_channel(cycle, config, &noise, &signs, k, derive_seed2(config.seed, stream, k as u64)))
        .collect::<Result<_>>()?;
    let flagged = channels.iter().filter(|c| c.flagged).count();
    if flagged > 0 {
        log::warn!("{flagged} CB channels failed to fit and were excluded");
    }
    Ok(CbResult::aggregate(config.depths.clone(), channels))
}

fn run_channel(
    cycle: &CbCycle,
    config: &CbConfig,
    noise: &DMatrix<f64>,
    signs: &[DVector<f64>],
    k: usize,
    seed: u64,
) -> Result<CbChannel> {
    let pauli = PauliString::from_index(k);
    let labels = pauli.0.map(|p| if p == Pauli::I { Pauli::Z } else { p });
    let mask = (0..3).filter(|q| pauli.0[*q] != Pauli::I).fold(0usize, |m, q| m | (4 >> q));
    let start = initial_state(&pauli);
    let mut means = Vec::with_capacity(config.depths.len());
    let mut sems = Vec::with_capacity(config.depths.len());
    for (di, &m) in config.depths.iter().enumerate() {
        let mut values = Vec::with_capacity(config.samples_per_depth);
        for s in 0..config.samples_per_depth {
            let mut rng = rng_from_seed(derive_seed2(seed, di as u64, s as u64));
            let mut v = start.clone();
            for _ in 0..m {
                let d = &signs[rng.random_range(0..64)];
                v.component_mul_assign(d);
                v = noise * v;
                v.component_mul_assign(d);
            }
            let mut p = basis_distribution(&v, &labels);
            // The final random frame flips outcome bits before readout.
            let flip: usize = rng.random_range(0..8);
            if let Some(r) = &cycle.readout {
                let flipped: Vec<f64> = (0..8).map(|o| p[o ^ flip]).collect();
                p = r.apply(&flipped);
            }
            let freq = sample_frequencies(&p, config.shots, &mut rng);
            let freq: Vec<f64> = match &cycle.readout {
                Some(_) => (0..8).map(|o| freq[o ^ flip]).collect(),
                None => freq,
            };
            values.push(parity_expectation(&freq, mask));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        means.push(mean);
        sems.push((var / n).sqrt());
    }
    let points: Vec<(f64, f64)> = config.depths.iter().map(|m| *m as f64).zip(means.iter().copied()).collect();
    let label = pauli.label();
    Ok(match fit_exponential_decay(&points) {
        Ok(fit) => CbChannel {
            pauli: label,
            sample_stderr: sample_stderr(&points, &sems, fit.p),
            means,
            amplitude: fit.amplitude,
            p: fit.p,
            stderr: fit.stderr,
            flagged: false,
        },
        Err(_) => CbChannel {
            pauli: label,
            means,
            amplitude: f64::NAN,
            p: f64::NAN,
            stderr: f64::NAN,
            sample_stderr: f64::NAN,
            flagged: true,
        },
    })
}

/// Mean of `p_k(itof) / p_k(ref)` over channels unflagged in both runs.
pub fn cb_process_fidelity(itof: &CbResult, reference: &CbResult) -> Result<CbEstimate> {
    if itof.channels.len() != reference.channels.len() {
        return Err(Error::DimensionMismatch(itof.channels.len(), reference.channels.len()));
    }
    let (mut sum, mut var, mut svar, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (a, b) in itof.channels.iter().zip(&reference.channels) {
        if a.pauli != b.pauli {
            return Err(Error::invalid(format!("channel mismatch {} vs {}", a.pauli, b.pauli)));
        }
        if a.flagged || b.flagged {
            continue;
        }
        if b.p == 0.0 {
            return Err(Error::ZeroReference(b.pauli.clone()));
        }
        let r = a.p / b.p;
        sum += r;
        var += r * r * ((a.stderr / a.p).powi(2) + (b.stderr / b.p).powi(2));
        svar += r * r * ((a.sample_stderr / a.p).powi(2) + (b.sample_stderr / b.p).powi(2));
        n += 1;
    }
    if n == 0 {
        return Err(Error::FitFailed("no channel fitted in both runs".into()));
    }
    let nf = n as f64;
    Ok(CbEstimate {
        fidelity: sum / nf,
        stderr: var.sqrt() / nf,
        sample_stderr: svar.sqrt() / nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::ideal_itoffoli;
    use crate::quantum::ptm_process_fidelity;

    fn quick() -> CbConfig {
        CbConfig {
            depths: vec![2, 4, 8],
            samples_per_depth: 4,
            shots: None,
            seed: 3,
        }
    }

    #[test]
    fn noiseless_gate_is_perfect() {
        let u = ideal_itoffoli();
        let cycle = CbCycle::new(&ptm_of_unitary(&u), &u).unwrap();
        let r = cb_run(&cycle, &quick(), true).unwrap();
        assert!((r.aggregate - 1.0).abs() < 1e-12);
        assert!(r.channels.iter().all(|c| (c.p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn depolarized_gate_matches_process_fidelity() {
        let u = ideal_itoffoli();
        let ch = ptm_of_unitary(&u).then(&QuantumChannel::depolarizing(3, 0.02)).unwrap();
        let cycle = CbCycle::new(&ch, &u).unwrap();
        let r = cb_run(&cycle, &quick(), true).unwrap();
        let exact = ptm_process_fidelity(&ptm_of_unitary(&u), &ch).unwrap();
        assert!((r.aggregate - exact).abs() < 1e-9);
    }

    #[test]
    fn reference_ratio_identities() {
        let ref_ones = CbResult::from_fidelities(&[1.0; 64]).unwrap();
        let it = CbResult::from_fidelities(&[0.97; 64]).unwrap();
        assert!((cb_process_fidelity(&it, &ref_ones).unwrap().fidelity - it.aggregate).abs() < 1e-15);
        assert!((cb_process_fidelity(&it, &it).unwrap().fidelity - 1.0).abs() < 1e-15);
        let mut zero = [1.0; 64];
        zero[5] = 0.0;
        let z = CbResult::from_fidelities(&zero).unwrap();
        assert!(matches!(cb_process_fidelity(&it, &z), Err(Error::ZeroReference(_))));
    }

    #[test]
    fn rejects_odd_depths() {
        let cfg = CbConfig {
            depths: vec![2, 3],
            ..CbConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn shots_are_deterministic() {
        let u = ideal_itoffoli();
        let ch = ptm_of_unitary(&u).then(&QuantumChannel::depolarizing(3, 0.02)).unwrap();
        let cycle = CbCycle::new(&ch, &u).unwrap();
        let cfg = CbConfig {
            shots: Some(200),
            ..quick()
        };
        assert_eq!(cb_run(&cycle, &cfg, true).unwrap(), cb_run(&cycle, &cfg, true).unwrap());
    }
}
