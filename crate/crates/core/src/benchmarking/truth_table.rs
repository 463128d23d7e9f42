use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::ReadoutModel;
use crate::quantum::{populations_from_pauli, DensityMatrix, QuantumChannel, UnitaryMatrix};
use crate::rng::{derive_seed, rng_from_seed};

use super::measure::sample_frequencies;

/// Output populations (rows) per computational input (columns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    pub probabilities: DMatrix<f64>,
}

impl TruthTable {
    pub fn new(probabilities: DMatrix<f64>) -> Result<Self> {
        if probabilities.shape() != (8, 8) {
            return Err(Error::DimensionMismatch(probabilities.nrows(), 8));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < -1e-12) {
            return Err(Error::invalid("truth table entries must be nonnegative"));
        }
        for j in 0..8 {
            let s: f64 = probabilities.column(j).sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("column {j} sums to {s}")));
            }
        }
        Ok(Self { probabilities })
    }

    /// `|<i|U|j>|^2` of a unitary.
    pub fn from_unitary(u: &UnitaryMatrix) -> Self {
        Self {
            probabilities: u.matrix().map(|z| z.norm_sqr()),
        }
    }

    /// `P(i|j)`.
    pub fn get(&self, output: usize, input: usize) -> f64 {
        self.probabilities[(output, input)]
    }
}

/// Truth table of `channel`. With a readout model the outcome distribution is
/// passed through the assignment errors, optionally sampled, then corrected.
pub fn truth_table(
    channel: &QuantumChannel,
    shots: Option<u64>,
    readout: Option<&ReadoutModel>,
    seed: u64,
) -> Result<TruthTable> {
    if channel.n_qubits() != 3 {
        return Err(Error::InvalidDimension(channel.hilbert_dim()));
    }
    let mut probs = DMatrix::zeros(8, 8);
    for j in 0..8 {
        let out = channel.apply(&DensityMatrix::basis(3, j).pauli_expectations());
        let mut p: Vec<f64> = populations_from_pauli(3, &out).into_iter().map(|x| x.max(0.0)).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        if let Some(r) = readout {
            p = r.apply(&p);
        }
        let mut rng = rng_from_seed(derive_seed(seed, j as u64));
        let mut freq = sample_frequencies(&p, shots, &mut rng);
        if let Some(r) = readout {
            freq = r.correct(&freq)?;
        }
        for (i, f) in freq.iter().enumerate() {
            probs[(i, j)] = *f;
        }
    }
    TruthTable::new(probs)
}

/// `F(|U_exp|, |U_ideal|)` with `|U|_ij = sqrt(P(i|j))`: `(Σ sqrt(P_exp P_ideal) / 8)^2`.
pub fn truth_table_fidelity_against(table: &TruthTable, ideal: &TruthTable) -> f64 {
    let overlap: f64 = table
        .probabilities
        .iter()
        .zip(ideal.probabilities.iter())
        .map(|(a, b)| (a * b).sqrt())
        .sum();
    (overlap / 8.0).powi(2)
}

/// Truth-table fidelity against the ideal iToffoli table.
pub fn truth_table_fidelity(table: &TruthTable) -> f64 {
    truth_table_fidelity_against(table, &TruthTable::from_unitary(&crate::drive::ideal_itoffoli()))
}
