use nalgebra::DVector;

use crate::quantum::Pauli;
use crate::rng::{sample_multinomial, Rng};

/// Pauli index with `labels[q]` on the qubits of `mask` and identity elsewhere
/// (qubit 0 is the most significant bit of the mask).
pub(crate) fn masked_index(labels: &[Pauli; 3], mask: usize) -> usize {
    (0..3)
        .filter(|q| mask & (4 >> q) != 0)
        .map(|q| labels[q].index() << (2 * (2 - q)))
        .sum()
}

/// Outcome distribution when measuring qubit `q` in the eigenbasis of
/// `labels[q]` (X, Y or Z). Outcome bit 1 is the -1 eigenvalue.
pub(crate) fn basis_distribution(v: &DVector<f64>, labels: &[Pauli; 3]) -> Vec<f64> {
    let mut p = vec![0.0; 8];
    for mask in 0..8usize {
        let e = v[masked_index(labels, mask)];
        for (s, ps) in p.iter_mut().enumerate() {
            let sign = if (s & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            *ps += sign * e;
        }
    }
    p.iter().map(|x| (x / 8.0).max(0.0)).collect()
}

/// `<Π_{q∈mask} s_q>` of an outcome distribution.
pub(crate) fn parity_expectation(p: &[f64], mask: usize) -> f64 {
    p.iter()
        .enumerate()
        .map(|(s, ps)| if (s & mask).count_ones() % 2 == 0 { *ps } else { -*ps })
        .sum()
}

/// Empirical frequencies of `shots` draws, or `p` itself when `shots` is `None`.
pub(crate) fn sample_frequencies(p: &[f64], shots: Option<u64>, rng: &mut Rng) -> Vec<f64> {
    match shots {
        None => p.to_vec(),
        Some(n) => sample_multinomial(rng, n, p)
            .into_iter()
            .map(|c| c as f64 / n as f64)
            .collect(),
    }
}

/// Pauli vector `Tr[P_i ρ]` of a product state given per-qubit Bloch vectors
/// `(1, x, y, z)`.
pub(crate) fn product_pauli_vector(bloch: &[[f64; 4]; 3]) -> DVector<f64> {
    DVector::from_fn(64, |i, _| {
        bloch[0][(i >> 4) & 3] * bloch[1][(i >> 2) & 3] * bloch[2][i & 3]
    })
}
