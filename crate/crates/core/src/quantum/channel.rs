use nalgebra::{DMatrix, DVector};

use super::pauli::SparsePauli;
use super::{CMatrix, UnitaryMatrix, CHANNEL_TOL};
use crate::error::{Error, Result};

/// Channel in the normalized Pauli-transfer representation,
/// `R_ij = Tr[P_i E(P_j)] / d`, Pauli basis in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumChannel {
    n_qubits: usize,
    ptm: DMatrix<f64>,
}

fn pauli_basis(n: usize) -> Vec<SparsePauli> {
    (0..1usize << (2 * n))
        .map(|i| SparsePauli::from_index(n, i))
        .collect()
}

impl QuantumChannel {
    pub fn new(ptm: DMatrix<f64>) -> Result<Self> {
        let dim = ptm.nrows();
        if ptm.ncols() != dim {
            return Err(Error::NotSquare {
                rows: dim,
                cols: ptm.ncols(),
            });
        }
        let n_qubits = match dim {
            4 => 1,
            16 => 2,
            64 => 3,
            _ => return Err(Error::InvalidDimension(dim)),
        };
        Ok(Self { n_qubits, ptm })
    }

    pub fn identity(n_qubits: usize) -> Self {
        let dim = 1 << (2 * n_qubits);
        Self {
            n_qubits,
            ptm: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_unitary(u: &UnitaryMatrix) -> Self {
        ptm_of_unitary(u)
    }

    /// Global depolarizing channel `rho -> (1 - lambda) rho + lambda I/d`.
    pub fn depolarizing(n_qubits: usize, lambda: f64) -> Self {
        let mut ch = Self::identity(n_qubits);
        for k in 1..ch.ptm.nrows() {
            ch.ptm[(k, k)] = 1.0 - lambda;
        }
        ch
    }

    /// Stochastic Pauli channel with probabilities indexed like the Pauli basis.
    pub fn pauli_channel(n_qubits: usize, probs: &[f64]) -> Result<Self> {
        let basis = pauli_basis(n_qubits);
        if probs.len() != basis.len() {
            return Err(Error::DimensionMismatch(probs.len(), basis.len()));
        }
        if probs.iter().any(|p| *p < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > CHANNEL_TOL {
            return Err(Error::invalid("Pauli probabilities must be a distribution"));
        }
        let mut ch = Self::identity(n_qubits);
        for (j, pj) in basis.iter().enumerate() {
            ch.ptm[(j, j)] = basis
                .iter()
                .zip(probs)
                .map(|(pk, w)| if pj.commutes_with(pk) { *w } else { -*w })
                .sum();
        }
        Ok(ch)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Hilbert-space dimension `d`.
    pub fn hilbert_dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn ptm(&self) -> &DMatrix<f64> {
        &self.ptm
    }

    /// `next ∘ self`: apply `self` first.
    pub fn then(&self, next: &QuantumChannel) -> Result<Self> {
        if self.n_qubits != next.n_qubits {
            return Err(Error::DimensionMismatch(self.ptm.nrows(), next.ptm.nrows()));
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            ptm: &next.ptm * &self.ptm,
        })
    }

    /// Tensor product, leftmost channel acting on qubit 0.
    pub fn tensor(channels: &[QuantumChannel]) -> Result<Self> {
        let (first, rest) = channels.split_first().ok_or(Error::NoFactors)?;
        let mut out = first.clone();
        for ch in rest {
            out = Self {
                n_qubits: out.n_qubits + ch.n_qubits,
                ptm: out.ptm.kronecker(&ch.ptm),
            };
        }
        if out.n_qubits > 3 {
            return Err(Error::InvalidDimension(out.ptm.nrows()));
        }
        Ok(out)
    }

    /// Average of `P E(P . P) P` over every Pauli frame.
    pub fn pauli_twirl(&self) -> Self {
        let basis = pauli_basis(self.n_qubits);
        let dim = basis.len();
        let mut acc = DMatrix::zeros(dim, dim);
        for q in &basis {
            let signs: Vec<f64> = basis
                .iter()
                .map(|p| if p.commutes_with(q) { 1.0 } else { -1.0 })
                .collect();
            for i in 0..dim {
                for j in 0..dim {
                    acc[(i, j)] += signs[i] * self.ptm[(i, j)] * signs[j];
                }
            }
        }
        Self {
            n_qubits: self.n_qubits,
            ptm: acc / dim as f64,
        }
    }

    pub fn trace_preservation_error(&self) -> f64 {
        let row = self.ptm.row(0);
        (row[0] - 1.0)
            .abs()
            .max(row.iter().skip(1).fold(0.0, |a, v| a.max(v.abs())))
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preservation_error() <= CHANNEL_TOL
    }

    /// Unnormalized Choi matrix `J = (1/d) sum_ij R_ij P_j^T ⊗ P_i` (trace `d`).
    /// The map `R -> J` is an isometry in the Frobenius norm.
    pub fn choi(&self) -> CMatrix {
        choi_from_ptm(self.n_qubits, &self.ptm)
    }

    pub fn from_choi(n_qubits: usize, j: &CMatrix) -> Result<Self> {
        let d = 1usize << n_qubits;
        if j.nrows() != d * d || j.ncols() != d * d {
            return Err(Error::DimensionMismatch(j.nrows(), d * d));
        }
        Self::new(ptm_from_choi(n_qubits, j))
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        super::hermitian_eigen(&self.choi())
            .0
            .iter()
            .fold(f64::INFINITY, |a, v| a.min(*v))
    }

    pub fn is_cptp(&self, tol: f64) -> bool {
        self.trace_preservation_error() <= tol && self.min_choi_eigenvalue() >= -tol
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        let dim = self.ptm.nrows();
        (self.ptm.transpose() * &self.ptm - DMatrix::<f64>::identity(dim, dim)).amax() <= tol
    }

    /// Applies the channel to a Pauli expectation vector `(Tr[P_i rho])_i`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.ptm * v
    }

    pub fn frobenius_distance(&self, other: &QuantumChannel) -> f64 {
        (&self.ptm - &other.ptm).norm()
    }
}

pub(crate) fn choi_from_ptm(n: usize, r: &DMatrix<f64>) -> CMatrix {
    let basis = pauli_basis(n);
    let d = 1usize << n;
    let mut j = CMatrix::zeros(d * d, d * d);
    for (bj, pj) in basis.iter().enumerate() {
        let pjt = pj.transpose();
        for (bi, pi) in basis.iter().enumerate() {
            let coeff = r[(bi, bj)] / d as f64;
            if coeff == 0.0 {
                continue;
            }
            let op = pjt.tensor(pi);
            for col in 0..d * d {
                let (row, v) = op.column(col);
                j[(row, col)] += v * coeff;
            }
        }
    }
    j
}

pub(crate) fn ptm_from_choi(n: usize, j: &CMatrix) -> DMatrix<f64> {
    let basis = pauli_basis(n);
    let d = 1usize << n;
    let dim = basis.len();
    let mut r = DMatrix::zeros(dim, dim);
    for (l, pl) in basis.iter().enumerate() {
        let plt = pl.transpose();
        for (k, pk) in basis.iter().enumerate() {
            r[(k, l)] = plt.tensor(pk).trace_with(j).re / d as f64;
        }
    }
    r
}

/// `R_ij = Tr[P_i U P_j U^dag] / d`.
pub fn ptm_of_unitary(u: &UnitaryMatrix) -> QuantumChannel {
    let n = u.n_qubits();
    let d = u.dim();
    let basis = pauli_basis(n);
    let dim = basis.len();
    let um = u.matrix();
    let udag = um.adjoint();
    let mut ptm = DMatrix::zeros(dim, dim);
    for (j, pj) in basis.iter().enumerate() {
        let m = pj.right_mul(um) * &udag;
        for (i, pi) in basis.iter().enumerate() {
            ptm[(i, j)] = pi.trace_with(&m).re / d as f64;
        }
    }
    QuantumChannel { n_qubits: n, ptm }
}

/// `Tr[R_ideal^T R_exp] / d^2`.
pub fn ptm_process_fidelity(ideal: &QuantumChannel, exp: &QuantumChannel) -> Result<f64> {
    if ideal.ptm.nrows() != exp.ptm.nrows() {
        return Err(Error::DimensionMismatch(ideal.ptm.nrows(), exp.ptm.nrows()));
    }
    let d2 = ideal.ptm.nrows() as f64;
    Ok(ideal.ptm.component_mul(&exp.ptm).sum() / d2)
}



#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{c, entanglement_fidelity, random_haar_unitary, sigma_x};
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn identity_and_x() {
        let id = ptm_of_unitary(&UnitaryMatrix::identity(8));
        assert!((id.ptm() - DMatrix::<f64>::identity(64, 64)).amax() < 1e-14);
        let x = ptm_of_unitary(&UnitaryMatrix::new(sigma_x()).unwrap());
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
        assert!((x.ptm() - expected).amax() < 1e-14);
    }

    #[test]
    fn fidelity_examples() {
        let u = random_haar_unitary(8, 1).unwrap();
        let r = ptm_of_unitary(&u);
        assert!((ptm_process_fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-12);
        let dep = QuantumChannel::depolarizing(3, 1.0);
        let f = ptm_process_fidelity(&QuantumChannel::identity(3), &dep).unwrap();
        assert!((f - 1.0 / 64.0).abs() < 1e-15);
        assert!(ptm_process_fidelity(&QuantumChannel::identity(1), &dep).is_err());
    }

    #[test]
    fn choi_round_trip_and_positivity() {
        let u = random_haar_unitary(8, 2).unwrap();
        let r = ptm_of_unitary(&u).then(&QuantumChannel::depolarizing(3, 0.1)).unwrap();
        let j = r.choi();
        assert!((j.trace() - c(8.0, 0.0)).norm() < 1e-10);
        let back = QuantumChannel::from_choi(3, &j).unwrap();
        assert!((back.ptm() - r.ptm()).amax() < 1e-12);
        assert!(r.is_cptp(1e-9));
        assert!(((j.norm()) - r.ptm().norm()).abs() < 1e-10);
        // A PTM with a flipped diagonal sign on a single Pauli is not CP.
        let mut bad = QuantumChannel::identity(1).ptm().clone();
        bad[(3, 3)] = -1.0;
        assert!(!QuantumChannel::new(bad).unwrap().is_cptp(1e-9));
    }

    #[test]
    fn twirl_diagonalizes() {
        let mut rng = rng_from_seed(8);
        let u = random_haar_unitary(8, 3).unwrap();
        let noisy = ptm_of_unitary(&u).then(&QuantumChannel::depolarizing(3, rng.random_range(0.0..0.2))).unwrap();
        let tw = noisy.pauli_twirl();
        let diag = DMatrix::from_diagonal(&noisy.ptm().diagonal());
        assert!((tw.ptm() - diag).amax() < 1e-9);
    }

    #[test]
    fn pauli_channel_matches_definition() {
        let mut probs = vec![0.0; 4];
        probs[0] = 0.9;
        probs[1] = 0.1;
        let ch = QuantumChannel::pauli_channel(1, &probs).unwrap();
        let diag: Vec<f64> = ch.ptm().diagonal().iter().copied().collect();
        let expected = [1.0, 1.0, 0.8, 0.8];
        for (a, b) in diag.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn ptm_homomorphism(s1 in 0u64..10_000, s2 in 0u64..10_000) {
            let u = random_haar_unitary(8, s1).unwrap();
            let v = random_haar_unitary(8, s2 + 20_000).unwrap();
            let lhs = ptm_of_unitary(&u.mul(&v));
            let rhs = ptm_of_unitary(&v).then(&ptm_of_unitary(&u)).unwrap();
            prop_assert!((lhs.ptm() - rhs.ptm()).amax() < 1e-9);
            prop_assert!(lhs.is_orthogonal(1e-9));
            prop_assert!(lhs.is_trace_preserving());
            prop_assert!(rhs.is_trace_preserving());
        }

        #[test]
        fn process_fidelity_equals_entanglement_fidelity(s1 in 0u64..10_000, s2 in 0u64..10_000) {
            let u = random_haar_unitary(8, s1).unwrap();
            let v = random_haar_unitary(8, s2 + 30_000).unwrap();
            let f1 = ptm_process_fidelity(&ptm_of_unitary(&u), &ptm_of_unitary(&v)).unwrap();
            let f2 = entanglement_fidelity(&v, &u).unwrap();
            prop_assert!((f1 - f2).abs() < 1e-10);
        }
    }
}
