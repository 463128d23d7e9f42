use nalgebra::DVector;

use super::pauli::SparsePauli;
use super::{hermiticity_error, CMatrix, UnitaryMatrix, C64};
use crate::error::{Error, Result};

/// Density matrix with unit trace and nonnegative spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let herr = hermiticity_error(&m);
        if herr > 1e-10 {
            return Err(Error::NotHermitian(herr));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::invalid(format!("density matrix trace {tr}")));
        }
        let min = super::hermitian_eigen(&m)
            .0
            .iter()
            .fold(f64::INFINITY, |a, v| a.min(*v));
        if min < -1e-9 {
            return Err(Error::invalid(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self(m))
    }

    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::invalid("zero state vector"));
        }
        let v = psi / C64::from(norm);
        Self::new(&v * v.adjoint())
    }

    /// Computational basis state `|index>` on `n` qubits.
    pub fn basis(n: usize, index: usize) -> Self {
        let d = 1 << n;
        let mut m = CMatrix::zeros(d, d);
        m[(index, index)] = C64::from(1.0);
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn evolve(&self, u: &UnitaryMatrix) -> Result<Self> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch(u.dim(), self.dim()));
        }
        Ok(Self(u.matrix() * &self.0 * u.matrix().adjoint()))
    }

    /// `Tr[P_i rho]` for every Pauli in lexicographic order.
    pub fn pauli_expectations(&self) -> DVector<f64> {
        let n = self.n_qubits();
        DVector::from_iterator(
            1 << (2 * n),
            (0..1usize << (2 * n)).map(|i| SparsePauli::from_index(n, i).trace_with(&self.0).re),
        )
    }

    pub fn from_pauli_expectations(n: usize, v: &DVector<f64>) -> Result<Self> {
        let d = 1usize << n;
        if v.len() != d * d {
            return Err(Error::DimensionMismatch(v.len(), d * d));
        }
        let mut m = CMatrix::zeros(d, d);
        for (i, e) in v.iter().enumerate() {
            let p = SparsePauli::from_index(n, i);
            for col in 0..d {
                let (row, val) = p.column(col);
                m[(row, col)] += val * (*e / d as f64);
            }
        }
        Self::new(m)
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.0[(k, k)].re).collect()
    }
}

/// Computational-basis populations from a Pauli expectation vector, using only
/// the Z-type entries.
pub fn populations_from_pauli(n: usize, v: &DVector<f64>) -> Vec<f64> {
    let d = 1usize << n;
    (0..d)
        .map(|s| {
            let mut acc = 0.0;
            for subset in 0..d {
                let idx = z_type_index(n, subset);
                let sign = if (s & subset).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * v[idx];
            }
            acc / d as f64
        })
        .collect()
}

/// Lexicographic index of the Z-type Pauli with support `subset` (bit mask,
/// qubit 0 most significant).
pub fn z_type_index(n: usize, subset: usize) -> usize {
    (0..n)
        .filter(|q| subset & (1 << (n - 1 - q)) != 0)
        .map(|q| 3usize << (2 * (n - 1 - q)))
        .sum()
}
