//! Dense complex linear algebra for systems of at most three qubits.
//!
//! Qubits are ordered `(c1, t, c2)`; qubit 0 is the most significant bit of a
//! computational-basis index, so `|c1 t c2>` has index `4*c1 + 2*t + c2`.

pub(crate) mod channel;
mod pauli;
mod state;

pub use channel::{ptm_of_unitary, ptm_process_fidelity, QuantumChannel};
pub use pauli::{pauli_matrix, Pauli, PauliString, SparsePauli};
pub use state::{populations_from_pauli, z_type_index, DensityMatrix};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const UNITARY_TOL: f64 = 1e-10;
pub const CHANNEL_TOL: f64 = 1e-9;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn unitarity_error(m: &CMatrix) -> f64 {
    let d = m.nrows();
    max_abs_diff(&(m.adjoint() * m), &CMatrix::identity(d, d))
}

fn ensure_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// Kronecker product of the factors, leftmost factor most significant.
pub fn kron(factors: &[CMatrix]) -> Result<CMatrix> {
    let (first, rest) = factors.split_first().ok_or(Error::NoFactors)?;
    ensure_square(first)?;
    let mut out = first.clone();
    for f in rest {
        ensure_square(f)?;
        out = out.kronecker(f);
    }
    Ok(out)
}

/// Single-qubit operator `op` acting on qubit `q` of an `n`-qubit register.
pub fn embed(op: &CMatrix, q: usize, n: usize) -> CMatrix {
    let id = CMatrix::identity(2, 2);
    let factors: Vec<CMatrix> = (0..n)
        .map(|k| if k == q { op.clone() } else { id.clone() })
        .collect();
    kron(&factors).expect("nonempty")
}

/// `exp(-i H t)` through the Hermitian eigendecomposition of `H`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> Result<UnitaryMatrix> {
    ensure_square(h)?;
    let scale = max_abs(h).max(1.0);
    let herr = hermiticity_error(h);
    if herr > UNITARY_TOL * scale {
        return Err(Error::NotHermitian(herr));
    }
    let dim = h.nrows();
    if !dim.is_power_of_two() {
        return Err(Error::InvalidDimension(dim));
    }
    Ok(UnitaryMatrix(expm_hermitian_raw(h, t)))
}

/// Eigen-decomposition of the Hermitian part of `h`.
///
/// The default convergence threshold of the implicit QR sweep can stall into
/// NaNs on matrices with large exactly degenerate eigenspaces (Choi matrices
/// of unitaries), so a short ladder of thresholds is tried, ending with a
/// diagonal shift.
pub(crate) fn hermitian_eigen(h: &CMatrix) -> (nalgebra::DVector<f64>, CMatrix) {
    let herm = (h + h.adjoint()).scale(0.5);
    let finite = |e: &nalgebra::SymmetricEigen<C64, nalgebra::Dyn>| {
        e.eigenvalues.iter().all(|v| v.is_finite()) && e.eigenvectors.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    };
    for eps in [1e-13, 1e-12] {
        if let Some(e) = herm.clone().try_symmetric_eigen(eps, 0) {
            if finite(&e) {
                return (e.eigenvalues, e.eigenvectors);
            }
        }
    }
    let shift = max_abs(&herm).max(1.0) * 0.371;
    let n = herm.nrows();
    let e = (herm + CMatrix::identity(n, n).scale(shift)).symmetric_eigen();
    (e.eigenvalues.map(|v| v - shift), e.eigenvectors)
}

/// Unchecked variant used in inner loops where `h` is Hermitian by construction.
pub(crate) fn expm_hermitian_raw(h: &CMatrix, t: f64) -> CMatrix {
    let (vals, v) = hermitian_eigen(h);
    let mut vd = v.clone();
    for (j, lambda) in vals.iter().enumerate() {
        let ph = C64::from_polar(1.0, -lambda * t);
        for i in 0..vd.nrows() {
            vd[(i, j)] *= ph;
        }
    }
    vd * v.adjoint()
}

/// Unitary matrix of dimension 2, 4 or 8.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        ensure_square(&m)?;
        if !m.nrows().is_power_of_two() || m.nrows() < 2 {
            return Err(Error::InvalidDimension(m.nrows()));
        }
        let err = unitarity_error(&m);
        if err > UNITARY_TOL {
            return Err(Error::NotUnitary(err));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be unitary (for instance a product of unitaries).
    pub fn new_unchecked(m: CMatrix) -> Self {
        debug_assert!(unitarity_error(&m) < 1e-8);
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
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

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// `self * rhs`, i.e. `rhs` acts first.
    pub fn mul(&self, rhs: &UnitaryMatrix) -> Self {
        Self(&self.0 * &rhs.0)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::identity(self.dim());
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    pub fn apply(&self, psi: &nalgebra::DVector<C64>) -> nalgebra::DVector<C64> {
        &self.0 * psi
    }

    pub fn max_abs_diff(&self, other: &UnitaryMatrix) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }

    pub fn scaled_phase(&self, theta: f64) -> Self {
        Self(self.0.map(|z| z * C64::from_polar(1.0, theta)))
    }
}

/// `|Tr[V^dag U] / d|^2`.
pub fn entanglement_fidelity(v: &UnitaryMatrix, u: &UnitaryMatrix) -> Result<f64> {
    if v.dim() != u.dim() {
        return Err(Error::DimensionMismatch(v.dim(), u.dim()));
    }
    Ok(overlap_fidelity(v.matrix(), u.matrix()))
}

pub(crate) fn overlap_fidelity(v: &CMatrix, u: &CMatrix) -> f64 {
    let d = v.nrows() as f64;
    let tr: C64 = v.iter().zip(u.iter()).map(|(a, b)| a.conj() * b).sum();
    (tr.norm() / d).powi(2).min(1.0)
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phase fix
/// that makes the distribution exactly Haar.
pub fn random_haar_unitary(dim: usize, seed: u64) -> Result<UnitaryMatrix> {
    let mut rng = rng_from_seed(seed);
    random_haar_unitary_with(dim, &mut rng)
}

pub fn random_haar_unitary_with(dim: usize, rng: &mut Rng) -> Result<UnitaryMatrix> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidDimension(dim));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * s, im * s)
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    Ok(UnitaryMatrix(q))
}

/// Single-qubit Pauli matrices as dense 2x2 matrices.
pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `Rz(theta) = diag(e^{-i theta/2}, e^{i theta/2})`.
pub fn rz(theta: f64) -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::from_polar(1.0, -theta / 2.0),
            ZERO,
            ZERO,
            C64::from_polar(1.0, theta / 2.0),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn random_hermitian(dim: usize, seed: u64) -> CMatrix {
        let mut rng = rng_from_seed(seed);
        let a = CMatrix::from_fn(dim, dim, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        (&a + a.adjoint()).scale(0.5)
    }

    #[test]
    fn kron_examples() {
        let i2 = CMatrix::identity(2, 2);
        assert_eq!(kron(&[i2.clone(), i2.clone()]).unwrap(), CMatrix::identity(4, 4));
        let xi = kron(&[sigma_x(), i2]).unwrap();
        // |00> -> |10>
        assert_eq!(xi[(2, 0)], ONE);
        let zz = kron(&[sigma_z(), sigma_z()]).unwrap();
        let diag: Vec<f64> = (0..4).map(|k| zz[(k, k)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
        assert!(matches!(kron(&[]), Err(Error::NoFactors)));
    }

    #[test]
    fn kron_is_associative() {
        let a = random_hermitian(2, 1);
        let b = random_hermitian(2, 2);
        let d = random_hermitian(4, 3);
        let left = kron(&[kron(&[a.clone(), b.clone()]).unwrap(), d.clone()]).unwrap();
        let right = kron(&[a, kron(&[b, d]).unwrap()]).unwrap();
        assert!(max_abs_diff(&left, &right) < 1e-14);
    }

    #[test]
    fn expm_examples() {
        let z = CMatrix::zeros(4, 4);
        assert!(expm_hermitian(&z, 3.0).unwrap().max_abs_diff(&UnitaryMatrix::identity(4)) < 1e-15);
        let h = sigma_x().scale(std::f64::consts::FRAC_PI_2);
        let u = expm_hermitian(&h, 1.0).unwrap();
        let expected = sigma_x().map(|x| -I * x);
        assert!(max_abs_diff(u.matrix(), &expected) < 1e-12);
        let mut bad = CMatrix::zeros(2, 2);
        bad[(0, 1)] = ONE;
        assert!(matches!(expm_hermitian(&bad, 1.0), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn fidelity_examples() {
        let u = random_haar_unitary(8, 4).unwrap();
        assert_abs_diff_eq!(entanglement_fidelity(&u, &u).unwrap(), 1.0, epsilon = 1e-12);
        let id = UnitaryMatrix::identity(8);
        let x = UnitaryMatrix::new(embed(&sigma_x(), 0, 3)).unwrap();
        assert_abs_diff_eq!(entanglement_fidelity(&id, &x).unwrap(), 0.0, epsilon = 1e-15);
        let theta = std::f64::consts::PI / 6.0;
        let rot = expm_hermitian(&embed(&sigma_z(), 0, 3), theta).unwrap();
        assert_abs_diff_eq!(entanglement_fidelity(&id, &rot).unwrap(), 0.75, epsilon = 1e-12);
        assert!(entanglement_fidelity(&id, &UnitaryMatrix::identity(4)).is_err());
    }

    #[test]
    fn haar_is_deterministic_and_unitary() {
        let a = random_haar_unitary(8, 11).unwrap();
        let b = random_haar_unitary(8, 11).unwrap();
        assert_eq!(a, b);
        assert!(unitarity_error(a.matrix()) < 1e-10);
        assert!(random_haar_unitary(1, 0).is_err());
    }

    #[test]
    fn haar_first_moment() {
        let mut rng = rng_from_seed(99);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| random_haar_unitary_with(8, &mut rng).unwrap().matrix()[(0, 0)].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.125).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn haar_left_invariance() {
        // Fixed left multiplication must not shift the |U_00|^2 distribution.
        let w = random_haar_unitary(8, 5).unwrap();
        let mut rng = rng_from_seed(6);
        let n = 4000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let u = random_haar_unitary_with(8, &mut rng).unwrap();
            m1 += u.matrix()[(0, 0)].norm_sqr().powi(2);
            m2 += w.mul(&u).matrix()[(0, 0)].norm_sqr().powi(2);
        }
        // Haar value of E|U_00|^4 is 2/(d(d+1)) = 1/36.
        let exact = 1.0 / 36.0;
        assert!((m1 / n as f64 - exact).abs() < 0.004);
        assert!((m2 / n as f64 - exact).abs() < 0.004);
    }

    proptest! {
        #[test]
        fn expm_semigroup(seed in 0u64..1000, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
            let h = random_hermitian(8, seed);
            let a = expm_hermitian(&h, t1).unwrap();
            let b = expm_hermitian(&h, t2).unwrap();
            let ab = expm_hermitian(&h, t1 + t2).unwrap();
            prop_assert!(a.mul(&b).max_abs_diff(&ab) < 1e-10);
            prop_assert!(unitarity_error(ab.matrix()) < 1e-10);
        }

        #[test]
        fn fidelity_symmetric_and_phase_invariant(s1 in 0u64..500, s2 in 0u64..500, ph in -3.0f64..3.0) {
            let u = random_haar_unitary(8, s1).unwrap();
            let v = random_haar_unitary(8, s2 + 1000).unwrap();
            let f = entanglement_fidelity(&u, &v).unwrap();
            prop_assert!((f - entanglement_fidelity(&v, &u).unwrap()).abs() < 1e-12);
            prop_assert!((f - entanglement_fidelity(&u.scaled_phase(ph), &v).unwrap()).abs() < 1e-12);
            prop_assert!((f - entanglement_fidelity(&u, &v.scaled_phase(-ph)).unwrap()).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }
}
