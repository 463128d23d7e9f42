use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{c, CMatrix, UnitaryMatrix, C64, I, ONE, ZERO};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Pauli {
        Self::ALL[i & 3]
    }

    /// X component of the symplectic representation.
    pub fn x_bit(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn z_bit(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn matrix(self) -> CMatrix {
        let e = match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -I, I, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        };
        CMatrix::from_row_slice(2, 2, &e)
    }

    pub fn label(self) -> char {
        ['I', 'X', 'Y', 'Z'][self.index()]
    }
}

/// Three-qubit Pauli string in qubit order `(c1, t, c2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliString(pub [Pauli; 3]);

impl PauliString {
    pub const IDENTITY: PauliString = PauliString([Pauli::I; 3]);

    pub fn new(c1: Pauli, t: Pauli, c2: Pauli) -> Self {
        Self([c1, t, c2])
    }

    /// Lexicographic index `16*p_c1 + 4*p_t + p_c2`.
    pub fn index(&self) -> usize {
        16 * self.0[0].index() + 4 * self.0[1].index() + self.0[2].index()
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < 64, "Pauli index out of range");
        Self([
            Pauli::from_index(i >> 4),
            Pauli::from_index(i >> 2),
            Pauli::from_index(i),
        ])
    }

    pub fn all() -> impl Iterator<Item = PauliString> {
        (0..64).map(Self::from_index)
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|p| **p != Pauli::I).count()
    }

    pub fn label(&self) -> String {
        self.0.iter().map(|p| p.label()).collect()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        self.sparse().commutes_with(&other.sparse())
    }

    pub fn sparse(&self) -> SparsePauli {
        SparsePauli::from_labels(&self.0)
    }

    pub fn matrix(&self) -> CMatrix {
        self.sparse().dense()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let labels: Vec<Pauli> = s
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(Error::invalid(format!("bad Pauli label '{ch}'"))),
            })
            .collect::<Result<_>>()?;
        let arr: [Pauli; 3] = labels
            .try_into()
            .map_err(|_| Error::invalid(format!("expected 3 Pauli labels, got '{s}'")))?;
        Ok(Self(arr))
    }
}

pub fn pauli_matrix(p: &PauliString) -> UnitaryMatrix {
    UnitaryMatrix::new_unchecked(p.matrix())
}

/// Pauli operator on `n` qubits stored as bit masks. Qubit 0 maps to the most
/// significant bit. Column `c` has its only nonzero entry in row `c ^ x`,
/// with value `i^{#Y} * (-1)^{popcount(c & z)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparsePauli {
    pub n: usize,
    pub x: usize,
    pub z: usize,
    pub phase: C64,
}

impl SparsePauli {
    pub fn from_labels(labels: &[Pauli]) -> Self {
        let n = labels.len();
        let (mut x, mut z, mut ny) = (0usize, 0usize, 0u32);
        for (q, p) in labels.iter().enumerate() {
            let bit = 1 << (n - 1 - q);
            if p.x_bit() {
                x |= bit;
            }
            if p.z_bit() {
                z |= bit;
            }
            if *p == Pauli::Y {
                ny += 1;
            }
        }
        Self {
            n,
            x,
            z,
            phase: I.powu(ny),
        }
    }

    /// Pauli with lexicographic index `idx` on `n` qubits.
    pub fn from_index(n: usize, idx: usize) -> Self {
        let labels: Vec<Pauli> = (0..n)
            .map(|q| Pauli::from_index(idx >> (2 * (n - 1 - q))))
            .collect();
        Self::from_labels(&labels)
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Entry in column `col`: returns `(row, value)`.
    #[inline]
    pub fn column(&self, col: usize) -> (usize, C64) {
        let sign = if (col & self.z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        (col ^ self.x, self.phase * sign)
    }

    pub fn commutes_with(&self, other: &SparsePauli) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    pub fn dense(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for col in 0..d {
            let (row, v) = self.column(col);
            m[(row, col)] = v;
        }
        m
    }

    /// `Tr[P M]`.
    pub fn trace_with(&self, m: &CMatrix) -> C64 {
        (0..self.dim())
            .map(|col| {
                let (row, v) = self.column(col);
                v * m[(col, row)]
            })
            .sum()
    }

    /// `M P` computed by permuting and phasing the columns of `M`.
    pub fn right_mul(&self, m: &CMatrix) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(m.nrows(), d);
        for col in 0..d {
            let (row, v) = self.column(col);
            for i in 0..m.nrows() {
                out[(i, col)] = m[(i, row)] * v;
            }
        }
        out
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &SparsePauli) -> SparsePauli {
        SparsePauli {
            n: self.n + other.n,
            x: (self.x << other.n) | other.x,
            z: (self.z << other.n) | other.z,
            phase: self.phase * other.phase,
        }
    }

    /// Transpose: only Y factors change sign.
    pub fn transpose(&self) -> SparsePauli {
        let ny = (self.x & self.z).count_ones();
        let sign = if ny % 2 == 0 { 1.0 } else { -1.0 };
        SparsePauli {
            phase: self.phase * c(sign, 0.0),
            ..*self
        }
    }
}
