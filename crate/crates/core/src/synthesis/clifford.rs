use rand::Rng as _;

use crate::quantum::{CMatrix, Pauli, PauliString, UnitaryMatrix, C64};
use crate::rng::{rng_from_seed, Rng};

const N: usize = 3;

type Bits = [[u8; 2 * N]; 2 * N];

/// Stabilizer tableau: row `q` is the image of `X_q`, row `N + q` the image
/// of `Z_q`; columns hold the X bits then the Z bits, plus a sign bit per row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordTableau {
    pub table: Bits,
    pub signs: [u8; 2 * N],
}

type Vector = [u8; 2 * N];

/// Symplectic form between two rows (X bits first, then Z bits).
fn form(a: &Vector, b: &Vector) -> u8 {
    (0..N).fold(0, |acc, q| acc ^ (a[q] & b[N + q]) ^ (a[N + q] & b[q]))
}

fn random_vector(rng: &mut Rng) -> Vector {
    let mut v = [0u8; 2 * N];
    for b in v.iter_mut() {
        *b = rng.random_range(0..2u8);
    }
    v
}

/// Projects `u` onto the symplectic complement of the chosen pairs. The map
/// is linear and onto, so a uniform input gives a uniform output.
fn project(mut u: Vector, pairs: &[(Vector, Vector)]) -> Vector {
    for (v, w) in pairs {
        let (uw, uv) = (form(&u, w), form(&u, v));
        for i in 0..2 * N {
            u[i] ^= (uw & v[i]) ^ (uv & w[i]);
        }
    }
    u
}

impl CliffordTableau {
    /// Uniform sample: pick the image of each `X_q` uniformly among nonzero
    /// vectors orthogonal to the earlier pairs, then the image of `Z_q`
    /// uniformly among those with unit form against it. Every step has a
    /// fixed number of choices, so the result is uniform over the group.
    pub fn random(rng: &mut Rng) -> Self {
        let mut pairs: Vec<(Vector, Vector)> = Vec::with_capacity(N);
        for _ in 0..N {
            let v = loop {
                let v = project(random_vector(rng), &pairs);
                if v.iter().any(|b| *b == 1) {
                    break v;
                }
            };
            let w = loop {
                let w = project(random_vector(rng), &pairs);
                if form(&v, &w) == 1 {
                    break w;
                }
            };
            pairs.push((v, w));
        }
        let mut table = [[0u8; 2 * N]; 2 * N];
        for (q, (v, w)) in pairs.into_iter().enumerate() {
            table[q] = v;
            table[N + q] = w;
        }
        let mut signs = [0u8; 2 * N];
        for s in signs.iter_mut() {
            *s = rng.random_range(0..2u8);
        }
        Self { table, signs }
    }

    /// `T Ω T^T = Ω` over GF(2).
    pub fn is_symplectic(&self) -> bool {
        for a in 0..2 * N {
            for b in 0..2 * N {
                let expected = u8::from(a % N == b % N && a != b);
                if form(&self.table[a], &self.table[b]) != expected {
                    return false;
                }
            }
        }
        true
    }

    /// Signed Pauli of tableau row `r`.
    pub fn row_pauli(&self, r: usize) -> (PauliString, f64) {
        let p = |q: usize| Pauli::from_bits(self.table[r][q] == 1, self.table[r][N + q] == 1);
        let sign = if self.signs[r] == 1 { -1.0 } else { 1.0 };
        (PauliString::new(p(0), p(1), p(2)), sign)
    }

    fn row_matrix(&self, r: usize) -> CMatrix {
        let (p, s) = self.row_pauli(r);
        p.matrix() * C64::new(s, 0.0)
    }

    /// Dense unitary, fixed up to a global phase: column `x` is
    /// `D^x C|0>` where `C|0>` is the joint +1 eigenvector of the Z images.
    pub fn to_unitary(&self) -> UnitaryMatrix {
        let d = 1 << N;
        let id = CMatrix::identity(d, d);
        let mut proj = id.clone();
        for q in 0..N {
            proj = proj * (&id + self.row_matrix(N + q)) * C64::new(0.5, 0.0);
        }
        let best = (0..d)
            .max_by(|a, b| proj.column(*a).norm().total_cmp(&proj.column(*b).norm()))
            .expect("nonempty");
        let psi0 = proj.column(best) / C64::new(proj.column(best).norm(), 0.0);
        let mut u = CMatrix::zeros(d, d);
        for x in 0..d {
            let mut col = psi0.clone_owned();
            for q in (0..N).rev() {
                if x & (1 << (N - 1 - q)) != 0 {
                    col = self.row_matrix(q) * col;
                }
            }
            u.set_column(x, &col);
        }
        UnitaryMatrix::new_unchecked(u)
    }
}

/// Uniformly random three-qubit Clifford as a dense unitary.
pub fn sample_clifford3(seed: u64) -> UnitaryMatrix {
    CliffordTableau::random(&mut rng_from_seed(seed)).to_unitary()
}
