use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{CMatrix, UnitaryMatrix, C64};

pub(crate) type M2 = SMatrix<C64, 2, 2>;
pub(crate) type M8 = SMatrix<C64, 8, 8>;

/// Angles per single-qubit layer (three qubits, three Euler angles each).
pub const PARAMS_PER_LAYER: usize = 9;

fn rz2(theta: f64) -> M2 {
    M2::new(
        C64::from_polar(1.0, -0.5 * theta),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::from_polar(1.0, 0.5 * theta),
    )
}

fn x90() -> M2 {
    let a = C64::new(FRAC_1_SQRT_2, 0.0);
    let b = C64::new(0.0, -FRAC_1_SQRT_2);
    M2::new(a, b, b, a)
}

fn half_z() -> M2 {
    // -i Z / 2
    M2::new(C64::new(0.0, -0.5), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.5))
}

/// `Rz(φ) X90 Rz(θ) X90 Rz(λ)`.
pub(crate) fn su2(phi: f64, theta: f64, lambda: f64) -> M2 {
    rz2(phi) * x90() * rz2(theta) * x90() * rz2(lambda)
}

/// Derivatives of [`su2`] with respect to `(φ, θ, λ)`.
fn su2_derivatives(phi: f64, theta: f64, lambda: f64) -> [M2; 3] {
    let (a, x, b, c) = (rz2(phi), x90(), rz2(theta), rz2(lambda));
    let u = a * x * b * x * c;
    [half_z() * u, a * x * half_z() * b * x * c, u * half_z()]
}

/// Single-qubit Euler gate as a dense 2x2 unitary.
pub fn euler_su2(phi: f64, theta: f64, lambda: f64) -> UnitaryMatrix {
    let u = su2(phi, theta, lambda);
    UnitaryMatrix::new_unchecked(CMatrix::from_fn(2, 2, |r, c| u[(r, c)]))
}

pub(crate) fn kron3(a: &M2, b: &M2, c: &M2) -> M8 {
    M8::from_fn(|r, col| a[(r >> 2, col >> 2)] * b[((r >> 1) & 1, (col >> 1) & 1)] * c[(r & 1, col & 1)])
}

pub(crate) fn to_m8(u: &UnitaryMatrix) -> Result<M8> {
    if u.dim() != 8 {
        return Err(Error::InvalidDimension(u.dim()));
    }
    Ok(M8::from_fn(|r, c| u.matrix()[(r, c)]))
}

fn layer(params: &[f64]) -> M8 {
    let u: Vec<M2> = (0..3).map(|q| su2(params[3 * q], params[3 * q + 1], params[3 * q + 2])).collect();
    kron3(&u[0], &u[1], &u[2])
}

/// `G L_m ... G L_1`: `m` single-qubit layers, each followed by the fixed
/// gate. With `trailing_layer`, one more layer `L_{m+1}` closes the circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzCircuit {
    pub depth: usize,
    pub fixed_gate: UnitaryMatrix,
    pub trailing_layer: bool,
    /// Angle `a` of qubit `q` in layer `l` sits at `9 l + 3 q + a`.
    pub params: Vec<f64>,
}

impl AnsatzCircuit {
    pub fn new(depth: usize, fixed_gate: UnitaryMatrix, trailing_layer: bool, params: Vec<f64>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::invalid("depth must be >= 1"));
        }
        if fixed_gate.dim() != 8 {
            return Err(Error::InvalidDimension(fixed_gate.dim()));
        }
        let expected = param_count(depth, trailing_layer);
        if params.len() != expected {
            return Err(Error::DimensionMismatch(params.len(), expected));
        }
        Ok(Self {
            depth,
            fixed_gate,
            trailing_layer,
            params,
        })
    }
}

pub fn param_count(depth: usize, trailing_layer: bool) -> usize {
    PARAMS_PER_LAYER * (depth + usize::from(trailing_layer))
}

pub fn ansatz_unitary(c: &AnsatzCircuit) -> Result<UnitaryMatrix> {
    let expected = param_count(c.depth, c.trailing_layer);
    if c.params.len() != expected {
        return Err(Error::DimensionMismatch(c.params.len(), expected));
    }
    let g = to_m8(&c.fixed_gate)?;
    let v = sequence(&g, c.depth, c.trailing_layer, &c.params)
        .iter()
        .fold(M8::identity(), |v, (m, _)| m * v);
    Ok(UnitaryMatrix::new_unchecked(CMatrix::from_fn(8, 8, |r, col| v[(r, col)])))
}

/// Factors in application order, tagged with their layer index.
fn sequence(g: &M8, depth: usize, trailing: bool, params: &[f64]) -> Vec<(M8, Option<usize>)> {
    let layer_at = |l: usize| layer(&params[PARAMS_PER_LAYER * l..PARAMS_PER_LAYER * (l + 1)]);
    let mut ops = Vec::with_capacity(2 * depth + 1);
    for l in 0..depth {
        ops.push((layer_at(l), Some(l)));
        ops.push((*g, None));
    }
    if trailing {
        ops.push((layer_at(depth), Some(depth)));
    }
    ops
}

/// `1 - |Tr(U^dag V)/8|^2` and its analytic gradient.
#[derive(Clone, Debug)]
pub(crate) struct Objective {
    target_dag: M8,
    gate: M8,
    depth: usize,
    trailing: bool,
}

impl Objective {
    pub(crate) fn new(target: &UnitaryMatrix, gate: &UnitaryMatrix, depth: usize, trailing: bool) -> Result<Self> {
        Ok(Self {
            target_dag: to_m8(target)?.adjoint(),
            gate: to_m8(gate)?,
            depth,
            trailing,
        })
    }

    pub(crate) fn dim(&self) -> usize {
        param_count(self.depth, self.trailing)
    }

    pub(crate) fn value(&self, params: &[f64]) -> f64 {
        let v = sequence(&self.gate, self.depth, self.trailing, params)
            .iter()
            .fold(M8::identity(), |v, (m, _)| m * v);
        let t = (self.target_dag * v).trace();
        1.0 - t.norm_sqr() / 64.0
    }

    pub(crate) fn value_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let ops = sequence(&self.gate, self.depth, self.trailing, params);
        let n = ops.len();
        // before[k]: product of factors ahead of k; after[k]: product of those after it.
        let mut before = vec![M8::identity(); n];
        for k in 1..n {
            before[k] = ops[k - 1].0 * before[k - 1];
        }
        let mut after = vec![M8::identity(); n];
        for k in (0..n - 1).rev() {
            after[k] = after[k + 1] * ops[k + 1].0;
        }
        let v = after[0] * ops[0].0;
        let t = (self.target_dag * v).trace();
        let mut grad = vec![0.0; params.len()];
        for (k, (_, tag)) in ops.iter().enumerate() {
            let Some(l) = *tag else { continue };
            // Tr(U^dag V) = Tr(L_l env) with env = before U^dag after.
            let env = before[k] * self.target_dag * after[k];
            let p = &params[PARAMS_PER_LAYER * l..PARAMS_PER_LAYER * (l + 1)];
            let us: Vec<M2> = (0..3).map(|q| su2(p[3 * q], p[3 * q + 1], p[3 * q + 2])).collect();
            for q in 0..3 {
                let ds = su2_derivatives(p[3 * q], p[3 * q + 1], p[3 * q + 2]);
                for (a, d) in ds.iter().enumerate() {
                    let dl = match q {
                        0 => kron3(d, &us[1], &us[2]),
                        1 => kron3(&us[0], d, &us[2]),
                        _ => kron3(&us[0], &us[1], d),
                    };
                    let dt = dl.transpose().component_mul(&env).sum();
                    grad[PARAMS_PER_LAYER * l + 3 * q + a] = -2.0 * (t.conj() * dt).re / 64.0;
                }
            }
        }
        (1.0 - t.norm_sqr() / 64.0, grad)
    }
}
