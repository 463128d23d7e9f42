use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::measure::{basis_distribution, masked_index, product_pauli_vector, sample_frequencies};
use crate::error::{Error, Result};
use crate::noise::ReadoutModel;
use crate::quantum::{hermitian_eigen, CMatrix, Pauli, QuantumChannel, C64};
use crate::quantum::channel::{choi_from_ptm, ptm_from_choi};
use crate::rng::{derive_seed, rng_from_seed};

/// Single-qubit preparations `I, X90, X180, Y90` applied to `|0>`, as Bloch
/// vectors `(1, x, y, z)`.
pub const PREPARATIONS: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 1.0],
    [1.0, 0.0, -1.0, 0.0],
    [1.0, 0.0, 0.0, -1.0],
    [1.0, 1.0, 0.0, 0.0],
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectionSettings {
    /// Alternating-projection iterations.
    pub max_iters: usize,
    /// Frobenius movement at which the alternating projection stops.
    pub tolerance: f64,
    /// Likelihood ascent steps on sampled data; 0 keeps the projection.
    pub likelihood_iters: usize,
    /// Relative likelihood gain at which the ascent stops.
    pub likelihood_tolerance: f64,
}

impl Default for ProjectionSettings {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tolerance: 1e-10,
            likelihood_iters: 300,
            likelihood_tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TomographyResult {
    /// Linear-inversion estimate before projection.
    pub raw: DMatrix<f64>,
    /// Nearest CPTP channel to `raw` in the Frobenius norm.
    pub projected: QuantumChannel,
    /// Final estimate.
    pub channel: QuantumChannel,
    /// Frobenius distance moved by the projection.
    pub projection_distance: f64,
    pub projection_iterations: usize,
    pub likelihood_iterations: usize,
}

fn preparation_matrix() -> DMatrix<f64> {
    let b = DMatrix::from_fn(4, 4, |i, j| PREPARATIONS[j][i]);
    b.kronecker(&b).kronecker(&b)
}

const XYZ: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

fn basis_labels(b: usize) -> [Pauli; 3] {
    [XYZ[b / 9], XYZ[(b / 3) % 3], XYZ[b % 3]]
}

fn parity_sign(s: usize, mask: usize) -> f64 {
    if (s & mask).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Readout-corrected outcome frequencies for the 27 product bases.
fn measure_bases(
    v: &DVector<f64>,
    shots: Option<u64>,
    readout: Option<&ReadoutModel>,
    seed: u64,
) -> Result<Vec<[f64; 8]>> {
    (0..27usize)
        .map(|b| {
            let mut p = basis_distribution(v, &basis_labels(b));
            if let Some(r) = readout {
                p = r.apply(&p);
            }
            let mut rng = rng_from_seed(derive_seed(seed, b as u64));
            let mut freq = sample_frequencies(&p, shots, &mut rng);
            if let Some(r) = readout {
                freq = r.correct(&freq)?;
            }
            let mut out = [0.0; 8];
            out.copy_from_slice(&freq);
            Ok(out)
        })
        .collect()
}

/// Pauli expectations, each averaged over every basis compatible with it.
fn expectations(freqs: &[[f64; 8]]) -> DVector<f64> {
    let mut sum = DVector::zeros(64);
    let mut count = DVector::<f64>::zeros(64);
    for (b, freq) in freqs.iter().enumerate() {
        let labels = basis_labels(b);
        for mask in 0..8usize {
            let idx = masked_index(&labels, mask);
            sum[idx] += freq.iter().enumerate().map(|(s, f)| parity_sign(s, mask) * f).sum::<f64>();
            count[idx] += 1.0;
        }
    }
    sum.component_div(&count)
}

/// Process tomography over the 64 product preparations and 27 measurement
/// bases: linear inversion, projection onto CPTP channels and, for sampled
/// data, likelihood maximization started from the projection.
pub fn ptm_tomography(
    channel: &QuantumChannel,
    shots: Option<u64>,
    readout: Option<&ReadoutModel>,
    seed: u64,
) -> Result<TomographyResult> {
    ptm_tomography_with(channel, shots, readout, seed, &ProjectionSettings::default())
}

pub fn ptm_tomography_with(
    channel: &QuantumChannel,
    shots: Option<u64>,
    readout: Option<&ReadoutModel>,
    seed: u64,
    settings: &ProjectionSettings,
) -> Result<TomographyResult> {
    if channel.n_qubits() != 3 {
        return Err(Error::InvalidDimension(channel.hilbert_dim()));
    }
    let input = preparation_matrix();
    let inv = input.clone().try_inverse().ok_or_else(|| Error::invalid("preparation set is not complete"))?;
    let mut output = DMatrix::zeros(64, 64);
    let mut data = Vec::with_capacity(64);
    for j in 0..64usize {
        let bloch = [PREPARATIONS[j >> 4], PREPARATIONS[(j >> 2) & 3], PREPARATIONS[j & 3]];
        let out = channel.apply(&product_pauli_vector(&bloch));
        let freqs = measure_bases(&out, shots, readout, derive_seed(seed, 1000 + j as u64))?;
        output.set_column(j, &expectations(&freqs));
        data.push(freqs);
    }
    let raw = output * inv;
    let (projected, iterations) = project_cptp(&raw, settings);
    let projection_distance = (&projected - &raw).norm();
    let (ptm, likelihood_iterations) = match shots {
        Some(_) if settings.likelihood_iters > 0 => maximize_likelihood(projected.clone(), &input, &data, settings),
        _ => (projected.clone(), 0),
    };
    Ok(TomographyResult {
        raw,
        projected: QuantumChannel::new(projected)?,
        channel: QuantumChannel::new(ptm)?,
        projection_distance,
        projection_iterations: iterations,
        likelihood_iterations,
    })
}

/// Outcome probabilities for every (preparation, basis) pair.
fn model_probabilities(r: &DMatrix<f64>, input: &DMatrix<f64>) -> Vec<Vec<[f64; 8]>> {
    let y = r * input;
    (0..64)
        .map(|j| {
            (0..27)
                .map(|b| {
                    let labels = basis_labels(b);
                    let mut p = [0.0; 8];
                    for mask in 0..8usize {
                        let e = y[(masked_index(&labels, mask), j)];
                        for (s, ps) in p.iter_mut().enumerate() {
                            *ps += parity_sign(s, mask) * e / 8.0;
                        }
                    }
                    p
                })
                .collect()
        })
        .collect()
}

const P_FLOOR: f64 = 1e-12;
const INNER_PROJECTION_TOL: f64 = 1e-7;

fn neg_log_likelihood(probs: &[Vec<[f64; 8]>], data: &[Vec<[f64; 8]>]) -> f64 {
    let mut nll = 0.0;
    for (pj, fj) in probs.iter().zip(data) {
        for (pb, fb) in pj.iter().zip(fj) {
            for (p, f) in pb.iter().zip(fb) {
                if *f > 0.0 {
                    nll -= f * p.max(P_FLOOR).ln();
                }
            }
        }
    }
    nll
}

fn nll_gradient(probs: &[Vec<[f64; 8]>], data: &[Vec<[f64; 8]>], input: &DMatrix<f64>) -> DMatrix<f64> {
    let mut gy = DMatrix::<f64>::zeros(64, 64);
    for j in 0..64 {
        for b in 0..27 {
            let labels = basis_labels(b);
            let (p, f) = (&probs[j][b], &data[j][b]);
            for mask in 0..8usize {
                let g: f64 = (0..8)
                    .filter(|s| f[*s] > 0.0)
                    .map(|s| -f[s] / p[s].max(P_FLOOR) * parity_sign(s, mask) / 8.0)
                    .sum();
                gy[(masked_index(&labels, mask), j)] += g;
            }
        }
    }
    gy * input.transpose()
}

/// Projected gradient descent on the multinomial negative log-likelihood
/// with Armijo backtracking; every trial point is projected onto CPTP.
fn maximize_likelihood(
    start: DMatrix<f64>,
    input: &DMatrix<f64>,
    data: &[Vec<[f64; 8]>],
    settings: &ProjectionSettings,
) -> (DMatrix<f64>, usize) {
    // Trial points sit close to the CPTP set; a loose projection suffices.
    let inner = ProjectionSettings {
        tolerance: settings.tolerance.max(INNER_PROJECTION_TOL),
        ..*settings
    };
    let mut x = start;
    let mut probs = model_probabilities(&x, input);
    let mut nll = neg_log_likelihood(&probs, data);
    let mut mu = 1e-3;
    for it in 1..=settings.likelihood_iters {
        let grad = nll_gradient(&probs, data, input);
        let (target, _) = project_cptp(&(&x - &grad * mu), &inner);
        let dir = target - &x;
        let slope = dir.dot(&grad);
        if slope >= 0.0 {
            return (x, it);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial = &x + &dir * step;
            let tp = model_probabilities(&trial, input);
            let tn = neg_log_likelihood(&tp, data);
            if tn <= nll + 1e-4 * step * slope {
                accepted = Some((trial, tp, tn));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, tp, tn)) = accepted else {
            return (x, it);
        };
        mu = if step == 1.0 { mu * 2.0 } else { mu * step.max(0.25) };
        let gain = nll - tn;
        x = trial;
        probs = tp;
        nll = tn;
        if gain <= settings.likelihood_tolerance * nll.abs().max(1.0) {
            return (x, it);
        }
    }
    (x, settings.likelihood_iters)
}

fn project_psd(j: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(j);
    let keep: Vec<usize> = (0..vals.len()).filter(|k| vals[*k] > 0.0).collect();
    let mut scaled = CMatrix::zeros(j.nrows(), keep.len());
    for (c, k) in keep.iter().enumerate() {
        scaled.set_column(c, &(vecs.column(*k) * C64::new(vals[*k].sqrt(), 0.0)));
    }
    &scaled * scaled.adjoint()
}

fn project_tp(r: &mut DMatrix<f64>) {
    r[(0, 0)] = 1.0;
    for c in 1..r.ncols() {
        r[(0, c)] = 0.0;
    }
}

/// Dykstra alternating projection onto the intersection of the completely
/// positive cone (Choi PSD) and the trace-preserving plane. The Choi map is a
/// Frobenius isometry, so both projections are taken in the same metric.
pub fn project_cptp(ptm: &DMatrix<f64>, settings: &ProjectionSettings) -> (DMatrix<f64>, usize) {
    let n = match ptm.nrows() {
        4 => 1,
        16 => 2,
        _ => 3,
    };
    let mut x = ptm.clone();
    let mut p = DMatrix::zeros(ptm.nrows(), ptm.ncols());
    let mut q = DMatrix::zeros(ptm.nrows(), ptm.ncols());
    for it in 1..=settings.max_iters {
        let y = {
            let shifted = &x + &p;
            let y = ptm_from_choi(n, &project_psd(&choi_from_ptm(n, &shifted)));
            p = shifted - &y;
            y
        };
        let shifted = &y + &q;
        let mut next = shifted.clone();
        project_tp(&mut next);
        q = shifted - &next;
        let moved = (&next - &x).norm();
        x = next;
        if moved < settings.tolerance {
            return (repair_cp(n, x), it);
        }
    }
    (repair_cp(n, x), settings.max_iters)
}

/// Mixes in the completely depolarizing channel (Choi `I/d`) just enough to
/// lift the residual negative Choi eigenvalue left by a truncated iteration.
fn repair_cp(n: usize, mut x: DMatrix<f64>) -> DMatrix<f64> {
    let d = (1usize << n) as f64;
    let min = hermitian_eigen(&choi_from_ptm(n, &x)).0.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    if min < 0.0 {
        let eps = -min / (1.0 / d - min);
        x *= 1.0 - eps;
        x[(0, 0)] += eps;
    }
    x
}
