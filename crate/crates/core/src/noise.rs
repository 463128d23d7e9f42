//! Geometric-phase error, decoherence channels, coherence limit and readout
//! errors.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::drive::{
    basis_index, conditional_rabi_frequencies, fit_virtual_z, ideal_itoffoli, ControlState,
    DriveModel,
};
use crate::error::{Error, Result};
use crate::quantum::{
    entanglement_fidelity, ptm_of_unitary, CMatrix, QuantumChannel, UnitaryMatrix, C64, I, ZERO,
};

/// Per-qubit coherence and readout parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitNoise {
    pub t1_us: f64,
    pub t2_echo_us: f64,
    #[serde(default)]
    pub t1_drive_us: Option<f64>,
    #[serde(default)]
    pub t2_echo_drive_us: Option<f64>,
    /// P(0|0).
    pub p00: f64,
    /// P(1|1).
    pub p11: f64,
    #[serde(default)]
    pub frequency_ghz: Option<f64>,
    #[serde(default)]
    pub anharmonicity_mhz: Option<f64>,
}

impl QubitNoise {
    pub fn noiseless() -> Self {
        Self {
            t1_us: f64::INFINITY,
            t2_echo_us: f64::INFINITY,
            t1_drive_us: None,
            t2_echo_drive_us: None,
            p00: 1.0,
            p11: 1.0,
            frequency_ghz: None,
            anharmonicity_mhz: None,
        }
    }

    /// `(T1, T2_echo)` in µs, bare or under drive.
    pub fn coherence(&self, under_drive: bool) -> (f64, f64) {
        if under_drive {
            (
                self.t1_drive_us.unwrap_or(self.t1_us),
                self.t2_echo_drive_us.unwrap_or(self.t2_echo_us),
            )
        } else {
            (self.t1_us, self.t2_echo_us)
        }
    }
}

/// Coherence times measured at one relative drive amplitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnderDrivePoint {
    pub relative_amplitude: f64,
    pub t1_us: [f64; 3],
    pub t2_echo_us: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceNoiseModel {
    /// Qubits in order `(c1, t, c2)`.
    pub qubits: [QubitNoise; 3],
    pub zz_c1t_khz: f64,
    pub zz_tc2_khz: f64,
    pub under_drive: Vec<UnderDrivePoint>,
}

impl Default for DeviceNoiseModel {
    fn default() -> Self {
        Self::reference_device()
    }
}

impl DeviceNoiseModel {
    /// Measured parameters of the three-transmon device the gate was shown on.
    pub fn reference_device() -> Self {
        let q = |t1, t2, p00, p11, f, a| QubitNoise {
            t1_us: t1,
            t2_echo_us: t2,
            t1_drive_us: None,
            t2_echo_drive_us: None,
            p00,
            p11,
            frequency_ghz: Some(f),
            anharmonicity_mhz: Some(a),
        };
        Self {
            qubits: [
                q(70.0, 60.0, 0.998, 0.948, 5.254, -277.1),
                q(61.0, 73.0, 0.997, 0.982, 5.331, -272.1),
                q(57.0, 66.0, 0.996, 0.981, 5.491, -271.8),
            ],
            zz_c1t_khz: 96.0,
            zz_tc2_khz: 171.0,
            under_drive: Vec::new(),
        }
    }

    /// No decoherence, no ZZ, perfect readout.
    pub fn noiseless() -> Self {
        Self {
            qubits: [QubitNoise::noiseless(); 3],
            zz_c1t_khz: 0.0,
            zz_tc2_khz: 0.0,
            under_drive: Vec::new(),
        }
    }

    /// Static ZZ only.
    pub fn zz_only(zz_c1t_khz: f64, zz_tc2_khz: f64) -> Self {
        Self {
            zz_c1t_khz,
            zz_tc2_khz,
            ..Self::noiseless()
        }
    }

    pub fn without_zz(mut self) -> Self {
        self.zz_c1t_khz = 0.0;
        self.zz_tc2_khz = 0.0;
        self
    }

    /// Field-path-tagged validation.
    pub fn validate(&self) -> Result<()> {
        for (i, q) in self.qubits.iter().enumerate() {
            let path = |f: &str| format!("qubits[{i}].{f}");
            for (name, v) in [("t1_us", Some(q.t1_us)), ("t1_drive_us", q.t1_drive_us)] {
                if let Some(v) = v {
                    if !(v > 0.0) {
                        return Err(Error::invalid(format!("{}: must be > 0, got {v}", path(name))));
                    }
                }
            }
            for (t1, t2, name) in [
                (q.t1_us, Some(q.t2_echo_us), "t2_echo_us"),
                (q.t1_drive_us.unwrap_or(q.t1_us), q.t2_echo_drive_us, "t2_echo_drive_us"),
            ] {
                if let Some(t2) = t2 {
                    if !(t2 > 0.0) {
                        return Err(Error::invalid(format!("{}: must be > 0, got {t2}", path(name))));
                    }
                    if t2 > 2.0 * t1 + 1e-9 {
                        return Err(Error::invalid(format!(
                            "{}: unphysical dephasing, {t2} us exceeds 2*T1 = {} us",
                            path(name),
                            2.0 * t1
                        )));
                    }
                }
            }
            for (name, p) in [("p00", q.p00), ("p11", q.p11)] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::invalid(format!("{}: probability out of [0,1]: {p}", path(name))));
                }
            }
        }
        for (name, v) in [("zz_c1t_khz", self.zz_c1t_khz), ("zz_tc2_khz", self.zz_tc2_khz)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name}: must be finite")));
            }
        }
        for (i, p) in self.under_drive.iter().enumerate() {
            for q in 0..3 {
                if !(p.t1_us[q] > 0.0) || !(p.t2_echo_us[q] > 0.0) || p.t2_echo_us[q] > 2.0 * p.t1_us[q] + 1e-9 {
                    return Err(Error::invalid(format!(
                        "under_drive[{i}]: invalid coherence for qubit {q}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Static ZZ strengths as angular rates `(c1-t, t-c2)` in rad/ns.
    pub fn zz_rad_per_ns(&self) -> (f64, f64) {
        (
            2.0 * PI * self.zz_c1t_khz * 1e-6,
            2.0 * PI * self.zz_tc2_khz * 1e-6,
        )
    }

    /// Adds this device's static ZZ to a drive model.
    pub fn apply_zz(&self, m: DriveModel) -> DriveModel {
        let (a, b) = self.zz_rad_per_ns();
        m.with_zz(a, b)
    }

    /// Fills the per-qubit under-drive coherence by linear interpolation of the
    /// `under_drive` table (clamped at its ends). Without a table the model is
    /// returned unchanged.
    pub fn at_relative_amplitude(&self, rel: f64) -> Self {
        let mut out = self.clone();
        let mut pts = self.under_drive.clone();
        if pts.is_empty() {
            return out;
        }
        pts.sort_by(|a, b| a.relative_amplitude.total_cmp(&b.relative_amplitude));
        let interp = |f: &dyn Fn(&UnderDrivePoint) -> f64| -> f64 {
            if rel <= pts[0].relative_amplitude {
                return f(&pts[0]);
            }
            for w in pts.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                if rel <= b.relative_amplitude {
                    let x = (rel - a.relative_amplitude) / (b.relative_amplitude - a.relative_amplitude);
                    return f(a) + x * (f(b) - f(a));
                }
            }
            f(pts.last().unwrap())
        };
        for q in 0..3 {
            out.qubits[q].t1_drive_us = Some(interp(&|p| p.t1_us[q]));
            out.qubits[q].t2_echo_drive_us = Some(interp(&|p| p.t2_echo_us[q]));
        }
        out
    }

    pub fn has_under_drive(&self) -> bool {
        self.qubits
            .iter()
            .any(|q| q.t1_drive_us.is_some() || q.t2_echo_drive_us.is_some())
    }

    /// Copy whose bare coherence times are the under-drive values.
    pub fn under_drive_applied(&self) -> Self {
        let mut out = self.clone();
        for q in out.qubits.iter_mut() {
            let (t1, t2) = q.coherence(true);
            q.t1_us = t1;
            q.t2_echo_us = t2;
        }
        out
    }

    pub fn readout(&self) -> ReadoutModel {
        ReadoutModel {
            qubits: self.qubits.map(|q| (q.p00, q.p11)),
        }
    }
}

/// `|Δ^{kl} / Ω^{kl}|` per control state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpTiltSet {
    /// Ordered `00, 01, 10, 11`.
    pub ratios: [f64; 4],
}

impl GpTiltSet {
    pub fn new(ratios: [f64; 4]) -> Result<Self> {
        if ratios.iter().any(|r| !(r.abs() < 1.0)) {
            return Err(Error::invalid("tilt ratios must satisfy |r| < 1"));
        }
        Ok(Self { ratios })
    }

    pub fn zero() -> Self {
        Self { ratios: [0.0; 4] }
    }

    /// `r = Δ/Ω` from a drive model including its ZZ tilts.
    pub fn from_model(m: &DriveModel) -> Self {
        let omega = conditional_rabi_frequencies(m);
        let tilts = m.tilts();
        let ratios = std::array::from_fn(|i| if omega[i] > 0.0 { tilts[i] / omega[i] } else { 0.0 });
        Self { ratios }
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.ratios.map(|r| r * k))
    }
}

/// Gate that the tilted trajectories realize: `i X_t` on control `|00>`, and
/// `diag(e^{-iπr}, e^{iπr})` on the target for every other control state.
pub fn gp_unitary(tilts: &GpTiltSet) -> UnitaryMatrix {
    let mut m = CMatrix::identity(8, 8);
    for control in ControlState::ALL {
        let (k, l) = control.bits();
        let (a, b) = (basis_index(k, 0, l), basis_index(k, 1, l));
        if control == ControlState::C00 {
            m[(a, a)] = ZERO;
            m[(b, b)] = ZERO;
            m[(a, b)] = I;
            m[(b, a)] = I;
        } else {
            let r = tilts.ratios[control.index()];
            m[(a, a)] = C64::from_polar(1.0, -PI * r);
            m[(b, b)] = C64::from_polar(1.0, PI * r);
        }
    }
    UnitaryMatrix::new_unchecked(m)
}

/// `1 - F(U_GP, U_ideal)`. Each idle block contributes `2 cos(π r)` to the
/// trace, so this equals `1 - ((2 + 2 Σ cos π r) / 8)^2`.
pub fn gp_error(tilts: &GpTiltSet) -> f64 {
    1.0 - entanglement_fidelity(&gp_unitary(tilts), &ideal_itoffoli()).expect("same dim")
}

/// GP infidelity after the target virtual-Z sandwich has absorbed the
/// common part of the conditional phases. This is what a calibrated gate
/// exhibits.
pub fn gp_error_aligned(tilts: &GpTiltSet) -> f64 {
    1.0 - fit_virtual_z(&gp_unitary(tilts)).fidelity
}

/// GP unitary after the fitted virtual-Z sandwich.
pub fn gp_unitary_aligned(tilts: &GpTiltSet) -> UnitaryMatrix {
    let u = gp_unitary(tilts);
    let fit = fit_virtual_z(&u);
    crate::drive::virtual_z_sandwich(&u, fit.pre, fit.post)
}

/// `|Δ/Ω| = sqrt(1 - A)` from a tilted Rabi amplitude `A = 1 - (Δ/Ω)^2`.
pub fn tilt_from_amplitude(a: f64) -> Result<f64> {
    if !(a >= 0.0) || a > 1.0 + 1e-9 {
        return Err(Error::invalid(format!("oscillation amplitude {a} outside [0, 1]")));
    }
    Ok((1.0 - a.min(1.0)).sqrt())
}

/// `(γ1, γ2)` for a gate of duration `tau_ns`.
pub fn decay_parameters(t1_us: f64, t2_echo_us: f64, tau_ns: f64) -> Result<(f64, f64)> {
    if !(t1_us > 0.0) || !(t2_echo_us > 0.0) || !(tau_ns >= 0.0) {
        return Err(Error::invalid("coherence times must be > 0 and tau >= 0"));
    }
    if t2_echo_us > 2.0 * t1_us + 1e-9 {
        return Err(Error::UnphysicalDephasing {
            t2_echo: t2_echo_us,
            limit: 2.0 * t1_us,
        });
    }
    let tau = tau_ns * 1e-3;
    let g1 = 1.0 / t1_us;
    let g2 = (1.0 / t2_echo_us - 0.5 / t1_us).max(0.0);
    Ok((1.0 - (-g1 * tau).exp(), 1.0 - (-2.0 * g2 * tau).exp()))
}

/// Pauli-twirled amplitude damping plus dephasing,
/// `diag(1, sqrt(1-γ1)sqrt(1-γ2), sqrt(1-γ1)sqrt(1-γ2), 1-γ1)`.
pub fn decoherence_ptm(t1_us: f64, t2_echo_us: f64, tau_ns: f64) -> Result<QuantumChannel> {
    let (g1, g2) = decay_parameters(t1_us, t2_echo_us, tau_ns)?;
    let coh = (1.0 - g1).sqrt() * (1.0 - g2).sqrt();
    let diag = nalgebra::DVector::from_vec(vec![1.0, coh, coh, 1.0 - g1]);
    QuantumChannel::new(DMatrix::from_diagonal(&diag))
}

/// Tensor product of the per-qubit decoherence channels.
pub fn decoherence_channel(noise: &DeviceNoiseModel, tau_ns: f64, use_under_drive: bool) -> Result<QuantumChannel> {
    let chans = noise
        .qubits
        .iter()
        .map(|q| {
            let (t1, t2) = q.coherence(use_under_drive);
            decoherence_ptm(t1, t2, tau_ns)
        })
        .collect::<Result<Vec<_>>>()?;
    QuantumChannel::tensor(&chans)
}

/// `F_cl = (1/d^2) Π_q (2 + 2 sqrt(1-γ1) sqrt(1-γ2) - γ1)`.
pub fn coherence_limit(noise: &DeviceNoiseModel, tau_ns: f64, use_under_drive: bool) -> Result<f64> {
    let mut f = 1.0 / 64.0;
    for q in &noise.qubits {
        let (t1, t2) = q.coherence(use_under_drive);
        let (g1, g2) = decay_parameters(t1, t2, tau_ns)?;
        f *= 2.0 + 2.0 * (1.0 - g1).sqrt() * (1.0 - g2).sqrt() - g1;
    }
    Ok(f)
}

/// Noisy gate: the GP error unitary (target-frame aligned) after `u`, then
/// bare-coherence decoherence for `tau_ns`. Use
/// [`DeviceNoiseModel::under_drive_applied`] for under-drive coherence.
pub fn noisy_gate_channel(
    u: &UnitaryMatrix,
    noise: &DeviceNoiseModel,
    tau_ns: f64,
    tilts: Option<&GpTiltSet>,
) -> Result<QuantumChannel> {
    let adjusted = match tilts {
        Some(t) => {
            let err = gp_unitary_aligned(t).mul(&ideal_itoffoli().adjoint());
            err.mul(u)
        }
        None => u.clone(),
    };
    let unitary = ptm_of_unitary(&adjusted);
    unitary.then(&decoherence_channel(noise, tau_ns, false)?)
}

/// Independent per-qubit assignment errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    /// `(P(0|0), P(1|1))` per qubit.
    pub qubits: [(f64, f64); 3],
}

impl ReadoutModel {
    pub fn perfect() -> Self {
        Self {
            qubits: [(1.0, 1.0); 3],
        }
    }

    fn single(p00: f64, p11: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[p00, 1.0 - p11, 1.0 - p00, p11])
    }

    /// Column-stochastic `M[measured, true]`.
    pub fn confusion(&self) -> DMatrix<f64> {
        let [a, b, c] = self.qubits.map(|(p00, p11)| Self::single(p00, p11));
        a.kronecker(&b).kronecker(&c)
    }

    /// Probabilities measured for true distribution `p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let v = self.confusion() * nalgebra::DVector::from_column_slice(p);
        v.iter().copied().collect()
    }

    fn inverse(&self) -> Result<DMatrix<f64>> {
        let mut inv: Option<DMatrix<f64>> = None;
        for (q, (p00, p11)) in self.qubits.iter().enumerate() {
            if (p00 + p11 - 1.0).abs() < 1e-12 {
                return Err(Error::NonInvertibleReadout(q));
            }
            let m = Self::single(*p00, *p11).try_inverse().ok_or(Error::NonInvertibleReadout(q))?;
            inv = Some(match inv {
                None => m,
                Some(acc) => acc.kronecker(&m),
            });
        }
        Ok(inv.expect("three qubits"))
    }

    /// Solves `confusion * x = frequencies`, clips negatives and renormalizes.
    pub fn correct(&self, counts: &[f64]) -> Result<Vec<f64>> {
        if counts.len() != 8 {
            return Err(Error::DimensionMismatch(counts.len(), 8));
        }
        if counts.iter().any(|c| *c < 0.0 || !c.is_finite()) {
            return Err(Error::invalid("counts must be finite and nonnegative"));
        }
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("counts sum to zero"));
        }
        let freq = nalgebra::DVector::from_iterator(8, counts.iter().map(|c| c / total));
        let x = self.inverse()? * freq;
        let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
        let s: f64 = clipped.iter().sum();
        Ok(clipped.iter().map(|v| v / s).collect())
    }
}

pub fn readout_confusion(noise: &DeviceNoiseModel) -> DMatrix<f64> {
    noise.readout().confusion()
}

pub fn correct_readout(noise: &DeviceNoiseModel, counts: &[f64]) -> Result<Vec<f64>> {
    noise.readout().correct(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::{evolve_pulse, zz_frame, PulseSet};
    use crate::quantum::{ptm_process_fidelity, random_haar_unitary};
    use crate::rng::{rng_from_seed, sample_multinomial};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn gp_zero_is_ideal() {
        let u = gp_unitary(&GpTiltSet::zero());
        assert!(u.max_abs_diff(&ideal_itoffoli()) < 1e-12);
        assert_eq!(gp_error(&GpTiltSet::zero()), 0.0);
    }

    #[test]
    fn gp_error_closed_form() {
        let t = GpTiltSet::new([0.0, 0.1, 0.1, 0.1]).unwrap();
        let closed = 1.0 - ((2.0 + 2.0 * 3.0 * (PI * 0.1).cos()) / 8.0).powi(2);
        assert!((gp_error(&t) - closed).abs() < 1e-12);
    }

    #[test]
    fn gp_error_quadratic_and_monotone() {
        let t = GpTiltSet::new([0.0, 0.01, 0.006, 0.016]).unwrap();
        for err in [gp_error, gp_error_aligned] {
            let e1 = err(&t);
            let e2 = err(&t.scaled(2.0).unwrap());
            assert!((e2 / e1 - 4.0).abs() < 0.4, "ratio {}", e2 / e1);
        }
        let mut prev = 0.0;
        for k in 1..20 {
            let r = 0.02 * k as f64;
            let e = gp_error(&GpTiltSet::new([0.0, r, 0.5 * r, 1.5 * r]).unwrap());
            assert!(e > prev);
            prev = e;
        }
    }

    #[test]
    fn gp_model_matches_full_evolution() {
        // Full pulse evolution in the ZZ frame with a fitted virtual-Z sandwich.
        let omega = 2.0 * PI / 353.0;
        let alpha = omega / (32.0f64 / 5.0).sqrt();
        for scale in [0.5, 1.0, 1.5] {
            let zz = (2.0 * PI * 96e-6 * scale, 2.0 * PI * 171e-6 * scale);
            let m = DriveModel::itoffoli(alpha).with_zz(zz.0, zz.1);
            let tilts = GpTiltSet::from_model(&m);
            assert!(tilts.ratios.iter().all(|r| *r <= 0.15));
            // τ follows the tilted rate of the |01> and |10> states.
            let w = conditional_rabi_frequencies(&DriveModel::itoffoli(alpha));
            let tau = 2.0 * PI / w[1];
            let p = PulseSet::zero(30.0).with_flat(tau - 30.0);
            let raw = evolve_pulse(&m, &p, 0.1).unwrap();
            let u = zz_frame(&raw, &m, p.total_duration());
            let sim = 1.0 - fit_virtual_z(&u).fidelity;
            let model = gp_error_aligned(&tilts);
            assert!((sim - model).abs() < 1e-3, "scale {scale}: sim {sim} model {model}");
        }
    }

    #[test]
    fn tilt_from_amplitude_examples() {
        assert_eq!(tilt_from_amplitude(1.0).unwrap(), 0.0);
        assert!((tilt_from_amplitude(0.99).unwrap() - 0.1).abs() < 1e-12);
        assert!(tilt_from_amplitude(1.01).is_err());
    }

    #[test]
    fn decoherence_examples() {
        let id = QuantumChannel::identity(1);
        assert_eq!(decoherence_ptm(70.0, 60.0, 0.0).unwrap(), id);
        assert_eq!(decoherence_ptm(f64::INFINITY, f64::INFINITY, 353.0).unwrap(), id);
        let ch = decoherence_ptm(70.0, 60.0, 353.0).unwrap();
        let g1 = 1.0 - (-0.353f64 / 70.0).exp();
        let g2 = 1.0 - (-2.0 * (1.0 / 60.0 - 1.0 / 140.0) * 0.353f64).exp();
        let coh = (1.0 - g1).sqrt() * (1.0 - g2).sqrt();
        let r = ch.ptm();
        assert!((r[(1, 1)] - coh).abs() < 1e-15);
        assert!((r[(2, 2)] - coh).abs() < 1e-15);
        assert!((r[(3, 3)] - (1.0 - g1)).abs() < 1e-15);
        // Pinned plug-in values.
        assert!((r[(1, 1)] - 0.994_133_939_581_516).abs() < 1e-12, "{}", r[(1, 1)]);
        assert!((r[(3, 3)] - 0.994_969_836_714_491).abs() < 1e-12, "{}", r[(3, 3)]);
        assert!(matches!(
            decoherence_ptm(10.0, 25.0, 1.0),
            Err(Error::UnphysicalDephasing { .. })
        ));
    }

    #[test]
    fn decoherence_is_cptp_on_grid() {
        for t1 in [5.0, 20.0, 70.0, 300.0] {
            for frac in [0.05, 0.5, 1.0, 1.5, 2.0] {
                for tau in [0.0, 30.0, 353.0, 5000.0] {
                    let ch = decoherence_ptm(t1, frac * t1, tau).unwrap();
                    assert!(ch.min_choi_eigenvalue() >= -1e-10);
                    assert!(ch.is_trace_preserving());
                }
            }
        }
    }

    #[test]
    fn coherence_limit_examples() {
        let clean = DeviceNoiseModel::noiseless();
        assert_eq!(coherence_limit(&clean, 353.0, false).unwrap(), 1.0);
        let device = DeviceNoiseModel::reference_device();
        assert_eq!(coherence_limit(&device, 0.0, false).unwrap(), 1.0);
        // γ1 = γ2 = 1 on every qubit leaves a factor of 1 per qubit.
        let mut dead = DeviceNoiseModel::noiseless();
        for q in dead.qubits.iter_mut() {
            q.t1_us = 1e-9;
            q.t2_echo_us = 1e-9;
        }
        assert!((coherence_limit(&dead, 353.0, false).unwrap() - 1.0 / 64.0).abs() < 1e-12);
        let f = coherence_limit(&device, 353.0, false).unwrap();
        assert!((f - 0.987_794_307_781_248).abs() < 1e-12, "{f}");
        let mut prev = 1.0;
        for tau in (0..20).map(|k| 50.0 * k as f64) {
            let f = coherence_limit(&device, tau, false).unwrap();
            assert!(f <= prev);
            prev = f;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn coherence_limit_matches_tensor_ptm(seed in 0u64..100_000) {
            let mut rng = rng_from_seed(seed);
            let mut noise = DeviceNoiseModel::noiseless();
            for q in noise.qubits.iter_mut() {
                q.t1_us = rng.random_range(5.0..200.0);
                q.t2_echo_us = rng.random_range(0.05..2.0) * q.t1_us;
            }
            let tau = rng.random_range(0.0..2000.0);
            let closed = coherence_limit(&noise, tau, false).unwrap();
            let ch = decoherence_channel(&noise, tau, false).unwrap();
            let traced = ptm_process_fidelity(&QuantumChannel::identity(3), &ch).unwrap();
            prop_assert!((closed - traced).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_channel_examples() {
        let u = random_haar_unitary(8, 2).unwrap();
        let clean = noisy_gate_channel(&u, &DeviceNoiseModel::noiseless(), 353.0, None).unwrap();
        assert!((clean.ptm() - ptm_of_unitary(&u).ptm()).amax() < 1e-15);
        let device = DeviceNoiseModel::reference_device();
        let id = UnitaryMatrix::identity(8);
        let ch = noisy_gate_channel(&id, &device, 353.0, None).unwrap();
        let f = ptm_process_fidelity(&QuantumChannel::identity(3), &ch).unwrap();
        assert!((f - coherence_limit(&device, 353.0, false).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn noisy_channel_errors_add() {
        let device = DeviceNoiseModel::reference_device();
        let ideal = ideal_itoffoli();
        let ideal_ch = ptm_of_unitary(&ideal);
        let tilts = GpTiltSet::new([0.0, 0.06, 0.034, 0.094]).unwrap();
        let infid = |noise: &DeviceNoiseModel, t: Option<&GpTiltSet>| {
            1.0 - ptm_process_fidelity(&ideal_ch, &noisy_gate_channel(&ideal, noise, 353.0, t).unwrap()).unwrap()
        };
        let gp_only = infid(&DeviceNoiseModel::noiseless(), Some(&tilts));
        let noise_only = infid(&device, None);
        let both = infid(&device, Some(&tilts));
        assert!(((gp_only + noise_only) / both - 1.0).abs() < 0.1);
    }

    #[test]
    fn composition_order_is_immaterial_for_twirled_noise() {
        let device = DeviceNoiseModel::reference_device();
        let tilts = GpTiltSet::new([0.0, 0.06, 0.034, 0.094]).unwrap();
        let gate = ptm_of_unitary(&gp_unitary_aligned(&tilts));
        let dec = decoherence_channel(&device, 353.0, false).unwrap();
        let ideal = ptm_of_unitary(&ideal_itoffoli());
        let after = ptm_process_fidelity(&ideal, &gate.then(&dec).unwrap()).unwrap();
        let before = ptm_process_fidelity(&ideal, &dec.then(&gate).unwrap()).unwrap();
        assert!((after - before).abs() < 1e-4, "{after} vs {before}");
    }

    #[test]
    fn readout_examples() {
        let perfect = ReadoutModel::perfect();
        let counts = [1.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0, 4.0];
        let corrected = perfect.correct(&counts).unwrap();
        for (a, b) in corrected.iter().zip(counts.iter()) {
            assert!((a - b / 10.0).abs() < 1e-15);
        }
        let device = DeviceNoiseModel::reference_device();
        let mut e111 = vec![0.0; 8];
        e111[7] = 1.0;
        let measured = device.readout().apply(&e111);
        let back = correct_readout(&device, &measured).unwrap();
        for (k, v) in back.iter().enumerate() {
            assert!((v - e111[k]).abs() < 1e-10);
        }
        let conf = readout_confusion(&device);
        for col in 0..8 {
            assert!((conf.column(col).sum() - 1.0).abs() < 1e-12);
        }
        let mut bad = device.clone();
        bad.qubits[1].p00 = 0.5;
        bad.qubits[1].p11 = 0.5;
        assert!(matches!(correct_readout(&bad, &counts), Err(Error::NonInvertibleReadout(1))));
    }

    #[test]
    fn readout_correction_monte_carlo() {
        let device = DeviceNoiseModel::reference_device();
        let truth = [0.3, 0.05, 0.1, 0.15, 0.0, 0.2, 0.1, 0.1];
        let measured = device.readout().apply(&truth);
        let mut rng = rng_from_seed(12);
        let counts: Vec<f64> = sample_multinomial(&mut rng, 10_000, &measured)
            .into_iter()
            .map(|c| c as f64)
            .collect();
        let corrected = correct_readout(&device, &counts).unwrap();
        let tvd: f64 = corrected.iter().zip(truth).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
        assert!(tvd <= 0.02, "tvd {tvd}");
    }

    #[test]
    fn validation_reports_field() {
        let mut m = DeviceNoiseModel::reference_device();
        m.validate().unwrap();
        m.qubits[2].t2_echo_us = 500.0;
        let err = m.validate().unwrap_err().to_string();
        assert!(err.contains("qubits[2].t2_echo_us"), "{err}");
    }

    #[test]
    fn under_drive_interpolation() {
        let mut m = DeviceNoiseModel::reference_device();
        m.under_drive = vec![
            UnderDrivePoint { relative_amplitude: 0.2, t1_us: [70.0, 61.0, 57.0], t2_echo_us: [50.0, 73.0, 60.0] },
            UnderDrivePoint { relative_amplitude: 0.4, t1_us: [70.0, 61.0, 57.0], t2_echo_us: [30.0, 73.0, 40.0] },
        ];
        let at = m.at_relative_amplitude(0.3);
        assert!((at.qubits[0].t2_echo_drive_us.unwrap() - 40.0).abs() < 1e-12);
        assert!((at.qubits[2].t2_echo_drive_us.unwrap() - 50.0).abs() < 1e-12);
        let lo = coherence_limit(&at, 353.0, true).unwrap();
        let hi = coherence_limit(&at, 353.0, false).unwrap();
        assert!(lo < hi);
    }
}
