//! Driven three-qubit Hamiltonian, conditional target dynamics and pulse
//! evolution.
//!
//! Coefficients are angular rotation rates in rad/ns. A term `c P` rotates the
//! Bloch vector about `P` at rate `c`, so the propagator over a duration `t` is
//! `exp(-i H t / 2)`. With this convention the conditional Rabi rate of the
//! target is the norm of its effective field and a full `2π` rotation takes
//! `2π/Ω`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    c, embed, expm_hermitian_raw, overlap_fidelity, rz, CMatrix, UnitaryMatrix, C64, I, ONE,
    ZERO,
};

pub const DEFAULT_DT: f64 = 0.1;

/// Qubit positions in the register.
pub const QUBIT_C1: usize = 0;
pub const QUBIT_T: usize = 1;
pub const QUBIT_C2: usize = 2;

/// Basis index of `|c1 t c2>`.
pub fn basis_index(c1: usize, t: usize, c2: usize) -> usize {
    4 * c1 + 2 * t + c2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlState {
    #[serde(rename = "00")]
    C00,
    #[serde(rename = "01")]
    C01,
    #[serde(rename = "10")]
    C10,
    #[serde(rename = "11")]
    C11,
}

impl ControlState {
    pub const ALL: [ControlState; 4] = [Self::C00, Self::C01, Self::C10, Self::C11];

    /// `(c1, c2)` bits.
    pub fn bits(self) -> (usize, usize) {
        let i = self.index();
        (i >> 1, i & 1)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i & 3]
    }

    pub fn label(self) -> &'static str {
        ["00", "01", "10", "11"][self.index()]
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::invalid(format!("unknown control state '{s}'")))
    }
}

impl fmt::Display for ControlState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Pulse amplitudes (rad/ns), phases (rad) and flat-top envelope timing (ns).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSet {
    pub a_c1: f64,
    pub a_c2: f64,
    pub a_t_x: f64,
    pub a_t_y: f64,
    pub phi_c1: f64,
    pub phi_c2: f64,
    pub ramp: f64,
    pub flat: f64,
}

impl PulseSet {
    pub fn zero(ramp: f64) -> Self {
        Self {
            a_c1: 0.0,
            a_c2: 0.0,
            a_t_x: 0.0,
            a_t_y: 0.0,
            phi_c1: 0.0,
            phi_c2: 0.0,
            ramp,
            flat: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("a_c1", self.a_c1),
            ("a_c2", self.a_c2),
            ("a_t_x", self.a_t_x),
            ("a_t_y", self.a_t_y),
            ("ramp", self.ramp),
            ("flat", self.flat),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !self.phi_c1.is_finite() || !self.phi_c2.is_finite() {
            return Err(Error::invalid("pulse phases must be finite"));
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.flat + 2.0 * self.ramp
    }

    /// Duration of a rectangular pulse with the same area.
    pub fn effective_duration(&self) -> f64 {
        self.flat + self.ramp
    }

    pub fn with_flat(mut self, flat: f64) -> Self {
        self.flat = flat;
        self
    }
}

/// Hamiltonian coefficients of the driven system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveModel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Residual `Z_c1 Y_t` coefficient.
    #[serde(default)]
    pub zy_c1: f64,
    /// Residual `Y_t Z_c2` coefficient.
    #[serde(default)]
    pub zy_c2: f64,
    /// Static ZZ between c1 and t, angular (rad/ns).
    #[serde(default)]
    pub zz_c1t: f64,
    /// Static ZZ between t and c2, angular (rad/ns).
    #[serde(default)]
    pub zz_tc2: f64,
    /// Direct override of `(Δ01, Δ10, Δ11)`.
    #[serde(default)]
    pub tilt_override: Option<[f64; 3]>,
}

impl DriveModel {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            delta,
            zy_c1: 0.0,
            zy_c2: 0.0,
            zz_c1t: 0.0,
            zz_tc2: 0.0,
            tilt_override: None,
        }
    }

    /// The operating point `α = β = γ`, `δ = sqrt(27/5) α`.
    pub fn itoffoli(alpha: f64) -> Self {
        Self::new(alpha, alpha, alpha, (27.0f64 / 5.0).sqrt() * alpha)
    }

    pub fn with_zz(mut self, zz_c1t: f64, zz_tc2: f64) -> Self {
        self.zz_c1t = zz_c1t;
        self.zz_tc2 = zz_tc2;
        self
    }

    pub fn with_tilts(mut self, tilts: [f64; 3]) -> Self {
        self.tilt_override = Some(tilts);
        self
    }

    pub fn without_zz(mut self) -> Self {
        self.zz_c1t = 0.0;
        self.zz_tc2 = 0.0;
        self.tilt_override = None;
        self
    }

    pub fn is_itoffoli(&self) -> bool {
        let a = self.alpha;
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-6 * x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
        a != 0.0
            && close(a, self.beta)
            && close(a, self.gamma)
            && close(self.delta, (27.0f64 / 5.0).sqrt() * a)
    }

    pub fn has_zz(&self) -> bool {
        self.tilts().iter().any(|t| *t != 0.0)
    }

    /// `Δ^{kl}` ordered `00, 01, 10, 11`; `Δ^{00} = 0` in the drive frame.
    pub fn tilts(&self) -> [f64; 4] {
        match self.tilt_override {
            Some([a, b, c]) => [0.0, a, b, c],
            None => [0.0, self.zz_tc2, self.zz_c1t, self.zz_tc2 + self.zz_c1t],
        }
    }

    /// `(x, y, z)` field of the target for control state `kl`.
    pub fn target_field(&self, control: ControlState) -> [f64; 3] {
        let (k, l) = control.bits();
        let sk = if k == 0 { 1.0 } else { -1.0 };
        let sl = if l == 0 { 1.0 } else { -1.0 };
        [
            sk * self.alpha + sl * self.beta + self.gamma,
            self.delta + sk * self.zy_c1 + sl * self.zy_c2,
            self.tilts()[control.index()],
        ]
    }
}

/// Maps pulse parameters to Hamiltonian coefficients. Static ZZ is not a pulse
/// property and is left at zero.
pub fn hamiltonian_from_pulses(p: &PulseSet) -> DriveModel {
    let mut m = DriveModel::new(
        p.a_c1 * p.phi_c1.cos(),
        p.a_c2 * p.phi_c2.cos(),
        p.a_t_x,
        p.a_t_y,
    );
    m.zy_c1 = p.a_c1 * p.phi_c1.sin();
    m.zy_c2 = p.a_c2 * p.phi_c2.sin();
    m
}

fn pauli3(a: &CMatrix, b: &CMatrix, d: &CMatrix) -> CMatrix {
    a.kronecker(b).kronecker(d)
}

/// Drive part of the Hamiltonian (no static ZZ).
pub fn drive_hamiltonian(m: &DriveModel) -> CMatrix {
    use crate::quantum::{sigma_x, sigma_y, sigma_z};
    let (x, y, z) = (sigma_x(), sigma_y(), sigma_z());
    let id = CMatrix::identity(2, 2);
    let terms = [
        (m.alpha, pauli3(&z, &x, &id)),
        (m.beta, pauli3(&id, &x, &z)),
        (m.gamma, pauli3(&id, &x, &id)),
        (m.delta, pauli3(&id, &y, &id)),
        (m.zy_c1, pauli3(&z, &y, &id)),
        (m.zy_c2, pauli3(&id, &y, &z)),
    ];
    let mut h = CMatrix::zeros(8, 8);
    for (coef, op) in terms {
        if coef != 0.0 {
            h += op * C64::from(coef);
        }
    }
    h
}

/// Diagonal `Z_t ⊗ Σ Δ^{kl} |kl><kl|_c`.
pub fn zz_hamiltonian(m: &DriveModel) -> CMatrix {
    let tilts = m.tilts();
    let mut h = CMatrix::zeros(8, 8);
    for control in ControlState::ALL {
        let (k, l) = control.bits();
        for t in 0..2 {
            let sign = if t == 0 { 1.0 } else { -1.0 };
            let idx = basis_index(k, t, l);
            h[(idx, idx)] = c(sign * tilts[control.index()], 0.0);
        }
    }
    h
}

pub fn build_hamiltonian(m: &DriveModel, include_zz: bool) -> CMatrix {
    let mut h = drive_hamiltonian(m);
    if include_zz {
        h += zz_hamiltonian(m);
    }
    h
}

/// Extracts the 2x2 target block `<kl|M|kl>` of an 8x8 operator.
pub fn target_block(m: &CMatrix, control: ControlState) -> CMatrix {
    let (k, l) = control.bits();
    CMatrix::from_fn(2, 2, |r, col| m[(basis_index(k, r, l), basis_index(k, col, l))])
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveTargetSet {
    /// `H_t^{kl}` without the tilt, ordered `00, 01, 10, 11`.
    pub blocks: [CMatrix; 4],
    pub tilts: [f64; 4],
}

impl EffectiveTargetSet {
    pub fn block(&self, control: ControlState) -> &CMatrix {
        &self.blocks[control.index()]
    }

    /// `H_t^{kl} + Δ^{kl} Z_t`.
    pub fn tilted_block(&self, control: ControlState) -> CMatrix {
        let mut b = self.blocks[control.index()].clone();
        let d = self.tilts[control.index()];
        b[(0, 0)] += d;
        b[(1, 1)] -= d;
        b
    }

    /// `max |H00 + H11 - H01 - H10|`.
    pub fn sum_rule_error(&self) -> f64 {
        let s = &self.blocks[0] + &self.blocks[3] - &self.blocks[1] - &self.blocks[2];
        s.iter().fold(0.0, |a, z| a.max(z.norm()))
    }
}

pub fn effective_target_hamiltonians(m: &DriveModel) -> EffectiveTargetSet {
    let blocks = ControlState::ALL.map(|control| {
        let [x, y, _] = m.target_field(control);
        CMatrix::from_row_slice(2, 2, &[ZERO, c(x, -y), c(x, y), ZERO])
    });
    EffectiveTargetSet {
        blocks,
        tilts: m.tilts(),
    }
}

/// `Ω^{kl} = |(x, y, Δ^{kl})|`, ordered `00, 01, 10, 11`.
pub fn conditional_rabi_frequencies(m: &DriveModel) -> [f64; 4] {
    ControlState::ALL.map(|control| {
        let [x, y, z] = m.target_field(control);
        (x * x + y * y + z * z).sqrt()
    })
}

fn ramp_steps(ramp: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    if ramp == 0.0 {
        return Ok(0);
    }
    let limit = ramp / 10.0;
    if dt > limit + 1e-12 {
        return Err(Error::StepTooLarge { dt, limit });
    }
    Ok((ramp / dt).ceil() as usize)
}

/// Time evolution of a flat-top pulse with cosine ramps. The ramp propagators
/// do not depend on the flat-top length and are computed once.
#[derive(Clone, Debug)]
pub struct PulseEvolution {
    ramp_up: CMatrix,
    ramp_down: CMatrix,
    eigenvectors: CMatrix,
    eigenvalues: Vec<f64>,
    ramp: f64,
}

impl PulseEvolution {
    pub fn new(m: &DriveModel, ramp: f64, dt: f64) -> Result<Self> {
        if !(ramp >= 0.0) {
            return Err(Error::invalid("ramp must be >= 0"));
        }
        let n = ramp_steps(ramp, dt)?;
        let hd = drive_hamiltonian(m);
        let hz = zz_hamiltonian(m);
        let mut ramp_up = CMatrix::identity(8, 8);
        let mut ramp_down = CMatrix::identity(8, 8);
        if n > 0 && hd.iter().all(|z| *z == ZERO) {
            ramp_up = expm_hermitian_raw(&hz.scale(0.5), ramp);
            ramp_down = ramp_up.clone();
        } else if n > 0 {
            let h = ramp / n as f64;
            for i in 0..n {
                let s = (1.0 - (PI * (i as f64 + 0.5) / n as f64).cos()) / 2.0;
                let up = expm_hermitian_raw(&(hd.scale(s) + &hz).scale(0.5), h);
                ramp_up = up * ramp_up;
                let down = expm_hermitian_raw(&(hd.scale(1.0 - s) + &hz).scale(0.5), h);
                ramp_down = down * ramp_down;
            }
        }
        let (values, vectors) = crate::quantum::hermitian_eigen(&(hd + hz).scale(0.5));
        Ok(Self {
            ramp_up,
            ramp_down,
            eigenvectors: vectors,
            eigenvalues: values.iter().copied().collect(),
            ramp,
        })
    }

    pub fn ramp(&self) -> f64 {
        self.ramp
    }

    pub fn unitary(&self, flat: f64) -> UnitaryMatrix {
        let mut vd = self.eigenvectors.clone();
        for (j, lambda) in self.eigenvalues.iter().enumerate() {
            let ph = C64::from_polar(1.0, -lambda * flat);
            for i in 0..8 {
                vd[(i, j)] *= ph;
            }
        }
        let mid = vd * self.eigenvectors.adjoint();
        UnitaryMatrix::new_unchecked(&self.ramp_down * mid * &self.ramp_up)
    }

    /// Propagator for an effective duration `tau_eff >= ramp`.
    pub fn unitary_effective(&self, tau_eff: f64) -> Result<UnitaryMatrix> {
        let flat = tau_eff - self.ramp;
        if flat < -1e-9 {
            return Err(Error::PulseTooShort {
                effective: tau_eff,
                ramp: self.ramp,
            });
        }
        Ok(self.unitary(flat.max(0.0)))
    }
}

/// Time-ordered propagator of the pulse envelope applied to `m`.
pub fn evolve_pulse(m: &DriveModel, p: &PulseSet, dt: f64) -> Result<UnitaryMatrix> {
    p.validate()?;
    Ok(PulseEvolution::new(m, p.ramp, dt)?.unitary(p.flat))
}

/// Removes the static ZZ phase accumulated over `duration` (the computational
/// frame co-rotates with the ZZ-shifted target frequencies).
pub fn zz_frame(u: &UnitaryMatrix, m: &DriveModel, duration: f64) -> UnitaryMatrix {
    if !m.has_zz() {
        return u.clone();
    }
    let back = expm_hermitian_raw(&zz_hamiltonian(m).scale(0.5), -duration);
    UnitaryMatrix::new_unchecked(back * u.matrix())
}

/// `i X_t` on control `|00>`, identity elsewhere.
pub fn ideal_itoffoli() -> UnitaryMatrix {
    controlled_on_00(I)
}

/// Toffoli conditioned on control `|00>`.
pub fn toffoli() -> UnitaryMatrix {
    controlled_on_00(ONE)
}

fn controlled_on_00(phase: C64) -> UnitaryMatrix {
    let mut m = CMatrix::identity(8, 8);
    let (a, b) = (basis_index(0, 0, 0), basis_index(0, 1, 0));
    m[(a, a)] = ZERO;
    m[(b, b)] = ZERO;
    m[(a, b)] = phase;
    m[(b, a)] = phase;
    UnitaryMatrix::new_unchecked(m)
}

/// `Rz(θ) = diag(e^{-iθ/2}, e^{iθ/2})` on the target.
pub fn rz_target(theta: f64) -> CMatrix {
    embed(&rz(theta), QUBIT_T, 3)
}

/// `Rz_t(θ_post) U Rz_t(θ_pre)`.
pub fn virtual_z_sandwich(u: &UnitaryMatrix, theta_pre: f64, theta_post: f64) -> UnitaryMatrix {
    let m = rz_target(theta_post) * u.matrix() * rz_target(theta_pre);
    UnitaryMatrix::new_unchecked(m)
}

/// Virtual-Z angles that best align `u` with the ideal iToffoli.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirtualZFit {
    pub pre: f64,
    pub post: f64,
    pub fidelity: f64,
}

/// Closed-form fit. `θ_post - θ_pre` equalizes the phases of the two
/// off-diagonal `|00>`-block entries; `θ_post + θ_pre` equalizes the phases of
/// the target-`|0>` and target-`|1>` diagonals of the idle blocks. Each
/// combination is defined modulo `2π`; both branches are tried.
pub fn fit_virtual_z(u: &UnitaryMatrix) -> VirtualZFit {
    let m = u.matrix();
    let b01 = m[(basis_index(0, 0, 0), basis_index(0, 1, 0))];
    let b10 = m[(basis_index(0, 1, 0), basis_index(0, 0, 0))];
    let d = b01.arg() - b10.arg();
    let mut a = ZERO;
    let mut cc = ZERO;
    for (k, l) in [(0, 1), (1, 0), (1, 1)] {
        a += m[(basis_index(k, 0, l), basis_index(k, 0, l))];
        cc += m[(basis_index(k, 1, l), basis_index(k, 1, l))];
    }
    let s = a.arg() - cc.arg();
    let ideal = ideal_itoffoli();
    let mut best = VirtualZFit {
        pre: 0.0,
        post: 0.0,
        fidelity: -1.0,
    };
    for dd in [d, d + 2.0 * PI] {
        for ss in [s, s + 2.0 * PI] {
            let pre = (ss - dd) / 2.0;
            let post = (ss + dd) / 2.0;
            let f = overlap_fidelity(ideal.matrix(), virtual_z_sandwich(u, pre, post).matrix());
            if f > best.fidelity {
                best = VirtualZFit {
                    pre,
                    post,
                    fidelity: f,
                };
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{
        entanglement_fidelity, expm_hermitian, max_abs_diff, pauli_matrix, sigma_x, sigma_y,
        PauliString,
    };
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_model(seed: u64, zz: bool) -> DriveModel {
        let mut rng = rng_from_seed(seed);
        let mut m = DriveModel::new(
            rng.random_range(-0.02..0.02),
            rng.random_range(-0.02..0.02),
            rng.random_range(-0.02..0.02),
            rng.random_range(-0.02..0.02),
        );
        m.zy_c1 = rng.random_range(-0.005..0.005);
        m.zy_c2 = rng.random_range(-0.005..0.005);
        if zz {
            m = m.with_zz(rng.random_range(0.0..0.003), rng.random_range(0.0..0.003));
        }
        m
    }

    #[test]
    fn from_pulses_examples() {
        let mut p = PulseSet::zero(30.0);
        let m = hamiltonian_from_pulses(&p);
        assert_eq!([m.alpha, m.beta, m.gamma, m.delta, m.zy_c1, m.zy_c2], [0.0; 6]);
        p.a_c1 = 0.01;
        let m = hamiltonian_from_pulses(&p);
        assert_eq!(m.alpha, 0.01);
        assert_eq!(m.zy_c1, 0.0);
        p.phi_c1 = PI / 2.0;
        let m = hamiltonian_from_pulses(&p);
        assert!(m.alpha.abs() < 1e-18);
        assert!((m.zy_c1 - 0.01).abs() < 1e-18);
    }

    #[test]
    fn build_examples() {
        let zero = DriveModel::new(0.0, 0.0, 0.0, 0.0);
        assert!(build_hamiltonian(&zero, true).iter().all(|z| *z == ZERO));
        let m = DriveModel::new(1.0, 0.0, 0.0, 0.0);
        let zx = pauli_matrix(&"ZXI".parse::<PauliString>().unwrap());
        assert!(max_abs_diff(&build_hamiltonian(&m, false), zx.matrix()) < 1e-15);
    }

    #[test]
    fn projection_reproduces_effective_blocks() {
        for seed in 0..50 {
            let m = random_model(seed, true);
            let h = build_hamiltonian(&m, true);
            let eff = effective_target_hamiltonians(&m);
            for control in ControlState::ALL {
                let proj = target_block(&h, control);
                assert!(max_abs_diff(&proj, &eff.tilted_block(control)) < 1e-15);
                // Oracle: partial expectation <kl| H |kl> computed by hand.
                let (k, l) = control.bits();
                let sk = 1.0 - 2.0 * k as f64;
                let sl = 1.0 - 2.0 * l as f64;
                let x = sk * m.alpha + sl * m.beta + m.gamma;
                let y = m.delta + sk * m.zy_c1 + sl * m.zy_c2;
                let expected = sigma_x() * C64::from(x) + sigma_y() * C64::from(y);
                assert!(max_abs_diff(eff.block(control), &expected) < 1e-15);
            }
            assert!(eff.sum_rule_error() < 1e-12);
        }
    }

    #[test]
    fn reference_sign_structure() {
        let m = DriveModel::new(1.0, 1.0, 1.0, 0.0);
        let xs: Vec<f64> = ControlState::ALL.iter().map(|c| m.target_field(*c)[0]).collect();
        assert_eq!(xs, vec![3.0, 1.0, 1.0, -1.0]);
        let m = DriveModel::itoffoli(0.01);
        let w = conditional_rabi_frequencies(&m);
        assert!((w[0] / w[1] - 1.5).abs() < 1e-12);
        assert!(m.is_itoffoli());
        let w = conditional_rabi_frequencies(&DriveModel::itoffoli(1.0));
        assert!((w[0] / w[1] - 1.5).abs() < 1e-15);
        assert_eq!(conditional_rabi_frequencies(&DriveModel::new(0.0, 0.0, 0.0, 0.0)), [0.0; 4]);
    }

    #[test]
    fn reference_zz_tilts() {
        let tc2 = 2.0 * PI * 0.000171;
        let c1t = 2.0 * PI * 0.000096;
        let m = DriveModel::itoffoli(0.01).with_zz(c1t, tc2);
        let t = m.tilts();
        assert_eq!(t[0], 0.0);
        assert!((t[1] - tc2).abs() < 1e-18);
        assert!((t[2] - c1t).abs() < 1e-18);
        assert!((t[3] - (tc2 + c1t)).abs() < 1e-18);
        let o = m.with_tilts([1.0, 2.0, 3.0]);
        assert_eq!(o.tilts(), [0.0, 1.0, 2.0, 3.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn rabi_rate_is_generator_gap(seed in 0u64..1_000_000) {
            let m = random_model(seed, true);
            let eff = effective_target_hamiltonians(&m);
            let w = conditional_rabi_frequencies(&m);
            for control in ControlState::ALL {
                let gen = eff.tilted_block(control).scale(0.5);
                let ev = gen.symmetric_eigenvalues();
                let gap = (ev[0] - ev[1]).abs();
                prop_assert!((gap - w[control.index()]).abs() < 1e-10);
            }
        }

        #[test]
        fn itoffoli_ratio(alpha in 1e-4f64..0.1) {
            let w = conditional_rabi_frequencies(&DriveModel::itoffoli(alpha));
            prop_assert!((w[0] - 1.5 * w[1]).abs() <= 1e-9 * w[0]);
            prop_assert!((w[1] - w[2]).abs() <= 1e-9 * w[0]);
            prop_assert!((w[1] - w[3]).abs() <= 1e-9 * w[0]);
        }
    }

    #[test]
    fn evolve_zero_drive_is_identity() {
        let m = DriveModel::new(0.0, 0.0, 0.0, 0.0);
        let p = PulseSet::zero(30.0).with_flat(100.0);
        let u = evolve_pulse(&m, &p, 0.1).unwrap();
        assert!(u.max_abs_diff(&UnitaryMatrix::identity(8)) < 1e-14);
    }

    #[test]
    fn evolve_matches_closed_form_without_zz() {
        for seed in 0..20 {
            let m = random_model(seed, false);
            let p = PulseSet::zero(30.0).with_flat(123.4);
            let u = evolve_pulse(&m, &p, 0.1).unwrap();
            let closed =
                expm_hermitian(&build_hamiltonian(&m, false).scale(0.5), p.effective_duration()).unwrap();
            assert!(u.max_abs_diff(&closed) < 1e-8);
            let comm = u.matrix() * closed.matrix() - closed.matrix() * u.matrix();
            assert!(comm.iter().all(|z| z.norm() < 1e-8));
        }
    }

    #[test]
    fn evolve_converges_in_dt() {
        let alpha = 2.0 * PI / 353.0 / (32.0f64 / 5.0).sqrt();
        let m = DriveModel::itoffoli(alpha).with_zz(2.0 * PI * 96e-6, 2.0 * PI * 171e-6);
        let p = PulseSet::zero(30.0).with_flat(323.0);
        let a = evolve_pulse(&m, &p, 0.1).unwrap();
        let b = evolve_pulse(&m, &p, 0.05).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-8, "{}", a.max_abs_diff(&b));
    }

    #[test]
    fn step_too_large() {
        let m = DriveModel::itoffoli(0.01);
        let p = PulseSet::zero(30.0);
        assert!(matches!(evolve_pulse(&m, &p, 3.5), Err(Error::StepTooLarge { .. })));
        assert!(evolve_pulse(&m, &p, 3.0).is_ok());
    }

    #[test]
    fn ideal_itoffoli_examples() {
        let u = ideal_itoffoli();
        assert_eq!(u.matrix()[(basis_index(0, 1, 0), 0)], I);
        let e111 = basis_index(1, 1, 1);
        assert_eq!(u.matrix()[(e111, e111)], ONE);
        assert!(u.pow(4).max_abs_diff(&UnitaryMatrix::identity(8)) < 1e-12);
        // Truth table is a permutation.
        let moduli = u.matrix().map(|z| z.norm());
        for r in 0..8 {
            assert_eq!(moduli.row(r).sum(), 1.0);
            assert_eq!(moduli.column(r).sum(), 1.0);
        }
        assert_eq!(toffoli().matrix()[(2, 0)], ONE);
    }

    #[test]
    fn sandwich_examples() {
        let u = crate::quantum::random_haar_unitary(8, 1).unwrap();
        assert!(virtual_z_sandwich(&u, 0.0, 0.0).max_abs_diff(&u) < 1e-15);
        let phi = 0.7;
        let ry = expm_hermitian(&embed(&sigma_y(), QUBIT_T, 3), phi / 2.0).unwrap();
        let rx_plus = expm_hermitian(&embed(&sigma_x(), QUBIT_T, 3), phi / 2.0).unwrap();
        let rx_minus = expm_hermitian(&embed(&sigma_x(), QUBIT_T, 3), -phi / 2.0).unwrap();
        // Rz(-π/2) maps the y axis onto +x.
        assert!(virtual_z_sandwich(&ry, PI / 2.0, -PI / 2.0).max_abs_diff(&rx_plus) < 1e-12);
        assert!(virtual_z_sandwich(&ry, -PI / 2.0, PI / 2.0).max_abs_diff(&rx_minus) < 1e-12);
    }

    #[test]
    fn virtual_z_fit_recovers_known_angles() {
        let ideal = ideal_itoffoli();
        for (pre, post) in [(0.3, -1.1), (2.5, 2.9), (-3.0, 0.4)] {
            let u = virtual_z_sandwich(&ideal, pre, post);
            let fit = fit_virtual_z(&u);
            assert!(fit.fidelity > 1.0 - 1e-12);
            let f = entanglement_fidelity(&ideal, &virtual_z_sandwich(&u, fit.pre, fit.post)).unwrap();
            assert!(f > 1.0 - 1e-12);
        }
    }
}
