use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::root::brent_minimize;
use crate::drive::{basis_index, hamiltonian_from_pulses, ControlState, DriveModel, PulseEvolution, PulseSet, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::noise::{decay_parameters, DeviceNoiseModel};
use crate::quantum::C64;
use crate::rng::{rng_from_seed, sample_binomial, Rng};

/// Target `<Z>` versus effective pulse duration for one control state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiTrace {
    pub control: ControlState,
    pub durations: Vec<f64>,
    pub z_expectation: Vec<f64>,
}

impl RabiTrace {
    pub fn new(control: ControlState, durations: Vec<f64>, z_expectation: Vec<f64>) -> Result<Self> {
        if durations.len() != z_expectation.len() {
            return Err(Error::DimensionMismatch(durations.len(), z_expectation.len()));
        }
        if durations.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("durations must be strictly increasing"));
        }
        Ok(Self {
            control,
            durations,
            z_expectation,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiFit {
    pub omega: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub phase0: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

/// Conditional Rabi experiments for one pulse setting. Durations are
/// effective durations (`flat + ramp`), so they start at the ramp length.
#[derive(Clone, Debug)]
pub struct RabiSimulator {
    evolution: PulseEvolution,
    model: DriveModel,
    noise: Option<DeviceNoiseModel>,
    ramp: f64,
}

impl RabiSimulator {
    pub fn new(pulses: &PulseSet, noise: Option<&DeviceNoiseModel>, dt: f64) -> Result<Self> {
        pulses.validate()?;
        let mut model = hamiltonian_from_pulses(pulses);
        if let Some(n) = noise {
            model = n.apply_zz(model);
        }
        Ok(Self {
            evolution: PulseEvolution::new(&model, pulses.ramp, dt)?,
            model,
            noise: noise.cloned(),
            ramp: pulses.ramp,
        })
    }

    pub fn model(&self) -> &DriveModel {
        &self.model
    }

    pub fn ramp(&self) -> f64 {
        self.ramp
    }

    /// Exact target Bloch vector after the pulse, starting from
    /// `|control> ⊗ |0>_t`, before decoherence and readout.
    pub fn bloch(&self, control: ControlState, tau_eff: f64) -> Result<[f64; 3]> {
        let u = self.evolution.unitary_effective(tau_eff)?;
        let (k, l) = control.bits();
        let col = basis_index(k, 0, l);
        let a: C64 = u.matrix()[(basis_index(k, 0, l), col)];
        let b: C64 = u.matrix()[(basis_index(k, 1, l), col)];
        let ab = a.conj() * b;
        Ok([2.0 * ab.re, 2.0 * ab.im, a.norm_sqr() - b.norm_sqr()])
    }

    /// Measured `<Z_t>`: relaxation towards `|0>` over the full pulse, then the
    /// target's assignment errors.
    fn measured_z(&self, z: f64, tau_eff: f64) -> Result<f64> {
        let Some(noise) = &self.noise else {
            return Ok(z);
        };
        let q = &noise.qubits[crate::drive::QUBIT_T];
        let total = tau_eff + self.ramp;
        let (g1, _) = decay_parameters(q.t1_us, q.t2_echo_us, total)?;
        let z = g1 + (1.0 - g1) * z;
        let p0 = (1.0 + z) / 2.0;
        let m0 = q.p00 * p0 + (1.0 - q.p11) * (1.0 - p0);
        Ok(2.0 * m0 - 1.0)
    }

    pub fn trace(
        &self,
        control: ControlState,
        durations: &[f64],
        shots: Option<u64>,
        rng: &mut Rng,
    ) -> Result<RabiTrace> {
        if durations.is_empty() {
            return Err(Error::invalid("durations must be nonempty"));
        }
        let mut z = Vec::with_capacity(durations.len());
        for &tau in durations {
            let exact = self.measured_z(self.bloch(control, tau)?[2], tau)?;
            z.push(match shots {
                Some(n) if n > 0 => {
                    let k = sample_binomial(rng, n, (1.0 + exact) / 2.0);
                    2.0 * k as f64 / n as f64 - 1.0
                }
                _ => exact,
            });
        }
        RabiTrace::new(control, durations.to_vec(), z)
    }
}

/// Conditional Rabi trace of the target. `durations` are effective durations
/// and must be at least the ramp length.
pub fn simulate_conditional_rabi(
    pulses: &PulseSet,
    noise: Option<&DeviceNoiseModel>,
    control: ControlState,
    durations: &[f64],
    shots: Option<u64>,
    seed: u64,
) -> Result<RabiTrace> {
    let sim = RabiSimulator::new(pulses, noise, DEFAULT_DT)?;
    sim.trace(control, durations, shots, &mut rng_from_seed(seed))
}

/// `n` evenly spaced effective durations covering `periods` periods of `omega`,
/// starting at the ramp length.
pub fn rabi_grid(omega: f64, ramp: f64, periods: f64, n: usize) -> Vec<f64> {
    let span = periods * 2.0 * PI / omega;
    (0..n).map(|i| ramp + span * i as f64 / (n - 1) as f64).collect()
}

/// Linear least squares of `y ≈ c0 + c1 cos(ωt) + c2 sin(ωt)`; returns the
/// coefficients and the residual sum of squares.
fn project(t: &[f64], y: &[f64], omega: f64) -> (Vector3<f64>, f64) {
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    for (ti, yi) in t.iter().zip(y) {
        let (s, c) = (omega * ti).sin_cos();
        let row = Vector3::new(1.0, c, s);
        ata += row * row.transpose();
        aty += row * *yi;
    }
    let coef = ata
        .try_inverse()
        .map(|inv| inv * aty)
        .unwrap_or_else(|| Vector3::new(y.iter().sum::<f64>() / y.len() as f64, 0.0, 0.0));
    let rss = t
        .iter()
        .zip(y)
        .map(|(ti, yi)| {
            let (s, c) = (omega * ti).sin_cos();
            (yi - coef[0] - coef[1] * c - coef[2] * s).powi(2)
        })
        .sum();
    (coef, rss)
}

/// Fits `offset + amplitude cos(ω τ + φ0)`. The frequency is initialized from
/// the peak of a least-squares spectrum and refined by a 1-D minimization of
/// the variable-projection residual.
pub fn fit_rabi(trace: &RabiTrace) -> Result<RabiFit> {
    let t = &trace.durations;
    let y = &trace.z_expectation;
    let n = t.len();
    if n < 8 {
        return Err(Error::invalid(format!("need at least 8 points, got {n}")));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let s0: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if s0 <= 1e-20 * n as f64 {
        return Err(Error::NoOscillation);
    }
    let span = t[n - 1] - t[0];
    let mut gaps: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let nyquist = PI / gaps[gaps.len() / 2];
    let step = 2.0 * PI / span / 8.0;
    let mut best = (f64::INFINITY, 0.0);
    let mut omega = 0.5 * 2.0 * PI / span;
    while omega <= nyquist {
        let (_, rss) = project(t, y, omega);
        if rss < best.0 {
            best = (rss, omega);
        }
        omega += step;
    }
    if 1.0 - best.0 / s0 < 0.5 {
        return Err(Error::NoOscillation);
    }
    let (omega, rss) = brent_minimize(
        |w| project(t, y, w).1,
        (best.1 - step).max(1e-12),
        best.1 + step,
        1e-12,
        200,
    );
    let (coef, _) = project(t, y, omega);
    let amplitude = coef[1].hypot(coef[2]);
    let mut phase0 = (-coef[2]).atan2(coef[1]);
    if phase0 <= -PI {
        phase0 += 2.0 * PI;
    }
    Ok(RabiFit {
        omega,
        amplitude,
        offset: coef[0],
        phase0,
        residual: (rss / n as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::conditional_rabi_frequencies;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn reference_pulses() -> PulseSet {
        let omega = 2.0 * PI / 353.0;
        let a = omega / (32.0f64 / 5.0).sqrt();
        PulseSet {
            a_c1: a,
            a_c2: a,
            a_t_x: a,
            a_t_y: (27.0f64 / 5.0).sqrt() * a,
            phi_c1: 0.0,
            phi_c2: 0.0,
            ramp: 30.0,
            flat: 0.0,
        }
    }

    #[test]
    fn zero_drive_is_flat() {
        let p = PulseSet::zero(30.0);
        let durations: Vec<f64> = (0..10).map(|i| 30.0 + 10.0 * i as f64).collect();
        let tr = simulate_conditional_rabi(&p, None, ControlState::C01, &durations, None, 0).unwrap();
        assert!(tr.z_expectation.iter().all(|z| (z - 1.0).abs() < 1e-14));
        assert!(matches!(fit_rabi(&tr), Err(Error::NoOscillation)));
    }

    #[test]
    fn closed_form_rabi_without_zz() {
        let p = reference_pulses();
        let w = conditional_rabi_frequencies(&hamiltonian_from_pulses(&p));
        let durations = rabi_grid(w[0], 30.0, 2.0, 64);
        let tr = simulate_conditional_rabi(&p, None, ControlState::C00, &durations, None, 0).unwrap();
        for (tau, z) in durations.iter().zip(&tr.z_expectation) {
            assert!((z - (w[0] * tau).cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn tilted_rabi_formula() {
        let p = reference_pulses();
        let noise = DeviceNoiseModel::zz_only(96.0 * 5.0, 171.0 * 5.0);
        let sim = RabiSimulator::new(&p, Some(&noise), 0.05).unwrap();
        let m = sim.model();
        let w = conditional_rabi_frequencies(m);
        let r = m.tilts()[1] / w[1];
        let durations = rabi_grid(w[1], 30.0, 2.0, 64);
        let tr = sim.trace(ControlState::C01, &durations, None, &mut rng_from_seed(0)).unwrap();
        let fit = fit_rabi(&tr).unwrap();
        assert!((fit.omega - w[1]).abs() < 1e-6 * w[1]);
        assert!((fit.amplitude - (1.0 - r * r)).abs() < 2e-3, "{} vs {}", fit.amplitude, 1.0 - r * r);
        assert!((fit.offset - r * r).abs() < 2e-3);
    }

    #[test]
    fn fit_synthetic_example() {
        let durations: Vec<f64> = (0..64).map(|i| 706.0 * i as f64 / 63.0).collect();
        let z: Vec<f64> = durations.iter().map(|t| (0.0178 * t).cos()).collect();
        let fit = fit_rabi(&RabiTrace::new(ControlState::C00, durations.clone(), z).unwrap()).unwrap();
        assert!((fit.omega - 0.0178).abs() < 1e-4);
        assert!((fit.amplitude - 1.0).abs() < 1e-3);
        // Amplitude 0.96 tilted trace.
        let z: Vec<f64> = durations.iter().map(|t| 0.04 + 0.96 * (0.0178 * t).cos()).collect();
        let fit = fit_rabi(&RabiTrace::new(ControlState::C01, durations, z).unwrap()).unwrap();
        assert!((fit.amplitude - 0.96).abs() < 0.005);
    }

    #[test]
    fn shots_are_deterministic_per_seed() {
        let p = reference_pulses();
        let d = rabi_grid(0.02, 30.0, 2.0, 32);
        let a = simulate_conditional_rabi(&p, None, ControlState::C10, &d, Some(500), 5).unwrap();
        let b = simulate_conditional_rabi(&p, None, ControlState::C10, &d, Some(500), 5).unwrap();
        assert_eq!(a, b);
        let c = simulate_conditional_rabi(&p, None, ControlState::C10, &d, Some(500), 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn tilt_round_trip_from_amplitude() {
        // Tilt ratio 0.08 on control 01 via a direct override.
        let p = reference_pulses();
        let w = conditional_rabi_frequencies(&hamiltonian_from_pulses(&p))[1];
        let delta = 0.08 * w / (1.0f64 - 0.08 * 0.08).sqrt();
        let model = hamiltonian_from_pulses(&p).with_tilts([delta, 0.0, 0.0]);
        let evo = PulseEvolution::new(&model, 30.0, 0.05).unwrap();
        let wt = conditional_rabi_frequencies(&model)[1];
        let durations = rabi_grid(wt, 30.0, 2.0, 64);
        let z: Vec<f64> = durations
            .iter()
            .map(|tau| {
                let u = evo.unitary_effective(*tau).unwrap();
                let col = basis_index(0, 0, 1);
                let a = u.matrix()[(col, col)];
                let b = u.matrix()[(basis_index(0, 1, 1), col)];
                a.norm_sqr() - b.norm_sqr()
            })
            .collect();
        let fit = fit_rabi(&RabiTrace::new(ControlState::C01, durations, z).unwrap()).unwrap();
        let r = crate::noise::tilt_from_amplitude(fit.amplitude).unwrap();
        assert!((r - 0.08).abs() < 0.005, "{r}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn fit_recovers_random_signals(seed in 0u64..1_000_000) {
            let mut rng = rng_from_seed(seed);
            let omega: f64 = rng.random_range(0.005..0.05);
            let amp: f64 = rng.random_range(0.3..1.0);
            let off: f64 = rng.random_range(-(1.0 - amp)..=(1.0 - amp));
            let ph: f64 = rng.random_range(-3.0..3.0);
            let durations = rabi_grid(omega, 30.0, rng.random_range(1.5..4.0), 64);
            let z: Vec<f64> = durations.iter().map(|t| off + amp * (omega * t + ph).cos()).collect();
            let fit = fit_rabi(&RabiTrace::new(ControlState::C00, durations, z).unwrap()).unwrap();
            prop_assert!((fit.omega / omega - 1.0).abs() < 1e-3);
            prop_assert!((fit.amplitude / amp - 1.0).abs() < 1e-3);
            prop_assert!(fit.omega >= 0.0 && fit.amplitude >= 0.0);
            prop_assert!(fit.phase0 > -PI && fit.phase0 <= PI);
        }
    }
}
