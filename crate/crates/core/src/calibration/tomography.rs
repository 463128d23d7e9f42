use serde::{Deserialize, Serialize};

use super::rabi::{fit_rabi, rabi_grid, RabiSimulator, RabiTrace};
use crate::drive::{conditional_rabi_frequencies, ControlState, PulseSet, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::noise::DeviceNoiseModel;

/// Fit residual above which the dynamics are not a fixed-axis rotation.
pub const ROTATION_RESIDUAL_LIMIT: f64 = 1e-2;

/// Interaction coefficients (rad/ns) in the convention of the drive
/// Hamiltonian.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianCoefficients {
    pub zx: f64,
    pub zy: f64,
    pub ix: f64,
    pub iy: f64,
    pub xz: f64,
    pub yz: f64,
    /// Mean conditional `Z_t` field.
    pub iz: f64,
}

/// Rotation vector `h = Ω n` of one control state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationFit {
    pub field: [f64; 3],
    pub residual: f64,
}

fn fit_rotation(sim: &RabiSimulator, control: ControlState, expected: f64, points: usize) -> Result<RotationFit> {
    let expected = expected.max(1e-6);
    let durations = rabi_grid(expected, sim.ramp(), 2.0, points);
    let bloch: Vec<[f64; 3]> = durations
        .iter()
        .map(|t| sim.bloch(control, *t))
        .collect::<Result<_>>()?;
    let z: Vec<f64> = bloch.iter().map(|b| b[2]).collect();
    let zfit = fit_rabi(&RabiTrace::new(control, durations.clone(), z)?)?;
    let (omega, phase0) = (zfit.omega, zfit.phase0);
    // X = nz nx (1 - c) + ny s;  Y = nz ny (1 - c) - nx s.
    let basis: Vec<(f64, f64)> = durations
        .iter()
        .map(|t| {
            let (s, c) = (omega * t + phase0).sin_cos();
            (1.0 - c, s)
        })
        .collect();
    let regress = |k: usize| -> (f64, f64) {
        let (mut aa, mut ab, mut bb, mut ay, mut by) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((u, v), b) in basis.iter().zip(&bloch) {
            aa += u * u;
            ab += u * v;
            bb += v * v;
            ay += u * b[k];
            by += v * b[k];
        }
        let det = aa * bb - ab * ab;
        ((ay * bb - by * ab) / det, (by * aa - ay * ab) / det)
    };
    let (a1, b1) = regress(0);
    let (a2, b2) = regress(1);
    let nx = -b2;
    let ny = b1;
    let inplane = nx * nx + ny * ny;
    if inplane < 1e-12 {
        return Err(Error::NonRotational(f64::INFINITY));
    }
    let nz = (a1 * nx + a2 * ny) / inplane;
    let norm = (inplane + nz * nz).sqrt();
    let n = [nx / norm, ny / norm, nz / norm];
    let mut rss = 0.0;
    for ((u, v), b) in basis.iter().zip(&bloch) {
        let c = 1.0 - u;
        let pred = [
            n[2] * n[0] * u + n[1] * v,
            n[2] * n[1] * u - n[0] * v,
            n[2] * n[2] * u + c,
        ];
        rss += (0..3).map(|k| (pred[k] - b[k]).powi(2)).sum::<f64>();
    }
    let residual = (rss / (3 * bloch.len()) as f64).sqrt();
    if residual > ROTATION_RESIDUAL_LIMIT {
        return Err(Error::NonRotational(residual));
    }
    Ok(RotationFit {
        field: n.map(|v| v * omega),
        residual,
    })
}

/// Target rotation vectors for every control state, ordered `00, 01, 10, 11`.
pub fn conditional_rotations(
    pulses: &PulseSet,
    noise: Option<&DeviceNoiseModel>,
    dt: f64,
) -> Result<[RotationFit; 4]> {
    let sim = RabiSimulator::new(pulses, noise, dt)?;
    let expected = conditional_rabi_frequencies(sim.model());
    let fits: Vec<RotationFit> = ControlState::ALL
        .iter()
        .map(|c| fit_rotation(&sim, *c, expected[c.index()], 64))
        .collect::<Result<_>>()?;
    Ok([fits[0], fits[1], fits[2], fits[3]])
}

/// Combines the four conditional rotation vectors into interaction terms.
pub fn coefficients_from_fields(h: &[[f64; 3]; 4]) -> HamiltonianCoefficients {
    let q = |k: usize, s: [f64; 4]| (0..4).map(|i| s[i] * h[i][k]).sum::<f64>() / 4.0;
    let c1 = [1.0, 1.0, -1.0, -1.0];
    let c2 = [1.0, -1.0, 1.0, -1.0];
    let id = [1.0; 4];
    HamiltonianCoefficients {
        zx: q(0, c1),
        zy: q(1, c1),
        ix: q(0, id),
        iy: q(1, id),
        xz: q(0, c2),
        yz: q(1, c2),
        iz: q(2, id),
    }
}

/// Hamiltonian tomography of the pulse set without static ZZ.
pub fn hamiltonian_tomography(pulses: &PulseSet) -> Result<HamiltonianCoefficients> {
    hamiltonian_tomography_with(pulses, None, DEFAULT_DT)
}

pub fn hamiltonian_tomography_with(
    pulses: &PulseSet,
    noise: Option<&DeviceNoiseModel>,
    dt: f64,
) -> Result<HamiltonianCoefficients> {
    let fits = conditional_rotations(pulses, noise, dt)?;
    Ok(coefficients_from_fields(&fits.map(|f| f.field)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::hamiltonian_from_pulses;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn pulses(a: f64, phi: f64) -> PulseSet {
        PulseSet {
            a_c1: a,
            a_c2: 0.8 * a,
            a_t_x: 0.6 * a,
            a_t_y: 1.5 * a,
            phi_c1: phi,
            phi_c2: phi,
            ramp: 30.0,
            flat: 0.0,
        }
    }

    #[test]
    fn zero_phase_has_no_zy() {
        let c = hamiltonian_tomography(&pulses(0.01, 0.0)).unwrap();
        assert!(c.zy.abs() < 1e-4);
        assert!((c.zx - 0.01).abs() < 2e-4);
    }

    #[test]
    fn phase_gives_zy() {
        let c = hamiltonian_tomography(&pulses(0.01, 0.3)).unwrap();
        let expected = 0.01 * 0.3f64.sin();
        assert!((c.zy / expected - 1.0).abs() < 0.02, "{} vs {expected}", c.zy);
    }

    #[test]
    fn random_pulse_sets_match_construction() {
        let mut rng = rng_from_seed(77);
        for _ in 0..100 {
            let p = PulseSet {
                a_c1: rng.random_range(0.004..0.02),
                a_c2: rng.random_range(0.004..0.02),
                a_t_x: rng.random_range(0.004..0.02),
                a_t_y: rng.random_range(0.004..0.03),
                phi_c1: rng.random_range(-0.5..0.5),
                phi_c2: rng.random_range(-0.5..0.5),
                ramp: 30.0,
                flat: 0.0,
            };
            let m = hamiltonian_from_pulses(&p);
            let c = hamiltonian_tomography_with(&p, None, 0.2).unwrap();
            let scale = [m.alpha, m.beta, m.gamma, m.delta].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (got, want) in [
                (c.zx, m.alpha),
                (c.xz, m.beta),
                (c.ix, m.gamma),
                (c.iy, m.delta),
                (c.zy, m.zy_c1),
                (c.yz, m.zy_c2),
            ] {
                assert!((got - want).abs() <= 0.02 * want.abs().max(0.05 * scale), "{got} vs {want}");
            }
        }
    }
}
