use clap::ValueEnum;
use itoffoli::calibration::{fit_rabi, rabi_grid, RabiSimulator};
use itoffoli::drive::ControlState;
use itoffoli::noise::tilt_from_amplitude;
use itoffoli::rng::{derive_seed, rng_from_seed};
use serde_json::json;

use super::Context;
use crate::error::CliResult;
use crate::output::{num, write_json, Csv};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ControlArg {
    #[value(name = "00")]
    C00,
    #[value(name = "01")]
    C01,
    #[value(name = "10")]
    C10,
    #[value(name = "11")]
    C11,
    All,
}

impl ControlArg {
    fn states(self) -> Vec<ControlState> {
        match self {
            ControlArg::C00 => vec![ControlState::C00],
            ControlArg::C01 => vec![ControlState::C01],
            ControlArg::C10 => vec![ControlState::C10],
            ControlArg::C11 => vec![ControlState::C11],
            ControlArg::All => ControlState::ALL.to_vec(),
        }
    }
}

fn label(c: ControlState) -> String {
    let (a, b) = c.bits();
    format!("{a}{b}")
}

/// Conditional Rabi traces of the calibrated pulses over a shared grid.
pub fn rabi(ctx: &Context, control: ControlArg) -> CliResult<()> {
    let cfg = &ctx.config;
    let gate = ctx.calibrated_gate()?;
    let sim = RabiSimulator::new(&gate.pulses, cfg.calibration_noise(), gate.dt)?;
    let slowest = gate.fitted_omegas.iter().copied().fold(f64::INFINITY, f64::min);
    let grid = rabi_grid(slowest, gate.pulses.ramp, cfg.rabi.periods, cfg.rabi.points);
    let mut csv = Csv::new(&["control", "tau_ns", "z"])
        .meta("seed", ctx.seed)
        .meta("shots", cfg.rabi.shots.map_or("exact".into(), |s| s.to_string()));
    let mut fits = serde_json::Map::new();
    let mut omega00 = None;
    for c in control.states() {
        let mut rng = rng_from_seed(derive_seed(ctx.seed, c.index() as u64));
        let trace = sim.trace(c, &grid, cfg.rabi.shots, &mut rng)?;
        for (t, z) in trace.durations.iter().zip(&trace.z_expectation) {
            csv.row(vec![label(c), num(*t), num(*z)]);
        }
        let fit = fit_rabi(&trace)?;
        if c == ControlState::C00 {
            omega00 = Some(fit.omega);
        }
        let tilt = tilt_from_amplitude(fit.amplitude.min(1.0)).ok();
        fits.insert(
            label(c),
            json!({
                "omega": fit.omega,
                "amplitude": fit.amplitude,
                "offset": fit.offset,
                "phase0": fit.phase0,
                "residual": fit.residual,
                "tilt_from_amplitude": tilt,
            }),
        );
    }
    if let Some(w00) = omega00 {
        for (key, v) in fits.iter_mut() {
            if key != "00" {
                let w = v["omega"].as_f64().unwrap_or(f64::NAN);
                v["ratio_00_over_this"] = json!(w00 / w);
            }
        }
    }
    csv.write(&ctx.path("rabi.csv"))?;
    write_json(&ctx.path("rabi_summary.json"), &json!({ "fits": fits }))?;
    Ok(())
}
