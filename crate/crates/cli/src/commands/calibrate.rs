use itoffoli::calibration::{calibrate_itoffoli, CalibratedGate, StepRecord};
use itoffoli::drive::toffoli;
use itoffoli::quantum::entanglement_fidelity;
use serde_json::json;

use super::{Context, GATE_ARTIFACT};
use crate::error::{CliError, CliResult};
use crate::output::{num, write_atomic, write_json, Csv};

fn history_csv(ctx: &Context, history: &[StepRecord]) -> CliResult<()> {
    let mut csv = Csv::new(&["outer", "step", "name", "parameter", "value", "iterations", "residual"])
        .meta("seed", ctx.seed);
    for r in history {
        csv.row(vec![
            r.outer.to_string(),
            r.step.to_string(),
            r.name.clone(),
            r.parameter.clone(),
            num(r.value),
            r.iterations.to_string(),
            num(r.residual),
        ]);
    }
    csv.write(&ctx.path("calibration_history.csv"))
}

pub fn calibrate(ctx: &Context) -> CliResult<CalibratedGate> {
    let cfg = &ctx.config;
    let a_c1 = cfg.pulse.amplitude()?;
    log::info!("calibrating with a_c1 = {a_c1:.6e} rad/ns");
    let gate = match calibrate_itoffoli(a_c1, cfg.pulse.phi_c1, cfg.calibration_noise(), ctx.seed, &cfg.calibration) {
        Ok(g) => g,
        Err(itoffoli::Error::NotConverged { iterations, history }) => {
            history_csv(ctx, &history)?;
            return Err(CliError::NotConverged(format!(
                "calibration stopped after {iterations} outer iterations; history in calibration_history.csv"
            )));
        }
        Err(e) => return Err(e.into()),
    };
    history_csv(ctx, &gate.history)?;
    write_json(&ctx.path(GATE_ARTIFACT), &gate)?;
    write_atomic(&ctx.path("calibration_report.txt"), gate.report().as_bytes())?;

    let u = gate.unitary()?;
    let matrix: Vec<Vec<[f64; 2]>> = (0..8)
        .map(|r| (0..8).map(|c| [u.matrix()[(r, c)].re, u.matrix()[(r, c)].im]).collect())
        .collect();
    let summary = json!({
        "a_c1": a_c1,
        "tau_ns": gate.tau,
        "total_duration_ns": gate.total_duration,
        "pulses": gate.pulses,
        "vz_pre": gate.vz_pre,
        "vz_post": gate.vz_post,
        "delta_over_alpha": gate.model.delta / gate.model.alpha,
        "fitted_omegas": gate.fitted_omegas,
        "ratio_errors": gate.ratio_errors(),
        "fidelity_vs_itoffoli": gate.fidelity,
        "fidelity_vs_toffoli": entanglement_fidelity(&u, &toffoli())?,
        "outer_iterations": gate.outer_iterations,
        "phase_sweep_drift": gate.phase_sweep_drift,
        "unitary_re_im": matrix,
    });
    write_json(&ctx.path("calibration_summary.json"), &summary)?;
    log::info!(
        "tau = {:.3} ns, fidelity = {:.8}, {} outer iterations",
        gate.tau,
        gate.fidelity,
        gate.outer_iterations
    );
    Ok(gate)
}
