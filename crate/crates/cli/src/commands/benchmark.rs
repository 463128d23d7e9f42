use clap::ValueEnum;
use itoffoli::benchmarking::{
    cb_process_fidelity, cb_run, monte_carlo_uncertainty, ptm_tomography, truth_table, truth_table_fidelity, CbCycle, CbResult,
};
use itoffoli::drive::ideal_itoffoli;
use itoffoli::noise::{coherence_limit, decoherence_channel};
use itoffoli::quantum::{ptm_process_fidelity, PauliString, QuantumChannel};
use itoffoli::rng::derive_seed;
use serde_json::json;

use super::Context;
use crate::error::CliResult;
use crate::output::{num, write_json, Csv};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    TruthTable,
    Cb,
    Ptm,
}

pub fn benchmark(ctx: &Context, protocol: Protocol) -> CliResult<()> {
    let gate = ctx.calibrated_gate()?;
    let (channel, ideal) = ctx.gate_channel(&gate)?;
    let exact = ptm_process_fidelity(&ideal, &channel)?;
    log::info!("exact process fidelity of the simulated gate: {exact:.6}");
    match protocol {
        Protocol::TruthTable => run_truth_table(ctx, &channel, exact),
        Protocol::Cb => run_cb(ctx, &channel, exact, gate.tau),
        Protocol::Ptm => run_ptm(ctx, &channel, &ideal, exact),
    }
}

fn bits(i: usize) -> String {
    format!("{:03b}", i)
}

fn run_truth_table(ctx: &Context, channel: &QuantumChannel, exact: f64) -> CliResult<()> {
    let tc = &ctx.config.truth_table;
    let readout = tc.readout.then(|| ctx.config.device.readout());
    let seed = derive_seed(ctx.seed, 10);
    let table = truth_table(channel, tc.shots, readout.as_ref(), seed)?;
    let fidelity = truth_table_fidelity(&table);
    let expected = truth_table_fidelity(&truth_table(channel, None, readout.as_ref(), seed)?);
    let mc = match tc.shots {
        Some(shots) if tc.mc_runs >= 2 => Some(monte_carlo_uncertainty(
            |s| Ok(truth_table_fidelity(&truth_table(channel, Some(shots), readout.as_ref(), s)?)),
            tc.mc_runs,
            derive_seed(ctx.seed, 11),
        )?),
        _ => None,
    };
    let mut header = vec!["output".to_string()];
    header.extend((0..8).map(|j| format!("in_{}", bits(j))));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header)
        .meta("seed", ctx.seed)
        .meta("shots", tc.shots.map_or("exact".into(), |s| s.to_string()))
        .meta("readout_corrected", tc.readout)
        .meta("qubit_order", "c1 t c2");
    for i in 0..8 {
        let mut row = vec![bits(i)];
        row.extend((0..8).map(|j| num(table.get(i, j))));
        csv.row(row);
    }
    csv.write(&ctx.path("truth_table.csv"))?;
    write_json(
        &ctx.path("truth_table_summary.json"),
        &json!({
            "fidelity": fidelity,
            "fidelity_infinite_shots": expected,
            "monte_carlo": mc,
            "process_fidelity_exact": exact,
        }),
    )?;
    log::info!("truth-table fidelity {fidelity:.6}");
    Ok(())
}

fn run_cb(ctx: &Context, channel: &QuantumChannel, exact: f64, tau: f64) -> CliResult<()> {
    let cfg = &ctx.config;
    let twirl = decoherence_channel(&cfg.device, cfg.cb.twirl_gate_ns, false)?;
    let mut cycle = CbCycle::new(channel, &ideal_itoffoli())?.with_twirl_noise(&twirl)?;
    if cfg.cb.readout {
        cycle = cycle.with_readout(cfg.device.readout());
    }
    let cb = cfg.cb.to_config(derive_seed(ctx.seed, 20));
    let with_gate = cb_run(&cycle, &cb, true)?;
    let reference = cb_run(&cycle, &cb, false)?;
    let estimate = cb_process_fidelity(&with_gate, &reference)?;
    let mut csv = Csv::new(&[
        "pauli", "p_itoffoli", "a_itoffoli", "stderr_itoffoli", "p_reference", "a_reference", "stderr_reference",
        "ratio", "flagged",
    ])
    .meta("seed", ctx.seed)
    .meta("depths", format!("{:?}", cb.depths))
    .meta("samples_per_depth", cb.samples_per_depth)
    .meta("shots", cb.shots.map_or("exact".into(), |s| s.to_string()));
    for (a, b) in with_gate.channels.iter().zip(&reference.channels) {
        csv.row(vec![
            a.pauli.clone(),
            num(a.p),
            num(a.amplitude),
            num(a.stderr),
            num(b.p),
            num(b.amplitude),
            num(b.stderr),
            num(a.p / b.p),
            (a.flagged || b.flagged).to_string(),
        ]);
    }
    csv.write(&ctx.path("cb_channels.csv"))?;
    let block = |r: &CbResult| {
        json!({"aggregate": r.aggregate, "stderr": r.stderr, "sample_stderr": r.sample_stderr, "flagged": r.flagged})
    };
    write_json(
        &ctx.path("cb_summary.json"),
        &json!({
            "itoffoli": block(&with_gate),
            "reference": block(&reference),
            "process_fidelity": estimate,
            "process_fidelity_exact": exact,
            "coherence_limit": coherence_limit(&cfg.device, tau, false)?,
        }),
    )?;
    log::info!("CB process fidelity {:.6} (exact {exact:.6})", estimate.fidelity);
    Ok(())
}

fn run_ptm(
    ctx: &Context,
    channel: &QuantumChannel,
    ideal: &QuantumChannel,
    exact: f64,
) -> CliResult<()> {
    let pc = &ctx.config.ptm;
    let readout = pc.readout.then(|| ctx.config.device.readout());
    let result = ptm_tomography(channel, pc.shots, readout.as_ref(), derive_seed(ctx.seed, 30))?;
    let f = ptm_process_fidelity(ideal, &result.channel)?;
    let mc = match pc.shots {
        Some(shots) if pc.mc_runs >= 2 => Some(monte_carlo_uncertainty(
            |s| ptm_process_fidelity(ideal, &ptm_tomography(channel, Some(shots), readout.as_ref(), s)?.channel),
            pc.mc_runs,
            derive_seed(ctx.seed, 31),
        )?),
        _ => None,
    };
    let labels: Vec<String> = (0..64).map(|k| PauliString::from_index(k).label()).collect();
    let mut header = vec!["row"];
    header.extend(labels.iter().map(String::as_str));
    let mut csv = Csv::new(&header)
        .meta("seed", ctx.seed)
        .meta("shots", pc.shots.map_or("exact".into(), |s| s.to_string()))
        .meta("readout_corrected", pc.readout);
    let m = result.channel.ptm();
    for (i, l) in labels.iter().enumerate() {
        let mut row = vec![l.clone()];
        row.extend((0..64).map(|j| num(m[(i, j)])));
        csv.row(row);
    }
    csv.write(&ctx.path("ptm.csv"))?;
    write_json(
        &ctx.path("ptm_summary.json"),
        &json!({
            "process_fidelity": f,
            "process_fidelity_exact": exact,
            "projection_distance": result.projection_distance,
            "projection_iterations": result.projection_iterations,
            "likelihood_iterations": result.likelihood_iterations,
            "monte_carlo": mc,
        }),
    )?;
    log::info!("PTM process fidelity {f:.6} (exact {exact:.6})");
    Ok(())
}
