use clap::ValueEnum;
use itoffoli::drive::{ideal_itoffoli, toffoli};
use itoffoli::rng::derive_seed;
use itoffoli::synthesis::{itoffoli_delta_ratio, sweep_delta, threshold_depth, TargetKind, ThresholdResult};
use serde_json::json;

use super::Context;
use crate::config::GateChoice;
use crate::error::CliResult;
use crate::output::{num, write_json, Csv};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthesisMode {
    Thresholds,
    DeltaSweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Clifford,
    Haar,
    Both,
}

impl TargetArg {
    fn kinds(self) -> Vec<TargetKind> {
        match self {
            TargetArg::Clifford => vec![TargetKind::Clifford],
            TargetArg::Haar => vec![TargetKind::Haar],
            TargetArg::Both => vec![TargetKind::Clifford, TargetKind::Haar],
        }
    }
}

/// Ensemble seed per target kind, shared by all gates so they face the
/// same targets.
fn ensemble_seed(seed: u64, kind: TargetKind) -> u64 {
    derive_seed(seed, kind as u64)
}

pub fn synthesize(ctx: &Context, mode: SynthesisMode, targets: TargetArg) -> CliResult<()> {
    match mode {
        SynthesisMode::Thresholds => thresholds(ctx, targets),
        SynthesisMode::DeltaSweep => delta_sweep(ctx),
    }
}

fn curve_rows(csv: &mut Csv, prefix: &[String], r: &ThresholdResult) {
    for c in &r.curve {
        let mut row = prefix.to_vec();
        row.extend([
            r.kind.label().to_string(),
            c.depth.to_string(),
            c.successes.to_string(),
            c.n_targets.to_string(),
            num(c.rate),
            num(c.worst_infidelity),
        ]);
        csv.row(row);
    }
}

fn thresholds(ctx: &Context, targets: TargetArg) -> CliResult<()> {
    let s = &ctx.config.synthesis;
    let mut csv = Csv::new(&["gate", "target_kind", "m", "successes", "n_targets", "success_rate", "worst_infidelity"])
        .meta("seed", ctx.seed)
        .meta("trailing_layer", s.clifford.synthesis.trailing_layer);
    let mut summary = Vec::new();
    for gate in &s.gates {
        let g = match gate {
            GateChoice::Itoffoli => ideal_itoffoli(),
            GateChoice::Toffoli => toffoli(),
        };
        for kind in targets.kinds() {
            let settings = match kind {
                TargetKind::Clifford => &s.clifford,
                TargetKind::Haar => &s.haar,
            };
            log::info!("{} / {}: depths {}..={}", gate.label(), kind.label(), settings.m_start, settings.m_max);
            let r = threshold_depth(&g, kind, settings, ensemble_seed(ctx.seed, kind))?;
            curve_rows(&mut csv, &[gate.label().to_string()], &r);
            summary.push(json!({
                "gate": gate.label(),
                "target_kind": kind.label(),
                "n_targets": settings.n_targets,
                "restarts": settings.synthesis.restarts,
                "threshold": r.threshold,
                "non_monotone": r.non_monotone,
            }));
        }
    }
    csv.write(&ctx.path("synthesis_thresholds.csv"))?;
    write_json(&ctx.path("synthesis_thresholds.json"), &summary)?;
    Ok(())
}

fn delta_sweep(ctx: &Context) -> CliResult<()> {
    let gate = ctx.calibrated_gate()?;
    let s = &ctx.config.synthesis;
    let grid = s.delta_grid.values();
    let alpha = gate.model.alpha;
    log::info!("sweeping {} values of delta/alpha at alpha = {alpha:.6e}, tau = {:.3} ns", grid.len(), gate.tau);
    let points = sweep_delta(&grid, alpha, gate.tau, &s.sweep, ctx.seed)?;
    let mut csv = Csv::new(&["delta_over_alpha", "m", "target_kind", "success_rate"])
        .meta("seed", ctx.seed)
        .meta("alpha_rad_per_ns", num(alpha))
        .meta("tau_eff_ns", num(gate.tau))
        .meta("itoffoli_delta_over_alpha", num(itoffoli_delta_ratio()));
    for p in &points {
        for r in [&p.clifford, &p.haar] {
            for c in &r.curve {
                csv.row(vec![num(p.delta_over_alpha), c.depth.to_string(), r.kind.label().to_string(), num(c.rate)]);
            }
        }
    }
    csv.write(&ctx.path("delta_sweep.csv"))?;
    let best = points.iter().filter_map(|p| p.combined()).min();
    let region: Vec<f64> = points
        .iter()
        .filter(|p| best.is_some() && p.combined() == best)
        .map(|p| p.delta_over_alpha)
        .collect();
    let table: Vec<_> = points
        .iter()
        .map(|p| {
            json!({
                "delta_over_alpha": p.delta_over_alpha,
                "m_cliff": p.m_cliff,
                "m_haar": p.m_haar,
                "combined": p.combined(),
                "non_monotone": p.clifford.non_monotone || p.haar.non_monotone,
            })
        })
        .collect();
    write_json(
        &ctx.path("delta_sweep_summary.json"),
        &json!({
            "points": table,
            "lowest_combined_depth": best,
            "lowest_region_delta_over_alpha": region,
        }),
    )?;
    Ok(())
}
