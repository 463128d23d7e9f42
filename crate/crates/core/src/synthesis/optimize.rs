use std::f64::consts::PI;

use std::collections::VecDeque;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ansatz::Objective;
use crate::error::{Error, Result};
use crate::quantum::UnitaryMatrix;
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisSettings {
    pub restarts: usize,
    /// Success when the infidelity drops below this value.
    pub threshold: f64,
    /// Quasi-Newton iterations per restart.
    pub max_iters: usize,
    /// History length of the limited-memory update.
    pub memory: usize,
    /// Close the ansatz with an extra single-qubit layer after the last gate
    /// (`m + 1` layers in total).
    pub trailing_layer: bool,
}

impl Default for SynthesisSettings {
    fn default() -> Self {
        Self {
            restarts: 20,
            threshold: 1e-8,
            max_iters: 3000,
            memory: 20,
            trailing_layer: true,
        }
    }
}

impl SynthesisSettings {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::invalid("restarts: must be >= 1"));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::invalid("threshold: must be > 0"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters: must be >= 1"));
        }
        if self.memory == 0 {
            return Err(Error::invalid("memory: must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub target_id: u64,
    pub depth: usize,
    pub best_infidelity: f64,
    pub best_params: Vec<f64>,
    pub restarts_used: usize,
    pub success: bool,
}

/// Stop once the cost is this small; far below any useful threshold.
const TARGET_COST: f64 = 1e-15;
const GRAD_TOL: f64 = 1e-13;
const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
/// Give up when the cost improved by less than `STALL_TOL` over this many
/// iterations.
const STALL_WINDOW: usize = 50;
const STALL_TOL: f64 = 1e-12;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-loop recursion: `-H g` for the limited-memory inverse Hessian.
fn lbfgs_direction(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

/// One L-BFGS run from `start` with Armijo backtracking. Returns the final
/// cost and point.
pub(crate) fn local_minimize(obj: &Objective, start: Vec<f64>, settings: &SynthesisSettings) -> (f64, Vec<f64>) {
    let mut x = start;
    let (mut f, mut g) = obj.value_and_gradient(&x);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(settings.memory);
    let mut window_start = f;
    for it in 0..settings.max_iters {
        if it % STALL_WINDOW == STALL_WINDOW - 1 {
            if window_start - f < STALL_TOL * window_start.max(1e-300) && f > TARGET_COST {
                break;
            }
            window_start = f;
        }
        if f < TARGET_COST || dot(&g, &g).sqrt() < GRAD_TOL {
            break;
        }
        let mut d = lbfgs_direction(&g, &history);
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            history.clear();
            d = g.iter().map(|gi| -gi).collect();
            slope = -dot(&g, &g);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let fnew = obj.value(&xn);
            if fnew <= f + ARMIJO_C * step * slope {
                accepted = Some(xn);
                break;
            }
            step *= 0.5;
        }
        let Some(xn) = accepted else {
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        };
        let (fn_, gn) = obj.value_and_gradient(&xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if history.len() == settings.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        f = fn_;
        g = gn;
    }
    (f, x)
}

fn random_start(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..dim).map(|_| PI - rng.random::<f64>() * 2.0 * PI).collect()
}

/// Multi-restart minimization of `1 - F(V, target)` over the ansatz with
/// `depth` copies of `gate`. Restart `r` starts from angles drawn with
/// `derive_seed(seed, r)`.
pub fn synthesize(
    target: &UnitaryMatrix,
    gate: &UnitaryMatrix,
    depth: usize,
    settings: &SynthesisSettings,
    seed: u64,
) -> Result<SynthesisResult> {
    synthesize_from(target, gate, depth, settings, seed, 0)
}

/// As [`synthesize`], with restart seeds offset by `first_restart`.
pub fn synthesize_from(
    target: &UnitaryMatrix,
    gate: &UnitaryMatrix,
    depth: usize,
    settings: &SynthesisSettings,
    seed: u64,
    first_restart: usize,
) -> Result<SynthesisResult> {
    settings.validate()?;
    if depth == 0 {
        return Err(Error::invalid("depth must be >= 1"));
    }
    let obj = Objective::new(target, gate, depth, settings.trailing_layer)?;
    let mut best = (f64::INFINITY, Vec::new());
    let mut used = 0;
    for r in 0..settings.restarts {
        used = r + 1;
        let start = random_start(obj.dim(), derive_seed(seed, (first_restart + r) as u64));
        let (f, x) = local_minimize(&obj, start, settings);
        if f < best.0 {
            best = (f, x);
        }
        if best.0 < settings.threshold {
            break;
        }
    }
    Ok(SynthesisResult {
        target_id: seed,
        depth,
        best_infidelity: best.0.max(0.0),
        success: best.0 < settings.threshold,
        best_params: best.1,
        restarts_used: used,
    })
}
