//! Grid sweeps of full-batch Adam over the rate parameters `(a, b)`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{classify_regime, ClassifierConfig, RegimeLabel};
use crate::descriptor::ObjectiveDescriptor;
use crate::error::{invalid, Result};
use crate::objectives::Objective;
use crate::optimizers::{run, HyperParams, OptimizerKind, RateParams, RunOptions, DEFAULT_EPSILON};
use crate::rng::cell_seed;

/// Longest tail averaged for the reported cell loss.
pub const MAX_TAIL_AVERAGE: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub eta: f64,
    pub n_iters: usize,
    pub objective: ObjectiveDescriptor,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tail_window")]
    pub tail_window: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub classifier: ClassifierConfig,
}

fn default_tail_window() -> usize {
    MAX_TAIL_AVERAGE
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.a_values.is_empty() || self.b_values.is_empty() {
            return Err(invalid("sweep grid must be nonempty"));
        }
        if self.n_iters < 1 || self.tail_window < 1 {
            return Err(invalid("n_iters and tail_window must be positive"));
        }
        for &a in &self.a_values {
            for &b in &self.b_values {
                if !(b > 0.0) {
                    return Err(invalid(format!("b values must be positive, got {b}")));
                }
                HyperParams::from_rates(RateParams { a, b, eta: self.eta }, self.epsilon)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub i: usize,
    pub j: usize,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub tail_mean_loss: f64,
    pub label: RegimeLabel,
    pub spike_count: usize,
    pub diverged: bool,
    pub seed: u64,
}

impl SweepCell {
    /// `log10` of the tail mean; `+∞` for diverged cells.
    pub fn log10_tail_loss(&self) -> f64 {
        if self.diverged {
            f64::INFINITY
        } else {
            self.tail_mean_loss.log10()
        }
    }
}

/// One grid cell: Adam from the shared start `x0` with `alpha = 1 − a·eta`,
/// `beta = 1 − b·eta`.
///
/// Full-batch runs draw no randomness, so the derived cell seed only labels
/// the cell; start point and data come from the sweep seed.
pub fn run_cell(cfg: &SweepConfig, objective: &Objective, x0: &[f64], i: usize, j: usize) -> Result<SweepCell> {
    let (a, b) = (cfg.a_values[i], cfg.b_values[j]);
    let hp = HyperParams::from_rates(RateParams { a, b, eta: cfg.eta }, cfg.epsilon)?;
    let traj = run(OptimizerKind::Adam, objective, x0, &hp, &RunOptions::new(cfg.n_iters))?;
    let report = classify_regime(&traj, &cfg.classifier);
    let tail_mean_loss = if traj.diverged {
        f64::INFINITY
    } else {
        let k = cfg.tail_window.min(MAX_TAIL_AVERAGE).min(traj.len());
        traj.losses[traj.len() - k..].iter().sum::<f64>() / k as f64
    };
    Ok(SweepCell {
        i,
        j,
        a,
        b,
        alpha: hp.alpha,
        beta: hp.beta,
        tail_mean_loss,
        label: report.label,
        spike_count: report.spike_indices.len(),
        diverged: traj.diverged,
        seed: cell_seed(cfg.seed, i, j),
    })
}

/// Runs every `(a, b)` cell, in parallel when `jobs` allows, and returns the
/// cells ordered by `(a index, b index)`.
pub fn run_sweep(cfg: &SweepConfig, jobs: Option<usize>) -> Result<Vec<SweepCell>> {
    cfg.validate()?;
    let objective = cfg.objective.build(cfg.seed)?;
    let x0 = objective.default_start();
    let cells: Vec<(usize, usize)> = (0..cfg.a_values.len())
        .flat_map(|i| (0..cfg.b_values.len()).map(move |j| (i, j)))
        .collect();
    run_cells(cfg, &objective, &x0, &cells, jobs)
}

#[cfg(feature = "parallel")]
fn run_cells(
    cfg: &SweepConfig,
    objective: &Objective,
    x0: &[f64],
    cells: &[(usize, usize)],
    jobs: Option<usize>,
) -> Result<Vec<SweepCell>> {
    use rayon::prelude::*;
    let work = || -> Result<Vec<SweepCell>> {
        cells.par_iter().map(|&(i, j)| run_cell(cfg, objective, x0, i, j)).collect()
    };
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| invalid(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_cells(
    cfg: &SweepConfig,
    objective: &Objective,
    x0: &[f64],
    cells: &[(usize, usize)],
    _jobs: Option<usize>,
) -> Result<Vec<SweepCell>> {
    cells.iter().map(|&(i, j)| run_cell(cfg, objective, x0, i, j)).collect()
}

pub const HEATMAP_HEADER: [&str; 8] = ["a", "b", "alpha", "beta", "log10_tail_loss", "label", "spike_count", "diverged"];

/// Writes the heatmap CSV, rows sorted by `(a, b)`.
pub fn write_heatmap<W: Write>(cells: &[SweepCell], out: W) -> std::io::Result<()> {
    if cells.is_empty() {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty sweep grid"));
    }
    let mut sorted: Vec<&SweepCell> = cells.iter().collect();
    sorted.sort_by(|x, y| x.a.total_cmp(&y.a).then(x.b.total_cmp(&y.b)));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEATMAP_HEADER)?;
    for c in sorted {
        w.write_record([
            c.a.to_string(),
            c.b.to_string(),
            c.alpha.to_string(),
            c.beta.to_string(),
            c.log10_tail_loss().to_string(),
            c.label.to_string(),
            c.spike_count.to_string(),
            c.diverged.to_string(),
        ])?;
    }
    w.flush()
}

pub fn emit_heatmap(cells: &[SweepCell], path: &Path) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    write_heatmap(cells, std::io::BufWriter::new(file))
}
