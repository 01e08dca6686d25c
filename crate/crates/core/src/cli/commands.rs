use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::config::{CompareConfig, GradCheckConfig, RunConfig, SweepFileConfig};
use super::record::{read_trajectory, write_trajectory};
use super::CliError;
use crate::analysis::{classify_regime, strictly_decreasing, ClassificationReport, ClassifierConfig, RegimeLabel};
use crate::objectives::grad_check;
use crate::optimizers::{run, RunOptions};
use crate::sweep::{emit_heatmap, run_sweep, SweepCell};

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn out_path<'a>(cli: Option<&'a Path>, cfg: Option<&'a Path>) -> Result<&'a Path, CliError> {
    cli.or(cfg).ok_or_else(|| CliError::Config("no output path: set `out` in the config or pass --out".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub final_loss: f64,
    pub label: RegimeLabel,
    pub spike_count: usize,
    pub diverged: bool,
    pub iterations: usize,
}

/// Runs the configured optimizer, writes its trajectory record and prints a summary.
pub fn cmd_run(
    mut cfg: RunConfig,
    out: Option<&Path>,
    seed: Option<u64>,
    stdout: &mut dyn Write,
) -> Result<RunSummary, CliError> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.objective = cfg.objective.with_seed(cfg.seed);
    let path = out_path(out, cfg.out.as_deref())?.to_path_buf();
    cfg.out = Some(path.clone());
    let hp = cfg.hyper.resolve(cfg.optimizer)?;
    let objective = cfg.objective.build(cfg.seed)?;
    let x0 = cfg.x0.clone().unwrap_or_else(|| objective.default_start());
    let opts = RunOptions { n_iters: cfg.n_iters, record_states: cfg.record_states, m0: None, v0: None };
    let traj = run(cfg.optimizer, &objective, &x0, &hp, &opts)?;
    let report = classify_regime(&traj, &cfg.classifier);

    let echo = serde_json::to_value(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let file = File::create(&path).map_err(io_at(&path))?;
    write_trajectory(&traj, echo, BufWriter::new(file)).map_err(io_at(&path))?;

    let summary = RunSummary {
        final_loss: traj.final_loss(),
        label: report.label,
        spike_count: report.spike_indices.len(),
        diverged: traj.diverged,
        iterations: traj.len() - 1,
    };
    writeln!(
        stdout,
        "final_loss={} label={} spikes={} diverged={}",
        summary.final_loss, summary.label, summary.spike_count, summary.diverged
    )?;
    Ok(summary)
}

/// Classifies a trajectory record and prints the report as JSON.
pub fn cmd_classify(
    path: &Path,
    classifier: Option<ClassifierConfig>,
    stdout: &mut dyn Write,
) -> Result<ClassificationReport, CliError> {
    let file = File::open(path).map_err(io_at(path))?;
    let (header, traj) = read_trajectory(BufReader::new(file))?;
    // honour the thresholds the run was classified with, if recorded
    let cfg = classifier
        .or_else(|| header.config.get("classifier").and_then(|c| serde_json::from_value(c.clone()).ok()))
        .unwrap_or_default();
    let report = classify_regime(&traj, &cfg);
    serde_json::to_writer_pretty(&mut *stdout, &report).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(stdout)?;
    Ok(report)
}

/// Runs a limit study, writes `eta,sup_distance` CSV and prints a table and verdict.
pub fn cmd_compare_ode(
    mut cfg: CompareConfig,
    out: Option<&Path>,
    seed: Option<u64>,
    stdout: &mut dyn Write,
) -> Result<Vec<crate::analysis::LimitPoint>, CliError> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let objective = cfg.objective.build(cfg.seed)?;
    let x0 = cfg.x0.clone().unwrap_or_else(|| objective.default_start());
    let study = cfg.study(x0);
    study.validate(&cfg.etas)?;
    let points = study.run(&objective, &cfg.etas)?;

    if let Some(path) = out.or(cfg.out.as_deref()) {
        let file = File::create(path).map_err(io_at(path))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(["eta", "sup_distance"]).map_err(io)?;
        for p in &points {
            let d = if p.diverged { "diverged".to_string() } else { p.sup_distance.to_string() };
            w.write_record([p.eta.to_string(), d]).map_err(io)?;
        }
        w.flush()?;
    }
    writeln!(stdout, "{:>12}  {:>14}", "eta", "sup_distance")?;
    for p in &points {
        if p.diverged {
            writeln!(stdout, "{:>12e}  {:>14}", p.eta, "diverged")?;
        } else {
            writeln!(stdout, "{:>12e}  {:>14.6e}", p.eta, p.sup_distance)?;
        }
    }
    let verdict = match strictly_decreasing(&points) {
        Some(true) => "decreasing",
        Some(false) => "not decreasing",
        None => "n/a",
    };
    writeln!(stdout, "monotonicity: {verdict}")?;
    Ok(points)
}

/// Runs the grid sweep and writes the heatmap CSV.
pub fn cmd_sweep(
    mut cfg: SweepFileConfig,
    out: Option<&Path>,
    seed: Option<u64>,
    jobs: Option<usize>,
    stdout: &mut dyn Write,
) -> Result<Vec<SweepCell>, CliError> {
    if let Some(s) = seed {
        cfg.sweep.seed = s;
    }
    let path = out_path(out, cfg.out.as_deref())?.to_path_buf();
    let cells = run_sweep(&cfg.sweep, jobs)?;
    emit_heatmap(&cells, &path).map_err(io_at(&path))?;
    for c in &cells {
        writeln!(stdout, "a={} b={} label={} log10_tail_loss={}", c.a, c.b, c.label, c.log10_tail_loss())?;
    }
    Ok(cells)
}

/// Prints the largest relative deviation of the analytic gradient from central differences.
pub fn cmd_grad_check(cfg: GradCheckConfig, seed: Option<u64>, stdout: &mut dyn Write) -> Result<f64, CliError> {
    let objective = cfg.objective.build(seed.unwrap_or(cfg.seed))?;
    let x = cfg.x.clone().unwrap_or_else(|| objective.default_start());
    let err = grad_check(&objective, &x, cfg.h)?;
    writeln!(stdout, "max_relative_error={err:e}")?;
    Ok(err)
}
