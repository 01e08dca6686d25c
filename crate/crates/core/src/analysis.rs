//! Trajectory post-processing: discrete-vs-flow distances, spike and
//! period-2 detection, regime classification, and bound checks.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flows::{integrate_rk4, lyapunov_v, signgd_pl_bound, ContinuousState, Flow, FlowKind};
use crate::objectives::Objective;
use crate::optimizers::{run, HyperParams, OptimizerKind, rates_to_momenta, RateParams, RunOptions};
use crate::trajectory::{Trajectory, TrajectoryKind};

/// Piecewise-constant interpolation of a discrete run: the state recorded at
/// the last sample time `≤ t`, held until the next one.
pub fn interpolate_pwc(traj: &Trajectory, t: f64) -> Result<&[f64]> {
    let states = traj
        .states
        .as_ref()
        .ok_or_else(|| invalid("trajectory has no recorded states"))?;
    let (first, last) = match (traj.times.first(), traj.times.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::OutOfRange("empty trajectory".into())),
    };
    if !(t >= first && t < last + traj.step) {
        return Err(Error::OutOfRange(format!("t = {t} outside [{first}, {})", last + traj.step)));
    }
    let k = traj.times.partition_point(|&s| s <= t) - 1;
    Ok(&states[k].x)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `max ‖X(t) − x(t)‖₂` over the continuous trajectory's sample times in
/// `[t₀, t₀ + horizon]`, where `X` is the piecewise-constant discrete path.
pub fn sup_distance(discrete: &Trajectory, continuous: &Trajectory, horizon: f64) -> Result<f64> {
    let states = continuous
        .states
        .as_ref()
        .ok_or_else(|| invalid("continuous trajectory has no recorded states"))?;
    let t0 = *continuous.times.first().ok_or_else(|| invalid("empty continuous trajectory"))?;
    let t_end = t0 + horizon;
    let slack = 1e-9 * horizon.max(1.0);
    let covered = |traj: &Trajectory, end: f64| {
        traj.times.last().is_some_and(|&t| t + end >= t_end - slack)
    };
    if continuous.diverged || !covered(continuous, 0.0) {
        return Err(Error::OutOfRange("continuous trajectory does not cover the horizon".into()));
    }
    if discrete.diverged || !covered(discrete, discrete.step) {
        return Err(Error::OutOfRange("discrete trajectory does not cover the horizon".into()));
    }
    let mut worst: f64 = 0.0;
    for (&t, s) in continuous.times.iter().zip(states) {
        if t > t_end + slack {
            break;
        }
        let t = t.min(t_end);
        worst = worst.max(dist2(interpolate_pwc(discrete, t)?, &s.x));
    }
    Ok(worst)
}

/// How the momentum factors scale as the learning rate shrinks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum LimitMode {
    /// `alpha`, `beta` held fixed; the limit is the normalized-gradient flow.
    #[serde(alias = "prop1")]
    FixedMomentum { alpha: f64, #[serde(default)] beta: f64 },
    /// `alpha = 1 − a·eta`, `beta = 1 − b·eta`; the limit is the RMSprop or Adam flow.
    #[serde(alias = "prop2")]
    ScaledMomentum { a: f64, #[serde(default)] b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitStudy {
    pub optimizer: OptimizerKind,
    pub mode: LimitMode,
    pub epsilon: f64,
    pub x0: Vec<f64>,
    pub horizon: f64,
    /// Integrator step is `eta / h_ratio`.
    pub h_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitPoint {
    pub eta: f64,
    /// `NaN` when either run diverged.
    pub sup_distance: f64,
    pub diverged: bool,
}

impl LimitStudy {
    fn hyper(&self, eta: f64) -> Result<HyperParams> {
        match self.mode {
            LimitMode::FixedMomentum { alpha, beta } => HyperParams::new(eta, alpha, beta, self.epsilon),
            LimitMode::ScaledMomentum { a, b } => {
                if self.optimizer == OptimizerKind::Adam {
                    HyperParams::from_rates(RateParams { a, b, eta }, self.epsilon)
                } else {
                    let (alpha, _) = rates_to_momenta(RateParams { a, b: 0.0, eta })?;
                    HyperParams::new(eta, alpha, 0.0, self.epsilon)
                }
            }
        }
    }

    fn flow_kind(&self) -> Result<FlowKind> {
        Ok(match (self.mode, self.optimizer) {
            (LimitMode::FixedMomentum { .. }, OptimizerKind::RmsProp | OptimizerKind::Adam) => {
                FlowKind::NormalizedGrad { epsilon: self.epsilon }
            }
            (LimitMode::ScaledMomentum { a, .. }, OptimizerKind::RmsProp) => {
                FlowKind::RmsPropOde { a, epsilon: self.epsilon }
            }
            (LimitMode::ScaledMomentum { a, b }, OptimizerKind::Adam) => FlowKind::AdamOde { a, b, epsilon: self.epsilon },
            (_, other) => return Err(invalid(format!("no continuous limit is defined for {other}"))),
        })
    }

    /// Validates every learning rate up front so that a bad list fails before any work.
    pub fn validate(&self, etas: &[f64]) -> Result<()> {
        if etas.is_empty() {
            return Err(invalid("need at least one learning rate"));
        }
        if etas.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(invalid("learning rates must be strictly decreasing"));
        }
        if !(self.horizon > 0.0) || !(self.h_ratio >= 1.0) {
            return Err(invalid("need horizon > 0 and h_ratio >= 1"));
        }
        self.flow_kind()?.validate()?;
        for &eta in etas {
            self.hyper(eta)?;
        }
        Ok(())
    }

    /// Runs the discrete method and its matching flow from the same `x0`
    /// (with `m0 = v0 = 0`) for each learning rate and pairs the distances.
    pub fn run(&self, objective: &Objective, etas: &[f64]) -> Result<Vec<LimitPoint>> {
        self.validate(etas)?;
        let kind = self.flow_kind()?;
        let flow = Flow::new(kind, objective)?;
        let reference = integrate_fine(&flow, &self.x0, self.horizon, etas, self.h_ratio)?;
        let mut out = Vec::with_capacity(etas.len());
        for (&eta, cont) in etas.iter().zip(reference) {
            let hp = self.hyper(eta)?;
            let n_iters = ((self.horizon / eta) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let disc = run(self.optimizer, objective, &self.x0, &hp, &RunOptions::new(n_iters).recording())?;
            let point = if disc.diverged || cont.diverged {
                LimitPoint { eta, sup_distance: f64::NAN, diverged: true }
            } else {
                LimitPoint { eta, sup_distance: sup_distance(&disc, &cont, self.horizon)?, diverged: false }
            };
            out.push(point);
        }
        Ok(out)
    }
}

fn integrate_fine(flow: &Flow<'_>, x0: &[f64], horizon: f64, etas: &[f64], h_ratio: f64) -> Result<Vec<Trajectory>> {
    etas.iter()
        .map(|&eta| integrate_rk4(flow, &ContinuousState::at_rest(x0.to_vec()), horizon, eta / h_ratio))
        .collect()
}

/// Runs a limit study; see [`LimitStudy::run`].
pub fn limit_study(objective: &Objective, study: &LimitStudy, etas: &[f64]) -> Result<Vec<LimitPoint>> {
    study.run(objective, etas)
}

/// `Some(true)` if distances strictly decrease, `None` for fewer than two
/// points or any diverged pair.
pub fn strictly_decreasing(points: &[LimitPoint]) -> Option<bool> {
    if points.len() < 2 || points.iter().any(|p| p.diverged) {
        return None;
    }
    Some(points.windows(2).all(|w| w[1].sup_distance < w[0].sup_distance))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeParams {
    pub window: usize,
    pub factor: f64,
    pub burn_in: usize,
}

impl Default for SpikeParams {
    fn default() -> Self {
        Self { window: 50, factor: 5.0, burn_in: 100 }
    }
}

fn median(buf: &mut [f64]) -> f64 {
    buf.sort_by(f64::total_cmp);
    let n = buf.len();
    if n % 2 == 1 {
        buf[n / 2]
    } else {
        0.5 * (buf[n / 2 - 1] + buf[n / 2])
    }
}

/// Indices `i > burn_in` whose loss exceeds `factor` times the median of the
/// preceding `window` losses. Runs of consecutive hits collapse to their first index.
pub fn detect_spikes(losses: &[f64], params: &SpikeParams) -> Result<Vec<usize>> {
    if params.window < 3 || !(params.factor > 1.0) {
        return Err(invalid("spike detector needs window >= 3 and factor > 1"));
    }
    let mut spikes = Vec::new();
    if losses.len() < params.burn_in + params.window {
        return Ok(spikes);
    }
    let mut buf = vec![0.0; params.window];
    let mut prev_hit = false;
    for i in (params.burn_in + 1).max(params.window)..losses.len() {
        buf.copy_from_slice(&losses[i - params.window..i]);
        let hit = losses[i] > params.factor * median(&mut buf);
        if hit && !prev_hit {
            spikes.push(i);
        }
        prev_hit = hit;
    }
    Ok(spikes)
}

/// Detects convergence to a 2-cycle: if every `‖x_{t+2} − x_t‖∞` in the tail
/// is below `tol`, returns the largest per-coordinate half-range of the tail.
pub fn detect_period2(tail: &[Vec<f64>], tol: f64) -> Option<f64> {
    if tail.len() < 10 {
        return None;
    }
    let closes = tail.windows(3).all(|w| {
        w[2].iter().zip(&w[0]).all(|(a, b)| (a - b).abs() < tol)
    });
    if !closes {
        return None;
    }
    let d = tail[0].len();
    let amplitude = (0..d)
        .map(|i| {
            let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x[i]), hi.max(x[i])));
            0.5 * (hi - lo)
        })
        .fold(0.0, f64::max);
    Some(amplitude)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeLabel {
    Spike,
    Oscillation,
    Divergence,
    Converged,
    Undetermined,
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

/// Thresholds used by [`classify_regime`]. Every report embeds the values it used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub spikes: SpikeParams,
    /// Fixed tail length; when absent the tail is `tail_fraction` of the run, at least `min_tail`.
    pub tail_window: Option<usize>,
    pub tail_fraction: f64,
    pub min_tail: usize,
    pub divergence_factor: f64,
    pub converged_ratio: f64,
    pub converged_max_alternation: f64,
    pub oscillation_min_alternation: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            spikes: SpikeParams::default(),
            tail_window: None,
            tail_fraction: 0.2,
            min_tail: 200,
            divergence_factor: 1e3,
            converged_ratio: 1e-8,
            converged_max_alternation: 0.1,
            oscillation_min_alternation: 0.5,
        }
    }
}

impl ClassifierConfig {
    pub fn tail_len(&self, n: usize) -> usize {
        let want = self
            .tail_window
            .unwrap_or_else(|| ((n as f64 * self.tail_fraction).floor() as usize).max(self.min_tail));
        want.clamp(1, n.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub label: RegimeLabel,
    pub spike_indices: Vec<usize>,
    pub tail_mean_loss: f64,
    pub alternation_rate: f64,
    pub oscillation_amplitude: f64,
    pub diagnostics: Vec<String>,
    pub config: ClassifierConfig,
}

/// Fraction of consecutive first differences that change sign.
pub fn alternation_rate(losses: &[f64]) -> f64 {
    if losses.len() < 3 {
        return 0.0;
    }
    let diffs: Vec<f64> = losses.windows(2).map(|w| w[1] - w[0]).collect();
    let flips = diffs.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    flips as f64 / (diffs.len() - 1) as f64
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Labels a loss curve. Rules apply in order, first match wins:
/// divergence, spikes in the second half, convergence, oscillation, undetermined.
pub fn classify_regime(traj: &Trajectory, cfg: &ClassifierConfig) -> ClassificationReport {
    classify_losses(&traj.losses, traj.diverged, cfg)
}

/// [`classify_regime`] on a bare loss curve.
pub fn classify_losses(losses: &[f64], diverged: bool, cfg: &ClassifierConfig) -> ClassificationReport {
    let mut diagnostics = Vec::new();
    let finite: &[f64] = if diverged && !losses.is_empty() { &losses[..losses.len() - 1] } else { losses };
    let n = finite.len();
    let report = |label, spike_indices, tail_mean_loss, alternation_rate, oscillation_amplitude, diagnostics| {
        ClassificationReport {
            label,
            spike_indices,
            tail_mean_loss,
            alternation_rate,
            oscillation_amplitude,
            diagnostics,
            config: *cfg,
        }
    };
    if n == 0 {
        let label = if diverged { RegimeLabel::Divergence } else { RegimeLabel::Undetermined };
        diagnostics.push("no finite loss samples".into());
        return report(label, vec![], f64::NAN, 0.0, 0.0, diagnostics);
    }
    if n < 500 && !diverged {
        diagnostics.push(format!("only {n} loss samples; classification is indicative"));
    }
    let tail = &finite[n - cfg.tail_len(n)..];
    let alternation = alternation_rate(tail);
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let amplitude = 0.5 * (hi - lo);
    let spikes = match detect_spikes(finite, &cfg.spikes) {
        Ok(s) => s,
        Err(e) => {
            diagnostics.push(format!("spike detection skipped: {e}"));
            vec![]
        }
    };

    if diverged {
        diagnostics.push("non-finite loss reached".into());
        return report(RegimeLabel::Divergence, spikes, f64::INFINITY, alternation, amplitude, diagnostics);
    }
    let tail_mean = mean(tail);
    let initial = finite[0];
    let running_min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let blowup = initial.max(cfg.divergence_factor * running_min);
    if tail_mean > blowup {
        diagnostics.push(format!("tail mean {tail_mean:e} exceeds max(initial, {}·min) = {blowup:e}", cfg.divergence_factor));
        return report(RegimeLabel::Divergence, spikes, tail_mean, alternation, amplitude, diagnostics);
    }
    let late: Vec<usize> = spikes.iter().copied().filter(|&i| i >= n / 2).collect();
    if !late.is_empty() {
        diagnostics.push(format!("{} spike(s) in the second half, first at {}", late.len(), late[0]));
        if late.len() > 1 {
            let gaps: Vec<usize> = late.windows(2).map(|w| w[1] - w[0]).collect();
            diagnostics.push(format!("spike spacing min {} max {}", gaps.iter().min().unwrap(), gaps.iter().max().unwrap()));
        }
        return report(RegimeLabel::Spike, spikes, tail_mean, alternation, amplitude, diagnostics);
    }
    if (tail_mean < cfg.converged_ratio * initial || tail_mean == 0.0) && alternation < cfg.converged_max_alternation {
        diagnostics.push(format!("tail mean {tail_mean:e} below {}·initial", cfg.converged_ratio));
        return report(RegimeLabel::Converged, spikes, tail_mean, alternation, amplitude, diagnostics);
    }
    if alternation >= cfg.oscillation_min_alternation {
        diagnostics.push(format!("alternation rate {alternation:.3} with half-range {amplitude:e}"));
        return report(RegimeLabel::Oscillation, spikes, tail_mean, alternation, amplitude, diagnostics);
    }
    diagnostics.push(format!("alternation rate {alternation:.3}; no rule matched"));
    report(RegimeLabel::Undetermined, spikes, tail_mean, alternation, amplitude, diagnostics)
}

/// Largest excess `f(x(t)) − bound(t)` of a signGD-flow trajectory over the
/// PL bound. Non-positive means the bound held at every sample.
pub fn check_pl_bound(traj: &Trajectory, f0: f64, mu: f64) -> f64 {
    let t0 = traj.times.first().copied().unwrap_or(0.0);
    traj.times
        .iter()
        .zip(traj.finite_losses())
        .map(|(&t, &f)| f - signgd_pl_bound(f0, mu, t - t0))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest increase of `V(t, z(t))` between consecutive samples with `t ≥ t_min`
/// along an Adam-flow trajectory, clamped below at zero.
pub fn check_lyapunov(traj: &Trajectory, a: f64, b: f64, epsilon: f64, t_min: f64) -> Result<f64> {
    if !(t_min > 0.0) {
        return Err(Error::Singular("t_min must be positive; U vanishes at t = 0".into()));
    }
    if traj.kind != TrajectoryKind::Continuous {
        return Err(invalid("Lyapunov check needs a continuous trajectory"));
    }
    let states = traj.states.as_ref().ok_or_else(|| invalid("trajectory has no recorded states"))?;
    let losses = traj.finite_losses();
    let mut prev: Option<f64> = None;
    let mut worst: f64 = 0.0;
    for ((&t, s), &f) in traj.times.iter().zip(states).zip(losses) {
        if t < t_min {
            continue;
        }
        let v = lyapunov_v(t, s, a, b, epsilon, f)?;
        if let Some(p) = prev {
            worst = worst.max(v - p);
        }
        prev = Some(v);
    }
    Ok(worst)
}
