//! Discrete update rules and the full-batch run loop.
//!
//! Notation follows the convention used throughout the crate: `alpha` is the
//! second-moment factor and `beta` the first-moment factor (Adam's `β₂` and
//! `β₁` respectively). All vector operations are elementwise.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::objectives::{norm2, Objective};
use crate::trajectory::{StateSample, Trajectory, TrajectoryKind};

pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
}

impl HyperParams {
    pub fn new(eta: f64, alpha: f64, beta: f64, epsilon: f64) -> Result<Self> {
        let hp = Self { eta, alpha, beta, epsilon };
        hp.validate()?;
        Ok(hp)
    }

    /// Step size only; momentum factors zero.
    pub fn plain(eta: f64) -> Result<Self> {
        Self::new(eta, 0.0, 0.0, DEFAULT_EPSILON)
    }

    pub fn from_rates(rates: RateParams, epsilon: f64) -> Result<Self> {
        let (alpha, beta) = rates_to_momenta(rates)?;
        Self::new(rates.eta, alpha, beta, epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid(format!("eta must be positive, got {}", self.eta)));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..1.0).contains(&v) {
                return Err(invalid(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Rate parameterization `alpha = 1 − a·eta`, `beta = 1 − b·eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub a: f64,
    pub b: f64,
    pub eta: f64,
}

pub fn rates_to_momenta(rates: RateParams) -> Result<(f64, f64)> {
    let RateParams { a, b, eta } = rates;
    if !(eta > 0.0) {
        return Err(Error::InvalidRate(format!("eta must be positive, got {eta}")));
    }
    if !(a > 0.0) || !(b >= 0.0) {
        return Err(Error::InvalidRate(format!("need a > 0 and b >= 0, got a={a}, b={b}")));
    }
    if a * eta >= 1.0 || b * eta >= 1.0 {
        return Err(Error::InvalidRate(format!(
            "a·eta = {} and b·eta = {} must both be below 1",
            a * eta,
            b * eta
        )));
    }
    Ok((1.0 - a * eta, 1.0 - b * eta))
}

/// Discrete optimizer state. `t` counts completed steps.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub t: u64,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptimizerState {
    /// `m = v = 0` at `t = 0`.
    pub fn new(x: Vec<f64>) -> Self {
        let d = x.len();
        Self { t: 0, x, m: vec![0.0; d], v: vec![0.0; d] }
    }

    pub fn with_moments(x: Vec<f64>, m: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        check_dim(x.len(), m.len())?;
        check_dim(x.len(), v.len())?;
        if v.iter().any(|&vi| vi < 0.0) {
            return Err(invalid("second moment must be non-negative"));
        }
        Ok(Self { t: 0, x, m, v })
    }

    fn check(&self, grad: &[f64]) -> Result<()> {
        let d = self.x.len();
        check_dim(d, grad.len())?;
        check_dim(d, self.m.len())?;
        check_dim(d, self.v.len())
    }

    fn sample(&self) -> StateSample {
        StateSample { x: self.x.clone(), m: self.m.clone(), v: self.v.clone() }
    }
}

/// `sign` with `sign(0) = 0`.
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn gd_step(state: &mut OptimizerState, grad: &[f64], hp: &HyperParams) -> Result<()> {
    state.check(grad)?;
    for (x, g) in state.x.iter_mut().zip(grad) {
        *x -= hp.eta * g;
    }
    state.t += 1;
    Ok(())
}

pub fn signgd_step(state: &mut OptimizerState, grad: &[f64], hp: &HyperParams) -> Result<()> {
    state.check(grad)?;
    for (x, &g) in state.x.iter_mut().zip(grad) {
        *x -= hp.eta * sign(g);
    }
    state.t += 1;
    Ok(())
}

/// `v ← αv + (1−α)g²`, `x ← x − η g / (√v + ε)`. No bias correction.
pub fn rmsprop_step(state: &mut OptimizerState, grad: &[f64], hp: &HyperParams) -> Result<()> {
    state.check(grad)?;
    let a = hp.alpha;
    for ((x, v), &g) in state.x.iter_mut().zip(state.v.iter_mut()).zip(grad) {
        *v = a * *v + (1.0 - a) * (g * g);
        *x -= hp.eta * g / (v.sqrt() + hp.epsilon);
    }
    state.t += 1;
    Ok(())
}

/// Adam with bias corrections `1 − β^{t+1}` and `1 − α^{t+1}`, where `t` is
/// the number of steps already taken.
pub fn adam_step(state: &mut OptimizerState, grad: &[f64], hp: &HyperParams) -> Result<()> {
    state.check(grad)?;
    if hp.alpha >= 1.0 || hp.beta >= 1.0 {
        return Err(invalid("Adam bias correction requires alpha, beta < 1"));
    }
    let k = state.t.saturating_add(1).min(i32::MAX as u64) as i32;
    let m_corr = 1.0 - hp.beta.powi(k);
    let v_corr = 1.0 - hp.alpha.powi(k);
    let (a, b) = (hp.alpha, hp.beta);
    for i in 0..grad.len() {
        let g = grad[i];
        let v = a * state.v[i] + (1.0 - a) * (g * g);
        let m = b * state.m[i] + (1.0 - b) * g;
        state.v[i] = v;
        state.m[i] = m;
        state.x[i] -= hp.eta * (m / m_corr) / ((v / v_corr).sqrt() + hp.epsilon);
    }
    state.t += 1;
    Ok(())
}

/// Step-indexed coefficients of the generic adaptive update.
pub struct GeneralSchedules {
    pub h: Box<dyn Fn(u64) -> f64 + Send + Sync>,
    pub r: Box<dyn Fn(u64) -> f64 + Send + Sync>,
    pub p: Box<dyn Fn(u64) -> f64 + Send + Sync>,
    pub q: Box<dyn Fn(u64) -> f64 + Send + Sync>,
}

impl GeneralSchedules {
    pub fn constant(h: f64, r: f64, p: f64, q: f64) -> Self {
        Self {
            h: Box::new(move |_| h),
            r: Box::new(move |_| r),
            p: Box::new(move |_| p),
            q: Box::new(move |_| q),
        }
    }

    pub fn rmsprop(alpha: f64) -> Self {
        Self::constant(1.0, 0.0, 1.0 - alpha, alpha)
    }

    pub fn adagrad() -> Self {
        Self::constant(1.0, 0.0, 1.0, 1.0)
    }
}

impl fmt::Debug for GeneralSchedules {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GeneralSchedules {{ h(0)={}, r(0)={}, p(0)={}, q(0)={} }}",
            (self.h)(0),
            (self.r)(0),
            (self.p)(0),
            (self.q)(0)
        )
    }
}

/// `m ← h_t g + r_t m`, `v ← p_t g² + q_t v`, `x ← x − η m / (√v + ε)`.
///
/// A negative second moment is reported as an error and leaves the state untouched.
pub fn general_adaptive_step(
    state: &mut OptimizerState,
    grad: &[f64],
    schedules: &GeneralSchedules,
    eta: f64,
    epsilon: f64,
) -> Result<()> {
    state.check(grad)?;
    let t = state.t;
    let (h, r, p, q) = ((schedules.h)(t), (schedules.r)(t), (schedules.p)(t), (schedules.q)(t));
    if ![h, r, p, q].iter().all(|c| c.is_finite()) {
        return Err(Error::NonFinite("schedule coefficients"));
    }
    let v_new: Vec<f64> = grad.iter().zip(&state.v).map(|(&g, &v)| q * v + p * (g * g)).collect();
    if let Some(i) = v_new.iter().position(|&v| v < 0.0) {
        return Err(Error::NegativeSecondMoment(i));
    }
    for (i, &g) in grad.iter().enumerate() {
        let m = h * g + r * state.m[i];
        state.m[i] = m;
        state.v[i] = v_new[i];
        state.x[i] -= eta * m / (v_new[i].sqrt() + epsilon);
    }
    state.t += 1;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Gd,
    SignGd,
    RmsProp,
    Adam,
}

impl OptimizerKind {
    pub fn step(self, state: &mut OptimizerState, grad: &[f64], hp: &HyperParams) -> Result<()> {
        match self {
            OptimizerKind::Gd => gd_step(state, grad, hp),
            OptimizerKind::SignGd => signgd_step(state, grad, hp),
            OptimizerKind::RmsProp => rmsprop_step(state, grad, hp),
            OptimizerKind::Adam => adam_step(state, grad, hp),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Gd => "gd",
            OptimizerKind::SignGd => "signgd",
            OptimizerKind::RmsProp => "rmsprop",
            OptimizerKind::Adam => "adam",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub n_iters: usize,
    pub record_states: bool,
    pub m0: Option<Vec<f64>>,
    pub v0: Option<Vec<f64>>,
}

impl RunOptions {
    pub fn new(n_iters: usize) -> Self {
        Self { n_iters, ..Self::default() }
    }

    pub fn recording(mut self) -> Self {
        self.record_states = true;
        self
    }
}

/// Runs `n_iters` full-batch steps from `x0`, recording `n_iters + 1` samples
/// at times `k·eta`.
///
/// A non-finite loss or gradient ends the run with a divergence marker rather
/// than an error.
pub fn run(
    kind: OptimizerKind,
    objective: &Objective,
    x0: &[f64],
    hp: &HyperParams,
    opts: &RunOptions,
) -> Result<Trajectory> {
    if opts.n_iters < 1 {
        return Err(invalid("n_iters must be at least 1"));
    }
    hp.validate()?;
    check_dim(objective.dim(), x0.len())?;
    let d = x0.len();
    let mut state = OptimizerState::with_moments(
        x0.to_vec(),
        opts.m0.clone().unwrap_or_else(|| vec![0.0; d]),
        opts.v0.clone().unwrap_or_else(|| vec![0.0; d]),
    )?;
    let meta = format!(
        "{kind} eta={} alpha={} beta={} epsilon={}",
        hp.eta, hp.alpha, hp.beta, hp.epsilon
    );
    let mut traj = Trajectory::new(TrajectoryKind::Discrete, hp.eta, opts.record_states, meta);
    for k in 0..=opts.n_iters {
        let t = k as f64 * hp.eta;
        let (loss, grad) = match objective.eval_grad(&state.x) {
            Ok(lg) => lg,
            Err(Error::NonFinite(_)) => {
                traj.mark_diverged(t, || state.sample());
                return Ok(traj);
            }
            Err(e) => return Err(e),
        };
        traj.push(t, loss, norm2(&grad), || state.sample());
        if k < opts.n_iters {
            kind.step(&mut state, &grad, hp)?;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;

    fn state1(x: f64) -> OptimizerState {
        OptimizerState::new(vec![x])
    }

    #[test]
    fn rates_examples() {
        let (a, b) = rates_to_momenta(RateParams { a: 10.0, b: 10.0, eta: 1e-3 }).unwrap();
        assert!((a - 0.99).abs() < 1e-15 && (b - 0.99).abs() < 1e-15);
        let (a, b) = rates_to_momenta(RateParams { a: 1.0, b: 100.0, eta: 1e-3 }).unwrap();
        assert!((a - 0.999).abs() < 1e-15 && (b - 0.9).abs() < 1e-15);
        assert!(matches!(
            rates_to_momenta(RateParams { a: 1000.0, b: 0.0, eta: 1e-3 }),
            Err(Error::InvalidRate(_))
        ));
    }

    #[test]
    fn gd_examples() {
        let hp = HyperParams::plain(0.1).unwrap();
        let mut s = state1(1.0);
        gd_step(&mut s, &[3.0], &hp).unwrap();
        assert!((s.x[0] - 0.7).abs() < 1e-15);
        assert_eq!(s.t, 1);
        let mut s = state1(1.0);
        gd_step(&mut s, &[0.0], &hp).unwrap();
        assert_eq!(s.x, vec![1.0]);
        let mut s = OptimizerState::new(vec![1.0, 2.0]);
        gd_step(&mut s, &[1.0, 0.0], &HyperParams::plain(1.0).unwrap()).unwrap();
        assert_eq!(s.x, vec![0.0, 2.0]);
        assert!(matches!(gd_step(&mut s, &[1.0], &hp), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn signgd_examples() {
        let hp = HyperParams::plain(0.1).unwrap();
        let mut s = state1(1.0);
        signgd_step(&mut s, &[0.3], &hp).unwrap();
        assert!((s.x[0] - 0.9).abs() < 1e-15);
        let mut s = state1(1.0);
        signgd_step(&mut s, &[0.0], &hp).unwrap();
        assert_eq!(s.x, vec![1.0]);
        let mut s = OptimizerState::new(vec![1.0, 1.0]);
        signgd_step(&mut s, &[-5.0, 2.0], &HyperParams::plain(0.5).unwrap()).unwrap();
        assert_eq!(s.x, vec![1.5, 0.5]);
    }

    #[test]
    fn rmsprop_examples() {
        let hp = HyperParams::new(0.01, 0.9, 0.0, 1e-8).unwrap();
        let mut s = state1(1.0);
        rmsprop_step(&mut s, &[1.0], &hp).unwrap();
        // scalar reference: v = 0.1, x = 1 − 0.01/(√0.1 + 1e-8)
        let expected = 1.0 - 0.01 / (0.1f64.sqrt() + 1e-8);
        assert!((s.v[0] - 0.1).abs() < 1e-16);
        assert!((s.x[0] - expected).abs() < 1e-15);
        assert!((s.x[0] - 0.9683772).abs() < 1e-7);

        let mut s = state1(1.0);
        rmsprop_step(&mut s, &[0.0], &hp).unwrap();
        assert_eq!((s.x[0], s.v[0]), (1.0, 0.0));

        // alpha = 0 reduces to a sign step up to ε/|g|
        let hp0 = HyperParams::new(0.05, 0.0, 0.0, 1e-8).unwrap();
        for g in [-3.0, -0.2, 0.7, 5.0] {
            let mut r = state1(0.4);
            let mut sg = state1(0.4);
            rmsprop_step(&mut r, &[g], &hp0).unwrap();
            signgd_step(&mut sg, &[g], &hp0).unwrap();
            assert_eq!(r.v[0], g * g);
            assert!((r.x[0] - sg.x[0]).abs() <= 0.05 * 1e-8 / g.abs() * 1.0001);
        }
    }

    #[test]
    fn adam_examples() {
        let hp = HyperParams::new(1e-3, 0.999, 0.9, 1e-8).unwrap();
        let mut s = state1(1.0);
        adam_step(&mut s, &[1.0], &hp).unwrap();
        assert!((s.m[0] - 0.1).abs() < 1e-15);
        assert!((s.v[0] - 0.001).abs() < 1e-15);
        let expected = 1.0 - 1e-3 / (1.0 + 1e-8);
        assert!((s.x[0] - expected).abs() < 1e-14, "{}", s.x[0]);

        let mut s = state1(1.0);
        adam_step(&mut s, &[0.0], &hp).unwrap();
        assert_eq!(s.x, vec![1.0]);
    }

    #[test]
    fn general_step_recovers_adagrad() {
        let sched = GeneralSchedules::adagrad();
        let mut s = state1(0.0);
        let eps = 1e-8;
        general_adaptive_step(&mut s, &[1.0], &sched, 1.0, eps).unwrap();
        assert!((s.x[0] + 1.0 / (1.0 + eps)).abs() < 1e-12);
        let x1 = s.x[0];
        general_adaptive_step(&mut s, &[1.0], &sched, 1.0, eps).unwrap();
        assert!((s.x[0] - x1 + 1.0 / (2f64.sqrt() + eps)).abs() < 1e-12);
        assert_eq!(s.v[0], 2.0);
    }

    #[test]
    fn general_step_frozen_schedule() {
        let sched = GeneralSchedules::constant(0.0, 1.0, 0.0, 1.0);
        let mut s = OptimizerState::with_moments(vec![0.5, -1.0], vec![0.0, 0.0], vec![0.3, 0.0]).unwrap();
        let before = s.clone();
        general_adaptive_step(&mut s, &[2.0, -7.0], &sched, 0.1, 1e-8).unwrap();
        assert_eq!((s.x.clone(), s.m.clone(), s.v.clone()), (before.x, before.m, before.v));
        assert_eq!(s.t, 1);
    }

    #[test]
    fn general_step_flags_negative_v() {
        let sched = GeneralSchedules::constant(1.0, 0.0, -1.0, 0.5);
        let mut s = state1(1.0);
        let before = s.clone();
        assert_eq!(
            general_adaptive_step(&mut s, &[1.0], &sched, 0.1, 1e-8),
            Err(Error::NegativeSecondMoment(0))
        );
        assert_eq!(s, before);
    }

    #[test]
    fn run_signgd_hand_iteration() {
        let hp = HyperParams::plain(0.1).unwrap();
        let traj = run(OptimizerKind::SignGd, &Objective::ScalarQuadratic, &[1.0], &hp, &RunOptions::new(5)).unwrap();
        // x_k = 1 − 0.1k, loss = x²/2
        let expected = [0.5, 0.405, 0.32, 0.245, 0.18, 0.125];
        assert_eq!(traj.len(), 6);
        for (l, e) in traj.losses.iter().zip(expected) {
            assert!((l - e).abs() < 1e-12, "{l} vs {e}");
        }
        assert!(!traj.diverged);
    }

    #[test]
    fn run_gd_contraction() {
        let obj = Objective::quadratic(SymMatrix::identity(3)).unwrap();
        let hp = HyperParams::plain(0.1).unwrap();
        let traj = run(OptimizerKind::Gd, &obj, &[1.0, -2.0, 0.5], &hp, &RunOptions::new(10)).unwrap();
        for w in traj.losses.windows(2) {
            assert!((w[1] / w[0] - 0.81).abs() < 1e-12);
        }
    }

    #[test]
    fn run_rejects_zero_iters() {
        let hp = HyperParams::new(1e-3, 0.999, 0.9, 1e-8).unwrap();
        assert!(run(OptimizerKind::Adam, &Objective::ScalarQuadratic, &[1.0], &hp, &RunOptions::new(0)).is_err());
    }

    #[test]
    fn run_marks_divergence() {
        // GD with eta = 3 on x²/2 multiplies x by −2 each step
        let hp = HyperParams::plain(3.0).unwrap();
        let traj = run(OptimizerKind::Gd, &Objective::ScalarQuadratic, &[1.0], &hp, &RunOptions::new(5000).recording()).unwrap();
        assert!(traj.diverged);
        assert_eq!(traj.final_loss(), f64::INFINITY);
        assert!(traj.len() < 5001);
        assert_eq!(traj.times.len(), traj.len());
        assert_eq!(traj.states.as_ref().unwrap().len(), traj.len());
    }
}
