//! Recorded runs of discrete optimizers and continuous flows.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    Discrete,
    Continuous,
}

/// One recorded `(x, m, v)` triple. Vectors unused by a method are empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateSample {
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

/// Parallel arrays of sample times, losses and gradient norms, plus optional states.
///
/// A run that produced a non-finite loss stops recording: its last loss is
/// `f64::INFINITY` and `diverged` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    /// Learning rate for discrete runs, integrator step for continuous ones.
    pub step: f64,
    pub times: Vec<f64>,
    pub losses: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub states: Option<Vec<StateSample>>,
    pub diverged: bool,
    /// Number of second-moment components clipped at zero by the integrator.
    pub clip_count: usize,
    pub meta: String,
}

impl Trajectory {
    pub fn new(kind: TrajectoryKind, step: f64, record_states: bool, meta: impl Into<String>) -> Self {
        Self {
            kind,
            step,
            times: Vec::new(),
            losses: Vec::new(),
            grad_norms: Vec::new(),
            states: record_states.then(Vec::new),
            diverged: false,
            clip_count: 0,
            meta: meta.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    pub(crate) fn push(&mut self, t: f64, loss: f64, grad_norm: f64, state: impl FnOnce() -> StateSample) {
        self.times.push(t);
        self.losses.push(loss);
        self.grad_norms.push(grad_norm);
        if let Some(states) = self.states.as_mut() {
            states.push(state());
        }
    }

    pub(crate) fn mark_diverged(&mut self, t: f64, state: impl FnOnce() -> StateSample) {
        self.push(t, f64::INFINITY, f64::INFINITY, state);
        self.diverged = true;
    }

    /// Losses with the terminal divergence marker removed.
    pub fn finite_losses(&self) -> &[f64] {
        if self.diverged {
            &self.losses[..self.losses.len() - 1]
        } else {
            &self.losses
        }
    }

    pub fn final_loss(&self) -> f64 {
        self.losses.last().copied().unwrap_or(f64::NAN)
    }

    pub fn last_x(&self) -> Option<&[f64]> {
        self.states.as_ref()?.last().map(|s| s.x.as_slice())
    }
}
