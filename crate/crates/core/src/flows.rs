//! Continuous-time limits of the adaptive methods, a fixed-step RK4
//! integrator, the Adam-flow Lyapunov function and the signGD PL bound.

use crate::error::{check_dim, invalid, Error, Result};
use crate::objectives::{norm2, Objective};
use crate::optimizers::sign;
use crate::trajectory::{StateSample, Trajectory, TrajectoryKind};

/// Below this time the bias-corrected Adam flow uses its `t → 0⁺` limit.
pub const ADAM_T0_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowKind {
    /// `ẋ = −∇f / (|∇f| + ε)`, the fixed-momentum limit.
    NormalizedGrad { epsilon: f64 },
    /// `ẋ = −sign(∇f)`.
    SignGd,
    /// `v̇ = a(∇f² − v)`, `ẋ = −∇f / (√v + ε)`.
    RmsPropOde { a: f64, epsilon: f64 },
    /// `v̇ = a(∇f² − v)`, `ṁ = b(∇f − m)`,
    /// `ẋ = −(1−e^{−bt})⁻¹ m / (√((1−e^{−at})⁻¹ v) + ε)`.
    AdamOde { a: f64, b: f64, epsilon: f64 },
}

impl FlowKind {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(invalid(msg.to_string()));
        match *self {
            FlowKind::NormalizedGrad { epsilon } if !(epsilon > 0.0) => {
                bad("normalized-gradient flow needs epsilon > 0")
            }
            FlowKind::RmsPropOde { a, epsilon } if !(a > 0.0) || !(epsilon >= 0.0) => {
                bad("RMSprop flow needs a > 0 and epsilon >= 0")
            }
            FlowKind::AdamOde { a, b, epsilon } if !(a > 0.0) || !(b > 0.0) || !(epsilon >= 0.0) => {
                bad("Adam flow needs a, b > 0 and epsilon >= 0")
            }
            _ => Ok(()),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            FlowKind::NormalizedGrad { epsilon } => format!("normalized-grad epsilon={epsilon}"),
            FlowKind::SignGd => "signgd-flow".to_string(),
            FlowKind::RmsPropOde { a, epsilon } => format!("rmsprop-ode a={a} epsilon={epsilon}"),
            FlowKind::AdamOde { a, b, epsilon } => format!("adam-ode a={a} b={b} epsilon={epsilon}"),
        }
    }
}

/// A flow bound to the objective whose gradient drives it.
#[derive(Debug, Clone, Copy)]
pub struct Flow<'a> {
    pub kind: FlowKind,
    pub objective: &'a Objective,
}

/// State `(t, x, m, v)`. Components a flow does not evolve keep zero derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousState {
    pub t: f64,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl ContinuousState {
    /// `t = 0`, `m = v = 0`.
    pub fn at_rest(x: Vec<f64>) -> Self {
        let d = x.len();
        Self { t: 0.0, x, m: vec![0.0; d], v: vec![0.0; d] }
    }

    fn validate(&self) -> Result<()> {
        check_dim(self.x.len(), self.m.len())?;
        check_dim(self.x.len(), self.v.len())?;
        if self.v.iter().any(|&v| v < 0.0) {
            return Err(invalid("second moment must be non-negative"));
        }
        Ok(())
    }

    fn sample(&self) -> StateSample {
        StateSample { x: self.x.clone(), m: self.m.clone(), v: self.v.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

/// `1 − e^{−rt}` without cancellation for small `rt`.
fn one_minus_exp(rate: f64, t: f64) -> f64 {
    -(-rate * t).exp_m1()
}

impl<'a> Flow<'a> {
    pub fn new(kind: FlowKind, objective: &'a Objective) -> Result<Self> {
        kind.validate()?;
        Ok(Self { kind, objective })
    }

    pub fn rhs(&self, s: &ContinuousState) -> Result<StateDerivative> {
        let g = self.objective.grad(&s.x)?;
        self.rhs_with_grad(s, &g)
    }

    fn rhs_with_grad(&self, s: &ContinuousState, g: &[f64]) -> Result<StateDerivative> {
        let d = g.len();
        let zeros = || vec![0.0; d];
        let deriv = match self.kind {
            FlowKind::NormalizedGrad { epsilon } => StateDerivative {
                x: g.iter().map(|&gi| -gi / (gi.abs() + epsilon)).collect(),
                m: zeros(),
                v: zeros(),
            },
            FlowKind::SignGd => StateDerivative { x: g.iter().map(|&gi| -sign(gi)).collect(), m: zeros(), v: zeros() },
            FlowKind::RmsPropOde { a, epsilon } => StateDerivative {
                x: g.iter().zip(&s.v).map(|(&gi, &vi)| -gi / (vi.max(0.0).sqrt() + epsilon)).collect(),
                m: zeros(),
                v: g.iter().zip(&s.v).map(|(&gi, &vi)| a * (gi * gi - vi)).collect(),
            },
            FlowKind::AdamOde { a, b, epsilon } => {
                let x = if s.t < ADAM_T0_GUARD {
                    if s.m.iter().chain(&s.v).any(|&c| c != 0.0) {
                        return Err(Error::Singular(format!(
                            "Adam flow at t = {} has no defined limit unless m = v = 0",
                            s.t
                        )));
                    }
                    g.iter().map(|&gi| -gi / (gi.abs() + epsilon)).collect()
                } else {
                    let cm = one_minus_exp(b, s.t);
                    let cv = one_minus_exp(a, s.t);
                    s.m.iter()
                        .zip(&s.v)
                        .map(|(&mi, &vi)| -(mi / cm) / ((vi.max(0.0) / cv).sqrt() + epsilon))
                        .collect()
                };
                StateDerivative {
                    x,
                    m: g.iter().zip(&s.m).map(|(&gi, &mi)| b * (gi - mi)).collect(),
                    v: g.iter().zip(&s.v).map(|(&gi, &vi)| a * (gi * gi - vi)).collect(),
                }
            }
        };
        Ok(deriv)
    }
}

fn axpy(base: &ContinuousState, h: f64, k: &StateDerivative) -> ContinuousState {
    let add = |u: &[f64], du: &[f64]| u.iter().zip(du).map(|(a, b)| a + h * b).collect();
    ContinuousState { t: base.t + h, x: add(&base.x, &k.x), m: add(&base.m, &k.m), v: add(&base.v, &k.v) }
}

fn rk4_step(flow: &Flow<'_>, s: &ContinuousState, h: f64, g0: &[f64]) -> Result<ContinuousState> {
    let k1 = flow.rhs_with_grad(s, g0)?;
    let s2 = axpy(s, h / 2.0, &k1);
    let k2 = flow.rhs(&clipped(s2).0)?;
    let s3 = axpy(s, h / 2.0, &k2);
    let k3 = flow.rhs(&clipped(s3).0)?;
    let s4 = axpy(s, h, &k3);
    let k4 = flow.rhs(&clipped(s4).0)?;
    let comb = |u: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..u.len()).map(|i| u[i] + h / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i])).collect()
    };
    Ok(ContinuousState {
        t: s.t + h,
        x: comb(&s.x, &k1.x, &k2.x, &k3.x, &k4.x),
        m: comb(&s.m, &k1.m, &k2.m, &k3.m, &k4.m),
        v: comb(&s.v, &k1.v, &k2.v, &k3.v, &k4.v),
    })
}

/// Zeroes negative second-moment components; returns the number clipped.
fn clipped(mut s: ContinuousState) -> (ContinuousState, usize) {
    let mut n = 0;
    for v in s.v.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            n += 1;
        }
    }
    (s, n)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, 8 points.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// First RMSprop-flow step out of a state with `v_i = 0 ≠ ∇f_i`, where
/// `ẋ_i ≈ −sign(∇f_i)/√(a t)` is unbounded and RK4 stages are meaningless.
///
/// The gradient is frozen at its initial value over `[0, h]`, which gives
/// `v(s) = g² + (v₀ − g²)e^{−as}` in closed form and
/// `x(h) = x₀ − g ∫₀ʰ ds / (√v(s) + ε)`. The integral is evaluated after the
/// substitution `s = w²`, which removes the `s^{-1/2}` singularity.
fn rmsprop_singular_start(s: &ContinuousState, g: &[f64], a: f64, epsilon: f64, h: f64) -> ContinuousState {
    const PANELS: usize = 16;
    let w_end = h.sqrt();
    let decay = (-a * h).exp();
    let mut next = s.clone();
    for i in 0..g.len() {
        let (gi, v0) = (g[i], s.v[i]);
        if gi == 0.0 {
            next.v[i] = v0 * decay;
            continue;
        }
        let g2 = gi * gi;
        let v_at = |t: f64| g2 * one_minus_exp(a, t) + v0 * (-a * t).exp();
        let mut integral = 0.0;
        let pw = w_end / PANELS as f64;
        for p in 0..PANELS {
            let mid = (p as f64 + 0.5) * pw;
            for (node, weight) in GL8 {
                let w = mid + 0.5 * pw * node;
                integral += 0.5 * pw * weight * 2.0 * w / (v_at(w * w).sqrt() + epsilon);
            }
        }
        next.x[i] = s.x[i] - gi * integral;
        next.v[i] = g2 + (v0 - g2) * decay;
    }
    next.t = s.t + h;
    next
}

/// Classical fixed-step RK4 from `state0` to `state0.t + horizon`, sampling
/// every step. The final step is shortened to land exactly on the horizon.
///
/// Second-moment components pushed below zero are clipped and counted in
/// `clip_count`. A non-finite state ends the run with a divergence marker.
pub fn integrate_rk4(flow: &Flow<'_>, state0: &ContinuousState, horizon: f64, h: f64) -> Result<Trajectory> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid("integrator step must be positive"));
    }
    if !(horizon >= h) {
        return Err(invalid(format!("horizon {horizon} is shorter than the step {h}")));
    }
    state0.validate()?;
    check_dim(flow.objective.dim(), state0.x.len())?;
    flow.kind.validate()?;

    let n_steps = {
        let r = horizon / h;
        let n = r.round();
        if (r - n).abs() < 1e-9 * r.max(1.0) {
            n as usize
        } else {
            r.ceil() as usize
        }
    };
    let t_end = state0.t + horizon;
    let mut traj = Trajectory::new(TrajectoryKind::Continuous, h, true, flow.kind.describe());
    let mut s = state0.clone();
    let (f0, mut g) = flow.objective.eval_grad(&s.x)?;
    traj.push(s.t, f0, norm2(&g), || s.sample());

    for k in 0..n_steps {
        let step = if k + 1 == n_steps { t_end - s.t } else { h };
        let singular_start = matches!(flow.kind, FlowKind::RmsPropOde { .. })
            && s.v.iter().zip(&g).any(|(&v, &gi)| v == 0.0 && gi != 0.0);
        let next = match (flow.kind, singular_start) {
            (FlowKind::RmsPropOde { a, epsilon }, true) => rmsprop_singular_start(&s, &g, a, epsilon, step),
            _ => rk4_step(flow, &s, step, &g)?,
        };
        let (mut next, clips) = clipped(next);
        traj.clip_count += clips;
        if k + 1 == n_steps {
            next.t = t_end;
        } else {
            next.t = state0.t + (k + 1) as f64 * h;
        }
        let finite = next.x.iter().chain(&next.m).chain(&next.v).all(|c| c.is_finite());
        match (finite, flow.objective.eval_grad(&next.x)) {
            (true, Ok((f1, g1))) => {
                s = next;
                g = g1;
                traj.push(s.t, f1, norm2(&g), || s.sample());
            }
            (_, Err(e)) if !matches!(e, Error::NonFinite(_)) => return Err(e),
            _ => {
                traj.mark_diverged(next.t, || next.sample());
                return Ok(traj);
            }
        }
    }
    Ok(traj)
}

/// `U(t, v) = b(1 − e^{−bt})(√(v / (1 − e^{−at})) + ε)`, elementwise.
pub fn lyapunov_u(t: f64, v: &[f64], a: f64, b: f64, epsilon: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::Singular(format!("U is undefined at t = {t}")));
    }
    let cb = b * one_minus_exp(b, t);
    let ca = one_minus_exp(a, t);
    Ok(v.iter().map(|&vi| cb * ((vi / ca).sqrt() + epsilon)).collect())
}

/// `V(t, z) = f(x) + ½ Σᵢ mᵢ² / Uᵢ(t, v)`.
pub fn lyapunov_v(t: f64, state: &StateSample, a: f64, b: f64, epsilon: f64, f: f64) -> Result<f64> {
    let u = lyapunov_u(t, &state.v, a, b, epsilon)?;
    check_dim(state.m.len(), u.len())?;
    let mut quad = 0.0;
    for (i, (&mi, &ui)) in state.m.iter().zip(&u).enumerate() {
        if ui == 0.0 {
            return Err(Error::Singular(format!("U vanishes at coordinate {i}")));
        }
        quad += mi * mi / ui;
    }
    Ok(f + 0.5 * quad)
}

/// `V` evaluated against the objective at the sample's `x`.
pub fn lyapunov_v_at(
    t: f64,
    state: &StateSample,
    a: f64,
    b: f64,
    epsilon: f64,
    objective: &Objective,
) -> Result<f64> {
    lyapunov_v(t, state, a, b, epsilon, objective.eval(&state.x)?)
}

/// `max(0, √f₀ − (√μ/2)t)²`: the signGD-flow loss bound under a PL constant `μ`.
pub fn signgd_pl_bound(f0: f64, mu: f64, t: f64) -> f64 {
    let r = (f0.sqrt() - 0.5 * mu.sqrt() * t).max(0.0);
    r * r
}

/// Time at which the PL bound reaches zero, `2√(f₀/μ)`.
pub fn pl_hitting_time(f0: f64, mu: f64) -> f64 {
    2.0 * (f0 / mu).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;

    #[test]
    fn rhs_examples() {
        let q = Objective::ScalarQuadratic;
        let flow = Flow::new(FlowKind::SignGd, &q).unwrap();
        let d = flow.rhs(&ContinuousState::at_rest(vec![2.0])).unwrap();
        assert_eq!(d.x, vec![-1.0]);

        for a in [0.5, 3.0, 100.0] {
            let flow = Flow::new(FlowKind::RmsPropOde { a, epsilon: 1e-8 }, &q).unwrap();
            let s = ContinuousState { t: 0.3, x: vec![1.5], m: vec![0.0], v: vec![2.25] };
            assert_eq!(flow.rhs(&s).unwrap().v, vec![0.0]);
        }

        let lin = Objective::linear(vec![2.0, -0.5, 3.0]).unwrap();
        for (a, b) in [(1.0, 100.0), (10.0, 10.0), (100.0, 1.0)] {
            let flow = Flow::new(FlowKind::AdamOde { a, b, epsilon: 1e-8 }, &lin).unwrap();
            let d = flow.rhs(&ContinuousState::at_rest(vec![0.0; 3])).unwrap();
            for (dx, c) in d.x.iter().zip([2.0, -0.5, 3.0f64]) {
                assert!((dx + c / (c.abs() + 1e-8)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn adam_rhs_rejects_nonzero_moments_at_origin() {
        let q = Objective::ScalarQuadratic;
        let flow = Flow::new(FlowKind::AdamOde { a: 1.0, b: 1.0, epsilon: 1e-8 }, &q).unwrap();
        let s = ContinuousState { t: 0.0, x: vec![1.0], m: vec![0.1], v: vec![0.0] };
        assert!(matches!(flow.rhs(&s), Err(Error::Singular(_))));
    }

    #[test]
    fn signgd_flow_closed_form() {
        let q = Objective::ScalarQuadratic;
        let flow = Flow::new(FlowKind::SignGd, &q).unwrap();
        let traj = integrate_rk4(&flow, &ContinuousState::at_rest(vec![1.0]), 0.5, 1e-3).unwrap();
        let x_end = traj.last_x().unwrap()[0];
        assert!((x_end - 0.5).abs() < 1e-9, "{x_end}");
        assert!((traj.times.last().unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(traj.len(), 501);
    }

    #[test]
    fn rejects_short_horizon() {
        let q = Objective::ScalarQuadratic;
        let flow = Flow::new(FlowKind::SignGd, &q).unwrap();
        assert!(integrate_rk4(&flow, &ContinuousState::at_rest(vec![1.0]), 1e-4, 1e-3).is_err());
        assert!(integrate_rk4(&flow, &ContinuousState::at_rest(vec![1.0]), 1.0, 0.0).is_err());
    }

    #[test]
    fn rk4_fourth_order_on_smooth_rmsprop_flow() {
        // start with v > 0 so the right-hand side is smooth
        let obj = Objective::quadratic(SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap()).unwrap();
        let flow = Flow::new(FlowKind::RmsPropOde { a: 2.0, epsilon: 1e-8 }, &obj).unwrap();
        let s0 = ContinuousState { t: 0.0, x: vec![1.0, -0.7], m: vec![0.0; 2], v: vec![1.0, 1.0] };
        let end = |h: f64| integrate_rk4(&flow, &s0, 1.0, h).unwrap().last_x().unwrap().to_vec();
        let reference = end(0.1 / 16.0);
        let err = |h: f64| {
            let x = end(h);
            x.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.1), err(0.05));
        let order = (e1 / e2).log2();
        assert!(order > 3.5, "observed order {order} ({e1:e} → {e2:e})");
    }

    #[test]
    fn lyapunov_u_examples() {
        let u = lyapunov_u(1e3, &[1.0], 1.0, 2.0, 0.0).unwrap();
        assert!((u[0] - 2.0).abs() < 1e-12);
        let u = lyapunov_u(2f64.ln(), &[0.5], 1.0, 1.0, 0.0).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-15);
        assert_eq!(lyapunov_u(0.7, &[0.0, 0.0], 3.0, 2.0, 0.0).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(lyapunov_u(0.0, &[1.0], 1.0, 1.0, 0.0), Err(Error::Singular(_))));
    }

    #[test]
    fn lyapunov_v_examples() {
        let s = StateSample { x: vec![0.3], m: vec![0.0], v: vec![0.2] };
        assert_eq!(lyapunov_v(1.0, &s, 1.0, 1.0, 1e-8, 0.045).unwrap(), 0.045);
        // U = 2 reached at large t with b = 2, v = 1, ε = 0
        let s = StateSample { x: vec![0.0], m: vec![1.0], v: vec![1.0] };
        assert!((lyapunov_v(1e3, &s, 1.0, 2.0, 0.0, 0.0).unwrap() - 0.25).abs() < 1e-12);
        let s = StateSample { x: vec![0.0], m: vec![1.0], v: vec![0.0] };
        assert!(matches!(lyapunov_v(1.0, &s, 1.0, 2.0, 0.0, 0.0), Err(Error::Singular(_))));
    }

    #[test]
    fn pl_bound_examples() {
        let b = signgd_pl_bound(2.0, 2.0, 1.0);
        let expected = (2f64.sqrt() - 2f64.sqrt() / 2.0).powi(2);
        assert!((b - expected).abs() < 1e-15);
        assert!((b - 0.5).abs() < 1e-15);
        assert_eq!(signgd_pl_bound(2.0, 2.0, 2.0), 0.0);
        assert_eq!(signgd_pl_bound(2.0, 2.0, 5.0), 0.0);
        assert_eq!(signgd_pl_bound(2.0, 2.0, 0.0), 2.0f64.sqrt().powi(2));
    }
}
