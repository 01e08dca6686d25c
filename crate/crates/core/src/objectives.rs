//! Differentiable objectives with exact gradients.

mod mlp;

pub use mlp::{Dataset, Mlp};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::SymMatrix;
use crate::rng;

/// An objective `f` together with its analytic gradient.
#[derive(Debug, Clone)]
pub enum Objective {
    /// `f(x) = x²/2` in one dimension.
    ScalarQuadratic,
    /// `f(x) = ½ xᵀAx` with `A` symmetric positive semidefinite.
    Quadratic(SymMatrix),
    /// `f(x) = cᵀx`.
    Linear(Vec<f64>),
    /// Mean square loss of a dense ReLU network over a fixed dataset.
    Mlp(Mlp),
}

impl Objective {
    pub fn dim(&self) -> usize {
        match self {
            Objective::ScalarQuadratic => 1,
            Objective::Quadratic(a) => a.dim(),
            Objective::Linear(c) => c.len(),
            Objective::Mlp(net) => net.param_count(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let f = match self {
            Objective::ScalarQuadratic => 0.5 * x[0] * x[0],
            Objective::Quadratic(a) => 0.5 * dot(x, &a.mul_vec(x)),
            Objective::Linear(c) => dot(c, x),
            Objective::Mlp(net) => net.loss(x),
        };
        finite(f, "objective value")
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval_grad(x)?.1)
    }

    /// Loss and gradient in one pass.
    pub fn eval_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(self.dim(), x.len())?;
        let (f, g) = match self {
            Objective::ScalarQuadratic => (0.5 * x[0] * x[0], vec![x[0]]),
            Objective::Quadratic(a) => {
                let g = a.mul_vec(x);
                (0.5 * dot(x, &g), g)
            }
            Objective::Linear(c) => (dot(c, x), c.clone()),
            Objective::Mlp(net) => net.loss_grad(x),
        };
        finite(f, "objective value")?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        Ok((f, g))
    }

    /// A natural starting point: network initialization for `Mlp`, all ones otherwise.
    pub fn default_start(&self) -> Vec<f64> {
        match self {
            Objective::Mlp(net) => net.init_params(),
            other => vec![1.0; other.dim()],
        }
    }

    pub fn quadratic(a: SymMatrix) -> Result<Self> {
        if a.eigenvalues()?[0] < -1e-10 {
            return Err(invalid("quadratic matrix must be positive semidefinite"));
        }
        Ok(Objective::Quadratic(a))
    }

    pub fn linear(c: Vec<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(invalid("linear objective needs at least one coefficient"));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear coefficients"));
        }
        Ok(Objective::Linear(c))
    }
}

fn finite(f: f64, what: &'static str) -> Result<f64> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `½ xᵀ(UUᵀ)x` with `U` a `d × d` matrix of i.i.d. standard normals.
pub fn random_quadratic(d: usize, seed: u64) -> Result<Objective> {
    if d < 1 {
        return Err(invalid("dimension must be at least 1"));
    }
    let u = rng::normal_vec(&mut rng::seeded(seed), d * d);
    Ok(Objective::Quadratic(SymMatrix::gram(d, &u)))
}

/// One unit-variance Gaussian cluster per class around a mean drawn from
/// `N(0, 4I)`, with one-hot targets. Samples are grouped by class.
pub fn synthetic_blobs(n_per_class: usize, d: usize, n_classes: usize, seed: u64) -> Result<Dataset> {
    if n_per_class < 1 || d < 1 || n_classes < 1 {
        return Err(invalid("blob sizes must all be at least 1"));
    }
    let mut r = rng::seeded(seed);
    let means: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| rng::normal_vec(&mut r, d).into_iter().map(|v| 2.0 * v).collect())
        .collect();
    let n = n_per_class * n_classes;
    let mut inputs = Vec::with_capacity(n * d);
    let mut targets = vec![0.0; n * n_classes];
    for (class, mean) in means.iter().enumerate() {
        for s in 0..n_per_class {
            inputs.extend(mean.iter().map(|m| m + rng::standard_normal(&mut r)));
            targets[(class * n_per_class + s) * n_classes + class] = 1.0;
        }
    }
    Dataset::new(n, d, inputs, n_classes, targets)
}

/// Largest relative deviation between the analytic gradient and central
/// differences with step `h`, each coordinate scaled by `max(1, |analytic|)`.
pub fn grad_check(objective: &Objective, x: &[f64], h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    let g = objective.grad(x)?;
    let mut probe = x.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = objective.eval(&probe)?;
        probe[i] = x[i] - h;
        let fm = objective.eval(&probe)?;
        probe[i] = x[i];
        let fd = (fp - fm) / (2.0 * h);
        let err = (g[i] - fd).abs() / g[i].abs().max(1.0);
        if !err.is_finite() {
            return Err(Error::NonFinite("finite-difference quotient"));
        }
        worst = worst.max(err);
    }
    Ok(worst)
}

/// PL constant `μ = 2 λ_min(A)` of `f(x) = ½ xᵀAx`, so that `‖∇f‖² ≥ μ f`.
pub fn quadratic_pl_constant(objective: &Objective) -> Result<f64> {
    match objective {
        Objective::Quadratic(a) => Ok(2.0 * a.eigenvalues()?[0]),
        Objective::ScalarQuadratic => Ok(2.0),
        _ => Err(invalid("PL constant is only defined here for quadratic objectives")),
    }
}
