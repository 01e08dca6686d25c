//! RMSprop, Adam and signGD, their continuous-time limits, and tooling to
//! compare them and classify the late-phase behaviour of training curves.
//!
//! * [`objectives`]: quadratic, linear and small-MLP objectives with exact gradients.
//! * [`optimizers`]: discrete update rules and the full-batch run loop.
//! * [`flows`]: the limiting ODEs, an RK4 integrator, Lyapunov and PL-bound evaluators.
//! * [`analysis`]: discrete-vs-flow distances, spike/2-cycle detection, regime labels.
//! * [`sweep`]: `(a, b)` grid sweeps and heatmap CSV output.
//! * [`cli`]: configuration files, the trajectory record format and subcommands.

pub mod analysis;
pub mod cli;
pub mod descriptor;
pub mod error;
pub mod flows;
pub mod linalg;
pub mod objectives;
pub mod optimizers;
pub mod rng;
pub mod sweep;
pub mod trajectory;

pub use error::{Error, Result};
pub use trajectory::{StateSample, Trajectory, TrajectoryKind};
