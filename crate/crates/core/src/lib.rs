//! Low-rank ADI for large Lyapunov equations with low-rank initial values.
//!
//! The crate is organised bottom-up:
//!
//! * [`lowrank`]: symmetric indefinite factorizations `Z Y Z^T`, their norm and compression.
//! * [`splitting`]: dense commuting splitting schemes used to check the ADI framework.
//! * [`pencil`]: sparse pencils with an optional low-rank coefficient update and cached shifted solves.
//! * [`adi`]: the low-rank Lyapunov ADI with warm starts and real double-steps.
//! * [`shifts`]: Penzl's heuristic and projection shifts.
//! * [`newton`] and [`rosenbrock`]: outer drivers for algebraic and differential Riccati equations.
//! * [`oracle`]: dense reference solvers and Cayley radius analysis.
//! * [`problems`] and [`io`]: finite-difference test problems and Matrix Market bundles.
//! * [`experiments`]: sweeps and CSV tables; [`cli`] is the `lradi` command line on top of them.

pub mod adi;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;
pub mod lowrank;
pub mod newton;
pub mod oracle;
pub mod pencil;
pub mod problems;
pub mod rosenbrock;
pub mod shifts;
pub mod splitting;
pub mod sparse;

pub use adi::{AdiOptions, AdiOutcome, LyapunovProblem, Tolerance};
pub use error::{Error, Result};
pub use lowrank::LowRankFactor;
pub use pencil::{Pencil, ShiftedSolver};
pub use shifts::{ShiftOrder, ShiftSequence, ShiftStrategy};
