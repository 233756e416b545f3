//! Symbolic-numeric engine for multicontact field theories.
//!
//! The crate builds the geometric objects of a (pre)multicontact system
//! from a Lagrangian or Hamiltonian on a coordinate chart, classifies the
//! structure, derives the dissipative field equations and integrates them.

pub mod corpus;
pub mod equations;
pub mod geometry;
pub mod hamiltonian;
pub mod invariants;
pub mod lagrangian;
pub mod simulate;
pub mod structure;
pub mod symexpr;

pub use equations::{Equation, EquationSet};
pub use geometry::{Chart, ChartSpec, Form, MultiVector, Role, Section, VectorField};
pub use invariants::{Check, CheckMatrix, Outcome};
pub use hamiltonian::{HamiltonianError, HamiltonianSystem, LegendreDual, LegendreMap};
pub use lagrangian::{LagrangianError, LagrangianSystem, Regularity};
pub use structure::{classify, Classification, Distribution, Reason, Structure, StructureError, Verdict};
pub use simulate::{Bindings, GridTrajectory, OdeSystem, OdeTrajectory, RunReport, SimulationError, WaveSystem};
pub use symexpr::{is_zero, parse, Expr, ExprError, ZeroTest};
