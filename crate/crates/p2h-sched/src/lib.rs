//! Scheduling engine for industrial power-to-hydrogen plants.
//!
//! Models the process dynamics of alkaline electrolyzers (temperature,
//! hydrogen-to-oxygen impurity crossover, voltage limits), assembles a
//! process-aware mixed-integer linear scheduling model, drives an external
//! MILP solver through the MPS interchange format, and validates resulting
//! schedules against nonlinear forward simulation.

pub mod cli;
mod hull;
pub mod schedule;
pub mod solve;
pub mod milp;
pub mod mps;
pub mod oracle;
pub mod physics;
pub mod scenario;
pub mod surface;
pub mod validate;

pub use physics::{ElectrolyzerParams, ElectrolyzerState, OpState, StepInputs};
pub use surface::HalfspaceSet;
