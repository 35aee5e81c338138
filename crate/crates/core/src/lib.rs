//! Simulator and compiler for superconducting-nanowire spiking neural networks.
//!
//! The crate is organised around the lifecycle of a network:
//!
//! * [`circuit`] — element-level types and the state equations of the
//!   nanowire neuron and hTron synapse, including the hysteretic switching
//!   rule and the current-dependent kinetic inductance.
//! * [`graph`] — network description (neurons, synapses, input drives) and
//!   assembly into one flat coupled state system.
//! * [`integrator`] — hybrid ODE integration: adaptive Runge–Kutta between
//!   switching events, bisection event localisation, discrete flag updates,
//!   plus a fixed-step Euler oracle for cross-checking.
//! * [`translate`] — compiles leaky integrate-and-fire or compositional
//!   model parameters into circuit parameters, with realizability checks.
//! * [`analysis`] — spike extraction, firing rates, least-squares error,
//!   and tunability sweeps.
//! * [`solvers`] — application layer: linear-system solving by firing
//!   rates and Boolean AND/OR gate networks.
//!
//! Units are fixed throughout: time in ns, current in µA, inductance in nH,
//! resistance in Ω (hence voltage in µV). These are mutually consistent, so
//! no conversion constants appear in the state equations.

pub mod analysis;
pub mod circuit;
pub mod error;
pub mod graph;
pub mod integrator;
pub mod solvers;
pub mod translate;

mod parallel;

pub use error::{Error, Result};
