//! Information cascades on directed configuration-model graphs.
//!
//! A node that receives a message (becomes *infected*) re-broadcasts it to
//! all of its followers after an exponential delay, and loses interest
//! (*recovers*) after another. This crate provides
//!
//! * degree laws and degree sequences with stub balancing ([`degree_model`]),
//! * uniform stub matching into a directed multigraph ([`graph`]),
//! * exact event-driven simulation of the cascade ([`epidemic_sim`]),
//! * the degree-stratified mean-field ODEs ([`meanfield`]) and their
//!   no-recovery solutions ([`analytic`]),
//! * an experiment harness with CSV/SVG output ([`harness`], [`io`]).
//!
//! The deterministic solvers are generic over [`Scalar`] (`f32` or `f64`);
//! the aliases below fix the scalar for the common cases.

// `!(x > 0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod degree_model;
pub mod epidemic_sim;
pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod meanfield;
pub mod ode;
pub mod rng;
pub mod scalar;
pub mod trajectory;

pub use degree_model::{DegreeClass, DegreeSequence, MarginalSpec};
pub use epidemic_sim::NodeState;
pub use error::{Error, Result};
pub use graph::DirectedGraph;
pub use harness::{ComparisonReport, ExperimentConfig};
pub use meanfield::MeanFieldForm;
pub use scalar::Scalar;

pub type JointDegreePmf64 = degree_model::JointDegreePmf<f64>;
pub type JointDegreePmf32 = degree_model::JointDegreePmf<f32>;
pub type ClassState64 = meanfield::ClassState<f64>;
pub type ClassState32 = meanfield::ClassState<f32>;
pub type EpidemicParams64 = epidemic_sim::EpidemicParams<f64>;
pub type EpidemicParams32 = epidemic_sim::EpidemicParams<f32>;
pub type Trajectory64 = trajectory::Trajectory<f64>;
pub type Trajectory32 = trajectory::Trajectory<f32>;
