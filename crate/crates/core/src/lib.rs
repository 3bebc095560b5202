//! Boundary-condition shift laboratory for learned Poisson solvers.
//!
//! The crate generates ground truth for `-Δu = f` on the unit square with
//! Dirichlet data on the left/bottom edges and Neumann data on the right/top
//! edges, trains a small Fourier neural operator on it, and evaluates how the
//! trained model behaves when the boundary distribution moves.
//!
//! Module map:
//!
//! * [`grid`]: node-centered grid, scalar fields, edge functions.
//! * [`rng`] and [`sampling`]: reproducible boundary and forcing samplers.
//! * [`solver`]: batched Jacobi ground-truth generator.
//! * [`fno`]: the neural operator, its reverse-mode gradients, Adam, training.
//! * [`metrics`]: relative L² error and batch statistics.
//! * [`data`]: in-memory datasets assembled from the samplers and the solver.
//! * [`experiments`]: cross-distribution, shift sweep, bandwidth sweep and
//!   conditional-expectation protocols.
//! * [`io`]: binary dataset/checkpoint/field formats, run configuration, reports.

pub mod data;
pub mod error;
pub mod experiments;
pub mod fno;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod rng;
pub mod sampling;
pub mod selftest;
pub mod solver;

pub use error::{LabError, Result};
pub use grid::{BoundarySpec, EdgeFunction, Field2D, Grid};

/// How batch work (solves, per-sample evaluation) is scheduled.
///
/// Both modes produce identical results; randomness is bound to stream
/// indices, never to the schedule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    #[default]
    Serial,
    /// Use the ambient rayon pool.
    Rayon,
}

impl Parallelism {
    pub fn from_flag(parallel: bool) -> Self {
        if parallel {
            Parallelism::Rayon
        } else {
            Parallelism::Serial
        }
    }

    /// Maps `f` over `items` preserving order.
    pub(crate) fn map<I, O, F>(self, items: &[I], f: F) -> Vec<O>
    where
        I: Sync,
        O: Send,
        F: Fn(&I) -> O + Sync + Send,
    {
        use rayon::prelude::*;
        match self {
            Parallelism::Serial => items.iter().map(f).collect(),
            Parallelism::Rayon => items.par_iter().map(f).collect(),
        }
    }
}
