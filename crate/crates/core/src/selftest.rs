//! Built-in correctness checks for the solver and the operator gradients.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::fno::{encode_input, FnoConfig, FnoModel, InputEncoding, MultiField};
use crate::grid::{BoundarySpec, EdgeFunction, Field2D, Grid};
use crate::metrics::relative_l2;
use crate::rng::SampleRng;
use crate::sampling::{sample_problem, BoundaryDistribution, ForcingDistribution};
use crate::solver::{jacobi_solve, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn below(name: &str, value: f64, threshold: f64, detail: String) -> Self {
        CheckResult {
            name: name.into(),
            value,
            threshold,
            passed: value < threshold,
            detail,
        }
    }

    fn at_least(name: &str, value: f64, threshold: f64, detail: String) -> Self {
        CheckResult {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
            detail,
        }
    }
}

/// `u = sin(πx) sin(πy)`: zero Dirichlet data, `∂ₙu = -π sin(πt)` on the
/// Neumann edges, `f = 2π² u`.
pub fn manufactured_problem(grid: Grid) -> (Field2D, BoundarySpec, Field2D) {
    let f = Field2D::from_fn(grid, |x, y| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin());
    let exact = Field2D::from_fn(grid, |x, y| (PI * x).sin() * (PI * y).sin());
    let zero = EdgeFunction::constant(grid, 0.0);
    let neu = EdgeFunction::from_fn(grid, |t| -PI * (PI * t).sin());
    let bc = BoundarySpec {
        g_left: zero.clone(),
        g_bottom: zero,
        h_right: neu.clone(),
        h_top: neu,
    };
    (f, bc, exact)
}

pub fn manufactured_error(n: usize, iterations: usize) -> Result<f64> {
    let (f, bc, exact) = manufactured_problem(Grid::new(n)?);
    relative_l2(&jacobi_solve(&f, &bc, &SolverConfig::new(iterations)?)?, &exact)
}

pub const MANUFACTURED_ITERATIONS: usize = 20_000;
/// Enough sweeps for the `n = 64` iteration error to fall far below the
/// discretization error.
pub const CONVERGED_ITERATIONS: usize = 100_000;

/// Error at `n = 64` after [`MANUFACTURED_ITERATIONS`] sweeps, and the
/// reduction of the converged error from `n = 32` to `n = 64`.
pub fn manufactured_checks() -> Result<Vec<CheckResult>> {
    let e64 = manufactured_error(64, MANUFACTURED_ITERATIONS)?;
    let c32 = manufactured_error(32, CONVERGED_ITERATIONS)?;
    let c64 = manufactured_error(64, CONVERGED_ITERATIONS)?;
    Ok(vec![
        CheckResult::below(
            "manufactured_error_n64",
            e64,
            5e-3,
            format!("relative L2 after {MANUFACTURED_ITERATIONS} sweeps"),
        ),
        CheckResult::at_least(
            "manufactured_refinement_ratio",
            c32 / c64,
            3.0,
            format!("converged error n=32 {c32:.3e}, n=64 {c64:.3e}"),
        ),
    ])
}

/// Largest relative deviation of `S(a·f1 + b·f2, a·B1 + b·B2)` from
/// `a·S(f1, B1) + b·S(f2, B2)` over `pairs` random instances.
pub fn superposition_error(n: usize, pairs: usize, iterations: usize, seed: u64) -> Result<f64> {
    let grid = Grid::new(n)?;
    let cfg = SolverConfig::new(iterations)?;
    let forcing = ForcingDistribution::default();
    let boundary = BoundaryDistribution::b1();
    let mut coeffs = SampleRng::new(seed, u64::MAX);
    let mut worst = 0.0f64;
    for k in 0..pairs as u64 {
        let (f1, b1) = sample_problem(&forcing, &boundary, seed, 2 * k, grid);
        let (f2, b2) = sample_problem(&forcing, &boundary, seed, 2 * k + 1, grid);
        let a = coeffs.uniform_range(-2.0, 2.0);
        let b = coeffs.uniform_range(-2.0, 2.0);
        let combined = jacobi_solve(
            &Field2D::linear_combine(a, &f1, b, &f2)?,
            &BoundarySpec::linear_combine(a, &b1, b, &b2)?,
            &cfg,
        )?;
        let separate = Field2D::linear_combine(a, &jacobi_solve(&f1, &b1, &cfg)?, b, &jacobi_solve(&f2, &b2, &cfg)?)?;
        worst = worst.max(relative_l2(&combined, &separate)?);
    }
    Ok(worst)
}

pub fn superposition_check() -> Result<CheckResult> {
    let e = superposition_error(64, 20, SolverConfig::TRAIN.iterations, 7)?;
    Ok(CheckResult::below(
        "superposition",
        e,
        1e-5,
        "max relative deviation over 20 pairs, 220 sweeps".into(),
    ))
}

/// Configuration of the gradient check: `n = 16`, width 4, 3 modes, 2 layers,
/// batch of 2, boundary-aware inputs, `f64`.
pub fn gradient_check_config() -> FnoConfig {
    FnoConfig {
        in_channels: InputEncoding::BoundaryAware.channels(),
        width: 4,
        n_layers: 2,
        modes: 3,
        projection_hidden: 8,
    }
}

/// Worst relative gap between analytic and central-difference gradients of
/// the training loss over every parameter. Gaps are measured relative to
/// `max(|analytic|, |fd|, 1e-6)`: at step `1e-5` central differences on an
/// O(1) loss resolve about `1e-10`.
pub fn gradient_check_error(seed: u64) -> Result<f64> {
    let grid = Grid::new(16)?;
    let mut rng = SampleRng::new(seed, 0);
    let mut model = FnoModel::<f64>::init(gradient_check_config(), seed)?;
    for p in model.params_mut() {
        for v in &mut p.data {
            *v += 0.05 * rng.normal();
        }
    }
    let mut inputs: Vec<MultiField> = Vec::new();
    let mut targets = Vec::new();
    for s in 0..2 {
        let (f, bc) = sample_problem(&ForcingDistribution::default(), &BoundaryDistribution::b1(), seed, s, grid);
        inputs.push(encode_input(&f, Some(&bc), InputEncoding::BoundaryAware)?);
        targets.push(jacobi_solve(&f, &bc, &SolverConfig::new(100)?)?);
    }
    let (_, grads) = model.loss_and_gradients(&inputs, &targets)?;
    let mut worst = 0.0f64;
    for idx in 0..model.params().len() {
        for k in 0..model.params()[idx].data.len() {
            let theta = model.params()[idx].data[k];
            let step = 1e-5 * theta.abs().max(1.0);
            let mut probe = model.clone();
            probe.params_mut()[idx].data[k] = theta + step;
            let plus = probe.loss(&inputs, &targets)?;
            probe.params_mut()[idx].data[k] = theta - step;
            let minus = probe.loss(&inputs, &targets)?;
            let fd = (plus - minus) / (2.0 * step);
            let a = grads.arrays[idx][k];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

pub fn gradient_check() -> Result<CheckResult> {
    let e = gradient_check_error(7)?;
    Ok(CheckResult::below(
        "gradient_check",
        e,
        1e-3,
        "max relative error, analytic vs central differences".into(),
    ))
}

pub fn run_all() -> Result<Vec<CheckResult>> {
    let mut out = manufactured_checks()?;
    out.push(superposition_check()?);
    out.push(gradient_check()?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_superposition_holds() {
        assert!(superposition_error(16, 3, 40, 1).unwrap() < 1e-10);
    }

    #[test]
    fn manufactured_error_decreases_with_iterations() {
        assert!(manufactured_error(16, 2000).unwrap() < manufactured_error(16, 50).unwrap());
    }

    #[test]
    fn check_result_thresholds() {
        assert!(CheckResult::below("a", 1.0, 2.0, String::new()).passed);
        assert!(!CheckResult::below("a", 2.0, 2.0, String::new()).passed);
        assert!(CheckResult::at_least("a", 3.0, 3.0, String::new()).passed);
    }
}
