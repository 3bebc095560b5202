//! Jacobi iteration for `-Δu = f` with mixed boundary conditions.
//!
//! Five-point stencil on the node grid. Left (`i = 0`) and bottom (`j = 0`)
//! nodes are Dirichlet and stay fixed; right (`i = n-1`) and top (`j = n-1`)
//! nodes are updated through ghost nodes `u_ghost = u_inner + 2h·∂ₙu`.
//!
//! Corners: `(0,0)` holds the average of its two Dirichlet samples, the mixed
//! corners `(n-1,0)` and `(0,n-1)` take their Dirichlet value, and `(n-1,n-1)`
//! uses both ghost nodes. Every sweep reads only the previous iterate.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{BoundarySpec, Field2D};
use crate::Parallelism;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub iterations: usize,
}

impl SolverConfig {
    pub fn new(iterations: usize) -> Result<Self> {
        if iterations == 0 {
            return Err(LabError::InvalidConfig("solver iterations must be >= 1".into()));
        }
        Ok(SolverConfig { iterations })
    }

    /// Iteration count used for training ground truth.
    pub const TRAIN: SolverConfig = SolverConfig { iterations: 220 };
    /// Iteration count used for evaluation ground truth.
    pub const EVAL: SolverConfig = SolverConfig { iterations: 320 };
}

fn check_finite_bc(bc: &BoundarySpec) -> Result<()> {
    for e in [&bc.g_left, &bc.g_bottom, &bc.h_right, &bc.h_top] {
        if !e.values().iter().all(|v| v.is_finite()) {
            return Err(LabError::NonFinite("boundary data".into()));
        }
    }
    Ok(())
}

/// Runs exactly `cfg.iterations` sweeps from a zero interior.
pub fn jacobi_solve(f: &Field2D, bc: &BoundarySpec, cfg: &SolverConfig) -> Result<Field2D> {
    let grid = f.grid();
    grid.check_same(&bc.grid())?;
    if !f.values().iter().all(|v| v.is_finite()) {
        return Err(LabError::NonFinite("forcing".into()));
    }
    check_finite_bc(bc)?;
    if cfg.iterations == 0 {
        return Err(LabError::InvalidConfig("solver iterations must be >= 1".into()));
    }

    let n = grid.n();
    let h = grid.h();
    let h2 = h * h;
    let two_h = 2.0 * h;
    let hf: Vec<f64> = f.values().iter().map(|v| h2 * v).collect();
    let gl = bc.g_left.values();
    let gb = bc.g_bottom.values();
    let hr: Vec<f64> = bc.h_right.values().iter().map(|v| two_h * v).collect();
    let ht: Vec<f64> = bc.h_top.values().iter().map(|v| two_h * v).collect();

    let mut cur = vec![0.0; n * n];
    for j in 1..n {
        cur[j] = gl[j];
    }
    for i in 1..n {
        cur[i * n] = gb[i];
    }
    cur[0] = bc.origin_value();
    let mut next = cur.clone();

    let last = n - 1;
    for _ in 0..cfg.iterations {
        // Interior nodes.
        for i in 1..last {
            let (west, rest) = cur[(i - 1) * n..].split_at(n);
            let (row, east) = rest.split_at(n);
            let east = &east[..n];
            let out = &mut next[i * n..(i + 1) * n];
            let hfr = &hf[i * n..(i + 1) * n];
            for j in 1..last {
                out[j] = 0.25 * (west[j] + east[j] + row[j - 1] + row[j + 1] + hfr[j]);
            }
            // Top edge node (i, n-1).
            out[last] = 0.25 * (west[last] + east[last] + 2.0 * row[last - 1] + ht[i] + hfr[last]);
        }
        // Right edge (n-1, j), including the Neumann–Neumann corner.
        {
            let base = last * n;
            let inner = (last - 1) * n;
            for j in 1..last {
                next[base + j] = 0.25
                    * (2.0 * cur[inner + j] + hr[j] + cur[base + j - 1] + cur[base + j + 1] + hf[base + j]);
            }
            next[base + last] = 0.25
                * (2.0 * cur[inner + last] + hr[last] + 2.0 * cur[base + last - 1] + ht[last] + hf[base + last]);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(Field2D::from_raw(grid, cur))
}

/// Interior and Neumann-edge residual norms of a candidate solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residual {
    /// RMS of `-Δ_h u - f` over interior nodes.
    pub interior_rms: f64,
    /// RMS of the Neumann mismatch measured with one-sided second-order
    /// differences along the right and top edges.
    pub boundary_rms: f64,
}

pub fn residual(u: &Field2D, f: &Field2D, bc: &BoundarySpec) -> Result<Residual> {
    let grid = u.grid();
    grid.check_same(&f.grid())?;
    grid.check_same(&bc.grid())?;
    let n = grid.n();
    let h = grid.h();
    let inv_h2 = 1.0 / (h * h);
    let mut acc = 0.0;
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let lap = (u.at(i - 1, j) + u.at(i + 1, j) + u.at(i, j - 1) + u.at(i, j + 1) - 4.0 * u.at(i, j)) * inv_h2;
            let r = -lap - f.at(i, j);
            acc += r * r;
        }
    }
    let interior_rms = (acc / ((n - 2) * (n - 2)) as f64).sqrt();

    let last = n - 1;
    let mut bacc = 0.0;
    let mut count = 0usize;
    for j in 1..n {
        let d = (3.0 * u.at(last, j) - 4.0 * u.at(last - 1, j) + u.at(last - 2, j)) / (2.0 * h);
        let r = d - bc.h_right.values()[j];
        bacc += r * r;
        count += 1;
    }
    for i in 1..n {
        let d = (3.0 * u.at(i, last) - 4.0 * u.at(i, last - 1) + u.at(i, last - 2)) / (2.0 * h);
        let r = d - bc.h_top.values()[i];
        bacc += r * r;
        count += 1;
    }
    Ok(Residual {
        interior_rms,
        boundary_rms: (bacc / count as f64).sqrt(),
    })
}

/// Independent solves over paired lists. Results do not depend on `par`.
pub fn solve_batch(
    fs: &[Field2D],
    bcs: &[BoundarySpec],
    cfg: &SolverConfig,
    par: Parallelism,
) -> Result<Vec<Field2D>> {
    if fs.len() != bcs.len() {
        return Err(LabError::LengthMismatch {
            expected: fs.len(),
            found: bcs.len(),
        });
    }
    let pairs: Vec<(&Field2D, &BoundarySpec)> = fs.iter().zip(bcs).collect();
    par.map(&pairs, |(f, bc)| jacobi_solve(f, bc, cfg))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{EdgeFunction, Grid};
    use crate::metrics::relative_l2;
    use crate::sampling::{sample_problem, BoundaryDistribution, ForcingDistribution};
    use std::f64::consts::PI;

    fn manufactured(grid: Grid) -> (Field2D, BoundarySpec, Field2D) {
        let f = Field2D::from_fn(grid, |x, y| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin());
        let exact = Field2D::from_fn(grid, |x, y| (PI * x).sin() * (PI * y).sin());
        let zero = EdgeFunction::constant(grid, 0.0);
        let neu = EdgeFunction::from_fn(grid, |t| -PI * (PI * t).sin());
        let bc = BoundarySpec::new(zero.clone(), zero, neu.clone(), neu).unwrap();
        (f, bc, exact)
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let g = Grid::new(16).unwrap();
        let u = jacobi_solve(&Field2D::zeros(g), &BoundarySpec::zeros(g), &SolverConfig { iterations: 37 }).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_dirichlet_converges_to_constant() {
        let g = Grid::new(64).unwrap();
        let c = 0.7;
        let bc = BoundarySpec::new(
            EdgeFunction::constant(g, c),
            EdgeFunction::constant(g, c),
            EdgeFunction::constant(g, 0.0),
            EdgeFunction::constant(g, 0.0),
        )
        .unwrap();
        let u = jacobi_solve(&Field2D::zeros(g), &bc, &SolverConfig { iterations: 80_000 }).unwrap();
        let err = relative_l2(&u, &Field2D::constant(g, c)).unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn manufactured_solution_n64() {
        let g = Grid::new(64).unwrap();
        let (f, bc, exact) = manufactured(g);
        let u = jacobi_solve(&f, &bc, &SolverConfig { iterations: 20_000 }).unwrap();
        let err = relative_l2(&u, &exact).unwrap();
        assert!(err < 5e-3, "{err}");
    }

    #[test]
    fn more_iterations_reduce_error() {
        let g = Grid::new(64).unwrap();
        let (f, bc, exact) = manufactured(g);
        let e220 = relative_l2(&jacobi_solve(&f, &bc, &SolverConfig::TRAIN).unwrap(), &exact).unwrap();
        let e320 = relative_l2(&jacobi_solve(&f, &bc, &SolverConfig::EVAL).unwrap(), &exact).unwrap();
        assert!(e320 <= e220, "{e320} > {e220}");
    }

    #[test]
    fn residual_of_zero_field() {
        let g = Grid::new(10).unwrap();
        let r = residual(&Field2D::zeros(g), &Field2D::constant(g, 1.0), &BoundarySpec::zeros(g)).unwrap();
        assert!((r.interior_rms - 1.0).abs() < 1e-15);
        assert_eq!(r.boundary_rms, 0.0);
    }

    #[test]
    fn residual_near_fixed_point() {
        let g = Grid::new(64).unwrap();
        let (f, bc) = sample_problem(&ForcingDistribution::default(), &BoundaryDistribution::b0(), 7, 0, g);
        let u = jacobi_solve(&f, &bc, &SolverConfig { iterations: 100_000 }).unwrap();
        let r = residual(&u, &f, &bc).unwrap();
        assert!(r.interior_rms < 1e-6 * f.rms(), "{:?}", r);
    }

    #[test]
    fn residual_decays_between_train_and_eval_iterations() {
        let g = Grid::new(64).unwrap();
        let (f, bc) = sample_problem(&ForcingDistribution::default(), &BoundaryDistribution::b0(), 7, 3, g);
        let r220 = residual(&jacobi_solve(&f, &bc, &SolverConfig::TRAIN).unwrap(), &f, &bc).unwrap();
        let r320 = residual(&jacobi_solve(&f, &bc, &SolverConfig::EVAL).unwrap(), &f, &bc).unwrap();
        assert!(r220.interior_rms > r320.interior_rms);
    }

    #[test]
    fn batch_matches_single_solves() {
        let g = Grid::new(64).unwrap();
        let (fs, bcs): (Vec<_>, Vec<_>) = (0..12)
            .map(|s| sample_problem(&ForcingDistribution::default(), &BoundaryDistribution::b0(), 7, s, g))
            .unzip();
        let cfg = SolverConfig::TRAIN;
        let batch = solve_batch(&fs, &bcs, &cfg, Parallelism::Serial).unwrap();
        let par = solve_batch(&fs, &bcs, &cfg, Parallelism::Rayon).unwrap();
        for k in 0..12 {
            let single = jacobi_solve(&fs[k], &bcs[k], &cfg).unwrap();
            assert_eq!(batch[k], single);
            assert_eq!(par[k], single);
        }
        let dup = solve_batch(&[fs[0].clone(), fs[0].clone()], &[bcs[0].clone(), bcs[0].clone()], &cfg, Parallelism::Serial).unwrap();
        assert_eq!(dup[0], dup[1]);
        assert!(solve_batch(&fs[..2], &bcs[..1], &cfg, Parallelism::Serial).is_err());
    }

    #[test]
    fn rejects_mismatch_and_non_finite() {
        let g = Grid::new(8).unwrap();
        let cfg = SolverConfig::TRAIN;
        assert!(jacobi_solve(&Field2D::zeros(g), &BoundarySpec::zeros(Grid::new(9).unwrap()), &cfg).is_err());
        let mut bc = BoundarySpec::zeros(g);
        bc.h_top = EdgeFunction::from_fn(g, |_| f64::INFINITY);
        assert!(matches!(jacobi_solve(&Field2D::zeros(g), &bc, &cfg), Err(LabError::NonFinite(_))));
    }

    #[test]
    fn dirichlet_nodes_stay_fixed() {
        let g = Grid::new(12).unwrap();
        let (f, bc) = sample_problem(&ForcingDistribution::default(), &BoundaryDistribution::b1(), 9, 0, g);
        let u = jacobi_solve(&f, &bc, &SolverConfig { iterations: 50 }).unwrap();
        let n = g.n();
        for j in 1..n {
            assert_eq!(u.at(0, j), bc.g_left.values()[j]);
        }
        for i in 1..n {
            assert_eq!(u.at(i, 0), bc.g_bottom.values()[i]);
        }
        assert_eq!(u.at(0, 0), bc.origin_value());
    }
}
