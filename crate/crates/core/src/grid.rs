//! Node-centered grid on the unit square and the fields that live on it.
//!
//! Node `(i, j)` sits at `(x, y) = (i·h, j·h)` with `h = 1/(n-1)`; nodes with
//! `i = 0`, `i = n-1`, `j = 0` or `j = n-1` lie on the boundary. Fields are
//! stored row-major with `i` (the x index) outer.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(LabError::InvalidGrid(n));
        }
        Ok(Grid { n })
    }

    /// Nodes per axis.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Node spacing `1/(n-1)`.
    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    /// Total node count `n²`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// Coordinate of node `k` along either axis, computed as `k/(n-1)`.
    #[inline]
    pub fn coord(&self, k: usize) -> f64 {
        k as f64 / (self.n - 1) as f64
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.n != other.n {
            return Err(LabError::GridMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }
}

impl TryFrom<usize> for Grid {
    type Error = LabError;
    fn try_from(n: usize) -> Result<Self> {
        Grid::new(n)
    }
}

impl From<Grid> for usize {
    fn from(g: Grid) -> usize {
        g.n
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LabError::NonFinite(what.to_string()))
    }
}

/// A scalar field sampled at every grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    grid: Grid,
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        check_finite(&values, "field")?;
        Ok(Field2D { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Field2D {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Field2D {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Evaluates `f(x, y)` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            let x = grid.coord(i);
            for j in 0..n {
                values.push(f(x, grid.coord(j)));
            }
        }
        Field2D { grid, values }
    }

    /// Trusted constructor for values produced by crate internals.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field2D { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Pointwise `a·u + b·v`.
    pub fn linear_combine(a: f64, u: &Field2D, b: f64, v: &Field2D) -> Result<Field2D> {
        u.grid.check_same(&v.grid)?;
        let values = u
            .values
            .iter()
            .zip(&v.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Ok(Field2D {
            grid: u.grid,
            values,
        })
    }

    pub fn scaled(&self, a: f64) -> Field2D {
        Field2D {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// Root-mean-square over all nodes.
    pub fn rms(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    /// Rounds every value through `f32`, the on-disk precision.
    pub fn to_f32_precision(&self) -> Field2D {
        Field2D {
            grid: self.grid,
            values: self.values.iter().map(|&v| v as f32 as f64).collect(),
        }
    }
}

/// `x` and `y` coordinate channels.
pub fn coordinate_channels(grid: Grid) -> (Field2D, Field2D) {
    (
        Field2D::from_fn(grid, |x, _| x),
        Field2D::from_fn(grid, |_, y| y),
    )
}

/// Values of a function of the edge parameter `t = k·h`, `k = 0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl EdgeFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(LabError::LengthMismatch {
                expected: grid.n(),
                found: values.len(),
            });
        }
        check_finite(&values, "edge function")?;
        Ok(EdgeFunction { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        EdgeFunction {
            grid,
            values: vec![c; grid.n()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        EdgeFunction {
            grid,
            values: (0..grid.n()).map(|k| f(grid.coord(k))).collect(),
        }
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        EdgeFunction { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn offset(&self, delta: f64) -> EdgeFunction {
        EdgeFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v + delta).collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> EdgeFunction {
        EdgeFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    fn to_f32_precision(&self) -> EdgeFunction {
        EdgeFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| v as f32 as f64).collect(),
        }
    }
}

/// Boundary data `(g_L, g_B, h_R, h_T)`: Dirichlet values on the left and
/// bottom edges, outward normal derivatives on the right and top edges.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySpec {
    pub g_left: EdgeFunction,
    pub g_bottom: EdgeFunction,
    pub h_right: EdgeFunction,
    pub h_top: EdgeFunction,
}

impl BoundarySpec {
    pub fn new(
        g_left: EdgeFunction,
        g_bottom: EdgeFunction,
        h_right: EdgeFunction,
        h_top: EdgeFunction,
    ) -> Result<Self> {
        let grid = g_left.grid();
        for e in [&g_bottom, &h_right, &h_top] {
            grid.check_same(&e.grid())?;
        }
        Ok(BoundarySpec {
            g_left,
            g_bottom,
            h_right,
            h_top,
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        let z = EdgeFunction::constant(grid, 0.0);
        BoundarySpec {
            g_left: z.clone(),
            g_bottom: z.clone(),
            h_right: z.clone(),
            h_top: z,
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.g_left.grid()
    }

    /// Scales all four edge arrays by `a`.
    pub fn scaled(&self, a: f64) -> BoundarySpec {
        BoundarySpec {
            g_left: self.g_left.scaled(a),
            g_bottom: self.g_bottom.scaled(a),
            h_right: self.h_right.scaled(a),
            h_top: self.h_top.scaled(a),
        }
    }

    /// Edgewise `a·self + b·other`.
    pub fn linear_combine(a: f64, u: &BoundarySpec, b: f64, v: &BoundarySpec) -> Result<Self> {
        u.grid().check_same(&v.grid())?;
        let comb = |p: &EdgeFunction, q: &EdgeFunction| {
            EdgeFunction::from_raw(
                p.grid(),
                p.values()
                    .iter()
                    .zip(q.values())
                    .map(|(&x, &y)| a * x + b * y)
                    .collect(),
            )
        };
        Ok(BoundarySpec {
            g_left: comb(&u.g_left, &v.g_left),
            g_bottom: comb(&u.g_bottom, &v.g_bottom),
            h_right: comb(&u.h_right, &v.h_right),
            h_top: comb(&u.h_top, &v.h_top),
        })
    }

    pub fn to_f32_precision(&self) -> BoundarySpec {
        BoundarySpec {
            g_left: self.g_left.to_f32_precision(),
            g_bottom: self.g_bottom.to_f32_precision(),
            h_right: self.h_right.to_f32_precision(),
            h_top: self.h_top.to_f32_precision(),
        }
    }

    /// Value pinned at the Dirichlet–Dirichlet corner `(0, 0)`.
    pub fn origin_value(&self) -> f64 {
        0.5 * (self.g_left.values()[0] + self.g_bottom.values()[0])
    }

    /// Value carried at the Neumann–Neumann corner `(n-1, n-1)`.
    pub fn far_corner_derivative(&self) -> f64 {
        let n = self.grid().n();
        0.5 * (self.h_right.values()[n - 1] + self.h_top.values()[n - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_small() {
        assert!(Grid::new(2).is_err());
        let g = Grid::new(3).unwrap();
        assert_eq!(g.h(), 0.5);
    }

    #[test]
    fn coordinate_channels_small_grid() {
        let g = Grid::new(3).unwrap();
        let (x, y) = coordinate_channels(g);
        for j in 0..3 {
            assert_eq!(x.at(0, j), 0.0);
            assert_eq!(x.at(1, j), 0.5);
            assert_eq!(x.at(2, j), 1.0);
            assert_eq!(y.at(j, 2), 1.0);
        }
    }

    #[test]
    fn coordinate_channels_on_standard_grid() {
        let g = Grid::new(64).unwrap();
        let (x, _) = coordinate_channels(g);
        assert_eq!(x.at(21, 5), 21.0 / 63.0);
    }

    #[test]
    fn coordinate_reflection_symmetry() {
        for n in [3, 4, 17, 64] {
            let g = Grid::new(n).unwrap();
            let (x, y) = coordinate_channels(g);
            for i in 0..n {
                for j in 0..n {
                    assert!((x.at(i, j) + x.at(n - 1 - i, j) - 1.0).abs() < 1e-15);
                    assert!(x.at(i, j) >= 0.0 && x.at(i, j) <= 1.0);
                    assert_eq!(y.at(i, j), g.coord(j));
                }
            }
        }
    }

    #[test]
    fn linear_combine_identities() {
        let g = Grid::new(9).unwrap();
        let u = Field2D::from_fn(g, |x, y| (3.0 * x).sin() + y * y - 0.3);
        let v = Field2D::from_fn(g, |x, y| x * y + 1.7);
        assert_eq!(Field2D::linear_combine(1.0, &u, 0.0, &v).unwrap(), u);
        assert_eq!(Field2D::linear_combine(0.5, &u, 0.5, &u).unwrap(), u);
        let z = Field2D::linear_combine(1.0, &u, -1.0, &u).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_combine_grid_mismatch() {
        let u = Field2D::zeros(Grid::new(5).unwrap());
        let v = Field2D::zeros(Grid::new(6).unwrap());
        assert!(matches!(
            Field2D::linear_combine(1.0, &u, 1.0, &v),
            Err(LabError::GridMismatch { .. })
        ));
    }

    #[test]
    fn field_validation() {
        let g = Grid::new(3).unwrap();
        assert!(Field2D::new(g, vec![0.0; 8]).is_err());
        let mut vals = vec![0.0; 9];
        vals[4] = f64::NAN;
        assert!(matches!(Field2D::new(g, vals), Err(LabError::NonFinite(_))));
        assert!(EdgeFunction::new(g, vec![1.0; 4]).is_err());
    }

    #[test]
    fn boundary_spec_requires_shared_grid() {
        let a = EdgeFunction::constant(Grid::new(4).unwrap(), 0.0);
        let b = EdgeFunction::constant(Grid::new(5).unwrap(), 0.0);
        assert!(BoundarySpec::new(a.clone(), a.clone(), a, b).is_err());
    }
}
