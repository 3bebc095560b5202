use crate::error::{LabError, Result};
use crate::grid::{coordinate_channels, BoundarySpec, Field2D, Grid};

use super::config::InputEncoding;

/// Channel-major stack of fields on one grid (`[C][n²]`).
#[derive(Clone, Debug, PartialEq)]
pub struct MultiField {
    grid: Grid,
    channels: usize,
    values: Vec<f64>,
}

impl MultiField {
    pub fn from_fields(fields: &[&Field2D]) -> Result<Self> {
        let first = fields.first().ok_or(LabError::Empty("channel list"))?;
        let grid = first.grid();
        let mut values = Vec::with_capacity(fields.len() * grid.len());
        for f in fields {
            grid.check_same(&f.grid())?;
            values.extend_from_slice(f.values());
        }
        Ok(MultiField {
            grid,
            channels: fields.len(),
            values,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let p = self.grid.len();
        &self.values[c * p..(c + 1) * p]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Builds the network input for one sample.
///
/// Boundary-aware inputs append a value channel and two masks. Dirichlet
/// nodes (left column, bottom row, both mixed corners) carry `g` and
/// `dirichlet_mask = 1`; the origin carries the average of its two samples.
/// Neumann nodes (right column, top row without the mixed corners) carry the
/// prescribed derivative and `neumann_mask = 1`; the far corner carries the
/// average of its two derivative samples. The value channel is zero inside.
pub fn encode_input(f: &Field2D, bc: Option<&BoundarySpec>, enc: InputEncoding) -> Result<MultiField> {
    let grid = f.grid();
    let (x, y) = coordinate_channels(grid);
    match enc {
        InputEncoding::Ablated => MultiField::from_fields(&[f, &x, &y]),
        InputEncoding::BoundaryAware => {
            let bc = bc.ok_or(LabError::MissingBoundary)?;
            grid.check_same(&bc.grid())?;
            let n = grid.n();
            let last = n - 1;
            let mut value = vec![0.0; grid.len()];
            let mut dmask = vec![0.0; grid.len()];
            let mut nmask = vec![0.0; grid.len()];
            let (gl, gb, hr, ht) = (
                bc.g_left.values(),
                bc.g_bottom.values(),
                bc.h_right.values(),
                bc.h_top.values(),
            );
            for j in 1..last {
                value[grid.index(last, j)] = hr[j];
                nmask[grid.index(last, j)] = 1.0;
            }
            for i in 1..last {
                value[grid.index(i, last)] = ht[i];
                nmask[grid.index(i, last)] = 1.0;
            }
            value[grid.index(last, last)] = bc.far_corner_derivative();
            nmask[grid.index(last, last)] = 1.0;
            // Dirichlet last so the mixed corners end up Dirichlet.
            for j in 0..n {
                value[grid.index(0, j)] = gl[j];
                dmask[grid.index(0, j)] = 1.0;
            }
            for i in 0..n {
                value[grid.index(i, 0)] = gb[i];
                dmask[grid.index(i, 0)] = 1.0;
            }
            value[grid.index(0, 0)] = bc.origin_value();
            let value = Field2D::from_raw(grid, value);
            let dmask = Field2D::from_raw(grid, dmask);
            let nmask = Field2D::from_raw(grid, nmask);
            MultiField::from_fields(&[f, &x, &y, &value, &dmask, &nmask])
        }
    }
}
