//! In-memory datasets of `(f, B, u)` triples.
//!
//! Sample `k` of a dataset comes from stream `first_stream + k` of the
//! dataset's master seed, so any sample can be regenerated on its own and the
//! result never depends on scheduling. Stored values are rounded to `f32`
//! precision, the precision of the on-disk format, so a dataset read back from
//! a file is identical to the one generated in memory.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fno::{encode_input, InputEncoding, TrainingSample};
use crate::grid::{BoundarySpec, Field2D, Grid};
use crate::sampling::{sample_problem, shift_dirichlet, BoundaryDistribution, ForcingDistribution};
use crate::solver::{jacobi_solve, SolverConfig};
use crate::Parallelism;

/// Everything needed to regenerate a dataset bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub grid_n: usize,
    pub forcing: ForcingDistribution,
    pub boundary: BoundaryDistribution,
    pub master_seed: u64,
    pub first_stream: u64,
    pub count: usize,
    pub iterations: usize,
    /// Additive offset applied to the Dirichlet edges after sampling.
    #[serde(default)]
    pub dirichlet_shift: f64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        Grid::new(self.grid_n)?;
        self.forcing.validate()?;
        self.boundary.validate()?;
        SolverConfig::new(self.iterations)?;
        if !self.dirichlet_shift.is_finite() {
            return Err(LabError::InvalidConfig("dirichlet_shift must be finite".into()));
        }
        if self.first_stream.checked_add(self.count as u64).is_none() {
            return Err(LabError::InvalidConfig("stream range overflows".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub forcing: Field2D,
    pub boundary: BoundarySpec,
    pub solution: Field2D,
}

impl Sample {
    pub fn encode(&self, enc: InputEncoding) -> Result<TrainingSample> {
        Ok(TrainingSample {
            input: encode_input(&self.forcing, Some(&self.boundary), enc)?,
            target: self.solution.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub samples: Vec<Sample>,
}

/// Generates sample `index` of `spec` (0-based within the dataset).
pub fn generate_sample(spec: &DatasetSpec, index: usize) -> Result<Sample> {
    let grid = spec.grid()?;
    let (f, bc) = sample_problem(
        &spec.forcing,
        &spec.boundary,
        spec.master_seed,
        spec.first_stream + index as u64,
        grid,
    );
    let bc = if spec.dirichlet_shift != 0.0 {
        shift_dirichlet(&bc, spec.dirichlet_shift)
    } else {
        bc
    };
    let u = jacobi_solve(&f, &bc, &SolverConfig::new(spec.iterations)?)?;
    Ok(Sample {
        forcing: f.to_f32_precision(),
        boundary: bc.to_f32_precision(),
        solution: u.to_f32_precision(),
    })
}

impl Dataset {
    /// Samples and solves every instance of `spec`.
    pub fn generate(spec: &DatasetSpec, par: Parallelism) -> Result<Self> {
        spec.validate()?;
        let indices: Vec<usize> = (0..spec.count).collect();
        let samples = par
            .map(&indices, |&k| generate_sample(spec, k))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            spec: spec.clone(),
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn encode(&self, enc: InputEncoding) -> Result<Vec<TrainingSample>> {
        self.samples.iter().map(|s| s.encode(enc)).collect()
    }
}
