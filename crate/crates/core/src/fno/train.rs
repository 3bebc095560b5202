use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::Field2D;
use crate::metrics::batch_mean_relative_l2;
use crate::rng::{SampleRng, BATCH_STREAM};

use super::adam::{adam_step, AdamState};
use super::config::TrainConfig;
use super::encode::MultiField;
use super::model::FnoModel;
use super::real::Real;

/// One encoded input and its target solution.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub input: MultiField,
    pub target: Field2D,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingLogRow {
    pub step: usize,
    /// Minibatch loss evaluated before the update of this step.
    pub train_mse: Option<f64>,
    /// Mean relative L² on the held-out batch after this step.
    pub holdout_rel_l2: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub rows: Vec<TrainingLogRow>,
}

impl TrainingLog {
    pub fn final_holdout(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.holdout_rel_l2)
    }

    pub fn initial_holdout(&self) -> Option<f64> {
        self.rows.iter().find_map(|r| r.holdout_rel_l2)
    }
}

fn holdout_error<T: Real>(model: &FnoModel<T>, holdout: &[TrainingSample]) -> Result<Option<f64>> {
    if holdout.is_empty() {
        return Ok(None);
    }
    let inputs: Vec<MultiField> = holdout.iter().map(|s| s.input.clone()).collect();
    let preds = model.forward_batch(&inputs)?;
    Ok(batch_mean_relative_l2(preds.iter().zip(holdout.iter().map(|s| &s.target))))
}

/// Minibatch order over a training set of `len` samples.
///
/// Each epoch visits every index once in an order shuffled by a
/// Fisher–Yates pass drawn from `(seed, BATCH_STREAM)`; batches run across
/// epoch boundaries.
pub struct BatchSchedule {
    rng: SampleRng,
    order: Vec<usize>,
    pos: usize,
}

impl BatchSchedule {
    pub fn new(seed: u64, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(LabError::EmptyDataset);
        }
        let mut s = BatchSchedule {
            rng: SampleRng::new(seed, BATCH_STREAM),
            order: (0..len).collect(),
            pos: 0,
        };
        s.shuffle();
        Ok(s)
    }

    fn shuffle(&mut self) {
        for i in (1..self.order.len()).rev() {
            let j = self.rng.index(i + 1);
            self.order.swap(i, j);
        }
    }

    pub fn next_batch(&mut self, size: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        for _ in 0..size {
            if self.pos == self.order.len() {
                self.shuffle();
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

/// Trains on an in-memory dataset. See [`train_with`].
pub fn train<T: Real>(
    model: FnoModel<T>,
    data: &[TrainingSample],
    holdout: &[TrainingSample],
    cfg: &TrainConfig,
) -> Result<(FnoModel<T>, TrainingLog)> {
    train_with(model, data.len(), |idx| Ok(idx.iter().map(|&i| data[i].clone()).collect()), holdout, cfg)
}

/// Runs exactly `cfg.steps` Adam steps over a training set of `len` samples
/// that `fetch` materializes one batch of indices at a time. The batch order
/// comes from [`BatchSchedule`] and depends only on `cfg.seed` and `len`.
pub fn train_with<T, F>(
    mut model: FnoModel<T>,
    len: usize,
    mut fetch: F,
    holdout: &[TrainingSample],
    cfg: &TrainConfig,
) -> Result<(FnoModel<T>, TrainingLog)>
where
    T: Real,
    F: FnMut(&[usize]) -> Result<Vec<TrainingSample>>,
{
    cfg.validate()?;
    let mut schedule = BatchSchedule::new(cfg.seed, len)?;
    let mut log = TrainingLog::default();
    log.rows.push(TrainingLogRow {
        step: 0,
        train_mse: None,
        holdout_rel_l2: holdout_error(&model, holdout)?,
    });
    let mut state = AdamState::new(&model);
    for step in 1..=cfg.steps {
        let idx = schedule.next_batch(cfg.batch_size);
        let batch = fetch(&idx)?;
        if batch.len() != idx.len() {
            return Err(LabError::LengthMismatch {
                expected: idx.len(),
                found: batch.len(),
            });
        }
        let (inputs, targets): (Vec<MultiField>, Vec<Field2D>) = batch.into_iter().map(|s| (s.input, s.target)).unzip();
        let (loss, grads) = model.loss_and_gradients(&inputs, &targets)?;
        adam_step(&mut model, &grads, &mut state, cfg)?;
        let holdout_rel_l2 = if step % cfg.holdout_every == 0 || step == cfg.steps {
            let e = holdout_error(&model, holdout)?;
            info!("step {step}: train mse {loss:.4e}, holdout rel L2 {e:?}");
            e
        } else {
            None
        };
        log.rows.push(TrainingLogRow {
            step,
            train_mse: Some(loss),
            holdout_rel_l2,
        });
    }
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fno::{encode_input, FnoConfig, InputEncoding};
    use crate::grid::Grid;
    use crate::sampling::{sample_problem, BoundaryDistribution, ForcingDistribution};
    use crate::solver::{jacobi_solve, SolverConfig};

    fn dataset(count: usize, n: usize, first_stream: u64) -> Vec<TrainingSample> {
        let g = Grid::new(n).unwrap();
        (0..count as u64)
            .map(|s| {
                let (f, bc) = sample_problem(&ForcingDistribution::default(), &BoundaryDistribution::b0(), 1, first_stream + s, g);
                let u = jacobi_solve(&f, &bc, &SolverConfig { iterations: 200 }).unwrap();
                TrainingSample {
                    input: encode_input(&f, Some(&bc), InputEncoding::BoundaryAware).unwrap(),
                    target: u,
                }
            })
            .collect()
    }

    fn tiny_config() -> FnoConfig {
        FnoConfig {
            in_channels: 6,
            width: 8,
            n_layers: 2,
            modes: 4,
            projection_hidden: 16,
        }
    }

    #[test]
    fn zero_steps_returns_init() {
        let m = FnoModel::<f32>::init(tiny_config(), 7).unwrap();
        let cfg = TrainConfig {
            steps: 0,
            ..TrainConfig::default()
        };
        let (out, log) = train(m.clone(), &dataset(2, 16, 0), &[], &cfg).unwrap();
        assert_eq!(out, m);
        assert_eq!(log.rows.len(), 1);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let m = FnoModel::<f32>::init(tiny_config(), 7).unwrap();
        assert!(matches!(
            train(m, &[], &[], &TrainConfig::default()),
            Err(LabError::EmptyDataset)
        ));
    }

    #[test]
    fn short_run_reduces_loss_and_is_deterministic() {
        let data = dataset(4, 16, 0);
        let holdout = dataset(2, 16, 100);
        let cfg = TrainConfig {
            steps: 50,
            batch_size: 4,
            learning_rate: 3e-3,
            holdout_every: 10,
            ..TrainConfig::default()
        };
        let m = FnoModel::<f32>::init(tiny_config(), 7).unwrap();
        let (a, log) = train(m.clone(), &data, &holdout, &cfg).unwrap();
        let first = log.rows[1].train_mse.unwrap();
        let last = log.rows.last().unwrap().train_mse.unwrap();
        assert!(last < first, "{first} -> {last}");
        assert_eq!(log.rows.len(), 51);
        assert_eq!(log.rows.iter().filter(|r| r.holdout_rel_l2.is_some()).count(), 6);
        let (b, log_b) = train(m, &data, &holdout, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(log, log_b);
    }

    #[test]
    fn schedule_visits_each_index_once_per_epoch() {
        let mut s = BatchSchedule::new(7, 10).unwrap();
        let mut first: Vec<usize> = s.next_batch(4);
        first.extend(s.next_batch(6));
        let mut sorted = first.clone();
        sorted.sort();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        assert_ne!(first, (0..10).collect::<Vec<_>>());
        let second = s.next_batch(10);
        assert_ne!(first, second);
        let mut again = BatchSchedule::new(7, 10).unwrap();
        assert_eq!(again.next_batch(10), first);
        assert!(BatchSchedule::new(7, 0).is_err());
    }

    #[test]
    fn lazy_and_in_memory_training_agree() {
        let data = dataset(6, 16, 0);
        let cfg = TrainConfig {
            steps: 5,
            batch_size: 4,
            ..TrainConfig::default()
        };
        let m = FnoModel::<f32>::init(tiny_config(), 7).unwrap();
        let (a, _) = train(m.clone(), &data, &[], &cfg).unwrap();
        let mut fetched = Vec::new();
        let (b, _) = train_with(
            m,
            data.len(),
            |idx| {
                fetched.extend_from_slice(idx);
                Ok(idx.iter().map(|&i| data[i].clone()).collect())
            },
            &[],
            &cfg,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(fetched.len(), 20);
    }
}
