//! Evaluation protocols.
//!
//! Every protocol evaluates on `eval_batches × eval_batch_size` instances
//! drawn from streams `EVAL_STREAM_BASE + k`. The same stream indices are
//! reused across conditions, so neighbouring conditions differ only in the
//! quantity being swept. Errors are averaged inside each batch; the reported
//! mean and standard deviation are taken over batch means.

use serde::{Deserialize, Serialize};

use crate::data::{generate_sample, Dataset, DatasetSpec};
use crate::error::{LabError, Result};
use crate::fno::{encode_input, train_with, FnoConfig, FnoModel, InputEncoding, MultiField, TrainConfig, TrainingLog};
use crate::grid::{Field2D, Grid};
use crate::metrics::{aggregate, batch_mean_relative_l2, relative_l2, ErrorStat};
use crate::rng::{CONDEXP_STREAM_BASE, EVAL_STREAM_BASE, HOLDOUT_STREAM_BASE};
use crate::sampling::{sample_problem, BoundaryDistribution, ForcingDistribution};
use crate::solver::{jacobi_solve, SolverConfig};
use crate::Parallelism;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    CrossDistribution,
    ShiftSweep,
    FrequencySweep,
    ConditionalExpectation,
}

/// Data, solver and protocol settings shared by every experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentPlan {
    /// Master seed for every sampled instance.
    pub seed: u64,
    pub grid_n: usize,
    pub forcing: ForcingDistribution,
    pub b0: BoundaryDistribution,
    pub b1: BoundaryDistribution,
    pub train_iterations: usize,
    pub eval_iterations: usize,
    pub train_samples: usize,
    pub holdout_samples: usize,
    pub eval_batches: usize,
    pub eval_batch_size: usize,
    pub shift_deltas: Vec<f64>,
    pub bandwidths: Vec<usize>,
    pub mc_samples: usize,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            seed: 7,
            grid_n: 64,
            forcing: ForcingDistribution::default(),
            b0: BoundaryDistribution::b0(),
            b1: BoundaryDistribution::b1(),
            train_iterations: SolverConfig::TRAIN.iterations,
            eval_iterations: SolverConfig::EVAL.iterations,
            train_samples: 30000,
            holdout_samples: 12,
            eval_batches: 16,
            eval_batch_size: 12,
            shift_deltas: vec![-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0],
            bandwidths: vec![6, 8, 10, 12],
            mc_samples: 256,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        Grid::new(self.grid_n)?;
        self.forcing.validate()?;
        self.b0.validate()?;
        self.b1.validate()?;
        SolverConfig::new(self.train_iterations)?;
        SolverConfig::new(self.eval_iterations)?;
        let bad = |msg: &str| Err(LabError::InvalidConfig(msg.to_string()));
        if self.train_samples == 0 {
            return bad("train_samples must be >= 1");
        }
        if self.eval_batches == 0 || self.eval_batch_size == 0 {
            return bad("eval_batches and eval_batch_size must be >= 1");
        }
        if self.mc_samples == 0 {
            return bad("mc_samples must be >= 1");
        }
        if self.shift_deltas.iter().any(|d| !d.is_finite()) {
            return bad("shift_deltas must be finite");
        }
        if self.bandwidths.contains(&0) {
            return bad("bandwidths must be >= 1");
        }
        Ok(())
    }

    pub fn distribution(&self, name: &str) -> Result<&BoundaryDistribution> {
        match name {
            "b0" => Ok(&self.b0),
            "b1" => Ok(&self.b1),
            other => Err(LabError::InvalidConfig(format!(
                "unknown boundary distribution {other:?} (expected b0 or b1)"
            ))),
        }
    }

    /// Training set: streams `[0, train_samples)`, training iteration count.
    pub fn train_spec(&self, boundary: &BoundaryDistribution) -> DatasetSpec {
        DatasetSpec {
            grid_n: self.grid_n,
            forcing: self.forcing.clone(),
            boundary: boundary.clone(),
            master_seed: self.seed,
            first_stream: 0,
            count: self.train_samples,
            iterations: self.train_iterations,
            dirichlet_shift: 0.0,
        }
    }

    /// Held-out batch logged during training.
    pub fn holdout_spec(&self, boundary: &BoundaryDistribution) -> DatasetSpec {
        DatasetSpec {
            first_stream: HOLDOUT_STREAM_BASE,
            count: self.holdout_samples,
            iterations: self.eval_iterations,
            ..self.train_spec(boundary)
        }
    }

    /// Evaluation set for one condition.
    pub fn eval_spec(&self, boundary: &BoundaryDistribution, dirichlet_shift: f64) -> DatasetSpec {
        DatasetSpec {
            first_stream: EVAL_STREAM_BASE,
            count: self.eval_batches * self.eval_batch_size,
            iterations: self.eval_iterations,
            dirichlet_shift,
            ..self.train_spec(boundary)
        }
    }
}

/// Identifies a model that contributed to a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelProvenance {
    pub label: String,
    pub config: FnoConfig,
    pub config_hash: String,
    /// SHA-256 of the serialized parameters.
    pub parameter_hash: String,
}

impl ModelProvenance {
    pub fn new(label: &str, model: &FnoModel<f32>) -> Self {
        ModelProvenance {
            label: label.to_string(),
            config: *model.config(),
            config_hash: model.config().hash_hex(),
            parameter_hash: crate::io::checkpoint::parameter_hash(model),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub crate_version: String,
    pub commit: Option<String>,
    pub protocol: Protocol,
    pub plan: ExperimentPlan,
    pub models: Vec<ModelProvenance>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub stat: ErrorStat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    fn new(protocol: Protocol, plan: &ExperimentPlan, models: Vec<ModelProvenance>) -> Self {
        ExperimentReport {
            rows: Vec::new(),
            provenance: Provenance {
                crate_version: env!("CARGO_PKG_VERSION").to_string(),
                commit: option_env!("BCLAB_COMMIT").map(String::from),
                protocol,
                plan: plan.clone(),
                models,
            },
        }
    }

    pub fn row(&self, label: &str) -> Option<&ErrorStat> {
        self.rows.iter().find(|r| r.label == label).map(|r| &r.stat)
    }
}

/// A trained model and how it was produced.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub label: String,
    pub model: FnoModel<f32>,
    pub log: TrainingLog,
}

impl TrainedModel {
    pub fn encoding(&self) -> Result<InputEncoding> {
        self.model.config().encoding()
    }

    pub fn provenance(&self) -> ModelProvenance {
        ModelProvenance::new(&self.label, &self.model)
    }
}

/// Architecture without the input channel count, which follows the encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub width: usize,
    pub n_layers: usize,
    pub modes: usize,
    pub projection_hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let s = FnoConfig::standard(InputEncoding::BoundaryAware);
        ModelConfig {
            width: s.width,
            n_layers: s.n_layers,
            modes: s.modes,
            projection_hidden: s.projection_hidden,
        }
    }
}

impl ModelConfig {
    pub fn fno_config(&self, enc: InputEncoding) -> FnoConfig {
        FnoConfig {
            in_channels: enc.channels(),
            width: self.width,
            n_layers: self.n_layers,
            modes: self.modes,
            projection_hidden: self.projection_hidden,
        }
    }
}

pub fn model_label(train_dist: &str, enc: InputEncoding) -> String {
    format!("{train_dist}_{}", enc.label())
}

/// Trains one model on `train_dist` ("b0" or "b1").
pub fn train_model(
    plan: &ExperimentPlan,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    train_dist: &str,
    enc: InputEncoding,
    par: Parallelism,
) -> Result<TrainedModel> {
    plan.validate()?;
    let cfg = model_cfg.fno_config(enc);
    cfg.validate_for_grid(plan.grid_n)?;
    let dist = plan.distribution(train_dist)?;
    let spec = plan.train_spec(dist);
    let holdout = Dataset::generate(&plan.holdout_spec(dist), par)?.encode(enc)?;
    let label = model_label(train_dist, enc);
    log::info!("training {label} on {} samples", spec.count);
    let init = FnoModel::<f32>::init(cfg, train_cfg.seed)?;
    let fetch = |idx: &[usize]| par.map(idx, |&i| generate_sample(&spec, i)?.encode(enc)).into_iter().collect();
    let (model, log) = train_with(init, spec.count, fetch, &holdout, train_cfg)?;
    Ok(TrainedModel { label, model, log })
}

/// The three models of the cross-distribution table.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSet {
    pub b0_aware: TrainedModel,
    pub b1_aware: TrainedModel,
    pub b0_ablated: TrainedModel,
}

pub fn train_all(
    plan: &ExperimentPlan,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    par: Parallelism,
) -> Result<ModelSet> {
    Ok(ModelSet {
        b0_aware: train_model(plan, model_cfg, train_cfg, "b0", InputEncoding::BoundaryAware, par)?,
        b1_aware: train_model(plan, model_cfg, train_cfg, "b1", InputEncoding::BoundaryAware, par)?,
        b0_ablated: train_model(plan, model_cfg, train_cfg, "b0", InputEncoding::Ablated, par)?,
    })
}

/// Batch-wise relative L² of `model` on `data`; also returns the batch means.
pub fn evaluate(
    model: &FnoModel<f32>,
    data: &Dataset,
    batch_size: usize,
    par: Parallelism,
) -> Result<(ErrorStat, Vec<f64>)> {
    if batch_size == 0 {
        return Err(LabError::InvalidConfig("batch size must be >= 1".into()));
    }
    if data.is_empty() {
        return Err(LabError::EmptyDataset);
    }
    let enc = model.config().encoding()?;
    let chunks: Vec<&[crate::data::Sample]> = data.samples.chunks(batch_size).collect();
    let means = par.map(&chunks, |chunk| -> Result<Option<f64>> {
        let inputs = chunk
            .iter()
            .map(|s| encode_input(&s.forcing, Some(&s.boundary), enc))
            .collect::<Result<Vec<MultiField>>>()?;
        let preds = model.forward_batch(&inputs)?;
        Ok(batch_mean_relative_l2(preds.iter().zip(chunk.iter().map(|s| &s.solution))))
    });
    let mut kept = Vec::with_capacity(means.len());
    for (b, m) in means.into_iter().enumerate() {
        match m? {
            Some(v) => kept.push(v),
            None => log::warn!("evaluation batch {b} skipped: every reference had zero norm"),
        }
    }
    Ok((aggregate(&kept)?, kept))
}

fn eval_on(plan: &ExperimentPlan, model: &FnoModel<f32>, spec: &DatasetSpec, par: Parallelism) -> Result<ErrorStat> {
    let data = Dataset::generate(spec, par)?;
    Ok(evaluate(model, &data, plan.eval_batch_size, par)?.0)
}

/// Each model on `b0` and `b1`; rows are labelled `"{model}/{dist}"`.
pub fn run_cross_distribution(plan: &ExperimentPlan, models: &[&TrainedModel], par: Parallelism) -> Result<ExperimentReport> {
    plan.validate()?;
    let mut report = ExperimentReport::new(
        Protocol::CrossDistribution,
        plan,
        models.iter().map(|m| m.provenance()).collect(),
    );
    for dist in ["b0", "b1"] {
        let data = Dataset::generate(&plan.eval_spec(plan.distribution(dist)?, 0.0), par)?;
        for m in models {
            let (stat, _) = evaluate(&m.model, &data, plan.eval_batch_size, par)?;
            report.rows.push(ReportRow {
                label: format!("{}/{dist}", m.label),
                stat,
            });
        }
    }
    report.rows.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(report)
}

pub fn shift_label(delta: f64) -> String {
    format!("delta={delta:+}")
}

pub fn bandwidth_label(k: usize) -> String {
    format!("K={k}")
}

/// Dirichlet edges of `b0` instances offset by each `δ` in the plan.
pub fn run_shift_sweep(plan: &ExperimentPlan, model: &TrainedModel, par: Parallelism) -> Result<ExperimentReport> {
    plan.validate()?;
    let mut report = ExperimentReport::new(Protocol::ShiftSweep, plan, vec![model.provenance()]);
    for &delta in &plan.shift_deltas {
        let stat = eval_on(plan, &model.model, &plan.eval_spec(&plan.b0, delta), par)?;
        report.rows.push(ReportRow {
            label: shift_label(delta),
            stat,
        });
    }
    Ok(report)
}

/// `b0` with the Dirichlet bandwidth replaced by each `K` in the plan.
pub fn run_freq_sweep(plan: &ExperimentPlan, model: &TrainedModel, par: Parallelism) -> Result<ExperimentReport> {
    plan.validate()?;
    let mut report = ExperimentReport::new(Protocol::FrequencySweep, plan, vec![model.provenance()]);
    for &k in &plan.bandwidths {
        let dist = plan.b0.with_dirichlet_bandwidth(k)?;
        let stat = eval_on(plan, &model.model, &plan.eval_spec(&dist, 0.0), par)?;
        report.rows.push(ReportRow {
            label: bandwidth_label(k),
            stat,
        });
    }
    Ok(report)
}

/// Output of the conditional-expectation protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct CondexpResult {
    pub report: ExperimentReport,
    /// Ablated prediction for the fixed forcing.
    pub prediction: Field2D,
    /// Monte-Carlo mean of the solutions over sampled boundaries.
    pub mc_mean: Field2D,
    /// `|prediction - mc_mean|`.
    pub abs_diff: Field2D,
    /// `rel(prediction, mc_mean)`.
    pub mean_distance: f64,
    /// `rel(prediction, u_m)` for every boundary sample.
    pub individual_distances: Vec<f64>,
    /// Fraction of samples with `mean_distance < individual_distances[m]`.
    pub fraction_beaten: f64,
    pub median_individual: f64,
    /// Relative error of the boundary-aware model against each `u_m`.
    pub aware_distances: Option<Vec<f64>>,
}

/// Scalar outcome of [`run_condexp`], for JSON output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondexpSummary {
    pub mean_distance: f64,
    pub median_individual: f64,
    pub fraction_beaten: f64,
    pub individual_distances: Vec<f64>,
    pub aware_distances: Option<Vec<f64>>,
}

impl CondexpResult {
    pub fn summary(&self) -> CondexpSummary {
        CondexpSummary {
            mean_distance: self.mean_distance,
            median_individual: self.median_individual,
            fraction_beaten: self.fraction_beaten,
            individual_distances: self.individual_distances.clone(),
            aware_distances: self.aware_distances.clone(),
        }
    }
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(LabError::Empty("median input"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Ok(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

/// One forcing from stream `CONDEXP_STREAM_BASE`, boundaries from the
/// following `mc_samples` streams, all solved at the evaluation iteration
/// count and compared with the ablated prediction.
pub fn run_condexp(
    plan: &ExperimentPlan,
    ablated: &TrainedModel,
    aware: Option<&TrainedModel>,
    par: Parallelism,
) -> Result<CondexpResult> {
    plan.validate()?;
    if ablated.encoding()? != InputEncoding::Ablated {
        return Err(LabError::InvalidConfig("condexp needs an ablated model".into()));
    }
    if let Some(a) = aware {
        if a.encoding()? != InputEncoding::BoundaryAware {
            return Err(LabError::InvalidConfig("contrast model must be boundary-aware".into()));
        }
    }
    let grid = Grid::new(plan.grid_n)?;
    let cfg = SolverConfig::new(plan.eval_iterations)?;
    let (f, _) = sample_problem(&plan.forcing, &plan.b0, plan.seed, CONDEXP_STREAM_BASE, grid);
    let f = f.to_f32_precision();
    let streams: Vec<u64> = (1..=plan.mc_samples as u64).map(|m| CONDEXP_STREAM_BASE + m).collect();
    let bcs: Vec<_> = streams
        .iter()
        .map(|&s| sample_problem(&plan.forcing, &plan.b0, plan.seed, s, grid).1.to_f32_precision())
        .collect();
    let solutions = par
        .map(&bcs, |bc| jacobi_solve(&f, bc, &cfg).map(|u| u.to_f32_precision()))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut acc = vec![0.0; grid.len()];
    for u in &solutions {
        for (a, v) in acc.iter_mut().zip(u.values()) {
            *a += v;
        }
    }
    let inv = 1.0 / solutions.len() as f64;
    let mc_mean = Field2D::new(grid, acc.into_iter().map(|a| a * inv).collect())?;

    let prediction = ablated.model.forward(&encode_input(&f, None, InputEncoding::Ablated)?)?;
    let abs_diff = Field2D::new(
        grid,
        prediction
            .values()
            .iter()
            .zip(mc_mean.values())
            .map(|(p, m)| (p - m).abs())
            .collect(),
    )?;
    let mean_distance = relative_l2(&prediction, &mc_mean)?;
    let individual_distances = solutions
        .iter()
        .map(|u| relative_l2(&prediction, u))
        .collect::<Result<Vec<_>>>()?;
    let beaten = individual_distances.iter().filter(|&&d| mean_distance < d).count();
    let fraction_beaten = beaten as f64 / individual_distances.len() as f64;
    let median_individual = median(&individual_distances)?;

    let aware_distances = match aware {
        None => None,
        Some(a) => {
            let idx: Vec<usize> = (0..bcs.len()).collect();
            let chunks: Vec<&[usize]> = idx.chunks(plan.eval_batch_size).collect();
            let per_chunk = par.map(&chunks, |chunk| -> Result<Vec<f64>> {
                let inputs = chunk
                    .iter()
                    .map(|&m| encode_input(&f, Some(&bcs[m]), InputEncoding::BoundaryAware))
                    .collect::<Result<Vec<_>>>()?;
                let preds = a.model.forward_batch(&inputs)?;
                preds
                    .iter()
                    .zip(chunk.iter())
                    .map(|(p, &m)| relative_l2(p, &solutions[m]))
                    .collect()
            });
            let mut all = Vec::with_capacity(bcs.len());
            for c in per_chunk {
                all.extend(c?);
            }
            Some(all)
        }
    };

    let mut models = vec![ablated.provenance()];
    models.extend(aware.map(|a| a.provenance()));
    let mut report = ExperimentReport::new(Protocol::ConditionalExpectation, plan, models);
    report.rows.push(ReportRow {
        label: "ablated_vs_mc_mean".into(),
        stat: aggregate(&[mean_distance])?,
    });
    report.rows.push(ReportRow {
        label: "ablated_vs_individual".into(),
        stat: aggregate(&individual_distances)?,
    });
    if let Some(d) = &aware_distances {
        report.rows.push(ReportRow {
            label: "aware_vs_individual".into(),
            stat: aggregate(d)?,
        });
    }
    Ok(CondexpResult {
        report,
        prediction,
        mc_mean,
        abs_diff,
        mean_distance,
        individual_distances,
        fraction_beaten,
        median_individual,
        aware_distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Parallelism::{Rayon, Serial};

    fn small_plan() -> ExperimentPlan {
        ExperimentPlan {
            grid_n: 16,
            train_iterations: 60,
            eval_iterations: 80,
            train_samples: 24,
            holdout_samples: 4,
            eval_batches: 3,
            eval_batch_size: 4,
            shift_deltas: vec![-1.0, 0.0, 1.0],
            bandwidths: vec![6, 8],
            mc_samples: 8,
            ..ExperimentPlan::default()
        }
    }

    fn small_model() -> ModelConfig {
        ModelConfig {
            width: 6,
            n_layers: 2,
            modes: 4,
            projection_hidden: 8,
        }
    }

    fn small_train() -> TrainConfig {
        TrainConfig {
            steps: 20,
            batch_size: 4,
            holdout_every: 10,
            learning_rate: 3e-3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn eval_specs_share_streams_across_conditions() {
        let p = ExperimentPlan::default();
        let a = p.eval_spec(&p.b0, 0.0);
        let b = p.eval_spec(&p.b1, 0.5);
        assert_eq!(a.first_stream, EVAL_STREAM_BASE);
        assert_eq!(a.first_stream, b.first_stream);
        assert_eq!(a.count, 192);
        assert_eq!(a.iterations, 320);
        assert_eq!(p.train_spec(&p.b0).iterations, 220);
        assert_eq!(p.train_spec(&p.b0).first_stream, 0);
        assert_eq!(p.holdout_spec(&p.b0).first_stream, HOLDOUT_STREAM_BASE);
    }

    #[test]
    fn plan_validation() {
        assert!(ExperimentPlan::default().validate().is_ok());
        let mut p = ExperimentPlan::default();
        p.bandwidths.push(0);
        assert!(p.validate().is_err());
        let p = ExperimentPlan {
            eval_batch_size: 0,
            ..ExperimentPlan::default()
        };
        assert!(p.validate().is_err());
        assert!(ExperimentPlan::default().distribution("b2").is_err());
    }

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]).unwrap(), 2.5);
        assert!(median(&[]).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(shift_label(-0.25), "delta=-0.25");
        assert_eq!(shift_label(0.0), "delta=+0");
        assert_eq!(shift_label(1.0), "delta=+1");
        assert_eq!(bandwidth_label(10), "K=10");
        assert_eq!(model_label("b1", InputEncoding::Ablated), "b1_ablated");
    }

    #[test]
    fn protocols_run_end_to_end_and_are_schedule_independent() {
        let plan = small_plan();
        let aware = train_model(&plan, &small_model(), &small_train(), "b0", InputEncoding::BoundaryAware, Serial).unwrap();
        let ablated = train_model(&plan, &small_model(), &small_train(), "b0", InputEncoding::Ablated, Serial).unwrap();
        assert_eq!(aware.log.rows.len(), 21);

        let cross = run_cross_distribution(&plan, &[&aware, &ablated], Serial).unwrap();
        let labels: Vec<&str> = cross.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["b0_ablated/b0", "b0_ablated/b1", "b0_aware/b0", "b0_aware/b1"]);
        assert!(cross.rows.iter().all(|r| r.stat.count == 3 && r.stat.mean > 0.0));

        let shift = run_shift_sweep(&plan, &aware, Serial).unwrap();
        assert_eq!(shift.rows.len(), 3);
        assert_eq!(shift.row("delta=+0"), cross.row("b0_aware/b0"));

        let freq = run_freq_sweep(&plan, &aware, Serial).unwrap();
        assert_eq!(freq.row("K=6"), cross.row("b0_aware/b0"));

        let ce = run_condexp(&plan, &ablated, Some(&aware), Serial).unwrap();
        assert_eq!(ce.individual_distances.len(), 8);
        assert_eq!(ce.aware_distances.as_ref().unwrap().len(), 8);
        assert!((0.0..=1.0).contains(&ce.fraction_beaten));
        assert_eq!(ce.report.rows.len(), 3);
        assert!(run_condexp(&plan, &aware, None, Serial).is_err());

        let cross_par = run_cross_distribution(&plan, &[&aware, &ablated], Rayon).unwrap();
        assert_eq!(cross_par, cross);
        let ce_par = run_condexp(&plan, &ablated, Some(&aware), Rayon).unwrap();
        assert_eq!(ce_par.mc_mean, ce.mc_mean);
        assert_eq!(ce_par.individual_distances, ce.individual_distances);
        assert_eq!(ce_par.aware_distances, ce.aware_distances);
    }

    #[test]
    fn single_mc_sample_reproduces_its_solution() {
        let plan = ExperimentPlan {
            mc_samples: 1,
            ..small_plan()
        };
        let m = TrainedModel {
            label: "init".into(),
            model: FnoModel::init(small_model().fno_config(InputEncoding::Ablated), 3).unwrap(),
            log: TrainingLog::default(),
        };
        let ce = run_condexp(&plan, &m, None, Serial).unwrap();
        assert_eq!(ce.individual_distances, vec![ce.mean_distance]);
        assert_eq!(ce.fraction_beaten, 0.0);
        assert_eq!(ce.report.rows.len(), 2);
        assert_eq!(ce.report.rows[1].stat.count, 1);
    }

    #[test]
    fn identical_distributions_give_identical_cells() {
        let mut plan = small_plan();
        plan.b1 = BoundaryDistribution {
            label: "b1".into(),
            ..plan.b0.clone()
        };
        let m = TrainedModel {
            label: "b0_aware".into(),
            model: FnoModel::init(small_model().fno_config(InputEncoding::BoundaryAware), 3).unwrap(),
            log: TrainingLog::default(),
        };
        let r = run_cross_distribution(&plan, &[&m], Serial).unwrap();
        assert_eq!(r.rows[0].stat, r.rows[1].stat);
    }

    #[test]
    fn mc_mean_of_constant_boundaries_is_exact() {
        let mut plan = small_plan();
        plan.b0 = plan.b0.without_fluctuations();
        plan.mc_samples = 3;
        let m = TrainedModel {
            label: "zero".into(),
            model: FnoModel::zeros(small_model().fno_config(InputEncoding::Ablated)).unwrap(),
            log: TrainingLog::default(),
        };
        let ce = run_condexp(&plan, &m, None, Serial).unwrap();
        assert_eq!(ce.individual_distances[0], ce.individual_distances[2]);
        assert!((ce.mean_distance - ce.individual_distances[0]).abs() < 1e-12);
        assert_eq!(ce.prediction.values().iter().filter(|&&v| v != 0.0).count(), 0);
    }
}
