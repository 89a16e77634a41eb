//! Seeded multi-replication studies: generate, contaminate, cross-validate the
//! step size, train, evaluate on clean test data, aggregate.
//!
//! Each (ε, replication) cell derives its own seeds from the plan seed, so cells
//! can run in any order or in parallel and still reproduce bit for bit.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::booster::{train, BoostConfig, Ensemble, StepMode};
use crate::data::Dataset;
use crate::datagen::{contaminate, ContaminationKind, ContaminationSpec, Generator, SelectionMode};
use crate::error::{Error, Result};
use crate::losses::Loss;
use crate::numeric::mix_seed;
use crate::tree::TreeConfig;

/// Candidate constant steps tried by cross-validation.
pub const DEFAULT_STEP_GRID: [f64; 10] = [0.05, 0.1, 0.14, 0.2, 0.28, 0.45, 0.5, 0.78, 0.8, 1.0];

/// Environment variable capping the worker threads used by [`run_plan`].
pub const THREADS_ENV: &str = "ARCHBOOST_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepChoice {
    /// Pick the constant step with the lowest validation error.
    Cv,
    Constant(f64),
    LineSearch { alpha_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    /// Display name; defaults to the loss id.
    #[serde(default)]
    pub name: Option<String>,
    pub loss: Loss,
    pub step: StepChoice,
}

impl MethodSpec {
    pub fn cv(loss: Loss) -> Self {
        Self {
            name: None,
            loss,
            step: StepChoice::Cv,
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.loss.id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    pub generator: Generator,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub contamination: ContaminationKind,
    #[serde(default)]
    pub selection: SelectionMode,
    #[serde(default = "default_t_df")]
    pub t_df: f64,
    pub epsilons: Vec<f64>,
    pub methods: Vec<MethodSpec>,
    pub replications: usize,
    pub seed: u64,
    pub max_iter: usize,
    #[serde(default)]
    pub tree: TreeConfig,
    #[serde(default = "default_grid")]
    pub step_grid: Vec<f64>,
    /// Also report the error on a copy of the test set contaminated like the
    /// training data.
    #[serde(default)]
    pub noisy_test: bool,
}

fn default_t_df() -> f64 {
    4.0
}

fn default_grid() -> Vec<f64> {
    DEFAULT_STEP_GRID.to_vec()
}

impl ExperimentPlan {
    /// Long/Servedio at desk scale: 800 training points with 10% label flips,
    /// depth-2 trees, 200 iterations, ARB-2 against AdaBoost.
    pub fn long_servedio_desk(epsilon: f64, replications: usize) -> Self {
        Self {
            name: "long_servedio".into(),
            generator: Generator::LongServedio,
            n_train: 800,
            n_validation: 800,
            n_test: 2000,
            contamination: ContaminationKind::LabelFlip,
            selection: SelectionMode::Bernoulli,
            t_df: default_t_df(),
            epsilons: vec![epsilon],
            methods: vec![
                MethodSpec::cv(Loss::arb(2.0).expect("valid")),
                MethodSpec::cv(Loss::Exponential),
            ],
            replications,
            seed: 2024,
            max_iter: 200,
            tree: TreeConfig::with_depth(2),
            step_grid: default_grid(),
            noisy_test: true,
        }
    }

    /// Hastie data with t(4) feature noise at desk scale: 2000/2000/2000
    /// points, stumps, 200 iterations, ARB-1.5 and ARB-2 against AdaBoost.
    pub fn hastie_sweep_desk(epsilons: Vec<f64>, replications: usize) -> Self {
        Self {
            name: "hastie_sweep".into(),
            generator: Generator::Hastie,
            n_train: 2000,
            n_validation: 2000,
            n_test: 2000,
            contamination: ContaminationKind::FeatureTNoise,
            selection: SelectionMode::Subset,
            t_df: default_t_df(),
            epsilons,
            methods: vec![
                MethodSpec::cv(Loss::arb(1.5).expect("valid")),
                MethodSpec::cv(Loss::arb(2.0).expect("valid")),
                MethodSpec::cv(Loss::Exponential),
            ],
            replications,
            seed: 2024,
            max_iter: 200,
            tree: TreeConfig::with_depth(1),
            step_grid: default_grid(),
            noisy_test: false,
        }
    }

    /// ARB-γ for γ ∈ {1.5, 2, …, 6} plus AdaBoost on Long/Servedio data.
    pub fn gamma_sweep(epsilons: Vec<f64>, replications: usize) -> Self {
        let mut methods: Vec<MethodSpec> = [1.5, 2.0, 3.0, 4.0, 5.0, 6.0]
            .iter()
            .map(|&g| MethodSpec::cv(Loss::arb(g).expect("valid")))
            .collect();
        methods.push(MethodSpec::cv(Loss::Exponential));
        Self {
            name: "gamma_sweep".into(),
            epsilons,
            methods,
            ..Self::long_servedio_desk(0.0, replications)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.methods.is_empty() || self.epsilons.is_empty() {
            return bad("plan needs at least one method and one epsilon".into());
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(0.0..0.5).contains(*e)) {
            return bad(format!("epsilon {e} outside [0, 0.5)"));
        }
        if self.n_train < 2 || self.n_test == 0 {
            return bad("need n_train >= 2 and n_test >= 1".into());
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        for m in &self.methods {
            if !m.loss.is_training_grade() {
                return Err(Error::NoHypothesisRule(m.loss.id()));
            }
            if m.step == StepChoice::Cv && (self.n_validation == 0 || self.step_grid.is_empty()) {
                return bad(format!("method {} needs a validation set and a step grid", m.label()));
            }
        }
        self.tree.validate()
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("plan serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    fn spec(&self, epsilon: f64, seed: u64) -> ContaminationSpec {
        ContaminationSpec {
            kind: self.contamination,
            epsilon,
            t_df: self.t_df,
            mode: self.selection,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub method: String,
    pub epsilon: f64,
    pub replication: usize,
    pub step: Option<f64>,
    pub iterations: usize,
    pub test_error: f64,
    pub noisy_test_error: Option<f64>,
    /// Set when training failed; the cell is excluded from aggregation.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub epsilon: f64,
    pub mean_error: f64,
    pub std_error: f64,
    pub replications: usize,
    pub ci_half_width: f64,
    pub noisy_mean_error: Option<f64>,
    pub noisy_std_error: Option<f64>,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMetadata {
    pub plan: String,
    pub plan_hash: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub metadata: ResultMetadata,
    pub rows: Vec<ResultRow>,
    pub cells: Vec<CellResult>,
}

impl ResultTable {
    pub fn row(&self, method: &str, epsilon: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.method == method && r.epsilon == epsilon)
    }
}

/// Thread count requested through [`THREADS_ENV`], if set and valid.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs every cell of the plan. Parallelism follows [`THREADS_ENV`] when set.
pub fn run_plan(plan: &ExperimentPlan) -> Result<ResultTable> {
    match threads_from_env() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(|| run_plan_inner(plan)),
        None => run_plan_inner(plan),
    }
}

fn run_plan_inner(plan: &ExperimentPlan) -> Result<ResultTable> {
    plan.validate()?;
    let cells: Vec<(usize, usize)> = (0..plan.epsilons.len())
        .flat_map(|e| (0..plan.replications).map(move |r| (e, r)))
        .collect();
    let mut results: Vec<Vec<CellResult>> = cells
        .par_iter()
        .map(|&(e, r)| run_cell(plan, e, r))
        .collect::<Result<_>>()?;
    // order-independent aggregation: sort by (method, ε, replication)
    let mut flat: Vec<(usize, CellResult)> = results
        .iter_mut()
        .flat_map(|v| v.drain(..).enumerate())
        .collect();
    flat.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.epsilon.total_cmp(&b.1.epsilon))
            .then(a.1.replication.cmp(&b.1.replication))
    });
    let cells: Vec<CellResult> = flat.into_iter().map(|(_, c)| c).collect();
    let mut rows = Vec::new();
    for m in &plan.methods {
        let label = m.label();
        for &eps in &plan.epsilons {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.method == label && c.epsilon == eps)
                .collect();
            rows.push(aggregate(&label, eps, &group));
        }
    }
    Ok(ResultTable {
        metadata: ResultMetadata {
            plan: plan.name.clone(),
            plan_hash: plan.hash(),
            seed: plan.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        rows,
        cells,
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn aggregate(method: &str, epsilon: f64, group: &[&CellResult]) -> ResultRow {
    let ok: Vec<&&CellResult> = group.iter().filter(|c| c.failure.is_none()).collect();
    let errors: Vec<f64> = ok.iter().map(|c| c.test_error).collect();
    let (mean, std) = mean_std(&errors);
    let noisy: Vec<f64> = ok.iter().filter_map(|c| c.noisy_test_error).collect();
    let (noisy_mean, noisy_std) = if noisy.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&noisy);
        (Some(m), Some(s))
    };
    let reps = errors.len();
    ResultRow {
        method: method.to_string(),
        epsilon,
        mean_error: mean,
        std_error: std,
        replications: reps,
        ci_half_width: if reps > 0 { 1.96 * std / (reps as f64).sqrt() } else { f64::NAN },
        noisy_mean_error: noisy_mean,
        noisy_std_error: noisy_std,
        failed: group.len() - reps,
    }
}

/// Datasets of one (ε, replication) cell.
pub struct CellData {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub noisy_test: Option<Dataset>,
}

/// Builds the data of cell (`eps_index`, `replication`). Clean data depends only
/// on the replication, so every ε level perturbs the same draw.
pub fn cell_data(plan: &ExperimentPlan, eps_index: usize, replication: usize) -> Result<CellData> {
    let base = mix_seed(plan.seed, replication as u64);
    let eps = plan.epsilons[eps_index];
    let stream = |k: u64| mix_seed(base, k);
    let train = plan.generator.generate(plan.n_train, stream(1));
    let validation = plan.generator.generate(plan.n_validation, stream(2));
    let test = plan.generator.generate(plan.n_test, stream(3));
    let e = eps_index as u64 + 1;
    let train = contaminate(&train, &plan.spec(eps, stream(100 + e)))?;
    let validation = contaminate(&validation, &plan.spec(eps, stream(200 + e)))?;
    let noisy_test = if plan.noisy_test {
        Some(contaminate(&test, &plan.spec(eps, stream(300 + e)))?)
    } else {
        None
    };
    // audit: the clean test set is never contaminated
    if test.mask().is_some() || test.n_flagged() != 0 {
        return Err(Error::InvalidData("test split carries a contamination mask".into()));
    }
    Ok(CellData {
        train,
        validation,
        test,
        noisy_test,
    })
}

fn run_cell(plan: &ExperimentPlan, eps_index: usize, replication: usize) -> Result<Vec<CellResult>> {
    let data = cell_data(plan, eps_index, replication)?;
    Ok(plan
        .methods
        .iter()
        .map(|m| {
            let base = CellResult {
                method: m.label(),
                epsilon: plan.epsilons[eps_index],
                replication,
                step: None,
                iterations: 0,
                test_error: f64::NAN,
                noisy_test_error: None,
                failure: None,
            };
            match fit_method(plan, m, &data) {
                Ok((model, step)) => {
                    let noisy = data
                        .noisy_test
                        .as_ref()
                        .map(|d| model.error_rate(d))
                        .transpose();
                    match (model.error_rate(&data.test), noisy) {
                        (Ok(err), Ok(noisy)) => CellResult {
                            step,
                            iterations: model.len(),
                            test_error: err,
                            noisy_test_error: noisy,
                            ..base
                        },
                        (Err(e), _) | (_, Err(e)) => CellResult {
                            failure: Some(e.to_string()),
                            ..base
                        },
                    }
                }
                Err(e) => {
                    log::warn!("{} eps={} rep={replication}: {e}", m.label(), base.epsilon);
                    CellResult {
                        failure: Some(e.to_string()),
                        ..base
                    }
                }
            }
        })
        .collect())
}

/// Candidate steps for `loss`: the plan grid plus the `0.45/(γ-1)` rule of
/// thumb for γ-robust losses, sorted and deduplicated.
pub fn step_candidates(grid: &[f64], loss: &Loss) -> Vec<f64> {
    let mut c = grid.to_vec();
    if let Loss::GammaRobust(p) = loss {
        c.push(0.45 / (p.gamma - 1.0));
    }
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

fn fit_method(plan: &ExperimentPlan, m: &MethodSpec, data: &CellData) -> Result<(Ensemble, Option<f64>)> {
    let config = |step: StepMode| BoostConfig {
        loss: m.loss,
        max_iter: plan.max_iter,
        step,
        tree: plan.tree,
        retain_indicators: false,
        ..BoostConfig::default()
    };
    match m.step {
        StepChoice::Constant(a) => Ok((train(&data.train, &config(StepMode::Constant(Some(a))))?, Some(a))),
        StepChoice::LineSearch { alpha_max } => Ok((train(&data.train, &config(StepMode::LineSearch { alpha_max }))?, None)),
        StepChoice::Cv => {
            let center = m.loss.default_constant_step();
            let mut best: Option<(f64, f64, Ensemble)> = None;
            for step in step_candidates(&plan.step_grid, &m.loss) {
                let model = train(&data.train, &config(StepMode::Constant(Some(step))))?;
                let err = model.error_rate(&data.validation)?;
                let better = match &best {
                    None => true,
                    Some((e, s, _)) => {
                        err < *e || (err == *e && (step - center).abs() < (s - center).abs())
                    }
                };
                if better {
                    best = Some((err, step, model));
                }
            }
            let (_, step, model) = best.expect("non-empty grid");
            Ok((model, Some(step)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

const RESULT_HEADER: [&str; 9] = [
    "method",
    "epsilon",
    "mean_error",
    "std_error",
    "replications",
    "ci_half_width",
    "noisy_mean_error",
    "noisy_std_error",
    "failed",
];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:?}"))
}

/// Writes the table: CSV holds the aggregated rows, JSON the whole table.
pub fn emit_results(table: &ResultTable, path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        OutputFormat::Json => {
            let json = serde_json::to_string_pretty(table)?;
            std::fs::write(path, json).map_err(|e| Error::io(path, e))
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
            w.write_record(RESULT_HEADER).map_err(|e| Error::csv(path, e))?;
            for r in &table.rows {
                w.write_record([
                    r.method.clone(),
                    format!("{:?}", r.epsilon),
                    format!("{:?}", r.mean_error),
                    format!("{:?}", r.std_error),
                    r.replications.to_string(),
                    format!("{:?}", r.ci_half_width),
                    opt(r.noisy_mean_error),
                    opt(r.noisy_std_error),
                    r.failed.to_string(),
                ])
                .map_err(|e| Error::csv(path, e))?;
            }
            w.flush().map_err(|e| Error::io(path, e))
        }
    }
}

pub fn load_results(path: impl AsRef<Path>) -> Result<ResultTable> {
    let path = path.as_ref();
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&s)?)
}

/// Long-format plot data: `method,epsilon,mean,ci_lo,ci_hi`, one row per
/// (method, ε).
pub fn emit_plot_data(table: &ResultTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["method", "epsilon", "mean", "ci_lo", "ci_hi"])
        .map_err(|e| Error::csv(path, e))?;
    for r in &table.rows {
        w.write_record([
            r.method.clone(),
            format!("{:?}", r.epsilon),
            format!("{:?}", r.mean_error),
            format!("{:?}", r.mean_error - r.ci_half_width),
            format!("{:?}", r.mean_error + r.ci_half_width),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
