//! Configuration-driven experiment runner: dataset preparation, sweeps over
//! heuristics × seeds, per-run artifact directories, and aggregate reports.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{aggregate, auc, AggregateRow, LearningCurve};
use crate::heuristics::Heuristic;
use crate::kg::{self, SyntheticParams};
use crate::model::ModelConfig;
use crate::simulator::{run_simulation, Dataset, QueryOutcome, RunResult, SimulationConfig};
use crate::{Error, Result};

/// Where the graphs and alignments come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSpec {
    Synthetic {
        #[serde(flatten)]
        params: SyntheticParams,
    },
    Files {
        left: String,
        right: String,
        alignments: String,
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
        #[serde(default = "default_val_fraction")]
        val_fraction: f64,
        #[serde(default)]
        split_seed: u64,
    },
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_val_fraction() -> f64 {
    0.2
}

impl DatasetSpec {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSpec::Synthetic { params } => {
                let (pair, truth) = kg::generate_synthetic_pair(params)?;
                let alignments = kg::split_alignments(
                    &truth,
                    default_train_fraction(),
                    default_val_fraction(),
                    params.seed,
                )?;
                Ok(Dataset::new(pair, alignments))
            }
            DatasetSpec::Files {
                left,
                right,
                alignments,
                train_fraction,
                val_fraction,
                split_seed,
            } => {
                let (left, _) = kg::load_graph(left)?;
                let (right, _) = kg::load_graph(right)?;
                let pair = kg::KnowledgeGraphPair { left, right };
                let pairs = kg::load_alignments(alignments, &pair)?;
                let alignments =
                    kg::split_alignments(&pairs, *train_fraction, *val_fraction, *split_seed)?;
                Ok(Dataset::new(pair, alignments))
            }
        }
    }

    fn label(&self) -> String {
        match self {
            DatasetSpec::Synthetic { params } => format!("synthetic-{}", params.seed),
            DatasetSpec::Files { alignments, .. } => alignments.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeuristicSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationSpec {
    pub batch_size: usize,
    pub total_query_budget: Option<usize>,
    pub exclusive_removal: bool,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec {
            batch_size: 200,
            total_query_budget: None,
            exclusive_removal: true,
        }
    }
}

/// A full sweep: one dataset, a heuristic list, and a seed list. Every
/// (heuristic, seed) cell becomes one run directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub simulation: SimulationSpec,
    pub heuristics: Vec<HeuristicSpec>,
    pub seeds: Vec<u64>,
}

impl ExperimentSpec {
    pub fn from_toml_str(src: &str) -> Result<ExperimentSpec> {
        let spec: ExperimentSpec =
            toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
        let path = path.as_ref();
        let src =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml_str(&src)
    }

    /// Rejects invalid heuristic names/params and empty sweeps before any
    /// run starts.
    pub fn validate(&self) -> Result<()> {
        if self.heuristics.is_empty() {
            return Err(Error::Config("no heuristics listed".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("no seeds listed".into()));
        }
        self.model.validate()?;
        for h in &self.heuristics {
            Heuristic::parse(&h.name, &h.params)?;
        }
        if self.simulation.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Config echo written into each run directory; sufficient to reproduce the
/// run exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub heuristic: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub dataset: DatasetSpec,
    pub model: ModelConfig,
    pub simulation: SimulationSpec,
}

pub fn cell_dir_name(heuristic: &str, seed: u64) -> String {
    format!("{heuristic}-seed{seed}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_metrics_csv(path: &Path, result: &RunResult) -> Result<()> {
    let mut out = String::from("step,queries,found_alignments,found_exclusives,test_h1,val_mrr\n");
    for p in &result.points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.step,
            p.queries,
            p.found_alignments,
            p.found_exclusives,
            p.test_hits_at_1,
            p.validation_mrr
        ));
    }
    write_file(path, &out)
}

fn write_queries_csv(path: &Path, result: &RunResult) -> Result<()> {
    let mut out = String::from("step,side,node,outcome\n");
    for q in &result.query_log {
        let outcome = match q.outcome {
            QueryOutcome::Matched => "matched",
            QueryOutcome::Exclusive => "exclusive",
        };
        out.push_str(&format!("{},{},{},{}\n", q.step, q.side, q.node, outcome));
    }
    write_file(path, &out)
}

/// Executes one (heuristic, seed) cell and writes its artifact directory.
pub fn run_cell(
    spec: &ExperimentSpec,
    dataset: &Dataset,
    hspec: &HeuristicSpec,
    seed: u64,
    dir: &Path,
) -> Result<RunResult> {
    let heuristic = Heuristic::parse(&hspec.name, &hspec.params)?;
    let config = SimulationConfig {
        batch_size: spec.simulation.batch_size,
        total_query_budget: spec.simulation.total_query_budget,
        model: spec.model.clone(),
        seed,
        exclusive_removal: spec.simulation.exclusive_removal,
    };
    let result = run_simulation(dataset, &heuristic, &config)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let manifest = RunManifest {
        heuristic: hspec.name.clone(),
        params: hspec.params.clone(),
        seed,
        dataset: spec.dataset.clone(),
        model: spec.model.clone(),
        simulation: spec.simulation.clone(),
    };
    let manifest_toml =
        toml::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    write_file(&dir.join("config.toml"), &manifest_toml)?;
    write_metrics_csv(&dir.join("metrics.csv"), &result)?;
    write_queries_csv(&dir.join("queries.csv"), &result)?;

    let curve = curve_from_result(&hspec.name, seed, &spec.dataset.label(), &result);
    let total = spec
        .simulation
        .total_query_budget
        .unwrap_or_else(|| curve.points.last().map(|p| p.0).unwrap_or(1));
    let run_auc = auc(&curve, total)?;
    let summary = format!(
        "heuristic = {}\nseed = {}\nsteps = {}\nqueries = {}\nfound_alignments = {}\nfound_exclusives = {}\nfinal_test_h1 = {}\nauc_test_h1 = {}\n",
        hspec.name,
        seed,
        result.points.len(),
        result.points.last().map(|p| p.queries).unwrap_or(0),
        result.final_state.found_alignments.len(),
        result.final_state.found_exclusive_left.len()
            + result.final_state.found_exclusive_right.len(),
        result.points.last().map(|p| p.test_hits_at_1).unwrap_or(0.0),
        run_auc,
    );
    write_file(&dir.join("summary.txt"), &summary)?;
    Ok(result)
}

pub fn curve_from_result(
    heuristic: &str,
    seed: u64,
    dataset: &str,
    result: &RunResult,
) -> LearningCurve {
    LearningCurve {
        heuristic: heuristic.to_string(),
        seed,
        dataset: dataset.to_string(),
        points: result
            .points
            .iter()
            .map(|p| (p.queries, p.test_hits_at_1))
            .collect(),
    }
}

/// Runs the whole sweep. Cells execute in parallel (worker count from the
/// `EALIGN_WORKERS` environment variable when set); completed cells are
/// preserved even if another cell fails.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<Vec<AggregateRow>> {
    spec.validate()?;
    let dataset = spec.dataset.load()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;

    let cells: Vec<(HeuristicSpec, u64)> = spec
        .heuristics
        .iter()
        .flat_map(|h| spec.seeds.iter().map(move |&s| (h.clone(), s)))
        .collect();

    let outcomes: Vec<(String, u64, Result<RunResult>)> = cells
        .par_iter()
        .map(|(hspec, seed)| {
            let dir = out_dir.join(cell_dir_name(&hspec.name, *seed));
            let res = run_cell(spec, &dataset, hspec, *seed, &dir);
            (hspec.name.clone(), *seed, res)
        })
        .collect();

    let mut curves = Vec::new();
    let mut failures = Vec::new();
    for (name, seed, res) in outcomes {
        match res {
            Ok(result) => {
                curves.push(curve_from_result(&name, seed, &spec.dataset.label(), &result))
            }
            Err(e) => failures.push(format!("{name}-seed{seed}: {e}")),
        }
    }
    if !failures.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} cell(s) failed:\n{}",
            failures.len(),
            failures.join("\n")
        )));
    }
    let rows = write_aggregate(&curves, spec.simulation.total_query_budget, out_dir)?;
    Ok(rows)
}

fn aggregate_total_queries(curves: &[LearningCurve], configured: Option<usize>) -> usize {
    configured.unwrap_or_else(|| {
        curves
            .iter()
            .filter_map(|c| c.points.last().map(|p| p.0))
            .max()
            .unwrap_or(1)
    })
}

/// Writes curves.csv (tidy per-point rows), aggregate.csv and an aligned
/// plain-text table.
pub fn write_aggregate(
    curves: &[LearningCurve],
    configured_total: Option<usize>,
    out_dir: &Path,
) -> Result<Vec<AggregateRow>> {
    let total = aggregate_total_queries(curves, configured_total);
    let mut tidy = String::from("heuristic,seed,queries,score\n");
    for c in curves {
        for &(q, s) in &c.points {
            tidy.push_str(&format!("{},{},{},{}\n", c.heuristic, c.seed, q, s));
        }
    }
    write_file(&out_dir.join("curves.csv"), &tidy)?;

    let rows = aggregate(curves, total)?;
    let mut csv = String::from("heuristic,n_runs,mean_auc,std_auc,significant_vs_rnd\n");
    let mut txt = String::new();
    txt.push_str(&format!(
        "{:<10} {:>6} {:>12} {:>12} {:>6}\n",
        "heuristic", "runs", "mean AUC", "std AUC", "sig"
    ));
    for r in &rows {
        let sig = match r.significant_vs_random {
            Some(true) => "*",
            Some(false) => "",
            None => "n/a",
        };
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.heuristic, r.n_runs, r.mean_auc, r.std_auc, sig
        ));
        txt.push_str(&format!(
            "{:<10} {:>6} {:>12.4} {:>12.4} {:>6}\n",
            r.heuristic, r.n_runs, r.mean_auc, r.std_auc, sig
        ));
    }
    write_file(&out_dir.join("aggregate.csv"), &csv)?;
    write_file(&out_dir.join("aggregate.txt"), &txt)?;
    Ok(rows)
}

/// Rebuilds the aggregate report from existing run directories without
/// re-running anything.
pub fn report_from_dirs(run_dirs: &[PathBuf], out_dir: &Path) -> Result<Vec<AggregateRow>> {
    if run_dirs.is_empty() {
        return Err(Error::InvalidArgument("no run directories given".into()));
    }
    let mut curves = Vec::new();
    let mut configured_total: Option<usize> = None;
    for dir in run_dirs {
        let manifest_path = dir.join("config.toml");
        let manifest_src = fs::read_to_string(&manifest_path)
            .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
        let manifest: RunManifest = toml::from_str(&manifest_src).map_err(|e| {
            Error::Config(format!("malformed manifest in {}: {e}", dir.display()))
        })?;
        configured_total = configured_total.or(manifest.simulation.total_query_budget);
        let metrics_path = dir.join("metrics.csv");
        let mut reader = csv::Reader::from_path(&metrics_path)
            .map_err(|e| Error::Csv {
                path: metrics_path.display().to_string(),
                source: e,
            })?;
        let mut points = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Csv {
                path: metrics_path.display().to_string(),
                source: e,
            })?;
            let queries: usize = record
                .get(1)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| {
                    Error::Config(format!("malformed metrics row in {}", dir.display()))
                })?;
            let score: f64 = record
                .get(4)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| {
                    Error::Config(format!("malformed metrics row in {}", dir.display()))
                })?;
            points.push((queries, score));
        }
        curves.push(LearningCurve {
            heuristic: manifest.heuristic,
            seed: manifest.seed,
            dataset: manifest.dataset.label(),
            points,
        });
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    write_aggregate(&curves, configured_total, out_dir)
}

/// Writes a synthetic dataset as TSV files (left/right triples plus the
/// ground-truth alignment).
pub fn generate_dataset_files(params: &SyntheticParams, out_dir: &Path) -> Result<()> {
    let (pair, truth) = kg::generate_synthetic_pair(params)?;
    // The triple files can only carry entities with at least one edge, so
    // pairs touching an entity the perturbation isolated are dropped to keep
    // the three files mutually loadable.
    let mut left_seen = vec![false; pair.left.num_entities()];
    for &(h, _, t) in pair.left.triples() {
        left_seen[h] = true;
        left_seen[t] = true;
    }
    let mut right_seen = vec![false; pair.right.num_entities()];
    for &(h, _, t) in pair.right.triples() {
        right_seen[h] = true;
        right_seen[t] = true;
    }
    let truth: std::collections::BTreeSet<(usize, usize)> = truth
        .into_iter()
        .filter(|&(l, r)| left_seen[l] && right_seen[r])
        .collect();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let write = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| -> Result<()> {
        let path = out_dir.join(name);
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| Error::io(path.display().to_string(), e))?;
        fs::File::create(&path)
            .and_then(|mut file| file.write_all(&buf))
            .map_err(|e| Error::io(path.display().to_string(), e))
    };
    write("left.tsv", &|buf| pair.left.write_tsv(buf))?;
    write("right.tsv", &|buf| pair.right.write_tsv(buf))?;
    write("alignments.tsv", &|buf| {
        kg::write_alignments_tsv(buf, &pair, &truth)
    })?;
    Ok(())
}
