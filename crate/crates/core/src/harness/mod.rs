//! Experiment sweeps over size × sparsity × backend × mitigation × shots,
//! with CSV results, a JSON manifest, aggregation, SVG plots and the
//! mitigation comparison table.

mod aggregate;
mod plot;
mod table;

pub use aggregate::{aggregate, cell_stats, write_aggregate, write_aggregate_to, AggregateRow, CellKey, CellStats};
pub use plot::{emit_plot, read_axes, read_series, AxesSpec, Metric, PlotPoint, PlotSeries};
pub use table::{emit_table1, Table1};

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::circuit_sim::NoiseParams;
use crate::error::{Error, Result};
use crate::matrix_model::{generate_problem, random_rhs, ProblemInstance};
use crate::seed::derive_seed;
use crate::solver::{solve, SolverConfig, DEFAULT_EPSILON, DEFAULT_MAX_RETRIES};

pub const DEFAULT_SHOT_GRID: [usize; 6] = [24, 48, 96, 216, 456, 1008];
pub const DEFAULT_SAMPLES: usize = 50;
pub const DEFAULT_GAMMA: f64 = 0.5;
pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

const TAG_INSTANCE: u64 = 1;
const TAG_RHS: u64 = 2;
const TAG_WALK: u64 = 3;

/// A named noise configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Backend {
    pub name: String,
    pub noise: NoiseParams,
}

impl Backend {
    /// A preset name (`noiseless`, `fake-boeblingen`, `fake-casablanca`) or
    /// the path of a key-value noise config.
    pub fn resolve(spec: &str) -> Result<Self> {
        if let Some(noise) = NoiseParams::preset(spec) {
            return Ok(Self {
                name: spec.to_string(),
                noise,
            });
        }
        let path = Path::new(spec);
        if !path.is_file() {
            return Err(Error::param(
                "backend",
                format!("`{spec}` is neither a preset nor a readable config file"),
            ));
        }
        let noise = NoiseParams::from_config_str(&fs::read_to_string(path)?)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| spec.to_string());
        Ok(Self { name, noise })
    }
}

/// How the right-hand side is chosen per instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhsPolicy {
    /// One `b` per matrix size, shared by every sample.
    SharedPerSize,
    /// Each sample draws its own `b`.
    PerSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub sizes: Vec<usize>,
    /// `sparsity_ks[i]` lists the zeroed-coin counts for `sizes[i]`.
    pub sparsity_ks: Vec<Vec<usize>>,
    pub shot_grid: Vec<usize>,
    pub samples_per_cell: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub backends: Vec<Backend>,
    /// `false` = unmitigated, `true` = detect-and-retry.
    pub mitigation_modes: Vec<bool>,
    pub master_seed: u64,
    pub rhs_policy: RhsPolicy,
    pub max_retries: u32,
    /// Permit shot counts that are not multiples of 24.
    pub allow_any_shots: bool,
}

impl ExperimentPlan {
    /// Every sparsity level for each size, defaults elsewhere.
    pub fn new(sizes: Vec<usize>, backends: Vec<Backend>, mitigation_modes: Vec<bool>, master_seed: u64) -> Self {
        let sparsity_ks = sizes.iter().map(|&n| (0..=n).collect()).collect();
        Self {
            sizes,
            sparsity_ks,
            shot_grid: DEFAULT_SHOT_GRID.to_vec(),
            samples_per_cell: DEFAULT_SAMPLES,
            gamma: DEFAULT_GAMMA,
            epsilon: DEFAULT_EPSILON,
            backends,
            mitigation_modes,
            master_seed,
            rhs_policy: RhsPolicy::SharedPerSize,
            max_retries: DEFAULT_MAX_RETRIES,
            allow_any_shots: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::param("sizes", "no sizes given"));
        }
        if self.sizes.len() != self.sparsity_ks.len() {
            return Err(Error::param("sparsity_ks", "one k list per size is required"));
        }
        for (&n, ks) in self.sizes.iter().zip(&self.sparsity_ks) {
            if n == 0 || n > crate::matrix_model::MAX_COINS {
                return Err(Error::param("sizes", format!("n = {n} unsupported")));
            }
            if ks.is_empty() {
                return Err(Error::param("sparsity_ks", format!("no k values for n = {n}")));
            }
            if let Some(k) = ks.iter().find(|&&k| k > n) {
                return Err(Error::param("sparsity_ks", format!("k = {k} exceeds n = {n}")));
            }
        }
        if self.shot_grid.is_empty() || self.shot_grid.contains(&0) {
            return Err(Error::param("shot_grid", "shot counts must be positive"));
        }
        if !self.allow_any_shots {
            if let Some(s) = self.shot_grid.iter().find(|&&s| s % 24 != 0) {
                return Err(Error::param("shot_grid", format!("{s} is not a multiple of 24")));
            }
        }
        if self.samples_per_cell == 0 {
            return Err(Error::param("samples", "must be at least 1"));
        }
        if self.backends.is_empty() {
            return Err(Error::param("backends", "no backend given"));
        }
        if self.mitigation_modes.is_empty() {
            return Err(Error::param("mitigation_modes", "no mitigation mode given"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::param("gamma", format!("{} outside (0, 1)", self.gamma)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::param("epsilon", format!("{} outside (0, 1)", self.epsilon)));
        }
        for b in &self.backends {
            b.noise.validate()?;
        }
        Ok(())
    }

    /// Expected row count, error rows included.
    pub fn cell_count(&self) -> usize {
        let ks: usize = self.sparsity_ks.iter().map(Vec::len).sum();
        ks * self.shot_grid.len() * self.samples_per_cell * self.backends.len() * self.mitigation_modes.len()
    }

    /// Stable fingerprint of the plan, used as the run id.
    pub fn run_id(&self) -> String {
        let json = serde_json::to_vec(self).expect("plan serializes");
        let words: Vec<u64> = json
            .chunks(8)
            .map(|c| c.iter().fold(0u64, |acc, &b| acc << 8 | u64::from(b)))
            .collect();
        format!("{:016x}", derive_seed(json.len() as u64, &words))
    }

    pub fn instance_seed(&self, n: usize, sample: usize) -> u64 {
        derive_seed(self.master_seed, &[TAG_INSTANCE, n as u64, sample as u64])
    }

    pub fn walk_seed(&self, n: usize, sample: usize) -> u64 {
        derive_seed(self.master_seed, &[TAG_WALK, n as u64, sample as u64])
    }

    /// The instance used by every cell sharing `(n, k, sample)`.
    pub fn instance(&self, n: usize, k: usize, sample: usize) -> Result<ProblemInstance> {
        let inst = generate_problem(n, k, self.gamma, self.instance_seed(n, sample))?;
        match self.rhs_policy {
            RhsPolicy::PerSample => Ok(inst),
            RhsPolicy::SharedPerSize => {
                let seed = derive_seed(self.master_seed, &[TAG_RHS, n as u64]);
                inst.with_b(random_rhs(inst.dim(), seed))
            }
        }
    }

    fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::with_capacity(self.cell_count());
        for (&n, ks) in self.sizes.iter().zip(&self.sparsity_ks) {
            for &k in ks {
                for backend in 0..self.backends.len() {
                    for &mitigation in &self.mitigation_modes {
                        for &shots in &self.shot_grid {
                            for sample in 0..self.samples_per_cell {
                                cells.push(Cell {
                                    n,
                                    k,
                                    backend,
                                    mitigation,
                                    shots,
                                    sample,
                                });
                            }
                        }
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    n: usize,
    k: usize,
    backend: usize,
    mitigation: bool,
    shots: usize,
    sample: usize,
}

/// A relative error, or the reason the cell failed.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Value(f64),
    Failed(String),
}

impl Outcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            Outcome::Value(v) => Some(*v),
            Outcome::Failed(_) => None,
        }
    }
}

const ERROR_MARKER: &str = "error: ";

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Outcome::Value(v) => s.serialize_str(&format!("{v:?}")),
            Outcome::Failed(msg) => s.serialize_str(&format!("{ERROR_MARKER}{msg}")),
        }
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.strip_prefix(ERROR_MARKER) {
            Some(msg) => Ok(Outcome::Failed(msg.to_string())),
            None => s.parse().map(Outcome::Value).map_err(serde::de::Error::custom),
        }
    }
}

/// One CSV row. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResultRow {
    pub run_id: String,
    pub n: usize,
    #[serde(rename = "N")]
    pub dim: usize,
    pub sparsity_level: f64,
    pub k: usize,
    pub shots: usize,
    pub sample_index: usize,
    pub backend: String,
    pub mitigation: bool,
    pub gamma: f64,
    pub c: usize,
    pub relative_error: Outcome,
    pub total_invalid: u64,
    pub total_retries: u64,
    pub condition_number: f64,
    pub seed: u64,
    pub wall_time_ms: u64,
}

pub const CSV_HEADER: [&str; 17] = [
    "run_id",
    "n",
    "N",
    "sparsity_level",
    "k",
    "shots",
    "sample_index",
    "backend",
    "mitigation",
    "gamma",
    "c",
    "relative_error",
    "total_invalid",
    "total_retries",
    "condition_number",
    "seed",
    "wall_time_ms",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorRow {
    pub n: usize,
    pub k: usize,
    pub shots: usize,
    pub sample_index: usize,
    pub backend: String,
    pub mitigation: bool,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub plan: ExperimentPlan,
    pub row_count: usize,
    pub seed_scheme: String,
    pub error_rows: Vec<ErrorRow>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepResultRow>,
    pub manifest: Manifest,
}

fn run_cell(plan: &ExperimentPlan, run_id: &str, cell: Cell) -> SweepResultRow {
    let started = Instant::now();
    let backend = &plan.backends[cell.backend];
    let mut row = SweepResultRow {
        run_id: run_id.to_string(),
        n: cell.n,
        dim: 1 << cell.n,
        sparsity_level: f64::NAN,
        k: cell.k,
        shots: cell.shots,
        sample_index: cell.sample,
        backend: backend.name.clone(),
        mitigation: cell.mitigation,
        gamma: plan.gamma,
        c: 0,
        relative_error: Outcome::Failed(String::new()),
        total_invalid: 0,
        total_retries: 0,
        condition_number: f64::NAN,
        seed: plan.instance_seed(cell.n, cell.sample),
        wall_time_ms: 0,
    };
    let result = plan.instance(cell.n, cell.k, cell.sample).and_then(|inst| {
        row.sparsity_level = inst.sparsity_level();
        row.condition_number = inst.condition_number();
        let config = SolverConfig {
            shots: cell.shots,
            epsilon: plan.epsilon,
            c_override: None,
            mitigation: cell.mitigation,
            max_retries: plan.max_retries,
            noise: backend.noise,
            master_seed: plan.walk_seed(cell.n, cell.sample),
        };
        solve(&inst, &config)
    });
    match result {
        Ok(report) => {
            row.c = report.c;
            row.relative_error = Outcome::Value(report.relative_error);
            row.total_invalid = report.invalid_stats.total_invalid;
            row.total_retries = report.invalid_stats.total_retries;
        }
        Err(e) => row.relative_error = Outcome::Failed(e.to_string().replace([',', '\n'], ";")),
    }
    row.wall_time_ms = started.elapsed().as_millis() as u64;
    row
}

/// Runs every cell of `plan`. `workers = None` uses the global pool.
///
/// Every cell with the same `(n, k, sample)` solves the same instance with
/// the same walk seeds, whatever its shot count, backend or mitigation mode.
/// Solver failures become marked rows instead of aborting the sweep.
pub fn run_plan(plan: &ExperimentPlan, workers: Option<usize>) -> Result<SweepOutput> {
    plan.validate()?;
    let run_id = plan.run_id();
    let cells = plan.cells();
    let work = || -> Vec<SweepResultRow> {
        cells
            .par_iter()
            .map(|&cell| run_cell(plan, &run_id, cell))
            .collect()
    };
    let rows = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::param("workers", e.to_string()))?
            .install(work),
        None => work(),
    };
    let error_rows = rows
        .iter()
        .filter_map(|r| match &r.relative_error {
            Outcome::Failed(msg) => Some(ErrorRow {
                n: r.n,
                k: r.k,
                shots: r.shots,
                sample_index: r.sample_index,
                backend: r.backend.clone(),
                mitigation: r.mitigation,
                message: msg.clone(),
            }),
            Outcome::Value(_) => None,
        })
        .collect();
    let manifest = Manifest {
        run_id,
        plan: plan.clone(),
        row_count: rows.len(),
        seed_scheme: "instance = mix(master, 1, n, sample); shared b = mix(master, 2, n); \
                      walks = mix(master, 3, n, sample) then mix(walk, component, shot)"
            .to_string(),
        error_rows,
    };
    Ok(SweepOutput { rows, manifest })
}

pub fn write_rows(path: &Path, rows: &[SweepResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<SweepResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(rows)
}

/// Writes `results.csv` and `manifest.json` under `dir`.
pub fn write_output(dir: &Path, out: &SweepOutput) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(RESULTS_FILE);
    let manifest_path = dir.join(MANIFEST_FILE);
    write_rows(&csv_path, &out.rows)?;
    let mut f = fs::File::create(&manifest_path)?;
    f.write_all(serde_json::to_string_pretty(&out.manifest)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok((csv_path, manifest_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_plan() -> ExperimentPlan {
        let mut plan = ExperimentPlan::new(
            vec![2],
            vec![Backend::resolve("noiseless").unwrap(), Backend::resolve("fake-casablanca").unwrap()],
            vec![false, true],
            42,
        );
        plan.shot_grid = vec![24, 48];
        plan.samples_per_cell = 3;
        plan
    }

    #[test]
    fn row_accounting_and_uniqueness() {
        let plan = tiny_plan();
        let out = run_plan(&plan, Some(1)).unwrap();
        assert_eq!(out.rows.len(), plan.cell_count());
        assert_eq!(out.rows.len(), 3 * 2 * 3 * 2 * 2);
        let mut keys = std::collections::HashSet::new();
        for r in &out.rows {
            assert!(keys.insert((r.run_id.clone(), r.n, r.k, r.shots, r.sample_index, r.backend.clone(), r.mitigation)));
            assert!(r.relative_error.value().is_some());
        }
        assert!(out.manifest.error_rows.is_empty());
    }

    #[test]
    fn instance_reused_across_cells() {
        let plan = tiny_plan();
        let a = plan.instance(2, 1, 2).unwrap();
        let dense = plan.instance(2, 0, 2).unwrap();
        assert_eq!(a.angles().triplets()[1], dense.angles().triplets()[1]);
        assert_eq!(a.b(), dense.b());
        assert_eq!(plan.instance(2, 0, 0).unwrap().b(), dense.b());
        let mut per = plan.clone();
        per.rhs_policy = RhsPolicy::PerSample;
        assert_ne!(per.instance(2, 0, 0).unwrap().b(), per.instance(2, 0, 1).unwrap().b());
    }

    #[test]
    fn validation_rejects_bad_plans() {
        let mut p = tiny_plan();
        p.shot_grid = vec![25];
        assert!(p.validate().is_err());
        p.allow_any_shots = true;
        assert!(p.validate().is_ok());
        let mut p = tiny_plan();
        p.sparsity_ks = vec![vec![3]];
        assert!(p.validate().is_err());
        let mut p = tiny_plan();
        p.mitigation_modes.clear();
        assert!(p.validate().is_err());
        assert!(Backend::resolve("no-such-backend").is_err());
    }

    #[test]
    fn solver_failures_become_marked_rows() {
        let mut plan = tiny_plan();
        plan.backends = vec![Backend {
            name: "broken".into(),
            noise: NoiseParams {
                enabled: true,
                readout_error: 1.0,
                ..NoiseParams::noiseless()
            },
        }];
        plan.mitigation_modes = vec![true];
        plan.max_retries = 2;
        plan.sparsity_ks = vec![vec![2]];
        let out = run_plan(&plan, None).unwrap();
        assert_eq!(out.rows.len(), plan.cell_count());
        assert!(out.rows.iter().all(|r| r.relative_error.value().is_none()));
        assert_eq!(out.manifest.error_rows.len(), out.rows.len());
    }

    #[test]
    fn csv_round_trip_with_error_marker() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mut out = run_plan(&tiny_plan(), None).unwrap();
        out.rows[0].relative_error = Outcome::Failed("retry budget exhausted".into());
        write_rows(&path, &out.rows).unwrap();
        let header = fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
        assert_eq!(header, CSV_HEADER.join(","));
        assert_eq!(read_rows(&path).unwrap(), out.rows);
    }
}
