use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qrw_core::harness::{
    aggregate, emit_plot, emit_table1, read_rows, run_plan, write_aggregate, write_aggregate_to, write_output, AxesSpec, Backend,
    ExperimentPlan, Manifest, Metric, RhsPolicy, DEFAULT_GAMMA, DEFAULT_SAMPLES, DEFAULT_SHOT_GRID,
};
use qrw_core::matrix_model::ProblemInstance;
use qrw_core::solver::{solve, SolverConfig, DEFAULT_EPSILON, DEFAULT_MAX_RETRIES};

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_INCOMPLETE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "qrw", version, about = "Quantum random-walk linear solver simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mitigate {
    Off,
    On,
}

impl Mitigate {
    fn enabled(self) -> bool {
        self == Mitigate::On
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PlotMetric {
    RelativeError,
    InvalidSteps,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print problem instances as plain-text records.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        /// Number of instances (sample indices 0..samples).
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Draw a fresh b per instance instead of one per size.
        #[arg(long)]
        per_sample_rhs: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one instance, read from a record file or generated from a seed.
    Solve {
        #[arg(long, conflicts_with_all = ["n", "k"])]
        instance: Option<PathBuf>,
        #[arg(long, required_unless_present = "instance")]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        sample: usize,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = 1008)]
        shots: usize,
        #[arg(long, default_value = "noiseless")]
        backend: String,
        #[arg(long, value_enum, default_value = "off")]
        mitigate: Mitigate,
        #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
        max_retries: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment sweep and write results.csv plus manifest.json.
    Sweep {
        /// Rerun the plan stored in a manifest; other plan flags are ignored.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required_unless_present = "manifest")]
        n: Vec<usize>,
        /// Zeroed-coin counts; defaults to 0..=n for each size.
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SHOT_GRID)]
        shot_grid: Vec<usize>,
        #[arg(long)]
        allow_any_shots: bool,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, value_delimiter = ',', default_value = "noiseless")]
        backend: Vec<String>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "off,on")]
        mitigate: Vec<Mitigate>,
        #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
        max_retries: u32,
        #[arg(long)]
        per_sample_rhs: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-cell mean, SEM and median of a results file.
    Aggregate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One SVG per (size, backend, mitigation); mitigation pairs share axes.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "relative-error")]
        metric: PlotMetric,
        #[arg(long)]
        out: PathBuf,
    },
    /// Unmitigated vs mitigated mean relative error over all sparsity levels.
    Table1 {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 1008)]
        shots: usize,
        #[arg(long, default_value = "fake-casablanca")]
        backend: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Runtime(qrw_core::Error),
    Incomplete(String),
}

impl From<qrw_core::Error> for Failure {
    fn from(e: qrw_core::Error) -> Self {
        match e {
            qrw_core::Error::Parameter { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other),
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Runtime(e.into())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            n,
            k,
            gamma,
            samples,
            seed,
            per_sample_rhs,
            out,
        } => {
            let mut plan = ExperimentPlan::new(vec![n], vec![Backend::resolve("noiseless")?], vec![false], seed);
            plan.gamma = gamma;
            if per_sample_rhs {
                plan.rhs_policy = RhsPolicy::PerSample;
            }
            let mut text = String::new();
            for sample in 0..samples {
                text.push_str(&plan.instance(n, k, sample)?.to_record());
                text.push('\n');
            }
            emit(&text, out.as_deref())
        }
        Command::Solve {
            instance,
            n,
            k,
            sample,
            gamma,
            epsilon,
            shots,
            backend,
            mitigate,
            max_retries,
            seed,
            out,
        } => {
            let inst = match instance {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| Failure::Runtime(e.into()))?;
                    ProblemInstance::parse_records(&text)?
                        .into_iter()
                        .next()
                        .ok_or_else(|| Failure::Usage(format!("{} holds no instance record", path.display())))?
                }
                None => {
                    let n = n.expect("clap enforces --n");
                    let mut plan = ExperimentPlan::new(vec![n], vec![Backend::resolve("noiseless")?], vec![false], seed);
                    plan.gamma = gamma;
                    plan.instance(n, k.unwrap_or(0), sample)?
                }
            };
            let config = SolverConfig {
                shots,
                epsilon,
                c_override: None,
                mitigation: mitigate.enabled(),
                max_retries,
                noise: Backend::resolve(&backend)?.noise,
                master_seed: seed,
            };
            let report = solve(&inst, &config)?;
            emit(&report.to_record(), out.as_deref())
        }
        Command::Sweep {
            manifest,
            n,
            k,
            shot_grid,
            allow_any_shots,
            samples,
            gamma,
            epsilon,
            backend,
            mitigate,
            max_retries,
            per_sample_rhs,
            seed,
            workers,
            out,
        } => {
            let plan = match manifest {
                Some(path) => Manifest::load(&path)?.plan,
                None => {
                    let backends = backend.iter().map(|b| Backend::resolve(b)).collect::<Result<Vec<_>, _>>()?;
                    let modes: Vec<bool> = mitigate
                        .iter()
                        .map(|m| m.enabled())
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    let mut plan = ExperimentPlan::new(n.clone(), backends, modes, seed);
                    if !k.is_empty() {
                        plan.sparsity_ks = n.iter().map(|_| k.clone()).collect();
                    }
                    plan.shot_grid = shot_grid;
                    plan.allow_any_shots = allow_any_shots;
                    plan.samples_per_cell = samples;
                    plan.gamma = gamma;
                    plan.epsilon = epsilon;
                    plan.max_retries = max_retries;
                    if per_sample_rhs {
                        plan.rhs_policy = RhsPolicy::PerSample;
                    }
                    plan
                }
            };
            let output = run_plan(&plan, workers)?;
            let (csv, manifest) = write_output(&out, &output)?;
            eprintln!(
                "{} rows ({} failed) -> {}; manifest {}",
                output.rows.len(),
                output.manifest.error_rows.len(),
                csv.display(),
                manifest.display()
            );
            Ok(())
        }
        Command::Aggregate { input, out } => {
            let rows = aggregate(&read_rows(&input)?)?;
            match out {
                Some(path) => write_aggregate(&path, &rows)?,
                None => write_aggregate_to(std::io::stdout().lock(), &rows)?,
            }
            Ok(())
        }
        Command::Plot { input, metric, out } => {
            let metric = match metric {
                PlotMetric::RelativeError => Metric::RelativeError,
                PlotMetric::InvalidSteps => Metric::InvalidSteps,
            };
            let rows = aggregate(&read_rows(&input)?)?;
            fs::create_dir_all(&out).map_err(|e| Failure::Runtime(e.into()))?;
            let groups: BTreeSet<(usize, String)> = rows.iter().map(|r| (r.n, r.backend.clone())).collect();
            for (n, backend) in groups {
                let split: Vec<(bool, Vec<_>)> = [false, true]
                    .into_iter()
                    .map(|m| {
                        let part = rows
                            .iter()
                            .filter(|r| r.n == n && r.backend == backend && r.mitigation == m)
                            .cloned()
                            .collect::<Vec<_>>();
                        (m, part)
                    })
                    .filter(|(_, part)| !part.is_empty())
                    .collect();
                let parts: Vec<&[_]> = split.iter().map(|(_, p)| p.as_slice()).collect();
                let title = format!("N={} {backend}", 1usize << n);
                let axes = AxesSpec::fit(title.clone(), metric, &parts)?;
                for (m, part) in &split {
                    let label = if *m { "mitigated" } else { "unmitigated" };
                    let axes = AxesSpec {
                        title: format!("{title} {label}"),
                        ..axes.clone()
                    };
                    let path = out.join(format!("n{n}_{backend}_{label}.svg"));
                    for warning in emit_plot(part, &axes, &path)? {
                        eprintln!("warning: {warning}");
                    }
                    println!("{}", path.display());
                }
            }
            Ok(())
        }
        Command::Table1 {
            input,
            n,
            shots,
            backend,
            out,
        } => {
            let rows = aggregate(&read_rows(&input)?)?;
            let table = emit_table1(&rows, n, shots, &backend);
            emit(&table.text, out.as_deref())?;
            if table.is_complete() {
                Ok(())
            } else {
                Err(Failure::Incomplete(format!("missing cells: {}", table.missing.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Incomplete(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INCOMPLETE)
        }
    }
}
