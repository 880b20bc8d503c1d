//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- 5 7`.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;

use qrw_core::circuit_sim::{NoiseParams, StepCircuit};
use qrw_core::harness::{run_plan, write_output, Backend, ExperimentPlan, Manifest, SweepResultRow};
use qrw_core::matrix_model::{generate_problem, AngleTriplet, CoinAngles, ProblemInstance};
use qrw_core::oracle::{enumerate_walk_expectation, neumann_truncated, relative_error};
use qrw_core::seed::{derive_seed, rng_from_seed};
use qrw_core::solver::{solve, SolverConfig};

use common::{chi_square_p_value, median, pearson};

type Verdict = Result<String, String>;

const MASTER_SEED: u64 = 20_231_108;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("{what} took {elapsed:?}, limit {limit:?}"))
    }
}

// 1 ------------------------------------------------------------------------

fn oracle_identity() -> Verdict {
    let started = Instant::now();
    let mut rng = rng_from_seed(derive_seed(MASTER_SEED, &[1]));
    let mut worst: f64 = 0.0;
    for case in 0..100u64 {
        let n = if case % 2 == 0 { 2 } else { 3 };
        let k = rng.gen_range(0..=n);
        let gamma = rng.gen_range(0.05..0.95);
        let c = rng.gen_range(0..=6);
        let inst = generate_problem(n, k, gamma, derive_seed(MASTER_SEED, &[1, case])).map_err(|e| e.to_string())?;
        let series = neumann_truncated(&inst, c);
        for (i, &target) in series.iter().enumerate() {
            let enumerated = enumerate_walk_expectation(&inst, i, c).map_err(|e| e.to_string())?;
            worst = worst.max((enumerated - target).abs());
        }
    }
    within(started.elapsed(), Duration::from_secs(10), "enumeration")?;
    check(worst <= 1e-10, format!("max |enumerated - series| = {worst:.3e} (tol 1e-10)"))
}

// 2 ------------------------------------------------------------------------

fn circuit_fidelity() -> Verdict {
    let started = Instant::now();
    let mut rng = rng_from_seed(derive_seed(MASTER_SEED, &[2]));
    let mut min_p = f64::INFINITY;
    let mut failures = Vec::new();
    for case in 0..100u64 {
        let n = 1 + (case as usize % 4);
        let triplets = (0..n)
            .map(|_| {
                AngleTriplet::new(rng.gen_range(-PI..=PI), rng.gen_range(-PI..=PI), rng.gen_range(-PI..=PI))
            })
            .collect();
        let mut angles = CoinAngles::new(triplets).unwrap();
        if case % 5 == 4 {
            angles = qrw_core::matrix_model::apply_sparsity(&angles, 1).unwrap();
        }
        let p = qrw_core::matrix_model::build_transition_matrix(&angles);
        let start = rng.gen_range(0..angles.dim());
        let circuit = StepCircuit::new(&angles, &NoiseParams::noiseless());
        let mut step_rng = rng_from_seed(derive_seed(MASTER_SEED, &[2, case]));
        let mut counts = vec![0u64; angles.dim()];
        for _ in 0..100_000 {
            counts[circuit.sample_node(start, &mut step_rng).unwrap()] += 1;
        }
        match chi_square_p_value(&counts, &p.row(start)) {
            Some(pv) => {
                min_p = min_p.min(pv);
                if pv <= 0.001 {
                    failures.push(format!("case {case}: p = {pv:.2e}"));
                }
            }
            None => failures.push(format!("case {case}: structural zero sampled")),
        }
    }
    within(started.elapsed(), Duration::from_secs(120), "chi-square sweep")?;
    check(
        failures.is_empty(),
        format!("100 cases x 1e5 samples, min p-value {min_p:.4} (alpha 0.001) {failures:?}"),
    )
}

// 3 ------------------------------------------------------------------------

fn identity_exactness() -> Verdict {
    let mut worst: f64 = 0.0;
    for n in [2usize, 4] {
        let angles = CoinAngles::from_thetas(&vec![0.0; n]).unwrap();
        let b = qrw_core::matrix_model::random_rhs(1 << n, 3);
        let inst = ProblemInstance::new(angles, n, 0.5, b, 3).unwrap();
        let cfg = SolverConfig {
            shots: 24,
            c_override: Some(7),
            ..Default::default()
        };
        let report = solve(&inst, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max((report.relative_error - 0.00390625).abs());
    }
    check(
        worst <= 1e-12,
        format!("|relative_error - 0.5^8| = {worst:.3e} (tol 1e-12)"),
    )
}

// 4 ------------------------------------------------------------------------

fn medians_by_k(rows: &[SweepResultRow], mitigation: bool, shots: usize) -> BTreeMap<usize, f64> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.mitigation == mitigation && r.shots == shots) {
        if let Some(v) = r.relative_error.value() {
            groups.entry(r.k).or_default().push(v);
        }
    }
    groups.into_iter().map(|(k, mut v)| (k, median(&mut v))).collect()
}

fn noiseless_sparsity_trend() -> Verdict {
    let started = Instant::now();
    let mut plan = ExperimentPlan::new(vec![3], vec![Backend::resolve("noiseless").unwrap()], vec![false], MASTER_SEED);
    plan.shot_grid = vec![1008];
    let out = run_plan(&plan, None).map_err(|e| e.to_string())?;
    within(started.elapsed(), Duration::from_secs(600), "noiseless sweep")?;
    let med: Vec<f64> = medians_by_k(&out.rows, false, 1008).into_values().collect();
    let mut violations = 0;
    let mut too_large = false;
    for w in med.windows(2) {
        if w[1] > w[0] {
            violations += 1;
            too_large |= w[1] > 1.10 * w[0];
        }
    }
    check(
        med.len() == 4 && violations <= 1 && !too_large,
        format!("medians over sparsity 0/0.5/0.75/0.875: {}", fmt_pct(&med)),
    )
}

// 5-8: shared n = 4 fake-casablanca sweep ----------------------------------

fn casablanca_sweep() -> &'static Result<(Vec<SweepResultRow>, Duration), String> {
    static SWEEP: OnceLock<Result<(Vec<SweepResultRow>, Duration), String>> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let started = Instant::now();
        let plan = ExperimentPlan::new(
            vec![4],
            vec![Backend::resolve("fake-casablanca").unwrap()],
            vec![false, true],
            MASTER_SEED,
        );
        run_plan(&plan, None)
            .map(|out| (out.rows, started.elapsed()))
            .map_err(|e| e.to_string())
    })
}

fn fmt_pct(v: &[f64]) -> String {
    v.iter().map(|x| format!("{:.2}%", 100.0 * x)).collect::<Vec<_>>().join(" / ")
}

fn noisy_reversal() -> Verdict {
    let (rows, elapsed) = casablanca_sweep().as_ref().map_err(Clone::clone)?;
    within(*elapsed, Duration::from_secs(1800), "casablanca sweep")?;
    let med = medians_by_k(rows, false, 1008);
    let ratio = med[&4] / med[&0];
    check(
        ratio >= 1.5,
        format!(
            "unmitigated medians {} ; sparsity 0.9375 / dense = {ratio:.2} (need >= 1.5)",
            fmt_pct(&med.values().copied().collect::<Vec<_>>())
        ),
    )
}

fn invalid_step_growth() -> Verdict {
    let (rows, _) = casablanca_sweep().as_ref().map_err(Clone::clone)?;
    let mut means: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.mitigation && r.relative_error.value().is_some()) {
        means.entry((r.k, r.shots)).or_default().push(r.total_invalid as f64);
    }
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let mut details = Vec::new();
    let mut ok = true;
    for k in 1..=4 {
        let (shots, vals): (Vec<f64>, Vec<f64>) = means
            .iter()
            .filter(|((kk, _), _)| *kk == k)
            .map(|((_, s), v)| (*s as f64, mean(v)))
            .unzip();
        let r = pearson(&shots, &vals);
        ok &= r > 0.99;
        details.push(format!("k={k} corr {r:.5}"));
    }
    let at_max: Vec<f64> = (0..=4).map(|k| mean(&means[&(k, 1008)])).collect();
    let increasing = at_max.windows(2).all(|w| w[1] > w[0]);
    ok &= increasing;
    details.push(format!(
        "mean invalid at 1008 shots by sparsity: {}",
        at_max.iter().map(|v| format!("{v:.1}")).collect::<Vec<_>>().join(" < ")
    ));
    check(ok, details.join("; "))
}

fn mitigation_recovery() -> Verdict {
    let (rows, _) = casablanca_sweep().as_ref().map_err(Clone::clone)?;
    let off = medians_by_k(rows, false, 1008);
    let on = medians_by_k(rows, true, 1008);
    let on_v: Vec<f64> = on.values().copied().collect();
    let non_increasing = on_v.windows(2).all(|w| w[1] <= w[0]);
    let dominated = (0..=4).all(|k| on[&k] <= off[&k]);
    let sparse_ok = on[&4] < 0.005;
    check(
        non_increasing && dominated && sparse_ok,
        format!(
            "mitigated {} ; unmitigated {} ; non-increasing={non_increasing} mitigated<=unmitigated={dominated} sparsest<0.5%={sparse_ok}",
            fmt_pct(&on_v),
            fmt_pct(&off.values().copied().collect::<Vec<_>>())
        ),
    )
}

fn mitigation_noop_dense() -> Verdict {
    let (rows, _) = casablanca_sweep().as_ref().map_err(Clone::clone)?;
    let off = medians_by_k(rows, false, 1008)[&0];
    let on = medians_by_k(rows, true, 1008)[&0];
    let rel = (on - off).abs() / off;
    check(
        rel < 0.15,
        format!("dense medians: mitigated {:.3}% unmitigated {:.3}%, relative difference {rel:.4} (< 0.15)", 100.0 * on, 100.0 * off),
    )
}

// 9 ------------------------------------------------------------------------

fn shot_convergence() -> Verdict {
    let grid = qrw_core::harness::DEFAULT_SHOT_GRID;
    let reps = 200u64;
    let mut mean_err = vec![0.0; grid.len()];
    for rep in 0..reps {
        let inst = generate_problem(2, 0, 0.5, derive_seed(MASTER_SEED, &[9, rep])).map_err(|e| e.to_string())?;
        for (slot, &shots) in grid.iter().enumerate() {
            let cfg = SolverConfig {
                shots,
                master_seed: derive_seed(MASTER_SEED, &[90, rep]),
                ..Default::default()
            };
            let report = solve(&inst, &cfg).map_err(|e| e.to_string())?;
            let target = neumann_truncated(&inst, report.c);
            mean_err[slot] += relative_error(&report.estimate, &target).map_err(|e| e.to_string())? / reps as f64;
        }
    }
    let base = mean_err[0] * (grid[0] as f64).sqrt();
    let ratios: Vec<f64> = grid
        .iter()
        .zip(&mean_err)
        .map(|(&s, &e)| e * (s as f64).sqrt() / base)
        .collect();
    let ok = ratios.iter().all(|r| (0.5..=2.0).contains(r));
    check(
        ok,
        format!(
            "error*sqrt(shots) relative to 24 shots: {}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

// 10 -----------------------------------------------------------------------

fn strip_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut plan = ExperimentPlan::new(
        vec![2, 3],
        vec![Backend::resolve("noiseless").unwrap(), Backend::resolve("fake-boeblingen").unwrap()],
        vec![false, true],
        MASTER_SEED,
    );
    plan.shot_grid = vec![24, 48];
    plan.samples_per_cell = 3;
    let first = run_plan(&plan, Some(1)).map_err(|e| e.to_string())?;
    let (csv_a, manifest_path) = write_output(&dir.path().join("a"), &first).map_err(|e| e.to_string())?;

    let manifest = Manifest::load(&manifest_path).map_err(|e| e.to_string())?;
    let second = run_plan(&manifest.plan, Some(3)).map_err(|e| e.to_string())?;
    let (csv_b, _) = write_output(&dir.path().join("b"), &second).map_err(|e| e.to_string())?;

    let a = strip_wall_time(&std::fs::read_to_string(csv_a).unwrap());
    let b = strip_wall_time(&std::fs::read_to_string(csv_b).unwrap());
    check(
        a == b && first.rows.len() == plan.cell_count(),
        format!("{} rows, identical after dropping wall_time_ms: {}", first.rows.len(), a == b),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict); 10] = [
        (1, "oracle identity", oracle_identity),
        (2, "circuit fidelity", circuit_fidelity),
        (3, "identity-instance exactness", identity_exactness),
        (4, "noiseless sparsity trend", noiseless_sparsity_trend),
        (5, "noisy reversal", noisy_reversal),
        (6, "invalid-step growth", invalid_step_growth),
        (7, "mitigation recovery", mitigation_recovery),
        (8, "mitigation no-op on dense", mitigation_noop_dense),
        (9, "shot convergence", shot_convergence),
        (10, "determinism", determinism),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let started = Instant::now();
        let verdict = run();
        let secs = started.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS criterion {id:>2} ({name}) [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id:>2} ({name}) [{secs:.1}s]: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
