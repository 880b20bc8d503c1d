//! Monte Carlo random-walk estimator for `x = (1 − γP)⁻¹ b`.
//!
//! Component `I₀` is the expectation of `Σ_{s=0}^{c} γ^s b[I_s]` over walks
//! `I₀ → I₁ → … → I_c` whose steps are sampled from the step circuit. Under
//! noise a step may land on a transition that `P` forbids (an *invalid*
//! step). Unmitigated walks accept it and carry on from the wrong node;
//! mitigated walks look the transition up in the structural-zero mask and
//! re-sample from the same node.
//!
//! `shots` counts walks per solution component.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::circuit_sim::{NoiseParams, StepCircuit};
use crate::error::{Error, Result};
use crate::matrix_model::{ProblemInstance, TransitionMatrix};
use crate::oracle::{exact_solve, relative_error};
use crate::seed::{derive_seed, rng_from_seed, WalkRng};

pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_MAX_RETRIES: u32 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Walks per solution component.
    pub shots: usize,
    /// Target sampling error used to pick the walk length.
    pub epsilon: f64,
    /// Explicit walk length; overrides `epsilon`.
    pub c_override: Option<usize>,
    pub mitigation: bool,
    /// Re-samples allowed per step before giving up (mitigated mode).
    pub max_retries: u32,
    pub noise: NoiseParams,
    pub master_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            shots: 1008,
            epsilon: DEFAULT_EPSILON,
            c_override: None,
            mitigation: false,
            max_retries: DEFAULT_MAX_RETRIES,
            noise: NoiseParams::noiseless(),
            master_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::param("shots", "must be at least 1"));
        }
        if self.c_override.is_none() && !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::param("epsilon", format!("{} outside (0, 1)", self.epsilon)));
        }
        if self.mitigation && self.max_retries == 0 {
            return Err(Error::param("max_retries", "must be at least 1 with mitigation"));
        }
        self.noise.validate()
    }

    /// Walk length for a given `γ`.
    pub fn walk_length(&self, gamma: f64) -> Result<usize> {
        match self.c_override {
            Some(c) => Ok(c),
            None => truncation_length(gamma, self.epsilon),
        }
    }
}

/// `ceil(log(1/ε) / log(1/γ))`, at least 1.
pub fn truncation_length(gamma: f64, epsilon: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("gamma", format!("{gamma} outside (0, 1)")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", format!("{epsilon} outside (0, 1)")));
    }
    let ratio = epsilon.ln() / gamma.ln();
    // absorb rounding when the ratio is an integer in exact arithmetic
    let c = (ratio - 1e-9).ceil();
    Ok((c as usize).max(1))
}

/// True when `i → j` is forbidden by construction.
#[inline]
pub fn detect_invalid(p: &TransitionMatrix, i: usize, j: usize) -> bool {
    p.is_structural_zero(i, j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkRecord {
    pub start_component: usize,
    /// `I₀ … I_c`
    pub trajectory: Vec<usize>,
    /// `Σ_{s=0}^{c} γ^s b[I_s]`
    pub contribution: f64,
    /// Invalid transitions that were accepted (unmitigated).
    pub invalid_steps: u32,
    /// Invalid samples that were discarded and re-sampled (mitigated).
    pub retries: u32,
    /// Invalid samples seen at each step index, accepted or retried.
    pub invalid_by_step: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvalidStepStats {
    pub total_invalid: u64,
    pub total_retries: u64,
    pub shots: u64,
    /// `(total_invalid + total_retries) / shots`
    pub per_shot_mean: f64,
    pub by_step_index: Vec<u64>,
}

impl InvalidStepStats {
    fn empty(c: usize) -> Self {
        Self {
            by_step_index: vec![0; c],
            ..Default::default()
        }
    }

    fn add_record(&mut self, rec: &WalkRecord) {
        self.total_invalid += u64::from(rec.invalid_steps);
        self.total_retries += u64::from(rec.retries);
        self.shots += 1;
        for (acc, &v) in self.by_step_index.iter_mut().zip(&rec.invalid_by_step) {
            *acc += u64::from(v);
        }
        self.refresh_mean();
    }

    pub fn merge(&mut self, other: &InvalidStepStats) {
        self.total_invalid += other.total_invalid;
        self.total_retries += other.total_retries;
        self.shots += other.shots;
        if self.by_step_index.len() < other.by_step_index.len() {
            self.by_step_index.resize(other.by_step_index.len(), 0);
        }
        for (acc, &v) in self.by_step_index.iter_mut().zip(&other.by_step_index) {
            *acc += v;
        }
        self.refresh_mean();
    }

    fn refresh_mean(&mut self) {
        self.per_shot_mean = if self.shots == 0 {
            0.0
        } else {
            (self.total_invalid + self.total_retries) as f64 / self.shots as f64
        };
    }
}

/// Walk sampler bound to one instance and configuration.
pub struct Walker<'a> {
    instance: &'a ProblemInstance,
    config: &'a SolverConfig,
    circuit: StepCircuit,
    c: usize,
}

impl<'a> Walker<'a> {
    pub fn new(instance: &'a ProblemInstance, config: &'a SolverConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            instance,
            config,
            circuit: StepCircuit::new(instance.angles(), &config.noise),
            c: config.walk_length(instance.gamma())?,
        })
    }

    pub fn walk_length(&self) -> usize {
        self.c
    }

    /// Seed of shot `shot` for component `start`.
    pub fn shot_seed(&self, start: usize, shot: usize) -> u64 {
        derive_seed(self.config.master_seed, &[start as u64, shot as u64])
    }

    /// One walk; `shot` only labels errors.
    pub fn walk(&self, start: usize, shot: usize, rng: &mut WalkRng) -> Result<WalkRecord> {
        let dim = self.instance.dim();
        if start >= dim {
            return Err(Error::param("I0", format!("node {start} outside [0, {dim})")));
        }
        let p = self.instance.matrix();
        let b = self.instance.b();
        let gamma = self.instance.gamma();

        let mut trajectory = Vec::with_capacity(self.c + 1);
        trajectory.push(start);
        let mut invalid_by_step = vec![0u32; self.c];
        let (mut invalid_steps, mut retries) = (0u32, 0u32);
        let mut current = start;
        let mut weight = 1.0;
        let mut contribution = b[start];

        for (step, events) in invalid_by_step.iter_mut().enumerate() {
            let mut rejected = 0u32;
            let next = loop {
                let next = self.circuit.sample_node(current, rng)?;
                if !detect_invalid(p, current, next) {
                    break next;
                }
                *events += 1;
                if !self.config.mitigation {
                    invalid_steps += 1;
                    break next;
                }
                retries += 1;
                rejected += 1;
                if rejected > self.config.max_retries {
                    return Err(Error::RetryExhausted {
                        component: start,
                        shot,
                        step,
                        node: current,
                        max_retries: self.config.max_retries,
                    });
                }
            };
            weight *= gamma;
            contribution += weight * b[next];
            trajectory.push(next);
            current = next;
        }

        Ok(WalkRecord {
            start_component: start,
            trajectory,
            contribution,
            invalid_steps,
            retries,
            invalid_by_step,
        })
    }

    /// All shots for one component, in shot order.
    pub fn records(&self, start: usize) -> Result<Vec<WalkRecord>> {
        (0..self.config.shots)
            .into_par_iter()
            .map(|shot| {
                let mut rng = rng_from_seed(self.shot_seed(start, shot));
                self.walk(start, shot, &mut rng)
            })
            .collect()
    }

    pub fn estimate(&self, start: usize) -> Result<(f64, InvalidStepStats)> {
        let records = self.records(start)?;
        let mut stats = InvalidStepStats::empty(self.c);
        // sequential sum keeps the result independent of scheduling
        let mut sum = 0.0;
        for rec in &records {
            sum += rec.contribution;
            stats.add_record(rec);
        }
        Ok((sum / records.len() as f64, stats))
    }
}

/// One walk from `start` using the caller's generator.
pub fn run_walk(
    start: usize,
    instance: &ProblemInstance,
    config: &SolverConfig,
    rng: &mut WalkRng,
) -> Result<WalkRecord> {
    Walker::new(instance, config)?.walk(start, 0, rng)
}

pub fn estimate_component(
    start: usize,
    instance: &ProblemInstance,
    config: &SolverConfig,
) -> Result<(f64, InvalidStepStats)> {
    Walker::new(instance, config)?.estimate(start)
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub estimate: Vec<f64>,
    pub exact: Vec<f64>,
    pub relative_error: f64,
    /// Whole-solve totals.
    pub invalid_stats: InvalidStepStats,
    pub per_component: Vec<InvalidStepStats>,
    pub c: usize,
    pub gamma: f64,
    pub config: SolverConfig,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn to_record(&self) -> String {
        let fmt_vec = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let mut s = String::from("[solve]\n");
        let _ = writeln!(s, "gamma = {:?}", self.gamma);
        let _ = writeln!(s, "c = {}", self.c);
        let _ = writeln!(s, "shots_per_component = {}", self.config.shots);
        let _ = writeln!(s, "mitigation = {}", self.config.mitigation);
        let _ = writeln!(s, "max_retries = {}", self.config.max_retries);
        let _ = writeln!(s, "master_seed = {}", self.config.master_seed);
        let _ = writeln!(s, "noise_enabled = {}", self.config.noise.enabled);
        let _ = writeln!(s, "relative_error = {:?}", self.relative_error);
        let _ = writeln!(s, "total_invalid = {}", self.invalid_stats.total_invalid);
        let _ = writeln!(s, "total_retries = {}", self.invalid_stats.total_retries);
        let _ = writeln!(s, "invalid_per_shot = {:?}", self.invalid_stats.per_shot_mean);
        let by_step: Vec<String> = self.invalid_stats.by_step_index.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "invalid_by_step = {}", by_step.join(" "));
        let _ = writeln!(s, "estimate = {}", fmt_vec(&self.estimate));
        let _ = writeln!(s, "exact = {}", fmt_vec(&self.exact));
        let _ = writeln!(s, "wall_time_ms = {}", self.wall_time.as_millis());
        s
    }
}

pub fn solve(instance: &ProblemInstance, config: &SolverConfig) -> Result<SolveReport> {
    let started = Instant::now();
    let walker = Walker::new(instance, config)?;
    let per: Vec<(f64, InvalidStepStats)> = (0..instance.dim())
        .into_par_iter()
        .map(|i| walker.estimate(i))
        .collect::<Result<_>>()?;
    let exact = exact_solve(instance)?.x;
    let estimate: Vec<f64> = per.iter().map(|(e, _)| *e).collect();
    let mut invalid_stats = InvalidStepStats::empty(walker.walk_length());
    for (_, s) in &per {
        invalid_stats.merge(s);
    }
    Ok(SolveReport {
        relative_error: relative_error(&estimate, &exact)?,
        estimate,
        exact,
        invalid_stats,
        per_component: per.into_iter().map(|(_, s)| s).collect(),
        c: walker.walk_length(),
        gamma: instance.gamma(),
        config: config.clone(),
        wall_time: started.elapsed(),
    })
}
