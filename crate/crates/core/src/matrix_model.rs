//! Coin angles, Hamming-cube transition matrices and problem instances.
//!
//! A walk on `N = 2^n` nodes is driven by `n` independent coins. Coin `l`
//! flips bit `l` of the current node with probability `sin²(θ_l/2)`, so the
//! one-step transition probability between two nodes depends only on their
//! XOR and factorizes over bits. Setting `θ_l = 0` forbids flipping bit `l`
//! and zeroes half of the remaining entries of `P`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Largest supported coin count.
pub const MAX_COINS: usize = 8;

/// One coin's `(θ, φ, λ)` in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleTriplet {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
}

impl AngleTriplet {
    pub const fn new(theta: f64, phi: f64, lambda: f64) -> Self {
        Self { theta, phi, lambda }
    }

    fn validate(&self, index: usize) -> Result<()> {
        for (name, v) in [("theta", self.theta), ("phi", self.phi), ("lambda", self.lambda)] {
            if !(-PI..=PI).contains(&v) {
                return Err(Error::param(
                    "angles",
                    format!("{name} of coin {index} is {v}, outside [-pi, pi]"),
                ));
            }
        }
        Ok(())
    }
}

/// The `n` coin triplets defining a walk.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinAngles {
    triplets: Vec<AngleTriplet>,
}

impl CoinAngles {
    pub fn new(triplets: Vec<AngleTriplet>) -> Result<Self> {
        if triplets.is_empty() || triplets.len() > MAX_COINS {
            return Err(Error::param(
                "n",
                format!("coin count {} outside 1..={MAX_COINS}", triplets.len()),
            ));
        }
        for (i, t) in triplets.iter().enumerate() {
            t.validate(i)?;
        }
        Ok(Self { triplets })
    }

    /// Convenience constructor with `φ = λ = 0`.
    pub fn from_thetas(thetas: &[f64]) -> Result<Self> {
        Self::new(thetas.iter().map(|&t| AngleTriplet::new(t, 0.0, 0.0)).collect())
    }

    pub fn n(&self) -> usize {
        self.triplets.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n()
    }

    pub fn triplets(&self) -> &[AngleTriplet] {
        &self.triplets
    }

    /// Number of coins whose θ is exactly zero.
    pub fn zeroed_count(&self) -> usize {
        self.triplets.iter().filter(|t| t.theta == 0.0).count()
    }
}

/// `(p_stay, p_flip) = (cos²(θ/2), sin²(θ/2))`.
///
/// `θ = 0` and `θ = ±π` return exact zeros so that structural zeros never
/// pick up rounding residue.
pub fn coin_flip_probability(triplet: &AngleTriplet) -> (f64, f64) {
    let theta = triplet.theta;
    if theta == 0.0 {
        (1.0, 0.0)
    } else if theta.abs() == PI {
        (0.0, 1.0)
    } else {
        let (s, c) = (theta / 2.0).sin_cos();
        (c * c, s * s)
    }
}

/// Row-stochastic, symmetric `N x N` matrix with its structural-zero mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    /// Probability of moving by XOR offset `x`; `P[i][j] = kernel[i ^ j]`.
    kernel: Vec<f64>,
    zero_kernel: Vec<bool>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.kernel.len()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.kernel[i ^ j]
    }

    /// Constant-time structural-zero lookup.
    #[inline]
    pub fn is_structural_zero(&self, i: usize, j: usize) -> bool {
        self.zero_kernel[i ^ j]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.dim()).map(|j| self.get(i, j)).collect()
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| self.row(i)).collect()
    }

    pub fn structural_zero_count(&self) -> usize {
        // every row is a permutation of the kernel
        self.dim() * self.zero_kernel.iter().filter(|&&z| z).count()
    }

    /// `y = P v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        (0..dim)
            .map(|i| (0..dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }
}

pub fn build_transition_matrix(angles: &CoinAngles) -> TransitionMatrix {
    let factors: Vec<(f64, f64)> = angles.triplets().iter().map(coin_flip_probability).collect();
    let dim = angles.dim();
    let mut kernel = Vec::with_capacity(dim);
    let mut zero_kernel = Vec::with_capacity(dim);
    for x in 0..dim {
        let mut p = 1.0;
        let mut zero = false;
        for (l, &(stay, flip)) in factors.iter().enumerate() {
            let f = if x >> l & 1 == 1 { flip } else { stay };
            zero |= f == 0.0;
            p *= f;
        }
        kernel.push(if zero { 0.0 } else { p });
        zero_kernel.push(zero);
    }
    TransitionMatrix {
        n: angles.n(),
        kernel,
        zero_kernel,
    }
}

/// Zeroes θ of the first `k` coins.
pub fn apply_sparsity(angles: &CoinAngles, k: usize) -> Result<CoinAngles> {
    if k > angles.n() {
        return Err(Error::param("k", format!("{k} exceeds coin count {}", angles.n())));
    }
    let mut triplets = angles.triplets().to_vec();
    for t in triplets.iter_mut().take(k) {
        t.theta = 0.0;
    }
    Ok(CoinAngles { triplets })
}

pub fn measure_sparsity(p: &TransitionMatrix) -> f64 {
    let dim = p.dim() as f64;
    p.structural_zero_count() as f64 / (dim * dim)
}

/// Nominal sparsity after zeroing `k` generic coins.
pub fn sparsity_for_k(k: usize) -> f64 {
    1.0 - 0.5f64.powi(k as i32)
}

/// 2-norm condition number of `A = 1 - γP`.
///
/// `P` is symmetric and diagonalized by the Walsh–Hadamard basis; its
/// eigenvalues are `Π_{l∈S} (p_stay_l − p_flip_l)` over all bit subsets `S`.
pub fn condition_number(angles: &CoinAngles, gamma: f64) -> f64 {
    let biases: Vec<f64> = angles
        .triplets()
        .iter()
        .map(|t| {
            let (stay, flip) = coin_flip_probability(t);
            stay - flip
        })
        .collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for subset in 0..angles.dim() {
        let mu: f64 = biases
            .iter()
            .enumerate()
            .filter(|(l, _)| subset >> l & 1 == 1)
            .map(|(_, b)| b)
            .product();
        let eig = 1.0 - gamma * mu;
        lo = lo.min(eig);
        hi = hi.max(eig);
    }
    hi / lo
}

/// A full linear system `(1 − γP) x = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    angles: CoinAngles,
    matrix: TransitionMatrix,
    gamma: f64,
    b: Vec<f64>,
    k: usize,
    sparsity_level: f64,
    seed: u64,
    condition_number: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::param("gamma", format!("{gamma} outside (0, 1)")))
    }
}

impl ProblemInstance {
    /// Builds an instance from explicit angles and right-hand side.
    ///
    /// `k` is the number of leading coins whose θ was zeroed; it is
    /// bookkeeping for sweeps and must agree with the angles.
    pub fn new(angles: CoinAngles, k: usize, gamma: f64, b: Vec<f64>, seed: u64) -> Result<Self> {
        check_gamma(gamma)?;
        if k > angles.n() || angles.triplets()[..k].iter().any(|t| t.theta != 0.0) {
            return Err(Error::param("k", format!("first {k} thetas are not all zero")));
        }
        if b.len() != angles.dim() {
            return Err(Error::param(
                "b",
                format!("length {} does not match N = {}", b.len(), angles.dim()),
            ));
        }
        if let Some(v) = b.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::param("b", format!("component {v} outside [-1, 1]")));
        }
        let matrix = build_transition_matrix(&angles);
        let sparsity_level = measure_sparsity(&matrix);
        let condition_number = condition_number(&angles, gamma);
        Ok(Self {
            angles,
            matrix,
            gamma,
            b,
            k,
            sparsity_level,
            seed,
            condition_number,
        })
    }

    /// Same system with a different right-hand side.
    pub fn with_b(&self, b: Vec<f64>) -> Result<Self> {
        Self::new(self.angles.clone(), self.k, self.gamma, b, self.seed)
    }

    pub fn angles(&self) -> &CoinAngles {
        &self.angles
    }
    pub fn matrix(&self) -> &TransitionMatrix {
        &self.matrix
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn b(&self) -> &[f64] {
        &self.b
    }
    pub fn n(&self) -> usize {
        self.angles.n()
    }
    pub fn dim(&self) -> usize {
        self.angles.dim()
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn sparsity_level(&self) -> f64 {
        self.sparsity_level
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn condition_number(&self) -> f64 {
        self.condition_number
    }

    /// Plain-text record; floats use the shortest round-trip representation.
    pub fn to_record(&self) -> String {
        let mut out = String::from("[instance]\n");
        let _ = writeln!(out, "n = {}", self.n());
        let _ = writeln!(out, "k = {}", self.k);
        let _ = writeln!(out, "gamma = {:?}", self.gamma);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "sparsity_level = {:?}", self.sparsity_level);
        let _ = writeln!(out, "condition_number = {:?}", self.condition_number);
        for (l, t) in self.angles.triplets().iter().enumerate() {
            let _ = writeln!(out, "angle.{l} = {:?} {:?} {:?}", t.theta, t.phi, t.lambda);
        }
        let b: Vec<String> = self.b.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "b = {}", b.join(" "));
        out
    }

    /// Parses every `[instance]` record in `text`.
    pub fn parse_records(text: &str) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        let mut current: Option<RecordBuilder> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "[instance]" {
                if let Some(builder) = current.take() {
                    out.push(builder.finish(line_no)?);
                }
                current = Some(RecordBuilder::default());
                continue;
            }
            let builder = current.as_mut().ok_or_else(|| Error::Parse {
                line: line_no,
                reason: "field outside an [instance] record".into(),
            })?;
            builder.field(line, line_no)?;
        }
        if let Some(builder) = current {
            out.push(builder.finish(text.lines().count())?);
        }
        Ok(out)
    }
}

#[derive(Default)]
struct RecordBuilder {
    n: Option<usize>,
    k: Option<usize>,
    gamma: Option<f64>,
    seed: Option<u64>,
    angles: Vec<(usize, AngleTriplet)>,
    b: Option<Vec<f64>>,
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        reason: format!("cannot parse `{s}`"),
    })
}

impl RecordBuilder {
    fn field(&mut self, line: &str, no: usize) -> Result<()> {
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: no,
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "n" => self.n = Some(parse_num(value, no)?),
            "k" => self.k = Some(parse_num(value, no)?),
            "gamma" => self.gamma = Some(parse_num(value, no)?),
            "seed" => self.seed = Some(parse_num(value, no)?),
            // derived fields, recomputed on load
            "sparsity_level" | "condition_number" => {}
            "b" => {
                self.b = Some(
                    value
                        .split_whitespace()
                        .map(|v| parse_num(v, no))
                        .collect::<Result<_>>()?,
                )
            }
            _ => {
                let l = key
                    .strip_prefix("angle.")
                    .ok_or_else(|| Error::Parse {
                        line: no,
                        reason: format!("unknown key `{key}`"),
                    })
                    .and_then(|s| parse_num::<usize>(s, no))?;
                let parts: Vec<f64> = value
                    .split_whitespace()
                    .map(|v| parse_num(v, no))
                    .collect::<Result<_>>()?;
                let [theta, phi, lambda] = parts[..] else {
                    return Err(Error::Parse {
                        line: no,
                        reason: "angle needs three values".into(),
                    });
                };
                self.angles.push((l, AngleTriplet::new(theta, phi, lambda)));
            }
        }
        Ok(())
    }

    fn finish(mut self, line: usize) -> Result<ProblemInstance> {
        let missing = |what: &str| Error::Parse {
            line,
            reason: format!("record is missing `{what}`"),
        };
        let n = self.n.ok_or_else(|| missing("n"))?;
        self.angles.sort_by_key(|(l, _)| *l);
        if self.angles.len() != n || self.angles.iter().enumerate().any(|(i, (l, _))| i != *l) {
            return Err(Error::Parse {
                line,
                reason: format!("expected angle.0 .. angle.{}", n.saturating_sub(1)),
            });
        }
        let angles = CoinAngles::new(self.angles.into_iter().map(|(_, t)| t).collect())?;
        ProblemInstance::new(
            angles,
            self.k.ok_or_else(|| missing("k"))?,
            self.gamma.ok_or_else(|| missing("gamma"))?,
            self.b.ok_or_else(|| missing("b"))?,
            self.seed.ok_or_else(|| missing("seed"))?,
        )
    }
}

/// Draws `N` values uniformly from `[-1, 1]`.
pub fn random_rhs(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// Random instance: angles uniform in `[-π, π]`, then the first `k` θ zeroed,
/// then `b` uniform in `[-1, 1]`, all from one seeded stream.
///
/// The dense angles drawn for a seed do not depend on `k`, so the same seed
/// at increasing `k` walks through the sparsity ladder of a single matrix.
pub fn generate_problem(n: usize, k: usize, gamma: f64, seed: u64) -> Result<ProblemInstance> {
    if n == 0 || n > MAX_COINS {
        return Err(Error::param("n", format!("{n} outside 1..={MAX_COINS}")));
    }
    if k > n {
        return Err(Error::param("k", format!("{k} exceeds n = {n}")));
    }
    check_gamma(gamma)?;
    let mut rng = rng_from_seed(seed);
    let triplets = (0..n)
        .map(|_| {
            AngleTriplet::new(
                rng.gen_range(-PI..=PI),
                rng.gen_range(-PI..=PI),
                rng.gen_range(-PI..=PI),
            )
        })
        .collect();
    let dense = CoinAngles::new(triplets)?;
    let b = (0..dense.dim()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    ProblemInstance::new(apply_sparsity(&dense, k)?, k, gamma, b, seed)
}
