//! Trajectory simulation of one quantum-random-walk step.
//!
//! The step circuit owns `n` node qubits loaded with the current node's bits
//! and `n` coin qubits starting in `|0⟩`. For every coin `l` it applies
//! `U(θ_l, φ_l, λ_l)` to coin `l` followed by a CNOT from coin `l` onto node
//! `l`, then measures the node register.
//!
//! Coin `l` and node `l` never interact with any other pair, and every noise
//! channel is local to a pair, so the `2n`-qubit trajectory is a product of
//! `n` independent two-qubit trajectories. [`StepCircuit::sample_node`] uses
//! that factorization; [`StepCircuit::sample_node_full_register`] runs the
//! same gate and noise sequence on the whole register and exists to check it.

mod noise;
mod state;

pub use noise::{
    apply_depolarizing_2q, apply_readout_error, apply_thermal_relaxation, NoiseParams, ThermalRelaxation,
    KEY_CNOT, KEY_ENABLED, KEY_GATE_1Q, KEY_GATE_CNOT, KEY_MEASURE, KEY_READOUT, KEY_T1, KEY_T2,
};
pub use state::{coin_unitary, CoinUnitary, Pauli, StateVector};

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix_model::CoinAngles;

/// Result of measuring the node register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub next_node: usize,
    /// `measured_bits[l]` is bit `l` of `next_node`.
    pub measured_bits: Vec<bool>,
}

impl StepOutcome {
    fn from_node(node: usize, n: usize) -> Self {
        Self {
            next_node: node,
            measured_bits: (0..n).map(|l| node >> l & 1 == 1).collect(),
        }
    }
}

/// Precomputed gates and channels for repeated steps with fixed angles.
#[derive(Debug, Clone)]
pub struct StepCircuit {
    coins: Vec<CoinUnitary>,
    noise: NoiseParams,
    relax_1q: ThermalRelaxation,
    relax_cnot: ThermalRelaxation,
    relax_measure: ThermalRelaxation,
}

impl StepCircuit {
    pub fn new(angles: &CoinAngles, noise: &NoiseParams) -> Self {
        Self {
            coins: angles
                .triplets()
                .iter()
                .map(|t| coin_unitary(t.theta, t.phi, t.lambda))
                .collect(),
            noise: *noise,
            relax_1q: ThermalRelaxation::new(noise.gate_1q_ns, noise),
            relax_cnot: ThermalRelaxation::new(noise.gate_cnot_ns, noise),
            relax_measure: ThermalRelaxation::new(noise.measure_ns, noise),
        }
    }

    pub fn n(&self) -> usize {
        self.coins.len()
    }

    pub fn noise(&self) -> &NoiseParams {
        &self.noise
    }

    fn check_node(&self, current: usize) -> Result<()> {
        if current >= 1 << self.n() {
            return Err(Error::param(
                "current",
                format!("node {current} outside [0, {})", 1usize << self.n()),
            ));
        }
        Ok(())
    }

    /// Gates of coin `l` up to (not including) measurement. The node qubit
    /// must already hold its classical bit.
    fn run_coin<R: Rng + ?Sized>(&self, state: &mut StateVector, l: usize, node_q: usize, coin_q: usize, rng: &mut R) {
        let noisy = self.noise.enabled;
        if noisy {
            // conditional X loading window
            self.relax_1q.apply(state, node_q, rng);
        }
        state.apply_1q(coin_q, self.coins[l].matrix());
        if noisy {
            self.relax_1q.apply(state, coin_q, rng);
        }
        state.apply_cnot(coin_q, node_q);
        if noisy {
            apply_depolarizing_2q(state, (coin_q, node_q), self.noise.cnot_error, rng);
            self.relax_cnot.apply(state, coin_q, rng);
            self.relax_cnot.apply(state, node_q, rng);
        }
        debug_assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[inline]
    fn readout<R: Rng + ?Sized>(&self, bit: bool, rng: &mut R) -> bool {
        if self.noise.enabled && self.noise.readout_error > 0.0 {
            bit ^ (rng.gen::<f64>() < self.noise.readout_error)
        } else {
            bit
        }
    }

    /// Samples the next node, one two-qubit trajectory per coin.
    pub fn sample_node<R: Rng + ?Sized>(&self, current: usize, rng: &mut R) -> Result<usize> {
        self.check_node(current)?;
        // qubit 0: node, qubit 1: coin
        let mut pair = StateVector::basis(2, 0);
        let mut next = 0;
        for l in 0..self.n() {
            pair.reset_to_basis(current >> l & 1);
            self.run_coin(&mut pair, l, 0, 1, rng);
            if self.noise.enabled {
                self.relax_measure.apply(&mut pair, 0, rng);
                self.relax_measure.apply(&mut pair, 1, rng);
            }
            let bit = pair.sample_index(rng) & 1 == 1;
            if self.readout(bit, rng) {
                next |= 1 << l;
            }
        }
        Ok(next)
    }

    pub fn sample<R: Rng + ?Sized>(&self, current: usize, rng: &mut R) -> Result<StepOutcome> {
        Ok(StepOutcome::from_node(self.sample_node(current, rng)?, self.n()))
    }

    /// Same circuit on one `2n`-qubit register: node `l` is qubit `l`,
    /// coin `l` is qubit `n + l`.
    pub fn sample_node_full_register<R: Rng + ?Sized>(&self, current: usize, rng: &mut R) -> Result<usize> {
        self.check_node(current)?;
        let n = self.n();
        let mut state = StateVector::basis(2 * n, current);
        for l in 0..n {
            self.run_coin(&mut state, l, l, n + l, rng);
        }
        if self.noise.enabled {
            for q in 0..2 * n {
                self.relax_measure.apply(&mut state, q, rng);
            }
        }
        let measured = state.sample_index(rng) & ((1 << n) - 1);
        Ok((0..n).fold(0, |acc, l| {
            if self.readout(measured >> l & 1 == 1, rng) {
                acc | 1 << l
            } else {
                acc
            }
        }))
    }
}

/// One walk step from `current`.
pub fn step_sample<R: Rng + ?Sized>(
    current: usize,
    angles: &CoinAngles,
    noise: &NoiseParams,
    rng: &mut R,
) -> Result<StepOutcome> {
    StepCircuit::new(angles, noise).sample(current, rng)
}
