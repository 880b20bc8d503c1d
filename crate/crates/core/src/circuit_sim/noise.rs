//! Backend noise parameters and trajectory noise channels.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::{Pauli, StateVector};
use crate::error::{Error, Result};

pub const KEY_T1: &str = "Avg. T_1 (μs)";
pub const KEY_T2: &str = "Avg. T_2 (μs)";
pub const KEY_CNOT: &str = "Avg. CNOT Error";
pub const KEY_READOUT: &str = "Avg. Readout Error";
pub const KEY_GATE_1Q: &str = "Single-qubit gate time (ns)";
pub const KEY_GATE_CNOT: &str = "CNOT gate time (ns)";
pub const KEY_MEASURE: &str = "Measurement time (ns)";
pub const KEY_ENABLED: &str = "enabled";

/// Averaged noise figures for one simulated backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub enabled: bool,
    #[serde(with = "maybe_infinite")]
    pub t1_us: f64,
    #[serde(with = "maybe_infinite")]
    pub t2_us: f64,
    pub cnot_error: f64,
    pub readout_error: f64,
    pub gate_1q_ns: f64,
    pub gate_cnot_ns: f64,
    pub measure_ns: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseParams {
    pub const DEFAULT_GATE_1Q_NS: f64 = 50.0;
    pub const DEFAULT_GATE_CNOT_NS: f64 = 300.0;
    pub const DEFAULT_MEASURE_NS: f64 = 1000.0;

    pub const fn noiseless() -> Self {
        Self {
            enabled: false,
            t1_us: f64::INFINITY,
            t2_us: f64::INFINITY,
            cnot_error: 0.0,
            readout_error: 0.0,
            gate_1q_ns: Self::DEFAULT_GATE_1Q_NS,
            gate_cnot_ns: Self::DEFAULT_GATE_CNOT_NS,
            measure_ns: Self::DEFAULT_MEASURE_NS,
        }
    }

    const fn averaged(t1_us: f64, t2_us: f64, cnot_error: f64, readout_error: f64) -> Self {
        Self {
            enabled: true,
            t1_us,
            t2_us,
            cnot_error,
            readout_error,
            gate_1q_ns: Self::DEFAULT_GATE_1Q_NS,
            gate_cnot_ns: Self::DEFAULT_GATE_CNOT_NS,
            measure_ns: Self::DEFAULT_MEASURE_NS,
        }
    }

    pub const fn fake_boeblingen() -> Self {
        Self::averaged(72.775, 153.457, 0.03211, 0.05258)
    }

    pub const fn fake_casablanca() -> Self {
        Self::averaged(89.968, 85.496, 0.01274, 0.01898)
    }

    /// Built-in presets by name; `noiseless` included.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "noiseless" => Some(Self::noiseless()),
            "fake-boeblingen" => Some(Self::fake_boeblingen()),
            "fake-casablanca" => Some(Self::fake_casablanca()),
            _ => None,
        }
    }

    /// Dephasing time actually used by the channel: `min(T2, 2·T1)`.
    pub fn t2_eff_us(&self) -> f64 {
        self.t2_us.min(2.0 * self.t1_us)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("cnot_error", self.cnot_error), ("readout_error", self.readout_error)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param("noise", format!("{name} = {p} outside [0, 1]")));
            }
        }
        for (name, t) in [
            ("t1_us", self.t1_us),
            ("t2_us", self.t2_us),
            ("gate_1q_ns", self.gate_1q_ns),
            ("gate_cnot_ns", self.gate_cnot_ns),
            ("measure_ns", self.measure_ns),
        ] {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::param("noise", format!("{name} = {t} must be positive")));
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines. The four averaged figures are required
    /// and use the column names of the published backend table; gate times
    /// fall back to defaults.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut out = Self::noiseless();
        out.enabled = true;
        let mut seen = [false; 4];
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == KEY_ENABLED {
                out.enabled = value.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    reason: format!("`{value}` is not a boolean"),
                })?;
                continue;
            }
            let v: f64 = value.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                reason: format!("`{value}` is not a number"),
            })?;
            match key {
                KEY_T1 => (out.t1_us, seen[0]) = (v, true),
                KEY_T2 => (out.t2_us, seen[1]) = (v, true),
                KEY_CNOT => (out.cnot_error, seen[2]) = (v, true),
                KEY_READOUT => (out.readout_error, seen[3]) = (v, true),
                KEY_GATE_1Q => out.gate_1q_ns = v,
                KEY_GATE_CNOT => out.gate_cnot_ns = v,
                KEY_MEASURE => out.measure_ns = v,
                _ => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        reason: format!("unknown key `{key}`"),
                    })
                }
            }
        }
        for (key, ok) in [KEY_T1, KEY_T2, KEY_CNOT, KEY_READOUT].iter().zip(seen) {
            if !ok {
                return Err(Error::Parse {
                    line: 0,
                    reason: format!("missing `{key}`"),
                });
            }
        }
        out.validate()?;
        Ok(out)
    }

    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{KEY_ENABLED} = {}", self.enabled);
        let _ = writeln!(s, "{KEY_T1} = {}", self.t1_us);
        let _ = writeln!(s, "{KEY_T2} = {}", self.t2_us);
        let _ = writeln!(s, "{KEY_CNOT} = {}", self.cnot_error);
        let _ = writeln!(s, "{KEY_READOUT} = {}", self.readout_error);
        let _ = writeln!(s, "{KEY_GATE_1Q} = {}", self.gate_1q_ns);
        let _ = writeln!(s, "{KEY_GATE_CNOT} = {}", self.gate_cnot_ns);
        let _ = writeln!(s, "{KEY_MEASURE} = {}", self.measure_ns);
        s
    }
}

/// JSON has no infinity; store it as the string `"inf"`.
mod maybe_infinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Flips each bit independently with probability `p`.
pub fn apply_readout_error<R: Rng + ?Sized>(bits: &[bool], p: f64, rng: &mut R) -> Vec<bool> {
    bits.iter().map(|&b| b ^ (rng.gen::<f64>() < p)).collect()
}

/// With probability `p`, applies one of the 15 non-identity two-qubit Paulis
/// (uniformly) to `(qa, qb)`. Returns the pair that was applied.
pub fn apply_depolarizing_2q<R: Rng + ?Sized>(
    state: &mut StateVector,
    (qa, qb): (usize, usize),
    p: f64,
    rng: &mut R,
) -> Option<(Pauli, Pauli)> {
    if p <= 0.0 || rng.gen::<f64>() >= p {
        return None;
    }
    let idx = rng.gen_range(1..16usize);
    let (pa, pb) = (Pauli::ALL[idx % 4], Pauli::ALL[idx / 4]);
    state.apply_pauli(qa, pa);
    state.apply_pauli(qb, pb);
    Some((pa, pb))
}

/// Amplitude damping followed by pure dephasing over a fixed duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalRelaxation {
    /// `1 − exp(−t/T1)`
    pub p_amp: f64,
    /// `1 − exp(−t/Tφ)`; the coherence lost to pure dephasing.
    pub p_phase: f64,
}

impl ThermalRelaxation {
    pub fn new(duration_ns: f64, noise: &NoiseParams) -> Self {
        let t_us = duration_ns / 1000.0;
        let t1 = noise.t1_us;
        let p_amp = -(-t_us / t1).exp_m1();
        let dephase_rate = (1.0 / noise.t2_eff_us() - 1.0 / (2.0 * t1)).max(0.0);
        let p_phase = -(-t_us * dephase_rate).exp_m1();
        Self { p_amp, p_phase }
    }

    /// One quantum-jump realization on qubit `q`; leaves the state normalized.
    pub fn apply<R: Rng + ?Sized>(&self, state: &mut StateVector, q: usize, rng: &mut R) {
        if self.p_amp > 0.0 {
            let p1 = state.prob_one(q);
            if p1 > 0.0 {
                if rng.gen::<f64>() < self.p_amp * p1 {
                    state.lower(q);
                } else {
                    state.scale_one_branch(q, (1.0 - self.p_amp).sqrt());
                }
                state.normalize();
            }
        }
        // a Z with probability p/2 scales coherences by 1 − p
        if self.p_phase > 0.0 && rng.gen::<f64>() < 0.5 * self.p_phase {
            state.apply_pauli(q, Pauli::Z);
        }
    }
}

pub fn apply_thermal_relaxation<R: Rng + ?Sized>(
    state: &mut StateVector,
    qubit: usize,
    duration_ns: f64,
    noise: &NoiseParams,
    rng: &mut R,
) {
    ThermalRelaxation::new(duration_ns, noise).apply(state, qubit, rng);
}
