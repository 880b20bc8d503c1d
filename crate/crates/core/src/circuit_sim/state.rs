use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::Rng;

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
}

/// Dense amplitude vector over `n_qubits`; qubit `q` is bit `q` of the index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = C64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Self {
        assert!(amps.len().is_power_of_two(), "amplitude count must be a power of two");
        let n_qubits = amps.len().trailing_zeros() as usize;
        Self { n_qubits, amps }
    }

    pub fn reset_to_basis(&mut self, index: usize) {
        self.amps.fill(C64::new(0.0, 0.0));
        self.amps[index] = C64::new(1.0, 0.0);
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
    }

    pub fn apply_1q(&mut self, q: usize, m: &[[C64; 2]; 2]) {
        let mask = 1 << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | mask]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cm, tm) = (1 << control, 1 << target);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        let mask = 1 << q;
        let i_unit = C64::new(0.0, 1.0);
        for i in 0..self.amps.len() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            match p {
                Pauli::I => {}
                Pauli::X => self.amps.swap(i, j),
                Pauli::Y => {
                    let (a0, a1) = (self.amps[i], self.amps[j]);
                    self.amps[i] = -i_unit * a1;
                    self.amps[j] = i_unit * a0;
                }
                Pauli::Z => self.amps[j] = -self.amps[j],
            }
        }
    }

    /// Probability of measuring qubit `q` as 1.
    pub fn prob_one(&self, q: usize) -> f64 {
        let mask = 1 << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Multiplies the `|1⟩` branch of qubit `q` by `factor`.
    pub(crate) fn scale_one_branch(&mut self, q: usize, factor: f64) {
        let mask = 1 << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask != 0 {
                *a *= factor;
            }
        }
    }

    /// Applies `|0⟩⟨1|` on qubit `q` (unnormalized).
    pub(crate) fn lower(&mut self, q: usize) {
        let mask = 1 << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                self.amps[i] = self.amps[i | mask];
                self.amps[i | mask] = C64::new(0.0, 0.0);
            }
        }
    }

    /// Samples a computational basis index from `|amp|²`.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.norm_sqr();
        let mut r = rng.gen::<f64>() * total;
        let mut last_nonzero = 0;
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p > 0.0 {
                last_nonzero = i;
                if r < p {
                    return i;
                }
                r -= p;
            }
        }
        last_nonzero
    }
}

/// `U(θ, φ, λ)` coin gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinUnitary {
    matrix: [[C64; 2]; 2],
}

impl CoinUnitary {
    pub fn matrix(&self) -> &[[C64; 2]; 2] {
        &self.matrix
    }

    /// Max-abs deviation of `U†U` from identity.
    pub fn unitarity_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let v = m[0][r].conj() * m[0][c] + m[1][r].conj() * m[1][c];
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((v - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

pub fn coin_unitary(theta: f64, phi: f64, lambda: f64) -> CoinUnitary {
    // exact values at the structural-zero angles
    let (s, c) = if theta == 0.0 {
        (0.0, 1.0)
    } else if theta.abs() == PI {
        (theta.signum(), 0.0)
    } else {
        (theta / 2.0).sin_cos()
    };
    let e = |x: f64| C64::from_polar(1.0, x);
    CoinUnitary {
        matrix: [
            [C64::new(c, 0.0), -e(lambda) * s],
            [e(phi) * s, e(lambda + phi) * c],
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn coin_at_zero_and_pi() {
        let (phi, lambda) = (0.4, -1.3);
        let u = coin_unitary(0.0, phi, lambda);
        let m = u.matrix();
        assert!(close(m[0][0], C64::new(1.0, 0.0)));
        assert!(close(m[0][1], C64::new(0.0, 0.0)));
        assert!(close(m[1][0], C64::new(0.0, 0.0)));
        assert!(close(m[1][1], C64::from_polar(1.0, lambda + phi)));

        let m = *coin_unitary(PI, 0.0, 0.0).matrix();
        assert!(close(m[0][0], C64::new(0.0, 0.0)));
        assert!(close(m[0][1], C64::new(-1.0, 0.0)));
        assert!(close(m[1][0], C64::new(1.0, 0.0)));
        assert!(close(m[1][1], C64::new(0.0, 0.0)));
    }

    #[test]
    fn coin_is_unitary_with_expected_moduli() {
        for i in 0..50 {
            let theta = -PI + 2.0 * PI * i as f64 / 49.0;
            let u = coin_unitary(theta, 0.3 * i as f64 - 2.0, 1.7 - 0.05 * i as f64);
            assert!(u.unitarity_defect() < 1e-12);
            let m = u.matrix();
            assert!((m[0][0].norm_sqr() - (theta / 2.0).cos().powi(2)).abs() < 1e-12);
            assert!((m[1][0].norm_sqr() - (theta / 2.0).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn paulis_and_cnot_act_on_basis_states() {
        let mut s = StateVector::basis(2, 0b01);
        s.apply_cnot(0, 1);
        assert_eq!(s, StateVector::basis(2, 0b11));
        s.apply_cnot(1, 0);
        assert_eq!(s, StateVector::basis(2, 0b10));
        s.apply_pauli(0, Pauli::X);
        assert_eq!(s, StateVector::basis(2, 0b11));
        s.apply_pauli(1, Pauli::Y);
        assert!(close(s.amplitudes()[0b01], C64::new(0.0, -1.0)));
        s.apply_pauli(0, Pauli::Z);
        assert!(close(s.amplitudes()[0b01], C64::new(0.0, 1.0)));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lowering_moves_population_down() {
        let mut s = StateVector::basis(2, 0b10);
        s.lower(1);
        assert_eq!(s, StateVector::basis(2, 0b00));
        assert_eq!(s.prob_one(1), 0.0);
    }
}
