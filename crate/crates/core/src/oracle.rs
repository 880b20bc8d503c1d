//! Deterministic reference values: dense direct solve, truncated series,
//! and brute-force enumeration of walk paths.

use crate::error::{Error, Result};
use crate::matrix_model::ProblemInstance;

/// Largest dimension / walk length accepted by [`enumerate_walk_expectation`].
pub const ENUMERATION_MAX_DIM: usize = 8;
pub const ENUMERATION_MAX_C: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub x: Vec<f64>,
    /// `‖(1 − γP)x − b‖₂`
    pub residual_norm: f64,
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gaussian elimination with partial pivoting on a dense row-major copy.
pub fn lu_solve(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let dim = rhs.len();
    for col in 0..dim {
        let pivot = (col..dim)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col] == 0.0 {
            return Err(Error::Singular { column: col });
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..dim {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..dim {
                a[row][k] -= factor * a[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; dim];
    for row in (0..dim).rev() {
        let tail: f64 = (row + 1..dim).map(|k| a[row][k] * x[k]).sum();
        x[row] = (rhs[row] - tail) / a[row][row];
    }
    Ok(x)
}

fn system_matrix(instance: &ProblemInstance) -> Vec<Vec<f64>> {
    let p = instance.matrix();
    let gamma = instance.gamma();
    (0..p.dim())
        .map(|i| {
            (0..p.dim())
                .map(|j| if i == j { 1.0 } else { 0.0 } - gamma * p.get(i, j))
                .collect()
        })
        .collect()
}

pub fn exact_solve(instance: &ProblemInstance) -> Result<ExactSolution> {
    let x = lu_solve(system_matrix(instance), instance.b().to_vec())?;
    let px = instance.matrix().mul_vec(&x);
    let residual: Vec<f64> = x
        .iter()
        .zip(&px)
        .zip(instance.b())
        .map(|((xi, pxi), bi)| xi - instance.gamma() * pxi - bi)
        .collect();
    Ok(ExactSolution {
        x,
        residual_norm: norm2(&residual),
    })
}

/// `Σ_{s=0}^{c} γ^s P^s b` by repeated matrix-vector products.
pub fn neumann_truncated(instance: &ProblemInstance, c: usize) -> Vec<f64> {
    let gamma = instance.gamma();
    let mut term = instance.b().to_vec();
    let mut sum = term.clone();
    for _ in 0..c {
        term = instance.matrix().mul_vec(&term);
        term.iter_mut().for_each(|t| *t *= gamma);
        sum.iter_mut().zip(&term).for_each(|(s, t)| *s += t);
    }
    sum
}

/// Exact expectation of the walk estimator started at `start`, summed over
/// every length-`c` path weighted by its probability.
pub fn enumerate_walk_expectation(instance: &ProblemInstance, start: usize, c: usize) -> Result<f64> {
    let dim = instance.dim();
    if dim > ENUMERATION_MAX_DIM || c > ENUMERATION_MAX_C {
        return Err(Error::EnumerationTooLarge { dim, c });
    }
    if start >= dim {
        return Err(Error::param("start", format!("node {start} outside [0, {dim})")));
    }

    fn walk(
        instance: &ProblemInstance,
        node: usize,
        depth: usize,
        c: usize,
        prob: f64,
        weight: f64,
        path_sum: f64,
    ) -> f64 {
        let path_sum = path_sum + weight * instance.b()[node];
        if depth == c {
            return prob * path_sum;
        }
        let p = instance.matrix();
        (0..instance.dim())
            .filter(|&next| !p.is_structural_zero(node, next))
            .map(|next| {
                walk(
                    instance,
                    next,
                    depth + 1,
                    c,
                    prob * p.get(node, next),
                    weight * instance.gamma(),
                    path_sum,
                )
            })
            .sum()
    }

    Ok(walk(instance, start, 0, c, 1.0, 1.0, 0.0))
}

/// `‖estimate − exact‖₂ / ‖exact‖₂`.
pub fn relative_error(estimate: &[f64], exact: &[f64]) -> Result<f64> {
    if estimate.len() != exact.len() {
        return Err(Error::param(
            "estimate",
            format!("length {} differs from exact length {}", estimate.len(), exact.len()),
        ));
    }
    let denom = norm2(exact);
    if denom == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let diff: Vec<f64> = estimate.iter().zip(exact).map(|(a, b)| a - b).collect();
    Ok(norm2(&diff) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_model::{generate_problem, CoinAngles};

    fn identity_instance(gamma: f64) -> ProblemInstance {
        let angles = CoinAngles::from_thetas(&[0.0, 0.0]).unwrap();
        ProblemInstance::new(angles, 2, gamma, vec![0.5, -0.25, 1.0, -1.0], 0).unwrap()
    }

    #[test]
    fn identity_system_solutions() {
        let inst = identity_instance(0.5);
        let sol = exact_solve(&inst).unwrap();
        for (x, b) in sol.x.iter().zip(inst.b()) {
            assert!((x - b / 0.5).abs() < 1e-15);
        }
        assert_eq!(neumann_truncated(&inst, 0), inst.b());
        let geo = (1.0 - 0.5f64.powi(8)) / 0.5;
        for (x, b) in neumann_truncated(&inst, 7).iter().zip(inst.b()) {
            assert!((x - b * geo).abs() < 1e-15);
        }
        for i in 0..4 {
            let e = enumerate_walk_expectation(&inst, i, 3).unwrap();
            assert!((e - inst.b()[i] * 1.875).abs() < 1e-15);
        }
    }

    #[test]
    fn tiny_gamma_is_nearly_identity() {
        let inst = generate_problem(3, 0, 1e-12, 4).unwrap();
        let x = exact_solve(&inst).unwrap().x;
        assert!(relative_error(&x, inst.b()).unwrap() < 1e-10);
    }

    #[test]
    fn residual_is_small() {
        for seed in 0..20 {
            let inst = generate_problem(2, seed as usize % 3, 0.9, seed).unwrap();
            let sol = exact_solve(&inst).unwrap();
            assert!(sol.residual_norm <= 1e-10 * norm2(inst.b()));
        }
        let inst = generate_problem(8, 3, 0.99, 77).unwrap();
        let sol = exact_solve(&inst).unwrap();
        assert!(sol.residual_norm <= 1e-10 * norm2(inst.b()));
    }

    #[test]
    fn long_series_converges_to_exact() {
        for seed in 0..10 {
            let inst = generate_problem(3, 1, 0.5, seed).unwrap();
            let exact = exact_solve(&inst).unwrap().x;
            assert!(relative_error(&neumann_truncated(&inst, 200), &exact).unwrap() < 1e-10);
        }
    }

    #[test]
    fn truncation_error_decreases_with_c() {
        let inst = generate_problem(3, 0, 0.8, 12).unwrap();
        let exact = exact_solve(&inst).unwrap().x;
        let errs: Vec<f64> = (0..20)
            .map(|c| relative_error(&neumann_truncated(&inst, c), &exact).unwrap())
            .collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn enumeration_zero_length_and_guard() {
        let inst = generate_problem(2, 0, 0.5, 3).unwrap();
        assert_eq!(enumerate_walk_expectation(&inst, 1, 0).unwrap(), inst.b()[1]);
        assert!(matches!(
            enumerate_walk_expectation(&inst, 0, 9),
            Err(Error::EnumerationTooLarge { .. })
        ));
        let big = generate_problem(4, 0, 0.5, 3).unwrap();
        assert!(enumerate_walk_expectation(&big, 0, 2).is_err());
    }

    #[test]
    fn relative_error_cases() {
        let x = vec![3.0, -4.0];
        assert_eq!(relative_error(&x, &x).unwrap(), 0.0);
        assert_eq!(relative_error(&[6.0, -8.0], &x).unwrap(), 1.0);
        assert_eq!(relative_error(&[8.0, -4.0], &x).unwrap(), 1.0);
        assert!(matches!(relative_error(&[1.0, 1.0], &[0.0, 0.0]), Err(Error::ZeroNorm)));
        assert!(relative_error(&[1.0], &x).is_err());
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(lu_solve(a, vec![1.0, 1.0]), Err(Error::Singular { .. })));
    }
}
