#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson goodness-of-fit p-value of `observed` counts against
/// `probabilities`. Cells with expected count below 5 are pooled into one
/// bin; zero-probability cells must have zero observations (returns `None`
/// otherwise).
pub fn chi_square_p_value(observed: &[u64], probabilities: &[f64]) -> Option<f64> {
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probabilities) {
        if p == 0.0 {
            if o > 0 {
                return None;
            }
            continue;
        }
        let e = p * total;
        if e < 5.0 {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            bins.push((o as f64, e));
        }
    }
    if pooled.1 > 0.0 {
        if pooled.1 >= 5.0 || bins.is_empty() {
            bins.push(pooled);
        } else {
            // fold a small pooled bin into the smallest regular bin
            let idx = bins
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .map(|(i, _)| i)
                .unwrap();
            bins[idx].0 += pooled.0;
            bins[idx].1 += pooled.1;
        }
    }
    if bins.len() < 2 {
        return Some(1.0);
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dist = ChiSquared::new((bins.len() - 1) as f64).unwrap();
    Some(1.0 - dist.cdf(stat))
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
