use std::fmt::Write as _;

use super::AggregateRow;

/// Mitigation comparison table: mean relative error in percent for every
/// sparsity level of one size, unmitigated and mitigated.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1 {
    pub text: String,
    /// Human-readable descriptions of absent cells.
    pub missing: Vec<String>,
}

impl Table1 {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }
}

fn column_label(k: usize) -> String {
    if k == 0 {
        "0 (dense)".to_string()
    } else {
        let level = 1.0 - 0.5f64.powi(k as i32);
        let s = format!("{level:.4}");
        let s = s.trim_end_matches('0');
        if s.len() < 4 {
            format!("{level:.2}")
        } else {
            s.to_string()
        }
    }
}

/// Builds the table for size `n`, `shots` and `backend`. Missing cells are
/// printed as `--` and listed in [`Table1::missing`].
pub fn emit_table1(rows: &[AggregateRow], n: usize, shots: usize, backend: &str) -> Table1 {
    let ks: Vec<usize> = (0..=n).collect();
    let mut text = String::new();
    let mut missing = Vec::new();
    let _ = writeln!(
        text,
        "Relative error (%) comparison, N={}, {} shots, backend {}",
        1usize << n,
        shots,
        backend
    );
    let _ = write!(text, "{:<14}", "");
    for &k in &ks {
        let _ = write!(text, "{:>11}", column_label(k));
    }
    text.push('\n');
    for (label, mitigation) in [("Un-mitigated", false), ("Mitigated", true)] {
        let _ = write!(text, "{label:<14}");
        for &k in &ks {
            let cell = rows.iter().find(|r| {
                r.n == n && r.k == k && r.shots == shots && r.backend == backend && r.mitigation == mitigation
            });
            match cell {
                Some(r) => {
                    let _ = write!(text, "{:>11.2}", 100.0 * r.mean_relative_error);
                }
                None => {
                    missing.push(format!("{label} at sparsity {}", column_label(k)));
                    let _ = write!(text, "{:>11}", "--");
                }
            }
        }
        text.push('\n');
    }
    Table1 { text, missing }
}
