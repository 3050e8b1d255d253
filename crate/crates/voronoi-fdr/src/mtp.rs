//! Multiple-testing decision rules: Benjamini-Hochberg, its spacings
//! generalization, and thresholding on estimated left-tail FDR.
//!
//! The spacings procedure compares average gaps between ordered p-values to
//! the null expectation of a single spacing, `1/(m+1)`. Dropping the
//! `(m+1)/m` factor that would make it exactly BH leaves a slightly more
//! conservative rule, so `k_spacings <= k_bh` on every input.

use crate::error::{Error, Result};
use crate::pipeline::CombinedRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Bh,
    SpacingsBh,
    LeftFdr,
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Rule::Bh => "bh",
            Rule::SpacingsBh => "spacings-bh",
            Rule::LeftFdr => "left-fdr",
        })
    }
}

/// Rejection decision: indices into the caller's input, the rejection count
/// `k`, the nominal level, and which rule produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSet {
    pub rejected: Vec<usize>,
    pub k: usize,
    pub alpha: f64,
    pub rule: Rule,
}

fn validate_pvalues(pvalues: &[f64], alpha: f64) -> Result<()> {
    for &p in pvalues {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfDomain {
                what: "p-value",
                value: p,
                line: None,
            });
        }
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfDomain {
            what: "alpha",
            value: alpha,
            line: None,
        });
    }
    Ok(())
}

/// Indices sorted by p-value, ties by index, so rejected ids are deterministic.
fn sorted_indices(pvalues: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pvalues.len()).collect();
    idx.sort_by(|&a, &b| pvalues[a].partial_cmp(&pvalues[b]).unwrap().then(a.cmp(&b)));
    idx
}

/// Benjamini-Hochberg step-up: reject the k smallest p-values where
/// `k = max { i : p_(i) <= i * alpha / m }`, 0 if the set is empty.
pub fn bh_reject(pvalues: &[f64], alpha: f64) -> Result<DecisionSet> {
    validate_pvalues(pvalues, alpha)?;
    let m = pvalues.len();
    let idx = sorted_indices(pvalues);
    let mut k = 0;
    for (i, &j) in idx.iter().enumerate() {
        if pvalues[j] <= (i + 1) as f64 * alpha / m as f64 {
            k = i + 1;
        }
    }
    Ok(DecisionSet {
        rejected: idx[..k].to_vec(),
        k,
        alpha,
        rule: Rule::Bh,
    })
}

/// Spacings generalization of BH: with spacings `ps_i = p_(i) - p_(i-1)`
/// (p_(0) = 0), reject the k smallest where
/// `k = max { i : mean(ps_1..ps_i) <= alpha / (m+1) }`.
pub fn spacings_bh(pvalues: &[f64], alpha: f64) -> Result<DecisionSet> {
    validate_pvalues(pvalues, alpha)?;
    let m = pvalues.len();
    let idx = sorted_indices(pvalues);
    let expected_spacing = 1.0 / (m as f64 + 1.0);
    let mut k = 0;
    let mut prev = 0.0;
    let mut sum = 0.0;
    for (i, &j) in idx.iter().enumerate() {
        let spacing = pvalues[j] - prev;
        prev = pvalues[j];
        sum += spacing;
        if sum / (i + 1) as f64 <= alpha * expected_spacing {
            k = i + 1;
        }
    }
    Ok(DecisionSet {
        rejected: idx[..k].to_vec(),
        k,
        alpha,
        rule: Rule::SpacingsBh,
    })
}

/// Reject every record whose estimated left-tail FDR is below `cutoff`.
/// Returns positions into `records`.
pub fn leftfdr_reject(records: &[CombinedRecord], cutoff: f64) -> Result<DecisionSet> {
    let mut rejected = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let left = r.left_fdr.ok_or(Error::MissingEstimates)?;
        if !(0.0..=1.0).contains(&left) {
            return Err(Error::OutOfDomain {
                what: "left-tail FDR",
                value: left,
                line: None,
            });
        }
        if left < cutoff {
            rejected.push(i);
        }
    }
    Ok(DecisionSet {
        k: rejected.len(),
        rejected,
        alpha: cutoff,
        rule: Rule::LeftFdr,
    })
}
