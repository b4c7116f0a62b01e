//! Reindexing a decomposition from base `a` to base `b = a^δ`.

use super::constants::base_change_multiplicity;
use crate::error::{Error, Result};
use crate::seq::SparseSeq;

/// Moves block `k` to `⌊k/δ⌋`, summing collisions (at most
/// `⌊δ⌋+1` of them when `δ > 1`; none when `δ < 1`). The weights change by
/// a factor in `(b^{-θ}, 1]` on side 0 and `[1, b^{1-θ})` inverted on side 1,
/// so both side norms grow by at most the multiplicity times `b^θ`.
pub fn change_base_reindex(seq: &SparseSeq, a: f64, b: f64) -> Result<SparseSeq> {
    if !(a > 1.0 && b > 1.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!("bases a={a}, b={b} must exceed 1")));
    }
    if a == b {
        return Ok(seq.clone());
    }
    let delta = b.ln() / a.ln();
    let mut out = SparseSeq::zero(seq.dim());
    for (k, blk) in seq.iter() {
        out.add_at(target_index(k, delta), blk);
    }
    Ok(out)
}

fn target_index(k: i64, delta: f64) -> i64 {
    (k as f64 / delta).floor() as i64
}

/// Number of source indices landing on each target, for audit.
pub fn reindex_collisions(seq: &SparseSeq, a: f64, b: f64) -> usize {
    let delta = b.ln() / a.ln();
    let mut counts = std::collections::BTreeMap::new();
    for k in seq.support() {
        *counts.entry(target_index(k, delta)).or_insert(0usize) += 1;
    }
    let worst = counts.values().copied().max().unwrap_or(0);
    debug_assert!(worst <= base_change_multiplicity(delta));
    worst
}
