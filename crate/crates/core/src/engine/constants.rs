//! Explicit constants assembled from the proofs. All are pure functions of
//! `θ`, the base `b`, and structure parameters.

/// `Σ_{k≤0} b^{kθ} + Σ_{k>0} b^{-k(1-θ)}`: the embedding constant into `X₀+X₁`.
pub fn embedding_constant(theta: f64, b: f64) -> f64 {
    1.0 / (1.0 - b.powf(-theta)) + b.powf(-(1.0 - theta)) / (1.0 - b.powf(-(1.0 - theta)))
}

/// Ratio between the max-form and the log-convex form: `b^θ`.
pub fn logconvex_constant(theta: f64, b: f64) -> f64 {
    b.powf(theta)
}

/// Bound on `mean / interp`: `2(b^θ/(b^θ-1) + b^{1-θ}/(b^{1-θ}-1))`.
pub fn mean_upper_constant(theta: f64, b: f64) -> f64 {
    let u = b.powf(theta);
    let v = b.powf(1.0 - theta);
    2.0 * (u / (u - 1.0) + v / (v - 1.0))
}

/// Bound on `interp / mean`: `2(1 + b^θ)`.
pub fn mean_lower_constant(theta: f64, b: f64) -> f64 {
    2.0 * (1.0 + b.powf(theta))
}

/// Finite-representation constant `1 + (2β+1)/(β-1)`, `β = min(b^θ, b^{1-θ})`.
///
/// A near-optimal decomposition `y` is replaced by its Cesàro mean plus the
/// two tail lumps. The Cesàro part costs at most `‖y‖`; each lump side is a
/// geometric sum of block norms that is dominated by `(2β+1)/(β-1)·‖y‖`
/// once the lumps are spread over `n+1 ≥ max(‖x‖₀, ‖x‖₁)/‖y‖` slots.
pub fn finite_rep_constant(theta: f64, b: f64) -> f64 {
    let beta = b.powf(theta).min(b.powf(1.0 - theta));
    1.0 + (2.0 * beta + 1.0) / (beta - 1.0)
}

/// Operator interpolation constant `b^θ M₀^{1-θ} M₁^θ`.
pub fn operator_constant(theta: f64, b: f64, m0: f64, m1: f64) -> f64 {
    b.powf(theta) * m0.powf(1.0 - theta) * m1.powf(theta)
}

/// Upper constant between the lattice-ℓ¹ interpolation norm and the
/// Calderón–Lozanovskii norm: `b^θ + b^{-θ} + b^θ/(b^θ-1)`.
pub fn bfs_constant(theta: f64, b: f64) -> f64 {
    let u = b.powf(theta);
    u + 1.0 / u + u / (u - 1.0)
}

/// Base change `a → b = a^δ`: the reindexing multiplicity times the
/// multiplier bound `b^θ`.
pub fn base_change_constant(theta: f64, a: f64, b: f64) -> f64 {
    let delta = b.ln() / a.ln();
    if delta == 1.0 {
        1.0
    } else {
        base_change_multiplicity(delta) as f64 * b.powf(theta)
    }
}

/// Largest number of indices `k` sharing one `⌊k/δ⌋`.
pub fn base_change_multiplicity(delta: f64) -> usize {
    if delta <= 1.0 {
        1
    } else {
        delta.floor() as usize + 1
    }
}

/// Stein interpolation constant `b^θ`.
pub fn stein_constant(theta: f64, b: f64) -> f64 {
    b.powf(theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_constant_is_the_geometric_series() {
        let (t, b) = (0.3f64, 2.5f64);
        let direct: f64 = (-200..=0).map(|k| b.powf(k as f64 * t)).sum::<f64>()
            + (1..=200).map(|k| b.powf(-(k as f64) * (1.0 - t))).sum::<f64>();
        assert!((embedding_constant(t, b) - direct).abs() < 1e-9);
    }

    #[test]
    fn base_change_identity() {
        assert_eq!(base_change_constant(0.4, 3.0, 3.0), 1.0);
    }
}
