//! Closed-form and brute-force oracles used as independent cross-checks.

use crate::spaces::{PExp, C64};

/// ℓᵖ norm of `x` with weight `w0^{1-θ} w1^θ`.
pub fn oracle_stein_weiss(w0: &[f64], w1: &[f64], p: f64, theta: f64, x: &[C64]) -> f64 {
    let terms = x
        .iter()
        .zip(w0.iter().zip(w1))
        .map(|(xi, (a, b))| a.powf(1.0 - theta) * b.powf(theta) * xi.norm());
    crate::spaces::aggregate(PExp::new(p).unwrap_or(PExp::Inf), terms)
}

/// Maximize a concave function on `[0, 1]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd).max(f(0.0)).max(f(1.0))
}

/// Exact interpolation norm for weighted ℓ² couples with ℓ² structures over
/// decompositions supported on `[-window, window]`:
/// `max_λ Σᵢ |xᵢ|² / Σ_k 1/c_{k,i}(λ)` with
/// `c_{k,i}(λ) = λ w0ᵢ² b^{-2kθ} + (1-λ) w1ᵢ² b^{2k(1-θ)}`.
pub fn hilbert_interp(w0: &[f64], w1: &[f64], theta: f64, base: f64, window: i64, x: &[C64]) -> f64 {
    let f = |lam: f64| -> f64 {
        let mut total = 0.0;
        for i in 0..x.len() {
            let inv: f64 = (-window..=window)
                .map(|k| {
                    let k = k as f64;
                    let c = lam * (w0[i] * base.powf(-k * theta)).powi(2)
                        + (1.0 - lam) * (w1[i] * base.powf(k * (1.0 - theta))).powi(2);
                    1.0 / c
                })
                .sum();
            total += x[i].norm_sqr() / inv;
        }
        total
    };
    golden_max(f, 200).sqrt()
}

/// `inf_{split} ‖x₀‖₀ + t‖x₁‖₁` for weighted ℓ¹ spaces: `Σ min(w0ᵢ, t·w1ᵢ)|xᵢ|`.
pub fn l1_k_functional(w0: &[f64], w1: &[f64], t: f64, x: &[C64]) -> f64 {
    x.iter().zip(w0.iter().zip(w1)).map(|(xi, (a, b))| a.min(t * b) * xi.norm()).sum()
}

/// Two-sided constant `(lo, hi)` with
/// `lo ≤ hilbert_interp(w0, w1, θ, b, N, x) / oracle_stein_weiss(w0, w1, 2, θ, x) ≤ hi`
/// whenever every `|log_b(w1ᵢ/w0ᵢ)| ≤ phi_max`.
///
/// Scans one-dimensional couples `(1, b^φ)`. The upper constant is the
/// worst single coordinate; the lower one fixes the best common `λ`.
pub fn hilbert_calibration(theta: f64, base: f64, window: i64, phi_max: f64) -> (f64, f64) {
    const PHASES: usize = 801;
    const LAMBDAS: usize = 101;
    let g = |phi: f64, lam: f64| -> f64 {
        let inv: f64 = (-window..=window)
            .map(|k| {
                let k = k as f64;
                let c = lam * base.powf(-2.0 * k * theta) + (1.0 - lam) * base.powf(2.0 * (phi + k * (1.0 - theta)));
                1.0 / c
            })
            .sum();
        1.0 / inv
    };
    let phases: Vec<f64> = (0..PHASES)
        .map(|i| -phi_max + 2.0 * phi_max * i as f64 / (PHASES - 1) as f64)
        .collect();
    let sw = |phi: f64| base.powf(phi * theta);
    let hi = phases
        .iter()
        .map(|&phi| golden_max(|l| g(phi, l), 200).sqrt() / sw(phi))
        .fold(0.0, f64::max);
    let lo = (1..LAMBDAS)
        .map(|i| {
            let lam = i as f64 / LAMBDAS as f64;
            phases
                .iter()
                .map(|&phi| g(phi, lam).sqrt() / sw(phi))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    (lo, hi)
}
