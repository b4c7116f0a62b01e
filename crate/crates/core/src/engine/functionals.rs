//! K- and J-functionals and the discrete real-method norm built from them.

use super::interp::{validate_theta_base, Certificate, InterpSolution};
use crate::error::{check_dim, Error, Result};
use crate::solver::SolverConfig;
use crate::spaces::{aggregate, Couple, PExp, C64};
use crate::structures::NormEstimate;

/// `K(t, x) = inf{‖x₀‖₀ + t‖x₁‖₁ : x = x₀ + x₁}`; the certificate holds `[x₀, x₁]`.
pub fn k_functional(couple: &Couple, t: f64, x: &[C64], cfg: &SolverConfig) -> Result<InterpSolution> {
    let s = couple.split(x, t, cfg)?;
    Ok(InterpSolution {
        value: s.value,
        lower_hint: s.lower_hint,
        certificate: Certificate::Vectors(vec![s.x0, s.x1]),
        iterations: s.iterations,
        converged: s.converged,
        error_interval: (s.lower_hint, s.value),
        window: (0, 0),
        window_drift: None,
        window_warning: false,
    })
}

/// `J(t, x) = max(‖x‖₀, t‖x‖₁)`.
pub fn j_functional(couple: &Couple, t: f64, x: &[C64]) -> Result<f64> {
    check_dim(couple.dim, x.len())?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("J-functional parameter t={t} must be positive")));
    }
    Ok(couple.space0.norm_unchecked(x).max(t * couple.space1.norm_unchecked(x)))
}

/// `‖(b^{-θk} K(bᵏ, x))_k‖_{ℓᵖ}` truncated to `|k| ≤ window`.
///
/// The omitted tails are bounded by `K(t,x) ≤ min(‖x‖₀, t‖x‖₁)`, which
/// sums geometrically; `hi` includes them and `lo` uses the K lower hints.
pub fn discrete_real_norm(
    couple: &Couple,
    theta: f64,
    p: PExp,
    base: f64,
    x: &[C64],
    window: i64,
    cfg: &SolverConfig,
) -> Result<NormEstimate> {
    validate_theta_base(theta, base)?;
    check_dim(couple.dim, x.len())?;
    if window < 1 {
        return Err(Error::InvalidInput(format!("window={window} must be at least 1")));
    }
    let mut vals = Vec::new();
    let mut lows = Vec::new();
    for k in -window..=window {
        let t = base.powi(k as i32);
        let s = couple.split(x, t, cfg)?;
        let w = base.powf(-theta * k as f64);
        vals.push(w * s.value);
        lows.push(w * s.lower_hint);
    }
    let n0 = couple.space0.norm_unchecked(x);
    let n1 = couple.space1.norm_unchecked(x);
    // k > N: b^{-θk}‖x‖₀;  k < -N: b^{k(1-θ)}‖x‖₁.
    let r0 = base.powf(-theta);
    let r1 = base.powf(-(1.0 - theta));
    let tail = |r: f64, first: f64| match p {
        PExp::Inf => first,
        PExp::Finite(p) => first / (1.0 - r.powf(p)).powf(1.0 / p),
    };
    let t0 = tail(r0, n0 * r0.powi(window as i32 + 1));
    let t1 = tail(r1, n1 * r1.powi(window as i32 + 1));
    let value = aggregate(p, vals.iter().copied());
    let hi = aggregate(p, vals.iter().copied().chain([t0, t1]));
    let lo = aggregate(p, lows.iter().copied());
    Ok(NormEstimate { value, lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::oracle::l1_k_functional;
    use crate::spaces::NormedSpace;

    fn c(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    #[test]
    fn equal_spaces_k_is_min() {
        let x0 = NormedSpace::weighted_lp(1.5, vec![1.0, 2.0]).unwrap();
        let cp = Couple::new(x0.clone(), x0.clone()).unwrap();
        let x = c(&[1.0, -2.0]);
        let nx = x0.norm(&x).unwrap();
        for t in [0.1, 1.0, 7.0] {
            let k = k_functional(&cp, t, &x, &SolverConfig::default()).unwrap();
            assert!((k.value - t.min(1.0) * nx).abs() < 1e-6 * nx, "{t}");
        }
    }

    #[test]
    fn zero_functionals() {
        let cp = Couple::new(
            NormedSpace::weighted_lp(2.0, vec![1.0]).unwrap(),
            NormedSpace::weighted_lp(2.0, vec![3.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(k_functional(&cp, 2.0, &c(&[0.0]), &SolverConfig::default()).unwrap().value, 0.0);
        assert_eq!(j_functional(&cp, 2.0, &c(&[0.0])).unwrap(), 0.0);
    }

    #[test]
    fn diagonal_l1_matches_coordinatewise_minimum() {
        let w0 = vec![0.5, 2.0, 1.0];
        let w1 = vec![3.0, 0.2, 1.5];
        let cp = Couple::new(
            NormedSpace::weighted_lp(1.0, w0.clone()).unwrap(),
            NormedSpace::weighted_lp(1.0, w1.clone()).unwrap(),
        )
        .unwrap();
        let x = c(&[1.0, -2.0, 0.5]);
        for t in [0.3, 1.0, 4.0] {
            let k = k_functional(&cp, t, &x, &SolverConfig::default()).unwrap();
            let want = l1_k_functional(&w0, &w1, t, &x);
            assert!((k.value - want).abs() < 1e-6 * want, "{t}: {} {want}", k.value);
        }
    }

    #[test]
    fn equal_spaces_real_norm_is_series_multiple() {
        let x0 = NormedSpace::weighted_lp(2.0, vec![1.0, 3.0]).unwrap();
        let cp = Couple::new(x0.clone(), x0.clone()).unwrap();
        let x = c(&[1.0, 1.0]);
        let (theta, b, p) = (0.4, std::f64::consts::E, 2.0);
        let est = discrete_real_norm(&cp, theta, PExp::Finite(p), b, &x, 6, &SolverConfig::default()).unwrap();
        let series: f64 = (-6..=6)
            .map(|k: i64| (b.powf(-theta * k as f64) * b.powi(k as i32).min(1.0)).powf(p))
            .sum::<f64>()
            .powf(1.0 / p);
        let want = series * x0.norm(&x).unwrap();
        assert!((est.value - want).abs() < 1e-6 * want);
        assert!(est.lo <= est.value && est.value <= est.hi);
    }

    #[test]
    fn zero_real_norm() {
        let x0 = NormedSpace::weighted_lp(2.0, vec![1.0]).unwrap();
        let cp = Couple::new(x0.clone(), x0).unwrap();
        let est = discrete_real_norm(&cp, 0.5, PExp::Inf, 2.0, &c(&[0.0]), 3, &SolverConfig::default()).unwrap();
        assert_eq!(est.hi, 0.0);
    }
}
