//! Finitely supported decompositions with controlled norm: Cesàro mean of
//! a near-optimal decomposition plus two tail lumps that restore the sum.

use serde::{Deserialize, Serialize};

use super::constants::finite_rep_constant;
use super::interp::{interp_norm, InterpProblem, SidedProblem};
use crate::error::{check_dim, Error, Result};
use crate::seq::SparseSeq;
use crate::spaces::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteRep {
    pub seq: SparseSeq,
    /// Cesàro order; the result is supported in `[-n-1, n+1]` around `y`.
    pub n: u64,
    /// `C(θ, b)`.
    pub constant: f64,
    /// Objective of the decomposition the construction started from.
    pub reference: f64,
    /// `C(θ, b) · slack · reference`.
    pub bound: f64,
}

/// Solve for a near-optimal decomposition, then apply [`finite_rep_from`].
pub fn finite_rep(prob: &InterpProblem, x: &[C64], slack: f64) -> Result<FiniteRep> {
    if !(slack > 1.0) {
        return Err(Error::InvalidInput(format!("slack={slack} must exceed 1")));
    }
    let sided = prob.sided();
    let sol = interp_norm(prob, x)?;
    let y = sol.seq().cloned().unwrap_or_else(|| SparseSeq::zero(x.len()));
    let mut rep = finite_rep_from(&sided, x, &y)?;
    rep.bound *= slack;
    Ok(rep)
}

/// `w = Cₙy + w⁺ + w⁻` with
/// `w⁺_m = (x - Σ_{k≤m} y_k)/(n+1)` and `w⁻_{-m} = (Σ_{k<-m} y_k)/(n+1)`
/// for `m = 0..=n`, where `n + 1 ≥ max(‖x‖₀, ‖x‖₁)/F(y)`.
pub fn finite_rep_from(prob: &SidedProblem, x: &[C64], y: &SparseSeq) -> Result<FiniteRep> {
    prob.validate()?;
    check_dim(prob.dim(), x.len())?;
    check_dim(prob.dim(), y.dim())?;
    for side in &prob.sides {
        if let Some(t) = side.iter().find(|t| t.structure.is_monte_carlo()) {
            return Err(Error::Unsupported(format!(
                "finite representation needs a deterministic structure, got {}",
                t.structure.label()
            )));
        }
    }
    let constant = finite_rep_constant(prob.theta, prob.base);
    let dim = x.len();
    if x.iter().all(|z| z.norm() == 0.0) {
        return Ok(FiniteRep {
            seq: SparseSeq::zero(dim),
            n: 0,
            constant,
            reference: 0.0,
            bound: 0.0,
        });
    }
    let reference = prob.objective(y)?;
    let delta = SparseSeq::delta(0, x.to_vec());
    let [a0, a1] = prob.side_norms(&delta)?;
    let ratio = a0.value.max(a1.value) / reference;
    let n = (ratio.ceil() as u64).saturating_sub(1);
    let inv = 1.0 / (n as f64 + 1.0);

    let mut w = y.cesaro(n);
    // Prefix sums of y over the indices that matter.
    let prefix = |m: i64| -> Vec<C64> {
        let mut acc = vec![C64::new(0.0, 0.0); dim];
        for (k, b) in y.iter() {
            if k <= m {
                for (a, v) in acc.iter_mut().zip(b) {
                    *a += v;
                }
            }
        }
        acc
    };
    for m in 0..=n as i64 {
        let head = prefix(m);
        let plus: Vec<C64> = x.iter().zip(&head).map(|(a, b)| (a - b) * inv).collect();
        w.add_at(m, &plus);
        let below = prefix(-m - 1);
        let minus: Vec<C64> = below.iter().map(|b| b * inv).collect();
        w.add_at(-m, &minus);
    }
    Ok(FiniteRep {
        seq: w,
        n,
        constant,
        reference,
        bound: constant * reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolverConfig;
    use crate::spaces::{Couple, NormedSpace};
    use crate::structures::SeqStructSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(rng: &mut ChaCha8Rng, s: SeqStructSpec) -> InterpProblem {
        let n = 2;
        let w0: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0f64..2.0).exp()).collect();
        let w1: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0f64..2.0).exp()).collect();
        let couple = Couple::new(
            NormedSpace::weighted_lp(1.5, w0).unwrap(),
            NormedSpace::weighted_lp(1.5, w1).unwrap(),
        )
        .unwrap();
        let mut p = InterpProblem::new(couple, s.clone(), s, rng.random_range(0.2..0.8));
        p.solver = SolverConfig::with_tol(1e-5);
        p
    }

    #[test]
    fn zero_gives_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = problem(&mut rng, SeqStructSpec::lp(2.0));
        let r = finite_rep(&p, &[C64::new(0.0, 0.0); 2], 1.1).unwrap();
        assert!(r.seq.is_empty());
    }

    #[test]
    fn wide_decompositions_are_folded_within_the_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let q = [1.0, 2.0, f64::INFINITY][rng.random_range(0..3)];
            let p = problem(&mut rng, SeqStructSpec::lp(q));
            let blocks: Vec<Vec<C64>> = (0..13)
                .map(|_| (0..2).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
                .collect();
            let y = SparseSeq::from_blocks(2, -6, &blocks).unwrap();
            let x = y.sum();
            let r = finite_rep_from(&p.sided(), &x, &y).unwrap();
            let got = r.seq.sum();
            for (a, b) in got.iter().zip(&x) {
                assert!((a - b).norm() < 1e-10);
            }
            let f = p.sided().objective(&r.seq).unwrap();
            assert!(f <= r.bound * (1.0 + 1e-12), "{f} {}", r.bound);
        }
    }

    #[test]
    fn monte_carlo_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = problem(
            &mut rng,
            SeqStructSpec::Gaussian {
                p: 2.0,
                samples: 100,
                seed: 1,
            },
        );
        let y = SparseSeq::delta(0, vec![C64::new(1.0, 0.0); 2]);
        assert!(matches!(finite_rep_from(&p.sided(), &y.sum(), &y), Err(Error::Unsupported(_))));
    }
}
