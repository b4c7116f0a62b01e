//! Dual norm of a functional on the interpolation space.
//!
//! `‖x*‖ = 1 / inf{‖x⃗‖ : Re⟨Σ_k x_k, x*⟩ = 1}` under the bilinear pairing.
//! The constraint is kept by an affine parametrization: the blocks are free
//! and the pinned block absorbs `(1 - Re⟨Σ_k x_k, x*⟩)·u` with
//! `u = conj(x*)/‖x*‖₂²`.

use serde::{Deserialize, Serialize};

use super::interp::SidedProblem;
use crate::error::{check_dim, Error, Result};
use crate::seq::SparseSeq;
use crate::solver::{self, SmoothObjective};
use crate::spaces::{smooth_aggregate, PExp, C64};
use crate::structures::{Purpose, WindowNorm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualEstimate {
    /// Lower estimate of the dual norm: `|⟨x, x*⟩| / ‖x⃗‖` for the certificate.
    pub value: f64,
    /// Decomposition `x⃗` of the maximizing direction.
    pub certificate: SparseSeq,
    pub converged: bool,
}

struct HyperplaneObjective {
    sides: [WindowNorm; 2],
    xstar: Vec<C64>,
    u: Vec<C64>,
    n: usize,
    width: usize,
    pin: usize,
    precond: Vec<f64>,
    scale: f64,
}

impl HyperplaneObjective {
    fn blocks(&self, v: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut full = vec![C64::new(0.0, 0.0); self.width * n];
        let mut pairing = 0.0;
        for k in 0..self.width {
            let d = self.precond[k];
            for i in 0..n {
                let b = v[k * n + i] / d;
                full[k * n + i] = b;
                pairing += (b * self.xstar[i]).re;
            }
        }
        let c = 1.0 - pairing;
        for i in 0..n {
            full[self.pin * n + i] += self.u[i] * c;
        }
        full
    }
}

impl SmoothObjective for HyperplaneObjective {
    fn dim(&self) -> usize {
        self.width * self.n
    }

    fn eval_smooth(&self, v: &[C64], mu: f64, grad: Option<&mut [C64]>) -> f64 {
        let full = self.blocks(v);
        let f = [self.sides[0].eval(&full, mu, None), self.sides[1].eval(&full, mu, None)];
        let mut d = [0.0; 2];
        let val = smooth_aggregate(PExp::Inf, &f, mu, &mut d);
        if let Some(g) = grad {
            let n = self.n;
            let mut gf = vec![C64::new(0.0, 0.0); full.len()];
            for j in 0..2 {
                if d[j] > 1e-300 {
                    self.sides[j].eval(&full, mu, Some((&mut gf, d[j])));
                }
            }
            let c: f64 = (0..n).map(|i| (gf[self.pin * n + i].conj() * self.u[i]).re).sum();
            for k in 0..self.width {
                let inv = 1.0 / self.precond[k];
                for i in 0..n {
                    g[k * n + i] = (gf[k * n + i] - self.xstar[i].conj() * c) * inv;
                }
            }
        }
        val
    }

    fn eval_exact(&self, v: &[C64]) -> f64 {
        let full = self.blocks(v);
        self.sides[0].eval(&full, 0.0, None).max(self.sides[1].eval(&full, 0.0, None))
    }

    fn scale(&self) -> f64 {
        self.scale
    }
}

/// Lower estimate of the norm of `x*` as a functional on `(𝒳₀,𝒳₁)_{θ;b}`
/// truncated to `[-N, N]`. Each side must be a single structured space.
pub fn dual_norm_estimate(prob: &SidedProblem, xstar: &[C64]) -> Result<DualEstimate> {
    prob.validate()?;
    let n = prob.dim();
    check_dim(n, xstar.len())?;
    if prob.sides.iter().any(|s| s.len() != 1) {
        return Err(Error::Unsupported("dual estimate needs one term per side".into()));
    }
    let nn: f64 = xstar.iter().map(|z| z.norm_sqr()).sum();
    if nn == 0.0 {
        return Ok(DualEstimate {
            value: 0.0,
            certificate: SparseSeq::zero(n),
            converged: true,
        });
    }
    let u: Vec<C64> = xstar.iter().map(|z| z.conj() / nn).collect();
    let (lo, hi) = (-prob.window, prob.window);
    let width = (hi - lo + 1) as usize;
    let mut sides = Vec::with_capacity(2);
    for j in 0..2 {
        let w = prob.weight(j);
        let weights = (lo..=hi).map(|k| w.checked_weight(k)).collect::<Result<Vec<f64>>>()?;
        let t = &prob.sides[j][0];
        sides.push(WindowNorm::new(&t.structure, &t.space, lo, hi, weights, Purpose::Solver)?);
    }
    let [s0, s1]: [WindowNorm; 2] = sides.try_into().map_err(|_| Error::InvalidInput("two sides".into()))?;
    let precond: Vec<f64> = (lo..=hi)
        .map(|k| prob.weight(0).weight(k).max(prob.weight(1).weight(k)))
        .collect();
    let delta = SparseSeq::delta(0, u.clone());
    let [d0, d1] = prob.side_norms(&delta)?;
    let obj = HyperplaneObjective {
        sides: [s0, s1],
        xstar: xstar.to_vec(),
        u,
        n,
        width,
        pin: (-lo) as usize,
        precond,
        scale: d0.value.max(d1.value).max(1e-300),
    };
    let start = vec![C64::new(0.0, 0.0); obj.dim()];
    let m = solver::minimize(&obj, &[start], &prob.solver);
    let full = obj.blocks(&m.z);
    let blocks: Vec<Vec<C64>> = full.chunks(n).map(|c| c.to_vec()).collect();
    let certificate = SparseSeq::from_blocks(n, lo, &blocks)?;
    let norm = prob.objective(&certificate)?;
    let pairing: C64 = certificate.sum().iter().zip(xstar).map(|(a, b)| a * b).sum();
    Ok(DualEstimate {
        value: if norm > 0.0 { pairing.norm() / norm } else { 0.0 },
        certificate,
        converged: m.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::interp::{interp_norm, InterpProblem};
    use crate::solver::SolverConfig;
    use crate::spaces::{Couple, NormedSpace};
    use crate::structures::SeqStructSpec;

    fn c(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    #[test]
    fn equal_spaces_recover_the_dual_norm() {
        // X₀ = X₁ = X with ℓ¹ structures: both sides dominate Σ‖x_k‖ ≥ ‖x‖,
        // so the interpolation norm is ‖·‖_X and the dual norm is ‖·‖_{X*}.
        let w = vec![0.5, 2.0, 1.5];
        let x = NormedSpace::weighted_lp(2.0, w).unwrap();
        let couple = Couple::new(x.clone(), x.clone()).unwrap();
        let mut p = InterpProblem::new(couple, SeqStructSpec::lp(1.0), SeqStructSpec::lp(1.0), 0.5);
        p.window = 3;
        p.solver = SolverConfig::with_tol(1e-7);
        let xs = c(&[1.0, -2.0, 0.5]);
        let est = dual_norm_estimate(&p.sided(), &xs).unwrap();
        let exact = x.dual_norm(&xs).unwrap();
        assert!(est.value <= exact * (1.0 + 1e-9));
        assert!(est.value >= exact * (1.0 - 1e-4));
    }

    #[test]
    fn estimate_is_a_certified_ratio() {
        let couple = Couple::new(
            NormedSpace::weighted_lp(1.5, vec![0.3, 2.0]).unwrap(),
            NormedSpace::weighted_lp(1.5, vec![4.0, 0.5]).unwrap(),
        )
        .unwrap();
        let mut p = InterpProblem::new(couple, SeqStructSpec::lp(1.5), SeqStructSpec::lp(1.5), 0.4);
        p.window = 4;
        p.solver = SolverConfig::with_tol(1e-6);
        let xs = c(&[1.0, 1.0]);
        let est = dual_norm_estimate(&p.sided(), &xs).unwrap();
        let x = est.certificate.sum();
        let i = interp_norm(&p, &x).unwrap();
        let pairing: C64 = x.iter().zip(&xs).map(|(a, b)| a * b).sum();
        // The interpolation norm of x is at most the certificate's objective.
        assert!(pairing.norm() / i.value >= est.value * (1.0 - 1e-9));
    }
}
