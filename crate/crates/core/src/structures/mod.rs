//! Sequence structures on a normed space and their (weighted) norms.

mod window;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::seq::SparseSeq;
use crate::spaces::{NormedSpace, PExp, C64};

pub(crate) use window::{Purpose, WindowNorm};

/// Largest sign-pattern count enumerated exactly.
pub const ENUMERATION_LIMIT: usize = 1 << 20;
pub const DEFAULT_MC_SAMPLES: usize = 20_000;
/// Default Fourier nodes per unit of support width.
pub const NODES_PER_WIDTH: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RademacherMode {
    #[default]
    Exact,
    /// Falls back to exact enumeration whenever `2^|support| ≤ samples`.
    MonteCarlo { samples: usize, seed: u64 },
}

fn default_samples() -> usize {
    DEFAULT_MC_SAMPLES
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeqStructSpec {
    Lp {
        p: PExp,
    },
    FourierLp {
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quad_nodes: Option<usize>,
    },
    FourierC {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quad_nodes: Option<usize>,
    },
    Rademacher {
        p: f64,
        #[serde(default)]
        mode: RademacherMode,
    },
    Gaussian {
        p: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        seed: u64,
    },
    LatticeLq {
        q: PExp,
    },
}

/// Value with an enclosing interval. Deterministic exact evaluations have
/// `lo = value = hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl NormEstimate {
    pub fn exact(v: f64) -> Self {
        NormEstimate { value: v, lo: v, hi: v }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// Weights `base^{exponent·k}` applied blockwise before evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedEval {
    pub base: f64,
    pub exponent: f64,
}

impl WeightedEval {
    pub fn new(base: f64, exponent: f64) -> Result<Self> {
        if !(base > 1.0 && base.is_finite()) {
            return Err(Error::InvalidInput(format!("base {base} must exceed 1")));
        }
        Ok(WeightedEval { base, exponent })
    }

    pub fn weight(&self, k: i64) -> f64 {
        (self.exponent * k as f64 * self.base.ln()).exp()
    }

    pub(crate) fn checked_weight(&self, k: i64) -> Result<f64> {
        let lw = self.exponent * k as f64 * self.base.ln();
        if lw > 300.0 * std::f64::consts::LN_10 {
            return Err(Error::Overflow(lw.exp()));
        }
        Ok(lw.exp())
    }
}

impl SeqStructSpec {
    pub fn lp(p: f64) -> Self {
        SeqStructSpec::Lp {
            p: PExp::new(p).expect("exponent in [1, inf]"),
        }
    }

    pub fn lattice(q: f64) -> Self {
        SeqStructSpec::LatticeLq {
            q: PExp::new(q).expect("exponent in [1, inf]"),
        }
    }

    pub fn fourier(p: f64) -> Self {
        if p.is_infinite() {
            SeqStructSpec::FourierC { quad_nodes: None }
        } else {
            SeqStructSpec::FourierLp { p, quad_nodes: None }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |p: f64, what: &str| {
            if p.is_finite() && p >= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{what} requires p in [1, inf), got {p}")))
            }
        };
        match self {
            SeqStructSpec::Lp { .. } | SeqStructSpec::LatticeLq { .. } => Ok(()),
            SeqStructSpec::FourierLp { p, quad_nodes } => {
                finite(*p, "fourier_lp")?;
                if quad_nodes == &Some(0) {
                    return Err(Error::InvalidInput("quad_nodes must be positive".into()));
                }
                Ok(())
            }
            SeqStructSpec::FourierC { quad_nodes } => {
                if quad_nodes == &Some(0) {
                    return Err(Error::InvalidInput("quad_nodes must be positive".into()));
                }
                Ok(())
            }
            SeqStructSpec::Rademacher { p, mode } => {
                finite(*p, "rademacher")?;
                if let RademacherMode::MonteCarlo { samples: 0, .. } = mode {
                    return Err(Error::InvalidInput("samples must be positive".into()));
                }
                Ok(())
            }
            SeqStructSpec::Gaussian { p, samples, .. } => {
                finite(*p, "gaussian")?;
                if *samples < 40 {
                    return Err(Error::InvalidInput("gaussian needs at least 40 samples".into()));
                }
                Ok(())
            }
        }
    }

    /// True when evaluation uses random sampling.
    pub fn is_monte_carlo(&self) -> bool {
        matches!(
            self,
            SeqStructSpec::Gaussian { .. } | SeqStructSpec::Rademacher { mode: RademacherMode::MonteCarlo { .. }, .. }
        )
    }

    /// The ℓᵖ exponent family the structure sits closest to, used for labels.
    pub fn label(&self) -> String {
        let ps = |p: PExp| match p {
            PExp::Inf => "inf".to_string(),
            PExp::Finite(p) => format!("{p}"),
        };
        match self {
            SeqStructSpec::Lp { p } => format!("lp({})", ps(*p)),
            SeqStructSpec::FourierLp { p, .. } => format!("fourier_lp({p})"),
            SeqStructSpec::FourierC { .. } => "fourier_c".into(),
            SeqStructSpec::Rademacher { p, mode } => match mode {
                RademacherMode::Exact => format!("rademacher({p})"),
                RademacherMode::MonteCarlo { .. } => format!("rademacher_mc({p})"),
            },
            SeqStructSpec::Gaussian { p, .. } => format!("gaussian({p})"),
            SeqStructSpec::LatticeLq { q } => format!("lattice({})", ps(*q)),
        }
    }

    /// `‖s‖_𝔖` on the base space.
    pub fn norm(&self, space: &NormedSpace, s: &SparseSeq) -> Result<NormEstimate> {
        self.validate()?;
        check_dim(space.dim, s.dim())?;
        // Sign and Gaussian averages only see the multiset of blocks, so
        // gaps in the support are squeezed out before enumeration.
        let compressed;
        let s = if matches!(self, SeqStructSpec::Rademacher { .. } | SeqStructSpec::Gaussian { .. }) {
            let blocks: Vec<Vec<C64>> = s.iter().map(|(_, b)| b.to_vec()).collect();
            compressed = SparseSeq::from_blocks(s.dim(), 0, &blocks)?;
            &compressed
        } else {
            s
        };
        let Some((lo, hi)) = s.bounds() else {
            return Ok(NormEstimate::exact(0.0));
        };
        let w = WindowNorm::new(self, space, lo, hi, vec![1.0; (hi - lo + 1) as usize], Purpose::Exact)?;
        w.estimate(&flatten(s, lo, hi))
    }

    /// `‖(base^{exponent·k} x_k)_k‖_𝔖`.
    pub fn weighted_norm(&self, space: &NormedSpace, w: WeightedEval, s: &SparseSeq) -> Result<NormEstimate> {
        let mut scaled = SparseSeq::zero(s.dim());
        for (k, b) in s.iter() {
            let c = w.checked_weight(k)?;
            scaled.insert(k, b.iter().map(|z| z * c).collect());
        }
        self.norm(space, &scaled)
    }
}

pub fn seq_norm(spec: &SeqStructSpec, space: &NormedSpace, s: &SparseSeq) -> Result<NormEstimate> {
    spec.norm(space, s)
}

pub fn weighted_seq_norm(
    spec: &SeqStructSpec,
    space: &NormedSpace,
    w: WeightedEval,
    s: &SparseSeq,
) -> Result<NormEstimate> {
    spec.weighted_norm(space, w, s)
}

pub(crate) fn flatten(s: &SparseSeq, lo: i64, hi: i64) -> Vec<C64> {
    s.window(lo, hi).into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(pairs: &[(i64, f64)]) -> SparseSeq {
        SparseSeq::from_pairs(1, pairs.iter().map(|&(k, v)| (k, vec![C64::new(v, 0.0)]))).unwrap()
    }

    fn one() -> NormedSpace {
        NormedSpace::unweighted(2.0, 1).unwrap()
    }

    fn all_variants() -> Vec<SeqStructSpec> {
        vec![
            SeqStructSpec::lp(1.0),
            SeqStructSpec::lp(2.0),
            SeqStructSpec::lp(f64::INFINITY),
            SeqStructSpec::fourier(1.0),
            SeqStructSpec::fourier(3.0),
            SeqStructSpec::fourier(f64::INFINITY),
            SeqStructSpec::Rademacher { p: 1.0, mode: RademacherMode::Exact },
            SeqStructSpec::lattice(2.0),
            SeqStructSpec::lattice(f64::INFINITY),
        ]
    }

    #[test]
    fn delta_norm_is_base_norm() {
        let space = NormedSpace::weighted_lp(1.5, vec![1.0, 3.0]).unwrap();
        let x = vec![C64::new(1.0, -2.0), C64::new(0.5, 0.0)];
        let expect = space.norm(&x).unwrap();
        for v in all_variants() {
            let got = v.norm(&space, &SparseSeq::delta(4, x.clone())).unwrap();
            assert!((got.value - expect).abs() < 1e-12, "{}", v.label());
        }
    }

    #[test]
    fn lp2_two_unit_blocks() {
        let v = SeqStructSpec::lp(2.0).norm(&one(), &scalar(&[(0, 1.0), (1, 1.0)])).unwrap();
        assert!((v.value - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn fourier_l1_of_one_plus_exp_is_four_over_pi() {
        let s = scalar(&[(0, 1.0), (1, 1.0)]);
        let fine = SeqStructSpec::FourierLp { p: 1.0, quad_nodes: Some(1 << 14) };
        let v = fine.norm(&one(), &s).unwrap();
        assert!((v.value - 1.273_239_544_735_163).abs() < 1e-6, "{}", v.value);
        let v = SeqStructSpec::fourier(1.0).norm(&one(), &s).unwrap();
        assert!(v.lo <= 4.0 / std::f64::consts::PI && 4.0 / std::f64::consts::PI <= v.hi);
    }

    #[test]
    fn rademacher_l1_two_unit_blocks() {
        let spec = SeqStructSpec::Rademacher { p: 1.0, mode: RademacherMode::Exact };
        let v = spec.norm(&one(), &scalar(&[(0, 1.0), (1, 1.0)])).unwrap();
        assert!((v.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rademacher_budget_is_enforced() {
        let spec = SeqStructSpec::Rademacher { p: 1.0, mode: RademacherMode::Exact };
        let pairs: Vec<(i64, f64)> = (0..21).map(|k| (3 * k, 1.0)).collect();
        assert_eq!(spec.norm(&one(), &scalar(&pairs)), Err(Error::EnumerationBudget { support: 21 }));
    }

    #[test]
    fn quadrature_budget_is_enforced() {
        let spec = SeqStructSpec::FourierLp { p: 1.0, quad_nodes: Some(7) };
        let r = spec.norm(&one(), &scalar(&[(0, 1.0), (1, 1.0)]));
        assert!(matches!(r, Err(Error::QuadratureBudget { .. })));
    }

    #[test]
    fn gaussian_l2_matches_closed_form_within_ci() {
        let spec = SeqStructSpec::Gaussian { p: 2.0, samples: 20_000, seed: 3 };
        let space = NormedSpace::unweighted(2.0, 2).unwrap();
        let s = SparseSeq::from_pairs(
            2,
            [(0, vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)]), (2, vec![C64::new(0.0, 1.0), C64::new(-1.0, 0.0)])],
        )
        .unwrap();
        let v = spec.norm(&space, &s).unwrap();
        let exact = 7f64.sqrt();
        assert!(v.lo <= exact && exact <= v.hi, "{v:?}");
    }

    #[test]
    fn weighted_l1_three_blocks() {
        let w = WeightedEval::new(std::f64::consts::E, -0.5).unwrap();
        let v = SeqStructSpec::lp(1.0)
            .weighted_norm(&one(), w, &scalar(&[(-1, 1.0), (0, 1.0), (1, 1.0)]))
            .unwrap();
        assert!((v.value - 3.255_251_2).abs() < 1e-6, "{}", v.value);
    }

    #[test]
    fn weighted_overflow_guard() {
        let w = WeightedEval::new(10.0, 1.0).unwrap();
        let r = SeqStructSpec::lp(1.0).weighted_norm(&one(), w, &scalar(&[(400, 1.0)]));
        assert!(matches!(r, Err(Error::Overflow(_))));
    }

    #[test]
    fn lattice_is_coordinatewise() {
        let space = NormedSpace::unweighted(1.0, 2).unwrap();
        let s = SparseSeq::from_pairs(
            2,
            [(0, vec![C64::new(3.0, 0.0), C64::new(0.0, 0.0)]), (1, vec![C64::new(4.0, 0.0), C64::new(1.0, 0.0)])],
        )
        .unwrap();
        let v = SeqStructSpec::lattice(2.0).norm(&space, &s).unwrap();
        assert!((v.value - 6.0).abs() < 1e-12);
    }

    #[test]
    fn spec_json_shapes() {
        let j = serde_json::to_string(&SeqStructSpec::lp(f64::INFINITY)).unwrap();
        assert_eq!(j, r#"{"kind":"lp","p":"inf"}"#);
        let r: SeqStructSpec =
            serde_json::from_str(r#"{"kind":"rademacher","p":1.0,"mode":{"type":"monte_carlo","samples":100,"seed":2}}"#).unwrap();
        assert!(r.is_monte_carlo());
        let g: SeqStructSpec = serde_json::from_str(r#"{"kind":"gaussian","p":2.0}"#).unwrap();
        assert_eq!(g, SeqStructSpec::Gaussian { p: 2.0, samples: DEFAULT_MC_SAMPLES, seed: 0 });
    }
}
