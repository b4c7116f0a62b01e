//! Finite-dimensional normed spaces on ℂⁿ and compatible couples.
//!
//! Every norm acts on coordinate moduli, so each space is a coordinate
//! Banach lattice. Smoothed evaluations (used by the solver) live next to the
//! exact ones so that a new norm family only has to be added here.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::solver::{self, SmoothObjective, SolverConfig};

pub type C64 = Complex64;

/// An exponent in `[1, ∞]`. Serialized as a number or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PExp {
    Finite(f64),
    Inf,
}

impl PExp {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(PExp::Inf)
        } else if p.is_finite() && p >= 1.0 {
            Ok(PExp::Finite(p))
        } else {
            Err(Error::InvalidInput(format!("exponent {p} outside [1, inf]")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            PExp::Finite(p) => p,
            PExp::Inf => f64::INFINITY,
        }
    }

    /// Hölder conjugate exponent.
    pub fn conjugate(self) -> PExp {
        match self {
            PExp::Inf => PExp::Finite(1.0),
            PExp::Finite(1.0) => PExp::Inf,
            PExp::Finite(p) => PExp::Finite(p / (p - 1.0)),
        }
    }

    pub fn is_inf(self) -> bool {
        matches!(self, PExp::Inf)
    }
}

impl Serialize for PExp {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PExp::Finite(p) => s.serialize_f64(*p),
            PExp::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PExp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Num(p) => p,
            Raw::Str(s) if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") => {
                f64::INFINITY
            }
            Raw::Str(s) => return Err(serde::de::Error::custom(format!("bad exponent {s:?}"))),
        };
        PExp::new(p).map_err(serde::de::Error::custom)
    }
}

/// Norm descriptor. `Max` is the norm of an intersection `Y ∩ Z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpec {
    WeightedLp { p: PExp, weights: Vec<f64> },
    Max { parts: Vec<NormSpec> },
}

impl NormSpec {
    fn dim(&self) -> Option<usize> {
        match self {
            NormSpec::WeightedLp { weights, .. } => Some(weights.len()),
            NormSpec::Max { parts } => parts.first().and_then(|p| p.dim()),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            NormSpec::WeightedLp { weights, .. } => {
                check_dim(dim, weights.len())?;
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::InvalidInput("weights must be positive and finite".into()));
                }
                Ok(())
            }
            NormSpec::Max { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidInput("max norm needs at least one part".into()));
                }
                parts.iter().try_for_each(|p| p.validate(dim))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormedSpace {
    pub dim: usize,
    pub norm_spec: NormSpec,
}

impl<'de> Deserialize<'de> for NormedSpace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            dim: Option<usize>,
            norm_spec: NormSpec,
        }
        let raw = Raw::deserialize(d)?;
        let dim = raw
            .dim
            .or_else(|| raw.norm_spec.dim())
            .ok_or_else(|| serde::de::Error::custom("cannot infer dimension"))?;
        NormedSpace::new(dim, raw.norm_spec).map_err(serde::de::Error::custom)
    }
}

impl NormedSpace {
    pub fn new(dim: usize, norm_spec: NormSpec) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        norm_spec.validate(dim)?;
        Ok(NormedSpace { dim, norm_spec })
    }

    pub fn weighted_lp(p: f64, weights: Vec<f64>) -> Result<Self> {
        let dim = weights.len();
        Self::new(dim, NormSpec::WeightedLp { p: PExp::new(p)?, weights })
    }

    pub fn unweighted(p: f64, dim: usize) -> Result<Self> {
        Self::weighted_lp(p, vec![1.0; dim])
    }

    /// Intersection space with norm `max_j ‖·‖_j`.
    pub fn max_of(spaces: &[NormedSpace]) -> Result<Self> {
        let dim = spaces.first().map(|s| s.dim).unwrap_or(0);
        for s in spaces {
            check_dim(dim, s.dim)?;
        }
        Self::new(
            dim,
            NormSpec::Max {
                parts: spaces.iter().map(|s| s.norm_spec.clone()).collect(),
            },
        )
    }

    /// Weighted ℓᵖ parameters, if this is a plain weighted ℓᵖ space.
    pub fn as_weighted_lp(&self) -> Option<(PExp, &[f64])> {
        match &self.norm_spec {
            NormSpec::WeightedLp { p, weights } => Some((*p, weights)),
            NormSpec::Max { .. } => None,
        }
    }

    pub fn norm(&self, v: &[C64]) -> Result<f64> {
        check_dim(self.dim, v.len())?;
        Ok(self.norm_unchecked(v))
    }

    pub(crate) fn norm_unchecked(&self, v: &[C64]) -> f64 {
        spec_norm(&self.norm_spec, v.iter().map(|z| z.norm()))
    }

    /// Norm of `v` as a functional under the bilinear pairing `Σ xᵢvᵢ`.
    pub fn dual_norm(&self, v: &[C64]) -> Result<f64> {
        check_dim(self.dim, v.len())?;
        self.dual_space()?.norm(v)
    }

    /// The dual space: ℓ^{p'} with reciprocal weights.
    pub fn dual_space(&self) -> Result<NormedSpace> {
        match &self.norm_spec {
            NormSpec::WeightedLp { p, weights } => Ok(NormedSpace {
                dim: self.dim,
                norm_spec: NormSpec::WeightedLp {
                    p: p.conjugate(),
                    weights: weights.iter().map(|w| 1.0 / w).collect(),
                },
            }),
            NormSpec::Max { .. } => Err(Error::Unsupported(
                "dual of a max-of-norms space has no closed form".into(),
            )),
        }
    }

    /// Smoothed norm `N_μ ≥ N` with `N_μ ≤ N + μ·n`, accumulating
    /// `scale · ∇N_μ(v)` into `grad` (gradient w.r.t. real and imaginary parts,
    /// packed as a complex number).
    pub(crate) fn smooth_norm(&self, v: &[C64], mu: f64, grad: Option<(&mut [C64], f64)>) -> f64 {
        smooth_spec(&self.norm_spec, v, mu, grad)
    }
}

fn spec_norm(spec: &NormSpec, moduli: impl Iterator<Item = f64>) -> f64 {
    match spec {
        NormSpec::WeightedLp { p, weights } => {
            let terms = moduli.zip(weights).map(|(m, w)| m * w);
            aggregate(*p, terms)
        }
        NormSpec::Max { parts } => {
            let m: Vec<f64> = moduli.collect();
            parts
                .iter()
                .map(|s| spec_norm(s, m.iter().copied()))
                .fold(0.0, f64::max)
        }
    }
}

/// ℓᵖ aggregate of nonnegative terms, scaled to avoid overflow.
pub(crate) fn aggregate(p: PExp, terms: impl Iterator<Item = f64>) -> f64 {
    match p {
        PExp::Inf => terms.fold(0.0, f64::max),
        PExp::Finite(1.0) => terms.sum(),
        PExp::Finite(p) => {
            let t: Vec<f64> = terms.collect();
            let m = t.iter().copied().fold(0.0, f64::max);
            if m == 0.0 || !m.is_finite() {
                return m;
            }
            m * t.iter().map(|x| (x / m).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

/// Smoothed ℓᵖ aggregate of positive terms. Returns the value and writes
/// `∂/∂aᵢ` into `d`. For `p = ∞` this is log-sum-exp at temperature `mu`.
pub(crate) fn smooth_aggregate(p: PExp, a: &[f64], mu: f64, d: &mut [f64]) -> f64 {
    match p {
        PExp::Inf => {
            let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if mu <= 0.0 {
                d.iter_mut().for_each(|x| *x = 0.0);
                if let Some(i) = a.iter().position(|&x| x == m) {
                    d[i] = 1.0;
                }
                return m;
            }
            let mut s = 0.0;
            for (di, &ai) in d.iter_mut().zip(a) {
                *di = ((ai - m) / mu).exp();
                s += *di;
            }
            d.iter_mut().for_each(|x| *x /= s);
            m + mu * s.ln()
        }
        PExp::Finite(1.0) => {
            d.iter_mut().for_each(|x| *x = 1.0);
            a.iter().sum()
        }
        PExp::Finite(p) => {
            let n = aggregate(PExp::Finite(p), a.iter().copied());
            if n == 0.0 {
                d.iter_mut().for_each(|x| *x = 0.0);
                return 0.0;
            }
            for (di, &ai) in d.iter_mut().zip(a) {
                *di = (ai / n).powf(p - 1.0);
            }
            n
        }
    }
}

fn smooth_spec(spec: &NormSpec, v: &[C64], mu: f64, grad: Option<(&mut [C64], f64)>) -> f64 {
    match spec {
        NormSpec::WeightedLp { p, weights } => {
            let n = v.len();
            let mut a = vec![0.0; n];
            for i in 0..n {
                let t = weights[i] * v[i].norm();
                a[i] = if mu > 0.0 { t.hypot(mu) } else { t };
            }
            let mut d = vec![0.0; n];
            let val = smooth_aggregate(*p, &a, mu, &mut d);
            if let Some((g, s)) = grad {
                for i in 0..n {
                    if a[i] > 0.0 {
                        g[i] += v[i] * (s * d[i] * weights[i] * weights[i] / a[i]);
                    }
                }
            }
            val
        }
        NormSpec::Max { parts } => {
            let vals: Vec<f64> = parts.iter().map(|s| smooth_spec(s, v, mu, None)).collect();
            let mut d = vec![0.0; parts.len()];
            let val = smooth_aggregate(PExp::Inf, &vals, mu, &mut d);
            if let Some((g, s)) = grad {
                for (part, di) in parts.iter().zip(&d) {
                    if *di > 1e-300 {
                        smooth_spec(part, v, mu, Some((&mut *g, s * di)));
                    }
                }
            }
            val
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Couple {
    pub dim: usize,
    pub space0: NormedSpace,
    pub space1: NormedSpace,
}

impl<'de> Deserialize<'de> for Couple {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            dim: Option<usize>,
            space0: NormedSpace,
            space1: NormedSpace,
        }
        let raw = Raw::deserialize(d)?;
        if let Some(dim) = raw.dim {
            check_dim(dim, raw.space0.dim).map_err(serde::de::Error::custom)?;
        }
        Couple::new(raw.space0, raw.space1).map_err(serde::de::Error::custom)
    }
}

/// Result of a two-term splitting `x = x₀ + x₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub value: f64,
    pub lower_hint: f64,
    pub x0: Vec<C64>,
    pub x1: Vec<C64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Couple {
    pub fn new(space0: NormedSpace, space1: NormedSpace) -> Result<Self> {
        check_dim(space0.dim, space1.dim)?;
        Ok(Couple {
            dim: space0.dim,
            space0,
            space1,
        })
    }

    pub fn space(&self, j: usize) -> &NormedSpace {
        if j == 0 {
            &self.space0
        } else {
            &self.space1
        }
    }

    pub fn intersection_norm(&self, v: &[C64]) -> Result<f64> {
        Ok(self.space0.norm(v)?.max(self.space1.norm(v)?))
    }

    /// `inf{‖x₀‖₀ + t‖x₁‖₁ : x₀ + x₁ = v}`; `t = 1` is the sum norm.
    pub fn split(&self, v: &[C64], t: f64, cfg: &SolverConfig) -> Result<Split> {
        check_dim(self.dim, v.len())?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("K-functional parameter t={t} must be positive")));
        }
        cfg.validate()?;
        let n0 = self.space0.norm_unchecked(v);
        let n1 = t * self.space1.norm_unchecked(v);
        if n0 == 0.0 && n1 == 0.0 {
            return Ok(Split {
                value: 0.0,
                lower_hint: 0.0,
                x0: vec![C64::new(0.0, 0.0); self.dim],
                x1: vec![C64::new(0.0, 0.0); self.dim],
                iterations: 0,
                converged: true,
            });
        }
        let obj = SplitObjective {
            couple: self,
            v,
            t,
            scale: n0.min(n1),
        };
        let zero = vec![C64::new(0.0, 0.0); self.dim];
        let mut starts = vec![v.to_vec(), zero];
        if let (Some((_, w0)), Some((_, w1))) =
            (self.space0.as_weighted_lp(), self.space1.as_weighted_lp())
        {
            let coordwise = (0..self.dim)
                .map(|i| if w0[i] <= t * w1[i] { v[i] } else { C64::new(0.0, 0.0) })
                .collect();
            starts.push(coordwise);
        }
        let m = solver::minimize(&obj, &starts, cfg);
        let x0 = m.z;
        let x1: Vec<C64> = v.iter().zip(&x0).map(|(a, b)| a - b).collect();
        let value = self.space0.norm_unchecked(&x0) + t * self.space1.norm_unchecked(&x1);
        let lower_hint = self.split_lower_bound(v, t, &x0, &x1, cfg.rel_tol * obj.scale);
        Ok(Split {
            value,
            lower_hint: lower_hint.min(value),
            x0,
            x1,
            iterations: m.iterations,
            converged: m.converged,
        })
    }

    pub fn sum_norm(&self, v: &[C64], cfg: &SolverConfig) -> Result<Split> {
        self.split(v, 1.0, cfg)
    }

    /// Weak-duality bound: for any functional φ,
    /// `K(t, v) ≥ |⟨v, φ⟩| / max(‖φ‖₀*, ‖φ‖₁*/t)`. Candidates are smoothed
    /// subgradients at the computed split.
    fn split_lower_bound(&self, v: &[C64], t: f64, x0: &[C64], x1: &[C64], mu: f64) -> f64 {
        let (Ok(d0), Ok(d1)) = (self.space0.dual_space(), self.space1.dual_space()) else {
            return 0.0;
        };
        let mut best: f64 = 0.0;
        let mut cands = Vec::new();
        for (space, x, s) in [(&self.space0, x0, 1.0), (&self.space1, x1, t)] {
            let mut g = vec![C64::new(0.0, 0.0); self.dim];
            space.smooth_norm(x, mu.max(1e-300), Some((&mut g, s)));
            cands.push(g);
        }
        for g in cands {
            // Bilinear pairing: the functional is conj(g).
            let phi: Vec<C64> = g.iter().map(|z| z.conj()).collect();
            let pairing: C64 = v.iter().zip(&phi).map(|(a, b)| a * b).sum();
            let denom = d0.norm_unchecked(&phi).max(d1.norm_unchecked(&phi) / t);
            if denom > 0.0 {
                best = best.max(pairing.norm() / denom);
            }
        }
        best
    }
}

struct SplitObjective<'a> {
    couple: &'a Couple,
    v: &'a [C64],
    t: f64,
    scale: f64,
}

impl SmoothObjective for SplitObjective<'_> {
    fn dim(&self) -> usize {
        self.v.len()
    }

    fn eval_smooth(&self, z: &[C64], mu: f64, grad: Option<&mut [C64]>) -> f64 {
        let x1: Vec<C64> = self.v.iter().zip(z).map(|(a, b)| a - b).collect();
        match grad {
            None => {
                self.couple.space0.smooth_norm(z, mu, None)
                    + self.t * self.couple.space1.smooth_norm(&x1, mu / self.t, None)
            }
            Some(g) => {
                g.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
                let a = self.couple.space0.smooth_norm(z, mu, Some((&mut *g, 1.0)));
                let b = self
                    .couple
                    .space1
                    .smooth_norm(&x1, mu / self.t, Some((&mut *g, -self.t)));
                a + self.t * b
            }
        }
    }

    fn eval_exact(&self, z: &[C64]) -> f64 {
        let x1: Vec<C64> = self.v.iter().zip(z).map(|(a, b)| a - b).collect();
        self.couple.space0.norm_unchecked(z) + self.t * self.couple.space1.norm_unchecked(&x1)
    }

    fn scale(&self) -> f64 {
        self.scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    #[test]
    fn norm_examples() {
        let s = NormedSpace::weighted_lp(2.0, vec![1.0, 1.0]).unwrap();
        assert!((s.norm(&c(&[3.0, 4.0])).unwrap() - 5.0).abs() < 1e-12);
        let s = NormedSpace::weighted_lp(1.0, vec![2.0, 3.0]).unwrap();
        assert!((s.norm(&c(&[1.0, -1.0])).unwrap() - 5.0).abs() < 1e-12);
        let s = NormedSpace::weighted_lp(f64::INFINITY, vec![1.0, 2.0]).unwrap();
        assert!((s.norm(&c(&[3.0, 1.0])).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dual_norm_examples() {
        let s = NormedSpace::unweighted(2.0, 2).unwrap();
        assert!((s.dual_norm(&c(&[0.0, 1.0])).unwrap() - 1.0).abs() < 1e-12);
        let s = NormedSpace::weighted_lp(1.0, vec![2.0, 3.0]).unwrap();
        assert!((s.dual_norm(&c(&[2.0, 3.0])).unwrap() - 1.0).abs() < 1e-12);
        let s = NormedSpace::unweighted(f64::INFINITY, 2).unwrap();
        assert!((s.dual_norm(&c(&[1.0, 1.0])).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let s = NormedSpace::unweighted(2.0, 2).unwrap();
        assert_eq!(
            s.norm(&c(&[1.0])),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn rejects_bad_weights_and_exponents() {
        assert!(NormedSpace::weighted_lp(2.0, vec![1.0, 0.0]).is_err());
        assert!(NormedSpace::weighted_lp(0.5, vec![1.0]).is_err());
        assert!(NormedSpace::weighted_lp(2.0, vec![]).is_err());
    }

    #[test]
    fn json_roundtrip_with_infinite_exponent() {
        let s = NormedSpace::weighted_lp(f64::INFINITY, vec![1.0, 2.0]).unwrap();
        let j = serde_json::to_string(&s.norm_spec).unwrap();
        assert_eq!(j, r#"{"kind":"weighted_lp","p":"inf","weights":[1.0,2.0]}"#);
        let back: NormedSpace = serde_json::from_str(&format!(r#"{{"norm_spec":{j}}}"#)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn intersection_examples() {
        let l1 = NormedSpace::unweighted(1.0, 2).unwrap();
        let li = NormedSpace::unweighted(f64::INFINITY, 2).unwrap();
        let cp = Couple::new(l1.clone(), li).unwrap();
        assert_eq!(cp.intersection_norm(&c(&[1.0, 1.0])).unwrap(), 2.0);
        assert_eq!(cp.intersection_norm(&c(&[0.0, 0.0])).unwrap(), 0.0);
        let same = Couple::new(l1.clone(), l1).unwrap();
        assert_eq!(same.intersection_norm(&c(&[1.0, -2.0])).unwrap(), 3.0);
    }

    #[test]
    fn smoothed_norm_dominates_and_converges() {
        let s = NormedSpace::weighted_lp(1.5, vec![0.5, 2.0, 1.0]).unwrap();
        let v = vec![C64::new(1.0, -0.5), C64::new(0.0, 0.2), C64::new(-3.0, 0.0)];
        let exact = s.norm(&v).unwrap();
        for mu in [1e-1, 1e-3, 1e-6] {
            let sm = s.smooth_norm(&v, mu, None);
            assert!(sm >= exact - 1e-12 && sm <= exact + 3.0 * mu + 1e-12);
        }
    }

    #[test]
    fn smoothed_gradient_matches_finite_differences() {
        for p in [1.0, 2.0, 3.0, f64::INFINITY] {
            let s = NormedSpace::weighted_lp(p, vec![0.5, 2.0, 1.0]).unwrap();
            let v = vec![C64::new(1.0, -0.5), C64::new(0.3, 0.2), C64::new(-3.0, 0.1)];
            let mu = 0.1;
            let mut g = vec![C64::new(0.0, 0.0); 3];
            s.smooth_norm(&v, mu, Some((&mut g, 1.0)));
            let h = 1e-6;
            for i in 0..3 {
                for dir in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                    let mut a = v.clone();
                    let mut b = v.clone();
                    a[i] += dir * h;
                    b[i] -= dir * h;
                    let fd = (s.smooth_norm(&a, mu, None) - s.smooth_norm(&b, mu, None)) / (2.0 * h);
                    let an = (g[i].conj() * dir).re;
                    assert!((fd - an).abs() < 1e-6, "p={p} i={i} fd={fd} an={an}");
                }
            }
        }
    }
}
