//! Analytic view of decompositions and Laurent operator families.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seq::SparseSeq;
use crate::spaces::C64;

/// `f(z) = Σ_k b^{k(z-θ)} x_k` for a finitely supported decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticView {
    pub seq: SparseSeq,
    pub theta: f64,
    pub base: f64,
}

pub fn complex_view(seq: &SparseSeq, theta: f64, base: f64) -> AnalyticView {
    AnalyticView {
        seq: seq.clone(),
        theta,
        base,
    }
}

impl AnalyticView {
    pub fn eval_at(&self, z: C64) -> Vec<C64> {
        let lb = self.base.ln();
        let mut out = vec![C64::new(0.0, 0.0); self.seq.dim()];
        for (k, b) in self.seq.iter() {
            let c = ((z - self.theta) * (k as f64 * lb)).exp();
            for (o, v) in out.iter_mut().zip(b) {
                *o += c * v;
            }
        }
        out
    }

    /// Fourier coefficients of `t ↦ f(s + it·/ln b)`: the sequence `(b^{k(s-θ)} x_k)`.
    /// With `s = j` these are the boundary sequences; `s = θ` returns the
    /// decomposition itself.
    pub fn coeffs_on_line(&self, s: f64) -> SparseSeq {
        let (b, th) = (self.base, self.theta);
        if s == th {
            return self.seq.clone();
        }
        self.seq.scale_by(|k| b.powf(k as f64 * (s - th)))
    }

    pub fn boundary_coeffs(&self, j: usize) -> SparseSeq {
        self.coeffs_on_line(j as f64)
    }
}

/// `T(z) = Σ_m e^{mz} A_m` with finitely many nonzero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentOperatorFamily {
    pub dim_in: usize,
    pub dim_out: usize,
    pub coeffs: BTreeMap<i64, DMatrix<C64>>,
}

#[derive(Serialize, Deserialize)]
struct FamilyWire {
    dim_in: usize,
    dim_out: usize,
    coeffs: Vec<(i64, Vec<Vec<C64>>)>,
}

impl LaurentOperatorFamily {
    pub fn new(dim_in: usize, dim_out: usize, coeffs: BTreeMap<i64, DMatrix<C64>>) -> Result<Self> {
        for a in coeffs.values() {
            if a.nrows() != dim_out || a.ncols() != dim_in {
                return Err(Error::DimensionMismatch {
                    expected: dim_out * dim_in,
                    got: a.nrows() * a.ncols(),
                });
            }
        }
        Ok(LaurentOperatorFamily { dim_in, dim_out, coeffs })
    }

    pub fn eval(&self, z: C64) -> DMatrix<C64> {
        let mut t = DMatrix::zeros(self.dim_out, self.dim_in);
        for (m, a) in &self.coeffs {
            t += a * (z * *m as f64).exp();
        }
        t
    }

    pub fn apply(&self, z: C64, x: &[C64]) -> Vec<C64> {
        (self.eval(z) * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec()
    }
}

impl Serialize for LaurentOperatorFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FamilyWire {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            coeffs: self
                .coeffs
                .iter()
                .map(|(m, a)| (*m, a.row_iter().map(|r| r.iter().copied().collect()).collect()))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentOperatorFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = FamilyWire::deserialize(d)?;
        let mut coeffs = BTreeMap::new();
        for (m, rows) in w.coeffs {
            if rows.len() != w.dim_out || rows.iter().any(|r| r.len() != w.dim_in) {
                return Err(serde::de::Error::custom("coefficient matrix has the wrong shape"));
            }
            coeffs.insert(m, DMatrix::from_fn(w.dim_out, w.dim_in, |i, j| rows[i][j]));
        }
        LaurentOperatorFamily::new(w.dim_in, w.dim_out, coeffs).map_err(serde::de::Error::custom)
    }
}

fn convolve(fam: &LaurentOperatorFamily, s: &SparseSeq, weight: impl Fn(i64) -> f64) -> Result<SparseSeq> {
    if s.dim() != fam.dim_in {
        return Err(Error::DimensionMismatch {
            expected: fam.dim_in,
            got: s.dim(),
        });
    }
    let mut out = SparseSeq::zero(fam.dim_out);
    for (m, a) in &fam.coeffs {
        let c = C64::new(weight(*m), 0.0);
        for (k, b) in s.iter() {
            let y = a * nalgebra::DVector::from_column_slice(b) * c;
            out.add_at(k + m, y.as_slice());
        }
    }
    Ok(out)
}

/// Fourier coefficients of `t ↦ Σ_k e^{ikt} T(j+it) x_k`: the convolution
/// with block `Σ_m e^{mj} A_m x_{k-m}` at `k`.
pub fn stein_boundary_coeffs(fam: &LaurentOperatorFamily, j: usize, s: &SparseSeq) -> Result<SparseSeq> {
    convolve(fam, s, |m| (m as f64 * j as f64).exp())
}

/// Decomposition of `T(θ)x` induced by a decomposition of `x`: block
/// `Σ_{k+m=ℓ} e^{mθ} A_m x_k` at `ℓ`. Its boundary sequences (base `e`) are
/// exactly [`stein_boundary_coeffs`] applied to the boundary sequences of `s`.
pub fn stein_transport(fam: &LaurentOperatorFamily, theta: f64, s: &SparseSeq) -> Result<SparseSeq> {
    convolve(fam, s, |m| (m as f64 * theta).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rc(rng: &mut ChaCha8Rng) -> C64 {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn random_family(rng: &mut ChaCha8Rng, n: usize) -> LaurentOperatorFamily {
        let mut coeffs = BTreeMap::new();
        for m in -1..=2 {
            coeffs.insert(m, DMatrix::from_fn(n, n, |_, _| rc(rng)));
        }
        LaurentOperatorFamily::new(n, n, coeffs).unwrap()
    }

    fn random_seq(rng: &mut ChaCha8Rng, n: usize) -> SparseSeq {
        let blocks: Vec<Vec<C64>> = (0..4).map(|_| (0..n).map(|_| rc(rng)).collect()).collect();
        SparseSeq::from_blocks(n, -2, &blocks).unwrap()
    }

    #[test]
    fn delta_view_is_constant() {
        let x = vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0)];
        let v = complex_view(&SparseSeq::delta(0, x.clone()), 0.3, 2.0);
        for z in [C64::new(0.0, 0.0), C64::new(0.7, 3.1), C64::new(1.0, -2.0)] {
            assert_eq!(v.eval_at(z), x);
        }
    }

    #[test]
    fn theta_value_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_seq(&mut rng, 3);
        let v = complex_view(&s, 0.4, 3.0);
        let at = v.eval_at(C64::new(0.4, 0.0));
        for (a, b) in at.iter().zip(s.sum()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(v.coeffs_on_line(0.4), s);
        let b1 = v.boundary_coeffs(1);
        assert!((b1.get(1).unwrap()[0] - s.get(1).unwrap()[0] * 3f64.powf(0.6)).norm() < 1e-12);
    }

    #[test]
    fn identity_family_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_seq(&mut rng, 2);
        let fam = LaurentOperatorFamily::new(2, 2, BTreeMap::from([(0, DMatrix::identity(2, 2))])).unwrap();
        assert_eq!(stein_boundary_coeffs(&fam, 1, &s).unwrap(), s);
    }

    #[test]
    fn single_term_shifts_and_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_seq(&mut rng, 2);
        let a = DMatrix::from_fn(2, 2, |_, _| rc(&mut rng));
        let fam = LaurentOperatorFamily::new(2, 2, BTreeMap::from([(1, a.clone())])).unwrap();
        let out = stein_boundary_coeffs(&fam, 1, &s).unwrap();
        for (k, b) in s.iter() {
            let want = &a * nalgebra::DVector::from_column_slice(b) * C64::new(1f64.exp(), 0.0);
            let got = out.get(k + 1).unwrap();
            for i in 0..2 {
                assert!((got[i] - want[i]).norm() < 1e-12);
            }
        }
    }

    /// Trapezoid rule on the torus is exact for trigonometric polynomials of
    /// degree below the node count.
    #[test]
    fn matches_torus_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let fam = random_family(&mut rng, 3);
            let s = random_seq(&mut rng, 3);
            for j in 0..2 {
                let out = stein_boundary_coeffs(&fam, j, &s).unwrap();
                let nodes = 64;
                for l in -6..=6i64 {
                    let mut acc = [C64::new(0.0, 0.0); 3];
                    for q in 0..nodes {
                        let t = 2.0 * std::f64::consts::PI * q as f64 / nodes as f64;
                        let mut g = [C64::new(0.0, 0.0); 3];
                        for (k, b) in s.iter() {
                            let y = fam.apply(C64::new(j as f64, t), b);
                            let e = C64::new(0.0, k as f64 * t).exp();
                            for i in 0..3 {
                                g[i] += e * y[i];
                            }
                        }
                        let e = C64::new(0.0, -(l as f64) * t).exp();
                        for i in 0..3 {
                            acc[i] += g[i] * e / nodes as f64;
                        }
                    }
                    let zero = [C64::new(0.0, 0.0); 3];
                    let got = out.get(l).unwrap_or(&zero);
                    for i in 0..3 {
                        assert!((got[i] - acc[i]).norm() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn transport_boundaries_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let fam = random_family(&mut rng, 2);
        let s = random_seq(&mut rng, 2);
        let theta = 0.35;
        let y = stein_transport(&fam, theta, &s).unwrap();
        let ysum = y.sum();
        let direct = fam.apply(C64::new(theta, 0.0), &s.sum());
        for i in 0..2 {
            assert!((ysum[i] - direct[i]).norm() < 1e-12);
        }
        for j in 0..2 {
            let lhs = complex_view(&y, theta, std::f64::consts::E).boundary_coeffs(j);
            let rhs = stein_boundary_coeffs(&fam, j, &complex_view(&s, theta, std::f64::consts::E).boundary_coeffs(j)).unwrap();
            let d = lhs.sub(&rhs).max_abs();
            assert!(d < 1e-12, "{d}");
        }
    }

    #[test]
    fn family_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let fam = random_family(&mut rng, 2);
        let j = serde_json::to_string(&fam).unwrap();
        let back: LaurentOperatorFamily = serde_json::from_str(&j).unwrap();
        assert_eq!(back, fam);
    }
}
