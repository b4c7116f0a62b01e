//! Operator norms between weighted ℓᵖ spaces, their structure bounds, and
//! diagonal resolvent families.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::interp::{balanced_shift, SidedProblem};
use crate::error::{Error, Result};
use crate::seq::SparseSeq;
use crate::solver::SolverConfig;
use crate::spaces::{NormedSpace, PExp, C64};
use crate::structures::SeqStructSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorBound {
    pub value: f64,
    /// False when `value` is a multistart lower estimate.
    pub exact: bool,
    pub method: String,
}

fn check_shape(t: &DMatrix<C64>, space_in: &NormedSpace, space_out: &NormedSpace) -> Result<()> {
    if t.ncols() != space_in.dim || t.nrows() != space_out.dim {
        return Err(Error::DimensionMismatch {
            expected: space_out.dim * space_in.dim,
            got: t.nrows() * t.ncols(),
        });
    }
    Ok(())
}

fn col(t: &DMatrix<C64>, l: usize) -> Vec<C64> {
    t.column(l).iter().copied().collect()
}

/// `‖T‖_{X→Y}`. Exact for `2→2` (weighted largest singular value), for a
/// `1`-source (extreme points are the scaled unit vectors) and for an
/// `∞`-target (row-wise dual norms); otherwise a multistart ascent.
pub fn operator_norm(t: &DMatrix<C64>, space_in: &NormedSpace, space_out: &NormedSpace, cfg: &SolverConfig) -> Result<OperatorBound> {
    check_shape(t, space_in, space_out)?;
    if let (Some((pi, u)), Some((po, v))) = (space_in.as_weighted_lp(), space_out.as_weighted_lp()) {
        if pi == PExp::Finite(2.0) && po == PExp::Finite(2.0) {
            let m = DMatrix::from_fn(t.nrows(), t.ncols(), |i, l| t[(i, l)] * (v[i] / u[l]));
            let s = m.singular_values();
            return Ok(OperatorBound {
                value: s.iter().copied().fold(0.0, f64::max),
                exact: true,
                method: "weighted singular value".into(),
            });
        }
        if pi == PExp::Finite(1.0) {
            let value = (0..t.ncols())
                .map(|l| space_out.norm_unchecked(&col(t, l)) / u[l])
                .fold(0.0, f64::max);
            return Ok(OperatorBound {
                value,
                exact: true,
                method: "weighted column norms".into(),
            });
        }
        if po == PExp::Inf {
            let dual = space_in.dual_space()?;
            let value = (0..t.nrows())
                .map(|i| {
                    let row: Vec<C64> = t.row(i).iter().copied().collect();
                    v[i] * dual.norm_unchecked(&row)
                })
                .fold(0.0, f64::max);
            return Ok(OperatorBound {
                value,
                exact: true,
                method: "weighted row dual norms".into(),
            });
        }
    }
    Ok(OperatorBound {
        value: multistart_ratio(t, space_in, space_out, cfg),
        exact: false,
        method: "multistart ascent (lower estimate)".into(),
    })
}

/// Projected gradient ascent of `‖Tx‖/‖x‖` from unit vectors and random
/// complex starts.
fn multistart_ratio(t: &DMatrix<C64>, space_in: &NormedSpace, space_out: &NormedSpace, cfg: &SolverConfig) -> f64 {
    let n = t.ncols();
    let apply = |x: &[C64]| -> Vec<C64> { (t * DVector::from_column_slice(x)).as_slice().to_vec() };
    let ratio = |x: &[C64]| -> f64 {
        let d = space_in.norm_unchecked(x);
        if d == 0.0 {
            0.0
        } else {
            space_out.norm_unchecked(&apply(x)) / d
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts: Vec<Vec<C64>> = (0..n)
        .map(|l| {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[l] = C64::new(1.0, 0.0);
            e
        })
        .collect();
    for _ in 0..(8 + 4 * cfg.restarts) {
        starts.push((0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect());
    }
    let th = t.adjoint();
    let mut best: f64 = 0.0;
    for mut x in starts {
        let mut r = ratio(&x);
        let mut step = 0.1;
        for _ in 0..300 {
            let nx = space_in.norm_unchecked(&x);
            let y = apply(&x);
            let ny = space_out.norm_unchecked(&y);
            if nx == 0.0 || ny == 0.0 {
                break;
            }
            let mu = 1e-9 * ny.max(nx);
            let mut go = vec![C64::new(0.0, 0.0); y.len()];
            space_out.smooth_norm(&y, mu, Some((&mut go, 1.0)));
            let mut gi = vec![C64::new(0.0, 0.0); n];
            space_in.smooth_norm(&x, mu, Some((&mut gi, 1.0)));
            // g = Tᴴ∂‖y‖ / ‖x‖ - ‖y‖ ∂‖x‖ / ‖x‖².
            let back = &th * DVector::from_column_slice(&go);
            let g: Vec<C64> = (0..n).map(|l| back[l] / nx - gi[l] * (ny / (nx * nx))).collect();
            let gn = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if gn == 0.0 {
                break;
            }
            let mut improved = false;
            while step > 1e-12 {
                let cand: Vec<C64> = x.iter().zip(&g).map(|(a, b)| a + b * (step * nx / gn)).collect();
                let rc = ratio(&cand);
                if rc > r {
                    x = cand;
                    r = rc;
                    step *= 1.5;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.max(r);
    }
    best
}

/// `‖(…, T, T, T, …)‖_{𝔖→𝔖}` on `[X, 𝔖] → [Y, 𝔖]`: `‖T‖_{X→Y}` when `T`
/// commutes with the structure (ℓᵖ, Fourier, Rademacher, Gaussian act through
/// linear combinations of blocks), and `‖|T|‖_{X→Y}` for lattice structures.
pub fn operator_struct_bound(
    t: &DMatrix<C64>,
    structure: &SeqStructSpec,
    space_in: &NormedSpace,
    space_out: &NormedSpace,
    cfg: &SolverConfig,
) -> Result<OperatorBound> {
    structure.validate()?;
    match structure {
        SeqStructSpec::LatticeLq { .. } => {
            let abs = t.map(|z| C64::new(z.norm(), 0.0));
            let mut b = operator_norm(&abs, space_in, space_out, cfg)?;
            b.method = format!("modulus matrix, {}", b.method);
            Ok(b)
        }
        _ => operator_norm(t, space_in, space_out, cfg),
    }
}

/// Blockwise image `(T x_k)_k`.
pub fn apply_blockwise(t: &DMatrix<C64>, s: &SparseSeq) -> Result<SparseSeq> {
    if t.ncols() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.ncols(),
            got: s.dim(),
        });
    }
    Ok(s.map_blocks(t.nrows(), |_, b| (t * DVector::from_column_slice(b)).as_slice().to_vec()))
}

/// Candidate decompositions of `Tx` from a decomposition of `x`: the image,
/// shifted by `⌊log_b(M₀/M₁)⌋`, `⌈log_b(M₀/M₁)⌉`, and by the shift that
/// balances its own side norms. One of them has objective at most
/// `b^θ M₀^{1-θ} M₁^θ` times that of `s`, and exactly `M₀^{1-θ} M₁^θ` times
/// when `M₀/M₁` is a power of `b`.
pub fn operator_hints(target: &SidedProblem, t: &DMatrix<C64>, s: &SparseSeq, m0: f64, m1: f64) -> Result<Vec<SparseSeq>> {
    let img = apply_blockwise(t, s)?;
    let mut out = Vec::new();
    if m0 > 0.0 && m1 > 0.0 {
        let r = (m0 / m1).ln() / target.base.ln();
        let near = r.round();
        let snapped = if (r - near).abs() < 1e-9 { Some(near as i64) } else { None };
        for m in [Some(r.floor() as i64), Some(r.ceil() as i64), snapped].into_iter().flatten() {
            out.push(img.translate(m));
        }
    }
    out.push(balanced_shift(target, &img)?);
    Ok(out)
}

/// `sup_{|k| ≤ range} maxᵢ |dᵢ(k)|`: the structure bound of a diagonal
/// family on a weighted ℓᵖ (or max-of-ℓᵖ) space for ℓᵖ and lattice
/// structures, where diagonal operators act as pointwise multipliers.
pub fn diagonal_family_bound(structure: &SeqStructSpec, range: i64, diag: impl Fn(i64) -> Vec<f64>) -> Result<f64> {
    match structure {
        SeqStructSpec::Lp { .. } | SeqStructSpec::LatticeLq { .. } => Ok((-range..=range)
            .flat_map(|k| diag(k).into_iter().map(f64::abs))
            .fold(0.0, f64::max)),
        other => Err(Error::Unsupported(format!(
            "diagonal family bounds need lp or lattice structures, got {}",
            other.label()
        ))),
    }
}

/// `S_k = A(eᵏ + A)^{-1}` and `T_k = eᵏ(eᵏ + A)^{-1}` for `A = diag(a)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventFamily {
    pub a: Vec<f64>,
}

/// Index range used for suprema over `k`.
pub const RESOLVENT_RANGE: i64 = 20;

pub fn resolvent_family(a: Vec<f64>) -> Result<ResolventFamily> {
    if a.is_empty() || a.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("resolvent family needs a positive diagonal".into()));
    }
    Ok(ResolventFamily { a })
}

impl ResolventFamily {
    /// Diagonals of `(S_k, T_k)`. The smaller entry is computed directly and
    /// the other as its complement, so `S_k + T_k = I` holds exactly.
    pub fn pair(&self, k: i64) -> (Vec<f64>, Vec<f64>) {
        let e = (k as f64).exp();
        self.a
            .iter()
            .map(|&a| {
                if a <= e {
                    let s = a / (e + a);
                    (s, 1.0 - s)
                } else {
                    let t = e / (e + a);
                    (1.0 - t, t)
                }
            })
            .unzip()
    }

    pub fn s_k(&self, k: i64) -> Vec<f64> {
        self.pair(k).0
    }

    pub fn t_k(&self, k: i64) -> Vec<f64> {
        self.pair(k).1
    }

    /// Structure bound of `(T_k)_k` over `|k| ≤ RESOLVENT_RANGE`.
    pub fn struct_bound(&self, structure: &SeqStructSpec, space: &NormedSpace) -> Result<f64> {
        if space.dim != self.a.len() {
            return Err(Error::DimensionMismatch {
                expected: self.a.len(),
                got: space.dim,
            });
        }
        diagonal_family_bound(structure, RESOLVENT_RANGE, |k| self.t_k(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rc(rng: &mut ChaCha8Rng) -> C64 {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_has_norm_one() {
        let x = NormedSpace::weighted_lp(1.5, vec![1.0, 2.0, 0.3]).unwrap();
        let b = operator_norm(&DMatrix::identity(3, 3), &x, &x, &SolverConfig::default()).unwrap();
        assert!((b.value - 1.0).abs() < 1e-6);
        let y = NormedSpace::weighted_lp(2.0, vec![1.0, 2.0, 0.3]).unwrap();
        assert!((operator_norm(&DMatrix::identity(3, 3), &y, &y, &SolverConfig::default()).unwrap().value - 1.0).abs() < 1e-12);
    }

    /// Diagonal `d` from ℓ²(u) to ℓ²(v) has norm `maxᵢ vᵢ|dᵢ|/uᵢ`; sampled
    /// points on the sphere never exceed it and the maximizing unit vector
    /// attains it.
    #[test]
    fn diagonal_norm_against_sphere_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = vec![0.5, 2.0, 1.3];
        let v = vec![1.5, 0.2, 3.0];
        let d: Vec<C64> = (0..3).map(|_| rc(&mut rng)).collect();
        let t = DMatrix::from_diagonal(&DVector::from_vec(d.clone()));
        let xi = NormedSpace::weighted_lp(2.0, u.clone()).unwrap();
        let yo = NormedSpace::weighted_lp(2.0, v.clone()).unwrap();
        let want = (0..3).map(|i| v[i] * d[i].norm() / u[i]).fold(0.0, f64::max);
        let got = operator_norm(&t, &xi, &yo, &SolverConfig::default()).unwrap().value;
        assert!((got - want).abs() < 1e-12 * want);
        let mut sampled: f64 = 0.0;
        for _ in 0..2000 {
            let x: Vec<C64> = (0..3).map(|_| rc(&mut rng)).collect();
            let y: Vec<C64> = (0..3).map(|i| d[i] * x[i]).collect();
            sampled = sampled.max(yo.norm(&y).unwrap() / xi.norm(&x).unwrap());
        }
        assert!(sampled <= want * (1.0 + 1e-12) && sampled > 0.5 * want);
    }

    /// Unweighted 2→2 norm equals the square root of the top eigenvalue of TᴴT.
    #[test]
    fn spectral_norm_against_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let t = DMatrix::from_fn(4, 3, |_, _| rc(&mut rng));
        let gram = t.adjoint() * &t;
        let re = DMatrix::from_fn(6, 6, |i, j| {
            let z = gram[(i % 3, j % 3)];
            match (i < 3, j < 3) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        let top = re.symmetric_eigenvalues().iter().copied().fold(f64::MIN, f64::max);
        let xi = NormedSpace::unweighted(2.0, 3).unwrap();
        let yo = NormedSpace::unweighted(2.0, 4).unwrap();
        let got = operator_norm(&t, &xi, &yo, &SolverConfig::default()).unwrap();
        assert!(got.exact);
        assert!((got.value - top.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn multistart_is_close_to_exact_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let t = DMatrix::from_fn(3, 3, |_, _| rc(&mut rng));
        let x1 = NormedSpace::weighted_lp(1.0, vec![1.0, 0.5, 2.0]).unwrap();
        let y = NormedSpace::weighted_lp(3.0, vec![0.7, 1.0, 1.4]).unwrap();
        let exact = operator_norm(&t, &x1, &y, &SolverConfig::default()).unwrap().value;
        let est = multistart_ratio(&t, &x1, &y, &SolverConfig::default());
        assert!(est <= exact * (1.0 + 1e-9) && est > 0.99 * exact, "{est} {exact}");
    }

    #[test]
    fn lattice_bound_uses_modulus() {
        let t = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        let x = NormedSpace::unweighted(2.0, 2).unwrap();
        let cfg = SolverConfig::default();
        let plain = operator_struct_bound(&t, &SeqStructSpec::lp(2.0), &x, &x, &cfg).unwrap().value;
        let lat = operator_struct_bound(&t, &SeqStructSpec::lattice(2.0), &x, &x, &cfg).unwrap().value;
        assert!((plain - 2f64.sqrt()).abs() < 1e-12);
        assert!((lat - 2.0).abs() < 1e-12);
    }

    #[test]
    fn resolvent_identities() {
        let f = resolvent_family(vec![1.0, 1.0]).unwrap();
        for k in -20..=20 {
            let e = (k as f64).exp();
            let (s, t) = (f.s_k(k), f.t_k(k));
            assert!(t.iter().all(|&v| (v - e / (e + 1.0)).abs() <= f64::EPSILON));
            assert!(s.iter().zip(&t).all(|(a, b)| a + b == 1.0));
        }
        let g = resolvent_family(vec![0.3, 7.0]).unwrap();
        let x = NormedSpace::weighted_lp(2.0, vec![1.0, 2.0]).unwrap();
        let b = g.struct_bound(&SeqStructSpec::lp(2.0), &x).unwrap();
        let direct = (-RESOLVENT_RANGE..=RESOLVENT_RANGE)
            .flat_map(|k| g.t_k(k))
            .fold(0.0, f64::max);
        assert_eq!(b, direct);
        assert!(b < 1.0 && b > 1.0 - 1e-8);
        assert!(resolvent_family(vec![1.0, 0.0]).is_err());
    }
}
