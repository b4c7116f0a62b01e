//! Suites that move norms across couples: operators, analytic families,
//! duality, function-space identities, intersections.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::gen::{self, pick, EXPONENTS, SMALL_DIMS};
use super::{Case, Suite};
use crate::engine::constants::{bfs_constant, mean_lower_constant, mean_upper_constant, operator_constant, stein_constant};
use crate::engine::{
    balanced_shift, calderon_lozanovskii_norm, complex_view, diagonal_family_bound, dual_norm_estimate, interp_norm,
    interp_norm_with, level_set_hint, operator_hints, operator_struct_bound, resolvent_family, stein_boundary_coeffs,
    stein_transport, InterpSolution, LaurentOperatorFamily, RESOLVENT_RANGE,
};
use crate::error::{Error, Result};
use crate::seq::SparseSeq;
use crate::spaces::{Couple, NormedSpace, C64};
use crate::structures::SeqStructSpec;

const SOLVER_SLACK: f64 = 1e-5;
const BUILT: f64 = 1e-9;
/// Relative slack for the operator bound with the `b^θ` factor.
const OPERATOR_SLACK: f64 = 1e-4;
/// Calderón's inequality compares two solver outputs.
const CALDERON_SLACK: f64 = 1e-6;
const QUADRATURE_TOL: f64 = 1e-8;
/// Random inputs used to estimate each boundary bound `M_j`.
const STEIN_PROBES: usize = 6;

pub(super) fn suites() -> Vec<Suite> {
    vec![
        Suite {
            name: "duality-lp",
            default_cases: 30,
            constants: &[(
                "two-sided",
                "dual estimate / dual-couple interp ∈ [1/C, C], C = 2(b^θ/(b^θ-1) + b^{1-θ}/(b^{1-θ}-1))·2(1 + b^θ); slack 1e-5",
            )],
            run: duality,
        },
        Suite {
            name: "bfs-identity",
            default_cases: 50,
            constants: &[
                ("calderon", "CL ≤ interp[Fourier-C] (1 + 1e-6 + 2·solver tol)"),
                ("domination", "interp[Fourier-C] ≤ interp[lattice-ℓ¹] (1 + 1e-9)"),
                ("level-sets", "interp[lattice-ℓ¹] ≤ (b^θ + b^{-θ} + b^θ/(b^θ-1))·CL (1 + 1e-9)"),
            ],
            run: bfs,
        },
        Suite {
            name: "operator",
            default_cases: 100,
            constants: &[
                ("general", "‖Tx‖_θ ≤ b^θ M₀^{1-θ} M₁^θ ‖x‖_θ (1 + 1e-4)"),
                ("snapped", "‖Tx‖_θ ≤ M₀^{1-θ} M₁^θ ‖x‖_θ (1 + 1e-9) when M₀/M₁ is a power of b"),
            ],
            run: operator,
        },
        Suite {
            name: "stein",
            default_cases: 50,
            constants: &[
                ("bound", "‖T(θ)x‖_θ ≤ e^θ M₀^{1-θ} M₁^θ ‖x‖_θ (1 + 1e-9), base e"),
                ("quadrature", "boundary convolution = torus quadrature to 1e-8"),
            ],
            run: stein,
        },
        Suite {
            name: "intersections",
            default_cases: 50,
            constants: &[
                ("hypotheses", "σ, σ', τ, τ', υ ≤ 1 (sup over |k| ≤ 20)"),
                ("lower", "max(‖v‖_{(X,Y)}, ‖v‖_{(X,Z)}) ≤ ‖v‖_{(X,Y∩Z)} (1 + 1e-9)"),
                (
                    "upper",
                    "‖v‖_{(X,Y∩Z)} ≤ 2(1+e^θ)·K·2(e^θ/(e^θ-1) + e^{1-θ}/(e^{1-θ}-1))·max(...), K = max(σ,σ') + 1 + σ + max(max(τ,τ') + τ', υ); slack 1e-5",
                ),
            ],
            run: intersections,
        },
    ]
}

fn seq_of(sol: &InterpSolution) -> Result<SparseSeq> {
    sol.seq()
        .cloned()
        .ok_or_else(|| Error::InvalidInput("expected a decomposition certificate".into()))
}

fn duality(case: &mut Case) -> Result<()> {
    let rng = &mut case.rng;
    let n = pick(rng, &SMALL_DIMS);
    let p = pick(rng, &[1.5, 2.0, 4.0]);
    let couple = gen::lp_couple(rng, n, p, p)?;
    let (theta, base) = (gen::theta(rng), pick(rng, &gen::BASES));
    let xs = gen::cvec(rng, n);
    let st = SeqStructSpec::lp(p);
    let prob = gen::problem(couple.clone(), st.clone(), st, theta, base);
    case.describe(&(&prob, &xs));
    let est = dual_norm_estimate(&prob.sided(), &xs)?.value;
    let dual_couple = Couple::new(couple.space0.dual_space()?, couple.space1.dual_space()?)?;
    let q = p / (p - 1.0);
    let dual = gen::problem(dual_couple, SeqStructSpec::lp(q), SeqStructSpec::lp(q), theta, base);
    let d = interp_norm(&dual, &xs)?;
    case.drift(&dual.sided(), &xs, &d);
    let c = mean_upper_constant(theta, base) * mean_lower_constant(theta, base);
    case.note("ratio", est / d.value);
    case.le_rel("estimate/dual", est, c * d.value, SOLVER_SLACK);
    case.le_rel("dual/estimate", d.value, c * est, SOLVER_SLACK);
    Ok(())
}

fn bfs(case: &mut Case) -> Result<()> {
    let rng = &mut case.rng;
    let n = pick(rng, &[1, 2]);
    let ps = [1.0, 2.0, 4.0, f64::INFINITY];
    let (p0, p1) = (pick(rng, &ps), pick(rng, &ps));
    let couple = gen::lp_couple(rng, n, p0, p1)?;
    let (theta, base) = (gen::theta(rng), pick(rng, &[2.0, E]));
    let x = gen::cvec(rng, n);
    let lat = gen::problem(couple.clone(), SeqStructSpec::lattice(1.0), SeqStructSpec::lattice(1.0), theta, base);
    case.describe(&(&lat, &x));
    let fc = SeqStructSpec::fourier(f64::INFINITY);
    let mut fprob = lat.with_structs(fc.clone(), fc);
    fprob.window = gen::WINDOW - 1;
    let cl = calderon_lozanovskii_norm(&couple, theta, &x, &lat.solver)?;
    let hint = level_set_hint(&lat.sided(), &x, &cl)?;
    let l = interp_norm_with(&lat.sided(), &x, &[hint])?;
    case.drift(&lat.sided(), &x, &l);
    case.le_rel("level-sets", l.value, bfs_constant(theta, base) * cl.value, BUILT);
    let f = interp_norm(&fprob, &x)?;
    let fv = f.value.min(fprob.sided().objective(&seq_of(&l)?)?);
    case.le_rel("domination", fv, l.value, BUILT);
    case.le_rel("calderon", cl.value, fv, CALDERON_SLACK + 2.0 * lat.solver.rel_tol);
    Ok(())
}

fn random_matrix(rng: &mut rand_chacha::ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn apply(t: &DMatrix<C64>, x: &[C64]) -> Vec<C64> {
    (t * DVector::from_column_slice(x)).as_slice().to_vec()
}

fn operator(case: &mut Case) -> Result<()> {
    let snapped = case.index % 2 == 1;
    let rng = &mut case.rng;
    let (n, m) = (pick(rng, &SMALL_DIMS), pick(rng, &SMALL_DIMS));
    let structures = [
        SeqStructSpec::lp(1.0),
        SeqStructSpec::lp(2.0),
        SeqStructSpec::lp(f64::INFINITY),
        SeqStructSpec::lattice(2.0),
        SeqStructSpec::lattice(1.0),
        SeqStructSpec::fourier(2.0),
    ];
    let s0 = structures[rng.random_range(0..structures.len())].clone();
    let s1 = structures[rng.random_range(0..structures.len())].clone();
    let (theta, base) = (gen::theta(rng), pick(rng, &gen::BASES));
    let src = gen::lp_couple(rng, n, 2.0, 2.0)?;
    let (v0, mut v1) = (gen::weights(rng, m), gen::weights(rng, m));
    let t = random_matrix(rng, m, n);
    let x = gen::cvec(rng, n);
    let cfg = gen::solver();
    let y0 = NormedSpace::weighted_lp(2.0, v0)?;
    let m0 = operator_struct_bound(&t, &s0, &src.space0, &y0, &cfg)?.value;
    let mut m1 = operator_struct_bound(&t, &s1, &src.space1, &NormedSpace::weighted_lp(2.0, v1.clone())?, &cfg)?.value;
    if snapped {
        // Rescale Y₁ so that M₀/M₁ becomes a power of b.
        let k = ((m0 / m1).ln() / base.ln()).round();
        let c = m0 / (m1 * base.powf(k));
        v1.iter_mut().for_each(|w| *w *= c);
        m1 = operator_struct_bound(&t, &s1, &src.space1, &NormedSpace::weighted_lp(2.0, v1.clone())?, &cfg)?.value;
    }
    let dst = Couple::new(y0, NormedSpace::weighted_lp(2.0, v1)?)?;
    let sp = gen::problem(src, s0.clone(), s1.clone(), theta, base);
    let tp = gen::problem(dst, s0, s1, theta, base);
    case.describe(&(&sp, &tp, t.as_slice(), &x));
    let ix = interp_norm(&sp, &x)?;
    case.drift(&sp.sided(), &x, &ix);
    let tx = apply(&t, &x);
    let hints = operator_hints(&tp.sided(), &t, &seq_of(&ix)?, m0, m1)?;
    let ty = interp_norm_with(&tp.sided(), &tx, &hints)?;
    if snapped {
        let c = m0.powf(1.0 - theta) * m1.powf(theta);
        case.le_rel("snapped", ty.value, c * ix.value, BUILT);
    } else {
        case.le_rel("general", ty.value, operator_constant(theta, base, m0, m1) * ix.value, OPERATOR_SLACK);
    }
    Ok(())
}

fn random_family(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Result<LaurentOperatorFamily> {
    let lo = pick(rng, &[-1i64, 0]);
    let mut coeffs = BTreeMap::new();
    for m in lo..=1 {
        coeffs.insert(m, random_matrix(rng, n, n).scale(0.5));
    }
    LaurentOperatorFamily::new(n, n, coeffs)
}

/// Largest gap between the boundary convolution and the trapezoid rule on
/// the torus, relative to the largest coefficient.
fn quadrature_gap(fam: &LaurentOperatorFamily, j: usize, s: &SparseSeq) -> Result<f64> {
    let out = stein_boundary_coeffs(fam, j, s)?;
    let (Some((lo, hi)), Some((olo, ohi))) = (s.bounds(), out.bounds()) else {
        return Ok(0.0);
    };
    let nodes = 4 * ((ohi - olo + 1) as usize + (hi - lo + 1) as usize) + 16;
    let n = s.dim();
    let scale = out.max_abs().max(1e-300);
    let mut gap: f64 = 0.0;
    let samples: Vec<Vec<C64>> = (0..nodes)
        .map(|q| {
            let t = 2.0 * PI * q as f64 / nodes as f64;
            let mut g = vec![C64::new(0.0, 0.0); n];
            for (k, b) in s.iter() {
                let y = fam.apply(C64::new(j as f64, t), b);
                let e = C64::from_polar(1.0, k as f64 * t);
                for i in 0..n {
                    g[i] += e * y[i];
                }
            }
            g
        })
        .collect();
    for l in olo..=ohi {
        let mut acc = vec![C64::new(0.0, 0.0); n];
        for (q, g) in samples.iter().enumerate() {
            let e = C64::from_polar(1.0, -(l as f64) * 2.0 * PI * q as f64 / nodes as f64);
            for i in 0..n {
                acc[i] += g[i] * e / nodes as f64;
            }
        }
        let zero = vec![C64::new(0.0, 0.0); n];
        gap = gap.max(gen::max_gap(&acc, out.get(l).unwrap_or(&zero)) / scale);
    }
    Ok(gap)
}

fn stein(case: &mut Case) -> Result<()> {
    let rng = &mut case.rng;
    let n = pick(rng, &[1, 2, 3]);
    let (p0, p1) = (pick(rng, &EXPONENTS), pick(rng, &EXPONENTS));
    let couple = gen::lp_couple(rng, n, p0, p1)?;
    let mut st = || {
        if rng.random_bool(0.75) {
            SeqStructSpec::lp(pick(rng, &EXPONENTS))
        } else {
            SeqStructSpec::fourier(2.0)
        }
    };
    let (s0, s1) = (st(), st());
    let theta = gen::theta(rng);
    let fam = random_family(rng, n)?;
    let x = gen::cvec(rng, n);
    let probes: Vec<SparseSeq> = (0..STEIN_PROBES).map(|_| gen::seq(rng, n, 2)).collect();
    let prob = gen::problem(couple, s0, s1, theta, E);
    case.describe(&(&prob, &fam, &x, &probes));
    let sided = prob.sided();
    let ix = interp_norm(&prob, &x)?;
    case.drift(&sided, &x, &ix);
    let s = seq_of(&ix)?;
    let view = complex_view(&s, theta, E);
    let mut bounds = [0.0f64; 2];
    for j in 0..2 {
        let term = &sided.sides[j][0];
        for r in probes.iter().chain(std::iter::once(&view.boundary_coeffs(j))) {
            let den = term.structure.norm(&term.space, r)?.value;
            if den > 0.0 {
                let num = term.structure.norm(&term.space, &stein_boundary_coeffs(&fam, j, r)?)?.value;
                bounds[j] = bounds[j].max(num / den);
            }
        }
        case.le(format!("quadrature/j={j}"), quadrature_gap(&fam, j, &probes[0])?, 0.0, QUADRATURE_TOL);
    }
    let [m0, m1] = bounds;
    let tx = fam.apply(C64::new(theta, 0.0), &x);
    let y = stein_transport(&fam, theta, &s)?;
    let mut hints = vec![balanced_shift(&sided, &y)?];
    if m0 > 0.0 && m1 > 0.0 {
        let r = (m0 / m1).ln();
        hints.push(y.translate(r.floor() as i64));
        hints.push(y.translate(r.ceil() as i64));
    }
    let ty = interp_norm_with(&sided, &tx, &hints)?;
    let bound = stein_constant(theta, E) * m0.powf(1.0 - theta) * m1.powf(theta) * ix.value;
    case.note("ratio", ty.value / bound);
    case.le_rel("bound", ty.value, bound, BUILT);
    Ok(())
}

fn intersections(case: &mut Case) -> Result<()> {
    let rng = &mut case.rng;
    let n = pick(rng, &SMALL_DIMS);
    let p = pick(rng, &EXPONENTS);
    let (wx, a, wz) = (gen::weights(rng, n), gen::weights(rng, n), gen::weights(rng, n));
    let st = SeqStructSpec::lp(pick(rng, &EXPONENTS));
    let theta = gen::theta(rng);
    let v = gen::cvec(rng, n);
    let x = NormedSpace::weighted_lp(p, wx.clone())?;
    let y = NormedSpace::weighted_lp(p, wx.iter().zip(&a).map(|(w, ai)| w * ai).collect())?;
    let z = NormedSpace::weighted_lp(p, wz)?;
    case.describe(&(&x, &y, &z, &st, theta, &v));
    // Reflected resolvents S'_k = S_{-k}, T'_k = T_{-k}; their multipliers
    // on each pair of spaces are S_{-k} or T_{-k} entrywise.
    let rf = resolvent_family(a)?;
    let s_ref = |k: i64| rf.s_k(-k);
    let t_ref = |k: i64| rf.t_k(-k);
    let sigma = diagonal_family_bound(&st, RESOLVENT_RANGE, s_ref)?;
    let sigma_p = diagonal_family_bound(&st, RESOLVENT_RANGE, t_ref)?;
    let tau_p = diagonal_family_bound(&st, RESOLVENT_RANGE, s_ref)?;
    let tau = diagonal_family_bound(&st, RESOLVENT_RANGE, t_ref)?;
    let upsilon = diagonal_family_bound(&st, RESOLVENT_RANGE, t_ref)?;
    for (name, h) in [("σ", sigma), ("σ'", sigma_p), ("τ", tau), ("τ'", tau_p), ("υ", upsilon)] {
        case.le(format!("hypothesis/{name}"), h, 1.0, 1e-12);
    }
    let k = sigma.max(sigma_p) + (1.0 + sigma) + (tau.max(tau_p) + tau_p).max(upsilon);
    let side0 = vec![(st.clone(), x)];
    let pyz = gen::sided([side0.clone(), vec![(st.clone(), y.clone()), (st.clone(), z.clone())]], theta, E);
    let py = gen::sided([side0.clone(), vec![(st.clone(), y)]], theta, E);
    let pz = gen::sided([side0, vec![(st, z)]], theta, E);
    let nyz = interp_norm_with(&pyz, &v, &[])?;
    case.drift(&pyz, &v, &nyz);
    let hint = [seq_of(&nyz)?];
    let ny = interp_norm_with(&py, &v, &hint)?;
    let nz = interp_norm_with(&pz, &v, &hint)?;
    let both = ny.value.max(nz.value);
    case.le_rel("lower", both, nyz.value, BUILT);
    let c = mean_lower_constant(theta, E) * k * mean_upper_constant(theta, E);
    case.note("upper_ratio", nyz.value / both);
    case.le_rel("upper", nyz.value, c * both, SOLVER_SLACK);
    Ok(())
}
