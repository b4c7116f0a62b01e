//! Suites on a single couple: embeddings, log-convexity, mean method, finite
//! representation, real-method bracketing, base change, analytic view.

use std::f64::consts::{E, PI};

use rand::Rng;

use super::gen::{self, pick, DIMS, EXPONENTS, SMALL_DIMS};
use super::oracle::oracle_stein_weiss;
use super::{Case, Suite};
use crate::engine::constants::{
    base_change_constant, embedding_constant, finite_rep_constant, logconvex_constant, mean_lower_constant,
    mean_upper_constant,
};
use crate::engine::{
    balanced_shift, change_base_reindex, complex_view, finite_rep, interp_norm, interp_norm_with, logconvex_norm_with,
    mean_norm_with, mean_to_decomposition, Certificate, InterpProblem, InterpSolution,
};
use crate::error::{Error, Result};
use crate::seq::SparseSeq;
use crate::spaces::{Couple, C64};
use crate::structures::{RademacherMode, SeqStructSpec};

/// Relative slack on inequalities between two solver outputs.
const SOLVER_SLACK: f64 = 1e-5;
/// Relative slack on inequalities that hold by construction.
const BUILT: f64 = 1e-9;
/// Relative slack for the sampled supremum on the boundary lines.
const LINE_GRID: f64 = 1e-4;
const LINE_NODES: usize = 4096;
const FINITE_REP_SLACK: f64 = 1.01;

pub(super) fn suites() -> Vec<Suite> {
    vec![
        Suite {
            name: "embeddings-basic",
            default_cases: 100,
            constants: &[
                ("intersection", "‖x‖_θ ≤ max(‖x‖₀, ‖x‖₁), slack 1e-5 + solver tol"),
                ("sum", "‖x‖_{X₀+X₁} ≤ C_θ‖x‖_θ, C_θ = 1/(1-b^{-θ}) + b^{-(1-θ)}/(1-b^{-(1-θ)}), slack 1e-5 + solver tol"),
            ],
            run: embeddings,
        },
        Suite {
            name: "logconvex",
            default_cases: 100,
            constants: &[
                ("lower", "logconvex ≤ interp (1 + 1e-9)"),
                ("upper", "interp ≤ b^θ·logconvex (1 + 1e-5)"),
            ],
            run: logconvex,
        },
        Suite {
            name: "mean-method",
            default_cases: 100,
            constants: &[
                ("mean/interp", "mean ≤ 2(b^θ/(b^θ-1) + b^{1-θ}/(b^{1-θ}-1))·interp (1 + 1e-5)"),
                ("interp/mean", "interp ≤ 2(1 + b^θ)·mean (1 + 1e-5)"),
            ],
            run: mean_method,
        },
        Suite {
            name: "finite-rep",
            default_cases: 100,
            constants: &[
                ("reconstruction", "|Σ_k w_k - x|_∞ ≤ 1e-10·|x|_∞"),
                ("norm", "F(w) ≤ (1 + (2β+1)/(β-1))·1.01·F(y), β = min(b^θ, b^{1-θ})"),
            ],
            run: finite_rep_suite,
        },
        Suite {
            name: "real-bracket",
            default_cases: 100,
            constants: &[
                ("lower", "interp[ℓ∞] ≤ interp[𝔖] (1 + 1e-9)"),
                ("upper", "interp[𝔖] ≤ interp[ℓ¹] (1 + 1e-9)"),
            ],
            run: real_bracket,
        },
        Suite {
            name: "base-change",
            default_cases: 50,
            constants: &[(
                "a→b",
                "interp_b ≤ C·interp_a, C = 1 if a = b, else (⌊δ⌋+1 if δ > 1, else 1)·b^θ with δ = ln b/ln a; slack 1e-9",
            )],
            run: base_change,
        },
        Suite {
            name: "complex-view",
            default_cases: 50,
            constants: &[
                ("isometry", "f(θ) = Σx_k, line-θ coefficients = x⃗, boundary norms = side norms, all to 1e-12"),
                ("fourier", "Fourier coefficients of f(j+i·) on the torus = boundary sequences, to 1e-12"),
                (
                    "one-sided",
                    "‖x‖_{[X₀,X₁]_θ} ≤ max_j sup_t ‖f(j+it)‖_{X_j}, sup sampled on 4096 nodes, slack 1e-4",
                ),
            ],
            run: complex_view_suite,
        },
    ]
}

fn seq_of(sol: &InterpSolution) -> Result<SparseSeq> {
    sol.seq()
        .cloned()
        .ok_or_else(|| Error::InvalidInput("expected a decomposition certificate".into()))
}

fn embeddings(case: &mut Case) -> Result<()> {
    let rng = &mut case.rng;
    let n = pick(rng, &DIMS);
    let (p0, p1) = (pick(rng, &EXPONENTS), pick(rng, &EXPONENTS));
    let couple = gen::lp_couple(rng, n, p0, p1)?;
    let s0 = gen::cheap_structure(rng);
    let s1 = gen::cheap_structure(rng);
    let (theta, base) = (gen::theta(rng), pick(rng, &gen::BASES));
    let x = gen::cvec(rng, n);
    let prob = gen::problem(couple, s0, s1, theta, base);
    case.describe(&(&prob, &x));
    let sol = interp_norm(&prob, &x)?;
    case.drift(&prob.sided(), &x, &sol);
    let slack = SOLVER_SLACK + prob.solver.rel_tol;
    case.le_rel("intersection", sol.value, prob.couple.intersection_norm(&x)?, slack);
    let sum = prob.couple.sum_norm(&x, &prob.solver)?.value;
    case.le_rel("sum", sum, embedding_constant(theta, base) * sol.value, slack);
    Ok(())
}

fn logconvex(case: &mut Case) -> Result<()> {
    let rng = &mut case.rng;
    let n = pick(rng, &DIMS);
    let (p0, p1) = (pick(rng, &EXPONENTS), pick(rng, &EXPONENTS));
    let couple = gen::lp_couple(rng, n, p0, p1)?;
    let s0 = gen::cheap_structure(rng);
    let s1 = gen::cheap_structure(rng);
    let (theta, base) = (gen::theta(rng), pick(rng, &gen::BASES));
    let x = gen::cvec(rng, n);
    let prob = gen::problem(couple, s0, s1, theta, base);
    case.describe(&(&prob, &x));
    let sided = prob.sided();
    let i = interp_norm(&prob, &x)?;
    case.drift(&sided, &x, &i);
    let l = logconvex_norm_with(&sided, &x, &[seq_of(&i)?])?;
    case.le_rel("lower", l.value, i.value, BUILT);
    let shifted = balanced_shift(&sided, &seq_of(&l)?)?;
    let upper = i.value.min(sided.objective(&shifted)?);
    case.le_rel("upper", upper, logconvex_constant(theta, base) * l.value, SOLVER_SLACK);
    Ok(())
}

fn mean_method(case: &mut Case) -> Result<()> {
    let rng = &mut case.rng;
    let n = pick(rng, &DIMS);
    let (p0, p1) = (pick(rng, &EXPONENTS), pick(rng, &EXPONENTS));
    let couple = gen::lp_couple(rng, n, p0, p1)?;
    let (s0, s1) = if rng.random_bool(0.7) {
        (SeqStructSpec::lp(pick(rng, &EXPONENTS)), SeqStructSpec::lp(pick(rng, &EXPONENTS)))
    } else {
        (SeqStructSpec::lattice(pick(rng, &EXPONENTS)), SeqStructSpec::lattice(pick(rng, &EXPONENTS)))
    };
    let (theta, base) = (gen::theta(rng), pick(rng, &gen::BASES));
    let x = gen::cvec(rng, n);
    let prob = gen::problem(couple, s0, s1, theta, base);
    case.describe(&(&prob, &x));
    let i = interp_norm(&prob, &x)?;
    case.drift(&prob.sided(), &x, &i);
    let m = mean_norm_with(&prob, &x, &[seq_of(&i)?])?;
    case.le_rel("mean/interp", m.value, mean_upper_constant(theta, base) * i.value, SOLVER_SLACK);
    let Certificate::Pair(x0, _) = &m.certificate else {
        return Err(Error::InvalidInput("mean method returned no split".into()));
    };
    let y = mean_to_decomposition(x0, m.window, &x);
    let upper = i.value.min(prob.sided().objective(&y)?);
    case.le_rel("interp/mean", upper, mean_lower_constant(theta, base) * m.value, SOLVER_SLACK);
    Ok(())
}

fn finite_rep_suite(case: &mut Case) -> Result<()> {
    let rng = &mut case.rng;
    let n = pick(rng, &DIMS);
    let (p0, p1) = (pick(rng, &EXPONENTS), pick(rng, &EXPONENTS));
    let couple = gen::lp_couple(rng, n, p0, p1)?;
    let s0 = gen::cheap_structure(rng);
    let s1 = gen::cheap_structure(rng);
    let (theta, base) = (gen::theta(rng), pick(rng, &gen::BASES));
    let x = gen::cvec(rng, n);
    let prob = gen::problem(couple, s0, s1, theta, base);
    case.describe(&(&prob, &x));
    let rep = finite_rep(&prob, &x, FINITE_REP_SLACK)?;
    case.le(
        "reconstruction",
        gen::max_gap(&rep.seq.sum(), &x),
        0.0,
        1e-10 * gen::max_abs(&x),
    );
    let bound = finite_rep_constant(theta, base) * FINITE_REP_SLACK * rep.reference;
    case.le_rel("norm", prob.sided().objective(&rep.seq)?, bound, BUILT);
    Ok(())
}

fn bracket_variants() -> Vec<SeqStructSpec> {
    let mut v: Vec<SeqStructSpec> = [1.5, 2.0, 4.0].map(SeqStructSpec::lp).to_vec();
    v.extend([1.0, 2.0, 4.0, f64::INFINITY].map(SeqStructSpec::fourier));
    v.extend([1.0, 2.0, f64::INFINITY].map(SeqStructSpec::lattice));
    v.extend([1.0, 2.0].map(|p| SeqStructSpec::Rademacher {
        p,
        mode: RademacherMode::Exact,
    }));
    v
}

fn real_bracket(case: &mut Case) -> Result<()> {
    let variants = bracket_variants();
    let picks = [2 * case.index % variants.len(), (2 * case.index + 1) % variants.len()];
    let rng = &mut case.rng;
    let n = pick(rng, &SMALL_DIMS);
    let (p0, p1) = (pick(rng, &EXPONENTS), pick(rng, &EXPONENTS));
    let couple = gen::lp_couple(rng, n, p0, p1)?;
    let (theta, base) = (gen::theta(rng), pick(rng, &gen::BASES));
    let x = gen::cvec(rng, n);
    let l1 = SeqStructSpec::lp(1.0);
    let linf = SeqStructSpec::lp(f64::INFINITY);
    let top = gen::problem(couple, l1.clone(), l1, theta, base);
    case.describe(&(&top, &x, picks));
    let bottom = top.with_structs(linf.clone(), linf).sided();
    let i1 = interp_norm(&top, &x)?;
    case.drift(&top.sided(), &x, &i1);
    let iinf = interp_norm_with(&bottom, &x, &[])?;
    for &v in &picks {
        let st = &variants[v];
        let l = st.label();
        let mid = top.with_structs(st.clone(), st.clone()).sided();
        let is = interp_norm_with(&mid, &x, &[seq_of(&i1)?])?;
        case.le_rel(format!("upper/{l}"), is.value, i1.value, BUILT);
        let lower = iinf.value.min(bottom.objective(&seq_of(&is)?)?);
        case.le_rel(format!("lower/{l}"), lower, is.value, BUILT);
    }
    Ok(())
}

fn base_change(case: &mut Case) -> Result<()> {
    let bases = [1.5, E, 4.0];
    let rng = &mut case.rng;
    let (a, b) = (pick(rng, &bases), pick(rng, &bases));
    let n = pick(rng, &DIMS);
    let (p0, p1) = (pick(rng, &EXPONENTS), pick(rng, &EXPONENTS));
    let couple = gen::lp_couple(rng, n, p0, p1)?;
    let (s0, s1) = if rng.random_bool(0.5) {
        (SeqStructSpec::lp(pick(rng, &EXPONENTS)), SeqStructSpec::lp(pick(rng, &EXPONENTS)))
    } else {
        (SeqStructSpec::lattice(pick(rng, &EXPONENTS)), SeqStructSpec::lattice(pick(rng, &EXPONENTS)))
    };
    let theta = gen::theta(rng);
    let x = gen::cvec(rng, n);
    let pa = gen::problem(couple, s0, s1, theta, a);
    let pb = InterpProblem { base: b, ..pa.clone() };
    case.describe(&(&pa, b, &x));
    let (sa, sb) = (pa.sided(), pb.sided());
    let ia = interp_norm(&pa, &x)?;
    case.drift(&sa, &x, &ia);
    let ib = interp_norm(&pb, &x)?;
    let from_a = change_base_reindex(&seq_of(&ia)?, a, b)?;
    let ib_val = ib.value.min(sb.objective(&from_a)?);
    case.le_rel("a→b", ib_val, base_change_constant(theta, a, b) * ia.value, BUILT);
    let best_b = if ib_val < ib.value { from_a } else { seq_of(&ib)? };
    let from_b = change_base_reindex(&best_b, b, a)?;
    let ia_val = ia.value.min(sa.objective(&from_b)?);
    case.le_rel("b→a", ia_val, base_change_constant(theta, b, a) * ib_val, BUILT);
    Ok(())
}

/// `max_j sup_t ‖f(j+it)‖_{X_j}` sampled over one period `2π/ln b`.
fn boundary_sup(couple: &Couple, f: &crate::engine::AnalyticView) -> Result<f64> {
    let lb = f.base.ln();
    let mut best: f64 = 0.0;
    for j in 0..2 {
        for q in 0..LINE_NODES {
            let t = 2.0 * PI * q as f64 / (LINE_NODES as f64 * lb);
            let v = f.eval_at(C64::new(j as f64, t));
            best = best.max(couple.space(j).norm(&v)?);
        }
    }
    Ok(best)
}

/// Torus Fourier coefficients of `t ↦ f(j + it/ln b)` at the support of `s`.
fn line_coefficient_gap(f: &crate::engine::AnalyticView, j: usize) -> f64 {
    let want = f.boundary_coeffs(j);
    let Some((lo, hi)) = want.bounds() else { return 0.0 };
    let m = 4 * (hi - lo + 1) as usize + 16;
    let lb = f.base.ln();
    let vals: Vec<Vec<C64>> = (0..m)
        .map(|q| f.eval_at(C64::new(j as f64, 2.0 * PI * q as f64 / (m as f64 * lb))))
        .collect();
    let scale = want.max_abs().max(1e-300);
    let mut gap: f64 = 0.0;
    for k in lo..=hi {
        let mut acc = vec![C64::new(0.0, 0.0); f.seq.dim()];
        for (q, v) in vals.iter().enumerate() {
            let e = C64::from_polar(1.0, -2.0 * PI * (k * q as i64) as f64 / m as f64);
            for (a, b) in acc.iter_mut().zip(v) {
                *a += b * e / m as f64;
            }
        }
        let zero = vec![C64::new(0.0, 0.0); acc.len()];
        let w = want.get(k).unwrap_or(&zero);
        gap = gap.max(gen::max_gap(&acc, w) / scale);
    }
    gap
}

fn complex_view_suite(case: &mut Case) -> Result<()> {
    let rng = &mut case.rng;
    let n = pick(rng, &DIMS);
    let p = pick(rng, &EXPONENTS);
    let (w0, w1) = (gen::weights(rng, n), gen::weights(rng, n));
    let couple = Couple::new(gen::lp_space(p, w0.clone())?, gen::lp_space(p, w1.clone())?)?;
    let (theta, base) = (gen::theta(rng), pick(rng, &gen::BASES));
    let samples = [gen::seq(rng, n, 3), gen::seq(rng, n, 2)];
    let x = gen::cvec(rng, n);
    let st = SeqStructSpec::lp(p);
    let prob = gen::problem(couple.clone(), st.clone(), st.clone(), theta, base);
    case.describe(&(&prob, &samples, &x));
    let sided = prob.sided();
    let sol = interp_norm(&prob, &x)?;
    let mut certs = samples.to_vec();
    certs.push(seq_of(&sol)?);
    for (c, s) in certs.iter().enumerate() {
        let f = complex_view(s, theta, base);
        let sum = s.sum();
        let scale = gen::max_abs(&sum).max(s.max_abs());
        case.le(format!("isometry/value/{c}"), gen::max_gap(&f.eval_at(C64::new(theta, 0.0)), &sum), 0.0, 1e-12 * scale);
        case.le(format!("isometry/line/{c}"), f.coeffs_on_line(theta).sub(s).max_abs(), 0.0, 0.0);
        for j in 0..2 {
            case.le(format!("fourier/{c}/j={j}"), line_coefficient_gap(&f, j), 0.0, 1e-12);
            for spec in [st.clone(), SeqStructSpec::fourier(2.0)] {
                let a = spec.norm(couple.space(j), &f.boundary_coeffs(j))?.value;
                let b = spec.weighted_norm(couple.space(j), sided.weight(j), s)?.value;
                case.close(format!("isometry/norm/{}/{c}/j={j}", spec.label()), a, b, 1e-12 * a.max(b));
            }
        }
        let sw = oracle_stein_weiss(&w0, &w1, p, theta, &sum);
        case.le_rel(format!("one-sided/{c}"), sw, boundary_sup(&couple, &f)?, LINE_GRID);
    }
    Ok(())
}
