//! Suites for J/K classes and reiteration.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::gen::{self, pick, EXPONENTS, SMALL_DIMS};
use super::oracle::{hilbert_calibration, hilbert_interp, oracle_stein_weiss};
use super::{Case, Suite};
use crate::engine::constants::{mean_lower_constant, mean_upper_constant};
use crate::engine::{interp_norm, interp_norm_with, InterpProblem, InterpSolution};
use crate::error::{Error, Result};
use crate::seq::SparseSeq;
use crate::spaces::{aggregate, Couple, NormedSpace, PExp, C64};
use crate::structures::SeqStructSpec;

const SOLVER_SLACK: f64 = 1e-5;
const BUILT: f64 = 1e-9;
/// Hilbert suite: solver tolerance plus the calibration phase grid.
const HILBERT_SLACK: f64 = 1e-4;
const HILBERT_WINDOW: i64 = 6;

pub(super) fn suites() -> Vec<Suite> {
    vec![
        Suite {
            name: "jk-classes",
            default_cases: 20,
            constants: &[
                ("j-to-embedding", "c_emb,J ≤ c_J (1 + 1e-9)"),
                ("embedding-to-j", "c_J ≤ a^θ c_emb,J (1 + 1e-9)"),
                ("k-to-embedding", "c_emb,K ≤ 2 c_K (1 + 1e-9)"),
                ("embedding-to-k", "c_K ≤ a^{1-θ} c_emb,K (1 + 1e-9)"),
            ],
            run: jk_classes,
        },
        Suite {
            name: "reiteration-real",
            default_cases: 30,
            constants: &[
                ("hypothesis/J", "‖x‖_{Y_j} ≤ ‖x‖₀^{1-θ_j} ‖x‖₁^{θ_j} (1 + 1e-9)"),
                ("hypothesis/K", "t^{-θ_j} K(t, x) ≤ 2^{1-1/p} ‖x‖_{Y_j} (1 + 1e-5)"),
                ("forward", "‖x‖_{(Y₀,Y₁)_{θ;b}} ≤ ‖x‖_{(X₀,X₁)_{ω;a}} (1 + 1e-9)"),
                (
                    "reverse",
                    "‖x‖_{(X₀,X₁)_{ω;a}} ≤ 2(1 + a^ω)·2^{1-1/p}·2(b^θ/(b^θ-1) + b^{1-θ}/(b^{1-θ}-1))·‖x‖_{(Y₀,Y₁)_{θ;b}} (1 + 1e-5)",
                ),
            ],
            run: reiteration_real,
        },
        Suite {
            name: "reiteration-hilbert-complex",
            default_cases: 30,
            constants: &[
                ("exact", "|computed - closed form| ≤ 1e-4·computed, window 6"),
                (
                    "stein-weiss",
                    "κ_lo ≤ ‖x‖_{(Y₀,Y₁)_θ} / ‖x‖_{ℓ²(w₀^{1-ω} w₁^ω)} ≤ κ_hi (1e-4), κ from a one-dimensional phase scan",
                ),
            ],
            run: reiteration_hilbert,
        },
    ]
}

fn seq_of(sol: &InterpSolution) -> Result<SparseSeq> {
    sol.seq()
        .cloned()
        .ok_or_else(|| Error::InvalidInput("expected a decomposition certificate".into()))
}

fn pexp(p: f64) -> PExp {
    PExp::new(p).unwrap_or(PExp::Inf)
}

/// Weighted ℓᵖ couple with the given weights.
fn couple(p: f64, w0: &[f64], w1: &[f64]) -> Result<Couple> {
    Couple::new(NormedSpace::weighted_lp(p, w0.to_vec())?, NormedSpace::weighted_lp(p, w1.to_vec())?)
}

/// Split `v = u₀ + u₁` and its value at parameter `t`.
#[derive(Clone)]
struct SplitPair {
    u0: Vec<C64>,
    u1: Vec<C64>,
}

impl SplitPair {
    fn k_value(&self, c: &Couple, t: f64) -> f64 {
        c.space0.norm_unchecked(&self.u0) + t * c.space1.norm_unchecked(&self.u1)
    }

    /// Sum norm of `δ_k v` in the weighted sequence couple.
    fn delta_value(&self, c: &Couple, a: f64, theta: f64, k: i64) -> f64 {
        a.powf(-theta * k as f64) * self.k_value(c, a.powi(k as i32))
    }
}

/// One K-functional sample `(point, t)` with `a^k ≤ t < a^{k+1}`.
struct KSample {
    point: usize,
    t: f64,
    k: i64,
}

fn jk_classes(case: &mut Case) -> Result<()> {
    let rng = &mut case.rng;
    let n = pick(rng, &[1, 2]);
    let p = pick(rng, &EXPONENTS);
    let (w0, w1) = (gen::weights(rng, n), gen::weights(rng, n));
    let (theta, a) = (gen::theta(rng), pick(rng, &gen::BASES));
    let mut points = vec![gen::cvec(rng, n), gen::cvec(rng, n)];
    let q_lo = -1i64;
    for _ in -1..=1 {
        points.push(gen::cvec(rng, n));
    }
    let us: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
    let x = couple(p, &w0, &w1)?;
    let st = SeqStructSpec::lp(p);
    let prob = gen::problem(x.clone(), st.clone(), st, theta, a);
    case.describe(&(&prob, &points, &us));
    let cfg = &prob.solver;
    let mut ynorm = Vec::new();
    for v in &points {
        ynorm.push(interp_norm(&prob, v)?.value);
    }
    let q_index = |k: i64| (2 + k - q_lo) as usize;
    let q = SparseSeq::from_pairs(n, (-1..=1).map(|k| (k, points[q_index(k)].clone())))?;
    let lp_y = aggregate(pexp(p), (-1..=1).map(|k| ynorm[q_index(k)]));
    let sided = prob.sided();

    // J side.
    let (mut c_j, mut c_emb_j) = (0.0f64, 0.0f64);
    for (i, v) in points.iter().enumerate() {
        let (na, nb) = (x.space0.norm_unchecked(v), x.space1.norm_unchecked(v));
        c_j = c_j.max(ynorm[i] / (na.powf(1.0 - theta) * nb.powf(theta)));
        let k = ((na / nb).ln() / a.ln()).floor() as i64;
        let obj = sided.objective(&SparseSeq::delta(k, v.clone()))?;
        c_emb_j = c_emb_j.max(ynorm[i] / obj);
    }
    c_emb_j = c_emb_j.max(lp_y / sided.objective(&q)?);
    case.le_rel("j-to-embedding", c_emb_j, c_j, BUILT);
    case.le_rel("embedding-to-j", c_j, a.powf(theta) * c_emb_j, BUILT);

    // K side: samples at t = ‖v‖₀/‖v‖₁, a random t, and the grid points
    // below them; the blocks of q at t = a^k.
    let mut samples = Vec::new();
    for (i, &u) in us.iter().enumerate() {
        let v = &points[i];
        let r = (x.space0.norm_unchecked(v) / x.space1.norm_unchecked(v)).ln() / a.ln();
        for s in [r, u] {
            let k = s.floor() as i64;
            samples.push(KSample { point: i, t: a.powf(s), k });
            samples.push(KSample {
                point: i,
                t: a.powi(k as i32),
                k,
            });
        }
    }
    for k in -1..=1 {
        samples.push(KSample {
            point: q_index(k),
            t: a.powi(k as i32),
            k,
        });
    }
    let mut raw_k = Vec::new();
    for s in &samples {
        let sp = x.split(&points[s.point], s.t, cfg)?;
        raw_k.push(SplitPair { u0: sp.x0, u1: sp.x1 });
    }
    // Sum norm of δ_k v, improved by the K split at t = a^k.
    let mut deltas: BTreeMap<(usize, i64), SplitPair> = BTreeMap::new();
    for s in &samples {
        let key = (s.point, s.k);
        if deltas.contains_key(&key) {
            continue;
        }
        let scaled = couple(
            p,
            &w0.iter().map(|w| w * a.powf(-theta * s.k as f64)).collect::<Vec<_>>(),
            &w1.iter().map(|w| w * a.powf((1.0 - theta) * s.k as f64)).collect::<Vec<_>>(),
        )?;
        let sp = scaled.sum_norm(&points[s.point], cfg)?;
        let mut best = SplitPair { u0: sp.x0, u1: sp.x1 };
        let grid = samples
            .iter()
            .zip(&raw_k)
            .filter(|(o, _)| o.point == s.point && o.k == s.k && o.t == a.powi(s.k as i32))
            .map(|(_, sp)| sp);
        for cand in grid {
            if cand.delta_value(&x, a, theta, s.k) < best.delta_value(&x, a, theta, s.k) {
                best = cand.clone();
            }
        }
        deltas.insert(key, best);
    }
    let mut c_k = 0.0f64;
    let mut final_k: Vec<SplitPair> = Vec::new();
    for (s, kp) in samples.iter().zip(&raw_k) {
        let d = &deltas[&(s.point, s.k)];
        let best = if d.k_value(&x, s.t) < kp.k_value(&x, s.t) { d } else { kp };
        c_k = c_k.max(s.t.powf(-theta) * best.k_value(&x, s.t) / ynorm[s.point]);
        final_k.push(best.clone());
    }
    let mut c_emb_k = 0.0f64;
    for (&(i, k), d) in &deltas {
        c_emb_k = c_emb_k.max(d.delta_value(&x, a, theta, k) / ynorm[i]);
    }
    // Sum norm of q in the flattened couple, against the blockwise K splits.
    let flat_w = |j: usize| -> Vec<f64> {
        (-1..=1i64)
            .flat_map(|k| {
                let (w, e) = if j == 0 {
                    (&w0, -theta * k as f64)
                } else {
                    (&w1, (1.0 - theta) * k as f64)
                };
                w.iter().map(move |wi| wi * a.powf(e))
            })
            .collect()
    };
    let big = couple(p, &flat_w(0), &flat_w(1))?;
    let flat_q: Vec<C64> = (-1..=1).flat_map(|k| points[q_index(k)].clone()).collect();
    let mut q_sum = big.sum_norm(&flat_q, cfg)?.value;
    let blockwise: Vec<&SplitPair> = (-1..=1i64)
        .map(|k| {
            let idx = samples
                .iter()
                .position(|s| s.point == q_index(k) && s.k == k)
                .expect("q samples are present");
            &final_k[idx]
        })
        .collect();
    let side = |j: usize| {
        aggregate(
            pexp(p),
            (-1..=1i64).zip(&blockwise).map(|(k, sp)| {
                if j == 0 {
                    a.powf(-theta * k as f64) * x.space0.norm_unchecked(&sp.u0)
                } else {
                    a.powf((1.0 - theta) * k as f64) * x.space1.norm_unchecked(&sp.u1)
                }
            }),
        )
    };
    q_sum = q_sum.min(side(0) + side(1));
    c_emb_k = c_emb_k.max(q_sum / lp_y);
    case.note("c_J", c_j);
    case.note("c_K", c_k);
    case.le_rel("k-to-embedding", c_emb_k, 2.0 * c_k, BUILT);
    case.le_rel("embedding-to-k", c_k, a.powf(1.0 - theta) * c_emb_k, BUILT);
    Ok(())
}

/// `θ₀ < θ₁` with a gap of at least 0.3, inside `[0.05, 0.95]`.
fn theta_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let t0 = rng.random_range(0.05..0.6);
    let t1 = rng.random_range((t0 + 0.3)..0.95);
    (t0, t1)
}

/// `w₀^{1-s} w₁^s` entrywise.
fn geometric(w0: &[f64], w1: &[f64], s: f64) -> Vec<f64> {
    w0.iter().zip(w1).map(|(a, b)| a.powf(1.0 - s) * b.powf(s)).collect()
}

struct Reiteration {
    x_prob: InterpProblem,
    y_prob: InterpProblem,
    omega: f64,
    a: f64,
}

/// Reiteration data, the two weight vectors and the inner parameters.
type Setup = (Reiteration, Vec<f64>, Vec<f64>, [f64; 2]);

fn reiteration_setup(
    rng: &mut ChaCha8Rng,
    p: f64,
    n: usize,
    structure: SeqStructSpec,
    bases: &[f64],
) -> Result<Setup> {
    let (w0, w1) = (gen::weights(rng, n), gen::weights(rng, n));
    let (t0, t1) = theta_pair(rng);
    let theta = gen::theta(rng);
    let b = pick(rng, bases);
    let a = b.powf(1.0 / (t1 - t0));
    let omega = (1.0 - theta) * t0 + theta * t1;
    let x = couple(p, &w0, &w1)?;
    let y = couple(p, &geometric(&w0, &w1, t0), &geometric(&w0, &w1, t1))?;
    let x_prob = gen::problem(x, SeqStructSpec::lp(p), SeqStructSpec::lp(p), omega, a);
    let y_prob = gen::problem(y, structure.clone(), structure, theta, b);
    Ok((
        Reiteration {
            x_prob,
            y_prob,
            omega,
            a,
        },
        w0,
        w1,
        [t0, t1],
    ))
}

fn reiteration_real(case: &mut Case) -> Result<()> {
    let rng = &mut case.rng;
    let n = pick(rng, &SMALL_DIMS);
    let p = pick(rng, &EXPONENTS);
    let (r, _, _, thetas) = reiteration_setup(rng, p, n, SeqStructSpec::lp(p), &gen::BASES)?;
    let v = gen::cvec(rng, n);
    let ts: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0f64..3.0).exp()).collect();
    case.describe(&(&r.x_prob, &r.y_prob, &v, &ts));
    let x = &r.x_prob.couple;
    let y = &r.y_prob.couple;
    // Hypotheses on Y_j: the J inequality (Hölder) and the K inequality.
    let c_k = 2f64.powf(1.0 - 1.0 / p);
    for (j, &tj) in thetas.iter().enumerate() {
        let yj = y.space(j).norm(&v)?;
        let j_bound = x.space0.norm(&v)?.powf(1.0 - tj) * x.space1.norm(&v)?.powf(tj);
        case.le_rel(format!("hypothesis/J/j={j}"), yj, j_bound, BUILT);
        for &t in &ts {
            let kv = x.split(&v, t, &r.x_prob.solver)?.value;
            case.le_rel(format!("hypothesis/K/j={j}"), t.powf(-tj) * kv, c_k * yj, SOLVER_SLACK);
        }
    }
    let big_a = interp_norm(&r.x_prob, &v)?;
    case.drift(&r.x_prob.sided(), &v, &big_a);
    let big_b = interp_norm_with(&r.y_prob.sided(), &v, &[seq_of(&big_a)?])?;
    case.le_rel("forward", big_b.value, big_a.value, BUILT);
    let theta = r.y_prob.theta;
    let c = mean_lower_constant(r.omega, r.a) * c_k * mean_upper_constant(theta, r.y_prob.base);
    case.note("reverse_ratio", big_a.value / big_b.value);
    case.le_rel("reverse", big_a.value, c * big_b.value, SOLVER_SLACK);
    Ok(())
}

fn reiteration_hilbert(case: &mut Case) -> Result<()> {
    let rng = &mut case.rng;
    let n = pick(rng, &SMALL_DIMS);
    let (mut r, w0, w1, [t0, t1]) = reiteration_setup(rng, 2.0, n, SeqStructSpec::fourier(2.0), &gen::BASES)?;
    r.y_prob.window = HILBERT_WINDOW;
    let v = gen::cvec(rng, n);
    case.describe(&(&r.y_prob, &v));
    let (theta, b) = (r.y_prob.theta, r.y_prob.base);
    let big_b = interp_norm(&r.y_prob, &v)?;
    case.drift(&r.y_prob.sided(), &v, &big_b);
    let (y0, y1) = (geometric(&w0, &w1, t0), geometric(&w0, &w1, t1));
    let exact = hilbert_interp(&y0, &y1, theta, b, HILBERT_WINDOW, &v);
    case.close("exact", big_b.value, exact, HILBERT_SLACK * big_b.value);
    // Weights lie in [e^{-2}, e^2], so |log_b(y1/y0)| ≤ 4(θ₁-θ₀)/ln b.
    let phi_max = 4.0 * (t1 - t0) / b.ln();
    let (lo, hi) = hilbert_calibration(theta, b, HILBERT_WINDOW, phi_max);
    let sw = oracle_stein_weiss(&w0, &w1, 2.0, r.omega, &v);
    let ratio = big_b.value / sw;
    case.note("stein_weiss_ratio", ratio);
    case.le_rel("stein-weiss/lower", lo, ratio, HILBERT_SLACK);
    case.le_rel("stein-weiss/upper", ratio, hi, HILBERT_SLACK);
    Ok(())
}
