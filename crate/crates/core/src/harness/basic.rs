//! Structure-level suites: axioms, sandwich, Cesàro means, Gaussian on Hilbert spaces.

use rand::Rng;

use super::gen::{self, pick, DIMS, EXPONENTS};
use super::{Case, Suite};
use crate::error::Result;
use crate::seq::SparseSeq;
use crate::spaces::NormedSpace;
use crate::structures::{NormEstimate, RademacherMode, SeqStructSpec};

/// Relative tolerance for deterministic identities.
const EXACT: f64 = 1e-9;
/// Relative tolerance for Fourier-quadrature inequalities.
const QUAD: f64 = 1e-6;
/// Monte Carlo checks allow this many CI half-widths.
const CI_WIDTHS: f64 = 3.0;

pub(super) fn suites() -> Vec<Suite> {
    vec![
        Suite {
            name: "axioms",
            default_cases: 50,
            constants: &[
                ("delta", "|‖δ_k x‖ - ‖x‖| ≤ 1e-9·‖x‖ (deterministic), 3 CI half-widths (Monte Carlo)"),
                ("translation", "|‖τ_m s‖ - ‖s‖| ≤ 1e-9·‖s‖ (deterministic), 3 CI half-widths (Monte Carlo)"),
                ("coordinate", "max_n ‖s_n‖ ≤ ‖s‖ (1 + 1e-9), plus 3 CI half-widths for Monte Carlo"),
            ],
            run: axioms,
        },
        Suite {
            name: "sandwich",
            default_cases: 200,
            constants: &[
                ("lower", "‖s‖_{ℓ∞(X)} ≤ ‖s‖ + 1e-9, plus 3 CI half-widths for Monte Carlo"),
                ("upper", "‖s‖ ≤ ‖s‖_{ℓ¹(X)} + 1e-9, plus 3 CI half-widths for Monte Carlo"),
            ],
            run: sandwich,
        },
        Suite {
            name: "cesaro",
            default_cases: 50,
            constants: &[
                ("contraction", "‖C_n s‖ ≤ ‖s‖ (1 + 1e-9; 1 + 1e-6 for Fourier quadrature)"),
                ("truncation", "‖1_[-n,n] s‖ ≤ ‖s‖ for lp, lattice and Rademacher structures"),
                ("recovery", "1_[-n,n] s = s once n ≥ radius(s)"),
                ("convergence", "‖C_n s - s‖ ≤ radius(s)/(n+1)·‖s‖_{ℓ¹(X)}"),
            ],
            run: cesaro,
        },
        Suite {
            name: "gaussian-hilbert",
            default_cases: 50,
            constants: &[
                ("gaussian", "|‖s‖_{γ,2} - (Σ‖s_k‖²)^{1/2}| ≤ 3 CI half-widths on weighted ℓ²"),
                ("rademacher", "‖s‖_{ε,2} = (Σ‖s_k‖²)^{1/2} to 1e-9 on weighted ℓ²"),
            ],
            run: gaussian_hilbert,
        },
    ]
}

fn deterministic_structures() -> Vec<SeqStructSpec> {
    let mut v: Vec<SeqStructSpec> = EXPONENTS.iter().map(|&p| SeqStructSpec::lp(p)).collect();
    v.extend([1.0, 2.0, 4.0, f64::INFINITY].map(SeqStructSpec::fourier));
    v.extend([1.0, 2.0, f64::INFINITY].map(SeqStructSpec::lattice));
    v.extend([1.0, 2.0].map(|p| SeqStructSpec::Rademacher {
        p,
        mode: RademacherMode::Exact,
    }));
    v
}

fn monte_carlo_structures(seed: u64) -> Vec<SeqStructSpec> {
    vec![
        SeqStructSpec::Rademacher {
            p: 2.0,
            mode: RademacherMode::MonteCarlo { samples: 16, seed },
        },
        SeqStructSpec::Gaussian {
            p: 1.0,
            samples: 4000,
            seed,
        },
        SeqStructSpec::Gaussian {
            p: 2.0,
            samples: 4000,
            seed,
        },
    ]
}

fn all_structures(case: &mut Case) -> Vec<SeqStructSpec> {
    let seed = case.rng.random();
    let mut v = deterministic_structures();
    v.extend(monte_carlo_structures(seed));
    v
}

fn random_space(case: &mut Case) -> Result<NormedSpace> {
    let n = pick(&mut case.rng, &DIMS);
    let p = pick(&mut case.rng, &EXPONENTS);
    let w = gen::weights(&mut case.rng, n);
    NormedSpace::weighted_lp(p, w)
}

/// Absolute slack: relative part plus CI half-widths of the estimates.
fn slack(rel: f64, scale: f64, ests: &[NormEstimate]) -> f64 {
    rel * scale + CI_WIDTHS * ests.iter().map(|e| e.half_width()).sum::<f64>()
}

fn axioms(case: &mut Case) -> Result<()> {
    let x = random_space(case)?;
    let s = gen::seq(&mut case.rng, x.dim, 3);
    let v = gen::cvec(&mut case.rng, x.dim);
    let k = case.rng.random_range(-5..=5);
    let m = case.rng.random_range(-7..=7);
    case.describe(&(&x, &s, &v, k, m));
    let xv = x.norm(&v)?;
    for st in all_structures(case) {
        let l = st.label();
        let d = st.norm(&x, &SparseSeq::delta(k, v.clone()))?;
        case.close(format!("delta/{l}"), d.value, xv, slack(EXACT, xv, &[d]));
        let a = st.norm(&x, &s)?;
        let b = st.norm(&x, &s.translate(m))?;
        case.close(format!("translation/{l}"), b.value, a.value, slack(EXACT, a.value, &[a, b]));
        let coord = s.iter().map(|(_, b)| x.norm_unchecked(b)).fold(0.0, f64::max);
        case.le(format!("coordinate/{l}"), coord, a.value, slack(EXACT, a.value, &[a]));
    }
    Ok(())
}

fn sandwich(case: &mut Case) -> Result<()> {
    let x = random_space(case)?;
    let s = gen::seq(&mut case.rng, x.dim, 3);
    case.describe(&(&x, &s));
    let norms: Vec<f64> = s.iter().map(|(_, b)| x.norm_unchecked(b)).collect();
    let lo = norms.iter().cloned().fold(0.0, f64::max);
    let hi: f64 = norms.iter().sum();
    for st in all_structures(case) {
        let l = st.label();
        let e = st.norm(&x, &s)?;
        case.le(format!("lower/{l}"), lo, e.value, slack(EXACT, hi, &[e]));
        case.le(format!("upper/{l}"), e.value, hi, slack(EXACT, hi, &[e]));
    }
    Ok(())
}

fn cesaro(case: &mut Case) -> Result<()> {
    let x = random_space(case)?;
    let r = case.rng.random_range(1..=4i64);
    let mut s = gen::seq(&mut case.rng, x.dim, r);
    // Pin the radius so the recovery and convergence orders are exact.
    s.insert(if case.rng.random_bool(0.5) { r } else { -r }, gen::cvec(&mut case.rng, x.dim));
    case.describe(&(&x, &s));
    let radius = s.radius();
    let l1: f64 = s.iter().map(|(_, b)| x.norm_unchecked(b)).sum();
    let orders = [0, 1, radius as u64, 2 * radius as u64 + 1];
    for n in orders.iter().filter(|&&n| n >= radius as u64) {
        let n = *n as i64;
        case.close(format!("recovery/n={n}"), s.truncate(-n, n).sub(&s).max_abs(), 0.0, 0.0);
    }
    for st in deterministic_structures() {
        let l = st.label();
        let rel = if matches!(st, SeqStructSpec::FourierLp { .. } | SeqStructSpec::FourierC { .. }) {
            QUAD
        } else {
            EXACT
        };
        let full = st.norm(&x, &s)?.value;
        for &n in &orders {
            let c = st.norm(&x, &s.cesaro(n))?.value;
            case.le(format!("contraction/{l}/n={n}"), c, full, rel * full);
            let err = st.norm(&x, &s.cesaro(n).sub(&s))?.value;
            let bound = radius as f64 / (n as f64 + 1.0) * l1;
            case.le(format!("convergence/{l}/n={n}"), err, bound, rel * l1);
            let truncation_contracts = matches!(
                st,
                SeqStructSpec::Lp { .. } | SeqStructSpec::LatticeLq { .. } | SeqStructSpec::Rademacher { .. }
            );
            if truncation_contracts && (n as i64) < radius {
                let t = st.norm(&x, &s.truncate(-(n as i64), n as i64))?.value;
                case.le(format!("truncation/{l}/n={n}"), t, full, rel * full);
            }
        }
    }
    Ok(())
}

fn gaussian_hilbert(case: &mut Case) -> Result<()> {
    let n = pick(&mut case.rng, &DIMS);
    let x = NormedSpace::weighted_lp(2.0, gen::weights(&mut case.rng, n))?;
    let s = gen::seq(&mut case.rng, n, 4);
    let seed = case.rng.random();
    case.describe(&(&x, &s, seed));
    let l2 = SeqStructSpec::lp(2.0).norm(&x, &s)?.value;
    let g = SeqStructSpec::Gaussian {
        p: 2.0,
        samples: 20_000,
        seed,
    }
    .norm(&x, &s)?;
    case.close("gaussian", g.value, l2, slack(EXACT, l2, &[g]));
    let r = SeqStructSpec::Rademacher {
        p: 2.0,
        mode: RademacherMode::Exact,
    }
    .norm(&x, &s)?;
    case.close("rademacher", r.value, l2, EXACT * l2);
    Ok(())
}
