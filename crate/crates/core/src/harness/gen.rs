//! Instance generators shared by the suites.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::engine::interp::{InterpProblem, SidedProblem, Term};
use crate::error::Result;
use crate::seq::SparseSeq;
use crate::solver::SolverConfig;
use crate::spaces::{Couple, NormedSpace, C64};
use crate::structures::SeqStructSpec;

/// Decomposition window used by the equivalence suites. Each checked inequality
/// holds for any window, so a small one keeps `verify all` fast.
pub const WINDOW: i64 = 4;
pub const TOL: f64 = 1e-6;
pub const DIMS: [usize; 4] = [1, 2, 4, 8];
pub const SMALL_DIMS: [usize; 3] = [1, 2, 4];
pub const EXPONENTS: [f64; 5] = [1.0, 1.5, 2.0, 4.0, f64::INFINITY];
pub const BASES: [f64; 4] = [1.5, 2.0, std::f64::consts::E, 4.0];

pub fn solver() -> SolverConfig {
    SolverConfig {
        restarts: 0,
        max_iters: 20_000,
        ..SolverConfig::with_tol(TOL)
    }
}

pub fn pick<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> T {
    xs[rng.random_range(0..xs.len())]
}

/// Log-uniform weights in `[e^{-2}, e^2]`.
pub fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0f64..2.0).exp()).collect()
}

/// One of `0.25, 0.5, 0.75`, or uniform in `[0.1, 0.9]` a quarter of the time.
pub fn theta(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.25) {
        rng.random_range(0.1..0.9)
    } else {
        pick(rng, &[0.25, 0.5, 0.75])
    }
}

pub fn cvec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Random blocks on a random subset of `[-radius, radius]`, never empty.
pub fn seq(rng: &mut ChaCha8Rng, n: usize, radius: i64) -> SparseSeq {
    let mut s = SparseSeq::zero(n);
    for k in -radius..=radius {
        if rng.random_bool(0.6) {
            s.insert(k, cvec(rng, n));
        }
    }
    if s.is_empty() {
        s.insert(rng.random_range(-radius..=radius), cvec(rng, n));
    }
    s
}

pub fn lp_space(p: f64, w: Vec<f64>) -> Result<NormedSpace> {
    NormedSpace::weighted_lp(p, w)
}

pub fn lp_couple(rng: &mut ChaCha8Rng, n: usize, p0: f64, p1: f64) -> Result<Couple> {
    Couple::new(lp_space(p0, weights(rng, n))?, lp_space(p1, weights(rng, n))?)
}

pub fn problem(couple: Couple, s0: SeqStructSpec, s1: SeqStructSpec, theta: f64, base: f64) -> InterpProblem {
    let mut p = InterpProblem::new(couple, s0, s1, theta);
    p.base = base;
    p.window = WINDOW;
    p.solver = solver();
    p
}

pub fn sided(sides: [Vec<(SeqStructSpec, NormedSpace)>; 2], theta: f64, base: f64) -> SidedProblem {
    let [a, b] = sides.map(|side| {
        side.into_iter()
            .map(|(structure, space)| Term { structure, space })
            .collect::<Vec<_>>()
    });
    SidedProblem {
        sides: [a, b],
        theta,
        base,
        window: WINDOW,
        solver: solver(),
    }
}

/// Deterministic structures cheap enough for the solver at any dimension.
/// Exact Rademacher costs `2^width` per evaluation, so it is drawn rarely.
pub fn cheap_structure(rng: &mut ChaCha8Rng) -> SeqStructSpec {
    match rng.random_range(0..12) {
        0..=5 => SeqStructSpec::lp(pick(rng, &EXPONENTS)),
        6..=10 => SeqStructSpec::lattice(pick(rng, &EXPONENTS)),
        _ => SeqStructSpec::Rademacher {
            p: pick(rng, &[1.0, 2.0]),
            mode: Default::default(),
        },
    }
}

pub fn max_gap(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
