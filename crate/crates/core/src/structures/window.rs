//! Structure norms of sequences stored densely on a fixed index window,
//! with smoothed values and gradients for the solver.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{NormEstimate, RademacherMode, SeqStructSpec, ENUMERATION_LIMIT, NODES_PER_WIDTH};
use crate::error::{Error, Result};
use crate::spaces::{smooth_aggregate, NormedSpace, PExp, C64};

/// Exact evaluation uses the full node/sample budget; solver evaluation
/// uses a reduced, frozen approximation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Purpose {
    Exact,
    Solver,
}

const SOLVER_PATTERNS: usize = 4096;
const SOLVER_GAUSSIAN_SAMPLES: usize = 2048;
const SOLVER_NODES_PER_WIDTH: usize = 16;
const CI_BATCHES: usize = 20;

enum Coeffs {
    /// All sign patterns with the first sign fixed to +1.
    Signs,
    /// Row-major `count × width` table.
    Table(Vec<f64>),
}

enum Kind {
    Lp(PExp),
    Lattice(PExp),
    Fourier {
        p: PExp,
        nodes: usize,
        table: Vec<C64>,
    },
    Patterns {
        p: f64,
        count: usize,
        coeffs: Coeffs,
        /// `(E|c|^p)^{1/p}` so that a single block has its base norm.
        normalizer: f64,
        sampled: bool,
    },
}

pub(crate) struct WindowNorm {
    space: NormedSpace,
    n: usize,
    width: usize,
    weights: Vec<f64>,
    kind: Kind,
}

fn fourier_table(nodes: usize, width: usize) -> Vec<C64> {
    let mut t = Vec::with_capacity(nodes * width);
    for m in 0..nodes {
        let th = 2.0 * PI * m as f64 / nodes as f64;
        for k in 0..width {
            t.push(C64::from_polar(1.0, th * k as f64));
        }
    }
    t
}

fn gaussian_abs_moment(p: f64) -> f64 {
    // E|γ|^p = 2^{p/2} Γ((p+1)/2) / √π
    (p / 2.0 * 2f64.ln() + statrs::function::gamma::ln_gamma((p + 1.0) / 2.0) - 0.5 * PI.ln()).exp()
}

impl WindowNorm {
    /// Norm of `(weights[k]·x_{lo+k})` for blocks on `lo..=hi`.
    pub(crate) fn new(
        spec: &SeqStructSpec,
        space: &NormedSpace,
        lo: i64,
        hi: i64,
        weights: Vec<f64>,
        purpose: Purpose,
    ) -> Result<Self> {
        let width = (hi - lo + 1) as usize;
        debug_assert_eq!(weights.len(), width);
        let kind = match spec {
            SeqStructSpec::Lp { p } => Kind::Lp(*p),
            SeqStructSpec::LatticeLq { q } => Kind::Lattice(*q),
            SeqStructSpec::FourierLp { quad_nodes, .. } | SeqStructSpec::FourierC { quad_nodes } => {
                let p = match spec {
                    SeqStructSpec::FourierLp { p, .. } => PExp::Finite(*p),
                    _ => PExp::Inf,
                };
                let required = 4 * width;
                let nodes = match (purpose, quad_nodes) {
                    (Purpose::Exact, Some(q)) => {
                        if *q < required {
                            return Err(Error::QuadratureBudget { nodes: *q, width, required });
                        }
                        *q
                    }
                    (Purpose::Exact, None) => NODES_PER_WIDTH * width,
                    (Purpose::Solver, q) => {
                        let cap = SOLVER_NODES_PER_WIDTH * width;
                        q.map_or(cap, |q| q.min(cap)).max(required).max(16)
                    }
                };
                Kind::Fourier {
                    p,
                    nodes,
                    table: fourier_table(nodes, width),
                }
            }
            SeqStructSpec::Rademacher { p, mode } => {
                let patterns = |w: usize| if w < 63 { 1usize << w } else { usize::MAX };
                let (enumerate, samples, seed) = match (purpose, mode) {
                    (Purpose::Exact, RademacherMode::Exact) => {
                        if patterns(width) > ENUMERATION_LIMIT {
                            return Err(Error::EnumerationBudget { support: width });
                        }
                        (true, 0, 0)
                    }
                    (Purpose::Exact, RademacherMode::MonteCarlo { samples, seed }) => {
                        (patterns(width) <= (*samples).min(ENUMERATION_LIMIT), *samples, *seed)
                    }
                    (Purpose::Solver, mode) => {
                        let seed = match mode {
                            RademacherMode::MonteCarlo { seed, .. } => *seed,
                            RademacherMode::Exact => 0,
                        };
                        (patterns(width - 1) <= SOLVER_PATTERNS, SOLVER_PATTERNS, seed)
                    }
                };
                if enumerate {
                    Kind::Patterns {
                        p: *p,
                        count: 1usize << (width - 1),
                        coeffs: Coeffs::Signs,
                        normalizer: 1.0,
                        sampled: false,
                    }
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let table = (0..samples * width)
                        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                        .collect();
                    Kind::Patterns {
                        p: *p,
                        count: samples,
                        coeffs: Coeffs::Table(table),
                        normalizer: 1.0,
                        sampled: true,
                    }
                }
            }
            SeqStructSpec::Gaussian { p, samples, seed } => {
                let samples = if purpose == Purpose::Solver {
                    (*samples).min(SOLVER_GAUSSIAN_SAMPLES)
                } else {
                    *samples
                };
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let table = (0..samples * width).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                Kind::Patterns {
                    p: *p,
                    count: samples,
                    coeffs: Coeffs::Table(table),
                    normalizer: gaussian_abs_moment(*p).powf(1.0 / p),
                    sampled: true,
                }
            }
        };
        Ok(WindowNorm {
            space: space.clone(),
            n: space.dim,
            width,
            weights,
            kind,
        })
    }

    fn weighted(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut y = x.to_vec();
        for k in 0..self.width {
            let c = self.weights[k];
            if c != 1.0 {
                y[k * n..(k + 1) * n].iter_mut().for_each(|z| *z *= c);
            }
        }
        y
    }

    /// Smoothed norm at temperature `mu` (`mu = 0` is the unsmoothed value
    /// of this discretization); `grad` accumulates `scale·∇`.
    pub(crate) fn eval(&self, x: &[C64], mu: f64, grad: Option<(&mut [C64], f64)>) -> f64 {
        let n = self.n;
        let w = self.width;
        let y = self.weighted(x);
        match &self.kind {
            Kind::Lp(p) => {
                let mut a = vec![0.0; w];
                let mut gb = if grad.is_some() { vec![C64::new(0.0, 0.0); w * n] } else { Vec::new() };
                for k in 0..w {
                    let yk = &y[k * n..(k + 1) * n];
                    a[k] = if grad.is_some() {
                        self.space.smooth_norm(yk, mu, Some((&mut gb[k * n..(k + 1) * n], 1.0)))
                    } else {
                        self.space.smooth_norm(yk, mu, None)
                    };
                }
                let mut d = vec![0.0; w];
                let v = smooth_aggregate(*p, &a, mu, &mut d);
                if let Some((g, s)) = grad {
                    for k in 0..w {
                        let f = s * d[k] * self.weights[k];
                        for i in 0..n {
                            g[k * n + i] += gb[k * n + i] * f;
                        }
                    }
                }
                v
            }
            Kind::Lattice(q) => {
                let mut a = vec![0.0; w];
                let mut d = vec![0.0; w * n];
                let mut u = vec![C64::new(0.0, 0.0); n];
                let mut dcol = vec![0.0; w];
                for i in 0..n {
                    for k in 0..w {
                        let t = y[k * n + i].norm();
                        a[k] = if mu > 0.0 { t.hypot(mu) } else { t };
                    }
                    u[i] = C64::new(smooth_aggregate(*q, &a, mu, &mut dcol), 0.0);
                    for k in 0..w {
                        d[k * n + i] = dcol[k];
                    }
                }
                match grad {
                    None => self.space.smooth_norm(&u, mu, None),
                    Some((g, s)) => {
                        let mut h = vec![C64::new(0.0, 0.0); n];
                        let v = self.space.smooth_norm(&u, mu, Some((&mut h, 1.0)));
                        for k in 0..w {
                            let c = self.weights[k];
                            for i in 0..n {
                                let yk = y[k * n + i];
                                let ak = if mu > 0.0 { yk.norm().hypot(mu) } else { yk.norm() };
                                if ak > 0.0 {
                                    g[k * n + i] += yk * (s * h[i].re * d[k * n + i] * c / ak);
                                }
                            }
                        }
                        v
                    }
                }
            }
            Kind::Fourier { p, nodes, table } => {
                let coef = |m: usize, k: usize| table[m * w + k];
                self.combine(&y, *nodes, mu, grad, *p, 1.0, coef)
            }
            Kind::Patterns {
                p,
                count,
                coeffs,
                normalizer,
                ..
            } => match coeffs {
                Coeffs::Signs => {
                    let coef = |m: usize, k: usize| {
                        if k == 0 || (m >> (k - 1)) & 1 == 0 {
                            C64::new(1.0, 0.0)
                        } else {
                            C64::new(-1.0, 0.0)
                        }
                    };
                    self.combine(&y, *count, mu, grad, PExp::Finite(*p), *normalizer, coef)
                }
                Coeffs::Table(t) => {
                    let coef = |m: usize, k: usize| C64::new(t[m * w + k], 0.0);
                    self.combine(&y, *count, mu, grad, PExp::Finite(*p), *normalizer, coef)
                }
            },
        }
    }

    /// `(mean_m N(Σ_k c(m,k) y_k)^p)^{1/p} / normalizer`, or the max over `m`
    /// for `p = ∞`.
    #[allow(clippy::too_many_arguments)]
    fn combine(
        &self,
        y: &[C64],
        count: usize,
        mu: f64,
        grad: Option<(&mut [C64], f64)>,
        p: PExp,
        normalizer: f64,
        coef: impl Fn(usize, usize) -> C64,
    ) -> f64 {
        let n = self.n;
        let w = self.width;
        let mut vals = vec![0.0; count];
        let mut f = vec![C64::new(0.0, 0.0); n];
        let want = grad.is_some();
        let mut gf = if want { vec![C64::new(0.0, 0.0); count * n] } else { Vec::new() };
        for m in 0..count {
            f.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for k in 0..w {
                let c = coef(m, k);
                let yk = &y[k * n..(k + 1) * n];
                for i in 0..n {
                    f[i] += c * yk[i];
                }
            }
            vals[m] = if want {
                self.space.smooth_norm(&f, mu, Some((&mut gf[m * n..(m + 1) * n], 1.0)))
            } else {
                self.space.smooth_norm(&f, mu, None)
            };
        }
        let mut d = vec![0.0; count];
        let agg = smooth_aggregate(p, &vals, mu, &mut d);
        let mean_factor = match p {
            PExp::Inf => 1.0,
            PExp::Finite(p) => (count as f64).powf(-1.0 / p),
        };
        let v = agg * mean_factor / normalizer;
        if let Some((g, s)) = grad {
            let outer = s * mean_factor / normalizer;
            for m in 0..count {
                let dm = d[m] * outer;
                if dm == 0.0 {
                    continue;
                }
                let gm = &gf[m * n..(m + 1) * n];
                for k in 0..w {
                    let c = coef(m, k).conj() * (dm * self.weights[k]);
                    for i in 0..n {
                        g[k * n + i] += c * gm[i];
                    }
                }
            }
        }
        v
    }

    /// Exact value with an enclosing interval.
    pub(crate) fn estimate(&self, x: &[C64]) -> Result<NormEstimate> {
        let v = self.eval(x, 0.0, None);
        match &self.kind {
            Kind::Lp(_) | Kind::Lattice(_) => Ok(NormEstimate::exact(v)),
            Kind::Fourier { p: PExp::Finite(p), nodes, .. } => {
                let half = nodes / 2;
                if half < self.width {
                    return Ok(NormEstimate::exact(v));
                }
                let coarse = self.fourier_at(x, half, PExp::Finite(*p));
                let err = (v - coarse).abs();
                Ok(NormEstimate {
                    value: v,
                    lo: (v - err).max(0.0),
                    hi: v + err,
                })
            }
            Kind::Fourier { p: PExp::Inf, nodes, table } => {
                let best = self.refine_sup(x, *nodes, table, v);
                let degree = (self.width as f64 - 1.0) / 2.0;
                let ratio = PI * degree / *nodes as f64;
                let hi = if ratio < 1.0 { v / (1.0 - ratio) } else { f64::INFINITY };
                Ok(NormEstimate {
                    value: best,
                    lo: best,
                    hi: hi.max(best),
                })
            }
            Kind::Patterns { sampled: false, .. } => Ok(NormEstimate::exact(v)),
            Kind::Patterns {
                p,
                count,
                coeffs: Coeffs::Table(t),
                normalizer,
                sampled: true,
            } => Ok(self.monte_carlo_ci(x, *p, *count, t, *normalizer, v)),
            Kind::Patterns { .. } => Ok(NormEstimate::exact(v)),
        }
    }

    fn trig_value(&self, y: &[C64], t: f64) -> f64 {
        let n = self.n;
        let mut f = vec![C64::new(0.0, 0.0); n];
        for k in 0..self.width {
            let e = C64::from_polar(1.0, t * k as f64);
            for i in 0..n {
                f[i] += e * y[k * n + i];
            }
        }
        self.space.norm_unchecked(&f)
    }

    fn fourier_at(&self, x: &[C64], nodes: usize, p: PExp) -> f64 {
        let table = fourier_table(nodes, self.width);
        let w = self.width;
        let y = self.weighted(x);
        self.combine(&y, nodes, 0.0, None, p, 1.0, |m, k| table[m * w + k])
    }

    /// Golden-section refinement of the sup around the best grid nodes.
    fn refine_sup(&self, x: &[C64], nodes: usize, table: &[C64], grid_max: f64) -> f64 {
        let y = self.weighted(x);
        let n = self.n;
        let w = self.width;
        let mut vals: Vec<(f64, usize)> = (0..nodes)
            .map(|m| {
                let mut f = vec![C64::new(0.0, 0.0); n];
                for k in 0..w {
                    for i in 0..n {
                        f[i] += table[m * w + k] * y[k * n + i];
                    }
                }
                (self.space.norm_unchecked(&f), m)
            })
            .collect();
        vals.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let h = 2.0 * PI / nodes as f64;
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut best = grid_max;
        for &(_, m) in vals.iter().take(3) {
            let (mut a, mut b) = (m as f64 * h - h, m as f64 * h + h);
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            let (mut fc, mut fd) = (self.trig_value(&y, c), self.trig_value(&y, d));
            for _ in 0..60 {
                if fc > fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = self.trig_value(&y, c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = self.trig_value(&y, d);
                }
            }
            best = best.max(fc).max(fd);
        }
        best
    }

    /// 99% confidence interval from batch means of `N^p`.
    fn monte_carlo_ci(&self, x: &[C64], p: f64, count: usize, t: &[f64], normalizer: f64, v: f64) -> NormEstimate {
        let n = self.n;
        let w = self.width;
        let y = self.weighted(x);
        let mut f = vec![C64::new(0.0, 0.0); n];
        let mut powers = Vec::with_capacity(count);
        for m in 0..count {
            f.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for k in 0..w {
                let c = t[m * w + k];
                for i in 0..n {
                    f[i] += y[k * n + i] * c;
                }
            }
            powers.push((self.space.norm_unchecked(&f) / normalizer).powf(p));
        }
        let batches = CI_BATCHES.min(count);
        let size = count / batches;
        let means: Vec<f64> = (0..batches)
            .map(|b| powers[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
            .collect();
        let mean = powers.iter().sum::<f64>() / count as f64;
        let bm = means.iter().sum::<f64>() / batches as f64;
        let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (batches as f64 - 1.0).max(1.0);
        let z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.995);
        let half = z * (var / batches as f64).sqrt();
        NormEstimate {
            value: v,
            lo: (mean - half).max(0.0).powf(1.0 / p),
            hi: (mean + half).powf(1.0 / p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grad_check(spec: SeqStructSpec, purpose: Purpose) {
        let space = NormedSpace::weighted_lp(1.5, vec![0.7, 1.9]).unwrap();
        let weights = vec![0.5, 1.0, 2.0];
        let wn = WindowNorm::new(&spec, &space, -1, 1, weights, purpose).unwrap();
        let x: Vec<C64> = (0..6).map(|i| C64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos())).collect();
        let mu = 0.05;
        let mut g = vec![C64::new(0.0, 0.0); 6];
        wn.eval(&x, mu, Some((&mut g, 1.0)));
        let h = 1e-6;
        for j in 0..6 {
            for dir in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                let mut a = x.clone();
                let mut b = x.clone();
                a[j] += dir * h;
                b[j] -= dir * h;
                let fd = (wn.eval(&a, mu, None) - wn.eval(&b, mu, None)) / (2.0 * h);
                let an = (g[j].conj() * dir).re;
                assert!((fd - an).abs() < 1e-5, "{} j={j} fd={fd} an={an}", spec.label());
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for spec in [
            SeqStructSpec::lp(1.0),
            SeqStructSpec::lp(3.0),
            SeqStructSpec::lp(f64::INFINITY),
            SeqStructSpec::lattice(1.0),
            SeqStructSpec::lattice(2.0),
            SeqStructSpec::lattice(f64::INFINITY),
            SeqStructSpec::fourier(1.0),
            SeqStructSpec::fourier(f64::INFINITY),
            SeqStructSpec::Rademacher { p: 1.5, mode: RademacherMode::Exact },
            SeqStructSpec::Gaussian { p: 1.0, samples: 200, seed: 1 },
        ] {
            grad_check(spec, Purpose::Solver);
        }
    }

    #[test]
    fn gaussian_moment_normalization() {
        assert!((gaussian_abs_moment(2.0) - 1.0).abs() < 1e-12);
        assert!((gaussian_abs_moment(1.0) - (2.0 / PI).sqrt()).abs() < 1e-12);
    }
}
