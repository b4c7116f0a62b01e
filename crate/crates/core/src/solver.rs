//! First-order minimization of smoothed convex objectives.
//!
//! Nonsmooth objectives (max of norms, ℓ¹/ℓ^∞ aggregates) are replaced by
//! smooth surrogates at a temperature `μ` that is driven to zero along a
//! schedule. Each stage runs accelerated gradient descent with backtracking
//! and function-value restarts. The exact objective is tracked so the result
//! is always the best feasible point seen.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::C64;

/// A convex objective over `dim()` complex variables.
pub trait SmoothObjective: Sync {
    fn dim(&self) -> usize;
    /// Smoothed value at temperature `mu` (in objective units). When `grad` is
    /// given it is overwritten with `∂/∂Re + i∂/∂Im`.
    fn eval_smooth(&self, z: &[C64], mu: f64, grad: Option<&mut [C64]>) -> f64;
    fn eval_exact(&self, z: &[C64]) -> f64;
    /// Typical objective magnitude; temperatures are relative to it.
    fn scale(&self) -> f64;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Relative temperatures, strictly decreasing, ending below `rel_tol`.
    pub smoothing_schedule: Vec<f64>,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::with_tol(1e-7)
    }
}

impl SolverConfig {
    /// Default settings with the schedule `0.05·2^{-i}` halved until below `rel_tol`.
    pub fn with_tol(rel_tol: f64) -> Self {
        SolverConfig {
            rel_tol,
            max_iters: 50_000,
            smoothing_schedule: halving_schedule(rel_tol),
            restarts: 4,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidInput("rel_tol must be positive".into()));
        }
        let s = &self.smoothing_schedule;
        if s.is_empty() || s.windows(2).any(|w| w[1] >= w[0]) || s.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidInput(
                "smoothing schedule must be positive and strictly decreasing".into(),
            ));
        }
        if *s.last().unwrap() >= self.rel_tol {
            return Err(Error::InvalidInput(
                "smoothing schedule must end below rel_tol".into(),
            ));
        }
        Ok(())
    }

    /// Copy with a different tolerance and a matching schedule.
    pub fn tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.smoothing_schedule = halving_schedule(rel_tol);
        self
    }
}

pub fn halving_schedule(rel_tol: f64) -> Vec<f64> {
    let mut s = vec![0.05];
    while *s.last().unwrap() >= rel_tol {
        let t = s.last().unwrap() * 0.5;
        s.push(t);
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub z: Vec<C64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize from the best of `starts`, plus `cfg.restarts` seeded
/// perturbations of it. Results are merged by minimum exact value with ties
/// resolved by run index, so the outcome does not depend on scheduling.
pub fn minimize(obj: &dyn SmoothObjective, starts: &[Vec<C64>], cfg: &SolverConfig) -> Minimum {
    let n = obj.dim();
    let zero = vec![C64::new(0.0, 0.0); n];
    let (start, start_val) = starts
        .iter()
        .map(|s| (s, obj.eval_exact(s)))
        .fold((&zero, f64::INFINITY), |acc, (s, v)| if v < acc.1 { (s, v) } else { acc });
    let start = start.clone();
    if n == 0 {
        return Minimum {
            z: start,
            value: start_val,
            iterations: 0,
            converged: true,
        };
    }
    let scale = obj.scale().max(1e-300);
    let mut inits = vec![start.clone()];
    let radius = (start.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64).sqrt();
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(r as u64 + 1)));
        let amp = 0.3 * radius.max(1e-12);
        inits.push(
            start
                .iter()
                .map(|z| z + C64::new(rng.random_range(-amp..amp), rng.random_range(-amp..amp)))
                .collect(),
        );
    }
    let runs: Vec<Minimum> = inits
        .into_par_iter()
        .map(|z0| run_schedule(obj, z0, scale, cfg))
        .collect();
    let mut best = Minimum {
        z: start,
        value: start_val,
        iterations: 0,
        converged: false,
    };
    let mut total = 0;
    let mut any_converged = false;
    for r in runs {
        total += r.iterations;
        any_converged |= r.converged;
        if r.value < best.value {
            best.z = r.z;
            best.value = r.value;
        }
    }
    best.iterations = total;
    best.converged = any_converged;
    best
}

fn run_schedule(obj: &dyn SmoothObjective, z0: Vec<C64>, scale: f64, cfg: &SolverConfig) -> Minimum {
    let mut z = z0;
    let mut best_z = z.clone();
    let mut best = obj.eval_exact(&z);
    let stages = cfg.smoothing_schedule.len();
    let mut used = 0;
    let mut lip = 0.0;
    let mut converged = false;
    for (i, &t) in cfg.smoothing_schedule.iter().enumerate() {
        let budget = (cfg.max_iters - used) / (stages - i);
        let mu = t * scale;
        if lip == 0.0 {
            lip = 1.0 / mu;
        }
        let (iters, stalled, l) = accelerated(obj, &mut z, mu, budget.max(1), cfg.rel_tol * scale, lip);
        lip = l;
        used += iters;
        converged = stalled;
        let v = obj.eval_exact(&z);
        if v < best {
            best = v;
            best_z.clone_from(&z);
        }
        if best == 0.0 {
            converged = true;
            break;
        }
    }
    Minimum {
        z: best_z,
        value: best,
        iterations: used,
        converged,
    }
}

fn axpy(out: &mut [C64], x: &[C64], a: f64, y: &[C64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + yi * a;
    }
}

/// Accelerated gradient with backtracking on the smoothed objective. Returns
/// (iterations, stalled, final Lipschitz estimate).
fn accelerated(
    obj: &dyn SmoothObjective,
    z: &mut Vec<C64>,
    mu: f64,
    budget: usize,
    abs_tol: f64,
    lip0: f64,
) -> (usize, bool, f64) {
    let n = z.len();
    let mut x = z.clone();
    let mut y = z.clone();
    let mut gy = vec![C64::new(0.0, 0.0); n];
    let mut xn = vec![C64::new(0.0, 0.0); n];
    let mut fx = obj.eval_smooth(&x, mu, None);
    let mut t = 1.0f64;
    let mut lip = lip0.max(1e-300);
    let mut history: Vec<f64> = Vec::with_capacity(budget);
    let window = 10;
    for it in 0..budget {
        let fy = obj.eval_smooth(&y, mu, Some(&mut gy));
        let gnorm2: f64 = gy.iter().map(|g| g.norm_sqr()).sum();
        if gnorm2 == 0.0 {
            *z = y;
            return (it + 1, true, lip);
        }
        let mut fxn;
        let mut tries = 0;
        loop {
            axpy(&mut xn, &y, -1.0 / lip, &gy);
            fxn = obj.eval_smooth(&xn, mu, None);
            if fxn <= fy - gnorm2 / (2.0 * lip) * 0.999 + 1e-15 * fy.abs() || tries > 60 {
                break;
            }
            lip *= 2.0;
            tries += 1;
        }
        if fxn > fx {
            // Restart momentum from the last accepted point.
            t = 1.0;
            y.clone_from(&x);
            lip *= 0.9;
            history.push(fx);
        } else {
            let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / tn;
            for i in 0..n {
                y[i] = xn[i] + (xn[i] - x[i]) * beta;
            }
            std::mem::swap(&mut x, &mut xn);
            fx = fxn;
            t = tn;
            lip *= 0.95;
            history.push(fx);
        }
        if history.len() > window {
            let old = history[history.len() - 1 - window];
            if old - fx <= 0.1 * abs_tol {
                *z = x;
                return (it + 1, true, lip);
            }
        }
    }
    *z = x;
    (budget, false, lip)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// max(|z - 1|, |2z + 1|) over scalar z: minimum at z = 0 with value 1.
    struct Kink;
    impl SmoothObjective for Kink {
        fn dim(&self) -> usize {
            1
        }
        fn eval_smooth(&self, z: &[C64], mu: f64, grad: Option<&mut [C64]>) -> f64 {
            let a = z[0] - 1.0;
            let b = z[0] * 2.0 + 1.0;
            let na = a.norm().hypot(mu);
            let nb = b.norm().hypot(mu);
            let m = na.max(nb);
            let ea = ((na - m) / mu).exp();
            let eb = ((nb - m) / mu).exp();
            if let Some(g) = grad {
                g[0] = (a / na * ea + b * 2.0 / nb * eb) / (ea + eb);
            }
            m + mu * (ea + eb).ln()
        }
        fn eval_exact(&self, z: &[C64]) -> f64 {
            (z[0] - 1.0).norm().max((z[0] * 2.0 + 1.0).norm())
        }
        fn scale(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn minimizes_a_kinked_max() {
        let cfg = SolverConfig::with_tol(1e-7);
        let m = minimize(&Kink, &[vec![C64::new(3.0, 2.0)]], &cfg);
        assert!((m.value - 1.0).abs() < 1e-5, "{}", m.value);
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = SolverConfig::with_tol(1e-6);
        let a = minimize(&Kink, &[vec![C64::new(3.0, 2.0)]], &cfg);
        let b = minimize(&Kink, &[vec![C64::new(3.0, 2.0)]], &cfg);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.z, b.z);
    }

    #[test]
    fn schedule_validation() {
        let mut cfg = SolverConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.smoothing_schedule = vec![0.1, 0.2];
        assert!(cfg.validate().is_err());
        cfg.smoothing_schedule = vec![0.1, 0.01];
        assert!(cfg.validate().is_err());
    }
}
