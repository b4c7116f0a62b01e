//! Problem files, schema "v1".
//!
//! ```json
//! {
//!   "schema": "v1",
//!   "space": {"dim": 2, "norm_spec": {"kind": "weighted_lp", "p": 2, "weights": [1, 1]}},
//!   "couple": {"space0": {...}, "space1": {...}},
//!   "structure": {"kind": "lp", "p": 2},
//!   "struct0": {...}, "struct1": {...},
//!   "theta": 0.5, "base": 2.718281828, "window": 8, "solver": {"rel_tol": 1e-7},
//!   "x": [3, 4]                              // or {"re": [...], "im": [...]}
//!   "seq": {"dim": 2, "entries": [{"k": 0, "re": [1, 0], "im": [0, 0]}]},
//!   "t": 1.0
//! }
//! ```
//!
//! Every field except `schema` is optional; each command names the fields it
//! needs.

use interp_core::engine::DEFAULT_WINDOW;
use interp_core::{Couple, InterpProblem, NormedSpace, SeqStructSpec, SolverConfig, SparseSeq, C64};
use serde::Deserialize;

use crate::UsageError;

pub const SCHEMA: &str = "v1";

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Vector {
    Real(Vec<f64>),
    Complex {
        re: Vec<f64>,
        #[serde(default)]
        im: Vec<f64>,
    },
}

impl Vector {
    pub fn to_c64(&self) -> Result<Vec<C64>, UsageError> {
        match self {
            Vector::Real(v) => Ok(v.iter().map(|&a| C64::new(a, 0.0)).collect()),
            Vector::Complex { re, im } if im.is_empty() => Ok(re.iter().map(|&a| C64::new(a, 0.0)).collect()),
            Vector::Complex { re, im } if im.len() == re.len() => {
                Ok(re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect())
            }
            Vector::Complex { .. } => Err(UsageError("field `x`: re and im lengths differ".into())),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema: String,
    pub space: Option<NormedSpace>,
    pub couple: Option<Couple>,
    pub structure: Option<SeqStructSpec>,
    pub struct0: Option<SeqStructSpec>,
    pub struct1: Option<SeqStructSpec>,
    pub theta: Option<f64>,
    pub base: Option<f64>,
    pub window: Option<i64>,
    pub solver: Option<SolverConfig>,
    pub x: Option<Vector>,
    pub seq: Option<SparseSeq>,
    pub t: Option<f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub theta: Option<f64>,
    pub base: Option<f64>,
    pub window: Option<i64>,
    pub solver_tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
}

fn missing(field: &str) -> UsageError {
    UsageError(format!("problem file is missing field `{field}`"))
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, UsageError> {
        let f: ProblemFile =
            serde_json::from_str(text).map_err(|e| UsageError(format!("malformed problem file: {e}")))?;
        if f.schema != SCHEMA {
            return Err(UsageError(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                f.schema
            )));
        }
        Ok(f)
    }

    pub fn space(&self) -> Result<&NormedSpace, UsageError> {
        self.space.as_ref().ok_or_else(|| missing("space"))
    }

    pub fn couple(&self) -> Result<&Couple, UsageError> {
        self.couple.as_ref().ok_or_else(|| missing("couple"))
    }

    pub fn structure(&self) -> Result<&SeqStructSpec, UsageError> {
        self.structure.as_ref().ok_or_else(|| missing("structure"))
    }

    pub fn seq(&self) -> Result<&SparseSeq, UsageError> {
        self.seq.as_ref().ok_or_else(|| missing("seq"))
    }

    pub fn x(&self) -> Result<Vec<C64>, UsageError> {
        self.x.as_ref().ok_or_else(|| missing("x"))?.to_c64()
    }

    pub fn theta(&self, o: &Overrides) -> Result<f64, UsageError> {
        o.theta.or(self.theta).ok_or_else(|| missing("theta"))
    }

    pub fn solver(&self, o: &Overrides) -> SolverConfig {
        let mut cfg = self.solver.clone().unwrap_or_default();
        if let Some(tol) = o.solver_tol {
            let keep = cfg.clone();
            cfg = SolverConfig {
                max_iters: keep.max_iters,
                restarts: keep.restarts,
                seed: keep.seed,
                ..SolverConfig::with_tol(tol)
            };
        }
        if let Some(m) = o.max_iters {
            cfg.max_iters = m;
        }
        if let Some(r) = o.restarts {
            cfg.restarts = r;
        }
        if let Some(s) = o.seed {
            cfg.seed = s;
        }
        cfg
    }

    pub fn problem(&self, o: &Overrides) -> Result<InterpProblem, UsageError> {
        let couple = self.couple()?.clone();
        let s0 = self.struct0.clone().ok_or_else(|| missing("struct0"))?;
        let s1 = self.struct1.clone().ok_or_else(|| missing("struct1"))?;
        let mut p = InterpProblem::new(couple, s0, s1, self.theta(o)?);
        if let Some(b) = o.base.or(self.base) {
            p.base = b;
        }
        p.window = o.window.or(self.window).unwrap_or(DEFAULT_WINDOW);
        p.solver = self.solver(o);
        Ok(p)
    }
}
