//! Self-adaptive Tseng extragradient iteration.
//!
//! Each step computes
//!
//! ```text
//! z_n     = P_C(u_n − λ_n F(u_n))                      (relaxed sets anchor at u_n)
//! u_{n+1} = z_n + λ_n (F(u_n) − F(z_n))
//! λ_{n+1} = min{ μ‖u_n − z_n‖ / ‖F(u_n) − F(z_n)‖, λ_n + ξ_n }   if F(u_n) ≠ F(z_n)
//!         = λ_n + ξ_n                                            otherwise
//! ```
//!
//! with `ξ_n = a / (n + 1)^p`, `p > 1`. The step sequence stays inside
//! `[min{λ₁, μ/L}, λ₁ + Σξ]`.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::geometry::{FeasibleSet, ProjectionContext};
use crate::linalg::{all_finite, dist, dist_sq, norm, sub};
use crate::operators::Operator;

/// Summable step perturbation `ξ_n = scale / (n + 1)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiSequence {
    pub scale: f64,
    pub exponent: f64,
}

impl XiSequence {
    pub fn new(scale: f64, exponent: f64) -> Result<Self> {
        let xi = Self { scale, exponent };
        xi.validate()?;
        Ok(xi)
    }

    /// `ξ_n ≡ 0`: the step can only shrink.
    pub fn zero() -> Self {
        Self {
            scale: 0.0,
            exponent: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return Err(Error::input(format!(
                "xi scale must be finite and nonnegative, got {}",
                self.scale
            )));
        }
        if !(self.exponent > 1.0 && self.exponent.is_finite()) {
            return Err(Error::input(format!(
                "xi exponent must exceed 1 for summability, got {}",
                self.exponent
            )));
        }
        Ok(())
    }

    pub fn value(&self, n: usize) -> f64 {
        xi(n, self)
    }

    /// `Σ_{k=1}^{n} ξ_k`
    pub fn partial_sum(&self, n: usize) -> f64 {
        (1..=n).map(|k| self.value(k)).sum()
    }

    /// Upper bound on `Σ_{k≥1} ξ_k`: the partial sum to `n` plus the tail
    /// bound `a·p / ((p − 1)(n + 1)^{p−1})`.
    pub fn total_bound(&self, n: usize) -> f64 {
        let (a, p) = (self.scale, self.exponent);
        self.partial_sum(n) + a * p / ((p - 1.0) * ((n + 1) as f64).powf(p - 1.0))
    }
}

/// `ξ_n = a / (n + 1)^p`, `n ≥ 1`.
pub fn xi(n: usize, params: &XiSequence) -> f64 {
    if params.scale == 0.0 {
        return 0.0;
    }
    params.scale / ((n + 1) as f64).powf(params.exponent)
}

/// When to stop. Every rule except `ExactTermination` is checked on
/// `u_{n+1}` after the full step (including the step-size update).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoppingRule {
    /// `‖u_{n+1} − u_n‖² < tol`
    SquaredStep { tol: f64 },
    /// `‖u_{n+1} − u_n‖ < tol`
    StepNorm { tol: f64 },
    /// `‖u_n − z_n‖ ≤ tol_z` or `‖F(z_n)‖ ≤ tol_z`, checked right after the
    /// projection; the returned point is `z_n`.
    ExactTermination { tol_z: f64 },
    /// `‖u_{n+1} − u*‖² / N < tol`
    MseToReference { reference: Vec<f64>, tol: f64 },
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            StoppingRule::SquaredStep { tol }
            | StoppingRule::StepNorm { tol }
            | StoppingRule::MseToReference { tol, .. } => *tol > 0.0,
            StoppingRule::ExactTermination { tol_z } => *tol_z >= 0.0,
        };
        if !ok {
            return Err(Error::input(format!(
                "invalid stopping tolerance in {self:?}"
            )));
        }
        Ok(())
    }

    fn step_error(&self, u: &[f64], u_next: &[f64]) -> f64 {
        match self {
            StoppingRule::SquaredStep { .. } => dist_sq(u_next, u),
            StoppingRule::StepNorm { .. } => dist(u_next, u),
            StoppingRule::MseToReference { reference, .. } => {
                dist_sq(u_next, reference) / u_next.len().max(1) as f64
            }
            StoppingRule::ExactTermination { .. } => f64::NAN,
        }
    }

    fn tol(&self) -> f64 {
        match self {
            StoppingRule::SquaredStep { tol }
            | StoppingRule::StepNorm { tol }
            | StoppingRule::MseToReference { tol, .. } => *tol,
            StoppingRule::ExactTermination { tol_z } => *tol_z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceLevel {
    Final,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda1: f64,
    pub mu: f64,
    pub xi: XiSequence,
    pub stop: StoppingRule,
    pub max_iters: usize,
    pub trace_level: TraceLevel,
}

impl SolverConfig {
    pub fn new(
        lambda1: f64,
        mu: f64,
        xi: XiSequence,
        stop: StoppingRule,
        max_iters: usize,
    ) -> Result<Self> {
        let cfg = Self {
            lambda1,
            mu,
            xi,
            stop,
            max_iters,
            trace_level: TraceLevel::Final,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_trace(mut self, level: TraceLevel) -> Self {
        self.trace_level = level;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 > 0.0 && self.lambda1.is_finite()) {
            return Err(Error::input(format!(
                "lambda1 must be positive, got {}",
                self.lambda1
            )));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::input(format!(
                "mu must lie in (0, 1), got {}",
                self.mu
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::input("max_iters must be positive"));
        }
        self.xi.validate()?;
        self.stop.validate()
    }
}

/// One executed step.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub n: usize,
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub u_next: Vec<f64>,
    /// `λ_n`, the step used in this iteration.
    pub lambda: f64,
    pub lambda_next: f64,
    pub xi: f64,
    pub error: f64,
    /// `‖u_n − z_n‖`
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
}

impl SolveTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `λ_1, …, λ_{n+1}`
    pub fn lambdas(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.records.iter().map(|r| r.lambda).collect();
        if let Some(last) = self.records.last() {
            out.push(last.lambda_next);
        }
        out
    }

    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.error).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    TerminatedExact,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub final_point: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub final_lambda: f64,
    pub wall_time: Duration,
    pub trace: Option<SolveTrace>,
}

/// Step-size update; the "otherwise" branch covers `F(u_n) = F(z_n)`.
pub fn update_stepsize(
    lambda: f64,
    xi_n: f64,
    u: &[f64],
    z: &[f64],
    fu: &[f64],
    fz: &[f64],
    mu: f64,
) -> f64 {
    let grown = lambda + xi_n;
    let df = norm(&sub(fu, fz));
    if df > 0.0 {
        (mu * dist(u, z) / df).min(grown)
    } else {
        grown
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsengStep {
    pub z: Vec<f64>,
    pub u_next: Vec<f64>,
    pub lambda_next: f64,
    pub xi: f64,
    pub fu: Vec<f64>,
    pub fz: Vec<f64>,
}

fn eval_checked(f: &dyn Operator, x: &[f64], n: usize, what: &str) -> Result<Vec<f64>> {
    let v = f.apply(x)?;
    if !all_finite(&v) {
        return Err(Error::numeric(n, format!("non-finite value of F({what})")));
    }
    Ok(v)
}

/// One iteration from `u_n` with step `λ_n`.
pub fn tseng_step(
    u: &[f64],
    lambda: f64,
    f: &dyn Operator,
    set: &FeasibleSet,
    n: usize,
    cfg: &SolverConfig,
) -> Result<TsengStep> {
    let fu = eval_checked(f, u, n, "u_n")?;
    let trial: Vec<f64> = u.iter().zip(&fu).map(|(ui, fi)| ui - lambda * fi).collect();
    let ctx = set.needs_context().then(|| ProjectionContext::new(u));
    let z = set.project(&trial, ctx.as_ref())?;
    let fz = eval_checked(f, &z, n, "z_n")?;
    let u_next: Vec<f64> = z
        .iter()
        .zip(fu.iter().zip(&fz))
        .map(|(zi, (a, b))| zi + lambda * (a - b))
        .collect();
    let xi_n = xi(n, &cfg.xi);
    let lambda_next = update_stepsize(lambda, xi_n, u, &z, &fu, &fz, cfg.mu);
    if !all_finite(&u_next) || !lambda_next.is_finite() {
        return Err(Error::numeric(n, "non-finite iterate"));
    }
    Ok(TsengStep {
        z,
        u_next,
        lambda_next,
        xi: xi_n,
        fu,
        fz,
    })
}

/// Runs the iteration from `u1` until the stopping rule fires or
/// `cfg.max_iters` steps have executed.
pub fn solve(
    f: &dyn Operator,
    set: &FeasibleSet,
    u1: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    check_dims("initial point", f.dim(), u1.len())?;
    if let FeasibleSet::Box(b) = set {
        check_dims("feasible set", f.dim(), b.dim())?;
    }
    if let StoppingRule::MseToReference { reference, .. } = &cfg.stop {
        check_dims("reference point", f.dim(), reference.len())?;
    }
    if !all_finite(u1) {
        return Err(Error::input("initial point must be finite"));
    }

    let start = Instant::now();
    let keep = cfg.trace_level == TraceLevel::Full;
    let mut trace = SolveTrace::default();
    let mut u = u1.to_vec();
    let mut lambda = cfg.lambda1;
    let tol = cfg.stop.tol();

    for n in 1..=cfg.max_iters {
        let step = tseng_step(&u, lambda, f, set, n, cfg)?;
        let residual = dist(&u, &step.z);

        if let StoppingRule::ExactTermination { tol_z } = cfg.stop {
            let error = residual.min(norm(&step.fz));
            let done = error <= tol_z;
            if keep {
                trace.records.push(IterationRecord {
                    n,
                    u: u.clone(),
                    z: step.z.clone(),
                    u_next: step.u_next.clone(),
                    lambda,
                    lambda_next: step.lambda_next,
                    xi: step.xi,
                    error,
                    residual,
                });
            }
            if done {
                return Ok(SolveResult {
                    final_point: step.z,
                    iterations: n,
                    status: SolveStatus::TerminatedExact,
                    final_lambda: lambda,
                    wall_time: start.elapsed(),
                    trace: keep.then_some(trace),
                });
            }
            u = step.u_next;
            lambda = step.lambda_next;
            continue;
        }

        let error = cfg.stop.step_error(&u, &step.u_next);
        if keep {
            trace.records.push(IterationRecord {
                n,
                u: std::mem::take(&mut u),
                z: step.z,
                u_next: step.u_next.clone(),
                lambda,
                lambda_next: step.lambda_next,
                xi: step.xi,
                error,
                residual,
            });
        }
        u = step.u_next;
        lambda = step.lambda_next;
        if error < tol {
            return Ok(SolveResult {
                final_point: u,
                iterations: n,
                status: SolveStatus::Converged,
                final_lambda: lambda,
                wall_time: start.elapsed(),
                trace: keep.then_some(trace),
            });
        }
    }

    Ok(SolveResult {
        final_point: u,
        iterations: cfg.max_iters,
        status: SolveStatus::MaxIters,
        final_lambda: lambda,
        wall_time: start.elapsed(),
        trace: keep.then_some(trace),
    })
}
