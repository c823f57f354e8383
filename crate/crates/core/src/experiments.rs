//! Reproducible experiment runners: scalar tables for the cubic and sine
//! mappings, and sparse signal recovery over an l1 ball.

use std::thread;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{a5_ratio_series, RatioSeries};
use crate::error::{check_dims, Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::{dist_sq, norm1, Matrix};
use crate::operators::Mapping;
use crate::solver::{
    solve, SolveResult, SolveStatus, SolverConfig, StoppingRule, TraceLevel, XiSequence,
};

/// Final points within this distance of a known solution are reported as that solution.
pub const LIMIT_SNAP: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleId {
    /// `F(z) = (1 − |z|) z` on `[−1, 1]`
    Cubic,
    /// `F(z) = 1 + sin z` on `[0, ∞)`
    Sine,
    /// piecewise quadratic on `[−1, 1]`
    Piecewise,
}

impl ExampleId {
    pub fn mapping(self) -> Mapping {
        match self {
            ExampleId::Cubic => Mapping::cubic_quasi(),
            ExampleId::Sine => Mapping::sine_plus_one(),
            ExampleId::Piecewise => Mapping::piecewise_quad(),
        }
    }

    pub fn feasible_set(self) -> FeasibleSet {
        match self {
            ExampleId::Cubic | ExampleId::Piecewise => FeasibleSet::interval(-1.0, 1.0),
            ExampleId::Sine => FeasibleSet::interval(0.0, f64::INFINITY),
        }
        .expect("static bounds are valid")
    }
}

/// How the step error of a table run is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepCriterion {
    /// `‖u_{n+1} − u_n‖ < tol`; reproduces the published iteration counts.
    Norm,
    /// `‖u_{n+1} − u_n‖² < tol`
    Squared,
}

impl StepCriterion {
    pub fn rule(self, tol: f64) -> StoppingRule {
        match self {
            StepCriterion::Norm => StoppingRule::StepNorm { tol },
            StepCriterion::Squared => StoppingRule::SquaredStep { tol },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPoint {
    Fixed(f64),
    /// Uniform on `[−1, 1]` from a seeded generator.
    Random {
        seed: u64,
    },
}

impl InitialPoint {
    pub fn value(self) -> f64 {
        match self {
            InitialPoint::Fixed(v) => v,
            InitialPoint::Random { seed } => {
                ChaCha8Rng::seed_from_u64(seed).random_range(-1.0..=1.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableSpec {
    pub example: ExampleId,
    pub starts: Vec<InitialPoint>,
    pub lambda1: f64,
    pub mu: f64,
    pub xi: XiSequence,
    pub tolerances: Vec<f64>,
    pub max_iters: usize,
    pub criterion: StepCriterion,
}

impl TableSpec {
    /// Cubic mapping: `λ₁ = 1`, `μ = 0.3`, `ξ_n = 100/(n+1)^1.1`, 500 iterations.
    pub fn cubic() -> Self {
        Self {
            example: ExampleId::Cubic,
            starts: [0.6, 0.9, 2.0, 3.0, -3.0]
                .into_iter()
                .map(InitialPoint::Fixed)
                .collect(),
            lambda1: 1.0,
            mu: 0.3,
            xi: XiSequence {
                scale: 100.0,
                exponent: 1.1,
            },
            tolerances: vec![1e-6, 1e-8],
            max_iters: 500,
            criterion: StepCriterion::Norm,
        }
    }

    /// Sine mapping: as [`TableSpec::cubic`] with `μ = 0.5`.
    pub fn sine() -> Self {
        Self {
            example: ExampleId::Sine,
            starts: [2.0, 0.1, -0.5, 4.0, -2.0]
                .into_iter()
                .map(InitialPoint::Fixed)
                .collect(),
            mu: 0.5,
            ..Self::cubic()
        }
    }

    pub fn config(&self, tol: f64) -> Result<SolverConfig> {
        SolverConfig::new(
            self.lambda1,
            self.mu,
            self.xi,
            self.criterion.rule(tol),
            self.max_iters,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub u1: f64,
    pub tol: f64,
    pub iterations: usize,
    pub cpu_seconds: f64,
    /// Nearest known solution within [`LIMIT_SNAP`], else the raw final point.
    pub limit: f64,
    pub status: SolveStatus,
}

/// One solve per (start × tolerance), in that order.
pub fn run_example_table(spec: &TableSpec) -> Result<Vec<TableRow>> {
    if spec.starts.is_empty() || spec.tolerances.is_empty() {
        return Err(Error::input(
            "table needs at least one start and one tolerance",
        ));
    }
    let f = spec.example.mapping();
    let set = spec.example.feasible_set();
    let mut rows = Vec::with_capacity(spec.starts.len() * spec.tolerances.len());
    for start in &spec.starts {
        let u1 = start.value();
        for &tol in &spec.tolerances {
            let r = solve(&f, &set, &[u1], &spec.config(tol)?)?;
            let limit = f
                .nearest_known_solution(&r.final_point, LIMIT_SNAP)
                .map_or(r.final_point[0], |s| s[0]);
            rows.push(TableRow {
                u1,
                tol,
                iterations: r.iterations,
                cpu_seconds: r.wall_time.as_secs_f64(),
                limit,
                status: r.status,
            });
        }
    }
    Ok(rows)
}

/// Noise-free compressed sensing problem `y = T u*` with a `K`-sparse `±1` signal.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryInstance {
    pub t: Matrix,
    pub u_star: Vec<f64>,
    pub y: Vec<f64>,
    /// l1 radius, equal to `K`.
    pub omega: f64,
    pub k: usize,
    pub seed: u64,
}

impl RecoveryInstance {
    pub fn mapping(&self) -> Result<Mapping> {
        Ok(Mapping::least_squares(self.t.clone(), self.y.clone())?
            .with_known_solutions(vec![self.u_star.clone()], vec![self.u_star.clone()]))
    }

    pub fn feasible_set(&self) -> Result<FeasibleSet> {
        FeasibleSet::relaxed_l1_ball(self.omega)
    }
}

/// `T` has i.i.d. standard normal entries (drawn row-major first), then `K`
/// support positions are drawn without replacement and each gets `±1` with
/// equal probability.
pub fn gen_recovery(m: usize, n: usize, k: usize, seed: u64) -> Result<RecoveryInstance> {
    if k > n {
        return Err(Error::input(format!("K = {k} exceeds N = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
    let t = Matrix::from_row_major(m, n, data)?;
    let mut u_star = vec![0.0; n];
    for pos in sample(&mut rng, n, k) {
        u_star[pos] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    let y = t.mul_vec(&u_star)?;
    Ok(RecoveryInstance {
        t,
        u_star,
        y,
        omega: k as f64,
        k,
        seed,
    })
}

/// `(1/N) ‖u − u*‖²`
pub fn mse(u: &[f64], u_star: &[f64]) -> Result<f64> {
    check_dims("mse", u_star.len(), u.len())?;
    if u.is_empty() {
        return Ok(0.0);
    }
    Ok(dist_sq(u, u_star) / u.len() as f64)
}

/// Every nonzero of `u*` has the same sign in `u`.
pub fn support_signs_match(u: &[f64], u_star: &[f64]) -> bool {
    u.len() == u_star.len()
        && u.iter()
            .zip(u_star)
            .filter(|(_, s)| **s != 0.0)
            .all(|(a, s)| a.signum() == s.signum() && *a != 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryParams {
    pub lambda1: f64,
    pub mu: f64,
    pub xi: XiSequence,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for RecoveryParams {
    fn default() -> Self {
        Self {
            lambda1: 0.1,
            mu: 0.3,
            xi: XiSequence {
                scale: 100.0,
                exponent: 1.1,
            },
            tol: 1e-6,
            max_iters: 2000,
        }
    }
}

impl RecoveryParams {
    pub fn config(&self, instance: &RecoveryInstance) -> Result<SolverConfig> {
        SolverConfig::new(
            self.lambda1,
            self.mu,
            self.xi,
            StoppingRule::MseToReference {
                reference: instance.u_star.clone(),
                tol: self.tol,
            },
            self.max_iters,
        )
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryRun {
    pub result: SolveResult,
    /// MSE of `u_{n+1}` after each step.
    pub mse_series: Vec<f64>,
    /// `ε = 1` ratio series against `u*`.
    pub ratios: RatioSeries,
}

/// Solves from `u₁ = 0` with a full trace. `cfg` must stop on MSE to `u*`.
pub fn run_recovery(instance: &RecoveryInstance, cfg: &SolverConfig) -> Result<RecoveryRun> {
    match &cfg.stop {
        StoppingRule::MseToReference { reference, .. } if *reference == instance.u_star => {}
        _ => {
            return Err(Error::input(
                "recovery runs must stop on MSE to the instance's reference signal",
            ))
        }
    }
    let f = instance.mapping()?;
    let set = instance.feasible_set()?;
    let u1 = vec![0.0; instance.u_star.len()];
    let cfg = cfg.clone().with_trace(TraceLevel::Full);
    let result = solve(&f, &set, &u1, &cfg)?;
    let trace = result.trace.as_ref().expect("full trace requested");
    let mse_series = trace.errors();
    let ratios = a5_ratio_series(trace, &f, &instance.u_star, 1.0)?;
    Ok(RecoveryRun {
        result,
        mse_series,
        ratios,
    })
}

/// Outcome of one ensemble member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoverySummary {
    pub seed: u64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub cpu_seconds: f64,
    pub final_mse: f64,
    /// `‖u‖₁ / K` at the final point.
    pub l1_ratio: f64,
    pub signs_match: bool,
}

fn summarize(
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
    params: &RecoveryParams,
) -> Result<RecoverySummary> {
    let inst = gen_recovery(m, n, k, seed)?;
    let f = inst.mapping()?;
    let set = inst.feasible_set()?;
    let r = solve(&f, &set, &vec![0.0; n], &params.config(&inst)?)?;
    Ok(RecoverySummary {
        seed,
        iterations: r.iterations,
        status: r.status,
        cpu_seconds: r.wall_time.as_secs_f64(),
        final_mse: mse(&r.final_point, &inst.u_star)?,
        l1_ratio: if k == 0 {
            0.0
        } else {
            norm1(&r.final_point) / k as f64
        },
        signs_match: support_signs_match(&r.final_point, &inst.u_star),
    })
}

/// Runs one recovery per seed, spread over the available cores. Results
/// come back in seed order.
pub fn recovery_ensemble(
    m: usize,
    n: usize,
    k: usize,
    seeds: &[u64],
    params: &RecoveryParams,
) -> Result<Vec<RecoverySummary>> {
    let workers = thread::available_parallelism()
        .map_or(1, |p| p.get())
        .max(1);
    let chunk = seeds.len().div_ceil(workers).max(1);
    thread::scope(|s| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|&seed| summarize(m, n, k, seed, params))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(seeds.len());
        for h in handles {
            out.extend(h.join().expect("recovery worker panicked")?);
        }
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 0.5);
        assert!(mse(&[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn instance_shape() {
        let inst = gen_recovery(16, 32, 5, 7).unwrap();
        assert_eq!(inst.u_star.iter().filter(|v| **v != 0.0).count(), 5);
        assert!(inst.u_star.iter().all(|v| [-1.0, 0.0, 1.0].contains(v)));
        assert_eq!(inst.omega, 5.0);
        assert_eq!(inst.y, inst.t.mul_vec(&inst.u_star).unwrap());
        assert_eq!(gen_recovery(16, 32, 5, 7).unwrap(), inst);
        assert!(gen_recovery(4, 3, 4, 0).is_err());
    }

    #[test]
    fn zero_signal_converges_immediately() {
        let inst = gen_recovery(8, 16, 0, 3).unwrap();
        assert!(inst.u_star.iter().all(|v| *v == 0.0));
        assert!(inst.y.iter().all(|v| *v == 0.0));
        let cfg = RecoveryParams::default().config(&inst).unwrap();
        let run = run_recovery(&inst, &cfg).unwrap();
        assert_eq!(run.result.status, SolveStatus::Converged);
        assert_eq!(run.result.iterations, 1);
        assert_eq!(run.mse_series, vec![0.0]);
        assert!(run.ratios.values.is_empty());
    }

    #[test]
    fn recovery_needs_mse_rule() {
        let inst = gen_recovery(8, 16, 2, 3).unwrap();
        let mut cfg = RecoveryParams::default().config(&inst).unwrap();
        cfg.stop = StoppingRule::StepNorm { tol: 1e-6 };
        assert!(run_recovery(&inst, &cfg).is_err());
    }

    #[test]
    fn random_starts_are_reproducible() {
        let a = InitialPoint::Random { seed: 11 }.value();
        assert_eq!(a, InitialPoint::Random { seed: 11 }.value());
        assert!((-1.0..=1.0).contains(&a));
    }

    #[test]
    fn sign_matching() {
        assert!(support_signs_match(&[0.9, 0.1, -1.1], &[1.0, 0.0, -1.0]));
        assert!(!support_signs_match(&[0.9, 0.1, 0.0], &[1.0, 0.0, -1.0]));
    }
}
