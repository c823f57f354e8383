//! Empirical checks on solver traces.
//!
//! * ratio series `|⟨F(z_n), z_n − u*⟩| / ‖z_n − u*‖^{2+ε}` along a run,
//! * separation certificates: disjoint slab systems around candidate limits,
//! * convergence-rate fits (Q-factor, power-law order),
//! * per-iteration audits of the Fejér-type inequality, the step-size bounds,
//!   the step-size update rule and the correction step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dims, Error, Result};
use crate::linalg::{dist, dist_sq, dot, norm, sub};
use crate::operators::Operator;
use crate::solver::{SolveTrace, XiSequence};

/// Entries with `‖z_n − u*‖` below this are dropped from ratio series.
pub const RATIO_SKIP: f64 = 1e-14;

pub const DEFAULT_TAIL_WINDOW: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSeries {
    /// `(n, ratio_n)` for every retained iteration.
    pub values: Vec<(usize, f64)>,
    pub epsilon: f64,
    pub reference: Vec<f64>,
}

impl RatioSeries {
    pub fn min(&self) -> Option<f64> {
        self.values.iter().map(|v| v.1).min_by(f64::total_cmp)
    }

    /// Minimum over the last `k` retained entries.
    pub fn tail_min(&self, k: usize) -> Option<f64> {
        let start = self.values.len().saturating_sub(k);
        self.values[start..]
            .iter()
            .map(|v| v.1)
            .min_by(f64::total_cmp)
    }
}

pub fn a5_ratio_series(
    trace: &SolveTrace,
    f: &dyn Operator,
    reference: &[f64],
    epsilon: f64,
) -> Result<RatioSeries> {
    if trace.is_empty() {
        return Err(Error::input("ratio series needs a non-empty trace"));
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::input(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    check_dims("ratio reference", f.dim(), reference.len())?;
    let mut values = Vec::with_capacity(trace.len());
    for r in &trace.records {
        let d = sub(&r.z, reference);
        let dn = norm(&d);
        if dn < RATIO_SKIP {
            continue;
        }
        let fz = f.apply(&r.z)?;
        values.push((r.n, dot(&fz, &d).abs() / dn.powf(2.0 + epsilon)));
    }
    Ok(RatioSeries {
        values,
        epsilon,
        reference: reference.to_vec(),
    })
}

/// Unit direction `r_ij = (y_j − y_i) / ‖y_j − y_i‖` for an ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDirection {
    pub i: usize,
    pub j: usize,
    pub r: Vec<f64>,
}

/// Points `y_0, …, y_t` with slabs
/// `Ω(y, δ) = {x : |⟨r, x − y⟩| < δ for every direction r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationCertificate {
    pub points: Vec<Vec<f64>>,
    pub delta: f64,
    pub directions: Vec<PairDirection>,
}

fn pair_directions(points: &[Vec<f64>]) -> Result<Vec<PairDirection>> {
    let mut dirs = Vec::new();
    for (i, yi) in points.iter().enumerate() {
        for (j, yj) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = sub(yj, yi);
            let n = norm(&d);
            if n == 0.0 {
                return Err(Error::input(format!("points {i} and {j} coincide")));
            }
            dirs.push(PairDirection {
                i,
                j,
                r: d.iter().map(|x| x / n).collect(),
            });
        }
    }
    Ok(dirs)
}

fn check_points(points: &[Vec<f64>]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::input("a certificate needs at least two points"));
    }
    let dim = points[0].len();
    for p in points {
        check_dims("certificate point", dim, p.len())?;
    }
    Ok(())
}

/// `δ_u = ¼ min_{i≠j} ‖y_j − y_i‖` with one direction per ordered pair.
pub fn build_separation_certificate(points: &[Vec<f64>]) -> Result<SeparationCertificate> {
    check_points(points)?;
    let directions = pair_directions(points)?;
    let min_gap = directions
        .iter()
        .map(|d| dist(&points[d.i], &points[d.j]))
        .fold(f64::INFINITY, f64::min);
    Ok(SeparationCertificate {
        points: points.to_vec(),
        delta: 0.25 * min_gap,
        directions,
    })
}

impl SeparationCertificate {
    /// Same direction set with a caller-chosen `δ`, not checked for validity.
    pub fn with_delta(points: &[Vec<f64>], delta: f64) -> Result<Self> {
        check_points(points)?;
        Ok(Self {
            points: points.to_vec(),
            delta,
            directions: pair_directions(points)?,
        })
    }

    /// Unit directions and `|⟨r_ij, y_j − y_i⟩| = ‖y_j − y_i‖ ≥ 4δ` for all pairs.
    pub fn is_valid(&self) -> bool {
        self.delta > 0.0
            && self.directions.iter().all(|d| {
                let gap = sub(&self.points[d.j], &self.points[d.i]);
                let proj = dot(&d.r, &gap).abs();
                let g = norm(&gap);
                (norm(&d.r) - 1.0).abs() <= 1e-12
                    && (proj - g).abs() <= 1e-12 * g.max(1.0)
                    && g >= 4.0 * self.delta
            })
    }

    /// Membership of `x` in `Ω(y_i, δ)` over the full direction set.
    pub fn slab_contains(&self, i: usize, x: &[f64]) -> bool {
        let y = &self.points[i];
        self.directions
            .iter()
            .all(|d| dot(&d.r, &sub(x, y)).abs() < self.delta)
    }
}

/// Samples points `x = y_i + t·r_ij + w` with `|t| < δ` and `w ⟂ r_ij`
/// (so `x` lies in the pair slab around `y_i`), cycling through the ordered
/// pairs, and checks `|⟨r_ij, x − y_j⟩| ≥ δ`. True iff no sample lies in
/// both pair slabs.
pub fn verify_disjointness(cert: &SeparationCertificate, samples: usize, seed: u64) -> bool {
    if cert.directions.is_empty() || cert.delta.is_nan() || cert.delta <= 0.0 {
        return false;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = cert.points[0].len();
    let spread = cert.delta.max(1.0) * 4.0;
    for s in 0..samples {
        let d = &cert.directions[s % cert.directions.len()];
        let yi = &cert.points[d.i];
        let yj = &cert.points[d.j];
        let mut w: Vec<f64> = (0..dim)
            .map(|_| spread * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let along = dot(&w, &d.r);
        for (wk, rk) in w.iter_mut().zip(&d.r) {
            *wk -= along * rk;
        }
        let mut t = rng.random_range(-cert.delta..cert.delta);
        if t == -cert.delta {
            t = 0.0;
        }
        let x: Vec<f64> = yi
            .iter()
            .zip(d.r.iter().zip(&w))
            .map(|(y, (r, wk))| y + t * r + wk)
            .collect();
        let own = dot(&d.r, &sub(&x, yi)).abs();
        let other = dot(&d.r, &sub(&x, yj)).abs();
        if own < cert.delta && other < cert.delta {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// Median of `e_{n+1} / e_n` over the tail.
    pub q_factor: f64,
    /// Negated least-squares slope of `ln e_n` against `ln n` over the tail.
    pub sublinear_order: f64,
    pub tail_window: usize,
}

pub fn estimate_rates(errors: &[f64], tail_window: usize) -> Result<RateEstimate> {
    if tail_window < 3 {
        return Err(Error::input("tail window must be at least 3"));
    }
    if errors.len() < tail_window {
        return Err(Error::input(format!(
            "need at least {tail_window} errors, got {}",
            errors.len()
        )));
    }
    if let Some(bad) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::input(format!(
            "errors must be positive and finite, got {bad}"
        )));
    }
    let start = errors.len() - tail_window;
    let tail = &errors[start..];

    let mut ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    ratios.sort_by(f64::total_cmp);
    let m = ratios.len();
    let q_factor = if m % 2 == 1 {
        ratios[m / 2]
    } else {
        0.5 * (ratios[m / 2 - 1] + ratios[m / 2])
    };

    // errors[k] is e_{k+1}
    let xs: Vec<f64> = (start..errors.len())
        .map(|k| ((k + 1) as f64).ln())
        .collect();
    let ys: Vec<f64> = tail.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();

    Ok(RateEstimate {
        q_factor,
        sublinear_order: -sxy / sxx,
        tail_window,
    })
}

/// Per-iteration slack of
/// `‖u_{n+1} − u‖² ≤ ‖u_n − u‖² − (1 − μ²λ_n²/λ_{n+1}²)‖z_n − u_n‖² − 2λ_n⟨F(z_n), z_n − u⟩`;
/// nonpositive for every `u` in the feasible set when the iteration is correct.
pub fn fejer_slacks(trace: &SolveTrace, f: &dyn Operator, u: &[f64], mu: f64) -> Result<Vec<f64>> {
    if trace.is_empty() {
        return Err(Error::input("Fejér audit needs a non-empty trace"));
    }
    check_dims("audit point", f.dim(), u.len())?;
    trace
        .records
        .iter()
        .map(|r| {
            let fz = f.apply(&r.z)?;
            let shrink = 1.0 - mu * mu * r.lambda * r.lambda / (r.lambda_next * r.lambda_next);
            Ok(dist_sq(&r.u_next, u) - dist_sq(&r.u, u)
                + shrink * dist_sq(&r.z, &r.u)
                + 2.0 * r.lambda * dot(&fz, &sub(&r.z, u)))
        })
        .collect()
}

/// Worst slack from [`fejer_slacks`].
pub fn fejer_audit(trace: &SolveTrace, f: &dyn Operator, u: &[f64], mu: f64) -> Result<f64> {
    Ok(fejer_slacks(trace, f, u, mu)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Distances of the step sequence to its theoretical bounds
/// `min{λ₁, μ/L} ≤ λ_n ≤ λ₁ + Σ_{k<n} ξ_k`. Negative margins are violations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBoundsReport {
    pub lower_bound: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
}

impl StepBoundsReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.lower_margin >= -tol && self.upper_margin >= -tol
    }
}

pub fn stepsize_bounds_audit(
    trace: &SolveTrace,
    lambda1: f64,
    mu: f64,
    xi: &XiSequence,
    lipschitz: f64,
) -> StepBoundsReport {
    let lower_bound = lambda1.min(mu / lipschitz);
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    let mut cap = lambda1;
    for (k, lambda) in trace.lambdas().into_iter().enumerate() {
        // lambdas()[k] is λ_{k+1}, bounded by λ₁ + Σ_{m=1}^{k} ξ_m
        if k > 0 {
            cap += xi.value(k);
        }
        lower_margin = lower_margin.min(lambda - lower_bound);
        upper_margin = upper_margin.min(cap - lambda);
    }
    StepBoundsReport {
        lower_bound,
        lower_margin,
        upper_margin,
    }
}

/// Worst excess of `λ_{n+1}‖F(u_n) − F(z_n)‖ − μ‖u_n − z_n‖` over the
/// iterations where the step did not simply grow to `λ_n + ξ_n`.
pub fn update_rule_audit(trace: &SolveTrace, f: &dyn Operator, mu: f64) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for r in &trace.records {
        if r.lambda_next == r.lambda + r.xi {
            worst = worst.max(0.0);
            continue;
        }
        let df = norm(&sub(&f.apply(&r.u)?, &f.apply(&r.z)?));
        worst = worst.max(r.lambda_next * df - mu * dist(&r.u, &r.z));
    }
    Ok(worst)
}

/// Largest componentwise `|u_{n+1} − z_n − λ_n(F(u_n) − F(z_n))|`.
pub fn correction_step_audit(trace: &SolveTrace, f: &dyn Operator) -> Result<f64> {
    let mut worst = 0.0f64;
    for r in &trace.records {
        let fu = f.apply(&r.u)?;
        let fz = f.apply(&r.z)?;
        for k in 0..r.z.len() {
            let e = r.u_next[k] - r.z[k] - r.lambda * (fu[k] - fz[k]);
            worst = worst.max(e.abs());
        }
    }
    Ok(worst)
}
