//! Feasible sets and their projections.
//!
//! Two set shapes are supported: coordinate boxes (bounds may be infinite),
//! projected onto exactly by clamping, and the l1 ball `{u : ‖u‖₁ ≤ ω}`,
//! which is never projected onto exactly. For the ball, each iteration builds
//! the supporting halfspace
//!
//! ```text
//! C_n = { u : c(u_n) ≤ ⟨τ_n, u_n − u⟩ },   c(u) = ‖u‖₁ − ω,   τ_n = sign(u_n)
//! ```
//!
//! at the current iterate `u_n` and projects onto that instead. `C ⊆ C_n`
//! holds for every anchor, so the relaxation never cuts off feasible points.

use crate::error::{check_dims, Error, Result};
use crate::linalg::{dot, norm1, norm_sq};

/// Slack allowed when post-checking that a relaxed projection landed in `C_n`.
pub const TOL_PROJ: f64 = 1e-10;

/// Axis-aligned box `lo ≤ x ≤ hi`. Bounds may be `±∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxSet {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dims("box bounds", lo.len(), hi.len())?;
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if l.is_nan() || h.is_nan() || l > h {
                return Err(Error::input(format!(
                    "box bound {i}: need lo <= hi, got [{l}, {h}]"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// One-dimensional interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    /// The same interval in every one of `dim` coordinates.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|b| b.is_finite())
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        project_box(x, &self.lo, &self.hi)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        box_membership(self, x, tol)
    }
}

/// A closed convex feasible set with a cheap projection.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Box(BoxSet),
    /// `{u : ‖u‖₁ ≤ radius}`, handled through per-iteration halfspace relaxation.
    HalfSpaceRelaxedL1Ball {
        radius: f64,
    },
}

impl FeasibleSet {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        BoxSet::interval(lo, hi).map(FeasibleSet::Box)
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        BoxSet::new(lo, hi).map(FeasibleSet::Box)
    }

    /// Radius zero is accepted and describes `C = {0}`.
    pub fn relaxed_l1_ball(radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::input(format!(
                "l1 radius must be finite and nonnegative, got {radius}"
            )));
        }
        Ok(FeasibleSet::HalfSpaceRelaxedL1Ball { radius })
    }

    pub fn as_box(&self) -> Option<&BoxSet> {
        match self {
            FeasibleSet::Box(b) => Some(b),
            _ => None,
        }
    }

    pub fn needs_context(&self) -> bool {
        matches!(self, FeasibleSet::HalfSpaceRelaxedL1Ball { .. })
    }

    /// Projection onto the set (or, for the l1 ball, onto the halfspace
    /// anchored by `ctx`).
    pub fn project(&self, x: &[f64], ctx: Option<&ProjectionContext>) -> Result<Vec<f64>> {
        project(self, x, ctx)
    }
}

/// The anchor `u_n` of a relaxed projection and its cached subgradient
/// `τ_n = sign(u_n)`, with `sign(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionContext {
    anchor: Vec<f64>,
    subgradient: Vec<f64>,
}

impl ProjectionContext {
    pub fn new(anchor: &[f64]) -> Self {
        let subgradient = anchor.iter().map(|&a| sign(a)).collect();
        Self {
            anchor: anchor.to_vec(),
            subgradient,
        }
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn subgradient(&self) -> &[f64] {
        &self.subgradient
    }

    /// `c(u_n) = ‖u_n‖₁ − ω`
    pub fn constraint_value(&self, radius: f64) -> f64 {
        norm1(&self.anchor) - radius
    }

    /// `⟨τ_n, u_n − x⟩ − c(u_n)`; nonnegative exactly on `C_n`.
    pub fn halfspace_slack(&self, x: &[f64], radius: f64) -> f64 {
        let inner: f64 = self
            .subgradient
            .iter()
            .zip(self.anchor.iter().zip(x))
            .map(|(t, (a, xi))| t * (a - xi))
            .sum();
        inner - self.constraint_value(radius)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Componentwise clamp of `x` into `[lo, hi]`.
pub fn project_box(x: &[f64], lo: &[f64], hi: &[f64]) -> Result<Vec<f64>> {
    check_dims("box projection", lo.len(), x.len())?;
    check_dims("box projection", hi.len(), x.len())?;
    Ok(x.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&xi, (&l, &h))| {
            // median(l, xi, h); ±∞ bounds leave that side untouched
            if xi < l {
                l
            } else if xi > h {
                h
            } else {
                xi
            }
        })
        .collect())
}

/// Projection onto the halfspace `C_n` built at `ctx.anchor()`.
///
/// Returns `x` unchanged when it already satisfies `c(u_n) ≤ ⟨τ_n, u_n − x⟩`,
/// otherwise `x + ((⟨τ_n, u_n − x⟩ − c(u_n)) / ‖τ_n‖²) τ_n`.
pub fn project_relaxed_l1(x: &[f64], ctx: &ProjectionContext, radius: f64) -> Result<Vec<f64>> {
    check_dims("relaxed l1 projection", ctx.anchor.len(), x.len())?;
    let tau = &ctx.subgradient;
    let c = ctx.constraint_value(radius);
    let inner: f64 = tau
        .iter()
        .zip(ctx.anchor.iter().zip(x))
        .map(|(t, (a, xi))| t * (a - xi))
        .sum();
    if c <= inner {
        return Ok(x.to_vec());
    }
    let tau_sq = norm_sq(tau);
    if tau_sq == 0.0 {
        // u_n = 0 gives c = −ω ≤ 0 = ⟨τ, ·⟩, so the branch above always fires
        return Err(Error::Internal(format!(
            "zero subgradient with c(u_n) = {c} > 0"
        )));
    }
    let step = (inner - c) / tau_sq;
    let out: Vec<f64> = x.iter().zip(tau).map(|(xi, t)| xi + step * t).collect();
    let slack = ctx.halfspace_slack(&out, radius);
    if slack < -TOL_PROJ * (1.0 + c.abs()) {
        return Err(Error::Internal(format!(
            "relaxed projection left the halfspace by {}",
            -slack
        )));
    }
    Ok(out)
}

/// Dispatch over [`FeasibleSet`] variants.
pub fn project(set: &FeasibleSet, x: &[f64], ctx: Option<&ProjectionContext>) -> Result<Vec<f64>> {
    match set {
        FeasibleSet::Box(b) => b.project(x),
        FeasibleSet::HalfSpaceRelaxedL1Ball { radius } => {
            let ctx = ctx
                .ok_or_else(|| Error::input("relaxed l1 projection needs a projection context"))?;
            project_relaxed_l1(x, ctx, *radius)
        }
    }
}

/// `lo[i] − tol ≤ x[i] ≤ hi[i] + tol` for every `i`. Wrong dimension is "not a member".
pub fn box_membership(set: &BoxSet, x: &[f64], tol: f64) -> bool {
    x.len() == set.dim()
        && x.iter()
            .zip(set.lo.iter().zip(&set.hi))
            .all(|(&xi, (&l, &h))| l - tol <= xi && xi <= h + tol)
}

/// `⟨w − p, u − p⟩`, nonpositive whenever `p` is the projection of `w` and `u ∈ C`.
pub fn obtuse_angle(w: &[f64], pw: &[f64], u: &[f64]) -> f64 {
    let a: Vec<f64> = w.iter().zip(pw).map(|(x, p)| x - p).collect();
    let b: Vec<f64> = u.iter().zip(pw).map(|(x, p)| x - p).collect();
    dot(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist, sub};
    use proptest::prelude::*;

    #[test]
    fn box_examples() {
        assert_eq!(project_box(&[0.36], &[-1.0], &[1.0]).unwrap(), vec![0.36]);
        assert_eq!(project_box(&[4.0], &[-1.0], &[1.0]).unwrap(), vec![1.0]);
        assert_eq!(
            project_box(&[-0.5], &[0.0], &[f64::INFINITY]).unwrap(),
            vec![0.0]
        );
        assert!(project_box(&[1.0, 2.0], &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn clamp_matches_grid_minimizer() {
        // brute-force argmin of |y − 4| over a fine grid of [−1, 1]
        let best = (0..=20_000)
            .map(|k| -1.0 + 2.0 * k as f64 / 20_000.0)
            .min_by(|a, b| (a - 4.0f64).abs().total_cmp(&(b - 4.0f64).abs()))
            .unwrap();
        let p = project_box(&[4.0], &[-1.0], &[1.0]).unwrap()[0];
        assert!((p - best).abs() < 1e-12);
    }

    #[test]
    fn relaxed_examples() {
        let ctx = ProjectionContext::new(&[0.0, 0.0]);
        assert_eq!(
            project_relaxed_l1(&[0.3, -0.2], &ctx, 1.0).unwrap(),
            vec![0.3, -0.2]
        );
        let ctx = ProjectionContext::new(&[2.0, 0.0]);
        assert_eq!(ctx.subgradient(), &[1.0, 0.0]);
        // c = 1, ⟨τ, u_n − x⟩ = 0 → x + (0 − 1)·τ
        assert_eq!(
            project_relaxed_l1(&[2.0, 0.0], &ctx, 1.0).unwrap(),
            vec![1.0, 0.0]
        );
        // ⟨τ, u_n − x⟩ = −1 → x + (−1 − 1)·τ
        assert_eq!(
            project_relaxed_l1(&[3.0, 1.0], &ctx, 1.0).unwrap(),
            vec![1.0, 1.0]
        );
        assert!(project_relaxed_l1(&[1.0], &ctx, 1.0).is_err());
    }

    #[test]
    fn sign_of_zero_is_zero() {
        let ctx = ProjectionContext::new(&[-3.0, 0.0, 0.5, -0.0]);
        assert_eq!(ctx.subgradient(), &[-1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn dispatch() {
        let unit = FeasibleSet::interval(-1.0, 1.0).unwrap();
        assert_eq!(unit.project(&[0.0], None).unwrap(), vec![0.0]);
        let ray = FeasibleSet::interval(0.0, f64::INFINITY).unwrap();
        assert_eq!(ray.project(&[2.0], None).unwrap(), vec![2.0]);
        let ball = FeasibleSet::relaxed_l1_ball(1.0).unwrap();
        let ctx = ProjectionContext::new(&[2.0, 0.0]);
        assert_eq!(
            ball.project(&[2.0, 0.0], Some(&ctx)).unwrap(),
            vec![1.0, 0.0]
        );
        assert!(matches!(
            ball.project(&[2.0, 0.0], None),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn invalid_sets() {
        assert!(FeasibleSet::interval(1.0, -1.0).is_err());
        assert!(FeasibleSet::interval(f64::NAN, 1.0).is_err());
        assert!(FeasibleSet::relaxed_l1_ball(-1.0).is_err());
        assert!(BoxSet::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn membership() {
        let b = BoxSet::interval(-1.0, 1.0).unwrap();
        assert!(box_membership(&b, &[1.0], 0.0));
        assert!(!box_membership(&b, &[1.001], 1e-6));
        let ray = BoxSet::interval(0.0, f64::INFINITY).unwrap();
        assert!(box_membership(&ray, &[-1e-12], 1e-9));
        assert!(box_membership(&ray, &[1e300], 0.0));
    }

    fn boxed_vecs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..6).prop_flat_map(|n| {
            (
                prop::collection::vec((-5.0f64..5.0, 0.0f64..4.0), n),
                prop::collection::vec(-20.0f64..20.0, n),
                prop::collection::vec(-20.0f64..20.0, n),
            )
                .prop_map(|(bounds, w, v)| {
                    let lo: Vec<f64> = bounds.iter().map(|b| b.0).collect();
                    let hi: Vec<f64> = bounds.iter().map(|b| b.0 + b.1).collect();
                    (lo, hi, w, v)
                })
        })
    }

    proptest! {
        #[test]
        fn box_projection_identities((lo, hi, w, v) in boxed_vecs(), t in 0.0f64..1.0) {
            let b = BoxSet::new(lo.clone(), hi.clone()).unwrap();
            let pw = b.project(&w).unwrap();
            let pv = b.project(&v).unwrap();
            prop_assert!(b.contains(&pw, 0.0));
            prop_assert_eq!(b.project(&pw).unwrap(), pw.clone());
            prop_assert!(dist(&pw, &pv) <= dist(&w, &v) + 1e-12);
            // a point inside the box
            let u: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + t * (h - l)).collect();
            prop_assert!(obtuse_angle(&w, &pw, &u) <= 1e-12);
            let r = sub(&w, &pw);
            prop_assert!(crate::linalg::norm_sq(&r) <= dot(&r, &sub(&w, &u)) + 1e-12);
        }

        #[test]
        fn relaxed_projection_lands_in_halfspace(
            anchor in prop::collection::vec(-3.0f64..3.0, 1..8),
            shift in prop::collection::vec(-3.0f64..3.0, 8),
            radius in 0.1f64..5.0,
        ) {
            let ctx = ProjectionContext::new(&anchor);
            let x: Vec<f64> = anchor.iter().zip(&shift).map(|(a, s)| a + s).collect();
            let p = project_relaxed_l1(&x, &ctx, radius).unwrap();
            prop_assert!(ctx.halfspace_slack(&p, radius) >= -TOL_PROJ);
        }
    }
}
