//! Test mappings with known solution sets and sampling-based property checks.
//!
//! | kind            | `F(z)`                                   | `C`        | `S`                      | `S_D`  |
//! |-----------------|------------------------------------------|------------|--------------------------|--------|
//! | `CubicQuasi`    | `(1 − |z|) z`                            | `[−1, 1]`  | `{−1, 0, 1}`             | `{0}`  |
//! | `SinePlusOne`   | `1 + sin z`                              | `[0, ∞)`   | `{0} ∪ {2kπ + 3π/2}`     | `{0}`  |
//! | `PiecewiseQuad` | `2z − 1` / `z²` / `−2z − 1`              | `[−1, 1]`  | `{0, −1}`                | `{−1}` |
//! | `LeastSquares`  | `Tᵀ(Tu − y)`                             | l1 ball    | caller supplied          |        |

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dims, Error, Result};
use crate::geometry::BoxSet;
use crate::linalg::{dist, dot, norm, sub, Matrix};

/// Dead zone for the strict inequalities of the quasimonotonicity implication.
pub const TOL_QM: f64 = 1e-12;

/// How many members of the infinite solution set of `1 + sin z` are stored.
pub const SINE_SOLUTION_PREFIX: usize = 16;

/// An evaluatable operator `F: ℝⁿ → ℝⁿ`.
pub trait Operator: Send + Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// A known Lipschitz constant, if any.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }

    /// Region to sample when the feasible set is unbounded.
    fn default_window(&self) -> Option<BoxSet> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MappingKind {
    CubicQuasi,
    SinePlusOne,
    PiecewiseQuad,
    /// Gradient of `½‖T u − y‖²`.
    LeastSquares {
        t: Matrix,
        y: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mapping {
    kind: MappingKind,
    lipschitz_hint: Option<f64>,
    known_solutions: Vec<Vec<f64>>,
    known_dual_solutions: Vec<Vec<f64>>,
}

impl Mapping {
    pub fn cubic_quasi() -> Self {
        Self {
            kind: MappingKind::CubicQuasi,
            lipschitz_hint: Some(1.0),
            known_solutions: vec![vec![-1.0], vec![0.0], vec![1.0]],
            known_dual_solutions: vec![vec![0.0]],
        }
    }

    /// `1 + sin z`. Only the first [`SINE_SOLUTION_PREFIX`] points of the
    /// lattice `2kπ + 3π/2` are stored as known solutions.
    pub fn sine_plus_one() -> Self {
        let mut known = vec![vec![0.0]];
        known.extend((0..SINE_SOLUTION_PREFIX).map(|k| vec![2.0 * k as f64 * PI + 1.5 * PI]));
        Self {
            kind: MappingKind::SinePlusOne,
            lipschitz_hint: Some(1.0),
            known_solutions: known,
            known_dual_solutions: vec![vec![0.0]],
        }
    }

    pub fn piecewise_quad() -> Self {
        Self {
            kind: MappingKind::PiecewiseQuad,
            lipschitz_hint: Some(2.0),
            known_solutions: vec![vec![0.0], vec![-1.0]],
            known_dual_solutions: vec![vec![-1.0]],
        }
    }

    /// `F(u) = Tᵀ(Tu − y)`. The Lipschitz hint is `‖TᵀT‖₂` by power iteration.
    pub fn least_squares(t: Matrix, y: Vec<f64>) -> Result<Self> {
        check_dims("least squares observations", t.rows(), y.len())?;
        let l = t.gram_spectral_norm(10_000, 1e-15);
        Ok(Self {
            kind: MappingKind::LeastSquares { t, y },
            lipschitz_hint: (l > 0.0).then_some(l),
            known_solutions: Vec::new(),
            known_dual_solutions: Vec::new(),
        })
    }

    pub fn with_known_solutions(mut self, s: Vec<Vec<f64>>, s_dual: Vec<Vec<f64>>) -> Self {
        self.known_solutions = s;
        self.known_dual_solutions = s_dual;
        self
    }

    pub fn with_lipschitz_hint(mut self, l: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::input(format!(
                "lipschitz hint must be positive, got {l}"
            )));
        }
        self.lipschitz_hint = Some(l);
        Ok(self)
    }

    pub fn kind(&self) -> &MappingKind {
        &self.kind
    }

    pub fn known_solutions(&self) -> &[Vec<f64>] {
        &self.known_solutions
    }

    pub fn known_dual_solutions(&self) -> &[Vec<f64>] {
        &self.known_dual_solutions
    }

    /// Nearest stored member of `S` within `threshold`, if any.
    pub fn nearest_known_solution(&self, x: &[f64], threshold: f64) -> Option<&[f64]> {
        self.known_solutions
            .iter()
            .filter(|s| s.len() == x.len())
            .map(|s| (dist(s, x), s))
            .filter(|(d, _)| *d <= threshold)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, s)| s.as_slice())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dims("mapping argument", self.dim(), x.len())?;
        Ok(match &self.kind {
            MappingKind::CubicQuasi => vec![(1.0 - x[0].abs()) * x[0]],
            MappingKind::SinePlusOne => vec![1.0 + x[0].sin()],
            MappingKind::PiecewiseQuad => {
                let z = x[0];
                vec![if z > 1.0 {
                    2.0 * z - 1.0
                } else if z < -1.0 {
                    -2.0 * z - 1.0
                } else {
                    z * z
                }]
            }
            MappingKind::LeastSquares { t, y } => {
                let r = sub(&t.mul_vec(x)?, y);
                t.tr_mul_vec(&r)?
            }
        })
    }
}

impl Operator for Mapping {
    fn dim(&self) -> usize {
        match &self.kind {
            MappingKind::LeastSquares { t, .. } => t.cols(),
            _ => 1,
        }
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval(x)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz_hint
    }

    fn default_window(&self) -> Option<BoxSet> {
        match self.kind {
            MappingKind::SinePlusOne => BoxSet::interval(0.0, 8.0 * PI).ok(),
            _ => None,
        }
    }
}

/// Wraps a closure as an [`Operator`]; handy for ad-hoc maps in checks.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F> FnOperator<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Operator for FnOperator<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dims("operator argument", self.dim, x.len())?;
        Ok((self.f)(x))
    }
}

/// A sampled pair `(u, z)` with `⟨F(u), z − u⟩ > 0` but `⟨F(z), z − u⟩ < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasimonotoneViolation {
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub forward: f64,
    pub backward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasimonotoneReport {
    pub pairs: usize,
    pub violations: Vec<QuasimonotoneViolation>,
}

impl QuasimonotoneReport {
    pub fn count(&self) -> usize {
        self.violations.len()
    }
}

fn sampling_region<'a>(
    f: &dyn Operator,
    domain: &'a BoxSet,
    window: Option<&'a BoxSet>,
    fallback: &'a mut Option<BoxSet>,
) -> Result<&'a BoxSet> {
    check_dims("sampling domain", f.dim(), domain.dim())?;
    let region = match window {
        Some(w) => w,
        None if domain.is_bounded() => domain,
        None => {
            *fallback = f.default_window();
            fallback
                .as_ref()
                .ok_or_else(|| Error::input("unbounded domain: supply a bounded sampling window"))?
        }
    };
    check_dims("sampling window", domain.dim(), region.dim())?;
    if !region.is_bounded() {
        return Err(Error::input("sampling window must be bounded"));
    }
    Ok(region)
}

fn sample_point(rng: &mut ChaCha8Rng, region: &BoxSet, domain: &BoxSet) -> Result<Vec<f64>> {
    let raw: Vec<f64> = region
        .lo()
        .iter()
        .zip(region.hi())
        .map(|(&l, &h)| if l < h { rng.random_range(l..=h) } else { l })
        .collect();
    domain.project(&raw)
}

/// Samples `pairs` random `(u, z)` in the domain (or `window`) and reports
/// every violation of `⟨F(u), z − u⟩ > 0 ⟹ ⟨F(z), z − u⟩ ≥ 0`.
pub fn check_quasimonotone(
    f: &dyn Operator,
    domain: &BoxSet,
    window: Option<&BoxSet>,
    pairs: usize,
    seed: u64,
) -> Result<QuasimonotoneReport> {
    if pairs == 0 {
        return Err(Error::input("pairs must be at least 1"));
    }
    let mut fallback = None;
    let region = sampling_region(f, domain, window, &mut fallback)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    for _ in 0..pairs {
        let u = sample_point(&mut rng, region, domain)?;
        let z = sample_point(&mut rng, region, domain)?;
        let d = sub(&z, &u);
        let forward = dot(&f.apply(&u)?, &d);
        if forward > TOL_QM {
            let backward = dot(&f.apply(&z)?, &d);
            if backward < -TOL_QM {
                violations.push(QuasimonotoneViolation {
                    u,
                    z,
                    forward,
                    backward,
                });
            }
        }
    }
    Ok(QuasimonotoneReport { pairs, violations })
}

/// Largest sampled `‖F(u) − F(z)‖ / ‖u − z‖`: a lower bound on the Lipschitz constant.
pub fn lipschitz_estimate(
    f: &dyn Operator,
    domain: &BoxSet,
    window: Option<&BoxSet>,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    if pairs == 0 {
        return Err(Error::input("pairs must be at least 1"));
    }
    let mut fallback = None;
    let region = sampling_region(f, domain, window, &mut fallback)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..pairs {
        let u = sample_point(&mut rng, region, domain)?;
        let z = sample_point(&mut rng, region, domain)?;
        let du = dist(&u, &z);
        if du == 0.0 {
            continue;
        }
        let df = norm(&sub(&f.apply(&u)?, &f.apply(&z)?));
        best = best.max(df / du);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> BoxSet {
        BoxSet::interval(-1.0, 1.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        let c = Mapping::cubic_quasi();
        assert!((c.eval(&[0.6]).unwrap()[0] - 0.24).abs() < 1e-15);
        assert_eq!(c.eval(&[1.0]).unwrap(), vec![0.0]);
        let s = Mapping::sine_plus_one();
        assert!(s.eval(&[1.5 * PI]).unwrap()[0].abs() < 1e-15);
        let p = Mapping::piecewise_quad();
        assert_eq!(p.eval(&[-2.0]).unwrap(), vec![3.0]);
        assert_eq!(p.eval(&[3.0]).unwrap(), vec![5.0]);
        assert_eq!(p.eval(&[0.5]).unwrap(), vec![0.25]);
        assert!(matches!(c.eval(&[1.0, 2.0]), Err(Error::Input(_))));
    }

    #[test]
    fn least_squares_vanishes_at_generator() {
        let t = Matrix::from_row_major(2, 3, vec![1., 2., 0., -1., 0.5, 3.]).unwrap();
        let u = [0.5, -1.0, 2.0];
        let y = t.mul_vec(&u).unwrap();
        let f = Mapping::least_squares(t, y).unwrap();
        assert!(f.eval(&u).unwrap().iter().all(|v| v.abs() < 1e-12));
        assert!(f.eval(&[1.0]).is_err());
        assert!(Mapping::least_squares(Matrix::zeros(2, 2), vec![1.0]).is_err());
    }

    #[test]
    fn cubic_zeros_are_exactly_s() {
        let f = Mapping::cubic_quasi();
        for k in 0..=20_000 {
            let z = -1.0 + 2.0 * k as f64 / 20_000.0;
            let near = [-1.0, 0.0, 1.0].iter().any(|s| (z - s).abs() < 1e-9);
            if !near {
                assert!(f.eval(&[z]).unwrap()[0].abs() > 0.0, "z={z}");
            }
        }
    }

    fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(a).signum() == f(m).signum() {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn sine_zeros_match_lattice() {
        let f = Mapping::sine_plus_one();
        let g = |z: f64| f.eval(&[z]).unwrap()[0];
        for k in 0..=20_000 {
            assert!(g(30.0 * k as f64 / 20_000.0) >= 0.0);
        }
        // double roots of 1 + sin: bisect on the derivative cos
        for k in 0..5 {
            let target = 2.0 * k as f64 * PI + 1.5 * PI;
            if target > 30.0 {
                break;
            }
            let root = bisect(f64::cos, target - 1.0, target + 1.0);
            assert!((root - target).abs() < 1e-9);
            assert!(g(root).abs() < 1e-15);
        }
    }

    #[test]
    fn piecewise_continuity() {
        let f = Mapping::piecewise_quad();
        let e = 1e-12;
        let v = |z: f64| f.eval(&[z]).unwrap()[0];
        assert!((v(1.0) - v(1.0 + e)).abs() < 1e-11);
        assert!((v(-1.0) - v(-1.0 - e)).abs() < 1e-11);
        assert_eq!(v(1.0), 1.0);
        assert_eq!(v(-1.0), 1.0);
    }

    #[test]
    fn quasimonotone_checks() {
        let r = check_quasimonotone(&Mapping::cubic_quasi(), &unit(), None, 10_000, 1).unwrap();
        assert_eq!(r.count(), 0);
        let dom = BoxSet::interval(0.0, 20.0).unwrap();
        let r = check_quasimonotone(&Mapping::sine_plus_one(), &dom, None, 10_000, 1).unwrap();
        assert_eq!(r.count(), 0);
        let neg = FnOperator::new(1, |x: &[f64]| vec![-x[0]]);
        let r = check_quasimonotone(&neg, &unit(), None, 10_000, 1).unwrap();
        assert!(r.count() > 0);
        // every reported violation really is one
        for v in &r.violations {
            let d = v.z[0] - v.u[0];
            assert!(-v.u[0] * d > 0.0 && -v.z[0] * d < 0.0);
        }
    }

    #[test]
    fn unbounded_domain_needs_window() {
        let ray = BoxSet::interval(0.0, f64::INFINITY).unwrap();
        let neg = FnOperator::new(1, |x: &[f64]| vec![-x[0]]);
        assert!(check_quasimonotone(&neg, &ray, None, 10, 1).is_err());
        // the sine mapping carries its own default window
        let r = check_quasimonotone(&Mapping::sine_plus_one(), &ray, None, 1000, 3).unwrap();
        assert_eq!(r.count(), 0);
        let w = BoxSet::interval(0.0, 5.0).unwrap();
        assert!(check_quasimonotone(&neg, &ray, Some(&w), 10, 1).is_ok());
        assert!(check_quasimonotone(&neg, &unit(), None, 0, 1).is_err());
    }

    #[test]
    fn lipschitz_estimates() {
        let dom = BoxSet::interval(0.0, 20.0).unwrap();
        let l = lipschitz_estimate(&Mapping::sine_plus_one(), &dom, None, 10_000, 1).unwrap();
        assert!(l > 0.9 && l <= 1.0, "{l}");
        let l = lipschitz_estimate(&Mapping::cubic_quasi(), &unit(), None, 10_000, 1).unwrap();
        assert!(l > 0.9 && l <= 1.0, "{l}");
    }

    #[test]
    fn nearest_solution() {
        let f = Mapping::cubic_quasi();
        assert_eq!(f.nearest_known_solution(&[-0.995], 1e-2), Some(&[-1.0][..]));
        assert_eq!(f.nearest_known_solution(&[0.5], 1e-2), None);
    }
}
