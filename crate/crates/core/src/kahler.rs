//! Kähler target geometry generated by a radial potential Φ(|φ|).
//!
//! The metric is g_{ab̄} = α(r) δ_{ab} + Q(r) φ̄_a φ_b with
//! α = Φ'/(2r), Q = (Φ'' − Φ'/r)/(4r²) and r = |φ|. Every quantity the
//! dynamics needs reduces to the three radial scalars (α, Q, Q'/(2r)).

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{MkgError, Result};

/// Below this radius the analytic r → 0 limits are used.
pub const SMALL_R: f64 = 1e-8;

/// Radial scalars of the metric at one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Radial {
    /// Φ'/(2r)
    pub alpha: f64,
    /// (Φ'' − Φ'/r)/(4r²)
    pub q: f64,
    /// Q'/(2r)
    pub q2: f64,
}

/// User supplied radial potential.
///
/// The default [`RadialProfile::radial`] uses the quotient forms and falls
/// back to [`RadialProfile::at_origin`] for r < [`SMALL_R`].
pub trait RadialProfile: Send + Sync + fmt::Debug {
    fn value(&self, r: f64) -> f64;
    fn d1(&self, r: f64) -> f64;
    fn d2(&self, r: f64) -> f64;
    fn d3(&self, r: f64) -> f64;

    /// Analytic limits of α, Q and Q'/(2r) at r = 0, if they exist.
    fn at_origin(&self) -> Option<Radial>;

    fn radial(&self, r: f64) -> Option<Radial> {
        if r < SMALL_R {
            return self.at_origin();
        }
        let (p1, p2, p3) = (self.d1(r), self.d2(r), self.d3(r));
        Some(Radial {
            alpha: p1 / (2.0 * r),
            q: (p2 - p1 / r) / (4.0 * r * r),
            q2: (p3 - 3.0 * p2 / r + 3.0 * p1 / (r * r)) / (8.0 * r * r * r),
        })
    }
}

/// Φ(r) = Σ p_n rⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialProfile {
    coeffs: Vec<f64>,
}

impl PolynomialProfile {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    fn regular_at_origin(&self) -> bool {
        [1usize, 3, 5].iter().all(|&n| self.coeffs.get(n).copied().unwrap_or(0.0) == 0.0)
    }

    fn series(&self, r: f64, weight: impl Fn(f64) -> f64, shift: i32) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(n, &p)| {
                let w = weight(n as f64);
                if w == 0.0 {
                    0.0
                } else {
                    w * p * r.powi(n as i32 - shift)
                }
            })
            .sum()
    }
}

impl RadialProfile for PolynomialProfile {
    fn value(&self, r: f64) -> f64 {
        self.series(r, |_| 1.0, 0)
    }
    fn d1(&self, r: f64) -> f64 {
        self.series(r, |n| n, 1)
    }
    fn d2(&self, r: f64) -> f64 {
        self.series(r, |n| n * (n - 1.0), 2)
    }
    fn d3(&self, r: f64) -> f64 {
        self.series(r, |n| n * (n - 1.0) * (n - 2.0), 3)
    }

    fn at_origin(&self) -> Option<Radial> {
        if !self.regular_at_origin() {
            return None;
        }
        let c = |n: usize| self.coeffs.get(n).copied().unwrap_or(0.0);
        Some(Radial { alpha: c(2), q: 2.0 * c(4), q2: 6.0 * c(6) })
    }

    // Exact power series; no cancellation between Φ'' and Φ'/r.
    fn radial(&self, r: f64) -> Option<Radial> {
        if r < SMALL_R {
            return self.at_origin();
        }
        Some(Radial {
            alpha: self.series(r, |n| 0.5 * n, 2),
            q: self.series(r, |n| 0.25 * n * (n - 2.0), 4),
            q2: self.series(r, |n| 0.125 * n * (n - 2.0) * (n - 4.0), 6),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KahlerKind {
    Flat,
    PolynomialRadial,
    Custom,
}

/// Constants of the radial bound: |Q'/2r| ≤ Σ b_n rⁿ and the C₁, C₂, C₃ of
/// the integrated bound on |Φ|.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BoundConstants {
    pub b: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Lower bound |Φ| ≥ (c₁/2) r² + c₂ required for a positive energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerBound {
    pub c1: f64,
    pub c2: f64,
}

/// The two Q prefactors in circulation. Only `InverseSquare` reproduces the
/// complex Hessian of Φ(|φ|).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QNormalization {
    /// (Φ'' − Φ'/r)/(4r²)
    InverseSquare,
    /// (Φ'' − Φ'/r)/(4r)
    InverseLinear,
}

#[derive(Clone)]
enum Profile {
    Poly(PolynomialProfile),
    Custom(Arc<dyn RadialProfile>),
}

impl Profile {
    fn get(&self) -> &dyn RadialProfile {
        match self {
            Profile::Poly(p) => p,
            Profile::Custom(p) => p.as_ref(),
        }
    }
}

#[derive(Clone)]
pub struct KahlerFamily {
    kind: KahlerKind,
    profile: Profile,
    r_max: f64,
    pub bounds: BoundConstants,
    pub lower: Option<LowerBound>,
}

impl fmt::Debug for KahlerFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("KahlerFamily");
        d.field("kind", &self.kind).field("r_max", &self.r_max);
        if let Profile::Poly(p) = &self.profile {
            d.field("coefficients", &p.coeffs);
        }
        d.field("bounds", &self.bounds).field("lower", &self.lower).finish()
    }
}

pub const DEFAULT_R_MAX: f64 = 10.0;

impl KahlerFamily {
    /// Φ = r², g = δ.
    pub fn flat() -> Self {
        Self {
            kind: KahlerKind::Flat,
            profile: Profile::Poly(PolynomialProfile::new(vec![0.0, 0.0, 1.0])),
            r_max: DEFAULT_R_MAX,
            bounds: BoundConstants { b: vec![], c1: 0.0, c2: 2.0, c3: 0.0 },
            lower: Some(LowerBound { c1: 2.0, c2: 0.0 }),
        }
    }

    pub fn polynomial(coeffs: Vec<f64>, r_max: f64) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(MkgError::InvalidFamily("non-finite coefficient".into()));
        }
        let fam = Self {
            kind: KahlerKind::PolynomialRadial,
            profile: Profile::Poly(PolynomialProfile::new(coeffs)),
            r_max,
            bounds: BoundConstants::default(),
            lower: None,
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn custom(profile: Arc<dyn RadialProfile>, r_max: f64) -> Result<Self> {
        let fam = Self {
            kind: KahlerKind::Custom,
            profile: Profile::Custom(profile),
            r_max,
            bounds: BoundConstants::default(),
            lower: None,
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn with_bounds(mut self, bounds: BoundConstants) -> Result<Self> {
        if bounds.b.iter().chain([&bounds.c1, &bounds.c2, &bounds.c3]).any(|&v| !(v >= 0.0)) {
            return Err(MkgError::InvalidFamily("bound constants must be nonnegative".into()));
        }
        self.bounds = bounds;
        Ok(self)
    }

    pub fn with_lower_bound(mut self, lower: LowerBound) -> Self {
        self.lower = Some(lower);
        self
    }

    pub fn kind(&self) -> KahlerKind {
        self.kind
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn is_flat(&self) -> bool {
        self.kind == KahlerKind::Flat
    }

    /// Polynomial coefficients of Φ when the family has them.
    pub fn coefficients(&self) -> Option<&[f64]> {
        match &self.profile {
            Profile::Poly(p) => Some(p.coefficients()),
            Profile::Custom(_) => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r_max > 0.0) {
            return Err(MkgError::InvalidFamily("r_max must be positive".into()));
        }
        let p = self.profile.get();
        let n = 4096;
        for i in 1..=n {
            let r = self.r_max * i as f64 / n as f64;
            if !(p.d1(r) > 0.0 && p.d2(r) > 0.0) {
                return Err(MkgError::DegenerateMetric { r });
            }
        }
        Ok(())
    }

    pub fn potential(&self, r: f64) -> f64 {
        self.profile.get().value(r)
    }
    pub fn potential_d1(&self, r: f64) -> f64 {
        self.profile.get().d1(r)
    }
    pub fn potential_d2(&self, r: f64) -> f64 {
        self.profile.get().d2(r)
    }
    pub fn potential_d3(&self, r: f64) -> f64 {
        self.profile.get().d3(r)
    }

    /// α, Q, Q'/(2r) at radius `r`, with the range and degeneracy checks.
    pub fn radial(&self, r: f64) -> Result<Radial> {
        if r > self.r_max {
            return Err(MkgError::RadiusExceeded { r, r_max: self.r_max });
        }
        let rad = self.profile.get().radial(r).ok_or(MkgError::DegenerateMetric { r })?;
        // α > 0 and α + Q r² = (Φ'' + Φ'/r)/4 > 0
        if !(rad.alpha > 0.0 && rad.alpha + rad.q * r * r > 0.0) {
            return Err(MkgError::DegenerateMetric { r });
        }
        Ok(rad)
    }

    pub fn metric(&self, phi: &[C64]) -> Result<HermitianMatrix> {
        self.metric_with(phi, QNormalization::InverseSquare)
    }

    /// Metric assembled with either Q prefactor; used to report which one
    /// matches the Hessian.
    pub fn metric_with(&self, phi: &[C64], norm: QNormalization) -> Result<HermitianMatrix> {
        let r = norm2(phi).sqrt();
        let rad = self.radial(r)?;
        let q = match norm {
            QNormalization::InverseSquare => rad.q,
            QNormalization::InverseLinear => rad.q * r,
        };
        Ok(HermitianMatrix::from_upper(phi.len(), |a, b| {
            let d = if a == b { rad.alpha } else { 0.0 };
            C64::new(d, 0.0) + q * phi[a].conj() * phi[b]
        }))
    }

    /// Sherman–Morrison closed form of g^{ab̄}.
    pub fn metric_inverse(&self, phi: &[C64]) -> Result<HermitianMatrix> {
        let r = norm2(phi).sqrt();
        let rad = self.radial(r)?;
        // g = α I + Q u wᵀ with u = φ̄, w = φ, wᵀu = r²
        let beta = rad.q / (rad.alpha * (rad.alpha + rad.q * r * r));
        // inverse[a][b] is the right inverse in Σ_b g[a][b] inv[b][c] = δ_ac
        Ok(HermitianMatrix::from_upper(phi.len(), |a, b| {
            let d = if a == b { 1.0 / rad.alpha } else { 0.0 };
            C64::new(d, 0.0) - beta * phi[a].conj() * phi[b]
        }))
    }

    /// ∂_c g_{ab̄} indexed as `[c][a][b]`.
    pub fn metric_derivative(&self, phi: &[C64]) -> Result<Rank3> {
        let n = phi.len();
        let r = norm2(phi).sqrt();
        let rad = self.radial(r)?;
        let mut data = vec![C64::new(0.0, 0.0); n * n * n];
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut v = rad.q2 * phi[a].conj() * phi[b] * phi[c].conj();
                    if a == b {
                        v += rad.q * phi[c].conj();
                    }
                    if c == b {
                        v += rad.q * phi[a].conj();
                    }
                    data[(c * n + a) * n + b] = v;
                }
            }
        }
        Ok(Rank3 { dim: n, data })
    }

    /// Evaluates the integrated radial bound on |Φ| and, when configured, the
    /// lower bound, at each radius. Fails with `HypothesisViolated` when the
    /// hypothesis |Q'/2r| ≤ Σ b_n rⁿ fails at a sampled radius.
    pub fn bound_check(&self, radii: &[f64]) -> Result<BoundReport> {
        let mut rows = Vec::with_capacity(radii.len());
        for &r in radii {
            if !(r > 0.0 && r <= self.r_max) {
                return Err(MkgError::RadiusExceeded { r, r_max: self.r_max });
            }
            let rad = self.radial(r)?;
            let hyp_rhs = poly_eval(&self.bounds.b, r);
            let hyp_lhs = rad.q2.abs();
            if hyp_lhs > hyp_rhs * (1.0 + 1e-12) + 1e-300 {
                return Err(MkgError::HypothesisViolated { r, lhs: hyp_lhs, rhs: hyp_rhs });
            }
            let lhs = self.potential(r).abs();
            let rhs = integrated_bound(&self.bounds, r);
            let tol = 1e-12 * rhs.abs().max(1e-300);
            let lower = self.lower.map(|lb| lhs + tol >= 0.5 * lb.c1 * r * r + lb.c2);
            rows.push(BoundRow { r, lhs, rhs, holds: lhs <= rhs + tol, hyp_lhs, hyp_rhs, lower_holds: lower });
        }
        Ok(BoundReport { rows })
    }

    /// Fits the bound constants from a radius scan: b₀ = max |Q'/2r|,
    /// C₁ = |Q(0)|, C₂ = Φ''(0), C₃ = |Φ(0)|.
    pub fn fit_bound_constants(&self, radii: &[f64]) -> Result<BoundConstants> {
        let mut b0: f64 = 0.0;
        for &r in radii {
            b0 = b0.max(self.radial(r)?.q2.abs());
        }
        let origin = self.radial(0.0)?;
        Ok(BoundConstants {
            b: if b0 > 0.0 { vec![b0] } else { vec![] },
            c1: origin.q.abs(),
            c2: 2.0 * origin.alpha,
            c3: self.potential(0.0).abs(),
        })
    }
}

pub fn kahler_metric(family: &KahlerFamily, phi: &[C64]) -> Result<HermitianMatrix> {
    family.metric(phi)
}

pub fn kahler_metric_inverse(family: &KahlerFamily, phi: &[C64]) -> Result<HermitianMatrix> {
    family.metric_inverse(phi)
}

pub fn kahler_metric_holomorphic_derivative(family: &KahlerFamily, phi: &[C64]) -> Result<Rank3> {
    family.metric_derivative(phi)
}

/// Upper bound |Φ(r)| ≤ RHS and the lower bound at each radius.
pub fn kahler_bound_check(family: &KahlerFamily, radii: &[f64]) -> Result<BoundReport> {
    family.bound_check(radii)
}

/// Σ 8bₙ r^{n+6}/((n+4)(n+5)(n+6)) + Σ 12bₙ r^{n+4}/((n+2)(n+3)(n+4))
/// + 2C₁r³ + C₂r²/2 + C₃
pub fn integrated_bound(k: &BoundConstants, r: f64) -> f64 {
    let mut s = 0.0;
    for (n, &b) in k.b.iter().enumerate() {
        let m = n as f64;
        s += 8.0 * b * r.powi(n as i32 + 6) / ((m + 4.0) * (m + 5.0) * (m + 6.0));
        s += 12.0 * b * r.powi(n as i32 + 4) / ((m + 2.0) * (m + 3.0) * (m + 4.0));
    }
    s + 2.0 * k.c1 * r.powi(3) + 0.5 * k.c2 * r * r + k.c3
}

fn poly_eval(c: &[f64], r: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * r + v)
}

pub(crate) fn norm2(phi: &[C64]) -> f64 {
    phi.iter().map(|z| z.norm_sqr()).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub hyp_lhs: f64,
    pub hyp_rhs: f64,
    pub lower_holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| !r.holds).count()
    }
    pub fn lower_violations(&self) -> usize {
        self.rows.iter().filter(|r| r.lower_holds == Some(false)).count()
    }
}

/// Hermitian matrix stored as its packed upper triangle, so
/// `get(a, b) == get(b, a).conj()` holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    upper: Vec<C64>,
}

impl HermitianMatrix {
    /// Builds from `f(a, b)` evaluated for a ≤ b; diagonal imaginary parts
    /// are dropped.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for a in 0..dim {
            for b in a..dim {
                let v = f(a, b);
                upper.push(if a == b { C64::new(v.re, 0.0) } else { v });
            }
        }
        Self { dim, upper }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_upper(dim, |a, b| C64::new(if a == b { 1.0 } else { 0.0 }, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn idx(&self, a: usize, b: usize) -> usize {
        a * self.dim - a * (a + 1) / 2 + b
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        if a <= b {
            self.upper[self.idx(a, b)]
        } else {
            self.upper[self.idx(b, a)].conj()
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim, self.dim, |a, b| self.get(a, b))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.to_dmatrix().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn matmul(&self, other: &HermitianMatrix) -> DMatrix<C64> {
        self.to_dmatrix() * other.to_dmatrix()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.upper.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Complex rank-3 array indexed `[c][a][b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rank3 {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl Rank3 {
    pub fn get(&self, c: usize, a: usize, b: usize) -> C64 {
        self.data[(c * self.dim + a) * self.dim + b]
    }
}

/// Finite-difference reference values used by `check-geometry`.
pub mod oracle {
    use super::*;

    const W4: [(f64, f64); 4] = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];

    /// ∂K/∂φ̄^b = Φ'(r) φ^b / (2r), chain rule on Φ' only.
    fn grad_bar(fam: &KahlerFamily, phi: &[C64]) -> Vec<C64> {
        let r = norm2(phi).sqrt();
        let s = fam.potential_d1(r) / (2.0 * r);
        phi.iter().map(|z| z * s).collect()
    }

    /// 4th-order central difference of ∂K/∂φ̄ in the holomorphic direction,
    /// giving the complex Hessian ∂_a∂_b̄ K as `[a][b]`.
    pub fn hessian(fam: &KahlerFamily, phi: &[C64], step: f64) -> DMatrix<C64> {
        let n = phi.len();
        let mut out = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for a in 0..n {
            let mut dx = vec![C64::new(0.0, 0.0); n];
            let mut dy = vec![C64::new(0.0, 0.0); n];
            for &(s, w) in &W4 {
                let mut p = phi.to_vec();
                p[a] += C64::new(s * step, 0.0);
                for (acc, v) in dx.iter_mut().zip(grad_bar(fam, &p)) {
                    *acc += v * w;
                }
                let mut p = phi.to_vec();
                p[a] += C64::new(0.0, s * step);
                for (acc, v) in dy.iter_mut().zip(grad_bar(fam, &p)) {
                    *acc += v * w;
                }
            }
            for b in 0..n {
                out[(a, b)] = 0.5 * (dx[b] - C64::i() * dy[b]) / step;
            }
        }
        out
    }

    /// 4th-order central difference of the metric in the holomorphic
    /// direction, `[c][a][b]`.
    pub fn metric_derivative(fam: &KahlerFamily, phi: &[C64], step: f64) -> Result<Rank3> {
        let n = phi.len();
        let mut data = vec![C64::new(0.0, 0.0); n * n * n];
        for c in 0..n {
            for &(s, w) in &W4 {
                for (dir, unit) in [(1.0, C64::new(1.0, 0.0)), (-1.0, C64::i())] {
                    let mut p = phi.to_vec();
                    p[c] += unit * (s * step);
                    let g = fam.metric(&p)?;
                    // ∂_c = ½(∂_x − i ∂_y)
                    let factor = if dir > 0.0 { C64::new(0.5 * w, 0.0) } else { C64::new(0.0, -0.5 * w) };
                    for a in 0..n {
                        for b in 0..n {
                            data[(c * n + a) * n + b] += factor * g.get(a, b) / step;
                        }
                    }
                }
            }
        }
        Ok(Rank3 { dim: n, data })
    }
}

/// Step of the finite-difference Hessian oracle.
pub const ORACLE_STEP: f64 = 1e-3;

/// Formula metric and holomorphic derivative against the finite-difference
/// oracle at random points.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub points: usize,
    /// max relative deviation of the metric from the Hessian of Φ(|φ|)
    pub metric_rel: f64,
    /// same for the (4r)-normalised Q, kept to show it does not match
    pub metric_rel_inverse_linear: f64,
    pub derivative_rel: f64,
    /// max |g g⁻¹ − I|
    pub inverse_err: f64,
}

impl OracleReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.metric_rel < tol && self.derivative_rel < tol && self.inverse_err < tol
    }
}

fn rel_dev(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

/// Compares against the oracle at `points` random φ ∈ ℂ^`dim` with
/// |φ| ∈ [0.1, min(2, r_max)/1.1].
pub fn oracle_check(fam: &KahlerFamily, dim: usize, points: usize, seed: u64) -> Result<OracleReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let top = 2.0f64.min(fam.r_max()) / 1.1;
    let mut rep =
        OracleReport { points, metric_rel: 0.0, metric_rel_inverse_linear: 0.0, derivative_rel: 0.0, inverse_err: 0.0 };
    for _ in 0..points {
        let mut phi: Vec<C64> =
            (0..dim).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let r = norm2(&phi).sqrt().max(1e-12);
        let target = rng.random_range(0.1..top);
        for z in &mut phi {
            *z *= target / r;
        }
        let h = oracle::hessian(fam, &phi, ORACLE_STEP);
        let g = fam.metric(&phi)?;
        rep.metric_rel = rep.metric_rel.max(rel_dev(&g.to_dmatrix(), &h));
        let gl = fam.metric_with(&phi, QNormalization::InverseLinear)?;
        rep.metric_rel_inverse_linear = rep.metric_rel_inverse_linear.max(rel_dev(&gl.to_dmatrix(), &h));
        let d = fam.metric_derivative(&phi)?;
        let dn = oracle::metric_derivative(fam, &phi, ORACLE_STEP)?;
        let scale = dn.data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let dev = d.data.iter().zip(&dn.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        rep.derivative_rel = rep.derivative_rel.max(dev / scale);
        let gi = fam.metric_inverse(&phi)?;
        let prod = g.matmul(&gi) - DMatrix::<C64>::identity(dim, dim);
        rep.inverse_err = rep.inverse_err.max(prod.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn flat_metric_is_identity() {
        let f = KahlerFamily::flat();
        let g = f.metric(&[c(0.3, 0.4), c(0.0, 0.0)]).unwrap();
        assert_eq!(g, HermitianMatrix::identity(2));
        let g = f.metric(&[c(1.0, 0.0)]).unwrap();
        assert_eq!(g.get(0, 0), c(1.0, 0.0));
    }

    #[test]
    fn quartic_metric_and_inverse_at_one() {
        let f = KahlerFamily::polynomial(vec![0.0, 0.0, 1.0, 0.0, 0.25], 10.0).unwrap();
        let g = f.metric(&[c(1.0, 0.0)]).unwrap();
        assert!((g.get(0, 0).re - 2.0).abs() < 1e-15);
        let gi = f.metric_inverse(&[c(1.0, 0.0)]).unwrap();
        assert!((gi.get(0, 0).re - 0.5).abs() < 1e-15);
        let d = f.metric_derivative(&[c(1.0, 0.0)]).unwrap();
        assert!((d.get(0, 0, 0) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn origin_limits_match_series() {
        let f = KahlerFamily::polynomial(vec![0.0, 0.0, 1.0, 0.0, 0.5, 0.0, 0.2], 10.0).unwrap();
        let at0 = f.radial(0.0).unwrap();
        let near = f.radial(2e-8).unwrap();
        assert!((at0.alpha - near.alpha).abs() < 1e-12);
        assert!((at0.q - near.q).abs() < 1e-12);
        assert!((at0.q2 - near.q2).abs() < 1e-12);
        assert_eq!(at0, Radial { alpha: 1.0, q: 1.0, q2: 1.2000000000000002 });
    }

    #[test]
    fn radius_and_degeneracy_errors() {
        let f = KahlerFamily::flat();
        assert!(matches!(f.metric(&[c(11.0, 0.0)]), Err(MkgError::RadiusExceeded { .. })));
        assert!(KahlerFamily::polynomial(vec![0.0, 0.0, -1.0], 10.0).is_err());
        let odd = KahlerFamily::polynomial(vec![0.0, 0.0, 1.0, 0.1], 10.0).unwrap();
        assert!(matches!(odd.radial(0.0), Err(MkgError::DegenerateMetric { .. })));
    }

    #[test]
    fn hermitian_storage() {
        let m = HermitianMatrix::from_upper(3, |a, b| c(a as f64 + 1.0, b as f64 * 0.5 + 0.25));
        for a in 0..3 {
            assert_eq!(m.get(a, a).im, 0.0);
            for b in 0..3 {
                assert_eq!(m.get(a, b), m.get(b, a).conj());
            }
        }
    }

    #[test]
    fn flat_bound_is_equality_at_one() {
        let f = KahlerFamily::flat();
        let rep = f.bound_check(&[1.0]).unwrap();
        assert_eq!(rep.rows[0].lhs, 1.0);
        assert_eq!(rep.rows[0].rhs, 1.0);
        assert!(rep.rows[0].holds);
        let rep = f.bound_check(&[0.5, 1.0, 2.0]).unwrap();
        assert_eq!(rep.lower_violations(), 0);
    }

    #[test]
    fn hypothesis_violation_is_reported() {
        let f = KahlerFamily::polynomial(vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.1], 10.0).unwrap();
        assert!(matches!(f.bound_check(&[1.0]), Err(MkgError::HypothesisViolated { .. })));
    }
}
