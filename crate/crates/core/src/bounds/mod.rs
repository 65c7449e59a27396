//! Estimate functionals of the a-priori bounds and the Gronwall audit.
//!
//! Every functional takes the L^∞ norms from a [`NormSnapshot`], the time
//! `t = snapshot.t` and, for the Sobolev-sector ones, 𝖤₀. Notation:
//! p = ‖φ‖, ∂p = ‖∂φ‖, Dp = ‖Dφ‖, F = ‖⁽⁴⁾F‖, A = ‖A‖, ∂Ψ = ‖∂Ψ‖, all L^∞.

pub mod audit;
pub mod terms;

use serde::{Deserialize, Serialize};

use crate::error::{MkgError, Result};
use crate::lattice::NormSnapshot;
use crate::potential::PotentialKind;

pub use audit::{audit_gronwall, AuditReport, FitResult, FittedConstants};

/// Constants of the estimate side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateConstants {
    /// b_n for n = 0, 1, …; missing entries are zero.
    pub b: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// Upper limit N of the power sums.
    pub n_cut: usize,
    /// 𝒥₀, the initial flat energy.
    pub j0: f64,
    pub potential_kind: PotentialKind,
}

impl Default for EstimateConstants {
    fn default() -> Self {
        Self {
            b: Vec::new(),
            c1: 0.0,
            c2: 0.0,
            c3: 0.0,
            c4: 1.0,
            n_cut: 1,
            j0: 0.0,
            potential_kind: PotentialKind::Polynomial,
        }
    }
}

impl EstimateConstants {
    pub fn validate(&self) -> Result<()> {
        let all = self.b.iter().chain([&self.c1, &self.c2, &self.c3, &self.c4, &self.j0]);
        if all.clone().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(MkgError::Shape("estimate constants must be finite and nonnegative".into()));
        }
        if self.n_cut == 0 {
            return Err(MkgError::Shape("estimate cutoff N must be at least 1".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn b_n(&self, n: usize) -> f64 {
        self.b.get(n).copied().unwrap_or(0.0)
    }

    fn polynomial(&self) -> bool {
        self.potential_kind == PotentialKind::Polynomial
    }
}

/// Σ_{n=lo}^{hi} x^{n+shift}; empty when hi < lo.
#[inline]
fn psum(x: f64, lo: i64, hi: i64, shift: i64) -> f64 {
    (lo..=hi).map(|n| x.powi((n + shift) as i32)).sum()
}

/// Σ_{n=lo}^{hi} w(n) x^{n+shift}.
#[inline]
fn wsum(x: f64, lo: i64, hi: i64, shift: i64, w: impl Fn(i64) -> f64) -> f64 {
    (lo..=hi).map(|n| w(n) * x.powi((n + shift) as i32)).sum()
}

struct V {
    p: f64,
    dp: f64,
    dcov: f64,
    f: f64,
    a: f64,
    dpsi: f64,
    tp1: f64,
}

impl V {
    fn of(s: &NormSnapshot) -> Self {
        Self {
            p: s.linf_phi,
            dp: s.linf_dphi,
            dcov: s.linf_Dphi,
            f: s.linf_F,
            a: s.linf_A,
            dpsi: s.linf_dPsi,
            tp1: 1.0 + s.t,
        }
    }
}

/// 𝓞 = p ∂p (1 + 𝒥₀(1+t) Σ_{n=1}^{N−2} p^{2n+1}).
pub fn eval_O(s: &NormSnapshot, k: &EstimateConstants) -> f64 {
    let v = V::of(s);
    let n = k.n_cut as i64;
    let sum: f64 = (1..=n - 2).map(|i| v.p.powi((2 * i + 1) as i32)).sum();
    v.p * v.dp * (1.0 + k.j0 * v.tp1 * sum)
}

/// 𝓘: 𝓞 for polynomial potentials, p ∂p 𝒥₀ otherwise.
pub fn eval_I(s: &NormSnapshot, k: &EstimateConstants) -> f64 {
    if k.polynomial() {
        eval_O(s, k)
    } else {
        s.linf_phi * s.linf_dphi * k.j0
    }
}

/// 𝓓 = Σ_{0}^{N−1} p^{2n} + 𝒥₀(1+t) ∂Ψ Σ_{0}^{N−2} p^{2n}.
pub fn eval_D_func(s: &NormSnapshot, k: &EstimateConstants) -> f64 {
    let v = V::of(s);
    let n = k.n_cut as i64;
    let even = |hi: i64| -> f64 { (0..=hi).map(|i| v.p.powi((2 * i) as i32)).sum() };
    even(n - 1) + k.j0 * v.tp1 * v.dpsi * even(n - 2)
}

/// 𝓗: 𝓓 for polynomial potentials, 𝒥₀(∂Ψ² + 1) otherwise.
pub fn eval_H_func(s: &NormSnapshot, k: &EstimateConstants) -> f64 {
    if k.polynomial() {
        eval_D_func(s, k)
    } else {
        k.j0 * (s.linf_dPsi * s.linf_dPsi + 1.0)
    }
}

/// Z = p + p³ + Σ p^{n+2} + Σ p^{n+4}, n = 1..N.
fn z_of(p: f64, n: i64) -> f64 {
    p + p.powi(3) + psum(p, 1, n, 2) + psum(p, 1, n, 4)
}

/// Gauge-field functionals (L, M, N).
pub fn eval_LMN(s: &NormSnapshot, k: &EstimateConstants) -> (f64, f64, f64) {
    let v = V::of(s);
    let n = k.n_cut as i64;
    let (p, dp) = (v.p, v.dp);
    let z = z_of(p, n);
    let i = eval_I(s, k);
    let l = p * z * (dp + 1.0) + v.dpsi * p + dp + p * p * dp + p * i;
    let tail = psum(p, 1, n, 5) + psum(p, 1, n, 4) + psum(p, 1, n, 3) + psum(p, 1, n, 2);
    let m = p * v.dpsi
        + p * p
        + wsum(p, 1, n, 3, |j| (j + 2) as f64 / (j + 1) as f64 * k.b_n(j as usize))
        + k.c1 * p * p
        + p * p
        + p
        + tail
        + 1.0;
    let nn = tail + p * p + p + 1.0 + z * (dp + 1.0) + p * dp + k.c4 * i;
    (l, m, nn)
}

/// Scalar-sector functionals (𝒮, 𝒳, 𝒰, 𝒲).
pub fn eval_SXUW(s: &NormSnapshot, k: &EstimateConstants) -> (f64, f64, f64, f64) {
    let v = V::of(s);
    let n = k.n_cut as i64;
    let (p, dp) = (v.p, v.dp);
    let z = z_of(p, n);
    let i = eval_I(s, k);
    let cs = dp * (psum(p, 1, n, 2) + psum(p, 1, n, 1) + 1.0) + i + p + v.tp1 * v.a + dp * z * (1.0 + p);
    let cx = 1.0 + dp * dp * p * p + dp * p * p + p + dp + p * p;
    let cu = z * (1.0 + p) + p * dp + k.c4 * i;
    let cw = (z * (1.0 + dp) + p * dp + k.c4 * i) * z + eval_H_func(s, k);
    (cs, cx, cu, cw)
}

/// Values of the Sobolev-sector functionals at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SobolevFunctionals {
    pub y: f64,
    pub z: f64,
    pub p_cal: f64,
    pub x: f64,
    pub w: f64,
    pub p: f64,
    pub u: f64,
    pub z_tilde: f64,
    pub z_hat: f64,
    pub s: f64,
    pub t: f64,
    pub z_cal: f64,
    pub chi: f64,
}

impl SobolevFunctionals {
    /// X + W + P + U, the 𝖤₁ growth rate.
    pub fn e1_rate(&self) -> f64 {
        self.x + self.w + self.p + self.u
    }
}

/// Y, Z, 𝒫, X, W, P, U, Z̃, Ẑ, S, T, 𝒵, χ.
pub fn eval_YZP(s: &NormSnapshot, k: &EstimateConstants, e0_sf: f64) -> SobolevFunctionals {
    let v = V::of(s);
    let n = k.n_cut as i64;
    let (p, dp, dc, f) = (v.p, v.dp, v.dcov, v.f);
    let e = e0_sf.max(0.0).sqrt();
    let psi = p * p;
    let b = |j: i64| k.b_n(j as usize);

    let y = 8.0 * wsum(p, 1, n, 6, b)
        + wsum(p, 1, n, 5, b)
        + 12.0 * wsum(p, 1, n, 3, b)
        + 6.0 * k.c1 * (p * p + p.powi(3))
        + (k.c2 + k.c3) * p
        + k.c3;
    let z = z_of(p, n);
    let i = eval_I(s, k);
    let p_cal = y * (dc + 1.0 + p) + f * dp * (1.0 + p) + (dp + dc) * z + i + 1.0;

    let ratio = |j: i64| (j + 2) as f64 / (j + 1) as f64 * b(j);
    let zt = wsum(p, 1, n, 2, ratio) + k.c1 * p;
    let zh = wsum(p, 0, n, 1, ratio) + wsum(p, 0, n, 2, |j| (j + 3) as f64 * b(j)) + k.c1;

    let npsi = (1..=n).map(|j| j as f64 * psi.powi((j - 1) as i32)).sum::<f64>();
    let (z_cal, chi) = if k.polynomial() {
        let lower = (2..=n).map(|j| (j - 1) as f64 * psi.powi((j - 2) as i32)).sum::<f64>();
        (p * lower * e + npsi, e * npsi)
    } else {
        (1.0 + e * p, e)
    };

    let x = y * ((dc * dp + dc + p + dp + 1.0) * e + 1.0) + e * f * (dp * dp * p + dp) + p;
    let w = dc * y * (dp * e + p + v.dpsi * e * dp)
        + f * p * dp * (dp * e + p * e + v.dpsi * e * dp)
        + dc * v.dpsi * zt * e
        + dc * p * (zh * dp * e + zt)
        + dp * y * (p + e * p * p + e * dp * p + dc * e)
        + f * dp * dp * p.powi(3) * (dp * dp + p) * e
        + dp * dp * p * p;

    let s5 = dp * zt * (p * f * e + chi)
        + e * dp * zt * zt * (1.0 + p) * (dc + dp)
        + e * z * (dc + 1.0) * (dp + p)
        + e * f * dp
        + dc * p * p * dp * e * (1.0 + p)
        + zh * dp * (1.0 + p) * e * e;
    let t5 = e * (1.0 + p) * zt + f * p + z * (dc + 1.0);

    let pp = p * p * dp * dp
        + zt * dc * dp * p
        + f * dp * p * p
        + f * dp
        + p * t5
        + y * (t5 + p + v.a + 1.0)
        + p * s5
        + p * z_cal
        + y * s5
        + e * y * (dp + p)
        + y * z_cal
        + p * p * dp.powi(3) * f * e
        + dc * dp * p * e * y
        + zt * dp * p * dc * (e + e * (p * dp + p * p))
        + f * (v.dpsi * dp * dp * e * p + dp * dp * p * e)
        + f * (v.dpsi * (dp * e + p) + v.dpsi * v.dpsi * dp * e);
    let u = s5 + t5 + z_cal;

    SobolevFunctionals { y, z, p_cal, x, w, p: pp, u, z_tilde: zt, z_hat: zh, s: s5, t: t5, z_cal, chi }
}

/// 𝒢 = ‖⁽⁴⁾F‖ + ‖Dφ‖.
pub fn eval_G(s: &NormSnapshot) -> f64 {
    s.linf_F + s.linf_Dphi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(t: f64) -> NormSnapshot {
        let mut s = NormSnapshot::from_values(t, &[1.0; 11]);
        s.t = t;
        s
    }

    fn poly(n: usize) -> EstimateConstants {
        EstimateConstants { n_cut: n, j0: 1.0, ..Default::default() }
    }

    #[test]
    fn zero_snapshot_constants() {
        let z = NormSnapshot::default();
        let k = EstimateConstants { c3: 5.0, ..poly(3) };
        assert_eq!(eval_I(&z, &k), 0.0);
        assert_eq!(eval_LMN(&z, &k), (0.0, 1.0, 1.0));
        let (s, x, u, w) = eval_SXUW(&z, &k);
        assert_eq!((s, x, u), (0.0, 1.0, 0.0));
        assert_eq!(w, 1.0);
        let f = eval_YZP(&z, &k, 0.0);
        assert_eq!(f.y, 5.0);
        assert_eq!((f.z, f.z_tilde), (0.0, 0.0));
    }

    #[test]
    fn sine_gordon_I_is_a_product() {
        let k = EstimateConstants { j0: 2.0, potential_kind: PotentialKind::SineGordon, ..poly(2) };
        assert_eq!(eval_I(&ones(0.0), &k), 2.0);
    }

    #[test]
    fn polynomial_O_sum_limits() {
        // Σ_{n=1}^{N−2} is empty at N = 2 and has one term at N = 3.
        assert_eq!(eval_O(&ones(0.0), &poly(2)), 1.0);
        assert_eq!(eval_O(&ones(0.0), &poly(3)), 2.0);
    }

    #[test]
    fn validate_rejects_negative() {
        let k = EstimateConstants { c2: -1.0, ..Default::default() };
        assert!(k.validate().is_err());
        assert!(EstimateConstants { n_cut: 0, ..Default::default() }.validate().is_err());
    }
}
