//! Gauge couplings h(Ψ), k(Ψ) of the form base + amplitude·tanh(Ψ)·mod.

use nalgebra::DMatrix;

use crate::error::{MkgError, Result};

/// Largest supported number of gauge fields.
pub const MAX_GAUGE: usize = 8;

/// Dense real N×N matrix held inline, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallMat {
    pub n: usize,
    pub a: [f64; MAX_GAUGE * MAX_GAUGE],
}

impl SmallMat {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_GAUGE, "at most {MAX_GAUGE} gauge fields");
        Self { n, a: [0.0; MAX_GAUGE * MAX_GAUGE] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(MkgError::Shape(format!("expected {} entries, got {}", n * n, data.len())));
        }
        if n > MAX_GAUGE {
            return Err(MkgError::Shape(format!("at most {MAX_GAUGE} gauge fields")));
        }
        let mut m = Self::zeros(n);
        m.a[..n * n].copy_from_slice(data);
        Ok(m)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = *self;
        m.a.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// self + s·other
    pub fn axpy(&self, s: f64, other: &SmallMat) -> Self {
        let mut m = *self;
        for (v, o) in m.a.iter_mut().zip(other.a.iter()) {
            *v += s * o;
        }
        m
    }

    pub fn matmul(&self, other: &SmallMat) -> Self {
        let n = self.n;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    m.a[i * n + j] += a * other.get(k, j);
                }
            }
        }
        m
    }

    /// y = M x
    #[inline]
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.a[i * n + j] * x[j];
            }
            y[i] = s;
        }
    }

    /// xᵀ M y
    #[inline]
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            let mut r = 0.0;
            for j in 0..n {
                r += self.a[i * n + j] * y[j];
            }
            s += x[i] * r;
        }
        s
    }

    pub fn is_zero(&self) -> bool {
        self.a[..self.n * self.n].iter().all(|&v| v == 0.0)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn max_abs_diff(&self, other: &SmallMat) -> f64 {
        self.a[..self.n * self.n]
            .iter()
            .zip(&other.a[..self.n * self.n])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let mut s = Self::zeros(m.nrows());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                s.set(i, j, m[(i, j)]);
            }
        }
        s
    }

    /// Spectral norm of a symmetric matrix.
    pub fn spectral_norm(&self) -> f64 {
        self.to_dmatrix().symmetric_eigenvalues().iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.to_dmatrix().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingKind {
    Constant,
    Saturating,
}

/// One of h or k: base + amplitude·tanh(Ψ)·mod.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    pub kind: CouplingKind,
    pub base: SmallMat,
    pub modulation: SmallMat,
    pub amplitude: f64,
}

impl CouplingMatrix {
    pub fn constant(base: SmallMat) -> Self {
        let n = base.n;
        Self { kind: CouplingKind::Constant, base, modulation: SmallMat::zeros(n), amplitude: 0.0 }
    }

    pub fn saturating(base: SmallMat, modulation: SmallMat, amplitude: f64) -> Self {
        Self { kind: CouplingKind::Saturating, base, modulation, amplitude }
    }

    fn active(&self) -> bool {
        self.kind == CouplingKind::Saturating && self.amplitude != 0.0 && !self.modulation.is_zero()
    }

    /// (σ, σ', σ'') of amplitude·tanh at Ψ.
    #[inline]
    fn shape(&self, psi: f64) -> (f64, f64, f64) {
        if !self.active() {
            return (0.0, 0.0, 0.0);
        }
        let t = psi.tanh();
        let s2 = 1.0 - t * t;
        (self.amplitude * t, self.amplitude * s2, -2.0 * self.amplitude * s2 * t)
    }

    pub fn eval(&self, psi: f64) -> SmallMat {
        self.base.axpy(self.shape(psi).0, &self.modulation)
    }

    pub fn eval_prime(&self, psi: f64) -> SmallMat {
        self.modulation.scaled(self.shape(psi).1)
    }

    pub fn eval_second(&self, psi: f64) -> SmallMat {
        self.modulation.scaled(self.shape(psi).2)
    }

    /// σ(Ψ) and σ'(Ψ) only; the hot path rebuilds h from these.
    #[inline]
    pub fn sigma(&self, psi: f64) -> (f64, f64) {
        let (s, d, _) = self.shape(psi);
        (s, d)
    }

    /// sup over Ψ ≥ 0 of ‖value‖₂ and ‖value'‖₂, from tanh ∈ [0, 1) and sech² ∈ (0, 1].
    pub fn suprema(&self) -> (f64, f64) {
        if !self.active() {
            return (self.base.spectral_norm(), 0.0);
        }
        let at_inf = self.base.axpy(self.amplitude, &self.modulation).spectral_norm();
        let at_zero = self.base.spectral_norm();
        (at_inf.max(at_zero), self.amplitude.abs() * self.modulation.spectral_norm())
    }
}

/// Gauge couplings h (positive definite) and k.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingFamily {
    pub n_gauge: usize,
    pub h: CouplingMatrix,
    pub k: CouplingMatrix,
    // h⁻¹ = C diag(1/(1 + σμ)) Cᵀ with C = B^{-1/2} U
    inv_c: SmallMat,
    inv_mu: [f64; MAX_GAUGE],
}

impl CouplingFamily {
    /// h = δ, k = 0.
    pub fn trivial(n_gauge: usize) -> Self {
        Self::new(
            CouplingMatrix::constant(SmallMat::identity(n_gauge)),
            CouplingMatrix::constant(SmallMat::zeros(n_gauge)),
        )
        .expect("identity coupling is definite")
    }

    pub fn new(h: CouplingMatrix, k: CouplingMatrix) -> Result<Self> {
        let n = h.base.n;
        if n == 0 || k.base.n != n || h.modulation.n != n || k.modulation.n != n {
            return Err(MkgError::Shape("coupling matrices must share N_V".into()));
        }
        for (name, m) in [("h.base", &h.base), ("h.mod", &h.modulation), ("k.base", &k.base), ("k.mod", &k.modulation)]
        {
            if !m.is_symmetric() {
                return Err(MkgError::Shape(format!("{name} is not symmetric")));
            }
            if m.a.iter().any(|v| !v.is_finite()) || !h.amplitude.is_finite() || !k.amplitude.is_finite() {
                return Err(MkgError::Shape(format!("{name} has non-finite entries")));
            }
        }
        let lambda_min = h.base.min_eigenvalue();
        let mod_norm = if h.active() { h.amplitude.abs() * h.modulation.spectral_norm() } else { 0.0 };
        if !(lambda_min > mod_norm) {
            return Err(MkgError::IndefiniteCoupling { lambda_min, mod_norm });
        }

        let eig = h.base.to_dmatrix().symmetric_eigen();
        let inv_sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
            * eig.eigenvectors.transpose();
        let m = if h.active() { h.modulation.to_dmatrix() } else { DMatrix::zeros(n, n) };
        let inner = &inv_sqrt * m * &inv_sqrt;
        let inner = (&inner + inner.transpose()) * 0.5;
        let e2 = inner.symmetric_eigen();
        let c = &inv_sqrt * &e2.eigenvectors;
        let mut inv_mu = [0.0; MAX_GAUGE];
        for (i, v) in e2.eigenvalues.iter().enumerate() {
            inv_mu[i] = *v;
        }
        Ok(Self { n_gauge: n, h, k, inv_c: SmallMat::from_dmatrix(&c), inv_mu })
    }

    pub fn eval_h(&self, psi: f64) -> SmallMat {
        self.h.eval(psi)
    }
    pub fn eval_h_prime(&self, psi: f64) -> SmallMat {
        self.h.eval_prime(psi)
    }
    pub fn eval_h_second(&self, psi: f64) -> SmallMat {
        self.h.eval_second(psi)
    }
    pub fn eval_k(&self, psi: f64) -> SmallMat {
        self.k.eval(psi)
    }
    pub fn eval_k_prime(&self, psi: f64) -> SmallMat {
        self.k.eval_prime(psi)
    }
    pub fn eval_k_second(&self, psi: f64) -> SmallMat {
        self.k.eval_second(psi)
    }

    pub fn eval_h_inverse(&self, psi: f64) -> SmallMat {
        let n = self.n_gauge;
        let sigma = self.h.sigma(psi).0;
        let mut out = SmallMat::zeros(n);
        for l in 0..n {
            let d = 1.0 / (1.0 + sigma * self.inv_mu[l]);
            for i in 0..n {
                let ci = self.inv_c.get(i, l) * d;
                for j in 0..n {
                    out.a[i * n + j] += ci * self.inv_c.get(j, l);
                }
            }
        }
        out
    }

    /// True when h is Ψ-independent and k is zero; the kernels skip work then.
    pub fn is_trivial_k(&self) -> bool {
        self.k.base.is_zero() && !self.k.active()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j2() -> SmallMat {
        SmallMat::from_rows(2, &[1.0, 1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn constant_family() {
        let c = CouplingFamily::trivial(3);
        assert_eq!(c.eval_h(7.3), SmallMat::identity(3));
        assert!(c.eval_h_inverse(7.3).max_abs_diff(&SmallMat::identity(3)) < 1e-15);
        assert!(c.eval_h_prime(7.3).is_zero());
        assert!(c.eval_k(1.0).is_zero());
    }

    #[test]
    fn saturating_at_zero() {
        let h = CouplingMatrix::saturating(SmallMat::identity(2), j2(), 0.25);
        let k = CouplingMatrix::saturating(SmallMat::zeros(2), SmallMat::identity(2), 0.1);
        let c = CouplingFamily::new(h, k).unwrap();
        assert_eq!(c.eval_h(0.0), SmallMat::identity(2));
        assert!(c.eval_h_prime(0.0).max_abs_diff(&j2().scaled(0.25)) < 1e-15);
        assert!(c.eval_k(0.0).is_zero());
        assert!(c.eval_k_prime(0.0).max_abs_diff(&SmallMat::identity(2).scaled(0.1)) < 1e-15);
        assert!((c.k.suprema().0 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn inverse_and_derivatives() {
        let h = CouplingMatrix::saturating(
            SmallMat::from_rows(2, &[2.0, 0.3, 0.3, 1.5]).unwrap(),
            SmallMat::from_rows(2, &[1.0, 0.5, 0.5, -1.0]).unwrap(),
            0.7,
        );
        let c = CouplingFamily::new(h, CouplingMatrix::constant(SmallMat::zeros(2))).unwrap();
        for &psi in &[0.0, 0.3, 1.7, 25.0] {
            let p = c.eval_h(psi).matmul(&c.eval_h_inverse(psi));
            assert!(p.max_abs_diff(&SmallMat::identity(2)) < 1e-12);
            let e = 1e-5;
            let fd = c.eval_h(psi + e).axpy(-1.0, &c.eval_h(psi - e)).scaled(0.5 / e);
            if psi > 0.0 {
                assert!(fd.max_abs_diff(&c.eval_h_prime(psi)) < 1e-8);
                let fd2 = c.eval_h_prime(psi + e).axpy(-1.0, &c.eval_h_prime(psi - e)).scaled(0.5 / e);
                assert!(fd2.max_abs_diff(&c.eval_h_second(psi)) < 1e-8);
            }
        }
    }

    #[test]
    fn definiteness_enforced() {
        let h = CouplingMatrix::saturating(SmallMat::identity(2), j2(), 0.6);
        assert!(matches!(
            CouplingFamily::new(h, CouplingMatrix::constant(SmallMat::zeros(2))),
            Err(MkgError::IndefiniteCoupling { .. })
        ));
    }
}
