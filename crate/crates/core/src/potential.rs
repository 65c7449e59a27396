//! Scalar potentials V(Ψ), Ψ = |φ|².

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{MkgError, Result};

pub const DEFAULT_PSI_MAX: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Polynomial,
    SineGordon,
    Toda,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialFamily {
    /// Σ aₙ Ψⁿ; a₁ is the squared mass.
    Polynomial(Vec<f64>),
    /// V₀ (1 − cos λΨ)
    SineGordon { v0: f64, lambda: f64 },
    /// Σ ãₙ exp(−λ̃ₙ Ψ)
    Toda(Vec<(f64, f64)>),
}

impl PotentialFamily {
    pub fn zero() -> Self {
        PotentialFamily::Polynomial(vec![])
    }

    /// Validates the family and scans V ≥ 0 on [0, psi_max]. A negative
    /// value is logged, not rejected.
    pub fn checked(self, psi_max: f64) -> Result<Self> {
        match &self {
            PotentialFamily::Polynomial(a) if a.iter().any(|v| !v.is_finite()) => {
                return Err(MkgError::InvalidFamily("non-finite polynomial coefficient".into()))
            }
            PotentialFamily::SineGordon { v0, lambda } if !(v0.is_finite() && lambda.is_finite()) => {
                return Err(MkgError::InvalidFamily("non-finite sine-Gordon parameter".into()))
            }
            PotentialFamily::Toda(p) => {
                if let Some(&(_, l)) = p.iter().find(|(a, l)| !(*l > 0.0) || !a.is_finite() || !l.is_finite()) {
                    return Err(MkgError::InvalidFamily(format!("Toda exponent {l} must be positive")));
                }
            }
            _ => {}
        }
        if let Some(psi) = self.first_negative(psi_max) {
            log::warn!("potential is negative at psi = {psi}; energy positivity is not guaranteed");
        }
        Ok(self)
    }

    pub fn first_negative(&self, psi_max: f64) -> Option<f64> {
        let n = 10_000;
        (0..=n).map(|i| psi_max * i as f64 / n as f64).find(|&p| self.value(p) < -1e-14)
    }

    pub fn kind(&self) -> PotentialKind {
        match self {
            PotentialFamily::Polynomial(_) => PotentialKind::Polynomial,
            PotentialFamily::SineGordon { .. } => PotentialKind::SineGordon,
            PotentialFamily::Toda(_) => PotentialKind::Toda,
        }
    }

    /// Highest nonzero power for polynomials, else 1.
    pub fn degree(&self) -> usize {
        match self {
            PotentialFamily::Polynomial(a) => a.iter().rposition(|&v| v != 0.0).unwrap_or(0).max(1),
            _ => 1,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialFamily::Polynomial(a) => a.iter().all(|&v| v == 0.0),
            PotentialFamily::SineGordon { v0, .. } => *v0 == 0.0,
            PotentialFamily::Toda(p) => p.iter().all(|(a, _)| *a == 0.0),
        }
    }

    pub fn value(&self, psi: f64) -> f64 {
        self.eval_all(psi).0
    }

    pub fn prime(&self, psi: f64) -> f64 {
        self.eval_all(psi).1
    }

    pub fn second(&self, psi: f64) -> f64 {
        self.eval_all(psi).2
    }

    /// (V, V', V'') at Ψ.
    pub fn eval_all(&self, psi: f64) -> (f64, f64, f64) {
        match self {
            PotentialFamily::Polynomial(a) => {
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for (n, &c) in a.iter().enumerate().rev() {
                    v = v * psi + c;
                    if n >= 1 {
                        d1 = d1 * psi + n as f64 * c;
                    }
                    if n >= 2 {
                        d2 = d2 * psi + (n * (n - 1)) as f64 * c;
                    }
                }
                (v, d1, d2)
            }
            PotentialFamily::SineGordon { v0, lambda } => {
                let (s, c) = (lambda * psi).sin_cos();
                (v0 * (1.0 - c), v0 * lambda * s, v0 * lambda * lambda * c)
            }
            PotentialFamily::Toda(p) => p.iter().fold((0.0, 0.0, 0.0), |(v, d1, d2), &(a, l)| {
                let e = a * (-l * psi).exp();
                (v + e, d1 - l * e, d2 + l * l * e)
            }),
        }
    }

    /// ∂V/∂φ^d = V'(Ψ) φ̄_d.
    pub fn grad(&self, phi: &[C64]) -> Vec<C64> {
        let psi: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
        let d = self.prime(psi);
        phi.iter().map(|z| z.conj() * d).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn printed_examples() {
        let sg = PotentialFamily::SineGordon { v0: 1.0, lambda: PI };
        assert_eq!(sg.value(0.0), 0.0);
        let p4 = PotentialFamily::Polynomial(vec![0.0, 0.0, 1.0]);
        assert_eq!(p4.eval_all(2.0), (4.0, 4.0, 2.0));
        let toda = PotentialFamily::Toda(vec![(1.0, 1.0)]);
        assert_eq!(toda.eval_all(0.0), (1.0, -1.0, 1.0));
        assert_eq!(p4.grad(&[C64::new(1.0, 0.0)])[0], C64::new(2.0, 0.0));
        let sg2 = PotentialFamily::SineGordon { v0: 1.0, lambda: PI / 2.0 };
        assert!((sg2.grad(&[C64::new(1.0, 0.0)])[0].re - PI / 2.0).abs() < 1e-15);
        assert_eq!(p4.grad(&[C64::new(0.0, 0.0); 2]), vec![C64::new(0.0, 0.0); 2]);
    }

    #[test]
    fn toda_rejects_nonpositive_exponent() {
        assert!(PotentialFamily::Toda(vec![(1.0, 0.0)]).checked(DEFAULT_PSI_MAX).is_err());
        assert!(PotentialFamily::Toda(vec![(-1.0, 1.0)]).checked(DEFAULT_PSI_MAX).is_ok());
    }

    #[test]
    fn degree_and_zero() {
        assert_eq!(PotentialFamily::Polynomial(vec![0.0, 1.0, 0.5, 0.0]).degree(), 2);
        assert_eq!(PotentialFamily::zero().degree(), 1);
        assert!(PotentialFamily::zero().is_zero());
    }
}
