//! Symbolic monomial lists for every estimate functional.
//!
//! Each functional is expanded into Σ coef · Π xᵢ^{kᵢ} over the variables
//! below. The expansion is independent of the fast evaluators in the parent
//! module and serves as their transcription check.

use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use crate::lattice::NormSnapshot;

use super::EstimateConstants;

/// Variable slots. `B0 + n` is b_n.
pub const P: usize = 0;
pub const DP: usize = 1;
pub const DCOV: usize = 2;
pub const F: usize = 3;
pub const A: usize = 4;
pub const DPSI: usize = 5;
/// 𝖤₀^{1/2}
pub const E: usize = 6;
/// 1 + t
pub const TP1: usize = 7;
pub const J0: usize = 8;
pub const C4: usize = 9;
pub const C1: usize = 10;
pub const C2: usize = 11;
pub const C3: usize = 12;
pub const B0: usize = 13;

pub const NAMES: [&str; 13] = ["p", "dp", "Dp", "F", "A", "dPsi", "e", "tp1", "J0", "c4", "C1", "C2", "C3"];

/// Sparse polynomial with exponent vectors as keys.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    nvar: usize,
    pub terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(nvar: usize) -> Self {
        Self { nvar, terms: BTreeMap::new() }
    }

    pub fn constant(nvar: usize, c: f64) -> Self {
        let mut p = Self::zero(nvar);
        if c != 0.0 {
            p.terms.insert(vec![0; nvar], c);
        }
        p
    }

    pub fn var(nvar: usize, i: usize) -> Self {
        Self::monomial(nvar, 1.0, &[(i, 1)])
    }

    pub fn monomial(nvar: usize, c: f64, powers: &[(usize, u32)]) -> Self {
        let mut e = vec![0; nvar];
        for &(i, k) in powers {
            e[i] += k;
        }
        let mut p = Self::zero(nvar);
        if c != 0.0 {
            p.terms.insert(e, c);
        }
        p
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(self.nvar, 1.0), |acc, _| &acc * self)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero(self.nvar);
        for (e, v) in &self.terms {
            if c * v != 0.0 {
                out.terms.insert(e.clone(), c * v);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Term-by-term evaluation, summed in key order.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| e.iter().zip(x).fold(*c, |acc, (&k, &v)| acc * v.powi(k as i32))).sum()
    }

    /// Constant term.
    pub fn constant_term(&self) -> f64 {
        self.terms.get(&vec![0; self.nvar]).copied().unwrap_or(0.0)
    }

    /// Every coefficient is ≥ 0.
    pub fn nonnegative(&self) -> bool {
        self.terms.values().all(|&c| c >= 0.0)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            let v = out.terms.entry(e.clone()).or_insert(0.0);
            *v += c;
            if *v == 0.0 {
                out.terms.remove(e);
            }
        }
        out
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, o: Poly) -> Poly {
        &self + &o
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvar);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *out.terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, o: Poly) -> Poly {
        &self * &o
    }
}

/// Every functional with a monomial expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Functional {
    L,
    M,
    N,
    ScalarS,
    ScalarX,
    ScalarU,
    ScalarW,
    Y,
    Z,
    PCal,
    X,
    W,
    P,
    U,
    ZTilde,
    ZHat,
    S,
    T,
    ZCal,
    Chi,
    I,
    O,
    H,
    D,
}

impl Functional {
    pub const ALL: [Functional; 24] = [
        Self::L,
        Self::M,
        Self::N,
        Self::ScalarS,
        Self::ScalarX,
        Self::ScalarU,
        Self::ScalarW,
        Self::Y,
        Self::Z,
        Self::PCal,
        Self::X,
        Self::W,
        Self::P,
        Self::U,
        Self::ZTilde,
        Self::ZHat,
        Self::S,
        Self::T,
        Self::ZCal,
        Self::Chi,
        Self::I,
        Self::O,
        Self::H,
        Self::D,
    ];
}

/// Builds the expansions for a given cutoff and potential branch.
pub struct TermBuilder {
    n: u32,
    nb: usize,
    polynomial: bool,
}

impl TermBuilder {
    pub fn new(k: &EstimateConstants) -> Self {
        Self {
            n: k.n_cut as u32,
            nb: (k.n_cut + 1).max(k.b.len()),
            polynomial: k.potential_kind == crate::potential::PotentialKind::Polynomial,
        }
    }

    pub fn nvar(&self) -> usize {
        B0 + self.nb
    }

    /// Variable values for a snapshot.
    pub fn values(&self, s: &NormSnapshot, k: &EstimateConstants, e0_sf: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.nvar()];
        x[P] = s.linf_phi;
        x[DP] = s.linf_dphi;
        x[DCOV] = s.linf_Dphi;
        x[F] = s.linf_F;
        x[A] = s.linf_A;
        x[DPSI] = s.linf_dPsi;
        x[E] = e0_sf.max(0.0).sqrt();
        x[TP1] = 1.0 + s.t;
        x[J0] = k.j0;
        x[C4] = k.c4;
        x[C1] = k.c1;
        x[C2] = k.c2;
        x[C3] = k.c3;
        for n in 0..self.nb {
            x[B0 + n] = k.b_n(n);
        }
        x
    }

    fn v(&self, i: usize) -> Poly {
        Poly::var(self.nvar(), i)
    }

    fn c(&self, c: f64) -> Poly {
        Poly::constant(self.nvar(), c)
    }

    /// c · Π xᵢ^{kᵢ}
    fn m(&self, c: f64, pw: &[(usize, u32)]) -> Poly {
        Poly::monomial(self.nvar(), c, pw)
    }

    fn sum(&self, parts: Vec<Poly>) -> Poly {
        parts.into_iter().fold(self.c(0.0), |a, b| a + b)
    }

    /// Σ_{n=lo}^{hi} p^{n+shift}, with hi possibly below lo.
    fn psum(&self, lo: i64, hi: i64, shift: i64) -> Poly {
        self.sum((lo..=hi).map(|n| self.m(1.0, &[(P, (n + shift) as u32)])).collect())
    }

    pub fn build(&self, f: Functional) -> Poly {
        use Functional as Fu;
        let n = self.n as i64;
        let one = self.c(1.0);
        let p = self.v(P);
        let dp = self.v(DP);
        let dc = self.v(DCOV);
        let ff = self.v(F);
        let e = self.v(E);
        let dpsi = self.v(DPSI);
        let opp = &one + &p;
        match f {
            Fu::Z => self.sum(vec![p.clone(), p.pow(3), self.psum(1, n, 2), self.psum(1, n, 4)]),
            Fu::O => {
                let inner = &(&self.v(J0) * &self.v(TP1))
                    * &self.sum((1..=n - 2).map(|j| self.m(1.0, &[(P, (2 * j + 1) as u32)])).collect());
                &(&p * &dp) * &(&one + &inner)
            }
            Fu::I => {
                if self.polynomial {
                    self.build(Fu::O)
                } else {
                    self.m(1.0, &[(P, 1), (DP, 1), (J0, 1)])
                }
            }
            Fu::D => {
                let even = |hi: i64| self.sum((0..=hi).map(|j| self.m(1.0, &[(P, (2 * j) as u32)])).collect());
                &even(n - 1) + &(&self.m(1.0, &[(J0, 1), (TP1, 1), (DPSI, 1)]) * &even(n - 2))
            }
            Fu::H => {
                if self.polynomial {
                    self.build(Fu::D)
                } else {
                    &self.v(J0) * &(&dpsi.pow(2) + &one)
                }
            }
            Fu::L => {
                let z = self.build(Fu::Z);
                let i = self.build(Fu::I);
                self.sum(vec![&(&p * &z) * &(&dp + &one), &dpsi * &p, dp.clone(), &p.pow(2) * &dp, &p * &i])
            }
            Fu::M => {
                let bsum = self.sum(
                    (1..=n)
                        .map(|j| self.m((j + 2) as f64 / (j + 1) as f64, &[(B0 + j as usize, 1), (P, (j + 3) as u32)]))
                        .collect(),
                );
                self.sum(vec![
                    &p * &dpsi,
                    p.pow(2),
                    bsum,
                    &self.v(C1) * &p.pow(2),
                    p.pow(2),
                    p.clone(),
                    self.psum(1, n, 5),
                    self.psum(1, n, 4),
                    self.psum(1, n, 3),
                    self.psum(1, n, 2),
                    one.clone(),
                ])
            }
            Fu::N => {
                let z = self.build(Fu::Z);
                let i = self.build(Fu::I);
                self.sum(vec![
                    self.psum(1, n, 5),
                    self.psum(1, n, 4),
                    self.psum(1, n, 3),
                    self.psum(1, n, 2),
                    p.pow(2),
                    p.clone(),
                    one.clone(),
                    &z * &(&dp + &one),
                    &p * &dp,
                    &self.v(C4) * &i,
                ])
            }
            Fu::ScalarS => {
                let z = self.build(Fu::Z);
                self.sum(vec![
                    &dp * &self.sum(vec![self.psum(1, n, 2), self.psum(1, n, 1), one.clone()]),
                    self.build(Fu::I),
                    p.clone(),
                    &self.v(TP1) * &self.v(A),
                    &(&dp * &z) * &opp,
                ])
            }
            Fu::ScalarX => self.sum(vec![
                one.clone(),
                self.m(1.0, &[(DP, 2), (P, 2)]),
                self.m(1.0, &[(DP, 1), (P, 2)]),
                p.clone(),
                dp.clone(),
                p.pow(2),
            ]),
            Fu::ScalarU => self.sum(vec![&self.build(Fu::Z) * &opp, &p * &dp, &self.v(C4) * &self.build(Fu::I)]),
            Fu::ScalarW => {
                let z = self.build(Fu::Z);
                let brace = self.sum(vec![&z * &(&one + &dp), &p * &dp, &self.v(C4) * &self.build(Fu::I)]);
                &(&brace * &z) + &self.build(Fu::H)
            }
            Fu::Y => {
                let bs = |c: f64, shift: u32| {
                    self.sum((1..=n).map(|j| self.m(c, &[(B0 + j as usize, 1), (P, j as u32 + shift)])).collect())
                };
                self.sum(vec![
                    bs(8.0, 6),
                    bs(1.0, 5),
                    bs(12.0, 3),
                    &self.m(6.0, &[(C1, 1)]) * &(&p.pow(2) + &p.pow(3)),
                    &(&self.v(C2) + &self.v(C3)) * &p,
                    self.v(C3),
                ])
            }
            Fu::PCal => {
                let y = self.build(Fu::Y);
                self.sum(vec![
                    &y * &self.sum(vec![dc.clone(), one.clone(), p.clone()]),
                    &(&ff * &dp) * &opp,
                    &(&dp + &dc) * &self.build(Fu::Z),
                    self.build(Fu::I),
                    one.clone(),
                ])
            }
            Fu::ZTilde => {
                let parts = (1..=n)
                    .map(|j| self.m((j + 2) as f64 / (j + 1) as f64, &[(B0 + j as usize, 1), (P, (j + 2) as u32)]))
                    .collect();
                &self.sum(parts) + &(&self.v(C1) * &p)
            }
            Fu::ZHat => {
                let a = (0..=n)
                    .map(|j| self.m((j + 2) as f64 / (j + 1) as f64, &[(B0 + j as usize, 1), (P, (j + 1) as u32)]))
                    .collect();
                let b = (0..=n).map(|j| self.m((j + 3) as f64, &[(B0 + j as usize, 1), (P, (j + 2) as u32)])).collect();
                self.sum(vec![self.sum(a), self.sum(b), self.v(C1)])
            }
            Fu::ZCal => {
                let npsi = self.sum((1..=n).map(|j| self.m(j as f64, &[(P, 2 * (j as u32 - 1))])).collect());
                if self.polynomial {
                    let lower = self.sum((2..=n).map(|j| self.m((j - 1) as f64, &[(P, 2 * (j as u32 - 2))])).collect());
                    &(&(&p * &lower) * &e) + &npsi
                } else {
                    &one + &(&e * &p)
                }
            }
            Fu::Chi => {
                if self.polynomial {
                    let npsi = self.sum((1..=n).map(|j| self.m(j as f64, &[(P, 2 * (j as u32 - 1))])).collect());
                    &e * &npsi
                } else {
                    e.clone()
                }
            }
            Fu::X => {
                let y = self.build(Fu::Y);
                let inner = self.sum(vec![&dc * &dp, dc.clone(), p.clone(), dp.clone(), one.clone()]);
                self.sum(vec![
                    &y * &(&(&inner * &e) + &one),
                    &(&e * &ff) * &(&self.m(1.0, &[(DP, 2), (P, 1)]) + &dp),
                    p.clone(),
                ])
            }
            Fu::W => {
                let y = self.build(Fu::Y);
                let zt = self.build(Fu::ZTilde);
                let zh = self.build(Fu::ZHat);
                let edp = &e * &dp;
                self.sum(vec![
                    &(&dc * &y) * &self.sum(vec![edp.clone(), p.clone(), &dpsi * &edp]),
                    &(&(&ff * &p) * &dp) * &self.sum(vec![edp.clone(), &p * &e, &dpsi * &edp]),
                    &(&(&dc * &dpsi) * &zt) * &e,
                    &(&dc * &p) * &(&(&zh * &edp) + &zt),
                    &(&dp * &y) * &self.sum(vec![p.clone(), &e * &p.pow(2), &edp * &p, &dc * &e]),
                    &(&(&ff * &self.m(1.0, &[(DP, 2), (P, 3)])) * &(&dp.pow(2) + &p)) * &e,
                    self.m(1.0, &[(DP, 2), (P, 2)]),
                ])
            }
            Fu::S => {
                let zt = self.build(Fu::ZTilde);
                let zh = self.build(Fu::ZHat);
                let z = self.build(Fu::Z);
                let chi = self.build(Fu::Chi);
                self.sum(vec![
                    &(&dp * &zt) * &(&(&(&p * &ff) * &e) + &chi),
                    &(&(&(&e * &dp) * &zt.pow(2)) * &opp) * &(&dc + &dp),
                    &(&(&e * &z) * &(&dc + &one)) * &(&dp + &p),
                    &(&e * &ff) * &dp,
                    &(&dc * &self.m(1.0, &[(P, 2), (DP, 1), (E, 1)])) * &opp,
                    &(&(&zh * &dp) * &opp) * &e.pow(2),
                ])
            }
            Fu::T => {
                self.sum(vec![&(&e * &opp) * &self.build(Fu::ZTilde), &ff * &p, &self.build(Fu::Z) * &(&dc + &one)])
            }
            Fu::U => self.sum(vec![self.build(Fu::S), self.build(Fu::T), self.build(Fu::ZCal)]),
            Fu::P => {
                let y = self.build(Fu::Y);
                let zt = self.build(Fu::ZTilde);
                let s = self.build(Fu::S);
                let t = self.build(Fu::T);
                let zc = self.build(Fu::ZCal);
                self.sum(vec![
                    self.m(1.0, &[(P, 2), (DP, 2)]),
                    &zt * &self.m(1.0, &[(DCOV, 1), (DP, 1), (P, 1)]),
                    self.m(1.0, &[(F, 1), (DP, 1), (P, 2)]),
                    self.m(1.0, &[(F, 1), (DP, 1)]),
                    &p * &t,
                    &y * &self.sum(vec![t.clone(), p.clone(), self.v(A), one.clone()]),
                    &p * &s,
                    &p * &zc,
                    &y * &s,
                    &(&e * &y) * &(&dp + &p),
                    &y * &zc,
                    self.m(1.0, &[(P, 2), (DP, 3), (F, 1), (E, 1)]),
                    &self.m(1.0, &[(DCOV, 1), (DP, 1), (P, 1), (E, 1)]) * &y,
                    &(&zt * &self.m(1.0, &[(DP, 1), (P, 1), (DCOV, 1)])) * &(&e + &(&e * &(&(&p * &dp) + &p.pow(2)))),
                    &ff * &(&self.m(1.0, &[(DPSI, 1), (DP, 2), (E, 1), (P, 1)])
                        + &self.m(1.0, &[(DP, 2), (P, 1), (E, 1)])),
                    &ff * &(&(&dpsi * &(&(&dp * &e) + &p)) + &self.m(1.0, &[(DPSI, 2), (DP, 1), (E, 1)])),
                ])
            }
        }
    }
}

/// Fast-evaluator value of `f`, for comparison with the expansion.
pub fn fast_value(f: Functional, s: &NormSnapshot, k: &EstimateConstants, e0_sf: f64) -> f64 {
    use super::*;
    use Functional as Fu;
    let (l, m, n) = eval_LMN(s, k);
    let (cs, cx, cu, cw) = eval_SXUW(s, k);
    let y = eval_YZP(s, k, e0_sf);
    match f {
        Fu::L => l,
        Fu::M => m,
        Fu::N => n,
        Fu::ScalarS => cs,
        Fu::ScalarX => cx,
        Fu::ScalarU => cu,
        Fu::ScalarW => cw,
        Fu::Y => y.y,
        Fu::Z => y.z,
        Fu::PCal => y.p_cal,
        Fu::X => y.x,
        Fu::W => y.w,
        Fu::P => y.p,
        Fu::U => y.u,
        Fu::ZTilde => y.z_tilde,
        Fu::ZHat => y.z_hat,
        Fu::S => y.s,
        Fu::T => y.t,
        Fu::ZCal => y.z_cal,
        Fu::Chi => y.chi,
        Fu::I => eval_I(s, k),
        Fu::O => eval_O(s, k),
        Fu::H => eval_H_func(s, k),
        Fu::D => eval_D_func(s, k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_algebra() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let q = (&x + &y).pow(2);
        assert_eq!(q.len(), 3);
        assert_eq!(q.eval(&[2.0, 3.0]), 25.0);
        assert_eq!((&x + &x.scale(-1.0)).len(), 0);
    }

    #[test]
    fn expansions_match_fast_at_all_ones() {
        let k = EstimateConstants {
            b: vec![0.5, 0.25, 0.125],
            c1: 0.3,
            c2: 2.0,
            c3: 0.7,
            n_cut: 3,
            j0: 1.5,
            ..Default::default()
        };
        let s = NormSnapshot::from_values(0.5, &[1.0; 11]);
        let tb = TermBuilder::new(&k);
        let x = tb.values(&s, &k, 1.0);
        for f in Functional::ALL {
            let a = tb.build(f).eval(&x);
            let b = fast_value(f, &s, &k, 1.0);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{f:?}: {a} vs {b}");
        }
    }
}
