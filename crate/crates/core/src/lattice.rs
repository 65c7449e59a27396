//! Periodic lattice, field storage and the finite-difference operators.
//!
//! Conventions: η = diag(−,+,+,+), F_{0i} = −E_i, ∂_t A_i = −E_i,
//! H_i = ½ ε_{ijk} F_{jk}, ε^{0123} = +1.
//!
//! The covariant derivative uses link phases,
//! D_i φ(x) = Σ_s c_s exp(−i s dx Θ_i(x)) φ(x + s ê_i) / dx with
//! Θ_i = Σ_Γ q_Γ A_i^Γ, so that with the second-order stencil the lattice
//! energy is exactly invariant under A → A + ∇θ, φ → e^{iqθ} φ.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{MkgError, Result};
use crate::model::{Model, MAX_SCALAR};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StencilOrder {
    Second,
    Fourth,
}

impl StencilOrder {
    pub fn from_int(n: u32) -> Result<Self> {
        match n {
            2 => Ok(Self::Second),
            4 => Ok(Self::Fourth),
            _ => Err(MkgError::Shape(format!("stencil_order must be 2 or 4, got {n}"))),
        }
    }

    /// (s, c_s) for s > 0; c_{−s} = −c_s.
    pub fn coefficients(self) -> &'static [(isize, f64)] {
        match self {
            Self::Second => &[(1, 0.5)],
            Self::Fourth => &[(1, 8.0 / 12.0), (2, -1.0 / 12.0)],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSpec {
    pub dims: [usize; 3],
    pub dx: f64,
    pub order: StencilOrder,
}

impl LatticeSpec {
    pub fn new(dims: [usize; 3], dx: f64) -> Result<Self> {
        if dims.contains(&0) {
            return Err(MkgError::Shape("every lattice dimension must be at least 1".into()));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(MkgError::Shape("dx must be positive".into()));
        }
        Ok(Self { dims, dx, order: StencilOrder::Second })
    }

    pub fn with_order(mut self, order: StencilOrder) -> Self {
        self.order = order;
        self
    }

    pub fn sites(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Cell volume: dx per active direction, so reduced lattices integrate
    /// per unit transverse length.
    pub fn dv(&self) -> f64 {
        (0..3).filter(|&d| self.active(d)).fold(1.0, |v, _| v * self.dx)
    }

    #[inline]
    pub fn active(&self, dir: usize) -> bool {
        self.dims[dir] > 1
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, site: usize) -> [usize; 3] {
        let x = site % self.dims[0];
        let r = site / self.dims[0];
        [x, r % self.dims[1], r / self.dims[1]]
    }

    pub fn position(&self, site: usize) -> [f64; 3] {
        let c = self.coords(site);
        [c[0] as f64 * self.dx, c[1] as f64 * self.dx, c[2] as f64 * self.dx]
    }

    /// Box side lengths n·dx.
    pub fn extent(&self) -> [f64; 3] {
        [self.dims[0] as f64 * self.dx, self.dims[1] as f64 * self.dx, self.dims[2] as f64 * self.dx]
    }

    #[inline]
    fn stride(&self, dir: usize) -> usize {
        match dir {
            0 => 1,
            1 => self.dims[0],
            _ => self.dims[0] * self.dims[1],
        }
    }

    /// Periodic neighbour `s` steps along `dir` from `site` with coordinates `c`.
    #[inline]
    pub fn shift(&self, site: usize, c: &[usize; 3], dir: usize, s: isize) -> usize {
        let n = self.dims[dir] as isize;
        let to = (c[dir] as isize + s).rem_euclid(n) as usize;
        site + to * self.stride(dir) - c[dir] * self.stride(dir)
    }

    /// Central difference of the real field `f` along `dir`; zero in
    /// collapsed directions.
    #[inline]
    pub fn partial(&self, f: &[f64], site: usize, c: &[usize; 3], dir: usize) -> f64 {
        if !self.active(dir) {
            return 0.0;
        }
        let mut s = 0.0;
        for &(k, w) in self.order.coefficients() {
            s += w * (f[self.shift(site, c, dir, k)] - f[self.shift(site, c, dir, -k)]);
        }
        s / self.dx
    }

    #[inline]
    pub fn partial_c(&self, f: &[C64], site: usize, c: &[usize; 3], dir: usize) -> C64 {
        if !self.active(dir) {
            return C64::new(0.0, 0.0);
        }
        let mut s = C64::new(0.0, 0.0);
        for &(k, w) in self.order.coefficients() {
            s += (f[self.shift(site, c, dir, k)] - f[self.shift(site, c, dir, -k)]) * w;
        }
        s / self.dx
    }

    /// Site-wise map from a function of position.
    pub fn sample<T>(&self, f: impl Fn([f64; 3]) -> T) -> Vec<T> {
        (0..self.sites()).map(|i| f(self.position(i))).collect()
    }
}

/// Dynamical variables, structure of arrays.
///
/// `a` and `e` are `[N_V][3][sites]`, `phi` and `pi` are `[N_C][sites]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub n_gauge: usize,
    pub n_scalar: usize,
    pub sites: usize,
    pub a: Vec<f64>,
    pub e: Vec<f64>,
    pub phi: Vec<C64>,
    pub pi: Vec<C64>,
    pub t: f64,
}

impl FieldState {
    pub fn zeros(lattice: &LatticeSpec, n_gauge: usize, n_scalar: usize) -> Self {
        let sites = lattice.sites();
        Self {
            n_gauge,
            n_scalar,
            sites,
            a: vec![0.0; n_gauge * 3 * sites],
            e: vec![0.0; n_gauge * 3 * sites],
            phi: vec![C64::new(0.0, 0.0); n_scalar * sites],
            pi: vec![C64::new(0.0, 0.0); n_scalar * sites],
            t: 0.0,
        }
    }

    pub fn for_model(lattice: &LatticeSpec, model: &Model) -> Self {
        Self::zeros(lattice, model.n_gauge(), model.n_scalar())
    }

    #[inline]
    pub fn vi(&self, l: usize, i: usize) -> std::ops::Range<usize> {
        let o = (l * 3 + i) * self.sites;
        o..o + self.sites
    }

    #[inline]
    pub fn si(&self, a: usize) -> std::ops::Range<usize> {
        a * self.sites..(a + 1) * self.sites
    }

    pub fn a_comp(&self, l: usize, i: usize) -> &[f64] {
        &self.a[self.vi(l, i)]
    }
    pub fn a_comp_mut(&mut self, l: usize, i: usize) -> &mut [f64] {
        let r = self.vi(l, i);
        &mut self.a[r]
    }
    pub fn e_comp(&self, l: usize, i: usize) -> &[f64] {
        &self.e[self.vi(l, i)]
    }
    pub fn e_comp_mut(&mut self, l: usize, i: usize) -> &mut [f64] {
        let r = self.vi(l, i);
        &mut self.e[r]
    }
    pub fn phi_comp(&self, a: usize) -> &[C64] {
        &self.phi[self.si(a)]
    }
    pub fn phi_comp_mut(&mut self, a: usize) -> &mut [C64] {
        let r = self.si(a);
        &mut self.phi[r]
    }
    pub fn pi_comp(&self, a: usize) -> &[C64] {
        &self.pi[self.si(a)]
    }
    pub fn pi_comp_mut(&mut self, a: usize) -> &mut [C64] {
        let r = self.si(a);
        &mut self.pi[r]
    }

    pub fn check_shape(&self, lattice: &LatticeSpec, model: &Model) -> Result<()> {
        let s = lattice.sites();
        let ok = self.sites == s
            && self.n_gauge == model.n_gauge()
            && self.n_scalar == model.n_scalar()
            && self.a.len() == self.n_gauge * 3 * s
            && self.e.len() == self.n_gauge * 3 * s
            && self.phi.len() == self.n_scalar * s
            && self.pi.len() == self.n_scalar * s;
        if ok {
            Ok(())
        } else {
            Err(MkgError::Shape("state does not match lattice and model".into()))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().chain(&self.e).all(|v| v.is_finite())
            && self.phi.iter().chain(&self.pi).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Gathers φ^a at one site.
    #[inline]
    pub fn phi_at(&self, site: usize, out: &mut [C64; MAX_SCALAR]) {
        for a in 0..self.n_scalar {
            out[a] = self.phi[a * self.sites + site];
        }
    }

    #[inline]
    pub fn pi_at(&self, site: usize, out: &mut [C64; MAX_SCALAR]) {
        for a in 0..self.n_scalar {
            out[a] = self.pi[a * self.sites + site];
        }
    }

    /// Θ_i = Σ_Γ q_Γ A_i^Γ at one site.
    #[inline]
    pub fn theta(&self, charges: &[f64], dir: usize, site: usize) -> f64 {
        let mut s = 0.0;
        for (l, q) in charges.iter().enumerate() {
            if *q != 0.0 {
                s += q * self.a[(l * 3 + dir) * self.sites + site];
            }
        }
        s
    }

    /// L² distance of every stored array.
    pub fn distance(&self, other: &FieldState) -> f64 {
        let r: f64 = self.a.iter().zip(&other.a).map(|(x, y)| (x - y).powi(2)).sum::<f64>()
            + self.e.iter().zip(&other.e).map(|(x, y)| (x - y).powi(2)).sum::<f64>()
            + self.phi.iter().zip(&other.phi).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>()
            + self.pi.iter().zip(&other.pi).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>();
        r.sqrt()
    }
}

/// Link-form covariant derivative of scalar component `f` along `dir`.
///
/// Returns (D_i φ, M_i φ) where M = i ∂D/∂Θ_i ≈ φ enters the current.
/// `theta` is Θ_i at `site`.
#[inline]
pub(crate) fn link_dm(lat: &LatticeSpec, f: &[C64], site: usize, c: &[usize; 3], dir: usize, theta: f64) -> (C64, C64) {
    let here = f[site];
    if !lat.active(dir) {
        return (C64::new(0.0, -theta) * here, here);
    }
    let alpha = lat.dx * theta;
    let mut d = C64::new(0.0, 0.0);
    let mut m = C64::new(0.0, 0.0);
    for &(s, w) in lat.order.coefficients() {
        let ph = C64::from_polar(1.0, -(s as f64) * alpha);
        let fwd = ph * f[lat.shift(site, c, dir, s)];
        let bwd = ph.conj() * f[lat.shift(site, c, dir, -s)];
        d += (fwd - bwd) * w;
        m += (fwd + bwd) * (s as f64 * w);
    }
    (d / lat.dx, m)
}

/// Field strength, lower indices, components (01, 02, 03, 12, 13, 23).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldStrength {
    pub n_gauge: usize,
    pub sites: usize,
    /// `[N_V][6][sites]`
    pub f: Vec<f64>,
}

pub const F01: usize = 0;
pub const F02: usize = 1;
pub const F03: usize = 2;
pub const F12: usize = 3;
pub const F13: usize = 4;
pub const F23: usize = 5;

impl FieldStrength {
    pub fn zeros(n_gauge: usize, sites: usize) -> Self {
        Self { n_gauge, sites, f: vec![0.0; n_gauge * 6 * sites] }
    }

    #[inline]
    pub fn get(&self, l: usize, comp: usize, site: usize) -> f64 {
        self.f[(l * 6 + comp) * self.sites + site]
    }

    #[inline]
    pub fn set(&mut self, l: usize, comp: usize, site: usize, v: f64) {
        self.f[(l * 6 + comp) * self.sites + site] = v;
    }

    pub fn comp(&self, l: usize, comp: usize) -> &[f64] {
        let o = (l * 6 + comp) * self.sites;
        &self.f[o..o + self.sites]
    }

    /// E_i = −F_{0i}.
    pub fn electric(&self, l: usize, site: usize) -> [f64; 3] {
        [-self.get(l, F01, site), -self.get(l, F02, site), -self.get(l, F03, site)]
    }

    /// H_i = ½ ε_{ijk} F_{jk}.
    pub fn magnetic(&self, l: usize, site: usize) -> [f64; 3] {
        [self.get(l, F23, site), -self.get(l, F13, site), self.get(l, F12, site)]
    }

    /// F_{μν} as a full antisymmetric 4×4 array.
    pub fn tensor(&self, l: usize, site: usize) -> [[f64; 4]; 4] {
        let mut t = [[0.0; 4]; 4];
        let pairs = [(0, 1, F01), (0, 2, F02), (0, 3, F03), (1, 2, F12), (1, 3, F13), (2, 3, F23)];
        for (m, n, k) in pairs {
            let v = self.get(l, k, site);
            t[m][n] = v;
            t[n][m] = -v;
        }
        t
    }
}

/// F_{ij} = ∂_i A_j − ∂_j A_i by central differences, F_{0i} = −E_i.
pub fn field_strength(state: &FieldState, lattice: &LatticeSpec) -> FieldStrength {
    let n = state.sites;
    let mut fs = FieldStrength::zeros(state.n_gauge, n);
    for l in 0..state.n_gauge {
        let ax = state.a_comp(l, 0);
        let ay = state.a_comp(l, 1);
        let az = state.a_comp(l, 2);
        for site in 0..n {
            let c = lattice.coords(site);
            let d = |f: &[f64], dir| lattice.partial(f, site, &c, dir);
            fs.set(l, F01, site, -state.e[(l * 3) * n + site]);
            fs.set(l, F02, site, -state.e[(l * 3 + 1) * n + site]);
            fs.set(l, F03, site, -state.e[(l * 3 + 2) * n + site]);
            fs.set(l, F12, site, d(ay, 0) - d(ax, 1));
            fs.set(l, F13, site, d(az, 0) - d(ax, 2));
            fs.set(l, F23, site, d(az, 1) - d(ay, 2));
        }
    }
    fs
}

/// F̃_{μν} = ½ ε_{μνρσ} F^{ρσ}, stored like F. F̃^{0i} = H_i and the double
/// dual is −F.
pub fn hodge_dual(fs: &FieldStrength) -> FieldStrength {
    let mut out = FieldStrength::zeros(fs.n_gauge, fs.sites);
    for l in 0..fs.n_gauge {
        for s in 0..fs.sites {
            let g = |k| fs.get(l, k, s);
            out.set(l, F01, s, -g(F23));
            out.set(l, F02, s, g(F13));
            out.set(l, F03, s, -g(F12));
            out.set(l, F12, s, g(F03));
            out.set(l, F13, s, -g(F02));
            out.set(l, F23, s, g(F01));
        }
    }
    out
}

/// H = curl A, `[N_V][3][sites]`.
pub fn magnetic_field(state: &FieldState, lattice: &LatticeSpec) -> Vec<f64> {
    let n = state.sites;
    let mut h = vec![0.0; state.a.len()];
    for l in 0..state.n_gauge {
        let a = [state.a_comp(l, 0), state.a_comp(l, 1), state.a_comp(l, 2)];
        for site in 0..n {
            let c = lattice.coords(site);
            let hv = curl_at(lattice, &a, site, &c);
            for i in 0..3 {
                h[(l * 3 + i) * n + site] = hv[i];
            }
        }
    }
    h
}

#[inline]
pub(crate) fn curl_at(lat: &LatticeSpec, v: &[&[f64]; 3], site: usize, c: &[usize; 3]) -> [f64; 3] {
    let d = |f: &[f64], dir| lat.partial(f, site, c, dir);
    [d(v[2], 1) - d(v[1], 2), d(v[0], 2) - d(v[2], 0), d(v[1], 0) - d(v[0], 1)]
}

/// D_μ φ^a as `[N_C][4][sites]` with D_0 φ = π.
pub fn covariant_derivative(state: &FieldState, lattice: &LatticeSpec, charges: &[f64]) -> Vec<C64> {
    let n = state.sites;
    let mut out = vec![C64::new(0.0, 0.0); state.n_scalar * 4 * n];
    for a in 0..state.n_scalar {
        let f = state.phi_comp(a);
        for site in 0..n {
            let c = lattice.coords(site);
            out[(a * 4) * n + site] = state.pi[a * n + site];
            for i in 0..3 {
                let th = state.theta(charges, i, site);
                out[(a * 4 + 1 + i) * n + site] = link_dm(lattice, f, site, &c, i, th).0;
            }
        }
    }
    out
}

/// max over sites and gauge fields of |∂_1F_23 + ∂_2F_31 + ∂_3F_12|.
pub fn bianchi_residual_of(fs: &FieldStrength, lattice: &LatticeSpec) -> f64 {
    let mut worst: f64 = 0.0;
    let neg13: Vec<f64> = (0..fs.n_gauge).flat_map(|l| fs.comp(l, F13).iter().map(|v| -v)).collect();
    for l in 0..fs.n_gauge {
        let f23 = fs.comp(l, F23);
        let f31 = &neg13[l * fs.sites..(l + 1) * fs.sites];
        let f12 = fs.comp(l, F12);
        for site in 0..fs.sites {
            let c = lattice.coords(site);
            let r = lattice.partial(f23, site, &c, 0)
                + lattice.partial(f31, site, &c, 1)
                + lattice.partial(f12, site, &c, 2);
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// Norms consumed by the estimate functionals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormSnapshot {
    pub t: f64,
    pub linf_phi: f64,
    pub linf_dphi: f64,
    pub linf_Dphi: f64,
    pub linf_F: f64,
    pub linf_A: f64,
    pub linf_dPsi: f64,
    pub l2_E: f64,
    pub l2_H: f64,
    pub l2_Dphi: f64,
    pub l2_phi: f64,
    pub l2_V: f64,
}

impl NormSnapshot {
    pub const FIELDS: [&'static str; 11] = [
        "linf_phi",
        "linf_dphi",
        "linf_Dphi",
        "linf_F",
        "linf_A",
        "linf_dPsi",
        "l2_E",
        "l2_H",
        "l2_Dphi",
        "l2_phi",
        "l2_V",
    ];

    pub fn values(&self) -> [f64; 11] {
        [
            self.linf_phi,
            self.linf_dphi,
            self.linf_Dphi,
            self.linf_F,
            self.linf_A,
            self.linf_dPsi,
            self.l2_E,
            self.l2_H,
            self.l2_Dphi,
            self.l2_phi,
            self.l2_V,
        ]
    }

    pub fn from_values(t: f64, v: &[f64]) -> Self {
        Self {
            t,
            linf_phi: v[0],
            linf_dphi: v[1],
            linf_Dphi: v[2],
            linf_F: v[3],
            linf_A: v[4],
            linf_dPsi: v[5],
            l2_E: v[6],
            l2_H: v[7],
            l2_Dphi: v[8],
            l2_phi: v[9],
            l2_V: v[10],
        }
    }
}

/// L² norms are (Σ |f|² dx³)^{1/2}; derivative magnitudes are Euclidean over
/// the time and space components.
pub fn norms(state: &FieldState, lattice: &LatticeSpec, model: &Model) -> NormSnapshot {
    let n = state.sites;
    let nv = state.n_gauge;
    let nc = state.n_scalar;
    let charges = &model.charges;
    let a_all: Vec<[&[f64]; 3]> =
        (0..nv).map(|l| [state.a_comp(l, 0), state.a_comp(l, 1), state.a_comp(l, 2)]).collect();

    // per site: |φ|², |∂φ|², |Dφ|², |2(H²−E²)|, |A|², |∂Ψ|², E², H², V²
    let kernel = |r: std::ops::Range<usize>, sums: &mut [f64], maxs: &mut [f64]| {
        for site in r {
            let c = lattice.coords(site);
            let (mut e2, mut h2, mut a2) = (0.0, 0.0, 0.0);
            for l in 0..nv {
                let h = curl_at(lattice, &a_all[l], site, &c);
                for i in 0..3 {
                    let e = state.e[(l * 3 + i) * n + site];
                    e2 += e * e;
                    h2 += h[i] * h[i];
                    a2 += a_all[l][i][site].powi(2);
                }
            }
            let (mut p2, mut dp2, mut cd2) = (0.0, 0.0, 0.0);
            let mut dpsi = [0.0; 4];
            let thetas = [state.theta(charges, 0, site), state.theta(charges, 1, site), state.theta(charges, 2, site)];
            for a in 0..nc {
                let f = state.phi_comp(a);
                let ph = f[site];
                let pi = state.pi[a * n + site];
                p2 += ph.norm_sqr();
                dp2 += pi.norm_sqr();
                cd2 += pi.norm_sqr();
                dpsi[0] += 2.0 * (ph.conj() * pi).re;
                for i in 0..3 {
                    let d = lattice.partial_c(f, site, &c, i);
                    dp2 += d.norm_sqr();
                    dpsi[i + 1] += 2.0 * (ph.conj() * d).re;
                    cd2 += link_dm(lattice, f, site, &c, i, thetas[i]).0.norm_sqr();
                }
            }
            let v = model.potential.value(p2);
            let fsq = (2.0 * (h2 - e2)).abs();
            let dpsi2: f64 = dpsi.iter().map(|x| x * x).sum();
            let m = [p2, dp2, cd2, fsq, a2, dpsi2];
            for (k, val) in m.iter().enumerate() {
                maxs[k] = maxs[k].max(*val);
            }
            sums[0] += e2;
            sums[1] += h2;
            sums[2] += cd2;
            sums[3] += p2;
            sums[4] += v * v;
        }
    };
    let parts = par::map_chunks(n, |r| {
        let mut sm = [0.0; 5];
        let mut mx = [0.0; 6];
        kernel(r, &mut sm, &mut mx);
        (sm, mx)
    });
    let sums: Vec<f64> = (0..5).map(|k| par::pairwise_sum(&parts.iter().map(|p| p.0[k]).collect::<Vec<_>>())).collect();
    let maxs: Vec<f64> = (0..6).map(|k| parts.iter().map(|p| p.1[k]).fold(0.0, f64::max)).collect();
    let dv = lattice.dv();
    NormSnapshot {
        t: state.t,
        linf_phi: maxs[0].sqrt(),
        linf_dphi: maxs[1].sqrt(),
        linf_Dphi: maxs[2].sqrt(),
        linf_F: maxs[3].sqrt(),
        linf_A: maxs[4].sqrt(),
        linf_dPsi: maxs[5].sqrt(),
        l2_E: (sums[0] * dv).sqrt(),
        l2_H: (sums[1] * dv).sqrt(),
        l2_Dphi: (sums[2] * dv).sqrt(),
        l2_phi: (sums[3] * dv).sqrt(),
        l2_V: (sums[4] * dv).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn line(n: usize) -> LatticeSpec {
        LatticeSpec::new([n, 1, 1], 1.0 / n as f64).unwrap()
    }

    #[test]
    fn constant_field_has_zero_derivative() {
        let lat = LatticeSpec::new([5, 4, 3], 0.1).unwrap();
        let f = vec![2.5; lat.sites()];
        for site in 0..lat.sites() {
            let c = lat.coords(site);
            for d in 0..3 {
                assert_eq!(lat.partial(&f, site, &c, d), 0.0);
            }
        }
    }

    #[test]
    fn shift_wraps() {
        let lat = LatticeSpec::new([4, 3, 2], 1.0).unwrap();
        let s = lat.index(3, 2, 1);
        let c = lat.coords(s);
        assert_eq!(c, [3, 2, 1]);
        assert_eq!(lat.shift(s, &c, 0, 1), lat.index(0, 2, 1));
        assert_eq!(lat.shift(s, &c, 1, 2), lat.index(3, 1, 1));
        assert_eq!(lat.shift(s, &c, 2, -1), lat.index(3, 2, 0));
    }

    #[test]
    fn second_order_convergence() {
        let err = |n: usize| {
            let lat = line(n);
            let f = lat.sample(|p| (2.0 * PI * p[0]).sin());
            (0..n)
                .map(|s| {
                    let c = lat.coords(s);
                    (lat.partial(&f, s, &c, 0) - 2.0 * PI * (2.0 * PI * lat.position(s)[0]).cos()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn double_dual_is_minus_identity() {
        let mut fs = FieldStrength::zeros(1, 1);
        for k in 0..6 {
            fs.set(0, k, 0, 0.3 * k as f64 - 0.7);
        }
        let dd = hodge_dual(&hodge_dual(&fs));
        for k in 0..6 {
            assert_eq!(dd.get(0, k, 0), -fs.get(0, k, 0));
        }
        let mut only12 = FieldStrength::zeros(1, 1);
        only12.set(0, F12, 0, 1.0);
        assert_eq!(only12.magnetic(0, 0), [0.0, 0.0, 1.0]);
        // F̃^{03} = −F̃_{03}
        assert_eq!(-hodge_dual(&only12).get(0, F03, 0), 1.0);
    }

    #[test]
    fn link_derivative_constant_potential() {
        let lat = line(64);
        let mut st = FieldState::zeros(&lat, 1, 1);
        let (alpha, q) = (0.4, 1.5);
        st.a_comp_mut(0, 0).fill(alpha);
        let c0 = C64::new(0.3, -0.2);
        st.phi.fill(c0);
        let d = covariant_derivative(&st, &lat, &[q]);
        let exact = C64::new(0.0, -1.0) * c0 * (q * alpha * lat.dx).sin() / lat.dx;
        // D_x of the first site sits right after the D_0 block
        let dx0 = d[lat.sites()];
        assert!((dx0 - exact).norm() < 1e-13, "{dx0} vs {exact}");
        let cont = C64::new(0.0, -q * alpha) * c0;
        assert!((dx0 - cont).norm() < 1e-3);
    }

    #[test]
    fn collapsed_direction_is_pointwise() {
        let lat = line(8);
        let mut st = FieldState::zeros(&lat, 1, 1);
        st.a_comp_mut(0, 1).fill(0.7);
        st.phi.fill(C64::new(1.0, 0.0));
        let d = covariant_derivative(&st, &lat, &[2.0]);
        assert_eq!(d[2 * 8], C64::new(0.0, -1.4));
    }

    #[test]
    fn unit_box_phi_norm() {
        let lat = LatticeSpec::new([4, 4, 4], 0.25).unwrap();
        let mut st = FieldState::zeros(&lat, 1, 1);
        st.phi.fill(C64::new(2.0, 0.0));
        let nrm = norms(&st, &lat, &Model::free(1, 1));
        assert!((nrm.l2_phi - 2.0).abs() < 1e-14);
        assert_eq!(nrm.linf_phi, 2.0);
        assert_eq!(nrm.l2_E, 0.0);
    }
}
