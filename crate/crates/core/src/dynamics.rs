//! Temporal-gauge field equations, RK4 stepping, the Gauss constraint and
//! gauge transformations.
//!
//! The equations are the Euler–Lagrange equations of the lattice-summed
//! Lagrangian
//!
//! ½ E·h·E − ½ H·h·H − E·k·H + g_{ab̄}(π^a π̄^b − D_iφ^a conj(D_iφ^b)) − V,
//!
//! so the lattice energy and the lattice Gauss law are exact invariants of
//! the semi-discrete flow. With Π = hE − kH and K = hH + kE:
//!
//! * Π̇ = curl K − J, J_i^Λ = 2q_Λ Im Σ g_{ab̄} D_iφ^a conj(M_iφ^b)
//! * g_{ab̄} π̇^a = Σ_i 𝒟_i(g_{ab̄} D_iφ^a) + ∂_{b̄}(EM terms − V)
//!   + ∂_{b̄}g_{ac̄} X^{ac} − ġ_{ab̄} π^a

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::couplings::MAX_GAUGE;
use crate::error::{MkgError, Result};
use crate::lattice::{curl_at, link_dm, FieldState, LatticeSpec};
use crate::model::{Model, MAX_SCALAR};
use crate::par::{self, DisjointSlice};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Time derivative of every array of a [`FieldState`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateDerivative {
    pub da: Vec<f64>,
    pub de: Vec<f64>,
    pub dphi: Vec<C64>,
    pub dpi: Vec<C64>,
}

impl StateDerivative {
    pub fn zeros_like(s: &FieldState) -> Self {
        Self {
            da: vec![0.0; s.a.len()],
            de: vec![0.0; s.e.len()],
            dphi: vec![ZERO; s.phi.len()],
            dpi: vec![ZERO; s.pi.len()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.da.iter().chain(&self.de).all(|v| v.is_finite())
            && self.dphi.iter().chain(&self.dpi).all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Per-site intermediates shared between the two RHS passes.
struct Scratch {
    w: Vec<C64>,
    k: Vec<f64>,
    j: Vec<f64>,
    h: Vec<f64>,
    theta: Vec<f64>,
    rloc: Vec<C64>,
    alpha: Vec<f64>,
    q: Vec<f64>,
}

impl Scratch {
    fn new(nv: usize, nc: usize, n: usize) -> Self {
        Self {
            w: vec![ZERO; nc * 3 * n],
            k: vec![0.0; nv * 3 * n],
            j: vec![0.0; nv * 3 * n],
            h: vec![0.0; nv * 3 * n],
            theta: vec![0.0; 3 * n],
            rloc: vec![ZERO; nc * n],
            alpha: vec![0.0; n],
            q: vec![0.0; n],
        }
    }
}

/// Right-hand side of the evolution system.
pub fn eom_rhs(state: &FieldState, lattice: &LatticeSpec, model: &Model) -> Result<StateDerivative> {
    state.check_shape(lattice, model)?;
    let mut out = StateDerivative::zeros_like(state);
    let mut scratch = Scratch::new(state.n_gauge, state.n_scalar, state.sites);
    rhs_into(state, lattice, model, &mut scratch, &mut out)?;
    Ok(out)
}

fn first_error(errs: Vec<Option<MkgError>>) -> Result<()> {
    match errs.into_iter().flatten().next() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn rhs_into(
    st: &FieldState,
    lat: &LatticeSpec,
    model: &Model,
    sc: &mut Scratch,
    out: &mut StateDerivative,
) -> Result<()> {
    let n = st.sites;
    let nv = st.n_gauge;
    let nc = st.n_scalar;
    let cp = &model.couplings;
    let charges = &model.charges;
    let (hb, hm, kb, km) = (&cp.h.base, &cp.h.modulation, &cp.k.base, &cp.k.modulation);

    let a_sl: Vec<[&[f64]; 3]> = (0..nv).map(|l| [st.a_comp(l, 0), st.a_comp(l, 1), st.a_comp(l, 2)]).collect();
    let e_sl: Vec<[&[f64]; 3]> = (0..nv).map(|l| [st.e_comp(l, 0), st.e_comp(l, 1), st.e_comp(l, 2)]).collect();

    // pass 1: local quantities
    {
        let w = DisjointSlice::new(&mut sc.w);
        let kk = DisjointSlice::new(&mut sc.k);
        let jj = DisjointSlice::new(&mut sc.j);
        let hh = DisjointSlice::new(&mut sc.h);
        let th = DisjointSlice::new(&mut sc.theta);
        let rl = DisjointSlice::new(&mut sc.rloc);
        let al = DisjointSlice::new(&mut sc.alpha);
        let qq = DisjointSlice::new(&mut sc.q);
        let errs = par::map_chunks(n, |range| {
            let mut ph = [ZERO; MAX_SCALAR];
            let mut pv = [ZERO; MAX_SCALAR];
            let mut d = [[ZERO; MAX_SCALAR]; 3];
            let mut m = [[ZERO; MAX_SCALAR]; 3];
            let mut ev = [[0.0; MAX_GAUGE]; 3];
            let mut hv = [[0.0; MAX_GAUGE]; 3];
            let mut t1 = [0.0; MAX_GAUGE];
            let mut t2 = [0.0; MAX_GAUGE];
            for x in range {
                let c = lat.coords(x);
                st.phi_at(x, &mut ph);
                st.pi_at(x, &mut pv);
                let mut psi = 0.0;
                let mut pi2 = 0.0;
                let mut s1 = ZERO;
                for a in 0..nc {
                    psi += ph[a].norm_sqr();
                    pi2 += pv[a].norm_sqr();
                    s1 += ph[a].conj() * pv[a];
                }
                let psidot = 2.0 * s1.re;
                let rad = match model.kahler.radial(psi.sqrt()) {
                    Ok(r) => r,
                    Err(e) => return Some(e),
                };
                let (sh, dsh) = cp.h.sigma(psi);
                let (sk, dsk) = cp.k.sigma(psi);

                for l in 0..nv {
                    let hc = curl_at(lat, &a_sl[l], x, &c);
                    for i in 0..3 {
                        ev[i][l] = e_sl[l][i][x];
                        hv[i][l] = hc[i];
                    }
                }

                // EM contribution to ∂L/∂Ψ and K = hH + kE
                let mut quad = 0.0;
                for i in 0..3 {
                    let (e, h) = (&ev[i][..nv], &hv[i][..nv]);
                    if dsh != 0.0 {
                        quad += 0.5 * dsh * (hm.bilinear(e, e) - hm.bilinear(h, h));
                    }
                    if dsk != 0.0 {
                        quad -= dsk * km.bilinear(e, h);
                    }
                    hb.apply(h, &mut t1[..nv]);
                    hm.apply(h, &mut t2[..nv]);
                    let mut kv = [0.0; MAX_GAUGE];
                    for l in 0..nv {
                        kv[l] = t1[l] + sh * t2[l];
                    }
                    kb.apply(e, &mut t1[..nv]);
                    km.apply(e, &mut t2[..nv]);
                    for l in 0..nv {
                        kv[l] += t1[l] + sk * t2[l];
                        let idx = (l * 3 + i) * n + x;
                        unsafe {
                            kk.write(idx, kv[l]);
                            hh.write(idx, hv[i][l]);
                        }
                    }
                }

                let mut pd = [ZERO; 3];
                let mut d2 = 0.0;
                for i in 0..3 {
                    let theta = st.theta(charges, i, x);
                    unsafe { th.write(i * n + x, theta) };
                    let mut pm = ZERO;
                    let mut dm = ZERO;
                    for a in 0..nc {
                        let (dd, mm) = link_dm(lat, st.phi_comp(a), x, &c, i, theta);
                        d[i][a] = dd;
                        m[i][a] = mm;
                        pd[i] += ph[a].conj() * dd;
                        pm += ph[a].conj() * mm;
                        dm += dd * mm.conj();
                        d2 += dd.norm_sqr();
                    }
                    for b in 0..nc {
                        let v = d[i][b] * rad.alpha + ph[b] * pd[i] * rad.q;
                        unsafe { w.write((b * 3 + i) * n + x, v) };
                    }
                    let gdm = (dm * rad.alpha + pd[i] * pm.conj() * rad.q).im;
                    for l in 0..nv {
                        unsafe { jj.write((l * 3 + i) * n + x, 2.0 * charges[l] * gdm) };
                    }
                }

                let vp = model.potential.prime(psi);
                let tr_x = pi2 - d2;
                let pxp = s1.norm_sqr() - pd.iter().map(|z| z.norm_sqr()).sum::<f64>();
                for b in 0..nc {
                    let mut phi_x = pv[b] * s1.conj();
                    for i in 0..3 {
                        phi_x -= d[i][b] * pd[i].conj();
                    }
                    let dg_x = (ph[b] * tr_x + phi_x) * rad.q + ph[b] * (rad.q2 * pxp);
                    let gdot = (pv[b] * (s1 + psidot) + ph[b] * pi2) * rad.q + ph[b] * s1 * (rad.q2 * psidot);
                    let v = ph[b] * (quad - vp) + dg_x - gdot;
                    unsafe { rl.write(b * n + x, v) };
                }
                unsafe {
                    al.write(x, rad.alpha);
                    qq.write(x, rad.q);
                }
            }
            None
        });
        first_error(errs)?;
    }

    // pass 2: stencils over the intermediates
    let sc = &*sc;
    let k_sl: Vec<[&[f64]; 3]> = (0..nv)
        .map(|l| {
            let o = l * 3 * n;
            [&sc.k[o..o + n], &sc.k[o + n..o + 2 * n], &sc.k[o + 2 * n..o + 3 * n]]
        })
        .collect();
    let da = DisjointSlice::new(&mut out.da);
    let de = DisjointSlice::new(&mut out.de);
    let dphi = DisjointSlice::new(&mut out.dphi);
    let dpi = DisjointSlice::new(&mut out.dpi);
    par::for_each_chunk(n, |range| {
        let mut ph = [ZERO; MAX_SCALAR];
        let mut pv = [ZERO; MAX_SCALAR];
        let mut v = [0.0; MAX_GAUGE];
        let mut t1 = [0.0; MAX_GAUGE];
        let mut ev = [[0.0; MAX_GAUGE]; 3];
        let mut hv = [[0.0; MAX_GAUGE]; 3];
        let mut hdot = [[0.0; MAX_GAUGE]; 3];
        let mut pdot = [[0.0; MAX_GAUGE]; 3];
        for x in range {
            let c = lat.coords(x);
            st.phi_at(x, &mut ph);
            st.pi_at(x, &mut pv);
            let mut psi = 0.0;
            let mut s1 = ZERO;
            for a in 0..nc {
                psi += ph[a].norm_sqr();
                s1 += ph[a].conj() * pv[a];
            }
            let psidot = 2.0 * s1.re;
            let (_, dsh) = cp.h.sigma(psi);
            let (sk, dsk) = cp.k.sigma(psi);

            for l in 0..nv {
                let ck = curl_at(lat, &k_sl[l], x, &c);
                let ce = curl_at(lat, &e_sl[l], x, &c);
                for i in 0..3 {
                    let idx = (l * 3 + i) * n + x;
                    pdot[i][l] = ck[i] - sc.j[idx];
                    hdot[i][l] = -ce[i];
                    ev[i][l] = st.e[idx];
                    hv[i][l] = sc.h[idx];
                    unsafe { da.write(idx, -st.e[idx]) };
                }
            }
            let hinv = cp.eval_h_inverse(psi);
            for i in 0..3 {
                // Π̇ − ḣE + k̇H + kḢ
                v[..nv].copy_from_slice(&pdot[i][..nv]);
                if dsh != 0.0 {
                    hm.apply(&ev[i][..nv], &mut t1[..nv]);
                    for l in 0..nv {
                        v[l] -= dsh * psidot * t1[l];
                    }
                }
                if dsk != 0.0 {
                    km.apply(&hv[i][..nv], &mut t1[..nv]);
                    for l in 0..nv {
                        v[l] += dsk * psidot * t1[l];
                    }
                }
                kb.apply(&hdot[i][..nv], &mut t1[..nv]);
                for l in 0..nv {
                    v[l] += t1[l];
                }
                if sk != 0.0 {
                    km.apply(&hdot[i][..nv], &mut t1[..nv]);
                    for l in 0..nv {
                        v[l] += sk * t1[l];
                    }
                }
                hinv.apply(&v[..nv], &mut t1[..nv]);
                for l in 0..nv {
                    unsafe { de.write((l * 3 + i) * n + x, t1[l]) };
                }
            }

            let mut r = [ZERO; MAX_SCALAR];
            let mut pr = ZERO;
            for b in 0..nc {
                let mut acc = sc.rloc[b * n + x];
                for i in 0..3 {
                    let wb = &sc.w[(b * 3 + i) * n..(b * 3 + i + 1) * n];
                    let thi = &sc.theta[i * n..(i + 1) * n];
                    acc += adjoint_link(lat, wb, thi, x, &c, i);
                }
                r[b] = acc;
                pr += ph[b].conj() * acc;
            }
            let (alpha, q) = (sc.alpha[x], sc.q[x]);
            let f = q / (alpha + q * psi);
            for b in 0..nc {
                unsafe {
                    dpi.write(b * n + x, (r[b] - ph[b] * pr * f) / alpha);
                    dphi.write(b * n + x, pv[b]);
                }
            }
        }
    });
    Ok(())
}

/// 𝒟_i W(x) = Σ_s c_s exp(−i s dx Θ_i(x+s)) W(x+s)/dx, the adjoint partner
/// of the link derivative.
#[inline]
fn adjoint_link(lat: &LatticeSpec, w: &[C64], theta: &[f64], x: usize, c: &[usize; 3], dir: usize) -> C64 {
    if !lat.active(dir) {
        return C64::new(0.0, -theta[x]) * w[x];
    }
    let mut acc = ZERO;
    for &(s, cs) in lat.order.coefficients() {
        let xp = lat.shift(x, c, dir, s);
        let xm = lat.shift(x, c, dir, -s);
        let sf = s as f64 * lat.dx;
        acc += (C64::from_polar(1.0, -sf * theta[xp]) * w[xp] - C64::from_polar(1.0, sf * theta[xm]) * w[xm]) * cs;
    }
    acc / lat.dx
}

/// Classical four-stage Runge–Kutta stepper with reusable buffers.
pub struct Integrator<'a> {
    lattice: &'a LatticeSpec,
    model: &'a Model,
    pub dt: f64,
    pub step: u64,
    scratch: Scratch,
    k: [StateDerivative; 4],
    tmp: FieldState,
}

impl<'a> Integrator<'a> {
    pub fn new(lattice: &'a LatticeSpec, model: &'a Model, dt: f64) -> Self {
        let proto = FieldState::for_model(lattice, model);
        let z = StateDerivative::zeros_like(&proto);
        Self {
            lattice,
            model,
            dt,
            step: 0,
            scratch: Scratch::new(model.n_gauge(), model.n_scalar(), lattice.sites()),
            k: [z.clone(), z.clone(), z.clone(), z],
            tmp: proto,
        }
    }

    /// Advances `state` by one step of `dt`.
    pub fn advance(&mut self, state: &mut FieldState) -> Result<()> {
        state.check_shape(self.lattice, self.model)?;
        let dt = self.dt;
        let (lat, model) = (self.lattice, self.model);
        let [k1, k2, k3, k4] = &mut self.k;
        rhs_into(state, lat, model, &mut self.scratch, k1)?;
        combine(&mut self.tmp, state, &[(0.5 * dt, &*k1)]);
        rhs_into(&self.tmp, lat, model, &mut self.scratch, k2)?;
        combine(&mut self.tmp, state, &[(0.5 * dt, &*k2)]);
        rhs_into(&self.tmp, lat, model, &mut self.scratch, k3)?;
        combine(&mut self.tmp, state, &[(dt, &*k3)]);
        rhs_into(&self.tmp, lat, model, &mut self.scratch, k4)?;
        let w = dt / 6.0;
        let src = state.clone();
        combine(state, &src, &[(w, &*k1), (2.0 * w, &*k2), (2.0 * w, &*k3), (w, &*k4)]);
        state.t = src.t + dt;
        self.step += 1;
        if !state.is_finite() {
            return Err(MkgError::NonFinite { step: self.step });
        }
        Ok(())
    }
}

/// dst = src + Σ wᵢ kᵢ, elementwise in a fixed order.
fn combine(dst: &mut FieldState, src: &FieldState, terms: &[(f64, &StateDerivative)]) {
    const B: usize = 4096;
    dst.t = src.t;
    dst.a.par_chunks_mut(B).enumerate().for_each(|(ci, ch)| {
        for (j, v) in ch.iter_mut().enumerate() {
            let i = ci * B + j;
            let mut acc = src.a[i];
            for (w, k) in terms {
                acc += w * k.da[i];
            }
            *v = acc;
        }
    });
    dst.e.par_chunks_mut(B).enumerate().for_each(|(ci, ch)| {
        for (j, v) in ch.iter_mut().enumerate() {
            let i = ci * B + j;
            let mut acc = src.e[i];
            for (w, k) in terms {
                acc += w * k.de[i];
            }
            *v = acc;
        }
    });
    dst.phi.par_chunks_mut(B).enumerate().for_each(|(ci, ch)| {
        for (j, v) in ch.iter_mut().enumerate() {
            let i = ci * B + j;
            let mut acc = src.phi[i];
            for (w, k) in terms {
                acc += k.dphi[i] * *w;
            }
            *v = acc;
        }
    });
    dst.pi.par_chunks_mut(B).enumerate().for_each(|(ci, ch)| {
        for (j, v) in ch.iter_mut().enumerate() {
            let i = ci * B + j;
            let mut acc = src.pi[i];
            for (w, k) in terms {
                acc += k.dpi[i] * *w;
            }
            *v = acc;
        }
    });
}

/// One RK4 step returning the new state.
pub fn step_rk4(state: &FieldState, lattice: &LatticeSpec, model: &Model, dt: f64) -> Result<FieldState> {
    let mut it = Integrator::new(lattice, model, dt);
    it.step = (state.t / dt).round().max(0.0) as u64;
    let mut s = state.clone();
    it.advance(&mut s)?;
    Ok(s)
}

/// Gauss residual h^{-1}(div Π + ρ), Π = hE − kH,
/// ρ^Λ = 2q_Λ Im Σ g_{ab̄} π^a conj(φ^b).
#[derive(Clone, Debug, PartialEq)]
pub struct GaussResidual {
    /// `[N_V][sites]`
    pub field: Vec<f64>,
    pub l2: f64,
    pub linf: f64,
}

pub fn gauss_residual(state: &FieldState, lattice: &LatticeSpec, model: &Model) -> Result<GaussResidual> {
    state.check_shape(lattice, model)?;
    let n = state.sites;
    let nv = state.n_gauge;
    let nc = state.n_scalar;
    let cp = &model.couplings;
    let h_field = crate::lattice::magnetic_field(state, lattice);
    // Π at every site
    let mut big_pi = vec![0.0; nv * 3 * n];
    let mut t = vec![0.0; nv];
    let mut u = vec![0.0; nv];
    let mut rho = vec![0.0; nv * n];
    let mut ph = [ZERO; MAX_SCALAR];
    let mut pv = [ZERO; MAX_SCALAR];
    for x in 0..n {
        state.phi_at(x, &mut ph);
        state.pi_at(x, &mut pv);
        let psi: f64 = ph[..nc].iter().map(|z| z.norm_sqr()).sum();
        let h = cp.eval_h(psi);
        let k = cp.eval_k(psi);
        for i in 0..3 {
            let ev: Vec<f64> = (0..nv).map(|l| state.e[(l * 3 + i) * n + x]).collect();
            let hv: Vec<f64> = (0..nv).map(|l| h_field[(l * 3 + i) * n + x]).collect();
            h.apply(&ev, &mut t);
            k.apply(&hv, &mut u);
            for l in 0..nv {
                big_pi[(l * 3 + i) * n + x] = t[l] - u[l];
            }
        }
        let g = model.kahler.metric(&ph[..nc])?;
        let mut gpp = ZERO;
        for a in 0..nc {
            for b in 0..nc {
                gpp += g.get(a, b) * pv[a] * ph[b].conj();
            }
        }
        for l in 0..nv {
            rho[l * n + x] = 2.0 * model.charges[l] * gpp.im;
        }
    }
    let mut field = vec![0.0; nv * n];
    let mut g_here = vec![0.0; nv];
    for x in 0..n {
        let c = lattice.coords(x);
        for l in 0..nv {
            let mut div = 0.0;
            for i in 0..3 {
                div += lattice.partial(&big_pi[(l * 3 + i) * n..(l * 3 + i + 1) * n], x, &c, i);
            }
            g_here[l] = div + rho[l * n + x];
        }
        let psi: f64 = (0..nc).map(|a| state.phi[a * n + x].norm_sqr()).sum();
        cp.eval_h_inverse(psi).apply(&g_here, &mut t);
        for l in 0..nv {
            field[l * n + x] = t[l];
        }
    }
    let dv = lattice.dv();
    let l2 = (par::pairwise_sum(&field.iter().map(|v| v * v).collect::<Vec<_>>()) * dv).sqrt();
    let linf = field.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(GaussResidual { field, l2, linf })
}

/// Time-independent gauge transformation: A_i^Γ → A_i^Γ + ∂_iθ^Γ and
/// φ, π → exp(i Σ_Γ q_Γ θ^Γ) φ, π. E is unchanged.
pub fn gauge_transform(state: &FieldState, lattice: &LatticeSpec, model: &Model, theta: &[f64]) -> Result<FieldState> {
    state.check_shape(lattice, model)?;
    let n = state.sites;
    if theta.len() != state.n_gauge * n {
        return Err(MkgError::Shape(format!("theta needs {} entries", state.n_gauge * n)));
    }
    let mut out = state.clone();
    for l in 0..state.n_gauge {
        let th = &theta[l * n..(l + 1) * n];
        for x in 0..n {
            let c = lattice.coords(x);
            for i in 0..3 {
                out.a[(l * 3 + i) * n + x] += lattice.partial(th, x, &c, i);
            }
        }
    }
    for x in 0..n {
        let ang: f64 = (0..state.n_gauge).map(|l| model.charges[l] * theta[l * n + x]).sum();
        let u = C64::from_polar(1.0, ang);
        for a in 0..state.n_scalar {
            out.phi[a * n + x] *= u;
            out.pi[a * n + x] *= u;
        }
    }
    Ok(out)
}
