//! Energies, the stress tensor and per-step residual summaries.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::gauss_residual;
use crate::error::Result;
use crate::kahler::SMALL_R;
use crate::lattice::{self, curl_at, link_dm, FieldState, LatticeSpec, NormSnapshot};
use crate::model::{Model, MAX_SCALAR};
use crate::par;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// One row of the diagnostics trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy_E0: f64,
    pub flat_J: f64,
    pub sobolev_E0: f64,
    pub sobolev_E1: f64,
    pub gauss_res_l2: f64,
    pub gauss_res_linf: f64,
    pub bianchi_res_linf: f64,
    pub norm_snapshot: NormSnapshot,
    pub mass_m: f64,
}

/// Σ_ab g_{ab̄} u^a conj(v^b) for g = α δ + Q φ̄_a φ_b.
#[inline]
fn g_form(alpha: f64, q: f64, ph: &[C64], u: &[C64], v: &[C64]) -> C64 {
    let mut uv = ZERO;
    let mut pu = ZERO;
    let mut pv = ZERO;
    for a in 0..ph.len() {
        uv += u[a] * v[a].conj();
        pu += ph[a].conj() * u[a];
        pv += ph[a].conj() * v[a];
    }
    uv * alpha + pu * pv.conj() * q
}

/// Lattice energy Σ [½h(E·E + H·H) + g(π, π) + Σ_i g(D_iφ, D_iφ) + V] dx³.
pub fn energy_E0(state: &FieldState, lattice: &LatticeSpec, model: &Model) -> Result<f64> {
    energy_impl(state, lattice, model, false)
}

/// The same energy with the metric written out through Φ', Φ'' directly.
pub fn energy_E0_potential_form(state: &FieldState, lattice: &LatticeSpec, model: &Model) -> Result<f64> {
    energy_impl(state, lattice, model, true)
}

fn energy_impl(state: &FieldState, lat: &LatticeSpec, model: &Model, phi_form: bool) -> Result<f64> {
    state.check_shape(lat, model)?;
    let n = state.sites;
    let nv = state.n_gauge;
    let nc = state.n_scalar;
    let a_sl: Vec<[&[f64]; 3]> =
        (0..nv).map(|l| [state.a_comp(l, 0), state.a_comp(l, 1), state.a_comp(l, 2)]).collect();
    let parts = par::map_chunks(n, |range| -> Result<f64> {
        let mut ph = [ZERO; MAX_SCALAR];
        let mut pv = [ZERO; MAX_SCALAR];
        let mut d = [ZERO; MAX_SCALAR];
        let mut e = [0.0; crate::couplings::MAX_GAUGE];
        let mut h = [0.0; crate::couplings::MAX_GAUGE];
        let mut acc = 0.0;
        for x in range {
            let c = lat.coords(x);
            state.phi_at(x, &mut ph);
            state.pi_at(x, &mut pv);
            let psi: f64 = ph[..nc].iter().map(|z| z.norm_sqr()).sum();
            let r = psi.sqrt();
            let (alpha, q) = if phi_form && r >= SMALL_R {
                let k = &model.kahler;
                if r > k.r_max() {
                    return Err(crate::error::MkgError::RadiusExceeded { r, r_max: k.r_max() });
                }
                let (p1, p2) = (k.potential_d1(r), k.potential_d2(r));
                (p1 / (2.0 * r), (p2 - p1 / r) / (4.0 * r * r))
            } else {
                let rad = model.kahler.radial(r)?;
                (rad.alpha, rad.q)
            };
            let hm = model.couplings.eval_h(psi);
            let mut em = 0.0;
            for i in 0..3 {
                for l in 0..nv {
                    e[l] = state.e[(l * 3 + i) * n + x];
                    h[l] = curl_at(lat, &a_sl[l], x, &c)[i];
                }
                em += 0.5 * (hm.bilinear(&e[..nv], &e[..nv]) + hm.bilinear(&h[..nv], &h[..nv]));
            }
            let mut kin = g_form(alpha, q, &ph[..nc], &pv[..nc], &pv[..nc]).re;
            for i in 0..3 {
                let th = state.theta(&model.charges, i, x);
                for a in 0..nc {
                    d[a] = link_dm(lat, state.phi_comp(a), x, &c, i, th).0;
                }
                kin += g_form(alpha, q, &ph[..nc], &d[..nc], &d[..nc]).re;
            }
            acc += em + kin + model.potential.value(psi);
        }
        Ok(acc)
    });
    let vals = parts.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(par::pairwise_sum(&vals) * lat.dv())
}

/// T^{μν} at one site, evaluated from the printed tensor and symmetrised.
pub fn stress_energy(state: &FieldState, lat: &LatticeSpec, model: &Model, site: usize) -> Result<[[f64; 4]; 4]> {
    state.check_shape(lat, model)?;
    let n = state.sites;
    let nv = state.n_gauge;
    let nc = state.n_scalar;
    let c = lat.coords(site);
    let eta = [-1.0, 1.0, 1.0, 1.0];
    let mut ph = [ZERO; MAX_SCALAR];
    state.phi_at(site, &mut ph);
    let psi: f64 = ph[..nc].iter().map(|z| z.norm_sqr()).sum();
    let rad = model.kahler.radial(psi.sqrt())?;
    let hm = model.couplings.eval_h(psi);

    // upper-index F and F̃ per gauge field
    let mut fu = vec![[[0.0; 4]; 4]; nv];
    let mut fdu = vec![[[0.0; 4]; 4]; nv];
    for l in 0..nv {
        let a = [state.a_comp(l, 0), state.a_comp(l, 1), state.a_comp(l, 2)];
        let hv = curl_at(lat, &a, site, &c);
        let ev = [state.e[(l * 3) * n + site], state.e[(l * 3 + 1) * n + site], state.e[(l * 3 + 2) * n + site]];
        let mut fl = [[0.0; 4]; 4];
        // F_{0i} = −E_i, F_{ij} = ε_{ijk} H_k
        for i in 0..3 {
            fl[0][i + 1] = -ev[i];
            fl[i + 1][0] = ev[i];
        }
        fl[1][2] = hv[2];
        fl[2][1] = -hv[2];
        fl[1][3] = -hv[1];
        fl[3][1] = hv[1];
        fl[2][3] = hv[0];
        fl[3][2] = -hv[0];
        // F̃_{0i} = −H_i, F̃_{ij} = −ε_{ijk} E_k
        let mut dl = [[0.0; 4]; 4];
        for i in 0..3 {
            dl[0][i + 1] = -hv[i];
            dl[i + 1][0] = hv[i];
        }
        dl[1][2] = -ev[2];
        dl[2][1] = ev[2];
        dl[1][3] = ev[1];
        dl[3][1] = -ev[1];
        dl[2][3] = -ev[0];
        dl[3][2] = ev[0];
        for m in 0..4 {
            for k in 0..4 {
                fu[l][m][k] = eta[m] * eta[k] * fl[m][k];
                fdu[l][m][k] = eta[m] * eta[k] * dl[m][k];
            }
        }
    }

    // D^μ φ
    let mut du = [[ZERO; MAX_SCALAR]; 4];
    for a in 0..nc {
        du[0][a] = -state.pi[a * n + site];
    }
    for i in 0..3 {
        let th = state.theta(&model.charges, i, site);
        for a in 0..nc {
            du[i + 1][a] = link_dm(lat, state.phi_comp(a), site, &c, i, th).0;
        }
    }
    // g D_γ conj(D^γ)
    let mut contr = 0.0;
    for g in 0..4 {
        contr += eta[g] * g_form(rad.alpha, rad.q, &ph[..nc], &du[g][..nc], &du[g][..nc]).re;
    }
    let v = model.potential.value(psi);

    let mut t = [[0.0; 4]; 4];
    for m in 0..4 {
        for k in 0..4 {
            let mut em = 0.0;
            for l in 0..nv {
                for s in 0..nv {
                    let hls = hm.get(l, s);
                    if hls == 0.0 {
                        continue;
                    }
                    let mut ff = 0.0;
                    for g in 0..4 {
                        // F^{μ}_{γ} = F^{μγ} η_{γγ}
                        let fmg = fu[l][m][g] * eta[g];
                        ff += fmg * (fu[s][k][g] + fdu[s][k][g]);
                    }
                    em += 0.5 * hls * ff;
                }
            }
            let sc = 2.0 * g_form(rad.alpha, rad.q, &ph[..nc], &du[m][..nc], &du[k][..nc]).re;
            let diag = if m == k { eta[m] * (contr + v) } else { 0.0 };
            t[m][k] = em + sc - diag;
        }
    }
    for m in 0..4 {
        for k in (m + 1)..4 {
            let s = 0.5 * (t[m][k] + t[k][m]);
            t[m][k] = s;
            t[k][m] = s;
        }
    }
    Ok(t)
}

/// ‖E‖ + ‖H‖ + (c₁/2)‖Dφ‖ + ‖φ‖ + ‖V‖, all L².
pub fn flat_energy_J(s: &NormSnapshot, c1: f64) -> f64 {
    s.l2_E + s.l2_H + 0.5 * c1 * s.l2_Dphi + s.l2_phi + s.l2_V
}

/// (𝖤₀, 𝖤₁) with plain central differences, δ-contracted gauge indices.
pub fn sobolev_energies(state: &FieldState, lat: &LatticeSpec, m: f64) -> (f64, f64) {
    let n = state.sites;
    let nv = state.n_gauge;
    let nc = state.n_scalar;
    let grad = |f: &[f64]| -> [Vec<f64>; 3] {
        let mut g = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for x in 0..n {
            let c = lat.coords(x);
            for j in 0..3 {
                g[j][x] = lat.partial(f, x, &c, j);
            }
        }
        g
    };
    let grad_c = |f: &[C64]| -> [Vec<C64>; 3] {
        let mut g = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
        for x in 0..n {
            let c = lat.coords(x);
            for j in 0..3 {
                g[j][x] = lat.partial_c(f, x, &c, j);
            }
        }
        g
    };
    let mut e0 = vec![0.0; n];
    let mut e1 = vec![0.0; n];
    for l in 0..nv {
        for i in 0..3 {
            let a = state.a_comp(l, i);
            let e = state.e_comp(l, i);
            let da = grad(a);
            let de = grad(e);
            for x in 0..n {
                e0[x] += e[x] * e[x] + m * a[x] * a[x];
                for j in 0..3 {
                    e0[x] += da[j][x] * da[j][x];
                    e1[x] += de[j][x] * de[j][x];
                }
            }
            for j in 0..3 {
                if !lat.active(j) {
                    continue;
                }
                let dda = grad(&da[j]);
                for k in 0..3 {
                    for x in 0..n {
                        e1[x] += dda[k][x] * dda[k][x];
                    }
                }
            }
        }
    }
    for a in 0..nc {
        let ph = state.phi_comp(a);
        let pi = state.pi_comp(a);
        let dph = grad_c(ph);
        let dpi = grad_c(pi);
        for x in 0..n {
            e0[x] += pi[x].norm_sqr() + m * ph[x].norm_sqr();
            for j in 0..3 {
                e0[x] += dph[j][x].norm_sqr();
                e1[x] += dpi[j][x].norm_sqr();
            }
        }
        for j in 0..3 {
            if !lat.active(j) {
                continue;
            }
            let dd = grad_c(&dph[j]);
            for k in 0..3 {
                for x in 0..n {
                    e1[x] += dd[k][x].norm_sqr();
                }
            }
        }
    }
    let dv = lat.dv();
    (0.5 * par::pairwise_sum(&e0) * dv, 0.5 * par::pairwise_sum(&e1) * dv)
}

/// Largest lattice Bianchi residual of F = dA.
pub fn bianchi_residual(state: &FieldState, lat: &LatticeSpec) -> f64 {
    lattice::bianchi_residual_of(&lattice::field_strength(state, lat), lat)
}

/// Every diagnostic for one state.
pub fn diagnose(state: &FieldState, lat: &LatticeSpec, model: &Model, m: f64, c1: f64) -> Result<DiagnosticsRecord> {
    let norms = lattice::norms(state, lat, model);
    let gauss = gauss_residual(state, lat, model)?;
    let (s0, s1) = sobolev_energies(state, lat, m);
    Ok(DiagnosticsRecord {
        t: state.t,
        energy_E0: energy_E0(state, lat, model)?,
        flat_J: flat_energy_J(&norms, c1),
        sobolev_E0: s0,
        sobolev_E1: s1,
        gauss_res_l2: gauss.l2,
        gauss_res_linf: gauss.linf,
        bianchi_res_linf: bianchi_residual(state, lat),
        norm_snapshot: norms,
        mass_m: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialFamily;

    #[test]
    fn vacuum_is_zero() {
        let lat = LatticeSpec::new([4, 4, 4], 0.25).unwrap();
        let model = Model::free(1, 1);
        let s = FieldState::for_model(&lat, &model);
        assert_eq!(energy_E0(&s, &lat, &model).unwrap(), 0.0);
        assert_eq!(sobolev_energies(&s, &lat, 1.0), (0.0, 0.0));
        assert_eq!(stress_energy(&s, &lat, &model, 3).unwrap(), [[0.0; 4]; 4]);
        assert_eq!(bianchi_residual(&s, &lat), 0.0);
    }

    #[test]
    fn potential_only_energy() {
        let lat = LatticeSpec::new([2, 2, 2], 0.5).unwrap();
        let mut model = Model::free(1, 1);
        model.potential = PotentialFamily::Polynomial(vec![0.0, 0.0, 1.0]);
        let mut s = FieldState::for_model(&lat, &model);
        s.phi.fill(C64::new(1.0, 0.0));
        assert!((energy_E0(&s, &lat, &model).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_potential_sobolev() {
        let lat = LatticeSpec::new([4, 4, 4], 0.25).unwrap();
        let model = Model::free(1, 1);
        let mut s = FieldState::for_model(&lat, &model);
        s.a_comp_mut(0, 0).fill(0.3);
        let (e0, e1) = sobolev_energies(&s, &lat, 1.0);
        assert!((e0 - 0.045).abs() < 1e-15);
        assert_eq!(e1, 0.0);
    }

    #[test]
    fn electric_stress_component() {
        let lat = LatticeSpec::new([1, 1, 1], 1.0).unwrap();
        let model = Model::free(1, 1);
        let mut s = FieldState::for_model(&lat, &model);
        s.e[0] = 0.7;
        let t = stress_energy(&s, &lat, &model, 0).unwrap();
        // H = 0, so the dual term vanishes and T⁰⁰ = e²/2
        assert!((t[0][0] - 0.245).abs() < 1e-15);
    }

    #[test]
    fn flat_j_single_term() {
        let s = NormSnapshot { l2_phi: 3.0, ..Default::default() };
        assert_eq!(flat_energy_J(&s, 2.0), 3.0);
    }
}
