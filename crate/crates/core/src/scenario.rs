//! Initial data. Every profile varies along x only and uses lattice-resolvable
//! wave numbers k = 2π·mode / L_x.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{MkgError, Result};
use crate::lattice::{FieldState, LatticeSpec};
use crate::model::Model;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Vacuum,
    FreeMaxwellWave,
    FreeScalarWave,
    GaussianPulse,
    InteractingDemo,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Vacuum,
        Scenario::FreeMaxwellWave,
        Scenario::FreeScalarWave,
        Scenario::GaussianPulse,
        Scenario::InteractingDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Vacuum => "vacuum",
            Scenario::FreeMaxwellWave => "free_maxwell_wave",
            Scenario::FreeScalarWave => "free_scalar_wave",
            Scenario::GaussianPulse => "gaussian_pulse",
            Scenario::InteractingDemo => "interacting_demo",
        }
    }

    pub fn default_amplitude(self) -> f64 {
        match self {
            Scenario::Vacuum => 0.0,
            Scenario::FreeMaxwellWave | Scenario::FreeScalarWave => 0.05,
            Scenario::GaussianPulse => 0.1,
            Scenario::InteractingDemo => 0.3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioParams {
    pub amplitude: f64,
    pub mode: u32,
    pub width: f64,
}

impl ScenarioParams {
    pub fn defaults(s: Scenario) -> Self {
        Self { amplitude: s.default_amplitude(), mode: 1, width: 0.1 }
    }
}

/// Probe-wave amplitude of the interacting demo relative to the scalar one.
pub const PROBE_FRACTION: f64 = 1.0 / 6.0;

/// Analytic free solutions used as oracles.
pub mod exact {
    /// Standing scalar wave a cos(kx) cos(kt).
    pub fn standing_scalar(a: f64, k: f64, x: f64, t: f64) -> (f64, f64) {
        (a * (k * x).cos() * (k * t).cos(), -a * k * (k * x).cos() * (k * t).sin())
    }

    /// Right-moving Maxwell wave: (A_y, E_y) = ((a/k) sin(kx − kt), a cos(kx − kt)).
    pub fn maxwell(a: f64, k: f64, x: f64, t: f64) -> (f64, f64) {
        let s = k * (x - t);
        (a / k * s.sin(), a * s.cos())
    }
}

/// Fills a state for `scenario` on `lattice`.
pub fn initial_state(
    scenario: Scenario,
    p: &ScenarioParams,
    lattice: &LatticeSpec,
    model: &Model,
) -> Result<FieldState> {
    let mut st = FieldState::for_model(lattice, model);
    let lx = lattice.extent()[0];
    let k = 2.0 * PI * p.mode as f64 / lx;
    let a = p.amplitude;
    let xs: Vec<[f64; 3]> = (0..lattice.sites()).map(|i| lattice.position(i)).collect();
    match scenario {
        Scenario::Vacuum => {}
        Scenario::FreeMaxwellWave => {
            for (i, x) in xs.iter().enumerate() {
                let (ay, ey) = exact::maxwell(a, k, x[0], 0.0);
                st.a_comp_mut(0, 1)[i] = ay;
                st.e_comp_mut(0, 1)[i] = ey;
            }
        }
        Scenario::FreeScalarWave => {
            for (i, x) in xs.iter().enumerate() {
                st.phi_comp_mut(0)[i] = C64::new(exact::standing_scalar(a, k, x[0], 0.0).0, 0.0);
            }
        }
        Scenario::GaussianPulse => {
            let ext = lattice.extent();
            let w = p.width * lx;
            for (i, x) in xs.iter().enumerate() {
                let mut r2 = 0.0;
                for d in 0..3 {
                    if lattice.active(d) {
                        // periodic distance to the box centre
                        let mut dd = x[d] - 0.5 * ext[d];
                        dd -= ext[d] * (dd / ext[d]).round();
                        r2 += dd * dd;
                    }
                }
                st.phi_comp_mut(0)[i] = C64::new(a * (-0.5 * r2 / (w * w)).exp(), 0.0);
            }
        }
        Scenario::InteractingDemo => {
            // the second component winds the other way, so the flat-space
            // current has no uniform part and both share one frequency
            for (i, x) in xs.iter().enumerate() {
                st.phi_comp_mut(0)[i] = C64::from_polar(a, k * x[0]);
                if model.n_scalar() > 1 {
                    st.phi_comp_mut(1)[i] = C64::from_polar(a, -k * x[0]);
                }
            }
            // weak transverse probe waves, y-polarised in field 0 and
            // z-polarised in field 1; divergence free, so Gauss holds exactly
            let b = a * PROBE_FRACTION;
            for l in 0..model.n_gauge().min(2) {
                for (i, x) in xs.iter().enumerate() {
                    let (ay, ey) = exact::maxwell(b, k, x[0], 0.0);
                    st.a_comp_mut(l, 1 + l)[i] = ay;
                    st.e_comp_mut(l, 1 + l)[i] = ey;
                }
            }
        }
    }
    if !st.is_finite() {
        return Err(MkgError::Shape("initial data is not finite".into()));
    }
    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxwell_data_matches_oracle() {
        let lat = LatticeSpec::new([8, 1, 1], 0.125).unwrap();
        let m = Model::free(1, 1);
        let st =
            initial_state(Scenario::FreeMaxwellWave, &ScenarioParams::defaults(Scenario::FreeMaxwellWave), &lat, &m)
                .unwrap();
        assert!((st.e_comp(0, 1)[0] - 0.05).abs() < 1e-15);
        assert_eq!(st.a_comp(0, 1)[0], 0.0);
    }

    #[test]
    fn names_roundtrip() {
        for s in Scenario::ALL {
            let t: Scenario = serde_json::from_str(&format!("\"{}\"", s.name())).unwrap();
            assert_eq!(t, s);
        }
    }
}
