//! TOML run configuration. Unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::EstimateConstants;
use crate::couplings::{CouplingFamily, CouplingMatrix, SmallMat};
use crate::error::{MkgError, Result};
use crate::kahler::{BoundConstants, KahlerFamily, LowerBound, DEFAULT_R_MAX};
use crate::lattice::{LatticeSpec, StencilOrder};
use crate::model::Model;
use crate::potential::{PotentialFamily, PotentialKind, DEFAULT_PSI_MAX};
use crate::scenario::Scenario;

/// Radii used to fit the Kähler bound constants when none are configured.
pub const FIT_RADIUS: f64 = 2.0;
pub const FIT_SAMPLES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub seed: u64,
    pub lattice: LatticeCfg,
    #[serde(default)]
    pub model: ModelCfg,
    #[serde(default)]
    pub couplings: CouplingsCfg,
    #[serde(default)]
    pub kahler: KahlerCfg,
    #[serde(default)]
    pub potential: PotentialCfg,
    pub initial_data: InitialDataCfg,
    #[serde(default)]
    pub integrator: IntegratorCfg,
    #[serde(default)]
    pub outputs: OutputsCfg,
    #[serde(default)]
    pub estimate_constants: EstimateCfg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeCfg {
    pub dims: [usize; 3],
    /// Defaults to 1 / dims[0], a unit box along x.
    pub dx: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelCfg {
    pub charges: Vec<f64>,
    pub n_scalar: usize,
}

impl Default for ModelCfg {
    fn default() -> Self {
        Self { charges: vec![0.0], n_scalar: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKindCfg {
    #[default]
    Constant,
    Saturating,
}

/// Matrices are row-major N_V × N_V lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MatrixCfg {
    #[serde(default)]
    pub kind: CouplingKindCfg,
    pub base: Option<Vec<f64>>,
    #[serde(rename = "mod")]
    pub modulation: Option<Vec<f64>>,
    #[serde(default)]
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CouplingsCfg {
    #[serde(default)]
    pub h: MatrixCfg,
    #[serde(default)]
    pub k: MatrixCfg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KahlerKindCfg {
    #[default]
    Flat,
    Polynomial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct KahlerCfg {
    #[serde(default)]
    pub kind: KahlerKindCfg,
    /// Φ(r) = Σ pₙ rⁿ.
    #[serde(default)]
    pub coefficients: Vec<f64>,
    pub r_max: Option<f64>,
    /// Bound constants; fitted on (0, 2] when `b` is absent.
    pub b: Option<Vec<f64>>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    /// Lower bound |Φ| ≥ (c₁/2) r² + c₂.
    pub lower_c1: Option<f64>,
    pub lower_c2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialCfg {
    pub kind: PotentialKind,
    #[serde(default)]
    pub coefficients: Vec<f64>,
    pub v0: Option<f64>,
    pub lambda: Option<f64>,
    #[serde(default)]
    pub toda_pairs: Vec<[f64; 2]>,
    pub psi_max: Option<f64>,
}

impl Default for PotentialCfg {
    fn default() -> Self {
        Self {
            kind: PotentialKind::Polynomial,
            coefficients: vec![],
            v0: None,
            lambda: None,
            toda_pairs: vec![],
            psi_max: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataCfg {
    pub scenario: Scenario,
    pub amplitude: Option<f64>,
    /// Wave number in units of 2π / L_x.
    pub mode: Option<u32>,
    /// Gaussian width as a fraction of L_x.
    pub width: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorCfg {
    pub dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Number of steps; `crossings` wins when both are set.
    pub steps: Option<u64>,
    /// Duration in light-crossing times of the x extent.
    pub crossings: Option<f64>,
    #[serde(default = "default_order")]
    pub stencil_order: u32,
}

fn default_cfl() -> f64 {
    0.25
}
fn default_order() -> u32 {
    2
}

impl Default for IntegratorCfg {
    fn default() -> Self {
        Self { dt: None, cfl: default_cfl(), steps: None, crossings: None, stencil_order: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsCfg {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    /// Steps between trace rows.
    #[serde(default = "one")]
    pub csv_every: u64,
    /// Steps between snapshots; 0 writes only the final one.
    #[serde(default)]
    pub snapshot_every: u64,
    #[serde(default = "yes")]
    pub plots: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn one() -> u64 {
    1
}
fn yes() -> bool {
    true
}

impl Default for OutputsCfg {
    fn default() -> Self {
        Self { directory: default_dir(), csv_every: 1, snapshot_every: 0, plots: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EstimateCfg {
    pub b: Option<Vec<f64>>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    /// The mass constant m of 𝖤₀.
    pub m: Option<f64>,
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub lattice: LatticeSpec,
    pub model: Model,
    pub dt: f64,
    pub steps: u64,
    pub estimate: EstimateConstants,
    pub mass_m: f64,
    /// c₁ of the flat energy, from the Kähler lower bound.
    pub flat_c1: f64,
}

fn invalid(key: &str, e: impl ToString) -> MkgError {
    MkgError::Validation { key: key.into(), message: e.to_string() }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| MkgError::Io(format!("{}: {e}", path.display())))?;
    load_config_str(&text)
}

pub fn parse_raw(text: &str) -> Result<RawConfig> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = match e.span() {
            Some(sp) => line_col(text, sp.start),
            None => (0, 0),
        };
        MkgError::Parse { message: e.message().to_string(), line, column }
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, column)
}

pub fn load_config_str(text: &str) -> Result<RunConfig> {
    RunConfig::from_raw(parse_raw(text)?)
}

fn matrix(n: usize, v: &Option<Vec<f64>>, default: SmallMat, key: &str) -> Result<SmallMat> {
    match v {
        None => Ok(default),
        Some(v) if v.len() != n * n => Err(invalid(key, format!("expected {} entries, got {}", n * n, v.len()))),
        Some(v) => SmallMat::from_rows(n, v).map_err(|e| invalid(key, e)),
    }
}

fn coupling(n: usize, c: &MatrixCfg, default_base: SmallMat, key: &str) -> Result<CouplingMatrix> {
    let base = matrix(n, &c.base, default_base, &format!("{key}.base"))?;
    Ok(match c.kind {
        CouplingKindCfg::Constant => CouplingMatrix::constant(base),
        CouplingKindCfg::Saturating => {
            let m = matrix(n, &c.modulation, SmallMat::zeros(n), &format!("{key}.mod"))?;
            CouplingMatrix::saturating(base, m, c.amplitude)
        }
    })
}

impl RunConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let dims = raw.lattice.dims;
        if dims.contains(&0) {
            return Err(invalid("lattice.dims", "every dimension must be at least 1"));
        }
        let dx = raw.lattice.dx.unwrap_or(1.0 / dims[0] as f64);
        let order =
            StencilOrder::from_int(raw.integrator.stencil_order).map_err(|e| invalid("integrator.stencil_order", e))?;
        let lattice = LatticeSpec::new(dims, dx).map_err(|e| invalid("lattice.dx", e))?.with_order(order);

        let n_gauge = raw.model.charges.len();
        if n_gauge == 0 || n_gauge > crate::couplings::MAX_GAUGE {
            return Err(invalid("model.charges", "need between 1 and 8 gauge fields"));
        }
        let h = coupling(n_gauge, &raw.couplings.h, SmallMat::identity(n_gauge), "couplings.h")?;
        let k = coupling(n_gauge, &raw.couplings.k, SmallMat::zeros(n_gauge), "couplings.k")?;
        let couplings = CouplingFamily::new(h, k).map_err(|e| match e {
            MkgError::IndefiniteCoupling { .. } => invalid("couplings.h.base", e),
            other => invalid("couplings", other),
        })?;

        let kahler = build_kahler(&raw.kahler)?;
        let potential = build_potential(&raw.potential)?;
        let model = Model::new(raw.model.charges.clone(), couplings, kahler, potential, raw.model.n_scalar)
            .map_err(|e| invalid("model", e))?;

        let it = &raw.integrator;
        let dt = match it.dt {
            Some(dt) => dt,
            None => it.cfl * dx,
        };
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("integrator.dt", "time step must be positive"));
        }
        let steps = match (it.crossings, it.steps) {
            (Some(c), _) => (c * lattice.extent()[0] / dt).round() as u64,
            (None, Some(s)) => s,
            (None, None) => 100,
        };
        if steps == 0 {
            return Err(invalid("integrator.steps", "at least one step is required"));
        }
        if raw.outputs.csv_every == 0 {
            return Err(invalid("outputs.csv_every", "cadence must be at least 1"));
        }

        let est = &raw.estimate_constants;
        let kb = &model.kahler.bounds;
        let n_cut = est.n.unwrap_or_else(|| model.potential.degree().max(1));
        let estimate = EstimateConstants {
            b: est.b.clone().unwrap_or_else(|| kb.b.clone()),
            c1: est.c1.unwrap_or(kb.c1),
            c2: est.c2.unwrap_or(kb.c2),
            c3: est.c3.unwrap_or(kb.c3),
            c4: est.c4.unwrap_or(1.0),
            n_cut,
            j0: 0.0,
            potential_kind: model.potential.kind(),
        };
        estimate.validate().map_err(|e| invalid("estimate_constants", e))?;
        let mass_m = est.m.unwrap_or(1.0);
        if !(mass_m > 0.0) {
            return Err(invalid("estimate_constants.m", "mass constant must be positive"));
        }
        let flat_c1 = model.kahler.lower.map(|l| l.c1).unwrap_or(2.0);

        Ok(Self { raw, lattice, model, dt, steps, estimate, mass_m, flat_c1 })
    }

    pub fn scenario(&self) -> Scenario {
        self.raw.initial_data.scenario
    }
}

fn build_kahler(c: &KahlerCfg) -> Result<KahlerFamily> {
    let r_max = c.r_max.unwrap_or(DEFAULT_R_MAX);
    let mut fam = match c.kind {
        KahlerKindCfg::Flat => KahlerFamily::flat(),
        KahlerKindCfg::Polynomial => {
            KahlerFamily::polynomial(c.coefficients.clone(), r_max).map_err(|e| invalid("kahler.coefficients", e))?
        }
    };
    if c.kind == KahlerKindCfg::Polynomial || c.b.is_some() {
        let bounds = match &c.b {
            Some(b) => BoundConstants {
                b: b.clone(),
                c1: c.c1.unwrap_or(0.0),
                c2: c.c2.unwrap_or(0.0),
                c3: c.c3.unwrap_or(0.0),
            },
            None => {
                let top = FIT_RADIUS.min(fam.r_max());
                let radii: Vec<f64> = (1..=FIT_SAMPLES).map(|i| top * i as f64 / FIT_SAMPLES as f64).collect();
                let mut k = fam.fit_bound_constants(&radii).map_err(|e| invalid("kahler", e))?;
                k.c1 = c.c1.unwrap_or(k.c1);
                k.c2 = c.c2.unwrap_or(k.c2);
                k.c3 = c.c3.unwrap_or(k.c3);
                k
            }
        };
        fam = fam.with_bounds(bounds).map_err(|e| invalid("kahler.b", e))?;
    }
    match (c.lower_c1, c.lower_c2) {
        (None, None) => {}
        (a, b) => {
            let lb = LowerBound { c1: a.unwrap_or(0.0), c2: b.unwrap_or(0.0) };
            if !(lb.c1 > 0.0) {
                return Err(invalid("kahler.lower_c1", "must be positive"));
            }
            fam = fam.with_lower_bound(lb);
        }
    }
    Ok(fam)
}

fn build_potential(c: &PotentialCfg) -> Result<PotentialFamily> {
    let fam = match c.kind {
        PotentialKind::Polynomial => PotentialFamily::Polynomial(c.coefficients.clone()),
        PotentialKind::SineGordon => PotentialFamily::SineGordon {
            v0: c.v0.ok_or_else(|| invalid("potential.v0", "required for sine_gordon"))?,
            lambda: c.lambda.ok_or_else(|| invalid("potential.lambda", "required for sine_gordon"))?,
        },
        PotentialKind::Toda => {
            if c.toda_pairs.is_empty() {
                return Err(invalid("potential.toda_pairs", "at least one pair is required"));
            }
            PotentialFamily::Toda(c.toda_pairs.iter().map(|p| (p[0], p[1])).collect())
        }
    };
    fam.checked(c.psi_max.unwrap_or(DEFAULT_PSI_MAX)).map_err(|e| invalid("potential", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[lattice]\ndims = [16, 1, 1]\n[initial_data]\nscenario = \"vacuum\"\n";

    #[test]
    fn minimal_vacuum_defaults() {
        let c = load_config_str(MINIMAL).unwrap();
        assert_eq!(c.lattice.dx, 1.0 / 16.0);
        assert_eq!(c.dt, 0.25 / 16.0);
        assert_eq!(c.steps, 100);
        assert_eq!(c.mass_m, 1.0);
        assert_eq!(c.estimate.c4, 1.0);
        assert_eq!(c.model.n_gauge(), 1);
        assert!(c.model.kahler.is_flat());
    }

    #[test]
    fn unknown_key_is_a_parse_error() {
        let text = format!("{MINIMAL}[potental]\nkind = \"toda\"\n");
        match load_config_str(&text).unwrap_err() {
            MkgError::Parse { message, line, .. } => {
                assert!(message.contains("potental"), "{message}");
                assert_eq!(line, 5);
            }
            e => panic!("{e:?}"),
        }
        let text = format!("{MINIMAL}[potential]\nkind = \"toda\"\nlamda = 1.0\n");
        assert!(matches!(load_config_str(&text).unwrap_err(), MkgError::Parse { .. }));
    }

    #[test]
    fn indefinite_h_names_the_key() {
        let text = format!("{MINIMAL}[couplings.h]\nbase = [-1.0]\n");
        match load_config_str(&text).unwrap_err() {
            MkgError::Validation { key, .. } => assert_eq!(key, "couplings.h.base"),
            e => panic!("{e:?}"),
        }
    }
}
