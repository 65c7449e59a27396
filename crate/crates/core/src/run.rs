//! Run orchestration: evolve, record, snapshot, plot, audit.

use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::bounds::{audit_gronwall, AuditReport};
use crate::config::RunConfig;
use crate::diagnostics::{diagnose, DiagnosticsRecord};
use crate::dynamics::Integrator;
use crate::error::{MkgError, Result};
use crate::io::{self, Sidecar, TraceWriter};
use crate::lattice::FieldState;
use crate::par;
use crate::scenario::{initial_state, ScenarioParams};

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub steps: Option<u64>,
    pub threads: Option<usize>,
    /// Skip the SVG plots regardless of the config.
    pub no_plots: bool,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub trace_path: PathBuf,
    pub rows: Vec<DiagnosticsRecord>,
    pub state: FieldState,
    /// `None` when the trace is too short to audit.
    pub audit: Option<AuditReport>,
}

pub fn scenario_params(cfg: &RunConfig) -> ScenarioParams {
    let d = &cfg.raw.initial_data;
    let mut p = ScenarioParams::defaults(d.scenario);
    if let Some(a) = d.amplitude {
        p.amplitude = a;
    }
    if let Some(m) = d.mode {
        p.mode = m;
    }
    if let Some(w) = d.width {
        p.width = w;
    }
    p
}

pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary> {
    let threads = par::resolve_threads(opts.threads);
    par::pool(threads).install(|| run_inner(cfg, opts))
}

fn snapshot_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("snapshot_{step:08}.bin"))
}

fn run_inner(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary> {
    let out_dir = opts.out.clone().unwrap_or_else(|| cfg.raw.outputs.directory.clone());
    std::fs::create_dir_all(&out_dir).map_err(|e| MkgError::Io(format!("{}: {e}", out_dir.display())))?;
    let steps = opts.steps.unwrap_or(cfg.steps);
    let every = cfg.raw.outputs.csv_every;
    let snap_every = cfg.raw.outputs.snapshot_every;
    let (lat, model) = (&cfg.lattice, &cfg.model);

    let mut state = initial_state(cfg.scenario(), &scenario_params(cfg), lat, model)?;
    let first = diagnose(&state, lat, model, cfg.mass_m, cfg.flat_c1)?;
    let mut constants = cfg.estimate.clone();
    constants.j0 = first.flat_J;

    let trace_path = out_dir.join("trace.csv");
    let mut writer = TraceWriter::create(&trace_path)?;
    io::write_sidecar(&trace_path, &Sidecar { constants: constants.clone(), mass_m: cfg.mass_m })?;
    writer.write(&first, &constants)?;
    let mut rows = vec![first];
    if snap_every > 0 {
        io::write_snapshot(&snapshot_path(&out_dir, 0), &state, lat)?;
    }
    info!("{}: {} sites, dt {:e}, {} steps, J0 {:e}", cfg.scenario().name(), lat.sites(), cfg.dt, steps, constants.j0);

    let mut integ = Integrator::new(lat, model, cfg.dt);
    for step in 1..=steps {
        if let Err(e) = integ.advance(&mut state) {
            let p = out_dir.join("snapshot_abort.bin");
            io::write_snapshot(&p, &state, lat)?;
            writer.finish()?;
            warn!("aborted at step {step}; state written to {}", p.display());
            return Err(e);
        }
        // keep t exact rather than accumulated
        state.t = step as f64 * cfg.dt;
        if step % every == 0 || step == steps {
            let rec = diagnose(&state, lat, model, cfg.mass_m, cfg.flat_c1)?;
            writer.write(&rec, &constants)?;
            rows.push(rec);
        }
        if snap_every > 0 && step % snap_every == 0 {
            io::write_snapshot(&snapshot_path(&out_dir, step), &state, lat)?;
        }
    }
    writer.finish()?;
    io::write_snapshot(&out_dir.join("snapshot_final.bin"), &state, lat)?;

    if cfg.raw.outputs.plots && !opts.no_plots {
        io::write_plots(&out_dir, &rows, constants.j0)?;
    }

    // the final step may be off-cadence; audit only the uniform prefix
    let uniform = if steps % every == 0 { &rows[..] } else { &rows[..rows.len() - 1] };
    let audit = match audit_gronwall(uniform, &constants) {
        Ok(r) => {
            let p = out_dir.join("audit.txt");
            std::fs::write(&p, r.to_string()).map_err(|e| MkgError::Io(format!("{}: {e}", p.display())))?;
            Some(r)
        }
        Err(MkgError::TraceTooShort { rows }) => {
            warn!("trace has {rows} rows; audit skipped");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(RunSummary { out_dir, trace_path, rows, state, audit })
}
