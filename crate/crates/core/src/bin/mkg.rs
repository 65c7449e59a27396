use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mkg::bounds::{audit_gronwall, EstimateConstants};
use mkg::config::{load_config, FIT_RADIUS, FIT_SAMPLES};
use mkg::io;
use mkg::kahler::{kahler_bound_check, oracle_check};
use mkg::run::{run, RunOptions};
use mkg::spherical::{kirchhoff_residual_scan, PlaneWave, SphereQuadrature};
use mkg::MkgError;

/// Lattice simulator and bound auditor for Maxwell–Klein–Gordon systems.
#[derive(Parser)]
#[command(name = "mkg", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve a configured scenario and write trace.csv, snapshots, plots and audit.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        steps: Option<u64>,
        /// Worker threads; falls back to MKG_THREADS.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check the configured Kähler family against its oracle and the radial bounds.
    CheckGeometry {
        #[arg(long)]
        config: PathBuf,
    },
    /// Audit an existing trace.csv.
    CheckBounds {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Compare the spherical-means formula with analytic plane waves.
    KirchhoffVerify {
        #[arg(long, default_value_t = 8)]
        order: usize,
        /// Wave vector as kx,ky,kz.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [1.2, -0.9, 0.8])]
        k: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
    },
}

const ORACLE_TOL: f64 = 1e-6;
const KIRCHHOFF_TOL: f64 = 1e-3;

fn fail(e: MkgError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run { config, out, steps, threads } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let opts = RunOptions { out, steps, threads, no_plots: false };
            match run(&cfg, &opts) {
                Ok(s) => {
                    println!("trace: {} ({} rows)", s.trace_path.display(), s.rows.len());
                    match s.audit {
                        Some(a) => {
                            print!("{a}");
                            let f = &a.fitted;
                            println!(
                                "fitted constants: C_N = {:e}, C0 = {:e}, E1 exponent = {:e}",
                                f.c_n.value, f.c0.value, f.e1.value
                            );
                            if a.passed() {
                                ExitCode::SUCCESS
                            } else {
                                ExitCode::from(1)
                            }
                        }
                        None => {
                            println!("fitted constants: trace too short to audit");
                            ExitCode::SUCCESS
                        }
                    }
                }
                Err(e) => fail(e),
            }
        }
        Cmd::CheckGeometry { config } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let fam = &cfg.model.kahler;
            let dims = [1, 2, 3];
            let mut ok = true;
            println!("Q normalization: (Phi'' - Phi'/r) / (4 r^2)");
            for d in dims {
                match oracle_check(fam, d, 100, cfg.raw.seed) {
                    Ok(r) => {
                        let pass = r.passed(ORACLE_TOL);
                        ok &= pass;
                        println!(
                            "oracle dim {d}: metric {:.3e}  derivative {:.3e}  inverse {:.3e}  (4r-normalised Q: {:.3e})  {}",
                            r.metric_rel,
                            r.derivative_rel,
                            r.inverse_err,
                            r.metric_rel_inverse_linear,
                            if pass { "ok" } else { "FAIL" }
                        );
                    }
                    Err(e) => return fail(e),
                }
            }
            let top = FIT_RADIUS.min(fam.r_max());
            let radii: Vec<f64> = (1..=FIT_SAMPLES).map(|i| top * i as f64 / FIT_SAMPLES as f64).collect();
            match kahler_bound_check(fam, &radii) {
                Ok(r) => {
                    let (v, lv) = (r.violations(), r.lower_violations());
                    ok &= v == 0 && lv == 0;
                    println!("kahler_bound_check: {} radii, {v} violations", r.rows.len());
                    match fam.lower {
                        Some(lb) => println!("lower bound (c1 = {}, c2 = {}): {lv} violations", lb.c1, lb.c2),
                        None => println!("lower bound: not configured"),
                    }
                }
                Err(e) => {
                    eprintln!("kahler_bound_check: {e}");
                    ok = false;
                }
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Cmd::CheckBounds { trace } => {
            let side = match io::read_sidecar(&trace) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let (constants, m) = match side {
                Some(s) => (s.constants, s.mass_m),
                None => (EstimateConstants::default(), 1.0),
            };
            let rows = match io::read_trace(&trace, m) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            match audit_gronwall(&rows, &constants) {
                Ok(a) => {
                    print!("{a}");
                    if a.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Cmd::KirchhoffVerify { order, k, r0 } => {
            let Ok(kv) = <[f64; 3]>::try_from(k.as_slice()) else {
                eprintln!("error: --k needs exactly three components");
                return ExitCode::from(2);
            };
            let q = SphereQuadrature::new(order);
            let u = PlaneWave::new(kv);
            let points = [[0.0, 0.0, 0.0, 0.0], [0.3, 0.0, 0.5, -0.1], [1.7, -0.4, 0.2, 0.9]];
            let rep = kirchhoff_residual_scan(&u, &points, &[r0], &q);
            println!("order {order}  k = {kv:?}  r0 = {r0}");
            println!("{:>28}  {:>14}  {:>14}  {:>10}", "point (t,x,y,z)", "lin", "exact", "residual");
            for r in &rep.rows {
                let p = format!("({:.2},{:.2},{:.2},{:.2})", r.point[0], r.point[1], r.point[2], r.point[3]);
                println!("{p:>28}  {:>14.10}  {:>14.10}  {:>10.3e}", r.lin, r.exact, r.residual);
            }
            let max = rep.max_residual();
            println!("max residual {max:.3e} (tolerance {KIRCHHOFF_TOL:e})");
            if max < KIRCHHOFF_TOL {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
