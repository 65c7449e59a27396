//! Trace CSV, binary snapshots, the constants sidecar and SVG line plots.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bounds::{eval_G, eval_LMN, eval_SXUW, EstimateConstants};
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{MkgError, Result};
use crate::lattice::{FieldState, LatticeSpec, NormSnapshot};

fn io_err(path: &Path, e: impl std::fmt::Display) -> MkgError {
    MkgError::Io(format!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------- CSV

pub const CSV_HEADER: [&str; 28] = [
    "t",
    "E0",
    "J",
    "J_envelope",
    "E0_sf",
    "E1_sf",
    "gauss_l2",
    "gauss_linf",
    "bianchi_linf",
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
    "L",
    "M",
    "N",
    "S",
    "X",
    "U",
    "W",
    "G",
];

pub fn csv_header() -> String {
    CSV_HEADER.join(",")
}

/// One trace row. `k.j0` must hold 𝒥₀.
pub fn csv_row(r: &DiagnosticsRecord, k: &EstimateConstants) -> String {
    let mut s = r.norm_snapshot;
    s.t = r.t;
    let (l, m, n) = eval_LMN(&s, k);
    let (cs, cx, cu, cw) = eval_SXUW(&s, k);
    let mut v = vec![
        r.t,
        r.energy_E0,
        r.flat_J,
        k.j0 * (1.0 + r.t),
        r.sobolev_E0,
        r.sobolev_E1,
        r.gauss_res_l2,
        r.gauss_res_linf,
        r.bianchi_res_linf,
    ];
    v.extend_from_slice(&s.values());
    v.extend_from_slice(&[l, m, n, cs, cx, cu, cw, eval_G(&s)]);
    let mut out = String::with_capacity(v.len() * 24);
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{x:e}").unwrap();
    }
    out
}

/// Whole trace as CSV text, header included.
pub fn trace_csv(rows: &[DiagnosticsRecord], k: &EstimateConstants) -> String {
    let mut out = csv_header();
    out.push('\n');
    for r in rows {
        out.push_str(&csv_row(r, k));
        out.push('\n');
    }
    out
}

/// Streaming trace writer.
pub struct TraceWriter {
    path: PathBuf,
    w: BufWriter<File>,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let f = File::create(path).map_err(|e| io_err(path, e))?;
        let mut w = BufWriter::new(f);
        writeln!(w, "{}", csv_header()).map_err(|e| io_err(path, e))?;
        Ok(Self { path: path.to_path_buf(), w })
    }

    pub fn write(&mut self, r: &DiagnosticsRecord, k: &EstimateConstants) -> Result<()> {
        writeln!(self.w, "{}", csv_row(r, k)).map_err(|e| io_err(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| io_err(&self.path, e))
    }
}

/// Reads a trace written by [`TraceWriter`]; `mass_m` is not stored in the
/// CSV and is filled from the argument.
pub fn read_trace(path: &Path, mass_m: f64) -> Result<Vec<DiagnosticsRecord>> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    parse_trace(BufReader::new(f), mass_m).map_err(|e| match e {
        MkgError::Io(m) => io_err(path, m),
        e => e,
    })
}

pub fn parse_trace(r: impl BufRead, mass_m: f64) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| MkgError::Io("empty trace".into()))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let idx = |name: &str| -> Result<usize> {
        cols.iter().position(|c| *c == name).ok_or_else(|| MkgError::Io(format!("trace has no column {name}")))
    };
    let base: Vec<usize> = ["t", "E0", "J", "E0_sf", "E1_sf", "gauss_l2", "gauss_linf", "bianchi_linf"]
        .iter()
        .map(|c| idx(c))
        .collect::<Result<_>>()?;
    let norm_idx: Vec<usize> = NormSnapshot::FIELDS.iter().map(|c| idx(c)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (ln, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| MkgError::Io(format!("trace row {}: {e}", ln + 2)))?;
        if v.len() != cols.len() {
            return Err(MkgError::Io(format!("trace row {} has {} fields, expected {}", ln + 2, v.len(), cols.len())));
        }
        let nv: Vec<f64> = norm_idx.iter().map(|&i| v[i]).collect();
        out.push(DiagnosticsRecord {
            t: v[base[0]],
            energy_E0: v[base[1]],
            flat_J: v[base[2]],
            sobolev_E0: v[base[3]],
            sobolev_E1: v[base[4]],
            gauss_res_l2: v[base[5]],
            gauss_res_linf: v[base[6]],
            bianchi_res_linf: v[base[7]],
            norm_snapshot: NormSnapshot::from_values(v[base[0]], &nv),
            mass_m,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------- sidecar

/// Constants the audit needs but the CSV does not carry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub constants: EstimateConstants,
    pub mass_m: f64,
}

/// `trace.csv` → `trace.constants.json`.
pub fn sidecar_path(trace: &Path) -> PathBuf {
    trace.with_extension("constants.json")
}

pub fn write_sidecar(trace: &Path, s: &Sidecar) -> Result<()> {
    let p = sidecar_path(trace);
    let text = serde_json::to_string_pretty(s).map_err(|e| io_err(&p, e))?;
    std::fs::write(&p, text).map_err(|e| io_err(&p, e))
}

pub fn read_sidecar(trace: &Path) -> Result<Option<Sidecar>> {
    let p = sidecar_path(trace);
    if !p.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
    serde_json::from_str(&text).map(Some).map_err(|e| io_err(&p, e))
}

// ---------------------------------------------------------------- snapshots

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"MKG1";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub dims: [usize; 3],
    pub dx: f64,
    pub state: FieldState,
}

pub fn encode_snapshot(state: &FieldState, lattice: &LatticeSpec) -> Vec<u8> {
    let mut b = Vec::with_capacity(48 + 8 * (state.a.len() * 2 + state.phi.len() * 4));
    b.extend_from_slice(SNAPSHOT_MAGIC);
    b.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    for d in lattice.dims {
        b.extend_from_slice(&(d as u32).to_le_bytes());
    }
    b.extend_from_slice(&(state.n_gauge as u32).to_le_bytes());
    b.extend_from_slice(&(state.n_scalar as u32).to_le_bytes());
    b.extend_from_slice(&lattice.dx.to_le_bytes());
    b.extend_from_slice(&state.t.to_le_bytes());
    for v in state.a.iter().chain(&state.e) {
        b.extend_from_slice(&v.to_le_bytes());
    }
    for z in state.phi.iter().chain(&state.pi) {
        b.extend_from_slice(&z.re.to_le_bytes());
        b.extend_from_slice(&z.im.to_le_bytes());
    }
    b
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    let bad = |m: &str| MkgError::Io(format!("snapshot: {m}"));
    let mut cur = bytes;
    let mut take = |n: usize| -> Result<&[u8]> {
        if cur.len() < n {
            return Err(bad("truncated"));
        }
        let (h, t) = cur.split_at(n);
        cur = t;
        Ok(h)
    };
    if take(4)? != SNAPSHOT_MAGIC {
        return Err(bad("bad magic"));
    }
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap());
    let f64_at = |s: &[u8]| f64::from_le_bytes(s.try_into().unwrap());
    let version = u32_at(take(4)?);
    if version != SNAPSHOT_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let dims = [u32_at(take(4)?) as usize, u32_at(take(4)?) as usize, u32_at(take(4)?) as usize];
    let n_gauge = u32_at(take(4)?) as usize;
    let n_scalar = u32_at(take(4)?) as usize;
    let dx = f64_at(take(8)?);
    let t = f64_at(take(8)?);
    let sites = dims[0] * dims[1] * dims[2];
    let nv = n_gauge * 3 * sites;
    let nc = n_scalar * sites;
    let mut real = |n: usize| -> Result<Vec<f64>> { (0..n).map(|_| take(8).map(f64_at)).collect() };
    let a = real(nv)?;
    let e = real(nv)?;
    let ph = real(2 * nc)?;
    let pi = real(2 * nc)?;
    let cplx = |v: Vec<f64>| v.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect::<Vec<_>>();
    if !cur.is_empty() {
        return Err(bad("trailing bytes"));
    }
    Ok(Snapshot { dims, dx, state: FieldState { n_gauge, n_scalar, sites, a, e, phi: cplx(ph), pi: cplx(pi), t } })
}

pub fn write_snapshot(path: &Path, state: &FieldState, lattice: &LatticeSpec) -> Result<()> {
    std::fs::write(path, encode_snapshot(state, lattice)).map_err(|e| io_err(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut b = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut b)).map_err(|e| io_err(path, e))?;
    decode_snapshot(&b)
}

// ---------------------------------------------------------------- SVG

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// A line plot of each series against a shared x axis.
pub fn svg_line_plot(title: &str, x_label: &str, series: &[(&str, &[f64], &[f64])]) -> String {
    let all_x = series.iter().flat_map(|s| s.1.iter());
    let all_y = series.iter().flat_map(|s| s.2.iter()).filter(|v| v.is_finite());
    let (x0, x1) = all_x.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (mut y0, mut y1) = all_y.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if y1 - y0 <= 1e-300 {
        let m = y0.abs().max(1.0) * 1e-3;
        y0 -= m;
        y1 += m;
    }
    let xr = if x1 > x0 { x1 - x0 } else { 1.0 };
    let px = |x: f64| PAD + (x - x0) / xr * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        W / 2.0,
        esc(title)
    )
    .unwrap();
    writeln!(s, r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#, H - PAD, W - PAD).unwrap();
    for (i, v) in [y0, 0.5 * (y0 + y1), y1].iter().enumerate() {
        let y = py(*v);
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="10">{:.3e}</text>"#,
            PAD - 4.0,
            y + 3.0,
            v
        )
        .unwrap();
        if i > 0 {
            writeln!(s, r##"<line x1="{PAD}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/>"##, W - PAD).unwrap();
        }
    }
    for v in [x0, 0.5 * (x0 + x1), x1] {
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{:.3}</text>"#,
            px(v),
            H - PAD + 14.0,
            v
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        W / 2.0,
        H - 12.0,
        esc(x_label)
    )
    .unwrap();
    for (k, (name, xs, ys)) in series.iter().enumerate() {
        let c = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut pen = false;
        for (x, y) in xs.iter().zip(ys.iter()) {
            if !y.is_finite() {
                pen = false;
                continue;
            }
            write!(d, "{}{:.2} {:.2} ", if pen { "L" } else { "M" }, px(*x), py(*y)).unwrap();
            pen = true;
        }
        writeln!(s, r#"<path d="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, d.trim_end()).unwrap();
        let ly = PAD + 14.0 * k as f64;
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{c}">{}</text>"#,
            W - PAD - 120.0,
            ly,
            esc(name)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// energy.svg, flat_energy.svg and constraints.svg in `dir`.
pub fn write_plots(dir: &Path, rows: &[DiagnosticsRecord], j0: f64) -> Result<()> {
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let col = |f: fn(&DiagnosticsRecord) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let e0 = col(|r| r.energy_E0);
    let j = col(|r| r.flat_J);
    let env: Vec<f64> = t.iter().map(|t| j0 * (1.0 + t)).collect();
    let g = col(|r| r.gauss_res_l2);
    let b = col(|r| r.bianchi_res_linf);
    let plots = [
        ("energy.svg", svg_line_plot("Energy E0", "t", &[("E0", &t, &e0)])),
        ("flat_energy.svg", svg_line_plot("Flat energy J(t)", "t", &[("J", &t, &j), ("J0 (1+t)", &t, &env)])),
        (
            "constraints.svg",
            svg_line_plot("Constraint residuals", "t", &[("Gauss L2", &t, &g), ("Bianchi Linf", &t, &b)]),
        ),
    ];
    for (name, svg) in plots {
        let p = dir.join(name);
        std::fs::write(&p, svg).map_err(|e| io_err(&p, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_roundtrip_is_bit_exact() {
        let lat = LatticeSpec::new([3, 2, 1], 0.3).unwrap();
        let mut st = FieldState::zeros(&lat, 2, 1);
        for (i, v) in st.a.iter_mut().enumerate() {
            *v = (i as f64).sin() / 3.0;
        }
        st.pi[4] = C64::new(-0.0, f64::MIN_POSITIVE);
        st.t = 1.0 / 3.0;
        let back = decode_snapshot(&encode_snapshot(&st, &lat)).unwrap();
        assert_eq!(back.dims, lat.dims);
        assert_eq!(back.dx.to_bits(), lat.dx.to_bits());
        assert_eq!(back.state, st);
        assert_eq!(back.state.pi[4].re.to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn truncated_snapshot_is_rejected() {
        let lat = LatticeSpec::new([2, 1, 1], 0.5).unwrap();
        let b = encode_snapshot(&FieldState::zeros(&lat, 1, 1), &lat);
        assert!(decode_snapshot(&b[..b.len() - 1]).is_err());
        assert!(decode_snapshot(b"MKG2").is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let r = DiagnosticsRecord {
            t: 0.1,
            energy_E0: 1.0 / 3.0,
            flat_J: 2.5,
            norm_snapshot: NormSnapshot::from_values(0.1, &[0.7; 11]),
            mass_m: 1.0,
            ..Default::default()
        };
        let text = trace_csv(&[r, r], &EstimateConstants::default());
        assert_eq!(text.lines().next().unwrap(), csv_header());
        let back = parse_trace(text.as_bytes(), 1.0).unwrap();
        assert_eq!(back, vec![r, r]);
    }
}
