//! Empirical fits of the existence constants over a diagnostics trace.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{MkgError, Result};

use super::{eval_G, eval_YZP, EstimateConstants};

/// Relative tolerance on the spacing of trace times.
pub const SAMPLING_TOL: f64 = 1e-6;
/// Allowed growth of a supremum between the first half and the whole trace.
pub const STABILITY_TOL: f64 = 0.05;

/// A supremum of a ratio over the trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Supremum over the whole trace.
    pub value: f64,
    /// Supremum over the first half (t ≤ T/2).
    pub half: f64,
    /// Supremum over the final quarter.
    pub final_quarter: f64,
    pub stabilized: bool,
    /// Every row was 0/0.
    pub indeterminate: bool,
}

impl FitResult {
    /// Fit of `ratio` where `None` marks a 0/0 row.
    fn from_ratios(t: &[f64], ratio: &[Option<f64>]) -> Self {
        let t_end = *t.last().unwrap_or(&0.0);
        let t0 = t.first().copied().unwrap_or(0.0);
        let mid = t0 + 0.5 * (t_end - t0);
        let q3 = t0 + 0.75 * (t_end - t0);
        let (mut value, mut half, mut quarter) = (0.0f64, 0.0f64, 0.0f64);
        let mut any = false;
        for (ti, r) in t.iter().zip(ratio) {
            let Some(r) = *r else { continue };
            any = true;
            value = value.max(r);
            if *ti <= mid {
                half = half.max(r);
            }
            if *ti >= q3 {
                quarter = quarter.max(r);
            }
        }
        let stabilized = value.is_finite() && value <= (1.0 + STABILITY_TOL) * half;
        Self { value, half, final_quarter: quarter, stabilized: stabilized || !any, indeterminate: !any }
    }
}

/// Existence constants as suprema over a trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    /// 𝒥(t) ≤ C_N 𝒥₀ (1 + t)
    pub c_n: FitResult,
    /// |d𝖤₀/dt| ≤ C₀ 𝒫(t) 𝖤₀
    pub c0: FitResult,
    /// |d𝖤₁/dt| ≤ fit · (X + W + P + U) 𝖤₁
    pub e1: FitResult,
    /// 𝒢² ≤ cap_intercept + cap_slope · t, i.e. c₀ + k₀ and c₁ + k₁.
    pub cap_intercept: f64,
    pub cap_slope: f64,
}

/// Fits plus the per-row series they were taken over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub fitted: FittedConstants,
    pub j0: f64,
    pub t: Vec<f64>,
    pub g: Vec<f64>,
    pub p_cal: Vec<f64>,
    pub e1_rate: Vec<f64>,
}

impl AuditReport {
    /// All three ratio fits finite and stabilized.
    pub fn passed(&self) -> bool {
        [self.fitted.c_n, self.fitted.c0, self.fitted.e1].iter().all(|f| f.value.is_finite() && f.stabilized)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# N(t) display read as the sum of its two lines; E1 rate is X+W+P+U")?;
        writeln!(f, "rows {}  J0 {:e}", self.t.len(), self.j0)?;
        let row = |f: &mut fmt::Formatter<'_>, name: &str, r: &FitResult| {
            writeln!(
                f,
                "{name:<6} sup {:e}  half {:e}  final-quarter {:e}  {}{}",
                r.value,
                r.half,
                r.final_quarter,
                if r.stabilized { "stabilized" } else { "NOT stabilized" },
                if r.indeterminate { " (indeterminate 0/0)" } else { "" }
            )
        };
        row(f, "C_N", &self.fitted.c_n)?;
        row(f, "C0", &self.fitted.c0)?;
        row(f, "E1", &self.fitted.e1)?;
        writeln!(f, "G^2 cap: c0+k0 = {:e}, c1+k1 = {:e}", self.fitted.cap_intercept, self.fitted.cap_slope)
    }
}

/// d/dt of uniformly sampled `y`: central inside, second-order one-sided at
/// the ends.
pub fn derivative(y: &[f64], dt: f64) -> Vec<f64> {
    let n = y.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (y[i + 1] - y[i - 1]) / (2.0 * dt);
    }
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dt);
    d[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * dt);
    d
}

/// num/den with 0/0 rows dropped.
fn ratio(num: f64, den: f64) -> Option<f64> {
    let tiny = f64::MIN_POSITIVE;
    if den.abs() <= tiny {
        if num.abs() <= tiny {
            None
        } else {
            Some(f64::INFINITY)
        }
    } else {
        Some(num / den)
    }
}

/// Checks the trace is long enough and uniformly sampled; returns dt.
pub fn check_sampling(t: &[f64]) -> Result<f64> {
    if t.len() < 3 {
        return Err(MkgError::TraceTooShort { rows: t.len() });
    }
    let dt = t[1] - t[0];
    if !(dt > 0.0) {
        return Err(MkgError::NonUniformSampling { row: 1 });
    }
    for i in 1..t.len() {
        let d = t[i] - t[i - 1];
        if (d - dt).abs() > SAMPLING_TOL * dt {
            return Err(MkgError::NonUniformSampling { row: i });
        }
    }
    Ok(dt)
}

/// Fits C_N, C₀, the 𝖤₁ factor and the 𝒢² cap. 𝒥₀ is taken from the first
/// row and overrides `constants.j0`.
pub fn audit_gronwall(trace: &[DiagnosticsRecord], constants: &EstimateConstants) -> Result<AuditReport> {
    let t: Vec<f64> = trace.iter().map(|r| r.t).collect();
    let dt = check_sampling(&t)?;
    let j0 = trace[0].flat_J;
    let k = EstimateConstants { j0, ..constants.clone() };

    let c_n: Vec<Option<f64>> = trace.iter().map(|r| ratio(r.flat_J, j0 * (1.0 + r.t))).collect();

    let e0: Vec<f64> = trace.iter().map(|r| r.sobolev_E0).collect();
    let e1: Vec<f64> = trace.iter().map(|r| r.sobolev_E1).collect();
    let de0 = derivative(&e0, dt);
    let de1 = derivative(&e1, dt);

    let mut p_cal = Vec::with_capacity(trace.len());
    let mut rate = Vec::with_capacity(trace.len());
    let mut g = Vec::with_capacity(trace.len());
    let mut c0 = Vec::with_capacity(trace.len());
    let mut c1 = Vec::with_capacity(trace.len());
    for (i, r) in trace.iter().enumerate() {
        let mut s = r.norm_snapshot;
        s.t = r.t;
        let f = eval_YZP(&s, &k, r.sobolev_E0);
        p_cal.push(f.p_cal);
        rate.push(f.e1_rate());
        g.push(eval_G(&s));
        c0.push(ratio(de0[i].abs(), f.p_cal * r.sobolev_E0));
        c1.push(ratio(de1[i].abs(), f.e1_rate() * r.sobolev_E1));
    }

    let g2_0 = g[0] * g[0];
    let slope = t.iter().zip(&g).skip(1).map(|(ti, gi)| (gi * gi - g2_0) / (ti - t[0])).fold(0.0f64, f64::max);

    Ok(AuditReport {
        fitted: FittedConstants {
            c_n: FitResult::from_ratios(&t, &c_n),
            c0: FitResult::from_ratios(&t, &c0),
            e1: FitResult::from_ratios(&t, &c1),
            cap_intercept: g2_0,
            cap_slope: slope,
        },
        j0,
        t,
        g,
        p_cal,
        e1_rate: rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(n: usize, dt: f64) -> Vec<DiagnosticsRecord> {
        (0..n).map(|i| DiagnosticsRecord { t: i as f64 * dt, ..Default::default() }).collect()
    }

    #[test]
    fn short_and_nonuniform_traces() {
        let k = EstimateConstants::default();
        assert_eq!(audit_gronwall(&rows(2, 0.1), &k).unwrap_err(), MkgError::TraceTooShort { rows: 2 });
        let mut r = rows(5, 0.1);
        r[3].t += 0.01;
        assert_eq!(audit_gronwall(&r, &k).unwrap_err(), MkgError::NonUniformSampling { row: 3 });
    }

    #[test]
    fn vacuum_trace_is_indeterminate() {
        let rep = audit_gronwall(&rows(10, 0.1), &EstimateConstants::default()).unwrap();
        assert!(rep.fitted.c_n.indeterminate);
        assert!(rep.fitted.c0.indeterminate);
        assert!(rep.fitted.e1.indeterminate);
        assert_eq!(rep.fitted.c_n.value, 0.0);
        assert!(rep.passed());
    }

    #[test]
    fn constant_j_fit_is_one_at_t0() {
        let mut r = rows(11, 0.1);
        for x in &mut r {
            x.flat_J = 2.0;
        }
        let rep = audit_gronwall(&r, &EstimateConstants::default()).unwrap();
        assert_eq!(rep.fitted.c_n.value, 1.0);
        assert!(rep.fitted.c_n.stabilized);
    }

    #[test]
    fn derivative_is_exact_on_quadratics() {
        let y: Vec<f64> = (0..6).map(|i| (i as f64 * 0.5).powi(2)).collect();
        let d = derivative(&y, 0.5);
        for (i, v) in d.iter().enumerate() {
            assert!((v - i as f64).abs() < 1e-12);
        }
    }
}
