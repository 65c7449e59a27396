//! Spherical means and the linear Kirchhoff representation of free waves.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

/// Product rule on S²: Gauss–Legendre in cos θ times the trapezoid rule in
/// azimuth. `order` N integrates spherical harmonics of degree ≤ N exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereQuadrature {
    pub order: usize,
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn new(order: usize) -> Self {
        let n_theta = order / 2 + 1;
        let n_phi = order + 1;
        let gl = GaussLegendre::new(NonZeroUsize::new(n_theta).expect("nonzero"));
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let dphi = 2.0 * PI / n_phi as f64;
        for &(z, w) in gl.as_node_weight_pairs() {
            let s = (1.0 - z * z).max(0.0).sqrt();
            for j in 0..n_phi {
                let ph = j as f64 * dphi;
                nodes.push([s * ph.cos(), s * ph.sin(), z]);
                weights.push(w * dphi);
            }
        }
        Self { order, nodes, weights }
    }

    /// (1/4π) ∫ f dΩ.
    pub fn mean(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        let s: f64 = self.nodes.iter().zip(&self.weights).map(|(n, w)| w * f(*n)).sum();
        s / (4.0 * PI)
    }
}

/// A scalar field of (t, x) with first derivatives.
///
/// The default derivatives are fourth-order central differences with step
/// `FD_STEP`, for fields only available as samples.
pub trait WaveField {
    fn value(&self, t: f64, x: [f64; 3]) -> f64;

    fn dt(&self, t: f64, x: [f64; 3]) -> f64 {
        fd4(|h| self.value(t + h, x))
    }

    fn grad(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (i, gi) in g.iter_mut().enumerate() {
            *gi = fd4(|h| {
                let mut y = x;
                y[i] += h;
                self.value(t, y)
            });
        }
        g
    }
}

pub const FD_STEP: f64 = 1e-3;

fn fd4(f: impl Fn(f64) -> f64) -> f64 {
    let h = FD_STEP;
    (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h)
}

#[derive(Clone, Copy, Debug)]
pub struct Constant(pub f64);

impl WaveField for Constant {
    fn value(&self, _t: f64, _x: [f64; 3]) -> f64 {
        self.0
    }
    fn dt(&self, _t: f64, _x: [f64; 3]) -> f64 {
        0.0
    }
    fn grad(&self, _t: f64, _x: [f64; 3]) -> [f64; 3] {
        [0.0; 3]
    }
}

/// u = t.
#[derive(Clone, Copy, Debug)]
pub struct LinearInTime;

impl WaveField for LinearInTime {
    fn value(&self, t: f64, _x: [f64; 3]) -> f64 {
        t
    }
    fn dt(&self, _t: f64, _x: [f64; 3]) -> f64 {
        1.0
    }
    fn grad(&self, _t: f64, _x: [f64; 3]) -> [f64; 3] {
        [0.0; 3]
    }
}

/// a cos(k·x − |k|t + δ).
#[derive(Clone, Copy, Debug)]
pub struct PlaneWave {
    pub amplitude: f64,
    pub k: [f64; 3],
    pub phase: f64,
}

impl PlaneWave {
    pub fn new(k: [f64; 3]) -> Self {
        Self { amplitude: 1.0, k, phase: 0.0 }
    }

    fn arg(&self, t: f64, x: [f64; 3]) -> f64 {
        let w = (self.k[0].powi(2) + self.k[1].powi(2) + self.k[2].powi(2)).sqrt();
        self.k[0] * x[0] + self.k[1] * x[1] + self.k[2] * x[2] - w * t + self.phase
    }
}

impl WaveField for PlaneWave {
    fn value(&self, t: f64, x: [f64; 3]) -> f64 {
        self.amplitude * self.arg(t, x).cos()
    }
    fn dt(&self, t: f64, x: [f64; 3]) -> f64 {
        let w = (self.k[0].powi(2) + self.k[1].powi(2) + self.k[2].powi(2)).sqrt();
        self.amplitude * w * self.arg(t, x).sin()
    }
    fn grad(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let s = -self.amplitude * self.arg(t, x).sin();
        [s * self.k[0], s * self.k[1], s * self.k[2]]
    }
}

/// Σ cᵢ uᵢ.
pub struct Superposition(pub Vec<(f64, Box<dyn WaveField + Sync>)>);

impl WaveField for Superposition {
    fn value(&self, t: f64, x: [f64; 3]) -> f64 {
        self.0.iter().map(|(c, u)| c * u.value(t, x)).sum()
    }
    fn dt(&self, t: f64, x: [f64; 3]) -> f64 {
        self.0.iter().map(|(c, u)| c * u.dt(t, x)).sum()
    }
    fn grad(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (c, u) in &self.0 {
            let gi = u.grad(t, x);
            for i in 0..3 {
                g[i] += c * gi[i];
            }
        }
        g
    }
}

/// A closure field; derivatives by finite differences.
pub struct Sampled<F: Fn(f64, [f64; 3]) -> f64>(pub F);

impl<F: Fn(f64, [f64; 3]) -> f64> WaveField for Sampled<F> {
    fn value(&self, t: f64, x: [f64; 3]) -> f64 {
        (self.0)(t, x)
    }
}

/// (1/4π) ∫ dΩ [r₀ ∂_t u + r₀ ∂_r u + u] on the sphere of radius r₀ about
/// `p = (t, x, y, z)` at the retarded time t₀ = t − r₀.
pub fn kirchhoff_lin(u: &dyn WaveField, p: [f64; 4], r0: f64, quad: &SphereQuadrature) -> f64 {
    let t0 = p[0] - r0;
    quad.mean(|n| {
        let y = [p[1] + r0 * n[0], p[2] + r0 * n[1], p[3] + r0 * n[2]];
        let g = u.grad(t0, y);
        let dr = n[0] * g[0] + n[1] * g[1] + n[2] * g[2];
        r0 * u.dt(t0, y) + r0 * dr + u.value(t0, y)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub point: [f64; 4],
    pub r0: f64,
    pub lin: f64,
    pub exact: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub order: usize,
    pub rows: Vec<ScanRow>,
}

impl ScanReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

/// |kirchhoff_lin − u(p)| for every (p, r₀).
pub fn kirchhoff_residual_scan(
    u: &dyn WaveField,
    points: &[[f64; 4]],
    r0_list: &[f64],
    quad: &SphereQuadrature,
) -> ScanReport {
    let mut rows = Vec::new();
    for &p in points {
        for &r0 in r0_list {
            let lin = kirchhoff_lin(u, p, r0, quad);
            let exact = u.value(p[0], [p[1], p[2], p[3]]);
            rows.push(ScanRow { point: p, r0, lin, exact, residual: (lin - exact).abs() });
        }
    }
    ScanReport { order: quad.order, rows }
}
