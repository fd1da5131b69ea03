//! Model manifolds: flat complex tori (general period lattices) and
//! projective-space chart atlases with partition-of-unity quadrature.
//!
//! Grids are regular tensor-product grids in chart coordinates. A torus is a
//! single periodic chart on the unit cell, mapped to ambient coordinates by
//! its period matrix. A projective atlas for P^N carries N+1 affine charts on
//! [-2, 2]^{2N}; every integrand is multiplied by a smooth partition of unity
//! supported in ||z|| < 2, so plain cell sums converge superalgebraically.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::herm2_eigs;

pub const TOL_PSD: f64 = 1e-10;
pub const TOL_CLOSED: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ManifoldKind {
    Torus,
    ProjectiveAtlas,
    ProductFibration,
}

/// Small Hermitian matrix, complex dimension n <= 2.
#[derive(Clone, Copy, Debug)]
pub struct Herm {
    pub n: usize,
    pub d: [f64; 2],
    pub off_re: f64,
    pub off_im: f64,
}

impl Herm {
    pub fn zero(n: usize) -> Self {
        Herm { n, d: [0.0; 2], off_re: 0.0, off_im: 0.0 }
    }

    pub fn identity(n: usize) -> Self {
        Herm { n, d: [1.0, 1.0], off_re: 0.0, off_im: 0.0 }
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        Herm { n, d: [c, c], off_re: 0.0, off_im: 0.0 }
    }

    pub fn diag(n: usize, d0: f64, d1: f64) -> Self {
        Herm { n, d: [d0, d1], off_re: 0.0, off_im: 0.0 }
    }

    pub fn trace(&self) -> f64 {
        if self.n == 1 {
            self.d[0]
        } else {
            self.d[0] + self.d[1]
        }
    }

    pub fn det(&self) -> f64 {
        if self.n == 1 {
            self.d[0]
        } else {
            self.d[0] * self.d[1] - (self.off_re * self.off_re + self.off_im * self.off_im)
        }
    }

    pub fn min_eig(&self) -> f64 {
        if self.n == 1 {
            self.d[0]
        } else {
            herm2_eigs(self.d[0], self.d[1], self.off_re, self.off_im).0
        }
    }

    pub fn max_eig(&self) -> f64 {
        if self.n == 1 {
            self.d[0]
        } else {
            herm2_eigs(self.d[0], self.d[1], self.off_re, self.off_im).1
        }
    }

    pub fn add(&self, o: &Herm) -> Herm {
        Herm {
            n: self.n,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1]],
            off_re: self.off_re + o.off_re,
            off_im: self.off_im + o.off_im,
        }
    }

    pub fn sub(&self, o: &Herm) -> Herm {
        Herm {
            n: self.n,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1]],
            off_re: self.off_re - o.off_re,
            off_im: self.off_im - o.off_im,
        }
    }

    pub fn scale(&self, c: f64) -> Herm {
        Herm {
            n: self.n,
            d: [self.d[0] * c, self.d[1] * c],
            off_re: self.off_re * c,
            off_im: self.off_im * c,
        }
    }

    /// Inverse (n <= 2); caller guarantees invertibility.
    pub fn inverse(&self) -> Herm {
        if self.n == 1 {
            Herm { n: 1, d: [1.0 / self.d[0], 0.0], off_re: 0.0, off_im: 0.0 }
        } else {
            let det = self.det();
            Herm {
                n: 2,
                d: [self.d[1] / det, self.d[0] / det],
                off_re: -self.off_re / det,
                off_im: -self.off_im / det,
            }
        }
    }

    /// Frobenius pairing Re tr(A B) for Hermitian A, B.
    pub fn pair(&self, o: &Herm) -> f64 {
        if self.n == 1 {
            self.d[0] * o.d[0]
        } else {
            self.d[0] * o.d[0]
                + self.d[1] * o.d[1]
                + 2.0 * (self.off_re * o.off_re + self.off_im * o.off_im)
        }
    }
}

#[derive(Clone, Debug)]
pub struct Chart {
    /// Points per real axis (2n entries).
    pub shape: Vec<usize>,
    /// Grid step per real axis in chart coordinates.
    pub step: Vec<f64>,
    /// Coordinate of the index-0 point per axis.
    pub origin: Vec<f64>,
    pub periodic: bool,
    /// Offset of this chart's first point in global indexing.
    pub offset: usize,
    /// Row-major strides for the multi-index.
    pub strides: Vec<usize>,
    pub len: usize,
}

impl Chart {
    fn new(shape: Vec<usize>, step: Vec<f64>, origin: Vec<f64>, periodic: bool, offset: usize) -> Self {
        let mut strides = vec![0usize; shape.len()];
        let mut acc = 1usize;
        for a in (0..shape.len()).rev() {
            strides[a] = acc;
            acc *= shape[a];
        }
        Chart { len: acc, shape, step, origin, periodic, offset, strides }
    }

    pub fn coord(&self, local: usize, axis: usize) -> f64 {
        let i = (local / self.strides[axis]) % self.shape[axis];
        self.origin[axis] + i as f64 * self.step[axis]
    }

    /// Local index shifted by `delta` along `axis` (periodic wrap or clamp).
    pub fn shift(&self, local: usize, axis: usize, delta: isize) -> usize {
        let m = self.shape[axis] as isize;
        let i = ((local / self.strides[axis]) % self.shape[axis]) as isize;
        let j = if self.periodic {
            (i + delta).rem_euclid(m)
        } else {
            (i + delta).clamp(0, m - 1)
        };
        (local as isize + (j - i) * self.strides[axis] as isize) as usize
    }
}

/// Fibration descriptor for product models: projection onto the base factor.
#[derive(Clone, Debug, Serialize)]
pub struct Fibration {
    /// Complex axes of the fiber factor.
    pub fiber_axes: Vec<usize>,
    /// Complex axes of the base factor.
    pub base_axes: Vec<usize>,
}

#[derive(Debug)]
pub struct ModelManifold {
    pub kind: ManifoldKind,
    pub n: usize,
    pub resolution: usize,
    pub label: String,
    pub charts: Vec<Chart>,
    /// Torus period matrix (2n x 2n, row-major), identity-like for atlases.
    period: Vec<f64>,
    period_inv: Vec<f64>,
    abs_det_period: f64,
    /// Per-point quadrature weight factor (partition of unity on atlases).
    pou: Vec<f64>,
    pub fibration: Option<Fibration>,
    total: usize,
}

fn mat_det(m: &[f64], k: usize) -> f64 {
    match k {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        _ => {
            // Laplace expansion along the first row; k <= 4 here.
            let mut det = 0.0;
            for j in 0..k {
                let mut minor = Vec::with_capacity((k - 1) * (k - 1));
                for r in 1..k {
                    for c in 0..k {
                        if c != j {
                            minor.push(m[r * k + c]);
                        }
                    }
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                det += sign * m[j] * mat_det(&minor, k - 1);
            }
            det
        }
    }
}

fn mat_inv(m: &[f64], k: usize) -> Option<Vec<f64>> {
    // Gauss-Jordan with partial pivoting.
    let mut a = m.to_vec();
    let mut inv = vec![0.0; k * k];
    for i in 0..k {
        inv[i * k + i] = 1.0;
    }
    for col in 0..k {
        let mut piv = col;
        for r in col + 1..k {
            if a[r * k + col].abs() > a[piv * k + col].abs() {
                piv = r;
            }
        }
        if a[piv * k + col].abs() < 1e-14 {
            return None;
        }
        for c in 0..k {
            a.swap(col * k + c, piv * k + c);
            inv.swap(col * k + c, piv * k + c);
        }
        let p = a[col * k + col];
        for c in 0..k {
            a[col * k + c] /= p;
            inv[col * k + c] /= p;
        }
        for r in 0..k {
            if r != col {
                let f = a[r * k + col];
                for c in 0..k {
                    a[r * k + c] -= f * a[col * k + c];
                    inv[r * k + c] -= f * inv[col * k + c];
                }
            }
        }
    }
    Some(inv)
}

/// Smooth ramp: 0 for x <= 0, 1 for x >= 1.
fn smooth_step(x: f64) -> f64 {
    let q = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = q(x);
    let b = q(1.0 - x);
    a / (a + b)
}

/// Construct a flat complex torus of dimension `n` from a (2n x 2n) period
/// matrix given in row-major order. The grid lives on the unit cell and is
/// mapped by the period matrix; derivative stencils apply the chain rule.
pub fn build_torus(n: usize, period: &[f64], resolution: usize) -> Result<ModelManifold> {
    if n == 0 || n > 2 {
        return Err(Error::Unsupported(format!("complex dimension {n} (desk-scale cap is 2)")));
    }
    if resolution < 8 {
        return Err(Error::InvalidInput(format!("resolution {resolution} below floor 8")));
    }
    let k = 2 * n;
    if period.len() != k * k {
        return Err(Error::InvalidInput(format!(
            "period matrix must have {} entries, got {}",
            k * k,
            period.len()
        )));
    }
    let det = mat_det(period, k);
    let scale: f64 = period.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if det.abs() <= 1e-12 * scale.powi(k as i32).max(1e-300) {
        return Err(Error::InvalidInput("degenerate period matrix".into()));
    }
    let period_inv = mat_inv(period, k)
        .ok_or_else(|| Error::InvalidInput("degenerate period matrix".into()))?;

    let shape = vec![resolution; k];
    let step = vec![1.0 / resolution as f64; k];
    let origin = vec![0.0; k];
    let chart = Chart::new(shape, step, origin, true, 0);
    let total = chart.len;

    // Product structure: period matrix block-diagonal over complex axes.
    let mut block_diag = true;
    for r in 0..k {
        for c in 0..k {
            if r / 2 != c / 2 && period[r * k + c].abs() > 1e-14 * scale {
                block_diag = false;
            }
        }
    }
    let fibration = if n >= 2 && block_diag {
        Some(Fibration { fiber_axes: (0..n - 1).collect(), base_axes: vec![n - 1] })
    } else {
        None
    };
    let kind = if fibration.is_some() { ManifoldKind::ProductFibration } else { ManifoldKind::Torus };

    Ok(ModelManifold {
        kind,
        n,
        resolution,
        label: format!("torus-n{n}-r{resolution}"),
        charts: vec![chart],
        period: period.to_vec(),
        period_inv,
        abs_det_period: det.abs(),
        pou: vec![1.0; total],
        fibration,
        total,
    })
}

/// Square torus of side `l` in each complex axis.
pub fn square_torus(n: usize, l: f64, resolution: usize) -> Result<ModelManifold> {
    let k = 2 * n;
    let mut period = vec![0.0; k * k];
    for i in 0..k {
        period[i * k + i] = l;
    }
    build_torus(n, &period, resolution)
}

/// Chart atlas for P^N with the Fubini-Study reference form, normalized so
/// that the volume equals the degree (== 1).
pub fn fubini_study_atlas(ambient_n: usize, resolution: usize) -> Result<(Arc<ModelManifold>, ReferenceForm)> {
    if !(1..=2).contains(&ambient_n) {
        return Err(Error::Unsupported(format!(
            "projective atlas for P^{ambient_n}: only N in {{1, 2}} supported"
        )));
    }
    if resolution < 16 {
        return Err(Error::InvalidInput(format!("resolution {resolution} below floor 16")));
    }
    let n = ambient_n;
    let k = 2 * n;
    let extent = 2.0;
    let n_charts = n + 1;
    let mut charts = Vec::with_capacity(n_charts);
    let mut offset = 0;
    for _ in 0..n_charts {
        let shape = vec![resolution; k];
        let step = vec![2.0 * extent / (resolution as f64); k];
        // Cell-centered grid: midpoints of a uniform partition of [-2, 2].
        let origin = vec![-extent + extent / resolution as f64; k];
        let chart = Chart::new(shape, step, origin, false, offset);
        offset += chart.len;
        charts.push(chart);
    }
    let total = offset;

    // Partition of unity from homogeneous weights g(|x_i|^2 / ||x||^2).
    let ramp = |u: f64| smooth_step((u - 0.2) / (1.0 / 3.0 - 0.2));
    let mut pou = vec![0.0; total];
    for chart in &charts {
        for local in 0..chart.len {
            let mut z = [Complex64::new(0.0, 0.0); 2];
            for j in 0..n {
                z[j] = Complex64::new(chart.coord(local, 2 * j), chart.coord(local, 2 * j + 1));
            }
            let s: f64 = (0..n).map(|j| z[j].norm_sqr()).sum();
            // Homogeneous coordinates: x_ci = 1, others are the chart coords.
            let norm2 = 1.0 + s;
            let mut wsum = ramp(1.0 / norm2);
            let wi = ramp(1.0 / norm2);
            for j in 0..n {
                wsum += ramp(z[j].norm_sqr() / norm2);
            }
            pou[chart.offset + local] = wi / wsum;
        }
    }

    let k2 = k * k;
    let mut period = vec![0.0; k2];
    for i in 0..k {
        period[i * k + i] = 1.0;
    }
    let m = Arc::new(ModelManifold {
        kind: ManifoldKind::ProjectiveAtlas,
        n,
        resolution,
        label: format!("projective-atlas-P{n}-r{resolution}"),
        charts,
        period: period.clone(),
        period_inv: period,
        abs_det_period: 1.0,
        pou,
        fibration: None,
        total,
    });

    let mut coeff = Vec::with_capacity(total);
    for chart in &m.charts {
        for local in 0..chart.len {
            let mut z = [Complex64::new(0.0, 0.0); 2];
            for j in 0..n {
                z[j] = Complex64::new(chart.coord(local, 2 * j), chart.coord(local, 2 * j + 1));
            }
            coeff.push(fs_matrix(n, &z[..n]));
        }
    }
    let form = ReferenceForm {
        manifold: m.clone(),
        coeff,
        kahler: true,
        semipositive: true,
        label: "fubini-study".into(),
    };
    Ok((m, form))
}

/// Fubini-Study coefficient matrix ((1+s) d_jk - conj(z_j) z_k) / (2 (1+s)^2).
pub fn fs_matrix(n: usize, z: &[Complex64]) -> Herm {
    let s: f64 = z.iter().map(|w| w.norm_sqr()).sum();
    let denom = 2.0 * (1.0 + s) * (1.0 + s);
    if n == 1 {
        Herm { n: 1, d: [((1.0 + s) - z[0].norm_sqr()) / denom, 0.0], off_re: 0.0, off_im: 0.0 }
    } else {
        let h12 = -(z[0].conj() * z[1]) / denom;
        Herm {
            n: 2,
            d: [
                ((1.0 + s) - z[0].norm_sqr()) / denom,
                ((1.0 + s) - z[1].norm_sqr()) / denom,
            ],
            off_re: h12.re,
            off_im: h12.im,
        }
    }
}

impl ModelManifold {
    pub fn total_points(&self) -> usize {
        self.total
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    pub fn chart_of(&self, g: usize) -> (usize, usize) {
        for (ci, c) in self.charts.iter().enumerate() {
            if g < c.offset + c.len {
                return (ci, g - c.offset);
            }
        }
        panic!("index out of range");
    }

    /// Chart coordinates of a global point.
    pub fn coords(&self, g: usize) -> Vec<f64> {
        let (ci, local) = self.chart_of(g);
        let c = &self.charts[ci];
        (0..self.real_dim()).map(|a| c.coord(local, a)).collect()
    }

    /// Ambient coordinates (period matrix applied on tori).
    pub fn ambient_coords(&self, g: usize) -> Vec<f64> {
        let u = self.coords(g);
        let k = self.real_dim();
        if self.kind == ManifoldKind::ProjectiveAtlas {
            return u;
        }
        let mut z = vec![0.0; k];
        for r in 0..k {
            for c in 0..k {
                z[r] += self.period[r * k + c] * u[c];
            }
        }
        z
    }

    /// Inverse of the period mapping: ambient coordinates to unit-cell
    /// coordinates (identity on atlases).
    pub fn ambient_to_cell(&self, z: &[f64]) -> Vec<f64> {
        let k = self.real_dim();
        if self.kind == ManifoldKind::ProjectiveAtlas {
            return z.to_vec();
        }
        let mut u = vec![0.0; k];
        for r in 0..k {
            for c in 0..k {
                u[r] += self.period_inv[r * k + c] * z[c];
            }
        }
        u
    }

    /// Lebesgue cell weight (chart measure x partition of unity).
    pub fn cell_weight(&self, g: usize) -> f64 {
        let (ci, _) = self.chart_of(g);
        let c = &self.charts[ci];
        let cell: f64 = c.step.iter().product();
        let jac = if self.kind == ManifoldKind::ProjectiveAtlas { 1.0 } else { self.abs_det_period };
        cell * jac * self.pou[g]
    }

    /// Factor converting det(coefficient) d(lambda) into the manifold's
    /// volume normalization: 1 on tori (identity form -> lattice area),
    /// n! (2/pi)^n on projective atlases (Fubini-Study -> degree).
    pub fn form_norm(&self) -> f64 {
        match self.kind {
            ManifoldKind::ProjectiveAtlas => {
                let nf: f64 = (1..=self.n).map(|i| i as f64).product();
                nf * (2.0 / std::f64::consts::PI).powi(self.n as i32)
            }
            _ => 1.0,
        }
    }

    /// Geodesic-ish displacement between grid points in ambient coordinates,
    /// accounting for periodicity (shortest representative on tori).
    pub fn displacement(&self, g_from: usize, g_to: usize) -> Vec<f64> {
        let k = self.real_dim();
        let a = self.coords(g_from);
        let b = self.coords(g_to);
        let mut du = vec![0.0; k];
        for i in 0..k {
            let mut d = b[i] - a[i];
            if self.charts[0].periodic && self.kind != ManifoldKind::ProjectiveAtlas {
                if d > 0.5 {
                    d -= 1.0;
                }
                if d < -0.5 {
                    d += 1.0;
                }
            }
            du[i] = d;
        }
        if self.kind == ManifoldKind::ProjectiveAtlas {
            return du;
        }
        let mut dz = vec![0.0; k];
        for r in 0..k {
            for c in 0..k {
                dz[r] += self.period[r * k + c] * du[c];
            }
        }
        dz
    }

    fn second_partial_u(&self, data: &[f64], chart: &Chart, local: usize, a: usize, b: usize) -> f64 {
        let ha = chart.step[a];
        if a == b {
            let p = data[chart.offset + chart.shift(local, a, 1)];
            let m = data[chart.offset + chart.shift(local, a, -1)];
            let c = data[chart.offset + local];
            (p + m - 2.0 * c) / (ha * ha)
        } else {
            let hb = chart.step[b];
            let pp = data[chart.offset + chart.shift(chart.shift(local, a, 1), b, 1)];
            let pm = data[chart.offset + chart.shift(chart.shift(local, a, 1), b, -1)];
            let mp = data[chart.offset + chart.shift(chart.shift(local, a, -1), b, 1)];
            let mm = data[chart.offset + chart.shift(chart.shift(local, a, -1), b, -1)];
            (pp - pm - mp + mm) / (4.0 * ha * hb)
        }
    }

    /// Congruence transform of a real Hessian from unit-cell to ambient
    /// coordinates: H_z = Q^T H_u Q with Q = period^{-1} (identity on
    /// atlases).
    pub fn cell_hessian_to_ambient(&self, hu: &[f64]) -> Vec<f64> {
        let k = self.real_dim();
        if self.kind == ManifoldKind::ProjectiveAtlas {
            return hu.to_vec();
        }
        let q = &self.period_inv;
        let mut tmp = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                let mut s = 0.0;
                for c in 0..k {
                    s += hu[a * k + c] * q[c * k + b];
                }
                tmp[a * k + b] = s;
            }
        }
        let mut out = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                let mut s = 0.0;
                for c in 0..k {
                    s += q[c * k + a] * tmp[c * k + b];
                }
                out[a * k + b] = s;
            }
        }
        out
    }

    /// Gradient transform nabla_z = Q^T nabla_u.
    pub fn cell_gradient_to_ambient(&self, du: &[f64]) -> Vec<f64> {
        let k = self.real_dim();
        if self.kind == ManifoldKind::ProjectiveAtlas {
            return du.to_vec();
        }
        let q = &self.period_inv;
        let mut out = vec![0.0; k];
        for a in 0..k {
            for c in 0..k {
                out[a] += q[c * k + a] * du[c];
            }
        }
        out
    }

    /// Complex Hessian entries from an ambient real Hessian:
    /// phi_{z_j zbar_k} = 1/4 [H_{x_j x_k} + H_{y_j y_k} + i (H_{x_j y_k} - H_{y_j x_k})].
    pub fn complex_from_real_hessian(&self, hz: &[f64]) -> Herm {
        let k = self.real_dim();
        let n = self.n;
        let mut h = Herm::zero(n);
        for j in 0..n {
            let xx = hz[(2 * j) * k + 2 * j];
            let yy = hz[(2 * j + 1) * k + 2 * j + 1];
            h.d[j] = 0.25 * (xx + yy);
        }
        if n == 2 {
            h.off_re = 0.25 * (hz[2] + hz[k + 3]);
            h.off_im = 0.25 * (hz[3] - hz[k + 2]);
        }
        h
    }

    /// Centered-difference complex Hessian (d^2 / dz_j dzbar_k) at a point,
    /// second-order accurate on smooth fields. Chain rule through the period
    /// matrix maps unit-cell derivatives to ambient complex coordinates.
    pub fn complex_hessian_at(&self, data: &[f64], g: usize) -> Herm {
        let (ci, local) = self.chart_of(g);
        let chart = &self.charts[ci];
        let k = self.real_dim();
        let mut hu = vec![0.0; k * k];
        for a in 0..k {
            for b in a..k {
                let v = self.second_partial_u(data, chart, local, a, b);
                hu[a * k + b] = v;
                hu[b * k + a] = v;
            }
        }
        let hz = self.cell_hessian_to_ambient(&hu);
        self.complex_from_real_hessian(&hz)
    }

    /// Coefficient of -u(x) in the complex Hessian at x (constant per
    /// chart); used by the envelope relaxation. The center value enters each
    /// on-axis second difference with coefficient -2/h_a^2.
    pub fn hessian_center_coeff(&self, chart_idx: usize) -> Herm {
        let chart = &self.charts[chart_idx];
        let k = self.real_dim();
        let mut hu = vec![0.0; k * k];
        for a in 0..k {
            hu[a * k + a] = 2.0 / (chart.step[a] * chart.step[a]);
        }
        let hz = self.cell_hessian_to_ambient(&hu);
        self.complex_from_real_hessian(&hz)
    }
}

/// Real-valued function sampled on a model-manifold grid.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub manifold: Arc<ModelManifold>,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(m: &Arc<ModelManifold>) -> Self {
        ScalarField { manifold: m.clone(), data: vec![0.0; m.total_points()] }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(m: &Arc<ModelManifold>, f: F) -> Self {
        let data = (0..m.total_points()).map(|g| f(&m.ambient_coords(g))).collect();
        ScalarField { manifold: m.clone(), data }
    }

    pub fn sup(&self) -> f64 {
        self.data.iter().cloned().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.data.iter().cloned().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min)
    }

    /// Integral against the reference volume of `form`.
    pub fn integrate(&self, form: &ReferenceForm) -> f64 {
        let m = &self.manifold;
        let norm = m.form_norm();
        let mut s = 0.0;
        for g in 0..m.total_points() {
            let v = self.data[g];
            if v.is_finite() {
                s += v * form.coeff[g].det() * norm * m.cell_weight(g);
            }
        }
        s
    }

    pub fn dump_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "index,chart,coords,value")?;
        for g in 0..self.manifold.total_points() {
            let (ci, _) = self.manifold.chart_of(g);
            let c = self
                .manifold
                .coords(g)
                .iter()
                .map(|v| format!("{v:.6}"))
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(w, "{g},{ci},{c},{:.12e}", self.data[g])?;
        }
        Ok(())
    }
}

/// Coefficient field of a closed real (1,1)-form on a model manifold.
#[derive(Clone, Debug)]
pub struct ReferenceForm {
    pub manifold: Arc<ModelManifold>,
    pub coeff: Vec<Herm>,
    pub kahler: bool,
    pub semipositive: bool,
    pub label: String,
}

impl ReferenceForm {
    /// Constant-coefficient form (always closed).
    pub fn constant(m: &Arc<ModelManifold>, h: Herm, label: &str) -> Result<Self> {
        let form = ReferenceForm {
            manifold: m.clone(),
            coeff: vec![h; m.total_points()],
            kahler: h.min_eig() > 0.0,
            semipositive: h.min_eig() >= -TOL_PSD,
            label: label.to_string(),
        };
        form.validate()?;
        Ok(form)
    }

    /// Form with coefficients given pointwise in ambient coordinates.
    pub fn from_fn<F: Fn(&[f64]) -> Herm>(m: &Arc<ModelManifold>, f: F, label: &str) -> Result<Self> {
        let coeff: Vec<Herm> = (0..m.total_points()).map(|g| f(&m.ambient_coords(g))).collect();
        let min = coeff.iter().map(|h| h.min_eig()).fold(f64::INFINITY, f64::min);
        let form = ReferenceForm {
            manifold: m.clone(),
            coeff,
            kahler: min > 0.0,
            semipositive: min >= -TOL_PSD,
            label: label.to_string(),
        };
        form.validate()?;
        Ok(form)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.semipositive {
            let min = self.coeff.iter().map(|h| h.min_eig()).fold(f64::INFINITY, f64::min);
            return Err(Error::InvalidInput(format!(
                "form '{}' is not semi-positive: min eigenvalue {min:.3e}",
                self.label
            )));
        }
        let res = self.closedness_residual();
        if res > TOL_CLOSED {
            return Err(Error::InvalidInput(format!(
                "form '{}' is not closed: discrete d-residual {res:.3e}",
                self.label
            )));
        }
        Ok(())
    }

    pub fn min_eig(&self) -> f64 {
        self.coeff.iter().map(|h| h.min_eig()).fold(f64::INFINITY, f64::min)
    }

    /// Discrete exterior-derivative residual. Identically zero in complex
    /// dimension one (top-degree forms); in dimension two checks
    /// d_{z_l} h_{j kbar} = d_{z_j} h_{l kbar} by centered differences.
    pub fn closedness_residual(&self) -> f64 {
        let m = &self.manifold;
        if m.n < 2 {
            return 0.0;
        }
        // Components as four real scalar fields.
        let comps: [Vec<f64>; 4] = [
            self.coeff.iter().map(|h| h.d[0]).collect(),
            self.coeff.iter().map(|h| h.d[1]).collect(),
            self.coeff.iter().map(|h| h.off_re).collect(),
            self.coeff.iter().map(|h| h.off_im).collect(),
        ];
        let mut worst: f64 = 0.0;
        for chart in m.charts.iter() {
            // skip atlas boundary ring where one-sided clamping degrades stencils
            let interior = |local: usize| {
                if chart.periodic {
                    return true;
                }
                (0..chart.shape.len()).all(|a| {
                    let i = (local / chart.strides[a]) % chart.shape[a];
                    i >= 2 && i + 2 < chart.shape[a]
                })
            };
            let d1 = |f: &Vec<f64>, local: usize, axis: usize| -> f64 {
                let p = f[chart.offset + chart.shift(local, axis, 1)];
                let mm = f[chart.offset + chart.shift(local, axis, -1)];
                (p - mm) / (2.0 * chart.step[axis])
            };
            for local in 0..chart.len {
                if !interior(local) || m.pou[chart.offset + local] < 1e-9 {
                    continue;
                }
                // d(z_1) of h_{2 kbar} vs d(z_2) of h_{1 kbar}, both kbar.
                // In real terms: 8 scalar identities; evaluate the complex
                // combination directly.
                let dz = |f: &Vec<f64>, local: usize, j: usize| -> Complex64 {
                    // d/dz_j = 1/2 (d/dx_j - i d/dy_j) in chart coordinates
                    Complex64::new(d1(f, local, 2 * j), 0.0) * 0.5
                        - Complex64::new(0.0, d1(f, local, 2 * j + 1)) * 0.5
                };
                // h_{1 1bar} = comps0, h_{2 2bar} = comps1,
                // h_{1 2bar} = off = re + i im, h_{2 1bar} = conj(off).
                let h11 = &comps[0];
                let h22 = &comps[1];
                let off_re = &comps[2];
                let off_im = &comps[3];
                let d2_h11 = dz(h11, local, 1);
                let d1_h21 = dz(off_re, local, 0) - Complex64::i() * dz(off_im, local, 0);
                let r1 = (d2_h11 - d1_h21).norm();
                let d1_h22 = dz(h22, local, 0);
                let d2_h12 = dz(off_re, local, 1) + Complex64::i() * dz(off_im, local, 1);
                let r2 = (d1_h22 - d2_h12).norm();
                worst = worst.max(r1).max(r2);
            }
        }
        worst
    }
}

/// Total volume with per-cell weights.
#[derive(Clone, Debug, Serialize)]
pub struct VolumeReport {
    pub total: f64,
    #[serde(skip)]
    pub weights: Vec<f64>,
}

/// V = integral of det(omega-matrix) x cell measure. Strictly positive for
/// big forms; negative determinants beyond tolerance are rejected.
pub fn volume(form: &ReferenceForm) -> Result<VolumeReport> {
    let m = &form.manifold;
    let norm = m.form_norm();
    let mut weights = Vec::with_capacity(m.total_points());
    let mut total = 0.0;
    for g in 0..m.total_points() {
        let d = form.coeff[g].det();
        if d < -TOL_PSD {
            return Err(Error::InvalidInput(format!(
                "invalid form '{}': negative determinant {d:.3e} at point {g}",
                form.label
            )));
        }
        let w = d.max(0.0) * norm * m.cell_weight(g);
        weights.push(w);
        total += w;
    }
    Ok(VolumeReport { total, weights })
}

/// Agreement of a Fubini-Study-type form across chart transitions: evaluates
/// the form in chart `cj` at the image of sample points of chart `ci` and
/// compares with the Jacobian pullback. Returns the worst absolute deviation.
pub fn fs_transition_residual(form: &ReferenceForm, samples: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let m = &form.manifold;
    assert_eq!(m.kind, ManifoldKind::ProjectiveAtlas);
    assert_eq!(m.n, 1, "transition check implemented for P^1");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        // sample z in chart 0 annulus where both charts are regular
        let r = 0.5 + rng.gen::<f64>();
        let th = rng.gen::<f64>() * std::f64::consts::TAU;
        let z = Complex64::from_polar(r, th);
        let w = 1.0 / z;
        let h0 = fs_matrix(1, &[z]).d[0];
        let h1 = fs_matrix(1, &[w]).d[0];
        // pullback under z = 1/w: |dz/dw|^2 = 1/|w|^4
        let pulled = h0 / w.norm_sqr().powi(2);
        worst = worst.max((pulled - h1).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_construction_and_volume() {
        let m = Arc::new(square_torus(1, 1.0, 64).unwrap());
        assert_eq!(m.total_points(), 64 * 64);
        let omega = ReferenceForm::constant(&m, Herm::identity(1), "flat").unwrap();
        let v = volume(&omega).unwrap();
        assert!((v.total - 1.0).abs() < 1e-12);
        assert!((v.total - v.weights.iter().sum::<f64>()).abs() <= 1e-12 * v.total);
    }

    #[test]
    fn product_torus_has_fibration() {
        let m = square_torus(2, 1.0, 24).unwrap();
        assert_eq!(m.kind, ManifoldKind::ProductFibration);
        let f = m.fibration.as_ref().unwrap();
        assert_eq!(f.base_axes, vec![1]);
        assert_eq!(f.fiber_axes, vec![0]);
    }

    #[test]
    fn degenerate_period_matrix_rejected() {
        let period = vec![1.0, 0.0, 2.0, 0.0]; // det 0
        assert!(build_torus(1, &period, 64).is_err());
    }

    #[test]
    fn resolution_floor_enforced() {
        assert!(square_torus(1, 1.0, 7).is_err());
        assert!(fubini_study_atlas(1, 8).is_err());
    }

    #[test]
    fn fs_matrix_at_origin_is_half_identity() {
        let h = fs_matrix(1, &[Complex64::new(0.0, 0.0)]);
        assert!((h.d[0] - 0.5).abs() < 1e-15);
        let h2 = fs_matrix(2, &[Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert!((h2.d[0] - 0.5).abs() < 1e-15 && (h2.d[1] - 0.5).abs() < 1e-15);
        assert_eq!(h2.off_re, 0.0);
    }

    #[test]
    fn fs_transitions_consistent() {
        let (_, form) = fubini_study_atlas(1, 32).unwrap();
        assert!(fs_transition_residual(&form, 200, 7) < 1e-10);
    }

    #[test]
    fn p1_volume_is_degree() {
        // partition-of-unity quadrature converges superalgebraically
        let (_, form) = fubini_study_atlas(1, 128).unwrap();
        let v = volume(&form).unwrap();
        assert!((v.total - 1.0).abs() < 1e-5, "V(128) = {}", v.total);
        let (_, form) = fubini_study_atlas(1, 256).unwrap();
        let v = volume(&form).unwrap();
        assert!((v.total - 1.0).abs() < 1e-7, "V(256) = {}", v.total);
    }

    #[test]
    fn p2_volume_is_degree() {
        let (_, form) = fubini_study_atlas(2, 48).unwrap();
        let v = volume(&form).unwrap();
        assert!((v.total - 1.0).abs() < 5e-4, "V = {}", v.total);
    }

    #[test]
    fn hessian_of_quadratic_is_identity() {
        // |z|^2 on a torus chart patch: exact quadratic, Hessian = identity
        let m = Arc::new(square_torus(1, 1.0, 64).unwrap());
        let f: Vec<f64> = (0..m.total_points())
            .map(|g| {
                let z = m.ambient_coords(g);
                // keep away from the periodic seam
                (z[0] - 0.5) * (z[0] - 0.5) + (z[1] - 0.5) * (z[1] - 0.5)
            })
            .collect();
        // probe mid-grid point
        let g = m.charts[0].strides[0] * 32 + 32;
        let h = m.complex_hessian_at(&f, g);
        assert!((h.d[0] - 1.0).abs() < 1e-10, "got {}", h.d[0]);
    }

    #[test]
    fn hessian_chain_rule_scaled_lattice() {
        // torus of side 2: phi = sin(pi x) has phi_{zzbar} = -pi^2 sin(pi x)/4
        let m = Arc::new(square_torus(1, 2.0, 128).unwrap());
        let f: Vec<f64> = (0..m.total_points())
            .map(|g| {
                let z = m.ambient_coords(g);
                (std::f64::consts::PI * z[0]).sin()
            })
            .collect();
        let g = m.charts[0].strides[0] * 32 + 40;
        let z = m.ambient_coords(g);
        let expect = -std::f64::consts::PI.powi(2) * (std::f64::consts::PI * z[0]).sin() / 4.0;
        let h = m.complex_hessian_at(&f, g);
        assert!((h.d[0] - expect).abs() < 2e-3, "{} vs {}", h.d[0], expect);
    }

    #[test]
    fn volume_of_collapsing_family_is_binomial() {
        // omega_t = f* omega_Z + t omega_X on the product 2-torus
        let m = Arc::new(square_torus(2, 1.0, 16).unwrap());
        for &t in &[0.3, 0.1, 0.05] {
            let omega_t =
                ReferenceForm::constant(&m, Herm::diag(2, t, 1.0 + t), "omega_t").unwrap();
            let v = volume(&omega_t).unwrap().total;
            // V_t = 2 t int(omega_Z wedge omega_X) + t^2 int(omega_X^2),
            // mixed volume 1/2 and full volume 1 on the unit product torus
            let exact = 2.0 * t * 0.5 + t * t * 1.0;
            assert!((v - exact).abs() < 1e-12, "t={t}: {v} vs {exact}");
        }
    }
}
