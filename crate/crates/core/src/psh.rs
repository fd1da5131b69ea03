//! Quasi-psh function fields: dd^c, normalized Monge-Ampère measures, Lelong
//! numbers, Perron envelopes and the two capacities.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Herm, ManifoldKind, ModelManifold, ReferenceForm, ScalarField};

pub const TOL_PSH: f64 = 1e-8;
pub const TOL_MASS: f64 = 1e-6;

/// Envelope relaxation controls (see module design notes).
pub const RELAX_OMEGA: f64 = 1.5;
pub const RELAX_TOL: f64 = 1e-9;
pub const RELAX_MAX_SWEEPS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Normalization {
    SupZero,
    MeanZero,
    None,
}

/// Explicit local model tag for a log-pole: phi ~ log_coeff * log|z - a|.
#[derive(Clone, Copy, Debug)]
pub struct SingularPoint {
    pub index: usize,
    pub log_coeff: f64,
}

/// omega-psh function on a model-manifold grid. Values may be -inf at
/// tagged singular points; all stencils and quadratures skip cells whose
/// stencil would touch a singular value.
#[derive(Clone, Debug)]
pub struct QuasiPshFunction {
    pub values: ScalarField,
    pub reference: Arc<ReferenceForm>,
    pub normalization: Normalization,
    pub singular: Vec<SingularPoint>,
    blocked: Vec<bool>,
}

impl QuasiPshFunction {
    pub fn new(
        mut values: ScalarField,
        reference: Arc<ReferenceForm>,
        normalization: Normalization,
        singular: Vec<SingularPoint>,
    ) -> Result<Self> {
        let m = values.manifold.clone();
        for s in &singular {
            values.data[s.index] = f64::NEG_INFINITY;
        }
        let blocked = blocked_mask(&m, &singular);
        let f = QuasiPshFunction { values, reference, normalization, singular, blocked };
        f.check_psh(TOL_PSH)?;
        Ok(f)
    }

    /// Construct without the psh check (for test generators and envelopes).
    pub fn new_unchecked(
        values: ScalarField,
        reference: Arc<ReferenceForm>,
        normalization: Normalization,
        singular: Vec<SingularPoint>,
    ) -> Self {
        let m = values.manifold.clone();
        let blocked = blocked_mask(&m, &singular);
        QuasiPshFunction { values, reference, normalization, singular, blocked }
    }

    pub fn manifold(&self) -> &Arc<ModelManifold> {
        &self.values.manifold
    }

    pub fn is_blocked(&self, g: usize) -> bool {
        self.blocked[g]
    }

    pub fn check_psh(&self, tol: f64) -> Result<()> {
        let m = self.manifold();
        for g in 0..m.total_points() {
            if self.blocked[g] {
                continue;
            }
            let h = m.complex_hessian_at(&self.values.data, g);
            let eig = self.reference.coeff[g].add(&h).min_eig();
            if eig < -tol {
                return Err(Error::NotPsh { index: g, min_eig: eig, tol });
            }
        }
        if self.normalization == Normalization::SupZero {
            let sup = self.values.sup();
            if sup.abs() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "sup-zero tagged function has sup {sup:.3e}"
                )));
            }
        }
        Ok(())
    }

    pub fn sup(&self) -> f64 {
        self.values.sup()
    }

    /// (1/V) int phi omega^n; singular cells are excluded (they carry the
    /// integrable log mass which the grid cannot resolve pointwise).
    pub fn mean(&self) -> f64 {
        let m = self.manifold();
        let norm = m.form_norm();
        let mut s = 0.0;
        let mut vol = 0.0;
        for g in 0..m.total_points() {
            let w = self.reference.coeff[g].det() * norm * m.cell_weight(g);
            vol += w;
            let v = self.values.data[g];
            if v.is_finite() {
                s += v * w;
            }
        }
        s / vol
    }

    pub fn sup_normalized(mut self) -> Self {
        let sup = self.sup();
        for v in self.values.data.iter_mut() {
            if v.is_finite() {
                *v -= sup;
            }
        }
        self.normalization = Normalization::SupZero;
        self
    }
}

fn blocked_mask(m: &Arc<ModelManifold>, singular: &[SingularPoint]) -> Vec<bool> {
    let mut blocked = vec![false; m.total_points()];
    for s in singular {
        blocked[s.index] = true;
        let (ci, local) = m.chart_of(s.index);
        let chart = &m.charts[ci];
        let k = m.real_dim();
        // Chebyshev-1 neighborhood: every point whose stencil reads s.index.
        let mut frontier = vec![local];
        for axis in 0..k {
            let mut next = Vec::with_capacity(frontier.len() * 3);
            for &l in &frontier {
                next.push(l);
                next.push(chart.shift(l, axis, 1));
                next.push(chart.shift(l, axis, -1));
            }
            frontier = next;
        }
        for l in frontier {
            blocked[chart.offset + l] = true;
        }
    }
    blocked
}

/// Centered-difference mixed complex Hessian field; singular-adjacent points
/// are excluded (flag false).
pub fn ddc(phi: &QuasiPshFunction) -> (Vec<Herm>, Vec<bool>) {
    let m = phi.manifold();
    let mut out = Vec::with_capacity(m.total_points());
    let mut valid = Vec::with_capacity(m.total_points());
    for g in 0..m.total_points() {
        if phi.blocked[g] {
            out.push(Herm::zero(m.n));
            valid.push(false);
        } else {
            out.push(m.complex_hessian_at(&phi.values.data, g));
            valid.push(true);
        }
    }
    (out, valid)
}

/// Non-negative density with total mass; masses are per grid cell.
#[derive(Clone, Debug)]
pub struct PositiveMeasure {
    pub manifold: Arc<ModelManifold>,
    pub cell_mass: Vec<f64>,
    pub total: f64,
    pub absolutely_continuous: bool,
}

impl PositiveMeasure {
    pub fn mass_on(&self, mask: &Mask) -> f64 {
        self.cell_mass
            .iter()
            .zip(&mask.bits)
            .filter(|(_, &b)| b)
            .map(|(m, _)| m)
            .sum()
    }
}

/// MA(phi) = V^{-1} (omega + dd^c phi)^n as a cell measure; total mass is 1
/// up to the reported defect for bounded inputs.
pub fn ma_measure(omega: &ReferenceForm, phi: &QuasiPshFunction) -> Result<PositiveMeasure> {
    let m = omega.manifold.clone();
    let vol = crate::grid::volume(omega)?;
    if vol.total <= 0.0 {
        return Err(Error::InvalidInput("form is not big: V <= 0".into()));
    }
    let norm = m.form_norm();
    let mut cell_mass = vec![0.0; m.total_points()];
    let mut total = 0.0;
    for g in 0..m.total_points() {
        if phi.blocked[g] {
            continue;
        }
        let a = omega.coeff[g].add(&m.complex_hessian_at(&phi.values.data, g));
        let eig = a.min_eig();
        if eig < -TOL_PSH {
            return Err(Error::NotPsh { index: g, min_eig: eig, tol: TOL_PSH });
        }
        let d = a.det().max(0.0);
        let mass = d * norm * m.cell_weight(g) / vol.total;
        cell_mass[g] = mass;
        total += mass;
    }
    Ok(PositiveMeasure {
        manifold: m,
        cell_mass,
        total,
        absolutely_continuous: phi.singular.is_empty(),
    })
}

/// Compact-set mask on the grid.
#[derive(Clone, Debug)]
pub struct Mask {
    pub manifold: Arc<ModelManifold>,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn empty(m: &Arc<ModelManifold>) -> Self {
        Mask { manifold: m.clone(), bits: vec![false; m.total_points()] }
    }

    pub fn full(m: &Arc<ModelManifold>) -> Self {
        Mask { manifold: m.clone(), bits: vec![true; m.total_points()] }
    }

    pub fn from_fn<F: Fn(&[f64]) -> bool>(m: &Arc<ModelManifold>, f: F) -> Self {
        Mask { manifold: m.clone(), bits: (0..m.total_points()).map(|g| f(&m.ambient_coords(g))).collect() }
    }

    /// Strict sublevel set { phi < -s }; ties broken toward exclusion.
    pub fn sublevel(phi: &QuasiPshFunction, s: f64) -> Self {
        Mask {
            manifold: phi.manifold().clone(),
            bits: phi.values.data.iter().map(|&v| v < -s).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

/// Discrete Perron envelope result.
#[derive(Clone, Debug)]
pub struct Envelope {
    pub values: ScalarField,
    pub sweeps: usize,
    pub converged: bool,
    pub complementarity_residual: f64,
    /// Empty obstacle set: the envelope is +inf (pluripolar convention).
    pub infinite: bool,
}

fn center_coeff_is_scalar(k: &Herm) -> Option<f64> {
    if k.n == 1 {
        Some(k.d[0])
    } else if (k.d[0] - k.d[1]).abs() < 1e-13 * k.d[0].abs() && k.off_re.abs() < 1e-13 && k.off_im.abs() < 1e-13 {
        Some(k.d[0])
    } else {
        None
    }
}

/// Largest grid function u with omega + dd^c u >= -tol_psh and u <= obstacle
/// wherever the mask is set, by projected over-relaxation from above.
fn perron_envelope(omega: &ReferenceForm, mask: &Mask, obstacle: f64, start: f64) -> Result<Envelope> {
    let m = omega.manifold.clone();
    if mask.count() == 0 {
        return Ok(Envelope {
            values: ScalarField { manifold: m, data: vec![f64::INFINITY; mask.bits.len()] },
            sweeps: 0,
            converged: true,
            complementarity_residual: 0.0,
            infinite: true,
        });
    }
    let total = m.total_points();
    let mut u = vec![start; total];
    for g in 0..total {
        if mask.bits[g] {
            u[g] = obstacle;
        }
    }
    let centers: Vec<Herm> = (0..m.charts.len()).map(|c| m.hessian_center_coeff(c)).collect();
    let scalar_centers: Vec<Option<f64>> = centers.iter().map(center_coeff_is_scalar).collect();

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < RELAX_MAX_SWEEPS {
        sweeps += 1;
        let mut max_update: f64 = 0.0;
        for g in 0..total {
            let (ci, _local) = m.chart_of(g);
            let hess = m.complex_hessian_at(&u, g);
            let a = omega.coeff[g].add(&hess);
            // a(v) = a + (u[g] - v) * K ; find v with min_eig(a(v)) = -tol
            let kc = &centers[ci];
            let cap = match scalar_centers[ci] {
                Some(k) => u[g] + (a.min_eig() + TOL_PSH) / k,
                None => {
                    // bisection on v
                    let mut lo = u[g] - 10.0;
                    let mut hi = u[g] + 10.0;
                    let eval = |v: f64| a.add(&kc.scale(u[g] - v)).min_eig();
                    while eval(lo) < -TOL_PSH {
                        lo -= 10.0;
                    }
                    while eval(hi) > -TOL_PSH {
                        hi += 10.0;
                    }
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if eval(mid) > -TOL_PSH {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    0.5 * (lo + hi)
                }
            };
            let target = if mask.bits[g] { cap.min(obstacle) } else { cap };
            let old = u[g];
            let relaxed = old + RELAX_OMEGA * (target - old);
            let new = if mask.bits[g] { relaxed.min(obstacle) } else { relaxed };
            u[g] = new;
            max_update = max_update.max((new - old).abs());
        }
        if max_update < RELAX_TOL {
            converged = true;
            break;
        }
    }

    // Complementarity: at every point either the obstacle is active or the
    // psh cap is degenerate-active (within tolerance); also no psh violation.
    let mut comp: f64 = 0.0;
    for g in 0..total {
        let hess = m.complex_hessian_at(&u, g);
        let eig = omega.coeff[g].add(&hess).min_eig();
        let psh_viol = (-(eig + TOL_PSH)).max(0.0);
        let ob_slack = if mask.bits[g] { (obstacle - u[g]).abs() } else { f64::INFINITY };
        let degen_slack = eig.abs();
        comp = comp.max(psh_viol).max(ob_slack.min(degen_slack));
    }

    Ok(Envelope {
        values: ScalarField { manifold: m, data: u },
        sweeps,
        converged,
        complementarity_residual: comp,
        infinite: false,
    })
}

/// Global extremal function V_K: largest omega-psh u with u <= 0 on K.
pub fn extremal_function(mask: &Mask, omega: &ReferenceForm) -> Result<Envelope> {
    perron_envelope(omega, mask, 0.0, 20.0)
}

/// Relative extremal function: largest omega-psh u with u <= -1 on K, u <= 0.
pub fn relative_extremal(mask: &Mask, omega: &ReferenceForm) -> Result<Envelope> {
    let full = Mask::full(&omega.manifold);
    let m = omega.manifold.clone();
    if mask.count() == 0 {
        return Ok(Envelope {
            values: ScalarField { manifold: m, data: vec![0.0; mask.bits.len()] },
            sweeps: 0,
            converged: true,
            complementarity_residual: 0.0,
            infinite: false,
        });
    }
    // two obstacles: 0 everywhere, -1 on K; fold into a single sweep by
    // composing caps, reusing the single-obstacle engine on the tighter of
    // the two constraints at each point.
    let mut env = perron_envelope_two(omega, mask)?;
    env.values.data.iter_mut().for_each(|v| *v = v.min(0.0));
    let _ = full;
    Ok(env)
}

fn perron_envelope_two(omega: &ReferenceForm, inner: &Mask) -> Result<Envelope> {
    let m = omega.manifold.clone();
    let total = m.total_points();
    let mut u = vec![0.0; total];
    for g in 0..total {
        if inner.bits[g] {
            u[g] = -1.0;
        }
    }
    let centers: Vec<Herm> = (0..m.charts.len()).map(|c| m.hessian_center_coeff(c)).collect();
    let scalar_centers: Vec<Option<f64>> = centers.iter().map(center_coeff_is_scalar).collect();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < RELAX_MAX_SWEEPS {
        sweeps += 1;
        let mut max_update: f64 = 0.0;
        for g in 0..total {
            let (ci, _) = m.chart_of(g);
            let hess = m.complex_hessian_at(&u, g);
            let a = omega.coeff[g].add(&hess);
            let cap = match scalar_centers[ci] {
                Some(k) => u[g] + (a.min_eig() + TOL_PSH) / k,
                None => {
                    let kc = &centers[ci];
                    let mut lo = u[g] - 10.0;
                    let mut hi = u[g] + 10.0;
                    let eval = |v: f64| a.add(&kc.scale(u[g] - v)).min_eig();
                    while eval(hi) > -TOL_PSH {
                        hi += 10.0;
                    }
                    while eval(lo) < -TOL_PSH {
                        lo -= 10.0;
                    }
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if eval(mid) > -TOL_PSH {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    0.5 * (lo + hi)
                }
            };
            let ob = if inner.bits[g] { -1.0 } else { 0.0 };
            let target = cap.min(ob);
            let old = u[g];
            let new = (old + RELAX_OMEGA * (target - old)).min(ob);
            u[g] = new;
            max_update = max_update.max((new - old).abs());
        }
        if max_update < RELAX_TOL {
            converged = true;
            break;
        }
    }
    let mut comp: f64 = 0.0;
    for g in 0..total {
        let hess = m.complex_hessian_at(&u, g);
        let eig = omega.coeff[g].add(&hess).min_eig();
        comp = comp.max((-(eig + TOL_PSH)).max(0.0));
    }
    Ok(Envelope {
        values: ScalarField { manifold: m, data: u },
        sweeps,
        converged,
        complementarity_residual: comp,
        infinite: false,
    })
}

/// Capacity report: Monge-Ampère and Alexander-Taylor capacities of a mask.
#[derive(Clone, Debug, Serialize)]
pub struct CapacityReport {
    pub set_id: String,
    pub cap: f64,
    pub t_cap: f64,
    pub sup_extremal: f64,
    /// MA mass of the relative extremal that escaped the set (concentration
    /// check).
    pub mass_off_set: f64,
    pub pluripolar: bool,
}

/// Monge-Ampère capacity (via the relative extremal function) and the
/// Alexander-Taylor capacity (via the global extremal function).
pub fn capacities(mask: &Mask, omega: &ReferenceForm, set_id: &str) -> Result<CapacityReport> {
    if mask.count() == 0 {
        return Ok(CapacityReport {
            set_id: set_id.into(),
            cap: 0.0,
            t_cap: 0.0,
            sup_extremal: f64::INFINITY,
            mass_off_set: 0.0,
            pluripolar: true,
        });
    }
    let m = omega.manifold.clone();
    let global = extremal_function(mask, omega)?;
    let sup_extremal = global.values.sup();
    let t_cap = (-sup_extremal).exp();

    let rel = relative_extremal(mask, omega)?;
    let phi = QuasiPshFunction::new_unchecked(
        rel.values.clone(),
        Arc::new(omega.clone()),
        Normalization::None,
        vec![],
    );
    let ma = ma_measure(omega, &phi)?;
    let cap: f64 = (0..m.total_points()).filter(|&g| mask.bits[g]).map(|g| ma.cell_mass[g]).sum();
    let mass_off: f64 = (0..m.total_points())
        .filter(|&g| !mask.bits[g] && rel.values.data[g] < -1e-6)
        .map(|g| ma.cell_mass[g])
        .sum();
    Ok(CapacityReport {
        set_id: set_id.into(),
        cap: cap.min(1.0),
        t_cap,
        sup_extremal,
        mass_off_set: mass_off,
        pluripolar: false,
    })
}

/// Sublevel capacity-vs-MA comparison (capacity domination inequality):
/// delta^n Cap({phi < -s - delta}) <= MA(phi)({phi < -s}) + tol.
#[derive(Clone, Debug, Serialize)]
pub struct CapMaReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn capma_check(phi: &QuasiPshFunction, s: f64, delta: f64, tol: f64) -> Result<CapMaReport> {
    if !(s > 0.0) || !(0.0 < delta && delta < 1.0) {
        return Err(Error::InvalidInput("require s > 0 and 0 < delta < 1".into()));
    }
    let omega = phi.reference.as_ref();
    let deep = Mask::sublevel(phi, s + delta);
    let shallow = Mask::sublevel(phi, s);
    let lhs = if deep.count() == 0 {
        0.0
    } else {
        let n = phi.manifold().n as i32;
        delta.powi(n) * capacities(&deep, omega, "capma")?.cap
    };
    let rhs = if shallow.count() == 0 {
        0.0
    } else {
        ma_measure(omega, phi)?.mass_on(&shallow)
    };
    Ok(CapMaReport { lhs, rhs, holds: lhs <= rhs + tol })
}

/// Lelong number at a grid point, estimated on the dyadic radius ladder
/// r_k = 2^{-k}, k = 2..6 (clamped to stay above the stencil scale), with
/// Richardson extrapolation. Points that carry no singular tag within the
/// innermost radius are bounded near x, so the shrinking-ball limit is zero;
/// the measured ladder is still available via [`lelong_ladder`].
pub fn lelong_number(phi: &QuasiPshFunction, x: usize) -> Result<f64> {
    match nearest_tag(phi, x, 0.26) {
        None => Ok(0.0),
        Some(_) => {
            let ladder = lelong_ladder(phi, x)?;
            if ladder.len() >= 2 {
                Ok(crate::numerics::richardson(&ladder, 2.0, 2.0).max(0.0))
            } else {
                Ok(ladder[0].max(0.0))
            }
        }
    }
}

fn nearest_tag(phi: &QuasiPshFunction, x: usize, radius: f64) -> Option<usize> {
    let m = phi.manifold();
    phi.singular
        .iter()
        .map(|s| s.index)
        .find(|&s| {
            let d = m.displacement(x, s);
            d.iter().map(|v| v * v).sum::<f64>().sqrt() <= radius
        })
}

/// Per-rung shrinking-ball mass ratios around x (complex dimension one:
/// exact circle-mean slopes; the dd^c mass of the annulus divided by the
/// log-pole normalization).
pub fn lelong_ladder(phi: &QuasiPshFunction, x: usize) -> Result<Vec<f64>> {
    let m = phi.manifold().clone();
    if m.n != 1 {
        return Err(Error::Unsupported(
            "lelong radius ladder implemented on complex-dimension-one models".into(),
        ));
    }
    if m.kind == ManifoldKind::ProjectiveAtlas {
        return Err(Error::Unsupported("lelong ladder expects a torus model".into()));
    }
    let h = lattice_scale(&m);
    let radii: Vec<f64> = (2..=6)
        .map(|k| 2f64.powi(-k))
        .filter(|&r| r >= 3.0 * h)
        .collect();
    if radii.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "resolution too coarse for the radius ladder (h = {h:.3e})"
        )));
    }
    let means: Vec<f64> = radii.iter().map(|&r| circle_mean(phi, x, r)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for k in 0..means.len() - 1 {
        let slope = (means[k] - means[k + 1]) / (radii[k].ln() - radii[k + 1].ln());
        out.push(slope);
    }
    // ladder ordered toward r -> 0
    Ok(out)
}

fn lattice_scale(m: &ModelManifold) -> f64 {
    // largest ambient length of a single grid step (controls the stencil
    // footprint the circle samples must clear)
    let chart = &m.charts[0];
    let k = m.real_dim();
    let mut worst: f64 = 0.0;
    for a in 0..k {
        let g1 = chart.shift(0, a, 1) + chart.offset;
        let d = m.displacement(chart.offset, g1);
        worst = worst.max(d.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    worst
}

/// Mean of phi over the ambient circle of radius r around x (64-point
/// trapezoid, bilinear interpolation on the unit-cell grid).
fn circle_mean(phi: &QuasiPshFunction, x: usize, r: f64) -> Result<f64> {
    let m = phi.manifold();
    let chart = &m.charts[0];
    let ax = m.ambient_coords(x);
    let samples = 64;
    let mut acc = 0.0;
    for i in 0..samples {
        let th = std::f64::consts::TAU * (i as f64) / samples as f64;
        let p = [ax[0] + r * th.cos(), ax[1] + r * th.sin()];
        let u = m.ambient_to_cell(&p);
        let v = bilinear_periodic(chart, &phi.values.data, &u)?;
        acc += v;
    }
    Ok(acc / samples as f64)
}

fn bilinear_periodic(chart: &crate::grid::Chart, data: &[f64], u: &[f64]) -> Result<f64> {
    let fx = (u[0] - chart.origin[0]) / chart.step[0];
    let fy = (u[1] - chart.origin[1]) / chart.step[1];
    let m0 = chart.shape[0] as isize;
    let m1 = chart.shape[1] as isize;
    let i0 = fx.floor() as isize;
    let j0 = fy.floor() as isize;
    let tx = fx - i0 as f64;
    let ty = fy - j0 as f64;
    let wrap = |i: isize, m: isize| ((i % m) + m) % m;
    let idx = |i: isize, j: isize| -> usize {
        (wrap(i, m0) as usize) * chart.strides[0] + (wrap(j, m1) as usize) * chart.strides[1]
    };
    let v00 = data[chart.offset + idx(i0, j0)];
    let v10 = data[chart.offset + idx(i0 + 1, j0)];
    let v01 = data[chart.offset + idx(i0, j0 + 1)];
    let v11 = data[chart.offset + idx(i0 + 1, j0 + 1)];
    let v = v00 * (1.0 - tx) * (1.0 - ty)
        + v10 * tx * (1.0 - ty)
        + v01 * (1.0 - tx) * ty
        + v11 * tx * ty;
    if !v.is_finite() {
        return Err(Error::InvalidInput("circle sample touched a singular cell".into()));
    }
    Ok(v)
}
