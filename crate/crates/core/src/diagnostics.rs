//! Pointwise and global diagnostics of maps between disks.
//!
//! For a map `h` into `(D, σ²|dw|²)` with source the hyperbolic disk,
//! `H = σ²(h)|h_z|²/ρ²` and `L = σ²(h)|h_z̄|²/ρ²`; `J = H - L` is the
//! Jacobian and `μ = h_z̄ / h_z` the Beltrami coefficient.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circle::{sup_distance, CircleMap, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::geodesic::GraphMetric;
use crate::grid::{hyperbolic_density, hyperbolic_distance, hyperbolic_laplacian, ComplexField, ScalarField};
use crate::harmonic::{complex_derivatives, DiskMap};
use crate::metric::MetricField;

/// Threshold, relative to `max (H + L)`, below which `h_z` counts as
/// vanishing.
pub const EPS_H: f64 = 1e-12;
/// Threshold for the Bochner evaluation masks, relative to `max (H + L)`.
pub const BOCHNER_MASK: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct HopfFields {
    pub h: ScalarField,
    pub l: ScalarField,
    pub j: ScalarField,
    /// `h_z̄ / h_z`; zero where undefined.
    pub mu: ComplexField,
    /// Nodes where `H > EPS_H · max (H + L)`, on which `mu`, `w` and `ell` are defined.
    pub mask: Vec<bool>,
    /// `½ log H`; zero where undefined.
    pub w: ScalarField,
    /// `-log |μ|²`; `+∞` where `μ = 0`, zero where undefined.
    pub ell: ScalarField,
}

impl HopfFields {
    /// Smallest Jacobian over all nodes.
    pub fn jacobian_inf(&self) -> f64 {
        self.j.values().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Node of the smallest Jacobian.
    pub fn jacobian_argmin(&self) -> usize {
        let v = self.j.values();
        (0..v.len()).fold(0, |best, n| if v[n] < v[best] { n } else { best })
    }

    pub fn sup_mu(&self) -> f64 {
        self.masked(self.mu.values().iter().map(|m| m.norm()))
            .fold(0.0, f64::max)
    }

    /// `sup (1 + |μ|)/(1 - |μ|)` on the mask; infinite once `|μ| ≥ 1`.
    pub fn qc_distortion(&self) -> f64 {
        let m = self.sup_mu();
        if m < 1.0 {
            (1.0 + m) / (1.0 - m)
        } else {
            f64::INFINITY
        }
    }

    /// `sup (H + L)/J` on the mask; infinite unless `J > 0` there.
    pub fn energy_jacobian_ratio(&self) -> f64 {
        let mut sup: f64 = 1.0;
        for n in 0..self.mask.len() {
            if !self.mask[n] {
                continue;
            }
            let j = self.j.get(n);
            if j <= 0.0 {
                return f64::INFINITY;
            }
            sup = sup.max((self.h.get(n) + self.l.get(n)) / j);
        }
        sup
    }

    fn masked<'a, I: Iterator<Item = f64> + 'a>(&'a self, it: I) -> impl Iterator<Item = f64> + 'a {
        it.zip(&self.mask).filter(|(_, &m)| m).map(|(v, _)| v)
    }
}

/// Conformal factor `σ² = e^{2u} ρ²` of the target at `w`, with `u`
/// interpolated on the target grid.
fn target_density(target: &MetricField, w: Complex64) -> f64 {
    let u = target.u();
    (2.0 * u.grid().locate(w).value(u)).exp() * hyperbolic_density(w)
}

pub fn hopf_fields(h: &DiskMap) -> HopfFields {
    let g = h.grid().clone();
    let (hz, hzb) = complex_derivatives(h);
    let scale: Vec<f64> = (0..g.node_count())
        .into_par_iter()
        .map(|n| target_density(h.target(), h.values().get(n)) / hyperbolic_density(g.z(n)))
        .collect();
    let hv: Vec<f64> = (0..g.node_count()).map(|n| scale[n] * hz.get(n).norm_sqr()).collect();
    let lv: Vec<f64> = (0..g.node_count()).map(|n| scale[n] * hzb.get(n).norm_sqr()).collect();
    let jv: Vec<f64> = hv.iter().zip(&lv).map(|(a, b)| a - b).collect();
    let scale = hv.iter().zip(&lv).map(|(a, b)| a + b).fold(0.0, f64::max);
    let mask: Vec<bool> = hv.iter().map(|&x| x > EPS_H * scale).collect();
    let zero = Complex64::new(0.0, 0.0);
    let mu: Vec<Complex64> =
        (0..g.node_count()).map(|n| if mask[n] { hzb.get(n) / hz.get(n) } else { zero }).collect();
    let w: Vec<f64> = (0..g.node_count()).map(|n| if mask[n] { 0.5 * hv[n].ln() } else { 0.0 }).collect();
    let ell: Vec<f64> = (0..g.node_count())
        .map(|n| if mask[n] { -mu[n].norm_sqr().ln() } else { 0.0 })
        .collect();
    HopfFields {
        h: ScalarField::from_vec_unchecked(g.clone(), hv),
        l: ScalarField::from_vec_unchecked(g.clone(), lv),
        j: ScalarField::from_vec_unchecked(g.clone(), jv),
        mu: ComplexField::from_vec_unchecked(g.clone(), mu),
        mask,
        w: ScalarField::from_vec_unchecked(g.clone(), w),
        ell: ScalarField::from_vec_unchecked(g, ell),
    }
}

/// Curvature of the target, `-e^{-2u}(1 + Δ_hyp u)`, using the exact
/// curvature of the hyperbolic part. The rim ring copies its neighbour.
pub fn target_curvature(target: &MetricField) -> ScalarField {
    let u = target.u();
    let g = u.grid().clone();
    let lap = hyperbolic_laplacian(u);
    let (nr, nt) = (g.n_r(), g.n_theta());
    let k: Vec<f64> = (0..g.node_count())
        .map(|n| {
            let m = if g.is_rim(n) { n - nt } else { n };
            -(-2.0 * u.get(m)).exp() * (1.0 + lap.get(m))
        })
        .collect();
    debug_assert_eq!(k.len(), nr * nt);
    ScalarField::from_vec_unchecked(g, k)
}

/// Residuals of `½Δ log H = (-K∘h) J - 1` and `½Δ log L = (K∘h) J - 1`.
#[derive(Debug, Clone)]
pub struct BochnerResiduals {
    pub r_h: ScalarField,
    pub r_l: ScalarField,
    /// Interior nodes whose stencil lies where `H > BOCHNER_MASK · max (H + L)`.
    pub h_mask: Vec<bool>,
    pub l_mask: Vec<bool>,
}

impl BochnerResiduals {
    pub fn sup_h(&self) -> f64 {
        sup_masked(&self.r_h, &self.h_mask)
    }

    pub fn sup_l(&self) -> f64 {
        sup_masked(&self.r_l, &self.l_mask)
    }
}

fn sup_masked(f: &ScalarField, mask: &[bool]) -> f64 {
    f.values().iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| v.abs()).fold(0.0, f64::max)
}

/// Nodes that are interior and whose Laplacian stencil only touches points
/// where `v > BOCHNER_MASK · scale`.
fn stencil_mask(v: &ScalarField, scale: f64) -> Vec<bool> {
    let g = v.grid();
    let pts = v.to_points();
    let ok: Vec<bool> = pts.iter().map(|&x| scale > 0.0 && x > BOCHNER_MASK * scale).collect();
    (0..g.node_count())
        .map(|n| {
            let p = g.point_of_node(n);
            !g.is_rim(n) && ok[p] && g.lap_stencil().row(p).all(|(q, _)| ok[q])
        })
        .collect()
}

pub fn bochner_residuals(h: &DiskMap, fields: &HopfFields) -> Result<BochnerResiduals> {
    let g = h.grid().clone();
    let scale = fields.h.values().iter().zip(fields.l.values()).map(|(a, b)| a + b).fold(0.0, f64::max);
    let h_mask = stencil_mask(&fields.h, scale);
    let l_mask = stencil_mask(&fields.l, scale);
    if !h_mask.iter().any(|&m| m) {
        return Err(Error::InvalidArgument("Bochner mask is empty".into()));
    }
    let k = target_curvature(h.target());
    let k_at: Vec<f64> = (0..g.node_count()).map(|n| k.grid().locate(h.values().get(n)).value(&k)).collect();
    let half_lap_log = |f: &ScalarField| hyperbolic_laplacian(&f.map(|x| x.max(f64::MIN_POSITIVE).ln())).map(|x| 0.5 * x);
    let lh = half_lap_log(&fields.h);
    let ll = half_lap_log(&fields.l);
    let r_h: Vec<f64> = (0..g.node_count())
        .map(|n| if h_mask[n] { lh.get(n) - (-k_at[n] * fields.j.get(n) - 1.0) } else { 0.0 })
        .collect();
    let r_l: Vec<f64> = (0..g.node_count())
        .map(|n| if l_mask[n] { ll.get(n) - (k_at[n] * fields.j.get(n) - 1.0) } else { 0.0 })
        .collect();
    Ok(BochnerResiduals {
        r_h: ScalarField::from_vec_unchecked(g.clone(), r_h),
        r_l: ScalarField::from_vec_unchecked(g, r_l),
        h_mask,
        l_mask,
    })
}

/// Outcome of comparing `e^{2w}` with `b^{-2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WBound {
    /// `margin = min e^{2w} - b^{-2}` over the mask.
    Checked { margin: f64, ok: bool },
    /// The Jacobian is not positive at `node`, so the bound does not apply.
    Skipped { node: usize },
}

pub fn w_bound_check(fields: &HopfFields, b: f64, tol: f64) -> WBound {
    if let Some(node) = (0..fields.mask.len()).find(|&n| fields.mask[n] && fields.j.get(n) <= 0.0) {
        return WBound::Skipped { node };
    }
    let min = fields.masked(fields.h.values().iter().copied()).fold(f64::INFINITY, f64::min);
    let margin = min - 1.0 / (b * b);
    WBound::Checked { margin, ok: margin >= -tol }
}

/// [`w_bound_check`] restricted to nodes with `|z| ≤ max_radius`.
pub fn w_bound_check_within(fields: &HopfFields, b: f64, tol: f64, max_radius: f64) -> WBound {
    let g = fields.h.grid();
    let inside: Vec<bool> = (0..g.node_count()).map(|n| fields.mask[n] && g.z(n).norm() <= max_radius).collect();
    let restricted = HopfFields { mask: inside, ..fields.clone() };
    w_bound_check(&restricted, b, tol)
}

/// Result of fitting the quasi-isometry inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QiFit {
    /// Smallest `c ≥ 1` with `d/c - c ≤ d' ≤ c d + c` on every sampled pair.
    pub c: f64,
    pub pairs: usize,
}

/// Sampled pairs with their source and target distances.
pub fn sample_pair_distances(h: &DiskMap, n_pairs: usize, seed: u64) -> Vec<(f64, f64)> {
    let g = h.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_anchor: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let n = g.node_count();
    let mut drawn = 0;
    while drawn < n_pairs {
        let x = g.node_of_point(g.point_of_node(rng.gen_range(0..n)));
        let y = g.node_of_point(g.point_of_node(rng.gen_range(0..n)));
        if x != y {
            by_anchor.entry(x).or_default().push(y);
            drawn += 1;
        }
    }
    let source = GraphMetric::new(&MetricField::hyperbolic(g));
    let target = GraphMetric::new(h.target());
    let anchors: Vec<(usize, Vec<usize>)> = by_anchor.into_iter().collect();
    anchors
        .par_iter()
        .map(|(x, ys)| {
            let ds = source.distances_from(g.z(*x));
            let dt = target.distances_from(h.values().get(*x));
            ys.iter()
                .map(|&y| (source.distance_to(&ds, g.z(y)), target.distance_to(&dt, h.values().get(y))))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn satisfies(c: f64, pairs: &[(f64, f64)]) -> bool {
    pairs.iter().all(|&(d, dt)| d / c - c <= dt && dt <= c * d + c)
}

/// Bisection for the shared constant `c` over the given distance pairs.
pub fn fit_qi_constant(pairs: &[(f64, f64)]) -> f64 {
    if satisfies(1.0, pairs) {
        return 1.0;
    }
    let mut hi = 2.0;
    while !satisfies(hi, pairs) {
        hi *= 2.0;
    }
    let mut lo = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if satisfies(mid, pairs) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Quasi-isometry constant of `h` over `n_pairs` node pairs drawn with `seed`;
/// distances are graph geodesics in the source and target metrics. The value
/// is a lower bound for the constant of the map.
pub fn quasi_isometry_fit(h: &DiskMap, n_pairs: usize, seed: u64) -> QiFit {
    let pairs = sample_pair_distances(h, n_pairs, seed);
    QiFit { c: fit_qi_constant(&pairs), pairs: pairs.len() }
}

/// `(x|y)_base = ½ (d(x, base) + d(y, base) - d(x, y))` in the graph metric,
/// clamped at zero.
pub fn gromov_product(metric: &MetricField, x: Complex64, y: Complex64, base: Complex64) -> f64 {
    let graph = GraphMetric::new(metric);
    let from_base = graph.distances_from(base);
    let from_x = graph.distances_from(x);
    let dxb = graph.distance_to(&from_base, x);
    let dyb = graph.distance_to(&from_base, y);
    let dxy = graph.distance_to(&from_x, y);
    (0.5 * (dxb + dyb - dxy)).max(0.0)
}

/// `sup_z d_hyp(h1(z), h2(z))` over the nodes.
pub fn map_distance(h1: &ComplexField, h2: &ComplexField) -> Result<f64> {
    h1.grid().check_same(h2.grid())?;
    Ok(h1
        .values()
        .iter()
        .zip(h2.values())
        .map(|(&a, &b)| hyperbolic_distance(a, b))
        .fold(0.0, f64::max))
}

/// A trace whose lift fails to increase; the raw samples are kept.
#[derive(Debug, Clone)]
pub struct NonMonotoneTrace {
    pub samples: Vec<f64>,
    pub index: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("ring fraction must lie in (0.5, 1], got {0}")]
    InvalidFraction(f64),
    #[error("trace is not monotone at sample {}", .0.index)]
    NotMonotone(NonMonotoneTrace),
    #[error(transparent)]
    Other(#[from] Error),
}

/// Angular part of `h` on the circle of radius `fraction · r_max`, lifted
/// continuously and sampled at the grid angles (or [`MIN_SAMPLES`] angles on
/// coarse grids). At `fraction = 1` this is the boundary data of the map.
pub fn boundary_trace(h: &DiskMap, fraction: f64) -> Result<CircleMap, TraceError> {
    if !(fraction > 0.5 && fraction <= 1.0) {
        return Err(TraceError::InvalidFraction(fraction));
    }
    let g = h.grid();
    if fraction == 1.0 {
        if let Some(b) = h.boundary() {
            return Ok(b.clone());
        }
    }
    let radius = fraction * g.r_max();
    let reference = |theta: f64| h.boundary().map_or(theta, |b| b.eval(theta));
    let n = g.n_theta().max(MIN_SAMPLES);
    let mut samples = Vec::with_capacity(n);
    for j in 0..n {
        let theta = std::f64::consts::TAU * j as f64 / n as f64;
        let w = g.locate(Complex64::from_polar(radius, theta)).value(h.values());
        let arg = w.im.atan2(w.re);
        let anchor = match samples.last() {
            Some(&prev) => prev,
            None => reference(theta),
        };
        samples.push(anchor + crate::circle::wrap_angle(arg - anchor));
    }
    if let Some(index) = (0..samples.len()).find(|&j| {
        let next = if j + 1 < samples.len() { samples[j + 1] } else { samples[0] + std::f64::consts::TAU };
        next <= samples[j]
    }) {
        return Err(TraceError::NotMonotone(NonMonotoneTrace { samples, index }));
    }
    Ok(CircleMap::from_samples(samples)?)
}

/// Sup arc distance between the trace at `fraction` and the boundary data.
pub fn trace_error(h: &DiskMap, fraction: f64) -> Result<f64, TraceError> {
    let trace = boundary_trace(h, fraction)?;
    let phi = h
        .boundary()
        .ok_or_else(|| Error::InvalidArgument("map carries no boundary data".into()))?;
    Ok(sup_distance(&trace, phi, h.grid().n_theta()))
}

/// Largest ratio of target to source distance over neighbouring nodes.
pub fn lipschitz_constant(h: &DiskMap) -> f64 {
    let g = h.grid();
    let u = h.target().u();
    let uh: Vec<f64> = h.values().values().iter().map(|&w| u.grid().locate(w).value(u)).collect();
    let ratio = |a: usize, b: usize| {
        let ds = hyperbolic_distance(g.z(a), g.z(b));
        let dt = (0.5 * (uh[a] + uh[b])).exp() * hyperbolic_distance(h.values().get(a), h.values().get(b));
        dt / ds
    };
    let mut sup: f64 = 0.0;
    for i in 1..g.n_r() {
        for j in 0..g.n_theta() {
            let n = g.node(i, j);
            sup = sup.max(ratio(n, g.node(i, (j + 1) % g.n_theta())));
            sup = sup.max(ratio(n, g.node(i - 1, j)));
        }
    }
    sup
}

#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    pub bochner: bool,
    pub qi_pairs: usize,
    pub trace_ring: f64,
    pub seed: u64,
    pub w_tol: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { bochner: false, qi_pairs: 256, trace_ring: 0.9, seed: 0, w_tol: 1e-2 }
    }
}

/// Summary of a solved map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapReport {
    pub jacobian_inf: f64,
    pub qc_sup_mu: f64,
    pub qc_distortion: f64,
    pub energy_jacobian_ratio: f64,
    pub qi_c: f64,
    pub lipschitz: f64,
    pub w_bound: WBound,
    pub bochner_h_sup: Option<f64>,
    pub bochner_l_sup: Option<f64>,
    pub trace_err: Option<f64>,
    pub residual_norm: f64,
    pub energy: f64,
}

impl MapReport {
    /// Flat `key=value` rendering; absent quantities are written as `none`.
    pub fn to_text(&self) -> String {
        let f = |x: f64| format!("{x:.17e}");
        let opt = |x: Option<f64>| x.map_or_else(|| "none".to_string(), f);
        let (w_margin, w_ok) = match self.w_bound {
            WBound::Checked { margin, ok } => (f(margin), ok.to_string()),
            WBound::Skipped { node } => (format!("skipped(node={node})"), "none".to_string()),
        };
        let rows = [
            ("jacobian_inf", f(self.jacobian_inf)),
            ("qc_sup_mu", f(self.qc_sup_mu)),
            ("qc_distortion", f(self.qc_distortion)),
            ("energy_jacobian_ratio", f(self.energy_jacobian_ratio)),
            ("qi_c", f(self.qi_c)),
            ("lipschitz", f(self.lipschitz)),
            ("w_margin", w_margin),
            ("w_ok", w_ok),
            ("bochner_h_sup", opt(self.bochner_h_sup)),
            ("bochner_l_sup", opt(self.bochner_l_sup)),
            ("trace_err", opt(self.trace_err)),
            ("residual_norm", f(self.residual_norm)),
            ("energy", f(self.energy)),
        ];
        rows.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn compute(h: &DiskMap, opts: &ReportOptions) -> Result<Self> {
        let fields = hopf_fields(h);
        let (bh, bl) = if opts.bochner {
            let b = bochner_residuals(h, &fields)?;
            let l = if b.l_mask.iter().any(|&m| m) { Some(b.sup_l()) } else { None };
            (Some(b.sup_h()), l)
        } else {
            (None, None)
        };
        let trace_err = match trace_error(h, opts.trace_ring) {
            Ok(e) => Some(e),
            Err(TraceError::NotMonotone(_)) => Some(f64::INFINITY),
            Err(TraceError::Other(Error::InvalidArgument(_))) => None,
            Err(TraceError::InvalidFraction(f)) => {
                return Err(Error::InvalidArgument(format!("trace ring {f} outside (0.5, 1]")))
            }
            Err(TraceError::Other(e)) => return Err(e),
        };
        Ok(Self {
            jacobian_inf: fields.jacobian_inf(),
            qc_sup_mu: fields.sup_mu(),
            qc_distortion: fields.qc_distortion(),
            energy_jacobian_ratio: fields.energy_jacobian_ratio(),
            qi_c: if opts.qi_pairs > 0 { quasi_isometry_fit(h, opts.qi_pairs, opts.seed).c } else { f64::NAN },
            lipschitz: lipschitz_constant(h),
            w_bound: w_bound_check(&fields, h.target().bounds().b(), opts.w_tol),
            bochner_h_sup: bh,
            bochner_l_sup: bl,
            trace_err,
            residual_norm: h.residual_norm(),
            energy: h.energy(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DiskGrid, PinchingBounds};

    fn map(n_r: usize, n_t: usize, r: f64, f: impl Fn(Complex64) -> Complex64) -> DiskMap {
        let g = DiskGrid::new(n_r, n_t, r).unwrap();
        let m = MetricField::hyperbolic(&g);
        DiskMap::from_field(ComplexField::from_fn(g, f), m).unwrap()
    }

    #[test]
    fn identity_fields() {
        let h = map(16, 32, 0.9, |z| z);
        let f = hopf_fields(&h);
        for n in 0..h.grid().node_count() {
            assert!((f.h.get(n) - 1.0).abs() < 1e-12);
            assert!(f.l.get(n) < 1e-24);
            assert!(f.mu.get(n).norm() < 1e-12);
        }
        assert!((f.jacobian_inf() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conjugation_has_undefined_mu() {
        let h = map(16, 32, 0.9, |z| z.conj());
        let f = hopf_fields(&h);
        assert!(f.mask.iter().all(|&m| !m));
        assert!((f.jacobian_inf() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_beltrami() {
        let h = map(16, 32, 0.8, |z| z + 0.1 * z.conj());
        let f = hopf_fields(&h);
        for n in 0..h.grid().node_count() {
            assert!((f.mu.get(n) - 0.1).norm() < 1e-12);
            assert!((f.j.get(n) / f.h.get(n) - 0.99).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_bochner_and_w_bound() {
        let h = map(24, 48, 0.9, |z| z);
        let f = hopf_fields(&h);
        let b = bochner_residuals(&h, &f).unwrap();
        assert!(b.sup_h() < 1e-9);
        assert!(!b.l_mask.iter().any(|&m| m));
        assert_eq!(w_bound_check(&f, 1.0, 1e-12), WBound::Checked { margin: f.h.values().iter().copied().fold(f64::INFINITY, f64::min) - 1.0, ok: true });
    }

    #[test]
    fn w_bound_skipped_on_folds() {
        let h = map(16, 32, 0.8, |z| 0.5 * z + 0.75 * z.conj() * z.conj());
        let f = hopf_fields(&h);
        assert!(matches!(w_bound_check(&f, 1.0, 0.0), WBound::Skipped { .. }));
    }

    #[test]
    fn scaled_target_bochner() {
        let g = DiskGrid::new(24, 48, 0.9).unwrap();
        let quarter = MetricField::from_parts(
            ScalarField::constant(g.clone(), -std::f64::consts::LN_2),
            PinchingBounds::new(2.0, 2.0).unwrap(),
            0.0,
        );
        let h = DiskMap::from_field(ComplexField::from_fn(g, |z| z), quarter).unwrap();
        let f = hopf_fields(&h);
        assert!(f.h.values().iter().all(|&x| (x - 0.25).abs() < 1e-12));
        let b = bochner_residuals(&h, &f).unwrap();
        assert!(b.sup_h() < 1e-9, "{}", b.sup_h());
    }

    #[test]
    fn qi_bisection_matches_closed_form() {
        let pairs = [(3.0, 1.0), (0.5, 0.1), (6.0, 2.5), (1.0, 4.0)];
        let closed = pairs
            .iter()
            .map(|&(d, dt): &(f64, f64)| {
                let lower = 0.5 * (-dt + (dt * dt + 4.0 * d).sqrt());
                let upper = dt / (d + 1.0);
                lower.max(upper).max(1.0)
            })
            .fold(1.0, f64::max);
        assert!((fit_qi_constant(&pairs) - closed).abs() < 1e-12);
    }

    #[test]
    fn identity_qi_constant_is_one() {
        let h = map(16, 32, 0.9, |z| z);
        assert_eq!(quasi_isometry_fit(&h, 64, 7).c, 1.0);
    }

    #[test]
    fn gromov_product_cases() {
        let g = DiskGrid::new(16, 32, 0.9).unwrap();
        let m = MetricField::hyperbolic(&g);
        let o = Complex64::new(0.0, 0.0);
        let (x, y) = (g.z(g.node(5, 3)), g.z(g.node(11, 3)));
        assert_eq!(gromov_product(&m, x, o, o), 0.0);
        assert!((gromov_product(&m, x, y, o) - g.hyperbolic_radius(5)).abs() < 1e-12);
        assert!((gromov_product(&m, y, y, o) - g.hyperbolic_radius(11)).abs() < 1e-12);
    }

    #[test]
    fn rotation_distance_closed_form() {
        let g = DiskGrid::new(16, 32, 0.9).unwrap();
        let a = ComplexField::from_fn(g.clone(), |z| z);
        let rot = Complex64::from_polar(1.0, 0.3);
        let b = ComplexField::from_fn(g.clone(), |z| z * rot);
        let r = g.r_max();
        let expected = hyperbolic_distance(Complex64::new(r, 0.0), Complex64::from_polar(r, 0.3));
        assert!((map_distance(&a, &b).unwrap() - expected).abs() < 1e-9);
        assert_eq!(map_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn identity_trace_is_identity() {
        let h = map(16, 64, 0.9, |z| z);
        let t = boundary_trace(&h, 0.8).unwrap();
        for j in 0..64 {
            assert!((t.samples()[j] - h.grid().theta(j)).abs() < 1e-12);
        }
        assert!(matches!(boundary_trace(&h, 0.4), Err(TraceError::InvalidFraction(_))));
    }
}
