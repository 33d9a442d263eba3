//! Harmonic maps from the hyperbolic disk into `(D, e^{2u} g_hyp)`.
//!
//! Writing the target metric as `σ²|dw|²` with `σ = e^u ρ`, a map is harmonic
//! when `h_{zz̄} + 2 (∂_w log σ)(h) h_z h_{z̄} = 0`. The left-hand side is the
//! tension reported by [`tension`]. `∂_w u` is differentiated on the target
//! grid and interpolated at image points; the `log ρ` part is analytic.
//!
//! [`solve_harmonic`] runs a short preconditioned Barzilai–Borwein descent on
//! the Dirichlet energy and then Newton's method on the discrete tension, with
//! the rim held at `r_max e^{iΦ(θ)}`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::circle::CircleMap;
use crate::douady_earle::extend_on_grid;
use crate::error::{Error, Result};
use crate::grid::{cartesian_gradient, dz_real, hyperbolic_density, ComplexField, DiskGrid};
use crate::linalg::SparseSystem;
use crate::metric::MetricField;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A map of the truncated disk into the disk, together with the target metric
/// it is measured against.
#[derive(Debug, Clone)]
pub struct DiskMap {
    values: ComplexField,
    boundary: Option<CircleMap>,
    target: MetricField,
    residual_norm: f64,
    iterations: usize,
    energy: f64,
    projections: usize,
    descent_energies: Vec<f64>,
}

impl DiskMap {
    /// Wraps an arbitrary map (no boundary data attached). Values must lie in
    /// the open unit disk.
    pub fn from_field(values: ComplexField, target: MetricField) -> Result<Self> {
        if let Some(n) = values.values().iter().position(|w| !(w.norm() < 1.0)) {
            return Err(Error::OutsideDomain { node: n, value: values.get(n).norm() });
        }
        let mut map = Self {
            values,
            boundary: None,
            target,
            residual_norm: f64::NAN,
            iterations: 0,
            energy: f64::NAN,
            projections: 0,
            descent_energies: Vec::new(),
        };
        map.residual_norm = tension(&map)?.sup_norm();
        map.energy = dirichlet_energy(&map);
        Ok(map)
    }

    /// Rebuilds a map read from storage; the rim is checked against `boundary`.
    pub fn from_parts(values: ComplexField, boundary: CircleMap, target: MetricField) -> Result<Self> {
        let rim = rim_values(values.grid(), &boundary);
        let g = values.grid().clone();
        let first_rim = (g.n_r() - 1) * g.n_theta();
        if values.values()[first_rim..] != rim[..] {
            return Err(Error::InvalidArgument("rim values do not match the boundary map".into()));
        }
        let mut map = Self::from_field(values, target)?;
        map.boundary = Some(boundary);
        Ok(map)
    }

    pub fn values(&self) -> &ComplexField {
        &self.values
    }

    pub fn grid(&self) -> &Arc<DiskGrid> {
        self.values.grid()
    }

    /// Boundary data imposed on the rim, if the map came from a solve.
    pub fn boundary(&self) -> Option<&CircleMap> {
        self.boundary.as_ref()
    }

    pub fn target(&self) -> &MetricField {
        &self.target
    }

    /// Sup over interior nodes of the tension magnitude.
    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    /// Newton iterations used by the solve.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Number of node values that had to be pulled back inside the rim.
    pub fn projections(&self) -> usize {
        self.projections
    }

    /// Energy after each accepted descent step, starting with the initial map.
    pub fn descent_energies(&self) -> &[f64] {
        &self.descent_energies
    }
}

/// `r_max e^{iΦ(θ_j)}` for the rim nodes, in node order.
fn rim_values(grid: &DiskGrid, boundary: &CircleMap) -> Vec<Complex64> {
    (0..grid.n_theta()).map(|j| Complex64::from_polar(grid.r_max(), boundary.eval(grid.theta(j)))).collect()
}

/// `∂_w u` of the target on its own grid.
struct Target {
    du: ComplexField,
}

impl Target {
    fn new(metric: &MetricField) -> Self {
        Self { du: dz_real(metric.u()) }
    }

    /// `G = ∂_w log σ` at `w` with its Wirtinger derivatives `(G, G_w, G_w̄)`.
    fn log_sigma_w(&self, w: Complex64) -> (Complex64, Complex64, Complex64) {
        let q = 1.0 - w.norm_sqr();
        let wb = w.conj();
        let cell = self.du.grid().locate(w);
        let d = cell.value(&self.du);
        let (dx, dy) = cell.gradient(&self.du);
        (
            d + wb / q,
            (dx - I * dy) * 0.5 + wb * wb / (q * q),
            (dx + I * dy) * 0.5 + Complex64::new(1.0 / (q * q), 0.0),
        )
    }
}

/// `(h_z, h_z̄)` at every node from the Cartesian difference stencils; the rim
/// ring uses one-sided radial differences.
pub fn complex_derivatives(h: &DiskMap) -> (ComplexField, ComplexField) {
    wirtinger(&h.values)
}

fn wirtinger(h: &ComplexField) -> (ComplexField, ComplexField) {
    let (hx, hy) = cartesian_gradient(h);
    let hz = hx.zip_map(&hy, |x, y| (x - I * y) * 0.5).expect("same grid");
    let hzb = hx.zip_map(&hy, |x, y| (x + I * y) * 0.5).expect("same grid");
    (hz, hzb)
}

/// Per-point tension together with `h_z` and `h_z̄`, for interior points.
struct Residual {
    tension: Vec<Complex64>,
    hz: Vec<Complex64>,
    hzb: Vec<Complex64>,
}

impl Residual {
    fn sup(&self) -> f64 {
        self.tension.iter().fold(0.0, |m, t| m.max(t.norm()))
    }

    fn l2(&self) -> f64 {
        self.tension.iter().map(|t| t.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn residual(grid: &DiskGrid, target: &Target, pts: &[Complex64]) -> Residual {
    let n_int = grid.interior_point_count();
    let (lap, dx, dy) = (grid.lap_stencil(), grid.dx_stencil(), grid.dy_stencil());
    let rows: Vec<(Complex64, Complex64, Complex64)> = (0..n_int)
        .into_par_iter()
        .map(|p| {
            let l = lap.apply(p, pts);
            let x = dx.apply(p, pts);
            let y = dy.apply(p, pts);
            let hz = (x - I * y) * 0.5;
            let hzb = (x + I * y) * 0.5;
            let (g, _, _) = target.log_sigma_w(pts[p]);
            (l * 0.25 + g * hz * hzb * 2.0, hz, hzb)
        })
        .collect();
    let mut out = Residual {
        tension: Vec::with_capacity(n_int),
        hz: Vec::with_capacity(n_int),
        hzb: Vec::with_capacity(n_int),
    };
    for (t, a, b) in rows {
        out.tension.push(t);
        out.hz.push(a);
        out.hzb.push(b);
    }
    out
}

fn check_in_disk(h: &ComplexField) -> Result<()> {
    match h.values().iter().position(|w| !(w.norm() < 1.0)) {
        Some(n) => Err(Error::OutsideDomain { node: n, value: h.get(n).norm() }),
        None => Ok(()),
    }
}

/// `h_{zz̄} + 2 (∂_w log σ)(h) h_z h_z̄` at interior nodes; rim nodes hold zero.
pub fn tension(h: &DiskMap) -> Result<ComplexField> {
    check_in_disk(&h.values)?;
    let g = h.grid().clone();
    let target = Target::new(&h.target);
    let res = residual(&g, &target, &h.values.to_points());
    let mut pts = res.tension;
    pts.resize(g.point_count(), Complex64::new(0.0, 0.0));
    Ok(ComplexField::from_points(g, &pts))
}

/// Energy density `H + L` at every point, from point-indexed values.
fn energy_density(grid: &DiskGrid, target: &MetricField, pts: &[Complex64]) -> Vec<f64> {
    let (dx, dy) = (grid.dx_stencil(), grid.dy_stencil());
    let u = target.u();
    (0..grid.point_count())
        .into_par_iter()
        .map(|p| {
            let w = pts[p];
            let x = dx.apply(p, pts);
            let y = dy.apply(p, pts);
            let hz = (x - I * y) * 0.5;
            let hzb = (x + I * y) * 0.5;
            let uw = u.grid().locate(w).value(u);
            let scale = (2.0 * uw).exp() * hyperbolic_density(w) / hyperbolic_density(grid.point_z(p));
            scale * (hz.norm_sqr() + hzb.norm_sqr())
        })
        .collect()
}

fn energy_of(grid: &DiskGrid, target: &MetricField, pts: &[Complex64], areas: &[f64]) -> f64 {
    energy_density(grid, target, pts).iter().zip(areas).map(|(e, a)| e * a).sum()
}

/// Dirichlet energy `∫ (H + L) dA_hyp` over the truncated disk, using the
/// hyperbolic cell areas of the grid.
pub fn dirichlet_energy(h: &DiskMap) -> f64 {
    let g = h.grid();
    energy_of(g, &h.target, &h.values.to_points(), &g.point_areas())
}

/// Starting map for [`solve_harmonic`].
#[derive(Debug, Clone)]
pub enum Initializer {
    DouadyEarle,
    Identity,
    Map(ComplexField),
}

#[derive(Debug, Clone, Copy)]
pub struct HarmonicOptions {
    pub tol: f64,
    pub max_newton: usize,
    /// Cap on preconditioned descent steps before Newton takes over.
    pub max_descent: usize,
    /// Descent hands over to Newton once the sup tension drops below this.
    pub descent_switch: f64,
    /// Consecutive Newton steps with projected nodes tolerated before failing.
    pub max_projected_steps: usize,
}

pub const DEFAULT_TOL: f64 = 1e-8;

impl Default for HarmonicOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_newton: 50, max_descent: 20, descent_switch: 1e-3, max_projected_steps: 3 }
    }
}

impl HarmonicOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Pulls values back to the closed disk of radius `r`; returns how many moved.
fn project(pts: &mut [Complex64], r: f64) -> usize {
    let mut moved = 0;
    for w in pts.iter_mut() {
        let n = w.norm();
        if n > r {
            *w *= r / n;
            moved += 1;
        }
    }
    moved
}

/// Largest `λ ≤ 1` keeping every `h_p + λ δ_p` inside the closed disk of
/// radius `r`.
fn step_to_rim(pts: &[Complex64], step: &[Complex64], r: f64) -> f64 {
    let mut lambda: f64 = 1.0;
    for (&h, &d) in pts.iter().zip(step) {
        if (h + d).norm() <= r {
            continue;
        }
        // |h + λd|² = r²: a λ² + 2 b λ + c = 0 with c ≤ 0
        let a = d.norm_sqr();
        let b = (h.conj() * d).re;
        let c = (h.norm_sqr() - r * r).min(0.0);
        let root = (-b + (b * b - a * c).sqrt()) / a;
        lambda = lambda.min(root);
    }
    lambda
}

/// Solves for the harmonic map with boundary data `phi` on the rim of `grid`.
pub fn solve_harmonic(
    target: &MetricField,
    phi: &CircleMap,
    grid: &Arc<DiskGrid>,
    init: &Initializer,
    tol: f64,
) -> Result<DiskMap> {
    solve_harmonic_with(target, phi, grid, init, &HarmonicOptions::with_tol(tol))
}

pub fn solve_harmonic_with(
    target: &MetricField,
    phi: &CircleMap,
    grid: &Arc<DiskGrid>,
    init: &Initializer,
    opts: &HarmonicOptions,
) -> Result<DiskMap> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let r_max = grid.r_max();
    let start = match init {
        Initializer::DouadyEarle => extend_on_grid(phi, grid)?,
        Initializer::Identity => ComplexField::from_fn(grid.clone(), |z| z),
        Initializer::Map(m) => {
            grid.check_same(m.grid())?;
            m.clone()
        }
    };
    let mut pts = start.to_points();
    project(&mut pts, r_max);
    let n_int = grid.interior_point_count();
    let rim = rim_values(grid, phi);
    pts[n_int..].copy_from_slice(&rim);
    if let Some(p) = pts.iter().position(|w| !w.norm().is_finite()) {
        return Err(Error::OutsideDomain { node: grid.node_of_point(p), value: pts[p].norm() });
    }

    let tgt = Target::new(target);
    let areas = grid.point_areas();
    let mut energies = vec![energy_of(grid, target, &pts, &areas)];

    descend(grid, target, &tgt, &areas, &mut pts, &mut energies, opts);

    let mut projections = 0;
    let mut projected_run = 0;
    let mut res = residual(grid, &tgt, &pts);
    let mut iterations = 0;
    while res.sup() > opts.tol {
        if iterations == opts.max_newton {
            return Err(Error::NoConvergence { what: "harmonic map", iterations, residual: res.sup() });
        }
        iterations += 1;
        let step = newton_step(grid, &tgt, &pts, &res)?;
        let base = res.l2();
        let bound = step_to_rim(&pts[..n_int], &step, r_max);
        let mut lambda = if bound >= 1.0 { 1.0 } else { (0.95 * bound).max(0.05) };
        let mut accepted = None;
        for _ in 0..30 {
            let mut cand = pts.clone();
            for p in 0..n_int {
                cand[p] += step[p] * lambda;
            }
            let moved = project(&mut cand[..n_int], r_max);
            let cres = residual(grid, &tgt, &cand);
            if cres.l2() < base {
                accepted = Some((cand, cres, moved));
                break;
            }
            lambda *= 0.5;
        }
        let Some((cand, cres, moved)) = accepted else {
            return Err(Error::NoConvergence { what: "harmonic map line search", iterations, residual: res.sup() });
        };
        projections += moved;
        projected_run = if moved > 0 { projected_run + 1 } else { 0 };
        if projected_run > opts.max_projected_steps {
            return Err(Error::EscapedDisk { count: projections });
        }
        pts = cand;
        res = cres;
    }

    let values = ComplexField::from_points(grid.clone(), &pts);
    let energy = energy_of(grid, target, &pts, &areas);
    Ok(DiskMap {
        values,
        boundary: Some(phi.clone()),
        target: target.clone(),
        residual_norm: res.sup(),
        iterations,
        energy,
        projections,
        descent_energies: energies,
    })
}

/// Jacobi-preconditioned gradient descent with Barzilai–Borwein steps; a step
/// is accepted only if it lowers the energy.
fn descend(
    grid: &DiskGrid,
    target: &MetricField,
    tgt: &Target,
    areas: &[f64],
    pts: &mut [Complex64],
    energies: &mut Vec<f64>,
    opts: &HarmonicOptions,
) {
    let n_int = grid.interior_point_count();
    let lap = grid.lap_stencil();
    let diag: Vec<f64> = (0..n_int)
        .map(|p| 0.25 * lap.row(p).filter(|&(c, _)| c == p).map(|(_, v)| v.abs()).sum::<f64>())
        .collect();
    let direction = |pts: &[Complex64]| -> (Vec<Complex64>, f64) {
        let res = residual(grid, tgt, pts);
        let d = res.tension.iter().zip(&diag).map(|(t, w)| t / w).collect();
        (d, res.sup())
    };
    let (mut d, mut sup) = direction(pts);
    let mut alpha = 1.0;
    let mut energy = *energies.last().expect("initial energy");
    for _ in 0..opts.max_descent {
        if sup < opts.descent_switch {
            break;
        }
        let mut accepted = None;
        let mut a = alpha;
        for _ in 0..6 {
            let mut cand = pts.to_vec();
            for p in 0..n_int {
                cand[p] += d[p] * a;
            }
            project(&mut cand[..n_int], grid.r_max());
            let e = energy_of(grid, target, &cand, areas);
            if e < energy {
                accepted = Some((cand, e, a));
                break;
            }
            a *= 0.5;
        }
        let Some((cand, e, a)) = accepted else { break };
        let (nd, nsup) = direction(&cand);
        // s = a d, y = d - nd (gradient is -d)
        let (mut ss, mut sy) = (0.0, 0.0);
        for p in 0..n_int {
            let s = d[p] * a;
            let y = d[p] - nd[p];
            ss += s.norm_sqr();
            sy += (s.conj() * y).re;
        }
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-3, 10.0) } else { 1.0 };
        pts.copy_from_slice(&cand);
        energy = e;
        energies.push(e);
        d = nd;
        sup = nsup;
    }
}

/// Solves the linearised tension equation `J δ = -T` for the interior update.
fn newton_step(grid: &DiskGrid, tgt: &Target, pts: &[Complex64], res: &Residual) -> Result<Vec<Complex64>> {
    let n_int = grid.interior_point_count();
    let (lap, dx, dy) = (grid.lap_stencil(), grid.dx_stencil(), grid.dy_stencil());
    let mut sys = SparseSystem::new(2 * n_int);
    // coefficient c multiplying δh_q and d multiplying conj(δh_p), split into
    // real 2x2 blocks over (Re, Im)
    let mut put = |p: usize, q: usize, c: Complex64| {
        sys.add(2 * p, 2 * q, c.re);
        sys.add(2 * p, 2 * q + 1, -c.im);
        sys.add(2 * p + 1, 2 * q, c.im);
        sys.add(2 * p + 1, 2 * q + 1, c.re);
    };
    let mut conj_terms = Vec::with_capacity(n_int);
    for p in 0..n_int {
        let (hz, hzb) = (res.hz[p], res.hzb[p]);
        let (g, g_w, g_wb) = tgt.log_sigma_w(pts[p]);
        let sum = g * (hz + hzb);
        let diff = g * I * (hz - hzb);
        for (q, v) in lap.row(p) {
            if q < n_int {
                put(p, q, Complex64::new(0.25 * v, 0.0));
            }
        }
        for (q, v) in dx.row(p) {
            if q < n_int {
                put(p, q, sum * v);
            }
        }
        for (q, v) in dy.row(p) {
            if q < n_int {
                put(p, q, diff * v);
            }
        }
        let quad = hz * hzb * 2.0;
        put(p, p, quad * g_w);
        conj_terms.push(quad * g_wb);
    }
    for (p, d) in conj_terms.into_iter().enumerate() {
        sys.add(2 * p, 2 * p, d.re);
        sys.add(2 * p, 2 * p + 1, d.im);
        sys.add(2 * p + 1, 2 * p, d.im);
        sys.add(2 * p + 1, 2 * p + 1, -d.re);
    }
    let rhs: Vec<f64> = res.tension.iter().flat_map(|t| [-t.re, -t.im]).collect();
    let x = sys.solve(&rhs)?;
    Ok((0..n_int).map(|p| Complex64::new(x[2 * p], x[2 * p + 1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::MobiusTransform;

    fn hyperbolic(n_r: usize, n_t: usize, r: f64) -> (Arc<DiskGrid>, MetricField) {
        let g = DiskGrid::new(n_r, n_t, r).unwrap();
        let m = MetricField::hyperbolic(&g);
        (g, m)
    }

    #[test]
    fn wirtinger_derivatives_of_model_maps() {
        let (g, m) = hyperbolic(16, 32, 0.8);
        let id = DiskMap::from_field(ComplexField::from_fn(g.clone(), |z| z), m.clone()).unwrap();
        let (hz, hzb) = complex_derivatives(&id);
        for n in 0..g.node_count() {
            assert!((hz.get(n) - 1.0).norm() < 1e-12 && hzb.get(n).norm() < 1e-12);
        }
        let cj = DiskMap::from_field(ComplexField::from_fn(g.clone(), |z| z.conj()), m).unwrap();
        let (hz, hzb) = complex_derivatives(&cj);
        for n in 0..g.node_count() {
            assert!(hz.get(n).norm() < 1e-12 && (hzb.get(n) - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn holomorphic_tension_is_stencil_error() {
        let sup = |n_r, n_t| {
            let (g, m) = hyperbolic(n_r, n_t, 0.9);
            DiskMap::from_field(ComplexField::from_fn(g, |z| 0.5 * z * z + 0.2 * z), m).unwrap().residual_norm()
        };
        let (coarse, fine) = (sup(24, 48), sup(47, 96));
        assert!(coarse < 0.05 && coarse / fine > 3.0, "{coarse} {fine}");
    }

    #[test]
    fn identity_energy_is_hyperbolic_area() {
        let (g, m) = hyperbolic(16, 32, 0.9);
        let h = DiskMap::from_field(ComplexField::from_fn(g, |z| z), m).unwrap();
        let area = 4.0 * std::f64::consts::PI * 0.81 / (1.0 - 0.81);
        assert!((h.energy() - area).abs() < 1e-10 * area);
    }

    #[test]
    fn identity_boundary_solves_to_identity() {
        let (g, m) = hyperbolic(16, 32, 0.9);
        let h = solve_harmonic(&m, &CircleMap::identity(256), &g, &Initializer::DouadyEarle, 1e-10).unwrap();
        let id = ComplexField::from_fn(g.clone(), |z| z);
        assert!(h.values().sup_distance(&id).unwrap() < 1e-9);
    }

    #[test]
    fn rim_data_is_exact_and_energy_descends() {
        let (g, m) = hyperbolic(16, 32, 0.9);
        let phi = CircleMap::sine(0.5, 256).unwrap();
        let h = solve_harmonic(&m, &phi, &g, &Initializer::Identity, 1e-9).unwrap();
        let rim = rim_values(&g, &phi);
        let first = (g.n_r() - 1) * g.n_theta();
        assert_eq!(&h.values().values()[first..], &rim[..]);
        assert!(h.residual_norm() <= 1e-9);
        assert!(h.descent_energies().windows(2).all(|w| w[1] <= w[0]));
        assert!(h.values().values().iter().all(|w| w.norm() <= g.r_max() * (1.0 + 4.0 * f64::EPSILON)));
    }

    #[test]
    fn mobius_boundary_approximates_mobius_map() {
        let (g, m) = hyperbolic(24, 48, 0.95);
        let gamma = MobiusTransform::from_disk(Complex64::new(0.2, 0.1), 0.3).unwrap();
        let phi = CircleMap::mobius(&gamma, 512).unwrap();
        let h = solve_harmonic(&m, &phi, &g, &Initializer::DouadyEarle, 1e-9).unwrap();
        let err = (0..g.node_count())
            .filter(|&n| g.z(n).norm() <= 0.8 * g.r_max())
            .map(|n| (h.values().get(n) - gamma.apply(g.z(n))).norm())
            .fold(0.0, f64::max);
        assert!(err < 0.05, "{err}");
    }
}
