//! Continuity-method sweeps with per-step certificates.
//!
//! Two families are marched on a uniform parameter grid: the curvature
//! deformation `K_t = -(1 - t) + t K` with fixed boundary data, and the
//! boundary deformation `Φ_t = (1 - t) Id + t Φ` into the hyperbolic disk.
//! Each step is warm-started from the previous one. When the Jacobian moves by
//! more than the continuity budget the step is halved, at most
//! [`ContinuationOptions::max_halvings`] times.
//!
//! A `CertifiedPositive` verdict states that the discrete Jacobian was
//! positive at every node of every computed step; it is a statement about the
//! discrete solutions only.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use crate::circle::{linear_deformation, CircleMap};
use crate::diagnostics::{hopf_fields, map_distance, w_bound_check, HopfFields, WBound};
use crate::error::{Error, Result};
use crate::grid::{cartesian_gradient, hyperbolic_density, DiskGrid, PinchingBounds, ScalarField};
use crate::harmonic::{solve_harmonic_with, DiskMap, HarmonicOptions, Initializer};
use crate::metric::{deformed_curvature, solve_prescribed_curvature_with, MetricField, MetricOptions};

#[derive(Debug, Clone, Copy)]
pub struct ContinuationOptions {
    pub n_steps: usize,
    pub metric_tol: f64,
    pub map_tol: f64,
    /// Largest accepted `‖J_t - J_prev‖_∞` before a step is halved.
    pub continuity_budget: f64,
    pub max_halvings: usize,
    /// Tolerance on the `e^{2w} ≥ b^{-2}` check.
    pub w_tol: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self { n_steps: 11, metric_tol: 1e-10, map_tol: 1e-8, continuity_budget: 0.5, max_halvings: 3, w_tol: 1e-2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Metric,
    Boundary,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::Metric => "metric",
            Family::Boundary => "boundary",
        }
    }
}

/// Diagnostics of one computed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub metric_residual: f64,
    pub map_residual: f64,
    pub newton_iterations: usize,
    /// `j(t) = min J_t` over the nodes.
    pub jacobian_inf: f64,
    pub sup_mu: f64,
    /// `min e^{2w} - b^{-2}`, or `None` when the Jacobian is not positive.
    pub w_margin: Option<f64>,
    /// `d(h_t, h_0)`, the sup of hyperbolic distances between images.
    pub dist_h0: f64,
    /// `‖J_t - J_prev‖_∞` (zero at the first step).
    pub d_jacobian: f64,
    /// `‖u_t - u_prev‖_∞`.
    pub d_u: f64,
    /// Sup of the hyperbolic norm of `∇(u_t - u_prev)`.
    pub d_grad_u: f64,
}

/// Field values around the node of smallest Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchNode {
    pub ring: usize,
    pub angle: usize,
    pub z: Complex64,
    pub h: Complex64,
    pub jacobian: f64,
    pub mu: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    CertifiedPositive,
    Degenerated { t: f64, node: usize, patch: Vec<PatchNode> },
    SolverFailed { t: f64, message: String },
}

impl Verdict {
    pub fn label(&self) -> String {
        match self {
            Verdict::CertifiedPositive => "CERTIFIED_POSITIVE".into(),
            Verdict::Degenerated { t, .. } => format!("DEGENERATED({t})"),
            Verdict::SolverFailed { t, .. } => format!("SOLVER_FAILED({t})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationReport {
    pub family: Family,
    pub grid: (usize, usize, f64),
    pub records: Vec<StepRecord>,
    pub verdict: Verdict,
    /// Final map, when the sweep reached it.
    pub last_map: Option<DiskMap>,
}

impl ContinuationReport {
    pub fn t_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// Empirical `j_* = min_t j(t)`.
    pub fn j_star(&self) -> f64 {
        self.records.iter().map(|r| r.jacobian_inf).fold(f64::INFINITY, f64::min)
    }

    /// Empirical `c_* = max_t d(h_t, h_0)`.
    pub fn c_star(&self) -> f64 {
        self.records.iter().map(|r| r.dist_h0).fold(0.0, f64::max)
    }

    pub fn max_d_jacobian(&self) -> f64 {
        self.records.iter().map(|r| r.d_jacobian).fold(0.0, f64::max)
    }

    /// Flat `key=value` rendering with per-step sections.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let f = |x: f64| format!("{x:.17e}");
        let (n_r, n_t, r_max) = self.grid;
        let _ = writeln!(s, "family={}", self.family.name());
        let _ = writeln!(s, "grid={n_r}x{n_t}@{}", f(r_max));
        let _ = writeln!(s, "steps={}", self.records.len());
        let _ = writeln!(s, "verdict={}", self.verdict.label());
        let _ = writeln!(s, "j_star={}", f(self.j_star()));
        let _ = writeln!(s, "c_star={}", f(self.c_star()));
        match continuity_moduli(self) {
            Ok(m) => {
                let _ = writeln!(s, "u_lipschitz={}", f(m.u_slope));
                let _ = writeln!(s, "u_lipschitz_residual={}", f(m.u_residual));
                let _ = writeln!(s, "j_lipschitz={}", f(m.j_slope));
                let _ = writeln!(s, "j_lipschitz_residual={}", f(m.j_residual));
            }
            Err(_) => {
                let _ = writeln!(s, "u_lipschitz=none");
                let _ = writeln!(s, "j_lipschitz=none");
            }
        }
        for (i, r) in self.records.iter().enumerate() {
            let _ = writeln!(s, "[step.{i}]");
            let _ = writeln!(s, "t={}", f(r.t));
            let _ = writeln!(s, "metric_residual={}", f(r.metric_residual));
            let _ = writeln!(s, "map_residual={}", f(r.map_residual));
            let _ = writeln!(s, "newton_iterations={}", r.newton_iterations);
            let _ = writeln!(s, "jacobian_inf={}", f(r.jacobian_inf));
            let _ = writeln!(s, "sup_mu={}", f(r.sup_mu));
            match r.w_margin {
                Some(m) => {
                    let _ = writeln!(s, "w_margin={}", f(m));
                }
                None => {
                    let _ = writeln!(s, "w_margin=skipped");
                }
            }
            let _ = writeln!(s, "dist_h0={}", f(r.dist_h0));
            let _ = writeln!(s, "d_jacobian={}", f(r.d_jacobian));
            let _ = writeln!(s, "d_u={}", f(r.d_u));
            let _ = writeln!(s, "d_grad_u={}", f(r.d_grad_u));
        }
        match &self.verdict {
            Verdict::Degenerated { node, patch, .. } => {
                let _ = writeln!(s, "[degeneration]");
                let _ = writeln!(s, "node={node}");
                for p in patch {
                    let _ = writeln!(
                        s,
                        "patch.{}.{}={} {} {} {} {} {} {}",
                        p.ring,
                        p.angle,
                        f(p.z.re),
                        f(p.z.im),
                        f(p.h.re),
                        f(p.h.im),
                        f(p.jacobian),
                        f(p.mu.re),
                        f(p.mu.im)
                    );
                }
            }
            Verdict::SolverFailed { message, .. } => {
                let _ = writeln!(s, "[failure]");
                let _ = writeln!(s, "message={}", message.replace('\n', " "));
            }
            Verdict::CertifiedPositive => {}
        }
        s
    }

    /// Per-step CSV: `t,j,sup_mu,w_margin,dist_h0,dJ`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,j,sup_mu,w_margin,dist_h0,dJ\n");
        for r in &self.records {
            let w = r.w_margin.map_or_else(|| "nan".to_string(), |m| format!("{m:.17e}"));
            let _ = writeln!(
                s,
                "{:.17e},{:.17e},{:.17e},{},{:.17e},{:.17e}",
                r.t, r.jacobian_inf, r.sup_mu, w, r.dist_h0, r.d_jacobian
            );
        }
        s
    }
}

/// Lipschitz-in-`t` fits over consecutive steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Moduli {
    /// Least-squares slope through the origin of `‖u_t - u_s‖_∞ + ‖∇(u_t - u_s)‖_∞` against `|t - s|`.
    pub u_slope: f64,
    pub u_residual: f64,
    /// Same for `‖J_t - J_s‖_∞`.
    pub j_slope: f64,
    pub j_residual: f64,
    /// `(midpoint, ‖u_t - u_s‖_∞ / |t - s|)` for each consecutive pair.
    pub u_secants: Vec<(f64, f64)>,
    pub j_secants: Vec<(f64, f64)>,
}

fn fit_through_origin(xy: &[(f64, f64)]) -> (f64, f64) {
    let sxx: f64 = xy.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = xy.iter().map(|(x, y)| x * y).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rss: f64 = xy.iter().map(|(x, y)| (y - slope * x).powi(2)).sum();
    (slope, (rss / xy.len() as f64).sqrt())
}

pub fn continuity_moduli(report: &ContinuationReport) -> Result<Moduli> {
    let r = &report.records;
    if r.len() < 3 {
        return Err(Error::InvalidArgument(format!("continuity moduli need at least 3 steps, got {}", r.len())));
    }
    let pairs = &r[1..];
    let dt = |i: usize| pairs[i].t - r[i].t;
    let mid = |i: usize| 0.5 * (pairs[i].t + r[i].t);
    let u_xy: Vec<(f64, f64)> = (0..pairs.len()).map(|i| (dt(i), pairs[i].d_u + pairs[i].d_grad_u)).collect();
    let j_xy: Vec<(f64, f64)> = (0..pairs.len()).map(|i| (dt(i), pairs[i].d_jacobian)).collect();
    let (u_slope, u_residual) = fit_through_origin(&u_xy);
    let (j_slope, j_residual) = fit_through_origin(&j_xy);
    Ok(Moduli {
        u_slope,
        u_residual,
        j_slope,
        j_residual,
        u_secants: (0..pairs.len()).map(|i| (mid(i), pairs[i].d_u / dt(i))).collect(),
        j_secants: (0..pairs.len()).map(|i| (mid(i), pairs[i].d_jacobian / dt(i))).collect(),
    })
}

fn sup_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Sup over nodes of `ρ^{-1} |∇_e (a - b)|`.
fn sup_grad_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    let d = a.zip_map(b, |x, y| x - y).expect("same grid");
    let (dx, dy) = cartesian_gradient(&d);
    let g = d.grid();
    (0..g.node_count())
        .map(|n| dx.get(n).hypot(dy.get(n)) / hyperbolic_density(g.z(n)).sqrt())
        .fold(0.0, f64::max)
}

fn patch_around(h: &DiskMap, fields: &HopfFields, node: usize) -> Vec<PatchNode> {
    let g = h.grid();
    let (i0, j0) = g.ring_angle(node);
    let lo = i0.saturating_sub(2);
    let hi = (i0 + 2).min(g.n_r() - 1);
    let n = g.n_theta();
    let mut out = Vec::new();
    for i in lo..=hi {
        for dj in 0..5 {
            let j = (j0 + n + dj - 2) % n;
            let m = g.node(i, j);
            out.push(PatchNode {
                ring: i,
                angle: j,
                z: g.z(m),
                h: h.values().get(m),
                jacobian: fields.j.get(m),
                mu: fields.mu.get(m),
            });
        }
    }
    out
}

/// State carried from one accepted step to the next.
struct Accepted {
    t: f64,
    metric: MetricField,
    map: DiskMap,
    jacobian: ScalarField,
}

/// Everything computed at one trial parameter.
struct Trial {
    metric: MetricField,
    map: DiskMap,
    fields: HopfFields,
}

/// One family, abstracted over how a step is solved.
trait Stepper {
    fn family(&self) -> Family;
    fn solve(&self, t: f64, prev: Option<&Accepted>) -> Result<(MetricField, DiskMap)>;
    fn w_bound(&self, t: f64) -> f64;
}

fn march(stepper: &dyn Stepper, grid: &Arc<DiskGrid>, opts: &ContinuationOptions) -> ContinuationReport {
    let mut records = Vec::new();
    let mut prev: Option<Accepted> = None;
    let mut h0: Option<DiskMap> = None;
    let n = opts.n_steps.max(2);
    let grid_desc = (grid.n_r(), grid.n_theta(), grid.r_max());
    let finish = |records, verdict, last_map| ContinuationReport {
        family: stepper.family(),
        grid: grid_desc,
        records,
        verdict,
        last_map,
    };
    let mut k = 0;
    while k < n {
        let target_t = k as f64 / (n - 1) as f64;
        let mut t = target_t;
        let mut halvings = 0;
        let trial = loop {
            let (metric, map) = match stepper.solve(t, prev.as_ref()) {
                Ok(v) => v,
                Err(e) => {
                    return finish(records, Verdict::SolverFailed { t, message: e.to_string() }, None);
                }
            };
            let fields = hopf_fields(&map);
            let jump = prev.as_ref().map_or(0.0, |p| sup_diff(&fields.j, &p.jacobian));
            if jump > opts.continuity_budget && halvings < opts.max_halvings {
                let t_prev = prev.as_ref().map_or(0.0, |p| p.t);
                t = 0.5 * (t_prev + t);
                halvings += 1;
                continue;
            }
            break Trial { metric, map, fields };
        };
        let Trial { metric, map, fields } = trial;
        let h_ref = h0.get_or_insert_with(|| map.clone());
        let (d_u, d_grad_u, d_jacobian) = match &prev {
            Some(p) => (
                sup_diff(metric.u(), p.metric.u()),
                sup_grad_diff(metric.u(), p.metric.u()),
                sup_diff(&fields.j, &p.jacobian),
            ),
            None => (0.0, 0.0, 0.0),
        };
        let w_margin = match w_bound_check(&fields, stepper.w_bound(t), opts.w_tol) {
            WBound::Checked { margin, .. } => Some(margin),
            WBound::Skipped { .. } => None,
        };
        let record = StepRecord {
            t,
            metric_residual: metric.residual_norm(),
            map_residual: map.residual_norm(),
            newton_iterations: map.iterations(),
            jacobian_inf: fields.jacobian_inf(),
            sup_mu: fields.sup_mu(),
            w_margin,
            dist_h0: map_distance(map.values(), h_ref.values()).expect("same grid"),
            d_jacobian,
            d_u,
            d_grad_u,
        };
        let degenerate = !(record.jacobian_inf > 0.0);
        records.push(record);
        if degenerate {
            let node = fields.jacobian_argmin();
            let patch = patch_around(&map, &fields, node);
            return finish(records, Verdict::Degenerated { t, node, patch }, Some(map));
        }
        if t == target_t {
            k += 1;
        }
        prev = Some(Accepted { t, metric, map, jacobian: fields.j });
    }
    let last = prev.map(|p| p.map);
    finish(records, Verdict::CertifiedPositive, last)
}

struct MetricSweep<'a> {
    k: &'a ScalarField,
    phi: &'a CircleMap,
    grid: &'a Arc<DiskGrid>,
    opts: ContinuationOptions,
}

impl Stepper for MetricSweep<'_> {
    fn family(&self) -> Family {
        Family::Metric
    }

    fn solve(&self, t: f64, prev: Option<&Accepted>) -> Result<(MetricField, DiskMap)> {
        let kt = deformed_curvature(self.k, t)?;
        let metric =
            solve_prescribed_curvature_with(&kt, &MetricOptions::with_tol(self.opts.metric_tol), prev.map(|p| p.metric.u()))?;
        let init = match prev {
            Some(p) => Initializer::Map(p.map.values().clone()),
            None => Initializer::DouadyEarle,
        };
        let map = solve_harmonic_with(&metric, self.phi, self.grid, &init, &HarmonicOptions::with_tol(self.opts.map_tol))?;
        Ok((metric, map))
    }

    fn w_bound(&self, t: f64) -> f64 {
        deformed_curvature(self.k, t)
            .and_then(|kt| PinchingBounds::of_curvature(&kt))
            .map_or(f64::NAN, |b| b.b())
    }
}

struct BoundarySweep<'a> {
    phi: &'a CircleMap,
    grid: &'a Arc<DiskGrid>,
    target: MetricField,
    opts: ContinuationOptions,
}

impl Stepper for BoundarySweep<'_> {
    fn family(&self) -> Family {
        Family::Boundary
    }

    fn solve(&self, t: f64, prev: Option<&Accepted>) -> Result<(MetricField, DiskMap)> {
        let phi_t = linear_deformation(self.phi, t)?;
        let init = match prev {
            Some(p) => Initializer::Map(p.map.values().clone()),
            None => Initializer::DouadyEarle,
        };
        let map =
            solve_harmonic_with(&self.target, &phi_t, self.grid, &init, &HarmonicOptions::with_tol(self.opts.map_tol))?;
        Ok((self.target.clone(), map))
    }

    fn w_bound(&self, _t: f64) -> f64 {
        1.0
    }
}

fn check_options(opts: &ContinuationOptions) -> Result<()> {
    if opts.n_steps < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 steps, got {}", opts.n_steps)));
    }
    if !(opts.metric_tol > 0.0 && opts.map_tol > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    Ok(())
}

/// Sweeps the curvature family `K_t` with boundary data `phi`. Solver
/// failures end the sweep and are recorded in the verdict.
pub fn run_metric_continuation(
    k: &ScalarField,
    phi: &CircleMap,
    grid: &Arc<DiskGrid>,
    opts: &ContinuationOptions,
) -> Result<ContinuationReport> {
    check_options(opts)?;
    grid.check_same(k.grid())?;
    PinchingBounds::of_curvature(k)?;
    Ok(march(&MetricSweep { k, phi, grid, opts: *opts }, grid, opts))
}

/// Sweeps the boundary family `Φ_t` into the hyperbolic disk.
pub fn run_boundary_continuation(
    phi: &CircleMap,
    grid: &Arc<DiskGrid>,
    opts: &ContinuationOptions,
) -> Result<ContinuationReport> {
    check_options(opts)?;
    if phi.derivatives().is_none() {
        return Err(Error::InvalidArgument("boundary continuation needs a C1-tagged map".into()));
    }
    let target = MetricField::hyperbolic(grid);
    Ok(march(&BoundarySweep { phi, grid, target, opts: *opts }, grid, opts))
}
