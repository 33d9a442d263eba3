//! Complete conformal metrics `e^{2u} g_hyp` of prescribed negative curvature.
//!
//! The log-factor `u` solves `Δu = (-k) e^{2u} - 1` with `Δ` the hyperbolic
//! Laplacian. The constants `-log b` and `-log a` are a sub- and a
//! supersolution; Newton's method on `F(u) = Δu + k e^{2u} + 1` is started
//! from the subsolution and every iterate is projected back into that
//! bracket. The rim carries the Dirichlet value `-log b` unless overridden.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{hyperbolic_density, DiskGrid, PinchingBounds, ScalarField};
use crate::linalg::SparseSystem;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct MetricField {
    u: ScalarField,
    bounds: PinchingBounds,
    residual_norm: f64,
    iterations: usize,
    bracket_history: Vec<(f64, f64)>,
}

impl MetricField {
    /// The hyperbolic metric itself (`u ≡ 0`, `k ≡ -1`).
    pub fn hyperbolic(grid: &Arc<DiskGrid>) -> Self {
        Self {
            u: ScalarField::constant(grid.clone(), 0.0),
            bounds: PinchingBounds::new(1.0, 1.0).expect("valid"),
            residual_norm: 0.0,
            iterations: 0,
            bracket_history: Vec::new(),
        }
    }

    /// Wraps an externally supplied log-factor (e.g. read from disk).
    pub fn from_parts(u: ScalarField, bounds: PinchingBounds, residual_norm: f64) -> Self {
        Self { u, bounds, residual_norm, iterations: 0, bracket_history: Vec::new() }
    }

    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    pub fn grid(&self) -> &Arc<DiskGrid> {
        self.u.grid()
    }

    pub fn bounds(&self) -> PinchingBounds {
        self.bounds
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `(min u, max u)` after each Newton step.
    pub fn bracket_history(&self) -> &[(f64, f64)] {
        &self.bracket_history
    }

    /// Conformal factor `e^{2u}` relative to the hyperbolic metric.
    pub fn conformal_factor(&self) -> ScalarField {
        self.u.map(|u| (2.0 * u).exp())
    }

    /// True when `u` vanishes identically, so the target is the hyperbolic disk.
    pub fn is_hyperbolic(&self) -> bool {
        self.u.values().iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MetricOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Dirichlet value on the rim; defaults to `-log b`.
    pub rim_value: Option<f64>,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: 50, rim_value: None }
    }
}

impl MetricOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// `Δu + k e^{2u} + 1` at interior nodes; zero on the rim.
pub fn curvature_residual(u: &ScalarField, k: &ScalarField) -> Result<ScalarField> {
    let g = u.grid().clone();
    g.check_same(k.grid())?;
    let lap = crate::grid::hyperbolic_laplacian(u);
    let vals = (0..g.node_count())
        .map(|n| if g.is_rim(n) { 0.0 } else { lap.get(n) + k.get(n) * (2.0 * u.get(n)).exp() + 1.0 })
        .collect();
    Ok(ScalarField::from_vec_unchecked(g, vals))
}

pub fn solve_prescribed_curvature(k: &ScalarField, tol: f64) -> Result<MetricField> {
    solve_prescribed_curvature_with(k, &MetricOptions::with_tol(tol), None)
}

/// Newton solve with an optional initial guess (clamped into the bracket).
pub fn solve_prescribed_curvature_with(
    k: &ScalarField,
    opts: &MetricOptions,
    init: Option<&ScalarField>,
) -> Result<MetricField> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let bounds = PinchingBounds::of_curvature(k)?;
    let g = k.grid().clone();
    let lo = -bounds.b().ln();
    let hi = -bounds.a().ln();
    let rim = opts.rim_value.unwrap_or(lo);

    let n_pts = g.point_count();
    let n_int = g.interior_point_count();
    let kp = k.to_points();
    let inv_rho2: Vec<f64> = (0..n_pts).map(|p| 1.0 / hyperbolic_density(g.point_z(p))).collect();
    let lap = g.lap_stencil();

    let mut u: Vec<f64> = match init {
        Some(f) => {
            g.check_same(f.grid())?;
            f.to_points().into_iter().map(|v| v.clamp(lo.min(rim), hi.max(rim))).collect()
        }
        None => vec![lo; n_pts],
    };
    for v in u.iter_mut().skip(n_int) {
        *v = rim;
    }

    let residual = |u: &[f64]| -> Vec<f64> {
        (0..n_int).map(|p| inv_rho2[p] * lap.apply(p, u) + kp[p] * (2.0 * u[p]).exp() + 1.0).collect()
    };
    let sup = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut r = residual(&u);
    let mut res = sup(&r);
    let mut history = Vec::new();
    let mut iterations = 0;
    while res > opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::NoConvergence { what: "prescribed-curvature Newton", iterations, residual: res });
        }
        let mut sys = SparseSystem::new(n_int);
        for p in 0..n_int {
            for (c, v) in lap.row(p) {
                if c < n_int {
                    sys.add(p, c, inv_rho2[p] * v);
                }
            }
            sys.add(p, p, 2.0 * kp[p] * (2.0 * u[p]).exp());
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = sys.solve(&rhs)?;
        for p in 0..n_int {
            u[p] = (u[p] + delta[p]).clamp(lo, hi);
        }
        iterations += 1;
        let (mn, mx) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        history.push((mn, mx));
        r = residual(&u);
        res = sup(&r);
    }
    Ok(MetricField {
        u: ScalarField::from_points(g, &u),
        bounds,
        residual_norm: res,
        iterations,
        bracket_history: history,
    })
}

/// `K_t = -(1 - t) + t K`.
pub fn deformed_curvature(k: &ScalarField, t: f64) -> Result<ScalarField> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t must lie in [0, 1], got {t}")));
    }
    PinchingBounds::of_curvature(k)?;
    Ok(k.map(|v| -(1.0 - t) + t * v))
}

/// A solver failure tagged with the parameter value at which it happened.
#[derive(Debug, thiserror::Error)]
#[error("metric solve failed at t = {t}: {source}")]
pub struct FamilyError {
    pub t: f64,
    #[source]
    pub source: Error,
}

/// Solves for `u_t` along an increasing list of parameters, warm-starting
/// each solve from the previous one.
pub fn solve_family(k: &ScalarField, t_list: &[f64], opts: &MetricOptions) -> Result<Vec<MetricField>, FamilyError> {
    let mut out: Vec<MetricField> = Vec::with_capacity(t_list.len());
    for (idx, &t) in t_list.iter().enumerate() {
        let tag = |source| FamilyError { t, source };
        if idx > 0 && !(t > t_list[idx - 1]) {
            return Err(tag(Error::InvalidArgument("t_list must be strictly increasing".into())));
        }
        let kt = deformed_curvature(k, t).map_err(tag)?;
        let init = out.last().map(|m| m.u().clone());
        let m = solve_prescribed_curvature_with(&kt, opts, init.as_ref()).map_err(tag)?;
        out.push(m);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gaussian_curvature, DiskGrid};
    use num_complex::Complex64;

    fn bump(z: Complex64) -> f64 {
        let r2 = z.norm_sqr();
        -1.0 - 3.0 * (-4.0 * r2 / (1.0 - r2)).exp()
    }

    #[test]
    fn hyperbolic_curvature_is_fixed_point() {
        let g = DiskGrid::new(16, 32, 0.9).unwrap();
        let m = solve_prescribed_curvature(&ScalarField::constant(g, -1.0), 1e-10).unwrap();
        assert_eq!(m.iterations(), 0);
        assert!(m.u().sup_norm() == 0.0);
    }

    #[test]
    fn constant_curvature_gives_constant_factor() {
        let g = DiskGrid::new(16, 32, 0.9).unwrap();
        let m = solve_prescribed_curvature(&ScalarField::constant(g, -9.0), 1e-10).unwrap();
        for &v in m.u().values() {
            assert!((v + 3.0f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_nonnegative_curvature() {
        let g = DiskGrid::new(8, 16, 0.9).unwrap();
        let mut k = vec![-1.0; g.node_count()];
        k[5] = 0.0;
        let k = ScalarField::new(g, k).unwrap();
        assert!(matches!(solve_prescribed_curvature(&k, 1e-10), Err(Error::CurvatureNotNegative { .. })));
    }

    #[test]
    fn bump_respects_pinching_bounds_and_bracket() {
        let g = DiskGrid::new(24, 48, 0.9).unwrap();
        let k = ScalarField::from_fn(g.clone(), bump);
        let m = solve_prescribed_curvature(&k, 1e-10).unwrap();
        assert!(m.residual_norm() <= 1e-10);
        let (lo, hi) = (-m.bounds().b().ln(), -m.bounds().a().ln());
        for &v in m.u().values() {
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
        for &(mn, mx) in m.bracket_history() {
            assert!(mn >= lo && mx <= hi);
        }
    }

    #[test]
    fn recovered_curvature_converges_at_second_order() {
        // curvature recomputed from u (independent stencil on u + log rho)
        // approaches k like the square of the grid spacing
        let err = |n_r: usize, n_t: usize| {
            let g = DiskGrid::new(n_r, n_t, 0.9).unwrap();
            let k = ScalarField::from_fn(g.clone(), bump);
            let m = solve_prescribed_curvature(&k, 1e-10).unwrap();
            let kc = gaussian_curvature(m.u());
            (0..g.node_count())
                .filter(|&n| g.z(n).norm() <= 0.8 * g.r_max())
                .map(|n| (kc.get(n) - k.get(n)).abs())
                .fold(0.0f64, f64::max)
        };
        let coarse = err(16, 32);
        let fine = err(31, 64);
        assert!(coarse / fine > 3.0, "coarse {coarse}, fine {fine}");
    }

    #[test]
    fn initialization_independence() {
        let g = DiskGrid::new(16, 32, 0.9).unwrap();
        let k = ScalarField::from_fn(g.clone(), bump);
        let a = solve_prescribed_curvature_with(&k, &MetricOptions::default(), None).unwrap();
        let top = ScalarField::constant(g, 0.0);
        let b = solve_prescribed_curvature_with(&k, &MetricOptions::default(), Some(&top)).unwrap();
        assert!(a.u().sup_distance(b.u()).unwrap() < 1e-9);
    }

    #[test]
    fn deformed_curvature_endpoints() {
        let g = DiskGrid::new(8, 16, 0.9).unwrap();
        let k = ScalarField::constant(g, -4.0);
        assert!(deformed_curvature(&k, 0.0).unwrap().values().iter().all(|&v| v == -1.0));
        assert!(deformed_curvature(&k, 1.0).unwrap().values().iter().all(|&v| v == -4.0));
        assert!(deformed_curvature(&k, 0.5).unwrap().values().iter().all(|&v| v == -2.5));
        assert!(deformed_curvature(&k, 1.1).is_err());
    }

    #[test]
    fn family_of_constant_curvatures() {
        let g = DiskGrid::new(8, 16, 0.9).unwrap();
        let k = ScalarField::constant(g, -4.0);
        let fam = solve_family(&k, &[0.0, 1.0], &MetricOptions::default()).unwrap();
        assert!(fam[0].u().sup_norm() == 0.0);
        assert!(fam[1].u().values().iter().all(|&v| (v + 2f64.ln()).abs() < 1e-12));
        let err = solve_family(&k, &[0.5, 0.2], &MetricOptions::default()).unwrap_err();
        assert_eq!(err.t, 0.2);
    }
}
