//! Numerical results checked against closed forms computed independently of
//! the solvers.

use std::f64::consts::PI;

use hdl_core::circle::{CircleMap, MobiusTransform};
use hdl_core::diagnostics::{hopf_fields, target_curvature};
use hdl_core::douady_earle::douady_earle;
use hdl_core::grid::{euclidean_laplacian, gaussian_curvature, DiskGrid, ScalarField};
use hdl_core::harmonic::{solve_harmonic, Initializer};
use hdl_core::metric::{solve_family, solve_prescribed_curvature, MetricField, MetricOptions};
use hdl_core::specs::radial_bump;
use num_complex::Complex64;

#[test]
fn constant_curvature_gives_constant_factor() {
    let g = DiskGrid::new(24, 48, 0.9).unwrap();
    for k in [-4.0, -2.25, -1.0] {
        let m = solve_prescribed_curvature(&ScalarField::constant(g.clone(), k), 1e-10).unwrap();
        let exact = -0.5 * f64::ln(-k);
        let err = m.u().values().iter().map(|u| (u - exact).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "k = {k}: {err}");
    }
}

#[test]
fn constant_family_follows_closed_form() {
    let g = DiskGrid::new(16, 32, 0.9).unwrap();
    let k = ScalarField::constant(g, -4.0);
    let ts = [0.0, 0.25, 0.5, 0.75, 1.0];
    let family = solve_family(&k, &ts, &MetricOptions::with_tol(1e-10)).unwrap();
    for (t, m) in ts.iter().zip(&family) {
        let exact = -0.5 * ((1.0 - t) + 4.0 * t).ln();
        let err = m.u().values().iter().map(|u| (u - exact).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "t = {t}: {err}");
    }
}

#[test]
fn laplacian_of_harmonic_cubic_is_second_order() {
    let sup = |n_r: usize, n_t: usize| {
        let g = DiskGrid::new(n_r, n_t, 0.9).unwrap();
        let f = ScalarField::from_fn(g.clone(), |z| (z * z * z).re);
        let lap = euclidean_laplacian(&f);
        (0..g.node_count()).filter(|&n| !g.is_rim(n)).map(|n| lap.get(n).abs()).fold(0.0, f64::max)
    };
    let coarse = sup(16, 32);
    let fine = sup(31, 64);
    assert!(coarse / fine > 3.0, "{coarse} -> {fine}");
}

#[test]
fn curvature_of_scaled_hyperbolic_metric() {
    let err = |n_r: usize, n_t: usize| {
        let g = DiskGrid::new(n_r, n_t, 0.9).unwrap();
        let u = ScalarField::constant(g.clone(), -std::f64::consts::LN_2);
        let k = gaussian_curvature(&u);
        (0..g.node_count()).filter(|&n| !g.is_rim(n)).map(|n| (k.get(n) + 4.0).abs()).fold(0.0, f64::max)
    };
    let (coarse, fine) = (err(24, 48), err(47, 96));
    assert!(coarse < 2e-2 && coarse / fine > 3.0, "{coarse} -> {fine}");
}

#[test]
fn solved_bump_metric_reproduces_its_curvature() {
    let g = DiskGrid::new(48, 96, 0.9).unwrap();
    let k = ScalarField::from_fn(g.clone(), radial_bump(4.0, 4.0));
    let m = solve_prescribed_curvature(&k, 1e-10).unwrap();
    let kc = target_curvature(&m);
    let inner = 0.8 * g.r_max();
    let err = (0..g.node_count())
        .filter(|&n| g.z(n).norm() <= inner)
        .map(|n| (kc.get(n) - k.get(n)).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "{err}");
}

#[test]
fn douady_earle_of_mobius_is_mobius() {
    let gamma = MobiusTransform::from_disk(Complex64::new(0.3, -0.2), 1.1).unwrap();
    let phi = CircleMap::mobius(&gamma, 1024).unwrap();
    for z in [Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.2), Complex64::new(-0.1, 0.8)] {
        let w = douady_earle(&phi, z).unwrap();
        assert!((w - gamma.apply(z)).norm() < 1e-8, "{z}: {w} vs {}", gamma.apply(z));
    }
}

#[test]
fn rotation_boundary_gives_rotation() {
    let alpha = 0.7;
    let g = DiskGrid::new(24, 48, 0.9).unwrap();
    let phi = CircleMap::from_fn(256, |t| t + alpha, |_| 1.0).unwrap();
    let h = solve_harmonic(&MetricField::hyperbolic(&g), &phi, &g, &Initializer::Identity, 1e-10).unwrap();
    let rot = Complex64::from_polar(1.0, alpha);
    let err = (0..g.node_count()).map(|n| (h.values().get(n) - rot * g.z(n)).norm()).fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");
    let f = hopf_fields(&h);
    assert!(f.j.values().iter().all(|j| (j - 1.0).abs() < 1e-6));
}

#[test]
fn grid_radii_are_hyperbolic_arclength() {
    let g = DiskGrid::new(16, 32, 0.9).unwrap();
    for i in 0..g.n_r() {
        let r = g.radius(i);
        assert!((g.hyperbolic_radius(i) - 2.0 * r.atanh()).abs() < 1e-12);
    }
    assert!((g.theta(g.n_theta() / 2) - PI).abs() < 1e-15);
}
