//! Barycentric (Douady–Earle) extension of circle homeomorphisms.
//!
//! The visual measure seen from `z` is the push-forward of the uniform
//! measure under `γ_z(ζ) = (ζ + z)/(1 + z̄ζ)`, so the quadrature uses equal
//! weights on `φ(γ_z(ζ_k))` for uniformly spaced `ζ_k`. The barycentre `w`
//! of the resulting points `ξ_k` is the zero of
//! `V(w) = mean (ξ_k - w)/(1 - w̄ ξ_k)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::circle::CircleMap;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, DiskGrid};
use std::sync::Arc;

#[derive(Debug, Clone, Copy)]
pub struct BarycenterOptions {
    /// Quadrature size; `None` picks a power of two scaled with `1/(1 - |z|)`.
    pub n_quad: Option<usize>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BarycenterOptions {
    fn default() -> Self {
        Self { n_quad: None, tol: 1e-14, max_iter: 60 }
    }
}

fn default_quadrature(z: Complex64) -> usize {
    let want = (16.0 / (1.0 - z.norm())).ceil() as usize;
    want.next_power_of_two().clamp(256, 16384)
}

/// Image of `z` under the barycentric extension of `phi`.
pub fn douady_earle(phi: &CircleMap, z: Complex64) -> Result<Complex64> {
    douady_earle_with(phi, z, &BarycenterOptions::default())
}

pub fn douady_earle_with(phi: &CircleMap, z: Complex64, opts: &BarycenterOptions) -> Result<Complex64> {
    if !(z.norm() < 1.0) {
        return Err(Error::InvalidArgument(format!("extension point {z} is not in the open disk")));
    }
    let n = opts.n_quad.unwrap_or_else(|| default_quadrature(z));
    let one = Complex64::new(1.0, 0.0);
    let points: Vec<Complex64> = (0..n)
        .map(|k| {
            let zeta = Complex64::from_polar(1.0, k as f64 * TAU / n as f64);
            let theta = ((zeta + z) / (one + z.conj() * zeta)).arg();
            phi.point(theta)
        })
        .collect();
    barycenter(&points, opts)
}

/// Conformal barycentre of equally weighted points on the unit circle.
///
/// Newton iteration in the Möbius chart centred at the current iterate: with
/// `η_k = γ_w^{-1}(ξ_k)`, `V = mean η_k` and `m = mean η_k²`, the step `ε`
/// solves `ε - ε̄ m = V` and the iterate moves to `γ_w(ε)`; the step is halved
/// until `|V|` decreases.
pub fn barycenter(points: &[Complex64], opts: &BarycenterOptions) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let inv_n = 1.0 / points.len() as f64;
    let moments = |w: Complex64| {
        let mut v = Complex64::new(0.0, 0.0);
        let mut m2 = Complex64::new(0.0, 0.0);
        for &xi in points {
            let eta = (xi - w) / (one - w.conj() * xi);
            v += eta;
            m2 += eta * eta;
        }
        (v * inv_n, m2 * inv_n)
    };
    let mut w = points.iter().sum::<Complex64>() * inv_n;
    if w.norm() > 1.0 - 1e-9 {
        w *= (1.0 - 1e-9) / w.norm();
    }
    let (mut v, mut m2) = moments(w);
    for _ in 0..opts.max_iter {
        if v.norm() <= opts.tol {
            return Ok(w);
        }
        let (p, q) = (m2.re, m2.im);
        let det = 1.0 - p * p - q * q;
        if !(det > 0.0) {
            break;
        }
        let x = ((1.0 + p) * v.re + q * v.im) / det;
        let y = (q * v.re + (1.0 - p) * v.im) / det;
        let mut eps = Complex64::new(x, y);
        if eps.norm() > 0.5 {
            eps *= 0.5 / eps.norm();
        }
        let mut accepted = false;
        for _ in 0..40 {
            let cand = (eps + w) / (one + w.conj() * eps);
            let (cv, cm) = moments(cand);
            if cv.norm() < v.norm() {
                w = cand;
                v = cv;
                m2 = cm;
                accepted = true;
                break;
            }
            eps *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if v.norm() <= opts.tol.max(1e-12) {
        Ok(w)
    } else {
        Err(Error::NoConvergence { what: "barycentre", iterations: opts.max_iter, residual: v.norm() })
    }
}

/// Extension evaluated at every grid node (data-parallel over nodes).
pub fn extend_on_grid(phi: &CircleMap, grid: &Arc<DiskGrid>) -> Result<ComplexField> {
    let values: Result<Vec<Complex64>> =
        (0..grid.node_count()).into_par_iter().map(|n| douady_earle(phi, grid.z(n))).collect();
    ComplexField::new(grid.clone(), values?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{conjugate, MobiusTransform};

    #[test]
    fn identity_extends_to_identity() {
        let id = CircleMap::identity(256);
        for &z in &[Complex64::new(0.0, 0.0), Complex64::new(0.5, -0.3), Complex64::new(-0.9, 0.05)] {
            let w = douady_earle(&id, z).unwrap();
            assert!((w - z).norm() < 1e-12, "{z} -> {w}");
        }
    }

    #[test]
    fn rejects_points_outside_disk() {
        assert!(douady_earle(&CircleMap::identity(64), Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn conformal_naturality() {
        let phi = CircleMap::sine(0.5, 1024).unwrap();
        let g = MobiusTransform::from_disk(Complex64::new(0.3, 0.2), 0.5).unwrap();
        let gp = MobiusTransform::from_disk(Complex64::new(-0.1, 0.4), -1.0).unwrap();
        // douady_earle(γ' ∘ φ ∘ γ, z) = γ'(douady_earle(φ, γ(z)))
        let psi = conjugate(&gp, &phi, &g.inverse()).unwrap();
        for &z in &[Complex64::new(0.0, 0.0), Complex64::new(0.4, 0.4), Complex64::new(-0.6, 0.1)] {
            let lhs = douady_earle(&psi, z).unwrap();
            let rhs = gp.apply(douady_earle(&phi, g.apply(z)).unwrap());
            assert!((lhs - rhs).norm() < 1e-8, "{z}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn mobius_boundary_extends_to_mobius() {
        let g = MobiusTransform::from_disk(Complex64::new(0.3, -0.2), 0.7).unwrap();
        let phi = CircleMap::mobius(&g, 1024).unwrap();
        for &z in &[Complex64::new(0.0, 0.0), Complex64::new(0.6, 0.2)] {
            let w = douady_earle(&phi, z).unwrap();
            assert!((w - g.apply(z)).norm() < 1e-9);
        }
    }
}
