//! Increasing circle homeomorphisms and the Möbius group acting on them.
//!
//! A [`CircleMap`] is stored through its lift `Φ: R -> R`, sampled at
//! `theta_j = 2 pi j / n_s` and extended by `Φ(θ + 2π) = Φ(θ) + 2π`. Between
//! samples the lift is a cubic Hermite interpolant; the slopes are either the
//! exact derivative samples (C1-tagged maps) or monotone (harmonic-mean)
//! slopes computed from the data.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 64;
/// Sample count used by the built-in maps.
pub const DEFAULT_SAMPLES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Sampled,
    C1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircleMap {
    samples: Vec<f64>,
    slopes: Vec<f64>,
    smoothness: Smoothness,
}

impl CircleMap {
    /// Sampled map with monotone slopes. Fails unless the samples increase
    /// strictly, including across the periodic seam.
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        check_lift(&samples)?;
        let n = samples.len();
        let h = TAU / n as f64;
        let sec: Vec<f64> = (0..n).map(|j| (lift_at(&samples, j as isize + 1) - samples[j]) / h).collect();
        let slopes = (0..n)
            .map(|j| {
                let (a, b) = (sec[(j + n - 1) % n], sec[j]);
                2.0 * a * b / (a + b)
            })
            .collect();
        Ok(Self { samples, slopes, smoothness: Smoothness::Sampled })
    }

    /// C1 map with exact derivative samples, which must be positive.
    pub fn from_samples_and_derivatives(samples: Vec<f64>, derivatives: Vec<f64>) -> Result<Self> {
        check_lift(&samples)?;
        if derivatives.len() != samples.len() {
            return Err(Error::InvalidArgument("derivative count differs from sample count".into()));
        }
        if let Some(index) = derivatives.iter().position(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::NotMonotone { index });
        }
        Ok(Self { samples, slopes: derivatives, smoothness: Smoothness::C1 })
    }

    /// Samples an analytic lift and its derivative.
    pub fn from_fn(n_s: usize, lift: impl Fn(f64) -> f64, derivative: impl Fn(f64) -> f64) -> Result<Self> {
        let h = TAU / n_s as f64;
        let samples = (0..n_s).map(|j| lift(j as f64 * h)).collect();
        let derivs = (0..n_s).map(|j| derivative(j as f64 * h)).collect();
        Self::from_samples_and_derivatives(samples, derivs)
    }

    pub fn identity(n_s: usize) -> Self {
        Self::from_fn(n_s, |t| t, |_| 1.0).expect("identity is a valid lift")
    }

    /// `θ ↦ θ + amplitude · sin θ`, a diffeomorphism for `|amplitude| < 1`.
    pub fn sine(amplitude: f64, n_s: usize) -> Result<Self> {
        if !(amplitude.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "sine amplitude must lie in (-1, 1), got {amplitude}"
            )));
        }
        Self::from_fn(n_s, |t| t + amplitude * t.sin(), |t| 1.0 + amplitude * t.cos())
    }

    /// Boundary action of an orientation-preserving Möbius transformation.
    pub fn mobius(gamma: &MobiusTransform, n_s: usize) -> Result<Self> {
        if !gamma.preserves_orientation() {
            return Err(Error::NotMonotone { index: 0 });
        }
        Self::from_fn(n_s, |t| gamma.boundary_lift(t), |t| gamma.boundary_derivative(t))
    }

    /// Piecewise-linear lift through `(theta, value)` breakpoints, extended
    /// periodically. Breakpoint angles must lie in `[0, 2π)` and increase.
    pub fn piecewise(breakpoints: &[(f64, f64)], n_s: usize) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidArgument("piecewise map needs at least two breakpoints".into()));
        }
        for w in breakpoints.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return Err(Error::InvalidArgument("breakpoints must increase in both coordinates".into()));
            }
        }
        let (t0, v0) = breakpoints[0];
        let (tl, vl) = *breakpoints.last().unwrap();
        if t0 < 0.0 || tl >= TAU || vl >= v0 + TAU {
            return Err(Error::InvalidArgument("breakpoints must span less than one turn".into()));
        }
        // close the loop with the first breakpoint shifted by one turn
        let mut knots = breakpoints.to_vec();
        knots.push((t0 + TAU, v0 + TAU));
        let eval = |t: f64| {
            let mut x = t;
            while x < t0 {
                x += TAU;
            }
            while x >= t0 + TAU {
                x -= TAU;
            }
            let shift = t - x;
            let k = knots.windows(2).position(|w| x < w[1].0).unwrap_or(knots.len() - 2);
            let (a, b) = (knots[k], knots[k + 1]);
            a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0) + shift
        };
        let h = TAU / n_s as f64;
        Self::from_samples((0..n_s).map(|j| eval(j as f64 * h)).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    /// Derivative samples for C1-tagged maps.
    pub fn derivatives(&self) -> Option<&[f64]> {
        match self.smoothness {
            Smoothness::C1 => Some(&self.slopes),
            Smoothness::Sampled => None,
        }
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.samples.len() as f64
    }

    /// Lift sample at any integer index, periodically extended.
    pub fn sample(&self, j: isize) -> f64 {
        lift_at(&self.samples, j)
    }

    fn slope(&self, j: isize) -> f64 {
        self.slopes[j.rem_euclid(self.slopes.len() as isize) as usize]
    }

    fn locate(&self, theta: f64) -> (isize, f64) {
        let h = self.spacing();
        let x = theta / h;
        let j = x.floor();
        (j as isize, x - j)
    }

    /// `Φ(θ)` for any real `θ`.
    pub fn eval(&self, theta: f64) -> f64 {
        let h = self.spacing();
        let (j, t) = self.locate(theta);
        let (p0, p1) = (self.sample(j), self.sample(j + 1));
        let (m0, m1) = (self.slope(j) * h, self.slope(j + 1) * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * m1
    }

    /// `Φ'(θ)` of the interpolant.
    pub fn derivative(&self, theta: f64) -> f64 {
        let h = self.spacing();
        let (j, t) = self.locate(theta);
        let (p0, p1) = (self.sample(j), self.sample(j + 1));
        let (m0, m1) = (self.slope(j) * h, self.slope(j + 1) * h);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * p0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * p1 + (3.0 * t2 - 2.0 * t) * m1)
            / h
    }

    /// Point `e^{iΦ(θ)}` of the unit circle.
    pub fn point(&self, theta: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.eval(theta))
    }

    /// Resamples onto `n_s` uniform angles, keeping the C1 tag.
    pub fn resample(&self, n_s: usize) -> Result<Self> {
        let h = TAU / n_s as f64;
        let samples: Vec<f64> = (0..n_s).map(|j| self.eval(j as f64 * h)).collect();
        match self.smoothness {
            Smoothness::C1 => {
                Self::from_samples_and_derivatives(samples, (0..n_s).map(|j| self.derivative(j as f64 * h)).collect())
            }
            Smoothness::Sampled => Self::from_samples(samples),
        }
    }
}

fn lift_at(samples: &[f64], j: isize) -> f64 {
    let n = samples.len() as isize;
    let k = j.rem_euclid(n);
    samples[k as usize] + TAU * ((j - k) / n) as f64
}

fn check_lift(samples: &[f64]) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "circle map needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NotMonotone { index });
    }
    for j in 0..samples.len() {
        if !(lift_at(samples, j as isize + 1) > samples[j]) {
            return Err(Error::NotMonotone { index: j });
        }
    }
    Ok(())
}

/// Wraps an angle difference into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// `sup_θ` of the arc distance between `φ1(θ)` and `φ2(θ)` over `n_eval`
/// uniform angles.
pub fn sup_distance(a: &CircleMap, b: &CircleMap, n_eval: usize) -> f64 {
    let h = TAU / n_eval as f64;
    (0..n_eval)
        .map(|j| wrap_angle(a.eval(j as f64 * h) - b.eval(j as f64 * h)).abs())
        .fold(0.0, f64::max)
}

/// Lower bound for the quasi-symmetry constant, with the probe resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiSymmetry {
    pub constant: f64,
    pub n_probe: usize,
}

/// Maximises `max(ratio, 1/ratio)` of adjacent arc images over an
/// `n_probe x n_probe` grid of centres `θ` and half-widths `α ∈ (0, π]`.
pub fn quasisymmetry_constant(phi: &CircleMap, n_probe: usize) -> Result<QuasiSymmetry> {
    if n_probe < 16 {
        return Err(Error::InvalidArgument(format!("n_probe must be at least 16, got {n_probe}")));
    }
    let dt = TAU / n_probe as f64;
    let da = PI / n_probe as f64;
    let mut best = 1.0f64;
    for i in 0..n_probe {
        let theta = i as f64 * dt;
        let centre = phi.eval(theta);
        for k in 1..=n_probe {
            let alpha = k as f64 * da;
            let fwd = phi.eval(theta + alpha) - centre;
            let bwd = centre - phi.eval(theta - alpha);
            if !(fwd > 0.0 && bwd > 0.0) {
                return Err(Error::NotMonotone { index: i });
            }
            let ratio = fwd / bwd;
            best = best.max(ratio.max(1.0 / ratio));
        }
    }
    Ok(QuasiSymmetry { constant: best, n_probe })
}

/// Convolves the lift with a smooth positive bump of half-width `width`.
/// The result is C1-tagged; its derivative samples are kernel averages of
/// centred lift increments and therefore positive.
pub fn mollify(phi: &CircleMap, width: f64) -> Result<CircleMap> {
    if !(width > 0.0 && width < PI) {
        return Err(Error::InvalidArgument(format!("mollifier width must lie in (0, π), got {width}")));
    }
    let n = phi.len();
    let h = phi.spacing();
    let reach = ((width / h).ceil() as isize).max(1);
    let mut kernel: Vec<(isize, f64)> = (-reach..=reach)
        .filter_map(|m| {
            let x = m as f64 * h / width;
            (x.abs() < 1.0).then(|| (m, (-1.0 / (1.0 - x * x)).exp()))
        })
        .collect();
    if kernel.is_empty() {
        kernel.push((0, 1.0));
    }
    let mass: f64 = kernel.iter().map(|k| k.1).sum();
    for k in &mut kernel {
        k.1 /= mass;
    }
    let samples = (0..n as isize)
        .map(|j| kernel.iter().map(|&(m, w)| w * phi.sample(j - m)).sum())
        .collect();
    let derivs = (0..n as isize)
        .map(|j| {
            kernel
                .iter()
                .map(|&(m, w)| w * (phi.sample(j - m + 1) - phi.sample(j - m - 1)) / (2.0 * h))
                .sum()
        })
        .collect();
    CircleMap::from_samples_and_derivatives(samples, derivs)
}

/// `Φ_t = (1 - t) Id + t Φ`.
pub fn linear_deformation(phi: &CircleMap, t: f64) -> Result<CircleMap> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("deformation parameter must lie in [0, 1], got {t}")));
    }
    let derivs = phi
        .derivatives()
        .ok_or_else(|| Error::InvalidArgument("linear deformation needs a C1-tagged map".into()))?;
    let h = phi.spacing();
    let samples = phi.samples().iter().enumerate().map(|(j, &v)| (1.0 - t) * (j as f64 * h) + t * v).collect();
    let d = derivs.iter().map(|&d| (1.0 - t) + t * d).collect();
    CircleMap::from_samples_and_derivatives(samples, d)
}

/// Isometry of the hyperbolic disk, stored as a real 2x2 matrix acting on the
/// upper half-plane (`w ↦ M w` when `det M > 0`, `w ↦ M w̄` otherwise),
/// normalised to `|det M| = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusTransform {
    m: [f64; 4],
}

type CMat = [Complex64; 4];

fn cmul(a: &CMat, b: &CMat) -> CMat {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

// Cayley transform w ↦ (w - i)/(w + i) and its inverse ζ ↦ i(1 + ζ)/(1 - ζ)
const CAYLEY: CMat = [ONE, Complex64::new(0.0, -1.0), ONE, I];
const CAYLEY_INV: CMat = [I, I, Complex64::new(-1.0, 0.0), ONE];

impl MobiusTransform {
    pub fn identity() -> Self {
        Self { m: [1.0, 0.0, 0.0, 1.0] }
    }

    /// Half-plane matrix `[[a, b], [c, d]]`; any nonzero determinant.
    pub fn from_half_plane(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det != 0.0 && det.is_finite()) {
            return Err(Error::InvalidArgument("Möbius matrix must have nonzero determinant".into()));
        }
        let s = 1.0 / det.abs().sqrt();
        Ok(Self { m: [a * s, b * s, c * s, d * s] })
    }

    /// Disk automorphism `z ↦ e^{iψ} (z + a) / (1 + ā z)`, `|a| < 1`.
    pub fn from_disk(a: Complex64, psi: f64) -> Result<Self> {
        if !(a.norm() < 1.0) {
            return Err(Error::InvalidArgument(format!("disk translation needs |a| < 1, got {a}")));
        }
        let e = Complex64::from_polar(1.0, 0.5 * psi);
        let disk = [e, e * a, e.conj() * a.conj(), e.conj()];
        let m = cmul(&cmul(&CAYLEY_INV, &disk), &CAYLEY);
        // the product is real up to a common complex scale
        let pivot = m.iter().copied().fold(Complex64::new(0.0, 0.0), |acc, x| if x.norm() > acc.norm() { x } else { acc });
        let phase = pivot / pivot.norm();
        let r: Vec<f64> = m.iter().map(|x| (x / phase).re).collect();
        Self::from_half_plane(r[0], r[1], r[2], r[3])
    }

    pub fn matrix(&self) -> [f64; 4] {
        self.m
    }

    pub fn determinant(&self) -> f64 {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    pub fn preserves_orientation(&self) -> bool {
        self.determinant() > 0.0
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let (a, b) = (self.m, other.m);
        Self {
            m: [
                a[0] * b[0] + a[1] * b[2],
                a[0] * b[1] + a[1] * b[3],
                a[2] * b[0] + a[3] * b[2],
                a[2] * b[1] + a[3] * b[3],
            ],
        }
    }

    pub fn inverse(&self) -> Self {
        let [a, b, c, d] = self.m;
        let det = self.determinant();
        Self { m: [d / det, -b / det, -c / det, a / det] }
    }

    /// Equality as group elements (matrices up to sign).
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let same = self.m.iter().zip(&other.m).all(|(x, y)| (x - y).abs() <= tol);
        let flip = self.m.iter().zip(&other.m).all(|(x, y)| (x + y).abs() <= tol);
        same || flip
    }

    /// Complex disk matrix `[[p, q], [r, s]]`; the action is `ζ ↦ (pζ + q)/(rζ + s)`
    /// applied to `ζ` or, for orientation-reversing elements, to `ζ̄`.
    fn disk_matrix(&self) -> CMat {
        let mut m = self.m;
        if !self.preserves_orientation() {
            // M w̄ = (M N)(-w̄) with N = diag(-1, 1); -w̄ corresponds to ζ̄ in the disk
            m = [-m[0], m[1], -m[2], m[3]];
        }
        let real: CMat = m.map(|x| Complex64::new(x, 0.0));
        cmul(&cmul(&CAYLEY, &real), &CAYLEY_INV)
    }

    /// Action on a point of the closed disk.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        let [p, q, r, s] = self.disk_matrix();
        let zeta = if self.preserves_orientation() { z } else { z.conj() };
        (p * zeta + q) / (r * zeta + s)
    }

    /// Action on the real line of the half-plane model.
    pub fn apply_real(&self, x: f64) -> f64 {
        let [a, b, c, d] = self.m;
        (a * x + b) / (c * x + d)
    }

    /// Continuous lift of the boundary action (orientation-preserving case),
    /// `θ + arg p - arg s + Arg(1 + (q/p) e^{-iθ}) - Arg(1 + (r/s) e^{iθ})`.
    pub fn boundary_lift(&self, theta: f64) -> f64 {
        let [p, q, r, s] = self.disk_matrix();
        let e = Complex64::from_polar(1.0, theta);
        let base = wrap_angle(p.arg() - s.arg());
        theta + base + (ONE + q / p * e.conj()).arg() - (ONE + r / s * e).arg()
    }

    pub fn boundary_derivative(&self, theta: f64) -> f64 {
        let [p, q, r, s] = self.disk_matrix();
        let e = Complex64::from_polar(1.0, theta);
        let a = q / p * e.conj();
        let b = r / s * e;
        1.0 - (a / (ONE + a)).re - (b / (ONE + b)).re
    }
}

/// `γ ∘ φ`, re-lifted on the sample grid of `φ`.
pub fn mobius_act(gamma: &MobiusTransform, phi: &CircleMap) -> Result<CircleMap> {
    conjugate(gamma, phi, &MobiusTransform::identity())
}

/// `γ' ∘ φ ∘ γ^{-1}` sampled on the grid of `φ`.
pub fn conjugate(outer: &MobiusTransform, phi: &CircleMap, inner: &MobiusTransform) -> Result<CircleMap> {
    if !outer.preserves_orientation() || !inner.preserves_orientation() {
        return Err(Error::InvalidArgument("conjugation needs orientation-preserving elements".into()));
    }
    let inv = inner.inverse();
    let n = phi.len();
    let h = phi.spacing();
    let mut samples = Vec::with_capacity(n);
    let mut derivs = Vec::with_capacity(n);
    for j in 0..n {
        let theta = j as f64 * h;
        let x = inv.boundary_lift(theta);
        let y = phi.eval(x);
        samples.push(outer.boundary_lift(y));
        derivs.push(outer.boundary_derivative(y) * phi.derivative(x) * inv.boundary_derivative(theta));
    }
    match phi.smoothness() {
        Smoothness::C1 => CircleMap::from_samples_and_derivatives(samples, derivs),
        Smoothness::Sampled => CircleMap::from_samples(samples),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_or_decreasing_lifts() {
        assert!(CircleMap::from_samples(vec![0.0; 10]).is_err());
        let mut s: Vec<f64> = (0..64).map(|j| j as f64 * TAU / 64.0).collect();
        s[10] = s[9];
        assert!(matches!(CircleMap::from_samples(s), Err(Error::NotMonotone { index: 9 })));
    }

    #[test]
    fn lift_is_periodic() {
        let phi = CircleMap::sine(0.5, 128).unwrap();
        for &t in &[0.1, 1.3, 5.9] {
            assert!((phi.eval(t + TAU) - phi.eval(t) - TAU).abs() < 1e-12);
            assert!((phi.eval(t) - (t + 0.5 * t.sin())).abs() < 1e-6);
        }
    }

    #[test]
    fn identity_and_rotation_are_symmetric() {
        let id = CircleMap::identity(256);
        assert!((quasisymmetry_constant(&id, 32).unwrap().constant - 1.0).abs() < 1e-12);
        let rot = CircleMap::from_fn(256, |t| t + 0.7, |_| 1.0).unwrap();
        assert!((quasisymmetry_constant(&rot, 32).unwrap().constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quasisymmetry_rejects_small_probe() {
        assert!(quasisymmetry_constant(&CircleMap::identity(64), 8).is_err());
    }

    #[test]
    fn mollify_identity_is_identity() {
        let id = CircleMap::identity(256);
        let m = mollify(&id, 0.3).unwrap();
        for (a, b) in m.samples().iter().zip(id.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(m.smoothness(), Smoothness::C1);
        assert!(mollify(&id, 0.0).is_err());
        assert!(mollify(&id, 4.0).is_err());
    }

    #[test]
    fn mollified_sine_has_positive_derivative() {
        let phi = CircleMap::sine(0.9, 512).unwrap();
        let m = mollify(&phi, 0.1).unwrap();
        assert!(m.derivatives().unwrap().iter().all(|&d| d > 0.0));
    }

    #[test]
    fn deformation_endpoints() {
        let phi = CircleMap::sine(0.5, 256).unwrap();
        let d0 = linear_deformation(&phi, 0.0).unwrap();
        let id = CircleMap::identity(256);
        assert_eq!(d0.samples(), id.samples());
        let d1 = linear_deformation(&phi, 1.0).unwrap();
        assert_eq!(d1.samples(), phi.samples());
        let t = 0.3;
        let dt = linear_deformation(&phi, t).unwrap();
        for (j, d) in dt.derivatives().unwrap().iter().enumerate() {
            assert_eq!(*d, (1.0 - t) + t * phi.derivatives().unwrap()[j]);
        }
        assert!(linear_deformation(&phi, 1.5).is_err());
        let sampled = CircleMap::from_samples(phi.samples().to_vec()).unwrap();
        assert!(linear_deformation(&sampled, 0.5).is_err());
    }

    #[test]
    fn half_plane_dilation_acts_by_scaling() {
        let s = 1.3;
        let g = MobiusTransform::from_half_plane(s, 0.0, 0.0, 1.0 / s).unwrap();
        let cayley = |x: f64| (Complex64::new(x, 0.0) - I) / (Complex64::new(x, 0.0) + I);
        for &x in &[-3.0, -0.4, 0.2, 1.7, 10.0] {
            let theta = cayley(x).arg();
            let expected = cayley(s * s * x);
            let got = Complex64::from_polar(1.0, g.boundary_lift(theta));
            assert!((got - expected).norm() < 1e-12, "x={x}");
            assert!((g.apply_real(x) - s * s * x).abs() < 1e-12);
        }
    }

    #[test]
    fn from_disk_matches_formula() {
        let a = Complex64::new(0.2, -0.1);
        let g = MobiusTransform::from_disk(a, 0.4).unwrap();
        for &z in &[Complex64::new(0.0, 0.0), Complex64::new(0.3, 0.5), Complex64::new(-0.7, 0.1)] {
            let expected = Complex64::from_polar(1.0, 0.4) * (z + a) / (ONE + a.conj() * z);
            assert!((g.apply(z) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn boundary_lift_matches_action() {
        let g = MobiusTransform::from_disk(Complex64::new(0.5, 0.3), 1.0).unwrap();
        let mut prev = g.boundary_lift(0.0);
        for k in 1..=400 {
            let t = k as f64 * TAU / 400.0;
            let l = g.boundary_lift(t);
            assert!(l > prev);
            prev = l;
            let p = g.apply(Complex64::from_polar(1.0, t));
            assert!((Complex64::from_polar(1.0, l) - p).norm() < 1e-12);
            let fd = (g.boundary_lift(t + 1e-6) - g.boundary_lift(t - 1e-6)) / 2e-6;
            assert!((fd - g.boundary_derivative(t)).abs() < 1e-6);
        }
        assert!((g.boundary_lift(TAU) - g.boundary_lift(0.0) - TAU).abs() < 1e-12);
    }

    #[test]
    fn group_law() {
        let a = MobiusTransform::from_half_plane(2.0, 1.0, 0.5, 1.0).unwrap();
        let b = MobiusTransform::from_half_plane(1.0, -3.0, 0.0, 1.0).unwrap();
        let c = MobiusTransform::from_half_plane(0.0, 1.0, 1.0, 0.0).unwrap(); // reversing
        assert!(!c.preserves_orientation());
        let l = a.compose(&b).compose(&c);
        let r = a.compose(&b.compose(&c));
        assert!(l.approx_eq(&r, 1e-14));
        assert!(a.compose(&a.inverse()).approx_eq(&MobiusTransform::identity(), 1e-14));
        assert!(c.compose(&c.inverse()).approx_eq(&MobiusTransform::identity(), 1e-14));
        let z = Complex64::new(0.3, -0.2);
        assert!((l.apply(z) - a.apply(b.apply(c.apply(z)))).norm() < 1e-12);
    }

    #[test]
    fn conjugation_identities() {
        let phi = CircleMap::sine(0.5, 256).unwrap();
        let id = MobiusTransform::identity();
        let same = conjugate(&id, &phi, &id).unwrap();
        for (a, b) in same.samples().iter().zip(phi.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
        let g = MobiusTransform::from_disk(Complex64::new(0.4, 0.1), 0.3).unwrap();
        let conj_id = conjugate(&g, &CircleMap::identity(256), &g).unwrap();
        assert!(sup_distance(&conj_id, &CircleMap::identity(256), 1000) < 1e-10);
    }

    #[test]
    fn hyperbolic_element_is_not_symmetric() {
        let g = MobiusTransform::from_half_plane(1.5, 0.0, 0.0, 1.0 / 1.5).unwrap();
        let phi = CircleMap::mobius(&g, 512).unwrap();
        let k = quasisymmetry_constant(&phi, 64).unwrap().constant;
        assert!(k.is_finite() && k > 1.01);
    }

    #[test]
    fn piecewise_map() {
        let phi = CircleMap::piecewise(&[(0.0, 0.0), (PI, 1.0), (4.0, 4.0)], 128).unwrap();
        assert_eq!(phi.smoothness(), Smoothness::Sampled);
        assert!((phi.eval(PI) - 1.0).abs() < 1e-3);
        assert!(CircleMap::piecewise(&[(0.0, 0.0)], 128).is_err());
    }
}
