//! Polar discretisation of the unit disk.
//!
//! Radial nodes are placed uniformly in hyperbolic radius: ring `i` sits at
//! `r_i = tanh(s_i / 2)` with `s_i = i * ds`, so that ring `n_r - 1` (the rim)
//! sits at `r_max`. Ring 0 is the centre; it is stored as `n_theta` duplicated
//! entries so that every field keeps the row-major `(r, theta)` layout, but the
//! operators treat it as a single point.
//!
//! Two index spaces are used:
//!
//! * *node* indices `i * n_theta + j` address field storage;
//! * *point* indices address distinct geometric points: `0` for the centre and
//!   `1 + (i - 1) * n_theta + j` for rings `i >= 1`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Sparse row operator over grid points (CSR layout).
#[derive(Debug, Clone, Default)]
pub(crate) struct Stencil {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    coefs: Vec<f64>,
}

impl Stencil {
    fn with_rows(rows: usize) -> Self {
        let mut offsets = Vec::with_capacity(rows + 1);
        offsets.push(0);
        Self { offsets, cols: Vec::new(), coefs: Vec::new() }
    }

    fn push_row(&mut self, entries: &[(usize, f64)]) {
        for &(c, v) in entries {
            self.cols.push(c);
            self.coefs.push(v);
        }
        self.offsets.push(self.cols.len());
    }

    pub(crate) fn row(&self, p: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[p]..self.offsets[p + 1];
        self.cols[range.clone()].iter().copied().zip(self.coefs[range].iter().copied())
    }

    pub(crate) fn apply<T: FieldValue>(&self, p: usize, pts: &[T]) -> T {
        self.row(p).fold(T::zero(), |acc, (c, v)| acc + pts[c] * v)
    }
}

/// Polar grid on the disk of Euclidean radius `r_max`.
#[derive(Debug, Clone)]
pub struct DiskGrid {
    n_r: usize,
    n_theta: usize,
    r_max: f64,
    ds: f64,
    dtheta: f64,
    radii: Vec<f64>,
    hyp_radii: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    lap: Stencil,
    dx: Stencil,
    dy: Stencil,
}

impl DiskGrid {
    /// Builds the grid; see the module docs for the node layout.
    pub fn new(n_r: usize, n_theta: usize, r_max: f64) -> Result<Arc<Self>> {
        if n_r < 8 {
            return Err(Error::InvalidGrid(format!("n_r must be at least 8, got {n_r}")));
        }
        if n_theta < 8 || !n_theta.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_theta must be even and at least 8, got {n_theta}"
            )));
        }
        if !(r_max > 0.0 && r_max < 1.0) {
            return Err(Error::InvalidGrid(format!("r_max must lie in (0, 1), got {r_max}")));
        }
        let s_max = 2.0 * r_max.atanh();
        let ds = s_max / (n_r - 1) as f64;
        let dtheta = 2.0 * PI / n_theta as f64;
        let hyp_radii: Vec<f64> = (0..n_r)
            .map(|i| if i == n_r - 1 { s_max } else { i as f64 * ds })
            .collect();
        let mut radii: Vec<f64> = hyp_radii.iter().map(|s| (0.5 * s).tanh()).collect();
        radii[n_r - 1] = r_max;
        let cos = (0..n_theta).map(|j| (j as f64 * dtheta).cos()).collect();
        let sin = (0..n_theta).map(|j| (j as f64 * dtheta).sin()).collect();
        let mut grid = Self {
            n_r,
            n_theta,
            r_max,
            ds,
            dtheta,
            radii,
            hyp_radii,
            cos,
            sin,
            lap: Stencil::default(),
            dx: Stencil::default(),
            dy: Stencil::default(),
        };
        grid.build_stencils();
        Ok(Arc::new(grid))
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Hyperbolic radial spacing.
    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    /// Hyperbolic radius of the rim, `2 artanh(r_max)`.
    pub fn rim_hyperbolic_radius(&self) -> f64 {
        self.hyp_radii[self.n_r - 1]
    }

    pub fn node_count(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn point_count(&self) -> usize {
        1 + (self.n_r - 1) * self.n_theta
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn hyperbolic_radius(&self, i: usize) -> f64 {
        self.hyp_radii[i]
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    /// `(ring, angle)` indices of a node.
    pub fn ring_angle(&self, node: usize) -> (usize, usize) {
        (node / self.n_theta, node % self.n_theta)
    }

    pub fn z(&self, node: usize) -> Complex64 {
        let (i, j) = self.ring_angle(node);
        let r = self.radii[i];
        Complex64::new(r * self.cos[j], r * self.sin[j])
    }

    pub fn nodes(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.node_count()).map(|n| self.z(n))
    }

    pub fn is_rim(&self, node: usize) -> bool {
        node / self.n_theta == self.n_r - 1
    }

    pub fn is_rim_point(&self, p: usize) -> bool {
        p > (self.n_r - 2) * self.n_theta
    }

    /// Nodes on which the second-order operators are evaluated.
    pub fn interior_mask(&self) -> Vec<bool> {
        (0..self.node_count()).map(|n| !self.is_rim(n)).collect()
    }

    pub fn point(&self, i: usize, j: usize) -> usize {
        if i == 0 {
            0
        } else {
            1 + (i - 1) * self.n_theta + (j % self.n_theta)
        }
    }

    pub fn point_of_node(&self, node: usize) -> usize {
        let (i, j) = self.ring_angle(node);
        self.point(i, j)
    }

    /// Representative node of a point (the `j = 0` entry for the centre).
    pub fn node_of_point(&self, p: usize) -> usize {
        if p == 0 {
            0
        } else {
            self.n_theta + (p - 1)
        }
    }

    pub fn point_z(&self, p: usize) -> Complex64 {
        self.z(self.node_of_point(p))
    }

    /// Number of points strictly inside the rim.
    pub fn interior_point_count(&self) -> usize {
        1 + (self.n_r - 2) * self.n_theta
    }

    /// Hyperbolic area attached to each point: the area of the annular cell
    /// `[s - ds/2, s + ds/2] x [theta - dtheta/2, theta + dtheta/2]`, clipped to
    /// the rim. The weights sum exactly to the hyperbolic area of the disk.
    pub fn point_areas(&self) -> Vec<f64> {
        let s_max = self.rim_hyperbolic_radius();
        let mut w = Vec::with_capacity(self.point_count());
        w.push(2.0 * PI * ((0.5 * self.ds).cosh() - 1.0));
        for i in 1..self.n_r {
            let s = self.hyp_radii[i];
            let lo = s - 0.5 * self.ds;
            let hi = (s + 0.5 * self.ds).min(s_max);
            let cell = self.dtheta * (hi.cosh() - lo.cosh());
            for _ in 0..self.n_theta {
                w.push(cell);
            }
        }
        w
    }

    pub(crate) fn lap_stencil(&self) -> &Stencil {
        &self.lap
    }

    pub(crate) fn dx_stencil(&self) -> &Stencil {
        &self.dx
    }

    pub(crate) fn dy_stencil(&self) -> &Stencil {
        &self.dy
    }

    pub fn same_as(&self, other: &DiskGrid) -> bool {
        self.n_r == other.n_r && self.n_theta == other.n_theta && self.r_max == other.r_max
    }

    pub(crate) fn check_same(&self, other: &DiskGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{}@{} vs {}x{}@{}",
                self.n_r, self.n_theta, self.r_max, other.n_r, other.n_theta, other.r_max
            )))
        }
    }

    fn build_stencils(&mut self) {
        let n = self.n_theta;
        let rows = self.point_count();
        let mut lap = Stencil::with_rows(rows);
        let mut dx = Stencil::with_rows(rows);
        let mut dy = Stencil::with_rows(rows);

        // centre: ring-1 Fourier moments, exact for quadratics
        let r1 = self.radii[1];
        let ring1: Vec<usize> = (0..n).map(|j| self.point(1, j)).collect();
        let mut row: Vec<(usize, f64)> = ring1.iter().map(|&p| (p, 4.0 / (r1 * r1 * n as f64))).collect();
        row.push((0, -4.0 / (r1 * r1)));
        lap.push_row(&row);
        let c = 2.0 / (n as f64 * r1);
        let row: Vec<(usize, f64)> = (0..n).map(|j| (ring1[j], c * self.cos[j])).collect();
        dx.push_row(&row);
        let row: Vec<(usize, f64)> = (0..n).map(|j| (ring1[j], c * self.sin[j])).collect();
        dy.push_row(&row);

        // angular stencils, exact on the first Fourier mode
        let d1 = 1.0 / (2.0 * self.dtheta.sin());
        let d2 = 1.0 / (2.0 * (1.0 - self.dtheta.cos()));

        for i in 1..self.n_r {
            let r = self.radii[i];
            let rim = i == self.n_r - 1;
            let (ring_idx, xs) = if rim {
                ([i - 2, i - 1, i], [self.radii[i - 2], self.radii[i - 1], r])
            } else {
                ([i - 1, i, i + 1], [self.radii[i - 1], r, self.radii[i + 1]])
            };
            let w1 = lagrange_first(xs, r);
            let w2 = lagrange_second(xs);
            for j in 0..n {
                let (cs, sn) = (self.cos[j], self.sin[j]);
                let jp = (j + 1) % n;
                let jm = (j + n - 1) % n;
                let radial = |k: usize| self.point(ring_idx[k], j);

                let mut rx: Vec<(usize, f64)> = (0..3).map(|k| (radial(k), cs * w1[k])).collect();
                rx.push((self.point(i, jp), -sn / r * d1));
                rx.push((self.point(i, jm), sn / r * d1));
                dx.push_row(&rx);
                let mut ry: Vec<(usize, f64)> = (0..3).map(|k| (radial(k), sn * w1[k])).collect();
                ry.push((self.point(i, jp), cs / r * d1));
                ry.push((self.point(i, jm), -cs / r * d1));
                dy.push_row(&ry);

                if rim {
                    lap.push_row(&[]);
                } else {
                    let ang = d2 / (r * r);
                    let mut rl: Vec<(usize, f64)> =
                        (0..3).map(|k| (radial(k), w2[k] + w1[k] / r)).collect();
                    rl[1].1 -= 2.0 * ang;
                    rl.push((self.point(i, jp), ang));
                    rl.push((self.point(i, jm), ang));
                    lap.push_row(&rl);
                }
            }
        }
        self.lap = lap;
        self.dx = dx;
        self.dy = dy;
    }
}

/// First-derivative weights at `at` of the quadratic through `xs`.
fn lagrange_first(xs: [f64; 3], at: f64) -> [f64; 3] {
    let mut w = [0.0; 3];
    for k in 0..3 {
        let mut sum = 0.0;
        for m in 0..3 {
            if m == k {
                continue;
            }
            let mut prod = 1.0 / (xs[k] - xs[m]);
            for l in 0..3 {
                if l != k && l != m {
                    prod *= (at - xs[l]) / (xs[k] - xs[l]);
                }
            }
            sum += prod;
        }
        w[k] = sum;
    }
    w
}

/// Second-derivative weights of the quadratic through `xs`.
fn lagrange_second(xs: [f64; 3]) -> [f64; 3] {
    let mut w = [0.0; 3];
    for k in 0..3 {
        let mut denom = 1.0;
        for m in 0..3 {
            if m != k {
                denom *= xs[k] - xs[m];
            }
        }
        w[k] = 2.0 / denom;
    }
    w
}

/// Scalar types a [`Field`] can carry.
pub trait FieldValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync + 'static
{
    fn zero() -> Self;
    fn is_finite_value(&self) -> bool;
    fn abs_value(&self) -> f64;
}

impl FieldValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
    fn abs_value(&self) -> f64 {
        self.abs()
    }
}

impl FieldValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn abs_value(&self) -> f64 {
        self.norm()
    }
}

/// One value per grid node, stored row-major (ring-major, angle-minor).
#[derive(Debug, Clone)]
pub struct Field<T> {
    grid: Arc<DiskGrid>,
    values: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: FieldValue> Field<T> {
    pub fn new(grid: Arc<DiskGrid>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(n) = values.iter().position(|v| !v.is_finite_value()) {
            return Err(Error::InvalidArgument(format!("non-finite value at node {n}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Arc<DiskGrid>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count());
        Self { grid, values }
    }

    pub fn constant(grid: Arc<DiskGrid>, value: T) -> Self {
        let n = grid.node_count();
        Self { grid, values: vec![value; n] }
    }

    pub fn from_fn(grid: Arc<DiskGrid>, f: impl Fn(Complex64) -> T) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<DiskGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, node: usize) -> T {
        self.values[node]
    }

    pub fn map<U: FieldValue>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<U: FieldValue, V: FieldValue>(
        &self,
        other: &Field<U>,
        f: impl Fn(T, U) -> V,
    ) -> Result<Field<V>> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field { grid: self.grid.clone(), values })
    }

    /// Values at the distinct points (centre collapsed).
    pub fn to_points(&self) -> Vec<T> {
        let g = &self.grid;
        (0..g.point_count()).map(|p| self.values[g.node_of_point(p)]).collect()
    }

    pub fn from_points(grid: Arc<DiskGrid>, pts: &[T]) -> Self {
        let values = (0..grid.node_count()).map(|n| pts[grid.point_of_node(n)]).collect();
        Self { grid, values }
    }

    /// `max |f|` over all nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs_value()).fold(0.0, f64::max)
    }

    /// `max |f - g|` over all nodes.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).abs_value())
            .fold(0.0, f64::max))
    }
}

/// Curvature pinching `-b^2 <= K <= -a^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchingBounds {
    a: f64,
    b: f64,
}

impl PinchingBounds {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a <= b && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("pinching needs 0 < a <= b, got a={a}, b={b}")));
        }
        Ok(Self { a, b })
    }

    /// Tightest bounds containing every value of a strictly negative curvature field.
    pub fn of_curvature(k: &ScalarField) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (node, &v) in k.values().iter().enumerate() {
            if !(v < 0.0) || !v.is_finite() {
                return Err(Error::CurvatureNotNegative { value: v, node });
            }
            lo = lo.min(-v);
            hi = hi.max(-v);
        }
        Self::new(lo.sqrt(), hi.sqrt())
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// `rho^2 = 4 / (1 - |z|^2)^2`, the hyperbolic conformal factor.
pub fn hyperbolic_density(z: Complex64) -> f64 {
    let q = 1.0 - z.norm_sqr();
    4.0 / (q * q)
}

/// `log rho = ln 2 - ln(1 - |z|^2)`.
pub fn log_hyperbolic_factor(z: Complex64) -> f64 {
    std::f64::consts::LN_2 - (1.0 - z.norm_sqr()).ln()
}

/// Closed-form hyperbolic distance in the Poincaré disk.
pub fn hyperbolic_distance(a: Complex64, b: Complex64) -> f64 {
    let num = (a - b).norm();
    let den = (Complex64::new(1.0, 0.0) - a.conj() * b).norm();
    2.0 * (num / den).min(1.0 - f64::EPSILON).atanh()
}

pub fn hyperbolic_factor(grid: &Arc<DiskGrid>) -> ScalarField {
    ScalarField::from_fn(grid.clone(), hyperbolic_density)
}

fn apply_interior<T: FieldValue>(f: &Field<T>, stencil: &Stencil, scale: impl Fn(usize) -> f64) -> Field<T> {
    let g = f.grid();
    let pts = f.to_points();
    let out: Vec<T> = (0..g.point_count())
        .map(|p| if g.is_rim_point(p) { T::zero() } else { stencil.apply(p, &pts) * scale(p) })
        .collect();
    Field::from_points(g.clone(), &out)
}

/// Euclidean Laplacian `f_rr + f_r / r + f_thetatheta / r^2`. Rim nodes are not
/// evaluated and hold zero; use [`DiskGrid::interior_mask`] to select the
/// evaluated nodes.
pub fn euclidean_laplacian<T: FieldValue>(f: &Field<T>) -> Field<T> {
    apply_interior(f, f.grid().lap_stencil(), |_| 1.0)
}

/// Laplace–Beltrami operator of the hyperbolic metric, `rho^-2` times the
/// Euclidean Laplacian. Rim nodes hold zero.
pub fn hyperbolic_laplacian<T: FieldValue>(f: &Field<T>) -> Field<T> {
    let g = f.grid().clone();
    apply_interior(f, g.lap_stencil(), |p| 1.0 / hyperbolic_density(g.point_z(p)))
}

/// Cartesian partial derivatives `(f_x, f_y)` at every node; the rim uses
/// one-sided radial differences.
pub fn cartesian_gradient<T: FieldValue>(f: &Field<T>) -> (Field<T>, Field<T>) {
    let g = f.grid();
    let pts = f.to_points();
    let fx: Vec<T> = (0..g.point_count()).map(|p| g.dx_stencil().apply(p, &pts)).collect();
    let fy: Vec<T> = (0..g.point_count()).map(|p| g.dy_stencil().apply(p, &pts)).collect();
    (Field::from_points(g.clone(), &fx), Field::from_points(g.clone(), &fy))
}

/// `f_z = (f_x - i f_y) / 2` of a real field.
pub fn dz_real(f: &ScalarField) -> ComplexField {
    let (fx, fy) = cartesian_gradient(f);
    fx.zip_map(&fy, |x, y| Complex64::new(0.5 * x, -0.5 * y)).expect("same grid")
}

/// Gaussian curvature of `e^{2u} g_hyp`, i.e. `-e^{-2u} rho^-2 Δ_e (u + log rho)`.
/// The rim ring is not evaluated by the stencil and copies the adjacent ring.
pub fn gaussian_curvature(u: &ScalarField) -> ScalarField {
    let g = u.grid().clone();
    let log_sigma = ScalarField::from_fn(g.clone(), log_hyperbolic_factor)
        .zip_map(u, |a, b| a + b)
        .expect("same grid");
    let lap = euclidean_laplacian(&log_sigma);
    let mut k: Vec<f64> = (0..g.node_count())
        .map(|n| -(-2.0 * u.get(n)).exp() / hyperbolic_density(g.z(n)) * lap.get(n))
        .collect();
    let (nr, nt) = (g.n_r(), g.n_theta());
    for j in 0..nt {
        k[(nr - 1) * nt + j] = k[(nr - 2) * nt + j];
    }
    ScalarField::from_vec_unchecked(g, k)
}

/// Bilinear interpolation in the `(s, theta)` index space of the grid, with
/// its Cartesian gradient.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Cell {
    i: usize,
    j0: usize,
    j1: usize,
    a: f64,
    b: f64,
    rho: f64,
    cos: f64,
    sin: f64,
    s_scale: f64,
}

impl DiskGrid {
    /// Locates `w` (clamped radially to the rim) in the interpolation mesh.
    pub(crate) fn locate(&self, w: Complex64) -> Cell {
        let rho = w.norm().min(self.r_max);
        let s = 2.0 * rho.atanh();
        let x = s / self.ds;
        let i = (x.floor() as usize).min(self.n_r - 2);
        let a = (x - i as f64).clamp(0.0, 1.0);
        let mut th = w.im.atan2(w.re);
        if th < 0.0 {
            th += 2.0 * PI;
        }
        let y = th / self.dtheta;
        let j0 = (y.floor() as usize) % self.n_theta;
        let b = (y - y.floor()).clamp(0.0, 1.0);
        let (sin, cos) = th.sin_cos();
        Cell {
            i,
            j0,
            j1: (j0 + 1) % self.n_theta,
            a,
            b,
            rho,
            cos,
            sin,
            s_scale: 2.0 / (1.0 - rho * rho),
        }
    }
}

impl Cell {
    /// `(ring, angle)` indices of the cell corners.
    pub(crate) fn corners(&self) -> [(usize, usize); 4] {
        [(self.i, self.j0), (self.i, self.j1), (self.i + 1, self.j0), (self.i + 1, self.j1)]
    }

    pub(crate) fn value<T: FieldValue>(&self, f: &Field<T>) -> T {
        let g = f.grid();
        let v = |i: usize, j: usize| f.values[g.node(i, j)];
        let lo = v(self.i, self.j0) * (1.0 - self.b) + v(self.i, self.j1) * self.b;
        let hi = v(self.i + 1, self.j0) * (1.0 - self.b) + v(self.i + 1, self.j1) * self.b;
        lo * (1.0 - self.a) + hi * self.a
    }

    /// Cartesian gradient `(d/dx, d/dy)` of the interpolant.
    pub(crate) fn gradient<T: FieldValue>(&self, f: &Field<T>) -> (T, T) {
        let g = f.grid();
        let v = |i: usize, j: usize| f.values[g.node(i, j)];
        let lo = v(self.i, self.j0) * (1.0 - self.b) + v(self.i, self.j1) * self.b;
        let hi = v(self.i + 1, self.j0) * (1.0 - self.b) + v(self.i + 1, self.j1) * self.b;
        let d_s = (hi - lo) * (1.0 / g.ds);
        let d_th = ((v(self.i, self.j1) - v(self.i, self.j0)) * (1.0 - self.a)
            + (v(self.i + 1, self.j1) - v(self.i + 1, self.j0)) * self.a)
            * (1.0 / g.dtheta);
        let d_rho = d_s * self.s_scale;
        // (1/rho) d/dtheta; in the centre cell the interpolant is a * (...), so
        // the ratio a / rho stays bounded
        let th_over_rho = if self.rho > 1e-300 { d_th * (1.0 / self.rho) } else { T::zero() };
        (
            d_rho * self.cos - th_over_rho * self.sin,
            d_rho * self.sin + th_over_rho * self.cos,
        )
    }
}
