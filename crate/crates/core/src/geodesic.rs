//! Graph approximation of geodesic distance for `e^{2u} g_hyp`.
//!
//! Grid points are joined to their radial, angular and diagonal neighbours
//! (the centre to every point of ring 1). An edge between `p` and `q` has
//! length `e^{(u_p + u_q)/2} d_hyp(z_p, z_q)`. Off-grid points are attached
//! to the four corners of their interpolation cell.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::grid::{hyperbolic_distance, DiskGrid, ScalarField};
use crate::metric::MetricField;

#[derive(Debug, Clone)]
pub struct GraphMetric {
    u: ScalarField,
    u_points: Vec<f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl GraphMetric {
    pub fn new(metric: &MetricField) -> Self {
        let u = metric.u().clone();
        let g = u.grid().clone();
        let (n_r, n_t) = (g.n_r(), g.n_theta());
        let up = u.to_points();
        let mut adjacency = vec![Vec::new(); g.point_count()];
        let mut link = |p: usize, q: usize| {
            let w = (0.5 * (up[p] + up[q])).exp() * hyperbolic_distance(g.point_z(p), g.point_z(q));
            adjacency[p].push((q, w));
            adjacency[q].push((p, w));
        };
        for j in 0..n_t {
            link(0, g.point(1, j));
        }
        for i in 1..n_r {
            for j in 0..n_t {
                let p = g.point(i, j);
                link(p, g.point(i, j + 1));
                if i + 1 < n_r {
                    link(p, g.point(i + 1, j));
                    link(p, g.point(i + 1, j + 1));
                    link(p, g.point(i + 1, j + n_t - 1));
                }
            }
        }
        Self { u, u_points: up, adjacency }
    }

    pub fn grid(&self) -> &DiskGrid {
        self.u.grid()
    }

    /// Points attached to `w` and the edge lengths to them.
    fn attach(&self, w: Complex64) -> Vec<(usize, f64)> {
        let g = self.u.grid();
        let cell = g.locate(w);
        let uw = cell.value(&self.u);
        let up = &self.u_points;
        cell.corners()
            .iter()
            .map(|&(i, j)| {
                let p = g.point(i, j);
                (p, (0.5 * (uw + up[p])).exp() * hyperbolic_distance(w, g.point_z(p)))
            })
            .collect()
    }

    /// Distances from `w` to every grid point.
    pub fn distances_from(&self, w: Complex64) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.adjacency.len()];
        let mut heap = BinaryHeap::new();
        for (p, d) in self.attach(w) {
            if d < dist[p] {
                dist[p] = d;
                heap.push(Entry(d, p));
            }
        }
        while let Some(Entry(d, p)) = heap.pop() {
            if d > dist[p] {
                continue;
            }
            for &(q, w) in &self.adjacency[p] {
                let nd = d + w;
                if nd < dist[q] {
                    dist[q] = nd;
                    heap.push(Entry(nd, q));
                }
            }
        }
        dist
    }

    /// Distance to `w` given the output of [`Self::distances_from`] for the
    /// other endpoint.
    pub fn distance_to(&self, from: &[f64], w: Complex64) -> f64 {
        self.attach(w).into_iter().map(|(p, d)| from[p] + d).fold(f64::INFINITY, f64::min)
    }
}

/// Graph geodesic distance between two points for the metric `e^{2u} g_hyp`.
pub fn geodesic_distance(metric: &MetricField, x: Complex64, y: Complex64) -> f64 {
    let graph = GraphMetric::new(metric);
    graph.distance_to(&graph.distances_from(x), y)
}
