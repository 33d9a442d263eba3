use hdl_core::circle::{mobius_act, CircleMap, MobiusTransform};
use hdl_core::diagnostics::{boundary_trace, fit_qi_constant, gromov_product, hopf_fields};
use hdl_core::douady_earle::douady_earle;
use hdl_core::geodesic::geodesic_distance;
use hdl_core::grid::{hyperbolic_distance, ComplexField, DiskGrid, PinchingBounds, ScalarField};
use hdl_core::harmonic::{solve_harmonic, DiskMap, Initializer};
use hdl_core::io::{circle_from_text, circle_to_text, decode_field, decode_metric, encode_field, encode_metric};
use hdl_core::metric::MetricField;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `a z + b z̄ + e z²`, small enough to stay inside the disk.
fn poly_map(a: Complex64, b: Complex64, e: Complex64) -> DiskMap {
    let g = DiskGrid::new(12, 24, 0.9).unwrap();
    let target = MetricField::hyperbolic(&g);
    DiskMap::from_field(ComplexField::from_fn(g, |z| a * z + b * z.conj() + e * z * z), target).unwrap()
}

fn coeff(scale: f64) -> impl Strategy<Value = Complex64> {
    (-scale..scale, -scale..scale).prop_map(|(x, y)| c(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hopf_identities_hold_on_the_mask(a in coeff(0.4), b in coeff(0.2), e in coeff(0.1)) {
        let f = hopf_fields(&poly_map(a, b, e));
        for n in (0..f.mask.len()).filter(|&n| f.mask[n]) {
            let (h, l, j) = (f.h.get(n), f.l.get(n), f.j.get(n));
            let m2 = f.mu.get(n).norm_sqr();
            prop_assert!((m2 - l / h).abs() <= 1e-12 * (1.0 + l / h));
            prop_assert!((1.0 - m2 - j / h).abs() <= 1e-12 * (1.0 + l / h));
            prop_assert!(((1.0 - m2) / (1.0 + m2) - j / (h + l)).abs() <= 1e-12);
        }
    }

    #[test]
    fn jacobian_is_exactly_h_minus_l(a in coeff(0.4), b in coeff(0.2), e in coeff(0.1)) {
        let f = hopf_fields(&poly_map(a, b, e));
        for n in 0..f.mask.len() {
            prop_assert_eq!(f.j.get(n), f.h.get(n) - f.l.get(n));
        }
    }

    #[test]
    fn ell_is_positive_where_jacobian_is(a in coeff(0.4), b in coeff(0.2), e in coeff(0.1)) {
        let f = hopf_fields(&poly_map(a, b, e));
        for n in (0..f.mask.len()).filter(|&n| f.mask[n] && f.j.get(n) > 0.0) {
            prop_assert!(f.mu.get(n).norm() < 1.0);
            prop_assert!(f.ell.get(n) > 0.0);
        }
    }

    #[test]
    fn field_round_trip_is_bit_exact(n_r in 8usize..14, half_t in 4usize..12, r in 0.1f64..0.99, seed in any::<u64>()) {
        let g = DiskGrid::new(n_r, 2 * half_t, hdl_core::io::canonical_r_max(r)).unwrap();
        let f = ComplexField::from_fn(g, |z| c((z.re * seed as f64).sin(), z.im.exp()));
        let back: ComplexField = decode_field(&encode_field(&f)).unwrap();
        prop_assert!(back.grid().same_as(f.grid()));
        for (x, y) in f.values().iter().zip(back.values()) {
            prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
            prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }

    #[test]
    fn metric_round_trip(a in 0.5f64..1.0, extra in 0.0f64..2.0, res in 0.0f64..1e-6) {
        let g = DiskGrid::new(8, 12, 0.9).unwrap();
        let u = ScalarField::from_fn(g, |z| -0.3 * z.norm_sqr());
        let m = MetricField::from_parts(u, PinchingBounds::new(a, a + extra).unwrap(), res);
        let back = decode_metric(&encode_metric(&m)).unwrap();
        prop_assert_eq!(back.u().values(), m.u().values());
        prop_assert_eq!(back.bounds(), m.bounds());
        prop_assert_eq!(back.residual_norm(), m.residual_norm());
    }

    #[test]
    fn circle_text_round_trip(amp in -0.95f64..0.95) {
        let phi = CircleMap::sine(amp, 128).unwrap();
        let back = circle_from_text(&circle_to_text(&phi)).unwrap();
        prop_assert_eq!(back.samples(), phi.samples());
    }

    #[test]
    fn qi_bisection_matches_closed_form(pairs in prop::collection::vec((0.01f64..20.0, 0.0f64..30.0), 1..40)) {
        // per pair, the smallest c >= 1 with d/c - c <= d' <= c d + c
        let per_pair = |&(d, dt): &(f64, f64)| {
            let lower = (-dt + (dt * dt + 4.0 * d).sqrt()) / 2.0;
            1f64.max(lower).max(dt / (d + 1.0))
        };
        let exact = pairs.iter().map(per_pair).fold(1.0, f64::max);
        let fit = fit_qi_constant(&pairs);
        prop_assert!((fit - exact).abs() <= 1e-12 * exact, "{fit} vs {exact}");
    }

    #[test]
    fn graph_distance_dominates_hyperbolic(x in coeff(0.6), y in coeff(0.6)) {
        let g = DiskGrid::new(12, 24, 0.9).unwrap();
        let m = MetricField::hyperbolic(&g);
        prop_assert!(geodesic_distance(&m, x, y) >= hyperbolic_distance(x, y) - 1e-12);
    }

    #[test]
    fn gromov_product_is_symmetric_and_bounded(x in coeff(0.6), y in coeff(0.6)) {
        let g = DiskGrid::new(10, 20, 0.9).unwrap();
        let m = MetricField::hyperbolic(&g);
        let base = c(0.0, 0.0);
        let xy = gromov_product(&m, x, y, base);
        let yx = gromov_product(&m, y, x, base);
        prop_assert!((xy - yx).abs() < 1e-12);
        prop_assert!(xy <= geodesic_distance(&m, x, base).min(geodesic_distance(&m, y, base)) + 1e-12);
    }

    #[test]
    fn douady_earle_commutes_with_mobius(a in coeff(0.4), psi in -3.0f64..3.0, z in coeff(0.5), amp in -0.6f64..0.6) {
        let gamma = MobiusTransform::from_disk(a, psi).unwrap();
        let phi = CircleMap::sine(amp, 512).unwrap();
        let lhs = douady_earle(&mobius_act(&gamma, &phi).unwrap(), z).unwrap();
        let rhs = gamma.apply(douady_earle(&phi, z).unwrap());
        prop_assert!((lhs - rhs).norm() < 1e-6, "{lhs} vs {rhs}");
    }
}

#[test]
fn trace_at_the_rim_is_the_boundary_data() {
    let g = DiskGrid::new(12, 24, 0.9).unwrap();
    let phi = CircleMap::sine(0.4, 128).unwrap();
    let target = MetricField::hyperbolic(&g);
    let h = solve_harmonic(&target, &phi, &g, &Initializer::DouadyEarle, 1e-8).unwrap();
    let trace = boundary_trace(&h, 1.0).unwrap();
    assert_eq!(trace.samples(), phi.samples());
}
