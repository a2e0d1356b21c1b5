use std::sync::Arc;

use fracmax::grid::{build_ball_family, integrate, pairwise_sum, sample};
use fracmax::maximal::{MeasureMode, PreparedFamily};
use fracmax::{Ball, GroupModel, GroupPoint, LatticeDomain, RadiusLadder};
use proptest::prelude::*;

fn heis_point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn left_translation_preserves_quasi_distance(g in heis_point(), x in heis_point(), y in heis_point()) {
        let m = GroupModel::heisenberg();
        let (g, x, y) = (GroupPoint::new(g).unwrap(), GroupPoint::new(x).unwrap(), GroupPoint::new(y).unwrap());
        let d0 = m.quasi_distance(&x, &y).unwrap();
        let gx = m.compose(&g, &x).unwrap();
        let gy = m.compose(&g, &y).unwrap();
        let d1 = m.quasi_distance(&gx, &gy).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-9 * (1.0 + d0));
    }

    #[test]
    fn dilation_scales_gauge(x in heis_point(), r in 0.1..5.0f64) {
        let m = GroupModel::heisenberg();
        let x = GroupPoint::new(x).unwrap();
        let dx = m.dilate(r, &x).unwrap();
        let lhs = m.hom_norm(&dx).unwrap();
        let rhs = r * m.hom_norm(&x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs));
    }

    #[test]
    fn supports_grow_with_radius(ix in 0usize..20, iy in 0usize..20, it in 0usize..20, r in 0.2..0.9f64, k in 1.01..1.5f64) {
        let m = GroupModel::heisenberg();
        let d = LatticeDomain::cube(m, -1.0, 1.0, 0.1).unwrap();
        let c = d.node_point(d.index_of(&[ix, iy, it]));
        let small = d.ball_support(&Ball::new(c.clone(), r).unwrap());
        let big = d.ball_support(&Ball::new(c, r * k).unwrap());
        prop_assert!(small.nodes().all(|n| big.contains_node(n)));
    }

    #[test]
    fn interval_count_is_translation_invariant(i in 10usize..30, j in 10usize..30, r in 0.06..0.45f64) {
        let d = LatticeDomain::cube(GroupModel::euclidean(1).unwrap(), -2.0, 2.0, 0.05).unwrap();
        let a = d.ball_support(&Ball::new(d.node_point(i), r).unwrap()).count();
        let b = d.ball_support(&Ball::new(d.node_point(j), r).unwrap()).count();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn midpoint_quadrature_converges() {
    // Gaussian over [-1,1]^2; the exact value is (sqrt(pi) erf(1))^2.
    let exact = 2.230_985_141_404_135;
    let m = GroupModel::euclidean(2).unwrap();
    let err = |h: f64| {
        let d = Arc::new(LatticeDomain::cube(m.clone(), -1.0, 1.0, h).unwrap());
        let f = sample(&d, |x| (-x[0] * x[0] - x[1] * x[1]).exp()).unwrap();
        (integrate(&f) - exact).abs()
    };
    let (coarse, fine) = (err(0.1), err(0.05));
    assert!(coarse / fine >= 1.7, "ratio {}", coarse / fine);
}

#[test]
fn ball_measure_error_shrinks_on_average() {
    // Individual lattice counts fluctuate; the family-averaged error must
    // still drop under refinement.
    let m = GroupModel::euclidean(2).unwrap();
    let mean_err = |h: f64| {
        let d = Arc::new(LatticeDomain::new(m.clone(), vec![-1.0; 2], vec![1.0; 2], h, 1.0).unwrap());
        let stride = (0.2 / h).round() as usize;
        let fam = build_ball_family(&d, stride, RadiusLadder::new(0.3, 0.9, 1.1).unwrap()).unwrap();
        let p = PreparedFamily::new(d, fam).unwrap();
        let errs: Vec<f64> = (0..p.len())
            .map(|i| (p.measure(i, MeasureMode::Lattice) / p.measure(i, MeasureMode::Analytic) - 1.0).abs())
            .collect();
        pairwise_sum(&errs) / errs.len() as f64
    };
    let (coarse, fine) = (mean_err(0.1), mean_err(0.05));
    assert!(coarse / fine >= 1.7, "coarse {coarse} fine {fine}");
}

#[test]
fn ball_sums_are_reproducible() {
    let d = Arc::new(LatticeDomain::cube(GroupModel::heisenberg(), -1.0, 1.0, 0.125).unwrap());
    let fam = build_ball_family(&d, 2, RadiusLadder::new(0.4, 1.0, 1.2).unwrap()).unwrap();
    let p = PreparedFamily::new(d.clone(), fam).unwrap();
    let f = sample(&d, |x| (x[0] * 3.0).sin() + x[2] * x[1]).unwrap();
    let a = p.ball_sums(f.values(), true);
    let b = p.ball_sums(f.values(), true);
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}
