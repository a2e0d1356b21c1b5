use std::sync::Arc;

use fracmax::exponents::{ExponentPreset, VariableExponent};
use fracmax::norms::{luxemburg_norm, lp_norm, modular, power_identity_residual};
use fracmax::{GridFunction, GroupModel, LatticeDomain};
use proptest::prelude::*;

fn domain() -> Arc<LatticeDomain> {
    Arc::new(LatticeDomain::cube(GroupModel::euclidean(2).unwrap(), -1.0, 1.0, 0.1).unwrap())
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), -5.0..5.0f64], 400)
        .prop_filter("not identically zero", |v| v.iter().any(|x| *x != 0.0))
}

fn exponent() -> impl Strategy<Value = VariableExponent> {
    let m = GroupModel::euclidean(2).unwrap();
    (1.1..3.5f64, 0.0..2.0f64).prop_map(move |(base, amp)| {
        VariableExponent::preset(&m, ExponentPreset::RadialLog { base, amp }).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn constant_exponent_matches_closed_form(v in values(), c in 1.0..6.0f64) {
        let d = domain();
        let f = GridFunction::new(d, v).unwrap();
        let p = VariableExponent::constant(&GroupModel::euclidean(2).unwrap(), c).unwrap();
        let lux = luxemburg_norm(&f, &p).unwrap();
        let direct = lp_norm(&f, c).unwrap();
        prop_assert!((lux - direct).abs() <= 1e-6 * direct);
    }

    #[test]
    fn norm_has_unit_modular(v in values(), p in exponent()) {
        let f = GridFunction::new(domain(), v).unwrap();
        let eta = luxemburg_norm(&f, &p).unwrap();
        prop_assert!((modular(&f, &p, eta).unwrap() - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn triangle_inequality(a in values(), b in values(), p in exponent()) {
        let d = domain();
        let f = GridFunction::new(d.clone(), a).unwrap();
        let g = GridFunction::new(d, b).unwrap();
        let sum = f.zip_with(&g, |x, y| x + y).unwrap();
        let lhs = luxemburg_norm(&sum, &p).unwrap();
        let rhs = luxemburg_norm(&f, &p).unwrap() + luxemburg_norm(&g, &p).unwrap();
        prop_assert!(lhs <= rhs + 1e-8);
    }

    #[test]
    fn norm_is_homogeneous(v in values(), p in exponent(), c in -4.0..4.0f64) {
        prop_assume!(c.abs() > 1e-3);
        let f = GridFunction::new(domain(), v).unwrap();
        let lhs = luxemburg_norm(&f.scale(c).unwrap(), &p).unwrap();
        let rhs = c.abs() * luxemburg_norm(&f, &p).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs);
    }

    #[test]
    fn norm_is_monotone(v in values(), p in exponent(), k in 0.0..1.0f64) {
        let f = GridFunction::new(domain(), v).unwrap();
        let g = f.map(|x| x * k).unwrap();
        prop_assert!(luxemburg_norm(&g, &p).unwrap() <= luxemburg_norm(&f, &p).unwrap() * (1.0 + 1e-9));
    }

    #[test]
    fn power_identity(v in values(), p in exponent(), s in 0.5..3.0f64) {
        prop_assume!(s * p.p_minus() >= 1.0);
        let f = GridFunction::new(domain(), v).unwrap();
        let scale = luxemburg_norm(&f.abs().map(|x| x.powf(s)).unwrap(), &p).unwrap();
        prop_assert!(power_identity_residual(&f, &p, s).unwrap() <= 1e-6 * scale.max(1.0));
    }
}
