use fracmax::exponents::{conjugate, sobolev_pair, ExponentPreset, VariableExponent};
use fracmax::{GroupModel, LatticeDomain};
use proptest::prelude::*;

fn preset() -> impl Strategy<Value = ExponentPreset> {
    prop_oneof![
        (1.1..4.0f64).prop_map(|value| ExponentPreset::Constant { value }),
        (1.2..3.0f64, 0.0..1.5f64).prop_map(|(base, amp)| ExponentPreset::RadialLog { base, amp }),
        (1.2..3.0f64, -0.1..0.8f64, 0.2..1.5f64).prop_map(|(base, amp, radius)| ExponentPreset::Bump {
            base,
            amp,
            center: vec![0.1, -0.2, 0.0],
            radius
        }),
    ]
}

fn domain() -> LatticeDomain {
    LatticeDomain::cube(GroupModel::heisenberg(), -1.0, 1.0, 0.2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reciprocals_sum_to_one(pr in preset()) {
        let p = VariableExponent::preset(&GroupModel::heisenberg(), pr).unwrap();
        let q = conjugate(&p).unwrap();
        let d = domain();
        for (a, b) in p.values_on(&d).iter().zip(q.values_on(&d)) {
            prop_assert!((1.0 / a + 1.0 / b - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn conjugation_is_an_involution(pr in preset()) {
        let p = VariableExponent::preset(&GroupModel::heisenberg(), pr).unwrap();
        let pp = conjugate(&conjugate(&p).unwrap()).unwrap();
        let d = domain();
        for (a, b) in p.values_on(&d).iter().zip(pp.values_on(&d)) {
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }
        prop_assert!((p.p_minus() - pp.p_minus()).abs() <= 1e-12 * p.p_minus());
        prop_assert!((p.p_plus() - pp.p_plus()).abs() <= 1e-12 * p.p_plus());
    }

    #[test]
    fn conjugate_and_reciprocal_are_stable(pr in preset(), i in 0usize..1000, j in 0usize..1000) {
        let p = VariableExponent::preset(&GroupModel::heisenberg(), pr).unwrap();
        let q = conjugate(&p).unwrap();
        let d = domain();
        let (pv, qv) = (p.values_on(&d), q.values_on(&d));
        let gap = (pv[i] - pv[j]).abs();
        let pm = p.p_minus();
        prop_assert!((qv[i] - qv[j]).abs() <= gap / ((pm - 1.0) * (pm - 1.0)) + 1e-10);
        prop_assert!((1.0 / pv[i] - 1.0 / pv[j]).abs() <= gap / (pm * pm) + 1e-10);
    }

    #[test]
    fn sobolev_pair_identity(pr in preset(), gamma in 0.1..0.9f64) {
        let p = VariableExponent::preset(&GroupModel::heisenberg(), pr).unwrap();
        let pair = sobolev_pair(&p, gamma, 4).unwrap();
        let d = domain();
        for (a, b) in pair.p.values_on(&d).iter().zip(pair.q.values_on(&d)) {
            prop_assert!((1.0 / b - 1.0 / a + gamma / 4.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn sobolev_pair_rejects_large_exponents() {
    let p = VariableExponent::constant(&GroupModel::heisenberg(), 5.0).unwrap();
    let err = sobolev_pair(&p, 1.0, 4).unwrap_err().to_string();
    assert!(err.contains("margin"), "{err}");
}
