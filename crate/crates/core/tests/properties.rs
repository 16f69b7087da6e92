use conformable_kepler::action_angle::{actions_from_state, eigen_invariants, energy_from_actions, ActionAngleState};
use conformable_kepler::conformable::{g_inv, g_map};
use conformable_kepler::equatorial::{EqObservable, EquatorialPoint, EquatorialStructure, Reduced};
use conformable_kepler::kepler::{KeplerHamiltonian, KeplerParams};
use conformable_kepler::observable::{Coordinate, Observable};
use conformable_kepler::poisson::{
    bivector_matrix, bracket, compose_form, hamiltonian_field, symplectic_form, ConformableStructure,
};
use conformable_kepler::symmetry::AngularMomentum;
use conformable_kepler::{Alpha, PhasePoint};
use nalgebra::Matrix6;
use proptest::prelude::*;

fn interior_point() -> impl Strategy<Value = PhasePoint> {
    prop::array::uniform6(0.5f64..2.0).prop_map(PhasePoint::from_array)
}

fn alpha() -> impl Strategy<Value = Alpha> {
    (1.0f64..2.0).prop_map(|a| Alpha::new(a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric(x in interior_point(), a in alpha(), i in 0usize..3) {
        let s = ConformableStructure::new(a);
        let h = KeplerHamiltonian::new(KeplerParams::UNIT, a);
        let l = AngularMomentum { alpha: a, i };
        let xa = x.to_array();
        prop_assert_eq!(bracket(&s, &h, &l, &xa).unwrap(), -bracket(&s, &l, &h, &xa).unwrap());
    }

    #[test]
    fn field_applied_equals_bracket(x in interior_point(), a in alpha(), j in 0usize..6) {
        let s = ConformableStructure::new(a);
        let h = KeplerHamiltonian::new(KeplerParams::UNIT, a);
        let xa = x.to_array();
        let xf = hamiltonian_field(&s, &h, &xa).unwrap();
        let dg = Coordinate(j).grad(&xa);
        let applied: f64 = (0..6).map(|k| xf[k] * dg[k]).sum();
        let b = bracket(&s, &h, &Coordinate(j), &xa).unwrap();
        prop_assert!((applied - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn form_inverts_bivector(x in interior_point(), a in alpha()) {
        let w = symplectic_form(&x, a).unwrap();
        let p = bivector_matrix(&x, a).unwrap();
        prop_assert!((compose_form(&w, &p) - Matrix6::identity()).amax() < 1e-12);
    }

    #[test]
    fn deformation_map_round_trips(z in -50.0f64..50.0, a in alpha()) {
        let back = g_inv(g_map(z, a), a);
        prop_assert!((back - z).abs() <= 1e-12 * z.abs().max(1.0));
    }

    #[test]
    fn energy_action_round_trip(e in -5.0f64..-0.01, frac in 0.01f64..0.99) {
        let params = KeplerParams::UNIT;
        let d = frac / (-2.0 * e).sqrt();
        let (j1, j2) = actions_from_state(e, d, params).unwrap();
        let s = ActionAngleState::new(j1, j2, 0.0, 0.0, params).unwrap();
        let back = energy_from_actions(&s).unwrap();
        prop_assert!((back - e).abs() <= 1e-12 * e.abs());
    }

    #[test]
    fn r_spectrum_is_j1_plus_minus_2j2(j1 in 0.01f64..3.0, j2 in 0.0f64..2.0) {
        let s = ActionAngleState::new(j1, j2, 0.0, 0.0, KeplerParams::UNIT).unwrap();
        let (a, b) = eigen_invariants(&s).unwrap();
        let scale = j1 + 2.0 * j2;
        prop_assert!((a - (j1 - 2.0 * j2)).abs() <= 1e-12 * scale);
        prop_assert!((b - (j1 + 2.0 * j2)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn reduced_first_integrals(
        r in 0.5f64..2.0, pr in -1.0f64..1.0, phi in 0.3f64..2.8, pphi in -1.5f64..1.5,
        flip in any::<bool>(),
    ) {
        let phi = if flip { phi + std::f64::consts::PI } else { phi };
        let e = EquatorialPoint::new(r, pr, phi, pphi).unwrap();
        let h = EqObservable::new(KeplerParams::UNIT, Reduced::H);
        for w in [Reduced::Theta, Reduced::BSigma, Reduced::BBeta] {
            let (v, scale) = conformable_kepler::poisson::bracket_with_scale(
                &EquatorialStructure, &h, &EqObservable::new(KeplerParams::UNIT, w), &e.to_array(),
            ).unwrap();
            prop_assert!(v.abs() <= 1e-9 * scale.max(1e-14));
        }
    }
}
