use std::f64::consts::PI;

use proptest::prelude::*;

use qpb_core::gaussian::{
    apply, beamsplitter, compose, make_single_mode, parity_expectation, phase_shift, tensor, two_mode_squeezer,
    PhaseTarget,
};
use qpb_core::metrology::{input_state, p_on, parity_signal, su11_evolve, Su11Config};
use qpb_core::photon::{pmf, CutoffPolicy};
use qpb_core::tomography::{fidelity, reconstruct_density, QubitDensity, SixProbabilities};
use qpb_core::turbulence::{mutual_information, CrosstalkMatrix};
use qpb_core::StateParams;

use ndarray::Array2;
use num_complex::Complex64;

fn single_mode() -> impl Strategy<Value = StateParams> {
    prop_oneof![
        Just(StateParams::Vacuum),
        (0.0..4.0f64).prop_map(|n_th| StateParams::Thermal { n_th }),
        (0.0..3.0f64, 0.0..2.0 * PI).prop_map(|(alpha, phi)| StateParams::Coherent { alpha, phi }),
        (0.0..1.2f64, 0.0..2.0 * PI).prop_map(|(r, theta)| StateParams::SqueezedVacuum { r, theta }),
        (0.0..2.5f64, 0.0..2.0 * PI, 0.0..1.0f64, 0.0..2.0 * PI).prop_map(|(alpha, phi, r, theta)| StateParams::Dsv {
            alpha,
            phi,
            r,
            theta
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transforms_are_symplectic(t in 0.0..1.0f64, g in 0.0..2.5f64, psi in 0.0..2.0 * PI, phi in 0.0..2.0 * PI) {
        let bs = beamsplitter(t).unwrap();
        let tms = two_mode_squeezer(g, psi).unwrap();
        let ps = phase_shift(PhaseTarget::Both, phi);
        let all = compose(&tms, &compose(&ps, &bs).unwrap()).unwrap();
        for s in [&bs, &tms, &ps, &all] {
            prop_assert!(s.symplectic_defect() < 1e-10 * (1.0 + s.matrix.amax().powi(2)));
        }
    }

    #[test]
    fn apply_preserves_symplectic_spectrum(a in single_mode(), b in single_mode(), g in 0.0..1.5f64, t in 0.0..1.0f64) {
        let state = tensor(&make_single_mode(a).unwrap(), &make_single_mode(b).unwrap());
        let s = compose(&beamsplitter(t).unwrap(), &two_mode_squeezer(g, 0.3).unwrap()).unwrap();
        let mut before = state.symplectic_eigenvalues();
        let mut after = apply(&s, &state).unwrap().symplectic_eigenvalues();
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() < 1e-9 * x.max(1.0), "{before:?} vs {after:?}");
        }
    }

    #[test]
    fn parity_matches_alternating_pmf(p in single_mode()) {
        let dist = pmf(p, CutoffPolicy::Adaptive).unwrap();
        let alt: f64 = dist.probs.iter().enumerate().map(|(n, q)| if n % 2 == 0 { *q } else { -q }).sum();
        let parity = parity_expectation(&make_single_mode(p).unwrap()).unwrap();
        prop_assert!((parity - alt).abs() < 1e-8, "{p:?}: {parity} vs {alt}");
    }

    #[test]
    fn click_probability_matches_vacuum_term(p in single_mode()) {
        let dist = pmf(p, CutoffPolicy::Adaptive).unwrap();
        let on = p_on(&make_single_mode(p).unwrap()).unwrap();
        prop_assert!((on - (1.0 - dist.prob(0))).abs() < 1e-8);
    }

    #[test]
    fn pmf_normalizes(p in single_mode()) {
        let dist = pmf(p, CutoffPolicy::Adaptive).unwrap();
        prop_assert!((dist.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn su11_is_identity_at_zero_phase(n1 in 0.0..30.0f64, n2 in 0.0..10.0f64, r in 0.0..2.0f64, g in 0.0..2.0f64) {
        let cfg = Su11Config::standard(n1, n2, r, g);
        let out = su11_evolve(&cfg).unwrap();
        let inp = input_state(&cfg).unwrap();
        let scale = inp.cov().amax().max(inp.mean().amax()).max(1.0);
        prop_assert!((out.mean() - inp.mean()).amax() < 1e-12 * scale * (2.0 * g).cosh().powi(2));
        prop_assert!((out.cov() - inp.cov()).amax() < 1e-12 * scale * (2.0 * g).cosh().powi(2));
    }

    #[test]
    fn parity_signal_is_bounded(phi in 0.0..2.0 * PI, r in 0.0..1.5f64, g in 0.0..1.5f64) {
        let s = parity_signal(&Su11Config::standard(4.0, 1.0, r, g).with_phi(phi)).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s));
    }

    #[test]
    fn reconstruction_is_physical(p in prop::array::uniform6(0.0..1.0f64)) {
        let six = SixProbabilities { basis: [p[0], p[1]], diagonal: [p[2], p[3]], circular: [p[4], p[5]] };
        let rho = reconstruct_density(&six);
        prop_assert!(QubitDensity::new(rho.rho).is_ok());
    }

    #[test]
    fn fidelity_is_symmetric(a in prop::array::uniform4(-1.0..1.0f64), b in prop::array::uniform4(-1.0..1.0f64), mix in 0.0..1.0f64) {
        let pa = QubitDensity::pure(Complex64::new(a[0], a[1]), Complex64::new(a[2], a[3]));
        let pb = QubitDensity::pure(Complex64::new(b[0], b[1]), Complex64::new(b[2], b[3]));
        prop_assume!(pa.is_ok() && pb.is_ok());
        let (pa, pb) = (pa.unwrap(), pb.unwrap());
        let mixed = QubitDensity::new(pb.rho * Complex64::new(mix, 0.0)
            + QubitDensity::maximally_mixed().rho * Complex64::new(1.0 - mix, 0.0)).unwrap();
        let f1 = fidelity(&pa, &mixed).unwrap();
        let f2 = fidelity(&mixed, &pa).unwrap();
        prop_assert!((f1 - f2).abs() < 1e-10);
        prop_assert!((fidelity(&mixed, &mixed).unwrap() - 1.0).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&f1));
    }

    #[test]
    fn mutual_information_is_bounded(raw in prop::collection::vec(0.0..1.0f64, 16)) {
        let mut m = Array2::from_shape_vec((4, 4), raw).unwrap();
        for mut col in m.columns_mut() {
            let s: f64 = col.sum();
            if s == 0.0 {
                col.fill(0.25);
            } else {
                col.mapv_inplace(|v| v / s);
            }
        }
        let mi = mutual_information(&CrosstalkMatrix::new((0..4).collect(), m).unwrap());
        prop_assert!((-1e-12..=2.0 + 1e-12).contains(&mi));
    }
}
