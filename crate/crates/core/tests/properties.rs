use cascade_optomech::bistability::cubic::real_roots;
use cascade_optomech::entanglement::{
    is_stable, logarithmic_negativity, solve_lyapunov, CovarianceMatrix, DiffusionMatrix, DriftMatrix,
};
use cascade_optomech::gain_medium::{gain_coefficients, is_real};
use cascade_optomech::params::{preset, temperature_for_occupation, thermal_occupation};
use cascade_optomech::sweep::format_float;
use nalgebra::{Matrix4, Vector4};
use proptest::prelude::*;

fn matrix4(range: f64) -> impl Strategy<Value = Matrix4<f64>> {
    prop::collection::vec(-range..range, 16).prop_map(Matrix4::from_vec)
}

fn spd4() -> impl Strategy<Value = Matrix4<f64>> {
    matrix4(1.0).prop_map(|b| b * b.transpose() + Matrix4::identity() * 0.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lyapunov_solution_satisfies_equation(m in matrix4(1.0), d in spd4(), shift in 0.2..2.0f64) {
        let top = m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::MIN, f64::max);
        let r = DriftMatrix(m - Matrix4::identity() * (top + shift));
        // The closed-form block criterion only sees the drift structure the
        // entanglement model produces, so a generic stable R may not pass it.
        prop_assume!(is_stable(&r));
        let v = solve_lyapunov(&r, &DiffusionMatrix(d)).unwrap();
        let res = (r.0 * v.v + v.v * r.0.transpose() + d).norm() / d.norm();
        prop_assert!(res < 1e-10, "residual {res}");
        prop_assert!((v.v - v.v.transpose()).norm() <= 1e-12 * v.v.norm());
    }

    #[test]
    fn stability_matches_eigenvalues(
        h1 in -1.0..1.0f64, h2 in -1.0..1.0f64, g12 in -1.0..1.0f64, g21 in -1.0..1.0f64,
    ) {
        #[rustfmt::skip]
        let r = Matrix4::new(
            -h1,  0.0, -g12, 0.0,
            0.0, -h1,  0.0,  g12,
            g21,  0.0, -h2,  0.0,
            0.0, -g21, 0.0, -h2,
        );
        let eig_stable = r.complex_eigenvalues().iter().all(|z| z.re < 0.0);
        let margin = r.complex_eigenvalues().iter().map(|z| z.re.abs()).fold(f64::MAX, f64::min);
        prop_assume!(margin > 1e-9);
        prop_assert_eq!(is_stable(&DriftMatrix(r)), eig_stable);
    }

    #[test]
    fn cubic_roots_are_roots(r1 in -10.0..10.0f64, r2 in -10.0..10.0f64, r3 in -10.0..10.0f64, a in 0.1..5.0f64) {
        prop_assume!((r1 - r2).abs() > 1e-2 && (r2 - r3).abs() > 1e-2 && (r1 - r3).abs() > 1e-2);
        let (b, c, d) = (-a * (r1 + r2 + r3), a * (r1 * r2 + r2 * r3 + r1 * r3), -a * r1 * r2 * r3);
        let got = real_roots(a, b, c, d);
        let mut want = [r1, r2, r3];
        want.sort_by(f64::total_cmp);
        prop_assert_eq!(got.len(), 3);
        for (g, w) in got.iter().zip(want) {
            prop_assert!((g - w).abs() < 1e-7 * (1.0 + w.abs()), "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn negativity_vanishes_for_product_states(n1 in 0.5..5.0f64, n2 in 0.5..5.0f64, s1 in -1.0..1.0f64, s2 in -1.0..1.0f64) {
        let v = Matrix4::from_diagonal(&Vector4::new(n1 * s1.exp(), n1 * (-s1).exp(), n2 * s2.exp(), n2 * (-s2).exp()));
        let e = logarithmic_negativity(&CovarianceMatrix::from_matrix(v)).unwrap();
        prop_assert_eq!(e.e_n, 0.0);
    }

    #[test]
    fn occupation_inverts(omega in 1e6..1e9f64, t in 1e-3..100.0f64) {
        let n = thermal_occupation(omega, t);
        let back = temperature_for_occupation(omega, n);
        prop_assert!((back - t).abs() <= 1e-9 * t);
        prop_assert!(thermal_occupation(omega, t * 1.01) > n);
    }

    #[test]
    fn float_format_round_trips(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL) {
        let s = format_float(x);
        prop_assert_eq!(s.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn xi_is_real_on_resonance(eta in -0.99..0.99f64, omega_ratio in 0.0..15.0f64) {
        let mut p = preset("fig2").unwrap().params;
        p.atom.eta = eta;
        p.atom.omega = omega_ratio * p.atom.gamma_a;
        let xi = gain_coefficients(&p.atom).unwrap();
        prop_assert!([xi.xi11, xi.xi12, xi.xi21, xi.xi22].into_iter().all(is_real));
    }
}
