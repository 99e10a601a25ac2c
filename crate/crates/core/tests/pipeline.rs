use cascade_optomech::bistability::{coupled_roots, CoupledSystem};
use cascade_optomech::entanglement::{entangle, EntanglementOptions};
use cascade_optomech::gain_medium::gain_coefficients;
use cascade_optomech::params::{derived_quantities, preset, SystemParams};
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

fn base(name: &str) -> SystemParams {
    preset(name).unwrap().params
}

#[test]
fn fig2_gain_coefficients() {
    let xi = gain_coefficients(&base("fig2").atom).unwrap();
    for (got, want) in [(xi.xi11, 8.656e5), (xi.xi12, 8.157e6), (xi.xi21, -8.656e6), (xi.xi22, 2.497e6)] {
        assert!((got.re - want).abs() < 1e-3 * want.abs(), "{got} vs {want}");
        assert_eq!(got.im, 0.0);
    }
}

/// Rebuilds the intracavity fields at a reported root from the linear
/// amplitude equations and checks they reproduce the root's intensities.
#[test]
fn coupled_roots_are_self_consistent() {
    let p = base("fig3");
    let xi = gain_coefficients(&p.atom).unwrap();
    let c = &p.cavity;
    let mut three = 0;
    for &power in &[1e-6, 3e-5, 1e-4, 1e-3] {
        for &delta0 in &[-2.0e7, -1.1e7, 0.0, 6.0e6] {
            let sys = CoupledSystem::new(&p, &xi, delta0, 1.0);
            let eps = sys.eps2_for_power(power).sqrt();
            let roots = coupled_roots(&p, power, delta0, 1.0).unwrap();
            if roots.len() == 3 {
                three += 1;
            }
            for r in &roots {
                let i = Complex64::i();
                let a11 = c.kappa1 / 2.0 - xi.xi11 + i * (delta0 - sys.beta1 * r.i1);
                let a22 = c.kappa2 / 2.0 + xi.xi22.conj() + i * (delta0 + sys.beta2 * r.i2);
                let m = Matrix2::new(a11, -xi.xi12, xi.xi21.conj(), a22);
                let rhs = Vector2::new(Complex64::from(eps), Complex64::from(eps));
                let fields = m.lu().solve(&rhs).unwrap();
                let (i1, i2) = (fields[0].norm_sqr(), fields[1].norm_sqr());
                assert!((i1 - r.i1).abs() <= 1e-7 * r.i1, "P {power} d {delta0}: {i1} vs {}", r.i1);
                assert!((i2 - r.i2).abs() <= 1e-7 * r.i2, "P {power} d {delta0}: {i2} vs {}", r.i2);
            }
            for w in roots.windows(2) {
                assert!(w[1].i1 > w[0].i1 * (1.0 + 1e-9));
            }
        }
    }
    assert!(three > 0, "no multistable case in the grid");
}

#[test]
fn no_drive_means_no_entanglement() {
    let mut p = base("fig66");
    p.cavity.p1 = 0.0;
    p.cavity.p2 = 0.0;
    let rep = entangle(&p, &EntanglementOptions::default()).unwrap();
    assert_eq!(rep.effective.g12, 0.0);
    assert_eq!(rep.effective.g21, 0.0);
    assert_eq!(rep.result.unwrap().e_n, 0.0);
}

#[test]
fn negativity_falls_with_temperature() {
    let mut p = base("fig66");
    p.atom.eta = 0.075;
    let mut last = f64::INFINITY;
    for k in 0..=20 {
        p.mech.t1 = k as f64;
        p.mech.t2 = k as f64;
        let e = entangle(&p, &EntanglementOptions::default()).unwrap().result.unwrap().e_n;
        assert!(e <= last, "T = {k} K: {e} > {last}");
        last = e;
    }
    assert!(last > 0.0);
}

#[test]
fn occupation_follows_temperature() {
    let mut p = base("fig66");
    p.mech.t1 = 0.0;
    assert_eq!(derived_quantities(&p).n1, 0.0);
    p.mech.t1 = 1.0;
    assert!(derived_quantities(&p).n1 > 0.0);
}

#[test]
fn detuned_medium_is_rejected_for_entanglement() {
    let mut p = base("fig6");
    p.atom.delta1 = 1e5;
    assert!(entangle(&p, &EntanglementOptions::default()).is_err());
}
