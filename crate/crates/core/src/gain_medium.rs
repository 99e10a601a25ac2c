//! Steady state of the injected three-level cascade atoms and the resulting
//! linear gain and coupling coefficients for the two cavity modes.
//!
//! Levels are `a` (top), `b` (middle) and `c` (bottom). Mode 1 drives the
//! a-b transition and mode 2 the b-c transition; a classical field of Rabi
//! frequency `Omega` couples a and c directly.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::SolverError;
use crate::params::{AtomParams, SystemParams};

/// Tolerance used by [`is_real`]: `|Im| / (|Re| + 1e-30) <= 1e-10`.
pub const REAL_TOL: f64 = 1e-10;

/// True when a complex coefficient is real to within [`REAL_TOL`].
pub fn is_real(z: Complex64) -> bool {
    z.im.abs() / (z.re.abs() + 1e-30) <= REAL_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomicSteadyState {
    pub z_aa: f64,
    pub z_cc: f64,
    pub z_ac: Complex64,
    /// Equal to `conj(z_ac)`; kept separately because it is solved for independently.
    pub z_ca: Complex64,
    pub d: f64,
    pub chi: f64,
    pub rho_aa: f64,
    pub rho_cc: f64,
    pub rho_ac: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainCoefficients {
    pub xi11: Complex64,
    pub xi12: Complex64,
    pub xi21: Complex64,
    pub xi22: Complex64,
    pub upsilon: Complex64,
}

impl GainCoefficients {
    pub fn zero() -> Self {
        let z = Complex64::new(0.0, 0.0);
        GainCoefficients {
            xi11: z,
            xi12: z,
            xi21: z,
            xi22: z,
            upsilon: Complex64::new(1.0, 0.0),
        }
    }

    pub fn all_real(&self) -> bool {
        [self.xi11, self.xi12, self.xi21, self.xi22].into_iter().all(is_real)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseStrengths {
    pub kappa11: f64,
    pub kappa22: f64,
    pub beta12: f64,
}

/// Normaliser `d` and `chi = gamma_ac^2 + (Delta1 + Delta2)^2` of the atomic steady state.
pub fn normalizer(p: &AtomParams) -> (f64, f64) {
    let delta = p.delta1 + p.delta2;
    let chi = p.gamma_ac * p.gamma_ac + delta * delta;
    let d = p.gamma_a * p.gamma_c * chi
        + 0.5 * p.omega * p.omega * p.gamma_ac * (p.gamma_a + p.gamma_c);
    (d, chi)
}

/// Solves the stationary population and coherence equations of the a-c
/// subsystem (the middle level is empty to zeroth order in the fields).
///
/// The unknowns are `rho_aa, rho_cc, rho_ac, rho_ca`; treating `rho_ca` as
/// independent keeps the system complex-linear.
pub fn atomic_steady_state_linear(p: &AtomParams) -> Result<AtomicSteadyState, SolverError> {
    let (rho_aa0, rho_cc0, rho_ac0) = p.initial_state();
    let delta = p.delta1 + p.delta2;
    let h = Complex64::new(p.omega / 2.0, 0.0);
    let c = |x: f64| Complex64::new(x, 0.0);
    let zero = c(0.0);
    let dec_ac = Complex64::new(p.gamma_ac, delta);
    let dec_ca = Complex64::new(p.gamma_ac, -delta);
    #[rustfmt::skip]
    let m = Matrix4::new(
        c(-p.gamma_a), zero,         h,       h,
        zero,          c(-p.gamma_c), -h,     -h,
        -h,            h,             -dec_ac, zero,
        -h,            h,             zero,    -dec_ca,
    );
    let rhs = -Vector4::new(c(rho_aa0), c(rho_cc0), c(rho_ac0), c(rho_ac0)) * c(p.r_a);
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| SolverError::Degenerate("atomic population equations are singular".into()))?;
    let (d, chi) = normalizer(p);
    if d == 0.0 || !d.is_finite() {
        return Err(SolverError::Degenerate(format!("atomic normaliser d = {d}")));
    }
    let scale = if p.r_a > 0.0 { d / p.r_a } else { 0.0 };
    let z = |v: Complex64| v * scale;
    let (rho_aa, rho_cc) = (x[0].re, x[1].re);
    let out = AtomicSteadyState {
        z_aa: z(x[0]).re,
        z_cc: z(x[1]).re,
        z_ac: z(x[2]),
        z_ca: z(x[3]),
        d,
        chi,
        rho_aa,
        rho_cc,
        rho_ac: x[2],
    };
    if ![out.z_aa, out.z_cc, out.z_ac.re, out.z_ac.im].iter().all(|v| v.is_finite()) {
        return Err(SolverError::Degenerate("non-finite atomic steady state".into()));
    }
    Ok(out)
}

/// Adiabatically eliminates the a-b and b-c coherences.
///
/// Their stationary equations form a 2x2 complex system whose right-hand
/// sides are linear in `a1` and `a2†`. Solving once per field operator and
/// reading off the coefficients gives the four ξ.
pub fn xi_coefficients(p: &AtomParams, s: &AtomicSteadyState) -> Result<GainCoefficients, SolverError> {
    let i = Complex64::i();
    let half = Complex64::new(p.omega / 2.0, 0.0);
    let m = Matrix2::new(
        Complex64::new(p.gamma_ab, p.delta1),
        -half,
        half,
        Complex64::new(p.gamma_bc, -p.delta2),
    );
    let upsilon = m.determinant();
    if upsilon.norm() == 0.0 || !upsilon.is_finite() {
        return Err(SolverError::Degenerate(format!("Upsilon = {upsilon}")));
    }
    let k = if p.r_a > 0.0 { p.r_a / s.d } else { 0.0 };
    let lu = m.lu();
    let solve = |b: Vector2<Complex64>| {
        lu.solve(&b)
            .ok_or_else(|| SolverError::Degenerate("coherence equations are singular".into()))
    };
    // Columns: response of (rho_ab, rho_cb) to a1 and to a2†.
    let by_a1 = solve(Vector2::new(
        i * p.g1 * k * s.z_aa,
        i * p.g1 * k * s.z_ca,
    ))?;
    let by_a2dag = solve(Vector2::new(
        i * p.g2 * k * s.z_ac,
        i * p.g2 * k * s.z_cc,
    ))?;
    Ok(GainCoefficients {
        xi11: -i * p.g1 * by_a1[0],
        xi12: -i * p.g1 * by_a2dag[0],
        xi21: i * p.g2 * by_a1[1].conj(),
        xi22: i * p.g2 * by_a2dag[1].conj(),
        upsilon,
    })
}

/// Convenience wrapper: steady state followed by ξ extraction.
pub fn gain_coefficients(p: &AtomParams) -> Result<GainCoefficients, SolverError> {
    let s = atomic_steady_state_linear(p)?;
    xi_coefficients(p, &s)
}

pub fn noise_strengths(p: &SystemParams, xi: &GainCoefficients) -> NoiseStrengths {
    let c = &p.cavity;
    NoiseStrengths {
        kappa11: (c.kappa1 * (2.0 * c.n1 + 1.0) + 2.0 * xi.xi11.re) / 2.0,
        kappa22: (c.kappa2 * (2.0 * c.n2 + 1.0) + 2.0 * xi.xi22.re) / 2.0,
        beta12: (xi.xi12 + xi.xi21).re / 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::preset;

    fn atom(eta: f64, omega_over_gamma: f64) -> AtomParams {
        let mut a = preset("fig2").unwrap().params.atom;
        a.eta = eta;
        a.omega = omega_over_gamma * a.gamma_a;
        a
    }

    #[test]
    fn upper_level_injection_without_drive() {
        let a = atom(1.0, 0.0);
        let s = atomic_steady_state_linear(&a).unwrap();
        assert_eq!(s.z_aa, 0.0);
        assert_eq!(s.z_ac, Complex64::new(0.0, 0.0));
        assert!((s.z_cc - a.gamma_a * s.chi).abs() < 1e-9 * s.z_cc);

        let a = atom(-1.0, 0.0);
        let s = atomic_steady_state_linear(&a).unwrap();
        assert_eq!(s.z_cc, 0.0);
        assert!((s.z_aa - a.gamma_c * s.chi).abs() < 1e-9 * s.z_aa);
    }

    #[test]
    fn pure_gain_and_pure_absorption() {
        let xi = gain_coefficients(&atom(-1.0, 0.0)).unwrap();
        assert_eq!(xi.xi12.norm(), 0.0);
        assert_eq!(xi.xi21.norm(), 0.0);
        assert_eq!(xi.xi22.norm(), 0.0);
        assert!(xi.xi11.re > 0.0);

        let xi = gain_coefficients(&atom(1.0, 0.0)).unwrap();
        assert_eq!(xi.xi11.norm(), 0.0);
        assert_eq!(xi.xi12.norm(), 0.0);
        assert_eq!(xi.xi21.norm(), 0.0);
        assert!(xi.xi22.re > 0.0);
    }

    #[test]
    fn resonant_coefficients_are_real() {
        for eta in [-1.0, -0.3, 0.0, 0.36, 1.0] {
            for w in [0.0, 1.0, 4.5, 10.0] {
                let xi = gain_coefficients(&atom(eta, w)).unwrap();
                assert!(xi.all_real(), "eta={eta} w={w}: {xi:?}");
            }
        }
    }

    #[test]
    fn fig2_values() {
        // Frozen from an independent evaluation of the closed-form coefficients.
        let xi = gain_coefficients(&atom(-1.0, 10.0)).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-3 * b.abs();
        assert!(close(xi.xi11.re, 8.656e5), "{}", xi.xi11.re);
        assert!(close(xi.xi12.re, 8.157e6), "{}", xi.xi12.re);
        assert!(close(xi.xi21.re, -8.656e6), "{}", xi.xi21.re);
        assert!(close(xi.xi22.re, 2.497e6), "{}", xi.xi22.re);
    }

    #[test]
    fn vacuum_noise_without_medium() {
        let p = preset("fig2").unwrap().params;
        let ns = noise_strengths(&p, &GainCoefficients::zero());
        assert_eq!(ns.kappa11, p.cavity.kappa1 / 2.0);
        assert_eq!(ns.kappa22, p.cavity.kappa2 / 2.0);
        assert_eq!(ns.beta12, 0.0);
    }

    #[test]
    fn antisymmetric_coupling_has_no_cross_noise() {
        let p = preset("fig2").unwrap().params;
        let mut xi = GainCoefficients::zero();
        xi.xi12 = Complex64::new(3.0e5, 0.0);
        xi.xi21 = Complex64::new(-3.0e5, 0.0);
        assert_eq!(noise_strengths(&p, &xi).beta12, 0.0);
    }

    #[test]
    fn populations_are_physical() {
        for eta in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            for w in [0.0, 2.0, 10.0] {
                let s = atomic_steady_state_linear(&atom(eta, w)).unwrap();
                assert!(s.rho_aa >= -1e-15 && s.rho_cc >= -1e-15);
                assert!(s.rho_ac.norm_sqr() <= s.rho_aa * s.rho_cc * (1.0 + 1e-12) + 1e-30);
            }
        }
    }
}
