//! Mirror-mirror entanglement after adiabatic elimination of the cavity fields.
//!
//! Both cavities are driven on the red sideband (`δ_j = −ω_mj`). Eliminating
//! the fast cavity fluctuations leaves two mechanical modes with effective
//! damping `Γ_j`, a cross coupling `G12, G21`, and noise inherited from the
//! optical reservoirs and the gain medium. The stationary quadrature
//! covariance then follows from a Lyapunov equation.
//!
//! Quadratures are `q = (b + b†)/√2`, `p = (b − b†)/(i√2)`, so the vacuum
//! variance is ½ and a thermal mirror sits at `n + ½`.

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, SolverError};
use crate::gain_medium::{gain_coefficients, noise_strengths, GainCoefficients, NoiseStrengths};
use crate::params::{derived_quantities, SystemParams};
use crate::sweep::{run_sweep, Axis, Evaluator, SweepResult, SweepSpec};

/// Condition number above which a Lyapunov solve carries a warning.
pub const ILL_CONDITIONED: f64 = 1e12;
/// Tolerance for a slightly negative `σ² − 4 det V`, relative to `max(1, σ²)`.
const DISC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EntanglementOptions {
    /// Use the diffusion entries exactly as originally printed rather than
    /// the mode-symmetric ones.
    pub paper_literal_d: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveMechParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma_b1: f64,
    pub gamma_b2: f64,
    pub g12: f64,
    pub g21: f64,
    pub k: f64,
    pub u1: f64,
    pub u2: f64,
    pub v1: f64,
    pub v2: f64,
    pub kappa1p: f64,
    pub kappa2p: f64,
    /// Many-photon couplings `G_j sqrt(I_j)`.
    pub coupling1: f64,
    pub coupling2: f64,
    pub i1: f64,
    pub i2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix(pub Matrix4<f64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix(pub Matrix4<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    pub v: Matrix4<f64>,
    /// `‖RV + VRᵀ + D‖_max / ‖D‖_max` at solve time.
    pub relative_residual: f64,
    pub warning: Option<String>,
}

impl CovarianceMatrix {
    pub fn from_matrix(v: Matrix4<f64>) -> Self {
        CovarianceMatrix {
            v,
            relative_residual: 0.0,
            warning: None,
        }
    }

    pub fn va(&self) -> Matrix2<f64> {
        self.v.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn vb(&self) -> Matrix2<f64> {
        self.v.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn vab(&self) -> Matrix2<f64> {
        self.v.fixed_view::<2, 2>(0, 2).into_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementResult {
    #[serde(rename = "E_N")]
    pub e_n: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub sigma: f64,
    pub stable: bool,
}

/// Effective mechanical parameters at red-sideband drive.
pub fn effective_mech_params(p: &SystemParams, xi: &GainCoefficients) -> Result<EffectiveMechParams, SolverError> {
    if p.atom.delta1 != 0.0 || p.atom.delta2 != 0.0 {
        return Err(SolverError::Unsupported(format!(
            "entanglement requires Delta1 = Delta2 = 0 (got {:e}, {:e})",
            p.atom.delta1, p.atom.delta2
        )));
    }
    let c = &p.cavity;
    let m = &p.mech;
    let (x11, x12, x21, x22) = (xi.xi11.re, xi.xi12.re, xi.xi21.re, xi.xi22.re);
    let kappa1p = c.kappa1 - 2.0 * x11;
    let kappa2p = c.kappa2 + 2.0 * x22;
    let k = kappa1p * kappa2p + 4.0 * x12 * x21;
    // The eliminated 2x2 cavity fluctuation block must be damped: positive
    // determinant and trace. A single mode may individually have net gain.
    if !(k > 0.0) {
        return Err(SolverError::EliminationUnstable(format!(
            "K = kappa1' kappa2' + 4 xi12 xi21 = {k:e} <= 0"
        )));
    }
    if !(kappa1p + kappa2p > 0.0) {
        return Err(SolverError::EliminationUnstable(format!(
            "kappa1' + kappa2' = {:e} <= 0",
            kappa1p + kappa2p
        )));
    }
    let d = derived_quantities(p);
    let i1 = d.eps1 * d.eps1 / (m.omega_m1 * m.omega_m1 + kappa1p * kappa1p / 4.0);
    let i2 = d.eps2 * d.eps2 / (m.omega_m2 * m.omega_m2 + kappa2p * kappa2p / 4.0);
    let g1 = d.g_om1 * i1.sqrt();
    let g2 = d.g_om2 * i2.sqrt();
    let gamma_b1 = 4.0 * g1 * g1 * kappa2p / k;
    let gamma_b2 = 4.0 * g2 * g2 * kappa1p / k;
    Ok(EffectiveMechParams {
        gamma1: m.gamma_m1 + gamma_b1,
        gamma2: m.gamma_m2 + gamma_b2,
        gamma_b1,
        gamma_b2,
        g12: 4.0 * x12 * g1 * g2 / k,
        g21: 4.0 * x21 * g1 * g2 / k,
        k,
        u1: 4.0 * x21 * g2 / k,
        u2: 2.0 * g2 * kappa1p / k,
        v1: 2.0 * g1 * kappa2p / k,
        v2: 4.0 * x12 * g1 / k,
        kappa1p,
        kappa2p,
        coupling1: g1,
        coupling2: g2,
        i1,
        i2,
    })
}

pub fn drift_matrix(e: &EffectiveMechParams) -> DriftMatrix {
    let (h1, h2) = (e.gamma1 / 2.0, e.gamma2 / 2.0);
    #[rustfmt::skip]
    let r = Matrix4::new(
        -h1,    0.0,    -e.g12, 0.0,
        0.0,    -h1,    0.0,    e.g12,
        e.g21,  0.0,    -h2,    0.0,
        0.0,    -e.g21, 0.0,    -h2,
    );
    DriftMatrix(r)
}

pub fn diffusion_matrix(
    p: &SystemParams,
    e: &EffectiveMechParams,
    ns: &NoiseStrengths,
    opts: &EntanglementOptions,
) -> DiffusionMatrix {
    let d = derived_quantities(p);
    let m = &p.mech;
    let (k11, k22, b12) = (ns.kappa11, ns.kappa22, ns.beta12);
    let thermal1 = m.gamma_m1 * (2.0 * d.n1 + 1.0);
    let thermal2 = m.gamma_m2 * (2.0 * d.n2 + 1.0);
    let optical1 = k11 * e.v1 * e.v1 + k22 * e.v2 * e.v2 - 2.0 * b12 * e.v1 * e.v2;
    let optical2 = k11 * e.u1 * e.u1 + k22 * e.u2 * e.u2 + 2.0 * b12 * e.u1 * e.u2;
    let (a1, a2, a3) = if opts.paper_literal_d {
        (
            optical1 + thermal1,
            optical2 + thermal2 / 2.0,
            b12 * (e.u1 * e.v2 - e.u2 * e.v1) + k22 * e.u2 * e.v2 - k22 * e.u1 * e.v1,
        )
    } else {
        (
            optical1 + thermal1 / 2.0,
            optical2 + thermal2 / 2.0,
            b12 * (e.u1 * e.v2 - e.u2 * e.v1) + k22 * e.u2 * e.v2 - k11 * e.u1 * e.v1,
        )
    };
    #[rustfmt::skip]
    let dm = Matrix4::new(
        a1,  0.0, a3,  0.0,
        0.0, a1,  0.0, -a3,
        a3,  0.0, a2,  0.0,
        0.0, -a3, 0.0, a2,
    );
    DiffusionMatrix(dm)
}

/// Stability from the two decoupled 2x2 blocks of the drift matrix.
pub fn is_stable(r: &DriftMatrix) -> bool {
    let r = &r.0;
    let (g1, g2) = (-2.0 * r[(0, 0)], -2.0 * r[(2, 2)]);
    let (g12, g21) = (-r[(0, 2)], r[(2, 0)]);
    g1 + g2 > 0.0 && g1 * g2 / 4.0 + g12 * g21 > 0.0
}

/// Solves `R V + V Rᵀ = −D` through its 16x16 Kronecker form, with one round
/// of iterative refinement.
pub fn solve_lyapunov(r: &DriftMatrix, d: &DiffusionMatrix) -> Result<CovarianceMatrix, SolverError> {
    if !is_stable(r) {
        return Err(SolverError::NotStable(format!("R = {}", r.0)));
    }
    let (r, dm) = (&r.0, &d.0);
    let mut a = SMatrix::<f64, 16, 16>::zeros();
    // Column-major vec: vec(RV) = (I⊗R) vec V, vec(VRᵀ) = (R⊗I) vec V.
    for i in 0..4 {
        for j in 0..4 {
            let row = i + 4 * j;
            for k in 0..4 {
                a[(row, k + 4 * j)] += r[(i, k)];
                a[(row, i + 4 * k)] += r[(j, k)];
            }
        }
    }
    let b = -SVector::<f64, 16>::from_column_slice(dm.as_slice());
    let lu = a.lu();
    let mut x = lu
        .solve(&b)
        .ok_or_else(|| SolverError::Degenerate("Lyapunov operator is singular".into()))?;
    let res = b - a * x;
    if let Some(dx) = lu.solve(&res) {
        x += dx;
    }
    let v = Matrix4::from_column_slice(x.as_slice());
    let v = (v + v.transpose()) * 0.5;

    let warning = lu.try_inverse().and_then(|inv| {
        let cond = a.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max)
            * inv.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max);
        (cond > ILL_CONDITIONED).then(|| format!("Lyapunov system condition estimate {cond:.3e}"))
    });
    let residual = r * v + v * r.transpose() + dm;
    let scale = dm.amax();
    Ok(CovarianceMatrix {
        v,
        relative_residual: if scale > 0.0 { residual.amax() / scale } else { residual.amax() },
        warning,
    })
}

/// `det V_A + det V_B ∓ 2 det V_AB` and `det V`.
fn invariants(v: &CovarianceMatrix, transposed: bool) -> (f64, f64) {
    let cross = 2.0 * v.vab().determinant();
    let sigma = v.va().determinant() + v.vb().determinant() + if transposed { -cross } else { cross };
    (sigma, v.v.determinant())
}

/// Smaller symplectic eigenvalue squared, from `σ` and `det V`.
fn small_symplectic_sq(sigma: f64, det: f64) -> Result<f64, String> {
    let disc = sigma * sigma - 4.0 * det;
    if disc < -DISC_TOL * sigma.abs().powi(2).max(1.0) {
        return Err(format!("sigma^2 - 4 det V = {disc:e} < 0 (sigma = {sigma:e}, det V = {det:e})"));
    }
    let root = disc.max(0.0).sqrt();
    // Both forms are exact; the second avoids cancellation when σ > 0.
    let val = if sigma > 0.0 {
        2.0 * det / (sigma + root)
    } else {
        (sigma - root) / 2.0
    };
    Ok(val)
}

pub fn logarithmic_negativity(v: &CovarianceMatrix) -> Result<EntanglementResult, SolverError> {
    let (sigma, det) = invariants(v, true);
    let diag = |extra: String| {
        SolverError::UnphysicalCovariance(format!(
            "{extra}; det V_A = {:e}, det V_B = {:e}, det V_AB = {:e}",
            v.va().determinant(),
            v.vb().determinant(),
            v.vab().determinant()
        ))
    };
    let lambda_sq = small_symplectic_sq(sigma, det).map_err(diag)?;
    if !(lambda_sq > 0.0) {
        return Err(diag(format!("Lambda^2 = {lambda_sq:e} is not positive")));
    }
    let lambda = lambda_sq.sqrt();
    Ok(EntanglementResult {
        e_n: (-(2.0 * lambda).ln()).max(0.0),
        lambda,
        sigma,
        stable: true,
    })
}

/// Whether `V + iΩ/2 ⪰ 0`, i.e. the smaller symplectic eigenvalue of `V` is at least ½.
pub fn is_physical(v: &CovarianceMatrix) -> bool {
    let eig = SymmetricEigen::new(v.v).eigenvalues;
    if eig.iter().any(|&x| x <= 0.0) {
        return false;
    }
    // Both symplectic eigenvalues are >= 1/2 iff det V >= 1/16 and
    // (ν₋² − ¼)(ν₊² − ¼) = det V − σ/4 + 1/16 >= 0. This form has no square
    // root, so pure states are not pushed below the bound by rounding.
    let (sigma, det) = invariants(v, false);
    let scale = det.abs() + sigma.abs() / 4.0 + 1.0 / 16.0;
    det >= (1.0 - 1e-9) / 16.0 && det - sigma / 4.0 + 1.0 / 16.0 >= -1e-9 * scale
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntanglementReport {
    pub xi: GainCoefficients,
    pub noise: NoiseStrengths,
    pub effective: EffectiveMechParams,
    pub stable: bool,
    pub result: Option<EntanglementResult>,
    pub covariance: Option<CovarianceMatrix>,
    pub unphysical: bool,
}

/// Full chain from parameters to logarithmic negativity.
pub fn entangle(p: &SystemParams, opts: &EntanglementOptions) -> Result<EntanglementReport, SolverError> {
    let xi = gain_coefficients(&p.atom)?;
    let effective = effective_mech_params(p, &xi)?;
    let noise = noise_strengths(p, &xi);
    let r = drift_matrix(&effective);
    let stable = is_stable(&r);
    if !stable {
        return Ok(EntanglementReport {
            xi,
            noise,
            effective,
            stable,
            result: None,
            covariance: None,
            unphysical: false,
        });
    }
    let d = diffusion_matrix(p, &effective, &noise, opts);
    let cov = solve_lyapunov(&r, &d)?;
    let result = logarithmic_negativity(&cov)?;
    let unphysical = !is_physical(&cov);
    Ok(EntanglementReport {
        xi,
        noise,
        effective,
        stable,
        result: Some(result),
        covariance: Some(cov),
        unphysical,
    })
}

/// Runs an entanglement map over one or two axes (see [`crate::sweep::apply_axis`]).
pub fn entanglement_sweep(
    p: &SystemParams,
    axes: Vec<Axis>,
    opts: EntanglementOptions,
    parallelism: usize,
) -> Result<SweepResult, Error> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::Spec(format!("entanglement sweeps take one or two axes, got {}", axes.len())));
    }
    let spec = SweepSpec {
        axes,
        evaluator: Evaluator::Entanglement {
            paper_literal_d: opts.paper_literal_d,
        },
        base: p.clone(),
        parallelism,
    };
    run_sweep(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::preset;

    fn decoupled(gamma1: f64, gamma2: f64) -> EffectiveMechParams {
        EffectiveMechParams {
            gamma1,
            gamma2,
            gamma_b1: 0.0,
            gamma_b2: 0.0,
            g12: 0.0,
            g21: 0.0,
            k: 1.0,
            u1: 0.0,
            u2: 0.0,
            v1: 0.0,
            v2: 0.0,
            kappa1p: 1.0,
            kappa2p: 1.0,
            coupling1: 0.0,
            coupling2: 0.0,
            i1: 0.0,
            i2: 0.0,
        }
    }

    #[test]
    fn thermal_mirrors_sit_at_n_plus_half() {
        let mut p = preset("fig6").unwrap().params;
        p.mech.t2 = 2.0 * p.mech.t1;
        let d = derived_quantities(&p);
        let e = decoupled(p.mech.gamma_m1, p.mech.gamma_m2);
        let ns = noise_strengths(&p, &GainCoefficients::zero());
        let dm = diffusion_matrix(&p, &e, &ns, &EntanglementOptions::default());
        let v = solve_lyapunov(&drift_matrix(&e), &dm).unwrap();
        let expect = [d.n1 + 0.5, d.n1 + 0.5, d.n2 + 0.5, d.n2 + 0.5];
        for (k, want) in expect.iter().enumerate() {
            assert!((v.v[(k, k)] - want).abs() <= 1e-10 * want, "{k}: {} vs {want}", v.v[(k, k)]);
        }
        assert!(v.v.iter().enumerate().all(|(i, x)| i % 5 == 0 || x.abs() < 1e-9));
        assert_eq!(logarithmic_negativity(&v).unwrap().e_n, 0.0);
    }

    #[test]
    fn scalar_balance() {
        let r = DriftMatrix(Matrix4::identity() * -1.5);
        let d = DiffusionMatrix(Matrix4::identity() * 0.6);
        let v = solve_lyapunov(&r, &d).unwrap();
        assert!((v.v - Matrix4::identity() * 0.2).amax() < 1e-15);
    }

    #[test]
    fn vacuum_and_two_mode_squeezing() {
        let vac = CovarianceMatrix::from_matrix(Matrix4::identity() * 0.5);
        let r = logarithmic_negativity(&vac).unwrap();
        assert!((r.lambda - 0.5).abs() < 1e-15 && r.e_n == 0.0);
        assert!((r.sigma - 0.5).abs() < 1e-15);

        let s = 0.7_f64;
        let (c, sh) = ((2.0 * s).cosh() / 2.0, (2.0 * s).sinh() / 2.0);
        #[rustfmt::skip]
        let v = Matrix4::new(
            c,   0.0, sh,  0.0,
            0.0, c,   0.0, -sh,
            sh,  0.0, c,   0.0,
            0.0, -sh, 0.0, c,
        );
        let r = logarithmic_negativity(&CovarianceMatrix::from_matrix(v)).unwrap();
        assert!((r.e_n - 2.0 * s).abs() < 1e-12, "{}", r.e_n);
        assert!(is_physical(&CovarianceMatrix::from_matrix(v)));
    }

    #[test]
    fn stability_examples() {
        let mut e = decoupled(2.0, 2.0);
        e.g12 = 10.0;
        e.g21 = -1.0;
        assert!(!is_stable(&drift_matrix(&e)));
        e.g21 = 1.0;
        assert!(is_stable(&drift_matrix(&e)));
        assert!(!is_stable(&drift_matrix(&decoupled(0.0, 0.0))));
    }

    #[test]
    fn no_drive_means_bare_mirrors() {
        let mut p = preset("fig6").unwrap().params;
        p.cavity.p1 = 0.0;
        p.cavity.p2 = 0.0;
        let xi = gain_coefficients(&p.atom).unwrap();
        let e = effective_mech_params(&p, &xi).unwrap();
        assert_eq!((e.coupling1, e.coupling2), (0.0, 0.0));
        assert_eq!((e.gamma1, e.gamma2), (p.mech.gamma_m1, p.mech.gamma_m2));
        assert_eq!((e.u1, e.u2, e.v1, e.v2), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn nonzero_atomic_detuning_is_rejected() {
        let mut p = preset("fig6").unwrap().params;
        p.atom.delta1 = 1e5;
        let xi = gain_coefficients(&p.atom).unwrap();
        assert!(matches!(effective_mech_params(&p, &xi), Err(SolverError::Unsupported(_))));
    }

    #[test]
    fn optimal_injected_coherence_entangles() {
        let mut p = preset("fig66").unwrap().params;
        p.atom.eta = 0.36;
        let rep = entangle(&p, &EntanglementOptions::default()).unwrap();
        assert!(rep.stable);
        let r = rep.result.unwrap();
        assert!(r.e_n > 0.5, "{}", r.e_n);
        assert!(rep.covariance.unwrap().relative_residual < 1e-10);
    }
}
