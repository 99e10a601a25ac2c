//! Coupled steady states of the two modes when the intermode terms are kept.
//!
//! With `α1 = κ1/2 − ξ11 + i(δ0 − β1 I1)` and `α2* = κ2/2 + ξ22* + i(δ0 + β2 I2)`
//! the intensities satisfy
//!
//! ```text
//! |α1 α2* + ξ12 ξ21*|² I1 = ε² |α2* + μ ξ12|²
//! |α1 α2* + ξ12 ξ21*|² I2 = ε² |μ α1* − ξ21|²
//! ```
//!
//! Newton iterations run on logarithmic residuals in `(ln I1, ln I2)`, which
//! keeps the scale uniform across many decades of intensity.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use super::{CoupledSteadyState, RwaCubic};
use crate::error::SolverError;
use crate::gain_medium::{gain_coefficients, GainCoefficients};
use crate::params::{drive_amplitude, SystemParams};

/// Accepted residual, relative to `ε²`.
pub const RESIDUAL_TOL: f64 = 1e-8;
const DEDUP_TOL: f64 = 1e-6;
const NEWTON_MAX_ITERS: usize = 60;
const MAX_LOG_STEP: f64 = 3.0;

/// Seed-scan settings for [`coupled_roots_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub points: usize,
    pub i_min: f64,
    pub i_max: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            points: 500,
            i_min: 1e-4,
            i_max: 1e12,
        }
    }
}

/// Precomputed coefficients of the coupled equations at fixed detuning and drive ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledSystem {
    pub delta0: f64,
    pub mu: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// `κ1/2 − ξ11`.
    pub a1: Complex64,
    /// `κ2/2 + conj(ξ22)`.
    pub a2c: Complex64,
    pub xi12: Complex64,
    pub xi21: Complex64,
    /// `ξ12 conj(ξ21)`.
    pub cross: Complex64,
    /// Laser frequency and damping of mode 1, to convert `ε²` to power.
    pub kappa1: f64,
    pub omega_l1: f64,
}

/// Pieces of the residual and its derivatives at one point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Eval {
    pub den: f64,
    pub n1: f64,
    pub n2: f64,
    pub den_1: f64,
    pub den_2: f64,
    pub n1_2: f64,
    pub n2_1: f64,
}

impl CoupledSystem {
    pub fn new(p: &SystemParams, xi: &GainCoefficients, delta0: f64, mu: f64) -> Self {
        let (beta1, beta2) = super::beta_coefficients(p);
        let c = &p.cavity;
        CoupledSystem {
            delta0,
            mu,
            beta1,
            beta2,
            a1: Complex64::new(c.kappa1 / 2.0, 0.0) - xi.xi11,
            a2c: Complex64::new(c.kappa2 / 2.0, 0.0) + xi.xi22.conj(),
            xi12: xi.xi12,
            xi21: xi.xi21,
            cross: xi.xi12 * xi.xi21.conj(),
            kappa1: c.kappa1,
            omega_l1: c.laser_frequency(1),
        }
    }

    pub fn eps2_for_power(&self, power: f64) -> f64 {
        drive_amplitude(self.kappa1, power, self.omega_l1).powi(2)
    }

    pub fn power_for_eps2(&self, eps2: f64) -> f64 {
        crate::params::power_for_amplitude(self.kappa1, eps2.sqrt(), self.omega_l1)
    }

    fn alpha1(&self, i1: f64) -> Complex64 {
        self.a1 + Complex64::new(0.0, self.delta0 - self.beta1 * i1)
    }

    fn alpha2c(&self, i2: f64) -> Complex64 {
        self.a2c + Complex64::new(0.0, self.delta0 + self.beta2 * i2)
    }

    pub(crate) fn eval(&self, i1: f64, i2: f64) -> Eval {
        let a1 = self.alpha1(i1);
        let a2c = self.alpha2c(i2);
        let w = a1 * a2c + self.cross;
        let m1 = a2c + self.xi12 * self.mu;
        let m2 = a1.conj() * self.mu - self.xi21;
        let i = Complex64::i();
        // dα1/dI1 = -iβ1, dα2*/dI2 = iβ2, dα1*/dI1 = iβ1
        let dw_1 = -i * self.beta1 * a2c;
        let dw_2 = a1 * i * self.beta2;
        Eval {
            den: w.norm_sqr(),
            n1: m1.norm_sqr(),
            n2: m2.norm_sqr(),
            den_1: 2.0 * (w.conj() * dw_1).re,
            den_2: 2.0 * (w.conj() * dw_2).re,
            n1_2: 2.0 * (m1.conj() * i * self.beta2).re,
            n2_1: 2.0 * (m2.conj() * i * self.beta1 * self.mu).re,
        }
    }

    /// Residuals `(Den I1 / N1 − ε², Den I2 / N2 − ε²)` divided by `ε²`.
    pub fn relative_residuals(&self, i1: f64, i2: f64, eps2: f64) -> (f64, f64) {
        let e = self.eval(i1, i2);
        ((e.den * i1 / e.n1 - eps2) / eps2, (e.den * i2 / e.n2 - eps2) / eps2)
    }

    /// Residuals multiplied through by the denominators, for sign scans.
    pub fn cleared_residuals(&self, i1: f64, i2: f64, eps2: f64) -> (f64, f64) {
        let e = self.eval(i1, i2);
        (e.den * i1 - eps2 * e.n1, e.den * i2 - eps2 * e.n2)
    }

    /// Log residuals `g` and their Jacobian with respect to `(ln I1, ln I2)`.
    pub(crate) fn log_system(&self, u: Vector2<f64>, ln_eps2: f64) -> (Vector2<f64>, Matrix2<f64>) {
        let (i1, i2) = (u[0].exp(), u[1].exp());
        let e = self.eval(i1, i2);
        let lden = e.den.ln();
        let g = Vector2::new(lden + u[0] - e.n1.ln() - ln_eps2, lden + u[1] - e.n2.ln() - ln_eps2);
        let j = Matrix2::new(
            1.0 + i1 * e.den_1 / e.den,
            i2 * (e.den_2 / e.den - e.n1_2 / e.n1),
            i1 * (e.den_1 / e.den - e.n2_1 / e.n2),
            1.0 + i2 * e.den_2 / e.den,
        );
        (g, j)
    }

    /// Whether mode 2 decouples entirely (no drive and no coherence feeding it).
    fn mode2_dark(&self) -> bool {
        self.mu == 0.0 && self.xi21.norm() == 0.0
    }

    /// Solution of the equations with the optomechanical shifts switched off.
    pub fn linear_response(&self, eps2: f64) -> (f64, f64) {
        let lin = CoupledSystem {
            beta1: 0.0,
            beta2: 0.0,
            ..*self
        };
        let e = lin.eval(0.0, 0.0);
        (eps2 * e.n1 / e.den, eps2 * e.n2 / e.den)
    }

    /// Sign of the Jacobian determinant; positive on branches continuously
    /// connected to the zero-drive state without crossing a fold.
    pub fn jacobian_sign(&self, i1: f64, i2: f64) -> f64 {
        let (_, j) = self.log_system(Vector2::new(i1.ln(), i2.ln()), 0.0);
        j.determinant().signum()
    }

    /// Damped Newton from `u0`. Returns the converged log intensities.
    pub(crate) fn newton(&self, u0: Vector2<f64>, ln_eps2: f64) -> Option<Vector2<f64>> {
        let mut u = u0;
        let (mut g, mut j) = self.log_system(u, ln_eps2);
        let mut norm = g.amax();
        for _ in 0..NEWTON_MAX_ITERS {
            if !norm.is_finite() {
                return None;
            }
            if norm < 1e-13 {
                return Some(u);
            }
            let mut step = j.lu().solve(&(-g))?;
            let big = step.amax();
            if big > MAX_LOG_STEP {
                step *= MAX_LOG_STEP / big;
            }
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial = u + step * lambda;
                let (gt, jt) = self.log_system(trial, ln_eps2);
                let nt = gt.amax();
                if nt.is_finite() && nt < norm * (1.0 - 1e-4 * lambda) {
                    u = trial;
                    g = gt;
                    j = jt;
                    norm = nt;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                return (norm < 1e-10).then_some(u);
            }
        }
        (norm < 1e-10).then_some(u)
    }

    fn state(&self, i1: f64, i2: f64, eps2: f64) -> CoupledSteadyState {
        let (r1, r2) = self.relative_residuals(i1, i2, eps2);
        CoupledSteadyState {
            i1,
            i2,
            residual_norm: r1.abs().max(r2.abs()),
            stable: self.jacobian_sign(i1, i2) > 0.0,
            branch_id: 0,
        }
    }

    /// All non-negative steady states at drive `eps2 = |ε1|²`.
    pub fn roots(&self, eps2: f64, scan: &ScanOptions) -> Result<Vec<CoupledSteadyState>, SolverError> {
        if eps2 == 0.0 {
            return Ok(vec![CoupledSteadyState {
                i1: 0.0,
                i2: 0.0,
                residual_norm: 0.0,
                stable: true,
                branch_id: 0,
            }]);
        }
        if self.mode2_dark() {
            return self.single_mode_roots(eps2);
        }
        let (lin1, lin2) = self.linear_response(eps2);
        let lo = scan
            .i_min
            .min(0.01 * lin1.min(lin2))
            .max(f64::MIN_POSITIVE.sqrt());
        let hi = scan.i_max.max(100.0 * lin1.max(lin2));

        let mut found: Vec<(f64, f64)> = Vec::new();
        let mut points = scan.points.max(8);
        for _attempt in 0..3 {
            found = self.scan_and_polish(eps2, lo, hi, points);
            if let Some(u) = self.newton(Vector2::new(lin1.ln(), lin2.ln()), eps2.ln()) {
                push_unique(&mut found, (u[0].exp(), u[1].exp()));
            }
            if found.len() % 2 == 1 {
                break;
            }
            points *= 2;
        }
        let mut out: Vec<CoupledSteadyState> = found
            .into_iter()
            .map(|(i1, i2)| self.state(i1, i2, eps2))
            .filter(|s| s.residual_norm <= RESIDUAL_TOL)
            .collect();
        if out.is_empty() {
            return Err(SolverError::NoRoots(format!(
                "eps^2 = {eps2:e}, delta0 = {:e}, scan [{lo:e}, {hi:e}] x {points}",
                self.delta0
            )));
        }
        out.sort_by(|a, b| (a.i1.ln() + a.i2.ln()).total_cmp(&(b.i1.ln() + b.i2.ln())));
        for (k, s) in out.iter_mut().enumerate() {
            s.branch_id = k;
        }
        Ok(out)
    }

    fn scan_and_polish(&self, eps2: f64, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
        let (ulo, uhi) = (lo.ln(), hi.ln());
        let du = (uhi - ulo) / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|k| (ulo + du * k as f64).exp()).collect();
        // Row-wise pieces: α1 and N2 depend on I1 only; α2* and N1 on I2 only.
        let a1: Vec<Complex64> = grid.iter().map(|&i| self.alpha1(i)).collect();
        let a2c: Vec<Complex64> = grid.iter().map(|&i| self.alpha2c(i)).collect();
        let n1: Vec<f64> = a2c.iter().map(|&a| (a + self.xi12 * self.mu).norm_sqr()).collect();
        let n2: Vec<f64> = a1.iter().map(|&a| (a.conj() * self.mu - self.xi21).norm_sqr()).collect();

        let signs = |r: usize| -> Vec<(bool, bool)> {
            let (i1, a) = (grid[r], a1[r]);
            (0..n)
                .map(|c| {
                    let den = (a * a2c[c] + self.cross).norm_sqr();
                    (den * i1 > eps2 * n1[c], den * grid[c] > eps2 * n2[r])
                })
                .collect()
        };
        let ln_eps2 = eps2.ln();
        let mut found = Vec::new();
        let mut prev = signs(0);
        for r in 1..n {
            let cur = signs(r);
            for c in 1..n {
                let corners = [prev[c - 1], prev[c], cur[c - 1], cur[c]];
                let mixed1 = corners.iter().any(|s| s.0) && corners.iter().any(|s| !s.0);
                let mixed2 = corners.iter().any(|s| s.1) && corners.iter().any(|s| !s.1);
                if mixed1 && mixed2 {
                    let seed = Vector2::new(ulo + du * (r as f64 - 0.5), ulo + du * (c as f64 - 0.5));
                    if let Some(u) = self.newton(seed, ln_eps2) {
                        push_unique(&mut found, (u[0].exp(), u[1].exp()));
                    }
                }
            }
            prev = cur;
        }
        found
    }

    /// Mode 2 stays empty; mode 1 reduces to a single cubic.
    fn single_mode_roots(&self, eps2: f64) -> Result<Vec<CoupledSteadyState>, SolverError> {
        let cubic = RwaCubic {
            mode: 1,
            k: self.a1.re,
            delta: self.delta0 - self.a1.im,
            beta: self.beta1,
            eps2,
        };
        Ok(cubic
            .roots()
            .into_iter()
            .enumerate()
            .map(|(k, i1)| CoupledSteadyState {
                i1,
                i2: 0.0,
                residual_norm: (cubic.eval(i1) - eps2).abs() / eps2,
                stable: cubic.slope(i1) >= 0.0,
                branch_id: k,
            })
            .collect())
    }
}

fn push_unique(found: &mut Vec<(f64, f64)>, cand: (f64, f64)) {
    let close = |a: f64, b: f64| (a - b).abs() <= DEDUP_TOL * a.abs().max(b.abs());
    if !found.iter().any(|&(a, b)| close(a, cand.0) && close(b, cand.1)) {
        found.push(cand);
    }
}

/// All steady states at power `power` (of mode 1) and detuning `delta0`,
/// with `delta01 = delta0`, `delta02 = −delta0` and `|ε2| = μ|ε1|`.
pub fn coupled_roots(
    p: &SystemParams,
    power: f64,
    delta0: f64,
    mu: f64,
) -> Result<Vec<CoupledSteadyState>, SolverError> {
    let xi = gain_coefficients(&p.atom)?;
    coupled_roots_with(p, &xi, power, delta0, mu, &ScanOptions::default())
}

pub fn coupled_roots_with(
    p: &SystemParams,
    xi: &GainCoefficients,
    power: f64,
    delta0: f64,
    mu: f64,
    scan: &ScanOptions,
) -> Result<Vec<CoupledSteadyState>, SolverError> {
    if mu < 0.0 || !mu.is_finite() {
        return Err(SolverError::Unsupported(format!("mu must be >= 0, got {mu}")));
    }
    let sys = CoupledSystem::new(p, xi, delta0, mu);
    let eps2 = sys.eps2_for_power(power);
    sys.roots(eps2, scan)
}
