//! Steady-state intracavity intensities: root finding, stability, hysteresis
//! tracing and bistability maps.
//!
//! Two frames are supported. In the [`Frame::Rwa`] frame the intermode
//! terms are dropped and each mode obeys its own cubic. In the
//! [`Frame::BeyondRwa`] frame the detunings are tied as `delta02 = -delta01`
//! and the two intensities solve a coupled pair of equations.

mod continuation;
mod coupled;
pub mod cubic;
mod phase;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::gain_medium::GainCoefficients;
use crate::params::{derived_quantities, drive_amplitude, power_for_amplitude, SystemParams};

pub use continuation::{trace_hysteresis, trace_hysteresis_with, ContinuationOptions};
pub use coupled::{coupled_roots, coupled_roots_with, CoupledSystem, ScanOptions};
pub use phase::{bistability_phase_diagram, cell_summary, folds_at, PhaseCell, PowerFolds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Rwa,
    #[default]
    BeyondRwa,
}

impl FromStr for Frame {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rwa" => Ok(Frame::Rwa),
            "beyond-rwa" => Ok(Frame::BeyondRwa),
            other => Err(format!("unknown frame `{other}` (expected rwa | beyond-rwa)")),
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frame::Rwa => "rwa",
            Frame::BeyondRwa => "beyond-rwa",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RwaSteadyState {
    pub mode: usize,
    #[serde(rename = "I")]
    pub intensity: f64,
    pub delta_eff: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledSteadyState {
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    pub residual_norm: f64,
    pub stable: bool,
    pub branch_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    #[serde(rename = "P")]
    pub power: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoint {
    #[serde(rename = "P")]
    pub power: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
}

/// Shape of a hysteresis loop as seen in one mode's intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    #[serde(rename = "none")]
    None,
    S,
    #[serde(rename = "ribbon")]
    Ribbon,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::None => "none",
            Topology::S => "S",
            Topology::Ribbon => "ribbon",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HysteresisTrace {
    pub sweep_values: Vec<f64>,
    pub branches: Vec<Vec<BranchPoint>>,
    pub turning_points: Vec<TurningPoint>,
    /// Overall shape: ribbon when I1 falls and I2 rises between the folds.
    pub topology: Topology,
    pub topology_mode1: Topology,
    pub topology_mode2: Topology,
}

/// Optomechanical frequency pull per photon, `2 ω_m G^2 / (γ_m^2/4 + ω_m^2)`.
pub fn beta_coefficients(p: &SystemParams) -> (f64, f64) {
    let d = derived_quantities(p);
    let m = &p.mech;
    let beta = |g: f64, w: f64, gm: f64| 2.0 * w * g * g / (gm * gm / 4.0 + w * w);
    (
        beta(d.g_om1, m.omega_m1, m.gamma_m1),
        beta(d.g_om2, m.omega_m2, m.gamma_m2),
    )
}

/// The single-mode cubic `I[k^2 + (delta - beta I)^2] = eps2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwaCubic {
    pub mode: usize,
    /// Effective half-linewidth `κ/2 ± Re ξ`.
    pub k: f64,
    /// Effective detuning `δ0 ± Im ξ` at zero intensity.
    pub delta: f64,
    pub beta: f64,
    pub eps2: f64,
}

impl RwaCubic {
    pub fn new(p: &SystemParams, xi: &GainCoefficients, mode: usize, power: f64) -> Self {
        let (b1, b2) = beta_coefficients(p);
        let c = &p.cavity;
        let (kappa, delta0, xi_jj, beta, omega_l) = match mode {
            1 => (c.kappa1, c.delta01, xi.xi11, b1, c.laser_frequency(1)),
            _ => (c.kappa2, c.delta02, xi.xi22, b2, c.laser_frequency(2)),
        };
        let sign = if mode == 1 { -1.0 } else { 1.0 };
        let eps = drive_amplitude(kappa, power, omega_l);
        RwaCubic {
            mode,
            k: kappa / 2.0 + sign * xi_jj.re,
            delta: delta0 + sign * xi_jj.im,
            beta,
            eps2: eps * eps,
        }
    }

    pub fn eval(&self, i: f64) -> f64 {
        let det = self.delta - self.beta * i;
        i * (self.k * self.k + det * det)
    }

    /// `d eps2 / dI`; negative on the unstable middle branch.
    pub fn slope(&self, i: f64) -> f64 {
        let b = self.beta;
        3.0 * b * b * i * i - 4.0 * b * self.delta * i + self.delta * self.delta + self.k * self.k
    }

    pub fn roots(&self) -> Vec<f64> {
        let b = self.beta;
        if self.eps2 == 0.0 {
            return vec![0.0];
        }
        // Work in units of the natural intensity scale to keep coefficients O(1).
        let scale = if b > 0.0 {
            self.delta.abs().max(self.k.abs()) / b
        } else {
            1.0
        };
        let s = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
        let a3 = b * b * s * s * s;
        let a2 = -2.0 * b * self.delta * s * s;
        let a1 = (self.delta * self.delta + self.k * self.k) * s;
        let a0 = -self.eps2;
        let mut roots: Vec<f64> = cubic::real_roots(a3, a2, a1, a0)
            .into_iter()
            .map(|x| x * s)
            .filter(|x| *x >= 0.0)
            .collect();
        for r in roots.iter_mut() {
            *r = self.polish(*r);
        }
        roots.sort_by(|x, y| x.total_cmp(y));
        roots
    }

    /// Newton refinement on the unscaled residual.
    fn polish(&self, mut i: f64) -> f64 {
        for _ in 0..4 {
            let f = self.eval(i) - self.eps2;
            let df = self.slope(i);
            if df == 0.0 {
                break;
            }
            let next = i - f / df;
            if !(next >= 0.0) || (self.eval(next) - self.eps2).abs() >= f.abs() {
                break;
            }
            i = next;
        }
        i
    }

    /// Intensities `(I_-, I_+)` of the two folds, if the cubic is bistable.
    pub fn fold_intensities(&self) -> Option<(f64, f64)> {
        let disc = self.delta * self.delta - 3.0 * self.k * self.k;
        if self.beta <= 0.0 || self.delta <= 0.0 || disc <= 0.0 {
            return None;
        }
        let r = disc.sqrt();
        Some((
            (2.0 * self.delta - r) / (3.0 * self.beta),
            (2.0 * self.delta + r) / (3.0 * self.beta),
        ))
    }
}

fn rwa_cubic_checked(
    p: &SystemParams,
    xi: &GainCoefficients,
    mode: usize,
    power: f64,
) -> Result<RwaCubic, SolverError> {
    if mode != 1 && mode != 2 {
        return Err(SolverError::Unsupported(format!("mode must be 1 or 2, got {mode}")));
    }
    let cubic = RwaCubic::new(p, xi, mode, power);
    if cubic.k <= 0.0 {
        return Err(SolverError::AboveThreshold {
            mode,
            damping: cubic.k,
        });
    }
    Ok(cubic)
}

/// All steady states of one mode in the RWA frame at drive power `power`.
pub fn rwa_roots(p: &SystemParams, mode: usize, power: f64) -> Result<Vec<RwaSteadyState>, SolverError> {
    let xi = crate::gain_medium::gain_coefficients(&p.atom)?;
    rwa_roots_with(p, &xi, mode, power)
}

pub fn rwa_roots_with(
    p: &SystemParams,
    xi: &GainCoefficients,
    mode: usize,
    power: f64,
) -> Result<Vec<RwaSteadyState>, SolverError> {
    let cubic = rwa_cubic_checked(p, xi, mode, power)?;
    Ok(cubic
        .roots()
        .into_iter()
        .map(|i| RwaSteadyState {
            mode,
            intensity: i,
            delta_eff: cubic.delta - cubic.beta * i,
            stable: cubic.slope(i) >= 0.0,
        })
        .collect())
}

/// Fold powers `(P_low, P_high)` of the RWA cubic at detuning `delta0`.
pub fn rwa_fold_powers(
    p: &SystemParams,
    xi: &GainCoefficients,
    mode: usize,
) -> Result<Option<(f64, f64)>, SolverError> {
    let unit = rwa_cubic_checked(p, xi, mode, 1.0)?;
    let Some((lo, hi)) = unit.fold_intensities() else {
        return Ok(None);
    };
    let c = &p.cavity;
    let (kappa, omega_l) = if mode == 1 {
        (c.kappa1, c.laser_frequency(1))
    } else {
        (c.kappa2, c.laser_frequency(2))
    };
    let to_power = |i: f64| power_for_amplitude(kappa, unit.eval(i).sqrt(), omega_l);
    // The fold at the larger intensity is where the upper branch ends (lower power).
    Ok(Some((to_power(hi), to_power(lo))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::preset;

    #[test]
    fn beta_scales_with_coupling_squared() {
        let mut p = preset("fig2").unwrap().params;
        let (b1, _) = beta_coefficients(&p);
        let d = derived_quantities(&p);
        let m = &p.mech;
        let expect = 2.0 * m.omega_m1 * d.g_om1.powi(2) / (m.gamma_m1.powi(2) / 4.0 + m.omega_m1.powi(2));
        assert!((b1 - expect).abs() <= 1e-14 * expect);
        assert!((b1 - 1.7649).abs() < 1e-3, "{b1}");
        p.cavity.l1 /= 2.0;
        let (b1x, _) = beta_coefficients(&p);
        assert!((b1x / b1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn linear_limit_has_one_root() {
        let c = RwaCubic {
            mode: 1,
            k: 2.0,
            delta: 3.0,
            beta: 0.0,
            eps2: 26.0,
        };
        assert_eq!(c.roots(), vec![26.0 / 13.0]);
    }

    #[test]
    fn fold_intensities_have_zero_slope() {
        let c = RwaCubic {
            mode: 1,
            k: 1e5,
            delta: 1e7,
            beta: 1.76,
            eps2: 1.0,
        };
        let (lo, hi) = c.fold_intensities().unwrap();
        for i in [lo, hi] {
            assert!(c.slope(i).abs() <= 1e-9 * c.delta * c.delta);
        }
        let mid = c.eval(0.5 * (lo + hi));
        let cubic = RwaCubic { eps2: mid, ..c };
        let roots = cubic.roots();
        assert_eq!(roots.len(), 3);
        assert!(cubic.slope(roots[1]) < 0.0);
    }

    #[test]
    fn frame_parses() {
        assert_eq!("rwa".parse::<Frame>().unwrap(), Frame::Rwa);
        assert_eq!("beyond-rwa".parse::<Frame>().unwrap(), Frame::BeyondRwa);
        assert!("other".parse::<Frame>().is_err());
    }
}
