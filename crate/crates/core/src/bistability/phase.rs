//! Per-cell root counts and fold metadata for bistability maps.

use serde::{Deserialize, Serialize};

use super::continuation::{trace_hysteresis_with, ContinuationOptions};
use super::coupled::{coupled_roots_with, ScanOptions};
use super::{rwa_fold_powers, rwa_roots_with, Frame, Topology, TurningPoint};
use crate::error::{Error, SolverError};
use crate::gain_medium::GainCoefficients;
use crate::params::SystemParams;
use crate::sweep::{run_sweep, Axis, Evaluator, Scale, SweepResult, SweepSpec};

/// Fold powers and loop shape at one detuning, as used to annotate map cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFolds {
    pub turning_points: Vec<TurningPoint>,
    pub topology: Topology,
}

impl PowerFolds {
    /// The nearest folds below and above `power`.
    pub fn bracket(&self, power: f64) -> (Option<f64>, Option<f64>) {
        let below = self
            .turning_points
            .iter()
            .map(|t| t.power)
            .filter(|&q| q <= power)
            .fold(None, |acc: Option<f64>, q| Some(acc.map_or(q, |a| a.max(q))));
        let above = self
            .turning_points
            .iter()
            .map(|t| t.power)
            .filter(|&q| q > power)
            .fold(None, |acc: Option<f64>, q| Some(acc.map_or(q, |a| a.min(q))));
        (below, above)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub delta0: f64,
    pub power: f64,
    pub n_roots: usize,
    pub i1_low: Option<f64>,
    pub i1_high: Option<f64>,
    pub fold_p_low: Option<f64>,
    pub fold_p_high: Option<f64>,
    pub topology: Option<Topology>,
}

/// Folds for the RWA cubic of mode 1, or by continuation in the coupled frame.
pub fn folds_at(
    p: &SystemParams,
    xi: &GainCoefficients,
    frame: Frame,
    delta0: f64,
    mu: f64,
    power_span: (f64, f64),
) -> Result<PowerFolds, SolverError> {
    match frame {
        Frame::Rwa => {
            let mut q = p.clone();
            q.cavity.delta01 = delta0;
            let folds = rwa_fold_powers(&q, xi, 1)?;
            Ok(match folds {
                None => PowerFolds {
                    turning_points: vec![],
                    topology: Topology::None,
                },
                Some((lo, hi)) => PowerFolds {
                    turning_points: [lo, hi]
                        .into_iter()
                        .map(|power| TurningPoint {
                            power,
                            i1: f64::NAN,
                            i2: f64::NAN,
                        })
                        .collect(),
                    topology: Topology::S,
                },
            })
        }
        Frame::BeyondRwa => {
            let opts = ContinuationOptions::default();
            let trace = trace_hysteresis_with(p, xi, power_span, delta0, mu, &opts)?;
            Ok(PowerFolds {
                turning_points: trace.turning_points,
                topology: trace.topology_mode1,
            })
        }
    }
}

/// Root count and extremal intensities at one `(delta0, power)` point.
///
/// `folds` is only consulted for multistable cells.
#[allow(clippy::too_many_arguments)]
pub fn cell_summary(
    p: &SystemParams,
    xi: &GainCoefficients,
    frame: Frame,
    delta0: f64,
    power: f64,
    mu: f64,
    scan: &ScanOptions,
    folds: impl FnOnce() -> Result<PowerFolds, SolverError>,
) -> Result<PhaseCell, SolverError> {
    let i1s: Vec<f64> = match frame {
        Frame::Rwa => {
            let mut q = p.clone();
            q.cavity.delta01 = delta0;
            rwa_roots_with(&q, xi, 1, power)?.into_iter().map(|r| r.intensity).collect()
        }
        Frame::BeyondRwa => coupled_roots_with(p, xi, power, delta0, mu, scan)?
            .into_iter()
            .map(|r| r.i1)
            .collect(),
    };
    let n_roots = i1s.len();
    let mut cell = PhaseCell {
        delta0,
        power,
        n_roots,
        i1_low: None,
        i1_high: None,
        fold_p_low: None,
        fold_p_high: None,
        topology: None,
    };
    if n_roots > 1 {
        cell.i1_low = i1s.iter().copied().reduce(f64::min);
        cell.i1_high = i1s.iter().copied().reduce(f64::max);
        let f = folds()?;
        let (lo, hi) = f.bracket(power);
        cell.fold_p_low = lo;
        cell.fold_p_high = hi;
        cell.topology = Some(f.topology);
    }
    Ok(cell)
}

/// Builds and runs the `delta0 × P` sweep behind a bistability map.
#[allow(clippy::too_many_arguments)]
pub fn bistability_phase_diagram(
    p: &SystemParams,
    frame: Frame,
    delta0_range: (f64, f64),
    p_range: (f64, f64),
    grid: (usize, usize),
    mu: Option<f64>,
    parallelism: usize,
) -> Result<SweepResult, Error> {
    if grid.0 < 16 || grid.1 < 16 {
        return Err(Error::Spec(format!("grid must be at least 16x16, got {}x{}", grid.0, grid.1)));
    }
    let spec = SweepSpec {
        axes: vec![
            Axis {
                path: "delta0".into(),
                start: delta0_range.0,
                end: delta0_range.1,
                count: grid.0,
                scale: Scale::Linear,
            },
            Axis {
                path: "P".into(),
                start: p_range.0,
                end: p_range.1,
                count: grid.1,
                scale: Scale::Linear,
            },
        ],
        evaluator: Evaluator::Bistability {
            frame,
            mu,
            scan_points: ScanOptions::default().points,
        },
        base: p.clone(),
        parallelism,
    };
    run_sweep(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_picks_nearest() {
        let f = PowerFolds {
            turning_points: [1.0, 3.0, 7.0]
                .into_iter()
                .map(|power| TurningPoint {
                    power,
                    i1: 0.0,
                    i2: 0.0,
                })
                .collect(),
            topology: Topology::S,
        };
        assert_eq!(f.bracket(2.0), (Some(1.0), Some(3.0)));
        assert_eq!(f.bracket(0.5), (None, Some(1.0)));
        assert_eq!(f.bracket(9.0), (Some(7.0), None));
    }
}
