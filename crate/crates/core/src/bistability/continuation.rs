//! Pseudo-arclength continuation of the coupled steady states in drive power.
//!
//! The curve lives in `z = (ln I1, ln I2, ln ε²)`. The tangent of a curve
//! cut out by two equations in three unknowns is the cross product of the
//! two Jacobian rows, so no null-space solve is needed.

use nalgebra::{Matrix3, Vector2, Vector3};

use super::coupled::{CoupledSystem, ScanOptions};
use super::{BranchPoint, HysteresisTrace, Topology, TurningPoint};
use crate::error::SolverError;
use crate::gain_medium::{gain_coefficients, GainCoefficients};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    pub n_steps: usize,
    /// Consecutive rejected steps tolerated before giving up.
    pub max_rejections: usize,
    /// Relative accuracy of fold powers.
    pub fold_rel_tol: f64,
    pub max_points: usize,
    pub scan: ScanOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            n_steps: 200,
            max_rejections: 20,
            fold_rel_tol: 1e-4,
            max_points: 200_000,
            scan: ScanOptions::default(),
        }
    }
}

const CORRECTOR_ITERS: usize = 12;
const CORRECTOR_TOL: f64 = 1e-11;
/// Minimum cosine between successive tangents for a step to be accepted.
const MIN_TANGENT_COS: f64 = 0.9;
/// Largest admissible |ln I| before a branch is considered divergent.
const LN_I_LIMIT: f64 = 80.0;

struct Tracer<'a> {
    sys: &'a CoupledSystem,
    q_lo: f64,
    q_hi: f64,
    h_max: f64,
    opts: &'a ContinuationOptions,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    z: Vector3<f64>,
    fold: bool,
}

impl<'a> Tracer<'a> {
    fn residual_and_jacobian(&self, z: &Vector3<f64>) -> (Vector2<f64>, Vector3<f64>, Vector3<f64>) {
        let (g, j) = self.sys.log_system(Vector2::new(z[0], z[1]), z[2]);
        (
            g,
            Vector3::new(j[(0, 0)], j[(0, 1)], -1.0),
            Vector3::new(j[(1, 0)], j[(1, 1)], -1.0),
        )
    }

    fn tangent(&self, z: &Vector3<f64>) -> Vector3<f64> {
        let (_, r0, r1) = self.residual_and_jacobian(z);
        r0.cross(&r1).normalize()
    }

    /// Newton on `[g(z) = 0, t·(z − base) = s]`.
    fn correct(&self, base: &Vector3<f64>, t: &Vector3<f64>, s: f64) -> Option<(Vector3<f64>, usize)> {
        let mut z = base + t * s;
        for it in 1..=CORRECTOR_ITERS {
            let (g, r0, r1) = self.residual_and_jacobian(&z);
            let arc = t.dot(&(z - base)) - s;
            let m = Matrix3::from_rows(&[r0.transpose(), r1.transpose(), t.transpose()]);
            let dz = m.lu().solve(&Vector3::new(-g[0], -g[1], -arc))?;
            z += dz;
            if !z.iter().all(|v| v.is_finite()) {
                return None;
            }
            if dz.amax() < 1e-12 * (1.0 + z.amax()) {
                let (g, _, _) = self.residual_and_jacobian(&z);
                return (g.amax() < CORRECTOR_TOL).then_some((z, it));
            }
        }
        let (g, _, _) = self.residual_and_jacobian(&z);
        (g.amax() < CORRECTOR_TOL).then_some((z, CORRECTOR_ITERS))
    }

    /// Solves at fixed `q`, starting from `u0`.
    fn at_level(&self, u0: Vector2<f64>, q: f64) -> Option<Vector3<f64>> {
        self.sys.newton(u0, q).map(|u| Vector3::new(u[0], u[1], q))
    }

    /// Refines a fold between `a` and the point reached by stepping `h` along `ta`.
    fn refine_fold(&self, a: &Vector3<f64>, ta: &Vector3<f64>, h: f64) -> Option<Vector3<f64>> {
        let sign_at = |z: &Vector3<f64>| {
            let mut t = self.tangent(z);
            if t.dot(ta) < 0.0 {
                t = -t;
            }
            t[2].signum()
        };
        let s0 = ta[2].signum();
        let (mut lo, mut hi) = (0.0, h);
        let mut best = None;
        let rel_q = self.opts.fold_rel_tol * 1e-2;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let (z, _) = self.correct(a, ta, mid)?;
            if sign_at(&z) == s0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if let Some(prev) = best {
                let prev: Vector3<f64> = prev;
                if (prev[2] - z[2]).abs() < rel_q && (hi - lo) < 1e-9 * h.max(1e-12) {
                    best = Some(z);
                    break;
                }
            }
            best = Some(z);
        }
        best
    }

    /// Follows the curve from `start` in the direction where `ln ε²` moves as `dir`.
    fn trace(&self, start: Vector3<f64>, dir: f64) -> Result<Vec<Node>, SolverError> {
        let mut nodes = vec![Node { z: start, fold: false }];
        let mut z = start;
        let mut t = self.tangent(&z);
        if t[2] * dir < 0.0 {
            t = -t;
        }
        let outward = (dir < 0.0 && z[2] <= self.q_lo + 1e-12) || (dir > 0.0 && z[2] >= self.q_hi - 1e-12);
        if outward {
            return Ok(nodes);
        }
        let mut h = self.h_max * 0.25;
        let h_min = self.h_max * 1e-10;
        let mut rejections = 0;
        loop {
            if nodes.len() > self.opts.max_points {
                return Err(SolverError::StepSize(format!(
                    "exceeded {} continuation points",
                    self.opts.max_points
                )));
            }
            let step = self.correct(&z, &t, h).and_then(|(z1, its)| {
                let mut t1 = self.tangent(&z1);
                if t1.dot(&t) < 0.0 {
                    t1 = -t1;
                }
                let ok = t1.dot(&t) >= MIN_TANGENT_COS && (z1 - z).norm() <= 1.5 * h;
                ok.then_some((z1, t1, its))
            });
            let Some((z1, t1, its)) = step else {
                rejections += 1;
                h *= 0.5;
                if rejections > self.opts.max_rejections || h < h_min {
                    return Err(SolverError::StepSize(format!(
                        "stuck at I1 = {:e}, I2 = {:e}, ln eps^2 = {:.6} after {rejections} rejections (h = {h:e})",
                        z[0].exp(),
                        z[1].exp(),
                        z[2]
                    )));
                }
                continue;
            };
            rejections = 0;
            if t[2] != 0.0 && t1[2] != 0.0 && t[2].signum() != t1[2].signum() {
                if let Some(f) = self.refine_fold(&z, &t, h) {
                    if f[2] > self.q_lo && f[2] < self.q_hi {
                        nodes.push(Node { z: f, fold: true });
                    }
                }
            }
            let leaving = z1[2] > self.q_hi || z1[2] < self.q_lo;
            if leaving {
                let q_edge = if z1[2] > self.q_hi { self.q_hi } else { self.q_lo };
                let frac = (q_edge - z[2]) / (z1[2] - z[2]);
                let guess = Vector2::new(z[0] + frac * (z1[0] - z[0]), z[1] + frac * (z1[1] - z[1]));
                if let Some(edge) = self.at_level(guess, q_edge) {
                    nodes.push(Node { z: edge, fold: false });
                }
                return Ok(nodes);
            }
            if z1[0].abs() > LN_I_LIMIT || z1[1].abs() > LN_I_LIMIT {
                nodes.push(Node { z: z1, fold: false });
                return Ok(nodes);
            }
            nodes.push(Node { z: z1, fold: false });
            z = z1;
            t = t1;
            if its <= 4 {
                h = (h * 1.5).min(self.h_max);
            }
        }
    }
}

pub fn trace_hysteresis(
    p: &SystemParams,
    p_range: (f64, f64),
    n_steps: usize,
    delta0: f64,
    mu: f64,
) -> Result<HysteresisTrace, SolverError> {
    let xi = gain_coefficients(&p.atom)?;
    let opts = ContinuationOptions {
        n_steps,
        ..ContinuationOptions::default()
    };
    trace_hysteresis_with(p, &xi, p_range, delta0, mu, &opts)
}

pub fn trace_hysteresis_with(
    p: &SystemParams,
    xi: &GainCoefficients,
    p_range: (f64, f64),
    delta0: f64,
    mu: f64,
    opts: &ContinuationOptions,
) -> Result<HysteresisTrace, SolverError> {
    if opts.n_steps < 50 {
        return Err(SolverError::Unsupported(format!("n_steps must be >= 50, got {}", opts.n_steps)));
    }
    let (mut p_lo, p_hi) = p_range;
    if !(p_hi > 0.0) || p_lo < 0.0 || p_lo >= p_hi {
        return Err(SolverError::Unsupported(format!("invalid power range [{p_lo:e}, {p_hi:e}]")));
    }
    if p_lo == 0.0 {
        p_lo = p_hi * 1e-6;
    }
    if mu == 0.0 && xi.xi21.norm() == 0.0 {
        return Err(SolverError::Unsupported(
            "mode 2 is neither driven nor coupled; use the RWA frame".into(),
        ));
    }
    let sys = CoupledSystem::new(p, xi, delta0, mu);
    let (e_lo, e_hi) = (sys.eps2_for_power(p_lo), sys.eps2_for_power(p_hi));
    let tracer = Tracer {
        sys: &sys,
        q_lo: e_lo.ln(),
        q_hi: e_hi.ln(),
        h_max: (e_hi.ln() - e_lo.ln()) / opts.n_steps as f64,
        opts,
    };

    let mut endpoints: Vec<Vector3<f64>> = Vec::new();
    for (eps2, q) in [(e_lo, tracer.q_lo), (e_hi, tracer.q_hi)] {
        for r in sys.roots(eps2, &opts.scan)? {
            endpoints.push(Vector3::new(r.i1.ln(), r.i2.ln(), q));
        }
    }

    let mut curves: Vec<Vec<Node>> = Vec::new();
    let covered = |curves: &Vec<Vec<Node>>, e: &Vector3<f64>| {
        curves.iter().flatten().any(|n| {
            (n.z[2] - e[2]).abs() < 1e-9 && (n.z[0] - e[0]).abs() < 1e-5 && (n.z[1] - e[1]).abs() < 1e-5
        })
    };
    for e in &endpoints {
        if covered(&curves, e) {
            continue;
        }
        let mut back = tracer.trace(*e, -1.0)?;
        let fwd = tracer.trace(*e, 1.0)?;
        back.reverse();
        back.extend_from_slice(&fwd[1..]);
        curves.push(back);
    }

    let point = |z: &Vector3<f64>, stable: bool| BranchPoint {
        power: sys.power_for_eps2(z[2].exp()),
        i1: z[0].exp(),
        i2: z[1].exp(),
        stable,
    };
    let mut branches: Vec<Vec<BranchPoint>> = Vec::new();
    let mut turning_points = Vec::new();
    // (A, B) candidates: the two fold ends of an unstable segment.
    let mut loop_folds: Option<(TurningPoint, TurningPoint)> = None;
    for curve in &curves {
        let mut segment: Vec<&Node> = Vec::new();
        for (idx, node) in curve.iter().enumerate() {
            segment.push(node);
            let last = idx + 1 == curve.len();
            if node.fold {
                let z = node.z;
                turning_points.push(TurningPoint {
                    power: sys.power_for_eps2(z[2].exp()),
                    i1: z[0].exp(),
                    i2: z[1].exp(),
                });
            }
            if (node.fold && segment.len() > 1) || last {
                let stable = segment_stability(&sys, &segment);
                branches.push(segment.iter().map(|n| point(&n.z, stable)).collect());
                let (first, end) = (segment[0], segment[segment.len() - 1]);
                if !stable && first.fold && end.fold && loop_folds.is_none() {
                    let tp = |n: &Node| TurningPoint {
                        power: sys.power_for_eps2(n.z[2].exp()),
                        i1: n.z[0].exp(),
                        i2: n.z[1].exp(),
                    };
                    let (x, y) = (tp(first), tp(end));
                    loop_folds = Some(if x.power >= y.power { (x, y) } else { (y, x) });
                }
                segment = vec![node];
            }
        }
    }
    turning_points.sort_by(|a, b| a.power.total_cmp(&b.power));

    let (topology, topology_mode1, topology_mode2) = match loop_folds {
        None => (Topology::None, Topology::None, Topology::None),
        Some((a, b)) => {
            let per_mode = |ia: f64, ib: f64| if ib > ia { Topology::S } else { Topology::Ribbon };
            let m1 = per_mode(a.i1, b.i1);
            let m2 = per_mode(a.i2, b.i2);
            let overall = if b.i1 < a.i1 && b.i2 > a.i2 {
                Topology::Ribbon
            } else {
                Topology::S
            };
            (overall, m1, m2)
        }
    };

    let n = opts.n_steps;
    let sweep_values = (0..n)
        .map(|k| p_range.0 + (p_hi - p_range.0) * k as f64 / (n - 1) as f64)
        .collect();
    Ok(HysteresisTrace {
        sweep_values,
        branches,
        turning_points,
        topology,
        topology_mode1,
        topology_mode2,
    })
}

/// Stability of a fold-free segment by majority vote of the Jacobian sign at
/// its non-fold nodes; a segment made only of fold nodes votes with all of them.
fn segment_stability(sys: &CoupledSystem, seg: &[&Node]) -> bool {
    let interior: Vec<&Node> = seg.iter().copied().filter(|n| !n.fold).collect();
    let probe = if interior.is_empty() { seg.to_vec() } else { interior };
    let votes: i64 = probe
        .iter()
        .map(|n| sys.jacobian_sign(n.z[0].exp(), n.z[1].exp()) as i64)
        .sum();
    votes > 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bistability::RwaCubic;
    use crate::params::{power_for_amplitude, preset};
    use num_complex::Complex64;

    /// With no intermode coupling, each mode's folds follow from its own cubic.
    #[test]
    fn uncoupled_folds_match_cubic() {
        let p = preset("fig3").unwrap().params;
        let mut xi = gain_coefficients(&p.atom).unwrap();
        xi.xi12 = Complex64::new(0.0, 0.0);
        xi.xi21 = Complex64::new(0.0, 0.0);
        xi.xi11 = Complex64::new(0.0, 0.0);
        let delta0 = 2.0 * std::f64::consts::PI * 1.5e6;
        let mu = 1.0;
        let cubic = RwaCubic {
            mode: 1,
            k: p.cavity.kappa1 / 2.0,
            delta: delta0,
            beta: crate::bistability::beta_coefficients(&p).0,
            eps2: 1.0,
        };
        let (ilo, ihi) = cubic.fold_intensities().unwrap();
        let power = |i: f64| power_for_amplitude(p.cavity.kappa1, cubic.eval(i).sqrt(), p.cavity.laser_frequency(1));
        let (pa, pb) = (power(ilo), power(ihi));
        let opts = ContinuationOptions::default();
        let trace = trace_hysteresis_with(&p, &xi, (pb * 0.2, pa * 5.0), delta0, mu, &opts).unwrap();
        let near = |target: f64| {
            trace
                .turning_points
                .iter()
                .any(|t| (t.power - target).abs() <= 1e-4 * target)
        };
        assert!(near(pa), "A = {pa:e}; found {:?}", trace.turning_points);
        assert!(near(pb), "B = {pb:e}; found {:?}", trace.turning_points);
        assert_eq!(trace.topology_mode1, Topology::S);
    }
}
