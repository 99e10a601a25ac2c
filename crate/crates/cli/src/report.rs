//! Text, CSV and JSON renderings of single-point results.

use std::fmt::Write;

use cascade_optomech::bistability::{CoupledSteadyState, HysteresisTrace, RwaSteadyState};
use cascade_optomech::entanglement::EntanglementReport;
use cascade_optomech::gain_medium::GainCoefficients;
use cascade_optomech::sweep::{format_float as f, Format};
use serde::Serialize;

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("results serialise");
    s.push('\n');
    s
}

pub fn xi(xi: &GainCoefficients, format: Option<Format>) -> String {
    let rows = [("xi11", xi.xi11), ("xi12", xi.xi12), ("xi21", xi.xi21), ("xi22", xi.xi22)];
    let mut out = String::new();
    match format {
        Some(Format::Json) => return json(xi),
        Some(Format::Csv) => {
            out.push_str("coefficient,re,im\n");
            for (name, z) in rows {
                let _ = writeln!(out, "{name},{},{}", f(z.re), f(z.im));
            }
        }
        None => {
            let _ = writeln!(out, "{:<6}{:>16}{:>16}", "", "Re [1/s]", "Im [1/s]");
            for (name, z) in rows {
                // `+ 0.0` turns a negative zero into a positive one.
                let _ = writeln!(out, "{name:<6}{:>16.6e}{:>16.6e}", z.re + 0.0, z.im + 0.0);
            }
        }
    }
    out
}

pub fn rwa_roots(roots: &[RwaSteadyState], format: Option<Format>) -> String {
    if format == Some(Format::Json) {
        return json(roots);
    }
    let mut out = String::from("mode,I,delta_eff_rad_s,stable\n");
    for r in roots {
        let _ = match format {
            Some(_) => writeln!(out, "{},{},{},{}", r.mode, f(r.intensity), f(r.delta_eff), r.stable),
            None => writeln!(
                out,
                "{},{:.6e},{:.6e},{}",
                r.mode,
                r.intensity,
                r.delta_eff,
                if r.stable { "stable" } else { "unstable" }
            ),
        };
    }
    out
}

pub fn coupled_roots(roots: &[CoupledSteadyState], format: Option<Format>) -> String {
    if format == Some(Format::Json) {
        return json(roots);
    }
    let mut out = String::from("I1,I2,residual,stable\n");
    for r in roots {
        let _ = match format {
            Some(_) => writeln!(out, "{},{},{},{}", f(r.i1), f(r.i2), f(r.residual_norm), r.stable),
            None => writeln!(
                out,
                "{:.6e},{:.6e},{:.1e},{}",
                r.i1,
                r.i2,
                r.residual_norm,
                if r.stable { "stable" } else { "unstable" }
            ),
        };
    }
    out
}

pub fn hysteresis(trace: &HysteresisTrace, format: Option<Format>) -> String {
    if format == Some(Format::Json) {
        return json(trace);
    }
    let mut out = String::new();
    if format.is_none() {
        let _ = writeln!(
            out,
            "# topology {} (mode 1 {}, mode 2 {})",
            trace.topology, trace.topology_mode1, trace.topology_mode2
        );
        for t in &trace.turning_points {
            let _ = writeln!(out, "# turning point P = {:.6e} W, I1 = {:.6e}, I2 = {:.6e}", t.power, t.i1, t.i2);
        }
    }
    out.push_str("branch,P_W,I1,I2,stable\n");
    for (k, branch) in trace.branches.iter().enumerate() {
        for b in branch {
            let _ = writeln!(out, "{k},{},{},{},{}", f(b.power), f(b.i1), f(b.i2), b.stable);
        }
    }
    out
}

pub fn entanglement(rep: &EntanglementReport, format: Option<Format>) -> String {
    if format == Some(Format::Json) {
        return json(rep);
    }
    let e = &rep.effective;
    let mut rows: Vec<(&str, String)> = Vec::new();
    match &rep.result {
        Some(r) => {
            rows.push(("E_N", f(r.e_n)));
            rows.push(("Lambda", f(r.lambda)));
        }
        None => {
            rows.push(("E_N", "unstable".into()));
            rows.push(("Lambda", String::new()));
        }
    }
    rows.push(("stable", rep.stable.to_string()));
    rows.push(("unphysical", rep.unphysical.to_string()));
    for (name, v) in [
        ("Gamma1", e.gamma1),
        ("Gamma2", e.gamma2),
        ("G12", e.g12),
        ("G21", e.g21),
        ("K", e.k),
        ("kappa1p", e.kappa1p),
        ("kappa2p", e.kappa2p),
        ("u1", e.u1),
        ("u2", e.u2),
        ("v1", e.v1),
        ("v2", e.v2),
        ("I1", e.i1),
        ("I2", e.i2),
    ] {
        rows.push((name, f(v)));
    }
    let mut out = String::new();
    match format {
        Some(_) => {
            out.push_str("quantity,value\n");
            for (k, v) in rows {
                let _ = writeln!(out, "{k},{v}");
            }
        }
        None => {
            for (k, v) in rows {
                let _ = writeln!(out, "{k:<11}{v}");
            }
        }
    }
    out
}
