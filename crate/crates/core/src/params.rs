//! Physical parameters, unit handling and derived quantities.
//!
//! Every rate is stored internally as an angular frequency in rad/s. Config
//! documents may give values in other units; see [`Unit`]. The `Hz`-family
//! units scale by powers of ten only, so `3.4 MHz` means a rate of
//! `3.4e6 s^-1`. Use `two_pi_MHz` (or the `2pi:` prefix) when a value is an
//! ordinary frequency that needs the factor of 2π.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const HBAR: f64 = 1.0545718e-34;
pub const K_B: f64 = 1.380649e-23;
pub const C_LIGHT: f64 = 2.99792458e8;

/// Relative tolerance when checking an explicit `P2` against the one implied by `mu`.
const MU_CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("missing required field `{0}`")]
    MissingField(String),
    #[error("field `{field}` = {value} violates bound: {bound}")]
    OutOfRange {
        field: String,
        value: f64,
        bound: String,
    },
    #[error("unknown preset `{name}`; known presets: {}", known.join(", "))]
    UnknownPreset { name: String, known: Vec<String> },
    #[error("unknown parameter path `{0}`")]
    UnknownField(String),
    #[error("field `{field}`: unit `{unit}` is not a {expected} unit")]
    WrongUnit {
        field: String,
        unit: String,
        expected: &'static str,
    },
    #[error("unrecognised unit `{0}`")]
    UnknownUnit(String),
    #[error("cannot parse `{text}` as a quantity: {reason}")]
    BadQuantity { text: String, reason: String },
    #[error("malformed config: {0}")]
    Config(String),
}

/// Physical dimension of a parameter, used to reject unit mix-ups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Rate,
    Length,
    Power,
    Mass,
    Temperature,
    Dimensionless,
}

impl Dim {
    fn name(self) -> &'static str {
        match self {
            Dim::Rate => "rate",
            Dim::Length => "length",
            Dim::Power => "power",
            Dim::Mass => "mass",
            Dim::Temperature => "temperature",
            Dim::Dimensionless => "dimensionless",
        }
    }
}

/// A recognised unit: its dimension and SI scale factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unit {
    pub dim: Dim,
    pub scale: f64,
}

impl Unit {
    /// Parses a unit tag. A leading `2pi:` multiplies the scale by 2π.
    pub fn parse(tag: &str) -> Result<Unit, ParamError> {
        let tag = tag.trim();
        if let Some(rest) = tag.strip_prefix("2pi:") {
            let mut u = Unit::parse(rest)?;
            u.scale *= 2.0 * PI;
            return Ok(u);
        }
        let (dim, scale) = match tag {
            "" | "1" => (Dim::Dimensionless, 1.0),
            "Hz" => (Dim::Rate, 1.0),
            "kHz" => (Dim::Rate, 1e3),
            "MHz" => (Dim::Rate, 1e6),
            "GHz" => (Dim::Rate, 1e9),
            "rad_s" | "rad/s" => (Dim::Rate, 1.0),
            "two_pi_Hz" => (Dim::Rate, 2.0 * PI),
            "two_pi_kHz" => (Dim::Rate, 2.0 * PI * 1e3),
            "two_pi_MHz" => (Dim::Rate, 2.0 * PI * 1e6),
            "two_pi_GHz" => (Dim::Rate, 2.0 * PI * 1e9),
            "nm" => (Dim::Length, 1e-9),
            "um" | "µm" => (Dim::Length, 1e-6),
            "mm" => (Dim::Length, 1e-3),
            "m" => (Dim::Length, 1.0),
            "ng" => (Dim::Mass, 1e-12),
            "ug" => (Dim::Mass, 1e-9),
            "kg" => (Dim::Mass, 1.0),
            "K" => (Dim::Temperature, 1.0),
            "mK" => (Dim::Temperature, 1e-3),
            "pW" => (Dim::Power, 1e-12),
            "nW" => (Dim::Power, 1e-9),
            "uW" | "µW" => (Dim::Power, 1e-6),
            "mW" => (Dim::Power, 1e-3),
            "W" => (Dim::Power, 1.0),
            other => return Err(ParamError::UnknownUnit(other.to_string())),
        };
        Ok(Unit { dim, scale })
    }
}

/// Parses the override micro-syntax: `[-][2pi*]<number>[unit]`.
///
/// Returns the numeric value scaled to SI and the unit's dimension, or
/// `None` for the dimension when no unit was written.
pub fn parse_quantity(text: &str) -> Result<(f64, Option<Dim>), ParamError> {
    let bad = |reason: &str| ParamError::BadQuantity {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    let mut s = text.trim();
    let mut sign = 1.0;
    if let Some(rest) = s.strip_prefix('-') {
        if rest.starts_with("2pi") || rest.starts_with("2π") {
            sign = -1.0;
            s = rest;
        }
    }
    let mut factor = 1.0;
    for prefix in ["2pi*", "2π*", "2pi:", "2π:"] {
        if let Some(rest) = s.strip_prefix(prefix) {
            factor = 2.0 * PI;
            s = rest.trim_start();
            break;
        }
    }
    let split = numeric_prefix_len(s);
    if split == 0 {
        return Err(bad("no leading number"));
    }
    let number: f64 = s[..split].parse().map_err(|_| bad("invalid number"))?;
    let unit_tag = s[split..].trim();
    if unit_tag.is_empty() {
        return Ok((sign * factor * number, None));
    }
    let unit = Unit::parse(unit_tag)?;
    Ok((sign * factor * number * unit.scale, Some(unit.dim)))
}

/// Length of the longest prefix of `s` that parses as a float.
fn numeric_prefix_len(s: &str) -> usize {
    let bytes = s.as_bytes();
    let mut best = 0;
    for end in 1..=bytes.len() {
        if !s.is_char_boundary(end) {
            continue;
        }
        let c = bytes[end - 1];
        if !(c.is_ascii_digit() || matches!(c, b'.' | b'e' | b'E' | b'+' | b'-')) {
            break;
        }
        if s[..end].parse::<f64>().is_ok() {
            best = end;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    pub g1: f64,
    pub g2: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub gamma_c: f64,
    pub gamma_ab: f64,
    pub gamma_bc: f64,
    pub gamma_ac: f64,
    #[serde(rename = "Delta1")]
    pub delta1: f64,
    #[serde(rename = "Delta2")]
    pub delta2: f64,
    pub r_a: f64,
    pub eta: f64,
}

impl AtomParams {
    /// Initial populations and coherence `(rho_aa0, rho_cc0, rho_ac0)` of an injected atom.
    pub fn initial_state(&self) -> (f64, f64, f64) {
        let eta = self.eta;
        let coh = (1.0 - eta * eta).max(0.0).sqrt() / 2.0;
        ((1.0 - eta) / 2.0, (1.0 + eta) / 2.0, coh)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "P1")]
    pub p1: f64,
    #[serde(rename = "P2")]
    pub p2: f64,
    pub delta01: f64,
    pub delta02: f64,
    #[serde(rename = "N1")]
    pub n1: f64,
    #[serde(rename = "N2")]
    pub n2: f64,
    /// Drive-amplitude ratio |ε2|/|ε1|. When set, `P2` follows `P1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

impl CavityParams {
    pub fn laser_frequency(&self, mode: usize) -> f64 {
        let lambda = if mode == 1 { self.lambda1 } else { self.lambda2 };
        2.0 * PI * C_LIGHT / lambda
    }

    /// The `P2` implied by `P1` and `mu`, i.e. the power giving |ε2| = μ|ε1|.
    pub fn p2_from_mu(&self, mu: f64) -> f64 {
        mu * mu * self.p1 * (self.kappa1 / self.kappa2) * (self.laser_frequency(2) / self.laser_frequency(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechParams {
    pub omega_m1: f64,
    pub omega_m2: f64,
    pub gamma_m1: f64,
    pub gamma_m2: f64,
    pub m1: f64,
    pub m2: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub atom: AtomParams,
    pub cavity: CavityParams,
    pub mech: MechParams,
}

/// Quantities computed once from a validated [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Derived {
    pub g_om1: f64,
    pub g_om2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub n1: f64,
    pub n2: f64,
    pub nu1: f64,
    pub nu2: f64,
}

/// Mean thermal occupation at frequency `omega` and temperature `t`.
pub fn thermal_occupation(omega: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (K_B * t)).exp_m1()
}

/// Inverse of [`thermal_occupation`]: the temperature giving occupation `n`.
pub fn temperature_for_occupation(omega: f64, n: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    HBAR * omega / (K_B * (1.0 / n).ln_1p())
}

/// Optomechanical coupling `(ν/L)·sqrt(ħ/(m ω_m))`.
pub fn optomechanical_coupling(nu: f64, length: f64, mass: f64, omega_m: f64) -> f64 {
    (nu / length) * (HBAR / (mass * omega_m)).sqrt()
}

/// Drive amplitude `sqrt(κ P / (ħ ω_L))`.
pub fn drive_amplitude(kappa: f64, power: f64, omega_l: f64) -> f64 {
    (kappa * power / (HBAR * omega_l)).sqrt()
}

/// Power that produces drive amplitude `eps`; inverse of [`drive_amplitude`].
pub fn power_for_amplitude(kappa: f64, eps: f64, omega_l: f64) -> f64 {
    eps * eps * HBAR * omega_l / kappa
}

pub fn derived_quantities(p: &SystemParams) -> Derived {
    let c = &p.cavity;
    let m = &p.mech;
    let nu1 = c.laser_frequency(1);
    let nu2 = c.laser_frequency(2);
    let eps1 = drive_amplitude(c.kappa1, c.p1, nu1);
    let eps2 = match c.mu {
        Some(mu) => mu * eps1,
        None => drive_amplitude(c.kappa2, c.p2, nu2),
    };
    Derived {
        g_om1: optomechanical_coupling(nu1, c.l1, m.m1, m.omega_m1),
        g_om2: optomechanical_coupling(nu2, c.l2, m.m2, m.omega_m2),
        eps1,
        eps2,
        n1: thermal_occupation(m.omega_m1, m.t1),
        n2: thermal_occupation(m.omega_m2, m.t2),
        nu1,
        nu2,
    }
}

struct FieldSpec {
    path: &'static str,
    dim: Dim,
    /// Value used when neither a preset nor the document supplies the field.
    default: Option<f64>,
}

const fn field(path: &'static str, dim: Dim) -> FieldSpec {
    FieldSpec {
        path,
        dim,
        default: None,
    }
}

const fn optional(path: &'static str, dim: Dim, default: f64) -> FieldSpec {
    FieldSpec {
        path,
        dim,
        default: Some(default),
    }
}

const FIELDS: &[FieldSpec] = &[
    field("atom.g1", Dim::Rate),
    field("atom.g2", Dim::Rate),
    field("atom.Omega", Dim::Rate),
    field("atom.gamma_a", Dim::Rate),
    field("atom.gamma_b", Dim::Rate),
    field("atom.gamma_c", Dim::Rate),
    field("atom.gamma_ab", Dim::Rate),
    field("atom.gamma_bc", Dim::Rate),
    field("atom.gamma_ac", Dim::Rate),
    optional("atom.Delta1", Dim::Rate, 0.0),
    optional("atom.Delta2", Dim::Rate, 0.0),
    field("atom.r_a", Dim::Rate),
    field("atom.eta", Dim::Dimensionless),
    field("cavity.kappa1", Dim::Rate),
    field("cavity.kappa2", Dim::Rate),
    field("cavity.lambda1", Dim::Length),
    field("cavity.lambda2", Dim::Length),
    field("cavity.L1", Dim::Length),
    field("cavity.L2", Dim::Length),
    field("cavity.P1", Dim::Power),
    field("cavity.P2", Dim::Power),
    field("cavity.delta01", Dim::Rate),
    field("cavity.delta02", Dim::Rate),
    optional("cavity.N1", Dim::Dimensionless, 0.0),
    optional("cavity.N2", Dim::Dimensionless, 0.0),
    field("cavity.mu", Dim::Dimensionless),
    field("mech.omega_m1", Dim::Rate),
    field("mech.omega_m2", Dim::Rate),
    field("mech.gamma_m1", Dim::Rate),
    field("mech.gamma_m2", Dim::Rate),
    field("mech.m1", Dim::Mass),
    field("mech.m2", Dim::Mass),
    optional("mech.T1", Dim::Temperature, 0.0),
    optional("mech.T2", Dim::Temperature, 0.0),
];

fn field_spec(path: &str) -> Option<&'static FieldSpec> {
    FIELDS.iter().find(|f| f.path == path)
}

/// All settable parameter paths, in declaration order.
pub fn field_paths() -> impl Iterator<Item = &'static str> {
    FIELDS.iter().map(|f| f.path)
}

impl SystemParams {
    /// Reads a parameter by dotted path. `cavity.mu` reads as NaN when unset.
    pub fn get(&self, path: &str) -> Result<f64, ParamError> {
        let (a, c, m) = (&self.atom, &self.cavity, &self.mech);
        Ok(match path {
            "atom.g1" => a.g1,
            "atom.g2" => a.g2,
            "atom.Omega" => a.omega,
            "atom.gamma_a" => a.gamma_a,
            "atom.gamma_b" => a.gamma_b,
            "atom.gamma_c" => a.gamma_c,
            "atom.gamma_ab" => a.gamma_ab,
            "atom.gamma_bc" => a.gamma_bc,
            "atom.gamma_ac" => a.gamma_ac,
            "atom.Delta1" => a.delta1,
            "atom.Delta2" => a.delta2,
            "atom.r_a" => a.r_a,
            "atom.eta" => a.eta,
            "cavity.kappa1" => c.kappa1,
            "cavity.kappa2" => c.kappa2,
            "cavity.lambda1" => c.lambda1,
            "cavity.lambda2" => c.lambda2,
            "cavity.L1" => c.l1,
            "cavity.L2" => c.l2,
            "cavity.P1" => c.p1,
            "cavity.P2" => c.p2,
            "cavity.delta01" => c.delta01,
            "cavity.delta02" => c.delta02,
            "cavity.N1" => c.n1,
            "cavity.N2" => c.n2,
            "cavity.mu" => c.mu.unwrap_or(f64::NAN),
            "mech.omega_m1" => m.omega_m1,
            "mech.omega_m2" => m.omega_m2,
            "mech.gamma_m1" => m.gamma_m1,
            "mech.gamma_m2" => m.gamma_m2,
            "mech.m1" => m.m1,
            "mech.m2" => m.m2,
            "mech.T1" => m.t1,
            "mech.T2" => m.t2,
            other => return Err(ParamError::UnknownField(other.to_string())),
        })
    }

    /// Writes a parameter by dotted path without validating or re-deriving `P2`.
    pub fn set(&mut self, path: &str, value: f64) -> Result<(), ParamError> {
        let slot: &mut f64 = match path {
            "cavity.mu" => {
                self.cavity.mu = if value.is_nan() { None } else { Some(value) };
                return Ok(());
            }
            "atom.g1" => &mut self.atom.g1,
            "atom.g2" => &mut self.atom.g2,
            "atom.Omega" => &mut self.atom.omega,
            "atom.gamma_a" => &mut self.atom.gamma_a,
            "atom.gamma_b" => &mut self.atom.gamma_b,
            "atom.gamma_c" => &mut self.atom.gamma_c,
            "atom.gamma_ab" => &mut self.atom.gamma_ab,
            "atom.gamma_bc" => &mut self.atom.gamma_bc,
            "atom.gamma_ac" => &mut self.atom.gamma_ac,
            "atom.Delta1" => &mut self.atom.delta1,
            "atom.Delta2" => &mut self.atom.delta2,
            "atom.r_a" => &mut self.atom.r_a,
            "atom.eta" => &mut self.atom.eta,
            "cavity.kappa1" => &mut self.cavity.kappa1,
            "cavity.kappa2" => &mut self.cavity.kappa2,
            "cavity.lambda1" => &mut self.cavity.lambda1,
            "cavity.lambda2" => &mut self.cavity.lambda2,
            "cavity.L1" => &mut self.cavity.l1,
            "cavity.L2" => &mut self.cavity.l2,
            "cavity.P1" => &mut self.cavity.p1,
            "cavity.P2" => &mut self.cavity.p2,
            "cavity.delta01" => &mut self.cavity.delta01,
            "cavity.delta02" => &mut self.cavity.delta02,
            "cavity.N1" => &mut self.cavity.n1,
            "cavity.N2" => &mut self.cavity.n2,
            "mech.omega_m1" => &mut self.mech.omega_m1,
            "mech.omega_m2" => &mut self.mech.omega_m2,
            "mech.gamma_m1" => &mut self.mech.gamma_m1,
            "mech.gamma_m2" => &mut self.mech.gamma_m2,
            "mech.m1" => &mut self.mech.m1,
            "mech.m2" => &mut self.mech.m2,
            "mech.T1" => &mut self.mech.t1,
            "mech.T2" => &mut self.mech.t2,
            other => return Err(ParamError::UnknownField(other.to_string())),
        };
        *slot = value;
        Ok(())
    }

    /// Re-derives `P2` from `P1` when `mu` is set.
    pub fn sync_mu(&mut self) {
        if let Some(mu) = self.cavity.mu {
            self.cavity.p2 = self.cavity.p2_from_mu(mu);
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for spec in FIELDS {
            let v = self.get(spec.path)?;
            if spec.path == "cavity.mu" && v.is_nan() {
                continue;
            }
            if !v.is_finite() {
                return Err(out_of_range(spec.path, v, "must be finite"));
            }
        }
        let a = &self.atom;
        for (path, v) in [
            ("atom.Omega", a.omega),
            ("atom.gamma_a", a.gamma_a),
            ("atom.gamma_b", a.gamma_b),
            ("atom.gamma_c", a.gamma_c),
            ("atom.gamma_ab", a.gamma_ab),
            ("atom.gamma_bc", a.gamma_bc),
            ("atom.gamma_ac", a.gamma_ac),
            ("atom.r_a", a.r_a),
        ] {
            if v < 0.0 {
                return Err(out_of_range(path, v, ">= 0"));
            }
        }
        for (path, v) in [("atom.g1", a.g1), ("atom.g2", a.g2)] {
            if v <= 0.0 {
                return Err(out_of_range(path, v, "> 0"));
            }
        }
        if !(-1.0..=1.0).contains(&a.eta) {
            return Err(out_of_range("atom.eta", a.eta, "in [-1, 1]"));
        }
        let c = &self.cavity;
        for (path, v) in [
            ("cavity.kappa1", c.kappa1),
            ("cavity.kappa2", c.kappa2),
            ("cavity.lambda1", c.lambda1),
            ("cavity.lambda2", c.lambda2),
            ("cavity.L1", c.l1),
            ("cavity.L2", c.l2),
        ] {
            if v <= 0.0 {
                return Err(out_of_range(path, v, "> 0"));
            }
        }
        for (path, v) in [
            ("cavity.P1", c.p1),
            ("cavity.P2", c.p2),
            ("cavity.N1", c.n1),
            ("cavity.N2", c.n2),
        ] {
            if v < 0.0 {
                return Err(out_of_range(path, v, ">= 0"));
            }
        }
        if let Some(mu) = c.mu {
            if mu < 0.0 || !mu.is_finite() {
                return Err(out_of_range("cavity.mu", mu, ">= 0"));
            }
            let implied = c.p2_from_mu(mu);
            if (c.p2 - implied).abs() > MU_CONSISTENCY_TOL * implied.abs().max(f64::MIN_POSITIVE) {
                return Err(out_of_range(
                    "cavity.P2",
                    c.p2,
                    &format!("must equal {implied:e} W implied by P1 and mu"),
                ));
            }
        }
        let m = &self.mech;
        for (path, v) in [
            ("mech.omega_m1", m.omega_m1),
            ("mech.omega_m2", m.omega_m2),
            ("mech.m1", m.m1),
            ("mech.m2", m.m2),
        ] {
            if v <= 0.0 {
                return Err(out_of_range(path, v, "> 0"));
            }
        }
        for (path, v) in [
            ("mech.gamma_m1", m.gamma_m1),
            ("mech.gamma_m2", m.gamma_m2),
            ("mech.T1", m.t1),
            ("mech.T2", m.t2),
        ] {
            if v < 0.0 {
                return Err(out_of_range(path, v, ">= 0"));
            }
        }
        Ok(())
    }

    /// Serialises to a config document that [`load_params`] reads back exactly.
    pub fn to_config_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameters always serialise")
    }
}

fn out_of_range(field: &str, value: f64, bound: &str) -> ParamError {
    ParamError::OutOfRange {
        field: field.to_string(),
        value,
        bound: bound.to_string(),
    }
}

/// A named, documented parameter set.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub citation: &'static str,
    pub params: SystemParams,
}

pub const PRESET_NAMES: &[&str] = &["fig2", "fig3", "fig5", "fig6", "fig66", "fig8", "fig9"];

fn two_pi(x: f64) -> f64 {
    2.0 * PI * x
}

/// The shared device: 145 ng mirrors at 3 MHz, cavities at 810 nm and 1024 nm,
/// and an atomic medium with every decay and dephasing rate equal to 3.4e6 s^-1.
fn base_device() -> SystemParams {
    let gamma = 3.4e6;
    SystemParams {
        atom: AtomParams {
            g1: two_pi(4e6),
            g2: two_pi(4e6),
            omega: 10.0 * gamma,
            gamma_a: gamma,
            gamma_b: gamma,
            gamma_c: gamma,
            gamma_ab: gamma,
            gamma_bc: gamma,
            gamma_ac: gamma,
            delta1: 0.0,
            delta2: 0.0,
            r_a: 1.6e6,
            eta: -1.0,
        },
        cavity: CavityParams {
            kappa1: two_pi(215e3),
            kappa2: two_pi(215e3),
            lambda1: 810e-9,
            lambda2: 1024e-9,
            l1: 112e-6,
            l2: 88.6e-6,
            p1: 1e-12,
            p2: 1e-12,
            delta01: two_pi(1.5e6),
            delta02: -two_pi(1.5e6),
            n1: 0.0,
            n2: 0.0,
            mu: None,
        },
        mech: MechParams {
            omega_m1: two_pi(3e6),
            omega_m2: two_pi(3e6),
            gamma_m1: two_pi(60.0),
            gamma_m2: two_pi(60.0),
            m1: 145e-12,
            m2: 145e-12,
            t1: 0.0,
            t2: 0.0,
        },
    }
}

/// Sets both mirror baths to the temperature giving occupation `n`.
fn with_phonons(mut p: SystemParams, n: f64) -> SystemParams {
    p.mech.t1 = temperature_for_occupation(p.mech.omega_m1, n);
    p.mech.t2 = temperature_for_occupation(p.mech.omega_m2, n);
    p
}

fn with_photons(mut p: SystemParams, n: f64) -> SystemParams {
    p.cavity.n1 = n;
    p.cavity.n2 = n;
    p
}

fn with_power(mut p: SystemParams, watts: f64) -> SystemParams {
    p.cavity.p1 = watts;
    p.cavity.p2 = watts;
    p
}

pub fn preset(name: &str) -> Result<Preset, ParamError> {
    let gamma = 3.4e6;
    let base = base_device();
    let (citation, params) = match name {
        "fig2" => (
            "RWA bistability map: driven coherence, atoms injected in the upper level, Omega = 10 gamma",
            base,
        ),
        "fig3" => {
            let mut p = base;
            p.atom.eta = 1.0;
            p.cavity.mu = Some(0.1);
            p.cavity.delta01 = -two_pi(1.75e6);
            p.cavity.delta02 = two_pi(1.75e6);
            p.cavity.p1 = 0.05e-12;
            p.sync_mu();
            (
                "Coupled-mode bistability map: atoms injected in the lower level, Omega = 10 gamma, mu = 0.1",
                p,
            )
        }
        "fig5" => {
            let mut p = base;
            p.atom.g1 = two_pi(2.5e6);
            p.atom.g2 = two_pi(2.5e6);
            p.atom.omega = 6.0 * gamma;
            p.cavity.kappa2 = two_pi(430e3);
            let p = with_power(with_photons(with_phonons(p, 100.0), 1.0), 50e-3);
            (
                "Mirror entanglement vs drive powers: driven coherence, Omega = 6 gamma, n = 100, N = 1",
                p,
            )
        }
        "fig6" => {
            let mut p = base;
            p.atom.omega = 0.0;
            p.atom.eta = 0.36;
            let p = with_power(with_photons(with_phonons(p, 100.0), 1.0), 100e-3);
            (
                "Mirror entanglement vs injected coherence: no drive, n = 100, N = 1",
                p,
            )
        }
        "fig66" => {
            let mut p = base;
            p.atom.omega = 0.0;
            p.atom.eta = 0.36;
            let p = with_power(p, 200e-3);
            (
                "Mirror entanglement vs bath occupations: no drive, P = 200 mW, zero temperature",
                p,
            )
        }
        "fig8" => {
            let mut p = base;
            p.atom.eta = -1.0;
            p.atom.omega = 4.5 * gamma;
            let p = with_power(with_photons(with_phonons(p, 100.0), 1.0), 80e-3);
            (
                "Mirror entanglement vs drive amplitude: atoms injected in the upper level, n = 100, N = 1",
                p,
            )
        }
        "fig9" => {
            let mut p = base;
            p.atom.eta = -1.0;
            p.atom.omega = 4.5 * gamma;
            let p = with_power(p, 200e-3);
            (
                "Mirror entanglement vs bath occupations: driven coherence, P = 200 mW, zero temperature",
                p,
            )
        }
        other => {
            return Err(ParamError::UnknownPreset {
                name: other.to_string(),
                known: PRESET_NAMES.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    let name = PRESET_NAMES.iter().find(|n| **n == name).copied().unwrap_or("custom");
    Ok(Preset {
        name,
        citation,
        params,
    })
}

/// Accumulates a preset, config documents and overrides, then validates.
///
/// Later sources win. `P2` is re-derived from `mu` unless `P2` was set
/// explicitly, in which case the two must agree.
#[derive(Debug, Clone, Default)]
pub struct ParamBuilder {
    base: Option<SystemParams>,
    explicit: BTreeMap<String, f64>,
}

impl ParamBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_preset(name: &str) -> Result<Self, ParamError> {
        Ok(ParamBuilder {
            base: Some(preset(name)?.params),
            explicit: BTreeMap::new(),
        })
    }

    pub fn set(&mut self, path: &str, value: f64) -> Result<&mut Self, ParamError> {
        if field_spec(path).is_none() {
            return Err(ParamError::UnknownField(path.to_string()));
        }
        self.explicit.insert(path.to_string(), value);
        Ok(self)
    }

    /// Applies one `path=value[unit]` override.
    pub fn set_override(&mut self, assignment: &str) -> Result<&mut Self, ParamError> {
        let (path, text) = assignment
            .split_once('=')
            .ok_or_else(|| ParamError::Config(format!("override `{assignment}` lacks `=`")))?;
        let path = path.trim();
        let spec = field_spec(path).ok_or_else(|| ParamError::UnknownField(path.to_string()))?;
        let (value, dim) = parse_quantity(text)?;
        check_dim(spec, dim, text)?;
        self.set(path, value)
    }

    /// Merges a JSON config document. A `preset` key replaces the base set.
    pub fn apply_config_text(&mut self, text: &str) -> Result<&mut Self, ParamError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| ParamError::Config(e.to_string()))?;
        let obj = doc
            .as_object()
            .ok_or_else(|| ParamError::Config("top level must be an object".into()))?;
        if let Some(name) = obj.get("preset") {
            let name = name
                .as_str()
                .ok_or_else(|| ParamError::Config("`preset` must be a string".into()))?;
            self.base = Some(preset(name)?.params);
        }
        for (section, body) in obj {
            if section == "preset" {
                continue;
            }
            if !matches!(section.as_str(), "atom" | "cavity" | "mech") {
                return Err(ParamError::UnknownField(section.clone()));
            }
            let fields = body
                .as_object()
                .ok_or_else(|| ParamError::Config(format!("section `{section}` must be an object")))?;
            for (key, raw) in fields {
                let path = format!("{section}.{key}");
                let spec = field_spec(&path).ok_or_else(|| ParamError::UnknownField(path.clone()))?;
                if raw.is_null() {
                    continue;
                }
                let value = value_from_json(spec, raw)?;
                self.explicit.insert(path, value);
            }
        }
        Ok(self)
    }

    pub fn build(&self) -> Result<SystemParams, ParamError> {
        let mut p = match &self.base {
            Some(base) => base.clone(),
            None => {
                let mut blank = base_device();
                for spec in FIELDS {
                    let fill = if spec.path == "cavity.mu" {
                        f64::NAN
                    } else {
                        spec.default.unwrap_or(f64::NAN)
                    };
                    blank.set(spec.path, fill)?;
                }
                blank
            }
        };
        for (path, value) in &self.explicit {
            p.set(path, *value)?;
        }
        let p2_explicit = self.explicit.contains_key("cavity.P2");
        if let Some(mu) = p.cavity.mu {
            let implied = p.cavity.p2_from_mu(mu);
            if !p2_explicit || p.cavity.p2.is_nan() {
                p.cavity.p2 = implied;
            }
        }
        for spec in FIELDS {
            if spec.path != "cavity.mu" && p.get(spec.path)?.is_nan() {
                return Err(ParamError::MissingField(spec.path.to_string()));
            }
        }
        p.validate()?;
        Ok(p)
    }
}

fn check_dim(spec: &FieldSpec, dim: Option<Dim>, text: &str) -> Result<(), ParamError> {
    match dim {
        Some(d) if d != spec.dim => Err(ParamError::WrongUnit {
            field: spec.path.to_string(),
            unit: text.trim().to_string(),
            expected: spec.dim.name(),
        }),
        _ => Ok(()),
    }
}

fn value_from_json(spec: &FieldSpec, raw: &Value) -> Result<f64, ParamError> {
    match raw {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| ParamError::Config(format!("`{}` is not a float", spec.path))),
        Value::String(s) => {
            let (v, dim) = parse_quantity(s)?;
            check_dim(spec, dim, s)?;
            Ok(v)
        }
        Value::Object(o) => {
            let value = o
                .get("value")
                .and_then(Value::as_f64)
                .ok_or_else(|| ParamError::Config(format!("`{}` needs a numeric `value`", spec.path)))?;
            let tag = o.get("unit").and_then(Value::as_str).unwrap_or("");
            let unit = Unit::parse(tag)?;
            if !tag.is_empty() && unit.dim != spec.dim {
                return Err(ParamError::WrongUnit {
                    field: spec.path.to_string(),
                    unit: tag.to_string(),
                    expected: spec.dim.name(),
                });
            }
            Ok(value * unit.scale)
        }
        _ => Err(ParamError::Config(format!("`{}` has an unsupported value type", spec.path))),
    }
}

/// Parses and validates a config document.
pub fn load_params(config_text: &str) -> Result<SystemParams, ParamError> {
    let mut b = ParamBuilder::new();
    b.apply_config_text(config_text)?;
    b.build()
}

impl fmt::Display for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for path in field_paths() {
            let v = self.get(path).map_err(|_| fmt::Error)?;
            if !v.is_nan() {
                writeln!(f, "{path} = {v:e}")?;
            }
        }
        Ok(())
    }
}
