//! Mode constants and dimensionless couplings of the two degenerate TE₁₁
//! cavity modes, derived from cavity geometry and fundamental constants.
//!
//! This is the only module that touches SI units. Everything downstream
//! consumes the dimensionless set (q̃, γ, κ, q, r₀) in natural units:
//! energy ħω, length √(ħ/mω), momentum √(ħmω), time 1/ω.

use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_j1, bessel_j1_prime, X11};
use crate::error::Error;
use crate::Result;

/// Fundamental constants, CODATA 2018 by default, overridable via config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    /// Electron mass (kg).
    pub m: f64,
    /// Elementary charge (C).
    pub e: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// Speed of light (m/s).
    pub c: f64,
    /// Bohr radius (m).
    pub a0: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            m: 9.109_383_7015e-31,
            e: 1.602_176_634e-19,
            eps0: 8.854_187_8128e-12,
            hbar: 1.054_571_817e-34,
            c: 2.997_924_58e8,
            a0: 5.291_772_109_03e-11,
        }
    }
}

impl Constants {
    /// Check positivity and internal consistency of a₀ with the other
    /// constants (a₀ = 4πε₀ħ²/(me²) to 1e-6 relative).
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("m", self.m),
            ("e", self.e),
            ("eps0", self.eps0),
            ("hbar", self.hbar),
            ("c", self.c),
            ("a0", self.a0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("constant {name} must be > 0, got {v}")));
            }
        }
        let a0_derived =
            4.0 * std::f64::consts::PI * self.eps0 * self.hbar * self.hbar / (self.m * self.e * self.e);
        let rel = (a0_derived - self.a0).abs() / self.a0;
        if rel > 1e-6 {
            return Err(Error::Domain(format!(
                "a0 inconsistent with 4πε₀ħ²/(me²): relative error {rel:.3e}"
            )));
        }
        Ok(())
    }
}

/// Cavity geometry plus the constants table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityConfig {
    /// Cavity radius (m).
    pub r_cavity: f64,
    /// Cavity length (m).
    pub l_cavity: f64,
    /// Fundamental constants.
    #[serde(default)]
    pub constants: Constants,
}

/// On-disk config schema: `R_m`, `L_m`, optional `constants` overrides.
#[derive(Debug, Clone, Deserialize)]
struct CavityConfigFile {
    #[serde(rename = "R_m")]
    r_m: f64,
    #[serde(rename = "L_m")]
    l_m: f64,
    #[serde(default)]
    constants: Option<ConstantsOverride>,
}

#[derive(Debug, Clone, Default, Deserialize)]
struct ConstantsOverride {
    m: Option<f64>,
    e: Option<f64>,
    eps0: Option<f64>,
    hbar: Option<f64>,
    c: Option<f64>,
    a0: Option<f64>,
}

impl CavityConfig {
    /// Reference geometry used throughout: R = 0.32 cm, L = 1 cm.
    pub fn reference() -> Self {
        Self::new(0.32e-2, 1.0e-2).expect("reference geometry is valid")
    }

    pub fn new(r_cavity: f64, l_cavity: f64) -> Result<Self> {
        let cfg = Self { r_cavity, l_cavity, constants: Constants::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_cavity.is_finite() && self.r_cavity > 0.0) {
            return Err(Error::Domain(format!("cavity radius must be > 0, got {}", self.r_cavity)));
        }
        if !(self.l_cavity.is_finite() && self.l_cavity > 0.0) {
            return Err(Error::Domain(format!("cavity length must be > 0, got {}", self.l_cavity)));
        }
        self.constants.validate()
    }

    /// Parse a config from JSON or TOML text (format chosen by trying JSON
    /// first, then TOML). Keys: `R_m`, `L_m`, optional `constants` overrides.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let file: CavityConfigFile = match serde_json::from_str(text) {
            Ok(f) => f,
            Err(json_err) => toml::from_str(text).map_err(|toml_err| {
                Error::Config(format!("neither JSON ({json_err}) nor TOML ({toml_err})"))
            })?,
        };
        let mut constants = Constants::default();
        if let Some(o) = file.constants {
            if let Some(v) = o.m {
                constants.m = v;
            }
            if let Some(v) = o.e {
                constants.e = v;
            }
            if let Some(v) = o.eps0 {
                constants.eps0 = v;
            }
            if let Some(v) = o.hbar {
                constants.hbar = v;
            }
            if let Some(v) = o.c {
                constants.c = v;
            }
            if let Some(v) = o.a0 {
                constants.a0 = v;
            }
        }
        let cfg = Self { r_cavity: file.r_m, l_cavity: file.l_m, constants };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Everything derived from the geometry: mode constants, couplings and the
/// natural-unit scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeConstants {
    /// First positive root of dJ₁/dx (dimensionless).
    pub x11: f64,
    /// Mode angular frequency ω (rad/s).
    pub omega: f64,
    /// Effective wave vector k (1/m).
    pub k: f64,
    /// Normalization constant 𝒩 (SI).
    pub norm: f64,
    /// Field amplitude ℰ (V/m).
    pub field_amp: f64,
    /// Coulomb strength q̃ (dimensionless).
    pub q_tilde: f64,
    /// Atom–field coupling γ (dimensionless).
    pub gamma: f64,
    /// √(ħ/mω) (m).
    pub length_unit: f64,
    /// √(ħmω) (kg·m/s).
    pub momentum_unit: f64,
    /// ħω (J).
    pub energy_unit: f64,
}

/// Which natural-unit scale a conversion uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Length,
    Momentum,
    Energy,
    Time,
}

/// Derive all mode constants from the geometry:
/// ω = (c/R)√(x₁₁² + (πR/L)²), k = √((ω/c)² + (π/L)²),
/// 𝒩 = (x₁₁/(k²R²))·√(ħ/(2πε₀Lω(1 − 1/x₁₁²)J₁²(x₁₁))),
/// ℰ = 𝒩ωx₁₁/(R√2), q̃ = (e²/4πε₀ħω)√(mω/ħ), γ = (eℰ/ħω)√(ħ/mω).
pub fn derive_mode_constants(cfg: &CavityConfig) -> Result<ModeConstants> {
    cfg.validate()?;
    let Constants { m, e, eps0, hbar, c, .. } = cfg.constants;
    let (r, l) = (cfg.r_cavity, cfg.l_cavity);
    let pi = std::f64::consts::PI;

    let x11 = X11;
    debug_assert!(bessel_j1_prime(x11).abs() < 1e-12);
    let omega = (c / r) * (x11 * x11 + (pi * r / l).powi(2)).sqrt();
    let k = ((omega / c).powi(2) + (pi / l).powi(2)).sqrt();
    let j1 = bessel_j1(x11);
    let norm = x11 / (k * k * r * r)
        * (hbar / (2.0 * pi * eps0 * l * omega * (1.0 - 1.0 / (x11 * x11)) * j1 * j1)).sqrt();
    let field_amp = norm * omega * x11 / (r * std::f64::consts::SQRT_2);
    let q_tilde = e * e / (4.0 * pi * eps0 * hbar * omega) * (m * omega / hbar).sqrt();
    let gamma = e * field_amp / (hbar * omega) * (hbar / (m * omega)).sqrt();

    let mc = ModeConstants {
        x11,
        omega,
        k,
        norm,
        field_amp,
        q_tilde,
        gamma,
        length_unit: (hbar / (m * omega)).sqrt(),
        momentum_unit: (hbar * m * omega).sqrt(),
        energy_unit: hbar * omega,
    };
    for (name, v) in [
        ("omega", mc.omega),
        ("k", mc.k),
        ("norm", mc.norm),
        ("field_amp", mc.field_amp),
        ("q_tilde", mc.q_tilde),
        ("gamma", mc.gamma),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("derived {name} is not a positive finite number: {v}")));
        }
    }
    Ok(mc)
}

impl ModeConstants {
    fn scale(&self, kind: UnitKind) -> f64 {
        match kind {
            UnitKind::Length => self.length_unit,
            UnitKind::Momentum => self.momentum_unit,
            UnitKind::Energy => self.energy_unit,
            UnitKind::Time => 1.0 / self.omega,
        }
    }

    /// SI value → natural units.
    pub fn to_natural(&self, value_si: f64, kind: UnitKind) -> f64 {
        value_si / self.scale(kind)
    }

    /// Natural units → SI value.
    pub fn from_natural(&self, value_nat: f64, kind: UnitKind) -> f64 {
        value_nat * self.scale(kind)
    }
}
