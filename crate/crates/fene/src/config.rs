//! TOML experiment configuration with validation and defaults.

use std::f64::consts::PI;
use std::fmt;

use fene_core::integrator::{DtGrowth, Scheme, SchemeConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Box length, given either as a number or as a multiple of π such as `"64pi"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxLength(pub f64);

impl Serialize for BoxLength {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for BoxLength {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(BoxLength(x)),
            Raw::Int(x) => Ok(BoxLength(x as f64)),
            Raw::Text(s) => parse_pi_multiple(&s).map(BoxLength).map_err(serde::de::Error::custom),
        }
    }
}

fn parse_pi_multiple(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace('π', "pi");
    let Some(head) = t.strip_suffix("pi") else {
        return t.parse().map_err(|_| format!("cannot read box length {s:?}"));
    };
    let head = head.trim().trim_end_matches('*').trim();
    let factor = if head.is_empty() {
        1.0
    } else {
        head.parse::<f64>().map_err(|_| format!("cannot read box length {s:?}"))?
    };
    Ok(factor * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    ImexEuler,
    Cnab,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::ImexEuler => Scheme::ImexEuler,
            SchemeName::Cnab => Scheme::Cnab,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Long,
    Checkpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub k: f64,
    #[serde(default = "defaults::nu")]
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    #[serde(rename = "L_box", default = "defaults::l_box")]
    pub l_box: BoxLength,
    #[serde(rename = "M", default = "defaults::m")]
    pub m: usize,
    #[serde(rename = "P", default = "defaults::p")]
    pub p: usize,
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    #[serde(rename = "T_final", default = "defaults::t_final")]
    pub t_final: f64,
    #[serde(default = "defaults::scheme")]
    pub scheme: SchemeName,
    #[serde(default = "defaults::cfl_safety")]
    pub cfl_safety: f64,
    #[serde(default = "defaults::yes")]
    pub nonlinear: bool,
    /// `dt(t) = clamp(dt_growth·(1+t), dt, dt_max)` when set.
    #[serde(default)]
    pub dt_growth: Option<f64>,
    #[serde(default)]
    pub dt_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "defaults::s")]
    pub s: u32,
    /// Cross-term weight; `min(a*, 0.1/𝒞)` when absent.
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default = "defaults::eta")]
    pub eta: f64,
    #[serde(default = "defaults::s_exp")]
    pub s_exp: f64,
    #[serde(default = "defaults::record_every")]
    pub record_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    /// Largest excited `|ξ|`; the dealiasing cutoff when absent.
    #[serde(default)]
    pub xi_cutoff: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "defaults::directory")]
    pub directory: String,
    #[serde(default = "defaults::formats")]
    pub formats: Vec<OutputFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    #[serde(default = "defaults::seeds")]
    pub seeds: usize,
    /// Saturation time used for the fit window; predicted from the box when absent.
    #[serde(default)]
    pub t_sat: Option<f64>,
    #[serde(default = "defaults::alpha_u_range")]
    pub alpha_u_range: [f64; 2],
    #[serde(default = "defaults::alpha_psi_range")]
    pub alpha_psi_range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub decay: DecayConfig,
}

mod defaults {
    use super::*;

    pub fn nu() -> f64 {
        1.0
    }
    pub fn l_box() -> BoxLength {
        BoxLength(64.0 * PI)
    }
    pub fn m() -> usize {
        64
    }
    pub fn p() -> usize {
        6
    }
    pub fn dt() -> f64 {
        1e-2
    }
    pub fn t_final() -> f64 {
        200.0
    }
    pub fn scheme() -> SchemeName {
        SchemeName::Cnab
    }
    pub fn cfl_safety() -> f64 {
        0.5
    }
    pub fn yes() -> bool {
        true
    }
    pub fn s() -> u32 {
        3
    }
    pub fn eta() -> f64 {
        1.0
    }
    pub fn s_exp() -> f64 {
        2.0
    }
    pub fn record_every() -> usize {
        10
    }
    pub fn epsilon() -> f64 {
        1e-3
    }
    pub fn directory() -> String {
        "out".into()
    }
    pub fn formats() -> Vec<OutputFormat> {
        vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Long]
    }
    pub fn seeds() -> usize {
        8
    }
    pub fn alpha_u_range() -> [f64; 2] {
        [0.35, 0.65]
    }
    pub fn alpha_psi_range() -> [f64; 2] {
        [0.75, 1.25]
    }
}

macro_rules! default_via_serde {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                toml::from_str("").expect("all fields have defaults")
            }
        }
    )*};
}
default_via_serde!(DiscretizationConfig, DiagnosticsConfig, InitialConfig, OutputConfig, DecayConfig);

impl ExperimentConfig {
    /// Defaults everywhere except the spring exponent.
    pub fn with_k(k: f64) -> Self {
        Self {
            model: ModelConfig { k, nu: defaults::nu() },
            discretization: Default::default(),
            diagnostics: Default::default(),
            initial: Default::default(),
            outputs: Default::default(),
            decay: Default::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let m = &self.model;
        if !(m.k > 1.0) {
            return bad(format!(
                "k must exceed 1 (got {}): the Hardy-type inequality for the configuration weight requires k>1",
                m.k
            ));
        }
        if !(m.nu >= 0.0 && m.nu.is_finite()) {
            return bad(format!("nu must be finite and nonnegative (got {})", m.nu));
        }
        let d = &self.discretization;
        if !(d.l_box.0 > 0.0 && d.l_box.0.is_finite()) {
            return bad(format!("L_box must be positive (got {})", d.l_box.0));
        }
        if !d.m.is_power_of_two() || d.m < 8 {
            return bad(format!("M must be a power of two and at least 8 (got {})", d.m));
        }
        if d.p < 2 {
            return bad(format!("P must be at least 2 so that R⊗R lies in the basis (got {})", d.p));
        }
        if !(d.dt > 0.0 && d.dt.is_finite()) {
            return bad(format!("dt must be positive (got {})", d.dt));
        }
        if !(d.t_final >= 0.0 && d.t_final.is_finite()) {
            return bad(format!("T_final must be finite and nonnegative (got {})", d.t_final));
        }
        if !(d.cfl_safety > 0.0) {
            return bad(format!("cfl_safety must be positive (got {})", d.cfl_safety));
        }
        if let Some(g) = d.dt_growth {
            if !(g > 0.0) {
                return bad(format!("dt_growth must be positive (got {g})"));
            }
        }
        if let Some(x) = d.dt_max {
            if !(x >= d.dt) {
                return bad(format!("dt_max must be at least dt (got {x})"));
            }
        }
        let g = &self.diagnostics;
        let n = fene_core::SPACE_DIM as u32;
        if g.s <= n / 2 + 1 {
            return bad(format!("s must exceed N/2+1 = {} for the energy method (got {})", n / 2 + 1, g.s));
        }
        if let Some(a) = g.a {
            if !(a > 0.0 && a.is_finite()) {
                return bad(format!("a must be positive (got {a})"));
            }
        }
        if !(g.eta > 0.0) {
            return bad(format!("eta must be positive (got {})", g.eta));
        }
        if !(g.s_exp > 0.0) {
            return bad(format!("s_exp must be positive (got {})", g.s_exp));
        }
        if g.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        let i = &self.initial;
        if !(i.epsilon >= 0.0 && i.epsilon.is_finite()) {
            return bad(format!("epsilon must be finite and nonnegative (got {})", i.epsilon));
        }
        if let Some(x) = i.xi_cutoff {
            if !(x > 0.0) {
                return bad(format!("xi_cutoff must be positive (got {x})"));
            }
        }
        if self.decay.seeds == 0 {
            return bad("decay.seeds must be at least 1".into());
        }
        Ok(())
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        let d = &self.discretization;
        SchemeConfig {
            dt: d.dt,
            scheme: d.scheme.into(),
            t_final: d.t_final,
            cfl_safety: d.cfl_safety,
            nonlinear: d.nonlinear,
            dt_growth: d.dt_growth.map(|relative| DtGrowth {
                relative,
                max: d.dt_max.unwrap_or(f64::INFINITY),
            }),
        }
    }

    /// The dealiasing cutoff `⌊M/3⌋·2π/L` unless set explicitly.
    pub fn xi_cutoff(&self) -> f64 {
        let d = &self.discretization;
        self.initial
            .xi_cutoff
            .unwrap_or((d.m / 3) as f64 * 2.0 * PI / d.l_box.0)
    }

    pub fn wants(&self, f: OutputFormat) -> bool {
        self.outputs.formats.contains(&f)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serialises")
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_toml())
    }
}

/// Parses and validates a TOML document; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
