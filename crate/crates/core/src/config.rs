//! Run configuration: a flat TOML file, command-line overrides and the
//! fully resolved form that is embedded in every output document.
//!
//! A config file holds `key = value` pairs at the top level. Named
//! `[section]` tables may follow; one of them can be selected to override
//! the top-level keys. Output documents written by the CLI can be fed back
//! as config files: the embedded `config` object (JSON) or the leading
//! `# config: ` line (CSV) is read instead.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{PhysicalParams, ReferenceRate};

/// Prefix of the config line at the top of CSV outputs.
pub const CSV_CONFIG_PREFIX: &str = "# config: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

/// Every key a config file may hold. Keys not used by the running
/// subcommand are ignored; unknown keys are an error.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Free-space shorthand for equal `gamma_plus`, `gamma_minus`, `gamma_zero`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_minus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_zero: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_rate: Option<ReferenceRate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,

    // trajectory
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rz0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rplus0_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rplus0_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sz0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splus0_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splus0_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ode: Option<bool>,

    // oracle
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim_cap: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converge: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atom_threshold: Option<f64>,

    // sweep
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variable: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_zero_rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observables: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<bool>,

    // destinations, never embedded in outputs
    #[serde(skip_serializing)]
    pub output: Option<String>,
    #[serde(skip_serializing)]
    pub out_dir: Option<String>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl FileConfig {
    /// Fields set in `other` replace those in `self`.
    pub fn overlay(&mut self, other: &FileConfig) {
        overlay!(
            self, other, command, omega, delta, nu, eta, gamma, gamma_plus, gamma_minus, gamma_zero,
            reference_rate, margin, format, t_end, samples, n0, rz0, rplus0_re, rplus0_im, sz0,
            splus0_re, splus0_im, ode, n_max, dim_cap, converge, step, rel_tol, threshold,
            atom_threshold, preset, variable, min, max, count, values, gamma_zero_rule, observables,
            oracle, output, out_dir,
        );
    }

    pub fn has_physical_params(&self) -> bool {
        self.omega.is_some()
            || self.delta.is_some()
            || self.nu.is_some()
            || self.eta.is_some()
            || self.gamma.is_some()
            || self.gamma_plus.is_some()
            || self.gamma_minus.is_some()
            || self.gamma_zero.is_some()
    }

    /// Parse config text. `section` picks a table to lay over the
    /// top-level keys.
    pub fn parse(text: &str, section: Option<&str>) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            if section.is_some() {
                return Err(Error::Config("--section only applies to TOML config files".into()));
            }
            return Self::from_json_document(trimmed);
        }
        if let Some(rest) = trimmed.strip_prefix(CSV_CONFIG_PREFIX) {
            if section.is_some() {
                return Err(Error::Config("--section only applies to TOML config files".into()));
            }
            let line = rest.lines().next().unwrap_or_default();
            return Self::from_json_document(line);
        }
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let (tables, top): (toml::Table, toml::Table) =
            table.into_iter().partition(|(_, v)| v.is_table());
        let mut cfg: FileConfig = toml::Value::Table(top)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if let Some(name) = section {
            let Some(toml::Value::Table(sec)) = tables.get(name) else {
                let known: Vec<&str> = tables.keys().map(String::as_str).collect();
                return Err(Error::Config(format!(
                    "no section [{name}] in config; sections: {}",
                    if known.is_empty() { "none".into() } else { known.join(", ") }
                )));
            };
            let over: FileConfig = toml::Value::Table(sec.clone())
                .try_into()
                .map_err(|e: toml::de::Error| Error::Config(format!("[{name}]: {e}")))?;
            cfg.overlay(&over);
        }
        Ok(cfg)
    }

    fn from_json_document(text: &str) -> Result<Self> {
        let mut doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("JSON config: {e}")))?;
        let cfg = match doc.get_mut("config") {
            Some(c) => c.take(),
            None => doc,
        };
        serde_json::from_value(cfg).map_err(|e| Error::Config(format!("JSON config: {e}")))
    }

    pub fn load(path: &Path, section: Option<&str>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, section)
    }

    /// Validated physical parameters with documented defaults filled in:
    /// omega = 5, delta = 0, nu = 2, eta = 0.1 and all three rates 1.
    pub fn physical_params(&self) -> Result<PhysicalParams> {
        let (plus, minus, zero) = match self.gamma {
            Some(g) => {
                if self.gamma_plus.is_some() || self.gamma_minus.is_some() || self.gamma_zero.is_some() {
                    return Err(Error::Config(
                        "`gamma` sets all three rates; do not combine it with gamma_plus, gamma_minus or gamma_zero".into(),
                    ));
                }
                (g, g, g)
            }
            None => (
                self.gamma_plus.unwrap_or(1.0),
                self.gamma_minus.unwrap_or(1.0),
                self.gamma_zero.unwrap_or(1.0),
            ),
        };
        PhysicalParams::new(
            self.omega.unwrap_or(5.0),
            self.delta.unwrap_or(0.0),
            self.nu.unwrap_or(2.0),
            self.eta.unwrap_or(0.1),
            plus,
            minus,
            zero,
        )
    }

    /// `gamma` for free-space parameters, `gamma_plus` otherwise, unless
    /// stated explicitly.
    pub fn reference_rate_for(&self, p: &PhysicalParams) -> ReferenceRate {
        self.reference_rate.unwrap_or(if p.is_free_space() {
            ReferenceRate::Gamma
        } else {
            ReferenceRate::GammaPlus
        })
    }

    /// Resolved physical block: explicit rates, no `gamma` shorthand.
    pub fn with_params(command: &str, p: &PhysicalParams, reference_rate: ReferenceRate, margin: f64) -> Self {
        FileConfig {
            command: Some(command.to_owned()),
            omega: Some(p.omega()),
            delta: Some(p.delta()),
            nu: Some(p.nu()),
            eta: Some(p.eta()),
            gamma_plus: Some(p.gamma_plus()),
            gamma_minus: Some(p.gamma_minus()),
            gamma_zero: Some(p.gamma_zero()),
            reference_rate: Some(reference_rate),
            margin: Some(margin),
            ..Default::default()
        }
    }

    /// The embedded form, as JSON.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn csv_header_line(&self) -> String {
        format!("{CSV_CONFIG_PREFIX}{}\n", serde_json::to_string(self).expect("config serializes"))
    }
}
