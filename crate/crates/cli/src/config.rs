//! Run configuration: one TOML file plus `--set key=value` overrides.

use std::collections::BTreeSet;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use tfreg_core::interacting::{InteractionSpec, Normalization, PacketFamily, SweepObservable};
use tfreg_core::{
    BumpFunction, EnvelopeSpec, FieldLabel, FnId, FreeField, GaussianPacket, Grid, PairingMethod, QuadratureSpec, Registry,
    ScaleFunctionalSpec, SpacetimeDim, SupportBox, TestFunction,
};

use crate::error::{config_err, CliResult};

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

fn unit_amp() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub cutoff: Option<f64>,
    pub panels: Option<usize>,
    pub order: Option<usize>,
    /// FFT zero-padding factor for grid functions.
    pub padding: Option<usize>,
    /// Relative tolerance of the adaptive Gaussian path.
    pub closed_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionConfig {
    Packet {
        name: String,
        /// Spatial momentum; the energy is put on shell.
        k: Vec<f64>,
        mu: f64,
        center: Vec<f64>,
        #[serde(default = "unit_amp")]
        amp: [f64; 2],
    },
    Bump {
        name: String,
        center: Vec<f64>,
        half_widths: Vec<f64>,
        spacing: Vec<f64>,
        #[serde(default = "unit_amp")]
        amp: [f64; 2],
        #[serde(default)]
        carrier: Option<Vec<f64>>,
    },
    /// Complex conjugate of an earlier function.
    Conj { name: String, of: String },
}

impl FunctionConfig {
    pub fn name(&self) -> &str {
        match self {
            FunctionConfig::Packet { name, .. } | FunctionConfig::Bump { name, .. } | FunctionConfig::Conj { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VevConfig {
    /// Field labels: `name` for `phi_f`, `name^` for its adjoint.
    pub labels: Vec<String>,
    /// Fock truncation for the matrix cross-check; defaults to `n / 2`.
    pub max_particles: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnsConfig {
    pub functions: Vec<String>,
    #[serde(default = "two")]
    pub max_particles: usize,
    /// Also write the number operator in the binary matrix format.
    #[serde(default)]
    pub write_number_operator: bool,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeTableConfig {
    pub function: String,
    pub envelope: EnvelopeSpec,
    #[serde(default)]
    pub scale: ScaleFunctionalSpec,
    #[serde(default)]
    pub normalization: Normalization,
    pub centers: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiConfig {
    pub function: String,
    #[serde(default)]
    pub probes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: PacketFamily,
    pub mu: Vec<f64>,
    pub observable: SweepObservable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Number of spatial dimensions (1 or 3).
    #[serde(default = "one")]
    pub dimension: usize,
    #[serde(default = "unit")]
    pub mass: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub method: PairingMethod,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub functions: Vec<FunctionConfig>,
    pub interaction: Option<InteractionSpec>,
    pub vev: Option<VevConfig>,
    pub gns: Option<GnsConfig>,
    pub envelope_table: Option<EnvelopeTableConfig>,
    pub xi: Option<XiConfig>,
    pub sweep: Option<SweepConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dimension: 1,
            mass: 1.0,
            seed: 0,
            method: PairingMethod::default(),
            quadrature: QuadratureConfig::default(),
            functions: Vec::new(),
            interaction: None,
            vev: None,
            gns: None,
            envelope_table: None,
            xi: None,
            sweep: None,
        }
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {value}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(value.to_string()),
    }
}

/// Applies a dotted `key=value` override to a TOML table.
pub fn apply_override(root: &mut toml::Table, assignment: &str) -> CliResult<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("override `{assignment}` is not of the form key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("override key `{key}` is malformed")));
    }
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| config_err(format!("override key `{key}` passes through a non-table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_value(value.trim()));
    Ok(())
}

impl RunConfig {
    /// Reads the file (if any), applies overrides, deserializes and validates.
    pub fn load(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> CliResult<Self> {
        let mut root = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str::<toml::Table>(&text).map_err(|e| config_err(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(root).try_into().map_err(|e: toml::de::Error| config_err(e.to_string()))?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        SpacetimeDim::new(self.dimension).map_err(|e| config_err(e.to_string()))?;
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(config_err("mass must be positive"));
        }
        let mut names = BTreeSet::new();
        let n = self.dimension + 1;
        for f in &self.functions {
            let name = f.name();
            if name.is_empty() || name.ends_with('^') || name.starts_with('~') || name.contains(char::is_whitespace) {
                return Err(config_err(format!("invalid function name `{name}`")));
            }
            if !names.insert(name.to_string()) {
                return Err(config_err(format!("duplicate function name `{name}`")));
            }
            match f {
                FunctionConfig::Packet { k, center, mu, .. } => {
                    if k.len() != self.dimension || center.len() != n {
                        return Err(config_err(format!("packet `{name}` has the wrong dimension")));
                    }
                    if !(*mu > 0.0) {
                        return Err(config_err(format!("packet `{name}` needs mu > 0")));
                    }
                }
                FunctionConfig::Bump { center, half_widths, spacing, carrier, .. } => {
                    if center.len() != n || half_widths.len() != n || spacing.len() != n {
                        return Err(config_err(format!("bump `{name}` has the wrong dimension")));
                    }
                    if carrier.as_ref().is_some_and(|c| c.len() != n) {
                        return Err(config_err(format!("bump `{name}` carrier has the wrong dimension")));
                    }
                    if half_widths.iter().chain(spacing).any(|v| !(*v > 0.0)) {
                        return Err(config_err(format!("bump `{name}` needs positive widths and spacings")));
                    }
                }
                FunctionConfig::Conj { of, .. } => {
                    if !names.contains(of) || of == name {
                        return Err(config_err(format!("`{name}` conjugates unknown function `{of}`")));
                    }
                }
            }
        }
        if let Some(i) = &self.interaction {
            i.validate().map_err(|e| config_err(e.to_string()))?;
        }
        Ok(())
    }

    pub fn dim(&self) -> SpacetimeDim {
        SpacetimeDim { d_space: self.dimension }
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        let d = QuadratureSpec::default_for(self.dim(), self.mass);
        QuadratureSpec {
            m: self.mass,
            cutoff: self.quadrature.cutoff.unwrap_or(d.cutoff),
            panels: self.quadrature.panels.unwrap_or(d.panels),
            order: self.quadrature.order.unwrap_or(d.order),
        }
    }

    pub fn field(&self) -> CliResult<FreeField> {
        let mut f = FreeField::from_spec(self.dim(), &self.quadrature_spec()).map_err(|e| config_err(e.to_string()))?;
        if let Some(p) = self.quadrature.padding {
            if p < tfreg_core::freefield::MIN_PADDING {
                return Err(config_err(format!("padding must be at least {}", tfreg_core::freefield::MIN_PADDING)));
            }
            f.padding = p;
        }
        if let Some(t) = self.quadrature.closed_tol {
            if !(t > 0.0) {
                return Err(config_err("closed_tol must be positive"));
            }
            f.closed_tol = t;
        }
        Ok(f)
    }

    /// Registers every configured function in order.
    pub fn registry(&self) -> CliResult<Registry> {
        let mut reg = Registry::new(self.dim());
        for f in &self.functions {
            let func = self.build_function(f, &reg)?;
            reg.register(f.name(), func)?;
        }
        Ok(reg)
    }

    fn build_function(&self, f: &FunctionConfig, reg: &Registry) -> CliResult<TestFunction> {
        Ok(match f {
            FunctionConfig::Packet { k, mu, center, amp, .. } => {
                GaussianPacket::new(k, *mu, self.mass, center, Complex64::new(amp[0], amp[1]))?.into()
            }
            FunctionConfig::Bump { center, half_widths, spacing, amp, carrier, .. } => {
                let bx = SupportBox {
                    lo: center.iter().zip(half_widths).map(|(c, w)| c - w).collect(),
                    hi: center.iter().zip(half_widths).map(|(c, w)| c + w).collect(),
                };
                let grid = Grid::covering(&bx, spacing)?;
                BumpFunction::smooth(grid, center, half_widths, Complex64::new(amp[0], amp[1]), carrier.as_deref())?.into()
            }
            FunctionConfig::Conj { of, .. } => {
                let id = reg.find(of).ok_or_else(|| config_err(format!("unknown function `{of}`")))?;
                reg.get(id)?.conj()
            }
        })
    }

    /// SHA-256 of the effective configuration in canonical JSON.
    pub fn sha256(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn lookup(reg: &Registry, name: &str) -> CliResult<FnId> {
    reg.find(name).ok_or_else(|| config_err(format!("unknown function `{name}`")))
}

/// `name` is `phi_f`, `name^` is `phi_f^dagger`.
pub fn parse_field_label(reg: &Registry, label: &str) -> CliResult<FieldLabel> {
    match label.strip_suffix('^') {
        Some(base) => Ok(FieldLabel::dagger(lookup(reg, base)?)),
        None => Ok(FieldLabel::new(lookup(reg, label)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_create_nested_keys() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "quadrature.cutoff=8.5").unwrap();
        apply_override(&mut t, "method=closed").unwrap();
        apply_override(&mut t, "dimension = 3").unwrap();
        assert_eq!(t["quadrature"]["cutoff"].as_float(), Some(8.5));
        assert_eq!(t["method"].as_str(), Some("closed"));
        assert_eq!(t["dimension"].as_integer(), Some(3));
        assert!(apply_override(&mut t, "novalue").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml_str("dimension = 1\nbogus = 2\n").is_err());
        assert!(RunConfig::from_toml_str("[quadrature]\ncutof = 2.0\n").is_err());
    }

    #[test]
    fn functions_build() {
        let cfg = RunConfig::from_toml_str(
            r#"
            [[functions]]
            kind = "packet"
            name = "f"
            k = [0.2]
            mu = 0.5
            center = [0.0, 0.0]

            [[functions]]
            kind = "conj"
            name = "fc"
            of = "f"

            [[functions]]
            kind = "bump"
            name = "b"
            center = [0.0, 3.0]
            half_widths = [1.0, 1.0]
            spacing = [0.25, 0.25]
            "#,
        )
        .unwrap();
        let reg = cfg.registry().unwrap();
        assert_eq!(reg.len(), 3);
        assert_eq!(parse_field_label(&reg, "f^").unwrap(), FieldLabel::dagger(FnId(0)));
        assert!(parse_field_label(&reg, "zz").is_err());
        assert_eq!(cfg.sha256().len(), 64);
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = r#"
            [[functions]]
            kind = "packet"
            name = "f"
            k = [0.2]
            mu = 0.5
            center = [0.0, 0.0]
            [[functions]]
            kind = "conj"
            name = "f"
            of = "f"
        "#;
        assert!(RunConfig::from_toml_str(text).is_err());
    }
}
