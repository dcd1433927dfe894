//! The declarative tuning-scenario file: solver binary, parameter
//! definitions, forbidden combinations, resource limits, and the training
//! instance list. TOML on disk.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use maxtune_core::run::RunLimits;
use maxtune_core::space::{ForbiddenCombo, ParamDef, ParamDomain, ParamValue, ParameterSpace};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("parameter '{name}': {message}")]
    Param { name: String, message: String },
    #[error("forbidden combination references unknown parameter '{name}'")]
    UnknownForbidParam { name: String },
    #[error("invalid parameter space: {0}")]
    Space(#[from] maxtune_core::space::SpaceError),
    #[error("invalid limits: {0}")]
    Limits(&'static str),
    #[error("instance list {path}: {message}")]
    Instances { path: PathBuf, message: String },
}

#[derive(Debug, Deserialize)]
struct ScenarioFile {
    solver: SolverSection,
    #[serde(default)]
    limits: LimitsSection,
    instances: InstancesSection,
    #[serde(default, rename = "param")]
    params: Vec<ParamSection>,
    #[serde(default, rename = "forbid")]
    forbids: Vec<BTreeMap<String, toml::Value>>,
}

#[derive(Debug, Deserialize)]
struct SolverSection {
    binary: PathBuf,
    #[serde(default)]
    seed_flag: Option<String>,
}

#[derive(Debug, Deserialize)]
struct LimitsSection {
    #[serde(default = "default_cpu")]
    cpu_seconds: f64,
    #[serde(default = "default_memory")]
    memory_bytes: u64,
    #[serde(default = "default_grace")]
    timeout_grace_seconds: f64,
}

fn default_cpu() -> f64 {
    RunLimits::default().cpu_seconds
}

fn default_memory() -> u64 {
    RunLimits::default().memory_bytes
}

fn default_grace() -> f64 {
    RunLimits::default().timeout_grace_seconds
}

impl Default for LimitsSection {
    fn default() -> Self {
        LimitsSection {
            cpu_seconds: default_cpu(),
            memory_bytes: default_memory(),
            timeout_grace_seconds: default_grace(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct InstancesSection {
    training: PathBuf,
}

#[derive(Debug, Deserialize)]
struct ParamSection {
    name: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    values: Option<Vec<String>>,
    #[serde(default)]
    lo: Option<toml::Value>,
    #[serde(default)]
    hi: Option<toml::Value>,
    default: toml::Value,
    flag: String,
}

/// A loaded, validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub binary: PathBuf,
    pub seed_flag: Option<String>,
    pub limits: RunLimits,
    pub space: ParameterSpace,
    pub instances_path: PathBuf,
    /// Content hash of the scenario file, for staleness stamps.
    pub content_hash: String,
}

fn toml_int(value: &toml::Value) -> Option<i64> {
    value.as_integer()
}

fn toml_real(value: &toml::Value) -> Option<f64> {
    value
        .as_float()
        .or_else(|| value.as_integer().map(|v| v as f64))
}

fn value_for_domain(domain: &ParamDomain, raw: &toml::Value) -> Option<ParamValue> {
    match domain {
        ParamDomain::Categorical(_) => raw.as_str().map(|s| ParamValue::Cat(s.to_string())),
        ParamDomain::Integer { .. } => toml_int(raw).map(ParamValue::Int),
        ParamDomain::Real { .. } => toml_real(raw).map(ParamValue::Real),
    }
}

fn build_param(section: &ParamSection) -> Result<ParamDef, ScenarioError> {
    let err = |message: &str| ScenarioError::Param {
        name: section.name.clone(),
        message: message.to_string(),
    };
    let domain = match section.kind.as_str() {
        "categorical" => {
            let values = section.values.clone().ok_or_else(|| err("missing 'values'"))?;
            ParamDomain::Categorical(values)
        }
        "integer" => {
            let lo = section.lo.as_ref().and_then(toml_int).ok_or_else(|| err("missing integer 'lo'"))?;
            let hi = section.hi.as_ref().and_then(toml_int).ok_or_else(|| err("missing integer 'hi'"))?;
            ParamDomain::Integer { lo, hi }
        }
        "real" => {
            let lo = section.lo.as_ref().and_then(toml_real).ok_or_else(|| err("missing real 'lo'"))?;
            let hi = section.hi.as_ref().and_then(toml_real).ok_or_else(|| err("missing real 'hi'"))?;
            ParamDomain::Real { lo, hi }
        }
        other => return Err(err(&format!("unknown type '{other}'"))),
    };
    let default = value_for_domain(&domain, &section.default)
        .ok_or_else(|| err("default does not match the parameter type"))?;
    Ok(ParamDef {
        name: section.name.clone(),
        domain,
        default,
        flag_template: section.flag.clone(),
    })
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ScenarioFile = toml::from_str(&text).map_err(|e| ScenarioError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;

        let params: Vec<ParamDef> = file
            .params
            .iter()
            .map(build_param)
            .collect::<Result<_, _>>()?;

        let mut constraints = Vec::new();
        for forbid in &file.forbids {
            let mut combo = ForbiddenCombo::new();
            for (name, raw) in forbid {
                let def = params
                    .iter()
                    .find(|p| &p.name == name)
                    .ok_or_else(|| ScenarioError::UnknownForbidParam { name: name.clone() })?;
                let value = value_for_domain(&def.domain, raw).ok_or_else(|| ScenarioError::Param {
                    name: name.clone(),
                    message: "forbidden value does not match the parameter type".into(),
                })?;
                combo.insert(name.clone(), value);
            }
            constraints.push(combo);
        }

        let space = ParameterSpace::new(params, constraints)?;
        let limits = RunLimits {
            cpu_seconds: file.limits.cpu_seconds,
            memory_bytes: file.limits.memory_bytes,
            timeout_grace_seconds: file.limits.timeout_grace_seconds,
        };
        limits.validate().map_err(ScenarioError::Limits)?;

        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let instances_path = base.join(&file.instances.training);
        let binary = if file.solver.binary.is_absolute() {
            file.solver.binary.clone()
        } else {
            base.join(&file.solver.binary)
        };

        Ok(Scenario {
            binary,
            seed_flag: file.solver.seed_flag,
            limits,
            space,
            instances_path,
            content_hash: hash_bytes(text.as_bytes()),
        })
    }
}

/// A training or test instance: its registry identifier (the file's base
/// name) and its path.
#[derive(Debug, Clone)]
pub struct InstanceEntry {
    pub id: String,
    pub path: PathBuf,
}

/// Reads an instance list: one path per line, `#` comments, paths resolved
/// relative to the list file.
pub fn load_instance_list(path: &Path) -> Result<Vec<InstanceEntry>, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let instance_path = base.join(line);
        let id = instance_path
            .file_name()
            .and_then(|s| s.to_str())
            .map(|s| s.to_string())
            .ok_or_else(|| ScenarioError::Instances {
                path: path.to_path_buf(),
                message: format!("'{line}' has no usable file name"),
            })?;
        if !seen.insert(id.clone()) {
            return Err(ScenarioError::Instances {
                path: path.to_path_buf(),
                message: format!("duplicate instance id '{id}'"),
            });
        }
        entries.push(InstanceEntry { id, path: instance_path });
    }
    if entries.is_empty() {
        return Err(ScenarioError::Instances {
            path: path.to_path_buf(),
            message: "no instances listed".into(),
        });
    }
    Ok(entries)
}
