//! Typed parameter spaces and configurations: domains, constraints, uniform
//! sampling, and deterministic command-line rendering.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub(crate) fn hex_of(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&alloc::format!("{b:02x}"));
    }
    out
}

/// A parameter value. Reals render with round-trip-exact decimal formatting,
/// so equal values always produce equal text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamValue {
    Cat(String),
    Int(i64),
    Real(f64),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Cat(s) => write!(f, "{s}"),
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
        }
    }
}

/// The domain a parameter ranges over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamDomain {
    Categorical(Vec<String>),
    Integer { lo: i64, hi: i64 },
    Real { lo: f64, hi: f64 },
}

impl ParamDomain {
    pub fn contains(&self, value: &ParamValue) -> bool {
        match (self, value) {
            (ParamDomain::Categorical(vals), ParamValue::Cat(v)) => vals.iter().any(|x| x == v),
            (ParamDomain::Integer { lo, hi }, ParamValue::Int(v)) => lo <= v && v <= hi,
            (ParamDomain::Real { lo, hi }, ParamValue::Real(v)) => {
                v.is_finite() && *lo <= *v && *v <= *hi
            }
            _ => false,
        }
    }

    pub(crate) fn sample(&self, rng: &mut ChaCha8Rng) -> ParamValue {
        match self {
            ParamDomain::Categorical(vals) => {
                ParamValue::Cat(vals[rng.random_range(0..vals.len())].clone())
            }
            ParamDomain::Integer { lo, hi } => ParamValue::Int(rng.random_range(*lo..=*hi)),
            ParamDomain::Real { lo, hi } => {
                if lo == hi {
                    ParamValue::Real(*lo)
                } else {
                    ParamValue::Real(rng.random_range(*lo..=*hi))
                }
            }
        }
    }
}

/// One tunable parameter: its domain, default, and the flag it renders to.
/// `flag_template` substitutes `{value}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDef {
    pub name: String,
    pub domain: ParamDomain,
    pub default: ParamValue,
    pub flag_template: String,
}

/// A partial assignment of parameter values that may not co-occur.
pub type ForbiddenCombo = BTreeMap<String, ParamValue>;

/// Errors raised while building or sampling a parameter space.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceError {
    DuplicateParam { name: String },
    EmptyCategorical { name: String },
    DuplicateCategory { name: String, value: String },
    EmptyRange { name: String },
    DefaultOutsideDomain { name: String },
    DefaultViolatesConstraint,
    UnknownParam { name: String },
    MissingValue { name: String },
    ValueOutsideDomain { name: String },
    ConstraintViolated,
    SamplingExhausted { attempts: u32 },
}

impl fmt::Display for SpaceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceError::DuplicateParam { name } => write!(f, "duplicate parameter '{name}'"),
            SpaceError::EmptyCategorical { name } => {
                write!(f, "categorical parameter '{name}' has no values")
            }
            SpaceError::DuplicateCategory { name, value } => {
                write!(f, "categorical parameter '{name}' repeats value '{value}'")
            }
            SpaceError::EmptyRange { name } => write!(f, "parameter '{name}' has lo > hi"),
            SpaceError::DefaultOutsideDomain { name } => {
                write!(f, "default of parameter '{name}' lies outside its domain")
            }
            SpaceError::DefaultViolatesConstraint => {
                write!(f, "the default configuration violates a constraint")
            }
            SpaceError::UnknownParam { name } => write!(f, "unknown parameter '{name}'"),
            SpaceError::MissingValue { name } => write!(f, "no value for parameter '{name}'"),
            SpaceError::ValueOutsideDomain { name } => {
                write!(f, "value for parameter '{name}' lies outside its domain")
            }
            SpaceError::ConstraintViolated => write!(f, "configuration violates a constraint"),
            SpaceError::SamplingExhausted { attempts } => {
                write!(f, "no constraint-satisfying sample found in {attempts} attempts")
            }
        }
    }
}

impl core::error::Error for SpaceError {}

const SAMPLE_ATTEMPTS: u32 = 1000;

/// An ordered set of parameters plus forbidden value combinations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    params: Vec<ParamDef>,
    constraints: Vec<ForbiddenCombo>,
}

impl ParameterSpace {
    pub fn new(params: Vec<ParamDef>, constraints: Vec<ForbiddenCombo>) -> Result<Self, SpaceError> {
        let mut names = alloc::collections::BTreeSet::new();
        for p in &params {
            if !names.insert(p.name.as_str()) {
                return Err(SpaceError::DuplicateParam { name: p.name.clone() });
            }
            match &p.domain {
                ParamDomain::Categorical(vals) => {
                    if vals.is_empty() {
                        return Err(SpaceError::EmptyCategorical { name: p.name.clone() });
                    }
                    let mut seen = alloc::collections::BTreeSet::new();
                    for v in vals {
                        if !seen.insert(v.as_str()) {
                            return Err(SpaceError::DuplicateCategory {
                                name: p.name.clone(),
                                value: v.clone(),
                            });
                        }
                    }
                }
                ParamDomain::Integer { lo, hi } => {
                    if lo > hi {
                        return Err(SpaceError::EmptyRange { name: p.name.clone() });
                    }
                }
                ParamDomain::Real { lo, hi } => {
                    if !(lo <= hi) {
                        return Err(SpaceError::EmptyRange { name: p.name.clone() });
                    }
                }
            }
            if !p.domain.contains(&p.default) {
                return Err(SpaceError::DefaultOutsideDomain { name: p.name.clone() });
            }
        }
        for combo in &constraints {
            for name in combo.keys() {
                if !names.contains(name.as_str()) {
                    return Err(SpaceError::UnknownParam { name: name.clone() });
                }
            }
        }
        let space = ParameterSpace { params, constraints };
        let defaults: BTreeMap<String, ParamValue> = space
            .params
            .iter()
            .map(|p| (p.name.clone(), p.default.clone()))
            .collect();
        if space.violates_constraint(&defaults) {
            return Err(SpaceError::DefaultViolatesConstraint);
        }
        Ok(space)
    }

    pub fn params(&self) -> &[ParamDef] {
        &self.params
    }

    pub fn constraints(&self) -> &[ForbiddenCombo] {
        &self.constraints
    }

    fn violates_constraint(&self, values: &BTreeMap<String, ParamValue>) -> bool {
        self.constraints
            .iter()
            .any(|combo| combo.iter().all(|(k, v)| values.get(k) == Some(v)))
    }

    /// Builds a configuration from a total value map, checking domains and
    /// constraints.
    pub fn configuration(
        &self,
        values: BTreeMap<String, ParamValue>,
    ) -> Result<Configuration, SpaceError> {
        for p in &self.params {
            match values.get(&p.name) {
                None => return Err(SpaceError::MissingValue { name: p.name.clone() }),
                Some(v) => {
                    if !p.domain.contains(v) {
                        return Err(SpaceError::ValueOutsideDomain { name: p.name.clone() });
                    }
                }
            }
        }
        for name in values.keys() {
            if !self.params.iter().any(|p| &p.name == name) {
                return Err(SpaceError::UnknownParam { name: name.clone() });
            }
        }
        if self.violates_constraint(&values) {
            return Err(SpaceError::ConstraintViolated);
        }
        Ok(Configuration::from_values(values))
    }

    /// The all-defaults configuration. Cannot fail: space construction already
    /// checked that the defaults satisfy every constraint.
    pub fn default_config(&self) -> Configuration {
        let values = self
            .params
            .iter()
            .map(|p| (p.name.clone(), p.default.clone()))
            .collect();
        Configuration::from_values(values)
    }

    /// Uniform independent draw per parameter, rejection-resampled until the
    /// constraints hold (capped at 1000 attempts).
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Configuration, SpaceError> {
        for _ in 0..SAMPLE_ATTEMPTS {
            let values: BTreeMap<String, ParamValue> = self
                .params
                .iter()
                .map(|p| (p.name.clone(), p.domain.sample(rng)))
                .collect();
            if !self.violates_constraint(&values) {
                return Ok(Configuration::from_values(values));
            }
        }
        Err(SpaceError::SamplingExhausted { attempts: SAMPLE_ATTEMPTS })
    }
}

/// Convenience wrapper: one deterministic sample from a fresh seeded RNG.
pub fn sample_config(space: &ParameterSpace, rng_seed: u64) -> Result<Configuration, SpaceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    space.sample(&mut rng)
}

/// Content hash of a configuration's canonicalized values. Equal value maps
/// yield equal ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConfigId(String);

impl ConfigId {
    pub fn from_raw(s: &str) -> Self {
        ConfigId(s.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConfigId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One point of the parameter space: a total value map plus its content id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    values: BTreeMap<String, ParamValue>,
    id: ConfigId,
}

impl Configuration {
    fn from_values(values: BTreeMap<String, ParamValue>) -> Self {
        let id = Self::hash_values(&values);
        Configuration { values, id }
    }

    fn hash_values(values: &BTreeMap<String, ParamValue>) -> ConfigId {
        let mut hasher = Sha256::new();
        for (name, value) in values {
            hasher.update(name.as_bytes());
            hasher.update(b"=");
            hasher.update(value.to_string().as_bytes());
            hasher.update(b"\n");
        }
        ConfigId(hex_of(&hasher.finalize()[..16]))
    }

    pub fn id(&self) -> &ConfigId {
        &self.id
    }

    pub fn values(&self) -> &BTreeMap<String, ParamValue> {
        &self.values
    }

    pub fn value(&self, name: &str) -> Option<&ParamValue> {
        self.values.get(name)
    }
}

/// Renders the deterministic argument vector for one run: binary, instance
/// path, per-parameter flags in space order, then the seed flag if the solver
/// declares one. Templates substitute `{value}`.
pub fn render_cmdline(
    space: &ParameterSpace,
    config: &Configuration,
    binary: &str,
    instance_path: &str,
    seed_flag_template: Option<&str>,
    seed: u64,
) -> Vec<String> {
    let mut args = Vec::with_capacity(space.params().len() + 3);
    args.push(binary.to_string());
    args.push(instance_path.to_string());
    for p in space.params() {
        let value = config
            .value(&p.name)
            .map(|v| v.to_string())
            .unwrap_or_default();
        args.push(p.flag_template.replace("{value}", &value));
    }
    if let Some(template) = seed_flag_template {
        args.push(template.replace("{value}", &seed.to_string()));
    }
    args
}
