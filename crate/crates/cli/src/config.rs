//! `vfl/1` configuration files, flag merging and the spec strings for kernels,
//! symbols and covariances.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;
use vfl_core::{Kernel, SpectralSpec, Symbol, TabulatedKernel, VflError};

pub const SCHEMA: &str = "vfl/1";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Compute(VflError),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Compute(_) => 2,
            CliError::Verify(_) => 3,
        }
    }
}

/// Bad parameters are reported as configuration errors; everything the
/// numerics could not deliver is a computation error.
impl From<VflError> for CliError {
    fn from(e: VflError) -> Self {
        match e {
            VflError::InvalidParameter(_)
            | VflError::DimensionMismatch { .. }
            | VflError::Format(_) => CliError::Config(e.to_string()),
            e => CliError::Compute(e),
        }
    }
}

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Top-level keys of a configuration file besides the subcommand options.
#[derive(Debug, Default)]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub options: Map<String, Value>,
}

pub fn load(path: &Path, command: &str) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(config_err("configuration must be a JSON object"));
    };
    match map.remove("schema") {
        Some(Value::String(s)) if s == SCHEMA => {}
        Some(other) => {
            return Err(config_err(format!(
                "unsupported schema {other}, expected \"{SCHEMA}\""
            )))
        }
        None => return Err(config_err(format!("missing \"schema\": \"{SCHEMA}\""))),
    }
    if let Some(c) = map.remove("command") {
        if c.as_str() != Some(command) {
            return Err(config_err(format!(
                "config is for command {c}, not \"{command}\""
            )));
        }
    }
    let out = match map.remove("out") {
        None => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(v) => return Err(config_err(format!("\"out\" must be a string, got {v}"))),
    };
    let threads = match map.remove("threads") {
        None => None,
        Some(v) => Some(
            v.as_u64()
                .filter(|&n| n > 0)
                .ok_or_else(|| config_err(format!("\"threads\" must be >= 1, got {v}")))?
                as usize,
        ),
    };
    Ok(FileConfig {
        out,
        threads,
        options: map,
    })
}

/// Flag values override file values key by key.
pub fn merge<T: Serialize + DeserializeOwned>(
    flags: &T,
    file: Map<String, Value>,
) -> Result<T, CliError> {
    let mut base = file;
    if let Value::Object(over) =
        serde_json::to_value(flags).map_err(|e| config_err(e.to_string()))?
    {
        for (k, v) in over {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| config_err(e.to_string()))
}

/// `constant`, `linear`, `exp`, `linexp`, `power:<alpha>`, `table:<csv path>`
/// or a kernel JSON object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelArg {
    Name(String),
    Spec(Kernel),
}

impl FromStr for KernelArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim_start().starts_with('{') {
            return serde_json::from_str(s)
                .map(KernelArg::Spec)
                .map_err(|e| e.to_string());
        }
        Ok(KernelArg::Name(s.to_string()))
    }
}

impl KernelArg {
    pub fn resolve(&self) -> Result<Kernel, CliError> {
        let k = match self {
            KernelArg::Spec(k) => k.clone(),
            KernelArg::Name(s) => {
                let (head, arg) = s
                    .split_once(':')
                    .map_or((s.as_str(), None), |(a, b)| (a, Some(b)));
                match (head.to_ascii_lowercase().as_str(), arg) {
                    ("constant" | "one", None) => Kernel::Constant,
                    ("linear", None) => Kernel::Linear,
                    ("exp" | "exponential", None) => Kernel::Exponential,
                    ("linexp" | "lin_exp", None) => Kernel::LinExp,
                    ("power", Some(a)) => Kernel::Power {
                        alpha: parse_f64(a, "power exponent")?,
                    },
                    ("table" | "tabulated", Some(p)) => {
                        Kernel::Tabulated(read_table(Path::new(p))?)
                    }
                    _ => return Err(config_err(format!("unknown kernel \"{s}\""))),
                }
            }
        };
        k.validate()?;
        Ok(k)
    }
}

/// Two numeric columns `t,a`; a non-numeric first line is taken as a header.
fn read_table(path: &Path) -> Result<TabulatedKernel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => {
                times.push(v[0]);
                values.push(v[1]);
            }
            None if times.is_empty() && i == 0 => {}
            _ => {
                return Err(config_err(format!(
                    "{}:{}: expected two numbers",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(TabulatedKernel::new(times, values, 1)?)
}

/// `laplacian`, `frac:<alpha>`, `quad:<q11,q12,...>` or a symbol JSON object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolArg {
    Name(String),
    Spec(Symbol),
}

impl FromStr for SymbolArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim_start().starts_with('{') {
            return serde_json::from_str(s)
                .map(SymbolArg::Spec)
                .map_err(|e| e.to_string());
        }
        Ok(SymbolArg::Name(s.to_string()))
    }
}

impl SymbolArg {
    pub fn resolve(arg: Option<&SymbolArg>, d: usize) -> Result<Symbol, CliError> {
        let sym = match arg {
            None => Symbol::laplacian(d),
            Some(SymbolArg::Spec(s)) => s.clone(),
            Some(SymbolArg::Name(s)) => {
                let (head, rest) = s
                    .split_once(':')
                    .map_or((s.as_str(), None), |(a, b)| (a, Some(b)));
                match (head.to_ascii_lowercase().as_str(), rest) {
                    ("laplacian", None) => Symbol::laplacian(d),
                    ("frac" | "fractional", Some(a)) => {
                        Symbol::fractional(d, parse_f64(a, "symbol exponent")?)?
                    }
                    ("quad" | "quadratic", Some(q)) => {
                        let q = q
                            .split(',')
                            .map(|x| parse_f64(x, "quadratic form entry"))
                            .collect::<Result<_, _>>()?;
                        Symbol::quadratic(d, q)?
                    }
                    _ => return Err(config_err(format!("unknown symbol \"{s}\""))),
                }
            }
        };
        sym.validate()?;
        if sym.dim() != d {
            return Err(config_err(format!(
                "symbol has dimension {}, expected {d}",
                sym.dim()
            )));
        }
        Ok(sym)
    }
}

pub fn parse_spectral(s: &str) -> Result<SpectralSpec, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

/// Covariance from an explicit spec or from `d` with exactly one of
/// `beta` (radial power), `mass` (finite Gaussian mass) or `q` (torus decay).
pub fn spectral_from(
    spec: Option<&SpectralSpec>,
    d: usize,
    beta: Option<f64>,
    mass: Option<f64>,
    q: Option<f64>,
) -> Result<SpectralSpec, CliError> {
    let s = match (spec, beta, mass, q) {
        (Some(s), None, None, None) => s.clone(),
        (None, Some(beta), None, None) => SpectralSpec::RadialPower { d, beta },
        (None, None, Some(mass), None) => SpectralSpec::FiniteMass { d, mass },
        (None, None, None, Some(q)) => SpectralSpec::TorusDecay { d, q },
        (None, None, None, None) => {
            return Err(config_err(
                "a covariance is required: spectral, beta, mass or q",
            ))
        }
        _ => return Err(config_err("give exactly one of spectral, beta, mass, q")),
    };
    s.validate()?;
    Ok(s)
}

fn parse_f64(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| config_err(format!("invalid {what} \"{s}\"")))
}

pub fn parse_mode(s: &str) -> Result<Vec<i64>, String> {
    s.split([',', ';'])
        .map(|c| {
            c.trim()
                .parse::<i64>()
                .map_err(|e| format!("mode \"{s}\": {e}"))
        })
        .collect()
}
