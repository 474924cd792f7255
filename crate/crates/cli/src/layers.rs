//! Config layering, flag value types, and atomic file output.
//!
//! Resolution order for every parameter: built-in default, then the
//! `--config` file, then the explicit flag. The resolved set is echoed as
//! a canonical `config.txt` (sorted `key = value` lines, command first) so
//! outputs are reproducible from their artifacts.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use wfpc::scheme::WeightFn;
use wfpc::sim::SweepAxis;

/// Parsed `--config` file contents.
#[derive(Default)]
pub struct Layers {
    entries: HashMap<String, String>,
}

impl Layers {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut entries = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}:{}: expected `key = value`, got `{line}`",
                    path.display(),
                    lineno + 1
                );
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    /// Flag value if given, else the config entry, else the default.
    pub fn resolve<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        match self.resolve_opt(key, flag)? {
            Some(value) => Ok(value),
            None => Ok(default),
        }
    }

    /// Flag value if given, else the config entry, else `None`.
    pub fn resolve_opt<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        if let Some(value) = flag {
            return Ok(Some(value));
        }
        match self.entries.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("config key `{key}`: {e}")),
            None => Ok(None),
        }
    }

    /// Like [`Self::resolve_opt`] but the value must come from somewhere.
    pub fn resolve_required<T>(&self, key: &str, flag: Option<T>) -> Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        self.resolve_opt(key, flag)?
            .ok_or_else(|| anyhow!("--{key} is required (flag or config file)"))
    }
}

/// Resolved configuration of one run, echoed to the output directory.
pub struct ConfigEcho {
    command: &'static str,
    entries: Vec<(String, String)>,
}

impl ConfigEcho {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, key: &str, value: impl fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut entries = self.entries.clone();
        entries.sort();
        let mut out = format!("command = {}\n", self.command);
        for (key, value) in entries {
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }
}

/// Write `contents` to `dir/name` atomically (temp file, then rename).
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let tmp = dir.join(format!("{name}.tmp"));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, &path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(path)
}

/// `id | const | pow:<alpha>` flag value.
#[derive(Debug, Clone, Copy)]
pub struct WeightFnArg(pub WeightFn);

impl FromStr for WeightFnArg {
    type Err = String;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        match raw {
            "id" | "identity" => Ok(Self(WeightFn::Identity)),
            "const" | "constant" => Ok(Self(WeightFn::Constant)),
            other => match other.strip_prefix("pow:") {
                Some(alpha) => {
                    let alpha: f64 = alpha
                        .parse()
                        .map_err(|e| format!("bad power exponent `{alpha}`: {e}"))?;
                    WeightFn::power(alpha)
                        .map(Self)
                        .map_err(|e| e.to_string())
                }
                None => Err(format!(
                    "unknown weight map `{other}` (expected id, const or pow:<alpha>)"
                )),
            },
        }
    }
}

impl fmt::Display for WeightFnArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `exact | mc` flag value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodArg {
    Exact,
    Mc,
}

impl FromStr for MethodArg {
    type Err = String;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        match raw {
            "exact" => Ok(Self::Exact),
            "mc" | "monte-carlo" => Ok(Self::Mc),
            other => Err(format!("unknown method `{other}` (expected exact or mc)")),
        }
    }
}

impl fmt::Display for MethodArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exact => write!(f, "exact"),
            Self::Mc => write!(f, "mc"),
        }
    }
}

/// `q | k | s` flag value.
#[derive(Debug, Clone, Copy)]
pub struct AxisArg(pub SweepAxis);

impl FromStr for AxisArg {
    type Err = String;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        match raw {
            "q" => Ok(Self(SweepAxis::AdversaryFraction)),
            "k" => Ok(Self(SweepAxis::QuorumSize)),
            "s" => Ok(Self(SweepAxis::ZipfExponent)),
            other => Err(format!("unknown axis `{other}` (expected q, k or s)")),
        }
    }
}

impl fmt::Display for AxisArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.label())
    }
}

/// Comma-separated floats.
#[derive(Debug, Clone)]
pub struct F64List(pub Vec<f64>);

impl FromStr for F64List {
    type Err = String;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        raw.split(',')
            .map(|item| {
                item.trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad number `{item}`: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

impl fmt::Display for F64List {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Comma-separated unsigned integers.
#[derive(Debug, Clone)]
pub struct U64List(pub Vec<u64>);

impl FromStr for U64List {
    type Err = String;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        raw.split(',')
            .map(|item| {
                item.trim()
                    .parse::<u64>()
                    .map_err(|e| format!("bad integer `{item}`: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

impl fmt::Display for U64List {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}
