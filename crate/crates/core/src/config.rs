//! Run configuration in a flat `block.key = value` text format.
//!
//! ```text
//! # van der Pol, tunnel case
//! system.f = x^2/2 + x^3/3
//! system.p = x
//! system.x_min = -0.95
//! system.x_max = 2
//! sections.sc_minus = 0.05
//! sections.sc_plus = 0.1
//! entry.kind = uniform
//! entry.lo = 0.02666666666666667
//! entry.hi = 0.05
//! sim.eps = 0.01
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors, reported with their line number.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::measures::EntryKind;
use crate::model::LienardSystem;
use crate::sim::{default_sections, SimConfig};

const KEYS: &[&str] = &[
    "system.f",
    "system.p",
    "system.x_min",
    "system.x_max",
    "sections.sc_minus",
    "sections.sc_plus",
    "sections.x_entry",
    "sections.x_exit",
    "sections.l_lo",
    "sections.l_hi",
    "sections.s0",
    "entry.kind",
    "entry.lo",
    "entry.hi",
    "entry.location",
    "entry.scale",
    "entry.values",
    "sim.eps",
    "sim.abs_tol",
    "sim.rel_tol",
    "sim.max_step",
    "sim.max_time",
    "sim.samples",
    "sim.seed",
    "sim.lambda_lo",
    "sim.lambda_hi",
    "sim.allow_small_eps",
    "output.dir",
    "output.points",
    "output.bins",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub f: String,
    pub p: String,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sections {
    pub sc_minus: Option<f64>,
    pub sc_plus: Option<f64>,
    pub x_entry: Option<f64>,
    pub x_exit: Option<f64>,
    pub l: Option<(f64, f64)>,
    pub s0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub eps: Option<f64>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub max_time: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub lambda_bracket: (f64, f64),
    pub allow_small_eps: bool,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            eps: None,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_step: 1e-2,
            max_time: None,
            samples: 500,
            seed: 0,
            lambda_bracket: (-0.05, 0.05),
            allow_small_eps: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub dir: Option<PathBuf>,
    /// Grid size for tabulated CSV outputs.
    pub points: usize,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub system: SystemSpec,
    pub sections: Sections,
    pub entry: Option<EntryKind>,
    pub sim: SimSettings,
    pub output: Output,
}

struct Entry {
    line: usize,
    value: String,
}

struct Table(BTreeMap<&'static str, Entry>);

fn line_error(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

impl Table {
    fn take_str(&mut self, key: &str) -> Option<(usize, String)> {
        self.0.remove(key).map(|e| (e.line, e.value))
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take_str(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| line_error(line, format!("cannot parse `{v}` as the value of {key}"))),
        }
    }

    fn require_str(&mut self, key: &str) -> Result<String> {
        self.take_str(key)
            .map(|(_, v)| v)
            .ok_or_else(|| Error::Config(format!("missing required key {key}")))
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?
            .ok_or_else(|| Error::Config(format!("missing required key {key}")))
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.0.get(key).map(|e| e.line)
    }
}

impl FromStr for Config {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                line_error(
                    line,
                    format!("expected `block.key = value`, found `{content}`"),
                )
            })?;
            let key = key.trim();
            let value = value.trim();
            let known = KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| line_error(line, format!("unknown key `{key}`")))?;
            if value.is_empty() {
                return Err(line_error(line, format!("empty value for {key}")));
            }
            if let Some(prev) = table.insert(
                *known,
                Entry {
                    line,
                    value: value.to_string(),
                },
            ) {
                return Err(line_error(
                    line,
                    format!("{key} already set on line {}", prev.line),
                ));
            }
        }
        let mut t = Table(table);

        let system = SystemSpec {
            f: t.require_str("system.f")?,
            p: t.require_str("system.p")?,
            x_min: t.require("system.x_min")?,
            x_max: t.require("system.x_max")?,
        };

        let l = match (
            t.take::<f64>("sections.l_lo")?,
            t.take::<f64>("sections.l_hi")?,
        ) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            (None, None) => None,
            _ => {
                return Err(Error::Config(
                    "sections.l_lo and sections.l_hi must be given together".into(),
                ))
            }
        };
        let sections = Sections {
            sc_minus: t.take("sections.sc_minus")?,
            sc_plus: t.take("sections.sc_plus")?,
            x_entry: t.take("sections.x_entry")?,
            x_exit: t.take("sections.x_exit")?,
            l,
            s0: t.take("sections.s0")?,
        };

        let entry = parse_entry(&mut t)?;

        let defaults = SimSettings::default();
        let sim = SimSettings {
            eps: t.take("sim.eps")?,
            abs_tol: t.take("sim.abs_tol")?.unwrap_or(defaults.abs_tol),
            rel_tol: t.take("sim.rel_tol")?.unwrap_or(defaults.rel_tol),
            max_step: t.take("sim.max_step")?.unwrap_or(defaults.max_step),
            max_time: t.take("sim.max_time")?,
            samples: t.take("sim.samples")?.unwrap_or(defaults.samples),
            seed: t.take("sim.seed")?.unwrap_or(defaults.seed),
            lambda_bracket: (
                t.take("sim.lambda_lo")?
                    .unwrap_or(defaults.lambda_bracket.0),
                t.take("sim.lambda_hi")?
                    .unwrap_or(defaults.lambda_bracket.1),
            ),
            allow_small_eps: t.take("sim.allow_small_eps")?.unwrap_or(false),
        };

        let output = Output {
            dir: t.take_str("output.dir").map(|(_, v)| PathBuf::from(v)),
            points: t.take("output.points")?.unwrap_or(200),
            bins: t.take("output.bins")?.unwrap_or(10),
        };

        if let Some((key, e)) = t.0.iter().next() {
            return Err(line_error(
                e.line,
                format!("{key} does not apply to this entry kind"),
            ));
        }
        Ok(Self {
            system,
            sections,
            entry,
            sim,
            output,
        })
    }
}

fn parse_entry(t: &mut Table) -> Result<Option<EntryKind>> {
    let Some((line, kind)) = t.take_str("entry.kind") else {
        return Ok(None);
    };
    let lo: f64 = t.require("entry.lo")?;
    let hi: f64 = t.require("entry.hi")?;
    Ok(Some(match kind.as_str() {
        "uniform" => EntryKind::Uniform { lo, hi },
        "cauchy" => EntryKind::TruncatedCauchy {
            location: t.take("entry.location")?.unwrap_or(0.5 * (lo + hi)),
            scale: t.take("entry.scale")?.unwrap_or((hi - lo) / 20.0),
            lo,
            hi,
        },
        "table" => {
            let line = t.line_of("entry.values").unwrap_or(line);
            let raw = t.require_str("entry.values")?;
            let values = raw
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| {
                    line_error(
                        line,
                        "entry.values must be a comma-separated list of numbers",
                    )
                })?;
            EntryKind::Table { lo, hi, values }
        }
        other => {
            return Err(line_error(
                line,
                format!("entry.kind must be uniform, cauchy or table, found `{other}`"),
            ))
        }
    }))
}

impl Config {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    pub fn lienard(&self) -> Result<LienardSystem> {
        LienardSystem::from_strings(
            &self.system.f,
            &self.system.p,
            self.system.x_min,
            self.system.x_max,
        )
    }

    pub fn section_heights(&self) -> Result<(f64, f64)> {
        match (self.sections.sc_minus, self.sections.sc_plus) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::Config(
                "sections.sc_minus and sections.sc_plus are required".into(),
            )),
        }
    }

    /// Entry interval `L`: explicit bounds, else the entry support.
    pub fn entry_interval(&self) -> Result<(f64, f64)> {
        if let Some(l) = self.sections.l {
            return Ok(l);
        }
        match &self.entry {
            Some(EntryKind::Uniform { lo, hi })
            | Some(EntryKind::TruncatedCauchy { lo, hi, .. })
            | Some(EntryKind::Table { lo, hi, .. }) => Ok((*lo, *hi)),
            None => Err(Error::Config(
                "an entry block or sections.l_lo/l_hi is required".into(),
            )),
        }
    }

    pub fn entry_kind(&self) -> Result<&EntryKind> {
        self.entry
            .as_ref()
            .ok_or_else(|| Error::Config("an entry block is required".into()))
    }

    /// Simulation settings at `eps`, with default sections filled in.
    pub fn sim_config(&self, system: &LienardSystem, eps: f64) -> Result<SimConfig> {
        let (sc_minus, sc_plus) = self.section_heights()?;
        let (x_entry, x_exit) = match (self.sections.x_entry, self.sections.x_exit) {
            (Some(a), Some(b)) => (a, b),
            (a, b) => {
                let (da, db) = default_sections(system, sc_minus, sc_plus)?;
                (a.unwrap_or(da), b.unwrap_or(db))
            }
        };
        let mut cfg = SimConfig::new(eps, x_entry, x_exit);
        cfg.abs_tol = self.sim.abs_tol;
        cfg.rel_tol = self.sim.rel_tol;
        cfg.max_step = self.sim.max_step;
        cfg.max_time = self.sim.max_time;
        cfg.allow_small_eps = self.sim.allow_small_eps;
        cfg.check()?;
        Ok(cfg)
    }
}
