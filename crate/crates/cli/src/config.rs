//! Scenario configuration: a flat INI-style text format, `--set` overrides,
//! and the built-in presets.
//!
//! ```text
//! # comment
//! [grid]
//! nx = 150
//! dt = 1.220703125e-4
//! ```
//!
//! Every key is addressed as `section.key`. Unknown keys and malformed
//! values are errors, so a typo never silently falls back to a default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use halfwave::medium_grid::{build_homogeneous_acoustic, build_layered_elastic, load_medium_file, Layer};
use halfwave::{Boundary, Equation, Format, GridSpec, RickerSpec, RunSpec, SourceKind, SourceSpec, UpdateMode};

use crate::CliError;

/// Every key the parser accepts.
const KNOWN_KEYS: &[&str] = &[
    "simulation.equation",
    "simulation.name",
    "grid.nx",
    "grid.ny",
    "grid.dx",
    "grid.dt",
    "grid.nt",
    "grid.bc_y",
    "medium.type",
    "medium.rho",
    "medium.c",
    "medium.layers",
    "medium.file",
    "source.kind",
    "source.ix",
    "source.iy",
    "source.frequency",
    "source.delay",
    "source.amplitude",
    "receivers.points",
    "precision.stencil",
    "precision.update",
    "precision.mode",
    "output.dir",
    "output.energy_cadence",
    "compare.reference",
];

pub const PAPER_ACOUSTIC: &str = "\
[simulation]
equation = acoustic
name = paper-acoustic

[grid]
nx = 600
ny = 600
dx = 0.008
dt = 1e-4
nt = 60000
bc_y = periodic

[medium]
type = homogeneous
rho = 1
c = 1

[source]
kind = pressure
ix = 200
iy = 200
frequency = 5
amplitude = 1e4

[receivers]
points = 400:400

[precision]
stencil = fp16
update = fp16
mode = op3

[output]
energy_cadence = 100
";

/// Desk-scale acoustic overrides. The time step is the power of two
/// `2^-13`, the nearest one to the paper's step, so that it is exact in
/// every format; the receiver sits where the wave arrives within 6000 steps.
const DESK_ACOUSTIC: &[(&str, &str)] = &[
    ("grid.nx", "150"),
    ("grid.ny", "150"),
    ("grid.dt", "1.220703125e-4"),
    ("grid.nt", "6000"),
    ("source.ix", "50"),
    ("source.iy", "50"),
    ("receivers.points", "80:80"),
    ("output.energy_cadence", "10"),
];

pub const PAPER_ELASTIC: &str = "\
[simulation]
equation = elastic
name = paper-elastic

[grid]
nx = 600
ny = 320
dx = 0.0081
dt = 1e-4
nt = 80000
bc_y = free_surface

[medium]
type = layered
# depth_fraction:rho:cp:cs, top to bottom (km, s, Gt/km^3)
layers = 0.2:2.0293:2.0:1.0117, 0.45:2.25:2.8:1.5, 0.7:2.45:3.6:2.0, 1.0:2.623:4.6992:2.6

[source]
kind = vy
ix = 200
iy = 10
frequency = 5
amplitude = 1e4

[receivers]
points = 400:10

[precision]
stencil = fp16
update = fp16
mode = op6

[output]
energy_cadence = 100
";

const DESK_ELASTIC: &[(&str, &str)] = &[
    ("grid.nx", "150"),
    ("grid.ny", "80"),
    ("grid.nt", "8000"),
    ("source.ix", "50"),
    ("receivers.points", "100:10"),
    ("output.energy_cadence", "10"),
];

pub const PRESET_NAMES: [&str; 2] = ["paper-acoustic", "paper-elastic"];

/// Raw `section.key -> value` pairs, before typing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::Syntax { line: n + 1, message: format!("unterminated section `{line}`") })?;
                section = name.trim().to_ascii_lowercase();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Syntax { line: n + 1, message: format!("expected `key = value`, got `{line}`") })?;
            if section.is_empty() {
                return Err(CliError::Syntax { line: n + 1, message: "key outside any section".into() });
            }
            let full = format!("{section}.{}", key.trim().to_ascii_lowercase());
            check_known(&full)?;
            entries.insert(full, value.trim().to_string());
        }
        Ok(RawConfig { entries })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    pub fn preset(name: &str, desk: bool) -> Result<Self, CliError> {
        let (text, desk_overrides) = match name {
            "paper-acoustic" | "acoustic" => (PAPER_ACOUSTIC, DESK_ACOUSTIC),
            "paper-elastic" | "elastic" => (PAPER_ELASTIC, DESK_ELASTIC),
            other => return Err(CliError::UnknownPreset(other.to_string())),
        };
        let mut raw = Self::parse(text)?;
        if desk {
            for (k, v) in desk_overrides {
                raw.set(k, v)?;
            }
            let name = raw.entries["simulation.name"].clone();
            raw.set("simulation.name", &format!("{name}-desk"))?;
        }
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().to_ascii_lowercase();
        check_known(&key)?;
        self.entries.insert(key, value.trim().to_string());
        Ok(())
    }

    /// Applies a `section.key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Value { key: assignment.to_string(), message: "expected section.key=value".into() })?;
        self.set(k, v)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| CliError::Missing(key.to_string()))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.required(key)?;
        raw.parse().map_err(|e: T::Err| CliError::Value { key: key.to_string(), message: format!("`{raw}`: {e}") })
    }

    fn parsed_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if self.get(key).is_some() {
            self.parsed(key)
        } else {
            Ok(default)
        }
    }
}

fn check_known(key: &str) -> Result<(), CliError> {
    if KNOWN_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(CliError::UnknownKey(key.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MediumConfig {
    Homogeneous { rho: f64, c: f64 },
    Layered(Vec<Layer>),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    pub kind: SourceKind,
    pub ix: usize,
    pub iy: usize,
    pub frequency: f64,
    pub delay: Option<f64>,
    pub amplitude: f64,
}

/// A validated scenario description.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub name: String,
    pub equation: Equation,
    pub grid: GridSpec,
    pub medium: MediumConfig,
    pub source: Option<SourceConfig>,
    pub receivers: Vec<(usize, usize)>,
    pub stencil: Format,
    pub update: Format,
    pub mode: UpdateMode,
    pub output_dir: PathBuf,
    pub energy_cadence: usize,
    /// Precision of an optional reference run (always baseline, same precision for stencil and update).
    pub reference: Option<Format>,
}

fn parse_enum<T: std::str::FromStr<Err = String>>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse().map_err(|message| CliError::Value { key: key.to_string(), message })
}

fn parse_points(raw: &str) -> Result<Vec<(usize, usize)>, CliError> {
    let bad = |m: String| CliError::Value { key: "receivers.points".into(), message: m };
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| {
            let (i, j) = p.split_once(':').ok_or_else(|| bad(format!("`{p}` is not ix:iy")))?;
            let i = i.trim().parse().map_err(|e| bad(format!("`{p}`: {e}")))?;
            let j = j.trim().parse().map_err(|e| bad(format!("`{p}`: {e}")))?;
            Ok((i, j))
        })
        .collect()
}

fn parse_layers(raw: &str) -> Result<Vec<Layer>, CliError> {
    let bad = |m: String| CliError::Value { key: "medium.layers".into(), message: m };
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|l| {
            let v: Vec<f64> = l
                .split(':')
                .map(|x| x.trim().parse::<f64>().map_err(|e| bad(format!("`{l}`: {e}"))))
                .collect::<Result<_, _>>()?;
            match v[..] {
                [depth, rho, cp, cs] => Ok(Layer::new(depth, rho, cp, cs)),
                _ => Err(bad(format!("`{l}` needs depth_fraction:rho:cp:cs"))),
            }
        })
        .collect()
}

impl SimConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let equation: Equation = parse_enum("simulation.equation", raw.required("simulation.equation")?)?;
        let bc_y = match raw.get("grid.bc_y").unwrap_or("periodic") {
            "periodic" => Boundary::Periodic,
            "free_surface" | "free-surface" | "free" => Boundary::FreeSurface,
            other => {
                return Err(CliError::Value {
                    key: "grid.bc_y".into(),
                    message: format!("`{other}` (expected periodic or free_surface)"),
                })
            }
        };
        let grid = GridSpec::new(
            raw.parsed("grid.nx")?,
            raw.parsed("grid.ny")?,
            raw.parsed("grid.dx")?,
            raw.parsed("grid.dt")?,
            raw.parsed("grid.nt")?,
        )
        .with_bc_y(bc_y);
        grid.validate().map_err(halfwave::SimError::from)?;

        let medium = match raw.required("medium.type")? {
            "homogeneous" => MediumConfig::Homogeneous { rho: raw.parsed("medium.rho")?, c: raw.parsed("medium.c")? },
            "layered" => MediumConfig::Layered(parse_layers(raw.required("medium.layers")?)?),
            "file" => MediumConfig::File(PathBuf::from(raw.required("medium.file")?)),
            other => {
                return Err(CliError::Value {
                    key: "medium.type".into(),
                    message: format!("`{other}` (expected homogeneous, layered or file)"),
                })
            }
        };

        let source = match raw.get("source.kind").unwrap_or("none") {
            "none" => None,
            kind => Some(SourceConfig {
                kind: parse_enum("source.kind", kind)?,
                ix: raw.parsed("source.ix")?,
                iy: raw.parsed("source.iy")?,
                frequency: raw.parsed("source.frequency")?,
                delay: raw.get("source.delay").map(|_| raw.parsed("source.delay")).transpose()?,
                amplitude: raw.parsed_or("source.amplitude", 1.0)?,
            }),
        };

        let default_mode = match equation {
            Equation::Acoustic => "op3",
            Equation::Elastic => "op6",
        };
        let name = raw.get("simulation.name").unwrap_or("scenario").to_string();
        let output_dir = match raw.get("output.dir") {
            Some(d) => PathBuf::from(d),
            None => Path::new("out").join(&name),
        };
        let cadence: usize = raw.parsed_or("output.energy_cadence", 10)?;
        if cadence == 0 {
            return Err(CliError::Value { key: "output.energy_cadence".into(), message: "must be at least 1".into() });
        }
        let config = SimConfig {
            name,
            equation,
            grid,
            medium,
            source,
            receivers: parse_points(raw.get("receivers.points").unwrap_or(""))?,
            stencil: parse_enum("precision.stencil", raw.get("precision.stencil").unwrap_or("fp64"))?,
            update: parse_enum("precision.update", raw.get("precision.update").unwrap_or("fp64"))?,
            mode: parse_enum("precision.mode", raw.get("precision.mode").unwrap_or(default_mode))?,
            output_dir,
            energy_cadence: cadence,
            reference: raw.get("compare.reference").map(|r| parse_enum("compare.reference", r)).transpose()?,
        };
        Ok(config)
    }

    /// Builds the medium and the solver input, checking the stability limit.
    pub fn materialize(&self) -> Result<RunSpec, CliError> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let medium = match &self.medium {
            MediumConfig::Homogeneous { rho, c } => match self.equation {
                Equation::Acoustic => build_homogeneous_acoustic(nx, ny, *rho, *c),
                // A homogeneous elastic medium is a single Poisson-solid layer.
                Equation::Elastic => build_layered_elastic(nx, ny, &[Layer::new(1.0, *rho, *c, *c / 3f64.sqrt())]),
            },
            MediumConfig::Layered(layers) => build_layered_elastic(nx, ny, layers),
            MediumConfig::File(path) => load_medium_file(path),
        }
        .map_err(halfwave::SimError::from)?;
        let expected = match self.equation {
            Equation::Acoustic => "acoustic",
            Equation::Elastic => "elastic",
        };
        if medium.kind_name() != expected {
            return Err(CliError::Value {
                key: "medium.type".into(),
                message: format!("{} medium given for an {expected} run", medium.kind_name()),
            });
        }
        if medium.dims() != (nx, ny) {
            return Err(CliError::Value {
                key: "medium".into(),
                message: format!("medium is {:?} but the grid is {nx}x{ny}", medium.dims()),
            });
        }
        self.grid.check_cfl(medium.max_speed()).map_err(halfwave::SimError::from)?;
        let source = self.source.as_ref().map(|s| SourceSpec {
            kind: s.kind,
            ix: s.ix,
            iy: s.iy,
            wavelet: match s.delay {
                Some(delay) => RickerSpec { f_center: s.frequency, delay, amplitude: s.amplitude },
                None => RickerSpec::with_default_delay(s.frequency, s.amplitude),
            },
        });
        Ok(RunSpec {
            equation: self.equation,
            grid: self.grid,
            medium,
            source,
            receivers: self.receivers.clone(),
            stencil_precision: self.stencil,
            update_precision: self.update,
            mode: self.mode,
            energy_cadence: self.energy_cadence,
        })
    }
}

/// Parses a config file (or a preset) and applies `--set` overrides in order.
pub fn parse_config(
    path: Option<&Path>,
    preset: Option<&str>,
    desk: bool,
    overrides: &[String],
) -> Result<SimConfig, CliError> {
    let mut raw = match (path, preset) {
        (Some(p), _) => RawConfig::read(p)?,
        (None, Some(name)) => RawConfig::preset(name, desk)?,
        (None, None) => return Err(CliError::Missing("--config or --preset".into())),
    };
    for o in overrides {
        raw.apply_override(o)?;
    }
    SimConfig::from_raw(&raw)
}
