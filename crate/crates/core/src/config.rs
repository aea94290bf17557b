//! Run configuration for the batch front-end.
//!
//! The format is a flat text file of `[section]` headers followed by
//! `key = value` lines. Several pairs may share a line when separated by
//! commas, `#` starts a comment, and string values may be quoted.
//!
//! ```text
//! [mesh]
//! source = structured        # or: file
//! n = 16, side = 1.0, pattern = crossed
//! # path = plate.mesh        # source = file; relative to the config file
//!
//! [material]
//! half_thickness = 0.01, density = 50, rotary_inertia = false
//! rigidity = 1.0, poisson = 0.3, piezo_rigidity = 0.0
//! g_me1 = 0.1, g_me2 = 0.1, g_me12 = 0.0, g_ee = 0.0
//!
//! [network]
//! inductance = 1.0, resistance = 0.0, capacitance = 1.0, conductance = 0.0
//!
//! [bc]                       # repeatable
//! group = "boundary", kind = "simply_supported+grounded"
//!
//! [modes]
//! mechanical = 8, electric = 8, classification_threshold = 0.9
//!
//! [tuning]
//! enabled = true, mechanical_mode = 1, electric_mode = 1
//!
//! [simulation]
//! ic = unimodal              # or: impulse, with x, y, magnitude
//! field = mechanical, mode = 1, amplitude = 1.0, excite = displacement
//! t_f = 32.0                 # dt and stride are optional
//!
//! [resistance]
//! lo = 1e-3, hi = 10.0, grid = 9, mode = 1, t_f = 20.0, min_peaks = 4
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Mode indices are 1-based. Every section except `[mesh]`, `[material]`
//! and `[bc]` may be omitted and takes the defaults above. Unknown sections
//! or keys are rejected. The only environment override is the output
//! directory, read from `PEM_PLATE_OUT`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::assembly::BoundaryCondition;
use crate::dynamics::Excitation;
use crate::error::{Error, Result};
use crate::material::{build_material, isotropic_rigidity, NetworkParams, PlateParams};
use crate::mesh::SquarePattern;
use crate::modal::{Field, DEFAULT_CLASSIFICATION_THRESHOLD};

pub const OUTPUT_ENV: &str = "PEM_PLATE_OUT";

/// Mesh file bundled with the `clamped-demo` preset, addressed as
/// `builtin:l_shape` in a config.
pub const L_SHAPE_MESH: &str = include_str!("../data/l_shape.mesh");

const PAPER_SQUARE: &str = include_str!("../data/paper-square.cfg");
const CLAMPED_DEMO: &str = include_str!("../data/clamped-demo.cfg");

pub const PRESETS: [&str; 2] = ["paper-square", "clamped-demo"];

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Structured { n: usize, side: f64, pattern: SquarePattern },
    File(PathBuf),
    Builtin(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub enum IcSpec {
    /// Zero-based index within `field`.
    Unimodal { field: Field, mode: usize, amplitude: f64, excite: Excitation },
    Impulse { x: f64, y: f64, magnitude: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub ic: IcSpec,
    pub t_f: f64,
    /// `None` picks `T_min / 40` of the retained modes.
    pub dt: Option<f64>,
    /// Write every `stride`-th step; `None` keeps at most about 2000 rows.
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceConfig {
    pub lo: f64,
    pub hi: f64,
    pub grid: usize,
    /// Zero-based mechanical mode whose damping is maximized.
    pub mode: usize,
    pub t_f: f64,
    pub min_peaks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub plate: PlateParams,
    pub network: NetworkParams,
    pub bcs: Vec<BoundaryCondition>,
    pub n_mech: usize,
    pub n_elec: usize,
    pub classification_threshold: f64,
    /// Zero-based `(mechanical, electric)` targets, `None` when disabled.
    pub tuning: Option<(usize, usize)>,
    pub simulation: SimulationConfig,
    pub resistance: ResistanceConfig,
    pub output_dir: PathBuf,
    /// Exact text the config was parsed from, hashed into the manifest.
    pub source: String,
}

struct Entry {
    value: String,
    line: usize,
}

struct Table {
    name: String,
    entries: BTreeMap<String, Entry>,
}

impl Table {
    fn field(&self, key: &str) -> String {
        format!("{}.{}", self.name, key)
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| {
                Error::config(self.field(key), format!("line {}: cannot parse '{}'", e.line, e.value))
            }),
        }
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?.ok_or_else(|| Error::config(self.field(key), "missing required key"))
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, e)) => Err(Error::config(format!("{}.{k}", self.name), format!("line {}: unknown key", e.line))),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Table>> {
    let mut tables: Vec<Table> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or(Error::Parse { line, message: format!("malformed section header '{body}'") })?;
            tables.push(Table { name: name.to_string(), entries: BTreeMap::new() });
            continue;
        }
        let table = tables
            .last_mut()
            .ok_or(Error::Parse { line, message: "key outside of any [section]".into() })?;
        for pair in body.split(',') {
            let (k, v) = pair
                .split_once('=')
                .ok_or(Error::Parse { line, message: format!("expected 'key = value', got '{}'", pair.trim()) })?;
            let key = k.trim();
            let value = v.trim().trim_matches('"').trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(Error::Parse { line, message: format!("empty key or value in '{}'", pair.trim()) });
            }
            if table.entries.insert(key.to_string(), Entry { value, line }).is_some() {
                return Err(Error::config(format!("{}.{key}", table.name), format!("line {line}: duplicate key")));
            }
        }
    }
    Ok(tables)
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(field, format!("must be non-negative and finite, got {v}")))
    }
}

fn one_based(field: &str, v: usize) -> Result<usize> {
    v.checked_sub(1).ok_or_else(|| Error::config(field, "mode indices start at 1"))
}

impl RunConfig {
    /// Parses and validates a config. Relative mesh paths resolve against
    /// `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<RunConfig> {
        let mut sections: BTreeMap<String, Table> = BTreeMap::new();
        let mut bc_tables = Vec::new();
        for t in tokenize(text)? {
            match t.name.as_str() {
                "bc" => bc_tables.push(t),
                "mesh" | "material" | "network" | "modes" | "tuning" | "simulation" | "resistance" | "output" => {
                    if sections.contains_key(&t.name) {
                        return Err(Error::config(t.name.clone(), "section appears more than once"));
                    }
                    sections.insert(t.name.clone(), t);
                }
                other => return Err(Error::config(other, "unknown section")),
            }
        }
        let mut section = |name: &str, required: bool| -> Result<Table> {
            match sections.remove(name) {
                Some(t) => Ok(t),
                None if required => Err(Error::config(name, "missing required section")),
                None => Ok(Table { name: name.to_string(), entries: BTreeMap::new() }),
            }
        };

        let mut t = section("mesh", true)?;
        let kind: String = t.get("source", "structured".to_string())?;
        let mesh = match kind.as_str() {
            "structured" => {
                let n: usize = t.get("n", 16)?;
                if n == 0 {
                    return Err(Error::config("mesh.n", "must be at least 1"));
                }
                let side = positive("mesh.side", t.get("side", 1.0)?)?;
                let pattern = match t.get("pattern", "crossed".to_string())?.as_str() {
                    "crossed" => SquarePattern::Crossed,
                    "diagonal" => SquarePattern::Diagonal,
                    p => return Err(Error::config("mesh.pattern", format!("expected crossed or diagonal, got '{p}'"))),
                };
                MeshSource::Structured { n, side, pattern }
            }
            "file" => {
                let path: String = t.require("path")?;
                if path == "builtin:l_shape" {
                    MeshSource::Builtin("l_shape")
                } else {
                    let p = base_dir.join(&path);
                    if !p.is_file() {
                        return Err(Error::config("mesh.path", format!("file not found: {}", p.display())));
                    }
                    MeshSource::File(p)
                }
            }
            s => return Err(Error::config("mesh.source", format!("expected structured or file, got '{s}'"))),
        };
        t.finish()?;

        let mut t = section("material", true)?;
        let poisson: f64 = t.get("poisson", 0.3)?;
        if !(poisson > -1.0 && poisson < 0.5) {
            return Err(Error::config("material.poisson", format!("must lie in (-1, 0.5), got {poisson}")));
        }
        let rigidity = positive("material.rigidity", t.require("rigidity")?)?;
        let piezo = non_negative("material.piezo_rigidity", t.get("piezo_rigidity", 0.0)?)?;
        let plate = PlateParams {
            half_thickness: positive("material.half_thickness", t.require("half_thickness")?)?,
            density: positive("material.density", t.require("density")?)?,
            rotary_inertia: t.get("rotary_inertia", false)?,
            bending_stiffness: isotropic_rigidity(rigidity, poisson),
            piezo_stiffness: isotropic_rigidity(piezo, poisson),
            coupling: [t.get("g_me1", 0.0)?, t.get("g_me2", 0.0)?, t.get("g_me12", 0.0)?],
            g_ee: non_negative("material.g_ee", t.get("g_ee", 0.0)?)?,
        };
        for (k, v) in ["g_me1", "g_me2", "g_me12"].iter().zip(plate.coupling) {
            if !v.is_finite() {
                return Err(Error::config(format!("material.{k}"), "must be finite"));
            }
        }
        t.finish()?;

        let mut t = section("network", false)?;
        let d = NetworkParams::benchmark();
        let network = NetworkParams {
            inductance: positive("network.inductance", t.get("inductance", d.inductance)?)?,
            resistance: non_negative("network.resistance", t.get("resistance", d.resistance)?)?,
            capacitance: non_negative("network.capacitance", t.get("capacitance", d.capacitance)?)?,
            conductance: non_negative("network.conductance", t.get("conductance", d.conductance)?)?,
        };
        t.finish()?;
        build_material(&plate, &network).map_err(|e| Error::config("material", e.to_string()))?;

        if bc_tables.is_empty() {
            return Err(Error::config("bc", "at least one [bc] section is required"));
        }
        let mut bcs = Vec::new();
        for mut t in bc_tables {
            let group: String = t.require("group")?;
            let kind: String = t.require("kind")?;
            bcs.extend(BoundaryCondition::parse_list(&group, &kind).map_err(|e| Error::config("bc.kind", e.to_string()))?);
            t.finish()?;
        }

        let mut t = section("modes", false)?;
        let n_mech: usize = t.get("mechanical", 8)?;
        let n_elec: usize = t.get("electric", 8)?;
        if n_mech == 0 {
            return Err(Error::config("modes.mechanical", "at least one mode must be retained"));
        }
        if n_elec == 0 {
            return Err(Error::config("modes.electric", "at least one mode must be retained"));
        }
        let classification_threshold: f64 = t.get("classification_threshold", DEFAULT_CLASSIFICATION_THRESHOLD)?;
        if !(classification_threshold > 0.5 && classification_threshold <= 1.0) {
            return Err(Error::config("modes.classification_threshold", "must lie in (0.5, 1]"));
        }
        t.finish()?;

        let mut t = section("tuning", false)?;
        let tuning = if t.get("enabled", true)? {
            let m = one_based("tuning.mechanical_mode", t.get("mechanical_mode", 1)?)?;
            let e = one_based("tuning.electric_mode", t.get("electric_mode", 1)?)?;
            Some((m, e))
        } else {
            None
        };
        t.finish()?;

        let mut t = section("simulation", false)?;
        let ic = match t.get("ic", "unimodal".to_string())?.as_str() {
            "unimodal" => {
                let field = match t.get("field", "mechanical".to_string())?.as_str() {
                    "mechanical" => Field::Mechanical,
                    "electric" => Field::Electric,
                    f => return Err(Error::config("simulation.field", format!("expected mechanical or electric, got '{f}'"))),
                };
                let mode = one_based("simulation.mode", t.get("mode", 1)?)?;
                let limit = if field == Field::Mechanical { n_mech } else { n_elec };
                if mode >= limit {
                    return Err(Error::config("simulation.mode", format!("only {limit} {} modes are retained", field.name())));
                }
                let amplitude: f64 = t.get("amplitude", 1.0)?;
                if !amplitude.is_finite() {
                    return Err(Error::config("simulation.amplitude", "must be finite"));
                }
                let excite = match t.get("excite", "displacement".to_string())?.as_str() {
                    "displacement" => Excitation::Displacement,
                    "velocity" => Excitation::Velocity,
                    e => return Err(Error::config("simulation.excite", format!("expected displacement or velocity, got '{e}'"))),
                };
                IcSpec::Unimodal { field, mode, amplitude, excite }
            }
            "impulse" => IcSpec::Impulse {
                x: t.require("x")?,
                y: t.require("y")?,
                magnitude: t.get("magnitude", 1.0)?,
            },
            other => return Err(Error::config("simulation.ic", format!("expected unimodal or impulse, got '{other}'"))),
        };
        let simulation = SimulationConfig {
            ic,
            t_f: positive("simulation.t_f", t.get("t_f", 32.0)?)?,
            dt: t.take::<f64>("dt")?.map(|v| positive("simulation.dt", v)).transpose()?,
            stride: match t.take::<usize>("stride")? {
                Some(0) => return Err(Error::config("simulation.stride", "must be at least 1")),
                s => s,
            },
        };
        t.finish()?;

        let mut t = section("resistance", false)?;
        let lo = positive("resistance.lo", t.get("lo", 1e-3)?)?;
        let hi = positive("resistance.hi", t.get("hi", 10.0)?)?;
        if hi <= lo {
            return Err(Error::config("resistance.hi", format!("must exceed resistance.lo = {lo}")));
        }
        let grid: usize = t.get("grid", 9)?;
        if grid < 3 {
            return Err(Error::config("resistance.grid", "needs at least 3 points"));
        }
        let mode = one_based("resistance.mode", t.get("mode", 1)?)?;
        if mode >= n_mech {
            return Err(Error::config("resistance.mode", format!("only {n_mech} mechanical modes are retained")));
        }
        let resistance = ResistanceConfig {
            lo,
            hi,
            grid,
            mode,
            t_f: positive("resistance.t_f", t.get("t_f", 20.0)?)?,
            min_peaks: t.get("min_peaks", 4)?,
        };
        t.finish()?;

        let mut t = section("output", false)?;
        let output_dir = PathBuf::from(t.get("dir", "out".to_string())?);
        t.finish()?;

        Ok(RunConfig {
            mesh,
            plate,
            network,
            bcs,
            n_mech,
            n_elec,
            classification_threshold,
            tuning,
            simulation,
            resistance,
            output_dir,
            source: text.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.to_path_buf(), message: e.to_string() })?;
        RunConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn preset(name: &str) -> Result<RunConfig> {
        let text = match name {
            "paper-square" => PAPER_SQUARE,
            "clamped-demo" => CLAMPED_DEMO,
            _ => return Err(Error::config("config", format!("unknown preset '{name}'; available: {}", PRESETS.join(", ")))),
        };
        RunConfig::parse(text, Path::new("."))
    }

    /// Reads `arg` as a file when it exists, otherwise as a preset name.
    pub fn load(arg: &str) -> Result<RunConfig> {
        let path = Path::new(arg);
        if path.is_file() {
            RunConfig::from_file(path)
        } else if PRESETS.contains(&arg) {
            RunConfig::preset(arg)
        } else {
            Err(Error::config("config", format!("'{arg}' is neither a readable file nor a preset ({})", PRESETS.join(", "))))
        }
    }

    /// Output directory: the explicit override, then `PEM_PLATE_OUT`, then
    /// `[output] dir`.
    pub fn resolve_output(&self, explicit: Option<&Path>) -> PathBuf {
        if let Some(p) = explicit {
            return p.to_path_buf();
        }
        match std::env::var_os(OUTPUT_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output_dir.clone(),
        }
    }
}
