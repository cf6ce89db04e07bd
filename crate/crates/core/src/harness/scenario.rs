//! Scenario files: TOML with SI units in the field names.
//!
//! Sections absent from a user file are taken from the embedded default
//! scenario and recorded. A surface entry may name a built-in preset with
//! `preset = "<name>"` and override individual fields.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gait::{Direction, GaitKind};
use crate::resonator::{BeamGeometry, Material, ResonatorModel, RingGeometry};
use crate::squeezefilm::FilmModel;
use crate::surfaces::SurfaceSpec;
use crate::dynamics::SimConfig;
use crate::{Error, Result};

/// The shipped default scenario.
pub const DEFAULT_SCENARIO: &str = include_str!("../../scenarios/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub flat: BeamGeometry,
    pub ring: RingGeometry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Module {
    Flat,
    Cylindrical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resonators {
    pub flat: ResonatorModel,
    pub cylindrical: ResonatorModel,
}

impl Resonators {
    pub fn get(&self, module: Module) -> &ResonatorModel {
        match module {
            Module::Flat => &self.flat,
            Module::Cylindrical => &self.cylindrical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub substrate: String,
    pub module_mass_kg: f64,
    pub rail_mass_kg: f64,
    pub coupling_stiffness_n_per_m: f64,
    /// Critical damping when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_damping_n_s_per_m: Option<f64>,
    pub drive_voltage_v: f64,
    pub inchworm_normal_load_n: f64,
    pub inchworm_contact_area_m2: f64,
    pub ovipositor_moving_load_n: f64,
    pub ovipositor_fixed_load_n: f64,
    pub ovipositor_contact_area_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitSpec {
    pub kind: GaitKind,
    pub direction: Direction,
    pub stroke_m: f64,
    pub rate_m_per_s: f64,
    pub cycles: u32,
    pub settle_cycles: u32,
    pub inchworm_switching_latency_s: f64,
    pub ovipositor_switching_latency_s: f64,
}

impl GaitSpec {
    pub fn switching_latency(&self, kind: GaitKind) -> f64 {
        match kind {
            GaitKind::Ovipositor => self.ovipositor_switching_latency_s,
            _ => self.inchworm_switching_latency_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VibrationSpec {
    pub sweep_start_hz: f64,
    pub sweep_end_hz: f64,
    pub sweep_steps: usize,
    pub sweep_voltage_v: f64,
    pub voltage_max_v: f64,
    pub voltage_step_v: f64,
    pub measurement_limit_m: f64,
    pub clip_to_limit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TribometerSpec {
    pub surfaces: Vec<String>,
    pub module: Module,
    pub slider_mass_kg: f64,
    pub normal_load_n: f64,
    pub distance_m: f64,
    pub speed_m_per_s: f64,
    pub voltage_v: f64,
    /// Leading fraction of each stroke left out of the mean.
    pub discard_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampSpec {
    pub surfaces: Vec<String>,
    pub module: Module,
    pub slider_mass_kg: f64,
    pub normal_load_n: f64,
    pub distance_m: f64,
    pub speed_m_per_s: f64,
    pub ramp_start_s: f64,
    pub ramp_end_s: f64,
    pub max_voltage_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiments {
    pub vibration: VibrationSpec,
    pub tribometer: TribometerSpec,
    pub ramp: RampSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Config(format!("unknown output format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub material: Material,
    pub geometry: Geometry,
    pub resonator: Resonators,
    pub film: FilmModel,
    pub surfaces: BTreeMap<String, SurfaceSpec>,
    pub world: WorldSpec,
    pub gait: GaitSpec,
    pub sim: SimConfig,
    pub experiments: Experiments,
    pub outputs: Outputs,
}

/// A parsed scenario plus what the loader had to do to get it.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    /// Dotted paths filled in from the default scenario.
    pub defaults_applied: Vec<String>,
    /// Unknown keys tolerated in non-strict mode, and similar notes.
    pub warnings: Vec<String>,
}

impl Scenario {
    /// The shipped default scenario.
    pub fn default_scenario() -> Scenario {
        parse_scenario(DEFAULT_SCENARIO, true).expect("default scenario is valid").scenario
    }

    pub fn surface(&self, name: &str) -> Result<&SurfaceSpec> {
        self.surfaces
            .get(name)
            .ok_or_else(|| Error::Validation(vec![format!("unknown surface '{name}'")]))
    }

    /// Canonical TOML text of the resolved scenario.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize scenario: {e}")))
    }

    /// Hex SHA-256 of the canonical text and the seed.
    pub fn hash(&self) -> Result<String> {
        let mut h = Sha256::new();
        h.update(self.to_toml()?.as_bytes());
        h.update(b"\nseed=");
        h.update(self.seed.to_string().as_bytes());
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Short hash used for output directory names.
    pub fn short_hash(&self) -> Result<String> {
        Ok(self.hash()?[..16].to_string())
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut collect = |r: Result<()>| match r {
            Ok(()) => {}
            Err(Error::Validation(mut e)) => errs.append(&mut e),
            Err(e) => errs.push(e.to_string()),
        };
        collect(self.material.validate());
        collect(self.geometry.flat.validate());
        collect(self.geometry.ring.validate());
        collect(self.resonator.flat.validate("resonator.flat"));
        collect(self.resonator.cylindrical.validate("resonator.cylindrical"));
        collect(self.film.validate());
        for (name, s) in &self.surfaces {
            collect(s.validate(name));
        }
        collect(self.sim.validate());

        let w = &self.world;
        if !self.surfaces.contains_key(&w.substrate) {
            errs.push(format!("world.substrate refers to unknown surface '{}'", w.substrate));
        }
        for (name, v) in [
            ("module_mass_kg", w.module_mass_kg),
            ("rail_mass_kg", w.rail_mass_kg),
            ("coupling_stiffness_n_per_m", w.coupling_stiffness_n_per_m),
            ("inchworm_normal_load_n", w.inchworm_normal_load_n),
            ("inchworm_contact_area_m2", w.inchworm_contact_area_m2),
            ("ovipositor_moving_load_n", w.ovipositor_moving_load_n),
            ("ovipositor_fixed_load_n", w.ovipositor_fixed_load_n),
            ("ovipositor_contact_area_m2", w.ovipositor_contact_area_m2),
        ] {
            positive(&mut errs, "world", name, v);
        }
        if !(w.drive_voltage_v >= 0.0 && w.drive_voltage_v.is_finite()) {
            errs.push("world.drive_voltage_v must be non-negative".into());
        }
        if w.coupling_damping_n_s_per_m.is_some_and(|c| !(c >= 0.0 && c.is_finite())) {
            errs.push("world.coupling_damping_n_s_per_m must be non-negative".into());
        }

        let g = &self.gait;
        if g.kind == GaitKind::Custom {
            errs.push("gait.kind must be inchworm or ovipositor".into());
        }
        positive(&mut errs, "gait", "stroke_m", g.stroke_m);
        positive(&mut errs, "gait", "rate_m_per_s", g.rate_m_per_s);
        if g.cycles == 0 {
            errs.push("gait.cycles must be positive".into());
        }
        for (name, v) in [
            ("inchworm_switching_latency_s", g.inchworm_switching_latency_s),
            ("ovipositor_switching_latency_s", g.ovipositor_switching_latency_s),
        ] {
            if !(v >= 0.0 && v < g.stroke_m / g.rate_m_per_s) {
                errs.push(format!("gait.{name} must be non-negative and shorter than a phase"));
            }
        }

        let v = &self.experiments.vibration;
        if !(v.sweep_start_hz > 0.0 && v.sweep_start_hz < v.sweep_end_hz) {
            errs.push("experiments.vibration.sweep_start_hz must be positive and below sweep_end_hz".into());
        }
        if v.sweep_steps < 2 {
            errs.push("experiments.vibration.sweep_steps must be at least 2".into());
        }
        positive(&mut errs, "experiments.vibration", "sweep_voltage_v", v.sweep_voltage_v);
        positive(&mut errs, "experiments.vibration", "voltage_max_v", v.voltage_max_v);
        positive(&mut errs, "experiments.vibration", "voltage_step_v", v.voltage_step_v);
        positive(&mut errs, "experiments.vibration", "measurement_limit_m", v.measurement_limit_m);

        let t = &self.experiments.tribometer;
        self.check_names(&mut errs, "experiments.tribometer.surfaces", &t.surfaces);
        for (name, x) in [
            ("slider_mass_kg", t.slider_mass_kg),
            ("normal_load_n", t.normal_load_n),
            ("distance_m", t.distance_m),
            ("speed_m_per_s", t.speed_m_per_s),
        ] {
            positive(&mut errs, "experiments.tribometer", name, x);
        }
        if !(t.voltage_v >= 0.0 && t.voltage_v.is_finite()) {
            errs.push("experiments.tribometer.voltage_v must be non-negative".into());
        }
        if !(0.0..0.9).contains(&t.discard_fraction) {
            errs.push("experiments.tribometer.discard_fraction must lie in [0, 0.9)".into());
        }

        let r = &self.experiments.ramp;
        self.check_names(&mut errs, "experiments.ramp.surfaces", &r.surfaces);
        for (name, x) in [
            ("slider_mass_kg", r.slider_mass_kg),
            ("normal_load_n", r.normal_load_n),
            ("distance_m", r.distance_m),
            ("speed_m_per_s", r.speed_m_per_s),
            ("max_voltage_v", r.max_voltage_v),
        ] {
            positive(&mut errs, "experiments.ramp", name, x);
        }
        if !(r.ramp_start_s >= 0.0 && r.ramp_end_s > r.ramp_start_s && r.ramp_end_s <= r.distance_m / r.speed_m_per_s) {
            errs.push("experiments.ramp needs 0 <= ramp_start_s < ramp_end_s <= distance_m / speed_m_per_s".into());
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    fn check_names(&self, errs: &mut Vec<String>, field: &str, names: &[String]) {
        if names.is_empty() {
            errs.push(format!("{field} must not be empty"));
        }
        for n in names {
            if !self.surfaces.contains_key(n) {
                errs.push(format!("{field} refers to unknown surface '{n}'"));
            }
        }
    }
}

fn positive(errs: &mut Vec<String>, section: &str, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{section}.{name} must be positive"));
    }
}

fn default_table() -> toml::Table {
    DEFAULT_SCENARIO.parse().expect("default scenario is valid TOML")
}

/// Fills keys missing from `user` with those of `defaults`, recursing into
/// tables present in both. Arrays and scalars are never merged.
fn fill_defaults(user: &mut toml::Table, defaults: &toml::Table, prefix: &str, applied: &mut Vec<String>) {
    for (key, dv) in defaults {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match user.get_mut(key) {
            None => {
                user.insert(key.clone(), dv.clone());
                applied.push(path);
            }
            Some(toml::Value::Table(ut)) => {
                if let toml::Value::Table(dt) = dv {
                    fill_defaults(ut, dt, &path, applied);
                }
            }
            Some(_) => {}
        }
    }
}

/// Expands `preset = "<name>"` surface entries against the built-in catalog.
fn expand_presets(user: &mut toml::Table, defaults: &toml::Table, applied: &mut Vec<String>) -> Result<()> {
    let Some(toml::Value::Table(surfaces)) = user.get_mut("surfaces") else {
        return Ok(());
    };
    let catalog = match defaults.get("surfaces") {
        Some(toml::Value::Table(t)) => t,
        _ => return Ok(()),
    };
    let mut errs = Vec::new();
    for (name, entry) in surfaces.iter_mut() {
        let toml::Value::Table(t) = entry else { continue };
        let Some(preset) = t.remove("preset") else { continue };
        match preset.as_str().and_then(|p| catalog.get(p).map(|v| (p, v))) {
            Some((p, toml::Value::Table(base))) => {
                for (k, v) in base {
                    if !t.contains_key(k) {
                        t.insert(k.clone(), v.clone());
                    }
                }
                applied.push(format!("surfaces.{name} (preset {p})"));
            }
            _ => errs.push(format!("surfaces.{name}.preset does not name a built-in surface")),
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(errs))
    }
}

/// Parses and validates scenario text. In strict mode unknown keys are an
/// error; otherwise they are reported as warnings.
pub fn parse_scenario(text: &str, strict: bool) -> Result<LoadedScenario> {
    parse_with_origin(text, strict, Path::new("<scenario>"))
}

fn parse_with_origin(text: &str, strict: bool, origin: &Path) -> Result<LoadedScenario> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    let defaults = default_table();
    let mut applied = Vec::new();
    expand_presets(&mut table, &defaults, &mut applied)?;
    fill_defaults(&mut table, &defaults, "", &mut applied);

    let mut unknown = Vec::new();
    let scenario: Scenario = serde_ignored::deserialize(toml::Value::Table(table), |p| unknown.push(p.to_string()))
        .map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
    if strict && !unknown.is_empty() {
        return Err(Error::Validation(unknown.iter().map(|k| format!("unknown key '{k}'")).collect()));
    }
    scenario.validate()?;
    Ok(LoadedScenario {
        scenario,
        defaults_applied: applied,
        warnings: unknown.iter().map(|k| format!("ignored unknown key '{k}'")).collect(),
    })
}

/// Reads, merges with defaults, and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>, strict: bool) -> Result<LoadedScenario> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    parse_with_origin(&text, strict, &path)
}
