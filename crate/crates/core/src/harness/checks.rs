//! The acceptance suite: runs every experiment, flattens the outcomes into
//! one metric map and compares it against the bands in the checks manifest.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::experiments::{gait_schedule, gait_world, Experiment};
use super::output::ExperimentOutput;
use super::scenario::Scenario;
use crate::dynamics::{simulate, SimConfig};
use crate::gait::{Direction, GaitKind};
use crate::oracle::mean_inverse_gap_quadrature;
use crate::squeezefilm::{air_film_mean_overpressure, friction_reduction, FrictionMeasurement};
use crate::{Error, Result};

pub const DEFAULT_MANIFEST: &str = include_str!("../../scenarios/checks.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: u32,
    pub name: String,
    pub metric: String,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(rename = "check")]
    pub checks: Vec<Check>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("checks manifest: {e}")))
    }

    pub fn default_manifest() -> Self {
        Self::parse(DEFAULT_MANIFEST).expect("embedded manifest parses")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub criterion: u32,
    pub name: String,
    pub metric: String,
    pub value: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub passed: bool,
}

impl CheckOutcome {
    /// One human-readable line: `PASS [3] name: metric = value in [lo, hi]`.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let value = self.value.map_or("missing".to_string(), |v| format!("{v:.6e}"));
        let lo = self.min.map_or("-inf".to_string(), |v| format!("{v}"));
        let hi = self.max.map_or("inf".to_string(), |v| format!("{v}"));
        format!("{verdict} [{}] {}: {} = {value} in [{lo}, {hi}]", self.criterion, self.name, self.metric)
    }
}

pub fn evaluate(check: &Check, metrics: &BTreeMap<String, f64>) -> CheckOutcome {
    let value = metrics.get(&check.metric).copied();
    let passed = value.is_some_and(|v| {
        !v.is_nan() && check.min.is_none_or(|lo| v >= lo) && check.max.is_none_or(|hi| v <= hi)
    });
    CheckOutcome {
        criterion: check.criterion,
        name: check.name.clone(),
        metric: check.metric.clone(),
        value,
        min: check.min,
        max: check.max,
        passed,
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub metrics: BTreeMap<String, f64>,
    pub outcomes: Vec<CheckOutcome>,
    pub outputs: Vec<ExperimentOutput>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    /// Whether every check of `criterion` passed (false if there are none).
    pub fn criterion_passed(&self, criterion: u32) -> bool {
        let mut any = false;
        for o in self.outcomes.iter().filter(|o| o.criterion == criterion) {
            if !o.passed {
                return false;
            }
            any = true;
        }
        any
    }
}

fn absorb(metrics: &mut BTreeMap<String, f64>, prefix: &str, out: &ExperimentOutput) {
    for key in out.summary.outcomes.keys() {
        if let Some(v) = out.summary.number(key) {
            metrics.insert(format!("{prefix}.{key}"), v);
        }
    }
}

fn locomotion_for(s: &Scenario, kind: GaitKind) -> Result<ExperimentOutput> {
    let mut variant = s.clone();
    variant.gait.kind = kind;
    let mut out = Experiment::Locomote.run(&variant)?;
    out.summary.experiment = format!("locomote_{}", gait_name(kind));
    Ok(out)
}

fn gait_name(kind: GaitKind) -> &'static str {
    match kind {
        GaitKind::Inchworm => "inchworm",
        GaitKind::Ovipositor => "ovipositor",
        GaitKind::Custom => "custom",
    }
}

/// Largest relative gap between the closed-form overpressure and the
/// periodic quadrature over ε = 0.1 … 0.9.
pub fn overpressure_oracle_error() -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let eps = i as f64 / 10.0;
        let closed = air_film_mean_overpressure(eps, 1.0)?;
        let quad = mean_inverse_gap_quadrature(eps, 512) - 1.0;
        worst = worst.max((closed - quad).abs() / quad.abs());
    }
    Ok(worst)
}

/// Relative change of per-cycle displacement when the timestep is halved.
pub fn dt_halving_change(s: &Scenario, kind: GaitKind) -> Result<f64> {
    let world = gait_world(s, kind)?;
    let sched = gait_schedule(s, kind, Direction::Forward)?;
    let half = SimConfig {
        timestep_s: s.sim.timestep_s / 2.0,
        ..s.sim
    };
    let (a, b) = rayon::join(|| simulate(&world, &sched, &s.sim), || simulate(&world, &sched, &half));
    let (a, b) = (a?, b?);
    let per_cycle = |r: &crate::dynamics::SimResult| r.net_displacement_m / r.cycles as f64;
    Ok((per_cycle(&a) - per_cycle(&b)).abs() / per_cycle(&b).abs())
}

/// Runs the tribometer twice on the scenario's noisiest surface and
/// reports whether every CSV trace came out byte-identical.
pub fn csv_determinism(s: &Scenario) -> Result<bool> {
    let mut variant = s.clone();
    let noisiest = s
        .experiments
        .tribometer
        .surfaces
        .iter()
        .max_by(|a, b| {
            let std = |n: &String| s.surfaces.get(n).map_or(0.0, |x| x.roughness_noise_std);
            std(a).total_cmp(&std(b))
        })
        .cloned();
    variant.experiments.tribometer.surfaces = noisiest.into_iter().collect();
    let (a, b) = rayon::join(|| Experiment::Tribometer.run(&variant), || Experiment::Tribometer.run(&variant));
    let (a, b) = (a?, b?);
    if a.traces.len() != b.traces.len() {
        return Ok(false);
    }
    for (x, y) in a.traces.iter().zip(&b.traces) {
        if x.to_csv()? != y.to_csv()? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn properties(s: &Scenario) -> Result<BTreeMap<String, f64>> {
    let mut m = BTreeMap::new();
    m.insert("properties.overpressure_max_rel_error".into(), overpressure_oracle_error()?);
    m.insert(
        "properties.reduction_example".into(),
        friction_reduction(FrictionMeasurement { mu_off: 0.4, mu_on: 0.1 })?,
    );
    m.insert(
        "properties.reduction_equal".into(),
        friction_reduction(FrictionMeasurement { mu_off: 0.3, mu_on: 0.3 })?,
    );
    let (dt, det) = rayon::join(|| dt_halving_change(s, GaitKind::Inchworm), || csv_determinism(s));
    m.insert("properties.dt_halving_rel_change".into(), dt?);
    m.insert("properties.csv_byte_identical".into(), if det? { 1.0 } else { 0.0 });
    Ok(m)
}

fn derived(s: &Scenario, m: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let mut d = BTreeMap::new();
    let get = |k: &str| m.get(k).copied().unwrap_or(f64::NAN);
    d.insert(
        "derived.sandpaper_240_minus_150".into(),
        get("tribometer.sandpaper_240.reduction") - get("tribometer.sandpaper_150.reduction"),
    );
    let dependent = s
        .experiments
        .tribometer
        .surfaces
        .iter()
        .filter(|n| get(&format!("tribometer.{n}.direction_independent")) != 1.0)
        .count();
    d.insert("derived.direction_dependent_surfaces".into(), dependent as f64);

    let mut worst = 0.0f64;
    let mut shape = 0usize;
    for n in &s.experiments.ramp.surfaces {
        for key in ["constant_before_ramp", "monotone_during_ramp"] {
            if get(&format!("ramp.{n}.{key}")) != 1.0 {
                shape += 1;
            }
        }
        let noisy = s.surfaces.get(n).is_none_or(|x| x.roughness_noise_std > 0.0);
        if noisy || !s.experiments.tribometer.surfaces.contains(n) {
            continue;
        }
        let sliding = get(&format!("tribometer.{n}.mu_on_forward"));
        let ramp = get(&format!("ramp.{n}.mu_final"));
        worst = worst.max((ramp - sliding).abs() / sliding);
    }
    d.insert("derived.ramp_vs_sliding_max_rel_diff".into(), worst);
    d.insert("derived.ramp_shape_violations".into(), shape as f64);

    let gaits = ["locomote.inchworm", "locomote.ovipositor"];
    let fold = |key: &str, init: f64, f: fn(f64, f64) -> f64| gaits.iter().map(|g| get(&format!("{g}.{key}"))).fold(init, f);
    d.insert("derived.min_step_dissipation_j".into(), fold("min_step_dissipation_j", f64::INFINITY, f64::min));
    d.insert("derived.max_force_ratio".into(), fold("max_force_ratio", 0.0, f64::max));
    d.insert(
        "derived.max_cycle_energy_residual".into(),
        fold("max_cycle_energy_residual", 0.0, f64::max),
    );
    d
}

/// Runs every experiment the manifest needs and evaluates each check.
pub fn run_checks(s: &Scenario, manifest: &Manifest) -> Result<SuiteReport> {
    type Job<'a> = Box<dyn Fn() -> Result<ExperimentOutput> + Send + Sync + 'a>;
    let jobs: Vec<(&str, Job)> = vec![
        ("modes", Box::new(|| Experiment::Modes.run(s))),
        ("vibration", Box::new(|| Experiment::Vibration.run(s))),
        ("tribometer", Box::new(|| Experiment::Tribometer.run(s))),
        ("ramp", Box::new(|| Experiment::Ramp.run(s))),
        ("locomote.inchworm", Box::new(|| locomotion_for(s, GaitKind::Inchworm))),
        ("locomote.ovipositor", Box::new(|| locomotion_for(s, GaitKind::Ovipositor))),
    ];
    use rayon::prelude::*;
    let (outputs, props) = rayon::join(
        || jobs.par_iter().map(|(p, job)| job().map(|o| (*p, o))).collect::<Result<Vec<_>>>(),
        || properties(s),
    );
    let outputs = outputs?;
    let mut metrics = props?;
    for (prefix, out) in &outputs {
        absorb(&mut metrics, prefix, out);
    }
    let extra = derived(s, &metrics);
    metrics.extend(extra);
    let outcomes = manifest.checks.iter().map(|c| evaluate(c, &metrics)).collect();
    Ok(SuiteReport {
        metrics,
        outcomes,
        outputs: outputs.into_iter().map(|(_, o)| o).collect(),
    })
}
