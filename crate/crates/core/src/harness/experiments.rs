//! The virtual experiments: modal analysis, vibrometry, steady sliding,
//! voltage ramp and locomotion.

use std::time::Instant;

use rayon::prelude::*;

use super::output::{ExperimentOutput, Plot, RunSummary, Table};
use super::scenario::{Module, Scenario};
use crate::dynamics::{simulate, Body, Contact, Counterpart, Coupling, Reporter, SimResult, World};
use crate::gait::{
    inchworm_schedule, locomotion_efficiency, ovipositor_schedule, reverse_schedule, Command, Direction, GaitKind,
    GaitPhase, GaitSchedule, Program,
};
use crate::oracle::fd_beam_frequencies;
use crate::resonator::{beam_free_free_modes, drive_response, frequency_sweep, ring_inplane_modes, ring_thickness_for_frequency};
use crate::squeezefilm::{friction_reduction, squeeze_number, FilmModel, FrictionMeasurement};
use crate::surfaces::Surface;
use crate::{Error, Result};

/// Experiment identifiers, also the output sub-directory names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    Modes,
    Vibration,
    Tribometer,
    Ramp,
    Locomote,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Modes,
        Experiment::Vibration,
        Experiment::Tribometer,
        Experiment::Ramp,
        Experiment::Locomote,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Modes => "modes",
            Experiment::Vibration => "vibration",
            Experiment::Tribometer => "tribometer",
            Experiment::Ramp => "ramp",
            Experiment::Locomote => "locomote",
        }
    }

    pub fn run(self, s: &Scenario) -> Result<ExperimentOutput> {
        let start = Instant::now();
        let mut out = match self {
            Experiment::Modes => run_modes(s),
            Experiment::Vibration => run_vibration_characterization(s),
            Experiment::Tribometer => run_tribometer_sliding(s),
            Experiment::Ramp => run_voltage_ramp(s),
            Experiment::Locomote => run_locomotion(s),
        }?;
        out.summary.scenario_hash = s.hash()?;
        out.summary.seed = s.seed;
        out.summary.wall_clock_s = start.elapsed().as_secs_f64();
        Ok(out)
    }
}

/// Runs several experiments concurrently, preserving order.
pub fn run_experiments(s: &Scenario, which: &[Experiment]) -> Result<Vec<ExperimentOutput>> {
    which.par_iter().map(|e| e.run(s)).collect()
}

fn film_with_area(film: &FilmModel, area: f64) -> FilmModel {
    FilmModel {
        air: film.air.with_contact_area(area),
        liquid: film.liquid.with_contact_area(area),
    }
}

fn coupling(s: &Scenario, a: Option<usize>, b: usize, bodies: &[Body]) -> Coupling {
    let mut c = Coupling::critically_damped(a, b, s.world.coupling_stiffness_n_per_m, bodies);
    if let Some(d) = s.world.coupling_damping_n_s_per_m {
        c.damping_n_s_per_m = d;
    }
    c
}

/// Two cylindrical modules on the substrate joined by the extensor.
/// Contacts are `[rear, front]`.
pub fn inchworm_world(s: &Scenario) -> Result<World> {
    let w = &s.world;
    let surface = Surface::new(*s.surface(&w.substrate)?, s.seed);
    let film = film_with_area(&s.film, w.inchworm_contact_area_m2);
    let contact = |body| Contact {
        body,
        counterpart: Counterpart::Ground,
        surface: surface.clone(),
        film,
        normal_load_n: w.inchworm_normal_load_n,
        voltage_v: w.drive_voltage_v,
        active: false,
        resonator: s.resonator.cylindrical,
    };
    let bodies = vec![Body::at_rest(w.module_mass_kg), Body::at_rest(w.module_mass_kg)];
    let couplings = vec![coupling(s, Some(0), 1, &bodies)];
    Ok(World {
        bodies,
        contacts: vec![contact(0), contact(1)],
        couplings,
        reporter: Reporter::Centroid(vec![0, 1]),
    })
}

/// Free rail (body 0) held by the fixed module and driven by the moving
/// module (body 1) on the actuator. Contacts are `[fixed, moving]`.
pub fn ovipositor_world(s: &Scenario) -> Result<World> {
    let w = &s.world;
    let surface = Surface::new(*s.surface(&w.substrate)?, s.seed);
    let film = film_with_area(&s.film, w.ovipositor_contact_area_m2);
    let contact = |body, counterpart, load| Contact {
        body,
        counterpart,
        surface: surface.clone(),
        film,
        normal_load_n: load,
        voltage_v: w.drive_voltage_v,
        active: false,
        resonator: s.resonator.flat,
    };
    let bodies = vec![Body::at_rest(w.rail_mass_kg), Body::at_rest(w.module_mass_kg)];
    let couplings = vec![coupling(s, None, 1, &bodies)];
    Ok(World {
        bodies,
        contacts: vec![
            contact(0, Counterpart::Ground, w.ovipositor_fixed_load_n),
            contact(1, Counterpart::Body(0), w.ovipositor_moving_load_n),
        ],
        couplings,
        reporter: Reporter::Body(0),
    })
}

/// A single module dragged over `surface` by a stiff actuator.
pub fn slider_world(s: &Scenario, module: Module, surface: &str, mass: f64, load: f64, voltage: f64) -> Result<World> {
    let spec = *s.surface(surface)?;
    let bodies = vec![Body::at_rest(mass)];
    let couplings = vec![coupling(s, None, 0, &bodies)];
    Ok(World {
        bodies,
        contacts: vec![Contact {
            body: 0,
            counterpart: Counterpart::Ground,
            surface: Surface::new(spec, s.seed),
            film: s.film,
            normal_load_n: load,
            voltage_v: voltage,
            active: false,
            resonator: *s.resonator.get(module),
        }],
        couplings,
        reporter: Reporter::Body(0),
    })
}

/// The scenario's gait with its latency and warm-up cycles applied.
pub fn gait_schedule(s: &Scenario, kind: GaitKind, direction: Direction) -> Result<GaitSchedule> {
    let g = &s.gait;
    let mut sched = match kind {
        GaitKind::Ovipositor => ovipositor_schedule(g.stroke_m, g.rate_m_per_s, g.cycles, direction)?,
        _ => inchworm_schedule(g.stroke_m, g.rate_m_per_s, g.cycles, direction)?,
    };
    sched.settle_cycles = g.settle_cycles;
    sched.switching_latency_s = g.switching_latency(kind);
    sched.validate()?;
    Ok(sched)
}

pub fn gait_world(s: &Scenario, kind: GaitKind) -> Result<World> {
    match kind {
        GaitKind::Ovipositor => ovipositor_world(s),
        _ => inchworm_world(s),
    }
}

fn body_names(kind: GaitKind) -> Vec<&'static str> {
    match kind {
        GaitKind::Inchworm => vec!["rear", "front"],
        GaitKind::Ovipositor => vec!["rail", "moving"],
        GaitKind::Custom => vec!["slider"],
    }
}

fn contact_names(kind: GaitKind) -> Vec<&'static str> {
    match kind {
        GaitKind::Inchworm => vec!["rear", "front"],
        GaitKind::Ovipositor => vec!["fixed", "moving"],
        GaitKind::Custom => vec!["slider"],
    }
}

/// The canonical trace table of a run, restricted to `rows`.
pub fn trace_table(name: &str, r: &SimResult, kind: GaitKind, rows: &[usize]) -> Table {
    let pick = |v: &[f64]| rows.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let mut t = Table::new(name)
        .float("t_s", pick(&r.time_s))
        .text("phase", rows.iter().map(|&i| r.phase_labels[r.phase[i]].clone()).collect());
    for (i, b) in body_names(kind).iter().enumerate() {
        t = t.float(format!("x_{b}_m"), pick(&r.position_m[i]));
        t = t.float(format!("v_{b}_m_per_s"), pick(&r.velocity_m_per_s[i]));
    }
    for (k, c) in contact_names(kind).iter().enumerate() {
        t = t.float(format!("f_fric_{c}_n"), pick(&r.friction_n[k]));
        t = t.float(format!("mu_eff_{c}"), pick(&r.mu_eff[k]));
        t = t.float(format!("amplitude_{c}_m"), pick(&r.amplitude_m[k]));
        t = t.float(format!("voltage_{c}_v"), pick(&r.voltage_v[k]));
    }
    t.float("reported_m", pick(&r.reported_m))
}

fn all_rows(r: &SimResult) -> Vec<usize> {
    (0..r.time_s.len()).collect()
}

/// Free-free beam and ring modal analysis with the finite-difference check.
pub fn run_modes(s: &Scenario) -> Result<ExperimentOutput> {
    let mut summary = RunSummary::new("modes");
    let beam = beam_free_free_modes(&s.geometry.flat, &s.material, 3)?;
    let ring = ring_inplane_modes(&s.geometry.ring, &s.material, 4)?;
    let fd = fd_beam_frequencies(&s.geometry.flat, &s.material, 2000, 3);

    let mut structure = Vec::new();
    let mut mode = Vec::new();
    let mut freq = Vec::new();
    let mut reference = Vec::new();
    let mut nodes = Vec::new();
    let mut antinodes = Vec::new();
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(";");
    for (m, f) in beam.modes.iter().zip(&fd) {
        structure.push("beam".to_string());
        mode.push(m.mode_index as f64);
        freq.push(m.frequency_hz);
        reference.push(*f);
        nodes.push(join(&m.node_positions));
        antinodes.push(join(&m.antinode_positions));
        summary.set(format!("beam.mode{}_hz", m.mode_index), m.frequency_hz);
        summary.set(format!("beam.mode{}_fd_hz", m.mode_index), *f);
    }
    for m in &ring.modes {
        structure.push("ring".to_string());
        mode.push(m.mode_index as f64);
        freq.push(m.frequency_hz);
        reference.push(f64::NAN);
        nodes.push(join(&m.node_positions));
        antinodes.push(join(&m.antinode_positions));
        summary.set(format!("ring.n{}_hz", m.mode_index), m.frequency_hz);
    }
    let m3 = &beam.modes[2];
    summary.set("beam.mode3_fd_rel_error", (m3.frequency_hz / fd[2] - 1.0).abs());
    for n in 1..=3 {
        summary.set(format!("beam.beta{n}_l"), crate::resonator::free_free_root(n)?);
    }
    let g = &s.geometry.ring;
    let target = 22_700.0;
    match ring_thickness_for_frequency(target, g.outer_diameter_m, g.axial_width_m, &s.material, 2, 0.5e-3, 1.2e-3) {
        Ok(t) => {
            let mut geom = *g;
            geom.radial_thickness_m = t;
            summary.set("ring.thickness_for_22700_hz_m", t);
            summary.set("ring.inverse_frequency_hz", crate::resonator::ring_mode_frequency(&geom, &s.material, 2));
        }
        Err(e) => summary.warnings.push(format!("ring thickness search: {e}")),
    }
    summary.warnings.extend(beam.warnings.iter().chain(&ring.warnings).cloned());

    let table = Table::new("modes")
        .text("structure", structure)
        .float("mode", mode)
        .float("frequency_hz", freq)
        .float("fd_frequency_hz", reference)
        .text("nodes", nodes)
        .text("antinodes", antinodes);
    Ok(ExperimentOutput {
        summary,
        traces: vec![table],
        plots: Vec::new(),
    })
}

/// Least-squares line `y = a + b·x`.
pub fn affine_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Frequency sweep at fixed voltage and voltage sweep at resonance for
/// both modules.
pub fn run_vibration_characterization(s: &Scenario) -> Result<ExperimentOutput> {
    let v = &s.experiments.vibration;
    let mut summary = RunSummary::new("vibration");
    let mut traces = Vec::new();
    let mut plots = Vec::new();
    let limit = v.measurement_limit_m;
    let report = |a: f64| if v.clip_to_limit { a.min(limit) } else { a };
    let clipped = |a: f64| if v.clip_to_limit && a > limit { 1.0 } else { 0.0 };
    for (module, name) in [(Module::Flat, "flat"), (Module::Cylindrical, "cylindrical")] {
        let model = s.resonator.get(module);
        let sweep = frequency_sweep(model, v.sweep_voltage_v, v.sweep_start_hz, v.sweep_end_hz, v.sweep_steps)?;
        let peak = sweep.iter().fold((0.0, f64::NEG_INFINITY), |best, &(f, a)| if a > best.1 { (f, a) } else { best });
        let f: Vec<f64> = sweep.iter().map(|p| p.0).collect();
        let a: Vec<f64> = sweep.iter().map(|p| p.1).collect();
        traces.push(
            Table::new(format!("{name}_frequency_sweep"))
                .float("frequency_hz", f)
                .float("amplitude_m", a.clone())
                .float("reported_amplitude_m", a.iter().map(|&x| report(x)).collect())
                .float("clipped", a.iter().map(|&x| clipped(x)).collect()),
        );

        let steps = (v.voltage_max_v / v.voltage_step_v).round() as usize;
        let volts: Vec<f64> = (0..=steps).map(|i| (i as f64 * v.voltage_step_v).min(v.voltage_max_v)).collect();
        let amps: Vec<f64> = volts.iter().map(|&u| drive_response(model, u, model.resonance_frequency_hz)).collect();
        let (intercept, gain) = affine_fit(&volts, &amps);
        traces.push(
            Table::new(format!("{name}_voltage_sweep"))
                .float("voltage_v", volts.clone())
                .float("amplitude_m", amps.clone())
                .float("reported_amplitude_m", amps.iter().map(|&x| report(x)).collect())
                .float("clipped", amps.iter().map(|&x| clipped(x)).collect()),
        );
        summary.set(format!("{name}.peak_frequency_hz"), peak.0);
        summary.set(format!("{name}.peak_amplitude_m"), peak.1);
        summary.set(format!("{name}.gain_m_per_v"), gain);
        summary.set(format!("{name}.intercept_m"), intercept);
        summary.set(
            format!("{name}.clipped_points"),
            amps.iter().chain(sweep.iter().map(|p| &p.1)).filter(|&&x| clipped(x) > 0.0).count(),
        );
        plots.push(Plot {
            name: format!("{name}_frequency_response"),
            title: format!("{name} module frequency response"),
            table: format!("{name}_frequency_sweep"),
            x: "frequency_hz".into(),
            y: vec!["amplitude_m".into(), "reported_amplitude_m".into()],
        });
        plots.push(Plot {
            name: format!("{name}_amplitude_vs_voltage"),
            title: format!("{name} module amplitude vs voltage"),
            table: format!("{name}_voltage_sweep"),
            x: "voltage_v".into(),
            y: vec!["amplitude_m".into()],
        });
    }
    Ok(ExperimentOutput { summary, traces, plots })
}

/// One forward stroke then one backward stroke of the slider.
pub fn stroke_schedule(distance: f64, speed: f64, lubricated: bool) -> GaitSchedule {
    let d = distance / speed;
    GaitSchedule {
        kind: GaitKind::Custom,
        start_offsets_m: vec![0.0],
        phases: vec![
            GaitPhase {
                duration_s: d,
                offset_targets_m: vec![distance],
                lubrication: vec![lubricated],
                label: "forward".into(),
            },
            GaitPhase {
                duration_s: d,
                offset_targets_m: vec![0.0],
                lubrication: vec![lubricated],
                label: "backward".into(),
            },
        ],
        cycles: 1,
        settle_cycles: 0,
        switching_latency_s: 0.0,
    }
}

/// Mean `|F|/W_eff` over the samples of phase `phase`, skipping the leading
/// `discard` fraction.
pub fn mean_mu(r: &SimResult, phase: usize, load: f64, discard: f64) -> f64 {
    let rows = phase_rows(r, phase);
    let skip = (rows.len() as f64 * discard).ceil() as usize;
    let kept = &rows[skip.min(rows.len())..];
    kept.iter().map(|&i| r.friction_n[0][i].abs()).sum::<f64>() / kept.len().max(1) as f64 / load
}

fn phase_rows(r: &SimResult, phase: usize) -> Vec<usize> {
    (0..r.time_s.len()).filter(|&i| r.phase[i] == phase).collect()
}

struct SlideOutcome {
    name: String,
    mu: [[f64; 2]; 2],
    tables: Vec<Table>,
}

fn slide_surface(s: &Scenario, name: &str) -> Result<SlideOutcome> {
    let t = &s.experiments.tribometer;
    let world = slider_world(s, t.module, name, t.slider_mass_kg, t.normal_load_n, t.voltage_v)?;
    let load = world.contacts[0].effective_load();
    let runs: Vec<Result<SimResult>> = [false, true]
        .par_iter()
        .map(|&on| simulate(&world, &stroke_schedule(t.distance_m, t.speed_m_per_s, on), &s.sim))
        .collect();
    let mut mu = [[0.0; 2]; 2];
    let mut tables = Vec::new();
    for (k, run) in runs.into_iter().enumerate() {
        let r = run?;
        let state = if k == 0 { "off" } else { "on" };
        for (p, dir) in ["forward", "backward"].iter().enumerate() {
            mu[k][p] = mean_mu(&r, p, load, t.discard_fraction);
            tables.push(trace_table(&format!("{name}_{dir}_{state}"), &r, GaitKind::Custom, &phase_rows(&r, p)));
        }
    }
    Ok(SlideOutcome {
        name: name.to_string(),
        mu,
        tables,
    })
}

/// Forward/backward sliding without and with continuous vibration.
pub fn run_tribometer_sliding(s: &Scenario) -> Result<ExperimentOutput> {
    let t = &s.experiments.tribometer;
    let mut summary = RunSummary::new("tribometer");
    let length = match t.module {
        Module::Flat => s.geometry.flat.width_m,
        Module::Cylindrical => s.geometry.ring.axial_width_m,
    };
    let sigma = squeeze_number(&s.film.air, s.resonator.get(t.module).angular_frequency(), length);
    summary.set("air_squeeze_number", sigma);
    if sigma < 10.0 {
        summary.warnings.push(format!("squeeze number {sigma:.3} < 10: the compressible film limit is questionable"));
    }
    let outcomes: Vec<SlideOutcome> = t.surfaces.par_iter().map(|n| slide_surface(s, n)).collect::<Result<_>>()?;
    let mut traces = Vec::new();
    let mut plots = Vec::new();
    for o in outcomes {
        let n = &o.name;
        let [off, on] = o.mu;
        let r_f = friction_reduction(FrictionMeasurement { mu_off: off[0], mu_on: on[0] })?;
        let r_b = friction_reduction(FrictionMeasurement { mu_off: off[1], mu_on: on[1] })?;
        let r = friction_reduction(FrictionMeasurement {
            mu_off: off[0] + off[1],
            mu_on: on[0] + on[1],
        })?;
        summary.set(format!("{n}.mu_off_forward"), off[0]);
        summary.set(format!("{n}.mu_off_backward"), off[1]);
        summary.set(format!("{n}.mu_on_forward"), on[0]);
        summary.set(format!("{n}.mu_on_backward"), on[1]);
        summary.set(format!("{n}.reduction_forward"), r_f);
        summary.set(format!("{n}.reduction_backward"), r_b);
        summary.set(format!("{n}.reduction"), r);
        let independent = (r_f - r_b).abs() <= 0.05 * r.abs().max(f64::MIN_POSITIVE) || r_f == r_b;
        summary.set(format!("{n}.direction_independent"), independent);
        if !independent {
            summary.warnings.push(format!("{n}: reduction differs between directions ({r_f:.4} vs {r_b:.4})"));
        }
        for dir in ["forward", "backward"] {
            plots.push(Plot {
                name: format!("{n}_{dir}_friction"),
                title: format!("{n} {dir}: friction force, off and on"),
                table: format!("{n}_{dir}_on"),
                x: "t_s".into(),
                y: vec!["f_fric_slider_n".into()],
            });
        }
        traces.extend(o.tables);
    }
    Ok(ExperimentOutput { summary, traces, plots })
}

/// Constant-speed slide with the drive voltage ramped linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct RampProgram {
    pub distance_m: f64,
    pub speed_m_per_s: f64,
    pub ramp_start_s: f64,
    pub ramp_end_s: f64,
    pub max_voltage_v: f64,
}

impl RampProgram {
    pub fn voltage_at(&self, t: f64) -> f64 {
        if t < self.ramp_start_s {
            0.0
        } else if t >= self.ramp_end_s {
            self.max_voltage_v
        } else {
            self.max_voltage_v * (t - self.ramp_start_s) / (self.ramp_end_s - self.ramp_start_s)
        }
    }
}

impl Program for RampProgram {
    fn duration(&self) -> f64 {
        self.distance_m / self.speed_m_per_s
    }

    fn labels(&self) -> Vec<String> {
        vec!["off".into(), "ramp".into(), "hold".into()]
    }

    fn command_at(&self, t: f64, out: &mut Command) {
        out.offsets.clear();
        out.offsets.push((self.speed_m_per_s * t).min(self.distance_m));
        out.lubrication.clear();
        out.lubrication.push(true);
        out.voltage = Some(self.voltage_at(t));
        out.phase = if t < self.ramp_start_s {
            0
        } else if t < self.ramp_end_s {
            1
        } else {
            2
        };
    }

    fn stroke_per_cycle(&self) -> f64 {
        self.distance_m
    }

    fn validate(&self) -> Result<()> {
        let ok = self.distance_m > 0.0
            && self.speed_m_per_s > 0.0
            && self.ramp_start_s >= 0.0
            && self.ramp_end_s > self.ramp_start_s
            && self.max_voltage_v >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid voltage ramp: {self:?}")))
        }
    }
}

/// Points of the reduction-versus-voltage curve sampled on an even grid of
/// the ramp, plus the derived trend measures.
#[derive(Debug, Clone, PartialEq)]
pub struct RampCurve {
    pub voltage_v: Vec<f64>,
    pub reduction: Vec<f64>,
    pub onset_voltage_v: f64,
    pub concave_above_onset: bool,
    pub half_voltage_ratio: f64,
    pub increasing: bool,
}

pub const RAMP_GRID_INTERVALS: usize = 20;

/// Builds the trend measures from sampled `(t, V, μ)` columns.
pub fn ramp_curve(time: &[f64], voltage: &[f64], mu: &[f64], program: &RampProgram, mu_before: f64) -> RampCurve {
    let n = RAMP_GRID_INTERVALS;
    let mut vs = Vec::with_capacity(n + 1);
    let mut rs = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let target = program.ramp_start_s + (program.ramp_end_s - program.ramp_start_s) * i as f64 / n as f64;
        let idx = time.partition_point(|&t| t < target - 1e-9).min(time.len() - 1);
        vs.push(voltage[idx]);
        rs.push(1.0 - mu[idx] / mu_before);
    }
    let last = rs[n];
    let onset_idx = rs.iter().position(|&r| r >= 0.1 * last).unwrap_or(n);
    let slopes: Vec<f64> = (0..n).map(|i| (rs[i + 1] - rs[i]) / (vs[i + 1] - vs[i])).collect();
    let tol = 1e-9 * slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let concave = (onset_idx..n.saturating_sub(1)).all(|i| slopes[i + 1] <= slopes[i] + tol);
    let half = rs[n / 2] / last;
    RampCurve {
        voltage_v: vs,
        reduction: rs,
        onset_voltage_v: program.max_voltage_v * onset_idx as f64 / n as f64,
        concave_above_onset: concave,
        half_voltage_ratio: half,
        increasing: slopes.iter().all(|&s| s > 0.0),
    }
}

/// Voltage-ramp friction modulation on each configured surface.
pub fn run_voltage_ramp(s: &Scenario) -> Result<ExperimentOutput> {
    let spec = &s.experiments.ramp;
    let program = RampProgram {
        distance_m: spec.distance_m,
        speed_m_per_s: spec.speed_m_per_s,
        ramp_start_s: spec.ramp_start_s,
        ramp_end_s: spec.ramp_end_s,
        max_voltage_v: spec.max_voltage_v,
    };
    let runs: Vec<(String, World, SimResult)> = spec
        .surfaces
        .par_iter()
        .map(|name| {
            let world = slider_world(s, spec.module, name, spec.slider_mass_kg, spec.normal_load_n, spec.max_voltage_v)?;
            let r = simulate(&world, &program, &s.sim)?;
            Ok((name.clone(), world, r))
        })
        .collect::<Result<_>>()?;

    let mut summary = RunSummary::new("ramp");
    let mut traces = Vec::new();
    let mut plots = Vec::new();
    for (name, world, r) in runs {
        let c = &world.contacts[0];
        let load = c.effective_load();
        let mu_k = c.surface.spec.mu_kinetic;
        let voltage = &r.voltage_v[0];
        let mut mu_model = Vec::with_capacity(voltage.len());
        for &v in voltage {
            mu_model.push(mu_k * (1.0 - c.film_fraction(v, true)?));
        }
        let before: Vec<f64> = (0..r.time_s.len())
            .filter(|&i| r.time_s[i] < spec.ramp_start_s)
            .map(|i| mu_model[i])
            .collect();
        let mu_before = before.first().copied().unwrap_or(mu_k);
        let constant_before = before.iter().all(|&m| m == mu_before);
        let ramp_rows: Vec<usize> = (0..r.time_s.len())
            .filter(|&i| r.time_s[i] >= spec.ramp_start_s && r.time_s[i] <= spec.ramp_end_s)
            .collect();
        let monotone = ramp_rows.windows(2).all(|w| mu_model[w[1]] <= mu_model[w[0]] + 1e-12);
        let curve = ramp_curve(&r.time_s, voltage, &mu_model, &program, mu_before);
        let mu_final = *mu_model.last().unwrap_or(&mu_before);

        summary.set(format!("{name}.mu_before_ramp"), mu_before);
        summary.set(format!("{name}.mu_final"), mu_final);
        summary.set(format!("{name}.reduction_final"), 1.0 - mu_final / mu_before);
        summary.set(format!("{name}.onset_voltage_v"), curve.onset_voltage_v);
        summary.set(format!("{name}.concave_above_onset"), curve.concave_above_onset);
        summary.set(format!("{name}.half_voltage_reduction_ratio"), curve.half_voltage_ratio);
        summary.set(format!("{name}.reduction_increasing"), curve.increasing);
        summary.set(format!("{name}.constant_before_ramp"), constant_before);
        summary.set(format!("{name}.monotone_during_ramp"), monotone);

        let measured: Vec<f64> = r.friction_n[0].iter().map(|f| f.abs() / load).collect();
        let table = Table::new(format!("{name}_ramp"))
            .float("t_s", r.time_s.clone())
            .text("phase", r.phase.iter().map(|&p| r.phase_labels[p].clone()).collect())
            .float("x_slider_m", r.position_m[0].clone())
            .float("voltage_v", voltage.clone())
            .float("amplitude_m", r.amplitude_m[0].clone())
            .float("mu_eff", mu_model)
            .float("mu_sampled", r.mu_eff[0].clone())
            .float("mu_measured", measured)
            .float("f_fric_slider_n", r.friction_n[0].clone());
        traces.push(table);
        traces.push(
            Table::new(format!("{name}_reduction_curve"))
                .float("voltage_v", curve.voltage_v)
                .float("reduction", curve.reduction),
        );
        plots.push(Plot {
            name: format!("{name}_mu_vs_voltage"),
            title: format!("{name}: effective friction vs drive voltage"),
            table: format!("{name}_ramp"),
            x: "voltage_v".into(),
            y: vec!["mu_eff".into()],
        });
    }
    Ok(ExperimentOutput { summary, traces, plots })
}

/// Outcomes of one gait: lubricated, unlubricated and reversed runs.
#[derive(Debug, Clone)]
pub struct LocomotionRuns {
    pub active: SimResult,
    pub baseline: SimResult,
    pub reversed: SimResult,
}

pub fn locomotion_runs(s: &Scenario, kind: GaitKind, direction: Direction) -> Result<LocomotionRuns> {
    let world = gait_world(s, kind)?;
    let sched = gait_schedule(s, kind, direction)?;
    let programs = [sched.clone(), sched.with_lubrication_disabled(), reverse_schedule(&sched)?];
    let mut runs: Vec<SimResult> = programs
        .par_iter()
        .map(|p| simulate(&world, p, &s.sim))
        .collect::<Result<_>>()?;
    let reversed = runs.pop().expect("three runs");
    let baseline = runs.pop().expect("three runs");
    let active = runs.pop().expect("three runs");
    Ok(LocomotionRuns { active, baseline, reversed })
}

/// Baseline, lubricated and reversed runs of the scenario's gait.
pub fn run_locomotion(s: &Scenario) -> Result<ExperimentOutput> {
    let kind = s.gait.kind;
    let runs = locomotion_runs(s, kind, s.gait.direction)?;
    let mut summary = RunSummary::new("locomote");
    let active = locomotion_efficiency(&runs.active)?;
    let baseline = locomotion_efficiency(&runs.baseline)?;
    let net = runs.active.net_displacement_m;
    let rev = runs.reversed.net_displacement_m;
    let worst_energy = runs
        .active
        .cycle_energy
        .iter()
        .chain(&runs.reversed.cycle_energy)
        .map(|e| e.relative_residual())
        .fold(0.0, f64::max);
    summary.set("gait", kind);
    summary.set("direction", s.gait.direction);
    summary.set("cycles", s.gait.cycles);
    summary.set("efficiency_active", active);
    summary.set("efficiency_baseline", baseline);
    summary.set("baseline_to_active_ratio", baseline / active);
    summary.set("net_displacement_m", net);
    summary.set("baseline_net_displacement_m", runs.baseline.net_displacement_m);
    summary.set("reversed_net_displacement_m", rev);
    summary.set("reversal_mismatch", (net + rev).abs() / net.abs().max(f64::MIN_POSITIVE));
    summary.set("max_cycle_energy_residual", worst_energy);
    summary.set("dissipated_energy_j", runs.active.dissipated_energy_j);
    summary.set("max_force_ratio", runs.active.max_force_ratio.max(runs.reversed.max_force_ratio));
    summary.set(
        "min_step_dissipation_j",
        runs.active.min_step_dissipation_j.min(runs.reversed.min_step_dissipation_j),
    );
    if active > 1.0 {
        summary.warnings.push(format!("efficiency {active:.4} exceeds 1"));
    }
    let traces = vec![
        trace_table("active", &runs.active, kind, &all_rows(&runs.active)),
        trace_table("baseline", &runs.baseline, kind, &all_rows(&runs.baseline)),
        trace_table("reversed", &runs.reversed, kind, &all_rows(&runs.reversed)),
    ];
    let plots = ["active", "baseline", "reversed"]
        .iter()
        .map(|n| Plot {
            name: format!("{n}_position"),
            title: format!("{n} run: reported position"),
            table: n.to_string(),
            x: "t_s".into(),
            y: vec!["reported_m".into()],
        })
        .collect();
    Ok(ExperimentOutput { summary, traces, plots })
}
