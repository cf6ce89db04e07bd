//! Fixed-step 1-D multibody integrator with Karnopp stick-slip contacts.
//!
//! Bodies move on a line. Contacts press a body against the ground or
//! against another body (a free rail). Couplings are spring-dampers that
//! track a commanded offset `u`: the force on body `b` (and the reaction on
//! `a`, or on the world) is `k·(u − (x_b − x_a)) + c·(u̇ − (v_b − v_a))`.
//!
//! Each step is semi-implicit Euler. Contacts inside the stick window are
//! first assumed stuck and the constraint forces that keep them stuck are
//! solved together; any that would exceed `μ_s·W` is released into kinetic
//! slip (worst ratio first), and slipping contacts whose relative velocity
//! would change sign within the step are caught as sticking. Positions are
//! displacements from the initial configuration.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::gait::{Command, Program};
use crate::resonator::{drive_response, ResonatorModel};
use crate::squeezefilm::{film_load_fraction, FilmModel};
use crate::surfaces::Surface;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub mass_kg: f64,
    pub position_m: f64,
    pub velocity_m_per_s: f64,
}

impl Body {
    pub fn at_rest(mass_kg: f64) -> Self {
        Self {
            mass_kg,
            position_m: 0.0,
            velocity_m_per_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Counterpart {
    Ground,
    Body(usize),
}

/// A friction-control module pressed against a counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct Contact {
    pub body: usize,
    pub counterpart: Counterpart,
    pub surface: Surface,
    pub film: FilmModel,
    pub normal_load_n: f64,
    pub voltage_v: f64,
    pub active: bool,
    pub resonator: ResonatorModel,
}

impl Contact {
    /// Commanded resonator amplitude for the current drive state.
    pub fn amplitude(&self, voltage: f64, active: bool) -> f64 {
        if active && voltage > 0.0 {
            drive_response(&self.resonator, voltage, self.resonator.resonance_frequency_hz)
        } else {
            0.0
        }
    }

    /// Fraction of the normal load carried by the squeeze film.
    pub fn film_fraction(&self, voltage: f64, active: bool) -> Result<f64> {
        let a = self.amplitude(voltage, active);
        if a == 0.0 {
            return Ok(0.0);
        }
        film_load_fraction(
            &self.surface.spec,
            &self.film,
            a,
            self.resonator.angular_frequency(),
            self.normal_load_n,
        )
    }

    pub fn effective_load(&self) -> f64 {
        self.surface.effective_normal_load(self.normal_load_n)
    }
}

/// Friction bounds of one contact at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionLimits {
    pub mu_static: f64,
    pub mu_kinetic: f64,
    pub normal_load_n: f64,
}

impl FrictionLimits {
    pub fn static_limit(&self) -> f64 {
        self.mu_static * self.normal_load_n
    }

    pub fn kinetic_force(&self) -> f64 {
        self.mu_kinetic * self.normal_load_n
    }
}

/// Karnopp friction on a single contact.
///
/// Inside the stick window the contact cancels `applied` exactly if it can;
/// otherwise it slides with `μ_k·W` against the motion (or against the
/// applied force when the velocity is inside the window).
pub fn friction_force(limits: &FrictionLimits, relative_velocity: f64, applied_tangential: f64, config: &SimConfig) -> f64 {
    let window = relative_velocity.abs() < config.stick_velocity_threshold_m_per_s;
    if window && applied_tangential.abs() <= limits.static_limit() {
        return -applied_tangential;
    }
    let dir = if window { applied_tangential } else { relative_velocity };
    -limits.kinetic_force() * sign(dir)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Spring-damper actuator between body `a` (or the world) and body `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    /// `None` anchors the coupling to the world.
    pub a: Option<usize>,
    pub b: usize,
    pub stiffness_n_per_m: f64,
    pub damping_n_s_per_m: f64,
}

impl Coupling {
    /// Critical damping for the pair's reduced mass.
    pub fn critically_damped(a: Option<usize>, b: usize, stiffness: f64, bodies: &[Body]) -> Self {
        let mb = bodies[b].mass_kg;
        let m = match a {
            Some(i) => bodies[i].mass_kg * mb / (bodies[i].mass_kg + mb),
            None => mb,
        };
        Self {
            a,
            b,
            stiffness_n_per_m: stiffness,
            damping_n_s_per_m: 2.0 * (stiffness * m).sqrt(),
        }
    }
}

/// Which displacement a run reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reporter {
    Centroid(Vec<usize>),
    Body(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub bodies: Vec<Body>,
    pub contacts: Vec<Contact>,
    pub couplings: Vec<Coupling>,
    pub reporter: Reporter,
}

impl World {
    pub fn validate(&self) -> Result<()> {
        let n = self.bodies.len();
        let mut errs = Vec::new();
        for (i, b) in self.bodies.iter().enumerate() {
            if !(b.mass_kg > 0.0 && b.mass_kg.is_finite()) {
                errs.push(format!("world.bodies[{i}].mass_kg must be positive"));
            }
            if !(b.position_m.is_finite() && b.velocity_m_per_s.is_finite()) {
                errs.push(format!("world.bodies[{i}] state must be finite"));
            }
        }
        for (i, c) in self.contacts.iter().enumerate() {
            if c.body >= n || matches!(c.counterpart, Counterpart::Body(j) if j >= n || j == c.body) {
                errs.push(format!("world.contacts[{i}] refers to a missing body"));
            }
            if !(c.normal_load_n > 0.0 && c.normal_load_n.is_finite()) {
                errs.push(format!("world.contacts[{i}].normal_load_n must be positive"));
            }
            if !(c.voltage_v >= 0.0 && c.voltage_v.is_finite()) {
                errs.push(format!("world.contacts[{i}].voltage_v must be non-negative"));
            }
        }
        for (i, c) in self.couplings.iter().enumerate() {
            if c.b >= n || c.a.is_some_and(|a| a >= n || a == c.b) {
                errs.push(format!("world.couplings[{i}] refers to a missing body"));
            }
            if !(c.stiffness_n_per_m >= 0.0 && c.damping_n_s_per_m >= 0.0) {
                errs.push(format!("world.couplings[{i}] stiffness and damping must be non-negative"));
            }
        }
        match &self.reporter {
            Reporter::Centroid(ids) if ids.is_empty() || ids.iter().any(|&i| i >= n) => {
                errs.push("world.reporter refers to a missing body".into());
            }
            Reporter::Body(i) if *i >= n => errs.push("world.reporter refers to a missing body".into()),
            _ => {}
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    pub fn reported_position(&self) -> f64 {
        match &self.reporter {
            Reporter::Centroid(ids) => ids.iter().map(|&i| self.bodies[i].position_m).sum::<f64>() / ids.len() as f64,
            Reporter::Body(i) => self.bodies[*i].position_m,
        }
    }

    fn counterpart_state(&self, c: &Contact) -> (f64, f64) {
        match c.counterpart {
            Counterpart::Ground => (0.0, 0.0),
            Counterpart::Body(j) => (self.bodies[j].position_m, self.bodies[j].velocity_m_per_s),
        }
    }

    pub fn relative_position(&self, contact: usize) -> f64 {
        let c = &self.contacts[contact];
        self.bodies[c.body].position_m - self.counterpart_state(c).0
    }

    pub fn relative_velocity(&self, contact: usize) -> f64 {
        let c = &self.contacts[contact];
        self.bodies[c.body].velocity_m_per_s - self.counterpart_state(c).1
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.bodies.iter().map(|b| 0.5 * b.mass_kg * b.velocity_m_per_s * b.velocity_m_per_s).sum()
    }

    fn coupling_extension(&self, c: &Coupling) -> (f64, f64) {
        let (xa, va) = c.a.map_or((0.0, 0.0), |i| (self.bodies[i].position_m, self.bodies[i].velocity_m_per_s));
        let b = &self.bodies[c.b];
        (b.position_m - xa, b.velocity_m_per_s - va)
    }

    /// Elastic energy stored in the couplings at commanded `offsets`.
    pub fn spring_energy(&self, offsets: &[f64]) -> f64 {
        self.couplings
            .iter()
            .zip(offsets)
            .map(|(c, u)| {
                let e = u - self.coupling_extension(c).0;
                0.5 * c.stiffness_n_per_m * e * e
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub timestep_s: f64,
    /// Overrides the program duration when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    pub stick_velocity_threshold_m_per_s: f64,
    pub sample_interval_s: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            timestep_s: 1e-5,
            duration_s: None,
            stick_velocity_threshold_m_per_s: 1e-5,
            sample_interval_s: 1e-3,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.timestep_s > 0.0 && self.timestep_s.is_finite()) {
            errs.push("sim.timestep_s must be positive".to_string());
        }
        if !(self.stick_velocity_threshold_m_per_s > 0.0 && self.stick_velocity_threshold_m_per_s.is_finite()) {
            errs.push("sim.stick_velocity_threshold_m_per_s must be positive".to_string());
        }
        if !(self.sample_interval_s >= self.timestep_s && self.sample_interval_s.is_finite()) {
            errs.push("sim.sample_interval_s must be at least one timestep".to_string());
        }
        if let Some(d) = self.duration_s {
            if !(d > 0.0 && d.is_finite()) {
                errs.push("sim.duration_s must be positive".to_string());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// Cumulative energy flows.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyLedger {
    pub actuator_work_j: f64,
    pub kinetic_j: f64,
    pub spring_j: f64,
    pub damper_dissipation_j: f64,
    pub friction_dissipation_j: f64,
}

impl EnergyLedger {
    /// Flows between two snapshots; `kinetic_j` and `spring_j` become changes.
    pub fn since(&self, earlier: &EnergyLedger) -> EnergyLedger {
        EnergyLedger {
            actuator_work_j: self.actuator_work_j - earlier.actuator_work_j,
            kinetic_j: self.kinetic_j - earlier.kinetic_j,
            spring_j: self.spring_j - earlier.spring_j,
            damper_dissipation_j: self.damper_dissipation_j - earlier.damper_dissipation_j,
            friction_dissipation_j: self.friction_dissipation_j - earlier.friction_dissipation_j,
        }
    }

    /// Actuator work not accounted for by storage and dissipation.
    pub fn residual(&self) -> f64 {
        self.actuator_work_j - self.kinetic_j - self.spring_j - self.damper_dissipation_j - self.friction_dissipation_j
    }

    /// [`residual`](Self::residual) relative to the actuator work.
    pub fn relative_residual(&self) -> f64 {
        self.residual().abs() / self.actuator_work_j.abs().max(f64::MIN_POSITIVE)
    }
}

/// Sampled traces and run outcomes.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SimResult {
    pub time_s: Vec<f64>,
    pub phase: Vec<usize>,
    pub phase_labels: Vec<String>,
    /// `[body][sample]`
    pub position_m: Vec<Vec<f64>>,
    pub velocity_m_per_s: Vec<Vec<f64>>,
    /// `[coupling][sample]`
    pub commanded_offset_m: Vec<Vec<f64>>,
    /// `[contact][sample]`, force on the contact's body.
    pub friction_n: Vec<Vec<f64>>,
    pub mu_eff: Vec<Vec<f64>>,
    pub amplitude_m: Vec<Vec<f64>>,
    pub voltage_v: Vec<Vec<f64>>,
    pub reported_m: Vec<f64>,
    pub net_displacement_m: f64,
    pub stroke_total_m: f64,
    pub stroke_per_cycle_m: f64,
    pub cycles: u32,
    /// Friction plus damper dissipation.
    pub dissipated_energy_j: f64,
    pub energy: EnergyLedger,
    /// Energy flows of each counted cycle.
    pub cycle_energy: Vec<EnergyLedger>,
    /// Largest `|F|/(μ_s·W)` seen on any contact.
    pub max_force_ratio: f64,
    /// Smallest single-step friction dissipation.
    pub min_step_dissipation_j: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Stick,
    Slip(f64),
}

#[derive(Debug, Clone, Copy)]
struct DriveCache {
    voltage: f64,
    active: bool,
    fraction: f64,
    amplitude: f64,
}

#[derive(Debug, Clone, Copy)]
struct NoiseCache {
    segment: i64,
    factor: f64,
}

/// Per-step contact solution.
#[derive(Debug, Clone, Default)]
pub struct StepReport {
    /// Friction force on each contact's body.
    pub friction: Vec<f64>,
    pub limits: Vec<Option<FrictionLimits>>,
    pub amplitude: Vec<f64>,
    pub voltage: Vec<f64>,
    pub friction_dissipation_j: f64,
    pub damper_dissipation_j: f64,
    pub actuator_work_j: f64,
}

/// Advances a [`World`] one step at a time, reusing scratch buffers.
pub struct Stepper {
    drive: Vec<Option<DriveCache>>,
    noise: Vec<Option<NoiseCache>>,
    forces: Vec<f64>,
    modes: Vec<Mode>,
    released: Vec<bool>,
    caught: Vec<bool>,
    lambda: Vec<f64>,
    limits: Vec<FrictionLimits>,
    inv_mass: Vec<f64>,
    v_new: Vec<f64>,
    stuck: Vec<usize>,
    report: StepReport,
}

impl Stepper {
    pub fn new(world: &World) -> Self {
        let m = world.contacts.len();
        Self {
            drive: vec![None; m],
            noise: vec![None; m],
            forces: vec![0.0; world.bodies.len()],
            modes: vec![Mode::Stick; m],
            released: vec![false; m],
            caught: vec![false; m],
            lambda: vec![0.0; m],
            limits: Vec::with_capacity(m),
            inv_mass: world.bodies.iter().map(|b| 1.0 / b.mass_kg).collect(),
            v_new: vec![0.0; world.bodies.len()],
            stuck: Vec::with_capacity(m),
            report: StepReport {
                friction: vec![0.0; m],
                limits: vec![None; m],
                amplitude: vec![0.0; m],
                voltage: vec![0.0; m],
                ..StepReport::default()
            },
        }
    }

    fn limits(&mut self, world: &World, k: usize, command: &Command) -> Result<FrictionLimits> {
        let c = &world.contacts[k];
        let voltage = command.voltage.unwrap_or(c.voltage_v);
        let active = command.lubrication.get(k).copied().unwrap_or(c.active);
        let drive = match self.drive[k] {
            Some(d) if d.voltage == voltage && d.active == active => d,
            _ => {
                let d = DriveCache {
                    voltage,
                    active,
                    fraction: c.film_fraction(voltage, active)?,
                    amplitude: c.amplitude(voltage, active),
                };
                self.drive[k] = Some(d);
                d
            }
        };
        self.report.amplitude[k] = drive.amplitude;
        self.report.voltage[k] = if active { voltage } else { 0.0 };
        let noise = if c.surface.spec.roughness_noise_std == 0.0 {
            1.0
        } else {
            let seg = c.surface.segment_index(world.relative_position(k));
            match self.noise[k] {
                Some(n) if n.segment == seg => n.factor,
                _ => {
                    let factor = c.surface.noise_factor(seg);
                    self.noise[k] = Some(NoiseCache { segment: seg, factor });
                    factor
                }
            }
        };
        let scale = noise * (1.0 - drive.fraction);
        Ok(FrictionLimits {
            mu_static: c.surface.spec.mu_static * scale,
            mu_kinetic: c.surface.spec.mu_kinetic * scale,
            normal_load_n: c.effective_load(),
        })
    }

    /// One semi-implicit Euler step from `t` under `command`; `next_offsets`
    /// are the commanded offsets at `t + dt`.
    pub fn step(
        &mut self,
        world: &mut World,
        config: &SimConfig,
        t: f64,
        command: &Command,
        next_offsets: &[f64],
    ) -> Result<&StepReport> {
        let dt = config.timestep_s;
        let thr = config.stick_velocity_threshold_m_per_s;
        let nb = world.bodies.len();
        let nc = world.contacts.len();

        self.report.actuator_work_j = 0.0;
        self.report.damper_dissipation_j = 0.0;
        self.forces.iter_mut().for_each(|f| *f = 0.0);
        for (j, cp) in world.couplings.iter().enumerate() {
            let (d, dd) = world.coupling_extension(cp);
            let u = command.offsets[j];
            let du = (next_offsets[j] - u) / dt;
            let edot = du - dd;
            let f = cp.stiffness_n_per_m * (u - d) + cp.damping_n_s_per_m * edot;
            self.forces[cp.b] += f;
            if let Some(a) = cp.a {
                self.forces[a] -= f;
            }
            self.report.actuator_work_j += f * (next_offsets[j] - u);
            self.report.damper_dissipation_j += cp.damping_n_s_per_m * edot * edot * dt;
        }

        let mut limits = std::mem::take(&mut self.limits);
        limits.clear();
        for k in 0..nc {
            limits.push(self.limits(world, k, command)?);
            let vr = world.relative_velocity(k);
            self.modes[k] = if vr.abs() < thr { Mode::Stick } else { Mode::Slip(sign(vr)) };
            self.released[k] = false;
            self.caught[k] = false;
        }

        let inv_mass = std::mem::take(&mut self.inv_mass);
        let mut v_new = std::mem::take(&mut self.v_new);
        let mut stuck = std::mem::take(&mut self.stuck);
        loop {
            // Velocities with slip friction only.
            v_new[..nb].copy_from_slice(&self.forces[..nb]);
            for (k, c) in world.contacts.iter().enumerate() {
                if let Mode::Slip(s) = self.modes[k] {
                    let f = -limits[k].kinetic_force() * s;
                    v_new[c.body] += f;
                    if let Counterpart::Body(j) = c.counterpart {
                        v_new[j] -= f;
                    }
                }
            }
            for i in 0..nb {
                v_new[i] = world.bodies[i].velocity_m_per_s + dt * v_new[i] * inv_mass[i];
            }

            stuck.clear();
            stuck.extend((0..nc).filter(|&k| self.modes[k] == Mode::Stick));
            self.lambda.iter_mut().for_each(|l| *l = 0.0);
            if let [k] = stuck[..] {
                let ck = &world.contacts[k];
                let rel = v_new[ck.body] - counterpart_velocity(ck, &v_new);
                self.lambda[k] = -rel / (dt * coupling_term(ck, ck, &inv_mass));
            } else if !stuck.is_empty() {
                let n = stuck.len();
                let mut a = DMatrix::<f64>::zeros(n, n);
                let mut rhs = DVector::<f64>::zeros(n);
                for (r, &k) in stuck.iter().enumerate() {
                    let ck = &world.contacts[k];
                    rhs[r] = -(v_new[ck.body] - counterpart_velocity(ck, &v_new));
                    for (q, &l) in stuck.iter().enumerate() {
                        a[(r, q)] = dt * coupling_term(ck, &world.contacts[l], &inv_mass);
                    }
                }
                let sol = match a.clone().lu().solve(&rhs) {
                    Some(x) => x,
                    None => match a.svd(true, true).solve(&rhs, 1e-14) {
                        Ok(x) => x,
                        Err(e) => {
                            return Err(Error::Diverged {
                                time: t,
                                reason: format!("stick constraints are degenerate: {e}"),
                            })
                        }
                    },
                };
                for (r, &k) in stuck.iter().enumerate() {
                    self.lambda[k] = sol[r];
                }
            }

            let mut worst: Option<(usize, f64)> = None;
            for &k in &stuck {
                let ratio = self.lambda[k].abs() / limits[k].static_limit();
                if self.lambda[k].abs() > limits[k].static_limit() && worst.is_none_or(|(_, r)| ratio > r) {
                    worst = Some((k, ratio));
                }
            }
            if let Some((k, _)) = worst {
                self.modes[k] = Mode::Slip(-sign(self.lambda[k]));
                self.released[k] = true;
                continue;
            }

            for (k, c) in world.contacts.iter().enumerate() {
                if self.modes[k] == Mode::Stick {
                    let l = self.lambda[k];
                    v_new[c.body] += dt * l * inv_mass[c.body];
                    if let Counterpart::Body(j) = c.counterpart {
                        v_new[j] -= dt * l * inv_mass[j];
                    }
                }
            }
            let crossing = (0..nc).find(|&k| match self.modes[k] {
                Mode::Slip(s) if !self.released[k] && !self.caught[k] => {
                    let c = &world.contacts[k];
                    (v_new[c.body] - counterpart_velocity(c, &v_new)) * s < 0.0
                }
                _ => false,
            });
            match crossing {
                Some(k) => {
                    self.modes[k] = Mode::Stick;
                    self.caught[k] = true;
                }
                None => break,
            }
        }

        // Stuck contacts move exactly with their counterparts: ground first,
        // then body-on-body chains.
        for _ in 0..=nc {
            for (k, c) in world.contacts.iter().enumerate() {
                if self.modes[k] == Mode::Stick {
                    v_new[c.body] = counterpart_velocity(c, &v_new);
                }
            }
        }

        let mut dissipation = 0.0;
        for (k, c) in world.contacts.iter().enumerate() {
            let f = match self.modes[k] {
                Mode::Stick => self.lambda[k],
                Mode::Slip(s) => -limits[k].kinetic_force() * s,
            };
            self.report.friction[k] = f;
            self.report.limits[k] = Some(limits[k]);
            dissipation -= f * (v_new[c.body] - counterpart_velocity(c, &v_new)) * dt;
        }
        self.report.friction_dissipation_j = dissipation;

        let mut finite = true;
        for (b, v) in world.bodies.iter_mut().zip(&v_new) {
            b.velocity_m_per_s = *v;
            b.position_m += dt * v;
            finite &= b.position_m.is_finite() && b.velocity_m_per_s.is_finite();
        }
        self.limits = limits;
        self.inv_mass = inv_mass;
        self.v_new = v_new;
        self.stuck = stuck;
        if !finite {
            return Err(Error::Diverged {
                time: t + dt,
                reason: "non-finite body state".into(),
            });
        }
        Ok(&self.report)
    }
}

fn counterpart_velocity(c: &Contact, v: &[f64]) -> f64 {
    match c.counterpart {
        Counterpart::Ground => 0.0,
        Counterpart::Body(j) => v[j],
    }
}

/// `J_k · M⁻¹ · J_lᵀ` for two contact constraints.
fn coupling_term(k: &Contact, l: &Contact, inv_mass: &[f64]) -> f64 {
    let rows = |c: &Contact| -> [(usize, f64); 2] {
        match c.counterpart {
            Counterpart::Ground => [(c.body, 1.0), (usize::MAX, 0.0)],
            Counterpart::Body(j) => [(c.body, 1.0), (j, -1.0)],
        }
    };
    let mut s = 0.0;
    for (i, a) in rows(k) {
        for (j, b) in rows(l) {
            if i == j && i != usize::MAX {
                s += a * b * inv_mass[i];
            }
        }
    }
    s
}

/// Runs `program` on `world` and records sampled traces.
pub fn simulate(world: &World, program: &dyn Program, config: &SimConfig) -> Result<SimResult> {
    world.validate()?;
    config.validate()?;
    program.validate()?;
    let mut world = world.clone();
    let dt = config.timestep_s;
    let duration = config.duration_s.unwrap_or_else(|| program.duration());
    let steps = (duration / dt).round() as u64;
    let sample_every = ((config.sample_interval_s / dt).round() as u64).max(1);
    let measure_step = (program.measure_from() / dt).round() as u64;
    let counted = program.counted_cycles();
    let cycle_steps = if counted > 0 { (steps - measure_step.min(steps)) / u64::from(counted) } else { 0 };

    let nb = world.bodies.len();
    let nc = world.contacts.len();
    let nk = world.couplings.len();
    let mut out = SimResult {
        phase_labels: program.labels(),
        position_m: vec![Vec::new(); nb],
        velocity_m_per_s: vec![Vec::new(); nb],
        commanded_offset_m: vec![Vec::new(); nk],
        friction_n: vec![Vec::new(); nc],
        mu_eff: vec![Vec::new(); nc],
        amplitude_m: vec![Vec::new(); nc],
        voltage_v: vec![Vec::new(); nc],
        stroke_per_cycle_m: program.stroke_per_cycle(),
        cycles: counted,
        min_step_dissipation_j: f64::INFINITY,
        steps,
        ..SimResult::default()
    };

    // Integer step rates divide exactly, so sample times print cleanly.
    let rate = (1.0 / dt).round();
    let time_of = |k: u64| if (rate * dt - 1.0).abs() < 1e-12 { k as f64 / rate } else { k as f64 * dt };

    let mut stepper = Stepper::new(&world);
    let mut cmd = Command::default();
    let mut next = Command::default();
    program.command_at(0.0, &mut cmd);
    if cmd.offsets.len() != nk {
        return Err(Error::Config(format!(
            "program drives {} couplings but the world has {nk}",
            cmd.offsets.len()
        )));
    }
    let mut ledger = EnergyLedger {
        kinetic_j: world.kinetic_energy(),
        spring_j: world.spring_energy(&cmd.offsets),
        ..EnergyLedger::default()
    };
    let mut start_position = world.reported_position();
    let mut cycle_start = ledger;

    for n in 0..steps {
        let (t, t_next) = (time_of(n), time_of(n + 1));
        program.command_at(t_next, &mut next);
        if n == measure_step {
            start_position = world.reported_position();
            cycle_start = ledger;
        }
        let report = stepper.step(&mut world, config, t, &cmd, &next.offsets)?;

        ledger.actuator_work_j += report.actuator_work_j;
        ledger.damper_dissipation_j += report.damper_dissipation_j;
        ledger.friction_dissipation_j += report.friction_dissipation_j;
        out.min_step_dissipation_j = out.min_step_dissipation_j.min(report.friction_dissipation_j);
        for (f, l) in report.friction.iter().zip(&report.limits) {
            if let Some(l) = l {
                let limit = l.static_limit();
                let ratio = if limit > 0.0 { f.abs() / limit } else if *f == 0.0 { 0.0 } else { f64::INFINITY };
                out.max_force_ratio = out.max_force_ratio.max(ratio);
            }
        }
        if n >= measure_step {
            out.stroke_total_m += cmd.offsets.iter().zip(&next.offsets).map(|(a, b)| (b - a).abs()).sum::<f64>();
        }

        if (n + 1) % sample_every == 0 || n + 1 == steps {
            record(&mut out, &world, t_next, &cmd, report);
        }
        std::mem::swap(&mut cmd, &mut next);
        ledger.kinetic_j = world.kinetic_energy();
        ledger.spring_j = world.spring_energy(&cmd.offsets);
        if cycle_steps > 0 && n + 1 > measure_step && (n + 1 - measure_step).is_multiple_of(cycle_steps) {
            out.cycle_energy.push(ledger.since(&cycle_start));
            cycle_start = ledger;
        }
    }
    if measure_step >= steps {
        start_position = world.reported_position();
    }
    out.net_displacement_m = world.reported_position() - start_position;
    out.energy = ledger;
    out.dissipated_energy_j = ledger.friction_dissipation_j + ledger.damper_dissipation_j;
    if !out.min_step_dissipation_j.is_finite() {
        out.min_step_dissipation_j = 0.0;
    }
    Ok(out)
}

fn record(out: &mut SimResult, world: &World, t: f64, cmd: &Command, report: &StepReport) {
    out.time_s.push(t);
    out.phase.push(cmd.phase);
    for (i, b) in world.bodies.iter().enumerate() {
        out.position_m[i].push(b.position_m);
        out.velocity_m_per_s[i].push(b.velocity_m_per_s);
    }
    for (j, u) in cmd.offsets.iter().enumerate() {
        out.commanded_offset_m[j].push(*u);
    }
    for k in 0..world.contacts.len() {
        out.friction_n[k].push(report.friction[k]);
        out.mu_eff[k].push(report.limits[k].map_or(0.0, |l| l.mu_kinetic));
        out.amplitude_m[k].push(report.amplitude[k]);
        out.voltage_v[k].push(report.voltage[k]);
    }
    out.reported_m.push(world.reported_position());
}
