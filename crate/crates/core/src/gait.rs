//! Actuation and lubrication programs for the two crawling gaits.
//!
//! A schedule is a closed cycle of phases. During a phase every coupling's
//! commanded offset moves linearly from the previous phase's target to its
//! own, and each contact's lubrication is on or off. Contact order is fixed
//! by the world builders:
//!
//! - inchworm: `[rear, front]`
//! - ovipositor: `[fixed module A, moving module B]`

use serde::{Deserialize, Serialize};

use crate::dynamics::SimResult;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitKind {
    Inchworm,
    Ovipositor,
    /// Hand-built program with no reversal rule (tribometer strokes).
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitPhase {
    pub duration_s: f64,
    /// Commanded offset per coupling at the end of the phase.
    pub offset_targets_m: Vec<f64>,
    /// Lubrication flag per contact.
    pub lubrication: Vec<bool>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitSchedule {
    pub kind: GaitKind,
    /// Commanded offset per coupling at the start of every cycle.
    pub start_offsets_m: Vec<f64>,
    pub phases: Vec<GaitPhase>,
    /// Cycles that count towards the reported displacement.
    pub cycles: u32,
    /// Warm-up cycles run first and excluded from the displacement.
    #[serde(default)]
    pub settle_cycles: u32,
    /// Delay after a phase boundary before the new lubrication pattern
    /// takes effect.
    #[serde(default)]
    pub switching_latency_s: f64,
}

/// Instantaneous program output consumed by the integrator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Command {
    pub offsets: Vec<f64>,
    pub lubrication: Vec<bool>,
    /// Overrides every contact's drive voltage when set.
    pub voltage: Option<f64>,
    pub phase: usize,
}

/// Anything that can drive a simulation: commanded offsets, lubrication
/// and drive voltage as functions of time.
pub trait Program {
    fn duration(&self) -> f64;
    fn labels(&self) -> Vec<String>;
    fn command_at(&self, t: f64, out: &mut Command);
    /// Start of the measured window.
    fn measure_from(&self) -> f64 {
        0.0
    }
    /// Cycles inside the measured window.
    fn counted_cycles(&self) -> u32 {
        1
    }
    /// Actuator stroke per counted cycle.
    fn stroke_per_cycle(&self) -> f64;
    fn validate(&self) -> Result<()> {
        Ok(())
    }
}

impl GaitSchedule {
    pub fn cycle_duration(&self) -> f64 {
        self.phases.iter().map(|p| p.duration_s).sum()
    }

    pub fn total_duration(&self) -> f64 {
        self.cycle_duration() * f64::from(self.cycles + self.settle_cycles)
    }

    fn couplings(&self) -> usize {
        self.start_offsets_m.len()
    }

    fn contacts(&self) -> usize {
        self.phases.first().map_or(0, |p| p.lubrication.len())
    }

    /// Commanded travel per cycle summed over couplings.
    pub fn travel_per_cycle(&self) -> f64 {
        let mut prev = self.start_offsets_m.clone();
        let mut total = 0.0;
        for p in &self.phases {
            for (a, b) in prev.iter().zip(&p.offset_targets_m) {
                total += (b - a).abs();
            }
            prev.clone_from(&p.offset_targets_m);
        }
        total
    }

    /// Net commanded offset change over one cycle, per coupling.
    pub fn cycle_closure(&self) -> Vec<f64> {
        let n = self.couplings();
        let mut sum = vec![0.0; n];
        let mut prev = self.start_offsets_m.clone();
        for p in &self.phases {
            for i in 0..n {
                sum[i] += p.offset_targets_m[i] - prev[i];
            }
            prev.clone_from(&p.offset_targets_m);
        }
        sum
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.phases.is_empty() {
            errs.push("gait.phases must not be empty".to_string());
        }
        if self.cycles == 0 {
            errs.push("gait.cycles must be positive".to_string());
        }
        if !(self.switching_latency_s >= 0.0 && self.switching_latency_s.is_finite()) {
            errs.push("gait.switching_latency_s must be non-negative".to_string());
        }
        let (nc, nl) = (self.couplings(), self.contacts());
        for (i, p) in self.phases.iter().enumerate() {
            if !(p.duration_s > 0.0 && p.duration_s.is_finite()) {
                errs.push(format!("gait.phases[{i}].duration_s must be positive"));
            }
            if self.switching_latency_s >= p.duration_s {
                errs.push(format!("gait.phases[{i}] is shorter than the switching latency"));
            }
            if p.offset_targets_m.len() != nc || p.lubrication.len() != nl {
                errs.push(format!("gait.phases[{i}] has inconsistent coupling or contact counts"));
            }
            if p.offset_targets_m.iter().any(|v| !v.is_finite()) {
                errs.push(format!("gait.phases[{i}].offset_targets_m must be finite"));
            }
        }
        if self.start_offsets_m.iter().any(|v| !v.is_finite()) {
            errs.push("gait.start_offsets_m must be finite".to_string());
        }
        if errs.is_empty() && self.phases.last().is_some_and(|p| p.offset_targets_m != self.start_offsets_m) {
            errs.push("gait schedule is not a closed cycle".to_string());
        }
        if self.kind == GaitKind::Ovipositor && self.phases.iter().any(|p| p.lubrication.first() == Some(&true)) {
            errs.push("gait: the fixed ovipositor module must never be lubricated".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }

    /// Same program with every module left unlubricated.
    pub fn with_lubrication_disabled(&self) -> Self {
        let mut s = self.clone();
        for p in &mut s.phases {
            p.lubrication.iter_mut().for_each(|l| *l = false);
        }
        s
    }

    /// Same program with every commanded offset negated.
    pub fn mirrored(&self) -> Self {
        let mut s = self.clone();
        s.start_offsets_m.iter_mut().for_each(|o| *o = -*o);
        for p in &mut s.phases {
            p.offset_targets_m.iter_mut().for_each(|o| *o = -*o);
        }
        s
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let period = self.cycle_duration();
        let mut local = t - (t / period).floor() * period;
        for (i, p) in self.phases.iter().enumerate() {
            if local < p.duration_s || i + 1 == self.phases.len() {
                return (i, local.min(p.duration_s));
            }
            local -= p.duration_s;
        }
        unreachable!("schedule has phases")
    }
}

impl Program for GaitSchedule {
    fn duration(&self) -> f64 {
        self.total_duration()
    }

    fn validate(&self) -> Result<()> {
        GaitSchedule::validate(self)
    }

    fn labels(&self) -> Vec<String> {
        self.phases.iter().map(|p| p.label.clone()).collect()
    }

    fn command_at(&self, t: f64, out: &mut Command) {
        let (i, local) = self.locate(t);
        let n = self.phases.len();
        let phase = &self.phases[i];
        let prev = &self.phases[(i + n - 1) % n];
        let from = if i == 0 { &self.start_offsets_m } else { &prev.offset_targets_m };
        let s = local / phase.duration_s;
        out.offsets.clear();
        out.offsets.extend(
            from.iter()
                .zip(&phase.offset_targets_m)
                .map(|(a, b)| a + (b - a) * s),
        );
        let pattern = if local < self.switching_latency_s { prev } else { phase };
        out.lubrication.clone_from(&pattern.lubrication);
        out.voltage = None;
        out.phase = i;
    }

    fn measure_from(&self) -> f64 {
        self.cycle_duration() * f64::from(self.settle_cycles)
    }

    fn counted_cycles(&self) -> u32 {
        self.cycles
    }

    fn stroke_per_cycle(&self) -> f64 {
        self.travel_per_cycle() / 2.0
    }
}

fn check_stroke(stroke: f64, rate: f64, cycles: u32) -> Result<()> {
    if !(stroke > 0.0 && stroke.is_finite() && rate > 0.0 && rate.is_finite()) {
        return Err(Error::invalid(format!("stroke and rate must be positive, got {stroke} m and {rate} m/s")));
    }
    if cycles == 0 {
        return Err(Error::invalid("cycles must be positive"));
    }
    Ok(())
}

/// Two-phase inchworm cycle: extend with the front module lubricated, then
/// contract with the rear module lubricated. Backward swaps the modules.
pub fn inchworm_schedule(stroke: f64, rate: f64, cycles: u32, direction: Direction) -> Result<GaitSchedule> {
    check_stroke(stroke, rate, cycles)?;
    let d = stroke / rate;
    let s = GaitSchedule {
        kind: GaitKind::Inchworm,
        start_offsets_m: vec![0.0],
        phases: vec![
            GaitPhase {
                duration_s: d,
                offset_targets_m: vec![stroke],
                lubrication: vec![false, true],
                label: "extend".into(),
            },
            GaitPhase {
                duration_s: d,
                offset_targets_m: vec![0.0],
                lubrication: vec![true, false],
                label: "contract".into(),
            },
        ],
        cycles,
        settle_cycles: 0,
        switching_latency_s: 0.0,
    };
    Ok(match direction {
        Direction::Forward => s,
        Direction::Backward => reverse_schedule(&s)?,
    })
}

/// Two-phase ovipositor cycle on the moving slider: advance gripping the
/// rail, return lubricated while the fixed module holds it.
pub fn ovipositor_schedule(stroke: f64, rate: f64, cycles: u32, direction: Direction) -> Result<GaitSchedule> {
    check_stroke(stroke, rate, cycles)?;
    let d = stroke / rate;
    let s = GaitSchedule {
        kind: GaitKind::Ovipositor,
        start_offsets_m: vec![0.0],
        phases: vec![
            GaitPhase {
                duration_s: d,
                offset_targets_m: vec![stroke],
                lubrication: vec![false, false],
                label: "advance".into(),
            },
            GaitPhase {
                duration_s: d,
                offset_targets_m: vec![0.0],
                lubrication: vec![false, true],
                label: "return".into(),
            },
        ],
        cycles,
        settle_cycles: 0,
        switching_latency_s: 0.0,
    };
    Ok(match direction {
        Direction::Forward => s,
        Direction::Backward => reverse_schedule(&s)?,
    })
}

/// Reverses the direction of travel by permuting lubrication only.
///
/// Inchworm swaps the two modules' columns; ovipositor inverts the moving
/// module's column. Commanded offsets are untouched.
pub fn reverse_schedule(s: &GaitSchedule) -> Result<GaitSchedule> {
    let mut r = s.clone();
    match s.kind {
        GaitKind::Inchworm => {
            for p in &mut r.phases {
                if p.lubrication.len() != 2 {
                    return Err(Error::Config("inchworm schedules need exactly two contacts".into()));
                }
                p.lubrication.swap(0, 1);
            }
        }
        GaitKind::Ovipositor => {
            for p in &mut r.phases {
                if p.lubrication.len() != 2 {
                    return Err(Error::Config("ovipositor schedules need exactly two contacts".into()));
                }
                p.lubrication[1] = !p.lubrication[1];
            }
        }
        GaitKind::Custom => return Err(Error::Config("custom schedules have no reversal rule".into())),
    }
    Ok(r)
}

/// `|net displacement| / (stroke per cycle × cycles)`.
pub fn locomotion_efficiency(result: &SimResult) -> Result<f64> {
    let ideal = result.stroke_per_cycle_m * f64::from(result.cycles);
    if !(ideal > 0.0) {
        return Err(Error::UndefinedMeasurement("locomotion efficiency needs a non-zero stroke".into()));
    }
    Ok(result.net_displacement_m.abs() / ideal)
}
