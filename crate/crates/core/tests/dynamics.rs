use approx::assert_relative_eq;
use ultralube_core::dynamics::{
    friction_force, simulate, Body, Counterpart, Coupling, FrictionLimits, Reporter, SimConfig, Stepper, World,
};
use ultralube_core::gait::{locomotion_efficiency, Command, Direction, GaitKind};
use ultralube_core::harness::experiments::{gait_schedule, gait_world, inchworm_world, slider_world, stroke_schedule};
use ultralube_core::harness::scenario::{Module, Scenario};
use ultralube_core::squeezefilm::FilmKind;
use ultralube_core::surfaces::{SurfaceKind, SurfaceSpec};
use ultralube_core::Error;

fn limits(mu_s: f64, mu_k: f64, w: f64) -> FrictionLimits {
    FrictionLimits {
        mu_static: mu_s,
        mu_kinetic: mu_k,
        normal_load_n: w,
    }
}

#[test]
fn friction_force_examples() {
    let cfg = SimConfig::default();
    assert_eq!(friction_force(&limits(0.4, 0.3, 1.0), 0.0, 0.0, &cfg), 0.0);
    assert_eq!(friction_force(&limits(0.4, 0.3, 1.0), 0.0, 0.2, &cfg), -0.2);
    assert_eq!(friction_force(&limits(0.4, 0.3, 1.0), 1e-3, 0.0, &cfg), -0.3);
    assert_eq!(friction_force(&limits(0.4, 0.3, 1.0), -1e-3, 5.0, &cfg), 0.3);
    // Above the static limit inside the window: slides against the push.
    assert_eq!(friction_force(&limits(0.4, 0.3, 1.0), 0.0, 0.5, &cfg), -0.3);
}

fn free_world(v: f64) -> World {
    World {
        bodies: vec![Body {
            mass_kg: 0.1,
            position_m: 0.0,
            velocity_m_per_s: v,
        }],
        contacts: Vec::new(),
        couplings: Vec::new(),
        reporter: Reporter::Body(0),
    }
}

#[test]
fn free_body_moves_uniformly() {
    let mut world = free_world(0.25);
    let cfg = SimConfig::default();
    let mut stepper = Stepper::new(&world);
    let cmd = Command::default();
    for n in 0..1000 {
        stepper.step(&mut world, &cfg, n as f64 * cfg.timestep_s, &cmd, &[]).unwrap();
    }
    assert_relative_eq!(world.bodies[0].position_m, 0.25 * 1000.0 * cfg.timestep_s, max_relative = 1e-12);
    assert_eq!(world.bodies[0].velocity_m_per_s, 0.25);
}

#[test]
fn held_body_never_moves() {
    let s = Scenario::default_scenario();
    let mut world = slider_world(&s, Module::Flat, "pla_dry", 0.12, 1.0, 0.0).unwrap();
    let cfg = SimConfig::default();
    let mut stepper = Stepper::new(&world);
    // 0.1 N pull, below the 0.35 N static limit.
    let cmd = Command {
        offsets: vec![1e-6],
        lubrication: vec![false],
        voltage: None,
        phase: 0,
    };
    for n in 0..100_000 {
        stepper.step(&mut world, &cfg, n as f64 * cfg.timestep_s, &cmd, &[1e-6]).unwrap();
    }
    assert_eq!(world.bodies[0].position_m, 0.0);
    assert_eq!(world.bodies[0].velocity_m_per_s, 0.0);
}

#[test]
fn stuck_contact_snaps_to_its_counterpart() {
    let s = Scenario::default_scenario();
    let mut world = gait_world(&s, GaitKind::Ovipositor).unwrap();
    world.bodies[0].velocity_m_per_s = 3e-6;
    world.bodies[1].velocity_m_per_s = 4e-6;
    let cfg = SimConfig::default();
    let mut stepper = Stepper::new(&world);
    let cmd = Command {
        offsets: vec![0.0],
        lubrication: vec![false, false],
        voltage: None,
        phase: 0,
    };
    stepper.step(&mut world, &cfg, 0.0, &cmd, &[0.0]).unwrap();
    assert_eq!(world.bodies[0].velocity_m_per_s, 0.0);
    assert_eq!(world.bodies[1].velocity_m_per_s, 0.0);
}

#[test]
fn mirrored_schedule_negates_displacement() {
    let s = Scenario::default_scenario();
    for kind in [GaitKind::Inchworm, GaitKind::Ovipositor] {
        let world = gait_world(&s, kind).unwrap();
        let sched = gait_schedule(&s, kind, Direction::Forward).unwrap();
        let a = simulate(&world, &sched, &s.sim).unwrap();
        let b = simulate(&world, &sched.mirrored(), &s.sim).unwrap();
        let rel = (a.net_displacement_m + b.net_displacement_m).abs() / a.net_displacement_m.abs();
        assert!(rel <= 1e-9, "{kind:?}: {rel}");
    }
}

#[test]
fn ovipositor_converges_under_dt_halving() {
    let s = Scenario::default_scenario();
    let world = gait_world(&s, GaitKind::Ovipositor).unwrap();
    let sched = gait_schedule(&s, GaitKind::Ovipositor, Direction::Forward).unwrap();
    let half = SimConfig {
        timestep_s: 5e-6,
        ..s.sim
    };
    let a = simulate(&world, &sched, &s.sim).unwrap();
    let b = simulate(&world, &sched, &half).unwrap();
    let rel = (a.net_displacement_m - b.net_displacement_m).abs() / b.net_displacement_m.abs();
    assert!(rel < 0.005, "{rel}");
}

#[test]
fn energy_closes_every_cycle() {
    let s = Scenario::default_scenario();
    for kind in [GaitKind::Inchworm, GaitKind::Ovipositor] {
        let world = gait_world(&s, kind).unwrap();
        let sched = gait_schedule(&s, kind, Direction::Backward).unwrap();
        let r = simulate(&world, &sched, &s.sim).unwrap();
        assert_eq!(r.cycle_energy.len(), 2);
        for e in &r.cycle_energy {
            assert!(e.relative_residual() <= 0.01, "{kind:?}: {e:?}");
            assert!(e.friction_dissipation_j > 0.0);
        }
        assert!(r.dissipated_energy_j >= 0.0);
        assert!(r.min_step_dissipation_j >= 0.0);
        assert!(r.max_force_ratio <= 1.0 + 1e-12);
    }
}

#[test]
fn unlubricated_gait_stays_put() {
    let s = Scenario::default_scenario();
    for kind in [GaitKind::Inchworm, GaitKind::Ovipositor] {
        let world = gait_world(&s, kind).unwrap();
        let sched = gait_schedule(&s, kind, Direction::Forward).unwrap().with_lubrication_disabled();
        let r = simulate(&world, &sched, &s.sim).unwrap();
        assert!(r.net_displacement_m.abs() < 0.01 * r.stroke_total_m, "{kind:?}: {}", r.net_displacement_m);
    }
}

#[test]
fn frictionless_slide_limit_is_fully_efficient() {
    let mut s = Scenario::default_scenario();
    s.surfaces.insert(
        "grippy".into(),
        SurfaceSpec {
            kind: SurfaceKind::Wet,
            mu_static: 0.9,
            mu_kinetic: 0.8,
            film_kind: FilmKind::IncompressibleLiquid,
            ..SurfaceSpec::dry_rigid(0.9, 0.8)
        },
    );
    s.world.substrate = "grippy".into();
    s.film.liquid.inertia_coefficient = 100.0;
    s.gait.inchworm_switching_latency_s = 0.0;
    let world = inchworm_world(&s).unwrap();
    assert_eq!(world.contacts[0].film_fraction(s.world.drive_voltage_v, true).unwrap(), 1.0);
    let sched = gait_schedule(&s, GaitKind::Inchworm, Direction::Forward).unwrap();
    let r = simulate(&world, &sched, &s.sim).unwrap();
    let eff = locomotion_efficiency(&r).unwrap();
    assert!((eff - 1.0).abs() < 1e-3, "{eff}");
}

#[test]
fn efficiency_does_not_depend_on_cycle_count() {
    let s = Scenario::default_scenario();
    let world = gait_world(&s, GaitKind::Inchworm).unwrap();
    let eff = |cycles| {
        let mut v = s.clone();
        v.gait.cycles = cycles;
        let sched = gait_schedule(&v, GaitKind::Inchworm, Direction::Forward).unwrap();
        locomotion_efficiency(&simulate(&world, &sched, &s.sim).unwrap()).unwrap()
    };
    let (one, three) = (eff(1), eff(3));
    assert!((one - three).abs() <= 0.01 * three, "{one} vs {three}");
}

#[test]
fn identical_inputs_give_identical_results() {
    let s = Scenario::default_scenario();
    let world = slider_world(&s, Module::Flat, "soil", 0.12, 1.0, 280.0).unwrap();
    let sched = stroke_schedule(0.004, 0.001, true);
    let a = simulate(&world, &sched, &s.sim).unwrap();
    let b = simulate(&world, &sched, &s.sim).unwrap();
    assert_eq!(a.position_m, b.position_m);
    assert_eq!(a.friction_n, b.friction_n);
    assert_eq!(a.mu_eff, b.mu_eff);
    let distinct = a.mu_eff[0].iter().filter(|&&m| m != a.mu_eff[0][0]).count();
    assert!(distinct > 0, "roughness noise should vary along the track");
}

#[test]
fn traces_have_equal_lengths() {
    let s = Scenario::default_scenario();
    let world = gait_world(&s, GaitKind::Ovipositor).unwrap();
    let sched = gait_schedule(&s, GaitKind::Ovipositor, Direction::Forward).unwrap();
    let r = simulate(&world, &sched, &s.sim).unwrap();
    let n = r.time_s.len();
    // One warm-up and two counted 20 s cycles, sampled every millisecond.
    assert_eq!(n, 60_000);
    assert_relative_eq!(*r.time_s.last().unwrap(), 60.0, max_relative = 1e-12);
    for v in r
        .position_m
        .iter()
        .chain(&r.velocity_m_per_s)
        .chain(&r.friction_n)
        .chain(&r.mu_eff)
        .chain(&r.amplitude_m)
        .chain(&r.voltage_v)
        .chain(&r.commanded_offset_m)
    {
        assert_eq!(v.len(), n);
    }
    assert_eq!(r.phase.len(), n);
    assert_eq!(r.reported_m.len(), n);
    assert_relative_eq!(r.stroke_total_m, 0.04, max_relative = 1e-9);
}

#[test]
fn divergence_is_reported() {
    let world = World {
        bodies: vec![Body::at_rest(0.01)],
        contacts: Vec::new(),
        couplings: vec![Coupling {
            a: None,
            b: 0,
            stiffness_n_per_m: 1e12,
            damping_n_s_per_m: 0.0,
        }],
        reporter: Reporter::Body(0),
    };
    let cfg = SimConfig {
        timestep_s: 1e-3,
        sample_interval_s: 1e-3,
        ..SimConfig::default()
    };
    let sched = stroke_schedule(0.01, 0.001, false);
    let err = simulate(&world, &sched, &cfg).unwrap_err();
    assert!(matches!(err, Error::Diverged { .. }), "{err}");
}

#[test]
fn malformed_schedule_is_a_configuration_error() {
    let s = Scenario::default_scenario();
    let world = gait_world(&s, GaitKind::Inchworm).unwrap();
    let mut sched = gait_schedule(&s, GaitKind::Inchworm, Direction::Forward).unwrap();
    sched.phases[1].duration_s = -1.0;
    assert!(matches!(simulate(&world, &sched, &s.sim), Err(Error::Config(_))));

    let slider = slider_world(&s, Module::Flat, "pla_dry", 0.12, 1.0, 0.0).unwrap();
    let sched = gait_schedule(&s, GaitKind::Inchworm, Direction::Forward).unwrap();
    let mut two = slider.clone();
    two.couplings.clear();
    assert!(simulate(&two, &sched, &s.sim).is_err());
}

#[test]
fn world_validation_rejects_bad_indices() {
    let s = Scenario::default_scenario();
    let mut world = inchworm_world(&s).unwrap();
    world.contacts[1].counterpart = Counterpart::Body(7);
    assert!(world.validate().is_err());
    let mut world = inchworm_world(&s).unwrap();
    world.bodies[0].mass_kg = 0.0;
    assert!(world.validate().is_err());
    let mut world = inchworm_world(&s).unwrap();
    world.couplings[0].damping_n_s_per_m = -1.0;
    assert!(world.validate().is_err());
}
