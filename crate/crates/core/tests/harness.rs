use ultralube_core::harness::experiments::{affine_fit, Experiment};
use ultralube_core::harness::output::emit_outputs;
use ultralube_core::harness::scenario::{parse_scenario, Format, Scenario};

#[test]
fn vibration_matches_module_datasheets() {
    let s = Scenario::default_scenario();
    let out = Experiment::Vibration.run(&s).unwrap();
    let n = |k: &str| out.summary.number(k).unwrap();
    assert!((n("flat.peak_frequency_hz") - 21_400.0).abs() <= 10.0);
    assert!((n("cylindrical.peak_frequency_hz") - 22_900.0).abs() <= 10.0);
    assert!((n("flat.gain_m_per_v") - 0.030e-6).abs() <= 1e-12);
    assert!((n("cylindrical.gain_m_per_v") - 0.037e-6).abs() <= 1e-12);
    assert!(n("flat.intercept_m").abs() < 1e-12);
    assert!(n("cylindrical.intercept_m").abs() < 1e-12);
    let sweep = out.trace("flat_voltage_sweep").unwrap();
    assert_eq!(sweep.rows(), 11);
    assert_eq!(sweep.get("voltage_v").unwrap().last(), Some(&100.0));
    assert_eq!(out.trace("cylindrical_frequency_sweep").unwrap().rows(), 401);
}

#[test]
fn affine_fit_recovers_a_line() {
    let x = [0.0, 1.0, 2.0, 3.0];
    let y = [1.0, 3.0, 5.0, 7.0];
    let (a, b) = affine_fit(&x, &y);
    assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
}

#[test]
fn zero_voltage_gives_no_reduction() {
    let mut s = Scenario::default_scenario();
    s.experiments.tribometer.voltage_v = 0.0;
    s.experiments.tribometer.surfaces = vec!["pla_dry".into(), "pla_wet_oil".into()];
    let out = Experiment::Tribometer.run(&s).unwrap();
    assert_eq!(out.summary.number("pla_dry.reduction"), Some(0.0));
    assert_eq!(out.summary.number("pla_wet_oil.reduction"), Some(0.0));
}

#[test]
fn tribometer_emits_four_traces_per_surface() {
    let mut s = Scenario::default_scenario();
    s.experiments.tribometer.surfaces = vec!["sandpaper_240".into()];
    let out = Experiment::Tribometer.run(&s).unwrap();
    let mut names: Vec<&str> = out.traces.iter().map(|t| t.name.as_str()).collect();
    names.sort();
    assert_eq!(
        names,
        [
            "sandpaper_240_backward_off",
            "sandpaper_240_backward_on",
            "sandpaper_240_forward_off",
            "sandpaper_240_forward_on"
        ]
    );
    let n = |k: &str| out.summary.number(k).unwrap();
    assert!((n("sandpaper_240.mu_off_forward") - 0.45).abs() < 1e-6);
    assert_eq!(n("sandpaper_240.direction_independent"), 1.0);
    assert!((n("air_squeeze_number") - 1152.9).abs() < 1.0);
    assert!(out.summary.warnings.is_empty());
}

#[test]
fn low_squeeze_number_is_flagged() {
    let mut s = Scenario::default_scenario();
    s.experiments.tribometer.surfaces = vec!["pla_dry".into()];
    s.film.air.nominal_gap_m = 100e-6;
    let out = Experiment::Tribometer.run(&s).unwrap();
    assert!(out.summary.number("air_squeeze_number").unwrap() < 10.0);
    assert!(out.summary.warnings.iter().any(|w| w.contains("squeeze number")));
}

#[test]
fn ramp_holds_friction_until_vibration_starts() {
    let mut s = Scenario::default_scenario();
    s.experiments.ramp.surfaces = vec!["pla_dry".into()];
    let out = Experiment::Ramp.run(&s).unwrap();
    let t = out.trace("pla_dry_ramp").unwrap();
    let time = t.get("t_s").unwrap();
    let mu = t.get("mu_eff").unwrap();
    let volts = t.get("voltage_v").unwrap();
    for i in 0..time.len() {
        if time[i] < 5.0 {
            assert_eq!(mu[i], 0.3);
            assert_eq!(volts[i], 0.0);
        }
        if time[i] > 10.0 {
            assert_eq!(volts[i], 280.0);
        }
    }
    assert_eq!(*time.last().unwrap(), 15.0);
    let onset = out.summary.number("pla_dry.onset_voltage_v").unwrap();
    assert!(onset > 0.0 && onset < 60.0, "{onset}");
}

#[test]
fn summaries_and_csv_are_reproducible() {
    let s = Scenario::default_scenario();
    let a = Experiment::Locomote.run(&s).unwrap();
    let b = Experiment::Locomote.run(&s).unwrap();
    assert_eq!(a.summary.scenario_hash, s.hash().unwrap());
    assert_eq!(a.summary.seed, 0);
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let hash = s.short_hash().unwrap();
    let fa = emit_outputs(&[a], da.path(), &hash, &[Format::Csv, Format::Json]).unwrap();
    let fb = emit_outputs(&[b], db.path(), &hash, &[Format::Csv, Format::Json]).unwrap();
    assert_eq!(fa.len(), 4);
    for (x, y) in fa.iter().zip(&fb) {
        if x.extension().unwrap() == "csv" {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }
}

#[test]
fn reversed_direction_flag_moves_backwards() {
    let mut s = Scenario::default_scenario();
    s.gait.kind = ultralube_core::gait::GaitKind::Ovipositor;
    s.gait.direction = ultralube_core::gait::Direction::Backward;
    let out = Experiment::Locomote.run(&s).unwrap();
    assert!(out.summary.number("net_displacement_m").unwrap() < 0.0);
    assert!(out.summary.number("reversed_net_displacement_m").unwrap() > 0.0);
    let eff = out.summary.number("efficiency_active").unwrap();
    assert!((eff - 0.932).abs() < 0.05, "{eff}");
}

#[test]
fn partial_scenario_runs_with_defaults() {
    let loaded = parse_scenario("seed = 4\n[gait]\ncycles = 1\n", true).unwrap();
    assert!(loaded.defaults_applied.iter().any(|p| p == "material"));
    assert_eq!(loaded.scenario.gait.cycles, 1);
    let out = Experiment::Modes.run(&loaded.scenario).unwrap();
    assert_eq!(out.summary.seed, 4);
}
