//! Squeeze-film load sharing: vibration amplitude to effective friction.
//!
//! A vibrating face traps fluid in the voids between asperities. The
//! time-averaged film pressure carries part of the normal load, and only
//! the asperity-borne remainder generates Coulomb friction:
//!
//! ```text
//! μ_eff = μ₀ · max(0, 1 − η·L_film / W)
//! ```
//!
//! Air films use the isothermal high-squeeze-number limit, in which the
//! mean pressure under a gap `h(1 + ε cos θ)` is `p_a / sqrt(1 − ε²)`. The
//! film lift pushes the faces apart; as the asperities unload, the gap
//! widens and the excursion ratio falls, which makes air lubrication
//! saturate with amplitude. Liquid films are driven by fluid inertia and
//! have no such self-limiting term.

use serde::{Deserialize, Serialize};

use crate::roots::{brent, describe};
use crate::surfaces::SurfaceSpec;
use crate::{Error, Result};

/// Largest excursion ratio fed to the compressible-film closed form.
///
/// Beyond this the faces are bouncing on asperity contact, which the
/// load-sharing model does not describe.
pub const EXCURSION_CLAMP: f64 = 0.95;

/// Squeeze number below which the high-σ air-film formula is questionable.
pub const MIN_SQUEEZE_NUMBER: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilmKind {
    CompressibleGas,
    IncompressibleLiquid,
}

/// Interfacial film properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilmParams {
    pub ambient_pressure_pa: f64,
    /// Mean asperity-supported separation with the drive off.
    pub nominal_gap_m: f64,
    pub contact_area_m2: f64,
    pub fluid_density_kg_per_m3: f64,
    pub fluid_viscosity_pa_s: f64,
    pub film_kind: FilmKind,
    /// Extra separation over which the asperities fully unload (gas films).
    pub separation_range_m: f64,
    /// Dimensionless inertial pressure coefficient C_L (liquid films).
    pub inertia_coefficient: f64,
}

impl FilmParams {
    pub fn validate(&self, section: &str) -> Result<()> {
        let mut errs: Vec<String> = [
            ("ambient_pressure_pa", self.ambient_pressure_pa),
            ("nominal_gap_m", self.nominal_gap_m),
            ("contact_area_m2", self.contact_area_m2),
            ("fluid_density_kg_per_m3", self.fluid_density_kg_per_m3),
            ("fluid_viscosity_pa_s", self.fluid_viscosity_pa_s),
        ]
        .iter()
        .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
        .map(|(name, _)| format!("{section}.{name} must be positive"))
        .collect();
        match self.film_kind {
            FilmKind::CompressibleGas if !(self.separation_range_m > 0.0 && self.separation_range_m.is_finite()) => {
                errs.push(format!("{section}.separation_range_m must be positive for a gas film"));
            }
            FilmKind::IncompressibleLiquid if !(self.inertia_coefficient >= 0.0 && self.inertia_coefficient.is_finite()) => {
                errs.push(format!("{section}.inertia_coefficient must be non-negative"));
            }
            _ => {}
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Returns a copy with a different contact area.
    pub fn with_contact_area(mut self, area_m2: f64) -> Self {
        self.contact_area_m2 = area_m2;
        self
    }
}

/// The two film parameter sets a contact can draw on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilmModel {
    pub air: FilmParams,
    pub liquid: FilmParams,
}

impl FilmModel {
    pub fn for_kind(&self, kind: FilmKind) -> &FilmParams {
        match kind {
            FilmKind::CompressibleGas => &self.air,
            FilmKind::IncompressibleLiquid => &self.liquid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        for (name, params, kind) in [
            ("film.air", &self.air, FilmKind::CompressibleGas),
            ("film.liquid", &self.liquid, FilmKind::IncompressibleLiquid),
        ] {
            if params.film_kind != kind {
                errs.push(format!("{name}.film_kind must be {kind:?}"));
            }
            if let Err(Error::Validation(mut e)) = params.validate(name) {
                errs.append(&mut e);
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// Mean overpressure of an isothermal gas film at excursion ratio `ε`.
///
/// `p_a·(1/sqrt(1 − ε²) − 1)`, with `ε` clamped to [`EXCURSION_CLAMP`].
pub fn air_film_mean_overpressure(excursion_ratio: f64, ambient_pressure: f64) -> Result<f64> {
    if !(excursion_ratio >= 0.0) {
        return Err(Error::invalid(format!("excursion ratio must be non-negative, got {excursion_ratio}")));
    }
    let eps = excursion_ratio.min(EXCURSION_CLAMP);
    Ok(ambient_pressure * (1.0 / (1.0 - eps * eps).sqrt() - 1.0))
}

fn overpressure_clamped(eps: f64, ambient_pressure: f64) -> f64 {
    let eps = eps.min(EXCURSION_CLAMP);
    ambient_pressure * (1.0 / (1.0 - eps * eps).sqrt() - 1.0)
}

/// Gas-film lift (N) at the nominal gap: overpressure(a/h₀)·A.
pub fn air_film_lift(amplitude: f64, params: &FilmParams) -> f64 {
    overpressure_clamped(amplitude.max(0.0) / params.nominal_gap_m, params.ambient_pressure_pa) * params.contact_area_m2
}

/// Self-consistent gas-film state under a given normal load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AirFilmState {
    /// Mean separation including the lift-induced opening.
    pub gap_m: f64,
    /// Film lift at that separation.
    pub lift_n: f64,
    /// Fraction of the normal load carried by the film, in `[0, 1]`.
    pub load_fraction: f64,
}

/// Solves for the separation at which the effective film lift and the
/// remaining asperity load share `load`.
///
/// The asperity load falls linearly from `load` at the nominal gap to zero
/// at `h₀ + separation_range`, so the film fraction `x` satisfies
/// `x = η·L(a / (h₀ + x·δ)) / W`. The right side decreases in `x`, so the
/// root in `[0, 1]` is unique; if the film alone can carry the load at full
/// separation the faces levitate and `x = 1`.
pub fn air_film_equilibrium(amplitude: f64, params: &FilmParams, efficacy: f64, load: f64) -> Result<AirFilmState> {
    if !(load > 0.0) {
        return Err(Error::invalid(format!("normal load must be positive, got {load}")));
    }
    let h0 = params.nominal_gap_m;
    let delta = params.separation_range_m;
    let lift_at = |x: f64| air_film_lift(amplitude, &params.with_gap(h0 + x * delta));
    let residual = |x: f64| x - efficacy * lift_at(x) / load;
    if amplitude <= 0.0 || efficacy <= 0.0 {
        return Ok(AirFilmState {
            gap_m: h0,
            lift_n: lift_at(0.0),
            load_fraction: 0.0,
        });
    }
    let x = if residual(1.0) <= 0.0 {
        1.0
    } else {
        brent(0.0, 1.0, 1e-13, residual).map_err(|e| Error::Solver {
            mode: 0,
            reason: format!("air-film equilibrium: {}", describe(e)),
        })?
    };
    Ok(AirFilmState {
        gap_m: h0 + x * delta,
        lift_n: lift_at(x),
        load_fraction: x,
    })
}

impl FilmParams {
    fn with_gap(mut self, gap: f64) -> Self {
        self.nominal_gap_m = gap;
        self
    }
}

/// Inertial liquid-film lift (N): `C_L·ρ·ω²·a²·A`.
pub fn liquid_film_lift(amplitude: f64, angular_frequency: f64, params: &FilmParams, inertia_coefficient: f64) -> f64 {
    inertia_coefficient
        * params.fluid_density_kg_per_m3
        * angular_frequency
        * angular_frequency
        * amplitude
        * amplitude
        * params.contact_area_m2
}

/// Fraction of the effective normal load carried by the film, in `[0, 1]`.
///
/// `amplitude` is the commanded resonator amplitude; the surface's
/// attenuation and adhesion are applied here.
pub fn film_load_fraction(
    surface: &SurfaceSpec,
    film: &FilmModel,
    amplitude: f64,
    angular_frequency: f64,
    applied_load: f64,
) -> Result<f64> {
    if !(applied_load > 0.0) {
        return Err(Error::invalid(format!("normal load must be positive, got {applied_load}")));
    }
    if !(amplitude >= 0.0) {
        return Err(Error::invalid(format!("amplitude must be non-negative, got {amplitude}")));
    }
    let a = surface.delivered_amplitude(amplitude);
    let load = surface.effective_normal_load(applied_load);
    let params = film.for_kind(surface.film_kind);
    let fraction = match surface.film_kind {
        FilmKind::CompressibleGas => air_film_equilibrium(a, params, surface.film_efficacy, load)?.load_fraction,
        FilmKind::IncompressibleLiquid => {
            let lift = liquid_film_lift(a, angular_frequency, params, params.inertia_coefficient);
            (surface.film_efficacy * lift / load).min(1.0)
        }
    };
    Ok(fraction.clamp(0.0, 1.0))
}

/// Effective kinetic friction coefficient under vibration.
pub fn effective_mu(
    surface: &SurfaceSpec,
    film: &FilmModel,
    amplitude: f64,
    angular_frequency: f64,
    applied_load: f64,
) -> Result<f64> {
    let fraction = film_load_fraction(surface, film, amplitude, angular_frequency, applied_load)?;
    Ok(surface.mu_kinetic * (1.0 - fraction))
}

/// Average friction coefficients without and with vibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionMeasurement {
    pub mu_off: f64,
    pub mu_on: f64,
}

/// Relative friction reduction `(μ_off − μ_on) / μ_off`.
pub fn friction_reduction(m: FrictionMeasurement) -> Result<f64> {
    if !(m.mu_off > 0.0) {
        return Err(Error::UndefinedMeasurement(format!(
            "friction reduction needs a positive baseline, got mu_off = {}",
            m.mu_off
        )));
    }
    // Written as 1 − on/off: the ratio form rounds exactly for the
    // common decimal inputs where the difference form does not.
    Ok(1.0 - m.mu_on / m.mu_off)
}

/// Squeeze number `σ = 12·μ·ω·ℓ² / (p_a·h₀²)`.
pub fn squeeze_number(params: &FilmParams, angular_frequency: f64, characteristic_length: f64) -> f64 {
    12.0 * params.fluid_viscosity_pa_s * angular_frequency * characteristic_length * characteristic_length
        / (params.ambient_pressure_pa * params.nominal_gap_m * params.nominal_gap_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::mean_inverse_gap_quadrature;
    use crate::surfaces::{SurfaceKind, SurfaceSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const P_A: f64 = 101_325.0;

    fn air() -> FilmParams {
        FilmParams {
            ambient_pressure_pa: P_A,
            nominal_gap_m: 5e-6,
            contact_area_m2: 3.2e-4,
            fluid_density_kg_per_m3: 1.204,
            fluid_viscosity_pa_s: 1.81e-5,
            film_kind: FilmKind::CompressibleGas,
            separation_range_m: 40e-6,
            inertia_coefficient: 0.0,
        }
    }

    fn oil() -> FilmParams {
        FilmParams {
            ambient_pressure_pa: P_A,
            nominal_gap_m: 5e-6,
            contact_area_m2: 3.2e-4,
            fluid_density_kg_per_m3: 910.0,
            fluid_viscosity_pa_s: 0.084,
            film_kind: FilmKind::IncompressibleLiquid,
            separation_range_m: 40e-6,
            inertia_coefficient: 2.5,
        }
    }

    fn film() -> FilmModel {
        FilmModel { air: air(), liquid: oil() }
    }

    fn dry(efficacy: f64) -> SurfaceSpec {
        SurfaceSpec {
            kind: SurfaceKind::DryRigid,
            mu_static: 0.35,
            mu_kinetic: 0.30,
            adhesion_load_n: 0.0,
            film_efficacy: efficacy,
            amplitude_attenuation: 0.0,
            roughness_noise_std: 0.0,
            roughness_correlation_length_m: 1e-3,
            film_kind: FilmKind::CompressibleGas,
            rng_seed: 0,
        }
    }

    #[test]
    fn overpressure_examples() {
        assert_eq!(air_film_mean_overpressure(0.0, P_A).unwrap(), 0.0);
        // Frozen from the periodic quadrature oracle.
        let q06 = mean_inverse_gap_quadrature(0.6, 64);
        let q08 = mean_inverse_gap_quadrature(0.8, 64);
        assert_relative_eq!(q06, 1.25, max_relative = 1e-12);
        assert_relative_eq!(q08, 1.0 / 0.6, max_relative = 1e-12);
        assert_relative_eq!(air_film_mean_overpressure(0.6, P_A).unwrap(), 0.25 * P_A, max_relative = 1e-12);
        assert_relative_eq!(air_film_mean_overpressure(0.8, P_A).unwrap(), (1.0 / 0.6 - 1.0) * P_A, max_relative = 1e-12);
        assert!(air_film_mean_overpressure(-0.1, P_A).is_err());
        assert!(air_film_mean_overpressure(f64::NAN, P_A).is_err());
    }

    #[test]
    fn overpressure_clamps_at_boundary() {
        let at = air_film_mean_overpressure(EXCURSION_CLAMP, P_A).unwrap();
        let beyond = air_film_mean_overpressure(3.0, P_A).unwrap();
        assert!(at.is_finite());
        assert_eq!(at, beyond);
    }

    #[test]
    fn lift_examples() {
        assert_eq!(air_film_lift(0.0, &air()), 0.0);
        assert_relative_eq!(air_film_lift(3e-6, &air()), 0.25 * P_A * 3.2e-4, max_relative = 1e-12);
        assert!(air_film_lift(0.95 * 5e-6, &air()).is_finite());
    }

    #[test]
    fn liquid_lift_is_quadratic() {
        let w = 2.0 * PI * 21_400.0;
        assert_eq!(liquid_film_lift(0.0, w, &oil(), 2.5), 0.0);
        let l1 = liquid_film_lift(2e-6, w, &oil(), 2.5);
        let l2 = liquid_film_lift(4e-6, w, &oil(), 2.5);
        assert_relative_eq!(l2, 4.0 * l1, max_relative = 1e-12);
    }

    #[test]
    fn effective_mu_limits() {
        let w = 2.0 * PI * 21_400.0;
        let s = dry(0.5);
        assert_eq!(effective_mu(&s, &film(), 0.0, w, 1.0).unwrap(), 0.30);
        // Light load with a perfect film levitates completely.
        let full = effective_mu(&dry(1.0), &film(), 8e-6, w, 0.01).unwrap();
        assert_eq!(full, 0.0);
        assert!(effective_mu(&s, &film(), 1e-6, w, 0.0).is_err());
        assert!(effective_mu(&s, &film(), 1e-6, w, -1.0).is_err());
    }

    #[test]
    fn equilibrium_balances_load() {
        let state = air_film_equilibrium(6e-6, &air(), 0.3, 1.0).unwrap();
        assert!(state.load_fraction > 0.0 && state.load_fraction < 1.0);
        assert_relative_eq!(state.load_fraction, 0.3 * state.lift_n / 1.0, max_relative = 1e-9);
        assert_relative_eq!(state.gap_m, 5e-6 + state.load_fraction * 40e-6, max_relative = 1e-12);
    }

    #[test]
    fn reduction_examples() {
        let r = friction_reduction(FrictionMeasurement { mu_off: 0.4, mu_on: 0.1 }).unwrap();
        assert_eq!(r, 0.75);
        assert_eq!(friction_reduction(FrictionMeasurement { mu_off: 0.3, mu_on: 0.3 }).unwrap(), 0.0);
        let colon = friction_reduction(FrictionMeasurement { mu_off: 0.37, mu_on: 0.233 }).unwrap();
        assert!((colon - 0.37).abs() < 0.005);
        assert!(matches!(
            friction_reduction(FrictionMeasurement { mu_off: 0.0, mu_on: 0.0 }),
            Err(Error::UndefinedMeasurement(_))
        ));
    }

    #[test]
    fn reduction_is_zero_without_vibration() {
        let w = 2.0 * PI * 21_400.0;
        let s = dry(0.7);
        let mu_off = s.mu_kinetic;
        let mu_on = effective_mu(&s, &film(), 0.0, w, 1.0).unwrap();
        assert_eq!(friction_reduction(FrictionMeasurement { mu_off, mu_on }).unwrap(), 0.0);
    }

    #[test]
    fn squeeze_number_examples() {
        let w = 2.0 * PI * 21_400.0;
        // 12 · 1.81e-5 · 134 460 · 1e-4 / (101 325 · 2.5e-11)
        let sigma = squeeze_number(&air(), w, 0.01);
        assert_relative_eq!(sigma, 1152.8, max_relative = 1e-3);
        assert!(sigma > MIN_SQUEEZE_NUMBER);
        assert!(squeeze_number(&air(), 1e-12, 0.01) < 1e-10);
        assert_relative_eq!(squeeze_number(&air(), w, 0.02), 4.0 * sigma, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn overpressure_monotone_and_convex(e in 0.0f64..0.93) {
            let h = 1e-3;
            let p0 = air_film_mean_overpressure(e, P_A).unwrap();
            let p1 = air_film_mean_overpressure(e + h, P_A).unwrap();
            let p2 = air_film_mean_overpressure(e + 2.0 * h, P_A).unwrap();
            prop_assert!(p1 > p0);
            prop_assert!(p2 - p1 >= p1 - p0);
        }

        #[test]
        fn effective_mu_bounded_and_non_increasing(eta in 0.0f64..1.0, load in 0.05f64..5.0, liquid in any::<bool>()) {
            let w = 2.0 * PI * 21_400.0;
            let mut s = dry(eta);
            if liquid {
                s.film_kind = FilmKind::IncompressibleLiquid;
            }
            let mut prev = f64::INFINITY;
            for i in 0..=60 {
                let a = i as f64 * 0.2e-6;
                let mu = effective_mu(&s, &film(), a, w, load).unwrap();
                prop_assert!((0.0..=s.mu_kinetic).contains(&mu));
                prop_assert!(mu <= prev + 1e-15);
                prev = mu;
            }
        }
    }
}
