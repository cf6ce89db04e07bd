//! Substrate models.
//!
//! Each surface carries a baseline friction pair, an adhesion load that adds
//! to the normal load (wet and tissue interfaces), a film-efficacy factor
//! describing how well the squeeze film forms on it, an attenuation of the
//! delivered vibration amplitude, and optional position-correlated
//! roughness noise for granular media.
//!
//! The calibrated catalog (dry and oiled PLA, two sandpapers, soil, colon
//! tissue) lives in the default scenario file rather than in code.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::squeezefilm::FilmKind;
use crate::{Error, Result};

/// Lower bound on the multiplicative roughness factor, keeps μ > 0.
const MIN_NOISE_FACTOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    DryRigid,
    Wet,
    Granular,
    Viscoelastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrictionRegime {
    Static,
    Kinetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    pub mu_static: f64,
    pub mu_kinetic: f64,
    /// Capillary or viscous adhesion added to the normal load (N).
    #[serde(default)]
    pub adhesion_load_n: f64,
    /// Fraction of the squeeze-film lift effective at the real contact.
    pub film_efficacy: f64,
    /// Fraction of the vibration amplitude lost into the substrate.
    #[serde(default)]
    pub amplitude_attenuation: f64,
    /// Standard deviation of the multiplicative roughness factor.
    #[serde(default)]
    pub roughness_noise_std: f64,
    pub roughness_correlation_length_m: f64,
    pub film_kind: FilmKind,
    #[serde(default)]
    pub rng_seed: u64,
}

impl SurfaceSpec {
    /// Noise-free dry contact with a perfect film.
    pub fn dry_rigid(mu_static: f64, mu_kinetic: f64) -> Self {
        Self {
            kind: SurfaceKind::DryRigid,
            mu_static,
            mu_kinetic,
            adhesion_load_n: 0.0,
            film_efficacy: 1.0,
            amplitude_attenuation: 0.0,
            roughness_noise_std: 0.0,
            roughness_correlation_length_m: 1e-3,
            film_kind: FilmKind::CompressibleGas,
            rng_seed: 0,
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.mu_kinetic > 0.0 && self.mu_kinetic.is_finite()) {
            errs.push(format!("surfaces.{name}.mu_kinetic must be positive"));
        }
        if !(self.mu_static >= self.mu_kinetic && self.mu_static.is_finite()) {
            errs.push(format!("surfaces.{name}.mu_kinetic must not exceed mu_static"));
        }
        if !(self.adhesion_load_n >= 0.0 && self.adhesion_load_n.is_finite()) {
            errs.push(format!("surfaces.{name}.adhesion_load_n must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.film_efficacy) {
            errs.push(format!("surfaces.{name}.film_efficacy must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.amplitude_attenuation) {
            errs.push(format!("surfaces.{name}.amplitude_attenuation must lie in [0, 1]"));
        }
        if !(self.roughness_noise_std >= 0.0 && self.roughness_noise_std.is_finite()) {
            errs.push(format!("surfaces.{name}.roughness_noise_std must be non-negative"));
        }
        if !(self.roughness_correlation_length_m > 0.0 && self.roughness_correlation_length_m.is_finite()) {
            errs.push(format!("surfaces.{name}.roughness_correlation_length_m must be positive"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Normal load seen by the friction law: the applied load plus adhesion
    /// for wet and viscoelastic interfaces.
    pub fn effective_normal_load(&self, applied_load: f64) -> f64 {
        match self.kind {
            SurfaceKind::Wet | SurfaceKind::Viscoelastic => applied_load + self.adhesion_load_n,
            SurfaceKind::DryRigid | SurfaceKind::Granular => applied_load,
        }
    }

    /// Amplitude that reaches the interface after substrate losses.
    pub fn delivered_amplitude(&self, commanded_amplitude: f64) -> f64 {
        (1.0 - self.amplitude_attenuation) * commanded_amplitude
    }

    pub fn baseline_mu(&self, regime: FrictionRegime) -> f64 {
        match regime {
            FrictionRegime::Static => self.mu_static,
            FrictionRegime::Kinetic => self.mu_kinetic,
        }
    }
}

/// A surface instance bound to a run seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub spec: SurfaceSpec,
    seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Surface {
    pub fn new(spec: SurfaceSpec, run_seed: u64) -> Self {
        Self {
            spec,
            seed: splitmix64(spec.rng_seed ^ splitmix64(run_seed)),
        }
    }

    pub fn segment_index(&self, position: f64) -> i64 {
        (position / self.spec.roughness_correlation_length_m).floor() as i64
    }

    /// Multiplicative roughness factor for one correlation segment.
    pub fn noise_factor(&self, segment: i64) -> f64 {
        if self.spec.roughness_noise_std == 0.0 {
            return 1.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ splitmix64(segment as u64)));
        let z: f64 = StandardNormal.sample(&mut rng);
        (1.0 + self.spec.roughness_noise_std * z).max(MIN_NOISE_FACTOR)
    }

    /// Friction coefficient at `position` along the substrate.
    ///
    /// Piecewise constant over correlation-length segments; a pure function
    /// of (spec, seed, position).
    pub fn sample_mu(&self, position: f64, regime: FrictionRegime) -> f64 {
        let base = self.spec.baseline_mu(regime);
        if self.spec.roughness_noise_std == 0.0 {
            return base;
        }
        base * self.noise_factor(self.segment_index(position))
    }

    pub fn effective_normal_load(&self, applied_load: f64) -> f64 {
        self.spec.effective_normal_load(applied_load)
    }

    pub fn delivered_amplitude(&self, commanded_amplitude: f64) -> f64 {
        self.spec.delivered_amplitude(commanded_amplitude)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::squeezefilm::{effective_mu, FilmModel, FilmParams};
    use std::f64::consts::PI;

    fn soil(seed: u64) -> SurfaceSpec {
        SurfaceSpec {
            kind: SurfaceKind::Granular,
            mu_static: 0.55,
            mu_kinetic: 0.45,
            adhesion_load_n: 0.0,
            film_efficacy: 0.1,
            amplitude_attenuation: 0.0,
            roughness_noise_std: 0.15,
            roughness_correlation_length_m: 1e-3,
            film_kind: FilmKind::CompressibleGas,
            rng_seed: seed,
        }
    }

    #[test]
    fn rigid_surface_is_exact() {
        let s = Surface::new(SurfaceSpec::dry_rigid(0.35, 0.30), 7);
        for x in [-1.0, 0.0, 0.0123, 5.0] {
            assert_eq!(s.sample_mu(x, FrictionRegime::Kinetic), 0.30);
            assert_eq!(s.sample_mu(x, FrictionRegime::Static), 0.35);
        }
    }

    #[test]
    fn granular_sampling_is_deterministic() {
        let a = Surface::new(soil(3), 11);
        let b = Surface::new(soil(3), 11);
        for i in 0..200 {
            let x = i as f64 * 0.37e-3;
            let first = a.sample_mu(x, FrictionRegime::Kinetic);
            assert_eq!(first.to_bits(), a.sample_mu(x, FrictionRegime::Kinetic).to_bits());
            assert_eq!(first.to_bits(), b.sample_mu(x, FrictionRegime::Kinetic).to_bits());
        }
        let c = Surface::new(soil(3), 12);
        assert_ne!(a.sample_mu(0.0, FrictionRegime::Kinetic), c.sample_mu(0.0, FrictionRegime::Kinetic));
    }

    #[test]
    fn granular_noise_is_piecewise_constant() {
        let s = Surface::new(soil(1), 0);
        let mu = |x| s.sample_mu(x, FrictionRegime::Kinetic);
        assert_eq!(mu(0.2e-3), mu(0.9e-3));
        assert_ne!(mu(0.9e-3), mu(1.1e-3));
    }

    #[test]
    fn granular_mean_matches_baseline() {
        let s = Surface::new(soil(5), 99);
        let n = 10_000;
        let mean = (0..n)
            .map(|k| s.sample_mu((k as f64 + 0.5) * 1e-3, FrictionRegime::Kinetic))
            .sum::<f64>()
            / n as f64;
        assert!((mean / 0.45 - 1.0).abs() < 0.02, "{mean}");
        assert!((0..n).all(|k| s.sample_mu(k as f64 * 1e-3, FrictionRegime::Kinetic) > 0.0));
    }

    #[test]
    fn adhesion_only_for_wet_kinds() {
        let mut spec = SurfaceSpec::dry_rigid(0.35, 0.30);
        spec.adhesion_load_n = 0.3;
        assert_eq!(spec.effective_normal_load(1.0), 1.0);
        spec.kind = SurfaceKind::Wet;
        assert_eq!(spec.effective_normal_load(1.0), 1.3);
        spec.kind = SurfaceKind::Viscoelastic;
        assert!(spec.effective_normal_load(0.5) >= 0.5);
    }

    #[test]
    fn wet_adhesion_raises_baseline_force() {
        let dry = SurfaceSpec::dry_rigid(0.35, 0.30);
        let mut wet = SurfaceSpec::dry_rigid(0.30, 0.25);
        wet.kind = SurfaceKind::Wet;
        wet.adhesion_load_n = 0.5;
        assert!(wet.mu_kinetic * wet.effective_normal_load(1.0) > dry.mu_kinetic * dry.effective_normal_load(1.0));
    }

    #[test]
    fn attenuation_limits() {
        let mut spec = SurfaceSpec::dry_rigid(0.35, 0.30);
        assert_eq!(spec.delivered_amplitude(4e-6), 4e-6);
        spec.amplitude_attenuation = 1.0;
        assert_eq!(spec.delivered_amplitude(4e-6), 0.0);
        spec.amplitude_attenuation = 0.25;
        assert!(spec.delivered_amplitude(4e-6) <= 4e-6);
    }

    #[test]
    fn validation_names_the_field() {
        let spec = SurfaceSpec::dry_rigid(0.2, 0.3);
        match spec.validate("bad") {
            Err(Error::Validation(errs)) => assert!(errs[0].contains("surfaces.bad.mu_kinetic")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_kinds_reduce_to_dry_rigid() {
        let air = FilmParams {
            ambient_pressure_pa: 101_325.0,
            nominal_gap_m: 5e-6,
            contact_area_m2: 3.2e-4,
            fluid_density_kg_per_m3: 1.2,
            fluid_viscosity_pa_s: 1.8e-5,
            film_kind: FilmKind::CompressibleGas,
            separation_range_m: 40e-6,
            inertia_coefficient: 0.0,
        };
        let film = FilmModel {
            air,
            liquid: FilmParams {
                film_kind: FilmKind::IncompressibleLiquid,
                ..air
            },
        };
        let w = 2.0 * PI * 21_400.0;
        let reference = SurfaceSpec::dry_rigid(0.35, 0.30);
        for kind in [SurfaceKind::Wet, SurfaceKind::Granular, SurfaceKind::Viscoelastic] {
            let spec = SurfaceSpec { kind, ..reference };
            let s = Surface::new(spec, 1);
            for a in [0.0, 2e-6, 6e-6] {
                assert_eq!(
                    effective_mu(&spec, &film, a, w, 1.0).unwrap(),
                    effective_mu(&reference, &film, a, w, 1.0).unwrap()
                );
            }
            assert_eq!(s.sample_mu(0.004, FrictionRegime::Kinetic), 0.30);
            assert_eq!(s.effective_normal_load(1.0), 1.0);
        }
    }

    #[test]
    fn finer_film_efficacy_reduces_more() {
        let air = FilmParams {
            ambient_pressure_pa: 101_325.0,
            nominal_gap_m: 5e-6,
            contact_area_m2: 3.2e-4,
            fluid_density_kg_per_m3: 1.2,
            fluid_viscosity_pa_s: 1.8e-5,
            film_kind: FilmKind::CompressibleGas,
            separation_range_m: 40e-6,
            inertia_coefficient: 0.0,
        };
        let film = FilmModel { air, liquid: air };
        let w = 2.0 * PI * 21_400.0;
        let mut coarse = SurfaceSpec::dry_rigid(0.6, 0.5);
        coarse.film_efficacy = 0.04;
        let fine = SurfaceSpec {
            film_efficacy: 0.05,
            ..coarse
        };
        for a in [1e-6, 4e-6, 8.4e-6] {
            assert!(effective_mu(&fine, &film, a, w, 1.0).unwrap() <= effective_mu(&coarse, &film, a, w, 1.0).unwrap());
        }
    }
}
