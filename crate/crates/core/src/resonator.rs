//! Analytical modal analysis of the two friction-control resonators and the
//! driven steady-state amplitude model.
//!
//! The flat module is treated as an Euler-Bernoulli beam with both ends
//! free; the cylindrical module as a thin ring vibrating in its plane.
//! Neither model includes piezo mass loading or support cutouts, so the
//! analytical frequencies are design estimates. Simulations use the
//! measured resonance of each module through [`ResonatorModel`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::roots::{brent, describe};
use crate::{Error, Result};

/// Relative tolerance on characteristic-equation roots.
pub const ROOT_REL_TOL: f64 = 1e-12;

/// Isotropic elastic material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Young's modulus (Pa).
    pub young_modulus_pa: f64,
    /// Mass density (kg/m³).
    pub density_kg_per_m3: f64,
    /// Poisson's ratio.
    pub poisson_ratio: f64,
}

impl Material {
    /// Handbook values for AISI 316 stainless steel.
    pub const STAINLESS_316: Material = Material {
        young_modulus_pa: 193e9,
        density_kg_per_m3: 7980.0,
        poisson_ratio: 0.27,
    };

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.young_modulus_pa > 0.0 && self.young_modulus_pa.is_finite()) {
            errs.push("material.young_modulus_pa must be positive".to_string());
        }
        if !(self.density_kg_per_m3 > 0.0 && self.density_kg_per_m3.is_finite()) {
            errs.push("material.density_kg_per_m3 must be positive".to_string());
        }
        if !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            errs.push("material.poisson_ratio must lie in (0, 0.5)".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

impl Default for Material {
    fn default() -> Self {
        Self::STAINLESS_316
    }
}

/// Rectangular beam cross-section and length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    pub length_m: f64,
    pub width_m: f64,
    pub thickness_m: f64,
}

impl BeamGeometry {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("length_m", self.length_m),
            ("width_m", self.width_m),
            ("thickness_m", self.thickness_m),
        ];
        let errs: Vec<String> = fields
            .iter()
            .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
            .map(|(name, _)| format!("geometry.beam.{name} must be positive"))
            .collect();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    fn area(&self) -> f64 {
        self.width_m * self.thickness_m
    }

    fn second_moment(&self) -> f64 {
        self.width_m * self.thickness_m.powi(3) / 12.0
    }
}

/// Thin ring described by its outer diameter and wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingGeometry {
    pub outer_diameter_m: f64,
    /// Wall thickness in the radial direction.
    pub radial_thickness_m: f64,
    /// Extent along the ring axis.
    pub axial_width_m: f64,
}

impl RingGeometry {
    /// Radius of the wall's mid-surface.
    pub fn mean_radius(&self) -> f64 {
        (self.outer_diameter_m - self.radial_thickness_m) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        for (name, v) in [
            ("outer_diameter_m", self.outer_diameter_m),
            ("radial_thickness_m", self.radial_thickness_m),
            ("axial_width_m", self.axial_width_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("geometry.ring.{name} must be positive"));
            }
        }
        if self.radial_thickness_m >= self.outer_diameter_m / 2.0 {
            errs.push("geometry.ring.radial_thickness_m must be below half the outer diameter".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// One flexural mode.
///
/// Beam positions are normalised to `[0, 1]` along the length; ring
/// positions are angles in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeShape {
    pub mode_index: usize,
    pub frequency_hz: f64,
    pub node_positions: Vec<f64>,
    pub antinode_positions: Vec<f64>,
}

/// Modes plus any model-validity warnings raised while computing them.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ModalResult {
    pub modes: Vec<ModeShape>,
    pub warnings: Vec<String>,
}

/// Steady-state driven response of one module around a single resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorModel {
    pub resonance_frequency_hz: f64,
    pub quality_factor: f64,
    /// Amplitude per volt at resonance (m/V).
    pub gain_m_per_v: f64,
}

impl ResonatorModel {
    pub fn validate(&self, section: &str) -> Result<()> {
        let errs: Vec<String> = [
            ("resonance_frequency_hz", self.resonance_frequency_hz),
            ("quality_factor", self.quality_factor),
            ("gain_m_per_v", self.gain_m_per_v),
        ]
        .iter()
        .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
        .map(|(name, _)| format!("{section}.{name} must be positive"))
        .collect();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * self.resonance_frequency_hz
    }
}

/// Characteristic function of the free-free beam, `cos x - sech x`.
///
/// Same roots as `cos x cosh x = 1` but bounded, which keeps the bracketing
/// well conditioned for higher modes.
fn free_free_characteristic(x: f64) -> f64 {
    x.cos() - 1.0 / x.cosh()
}

/// `n`-th positive root of `cos(βL)·cosh(βL) = 1`, excluding the rigid-body
/// root at zero. Each root lies strictly inside `(nπ, (n+1)π)`.
pub fn free_free_root(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("free-free roots are numbered from 1"));
    }
    let lo = n as f64 * PI;
    let hi = (n + 1) as f64 * PI;
    let root = brent(lo, hi, ROOT_REL_TOL, free_free_characteristic).map_err(|e| Error::Solver {
        mode: n,
        reason: describe(e),
    })?;
    if !(root > lo && root < hi) {
        return Err(Error::Solver {
            mode: n,
            reason: format!("root {root} escaped its bracket"),
        });
    }
    Ok(root)
}

/// Free-free Euler-Bernoulli mode shape for eigenvalue `lambda = βL`,
/// evaluated at normalised position `xi`, together with its slope.
///
/// Uses `cosh y - σ sinh y = e^{-y} + (1-σ) sinh y` so that high modes do
/// not lose all precision to cancellation.
#[derive(Debug, Clone, Copy)]
pub struct FreeFreeShape {
    lambda: f64,
    one_minus_sigma: f64,
    sigma: f64,
}

impl FreeFreeShape {
    pub fn new(lambda: f64) -> Self {
        let denom = lambda.sinh() - lambda.sin();
        let one_minus_sigma = (-(-lambda).exp() - lambda.sin() + lambda.cos()) / denom;
        Self {
            lambda,
            one_minus_sigma,
            sigma: 1.0 - one_minus_sigma,
        }
    }

    pub fn value(&self, xi: f64) -> f64 {
        let y = self.lambda * xi;
        (-y).exp() + self.one_minus_sigma * y.sinh() + y.cos() - self.sigma * y.sin()
    }

    /// Derivative with respect to `xi`.
    pub fn slope(&self, xi: f64) -> f64 {
        let y = self.lambda * xi;
        self.lambda * (-(-y).exp() + self.one_minus_sigma * y.cosh() - y.sin() - self.sigma * y.cos())
    }
}

/// Sign changes of `f` on a uniform grid over `(0, 1)`, each refined by Brent.
fn interior_zeros<F>(f: F, samples: usize, mode: usize) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64,
{
    let mut zeros = Vec::new();
    let h = 1.0 / samples as f64;
    let mut prev_x = 0.0;
    let mut prev_y = f(prev_x);
    for i in 1..=samples {
        let x = i as f64 * h;
        let y = f(x);
        if prev_y == 0.0 && i > 1 {
            zeros.push(prev_x);
        } else if prev_y * y < 0.0 {
            let z = brent(prev_x, x, ROOT_REL_TOL, &f).map_err(|e| Error::Solver {
                mode,
                reason: describe(e),
            })?;
            zeros.push(z);
        }
        prev_x = x;
        prev_y = y;
    }
    Ok(zeros)
}

/// Flexural modes `1..=max_mode` of a free-free beam.
///
/// Mode `n` has `n + 1` nodes and `n` interior antinodes; the free ends are
/// also displacement maxima but are not reported as antinodes.
pub fn beam_free_free_modes(geom: &BeamGeometry, mat: &Material, max_mode: usize) -> Result<ModalResult> {
    geom.validate()?;
    mat.validate()?;
    let mut result = ModalResult::default();
    if geom.thickness_m > geom.length_m / 10.0 {
        result.warnings.push(format!(
            "beam thickness {:.3e} m exceeds length/10; Euler-Bernoulli theory overestimates frequencies",
            geom.thickness_m
        ));
    }
    let stiffness_ratio = (mat.young_modulus_pa * geom.second_moment() / (mat.density_kg_per_m3 * geom.area())).sqrt();
    let l2 = geom.length_m * geom.length_m;
    for n in 1..=max_mode {
        let lambda = free_free_root(n)?;
        let frequency_hz = lambda * lambda / (2.0 * PI * l2) * stiffness_ratio;
        let shape = FreeFreeShape::new(lambda);
        let samples = 64 * (n + 2);
        let node_positions = interior_zeros(|x| shape.value(x), samples, n)?;
        let antinode_positions = interior_zeros(|x| shape.slope(x), samples, n)?
            .into_iter()
            .filter(|x| *x > 0.0 && *x < 1.0)
            .collect();
        result.modes.push(ModeShape {
            mode_index: n,
            frequency_hz,
            node_positions,
            antinode_positions,
        });
    }
    Ok(result)
}

/// Closed-form in-plane flexural frequency of a thin ring for wave number `n`.
pub fn ring_mode_frequency(geom: &RingGeometry, mat: &Material, n: usize) -> f64 {
    let nf = n as f64;
    let r = geom.mean_radius();
    let t = geom.radial_thickness_m;
    // I/A = t²/12 for a rectangular wall, independent of the axial width.
    let ei_over_rho_a = mat.young_modulus_pa * t * t / (12.0 * mat.density_kg_per_m3);
    let omega = nf * (nf * nf - 1.0) / (nf * nf + 1.0).sqrt() * (ei_over_rho_a / r.powi(4)).sqrt();
    omega / (2.0 * PI)
}

/// In-plane flexural modes `2..=max_mode` of a thin ring (`n = 1` is rigid
/// translation). Mode `n` has `2n` nodes and `2n` antinodes, evenly spaced.
pub fn ring_inplane_modes(geom: &RingGeometry, mat: &Material, max_mode: usize) -> Result<ModalResult> {
    geom.validate()?;
    mat.validate()?;
    let mut result = ModalResult::default();
    if geom.radial_thickness_m >= geom.mean_radius() / 5.0 {
        result.warnings.push(format!(
            "ring wall {:.3e} m is not thin relative to mean radius {:.3e} m",
            geom.radial_thickness_m,
            geom.mean_radius()
        ));
    }
    for n in 2..=max_mode {
        let count = 2 * n;
        let spacing = PI / n as f64;
        result.modes.push(ModeShape {
            mode_index: n,
            frequency_hz: ring_mode_frequency(geom, mat, n),
            node_positions: (0..count).map(|k| (k as f64 + 0.5) * spacing).collect(),
            antinode_positions: (0..count).map(|k| k as f64 * spacing).collect(),
        });
    }
    Ok(result)
}

/// Wall thickness inside `[lo, hi]` that puts ring mode `n` at `target_hz`.
pub fn ring_thickness_for_frequency(
    target_hz: f64,
    outer_diameter_m: f64,
    axial_width_m: f64,
    mat: &Material,
    n: usize,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let freq = |t: f64| {
        let geom = RingGeometry {
            outer_diameter_m,
            radial_thickness_m: t,
            axial_width_m,
        };
        ring_mode_frequency(&geom, mat, n) - target_hz
    };
    brent(lo, hi, ROOT_REL_TOL, freq).map_err(|e| Error::Solver {
        mode: n,
        reason: describe(e),
    })
}

/// Steady-state vibration amplitude (m) for drive `voltage` at `frequency_hz`.
///
/// Lorentzian magnitude of a single resonance:
/// `gain·V / sqrt(1 + Q²·(f/f₀ - f₀/f)²)`.
pub fn drive_response(model: &ResonatorModel, voltage: f64, frequency_hz: f64) -> f64 {
    debug_assert!(voltage >= 0.0 && frequency_hz > 0.0);
    let f0 = model.resonance_frequency_hz;
    if frequency_hz == f0 {
        return model.gain_m_per_v * voltage;
    }
    let detuning = frequency_hz / f0 - f0 / frequency_hz;
    let q = model.quality_factor;
    model.gain_m_per_v * voltage / (1.0 + q * q * detuning * detuning).sqrt()
}

/// Samples [`drive_response`] on `steps` evenly spaced frequencies from
/// `f_start` to `f_end` inclusive.
pub fn frequency_sweep(
    model: &ResonatorModel,
    voltage: f64,
    f_start: f64,
    f_end: f64,
    steps: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(f_start > 0.0 && f_start < f_end) {
        return Err(Error::invalid(format!("sweep requires 0 < f_start < f_end, got {f_start}..{f_end}")));
    }
    if steps < 2 {
        return Err(Error::invalid("sweep requires at least two steps"));
    }
    let df = (f_end - f_start) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            let f = if i == steps - 1 { f_end } else { f_start + i as f64 * df };
            (f, drive_response(model, voltage, f))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn slider() -> BeamGeometry {
        BeamGeometry {
            length_m: 0.032,
            width_m: 0.010,
            thickness_m: 0.001,
        }
    }

    fn ring() -> RingGeometry {
        RingGeometry {
            outer_diameter_m: 0.010,
            radial_thickness_m: 0.0008,
            axial_width_m: 0.005,
        }
    }

    #[test]
    fn tabulated_free_free_roots() {
        let expected = [4.7300, 7.8532, 10.9956];
        for (n, want) in expected.iter().enumerate() {
            let got = free_free_root(n + 1).unwrap();
            assert!((got - want).abs() < 1e-4, "mode {}: {got}", n + 1);
        }
    }

    #[test]
    fn slider_mode_frequencies() {
        let res = beam_free_free_modes(&slider(), &Material::STAINLESS_316, 3).unwrap();
        assert!(res.warnings.is_empty());
        let f1 = res.modes[0].frequency_hz;
        let f3 = res.modes[2].frequency_hz;
        assert!((f1 - 4940.0).abs() < 10.0, "{f1}");
        assert!((f3 - 26_680.0).abs() < 30.0, "{f3}");
        assert!((f3 - 21_200.0).abs() / 21_200.0 < 0.30);
    }

    #[test]
    fn zero_modes_requested() {
        let res = beam_free_free_modes(&slider(), &Material::STAINLESS_316, 0).unwrap();
        assert!(res.modes.is_empty());
    }

    #[test]
    fn beam_node_and_antinode_counts() {
        let res = beam_free_free_modes(&slider(), &Material::STAINLESS_316, 6).unwrap();
        for m in &res.modes {
            assert_eq!(m.node_positions.len(), m.mode_index + 1);
            assert_eq!(m.antinode_positions.len(), m.mode_index);
        }
        // Mode 1 nodes sit at the familiar 0.224 L from each end.
        let m1 = &res.modes[0];
        assert_relative_eq!(m1.node_positions[0], 0.2242, epsilon = 1e-4);
        assert_relative_eq!(m1.node_positions[1], 1.0 - 0.2242, epsilon = 1e-4);
    }

    #[test]
    fn nodes_are_zeros_of_shape() {
        for n in 1..=8 {
            let lambda = free_free_root(n).unwrap();
            let shape = FreeFreeShape::new(lambda);
            let peak = (0..=2000).map(|i| shape.value(i as f64 / 2000.0).abs()).fold(0.0, f64::max);
            let res = beam_free_free_modes(&slider(), &Material::STAINLESS_316, n).unwrap();
            for x in &res.modes[n - 1].node_positions {
                assert!(shape.value(*x).abs() < 1e-6 * peak, "mode {n} node {x}");
            }
        }
    }

    #[test]
    fn thick_beam_warns() {
        let geom = BeamGeometry {
            length_m: 0.01,
            width_m: 0.01,
            thickness_m: 0.002,
        };
        let res = beam_free_free_modes(&geom, &Material::STAINLESS_316, 1).unwrap();
        assert_eq!(res.warnings.len(), 1);
    }

    #[test]
    fn ring_second_mode_near_design_value() {
        let res = ring_inplane_modes(&ring(), &Material::STAINLESS_316, 4).unwrap();
        assert!(res.warnings.is_empty());
        let m2 = &res.modes[0];
        assert_eq!(m2.mode_index, 2);
        assert!((m2.frequency_hz - 22_900.0).abs() < 100.0, "{}", m2.frequency_hz);
        assert!((m2.frequency_hz - 22_700.0).abs() / 22_700.0 < 0.10);
        assert_eq!(m2.node_positions.len(), 4);
        assert_eq!(m2.antinode_positions.len(), 4);
    }

    #[test]
    fn ring_modulus_scaling() {
        let mut stiff = Material::STAINLESS_316;
        stiff.young_modulus_pa *= 2.0;
        let base = ring_inplane_modes(&ring(), &Material::STAINLESS_316, 5).unwrap();
        let scaled = ring_inplane_modes(&ring(), &stiff, 5).unwrap();
        for (a, b) in base.modes.iter().zip(&scaled.modes) {
            assert_relative_eq!(b.frequency_hz / a.frequency_hz, 2f64.sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn thick_ring_warns() {
        let geom = RingGeometry {
            outer_diameter_m: 0.010,
            radial_thickness_m: 0.002,
            axial_width_m: 0.005,
        };
        let res = ring_inplane_modes(&geom, &Material::STAINLESS_316, 2).unwrap();
        assert_eq!(res.warnings.len(), 1);
    }

    #[test]
    fn ring_geometry_rejects_solid_disc() {
        let geom = RingGeometry {
            outer_diameter_m: 0.010,
            radial_thickness_m: 0.005,
            axial_width_m: 0.005,
        };
        assert!(matches!(geom.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn drive_response_examples() {
        let flat = ResonatorModel {
            resonance_frequency_hz: 21_400.0,
            quality_factor: 40.0,
            gain_m_per_v: 0.03e-6,
        };
        let ring = ResonatorModel {
            resonance_frequency_hz: 22_900.0,
            quality_factor: 40.0,
            gain_m_per_v: 0.037e-6,
        };
        assert_relative_eq!(drive_response(&flat, 100.0, 21_400.0), 3.0e-6, max_relative = 1e-12);
        assert_relative_eq!(drive_response(&ring, 100.0, 22_900.0), 3.7e-6, max_relative = 1e-12);
        assert_eq!(drive_response(&flat, 0.0, 21_400.0), 0.0);
        assert!(drive_response(&flat, 100.0, 21_500.0) < drive_response(&flat, 100.0, 21_450.0));
    }

    #[test]
    fn sweep_peak_within_one_step() {
        let flat = ResonatorModel {
            resonance_frequency_hz: 21_400.0,
            quality_factor: 40.0,
            gain_m_per_v: 0.03e-6,
        };
        let sweep = frequency_sweep(&flat, 100.0, 20_000.0, 24_000.0, 401).unwrap();
        let (f_peak, _) = sweep.iter().copied().fold((0.0, f64::MIN), |best, s| if s.1 > best.1 { s } else { best });
        assert!((f_peak - 21_400.0).abs() <= 10.0);
    }

    #[test]
    fn sweep_flat_for_vanishing_q() {
        let model = ResonatorModel {
            resonance_frequency_hz: 21_400.0,
            quality_factor: 1e-9,
            gain_m_per_v: 0.03e-6,
        };
        for (_, a) in frequency_sweep(&model, 100.0, 20_000.0, 24_000.0, 41).unwrap() {
            assert_relative_eq!(a, 3.0e-6, max_relative = 1e-12);
        }
    }

    #[test]
    fn sweep_symmetric_in_detuning() {
        let model = ResonatorModel {
            resonance_frequency_hz: 21_400.0,
            quality_factor: 40.0,
            gain_m_per_v: 0.03e-6,
        };
        // f and f0²/f have detuning of equal magnitude and opposite sign.
        for f in [20_000.0, 20_800.0, 21_300.0] {
            let mirror = 21_400.0f64.powi(2) / f;
            assert_relative_eq!(
                drive_response(&model, 80.0, f),
                drive_response(&model, 80.0, mirror),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn sweep_rejects_bad_ranges() {
        let model = ResonatorModel {
            resonance_frequency_hz: 21_400.0,
            quality_factor: 40.0,
            gain_m_per_v: 0.03e-6,
        };
        assert!(frequency_sweep(&model, 1.0, 24_000.0, 20_000.0, 10).is_err());
        assert!(frequency_sweep(&model, 1.0, 20_000.0, 24_000.0, 1).is_err());
    }
}
