//! Reference solvers that share no code path with the closed forms they
//! check: periodic quadrature for the squeeze-film mean pressure and a
//! finite-difference eigensolver for the free-free beam.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::resonator::{BeamGeometry, Material};

/// `(1/2π)∮ dθ / (1 + ε cos θ)` by the trapezoidal rule on `points` nodes.
///
/// The integrand is smooth and periodic, so the rule converges
/// geometrically in `points`.
pub fn mean_inverse_gap_quadrature(eps: f64, points: usize) -> f64 {
    let h = 2.0 * PI / points as f64;
    (0..points).map(|k| 1.0 / (1.0 + eps * (k as f64 * h).cos())).sum::<f64>() / points as f64
}

/// Symmetric pentadiagonal matrix stored by diagonals.
struct Penta {
    d0: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl Penta {
    fn mul(&self, x: &[f64], out: &mut [f64]) {
        let n = self.d0.len();
        for i in 0..n {
            let mut s = self.d0[i] * x[i];
            if i + 1 < n {
                s += self.d1[i] * x[i + 1];
            }
            if i + 2 < n {
                s += self.d2[i] * x[i + 2];
            }
            if i >= 1 {
                s += self.d1[i - 1] * x[i - 1];
            }
            if i >= 2 {
                s += self.d2[i - 2] * x[i - 2];
            }
            out[i] = s;
        }
    }

    /// In-place banded Cholesky, returning the lower factor by diagonals.
    fn cholesky(&self) -> Penta {
        let n = self.d0.len();
        let mut l0 = vec![0.0; n];
        let mut l1 = vec![0.0; n];
        let mut l2 = vec![0.0; n];
        for i in 0..n {
            if i >= 2 {
                l2[i - 2] = self.d2[i - 2] / l0[i - 2];
            }
            if i >= 1 {
                let mut s = self.d1[i - 1];
                if i >= 2 {
                    s -= l2[i - 2] * l1[i - 2];
                }
                l1[i - 1] = s / l0[i - 1];
            }
            let mut s = self.d0[i];
            if i >= 1 {
                s -= l1[i - 1] * l1[i - 1];
            }
            if i >= 2 {
                s -= l2[i - 2] * l2[i - 2];
            }
            assert!(s > 0.0, "shifted beam operator is not positive definite");
            l0[i] = s.sqrt();
        }
        Penta { d0: l0, d1: l1, d2: l2 }
    }

    /// Solves `L Lᵀ x = b` for a factor produced by [`Penta::cholesky`].
    fn solve_factored(&self, b: &mut [f64]) {
        let n = self.d0.len();
        for i in 0..n {
            let mut s = b[i];
            if i >= 1 {
                s -= self.d1[i - 1] * b[i - 1];
            }
            if i >= 2 {
                s -= self.d2[i - 2] * b[i - 2];
            }
            b[i] = s / self.d0[i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.d1[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.d2[i] * b[i + 2];
            }
            b[i] = s / self.d0[i];
        }
    }
}

/// Lowest `count` flexural eigenvalues `(βL)⁴` of the free-free beam
/// operator `w'''' = λ w` on `[0, 1]`, discretised with `intervals` equal
/// steps.
///
/// Free ends (`w'' = w''' = 0`) are imposed with ghost points; scaling the
/// two boundary rows by one half gives a symmetric stiffness `K` and a
/// diagonal mass `M = diag(½, 1, …, 1, ½)`. The two rigid-body modes sit at
/// zero and are dropped. Eigenpairs come from subspace iteration on
/// `(K + M)⁻¹ M` followed by a Rayleigh-Ritz projection.
pub fn fd_free_free_eigenvalues(intervals: usize, count: usize) -> Vec<f64> {
    assert!(intervals >= 8, "need at least 8 intervals");
    let n = intervals + 1;
    let h = 1.0 / intervals as f64;
    let scale = 1.0 / h.powi(4);

    let mut d0 = vec![6.0; n];
    let mut d1 = vec![-4.0; n - 1];
    let d2 = vec![1.0; n - 2];
    d0[0] = 1.0;
    d0[1] = 5.0;
    d0[n - 1] = 1.0;
    d0[n - 2] = 5.0;
    d1[0] = -2.0;
    d1[n - 2] = -2.0;
    let stiffness = Penta {
        d0: d0.iter().map(|v| v * scale).collect(),
        d1: d1.iter().map(|v| v * scale).collect(),
        d2: d2.iter().map(|v| v * scale).collect(),
    };
    let mut mass = vec![1.0; n];
    mass[0] = 0.5;
    mass[n - 1] = 0.5;

    let shifted = Penta {
        d0: stiffness.d0.iter().zip(&mass).map(|(k, m)| k + m).collect(),
        d1: stiffness.d1.clone(),
        d2: stiffness.d2.clone(),
    };
    let factor = shifted.cholesky();

    let p = count + 2 + 4;
    let mut basis: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let x = i as f64 * h;
                    (PI * j as f64 * x).cos() + 0.1 * x * (j as f64 + 1.0)
                })
                .collect()
        })
        .collect();

    let mut ritz = Vec::new();
    let mut tmp = vec![0.0; n];
    for _ in 0..40 {
        for v in basis.iter_mut() {
            for i in 0..n {
                v[i] *= mass[i];
            }
            factor.solve_factored(v);
        }
        // Rayleigh-Ritz on span(basis).
        let mut kr = DMatrix::<f64>::zeros(p, p);
        let mut mr = DMatrix::<f64>::zeros(p, p);
        let mut kv: Vec<Vec<f64>> = Vec::with_capacity(p);
        for v in &basis {
            stiffness.mul(v, &mut tmp);
            kv.push(tmp.clone());
        }
        for a in 0..p {
            for b in 0..p {
                kr[(a, b)] = (0..n).map(|i| basis[a][i] * kv[b][i]).sum();
                mr[(a, b)] = (0..n).map(|i| basis[a][i] * mass[i] * basis[b][i]).sum();
            }
        }
        let kr = (&kr + kr.transpose()) * 0.5;
        let mr = (&mr + mr.transpose()) * 0.5;
        let chol = mr.cholesky().expect("Ritz mass matrix is positive definite");
        let l_inv = chol.l().try_inverse().expect("invertible Cholesky factor");
        let reduced = &l_inv * &kr * l_inv.transpose();
        let eig = SymmetricEigen::new((&reduced + reduced.transpose()) * 0.5);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let coeffs = l_inv.transpose() * &eig.eigenvectors;
        let new_basis: Vec<Vec<f64>> = order
            .iter()
            .map(|&c| (0..n).map(|i| (0..p).map(|a| basis[a][i] * coeffs[(a, c)]).sum()).collect())
            .collect();
        basis = new_basis;
        ritz = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    }
    ritz.into_iter().skip(2).take(count).collect()
}

/// Free-free beam frequencies (Hz) for modes `1..=count` from the
/// finite-difference operator.
pub fn fd_beam_frequencies(geom: &BeamGeometry, mat: &Material, intervals: usize, count: usize) -> Vec<f64> {
    let area = geom.width_m * geom.thickness_m;
    let inertia = geom.width_m * geom.thickness_m.powi(3) / 12.0;
    let c = (mat.young_modulus_pa * inertia / (mat.density_kg_per_m3 * area)).sqrt();
    fd_free_free_eigenvalues(intervals, count)
        .into_iter()
        .map(|lam| lam.sqrt() * c / (2.0 * PI * geom.length_m * geom.length_m))
        .collect()
}
