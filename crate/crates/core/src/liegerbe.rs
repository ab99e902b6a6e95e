//! The gerbe 2-form on `su(2)`: `θ_Z(X, Y) = (k/4π²) ⟨X, h(ad_Z) Y⟩` with
//! `h(z) = (sinh z − z)/z²`, and its integral over the adjoint orbit of
//! `2π h_α`.
//!
//! Coordinates are taken in the basis `{h, x, y}` with
//! `[h,x] = 2y`, `[h,y] = −2x`, `[x,y] = 2h` and `⟨·,·⟩ = 2 (dot product)`,
//! so `ad_Z = 2 [z]_×`. The fundamental representation is
//! `h = iσ₃`, `x = iσ₂`, `y = iσ₁`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Rational64;
use serde::Serialize;
use thiserror::Error;

use crate::dirac::{mat_mul, Mat2};
use crate::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("e^s and e^t differ by {0:.3e}; no morphism s -> t")]
    NotAMorphism(f64),
    #[error("mesh must be at least (2, 2), got ({0}, {1})")]
    Mesh(usize, usize),
}

/// Coordinates `(z₁, z₂, z₃)` of `z₁ h + z₂ x + z₃ y`.
pub type SuTwoVector = Vec3;
pub type AdMatrix = [[f64; 3]; 3];

/// Below this eigenvalue magnitude `h(ad_Z)` is summed as a series.
pub const SERIES_THRESHOLD: f64 = 1e-3;

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `⟨X, Y⟩`, normalized so `⟨h, h⟩ = 2`.
pub fn pairing(x: SuTwoVector, y: SuTwoVector) -> f64 {
    2.0 * dot(x, y)
}

pub fn bracket(z: SuTwoVector, w: SuTwoVector) -> SuTwoVector {
    cross(z, w).map(|c| 2.0 * c)
}

/// `[Z, W]` on rational coordinates.
pub fn bracket_exact(z: [Rational64; 3], w: [Rational64; 3]) -> [Rational64; 3] {
    let two = Rational64::from_integer(2);
    [
        two * (z[1] * w[2] - z[2] * w[1]),
        two * (z[2] * w[0] - z[0] * w[2]),
        two * (z[0] * w[1] - z[1] * w[0]),
    ]
}

pub fn pairing_exact(x: [Rational64; 3], y: [Rational64; 3]) -> Rational64 {
    Rational64::from_integer(2) * (x[0] * y[0] + x[1] * y[1] + x[2] * y[2])
}

pub fn ad_matrix(z: SuTwoVector) -> AdMatrix {
    [
        [0.0, -2.0 * z[2], 2.0 * z[1]],
        [2.0 * z[2], 0.0, -2.0 * z[0]],
        [-2.0 * z[1], 2.0 * z[0], 0.0],
    ]
}

fn mat3_mul(a: &AdMatrix, b: &AdMatrix) -> AdMatrix {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mat3_apply(a: &AdMatrix, v: Vec3) -> Vec3 {
    [dot(a[0], v), dot(a[1], v), dot(a[2], v)]
}

/// `h(z) = (sinh z − z)/z²` at `z = iθ`, which is `i(θ − sin θ)/θ²`.
fn h_imaginary(theta: f64) -> Complex64 {
    Complex64::new(0.0, (theta - theta.sin()) / (theta * theta))
}

/// `h(ad_Z)`, by spectral projectors of `ad_Z` (eigenvalues `0, ±iθ`,
/// `θ = 2|z|`) or by its Taylor series near `Z = 0`.
pub fn h_of_ad(z: SuTwoVector) -> AdMatrix {
    let k = ad_matrix(z);
    let theta = 2.0 * dot(z, z).sqrt();
    if theta < SERIES_THRESHOLD {
        let k2 = mat3_mul(&k, &k);
        let k3 = mat3_mul(&k2, &k);
        let k5 = mat3_mul(&k3, &k2);
        let k7 = mat3_mul(&k5, &k2);
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = k[i][j] / 6.0 + k3[i][j] / 120.0 + k5[i][j] / 5040.0 + k7[i][j] / 362880.0;
            }
        }
        return out;
    }
    let kc = k.map(|r| r.map(|x| Complex64::new(x, 0.0)));
    let k2 = mat3_mul(&k, &k);
    let i_theta = Complex64::new(0.0, theta);
    let norm = Complex64::new(-2.0 * theta * theta, 0.0);
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            // P± = K(K ± iθ) / (−2θ²)
            let p_plus = (k2[i][j] + i_theta * kc[i][j]) / norm;
            let p_minus = (k2[i][j] - i_theta * kc[i][j]) / norm;
            let v = h_imaginary(theta) * p_plus + h_imaginary(-theta) * p_minus;
            out[i][j] = v.re;
        }
    }
    out
}

/// `θ_Z(X, Y) = (k/4π²) ⟨X, h(ad_Z) Y⟩`.
pub fn theta_form(z: SuTwoVector, x: SuTwoVector, y: SuTwoVector, k: i64) -> f64 {
    k as f64 / (4.0 * PI * PI) * pairing(x, mat3_apply(&h_of_ad(z), y))
}

/// Orientation of the orbit sphere used by [`orbit_integral`]: the frame
/// `(∂_φ, ∂_θ)`, i.e. the inward normal.
pub const ORBIT_ORIENTATION: &str = "(d/dphi, d/dtheta)";

/// Midpoint-rule integral of `θ` over the orbit of `2π h`, the coordinate
/// sphere of radius `2π` (`⟨Z, Z⟩ = 8π²`), parametrized by spherical angles.
pub fn orbit_integral(k: i64, n_theta: usize, n_phi: usize) -> Result<f64, LieError> {
    if n_theta < 2 || n_phi < 2 {
        return Err(LieError::Mesh(n_theta, n_phi));
    }
    if k == 0 {
        return Ok(0.0);
    }
    let r = 2.0 * PI;
    let (dt, dp) = (PI / n_theta as f64, 2.0 * PI / n_phi as f64);
    let mut total = 0.0;
    for i in 0..n_theta {
        let t = (i as f64 + 0.5) * dt;
        let (st, ct) = t.sin_cos();
        for j in 0..n_phi {
            let p = (j as f64 + 0.5) * dp;
            let (sp, cp) = p.sin_cos();
            let z = [r * st * cp, r * st * sp, r * ct];
            let d_theta = [r * ct * cp, r * ct * sp, -r * st];
            let d_phi = [-r * st * sp, r * st * cp, 0.0];
            total += theta_form(z, d_phi, d_theta, k) * dt * dp;
        }
    }
    Ok(total)
}

/// `exp(z₁h + z₂x + z₃y)` in the fundamental representation.
pub fn exp_fundamental(z: SuTwoVector) -> Mat2 {
    // i(z₁σ₃ + z₂σ₂ + z₃σ₁) = i w·σ with w = (z₃, z₂, z₁)
    let w = [z[2], z[1], z[0]];
    let r = dot(w, w).sqrt();
    let (s, c) = r.sin_cos();
    let f = if r == 0.0 { 1.0 } else { s / r };
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    [
        [one * c + i * f * w[2], i * f * Complex64::new(w[0], -w[1])],
        [i * f * Complex64::new(w[0], w[1]), one * c - i * f * w[2]],
    ]
}

fn mat2_distance(a: &Mat2, b: &Mat2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

const IDENTITY: Mat2 = [
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
];

#[derive(Debug, Clone, Serialize)]
pub struct GroupoidMorphism {
    pub source: SuTwoVector,
    pub target: SuTwoVector,
    /// `g(x) = e^{−xs} e^{xt}` at `x = i/(samples−1)`.
    pub samples: Vec<Mat2>,
    pub closure_error: f64,
    /// Winding of the `(0,0)` entry when the loop stays diagonal.
    pub torus_winding: Option<i64>,
}

/// The loop `g(x) = e^{−xs} e^{xt}` of a morphism `s → t`.
pub fn exp_morphism(s: SuTwoVector, t: SuTwoVector, samples: usize) -> Result<GroupoidMorphism, LieError> {
    let gap = mat2_distance(&exp_fundamental(s), &exp_fundamental(t));
    if gap >= 1e-10 {
        return Err(LieError::NotAMorphism(gap));
    }
    let n = samples.max(2);
    let g: Vec<Mat2> = (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            mat_mul(&exp_fundamental(s.map(|c| -x * c)), &exp_fundamental(t.map(|c| x * c)))
        })
        .collect();
    let closure_error = mat2_distance(&g[0], &IDENTITY).max(mat2_distance(&g[n - 1], &IDENTITY));
    let diagonal = g.iter().all(|m| m[0][1].norm() < 1e-12 && m[1][0].norm() < 1e-12);
    let torus_winding = diagonal.then(|| {
        let mut total = 0.0;
        for w in g.windows(2) {
            total += (w[1][0][0] / w[0][0][0]).arg();
        }
        (total / (2.0 * PI)).round() as i64
    });
    Ok(GroupoidMorphism { source: s, target: t, samples: g, closure_error, torus_winding })
}
