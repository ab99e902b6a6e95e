//! One-particle spectral data: 1D Dirac spectra and spectral flow, the
//! conditional-trace cocycle, 3D Weyl blocks, monopole curvature, plaquette
//! Chern numbers and the renormalized lattice curvature sum.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Rational64};
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::{IVec3, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiracError {
    #[error("curvature is singular at b = 0")]
    Singular,
    #[error("point {0:?} lies on the momentum lattice")]
    OnLattice(Vec3),
    #[error("cutoff {cutoff} must exceed |n| + |m| = {needed}")]
    CutoffTooSmall { cutoff: i64, needed: i64 },
    #[error("|b| = {norm} must exceed twice the step {step}")]
    StepTooLarge { norm: f64, step: f64 },
    #[error("plaquette ({i}, {j}) has phase {phase:.4} at the branch boundary; refine the mesh")]
    MeshTooCoarse { i: usize, j: usize, phase: f64 },
    #[error("sphere of radius {radius} around {center:?} passes within {distance:.3e} of a singular point")]
    SphereHitsLattice { center: Vec3, radius: f64, distance: f64 },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("unknown band field `{0}`")]
    UnknownField(String),
    #[error("cutoff list must be strictly increasing and non-empty")]
    Cutoffs,
    #[error("components must be distinct directions in 1..=3, got ({0}, {1})")]
    Component(usize, usize),
}

/// Eigenvalue `p − a_j` of the 1D Dirac operator with its mode label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigen1d {
    pub value: f64,
    pub dir: usize,
    pub p: i64,
}

/// `{p − a_j : |p| ≤ Λ, j = 1,2,3}` sorted by value, then label.
pub fn spectrum_1d(a: Vec3, cutoff: i64) -> Vec<Eigen1d> {
    let mut out = Vec::new();
    for dir in 1..=3 {
        for p in -cutoff..=cutoff {
            out.push(Eigen1d { value: p as f64 - a[dir - 1], dir, p });
        }
    }
    out.sort_by(|x, y| {
        x.value
            .total_cmp(&y.value)
            .then(x.dir.cmp(&y.dir))
            .then(x.p.cmp(&y.p))
    });
    out
}

/// Eigenvalues within this distance above the level count as below it
/// (`H₋` holds the nonpositive modes).
pub const LEVEL_TOLERANCE: f64 = 1e-9;

/// Signed count of eigenvalues `p − a_j(t)` crossing `level` along the
/// sampled path, per direction: `+1` upward, `−1` downward.
pub fn spectral_flow_1d(path: &[Vec3], level: f64) -> IVec3 {
    let mut flow = [0i64; 3];
    if path.len() < 2 {
        return flow;
    }
    let below = |v: f64| v <= level + LEVEL_TOLERANCE;
    for d in 0..3 {
        let lo = path.iter().map(|a| a[d]).fold(f64::INFINITY, f64::min);
        let hi = path.iter().map(|a| a[d]).fold(f64::NEG_INFINITY, f64::max);
        let pmin = (lo + level).floor() as i64 - 1;
        let pmax = (hi + level).ceil() as i64 + 1;
        for p in pmin..=pmax {
            for w in path.windows(2) {
                let (b0, b1) = (below(p as f64 - w[0][d]), below(p as f64 - w[1][d]));
                if b0 && !b1 {
                    flow[d] += 1;
                } else if !b0 && b1 {
                    flow[d] -= 1;
                }
            }
        }
    }
    flow
}

/// Straight path `from → to` with `steps` segments.
pub fn linear_path(from: Vec3, to: Vec3, steps: usize) -> Vec<Vec3> {
    (0..=steps)
        .map(|i| {
            let t = i as f64 / steps as f64;
            [0, 1, 2].map(|d| from[d] + t * (to[d] - from[d]))
        })
        .collect()
}

/// Sign operator on the Fourier basis: `+1` for `p > 0`, `−1` for `p ≤ 0`.
fn epsilon_1d(p: i64) -> i64 {
    if p > 0 {
        1
    } else {
        -1
    }
}

type IMatrix = Vec<Vec<i64>>;

fn imat_mul(x: &IMatrix, y: &IMatrix) -> IMatrix {
    let n = x.len();
    let mut out = vec![vec![0; n]; n];
    for i in 0..n {
        for k in 0..n {
            if x[i][k] == 0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += x[i][k] * y[k][j];
            }
        }
    }
    out
}

fn imat_sub(x: &IMatrix, y: &IMatrix) -> IMatrix {
    x.iter()
        .zip(y)
        .map(|(r, s)| r.iter().zip(s).map(|(a, b)| a - b).collect())
        .collect()
}

fn trace(x: &IMatrix) -> i64 {
    (0..x.len()).map(|i| x[i][i]).sum()
}

/// Multiplication by `e^{inθ}` on the Fourier modes `|p| ≤ Λ`, truncated.
fn fourier_shift(n: i64, cutoff: i64) -> IMatrix {
    let dim = (2 * cutoff + 1) as usize;
    let mut x = vec![vec![0; dim]; dim];
    for p in -cutoff..=cutoff {
        let q = p + n;
        if q.abs() <= cutoff {
            x[(q + cutoff) as usize][(p + cutoff) as usize] = 1;
        }
    }
    x
}

/// `tr_C X[ε, Y]` with `tr_C Z = ½ tr(Z + εZε)` for `X = e^{inθ}`,
/// `Y = e^{imθ}` on the truncated Fourier basis.
pub fn conditional_trace_cocycle(n: i64, m: i64, cutoff: i64) -> Result<Rational64, DiracError> {
    let needed = n.abs() + m.abs();
    if cutoff <= needed {
        return Err(DiracError::CutoffTooSmall { cutoff, needed });
    }
    let dim = (2 * cutoff + 1) as usize;
    let mut eps = vec![vec![0; dim]; dim];
    for p in -cutoff..=cutoff {
        eps[(p + cutoff) as usize][(p + cutoff) as usize] = epsilon_1d(p);
    }
    let x = fourier_shift(n, cutoff);
    let y = fourier_shift(m, cutoff);
    let comm = imat_sub(&imat_mul(&eps, &y), &imat_mul(&y, &eps));
    let z = imat_mul(&x, &comm);
    let eze = imat_mul(&eps, &imat_mul(&z, &eps));
    Ok(Rational64::new(trace(&z) + trace(&eze), 2))
}

pub type Mat2 = [[Complex64; 2]; 2];
pub type Spinor = [Complex64; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `b·σ`.
pub fn pauli_dot(b: Vec3) -> Mat2 {
    [[c(b[2], 0.0), c(b[0], -b[1])], [c(b[0], b[1]), c(-b[2], 0.0)]]
}

pub fn mat_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    let mut out = [[Complex64::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

fn mat_sub(x: &Mat2, y: &Mat2) -> Mat2 {
    [[x[0][0] - y[0][0], x[0][1] - y[0][1]], [x[1][0] - y[1][0], x[1][1] - y[1][1]]]
}

fn mat_trace(x: &Mat2) -> Complex64 {
    x[0][0] + x[1][1]
}

pub fn norm3(b: Vec3) -> f64 {
    (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt()
}

/// `b·σ/|b|`, and the zero matrix at `b = 0`.
pub fn weyl_sign(b: Vec3) -> Mat2 {
    let r = norm3(b);
    if r == 0.0 {
        return [[Complex64::zero(); 2]; 2];
    }
    pauli_dot([b[0] / r, b[1] / r, b[2] / r])
}

/// Whether `λ` avoids `{±|p + a| : p ∈ ℤ³}`, decided in exact arithmetic.
pub fn gap_membership_exact(a: &[BigRational; 3], lambda: &BigRational) -> bool {
    let target = lambda * lambda;
    let reach = lambda
        .abs()
        .ceil()
        .to_integer()
        .try_into()
        .unwrap_or(i64::MAX / 4)
        + 1i64;
    let centers: Vec<i64> = a
        .iter()
        .map(|x| (-x).round().to_integer().try_into().unwrap_or(0))
        .collect();
    for p0 in centers[0] - reach..=centers[0] + reach {
        for p1 in centers[1] - reach..=centers[1] + reach {
            for p2 in centers[2] - reach..=centers[2] + reach {
                let p = [p0, p1, p2];
                let approx: f64 = (0..3)
                    .map(|d| {
                        let x = a[d].to_f64().unwrap_or(f64::MAX) + p[d] as f64;
                        x * x
                    })
                    .sum();
                if (approx - target.to_f64().unwrap_or(f64::MAX)).abs() > 1e-6 * (1.0 + approx) {
                    continue;
                }
                let mut s = BigRational::zero();
                for d in 0..3 {
                    let x = &a[d] + BigRational::from_integer(BigInt::from(p[d]));
                    s += &x * &x;
                }
                if s == target {
                    return false;
                }
            }
        }
    }
    true
}


/// [`gap_membership_exact`] on the exact binary values of `a` and `λ`.
pub fn gap_membership(a: Vec3, lambda: f64) -> bool {
    let exact = a.map(|x| BigRational::from_f64(x).expect("finite coordinate"));
    gap_membership_exact(&exact, &BigRational::from_f64(lambda).expect("finite level"))
}

/// Coefficients `ω_jk` of `Σ_{j<k} ω_jk da_j∧da_k`, stored antisymmetric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub point: Vec3,
    pub omega: [[Complex64; 3]; 3],
}

impl CurvatureSample {
    fn from_vector(point: Vec3, v: [Complex64; 3]) -> Self {
        // v = (ω23, ω31, ω12)
        let z = Complex64::zero();
        CurvatureSample {
            point,
            omega: [[z, v[2], -v[1]], [-v[2], z, v[0]], [v[1], -v[0], z]],
        }
    }

    /// `ω_jk` for directions `j, k ∈ {1,2,3}`.
    pub fn component(&self, j: usize, k: usize) -> Complex64 {
        self.omega[j - 1][k - 1]
    }

    /// `(ω23, ω31, ω12)`, the flux density.
    pub fn vector(&self) -> [Complex64; 3] {
        [self.omega[1][2], self.omega[2][0], self.omega[0][1]]
    }
}

/// `ω⁽¹⁾ = (i/4) Σ ε_ijk b_i da_j∧da_k / |b|³`, a unit monopole at `b = 0`.
pub fn monopole_curvature(b: Vec3) -> Result<CurvatureSample, DiracError> {
    let r = norm3(b);
    if r == 0.0 {
        return Err(DiracError::Singular);
    }
    let k = 0.5 / (r * r * r);
    Ok(CurvatureSample::from_vector(b, b.map(|x| c(0.0, k * x))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Lower,
    Upper,
}

/// Normalized eigenvector of `b·σ`; the lower band has eigenvalue `−|b|`.
pub fn band_spinor(b: Vec3, band: Band) -> Spinor {
    let v = match band {
        Band::Lower => b,
        Band::Upper => b.map(|x| -x),
    };
    let (x, y, z) = (v[0], v[1], v[2]);
    let r = norm3(v);
    let s = if z >= 0.0 {
        [c(-x, y), c(z + r, 0.0)]
    } else {
        [c(r - z, 0.0), c(-x, -y)]
    };
    let n = (s[0].norm_sqr() + s[1].norm_sqr()).sqrt();
    [s[0] / n, s[1] / n]
}

pub fn overlap(u: &Spinor, v: &Spinor) -> Complex64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

fn plaquette_phase(states: [&Spinor; 4]) -> f64 {
    let mut prod = c(1.0, 0.0);
    for i in 0..4 {
        prod *= overlap(states[i], states[(i + 1) % 4]);
    }
    prod.arg()
}

/// Curvature of the vacuum line over `b`, from Pancharatnam phases of the
/// lower band around coordinate squares of side `δ` centred at `b`. The
/// vacuum line is dual to the lower-band line, so `ω = −Ω_lower`.
pub fn berry_curvature_numeric(b: Vec3, delta: f64) -> Result<CurvatureSample, DiracError> {
    berry_curvature_band(b, delta, Band::Lower).map(|s| CurvatureSample {
        omega: s.omega.map(|row| row.map(|x| -x)),
        ..s
    })
}

/// `Ω_jk = i · arg Π⟨ψ|ψ'⟩ / δ²` for the chosen band of `b·σ`.
pub fn berry_curvature_band(b: Vec3, delta: f64, band: Band) -> Result<CurvatureSample, DiracError> {
    let r = norm3(b);
    if r <= 2.0 * delta {
        return Err(DiracError::StepTooLarge { norm: r, step: delta });
    }
    let h = delta / 2.0;
    let mut v = [Complex64::zero(); 3];
    for (slot, (j, k)) in [(1usize, 2usize), (2, 0), (0, 1)].into_iter().enumerate() {
        let corner = |sj: f64, sk: f64| {
            let mut p = b;
            p[j] += sj * h;
            p[k] += sk * h;
            band_spinor(p, band)
        };
        let s = [corner(-1.0, -1.0), corner(1.0, -1.0), corner(1.0, 1.0), corner(-1.0, 1.0)];
        v[slot] = c(0.0, plaquette_phase([&s[0], &s[1], &s[2], &s[3]]) / (delta * delta));
    }
    Ok(CurvatureSample::from_vector(b, v))
}

/// Sphere of radius `radius` around `center` with an `(n_theta, n_phi)` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereMesh {
    pub center: Vec3,
    pub radius: f64,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl SphereMesh {
    pub fn new(center: Vec3, radius: f64, n_theta: usize, n_phi: usize) -> Result<Self, DiracError> {
        if radius <= 0.0 || !radius.is_finite() {
            return Err(DiracError::InvalidMesh(format!("radius {radius}")));
        }
        if n_theta < 2 || n_phi < 3 {
            return Err(DiracError::InvalidMesh(format!("resolution ({n_theta}, {n_phi})")));
        }
        Ok(SphereMesh { center, radius, n_theta, n_phi })
    }

    pub fn refined(&self) -> Self {
        SphereMesh { n_theta: 2 * self.n_theta, n_phi: 2 * self.n_phi, ..*self }
    }

    pub fn point(&self, theta: f64, phi: f64) -> Vec3 {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        [
            self.center[0] + self.radius * st * cp,
            self.center[1] + self.radius * st * sp,
            self.center[2] + self.radius * ct,
        ]
    }
}

/// A family of vacuum lines, given as a product of 2-spinor lines.
pub trait BandField: Send + Sync {
    fn name(&self) -> String;

    /// Spinors whose tensor product spans the line at `a`.
    fn spinors(&self, a: Vec3) -> Vec<Spinor>;

    /// Points where the line is undefined.
    fn singular_points(&self) -> Vec<Vec3>;
}

/// The vacuum line of one momentum `p`: lower band of `(p + a)·σ`.
pub struct MonopoleBand {
    pub p: IVec3,
}

impl BandField for MonopoleBand {
    fn name(&self) -> String {
        format!("monopole band p = {:?}", self.p)
    }

    fn spinors(&self, a: Vec3) -> Vec<Spinor> {
        vec![band_spinor(shifted(self.p, a), Band::Lower)]
    }

    fn singular_points(&self) -> Vec<Vec3> {
        vec![self.p.map(|x| -(x as f64))]
    }
}

/// Tensor product of the vacuum lines of all `|p|_∞ ≤ radius`.
pub struct LatticeVacuum {
    pub radius: i64,
}

impl LatticeVacuum {
    fn momenta(&self) -> Vec<IVec3> {
        let r = self.radius;
        let mut out = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                for z in -r..=r {
                    out.push([x, y, z]);
                }
            }
        }
        out
    }
}

impl BandField for LatticeVacuum {
    fn name(&self) -> String {
        format!("lattice vacuum |p| <= {}", self.radius)
    }

    fn spinors(&self, a: Vec3) -> Vec<Spinor> {
        self.momenta()
            .into_iter()
            .map(|p| band_spinor(shifted(p, a), Band::Lower))
            .collect()
    }

    fn singular_points(&self) -> Vec<Vec3> {
        self.momenta().into_iter().map(|p| p.map(|x| -(x as f64))).collect()
    }
}

fn shifted(p: IVec3, a: Vec3) -> Vec3 {
    [p[0] as f64 + a[0], p[1] as f64 + a[1], p[2] as f64 + a[2]]
}

/// Parameters for building a [`BandField`] by name.
#[derive(Debug, Clone, Copy, Default)]
pub struct FieldParams {
    pub momentum: IVec3,
    pub radius: i64,
}

type FieldFactory = fn(&FieldParams) -> Box<dyn BandField>;

/// Band fields selectable by name.
pub struct BandFieldRegistry {
    factories: BTreeMap<&'static str, FieldFactory>,
}

impl BandFieldRegistry {
    pub fn empty() -> Self {
        BandFieldRegistry { factories: BTreeMap::new() }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register("monopole-band", |p| Box::new(MonopoleBand { p: p.momentum }));
        r.register("lattice-vacuum", |p| Box::new(LatticeVacuum { radius: p.radius }));
        r
    }

    pub fn register(&mut self, name: &'static str, factory: FieldFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, name: &str, params: &FieldParams) -> Result<Box<dyn BandField>, DiracError> {
        self.factories
            .get(name)
            .map(|f| f(params))
            .ok_or_else(|| DiracError::UnknownField(name.to_string()))
    }
}

/// Largest plaquette phase accepted before the mesh is declared too coarse.
pub const BRANCH_GUARD: f64 = 0.75 * PI;

/// Chern number of the field's vacuum line over the sphere, from plaquette
/// phases in `(−π, π]`, outward orientation, dual-line sign as in
/// [`berry_curvature_numeric`].
pub fn sphere_chern(mesh: &SphereMesh, field: &dyn BandField) -> Result<i64, DiracError> {
    for s in field.singular_points() {
        let d = (norm3([s[0] - mesh.center[0], s[1] - mesh.center[1], s[2] - mesh.center[2]]) - mesh.radius).abs();
        if d < 1e-6 * mesh.radius.max(1.0) {
            return Err(DiracError::SphereHitsLattice { center: mesh.center, radius: mesh.radius, distance: d });
        }
    }
    let (nt, np) = (mesh.n_theta, mesh.n_phi);
    let north = field.spinors(mesh.point(0.0, 0.0));
    let south = field.spinors(mesh.point(PI, 0.0));
    let mut rows: Vec<Vec<Vec<Spinor>>> = Vec::with_capacity(nt + 1);
    for i in 0..=nt {
        let theta = PI * i as f64 / nt as f64;
        let row = (0..np)
            .map(|j| {
                if i == 0 {
                    north.clone()
                } else if i == nt {
                    south.clone()
                } else {
                    field.spinors(mesh.point(theta, 2.0 * PI * j as f64 / np as f64))
                }
            })
            .collect();
        rows.push(row);
    }
    let link = |x: &[Spinor], y: &[Spinor]| {
        x.iter().zip(y).fold(c(1.0, 0.0), |acc, (u, v)| acc * overlap(u, v))
    };
    let mut total = 0.0;
    for i in 0..nt {
        for j in 0..np {
            let jn = (j + 1) % np;
            let corners = [&rows[i][j], &rows[i + 1][j], &rows[i + 1][jn], &rows[i][jn]];
            let mut prod = c(1.0, 0.0);
            for k in 0..4 {
                prod *= link(corners[k], corners[(k + 1) % 4]);
            }
            let phase = prod.arg();
            if phase.abs() > BRANCH_GUARD {
                return Err(DiracError::MeshTooCoarse { i, j, phase });
            }
            total += phase;
        }
    }
    Ok((-total / (2.0 * PI)).round() as i64)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `∫_{S²} ω` for a flux density `(ω23, ω31, ω12)`, outward orientation;
/// Gauss–Legendre in `cos θ`, trapezoid in `φ`.
pub fn sphere_flux(
    density: &dyn Fn(Vec3) -> Result<[Complex64; 3], DiracError>,
    center: Vec3,
    radius: f64,
    n_theta: usize,
    n_phi: usize,
) -> Result<Complex64, DiracError> {
    let mut total = Complex64::zero();
    for (x, w) in gauss_legendre(n_theta) {
        let st = (1.0 - x * x).sqrt();
        for j in 0..n_phi {
            let phi = 2.0 * PI * j as f64 / n_phi as f64;
            let normal = [st * phi.cos(), st * phi.sin(), x];
            let point = [0, 1, 2].map(|d| center[d] + radius * normal[d]);
            let v = density(point)?;
            let flux = v[0] * normal[0] + v[1] * normal[1] + v[2] * normal[2];
            total += flux * w * (2.0 * PI / n_phi as f64) * radius * radius;
        }
    }
    Ok(total)
}

/// Flux of `Σ_p ω⁽¹⁾(p + a)` over the given momenta through a sphere.
pub fn monopole_flux(momenta: &[IVec3], center: Vec3, radius: f64, n_theta: usize, n_phi: usize) -> Result<Complex64, DiracError> {
    let density = |a: Vec3| -> Result<[Complex64; 3], DiracError> {
        let mut v = [Complex64::zero(); 3];
        for p in momenta {
            let s = monopole_curvature(shifted(*p, a))?.vector();
            for d in 0..3 {
                v[d] += s[d];
            }
        }
        Ok(v)
    };
    sphere_flux(&density, center, radius, n_theta, n_phi)
}

/// `∂_j (b·σ/|b|)` at `b ≠ 0`.
fn sign_derivative(b: Vec3, j: usize) -> Mat2 {
    let r = norm3(b);
    let n = b.map(|x| x / r);
    let mut d = [0.0; 3];
    for (i, di) in d.iter_mut().enumerate() {
        *di = ((i == j) as u8 as f64 - n[i] * n[j]) / r;
    }
    pauli_dot(d)
}

/// Per-momentum renormalized term `⅛ tr[(F_p − ε_p)(∂_j F_p ∂_k F_p − ∂_k F_p ∂_j F_p)]`
/// with `F_p = weyl_sign(p + a)` and `ε_p = weyl_sign(p)`; directions 1-based.
pub fn renormalized_term(p: IVec3, a: Vec3, j: usize, k: usize) -> Complex64 {
    let b = shifted(p, a);
    let f = weyl_sign(b);
    let eps = weyl_sign(p.map(|x| x as f64));
    let dj = sign_derivative(b, j - 1);
    let dk = sign_derivative(b, k - 1);
    let comm = mat_sub(&mat_mul(&dj, &dk), &mat_mul(&dk, &dj));
    mat_trace(&mat_mul(&mat_sub(&f, &eps), &comm)) * 0.125
}

/// Bare per-momentum term `ω⁽¹⁾_jk(p + a)`.
pub fn bare_term(p: IVec3, a: Vec3, j: usize, k: usize) -> Complex64 {
    monopole_curvature(shifted(p, a))
        .map(|s| s.component(j, k))
        .unwrap_or_default()
}

/// Momenta with `|p|_∞ = s`, lexicographic.
pub fn shell(s: i64) -> Vec<IVec3> {
    let mut out = Vec::new();
    for x in -s..=s {
        for y in -s..=s {
            for z in -s..=s {
                if x.abs().max(y.abs()).max(z.abs()) == s {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialSumSeries {
    pub point: Vec3,
    pub component: (usize, usize),
    pub cutoffs: Vec<i64>,
    pub bare: Vec<Complex64>,
    pub renormalized: Vec<Complex64>,
}

impl PartialSumSeries {
    /// `|S_{i+1} − S_i|` for consecutive cutoffs.
    pub fn increments(values: &[Complex64]) -> Vec<f64> {
        values.windows(2).map(|w| (w[1] - w[0]).norm()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("Lambda,bare_re,bare_im,renorm_re,renorm_im\n");
        for (i, l) in self.cutoffs.iter().enumerate() {
            out.push_str(&format!(
                "{l},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.bare[i].re, self.bare[i].im, self.renormalized[i].re, self.renormalized[i].im
            ));
        }
        out
    }
}

/// Successive increments decrease with every ratio below this bound.
pub const CAUCHY_RATIO: f64 = 0.9;

/// Whether the increments shrink monotonically with ratio `< CAUCHY_RATIO`.
pub fn is_cauchy(increments: &[f64]) -> bool {
    increments.len() >= 2 && increments.windows(2).all(|w| w[1] < CAUCHY_RATIO * w[0])
}

fn check_component(j: usize, k: usize) -> Result<(), DiracError> {
    if j == k || !(1..=3).contains(&j) || !(1..=3).contains(&k) {
        return Err(DiracError::Component(j, k));
    }
    Ok(())
}

fn on_lattice(a: Vec3) -> bool {
    a.iter().all(|x| x.fract() == 0.0)
}

/// Partial sums over cube shells `|p|_∞ ≤ Λ` of the renormalized and bare
/// curvature component `(j, k)` at `a`.
pub fn renormalized_curvature(a: Vec3, cutoffs: &[i64], component: (usize, usize)) -> Result<PartialSumSeries, DiracError> {
    let (j, k) = component;
    check_component(j, k)?;
    if on_lattice(a) {
        return Err(DiracError::OnLattice(a));
    }
    if cutoffs.is_empty() || cutoffs.windows(2).any(|w| w[1] <= w[0]) || cutoffs[0] < 0 {
        return Err(DiracError::Cutoffs);
    }
    let mut bare = Complex64::zero();
    let mut renorm = Complex64::zero();
    let mut series = PartialSumSeries {
        point: a,
        component,
        cutoffs: cutoffs.to_vec(),
        bare: Vec::new(),
        renormalized: Vec::new(),
    };
    let mut next = 0;
    for s in 0..=*cutoffs.last().expect("non-empty") {
        for p in shell(s) {
            bare += bare_term(p, a, j, k);
            renorm += renormalized_term(p, a, j, k);
        }
        if s == cutoffs[next] {
            series.bare.push(bare);
            series.renormalized.push(renorm);
            next += 1;
        }
    }
    Ok(series)
}

/// Renormalized field `(ω23, ω31, ω12)` summed to `|p|_∞ ≤ cutoff`.
pub fn renormalized_field(a: Vec3, cutoff: i64) -> [Complex64; 3] {
    let mut v = [Complex64::zero(); 3];
    for s in 0..=cutoff {
        for p in shell(s) {
            v[0] += renormalized_term(p, a, 2, 3);
            v[1] += renormalized_term(p, a, 3, 1);
            v[2] += renormalized_term(p, a, 1, 2);
        }
    }
    v
}

/// Central-difference divergence of the renormalized field, i.e. the
/// coefficient of `dω`.
pub fn renormalized_divergence(a: Vec3, cutoff: i64, step: f64) -> Complex64 {
    let mut div = Complex64::zero();
    for d in 0..3 {
        let mut plus = a;
        let mut minus = a;
        plus[d] += step;
        minus[d] -= step;
        div += (renormalized_field(plus, cutoff)[d] - renormalized_field(minus, cutoff)[d]) / (2.0 * step);
    }
    div
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(x: Complex64, y: Complex64, tol: f64) -> bool {
        (x - y).norm() < tol
    }

    #[test]
    fn spectrum_examples() {
        let s = spectrum_1d([0.0; 3], 2);
        assert_eq!(s.len(), 15);
        for v in -2..=2 {
            assert_eq!(s.iter().filter(|e| e.value == v as f64).count(), 3);
        }
        let h = spectrum_1d([0.5, 0.0, 0.0], 2);
        assert!(h.iter().filter(|e| e.dir == 1).all(|e| (e.value - e.value.floor() - 0.5).abs() < 1e-15));
    }

    #[test]
    fn spectrum_is_lattice_periodic_as_a_set() {
        let base: Vec<f64> = spectrum_1d([0.0; 3], 4).iter().filter(|e| e.p.abs() < 4).map(|e| e.value).collect();
        let moved = spectrum_1d([1.0, 0.0, 0.0], 5);
        for v in base {
            assert!(moved.iter().any(|e| e.value == v));
        }
    }

    #[test]
    fn spectral_flow_examples() {
        assert_eq!(spectral_flow_1d(&linear_path([0.0; 3], [1.0, 0.0, 0.0], 64), 0.0), [-1, 0, 0]);
        assert_eq!(spectral_flow_1d(&linear_path([0.3; 3], [0.3; 3], 10), 0.0), [0, 0, 0]);
        assert_eq!(spectral_flow_1d(&linear_path([0.0; 3], [2.0, 0.0, 0.0], 64), 0.0), [-2, 0, 0]);
        assert_eq!(spectral_flow_1d(&linear_path([0.0; 3], [0.0, 0.0, -1.0], 7), 0.0), [0, 0, 1]);
    }

    #[test]
    fn spectral_flow_is_resolution_independent() {
        let coarse = spectral_flow_1d(&linear_path([0.2, 0.0, 0.0], [1.2, 1.0, 0.0], 5), 0.0);
        let fine = spectral_flow_1d(&linear_path([0.2, 0.0, 0.0], [1.2, 1.0, 0.0], 500), 0.0);
        assert_eq!(coarse, fine);
    }

    #[test]
    fn conditional_trace_small_cases() {
        assert_eq!(conditional_trace_cocycle(2, 3, 10).unwrap(), Rational64::from_integer(0));
        assert_eq!(conditional_trace_cocycle(0, 0, 10).unwrap(), Rational64::from_integer(0));
        assert!(matches!(conditional_trace_cocycle(2, 3, 5), Err(DiracError::CutoffTooSmall { .. })));
    }

    #[test]
    fn conditional_trace_matches_hand_count() {
        // Λ = 2, n = 1, m = −1: [ε, Y] e_p = (ε_{p−1} − ε_p) e_{p−1}, nonzero only at
        // p = 1 where it is −2; X brings e_0 back to e_1, so tr Z = −2 = tr εZε.
        assert_eq!(conditional_trace_cocycle(1, -1, 3).unwrap(), Rational64::from_integer(-2));
    }

    #[test]
    fn weyl_sign_examples() {
        let s = weyl_sign([0.0, 0.0, 1.0]);
        assert_eq!(s, pauli_dot([0.0, 0.0, 1.0]));
        assert_eq!(weyl_sign([0.0; 3]), [[Complex64::zero(); 2]; 2]);
        let b = [0.3, -1.2, 0.7];
        let sq = mat_mul(&weyl_sign(b), &weyl_sign(b));
        assert!(close(sq[0][0], c(1.0, 0.0), 1e-15) && close(sq[0][1], c(0.0, 0.0), 1e-15));
    }

    #[test]
    fn gap_examples() {
        assert!(gap_membership([0.5, 0.5, 0.5], 0.0));
        assert!(!gap_membership([1.0, -2.0, 0.0], 0.0));
        let third = BigRational::new(1.into(), 3.into());
        let zero = BigRational::zero();
        for i in 0..20 {
            for j in 0..20 {
                for k in 0..20 {
                    let a = [i, j, k].map(|x| BigRational::new(x.into(), 20.into()));
                    assert!(gap_membership_exact(&a, &zero) || gap_membership_exact(&a, &third));
                }
            }
        }
    }

    #[test]
    fn gap_detects_exact_level() {
        // |(0,0,1/3) + 0| = 1/3
        let a = [0, 0, 1].map(|x| BigRational::new(x.into(), 3.into()));
        assert!(!gap_membership_exact(&a, &BigRational::new(1.into(), 3.into())));
    }

    #[test]
    fn monopole_closed_form() {
        let s = monopole_curvature([0.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.component(1, 2), c(0.0, 0.5));
        assert_eq!(s.component(2, 3), Complex64::zero());
        assert_eq!(s.component(3, 1), Complex64::zero());
        assert_eq!(s.component(2, 1), c(0.0, -0.5));
        assert_eq!(monopole_curvature([0.0; 3]), Err(DiracError::Singular));
    }

    #[test]
    fn monopole_flux_values() {
        let f = monopole_flux(&[[0, 0, 0]], [0.0; 3], 0.5, 24, 48).unwrap();
        assert!(close(f, c(0.0, 2.0 * PI), 1e-8), "{f}");
        let g = monopole_flux(&[[0, 0, 0]], [2.0, 0.0, 0.0], 0.5, 24, 48).unwrap();
        assert!(g.norm() < 1e-8, "{g}");
    }

    #[test]
    fn berry_matches_closed_form() {
        let b = [0.0, 0.0, 1.0];
        let num = berry_curvature_numeric(b, 1e-3).unwrap();
        let exact = monopole_curvature(b).unwrap();
        let rel = (num.component(1, 2) - exact.component(1, 2)).norm() / exact.component(1, 2).norm();
        assert!(rel < 1e-6, "relative error {rel}");
    }

    #[test]
    fn berry_band_swap_symmetry() {
        let b = [0.4, -0.3, 0.8];
        let lower = berry_curvature_band(b, 1e-3, Band::Lower).unwrap();
        let upper = berry_curvature_band(b, 1e-3, Band::Upper).unwrap();
        let lower_flipped = berry_curvature_band(b.map(|x| -x), 1e-3, Band::Lower).unwrap();
        let upper_flipped = berry_curvature_band(b.map(|x| -x), 1e-3, Band::Upper).unwrap();
        for (j, k) in [(1, 2), (2, 3), (3, 1)] {
            assert!(close(lower.component(j, k), -upper.component(j, k), 1e-9));
            assert!(close(lower.component(j, k), -lower_flipped.component(j, k), 1e-9));
            assert!(close(lower.component(j, k), upper_flipped.component(j, k), 1e-9));
        }
    }

    #[test]
    fn berry_rejects_large_step() {
        assert!(matches!(berry_curvature_numeric([0.001, 0.0, 0.0], 1e-3), Err(DiracError::StepTooLarge { .. })));
    }

    #[test]
    fn sphere_chern_examples() {
        let band = MonopoleBand { p: [0, 0, 0] };
        let m = SphereMesh::new([0.0; 3], 0.4, 16, 32).unwrap();
        assert_eq!(sphere_chern(&m, &band).unwrap(), 1);
        let off = SphereMesh::new([0.5; 3], 0.4, 16, 32).unwrap();
        assert_eq!(sphere_chern(&off, &band).unwrap(), 0);
        let wider = SphereMesh::new([0.0; 3], 0.45, 16, 32).unwrap();
        assert_eq!(sphere_chern(&wider, &band).unwrap(), 1);
    }

    #[test]
    fn lattice_vacuum_counts_enclosed_points() {
        let field = LatticeVacuum { radius: 1 };
        let m = SphereMesh::new([0.5, 0.0, 0.0], 0.8, 24, 48).unwrap();
        assert_eq!(sphere_chern(&m, &field).unwrap(), 2);
    }

    #[test]
    fn renormalized_single_term_is_monopole() {
        let a = [0.3, 0.4, 0.5];
        let s = monopole_curvature(a).unwrap();
        for (j, k) in [(1, 2), (2, 3), (3, 1)] {
            assert!(close(renormalized_term([0, 0, 0], a, j, k), s.component(j, k), 1e-15));
        }
        let series = renormalized_curvature(a, &[0], (1, 2)).unwrap();
        assert_eq!(series.renormalized[0], renormalized_term([0, 0, 0], a, 1, 2));
    }

    #[test]
    fn renormalized_rejects_lattice_points() {
        assert!(matches!(renormalized_curvature([1.0, 0.0, 2.0], &[1, 2], (1, 2)), Err(DiracError::OnLattice(_))));
    }

    #[test]
    fn shells_partition_the_cube() {
        let total: usize = (0..=3).map(|s| shell(s).len()).sum();
        assert_eq!(total, 7 * 7 * 7);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let q = gauss_legendre(5);
        let int: f64 = q.iter().map(|(x, w)| w * x.powi(8)).sum();
        assert!((int - 2.0 / 9.0).abs() < 1e-14);
    }
}
