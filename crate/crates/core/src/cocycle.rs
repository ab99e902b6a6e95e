//! 2-cocycles of the transformation groupoid `ℝ³ × ℤ³ → ℝ³`.
//!
//! Convention, used by every cocycle here:
//!
//! ```text
//! C(a; n, m) · C(a; n+m, p) = C(a−n; m, p) · C(a; n, m+p)
//! δb(a; n, m) = b(a; n) · b(a−n; m) / b(a; n+m)
//! ```
//!
//! which is what `(g(n)Ψ)(a) = U_n(a−n) Ψ(a−n)` produces.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::{IVec3, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    #[error("tensor input: {0}")]
    Schema(String),
    #[error("cocycle is not of exponential type: {0}")]
    NotExponential(String),
    #[error("truncation boundary reached: {0}")]
    Truncation(String),
    #[error("ratio is not state independent (spread {0:.3e})")]
    Proportionality(f64),
    #[error("unknown cocycle source `{0}`")]
    UnknownSource(String),
    #[error("source `{source_name}` needs parameter `{param}`")]
    MissingParameter { source_name: String, param: String },
    #[error(transparent)]
    Fock(#[from] crate::fock::FockError),
}

/// A `U(1)`-valued groupoid 2-cocycle evaluated at sample points.
pub trait Cocycle: Send + Sync {
    fn name(&self) -> String;

    fn eval(&self, a: Vec3, n: IVec3, m: IVec3) -> Result<Complex64, CocycleError>;

    /// Whether `(n, m)` lies in the range where the evaluator is defined.
    fn admits(&self, _n: IVec3, _m: IVec3) -> bool {
        true
    }

    /// Component range `[−r, r]` of shifts drawn by [`check_cocycle`].
    fn shift_range(&self) -> i64 {
        2
    }
}

pub fn add(n: IVec3, m: IVec3) -> IVec3 {
    [n[0] + m[0], n[1] + m[1], n[2] + m[2]]
}

pub fn shift(a: Vec3, n: IVec3) -> Vec3 {
    [a[0] - n[0] as f64, a[1] - n[1] as f64, a[2] - n[2] as f64]
}

pub fn det3(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

pub fn idet3(a: IVec3, b: IVec3, c: IVec3) -> i64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

pub fn as_real(n: IVec3) -> Vec3 {
    [n[0] as f64, n[1] as f64, n[2] as f64]
}

/// `e^{2πi x}` after reducing `x` mod 1.
pub fn phase(x: f64) -> Complex64 {
    let r = x - x.round();
    Complex64::from_polar(1.0, 2.0 * PI * r)
}

/// Integer 3-tensor `S[j][k][l]` generating `e^{2πi Σ S_jkl a_j n_k m_l}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CocycleTensor {
    pub s: [[[i64; 3]; 3]; 3],
}

/// Sign of the permutation `(i, j, k)` of `(0, 1, 2)`, 0 on repeats.
pub fn levi_civita(i: usize, j: usize, k: usize) -> i64 {
    if i == j || j == k || i == k {
        0
    } else if (i, j, k) == (0, 1, 2) || (i, j, k) == (1, 2, 0) || (i, j, k) == (2, 0, 1) {
        1
    } else {
        -1
    }
}

impl CocycleTensor {
    pub fn zero() -> Self {
        CocycleTensor { s: [[[0; 3]; 3]; 3] }
    }

    pub fn levi_civita() -> Self {
        Self::from_fn(levi_civita_i)
    }

    pub fn from_fn(f: impl Fn(usize, usize, usize) -> i64) -> Self {
        let mut t = Self::zero();
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    t.s[j][k][l] = f(j, k, l);
                }
            }
        }
        t
    }

    pub fn scaled(&self, k: i64) -> Self {
        Self::from_fn(|j, kk, l| k * self.s[j][kk][l])
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self::from_fn(|j, k, l| self.s[j][k][l] + other.s[j][k][l])
    }

    pub fn entries(&self) -> Vec<i64> {
        self.s.iter().flatten().flatten().copied().collect()
    }

    pub fn from_entries(entries: &[i64]) -> Result<Self, CocycleError> {
        if entries.len() != 27 {
            return Err(CocycleError::Schema(format!(
                "expected 27 entries, found {} (first missing position {})",
                entries.len(),
                entries.len().min(27)
            )));
        }
        Ok(Self::from_fn(|j, k, l| entries[9 * j + 3 * k + l]))
    }

    /// Parses a JSON array of 27 integers, row-major in `(j, k, l)`.
    pub fn from_json(text: &str) -> Result<Self, CocycleError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CocycleError::Schema(format!("invalid JSON: {e}")))?;
        let arr = value
            .as_array()
            .ok_or_else(|| CocycleError::Schema("top-level value must be an array".into()))?;
        let mut entries = Vec::with_capacity(arr.len());
        for (pos, v) in arr.iter().enumerate() {
            let x = v.as_i64().ok_or_else(|| {
                CocycleError::Schema(format!("entry at position {pos} is not an integer: {v}"))
            })?;
            entries.push(x);
        }
        Self::from_entries(&entries)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.entries()).expect("integers serialize")
    }

    /// `Σ_k,l S_jkl n_k m_l` for each `j`.
    fn contract(&self, n: IVec3, m: IVec3) -> IVec3 {
        let mut out = [0i64; 3];
        for (j, o) in out.iter_mut().enumerate() {
            for k in 0..3 {
                for l in 0..3 {
                    *o += self.s[j][k][l] * n[k] * m[l];
                }
            }
        }
        out
    }

    /// `Σ S_jkl a_j n_k m_l`.
    pub fn exponent(&self, a: Vec3, n: IVec3, m: IVec3) -> f64 {
        let c = self.contract(n, m);
        a[0] * c[0] as f64 + a[1] * c[1] as f64 + a[2] * c[2] as f64
    }

    pub fn exponent_exact(&self, a: &[BigRational; 3], n: IVec3, m: IVec3) -> BigRational {
        let c = self.contract(n, m);
        (0..3).fold(BigRational::zero(), |acc, j| {
            acc + &a[j] * BigRational::from_integer(BigInt::from(c[j]))
        })
    }

    /// `Σ S_jkl n_j m_k p_l`, the integer by which the cocycle identity's
    /// exponents differ.
    pub fn integer_form(&self, n: IVec3, m: IVec3, p: IVec3) -> i64 {
        let c = self.contract(m, p);
        n[0] * c[0] + n[1] * c[1] + n[2] * c[2]
    }

    /// `(1/6) Σ ε_jkl S_jkl`.
    pub fn antisymmetric_part(&self) -> BigRational {
        let mut total = 0i64;
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    total += levi_civita(j, k, l) * self.s[j][k][l];
                }
            }
        }
        BigRational::new(BigInt::from(total), BigInt::from(6))
    }
}

fn levi_civita_i(j: usize, k: usize, l: usize) -> i64 {
    levi_civita(j, k, l)
}

/// `e^{2πi Σ S_jkl a_j n_k m_l}` together with its exponent.
pub fn eval_exp_cocycle(s: &CocycleTensor, a: Vec3, n: IVec3, m: IVec3) -> (Complex64, f64) {
    let x = s.exponent(a, n, m);
    (phase(x), x)
}

#[derive(Debug, Clone)]
pub struct TensorCocycle {
    pub tensor: CocycleTensor,
    pub label: String,
}

impl TensorCocycle {
    pub fn new(tensor: CocycleTensor) -> Self {
        TensorCocycle {
            tensor,
            label: format!("tensor {}", tensor.to_json()),
        }
    }

    /// The generator `e^{2πi a∧n∧m}`.
    pub fn reference() -> Self {
        TensorCocycle {
            tensor: CocycleTensor::levi_civita(),
            label: "exp(2πi a∧n∧m)".into(),
        }
    }
}

impl Cocycle for TensorCocycle {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn eval(&self, a: Vec3, n: IVec3, m: IVec3) -> Result<Complex64, CocycleError> {
        Ok(eval_exp_cocycle(&self.tensor, a, n, m).0)
    }
}

type Evaluator = dyn Fn(Vec3, IVec3, IVec3) -> Complex64 + Send + Sync;
type Cochain = dyn Fn(Vec3, IVec3) -> Complex64 + Send + Sync;

/// A cocycle given by an arbitrary evaluator.
#[derive(Clone)]
pub struct SampledCocycle {
    pub description: String,
    evaluator: Arc<Evaluator>,
}

impl SampledCocycle {
    pub fn new(
        description: impl Into<String>,
        f: impl Fn(Vec3, IVec3, IVec3) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        SampledCocycle {
            description: description.into(),
            evaluator: Arc::new(f),
        }
    }

    pub fn constant() -> Self {
        Self::new("constant 1", |_, _, _| Complex64::new(1.0, 0.0))
    }
}

impl Cocycle for SampledCocycle {
    fn name(&self) -> String {
        self.description.clone()
    }

    fn eval(&self, a: Vec3, n: IVec3, m: IVec3) -> Result<Complex64, CocycleError> {
        Ok((self.evaluator)(a, n, m))
    }
}

/// `δb` for a `U(1)`-valued 1-cochain `b(a; n)`.
pub fn coboundary(
    description: impl Into<String>,
    b: impl Fn(Vec3, IVec3) -> Complex64 + Send + Sync + 'static,
) -> SampledCocycle {
    let b: Arc<Cochain> = Arc::new(b);
    SampledCocycle::new(format!("coboundary of {}", description.into()), move |a, n, m| {
        b(a, n) * b(shift(a, n), m) / b(a, add(n, m))
    })
}

/// A smooth random 1-cochain `b(a; n) = e^{2πi φ(a, n)}` with
/// `φ(a, n) = Σ c_jk a_j n_k + d (n·w) sin(2π a·v) + e(n)`.
pub fn random_cochain(seed: u64) -> impl Fn(Vec3, IVec3) -> Complex64 + Send + Sync + Clone + 'static {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = [[0.0f64; 3]; 3];
    for row in c.iter_mut() {
        for x in row.iter_mut() {
            *x = rng.gen_range(-1.5..1.5);
        }
    }
    let d: f64 = rng.gen_range(-0.3..0.3);
    let w: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let v: [i64; 3] = [rng.gen_range(-1..=1), rng.gen_range(-1..=1), rng.gen_range(-1..=1)];
    let e: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
    move |a: Vec3, n: IVec3| {
        let mut x = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                x += c[j][k] * a[j] * n[k] as f64;
            }
        }
        let nw = n[0] as f64 * w[0] + n[1] as f64 * w[1] + n[2] as f64 * w[2];
        let av = a[0] * v[0] as f64 + a[1] * v[1] as f64 + a[2] * v[2] as f64;
        x += d * nw * (2.0 * PI * av).sin();
        x += e[0] * (n[0] * n[0]) as f64 + e[1] * (n[1] * n[2]) as f64 + e[2] * n[2] as f64 + e[3];
        phase(x)
    }
}

/// Pointwise product of cocycles.
pub struct ProductCocycle {
    pub factors: Vec<Box<dyn Cocycle>>,
}

impl Cocycle for ProductCocycle {
    fn name(&self) -> String {
        let names: Vec<String> = self.factors.iter().map(|c| c.name()).collect();
        names.join(" · ")
    }

    fn eval(&self, a: Vec3, n: IVec3, m: IVec3) -> Result<Complex64, CocycleError> {
        self.factors
            .iter()
            .try_fold(Complex64::new(1.0, 0.0), |acc, c| Ok(acc * c.eval(a, n, m)?))
    }

    fn admits(&self, n: IVec3, m: IVec3) -> bool {
        self.factors.iter().all(|c| c.admits(n, m))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CocycleCheck {
    pub holds: bool,
    pub max_deviation: f64,
    pub trials: usize,
    pub tolerance: f64,
}

pub const COCYCLE_TOLERANCE: f64 = 1e-12;

fn random_ivec(rng: &mut ChaCha8Rng, r: i64) -> IVec3 {
    [rng.gen_range(-r..=r), rng.gen_range(-r..=r), rng.gen_range(-r..=r)]
}

fn random_point(rng: &mut ChaCha8Rng) -> Vec3 {
    [rng.gen(), rng.gen(), rng.gen()]
}

/// Randomized check of the cocycle identity at `a ∈ [0,1)³`.
pub fn check_cocycle(c: &dyn Cocycle, trials: usize, seed: u64) -> Result<CocycleCheck, CocycleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_dev: f64 = 0.0;
    let mut done = 0;
    let mut attempts = 0;
    while done < trials {
        attempts += 1;
        if attempts > 100 * trials.max(1) {
            return Err(CocycleError::Truncation(
                "no admissible (n, m, p) found for the cocycle check".into(),
            ));
        }
        let a = random_point(&mut rng);
        let r = c.shift_range();
        let n = random_ivec(&mut rng, r);
        let m = random_ivec(&mut rng, r);
        let p = random_ivec(&mut rng, r);
        let nm = add(n, m);
        let mp = add(m, p);
        if !(c.admits(n, m) && c.admits(nm, p) && c.admits(m, p) && c.admits(n, mp)) {
            continue;
        }
        let lhs = c.eval(a, n, m)? * c.eval(a, nm, p)?;
        let rhs = c.eval(shift(a, n), m, p)? * c.eval(a, n, mp)?;
        max_dev = max_dev.max((lhs - rhs).norm());
        done += 1;
    }
    Ok(CocycleCheck {
        holds: max_dev < COCYCLE_TOLERANCE,
        max_deviation: max_dev,
        trials,
        tolerance: COCYCLE_TOLERANCE,
    })
}

/// Parameter-path step used for phase unwrapping.
pub const UNWRAP_STEP: f64 = 1.0 / 64.0;

/// `(1/2πi) log C(a; n, m)` continued along `t ↦ t·a` from the principal
/// branch at `a = 0`.
pub fn unwrapped_exponent(c: &dyn Cocycle, a: Vec3, n: IVec3, m: IVec3) -> Result<f64, CocycleError> {
    let at = |t: f64| [t * a[0], t * a[1], t * a[2]];
    let mut prev = c.eval([0.0; 3], n, m)?;
    let mut s = prev.arg() / (2.0 * PI);
    let steps = (1.0 / UNWRAP_STEP).round() as usize;
    for i in 0..steps {
        let (t0, t1) = (i as f64 * UNWRAP_STEP, (i + 1) as f64 * UNWRAP_STEP);
        s += advance(c, &at, t0, t1, &mut prev, n, m, 0)?;
    }
    Ok(s)
}

#[allow(clippy::too_many_arguments)]
fn advance(
    c: &dyn Cocycle,
    at: &dyn Fn(f64) -> Vec3,
    t0: f64,
    t1: f64,
    prev: &mut Complex64,
    n: IVec3,
    m: IVec3,
    depth: u32,
) -> Result<f64, CocycleError> {
    let next = c.eval(at(t1), n, m)?;
    let jump = (next / *prev).arg();
    if jump.abs() <= PI / 2.0 {
        *prev = next;
        return Ok(jump / (2.0 * PI));
    }
    if depth >= 20 {
        return Err(CocycleError::NotExponential(format!(
            "phase of C(·; {n:?}, {m:?}) is discontinuous near t = {t0}"
        )));
    }
    let mid = 0.5 * (t0 + t1);
    let first = advance(c, at, t0, mid, prev, n, m, depth + 1)?;
    Ok(first + advance(c, at, mid, t1, prev, n, m, depth + 1)?)
}

/// `(δs)(a; n, m, p)` for the unwrapped exponent `s`.
pub fn delta_log(c: &dyn Cocycle, a: Vec3, n: IVec3, m: IVec3, p: IVec3) -> Result<f64, CocycleError> {
    Ok(unwrapped_exponent(c, a, n, m)? + unwrapped_exponent(c, a, add(n, m), p)?
        - unwrapped_exponent(c, shift(a, n), m, p)?
        - unwrapped_exponent(c, a, n, add(m, p))?)
}

fn serialize_rational<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DDReport {
    #[serde(serialize_with = "serialize_rational")]
    pub raw: BigRational,
    pub class_int: Option<i64>,
    pub calibration: String,
    /// `Σ_σ sign(σ) (δs)(e_σ1, e_σ2, e_σ3)` before any normalization.
    pub fundamental_pairing: i64,
    pub max_integrality_error: f64,
    pub max_sample_spread: f64,
}

/// Points at which `δs` is evaluated; it must agree at all of them.
pub const DD_SAMPLE_POINTS: [Vec3; 3] = [[0.0, 0.0, 0.0], [0.37, -0.21, 0.55], [-0.6, 0.3, 0.15]];

/// Allowed distance of `δs` from an integer and spread across sample points.
pub const DD_TOLERANCE: f64 = 1e-6;

const PERMUTATIONS: [([usize; 3], i64); 6] = [
    ([0, 1, 2], 1),
    ([1, 2, 0], 1),
    ([2, 0, 1], 1),
    ([1, 0, 2], -1),
    ([0, 2, 1], -1),
    ([2, 1, 0], -1),
];

fn unit(i: usize) -> IVec3 {
    let mut e = [0; 3];
    e[i] = 1;
    e
}

/// Antisymmetrized integer pairing of `δs` with the fundamental cycle of `ℤ³`,
/// plus integrality and spread diagnostics.
pub fn fundamental_pairing(c: &dyn Cocycle) -> Result<(i64, f64, f64), CocycleError> {
    let mut total = 0i64;
    let mut max_int_err: f64 = 0.0;
    let mut max_spread: f64 = 0.0;
    for (perm, sign) in PERMUTATIONS {
        let (n, m, p) = (unit(perm[0]), unit(perm[1]), unit(perm[2]));
        for (x, y) in [(n, m), (add(n, m), p), (m, p), (n, add(m, p))] {
            if !c.admits(x, y) {
                return Err(CocycleError::Truncation(format!(
                    "cocycle not defined at n = {x:?}, m = {y:?}"
                )));
            }
        }
        let values = DD_SAMPLE_POINTS
            .iter()
            .map(|a| delta_log(c, *a, n, m, p))
            .collect::<Result<Vec<f64>, _>>()?;
        let v0 = values[0];
        let rounded = v0.round();
        for v in &values {
            max_int_err = max_int_err.max((v - v.round()).abs());
            max_spread = max_spread.max((v - v0).abs());
        }
        if max_int_err > DD_TOLERANCE {
            return Err(CocycleError::NotExponential(format!(
                "δ log C is not integral (error {max_int_err:.3e})"
            )));
        }
        if max_spread > DD_TOLERANCE {
            return Err(CocycleError::NotExponential(format!(
                "δ log C depends on a (spread {max_spread:.3e})"
            )));
        }
        total += sign * rounded.to_i64().expect("small integer");
    }
    Ok((total, max_int_err, max_spread))
}

/// Dixmier–Douady class relative to the generator `e^{2πi a∧n∧m}`.
pub fn dd_class(c: &dyn Cocycle) -> Result<DDReport, CocycleError> {
    let (pairing, int_err, spread) = fundamental_pairing(c)?;
    let (reference, _, _) = fundamental_pairing(&TensorCocycle::reference())?;
    let raw = BigRational::new(BigInt::from(pairing), BigInt::from(reference));
    let class_int = raw.is_integer().then(|| raw.to_integer().to_i64().expect("small"));
    Ok(DDReport {
        raw,
        class_int,
        calibration: format!(
            "exp(2πi a∧n∧m) has class 1 (its antisymmetrized δ log pairing is {reference})"
        ),
        fundamental_pairing: pairing,
        max_integrality_error: int_err,
        max_sample_spread: spread,
    })
}

/// Midpoint quadrature of `∫_{T³} a ∧ dX ∧ dY` for `X = n·x`, `Y = m·x`.
pub fn continuum_reduction(a: Vec3, n: IVec3, m: IVec3, grid: usize) -> f64 {
    let grid = grid.max(2);
    let h = 1.0 / grid as f64;
    let dx = as_real(n);
    let dy = as_real(m);
    let mut total = 0.0;
    for _i in 0..grid {
        for _j in 0..grid {
            for _k in 0..grid {
                total += det3(a, dx, dy) * h * h * h;
            }
        }
    }
    total
}

/// The `ℓ²` model of the projective representation: sections `ψ_N(a)` with
/// charge `N ∈ [−N_max, N_max]` and `(g(n)ψ)_N(a) = e^{2πi N a∧p∧n} ψ_{N−q·n}(a−n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelRepParams {
    pub p: IVec3,
    pub q: IVec3,
    pub n_max: i64,
    pub seed: u64,
}

impl ModelRepParams {
    pub fn new(p: IVec3, q: IVec3) -> Self {
        ModelRepParams { p, q, n_max: 12, seed: 7 }
    }

    fn qdot(&self, n: IVec3) -> i64 {
        self.q[0] * n[0] + self.q[1] * n[1] + self.q[2] * n[2]
    }

    /// Charges at which products `g(n)g(m)` can be compared without
    /// leaving the truncated basis.
    fn test_charges(&self, n: IVec3, m: IVec3) -> Option<i64> {
        let reach = self.qdot(n).abs() + self.qdot(m).abs();
        let room = self.n_max - reach;
        (room >= 2).then_some(room)
    }
}

type Section = Arc<dyn Fn(i64, Vec3) -> Complex64 + Send + Sync>;

fn test_section(seed: u64, n_max: i64) -> Section {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, f64, [f64; 3])> = (-n_max..=n_max)
        .map(|_| {
            (
                rng.gen_range(0.5..1.5),
                rng.gen::<f64>(),
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            )
        })
        .collect();
    Arc::new(move |charge: i64, a: Vec3| {
        if charge.abs() > n_max {
            return Complex64::new(0.0, 0.0);
        }
        let (r, ph, w) = coeffs[(charge + n_max) as usize];
        let mod_ = r * (1.0 + 0.3 * (2.0 * PI * (w[0] * a[0] + w[1] * a[1])).cos());
        Complex64::from_polar(mod_, 2.0 * PI * (ph + w[2] * a[2]))
    })
}

fn apply_g(params: &ModelRepParams, n: IVec3, psi: Section) -> Section {
    let p = as_real(params.p);
    let nr = as_real(n);
    let qn = params.qdot(n);
    let n_max = params.n_max;
    Arc::new(move |charge: i64, a: Vec3| {
        let src = charge - qn;
        if src.abs() > n_max || charge.abs() > n_max {
            return Complex64::new(0.0, 0.0);
        }
        phase(charge as f64 * det3(a, p, nr)) * psi(src, shift(a, n))
    })
}

/// Ratio `g(n)g(m)ψ / g(n+m)ψ` at `a`, checked to be common to several
/// test sections and charges.
pub fn model_rep_cocycle(params: &ModelRepParams, a: Vec3, n: IVec3, m: IVec3) -> Result<Complex64, CocycleError> {
    let room = params.test_charges(n, m).ok_or_else(|| {
        CocycleError::Truncation(format!(
            "|q·n| + |q·m| leaves no room below N_max = {} for n = {n:?}, m = {m:?}",
            params.n_max
        ))
    })?;
    let charges: Vec<i64> = (-room.min(2)..=room.min(2)).collect();
    let mut ratios = Vec::new();
    for k in 0..2u64 {
        let psi = test_section(params.seed.wrapping_add(k), params.n_max);
        let lhs = apply_g(params, n, apply_g(params, m, psi.clone()));
        let rhs = apply_g(params, add(n, m), psi);
        for &charge in &charges {
            let l = lhs(charge, a);
            let r = rhs(charge, a);
            if r.norm() < 1e-9 {
                return Err(CocycleError::Truncation(format!("vanishing component at charge {charge}")));
            }
            ratios.push(l / r);
        }
    }
    let first = ratios[0];
    let spread = ratios.iter().map(|r| (r - first).norm()).fold(0.0, f64::max);
    if spread > 1e-10 {
        return Err(CocycleError::Proportionality(spread));
    }
    Ok(first)
}

/// The closed form of the model cocycle: `e^{−2πi (q·n) a∧p∧m}`.
pub fn model_rep_closed_form(params: &ModelRepParams, a: Vec3, n: IVec3, m: IVec3) -> Complex64 {
    phase(-(params.qdot(n) as f64) * det3(a, as_real(params.p), as_real(m)))
}

pub struct ModelRepCocycle {
    pub params: ModelRepParams,
}

impl Cocycle for ModelRepCocycle {
    fn name(&self) -> String {
        format!("model representation p = {:?}, q = {:?}", self.params.p, self.params.q)
    }

    fn eval(&self, a: Vec3, n: IVec3, m: IVec3) -> Result<Complex64, CocycleError> {
        model_rep_cocycle(&self.params, a, n, m)
    }

    fn admits(&self, n: IVec3, m: IVec3) -> bool {
        self.params.test_charges(n, m).is_some()
    }
}

/// Parameters a [`CocycleSource`] may draw on.
#[derive(Debug, Clone, Default)]
pub struct SourceParams {
    pub tensor: Option<CocycleTensor>,
    pub alpha: Option<IVec3>,
    pub beta: Option<IVec3>,
    pub p: Option<IVec3>,
    pub q: Option<IVec3>,
    pub scale: Option<i64>,
    pub seed: u64,
    pub cutoff: Option<i64>,
    pub margin: Option<i64>,
}

fn require<T: Copy>(v: Option<T>, source: &str, param: &str) -> Result<T, CocycleError> {
    v.ok_or_else(|| CocycleError::MissingParameter {
        source_name: source.into(),
        param: param.into(),
    })
}

/// A named way of producing a cocycle from parameters.
pub trait CocycleSource: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn build(&self, params: &SourceParams) -> Result<Box<dyn Cocycle>, CocycleError>;
}

struct TensorSource;
struct LeviCivitaSource;
struct CoboundarySource;
struct FockSource;
struct ModelRepSource;

impl CocycleSource for TensorSource {
    fn name(&self) -> &'static str {
        "tensor"
    }
    fn summary(&self) -> &'static str {
        "exp(2πi Σ S_jkl a_j n_k m_l) for a 27-entry integer tensor"
    }
    fn build(&self, params: &SourceParams) -> Result<Box<dyn Cocycle>, CocycleError> {
        Ok(Box::new(TensorCocycle::new(require(params.tensor, self.name(), "tensor")?)))
    }
}

impl CocycleSource for LeviCivitaSource {
    fn name(&self) -> &'static str {
        "levi-civita"
    }
    fn summary(&self) -> &'static str {
        "k · exp(2πi a∧n∧m), scale k defaults to 1"
    }
    fn build(&self, params: &SourceParams) -> Result<Box<dyn Cocycle>, CocycleError> {
        let k = params.scale.unwrap_or(1);
        Ok(Box::new(TensorCocycle::new(CocycleTensor::levi_civita().scaled(k))))
    }
}

impl CocycleSource for CoboundarySource {
    fn name(&self) -> &'static str {
        "coboundary"
    }
    fn summary(&self) -> &'static str {
        "δb for a smooth random 1-cochain b drawn from the seed"
    }
    fn build(&self, params: &SourceParams) -> Result<Box<dyn Cocycle>, CocycleError> {
        Ok(Box::new(coboundary(
            format!("random cochain (seed {})", params.seed),
            random_cochain(params.seed),
        )))
    }
}

impl CocycleSource for FockSource {
    fn name(&self) -> &'static str {
        "fock"
    }
    fn summary(&self) -> &'static str {
        "cocycle measured on the truncated Fock space for twist (alpha, beta)"
    }
    fn build(&self, params: &SourceParams) -> Result<Box<dyn Cocycle>, CocycleError> {
        let alpha = require(params.alpha, self.name(), "alpha")?;
        let beta = require(params.beta, self.name(), "beta")?;
        let cutoff = crate::fock::CutoffConfig::new(
            params.cutoff.unwrap_or(crate::fock::DEFAULT_CUTOFF),
            params.margin.unwrap_or(crate::fock::DEFAULT_MARGIN),
        )?;
        Ok(Box::new(crate::fock::FockCocycle::new(alpha, beta, cutoff)))
    }
}

impl CocycleSource for ModelRepSource {
    fn name(&self) -> &'static str {
        "model-rep"
    }
    fn summary(&self) -> &'static str {
        "cocycle of the l2 model representation for (p, q)"
    }
    fn build(&self, params: &SourceParams) -> Result<Box<dyn Cocycle>, CocycleError> {
        let mut mp = ModelRepParams::new(require(params.p, self.name(), "p")?, require(params.q, self.name(), "q")?);
        mp.seed = params.seed;
        Ok(Box::new(ModelRepCocycle { params: mp }))
    }
}

/// Cocycle sources selectable by name.
pub struct CocycleRegistry {
    sources: BTreeMap<&'static str, Box<dyn CocycleSource>>,
}

impl CocycleRegistry {
    pub fn empty() -> Self {
        CocycleRegistry { sources: BTreeMap::new() }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(TensorSource));
        r.register(Box::new(LeviCivitaSource));
        r.register(Box::new(CoboundarySource));
        r.register(Box::new(FockSource));
        r.register(Box::new(ModelRepSource));
        r
    }

    pub fn register(&mut self, source: Box<dyn CocycleSource>) {
        self.sources.insert(source.name(), source);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.sources.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn CocycleSource, CocycleError> {
        self.sources
            .get(name)
            .map(|s| s.as_ref())
            .ok_or_else(|| CocycleError::UnknownSource(name.to_string()))
    }

    pub fn build(&self, name: &str, params: &SourceParams) -> Result<Box<dyn Cocycle>, CocycleError> {
        self.get(name)?.build(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn levi_civita_half_shift_gives_minus_one() {
        let (z, x) = eval_exp_cocycle(&CocycleTensor::levi_civita(), [0.5, 0.0, 0.0], [0, 1, 0], [0, 0, 1]);
        assert_eq!(x, 0.5);
        assert!((z - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        let exact = CocycleTensor::levi_civita().exponent_exact(&[r(1, 2), r(0, 1), r(0, 1)], [0, 1, 0], [0, 0, 1]);
        assert_eq!(exact, r(1, 2));
    }

    #[test]
    fn zero_shift_and_integer_points_are_trivial() {
        let s = CocycleTensor::from_fn(|j, k, l| (j * 9 + k * 3 + l) as i64 - 13);
        let (z, _) = eval_exp_cocycle(&s, [0.3, 0.7, -0.2], [0, 0, 0], [1, 2, 3]);
        assert!((z - 1.0).norm() < 1e-15);
        let eps = CocycleTensor::levi_civita();
        for n in [[1, 0, 2], [-1, 3, 1]] {
            let (z, _) = eval_exp_cocycle(&eps, [2.0, -1.0, 5.0], n, [0, 1, -2]);
            assert!((z - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_cocycle_passes_check() {
        let chk = check_cocycle(&SampledCocycle::constant(), 50, 1).unwrap();
        assert!(chk.holds && chk.max_deviation == 0.0);
    }

    #[test]
    fn half_integer_tensor_fails_check() {
        let c = SampledCocycle::new("half", |a: Vec3, n: IVec3, m: IVec3| {
            phase(a[0] * (n[0] * m[0]) as f64 / 2.0)
        });
        // n = m = p = e₁ directly: exponent difference is 1/2.
        let e1 = [1, 0, 0];
        let lhs = c.eval([0.2, 0.0, 0.0], e1, e1).unwrap() * c.eval([0.2, 0.0, 0.0], [2, 0, 0], e1).unwrap();
        let rhs = c.eval([-0.8, 0.0, 0.0], e1, e1).unwrap() * c.eval([0.2, 0.0, 0.0], e1, [2, 0, 0]).unwrap();
        assert!((lhs + rhs).norm() < 1e-12);
        assert!(!check_cocycle(&c, 200, 3).unwrap().holds);
    }

    #[test]
    fn trivial_cochain_gives_constant_cocycle() {
        let c = coboundary("one", |_, _| Complex64::new(1.0, 0.0));
        assert_eq!(c.eval([0.1, 0.2, 0.3], [1, 0, 0], [0, 1, 0]).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn linear_cochain_has_zero_class() {
        let c = coboundary("exp(2πi a·n)", |a, n| phase(a[0] * n[0] as f64 + a[1] * n[1] as f64 + a[2] * n[2] as f64));
        assert!(check_cocycle(&c, 100, 5).unwrap().holds);
        assert_eq!(dd_class(&c).unwrap().class_int, Some(0));
    }

    #[test]
    fn generator_has_class_one() {
        let rep = dd_class(&TensorCocycle::reference()).unwrap();
        assert_eq!(rep.raw, r(1, 1));
        assert_eq!(rep.class_int, Some(1));
        assert_eq!(rep.fundamental_pairing, 6);
    }

    #[test]
    fn symmetric_tensor_has_zero_class() {
        let s = CocycleTensor::from_fn(|j, k, l| ((j + 1) * (k + 1) * (l + 1)) as i64);
        assert_eq!(dd_class(&TensorCocycle::new(s)).unwrap().class_int, Some(0));
    }

    #[test]
    fn single_entry_tensor_is_flagged_rational() {
        let mut s = CocycleTensor::zero();
        s.s[0][1][2] = 1;
        let rep = dd_class(&TensorCocycle::new(s)).unwrap();
        assert_eq!(rep.raw, r(1, 6));
        assert_eq!(rep.class_int, None);
        assert_eq!(rep.raw, s.antisymmetric_part());
    }

    #[test]
    fn non_exponential_cocycle_is_rejected() {
        let c = SampledCocycle::new("quadratic", |a: Vec3, n: IVec3, m: IVec3| {
            phase(a[0] * a[0] * (n[1] * m[2]) as f64)
        });
        assert!(matches!(dd_class(&c), Err(CocycleError::NotExponential(_))));
    }

    #[test]
    fn continuum_reduction_examples() {
        assert!((continuum_reduction([1.0, 0.0, 0.0], [0, 1, 0], [0, 0, 1], 4) - 1.0).abs() < 1e-12);
        assert_eq!(continuum_reduction([0.3, 0.2, 0.9], [1, 2, 0], [2, 4, 0], 4), 0.0);
        assert!(continuum_reduction([0.5, 1.0 / 3.0, 0.0], [1, 0, 0], [0, 1, 0], 4).abs() < 1e-12);
    }

    #[test]
    fn tensor_json_round_trip_and_errors() {
        let s = CocycleTensor::from_fn(|j, k, l| (j as i64 - k as i64) * (l as i64 + 1));
        assert_eq!(CocycleTensor::from_json(&s.to_json()).unwrap(), s);
        let short = serde_json::to_string(&vec![0; 26]).unwrap();
        let err = CocycleTensor::from_json(&short).unwrap_err().to_string();
        assert!(err.contains("position 26"), "{err}");
        let bad = r#"[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,"x"]"#;
        assert!(CocycleTensor::from_json(bad).unwrap_err().to_string().contains("position 26"));
    }

    #[test]
    fn model_rep_matches_closed_form() {
        let params = ModelRepParams::new([0, 0, 1], [0, 1, 1]);
        for (a, n, m) in [
            ([0.3, -0.2, 0.7], [1, 0, 0], [0, 1, 0]),
            ([0.11, 0.5, 0.25], [0, 1, -1], [1, 1, 0]),
            ([-0.4, 0.9, 0.05], [2, 1, 0], [0, -1, 1]),
        ] {
            let got = model_rep_cocycle(&params, a, n, m).unwrap();
            assert!((got - model_rep_closed_form(&params, a, n, m)).norm() < 1e-10);
        }
        let z = model_rep_cocycle(&params, [0.3, 0.2, 0.1], [0, 0, 0], [1, 2, 0]).unwrap();
        assert!((z - 1.0).norm() < 1e-12);
    }

    #[test]
    fn model_rep_truncation_is_reported() {
        let mut params = ModelRepParams::new([0, 0, 1], [0, 0, 5]);
        params.n_max = 8;
        assert!(matches!(
            model_rep_cocycle(&params, [0.0; 3], [0, 0, 1], [0, 0, 1]),
            Err(CocycleError::Truncation(_))
        ));
    }

    #[test]
    fn registry_lists_sources() {
        let reg = CocycleRegistry::standard();
        assert_eq!(reg.names(), vec!["coboundary", "fock", "levi-civita", "model-rep", "tensor"]);
        assert!(matches!(reg.build("nope", &SourceParams::default()), Err(CocycleError::UnknownSource(_))));
        assert!(matches!(
            reg.build("tensor", &SourceParams::default()),
            Err(CocycleError::MissingParameter { .. })
        ));
    }
}
