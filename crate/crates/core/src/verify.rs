//! Acceptance criteria as named, runnable checks.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Rational64};
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::cocycle::{
    self, check_cocycle, coboundary, dd_class, random_cochain, CocycleError, CocycleTensor, ModelRepCocycle,
    ModelRepParams, TensorCocycle,
};
use crate::dirac::{
    self, berry_curvature_numeric, conditional_trace_cocycle, linear_path, monopole_curvature, monopole_flux,
    renormalized_curvature, sphere_chern, spectral_flow_1d, BandFieldRegistry, DiracError, FieldParams,
    PartialSumSeries, SphereMesh,
};
use crate::exform::{
    self, alpha_hat, beta_hat, circle_bundle_character, circle_bundle_character_numeric, circle_frame, dd_three_form,
    gcd_realizability, spectral_flow_form, torus_frame, Form, FormError, IndexNormalization,
};
use crate::fock::{check_covariance, CutoffConfig, FockCocycle, FockError, TwistParams};
use crate::liegerbe::{orbit_integral, LieError};
use crate::{IVec3, Vec3};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Dirac(#[from] DiracError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error("unknown criterion `{0}`")]
    UnknownCriterion(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Profile {
    pub quick: bool,
    pub seed: u64,
}

impl Profile {
    pub fn full(seed: u64) -> Self {
        Profile { quick: false, seed }
    }

    pub fn quick(seed: u64) -> Self {
        Profile { quick: true, seed }
    }

    fn pick<T>(&self, full: T, quick: T) -> T {
        if self.quick {
            quick
        } else {
            full
        }
    }
}

impl Default for Profile {
    fn default() -> Self {
        Profile::full(20240)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: Value,
    pub expected: Value,
    pub tolerance: Option<f64>,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, value: Value, expected: Value, tolerance: Option<f64>) -> Self {
        Check { name: name.into(), pass, value, expected, tolerance }
    }

    fn exact(name: impl Into<String>, value: Value, expected: Value) -> Self {
        let pass = value == expected;
        Check::new(name, pass, value, expected, None)
    }

    fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check::new(name, value < tolerance, json!(value), json!(0.0), Some(tolerance))
    }

    fn runtime(limit_secs: f64, elapsed: Duration) -> Self {
        Check::new(
            format!("runtime < {limit_secs} s"),
            elapsed.as_secs_f64() < limit_secs,
            json!(elapsed.as_secs_f64() < limit_secs),
            json!(true),
            None,
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// One acceptance criterion.
pub trait Criterion: Send + Sync {
    fn id(&self) -> u32;
    fn name(&self) -> &'static str;
    /// Wall-clock budget in seconds, if any.
    fn budget(&self) -> Option<f64> {
        None
    }
    fn checks(&self, profile: &Profile) -> Result<Vec<Check>, VerifyError>;

    fn run(&self, profile: &Profile) -> CriterionReport {
        let start = Instant::now();
        let mut checks = match self.checks(profile) {
            Ok(c) => c,
            Err(e) => vec![Check::new("evaluation", false, json!(e.to_string()), json!("no error"), None)],
        };
        let elapsed = start.elapsed();
        if let Some(limit) = self.budget() {
            checks.push(Check::runtime(limit, elapsed));
        }
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        CriterionReport { id: self.id(), name: self.name().to_string(), pass, checks, elapsed }
    }
}

type CheckFn = fn(&Profile) -> Result<Vec<Check>, VerifyError>;

struct FnCriterion {
    id: u32,
    name: &'static str,
    budget: Option<f64>,
    f: CheckFn,
}

impl Criterion for FnCriterion {
    fn id(&self) -> u32 {
        self.id
    }

    fn name(&self) -> &'static str {
        self.name
    }

    fn budget(&self) -> Option<f64> {
        self.budget
    }

    fn checks(&self, profile: &Profile) -> Result<Vec<Check>, VerifyError> {
        (self.f)(profile)
    }
}

/// Criteria selectable by id or name.
pub struct CriterionRegistry {
    criteria: Vec<Box<dyn Criterion>>,
}

impl CriterionRegistry {
    pub fn empty() -> Self {
        CriterionRegistry { criteria: Vec::new() }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        let table: [(u32, &'static str, Option<f64>, CheckFn); 11] = [
            (1, "cocycle-identity", Some(5.0), cocycle_identity),
            (2, "dd-extraction", Some(5.0), dd_extraction),
            (3, "fock-anomaly", Some(60.0), fock_anomaly),
            (4, "gauge-covariance", None, gauge_covariance),
            (5, "conditional-trace", None, conditional_trace),
            (6, "monopole-data", None, monopole_data),
            (7, "renormalization-contrast", Some(120.0), renormalization_contrast),
            (8, "index-forms", None, index_forms),
            (9, "gcd-criterion", None, gcd_criterion),
            (10, "su2-gerbe", Some(30.0), su2_gerbe),
            (11, "spectral-flow", None, spectral_flow),
        ];
        for (id, name, budget, f) in table {
            r.register(Box::new(FnCriterion { id, name, budget, f }));
        }
        r
    }

    pub fn register(&mut self, c: Box<dyn Criterion>) {
        self.criteria.push(c);
    }

    pub fn all(&self) -> impl Iterator<Item = &dyn Criterion> {
        self.criteria.iter().map(|c| c.as_ref())
    }

    pub fn get(&self, key: &str) -> Result<&dyn Criterion, VerifyError> {
        self.all()
            .find(|c| c.name() == key || c.id().to_string() == key)
            .ok_or_else(|| VerifyError::UnknownCriterion(key.to_string()))
    }

    pub fn run_all(&self, profile: &Profile) -> Vec<CriterionReport> {
        self.all().map(|c| c.run(profile)).collect()
    }
}

fn rng(profile: &Profile, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(profile.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn random_ivec(rng: &mut ChaCha8Rng, r: i64) -> IVec3 {
    [rng.gen_range(-r..=r), rng.gen_range(-r..=r), rng.gen_range(-r..=r)]
}

fn rational_json(r: &BigRational) -> Value {
    if r.is_integer() {
        r.to_integer().to_i64().map_or_else(|| json!(r.to_integer().to_string()), |v| json!(v))
    } else {
        json!(format!("{}/{}", r.numer(), r.denom()))
    }
}

fn random_tensor(rng: &mut ChaCha8Rng) -> Result<CocycleTensor, CocycleError> {
    let entries: Vec<i64> = (0..27).map(|_| rng.gen_range(-5..=5)).collect();
    CocycleTensor::from_entries(&entries)
}

fn dot(a: IVec3, b: IVec3) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cocycle_identity(profile: &Profile) -> Result<Vec<Check>, VerifyError> {
    let mut rng = rng(profile, 1);
    let count = profile.pick(200, 40);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for i in 0..count {
        let t = random_tensor(&mut rng)?;
        let c = check_cocycle(&TensorCocycle::new(t), 5, profile.seed.wrapping_add(i))?;
        worst = worst.max(c.max_deviation);
        failures += usize::from(!c.holds);
    }
    Ok(vec![
        Check::below(format!("max phase deviation over {count} random tensors"), worst, cocycle::COCYCLE_TOLERANCE),
        Check::exact("tensors violating the identity", json!(failures), json!(0)),
    ])
}

fn dd_extraction(profile: &Profile) -> Result<Vec<Check>, VerifyError> {
    let mut checks = Vec::new();
    for k in -3..=3 {
        let r = dd_class(&TensorCocycle::new(CocycleTensor::levi_civita().scaled(k)))?;
        checks.push(Check::exact(format!("dd_class({k}·ε)"), rational_json(&r.raw), json!(k)));
    }
    let mut nonzero = Vec::new();
    let count = profile.pick(20, 5);
    for i in 0..count {
        let seed = profile.seed.wrapping_add(100 + i);
        let r = dd_class(&coboundary(format!("random cochain {seed}"), random_cochain(seed)))?;
        if !r.raw.is_zero() {
            nonzero.push(rational_json(&r.raw));
        }
    }
    checks.push(Check::exact(format!("non-zero classes among {count} coboundaries"), json!(nonzero), json!([])));
    let mut rng = rng(profile, 2);
    let mut sym_nonzero = Vec::new();
    for _ in 0..profile.pick(10, 3) {
        let e = random_tensor(&mut rng)?.entries();
        let sym = CocycleTensor::from_fn(|i, j, k| {
            let mut idx = [i, j, k];
            idx.sort_unstable();
            e[9 * idx[0] + 3 * idx[1] + idx[2]]
        });
        let r = dd_class(&TensorCocycle::new(sym))?;
        if !r.raw.is_zero() {
            sym_nonzero.push(rational_json(&r.raw));
        }
    }
    checks.push(Check::exact("non-zero classes among symmetric tensors", json!(sym_nonzero), json!([])));
    Ok(checks)
}

fn sign_of(r: &BigRational) -> i64 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

fn fock_anomaly(profile: &Profile) -> Result<Vec<Check>, VerifyError> {
    let cutoff = CutoffConfig::new(6, 2)?;
    let mut pairs: Vec<(IVec3, IVec3)> = vec![
        ([1, 0, 0], [1, 0, 0]),
        ([1, 1, 0], [2, 0, 0]),
        ([0, 0, 0], [1, -2, 1]),
    ];
    let mut rng = rng(profile, 3);
    while pairs.len() < profile.pick(20, 15) {
        pairs.push((random_ivec(&mut rng, 2), random_ivec(&mut rng, 2)));
    }
    let mut checks = Vec::new();
    let mut signs = Vec::new();
    for (i, (alpha, beta)) in pairs.iter().enumerate() {
        let c = FockCocycle::new(*alpha, *beta, cutoff);
        let check = check_cocycle(&c, profile.pick(6, 3), profile.seed.wrapping_add(300 + i as u64))?;
        checks.push(Check::below(
            format!("cocycle identity, alpha = {alpha:?}, beta = {beta:?}"),
            check.max_deviation,
            cocycle::COCYCLE_TOLERANCE,
        ));
        let r = dd_class(&c)?;
        let k = dot(*alpha, *beta);
        let magnitude = r.raw.abs();
        checks.push(Check::exact(
            format!("|dd_class| = |alpha·beta|, alpha = {alpha:?}, beta = {beta:?}"),
            rational_json(&magnitude),
            json!(k.abs()),
        ));
        if k != 0 && !r.raw.is_zero() {
            signs.push(sign_of(&r.raw) * k.signum());
        }
    }
    signs.sort_unstable();
    signs.dedup();
    checks.push(Check::new("one global sign", signs.len() == 1, json!(signs), json!("single value"), None));
    for (p, q) in [([0, 0, 1], [0, 0, 1]), ([1, 0, 0], [0, 1, 0]), ([1, 1, 0], [1, 2, 0])] {
        let r = dd_class(&ModelRepCocycle { params: ModelRepParams::new(p, q) })?;
        checks.push(Check::exact(
            format!("model representation |dd_class| = |p·q|, p = {p:?}, q = {q:?}"),
            rational_json(&r.raw.abs()),
            json!(dot(p, q).abs()),
        ));
    }
    Ok(checks)
}

const COVARIANCE_TOLERANCE: f64 = 1e-10;

/// Sea-shift exponents under which `g(n)` intertwines `D̂_a` and `D̂_{a+n}`.
pub const COVARIANT_ALPHA: IVec3 = [-1, -1, -1];

fn gauge_covariance(profile: &Profile) -> Result<Vec<Check>, VerifyError> {
    let cutoff = CutoffConfig::new(8, crate::fock::DEFAULT_MARGIN)?;
    let mut rng = rng(profile, 4);
    let count = profile.pick(20, 8);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let a: Vec3 = [rng.gen(), rng.gen(), rng.gen()];
        let n = random_ivec(&mut rng, 1);
        let beta = random_ivec(&mut rng, 2);
        let params = TwistParams { alpha: COVARIANT_ALPHA, beta, a };
        worst = worst.max(check_covariance(a, n, &params, &cutoff)?);
    }
    Ok(vec![Check::below(
        format!("max |g(n)⁻¹ D_a g(n) − D_(a+n)| over {count} random (a, n)"),
        worst,
        COVARIANCE_TOLERANCE,
    )])
}

fn conditional_trace(_profile: &Profile) -> Result<Vec<Check>, VerifyError> {
    let mut mismatches = Vec::new();
    let mut checks = Vec::new();
    for n in -3..=3i64 {
        for m in -3..=3i64 {
            let v = conditional_trace_cocycle(n, m, 50)?;
            let expected = Rational64::from_integer(if n + m == 0 { m } else { 0 });
            if v != expected {
                mismatches.push(json!([n, m, v.to_string(), expected.to_string()]));
            }
            if (n, m) == (1, -1) || (n, m) == (2, -2) {
                checks.push(Check::exact(format!("c({n}, {m})"), json!(v.to_string()), json!(expected.to_string())));
            }
        }
    }
    checks.push(Check::new(
        "mismatches over |n|, |m| ≤ 3",
        mismatches.is_empty(),
        json!(mismatches),
        json!([]),
        None,
    ));
    Ok(checks)
}

fn monopole_data(profile: &Profile) -> Result<Vec<Check>, VerifyError> {
    let registry = BandFieldRegistry::standard();
    let mut checks = Vec::new();
    let base = profile.pick((24, 48), (16, 32));
    let fields = [
        ("monopole-band", FieldParams { momentum: [0, 0, 0], radius: 0 }),
        ("lattice-vacuum", FieldParams { momentum: [0, 0, 0], radius: 1 }),
    ];
    for (name, params) in fields {
        let field = registry.build(name, &params)?;
        for (center, expected) in [([0.0; 3], 1), ([0.5; 3], 0)] {
            let mesh = SphereMesh::new(center, 0.4, base.0, base.1)?;
            let coarse = sphere_chern(&mesh, field.as_ref())?;
            let fine = sphere_chern(&mesh.refined(), field.as_ref())?;
            checks.push(Check::exact(
                format!("sphere_chern {name} around {center:?}, meshes {base:?} and refined"),
                json!([coarse, fine]),
                json!([expected, expected]),
            ));
        }
    }
    let mut worst: f64 = 0.0;
    for b in [[0.0, 0.0, 1.0], [0.4, -0.3, 0.8], [-1.2, 0.5, 0.1], [0.3, 0.3, -0.2]] {
        let num = berry_curvature_numeric(b, 1e-3)?.vector();
        let exact = monopole_curvature(b)?.vector();
        let diff: f64 = (0..3).map(|d| (num[d] - exact[d]).norm_sqr()).sum::<f64>().sqrt();
        let size: f64 = (0..3).map(|d| exact[d].norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(diff / size);
    }
    checks.push(Check::below("Berry curvature relative error at δ = 1e-3", worst, 1e-6));
    let flux = monopole_flux(&[[0, 0, 0]], [0.0; 3], 0.5, 24, 48)?;
    let target = Complex64::new(0.0, 2.0 * PI);
    checks.push(Check::new(
        "flux of ω⁽¹⁾ through a sphere around the node",
        (flux - target).norm() < 1e-6,
        json!([flux.re, flux.im]),
        json!([0.0, 2.0 * PI]),
        Some(1e-6),
    ));
    Ok(checks)
}

/// Point and cutoff window of the renormalization contrast.
pub const CONTRAST_POINT: Vec3 = [0.3, 0.4, 0.5];

fn renormalization_contrast(profile: &Profile) -> Result<Vec<Check>, VerifyError> {
    let cutoffs: Vec<i64> = if profile.quick { vec![6, 8, 10, 12] } else { (6..=16).step_by(2).collect() };
    let series = renormalized_curvature(CONTRAST_POINT, &cutoffs, (1, 2))?;
    let renorm = PartialSumSeries::increments(&series.renormalized);
    let bare = PartialSumSeries::increments(&series.bare);
    Ok(vec![
        Check::new(
            "renormalized increments shrink with ratio < 0.9",
            dirac::is_cauchy(&renorm),
            json!(renorm),
            json!("successive ratios < 0.9"),
            Some(dirac::CAUCHY_RATIO),
        ),
        Check::new(
            "bare increments do not tend to 0",
            !dirac::is_cauchy(&bare),
            json!(bare),
            json!("not successively shrinking"),
            Some(dirac::CAUCHY_RATIO),
        ),
    ])
}

fn unit_multiple(form: &Form, k: i64) -> Form {
    form.scale(&BigRational::from_integer(BigInt::from(k)))
}

fn index_forms(_profile: &Profile) -> Result<Vec<Check>, VerifyError> {
    let frame = torus_frame();
    let u = Form::unit(&frame);
    let dd = dd_three_form(&frame, IndexNormalization::IndexForm)?;
    let dd_expected = unit_multiple(
        &u.power(3)?.wedge(&Form::monomial(&frame, &["da1", "da2", "da3"])?)?,
        exform::DD_ORIENTATION_SIGN,
    );
    let mut sum = Form::zero(&frame);
    for i in 1..=3 {
        sum = sum.plus(&Form::scalar(&frame, &format!("f{i}"))?.wedge(&Form::generator(&frame, &format!("da{i}"))?)?)?;
    }
    let sf_expected = unit_multiple(&u.power(2)?.wedge(&sum)?, exform::SPECTRAL_FLOW_ORIENTATION_SIGN);
    let sf = spectral_flow_form(&frame)?;
    let cf = circle_frame();
    let cu = Form::unit(&cf);
    let a = alpha_hat(&cf)?;
    let ch_expected = cu.wedge(&a)?.plus(&cu.power(2)?.wedge(&a)?.wedge(&beta_hat(&cf)?)?)?;
    let ch = circle_bundle_character(&cf)?;
    let numeric = circle_bundle_character_numeric([1, 0, 0], [1, 0, 0])?;
    Ok(vec![
        Check::exact("degree-3 form", json!(dd.to_string()), json!(dd_expected.to_string())),
        Check::exact("spectral-flow 1-form", json!(sf.to_string()), json!(sf_expected.to_string())),
        Check::exact("circle-bundle character", json!(ch.to_string()), json!(ch_expected.to_string())),
        Check::exact(
            "circle-bundle character at alpha = beta = e1",
            json!(numeric.to_string()),
            json!(Form::parse(&cf, "1 * u^1 * [da1] + 1 * u^2 * [da1^da2^da3]")?.to_string()),
        ),
    ])
}

fn gcd_criterion(_profile: &Profile) -> Result<Vec<Check>, VerifyError> {
    let yes = gcd_realizability([2, 3, 0]);
    let witness_ok = yes.witness.map(|w| dot(w, [2, 3, 0]) == 1).unwrap_or(false);
    let no = gcd_realizability([2, 4, 6]);
    Ok(vec![
        Check::exact("(2, 3, 0) realizable", json!(yes.realizable), json!(true)),
        Check::exact("witness pairs to 1", json!(witness_ok), json!(true)),
        Check::exact("(2, 4, 6) realizable", json!(no.realizable), json!(false)),
        Check::exact("gcd(2, 4, 6)", json!(no.gcd), json!(2)),
    ])
}

fn su2_gerbe(_profile: &Profile) -> Result<Vec<Check>, VerifyError> {
    let mut checks = Vec::new();
    for k in 1..=3 {
        let v = orbit_integral(k, 200, 400)?;
        let expected = 2.0 * k as f64;
        let rel = (v - expected).abs() / expected;
        checks.push(Check::new(format!("orbit integral k = {k}"), rel < 1e-3, json!(v), json!(expected), Some(1e-3)));
    }
    let coarse = orbit_integral(1, 200, 400)?;
    let fine = orbit_integral(1, 400, 800)?;
    checks.push(Check::below("relative change under mesh refinement", (fine - coarse).abs() / coarse.abs(), 5e-4));
    Ok(checks)
}

fn spectral_flow(_profile: &Profile) -> Result<Vec<Check>, VerifyError> {
    let mut checks = Vec::new();
    for start in [[0.0; 3], [0.2, 0.7, 0.45]] {
        for d in 0..3 {
            for steps in [1i64, 2] {
                let mut end = start;
                end[d] += steps as f64;
                let flow = spectral_flow_1d(&linear_path(start, end, 64), 0.0);
                let mut expected = [0i64; 3];
                expected[d] = steps;
                let magnitudes = flow.map(|x| x.abs());
                checks.push(Check::exact(
                    format!("|flow| from {start:?} shifting direction {} by {steps}", d + 1),
                    json!(magnitudes),
                    json!(expected),
                ));
            }
        }
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lists_eleven_criteria() {
        let r = CriterionRegistry::standard();
        let ids: Vec<u32> = r.all().map(|c| c.id()).collect();
        assert_eq!(ids, (1..=11).collect::<Vec<_>>());
        assert_eq!(r.get("gcd-criterion").unwrap().id(), 9);
        assert_eq!(r.get("9").unwrap().name(), "gcd-criterion");
        assert!(r.get("nope").is_err());
    }

    #[test]
    fn errors_become_failed_checks() {
        struct Broken;
        impl Criterion for Broken {
            fn id(&self) -> u32 {
                99
            }
            fn name(&self) -> &'static str {
                "broken"
            }
            fn checks(&self, _: &Profile) -> Result<Vec<Check>, VerifyError> {
                Err(DiracError::Cutoffs.into())
            }
        }
        let r = Broken.run(&Profile::quick(1));
        assert!(!r.pass);
        assert_eq!(r.checks.len(), 1);
    }
}
