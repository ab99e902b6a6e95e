//! Truncated fermionic Fock space of 1D fermions valued in `ℂ³`.
//!
//! Basis states are Dirac-sea excitations: per direction a set of particles
//! `P_j ⊂ {1..Λ}` and holes `H_j ⊂ {−Λ..0}`. A basis state stands for
//!
//! ```text
//! Π_{j ascending} Π_{q ∈ P_j ∪ H_j, descending} c_j(q) |0⟩
//! ```
//!
//! with `c_j(q) = b*(j,q)` for particles and `b(j,q)` for holes. Operators
//! of different directions commute.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::cocycle::{self, Cocycle, CocycleError};
use crate::{IVec3, Vec3};

pub const DEFAULT_CUTOFF: i64 = 8;
pub const DEFAULT_MARGIN: i64 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("mode ({dir}, {p}) lies outside the cutoff Λ = {cutoff}")]
    ModeOutsideCutoff { dir: usize, p: i64, cutoff: i64 },
    #[error("direction {0} is not one of 1, 2, 3")]
    Direction(usize),
    #[error("invalid cutoff Λ = {cutoff}, margin = {margin}: need 0 < margin < Λ")]
    InvalidCutoff { cutoff: i64, margin: i64 },
    #[error("support reaches momentum {p}, beyond the interior |p| ≤ {interior}")]
    Margin { p: i64, interior: i64 },
    #[error("g(n)g(m) and g(n+m) differ by a state-dependent factor (spread {0:.3e})")]
    NotProportional(f64),
    #[error("only {0} test states stay inside the margin, need at least {MIN_TEST_STATES}")]
    TooFewStates(usize),
}

/// Minimum number of test states for cocycle extraction.
pub const MIN_TEST_STATES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct CutoffConfig {
    pub cutoff: i64,
    pub margin: i64,
}

impl CutoffConfig {
    pub fn new(cutoff: i64, margin: i64) -> Result<Self, FockError> {
        if margin <= 0 || margin >= cutoff {
            return Err(FockError::InvalidCutoff { cutoff, margin });
        }
        Ok(CutoffConfig { cutoff, margin })
    }

    /// Largest momentum magnitude allowed in interior states.
    pub fn interior(&self) -> i64 {
        self.cutoff - self.margin
    }
}

impl Default for CutoffConfig {
    fn default() -> Self {
        CutoffConfig {
            cutoff: DEFAULT_CUTOFF,
            margin: DEFAULT_MARGIN,
        }
    }
}

/// Mode `(j, p)` with direction `j ∈ {1, 2, 3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeIndex {
    dir: usize,
    p: i64,
}

impl ModeIndex {
    pub fn new(dir: usize, p: i64, cutoff: &CutoffConfig) -> Result<Self, FockError> {
        if !(1..=3).contains(&dir) {
            return Err(FockError::Direction(dir));
        }
        if p.abs() > cutoff.cutoff {
            return Err(FockError::ModeOutsideCutoff { dir, p, cutoff: cutoff.cutoff });
        }
        Ok(ModeIndex { dir: dir - 1, p })
    }

    pub fn direction(&self) -> usize {
        self.dir + 1
    }

    pub fn momentum(&self) -> i64 {
        self.p
    }
}

/// Excitations of the Dirac sea; each list is sorted descending.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeaState {
    particles: [Vec<i64>; 3],
    holes: [Vec<i64>; 3],
}

impl SeaState {
    pub fn vacuum() -> Self {
        SeaState::default()
    }

    pub fn particles(&self, dir: usize) -> &[i64] {
        &self.particles[dir - 1]
    }

    pub fn holes(&self, dir: usize) -> &[i64] {
        &self.holes[dir - 1]
    }

    pub fn excitation_count(&self) -> usize {
        (0..3).map(|d| self.particles[d].len() + self.holes[d].len()).sum()
    }

    /// `N_j = |P_j| − |H_j|` with `j ∈ {1,2,3}`.
    pub fn charge(&self, dir: usize) -> i64 {
        self.charge0(dir - 1)
    }

    fn charge0(&self, d: usize) -> i64 {
        self.particles[d].len() as i64 - self.holes[d].len() as i64
    }

    pub fn total_charge(&self) -> i64 {
        (0..3).map(|d| self.charge0(d)).sum()
    }

    /// Largest `|p|` among excitations, 0 for the vacuum.
    pub fn support(&self) -> i64 {
        (0..3)
            .flat_map(|d| self.particles[d].iter().chain(&self.holes[d]))
            .map(|p| p.abs())
            .max()
            .unwrap_or(0)
    }

    /// Excitations of direction `d` in canonical (descending) order as
    /// `(momentum, is_particle)`; particles are positive, holes nonpositive.
    fn ordered(&self, d: usize) -> Vec<(i64, bool)> {
        self.particles[d]
            .iter()
            .map(|&q| (q, true))
            .chain(self.holes[d].iter().map(|&q| (q, false)))
            .collect()
    }

    fn count_above(&self, d: usize, q: i64) -> usize {
        self.particles[d].iter().filter(|&&x| x > q).count()
            + self.holes[d].iter().filter(|&&x| x > q).count()
    }

    /// Applies `b*(d,q)` (`create`) or `b(d,q)` to the basis state.
    fn toggle(&self, d: usize, q: i64, create: bool) -> Option<(f64, SeaState)> {
        let sign = if self.count_above(d, q).is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut out = self.clone();
        if q > 0 {
            let list = &mut out.particles[d];
            let present = list.contains(&q);
            if create == present {
                return None;
            }
            if create {
                list.push(q);
                list.sort_unstable_by(|a, b| b.cmp(a));
            } else {
                list.retain(|&x| x != q);
            }
        } else {
            let list = &mut out.holes[d];
            let present = list.contains(&q);
            // a hole is created by b and filled by b*
            if create != present {
                return None;
            }
            if create {
                list.retain(|&x| x != q);
            } else {
                list.push(q);
                list.sort_unstable_by(|a, b| b.cmp(a));
            }
        }
        Some((sign, out))
    }

    /// Builds a state from `(direction, momentum)` excitations; momenta
    /// `> 0` are particles, `≤ 0` holes.
    pub fn from_excitations(excitations: &[(usize, i64)], cutoff: &CutoffConfig) -> Result<Self, FockError> {
        let mut s = SeaState::vacuum();
        for &(dir, p) in excitations {
            let mode = ModeIndex::new(dir, p, cutoff)?;
            let d = mode.dir;
            let list = if p > 0 { &mut s.particles[d] } else { &mut s.holes[d] };
            if !list.contains(&p) {
                list.push(p);
            }
            list.sort_unstable_by(|a, b| b.cmp(a));
        }
        Ok(s)
    }
}

impl fmt::Display for SeaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for d in 0..3 {
            for &(q, particle) in &self.ordered(d) {
                parts.push(if particle {
                    format!("b*({},{q})", d + 1)
                } else {
                    format!("b({},{q})", d + 1)
                });
            }
        }
        if parts.is_empty() {
            write!(f, "|0>")
        } else {
            write!(f, "{}|0>", parts.join(""))
        }
    }
}

/// Finite complex combination of basis states.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FockVector {
    terms: BTreeMap<SeaState, Complex64>,
}

impl FockVector {
    pub fn zero() -> Self {
        FockVector::default()
    }

    pub fn vacuum() -> Self {
        Self::basis(SeaState::vacuum())
    }

    pub fn basis(s: SeaState) -> Self {
        let mut v = Self::zero();
        v.add_term(s, Complex64::new(1.0, 0.0));
        v
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SeaState, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, s: &SeaState) -> Complex64 {
        self.terms.get(s).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, s: SeaState, c: Complex64) {
        let entry = self.terms.entry(s).or_default();
        *entry += c;
        if entry.norm() == 0.0 {
            self.terms.retain(|_, v| v.norm() != 0.0);
        }
    }

    pub fn plus(&self, other: &FockVector) -> FockVector {
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(s.clone(), *c);
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> FockVector {
        let mut out = FockVector::zero();
        for (s, a) in &self.terms {
            out.add_term(s.clone(), a * c);
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest component of `self − other`.
    pub fn max_deviation(&self, other: &FockVector) -> f64 {
        self.plus(&other.scale(Complex64::new(-1.0, 0.0)))
            .terms
            .values()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    fn map_basis(
        &self,
        f: impl Fn(&SeaState) -> Result<Option<(Complex64, SeaState)>, FockError>,
    ) -> Result<FockVector, FockError> {
        let mut out = FockVector::zero();
        for (s, c) in &self.terms {
            if let Some((factor, t)) = f(s)? {
                out.add_term(t, c * factor);
            }
        }
        Ok(out)
    }
}

fn apply_mode(mode: ModeIndex, v: &FockVector, create: bool) -> FockVector {
    v.map_basis(|s| {
        Ok(s.toggle(mode.dir, mode.p, create)
            .map(|(sign, t)| (Complex64::new(sign, 0.0), t)))
    })
    .expect("mode application is infallible")
}

/// `b*(mode)`.
pub fn create(mode: ModeIndex, v: &FockVector) -> FockVector {
    apply_mode(mode, v, true)
}

/// `b(mode)`.
pub fn annihilate(mode: ModeIndex, v: &FockVector) -> FockVector {
    apply_mode(mode, v, false)
}

/// Normal-ordered number operator `N_j`.
pub fn number_op(dir: usize, v: &FockVector) -> Result<FockVector, FockError> {
    if !(1..=3).contains(&dir) {
        return Err(FockError::Direction(dir));
    }
    v.map_basis(|s| Ok(Some((Complex64::new(s.charge(dir) as f64, 0.0), s.clone()))))
}

fn check_interior(s: &SeaState, cutoff: &CutoffConfig) -> Result<(), FockError> {
    let p = s.support();
    if p > cutoff.interior() {
        return Err(FockError::Margin { p, interior: cutoff.interior() });
    }
    Ok(())
}

/// `S_d^{±1}` on a basis state: every excitation moves by `step` and the
/// result is built on `S^{±1}|0⟩`.
fn shift_once(s: &SeaState, d: usize, step: i64, cutoff: &CutoffConfig) -> Result<(f64, SeaState), FockError> {
    let mut base = s.clone();
    base.particles[d].clear();
    base.holes[d].clear();
    let mut state = if step > 0 {
        base.toggle(d, 1, true)
    } else {
        base.toggle(d, 0, false)
    }
    .expect("the sea base of direction d is empty");
    let ops = s.ordered(d);
    for &(q, particle) in ops.iter().rev() {
        let target = q + step;
        if target.abs() > cutoff.cutoff {
            return Err(FockError::ModeOutsideCutoff { dir: d + 1, p: target, cutoff: cutoff.cutoff });
        }
        let (sign, next) = state
            .1
            .toggle(d, target, particle)
            .expect("shifted excitations never collide");
        state = (state.0 * sign, next);
    }
    Ok(state)
}

fn shift_basis(s: &SeaState, d: usize, k: i64, cutoff: &CutoffConfig) -> Result<(f64, SeaState), FockError> {
    let mut acc = (1.0, s.clone());
    for _ in 0..k.abs() {
        let (sign, next) = shift_once(&acc.1, d, k.signum(), cutoff)?;
        acc = (acc.0 * sign, next);
    }
    check_interior(&acc.1, cutoff)?;
    Ok(acc)
}

/// `S_i^k` with `i ∈ {1,2,3}`.
pub fn shift_op(dir: usize, k: i64, v: &FockVector, cutoff: &CutoffConfig) -> Result<FockVector, FockError> {
    if !(1..=3).contains(&dir) {
        return Err(FockError::Direction(dir));
    }
    v.map_basis(|s| {
        let (sign, t) = shift_basis(s, dir - 1, k, cutoff)?;
        Ok(Some((Complex64::new(sign, 0.0), t)))
    })
}

/// Vacuum shift exponents `α`, line-bundle twist `β` and the potential
/// `a` at which `g(n)` acts.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TwistParams {
    pub alpha: IVec3,
    pub beta: IVec3,
    pub a: Vec3,
}

fn triple(a: Vec3, b: IVec3, n: IVec3) -> f64 {
    cocycle::det3(a, cocycle::as_real(b), cocycle::as_real(n))
}

fn gauge_basis(
    s: &SeaState,
    n: IVec3,
    params: &TwistParams,
    cutoff: &CutoffConfig,
    inverse: bool,
) -> Result<(Complex64, SeaState), FockError> {
    let sgn = if inverse { -1 } else { 1 };
    let mut sign = 1.0;
    let mut t = s.clone();
    for d in 0..3 {
        let k = sgn * params.alpha[d] * n[d];
        if k != 0 {
            let (sg, next) = shift_basis(&t, d, k, cutoff)?;
            sign *= sg;
            t = next;
        }
    }
    check_interior(&t, cutoff)?;
    let charge = if inverse { t.total_charge() } else { s.total_charge() };
    let ph = cocycle::phase(charge as f64 * triple(params.a, params.beta, n));
    let ph = if inverse { ph.conj() } else { ph };
    Ok((ph * sign, t))
}

/// `g(n)`: occupations in direction `j` move rigidly by `α_j n_j`
/// (`Π S_j^{α_j n_j}`), with phase `e^{2πi N a∧β∧n}` for input charge `N`.
pub fn gauge_op(n: IVec3, params: &TwistParams, v: &FockVector, cutoff: &CutoffConfig) -> Result<FockVector, FockError> {
    v.map_basis(|s| gauge_basis(s, n, params, cutoff, false).map(Some))
}

/// `g(n)⁻¹` at the same `a`.
pub fn gauge_op_inverse(n: IVec3, params: &TwistParams, v: &FockVector, cutoff: &CutoffConfig) -> Result<FockVector, FockError> {
    v.map_basis(|s| gauge_basis(s, n, params, cutoff, true).map(Some))
}

/// Eigenvalue of `D̂_a` on a basis state.
pub fn dirac_eigenvalue(s: &SeaState, a: Vec3) -> f64 {
    let mut e = 0.0;
    for d in 0..3 {
        let k: i64 = s.particles[d].iter().sum::<i64>() - s.holes[d].iter().sum::<i64>();
        e += k as f64;
        e -= a[d] * (s.charge0(d) as f64 + 0.5);
        e += 0.5 * a[d] * a[d];
    }
    e
}

/// `D̂_a`, diagonal in the sea basis.
pub fn dirac_hamiltonian(a: Vec3, v: &FockVector) -> FockVector {
    v.map_basis(|s| Ok(Some((Complex64::new(dirac_eigenvalue(s, a), 0.0), s.clone()))))
        .expect("diagonal operator")
}

/// All states with at most `max_excitations` excitations and support
/// `|p| ≤ radius`, in canonical order.
pub fn enumerate_states(radius: i64, max_excitations: usize) -> Vec<SeaState> {
    let mut modes = Vec::new();
    for d in 0..3 {
        for q in -radius..=radius {
            modes.push((d, q));
        }
    }
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    fn rec(
        modes: &[(usize, i64)],
        start: usize,
        left: usize,
        chosen: &mut Vec<(usize, i64)>,
        out: &mut Vec<SeaState>,
    ) {
        let mut s = SeaState::vacuum();
        for &(d, q) in chosen.iter() {
            if q > 0 {
                s.particles[d].push(q);
            } else {
                s.holes[d].push(q);
            }
        }
        for d in 0..3 {
            s.particles[d].sort_unstable_by(|a, b| b.cmp(a));
            s.holes[d].sort_unstable_by(|a, b| b.cmp(a));
        }
        out.push(s);
        if left == 0 {
            return;
        }
        for i in start..modes.len() {
            chosen.push(modes[i]);
            rec(modes, i + 1, left - 1, chosen, out);
            chosen.pop();
        }
    }
    rec(&modes, 0, max_excitations, &mut chosen, &mut out);
    out.sort();
    out
}

/// Largest deviation between `g(n)⁻¹ D̂_a g(n)` and `D̂_{a+n}` over interior
/// basis states with at most three excitations.
pub fn check_covariance(a: Vec3, n: IVec3, params: &TwistParams, cutoff: &CutoffConfig) -> Result<f64, FockError> {
    let reach = (0..3).map(|d| (params.alpha[d] * n[d]).abs()).max().unwrap_or(0);
    let radius = cutoff.interior() - reach;
    if radius < 0 {
        return Err(FockError::Margin { p: reach, interior: cutoff.interior() });
    }
    let g = TwistParams { a, ..*params };
    let shifted = [a[0] + n[0] as f64, a[1] + n[1] as f64, a[2] + n[2] as f64];
    let mut worst: f64 = 0.0;
    for s in enumerate_states(radius, 3) {
        let v = FockVector::basis(s);
        let lhs = gauge_op_inverse(n, &g, &dirac_hamiltonian(a, &gauge_op(n, &g, &v, cutoff)?), cutoff)?;
        let rhs = dirac_hamiltonian(shifted, &v);
        worst = worst.max(lhs.max_deviation(&rhs));
    }
    Ok(worst)
}

/// Candidate states for cocycle extraction.
pub fn test_pool() -> Vec<SeaState> {
    let cut = CutoffConfig { cutoff: i64::MAX / 4, margin: 1 };
    let specs: [&[(usize, i64)]; 10] = [
        &[],
        &[(1, 1)],
        &[(2, 0)],
        &[(3, 2), (1, -1)],
        &[(1, 1), (1, 0)],
        &[(2, 1), (2, 2), (3, 0)],
        &[(1, -2), (2, 3), (3, 1)],
        &[(3, -1), (3, 0)],
        &[(1, 2), (2, -1), (3, 3)],
        &[(1, 1), (1, 2), (1, -1)],
    ];
    specs
        .iter()
        .map(|e| SeaState::from_excitations(e, &cut).expect("valid pool state"))
        .collect()
}

/// `C(a; n, m)` from `g(n)g(m) = C(a; n, m) g(n+m)` with
/// `(g(n)Ψ)(a) = U_n(a−n) Ψ(a−n)`, measured on basis states.
pub fn extract_fock_cocycle(
    alpha: IVec3,
    beta: IVec3,
    cutoff: &CutoffConfig,
    a: Vec3,
    n: IVec3,
    m: IVec3,
) -> Result<Complex64, FockError> {
    let nm = cocycle::add(n, m);
    let at = |x: Vec3| TwistParams { alpha, beta, a: x };
    let a_n = cocycle::shift(a, n);
    let a_nm = cocycle::shift(a, nm);
    let mut ratios = Vec::new();
    for s in test_pool() {
        if s.support() > cutoff.interior() {
            continue;
        }
        let v = FockVector::basis(s);
        let lhs = gauge_op(m, &at(a_nm), &v, cutoff).and_then(|w| gauge_op(n, &at(a_n), &w, cutoff));
        let rhs = gauge_op(nm, &at(a_nm), &v, cutoff);
        let (lhs, rhs) = match (lhs, rhs) {
            (Ok(l), Ok(r)) => (l, r),
            (Err(FockError::Margin { .. }), _) | (_, Err(FockError::Margin { .. })) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let (ts, rc) = rhs.terms().next().expect("basis maps to basis");
        ratios.push(lhs.amplitude(ts) / rc);
        if lhs.len() != 1 {
            return Err(FockError::NotProportional(f64::INFINITY));
        }
    }
    if ratios.len() < MIN_TEST_STATES {
        return Err(FockError::TooFewStates(ratios.len()));
    }
    let first = ratios[0];
    let spread = ratios.iter().map(|r| (r - first).norm()).fold(0.0, f64::max);
    if spread > 1e-10 {
        return Err(FockError::NotProportional(spread));
    }
    Ok(first)
}

/// The measured Fock cocycle as a [`Cocycle`].
pub struct FockCocycle {
    pub alpha: IVec3,
    pub beta: IVec3,
    pub cutoff: CutoffConfig,
}

impl FockCocycle {
    pub fn new(alpha: IVec3, beta: IVec3, cutoff: CutoffConfig) -> Self {
        FockCocycle { alpha, beta, cutoff }
    }
}

impl Cocycle for FockCocycle {
    fn name(&self) -> String {
        format!("Fock cocycle alpha = {:?}, beta = {:?}", self.alpha, self.beta)
    }

    fn eval(&self, a: Vec3, n: IVec3, m: IVec3) -> Result<Complex64, CocycleError> {
        Ok(extract_fock_cocycle(self.alpha, self.beta, &self.cutoff, a, n, m)?)
    }

    fn admits(&self, n: IVec3, m: IVec3) -> bool {
        let nm = cocycle::add(n, m);
        (0..3).all(|d| {
            let reach = (self.alpha[d] * n[d]).abs() + (self.alpha[d] * m[d]).abs();
            reach.max((self.alpha[d] * nm[d]).abs()) < self.cutoff.interior()
        })
    }

    fn shift_range(&self) -> i64 {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cut() -> CutoffConfig {
        CutoffConfig::default()
    }

    fn mode(j: usize, p: i64) -> ModeIndex {
        ModeIndex::new(j, p, &cut()).unwrap()
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn car_on_vacuum() {
        let vac = FockVector::vacuum();
        for j in 1..=3 {
            for p in -3..=3 {
                let m = mode(j, p);
                let v = annihilate(m, &create(m, &vac)).plus(&create(m, &annihilate(m, &vac)));
                assert_eq!(v, vac);
            }
        }
    }

    #[test]
    fn pauli_exclusion() {
        let vac = FockVector::vacuum();
        assert!(create(mode(1, 1), &create(mode(1, 1), &vac)).is_empty());
        assert!(create(mode(1, 0), &vac).is_empty());
    }

    #[test]
    fn directions_commute() {
        let vac = FockVector::vacuum();
        let ab = create(mode(1, 1), &create(mode(2, 1), &vac));
        let ba = create(mode(2, 1), &create(mode(1, 1), &vac));
        assert_eq!(ab, ba);
        assert_eq!(ab.len(), 1);
    }

    #[test]
    fn same_direction_anticommutes() {
        let vac = FockVector::vacuum();
        let ab = create(mode(1, 1), &create(mode(1, 2), &vac));
        let ba = create(mode(1, 2), &create(mode(1, 1), &vac));
        assert_eq!(ab, ba.scale(-one()));
    }

    #[test]
    fn mode_outside_cutoff_is_rejected() {
        assert!(matches!(ModeIndex::new(1, 9, &cut()), Err(FockError::ModeOutsideCutoff { .. })));
        assert!(matches!(ModeIndex::new(4, 0, &cut()), Err(FockError::Direction(4))));
    }

    #[test]
    fn number_operator_examples() {
        let vac = FockVector::vacuum();
        assert!(number_op(1, &vac).unwrap().is_empty());
        let p = create(mode(1, 2), &vac);
        assert_eq!(number_op(1, &p).unwrap(), p);
        let h = annihilate(mode(1, 0), &vac);
        assert_eq!(number_op(1, &h).unwrap(), h.scale(-one()));
    }

    #[test]
    fn vacuum_shift_creates_first_mode() {
        let vac = FockVector::vacuum();
        for i in 1..=3 {
            assert_eq!(shift_op(i, 1, &vac, &cut()).unwrap(), create(mode(i, 1), &vac));
            assert_eq!(shift_op(i, -1, &vac, &cut()).unwrap(), annihilate(mode(i, 0), &vac));
        }
    }

    #[test]
    fn shift_moves_the_occupation_function() {
        // one particle at 2 and a hole at −1: occupied set {2} ∪ (sea without −1)
        let s = SeaState::from_excitations(&[(1, 2), (1, -1)], &cut()).unwrap();
        let v = shift_op(1, 1, &FockVector::basis(s), &cut()).unwrap();
        let (t, _) = v.terms().next().unwrap();
        // occupied after shift: {3} ∪ (sea+1 without 0) = particles {3, 1}, hole {0}
        assert_eq!(t.particles(1), &[3, 1]);
        assert_eq!(t.holes(1), &[0]);
    }

    #[test]
    fn shift_refuses_to_leave_the_interior() {
        let s = SeaState::from_excitations(&[(2, 5)], &cut()).unwrap();
        assert!(matches!(
            shift_op(2, 1, &FockVector::basis(s), &cut()),
            Err(FockError::Margin { .. })
        ));
    }

    #[test]
    fn gauge_examples() {
        let vac = FockVector::vacuum();
        let p = TwistParams { alpha: [0, 0, 0], beta: [1, 2, 3], a: [0.3, 0.1, 0.7] };
        assert_eq!(gauge_op([0, 0, 0], &p, &vac, &cut()).unwrap(), vac);
        assert_eq!(gauge_op([1, -1, 2], &p, &vac, &cut()).unwrap(), vac);
        let p2 = TwistParams { alpha: [2, 0, 0], ..p };
        assert_eq!(
            gauge_op([1, 0, 0], &p2, &vac, &cut()).unwrap(),
            shift_op(1, 2, &vac, &cut()).unwrap()
        );
    }

    #[test]
    fn hamiltonian_examples() {
        let vac = FockVector::vacuum();
        assert!(dirac_hamiltonian([0.0; 3], &vac).is_empty());
        let a = [0.3, -0.2, 0.5];
        let e = -(0.3 - 0.2 + 0.5) / 2.0 + (0.09 + 0.04 + 0.25) / 2.0;
        assert!((dirac_eigenvalue(&SeaState::vacuum(), a) - e).abs() < 1e-15);
        let s = SeaState::from_excitations(&[(1, 3)], &cut()).unwrap();
        assert_eq!(dirac_eigenvalue(&s, [0.0; 3]), 3.0);
    }

    #[test]
    fn covariance_at_trivial_shift() {
        let p = TwistParams { alpha: [1, 1, 1], beta: [1, 0, 0], a: [0.0; 3] };
        assert_eq!(check_covariance([0.3, 0.1, 0.0], [0, 0, 0], &p, &cut()).unwrap(), 0.0);
    }

    #[test]
    fn enumeration_counts() {
        // 3 directions × 3 modes at radius 1
        let n = enumerate_states(1, 2).len();
        assert_eq!(n, 1 + 9 + 36);
    }

    #[test]
    fn cocycle_closed_form() {
        let (alpha, beta) = ([1, 2, 0], [0, 1, -1]);
        let c = CutoffConfig::new(8, 2).unwrap();
        for (a, n, m) in [
            ([0.3, 0.2, 0.1], [1, 0, 0], [0, 1, 0]),
            ([-0.4, 0.7, 0.25], [0, 1, 1], [1, 0, -1]),
        ] {
            let got = extract_fock_cocycle(alpha, beta, &c, a, n, m).unwrap();
            let am = (alpha[0] * m[0] + alpha[1] * m[1] + alpha[2] * m[2]) as f64;
            let expected = cocycle::phase(am * triple(a, beta, n));
            assert!((got - expected).norm() < 1e-12, "{got} vs {expected}");
        }
    }
}
