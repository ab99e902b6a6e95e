//! Exact exterior algebra over a declared frame of degree-1 generators.
//!
//! Coefficients are polynomials with arbitrary-precision rational numeric
//! part, in the frame's coordinate scalars and the formal unit `u`, which
//! stands for `1/(2πi)` and is never evaluated. Generator subsets are stored
//! as bitmasks sorted by declaration order; the reordering sign is absorbed
//! into the coefficient.
//!
//! Fiber integration uses the fiber-first convention:
//! `∫_F dx_{g1} ∧ … ∧ dx_{gk} ∧ β = β` for the generators listed in the
//! order given to [`Form::fiber_integrate`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Maximum number of generators in a frame (one bit per generator).
pub const MAX_GENERATORS: usize = 64;

/// Name of the formal unit standing for `1/(2πi)`.
pub const FORMAL_UNIT: &str = "u";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormError {
    #[error("forms belong to different frames")]
    FrameMismatch,
    #[error("coordinate `{0}` has no paired generator")]
    UnpairedCoordinate(String),
    #[error("exponential needs a nilpotent argument, found degree-0 component `{0}`")]
    DegreeZero(String),
    #[error("generator `{0}` is not declared in the frame")]
    UnknownGenerator(String),
    #[error("symbol `{0}` is not declared in the frame")]
    UnknownSymbol(String),
    #[error("generator `{0}` listed twice")]
    RepeatedGenerator(String),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("cannot parse term `{term}`: {reason}")]
    Parse { term: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Coordinate,
    FormalUnit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    /// Index of the coordinate symbol `c` with `d(c)` equal to this generator.
    pub paired: Option<usize>,
}

/// Declared symbols and generators. Symbol 0 is always the formal unit `u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    symbols: Vec<Symbol>,
    generators: Vec<Generator>,
    /// For each symbol, the generator it is paired with.
    pairing: Vec<Option<usize>>,
}

#[derive(Debug, Default)]
pub struct FrameBuilder {
    generators: Vec<(String, Option<String>)>,
    scalars: Vec<String>,
}

impl FrameBuilder {
    /// Declares a generator `d(coordinate)`; the coordinate symbol is created
    /// alongside it.
    pub fn paired(mut self, generator: &str, coordinate: &str) -> Self {
        self.generators
            .push((generator.to_string(), Some(coordinate.to_string())));
        self
    }

    pub fn generator(mut self, generator: &str) -> Self {
        self.generators.push((generator.to_string(), None));
        self
    }

    /// Declares a coordinate scalar without a paired generator (a parameter).
    pub fn scalar(mut self, name: &str) -> Self {
        self.scalars.push(name.to_string());
        self
    }

    pub fn build(self) -> Result<Arc<Frame>, FormError> {
        if self.generators.len() > MAX_GENERATORS {
            return Err(FormError::InvalidFrame(format!(
                "{} generators exceed the limit of {MAX_GENERATORS}",
                self.generators.len()
            )));
        }
        let mut symbols = vec![Symbol {
            name: FORMAL_UNIT.to_string(),
            kind: SymbolKind::FormalUnit,
        }];
        let mut generators = Vec::with_capacity(self.generators.len());
        for (name, coord) in &self.generators {
            let paired = coord.as_ref().map(|c| {
                symbols.push(Symbol {
                    name: c.clone(),
                    kind: SymbolKind::Coordinate,
                });
                symbols.len() - 1
            });
            generators.push(Generator {
                name: name.clone(),
                paired,
            });
        }
        for s in &self.scalars {
            symbols.push(Symbol {
                name: s.clone(),
                kind: SymbolKind::Coordinate,
            });
        }
        let mut names: Vec<&str> = symbols
            .iter()
            .map(|s| s.name.as_str())
            .chain(generators.iter().map(|g| g.name.as_str()))
            .collect();
        for n in &names {
            if n.is_empty() || !n.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(FormError::InvalidFrame(format!("bad identifier `{n}`")));
            }
        }
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(FormError::InvalidFrame(format!("duplicate name `{}`", w[0])));
        }
        let mut pairing = vec![None; symbols.len()];
        for (gi, g) in generators.iter().enumerate() {
            if let Some(si) = g.paired {
                pairing[si] = Some(gi);
            }
        }
        Ok(Arc::new(Frame {
            symbols,
            generators,
            pairing,
        }))
    }
}

impl Frame {
    pub fn builder() -> FrameBuilder {
        FrameBuilder::default()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn generator_index(&self, name: &str) -> Result<usize, FormError> {
        self.generators
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| FormError::UnknownGenerator(name.to_string()))
    }

    pub fn symbol_index(&self, name: &str) -> Result<usize, FormError> {
        self.symbols
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| FormError::UnknownSymbol(name.to_string()))
    }
}

/// Exponent vector over the frame's symbols.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Monomial(Vec<u32>);

impl Monomial {
    fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

/// Polynomial in the frame symbols with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    nsym: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    fn zero(nsym: usize) -> Self {
        Poly {
            nsym,
            terms: BTreeMap::new(),
        }
    }

    fn constant(nsym: usize, c: BigRational) -> Self {
        let mut p = Poly::zero(nsym);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(nsym), c);
        }
        p
    }

    fn variable(nsym: usize, idx: usize, power: u32) -> Self {
        let mut m = Monomial::one(nsym);
        m.0[idx] = power;
        let mut p = Poly::zero(nsym);
        p.terms.insert(m, BigRational::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    fn scale(&self, s: &BigRational) -> Poly {
        let mut out = Poly::zero(self.nsym);
        if s.is_zero() {
            return out;
        }
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), c * s);
        }
        out
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.nsym);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    fn depends_on(&self, idx: usize) -> bool {
        self.terms.keys().any(|m| m.0[idx] > 0)
    }

    fn derivative(&self, idx: usize) -> Poly {
        let mut out = Poly::zero(self.nsym);
        for (m, c) in &self.terms {
            let e = m.0[idx];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.0[idx] = e - 1;
            out.add_term(m2, c * BigRational::from_integer(BigInt::from(e)));
        }
        out
    }

    /// Integral over `x_idx ∈ [0, 1]`.
    fn integrate_unit(&self, idx: usize) -> Poly {
        let mut out = Poly::zero(self.nsym);
        for (m, c) in &self.terms {
            let e = m.0[idx];
            let mut m2 = m.clone();
            m2.0[idx] = 0;
            out.add_term(m2, c / BigRational::from_integer(BigInt::from(e + 1)));
        }
        out
    }

    /// The constant term, if the polynomial has no symbol dependence.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.0.iter().all(|&e| e == 0).then(|| c.clone())
            }
            _ => None,
        }
    }
}

/// Sign of the permutation sorting `seq`, or `None` if it has a repeat.
fn sort_sign(seq: &[usize]) -> Option<i32> {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] == seq[j] {
                return None;
            }
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    Some(if inversions.is_multiple_of(2) { 1 } else { -1 })
}

/// Sign of `e_a ∧ e_b` relative to the sorted mask `a | b`; `None` if they overlap.
fn wedge_sign(a: u64, b: u64) -> Option<i32> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        swaps += (a >> (j + 1)).count_ones();
    }
    Some(if swaps.is_multiple_of(2) { 1 } else { -1 })
}

fn mask_indices(mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut rest = mask;
    while rest != 0 {
        out.push(rest.trailing_zeros() as usize);
        rest &= rest - 1;
    }
    out
}

/// An element of the exterior algebra over a [`Frame`].
#[derive(Debug, Clone)]
pub struct Form {
    frame: Arc<Frame>,
    terms: BTreeMap<u64, Poly>,
}

impl PartialEq for Form {
    fn eq(&self, other: &Self) -> bool {
        same_frame(&self.frame, &other.frame) && self.terms == other.terms
    }
}

fn same_frame(a: &Arc<Frame>, b: &Arc<Frame>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn rational(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Form {
    pub fn zero(frame: &Arc<Frame>) -> Form {
        Form {
            frame: frame.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(frame: &Arc<Frame>) -> Form {
        Form::constant(frame, BigRational::one())
    }

    pub fn constant(frame: &Arc<Frame>, c: BigRational) -> Form {
        let mut f = Form::zero(frame);
        f.insert(0, Poly::constant(frame.symbols.len(), c));
        f
    }

    pub fn integer(frame: &Arc<Frame>, c: i64) -> Form {
        Form::constant(frame, rational(c))
    }

    /// The formal unit `u = 1/(2πi)` as a 0-form.
    pub fn unit(frame: &Arc<Frame>) -> Form {
        let mut f = Form::zero(frame);
        f.insert(0, Poly::variable(frame.symbols.len(), 0, 1));
        f
    }

    /// A coordinate scalar (or parameter) as a 0-form.
    pub fn scalar(frame: &Arc<Frame>, name: &str) -> Result<Form, FormError> {
        let idx = frame.symbol_index(name)?;
        let mut f = Form::zero(frame);
        f.insert(0, Poly::variable(frame.symbols.len(), idx, 1));
        Ok(f)
    }

    pub fn generator(frame: &Arc<Frame>, name: &str) -> Result<Form, FormError> {
        let idx = frame.generator_index(name)?;
        let mut f = Form::zero(frame);
        f.insert(1u64 << idx, Poly::constant(frame.symbols.len(), BigRational::one()));
        Ok(f)
    }

    /// Wedge of the named generators in the order given.
    pub fn monomial(frame: &Arc<Frame>, names: &[&str]) -> Result<Form, FormError> {
        names.iter().try_fold(Form::one(frame), |acc, n| {
            acc.wedge(&Form::generator(frame, n)?)
        })
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    fn nsym(&self) -> usize {
        self.frame.symbols.len()
    }

    fn insert(&mut self, mask: u64, p: Poly) {
        if p.is_zero() {
            return;
        }
        match self.terms.get_mut(&mask) {
            Some(existing) => {
                *existing = existing.add(&p);
                if existing.is_zero() {
                    self.terms.remove(&mask);
                }
            }
            None => {
                self.terms.insert(mask, p);
            }
        }
    }

    fn check_frame(&self, other: &Form) -> Result<(), FormError> {
        if same_frame(&self.frame, &other.frame) {
            Ok(())
        } else {
            Err(FormError::FrameMismatch)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degrees present in the form, ascending.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.terms.keys().map(|m| m.count_ones() as usize).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Homogeneous degree, or `None` for mixed-degree and zero forms.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        match self.degrees().as_slice() {
            [d] => Some(*d),
            _ => None,
        }
    }

    pub fn component(&self, degree: usize) -> Form {
        self.filter(|mask| mask.count_ones() as usize == degree)
    }

    /// Keeps the terms whose generator mask satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(u64) -> bool) -> Form {
        Form {
            frame: self.frame.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(**m))
                .map(|(m, p)| (*m, p.clone()))
                .collect(),
        }
    }

    /// Terms with exactly `count` generators drawn from `names`.
    pub fn bidegree_part(&self, names: &[&str], count: usize) -> Result<Form, FormError> {
        let mut sel = 0u64;
        for n in names {
            sel |= 1u64 << self.frame.generator_index(n)?;
        }
        Ok(self.filter(|m| (m & sel).count_ones() as usize == count))
    }

    pub fn plus(&self, other: &Form) -> Result<Form, FormError> {
        self.check_frame(other)?;
        let mut out = self.clone();
        for (m, p) in &other.terms {
            out.insert(*m, p.clone());
        }
        Ok(out)
    }

    pub fn minus(&self, other: &Form) -> Result<Form, FormError> {
        self.plus(&other.neg())
    }

    pub fn neg(&self) -> Form {
        self.scale(&rational(-1))
    }

    pub fn scale(&self, s: &BigRational) -> Form {
        let mut out = Form::zero(&self.frame);
        for (m, p) in &self.terms {
            out.insert(*m, p.scale(s));
        }
        out
    }

    pub fn wedge(&self, other: &Form) -> Result<Form, FormError> {
        self.check_frame(other)?;
        let mut out = Form::zero(&self.frame);
        for (ma, pa) in &self.terms {
            for (mb, pb) in &other.terms {
                if let Some(sign) = wedge_sign(*ma, *mb) {
                    out.insert(ma | mb, pa.mul(pb).scale(&rational(sign as i64)));
                }
            }
        }
        Ok(out)
    }

    /// `self^∧k`.
    pub fn power(&self, k: u32) -> Result<Form, FormError> {
        (0..k).try_fold(Form::one(&self.frame), |acc, _| acc.wedge(self))
    }

    /// Exterior derivative. Coordinates without a paired generator may
    /// appear in coefficients only as constants.
    pub fn ext_d(&self) -> Result<Form, FormError> {
        let mut out = Form::zero(&self.frame);
        for (mask, p) in &self.terms {
            for (si, sym) in self.frame.symbols.iter().enumerate() {
                if sym.kind != SymbolKind::Coordinate || !p.depends_on(si) {
                    continue;
                }
                let gi = self.frame.pairing[si]
                    .ok_or_else(|| FormError::UnpairedCoordinate(sym.name.clone()))?;
                if let Some(sign) = wedge_sign(1u64 << gi, *mask) {
                    out.insert(mask | (1u64 << gi), p.derivative(si).scale(&rational(sign as i64)));
                }
            }
        }
        Ok(out)
    }

    /// `Σ_k f^∧k / k!`, for `f` without a degree-0 component.
    pub fn exp_truncated(&self) -> Result<Form, FormError> {
        if let Some(p) = self.terms.get(&0) {
            let zero_part = Form {
                frame: self.frame.clone(),
                terms: BTreeMap::from([(0, p.clone())]),
            };
            return Err(FormError::DegreeZero(zero_part.to_string()));
        }
        let mut total = Form::one(&self.frame);
        let mut term = Form::one(&self.frame);
        let mut k = 1i64;
        loop {
            term = term.wedge(self)?.scale(&BigRational::new(BigInt::from(1), BigInt::from(k)));
            if term.is_zero() {
                return Ok(total);
            }
            total = total.plus(&term)?;
            k += 1;
        }
    }

    /// Integrates over the unit-period fiber spanned by `fiber` (fiber-first
    /// orientation). Terms missing any fiber generator integrate to zero.
    pub fn fiber_integrate(&self, fiber: &[&str]) -> Result<Form, FormError> {
        let mut order = Vec::with_capacity(fiber.len());
        let mut fmask = 0u64;
        for name in fiber {
            let gi = self.frame.generator_index(name)?;
            if fmask & (1u64 << gi) != 0 {
                return Err(FormError::RepeatedGenerator(name.to_string()));
            }
            fmask |= 1u64 << gi;
            order.push(gi);
        }
        let mut out = Form::zero(&self.frame);
        for (mask, p) in &self.terms {
            if mask & fmask != fmask {
                continue;
            }
            let rest = mask & !fmask;
            let seq: Vec<usize> = order.iter().copied().chain(mask_indices(rest)).collect();
            let sign = sort_sign(&seq).expect("fiber and rest are disjoint");
            let mut coeff = p.scale(&rational(sign as i64));
            for gi in &order {
                if let Some(si) = self.frame.generators[*gi].paired {
                    coeff = coeff.integrate_unit(si);
                }
            }
            out.insert(rest, coeff);
        }
        Ok(out)
    }

    /// Collects the form as `Σ u^k · F_k` with `F_k` free of `u`.
    pub fn by_unit_power(&self) -> BTreeMap<u32, Form> {
        let mut out: BTreeMap<u32, Form> = BTreeMap::new();
        for (mask, p) in &self.terms {
            for (m, c) in &p.terms {
                let k = m.0[0];
                let mut m2 = m.clone();
                m2.0[0] = 0;
                let mut q = Poly::zero(self.nsym());
                q.add_term(m2, c.clone());
                out.entry(k)
                    .or_insert_with(|| Form::zero(&self.frame))
                    .insert(*mask, q);
            }
        }
        out
    }

    /// Coefficient of the given generator monomial (sorted with sign) when
    /// it is a pure rational number times `u^k`; returns `(coefficient, k)`.
    pub fn rational_coefficient(&self, names: &[&str]) -> Result<Option<(BigRational, u32)>, FormError> {
        let mut seq = Vec::with_capacity(names.len());
        let mut mask = 0u64;
        for n in names {
            let gi = self.frame.generator_index(n)?;
            mask |= 1u64 << gi;
            seq.push(gi);
        }
        let sign = sort_sign(&seq).ok_or_else(|| FormError::RepeatedGenerator(names.join(",")))?;
        let Some(p) = self.terms.get(&mask) else {
            return Ok(None);
        };
        if p.terms.len() != 1 {
            return Ok(None);
        }
        let (m, c) = p.terms.iter().next().expect("one term");
        if m.0[1..].iter().any(|&e| e > 0) {
            return Ok(None);
        }
        Ok(Some((c * rational(sign as i64), m.0[0])))
    }

    /// Substitutes integer values for coordinate scalars.
    pub fn substitute(&self, values: &[(&str, i64)]) -> Result<Form, FormError> {
        let idx: Vec<(usize, BigRational)> = values
            .iter()
            .map(|(n, v)| Ok((self.frame.symbol_index(n)?, rational(*v))))
            .collect::<Result<_, FormError>>()?;
        let mut out = Form::zero(&self.frame);
        for (mask, p) in &self.terms {
            let mut q = Poly::zero(self.nsym());
            for (m, c) in &p.terms {
                let mut m2 = m.clone();
                let mut c2 = c.clone();
                for (si, v) in &idx {
                    let e = m2.0[*si];
                    if e > 0 {
                        c2 *= num_traits::pow(v.clone(), e as usize);
                        m2.0[*si] = 0;
                    }
                }
                q.add_term(m2, c2);
            }
            out.insert(*mask, q);
        }
        Ok(out)
    }

    fn render_terms(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (mask, p) in &self.terms {
            let gens: Vec<&str> = mask_indices(*mask)
                .into_iter()
                .map(|g| self.frame.generators[g].name.as_str())
                .collect();
            for (m, c) in &p.terms {
                let mut coeff = render_rational(c);
                for (si, e) in m.0.iter().enumerate().skip(1) {
                    match e {
                        0 => {}
                        1 => coeff.push_str(&format!("*{}", self.frame.symbols[si].name)),
                        e => coeff.push_str(&format!("*{}^{}", self.frame.symbols[si].name, e)),
                    }
                }
                out.push(format!("{coeff} * {FORMAL_UNIT}^{} * [{}]", m.0[0], gens.join("^")));
            }
        }
        out.sort();
        out
    }

    /// Parses the canonical text format produced by `Display`.
    pub fn parse(frame: &Arc<Frame>, text: &str) -> Result<Form, FormError> {
        let text = text.trim();
        let mut out = Form::zero(frame);
        if text == "0" {
            return Ok(out);
        }
        let nsym = frame.symbols.len();
        for term in text.split(" + ") {
            let err = |reason: &str| FormError::Parse {
                term: term.to_string(),
                reason: reason.to_string(),
            };
            let parts: Vec<&str> = term.trim().split(" * ").collect();
            let [coeff, unit, gens] = parts.as_slice() else {
                return Err(err("expected `coeff * u^k * [gens]`"));
            };
            let mut factors = coeff.split('*');
            let num = factors.next().ok_or_else(|| err("missing coefficient"))?;
            let c = parse_rational(num).ok_or_else(|| err("bad rational coefficient"))?;
            let mut mono = Monomial::one(nsym);
            for f in factors {
                let (name, e) = match f.split_once('^') {
                    Some((n, e)) => (n, e.parse::<u32>().map_err(|_| err("bad exponent"))?),
                    None => (f, 1),
                };
                let si = frame.symbol_index(name)?;
                if si == 0 {
                    return Err(err("the formal unit belongs in the second factor"));
                }
                mono.0[si] += e;
            }
            let k = match unit.strip_prefix(FORMAL_UNIT) {
                Some("") => 1,
                Some(rest) => rest
                    .strip_prefix('^')
                    .and_then(|e| e.parse::<u32>().ok())
                    .ok_or_else(|| err("bad unit power"))?,
                None => return Err(err("expected `u^k`")),
            };
            mono.0[0] += k;
            let inner = gens
                .strip_prefix('[')
                .and_then(|g| g.strip_suffix(']'))
                .ok_or_else(|| err("generators must be bracketed"))?;
            let mut seq = Vec::new();
            if !inner.is_empty() {
                for g in inner.split('^') {
                    seq.push(frame.generator_index(g)?);
                }
            }
            let sign = sort_sign(&seq).ok_or_else(|| err("repeated generator"))?;
            let mask = seq.iter().fold(0u64, |m, g| m | (1u64 << g));
            let mut p = Poly::zero(nsym);
            p.add_term(mono, c * rational(sign as i64));
            out.insert(mask, p);
        }
        Ok(out)
    }
}

fn render_rational(c: &BigRational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    match s.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.parse().ok()?;
            if d.is_zero() || d.is_negative() {
                return None;
            }
            Some(BigRational::new(n.parse().ok()?, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.render_terms();
        if terms.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&terms.join(" + "))
        }
    }
}

pub type IntVector3 = [i64; 3];

/// Outcome of the gcd criterion for realizing a 3D class by circle-bundle
/// families of 1D Dirac operators.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Realizability {
    pub realizable: bool,
    pub gcd: i64,
    /// `β` with `Σ βᵢ fᵢ = 1`, present iff realizable.
    pub witness: Option<IntVector3>,
}

/// Extended Euclid: `(g, x, y)` with `a x + b y = g ≥ 0`.
pub fn extended_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let e = a.extended_gcd(&b);
    if e.gcd < 0 {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

pub fn gcd_realizability(f: IntVector3) -> Realizability {
    let (g12, x, y) = extended_gcd(f[0], f[1]);
    let (g, s, t) = extended_gcd(g12, f[2]);
    let realizable = g == 1;
    Realizability {
        realizable,
        gcd: g,
        witness: realizable.then_some([s * x, s * y, t]),
    }
}

/// Overall normalization of the degree-3 index form on the moduli torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexNormalization {
    /// Degree-6 part of `exp(u F)`, i.e. `u³ F³ / 6`.
    IndexForm,
    /// `u³ F³` without the factorial.
    Bare,
}

/// Sign of `∫_{T³ₓ} u³F³/6 = s · u³ da1∧da2∧da3` for the frame order
/// `dx1 dx2 dx3 da1 da2 da3` and fiber-first integration.
pub const DD_ORIENTATION_SIGN: i64 = 1;

/// Sign of `∫_{T³ₓ} (u²F²/2)_{(3,1)} = s · u² Σ fᵢ daᵢ` in the same conventions.
pub const SPECTRAL_FLOW_ORIENTATION_SIGN: i64 = -1;

/// Frame of `T³ₓ × T³ₐ` with line-bundle curvature parameters `f1 f2 f3`.
pub fn torus_frame() -> Arc<Frame> {
    Frame::builder()
        .paired("dx1", "x1")
        .paired("dx2", "x2")
        .paired("dx3", "x3")
        .paired("da1", "a1")
        .paired("da2", "a2")
        .paired("da3", "a3")
        .scalar("f1")
        .scalar("f2")
        .scalar("f3")
        .build()
        .expect("static frame")
}

pub const FIBER_X: [&str; 3] = ["dx1", "dx2", "dx3"];

/// `F = Σ daᵢ ∧ dxᵢ`, the curvature of the universal constant potential.
pub fn universal_curvature(frame: &Arc<Frame>) -> Result<Form, FormError> {
    (1..=3).try_fold(Form::zero(frame), |acc, i| {
        acc.plus(&Form::monomial(frame, &[&format!("da{i}"), &format!("dx{i}")])?)
    })
}

/// `f̂ = f1 dx2∧dx3 + f2 dx3∧dx1 + f3 dx1∧dx2` with symbolic `fᵢ`.
pub fn background_curvature(frame: &Arc<Frame>) -> Result<Form, FormError> {
    let pieces = [("f1", "dx2", "dx3"), ("f2", "dx3", "dx1"), ("f3", "dx1", "dx2")];
    pieces.iter().try_fold(Form::zero(frame), |acc, (f, a, b)| {
        acc.plus(&Form::scalar(frame, f)?.wedge(&Form::monomial(frame, &[a, b])?)?)
    })
}

/// Degree-3 form `∫_{T³ₓ} (·)` reproducing the Dixmier–Douady class.
pub fn dd_three_form(frame: &Arc<Frame>, norm: IndexNormalization) -> Result<Form, FormError> {
    let u = Form::unit(frame);
    let f = universal_curvature(frame)?;
    let top = match norm {
        IndexNormalization::IndexForm => u.wedge(&f)?.exp_truncated()?.component(6),
        IndexNormalization::Bare => u.power(3)?.wedge(&f.power(3)?)?,
    };
    top.fiber_integrate(&FIBER_X)
}

/// Degree-1 spectral-flow form `∫_{T³ₓ}` of the (3,1) part of the index form
/// with `F = Σ daᵢ∧dxᵢ + f̂`.
pub fn spectral_flow_form(frame: &Arc<Frame>) -> Result<Form, FormError> {
    let u = Form::unit(frame);
    let f = universal_curvature(frame)?.plus(&background_curvature(frame)?)?;
    let four = u.wedge(&f)?.exp_truncated()?.component(4);
    four.bidegree_part(&FIBER_X, 3)?.fiber_integrate(&FIBER_X)
}

/// Frame of `S¹_θ × T³ₐ` with symbolic twist parameters `α1..3`, `β1..3`.
pub fn circle_frame() -> Arc<Frame> {
    Frame::builder()
        .paired("dtheta", "theta")
        .paired("da1", "a1")
        .paired("da2", "a2")
        .paired("da3", "a3")
        .scalar("alpha1")
        .scalar("alpha2")
        .scalar("alpha3")
        .scalar("beta1")
        .scalar("beta2")
        .scalar("beta3")
        .build()
        .expect("static frame")
}

/// `α̂ = Σ αᵢ daᵢ`.
pub fn alpha_hat(frame: &Arc<Frame>) -> Result<Form, FormError> {
    (1..=3).try_fold(Form::zero(frame), |acc, i| {
        acc.plus(&Form::scalar(frame, &format!("alpha{i}"))?.wedge(&Form::generator(frame, &format!("da{i}"))?)?)
    })
}

/// `β̂ = β1 da2∧da3 + β2 da3∧da1 + β3 da1∧da2`.
pub fn beta_hat(frame: &Arc<Frame>) -> Result<Form, FormError> {
    let pieces = [("beta1", "da2", "da3"), ("beta2", "da3", "da1"), ("beta3", "da1", "da2")];
    pieces.iter().try_fold(Form::zero(frame), |acc, (b, x, y)| {
        acc.plus(&Form::scalar(frame, b)?.wedge(&Form::monomial(frame, &[x, y])?)?)
    })
}

/// `∫_{S¹_θ} exp(u f)` for the twist `f = dθ∧α̂ + β̂`.
pub fn circle_bundle_character(frame: &Arc<Frame>) -> Result<Form, FormError> {
    let u = Form::unit(frame);
    let twist = Form::generator(frame, "dtheta")?
        .wedge(&alpha_hat(frame)?)?
        .plus(&beta_hat(frame)?)?;
    u.wedge(&twist)?.exp_truncated()?.fiber_integrate(&["dtheta"])
}

/// [`circle_bundle_character`] with integer `α`, `β` substituted.
pub fn circle_bundle_character_numeric(alpha: IntVector3, beta: IntVector3) -> Result<Form, FormError> {
    let frame = circle_frame();
    let values: Vec<(String, i64)> = (0..3)
        .flat_map(|i| [(format!("alpha{}", i + 1), alpha[i]), (format!("beta{}", i + 1), beta[i])])
        .collect();
    let refs: Vec<(&str, i64)> = values.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    circle_bundle_character(&frame)?.substitute(&refs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame6() -> Arc<Frame> {
        torus_frame()
    }

    fn g(frame: &Arc<Frame>, n: &str) -> Form {
        Form::generator(frame, n).unwrap()
    }

    #[test]
    fn repeated_generator_vanishes() {
        let fr = frame6();
        assert!(g(&fr, "dx1").wedge(&g(&fr, "dx1")).unwrap().is_zero());
    }

    #[test]
    fn generators_anticommute() {
        let fr = frame6();
        let ab = g(&fr, "dx1").wedge(&g(&fr, "dx2")).unwrap();
        let ba = g(&fr, "dx2").wedge(&g(&fr, "dx1")).unwrap();
        assert_eq!(ab, ba.neg());
    }

    #[test]
    fn cube_of_universal_curvature_is_six_times_product() {
        // Oracle: expand all 27 ordered triples of the summands daᵢ∧dxᵢ by hand.
        let fr = frame6();
        let pieces: Vec<Form> = (1..=3)
            .map(|i| Form::monomial(&fr, &[&format!("da{i}"), &format!("dx{i}")]).unwrap())
            .collect();
        let mut brute = Form::zero(&fr);
        for a in &pieces {
            for b in &pieces {
                for c in &pieces {
                    brute = brute.plus(&a.wedge(b).unwrap().wedge(c).unwrap()).unwrap();
                }
            }
        }
        let expected = Form::monomial(&fr, &["da1", "dx1", "da2", "dx2", "da3", "dx3"])
            .unwrap()
            .scale(&rational(6));
        assert_eq!(brute, expected);
        assert_eq!(universal_curvature(&fr).unwrap().power(3).unwrap(), expected);
        // da1 dx1 da2 dx2 da3 dx3 has six inversions against dx1 dx2 dx3 da1 da2 da3.
        let sorted = Form::monomial(&fr, &["dx1", "dx2", "dx3", "da1", "da2", "da3"]).unwrap();
        let seq = [3usize, 0, 4, 1, 5, 2];
        assert_eq!(sort_sign(&seq), Some(1));
        assert_eq!(expected, sorted.scale(&rational(6)));
    }

    #[test]
    fn ext_d_examples() {
        let fr = frame6();
        let f = Form::scalar(&fr, "a1")
            .unwrap()
            .wedge(&Form::monomial(&fr, &["da2", "da3"]).unwrap())
            .unwrap();
        assert_eq!(f.ext_d().unwrap(), Form::monomial(&fr, &["da1", "da2", "da3"]).unwrap());
        assert!(Form::integer(&fr, 7).ext_d().unwrap().is_zero());
        let h = Form::scalar(&fr, "a1")
            .unwrap()
            .wedge(&Form::scalar(&fr, "a2").unwrap())
            .unwrap()
            .wedge(&g(&fr, "dx1"))
            .unwrap();
        assert!(h.ext_d().unwrap().ext_d().unwrap().is_zero());
    }

    #[test]
    fn ext_d_rejects_unpaired_coordinate() {
        let fr = frame6();
        let f = Form::scalar(&fr, "f1").unwrap().wedge(&g(&fr, "dx1")).unwrap();
        assert_eq!(f.ext_d(), Err(FormError::UnpairedCoordinate("f1".into())));
    }

    #[test]
    fn exp_of_zero_is_one() {
        let fr = frame6();
        assert_eq!(Form::zero(&fr).exp_truncated().unwrap(), Form::one(&fr));
    }

    #[test]
    fn exp_rejects_degree_zero() {
        let fr = frame6();
        assert!(matches!(
            Form::integer(&fr, 1).exp_truncated(),
            Err(FormError::DegreeZero(_))
        ));
    }

    #[test]
    fn exp_of_circle_twist_expands_directly() {
        let fr = circle_frame();
        let u = Form::unit(&fr);
        let a = alpha_hat(&fr).unwrap();
        let b = beta_hat(&fr).unwrap();
        let dth = g(&fr, "dtheta");
        let x = u.wedge(&dth).unwrap().wedge(&a).unwrap();
        let y = u.wedge(&b).unwrap();
        let got = x.plus(&y).unwrap().exp_truncated().unwrap();
        let half = BigRational::new(1.into(), 2.into());
        let expected = Form::one(&fr)
            .plus(&x)
            .unwrap()
            .plus(&y)
            .unwrap()
            .plus(&x.wedge(&y).unwrap())
            .unwrap()
            .plus(&y.wedge(&y).unwrap().scale(&half))
            .unwrap();
        assert_eq!(got, expected);
        // β̂∧β̂ is a 4-form on three da's.
        assert!(b.wedge(&b).unwrap().is_zero());
    }

    #[test]
    fn top_degree_overflow_is_absent() {
        let fr = frame6();
        let f = universal_curvature(&fr).unwrap();
        assert!(f.power(4).unwrap().is_zero());
        assert!(f.exp_truncated().unwrap().degrees().iter().all(|&d| d <= 6));
    }

    #[test]
    fn fiber_integral_of_volume_is_one() {
        let fr = frame6();
        let vol = Form::monomial(&fr, &FIBER_X).unwrap();
        assert_eq!(vol.fiber_integrate(&FIBER_X).unwrap(), Form::one(&fr));
    }

    #[test]
    fn fiber_integral_of_polynomial_coefficient() {
        let fr = frame6();
        let x1 = Form::scalar(&fr, "x1").unwrap();
        let f = x1.wedge(&x1).unwrap().wedge(&g(&fr, "dx1")).unwrap();
        let third = Form::constant(&fr, BigRational::new(1.into(), 3.into()));
        assert_eq!(f.fiber_integrate(&["dx1"]).unwrap(), third);
    }

    #[test]
    fn fiber_integrate_rejects_unknown_generator() {
        let fr = frame6();
        assert_eq!(
            Form::one(&fr).fiber_integrate(&["dz"]),
            Err(FormError::UnknownGenerator("dz".into()))
        );
    }

    #[test]
    fn index_form_normalization_gives_unit_volume() {
        let fr = frame6();
        let omega = dd_three_form(&fr, IndexNormalization::IndexForm).unwrap();
        let expected = Form::unit(&fr)
            .power(3)
            .unwrap()
            .wedge(&Form::monomial(&fr, &["da1", "da2", "da3"]).unwrap())
            .unwrap()
            .scale(&rational(DD_ORIENTATION_SIGN));
        assert_eq!(omega, expected);
        let bare = dd_three_form(&fr, IndexNormalization::Bare).unwrap();
        assert_eq!(bare, expected.scale(&rational(6)));
    }

    #[test]
    fn spectral_flow_form_is_sum_f_da() {
        let fr = frame6();
        let got = spectral_flow_form(&fr).unwrap();
        let sum = (1..=3).fold(Form::zero(&fr), |acc, i| {
            acc.plus(
                &Form::scalar(&fr, &format!("f{i}"))
                    .unwrap()
                    .wedge(&g(&fr, &format!("da{i}")))
                    .unwrap(),
            )
            .unwrap()
        });
        let expected = Form::unit(&fr)
            .power(2)
            .unwrap()
            .wedge(&sum)
            .unwrap()
            .scale(&rational(SPECTRAL_FLOW_ORIENTATION_SIGN));
        assert_eq!(got, expected);
    }

    #[test]
    fn trivial_bundle_has_no_spectral_flow() {
        let fr = frame6();
        let got = spectral_flow_form(&fr)
            .unwrap()
            .substitute(&[("f1", 0), ("f2", 0), ("f3", 0)])
            .unwrap();
        assert!(got.is_zero());
    }

    #[test]
    fn circle_character_is_alpha_plus_alpha_beta() {
        let fr = circle_frame();
        let u = Form::unit(&fr);
        let a = alpha_hat(&fr).unwrap();
        let b = beta_hat(&fr).unwrap();
        let expected = u
            .wedge(&a)
            .unwrap()
            .plus(&u.power(2).unwrap().wedge(&a.wedge(&b).unwrap()).unwrap())
            .unwrap();
        assert_eq!(circle_bundle_character(&fr).unwrap(), expected);
        let numeric = circle_bundle_character_numeric([2, 3, 0], [-1, 1, 5]).unwrap();
        let coeff = numeric.rational_coefficient(&["da1", "da2", "da3"]).unwrap();
        assert_eq!(coeff, Some((rational(1), 2)));
    }

    #[test]
    fn gcd_examples() {
        assert_eq!(
            gcd_realizability([2, 3, 0]),
            Realizability { realizable: true, gcd: 1, witness: Some([-1, 1, 0]) }
        );
        let r = gcd_realizability([2, 4, 6]);
        assert!(!r.realizable && r.witness.is_none() && r.gcd == 2);
        let r = gcd_realizability([0, 0, 0]);
        assert!(!r.realizable && r.witness.is_none() && r.gcd == 0);
    }

    #[test]
    fn canonical_text_round_trip() {
        let fr = frame6();
        let f = spectral_flow_form(&fr)
            .unwrap()
            .plus(&dd_three_form(&fr, IndexNormalization::Bare).unwrap())
            .unwrap()
            .plus(&Form::constant(&fr, BigRational::new((-3).into(), 7.into())))
            .unwrap();
        let text = f.to_string();
        assert_eq!(Form::parse(&fr, &text).unwrap(), f);
        assert_eq!(Form::parse(&fr, "0").unwrap(), Form::zero(&fr));
        assert_eq!(
            Form::parse(&fr, "1 * u^0 * [dx2^dx1]").unwrap(),
            Form::monomial(&fr, &["dx1", "dx2"]).unwrap().neg()
        );
    }

    #[test]
    fn display_is_sorted_terms() {
        let fr = frame6();
        let omega = dd_three_form(&fr, IndexNormalization::IndexForm).unwrap();
        assert_eq!(omega.to_string(), "1 * u^3 * [da1^da2^da3]");
    }

    #[test]
    fn mismatched_frames_are_rejected() {
        let a = Form::one(&torus_frame());
        let b = Form::one(&circle_frame());
        assert_eq!(a.wedge(&b), Err(FormError::FrameMismatch));
    }
}
