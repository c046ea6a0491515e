//! Sequences indexed by `j = 1, 2, ...` in closed form.
//!
//! A [`Seq`] is a finite list of exceptional values on top of a tail
//! `sum_t c_t * r_t^j` of geometric terms. A term with ratio 1 is a constant.
//! This is enough to describe every per-column quantity that arises from
//! geometric charges, eventually constant variables, and the scoring rules
//! used here, and it keeps infima, limits and series sums exact.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Num;

/// Scans and thresholds stop here instead of running unbounded.
pub const MAX_SCAN: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coef: Num,
    pub ratio: BigRational,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Seq {
    exceptions: BTreeMap<u64, Num>,
    terms: Vec<Term>,
}

fn rpow(r: &BigRational, j: u64) -> BigRational {
    num_traits::pow(r.clone(), j as usize)
}

fn negligible(c: &Num) -> bool {
    match c {
        Num::Exact(r) => r.is_zero(),
        Num::Approx(v) => v.abs() <= 1e-12,
    }
}

impl Seq {
    pub fn zero() -> Self {
        Seq::default()
    }

    pub fn constant(c: Num) -> Self {
        Seq::geometric(c, BigRational::one())
    }

    /// `coef * ratio^j`.
    pub fn geometric(coef: Num, ratio: BigRational) -> Self {
        assert!(ratio.is_positive(), "ratio must be positive");
        Seq::from_parts(BTreeMap::new(), vec![Term { coef, ratio }])
    }

    /// Explicit values at `1..=prefix.len()`, then the constant `tail`.
    pub fn from_prefix(prefix: &[Num], tail: Num) -> Self {
        let exceptions = prefix
            .iter()
            .enumerate()
            .map(|(i, v)| (i as u64 + 1, v.clone()))
            .collect();
        Seq::from_parts(
            exceptions,
            vec![Term {
                coef: tail,
                ratio: BigRational::one(),
            }],
        )
    }

    pub fn from_parts(exceptions: BTreeMap<u64, Num>, mut terms: Vec<Term>) -> Self {
        terms.sort_by(|a, b| b.ratio.cmp(&a.ratio));
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.ratio == t.ratio => last.coef = &last.coef + &t.coef,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| !negligible(&t.coef));
        let mut s = Seq {
            exceptions: BTreeMap::new(),
            terms: merged,
        };
        for (i, v) in exceptions {
            assert!(i >= 1, "sequence indices start at 1");
            if !negligible(&(&v - &s.tail_at(i))) {
                s.exceptions.insert(i, v);
            }
        }
        s
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn exceptions(&self) -> &BTreeMap<u64, Num> {
        &self.exceptions
    }

    pub fn exception_indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.exceptions.keys().copied()
    }

    pub fn last_exception(&self) -> u64 {
        self.exceptions.keys().next_back().copied().unwrap_or(0)
    }

    pub fn with_exception(mut self, i: u64, v: Num) -> Self {
        let mut ex = std::mem::take(&mut self.exceptions);
        ex.insert(i, v);
        Seq::from_parts(ex, self.terms)
    }

    /// The tail formula alone, with no exceptional values.
    pub fn pure(&self) -> Seq {
        Seq {
            exceptions: BTreeMap::new(),
            terms: self.terms.clone(),
        }
    }

    pub fn is_pure(&self) -> bool {
        self.exceptions.is_empty()
    }

    pub fn tail_at(&self, j: u64) -> Num {
        self.terms
            .iter()
            .map(|t| &t.coef * &Num::Exact(rpow(&t.ratio, j)))
            .sum()
    }

    pub fn at(&self, j: u64) -> Num {
        match self.exceptions.get(&j) {
            Some(v) => v.clone(),
            None => self.tail_at(j),
        }
    }

    pub fn prefix(&self, n: u64) -> Vec<Num> {
        (1..=n).map(|j| self.at(j)).collect()
    }

    pub fn max_ratio(&self) -> Option<&BigRational> {
        self.terms.first().map(|t| &t.ratio)
    }

    /// Bounded with a limit: every ratio is at most 1.
    pub fn is_convergent(&self) -> bool {
        self.max_ratio().is_none_or(|r| *r <= BigRational::one())
    }

    /// Constant from some index on.
    pub fn is_eventually_constant(&self) -> bool {
        self.terms.iter().all(|t| t.ratio.is_one())
    }

    pub fn as_constant(&self) -> Option<Num> {
        if !self.exceptions.is_empty() || !self.is_eventually_constant() {
            return None;
        }
        Some(self.limit().expect("constant sequences converge"))
    }

    pub fn is_zero(&self) -> bool {
        self.exceptions.is_empty() && self.terms.is_empty()
    }

    pub fn limit(&self) -> Option<Num> {
        if !self.is_convergent() {
            return None;
        }
        Some(
            self.terms
                .iter()
                .find(|t| t.ratio.is_one())
                .map(|t| t.coef.clone())
                .unwrap_or_else(Num::zero),
        )
    }

    /// `sum_{j >= 1} self(j)`, defined when every ratio is below 1.
    pub fn series_sum(&self) -> Result<Num> {
        if self.terms.iter().any(|t| t.ratio >= BigRational::one()) {
            return Err(Error::DivergentCombination(format!(
                "terms do not vanish: {self}"
            )));
        }
        let tail: Num = self
            .terms
            .iter()
            .map(|t| {
                let r = &t.ratio;
                &t.coef * &Num::Exact(r / (BigRational::one() - r))
            })
            .sum();
        let corrections: Num = self
            .exceptions
            .iter()
            .map(|(i, v)| v - &self.tail_at(*i))
            .sum();
        Ok(tail + corrections)
    }

    fn indices_with(&self, other: &Seq) -> BTreeSet<u64> {
        self.exception_indices()
            .chain(other.exception_indices())
            .collect()
    }

    fn zip(&self, other: &Seq, terms: Vec<Term>, f: impl Fn(Num, Num) -> Num) -> Seq {
        let ex = self
            .indices_with(other)
            .into_iter()
            .map(|i| (i, f(self.at(i), other.at(i))))
            .collect();
        Seq::from_parts(ex, terms)
    }

    pub fn add(&self, other: &Seq) -> Seq {
        let terms = self
            .terms
            .iter()
            .chain(other.terms.iter())
            .cloned()
            .collect();
        self.zip(other, terms, |a, b| a + b)
    }

    pub fn sub(&self, other: &Seq) -> Seq {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Seq {
        self.scale(&Num::int(-1))
    }

    pub fn scale(&self, c: &Num) -> Seq {
        Seq::from_parts(
            self.exceptions.iter().map(|(i, v)| (*i, v * c)).collect(),
            self.terms
                .iter()
                .map(|t| Term {
                    coef: &t.coef * c,
                    ratio: t.ratio.clone(),
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Seq) -> Seq {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Term {
                    coef: &a.coef * &b.coef,
                    ratio: &a.ratio * &b.ratio,
                });
            }
        }
        self.zip(other, terms, |a, b| a * b)
    }

    /// Division by a sequence whose tail is a single geometric term.
    pub fn checked_div(&self, other: &Seq) -> Result<Seq> {
        let (c, r) = match other.terms.as_slice() {
            [] => return Err(Error::DivisionByZero),
            [t] => (t.coef.clone(), t.ratio.clone()),
            _ => {
                return Err(Error::UnstructuredResult(format!(
                    "quotient by {other} has no closed form"
                )))
            }
        };
        let mut ex = BTreeMap::new();
        for i in self.indices_with(other) {
            let d = other.at(i);
            ex.insert(i, self.at(i).checked_div(&d).ok_or(Error::DivisionByZero)?);
        }
        let inv = c.recip().ok_or(Error::DivisionByZero)?;
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coef: &t.coef * &inv,
                ratio: &t.ratio / &r,
            })
            .collect();
        Ok(Seq::from_parts(ex, terms))
    }

    pub fn approximate(&self) -> Seq {
        Seq::from_parts(
            self.exceptions
                .iter()
                .map(|(i, v)| (*i, v.approximate()))
                .collect(),
            self.terms
                .iter()
                .map(|t| Term {
                    coef: t.coef.approximate(),
                    ratio: t.ratio.clone(),
                })
                .collect(),
        )
    }

    pub fn is_exact(&self) -> bool {
        self.exceptions.values().all(Num::is_exact) && self.terms.iter().all(|t| t.coef.is_exact())
    }

    /// Sign of `self(j)` for all large `j`; raises `h` to the index after
    /// which the sign is settled. Exceptions are ignored.
    pub fn eventual_sign(&self, h: &Horizon) -> Ordering {
        let Some(lead) = self.terms.first() else {
            return Ordering::Equal;
        };
        match dominance_threshold(lead, &self.terms[1..], &Num::int(2)) {
            Ok(n) => h.raise(n - 1),
            Err(_) => h.overflow(),
        }
        if lead.coef.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }

    pub fn infimum(&self) -> Result<Extremum> {
        let tail = tail_infimum(&self.terms, &self.exceptions)?;
        let mut best = tail;
        for (i, v) in &self.exceptions {
            let better = match &best.value {
                Bound::NegInf => false,
                Bound::PosInf => true,
                Bound::Finite(b) => {
                    v < b || (v == b && (!best.attained || best.index.is_some_and(|k| *i < k)))
                }
            };
            if better {
                best = Extremum::attained(v.clone(), *i);
            }
        }
        Ok(best)
    }

    pub fn supremum(&self) -> Result<Extremum> {
        let m = self.neg().infimum()?;
        Ok(Extremum {
            value: m.value.neg(),
            attained: m.attained,
            index: m.index,
        })
    }
}

/// Smallest `n >= 1` such that `|lead| * lead.ratio^j >= factor * sum |c| r^j`
/// over `rest` for every `j >= n`; `rest` must have smaller ratios.
fn dominance_threshold(lead: &Term, rest: &[Term], factor: &Num) -> Result<u64> {
    if rest.is_empty() {
        return Ok(1);
    }
    let lc = lead.coef.abs();
    let rel: Vec<(Num, BigRational)> = rest
        .iter()
        .map(|t| (&t.coef.abs() * factor, &t.ratio / &lead.ratio))
        .collect();
    let holds = |j: u64| -> bool {
        let s: Num = rel.iter().map(|(c, r)| c * &Num::Exact(rpow(r, j))).sum();
        s <= lc
    };
    let mut hi = 1u64;
    while !holds(hi) {
        hi *= 2;
        if hi > MAX_SCAN {
            return Err(Error::HorizonTooLarge(hi));
        }
    }
    if hi == 1 {
        return Ok(1);
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Incremental evaluation of a tail at `j = 1, 2, ...`.
struct TailIter {
    coefs: Vec<Num>,
    ratios: Vec<Num>,
    powers: Vec<Num>,
    j: u64,
}

impl TailIter {
    fn new(terms: &[Term]) -> Self {
        TailIter {
            coefs: terms.iter().map(|t| t.coef.clone()).collect(),
            ratios: terms.iter().map(|t| Num::Exact(t.ratio.clone())).collect(),
            powers: vec![Num::one(); terms.len()],
            j: 0,
        }
    }

    fn next(&mut self) -> Result<(u64, Num)> {
        self.j += 1;
        if self.j > MAX_SCAN {
            return Err(Error::HorizonTooLarge(self.j));
        }
        let mut v = Num::zero();
        for ((p, r), c) in self.powers.iter_mut().zip(&self.ratios).zip(&self.coefs) {
            *p = &*p * r;
            v = v + c * &*p;
        }
        Ok((self.j, v))
    }
}

fn first_free(skip: &BTreeMap<u64, Num>) -> u64 {
    (1..)
        .find(|j| !skip.contains_key(j))
        .expect("finite exception set")
}

fn tail_infimum(terms: &[Term], skip: &BTreeMap<u64, Num>) -> Result<Extremum> {
    let Some(d) = terms.first() else {
        return Ok(Extremum::attained(Num::zero(), first_free(skip)));
    };
    let mut best: Option<(Num, u64)> = None;
    let mut it = TailIter::new(terms);
    let consider = |j: u64, v: Num, best: &mut Option<(Num, u64)>| {
        if skip.contains_key(&j) {
            return;
        }
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            *best = Some((v, j));
        }
    };
    let two = Num::int(2);
    if d.ratio > BigRational::one() {
        if d.coef.is_negative() {
            return Ok(Extremum {
                value: Bound::NegInf,
                attained: false,
                index: None,
            });
        }
        let n = dominance_threshold(d, &terms[1..], &two)?;
        loop {
            let (j, v) = it.next()?;
            consider(j, v, &mut best);
            if j >= n {
                if let Some((b, _)) = &best {
                    let lower = &(&d.coef * &Num::Exact(rpow(&d.ratio, j))) / &two;
                    if lower >= *b {
                        break;
                    }
                }
            }
        }
        let (v, i) = best.expect("scan visited a free index");
        return Ok(Extremum::attained(v, i));
    }
    let (limit, rest) = if d.ratio.is_one() {
        (d.coef.clone(), &terms[1..])
    } else {
        (Num::zero(), terms)
    };
    let Some(lead) = rest.first() else {
        return Ok(Extremum::attained(limit, first_free(skip)));
    };
    let n = dominance_threshold(lead, &rest[1..], &two)?;
    if lead.coef.is_positive() {
        while it.j + 1 < n {
            let (j, v) = it.next()?;
            consider(j, v, &mut best);
        }
        return Ok(match best {
            Some((v, i)) if v <= limit => Extremum::attained(v, i),
            _ => Extremum {
                value: Bound::Finite(limit),
                attained: false,
                index: None,
            },
        });
    }
    let three_halves = Num::ratio(3, 2);
    loop {
        let (j, v) = it.next()?;
        consider(j, v, &mut best);
        if j >= n {
            if let Some((b, _)) = &best {
                let slack = &(&three_halves * &lead.coef.abs()) * &Num::Exact(rpow(&lead.ratio, j));
                if &limit - &slack >= *b {
                    break;
                }
            }
        }
    }
    let (v, i) = best.expect("scan visited a free index");
    Ok(Extremum::attained(v, i))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Bound {
    NegInf,
    Finite(Num),
    PosInf,
}

impl Bound {
    pub fn neg(&self) -> Bound {
        match self {
            Bound::NegInf => Bound::PosInf,
            Bound::PosInf => Bound::NegInf,
            Bound::Finite(v) => Bound::Finite(-v),
        }
    }

    pub fn finite(&self) -> Option<&Num> {
        match self {
            Bound::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => f.write_str("-inf"),
            Bound::PosInf => f.write_str("+inf"),
            Bound::Finite(v) => write!(f, "{v}"),
        }
    }
}

/// An infimum or supremum over `j >= 1`, with the index where it is reached.
#[derive(Clone, Debug, PartialEq)]
pub struct Extremum {
    pub value: Bound,
    pub attained: bool,
    pub index: Option<u64>,
}

impl Extremum {
    pub fn attained(v: Num, i: u64) -> Self {
        Extremum {
            value: Bound::Finite(v),
            attained: true,
            index: Some(i),
        }
    }
}

/// Index after which every comparison made so far is settled.
#[derive(Debug, Default)]
pub struct Horizon {
    n: Cell<u64>,
    overflowed: Cell<bool>,
}

impl Horizon {
    pub fn new() -> Self {
        Horizon::default()
    }

    pub fn raise(&self, n: u64) {
        if n > self.n.get() {
            self.n.set(n);
        }
    }

    pub fn get(&self) -> u64 {
        self.n.get()
    }

    fn overflow(&self) {
        self.overflowed.set(true);
    }

    pub fn overflowed(&self) -> bool {
        self.overflowed.get()
    }
}

/// Arithmetic shared by plain numbers and sequences, so that formulas can be
/// written once and evaluated either pointwise or in closed form.
pub trait Scalar: Clone + fmt::Debug {
    fn from_num(n: &Num) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn try_div(&self, o: &Self) -> Result<Self>;
    fn try_sqrt(&self) -> Result<Self>;
    fn compare(&self, o: &Self, h: &Horizon) -> Ordering;

    fn zero() -> Self {
        Self::from_num(&Num::zero())
    }

    fn sign(&self, h: &Horizon) -> Ordering {
        self.compare(&Self::zero(), h)
    }

    fn abs(&self, h: &Horizon) -> Self {
        if self.sign(h) == Ordering::Less {
            self.neg()
        } else {
            self.clone()
        }
    }

    fn scale(&self, c: &Num) -> Self {
        self.mul(&Self::from_num(c))
    }
}

impl Scalar for Num {
    fn from_num(n: &Num) -> Self {
        n.clone()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn try_div(&self, o: &Self) -> Result<Self> {
        self.checked_div(o).ok_or(Error::DivisionByZero)
    }
    fn try_sqrt(&self) -> Result<Self> {
        self.sqrt()
            .ok_or_else(|| Error::OutOfRange(format!("square root of {self}")))
    }
    fn compare(&self, o: &Self, _: &Horizon) -> Ordering {
        self.total_cmp(o)
    }
}

fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    let (n, d) = (r.numer(), r.denom());
    let (sn, sd): (BigInt, BigInt) = (n.sqrt(), d.sqrt());
    (&(&sn * &sn) == n && &(&sd * &sd) == d).then(|| BigRational::new(sn, sd))
}

impl Scalar for Seq {
    fn from_num(n: &Num) -> Self {
        Seq::constant(n.clone())
    }
    fn add(&self, o: &Self) -> Self {
        Seq::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Seq::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Seq::mul(self, o)
    }
    fn neg(&self) -> Self {
        Seq::neg(self)
    }
    fn try_div(&self, o: &Self) -> Result<Self> {
        self.checked_div(o)
    }
    fn try_sqrt(&self) -> Result<Self> {
        if !self.is_pure() {
            return Err(Error::UnstructuredResult(format!("square root of {self}")));
        }
        match self.terms.as_slice() {
            [] => Ok(Seq::zero()),
            [t] => {
                let ratio = rational_sqrt(&t.ratio)
                    .ok_or_else(|| Error::UnstructuredResult(format!("square root of {self}")))?;
                Ok(Seq::geometric(t.coef.try_sqrt()?, ratio))
            }
            _ => Err(Error::UnstructuredResult(format!("square root of {self}"))),
        }
    }
    fn compare(&self, o: &Self, h: &Horizon) -> Ordering {
        Seq::sub(&self.pure(), &o.pure()).eventual_sign(h)
    }
}

/// A formula over sequences, written generically so it can run both on
/// the closed-form tails and on individual indices.
pub trait Kernel {
    fn inputs(&self) -> Vec<&Seq>;
    fn eval<T: Scalar>(&self, args: &[T], h: &Horizon) -> Result<T>;
}

/// Evaluates a kernel as a sequence: symbolically on the tails, then
/// pointwise below the horizon and at every exceptional index.
pub fn lift<K: Kernel>(k: &K) -> Result<Seq> {
    let inputs = k.inputs();
    let tails: Vec<Seq> = inputs.iter().map(|s| s.pure()).collect();
    let h = Horizon::new();
    let tail = k.eval(&tails, &h)?;
    if h.overflowed() {
        return Err(Error::HorizonTooLarge(MAX_SCAN));
    }
    let n = h.get();
    if n > MAX_SCAN {
        return Err(Error::HorizonTooLarge(n));
    }
    let mut idx: BTreeSet<u64> = (1..=n).collect();
    for s in &inputs {
        idx.extend(s.exception_indices());
    }
    let mut ex = BTreeMap::new();
    let local = Horizon::new();
    for j in idx {
        let args: Vec<Num> = inputs.iter().map(|s| s.at(j)).collect();
        ex.insert(j, k.eval(&args, &local)?);
    }
    Ok(Seq::from_parts(ex, tail.terms))
}

impl fmt::Display for Seq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            f.write_str("0")?;
        }
        for (n, t) in self.terms.iter().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            if t.ratio.is_one() {
                write!(f, "{}", t.coef)?;
            } else {
                write!(f, "{}*({})^j", t.coef, t.ratio)?;
            }
        }
        if !self.exceptions.is_empty() {
            f.write_str(" except {")?;
            for (n, (i, v)) in self.exceptions.iter().enumerate() {
                if n > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{i}: {v}")?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    coef: Num,
    ratio: Num,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SeqRepr {
    Constant(Num),
    Full {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constant: Option<Num>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        terms: Vec<TermRepr>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        exceptions: Vec<(u64, Num)>,
    },
}

impl Serialize for Seq {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if let Some(c) = self.as_constant() {
            return SeqRepr::Constant(c).serialize(s);
        }
        let constant = self
            .terms
            .iter()
            .find(|t| t.ratio.is_one())
            .map(|t| t.coef.clone());
        let terms = self
            .terms
            .iter()
            .filter(|t| !t.ratio.is_one())
            .map(|t| TermRepr {
                coef: t.coef.clone(),
                ratio: Num::Exact(t.ratio.clone()),
            })
            .collect();
        let exceptions = self
            .exceptions
            .iter()
            .map(|(i, v)| (*i, v.clone()))
            .collect();
        SeqRepr::Full {
            constant,
            terms,
            exceptions,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Seq {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match SeqRepr::deserialize(d)? {
            SeqRepr::Constant(c) => Ok(Seq::constant(c)),
            SeqRepr::Full {
                constant,
                terms,
                exceptions,
            } => {
                let mut ts = Vec::new();
                if let Some(c) = constant {
                    ts.push(Term {
                        coef: c,
                        ratio: BigRational::one(),
                    });
                }
                for t in terms {
                    let ratio = match t.ratio {
                        Num::Exact(r) if r.is_positive() => r,
                        other => {
                            return Err(D::Error::custom(format!(
                                "ratio {other} must be a positive rational"
                            )))
                        }
                    };
                    ts.push(Term {
                        coef: t.coef,
                        ratio,
                    });
                }
                let mut ex = BTreeMap::new();
                for (i, v) in exceptions {
                    if i == 0 {
                        return Err(D::Error::custom("sequence indices start at 1"));
                    }
                    if ex.insert(i, v).is_some() {
                        return Err(D::Error::custom(format!("index {i} listed twice")));
                    }
                }
                Ok(Seq::from_parts(ex, ts))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half() -> BigRational {
        BigRational::new(1.into(), 2.into())
    }

    fn geo(c: Num, num: i64, den: i64) -> Seq {
        Seq::geometric(c, BigRational::new(num.into(), den.into()))
    }

    #[test]
    fn canonical_form_drops_redundant_exceptions() {
        let s = Seq::constant(Num::int(3)).with_exception(2, Num::int(3));
        assert!(s.is_pure());
        assert_eq!(s, Seq::constant(Num::int(3)));
    }

    #[test]
    fn series_sums_are_closed_form() {
        let s = Seq::geometric(Num::ratio(1, 2), half());
        assert_eq!(s.series_sum().unwrap(), Num::ratio(1, 2));
        let t = s.clone().with_exception(1, Num::int(1));
        assert_eq!(t.series_sum().unwrap(), Num::ratio(5, 4));
        assert!(Seq::constant(Num::int(1)).series_sum().is_err());
    }

    #[test]
    fn infimum_of_decreasing_tail_is_unattained() {
        let s = Seq::constant(Num::ratio(3, 2)).add(&Seq::geometric(Num::one(), half()));
        let m = s.infimum().unwrap();
        assert_eq!(m.value, Bound::Finite(Num::ratio(3, 2)));
        assert!(!m.attained);
        let sup = s.supremum().unwrap();
        assert_eq!(sup.value, Bound::Finite(Num::int(2)));
        assert_eq!(sup.index, Some(1));
    }

    #[test]
    fn infimum_from_below_is_attained() {
        // 1/3 - 2^-j dips lowest at j = 1
        let s = Seq::constant(Num::ratio(1, 3)).sub(&Seq::geometric(Num::one(), half()));
        let m = s.infimum().unwrap();
        assert_eq!(m.value, Bound::Finite(Num::ratio(-1, 6)));
        assert_eq!(m.index, Some(1));
    }

    #[test]
    fn exceptions_can_beat_the_tail() {
        let s = Seq::constant(Num::int(1)).with_exception(5, Num::int(-2));
        let m = s.infimum().unwrap();
        assert_eq!(m.value, Bound::Finite(Num::int(-2)));
        assert_eq!(m.index, Some(5));
    }

    #[test]
    fn growing_terms_give_infinite_bounds() {
        let s = geo(Num::int(-1), 2, 1);
        assert_eq!(s.infimum().unwrap().value, Bound::NegInf);
        let t = geo(Num::int(1), 2, 1).sub(&Seq::constant(Num::int(5)));
        let m = t.infimum().unwrap();
        assert_eq!(m.value, Bound::Finite(Num::int(-3)));
    }

    #[test]
    fn eventual_sign_records_horizon() {
        // 2^-j - 100 * 4^-j is negative for small j, positive after j = 6
        let s = geo(Num::int(1), 1, 2).sub(&geo(Num::int(100), 1, 4));
        let h = Horizon::new();
        assert_eq!(s.eventual_sign(&h), Ordering::Greater);
        assert!(h.get() >= 6);
        for j in h.get() + 1..h.get() + 20 {
            assert!(s.at(j).is_positive());
        }
    }

    struct Clamp<'a>(&'a Seq);

    impl Kernel for Clamp<'_> {
        fn inputs(&self) -> Vec<&Seq> {
            vec![self.0]
        }
        fn eval<T: Scalar>(&self, a: &[T], h: &Horizon) -> Result<T> {
            let floor = T::from_num(&Num::ratio(1, 8));
            Ok(if a[0].compare(&floor, h) == Ordering::Greater {
                a[0].clone()
            } else {
                floor
            })
        }
    }

    #[test]
    fn lift_agrees_with_pointwise_evaluation() {
        let s = geo(Num::int(1), 1, 2).with_exception(2, Num::int(7));
        let out = lift(&Clamp(&s)).unwrap();
        for j in 1..40 {
            let v = s.at(j);
            let want = if v > Num::ratio(1, 8) {
                v
            } else {
                Num::ratio(1, 8)
            };
            assert_eq!(out.at(j), want, "index {j}");
        }
    }

    #[test]
    fn division_by_monomial() {
        let n = geo(Num::int(3), 1, 4).add(&geo(Num::int(1), 1, 2));
        let d = geo(Num::int(1), 1, 2);
        let q = n.checked_div(&d).unwrap();
        assert_eq!(q, geo(Num::int(3), 1, 2).add(&Seq::constant(Num::int(1))));
        assert!(n.checked_div(&n).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let s = Seq::constant(Num::ratio(3, 2))
            .add(&geo(Num::int(1), 1, 2))
            .with_exception(3, Num::int(0));
        let text = serde_json::to_string(&s).unwrap();
        let back: Seq = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let c: Seq = serde_json::from_str("\"3/4\"").unwrap();
        assert_eq!(c, Seq::constant(Num::ratio(3, 4)));
    }

    fn arb_seq() -> impl Strategy<Value = Seq> {
        let term = (
            -6i64..=6,
            prop::sample::select(vec![(1i64, 1i64), (1, 2), (1, 3), (3, 4), (1, 5)]),
        );
        (
            prop::collection::vec(term, 0..4),
            prop::collection::btree_map(1u64..8, -6i64..=6, 0..3),
        )
            .prop_map(|(ts, ex)| {
                let terms = ts
                    .into_iter()
                    .map(|(c, (n, d))| Term {
                        coef: Num::ratio(c, 2),
                        ratio: BigRational::new(n.into(), d.into()),
                    })
                    .collect();
                let ex = ex.into_iter().map(|(i, v)| (i, Num::ratio(v, 3))).collect();
                Seq::from_parts(ex, terms)
            })
    }

    proptest! {
        #[test]
        fn infimum_is_a_lower_bound_and_tight(s in arb_seq()) {
            let m = s.infimum().unwrap();
            let v = m.value.finite().unwrap().clone();
            for j in 1..60 {
                prop_assert!(s.at(j) >= v);
            }
            if let Some(i) = m.index {
                prop_assert_eq!(s.at(i), v.clone());
            } else {
                prop_assert_eq!(s.limit().unwrap(), v);
            }
        }

        #[test]
        fn arithmetic_is_pointwise(a in arb_seq(), b in arb_seq()) {
            let (s, p) = (a.add(&b), a.mul(&b));
            for j in 1..12 {
                prop_assert_eq!(s.at(j), a.at(j) + b.at(j));
                prop_assert_eq!(p.at(j), a.at(j) * b.at(j));
            }
        }

        #[test]
        fn series_sum_matches_partial_sums(a in arb_seq()) {
            let a = a.sub(&Seq::constant(a.limit().unwrap()));
            let total = a.series_sum().unwrap();
            let partial: Num = (1..200).map(|j| a.at(j)).sum();
            prop_assert!((total - partial).abs() < Num::ratio(1, 1_000_000));
        }
    }
}
