//! Finitely additive probabilities on a column-structured countable space.
//!
//! States are pairs `(k, j)`: a column `k` out of finitely many, and an index
//! `j >= 1`. A [`Charge`] puts a summable sequence of atom weights on each
//! column, plus a diffuse mass that the column's cofinite sets carry and its
//! finite sets do not.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Num;
use crate::seq::{lift, Bound, Extremum, Horizon, Kernel, Scalar, Seq};

/// A state `(column, index)`; columns count from 0, indices from 1.
pub type State = (usize, u64);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnSet {
    Finite(BTreeSet<u64>),
    Cofinite(BTreeSet<u64>),
}

impl ColumnSet {
    pub fn all() -> Self {
        ColumnSet::Cofinite(BTreeSet::new())
    }

    pub fn none() -> Self {
        ColumnSet::Finite(BTreeSet::new())
    }

    pub fn contains(&self, j: u64) -> bool {
        match self {
            ColumnSet::Finite(s) => s.contains(&j),
            ColumnSet::Cofinite(s) => !s.contains(&j),
        }
    }

    pub fn complement(&self) -> Self {
        match self {
            ColumnSet::Finite(s) => ColumnSet::Cofinite(s.clone()),
            ColumnSet::Cofinite(s) => ColumnSet::Finite(s.clone()),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        use ColumnSet::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a | b),
            (Finite(a), Cofinite(b)) | (Cofinite(b), Finite(a)) => Cofinite(b - a),
            (Cofinite(a), Cofinite(b)) => Cofinite(a & b),
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.complement().union(&other.complement()).complement()
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, ColumnSet::Finite(s) if s.is_empty())
    }

    pub fn is_cofinite(&self) -> bool {
        matches!(self, ColumnSet::Cofinite(_))
    }

    pub fn indicator(&self) -> Seq {
        match self {
            ColumnSet::Finite(s) => {
                Seq::from_parts(s.iter().map(|j| (*j, Num::one())).collect(), Vec::new())
            }
            ColumnSet::Cofinite(s) => Seq::from_parts(
                s.iter().map(|j| (*j, Num::zero())).collect(),
                Seq::constant(Num::one()).terms().to_vec(),
            ),
        }
    }
}

/// A finite-or-cofinite set in every column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    cols: Vec<ColumnSet>,
}

impl Event {
    pub fn new(cols: Vec<ColumnSet>) -> Self {
        assert!(!cols.is_empty(), "at least one column");
        Event { cols }
    }

    pub fn omega(columns: usize) -> Self {
        Event::new(vec![ColumnSet::all(); columns])
    }

    pub fn empty(columns: usize) -> Self {
        Event::new(vec![ColumnSet::none(); columns])
    }

    pub fn column(k: usize, columns: usize) -> Self {
        let mut e = Event::empty(columns);
        e.cols[k] = ColumnSet::all();
        e
    }

    /// The cross-section `{(k, j) : k = 0..columns}`.
    pub fn cell(j: u64, columns: usize) -> Self {
        Event::new(vec![ColumnSet::Finite([j].into()); columns])
    }

    pub fn state(k: usize, j: u64, columns: usize) -> Self {
        let mut e = Event::empty(columns);
        e.cols[k] = ColumnSet::Finite([j].into());
        e
    }

    pub fn columns(&self) -> usize {
        self.cols.len()
    }

    pub fn col(&self, k: usize) -> &ColumnSet {
        &self.cols[k]
    }

    pub fn contains(&self, (k, j): State) -> bool {
        self.cols[k].contains(j)
    }

    pub fn complement(&self) -> Self {
        Event::new(self.cols.iter().map(ColumnSet::complement).collect())
    }

    pub fn union(&self, other: &Self) -> Self {
        Event::new(
            self.cols
                .iter()
                .zip(&other.cols)
                .map(|(a, b)| a.union(b))
                .collect(),
        )
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Event::new(
            self.cols
                .iter()
                .zip(&other.cols)
                .map(|(a, b)| a.intersection(b))
                .collect(),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.cols.iter().all(ColumnSet::is_empty)
    }

    pub fn is_omega(&self) -> bool {
        self.complement().is_empty()
    }

    pub fn indicator(&self) -> Rv {
        Rv::new(self.cols.iter().map(ColumnSet::indicator).collect())
            .expect("indicators are bounded")
    }
}

/// A random variable given column by column as a convergent sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Rv {
    cols: Vec<Seq>,
}

/// Infimum or supremum of a variable over all states.
#[derive(Clone, Debug, PartialEq)]
pub struct RvExtremum {
    pub value: Bound,
    pub attained: bool,
    pub state: Option<State>,
    /// Column whose tail realises the bound when it is not attained.
    pub column: usize,
}

impl Rv {
    pub fn new(cols: Vec<Seq>) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::Invalid(
                "a variable needs at least one column".into(),
            ));
        }
        for (k, s) in cols.iter().enumerate() {
            if !s.is_convergent() {
                return Err(Error::DivergentCombination(format!(
                    "column {k} grows without bound: {s}"
                )));
            }
        }
        Ok(Rv { cols })
    }

    pub fn constant(c: Num, columns: usize) -> Self {
        Rv {
            cols: vec![Seq::constant(c); columns],
        }
    }

    pub fn columns(&self) -> usize {
        self.cols.len()
    }

    pub fn col(&self, k: usize) -> &Seq {
        &self.cols[k]
    }

    pub fn cols(&self) -> &[Seq] {
        &self.cols
    }

    pub fn at(&self, (k, j): State) -> Num {
        self.cols[k].at(j)
    }

    pub fn limit(&self, k: usize) -> Num {
        self.cols[k].limit().expect("validated convergent")
    }

    fn zip(&self, other: &Rv, f: impl Fn(&Seq, &Seq) -> Seq) -> Rv {
        assert_eq!(self.columns(), other.columns(), "column count mismatch");
        Rv {
            cols: self
                .cols
                .iter()
                .zip(&other.cols)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Rv) -> Rv {
        self.zip(other, Seq::add)
    }

    pub fn sub(&self, other: &Rv) -> Rv {
        self.zip(other, Seq::sub)
    }

    pub fn mul(&self, other: &Rv) -> Rv {
        self.zip(other, Seq::mul)
    }

    pub fn scale(&self, c: &Num) -> Rv {
        Rv {
            cols: self.cols.iter().map(|s| s.scale(c)).collect(),
        }
    }

    pub fn neg(&self) -> Rv {
        self.scale(&Num::int(-1))
    }

    pub fn restrict(&self, e: &Event) -> Rv {
        self.mul(&e.indicator())
    }

    pub fn approximate(&self) -> Rv {
        Rv {
            cols: self.cols.iter().map(Seq::approximate).collect(),
        }
    }

    pub fn is_eventually_constant(&self) -> bool {
        self.cols.iter().all(Seq::is_eventually_constant)
    }

    pub fn infimum(&self) -> Result<RvExtremum> {
        let mut best: Option<(Extremum, usize)> = None;
        for (k, s) in self.cols.iter().enumerate() {
            let m = s.infimum()?;
            let better = match &best {
                None => true,
                Some((b, _)) => match (&m.value, &b.value) {
                    (Bound::NegInf, Bound::NegInf) => false,
                    (Bound::NegInf, _) => true,
                    (Bound::Finite(x), Bound::Finite(y)) => {
                        x < y || (x == y && m.attained && !b.attained)
                    }
                    _ => false,
                },
            };
            if better {
                best = Some((m, k));
            }
        }
        let (m, k) = best.expect("nonempty");
        Ok(RvExtremum {
            value: m.value,
            attained: m.attained,
            state: m.index.map(|j| (k, j)),
            column: k,
        })
    }

    pub fn supremum(&self) -> Result<RvExtremum> {
        let m = self.neg().infimum()?;
        Ok(RvExtremum {
            value: m.value.neg(),
            ..m
        })
    }

    /// States worth inspecting: every exceptional index and one index past
    /// them in each column.
    pub fn representative_states(&self) -> Vec<State> {
        let mut out = Vec::new();
        for (k, s) in self.cols.iter().enumerate() {
            out.extend(s.exception_indices().map(|j| (k, j)));
            out.push((k, s.last_exception() + 1));
        }
        out
    }

    /// Some state where the variable is at most `v`, if one exists.
    pub fn state_at_most(&self, v: &Num) -> Result<Option<State>> {
        let m = self.infimum()?;
        match (&m.value, m.state) {
            (Bound::Finite(x), Some(st)) if x <= v => return Ok(Some(st)),
            (Bound::Finite(x), _) if x >= v => return Ok(None),
            _ => {}
        }
        let k = m.column;
        let s = &self.cols[k];
        let start = s.last_exception() + 1;
        Ok((start..start + crate::seq::MAX_SCAN)
            .find(|j| s.at(*j) <= *v)
            .map(|j| (k, j)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColumnCharge {
    pub atoms: Seq,
    pub diffuse: Num,
}

/// A finitely additive probability: summable atoms plus diffuse mass on
/// each column's cofinite sets.
#[derive(Clone, Debug, PartialEq)]
pub struct Charge {
    cols: Vec<ColumnCharge>,
}

impl Charge {
    pub fn new(cols: Vec<ColumnCharge>) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::Invalid("a charge needs at least one column".into()));
        }
        let mut total = Num::zero();
        for (k, c) in cols.iter().enumerate() {
            let mass = c.atoms.series_sum().map_err(|_| {
                Error::Invalid(format!(
                    "atom weights in column {k} are not summable: {}",
                    c.atoms
                ))
            })?;
            if let Bound::Finite(m) = c.atoms.infimum()?.value {
                if m.is_negative() {
                    return Err(Error::Invalid(format!(
                        "atom weight {m} in column {k} is negative"
                    )));
                }
            }
            if c.diffuse.is_negative() {
                return Err(Error::Invalid(format!(
                    "diffuse mass {} in column {k} is negative",
                    c.diffuse
                )));
            }
            total = total + mass + c.diffuse.clone();
        }
        if !total.close_to(&Num::one(), 1e-9) {
            return Err(Error::Invalid(format!(
                "total mass must be exactly 1 (normalization), found {total}"
            )));
        }
        Ok(Charge { cols })
    }

    pub fn columns(&self) -> usize {
        self.cols.len()
    }

    pub fn col(&self, k: usize) -> &ColumnCharge {
        &self.cols[k]
    }

    /// No diffuse mass in any column.
    pub fn is_countably_additive(&self) -> bool {
        self.cols.iter().all(|c| c.diffuse.is_zero())
    }

    pub fn approximate(&self) -> Charge {
        Charge {
            cols: self
                .cols
                .iter()
                .map(|c| ColumnCharge {
                    atoms: c.atoms.approximate(),
                    diffuse: c.diffuse.approximate(),
                })
                .collect(),
        }
    }

    fn check_columns(&self, n: usize) -> Result<()> {
        if n != self.columns() {
            return Err(Error::Invalid(format!(
                "variable has {n} columns but the charge has {}",
                self.columns()
            )));
        }
        Ok(())
    }

    pub fn prevision(&self, x: &Rv) -> Result<Num> {
        self.check_columns(x.columns())?;
        let mut total = Num::zero();
        for (c, s) in self.cols.iter().zip(x.cols()) {
            total =
                total + c.atoms.mul(s).series_sum()? + &c.diffuse * &s.limit().expect("convergent");
        }
        Ok(total)
    }

    pub fn event_probability(&self, a: &Event) -> Result<Num> {
        self.prevision(&a.indicator())
    }

    /// `P(X | H)`; a null `H` needs a conditional charge concentrated on it.
    pub fn conditional_prevision(&self, x: &Rv, h: &Event, given: Option<&Charge>) -> Result<Num> {
        let hx = x.restrict(h);
        let ph = self.event_probability(h)?;
        if ph.is_positive() {
            return Ok(&self.prevision(&hx)? / &ph);
        }
        match given {
            Some(c) => {
                let mass = c.event_probability(h)?;
                if mass != Num::one() {
                    return Err(Error::Invalid(format!(
                        "conditional charge gives its conditioning event mass {mass}, not 1"
                    )));
                }
                c.prevision(&hx)
            }
            None => Err(Error::NullConditioningEvent(describe(h))),
        }
    }
}

fn describe(e: &Event) -> String {
    let parts: Vec<String> = (0..e.columns())
        .map(|k| match e.col(k) {
            ColumnSet::Finite(s) => format!("col{k}:{s:?}"),
            ColumnSet::Cofinite(s) if s.is_empty() => format!("col{k}:all"),
            ColumnSet::Cofinite(s) => format!("col{k}:all but {s:?}"),
        })
        .collect();
    parts.join(" ")
}

#[derive(Clone, Debug, PartialEq)]
pub enum Partition {
    /// Cells `H_j = {(k, j)}` across columns. `null_cells` gives, per
    /// column, the conditional weights to use inside cells of probability 0.
    CrossSection { null_cells: Option<Vec<Seq>> },
    /// One cell per column.
    Columns {
        conditionals: BTreeMap<usize, Charge>,
    },
    /// Finitely many cells.
    Explicit {
        cells: Vec<Event>,
        conditionals: BTreeMap<usize, Charge>,
    },
}

impl Partition {
    pub fn cross_section() -> Self {
        Partition::CrossSection { null_cells: None }
    }

    pub fn validate(&self, columns: usize) -> Result<()> {
        match self {
            Partition::CrossSection {
                null_cells: Some(w),
            } => {
                if w.len() != columns {
                    return Err(Error::Invalid(
                        "null-cell weights need one sequence per column".into(),
                    ));
                }
                let total = w.iter().fold(Seq::zero(), |a, b| a.add(b));
                if total != Seq::constant(Num::one()) {
                    return Err(Error::Invalid(
                        "null-cell weights must sum to 1 in every cell".into(),
                    ));
                }
                for s in w {
                    if matches!(s.infimum()?.value, Bound::Finite(ref m) if m.is_negative()) {
                        return Err(Error::Invalid(
                            "null-cell weights must be nonnegative".into(),
                        ));
                    }
                }
                Ok(())
            }
            Partition::CrossSection { null_cells: None } => Ok(()),
            Partition::Columns { conditionals } => {
                for (k, c) in conditionals {
                    if *k >= columns || c.columns() != columns {
                        return Err(Error::Invalid(format!(
                            "conditional charge for column {k} does not fit"
                        )));
                    }
                }
                Ok(())
            }
            Partition::Explicit {
                cells,
                conditionals,
            } => {
                if cells.is_empty() {
                    return Err(Error::Invalid("a partition needs at least one cell".into()));
                }
                let mut seen = Event::empty(columns);
                for (n, c) in cells.iter().enumerate() {
                    if c.columns() != columns {
                        return Err(Error::Invalid(format!(
                            "cell {n} has the wrong number of columns"
                        )));
                    }
                    if c.is_empty() {
                        return Err(Error::Invalid(format!("cell {n} is empty")));
                    }
                    if !seen.intersection(c).is_empty() {
                        return Err(Error::Invalid(format!("cell {n} overlaps an earlier cell")));
                    }
                    seen = seen.union(c);
                }
                if !seen.is_omega() {
                    return Err(Error::Invalid("cells do not cover every state".into()));
                }
                if conditionals.keys().any(|k| *k >= cells.len()) {
                    return Err(Error::Invalid(
                        "conditional charge for a missing cell".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Cell containing a state: the index for cross-sections, the column
    /// for column partitions, the position for explicit cells.
    pub fn cell_of(&self, (k, j): State) -> u64 {
        match self {
            Partition::CrossSection { .. } => j,
            Partition::Columns { .. } => k as u64,
            Partition::Explicit { cells, .. } => cells
                .iter()
                .position(|c| c.contains((k, j)))
                .expect("validated partition covers every state")
                as u64,
        }
    }
}

/// Conditional previsions across the cells of a partition.
#[derive(Clone, Debug, PartialEq)]
pub enum CellValues {
    /// One value per cross-section cell `H_j`.
    Indexed(Seq),
    /// One value per cell of a finite partition.
    Finite(Vec<Num>),
}

impl CellValues {
    pub fn infimum(&self) -> Result<Bound> {
        match self {
            CellValues::Indexed(s) => Ok(s.infimum()?.value),
            CellValues::Finite(v) => Ok(Bound::Finite(
                v.iter().cloned().reduce(Num::min).expect("nonempty"),
            )),
        }
    }

    pub fn supremum(&self) -> Result<Bound> {
        match self {
            CellValues::Indexed(s) => Ok(s.supremum()?.value),
            CellValues::Finite(v) => Ok(Bound::Finite(
                v.iter().cloned().reduce(Num::max).expect("nonempty"),
            )),
        }
    }
}

struct CrossKernel<'a> {
    weights: Vec<&'a Seq>,
    x: Vec<&'a Seq>,
    null: Option<Vec<&'a Seq>>,
}

impl Kernel for CrossKernel<'_> {
    fn inputs(&self) -> Vec<&Seq> {
        let mut v = self.weights.clone();
        v.extend(self.x.iter().copied());
        if let Some(n) = &self.null {
            v.extend(n.iter().copied());
        }
        v
    }

    fn eval<T: Scalar>(&self, a: &[T], h: &Horizon) -> Result<T> {
        let k = self.weights.len();
        let (w, rest) = a.split_at(k);
        let (x, null) = rest.split_at(k);
        let mass = w.iter().fold(T::zero(), |s, v| s.add(v));
        if mass.sign(h) == Ordering::Greater {
            let num = w
                .iter()
                .zip(x)
                .fold(T::zero(), |s, (w, x)| s.add(&w.mul(x)));
            return num.try_div(&mass);
        }
        if self.null.is_some() {
            return Ok(null
                .iter()
                .zip(x)
                .fold(T::zero(), |s, (c, x)| s.add(&c.mul(x))));
        }
        Err(Error::NullConditioningEvent("a cross-section cell".into()))
    }
}

impl Charge {
    /// `P(X | H)` for every cell `H` of the partition.
    pub fn cell_previsions(&self, x: &Rv, pi: &Partition) -> Result<CellValues> {
        self.check_columns(x.columns())?;
        pi.validate(self.columns())?;
        match pi {
            Partition::CrossSection { null_cells } => {
                let k = CrossKernel {
                    weights: self.cols.iter().map(|c| &c.atoms).collect(),
                    x: x.cols().iter().collect(),
                    null: null_cells.as_ref().map(|w| w.iter().collect()),
                };
                let y = lift(&k)?;
                if !y.is_convergent() {
                    return Err(Error::UnstructuredResult(format!(
                        "conditional previsions {y} do not converge"
                    )));
                }
                Ok(CellValues::Indexed(y))
            }
            Partition::Columns { conditionals } => (0..self.columns())
                .map(|k| {
                    self.conditional_prevision(
                        x,
                        &Event::column(k, self.columns()),
                        conditionals.get(&k),
                    )
                })
                .collect::<Result<Vec<_>>>()
                .map(CellValues::Finite),
            Partition::Explicit {
                cells,
                conditionals,
            } => cells
                .iter()
                .enumerate()
                .map(|(n, c)| self.conditional_prevision(x, c, conditionals.get(&n)))
                .collect::<Result<Vec<_>>>()
                .map(CellValues::Finite),
        }
    }

    /// The variable `Y = P(X | pi)`, constant on each cell.
    pub fn prevision_given_partition(&self, x: &Rv, pi: &Partition) -> Result<Rv> {
        let columns = self.columns();
        match (self.cell_previsions(x, pi)?, pi) {
            (CellValues::Indexed(y), _) => Rv::new(vec![y; columns]),
            (CellValues::Finite(v), Partition::Columns { .. }) => {
                Rv::new(v.into_iter().map(Seq::constant).collect())
            }
            (CellValues::Finite(v), Partition::Explicit { cells, .. }) => {
                let mut y = Rv::constant(Num::zero(), columns);
                for (c, val) in cells.iter().zip(v) {
                    y = y.add(&c.indicator().scale(&val));
                }
                Ok(y)
            }
            _ => unreachable!("cell values match the partition kind"),
        }
    }
}
