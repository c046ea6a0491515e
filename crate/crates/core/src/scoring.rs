//! Scoring rules built from a measure with a positive density.
//!
//! The score of forecast `q` for outcome `x` is `∫_q^x (x - v) dλ(v)` with the
//! usual orientation convention. Writing `Λ` for an antiderivative of the
//! density and `M` for an antiderivative of `v f(v)`, this is
//! `x (Λ(x) - Λ(q)) - (M(x) - M(q))`, which every admitted density kind
//! evaluates in closed form.

use std::cmp::Ordering;

use crate::charges::{Charge, Rv};
use crate::error::{Error, Result};
use crate::num::Num;
use crate::seq::{lift, Bound, Horizon, Kernel, Scalar, Seq};

#[derive(Clone, Debug, PartialEq)]
pub enum Measure<T> {
    /// Density `densities[i]` on the `i`-th piece cut by the sorted
    /// breakpoints; the outer pieces run to ±∞.
    Piecewise {
        breakpoints: Vec<T>,
        densities: Vec<T>,
    },
    /// Density `scale * |v|^(-1/2) / 2`.
    Sqrt { scale: T },
}

pub type LambdaMeasure = Measure<Num>;

/// A family of measures indexed by `j >= 1`.
pub type RuleFamily = Measure<Seq>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

impl<T: Clone> Measure<T> {
    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Measure<U> {
        match self {
            Measure::Piecewise {
                breakpoints,
                densities,
            } => Measure::Piecewise {
                breakpoints: breakpoints.iter().map(&f).collect(),
                densities: densities.iter().map(&f).collect(),
            },
            Measure::Sqrt { scale } => Measure::Sqrt { scale: f(scale) },
        }
    }

    pub fn params(&self) -> Vec<&T> {
        match self {
            Measure::Piecewise {
                breakpoints,
                densities,
            } => breakpoints.iter().chain(densities).collect(),
            Measure::Sqrt { scale } => vec![scale],
        }
    }

    /// Same shape, parameters taken in `params` order.
    pub fn rebuild<U: Clone>(&self, args: &[U]) -> Measure<U> {
        match self {
            Measure::Piecewise { breakpoints, .. } => {
                let (b, d) = args.split_at(breakpoints.len());
                Measure::Piecewise {
                    breakpoints: b.to_vec(),
                    densities: d.to_vec(),
                }
            }
            Measure::Sqrt { .. } => Measure::Sqrt {
                scale: args[0].clone(),
            },
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().len()
    }
}

impl<T: Scalar> Measure<T> {
    /// Number of breakpoints strictly below `v`.
    fn piece(&self, v: &T, h: &Horizon) -> usize {
        match self {
            Measure::Piecewise { breakpoints, .. } => breakpoints
                .iter()
                .take_while(|b| v.compare(b, h) == Ordering::Greater)
                .count(),
            Measure::Sqrt { .. } => 0,
        }
    }

    fn half() -> T {
        T::from_num(&Num::ratio(1, 2))
    }

    /// `Λ` at each breakpoint, with `Λ(b_0) = 0`.
    fn knots(breakpoints: &[T], densities: &[T]) -> (Vec<T>, Vec<T>) {
        let mut cum = vec![T::zero()];
        let mut mom = vec![T::zero()];
        for i in 1..breakpoints.len() {
            let (lo, hi, d) = (&breakpoints[i - 1], &breakpoints[i], &densities[i]);
            cum.push(cum[i - 1].add(&d.mul(&hi.sub(lo))));
            let sq = hi.mul(hi).sub(&lo.mul(lo));
            mom.push(mom[i - 1].add(&d.mul(&sq).mul(&Self::half())));
        }
        (cum, mom)
    }

    /// `Λ(v)`, an antiderivative of the density.
    pub fn cumulative(&self, v: &T, h: &Horizon) -> Result<T> {
        match self {
            Measure::Piecewise {
                breakpoints,
                densities,
            } => {
                if breakpoints.is_empty() {
                    return Ok(densities[0].mul(v));
                }
                let i = self.piece(v, h);
                if i == 0 {
                    return Ok(densities[0].mul(&v.sub(&breakpoints[0])));
                }
                let (cum, _) = Self::knots(breakpoints, densities);
                Ok(cum[i - 1].add(&densities[i].mul(&v.sub(&breakpoints[i - 1]))))
            }
            Measure::Sqrt { scale } => {
                let root = v.abs(h).try_sqrt()?;
                let r = scale.mul(&root);
                Ok(if v.sign(h) == Ordering::Less {
                    r.neg()
                } else {
                    r
                })
            }
        }
    }

    /// `M(v)`, an antiderivative of `v f(v)`.
    pub fn moment(&self, v: &T, h: &Horizon) -> Result<T> {
        match self {
            Measure::Piecewise {
                breakpoints,
                densities,
            } => {
                let half = Self::half();
                if breakpoints.is_empty() {
                    return Ok(densities[0].mul(&v.mul(v)).mul(&half));
                }
                let i = self.piece(v, h);
                let lo = &breakpoints[if i == 0 { 0 } else { i - 1 }];
                let part = densities[i].mul(&v.mul(v).sub(&lo.mul(lo))).mul(&half);
                if i == 0 {
                    return Ok(part);
                }
                let (_, mom) = Self::knots(breakpoints, densities);
                Ok(mom[i - 1].add(&part))
            }
            Measure::Sqrt { scale } => {
                let a = v.abs(h);
                Ok(scale
                    .mul(&a)
                    .mul(&a.try_sqrt()?)
                    .mul(&T::from_num(&Num::ratio(1, 3))))
            }
        }
    }

    /// `λ((a, b))` with orientation: negative when `b < a`.
    pub fn signed_mass(&self, a: &T, b: &T, h: &Horizon) -> Result<T> {
        Ok(self.cumulative(b, h)?.sub(&self.cumulative(a, h)?))
    }

    pub fn mass(&self, a: &T, b: &T, h: &Horizon) -> Result<T> {
        Ok(self.signed_mass(a, b, h)?.abs(h))
    }

    /// Mean of `λ` normalised to the interval between `a` and `b`.
    pub fn barycenter(&self, a: &T, b: &T, h: &Horizon) -> Result<T> {
        if a.compare(b, h) == Ordering::Equal {
            return Err(Error::DegenerateInterval(format!("{a:?}")));
        }
        let m = self.moment(b, h)?.sub(&self.moment(a, h)?);
        m.try_div(&self.signed_mass(a, b, h)?)
    }

    pub fn score(&self, x: &T, q: &T, h: &Horizon) -> Result<T> {
        let c = self.cumulative(x, h)?.sub(&self.cumulative(q, h)?);
        let m = self.moment(x, h)?.sub(&self.moment(q, h)?);
        Ok(x.mul(&c).sub(&m))
    }

    /// `score(x, q) - score(x, p)`, computed as `λ((q, p)) [x - r(q, p)]`.
    pub fn score_difference(&self, x: &T, q: &T, p: &T, h: &Horizon) -> Result<T> {
        if q.compare(p, h) == Ordering::Equal {
            return Ok(T::zero());
        }
        let s = self.signed_mass(q, p, h)?;
        Ok(s.mul(&x.sub(&self.barycenter(q, p, h)?)))
    }

    /// The point `t` with `λ((anchor, t)) = m` (up) or `λ((t, anchor)) = m` (down).
    pub fn invert(&self, anchor: &T, m: &T, dir: Direction, h: &Horizon) -> Result<T> {
        let base = self.cumulative(anchor, h)?;
        let y = match dir {
            Direction::Up => base.add(m),
            Direction::Down => base.sub(m),
        };
        match self {
            Measure::Piecewise {
                breakpoints,
                densities,
            } => {
                if breakpoints.is_empty() {
                    return y.try_div(&densities[0]);
                }
                if y.sign(h) != Ordering::Greater {
                    return Ok(breakpoints[0].add(&y.try_div(&densities[0])?));
                }
                let (cum, _) = Self::knots(breakpoints, densities);
                let n = breakpoints.len();
                let i = (1..n)
                    .find(|&i| y.compare(&cum[i], h) != Ordering::Greater)
                    .unwrap_or(n);
                Ok(breakpoints[i - 1].add(&y.sub(&cum[i - 1]).try_div(&densities[i])?))
            }
            Measure::Sqrt { scale } => {
                let u = y.try_div(scale)?;
                let t = u.mul(&u);
                Ok(if u.sign(h) == Ordering::Less {
                    t.neg()
                } else {
                    t
                })
            }
        }
    }

    /// The measure seen through `v -> -v`.
    pub fn reflect(&self) -> Measure<T> {
        match self {
            Measure::Piecewise {
                breakpoints,
                densities,
            } => Measure::Piecewise {
                breakpoints: breakpoints.iter().rev().map(Scalar::neg).collect(),
                densities: densities.iter().rev().cloned().collect(),
            },
            Measure::Sqrt { scale } => Measure::Sqrt {
                scale: scale.clone(),
            },
        }
    }
}

impl LambdaMeasure {
    pub fn brier() -> Self {
        Self::scaled_brier(Num::one())
    }

    /// `weight` times the Brier score: density `2 * weight`.
    pub fn scaled_brier(weight: Num) -> Self {
        Measure::Piecewise {
            breakpoints: Vec::new(),
            densities: vec![&weight * &Num::int(2)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Measure::Piecewise {
                breakpoints,
                densities,
            } => {
                if densities.len() != breakpoints.len() + 1 {
                    return Err(Error::Invalid(format!(
                        "{} breakpoints need {} densities, found {}",
                        breakpoints.len(),
                        breakpoints.len() + 1,
                        densities.len()
                    )));
                }
                if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Invalid(
                        "breakpoints must be strictly increasing".into(),
                    ));
                }
                if let Some(d) = densities.iter().find(|d| !d.is_positive()) {
                    return Err(Error::Invalid(format!("density {d} is not positive")));
                }
                Ok(())
            }
            Measure::Sqrt { scale } if scale.is_positive() => Ok(()),
            Measure::Sqrt { scale } => {
                Err(Error::Invalid(format!("scale {scale} is not positive")))
            }
        }
    }

    /// Brier score, or a positive multiple of it: the weight `w` in `w (x - q)^2`.
    pub fn brier_weight(&self) -> Option<Num> {
        match self {
            Measure::Piecewise {
                breakpoints,
                densities,
            } if breakpoints.is_empty() => Some(&densities[0] / &Num::int(2)),
            _ => None,
        }
    }

    pub fn approximate(&self) -> Self {
        self.map(Num::approximate)
    }

    pub fn as_family(&self) -> RuleFamily {
        self.map(|v| Seq::constant(v.clone()))
    }

    fn h() -> Horizon {
        Horizon::new()
    }

    pub fn interval_mass(&self, a: &Num, b: &Num) -> Result<Num> {
        self.mass(a, b, &Self::h())
    }

    pub fn barycenter_of(&self, a: &Num, b: &Num) -> Result<Num> {
        self.barycenter(a, b, &Self::h())
    }

    pub fn score_of(&self, x: &Num, q: &Num) -> Result<Num> {
        self.score(x, q, &Self::h())
    }

    pub fn score_difference_of(&self, x: &Num, q: &Num, p: &Num) -> Result<Num> {
        self.score_difference(x, q, p, &Self::h())
    }

    pub fn invert_mass(&self, anchor: &Num, m: &Num, dir: Direction) -> Result<Num> {
        if !m.is_positive() {
            return Err(Error::OutOfRange(format!("mass {m} must be positive")));
        }
        self.invert(anchor, m, dir, &Self::h())
    }

    /// Largest density value, when the density is bounded.
    pub fn max_density(&self) -> Option<Num> {
        match self {
            Measure::Piecewise { densities, .. } => densities.iter().cloned().reduce(Num::max),
            Measure::Sqrt { .. } => None,
        }
    }

    pub fn min_density(&self) -> Option<Num> {
        match self {
            Measure::Piecewise { densities, .. } => densities.iter().cloned().reduce(Num::min),
            Measure::Sqrt { .. } => None,
        }
    }

    /// Shortest interval that can carry mass `eps`.
    fn min_width(&self, eps: &Num) -> Num {
        match self {
            Measure::Piecewise { .. } => eps / &self.max_density().expect("piecewise"),
            Measure::Sqrt { scale } => &(eps * eps) / &(&Num::int(2) * &(scale * scale)),
        }
    }

    /// Exact `inf_v f_other(v) / f_self(v)` for two piecewise densities.
    fn density_ratio_floor(&self, other: &LambdaMeasure) -> Option<Num> {
        let (
            Measure::Piecewise {
                breakpoints: b1, ..
            },
            Measure::Piecewise {
                breakpoints: b2, ..
            },
        ) = (self, other)
        else {
            return None;
        };
        let mut cuts: Vec<Num> = b1.iter().chain(b2).cloned().collect();
        cuts.sort_by(Num::total_cmp);
        cuts.dedup();
        let mut probes = Vec::new();
        match (cuts.first(), cuts.last()) {
            (Some(lo), Some(hi)) => {
                probes.push(lo - &Num::one());
                probes.push(hi + &Num::one());
                for w in cuts.windows(2) {
                    probes.push(&(&w[0] + &w[1]) / &Num::int(2));
                }
            }
            _ => probes.push(Num::zero()),
        }
        probes
            .iter()
            .map(|v| &other.density_at(v) / &self.density_at(v))
            .reduce(Num::min)
    }

    /// Density away from breakpoints.
    pub fn density_at(&self, v: &Num) -> Num {
        match self {
            Measure::Piecewise {
                breakpoints,
                densities,
            } => densities[breakpoints.iter().take_while(|b| v > *b).count()].clone(),
            Measure::Sqrt { scale } => {
                &(scale / &v.abs().sqrt().expect("nonnegative")) / &Num::int(2)
            }
        }
    }
}

impl RuleFamily {
    pub fn validate(&self) -> Result<()> {
        let positive = |s: &Seq, what: &str| -> Result<()> {
            let m = s.infimum()?;
            let ok = match &m.value {
                Bound::Finite(v) => v.is_positive() || (v.is_zero() && !m.attained),
                Bound::PosInf => true,
                Bound::NegInf => false,
            };
            if ok {
                Ok(())
            } else {
                Err(Error::Invalid(format!(
                    "{what} {s} is not positive at every index"
                )))
            }
        };
        match self {
            Measure::Piecewise {
                breakpoints,
                densities,
            } => {
                if densities.len() != breakpoints.len() + 1 {
                    return Err(Error::Invalid(
                        "breakpoints and densities do not match".into(),
                    ));
                }
                for d in densities {
                    positive(d, "density")?;
                }
                for w in breakpoints.windows(2) {
                    positive(&w[1].sub(&w[0]), "breakpoint gap")?;
                }
                Ok(())
            }
            Measure::Sqrt { scale } => positive(scale, "scale"),
        }
    }

    pub fn member(&self, j: u64) -> LambdaMeasure {
        self.map(|s| s.at(j))
    }

    pub fn approximate(&self) -> Self {
        self.map(Seq::approximate)
    }

    /// `weight_j` times the Brier score.
    pub fn scaled_brier(weights: Seq) -> Self {
        Measure::Piecewise {
            breakpoints: Vec::new(),
            densities: vec![weights.scale(&Num::int(2))],
        }
    }

    pub fn brier_weights(&self) -> Option<Seq> {
        match self {
            Measure::Piecewise {
                breakpoints,
                densities,
            } if breakpoints.is_empty() => Some(densities[0].scale(&Num::ratio(1, 2))),
            _ => None,
        }
    }
}

struct ScoreKernel<'a> {
    rule: &'a LambdaMeasure,
    x: &'a Seq,
    q: &'a Num,
}

impl Kernel for ScoreKernel<'_> {
    fn inputs(&self) -> Vec<&Seq> {
        vec![self.x]
    }
    fn eval<T: Scalar>(&self, a: &[T], h: &Horizon) -> Result<T> {
        self.rule
            .map(T::from_num)
            .score(&a[0], &T::from_num(self.q), h)
    }
}

/// The variable `ω -> g(X(ω), q)`.
pub fn score_variable(rule: &LambdaMeasure, x: &Rv, q: &Num) -> Result<Rv> {
    let cols = x
        .cols()
        .iter()
        .map(|s| lift(&ScoreKernel { rule, x: s, q }))
        .collect::<Result<Vec<_>>>()?;
    Rv::new(cols)
}

pub fn expected_score(p: &Charge, x: &Rv, rule: &LambdaMeasure, q: &Num) -> Result<Num> {
    p.prevision(&score_variable(rule, x, q)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProprietyProbe {
    pub prevision: Num,
    pub argmin: Num,
    pub minimum: Num,
    /// Gap between the best and second-best grid points.
    pub margin: Option<Num>,
    pub scores: Vec<(Num, Num)>,
    pub pass: bool,
}

pub fn propriety_probe(
    rule: &LambdaMeasure,
    p: &Charge,
    x: &Rv,
    grid: &[Num],
) -> Result<ProprietyProbe> {
    let prevision = p.prevision(x)?;
    if !grid.contains(&prevision) {
        return Err(Error::OutOfRange(format!(
            "grid does not contain the prevision {prevision}"
        )));
    }
    let scores = grid
        .iter()
        .map(|q| Ok((q.clone(), expected_score(p, x, rule, q)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted: Vec<&(Num, Num)> = scores.iter().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (argmin, minimum) = sorted[0].clone();
    let margin = sorted.get(1).map(|s| &s.1 - &minimum);
    let unique = margin.as_ref().is_none_or(Num::is_positive);
    Ok(ProprietyProbe {
        pass: unique && argmin == prevision,
        prevision,
        argmin,
        minimum,
        margin,
        scores,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// A member of a rule class: one measure, or an indexed family of them.
#[derive(Clone, Debug, PartialEq)]
pub enum Rule {
    Single(LambdaMeasure),
    Family(RuleFamily),
}

impl Rule {
    pub fn validate(&self) -> Result<()> {
        match self {
            Rule::Single(m) => m.validate(),
            Rule::Family(f) => f.validate(),
        }
    }

    pub fn as_family(&self) -> RuleFamily {
        match self {
            Rule::Single(m) => m.as_family(),
            Rule::Family(f) => f.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpreadWitness {
    pub rule: String,
    pub index: Option<u64>,
    pub a: Num,
    pub b: Num,
    pub mass: Num,
    pub barycenter: Num,
    pub delta: Num,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpreadReport {
    pub verdict: Verdict,
    pub delta: Option<Num>,
    pub density_bound: Option<Bound>,
    pub witnesses: Vec<SpreadWitness>,
}

fn sup_value(s: &Seq) -> Result<Bound> {
    Ok(s.supremum()?.value)
}

fn bound_max(a: Option<Bound>, b: Bound) -> Option<Bound> {
    Some(match (a, b) {
        (None, b) => b,
        (Some(Bound::PosInf), _) | (_, Bound::PosInf) => Bound::PosInf,
        (Some(Bound::Finite(x)), Bound::Finite(y)) => Bound::Finite(x.max(y)),
        (Some(x), _) => x,
    })
}

/// Uniform spread for the class of `rules` at mass level `eps`.
pub fn check_uniform_spread(rules: &[(String, Rule)], eps: &Num) -> Result<SpreadReport> {
    if rules.is_empty() {
        return Err(Error::Invalid("no rules to check".into()));
    }
    if !eps.is_positive() {
        return Err(Error::OutOfRange(format!("epsilon {eps} must be positive")));
    }
    let mut density: Option<Bound> = None;
    let mut scale: Option<Bound> = None;
    for (_, r) in rules {
        match r.as_family() {
            Measure::Piecewise { densities, .. } => {
                for d in &densities {
                    density = bound_max(density, sup_value(d)?);
                }
            }
            Measure::Sqrt { scale: s } => scale = bound_max(scale, sup_value(&s)?),
        }
    }
    let mut delta: Option<Num> = None;
    let mut bounded = true;
    match &density {
        Some(Bound::Finite(u)) => delta = Some(eps / &(&Num::int(2) * u)),
        Some(_) => bounded = false,
        None => {}
    }
    match &scale {
        Some(Bound::Finite(s)) => {
            let d = &(eps * eps) / &(&Num::int(6) * &(s * s));
            delta = Some(match delta {
                Some(x) => x.min(d),
                None => d,
            });
        }
        Some(_) => bounded = false,
        None => {}
    }
    if bounded {
        return Ok(SpreadReport {
            verdict: Verdict::Satisfied,
            delta,
            density_bound: density,
            witnesses: Vec::new(),
        });
    }
    let mut witnesses = Vec::new();
    let targets: Vec<Num> = (1..=6).map(Num::pow2_neg).collect();
    for (id, r) in rules {
        let Rule::Family(f @ Measure::Piecewise { densities, .. }) = r else {
            continue;
        };
        for (k, d) in densities.iter().enumerate() {
            if sup_value(d)? != Bound::PosInf {
                continue;
            }
            for delta in &targets {
                if let Some(w) = spread_witness(id, f, k, eps, delta)? {
                    witnesses.push(w);
                }
            }
        }
    }
    let verdict = if witnesses.len() >= targets.len() {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    };
    Ok(SpreadReport {
        verdict,
        delta: None,
        density_bound: density,
        witnesses,
    })
}

/// An interval inside piece `k` of some member whose mass exceeds `eps`
/// while its barycenter sits within `delta` of an endpoint.
fn spread_witness(
    id: &str,
    f: &RuleFamily,
    k: usize,
    eps: &Num,
    delta: &Num,
) -> Result<Option<SpreadWitness>> {
    for j in 1..=4096u64 {
        let m = f.member(j);
        let Measure::Piecewise {
            breakpoints,
            densities,
        } = &m
        else {
            unreachable!()
        };
        if &densities[k] * delta <= *eps {
            continue;
        }
        let lo = (k > 0).then(|| breakpoints[k - 1].clone());
        let hi = breakpoints.get(k).cloned();
        let width = match (&lo, &hi) {
            (Some(l), Some(h)) => delta.clone().min(h - l),
            _ => delta.clone(),
        };
        let a = match (&lo, &hi) {
            (Some(l), _) => l.clone(),
            (None, Some(h)) => h - &width,
            (None, None) => Num::zero(),
        };
        let b = &a + &width;
        let mass = m.interval_mass(&a, &b)?;
        let r = m.barycenter_of(&a, &b)?;
        if mass > *eps && (&r - &a < *delta || &b - &r < *delta) {
            return Ok(Some(SpreadWitness {
                rule: id.to_string(),
                index: Some(j),
                a,
                b,
                mass,
                barycenter: r,
                delta: delta.clone(),
            }));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityWitness {
    pub rule: String,
    pub a: Num,
    pub b: Num,
    pub reference_mass: Num,
    /// Infimum over the family of the masses of `(a, b)`.
    pub infimum_mass: Num,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityReport {
    pub verdict: Verdict,
    pub gamma: Option<Num>,
    pub witness: Option<SimilarityWitness>,
}

struct MassKernel<'a> {
    family: &'a RuleFamily,
    a: &'a Num,
    b: &'a Num,
}

impl Kernel for MassKernel<'_> {
    fn inputs(&self) -> Vec<&Seq> {
        self.family.params()
    }
    fn eval<T: Scalar>(&self, args: &[T], h: &Horizon) -> Result<T> {
        self.family
            .rebuild(args)
            .mass(&T::from_num(self.a), &T::from_num(self.b), h)
    }
}

/// The masses `λ_j((a, b))` for every member of a family.
pub fn family_mass(family: &RuleFamily, a: &Num, b: &Num) -> Result<Seq> {
    lift(&MassKernel { family, a, b })
}

fn family_floor(f: &RuleFamily) -> Result<Num> {
    let seqs: Vec<&Seq> = match f {
        Measure::Piecewise { densities, .. } => densities.iter().collect(),
        Measure::Sqrt { scale } => vec![scale],
    };
    let mut m: Option<Num> = None;
    for s in seqs {
        let v = match s.infimum()?.value {
            Bound::Finite(v) => v,
            _ => Num::zero(),
        };
        m = Some(m.map_or(v.clone(), |x| x.min(v)));
    }
    Ok(m.unwrap_or_else(Num::zero))
}

/// Uniform similarity at mass level `eps` relative to `reference`.
pub fn check_uniform_similarity(
    rules: &[(String, Rule)],
    reference: &LambdaMeasure,
    eps: &Num,
) -> Result<SimilarityReport> {
    if rules.is_empty() {
        return Err(Error::Invalid("no rules to check".into()));
    }
    if !eps.is_positive() {
        return Err(Error::OutOfRange(format!("epsilon {eps} must be positive")));
    }
    let width = reference.min_width(eps);
    let mut gamma: Option<Num> = None;
    let mut weak: Vec<&(String, Rule)> = Vec::new();
    for entry in rules {
        let g = match (&entry.1, reference) {
            (Rule::Single(m @ Measure::Piecewise { .. }), _) => {
                let by_width = &m.min_density().expect("piecewise") * &width;
                match reference.density_ratio_floor(m) {
                    Some(l) => by_width.max(&l * eps),
                    None => by_width,
                }
            }
            (Rule::Single(Measure::Sqrt { scale }), Measure::Sqrt { scale: s0 }) => {
                &(scale / s0) * eps
            }
            (Rule::Single(Measure::Sqrt { .. }), _) => Num::zero(),
            (Rule::Family(f @ Measure::Piecewise { .. }), _) => &family_floor(f)? * &width,
            (Rule::Family(f @ Measure::Sqrt { .. }), Measure::Sqrt { scale: s0 }) => {
                &(&family_floor(f)? / s0) * eps
            }
            (Rule::Family(Measure::Sqrt { .. }), _) => Num::zero(),
        };
        if !g.is_positive() {
            weak.push(entry);
        }
        gamma = Some(gamma.map_or(g.clone(), |x| x.min(g)));
    }
    let gamma = gamma.expect("nonempty");
    if gamma.is_positive() {
        return Ok(SimilarityReport {
            verdict: Verdict::Satisfied,
            gamma: Some(gamma),
            witness: None,
        });
    }
    let mut anchors = vec![Num::zero(), Num::one(), Num::int(-1)];
    if let Measure::Piecewise { breakpoints, .. } = reference {
        anchors.extend(breakpoints.iter().cloned());
    }
    for (id, rule) in weak {
        let Rule::Family(f) = rule else { continue };
        for a in &anchors {
            let b = reference.invert_mass(a, eps, Direction::Up)?;
            let masses = family_mass(f, a, &b)?;
            if masses.infimum()?.value == Bound::Finite(Num::zero()) {
                return Ok(SimilarityReport {
                    verdict: Verdict::Violated,
                    gamma: None,
                    witness: Some(SimilarityWitness {
                        rule: id.clone(),
                        reference_mass: reference.interval_mass(a, &b)?,
                        a: a.clone(),
                        b,
                        infimum_mass: Num::zero(),
                    }),
                });
            }
        }
    }
    Ok(SimilarityReport {
        verdict: Verdict::Inconclusive,
        gamma: None,
        witness: None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum LogMean {
    Infinite,
    Finite(Num),
}

/// Mean logarithmic score on `(c1, c2)` for a distribution piled up just
/// above `c1`. The log rule's measure is infinite on `(c1, c2)`, so it is not
/// one of the rules above; this only evaluates its closed form.
pub fn log_score_demo(c1: &Num, c2: &Num, q: &Num) -> Result<LogMean> {
    if c1 >= c2 || q < c1 || q >= c2 {
        return Err(Error::OutOfRange(format!(
            "need {c1} <= q < {c2}, got q = {q}"
        )));
    }
    if q == c1 {
        return Ok(LogMean::Infinite);
    }
    let ratio = &(c2 - c1) / &(c2 - q);
    Ok(LogMean::Finite(Num::from_f64(ratio.to_f64().ln())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn n(a: i64, b: i64) -> Num {
        Num::ratio(a, b)
    }

    fn two_four() -> LambdaMeasure {
        Measure::Piecewise {
            breakpoints: vec![Num::zero()],
            densities: vec![Num::int(2), Num::int(4)],
        }
    }

    /// Density 2 up to `alpha`, `2 / alpha` above.
    fn spiky(alpha: Num) -> LambdaMeasure {
        Measure::Piecewise {
            densities: vec![Num::int(2), &Num::int(2) / &alpha],
            breakpoints: vec![alpha],
        }
    }

    fn spiky_oracle(alpha: &Num, x: &Num, q: &Num) -> Num {
        let sq = |v: Num| &v * &v;
        let inv = alpha.recip().unwrap();
        if x <= alpha && q <= alpha {
            sq(x - q)
        } else if x <= alpha && alpha <= q {
            sq(x - alpha)
                + &inv * &sq(q - alpha)
                + &(&(&Num::int(2) * &inv) * &(q - alpha)) * &(alpha - x)
        } else if q <= alpha && alpha <= x {
            &inv * &sq(x - alpha) + sq(q - alpha) + &(&Num::int(2) * &(alpha - q)) * &(x - alpha)
        } else {
            &inv * &sq(x - q)
        }
    }

    #[test]
    fn brier_is_squared_error() {
        let b = LambdaMeasure::brier();
        assert_eq!(b.score_of(&n(1, 3), &n(3, 4)).unwrap(), n(25, 144));
        assert_eq!(
            b.interval_mass(&Num::zero(), &Num::one()).unwrap(),
            Num::int(2)
        );
        assert_eq!(b.barycenter_of(&Num::zero(), &Num::one()).unwrap(), n(1, 2));
        assert_eq!(
            b.invert_mass(&Num::zero(), &Num::one(), Direction::Up)
                .unwrap(),
            n(1, 2)
        );
        assert_eq!(
            b.invert_mass(&Num::one(), &n(9, 10), Direction::Down)
                .unwrap(),
            n(11, 20)
        );
    }

    #[test]
    fn two_piece_density() {
        let m = two_four();
        assert_eq!(
            m.barycenter_of(&Num::int(-1), &Num::one()).unwrap(),
            n(1, 6)
        );
        assert_eq!(
            m.invert_mass(&Num::int(-1), &Num::int(4), Direction::Up)
                .unwrap(),
            n(1, 2)
        );
    }

    #[test]
    fn spiky_rule_matches_its_case_formula() {
        for i in 1..6u32 {
            let alpha = Num::pow2_neg(i + 1);
            let m = spiky(alpha.clone());
            let (p, q) = (Num::pow2_neg(i), Num::pow2_neg(i + 1));
            let x = &q - &Num::one();
            assert_eq!(
                m.score_of(&x, &p).unwrap(),
                &Num::int(3) + &Num::pow2_neg(i + 1)
            );
            assert_eq!(m.score_of(&p, &q).unwrap(), Num::pow2_neg(i + 1));
            for (a, b) in [
                (n(-1, 3), n(1, 5)),
                (n(2, 3), n(-1, 7)),
                (n(1, 9), n(1, 1000)),
            ] {
                assert_eq!(m.score_of(&a, &b).unwrap(), spiky_oracle(&alpha, &a, &b));
            }
            let t = n(1, 3);
            assert_eq!(
                m.interval_mass(&alpha, &(&alpha + &t)).unwrap(),
                &(&Num::int(2) * &t) / &alpha
            );
        }
    }

    #[test]
    fn sqrt_density_closed_forms() {
        let m = Measure::Sqrt { scale: Num::one() };
        assert_eq!(
            m.interval_mass(&Num::int(1), &Num::int(4)).unwrap(),
            Num::int(1)
        );
        assert_eq!(
            m.interval_mass(&Num::int(-1), &Num::int(4)).unwrap(),
            Num::int(3)
        );
        let r = m.barycenter_of(&Num::int(1), &Num::int(4)).unwrap();
        // (8 - 1) / 3 over mass 1
        assert_eq!(r, n(7, 3));
        assert_eq!(
            m.invert_mass(&Num::int(-1), &Num::int(3), Direction::Up)
                .unwrap(),
            Num::int(4)
        );
    }

    #[test]
    fn reflection_mirrors_scores() {
        let m = two_four();
        let r = m.reflect();
        for (x, q) in [(n(1, 2), n(-1, 3)), (n(-2, 1), n(3, 4))] {
            assert_eq!(m.score_of(&x, &q).unwrap(), r.score_of(&-&x, &-&q).unwrap());
        }
    }

    #[test]
    fn spread_for_bounded_and_spiky_classes() {
        let rules = vec![("brier".to_string(), Rule::Single(LambdaMeasure::brier()))];
        let rep = check_uniform_spread(&rules, &Num::one()).unwrap();
        assert_eq!(rep.verdict, Verdict::Satisfied);
        assert_eq!(rep.delta, Some(n(1, 4)));
        let spikes = RuleFamily::Piecewise {
            breakpoints: vec![Seq::geometric(
                n(1, 4),
                BigRational::new(1.into(), 2.into()),
            )],
            densities: vec![
                Seq::constant(Num::int(2)),
                Seq::geometric(Num::int(4), BigRational::from_integer(2.into())),
            ],
        };
        let rules = vec![("spiky".to_string(), Rule::Family(spikes))];
        let rep = check_uniform_spread(&rules, &Num::one()).unwrap();
        assert_eq!(rep.verdict, Verdict::Violated);
        assert!(rep.witnesses.iter().all(|w| w.mass > Num::one()));
    }

    #[test]
    fn similarity_for_scaled_brier() {
        let weights = Seq::constant(Num::one()).sub(&Seq::geometric(
            n(1, 2),
            BigRational::new(1.into(), 2.into()),
        ));
        let rules = vec![(
            "w".to_string(),
            Rule::Family(RuleFamily::scaled_brier(weights)),
        )];
        let rep = check_uniform_similarity(&rules, &LambdaMeasure::brier(), &Num::one()).unwrap();
        assert_eq!(rep.verdict, Verdict::Satisfied);
        assert_eq!(rep.gamma, Some(n(3, 4)));
        let fading = Seq::geometric(n(1, 2), BigRational::new(1.into(), 2.into()));
        let rules = vec![(
            "f".to_string(),
            Rule::Family(RuleFamily::scaled_brier(fading)),
        )];
        let rep = check_uniform_similarity(&rules, &LambdaMeasure::brier(), &Num::one()).unwrap();
        assert_eq!(rep.verdict, Verdict::Violated);
    }

    #[test]
    fn log_score_demo_values() {
        assert_eq!(
            log_score_demo(&Num::zero(), &Num::one(), &Num::zero()).unwrap(),
            LogMean::Infinite
        );
        let LogMean::Finite(v) = log_score_demo(&Num::zero(), &Num::int(2), &Num::one()).unwrap()
        else {
            panic!()
        };
        assert!((v.to_f64() - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(log_score_demo(&Num::zero(), &Num::one(), &Num::one()).is_err());
    }

    fn arb_measure() -> impl Strategy<Value = LambdaMeasure> {
        (
            prop::collection::btree_set(-8i64..8, 0..4),
            prop::collection::vec(1i64..9, 5),
        )
            .prop_map(|(b, d)| {
                let breakpoints: Vec<Num> = b.into_iter().map(|v| n(v, 2)).collect();
                let densities = d[..breakpoints.len() + 1]
                    .iter()
                    .map(|v| n(*v, 2))
                    .collect();
                Measure::Piecewise {
                    breakpoints,
                    densities,
                }
            })
    }

    fn arb_point() -> impl Strategy<Value = Num> {
        (-40i64..40).prop_map(|v| n(v, 8))
    }

    proptest! {
        #[test]
        fn score_difference_identity(m in arb_measure(), x in arb_point(), q in arb_point(), p in arb_point()) {
            let lhs = m.score_difference_of(&x, &q, &p).unwrap();
            let rhs = m.score_of(&x, &q).unwrap() - m.score_of(&x, &p).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn scores_identify_the_outcome(m in arb_measure(), x in arb_point(), q in arb_point()) {
            let s = m.score_of(&x, &q).unwrap();
            let ok = if x == q { s.is_zero() } else { s.is_positive() };
            prop_assert!(ok);
        }

        #[test]
        fn invert_mass_is_an_inverse(m in arb_measure(), a in arb_point(), k in 1i64..30) {
            let mass = n(k, 4);
            let up = m.invert_mass(&a, &mass, Direction::Up).unwrap();
            prop_assert_eq!(m.interval_mass(&a, &up).unwrap(), mass.clone());
            let down = m.invert_mass(&a, &mass, Direction::Down).unwrap();
            prop_assert_eq!(m.interval_mass(&down, &a).unwrap(), mass);
        }
    }
}
