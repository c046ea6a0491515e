//! Seeded random instances shared by the integration suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use prevision::scenarios::build_scenario;
use prevision::specfile::Model;
use prevision::{
    Charge, ColumnCharge, ColumnSet, Entry, Event, LambdaMeasure, Measure, Num, Partition, Rv, Seq,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A multiple of `1/den` in `[lo, hi]`.
pub fn num(r: &mut ChaCha8Rng, lo: i64, hi: i64, den: i64) -> Num {
    Num::ratio(r.gen_range(lo * den..=hi * den), den)
}

pub fn ratio(r: &mut ChaCha8Rng) -> BigRational {
    let (a, b) = *[(1, 2), (1, 3), (2, 3), (1, 4)].choose(r).unwrap();
    BigRational::new(a.into(), b.into())
}

/// Constant plus an optional geometric term plus a few early exceptions.
pub fn seq(r: &mut ChaCha8Rng, lo: i64, hi: i64, geometric: bool) -> Seq {
    let mut s = Seq::constant(num(r, lo, hi, 2));
    if geometric && r.gen_bool(0.4) {
        s = s.add(&Seq::geometric(num(r, lo, hi, 2), ratio(r)));
    }
    for _ in 0..r.gen_range(0..3) {
        s = s.with_exception(r.gen_range(1..=5), num(r, lo, hi, 2));
    }
    s
}

pub fn rv(r: &mut ChaCha8Rng, columns: usize) -> Rv {
    Rv::new((0..columns).map(|_| seq(r, -3, 3, true)).collect()).unwrap()
}

/// Eventually constant, so finitely many distinct states.
pub fn simple_rv(r: &mut ChaCha8Rng, columns: usize) -> Rv {
    Rv::new((0..columns).map(|_| seq(r, -3, 3, false)).collect()).unwrap()
}

pub fn column_set(r: &mut ChaCha8Rng) -> ColumnSet {
    let s: BTreeSet<u64> = (1..=5).filter(|_| r.gen_bool(0.4)).collect();
    if r.gen_bool(0.5) {
        ColumnSet::Finite(s)
    } else {
        ColumnSet::Cofinite(s)
    }
}

pub fn event(r: &mut ChaCha8Rng, columns: usize) -> Event {
    Event::new((0..columns).map(|_| column_set(r)).collect())
}

fn normalize(cols: Vec<(Seq, Num)>) -> Charge {
    let total: Num = cols.iter().map(|(a, d)| &a.series_sum().unwrap() + d).sum();
    let inv = total.recip().unwrap();
    Charge::new(
        cols.into_iter()
            .map(|(a, d)| ColumnCharge {
                atoms: a.scale(&inv),
                diffuse: &d * &inv,
            })
            .collect(),
    )
    .unwrap()
}

/// Nonnegative geometric atoms with early exceptions plus diffuse mass.
pub fn charge(r: &mut ChaCha8Rng, columns: usize) -> Charge {
    let mut cols: Vec<(Seq, Num)> = (0..columns)
        .map(|_| {
            let mut atoms = Seq::zero();
            if r.gen_bool(0.7) {
                atoms = Seq::geometric(num(r, 0, 3, 2), ratio(r));
            }
            for _ in 0..r.gen_range(0..3) {
                atoms = atoms.with_exception(r.gen_range(1..=4), num(r, 0, 2, 4));
            }
            let diffuse = if r.gen_bool(0.5) {
                num(r, 0, 2, 2)
            } else {
                Num::zero()
            };
            (atoms, diffuse)
        })
        .collect();
    if cols.iter().all(|(a, d)| a.is_zero() && d.is_zero()) {
        cols[0].1 = Num::one();
    }
    normalize(cols)
}

/// A charge whose cross-section cells all have positive mass with a common
/// geometric tail, so every cell prevision is well defined.
pub fn cell_charge(r: &mut ChaCha8Rng, columns: usize) -> Charge {
    cell_charge_with(r, columns, true)
}

pub fn cell_charge_with(r: &mut ChaCha8Rng, columns: usize, diffuse: bool) -> Charge {
    let rho = ratio(r);
    let mut cols: Vec<(Seq, Num)> = (0..columns)
        .map(|_| {
            let mut atoms = Seq::geometric(num(r, 0, 3, 2), rho.clone());
            if r.gen_bool(0.3) {
                let j = r.gen_range(1..=3);
                atoms = atoms
                    .clone()
                    .with_exception(j, &atoms.at(j) + &num(r, 0, 1, 4));
            }
            let d = if diffuse && r.gen_bool(0.6) {
                num(r, 0, 3, 2)
            } else {
                Num::zero()
            };
            (atoms, d)
        })
        .collect();
    if cols.iter().all(|(a, _)| a.pure().is_zero()) {
        cols[0].0 = cols[0].0.add(&Seq::geometric(Num::one(), rho));
    }
    normalize(cols)
}

pub fn piecewise(r: &mut ChaCha8Rng) -> LambdaMeasure {
    let mut cuts: Vec<i64> = (0..r.gen_range(0..=3))
        .map(|_| r.gen_range(-12..=12))
        .collect();
    cuts.sort();
    cuts.dedup();
    let breakpoints = cuts.iter().map(|c| Num::ratio(*c, 4)).collect::<Vec<_>>();
    let densities = (0..=breakpoints.len()).map(|_| num(r, 1, 4, 2)).collect();
    let m = Measure::Piecewise {
        breakpoints,
        densities,
    };
    m.validate().unwrap();
    m
}

pub fn measure(r: &mut ChaCha8Rng) -> LambdaMeasure {
    if r.gen_bool(0.25) {
        Measure::Sqrt {
            scale: num(r, 1, 3, 1),
        }
    } else {
        piecewise(r)
    }
}

pub fn brier_entries(r: &mut ChaCha8Rng, columns: usize, coherent: Option<&Charge>) -> Vec<Entry> {
    (0..r.gen_range(2..=4))
        .map(|i| {
            let variable = if r.gen_bool(0.5) {
                event(r, columns).indicator()
            } else {
                simple_rv(r, columns)
            };
            let mut conditioning = if r.gen_bool(0.4) {
                event(r, columns)
            } else {
                Event::omega(columns)
            };
            if conditioning.is_empty() {
                conditioning = Event::omega(columns);
            }
            let forecast = match coherent {
                Some(p) => {
                    if !p.event_probability(&conditioning).unwrap().is_positive() {
                        conditioning = Event::omega(columns);
                    }
                    p.conditional_prevision(&variable, &conditioning, None)
                        .unwrap()
                }
                None => num(r, -2, 3, 4),
            };
            Entry {
                label: format!("e{i}"),
                variable,
                conditioning,
                forecast,
                rule: LambdaMeasure::scaled_brier(num(r, 1, 4, 2)),
                alpha: Num::one(),
            }
        })
        .collect()
}

pub struct CellInstance {
    pub charge: Charge,
    pub x: Rv,
    pub partition: Partition,
    pub label: String,
}

pub fn cell_instance(r: &mut ChaCha8Rng, label: String) -> CellInstance {
    let columns = r.gen_range(2..=3);
    CellInstance {
        charge: cell_charge(r, columns),
        x: rv(r, columns),
        partition: Partition::cross_section(),
        label,
    }
}

pub fn scenario_model(id: &str) -> Model {
    build_scenario(id, &BTreeMap::new())
        .unwrap()
        .resolve()
        .unwrap()
}

pub fn scenario_instance(id: &str) -> CellInstance {
    let m = scenario_model(id);
    CellInstance {
        charge: m.charge.clone(),
        x: m.variables["F"].clone(),
        partition: m.partitions["cells"].clone(),
        label: id.into(),
    }
}

/// `g(x, q)` for a piecewise-constant density, integrated piece by piece.
pub fn oracle_score(m: &LambdaMeasure, x: &Num, q: &Num) -> Num {
    let Measure::Piecewise {
        breakpoints,
        densities,
    } = m
    else {
        panic!("oracle needs a piecewise measure")
    };
    let (lo, hi) = if x < q {
        (x.clone(), q.clone())
    } else {
        (q.clone(), x.clone())
    };
    let mut total = Num::zero();
    for (i, d) in densities.iter().enumerate() {
        let l = if i == 0 {
            lo.clone()
        } else {
            breakpoints[i - 1].clone().max(lo.clone())
        };
        let h = if i == breakpoints.len() {
            hi.clone()
        } else {
            breakpoints[i].clone().min(hi.clone())
        };
        if l < h {
            let sq = |v: &Num| &(v - x) * &(v - x);
            total = &total + &(d * &(&(&sq(&h) - &sq(&l)) / &Num::int(2)));
        }
    }
    if q < x {
        -&total
    } else {
        total
    }
}
