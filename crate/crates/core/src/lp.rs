//! Dense two-phase simplex over exact rationals, Bland's rule throughout.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

type Q = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coefs: Vec<Q>,
    pub cmp: Cmp,
    pub rhs: Q,
}

impl Constraint {
    pub fn new(coefs: Vec<Q>, cmp: Cmp, rhs: Q) -> Self {
        Constraint { coefs, cmp, rhs }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    width: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Q {
        &self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = &*v / &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = &*v - &(&f * pv);
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximise `cost . x` over the columns allowed to enter.
    fn optimise(&mut self, cost: &[Q], allowed: &dyn Fn(usize) -> bool) -> Step {
        loop {
            let entering = (0..self.width).filter(|&j| allowed(j)).find(|&j| {
                let mut d = cost[j].clone();
                for (i, b) in self.basis.iter().enumerate() {
                    if !cost[*b].is_zero() && !self.rows[i][j].is_zero() {
                        d -= &cost[*b] * &self.rows[i][j];
                    }
                }
                d.is_positive()
            });
            let Some(j) = entering else {
                return Step::Optimal;
            };
            let mut leave: Option<(usize, Q)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &leave {
                    None => true,
                    Some((l, best)) => {
                        ratio < *best || (ratio == *best && self.basis[i] < self.basis[*l])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, j),
                None => return Step::Unbounded,
            }
        }
    }
}

/// Maximise `objective . x` subject to `constraints` and `x >= 0`.
pub fn maximize(objective: &[Q], constraints: &[Constraint]) -> LpOutcome {
    let n = objective.len();
    let m = constraints.len();
    let slacks = constraints.iter().filter(|c| c.cmp != Cmp::Eq).count();
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut artificial = Vec::new();
    let mut next_slack = n;
    let art_start = n + slacks;
    let width = art_start + m;
    for c in constraints {
        assert_eq!(c.coefs.len(), n, "constraint width");
        let flip = c.rhs.is_negative();
        let sgn = |v: &Q| if flip { -v } else { v.clone() };
        let mut row: Vec<Q> = c.coefs.iter().map(sgn).collect();
        row.resize(width + 1, Q::zero());
        row[width] = sgn(&c.rhs);
        let cmp = match (c.cmp, flip) {
            (Cmp::Le, true) => Cmp::Ge,
            (Cmp::Ge, true) => Cmp::Le,
            (k, _) => k,
        };
        let art = art_start + rows.len();
        match cmp {
            Cmp::Le => {
                row[next_slack] = Q::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            Cmp::Ge => {
                row[next_slack] = -Q::one();
                next_slack += 1;
                row[art] = Q::one();
                basis.push(art);
                artificial.push(art);
            }
            Cmp::Eq => {
                row[art] = Q::one();
                basis.push(art);
                artificial.push(art);
            }
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, basis, width };
    if !artificial.is_empty() {
        let mut phase1 = vec![Q::zero(); width];
        for a in &artificial {
            phase1[*a] = -Q::one();
        }
        t.optimise(&phase1, &|_| true);
        let infeasible = t
            .basis
            .iter()
            .enumerate()
            .any(|(i, b)| *b >= art_start && !t.rhs(i).is_zero());
        if infeasible {
            return LpOutcome::Infeasible;
        }
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= art_start {
                match (0..art_start).find(|j| !t.rows[i][*j].is_zero()) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }
    let mut cost = objective.to_vec();
    cost.resize(width, Q::zero());
    match t.optimise(&cost, &|j| j < art_start) {
        Step::Unbounded => LpOutcome::Unbounded,
        Step::Optimal => {
            let mut x = vec![Q::zero(); n];
            for (i, b) in t.basis.iter().enumerate() {
                if *b < n {
                    x[*b] = t.rhs(i).clone();
                }
            }
            let value = x.iter().zip(objective).map(|(a, b)| a * b).sum();
            LpOutcome::Optimal { x, value }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> Q {
        Q::new(a.into(), b.into())
    }

    fn row(v: &[i64]) -> Vec<Q> {
        v.iter().map(|x| q(*x, 1)).collect()
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y; x <= 4, 2y <= 12, 3x + 2y <= 18
        let cons = vec![
            Constraint::new(row(&[1, 0]), Cmp::Le, q(4, 1)),
            Constraint::new(row(&[0, 2]), Cmp::Le, q(12, 1)),
            Constraint::new(row(&[3, 2]), Cmp::Le, q(18, 1)),
        ];
        let LpOutcome::Optimal { x, value } = maximize(&row(&[3, 5]), &cons) else {
            panic!()
        };
        assert_eq!(value, q(36, 1));
        assert_eq!(x, vec![q(2, 1), q(6, 1)]);
    }

    #[test]
    fn equality_and_infeasibility() {
        let cons = vec![
            Constraint::new(row(&[1, 1]), Cmp::Eq, q(1, 1)),
            Constraint::new(row(&[1, -1]), Cmp::Ge, q(1, 3)),
        ];
        let LpOutcome::Optimal { value, .. } = maximize(&row(&[0, 1]), &cons) else {
            panic!()
        };
        assert_eq!(value, q(1, 3));
        let bad = vec![
            Constraint::new(row(&[1, 1]), Cmp::Le, q(1, 1)),
            Constraint::new(row(&[1, 1]), Cmp::Ge, q(2, 1)),
        ];
        assert_eq!(maximize(&row(&[1, 0]), &bad), LpOutcome::Infeasible);
        let open = vec![Constraint::new(row(&[1, -1]), Cmp::Le, q(0, 1))];
        assert_eq!(maximize(&row(&[1, 1]), &open), LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example cycles under the largest-coefficient rule.
        let cons = vec![
            Constraint::new(vec![q(1, 4), q(-8, 1), q(-1, 1), q(9, 1)], Cmp::Le, q(0, 1)),
            Constraint::new(
                vec![q(1, 2), q(-12, 1), q(-1, 2), q(3, 1)],
                Cmp::Le,
                q(0, 1),
            ),
            Constraint::new(vec![q(0, 1), q(0, 1), q(1, 1), q(0, 1)], Cmp::Le, q(1, 1)),
        ];
        let obj = vec![q(3, 4), q(-20, 1), q(1, 2), q(-6, 1)];
        let LpOutcome::Optimal { value, .. } = maximize(&obj, &cons) else {
            panic!()
        };
        assert_eq!(value, q(5, 4));
    }
}
