//! Minimum-norm point of a finite point set's convex hull (Wolfe's method),
//! exact, under a diagonal weighted inner product.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

type Q = BigRational;

fn dot(w: &[Q], a: &[Q], b: &[Q]) -> Q {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

fn combine(points: &[Vec<Q>], set: &[usize], coef: &[Q]) -> Vec<Q> {
    let mut x = vec![Q::zero(); points[0].len()];
    for (i, c) in set.iter().zip(coef) {
        for (xv, pv) in x.iter_mut().zip(&points[*i]) {
            *xv += c * pv;
        }
    }
    x
}

/// Solve the square system `a x = b`; `None` when singular.
fn solve(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).find(|r| !a[*r][col].is_zero())?;
        a.swap(col, p);
        b.swap(col, p);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                let pivot = a[col].clone();
                for (cell, v) in a[r].iter_mut().zip(&pivot).skip(col) {
                    *cell -= &f * v;
                }
                let v = &f * &b[col];
                b[r] -= v;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Affine minimiser of the norm over `aff(set)`, as barycentric coordinates.
fn affine_min(w: &[Q], points: &[Vec<Q>], set: &[usize]) -> Option<Vec<Q>> {
    let k = set.len();
    let mut a = vec![vec![Q::zero(); k + 1]; k + 1];
    let mut b = vec![Q::zero(); k + 1];
    for c in 0..k {
        a[0][c + 1] = Q::from_integer(1.into());
        a[c + 1][0] = Q::from_integer(1.into());
    }
    for r in 0..k {
        for c in 0..k {
            a[r + 1][c + 1] = dot(w, &points[set[r]], &points[set[c]]);
        }
    }
    b[0] = Q::from_integer(1.into());
    solve(a, b).map(|s| s[1..].to_vec())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinNorm {
    pub point: Vec<Q>,
    /// Convex weights on the supporting points.
    pub support: Vec<(usize, Q)>,
}

/// Point of least weighted norm in the convex hull of `points`.
pub fn min_norm_point(weights: &[Q], points: &[Vec<Q>]) -> MinNorm {
    assert!(!points.is_empty(), "hull of no points");
    let start = (0..points.len())
        .min_by(|a, b| {
            dot(weights, &points[*a], &points[*a])
                .cmp(&dot(weights, &points[*b], &points[*b]))
                .then(a.cmp(b))
        })
        .expect("nonempty");
    let mut set = vec![start];
    let mut coef = vec![Q::from_integer(1.into())];
    let mut x = points[start].clone();
    loop {
        let xx = dot(weights, &x, &x);
        let j = (0..points.len())
            .min_by(|a, b| {
                dot(weights, &x, &points[*a])
                    .cmp(&dot(weights, &x, &points[*b]))
                    .then(a.cmp(b))
            })
            .expect("nonempty");
        if xx.is_zero() || xx <= dot(weights, &x, &points[j]) || set.contains(&j) {
            break;
        }
        set.push(j);
        coef.push(Q::zero());
        while let Some(lam) = affine_min(weights, points, &set) {
            if lam.iter().all(Q::is_positive) {
                coef = lam;
                x = combine(points, &set, &coef);
                break;
            }
            let theta = coef
                .iter()
                .zip(&lam)
                .filter(|(_, l)| !l.is_positive())
                .map(|(c, l)| c / &(c - l))
                .min()
                .expect("some coordinate is nonpositive");
            for (c, l) in coef.iter_mut().zip(&lam) {
                *c = &*c + &(&theta * &(l - &*c));
            }
            let keep: Vec<bool> = coef.iter().map(Q::is_positive).collect();
            let mut k = 0;
            set.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            coef.retain(Q::is_positive);
            x = combine(points, &set, &coef);
        }
    }
    MinNorm {
        point: x,
        support: set.into_iter().zip(coef).collect(),
    }
}
