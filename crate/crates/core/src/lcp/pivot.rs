//! Complementary pivoting on an integer tableau.
//!
//! The system is `M y + v - a z = q`. Each tableau row is kept as a primitive
//! integer vector, i.e. the true row (basic coefficient one) times an unknown
//! positive factor. Ratios and lexicographic comparisons are invariant under
//! such factors, so rows never need a shared denominator, and rows with a zero
//! in the pivot column are left untouched.

use std::cmp::Ordering;
#[cfg(debug_assertions)]
use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::LcpInstance;
use crate::model::Rational;

/// A variable of the augmented system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Y(usize),
    V(usize),
    Z,
}

impl Label {
    pub fn complement(self) -> Option<Label> {
        match self {
            Label::Y(i) => Some(Label::V(i)),
            Label::V(i) => Some(Label::Y(i)),
            Label::Z => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Y(i) => write!(f, "y{}", i + 1),
            Label::V(i) => write!(f, "v{}", i + 1),
            Label::Z => f.write_str("z"),
        }
    }
}

/// Result of one complementary pivot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// `leaving` left the basis; its complement enters next.
    Pivoted { entering: Label, leaving: Label },
    /// `z` left the basis: the current basic solution solves the LCP.
    Solved { entering: Label },
    /// No row bounds `entering`: the path ends on an unbounded edge.
    Ray { entering: Label },
}

/// An unbounded edge `vertex + t * direction, t >= 0` of the augmented system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RayInfo {
    pub vertex_y: Vec<Rational>,
    pub vertex_z: Rational,
    pub direction_y: Vec<Rational>,
    pub direction_z: Rational,
}

#[derive(Debug, Clone)]
pub struct PivotState {
    n: usize,
    rows: Vec<Vec<BigInt>>,
    basis: Vec<Label>,
    entering: Option<Label>,
    iterations: u64,
    #[cfg(debug_assertions)]
    seen: HashSet<Vec<Label>>,
}

fn lcm_of_denominators<'a>(values: impl Iterator<Item = &'a Rational>) -> BigInt {
    values.fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

impl PivotState {
    fn col(&self, label: Label) -> usize {
        match label {
            Label::Y(i) => i,
            Label::V(i) => self.n + i,
            Label::Z => 2 * self.n,
        }
    }

    fn rhs_col(&self) -> usize {
        2 * self.n + 1
    }

    /// Builds the slack basis and performs the first pivot, bringing `z` in at
    /// the row that needs it most. Requires some `q_i < 0`.
    pub fn augment(inst: &LcpInstance) -> PivotState {
        let n = inst.dim();
        assert!(
            inst.q.iter().any(|q| q.is_negative()),
            "augment requires a negative entry in q"
        );
        let rows = (0..n)
            .map(|i| {
                let scale = lcm_of_denominators(inst.m[i].iter().chain(std::iter::once(&inst.q[i])));
                let to_int = |v: &Rational| (v * Rational::from_integer(scale.clone())).to_integer();
                let mut row = Vec::with_capacity(2 * n + 2);
                row.extend(inst.m[i].iter().map(to_int));
                row.extend((0..n).map(|k| if k == i { scale.clone() } else { BigInt::zero() }));
                row.push(if inst.covering[i] { -scale.clone() } else { BigInt::zero() });
                row.push(to_int(&inst.q[i]));
                row
            })
            .collect();
        let mut state = PivotState {
            n,
            rows,
            basis: (0..n).map(Label::V).collect(),
            entering: None,
            iterations: 0,
            #[cfg(debug_assertions)]
            seen: HashSet::new(),
        };
        let z = state.col(Label::Z);
        let candidates: Vec<(usize, BigInt)> = (0..n)
            .filter(|&i| state.rows[i][z].is_negative())
            .map(|i| (i, -state.rows[i][z].clone()))
            .collect();
        let r = state.lex_min(&candidates);
        let leaving = state.pivot(r, Label::Z);
        state.entering = leaving.complement();
        state
    }

    /// Lexicographically smallest `(rhs, B^-1 row) / divisor` among candidates.
    fn lex_min(&self, candidates: &[(usize, BigInt)]) -> usize {
        let rhs = self.rhs_col();
        let keys = std::iter::once(rhs).chain(self.n..2 * self.n);
        let cmp = |a: &(usize, BigInt), b: &(usize, BigInt)| -> Ordering {
            let (ra, da) = (&self.rows[a.0], &a.1);
            let (rb, db) = (&self.rows[b.0], &b.1);
            for k in keys.clone() {
                let ord = (&ra[k] * db).cmp(&(&rb[k] * da));
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            Ordering::Equal
        };
        let mut best = &candidates[0];
        for c in &candidates[1..] {
            if cmp(c, best) == Ordering::Less {
                best = c;
            }
        }
        best.0
    }

    /// Pivots `entering` into row `r`; returns the label that left.
    fn pivot(&mut self, r: usize, entering: Label) -> Label {
        let e = self.col(entering);
        if self.rows[r][e].is_negative() {
            for v in &mut self.rows[r] {
                *v = -std::mem::take(v);
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let p = pivot_row[e].clone();
        debug_assert!(p.is_positive());
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[e].is_zero() {
                continue;
            }
            let f = row[e].clone();
            for (x, pr) in row.iter_mut().zip(&pivot_row) {
                if pr.is_zero() {
                    if !x.is_zero() {
                        *x *= &p;
                    }
                } else if x.is_zero() {
                    *x = -(&f * pr);
                } else {
                    *x = &*x * &p - &f * pr;
                }
            }
            normalize(row);
        }
        self.rows[r] = pivot_row;
        let leaving = std::mem::replace(&mut self.basis[r], entering);
        self.iterations += 1;
        self.check_invariants();
        leaving
    }

    #[cfg(debug_assertions)]
    fn check_invariants(&mut self) {
        for i in 0..self.n {
            assert!(
                !(self.basis.contains(&Label::Y(i)) && self.basis.contains(&Label::V(i))),
                "complementarity broken at index {i}"
            );
        }
        let mut sig = self.basis.clone();
        sig.sort_unstable();
        assert!(self.seen.insert(sig), "basis repeated on the pivot path");
    }

    #[cfg(not(debug_assertions))]
    fn check_invariants(&mut self) {}

    /// One complementary pivot: the complement of the last leaving variable
    /// enters, the minimum-ratio row leaves (`z` preferred on ties, otherwise
    /// lexicographic).
    pub fn pivot_step(&mut self) -> Step {
        let entering = self.entering.expect("path already terminated");
        let e = self.col(entering);
        let rhs = self.rhs_col();
        let rows: Vec<usize> = (0..self.n).filter(|&i| self.rows[i][e].is_positive()).collect();
        if rows.is_empty() {
            return Step::Ray { entering };
        }
        let ratio_cmp = |a: usize, b: usize| {
            (&self.rows[a][rhs] * &self.rows[b][e]).cmp(&(&self.rows[b][rhs] * &self.rows[a][e]))
        };
        let mut ties = vec![rows[0]];
        for &i in &rows[1..] {
            match ratio_cmp(i, ties[0]) {
                Ordering::Less => ties = vec![i],
                Ordering::Equal => ties.push(i),
                Ordering::Greater => {}
            }
        }
        let r = match ties.iter().find(|&&i| self.basis[i] == Label::Z) {
            Some(&i) => i,
            None if ties.len() == 1 => ties[0],
            None => {
                let cands: Vec<(usize, BigInt)> =
                    ties.iter().map(|&i| (i, self.rows[i][e].clone())).collect();
                self.lex_min(&cands)
            }
        };
        let leaving = self.pivot(r, entering);
        match leaving.complement() {
            None => {
                self.entering = None;
                Step::Solved { entering }
            }
            Some(next) => {
                self.entering = Some(next);
                Step::Pivoted { entering, leaving }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn basis(&self) -> &[Label] {
        &self.basis
    }

    /// The variable that enters on the next pivot, if the path continues.
    pub fn entering(&self) -> Option<Label> {
        self.entering
    }

    /// Index `i` with both `y_i` and `v_i` nonbasic.
    pub fn double_label(&self) -> Option<usize> {
        (0..self.n).find(|&i| !self.basis.contains(&Label::Y(i)) && !self.basis.contains(&Label::V(i)))
    }

    fn basic_value(&self, row: usize) -> Rational {
        let c = self.col(self.basis[row]);
        Rational::new(self.rows[row][self.rhs_col()].clone(), self.rows[row][c].clone())
    }

    pub fn value(&self, label: Label) -> Rational {
        self.basis
            .iter()
            .position(|&b| b == label)
            .map_or_else(Rational::zero, |r| self.basic_value(r))
    }

    pub fn z_value(&self) -> Rational {
        self.value(Label::Z)
    }

    pub fn y_values(&self) -> Vec<Rational> {
        (0..self.n).map(|i| self.value(Label::Y(i))).collect()
    }

    pub fn v_values(&self) -> Vec<Rational> {
        (0..self.n).map(|i| self.value(Label::V(i))).collect()
    }

    /// The unbounded edge leaving the current vertex along `entering`.
    pub fn ray(&self, entering: Label) -> RayInfo {
        let e = self.col(entering);
        let mut direction_y = vec![Rational::zero(); self.n];
        let mut direction_z = Rational::zero();
        let mut set = |label: Label, v: Rational| match label {
            Label::Y(i) => direction_y[i] = v,
            Label::Z => direction_z = v,
            Label::V(_) => {}
        };
        set(entering, Rational::one());
        for (r, &label) in self.basis.iter().enumerate() {
            let coef = &self.rows[r][self.col(label)];
            set(label, Rational::new(-self.rows[r][e].clone(), coef.clone()));
        }
        RayInfo {
            vertex_y: self.y_values(),
            vertex_z: self.z_value(),
            direction_y,
            direction_z,
        }
    }
}

/// Divides a row by the gcd of its entries.
fn normalize(row: &mut [BigInt]) {
    let mut g = BigInt::zero();
    for v in row.iter() {
        if !v.is_zero() {
            g = g.gcd(v);
            if g.is_one() {
                return;
            }
        }
    }
    if g.is_zero() {
        return;
    }
    for v in row.iter_mut() {
        if !v.is_zero() {
            *v /= &g;
        }
    }
}
