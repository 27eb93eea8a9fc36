//! The non-homogeneous complementarity system whose `z = 0` solutions are the
//! market equilibria, shifted by a price floor `c` so that prices are `p' + c`.
//!
//! Variables and rows share one layout, block by block:
//!
//! | block | variable       | row (paired by complementarity)                   |
//! |-------|----------------|---------------------------------------------------|
//! | 1     | `r[f,j,k]`     | no positive profit on production segment          |
//! | 2     | `beta[f,j,k]`  | money spent on segment within its limit           |
//! | 3     | `p'[j]`        | good `j` not oversold                             |
//! | 4     | `lambda[i]`    | agent `i` spends no more than it earns (with `z`) |
//! | 5     | `q[i,j,k]`     | segment bought only at maximum bang-per-buck      |
//! | 6     | `gamma[i,j,k]` | money spent on segment within its length          |
//!
//! Production segments are ordered by firm, input good, segment; utility
//! segments by agent, good, segment.

use std::collections::HashMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::analysis::PriceFloor;
use crate::lcp::LcpInstance;
use crate::model::{Market, ProductionRef, Rational, UtilityRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarLabel {
    /// Money spent by a firm on a production segment.
    R(ProductionRef),
    /// Per-unit profit of a production segment.
    Beta(ProductionRef),
    /// Price above the floor.
    Price(usize),
    /// Inverse marginal utility of money.
    Lambda(usize),
    /// Money spent by an agent on a utility segment.
    Q(UtilityRef),
    Gamma(UtilityRef),
}

impl fmt::Display for VarLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarLabel::R(r) => write!(f, "r[{},{},{}]", r.firm, r.good, r.seg),
            VarLabel::Beta(r) => write!(f, "beta[{},{},{}]", r.firm, r.good, r.seg),
            VarLabel::Price(j) => write!(f, "p'[{j}]"),
            VarLabel::Lambda(i) => write!(f, "lambda[{i}]"),
            VarLabel::Q(u) => write!(f, "q[{},{},{}]", u.agent, u.good, u.seg),
            VarLabel::Gamma(u) => write!(f, "gamma[{},{},{}]", u.agent, u.good, u.seg),
        }
    }
}

/// Constraint family of a row; row `i` is complementary to variable `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowFamily {
    SegmentProfit,
    SegmentLimit,
    GoodClearing,
    AgentBudget,
    BangPerBuck,
    SegmentLength,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableIndex {
    pub production: Vec<ProductionRef>,
    pub utility: Vec<UtilityRef>,
    pub goods: usize,
    pub agents: usize,
    labels: Vec<VarLabel>,
    lookup: HashMap<VarLabel, usize>,
}

impl VariableIndex {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, idx: usize) -> VarLabel {
        self.labels[idx]
    }

    pub fn index(&self, label: VarLabel) -> Option<usize> {
        self.lookup.get(&label).copied()
    }

    pub fn labels(&self) -> &[VarLabel] {
        &self.labels
    }

    pub fn r(&self, seg: usize) -> usize {
        seg
    }

    pub fn beta(&self, seg: usize) -> usize {
        self.production.len() + seg
    }

    pub fn price(&self, good: usize) -> usize {
        2 * self.production.len() + good
    }

    pub fn lambda(&self, agent: usize) -> usize {
        2 * self.production.len() + self.goods + agent
    }

    pub fn q(&self, seg: usize) -> usize {
        2 * self.production.len() + self.goods + self.agents + seg
    }

    pub fn gamma(&self, seg: usize) -> usize {
        self.q(seg) + self.utility.len()
    }

    pub fn family(&self, row: usize) -> RowFamily {
        match self.labels[row] {
            VarLabel::R(_) => RowFamily::SegmentProfit,
            VarLabel::Beta(_) => RowFamily::SegmentLimit,
            VarLabel::Price(_) => RowFamily::GoodClearing,
            VarLabel::Lambda(_) => RowFamily::AgentBudget,
            VarLabel::Q(_) => RowFamily::BangPerBuck,
            VarLabel::Gamma(_) => RowFamily::SegmentLength,
        }
    }
}

pub fn index_variables(m: &Market) -> VariableIndex {
    let production = m.production_segments();
    let utility = m.utility_segments();
    let mut labels = Vec::new();
    labels.extend(production.iter().map(|&r| VarLabel::R(r)));
    labels.extend(production.iter().map(|&r| VarLabel::Beta(r)));
    labels.extend((0..m.num_goods()).map(VarLabel::Price));
    labels.extend((0..m.agents.len()).map(VarLabel::Lambda));
    labels.extend(utility.iter().map(|&u| VarLabel::Q(u)));
    labels.extend(utility.iter().map(|&u| VarLabel::Gamma(u)));
    let lookup = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    VariableIndex {
        production,
        utility,
        goods: m.num_goods(),
        agents: m.agents.len(),
        labels,
        lookup,
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FormulationError {
    #[error("market has unbounded segments; cap it first")]
    Uncapped,
    #[error("price floor is not strictly inside the no-profit polyhedron")]
    FloorNotInterior,
}

#[derive(Debug, Clone)]
pub struct NhadLcp {
    pub instance: LcpInstance,
    pub index: VariableIndex,
    pub floor: PriceFloor,
}

/// Assembles the system for a capped market. Goods with zero total endowment
/// keep a zero coefficient on their own price in the clearing row, so a good
/// that is only produced is cleared against production alone.
pub fn build_nhad_lcp(m: &Market, floor: &PriceFloor) -> Result<NhadLcp, FormulationError> {
    if !m.is_capped() {
        return Err(FormulationError::Uncapped);
    }
    if !floor.is_strictly_interior(m) {
        return Err(FormulationError::FloorNotInterior);
    }
    let idx = index_variables(m);
    let n = idx.len();
    let c = &floor.c;
    let mut mat = vec![vec![Rational::zero(); n]; n];
    let mut rhs = vec![Rational::zero(); n];
    let endowment: Vec<Rational> = (0..m.num_goods()).map(|j| m.total_endowment(j)).collect();

    for (s, &pr) in idx.production.iter().enumerate() {
        let seg = m.production(pr);
        let limit = seg.limit.expect_finite();
        let out = m.firms[pr.firm].produces;
        let j = pr.good;

        let row = &mut mat[idx.r(s)];
        row[idx.price(out)] += &seg.rate;
        row[idx.price(j)] -= Rational::one();
        row[idx.beta(s)] -= Rational::one();
        rhs[idx.r(s)] = &c[j] - &seg.rate * &c[out];

        let row = &mut mat[idx.beta(s)];
        row[idx.r(s)] += Rational::one();
        row[idx.price(j)] -= limit;
        rhs[idx.beta(s)] = limit * &c[j];

        // Input side of the clearing row for j, revenue side for the output.
        mat[idx.price(j)][idx.r(s)] += Rational::one();
        let row = &mut mat[idx.price(out)];
        row[idx.r(s)] -= Rational::one();
        row[idx.beta(s)] -= limit;

        for (i, a) in m.agents.iter().enumerate() {
            let theta = &a.shares[pr.firm];
            if !theta.is_zero() {
                mat[idx.lambda(i)][idx.beta(s)] += theta * limit;
            }
        }
    }

    for j in 0..m.num_goods() {
        mat[idx.price(j)][idx.price(j)] -= &endowment[j];
        rhs[idx.price(j)] = &endowment[j] * &c[j];
    }

    for (i, a) in m.agents.iter().enumerate() {
        let row = idx.lambda(i);
        let mut money = Rational::zero();
        for (j, w) in a.endowment.iter().enumerate() {
            if !w.is_zero() {
                mat[row][idx.price(j)] += w;
                money += w * &c[j];
            }
        }
        rhs[row] = -money;
    }

    for (s, &ur) in idx.utility.iter().enumerate() {
        let seg = m.utility(ur);
        let length = seg.length.expect_finite();
        let j = ur.good;

        mat[idx.price(j)][idx.q(s)] += Rational::one();
        mat[idx.lambda(ur.agent)][idx.q(s)] -= Rational::one();

        let row = &mut mat[idx.q(s)];
        row[idx.lambda(ur.agent)] += &seg.slope;
        row[idx.price(j)] -= Rational::one();
        row[idx.gamma(s)] -= Rational::one();
        rhs[idx.q(s)] = c[j].clone();

        let row = &mut mat[idx.gamma(s)];
        row[idx.q(s)] += Rational::one();
        row[idx.price(j)] -= length;
        rhs[idx.gamma(s)] = length * &c[j];
    }

    let mut instance = LcpInstance::new(mat, rhs).expect("square by construction");
    instance.covering = (0..n).map(|r| idx.family(r) == RowFamily::AgentBudget).collect();
    Ok(NhadLcp { instance, index: idx, floor: floor.clone() })
}

impl NhadLcp {
    /// Rows whose right-hand side breaks the expected signs: negative exactly
    /// on agent rows, strictly positive on segment-profit rows.
    pub fn sign_pattern_violations(&self) -> Vec<usize> {
        (0..self.index.len())
            .filter(|&r| {
                let q = &self.instance.q[r];
                match self.index.family(r) {
                    RowFamily::AgentBudget => !q.is_negative(),
                    RowFamily::SegmentProfit => !q.is_positive(),
                    _ => q.is_negative(),
                }
            })
            .collect()
    }

    /// Sum of the clearing rows plus the sum of the budget rows: the zero row
    /// with zero right-hand side, which is the system's built-in dependency.
    pub fn dependent_combination(&self) -> (Vec<Rational>, Rational) {
        let n = self.index.len();
        let mut row = vec![Rational::zero(); n];
        let mut rhs = Rational::zero();
        for r in (0..n).filter(|&r| {
            matches!(self.index.family(r), RowFamily::GoodClearing | RowFamily::AgentBudget)
        }) {
            for (acc, v) in row.iter_mut().zip(&self.instance.m[r]) {
                *acc += v;
            }
            rhs += &self.instance.q[r];
        }
        (row, rhs)
    }

    pub fn has_dependency_identity(&self) -> bool {
        let (row, rhs) = self.dependent_combination();
        row.iter().all(Zero::is_zero) && rhs.is_zero()
    }
}
