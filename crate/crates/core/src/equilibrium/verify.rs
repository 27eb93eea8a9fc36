//! Equilibrium check built directly from the market conditions: every firm
//! maximizes profit, every agent buys an optimal bundle, every market clears.
//! Nothing here touches the complementarity system.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use super::Equilibrium;
use crate::model::{rational_string, Bound, Market, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    Shape,
    Production,
    Bundle,
    Clearing,
    Acyclicity,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::Shape => "shape",
            Clause::Production => "production optimality",
            Clause::Bundle => "bundle optimality",
            Clause::Clearing => "market clearing",
            Clause::Acyclicity => "profitable production acyclic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationIssue {
    pub clause: Clause,
    pub entity: String,
    pub detail: String,
}

impl fmt::Display for VerificationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}): {}", self.clause, self.entity, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerificationReport {
    pub issues: Vec<VerificationIssue>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn fails(&self, clause: Clause) -> bool {
        self.issues.iter().any(|i| i.clause == clause)
    }

    fn push(&mut self, clause: Clause, entity: impl Into<String>, detail: impl Into<String>) {
        self.issues.push(VerificationIssue { clause, entity: entity.into(), detail: detail.into() });
    }
}

fn sum<'a>(it: impl IntoIterator<Item = &'a Rational>) -> Rational {
    it.into_iter().fold(Rational::zero(), |acc, v| acc + v)
}

fn within(amount: &Rational, bound: &Bound) -> bool {
    !amount.is_negative() && bound.finite().is_none_or(|b| amount <= b)
}

fn shape_matches<T>(a: &[Vec<Vec<Rational>>], b: &[T], segs: impl Fn(&T) -> Vec<usize>) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, owner)| {
            let lens = segs(owner);
            x.len() == lens.len() && x.iter().zip(&lens).all(|(v, &l)| v.len() == l)
        })
}

/// Checks `e` against `m` exactly and lists every violated clause.
pub fn verify_equilibrium(m: &Market, e: &Equilibrium) -> VerificationReport {
    let mut report = VerificationReport::default();
    let shapes_ok = e.prices.len() == m.num_goods()
        && e.profits.len() == m.firms.len()
        && shape_matches(&e.agent_alloc, &m.agents, |a| a.utility.iter().map(Vec::len).collect())
        && shape_matches(&e.firm_raw, &m.firms, |f| f.inputs.iter().map(Vec::len).collect())
        && shape_matches(&e.firm_out, &m.firms, |f| f.inputs.iter().map(Vec::len).collect());
    if !shapes_ok {
        report.push(Clause::Shape, "equilibrium", "dimensions differ from the market");
        return report;
    }
    if let Some(j) = e.prices.iter().position(|p| p.is_negative()) {
        report.push(Clause::Shape, m.goods[j].clone(), "negative price");
        return report;
    }
    let p = &e.prices;

    let plan_profit = check_firms(m, e, &mut report);
    check_agents(m, e, &plan_profit, &mut report);
    check_clearing(m, e, &mut report);
    check_acyclic(m, p, &mut report);
    report
}

/// Each firm against the greedy profit-maximizing plan. Returns the profit of
/// each firm's reported plan.
fn check_firms(m: &Market, e: &Equilibrium, report: &mut VerificationReport) -> Vec<Rational> {
    let p = &e.prices;
    let mut profits = Vec::with_capacity(m.firms.len());
    for (fi, f) in m.firms.iter().enumerate() {
        let name = &f.name;
        let mut plan = Rational::zero();
        let mut best = Rational::zero();
        let mut unbounded_gain = false;
        for (j, segs) in f.inputs.iter().enumerate() {
            for (k, seg) in segs.iter().enumerate() {
                let x = &e.firm_raw[fi][j][k];
                let unit = &seg.rate * &p[f.produces] - &p[j];
                if !within(x, &seg.limit) {
                    report.push(Clause::Production, name, format!("input {} segment {} outside [0, limit]", m.goods[j], k + 1));
                }
                if e.firm_out[fi][j][k] != &seg.rate * x {
                    report.push(Clause::Production, name, format!("output on {} segment {} is not rate times input", m.goods[j], k + 1));
                }
                // A later segment may only run once every strictly more
                // profitable earlier one is full.
                if x.is_positive() {
                    for (kk, earlier) in segs[..k].iter().enumerate() {
                        let earlier_unit = &earlier.rate * &p[f.produces] - &p[j];
                        let full = earlier.limit.finite().is_some_and(|o| e.firm_raw[fi][j][kk] == *o);
                        if earlier_unit > unit && !full {
                            report.push(Clause::Production, name, format!("input {} used on segment {} before segment {} is full", m.goods[j], k + 1, kk + 1));
                        }
                    }
                }
                plan += &unit * x;
                if unit.is_positive() {
                    match seg.limit.finite() {
                        Some(o) => best += &unit * o,
                        None => unbounded_gain = true,
                    }
                }
            }
        }
        if unbounded_gain {
            report.push(Clause::Production, name, "a profitable segment is unbounded");
        } else if plan != best {
            report.push(
                Clause::Production,
                name,
                format!("plan earns {} but {} is attainable", rational_string(&plan), rational_string(&best)),
            );
        }
        if e.profits[fi] != plan {
            report.push(Clause::Production, name, format!("reported profit {} differs from plan profit {}", rational_string(&e.profits[fi]), rational_string(&plan)));
        }
        profits.push(plan);
    }
    profits
}

/// Each agent against the bang-per-buck classes: free goods with positive
/// utility are taken in full; priced segments are bought class by class in
/// decreasing utility per unit of money until the budget is spent.
fn check_agents(m: &Market, e: &Equilibrium, profits: &[Rational], report: &mut VerificationReport) {
    let p = &e.prices;
    for (i, a) in m.agents.iter().enumerate() {
        let name = &a.name;
        let budget = a.endowment.iter().zip(p).map(|(w, pj)| w * pj).fold(Rational::zero(), |acc, v| acc + v)
            + a.shares.iter().zip(profits).map(|(t, pf)| t * pf).fold(Rational::zero(), |acc, v| acc + v);

        // bang-per-buck -> segments (good, seg) of that class
        let mut classes: BTreeMap<Rational, Vec<(usize, usize)>> = BTreeMap::new();
        for (j, segs) in a.utility.iter().enumerate() {
            for (k, seg) in segs.iter().enumerate() {
                let x = &e.agent_alloc[i][j][k];
                if !within(x, &seg.length) {
                    report.push(Clause::Bundle, name, format!("good {} segment {} outside [0, length]", m.goods[j], k + 1));
                    continue;
                }
                if p[j].is_zero() {
                    if seg.slope.is_positive() && seg.length.finite() != Some(x) {
                        report.push(Clause::Bundle, name, format!("free good {} segment {} not taken in full", m.goods[j], k + 1));
                    }
                } else {
                    classes.entry(&seg.slope / &p[j]).or_default().push((j, k));
                }
            }
        }

        let mut left = budget.clone();
        let mut spent_out = false;
        for (bpb, members) in classes.iter().rev() {
            let spending: Rational = members
                .iter()
                .map(|&(j, k)| &p[j] * &e.agent_alloc[i][j][k])
                .fold(Rational::zero(), |acc, v| acc + v);
            let cost: Option<Rational> = members.iter().try_fold(Rational::zero(), |acc, &(j, k)| {
                a.utility[j][k].length.finite().map(|l| acc + &p[j] * l)
            });
            let label = format!("class with bang-per-buck {}", rational_string(bpb));
            if spent_out {
                if spending.is_positive() {
                    report.push(Clause::Bundle, name, format!("{label} is bought although cheaper utility is exhausted"));
                }
                continue;
            }
            match cost {
                Some(cost) if cost <= left => {
                    if spending != cost {
                        report.push(Clause::Bundle, name, format!("{label} is forced but not fully bought"));
                    }
                    left -= cost;
                    if left.is_zero() {
                        spent_out = true;
                    }
                }
                _ => {
                    if spending != left {
                        report.push(
                            Clause::Bundle,
                            name,
                            format!("{label} absorbs {} of a remaining budget {}", rational_string(&spending), rational_string(&left)),
                        );
                    }
                    left = Rational::zero();
                    spent_out = true;
                }
            }
        }
        if left.is_positive() {
            report.push(Clause::Bundle, name, format!("budget {} not exhausted (left {})", rational_string(&budget), rational_string(&left)));
        }
    }
}

/// Consumption plus input use equals endowment plus output; free goods may
/// be left over.
fn check_clearing(m: &Market, e: &Equilibrium, report: &mut VerificationReport) {
    for j in 0..m.num_goods() {
        let demand = (0..m.agents.len())
            .map(|i| e.consumption(i, j))
            .chain((0..m.firms.len()).map(|f| sum(&e.firm_raw[f][j])))
            .fold(Rational::zero(), |acc, v| acc + v);
        let supply = m
            .producers_of(j)
            .map(|f| e.total_output(f))
            .fold(m.total_endowment(j), |acc, v| acc + v);
        let ok = if e.prices[j].is_zero() { demand <= supply } else { demand == supply };
        if !ok {
            report.push(
                Clause::Clearing,
                m.goods[j].clone(),
                format!("demand {} against supply {}", rational_string(&demand), rational_string(&supply)),
            );
        }
    }
}

/// No cycle of first segments that each break even or better, among goods
/// with a positive price.
fn check_acyclic(m: &Market, p: &[Rational], report: &mut VerificationReport) {
    let n = m.num_goods();
    let mut adj = vec![Vec::new(); n];
    for f in &m.firms {
        for (j, segs) in f.inputs.iter().enumerate() {
            if let Some(first) = segs.first() {
                if first.rate.is_positive() && p[j].is_positive() && &first.rate * &p[f.produces] >= p[j] {
                    adj[j].push(f.produces);
                }
            }
        }
    }
    // Iterative three-colour depth-first search.
    let mut colour = vec![0u8; n];
    for start in 0..n {
        if colour[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        colour[start] = 1;
        while let Some((u, next)) = stack.pop() {
            if next < adj[u].len() {
                stack.push((u, next + 1));
                let v = adj[u][next];
                match colour[v] {
                    0 => {
                        colour[v] = 1;
                        stack.push((v, 0));
                    }
                    1 => {
                        report.push(Clause::Acyclicity, m.goods[v].clone(), "lies on a cycle of non-losing production");
                        return;
                    }
                    _ => {}
                }
            } else {
                colour[u] = 2;
            }
        }
    }
}
