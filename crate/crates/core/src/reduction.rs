//! Exchange market to production market: each agent's utility becomes a firm
//! that turns goods into a private "utility" good, which the agent then wants
//! linearly and without bound.

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::equilibrium::{solve_market, Equilibrium, SolveError, SolveOptions, SolveReport};
use crate::model::{Agent, Bound, Firm, Market, ProductionSegment, Rational, UtilitySegment};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionMap {
    /// Goods `0..original_goods` are shared by both markets.
    pub original_goods: usize,
    /// Per agent: the good standing for its utility.
    pub agent_goods: Vec<usize>,
    /// Per agent: the firm producing that good.
    pub agent_firms: Vec<usize>,
}

impl ReductionMap {
    pub fn to_json(&self, reduced: &Market) -> Value {
        let names = |v: &[usize], f: &dyn Fn(usize) -> String| -> serde_json::Map<String, Value> {
            v.iter()
                .enumerate()
                .map(|(i, &x)| (reduced.agents[i].name.clone(), Value::String(f(x))))
                .collect()
        };
        json!({
            "originalGoods": reduced.goods[..self.original_goods],
            "agentGoods": names(&self.agent_goods, &|j| reduced.goods[j].clone()),
            "agentFirms": names(&self.agent_firms, &|f| reduced.firms[f].name.clone()),
        })
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ReductionError {
    #[error("market already has firms")]
    HasFirms,
}

fn fresh_name(taken: &[String], base: String) -> String {
    if !taken.contains(&base) {
        return base;
    }
    (2..).map(|k| format!("{base}{k}")).find(|n| !taken.contains(n)).expect("unbounded search")
}

pub fn exchange_to_production(m: &Market) -> Result<(Market, ReductionMap), ReductionError> {
    if !m.firms.is_empty() {
        return Err(ReductionError::HasFirms);
    }
    let n = m.num_goods();
    let na = m.agents.len();
    let mut goods = m.goods.clone();
    for a in &m.agents {
        let name = fresh_name(&goods, format!("{}_util", a.name));
        goods.push(name);
    }
    let total = goods.len();

    let mut firm_names: Vec<String> = Vec::new();
    let mut firms = Vec::with_capacity(na);
    for (i, a) in m.agents.iter().enumerate() {
        let name = fresh_name(&firm_names, format!("{}_firm", a.name));
        firm_names.push(name.clone());
        let mut inputs: Vec<Vec<ProductionSegment>> = a
            .utility
            .iter()
            .map(|segs| {
                segs.iter()
                    .map(|s| ProductionSegment { rate: s.slope.clone(), limit: s.length.clone() })
                    .collect()
            })
            .collect();
        inputs.resize(total, Vec::new());
        firms.push(Firm { name, produces: n + i, inputs });
    }

    let agents = m
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let mut endowment = a.endowment.clone();
            endowment.resize(total, Rational::zero());
            let mut shares = vec![Rational::zero(); na];
            shares[i] = Rational::one();
            let mut utility = vec![Vec::new(); total];
            utility[n + i] = vec![UtilitySegment { slope: Rational::one(), length: Bound::Unbounded }];
            Agent { name: a.name.clone(), endowment, shares, utility }
        })
        .collect();

    let map = ReductionMap {
        original_goods: n,
        agent_goods: (n..total).collect(),
        agent_firms: (0..na).collect(),
    };
    Ok((Market { goods, agents, firms }, map))
}

/// Exchange equilibrium from a reduced-market one: the shared prices, and
/// each agent consumes what its firm used.
pub fn project_equilibrium(map: &ReductionMap, reduced: &Equilibrium) -> Equilibrium {
    let n = map.original_goods;
    Equilibrium {
        prices: reduced.prices[..n].to_vec(),
        agent_alloc: map
            .agent_firms
            .iter()
            .map(|&f| reduced.firm_raw[f][..n].to_vec())
            .collect(),
        firm_raw: Vec::new(),
        firm_out: Vec::new(),
        profits: Vec::new(),
        scale_note: reduced.scale_note.iter().copied().filter(|&j| j < n).collect(),
    }
}

/// Reduced-market equilibrium from an exchange one. The price of agent `i`'s
/// utility good is the inverse of its bang-per-buck on the marginal bought
/// segment, so exactly the bought segments break even or profit.
pub fn lift_to_reduced(
    exchange: &Market,
    reduced: &Market,
    map: &ReductionMap,
    e: &Equilibrium,
) -> Equilibrium {
    let n = map.original_goods;
    let mut prices = e.prices.clone();
    for (i, a) in exchange.agents.iter().enumerate() {
        let mut bought: Option<Rational> = None;
        let mut cheapest: Option<Rational> = None;
        for (j, segs) in a.utility.iter().enumerate() {
            for (k, s) in segs.iter().enumerate() {
                if !s.slope.is_positive() {
                    continue;
                }
                let cost = &e.prices[j] / &s.slope;
                if e.agent_alloc[i][j][k].is_positive() && bought.as_ref().is_none_or(|b| cost > *b) {
                    bought = Some(cost.clone());
                }
                if cheapest.as_ref().is_none_or(|c| cost < *c) {
                    cheapest = Some(cost);
                }
            }
        }
        prices.push(bought.or(cheapest).unwrap_or_else(Rational::one));
    }

    let mut firm_raw = Vec::new();
    let mut firm_out = Vec::new();
    let mut profits = Vec::new();
    let mut agent_alloc = Vec::new();
    for (i, &f) in map.agent_firms.iter().enumerate() {
        let firm = &reduced.firms[f];
        let mut raw: Vec<Vec<Rational>> = e.agent_alloc[i].clone();
        raw.resize(reduced.num_goods(), Vec::new());
        let out: Vec<Vec<Rational>> = firm
            .inputs
            .iter()
            .zip(&raw)
            .map(|(segs, xs)| segs.iter().zip(xs).map(|(s, x)| &s.rate * x).collect())
            .collect();
        let made = out.iter().flatten().fold(Rational::zero(), |acc, v| acc + v);
        let spent = raw[..n]
            .iter()
            .enumerate()
            .flat_map(|(j, xs)| xs.iter().map(move |x| (j, x)))
            .fold(Rational::zero(), |acc, (j, x)| acc + &e.prices[j] * x);
        profits.push(&made * &prices[firm.produces] - spent);
        let mut alloc = vec![Vec::new(); reduced.num_goods()];
        alloc[map.agent_goods[i]] = vec![made];
        agent_alloc.push(alloc);
        firm_raw.push(raw);
        firm_out.push(out);
    }
    Equilibrium { prices, agent_alloc, firm_raw, firm_out, profits, scale_note: e.scale_note.clone() }
}

/// Reduces, solves the production market with enough demand waived (its
/// original goods are wanted by no agent), and returns both.
pub fn solve_via_reduction(
    exchange: &Market,
    opts: &SolveOptions,
) -> Result<(Market, ReductionMap, SolveReport), SolveError> {
    let (reduced, map) = exchange_to_production(exchange).expect("exchange market has no firms");
    let opts = SolveOptions { waive_enough_demand: true, ..*opts };
    let report = solve_market(&reduced, &opts)?;
    Ok((reduced, map, report))
}
