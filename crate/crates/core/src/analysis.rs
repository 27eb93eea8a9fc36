//! Existence conditions, safe caps for unbounded segments, and the price floor
//! that dehomogenizes the complementarity formulation.

use std::collections::VecDeque;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Pow, Signed, Zero};
use serde_json::{json, Value};

use crate::model::{ratio, Bound, Market, Rational};
use crate::model::rational_string;

/// Edge `from -> to` with weight `multiplier`: the first-segment rate at which
/// `firm` turns `from` into `to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoodsEdge {
    pub from: usize,
    pub to: usize,
    pub multiplier: Rational,
    pub firm: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoodsGraph {
    pub nodes: usize,
    pub edges: Vec<GoodsEdge>,
}

impl GoodsGraph {
    /// One edge per (firm, input good) with positive first-segment rate.
    pub fn of(m: &Market) -> GoodsGraph {
        let mut edges = Vec::new();
        for (fi, f) in m.firms.iter().enumerate() {
            for (j, segs) in f.inputs.iter().enumerate() {
                if let Some(first) = segs.first() {
                    if first.rate.is_positive() {
                        edges.push(GoodsEdge {
                            from: j,
                            to: f.produces,
                            multiplier: first.rate.clone(),
                            firm: fi,
                        });
                    }
                }
            }
        }
        GoodsGraph { nodes: m.num_goods(), edges }
    }

    /// Largest multiplier per ordered pair of goods.
    fn best_weights(&self) -> Vec<Vec<Option<Rational>>> {
        let mut w: Vec<Vec<Option<Rational>>> = vec![vec![None; self.nodes]; self.nodes];
        for e in &self.edges {
            let slot = &mut w[e.from][e.to];
            if slot.as_ref().is_none_or(|cur| e.multiplier > *cur) {
                *slot = Some(e.multiplier.clone());
            }
        }
        w
    }

    /// A simple cycle whose multipliers multiply to at least one, if any.
    ///
    /// Layered max-product relaxation from each source over walks of up to
    /// `nodes` edges; unlike divergence detection this also catches product-one
    /// cycles.
    pub fn find_nonshrinking_cycle(&self) -> Option<Vec<usize>> {
        let n = self.nodes;
        let w = self.best_weights();
        for source in 0..n {
            // best[l][v]: max product of a walk source -> v with exactly l edges.
            let mut best: Vec<Vec<Option<Rational>>> = vec![vec![None; n]; n + 1];
            let mut pred: Vec<Vec<usize>> = vec![vec![usize::MAX; n]; n + 1];
            best[0][source] = Some(Rational::one());
            for l in 1..=n {
                for u in 0..n {
                    let Some(pu) = best[l - 1][u].clone() else { continue };
                    for v in 0..n {
                        if let Some(wuv) = &w[u][v] {
                            let cand = &pu * wuv;
                            if best[l][v].as_ref().is_none_or(|cur| cand > *cur) {
                                best[l][v] = Some(cand);
                                pred[l][v] = u;
                            }
                        }
                    }
                }
                if best[l][source].as_ref().is_some_and(|p| *p >= Rational::one()) {
                    let mut walk = vec![source];
                    let mut v = source;
                    for layer in (1..=l).rev() {
                        v = pred[layer][v];
                        walk.push(v);
                    }
                    walk.reverse();
                    return Some(simple_cycle_at_least_one(&walk, &w));
                }
            }
        }
        None
    }
}

/// Splits a closed walk with product >= 1 into simple cycles and returns one
/// whose product is >= 1.
fn simple_cycle_at_least_one(walk: &[usize], w: &[Vec<Option<Rational>>]) -> Vec<usize> {
    let product = |cyc: &[usize]| -> Rational {
        cyc.iter()
            .zip(cyc.iter().cycle().skip(1))
            .map(|(&a, &b)| w[a][b].clone().expect("walk follows edges"))
            .fold(Rational::one(), |acc, x| acc * x)
    };
    let mut stack: Vec<usize> = Vec::new();
    for &v in walk {
        if let Some(pos) = stack.iter().position(|&x| x == v) {
            let cyc: Vec<usize> = stack[pos..].to_vec();
            if product(&cyc) >= Rational::one() {
                return cyc;
            }
            stack.truncate(pos);
        }
        stack.push(v);
    }
    unreachable!("closed walk with product >= 1 contains such a simple cycle")
}

/// Directed graph over agents and firms: `a -> b` when `a` owns or produces a
/// good by which `b` is non-satiated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentFirmGraph {
    pub agents: usize,
    pub firms: usize,
    /// Nodes `0..agents` are agents, `agents..agents+firms` are firms.
    pub adjacency: Vec<Vec<usize>>,
}

impl AgentFirmGraph {
    pub fn of(m: &Market) -> AgentFirmGraph {
        let na = m.agents.len();
        let nodes = na + m.firms.len();
        let wanting = |j: usize| -> Vec<usize> {
            let agents = m
                .agents
                .iter()
                .enumerate()
                .filter(move |(_, a)| a.non_satiated_by(j))
                .map(|(i, _)| i);
            let firms = m
                .firms
                .iter()
                .enumerate()
                .filter(move |(_, f)| f.non_satiated_by(j))
                .map(move |(f, _)| na + f);
            agents.chain(firms).collect()
        };
        let mut adjacency = vec![Vec::new(); nodes];
        for (i, a) in m.agents.iter().enumerate() {
            for (j, w) in a.endowment.iter().enumerate() {
                if w.is_positive() {
                    adjacency[i].extend(wanting(j));
                }
            }
        }
        for (f, firm) in m.firms.iter().enumerate() {
            adjacency[na + f].extend(wanting(firm.produces));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        AgentFirmGraph { agents: na, firms: m.firms.len(), adjacency }
    }

    fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adjacency.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    NoProductionOutOfNothing,
    StrongConnectivity,
    EnoughDemand,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::NoProductionOutOfNothing => "no production out of nothing",
            Condition::StrongConnectivity => "strong connectivity",
            Condition::EnoughDemand => "enough demand",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// Goods along a cycle, first good not repeated.
    Cycle(Vec<usize>),
    /// Agents with no incoming path from the remaining agents.
    AgentSet(Vec<usize>),
    /// Goods with their desire.
    Goods(Vec<(usize, Rational)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub condition: Condition,
    pub passed: bool,
    pub witness: Option<Witness>,
}

impl CheckReport {
    fn pass(condition: Condition) -> Self {
        CheckReport { condition, passed: true, witness: None }
    }

    fn fail(condition: Condition, witness: Witness) -> Self {
        CheckReport { condition, passed: false, witness: Some(witness) }
    }

    pub fn to_json(&self, m: &Market) -> Value {
        let witness = match &self.witness {
            None => Value::Null,
            Some(Witness::Cycle(c)) => {
                let mut names: Vec<&str> = c.iter().map(|&j| m.goods[j].as_str()).collect();
                names.push(&m.goods[c[0]]);
                json!({ "cycle": names })
            }
            Some(Witness::AgentSet(s)) => {
                json!({ "agents": s.iter().map(|&i| m.agents[i].name.as_str()).collect::<Vec<_>>() })
            }
            Some(Witness::Goods(g)) => json!({
                "goods": g.iter().map(|(j, d)| json!({
                    "good": m.goods[*j],
                    "desire": rational_string(d),
                })).collect::<Vec<_>>()
            }),
        };
        json!({
            "condition": self.condition.to_string(),
            "verdict": if self.passed { "pass" } else { "fail" },
            "witness": witness,
        })
    }
}

/// Every production cycle must shrink: first-segment rates along any cycle of
/// the goods graph multiply to strictly less than one.
pub fn check_no_production_out_of_nothing(m: &Market) -> CheckReport {
    match GoodsGraph::of(m).find_nonshrinking_cycle() {
        None => CheckReport::pass(Condition::NoProductionOutOfNothing),
        Some(cycle) => CheckReport::fail(Condition::NoProductionOutOfNothing, Witness::Cycle(cycle)),
    }
}

/// All agents must lie in one strongly connected component of the agent/firm graph.
pub fn check_strong_connectivity(m: &Market) -> CheckReport {
    let g = AgentFirmGraph::of(m);
    for a in 0..g.agents {
        let seen = g.reachable_from(a);
        if (0..g.agents).any(|b| !seen[b]) {
            let cut: Vec<usize> = (0..g.agents).filter(|&b| !seen[b]).collect();
            return CheckReport::fail(Condition::StrongConnectivity, Witness::AgentSet(cut));
        }
    }
    CheckReport::pass(Condition::StrongConnectivity)
}

/// Total length of the positive-slope utility segments on `good`.
/// Unbounded segments must already be capped.
pub fn desire(m: &Market, good: usize) -> Rational {
    m.agents
        .iter()
        .flat_map(|a| a.utility[good].iter())
        .filter(|s| s.slope.is_positive())
        .fold(Rational::zero(), |acc, s| acc + s.length.expect_finite())
}

/// Every good needs desire strictly above one. Run on a capped market.
pub fn check_enough_demand(m: &Market) -> CheckReport {
    let short: Vec<(usize, Rational)> = (0..m.num_goods())
        .map(|j| (j, desire(m, j)))
        .filter(|(_, d)| *d <= Rational::one())
        .collect();
    if short.is_empty() {
        CheckReport::pass(Condition::EnoughDemand)
    } else {
        CheckReport::fail(Condition::EnoughDemand, Witness::Goods(short))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductionBound {
    /// Upper bound on what any firm can produce at the end of a chain.
    pub bound: Rational,
    /// Cap applied to unbounded production segments.
    pub production_cap: Rational,
    /// Cap applied to unbounded utility segments.
    pub utility_cap: Rational,
    pub capped: Market,
}

/// `L = E * n^n * (alpha_max + 1)^n`, where `E` is the largest total endowment
/// of any good (one for normalized markets), and the market with every
/// unbounded segment replaced by its safe cap.
pub fn compute_production_bound(m: &Market) -> ProductionBound {
    let n = m.num_goods() as u32;
    let rates = || m.firms.iter().flat_map(|f| f.inputs.iter().flatten()).map(|s| &s.rate);
    let alpha_max = rates().max().cloned().unwrap_or_else(Rational::zero);
    let alpha_min = rates().filter(|r| r.is_positive()).min().cloned();
    let stock = (0..m.num_goods())
        .map(|j| m.total_endowment(j))
        .fold(Rational::one(), |acc, e| if e > acc { e } else { acc });

    let n_pow = Rational::from_integer(Pow::pow(BigInt::from(n), n));
    let bound = stock * n_pow * Pow::pow(alpha_max + Rational::one(), n);
    let divisor = alpha_min
        .filter(|a| *a > Rational::one())
        .unwrap_or_else(Rational::one);
    let production_cap = &bound / divisor;
    let utility_cap = &bound + Rational::one();

    let mut capped = m.clone();
    for a in &mut capped.agents {
        for s in a.utility.iter_mut().flatten() {
            if s.length.is_unbounded() {
                s.length = Bound::Finite(utility_cap.clone());
            }
        }
    }
    for f in &mut capped.firms {
        for s in f.inputs.iter_mut().flatten() {
            if s.limit.is_unbounded() {
                s.limit = Bound::Finite(production_cap.clone());
            }
        }
    }
    ProductionBound { bound, production_cap, utility_cap, capped }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceFloor {
    /// Indexed by good.
    pub c: Vec<Rational>,
    pub delta: Rational,
}

impl PriceFloor {
    /// Both strict families: `c_j > 1`, and `alpha * c_{produced} < c_j` for
    /// every production segment with positive rate.
    pub fn is_strictly_interior(&self, m: &Market) -> bool {
        self.c.iter().all(|c| *c > Rational::one())
            && m.firms.iter().all(|f| {
                f.inputs.iter().enumerate().all(|(j, segs)| {
                    segs.iter()
                        .filter(|s| s.rate.is_positive())
                        .all(|s| &s.rate * &self.c[f.produces] < self.c[j])
                })
            })
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FloorError {
    #[error("price floor relaxation diverged for every margin tried; the market produces out of nothing")]
    Diverged,
}

const MAX_HALVINGS: u32 = 64;

/// A point strictly inside `{ alpha * c_{j_f} <= c_j, c_j >= 1 }`.
///
/// Starting from margin `delta = 1/2`, every `c_j` begins at `1 + delta` and
/// is pushed up to `(1 + delta) * alpha * c_{j_f}` along goods-graph edges for
/// `n` rounds; if another round would still move something the margin is
/// halved and the propagation restarts.
pub fn compute_price_floor(m: &Market) -> Result<PriceFloor, FloorError> {
    let graph = GoodsGraph::of(m);
    let n = m.num_goods();
    let mut delta = ratio(1, 2);
    for _ in 0..=MAX_HALVINGS {
        let factor = Rational::one() + &delta;
        let mut c = vec![factor.clone(); n];
        let relax = |c: &mut Vec<Rational>| -> bool {
            let mut changed = false;
            for e in &graph.edges {
                let cand = &factor * &e.multiplier * &c[e.to];
                if cand > c[e.from] {
                    c[e.from] = cand;
                    changed = true;
                }
            }
            changed
        };
        for _ in 0..n {
            if !relax(&mut c) {
                break;
            }
        }
        if !relax(&mut c.clone()) {
            let floor = PriceFloor { c, delta };
            assert!(floor.is_strictly_interior(m), "price floor must be strictly interior");
            return Ok(floor);
        }
        delta /= Rational::from_integer(BigInt::from(2));
    }
    Err(FloorError::Diverged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{m0, m1};
    use crate::model::{int, MarketBuilder};

    /// Firm A makes a unit of g1 from a unit of g2; firm B makes two units of g2 from a unit of g1.
    fn free_lunch() -> Market {
        MarketBuilder::new(&["g1", "g2"])
            .firm("A", "g1")
            .input("g2", &[(int(1), None)])
            .firm("B", "g2")
            .input("g1", &[(int(2), None)])
            .agent("a1")
            .endow("g1", int(1))
            .share("A", int(1))
            .wants("g2", &[(int(1), None)])
            .agent("a2")
            .endow("g2", int(1))
            .share("B", int(1))
            .wants("g1", &[(int(1), None)])
            .build()
    }

    fn two_cycle(ab: Rational, ba: Rational) -> Market {
        MarketBuilder::new(&["g1", "g2"])
            .firm("A", "g2")
            .input("g1", &[(ab, None)])
            .firm("B", "g1")
            .input("g2", &[(ba, None)])
            .agent("a1")
            .endow("g1", int(1))
            .endow("g2", int(1))
            .share("A", int(1))
            .share("B", int(1))
            .wants("g1", &[(int(1), None)])
            .build()
    }

    #[test]
    fn free_lunch_cycle_is_rejected() {
        let r = check_no_production_out_of_nothing(&free_lunch());
        assert!(!r.passed);
        let Some(Witness::Cycle(mut c)) = r.witness else { panic!("no cycle witness") };
        c.sort();
        assert_eq!(c, vec![0, 1]);
    }

    #[test]
    fn acyclic_and_shrinking_cycles_pass() {
        assert!(check_no_production_out_of_nothing(&m1()).passed);
        assert!(check_no_production_out_of_nothing(&two_cycle(ratio(1, 2), int(1))).passed);
    }

    #[test]
    fn product_one_cycle_fails() {
        let r = check_no_production_out_of_nothing(&two_cycle(int(2), ratio(1, 2)));
        assert!(!r.passed);
    }

    #[test]
    fn cycle_check_ignores_good_order() {
        let m = free_lunch();
        let mut swapped = m.clone();
        swapped.goods.swap(0, 1);
        for a in &mut swapped.agents {
            a.endowment.swap(0, 1);
            a.utility.swap(0, 1);
        }
        for f in &mut swapped.firms {
            f.inputs.swap(0, 1);
            f.produces = 1 - f.produces;
        }
        swapped.firms.reverse();
        for a in &mut swapped.agents {
            a.shares.reverse();
        }
        assert_eq!(
            check_no_production_out_of_nothing(&m).passed,
            check_no_production_out_of_nothing(&swapped).passed
        );
    }

    #[test]
    fn swap_economy_is_strongly_connected() {
        assert!(check_strong_connectivity(&m0()).passed);
    }

    #[test]
    fn isolated_agents_fail_connectivity() {
        let m = MarketBuilder::new(&["g1", "g2"])
            .agent("a1")
            .endow("g1", int(1))
            .wants("g1", &[(int(1), None)])
            .agent("a2")
            .endow("g2", int(1))
            .wants("g2", &[(int(1), None)])
            .build();
        let r = check_strong_connectivity(&m);
        assert!(!r.passed);
        assert_eq!(r.witness, Some(Witness::AgentSet(vec![1])));
    }

    #[test]
    fn single_agent_is_trivially_connected() {
        let m = MarketBuilder::new(&["g1"])
            .agent("a1")
            .endow("g1", int(1))
            .wants("g1", &[(int(1), None)])
            .build();
        assert!(check_strong_connectivity(&m).passed);
    }

    #[test]
    fn production_bound_of_m1() {
        let b = compute_production_bound(&m1());
        assert_eq!(b.bound, int(64));
        assert_eq!(b.utility_cap, int(65));
        assert_eq!(b.production_cap, ratio(64, 3));
        assert_eq!(b.capped.firms[0].inputs[0][1].limit, Bound::Finite(ratio(64, 3)));
        assert_eq!(b.capped.firms[0].inputs[0][0].limit, Bound::Finite(ratio(1, 2)));
        assert_eq!(b.capped.agents[0].utility[1][0].length, Bound::Finite(int(65)));
        assert!(b.capped.is_capped());
    }

    #[test]
    fn production_bound_without_firms() {
        let m = MarketBuilder::new(&["g1", "g2"])
            .agent("a1")
            .endow("g1", int(1))
            .wants("g2", &[(int(1), None)])
            .agent("a2")
            .endow("g2", int(1))
            .wants("g1", &[(int(1), None)])
            .build();
        let b = compute_production_bound(&m);
        assert_eq!(b.bound, int(4));
        assert_eq!(b.utility_cap, int(5));
    }

    #[test]
    fn bounded_market_is_unchanged_by_capping() {
        let m = MarketBuilder::new(&["g1"])
            .agent("a1")
            .endow("g1", int(1))
            .wants("g1", &[(int(1), Some(int(3)))])
            .build();
        assert_eq!(compute_production_bound(&m).capped, m);
    }

    #[test]
    fn enough_demand_after_capping() {
        let capped = compute_production_bound(&m1()).capped;
        assert_eq!(desire(&capped, 0), int(65));
        assert_eq!(desire(&capped, 1), int(65));
        assert!(check_enough_demand(&capped).passed);
    }

    #[test]
    fn enough_demand_failures() {
        let m = MarketBuilder::new(&["g1", "g2"])
            .agent("a1")
            .endow("g1", int(1))
            .endow("g2", int(1))
            .wants("g1", &[(int(1), None)])
            .build();
        let r = check_enough_demand(&compute_production_bound(&m).capped);
        assert_eq!(r.witness, Some(Witness::Goods(vec![(1, int(0))])));

        let m = MarketBuilder::new(&["g1"])
            .agent("a1")
            .endow("g1", int(1))
            .wants("g1", &[(int(1), Some(int(1))), (int(0), None)])
            .build();
        let r = check_enough_demand(&compute_production_bound(&m).capped);
        assert!(!r.passed);
        assert_eq!(r.witness, Some(Witness::Goods(vec![(0, int(1))])));
    }

    #[test]
    fn price_floor_of_m1() {
        let floor = compute_price_floor(&m1()).unwrap();
        assert_eq!(floor.c, vec![ratio(27, 4), ratio(3, 2)]);
        assert_eq!(floor.delta, ratio(1, 2));
        assert!(int(3) * ratio(3, 2) < ratio(27, 4));
    }

    #[test]
    fn price_floor_without_firms() {
        let m = MarketBuilder::new(&["g1", "g2", "g3"]).build();
        assert_eq!(compute_price_floor(&m).unwrap().c, vec![ratio(3, 2); 3]);
    }

    #[test]
    fn price_floor_along_a_chain() {
        // g3 feeds g2, g2 feeds g1, both at rate 1.
        let m = MarketBuilder::new(&["g1", "g2", "g3"])
            .firm("A", "g2")
            .input("g3", &[(int(1), None)])
            .firm("B", "g1")
            .input("g2", &[(int(1), None)])
            .build();
        let c = compute_price_floor(&m).unwrap().c;
        assert_eq!((c[2].clone(), c[1].clone(), c[0].clone()), (ratio(27, 8), ratio(9, 4), ratio(3, 2)));
    }

    #[test]
    fn price_floor_halves_margin_on_tight_cycles() {
        // Cycle product 3/4: (3/2)^2 * 3/4 > 1 forces a smaller margin.
        let m = two_cycle(ratio(3, 4), int(1));
        let floor = compute_price_floor(&m).unwrap();
        assert!(floor.delta < ratio(1, 2));
        assert!(floor.is_strictly_interior(&m));
    }

    #[test]
    fn price_floor_rejects_free_lunch() {
        assert_eq!(compute_price_floor(&free_lunch()), Err(FloorError::Diverged));
    }
}
