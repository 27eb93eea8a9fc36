//! What to do when the path ends on a ray because some goods have too little
//! demand: find the goods whose price stays put along the ray, drop them and
//! their producers, solve the smaller market, and put the dropped goods back
//! at price zero.

use std::fmt;

use num_traits::{Signed, Zero};

use super::Equilibrium;
use crate::formulation::NhadLcp;
use crate::lcp::RayInfo;
use crate::model::{Agent, Firm, Market, Rational};

/// How the ray's price direction splits the goods, following the agents
/// that are non-satiated by the goods whose price does not grow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayCase {
    /// Every price grows along the ray.
    AllPricesGrow,
    /// No price grows along the ray.
    NoPriceGrowth,
    /// No agent is non-satiated by a non-growing good: the restrictable case.
    NoAgentWantsS,
    AllAgentsWantS,
    SomeAgentsWantS,
}

impl fmt::Display for RayCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RayCase::AllPricesGrow => "all prices grow",
            RayCase::NoPriceGrowth => "no price grows",
            RayCase::NoAgentWantsS => "no agent non-satiated by fixed-price goods",
            RayCase::AllAgentsWantS => "every agent non-satiated by fixed-price goods",
            RayCase::SomeAgentsWantS => "some agents non-satiated by fixed-price goods",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RayReport {
    pub case: RayCase,
    /// Goods whose price direction is zero.
    pub fixed_goods: Vec<usize>,
    /// Firms producing a fixed-price good.
    pub fixed_firms: Vec<usize>,
    /// Agents non-satiated by some fixed-price good.
    pub wanting_agents: Vec<usize>,
    /// Firm input amounts at the ray's vertex, `[firm][good][segment]`.
    pub vertex_raw: Vec<Vec<Vec<Rational>>>,
    pub ray: RayInfo,
}

fn case_of(m: &Market, fixed: &[usize], wanting: &[usize]) -> RayCase {
    if fixed.is_empty() {
        RayCase::AllPricesGrow
    } else if fixed.len() == m.num_goods() {
        RayCase::NoPriceGrowth
    } else if wanting.is_empty() {
        RayCase::NoAgentWantsS
    } else if wanting.len() == m.agents.len() {
        RayCase::AllAgentsWantS
    } else {
        RayCase::SomeAgentsWantS
    }
}

/// Classifies a ray of the system built for `m` (after capping; `m` itself
/// supplies the non-satiation structure).
pub fn classify_ray(m: &Market, lcp: &NhadLcp, ray: RayInfo) -> RayReport {
    let idx = &lcp.index;
    let fixed_goods: Vec<usize> = (0..m.num_goods())
        .filter(|&j| ray.direction_y[idx.price(j)].is_zero())
        .collect();
    let fixed_firms: Vec<usize> = (0..m.firms.len())
        .filter(|&f| fixed_goods.contains(&m.firms[f].produces))
        .collect();
    let wanting_agents: Vec<usize> = (0..m.agents.len())
        .filter(|&i| fixed_goods.iter().any(|&j| m.agents[i].non_satiated_by(j)))
        .collect();
    let mut vertex_raw: Vec<Vec<Vec<Rational>>> = m
        .firms
        .iter()
        .map(|f| f.inputs.iter().map(|s| vec![Rational::zero(); s.len()]).collect())
        .collect();
    for (s, &pr) in idx.production.iter().enumerate() {
        let price = &ray.vertex_y[idx.price(pr.good)] + &lcp.floor.c[pr.good];
        vertex_raw[pr.firm][pr.good][pr.seg] = &ray.vertex_y[idx.r(s)] / price;
    }
    RayReport {
        case: case_of(m, &fixed_goods, &wanting_agents),
        fixed_goods,
        fixed_firms,
        wanting_agents,
        vertex_raw,
        ray,
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FallbackError {
    #[error("ray ({0}) does not allow restricting the market")]
    NotRestrictable(RayCase),
    #[error("firm {firm} can turn unboundedly much of free good {good} into output")]
    UnboundedCredit { firm: String, good: String },
    #[error("agent {agent} wants unboundedly much of free good {good}")]
    UnboundedFreeSegment { agent: String, good: String },
    #[error("free good {0} cannot cover the demand placed on it")]
    Oversubscribed(String),
}

/// A market with some goods and firms removed, with the positions they had.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictedMarket {
    pub market: Market,
    pub goods: Vec<usize>,
    pub firms: Vec<usize>,
}

fn pick<T: Clone>(v: &[T], keep: &[usize]) -> Vec<T> {
    keep.iter().map(|&k| v[k].clone()).collect()
}

/// Drops the fixed-price goods and their producers. A remaining firm's full
/// output from dropped inputs becomes endowment of its product, credited to
/// the owners by share.
pub fn restrict_market(m: &Market, ray: &RayReport) -> Result<RestrictedMarket, FallbackError> {
    if ray.case != RayCase::NoAgentWantsS {
        return Err(FallbackError::NotRestrictable(ray.case));
    }
    let goods: Vec<usize> = (0..m.num_goods()).filter(|j| !ray.fixed_goods.contains(j)).collect();
    let firms: Vec<usize> = (0..m.firms.len()).filter(|f| !ray.fixed_firms.contains(f)).collect();
    let new_index = |j: usize| goods.iter().position(|&g| g == j).expect("kept good");

    let mut agents: Vec<Agent> = m
        .agents
        .iter()
        .map(|a| Agent {
            name: a.name.clone(),
            endowment: pick(&a.endowment, &goods),
            shares: pick(&a.shares, &firms),
            utility: pick(&a.utility, &goods),
        })
        .collect();

    for &f in &firms {
        let firm = &m.firms[f];
        let mut credit = Rational::zero();
        for &j in &ray.fixed_goods {
            for seg in firm.inputs[j].iter().filter(|s| s.rate.is_positive()) {
                let limit = seg.limit.finite().ok_or_else(|| FallbackError::UnboundedCredit {
                    firm: firm.name.clone(),
                    good: m.goods[j].clone(),
                })?;
                credit += &seg.rate * limit;
            }
        }
        if credit.is_positive() {
            let out = new_index(firm.produces);
            for (a, orig) in agents.iter_mut().zip(&m.agents) {
                a.endowment[out] += &orig.shares[f] * &credit;
            }
        }
    }

    let new_firms: Vec<Firm> = firms
        .iter()
        .map(|&f| {
            let firm = &m.firms[f];
            Firm {
                name: firm.name.clone(),
                produces: new_index(firm.produces),
                inputs: pick(&firm.inputs, &goods),
            }
        })
        .collect();

    let market = Market { goods: pick(&m.goods, &goods), agents, firms: new_firms };
    Ok(RestrictedMarket { market, goods, firms })
}

/// Rebuilds an equilibrium of `m` from one of the restricted market: dropped
/// goods are free and every agent takes all of its positive-utility segments
/// of them, remaining firms run dropped inputs at full capacity, and the
/// dropped firms keep their plan from the ray's vertex on dropped inputs.
pub fn lift_equilibrium(
    m: &Market,
    restricted: &RestrictedMarket,
    ray: &RayReport,
    inner: &Equilibrium,
) -> Result<Equilibrium, FallbackError> {
    let n = m.num_goods();
    let kept_good = |j: usize| restricted.goods.iter().position(|&g| g == j);
    let kept_firm = |f: usize| restricted.firms.iter().position(|&g| g == f);

    let mut prices = vec![Rational::zero(); n];
    for (jj, &j) in restricted.goods.iter().enumerate() {
        prices[j] = inner.prices[jj].clone();
    }

    let mut agent_alloc = Vec::with_capacity(m.agents.len());
    for (i, a) in m.agents.iter().enumerate() {
        let mut per_good = Vec::with_capacity(n);
        for (j, segs) in a.utility.iter().enumerate() {
            match kept_good(j) {
                Some(jj) => per_good.push(inner.agent_alloc[i][jj].clone()),
                None => {
                    let mut amounts = Vec::with_capacity(segs.len());
                    for s in segs {
                        if s.slope.is_positive() {
                            let l = s.length.finite().ok_or_else(|| FallbackError::UnboundedFreeSegment {
                                agent: a.name.clone(),
                                good: m.goods[j].clone(),
                            })?;
                            amounts.push(l.clone());
                        } else {
                            amounts.push(Rational::zero());
                        }
                    }
                    per_good.push(amounts);
                }
            }
        }
        agent_alloc.push(per_good);
    }

    let mut firm_raw = Vec::with_capacity(m.firms.len());
    let mut profits = Vec::with_capacity(m.firms.len());
    for (f, firm) in m.firms.iter().enumerate() {
        let mut raw = Vec::with_capacity(n);
        let mut profit = Rational::zero();
        match kept_firm(f) {
            Some(ff) => {
                profit += &inner.profits[ff];
                for (j, segs) in firm.inputs.iter().enumerate() {
                    match kept_good(j) {
                        Some(jj) => raw.push(inner.firm_raw[ff][jj].clone()),
                        None => {
                            let full: Vec<Rational> = segs
                                .iter()
                                .map(|s| match (s.rate.is_positive(), s.limit.finite()) {
                                    (true, Some(o)) => o.clone(),
                                    _ => Rational::zero(),
                                })
                                .collect();
                            for (s, x) in segs.iter().zip(&full) {
                                profit += &s.rate * x * &prices[firm.produces];
                            }
                            raw.push(full);
                        }
                    }
                }
            }
            None => {
                for (j, segs) in firm.inputs.iter().enumerate() {
                    if kept_good(j).is_some() {
                        raw.push(vec![Rational::zero(); segs.len()]);
                    } else {
                        raw.push(ray.vertex_raw[f][j].clone());
                    }
                }
            }
        }
        firm_raw.push(raw);
        profits.push(profit);
    }
    let firm_out: Vec<Vec<Vec<Rational>>> = m
        .firms
        .iter()
        .zip(&firm_raw)
        .map(|(firm, raw)| {
            firm.inputs
                .iter()
                .zip(raw)
                .map(|(segs, xs)| segs.iter().zip(xs).map(|(s, x)| &s.rate * x).collect())
                .collect()
        })
        .collect();

    let lifted = Equilibrium {
        prices,
        agent_alloc,
        firm_raw,
        firm_out,
        profits,
        scale_note: inner.scale_note.iter().map(|&jj| restricted.goods[jj]).collect(),
    };
    for &j in &ray.fixed_goods {
        let demand = (0..m.agents.len())
            .map(|i| lifted.consumption(i, j))
            .chain(lifted.firm_raw.iter().map(|f| f[j].iter().fold(Rational::zero(), |a, v| a + v)))
            .fold(Rational::zero(), |a, v| a + v);
        let supply = m
            .producers_of(j)
            .map(|f| lifted.total_output(f))
            .fold(m.total_endowment(j), |a, v| a + v);
        if demand > supply {
            return Err(FallbackError::Oversubscribed(m.goods[j].clone()));
        }
    }
    Ok(lifted)
}
