//! From a market to a verified equilibrium: prechecks, caps, price floor,
//! complementarity system, Lemke, extraction, and the restricted re-solve used
//! when enough demand is waived and the path ends on a ray.

mod document;
mod fallback;
mod verify;

pub use document::{equilibrium_to_json, parse_equilibrium, serialize_equilibrium};
pub use fallback::{classify_ray, lift_equilibrium, restrict_market, FallbackError, RayCase, RayReport, RestrictedMarket};
pub use verify::{verify_equilibrium, Clause, VerificationIssue, VerificationReport};

use num_traits::{Signed, Zero};

use crate::analysis::{
    check_enough_demand, check_no_production_out_of_nothing, check_strong_connectivity,
    compute_price_floor, compute_production_bound, CheckReport, FloorError,
};
use crate::formulation::{build_nhad_lcp, FormulationError, NhadLcp};
use crate::lcp::{lemke_solve_traced, LcpOutcome, DEFAULT_MAX_ITERATIONS};
use crate::model::{validate_market, Market, Rational, ValidationReport};

/// Segment-level quantities are indexed `[owner][good][segment]`, mirroring
/// the market's segment lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equilibrium {
    pub prices: Vec<Rational>,
    pub agent_alloc: Vec<Vec<Vec<Rational>>>,
    /// Input used per production segment.
    pub firm_raw: Vec<Vec<Vec<Rational>>>,
    /// Output made from each production segment.
    pub firm_out: Vec<Vec<Vec<Rational>>>,
    pub profits: Vec<Rational>,
    /// Goods sitting exactly at their price floor at the solution vertex.
    pub scale_note: Vec<usize>,
}

impl Equilibrium {
    /// Prices and profits multiplied by `factor`; amounts unchanged.
    pub fn scaled(&self, factor: &Rational) -> Equilibrium {
        Equilibrium {
            prices: self.prices.iter().map(|p| p * factor).collect(),
            profits: self.profits.iter().map(|p| p * factor).collect(),
            ..self.clone()
        }
    }

    /// Prices divided by the price of the first good, or of the first
    /// positively priced good when that one is free.
    pub fn normalized_prices(&self) -> Vec<Rational> {
        match self.prices.iter().find(|p| p.is_positive()) {
            Some(base) => self.prices.iter().map(|p| p / base).collect(),
            None => self.prices.clone(),
        }
    }

    pub fn total_output(&self, firm: usize) -> Rational {
        self.firm_out[firm].iter().flatten().fold(Rational::zero(), |acc, v| acc + v)
    }

    pub fn total_input(&self, firm: usize) -> Rational {
        self.firm_raw[firm].iter().flatten().fold(Rational::zero(), |acc, v| acc + v)
    }

    pub fn consumption(&self, agent: usize, good: usize) -> Rational {
        self.agent_alloc[agent][good].iter().fold(Rational::zero(), |acc, v| acc + v)
    }
}

/// Reads market quantities off a `z = 0` solution: prices `p' + c`, amounts
/// by dividing money by price, profits from the per-unit profit variables.
pub fn extract_equilibrium(capped: &Market, lcp: &NhadLcp, y: &[Rational]) -> Equilibrium {
    let idx = &lcp.index;
    let prices: Vec<Rational> = (0..capped.num_goods())
        .map(|j| &y[idx.price(j)] + &lcp.floor.c[j])
        .collect();
    assert!(prices.iter().all(|p| p.is_positive()), "prices dominate a positive floor");

    let mut firm_raw: Vec<Vec<Vec<Rational>>> = capped
        .firms
        .iter()
        .map(|f| f.inputs.iter().map(|segs| vec![Rational::zero(); segs.len()]).collect())
        .collect();
    let mut firm_out = firm_raw.clone();
    let mut profits = vec![Rational::zero(); capped.firms.len()];
    for (s, &pr) in idx.production.iter().enumerate() {
        let seg = capped.production(pr);
        let amount = &y[idx.r(s)] / &prices[pr.good];
        firm_out[pr.firm][pr.good][pr.seg] = &seg.rate * &amount;
        firm_raw[pr.firm][pr.good][pr.seg] = amount;
        profits[pr.firm] += seg.limit.expect_finite() * &y[idx.beta(s)];
    }

    let mut agent_alloc: Vec<Vec<Vec<Rational>>> = capped
        .agents
        .iter()
        .map(|a| a.utility.iter().map(|segs| vec![Rational::zero(); segs.len()]).collect())
        .collect();
    for (s, &ur) in idx.utility.iter().enumerate() {
        agent_alloc[ur.agent][ur.good][ur.seg] = &y[idx.q(s)] / &prices[ur.good];
    }

    let scale_note = (0..capped.num_goods()).filter(|&j| y[idx.price(j)].is_zero()).collect();
    Equilibrium { prices, agent_alloc, firm_raw, firm_out, profits, scale_note }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    pub max_iterations: u64,
    /// Solve even when some good has too little desire, restricting the
    /// market and re-solving when the path ends on a ray.
    pub waive_enough_demand: bool,
    pub trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { max_iterations: DEFAULT_MAX_ITERATIONS, waive_enough_demand: false, trace: false }
    }
}

#[derive(Debug, Clone)]
pub enum Failure {
    Invalid(ValidationReport),
    Check(CheckReport),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Invalid(r) => {
                let first = r.violations.first().map(ToString::to_string).unwrap_or_default();
                write!(f, "invalid market ({} violations; first: {first})", r.violations.len())
            }
            Failure::Check(c) => write!(f, "{} fails", c.condition),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Equilibrium(Equilibrium),
    SecondaryRay(RayReport),
    Failure(Failure),
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub outcome: SolveOutcome,
    /// Pivots summed over every system solved.
    pub iterations: u64,
    /// Number of restricted re-solves.
    pub restrictions: usize,
    pub trace: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("secondary ray although every sufficiency condition holds")]
    RayDespiteConditions(Box<RayReport>),
    #[error(transparent)]
    Floor(#[from] FloorError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Fallback(#[from] FallbackError),
}

pub fn solve_market(m: &Market, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    let mut report = SolveReport {
        outcome: SolveOutcome::IterationLimit,
        iterations: 0,
        restrictions: 0,
        trace: Vec::new(),
    };
    let validation = validate_market(m);
    report.outcome = if validation.passed() {
        solve_stage(m, opts, &mut report)?
    } else {
        SolveOutcome::Failure(Failure::Invalid(validation))
    };
    Ok(report)
}

fn solve_stage(m: &Market, opts: &SolveOptions, report: &mut SolveReport) -> Result<SolveOutcome, SolveError> {
    for check in [check_no_production_out_of_nothing(m), check_strong_connectivity(m)] {
        if !check.passed {
            return Ok(SolveOutcome::Failure(Failure::Check(check)));
        }
    }
    let capped = compute_production_bound(m).capped;
    let demand = check_enough_demand(&capped);
    if !demand.passed && !opts.waive_enough_demand {
        return Ok(SolveOutcome::Failure(Failure::Check(demand)));
    }
    let floor = compute_price_floor(&capped)?;
    let lcp = build_nhad_lcp(&capped, &floor)?;

    let budget = opts.max_iterations.saturating_sub(report.iterations);
    let trace = &mut report.trace;
    let run = lemke_solve_traced(&lcp.instance, budget, |e| {
        if opts.trace {
            trace.push(e.to_string());
        }
    });
    report.iterations += run.iterations;

    match run.outcome {
        LcpOutcome::Solution(y) => Ok(SolveOutcome::Equilibrium(extract_equilibrium(&capped, &lcp, &y))),
        LcpOutcome::IterationLimit(_) => Ok(SolveOutcome::IterationLimit),
        LcpOutcome::SecondaryRay(ray) => {
            let ray = classify_ray(m, &lcp, ray);
            if demand.passed {
                return Err(SolveError::RayDespiteConditions(Box::new(ray)));
            }
            if ray.case != RayCase::NoAgentWantsS || report.restrictions >= m.num_goods() {
                return Ok(SolveOutcome::SecondaryRay(ray));
            }
            let restricted = restrict_market(m, &ray)?;
            report.restrictions += 1;
            match solve_stage(&restricted.market, opts, report)? {
                SolveOutcome::Equilibrium(inner) => Ok(SolveOutcome::Equilibrium(lift_equilibrium(
                    m,
                    &restricted,
                    &ray,
                    &inner,
                )?)),
                other => Ok(other),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{m0, m1};
    use crate::model::{int, ratio, MarketBuilder};

    fn solve(m: &Market) -> (Equilibrium, SolveReport) {
        let report = solve_market(m, &SolveOptions::default()).unwrap();
        match &report.outcome {
            SolveOutcome::Equilibrium(e) => (e.clone(), report),
            other => panic!("expected an equilibrium, got {other:?}"),
        }
    }

    #[test]
    fn m0_swaps_with_idle_firm() {
        let (e, _) = solve(&m0());
        assert_eq!(e.normalized_prices(), vec![int(1), int(1)]);
        assert_eq!(e.firm_raw, vec![vec![vec![int(0)], vec![]]]);
        assert_eq!(e.profits, vec![int(0)]);
        assert_eq!(e.agent_alloc[0][1], vec![int(1)]);
        assert_eq!(e.agent_alloc[1][0], vec![int(1)]);
        assert!(verify_equilibrium(&m0(), &e).passed());
    }

    #[test]
    fn m1_runs_firm_at_capacity() {
        let (e, _) = solve(&m1());
        assert_eq!(e.prices, vec![ratio(27, 4), ratio(27, 8)]);
        assert_eq!(e.scale_note, vec![0]);
        assert_eq!(e.firm_raw[0][0], vec![ratio(1, 2), int(0)]);
        assert_eq!(e.firm_out[0][0], vec![ratio(3, 2), int(0)]);
        assert_eq!(e.profits, vec![ratio(27, 16)]);
        assert_eq!(e.agent_alloc[0][1], vec![ratio(5, 2)]);
        assert_eq!(e.agent_alloc[1][0], vec![ratio(1, 2)]);
        assert!(verify_equilibrium(&m1(), &e).passed());
    }

    #[test]
    fn money_is_conserved_per_good() {
        for m in [m0(), m1()] {
            let (e, _) = solve(&m);
            for j in 0..m.num_goods() {
                let spent = (0..m.agents.len())
                    .map(|i| e.consumption(i, j))
                    .chain(e.firm_raw.iter().map(|f| f[j].iter().fold(Rational::zero(), |a, v| a + v)))
                    .fold(Rational::zero(), |a, v| a + v)
                    * &e.prices[j];
                let made = m
                    .producers_of(j)
                    .map(|f| e.total_output(f))
                    .fold(m.total_endowment(j), |a, v| a + v)
                    * &e.prices[j];
                assert_eq!(spent, made);
            }
        }
    }

    #[test]
    fn disconnected_market_fails_precheck() {
        let m = MarketBuilder::new(&["g1", "g2"])
            .agent("a1")
            .endow("g1", int(1))
            .wants("g1", &[(int(1), None)])
            .agent("a2")
            .endow("g2", int(1))
            .wants("g2", &[(int(1), None)])
            .build();
        let report = solve_market(&m, &SolveOptions::default()).unwrap();
        match report.outcome {
            SolveOutcome::Failure(Failure::Check(c)) => {
                assert_eq!(c.condition, crate::analysis::Condition::StrongConnectivity)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_market_fails_validation() {
        let mut m = m1();
        m.agents[0].shares[0] = ratio(1, 2);
        let report = solve_market(&m, &SolveOptions::default()).unwrap();
        assert!(matches!(report.outcome, SolveOutcome::Failure(Failure::Invalid(_))));
    }

    #[test]
    fn trace_is_collected_on_request() {
        let opts = SolveOptions { trace: true, ..SolveOptions::default() };
        let report = solve_market(&m1(), &opts).unwrap();
        assert_eq!(report.trace.len() as u64, report.iterations);
        assert!(report.trace[0].starts_with("step 1: enter z leave "));
    }

    #[test]
    fn scaled_equilibrium_still_verifies() {
        let (e, _) = solve(&m1());
        let s = e.scaled(&ratio(7, 3));
        assert!(verify_equilibrium(&m1(), &s).passed());
        assert_eq!(s.normalized_prices(), e.normalized_prices());
    }
}
