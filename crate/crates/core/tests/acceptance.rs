//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splc_core::analysis::{
    check_enough_demand, check_no_production_out_of_nothing, check_strong_connectivity, compute_price_floor,
    compute_production_bound, Witness,
};
use splc_core::equilibrium::{solve_market, verify_equilibrium, Equilibrium, SolveOptions, SolveOutcome};
use splc_core::formulation::{build_nhad_lcp, RowFamily};
use splc_core::harness::{enumerate_equilibria, generate_random_market, run_benchmark, GenParams};
use splc_core::lcp::support::enumerate_supports;
use splc_core::lcp::{lemke_solve, verify_lcp_solution, Label, LcpInstance, LcpOutcome, PivotState, Step};
use splc_core::model::{parse_market, Market, Rational};
use splc_core::reduction::{project_equilibrium, solve_via_reduction};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn r(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn market(text: &str) -> Market {
    parse_market(text.as_bytes()).expect("fixture parses")
}

const M0: &str = r#"{
  "goods": ["g1", "g2"],
  "agents": [
    {"name": "a1", "endowment": {"g1": "1"}, "shares": {"f1": "1"}, "utility": {"g2": [{"slope": "1"}]}},
    {"name": "a2", "endowment": {"g2": "1"}, "utility": {"g1": [{"slope": "1"}]}}
  ],
  "firms": [{"name": "f1", "produces": "g2", "inputs": {"g1": [{"rate": "1/2", "limit": "1"}]}}]
}"#;

const M1: &str = r#"{
  "goods": ["g1", "g2"],
  "agents": [
    {"name": "a1", "endowment": {"g1": "1"}, "shares": {"f1": "1"}, "utility": {"g2": [{"slope": "1"}]}},
    {"name": "a2", "endowment": {"g2": "1"}, "utility": {"g1": [{"slope": "1"}]}}
  ],
  "firms": [{"name": "f1", "produces": "g2", "inputs": {"g1": [{"rate": "3", "limit": "1/2"}, {"rate": "0"}]}}]
}"#;

fn solve(m: &Market) -> Result<(Equilibrium, u64), String> {
    let report = solve_market(m, &SolveOptions::default()).map_err(|e| e.to_string())?;
    match report.outcome {
        SolveOutcome::Equilibrium(e) => Ok((e, report.iterations)),
        other => Err(format!("{other:?}")),
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let m0 = market(M0);
    let (e, _) = solve(&m0)?;
    let t0 = start.elapsed();
    ensure(e.normalized_prices() == vec![r(1, 1), r(1, 1)], || format!("M0 prices {:?}", e.prices))?;
    ensure(e.total_input(0).is_zero(), || "M0 firm is not idle".into())?;
    ensure(e.consumption(0, 1) == r(1, 1) && e.consumption(1, 0) == r(1, 1), || "M0 swap incomplete".into())?;
    ensure(e.consumption(0, 0).is_zero() && e.consumption(1, 1).is_zero(), || "M0 agent keeps own good".into())?;

    let start = Instant::now();
    let m1 = market(M1);
    let floor = compute_price_floor(&compute_production_bound(&m1).capped).map_err(|e| e.to_string())?;
    ensure(floor.c == vec![r(27, 4), r(3, 2)], || format!("M1 floor {:?}", floor.c))?;
    let (e, _) = solve(&m1)?;
    let t1 = start.elapsed();
    ensure(e.prices == vec![r(27, 4), r(27, 8)], || format!("M1 prices {:?}", e.prices))?;
    ensure(e.total_input(0) == r(1, 2), || format!("M1 firm input {}", e.total_input(0)))?;
    ensure(e.profits == vec![r(27, 16)], || format!("M1 profit {:?}", e.profits))?;
    ensure(verify_equilibrium(&m1, &e).passed(), || "M1 does not verify".into())?;
    let limit = Duration::from_secs(1);
    ensure(t0 < limit && t1 < limit, || format!("too slow: {t0:?}, {t1:?}"))?;
    Ok(format!("M0 in {t0:?}, M1 in {t1:?}"))
}

fn criterion_2() -> Outcome {
    let shapes = [(2, 2, 2, 2, 67), (5, 5, 5, 2, 67), (10, 5, 5, 2, 66)];
    let mut total = 0;
    let mut rays = 0;
    for (i, &(a, g, f, k, count)) in shapes.iter().enumerate() {
        let stats = run_benchmark(&GenParams::new(a, g, f, k, 1000 * (i as u64 + 1)), count);
        total += stats.instances;
        rays += stats.secondary_ray_count;
        if let Some(bad) = stats.records.iter().find(|r| r.outcome != splc_core::harness::InstanceOutcome::Equilibrium) {
            return Err(format!("({a},{g},{f},{k}) instance {}: {}", bad.instance, bad.outcome));
        }
    }
    ensure(total == 200 && rays == 0, || format!("{total} instances, {rays} rays"))?;
    Ok(format!("{total} instances verified, secondaryRayCount = 0"))
}

fn criterion_3() -> Outcome {
    let mut notes = Vec::new();
    for &(shape, reference_avg) in &[((5, 5, 5, 2), 68.85), ((2, 2, 2, 2), 13.61)] {
        let (a, g, f, k) = shape;
        let stats = run_benchmark(&GenParams::new(a, g, f, k, 0), 100);
        ensure(stats.failures == 0, || format!("{shape:?}: {} failures", stats.failures))?;
        let avg = stats.avg_iterations;
        ensure(avg <= 3.0 * reference_avg && avg >= reference_avg / 3.0, || {
            format!("{shape:?}: avg {avg} outside 3x of {reference_avg}")
        })?;
        let cap = 20 * stats.total_segments as u64;
        ensure(stats.records.iter().all(|r| r.iterations <= cap), || {
            format!("{shape:?}: max {} above {cap}", stats.max_iterations)
        })?;
        notes.push(format!(
            "{shape:?} min/avg/max {}/{avg:.2}/{}",
            stats.min_iterations, stats.max_iterations
        ));
    }
    Ok(notes.join("; "))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut counted = 0;
    let mut seed = 0u64;
    while counted < 20 {
        ensure(seed < 200, || format!("only {counted} usable instances in 200 seeds"))?;
        let m = generate_random_market(&GenParams::new(2, 2, 1, 1, seed)).map_err(|e| e.to_string())?;
        seed += 1;
        let capped = compute_production_bound(&m).capped;
        let prechecks = check_no_production_out_of_nothing(&m).passed
            && check_strong_connectivity(&m).passed
            && check_enough_demand(&capped).passed;
        if !prechecks {
            continue;
        }
        let e = enumerate_equilibria(&m).map_err(|e| e.to_string())?;
        if e.degenerate {
            continue;
        }
        ensure(e.count() % 2 == 1, || format!("seed {}: {} equilibria", seed - 1, e.count()))?;
        counted += 1;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!("20 instances with odd counts ({} seeds tried) in {took:?}", seed))
}

/// Walks the pivot path by hand, checking complementarity and basis
/// uniqueness at every vertex.
fn walk_path(inst: &LcpInstance) -> Result<(), String> {
    if inst.q.iter().all(|v| !v.is_negative()) {
        return Ok(());
    }
    let mut state = PivotState::augment(inst);
    let mut seen = HashSet::new();
    loop {
        let basis = state.basis().to_vec();
        for i in 0..inst.dim() {
            if basis.contains(&Label::Y(i)) && basis.contains(&Label::V(i)) {
                return Err(format!("y{i} and v{i} both basic"));
            }
        }
        let mut key = basis.clone();
        key.sort();
        if !seen.insert(key) {
            return Err("basis repeated".into());
        }
        match state.pivot_step() {
            Step::Pivoted { .. } => {}
            Step::Solved { .. } | Step::Ray { .. } => return Ok(()),
        }
    }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut solved, mut rays) = (0, 0);
    for t in 0..500 {
        let m: Vec<Vec<Rational>> = (0..3)
            .map(|_| (0..3).map(|_| Rational::from_integer(rng.gen_range(-2..=2).into())).collect())
            .collect();
        let q: Vec<Rational> = (0..3).map(|_| Rational::from_integer(rng.gen_range(-2..=-1).into())).collect();
        let inst = LcpInstance::new(m, q).map_err(|e| e.to_string())?;
        walk_path(&inst).map_err(|e| format!("instance {t}: {e}"))?;
        match lemke_solve(&inst, 1000).outcome {
            LcpOutcome::Solution(y) => {
                verify_lcp_solution(&inst, &y).map_err(|e| format!("instance {t}: {e}"))?;
                let oracle = enumerate_supports(&inst);
                ensure(oracle.solutions.iter().any(|s| s.y == y), || {
                    format!("instance {t}: oracle does not list {y:?}")
                })?;
                solved += 1;
            }
            LcpOutcome::SecondaryRay(_) => rays += 1,
            LcpOutcome::IterationLimit(_) => return Err(format!("instance {t}: iteration limit")),
        }
    }
    Ok(format!("{solved} solutions confirmed, {rays} rays"))
}

const FREE_LUNCH: &str = r#"{
  "goods": ["g1", "g2"],
  "agents": [
    {"name": "a1", "endowment": {"g1": "1", "g2": "1"}, "shares": {"A": "1", "B": "1"},
     "utility": {"g1": [{"slope": "1"}], "g2": [{"slope": "1"}]}}
  ],
  "firms": [
    {"name": "A", "produces": "g1", "inputs": {"g2": [{"rate": "1"}]}},
    {"name": "B", "produces": "g2", "inputs": {"g1": [{"rate": "2"}]}}
  ]
}"#;

const ISOLATED: &str = r#"{
  "goods": ["g1", "g2"],
  "agents": [
    {"name": "a1", "endowment": {"g1": "1"}, "utility": {"g1": [{"slope": "1"}]}},
    {"name": "a2", "endowment": {"g2": "1"}, "utility": {"g2": [{"slope": "1"}]}}
  ]
}"#;

fn criterion_6() -> Outcome {
    let lunch = check_no_production_out_of_nothing(&market(FREE_LUNCH));
    match &lunch.witness {
        Some(Witness::Cycle(c)) if !lunch.passed && (c == &vec![0, 1] || c == &vec![1, 0]) => {}
        other => return Err(format!("free lunch: passed={} witness={other:?}", lunch.passed)),
    }
    let m1 = market(M1);
    let capped = compute_production_bound(&m1).capped;
    for rep in [check_no_production_out_of_nothing(&m1), check_strong_connectivity(&m1), check_enough_demand(&capped)] {
        ensure(rep.passed, || format!("M1 fails {}", rep.condition))?;
    }
    let iso = check_strong_connectivity(&market(ISOLATED));
    match &iso.witness {
        Some(Witness::AgentSet(s)) if !iso.passed && !s.is_empty() && s.len() < 2 => {}
        other => return Err(format!("isolated agents: passed={} witness={other:?}", iso.passed)),
    }
    Ok("cycle witness g1<->g2, M1 passes, isolated agents rejected".into())
}

fn criterion_7() -> Outcome {
    let shapes = [(2, 2, 2, 2), (3, 4, 2, 3), (5, 5, 5, 2), (4, 3, 3, 1)];
    for k in 0..100u64 {
        let (a, g, f, s) = shapes[k as usize % shapes.len()];
        let m = generate_random_market(&GenParams::new(a, g, f, s, 7000 + k)).map_err(|e| e.to_string())?;
        let capped = compute_production_bound(&m).capped;
        let floor = compute_price_floor(&capped).map_err(|e| format!("market {k}: {e}"))?;
        for (j, c) in floor.c.iter().enumerate() {
            ensure(*c > Rational::one(), || format!("market {k}: c[{j}] = {c}"))?;
        }
        for firm in &capped.firms {
            for (j, segs) in firm.inputs.iter().enumerate() {
                for s in segs {
                    let made = &s.rate * &floor.c[firm.produces];
                    ensure(made < floor.c[j], || format!("market {k}: segment profitable at floor"))?;
                }
            }
        }
        let lcp = build_nhad_lcp(&capped, &floor).map_err(|e| e.to_string())?;
        for (i, q) in lcp.instance.q.iter().enumerate() {
            let agent_row = lcp.index.family(i) == RowFamily::AgentBudget;
            ensure(q.is_negative() == agent_row, || format!("market {k}: row {i} has q = {q}"))?;
        }
        // Clearing rows plus budget rows cancel exactly, right-hand sides included.
        let n = lcp.instance.dim();
        let mut row = vec![Rational::zero(); n];
        let mut rhs = Rational::zero();
        for i in 0..n {
            if matches!(lcp.index.family(i), RowFamily::GoodClearing | RowFamily::AgentBudget) {
                for (acc, v) in row.iter_mut().zip(&lcp.instance.m[i]) {
                    *acc += v;
                }
                rhs += &lcp.instance.q[i];
            }
        }
        ensure(row.iter().all(Zero::is_zero) && rhs.is_zero(), || format!("market {k}: rows do not cancel"))?;
    }
    Ok("100 markets: strict floor, negative q on agent rows only, dependent rows".into())
}

fn criterion_8() -> Outcome {
    let shapes = [(2, 2, 0, 1), (2, 3, 0, 2), (3, 3, 0, 2), (3, 2, 0, 3)];
    for k in 0..20u64 {
        let (a, g, f, s) = shapes[k as usize % shapes.len()];
        let m = generate_random_market(&GenParams::new(a, g, f, s, 8000 + k)).map_err(|e| e.to_string())?;
        let (direct, _) = solve(&m).map_err(|e| format!("market {k} direct: {e}"))?;
        let (reduced, map, report) =
            solve_via_reduction(&m, &SolveOptions::default()).map_err(|e| format!("market {k} reduced: {e}"))?;
        let SolveOutcome::Equilibrium(e) = report.outcome else {
            return Err(format!("market {k} reduced: {:?}", report.outcome));
        };
        ensure(verify_equilibrium(&reduced, &e).passed(), || format!("market {k}: reduced does not verify"))?;
        let projected = project_equilibrium(&map, &e);
        ensure(verify_equilibrium(&m, &projected).passed(), || format!("market {k}: projection does not verify"))?;
        ensure(direct.normalized_prices() == projected.normalized_prices(), || {
            format!("market {k}: prices {:?} vs {:?}", direct.normalized_prices(), projected.normalized_prices())
        })?;
        ensure(direct.agent_alloc == projected.agent_alloc, || format!("market {k}: allocations differ"))?;
    }
    Ok("20 exchange markets agree".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("exact reference equilibria", criterion_1),
        ("random instances verify", criterion_2),
        ("iteration counts", criterion_3),
        ("odd number of equilibria", criterion_4),
        ("pivoting agrees with support oracle", criterion_5),
        ("sufficiency check witnesses", criterion_6),
        ("price floor and formulation", criterion_7),
        ("exchange reduction fidelity", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {}: {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}: {name} ({why})", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
