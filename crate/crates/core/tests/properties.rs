use num_bigint::BigInt;
use proptest::prelude::*;

use splc_core::equilibrium::{parse_equilibrium, serialize_equilibrium, solve_market, verify_equilibrium, SolveOptions, SolveOutcome};
use splc_core::harness::{generate_random_market, GenParams};
use splc_core::lcp::{lemke_solve, verify_lcp_solution, LcpInstance, LcpOutcome};
use splc_core::model::{parse_market, serialize_market, validate_market, Rational};

fn shapes() -> impl Strategy<Value = GenParams> {
    (1usize..4, 1usize..4, 0usize..3, 1usize..3, any::<u64>()).prop_map(|(a, g, f, k, seed)| {
        GenParams::new(a, g, f.min(g), k, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn market_documents_round_trip(p in shapes()) {
        let m = generate_random_market(&p).unwrap();
        prop_assert!(validate_market(&m).passed());
        let text = serialize_market(&m);
        prop_assert_eq!(parse_market(text.as_bytes()).unwrap(), m);
    }

    #[test]
    fn equilibria_survive_rescaling_and_round_trip(p in shapes(), num in 1i64..50, den in 1i64..50) {
        let m = generate_random_market(&p).unwrap();
        let report = solve_market(&m, &SolveOptions::default()).unwrap();
        if let SolveOutcome::Equilibrium(e) = report.outcome {
            prop_assert!(verify_equilibrium(&m, &e).passed());
            let t = Rational::new(BigInt::from(num), BigInt::from(den));
            prop_assert!(verify_equilibrium(&m, &e.scaled(&t)).passed());
            let back = parse_equilibrium(&m, serialize_equilibrium(&m, &e).as_bytes()).unwrap();
            prop_assert_eq!(back, e);
        }
    }

    #[test]
    fn lemke_solutions_are_complementary(
        entries in prop::collection::vec(-3i64..=3, 16),
        rhs in prop::collection::vec(-3i64..=3, 4),
    ) {
        let int = |v: i64| Rational::from_integer(BigInt::from(v));
        let m = entries.chunks(4).map(|row| row.iter().copied().map(int).collect()).collect();
        let inst = LcpInstance::new(m, rhs.into_iter().map(int).collect()).unwrap();
        if let LcpOutcome::Solution(y) = lemke_solve(&inst, 10_000).outcome {
            prop_assert_eq!(verify_lcp_solution(&inst, &y), Ok(()));
        }
    }
}
