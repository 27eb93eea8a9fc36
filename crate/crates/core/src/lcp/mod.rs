//! Lemke's complementary pivot method for `M y <= q, y >= 0, y . (q - M y) = 0`
//! over exact rationals.

mod pivot;
pub mod support;

pub use pivot::{Label, PivotState, RayInfo, Step};

use num_traits::{Signed, Zero};

use crate::model::rational_string;
use crate::model::Rational;

/// Default pivot budget for one solve.
pub const DEFAULT_MAX_ITERATIONS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcpInstance {
    pub m: Vec<Vec<Rational>>,
    pub q: Vec<Rational>,
    /// Column multiplying `z`: set exactly on rows with negative `q`.
    pub covering: Vec<bool>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LcpError {
    #[error("matrix is {rows}x{cols} but q has {len} entries")]
    Shape { rows: usize, cols: usize, len: usize },
}

impl LcpInstance {
    pub fn new(m: Vec<Vec<Rational>>, q: Vec<Rational>) -> Result<LcpInstance, LcpError> {
        let len = q.len();
        if m.len() != len || m.iter().any(|row| row.len() != len) {
            return Err(LcpError::Shape {
                rows: m.len(),
                cols: m.first().map_or(0, Vec::len),
                len,
            });
        }
        let covering = q.iter().map(|v| v.is_negative()).collect();
        Ok(LcpInstance { m, q, covering })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// `q - M y`.
    pub fn slack(&self, y: &[Rational]) -> Vec<Rational> {
        self.m
            .iter()
            .zip(&self.q)
            .map(|(row, qi)| {
                row.iter()
                    .zip(y)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(qi.clone(), |acc, (a, b)| acc - a * b)
            })
            .collect()
    }

    /// Matrix dump: a `rows cols` header, then one line per row with the
    /// entries of `M`, then `|`, then `q`.
    pub fn dump(&self) -> String {
        let mut out = format!("{} {}\n", self.dim(), self.dim());
        for (row, qi) in self.m.iter().zip(&self.q) {
            let entries: Vec<String> = row.iter().map(rational_string).collect();
            out.push_str(&entries.join(" "));
            out.push_str(" | ");
            out.push_str(&rational_string(qi));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub enum LcpOutcome {
    Solution(Vec<Rational>),
    SecondaryRay(RayInfo),
    IterationLimit(Box<PivotState>),
}

#[derive(Debug, Clone)]
pub struct LemkeRun {
    pub outcome: LcpOutcome,
    /// Pivots performed, including the one that brings `z` in.
    pub iterations: u64,
}

/// One line of the optional pivot trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub step: u64,
    pub entering: Label,
    pub leaving: Label,
    pub z: Rational,
}

impl std::fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "step {}: enter {} leave {} z={}",
            self.step,
            self.entering,
            self.leaving,
            rational_string(&self.z)
        )
    }
}

pub fn lemke_solve(inst: &LcpInstance, max_iterations: u64) -> LemkeRun {
    lemke_solve_traced(inst, max_iterations, |_| {})
}

/// Follows the path from the primary ray until `z` leaves the basis, an
/// unbounded edge appears, or `max_iterations` pivots have been made.
pub fn lemke_solve_traced(
    inst: &LcpInstance,
    max_iterations: u64,
    mut trace: impl FnMut(&TraceEvent),
) -> LemkeRun {
    if inst.q.iter().all(|v| !v.is_negative()) {
        return LemkeRun {
            outcome: LcpOutcome::Solution(vec![Rational::zero(); inst.dim()]),
            iterations: 0,
        };
    }
    let mut state = PivotState::augment(inst);
    if let Some(label) = state.entering().and_then(Label::complement) {
        trace(&TraceEvent {
            step: 1,
            entering: Label::Z,
            leaving: label,
            z: state.z_value(),
        });
    }
    loop {
        if state.iterations() >= max_iterations {
            let iterations = state.iterations();
            return LemkeRun {
                outcome: LcpOutcome::IterationLimit(Box::new(state)),
                iterations,
            };
        }
        let step = state.pivot_step();
        let event = |entering, leaving, state: &PivotState| TraceEvent {
            step: state.iterations(),
            entering,
            leaving,
            z: state.z_value(),
        };
        match step {
            Step::Pivoted { entering, leaving } => trace(&event(entering, leaving, &state)),
            Step::Solved { entering } => {
                trace(&event(entering, Label::Z, &state));
                return LemkeRun {
                    outcome: LcpOutcome::Solution(state.y_values()),
                    iterations: state.iterations(),
                };
            }
            Step::Ray { entering } => {
                return LemkeRun {
                    outcome: LcpOutcome::SecondaryRay(state.ray(entering)),
                    iterations: state.iterations(),
                };
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LcpViolation {
    #[error("expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("y[{0}] is negative")]
    Negative(usize),
    #[error("row {0} violates M y <= q")]
    Infeasible(usize),
    #[error("complementarity fails at index {0}")]
    NotComplementary(usize),
}

/// Exact check of feasibility and complementarity; reports the first bad index.
pub fn verify_lcp_solution(inst: &LcpInstance, y: &[Rational]) -> Result<(), LcpViolation> {
    if y.len() != inst.dim() {
        return Err(LcpViolation::Dimension { expected: inst.dim(), got: y.len() });
    }
    let slack = inst.slack(y);
    for (i, (yi, si)) in y.iter().zip(&slack).enumerate() {
        if yi.is_negative() {
            return Err(LcpViolation::Negative(i));
        }
        if si.is_negative() {
            return Err(LcpViolation::Infeasible(i));
        }
        if !(yi * si).is_zero() {
            return Err(LcpViolation::NotComplementary(i));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::int;

    fn inst(m: &[&[i64]], q: &[i64]) -> LcpInstance {
        LcpInstance::new(
            m.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect(),
            q.iter().map(|&v| int(v)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn augment_single_row() {
        let s = PivotState::augment(&inst(&[&[-1]], &[-1]));
        assert_eq!(s.z_value(), int(1));
        assert_eq!(s.v_values(), vec![int(0)]);
        assert_eq!(s.double_label(), Some(0));
        assert_eq!(s.entering(), Some(Label::Y(0)));
    }

    #[test]
    fn augment_picks_most_negative_row() {
        let s = PivotState::augment(&inst(&[&[1, 0], &[0, 1]], &[-2, -3]));
        assert_eq!(s.z_value(), int(3));
        assert_eq!(s.double_label(), Some(1));
        assert_eq!(s.v_values(), vec![int(1), int(0)]);
    }

    #[test]
    fn augment_breaks_ties_lexicographically() {
        let s = PivotState::augment(&inst(&[&[1, 0], &[0, 1]], &[-3, -3]));
        assert_eq!(s.z_value(), int(3));
        assert_eq!(s.double_label(), Some(1));
    }

    #[test]
    fn single_pivot_reaches_solution() {
        let mut s = PivotState::augment(&inst(&[&[-1]], &[-1]));
        assert_eq!(s.pivot_step(), Step::Solved { entering: Label::Y(0) });
        assert_eq!(s.y_values(), vec![int(1)]);
        assert_eq!(s.z_value(), int(0));
    }

    #[test]
    fn zero_column_is_a_ray() {
        let mut s = PivotState::augment(&inst(&[&[0]], &[-1]));
        assert_eq!(s.pivot_step(), Step::Ray { entering: Label::Y(0) });
        let run = lemke_solve(&inst(&[&[0]], &[-1]), DEFAULT_MAX_ITERATIONS);
        match run.outcome {
            LcpOutcome::SecondaryRay(ray) => {
                assert_eq!(ray.vertex_z, int(1));
                assert_eq!(ray.direction_y, vec![int(1)]);
            }
            other => panic!("expected a ray, got {other:?}"),
        }
    }

    #[test]
    fn solves_and_short_circuits() {
        match lemke_solve(&inst(&[&[-1]], &[-1]), 10).outcome {
            LcpOutcome::Solution(y) => assert_eq!(y, vec![int(1)]),
            other => panic!("{other:?}"),
        }
        let run = lemke_solve(&inst(&[&[2]], &[3]), 10);
        assert_eq!(run.iterations, 0);
        assert!(matches!(run.outcome, LcpOutcome::Solution(ref y) if y == &vec![int(0)]));
    }

    #[test]
    fn iteration_limit_is_reported() {
        let run = lemke_solve(&inst(&[&[-1]], &[-1]), 1);
        assert!(matches!(run.outcome, LcpOutcome::IterationLimit(_)));
    }

    #[test]
    fn trace_lines_have_fixed_format() {
        let mut lines = Vec::new();
        lemke_solve_traced(&inst(&[&[-1]], &[-1]), 10, |e| lines.push(e.to_string()));
        assert_eq!(lines, vec!["step 1: enter z leave v1 z=1", "step 2: enter y1 leave z z=0"]);
    }

    #[test]
    fn degenerate_ties_follow_lexicographic_order() {
        // Two rows give identical ratios for y1; the path must still terminate
        // without revisiting a basis (checked by the debug seen-set).
        let i = inst(&[&[1, 1, 0], &[1, 1, 0], &[-1, -1, 1]], &[-1, -1, -1]);
        let run = lemke_solve(&i, 100);
        if let LcpOutcome::Solution(y) = &run.outcome {
            verify_lcp_solution(&i, y).unwrap();
        }
        assert!(!matches!(run.outcome, LcpOutcome::IterationLimit(_)));
    }

    #[test]
    fn verifier_checks_each_condition() {
        let i = inst(&[&[-1]], &[-1]);
        assert_eq!(verify_lcp_solution(&i, &[int(1)]), Ok(()));
        assert_eq!(verify_lcp_solution(&i, &[int(2)]), Err(LcpViolation::NotComplementary(0)));
        assert_eq!(verify_lcp_solution(&i, &[int(0)]), Err(LcpViolation::Infeasible(0)));
        assert_eq!(
            verify_lcp_solution(&i, &[]),
            Err(LcpViolation::Dimension { expected: 1, got: 0 })
        );
        assert_eq!(verify_lcp_solution(&inst(&[&[2]], &[3]), &[int(0)]), Ok(()));
    }

    #[test]
    fn dump_has_header_and_rows() {
        let d = inst(&[&[1, -2], &[0, 3]], &[-1, 4]).dump();
        assert_eq!(d, "2 2\n1 -2 | -1\n0 3 | 4\n");
    }
}
