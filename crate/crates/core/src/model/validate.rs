use std::fmt;

use num_traits::{One, Signed, Zero};

use super::{Bound, Market, Rational};
use crate::model::rational_string;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    SlopesNotDecreasing { agent: String, good: String },
    NegativeSlope { agent: String, good: String },
    NegativeLength { agent: String, good: String },
    UtilityUnboundedNotLast { agent: String, good: String },
    RatesNotDecreasing { firm: String, good: String },
    NegativeRate { firm: String, good: String },
    NegativeLimit { firm: String, good: String },
    ProductionUnboundedNotLast { firm: String, good: String },
    OutputIsInput { firm: String, good: String },
    NegativeEndowment { agent: String, good: String },
    NegativeShare { agent: String, firm: String },
    SharesSum { firm: String, sum: Rational },
    EndowmentSum { good: String, sum: Rational },
    UnendowedUnproduced { good: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            SlopesNotDecreasing { agent, good } => {
                write!(f, "slopes not strictly decreasing: agent {agent}, good {good}")
            }
            NegativeSlope { agent, good } => write!(f, "negative slope: agent {agent}, good {good}"),
            NegativeLength { agent, good } => {
                write!(f, "negative segment length: agent {agent}, good {good}")
            }
            UtilityUnboundedNotLast { agent, good } => write!(
                f,
                "unbounded utility segment is not last: agent {agent}, good {good}"
            ),
            RatesNotDecreasing { firm, good } => {
                write!(f, "rates not strictly decreasing: firm {firm}, input {good}")
            }
            NegativeRate { firm, good } => write!(f, "negative rate: firm {firm}, input {good}"),
            NegativeLimit { firm, good } => {
                write!(f, "negative segment limit: firm {firm}, input {good}")
            }
            ProductionUnboundedNotLast { firm, good } => write!(
                f,
                "unbounded production segment is not last: firm {firm}, input {good}"
            ),
            OutputIsInput { firm, good } => {
                write!(f, "firm {firm} uses its own output {good} as input")
            }
            NegativeEndowment { agent, good } => {
                write!(f, "negative endowment: agent {agent}, good {good}")
            }
            NegativeShare { agent, firm } => write!(f, "negative share: agent {agent}, firm {firm}"),
            SharesSum { firm, sum } => write!(
                f,
                "shares of firm {firm} do not sum to 1 (sum {})",
                rational_string(sum)
            ),
            EndowmentSum { good, sum } => write!(
                f,
                "endowment of good {good} does not sum to 1 (sum {})",
                rational_string(sum)
            ),
            UnendowedUnproduced { good } => {
                write!(f, "good {good} has zero endowment and no producer")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn strictly_decreasing<'a>(mut it: impl Iterator<Item = &'a Rational>) -> bool {
    let Some(mut prev) = it.next() else {
        return true;
    };
    for v in it {
        if v >= prev {
            return false;
        }
        prev = v;
    }
    true
}

fn unbounded_not_last<'a>(bounds: impl ExactSizeIterator<Item = &'a Bound>) -> bool {
    let len = bounds.len();
    bounds
        .enumerate()
        .any(|(k, b)| b.is_unbounded() && k + 1 != len)
}

/// Checks every structural invariant of the model and lists all violations.
pub fn validate_market(m: &Market) -> ValidationReport {
    let mut violations = Vec::new();
    let good = |j: usize| m.goods[j].clone();

    for a in &m.agents {
        for (j, segs) in a.utility.iter().enumerate() {
            let agent = || a.name.clone();
            if !strictly_decreasing(segs.iter().map(|s| &s.slope)) {
                violations.push(Violation::SlopesNotDecreasing { agent: agent(), good: good(j) });
            }
            if segs.iter().any(|s| s.slope.is_negative()) {
                violations.push(Violation::NegativeSlope { agent: agent(), good: good(j) });
            }
            if segs
                .iter()
                .any(|s| s.length.finite().is_some_and(|l| l.is_negative()))
            {
                violations.push(Violation::NegativeLength { agent: agent(), good: good(j) });
            }
            if unbounded_not_last(segs.iter().map(|s| &s.length)) {
                violations.push(Violation::UtilityUnboundedNotLast { agent: agent(), good: good(j) });
            }
        }
        for (j, w) in a.endowment.iter().enumerate() {
            if w.is_negative() {
                violations.push(Violation::NegativeEndowment { agent: a.name.clone(), good: good(j) });
            }
        }
        for (f, t) in a.shares.iter().enumerate() {
            if t.is_negative() {
                violations.push(Violation::NegativeShare {
                    agent: a.name.clone(),
                    firm: m.firms[f].name.clone(),
                });
            }
        }
    }

    for f in &m.firms {
        let firm = || f.name.clone();
        if !f.inputs[f.produces].is_empty() {
            violations.push(Violation::OutputIsInput { firm: firm(), good: good(f.produces) });
        }
        for (j, segs) in f.inputs.iter().enumerate() {
            if !strictly_decreasing(segs.iter().map(|s| &s.rate)) {
                violations.push(Violation::RatesNotDecreasing { firm: firm(), good: good(j) });
            }
            if segs.iter().any(|s| s.rate.is_negative()) {
                violations.push(Violation::NegativeRate { firm: firm(), good: good(j) });
            }
            if segs
                .iter()
                .any(|s| s.limit.finite().is_some_and(|l| l.is_negative()))
            {
                violations.push(Violation::NegativeLimit { firm: firm(), good: good(j) });
            }
            if unbounded_not_last(segs.iter().map(|s| &s.limit)) {
                violations.push(Violation::ProductionUnboundedNotLast { firm: firm(), good: good(j) });
            }
        }
    }

    for (fi, f) in m.firms.iter().enumerate() {
        let sum = m
            .agents
            .iter()
            .fold(Rational::zero(), |acc, a| acc + &a.shares[fi]);
        if !sum.is_one() {
            violations.push(Violation::SharesSum { firm: f.name.clone(), sum });
        }
    }

    for j in 0..m.goods.len() {
        let sum = m.total_endowment(j);
        if sum.is_zero() {
            if m.producers_of(j).next().is_none() {
                violations.push(Violation::UnendowedUnproduced { good: good(j) });
            }
        } else if !sum.is_one() {
            violations.push(Violation::EndowmentSum { good: good(j), sum });
        }
    }

    ValidationReport { violations }
}
