//! Market data model: goods, agents with SPLC utilities, firms with SPLC
//! production. Every number is an exact rational.

mod format;
mod validate;

pub(crate) use format::RatStr;
pub use format::{parse_market, parse_rational, rational_string, serialize_market, FormatError};
pub use validate::{validate_market, ValidationReport, Violation};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Exact rational number used throughout the crate.
pub type Rational = BigRational;

/// Shorthand for an integer-valued rational.
pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Shorthand for `num/den`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Length of a segment: a finite amount, or the unbounded tail of the function.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Bound {
    Finite(Rational),
    Unbounded,
}

impl Bound {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Bound::Unbounded)
    }

    /// The finite value; panics on an unbounded segment. Only valid on capped markets.
    pub fn expect_finite(&self) -> &Rational {
        self.finite()
            .expect("segment is unbounded; cap the market before formulation")
    }
}

/// One linear piece of an agent's utility for a single good.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UtilitySegment {
    /// Utility per unit of good.
    pub slope: Rational,
    /// Amount of good covered by this piece.
    pub length: Bound,
}

/// One linear piece of a firm's production function in a single input good.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductionSegment {
    /// Output units per unit of input.
    pub rate: Rational,
    /// Amount of input covered by this piece.
    pub limit: Bound,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Agent {
    pub name: String,
    /// Indexed by good.
    pub endowment: Vec<Rational>,
    /// Indexed by firm.
    pub shares: Vec<Rational>,
    /// Indexed by good; an empty list is the zero function.
    pub utility: Vec<Vec<UtilitySegment>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Firm {
    pub name: String,
    /// Index of the produced good.
    pub produces: usize,
    /// Indexed by good; an empty list means the good is not an input.
    pub inputs: Vec<Vec<ProductionSegment>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Market {
    pub goods: Vec<String>,
    pub agents: Vec<Agent>,
    pub firms: Vec<Firm>,
}

/// Address of an agent's utility segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UtilityRef {
    pub agent: usize,
    pub good: usize,
    pub seg: usize,
}

/// Address of a firm's production segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductionRef {
    pub firm: usize,
    pub good: usize,
    pub seg: usize,
}

impl Agent {
    /// Non-satiated by `good`: the last utility segment is unbounded with positive slope.
    pub fn non_satiated_by(&self, good: usize) -> bool {
        self.utility[good]
            .last()
            .is_some_and(|s| s.length.is_unbounded() && s.slope.is_positive())
    }
}

impl Firm {
    /// Non-satiated by input `good`: the last production segment is unbounded with positive rate.
    pub fn non_satiated_by(&self, good: usize) -> bool {
        self.inputs[good]
            .last()
            .is_some_and(|s| s.limit.is_unbounded() && s.rate.is_positive())
    }
}

impl Market {
    pub fn num_goods(&self) -> usize {
        self.goods.len()
    }

    pub fn good_index(&self, name: &str) -> Option<usize> {
        self.goods.iter().position(|g| g == name)
    }

    /// Σ_i w^i_j.
    pub fn total_endowment(&self, good: usize) -> Rational {
        self.agents
            .iter()
            .fold(Rational::zero(), |acc, a| acc + &a.endowment[good])
    }

    /// Firms whose output is `good`.
    pub fn producers_of(&self, good: usize) -> impl Iterator<Item = usize> + '_ {
        self.firms
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.produces == good)
            .map(|(idx, _)| idx)
    }

    /// Utility segments in canonical order: agent, then good, then segment.
    pub fn utility_segments(&self) -> Vec<UtilityRef> {
        let mut out = Vec::new();
        for (agent, a) in self.agents.iter().enumerate() {
            for (good, segs) in a.utility.iter().enumerate() {
                out.extend((0..segs.len()).map(|seg| UtilityRef { agent, good, seg }));
            }
        }
        out
    }

    /// Production segments in canonical order: firm, then input good, then segment.
    pub fn production_segments(&self) -> Vec<ProductionRef> {
        let mut out = Vec::new();
        for (firm, f) in self.firms.iter().enumerate() {
            for (good, segs) in f.inputs.iter().enumerate() {
                out.extend((0..segs.len()).map(|seg| ProductionRef { firm, good, seg }));
            }
        }
        out
    }

    pub fn utility(&self, r: UtilityRef) -> &UtilitySegment {
        &self.agents[r.agent].utility[r.good][r.seg]
    }

    pub fn production(&self, r: ProductionRef) -> &ProductionSegment {
        &self.firms[r.firm].inputs[r.good][r.seg]
    }

    pub fn is_capped(&self) -> bool {
        self.agents
            .iter()
            .flat_map(|a| a.utility.iter().flatten())
            .all(|s| !s.length.is_unbounded())
            && self
                .firms
                .iter()
                .flat_map(|f| f.inputs.iter().flatten())
                .all(|s| !s.limit.is_unbounded())
    }

    /// An empty agent record sized for this market.
    pub fn blank_agent(&self, name: impl Into<String>) -> Agent {
        Agent {
            name: name.into(),
            endowment: vec![Rational::zero(); self.goods.len()],
            shares: vec![Rational::zero(); self.firms.len()],
            utility: vec![Vec::new(); self.goods.len()],
        }
    }
}

/// Builder used by tests and examples to write markets compactly.
#[derive(Debug, Clone, Default)]
pub struct MarketBuilder {
    goods: Vec<String>,
    agents: Vec<Agent>,
    firms: Vec<Firm>,
}

impl MarketBuilder {
    pub fn new<S: AsRef<str>>(goods: &[S]) -> Self {
        MarketBuilder {
            goods: goods.iter().map(|g| g.as_ref().to_string()).collect(),
            ..Default::default()
        }
    }

    fn good(&self, name: &str) -> usize {
        self.goods
            .iter()
            .position(|g| g == name)
            .unwrap_or_else(|| panic!("unknown good {name}"))
    }

    /// Adds a firm producing `produces`; inputs are added with [`MarketBuilder::input`].
    pub fn firm(mut self, name: &str, produces: &str) -> Self {
        let produces = self.good(produces);
        self.firms.push(Firm {
            name: name.to_string(),
            produces,
            inputs: vec![Vec::new(); self.goods.len()],
        });
        for a in &mut self.agents {
            a.shares.push(Rational::zero());
        }
        self
    }

    /// Appends segments `(rate, Some(limit) | None)` to the last firm's input `good`.
    pub fn input(mut self, good: &str, segs: &[(Rational, Option<Rational>)]) -> Self {
        let g = self.good(good);
        let f = self.firms.last_mut().expect("add a firm first");
        f.inputs[g].extend(segs.iter().map(|(rate, limit)| ProductionSegment {
            rate: rate.clone(),
            limit: limit.clone().map_or(Bound::Unbounded, Bound::Finite),
        }));
        self
    }

    pub fn agent(mut self, name: &str) -> Self {
        self.agents.push(Agent {
            name: name.to_string(),
            endowment: vec![Rational::zero(); self.goods.len()],
            shares: vec![Rational::zero(); self.firms.len()],
            utility: vec![Vec::new(); self.goods.len()],
        });
        self
    }

    pub fn endow(mut self, good: &str, amount: Rational) -> Self {
        let g = self.good(good);
        self.agents.last_mut().expect("add an agent first").endowment[g] = amount;
        self
    }

    pub fn share(mut self, firm: &str, amount: Rational) -> Self {
        let f = self
            .firms
            .iter()
            .position(|f| f.name == firm)
            .unwrap_or_else(|| panic!("unknown firm {firm}"));
        self.agents.last_mut().expect("add an agent first").shares[f] = amount;
        self
    }

    /// Appends segments `(slope, Some(length) | None)` to the last agent's utility for `good`.
    pub fn wants(mut self, good: &str, segs: &[(Rational, Option<Rational>)]) -> Self {
        let g = self.good(good);
        let a = self.agents.last_mut().expect("add an agent first");
        a.utility[g].extend(segs.iter().map(|(slope, len)| UtilitySegment {
            slope: slope.clone(),
            length: len.clone().map_or(Bound::Unbounded, Bound::Finite),
        }));
        self
    }

    pub fn build(self) -> Market {
        Market {
            goods: self.goods,
            agents: self.agents,
            firms: self.firms,
        }
    }
}
