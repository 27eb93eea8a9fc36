//! Canonical market document: JSON whose numbers are all rational strings.

use std::fmt;

use indexmap::IndexMap;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use super::{Agent, Bound, Firm, Market, ProductionSegment, Rational, UtilitySegment};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("malformed rational {0:?}")]
    MalformedRational(String),
    #[error("unknown good {0:?}")]
    UnknownGood(String),
    #[error("unknown firm {0:?}")]
    UnknownFirm(String),
    #[error("duplicate name {0:?}")]
    Duplicate(String),
    #[error("unknown agent {0:?}")]
    UnknownAgent(String),
    #[error("document does not match the market: {0}")]
    Shape(String),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// Parses `"p/q"` or `"p"` with optional leading minus. Anything float-like is rejected.
pub fn parse_rational(text: &str) -> Result<Rational, FormatError> {
    let bad = || FormatError::MalformedRational(text.to_string());
    let int = |s: &str| -> Result<BigInt, FormatError> {
        let digits = s.strip_prefix('-').unwrap_or(s);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        s.parse::<BigInt>().map_err(|_| bad())
    };
    match text.split_once('/') {
        None => Ok(Rational::from_integer(int(text)?)),
        Some((num, den)) => {
            let den = int(den)?;
            if den.is_zero() || den.is_negative() {
                return Err(bad());
            }
            Ok(Rational::new(int(num)?, den))
        }
    }
}

pub fn rational_string(v: &Rational) -> String {
    if v.denom() == &BigInt::from(1) {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// A rational carried as a JSON string; JSON numbers are refused.
#[derive(Debug, Clone)]
pub(crate) struct RatStr(pub Rational);

impl<'de> Deserialize<'de> for RatStr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = RatStr;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational string such as \"3\" or \"1/2\"")
            }
            fn visit_str<E: de::Error>(self, s: &str) -> Result<RatStr, E> {
                parse_rational(s).map(RatStr).map_err(E::custom)
            }
        }
        d.deserialize_str(V)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UtilitySegDoc {
    slope: RatStr,
    length: Option<RatStr>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductionSegDoc {
    rate: RatStr,
    limit: Option<RatStr>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    name: Option<String>,
    #[serde(default)]
    endowment: IndexMap<String, RatStr>,
    #[serde(default)]
    shares: IndexMap<String, RatStr>,
    #[serde(default)]
    utility: IndexMap<String, Vec<UtilitySegDoc>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FirmDoc {
    name: Option<String>,
    produces: String,
    #[serde(default)]
    inputs: IndexMap<String, Vec<ProductionSegDoc>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketDoc {
    goods: Vec<String>,
    #[serde(default)]
    agents: Vec<AgentDoc>,
    #[serde(default)]
    firms: Vec<FirmDoc>,
}

fn bound(v: Option<RatStr>) -> Bound {
    v.map_or(Bound::Unbounded, |r| Bound::Finite(r.0))
}

fn check_unique<'a>(names: impl Iterator<Item = &'a String>) -> Result<(), FormatError> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(FormatError::Duplicate(n.clone()));
        }
    }
    Ok(())
}

/// Reads a market document. Structural validation is left to
/// [`validate_market`](super::validate_market).
pub fn parse_market(text: &[u8]) -> Result<Market, FormatError> {
    let doc: MarketDoc = serde_json::from_slice(text)?;
    check_unique(doc.goods.iter())?;
    let n = doc.goods.len();
    let good = |name: &str| {
        doc.goods
            .iter()
            .position(|g| g == name)
            .ok_or_else(|| FormatError::UnknownGood(name.to_string()))
    };

    let firm_names: Vec<String> = doc
        .firms
        .iter()
        .enumerate()
        .map(|(i, f)| f.name.clone().unwrap_or_else(|| format!("f{}", i + 1)))
        .collect();
    check_unique(firm_names.iter())?;

    let mut firms = Vec::with_capacity(doc.firms.len());
    for (fdoc, name) in doc.firms.into_iter().zip(&firm_names) {
        let mut inputs = vec![Vec::new(); n];
        for (g, segs) in fdoc.inputs {
            inputs[good(&g)?] = segs
                .into_iter()
                .map(|s| ProductionSegment {
                    rate: s.rate.0,
                    limit: bound(s.limit),
                })
                .collect();
        }
        firms.push(Firm {
            name: name.clone(),
            produces: good(&fdoc.produces)?,
            inputs,
        });
    }

    let mut agents = Vec::with_capacity(doc.agents.len());
    for (i, adoc) in doc.agents.into_iter().enumerate() {
        let mut agent = Agent {
            name: adoc.name.unwrap_or_else(|| format!("a{}", i + 1)),
            endowment: vec![Rational::zero(); n],
            shares: vec![Rational::zero(); firm_names.len()],
            utility: vec![Vec::new(); n],
        };
        for (g, w) in adoc.endowment {
            agent.endowment[good(&g)?] = w.0;
        }
        for (f, theta) in adoc.shares {
            let idx = firm_names
                .iter()
                .position(|x| *x == f)
                .ok_or(FormatError::UnknownFirm(f))?;
            agent.shares[idx] = theta.0;
        }
        for (g, segs) in adoc.utility {
            agent.utility[good(&g)?] = segs
                .into_iter()
                .map(|s| UtilitySegment {
                    slope: s.slope.0,
                    length: bound(s.length),
                })
                .collect();
        }
        agents.push(agent);
    }
    check_unique(agents.iter().map(|a| &a.name))?;

    Ok(Market {
        goods: doc.goods,
        agents,
        firms,
    })
}

fn market_value(m: &Market) -> Value {
    let agents: Vec<Value> = m
        .agents
        .iter()
        .map(|a| {
            let mut endowment = Map::new();
            for (g, w) in m.goods.iter().zip(&a.endowment) {
                if !w.is_zero() {
                    endowment.insert(g.clone(), rational_string(w).into());
                }
            }
            let mut shares = Map::new();
            for (f, t) in m.firms.iter().zip(&a.shares) {
                if !t.is_zero() {
                    shares.insert(f.name.clone(), rational_string(t).into());
                }
            }
            let mut utility = Map::new();
            for (g, segs) in m.goods.iter().zip(&a.utility) {
                if segs.is_empty() {
                    continue;
                }
                let segs: Vec<Value> = segs
                    .iter()
                    .map(|s| {
                        let mut o = Map::new();
                        o.insert("slope".into(), rational_string(&s.slope).into());
                        if let Bound::Finite(l) = &s.length {
                            o.insert("length".into(), rational_string(l).into());
                        }
                        Value::Object(o)
                    })
                    .collect();
                utility.insert(g.clone(), Value::Array(segs));
            }
            json!({
                "name": a.name,
                "endowment": endowment,
                "shares": shares,
                "utility": utility,
            })
        })
        .collect();
    let firms: Vec<Value> = m
        .firms
        .iter()
        .map(|f| {
            let mut inputs = Map::new();
            for (g, segs) in m.goods.iter().zip(&f.inputs) {
                if segs.is_empty() {
                    continue;
                }
                let segs: Vec<Value> = segs
                    .iter()
                    .map(|s| {
                        let mut o = Map::new();
                        o.insert("rate".into(), rational_string(&s.rate).into());
                        if let Bound::Finite(l) = &s.limit {
                            o.insert("limit".into(), rational_string(l).into());
                        }
                        Value::Object(o)
                    })
                    .collect();
                inputs.insert(g.clone(), Value::Array(segs));
            }
            json!({
                "name": f.name,
                "produces": m.goods[f.produces],
                "inputs": inputs,
            })
        })
        .collect();
    json!({ "goods": m.goods, "agents": agents, "firms": firms })
}

/// Writes the canonical document (pretty-printed, trailing newline).
pub fn serialize_market(m: &Market) -> String {
    let mut s = serde_json::to_string_pretty(&market_value(m)).expect("market serializes");
    s.push('\n');
    s
}
