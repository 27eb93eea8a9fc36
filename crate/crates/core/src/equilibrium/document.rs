//! Equilibrium document: names from the market, every number a rational string.

use indexmap::IndexMap;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use super::Equilibrium;
use crate::model::{rational_string, FormatError, Market, RatStr, Rational};

fn amounts(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(|x| Value::String(rational_string(x))).collect())
}

/// Per-good segment lists, only for goods where the owner has segments.
fn per_good(m: &Market, lists: &[Vec<Rational>], shape: impl Fn(usize) -> usize) -> Value {
    let mut obj = Map::new();
    for (j, v) in lists.iter().enumerate() {
        if shape(j) > 0 {
            obj.insert(m.goods[j].clone(), amounts(v));
        }
    }
    Value::Object(obj)
}

pub fn equilibrium_to_json(m: &Market, e: &Equilibrium) -> Value {
    let prices: Map<String, Value> = m
        .goods
        .iter()
        .zip(&e.prices)
        .map(|(g, p)| (g.clone(), Value::String(rational_string(p))))
        .collect();
    let agents: Map<String, Value> = m
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| (a.name.clone(), per_good(m, &e.agent_alloc[i], |j| a.utility[j].len())))
        .collect();
    let firms: Map<String, Value> = m
        .firms
        .iter()
        .enumerate()
        .map(|(f, firm)| {
            let shape = |j: usize| firm.inputs[j].len();
            (
                firm.name.clone(),
                json!({
                    "raw": per_good(m, &e.firm_raw[f], shape),
                    "out": per_good(m, &e.firm_out[f], shape),
                    "profit": rational_string(&e.profits[f]),
                }),
            )
        })
        .collect();
    json!({
        "prices": prices,
        "agents": agents,
        "firms": firms,
        "scaleNote": e.scale_note.iter().map(|&j| m.goods[j].clone()).collect::<Vec<_>>(),
    })
}

pub fn serialize_equilibrium(m: &Market, e: &Equilibrium) -> String {
    let mut s = serde_json::to_string_pretty(&equilibrium_to_json(m, e)).expect("serializable");
    s.push('\n');
    s
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanDoc {
    raw: IndexMap<String, Vec<RatStr>>,
    out: IndexMap<String, Vec<RatStr>>,
    profit: RatStr,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EquilibriumDoc {
    prices: IndexMap<String, RatStr>,
    #[serde(default)]
    agents: IndexMap<String, IndexMap<String, Vec<RatStr>>>,
    #[serde(default)]
    firms: IndexMap<String, PlanDoc>,
    #[serde(default, rename = "scaleNote")]
    scale_note: Vec<String>,
}

fn good_index(m: &Market, name: &str) -> Result<usize, FormatError> {
    m.good_index(name).ok_or_else(|| FormatError::UnknownGood(name.to_string()))
}

/// Fills `[good][segment]` lists; goods without an entry get zeros.
fn segment_lists(
    m: &Market,
    owner: &str,
    doc: IndexMap<String, Vec<RatStr>>,
    shape: impl Fn(usize) -> usize,
) -> Result<Vec<Vec<Rational>>, FormatError> {
    let mut out: Vec<Vec<Rational>> = (0..m.num_goods())
        .map(|j| vec![Rational::default(); shape(j)])
        .collect();
    for (good, values) in doc {
        let j = good_index(m, &good)?;
        if values.len() != shape(j) {
            return Err(FormatError::Shape(format!(
                "{owner} has {} segments on {good}, document lists {}",
                shape(j),
                values.len()
            )));
        }
        out[j] = values.into_iter().map(|v| v.0).collect();
    }
    Ok(out)
}

pub fn parse_equilibrium(m: &Market, text: &[u8]) -> Result<Equilibrium, FormatError> {
    let doc: EquilibriumDoc = serde_json::from_slice(text)?;

    let mut prices = vec![None; m.num_goods()];
    for (good, p) in doc.prices {
        prices[good_index(m, &good)?] = Some(p.0);
    }
    let prices = prices
        .into_iter()
        .enumerate()
        .map(|(j, p)| p.ok_or_else(|| FormatError::Shape(format!("no price for {}", m.goods[j]))))
        .collect::<Result<Vec<_>, _>>()?;

    let mut agent_docs = doc.agents;
    for name in agent_docs.keys() {
        if !m.agents.iter().any(|a| &a.name == name) {
            return Err(FormatError::UnknownAgent(name.clone()));
        }
    }
    let agent_alloc = m
        .agents
        .iter()
        .map(|a| {
            let lists = agent_docs.shift_remove(&a.name).unwrap_or_default();
            segment_lists(m, &a.name, lists, |j| a.utility[j].len())
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut firm_docs = doc.firms;
    for name in firm_docs.keys() {
        if !m.firms.iter().any(|f| &f.name == name) {
            return Err(FormatError::UnknownFirm(name.clone()));
        }
    }
    let mut firm_raw = Vec::new();
    let mut firm_out = Vec::new();
    let mut profits = Vec::new();
    for f in &m.firms {
        let plan = firm_docs
            .shift_remove(&f.name)
            .ok_or_else(|| FormatError::Shape(format!("no plan for firm {}", f.name)))?;
        firm_raw.push(segment_lists(m, &f.name, plan.raw, |j| f.inputs[j].len())?);
        firm_out.push(segment_lists(m, &f.name, plan.out, |j| f.inputs[j].len())?);
        profits.push(plan.profit.0);
    }

    let scale_note = doc
        .scale_note
        .iter()
        .map(|g| good_index(m, g))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Equilibrium { prices, agent_alloc, firm_raw, firm_out, profits, scale_note })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::m1;
    use crate::model::{int, ratio};

    fn sample() -> Equilibrium {
        Equilibrium {
            prices: vec![ratio(27, 4), ratio(27, 8)],
            agent_alloc: vec![vec![vec![], vec![ratio(5, 2)]], vec![vec![ratio(1, 2)], vec![]]],
            firm_raw: vec![vec![vec![ratio(1, 2), int(0)], vec![]]],
            firm_out: vec![vec![vec![ratio(3, 2), int(0)], vec![]]],
            profits: vec![ratio(27, 16)],
            scale_note: vec![0],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = m1();
        let text = serialize_equilibrium(&m, &sample());
        assert_eq!(parse_equilibrium(&m, text.as_bytes()).unwrap(), sample());
        let again = serialize_equilibrium(&m, &parse_equilibrium(&m, text.as_bytes()).unwrap());
        assert_eq!(text, again);
    }

    #[test]
    fn document_shape() {
        let v = equilibrium_to_json(&m1(), &sample());
        assert_eq!(v["prices"]["g2"], "27/8");
        assert_eq!(v["firms"]["f1"]["raw"]["g1"], json!(["1/2", "0"]));
        assert_eq!(v["firms"]["f1"]["profit"], "27/16");
        assert_eq!(v["scaleNote"], json!(["g1"]));
    }

    #[test]
    fn wrong_segment_count_is_rejected() {
        let m = m1();
        let mut v = equilibrium_to_json(&m, &sample());
        v["firms"]["f1"]["raw"]["g1"] = json!(["1/2"]);
        let err = parse_equilibrium(&m, v.to_string().as_bytes()).unwrap_err();
        assert!(matches!(err, FormatError::Shape(_)));
    }

    #[test]
    fn unknown_agent_is_rejected() {
        let m = m1();
        let mut v = equilibrium_to_json(&m, &sample());
        v["agents"]["a9"] = json!({});
        assert!(matches!(
            parse_equilibrium(&m, v.to_string().as_bytes()).unwrap_err(),
            FormatError::UnknownAgent(_)
        ));
    }
}
