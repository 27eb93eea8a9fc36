use crate::analysis::{compute_price_floor, compute_production_bound, FloorError};
use crate::equilibrium::{extract_equilibrium, verify_equilibrium, Equilibrium};
use crate::formulation::{build_nhad_lcp, FormulationError};
use crate::lcp::support::enumerate_supports;
use crate::model::{validate_market, Market, Rational};

/// Largest system the brute force accepts: `2^16` supports.
pub const MAX_ENUMERATION_DIM: usize = 16;

#[derive(Debug, Clone)]
pub struct Enumeration {
    /// Distinct equilibria, one per normalized price vector, in discovery order.
    pub equilibria: Vec<Equilibrium>,
    pub dimension: usize,
    /// Some solution vertex has more than the one zero basic variable every
    /// solution carries.
    pub degenerate: bool,
    /// Supports skipped because their tight system is singular.
    pub singular: usize,
    /// Complementary solutions whose extracted equilibrium failed verification.
    pub rejected: usize,
}

impl Enumeration {
    pub fn count(&self) -> usize {
        self.equilibria.len()
    }

    pub fn normalized_prices(&self) -> Vec<Vec<Rational>> {
        self.equilibria.iter().map(Equilibrium::normalized_prices).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EnumerateError {
    #[error("market is invalid")]
    Invalid,
    #[error("system has {0} variables; brute force is limited to {MAX_ENUMERATION_DIM}")]
    TooLarge(usize),
    #[error(transparent)]
    Floor(#[from] FloorError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
}

/// Every equilibrium of a small market, up to scaling, from all complementary
/// supports of the un-augmented system.
pub fn enumerate_equilibria(m: &Market) -> Result<Enumeration, EnumerateError> {
    if !validate_market(m).passed() {
        return Err(EnumerateError::Invalid);
    }
    let capped = compute_production_bound(m).capped;
    let floor = compute_price_floor(&capped)?;
    let lcp = build_nhad_lcp(&capped, &floor)?;
    let dimension = lcp.index.len();
    if dimension > MAX_ENUMERATION_DIM {
        return Err(EnumerateError::TooLarge(dimension));
    }
    let supports = enumerate_supports(&lcp.instance);
    let mut out = Enumeration {
        equilibria: Vec::new(),
        dimension,
        degenerate: false,
        singular: supports.singular,
        rejected: 0,
    };
    let mut seen: Vec<Vec<Rational>> = Vec::new();
    for s in supports.solutions {
        out.degenerate |= s.zero_basics > 1;
        let e = extract_equilibrium(&capped, &lcp, &s.y);
        if !verify_equilibrium(m, &e).passed() {
            out.rejected += 1;
            continue;
        }
        let key = e.normalized_prices();
        if !seen.contains(&key) {
            seen.push(key);
            out.equilibria.push(e);
        }
    }
    Ok(out)
}
