use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Agent, Bound, Firm, Market, ProductionSegment, Rational, UtilitySegment};

/// Draws are `k / 2^20` for uniform `k`.
const DRAW_BITS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    pub agents: usize,
    pub goods: usize,
    pub firms: usize,
    /// Segments per utility and per production function.
    pub segs: usize,
    pub seed: u64,
}

impl GenParams {
    pub fn new(agents: usize, goods: usize, firms: usize, segs: usize, seed: u64) -> Self {
        GenParams { agents, goods, firms, segs, seed }
    }

    /// `(agents * goods + firms * (goods - 1)) * segs`.
    pub fn total_segments(&self) -> usize {
        (self.agents * self.goods + self.firms * self.goods.saturating_sub(1)) * self.segs
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GenError {
    #[error("firm a produces good a, so firms ({firms}) cannot exceed goods ({goods})")]
    TooManyFirms { firms: usize, goods: usize },
    #[error("need at least one agent, one good and one segment per function")]
    Empty,
}

struct Draws(ChaCha8Rng);

impl Draws {
    /// Uniform dyadic in `(0, 1)`; zero is redrawn.
    fn positive(&mut self) -> Rational {
        loop {
            let k: u32 = self.0.gen_range(0..1u32 << DRAW_BITS);
            if k != 0 {
                return Rational::new(BigInt::from(k), BigInt::from(1u32 << DRAW_BITS));
            }
        }
    }

    /// `count` distinct draws in strictly decreasing order; ties are redrawn.
    fn decreasing(&mut self, count: usize) -> Vec<Rational> {
        let mut v: Vec<Rational> = Vec::with_capacity(count);
        while v.len() < count {
            let d = self.positive();
            if !v.contains(&d) {
                v.push(d);
            }
        }
        v.sort_by(|a, b| b.cmp(a));
        v
    }

    /// Uniform in `(0, scale)`.
    fn scaled(&mut self, scale: &Rational) -> Rational {
        self.positive() * scale
    }
}

fn normalize(values: &mut [Rational]) {
    let total = values.iter().fold(Rational::zero(), |acc, v| acc + v);
    for v in values {
        *v /= &total;
    }
}

/// Random market in the style of the benchmark: every agent owns and wants
/// every good, firm `a` makes good `a` from all other goods, rates stay below
/// one, and every function's last segment is unbounded.
pub fn generate_random_market(p: &GenParams) -> Result<Market, GenError> {
    if p.firms > p.goods {
        return Err(GenError::TooManyFirms { firms: p.firms, goods: p.goods });
    }
    if p.agents == 0 || p.goods == 0 || p.segs == 0 {
        return Err(GenError::Empty);
    }
    let mut rng = Draws(ChaCha8Rng::seed_from_u64(p.seed));
    let span = Rational::new(BigInt::from(10), BigInt::from(p.segs));
    let goods: Vec<String> = (1..=p.goods).map(|j| format!("g{j}")).collect();

    let mut agents = Vec::with_capacity(p.agents);
    for i in 1..=p.agents {
        let endowment: Vec<Rational> = (0..p.goods).map(|_| rng.positive()).collect();
        let shares: Vec<Rational> = (0..p.firms).map(|_| rng.positive()).collect();
        let utility = (0..p.goods)
            .map(|_| {
                let slopes = rng.decreasing(p.segs);
                let last = slopes.len() - 1;
                slopes
                    .into_iter()
                    .enumerate()
                    .map(|(k, slope)| UtilitySegment {
                        slope,
                        length: if k == last { Bound::Unbounded } else { Bound::Finite(rng.scaled(&span)) },
                    })
                    .collect()
            })
            .collect();
        agents.push(Agent { name: format!("a{i}"), endowment, shares, utility });
    }

    let mut firms = Vec::with_capacity(p.firms);
    for f in 0..p.firms {
        let inputs = (0..p.goods)
            .map(|j| {
                if j == f {
                    return Vec::new();
                }
                let rates = rng.decreasing(p.segs);
                let last = rates.len() - 1;
                rates
                    .into_iter()
                    .enumerate()
                    .map(|(k, rate)| ProductionSegment {
                        rate,
                        limit: if k == last { Bound::Unbounded } else { Bound::Finite(rng.scaled(&span)) },
                    })
                    .collect()
            })
            .collect();
        firms.push(Firm { name: format!("f{}", f + 1), produces: f, inputs });
    }

    for j in 0..p.goods {
        let mut col: Vec<Rational> = agents.iter().map(|a| a.endowment[j].clone()).collect();
        normalize(&mut col);
        for (a, v) in agents.iter_mut().zip(col) {
            a.endowment[j] = v;
        }
    }
    for f in 0..p.firms {
        let mut col: Vec<Rational> = agents.iter().map(|a| a.shares[f].clone()).collect();
        normalize(&mut col);
        for (a, v) in agents.iter_mut().zip(col) {
            a.shares[f] = v;
        }
    }
    Ok(Market { goods, agents, firms })
}
