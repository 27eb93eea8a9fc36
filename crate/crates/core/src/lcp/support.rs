//! Brute-force LCP solving by enumerating complementary supports. Shares no
//! code with the pivoting engine.

use num_traits::{Signed, Zero};

use super::LcpInstance;
use crate::model::Rational;

/// Solves `a x = b` by Gaussian elimination; `None` when `a` is singular.
pub fn solve_exact(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let (upper, lower) = a.split_at_mut(r);
            let (src, dst) = (&upper[col], &mut lower[0]);
            let f = &dst[col] / &src[col];
            for (d, s) in dst[col..].iter_mut().zip(&src[col..]) {
                if !s.is_zero() {
                    *d -= &f * s;
                }
            }
            let delta = &f * &b[col];
            b[r] -= delta;
        }
    }
    let mut x = vec![Rational::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for k in r + 1..n {
            if !a[r][k].is_zero() {
                acc -= &a[r][k] * &x[k];
            }
        }
        x[r] = acc / &a[r][r];
    }
    Some(x)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSolution {
    /// `true` where `y_i` is basic (row `i` tight).
    pub support: Vec<bool>,
    pub y: Vec<Rational>,
    /// Basic variables (support `y_i` or off-support slacks) that sit at zero.
    pub zero_basics: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SupportEnumeration {
    pub solutions: Vec<SupportSolution>,
    /// Supports whose tight system was singular and therefore skipped.
    pub singular: usize,
}

/// Tries every complementary support `S`: solve `M_SS y_S = q_S`, keep the
/// result when `y_S >= 0` and `q - M y >= 0` off the support.
pub fn enumerate_supports(inst: &LcpInstance) -> SupportEnumeration {
    let n = inst.dim();
    assert!(n < usize::BITS as usize, "support enumeration is exponential in the dimension");
    let mut out = SupportEnumeration::default();
    for mask in 0u64..(1u64 << n) {
        let idx: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let a: Vec<Vec<Rational>> = idx
            .iter()
            .map(|&r| idx.iter().map(|&c| inst.m[r][c].clone()).collect())
            .collect();
        let b: Vec<Rational> = idx.iter().map(|&r| inst.q[r].clone()).collect();
        let Some(ys) = solve_exact(a, b) else {
            out.singular += 1;
            continue;
        };
        if ys.iter().any(|v| v.is_negative()) {
            continue;
        }
        let mut y = vec![Rational::zero(); n];
        for (&i, v) in idx.iter().zip(ys) {
            y[i] = v;
        }
        let slack = inst.slack(&y);
        let support: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        if (0..n).any(|i| !support[i] && slack[i].is_negative()) {
            continue;
        }
        let zero_basics = (0..n)
            .filter(|&i| if support[i] { y[i].is_zero() } else { slack[i].is_zero() })
            .count();
        out.solutions.push(SupportSolution { support, y, zero_basics });
    }
    out
}
