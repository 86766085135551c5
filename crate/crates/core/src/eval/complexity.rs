//! Exact operation-count models for the three FDE methods.

use num_bigint::BigUint;

pub const DEFAULT_K: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityRow {
    pub m: u32,
    pub f: u32,
    pub k: u32,
    pub edm: BigUint,
    pub residual: BigUint,
    pub ss: BigUint,
}

fn cube(x: u32) -> BigUint {
    BigUint::from(x).pow(3)
}

/// `C(n, r)` in exact arithmetic.
pub fn binomial(n: u32, r: u32) -> BigUint {
    if r > n {
        return BigUint::ZERO;
    }
    let r = r.min(n - r);
    let mut c = BigUint::from(1u32);
    for i in 0..r {
        c = c * (n - i) / (i + 1);
    }
    c
}

/// `Σ_{a=0}^{f} (m+1−a)³`
pub fn edm_cost(m: u32, f: u32) -> BigUint {
    (0..=f).map(|a| cube(m + 1 - a)).sum()
}

/// `Σ_{a=0}^{f} k (m−a)³`
pub fn residual_cost(m: u32, f: u32, k: u32) -> BigUint {
    (0..=f).map(|a| cube(m - a) * k).sum()
}

/// `m³(1 + Σ_{a=1}^{f} C(m,a)) + (m−1)³(1 + Σ_{a=1}^{f−1} C(m−1,a))`
pub fn ss_cost(m: u32, f: u32) -> BigUint {
    let first: BigUint = (1..=f).map(|a| binomial(m, a)).sum::<BigUint>() + 1u32;
    let second: BigUint = (1..f).map(|a| binomial(m - 1, a)).sum::<BigUint>() + 1u32;
    cube(m) * first + cube(m - 1) * second
}

/// Rows for every `m` in the range; requires `m > f` and `2 <= k <= 21`.
pub fn complexity_curves(ms: impl IntoIterator<Item = u32>, f: u32, k: u32) -> Result<Vec<ComplexityRow>, String> {
    if !(2..=21).contains(&k) {
        return Err(format!("k must lie in [2, 21], got {k}"));
    }
    ms.into_iter()
        .map(|m| {
            if m <= f {
                return Err(format!("m = {m} must exceed f = {f}"));
            }
            Ok(ComplexityRow {
                m,
                f,
                k,
                edm: edm_cost(m, f),
                residual: residual_cost(m, f, k),
                ss: ss_cost(m, f),
            })
        })
        .collect()
}
