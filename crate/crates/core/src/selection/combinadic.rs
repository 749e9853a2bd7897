//! Counting, ranking and unranking of `K`-subsets in lexicographic order.

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{IsacError, Result};

/// Exact `C(n, k)`.
pub fn count_configs(n: usize, k: usize) -> Result<BigUint> {
    if k > n {
        return Err(IsacError::Domain(format!("cannot choose K = {k} of N = {n}")));
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    Ok(acc)
}

/// `C(n, k)` in `u128`, or `None` on overflow. Zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i + 1) as u128,
            None => return u128::try_from(count_configs(n, k).ok()?).ok(),
        }
    }
    Some(acc)
}

fn binomial_or_err(n: usize, k: usize) -> Result<u128> {
    binomial(n, k).ok_or_else(|| IsacError::Domain(format!("C({n}, {k}) does not fit in 128 bits")))
}

/// The `p`-th (1-based) `k`-subset of `{0, .., n-1}` in lexicographic order
/// of sorted index lists.
pub fn unrank_combination(p: u128, n: usize, k: usize) -> Result<Vec<usize>> {
    let total = binomial_or_err(n, k)?;
    if p == 0 || p > total {
        return Err(IsacError::Index(format!("rank {p} outside 1..={total} for C({n}, {k})")));
    }
    let mut rem = p - 1;
    let mut out = Vec::with_capacity(k);
    let mut c = 0;
    for i in 0..k {
        loop {
            let block = binomial_or_err(n - c - 1, k - i - 1)?;
            if rem < block {
                break;
            }
            rem -= block;
            c += 1;
        }
        out.push(c);
        c += 1;
    }
    Ok(out)
}

/// Inverse of [`unrank_combination`]. `indices` must be strictly increasing
/// and below `n`.
pub fn rank_combination(indices: &[usize], n: usize, k: usize) -> Result<u128> {
    if indices.len() != k {
        return Err(IsacError::Index(format!("expected {k} indices, got {}", indices.len())));
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) || indices.last().is_some_and(|&x| x >= n) {
        return Err(IsacError::Index(format!("{indices:?} is not a sorted subset of 0..{n}")));
    }
    let mut rank: u128 = 0;
    let mut start = 0;
    for (i, &x) in indices.iter().enumerate() {
        for c in start..x {
            rank += binomial_or_err(n - c - 1, k - i - 1)?;
        }
        start = x + 1;
    }
    Ok(rank + 1)
}
