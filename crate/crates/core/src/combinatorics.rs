//! Exact integer formulas: binomials, determinantal degrees, ED degrees.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// Degree of the variety of m×n matrices of rank ≤ r:
/// `∏_{i=0}^{n−r−1} (m+i)!·i! / ((r+i)!·(m−r+i)!)`, evaluated exactly.
pub fn determinantal_degree(m: usize, n: usize, r: usize) -> BigUint {
    let (m, n) = if m <= n { (n, m) } else { (m, n) };
    if r >= n {
        return BigUint::one();
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..n - r {
        num *= factorial(m + i) * factorial(i);
        den *= factorial(r + i) * factorial(m - r + i);
    }
    let (q, rem) = num.div_rem(&den);
    debug_assert!(rem.is_zero());
    q
}

/// Closed-form ED / squared-error degree families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdKind {
    Determinantal { m: usize, n: usize, r: usize },
    Invariant { m: usize, k: usize, r: usize },
    RealizationBlock { d: usize, r: usize },
}

pub fn ed_degree(kind: EdKind) -> BigUint {
    match kind {
        EdKind::Determinantal { m, n, r } => binomial(m.min(n), r.min(m.min(n))),
        EdKind::Invariant { m, k, r } => binomial(m.min(k), r.min(k).min(m)),
        EdKind::RealizationBlock { d, r } => binomial(d, r.min(d)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(3, 4), BigUint::zero());
        assert_eq!(binomial(60, 30).to_string(), "118264581564861424");
    }

    #[test]
    fn determinantal_degrees() {
        assert_eq!(determinantal_degree(2, 3, 1), BigUint::from(3u32));
        assert_eq!(determinantal_degree(3, 2, 1), BigUint::from(3u32));
        assert_eq!(determinantal_degree(4, 4, 4), BigUint::one());
        for n in 2..7 {
            // determinant hypersurface
            assert_eq!(determinantal_degree(n, n, n - 1), BigUint::from(n));
        }
        // rank-one 3×3 matrices: the Segre P²×P² has degree 6
        assert_eq!(determinantal_degree(3, 3, 1), BigUint::from(6u32));
    }

    #[test]
    fn ed_degree_examples() {
        assert_eq!(ed_degree(EdKind::Determinantal { m: 2, n: 2, r: 1 }), BigUint::from(2u32));
        assert_eq!(ed_degree(EdKind::Determinantal { m: 3, n: 5, r: 3 }), BigUint::one());
        assert_eq!(ed_degree(EdKind::Invariant { m: 3, k: 5, r: 2 }), BigUint::from(3u32));
        assert_eq!(ed_degree(EdKind::RealizationBlock { d: 4, r: 2 }), BigUint::from(6u32));
    }
}
