//! Factorials, binomials and weak compositions over big integers.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::One;

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, k| acc * k)
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `(sum parts)! / prod(parts!)`.
pub fn multinomial(parts: &[u64]) -> BigUint {
    let mut acc = BigUint::one();
    let mut total = 0u64;
    for &p in parts {
        total += p;
        acc *= binomial(total, p);
    }
    acc
}

/// Weak compositions of `total` into `parts` nonnegative summands, in
/// reverse lexicographic order starting from `(total, 0, ..., 0)`.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Option<Vec<u64>>,
}

impl Compositions {
    pub fn new(total: u64, parts: usize) -> Self {
        let current = match parts {
            0 if total == 0 => Some(Vec::new()),
            0 => None,
            _ => {
                let mut first = vec![0; parts];
                first[0] = total;
                Some(first)
            }
        };
        Compositions { current }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        let out = self.current.take()?;
        let k = out.len();
        if k >= 2 {
            let mut next = out.clone();
            let last = next[k - 1];
            next[k - 1] = 0;
            if let Some(i) = (0..k - 1).rev().find(|&i| next[i] > 0) {
                next[i] -= 1;
                next[i + 1] = last + 1;
                self.current = Some(next);
            }
        }
        Some(out)
    }
}
