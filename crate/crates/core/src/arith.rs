//! Small integer helpers: primality, factorization, integer square roots.

pub fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Least prime dividing `n` (`n >= 2`).
pub fn smallest_prime_factor(n: usize) -> usize {
    assert!(n >= 2, "smallest_prime_factor of {n}");
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return d;
        }
        d += 1;
    }
    n
}

/// Prime factorization as ascending `(prime, exponent)` pairs.
pub fn factorize(mut n: usize) -> Vec<(usize, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn divisors(n: usize) -> Vec<usize> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

pub fn isqrt(n: usize) -> usize {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as usize;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// `floor(2 * sqrt(m))`, computed exactly as `isqrt(4m)`.
pub fn floor_two_sqrt(m: usize) -> usize {
    isqrt(4 * m)
}

/// Partitions of `n` as non-increasing part lists, in reverse lexicographic order.
pub(crate) fn partitions(n: u32) -> Vec<Vec<u32>> {
    fn go(rest: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=rest.min(max)).rev() {
            cur.push(part);
            go(rest - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// Invariant factors `d_1 | d_2 | ... | d_k` (ascending, all `> 1`) of
/// `Z_{n_1} + ... + Z_{n_r}`.
pub fn invariant_factors(cyclic_orders: &[usize]) -> Vec<usize> {
    use std::collections::BTreeMap;
    let mut per_prime: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for &n in cyclic_orders {
        for (p, e) in factorize(n) {
            per_prime.entry(p).or_default().push(e);
        }
    }
    let len = per_prime.values().map(Vec::len).max().unwrap_or(0);
    let mut factors = vec![1usize; len];
    for (p, mut exps) in per_prime {
        exps.sort_unstable_by(|a, b| b.cmp(a));
        for (i, e) in exps.into_iter().enumerate() {
            factors[len - 1 - i] *= p.pow(e);
        }
    }
    factors
}

/// Every abelian group of order `n` up to isomorphism, as invariant-factor lists.
pub fn abelian_groups_of_order(n: usize) -> Vec<Vec<usize>> {
    let mut acc: Vec<Vec<usize>> = vec![vec![]];
    for (p, e) in factorize(n) {
        let mut next = Vec::new();
        for base in &acc {
            for part in partitions(e) {
                let len = base.len().max(part.len());
                let mut f = vec![1usize; len];
                for (i, &d) in base.iter().rev().enumerate() {
                    f[len - 1 - i] *= d;
                }
                for (i, &x) in part.iter().enumerate() {
                    f[len - 1 - i] *= p.pow(x);
                }
                next.push(f);
            }
        }
        acc = next;
    }
    acc.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sqrt_floor() {
        // floor(2*sqrt(p-2)) for small primes
        assert_eq!(floor_two_sqrt(1), 2);
        assert_eq!(floor_two_sqrt(3), 3);
        assert_eq!(floor_two_sqrt(5), 4);
        assert_eq!(floor_two_sqrt(9), 6);
        assert_eq!(floor_two_sqrt(11), 6);
        assert_eq!(floor_two_sqrt(0), 0);
    }

    #[test]
    fn invariant_factor_normalization() {
        assert_eq!(invariant_factors(&[3, 5]), vec![15]);
        assert_eq!(invariant_factors(&[2, 4]), vec![2, 4]);
        assert_eq!(invariant_factors(&[4, 2]), vec![2, 4]);
        assert_eq!(invariant_factors(&[6, 4]), vec![2, 12]);
        assert_eq!(invariant_factors(&[2, 2, 3]), vec![2, 6]);
    }

    #[test]
    fn group_counts_match_partition_numbers() {
        assert_eq!(abelian_groups_of_order(8).len(), 3);
        assert_eq!(abelian_groups_of_order(16).len(), 5);
        assert_eq!(abelian_groups_of_order(24).len(), 3);
        assert_eq!(abelian_groups_of_order(15), vec![vec![15]]);
        assert!(abelian_groups_of_order(12).contains(&vec![2, 6]));
    }

    #[test]
    fn divisor_list() {
        assert_eq!(divisors(36), vec![1, 2, 3, 4, 6, 9, 12, 18, 36]);
        assert_eq!(divisors(16).len(), 5);
    }
}
