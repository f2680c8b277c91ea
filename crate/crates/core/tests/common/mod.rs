//! Brute-force references, written without the bitset machinery.
#![allow(dead_code)]

use rand::Rng;
use spanlab_core::group::{ElementSet, Group};

/// Sums of every nonempty subset, by walking all `2^k - 1` masks.
pub fn brute_subset_sums(g: &Group, a: &[usize]) -> Vec<usize> {
    let k = a.len();
    let mut hit = vec![false; g.order()];
    for mask in 1u32..(1 << k) {
        let mut s = 0;
        for (i, &x) in a.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s = g.add(s, x);
            }
        }
        hit[s] = true;
    }
    (0..g.order()).filter(|&i| hit[i]).collect()
}

/// Sums of exactly `h` distinct positions of the sequence `a`.
pub fn brute_restricted_sums(g: &Group, a: &[usize], h: usize) -> Vec<usize> {
    let mut hit = vec![false; g.order()];
    for mask in 0u32..(1 << a.len()) {
        if mask.count_ones() as usize != h {
            continue;
        }
        let s = a.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).fold(0, |s, (_, &x)| g.add(s, x));
        hit[s] = true;
    }
    (0..g.order()).filter(|&i| hit[i]).collect()
}

/// Subgroup generated by `xs`, by closure under addition.
pub fn brute_span(g: &Group, xs: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; g.order()];
    inside[0] = true;
    let mut frontier = vec![0];
    while let Some(y) = frontier.pop() {
        for &x in xs {
            let z = g.add(y, x);
            if !inside[z] {
                inside[z] = true;
                frontier.push(z);
            }
        }
    }
    (0..g.order()).filter(|&i| inside[i]).collect()
}

/// Whether some nonempty `B` inside `a` has `Sigma(B) = <B>`.
pub fn brute_has_complete_subset(g: &Group, a: &[usize]) -> bool {
    (1u32..(1 << a.len())).any(|mask| {
        let b: Vec<usize> = a.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x).collect();
        brute_subset_sums(g, &b) == brute_span(g, &b)
    })
}

pub fn brute_spans(g: &Group, a: &[usize]) -> bool {
    brute_subset_sums(g, a).len() == g.order()
}

/// Every extremal-size subset of `G \ {0}` that fails to span, by listing all candidates.
pub fn brute_nonspanning(g: &Group, size: usize) -> Vec<Vec<usize>> {
    let n = g.order();
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(g: &Group, n: usize, size: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            if !brute_spans(g, cur) {
                out.push(cur.clone());
            }
            return;
        }
        for x in from..n {
            if n - x < size - cur.len() {
                break;
            }
            cur.push(x);
            rec(g, n, size, x + 1, cur, out);
            cur.pop();
        }
    }
    rec(g, n, size, 1, &mut cur, &mut out);
    out
}

/// All groups of order at most `max`, one per listed factorization.
pub fn small_groups(max: usize) -> Vec<Group> {
    let mut out = Vec::new();
    for n in 2..=max {
        for spec in spanlab_core::arith::abelian_groups_of_order(n) {
            out.push(Group::new(&spec).unwrap());
        }
    }
    out
}

/// `k` distinct random elements, optionally avoiding 0.
pub fn random_subset<R: Rng>(rng: &mut R, g: &Group, k: usize, avoid_zero: bool) -> Vec<usize> {
    let lo = usize::from(avoid_zero);
    let k = k.min(g.order() - lo);
    let mut pool: Vec<usize> = (lo..g.order()).collect();
    for i in 0..k {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    let mut a = pool[..k].to_vec();
    a.sort_unstable();
    a
}

pub fn set(g: &Group, xs: &[usize]) -> ElementSet {
    g.set_of(xs.iter().copied()).unwrap()
}
