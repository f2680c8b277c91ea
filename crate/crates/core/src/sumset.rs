//! Subset sums, restricted `h`-fold sums and sumsets by bitset dynamic
//! programming.
//!
//! `subset_sums` keeps the reachability set of *nonempty* subsequences
//! directly (`N <- N | (N + a) | {a}`), so `0` is reported only when some
//! nonempty subsequence actually sums to zero.

use crate::error::{Error, Result};
use crate::group::{ElementSet, Group};
use crate::words;

/// A finite sequence (multiset with order) of group elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sequence {
    group: Group,
    terms: Vec<usize>,
}

impl Sequence {
    pub fn new(group: &Group, terms: Vec<usize>) -> Result<Sequence> {
        if let Some(&bad) = terms.iter().find(|&&t| t >= group.order()) {
            return Err(Error::Precondition(format!("term {bad} outside the group")));
        }
        Ok(Sequence { group: group.clone(), terms })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn terms(&self) -> &[usize] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `supp(T)`.
    pub fn support(&self) -> ElementSet {
        self.group.set_of(self.terms.iter().copied()).expect("terms validated")
    }
}

impl From<&ElementSet> for Sequence {
    fn from(s: &ElementSet) -> Sequence {
        Sequence { group: s.group().clone(), terms: s.to_vec() }
    }
}

/// `out = sums | (sums + x) | {x}`.
#[inline]
pub(crate) fn extend_sums(group: &Group, sums: &[u64], x: usize, out: &mut [u64]) {
    out.copy_from_slice(sums);
    group.translate_or(sums, x, out);
    words::set(out, x);
}

/// `Sigma(T)`: sums over nonempty subsequences; `{0}` for the empty sequence.
pub fn subset_sums(t: &Sequence) -> ElementSet {
    if t.is_empty() {
        return t.group.set_of([0]).unwrap();
    }
    let mut cur = vec![0u64; t.group.word_len()];
    let mut next = cur.clone();
    for &x in &t.terms {
        extend_sums(&t.group, &cur, x, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    ElementSet::from_words(&t.group, cur)
}

/// `Sigma°(T) = Sigma(T) | {0}`.
pub fn subset_sums_with_zero(t: &Sequence) -> ElementSet {
    let mut s = subset_sums(t);
    s.insert(0);
    s
}

/// `Sigma_h(T)`: sums over index subsets of size exactly `h`.
pub fn restricted_sums(t: &Sequence, h: usize) -> Result<ElementSet> {
    if h > t.len() {
        return Err(Error::Precondition(format!("h = {h} exceeds sequence length {}", t.len())));
    }
    let g = &t.group;
    let w = g.word_len();
    let mut layers = vec![0u64; (h + 1) * w];
    words::set(&mut layers[..w], 0);
    let mut tmp = vec![0u64; w];
    for (seen, &x) in t.terms.iter().enumerate() {
        let top = h.min(seen + 1);
        for j in (1..=top).rev() {
            let (lower, upper) = layers.split_at_mut(j * w);
            tmp.iter_mut().for_each(|v| *v = 0);
            g.translate_or(&lower[(j - 1) * w..], x, &mut tmp);
            for (d, s) in upper[..w].iter_mut().zip(&tmp) {
                *d |= s;
            }
        }
    }
    Ok(ElementSet::from_words(g, layers[h * w..].to_vec()))
}

/// `A + B`, built by OR-ing translates of the larger set.
pub fn sumset(a: &ElementSet, b: &ElementSet) -> Result<ElementSet> {
    if a.group() != b.group() {
        return Err(Error::GroupMismatch);
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyOperand);
    }
    let (big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let g = a.group();
    let mut out = vec![0u64; g.word_len()];
    for x in small.iter() {
        g.translate_or(big.words(), x, &mut out);
    }
    Ok(ElementSet::from_words(g, out))
}

/// `A_1 + ... + A_h`.
pub fn iterated_sumset(sets: &[ElementSet]) -> Result<ElementSet> {
    let (first, rest) = sets.split_first().ok_or(Error::EmptyOperand)?;
    rest.iter().try_fold(first.clone(), |acc, s| sumset(&acc, s))
}

/// `Sigma(A) = G`.
pub fn spans(a: &ElementSet) -> bool {
    subset_sums(&Sequence::from(a)).is_full()
}

/// `Sigma(A) = <A>` for nonempty `A`.
pub fn is_complete(a: &ElementSet) -> Result<bool> {
    if a.is_empty() {
        return Err(Error::EmptyOperand);
    }
    let sums = subset_sums(&Sequence::from(a));
    Ok(sums == *a.group().generated_subgroup(a).elements())
}

impl ElementSet {
    /// `Sigma(self)`.
    pub fn subset_sums(&self) -> ElementSet {
        subset_sums(&Sequence::from(self))
    }

    pub fn spans(&self) -> bool {
        spans(self)
    }
}
