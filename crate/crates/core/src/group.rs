//! Finite abelian groups `Z_{n_1} + ... + Z_{n_k}` over mixed-radix element
//! indices, plus element sets, subgroups and cosets.
//!
//! Element `(c_1, ..., c_k)` has index `sum c_i * stride_i` with the last
//! coordinate varying fastest, so `Z_n` indices are just residues.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::arith;
use crate::error::{Error, Result};
use crate::words::{self, Ones};

pub const DEFAULT_MAX_ORDER: usize = 1_000_000;
pub const DEFAULT_ENUMERATION_MAX: usize = 10_000;

// Translate tables above this order are computed on the fly instead.
const TABLE_LIMIT: usize = 4096;

#[derive(Clone)]
pub struct Group(Arc<GroupData>);

struct GroupData {
    orders: Vec<usize>,
    order: usize,
    strides: Vec<usize>,
    words: usize,
    translate: Vec<OnceLock<Box<[u32]>>>,
    subgroups: OnceLock<Vec<Vec<u64>>>,
}

/// An element as explicit residues, `coords[i] in [0, n_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Element {
    pub coords: Vec<usize>,
}

impl Group {
    pub fn new(cyclic_orders: &[usize]) -> Result<Group> {
        Group::with_max_order(cyclic_orders, DEFAULT_MAX_ORDER)
    }

    pub fn with_max_order(cyclic_orders: &[usize], max_order: usize) -> Result<Group> {
        if cyclic_orders.is_empty() {
            return Err(Error::InvalidGroup("no cyclic factors".into()));
        }
        if let Some(&bad) = cyclic_orders.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidGroup(format!("cyclic order {bad} is below 2")));
        }
        let mut order: usize = 1;
        for &n in cyclic_orders {
            order = order
                .checked_mul(n)
                .filter(|&o| o <= max_order)
                .ok_or(Error::GroupTooLarge { order: order.saturating_mul(n), max: max_order })?;
        }
        let mut strides = vec![1usize; cyclic_orders.len()];
        for i in (0..cyclic_orders.len() - 1).rev() {
            strides[i] = strides[i + 1] * cyclic_orders[i + 1];
        }
        let tables = if cyclic_orders.len() > 1 && order <= TABLE_LIMIT { order } else { 0 };
        Ok(Group(Arc::new(GroupData {
            orders: cyclic_orders.to_vec(),
            order,
            strides,
            words: words::word_count(order),
            translate: (0..tables).map(|_| OnceLock::new()).collect(),
            subgroups: OnceLock::new(),
        })))
    }

    pub fn cyclic(n: usize) -> Result<Group> {
        Group::new(&[n])
    }

    pub fn order(&self) -> usize {
        self.0.order
    }

    pub fn cyclic_orders(&self) -> &[usize] {
        &self.0.orders
    }

    /// True when the spec has a single cyclic factor.
    pub fn is_single_cyclic(&self) -> bool {
        self.0.orders.len() == 1
    }

    /// True when the group is cyclic up to isomorphism (e.g. `Z3xZ5`).
    pub fn is_cyclic(&self) -> bool {
        self.invariant_factors().len() <= 1
    }

    pub fn invariant_factors(&self) -> Vec<usize> {
        arith::invariant_factors(&self.0.orders)
    }

    pub fn smallest_prime_divisor(&self) -> usize {
        arith::smallest_prime_factor(self.0.order)
    }

    pub(crate) fn word_len(&self) -> usize {
        self.0.words
    }

    pub fn element(&self, index: usize) -> Element {
        assert!(index < self.0.order, "index {index} out of range");
        let coords = self
            .0
            .orders
            .iter()
            .zip(&self.0.strides)
            .map(|(&n, &s)| (index / s) % n)
            .collect();
        Element { coords }
    }

    pub fn index_of(&self, e: &Element) -> Result<usize> {
        if e.coords.len() != self.0.orders.len() {
            return Err(Error::GroupMismatch);
        }
        let mut idx = 0;
        for ((&c, &n), &s) in e.coords.iter().zip(&self.0.orders).zip(&self.0.strides) {
            if c >= n {
                return Err(Error::Precondition(format!("coordinate {c} not below {n}")));
            }
            idx += c * s;
        }
        Ok(idx)
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        let d = &*self.0;
        if d.orders.len() == 1 {
            let s = a + b;
            return if s >= d.order { s - d.order } else { s };
        }
        let mut out = 0;
        for (&n, &s) in d.orders.iter().zip(&d.strides) {
            let c = ((a / s) % n + (b / s) % n) % n;
            out += c * s;
        }
        out
    }

    #[inline]
    pub fn neg(&self, a: usize) -> usize {
        let d = &*self.0;
        if d.orders.len() == 1 {
            return if a == 0 { 0 } else { d.order - a };
        }
        let mut out = 0;
        for (&n, &s) in d.orders.iter().zip(&d.strides) {
            let c = (a / s) % n;
            out += ((n - c) % n) * s;
        }
        out
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    /// `k * a` for a non-negative integer `k`.
    pub fn mul(&self, k: usize, a: usize) -> usize {
        let d = &*self.0;
        let mut out = 0;
        for (&n, &s) in d.orders.iter().zip(&d.strides) {
            let c = (a / s) % n;
            out += ((k % n) * c % n) * s;
        }
        out
    }

    /// `k * a` for a signed integer `k`.
    pub fn mul_signed(&self, k: i64, a: usize) -> usize {
        let m = self.mul(k.unsigned_abs() as usize, a);
        if k < 0 {
            self.neg(m)
        } else {
            m
        }
    }

    pub fn element_order(&self, a: usize) -> usize {
        let d = &*self.0;
        d.orders.iter().zip(&d.strides).fold(1, |acc, (&n, &s)| {
            let c = (a / s) % n;
            let o = n / arith::gcd(c, n);
            acc / arith::gcd(acc, o) * o
        })
    }

    /// Exponent of the group (lcm of the cyclic orders).
    pub fn exponent(&self) -> usize {
        self.0.orders.iter().fold(1, |acc, &n| acc / arith::gcd(acc, n) * n)
    }

    fn translate_table(&self, g: usize) -> Option<&[u32]> {
        let cell = self.0.translate.get(g)?;
        Some(cell.get_or_init(|| (0..self.0.order).map(|x| self.add(x, g) as u32).collect()))
    }

    /// `dst |= src + g` on raw word slices of this group's length.
    #[inline]
    pub(crate) fn translate_or(&self, src: &[u64], g: usize, dst: &mut [u64]) {
        if self.is_single_cyclic() {
            words::rotate_or(src, g, self.0.order, dst);
        } else if let Some(table) = self.translate_table(g) {
            for x in Ones::new(src) {
                words::set(dst, table[x] as usize);
            }
        } else {
            for x in Ones::new(src) {
                words::set(dst, self.add(x, g));
            }
        }
    }

    pub fn empty_set(&self) -> ElementSet {
        ElementSet { group: self.clone(), bits: vec![0; self.0.words] }
    }

    pub fn full_set(&self) -> ElementSet {
        let mut s = self.empty_set();
        words::fill(&mut s.bits, self.0.order);
        s
    }

    /// `G \ {0}`.
    pub fn nonzero_set(&self) -> ElementSet {
        let mut s = self.full_set();
        s.remove(0);
        s
    }

    pub fn set_of<I: IntoIterator<Item = usize>>(&self, items: I) -> Result<ElementSet> {
        let mut s = self.empty_set();
        for i in items {
            if i >= self.0.order {
                return Err(Error::Precondition(format!(
                    "element index {i} outside [0, {})",
                    self.0.order
                )));
            }
            s.insert(i);
        }
        Ok(s)
    }

    /// Set of signed multiples of element index 1 (`-1` means `-(1)`);
    /// for `Z_n` these are just signed residues.
    pub fn set_of_signed<I: IntoIterator<Item = i64>>(&self, items: I) -> Result<ElementSet> {
        self.set_of(items.into_iter().map(|k| self.mul_signed(k, 1)))
    }

    /// `<S>`: closure of `s` under addition (contains 0).
    pub fn generated_subgroup(&self, s: &ElementSet) -> Subgroup {
        let mut h = self.set_of([0]).unwrap();
        for g in s.iter() {
            if !h.contains(g) {
                h = self.join_cyclic(&h, g);
            }
        }
        Subgroup::from_closed(h)
    }

    /// `H + <g>` for a subgroup `H`.
    fn join_cyclic(&self, h: &ElementSet, g: usize) -> ElementSet {
        let mut out = h.clone();
        let mut m = g;
        while !h.contains(m) {
            self.translate_or(&h.bits, m, &mut out.bits);
            m = self.add(m, g);
        }
        out
    }

    /// All subgroups, sorted by order then by ascending element list.
    pub fn all_subgroups(&self) -> Result<Vec<Subgroup>> {
        self.all_subgroups_within(DEFAULT_ENUMERATION_MAX)
    }

    pub fn all_subgroups_within(&self, max_order: usize) -> Result<Vec<Subgroup>> {
        if self.0.order > max_order {
            return Err(Error::GroupTooLarge { order: self.0.order, max: max_order });
        }
        let raw = self.0.subgroups.get_or_init(|| self.enumerate_subgroups());
        Ok(raw
            .iter()
            .map(|bits| Subgroup::from_closed(ElementSet { group: self.clone(), bits: bits.clone() }))
            .collect())
    }

    fn enumerate_subgroups(&self) -> Vec<Vec<u64>> {
        let trivial = self.set_of([0]).unwrap();
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        seen.insert(trivial.bits.clone());
        let mut found = vec![trivial.clone()];
        let mut frontier = vec![trivial];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for h in &frontier {
                // one representative per coset of h suffices
                let mut covered = h.clone();
                for g in 0..self.0.order {
                    if covered.contains(g) {
                        continue;
                    }
                    self.translate_or(&h.bits, g, &mut covered.bits);
                    let joined = self.join_cyclic(h, g);
                    if seen.insert(joined.bits.clone()) {
                        found.push(joined.clone());
                        next.push(joined);
                    }
                }
            }
            frontier = next;
        }
        found.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp_lex(b)));
        found.into_iter().map(|s| s.bits).collect()
    }

    pub fn subgroups_of_order(&self, n: usize) -> Result<Vec<Subgroup>> {
        if n == 0 || self.0.order % n != 0 {
            return Err(Error::NotADivisor(n));
        }
        Ok(self.all_subgroups()?.into_iter().filter(|h| h.order() == n).collect())
    }

    /// Indices of elements whose order equals `|G|`.
    pub fn generators(&self) -> Vec<usize> {
        (0..self.0.order).filter(|&g| self.element_order(g) == self.0.order).collect()
    }

    pub fn spec_string(&self) -> String {
        self.to_string()
    }
}

impl PartialEq for Group {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.orders == other.0.orders
    }
}

impl Eq for Group {}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.orders.iter().map(|n| format!("Z{n}")).collect();
        f.write_str(&parts.join("x"))
    }
}

impl fmt::Debug for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Group({self})")
    }
}

/// Parses `"Z15"`, `"z2xZ4"`, `"Z2 x Z2"`.
impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Group> {
        let err = |reason: &str| Error::ParseGroup { input: s.to_string(), reason: reason.to_string() };
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(err("empty spec"));
        }
        let mut orders = Vec::new();
        for factor in compact.split(['x', 'X']) {
            let digits = factor
                .strip_prefix('Z')
                .or_else(|| factor.strip_prefix('z'))
                .ok_or_else(|| err("each factor must look like Z<n>"))?;
            let n: usize = digits.parse().map_err(|_| err("factor order is not a positive integer"))?;
            orders.push(n);
        }
        Group::new(&orders)
    }
}

impl Serialize for Group {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Group {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Group, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A subset of a group, stored as a bitset over element indices.
#[derive(Clone)]
pub struct ElementSet {
    group: Group,
    bits: Vec<u64>,
}

impl ElementSet {
    pub fn group(&self) -> &Group {
        &self.group
    }

    pub(crate) fn from_words(group: &Group, bits: Vec<u64>) -> ElementSet {
        debug_assert_eq!(bits.len(), group.word_len());
        ElementSet { group: group.clone(), bits }
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        words::count(&self.bits)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        words::is_full(&self.bits, self.group.order())
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.group.order() && words::get(&self.bits, i)
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.group.order(), "element {i} out of range");
        words::set(&mut self.bits, i);
    }

    pub fn remove(&mut self, i: usize) {
        if i < self.group.order() {
            words::clear(&mut self.bits, i);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        Ones::new(&self.bits)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn min(&self) -> Option<usize> {
        self.iter().next()
    }

    fn check_same(&self, other: &ElementSet) -> Result<()> {
        if self.group == other.group {
            Ok(())
        } else {
            Err(Error::GroupMismatch)
        }
    }

    fn zip_with(&self, other: &ElementSet, f: impl Fn(u64, u64) -> u64) -> Result<ElementSet> {
        self.check_same(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect();
        Ok(ElementSet { group: self.group.clone(), bits })
    }

    pub fn union(&self, other: &ElementSet) -> Result<ElementSet> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &ElementSet) -> Result<ElementSet> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &ElementSet) -> Result<ElementSet> {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> ElementSet {
        let mut bits: Vec<u64> = self.bits.iter().map(|w| !w).collect();
        if let Some(last) = bits.last_mut() {
            *last &= words::tail_mask(self.group.order());
        }
        ElementSet { group: self.group.clone(), bits }
    }

    pub fn is_subset(&self, other: &ElementSet) -> bool {
        self.group == other.group && self.bits.iter().zip(&other.bits).all(|(&a, &b)| a & !b == 0)
    }

    /// `g + S`.
    pub fn translate(&self, g: usize) -> ElementSet {
        let mut out = self.group.empty_set();
        self.group.translate_or(&self.bits, g, &mut out.bits);
        out
    }

    /// `-S`.
    pub fn negate(&self) -> ElementSet {
        let mut out = self.group.empty_set();
        for x in self.iter() {
            out.insert(self.group.neg(x));
        }
        out
    }

    /// `k * S` (elementwise multiple).
    pub fn scale(&self, k: usize) -> ElementSet {
        let mut out = self.group.empty_set();
        for x in self.iter() {
            out.insert(self.group.mul(k, x));
        }
        out
    }

    /// Lexicographic comparison of the ascending element lists.
    pub fn cmp_lex(&self, other: &ElementSet) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialEq for ElementSet {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.bits == other.bits
    }
}

impl Eq for ElementSet {}

impl std::hash::Hash for ElementSet {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.bits.hash(state);
    }
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} in {}", self.to_vec(), self.group)
    }
}

impl Serialize for ElementSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

/// A subgroup together with its order and index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgroup {
    elements: ElementSet,
    order: usize,
    index: usize,
}

impl Subgroup {
    fn from_closed(elements: ElementSet) -> Subgroup {
        let order = elements.len();
        let index = elements.group().order() / order;
        Subgroup { elements, order, index }
    }

    pub fn elements(&self) -> &ElementSet {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn group(&self) -> &Group {
        self.elements.group()
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    pub fn is_full(&self) -> bool {
        self.index == 1
    }

    pub fn contains(&self, g: usize) -> bool {
        self.elements.contains(g)
    }

    /// `H \ {0}`.
    pub fn nonzero(&self) -> ElementSet {
        let mut s = self.elements.clone();
        s.remove(0);
        s
    }

    /// Cosets of this subgroup ordered by least element, so `H` itself is first.
    pub fn cosets(&self) -> Vec<ElementSet> {
        let g = self.group();
        let mut covered = g.empty_set();
        let mut out = Vec::with_capacity(self.index);
        for x in 0..g.order() {
            if covered.contains(x) {
                continue;
            }
            let c = self.elements.translate(x);
            g.translate_or(&self.elements.bits, x, &mut covered.bits);
            out.push(c);
        }
        out
    }

    /// The canonical epimorphism onto `G/H`: element index to coset position
    /// in [`Subgroup::cosets`].
    pub fn coset_map(&self) -> Vec<usize> {
        let g = self.group();
        let mut map = vec![usize::MAX; g.order()];
        let mut next = 0;
        for x in 0..g.order() {
            if map[x] != usize::MAX {
                continue;
            }
            for h in self.elements.iter() {
                map[g.add(x, h)] = next;
            }
            next += 1;
        }
        map
    }
}
