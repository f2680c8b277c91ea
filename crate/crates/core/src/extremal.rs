//! Extremal non-spanning sets: `A` in `G \ {0}` with `|A| = cr(G) - 1` and
//! `Sigma(A) != G`.
//!
//! Records are enumerated lexicographically, classified against the known
//! structural shapes, and profiled by cosets of a subgroup of index `p`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, floor_two_sqrt};
use crate::critical::cr_formula;
use crate::error::{Error, Result};
use crate::group::{ElementSet, Group, Subgroup};
use crate::search::{Cursor, EnumerationOptions, Enumerator, SearchBudget, Step};
use crate::ENGINE_VERSION;

pub const RECORD_SCHEMA_VERSION: u32 = 1;
/// Largest candidate count `C(|G|-1, cr-1)` enumerated without extended mode.
pub const DEFAULT_CANDIDATE_CAP: u128 = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Tag {
    /// `A = H \ {0}` with `|H| = |G|/p`.
    ShapeI,
    /// `H \ {0} <= A <= H | (g+H) | (-g+H)`, `g` outside `H`, `|H| = |G|/p`.
    ShapeIi,
    /// The same containment, on a group meeting the odd-order hypotheses
    /// (`|G|/p` composite and large).
    ShapeB,
    /// `A & K = K \ {0}` and `A <= K | (g+K) | (-g+K)` with `|K| = p`.
    ShapeEx1,
    /// `A = {+-g, ..., +-mg}` with `ord(g) = |G|`, `m = |A|/2`.
    ShapeEx2,
    HasCompleteSubset,
    Unclassified,
}

impl Tag {
    pub fn label(self) -> &'static str {
        match self {
            Tag::ShapeI => "SHAPE_I",
            Tag::ShapeIi => "SHAPE_II",
            Tag::ShapeB => "SHAPE_B",
            Tag::ShapeEx1 => "SHAPE_EX1",
            Tag::ShapeEx2 => "SHAPE_EX2",
            Tag::HasCompleteSubset => "HAS_COMPLETE_SUBSET",
            Tag::Unclassified => "UNCLASSIFIED",
        }
    }
}

impl std::fmt::Display for Tag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A subgroup `H` together with a coset representative `g` outside it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetWitness {
    pub subgroup: Vec<usize>,
    pub g: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witnesses {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape_i: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape_ii: Option<CosetWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape_b: Option<CosetWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape_ex1: Option<CosetWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape_ex2: Option<usize>,
    /// Subgroup `K` with `Sigma(A & K) = K`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complete_subset: Option<Vec<usize>>,
}

/// Decomposition of `A` by the cosets of `H`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetProfile {
    pub subgroup: Vec<usize>,
    /// `|A & H|`.
    pub l0: usize,
    /// Number of nonzero cosets met by `A`.
    pub k: usize,
    /// `l_1 >= ... >= l_k`, the sizes of `A` in those cosets.
    pub lengths: Vec<usize>,
    /// `r_u = #{i : l_i = u}` for `u = 1..4`, and `r_5 = #{i : l_i >= 5}`.
    pub r: [usize; 5],
    /// `m_t = k - (r_1 + ... + r_{t-1})`, i.e. `#{i : l_i >= t}`.
    pub m: [usize; 5],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtremalRecord {
    pub schema_version: u32,
    pub group: Group,
    pub set: ElementSet,
    pub tags: Vec<Tag>,
    pub witnesses: Witnesses,
    pub profile: Option<CosetProfile>,
    /// Size of the unit orbit this record stands for, when deduplicating.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit_size: Option<usize>,
}

impl ExtremalRecord {
    pub fn has(&self, t: Tag) -> bool {
        self.tags.contains(&t)
    }

    /// Number of extremal sets this record accounts for.
    pub fn weight(&self) -> u64 {
        self.orbit_size.unwrap_or(1) as u64
    }
}

/// Size of the extremal sets of `g`, from the closed form.
pub fn extremal_size(g: &Group) -> Result<usize> {
    Ok(cr_formula(g)?.0 - 1)
}

fn ensure_extremal(a: &ElementSet) -> Result<()> {
    let want = extremal_size(a.group())?;
    if a.contains(0) {
        return Err(Error::NotExtremal("0 belongs to the set".into()));
    }
    if a.len() != want {
        return Err(Error::NotExtremal(format!("size {} but cr(G) - 1 = {want}", a.len())));
    }
    if a.spans() {
        return Err(Error::NotExtremal("the set spans the group".into()));
    }
    Ok(())
}

/// Some subgroup `K` with `Sigma(A & K) = K`, smallest first.
///
/// `A` contains a complete subset `B` exactly when such a `K` exists: if
/// `B` is complete with `<B> = K` then `K = Sigma(B) <= Sigma(A & K) <= K`;
/// conversely `A & K` is itself complete when `Sigma(A & K) = K`.
pub fn contains_complete_subset(a: &ElementSet) -> Result<Option<Subgroup>> {
    if a.is_empty() {
        return Err(Error::EmptyOperand);
    }
    if a.contains(0) {
        return Err(Error::Precondition("0 must not belong to A".into()));
    }
    for k in a.group().all_subgroups()? {
        if k.is_trivial() {
            continue;
        }
        let part = a.intersection(k.elements())?;
        if !part.is_empty() && part.subset_sums() == *k.elements() {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Every subgroup `K` with `Sigma(A & K) = K`.
pub fn complete_subgroups(a: &ElementSet) -> Result<Vec<Subgroup>> {
    let mut out = Vec::new();
    for k in a.group().all_subgroups()? {
        if k.is_trivial() {
            continue;
        }
        let part = a.intersection(k.elements())?;
        if !part.is_empty() && part.subset_sums() == *k.elements() {
            out.push(k);
        }
    }
    Ok(out)
}

pub fn coset_profile(a: &ElementSet, h: &Subgroup) -> Result<CosetProfile> {
    if a.group() != h.group() {
        return Err(Error::GroupMismatch);
    }
    if h.is_trivial() || h.is_full() {
        return Err(Error::Precondition("profile subgroup must be proper and nontrivial".into()));
    }
    let map = h.coset_map();
    let mut counts = vec![0usize; h.index()];
    for x in a.iter() {
        counts[map[x]] += 1;
    }
    let l0 = counts[0];
    let mut lengths: Vec<usize> = counts[1..].iter().copied().filter(|&c| c > 0).collect();
    lengths.sort_unstable_by(|x, y| y.cmp(x));
    let k = lengths.len();
    let mut r = [0usize; 5];
    for &l in &lengths {
        r[l.min(5) - 1] += 1;
    }
    let mut m = [0usize; 5];
    let mut acc = 0;
    for t in 0..5 {
        m[t] = k - acc;
        acc += r[t];
    }
    Ok(CosetProfile { subgroup: h.elements().to_vec(), l0, k, lengths, r, m })
}

/// `H \ {0} <= A <= H | (g+H) | (-g+H)` for some `g` outside `H`; returns `g`.
fn three_coset_witness(a: &ElementSet, h: &Subgroup) -> Option<usize> {
    let g = a.group();
    if !h.nonzero().is_subset(a) || h.is_full() {
        return None;
    }
    let map = h.coset_map();
    let mut outside = a.iter().filter(|&x| !h.contains(x));
    let Some(first) = outside.next() else {
        return (0..g.order()).find(|&x| !h.contains(x));
    };
    let c = map[first];
    let c_neg = map[g.neg(first)];
    outside.all(|x| map[x] == c || map[x] == c_neg).then_some(first)
}

/// Odd order, `|G|/p` composite and at least 62 (`p = 3`) or `7p + 3`.
pub fn meets_shape_b_hypotheses(g: &Group) -> bool {
    let n = g.order();
    let p = g.smallest_prime_divisor();
    if n % 2 == 0 || n == p {
        return false;
    }
    let q = n / p;
    let floor = if p == 3 { 62 } else { 7 * p + 3 };
    q > 1 && !arith::is_prime(q) && q >= floor
}

fn ex2_set(g: &Group, gen: usize, m: usize) -> Result<ElementSet> {
    g.set_of((1..=m as i64).flat_map(|k| [g.mul_signed(k, gen), g.mul_signed(-k, gen)]))
}

fn ex2_witness(a: &ElementSet) -> Result<Option<usize>> {
    let g = a.group();
    if a.len() % 2 == 1 || !g.is_cyclic() {
        return Ok(None);
    }
    let m = a.len() / 2;
    for gen in g.generators() {
        if ex2_set(g, gen, m)? == *a {
            return Ok(Some(gen));
        }
    }
    Ok(None)
}

/// Tags and witnesses of `a`, without the extremality check.
fn shapes(a: &ElementSet) -> Result<(Vec<Tag>, Witnesses, Option<CosetProfile>)> {
    let g = a.group();
    let n = g.order();
    let p = g.smallest_prime_divisor();
    let mut tags = Vec::new();
    let mut w = Witnesses::default();
    let index_p: Vec<Subgroup> = if n > p { g.subgroups_of_order(n / p)? } else { Vec::new() };

    if let Some(h) = index_p.iter().find(|h| h.nonzero() == *a) {
        tags.push(Tag::ShapeI);
        w.shape_i = Some(h.elements().to_vec());
    }
    let mut profile_h = None;
    for h in &index_p {
        if let Some(x) = three_coset_witness(a, h) {
            tags.push(Tag::ShapeIi);
            let cw = CosetWitness { subgroup: h.elements().to_vec(), g: x };
            if meets_shape_b_hypotheses(g) {
                tags.push(Tag::ShapeB);
                w.shape_b = Some(cw.clone());
            }
            w.shape_ii = Some(cw);
            profile_h = Some(h.clone());
            break;
        }
    }
    if n > p {
        for k in g.subgroups_of_order(p)? {
            if a.intersection(k.elements())? != k.nonzero() {
                continue;
            }
            if let Some(x) = three_coset_witness(a, &k) {
                tags.push(Tag::ShapeEx1);
                w.shape_ex1 = Some(CosetWitness { subgroup: k.elements().to_vec(), g: x });
                break;
            }
        }
    }
    if let Some(gen) = ex2_witness(a)? {
        tags.push(Tag::ShapeEx2);
        w.shape_ex2 = Some(gen);
    }
    let complete = contains_complete_subset(a)?;
    if let Some(k) = &complete {
        tags.push(Tag::HasCompleteSubset);
        w.complete_subset = Some(k.elements().to_vec());
    }
    if !tags.iter().any(|t| matches!(t, Tag::ShapeI | Tag::ShapeIi | Tag::ShapeB | Tag::ShapeEx1 | Tag::ShapeEx2)) {
        tags.push(Tag::Unclassified);
    }
    tags.sort();
    let profile_h = profile_h.or_else(|| index_p.first().cloned());
    let profile = match profile_h {
        Some(h) if !h.is_trivial() && !h.is_full() => Some(coset_profile(a, &h)?),
        _ => None,
    };
    Ok((tags, w, profile))
}

/// Classifies an extremal set; errors if `a` is not extremal.
pub fn classify(a: &ElementSet) -> Result<ExtremalRecord> {
    ensure_extremal(a)?;
    classify_unchecked(a)
}

fn classify_unchecked(a: &ElementSet) -> Result<ExtremalRecord> {
    let (tags, witnesses, profile) = shapes(a)?;
    Ok(ExtremalRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        group: a.group().clone(),
        set: a.clone(),
        tags,
        witnesses,
        profile,
        orbit_size: None,
    })
}

fn subgroup_from(g: &Group, elems: &[usize]) -> Option<Subgroup> {
    let s = g.set_of(elems.iter().copied()).ok()?;
    let h = g.generated_subgroup(&s);
    (*h.elements() == s).then_some(h)
}

/// Re-derives every tag of `r` from its stored witness.
pub fn verify_witnesses(r: &ExtremalRecord) -> bool {
    let g = &r.group;
    let a = &r.set;
    let n = g.order();
    let p = g.smallest_prime_divisor();
    let coset_ok = |cw: &CosetWitness, order: usize| -> bool {
        let Some(h) = subgroup_from(g, &cw.subgroup) else { return false };
        if h.order() != order || h.contains(cw.g) || !h.nonzero().is_subset(a) {
            return false;
        }
        let plus = h.elements().translate(cw.g);
        let minus = h.elements().translate(g.neg(cw.g));
        a.iter().all(|x| h.contains(x) || plus.contains(x) || minus.contains(x))
    };
    r.tags.iter().all(|t| match t {
        Tag::ShapeI => r.witnesses.shape_i.as_ref().is_some_and(|e| {
            subgroup_from(g, e).is_some_and(|h| h.order() * p == n && h.nonzero() == *a)
        }),
        Tag::ShapeIi => r.witnesses.shape_ii.as_ref().is_some_and(|cw| coset_ok(cw, n / p)),
        Tag::ShapeB => meets_shape_b_hypotheses(g) && r.witnesses.shape_b.as_ref().is_some_and(|cw| coset_ok(cw, n / p)),
        Tag::ShapeEx1 => r.witnesses.shape_ex1.as_ref().is_some_and(|cw| {
            coset_ok(cw, p) && subgroup_from(g, &cw.subgroup).is_some_and(|k| a.intersection(k.elements()).ok() == Some(k.nonzero()))
        }),
        Tag::ShapeEx2 => r.witnesses.shape_ex2.is_some_and(|gen| {
            g.element_order(gen) == n && a.len() % 2 == 0 && ex2_set(g, gen, a.len() / 2).ok().as_ref() == Some(a)
        }),
        Tag::HasCompleteSubset => r.witnesses.complete_subset.as_ref().is_some_and(|e| {
            subgroup_from(g, e).is_some_and(|k| {
                let part = a.intersection(k.elements()).unwrap();
                !part.is_empty() && part.subset_sums() == *k.elements()
            })
        }),
        Tag::Unclassified => r.witnesses.shape_i.is_none()
            && r.witnesses.shape_ii.is_none()
            && r.witnesses.shape_ex1.is_none()
            && r.witnesses.shape_ex2.is_none(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompleteSubgroupReport {
    pub complete_subgroups: Vec<Vec<usize>>,
    /// Subgroups `K` with `Sigma(A & K) = K` but `A & K != K \ {0}`.
    pub failures: Vec<Vec<usize>>,
    pub holds: bool,
}

/// For every `K` with `Sigma(A & K) = K`, checks `A & K = K \ {0}`.
pub fn check_complete_subgroups(a: &ElementSet) -> Result<CompleteSubgroupReport> {
    ensure_extremal(a)?;
    let ks = complete_subgroups(a)?;
    let failures: Vec<Vec<usize>> = ks
        .iter()
        .filter(|k| a.intersection(k.elements()).map(|s| s != k.nonzero()).unwrap_or(true))
        .map(|k| k.elements().to_vec())
        .collect();
    Ok(CompleteSubgroupReport {
        complete_subgroups: ks.iter().map(|k| k.elements().to_vec()).collect(),
        holds: failures.is_empty(),
        failures,
    })
}

fn odd_primes(p: usize, q: usize) -> Result<()> {
    for x in [p, q] {
        if x < 3 || !arith::is_prime(x) {
            return Err(Error::Window(format!("{x} is not an odd prime")));
        }
    }
    Ok(())
}

/// `p + floor(2 sqrt(p-2)) + 1 < q < 2p + 3`.
pub fn in_window_1(p: usize, q: usize) -> bool {
    p >= 3 && p + floor_two_sqrt(p - 2) + 1 < q && q < 2 * p + 3
}

/// `p < q <= p + floor(2 sqrt(p-2)) + 1`.
pub fn in_window_2(p: usize, q: usize) -> bool {
    p >= 3 && p < q && q <= p + floor_two_sqrt(p - 2) + 1
}

pub const EXAMPLE_RETRY_CAP: usize = 1000;

/// Random set with `A & K = K \ {0}` and the rest in `(g+K) | (-g+K)`,
/// `|K| = p`, in `Z_pq`; redrawn until `Sigma(A) != G`.
pub fn make_example_1(p: usize, q: usize, seed: u64) -> Result<ElementSet> {
    odd_primes(p, q)?;
    if !in_window_1(p, q) {
        return Err(Error::Window(format!("(p, q) = ({p}, {q}) outside p + floor(2 sqrt(p-2)) + 1 < q < 2p + 3")));
    }
    let g = Group::cyclic(p * q)?;
    let k = g.subgroups_of_order(p)?.remove(0);
    let size = p + q - 3;
    let rest = size - (p - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..EXAMPLE_RETRY_CAP {
        let x = loop {
            let x = rng.gen_range(1..g.order());
            if !k.contains(x) {
                break x;
            }
        };
        let plus = k.elements().translate(x).to_vec();
        let minus = k.elements().translate(g.neg(x)).to_vec();
        let lo = rest.saturating_sub(minus.len());
        let hi = rest.min(plus.len());
        let j = rng.gen_range(lo..=hi);
        let mut a = k.nonzero();
        for y in plus.choose_multiple(&mut rng, j).chain(minus.choose_multiple(&mut rng, rest - j)) {
            a.insert(*y);
        }
        if a.len() == size && a.intersection(k.elements())? == k.nonzero() && !a.spans() {
            return Ok(a);
        }
    }
    Err(Error::ConstructionFailed { attempts: EXAMPLE_RETRY_CAP })
}

/// `{+-g, +-2g, ..., +-((p+q-2)/2) g}` in `Z_pq`, `ord(g) = pq`.
pub fn make_example_2(p: usize, q: usize, gen: usize) -> Result<ElementSet> {
    odd_primes(p, q)?;
    if !in_window_2(p, q) {
        return Err(Error::Window(format!("(p, q) = ({p}, {q}) outside p < q <= p + floor(2 sqrt(p-2)) + 1")));
    }
    let g = Group::cyclic(p * q)?;
    if gen >= g.order() || g.element_order(gen) != p * q {
        return Err(Error::Precondition(format!("ord({gen}) is not {}", p * q)));
    }
    let a = ex2_set(&g, gen, (p + q - 2) / 2)?;
    if a.len() != p + q - 2 || a.spans() {
        return Err(Error::NotExtremal(format!("example set {a:?} is not extremal")));
    }
    Ok(a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunStatus {
    Complete,
    Partial,
    Failed,
}

/// Resumable position of an extremal enumeration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchCheckpoint {
    pub engine_version: String,
    pub group: Group,
    pub size: usize,
    pub orbit_dedup: bool,
    /// First unvisited node; `prefix[i]` is the branch taken at depth `i`.
    pub frontier: Cursor,
    pub records_emitted: u64,
    pub complete: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremalOptions {
    pub orbit_dedup: bool,
    /// Split the search into subtrees at this depth and run them in parallel.
    pub parallel: bool,
    pub split_depth: usize,
    /// Subtrees per parallel batch.
    pub batch: usize,
}

impl Default for ExtremalOptions {
    fn default() -> Self {
        ExtremalOptions { orbit_dedup: false, parallel: true, split_depth: 2, batch: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnumerationSummary {
    pub status: RunStatus,
    pub group: Group,
    pub size: usize,
    pub orbit_dedup: bool,
    /// Records emitted by this call.
    pub emitted: u64,
    /// Records emitted over all runs of this campaign.
    pub records_emitted: u64,
    pub nodes: u64,
    pub checkpoint: SearchCheckpoint,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Whether `C(|G|-1, cr-1)` candidates fit the budget.
pub fn enumeration_admitted(g: &Group, budget: &SearchBudget) -> Result<bool> {
    let size = extremal_size(g)?;
    Ok(budget.extended || binomial(g.order() - 1, size) <= DEFAULT_CANDIDATE_CAP)
}

fn record_for(g: &Group, set: Vec<usize>, orbit_size: Option<usize>) -> Result<ExtremalRecord> {
    let a = g.set_of(set)?;
    debug_assert!(!a.spans());
    let mut r = classify_unchecked(&a)?;
    r.orbit_size = orbit_size;
    Ok(r)
}

/// Streams every extremal set of `g` to `sink` in lexicographic order.
///
/// With a checkpoint the run continues where it stopped. When the budget
/// runs out the summary is `Partial` and carries the checkpoint to resume.
pub fn enumerate_extremal<F>(
    g: &Group,
    budget: &SearchBudget,
    opts: &ExtremalOptions,
    resume: Option<&SearchCheckpoint>,
    mut sink: F,
) -> Result<EnumerationSummary>
where
    F: FnMut(&ExtremalRecord) -> Result<()>,
{
    let size = extremal_size(g)?;
    if !enumeration_admitted(g, budget)? {
        return Err(Error::Precondition(format!(
            "C({}, {size}) candidates exceed the default cap; use extended mode",
            g.order() - 1
        )));
    }
    let eopts = EnumerationOptions { size, orbit_dedup: opts.orbit_dedup, target_prune: true };
    let (start, prior, done) = match resume {
        Some(ck) => {
            if ck.engine_version != ENGINE_VERSION {
                return Err(Error::Checkpoint(format!(
                    "checkpoint from {} cannot resume under {ENGINE_VERSION}",
                    ck.engine_version
                )));
            }
            if ck.group.invariant_factors() != g.invariant_factors()
                || ck.group.cyclic_orders() != g.cyclic_orders()
                || ck.size != size
                || ck.orbit_dedup != opts.orbit_dedup
            {
                return Err(Error::Checkpoint("checkpoint belongs to a different campaign".into()));
            }
            (ck.frontier.clone(), ck.records_emitted, ck.complete)
        }
        None => (Cursor::start(), 0, false),
    };
    let meter = budget.meter();
    let mut emitted = 0u64;
    let summary = |status, frontier: Cursor, emitted: u64, complete: bool| EnumerationSummary {
        status,
        group: g.clone(),
        size,
        orbit_dedup: opts.orbit_dedup,
        emitted,
        records_emitted: prior + emitted,
        nodes: meter.nodes(),
        checkpoint: SearchCheckpoint {
            engine_version: ENGINE_VERSION.to_string(),
            group: g.clone(),
            size,
            orbit_dedup: opts.orbit_dedup,
            frontier,
            records_emitted: prior + emitted,
            complete,
        },
    };
    if done {
        return Ok(summary(RunStatus::Complete, start, 0, true));
    }

    let mut top = Enumerator::resume(g, eopts, &start)?;
    if !opts.parallel {
        loop {
            match top.next_step(&meter) {
                Ok(Some(Step::Found { set, orbit_size })) => {
                    sink(&record_for(g, set, orbit_size)?)?;
                    emitted += 1;
                }
                Ok(Some(Step::Task(_))) => unreachable!("no split depth"),
                Ok(None) => return Ok(summary(RunStatus::Complete, top.cursor(), emitted, true)),
                Err(()) => return Ok(summary(RunStatus::Partial, top.cursor(), emitted, false)),
            }
        }
    }

    top = top.with_split_depth(opts.split_depth.max(1));
    enum Item {
        Found(Vec<usize>, Option<usize>),
        Task(Vec<usize>),
    }
    struct Done {
        records: Vec<ExtremalRecord>,
        stopped_at: Option<Cursor>,
    }
    loop {
        let mut batch = Vec::new();
        let mut tasks = 0;
        let mut top_stopped = false;
        let mut top_done = false;
        while tasks < opts.batch.max(1) {
            match top.next_step(&meter) {
                Ok(Some(Step::Found { set, orbit_size })) => batch.push(Item::Found(set, orbit_size)),
                Ok(Some(Step::Task(p))) => {
                    batch.push(Item::Task(p));
                    tasks += 1;
                }
                Ok(None) => {
                    top_done = true;
                    break;
                }
                Err(()) => {
                    top_stopped = true;
                    break;
                }
            }
        }
        let results: Vec<Done> = batch
            .into_par_iter()
            .map(|item| -> Result<Done> {
                match item {
                    Item::Found(set, o) => Ok(Done { records: vec![record_for(g, set, o)?], stopped_at: None }),
                    Item::Task(prefix) => {
                        let mut sub = Enumerator::subtree(g, eopts, &prefix)?;
                        let mut records = Vec::new();
                        loop {
                            match sub.next_step(&meter) {
                                Ok(Some(Step::Found { set, orbit_size })) => records.push(record_for(g, set, orbit_size)?),
                                Ok(Some(Step::Task(_))) => unreachable!("subtrees do not split"),
                                Ok(None) => return Ok(Done { records, stopped_at: None }),
                                Err(()) => return Ok(Done { records, stopped_at: Some(sub.cursor()) }),
                            }
                        }
                    }
                }
            })
            .collect::<Result<_>>()?;
        for d in results {
            for r in &d.records {
                sink(r)?;
                emitted += 1;
            }
            if let Some(c) = d.stopped_at {
                return Ok(summary(RunStatus::Partial, c, emitted, false));
            }
        }
        if top_stopped {
            return Ok(summary(RunStatus::Partial, top.cursor(), emitted, false));
        }
        if top_done {
            return Ok(summary(RunStatus::Complete, top.cursor(), emitted, true));
        }
    }
}

/// Collects every extremal record of `g` (no budget, no dedup).
pub fn all_extremal(g: &Group) -> Result<Vec<ExtremalRecord>> {
    let mut out = Vec::new();
    let s = enumerate_extremal(g, &SearchBudget::extended(), &ExtremalOptions::default(), None, |r| {
        out.push(r.clone());
        Ok(())
    })?;
    debug_assert_eq!(s.status, RunStatus::Complete);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Verified,
    Refuted,
    Partial,
}

/// Unit orbits among the extremal sets (`Z_n` only).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitStructure {
    pub orbits: usize,
    /// Orbit size -> number of orbits of that size.
    pub sizes: BTreeMap<usize, usize>,
    /// For the progression shape: each distinct set and the generators giving it.
    pub ex2_sets: Vec<(Vec<usize>, Vec<usize>)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConjectureReport {
    pub which: u8,
    pub p: usize,
    pub q: usize,
    pub group: Group,
    pub extremal_size: usize,
    pub verdict: Verdict,
    pub orbit_dedup: bool,
    pub extremal_count: u64,
    pub satisfying: u64,
    pub counterexamples: Vec<ElementSet>,
    pub orbit_structure: OrbitStructure,
    pub records: Vec<ExtremalRecord>,
}

fn orbit_structure(g: &Group, records: &[ExtremalRecord]) -> Result<OrbitStructure> {
    let n = g.order();
    let units: Vec<usize> = (1..n).filter(|&u| arith::gcd(u, n) == 1).collect();
    let mut seen = std::collections::HashSet::new();
    let mut sizes = BTreeMap::new();
    let mut orbits = 0;
    for r in records {
        if seen.contains(&r.set.to_vec()) {
            continue;
        }
        orbits += 1;
        let mut members = std::collections::HashSet::new();
        for &u in &units {
            members.insert(r.set.scale(u).to_vec());
        }
        *sizes.entry(members.len()).or_insert(0) += 1;
        seen.extend(members);
    }
    let mut ex2: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    let size = extremal_size(g)?;
    if size % 2 == 0 {
        for gen in g.generators() {
            ex2.entry(ex2_set(g, gen, size / 2)?.to_vec()).or_default().push(gen);
        }
    }
    Ok(OrbitStructure { orbits, sizes, ex2_sets: ex2.into_iter().collect() })
}

/// Enumerates all extremal sets of `Z_pq` and checks the conjectured
/// property: a complete subset (`which = 1`) or the progression shape
/// (`which = 2`).
pub fn check_conjecture(which: u8, p: usize, q: usize, budget: &SearchBudget) -> Result<ConjectureReport> {
    odd_primes(p, q)?;
    let ok = match which {
        1 => in_window_1(p, q),
        2 => in_window_2(p, q),
        _ => return Err(Error::Precondition(format!("unknown conjecture {which}"))),
    };
    if !ok {
        return Err(Error::Window(format!("(p, q) = ({p}, {q}) outside the window of conjecture {which}")));
    }
    let g = Group::cyclic(p * q)?;
    let mut records = Vec::new();
    let s = enumerate_extremal(&g, budget, &ExtremalOptions::default(), None, |r| {
        records.push(r.clone());
        Ok(())
    })?;
    let wanted = if which == 1 { Tag::HasCompleteSubset } else { Tag::ShapeEx2 };
    let counterexamples: Vec<ElementSet> = records.iter().filter(|r| !r.has(wanted)).map(|r| r.set.clone()).collect();
    let verdict = if !counterexamples.is_empty() {
        Verdict::Refuted
    } else if s.status == RunStatus::Complete {
        Verdict::Verified
    } else {
        Verdict::Partial
    };
    Ok(ConjectureReport {
        which,
        p,
        q,
        extremal_size: s.size,
        verdict,
        orbit_dedup: false,
        extremal_count: records.len() as u64,
        satisfying: (records.len() - counterexamples.len()) as u64,
        counterexamples,
        orbit_structure: orbit_structure(&g, &records)?,
        group: g,
        records,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MainBranch {
    /// `p = 2`, `|G| >= 36`: every extremal set is `H \ {0}`.
    Even,
    /// `p` odd, `|G|/p` prime `>= 2p + 3`: the three-coset shape.
    OddPrimeProduct,
}

/// Which hypothesis of the main structure theorem `g` meets, if any.
pub fn main_theorem_branch(g: &Group) -> Option<MainBranch> {
    let n = g.order();
    let p = g.smallest_prime_divisor();
    if p == 2 {
        return (n >= 36).then_some(MainBranch::Even);
    }
    let q = n / p;
    (n > p && arith::is_prime(q) && q >= 2 * p + 3).then_some(MainBranch::OddPrimeProduct)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TheoremReport {
    pub group: Group,
    pub branch: MainBranch,
    pub status: RunStatus,
    pub orbit_dedup: bool,
    pub extremal_size: usize,
    /// Records inspected (orbit representatives when deduplicating).
    pub representatives: u64,
    /// Extremal sets accounted for, orbit sizes included.
    pub extremal_count: u64,
    pub shape_counts: BTreeMap<Tag, u64>,
    pub violations: Vec<ExtremalRecord>,
    pub holds: bool,
    pub checkpoint: SearchCheckpoint,
}

/// Checks the main structure theorem on every extremal set of `g`.
pub fn verify_theorem_main(
    g: &Group,
    budget: &SearchBudget,
    opts: &ExtremalOptions,
    resume: Option<&SearchCheckpoint>,
) -> Result<TheoremReport> {
    let branch = main_theorem_branch(g)
        .ok_or_else(|| Error::Precondition(format!("{g} does not meet the hypotheses of the structure theorem")))?;
    let want = match branch {
        MainBranch::Even => Tag::ShapeI,
        MainBranch::OddPrimeProduct => Tag::ShapeIi,
    };
    let mut shape_counts = BTreeMap::new();
    let mut violations = Vec::new();
    let mut reps = 0u64;
    let mut total = 0u64;
    let s = enumerate_extremal(g, budget, opts, resume, |r| {
        reps += 1;
        total += r.weight();
        for t in &r.tags {
            *shape_counts.entry(*t).or_insert(0) += r.weight();
        }
        if !r.has(want) {
            violations.push(r.clone());
        }
        Ok(())
    })?;
    Ok(TheoremReport {
        group: g.clone(),
        branch,
        status: s.status,
        orbit_dedup: opts.orbit_dedup,
        extremal_size: s.size,
        representatives: reps,
        extremal_count: total,
        shape_counts,
        holds: violations.is_empty(),
        violations,
        checkpoint: s.checkpoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: usize) -> Group {
        Group::cyclic(n).unwrap()
    }

    #[test]
    fn shape_examples() {
        let g = z(16);
        let evens = g.set_of((2..16).step_by(2)).unwrap();
        let r = classify(&evens).unwrap();
        assert!(r.has(Tag::ShapeI) && r.has(Tag::ShapeIi) && r.has(Tag::HasCompleteSubset));
        assert!(verify_witnesses(&r));

        let g = z(15);
        let a = g.set_of([1, 2, 3, 12, 13, 14]).unwrap();
        let r = classify(&a).unwrap();
        assert!(r.has(Tag::ShapeEx2));
        assert_eq!(r.witnesses.shape_ex2, Some(1));
        assert!(!r.has(Tag::HasCompleteSubset));
        assert!(verify_witnesses(&r));

        assert!(matches!(classify(&g.set_of([1, 2]).unwrap()), Err(Error::NotExtremal(_))));
        assert!(matches!(classify(&g.nonzero_set()), Err(Error::NotExtremal(_))));
    }

    #[test]
    fn complete_subset_examples() {
        let g = z(15);
        let a = g.set_of([1, 3, 6, 9, 12]).unwrap();
        assert_eq!(contains_complete_subset(&a).unwrap().unwrap().elements().to_vec(), vec![0, 3, 6, 9, 12]);
        assert!(contains_complete_subset(&z(5).set_of([1]).unwrap()).unwrap().is_none());
        assert!(contains_complete_subset(&g.set_of([1, 2, 3, 12, 13, 14]).unwrap()).unwrap().is_none());
    }

    #[test]
    fn profile_examples() {
        let g = z(15);
        let h = g.subgroups_of_order(5).unwrap().remove(0);
        let a = g.set_of([1, 2, 3, 12, 13, 14]).unwrap();
        let pr = coset_profile(&a, &h).unwrap();
        assert_eq!((pr.l0, pr.k, pr.lengths.clone()), (2, 2, vec![2, 2]));
        assert_eq!(pr.r, [0, 2, 0, 0, 0]);
        assert_eq!(pr.m, [2, 2, 0, 0, 0]);
        let pr = coset_profile(&h.nonzero(), &h).unwrap();
        assert_eq!((pr.l0, pr.k), (4, 0));
        assert!(coset_profile(&a, &g.subgroups_of_order(1).unwrap()[0]).is_err());
        assert!(coset_profile(&a, &g.subgroups_of_order(15).unwrap()[0]).is_err());
    }

    #[test]
    fn examples_are_extremal() {
        for (p, q) in [(3, 5), (5, 7)] {
            let a = make_example_2(p, q, 1).unwrap();
            assert_eq!(a.len(), p + q - 2);
            assert!(!a.spans());
        }
        assert_eq!(make_example_2(3, 5, 1).unwrap().to_vec(), vec![1, 2, 3, 12, 13, 14]);
        assert!(matches!(make_example_2(3, 11, 1), Err(Error::Window(_))));
        assert!(make_example_2(3, 5, 3).is_err());

        let a = make_example_1(5, 11, 7).unwrap();
        assert_eq!(a.len(), 13);
        assert!(!a.spans());
        let r = classify(&a).unwrap();
        assert!(r.has(Tag::ShapeEx1) && r.has(Tag::HasCompleteSubset));
        assert!(matches!(make_example_1(3, 5, 0), Err(Error::Window(_))));
    }

    #[test]
    fn z15_campaign() {
        let recs = all_extremal(&z(15)).unwrap();
        assert_eq!(recs.len(), 28);
        for r in &recs {
            assert!(verify_witnesses(r));
            assert!(check_complete_subgroups(&r.set).unwrap().holds);
        }
        let rep = check_conjecture(2, 3, 5, &SearchBudget::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Refuted);
        assert_eq!(rep.satisfying, 4);
        assert!(rep.counterexamples.iter().any(|c| c.to_vec() == vec![1, 2, 3, 4, 13, 14]));
    }

    #[test]
    fn checkpoint_resume_matches() {
        let g = z(15);
        let full = all_extremal(&g).unwrap();
        for parallel in [false, true] {
            let opts = ExtremalOptions { parallel, batch: 3, ..ExtremalOptions::default() };
            let mut got = Vec::new();
            let mut ck = None;
            let mut rounds = 0;
            loop {
                rounds += 1;
                let s = enumerate_extremal(&g, &SearchBudget::default().with_max_nodes(40), &opts, ck.as_ref(), |r| {
                    got.push(r.clone());
                    Ok(())
                })
                .unwrap();
                assert_eq!(s.records_emitted, got.len() as u64);
                if s.status == RunStatus::Complete {
                    break;
                }
                ck = Some(s.checkpoint);
            }
            assert!(rounds > 1);
            assert_eq!(got, full, "parallel {parallel}");
        }
    }

    #[test]
    fn stale_checkpoints_are_refused() {
        let g = z(15);
        let s = enumerate_extremal(&g, &SearchBudget::default(), &ExtremalOptions::default(), None, |_| Ok(())).unwrap();
        let mut ck = s.checkpoint;
        let again = enumerate_extremal(&g, &SearchBudget::default(), &ExtremalOptions::default(), Some(&ck), |_| {
            panic!("complete checkpoint re-ran")
        })
        .unwrap();
        assert_eq!(again.emitted, 0);
        ck.engine_version = "other".into();
        assert!(matches!(
            enumerate_extremal(&g, &SearchBudget::default(), &ExtremalOptions::default(), Some(&ck), |_| Ok(())),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn main_theorem_hypotheses() {
        assert_eq!(main_theorem_branch(&z(36)), Some(MainBranch::Even));
        assert_eq!(main_theorem_branch(&z(33)), Some(MainBranch::OddPrimeProduct));
        assert_eq!(main_theorem_branch(&z(16)), None);
        assert_eq!(main_theorem_branch(&z(21)), None);
        assert_eq!(main_theorem_branch(&z(14)), None);
        assert!(verify_theorem_main(&z(16), &SearchBudget::default(), &ExtremalOptions::default(), None).is_err());
    }

    #[test]
    fn z14_is_outside_the_even_branch() {
        // |G|/p = 7 >= 2p + 3 with p = 2, yet not every extremal set is H \ {0}
        let recs = all_extremal(&z(14)).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs.iter().any(|r| r.set.to_vec() == vec![1, 2, 3, 11, 12, 13] && !r.has(Tag::ShapeI)));
    }

    #[test]
    fn shape_b_hypotheses() {
        assert!(!meets_shape_b_hypotheses(&z(15)));
        assert!(meets_shape_b_hypotheses(&z(3 * 63)));
        assert!(!meets_shape_b_hypotheses(&z(3 * 61)));
        assert!(meets_shape_b_hypotheses(&z(5 * 39)));
        assert!(!meets_shape_b_hypotheses(&z(5 * 37)));
    }
}
