//! Depth-first search over subsets of `G \ {0}` in ascending index order
//! with incrementally maintained subset-sum bitsets.
//!
//! Two searches share the machinery:
//!
//! * [`max_avoiding`] finds a largest `A` with a fixed target `t` outside
//!   `Sigma(A)`. Candidates `x` with `t - x` in `Sigma°(prefix)` are dead, so
//!   the live pool bounds the subtree.
//! * [`Enumerator`] lists every `A` of a fixed size with `Sigma(A) != G` in
//!   lexicographic order, and can be suspended at any node as a [`Cursor`].

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::arith;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::sumset::extend_sums;
use crate::words::{self, Ones};

/// Default largest order for exact critical-number search.
pub const DEFAULT_EXACT_ORDER: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Largest group order searched without `extended`.
    pub max_order: usize,
    /// Lift the order cap; node and time limits still apply.
    pub extended: bool,
    pub max_nodes: Option<u64>,
    #[serde(with = "opt_secs")]
    pub time_limit: Option<Duration>,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_order: DEFAULT_EXACT_ORDER, extended: false, max_nodes: None, time_limit: None }
    }
}

impl SearchBudget {
    pub fn extended() -> Self {
        SearchBudget { extended: true, ..SearchBudget::default() }
    }

    pub fn with_max_nodes(mut self, n: u64) -> Self {
        self.max_nodes = Some(n);
        self
    }

    pub fn with_time_limit(mut self, d: Duration) -> Self {
        self.time_limit = Some(d);
        self
    }

    pub fn admits(&self, order: usize) -> bool {
        self.extended || order <= self.max_order
    }

    pub fn meter(&self) -> Meter {
        Meter::new(self.max_nodes, self.time_limit)
    }
}

mod opt_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_some(&d.as_secs_f64()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map(Duration::from_secs_f64))
    }
}

/// Shared node counter and stop flag for one search.
#[derive(Debug)]
pub struct Meter {
    nodes: AtomicU64,
    max_nodes: Option<u64>,
    deadline: Option<Instant>,
    stopped: AtomicBool,
}

impl Meter {
    pub fn new(max_nodes: Option<u64>, time_limit: Option<Duration>) -> Meter {
        Meter {
            nodes: AtomicU64::new(0),
            max_nodes,
            deadline: time_limit.map(|d| Instant::now() + d),
            stopped: AtomicBool::new(false),
        }
    }

    pub fn unlimited() -> Meter {
        Meter::new(None, None)
    }

    /// Counts one node; false once the budget is spent.
    #[inline]
    pub fn tick(&self) -> bool {
        if self.stopped.load(Ordering::Relaxed) {
            return false;
        }
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        let over = self.max_nodes.is_some_and(|m| n > m)
            || (n & 0xfff == 0 && self.deadline.is_some_and(|d| Instant::now() >= d));
        if over {
            self.stopped.store(true, Ordering::Relaxed);
            return false;
        }
        true
    }

    /// Checks the deadline without counting a node.
    pub fn check(&self) -> bool {
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.stopped.store(true, Ordering::Relaxed);
        }
        !self.stopped.load(Ordering::Relaxed)
    }

    pub fn nodes(&self) -> u64 {
        self.nodes.load(Ordering::Relaxed)
    }

    pub fn exhausted(&self) -> bool {
        self.stopped.load(Ordering::Relaxed)
    }
}

/// Knobs for [`max_avoiding`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSearchOptions {
    /// Drop candidates that would put the target into `Sigma`, and cut
    /// subtrees whose live pool cannot beat the incumbent.
    pub prune: bool,
}

impl Default for TargetSearchOptions {
    fn default() -> Self {
        TargetSearchOptions { prune: true }
    }
}

/// Lexicographically first among the largest `A` in `G \ {0}` with `target`
/// outside `Sigma(A)`; `None` if the meter ran out.
pub fn max_avoiding(group: &Group, target: usize, opts: TargetSearchOptions, meter: &Meter) -> Option<Vec<usize>> {
    assert!(target < group.order());
    let n = group.order();
    let w = group.word_len();
    let mut s = TargetSearch {
        group,
        n,
        w,
        target,
        sums: vec![0; (n + 1) * w],
        negs: vec![0; (n + 1) * w],
        prefix: Vec::with_capacity(n),
        best: Vec::new(),
        meter,
        aborted: false,
    };
    if opts.prune {
        s.dfs_pruned(1);
    } else {
        s.dfs_plain(1);
    }
    (!s.aborted).then_some(s.best)
}

struct TargetSearch<'a> {
    group: &'a Group,
    n: usize,
    w: usize,
    target: usize,
    // per-depth Sigma(prefix) and -Sigma(prefix)
    sums: Vec<u64>,
    negs: Vec<u64>,
    prefix: Vec<usize>,
    best: Vec<usize>,
    meter: &'a Meter,
    aborted: bool,
}

impl TargetSearch<'_> {
    fn push(&mut self, x: usize) {
        let d = self.prefix.len();
        let w = self.w;
        let (lo, hi) = self.sums.split_at_mut((d + 1) * w);
        extend_sums(self.group, &lo[d * w..], x, &mut hi[..w]);
        let (lo, hi) = self.negs.split_at_mut((d + 1) * w);
        extend_sums(self.group, &lo[d * w..], self.group.neg(x), &mut hi[..w]);
        self.prefix.push(x);
    }

    fn dfs_pruned(&mut self, start: usize) {
        if !self.meter.tick() {
            self.aborted = true;
            return;
        }
        let d = self.prefix.len();
        let w = self.w;
        if d > self.best.len() {
            self.best = self.prefix.clone();
        }
        // forbidden = t - Sigma°(prefix)
        let mut neg_zero = self.negs[d * w..(d + 1) * w].to_vec();
        words::set(&mut neg_zero, 0);
        let mut live = vec![0u64; w];
        self.group.translate_or(&neg_zero, self.target, &mut live);
        for v in live.iter_mut() {
            *v = !*v;
        }
        live[w - 1] &= words::tail_mask(self.n);
        for i in 0..start.min(self.n) {
            words::clear(&mut live, i);
        }
        let mut remaining = words::count(&live);
        if d + remaining <= self.best.len() {
            return;
        }
        let cands: Vec<usize> = Ones::new(&live).collect();
        for x in cands {
            remaining -= 1;
            if d + 1 + remaining <= self.best.len() {
                break;
            }
            self.push(x);
            self.dfs_pruned(x + 1);
            self.prefix.pop();
            if self.aborted {
                return;
            }
        }
    }

    fn dfs_plain(&mut self, start: usize) {
        if !self.meter.tick() {
            self.aborted = true;
            return;
        }
        let d = self.prefix.len();
        let w = self.w;
        let hit = d > 0 && words::get(&self.sums[d * w..(d + 1) * w], self.target);
        if !hit && d > self.best.len() {
            self.best = self.prefix.clone();
        }
        for x in start..self.n {
            self.push(x);
            self.dfs_plain(x + 1);
            self.prefix.pop();
            if self.aborted {
                return;
            }
        }
    }
}

/// Units of `Z_n` other than 1, for multiplication automorphisms.
pub(crate) fn nontrivial_units(n: usize) -> Vec<usize> {
    (2..n).filter(|&u| arith::gcd(u, n) == 1).collect()
}

/// Suspended position of an [`Enumerator`]: every set lexicographically
/// before `prefix ++ [next]` (with no further elements) has been visited.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cursor {
    pub prefix: Vec<usize>,
    pub next: usize,
}

impl Cursor {
    pub fn start() -> Cursor {
        Cursor { prefix: Vec::new(), next: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationOptions {
    /// Cardinality of the sets to list.
    pub size: usize,
    /// Emit only the lexicographically least set of each orbit under
    /// multiplication by units (single-factor cyclic groups only).
    pub orbit_dedup: bool,
    /// Cut prefixes for which no missed target leaves enough live candidates.
    pub target_prune: bool,
}

impl EnumerationOptions {
    pub fn new(size: usize) -> Self {
        EnumerationOptions { size, orbit_dedup: false, target_prune: true }
    }
}

/// One unit of enumeration output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// A non-spanning set of the requested size, with its unit-orbit size
    /// when deduplicating.
    Found { set: Vec<usize>, orbit_size: Option<usize> },
    /// A subtree rooted at this prefix, handed out at the split depth.
    Task(Vec<usize>),
}

/// Lexicographic enumeration of `size`-subsets `A` of `G \ {0}` with
/// `Sigma(A) != G`.
pub struct Enumerator {
    group: Group,
    n: usize,
    w: usize,
    opts: EnumerationOptions,
    units: Vec<usize>,
    prefix: Vec<usize>,
    sums: Vec<u64>,
    negs: Vec<u64>,
    next: usize,
    root_len: usize,
    split_depth: Option<usize>,
    done: bool,
}

impl Enumerator {
    pub fn new(group: &Group, opts: EnumerationOptions) -> Result<Enumerator> {
        Enumerator::resume(group, opts, &Cursor::start())
    }

    /// Rebuilds the DFS state at `cursor`.
    pub fn resume(group: &Group, opts: EnumerationOptions, cursor: &Cursor) -> Result<Enumerator> {
        let mut e = Enumerator::bare(group, opts)?;
        e.restore(cursor)?;
        Ok(e)
    }

    /// Enumerator restricted to the subtree below `prefix`.
    pub fn subtree(group: &Group, opts: EnumerationOptions, prefix: &[usize]) -> Result<Enumerator> {
        let next = prefix.last().map_or(1, |&l| l + 1);
        let mut e = Enumerator::resume(group, opts, &Cursor { prefix: prefix.to_vec(), next })?;
        e.root_len = prefix.len();
        Ok(e)
    }

    fn bare(group: &Group, opts: EnumerationOptions) -> Result<Enumerator> {
        let n = group.order();
        if opts.size == 0 || opts.size >= n {
            return Err(Error::Precondition(format!("set size {} outside [1, {}]", opts.size, n - 1)));
        }
        if opts.orbit_dedup && !group.is_single_cyclic() {
            return Err(Error::Precondition("orbit deduplication needs a single cyclic factor".into()));
        }
        let w = group.word_len();
        Ok(Enumerator {
            group: group.clone(),
            n,
            w,
            opts,
            units: if opts.orbit_dedup { nontrivial_units(n) } else { Vec::new() },
            prefix: Vec::with_capacity(opts.size),
            sums: vec![0; (opts.size + 1) * w],
            negs: vec![0; (opts.size + 1) * w],
            next: 1,
            root_len: 0,
            split_depth: None,
            done: false,
        })
    }

    fn restore(&mut self, cursor: &Cursor) -> Result<()> {
        let bad = |why: &str| Error::Checkpoint(format!("cursor {cursor:?}: {why}"));
        if cursor.prefix.len() >= self.opts.size {
            return Err(bad("prefix is as long as the target size"));
        }
        if cursor.prefix.windows(2).any(|p| p[0] >= p[1]) {
            return Err(bad("prefix not strictly ascending"));
        }
        if cursor.prefix.iter().any(|&x| x == 0 || x >= self.n) {
            return Err(bad("prefix element out of range"));
        }
        if cursor.next == 0 || cursor.next > self.n || cursor.prefix.last().is_some_and(|&l| cursor.next <= l) {
            return Err(bad("next candidate inconsistent with prefix"));
        }
        self.prefix.clear();
        for &x in &cursor.prefix {
            self.push(x);
        }
        self.next = cursor.next;
        self.done = false;
        Ok(())
    }

    pub fn with_split_depth(mut self, depth: usize) -> Self {
        self.split_depth = Some(depth);
        self
    }

    pub fn cursor(&self) -> Cursor {
        Cursor { prefix: self.prefix.clone(), next: self.next }
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    fn push(&mut self, x: usize) {
        let d = self.prefix.len();
        let w = self.w;
        let (lo, hi) = self.sums.split_at_mut((d + 1) * w);
        extend_sums(&self.group, &lo[d * w..], x, &mut hi[..w]);
        let (lo, hi) = self.negs.split_at_mut((d + 1) * w);
        extend_sums(&self.group, &lo[d * w..], self.group.neg(x), &mut hi[..w]);
        self.prefix.push(x);
    }

    /// Whether some missed target of `Sigma(S)` (stored at depth `d`) leaves
    /// `need` live candidates above `last`.
    fn feasible(&self, d: usize, last: usize, need: usize) -> bool {
        if need == 0 {
            return true;
        }
        let w = self.w;
        let pool = self.n - 1 - last;
        let sums = &self.sums[d * w..(d + 1) * w];
        let zero_in = words::get(sums, 0);
        let sigma_zero = words::count(sums) + usize::from(!zero_in);
        if pool >= need + sigma_zero {
            return true;
        }
        let mut neg_zero = self.negs[d * w..(d + 1) * w].to_vec();
        words::set(&mut neg_zero, 0);
        let mut above = vec![0u64; w];
        words::fill(&mut above, self.n);
        for i in 0..=last {
            words::clear(&mut above, i);
        }
        let mut forbidden = vec![0u64; w];
        for wi in 0..w {
            let mut missed = !sums[wi];
            if wi == w - 1 {
                missed &= words::tail_mask(self.n);
            }
            while missed != 0 {
                let t = wi * 64 + missed.trailing_zeros() as usize;
                missed &= missed - 1;
                forbidden.iter_mut().for_each(|v| *v = 0);
                self.group.translate_or(&neg_zero, t, &mut forbidden);
                let live: usize = above.iter().zip(&forbidden).map(|(a, f)| (a & !f).count_ones() as usize).sum();
                if live >= need {
                    return true;
                }
            }
        }
        false
    }

    /// Returns the orbit size if `set` is the least element of its unit orbit.
    fn canonical_orbit(&self, set: &[usize]) -> Option<usize> {
        let mut images: Vec<Vec<usize>> = vec![set.to_vec()];
        for &u in &self.units {
            let mut img: Vec<usize> = set.iter().map(|&x| x * u % self.n).collect();
            img.sort_unstable();
            if img.as_slice() < set {
                return None;
            }
            images.push(img);
        }
        images.sort_unstable();
        images.dedup();
        Some(images.len())
    }

    /// Advances to the next output. `Ok(None)` when exhausted; `Err(())`
    /// when the meter stops the search, leaving [`Enumerator::cursor`] at
    /// the first unvisited node.
    #[allow(clippy::result_unit_err)]
    pub fn next_step(&mut self, meter: &Meter) -> std::result::Result<Option<Step>, ()> {
        let size = self.opts.size;
        loop {
            if self.done {
                return Ok(None);
            }
            let s = self.prefix.len();
            let last_allowed = self.n - (size - s);
            if self.next > last_allowed {
                if s == self.root_len {
                    self.done = true;
                    return Ok(None);
                }
                let e = self.prefix.pop().unwrap();
                self.next = e + 1;
                continue;
            }
            let x = self.next;
            if !meter.tick() {
                return Err(());
            }
            self.next += 1;

            if self.opts.orbit_dedup {
                let ok = match self.prefix.first() {
                    None => self.n % x == 0,
                    Some(&a1) => arith::gcd(x, self.n) >= a1,
                };
                if !ok {
                    continue;
                }
            }

            let w = self.w;
            {
                let (lo, hi) = self.sums.split_at_mut((s + 1) * w);
                extend_sums(&self.group, &lo[s * w..], x, &mut hi[..w]);
            }
            if words::is_full(&self.sums[(s + 1) * w..(s + 2) * w], self.n) {
                continue;
            }
            if s + 1 == size {
                let mut set = self.prefix.clone();
                set.push(x);
                if self.opts.orbit_dedup {
                    match self.canonical_orbit(&set) {
                        Some(k) => return Ok(Some(Step::Found { set, orbit_size: Some(k) })),
                        None => continue,
                    }
                }
                return Ok(Some(Step::Found { set, orbit_size: None }));
            }
            {
                let (lo, hi) = self.negs.split_at_mut((s + 1) * w);
                extend_sums(&self.group, &lo[s * w..], self.group.neg(x), &mut hi[..w]);
            }
            if self.opts.target_prune && !self.feasible(s + 1, x, size - s - 1) {
                continue;
            }
            if self.split_depth == Some(s + 1) {
                let mut p = self.prefix.clone();
                p.push(x);
                return Ok(Some(Step::Task(p)));
            }
            self.prefix.push(x);
            self.next = x + 1;
        }
    }
}
