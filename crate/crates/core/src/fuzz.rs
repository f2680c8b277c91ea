//! Seeded fuzz campaigns for the checks in [`crate::bounds`].
//!
//! Trial `i` of a campaign draws from its own ChaCha stream (`seed`, stream
//! `i`), so reports do not depend on thread scheduling. Some lemmas also get
//! exhaustive sub-suites over every instance of a fixed small size.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::{self, abelian_groups_of_order, isqrt};
use crate::bounds::{self, Lemma};
use crate::error::{Error, Result};
use crate::group::{ElementSet, Group};
use crate::sumset::Sequence;

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 0x5eed_2024;
pub const DEFAULT_MAX_P: usize = 31;
/// Counterexamples kept verbatim per suite; the total is always counted.
pub const MAX_STORED_VIOLATIONS: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FuzzConfig {
    pub lemma: Lemma,
    pub trials: u64,
    pub seed: u64,
    /// Largest prime used by the `Z_p` lemmas.
    pub max_p: usize,
    /// Also run the exhaustive sub-suites.
    pub exhaustive: bool,
}

impl FuzzConfig {
    pub fn new(lemma: Lemma) -> Self {
        FuzzConfig { lemma, trials: DEFAULT_TRIALS, seed: DEFAULT_SEED, max_p: DEFAULT_MAX_P, exhaustive: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubSuite {
    pub name: String,
    /// Non-gating suites are reported but do not decide `passed`.
    pub gating: bool,
    pub cases: u64,
    pub applicable: u64,
    pub violation_count: u64,
    pub violations: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FuzzReport {
    pub lemma: Lemma,
    pub trials: u64,
    pub seed: u64,
    pub max_p: usize,
    pub applicable: u64,
    pub violation_count: u64,
    pub violations: Vec<Value>,
    pub sub_suites: Vec<SubSuite>,
    pub passed: bool,
}

/// Result of one instance: whether the hypothesis applied and, if the
/// conclusion failed, the counterexample.
struct Outcome {
    applicable: bool,
    violation: Option<Value>,
}

impl Outcome {
    fn skip() -> Outcome {
        Outcome { applicable: false, violation: None }
    }

    fn check(ok: bool, evidence: impl FnOnce() -> Value) -> Outcome {
        Outcome { applicable: true, violation: (!ok).then(evidence) }
    }
}

#[derive(Default)]
struct Tally {
    cases: u64,
    applicable: u64,
    violation_count: u64,
    violations: Vec<Value>,
}

impl Tally {
    fn add(&mut self, o: Outcome) {
        self.cases += 1;
        self.applicable += u64::from(o.applicable);
        if let Some(v) = o.violation {
            self.violation_count += 1;
            if self.violations.len() < MAX_STORED_VIOLATIONS {
                self.violations.push(v);
            }
        }
    }

    fn into_suite(self, name: &str, gating: bool) -> SubSuite {
        SubSuite {
            name: name.to_string(),
            gating,
            cases: self.cases,
            applicable: self.applicable,
            violation_count: self.violation_count,
            violations: self.violations,
        }
    }
}

fn tally(outcomes: impl IntoIterator<Item = Outcome>) -> Tally {
    let mut t = Tally::default();
    outcomes.into_iter().for_each(|o| t.add(o));
    t
}

struct Pools {
    primes: Vec<Group>,
    small: Vec<Group>,
    mid: Vec<Group>,
}

impl Pools {
    fn new(max_p: usize) -> Result<Pools> {
        if max_p < 5 {
            return Err(Error::Precondition(format!("max_p = {max_p} must be at least 5")));
        }
        let primes = (3..=max_p).filter(|&p| arith::is_prime(p)).map(Group::cyclic).collect::<Result<_>>()?;
        let groups = |lo: usize, hi: usize| -> Result<Vec<Group>> {
            (lo..=hi).flat_map(abelian_groups_of_order).map(|s| Group::new(&s)).collect()
        };
        Ok(Pools { primes, small: groups(3, 36)?, mid: groups(40, 60)? })
    }

    fn prime<R: Rng>(&self, rng: &mut R, min: usize) -> &Group {
        let eligible: Vec<&Group> = self.primes.iter().filter(|g| g.order() >= min).collect();
        eligible.choose(rng).expect("prime pool nonempty")
    }
}

fn sample<R: Rng>(g: &Group, pool: &[usize], k: usize, rng: &mut R) -> ElementSet {
    g.set_of(pool.choose_multiple(rng, k).copied()).expect("pool inside group")
}

fn random_set<R: Rng>(g: &Group, size: usize, nonzero: bool, rng: &mut R) -> ElementSet {
    let pool: Vec<usize> = (usize::from(nonzero)..g.order()).collect();
    sample(g, &pool, size, rng)
}

/// `{a, a+d, ..., a+(len-1)d}` in `Z_p`.
fn progression(g: &Group, a: usize, d: usize, len: usize) -> ElementSet {
    let p = g.order();
    g.set_of((0..len).map(|i| (a + i * d) % p)).unwrap()
}

fn sets_json(sets: &[ElementSet]) -> Value {
    json!(sets.iter().map(ElementSet::to_vec).collect::<Vec<_>>())
}

fn trial(lemma: Lemma, pools: &Pools, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    Ok(match lemma {
        Lemma::Folk => {
            let g = pools.small.choose(rng).unwrap();
            let n = g.order();
            let s1 = rng.gen_range(1..=n);
            let s2 = if rng.gen_bool(0.5) { rng.gen_range((n + 1).saturating_sub(s1).max(1)..=n) } else { rng.gen_range(1..=n) };
            let a = random_set(g, s1, false, rng);
            let b = random_set(g, s2, false, rng);
            let r = bounds::check_folk_lemma(&a, &b)?;
            if !r.applicable {
                return Ok(Outcome::skip());
            }
            Outcome::check(r.holds, || json!({"group": g, "sets": sets_json(&[a, b]), "report": r}))
        }
        Lemma::Hamidoune => {
            let g = pools.mid.choose(rng).unwrap();
            let n = g.order();
            let subs: Vec<_> = g.all_subgroups()?.into_iter().filter(|h| !h.is_full() && h.order() >= 14).collect();
            let a = if rng.gen_bool(0.5) && !subs.is_empty() {
                let h = subs.choose(rng).unwrap();
                let inside = h.nonzero().to_vec();
                let outside: Vec<usize> = (1..n).filter(|&x| !h.contains(x)).collect();
                let k = rng.gen_range(13..=inside.len());
                let mut a = sample(g, &inside, k, rng);
                a.insert(*outside.choose(rng).unwrap());
                a
            } else {
                let k = rng.gen_range(14..n);
                random_set(g, k, true, rng)
            };
            let r = bounds::check_hamidoune_dichotomy(&a)?;
            Outcome::check(r.holds, || json!({"group": g, "set": a, "report": r}))
        }
        Lemma::CauchyDavenport => {
            let g = pools.prime(rng, 3);
            let h = rng.gen_range(1..=4);
            let sets: Vec<ElementSet> =
                (0..h).map(|_| random_set(g, rng.gen_range(1..=g.order()), false, rng)).collect();
            let r = bounds::check_cauchy_davenport(&sets)?;
            Outcome::check(r.holds, || json!({"group": g, "sets": sets_json(&sets), "report": r}))
        }
        Lemma::Diderrich => {
            let g = pools.prime(rng, 3);
            let p = g.order();
            let h = rng.gen_range(1..=5usize.min(p - 1));
            let sets: Vec<ElementSet> = if rng.gen_bool(0.75) {
                let diffs: Vec<usize> = (1..p).collect();
                let diffs: Vec<usize> = diffs.choose_multiple(rng, h).copied().collect();
                let odd = rng.gen_bool(0.5).then(|| rng.gen_range(0..h));
                (0..h)
                    .map(|i| {
                        let len = rng.gen_range(1..=p);
                        if Some(i) == odd {
                            random_set(g, len, false, rng)
                        } else {
                            progression(g, rng.gen_range(0..p), diffs[i], len)
                        }
                    })
                    .collect()
            } else {
                (0..h).map(|_| random_set(g, rng.gen_range(1..=p), false, rng)).collect()
            };
            let r = bounds::check_diderrich(&sets)?;
            match &r.bound {
                Some(b) => Outcome::check(b.holds, || json!({"group": g, "sets": sets_json(&sets), "report": r})),
                None => Outcome::skip(),
            }
        }
        Lemma::Vosper => {
            let g = pools.prime(rng, 5);
            let p = g.order();
            let (b1, b2) = if rng.gen_bool(0.5) {
                let d = rng.gen_range(1..p);
                let d2 = if rng.gen_bool(0.5) { d } else { p - d };
                (
                    progression(g, rng.gen_range(0..p), d, rng.gen_range(2..=p - 2)),
                    progression(g, rng.gen_range(0..p), d2, rng.gen_range(2..=p - 2)),
                )
            } else {
                (
                    random_set(g, rng.gen_range(2..=p - 2), false, rng),
                    random_set(g, rng.gen_range(2..=p - 2), false, rng),
                )
            };
            let r = bounds::check_vosper(&b1, &b2)?;
            if !r.triggered {
                return Ok(Outcome::skip());
            }
            Outcome::check(r.holds, || json!({"group": g, "sets": sets_json(&[b1, b2]), "report": r}))
        }
        Lemma::ThreeFacts => {
            let g = pools.prime(rng, 3);
            let p = g.order();
            let k = if rng.gen_bool(0.25) { isqrt(4 * p - 7).min(p - 1) } else { rng.gen_range(1..p) };
            let a = random_set(g, k, true, rng);
            let h = rng.gen_range(1..=k);
            let r = bounds::check_three_facts(&a, h)?;
            Outcome::check(r.holds(), || json!({"group": g, "set": a, "h": h, "report": r}))
        }
        Lemma::SigmaGrowth => {
            let g = pools.small.choose(rng).unwrap();
            let a = random_set(g, rng.gen_range(1..g.order()), true, rng);
            let r = bounds::check_sigma_growth(&a)?;
            Outcome::check(r.holds, || json!({"group": g, "set": a, "report": r}))
        }
        Lemma::SigmaZeroGrowth => {
            let g = pools.prime(rng, 3);
            let a = random_set(g, rng.gen_range(0..g.order()), true, rng);
            let r = bounds::check_sigma_zero_growth(&a)?;
            Outcome::check(r.holds, || json!({"group": g, "set": a, "report": r}))
        }
        Lemma::SequenceSums => {
            let g = pools.prime(rng, 3);
            let p = g.order();
            let len = rng.gen_range(2..=2 * p);
            let terms: Vec<usize> = if rng.gen_bool(0.3) {
                let x = rng.gen_range(1..p);
                (0..len).map(|_| if rng.gen_bool(0.5) { x } else { p - x }).collect()
            } else {
                (0..len).map(|_| rng.gen_range(1..p)).collect()
            };
            let t = Sequence::new(g, terms.clone())?;
            let r = bounds::check_sequence_sums(&t)?;
            Outcome::check(r.bound.holds && r.characterization_holds, || {
                json!({"group": g, "sequence": terms, "report": r})
            })
        }
    })
}

/// All `k`-subsets of `pool`, in lexicographic order.
fn combinations(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn go(pool: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..pool.len() {
            if pool.len() - i < k - cur.len() {
                break;
            }
            cur.push(pool[i]);
            go(pool, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(pool, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Nondecreasing sequences of length `k` over `pool`: one per multiset.
fn multisets(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn go(pool: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..pool.len() {
            cur.push(pool[i]);
            go(pool, k, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(pool, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// `Sigma_h(A) = Z_p` for every `A` of size `size` (with or without 0), `h = floor(size/2)`.
fn restricted_full_suite(p: usize, size: usize, with_zero: bool) -> Result<Tally> {
    let g = Group::cyclic(p)?;
    let nonzero: Vec<usize> = (1..p).collect();
    let k = size - usize::from(with_zero);
    let h = size / 2;
    let outcomes = combinations(&nonzero, k)
        .into_par_iter()
        .map(|mut s| {
            if with_zero {
                s.insert(0, 0);
            }
            let a = g.set_of(s)?;
            let n = crate::sumset::restricted_sums(&Sequence::from(&a), h)?.len();
            Ok(Outcome::check(n == p, || json!({"group": &g, "set": &a, "h": h, "restricted_sums_size": n})))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tally(outcomes))
}

fn sums_full_suite(p: usize, with_zero: bool) -> Result<Tally> {
    let g = Group::cyclic(p)?;
    let size = arith::floor_two_sqrt(p - 2);
    let nonzero: Vec<usize> = (1..p).collect();
    let mut outcomes = Vec::new();
    for k in size..=p {
        let inner = k - usize::from(with_zero);
        if inner > nonzero.len() {
            continue;
        }
        for mut s in combinations(&nonzero, inner) {
            if with_zero {
                s.insert(0, 0);
            }
            let a = g.set_of(s)?;
            let r = bounds::check_sums_full(&a)?;
            outcomes.push(Outcome::check(r.holds, || json!({"group": &g, "set": &a, "report": r})));
        }
    }
    Ok(tally(outcomes))
}

fn sigma_zero_suite(max_p: usize) -> Result<Tally> {
    let mut t = Tally::default();
    for p in (2..=max_p).filter(|&p| arith::is_prime(p)) {
        let g = Group::cyclic(p)?;
        for mask in 0u64..(1 << (p - 1)) {
            let a = g.set_of((1..p).filter(|&x| mask >> (x - 1) & 1 == 1))?;
            let r = bounds::check_sigma_zero_growth(&a)?;
            t.add(Outcome::check(r.holds, || json!({"group": &g, "set": &a, "report": r})));
        }
    }
    Ok(t)
}

fn sequence_suite(max_p: usize, max_len: usize) -> Result<Tally> {
    let mut t = Tally::default();
    for p in (2..=max_p).filter(|&p| arith::is_prime(p)) {
        let g = Group::cyclic(p)?;
        let nonzero: Vec<usize> = (1..p).collect();
        for len in 2..=max_len {
            for terms in multisets(&nonzero, len) {
                let r = bounds::check_sequence_sums(&Sequence::new(&g, terms.clone())?)?;
                t.add(Outcome::check(r.bound.holds && r.characterization_holds, || {
                    json!({"group": &g, "sequence": terms, "report": r})
                }));
            }
        }
    }
    Ok(t)
}

/// Every `h`-tuple of nonempty subsets of `Z_p`, checked under the strict reading.
fn diderrich_strict_suite(p: usize, h: usize) -> Result<Tally> {
    let g = Group::cyclic(p)?;
    let subsets: Vec<ElementSet> =
        (1u64..(1 << p)).map(|m| g.set_of((0..p).filter(|&x| m >> x & 1 == 1))).collect::<Result<_>>()?;
    let total = subsets.len().pow(h as u32);
    let outcomes = (0..total)
        .into_par_iter()
        .map(|mut code| {
            let sets: Vec<ElementSet> = (0..h)
                .map(|_| {
                    let s = subsets[code % subsets.len()].clone();
                    code /= subsets.len();
                    s
                })
                .collect();
            let r = bounds::check_diderrich_strict(&sets)?;
            Ok(match &r.bound {
                Some(b) => Outcome::check(b.holds, || json!({"group": &g, "sets": sets_json(&sets), "report": r})),
                None => Outcome::skip(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tally(outcomes))
}

/// Every pair of subsets of `Z_p` with sizes in `[2, p-2]`.
fn vosper_suite(p: usize, strict: bool) -> Result<Tally> {
    let g = Group::cyclic(p)?;
    let subsets: Vec<ElementSet> = (1u64..(1 << p))
        .filter(|m| (2..=p - 2).contains(&(m.count_ones() as usize)))
        .map(|m| g.set_of((0..p).filter(|&x| m >> x & 1 == 1)))
        .collect::<Result<_>>()?;
    let mut t = Tally::default();
    for b1 in &subsets {
        for b2 in &subsets {
            let r = if strict { bounds::check_vosper_strict(b1, b2)? } else { bounds::check_vosper(b1, b2)? };
            t.add(if r.triggered {
                Outcome::check(r.holds, || json!({"group": &g, "sets": sets_json(&[b1.clone(), b2.clone()]), "report": r}))
            } else {
                Outcome::skip()
            });
        }
    }
    Ok(t)
}

fn sub_suites(lemma: Lemma) -> Result<Vec<SubSuite>> {
    Ok(match lemma {
        Lemma::Vosper => vec![
            vosper_suite(7, false)?.into_suite("every pair over Z_7", true),
            vosper_suite(7, true)?.into_suite("trigger min(p-1, |B1|+|B2|), every pair over Z_7 (informational)", false),
            vosper_suite(11, true)?.into_suite("trigger min(p-1, |B1|+|B2|), every pair over Z_11 (informational)", false),
        ],
        Lemma::Diderrich => vec![
            diderrich_strict_suite(5, 3)?
                .into_suite("strict reading (differences distinct up to sign), every triple over Z_5 (informational)", false),
            diderrich_strict_suite(7, 2)?
                .into_suite("strict reading (differences distinct up to sign), every pair over Z_7 (informational)", false),
        ],
        Lemma::ThreeFacts => {
            let p = 13;
            let m = isqrt(4 * p - 7);
            vec![
                restricted_full_suite(p, m, false)?.into_suite("(ii) p=13, every A of size floor(sqrt(4p-7)) without 0", true),
                restricted_full_suite(p, m, true)?.into_suite("(ii) p=13, every A of size floor(sqrt(4p-7)) containing 0", true),
                restricted_full_suite(p, m + 1, false)?
                    .into_suite("(ii') p=13, size floor(sqrt(4p-7))+1 without 0 (informational)", false),
                restricted_full_suite(p, m + 1, true)?
                    .into_suite("(ii') p=13, size floor(sqrt(4p-7))+1 containing 0 (informational)", false),
                sums_full_suite(11, false)?.into_suite("(iii) p=11, every A in Z_11 \\ {0} with |A| >= 6", true),
                sums_full_suite(11, true)?.into_suite("(iii) p=11, A containing 0 (informational)", false),
            ]
        }
        Lemma::SigmaZeroGrowth => vec![sigma_zero_suite(13)?.into_suite("every A in Z_p \\ {0}, p <= 13", true)],
        Lemma::SequenceSums => {
            vec![sequence_suite(13, 6)?.into_suite("every sequence over Z_p \\ {0}, p <= 13, 2 <= |T| <= 6", true)]
        }
        _ => Vec::new(),
    })
}

/// Runs the random campaign and, if configured, the exhaustive sub-suites.
pub fn run_campaign(cfg: &FuzzConfig) -> Result<FuzzReport> {
    let pools = Pools::new(cfg.max_p)?;
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i);
            trial(cfg.lemma, &pools, &mut rng).map(|mut o| {
                if let Some(v) = o.violation.as_mut() {
                    v["trial"] = json!(i);
                }
                o
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let t = tally(outcomes);
    let sub_suites = if cfg.exhaustive { sub_suites(cfg.lemma)? } else { Vec::new() };
    let passed = t.violation_count == 0 && sub_suites.iter().all(|s| !s.gating || s.violation_count == 0);
    Ok(FuzzReport {
        lemma: cfg.lemma,
        trials: cfg.trials,
        seed: cfg.seed,
        max_p: cfg.max_p,
        applicable: t.applicable,
        violation_count: t.violation_count,
        violations: t.violations,
        sub_suites,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(lemma: Lemma) -> FuzzReport {
        run_campaign(&FuzzConfig { trials: 300, exhaustive: false, ..FuzzConfig::new(lemma) }).unwrap()
    }

    #[test]
    fn campaigns_are_deterministic() {
        for lemma in [Lemma::CauchyDavenport, Lemma::Diderrich, Lemma::Hamidoune] {
            assert_eq!(quick(lemma), quick(lemma));
        }
    }

    #[test]
    fn true_lemmas_show_no_violations() {
        for lemma in [
            Lemma::Folk,
            Lemma::Hamidoune,
            Lemma::CauchyDavenport,
            Lemma::SigmaGrowth,
            Lemma::SigmaZeroGrowth,
            Lemma::SequenceSums,
        ] {
            let r = quick(lemma);
            assert!(r.passed, "{lemma:?}: {:?}", r.violations.first());
            assert!(r.applicable > 0, "{lemma:?} never applied");
        }
    }

    #[test]
    fn diderrich_strict_reading_is_clean() {
        let t = diderrich_strict_suite(5, 3).unwrap();
        assert_eq!(t.cases, 31 * 31 * 31);
        assert!(t.applicable > 0);
        assert_eq!(t.violation_count, 0);
        assert!(quick(Lemma::Diderrich).violation_count > 0);
    }

    #[test]
    fn vosper_needs_the_lower_trigger() {
        assert!(vosper_suite(7, false).unwrap().violation_count > 0);
        let t = vosper_suite(7, true).unwrap();
        assert!(t.applicable > 0);
        assert_eq!(t.violation_count, 0);
    }

    #[test]
    fn enumeration_helpers() {
        assert_eq!(combinations(&[1, 2, 3, 4], 2).len(), 6);
        assert_eq!(multisets(&[1, 2, 3], 2).len(), 6);
        assert_eq!(combinations(&(1..13).collect::<Vec<_>>(), 6).len(), 924);
    }

    #[test]
    fn tiny_max_p_is_rejected() {
        let cfg = FuzzConfig { max_p: 3, ..FuzzConfig::new(Lemma::Vosper) };
        assert!(run_campaign(&cfg).is_err());
    }
}
