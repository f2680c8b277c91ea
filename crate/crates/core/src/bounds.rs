//! Executable forms of the classical sumset bounds used when studying
//! non-spanning sets: Cauchy–Davenport, Dias da Silva–Hamidoune,
//! Diderrich, Vosper, Olson-type growth of `Sigma(A)`, and a few
//! consequences over `Z_p`.
//!
//! Each `check_*` evaluates the hypothesis on a concrete instance and, when
//! it applies, whether the conclusion holds. Nothing here panics on a
//! violated conclusion; callers (the fuzz campaigns) decide what a `false`
//! means.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arith;
use crate::error::{Error, Result};
use crate::group::{ElementSet, Group};
use crate::sumset::{self, Sequence};

/// The lemma a check belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lemma {
    #[serde(rename = "2.1")]
    Folk,
    #[serde(rename = "2.2")]
    Hamidoune,
    #[serde(rename = "2.3")]
    CauchyDavenport,
    #[serde(rename = "2.4")]
    Diderrich,
    #[serde(rename = "2.5")]
    Vosper,
    #[serde(rename = "2.6")]
    ThreeFacts,
    #[serde(rename = "2.7")]
    SigmaGrowth,
    #[serde(rename = "2.8")]
    SigmaZeroGrowth,
    #[serde(rename = "2.9")]
    SequenceSums,
}

impl Lemma {
    pub const ALL: [Lemma; 9] = [
        Lemma::Folk,
        Lemma::Hamidoune,
        Lemma::CauchyDavenport,
        Lemma::Diderrich,
        Lemma::Vosper,
        Lemma::ThreeFacts,
        Lemma::SigmaGrowth,
        Lemma::SigmaZeroGrowth,
        Lemma::SequenceSums,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Lemma::Folk => "2.1",
            Lemma::Hamidoune => "2.2",
            Lemma::CauchyDavenport => "2.3",
            Lemma::Diderrich => "2.4",
            Lemma::Vosper => "2.5",
            Lemma::ThreeFacts => "2.6",
            Lemma::SigmaGrowth => "2.7",
            Lemma::SigmaZeroGrowth => "2.8",
            Lemma::SequenceSums => "2.9",
        }
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Lemma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Lemma> {
        Lemma::ALL
            .into_iter()
            .find(|l| l.label() == s.trim())
            .ok_or_else(|| Error::Precondition(format!("unknown lemma {s:?}; expected 2.1 .. 2.9")))
    }
}

/// Outcome of checking one lower bound on one instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub lemma: Lemma,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clause: Option<&'static str>,
    /// Whether the hypothesis held, i.e. whether a claim was made at all.
    pub applicable: bool,
    pub actual: usize,
    pub bound: usize,
    pub holds: bool,
}

impl BoundReport {
    fn new(lemma: Lemma, actual: usize, bound: usize) -> BoundReport {
        BoundReport { lemma, clause: None, applicable: true, actual, bound, holds: actual >= bound }
    }

    fn vacuous(lemma: Lemma, actual: usize, bound: usize) -> BoundReport {
        BoundReport { lemma, clause: None, applicable: false, actual, bound, holds: true }
    }

    fn clause(mut self, c: &'static str) -> BoundReport {
        self.clause = Some(c);
        self
    }
}

/// `epsilon(l)`: 2 for `l = 0`, 1 for `l = 1`, 0 otherwise.
pub fn epsilon(l: i64) -> Result<u32> {
    match l {
        l if l < 0 => Err(Error::Precondition(format!("epsilon of negative {l}"))),
        0 => Ok(2),
        1 => Ok(1),
        _ => Ok(0),
    }
}

/// `delta(m)`: 0 for `m = 0`, 1 for `m > 0`.
pub fn delta(m: i64) -> Result<u32> {
    match m {
        m if m < 0 => Err(Error::Precondition(format!("delta of negative {m}"))),
        0 => Ok(0),
        _ => Ok(1),
    }
}

fn prime_order(g: &Group) -> Result<usize> {
    let p = g.order();
    if !g.is_single_cyclic() || !arith::is_prime(p) {
        return Err(Error::Precondition(format!("{g} is not a cyclic group of prime order")));
    }
    Ok(p)
}

fn same_group(sets: &[ElementSet]) -> Result<&Group> {
    let g = sets.first().ok_or(Error::EmptyOperand)?.group();
    if sets.iter().any(|s| s.group() != g) {
        return Err(Error::GroupMismatch);
    }
    if sets.iter().any(ElementSet::is_empty) {
        return Err(Error::EmptyOperand);
    }
    Ok(g)
}

/// Arithmetic-progression witness over `Z_p`.
///
/// When `is_ap` holds, the set is `{first + i*difference : 0 <= i < size}`
/// with `difference` normalized into `[1, (p-1)/2]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ApWitness {
    pub is_ap: bool,
    pub first: Option<usize>,
    pub difference: Option<usize>,
    pub size: usize,
}

impl ApWitness {
    /// The same progression read with difference `-d`.
    pub fn reversed(&self, p: usize) -> Option<(usize, usize)> {
        let (f, d) = (self.first?, self.difference?);
        let last = (f + (self.size - 1) * d) % p;
        Some((last, (p - d) % p))
    }
}

/// Start of the progression if `b` is an AP with difference `d` (`b` nonempty, `|b| < p`).
fn ap_start(b: &ElementSet, p: usize, d: usize) -> Option<usize> {
    let mut start = None;
    for x in b.iter() {
        if !b.contains((x + p - d) % p) {
            if start.is_some() {
                return None;
            }
            start = Some(x);
        }
    }
    start
}

/// Every `d in [1, p-1]` for which `b` is an arithmetic progression.
pub fn admissible_differences(b: &ElementSet) -> Result<Vec<usize>> {
    let p = prime_order(b.group())?;
    if b.is_empty() {
        return Err(Error::EmptyOperand);
    }
    let n = b.len();
    if n == 1 || n + 1 >= p {
        return Ok((1..p).collect());
    }
    Ok((1..p).filter(|&d| ap_start(b, p, d).is_some()).collect())
}

/// Decides whether `b` is an arithmetic progression in `Z_p`.
pub fn detect_ap(b: &ElementSet) -> Result<ApWitness> {
    let p = prime_order(b.group())?;
    if b.is_empty() {
        return Err(Error::EmptyOperand);
    }
    let n = b.len();
    let yes = |first, d| ApWitness { is_ap: true, first: Some(first), difference: Some(d), size: n };
    if n == p {
        return Ok(yes(0, 1));
    }
    if n + 1 == p {
        let missing = b.complement().min().unwrap();
        return Ok(yes((missing + 1) % p, 1));
    }
    if n == 1 {
        return Ok(yes(b.min().unwrap(), 1));
    }
    for d in 1..=(p - 1) / 2 {
        if let Some(first) = ap_start(b, p, d) {
            return Ok(yes(first, d));
        }
    }
    Ok(ApWitness { is_ap: false, first: None, difference: None, size: n })
}

/// `|A_1 + ... + A_h| >= min(p, sum |A_i| - h + 1)`.
pub fn check_cauchy_davenport(sets: &[ElementSet]) -> Result<BoundReport> {
    let g = same_group(sets)?;
    let p = prime_order(g)?;
    let total: usize = sets.iter().map(ElementSet::len).sum();
    let bound = p.min(total + 1 - sets.len());
    let actual = sumset::iterated_sumset(sets)?.len();
    Ok(BoundReport::new(Lemma::CauchyDavenport, actual, bound))
}

/// How the Diderrich hypothesis was met.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiderrichReport {
    pub precondition_met: bool,
    /// Index of the one set allowed not to be a progression.
    pub exception: Option<usize>,
    /// Pairwise distinct differences assigned to the non-exceptional sets.
    pub differences: Option<Vec<Option<usize>>>,
    pub bound: Option<BoundReport>,
}

fn distinct_assignment(options: &[Option<Vec<usize>>], p: usize, strict: bool) -> Option<Vec<Option<usize>>> {
    fn go(i: usize, options: &[Option<Vec<usize>>], used: &mut [bool], strict: bool, out: &mut Vec<Option<usize>>) -> bool {
        if i == options.len() {
            return true;
        }
        match &options[i] {
            None => {
                out.push(None);
                if go(i + 1, options, used, strict, out) {
                    return true;
                }
                out.pop();
            }
            Some(ds) => {
                let p = used.len();
                for &d in ds {
                    if used[d] {
                        continue;
                    }
                    used[d] = true;
                    if strict {
                        used[p - d] = true;
                    }
                    out.push(Some(d));
                    if go(i + 1, options, used, strict, out) {
                        return true;
                    }
                    out.pop();
                    used[d] = false;
                    if strict {
                        used[p - d] = false;
                    }
                }
            }
        }
        false
    }
    let mut used = vec![false; p];
    let mut out = Vec::with_capacity(options.len());
    go(0, options, &mut used, strict, &mut out).then_some(out)
}

/// `|A_1 + ... + A_h| >= min(p, sum |A_i| - 1)` when all but at most one of
/// the `A_i` are progressions with pairwise distinct differences.
///
/// A progression with difference `d` is also one with difference `-d`, so
/// the hypothesis is a distinct-representatives problem over each set's
/// admissible differences; it is decided by exhaustive backtracking.
pub fn check_diderrich(sets: &[ElementSet]) -> Result<DiderrichReport> {
    diderrich(sets, false)
}

/// [`check_diderrich`] under the narrower reading: no two differences may
/// agree up to sign, and a singleton can only be the exception.
pub fn check_diderrich_strict(sets: &[ElementSet]) -> Result<DiderrichReport> {
    diderrich(sets, true)
}

fn diderrich(sets: &[ElementSet], strict: bool) -> Result<DiderrichReport> {
    let g = same_group(sets)?;
    let p = prime_order(g)?;
    let diffs: Vec<Vec<usize>> = sets
        .iter()
        .map(|s| if strict && s.len() == 1 { Ok(Vec::new()) } else { admissible_differences(s) })
        .collect::<Result<_>>()?;
    let mut met = None;
    for exception in std::iter::once(None).chain((0..sets.len()).map(Some)) {
        let mut options = Vec::with_capacity(sets.len());
        let mut feasible = true;
        for (i, ds) in diffs.iter().enumerate() {
            if Some(i) == exception {
                options.push(None);
            } else if ds.is_empty() {
                feasible = false;
                break;
            } else {
                options.push(Some(ds.clone()));
            }
        }
        if !feasible {
            continue;
        }
        if let Some(assign) = distinct_assignment(&options, p, strict) {
            met = Some((exception, assign));
            break;
        }
    }
    let Some((exception, assign)) = met else {
        return Ok(DiderrichReport { precondition_met: false, exception: None, differences: None, bound: None });
    };
    let total: usize = sets.iter().map(ElementSet::len).sum();
    let bound = p.min(total - 1);
    let actual = sumset::iterated_sumset(sets)?.len();
    Ok(DiderrichReport {
        precondition_met: true,
        exception,
        differences: Some(assign),
        bound: Some(BoundReport::new(Lemma::Diderrich, actual, bound)),
    })
}

/// Critical-pair check: a small sumset forces two progressions with
/// differences equal up to sign.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VosperReport {
    pub sumset_size: usize,
    pub threshold: usize,
    pub triggered: bool,
    pub first: ApWitness,
    pub second: ApWitness,
    /// True unless triggered without the progression structure.
    pub holds: bool,
}

pub fn check_vosper(b1: &ElementSet, b2: &ElementSet) -> Result<VosperReport> {
    vosper(b1, b2, false)
}

/// [`check_vosper`] with the trigger lowered to `min(p - 1, |B_1| + |B_2|)`,
/// which leaves out the complementary pairs with `|B_1 + B_2| = p - 1`.
pub fn check_vosper_strict(b1: &ElementSet, b2: &ElementSet) -> Result<VosperReport> {
    vosper(b1, b2, true)
}

fn vosper(b1: &ElementSet, b2: &ElementSet, strict: bool) -> Result<VosperReport> {
    if b1.group() != b2.group() {
        return Err(Error::GroupMismatch);
    }
    let p = prime_order(b1.group())?;
    if p < 3 {
        return Err(Error::Precondition("needs an odd prime".into()));
    }
    for b in [b1, b2] {
        if b.len() < 2 || b.len() + 2 > p {
            return Err(Error::Precondition(format!("set size {} outside [2, p-2]", b.len())));
        }
    }
    let sumset_size = sumset::sumset(b1, b2)?.len();
    let threshold = (p - usize::from(strict)).min(b1.len() + b2.len());
    let triggered = sumset_size < threshold;
    let first = detect_ap(b1)?;
    let second = detect_ap(b2)?;
    // canonical differences live in [1, (p-1)/2], so +-d matching is equality
    let structured = first.is_ap && second.is_ap && first.difference == second.difference;
    Ok(VosperReport { sumset_size, threshold, triggered, first, second, holds: !triggered || structured })
}

/// Either `|Sigma°(A)| >= min(|G|-3, 3|A|-3)` or a proper subgroup holds all
/// but at most one element of `A`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DichotomyReport {
    pub sigma_zero_size: usize,
    pub growth_bound: usize,
    pub growth_branch: bool,
    /// A proper subgroup `H` with `|A & H| >= |A| - 1`, if any.
    pub concentrated_in: Option<Vec<usize>>,
    pub holds: bool,
}

pub fn check_hamidoune_dichotomy(a: &ElementSet) -> Result<DichotomyReport> {
    if a.contains(0) {
        return Err(Error::Precondition("0 must not belong to A".into()));
    }
    if a.len() < 14 {
        return Err(Error::Precondition(format!("|A| = {} is below 14", a.len())));
    }
    let g = a.group();
    let mut sigma = a.subset_sums();
    sigma.insert(0);
    let growth_bound = (g.order() - 3).min(3 * a.len() - 3);
    let growth_branch = sigma.len() >= growth_bound;
    let concentrated_in = g
        .all_subgroups()?
        .into_iter()
        .filter(|h| !h.is_full())
        .find(|h| a.intersection(h.elements()).map(|s| s.len() + 1 >= a.len()).unwrap_or(false))
        .map(|h| h.elements().to_vec());
    let holds = growth_branch || concentrated_in.is_some();
    Ok(DichotomyReport { sigma_zero_size: sigma.len(), growth_bound, growth_branch, concentrated_in, holds })
}

/// The three `Z_p` facts about `Sigma_h(A)` and `Sigma(A)`; each clause is
/// present only when its hypothesis applies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThreeFactsReport {
    pub restricted_growth: Option<BoundReport>,
    pub restricted_full: Option<BoundReport>,
    pub sums_full: Option<BoundReport>,
}

impl ThreeFactsReport {
    pub fn holds(&self) -> bool {
        [&self.restricted_growth, &self.restricted_full, &self.sums_full]
            .into_iter()
            .flatten()
            .all(|r| r.holds)
    }
}

/// Clause (i): `|Sigma_h(A)| >= min(p, h|A| - h^2 + 1)`.
pub fn check_restricted_growth(a: &ElementSet, h: usize) -> Result<BoundReport> {
    let p = prime_order(a.group())?;
    if a.is_empty() {
        return Err(Error::EmptyOperand);
    }
    if h == 0 || h > a.len() {
        return Err(Error::Precondition(format!("h = {h} outside [1, {}]", a.len())));
    }
    let actual = sumset::restricted_sums(&Sequence::from(a), h)?.len();
    let bound = p.min(h * a.len() - h * h + 1);
    Ok(BoundReport::new(Lemma::ThreeFacts, actual, bound).clause("i"))
}

/// Clause (ii): `|A| = floor(sqrt(4p-7))`, `h = floor(|A|/2)` gives `Sigma_h(A) = Z_p`.
pub fn check_restricted_full(a: &ElementSet) -> Result<BoundReport> {
    let p = prime_order(a.group())?;
    let n = a.len();
    let h = n / 2;
    let actual = sumset::restricted_sums(&Sequence::from(a), h)?.len();
    let report = if 4 * p >= 7 && n == arith::isqrt(4 * p - 7) {
        BoundReport::new(Lemma::ThreeFacts, actual, p)
    } else {
        BoundReport::vacuous(Lemma::ThreeFacts, actual, p)
    };
    Ok(report.clause("ii"))
}

/// Clause (iii): `|A| >= floor(2 sqrt(p-2))` gives `Sigma(A) = Z_p`.
pub fn check_sums_full(a: &ElementSet) -> Result<BoundReport> {
    let p = prime_order(a.group())?;
    let actual = a.subset_sums().len();
    let report = if p >= 2 && a.len() >= arith::floor_two_sqrt(p - 2) {
        BoundReport::new(Lemma::ThreeFacts, actual, p)
    } else {
        BoundReport::vacuous(Lemma::ThreeFacts, actual, p)
    };
    Ok(report.clause("iii"))
}

pub fn check_three_facts(a: &ElementSet, h: usize) -> Result<ThreeFactsReport> {
    let restricted_growth = Some(check_restricted_growth(a, h)?);
    let restricted_full = Some(check_restricted_full(a)?).filter(|r| r.applicable);
    let sums_full = Some(check_sums_full(a)?).filter(|r| r.applicable);
    Ok(ThreeFactsReport { restricted_growth, restricted_full, sums_full })
}

/// `|A_1| + |A_2| >= |G| + 1` forces `A_1 + A_2 = G`.
pub fn check_folk_lemma(a: &ElementSet, b: &ElementSet) -> Result<BoundReport> {
    let s = sumset::sumset(a, b)?;
    let n = a.group().order();
    if a.len() + b.len() > n {
        Ok(BoundReport::new(Lemma::Folk, s.len(), n))
    } else {
        Ok(BoundReport::vacuous(Lemma::Folk, s.len(), n))
    }
}

/// `|Sigma(A)| >= min(|<A>|, 2|A| - 1)` for nonempty `A` with `0 not in A`.
pub fn check_sigma_growth(a: &ElementSet) -> Result<BoundReport> {
    if a.is_empty() {
        return Err(Error::EmptyOperand);
    }
    if a.contains(0) {
        return Err(Error::Precondition("0 must not belong to A".into()));
    }
    let span = a.group().generated_subgroup(a).order();
    Ok(BoundReport::new(Lemma::SigmaGrowth, a.subset_sums().len(), span.min(2 * a.len() - 1)))
}

/// `|Sigma°(A)| >= min(p, 2l - 1 + epsilon(l))` for `A` in `Z_p \ {0}`, `l = |A|`.
pub fn check_sigma_zero_growth(a: &ElementSet) -> Result<BoundReport> {
    let p = prime_order(a.group())?;
    if a.contains(0) {
        return Err(Error::Precondition("0 must not belong to A".into()));
    }
    let l = a.len();
    let bound = p.min(2 * l + epsilon(l as i64)? as usize - 1);
    let actual = sumset::subset_sums_with_zero(&Sequence::from(a)).len();
    Ok(BoundReport::new(Lemma::SigmaZeroGrowth, actual, bound))
}

/// Sequence version: `|Sigma°(T)| >= min(p, |T| + 1)`, with equality exactly
/// when `|T| >= p - 1` or `supp(T)` sits inside some `{g, -g}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SequenceSumsReport {
    pub bound: BoundReport,
    pub equality: bool,
    pub long: bool,
    /// `g` with `supp(T)` inside `{g, -g}`, if any.
    pub plus_minus: Option<usize>,
    /// Equality holds iff one of the two structural conditions holds.
    pub characterization_holds: bool,
}

pub fn check_sequence_sums(t: &Sequence) -> Result<SequenceSumsReport> {
    let p = prime_order(t.group())?;
    if t.len() < 2 {
        return Err(Error::Precondition("sequence must have length at least 2".into()));
    }
    if t.terms().contains(&0) {
        return Err(Error::Precondition("terms must be nonzero".into()));
    }
    let actual = sumset::subset_sums_with_zero(t).len();
    let bound = BoundReport::new(Lemma::SequenceSums, actual, p.min(t.len() + 1));
    let equality = actual == bound.bound;
    let long = t.len() + 1 >= p;
    let g0 = t.terms()[0];
    let plus_minus = t.terms().iter().all(|&x| x == g0 || x == p - g0).then_some(g0.min(p - g0));
    let characterization_holds = equality == (long || plus_minus.is_some());
    Ok(SequenceSumsReport { bound, equality, long, plus_minus, characterization_holds })
}
