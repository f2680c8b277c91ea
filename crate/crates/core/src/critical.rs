//! The critical number `cr(G)`: least `l` such that every `A` in `G \ {0}`
//! with `|A| >= l` spans `G`.
//!
//! [`cr_formula`] evaluates the closed form; [`cr_search`] computes
//! `1 + max |A|` over non-spanning `A` exactly, one missed target at a time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, abelian_groups_of_order, floor_two_sqrt};
use crate::error::{Error, Result};
use crate::group::{ElementSet, Group};
use crate::search::{max_avoiding, SearchBudget, TargetSearchOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrCase {
    Prime,
    SpecialCase2,
    GeneralCase3,
}

impl std::fmt::Display for CrCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CrCase::Prime => "prime",
            CrCase::SpecialCase2 => "special_case2",
            CrCase::GeneralCase3 => "general_case3",
        })
    }
}

/// Invariant-factor shapes that take the `|G|/p + p - 1` branch outright.
const SPECIAL_SHAPES: [&[usize]; 6] = [&[2, 2], &[3, 3], &[4], &[6], &[2, 4], &[8]];

/// Closed-form `cr(G)` and the branch that produced it.
pub fn cr_formula(g: &Group) -> Result<(usize, CrCase)> {
    let n = g.order();
    if n < 3 {
        return Err(Error::Precondition(format!("cr needs |G| >= 3, got {n}")));
    }
    let p = g.smallest_prime_divisor();
    if n == p {
        return Ok((floor_two_sqrt(p - 2), CrCase::Prime));
    }
    let q = n / p;
    let inv = g.invariant_factors();
    let listed = SPECIAL_SHAPES.contains(&inv.as_slice());
    let window = q % 2 == 1 && arith::is_prime(q) && 2 < p && p < q && q <= p + floor_two_sqrt(p - 2) + 1;
    if listed || window {
        Ok((q + p - 1, CrCase::SpecialCase2))
    } else {
        Ok((q + p - 2, CrCase::GeneralCase3))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrSearchOptions {
    /// One target per unit orbit on single-factor cyclic groups.
    pub orbit_reduction: bool,
    pub prune: bool,
}

impl Default for CrSearchOptions {
    fn default() -> Self {
        CrSearchOptions { orbit_reduction: true, prune: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Complete,
    /// The node or time budget ran out mid-search.
    BudgetExceeded,
    /// The order is above the exact-search cap; nothing was searched.
    OutOfRange,
    /// Only the formula was requested.
    NotRun,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrResult {
    pub group: Group,
    pub formula_value: usize,
    pub formula_case: CrCase,
    pub searched_value: Option<usize>,
    /// Lexicographically least largest non-spanning set among the targets searched.
    pub witness_max_nonspanning: Option<ElementSet>,
    pub status: SearchStatus,
    pub nodes: u64,
}

impl CrResult {
    pub fn formula_only(g: &Group) -> Result<CrResult> {
        let (v, case) = cr_formula(g)?;
        Ok(CrResult {
            group: g.clone(),
            formula_value: v,
            formula_case: case,
            searched_value: None,
            witness_max_nonspanning: None,
            status: SearchStatus::NotRun,
            nodes: 0,
        })
    }

    /// `Some(true)` when the search ran and agrees with the formula.
    pub fn agrees(&self) -> Option<bool> {
        self.searched_value.map(|s| s == self.formula_value)
    }
}

/// Targets to search. Every element, including 0, can be the one missed;
/// on `Z_n` the unit orbits are the classes of equal `gcd(t, n)`, so the
/// divisors of `n` (with `n` standing for 0) suffice.
fn targets(g: &Group, orbit_reduction: bool) -> Vec<usize> {
    let n = g.order();
    if orbit_reduction && g.is_single_cyclic() {
        arith::divisors(n).into_iter().map(|d| d % n).collect()
    } else {
        (0..n).collect()
    }
}

/// Exact `cr(G)` by per-target maximum search.
pub fn cr_search(g: &Group, budget: &SearchBudget, opts: CrSearchOptions) -> Result<CrResult> {
    let mut res = CrResult::formula_only(g)?;
    if !budget.admits(g.order()) {
        res.status = SearchStatus::OutOfRange;
        return Ok(res);
    }
    let meter = budget.meter();
    let topts = TargetSearchOptions { prune: opts.prune };
    let found: Vec<Option<Vec<usize>>> =
        targets(g, opts.orbit_reduction).into_par_iter().map(|t| max_avoiding(g, t, topts, &meter)).collect();
    res.nodes = meter.nodes();
    if found.iter().any(Option::is_none) {
        res.status = SearchStatus::BudgetExceeded;
        return Ok(res);
    }
    let best = found
        .into_iter()
        .flatten()
        .min_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)))
        .expect("at least one target");
    res.searched_value = Some(best.len() + 1);
    res.witness_max_nonspanning = Some(g.set_of(best)?);
    res.status = SearchStatus::Complete;
    Ok(res)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TableRow {
    pub group: Group,
    pub order: usize,
    pub p: usize,
    pub formula_value: usize,
    pub formula_case: CrCase,
    pub searched_value: Option<usize>,
    pub witness: Option<ElementSet>,
    pub status: SearchStatus,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TableReport {
    pub max_order: usize,
    pub rows: Vec<TableRow>,
    pub all_pass: bool,
}

impl TableReport {
    pub fn failures(&self) -> impl Iterator<Item = &TableRow> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

/// Searches every abelian group with `3 <= |G| <= max_order` and compares
/// against [`cr_formula`].
pub fn verify_theorem_a(max_order: usize, budget: &SearchBudget) -> Result<TableReport> {
    if !budget.admits(max_order) {
        return Err(Error::Precondition(format!(
            "max order {max_order} is above the exact-search cap {}",
            budget.max_order
        )));
    }
    let mut rows = Vec::new();
    for n in 3..=max_order {
        for spec in abelian_groups_of_order(n) {
            let g = Group::new(&spec)?;
            let r = cr_search(&g, budget, CrSearchOptions::default())?;
            rows.push(TableRow {
                order: n,
                p: g.smallest_prime_divisor(),
                pass: r.agrees() == Some(true),
                group: g,
                formula_value: r.formula_value,
                formula_case: r.formula_case,
                searched_value: r.searched_value,
                witness: r.witness_max_nonspanning,
                status: r.status,
            });
        }
    }
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(TableReport { max_order, rows, all_pass })
}
