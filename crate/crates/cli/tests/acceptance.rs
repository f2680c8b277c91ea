//! One line per acceptance criterion, then a single verdict.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use spanlab_core::arith::abelian_groups_of_order;
use spanlab_core::bounds::Lemma;
use spanlab_core::critical::{cr_formula, verify_theorem_a, SearchStatus};
use spanlab_core::extremal::*;
use spanlab_core::fuzz::{run_campaign, FuzzConfig, DEFAULT_TRIALS};
use spanlab_core::group::Group;
use spanlab_core::search::SearchBudget;
use spanlab_core::sumset::{restricted_sums, Sequence};

const TABLE_MAX_ORDER: usize = 24;
const TABLE_LIMIT: Duration = Duration::from_secs(5 * 60);
const FUZZ_TRIALS: u64 = 10_000;
const FUZZ_LIMIT: Duration = Duration::from_secs(10 * 60);
const ORACLE_CASES: usize = 1000;
const ORACLE_MAX_SET: usize = 14;
const ORACLE_MAX_ORDER: usize = 36;
const ORACLE_LIMIT: Duration = Duration::from_secs(2 * 60);
const CONJ2_CANDIDATES: u64 = 3003;
const CONJ2_LIMIT: Duration = Duration::from_secs(1);
const CONJ1_CANDIDATES: u64 = 77_520;
const CONJ1_LIMIT: Duration = Duration::from_secs(60);
const MAIN_LIMIT: Duration = Duration::from_secs(2 * 3600);
const RESUME_MAX_NODES: &str = "2000";

struct Line {
    n: u32,
    what: &'static str,
    pass: bool,
    detail: String,
}

fn brute_sums(g: &Group, a: &[usize]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << a.len()) {
        out.insert(a.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).fold(0, |s, (_, &x)| g.add(s, x)));
    }
    out
}

fn brute_h_sums(g: &Group, a: &[usize], h: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << a.len()) {
        if mask.count_ones() as usize == h {
            out.insert(a.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).fold(0, |s, (_, &x)| g.add(s, x)));
        }
    }
    out
}

fn brute_span(g: &Group, a: &[usize]) -> u64 {
    let mut inside = 1u64;
    let mut stack = vec![0usize];
    while let Some(y) = stack.pop() {
        for &x in a {
            let z = g.add(y, x);
            if inside >> z & 1 == 0 {
                inside |= 1 << z;
                stack.push(z);
            }
        }
    }
    inside
}

/// Some nonempty `B` inside `a` with `Sigma(B) = <B>`, over all submasks.
fn brute_complete(g: &Group, a: &[usize]) -> bool {
    let k = a.len();
    let mut sum = vec![0usize; 1 << k];
    for m in 1usize..(1 << k) {
        sum[m] = g.add(sum[m & (m - 1)], a[m.trailing_zeros() as usize]);
    }
    (1usize..(1 << k)).any(|b| {
        let mut sums = 0u64;
        let mut s = b;
        while s != 0 {
            sums |= 1 << sum[s];
            s = (s - 1) & b;
        }
        let members: Vec<usize> = (0..k).filter(|i| b >> i & 1 == 1).map(|i| a[i]).collect();
        sums == brute_span(g, &members)
    })
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize, k: usize, lo: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (lo..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    let mut a = pool[..k].to_vec();
    a.sort_unstable();
    a
}

fn groups_up_to(max: usize) -> Vec<Group> {
    (3..=max).flat_map(abelian_groups_of_order).map(|s| Group::new(&s).unwrap()).collect()
}

fn criterion_1() -> Line {
    let t0 = Instant::now();
    let t = verify_theorem_a(TABLE_MAX_ORDER, &SearchBudget::default()).unwrap();
    let elapsed = t0.elapsed();
    let shapes: [&[usize]; 6] = [&[2, 2], &[3, 3], &[4], &[6], &[2, 4], &[8]];
    let covers_special = shapes.iter().all(|s| t.rows.iter().any(|r| r.group.invariant_factors() == *s));
    let value = |spec: &str| t.rows.iter().find(|r| r.group.to_string() == spec).and_then(|r| r.searched_value);
    let complete = t.rows.iter().all(|r| r.status == SearchStatus::Complete);
    let fails: Vec<String> = t
        .failures()
        .map(|r| format!("{}: formula {} searched {:?}", r.group, r.formula_value, r.searched_value))
        .collect();
    let pass = t.all_pass && complete && covers_special && value("Z15") == Some(7) && value("Z21") == Some(8) && elapsed <= TABLE_LIMIT;
    Line {
        n: 1,
        what: "exhaustive cr(G) equals the closed form for 3 <= |G| <= 24",
        pass,
        detail: format!(
            "{} groups, {} mismatches [{}], cr(Z15)={:?}, cr(Z21)={:?}, {:.1?}",
            t.rows.len(),
            fails.len(),
            fails.join("; "),
            value("Z15"),
            value("Z21"),
            elapsed
        ),
    }
}

fn criterion_2() -> Line {
    let t0 = Instant::now();
    let mut bad = Vec::new();
    for lemma in Lemma::ALL {
        let cfg = FuzzConfig { trials: FUZZ_TRIALS, ..FuzzConfig::new(lemma) };
        assert_eq!(cfg.trials, DEFAULT_TRIALS);
        let rep = run_campaign(&cfg).unwrap();
        if !rep.passed {
            let mut parts = vec![format!("{} random", rep.violation_count)];
            for s in rep.sub_suites.iter().filter(|s| s.gating && s.violation_count > 0) {
                parts.push(format!("{} in {}", s.violation_count, s.name));
            }
            bad.push(format!("lemma {lemma}: {}", parts.join(", ")));
        }
    }
    let elapsed = t0.elapsed();
    Line {
        n: 2,
        what: "lemma fuzz campaigns report zero violations",
        pass: bad.is_empty() && elapsed <= FUZZ_LIMIT,
        detail: format!("{} of 9 lemmas clean [{}], {:.1?}", 9 - bad.len(), bad.join("; "), elapsed),
    }
}

fn criterion_3() -> Line {
    let t0 = Instant::now();
    let groups = groups_up_to(ORACLE_MAX_ORDER);
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce97);
    let mut mismatches = [0usize; 3];
    for _ in 0..ORACLE_CASES {
        let g = &groups[rng.gen_range(0..groups.len())];
        let n = g.order();
        let k = rng.gen_range(1..=12.min(n));
        let a = random_subset(&mut rng, n, k, 0);
        let got: BTreeSet<usize> = g.set_of(a.iter().copied()).unwrap().subset_sums().iter().collect();
        mismatches[0] += usize::from(got != brute_sums(g, &a));

        let len = rng.gen_range(1..=12);
        let terms: Vec<usize> = (0..len).map(|_| rng.gen_range(0..n)).collect();
        let h = rng.gen_range(0..=len);
        let got: BTreeSet<usize> = restricted_sums(&Sequence::new(g, terms.clone()).unwrap(), h).unwrap().iter().collect();
        mismatches[1] += usize::from(got != brute_h_sums(g, &terms, h));

        let k = rng.gen_range(1..=ORACLE_MAX_SET.min(n - 1));
        let a = random_subset(&mut rng, n, k, 1);
        let got = contains_complete_subset(&g.set_of(a.iter().copied()).unwrap()).unwrap().is_some();
        mismatches[2] += usize::from(got != brute_complete(g, &a));
    }
    let elapsed = t0.elapsed();
    Line {
        n: 3,
        what: "subset_sums, restricted_sums, contains_complete_subset match brute force",
        pass: mismatches == [0, 0, 0] && elapsed <= ORACLE_LIMIT,
        detail: format!("{ORACLE_CASES} cases each, mismatches {mismatches:?}, {elapsed:.1?}"),
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn conjecture_line(n: u32, what: &'static str, which: u8, p: usize, q: usize, candidates: u64, limit: Duration) -> Line {
    let t0 = Instant::now();
    let rep = check_conjecture(which, p, q, &SearchBudget::default()).unwrap();
    let elapsed = t0.elapsed();
    let listed = rep.records.len() as u64 == rep.extremal_count && rep.records.iter().all(verify_witnesses);
    let definitive = matches!(rep.verdict, Verdict::Verified | Verdict::Refuted);
    let size_ok = binomial((p * q - 1) as u64, rep.extremal_size as u64) == candidates;
    Line {
        n,
        what,
        pass: definitive && listed && size_ok && elapsed <= limit,
        detail: format!(
            "{:?}: {} extremal sets of size {} from {candidates} candidates, {} satisfy, {elapsed:.2?}",
            rep.verdict, rep.extremal_count, rep.extremal_size, rep.satisfying
        ),
    }
}

fn criterion_6() -> Line {
    let mut total = 0;
    let mut failures = 0;
    for n in [15, 16, 21] {
        for r in all_extremal(&Group::cyclic(n).unwrap()).unwrap() {
            total += 1;
            failures += usize::from(!check_complete_subgroups(&r.set).unwrap().holds);
        }
    }
    Line {
        n: 6,
        what: "complete subsets of extremal sets fill their subgroup (Z15, Z16, Z21)",
        pass: failures == 0 && total > 0,
        detail: format!("{total} records, {failures} violations"),
    }
}

fn criterion_7() -> Line {
    let mut notes = Vec::new();
    let mut pass = true;
    for (p, q) in [(3, 5), (5, 7)] {
        let a = make_example_2(p, q, 1).unwrap();
        let g = a.group().clone();
        let want = cr_formula(&g).unwrap().0 - 1;
        let sums = brute_sums(&g, &a.to_vec());
        let ok = a.len() == p + q - 2 && a.len() == want && sums.len() < g.order();
        pass &= ok;
        notes.push(format!("Z{}: |A| = {} (cr-1 = {want}), |Sigma(A)| = {}", p * q, a.len(), sums.len()));
    }
    Line { n: 7, what: "progression examples are extremal", pass, detail: notes.join("; ") }
}

fn criterion_8() -> Line {
    let opts = ExtremalOptions { orbit_dedup: true, ..ExtremalOptions::default() };
    let mut notes = Vec::new();
    let mut pass = true;
    for n in [33, 36] {
        let t0 = Instant::now();
        let r = verify_theorem_main(&Group::cyclic(n).unwrap(), &SearchBudget::extended(), &opts, None).unwrap();
        let elapsed = t0.elapsed();
        pass &= r.holds && r.status == RunStatus::Complete && elapsed <= MAIN_LIMIT;
        notes.push(format!(
            "Z{n}: {} sets in {} orbits, {} off-shape, {elapsed:.2?}",
            r.extremal_count,
            r.representatives,
            r.violations.len()
        ));
    }
    Line { n: 8, what: "structure theorem on Z33 and Z36 with orbit reduction", pass, detail: notes.join("; ") }
}

fn sorted_digest(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.sort_unstable();
    let mut h = Sha256::new();
    for l in lines {
        h.update(l.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

fn criterion_9() -> Line {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_spanlab");
    let run = |args: &[&str]| Command::new(bin).args(args).env("SPANLAB_STORE", dir.path()).output().unwrap();
    let full = dir.path().join("full.jsonl");
    let parts = dir.path().join("parts.jsonl");
    let ck = format!("{}.checkpoint.json", parts.display());
    let ok_full = run(&["enumerate-extremal", "--group", "Z21", "--out", full.to_str().unwrap()]).status.code() == Some(0);
    let base = ["enumerate-extremal", "--group", "Z21", "--out", parts.to_str().unwrap(), "--max-nodes", RESUME_MAX_NODES];
    let mut code = run(&base).status.code();
    let mut interruptions = 0;
    while code == Some(2) && interruptions < 1000 {
        interruptions += 1;
        let mut args = base.to_vec();
        args.extend(["--resume", &ck]);
        code = run(&args).status.code();
    }
    let (a, b) = (sorted_digest(&full), sorted_digest(&parts));
    Line {
        n: 9,
        what: "interrupted and resumed Z21 enumeration matches an uninterrupted run",
        pass: ok_full && code == Some(0) && interruptions > 0 && a == b,
        detail: format!("{interruptions} interruptions, sha256 {} vs {}", &a[..16], &b[..16]),
    }
}

#[test]
fn acceptance_criteria() {
    let lines = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        conjecture_line(4, "Z15 conjecture certificate (progression shape)", 2, 3, 5, CONJ2_CANDIDATES, CONJ2_LIMIT),
        conjecture_line(5, "Z21 conjecture certificate (complete subset)", 1, 3, 7, CONJ1_CANDIDATES, CONJ1_LIMIT),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
    ];
    for l in &lines {
        println!("criterion {}: {} | {} | {}", l.n, if l.pass { "PASS" } else { "FAIL" }, l.what, l.detail);
    }
    let failed: Vec<u32> = lines.iter().filter(|l| !l.pass).map(|l| l.n).collect();
    println!("{} of {} criteria pass", lines.len() - failed.len(), lines.len());
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
