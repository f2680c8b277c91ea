mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spanlab_core::critical::{cr_search, CrSearchOptions, SearchStatus};
use spanlab_core::extremal::*;
use spanlab_core::group::Group;
use spanlab_core::search::SearchBudget;

#[test]
fn witnesses_fail_to_span_and_supersets_span() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for g in small_groups(20).into_iter().filter(|g| g.order() >= 3) {
        let r = cr_search(&g, &SearchBudget::default(), CrSearchOptions::default()).unwrap();
        let cr = r.searched_value.unwrap();
        let w = r.witness_max_nonspanning.unwrap();
        assert_eq!(w.len() + 1, cr);
        assert!(!brute_spans(&g, &w.to_vec()), "{g}");
        if cr > g.order() - 1 {
            continue;
        }
        for _ in 0..200 {
            let a = random_subset(&mut rng, &g, cr, true);
            assert!(set(&g, &a).spans(), "{g}: {a:?} fails to span at size cr");
        }
    }
}

#[test]
fn orbit_reduction_changes_nothing() {
    for n in 3..=20 {
        let g = Group::cyclic(n).unwrap();
        let b = SearchBudget::default();
        let with = cr_search(&g, &b, CrSearchOptions { orbit_reduction: true, prune: true }).unwrap();
        let without = cr_search(&g, &b, CrSearchOptions { orbit_reduction: false, prune: true }).unwrap();
        assert_eq!(with.searched_value, without.searched_value, "Z{n}");
    }
}

#[test]
fn pruning_changes_nothing() {
    for g in small_groups(15).into_iter().filter(|g| g.order() >= 3) {
        let b = SearchBudget::default();
        let fast = cr_search(&g, &b, CrSearchOptions { orbit_reduction: false, prune: true }).unwrap();
        let slow = cr_search(&g, &b, CrSearchOptions { orbit_reduction: false, prune: false }).unwrap();
        assert_eq!(fast.status, SearchStatus::Complete);
        assert_eq!(fast.searched_value, slow.searched_value, "{g}");
        assert_eq!(fast.witness_max_nonspanning, slow.witness_max_nonspanning, "{g}");
    }
}

fn campaign(spec: &str) -> Vec<ExtremalRecord> {
    let g: Group = spec.parse().unwrap();
    let recs = all_extremal(&g).unwrap();
    let size = extremal_size(&g).unwrap();
    for r in &recs {
        assert_eq!(r.set.len(), size);
        assert!(!r.set.contains(0));
        assert!(!brute_spans(&g, &r.set.to_vec()));
        assert!(verify_witnesses(r), "{spec}: {:?} {:?}", r.set, r.tags);
        assert_eq!(r.has(Tag::Unclassified), !r.tags.iter().any(|t| t.label().starts_with("SHAPE_")));
        let obs = check_complete_subgroups(&r.set).unwrap();
        assert!(obs.holds, "{spec}: {:?} {:?}", r.set, obs.failures);
        assert_eq!(r.has(Tag::HasCompleteSubset), !obs.complete_subgroups.is_empty());
    }
    recs
}

#[test]
fn z15_records() {
    let recs = campaign("Z15");
    assert_eq!(recs.len(), 28);
    assert!(recs.iter().all(|r| !r.has(Tag::HasCompleteSubset)));
    assert_eq!(recs.iter().filter(|r| r.has(Tag::ShapeEx2)).count(), 4);
}

#[test]
fn z16_records() {
    let recs = campaign("Z16");
    let evens: Vec<usize> = (2..16).step_by(2).collect();
    assert!(recs.iter().any(|r| r.set.to_vec() == evens && r.has(Tag::ShapeI)));
}

#[test]
fn z21_records() {
    let recs = campaign("Z21");
    assert_eq!(recs.len(), 390);
    assert_eq!(recs.iter().filter(|r| !r.has(Tag::HasCompleteSubset)).count(), 358);
}

#[test]
fn orbit_dedup_accounts_for_every_set() {
    for n in [15, 16, 21] {
        let g = Group::cyclic(n).unwrap();
        let full = all_extremal(&g).unwrap();
        let opts = ExtremalOptions { orbit_dedup: true, ..ExtremalOptions::default() };
        let mut weight = 0;
        let mut tagged = std::collections::BTreeMap::new();
        enumerate_extremal(&g, &SearchBudget::default(), &opts, None, |r| {
            weight += r.weight();
            for t in &r.tags {
                *tagged.entry(*t).or_insert(0u64) += r.weight();
            }
            Ok(())
        })
        .unwrap();
        assert_eq!(weight, full.len() as u64, "Z{n}");
        for (t, c) in tagged {
            assert_eq!(c, full.iter().filter(|r| r.has(t)).count() as u64, "Z{n} {t}");
        }
    }
}

#[test]
fn conjecture_certificates() {
    let c2 = check_conjecture(2, 3, 5, &SearchBudget::default()).unwrap();
    assert_eq!(c2.verdict, Verdict::Refuted);
    assert_eq!((c2.extremal_count, c2.satisfying), (28, 4));
    assert_eq!(c2.orbit_structure.ex2_sets.len(), 4);

    let c1 = check_conjecture(1, 3, 7, &SearchBudget::default()).unwrap();
    assert_eq!(c1.verdict, Verdict::Refuted);
    assert_eq!((c1.extremal_count, c1.counterexamples.len()), (390, 358));

    assert!(check_conjecture(1, 3, 5, &SearchBudget::default()).is_err());
    assert!(check_conjecture(2, 3, 7, &SearchBudget::default()).is_err());
}

#[test]
fn example_one_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (p, q) in [(3, 7), (5, 11), (7, 13)] {
        for _ in 0..20 {
            let a = make_example_1(p, q, rng.gen()).unwrap();
            assert_eq!(a.len(), p + q - 3);
            assert!(!a.spans());
            let k = a.group().subgroups_of_order(p).unwrap().remove(0);
            assert_eq!(a.intersection(k.elements()).unwrap(), k.nonzero());
        }
    }
}

#[test]
fn main_theorem_on_smallest_groups() {
    let dedup = ExtremalOptions { orbit_dedup: true, ..ExtremalOptions::default() };
    let r = verify_theorem_main(&Group::cyclic(33).unwrap(), &SearchBudget::extended(), &dedup, None).unwrap();
    assert!(r.holds && r.status == RunStatus::Complete);
    assert_eq!(r.extremal_count, 22);
    let r = verify_theorem_main(&Group::cyclic(36).unwrap(), &SearchBudget::extended(), &dedup, None).unwrap();
    assert!(r.holds && r.status == RunStatus::Complete);
    assert_eq!(r.extremal_count, 1);
}
