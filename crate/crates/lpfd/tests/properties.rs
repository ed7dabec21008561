mod common;

use common::{core_oracle, ids, naive_accessible, pd_eval};
use lpfd::games::{core_bruteforce, spo_bruteforce, wpo_bruteforce};
use lpfd::models::{
    all_partitions, eq_rel, finer, pd_to_rpd, rpd_to_pd, validate_cpd, validate_pd, validate_rpd,
    Relation,
};
use lpfd::random::{
    random_cpd, random_formula, random_pd, random_rpd, seeded, subset, CpdParams, FormulaParams,
};
use lpfd::semantics::{accessible, eval, valid_in_model};
use lpfd::syntax::{expand_derived, mk_na, mk_spa, nonempty_subsets};
use lpfd::{parse_formula, render, Formula, VarSet, Vocabulary};
use proptest::prelude::*;
use rand::Rng;

fn voc() -> Vocabulary {
    Vocabulary::new(
        ["x", "y", "z"],
        vec![("P".into(), 1), ("Q".into(), 2)],
        ["i", "j"],
    )
    .unwrap()
}

fn sugar() -> FormulaParams {
    FormulaParams {
        depth: 2,
        nominals: true,
        sugar: true,
    }
}

fn all_sets(v: &Vocabulary) -> Vec<VarSet> {
    let mut out = nonempty_subsets(&v.all_variables());
    out.push(VarSet::new());
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn render_then_parse_is_identity(seed in any::<u64>()) {
        let v = voc();
        let phi = random_formula(&mut seeded(seed), &v, sugar());
        let text = render(&phi);
        let back = parse_formula(&text, &v).unwrap();
        prop_assert_eq!(&back, &phi);
        prop_assert_eq!(render(&back), text);
    }

    #[test]
    fn expansion_is_idempotent_and_truth_preserving(seed in any::<u64>()) {
        let v = voc();
        let mut rng = seeded(seed);
        let phi = random_formula(&mut rng, &v, sugar());
        let once = expand_derived(&phi, &v).unwrap();
        prop_assert!(once.is_core());
        prop_assert_eq!(expand_derived(&once, &v).unwrap(), once.clone());
        let n = rng.gen_range(2..6);
        let m = random_rpd(&mut rng, &v, n, true);
        for w in 0..n {
            prop_assert_eq!(eval(&m, w, &phi).unwrap(), eval(&m, w, &once).unwrap());
        }
    }

    #[test]
    fn agreement_is_an_equivalence_and_composes(seed in any::<u64>()) {
        let v = voc();
        let mut rng = seeded(seed);
        let n = rng.gen_range(1..7);
        let m = random_pd(&mut rng, &v, n, 3);
        let sets = all_sets(&v);
        for x in &sets {
            prop_assert!(eq_rel(&m, x).unwrap().is_equivalence());
            for y in &sets {
                let xy: VarSet = x.union(y).cloned().collect();
                let both = eq_rel(&m, x).unwrap().intersect(&eq_rel(&m, y).unwrap());
                prop_assert_eq!(eq_rel(&m, &xy).unwrap(), both);
            }
        }
    }

    #[test]
    fn assignment_semantics_matches_relational(seed in any::<u64>()) {
        let v = voc();
        let mut rng = seeded(seed);
        let n = rng.gen_range(1..7);
        let m = random_pd(&mut rng, &v, n, 3);
        prop_assert!(validate_pd(&m).is_empty());
        let r = pd_to_rpd(&m).unwrap();
        for _ in 0..4 {
            let phi = random_formula(&mut rng, &v, sugar());
            for a in 0..n {
                prop_assert_eq!(pd_eval(&m, a, &phi), eval(&r, a, &phi).unwrap(), "{} at {}", phi, a);
            }
        }
    }

    #[test]
    fn round_trip_through_assignments_preserves_truth(seed in any::<u64>()) {
        let v = voc();
        let mut rng = seeded(seed);
        let n = rng.gen_range(1..6);
        let m = random_rpd(&mut rng, &v, n, true);
        let pd = rpd_to_pd(&m).unwrap();
        let back = pd_to_rpd(&pd).unwrap();
        for _ in 0..4 {
            let phi = random_formula(&mut rng, &v, sugar());
            for w in 0..n {
                let want = eval(&m, w, &phi).unwrap();
                prop_assert_eq!(pd_eval(&pd, w, &phi), want);
                prop_assert_eq!(eval(&back, w, &phi).unwrap(), want);
            }
        }
    }

    #[test]
    fn access_relation_matches_pointwise_definition(seed in any::<u64>()) {
        let v = voc();
        let mut rng = seeded(seed);
        let n = rng.gen_range(1..7);
        let m = random_rpd(&mut rng, &v, n, false);
        prop_assert!(validate_rpd(&m).is_empty());
        for _ in 0..8 {
            let (x, y, z) = (subset(&mut rng, v.variables(), 0.5), subset(&mut rng, v.variables(), 0.5), subset(&mut rng, v.variables(), 0.3));
            for w in 0..n {
                prop_assert_eq!(accessible(&m, w, &x, &y, &z).unwrap(), naive_accessible(&m, w, &x, &y, &z));
            }
        }
    }

    #[test]
    fn access_shrinks_as_labels_grow(seed in any::<u64>()) {
        let v = voc();
        let mut rng = seeded(seed);
        let n = rng.gen_range(1..7);
        let m = random_rpd(&mut rng, &v, n, false);
        let vars = v.variables();
        for _ in 0..8 {
            let (x, y, z) = (subset(&mut rng, vars, 0.6), subset(&mut rng, vars, 0.5), subset(&mut rng, vars, 0.5));
            let yz: VarSet = y.union(&z).cloned().collect();
            let x2 = subset(&mut rng, &x.iter().cloned().collect::<Vec<_>>(), 0.5);
            let y2 = subset(&mut rng, &yz.iter().cloned().collect::<Vec<_>>(), 0.5);
            let z2 = subset(&mut rng, &z.iter().cloned().collect::<Vec<_>>(), 0.5);
            for w in 0..n {
                prop_assert!(accessible(&m, w, &x, &y, &z).unwrap().is_subset(&accessible(&m, w, &x2, &y2, &z2).unwrap()));
            }
        }
    }

    #[test]
    fn global_box_is_validity(seed in any::<u64>()) {
        let v = voc();
        let mut rng = seeded(seed);
        let n = rng.gen_range(1..6);
        let m = random_rpd(&mut rng, &v, n, true);
        let phi = random_formula(&mut rng, &v, FormulaParams { depth: 1, nominals: true, sugar: false });
        let valid = valid_in_model(&m, &phi).unwrap();
        for w in 0..n {
            prop_assert_eq!(eval(&m, w, &Formula::univ(phi.clone())).unwrap(), valid);
        }
    }

    #[test]
    fn strong_pareto_implies_weak(seed in any::<u64>()) {
        let v = Vocabulary::with_variables(["1", "2", "3"]).unwrap();
        let mut rng = seeded(seed);
        let n = rng.gen_range(1..7);
        let m = random_pd(&mut rng, &v, n, 3);
        for x in nonempty_subsets(&v.all_variables()) {
            prop_assert!(spo_bruteforce(&m, &x).unwrap().is_subset(&wpo_bruteforce(&m, &x).unwrap()));
        }
    }

    #[test]
    fn generated_coalition_models_are_consistent(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let players = rng.gen_range(1..4);
        let m = random_cpd(&mut rng, CpdParams { players, strategies: 2, levels: 3 });
        prop_assert!(validate_cpd(&m).is_empty());
        let parts = all_partitions(&m.players);
        for p in &parts {
            for q in &parts {
                if finer(p, q) {
                    prop_assert!(m.sigma(p).is_subset(&m.sigma(q)));
                }
            }
        }
        let core = core_bruteforce(&m).unwrap();
        prop_assert_eq!(ids(&m, &core), core_oracle(&m));
        let pd = m.to_pd().unwrap();
        let wpo = wpo_bruteforce(&pd, &pd.vocab.all_variables()).unwrap();
        prop_assert!(core.is_subset(&wpo));
    }
}

#[test]
fn individual_operators_have_one_conjunct_per_member() {
    let v = Vocabulary::with_variables(["1", "2", "3", "4"]).unwrap();
    for x in nonempty_subsets(&v.all_variables()) {
        for f in [mk_na(&v, &x).unwrap(), mk_spa(&v, &x).unwrap()] {
            let core = expand_derived(&f, &v).unwrap();
            assert_eq!(core.conjuncts().len(), x.len(), "{f}");
        }
    }
}

#[test]
fn validators_catch_broken_relations() {
    let v = voc();
    let mut rng = seeded(3);
    for _ in 0..20 {
        let mut m = random_rpd(&mut rng, &v, 3, true);
        assert!(validate_rpd(&m).is_empty());
        m.leq[0] = Relation::from_pairs(3, [(0, 1), (1, 2)]).reflexive_closure();
        assert!(!validate_rpd(&m).is_empty());
        let mut m = random_rpd(&mut rng, &v, 3, true);
        m.sim[1] = Relation::from_pairs(3, [(0, 1)]).reflexive_closure();
        assert!(!validate_rpd(&m).is_empty());
    }
    let mut pd = random_pd(&mut rng, &v, 4, 2);
    pd.pref[2] = Relation::empty(4);
    assert!(!validate_pd(&pd).is_empty());
}
