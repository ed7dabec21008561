//! Seeded generators for models and formulas, used by the fuzzers, the
//! property tests and the CLI.

use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::models::{
    all_atoms, all_partitions, build_cpd_from_game, finer, validate_rcpd, Assignment, CpdModel,
    Partition, PdModel, Relation, RpdModel, StrategyProfile,
};
use crate::syntax::{Formula, VarSet, Vocabulary};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random subset of `items`, each element kept with probability `p`.
pub fn subset<R: Rng>(rng: &mut R, items: &[String], p: f64) -> VarSet {
    items.iter().filter(|_| rng.gen_bool(p)).cloned().collect()
}

/// A random equivalence relation with at most `blocks` classes.
pub fn equivalence<R: Rng>(rng: &mut R, n: usize, blocks: usize) -> Relation {
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..blocks.max(1))).collect();
    Relation::from_labels(&labels)
}

/// A random preorder: either a total preorder from random ranks or the
/// reflexive transitive closure of a few random pairs.
pub fn preorder<R: Rng>(rng: &mut R, n: usize) -> Relation {
    if rng.gen_bool(0.5) {
        let ranks: Vec<u32> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        Relation::from_pairs(
            n,
            (0..n)
                .flat_map(|a| (0..n).map(move |b| (a, b)))
                .filter(|&(a, b)| ranks[a] <= ranks[b]),
        )
    } else {
        let extra = rng.gen_range(0..=n);
        let pairs: Vec<(usize, usize)> = (0..extra)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect();
        Relation::from_pairs(n, pairs)
            .transitive_closure()
            .reflexive_closure()
    }
}

/// A random RPD model with `n` points. The valuation is invariant under each variable's equivalence and,
/// when `name_all` holds, every nominal names some point.
pub fn random_rpd<R: Rng>(rng: &mut R, vocab: &Vocabulary, n: usize, name_all: bool) -> RpdModel {
    let points = (0..n).map(|k| format!("w{k}")).collect();
    let mut m = RpdModel::discrete(vocab.clone(), points);
    for k in 0..vocab.variables().len() {
        let blocks = rng.gen_range(1..=n);
        m.sim[k] = equivalence(rng, n, blocks);
        m.leq[k] = preorder(rng, n);
    }
    for atom in all_atoms(vocab) {
        let cells = m
            .sim_set(&atom.vars())
            .expect("atom over vocabulary")
            .classes();
        let mut set = FixedBitSet::with_capacity(n);
        for cls in cells {
            if rng.gen_bool(0.5) {
                for w in cls {
                    set.insert(w);
                }
            }
        }
        if set.count_ones(..) > 0 {
            m.valuation.insert(atom, set);
        }
    }
    for i in vocab.nominals() {
        if name_all || rng.gen_bool(0.7) {
            m.naming.insert(i.clone(), rng.gen_range(0..n));
        }
    }
    m
}

/// A random PD model with distinct assignments; fewer than `n` when the
/// object space is too small.
pub fn random_pd<R: Rng>(rng: &mut R, vocab: &Vocabulary, n: usize, objects: usize) -> PdModel {
    let k = vocab.variables().len();
    let mut seen = BTreeSet::new();
    for _ in 0..(n * 8) {
        if seen.len() == n {
            break;
        }
        seen.insert(
            (0..k)
                .map(|_| rng.gen_range(0..objects))
                .collect::<Vec<_>>(),
        );
    }
    let mut rows: Vec<Vec<usize>> = seen.into_iter().collect();
    rows.shuffle(rng);
    let size = rows.len();
    let assignments = rows
        .into_iter()
        .enumerate()
        .map(|(j, values)| Assignment {
            id: format!("s{j}"),
            values,
        })
        .collect();
    let mut interpretation = BTreeMap::new();
    for (p, &ar) in vocab.predicates() {
        let total = objects.pow(ar as u32);
        let mut tuples = BTreeSet::new();
        for code in 0..total {
            if rng.gen_bool(0.4) {
                let mut t = Vec::with_capacity(ar);
                let mut rest = code;
                for _ in 0..ar {
                    t.push(rest % objects);
                    rest /= objects;
                }
                tuples.insert(t);
            }
        }
        interpretation.insert(p.clone(), tuples);
    }
    let naming = vocab
        .nominals()
        .iter()
        .map(|i| (i.clone(), rng.gen_range(0..size)))
        .collect();
    PdModel {
        vocab: vocab.clone(),
        objects: (0..objects).map(|o| format!("o{o}")).collect(),
        interpretation,
        assignments,
        pref: (0..k).map(|_| preorder(rng, size)).collect(),
        naming,
    }
}

/// Shape of generated formulas.
#[derive(Debug, Clone, Copy)]
pub struct FormulaParams {
    pub depth: usize,
    pub nominals: bool,
    /// Allow derived connectives and game operators.
    pub sugar: bool,
}

impl Default for FormulaParams {
    fn default() -> Self {
        FormulaParams {
            depth: 2,
            nominals: false,
            sugar: false,
        }
    }
}

fn atom<R: Rng>(rng: &mut R, vocab: &Vocabulary, nominals: bool) -> Formula {
    let vars = vocab.variables();
    let preds: Vec<(&String, &usize)> = vocab.predicates().iter().collect();
    let choice = rng.gen_range(0..10);
    if nominals && !vocab.nominals().is_empty() && choice < 2 {
        return Formula::nom(vocab.nominals().choose(rng).expect("non-empty").clone());
    }
    if !preds.is_empty() && choice < 6 {
        let (p, &ar) = preds[rng.gen_range(0..preds.len())];
        let args = (0..ar)
            .map(|_| vars.choose(rng).expect("non-empty").clone())
            .collect();
        return Formula::Pred(p.clone(), args);
    }
    Formula::Dep(
        subset(rng, vars, 0.4),
        vars.choose(rng).expect("non-empty").clone(),
    )
}

/// A random formula of modal depth at most `params.depth`.
pub fn random_formula<R: Rng>(rng: &mut R, vocab: &Vocabulary, params: FormulaParams) -> Formula {
    let vars = vocab.variables();
    if params.depth == 0 || rng.gen_bool(0.25) {
        let leaf = atom(rng, vocab, params.nominals);
        return if rng.gen_bool(0.3) { leaf.neg() } else { leaf };
    }
    let sub =
        |rng: &mut R, d: usize| random_formula(rng, vocab, FormulaParams { depth: d, ..params });
    let top = if params.sugar { 9 } else { 4 };
    match rng.gen_range(0..top) {
        0 => sub(rng, params.depth).neg(),
        1 => sub(rng, params.depth).and(sub(rng, params.depth)),
        2 | 3 => {
            let (x, y, z) = (
                subset(rng, vars, 0.35),
                subset(rng, vars, 0.3),
                subset(rng, vars, 0.25),
            );
            Formula::boxed(x, y, z, sub(rng, params.depth - 1))
        }
        4 => sub(rng, params.depth).or(sub(rng, params.depth)),
        5 => sub(rng, params.depth).imp(sub(rng, params.depth)),
        6 => {
            let (x, y, z) = (
                subset(rng, vars, 0.35),
                subset(rng, vars, 0.3),
                subset(rng, vars, 0.25),
            );
            Formula::dia(x, y, z, sub(rng, params.depth - 1))
        }
        7 => {
            let mut x = subset(rng, vars, 0.5);
            if x.is_empty() {
                x.insert(vars[0].clone());
            }
            match rng.gen_range(0..4) {
                0 => Formula::WPa(x),
                1 => Formula::SPa(x),
                2 => Formula::Na(x),
                _ => Formula::Coal(x),
            }
        }
        _ => {
            if params.nominals && !vocab.nominals().is_empty() {
                let i = vocab.nominals().choose(rng).expect("non-empty").clone();
                Formula::at(i, sub(rng, params.depth - 1))
            } else if rng.gen_bool(0.5) {
                Formula::Top
            } else {
                Formula::Bot
            }
        }
    }
}

/// Sizes for random coalition models.
#[derive(Debug, Clone, Copy)]
pub struct CpdParams {
    pub players: usize,
    pub strategies: usize,
    /// Utilities are drawn from `0..levels`.
    pub levels: i64,
}

fn all_profiles(players: &[String], strategies: &[String]) -> Vec<StrategyProfile> {
    let mut out = vec![StrategyProfile::new()];
    for p in players {
        out = out
            .into_iter()
            .flat_map(|s| {
                strategies.iter().map(move |t| {
                    let mut s = s.clone();
                    s.insert(p.clone(), t.clone());
                    s
                })
            })
            .collect();
    }
    out
}

/// A random CPD model. The strategy assignments of each partition contain
/// those of every finer partition, and utilities depend only on the merge.
pub fn random_cpd<R: Rng>(rng: &mut R, params: CpdParams) -> CpdModel {
    let players: Vec<String> = (1..=params.players).map(|i| i.to_string()).collect();
    let strategies: Vec<String> = (0..params.strategies).map(|k| format!("s{k}")).collect();
    let profiles = all_profiles(&players, &strategies);
    let mut parts = all_partitions(&players);
    parts.sort_by_key(|p| std::cmp::Reverse(p.len()));
    let full = rng.gen_bool(0.5);
    let mut table: BTreeMap<Partition, Vec<StrategyProfile>> = BTreeMap::new();
    for p in &parts {
        let mut set: BTreeSet<StrategyProfile> = BTreeSet::new();
        for (q, s) in &table {
            if finer(q, p) {
                set.extend(s.iter().cloned());
            }
        }
        if full && set.is_empty() {
            set.extend(profiles.iter().cloned());
        }
        for s in &profiles {
            if rng.gen_bool(0.25) {
                set.insert(s.clone());
            }
        }
        if set.is_empty() {
            set.insert(profiles.choose(rng).expect("non-empty").clone());
        }
        table.insert(p.clone(), set.into_iter().collect());
    }
    let utilities = profiles
        .iter()
        .map(|s| {
            let u = players
                .iter()
                .map(|p| (p.clone(), rng.gen_range(0..params.levels.max(1))))
                .collect();
            (s.clone(), u)
        })
        .collect();
    build_cpd_from_game(&players, &strategies, &table, &utilities)
        .expect("generator meets the CPD conditions")
}

/// A random RCPD model by rejection sampling.
pub fn random_rcpd<R: Rng>(rng: &mut R, params: CpdParams, tries: usize) -> Option<CpdModel> {
    (0..tries)
        .map(|_| random_cpd(rng, params))
        .find(|m| validate_rcpd(m).is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{validate_cpd, validate_pd, validate_rpd};

    #[test]
    fn generated_models_are_valid() {
        let mut rng = seeded(7);
        let voc =
            Vocabulary::new(["x", "y"], vec![("P".into(), 1), ("Q".into(), 2)], ["i"]).unwrap();
        for _ in 0..50 {
            let n = rng.gen_range(1..6);
            assert!(validate_rpd(&random_rpd(&mut rng, &voc, n, true)).is_empty());
            assert!(validate_pd(&random_pd(&mut rng, &voc, n, 3)).is_empty());
        }
    }

    #[test]
    fn generated_formulas_fit_the_vocabulary() {
        let mut rng = seeded(3);
        let voc = Vocabulary::new(["x", "y", "z"], vec![("P".into(), 1)], ["i", "j"]).unwrap();
        for _ in 0..200 {
            let f = random_formula(
                &mut rng,
                &voc,
                FormulaParams {
                    depth: 2,
                    nominals: true,
                    sugar: true,
                },
            );
            voc.check_formula(&f).unwrap();
            assert!(crate::syntax::modal_depth(&f) <= 2);
        }
    }

    #[test]
    fn generated_coalition_models_are_valid() {
        let mut rng = seeded(11);
        for _ in 0..20 {
            let m = random_cpd(
                &mut rng,
                CpdParams {
                    players: 3,
                    strategies: 2,
                    levels: 3,
                },
            );
            assert!(validate_cpd(&m).is_empty());
        }
        let params = CpdParams {
            players: 2,
            strategies: 2,
            levels: 3,
        };
        assert!(random_rcpd(&mut rng, params, 200).is_some());
    }
}
