#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use fixedbitset::FixedBitSet;
use lpfd::models::{load_model, CpdModel, Model, PdModel, RpdModel};
use lpfd::syntax::expand_derived;
use lpfd::{Formula, VarSet};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn load_cpd(name: &str) -> CpdModel {
    match load_model(fixture(name)).unwrap().model {
        Model::Cpd(m) => m,
        other => panic!("{name} is a {} model", other.kind()),
    }
}

fn agree(m: &PdModel, a: usize, b: usize, x: &VarSet) -> bool {
    x.iter().all(|v| {
        let k = m.vocab.var_index(v).unwrap();
        m.assignments[a].values[k] == m.assignments[b].values[k]
    })
}

fn weakly_above(m: &PdModel, a: usize, b: usize, y: &VarSet) -> bool {
    y.iter()
        .all(|v| m.pref[m.vocab.var_index(v).unwrap()].contains(a, b))
}

fn strictly_above(m: &PdModel, a: usize, b: usize, z: &VarSet) -> bool {
    z.iter().all(|v| {
        let r = &m.pref[m.vocab.var_index(v).unwrap()];
        r.contains(a, b) && !r.contains(b, a)
    })
}

/// Truth at assignment `a` read straight off the assignments, objects and
/// preorders, without going through the relational presentation.
pub fn pd_eval(m: &PdModel, a: usize, phi: &Formula) -> bool {
    let core = expand_derived(phi, &m.vocab).unwrap();
    eval_core(m, a, &core)
}

fn eval_core(m: &PdModel, a: usize, phi: &Formula) -> bool {
    match phi {
        Formula::Pred(p, args) => {
            let tuple: Vec<usize> = args
                .iter()
                .map(|v| m.assignments[a].values[m.vocab.var_index(v).unwrap()])
                .collect();
            m.interpretation.get(p).is_some_and(|s| s.contains(&tuple))
        }
        Formula::Dep(x, y) => {
            let ys: VarSet = [y.clone()].into_iter().collect();
            (0..m.size()).all(|b| !agree(m, a, b, x) || agree(m, a, b, &ys))
        }
        Formula::Nom(i) => m.naming.get(i) == Some(&a),
        Formula::Not(f) => !eval_core(m, a, f),
        Formula::And(f, g) => eval_core(m, a, f) && eval_core(m, a, g),
        Formula::Box(x, y, z, f) => (0..m.size())
            .filter(|&b| {
                agree(m, a, b, x) && weakly_above(m, a, b, y) && strictly_above(m, a, b, z)
            })
            .all(|b| eval_core(m, b, f)),
        other => panic!("not a core formula: {other}"),
    }
}

/// `R(X,Y,Z)` from `w`, one pair at a time.
pub fn naive_accessible(m: &RpdModel, w: usize, x: &VarSet, y: &VarSet, z: &VarSet) -> FixedBitSet {
    let mut out = FixedBitSet::with_capacity(m.size());
    for u in 0..m.size() {
        let ok = x.iter().all(|v| m.sim_of(v).unwrap().contains(w, u))
            && y.iter().all(|v| m.leq_of(v).unwrap().contains(w, u))
            && z.iter().all(|v| {
                let r = m.leq_of(v).unwrap();
                r.contains(w, u) && !r.contains(u, w)
            });
        out.set(u, ok);
    }
    out
}

/// The core computed from profiles and utilities alone: profiles chosen by
/// the grand coalition such that no coalition, formed at any profile,
/// can make every member strictly better off whatever happens outside it.
pub fn core_oracle(m: &CpdModel) -> BTreeSet<String> {
    let grand: VarSet = m.players.iter().cloned().collect();
    let u = |id: &str, p: &str| m.utilities[id][p];
    let mut out = BTreeSet::new();
    for a in &m.profiles {
        if a.dom_partition() != vec![grand.clone()] {
            continue;
        }
        let blocked = m.profiles.iter().any(|b| {
            b.dom_partition().into_iter().any(|x| {
                m.profiles
                    .iter()
                    .filter(|c| x.iter().all(|p| c.choices[p] == b.choices[p]))
                    .all(|c| x.iter().all(|p| u(&a.id, p) < u(&c.id, p)))
            })
        });
        if !blocked {
            out.insert(a.id.clone());
        }
    }
    out
}

pub fn ids(m: &CpdModel, s: &FixedBitSet) -> BTreeSet<String> {
    s.ones().map(|k| m.profiles[k].id.clone()).collect()
}
