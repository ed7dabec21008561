//! Model checking over RPD models, the effectivity function and the
//! superadditivity analysis.
//!
//! PD and CPD models are checked through their relational presentation.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::models::{Atom, PdModel, Relation, RpdModel};
use crate::syntax::{expand_derived, Formula, VarSet};

/// Evaluates formulas on one model, caching truth sets of subformulas and
/// the access relations `R(X,Y,Z)`.
pub struct Evaluator<'m> {
    model: &'m RpdModel,
    strict: Vec<Relation>,
    relations: HashMap<(u64, u64, u64), Relation>,
    memo: HashMap<Formula, FixedBitSet>,
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m RpdModel) -> Self {
        Evaluator {
            model,
            strict: model.leq.iter().map(Relation::strict_part).collect(),
            relations: HashMap::new(),
            memo: HashMap::new(),
        }
    }

    pub fn model(&self) -> &RpdModel {
        self.model
    }

    fn mask(&self, x: &VarSet) -> Result<u64> {
        let mut m = 0u64;
        for v in x {
            let k = self.model.var(v)?;
            if k >= 64 {
                return Err(Error::Resource("more than 64 variables".into()));
            }
            m |= 1 << k;
        }
        Ok(m)
    }

    /// `R(X,Y,Z)`: `∼_x` for `x ∈ X`, `≤_y` for `y ∈ Y` and `<_z` for
    /// `z ∈ Z`, intersected.
    pub fn relation(&mut self, x: &VarSet, y: &VarSet, z: &VarSet) -> Result<&Relation> {
        let key = (self.mask(x)?, self.mask(y)?, self.mask(z)?);
        if !self.relations.contains_key(&key) {
            let n = self.model.size();
            let mut r = Relation::total(n);
            let k = self.model.vocab.variables().len();
            for b in 0..k {
                if key.0 >> b & 1 == 1 {
                    r = r.intersect(&self.model.sim[b]);
                }
                if key.1 >> b & 1 == 1 {
                    r = r.intersect(&self.model.leq[b]);
                }
                if key.2 >> b & 1 == 1 {
                    r = r.intersect(&self.strict[b]);
                }
            }
            self.relations.insert(key, r);
        }
        Ok(&self.relations[&key])
    }

    /// Truth set of any formula; sugar is expanded first.
    pub fn truth_set(&mut self, phi: &Formula) -> Result<FixedBitSet> {
        self.model.vocab.check_formula(phi)?;
        let core = expand_derived(phi, &self.model.vocab)?;
        self.core_truth(&core)
    }

    pub fn holds(&mut self, w: usize, phi: &Formula) -> Result<bool> {
        if w >= self.model.size() {
            return Err(Error::Invalid(format!("point index {w} out of range")));
        }
        Ok(self.truth_set(phi)?.contains(w))
    }

    fn core_truth(&mut self, phi: &Formula) -> Result<FixedBitSet> {
        if let Some(s) = self.memo.get(phi) {
            return Ok(s.clone());
        }
        let n = self.model.size();
        let set = match phi {
            Formula::Pred(p, args) => self.model.atom_set(&Atom {
                pred: p.clone(),
                args: args.clone(),
            }),
            Formula::Dep(x, y) => {
                let cell = self.model.sim_set(x)?;
                let target = self.model.sim_of(y)?;
                let mut s = FixedBitSet::with_capacity(n);
                for w in 0..n {
                    if cell.row(w).is_subset(target.row(w)) {
                        s.insert(w);
                    }
                }
                s
            }
            Formula::Nom(i) => {
                let w = *self
                    .model
                    .naming
                    .get(i)
                    .ok_or_else(|| Error::UnnamedNominal(i.clone()))?;
                let mut s = FixedBitSet::with_capacity(n);
                s.insert(w);
                s
            }
            Formula::Not(a) => {
                let mut s = self.core_truth(a)?;
                s.toggle_range(..);
                s
            }
            Formula::And(a, b) => {
                let mut s = self.core_truth(a)?;
                s.intersect_with(&self.core_truth(b)?);
                s
            }
            Formula::Box(x, y, z, a) => {
                let body = self.core_truth(a)?;
                let r = self.relation(x, y, z)?;
                let mut s = FixedBitSet::with_capacity(n);
                for w in 0..n {
                    if r.row(w).is_subset(&body) {
                        s.insert(w);
                    }
                }
                s
            }
            other => {
                return Err(Error::Invalid(format!(
                    "`{other}` is not in the core language"
                )));
            }
        };
        self.memo.insert(phi.clone(), set.clone());
        Ok(set)
    }
}

/// The points reachable from `w` through `R(X,Y,Z)`.
pub fn accessible(
    m: &RpdModel,
    w: usize,
    x: &VarSet,
    y: &VarSet,
    z: &VarSet,
) -> Result<FixedBitSet> {
    Ok(Evaluator::new(m).relation(x, y, z)?.row(w).clone())
}

pub fn eval(m: &RpdModel, w: usize, phi: &Formula) -> Result<bool> {
    Evaluator::new(m).holds(w, phi)
}

pub fn truth_set(m: &RpdModel, phi: &Formula) -> Result<FixedBitSet> {
    Evaluator::new(m).truth_set(phi)
}

/// The first point where `phi` fails, if any.
pub fn counterexample(m: &RpdModel, phi: &Formula) -> Result<Option<usize>> {
    let s = truth_set(m, phi)?;
    Ok((0..m.size()).find(|&w| !s.contains(w)))
}

pub fn valid_in_model(m: &RpdModel, phi: &Formula) -> Result<bool> {
    Ok(counterexample(m, phi)?.is_none())
}

/// Whether some `∼_X` cell lies inside `s`, i.e. `s ∈ E(X)`.
pub fn effectivity(m: &RpdModel, x: &VarSet, s: &FixedBitSet) -> Result<bool> {
    let cell = m.sim_set(x)?;
    Ok((0..m.size()).any(|w| cell.row(w).is_subset(s)))
}

/// `∃̄𝔻_X φ`.
pub fn can_force(x: &VarSet, phi: Formula) -> Formula {
    Formula::exist(Formula::dbox(x.clone(), phi))
}

/// Outcome of one superadditivity instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperadditivityCheck {
    pub instance: Formula,
    pub holds: bool,
    /// A point where the instance fails.
    pub counterexample: Option<usize>,
}

/// Checks `(∃̄𝔻_X φ1 ∧ ∃̄𝔻_Y φ2) → ∃̄𝔻_{X∪Y}(φ1 ∧ φ2)` in `m`.
pub fn check_superadditivity(
    m: &RpdModel,
    x: &VarSet,
    y: &VarSet,
    phi1: &Formula,
    phi2: &Formula,
) -> Result<SuperadditivityCheck> {
    if !x.is_disjoint(y) {
        return Err(Error::Invalid(
            "superadditivity needs disjoint coalitions".into(),
        ));
    }
    let xy: VarSet = x.union(y).cloned().collect();
    let instance = can_force(x, phi1.clone())
        .and(can_force(y, phi2.clone()))
        .imp(can_force(&xy, phi1.clone().and(phi2.clone())));
    let cx = counterexample(m, &instance)?;
    Ok(SuperadditivityCheck {
        instance,
        holds: cx.is_none(),
        counterexample: cx,
    })
}

/// Whether the assignments restricted to every set of variables form the
/// full product of the objects.
pub fn full_profile_condition(m: &PdModel) -> bool {
    let k = m.vocab.variables().len();
    let o = m.objects.len();
    let needed = (o as u128).checked_pow(k as u32);
    let distinct: std::collections::BTreeSet<&Vec<usize>> =
        m.assignments.iter().map(|a| &a.values).collect();
    needed == Some(distinct.len() as u128)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, varset, Vocabulary};

    fn chain() -> RpdModel {
        let vocab = Vocabulary::new(["x", "y"], vec![("P".into(), 1)], ["i"]).unwrap();
        let mut m = RpdModel::discrete(vocab, vec!["u".into(), "v".into(), "w".into()]);
        m.leq[1] = Relation::from_pairs(3, [(0, 1), (1, 2), (0, 2)]).reflexive_closure();
        m.sim[0] = Relation::from_labels(&[0, 0, 1]);
        let mut p = FixedBitSet::with_capacity(3);
        p.insert(0);
        p.insert(1);
        m.valuation.insert(Atom::new("P", &["x"]), p);
        m.naming.insert("i".into(), 2);
        m
    }

    #[test]
    fn empty_subscripts_give_everything() {
        let m = chain();
        let e = VarSet::new();
        assert_eq!(accessible(&m, 0, &e, &e, &e).unwrap().count_ones(..), 3);
        assert!(!accessible(&m, 1, &e, &e, &varset(["y"]))
            .unwrap()
            .contains(1));
    }

    #[test]
    fn dependence_and_boxes() {
        let m = chain();
        let voc = m.vocab.clone();
        let f = |s: &str| parse_formula(s, &voc).unwrap();
        assert!(eval(&m, 0, &f("D{y}x")).unwrap());
        assert!(!eval(&m, 0, &f("D{x}y")).unwrap());
        assert!(eval(&m, 0, &f("<{};{};{y}>nom:i")).unwrap());
        assert!(!eval(&m, 2, &f("<{};{};{y}>top")).unwrap());
        assert!(eval(&m, 0, &f("[{x};{};{}]P(x)")).unwrap());
        assert!(eval(&m, 0, &f("@i ~P(x)")).unwrap());
        assert_eq!(counterexample(&m, &f("P(x)")).unwrap(), Some(2));
    }

    #[test]
    fn unnamed_nominal_is_an_error() {
        let mut m = chain();
        m.naming.clear();
        let f = parse_formula("nom:i", &m.vocab).unwrap();
        assert_eq!(eval(&m, 0, &f), Err(Error::UnnamedNominal("i".into())));
    }

    #[test]
    fn effectivity_of_empty_coalition() {
        let m = chain();
        let mut s = FixedBitSet::with_capacity(3);
        s.insert_range(0..2);
        assert!(!effectivity(&m, &VarSet::new(), &s).unwrap());
        assert!(effectivity(&m, &varset(["x"]), &s).unwrap());
        s.insert(2);
        assert!(effectivity(&m, &VarSet::new(), &s).unwrap());
    }

    #[test]
    fn overlapping_coalitions_are_rejected() {
        let m = chain();
        let x = varset(["x"]);
        assert!(check_superadditivity(&m, &x, &x, &Formula::Top, &Formula::Top).is_err());
    }
}
