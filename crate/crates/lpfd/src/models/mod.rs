//! Dependence models with preferences, their relational presentation, and
//! coalition-structured choice models.

mod cpd;
mod io;
mod relation;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::syntax::{VarSet, Vocabulary};

pub use cpd::{
    all_partitions, build_cpd_from_game, determined_splits, finer, partition_key, profile_set,
    render_choice, render_partition, validate_cpd, validate_rcpd, Choice, CpdModel, Partition,
    Profile, StrategyProfile,
};
pub use io::{load_model, model_from_json, model_to_json, save_model, LoadedModel, Model};
pub use relation::Relation;

/// An atomic formula `P(x1,...,xn)` used as a valuation key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new<S: Into<String>>(pred: S, args: &[&str]) -> Self {
        Atom {
            pred: pred.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn vars(&self) -> VarSet {
        self.args.iter().cloned().collect()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.pred, self.args.join(","))
    }
}

impl FromStr for Atom {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s
            .find('(')
            .ok_or_else(|| Error::Model(format!("atom `{s}` lacks `(`")))?;
        if !s.ends_with(')') {
            return Err(Error::Model(format!("atom `{s}` lacks `)`")));
        }
        let pred = s[..open].trim().to_string();
        let inner = &s[open + 1..s.len() - 1];
        let args = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(|a| a.trim().to_string()).collect()
        };
        Ok(Atom { pred, args })
    }
}

/// Every atom `P(x...)` over the vocabulary, for all argument tuples.
pub fn all_atoms(voc: &Vocabulary) -> Vec<Atom> {
    let mut out = Vec::new();
    for (p, &ar) in voc.predicates() {
        let vars = voc.variables();
        let mut idx = vec![0usize; ar];
        loop {
            out.push(Atom {
                pred: p.clone(),
                args: idx.iter().map(|&k| vars[k].clone()).collect(),
            });
            let mut k = 0;
            while k < ar {
                idx[k] += 1;
                if idx[k] < vars.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == ar {
                break;
            }
        }
    }
    out
}

/// A failed invariant together with a concrete witness.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub invariant: String,
    pub witness: String,
}

impl Violation {
    pub fn new(invariant: impl Into<String>, witness: impl Into<String>) -> Self {
        Violation {
            invariant: invariant.into(),
            witness: witness.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant, self.witness)
    }
}

/// Relational presentation: points, an equivalence `sim` and a preorder
/// `leq` per variable, a valuation and a partial naming of points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RpdModel {
    pub vocab: Vocabulary,
    pub points: Vec<String>,
    /// Indexed like `vocab.variables()`.
    pub sim: Vec<Relation>,
    /// Indexed like `vocab.variables()`.
    pub leq: Vec<Relation>,
    pub valuation: BTreeMap<Atom, FixedBitSet>,
    pub naming: BTreeMap<String, usize>,
}

impl RpdModel {
    /// A model with identity relations and an empty valuation.
    pub fn discrete(vocab: Vocabulary, points: Vec<String>) -> Self {
        let n = points.len();
        let k = vocab.variables().len();
        RpdModel {
            vocab,
            points,
            sim: vec![Relation::identity(n); k],
            leq: vec![Relation::identity(n); k],
            valuation: BTreeMap::new(),
            naming: BTreeMap::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn point_index(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p == name)
    }

    pub fn var(&self, x: &str) -> Result<usize> {
        self.vocab
            .var_index(x)
            .ok_or_else(|| Error::UnknownIdent(x.to_string()))
    }

    pub fn sim_of(&self, x: &str) -> Result<&Relation> {
        Ok(&self.sim[self.var(x)?])
    }

    pub fn leq_of(&self, x: &str) -> Result<&Relation> {
        Ok(&self.leq[self.var(x)?])
    }

    /// Truth set of an atom; atoms missing from the valuation are false.
    pub fn atom_set(&self, atom: &Atom) -> FixedBitSet {
        self.valuation
            .get(atom)
            .cloned()
            .unwrap_or_else(|| FixedBitSet::with_capacity(self.size()))
    }

    /// `∼_X`, the intersection of `sim_x` over `x` in `X`.
    pub fn sim_set(&self, x: &VarSet) -> Result<Relation> {
        let mut r = Relation::total(self.size());
        for v in x {
            r = r.intersect(self.sim_of(v)?);
        }
        Ok(r)
    }
}

/// Checks equivalence, preorder, (Val) and naming invariants.
pub fn validate_rpd(m: &RpdModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = m.size();
    let names = &m.points;
    let vars = m.vocab.variables();
    if n == 0 {
        out.push(Violation::new("non-empty", "model has no points"));
        return out;
    }
    let distinct: BTreeSet<&String> = names.iter().collect();
    if distinct.len() != n {
        out.push(Violation::new(
            "points: distinct names",
            "a point name repeats",
        ));
    }
    if m.sim.len() != vars.len() || m.leq.len() != vars.len() {
        out.push(Violation::new(
            "relations per variable",
            "relation count differs from variable count",
        ));
        return out;
    }
    for (k, x) in vars.iter().enumerate() {
        let (s, l) = (&m.sim[k], &m.leq[k]);
        if s.size() != n || l.size() != n {
            out.push(Violation::new(
                "relation size",
                format!("relations of `{x}`"),
            ));
            continue;
        }
        if let Some(a) = s.non_reflexive_witness() {
            out.push(Violation::new(
                "equivalence: reflexivity",
                format!("sim_{x} misses ({0},{0})", names[a]),
            ));
        }
        if let Some((a, b)) = s.non_symmetric_witness() {
            out.push(Violation::new(
                "equivalence: symmetry",
                format!(
                    "sim_{x} has ({},{}) but not the converse",
                    names[a], names[b]
                ),
            ));
        }
        if let Some((a, b, c)) = s.non_transitive_witness() {
            out.push(Violation::new(
                "equivalence: transitivity",
                format!("sim_{x} on ({},{},{})", names[a], names[b], names[c]),
            ));
        }
        if let Some(a) = l.non_reflexive_witness() {
            out.push(Violation::new(
                "preorder: reflexivity",
                format!("leq_{x} misses ({0},{0})", names[a]),
            ));
        }
        if let Some((a, b, c)) = l.non_transitive_witness() {
            out.push(Violation::new(
                "preorder: transitivity",
                format!("leq_{x} on ({},{},{})", names[a], names[b], names[c]),
            ));
        }
    }
    for (atom, set) in &m.valuation {
        match m.vocab.arity(&atom.pred) {
            Some(ar) if ar == atom.args.len() => {}
            _ => {
                out.push(Violation::new(
                    "valuation: atom",
                    format!("`{atom}` is not declared"),
                ));
                continue;
            }
        }
        let Ok(rel) = m.sim_set(&atom.vars()) else {
            out.push(Violation::new(
                "valuation: atom",
                format!("`{atom}` has unknown variables"),
            ));
            continue;
        };
        'outer: for w in 0..n {
            for u in rel.row(w).ones() {
                if set.contains(w) != set.contains(u) {
                    out.push(Violation::new(
                        "(Val)",
                        format!(
                            "{} and {} are linked but disagree on {atom}",
                            names[w], names[u]
                        ),
                    ));
                    break 'outer;
                }
            }
        }
    }
    for (i, &p) in &m.naming {
        if !m.vocab.has_nominal(i) {
            out.push(Violation::new(
                "naming",
                format!("`{i}` is not a declared nominal"),
            ));
        }
        if p >= n {
            out.push(Violation::new(
                "naming",
                format!("`{i}` names a missing point"),
            ));
        }
    }
    out
}

/// An assignment of objects to every variable, with an identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub id: String,
    /// Object index per variable, indexed like `vocab.variables()`.
    pub values: Vec<usize>,
}

/// Objects, an interpretation, admissible assignments, and a preorder on
/// assignments per variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdModel {
    pub vocab: Vocabulary,
    pub objects: Vec<String>,
    /// Predicate name to tuples of object indices.
    pub interpretation: BTreeMap<String, BTreeSet<Vec<usize>>>,
    pub assignments: Vec<Assignment>,
    /// Indexed like `vocab.variables()`, relations over assignment indices.
    pub pref: Vec<Relation>,
    /// Nominal to assignment index.
    pub naming: BTreeMap<String, usize>,
}

impl PdModel {
    pub fn size(&self) -> usize {
        self.assignments.len()
    }

    pub fn assignment_index(&self, id: &str) -> Option<usize> {
        self.assignments.iter().position(|a| a.id == id)
    }

    fn var_indices(&self, x: &VarSet) -> Result<Vec<usize>> {
        x.iter()
            .map(|v| {
                self.vocab
                    .var_index(v)
                    .ok_or_else(|| Error::UnknownIdent(v.clone()))
            })
            .collect()
    }

    /// Restriction of assignment `a` to the variables `x`, as object indices.
    pub fn restrict(&self, a: usize, x: &VarSet) -> Result<Vec<usize>> {
        Ok(self
            .var_indices(x)?
            .into_iter()
            .map(|k| self.assignments[a].values[k])
            .collect())
    }
}

/// `=_X`: agreement on every variable of `X`. `=_∅` is the total relation.
pub fn eq_rel(m: &PdModel, x: &VarSet) -> Result<Relation> {
    let labels = (0..m.size())
        .map(|a| m.restrict(a, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(Relation::from_labels(&labels))
}

/// Strict preference and indifference per variable.
pub fn strict_and_indiff(m: &PdModel) -> (Vec<Relation>, Vec<Relation>) {
    (
        m.pref.iter().map(Relation::strict_part).collect(),
        m.pref.iter().map(Relation::symmetric_part).collect(),
    )
}

/// Checks the PD-model invariants.
pub fn validate_pd(m: &PdModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = m.size();
    let k = m.vocab.variables().len();
    if n == 0 {
        out.push(Violation::new("non-empty", "no assignments"));
        return out;
    }
    let ids: BTreeSet<&String> = m.assignments.iter().map(|a| &a.id).collect();
    if ids.len() != n {
        out.push(Violation::new(
            "assignments: distinct ids",
            "an assignment id repeats",
        ));
    }
    for a in &m.assignments {
        if a.values.len() != k || a.values.iter().any(|&o| o >= m.objects.len()) {
            out.push(Violation::new(
                "assignments: total",
                format!("{} is not a total map into the objects", a.id),
            ));
        }
    }
    for (p, tuples) in &m.interpretation {
        let Some(ar) = m.vocab.arity(p) else {
            out.push(Violation::new(
                "interpretation",
                format!("`{p}` is not declared"),
            ));
            continue;
        };
        if let Some(t) = tuples
            .iter()
            .find(|t| t.len() != ar || t.iter().any(|&o| o >= m.objects.len()))
        {
            out.push(Violation::new(
                "interpretation: arity",
                format!("`{p}` contains a tuple of length {}", t.len()),
            ));
        }
    }
    if m.pref.len() != k {
        out.push(Violation::new(
            "relations per variable",
            "preference count differs",
        ));
        return out;
    }
    for (x, r) in m.vocab.variables().iter().zip(&m.pref) {
        if r.size() != n {
            out.push(Violation::new("relation size", format!("pref of `{x}`")));
            continue;
        }
        if let Some(a) = r.non_reflexive_witness() {
            out.push(Violation::new(
                "preorder: reflexivity",
                format!("pref_{x} misses ({0},{0})", m.assignments[a].id),
            ));
        }
        if let Some((a, b, c)) = r.non_transitive_witness() {
            out.push(Violation::new(
                "preorder: transitivity",
                format!(
                    "pref_{x} on ({},{},{})",
                    m.assignments[a].id, m.assignments[b].id, m.assignments[c].id
                ),
            ));
        }
    }
    for (i, &a) in &m.naming {
        if !m.vocab.has_nominal(i) || a >= n {
            out.push(Violation::new(
                "naming",
                format!("`{i}` is not a valid name"),
            ));
        }
    }
    out
}

/// The relational presentation of a PD-model: points are assignments,
/// `sim_x` is `=_x` and `leq_x` is the preference for `x`.
pub fn pd_to_rpd(m: &PdModel) -> Result<RpdModel> {
    let violations = validate_pd(m);
    if let Some(v) = violations.first() {
        return Err(Error::Model(v.to_string()));
    }
    let n = m.size();
    let sim = (0..m.vocab.variables().len())
        .map(|k| {
            let labels: Vec<usize> = m.assignments.iter().map(|a| a.values[k]).collect();
            Relation::from_labels(&labels)
        })
        .collect();
    let mut valuation = BTreeMap::new();
    for atom in all_atoms(&m.vocab) {
        let tuples = m.interpretation.get(&atom.pred);
        let idx: Vec<usize> = atom
            .args
            .iter()
            .map(|v| m.vocab.var_index(v).expect("atom over vocabulary"))
            .collect();
        let mut set = FixedBitSet::with_capacity(n);
        for (a, asg) in m.assignments.iter().enumerate() {
            let tuple: Vec<usize> = idx.iter().map(|&k| asg.values[k]).collect();
            if tuples.is_some_and(|t| t.contains(&tuple)) {
                set.insert(a);
            }
        }
        if set.count_ones(..) > 0 {
            valuation.insert(atom, set);
        }
    }
    Ok(RpdModel {
        vocab: m.vocab.clone(),
        points: m.assignments.iter().map(|a| a.id.clone()).collect(),
        sim,
        leq: m.pref.clone(),
        valuation,
        naming: m.naming.clone(),
    })
}

/// The PD-model induced by an RPD model. Objects are pairs of a variable
/// and one of its equivalence classes, named `x|w` after the least point
/// `w` of the class; assignment `w*` keeps the name of `w`.
///
/// Points that are equivalent for every variable yield assignments with
/// equal values; they are kept as separate assignments so that truth is
/// preserved point by point.
pub fn rpd_to_pd(m: &RpdModel) -> Result<PdModel> {
    let violations = validate_rpd(m);
    if let Some(v) = violations.first() {
        return Err(Error::Model(v.to_string()));
    }
    let n = m.size();
    let vars = m.vocab.variables();
    let mut objects = Vec::new();
    let mut object_of = vec![vec![0usize; vars.len()]; n];
    for (k, x) in vars.iter().enumerate() {
        for cls in m.sim[k].classes() {
            let id = objects.len();
            objects.push(format!("{x}|{}", m.points[cls[0]]));
            for &w in &cls {
                object_of[w][k] = id;
            }
        }
    }
    let assignments = (0..n)
        .map(|w| Assignment {
            id: m.points[w].clone(),
            values: object_of[w].clone(),
        })
        .collect();
    let mut interpretation: BTreeMap<String, BTreeSet<Vec<usize>>> = BTreeMap::new();
    for (atom, set) in &m.valuation {
        let idx: Vec<usize> = atom.args.iter().map(|v| m.var(v)).collect::<Result<_>>()?;
        let entry = interpretation.entry(atom.pred.clone()).or_default();
        for w in set.ones() {
            entry.insert(idx.iter().map(|&k| object_of[w][k]).collect());
        }
    }
    Ok(PdModel {
        vocab: m.vocab.clone(),
        objects,
        interpretation,
        assignments,
        pref: m.leq.clone(),
        naming: m.naming.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::varset;

    fn two_var_pd() -> PdModel {
        let vocab =
            Vocabulary::new(["x", "y"], vec![("P".into(), 1)], Vec::<String>::new()).unwrap();
        let values = [[0, 0], [0, 1], [1, 1], [1, 0]];
        PdModel {
            vocab,
            objects: vec!["o0".into(), "o1".into()],
            interpretation: [("P".to_string(), [vec![1]].into_iter().collect())].into(),
            assignments: values
                .iter()
                .enumerate()
                .map(|(k, v)| Assignment {
                    id: format!("a{k}"),
                    values: v.to_vec(),
                })
                .collect(),
            pref: vec![Relation::identity(4), Relation::total(4)],
            naming: BTreeMap::new(),
        }
    }

    #[test]
    fn atom_round_trip() {
        let a: Atom = "Q(x, y)".parse().unwrap();
        assert_eq!(a, Atom::new("Q", &["x", "y"]));
        assert_eq!(a.to_string(), "Q(x,y)");
        assert!("Q".parse::<Atom>().is_err());
    }

    #[test]
    fn eq_rel_of_empty_set_is_total() {
        let m = two_var_pd();
        assert_eq!(eq_rel(&m, &VarSet::new()).unwrap().count(), 16);
        let ex = eq_rel(&m, &varset(["x"])).unwrap();
        assert!(ex.is_equivalence());
        assert_eq!(ex.count(), 8);
    }

    #[test]
    fn strict_part_of_identity_preference() {
        let (strict, indiff) = strict_and_indiff(&two_var_pd());
        assert_eq!(strict[0].count(), 0);
        assert_eq!(indiff[1].count(), 16);
    }

    #[test]
    fn non_transitive_preference_is_reported() {
        let mut m = two_var_pd();
        m.pref[0] = Relation::from_pairs(4, [(0, 1), (1, 2)]).reflexive_closure();
        let v = validate_pd(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].invariant, "preorder: transitivity");
        assert!(v[0].witness.contains("(a0,a1,a2)"));
    }

    #[test]
    fn translation_keeps_points() {
        let m = two_var_pd();
        let r = pd_to_rpd(&m).unwrap();
        assert_eq!(r.size(), m.size());
        assert!(validate_rpd(&r).is_empty());
        assert_eq!(
            r.atom_set(&Atom::new("P", &["y"]))
                .ones()
                .collect::<Vec<_>>(),
            vec![1, 2]
        );
        let back = rpd_to_pd(&r).unwrap();
        assert!(validate_pd(&back).is_empty());
        assert_eq!(back.size(), 4);
    }

    #[test]
    fn one_point_model_translates_to_one_assignment() {
        let vocab = Vocabulary::with_variables(["x", "y", "z"]).unwrap();
        let m = RpdModel::discrete(vocab, vec!["w".into()]);
        let pd = rpd_to_pd(&m).unwrap();
        assert_eq!(pd.objects.len(), 3);
        assert_eq!(pd.size(), 1);
    }

    #[test]
    fn val_violation_is_reported() {
        let vocab = Vocabulary::new(["x"], vec![("P".into(), 1)], Vec::<String>::new()).unwrap();
        let mut m = RpdModel::discrete(vocab, vec!["u".into(), "w".into()]);
        m.sim[0] = Relation::total(2);
        let mut set = FixedBitSet::with_capacity(2);
        set.insert(0);
        m.valuation.insert(Atom::new("P", &["x"]), set);
        let v = validate_rpd(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].invariant, "(Val)");
    }

    #[test]
    fn all_atoms_enumerates_tuples() {
        let vocab = Vocabulary::new(
            ["x", "y"],
            vec![("Q".into(), 2), ("R".into(), 0)],
            Vec::<String>::new(),
        )
        .unwrap();
        let atoms = all_atoms(&vocab);
        assert_eq!(atoms.len(), 5);
        assert!(atoms.contains(&Atom::new("R", &[])));
    }
}
