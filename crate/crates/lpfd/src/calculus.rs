//! Axiom schemas of the two calculi, instantiation with side conditions,
//! validity-preservation checks for the rules, and a soundness fuzzer.
//!
//! ```
//! use lpfd::calculus::{schemas, System};
//! let ids: Vec<&str> = schemas(System::Lpfd).iter().map(|s| s.id).collect();
//! assert_eq!(
//!     ids,
//!     ["Tau-1", "Tau-2", "Tau-3", "K", "Ord-a", "Ord-b", "Ord-c", "Ord-d", "Ord-e",
//!      "Dep-a", "Dep-b", "Dep-c", "Dep-d"]
//! );
//! let ids: Vec<&str> = schemas(System::Hlpfd).iter().map(|s| s.id).collect();
//! assert_eq!(
//!     ids,
//!     ["Tau-1", "Tau-2", "Tau-3", "K", "Dep", "Nom", "DD-1", "DD-2",
//!      "Ord-1", "Ord-2", "Ord-3", "Ord-4", "Ord-5"]
//! );
//! ```

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{model_to_json, Model, RpdModel};
use crate::random::{random_formula, random_rpd, seeded, subset, FormulaParams};
use crate::semantics::{counterexample, valid_in_model};
use crate::syntax::{render, Formula, VarSet, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Lpfd,
    Hlpfd,
}

impl std::str::FromStr for System {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lpfd" => Ok(System::Lpfd),
            "hlpfd" => Ok(System::Hlpfd),
            other => Err(Error::Invalid(format!("unknown system `{other}`"))),
        }
    }
}

/// Metavariables a schema can mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Phi,
    Psi,
    Chi,
    X,
    Y,
    Z,
    X2,
    Y2,
    Z2,
    S,
    T,
    I,
    J,
    /// A single variable, written `v` or `s` in the listings.
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schema {
    pub id: &'static str,
    pub system: System,
    pub slots: &'static [Slot],
    /// The schema in concrete syntax, with metavariables.
    pub text: &'static str,
}

use Slot::*;

const TAU: [(&str, &[Slot], &str); 3] = [
    ("Tau-1", &[Phi, Psi], "phi -> (psi -> phi)"),
    (
        "Tau-2",
        &[Phi, Psi, Chi],
        "(phi -> (psi -> chi)) -> ((phi -> psi) -> (phi -> chi))",
    ),
    ("Tau-3", &[Phi, Psi], "(~phi -> ~psi) -> (psi -> phi)"),
];

const LPFD: [(&str, &[Slot], &str); 10] = [
    (
        "K",
        &[X, Y, Z, Phi, Psi],
        "[X;Y;Z](phi -> psi) -> ([X;Y;Z]phi -> [X;Y;Z]psi)",
    ),
    ("Ord-a", &[X, Y, Phi], "[X;Y;{}]phi -> phi"),
    (
        "Ord-b",
        &[X, Y, Z, X2, Y2, Z2, Phi],
        "<X;Y;Z><X';Y';Z'>phi -> <X&X';Y&Y';(Z&Y')|(Z&Z')|(Y&Z')>phi",
    ),
    (
        "Ord-c",
        &[X, Y, Z, X2, Y2, Z2, Phi],
        "[X;Y;Z]phi -> [X';Y';Z']phi, X <= X', Y <= Y', Z <= Z'",
    ),
    ("Ord-d", &[X, Y, Z, Phi], "<X;Y;Z>phi -> <X;Y|Z;Z>phi"),
    (
        "Ord-e",
        &[X, Y, Z, Phi, Psi],
        "phi & <X;Y;Z>psi -> <X;Y;Z>(psi & <X;Y;{}>phi) | OR_y <X;Y;Z+y>psi",
    ),
    ("Dep-a", &[X], "D X X"),
    (
        "Dep-b",
        &[X, Phi],
        "phi -> [X;{};{}]phi, phi in Atom(X) with dependence atoms",
    ),
    ("Dep-c", &[X, S, T], "D X S & D S T -> D X T"),
    (
        "Dep-d",
        &[X, S, Y, Z, Phi],
        "D X S & [S;Y;Z]phi -> [X;Y;Z]phi",
    ),
];

const HLPFD: [(&str, &[Slot], &str); 10] = [
    (
        "K",
        &[X, Y, Z, Phi, Psi],
        "[X;Y;Z](phi -> psi) -> ([X;Y;Z]phi -> [X;Y;Z]psi)",
    ),
    (
        "Dep",
        &[X, Phi],
        "phi -> [X;{};{}]phi, phi a predicate atom over X",
    ),
    ("Nom", &[I, Phi], "@i phi -> [{};{};{}](i -> phi)"),
    (
        "DD-1",
        &[X, V, Phi],
        "D X s & [{s};{};{}]phi -> [X;{};{}]phi",
    ),
    ("DD-2", &[X, V, I], "i & ~D X s -> <X;{};{}>[{s};{};{}]~i"),
    ("Ord-1", &[X, Y, Phi], "[X;Y;{}]phi -> phi"),
    ("Ord-2", &[V, Phi], "phi -> [{v};{};{}]<{v};{};{}>phi"),
    (
        "Ord-3",
        &[X, Y, Z, X2, Y2, Z2, Phi],
        "<X;Y;Z><X';Y';Z'>phi -> <X&X';Y&Y';(Z&Y')|(Z&Z')|(Y&Z')>phi",
    ),
    (
        "Ord-4",
        &[V, I, J],
        "@i <{};{};{v}>j <-> @i <{};{v};{}>j & @j ~<{};{v};{}>i",
    ),
    (
        "Ord-5",
        &[X, Y, Z, X2, Y2, Z2, I],
        "<X;Y;Z>i & <X';Y';Z'>i <-> <X|X';Y|Y';Z|Z'>i",
    ),
];

/// The axiom schemas of a calculus, propositional ones first.
pub fn schemas(system: System) -> Vec<Schema> {
    let own: &[(&str, &[Slot], &str)] = match system {
        System::Lpfd => &LPFD,
        System::Hlpfd => &HLPFD,
    };
    TAU.iter()
        .chain(own)
        .map(|&(id, slots, text)| Schema {
            id,
            system,
            slots,
            text,
        })
        .collect()
}

pub fn schema(system: System, id: &str) -> Result<Schema> {
    schemas(system)
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::UnknownIdent(id.to_string()))
}

/// Inference rules of each calculus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    /// From `phi` and `phi -> psi` infer `psi`.
    MP,
    /// From `phi` infer `[X;Y;Z]phi`.
    Nec,
    /// From `i -> phi` infer `phi`, `i` not in `phi`.
    Name,
    /// From `@i <X;Y;Z>j -> @j phi` infer `@i [X;Y;Z]phi`, `i != j`, `j` not in `phi`.
    Paste,
}

pub fn rules(system: System) -> Vec<Rule> {
    match system {
        System::Lpfd => vec![Rule::MP, Rule::Nec],
        System::Hlpfd => vec![Rule::MP, Rule::Nec, Rule::Name, Rule::Paste],
    }
}

/// Values for the metavariables of a schema or rule.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings {
    pub phi: Option<Formula>,
    pub psi: Option<Formula>,
    pub chi: Option<Formula>,
    pub x: Option<VarSet>,
    pub y: Option<VarSet>,
    pub z: Option<VarSet>,
    pub x2: Option<VarSet>,
    pub y2: Option<VarSet>,
    pub z2: Option<VarSet>,
    pub s: Option<VarSet>,
    pub t: Option<VarSet>,
    pub i: Option<String>,
    pub j: Option<String>,
    pub v: Option<String>,
}

fn need<'a, T>(v: &'a Option<T>, name: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::SideCondition(format!("metavariable {name} is not bound")))
}

fn set1(v: &str) -> VarSet {
    [v.to_string()].into_iter().collect()
}

fn empty() -> VarSet {
    VarSet::new()
}

fn inter(a: &VarSet, b: &VarSet) -> VarSet {
    a.intersection(b).cloned().collect()
}

fn union(a: &VarSet, b: &VarSet) -> VarSet {
    a.union(b).cloned().collect()
}

fn iff(a: Formula, b: Formula) -> Formula {
    a.clone().imp(b.clone()).and(b.imp(a))
}

/// Whether `phi` is in `Atom(X)`: a predicate atom over `X`, or, when
/// `with_dep` holds, a dependence atom `D_Y z` with `Y ⊆ X`.
pub fn in_atom(phi: &Formula, x: &VarSet, with_dep: bool) -> bool {
    match phi {
        Formula::Pred(_, args) => args.iter().all(|a| x.contains(a)),
        Formula::Dep(y, _) => with_dep && y.is_subset(x),
        _ => false,
    }
}

/// Builds the instance of `schema` for `b`, checking its side conditions
/// and that everything lies in `vocab`.
pub fn instantiate(schema: &Schema, b: &Bindings, vocab: &Vocabulary) -> Result<Formula> {
    for f in [&b.phi, &b.psi, &b.chi].into_iter().flatten() {
        vocab.check_formula(f)?;
    }
    for s in [&b.x, &b.y, &b.z, &b.x2, &b.y2, &b.z2, &b.s, &b.t]
        .into_iter()
        .flatten()
    {
        for v in s {
            if !vocab.has_variable(v) {
                return Err(Error::UnknownIdent(v.clone()));
            }
        }
    }
    if let Some(v) = &b.v {
        if !vocab.has_variable(v) {
            return Err(Error::UnknownIdent(v.clone()));
        }
    }
    for i in [&b.i, &b.j].into_iter().flatten() {
        if !vocab.has_nominal(i) {
            return Err(Error::SideCondition(format!("`{i}` is not a nominal")));
        }
    }
    let phi = || need(&b.phi, "phi").cloned();
    let psi = || need(&b.psi, "psi").cloned();
    let x = || need(&b.x, "X").cloned();
    let y = || need(&b.y, "Y").cloned();
    let z = || need(&b.z, "Z").cloned();
    let x2 = || need(&b.x2, "X'").cloned();
    let y2 = || need(&b.y2, "Y'").cloned();
    let z2 = || need(&b.z2, "Z'").cloned();
    let v = || need(&b.v, "v").cloned();
    let i = || need(&b.i, "i").cloned();
    let j = || need(&b.j, "j").cloned();
    let f =
        match (schema.system, schema.id) {
            (_, "Tau-1") => phi()?.imp(psi()?.imp(phi()?)),
            (_, "Tau-2") => {
                let (a, c, d) = (phi()?, psi()?, need(&b.chi, "chi")?.clone());
                a.clone()
                    .imp(c.clone().imp(d.clone()))
                    .imp(a.clone().imp(c).imp(a.imp(d)))
            }
            (_, "Tau-3") => phi()?.neg().imp(psi()?.neg()).imp(psi()?.imp(phi()?)),
            (_, "K") => {
                let (a, c, sx, sy, sz) = (phi()?, psi()?, x()?, y()?, z()?);
                let bx = |f: Formula| Formula::boxed(sx.clone(), sy.clone(), sz.clone(), f);
                bx(a.clone().imp(c.clone())).imp(bx(a).imp(bx(c)))
            }
            (System::Lpfd, "Ord-a") | (System::Hlpfd, "Ord-1") => {
                Formula::boxed(x()?, y()?, empty(), phi()?).imp(phi()?)
            }
            (System::Lpfd, "Ord-b") | (System::Hlpfd, "Ord-3") => {
                let (a, c, d, a2, c2, d2) = (x()?, y()?, z()?, x2()?, y2()?, z2()?);
                let strict = union(&union(&inter(&d, &c2), &inter(&d, &d2)), &inter(&c, &d2));
                Formula::dia(
                    a.clone(),
                    c.clone(),
                    d,
                    Formula::dia(a2.clone(), c2.clone(), d2, phi()?),
                )
                .imp(Formula::dia(inter(&a, &a2), inter(&c, &c2), strict, phi()?))
            }
            (System::Lpfd, "Ord-c") => {
                let (a, c, d, a2, c2, d2) = (x()?, y()?, z()?, x2()?, y2()?, z2()?);
                if !a.is_subset(&a2) || !c.is_subset(&c2) || !d.is_subset(&d2) {
                    return Err(Error::SideCondition(
                        "Ord-c needs X <= X', Y <= Y' and Z <= Z'".into(),
                    ));
                }
                Formula::boxed(a, c, d, phi()?).imp(Formula::boxed(a2, c2, d2, phi()?))
            }
            (System::Lpfd, "Ord-d") => {
                let (a, c, d) = (x()?, y()?, z()?);
                Formula::dia(a.clone(), c.clone(), d.clone(), phi()?).imp(Formula::dia(
                    a,
                    union(&c, &d),
                    d,
                    phi()?,
                ))
            }
            (System::Lpfd, "Ord-e") => {
                let (a, c, d, p, q) = (x()?, y()?, z()?, phi()?, psi()?);
                let back = Formula::dia(a.clone(), c.clone(), empty(), p.clone());
                let first = Formula::dia(a.clone(), c.clone(), d.clone(), q.clone().and(back));
                let rest = c.iter().map(|yv| {
                    let mut d2 = d.clone();
                    d2.insert(yv.clone());
                    Formula::dia(a.clone(), c.clone(), d2, q.clone())
                });
                p.and(Formula::dia(a.clone(), c.clone(), d.clone(), q.clone()))
                    .imp(Formula::disj(std::iter::once(first).chain(rest)))
            }
            (System::Lpfd, "Dep-a") => {
                let a = x()?;
                Formula::dep_set(&a, &a)
            }
            (System::Lpfd, "Dep-b") | (System::Hlpfd, "Dep") => {
                let (a, p) = (x()?, phi()?);
                if !in_atom(&p, &a, schema.system == System::Lpfd) {
                    return Err(Error::SideCondition(format!(
                        "`{}` is not in Atom({})",
                        render(&p),
                        show(&a)
                    )));
                }
                p.clone().imp(Formula::dbox(a, p))
            }
            (System::Lpfd, "Dep-c") => {
                let (a, s, t) = (x()?, need(&b.s, "S")?.clone(), need(&b.t, "T")?.clone());
                Formula::dep_set(&a, &s)
                    .and(Formula::dep_set(&s, &t))
                    .imp(Formula::dep_set(&a, &t))
            }
            (System::Lpfd, "Dep-d") => {
                let (a, s, c, d) = (x()?, need(&b.s, "S")?.clone(), y()?, z()?);
                Formula::dep_set(&a, &s)
                    .and(Formula::boxed(s, c.clone(), d.clone(), phi()?))
                    .imp(Formula::boxed(a, c, d, phi()?))
            }
            (System::Hlpfd, "Nom") => {
                let (n, p) = (i()?, phi()?);
                Formula::at(n.clone(), p.clone()).imp(Formula::univ(Formula::nom(n).imp(p)))
            }
            (System::Hlpfd, "DD-1") => {
                let (a, s, p) = (x()?, v()?, phi()?);
                Formula::Dep(a.clone(), s.clone())
                    .and(Formula::dbox(set1(&s), p.clone()))
                    .imp(Formula::dbox(a, p))
            }
            (System::Hlpfd, "DD-2") => {
                let (a, s, n) = (x()?, v()?, i()?);
                Formula::nom(n.clone())
                    .and(Formula::Dep(a.clone(), s.clone()).neg())
                    .imp(Formula::dia(
                        a,
                        empty(),
                        empty(),
                        Formula::dbox(set1(&s), Formula::nom(n).neg()),
                    ))
            }
            (System::Hlpfd, "Ord-2") => {
                let (s, p) = (v()?, phi()?);
                p.clone().imp(Formula::dbox(
                    set1(&s),
                    Formula::dia(set1(&s), empty(), empty(), p),
                ))
            }
            (System::Hlpfd, "Ord-4") => {
                let (s, a, c) = (v()?, i()?, j()?);
                let lhs = Formula::at(
                    a.clone(),
                    Formula::dia(empty(), empty(), set1(&s), Formula::nom(c.clone())),
                );
                let r1 = Formula::at(
                    a.clone(),
                    Formula::dia(empty(), set1(&s), empty(), Formula::nom(c.clone())),
                );
                let r2 = Formula::at(
                    c,
                    Formula::dia(empty(), set1(&s), empty(), Formula::nom(a)).neg(),
                );
                iff(lhs, r1.and(r2))
            }
            (System::Hlpfd, "Ord-5") => {
                let (a, c, d, a2, c2, d2, n) = (x()?, y()?, z()?, x2()?, y2()?, z2()?, i()?);
                let k = Formula::nom(n);
                let lhs = Formula::dia(a.clone(), c.clone(), d.clone(), k.clone())
                    .and(Formula::dia(a2.clone(), c2.clone(), d2.clone(), k.clone()));
                iff(
                    lhs,
                    Formula::dia(union(&a, &a2), union(&c, &c2), union(&d, &d2), k),
                )
            }
            _ => return Err(Error::UnknownIdent(schema.id.to_string())),
        };
    Ok(f)
}

fn show(x: &VarSet) -> String {
    format!("{{{}}}", x.iter().cloned().collect::<Vec<_>>().join(","))
}

/// Outcome of checking one rule application on a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RuleOutcome {
    pub premises_valid: bool,
    pub conclusion_valid: bool,
}

impl RuleOutcome {
    pub fn preserves_validity(&self) -> bool {
        !self.premises_valid || self.conclusion_valid
    }
}

/// The premises and conclusion of a rule for `b`.
pub fn rule_instance(rule: Rule, b: &Bindings) -> Result<(Vec<Formula>, Formula)> {
    let phi = need(&b.phi, "phi")?.clone();
    Ok(match rule {
        Rule::MP => {
            let psi = need(&b.psi, "psi")?.clone();
            (vec![phi.clone(), phi.imp(psi.clone())], psi)
        }
        Rule::Nec => {
            let bx = Formula::boxed(
                need(&b.x, "X")?.clone(),
                need(&b.y, "Y")?.clone(),
                need(&b.z, "Z")?.clone(),
                phi.clone(),
            );
            (vec![phi], bx)
        }
        Rule::Name => {
            let i = need(&b.i, "i")?;
            if phi.mentions_nominal(i) {
                return Err(Error::SideCondition(format!("`{i}` occurs in the formula")));
            }
            (vec![Formula::nom(i.clone()).imp(phi.clone())], phi)
        }
        Rule::Paste => {
            let (i, j) = (need(&b.i, "i")?, need(&b.j, "j")?);
            if i == j {
                return Err(Error::SideCondition("Paste needs distinct nominals".into()));
            }
            if phi.mentions_nominal(j) {
                return Err(Error::SideCondition(format!("`{j}` occurs in the formula")));
            }
            let (x, y, z) = (
                need(&b.x, "X")?.clone(),
                need(&b.y, "Y")?.clone(),
                need(&b.z, "Z")?.clone(),
            );
            let premise = Formula::at(
                i.clone(),
                Formula::dia(x.clone(), y.clone(), z.clone(), Formula::nom(j.clone())),
            )
            .imp(Formula::at(j.clone(), phi.clone()));
            (
                vec![premise],
                Formula::at(i.clone(), Formula::boxed(x, y, z, phi)),
            )
        }
    })
}

fn all_valid(m: &RpdModel, fs: &[Formula]) -> Result<bool> {
    for f in fs {
        if !valid_in_model(m, f)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks that the rule preserves validity on `m`. For Name and Paste the
/// premise counts as valid only if it holds under every choice of the
/// point named by the fresh nominal (`i` for Name, `j` for Paste).
pub fn rule_check(rule: Rule, b: &Bindings, m: &RpdModel) -> Result<RuleOutcome> {
    let (premises, conclusion) = rule_instance(rule, b)?;
    let fresh = match rule {
        Rule::Name => {
            let i = need(&b.i, "i")?;
            if !m.naming.contains_key(i) {
                return Err(Error::UnnamedNominal(i.clone()));
            }
            Some(i.clone())
        }
        Rule::Paste => {
            let i = need(&b.i, "i")?;
            if !m.naming.contains_key(i) {
                return Err(Error::UnnamedNominal(i.clone()));
            }
            Some(need(&b.j, "j")?.clone())
        }
        _ => None,
    };
    let premises_valid = match &fresh {
        None => all_valid(m, &premises)?,
        Some(n) => {
            let mut ok = true;
            for w in 0..m.size() {
                let mut renamed = m.clone();
                renamed.naming.insert(n.clone(), w);
                if !all_valid(&renamed, &premises)? {
                    ok = false;
                    break;
                }
            }
            ok
        }
    };
    Ok(RuleOutcome {
        premises_valid,
        conclusion_valid: valid_in_model(m, &conclusion)?,
    })
}

/// The vocabulary used by the fuzzer.
pub fn fuzz_vocabulary(system: System) -> Vocabulary {
    let noms: Vec<&str> = match system {
        System::Lpfd => vec![],
        System::Hlpfd => vec!["i", "j"],
    };
    Vocabulary::new(
        ["x", "y", "z"],
        vec![("P".into(), 1), ("Q".into(), 2)],
        noms,
    )
    .expect("fixed vocabulary")
}

fn random_atom_over<R: Rng>(
    rng: &mut R,
    vocab: &Vocabulary,
    x: &VarSet,
    with_dep: bool,
) -> Formula {
    let xs: Vec<String> = x.iter().cloned().collect();
    if xs.is_empty() || (with_dep && rng.gen_bool(0.4)) {
        let y = subset(rng, &xs, 0.5);
        let z = vocab.variables().choose(rng).expect("non-empty").clone();
        return Formula::Dep(y, z);
    }
    if rng.gen_bool(0.5) {
        Formula::Pred("P".into(), vec![xs.choose(rng).expect("non-empty").clone()])
    } else {
        Formula::Pred(
            "Q".into(),
            vec![
                xs.choose(rng).expect("non-empty").clone(),
                xs.choose(rng).expect("non-empty").clone(),
            ],
        )
    }
}

/// Random bindings meeting the side conditions of `schema`.
pub fn random_bindings<R: Rng>(rng: &mut R, schema: &Schema, vocab: &Vocabulary) -> Bindings {
    let vars = vocab.variables();
    let params = FormulaParams {
        depth: 2,
        nominals: schema.system == System::Hlpfd,
        sugar: false,
    };
    let formula = |rng: &mut R| random_formula(rng, vocab, params);
    let set = |rng: &mut R| subset(rng, vars, 0.4);
    let mut b = Bindings {
        phi: Some(formula(rng)),
        psi: Some(formula(rng)),
        chi: Some(formula(rng)),
        x: Some(set(rng)),
        y: Some(set(rng)),
        z: Some(set(rng)),
        x2: Some(set(rng)),
        y2: Some(set(rng)),
        z2: Some(set(rng)),
        s: Some(set(rng)),
        t: Some(set(rng)),
        i: vocab.nominals().choose(rng).cloned(),
        j: vocab.nominals().choose(rng).cloned(),
        v: vars.choose(rng).cloned(),
    };
    match schema.id {
        "Ord-c" => {
            b.x2 = Some(union(b.x.as_ref().unwrap(), &set(rng)));
            b.y2 = Some(union(b.y.as_ref().unwrap(), &set(rng)));
            b.z2 = Some(union(b.z.as_ref().unwrap(), &set(rng)));
        }
        "Dep-b" => {
            let x = b.x.clone().unwrap();
            b.phi = Some(random_atom_over(rng, vocab, &x, true));
        }
        "Dep" => {
            let mut x = b.x.clone().unwrap();
            if x.is_empty() {
                x.insert(vars.choose(rng).expect("non-empty").clone());
            }
            b.phi = Some(random_atom_over(rng, vocab, &x, false));
            b.x = Some(x);
        }
        _ => {}
    }
    b
}

/// A schema instance that failed somewhere.
#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub schema: String,
    pub instance: String,
    pub point: String,
    /// The model in the JSON file format.
    pub model: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemaReport {
    pub schema: String,
    pub trials: usize,
    pub counterexamples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzReport {
    pub system: System,
    pub seed: u64,
    pub trials_per_schema: usize,
    pub schemas: Vec<SchemaReport>,
    pub rules: Vec<SchemaReport>,
    /// At most the first ten counterexamples.
    pub counterexamples: Vec<Counterexample>,
}

impl FuzzReport {
    pub fn total_counterexamples(&self) -> usize {
        self.schemas
            .iter()
            .chain(&self.rules)
            .map(|s| s.counterexamples)
            .sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FuzzParams {
    pub trials: usize,
    pub seed: u64,
    pub max_points: usize,
}

/// Instantiates each schema (or only `only`) `trials` times on random
/// models and checks validity; rules are checked the same way, with a
/// valid premise half of the time.
pub fn soundness_fuzz(
    system: System,
    only: Option<&[&str]>,
    params: FuzzParams,
) -> Result<FuzzReport> {
    if params.trials == 0 || params.max_points == 0 {
        return Err(Error::Invalid(
            "trials and max points must be positive".into(),
        ));
    }
    let vocab = fuzz_vocabulary(system);
    let mut rng = seeded(params.seed);
    let mut found = Vec::new();
    let mut per_schema = Vec::new();
    let selected: Vec<Schema> = schemas(system)
        .into_iter()
        .filter(|s| only.is_none_or(|o| o.contains(&s.id)))
        .collect();
    for sc in &selected {
        let mut bad = 0;
        for _ in 0..params.trials {
            let n = rng.gen_range(1..=params.max_points);
            let m = random_rpd(&mut rng, &vocab, n, true);
            let b = random_bindings(&mut rng, sc, &vocab);
            let inst = instantiate(sc, &b, &vocab)?;
            if let Some(w) = counterexample(&m, &inst)? {
                bad += 1;
                if found.len() < 10 {
                    found.push(Counterexample {
                        schema: sc.id.into(),
                        instance: render(&inst),
                        point: m.points[w].clone(),
                        model: model_to_json(&Model::Rpd(m.clone())),
                    });
                }
            }
        }
        per_schema.push(SchemaReport {
            schema: sc.id.into(),
            trials: params.trials,
            counterexamples: bad,
        });
    }
    let mut per_rule = Vec::new();
    if only.is_none() {
        let pool = schemas(System::Lpfd);
        for rule in rules(system) {
            let mut bad = 0;
            for _ in 0..params.trials {
                let n = rng.gen_range(1..=params.max_points);
                let m = random_rpd(&mut rng, &vocab, n, true);
                let sc = pool.choose(&mut rng).expect("non-empty");
                let mut b = random_bindings(&mut rng, sc, &vocab);
                if rng.gen_bool(0.5) {
                    let lpfd_vocab = fuzz_vocabulary(System::Lpfd);
                    let valid =
                        instantiate(sc, &random_bindings(&mut rng, sc, &lpfd_vocab), &lpfd_vocab)?;
                    b.phi = Some(valid);
                }
                if rule == Rule::MP && rng.gen_bool(0.5) {
                    b.psi = b.phi.clone();
                }
                if let Some(i) = &b.i {
                    if rule == Rule::Name && b.phi.as_ref().unwrap().mentions_nominal(i) {
                        continue;
                    }
                }
                if rule == Rule::Paste {
                    b.i = Some("i".into());
                    b.j = Some("j".into());
                    if b.phi.as_ref().unwrap().mentions_nominal("j") {
                        continue;
                    }
                }
                let out = rule_check(rule, &b, &m)?;
                if !out.preserves_validity() {
                    bad += 1;
                    if found.len() < 10 {
                        let (_, concl) = rule_instance(rule, &b)?;
                        found.push(Counterexample {
                            schema: format!("{rule:?}"),
                            instance: render(&concl),
                            point: String::new(),
                            model: model_to_json(&Model::Rpd(m.clone())),
                        });
                    }
                }
            }
            per_rule.push(SchemaReport {
                schema: format!("{rule:?}"),
                trials: params.trials,
                counterexamples: bad,
            });
        }
    }
    Ok(FuzzReport {
        system,
        seed: params.seed,
        trials_per_schema: params.trials,
        schemas: per_schema,
        rules: per_rule,
        counterexamples: found,
    })
}

/// Renders a counterexample list as `schema -> count` for reports.
pub fn summary(report: &FuzzReport) -> BTreeMap<String, usize> {
    report
        .schemas
        .iter()
        .chain(&report.rules)
        .map(|s| (s.schema.clone(), s.counterexamples))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, varset};

    fn voc() -> Vocabulary {
        fuzz_vocabulary(System::Lpfd)
    }

    #[test]
    fn ord_a_instance() {
        let sc = schema(System::Lpfd, "Ord-a").unwrap();
        let b = Bindings {
            x: Some(varset(["x"])),
            y: Some(VarSet::new()),
            phi: Some(Formula::pred("P", &["x"])),
            ..Default::default()
        };
        let f = instantiate(&sc, &b, &voc()).unwrap();
        assert_eq!(f, parse_formula("[{x};{};{}]P(x) -> P(x)", &voc()).unwrap());
    }

    #[test]
    fn dep_b_accepts_dependence_atoms() {
        let sc = schema(System::Lpfd, "Dep-b").unwrap();
        let b = Bindings {
            x: Some(varset(["y"])),
            phi: Some(Formula::dep(varset(["y"]), "z")),
            ..Default::default()
        };
        assert!(instantiate(&sc, &b, &voc()).is_ok());
        let h = schema(System::Hlpfd, "Dep").unwrap();
        let hv = fuzz_vocabulary(System::Hlpfd);
        assert!(matches!(
            instantiate(&h, &b, &hv),
            Err(Error::SideCondition(_))
        ));
    }

    #[test]
    fn ord_c_side_condition() {
        let sc = schema(System::Lpfd, "Ord-c").unwrap();
        let b = Bindings {
            x: Some(varset(["x"])),
            y: Some(VarSet::new()),
            z: Some(VarSet::new()),
            x2: Some(varset(["y"])),
            y2: Some(VarSet::new()),
            z2: Some(VarSet::new()),
            phi: Some(Formula::Top),
            ..Default::default()
        };
        assert!(matches!(
            instantiate(&sc, &b, &voc()),
            Err(Error::SideCondition(_))
        ));
    }

    #[test]
    fn name_needs_a_named_nominal() {
        let hv = fuzz_vocabulary(System::Hlpfd);
        let m = RpdModel::discrete(hv, vec!["w".into()]);
        let b = Bindings {
            phi: Some(Formula::Top),
            i: Some("i".into()),
            ..Default::default()
        };
        assert_eq!(
            rule_check(Rule::Name, &b, &m),
            Err(Error::UnnamedNominal("i".into()))
        );
    }

    #[test]
    fn small_fuzz_is_clean() {
        for system in [System::Lpfd, System::Hlpfd] {
            let r = soundness_fuzz(
                system,
                None,
                FuzzParams {
                    trials: 40,
                    seed: 1,
                    max_points: 4,
                },
            )
            .unwrap();
            assert_eq!(
                r.total_counterexamples(),
                0,
                "{:?}",
                r.counterexamples.first()
            );
        }
    }
}
