//! Satisfiability of nominal-free formulas by type elimination.
//!
//! The closure of the input holds its subformulas, every repartition
//! `<X;T;(Y|Z)-T>` of each diamond and the saturation probes
//! `<X;Y;Z+{y}>`. Candidate types are Hintikka sets over the closure;
//! elimination keeps the largest family in which every saturated diamond
//! has a witness. A satisfiable verdict comes with a tree model built from
//! the surviving family and checked by the model checker.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{all_atoms, Atom, Relation, RpdModel};
use crate::semantics::Evaluator;
use crate::syntax::{expand_derived, modal_depth, render, Formula, VarSet, Vocabulary};

/// Removes double negations everywhere.
pub fn normalize(phi: &Formula) -> Formula {
    match phi {
        Formula::Not(a) => match a.as_ref() {
            Formula::Not(b) => normalize(b),
            other => normalize(other).neg(),
        },
        Formula::And(a, b) => normalize(a).and(normalize(b)),
        Formula::Box(x, y, z, a) => Formula::boxed(x.clone(), y.clone(), z.clone(), normalize(a)),
        other => other.clone(),
    }
}

/// A base formula or its negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lit {
    pub base: usize,
    pub positive: bool,
}

impl Lit {
    pub fn negate(self) -> Lit {
        Lit {
            base: self.base,
            positive: !self.positive,
        }
    }

    fn holds(self, val: &FixedBitSet) -> bool {
        val.contains(self.base) == self.positive
    }
}

#[derive(Debug, Clone)]
struct BoxInfo {
    x: u64,
    y: u64,
    z: u64,
    body: Lit,
    /// Boxes `[X;Y;Z+{y}]body` for `y` in `Y`, when `Y` and `Z` are disjoint.
    probes: Vec<usize>,
    /// Boxes `[X;T;U]body` with `T|U = Y|Z`, `T&U` empty and `Z <= U`.
    reparts: Vec<usize>,
}

#[derive(Debug, Clone)]
enum Kind {
    Pred { vars: u64 },
    Dep { x: u64, y: usize },
    And(Lit, Lit),
    Box(BoxInfo),
}

/// The finite formula set a decision is made over.
#[derive(Debug, Clone)]
pub struct Closure {
    root: Formula,
    root_lit: Lit,
    vocab: Vocabulary,
    bases: Vec<Formula>,
    index: HashMap<Formula, usize>,
    kinds: Vec<Kind>,
    atoms_end: usize,
    /// Constraints checked once base `k` is assigned, indexed by `k`.
    triggers: Vec<Vec<Constraint>>,
}

#[derive(Debug, Clone, Copy)]
enum Constraint {
    DepClosure,
    BoxT(usize),
    Mono(usize, usize),
    DepB(usize),
    Saturation(usize),
}

fn mask_of(vars: &[String], x: &VarSet) -> u64 {
    x.iter()
        .filter_map(|v| vars.iter().position(|w| w == v))
        .fold(0, |a, k| a | 1 << k)
}

fn set_of(vars: &[String], m: u64) -> VarSet {
    vars.iter()
        .enumerate()
        .filter(|(k, _)| m >> k & 1 == 1)
        .map(|(_, v)| v.clone())
        .collect()
}

fn height(f: &Formula) -> usize {
    match f {
        Formula::Not(a) => height(a),
        Formula::And(a, b) => 1 + height(a).max(height(b)),
        Formula::Box(_, _, _, a) => 1 + height(a),
        _ => 0,
    }
}

fn strip(f: &Formula) -> &Formula {
    match f {
        Formula::Not(a) => a,
        other => other,
    }
}

fn collect(f: &Formula, seen: &mut BTreeSet<Formula>) {
    let b = strip(f);
    match b {
        Formula::And(a, c) => {
            collect(a, seen);
            collect(c, seen);
        }
        Formula::Box(_, _, _, a) => collect(a, seen),
        _ => {}
    }
    seen.insert(b.clone());
}

fn subsets_of(m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut s = m;
    loop {
        out.push(s);
        if s == 0 {
            break;
        }
        s = (s - 1) & m;
    }
    out
}

impl Closure {
    /// Builds the closure of `alpha`, which must be nominal-free.
    pub fn new(alpha: &Formula, vocab: &Vocabulary, max_closure: usize) -> Result<Closure> {
        vocab.check_formula(alpha)?;
        if !alpha.nominals().is_empty() {
            return Err(Error::Invalid(
                "satisfiability is decided for the nominal-free language only".into(),
            ));
        }
        let mut core = normalize(&expand_derived(alpha, vocab)?);
        if modal_depth(&core) == 0 {
            let top = expand_derived(&Formula::Top, vocab)?;
            core = core.and(Formula::univ(top));
        }
        let used = core.variables();
        let vars: Vec<String> = vocab
            .variables()
            .iter()
            .filter(|v| used.contains(*v))
            .cloned()
            .collect();
        if vars.len() > 63 {
            return Err(Error::Resource("too many variables".into()));
        }
        let mut preds = BTreeMap::new();
        let mut seen = BTreeSet::new();
        collect(&core, &mut seen);
        for f in &seen {
            if let Formula::Pred(p, a) = f {
                preds.insert(p.clone(), a.len());
            }
        }
        let cvocab = Vocabulary::new(vars.clone(), preds, Vec::<String>::new())?;
        let boxes: Vec<Formula> = seen
            .iter()
            .filter(|f| matches!(f, Formula::Box(..)))
            .cloned()
            .collect();
        let mut extra = BTreeSet::new();
        for b in &boxes {
            let Formula::Box(x, y, z, body) = b else {
                unreachable!()
            };
            let all = mask_of(&vars, y) | mask_of(&vars, z);
            for t in subsets_of(all) {
                let rep = Formula::Box(
                    x.clone(),
                    set_of(&vars, t),
                    set_of(&vars, all & !t),
                    body.clone(),
                );
                extra.insert(rep);
            }
            if y.is_disjoint(z) {
                extra.insert(b.clone());
            }
        }
        let mut probes = BTreeSet::new();
        for r in &extra {
            let Formula::Box(x, y, z, body) = r else {
                unreachable!()
            };
            if y.is_disjoint(z) {
                for v in y {
                    let mut z2 = z.clone();
                    z2.insert(v.clone());
                    probes.insert(Formula::Box(x.clone(), y.clone(), z2, body.clone()));
                }
            }
        }
        seen.extend(extra);
        seen.extend(probes);
        if seen.len() > max_closure {
            return Err(Error::Resource(format!(
                "closure has {} base formulas, limit is {max_closure}",
                seen.len()
            )));
        }
        let mut bases: Vec<Formula> = seen.into_iter().collect();
        bases.sort_by_key(height);
        let index: HashMap<Formula, usize> = bases
            .iter()
            .enumerate()
            .map(|(k, f)| (f.clone(), k))
            .collect();
        let lit = |f: &Formula| match f {
            Formula::Not(a) => Lit {
                base: index[a.as_ref()],
                positive: false,
            },
            other => Lit {
                base: index[other],
                positive: true,
            },
        };
        let mut kinds: Vec<Kind> = bases
            .iter()
            .map(|f| match f {
                Formula::Pred(_, args) => Kind::Pred {
                    vars: args
                        .iter()
                        .map(|a| 1u64 << vars.iter().position(|v| v == a).unwrap())
                        .fold(0, |a, b| a | b),
                },
                Formula::Dep(x, y) => Kind::Dep {
                    x: mask_of(&vars, x),
                    y: vars.iter().position(|v| v == y).unwrap(),
                },
                Formula::And(a, b) => Kind::And(lit(a), lit(b)),
                Formula::Box(x, y, z, a) => Kind::Box(BoxInfo {
                    x: mask_of(&vars, x),
                    y: mask_of(&vars, y),
                    z: mask_of(&vars, z),
                    body: lit(a),
                    probes: Vec::new(),
                    reparts: Vec::new(),
                }),
                other => unreachable!("`{other}` is not a base formula"),
            })
            .collect();
        let box_ids: Vec<usize> = (0..bases.len())
            .filter(|&k| matches!(kinds[k], Kind::Box(_)))
            .collect();
        for &b in &box_ids {
            let Formula::Box(x, y, z, body) = &bases[b] else {
                unreachable!()
            };
            let mut pr = Vec::new();
            if y.is_disjoint(z) {
                for v in y {
                    let mut z2 = z.clone();
                    z2.insert(v.clone());
                    pr.push(index[&Formula::Box(x.clone(), y.clone(), z2, body.clone())]);
                }
            }
            let (bx, by, bz, bbody) = match &kinds[b] {
                Kind::Box(i) => (i.x, i.y, i.z, i.body),
                _ => unreachable!(),
            };
            let reps: Vec<usize> = box_ids
                .iter()
                .copied()
                .filter(|&r| match &kinds[r] {
                    Kind::Box(i) => {
                        i.x == bx
                            && i.body == bbody
                            && (i.y | i.z) == (by | bz)
                            && i.y & i.z == 0
                            && i.z & bz == bz
                    }
                    _ => false,
                })
                .collect();
            if let Kind::Box(i) = &mut kinds[b] {
                i.probes = pr;
                i.reparts = reps;
            }
        }
        let atoms_end = kinds
            .iter()
            .position(|k| !matches!(k, Kind::Pred { .. } | Kind::Dep { .. }))
            .unwrap_or(kinds.len());
        let mut triggers = vec![Vec::new(); bases.len()];
        if atoms_end > 0 {
            triggers[atoms_end - 1].push(Constraint::DepClosure);
        }
        for &b in &box_ids {
            let Kind::Box(i) = &kinds[b] else {
                unreachable!()
            };
            if i.z == 0 {
                triggers[b.max(i.body.base)].push(Constraint::BoxT(b));
            }
            if i.body.base < atoms_end {
                triggers[b].push(Constraint::DepB(b));
            }
            let mut last = b;
            for &r in &i.reparts {
                last = last.max(r);
                if let Kind::Box(ri) = &kinds[r] {
                    for &p in &ri.probes {
                        last = last.max(p);
                    }
                }
            }
            triggers[last].push(Constraint::Saturation(b));
            for &c in &box_ids {
                if c != b {
                    if let Kind::Box(j) = &kinds[c] {
                        if j.body == i.body {
                            triggers[b.max(c)].push(Constraint::Mono(b, c));
                        }
                    }
                }
            }
        }
        let root_lit = lit(&core);
        Ok(Closure {
            root: core,
            root_lit,
            vocab: cvocab,
            bases,
            index,
            kinds,
            atoms_end,
            triggers,
        })
    }

    /// The normalized root formula, conjoined with `[{};{};{}]top` when it
    /// has no modality.
    pub fn root(&self) -> &Formula {
        &self.root
    }

    /// The vocabulary restricted to the root's variables and predicates.
    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Number of base formulas; the closure is these and their negations.
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn bases(&self) -> &[Formula] {
        &self.bases
    }

    /// Every closure member: each base and its negation.
    pub fn formulas(&self) -> Vec<Formula> {
        self.bases
            .iter()
            .flat_map(|b| [b.clone(), b.clone().neg()])
            .collect()
    }

    /// The literal of a formula, if it is in the closure after normalizing.
    pub fn literal(&self, phi: &Formula) -> Option<Lit> {
        let n = normalize(&expand_derived(phi, &self.vocab).ok()?);
        match &n {
            Formula::Not(a) => self.index.get(a.as_ref()).map(|&base| Lit {
                base,
                positive: false,
            }),
            other => self.index.get(other).map(|&base| Lit {
                base,
                positive: true,
            }),
        }
    }

    pub fn contains(&self, phi: &Formula) -> bool {
        self.literal(phi).is_some()
    }

    /// The closure members true at `w`.
    pub fn type_at(&self, m: &RpdModel, w: usize) -> Result<Hintikka> {
        let mut ev = Evaluator::new(m);
        let mut val = FixedBitSet::with_capacity(self.len());
        for (k, b) in self.bases.iter().enumerate() {
            val.set(k, ev.holds(w, b)?);
        }
        Ok(Hintikka(val))
    }

    fn var_names(&self) -> &[String] {
        self.vocab.variables()
    }

    /// Armstrong closure of `x` under the dependence atoms true in `val`.
    fn dc(&self, val: &FixedBitSet, x: u64) -> u64 {
        let mut cur = x;
        loop {
            let mut next = cur;
            for k in 0..self.atoms_end {
                if let Kind::Dep { x: dx, y } = self.kinds[k] {
                    if val.contains(k) && dx & next == dx {
                        next |= 1 << y;
                    }
                }
            }
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }

    fn box_info(&self, b: usize) -> &BoxInfo {
        match &self.kinds[b] {
            Kind::Box(i) => i,
            _ => unreachable!("base {b} is not a box"),
        }
    }

    fn atom_vars(&self, a: usize) -> u64 {
        match self.kinds[a] {
            Kind::Pred { vars } => vars,
            Kind::Dep { x, .. } => x,
            _ => unreachable!(),
        }
    }

    fn saturated(&self, val: &FixedBitSet, b: usize) -> bool {
        let i = self.box_info(b);
        !val.contains(b) && i.y & i.z == 0 && i.probes.iter().all(|&p| val.contains(p))
    }

    fn check(&self, c: Constraint, val: &FixedBitSet) -> bool {
        match c {
            Constraint::DepClosure => (0..self.atoms_end).all(|k| match self.kinds[k] {
                Kind::Dep { x, y } => val.contains(k) || self.dc(val, x) >> y & 1 == 0,
                _ => true,
            }),
            Constraint::BoxT(b) => !val.contains(b) || self.box_info(b).body.holds(val),
            Constraint::Mono(b, c) => {
                if !val.contains(b) || val.contains(c) {
                    return true;
                }
                let (i, j) = (self.box_info(b), self.box_info(c));
                let stronger =
                    i.x & !self.dc(val, j.x) == 0 && i.y & !(j.y | j.z) == 0 && i.z & !j.z == 0;
                !stronger
            }
            Constraint::DepB(b) => {
                let i = self.box_info(b);
                val.contains(b)
                    || !i.body.holds(val)
                    || self.atom_vars(i.body.base) & !self.dc(val, i.x) != 0
            }
            Constraint::Saturation(b) => {
                val.contains(b)
                    || self
                        .box_info(b)
                        .reparts
                        .iter()
                        .any(|&r| self.saturated(val, r))
            }
        }
    }

    /// Whether a full truth assignment to the bases is a Hintikka set.
    pub fn is_hintikka(&self, val: &FixedBitSet) -> bool {
        for k in 0..self.len() {
            if let Kind::And(a, b) = self.kinds[k] {
                if val.contains(k) != (a.holds(val) && b.holds(val)) {
                    return false;
                }
            }
            for &c in &self.triggers[k] {
                if !self.check(c, val) {
                    return false;
                }
            }
        }
        true
    }
}

/// A Hintikka set, given by the bases it makes true.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hintikka(pub FixedBitSet);

impl Hintikka {
    pub fn contains(&self, cl: &Closure, phi: &Formula) -> bool {
        cl.literal(phi).is_some_and(|l| l.holds(&self.0))
    }

    pub fn holds(&self, l: Lit) -> bool {
        l.holds(&self.0)
    }

    /// The closure members in the set.
    pub fn formulas(&self, cl: &Closure) -> Vec<Formula> {
        cl.bases
            .iter()
            .enumerate()
            .map(|(k, b)| {
                if self.0.contains(k) {
                    b.clone()
                } else {
                    b.clone().neg()
                }
            })
            .collect()
    }
}

/// All Hintikka sets of the closure, by backtracking with propagation.
pub fn enumerate_hintikka(cl: &Closure, max_candidates: usize) -> Result<Vec<Hintikka>> {
    let n = cl.len();
    let mut out = Vec::new();
    let mut val = FixedBitSet::with_capacity(n);
    fn go(
        cl: &Closure,
        k: usize,
        val: &mut FixedBitSet,
        out: &mut Vec<Hintikka>,
        limit: usize,
    ) -> Result<()> {
        if k == cl.len() {
            if out.len() >= limit {
                return Err(Error::Resource(format!("more than {limit} candidate sets")));
            }
            out.push(Hintikka(val.clone()));
            return Ok(());
        }
        let choices: &[bool] = match cl.kinds[k] {
            Kind::And(a, b) => {
                if a.holds(val) && b.holds(val) {
                    &[true]
                } else {
                    &[false]
                }
            }
            _ => &[true, false],
        };
        for &c in choices {
            val.set(k, c);
            if cl.triggers[k].iter().all(|&t| cl.check(t, val)) {
                go(cl, k + 1, val, out, limit)?;
            }
        }
        val.set(k, false);
        Ok(())
    }
    go(cl, 0, &mut val, &mut out, max_candidates)?;
    Ok(out)
}

/// Subscripts `(X, Y, Z)` as bit masks over the closure's variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Label {
    pub x: u64,
    pub y: u64,
    pub z: u64,
}

impl Label {
    /// Variables outside the closure's vocabulary are dropped.
    pub fn of(cl: &Closure, x: &VarSet, y: &VarSet, z: &VarSet) -> Label {
        let v = cl.var_names();
        Label {
            x: mask_of(v, x),
            y: mask_of(v, y),
            z: mask_of(v, z),
        }
    }

    /// Pulls `(X',Y',Z')` back through `self`.
    fn compose(self, x2: u64, y2: u64, z2: u64) -> Label {
        Label {
            x: self.x & x2,
            y: self.y & y2,
            z: (self.z & y2) | (z2 & self.y) | (self.z & z2),
        }
    }
}

/// The relation between Hintikka sets used for pre-models: each diamond of
/// `sigma`, composed with `(X,Y,Z)`, is in `delta` whenever the composed
/// diamond is in the closure.
pub fn rp_related(
    cl: &Closure,
    delta: &Hintikka,
    sigma: &Hintikka,
    x: &VarSet,
    y: &VarSet,
    z: &VarSet,
) -> bool {
    let lab = Label::of(cl, x, y, z);
    let v = cl.var_names();
    for (b, kind) in cl.kinds.iter().enumerate() {
        let Kind::Box(i) = kind else { continue };
        if sigma.0.contains(b) {
            continue;
        }
        let l = lab.compose(i.x, i.y, i.z);
        let body = cl.bases[b].clone();
        let Formula::Box(_, _, _, inner) = body else {
            unreachable!()
        };
        let combined = Formula::Box(set_of(v, l.x), set_of(v, l.y), set_of(v, l.z), inner);
        if let Some(&k) = cl.index.get(&combined) {
            if delta.0.contains(k) {
                return false;
            }
        }
    }
    true
}

/// A sound strengthening of [`rp_related`] used for elimination: besides
/// the composed diamonds it accounts for every box of `delta` whose
/// relation contains the composed one, with dependence closure, and for
/// atoms over variables `delta` holds fixed. `X` is first replaced by its
/// dependence closure in `delta`.
fn strong_related(cl: &Closure, delta: &FixedBitSet, sigma: &FixedBitSet, lab: Label) -> bool {
    let dcx = cl.dc(delta, lab.x);
    let lab = Label { x: dcx, ..lab };
    for a in 0..cl.atoms_end {
        if cl.atom_vars(a) & !dcx == 0 && delta.contains(a) != sigma.contains(a) {
            return false;
        }
    }
    for (b, kind) in cl.kinds.iter().enumerate() {
        let Kind::Box(i) = kind else { continue };
        if !delta.contains(b) {
            continue;
        }
        if i.x & !dcx == 0
            && i.y & !(lab.y | lab.z) == 0
            && i.z & !lab.z == 0
            && !i.body.holds(sigma)
        {
            return false;
        }
    }
    for (c, kind) in cl.kinds.iter().enumerate() {
        let Kind::Box(j) = kind else { continue };
        if sigma.contains(c) {
            continue;
        }
        let l = lab.compose(j.x, j.y, j.z);
        let dcl = cl.dc(delta, l.x);
        if j.body.base < cl.atoms_end
            && cl.atom_vars(j.body.base) & !dcl == 0
            && j.body.holds(delta)
        {
            return false;
        }
        for (b, kind) in cl.kinds.iter().enumerate() {
            let Kind::Box(i) = kind else { continue };
            if delta.contains(b)
                && i.body == j.body
                && i.x & !dcl == 0
                && i.y & !(l.y | l.z) == 0
                && i.z & !l.z == 0
            {
                return false;
            }
        }
    }
    true
}

/// [`strong_related`] on named subscripts.
pub fn strongly_related(
    cl: &Closure,
    delta: &Hintikka,
    sigma: &Hintikka,
    x: &VarSet,
    y: &VarSet,
    z: &VarSet,
) -> bool {
    strong_related(cl, &delta.0, &sigma.0, Label::of(cl, x, y, z))
}

fn is_witness(cl: &Closure, delta: &FixedBitSet, b: usize, sigma: &FixedBitSet) -> bool {
    let i = cl.box_info(b);
    let lab = Label {
        x: i.x,
        y: i.y,
        z: i.z,
    };
    !i.body.holds(sigma)
        && strong_related(cl, delta, sigma, lab)
        && strong_related(cl, sigma, delta, Label { z: 0, ..lab })
}

/// The surviving family with a chosen witness for every saturated diamond
/// of every member.
#[derive(Debug, Clone)]
pub struct PreModel {
    pub members: Vec<Hintikka>,
    /// `(member, diamond base) -> member`.
    pub witnesses: HashMap<(usize, usize), usize>,
    /// Passes over the candidates until nothing changed.
    pub rounds: usize,
}

/// Greatest fixpoint of witness elimination, visiting candidates in
/// `order` (all of them, by index, when `None`) and deleting a candidate as
/// soon as one of its saturated diamonds lacks a surviving witness.
pub fn eliminate(cl: &Closure, candidates: &[Hintikka], order: Option<&[usize]>) -> PreModel {
    let n = candidates.len();
    let default: Vec<usize> = (0..n).collect();
    let order = order.unwrap_or(&default);
    let mut alive = vec![true; n];
    let sats: Vec<Vec<usize>> = candidates
        .iter()
        .map(|h| {
            (0..cl.len())
                .filter(|&b| matches!(cl.kinds[b], Kind::Box(_)) && cl.saturated(&h.0, b))
                .collect()
        })
        .collect();
    let mut last: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut changed = false;
        for &d in order {
            if !alive[d] {
                continue;
            }
            for &b in &sats[d] {
                if let Some(&w) = last.get(&(d, b)) {
                    if alive[w] {
                        continue;
                    }
                }
                let found = (0..n)
                    .find(|&s| alive[s] && is_witness(cl, &candidates[d].0, b, &candidates[s].0));
                match found {
                    Some(s) => {
                        last.insert((d, b), s);
                    }
                    None => {
                        alive[d] = false;
                        changed = true;
                        break;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&k| alive[k]).collect();
    let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(p, &k)| (k, p)).collect();
    let witnesses = last
        .into_iter()
        .filter(|((d, _), w)| alive[*d] && alive[*w])
        .map(|((d, b), w)| ((pos[&d], b), pos[&w]))
        .collect();
    PreModel {
        members: keep.iter().map(|&k| candidates[k].clone()).collect(),
        witnesses,
        rounds,
    }
}

/// Knobs for [`decide_sat`].
#[derive(Debug, Clone, Copy)]
pub struct SatConfig {
    pub max_closure: usize,
    pub max_candidates: usize,
    /// Depth of the certificate tree; the root's modal depth when `None`.
    pub path_bound: Option<usize>,
    /// Further depths tried when the first tree fails the check.
    pub extra_depth: usize,
    pub max_nodes: usize,
}

impl Default for SatConfig {
    fn default() -> Self {
        SatConfig {
            max_closure: 18,
            max_candidates: 1 << 18,
            path_bound: None,
            extra_depth: 2,
            max_nodes: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Certificate {
    /// The tree model satisfies the root at its root.
    Verified,
    /// The truncated tree did not satisfy the root.
    Unverified { bound: usize },
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Sat {
        premodel: PreModel,
        /// Member of the pre-model containing the root.
        root: usize,
        model: RpdModel,
        certificate: Certificate,
    },
    Unsat,
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat { .. })
    }
}

/// A finished decision with the sizes involved.
#[derive(Debug, Clone)]
pub struct Decision {
    pub closure: Closure,
    pub candidates: usize,
    pub survivors: usize,
    pub verdict: Verdict,
}

/// Decides satisfiability of `alpha` over `vocab`.
pub fn decide_sat(alpha: &Formula, vocab: &Vocabulary, cfg: SatConfig) -> Result<Decision> {
    let cl = Closure::new(alpha, vocab, cfg.max_closure)?;
    let cands = enumerate_hintikka(&cl, cfg.max_candidates)?;
    let pm = eliminate(&cl, &cands, None);
    let survivors = pm.members.len();
    let root = pm.members.iter().position(|h| h.holds(cl.root_lit));
    let verdict = match root {
        None => Verdict::Unsat,
        Some(r) => {
            let start = cfg.path_bound.unwrap_or_else(|| modal_depth(cl.root()));
            let mut model = induced_model(&cl, &pm, r, start, cfg.max_nodes)?;
            let mut certificate = verify_certificate(&model, cl.root(), 0, start)?;
            for bound in start + 1..=start + cfg.extra_depth {
                if certificate == Certificate::Verified {
                    break;
                }
                match induced_model(&cl, &pm, r, bound, cfg.max_nodes) {
                    Ok(m) => {
                        certificate = verify_certificate(&m, cl.root(), 0, bound)?;
                        model = m;
                    }
                    Err(Error::Resource(_)) => break,
                    Err(e) => return Err(e),
                }
            }
            Verdict::Sat {
                premodel: pm,
                root: r,
                model,
                certificate,
            }
        }
    };
    Ok(Decision {
        closure: cl,
        candidates: cands.len(),
        survivors,
        verdict,
    })
}

/// The tree model induced by member `root` of the pre-model: nodes are
/// witness paths of length at most `path_bound`, plus one copy step per
/// failed dependence atom so that it fails in the model too.
pub fn induced_model(
    cl: &Closure,
    pm: &PreModel,
    root: usize,
    path_bound: usize,
    max_nodes: usize,
) -> Result<RpdModel> {
    if root >= pm.members.len() {
        return Err(Error::Invalid(
            "root is not a member of the pre-model".into(),
        ));
    }
    struct Node {
        member: usize,
        parent: Option<(usize, Label)>,
        depth: usize,
    }
    let mut nodes = vec![Node {
        member: root,
        parent: None,
        depth: 0,
    }];
    let mut k = 0;
    while k < nodes.len() {
        let (m, depth) = (nodes[k].member, nodes[k].depth);
        if depth < path_bound {
            let h = &pm.members[m].0;
            for b in 0..cl.len() {
                let Kind::Box(i) = &cl.kinds[b] else { continue };
                if !cl.saturated(h, b) {
                    continue;
                }
                if i.z == 0 && !i.body.holds(h) {
                    continue;
                }
                let Some(&w) = pm.witnesses.get(&(m, b)) else {
                    continue;
                };
                if nodes.len() >= max_nodes {
                    return Err(Error::Resource(format!(
                        "certificate needs more than {max_nodes} points"
                    )));
                }
                nodes.push(Node {
                    member: w,
                    parent: Some((
                        k,
                        Label {
                            x: i.x,
                            y: i.y,
                            z: i.z,
                        },
                    )),
                    depth: depth + 1,
                });
            }
        }
        if depth <= path_bound {
            let h = &pm.members[m].0;
            let mut xs: Vec<u64> = (0..cl.atoms_end)
                .filter_map(|a| match cl.kinds[a] {
                    Kind::Dep { x, .. } if !h.contains(a) => Some(x),
                    _ => None,
                })
                .collect();
            xs.sort_unstable();
            xs.dedup();
            for x in xs {
                if nodes.len() >= max_nodes {
                    return Err(Error::Resource(format!(
                        "certificate needs more than {max_nodes} points"
                    )));
                }
                nodes.push(Node {
                    member: m,
                    parent: Some((k, Label { x, y: 0, z: 0 })),
                    depth: depth + 1,
                });
            }
        }
        k += 1;
    }
    let n = nodes.len();
    let vars = cl.var_names();
    let mut sim = vec![Relation::identity(n); vars.len()];
    let mut leq = vec![Relation::identity(n); vars.len()];
    for (c, node) in nodes.iter().enumerate() {
        let Some((p, lab)) = node.parent else {
            continue;
        };
        let dcx = cl.dc(&pm.members[nodes[p].member].0, lab.x);
        for v in 0..vars.len() {
            if (lab.y | lab.z) >> v & 1 == 1 {
                leq[v].insert(p, c);
            }
            if lab.y >> v & 1 == 1 {
                leq[v].insert(c, p);
            }
            if dcx >> v & 1 == 1 {
                sim[v].insert(p, c);
            }
        }
    }
    let sim = sim.iter().map(Relation::equivalence_closure).collect();
    let leq = leq
        .iter()
        .map(|r| r.transitive_closure().reflexive_closure())
        .collect();
    let mut valuation = BTreeMap::new();
    for atom in all_atoms(&cl.vocab) {
        let f = Formula::Pred(atom.pred.clone(), atom.args.clone());
        let Some(&b) = cl.index.get(&f) else { continue };
        let mut set = FixedBitSet::with_capacity(n);
        for (c, node) in nodes.iter().enumerate() {
            if pm.members[node.member].0.contains(b) {
                set.insert(c);
            }
        }
        if set.count_ones(..) > 0 {
            valuation.insert(
                Atom {
                    pred: atom.pred,
                    args: atom.args,
                },
                set,
            );
        }
    }
    Ok(RpdModel {
        vocab: cl.vocab.clone(),
        points: (0..n).map(|c| format!("n{c}")).collect(),
        sim,
        leq,
        valuation,
        naming: BTreeMap::new(),
    })
}

/// Checks the certificate model at `root`.
pub fn verify_certificate(
    m: &RpdModel,
    alpha: &Formula,
    root: usize,
    bound: usize,
) -> Result<Certificate> {
    let ok = crate::models::validate_rpd(m).is_empty() && Evaluator::new(m).holds(root, alpha)?;
    Ok(if ok {
        Certificate::Verified
    } else {
        Certificate::Unverified { bound }
    })
}

/// Outcome of a bounded search for a finite model.
#[derive(Debug, Clone)]
pub enum FiniteSearch {
    Found {
        model: RpdModel,
        point: usize,
    },
    /// Every model up to this many points was checked.
    NoneUpTo(usize),
    /// The budget ran out; sizes below `complete_up_to` were exhausted.
    Budget {
        checked: u64,
        complete_up_to: usize,
    },
}

fn equivalences(n: usize) -> Vec<Relation> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn go(k: usize, max: usize, labels: &mut Vec<usize>, out: &mut Vec<Relation>) {
        if k == labels.len() {
            out.push(Relation::from_labels(labels));
            return;
        }
        for l in 0..=max + 1 {
            labels[k] = l;
            go(k + 1, max.max(l), labels, out);
        }
    }
    if n > 0 {
        go(1, 0, &mut labels, &mut out);
    }
    out
}

fn preorders(n: usize) -> Vec<Relation> {
    let off: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|(a, b)| a != b)
        .collect();
    (0u64..(1u64 << off.len()))
        .map(|mask| {
            Relation::from_pairs(
                n,
                off.iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> k & 1 == 1)
                    .map(|(_, p)| *p),
            )
            .reflexive_closure()
        })
        .filter(|r| r.non_transitive_witness().is_none())
        .collect()
}

/// Searches all RPD models with up to `max_points` points over the
/// variables and predicates of `alpha`, stopping after `budget` models.
pub fn finite_model_search(
    alpha: &Formula,
    vocab: &Vocabulary,
    max_points: usize,
    budget: u64,
) -> Result<FiniteSearch> {
    vocab.check_formula(alpha)?;
    let used = alpha.variables();
    let mut vars: Vec<String> = vocab
        .variables()
        .iter()
        .filter(|v| used.contains(*v))
        .cloned()
        .collect();
    if vars.is_empty() {
        vars.push(vocab.variables()[0].clone());
    }
    let mut preds = BTreeMap::new();
    let core = normalize(&expand_derived(alpha, vocab)?);
    let mut seen = BTreeSet::new();
    collect(&core, &mut seen);
    let atoms: Vec<Atom> = seen
        .iter()
        .filter_map(|f| match f {
            Formula::Pred(p, a) => {
                preds.insert(p.clone(), a.len());
                Some(Atom {
                    pred: p.clone(),
                    args: a.clone(),
                })
            }
            _ => None,
        })
        .collect();
    let sv = Vocabulary::new(vars.clone(), preds, Vec::<String>::new())?;
    let mut checked = 0u64;
    for n in 1..=max_points {
        let eqs = equivalences(n);
        let pos = preorders(n);
        let k = vars.len();
        let mut idx = vec![(0usize, 0usize); k];
        loop {
            let mut m = RpdModel::discrete(sv.clone(), (0..n).map(|p| format!("w{p}")).collect());
            for v in 0..k {
                m.sim[v] = eqs[idx[v].0].clone();
                m.leq[v] = pos[idx[v].1].clone();
            }
            let cells: Vec<Vec<Vec<usize>>> = atoms
                .iter()
                .map(|a| m.sim_set(&a.vars()).map(|r| r.classes()))
                .collect::<Result<_>>()?;
            let bits: usize = cells.iter().map(Vec::len).sum();
            if bits >= 63 {
                return Err(Error::Resource("valuation space too large".into()));
            }
            for code in 0u64..(1u64 << bits) {
                if checked >= budget {
                    return Ok(FiniteSearch::Budget {
                        checked,
                        complete_up_to: n - 1,
                    });
                }
                checked += 1;
                let mut mm = m.clone();
                let mut bit = 0;
                for (a, cls) in atoms.iter().zip(&cells) {
                    let mut set = FixedBitSet::with_capacity(n);
                    for c in cls {
                        if code >> bit & 1 == 1 {
                            for &w in c {
                                set.insert(w);
                            }
                        }
                        bit += 1;
                    }
                    mm.valuation.insert(a.clone(), set);
                }
                let t = Evaluator::new(&mm).truth_set(alpha)?;
                if let Some(w) = t.ones().next() {
                    return Ok(FiniteSearch::Found {
                        model: mm,
                        point: w,
                    });
                }
            }
            let mut d = 0;
            loop {
                if d == k {
                    break;
                }
                idx[d].1 += 1;
                if idx[d].1 < pos.len() {
                    break;
                }
                idx[d].1 = 0;
                idx[d].0 += 1;
                if idx[d].0 < eqs.len() {
                    break;
                }
                idx[d].0 = 0;
                d += 1;
            }
            if d == k {
                break;
            }
        }
    }
    Ok(FiniteSearch::NoneUpTo(max_points))
}

/// Serializable summary of a decision.
#[derive(Debug, Clone, Serialize)]
pub struct SatReport {
    pub formula: String,
    pub verdict: &'static str,
    pub closure_size: usize,
    pub candidates: usize,
    pub survivors: usize,
    pub certificate: Option<Certificate>,
    pub certificate_points: Option<usize>,
}

impl SatReport {
    pub fn new(alpha: &Formula, d: &Decision) -> Self {
        let (verdict, certificate, points) = match &d.verdict {
            Verdict::Sat {
                certificate, model, ..
            } => ("sat", Some(certificate.clone()), Some(model.size())),
            Verdict::Unsat => ("unsat", None, None),
        };
        SatReport {
            formula: render(alpha),
            verdict,
            closure_size: d.closure.len(),
            candidates: d.candidates,
            survivors: d.survivors,
            certificate,
            certificate_points: points,
        }
    }
}

/// The formula with no finite model: `~([{};{};{z}]bot | <{};{};{z}>[{};{};{z}]bot)`.
pub fn infinite_only_formula(z: &str) -> Formula {
    let s: VarSet = [z.to_string()].into_iter().collect();
    let e = VarSet::new;
    let nothing_better = Formula::boxed(e(), e(), s.clone(), Formula::Bot);
    nothing_better
        .clone()
        .or(Formula::dia(e(), e(), s, nothing_better))
        .neg()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, varset};

    fn voc() -> Vocabulary {
        Vocabulary::new(["x", "y", "z"], vec![("P".into(), 1)], Vec::<String>::new()).unwrap()
    }

    fn f(s: &str) -> Formula {
        parse_formula(s, &voc()).unwrap()
    }

    #[test]
    fn contradiction_is_unsat() {
        let d = decide_sat(&f("D{x}y & ~D{x}y"), &voc(), SatConfig::default()).unwrap();
        assert!(!d.verdict.is_sat());
    }

    #[test]
    fn vacuous_strict_box_is_sat_with_one_point() {
        let d = decide_sat(&f("[{};{};{z}]bot"), &voc(), SatConfig::default()).unwrap();
        let Verdict::Sat {
            model, certificate, ..
        } = d.verdict
        else {
            panic!("expected sat")
        };
        assert_eq!(certificate, Certificate::Verified);
        assert_eq!(model.size(), 1);
    }

    #[test]
    fn depth_zero_root_is_wrapped() {
        let cl = Closure::new(&f("P(x)"), &voc(), 18).unwrap();
        assert_eq!(modal_depth(cl.root()), 1);
        assert!(cl.contains(&f("P(x)")));
        let d = decide_sat(
            &f("P(x)"),
            &voc(),
            SatConfig {
                path_bound: Some(0),
                ..Default::default()
            },
        )
        .unwrap();
        let Verdict::Sat { model, .. } = d.verdict else {
            panic!()
        };
        assert_eq!(model.size(), 1);
    }

    #[test]
    fn closure_holds_repartitions_and_probes() {
        let cl = Closure::new(&f("<{};{y};{z}>P(x)"), &voc(), 18).unwrap();
        for (t, u) in [
            ("{}", "{y,z}"),
            ("{y}", "{z}"),
            ("{z}", "{y}"),
            ("{y,z}", "{}"),
        ] {
            assert!(cl.contains(&f(&format!("<{{}};{t};{u}>P(x)"))), "{t} {u}");
        }
        assert!(cl.contains(&f("<{};{y};{y,z}>P(x)")));
    }

    #[test]
    fn infinite_only_formula_is_sat() {
        let phi = infinite_only_formula("z");
        let d = decide_sat(&phi, &voc(), SatConfig::default()).unwrap();
        assert!(d.verdict.is_sat());
        let r = finite_model_search(&phi, &voc(), 3, 1_000_000).unwrap();
        assert!(matches!(r, FiniteSearch::NoneUpTo(3)));
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for s in [
            "D{x}y & <{x};{};{}>~D{x}y",
            "[{};{y};{}]P(x) & ~P(x)",
            "<{};{y};{z}>P(x)",
        ] {
            let cl = Closure::new(&f(s), &voc(), 18).unwrap();
            let fast = enumerate_hintikka(&cl, 1 << 18).unwrap().len();
            let n = cl.len();
            let slow = (0u64..(1 << n))
                .filter(|m| {
                    let mut v = FixedBitSet::with_capacity(n);
                    for k in 0..n {
                        v.set(k, m >> k & 1 == 1);
                    }
                    cl.is_hintikka(&v)
                })
                .count();
            assert_eq!(fast, slow, "{s}");
        }
    }

    #[test]
    fn sat_example_certificate() {
        let phi = f("D{x}y & <{};{y};{}>P(x)");
        let d = decide_sat(&phi, &voc(), SatConfig::default()).unwrap();
        let Verdict::Sat {
            model, certificate, ..
        } = d.verdict
        else {
            panic!()
        };
        assert_eq!(certificate, Certificate::Verified);
        assert!(crate::models::validate_rpd(&model).is_empty());
    }

    #[test]
    fn relation_is_reflexive_without_strict_part() {
        let cl = Closure::new(&f("<{x};{y};{}>P(x) & [{};{y};{z}]~P(x)"), &voc(), 18).unwrap();
        for h in enumerate_hintikka(&cl, 1 << 18).unwrap() {
            assert!(rp_related(
                &cl,
                &h,
                &h,
                &varset(["x"]),
                &varset(["y"]),
                &VarSet::new()
            ));
        }
    }
}
