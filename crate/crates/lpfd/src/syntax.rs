//! Vocabularies, the formula AST, the parser and printer, and the derived
//! operators used for game-theoretic notions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite set of variable names.
pub type VarSet = BTreeSet<String>;

/// Builds a [`VarSet`] from anything yielding string-like items.
pub fn varset<I, S>(items: I) -> VarSet
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    items.into_iter().map(Into::into).collect()
}

/// Variables, predicates with arities, and nominals.
///
/// Names are unique across the three namespaces and the variable list is
/// never empty, so complements and the constant `top` are always defined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawVocabulary", into = "RawVocabulary")]
pub struct Vocabulary {
    variables: Vec<String>,
    predicates: BTreeMap<String, usize>,
    nominals: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawVocabulary {
    variables: Vec<String>,
    #[serde(default)]
    predicates: BTreeMap<String, usize>,
    #[serde(default)]
    nominals: Vec<String>,
}

impl TryFrom<RawVocabulary> for Vocabulary {
    type Error = Error;
    fn try_from(raw: RawVocabulary) -> Result<Self> {
        Vocabulary::new(raw.variables, raw.predicates, raw.nominals)
    }
}

impl From<Vocabulary> for RawVocabulary {
    fn from(v: Vocabulary) -> Self {
        RawVocabulary {
            variables: v.variables,
            predicates: v.predicates,
            nominals: v.nominals,
        }
    }
}

fn valid_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_ident_char)
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

impl Vocabulary {
    pub fn new<V, P, N>(variables: V, predicates: P, nominals: N) -> Result<Self>
    where
        V: IntoIterator,
        V::Item: Into<String>,
        P: IntoIterator<Item = (String, usize)>,
        N: IntoIterator,
        N::Item: Into<String>,
    {
        let voc = Vocabulary {
            variables: variables.into_iter().map(Into::into).collect(),
            predicates: predicates.into_iter().collect(),
            nominals: nominals.into_iter().map(Into::into).collect(),
        };
        voc.check()?;
        Ok(voc)
    }

    /// A vocabulary with only variables.
    pub fn with_variables<V>(variables: V) -> Result<Self>
    where
        V: IntoIterator,
        V::Item: Into<String>,
    {
        Vocabulary::new(variables, Vec::new(), Vec::<String>::new())
    }

    fn check(&self) -> Result<()> {
        if self.variables.is_empty() {
            return Err(Error::Vocabulary("variable list is empty".into()));
        }
        let mut seen = BTreeSet::new();
        let names = self
            .variables
            .iter()
            .chain(self.predicates.keys())
            .chain(self.nominals.iter());
        for name in names {
            if !valid_ident(name) {
                return Err(Error::Vocabulary(format!("`{name}` is not an identifier")));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Vocabulary(format!("name `{name}` declared twice")));
            }
        }
        Ok(())
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn predicates(&self) -> &BTreeMap<String, usize> {
        &self.predicates
    }

    pub fn nominals(&self) -> &[String] {
        &self.nominals
    }

    pub fn has_variable(&self, x: &str) -> bool {
        self.variables.iter().any(|v| v == x)
    }

    pub fn has_nominal(&self, i: &str) -> bool {
        self.nominals.iter().any(|v| v == i)
    }

    pub fn arity(&self, p: &str) -> Option<usize> {
        self.predicates.get(p).copied()
    }

    pub fn var_index(&self, x: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == x)
    }

    pub fn all_variables(&self) -> VarSet {
        self.variables.iter().cloned().collect()
    }

    /// `-X`, taken inside the declared variables.
    pub fn complement(&self, x: &VarSet) -> VarSet {
        self.variables
            .iter()
            .filter(|v| !x.contains(*v))
            .cloned()
            .collect()
    }

    /// Returns a copy with the given nominals replacing the current ones.
    pub fn with_nominals<N>(&self, nominals: N) -> Result<Self>
    where
        N: IntoIterator,
        N::Item: Into<String>,
    {
        Vocabulary::new(
            self.variables.clone(),
            self.predicates.clone(),
            nominals
                .into_iter()
                .map(Into::into)
                .collect::<Vec<String>>(),
        )
    }

    pub fn check_set(&self, set: &VarSet) -> Result<()> {
        for x in set {
            if !self.has_variable(x) {
                return Err(Error::UnknownIdent(x.clone()));
            }
        }
        Ok(())
    }

    /// Checks that every symbol of `phi` is declared with the right arity.
    pub fn check_formula(&self, phi: &Formula) -> Result<()> {
        use Formula::*;
        match phi {
            Pred(p, args) => {
                let ar = self
                    .arity(p)
                    .ok_or_else(|| Error::UnknownIdent(p.clone()))?;
                if ar != args.len() {
                    return Err(Error::Arity {
                        name: p.clone(),
                        expected: ar,
                        got: args.len(),
                    });
                }
                for a in args {
                    if !self.has_variable(a) {
                        return Err(Error::UnknownIdent(a.clone()));
                    }
                }
                Ok(())
            }
            Dep(x, y) => {
                self.check_set(x)?;
                if self.has_variable(y) {
                    Ok(())
                } else {
                    Err(Error::UnknownIdent(y.clone()))
                }
            }
            Nom(i) => {
                if self.has_nominal(i) {
                    Ok(())
                } else {
                    Err(Error::UnknownIdent(i.clone()))
                }
            }
            Not(a) => self.check_formula(a),
            And(a, b) | Or(a, b) | Imp(a, b) => {
                self.check_formula(a)?;
                self.check_formula(b)
            }
            Box(x, y, z, a) | Dia(x, y, z, a) => {
                self.check_set(x)?;
                self.check_set(y)?;
                self.check_set(z)?;
                self.check_formula(a)
            }
            Top | Bot => Ok(()),
            WPa(x) | SPa(x) | Na(x) | Coal(x) => self.check_set(x),
            Core(x, i) => {
                self.check_set(x)?;
                self.check_formula(&Nom(i.clone()))
            }
            At(i, a) => {
                self.check_formula(&Nom(i.clone()))?;
                self.check_formula(a)
            }
        }
    }
}

/// Formulas. The first six constructors are the core language; the rest
/// are sugar kept by the parser and removed by [`expand_derived`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Pred(String, Vec<String>),
    Dep(VarSet, String),
    Nom(String),
    Not(std::boxed::Box<Formula>),
    And(std::boxed::Box<Formula>, std::boxed::Box<Formula>),
    Box(VarSet, VarSet, VarSet, std::boxed::Box<Formula>),
    Top,
    Bot,
    Or(std::boxed::Box<Formula>, std::boxed::Box<Formula>),
    Imp(std::boxed::Box<Formula>, std::boxed::Box<Formula>),
    Dia(VarSet, VarSet, VarSet, std::boxed::Box<Formula>),
    WPa(VarSet),
    SPa(VarSet),
    Na(VarSet),
    /// The coalition atom `p_X`.
    Coal(VarSet),
    Core(VarSet, String),
    At(String, std::boxed::Box<Formula>),
}

type Bx = std::boxed::Box<Formula>;

fn bx(f: Formula) -> Bx {
    std::boxed::Box::new(f)
}

impl Formula {
    pub fn pred<S: Into<String>>(p: S, args: &[&str]) -> Formula {
        Formula::Pred(p.into(), args.iter().map(|s| s.to_string()).collect())
    }

    pub fn dep<S: Into<String>>(x: VarSet, y: S) -> Formula {
        Formula::Dep(x, y.into())
    }

    /// `D_X Y` as the conjunction of `D_X y` over `y` in `Y`.
    pub fn dep_set(x: &VarSet, y: &VarSet) -> Formula {
        Formula::conj(y.iter().map(|v| Formula::Dep(x.clone(), v.clone())))
    }

    pub fn nom<S: Into<String>>(i: S) -> Formula {
        Formula::Nom(i.into())
    }

    pub fn neg(self) -> Formula {
        Formula::Not(bx(self))
    }

    pub fn and(self, other: Formula) -> Formula {
        Formula::And(bx(self), bx(other))
    }

    pub fn or(self, other: Formula) -> Formula {
        Formula::Or(bx(self), bx(other))
    }

    pub fn imp(self, other: Formula) -> Formula {
        Formula::Imp(bx(self), bx(other))
    }

    pub fn boxed(x: VarSet, y: VarSet, z: VarSet, body: Formula) -> Formula {
        Formula::Box(x, y, z, bx(body))
    }

    pub fn dia(x: VarSet, y: VarSet, z: VarSet, body: Formula) -> Formula {
        Formula::Dia(x, y, z, bx(body))
    }

    pub fn at<S: Into<String>>(i: S, body: Formula) -> Formula {
        Formula::At(i.into(), bx(body))
    }

    /// `𝔻_X φ`, i.e. `[X;{};{}]φ`.
    pub fn dbox(x: VarSet, body: Formula) -> Formula {
        Formula::boxed(x, VarSet::new(), VarSet::new(), body)
    }

    /// The universal modality `[{};{};{}]φ`.
    pub fn univ(body: Formula) -> Formula {
        Formula::dbox(VarSet::new(), body)
    }

    /// The existential modality, dual of [`Formula::univ`].
    pub fn exist(body: Formula) -> Formula {
        Formula::univ(body.neg()).neg()
    }

    /// Left-nested conjunction; the empty conjunction is `top`.
    pub fn conj<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        items
            .into_iter()
            .reduce(|a, b| a.and(b))
            .unwrap_or(Formula::Top)
    }

    /// Left-nested disjunction; the empty disjunction is `bot`.
    pub fn disj<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        items
            .into_iter()
            .reduce(|a, b| a.or(b))
            .unwrap_or(Formula::Bot)
    }

    /// True when the formula uses only the six core constructors.
    pub fn is_core(&self) -> bool {
        use Formula::*;
        match self {
            Pred(..) | Dep(..) | Nom(_) => true,
            Not(a) => a.is_core(),
            And(a, b) => a.is_core() && b.is_core(),
            Box(_, _, _, a) => a.is_core(),
            _ => false,
        }
    }

    /// Flattens a tree of conjunctions into its conjuncts.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            match f {
                Formula::And(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    /// Whether the nominal `i` occurs anywhere in the formula.
    pub fn mentions_nominal(&self, i: &str) -> bool {
        self.nominals().contains(i)
    }

    pub fn nominals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| match f {
            Formula::Nom(i) | Formula::Core(_, i) | Formula::At(i, _) => {
                out.insert(i.clone());
            }
            _ => {}
        });
        out
    }

    /// Variables occurring in the formula, subscripts included.
    pub fn variables(&self) -> VarSet {
        let mut out = VarSet::new();
        self.walk(&mut |f| match f {
            Formula::Pred(_, args) => out.extend(args.iter().cloned()),
            Formula::Dep(x, y) => {
                out.extend(x.iter().cloned());
                out.insert(y.clone());
            }
            Formula::Box(x, y, z, _) | Formula::Dia(x, y, z, _) => {
                out.extend(x.iter().chain(y).chain(z).cloned());
            }
            Formula::WPa(x) | Formula::SPa(x) | Formula::Na(x) | Formula::Coal(x) => {
                out.extend(x.iter().cloned())
            }
            Formula::Core(x, _) => out.extend(x.iter().cloned()),
            _ => {}
        });
        out
    }

    fn walk<F: FnMut(&Formula)>(&self, f: &mut F) {
        use Formula::*;
        f(self);
        match self {
            Not(a) | Box(_, _, _, a) | Dia(_, _, _, a) | At(_, a) => a.walk(f),
            And(a, b) | Or(a, b) | Imp(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            _ => {}
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

fn nonempty_subset(voc: &Vocabulary, x: &VarSet, what: &str) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Invalid(format!(
            "{what}: coalition must be non-empty"
        )));
    }
    voc.check_set(x)
}

fn single(x: &str) -> VarSet {
    let mut s = VarSet::new();
    s.insert(x.to_string());
    s
}

/// Weak Pareto optimality for `X`: `[-X;{};X]bot`.
pub fn mk_wpa(voc: &Vocabulary, x: &VarSet) -> Result<Formula> {
    nonempty_subset(voc, x, "wPa")?;
    Ok(Formula::boxed(
        voc.complement(x),
        VarSet::new(),
        x.clone(),
        Formula::Bot,
    ))
}

/// Strong Pareto optimality for `X`: the conjunction over `x` in `X` of
/// `[-X; X-{x}; {x}]bot`.
pub fn mk_spa(voc: &Vocabulary, x: &VarSet) -> Result<Formula> {
    nonempty_subset(voc, x, "sPa")?;
    let comp = voc.complement(x);
    Ok(Formula::conj(x.iter().map(|v| {
        let mut rest = x.clone();
        rest.remove(v);
        Formula::boxed(comp.clone(), rest, single(v), Formula::Bot)
    })))
}

/// Nash equilibrium for `X`: the conjunction over `x` in `X` of
/// `[-{x};{};{x}]bot`.
pub fn mk_na(voc: &Vocabulary, x: &VarSet) -> Result<Formula> {
    nonempty_subset(voc, x, "Na")?;
    Ok(Formula::conj(x.iter().map(|v| {
        let s = single(v);
        Formula::boxed(voc.complement(&s), VarSet::new(), s, Formula::Bot)
    })))
}

/// The coalition atom `p_X`: every member determines `X` and `X`
/// determines no outsider.
pub fn mk_coalition_atom(voc: &Vocabulary, x: &VarSet) -> Result<Formula> {
    nonempty_subset(voc, x, "p")?;
    let inside = x.iter().map(|i| Formula::dep_set(&single(i), x));
    let outside = voc
        .complement(x)
        .into_iter()
        .map(|j| Formula::Dep(x.clone(), j).neg());
    Ok(Formula::conj(inside.chain(outside)))
}

/// Non-empty subsets of `x` in a fixed order.
pub fn nonempty_subsets(x: &VarSet) -> Vec<VarSet> {
    let items: Vec<&String> = x.iter().collect();
    (1u64..(1u64 << items.len()))
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, s)| (*s).clone())
                .collect()
        })
        .collect()
}

/// The core relativised to coalition `X`, at the profile named `i`.
pub fn mk_core(voc: &Vocabulary, x: &VarSet, i: &str) -> Result<Formula> {
    nonempty_subset(voc, x, "Core")?;
    if !voc.has_nominal(i) {
        return Err(Error::UnknownIdent(i.to_string()));
    }
    let minus = voc.complement(x);
    let mut parts = vec![Formula::nom(i), mk_coalition_atom(voc, x)?];
    for c in nonempty_subsets(x) {
        let choices = Formula::disj(
            c.iter()
                .map(|m| Formula::dia(minus.clone(), single(m), VarSet::new(), Formula::nom(i))),
        );
        let joint: VarSet = minus.union(&c).cloned().collect();
        let body = mk_coalition_atom(voc, &c)?.imp(Formula::dia(
            joint,
            VarSet::new(),
            VarSet::new(),
            choices,
        ));
        parts.push(Formula::dbox(minus.clone(), body));
    }
    Ok(Formula::conj(parts))
}

/// Checks that `pi` is a partition of the vocabulary's variables.
pub fn check_partition(voc: &Vocabulary, pi: &[VarSet]) -> Result<()> {
    let mut seen = VarSet::new();
    for block in pi {
        if block.is_empty() {
            return Err(Error::Invalid("partition has an empty block".into()));
        }
        voc.check_set(block)?;
        for v in block {
            if !seen.insert(v.clone()) {
                return Err(Error::Invalid(format!("`{v}` occurs in two blocks")));
            }
        }
    }
    if seen != voc.all_variables() {
        return Err(Error::Invalid("blocks do not cover every variable".into()));
    }
    Ok(())
}

/// The conjunction of relativised cores over the blocks of `pi`.
pub fn mk_core_partition(voc: &Vocabulary, pi: &[VarSet], i: &str) -> Result<Formula> {
    check_partition(voc, pi)?;
    let parts = pi
        .iter()
        .map(|b| mk_core(voc, b, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Formula::conj(parts))
}

/// Replaces every sugar node by its definition in the core language.
pub fn expand_derived(phi: &Formula, voc: &Vocabulary) -> Result<Formula> {
    use Formula::*;
    let first = voc.variables()[0].clone();
    let top = || Dep(single(&first), first.clone());
    Ok(match phi {
        Pred(..) | Dep(..) | Nom(_) => phi.clone(),
        Not(a) => expand_derived(a, voc)?.neg(),
        And(a, b) => expand_derived(a, voc)?.and(expand_derived(b, voc)?),
        Box(x, y, z, a) => Formula::boxed(x.clone(), y.clone(), z.clone(), expand_derived(a, voc)?),
        Top => top(),
        Bot => top().neg(),
        Or(a, b) => expand_derived(a, voc)?
            .neg()
            .and(expand_derived(b, voc)?.neg())
            .neg(),
        Imp(a, b) => expand_derived(a, voc)?
            .and(expand_derived(b, voc)?.neg())
            .neg(),
        Dia(x, y, z, a) => Formula::boxed(
            x.clone(),
            y.clone(),
            z.clone(),
            expand_derived(a, voc)?.neg(),
        )
        .neg(),
        WPa(x) => expand_derived(&mk_wpa(voc, x)?, voc)?,
        SPa(x) => expand_derived(&mk_spa(voc, x)?, voc)?,
        Na(x) => expand_derived(&mk_na(voc, x)?, voc)?,
        Coal(x) => expand_derived(&mk_coalition_atom(voc, x)?, voc)?,
        Core(x, i) => expand_derived(&mk_core(voc, x, i)?, voc)?,
        At(i, a) => {
            if !voc.has_nominal(i) {
                return Err(Error::UnknownIdent(i.clone()));
            }
            Formula::univ(Nom(i.clone()).and(expand_derived(a, voc)?).neg()).neg()
        }
    })
}

/// Number of nested boxes once the formula is expanded.
pub fn modal_depth(phi: &Formula) -> usize {
    use Formula::*;
    match phi {
        Pred(..) | Dep(..) | Nom(_) | Top | Bot | Coal(_) => 0,
        Not(a) => modal_depth(a),
        And(a, b) | Or(a, b) | Imp(a, b) => modal_depth(a).max(modal_depth(b)),
        Box(_, _, _, a) | Dia(_, _, _, a) | At(_, a) => 1 + modal_depth(a),
        WPa(_) | SPa(_) | Na(_) => 1,
        Core(..) => 3,
    }
}

// ---------------------------------------------------------------- printer

const PREC_IMP: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;

fn render_set(s: &VarSet) -> String {
    let items: Vec<&str> = s.iter().map(String::as_str).collect();
    format!("{{{}}}", items.join(","))
}

/// Canonical concrete syntax; `parse_formula(render(phi))` gives back `phi`.
pub fn render(phi: &Formula) -> String {
    let mut out = String::new();
    render_into(phi, 0, &mut out);
    out
}

fn render_into(phi: &Formula, ctx: u8, out: &mut String) {
    use Formula::*;
    let binary =
        |a: &Formula, b: &Formula, op: &str, prec: u8, lctx: u8, rctx: u8, out: &mut String| {
            let paren = ctx > prec;
            if paren {
                out.push('(');
            }
            render_into(a, lctx, out);
            out.push_str(op);
            render_into(b, rctx, out);
            if paren {
                out.push(')');
            }
        };
    match phi {
        Pred(p, args) => {
            out.push_str(p);
            out.push('(');
            out.push_str(&args.join(","));
            out.push(')');
        }
        Dep(x, y) => {
            out.push('D');
            out.push_str(&render_set(x));
            out.push_str(y);
        }
        Nom(i) => {
            out.push_str("nom:");
            out.push_str(i);
        }
        Top => out.push_str("top"),
        Bot => out.push_str("bot"),
        Not(a) => {
            out.push('~');
            render_into(a, PREC_UNARY, out);
        }
        And(a, b) => binary(a, b, " & ", PREC_AND, PREC_AND, PREC_UNARY, out),
        Or(a, b) => binary(a, b, " | ", PREC_OR, PREC_OR, PREC_AND, out),
        Imp(a, b) => binary(a, b, " -> ", PREC_IMP, PREC_OR, PREC_IMP, out),
        Box(x, y, z, a) => {
            out.push_str(&format!(
                "[{};{};{}]",
                render_set(x),
                render_set(y),
                render_set(z)
            ));
            render_into(a, PREC_UNARY, out);
        }
        Dia(x, y, z, a) => {
            out.push_str(&format!(
                "<{};{};{}>",
                render_set(x),
                render_set(y),
                render_set(z)
            ));
            render_into(a, PREC_UNARY, out);
        }
        WPa(x) => out.push_str(&format!("wPa{}", render_set(x))),
        SPa(x) => out.push_str(&format!("sPa{}", render_set(x))),
        Na(x) => out.push_str(&format!("Na{}", render_set(x))),
        Coal(x) => out.push_str(&format!("p{}", render_set(x))),
        Core(x, i) => out.push_str(&format!("Core{}{}", render_set(x), i)),
        At(i, a) => {
            out.push('@');
            out.push_str(i);
            out.push(' ');
            render_into(a, PREC_UNARY, out);
        }
    }
}

// ----------------------------------------------------------------- lexer

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    LAngle,
    RAngle,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Tilde,
    Amp,
    Bar,
    Arrow,
    At,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut k = 0;
    while k < chars.len() {
        let (pos, c) = chars[k];
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        if is_ident_char(c) {
            let start = k;
            while k < chars.len() && is_ident_char(chars[k].1) {
                k += 1;
            }
            let s: String = chars[start..k].iter().map(|(_, c)| *c).collect();
            out.push((pos, Tok::Ident(s)));
            continue;
        }
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            '<' => Tok::LAngle,
            '>' => Tok::RAngle,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            ':' => Tok::Colon,
            '~' => Tok::Tilde,
            '&' => Tok::Amp,
            '|' => Tok::Bar,
            '@' => Tok::At,
            '-' if k + 1 < chars.len() && chars[k + 1].1 == '>' => {
                k += 1;
                Tok::Arrow
            }
            other => {
                return Err(Error::Parse {
                    pos,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((pos, tok));
        k += 1;
    }
    Ok(out)
}

// ---------------------------------------------------------------- parser

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    k: usize,
    end: usize,
    voc: Option<&'a Vocabulary>,
    seen: Seen,
}

#[derive(Default)]
struct Seen {
    variables: Vec<String>,
    predicates: BTreeMap<String, usize>,
    nominals: Vec<String>,
}

impl<'a> Parser<'a> {
    fn pos(&self) -> usize {
        self.toks.get(self.k).map(|t| t.0).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.k).map(|t| &t.1)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.k += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                self.k += 1;
                Ok(s)
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn variable(&mut self) -> Result<String> {
        let pos = self.pos();
        let v = self.ident("variable")?;
        match self.voc {
            Some(voc) if !voc.has_variable(&v) => Err(unknown_at(pos, &v)),
            Some(_) => Ok(v),
            None => {
                if !self.seen.variables.contains(&v) {
                    self.seen.variables.push(v.clone());
                }
                Ok(v)
            }
        }
    }

    fn nominal(&mut self) -> Result<String> {
        let pos = self.pos();
        let i = self.ident("nominal")?;
        match self.voc {
            Some(voc) if !voc.has_nominal(&i) => Err(unknown_at(pos, &i)),
            Some(_) => Ok(i),
            None => {
                if !self.seen.nominals.contains(&i) {
                    self.seen.nominals.push(i.clone());
                }
                Ok(i)
            }
        }
    }

    fn set(&mut self) -> Result<VarSet> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = VarSet::new();
        if self.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            out.insert(self.variable()?);
            if self.eat(&Tok::RBrace) {
                return Ok(out);
            }
            self.expect(Tok::Comma, "`,` or `}`")?;
        }
    }

    fn triple(&mut self, close: Tok, what: &str) -> Result<(VarSet, VarSet, VarSet)> {
        let x = self.set()?;
        self.expect(Tok::Semi, "`;`")?;
        let y = self.set()?;
        self.expect(Tok::Semi, "`;`")?;
        let z = self.set()?;
        self.expect(close, what)?;
        Ok((x, y, z))
    }

    fn imp(&mut self) -> Result<Formula> {
        let lhs = self.or()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.imp()?;
            return Ok(lhs.imp(rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut acc = self.and()?;
        while self.eat(&Tok::Bar) {
            acc = acc.or(self.and()?);
        }
        Ok(acc)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut acc = self.unary()?;
        while self.eat(&Tok::Amp) {
            acc = acc.and(self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(Tok::Tilde) => {
                self.k += 1;
                Ok(self.unary()?.neg())
            }
            Some(Tok::LBrack) => {
                self.k += 1;
                let (x, y, z) = self.triple(Tok::RBrack, "`]`")?;
                Ok(Formula::boxed(x, y, z, self.unary()?))
            }
            Some(Tok::LAngle) => {
                self.k += 1;
                let (x, y, z) = self.triple(Tok::RAngle, "`>`")?;
                Ok(Formula::dia(x, y, z, self.unary()?))
            }
            Some(Tok::At) => {
                self.k += 1;
                let i = self.nominal()?;
                Ok(Formula::at(i, self.unary()?))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        if self.eat(&Tok::LParen) {
            let f = self.imp()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(f);
        }
        let pos = self.pos();
        let name = self.ident("formula")?;
        let next = self.peek().cloned();
        match (name.as_str(), next) {
            (_, Some(Tok::LParen)) => self.pred_app(pos, name),
            ("top", _) => Ok(Formula::Top),
            ("bot", _) => Ok(Formula::Bot),
            ("nom", Some(Tok::Colon)) => {
                self.k += 1;
                Ok(Formula::Nom(self.nominal()?))
            }
            ("D", Some(Tok::LBrace)) => {
                let x = self.set()?;
                let y = self.variable()?;
                Ok(Formula::Dep(x, y))
            }
            ("wPa", Some(Tok::LBrace)) => Ok(Formula::WPa(self.set()?)),
            ("sPa", Some(Tok::LBrace)) => Ok(Formula::SPa(self.set()?)),
            ("Na", Some(Tok::LBrace)) => Ok(Formula::Na(self.set()?)),
            ("p", Some(Tok::LBrace)) => Ok(Formula::Coal(self.set()?)),
            ("Core", Some(Tok::LBrace)) => {
                let x = self.set()?;
                let i = self.nominal()?;
                Ok(Formula::Core(x, i))
            }
            _ => Err(Error::Parse {
                pos,
                msg: format!("unexpected `{name}`"),
            }),
        }
    }

    fn pred_app(&mut self, pos: usize, name: String) -> Result<Formula> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                args.push(self.variable()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `)`")?;
            }
        }
        match self.voc {
            Some(voc) => match voc.arity(&name) {
                None => return Err(unknown_at(pos, &name)),
                Some(ar) if ar != args.len() => {
                    return Err(Error::Arity {
                        name,
                        expected: ar,
                        got: args.len(),
                    })
                }
                Some(_) => {}
            },
            None => match self.seen.predicates.get(&name) {
                Some(&ar) if ar != args.len() => {
                    return Err(Error::Arity {
                        name,
                        expected: ar,
                        got: args.len(),
                    })
                }
                Some(_) => {}
                None => {
                    self.seen.predicates.insert(name.clone(), args.len());
                }
            },
        }
        Ok(Formula::Pred(name, args))
    }
}

fn unknown_at(pos: usize, name: &str) -> Error {
    Error::Parse {
        pos,
        msg: format!("unknown identifier `{name}`"),
    }
}

fn run_parser(text: &str, voc: Option<&Vocabulary>) -> Result<(Formula, Seen)> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        k: 0,
        end: text.len(),
        voc,
        seen: Seen::default(),
    };
    let f = p.imp()?;
    if p.k != p.toks.len() {
        return p.err("trailing input");
    }
    Ok((f, p.seen))
}

/// Parses `text` against a fixed vocabulary. Sugar nodes are kept.
pub fn parse_formula(text: &str, voc: &Vocabulary) -> Result<Formula> {
    run_parser(text, Some(voc)).map(|(f, _)| f)
}

/// Parses `text` and infers a vocabulary from the symbols it mentions.
///
/// Variables are ordered by first occurrence. A formula without variables
/// gets a single variable `v`.
pub fn parse_formula_open(text: &str) -> Result<(Formula, Vocabulary)> {
    let (f, seen) = run_parser(text, None)?;
    let mut vars = seen.variables;
    if vars.is_empty() {
        vars.push("v".to_string());
    }
    let voc = Vocabulary::new(vars, seen.predicates, seen.nominals)?;
    Ok((f, voc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn voc() -> Vocabulary {
        Vocabulary::new(
            ["x", "y", "z"],
            [("P".to_string(), 1), ("Q".to_string(), 2)],
            ["i", "j"],
        )
        .unwrap()
    }

    #[test]
    fn parses_dependence_atom() {
        let f = parse_formula("D{x}y", &voc()).unwrap();
        assert_eq!(f, Formula::Dep(varset(["x"]), "y".into()));
    }

    #[test]
    fn parses_box() {
        let f = parse_formula("[{x};{y};{}] P(x)", &voc()).unwrap();
        assert_eq!(
            f,
            Formula::boxed(
                varset(["x"]),
                varset(["y"]),
                VarSet::new(),
                Formula::pred("P", &["x"])
            )
        );
    }

    #[test]
    fn wpa_full_coalition_expands_to_empty_complement() {
        let v = Vocabulary::with_variables(["1", "2"]).unwrap();
        let f = parse_formula("wPa{1,2}", &v).unwrap();
        let want = Formula::boxed(
            VarSet::new(),
            VarSet::new(),
            varset(["1", "2"]),
            Formula::Bot,
        );
        assert_eq!(
            expand_derived(&f, &v).unwrap(),
            expand_derived(&want, &v).unwrap()
        );
    }

    #[test]
    fn precedence() {
        let v = voc();
        let f = parse_formula("~P(x) & P(y) | P(z) -> P(x) -> P(y)", &v).unwrap();
        let p = |s: &str| Formula::pred("P", &[s]);
        let want = p("x").neg().and(p("y")).or(p("z")).imp(p("x").imp(p("y")));
        assert_eq!(f, want);
        let g = parse_formula("[{};{};{}]P(x) & P(y)", &v).unwrap();
        assert!(matches!(g, Formula::And(..)));
    }

    #[test]
    fn errors_carry_positions() {
        let v = voc();
        match parse_formula("P(x) & R(x)", &v) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 7),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_formula("Q(x)", &v),
            Err(Error::Arity {
                expected: 2,
                got: 1,
                ..
            })
        ));
        assert!(matches!(
            parse_formula("P(x) &", &v),
            Err(Error::Parse { pos: 6, .. })
        ));
        assert!(parse_formula("P(w)", &v).is_err());
        assert!(parse_formula("nom:k", &v).is_err());
    }

    #[test]
    fn na_singleton() {
        let v = Vocabulary::with_variables(["x", "y"]).unwrap();
        let f = mk_na(&v, &varset(["x"])).unwrap();
        assert_eq!(
            f,
            Formula::boxed(varset(["y"]), VarSet::new(), varset(["x"]), Formula::Bot)
        );
        assert!(mk_na(&v, &VarSet::new()).is_err());
        assert!(mk_na(&v, &varset(["w"])).is_err());
    }

    #[test]
    fn spa_pair() {
        let v = Vocabulary::with_variables(["1", "2"]).unwrap();
        let f = mk_spa(&v, &varset(["1", "2"])).unwrap();
        let want = Formula::boxed(VarSet::new(), varset(["2"]), varset(["1"]), Formula::Bot).and(
            Formula::boxed(VarSet::new(), varset(["1"]), varset(["2"]), Formula::Bot),
        );
        assert_eq!(f, want);
    }

    #[test]
    fn coalition_atoms() {
        let v = Vocabulary::with_variables(["1", "2"]).unwrap();
        let d = |x: &str, y: &str| Formula::Dep(varset([x]), y.to_string());
        let full = mk_coalition_atom(&v, &varset(["1", "2"])).unwrap();
        assert_eq!(
            full,
            d("1", "1")
                .and(d("1", "2"))
                .and(d("2", "1").and(d("2", "2")))
        );
        let one = mk_coalition_atom(&v, &varset(["1"])).unwrap();
        assert_eq!(one, d("1", "1").and(d("1", "2").neg()));
    }

    #[test]
    fn expansion_of_sugar() {
        let v = voc();
        let phi = Formula::pred("P", &["x"]);
        assert_eq!(
            Formula::univ(phi.clone()),
            Formula::boxed(VarSet::new(), VarSet::new(), VarSet::new(), phi.clone())
        );
        let ds = Formula::dep_set(&varset(["x"]), &varset(["y", "z"]));
        assert_eq!(
            ds,
            Formula::dep(varset(["x"]), "y").and(Formula::dep(varset(["x"]), "z"))
        );
        let at = expand_derived(&Formula::at("i", phi.clone()), &v).unwrap();
        let want = Formula::boxed(
            VarSet::new(),
            VarSet::new(),
            VarSet::new(),
            Formula::nom("i").and(phi.clone()).neg(),
        )
        .neg();
        assert_eq!(at, want);
        assert!(matches!(
            expand_derived(&Formula::at("k", phi), &v),
            Err(Error::UnknownIdent(_))
        ));
    }

    #[test]
    fn core_for_grand_coalition_matches_closed_form() {
        let v = Vocabulary::new(["1", "2"], Vec::new(), ["i"]).unwrap();
        let n = v.all_variables();
        let got = mk_core(&v, &n, "i").unwrap();
        let mut parts = vec![Formula::nom("i"), mk_coalition_atom(&v, &n).unwrap()];
        for x in nonempty_subsets(&n) {
            let inner = Formula::disj(x.iter().map(|m| {
                Formula::dia(
                    VarSet::new(),
                    varset([m.as_str()]),
                    VarSet::new(),
                    Formula::nom("i"),
                )
            }));
            parts.push(Formula::univ(
                mk_coalition_atom(&v, &x).unwrap().imp(Formula::dia(
                    x.clone(),
                    VarSet::new(),
                    VarSet::new(),
                    inner,
                )),
            ));
        }
        assert_eq!(got, Formula::conj(parts));
        assert!(mk_core(&v, &n, "k").is_err());
        assert!(mk_core_partition(&v, &[varset(["1"])], "i").is_err());
    }

    #[test]
    fn depth() {
        assert_eq!(modal_depth(&Formula::pred("P", &["x"])), 0);
        let inner = Formula::boxed(VarSet::new(), VarSet::new(), varset(["z"]), Formula::Bot);
        let f = Formula::boxed(VarSet::new(), VarSet::new(), varset(["z"]), inner);
        assert_eq!(modal_depth(&f), 2);
        let v = Vocabulary::new(["1", "2"], Vec::new(), ["i"]).unwrap();
        for s in ["Core{1,2}i", "Na{1,2}", "@i <{1};{};{}>top", "p{1}"] {
            let g = parse_formula(s, &v).unwrap();
            let e = expand_derived(&g, &v).unwrap();
            assert_eq!(modal_depth(&g), modal_depth(&e), "{s}");
        }
    }

    #[test]
    fn render_examples() {
        let v = Vocabulary::new(["1", "2"], vec![("P".into(), 2)], ["a4p"]).unwrap();
        for s in [
            "Na{1,2}",
            "Core{1,2}a4p",
            "@a4p [{1};{};{2}]~P(1,2)",
            "(nom:a4p | top) & bot",
            "D{}1 -> D{1,2}2 -> p{1}",
            "(D{}1 -> D{}2) -> D{}1",
            "~(<{};{1};{}>P(2,2) & sPa{2})",
        ] {
            let f = parse_formula(s, &v).unwrap();
            assert_eq!(render(&f), s);
        }
    }

    #[test]
    fn open_parse_infers_vocabulary() {
        let (f, v) = parse_formula_open("D{x}y & ~D{x}y").unwrap();
        assert_eq!(v.variables(), &["x".to_string(), "y".to_string()]);
        assert!(matches!(f, Formula::And(..)));
        assert!(parse_formula_open("P(x) & P(x,y)").is_err());
        let (_, v) = parse_formula_open("top").unwrap();
        assert_eq!(v.variables().len(), 1);
    }

    #[test]
    fn vocabulary_rejects_clashes() {
        assert!(Vocabulary::new(["x"], vec![("x".into(), 1)], Vec::<String>::new()).is_err());
        assert!(Vocabulary::with_variables(Vec::<String>::new()).is_err());
        assert!(Vocabulary::new(["x"], Vec::new(), ["x"]).is_err());
    }

    #[test]
    fn expansion_yields_core_and_is_idempotent() {
        let v = Vocabulary::new(["1", "2"], Vec::new(), ["i"]).unwrap();
        let f = parse_formula("Core{1}i | wPa{2} -> @i Na{1,2}", &v).unwrap();
        let e = expand_derived(&f, &v).unwrap();
        assert!(e.is_core());
        assert_eq!(expand_derived(&e, &v).unwrap(), e);
        assert_eq!(
            expand_derived(&mk_na(&v, &v.all_variables()).unwrap(), &v)
                .unwrap()
                .conjuncts()
                .len(),
            2
        );
        assert_eq!(
            expand_derived(&mk_spa(&v, &v.all_variables()).unwrap(), &v)
                .unwrap()
                .conjuncts()
                .len(),
            2
        );
    }
}
