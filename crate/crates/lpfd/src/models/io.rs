//! JSON model files. Lists keep their order; maps and pair lists are
//! written sorted so that saving is deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::cpd::validate_cpd;
use super::{
    pd_to_rpd, validate_pd, validate_rpd, Assignment, Atom, CpdModel, PdModel, Profile, Relation,
    RpdModel, Violation,
};
use crate::error::{Error, Result};
use crate::syntax::Vocabulary;

/// Any of the three model kinds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Model {
    Rpd(RpdModel),
    Pd(PdModel),
    Cpd(CpdModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Rpd(_) => "rpd",
            Model::Pd(_) => "pd",
            Model::Cpd(_) => "cpd",
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        match self {
            Model::Rpd(m) => validate_rpd(m),
            Model::Pd(m) => validate_pd(m),
            Model::Cpd(m) => validate_cpd(m),
        }
    }

    /// The relational presentation used for model checking.
    pub fn to_rpd(&self) -> Result<RpdModel> {
        match self {
            Model::Rpd(m) => Ok(m.clone()),
            Model::Pd(m) => pd_to_rpd(m),
            Model::Cpd(m) => m.to_rpd(),
        }
    }
}

/// A model together with the repairs applied while loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedModel {
    pub model: Model,
    pub warnings: Vec<String>,
}

type Pairs = Vec<(String, String)>;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRpd {
    kind: String,
    vocabulary: Vocabulary,
    points: Vec<String>,
    #[serde(default)]
    relations: RawRpdRelations,
    #[serde(default)]
    valuation: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    nominals: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRpdRelations {
    #[serde(default)]
    sim: BTreeMap<String, Pairs>,
    #[serde(default)]
    leq: BTreeMap<String, Pairs>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAssignment {
    id: String,
    values: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPd {
    kind: String,
    vocabulary: Vocabulary,
    objects: Vec<String>,
    assignments: Vec<RawAssignment>,
    #[serde(default)]
    relations: RawPdRelations,
    #[serde(default)]
    valuation: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default)]
    nominals: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPdRelations {
    #[serde(default)]
    pref: BTreeMap<String, Pairs>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    id: String,
    choices: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCpd {
    kind: String,
    players: Vec<String>,
    strategies: Vec<String>,
    profiles: Vec<RawProfile>,
    #[serde(default)]
    utilities: BTreeMap<String, BTreeMap<String, i64>>,
}

fn lookup(names: &[String], name: &str, what: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::Model(format!("unknown {what} `{name}`")))
}

fn relation_from(
    names: &[String],
    pairs: Option<&Pairs>,
    label: &str,
    warnings: &mut Vec<String>,
) -> Result<Relation> {
    let n = names.len();
    let mut r = Relation::empty(n);
    for (a, b) in pairs.into_iter().flatten() {
        r.insert(lookup(names, a, "point")?, lookup(names, b, "point")?);
    }
    let closed = r.reflexive_closure();
    let added = closed.count() - r.count();
    if added > 0 {
        warnings.push(format!("{label}: added {added} reflexive pair(s)"));
    }
    Ok(closed)
}

fn pairs_of(names: &[String], r: &Relation) -> Pairs {
    let mut out: Pairs = r
        .pairs()
        .into_iter()
        .map(|(a, b)| (names[a].clone(), names[b].clone()))
        .collect();
    out.sort();
    out
}

fn check_keys<'a, I: Iterator<Item = &'a String>>(
    keys: I,
    voc: &Vocabulary,
    label: &str,
) -> Result<()> {
    for k in keys {
        if !voc.has_variable(k) {
            return Err(Error::Model(format!("{label}: unknown variable `{k}`")));
        }
    }
    Ok(())
}

fn rpd_from_raw(raw: RawRpd, warnings: &mut Vec<String>) -> Result<RpdModel> {
    let voc = raw.vocabulary;
    let names = raw.points;
    check_keys(raw.relations.sim.keys(), &voc, "sim")?;
    check_keys(raw.relations.leq.keys(), &voc, "leq")?;
    let mut sim = Vec::new();
    let mut leq = Vec::new();
    for x in voc.variables() {
        sim.push(relation_from(
            &names,
            raw.relations.sim.get(x),
            &format!("sim_{x}"),
            warnings,
        )?);
        leq.push(relation_from(
            &names,
            raw.relations.leq.get(x),
            &format!("leq_{x}"),
            warnings,
        )?);
    }
    let mut valuation = BTreeMap::new();
    for (key, pts) in raw.valuation {
        let atom: Atom = key.parse()?;
        match voc.arity(&atom.pred) {
            None => {
                return Err(Error::Model(format!(
                    "valuation: unknown predicate `{}`",
                    atom.pred
                )))
            }
            Some(ar) if ar != atom.args.len() => {
                return Err(Error::Arity {
                    name: atom.pred.clone(),
                    expected: ar,
                    got: atom.args.len(),
                })
            }
            _ => {}
        }
        check_keys(atom.args.iter(), &voc, "valuation")?;
        let mut set = FixedBitSet::with_capacity(names.len());
        for p in pts {
            set.insert(lookup(&names, &p, "point")?);
        }
        valuation.insert(atom, set);
    }
    let mut naming = BTreeMap::new();
    for (i, p) in raw.nominals {
        if !voc.has_nominal(&i) {
            return Err(Error::Model(format!("nominals: `{i}` is not declared")));
        }
        naming.insert(i, lookup(&names, &p, "point")?);
    }
    Ok(RpdModel {
        vocab: voc,
        points: names,
        sim,
        leq,
        valuation,
        naming,
    })
}

fn rpd_to_raw(m: &RpdModel) -> RawRpd {
    let vars = m.vocab.variables();
    RawRpd {
        kind: "rpd".into(),
        vocabulary: m.vocab.clone(),
        points: m.points.clone(),
        relations: RawRpdRelations {
            sim: vars
                .iter()
                .zip(&m.sim)
                .map(|(x, r)| (x.clone(), pairs_of(&m.points, r)))
                .collect(),
            leq: vars
                .iter()
                .zip(&m.leq)
                .map(|(x, r)| (x.clone(), pairs_of(&m.points, r)))
                .collect(),
        },
        valuation: m
            .valuation
            .iter()
            .map(|(a, s)| {
                let mut pts: Vec<String> = s.ones().map(|w| m.points[w].clone()).collect();
                pts.sort();
                (a.to_string(), pts)
            })
            .collect(),
        nominals: m
            .naming
            .iter()
            .map(|(i, &w)| (i.clone(), m.points[w].clone()))
            .collect(),
    }
}

fn pd_from_raw(raw: RawPd, warnings: &mut Vec<String>) -> Result<PdModel> {
    let voc = raw.vocabulary;
    let objects = raw.objects;
    let mut assignments = Vec::new();
    for a in raw.assignments {
        check_keys(a.values.keys(), &voc, &format!("assignment {}", a.id))?;
        let values = voc
            .variables()
            .iter()
            .map(|x| {
                let o = a.values.get(x).ok_or_else(|| {
                    Error::Model(format!("assignment {} lacks variable `{x}`", a.id))
                })?;
                lookup(&objects, o, "object")
            })
            .collect::<Result<Vec<_>>>()?;
        assignments.push(Assignment { id: a.id, values });
    }
    let ids: Vec<String> = assignments.iter().map(|a| a.id.clone()).collect();
    check_keys(raw.relations.pref.keys(), &voc, "pref")?;
    let pref = voc
        .variables()
        .iter()
        .map(|x| {
            relation_from(
                &ids,
                raw.relations.pref.get(x),
                &format!("pref_{x}"),
                warnings,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut interpretation = BTreeMap::new();
    for (p, tuples) in raw.valuation {
        let ar = voc
            .arity(&p)
            .ok_or_else(|| Error::Model(format!("valuation: unknown predicate `{p}`")))?;
        let mut set = BTreeSet::new();
        for t in tuples {
            if t.len() != ar {
                return Err(Error::Arity {
                    name: p.clone(),
                    expected: ar,
                    got: t.len(),
                });
            }
            set.insert(
                t.iter()
                    .map(|o| lookup(&objects, o, "object"))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        interpretation.insert(p, set);
    }
    let mut naming = BTreeMap::new();
    for (i, a) in raw.nominals {
        if !voc.has_nominal(&i) {
            return Err(Error::Model(format!("nominals: `{i}` is not declared")));
        }
        naming.insert(i, lookup(&ids, &a, "assignment")?);
    }
    Ok(PdModel {
        vocab: voc,
        objects,
        interpretation,
        assignments,
        pref,
        naming,
    })
}

fn pd_to_raw(m: &PdModel) -> RawPd {
    let vars = m.vocab.variables();
    let ids: Vec<String> = m.assignments.iter().map(|a| a.id.clone()).collect();
    RawPd {
        kind: "pd".into(),
        vocabulary: m.vocab.clone(),
        objects: m.objects.clone(),
        assignments: m
            .assignments
            .iter()
            .map(|a| RawAssignment {
                id: a.id.clone(),
                values: vars
                    .iter()
                    .zip(&a.values)
                    .map(|(x, &o)| (x.clone(), m.objects[o].clone()))
                    .collect(),
            })
            .collect(),
        relations: RawPdRelations {
            pref: vars
                .iter()
                .zip(&m.pref)
                .map(|(x, r)| (x.clone(), pairs_of(&ids, r)))
                .collect(),
        },
        valuation: m
            .interpretation
            .iter()
            .map(|(p, ts)| {
                let mut tuples: Vec<Vec<String>> = ts
                    .iter()
                    .map(|t| t.iter().map(|&o| m.objects[o].clone()).collect())
                    .collect();
                tuples.sort();
                (p.clone(), tuples)
            })
            .collect(),
        nominals: m
            .naming
            .iter()
            .map(|(i, &a)| (i.clone(), ids[a].clone()))
            .collect(),
    }
}

fn cpd_from_raw(raw: RawCpd) -> CpdModel {
    CpdModel {
        players: raw.players,
        strategies: raw.strategies,
        profiles: raw
            .profiles
            .into_iter()
            .map(|p| Profile {
                id: p.id,
                choices: p.choices,
            })
            .collect(),
        utilities: raw.utilities,
    }
}

fn cpd_to_raw(m: &CpdModel) -> RawCpd {
    RawCpd {
        kind: "cpd".into(),
        players: m.players.clone(),
        strategies: m.strategies.clone(),
        profiles: m
            .profiles
            .iter()
            .map(|p| RawProfile {
                id: p.id.clone(),
                choices: p.choices.clone(),
            })
            .collect(),
        utilities: m.utilities.clone(),
    }
}

fn syntax_error(e: serde_json::Error) -> Error {
    Error::Model(format!("malformed model file: {e}"))
}

/// Parses a model from JSON text. Structural problems are errors with
/// line and column; invariant violations are left to the validators.
pub fn model_from_json(text: &str) -> Result<LoadedModel> {
    let value: Value = serde_json::from_str(text).map_err(syntax_error)?;
    let kind = value
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Model("missing string field `kind`".into()))?;
    let mut warnings = Vec::new();
    let model = match kind {
        "rpd" => Model::Rpd(rpd_from_raw(
            serde_json::from_str(text).map_err(syntax_error)?,
            &mut warnings,
        )?),
        "pd" => Model::Pd(pd_from_raw(
            serde_json::from_str(text).map_err(syntax_error)?,
            &mut warnings,
        )?),
        "cpd" => Model::Cpd(cpd_from_raw(
            serde_json::from_str(text).map_err(syntax_error)?,
        )),
        other => {
            return Err(Error::Model(format!(
                "unknown kind `{other}`, expected pd, rpd or cpd"
            )))
        }
    };
    Ok(LoadedModel { model, warnings })
}

/// Canonical pretty-printed JSON with a trailing newline.
pub fn model_to_json(model: &Model) -> String {
    let mut s = match model {
        Model::Rpd(m) => serde_json::to_string_pretty(&rpd_to_raw(m)),
        Model::Pd(m) => serde_json::to_string_pretty(&pd_to_raw(m)),
        Model::Cpd(m) => serde_json::to_string_pretty(&cpd_to_raw(m)),
    }
    .expect("model serializes");
    s.push('\n');
    s
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LoadedModel> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    model_from_json(&text).map_err(|e| match e {
        Error::Model(msg) => Error::Model(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(model))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
  "kind": "rpd",
  "vocabulary": {"variables": ["x"], "predicates": {"P": 1}},
  "points": ["u", "w"],
  "relations": {"sim": {"x": [["u", "w"], ["w", "u"]]}, "leq": {"x": [["u", "w"]]}},
  "valuation": {"P(x)": ["u", "w"]}
}"#;

    #[test]
    fn reflexive_closure_is_reported() {
        let loaded = model_from_json(SMALL).unwrap();
        assert_eq!(loaded.warnings.len(), 2);
        let Model::Rpd(m) = &loaded.model else {
            panic!()
        };
        assert!(m.sim[0].is_equivalence());
        assert!(validate_rpd(m).is_empty());
    }

    #[test]
    fn save_load_save_is_stable() {
        let loaded = model_from_json(SMALL).unwrap();
        let text = model_to_json(&loaded.model);
        let again = model_from_json(&text).unwrap();
        assert!(again.warnings.is_empty());
        assert_eq!(again.model, loaded.model);
        assert_eq!(model_to_json(&again.model), text);
    }

    #[test]
    fn unknown_predicate_is_an_error() {
        let bad = SMALL.replace("\"P(x)\"", "\"Q(x)\"");
        assert!(
            matches!(model_from_json(&bad), Err(Error::Model(m)) if m.contains("unknown predicate"))
        );
    }

    #[test]
    fn malformed_file_reports_position() {
        let err = model_from_json("{\n  \"kind\": \"rpd\",\n  \"points\": [\n}").unwrap_err();
        assert!(err.to_string().contains("line"));
        let err = model_from_json(&SMALL.replace("\"points\"", "\"pointz\"")).unwrap_err();
        assert!(err.to_string().contains("line"));
    }
}
