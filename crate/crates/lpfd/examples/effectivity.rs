//! Which sets a coalition can force, and where superadditivity breaks.

use std::collections::{BTreeMap, BTreeSet};

use lpfd::models::{pd_to_rpd, Assignment, Relation};
use lpfd::semantics::{check_superadditivity, effectivity, full_profile_condition, truth_set};
use lpfd::syntax::varset;
use lpfd::{parse_formula, PdModel, Vocabulary};

fn model(rows: &[[usize; 2]]) -> PdModel {
    let voc = Vocabulary::new(
        ["x", "y"],
        vec![("Left".into(), 1), ("Up".into(), 1)],
        Vec::<String>::new(),
    )
    .unwrap();
    PdModel {
        vocab: voc,
        objects: vec!["a".into(), "b".into()],
        interpretation: BTreeMap::from([
            ("Left".to_string(), BTreeSet::from([vec![0]])),
            ("Up".to_string(), BTreeSet::from([vec![1]])),
        ]),
        assignments: rows
            .iter()
            .enumerate()
            .map(|(k, r)| Assignment {
                id: format!("s{k}"),
                values: r.to_vec(),
            })
            .collect(),
        pref: vec![Relation::total(rows.len()), Relation::total(rows.len())],
        naming: BTreeMap::new(),
    }
}

fn main() -> lpfd::Result<()> {
    let (x, y) = (varset(["x"]), varset(["y"]));
    for (name, rows) in [
        ("product", vec![[0, 0], [0, 1], [1, 0], [1, 1]]),
        ("diagonal", vec![[0, 0], [1, 1]]),
    ] {
        let pd = model(&rows);
        let m = pd_to_rpd(&pd)?;
        let (f, g) = (
            parse_formula("Left(x)", &m.vocab)?,
            parse_formula("Up(y)", &m.vocab)?,
        );
        println!(
            "{name} model, full product: {}",
            full_profile_condition(&pd)
        );
        println!(
            "  x forces Left(x): {}",
            effectivity(&m, &x, &truth_set(&m, &f)?)?
        );
        println!(
            "  y forces Up(y):   {}",
            effectivity(&m, &y, &truth_set(&m, &g)?)?
        );
        let c = check_superadditivity(&m, &x, &y, &f, &g)?;
        match c.counterexample {
            None => println!("  superadditive"),
            Some(w) => println!("  fails at {}: {}", m.points[w], c.instance),
        }
    }
    Ok(())
}
