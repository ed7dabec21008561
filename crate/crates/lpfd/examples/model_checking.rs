//! Building a relational model by hand and checking formulas on it.

use fixedbitset::FixedBitSet;
use lpfd::models::{validate_rpd, Atom, Relation};
use lpfd::semantics::{counterexample, Evaluator};
use lpfd::{parse_formula, RpdModel, Vocabulary};

fn main() -> lpfd::Result<()> {
    let voc = Vocabulary::new(["x", "y"], vec![("Hot".into(), 1)], ["home"])?;
    let mut m = RpdModel::discrete(voc.clone(), ["u", "v", "w"].map(String::from).to_vec());
    // x takes two values, y ranks the points u < v < w.
    m.sim[0] = Relation::from_labels(&[0, 1, 1]);
    m.leq[1] = Relation::from_pairs(3, [(0, 1), (1, 2), (0, 2)]).reflexive_closure();
    let mut hot = FixedBitSet::with_capacity(3);
    hot.insert(1);
    hot.insert(2);
    m.valuation.insert(Atom::new("Hot", &["x"]), hot);
    m.naming.insert("home".into(), 0);
    assert!(validate_rpd(&m).is_empty());

    let mut ev = Evaluator::new(&m);
    for text in [
        "<{x};{};{y}>Hot(x)",
        "[{};{y};{}]Hot(x)",
        "D{x}y",
        "@home ~Hot(x)",
    ] {
        let phi = parse_formula(text, &voc)?;
        let truth = ev.truth_set(&phi)?;
        let pts: Vec<&str> = truth.ones().map(|k| m.points[k].as_str()).collect();
        println!("{text:<24} true at {pts:?}");
    }

    let claim = parse_formula("Hot(x) -> [{};{y};{}]Hot(x)", &voc)?;
    match counterexample(&m, &claim)? {
        None => println!("valid: {claim}"),
        Some(w) => println!("fails at {}: {claim}", m.points[w]),
    }
    Ok(())
}
