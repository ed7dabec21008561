//! Nash equilibria, Pareto optimality and the core of the prisoners'
//! dilemma with coalitions.

use std::path::Path;

use lpfd::games::{analyze, core_formula, nash_bruteforce, render_report};
use lpfd::models::{load_model, Model};
use lpfd::syntax::varset;

fn main() -> lpfd::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/example2.json");
    let loaded = load_model(&path)?;
    let report = analyze(&loaded.model)?;
    print!("{}", render_report(&report));

    let Model::Cpd(m) = &loaded.model else {
        unreachable!()
    };
    let pd = m.to_pd()?;
    let ne = nash_bruteforce(&pd, &varset(["1", "2"]))?;
    let names: Vec<&str> = ne.ones().map(|k| m.profiles[k].id.as_str()).collect();
    println!("Nash equilibria: {names:?}");
    for a in &m.profiles {
        if core_formula(m, &a.id)? {
            println!("{} is in the core", a.id);
        }
    }
    Ok(())
}
