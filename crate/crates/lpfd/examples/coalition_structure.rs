//! Validating coalition models and reading the coalition structure back
//! from dependence atoms.

use std::path::Path;

use lpfd::games::coalition_partition_of;
use lpfd::models::{load_model, render_partition, validate_cpd, validate_rcpd, Model};
use lpfd::random::{random_rcpd, seeded, CpdParams};

fn main() -> lpfd::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/example1.json");
    let Model::Cpd(m) = load_model(&path)?.model else {
        unreachable!()
    };
    println!("CPD violations: {}", validate_cpd(&m).len());
    for v in validate_rcpd(&m) {
        println!("  {}", v.witness);
    }

    let mut rng = seeded(3);
    let params = CpdParams {
        players: 3,
        strategies: 2,
        levels: 3,
    };
    let Some(r) = random_rcpd(&mut rng, params, 200) else {
        println!("no RCPD model found");
        return Ok(());
    };
    let mut seen = Vec::new();
    for a in &r.profiles {
        if seen.contains(&a.dom_partition()) {
            continue;
        }
        seen.push(a.dom_partition());
        let got = coalition_partition_of(&r, &a.id)?;
        println!(
            "{:<4} stored {:<16} recovered {}",
            a.id,
            render_partition(&a.dom_partition()),
            render_partition(&got)
        );
    }
    Ok(())
}
