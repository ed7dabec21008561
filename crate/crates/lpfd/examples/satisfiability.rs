//! Deciding satisfiability and inspecting the certificate model.

use lpfd::models::validate_rpd;
use lpfd::satisfiability::{
    decide_sat, finite_model_search, infinite_only_formula, SatConfig, SatReport, Verdict,
};
use lpfd::{parse_formula, Vocabulary};

fn main() -> lpfd::Result<()> {
    let voc = Vocabulary::new(["x", "y"], vec![("P".into(), 1)], Vec::<String>::new())?;
    let mut queries = vec![];
    for text in [
        "D{x}y & <{};{y};{}>P(x)",
        "<{};{};{y}>top & [{};{};{y}]bot",
        "~D{x}y & [{x};{};{}]P(y)",
    ] {
        queries.push(parse_formula(text, &voc)?);
    }
    queries.push(infinite_only_formula("y"));

    for phi in &queries {
        let d = decide_sat(phi, &voc, SatConfig::default())?;
        let r = SatReport::new(phi, &d);
        println!("{phi}");
        println!(
            "  closure {}, candidates {}, survivors {}",
            r.closure_size, r.candidates, r.survivors
        );
        match &d.verdict {
            Verdict::Unsat => println!("  unsat"),
            Verdict::Sat {
                model, certificate, ..
            } => {
                println!(
                    "  sat, certificate {certificate:?} with {} points",
                    model.size()
                );
                assert!(validate_rpd(model).is_empty());
            }
        }
    }

    let phi = infinite_only_formula("y");
    println!(
        "finite models of the last formula: {:?}",
        finite_model_search(&phi, &voc, 3, 1_000_000)?
    );
    Ok(())
}
