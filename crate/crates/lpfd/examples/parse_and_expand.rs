//! Parsing, sugar expansion and rendering.

use lpfd::syntax::{expand_derived, mk_core, modal_depth, nonempty_subsets};
use lpfd::{parse_formula, render, Vocabulary};

fn main() -> lpfd::Result<()> {
    let voc = Vocabulary::new(["1", "2"], vec![("Win".into(), 1)], ["i"])?;

    for text in [
        "Na{1,2}",
        "wPa{1} & sPa{2}",
        "<{1};{2};{}>Win(1) -> D{1}2",
        "@i p{1,2}",
    ] {
        let phi = parse_formula(text, &voc)?;
        let core = expand_derived(&phi, &voc)?;
        println!("{}", render(&phi));
        println!("  depth {}, core: {}", modal_depth(&phi), render(&core));
    }

    let all = voc.all_variables();
    println!("coalitions: {:?}", nonempty_subsets(&all));
    let core = mk_core(&voc, &all, "i")?;
    println!("core of the grand coalition at i:\n  {}", render(&core));

    match parse_formula("[{1};{3};{}]Win(1)", &voc) {
        Ok(_) => unreachable!(),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
