//! Soundness fuzzing of both axiom systems.

use lpfd::calculus::fuzz_vocabulary;
use lpfd::calculus::{
    instantiate, random_bindings, schema, soundness_fuzz, summary, FuzzParams, System,
};
use lpfd::random::seeded;

fn main() -> lpfd::Result<()> {
    let voc = fuzz_vocabulary(System::Lpfd);
    let s = schema(System::Lpfd, "Ord-b")?;
    let mut rng = seeded(1);
    println!("{}: {}", s.id, s.text);
    for _ in 0..3 {
        println!(
            "  {}",
            instantiate(&s, &random_bindings(&mut rng, &s, &voc), &voc)?
        );
    }

    for system in [System::Lpfd, System::Hlpfd] {
        let report = soundness_fuzz(
            system,
            None,
            FuzzParams {
                trials: 300,
                seed: 7,
                max_points: 5,
            },
        )?;
        println!(
            "{system:?}: {} counterexamples",
            report.total_counterexamples()
        );
        for (id, n) in summary(&report) {
            println!("  {id:<6} {n}");
        }
    }
    Ok(())
}
