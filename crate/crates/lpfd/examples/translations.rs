//! Moving between assignment models and their relational presentation.

use lpfd::models::{model_to_json, pd_to_rpd, rpd_to_pd, Model};
use lpfd::random::{random_formula, random_pd, seeded, FormulaParams};
use lpfd::semantics::truth_set;
use lpfd::Vocabulary;

fn main() -> lpfd::Result<()> {
    let voc = Vocabulary::new(["x", "y"], vec![("P".into(), 1)], Vec::<String>::new())?;
    let mut rng = seeded(42);
    let pd = random_pd(&mut rng, &voc, 4, 2);
    let rpd = pd_to_rpd(&pd)?;
    let back = rpd_to_pd(&rpd)?;
    let again = pd_to_rpd(&back)?;
    println!("{}", model_to_json(&Model::Pd(pd.clone())));

    let params = FormulaParams {
        depth: 2,
        nominals: false,
        sugar: true,
    };
    let mut agree = 0;
    for _ in 0..20 {
        let phi = random_formula(&mut rng, &voc, params);
        let (a, b) = (truth_set(&rpd, &phi)?, truth_set(&again, &phi)?);
        assert_eq!(a, b, "{phi}");
        agree += 1;
    }
    println!(
        "{} assignments, {} objects after the round trip; {agree} formulas agree",
        back.size(),
        back.objects.len()
    );
    Ok(())
}
