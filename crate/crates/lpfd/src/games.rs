//! Nash equilibrium, Pareto optimality and the core, each computed by
//! enumeration and by model checking, with cross-checks.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{
    all_partitions, eq_rel, render_partition, validate_cpd, validate_pd, validate_rcpd, CpdModel,
    Model, Partition, PdModel, Relation, RpdModel,
};
use crate::semantics::Evaluator;
use crate::syntax::{
    mk_coalition_atom, mk_core, mk_core_partition, mk_na, mk_spa, mk_wpa, nonempty_subsets, render,
    Formula, VarSet, Vocabulary,
};

fn check_coalition(voc: &Vocabulary, x: &VarSet) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Invalid("coalition must be non-empty".into()));
    }
    voc.check_set(x)
}

fn strict(m: &PdModel, k: usize) -> Relation {
    m.pref[k].strict_part()
}

fn indices(m: &PdModel, x: &VarSet) -> Vec<usize> {
    x.iter().filter_map(|v| m.vocab.var_index(v)).collect()
}

/// Profiles where no member of `x` gains by deviating alone.
pub fn nash_bruteforce(m: &PdModel, x: &VarSet) -> Result<FixedBitSet> {
    check_coalition(&m.vocab, x)?;
    let n = m.size();
    let mut out = FixedBitSet::with_capacity(n);
    out.insert_range(..);
    for v in x {
        let k = m.vocab.var_index(v).expect("checked");
        let single: VarSet = [v.clone()].into_iter().collect();
        let others = eq_rel(m, &m.vocab.complement(&single))?;
        let better = strict(m, k);
        for s in 0..n {
            if (0..n).any(|t| others.contains(s, t) && better.contains(s, t)) {
                out.set(s, false);
            }
        }
    }
    Ok(out)
}

/// Profiles where `x` cannot jointly move so that every member strictly
/// gains.
pub fn wpo_bruteforce(m: &PdModel, x: &VarSet) -> Result<FixedBitSet> {
    check_coalition(&m.vocab, x)?;
    let n = m.size();
    let others = eq_rel(m, &m.vocab.complement(x))?;
    let better: Vec<Relation> = indices(m, x).into_iter().map(|k| strict(m, k)).collect();
    let mut out = FixedBitSet::with_capacity(n);
    for s in 0..n {
        let blocked =
            (0..n).any(|t| others.contains(s, t) && better.iter().all(|r| r.contains(s, t)));
        out.set(s, !blocked);
    }
    Ok(out)
}

/// Profiles where `x` cannot jointly move so that no member loses and one
/// strictly gains.
pub fn spo_bruteforce(m: &PdModel, x: &VarSet) -> Result<FixedBitSet> {
    check_coalition(&m.vocab, x)?;
    let n = m.size();
    let others = eq_rel(m, &m.vocab.complement(x))?;
    let ks = indices(m, x);
    let better: Vec<Relation> = ks.iter().map(|&k| strict(m, k)).collect();
    let mut out = FixedBitSet::with_capacity(n);
    for s in 0..n {
        let blocked = (0..n).any(|t| {
            others.contains(s, t)
                && ks.iter().all(|&k| m.pref[k].contains(s, t))
                && better.iter().any(|r| r.contains(s, t))
        });
        out.set(s, !blocked);
    }
    Ok(out)
}

pub fn nash_formula(m: &RpdModel, x: &VarSet, s: usize) -> Result<bool> {
    Evaluator::new(m).holds(s, &mk_na(&m.vocab, x)?)
}

pub fn wpo_formula(m: &RpdModel, x: &VarSet, s: usize) -> Result<bool> {
    Evaluator::new(m).holds(s, &mk_wpa(&m.vocab, x)?)
}

pub fn spo_formula(m: &RpdModel, x: &VarSet, s: usize) -> Result<bool> {
    Evaluator::new(m).holds(s, &mk_spa(&m.vocab, x)?)
}

fn require_cpd(m: &CpdModel) -> Result<()> {
    match validate_cpd(m).first() {
        Some(v) => Err(Error::Model(v.to_string())),
        None => Ok(()),
    }
}

fn require_rcpd(m: &CpdModel) -> Result<()> {
    match validate_rcpd(m).first() {
        Some(v) => Err(Error::Model(v.to_string())),
        None => Ok(()),
    }
}

fn core_set(m: &CpdModel, pd: &PdModel) -> Result<FixedBitSet> {
    let n = m.size();
    let grand: Partition = vec![m.players.iter().cloned().collect()];
    let mut blocked_by = Vec::new();
    for b in &m.profiles {
        for block in b.dom_partition() {
            let same = eq_rel(pd, &block)?;
            let k = m.profile_index(&b.id).expect("own profile");
            blocked_by.push((block, k, same));
        }
    }
    let mut out = FixedBitSet::with_capacity(n);
    for a in 0..n {
        if m.profiles[a].dom_partition() != grand {
            continue;
        }
        let improves = |x: &VarSet, c: usize| {
            x.iter().all(|p| match (m.utility(a, p), m.utility(c, p)) {
                (Some(ua), Some(uc)) => ua < uc,
                _ => false,
            })
        };
        let deviation = blocked_by.iter().any(|(x, b, same)| {
            (0..n)
                .filter(|&c| same.contains(*b, c))
                .all(|c| improves(x, c))
        });
        out.set(a, !deviation);
    }
    Ok(out)
}

/// Profiles chosen by the grand coalition from which no coalition `X`
/// formed at some profile `a'` guarantees every member of `X` a strict
/// gain over every profile agreeing with `a'` on `X`.
pub fn core_bruteforce(m: &CpdModel) -> Result<FixedBitSet> {
    require_cpd(m)?;
    core_set(m, &m.to_pd()?)
}

fn profile_point(m: &CpdModel, a: &str) -> Result<usize> {
    m.profile_index(a)
        .ok_or_else(|| Error::UnnamedNominal(a.to_string()))
}

/// Core membership of profile `a` by model checking; needs an RCPD model.
pub fn core_formula(m: &CpdModel, a: &str) -> Result<bool> {
    require_rcpd(m)?;
    let rpd = m.to_rpd()?;
    let k = profile_point(m, a)?;
    let all = rpd.vocab.all_variables();
    Evaluator::new(&rpd).holds(k, &mk_core(&rpd.vocab, &all, a)?)
}

/// The core relativised to `x` at profile `a`.
pub fn core_relativized(m: &CpdModel, x: &VarSet, a: &str) -> Result<bool> {
    require_rcpd(m)?;
    let rpd = m.to_rpd()?;
    let k = profile_point(m, a)?;
    Evaluator::new(&rpd).holds(k, &mk_core(&rpd.vocab, x, a)?)
}

/// The conjunction of relativised cores over the blocks of `pi`.
pub fn core_partition(m: &CpdModel, pi: &[VarSet], a: &str) -> Result<bool> {
    require_rcpd(m)?;
    let rpd = m.to_rpd()?;
    let k = profile_point(m, a)?;
    Evaluator::new(&rpd).holds(k, &mk_core_partition(&rpd.vocab, pi, a)?)
}

/// The coalitions `X` whose coalition atom holds at point `a`.
fn coalitions_at(ev: &mut Evaluator, voc: &Vocabulary, a: usize) -> Result<Partition> {
    let mut out = Vec::new();
    for x in nonempty_subsets(&voc.all_variables()) {
        if ev.holds(a, &mk_coalition_atom(voc, &x)?)? {
            out.push(x);
        }
    }
    out.sort();
    Ok(out)
}

/// Recovers the coalition partition of profile `a` from the coalition
/// atoms alone; needs an RCPD model.
pub fn coalition_partition_of(m: &CpdModel, a: &str) -> Result<Partition> {
    require_rcpd(m)?;
    let rpd = m.to_rpd()?;
    let k = profile_point(m, a)?;
    coalitions_at(&mut Evaluator::new(&rpd), &rpd.vocab, k)
}

/// One coalition's verdicts at one profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoalitionVerdict {
    pub coalition: String,
    pub nash: bool,
    pub weak_pareto: bool,
    pub strong_pareto: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProfileReport {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<String>,
    pub coalitions: Vec<CoalitionVerdict>,
}

/// A disagreement between two computations of the same notion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub profile: String,
    pub formula: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub instances: usize,
    pub mismatches: Vec<Mismatch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        CheckReport {
            name: name.into(),
            instances: 0,
            mismatches: Vec::new(),
            skipped: None,
        }
    }

    fn skip(name: &str, why: &str) -> Self {
        CheckReport {
            skipped: Some(why.into()),
            ..CheckReport::new(name)
        }
    }

    fn expect(
        &mut self,
        ok: bool,
        profile: &str,
        formula: &Formula,
        detail: impl FnOnce() -> String,
    ) {
        self.instances += 1;
        if !ok {
            self.mismatches.push(Mismatch {
                profile: profile.into(),
                formula: render(formula),
                detail: detail(),
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnalysisReport {
    pub kind: String,
    pub players: Vec<String>,
    pub profiles: Vec<ProfileReport>,
    /// Nash equilibria, weakly and strongly Pareto optimal profiles for
    /// the grand coalition.
    pub nash: Vec<String>,
    pub weak_pareto: Vec<String>,
    pub strong_pareto: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub core: Option<Vec<String>>,
    pub rcpd_violations: Vec<String>,
    pub checks: Vec<CheckReport>,
}

impl AnalysisReport {
    pub fn mismatches(&self) -> usize {
        self.checks.iter().map(|c| c.mismatches.len()).sum()
    }
}

fn ids(pd: &PdModel, s: &FixedBitSet) -> Vec<String> {
    s.ones().map(|k| pd.assignments[k].id.clone()).collect()
}

fn show(x: &VarSet) -> String {
    let v: Vec<&str> = x.iter().map(String::as_str).collect();
    format!("{{{}}}", v.join(","))
}

fn solution_checks(
    pd: &PdModel,
    rpd: &RpdModel,
    ev: &mut Evaluator,
) -> Result<(Vec<ProfileReport>, Vec<CheckReport>)> {
    let voc = &rpd.vocab;
    let n = pd.size();
    let mut profiles: Vec<ProfileReport> = pd
        .assignments
        .iter()
        .map(|a| ProfileReport {
            id: a.id.clone(),
            partition: None,
            coalitions: Vec::new(),
        })
        .collect();
    let mut checks = vec![
        CheckReport::new("nash-formula"),
        CheckReport::new("weak-pareto-formula"),
        CheckReport::new("strong-pareto-formula"),
        CheckReport::new("nash-as-individual-pareto"),
    ];
    for x in nonempty_subsets(&voc.all_variables()) {
        let brute = [
            nash_bruteforce(pd, &x)?,
            wpo_bruteforce(pd, &x)?,
            spo_bruteforce(pd, &x)?,
        ];
        let formulas = [mk_na(voc, &x)?, mk_wpa(voc, &x)?, mk_spa(voc, &x)?];
        let truth: Vec<FixedBitSet> = formulas
            .iter()
            .map(|f| ev.truth_set(f))
            .collect::<Result<_>>()?;
        let singles: Vec<VarSet> = x
            .iter()
            .map(|v| [v.clone()].into_iter().collect())
            .collect();
        let spa_each = Formula::conj(
            singles
                .iter()
                .map(|s| mk_spa(voc, s))
                .collect::<Result<Vec<_>>>()?,
        );
        let wpa_each = Formula::conj(
            singles
                .iter()
                .map(|s| mk_wpa(voc, s))
                .collect::<Result<Vec<_>>>()?,
        );
        let (s_each, w_each) = (ev.truth_set(&spa_each)?, ev.truth_set(&wpa_each)?);
        for s in 0..n {
            let id = &pd.assignments[s].id;
            for k in 0..3 {
                let (b, f) = (brute[k].contains(s), truth[k].contains(s));
                checks[k].expect(b == f, id, &formulas[k], || {
                    format!(
                        "coalition {}: enumeration says {b}, formula says {f}",
                        show(&x)
                    )
                });
            }
            let na = truth[0].contains(s);
            checks[3].expect(
                na == s_each.contains(s) && na == w_each.contains(s),
                id,
                &formulas[0],
                || {
                    format!(
                        "coalition {}: Na {na}, sPa each {}, wPa each {}",
                        show(&x),
                        s_each.contains(s),
                        w_each.contains(s)
                    )
                },
            );
            profiles[s].coalitions.push(CoalitionVerdict {
                coalition: show(&x),
                nash: brute[0].contains(s),
                weak_pareto: brute[1].contains(s),
                strong_pareto: brute[2].contains(s),
            });
        }
    }
    Ok((profiles, checks))
}

fn analyze_pd(pd: &PdModel, kind: &str) -> Result<AnalysisReport> {
    if let Some(v) = validate_pd(pd).first() {
        return Err(Error::Model(v.to_string()));
    }
    let rpd = crate::models::pd_to_rpd(pd)?;
    let mut ev = Evaluator::new(&rpd);
    let (profiles, checks) = solution_checks(pd, &rpd, &mut ev)?;
    let all = rpd.vocab.all_variables();
    Ok(AnalysisReport {
        kind: kind.into(),
        players: rpd.vocab.variables().to_vec(),
        profiles,
        nash: ids(pd, &nash_bruteforce(pd, &all)?),
        weak_pareto: ids(pd, &wpo_bruteforce(pd, &all)?),
        strong_pareto: ids(pd, &spo_bruteforce(pd, &all)?),
        core: None,
        rcpd_violations: Vec::new(),
        checks,
    })
}

fn analyze_cpd(m: &CpdModel) -> Result<AnalysisReport> {
    require_cpd(m)?;
    let pd = m.to_pd()?;
    let mut report = analyze_pd(&pd, "cpd")?;
    let rpd = crate::models::pd_to_rpd(&pd)?;
    let voc = rpd.vocab.clone();
    let mut ev = Evaluator::new(&rpd);
    for (p, a) in report.profiles.iter_mut().zip(&m.profiles) {
        p.partition = Some(render_partition(&a.dom_partition()));
    }
    let violations = validate_rcpd(m);
    let flagged: Vec<bool> = {
        let splits = crate::models::determined_splits(m)?;
        (0..m.size())
            .map(|k| splits.iter().any(|(j, _)| *j == k))
            .collect()
    };
    report.rcpd_violations = violations.iter().map(|v| v.witness.clone()).collect();
    let rcpd = violations.is_empty();
    let core = core_set(m, &pd)?;
    report.core = Some(ids(&pd, &core));

    let mut recovery = CheckReport::new("coalition-recovery");
    for (k, a) in m.profiles.iter().enumerate() {
        if flagged[k] {
            continue;
        }
        let got = coalitions_at(&mut ev, &voc, k)?;
        let want = a.dom_partition();
        let atom = mk_coalition_atom(&voc, &voc.all_variables())?;
        recovery.expect(got == want, &a.id, &atom, || {
            format!(
                "recovered {}, stored {}",
                render_partition(&got),
                render_partition(&want)
            )
        });
    }
    if flagged.iter().any(|&f| f) {
        let skipped: Vec<&str> = (0..m.size())
            .filter(|&k| flagged[k])
            .map(|k| m.profiles[k].id.as_str())
            .collect();
        recovery.skipped = Some(format!("not checked at {}", skipped.join(", ")));
    }
    report.checks.push(recovery);

    let all = voc.all_variables();
    let wpo = wpo_bruteforce(&pd, &all)?;
    let mut inclusion = CheckReport::new("core-weakly-pareto");
    let wpa = mk_wpa(&voc, &all)?;
    for a in core.ones() {
        inclusion.expect(wpo.contains(a), &m.profiles[a].id, &wpa, || {
            "core profile is not weakly Pareto optimal".into()
        });
    }
    report.checks.push(inclusion);

    let names = [
        "core-formula",
        "partition-core-singletons",
        "partition-core-pareto",
    ];
    if !rcpd {
        for name in names {
            report
                .checks
                .push(CheckReport::skip(name, "model is not RCPD"));
        }
        return Ok(report);
    }
    let mut cf = CheckReport::new(names[0]);
    let mut singles = CheckReport::new(names[1]);
    let mut pareto = CheckReport::new(names[2]);
    let singletons: Partition = all
        .iter()
        .map(|v| [v.clone()].into_iter().collect())
        .collect();
    let na = mk_na(&voc, &all)?;
    let partitions = all_partitions(voc.variables());
    for (k, a) in m.profiles.iter().enumerate() {
        let f = mk_core(&voc, &all, &a.id)?;
        let (by_formula, by_def) = (ev.holds(k, &f)?, core.contains(k));
        cf.expect(by_formula == by_def, &a.id, &f, || {
            format!("formula says {by_formula}, definition says {by_def}")
        });
        if a.dom_partition() == singletons {
            let g = mk_core_partition(&voc, &singletons, &a.id)?;
            let rhs = Formula::nom(&a.id).and(na.clone());
            let (l, r) = (ev.holds(k, &g)?, ev.holds(k, &rhs)?);
            singles.expect(l == r, &a.id, &g, || {
                format!("partition core {l}, Nash {r}")
            });
        }
        for pi in &partitions {
            let g = mk_core_partition(&voc, pi, &a.id)?;
            if ev.holds(k, &g)? {
                let w = Formula::conj(
                    pi.iter()
                        .map(|b| mk_wpa(&voc, b))
                        .collect::<Result<Vec<_>>>()?,
                );
                let ok = ev.holds(k, &w)?;
                pareto.expect(ok, &a.id, &g, || {
                    format!("partition {} not weakly Pareto", render_partition(pi))
                });
            }
        }
    }
    report.checks.extend([cf, singles, pareto]);
    Ok(report)
}

/// Solution concepts of a PD or CPD model with every cross-check.
pub fn analyze(m: &Model) -> Result<AnalysisReport> {
    match m {
        Model::Pd(pd) => analyze_pd(pd, "pd"),
        Model::Cpd(c) => analyze_cpd(c),
        Model::Rpd(_) => Err(Error::Invalid(
            "game analysis needs a pd or cpd model".into(),
        )),
    }
}

/// Plain-text rendering of a report.
pub fn render_report(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let line = |out: &mut String, s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(&mut out, format!("kind: {}", r.kind));
    line(&mut out, format!("players: {}", r.players.join(", ")));
    line(
        &mut out,
        format!("nash (all players): {}", r.nash.join(", ")),
    );
    line(
        &mut out,
        format!("weakly pareto optimal: {}", r.weak_pareto.join(", ")),
    );
    line(
        &mut out,
        format!("strongly pareto optimal: {}", r.strong_pareto.join(", ")),
    );
    if let Some(core) = &r.core {
        line(&mut out, format!("core: {}", core.join(", ")));
    }
    for v in &r.rcpd_violations {
        line(&mut out, format!("rcpd violation: {v}"));
    }
    for p in &r.profiles {
        let mut cells = Vec::new();
        for c in &p.coalitions {
            let flags: String = [(c.nash, 'N'), (c.weak_pareto, 'w'), (c.strong_pareto, 's')]
                .iter()
                .map(|&(b, ch)| if b { ch } else { '-' })
                .collect();
            cells.push(format!("{}:{flags}", c.coalition));
        }
        let part = p
            .partition
            .as_deref()
            .map(|s| format!(" {s}"))
            .unwrap_or_default();
        line(&mut out, format!("  {}{part}  {}", p.id, cells.join(" ")));
    }
    let by_name: BTreeMap<&str, &CheckReport> =
        r.checks.iter().map(|c| (c.name.as_str(), c)).collect();
    for (name, c) in by_name {
        let status = if !c.mismatches.is_empty() {
            format!("{} mismatch(es)", c.mismatches.len())
        } else if c.instances == 0 && c.skipped.is_some() {
            "skipped".to_string()
        } else {
            "ok".to_string()
        };
        let skipped = c
            .skipped
            .as_deref()
            .map(|s| format!(" ({s})"))
            .unwrap_or_default();
        line(
            &mut out,
            format!(
                "check {name}: {status}, {} instance(s){skipped}",
                c.instances
            ),
        );
        for mm in &c.mismatches {
            line(
                &mut out,
                format!("  at {}: {} [{}]", mm.profile, mm.detail, mm.formula),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Assignment, Profile};
    use crate::syntax::varset;

    fn one_profile() -> CpdModel {
        let mut choices = BTreeMap::new();
        let c: BTreeMap<String, String> =
            [("1".to_string(), "s".to_string())].into_iter().collect();
        choices.insert("1".to_string(), c);
        CpdModel {
            players: vec!["1".into()],
            strategies: vec!["s".into()],
            profiles: vec![Profile {
                id: "a".into(),
                choices,
            }],
            utilities: [(
                "a".to_string(),
                [("1".to_string(), 0)].into_iter().collect(),
            )]
            .into_iter()
            .collect(),
        }
    }

    #[test]
    fn single_profile_is_stable() {
        let m = one_profile();
        let pd = m.to_pd().unwrap();
        let x = varset(["1"]);
        for s in [
            nash_bruteforce(&pd, &x),
            wpo_bruteforce(&pd, &x),
            spo_bruteforce(&pd, &x),
        ] {
            assert!(s.unwrap().contains(0));
        }
        assert!(core_bruteforce(&m).unwrap().contains(0));
        assert!(core_formula(&m, "a").unwrap());
        assert_eq!(
            coalition_partition_of(&m, "a").unwrap(),
            vec![varset(["1"])]
        );
    }

    #[test]
    fn coalitions_must_be_known_and_non_empty() {
        let pd = one_profile().to_pd().unwrap();
        assert!(nash_bruteforce(&pd, &VarSet::new()).is_err());
        assert!(wpo_bruteforce(&pd, &varset(["7"])).is_err());
    }

    #[test]
    fn strict_gain_breaks_pareto() {
        let voc = Vocabulary::new(["x", "y"], Vec::new(), Vec::<String>::new()).unwrap();
        let pd = PdModel {
            vocab: voc,
            objects: vec!["0".into(), "1".into()],
            interpretation: BTreeMap::new(),
            assignments: vec![
                Assignment {
                    id: "s".into(),
                    values: vec![0, 0],
                },
                Assignment {
                    id: "t".into(),
                    values: vec![1, 0],
                },
            ],
            pref: vec![
                Relation::from_pairs(2, [(0, 1)]).reflexive_closure(),
                Relation::total(2),
            ],
            naming: BTreeMap::new(),
        };
        let x = varset(["x"]);
        assert!(!nash_bruteforce(&pd, &x).unwrap().contains(0));
        assert!(nash_bruteforce(&pd, &x).unwrap().contains(1));
        let xy = varset(["x", "y"]);
        assert!(wpo_bruteforce(&pd, &xy).unwrap().contains(0));
        assert!(!spo_bruteforce(&pd, &xy).unwrap().contains(0));
        let rpd = crate::models::pd_to_rpd(&pd).unwrap();
        assert!(wpo_formula(&rpd, &xy, 0).unwrap());
        assert!(!spo_formula(&rpd, &xy, 0).unwrap());
        assert!(!nash_formula(&rpd, &x, 0).unwrap());
    }
}
