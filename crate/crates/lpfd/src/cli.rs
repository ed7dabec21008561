//! The `lpfd` command line.
//!
//! Exit codes: 0 when the answer is positive, 1 when it is negative
//! (false, invalid, unsat, violations, mismatches), 2 on usage errors,
//! unreadable input and exhausted resource bounds.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use fixedbitset::FixedBitSet;
use serde::Serialize;
use serde_json::json;

use crate::calculus::{soundness_fuzz, FuzzParams, System};
use crate::error::{Error, Result};
use crate::games::{analyze, render_report};
use crate::models::{
    load_model, model_to_json, pd_to_rpd, rpd_to_pd, validate_rcpd, LoadedModel, Model, RpdModel,
};
use crate::satisfiability::{decide_sat, Certificate, SatConfig, SatReport, Verdict};
use crate::semantics::{counterexample, effectivity, Evaluator};
use crate::syntax::{
    expand_derived, modal_depth, parse_formula, parse_formula_open, render, Formula, VarSet,
    Vocabulary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "lpfd",
    version,
    about = "Preference and functional dependence logic toolkit"
)]
pub struct Cli {
    /// Seed for every randomized command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,
    /// Largest closure `sat` will build, counted in base formulas.
    #[arg(long, global = true, default_value_t = 18)]
    pub max_closure: usize,
    /// Depth of the certificate tree built by `sat`.
    #[arg(long, global = true)]
    pub path_bound: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a formula and show its core form and modal depth.
    Parse {
        #[arg(long)]
        formula: String,
        /// A vocabulary file (JSON) or `vars[;P/1,Q/2[;noms]]`.
        #[arg(long)]
        vocab: Option<String>,
    },
    /// Check a model file against its invariants.
    Validate {
        model: PathBuf,
        /// Also require the RCPD condition of a cpd model.
        #[arg(long)]
        rcpd: bool,
    },
    /// Evaluate a formula at one point.
    Check {
        model: PathBuf,
        #[arg(long)]
        point: String,
        #[arg(long)]
        formula: String,
    },
    /// Check a formula at every point.
    Valid {
        model: PathBuf,
        #[arg(long)]
        formula: String,
    },
    /// Whether a coalition can force the truth set of a formula.
    Effectivity {
        model: PathBuf,
        /// `{1,2}` or `1,2`; `{}` for the empty coalition.
        #[arg(long)]
        coalition: String,
        #[arg(long)]
        formula: String,
    },
    /// Decide satisfiability of a nominal-free formula.
    Sat {
        #[arg(long)]
        formula: String,
        #[arg(long)]
        vocab: Option<String>,
        /// Write the certificate model as JSON.
        #[arg(long)]
        emit_certificate: Option<PathBuf>,
    },
    /// Translate a model between presentations.
    Convert {
        model: PathBuf,
        #[arg(long, value_enum)]
        to: Target,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Game-theoretic analyses.
    Game {
        #[command(subcommand)]
        command: GameCommand,
    },
    /// Fuzz the axiom schemas and rules for soundness.
    FuzzAxioms {
        #[arg(long, default_value = "lpfd")]
        system: String,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 6)]
        max_points: usize,
        /// Restrict to these schema ids.
        #[arg(long)]
        schema: Vec<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GameCommand {
    /// Nash, Pareto and core analysis with cross-checks.
    Analyze { model: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Rpd,
    Pd,
}

/// Outcome of a command: exit code and what to print.
struct Outcome {
    code: i32,
    text: String,
    json: serde_json::Value,
}

impl Outcome {
    fn new(positive: bool, text: String, json: serde_json::Value) -> Self {
        Outcome {
            code: if positive { 0 } else { 1 },
            text,
            json,
        }
    }
}

/// Parses `--vocab`: a JSON file, or `x,y;P/1,Q/2;i,j`.
pub fn parse_vocab(spec: &str) -> Result<Vocabulary> {
    if Path::new(spec).is_file() {
        let text = fs::read_to_string(spec).map_err(|e| Error::Io(format!("{spec}: {e}")))?;
        return serde_json::from_str(&text).map_err(|e| Error::Vocabulary(format!("{spec}: {e}")));
    }
    let mut parts = spec.split(';');
    let list = |s: Option<&str>| -> Vec<String> {
        s.unwrap_or("")
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(String::from)
            .collect()
    };
    let vars = list(parts.next());
    let preds = list(parts.next())
        .into_iter()
        .map(|p| {
            let (name, ar) = p.split_once('/').ok_or_else(|| {
                Error::Vocabulary(format!("predicate `{p}` needs an arity, as in P/1"))
            })?;
            let ar: usize = ar
                .parse()
                .map_err(|_| Error::Vocabulary(format!("bad arity in `{p}`")))?;
            Ok((name.to_string(), ar))
        })
        .collect::<Result<Vec<_>>>()?;
    let noms = list(parts.next());
    if parts.next().is_some() {
        return Err(Error::Vocabulary(
            "expected at most three `;`-separated parts".into(),
        ));
    }
    Vocabulary::new(vars, preds, noms)
}

/// Parses `{1,2}` or `1,2`.
pub fn parse_coalition(text: &str, voc: &Vocabulary) -> Result<VarSet> {
    let inner = text.trim().trim_start_matches('{').trim_end_matches('}');
    let set: VarSet = inner
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect();
    voc.check_set(&set)?;
    Ok(set)
}

fn formula_with(text: &str, vocab: Option<&str>) -> Result<(Formula, Vocabulary)> {
    match vocab {
        Some(v) => {
            let voc = parse_vocab(v)?;
            Ok((parse_formula(text, &voc)?, voc))
        }
        None => parse_formula_open(text),
    }
}

fn load(path: &Path) -> Result<LoadedModel> {
    load_model(path)
}

fn point_of(m: &RpdModel, name: &str) -> Result<usize> {
    m.point_index(name)
        .ok_or_else(|| Error::Invalid(format!("no point named `{name}`")))
}

fn names(m: &RpdModel, s: &FixedBitSet) -> Vec<String> {
    s.ones().map(|k| m.points[k].clone()).collect()
}

fn warnings_json(l: &LoadedModel) -> serde_json::Value {
    json!(l.warnings)
}

fn cmd_parse(formula: &str, vocab: Option<&str>) -> Result<Outcome> {
    let (f, voc) = formula_with(formula, vocab)?;
    let core = expand_derived(&f, &voc)?;
    let text = format!(
        "formula: {}\ncore: {}\nmodal depth: {}\n",
        render(&f),
        render(&core),
        modal_depth(&f)
    );
    let j = json!({"formula": render(&f), "core": render(&core), "modal_depth": modal_depth(&f), "vocabulary": voc});
    Ok(Outcome::new(true, text, j))
}

fn cmd_validate(path: &Path, rcpd: bool) -> Result<Outcome> {
    let l = load(path)?;
    let mut violations = l.model.validate();
    let mut notes = Vec::new();
    if let Model::Cpd(c) = &l.model {
        if violations.is_empty() {
            let extra = validate_rcpd(c);
            if rcpd {
                violations = extra;
            } else {
                notes = extra;
            }
        }
    }
    let mut text = String::new();
    for w in &l.warnings {
        text.push_str(&format!("warning: {w}\n"));
    }
    for v in &violations {
        text.push_str(&format!("violation: {v}\n"));
    }
    for v in &notes {
        text.push_str(&format!("note: {v}\n"));
    }
    if violations.is_empty() {
        text.push_str(&format!("valid {} model\n", l.model.kind()));
    }
    let j = json!({
        "kind": l.model.kind(),
        "valid": violations.is_empty(),
        "warnings": warnings_json(&l),
        "violations": violations.iter().map(|v| json!({"invariant": v.invariant, "witness": v.witness})).collect::<Vec<_>>(),
        "notes": notes.iter().map(|v| json!({"invariant": v.invariant, "witness": v.witness})).collect::<Vec<_>>(),
    });
    Ok(Outcome::new(violations.is_empty(), text, j))
}

fn relational(path: &Path) -> Result<RpdModel> {
    let l = load(path)?;
    if let Some(v) = l.model.validate().first() {
        return Err(Error::Model(v.to_string()));
    }
    l.model.to_rpd()
}

fn cmd_check(path: &Path, point: &str, formula: &str) -> Result<Outcome> {
    let m = relational(path)?;
    let f = parse_formula(formula, &m.vocab)?;
    let w = point_of(&m, point)?;
    let holds = Evaluator::new(&m).holds(w, &f)?;
    let text = format!("{holds}\n");
    let j = json!({"point": point, "formula": render(&f), "holds": holds});
    Ok(Outcome::new(holds, text, j))
}

fn cmd_valid(path: &Path, formula: &str) -> Result<Outcome> {
    let m = relational(path)?;
    let f = parse_formula(formula, &m.vocab)?;
    let cx = counterexample(&m, &f)?;
    let text = match cx {
        None => "valid\n".to_string(),
        Some(w) => format!("not valid: fails at {}\n", m.points[w]),
    };
    let j = json!({"formula": render(&f), "valid": cx.is_none(), "counterexample": cx.map(|w| m.points[w].clone())});
    Ok(Outcome::new(cx.is_none(), text, j))
}

fn cmd_effectivity(path: &Path, coalition: &str, formula: &str) -> Result<Outcome> {
    let m = relational(path)?;
    let x = parse_coalition(coalition, &m.vocab)?;
    let f = parse_formula(formula, &m.vocab)?;
    let set = Evaluator::new(&m).truth_set(&f)?;
    let forced = effectivity(&m, &x, &set)?;
    let cells = m.sim_set(&x)?.classes();
    let forcing: Vec<Vec<String>> = cells
        .iter()
        .filter(|c| c.iter().all(|&w| set.contains(w)))
        .map(|c| c.iter().map(|&w| m.points[w].clone()).collect())
        .collect();
    let shown: Vec<&str> = x.iter().map(String::as_str).collect();
    let mut text = format!(
        "{{{}}} {} force {}\ntruth set: {}\n",
        shown.join(","),
        if forced { "can" } else { "cannot" },
        render(&f),
        names(&m, &set).join(", ")
    );
    for c in &forcing {
        text.push_str(&format!("forcing cell: {}\n", c.join(", ")));
    }
    let j = json!({
        "coalition": x, "formula": render(&f), "effective": forced,
        "truth_set": names(&m, &set), "forcing_cells": forcing,
    });
    Ok(Outcome::new(forced, text, j))
}

#[derive(Serialize)]
struct SatJson<'a> {
    #[serde(flatten)]
    report: &'a SatReport,
    status: String,
}

fn cmd_sat(cli: &Cli, formula: &str, vocab: Option<&str>, emit: Option<&Path>) -> Result<Outcome> {
    let (f, voc) = formula_with(formula, vocab)?;
    let cfg = SatConfig {
        max_closure: cli.max_closure,
        path_bound: cli.path_bound,
        ..SatConfig::default()
    };
    let d = decide_sat(&f, &voc, cfg)?;
    let report = SatReport::new(&f, &d);
    let status = match &d.verdict {
        Verdict::Unsat => "Unsat".to_string(),
        Verdict::Sat {
            certificate: Certificate::Verified,
            ..
        } => "Sat-verified".to_string(),
        Verdict::Sat {
            certificate: Certificate::Unverified { bound },
            ..
        } => format!("Sat-unverified({bound})"),
    };
    if let (Some(path), Verdict::Sat { model, .. }) = (emit, &d.verdict) {
        fs::write(path, model_to_json(&Model::Rpd(model.clone())))
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    let mut text = format!(
        "{status}\nclosure: {} base formulas, {} candidate sets, {} survive\n",
        report.closure_size, report.candidates, report.survivors
    );
    if let Some(n) = report.certificate_points {
        text.push_str(&format!("certificate: {n} point(s)\n"));
    }
    let j = serde_json::to_value(SatJson {
        report: &report,
        status,
    })
    .expect("serializable");
    Ok(Outcome::new(d.verdict.is_sat(), text, j))
}

fn cmd_convert(path: &Path, to: Target, out: Option<&Path>) -> Result<Outcome> {
    let l = load(path)?;
    if let Some(v) = l.model.validate().first() {
        return Err(Error::Model(v.to_string()));
    }
    let converted = match (to, &l.model) {
        (Target::Rpd, m) => Model::Rpd(m.to_rpd()?),
        (Target::Pd, Model::Rpd(r)) => Model::Pd(rpd_to_pd(r)?),
        (Target::Pd, Model::Pd(p)) => Model::Pd(p.clone()),
        (Target::Pd, Model::Cpd(c)) => Model::Pd(c.to_pd()?),
    };
    if let Model::Pd(p) = &converted {
        pd_to_rpd(p)?;
    }
    let text = model_to_json(&converted);
    match out {
        Some(p) => {
            fs::write(p, &text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            let msg = format!("wrote {} model to {}\n", converted.kind(), p.display());
            Ok(Outcome::new(
                true,
                msg,
                json!({"kind": converted.kind(), "out": p}),
            ))
        }
        None => {
            let j: serde_json::Value = serde_json::from_str(&text).expect("own output parses");
            Ok(Outcome::new(true, text, j))
        }
    }
}

fn cmd_game(path: &Path) -> Result<Outcome> {
    let l = load(path)?;
    let r = analyze(&l.model)?;
    let j = serde_json::to_value(&r).expect("serializable");
    Ok(Outcome::new(r.mismatches() == 0, render_report(&r), j))
}

fn cmd_fuzz(
    cli: &Cli,
    system: &str,
    trials: usize,
    max_points: usize,
    only: &[String],
) -> Result<Outcome> {
    let system: System = system.parse()?;
    let ids: Vec<&str> = only.iter().map(String::as_str).collect();
    let params = FuzzParams {
        trials,
        seed: cli.seed,
        max_points,
    };
    let r = soundness_fuzz(
        system,
        if ids.is_empty() { None } else { Some(&ids) },
        params,
    )?;
    let mut text = String::new();
    for s in r.schemas.iter().chain(&r.rules) {
        text.push_str(&format!(
            "{:<8} {:>6} trials  {} counterexample(s)\n",
            s.schema, s.trials, s.counterexamples
        ));
    }
    for c in &r.counterexamples {
        text.push_str(&format!(
            "counterexample {}: {} fails at {}\n",
            c.schema, c.instance, c.point
        ));
    }
    text.push_str(&format!(
        "total counterexamples: {}\n",
        r.total_counterexamples()
    ));
    let j = serde_json::to_value(&r).expect("serializable");
    Ok(Outcome::new(r.total_counterexamples() == 0, text, j))
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Parse { formula, vocab } => cmd_parse(formula, vocab.as_deref()),
        Command::Validate { model, rcpd } => cmd_validate(model, *rcpd),
        Command::Check {
            model,
            point,
            formula,
        } => cmd_check(model, point, formula),
        Command::Valid { model, formula } => cmd_valid(model, formula),
        Command::Effectivity {
            model,
            coalition,
            formula,
        } => cmd_effectivity(model, coalition, formula),
        Command::Sat {
            formula,
            vocab,
            emit_certificate,
        } => cmd_sat(cli, formula, vocab.as_deref(), emit_certificate.as_deref()),
        Command::Convert { model, to, out } => cmd_convert(model, *to, out.as_deref()),
        Command::Game {
            command: GameCommand::Analyze { model },
        } => cmd_game(model),
        Command::FuzzAxioms {
            system,
            trials,
            max_points,
            schema,
        } => cmd_fuzz(cli, system, *trials, *max_points, schema),
    }
}

/// Runs the command line with output going to `out` and diagnostics to
/// `err`; returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(o) => {
            let _ = match cli.report {
                ReportFormat::Text => write!(out, "{}", o.text),
                ReportFormat::Json => writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&o.json).expect("json")
                ),
            };
            o.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

/// Runs the command line on the process streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
