//! Logic of preference and functional dependence.
//!
//! Formulas talk about assignments of objects to variables, functional
//! dependence between variables (`D{x}y`) and a ceteris paribus preference
//! modality `[X;Y;Z]` that quantifies over points agreeing on `X`, weakly
//! better for every `y` in `Y` and strictly better for every `z` in `Z`.
//! The hybrid extension adds nominals.
//!
//! The crate is organised by capability, each with a runnable example:
//!
//! ```text
//! examples/
//! ├── parse_and_expand.rs       # grammar, sugar, rendering
//! ├── model_checking.rs         # RPD models, eval, validity
//! ├── translations.rs           # PD <-> RPD round trips
//! ├── effectivity.rs            # effectivity and superadditivity
//! ├── axiom_fuzz.rs             # soundness fuzzing of the calculi
//! ├── satisfiability.rs         # type elimination and certificates
//! ├── prisoners_core.rs         # Nash, Pareto and the core on a CPD model
//! └── coalition_structure.rs    # CPD validation and coalition recovery
//! ```
//!
//! ```bash
//! cargo run -p lpfd --example prisoners_core
//! ```
//!
//! The `lpfd` binary exposes the same operations on JSON model files.

pub mod calculus;
pub mod cli;
pub mod error;
pub mod games;
pub mod models;
pub mod random;
pub mod satisfiability;
pub mod semantics;
pub mod syntax;

pub use error::{Error, Result};
pub use models::{CpdModel, PdModel, RpdModel};
pub use syntax::{parse_formula, render, Formula, VarSet, Vocabulary};
