//! Dialectical reconciliation between an explainer and an explainee holding
//! propositional knowledge bases.

pub mod argument;
pub mod cnf;
pub mod dialogue;
pub mod engine;
pub mod experiment;
pub mod formula;
pub mod kb;
pub mod reconcile;
pub mod sat;

pub use argument::{Argument, ArgumentSet};
pub use dialogue::{Act, Agent, DialogueError, DialogueState, Locution, Move, Protocol, Rules, SourceMode, Strategies, Strategy};
pub use experiment::{ExperimentConfig, ExperimentError, MetricsRow};
pub use engine::{Budget, BudgetKind, EngineError, LiteralSet, SolveContext};
pub use formula::{parse_formula, Formula, ParseError};
pub use kb::{load_kb, KbError, KnowledgeBase};
pub use reconcile::{ReconcileError, SimilarityReport, SingleShotExplanation, UpdateRecord};
