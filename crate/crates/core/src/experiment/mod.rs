//! The computational evaluation: random knowledge-base pairs, a dialogue
//! per pair, and the single-shot baseline, reported as CSV rows.

mod generate;
mod report;

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dialogue::{DialogueError, Protocol, Rules, Strategies};
use crate::engine::{Budget, BudgetKind, EngineError, SolveContext};
use crate::formula::Formula;
use crate::kb::KnowledgeBase;
use crate::reconcile::{self, ReconcileError};

pub use generate::{derive_kb_pair, generate_inconsistent_kb, query_candidates, select_query};
pub use report::{write_csv, CsvSink, MetricsRow, CSV_HEADER};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("no literal is entailed by the explainer and not by the explainee")]
    NoQuery,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
    #[error(transparent)]
    Reconcile(#[from] ReconcileError),
    #[error("writing results: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing results: {0}")]
    Csv(#[from] csv::Error),
}

impl ExperimentError {
    fn is_timeout(&self) -> bool {
        let budget = |e: &EngineError| matches!(e, EngineError::BudgetExceeded(_));
        match self {
            ExperimentError::Engine(e) => budget(e),
            ExperimentError::Dialogue(DialogueError::Engine(e)) => budget(e),
            ExperimentError::Reconcile(ReconcileError::Engine(e)) => budget(e),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kb_size: usize,
    pub conflict_fraction: f64,
    pub alpha: f64,
    pub seed: u64,
    /// Atoms per formula; the generator uses `⌈kb_size · atom_ratio⌉` atoms.
    pub atom_ratio: f64,
    pub max_premise_atoms: usize,
    pub time_limit: Duration,
    pub repetitions: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kb_size: 200,
            conflict_fraction: 0.2,
            alpha: 0.5,
            seed: 0,
            atom_ratio: 0.25,
            max_premise_atoms: 3,
            time_limit: Duration::from_secs(500),
            repetitions: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let problem = if self.kb_size < 4 {
            "kb_size must be at least 4"
        } else if !(self.conflict_fraction > 0.0 && self.conflict_fraction <= 1.0) {
            "conflict fraction must lie in (0, 1]"
        } else if !(0.0..=1.0).contains(&self.alpha) {
            "alpha must lie in [0, 1]"
        } else if !(self.atom_ratio > 0.0) {
            "atom ratio must be positive"
        } else if self.max_premise_atoms == 0 {
            "max_premise_atoms must be at least 1"
        } else {
            return Ok(());
        };
        Err(ExperimentError::Config(problem.into()))
    }

    /// Independent seeds for repetition `rep`: generator, pair split, query.
    pub fn rep_seeds(&self, rep: usize) -> [u64; 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(rep as u64);
        [rng.next_u64(), rng.next_u64(), rng.next_u64()]
    }
}

/// One generated instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub kb_r: KnowledgeBase,
    pub kb_e: KnowledgeBase,
    pub query: Formula,
}

const INSTANCE_ATTEMPTS: u64 = 16;

/// Generates the pair and query for one repetition, moving on to derived
/// seeds when no query literal exists.
pub fn build_instance(config: &ExperimentConfig, rep: usize) -> Result<Instance, ExperimentError> {
    let [kb_seed, pair_seed, query_seed] = config.rep_seeds(rep);
    for attempt in 0..INSTANCE_ATTEMPTS {
        let kb = generate_inconsistent_kb(config, kb_seed.wrapping_add(attempt))?;
        let (kb_r, kb_e) = derive_kb_pair(&kb, config.conflict_fraction, pair_seed.wrapping_add(attempt))?;
        match select_query(&kb_r, &kb_e, query_seed.wrapping_add(attempt)) {
            Ok(query) => return Ok(Instance { kb_r, kb_e, query }),
            Err(ExperimentError::NoQuery) => {
                tracing::info!(rep, attempt, "no query candidate, regenerating");
            }
            Err(e) => return Err(e),
        }
    }
    Err(ExperimentError::Generation(format!(
        "no instance with a query candidate after {INSTANCE_ATTEMPTS} attempts"
    )))
}

/// Runs the dialogue, the success procedure and the single-shot baseline on
/// one instance.
pub fn evaluate_instance(
    config: &ExperimentConfig,
    rep: usize,
    instance: &Instance,
    deadline: Option<Instant>,
) -> Result<MetricsRow, ExperimentError> {
    let budget = Budget::default().with_deadline(deadline);
    let protocol = Protocol {
        budget,
        ..Protocol::default()
    };
    let kb_r = Arc::new(instance.kb_r.clone());
    let kb_e = Arc::new(instance.kb_e.clone());
    let run = protocol.run(
        kb_r.clone(),
        kb_e.clone(),
        vec![instance.query.clone()],
        Rules::default(),
        &Strategies::default(),
        None,
    )?;
    let state = &run.state;

    let mut ctx = SolveContext::new(budget);
    let queried = state.queried_formulas();
    let (kb_dr, updates) = reconcile::success_procedure(&mut ctx, &kb_e, state.cs_r(), &queried)?;
    let pre = reconcile::similarity(&mut ctx, &kb_e, &kb_r, config.alpha)?;
    let post_dr = reconcile::similarity(&mut ctx, &kb_dr, &kb_r, config.alpha)?;
    let ssr = reconcile::single_shot_explanation(&mut ctx, &kb_r, &kb_e, &instance.query, protocol.argument_limit)?;
    let post_ssr = reconcile::similarity(&mut ctx, &ssr.apply(&kb_e), &kb_r, config.alpha)?;

    Ok(MetricsRow {
        kb_size: config.kb_size,
        c: config.conflict_fraction,
        alpha: config.alpha,
        seed: config.seed,
        rep,
        t_seconds: Some(run.compute_time.as_secs_f64()),
        l: Some(state.history().len()),
        n: Some(updates.len()),
        sigma_pre: Some(pre.sigma),
        sigma_post_dr: Some(post_dr.sigma),
        delta_sigma_dr: Some(100.0 * (post_dr.sigma - pre.sigma)),
        sigma_post_ssr: Some(post_ssr.sigma),
        delta_sigma_ssr: Some(100.0 * (post_ssr.sigma - pre.sigma)),
        timeout: false,
    })
}

/// One repetition end to end. Running out of time or solver budget yields a
/// flagged row rather than an error.
pub fn run_repetition(config: &ExperimentConfig, rep: usize) -> Result<MetricsRow, ExperimentError> {
    let instance = build_instance(config, rep)?;
    let deadline = Instant::now() + config.time_limit;
    match evaluate_instance(config, rep, &instance, Some(deadline)) {
        Ok(row) => Ok(row),
        Err(e) if e.is_timeout() => {
            tracing::warn!(rep, error = %e, "repetition aborted");
            Ok(MetricsRow::timed_out(config, rep))
        }
        Err(e) => Err(e),
    }
}

/// Runs every repetition, in parallel batches, handing rows to `sink` in
/// repetition order as each batch completes.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    mut sink: impl FnMut(&MetricsRow) -> Result<(), ExperimentError>,
) -> Result<Vec<MetricsRow>, ExperimentError> {
    config.validate()?;
    let batch = rayon::current_num_threads().max(1);
    let mut rows = Vec::with_capacity(config.repetitions);
    for start in (0..config.repetitions).step_by(batch) {
        let end = (start + batch).min(config.repetitions);
        let results: Vec<Result<MetricsRow, ExperimentError>> =
            (start..end).into_par_iter().map(|rep| run_repetition(config, rep)).collect();
        for r in results {
            let row = r?;
            sink(&row)?;
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<MetricsRow>, ExperimentError> {
    run_experiment_with(config, |_| Ok(()))
}

impl From<BudgetKind> for ExperimentError {
    fn from(kind: BudgetKind) -> Self {
        ExperimentError::Engine(EngineError::BudgetExceeded(kind))
    }
}
