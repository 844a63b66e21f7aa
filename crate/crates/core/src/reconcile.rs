//! Bringing the explainee's knowledge base in line with the explainer's
//! arguments, and measuring how close two knowledge bases are.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::argument::Argument;
use crate::dialogue::CommitmentStore;
use crate::engine::{EngineError, SolveContext};
use crate::formula::Formula;
use crate::kb::KnowledgeBase;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconcileError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("the explainer's arguments do not make the knowledge base entail '{0}'")]
    NotReconciled(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

type Result<T, E = ReconcileError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateRecord {
    pub argument_applied: Argument,
    pub retracted: Vec<Formula>,
    pub resulting_kb: KnowledgeBase,
}

/// Adds the premises of `a` to `kb`. If that makes the knowledge base
/// inconsistent, a minimum set of formulas outside the premises and
/// `protected` is retracted.
pub fn update_kb(
    ctx: &mut SolveContext,
    kb: &KnowledgeBase,
    a: &Argument,
    protected: &[Formula],
) -> Result<UpdateRecord> {
    if !ctx.satisfiable(&a.premise)? {
        return Err(ReconcileError::Precondition(format!("premise of {a} is inconsistent")));
    }
    let mut merged = kb.clone();
    for p in &a.premise {
        merged.insert(p.clone());
    }
    let retracted = if ctx.satisfiable(&merged)? {
        Vec::new()
    } else {
        let hard: Vec<Formula> = a.premise.iter().chain(protected).cloned().collect();
        let hard_set: HashSet<&Formula> = hard.iter().collect();
        let soft: Vec<Formula> = kb.iter().filter(|f| !hard_set.contains(f)).cloned().collect();
        let gamma = ctx.find_mcs(&hard, &soft).map_err(|e| match e {
            EngineError::Precondition(_) => ReconcileError::Precondition(format!(
                "premise of {a} contradicts previously added premises"
            )),
            other => other.into(),
        })?;
        gamma.into_iter().map(|i| soft[i].clone()).collect()
    };
    let resulting_kb = merged.without(&retracted);
    debug_assert!(ctx.satisfiable(&resulting_kb).unwrap_or(true));
    Ok(UpdateRecord {
        argument_applied: a.clone(),
        retracted,
        resulting_kb,
    })
}

fn entails_all(ctx: &mut SolveContext, kb: &KnowledgeBase, topic: &[Formula]) -> Result<bool> {
    for f in topic {
        if !ctx.entails(kb, f)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Applies the explainer's committed arguments, latest first, until the
/// knowledge base entails every topic formula. Premises added earlier in the
/// procedure are never retracted.
pub fn success_procedure(
    ctx: &mut SolveContext,
    kb_e: &KnowledgeBase,
    cs_r: &CommitmentStore,
    topic: &[Formula],
) -> Result<(KnowledgeBase, Vec<UpdateRecord>)> {
    let mut kb = kb_e.clone();
    let mut protected: Vec<Formula> = Vec::new();
    let mut updates = Vec::new();
    if entails_all(ctx, &kb, topic)? {
        return Ok((kb, updates));
    }
    for a in cs_r.arguments().rev() {
        let record = update_kb(ctx, &kb, a, &protected)?;
        for p in &a.premise {
            if !protected.contains(p) {
                protected.push(p.clone());
            }
        }
        kb = record.resulting_kb.clone();
        updates.push(record);
        if entails_all(ctx, &kb, topic)? {
            return Ok((kb, updates));
        }
    }
    let missing = topic
        .iter()
        .find(|f| !ctx.entails(&kb, f).unwrap_or(false))
        .map_or_else(String::new, |f| f.to_string());
    Err(ReconcileError::NotReconciled(missing))
}

/// `2·shared / total`, the Sørensen-Dice index of two sets; 1 when both are
/// empty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dice {
    pub shared: u64,
    pub total: u64,
}

impl Dice {
    pub fn ratio(&self) -> Ratio<u64> {
        if self.total == 0 {
            Ratio::from_integer(1)
        } else {
            Ratio::new(2 * self.shared, self.total)
        }
    }

    pub fn value(&self) -> f64 {
        let r = self.ratio();
        *r.numer() as f64 / *r.denom() as f64
    }
}

impl fmt::Display for Dice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.total == 0 {
            f.write_str("1")
        } else {
            write!(f, "{}/{}", 2 * self.shared, self.total)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub syntactic: Dice,
    pub semantic: Dice,
    pub alpha: f64,
    pub sigma: f64,
    pub vocabulary: BTreeSet<String>,
}

/// Weighted Sørensen-Dice similarity: `alpha` on shared formulas, the rest
/// on shared entailed literals over the joint vocabulary.
pub fn similarity(
    ctx: &mut SolveContext,
    kb_e: &KnowledgeBase,
    kb_r: &KnowledgeBase,
    alpha: f64,
) -> Result<SimilarityReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ReconcileError::Precondition(format!("alpha {alpha} outside [0, 1]")));
    }
    let shared = kb_e.iter().filter(|f| kb_r.contains(f)).count();
    let syntactic = Dice {
        shared: shared as u64,
        total: (kb_e.len() + kb_r.len()) as u64,
    };
    let mut vocabulary = kb_e.atoms();
    vocabulary.extend(kb_r.atoms());
    let e_e = ctx.entailed_literals(kb_e, &vocabulary)?;
    let e_r = ctx.entailed_literals(kb_r, &vocabulary)?;
    let semantic = Dice {
        shared: e_e.intersection_len(&e_r) as u64,
        total: (e_e.len() + e_r.len()) as u64,
    };
    Ok(SimilarityReport {
        syntactic,
        semantic,
        alpha,
        sigma: alpha * syntactic.value() + (1.0 - alpha) * semantic.value(),
        vocabulary,
    })
}

/// `⟨additions, removals⟩`: one explanation delivered at once.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingleShotExplanation {
    pub additions: Vec<Formula>,
    pub removals: Vec<Formula>,
}

impl SingleShotExplanation {
    /// `(kb_e ∪ additions) \ removals`.
    pub fn apply(&self, kb_e: &KnowledgeBase) -> KnowledgeBase {
        let mut kb = kb_e.clone();
        for f in &self.additions {
            kb.insert(f.clone());
        }
        kb.without(&self.removals)
    }
}

/// The smallest argument found for `query` in `kb_r` (among the first
/// `limit` enumerated), plus a minimum retraction from `kb_e` that makes room
/// for it.
pub fn single_shot_explanation(
    ctx: &mut SolveContext,
    kb_r: &KnowledgeBase,
    kb_e: &KnowledgeBase,
    query: &Formula,
    limit: usize,
) -> Result<SingleShotExplanation> {
    if !ctx.entails(kb_r, query)? {
        return Err(ReconcileError::Precondition(format!(
            "'{query}' is not entailed by the explainer's knowledge base"
        )));
    }
    if ctx.entails(kb_e, query)? && !ctx.entails(kb_e, &Formula::not(query.clone()))? {
        return Err(ReconcileError::Precondition(format!(
            "'{query}' is already entailed by the explainee's knowledge base"
        )));
    }
    let found = ctx.arguments_for(kb_r.formulas(), query, limit)?.exact()?;
    let Some(best) = found.arguments.into_iter().next() else {
        return Err(ReconcileError::Precondition(format!("no argument for '{query}' could be built")));
    };
    let additions = best.premise;
    let added: HashSet<&Formula> = additions.iter().collect();
    let soft: Vec<Formula> = kb_e.iter().filter(|f| !added.contains(f)).cloned().collect();
    let gamma = ctx.find_mcs(&additions, &soft)?;
    Ok(SingleShotExplanation {
        removals: gamma.into_iter().map(|i| soft[i].clone()).collect(),
        additions,
    })
}
