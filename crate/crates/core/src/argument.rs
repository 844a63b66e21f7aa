//! Arguments and counterarguments.
//!
//! An argument for `φ` from a knowledge base is a consistent, subset-minimal
//! premise set entailing `φ`. These are exactly the MUSes of `KB ∪ {!φ}` that
//! need `!φ`, which is how they are enumerated.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::engine::{BudgetKind, EngineError, Result, SolveContext};
use crate::formula::Formula;

/// `⟨premise, claim⟩`. The premise keeps the order in which its formulas
/// appear in the source; equality and hashing treat it as a set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Argument {
    pub premise: Vec<Formula>,
    pub claim: Formula,
}

impl Argument {
    pub fn new(premise: Vec<Formula>, claim: Formula) -> Self {
        Argument { premise, claim }
    }

    pub fn premise_set(&self) -> BTreeSet<&Formula> {
        self.premise.iter().collect()
    }

    /// Premises followed by the claim.
    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.premise.iter().chain(std::iter::once(&self.claim))
    }
}

impl PartialEq for Argument {
    fn eq(&self, other: &Self) -> bool {
        self.claim == other.claim && self.premise_set() == other.premise_set()
    }
}

impl Eq for Argument {}

impl Hash for Argument {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.claim.hash(state);
        for f in self.premise_set() {
            f.hash(state);
        }
    }
}

impl fmt::Display for Argument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<{")?;
        for (i, p) in self.premise.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}, {}>", self.claim)
    }
}

/// Arguments in deterministic order: premise cardinality, then the sorted
/// tuple of source indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ArgumentSet {
    pub arguments: Vec<Argument>,
    /// No further argument (passing the filter) exists.
    pub complete: bool,
    pub interrupted: Option<BudgetKind>,
}

/// Formulas that share atoms, transitively, with `seed`. Every argument for
/// a claim lives inside this set, since an atom-disjoint part of a minimal
/// unsatisfiable set could be dropped.
fn relevant(kb: &[Formula], seed: &Formula) -> Vec<usize> {
    let atom_sets: Vec<BTreeSet<String>> = kb.iter().map(|f| f.atoms()).collect();
    let mut reached: HashSet<String> = seed.atoms().into_iter().collect();
    let mut taken = vec![false; kb.len()];
    loop {
        let mut grew = false;
        for (i, atoms) in atom_sets.iter().enumerate() {
            if !taken[i] && atoms.iter().any(|a| reached.contains(a)) {
                taken[i] = true;
                grew = true;
                reached.extend(atoms.iter().cloned());
            }
        }
        if !grew {
            break;
        }
    }
    (0..kb.len()).filter(|&i| taken[i]).collect()
}

impl ArgumentSet {
    /// Turns an interrupted enumeration into an error, for callers that need
    /// an exact answer.
    pub fn exact(self) -> Result<Self> {
        match self.interrupted {
            Some(kind) => Err(EngineError::BudgetExceeded(kind)),
            None => Ok(self),
        }
    }
}

impl SolveContext {
    /// Up to `limit` arguments for `claim` whose premises are drawn from
    /// `kb` and accepted by `keep`.
    pub fn arguments_where(
        &mut self,
        kb: &[Formula],
        claim: &Formula,
        limit: usize,
        keep: impl FnMut(&Argument) -> bool,
    ) -> Result<ArgumentSet> {
        self.arguments_among(kb, claim, limit, None, keep)
    }

    /// Arguments with at least one premise outside `known`.
    pub fn arguments_beyond(
        &mut self,
        kb: &[Formula],
        claim: &Formula,
        limit: usize,
        known: &HashSet<&Formula>,
    ) -> Result<ArgumentSet> {
        self.arguments_among(kb, claim, limit, Some(known), |_| true)
    }

    fn arguments_among(
        &mut self,
        kb: &[Formula],
        claim: &Formula,
        limit: usize,
        known: Option<&HashSet<&Formula>>,
        mut keep: impl FnMut(&Argument) -> bool,
    ) -> Result<ArgumentSet> {
        let anchor = Formula::not(claim.clone());
        let relevant = relevant(kb, &anchor);
        let pool: Vec<Formula> = relevant.iter().map(|&i| kb[i].clone()).collect();
        let required: Option<Vec<bool>> = known.map(|k| pool.iter().map(|f| !k.contains(f)).collect());
        let found = self.enumerate_mus_touching(&pool, &anchor, limit, required.as_deref(), |ctx, mus| {
            // a MUS that is inconsistent without the anchor is no argument
            if !ctx.satisfiable(mus.iter().map(|&i| &pool[i]))? {
                return Ok(false);
            }
            let arg = Argument::new(mus.iter().map(|&i| pool[i].clone()).collect(), claim.clone());
            Ok(keep(&arg))
        })?;
        let mut keyed: Vec<(Vec<usize>, Argument)> = found
            .muses
            .into_iter()
            .map(|mus| {
                let indices: Vec<usize> = mus.iter().map(|&i| relevant[i]).collect();
                let premise = indices.iter().map(|&i| kb[i].clone()).collect();
                (indices, Argument::new(premise, claim.clone()))
            })
            .collect();
        keyed.sort_by(|(a, _), (b, _)| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(ArgumentSet {
            arguments: keyed.into_iter().map(|(_, a)| a).collect(),
            complete: found.complete,
            interrupted: found.interrupted,
        })
    }

    pub fn arguments_for(&mut self, kb: &[Formula], claim: &Formula, limit: usize) -> Result<ArgumentSet> {
        self.arguments_where(kb, claim, limit, |_| true)
    }

    /// Arguments from `source` attacking `target`: arguments for its
    /// complement (`!target`, or the body of a negated target).
    pub fn counterarguments_for(
        &mut self,
        source: &[Formula],
        target: &Formula,
        limit: usize,
    ) -> Result<ArgumentSet> {
        self.arguments_for(source, &target.complement(), limit)
    }

    /// Checks the four argument conditions literally: premises drawn from
    /// `kb`, consistent, entailing the claim, and minimal.
    pub fn is_argument(&mut self, kb: &[Formula], a: &Argument) -> Result<bool> {
        let members: HashSet<&Formula> = kb.iter().collect();
        if a.premise.iter().any(|p| !members.contains(p)) {
            return Ok(false);
        }
        let premise: Vec<&Formula> = a.premise_set().into_iter().collect();
        if !self.satisfiable(premise.iter().copied())? || !self.entails(premise.iter().copied(), &a.claim)? {
            return Ok(false);
        }
        for skip in 0..premise.len() {
            let rest = premise.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, f)| *f);
            if self.entails(rest, &a.claim)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `a` attacks `b` when their premises are jointly inconsistent.
    pub fn is_counterargument(&mut self, a: &Argument, b: &Argument) -> Result<bool> {
        Ok(!self.satisfiable(a.premise.iter().chain(&b.premise))?)
    }
}

pub fn arguments_for(kb: &[Formula], claim: &Formula, limit: usize) -> Result<ArgumentSet> {
    SolveContext::default().arguments_for(kb, claim, limit)
}

pub fn counterarguments_for(source: &[Formula], target: &Formula, limit: usize) -> Result<ArgumentSet> {
    SolveContext::default().counterarguments_for(source, target, limit)
}

pub fn is_argument(kb: &[Formula], a: &Argument) -> Result<bool> {
    SolveContext::default().is_argument(kb, a)
}

pub fn is_counterargument(a: &Argument, b: &Argument) -> Result<bool> {
    SolveContext::default().is_counterargument(a, b)
}
