//! Decision procedures over sets of formulas: satisfiability, entailment,
//! minimal unsatisfiable subsets, minimum correction sets and entailed
//! literals.
//!
//! All of them run on a [`SolveContext`], which keeps one incremental SAT
//! solver and gives every distinct formula its own selector variable. A query
//! over any subset of the registered formulas is then a single solve under
//! assumptions, and learnt clauses carry over between queries.

mod mcs;
mod mus;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cnf::{ClauseSet, Encoder, VarRole};
use crate::formula::Formula;
use crate::sat::{Interrupt, Limits, Lit, Solver};

pub use mus::MusEnumeration;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("solver budget exceeded: {0}")]
    BudgetExceeded(BudgetKind),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetKind {
    Conflicts,
    Time,
}

impl fmt::Display for BudgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetKind::Conflicts => f.write_str("conflict limit"),
            BudgetKind::Time => f.write_str("time limit"),
        }
    }
}

impl From<Interrupt> for EngineError {
    fn from(i: Interrupt) -> Self {
        EngineError::BudgetExceeded(match i {
            Interrupt::Conflicts => BudgetKind::Conflicts,
            Interrupt::Time => BudgetKind::Time,
        })
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

/// Resource budget for each solver call, plus an optional absolute deadline
/// shared by every call made through a context.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_conflicts: Option<u64>,
    pub max_time: Option<Duration>,
    pub deadline: Option<Instant>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_conflicts: Some(1_000_000),
            max_time: Some(Duration::from_secs(5)),
            deadline: None,
        }
    }
}

impl Budget {
    pub fn with_deadline(mut self, deadline: Option<Instant>) -> Self {
        self.deadline = deadline;
        self
    }

    fn limits(&self) -> Limits {
        Limits {
            max_conflicts: self.max_conflicts,
            max_time: self.max_time,
            deadline: self.deadline,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub calls: u64,
    pub time: Duration,
}

pub struct SolveContext {
    encoder: Encoder,
    solver: Solver,
    groups: HashMap<Formula, Lit>,
    budget: Budget,
    stats: SolveStats,
}

impl Default for SolveContext {
    fn default() -> Self {
        SolveContext::new(Budget::default())
    }
}

impl SolveContext {
    pub fn new(budget: Budget) -> Self {
        SolveContext {
            encoder: Encoder::new(),
            solver: Solver::new(),
            groups: HashMap::new(),
            budget,
            stats: SolveStats::default(),
        }
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn set_budget(&mut self, budget: Budget) {
        self.budget = budget;
    }

    pub fn stats(&self) -> SolveStats {
        self.stats
    }

    /// The selector literal for `f`, compiling it on first use.
    pub fn selector(&mut self, f: &Formula) -> Lit {
        if let Some(&lit) = self.groups.get(f) {
            return lit;
        }
        let mut clauses = Vec::new();
        let sel = self.encoder.guarded(f, &mut clauses).pos();
        for c in &clauses {
            self.solver.add_clause(c);
        }
        self.solver.pin_phase(sel.var(), false);
        self.groups.insert(f.clone(), sel);
        sel
    }

    fn fresh_aux(&mut self) -> Lit {
        self.encoder.fresh(VarRole::Auxiliary).pos()
    }

    fn add_clause(&mut self, c: &[Lit]) {
        self.solver.add_clause(c);
    }

    /// One solve under the given selector assumptions.
    pub fn check(&mut self, assumptions: &[Lit]) -> Result<bool> {
        let started = Instant::now();
        let out = self.solver.solve(assumptions, &self.budget.limits());
        self.stats.calls += 1;
        self.stats.time += started.elapsed();
        Ok(out?)
    }

    /// After an unsatisfiable [`check`](Self::check): the assumptions that
    /// took part in the refutation.
    pub fn failed(&self) -> &[Lit] {
        self.solver.failed_assumptions()
    }

    /// Value of an atom in the last model (unknown atoms read as false).
    pub fn model_atom(&self, name: &str) -> bool {
        self.encoder
            .atom_var(name)
            .is_some_and(|v| self.solver.model_value(v))
    }

    pub fn model_satisfies(&self, f: &Formula) -> bool {
        f.eval(&|name| self.model_atom(name))
    }

    fn selectors<'a>(&mut self, fs: impl IntoIterator<Item = &'a Formula>) -> Vec<Lit> {
        fs.into_iter().map(|f| self.selector(f)).collect()
    }

    pub fn satisfiable<'a>(&mut self, fs: impl IntoIterator<Item = &'a Formula>) -> Result<bool> {
        let sels = self.selectors(fs);
        self.check(&sels)
    }

    /// `premises ⊨ claim`, decided as unsatisfiability of
    /// `premises ∪ {!claim}`.
    pub fn entails<'a>(
        &mut self,
        premises: impl IntoIterator<Item = &'a Formula>,
        claim: &Formula,
    ) -> Result<bool> {
        let mut sels = self.selectors(premises);
        sels.push(self.selector(&Formula::not(claim.clone())));
        Ok(!self.check(&sels)?)
    }

    /// The literals over `vocabulary` entailed by `kb`.
    pub fn entailed_literals<'a, I>(&mut self, kb: I, vocabulary: &BTreeSet<String>) -> Result<LiteralSet>
    where
        I: IntoIterator<Item = &'a Formula>,
    {
        let sels = self.selectors(kb);
        if !self.check(&sels)? {
            return Err(EngineError::Precondition(
                "entailed literals requested for an unsatisfiable knowledge base".into(),
            ));
        }
        let mut out = LiteralSet::default();
        for atom in vocabulary {
            for positive in [true, false] {
                let mut assumptions = sels.clone();
                // kb ⊨ l iff kb ∪ {!l} is unsatisfiable
                let negated = Formula::literal(atom.clone(), !positive);
                assumptions.push(self.selector(&negated));
                if !self.check(&assumptions)? {
                    out.insert(atom.clone(), positive);
                }
            }
        }
        Ok(out)
    }
}

/// A set of literals `(atom, polarity)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LiteralSet(BTreeSet<(String, bool)>);

impl LiteralSet {
    pub fn insert(&mut self, atom: impl Into<String>, positive: bool) -> bool {
        self.0.insert((atom.into(), positive))
    }

    pub fn contains(&self, atom: &str, positive: bool) -> bool {
        self.0.contains(&(atom.to_owned(), positive))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.0.iter().map(|(a, p)| (a.as_str(), *p))
    }

    pub fn intersection_len(&self, other: &LiteralSet) -> usize {
        self.0.intersection(&other.0).count()
    }

    pub fn to_formulas(&self) -> Vec<Formula> {
        self.iter().map(|(a, p)| Formula::literal(a, p)).collect()
    }
}

impl FromIterator<(String, bool)> for LiteralSet {
    fn from_iter<T: IntoIterator<Item = (String, bool)>>(iter: T) -> Self {
        LiteralSet(iter.into_iter().collect())
    }
}

impl fmt::Display for LiteralSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (atom, positive)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if !positive {
                f.write_str("!")?;
            }
            f.write_str(atom)?;
        }
        f.write_str("}")
    }
}

impl ClauseSet {
    /// Satisfiability with every selector asserted.
    pub fn is_satisfiable(&self, budget: Budget) -> Result<bool> {
        let mut solver = Solver::new();
        for _ in 0..self.num_vars {
            solver.new_var();
        }
        for c in &self.clauses {
            solver.add_clause(c);
        }
        let sels: Vec<Lit> = self.selectors.iter().map(|v| v.pos()).collect();
        Ok(solver.solve(&sels, &budget.limits())?)
    }
}

pub fn is_satisfiable(formulas: &[Formula]) -> Result<bool> {
    SolveContext::default().satisfiable(formulas)
}

pub fn entails(kb: &[Formula], claim: &Formula) -> Result<bool> {
    SolveContext::default().entails(kb, claim)
}

/// Deletion-based MUS of `formulas` relative to `anchor`, returned as sorted
/// indices into `formulas`. The anchor is always held.
pub fn find_mus(formulas: &[Formula], anchor: &Formula) -> Result<Vec<usize>> {
    SolveContext::default().find_mus(formulas, anchor)
}

pub fn enumerate_mus(formulas: &[Formula], anchor: &Formula, limit: usize) -> Result<MusEnumeration> {
    SolveContext::default().enumerate_mus(formulas, anchor, limit)
}

/// Minimum-cardinality correction set: sorted indices into `soft`.
pub fn find_mcs(hard: &[Formula], soft: &[Formula]) -> Result<Vec<usize>> {
    SolveContext::default().find_mcs(hard, soft)
}

pub fn entailed_literals(kb: &[Formula], vocabulary: &BTreeSet<String>) -> Result<LiteralSet> {
    SolveContext::default().entailed_literals(kb, vocabulary)
}
