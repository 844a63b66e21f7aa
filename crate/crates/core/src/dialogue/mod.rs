//! The explainer/explainee dialogue: locutions, moves, commitment stores and
//! the dialogue state. Legality and strategies live in [`protocol`].

mod protocol;
mod transcript;

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::argument::Argument;
use crate::engine::EngineError;
use crate::formula::Formula;
use crate::kb::KnowledgeBase;

pub use protocol::{
    apply_move, is_well_formed, legal_moves, next_move, run_dialogue, DialogueRun, Protocol, Strategies, Strategy,
};
pub use transcript::{parse_transcript_records, transcript_lines, transcript_records, MoveRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agent {
    Explainee,
    Explainer,
}

impl Agent {
    pub fn other(self) -> Agent {
        match self {
            Agent::Explainee => Agent::Explainer,
            Agent::Explainer => Agent::Explainee,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Agent::Explainee => "explainee",
            Agent::Explainer => "explainer",
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Locution {
    Query,
    Support,
    Refute,
    AgreeToDisagree,
}

impl Locution {
    pub fn as_str(self) -> &'static str {
        match self {
            Locution::Query => "query",
            Locution::Support => "support",
            Locution::Refute => "refute",
            Locution::AgreeToDisagree => "agree-to-disagree",
        }
    }

    pub fn parse(s: &str) -> Option<Locution> {
        match s {
            "query" => Some(Locution::Query),
            "support" => Some(Locution::Support),
            "refute" => Some(Locution::Refute),
            "agree-to-disagree" => Some(Locution::AgreeToDisagree),
            _ => None,
        }
    }
}

impl fmt::Display for Locution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a move says.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Act {
    Query(Formula),
    Support { target: Formula, argument: Argument },
    Refute { target: Formula, argument: Argument },
    AgreeToDisagree,
}

impl Act {
    pub fn locution(&self) -> Locution {
        match self {
            Act::Query(_) => Locution::Query,
            Act::Support { .. } => Locution::Support,
            Act::Refute { .. } => Locution::Refute,
            Act::AgreeToDisagree => Locution::AgreeToDisagree,
        }
    }

    pub fn target(&self) -> Option<&Formula> {
        match self {
            Act::Query(f) => Some(f),
            Act::Support { target, .. } | Act::Refute { target, .. } => Some(target),
            Act::AgreeToDisagree => None,
        }
    }

    pub fn argument(&self) -> Option<&Argument> {
        match self {
            Act::Support { argument, .. } | Act::Refute { argument, .. } => Some(argument),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "MoveRecord", try_from = "MoveRecord")]
pub struct Move {
    pub timestep: usize,
    pub agent: Agent,
    pub act: Act,
}

impl Move {
    pub fn new(timestep: usize, agent: Agent, act: Act) -> Self {
        Move { timestep, agent, act }
    }

    pub fn locution(&self) -> Locution {
        self.act.locution()
    }

    pub fn target(&self) -> Option<&Formula> {
        self.act.target()
    }

    pub fn argument(&self) -> Option<&Argument> {
        self.act.argument()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Commitment {
    Query(Formula),
    Argument(Argument),
    AgreeToDisagree,
}

/// Append-only log of what one agent has committed to, keyed by timestep.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CommitmentStore {
    entries: Vec<(usize, Commitment)>,
}

impl CommitmentStore {
    fn push(&mut self, timestep: usize, c: Commitment) {
        debug_assert!(self.entries.last().is_none_or(|(t, _)| *t < timestep));
        self.entries.push((timestep, c));
    }

    pub fn entries(&self) -> &[(usize, Commitment)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Committed arguments in utterance order.
    pub fn arguments(&self) -> impl DoubleEndedIterator<Item = &Argument> {
        self.entries.iter().filter_map(|(_, c)| match c {
            Commitment::Argument(a) => Some(a),
            _ => None,
        })
    }

    pub fn queries(&self) -> impl Iterator<Item = &Formula> {
        self.entries.iter().filter_map(|(_, c)| match c {
            Commitment::Query(f) => Some(f),
            _ => None,
        })
    }

    /// Premises and claims of committed arguments, plus queried formulas
    /// when `with_queries` is set.
    pub fn uttered(&self, with_queries: bool) -> HashSet<&Formula> {
        let mut out: HashSet<&Formula> = self.arguments().flat_map(|a| a.formulas()).collect();
        if with_queries {
            out.extend(self.queries());
        }
        out
    }
}

/// Where an agent may draw counterargument premises from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceMode {
    /// The agent's own knowledge base.
    #[default]
    Pure,
    /// Own knowledge base plus the formulas of the opponent's arguments.
    Mixed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rules {
    pub explainee_sources: SourceMode,
    pub explainer_sources: SourceMode,
    /// The explainee may agree to disagree at any turn (a human player
    /// ending the conversation).
    pub explainee_may_concede: bool,
}

impl Rules {
    pub fn sources(&self, agent: Agent) -> SourceMode {
        match agent {
            Agent::Explainee => self.explainee_sources,
            Agent::Explainer => self.explainer_sources,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DialogueError {
    #[error("the dialogue has terminated")]
    Terminated,
    #[error("it is the {expected}'s turn, not the {got}'s")]
    WrongAgent { expected: Agent, got: Agent },
    #[error("move has timestep {got}, expected {expected}")]
    WrongTimestep { expected: usize, got: usize },
    #[error("{rule} violated: {detail}")]
    Illegal { rule: &'static str, detail: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("topic formula '{formula}' rejected: {reason}")]
    Topic { formula: String, reason: String },
    #[error("no termination within {0} moves")]
    MoveBudget(usize),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// The full state of one dialogue. Cheap to clone: the knowledge bases are
/// shared.
#[derive(Clone, Debug)]
pub struct DialogueState {
    kb_r: Arc<KnowledgeBase>,
    kb_e: Arc<KnowledgeBase>,
    topic: Vec<Formula>,
    rules: Rules,
    cs_e: CommitmentStore,
    cs_r: CommitmentStore,
    history: Vec<Move>,
    terminated: bool,
}

impl DialogueState {
    pub fn new(
        kb_r: Arc<KnowledgeBase>,
        kb_e: Arc<KnowledgeBase>,
        topic: Vec<Formula>,
        rules: Rules,
    ) -> Self {
        DialogueState {
            kb_r,
            kb_e,
            topic,
            rules,
            cs_e: CommitmentStore::default(),
            cs_r: CommitmentStore::default(),
            history: Vec::new(),
            terminated: false,
        }
    }

    /// The same dialogue before any move.
    pub fn initial(&self) -> DialogueState {
        DialogueState::new(self.kb_r.clone(), self.kb_e.clone(), self.topic.clone(), self.rules)
    }

    pub fn kb_r(&self) -> &KnowledgeBase {
        &self.kb_r
    }

    pub fn kb_e(&self) -> &KnowledgeBase {
        &self.kb_e
    }

    pub fn kb(&self, agent: Agent) -> &KnowledgeBase {
        match agent {
            Agent::Explainee => &self.kb_e,
            Agent::Explainer => &self.kb_r,
        }
    }

    pub fn topic(&self) -> &[Formula] {
        &self.topic
    }

    pub fn rules(&self) -> Rules {
        self.rules
    }

    pub fn cs_e(&self) -> &CommitmentStore {
        &self.cs_e
    }

    pub fn cs_r(&self) -> &CommitmentStore {
        &self.cs_r
    }

    pub fn commitments(&self, agent: Agent) -> &CommitmentStore {
        match agent {
            Agent::Explainee => &self.cs_e,
            Agent::Explainer => &self.cs_r,
        }
    }

    pub fn history(&self) -> &[Move] {
        &self.history
    }

    pub fn last_move(&self) -> Option<&Move> {
        self.history.last()
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    /// Agents alternate and the explainee opens.
    pub fn agent_to_move(&self) -> Agent {
        if self.history.len() % 2 == 0 {
            Agent::Explainee
        } else {
            Agent::Explainer
        }
    }

    pub fn next_timestep(&self) -> usize {
        self.history.len() + 1
    }

    /// Formulas the agent has uttered: argument premises and claims, and for
    /// the explainee also its queries.
    pub fn uttered(&self, agent: Agent) -> HashSet<&Formula> {
        self.commitments(agent).uttered(agent == Agent::Explainee)
    }

    pub fn queried(&self, f: &Formula) -> bool {
        self.cs_e.queries().any(|q| q == f)
    }

    /// Targets `agent` has already refuted.
    pub fn refuted_by(&self, agent: Agent) -> impl Iterator<Item = &Formula> {
        self.history.iter().filter_map(move |m| match &m.act {
            Act::Refute { target, .. } if m.agent == agent => Some(target),
            _ => None,
        })
    }

    /// Topic formulas not yet queried, in topic order.
    pub fn unopened_topics(&self) -> impl Iterator<Item = &Formula> {
        self.topic.iter().filter(|f| !self.queried(f))
    }

    /// Formulas the explainee actually asked about, in query order.
    pub fn queried_formulas(&self) -> Vec<Formula> {
        self.cs_e.queries().cloned().collect()
    }

    pub(crate) fn check_turn(&self, agent: Agent) -> Result<(), DialogueError> {
        if self.terminated {
            return Err(DialogueError::Terminated);
        }
        let expected = self.agent_to_move();
        if agent != expected {
            return Err(DialogueError::WrongAgent { expected, got: agent });
        }
        Ok(())
    }

    /// Records `mv` without checking protocol legality: only turn order and
    /// timestep are enforced. Used for replaying logged dialogues and for
    /// degraded fallbacks; [`Protocol::apply_move`] is the checked path.
    pub fn with_move_unchecked(&self, mv: Move) -> Result<DialogueState, DialogueError> {
        self.check_turn(mv.agent)?;
        if mv.timestep != self.next_timestep() {
            return Err(DialogueError::WrongTimestep {
                expected: self.next_timestep(),
                got: mv.timestep,
            });
        }
        let mut next = self.clone();
        let t = mv.timestep;
        let commitment = match &mv.act {
            Act::Query(f) => Commitment::Query(f.clone()),
            Act::Support { argument, .. } | Act::Refute { argument, .. } => Commitment::Argument(argument.clone()),
            Act::AgreeToDisagree => Commitment::AgreeToDisagree,
        };
        match mv.agent {
            Agent::Explainee => next.cs_e.push(t, commitment),
            Agent::Explainer => next.cs_r.push(t, commitment),
        }
        if mv.agent == Agent::Explainee && mv.act == Act::AgreeToDisagree {
            next.terminated = true;
        }
        next.history.push(mv);
        Ok(next)
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&transcript::line(self))
    }
}
