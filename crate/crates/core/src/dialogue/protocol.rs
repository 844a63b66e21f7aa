use std::collections::HashSet;
use std::iter;
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::{Act, Agent, DialogueError, DialogueState, Locution, Move, Rules, SourceMode};
use crate::argument::Argument;
use crate::engine::{Budget, SolveContext};
use crate::formula::Formula;
use crate::kb::KnowledgeBase;

type Result<T, E = DialogueError> = std::result::Result<T, E>;

/// An ordered strategy: the first locution in `priorities` with a legal
/// move wins.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategy {
    pub priorities: Vec<Locution>,
    /// After the explainer agrees to disagree, open the next unopened topic
    /// formula or agree to disagree as well.
    pub wind_down: bool,
}

impl Strategy {
    pub fn explainee() -> Self {
        Strategy {
            priorities: vec![Locution::Refute, Locution::Query, Locution::AgreeToDisagree],
            wind_down: true,
        }
    }

    pub fn explainer() -> Self {
        Strategy {
            priorities: vec![Locution::Support, Locution::Refute, Locution::AgreeToDisagree],
            wind_down: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategies {
    pub explainee: Strategy,
    pub explainer: Strategy,
}

impl Default for Strategies {
    fn default() -> Self {
        Strategies {
            explainee: Strategy::explainee(),
            explainer: Strategy::explainer(),
        }
    }
}

impl Strategies {
    pub fn of(&self, agent: Agent) -> &Strategy {
        match agent {
            Agent::Explainee => &self.explainee,
            Agent::Explainer => &self.explainer,
        }
    }
}

/// Solver settings for move computation. Every call starts from a fresh
/// solve context, so results depend on the dialogue state alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Protocol {
    pub budget: Budget,
    /// How many fresh arguments are enumerated per target.
    pub argument_limit: usize,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            budget: Budget::default(),
            argument_limit: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DialogueRun {
    pub state: DialogueState,
    /// Time spent choosing moves.
    pub compute_time: Duration,
}

fn is_agree(m: Option<&Move>, agent: Agent) -> bool {
    m.is_some_and(|m| m.agent == agent && m.act == Act::AgreeToDisagree)
}

/// Formulas of the opponent's arguments, most recent argument first, claim
/// before premises. The explainer may also target the explainee's queries.
/// Targets the agent has already refuted are left out.
fn refute_targets(state: &DialogueState, agent: Agent) -> Vec<Formula> {
    let mut seen: HashSet<&Formula> = state.refuted_by(agent).collect();
    let mut out = Vec::new();
    for a in state.commitments(agent.other()).arguments().rev() {
        for f in iter::once(&a.claim).chain(&a.premise) {
            if seen.insert(f) {
                out.push(f.clone());
            }
        }
    }
    if agent == Agent::Explainer {
        for f in state.cs_e().queries() {
            if seen.insert(f) {
                out.push(f.clone());
            }
        }
    }
    out
}

/// Premises of the explainer's arguments (most recent first), then the
/// topic formulas.
fn query_targets(state: &DialogueState) -> Vec<Formula> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let premises = state.cs_r().arguments().rev().flat_map(|a| a.premise.iter());
    for f in premises.chain(state.topic()) {
        if seen.insert(f) {
            out.push(f.clone());
        }
    }
    out
}

fn sources(state: &DialogueState, agent: Agent) -> Vec<Formula> {
    let own = state.kb(agent);
    let mut out = own.formulas().to_vec();
    if state.rules().sources(agent) == SourceMode::Mixed {
        let mut seen: HashSet<&Formula> = own.iter().collect();
        for a in state.commitments(agent.other()).arguments() {
            for f in a.formulas() {
                if seen.insert(f) {
                    out.push(f.clone());
                }
            }
        }
    }
    out
}

fn is_fresh(uttered: &HashSet<&Formula>, a: &Argument) -> bool {
    a.premise.iter().any(|p| !uttered.contains(p))
}

fn illegal(rule: &'static str, detail: impl Into<String>) -> DialogueError {
    DialogueError::Illegal {
        rule,
        detail: detail.into(),
    }
}

impl Protocol {
    fn context(&self) -> SolveContext {
        SolveContext::new(self.budget)
    }

    fn fresh_arguments(
        &self,
        ctx: &mut SolveContext,
        source: &[Formula],
        claim: &Formula,
        uttered: &HashSet<&Formula>,
        limit: usize,
    ) -> Result<Vec<Argument>> {
        let found = ctx.arguments_beyond(source, claim, limit, uttered)?;
        Ok(found.exact()?.arguments)
    }

    /// Targets with up to `per_target` fresh counterarguments each, in
    /// target order; stops after `max_targets` targets with at least one.
    fn refutes(
        &self,
        ctx: &mut SolveContext,
        state: &DialogueState,
        agent: Agent,
        max_targets: usize,
        per_target: usize,
    ) -> Result<Vec<(Formula, Vec<Argument>)>> {
        let source = sources(state, agent);
        let uttered = state.uttered(agent);
        let mut targets = refute_targets(state, agent);
        // targets true in a model of the source have no counterargument
        if ctx.satisfiable(&source)? {
            targets.retain(|t| !ctx.model_satisfies(t));
        }
        let mut out = Vec::new();
        for target in targets {
            if out.len() >= max_targets {
                break;
            }
            if ctx.satisfiable(source.iter().chain(iter::once(&target)))? {
                continue;
            }
            let args = self.fresh_arguments(ctx, &source, &target.complement(), &uttered, per_target)?;
            if !args.is_empty() {
                out.push((target, args));
            }
        }
        Ok(out)
    }

    /// Fresh supporting arguments, when the explainee has just queried.
    fn supports(
        &self,
        ctx: &mut SolveContext,
        state: &DialogueState,
        limit: usize,
    ) -> Result<Option<(Formula, Vec<Argument>)>> {
        let Some(Move {
            agent: Agent::Explainee,
            act: Act::Query(target),
            ..
        }) = state.last_move()
        else {
            return Ok(None);
        };
        let uttered = state.uttered(Agent::Explainer);
        let args = self.fresh_arguments(ctx, state.kb_r().formulas(), target, &uttered, limit)?;
        Ok((!args.is_empty()).then(|| (target.clone(), args)))
    }

    fn queryable(&self, ctx: &mut SolveContext, state: &DialogueState, f: &Formula) -> Result<bool> {
        let kb_e = state.kb_e().formulas();
        Ok(!state.queried(f) && (!ctx.entails(kb_e, f)? || ctx.entails(kb_e, &Formula::not(f.clone()))?))
    }

    fn queries(&self, ctx: &mut SolveContext, state: &DialogueState, max: usize) -> Result<Vec<Formula>> {
        let kb_e = state.kb_e();
        let targets: Vec<Formula> = query_targets(state).into_iter().filter(|f| !state.queried(f)).collect();
        // a model of a consistent kb_e settles most targets without solving
        let screened: Vec<Option<bool>> = if ctx.satisfiable(kb_e.formulas())? {
            targets
                .iter()
                .map(|f| {
                    if !ctx.model_satisfies(f) {
                        Some(true)
                    } else if kb_e.contains(f) {
                        Some(false)
                    } else {
                        None
                    }
                })
                .collect()
        } else {
            vec![None; targets.len()]
        };
        let mut out = Vec::new();
        for (f, known) in targets.into_iter().zip(screened) {
            if out.len() >= max {
                break;
            }
            let ok = match known {
                Some(ok) => ok,
                None => self.queryable(ctx, state, &f)?,
            };
            if ok {
                out.push(f);
            }
        }
        Ok(out)
    }

    /// The preferred move of one locution, if any is legal.
    fn first_act(
        &self,
        ctx: &mut SolveContext,
        state: &DialogueState,
        agent: Agent,
        locution: Locution,
    ) -> Result<Option<Act>> {
        Ok(match (locution, agent) {
            (Locution::Query, Agent::Explainee) => self.queries(ctx, state, 1)?.pop().map(Act::Query),
            (Locution::Support, Agent::Explainer) => self.supports(ctx, state, 1)?.map(|(target, mut args)| Act::Support {
                target,
                argument: args.swap_remove(0),
            }),
            (Locution::Refute, _) => self.refutes(ctx, state, agent, 1, 1)?.pop().map(|(target, mut args)| Act::Refute {
                target,
                argument: args.swap_remove(0),
            }),
            _ => None,
        })
    }

    /// Agreeing to disagree is open to the explainee when the explainer has
    /// just done so or when concessions are allowed.
    fn free_to_agree(state: &DialogueState, agent: Agent) -> bool {
        agent == Agent::Explainee
            && (state.rules().explainee_may_concede || is_agree(state.last_move(), Agent::Explainer))
    }

    /// Whether some locution in `locutions` has a legal move.
    fn any_move(
        &self,
        ctx: &mut SolveContext,
        state: &DialogueState,
        agent: Agent,
        locutions: impl IntoIterator<Item = Locution>,
    ) -> Result<bool> {
        for loc in locutions {
            if self.first_act(ctx, state, agent, loc)?.is_some() {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Every legal move for `agent`, with at most `argument_limit` arguments
    /// per target. Refutes come first, ordered by target.
    pub fn legal_moves(&self, state: &DialogueState, agent: Agent) -> Result<Vec<Move>> {
        state.check_turn(agent)?;
        let mut ctx = self.context();
        let t = state.next_timestep();
        let mut acts = Vec::new();
        if agent == Agent::Explainer {
            if let Some((target, args)) = self.supports(&mut ctx, state, self.argument_limit)? {
                acts.extend(args.into_iter().map(|argument| Act::Support {
                    target: target.clone(),
                    argument,
                }));
            }
        }
        for (target, args) in self.refutes(&mut ctx, state, agent, usize::MAX, self.argument_limit)? {
            acts.extend(args.into_iter().map(|argument| Act::Refute {
                target: target.clone(),
                argument,
            }));
        }
        if agent == Agent::Explainee {
            acts.extend(self.queries(&mut ctx, state, usize::MAX)?.into_iter().map(Act::Query));
        }
        if acts.is_empty() || Self::free_to_agree(state, agent) {
            acts.push(Act::AgreeToDisagree);
        }
        Ok(acts.into_iter().map(|act| Move::new(t, agent, act)).collect())
    }

    /// The move `strategy` picks for `agent`.
    pub fn next_move(&self, state: &DialogueState, agent: Agent, strategy: &Strategy) -> Result<Move> {
        state.check_turn(agent)?;
        let mut ctx = self.context();
        let t = state.next_timestep();
        if agent == Agent::Explainee && strategy.wind_down && is_agree(state.last_move(), Agent::Explainer) {
            let topics: Vec<Formula> = state.unopened_topics().cloned().collect();
            for f in topics {
                if self.queryable(&mut ctx, state, &f)? {
                    return Ok(Move::new(t, agent, Act::Query(f)));
                }
            }
            return Ok(Move::new(t, agent, Act::AgreeToDisagree));
        }
        let mut tried = Vec::new();
        for &loc in &strategy.priorities {
            if loc == Locution::AgreeToDisagree {
                let untried = [Locution::Support, Locution::Refute, Locution::Query]
                    .into_iter()
                    .filter(|l| !tried.contains(l));
                if Self::free_to_agree(state, agent) || !self.any_move(&mut ctx, state, agent, untried)? {
                    return Ok(Move::new(t, agent, Act::AgreeToDisagree));
                }
                continue;
            }
            if let Some(act) = self.first_act(&mut ctx, state, agent, loc)? {
                return Ok(Move::new(t, agent, act));
            }
            tried.push(loc);
        }
        // nothing in the list applied, so nothing but agreeing is legal
        Ok(Move::new(t, agent, Act::AgreeToDisagree))
    }

    /// Checks `mv` against the protocol and returns the successor state.
    pub fn apply_move(&self, state: &DialogueState, mv: Move) -> Result<DialogueState> {
        state.check_turn(mv.agent)?;
        if mv.timestep != state.next_timestep() {
            return Err(DialogueError::WrongTimestep {
                expected: state.next_timestep(),
                got: mv.timestep,
            });
        }
        self.check_legal(state, &mv)?;
        state.with_move_unchecked(mv)
    }

    fn check_legal(&self, state: &DialogueState, mv: &Move) -> Result<()> {
        let mut ctx = self.context();
        let agent = mv.agent;
        match &mv.act {
            Act::Query(f) => {
                if agent != Agent::Explainee {
                    return Err(illegal("query role", "only the explainee queries"));
                }
                if !query_targets(state).contains(f) {
                    return Err(illegal(
                        "query precondition (1)",
                        format!("'{f}' is neither a premise uttered by the explainer nor a topic formula"),
                    ));
                }
                if state.queried(f) {
                    return Err(illegal("query precondition (2)", format!("'{f}' was already queried")));
                }
                if !self.queryable(&mut ctx, state, f)? {
                    return Err(illegal(
                        "query precondition (3)",
                        format!("the explainee already entails '{f}'"),
                    ));
                }
            }
            Act::Support { target, argument } => {
                if agent != Agent::Explainer {
                    return Err(illegal("support role", "only the explainer supports"));
                }
                let asked = matches!(
                    state.last_move(),
                    Some(Move { agent: Agent::Explainee, act: Act::Query(q), .. }) if q == target
                );
                if !asked {
                    return Err(illegal(
                        "support precondition (1)",
                        format!("the previous move is not a query for '{target}'"),
                    ));
                }
                if argument.claim != *target || !ctx.is_argument(state.kb_r().formulas(), argument)? {
                    return Err(illegal(
                        "support precondition (2)",
                        format!("{argument} is not an argument for '{target}' from the explainer's knowledge base"),
                    ));
                }
                if !is_fresh(&state.uttered(agent), argument) {
                    return Err(illegal("support precondition (3)", format!("{argument} adds no new premise")));
                }
            }
            Act::Refute { target, argument } => {
                if state.refuted_by(agent).any(|f| f == target) {
                    return Err(illegal(
                        "refute precondition (4)",
                        format!("the {agent} has already refuted '{target}'"),
                    ));
                }
                if !refute_targets(state, agent).contains(target) {
                    return Err(illegal(
                        "refute precondition (1)",
                        format!("'{target}' was not uttered by the {}", agent.other()),
                    ));
                }
                let source = sources(state, agent);
                if argument.claim != target.complement() || !ctx.is_argument(&source, argument)? {
                    return Err(illegal(
                        "refute precondition (2)",
                        format!("{argument} is not a counterargument to '{target}' from the permitted sources"),
                    ));
                }
                if !is_fresh(&state.uttered(agent), argument) {
                    return Err(illegal("refute precondition (3)", format!("{argument} adds no new premise")));
                }
            }
            Act::AgreeToDisagree => {
                let all = [Locution::Support, Locution::Refute, Locution::Query];
                if !Self::free_to_agree(state, agent) && self.any_move(&mut ctx, state, agent, all)? {
                    return Err(illegal(
                        "agree-to-disagree precondition",
                        "another locution is still available",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Both knowledge bases consistent, and every topic formula entailed by
    /// the explainer and open for the explainee to query.
    pub fn check_topic(
        &self,
        kb_r: &KnowledgeBase,
        kb_e: &KnowledgeBase,
        topic: &[Formula],
    ) -> Result<()> {
        let mut ctx = self.context();
        for (kb, who) in [(kb_r, "explainer"), (kb_e, "explainee")] {
            if !ctx.satisfiable(kb)? {
                return Err(DialogueError::Precondition(format!("the {who}'s knowledge base is inconsistent")));
            }
        }
        if topic.is_empty() {
            return Err(DialogueError::Precondition("the topic is empty".into()));
        }
        for f in topic {
            let reason = if !ctx.entails(kb_r, f)? {
                "not entailed by the explainer's knowledge base"
            } else if ctx.entails(kb_e, f)? && !ctx.entails(kb_e, &Formula::not(f.clone()))? {
                "already entailed by the explainee's knowledge base"
            } else {
                continue;
            };
            return Err(DialogueError::Topic {
                formula: f.to_string(),
                reason: reason.into(),
            });
        }
        Ok(())
    }

    /// Opens with a query for the first topic formula and lets both
    /// strategies play until the explainee agrees to disagree.
    pub fn run(
        &self,
        kb_r: Arc<KnowledgeBase>,
        kb_e: Arc<KnowledgeBase>,
        topic: Vec<Formula>,
        rules: Rules,
        strategies: &Strategies,
        move_budget: Option<usize>,
    ) -> Result<DialogueRun> {
        self.check_topic(&kb_r, &kb_e, &topic)?;
        let budget = move_budget.unwrap_or(10 * (kb_r.len() + kb_e.len()).max(1));
        let opening = Move::new(1, Agent::Explainee, Act::Query(topic[0].clone()));
        let mut state = DialogueState::new(kb_r, kb_e, topic, rules).with_move_unchecked(opening)?;
        let mut compute_time = Duration::ZERO;
        while !state.terminated() {
            if state.history().len() >= budget {
                return Err(DialogueError::MoveBudget(budget));
            }
            let agent = state.agent_to_move();
            let started = Instant::now();
            let mv = self.next_move(&state, agent, strategies.of(agent))?;
            compute_time += started.elapsed();
            state = state.with_move_unchecked(mv)?;
        }
        Ok(DialogueRun { state, compute_time })
    }

    /// Terminated, opened by a query for the first topic formula, and every
    /// later move is what the strategies pick on the preceding prefix.
    pub fn is_well_formed(&self, d: &DialogueState, strategies: &Strategies) -> bool {
        if !d.terminated() {
            return false;
        }
        let Some(first) = d.topic().first() else {
            return false;
        };
        let opening = Move::new(1, Agent::Explainee, Act::Query(first.clone()));
        if d.history().first() != Some(&opening) {
            return false;
        }
        let mut prefix = d.initial();
        for mv in d.history() {
            if mv.timestep > 1 {
                match self.next_move(&prefix, mv.agent, strategies.of(mv.agent)) {
                    Ok(expected) if expected == *mv => {}
                    _ => return false,
                }
            }
            prefix = match prefix.with_move_unchecked(mv.clone()) {
                Ok(next) => next,
                Err(_) => return false,
            };
        }
        true
    }
}

pub fn legal_moves(state: &DialogueState, agent: Agent) -> Result<Vec<Move>> {
    Protocol::default().legal_moves(state, agent)
}

pub fn next_move(state: &DialogueState, agent: Agent, strategy: &Strategy) -> Result<Move> {
    Protocol::default().next_move(state, agent, strategy)
}

pub fn apply_move(state: &DialogueState, mv: Move) -> Result<DialogueState> {
    Protocol::default().apply_move(state, mv)
}

/// Runs a dialogue with default rules and the given strategies.
pub fn run_dialogue(
    kb_r: &KnowledgeBase,
    kb_e: &KnowledgeBase,
    topic: &[Formula],
    strategies: &Strategies,
    move_budget: Option<usize>,
) -> Result<DialogueState> {
    let run = Protocol::default().run(
        Arc::new(kb_r.clone()),
        Arc::new(kb_e.clone()),
        topic.to_vec(),
        Rules::default(),
        strategies,
        move_budget,
    )?;
    Ok(run.state)
}

pub fn is_well_formed(d: &DialogueState, strategies: &Strategies) -> bool {
    Protocol::default().is_well_formed(d, strategies)
}
