//! One human-versus-explainer dialogue. The human plays the explainee,
//! choosing from a menu of legal moves generated from the scenario's
//! `menu_kb`; the explainer answers every human move right away.

use std::sync::Arc;
use std::time::{Duration, Instant};

use drhai_core::dialogue::MoveRecord;
use drhai_core::reconcile::{similarity, success_procedure};
use drhai_core::{
    Act, Agent, Budget, DialogueError, DialogueState, EngineError, Locution, Move, Protocol, Rules, SimilarityReport,
    SolveContext, Strategies,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::ServiceError;
use crate::scenario::Scenario;

#[derive(Clone, Copy, Debug)]
pub struct SessionConfig {
    /// Menu entries besides agree-to-disagree.
    pub menu_size: usize,
    /// Compute budget per explainer move and per menu.
    pub move_budget: Duration,
    pub alpha: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            menu_size: 6,
            move_budget: Duration::from_secs(2),
            alpha: 0.5,
        }
    }
}

impl SessionConfig {
    fn protocol(&self) -> Protocol {
        Protocol {
            budget: Budget::default().with_deadline(Some(Instant::now() + self.move_budget)),
            ..Protocol::default()
        }
    }
}

/// Similarity of the human's starting knowledge to the explainer's, before
/// and after applying the explainer's arguments.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub pre: SimilarityReport,
    pub post: Option<SimilarityReport>,
    pub updates: usize,
    pub reconciled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MenuEntry {
    pub token: String,
    pub locution: Locution,
    pub text: String,
    #[serde(rename = "move")]
    pub record: MoveRecord,
    #[serde(skip)]
    pub mv: Move,
}

#[derive(Clone, Debug)]
pub struct Session {
    pub id: String,
    pub scenario: Arc<Scenario>,
    pub state: DialogueState,
    pub created: u64,
    pub updated: u64,
    pub summary: Option<Summary>,
}

fn rules() -> Rules {
    Rules {
        explainee_may_concede: true,
        ..Rules::default()
    }
}

fn is_budget(e: &DialogueError) -> bool {
    matches!(e, DialogueError::Engine(EngineError::BudgetExceeded(_)))
}

impl Session {
    fn blank(id: String, scenario: Arc<Scenario>, created: u64) -> Self {
        let state = DialogueState::new(
            scenario.kb_r.clone(),
            scenario.menu_kb.clone(),
            scenario.topic.clone(),
            rules(),
        );
        Session {
            id,
            scenario,
            state,
            created,
            updated: created,
            summary: None,
        }
    }

    /// Opens the dialogue with the human's query for the first topic formula
    /// and the explainer's reply. Returns the moves played.
    pub fn start(
        id: String,
        scenario: Arc<Scenario>,
        config: &SessionConfig,
        now: u64,
    ) -> Result<(Session, Vec<Move>), ServiceError> {
        let mut session = Session::blank(id, scenario, now);
        let opening = Move::new(1, Agent::Explainee, Act::Query(session.scenario.topic[0].clone()));
        session.state = config.protocol().apply_move(&session.state, opening.clone())?;
        let reply = session.explainer_reply(config)?;
        Ok((session, vec![opening, reply]))
    }

    /// Rebuilds a session from its logged moves.
    pub fn replay(
        id: String,
        scenario: Arc<Scenario>,
        moves: Vec<Move>,
        created: u64,
        updated: u64,
        config: &SessionConfig,
    ) -> Result<Session, ServiceError> {
        let mut session = Session::blank(id, scenario, created);
        for mv in moves {
            session.state = session.state.with_move_unchecked(mv)?;
        }
        session.updated = updated;
        if session.finished() {
            session.summary = Some(session.summarize(config)?);
        }
        Ok(session)
    }

    pub fn finished(&self) -> bool {
        self.state.terminated()
    }

    pub fn turn(&self) -> Option<Agent> {
        (!self.finished()).then(|| self.state.agent_to_move())
    }

    pub fn token(&self, mv: &Move) -> String {
        let record = serde_json::to_string(&MoveRecord::from(mv)).expect("move records serialize");
        let digest = Sha256::new()
            .chain_update(self.id.as_bytes())
            .chain_update(b"\n")
            .chain_update(record.as_bytes())
            .finalize();
        hex::encode(&digest[..16])
    }

    pub fn render(&self, mv: &Move) -> String {
        let s = &self.scenario;
        match &mv.act {
            Act::Query(f) => format!("Why {}?", s.render(f)),
            Act::Support { target, argument } => {
                format!("{}, because {}.", s.render(target), s.render_all(&argument.premise))
            }
            Act::Refute { target, argument } => format!(
                "Against '{}': {}, so {}.",
                s.render(target),
                s.render_all(&argument.premise),
                s.render(&argument.claim)
            ),
            Act::AgreeToDisagree => "Let's agree to disagree.".into(),
        }
    }

    /// The human's options: legal explainee moves, refutes of the most
    /// recent targets first, capped at `menu_size`, then agree-to-disagree.
    pub fn menu(&self, config: &SessionConfig) -> Result<Vec<MenuEntry>, ServiceError> {
        match self.turn() {
            None => return Err(ServiceError::Finished),
            Some(Agent::Explainer) => return Err(ServiceError::NotYourTurn),
            Some(Agent::Explainee) => {}
        }
        let t = self.state.next_timestep();
        let legal = match config.protocol().legal_moves(&self.state, Agent::Explainee) {
            Ok(moves) => moves,
            Err(e) if is_budget(&e) => {
                tracing::warn!(session = %self.id, "menu computation ran out of time");
                Vec::new()
            }
            Err(e) => return Err(e.into()),
        };
        let mut moves: Vec<Move> = legal
            .into_iter()
            .filter(|m| m.act != Act::AgreeToDisagree)
            .take(config.menu_size)
            .collect();
        moves.push(Move::new(t, Agent::Explainee, Act::AgreeToDisagree));
        Ok(moves
            .into_iter()
            .map(|mv| MenuEntry {
                token: self.token(&mv),
                locution: mv.locution(),
                text: self.render(&mv),
                record: MoveRecord::from(&mv),
                mv,
            })
            .collect())
    }

    /// Plays the menu entry with `token` and the explainer's reply. Returns
    /// the moves played; the session is unchanged on error.
    pub fn play(&mut self, token: &str, config: &SessionConfig, now: u64) -> Result<Vec<Move>, ServiceError> {
        let entry = self
            .menu(config)?
            .into_iter()
            .find(|e| e.token == token)
            .ok_or_else(|| ServiceError::StaleMove(token.to_owned()))?;
        let mut next = self.clone();
        next.state = match config.protocol().apply_move(&self.state, entry.mv.clone()) {
            Ok(state) => state,
            // the menu entry was legal when listed; a timeout while re-checking is not the human's fault
            Err(e) if is_budget(&e) => self.state.with_move_unchecked(entry.mv.clone())?,
            Err(e) => return Err(e.into()),
        };
        let mut played = vec![entry.mv];
        if !next.finished() {
            played.push(next.explainer_reply(config)?);
        }
        if next.finished() {
            next.summary = Some(next.summarize(config)?);
        }
        next.updated = now;
        *self = next;
        Ok(played)
    }

    fn explainer_reply(&mut self, config: &SessionConfig) -> Result<Move, ServiceError> {
        let strategy = Strategies::default().of(Agent::Explainer).clone();
        let mv = match config.protocol().next_move(&self.state, Agent::Explainer, &strategy) {
            Ok(mv) => mv,
            Err(e) if is_budget(&e) => {
                tracing::warn!(session = %self.id, "explainer ran out of time, agreeing to disagree");
                Move::new(self.state.next_timestep(), Agent::Explainer, Act::AgreeToDisagree)
            }
            Err(e) => return Err(e.into()),
        };
        self.state = self.state.with_move_unchecked(mv.clone())?;
        Ok(mv)
    }

    fn summarize(&self, config: &SessionConfig) -> Result<Summary, ServiceError> {
        let mut ctx = SolveContext::default();
        let kb_e = &self.scenario.menu_kb;
        let kb_r = &self.scenario.kb_r;
        let pre = similarity(&mut ctx, kb_e, kb_r, config.alpha)?;
        let queried = self.state.queried_formulas();
        Ok(match success_procedure(&mut ctx, kb_e, self.state.cs_r(), &queried) {
            Ok((kb, updates)) => Summary {
                post: Some(similarity(&mut ctx, &kb, kb_r, config.alpha)?),
                pre,
                updates: updates.len(),
                reconciled: true,
                detail: None,
            },
            Err(e) => Summary {
                pre,
                post: None,
                updates: 0,
                reconciled: false,
                detail: Some(e.to_string()),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin;
    use drhai_core::parse_formula;

    fn illustrative() -> Arc<Scenario> {
        Arc::new(builtin().remove(0))
    }

    fn pick(session: &Session, config: &SessionConfig, locution: Locution, target: &str) -> String {
        let target = parse_formula(target).unwrap();
        session
            .menu(config)
            .unwrap()
            .into_iter()
            .find(|e| e.locution == locution && e.mv.target() == Some(&target))
            .unwrap_or_else(|| panic!("no {locution} {target} on the menu"))
            .token
    }

    #[test]
    fn opening_is_query_then_support() {
        let config = SessionConfig::default();
        let (s, played) = Session::start("x".into(), illustrative(), &config, 0).unwrap();
        assert_eq!(played.len(), 2);
        assert_eq!(played[0].act, Act::Query(parse_formula("c").unwrap()));
        assert_eq!(played[1].locution(), Locution::Support);
        assert_eq!(s.turn(), Some(Agent::Explainee));
    }

    #[test]
    fn menu_cap_keeps_agree_to_disagree() {
        let config = SessionConfig {
            menu_size: 0,
            ..SessionConfig::default()
        };
        let (s, _) = Session::start("x".into(), illustrative(), &config, 0).unwrap();
        let menu = s.menu(&config).unwrap();
        assert_eq!(menu.len(), 1);
        assert_eq!(menu[0].locution, Locution::AgreeToDisagree);
    }

    #[test]
    fn unknown_token_leaves_the_session_alone() {
        let config = SessionConfig::default();
        let (mut s, _) = Session::start("x".into(), illustrative(), &config, 0).unwrap();
        let before = s.state.history().to_vec();
        assert!(matches!(s.play("nope", &config, 1), Err(ServiceError::StaleMove(_))));
        assert_eq!(s.state.history(), before.as_slice());
    }

    #[test]
    fn the_illustrative_dialogue_can_be_played_by_hand() {
        let config = SessionConfig::default();
        let (mut s, _) = Session::start("x".into(), illustrative(), &config, 0).unwrap();
        let token = pick(&s, &config, Locution::Refute, "c");
        let played = s.play(&token, &config, 1).unwrap();
        assert_eq!(played[1].target(), Some(&parse_formula("e").unwrap()));
        let token = pick(&s, &config, Locution::Query, "h");
        s.play(&token, &config, 2).unwrap();
        let token = pick(&s, &config, Locution::Refute, "f");
        let played = s.play(&token, &config, 3).unwrap();
        assert_eq!(played[1].act, Act::AgreeToDisagree);
        let token = pick_agree(&s, &config);
        s.play(&token, &config, 4).unwrap();
        assert!(s.finished());
        assert_eq!(s.state.history().len(), 9);
        let summary = s.summary.as_ref().unwrap();
        assert!(summary.reconciled);
        assert!(summary.post.as_ref().unwrap().sigma > summary.pre.sigma);
    }

    fn pick_agree(s: &Session, config: &SessionConfig) -> String {
        s.menu(config).unwrap().pop().unwrap().token
    }

    #[test]
    fn replay_restores_state_and_tokens() {
        let config = SessionConfig::default();
        let (mut s, _) = Session::start("x".into(), illustrative(), &config, 0).unwrap();
        let token = pick(&s, &config, Locution::Refute, "c");
        s.play(&token, &config, 5).unwrap();
        let again = Session::replay(
            "x".into(),
            illustrative(),
            s.state.history().to_vec(),
            0,
            5,
            &config,
        )
        .unwrap();
        assert_eq!(again.state.history(), s.state.history());
        let tokens = |x: &Session| x.menu(&config).unwrap().into_iter().map(|e| e.token).collect::<Vec<_>>();
        assert_eq!(tokens(&again), tokens(&s));
    }
}
