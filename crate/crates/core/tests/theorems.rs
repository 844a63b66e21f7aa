//! Termination and success of dialogues over seeded random knowledge-base
//! pairs of sizes 8 to 60.

use std::collections::HashSet;
use std::sync::Arc;

use drhai_core::dialogue::{legal_moves, run_dialogue};
use drhai_core::experiment::{build_instance, Instance};
use drhai_core::reconcile::success_procedure;
use drhai_core::{DialogueState, ExperimentConfig, Formula, SolveContext, Strategies};

const PAIRS: usize = 200;
const FRACTIONS: [f64; 3] = [0.2, 0.5, 0.8];

fn instances() -> Vec<(ExperimentConfig, Instance)> {
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < PAIRS {
        let config = ExperimentConfig {
            kb_size: 8 + (seed as usize * 7) % 53,
            conflict_fraction: FRACTIONS[seed as usize % 3],
            seed,
            ..ExperimentConfig::default()
        };
        seed += 1;
        if let Ok(instance) = build_instance(&config, 0) {
            out.push((config, instance));
        }
        assert!(seed < 4 * PAIRS as u64, "too few usable instances");
    }
    out
}

fn dialogue(instance: &Instance) -> DialogueState {
    run_dialogue(
        &instance.kb_r,
        &instance.kb_e,
        std::slice::from_ref(&instance.query),
        &Strategies::default(),
        None,
    )
    .unwrap()
}

#[test]
fn every_dialogue_terminates_and_never_gets_stuck() {
    for (config, instance) in instances() {
        let d = dialogue(&instance);
        let bound = 10 * (instance.kb_r.len() + instance.kb_e.len());
        assert!(d.terminated(), "seed {}", config.seed);
        assert!(d.history().len() <= bound, "seed {}: {} moves", config.seed, d.history().len());
        assert!(d.history().len() >= 2);

        // replay: at every open state the agent to move has a legal move
        let mut state = DialogueState::new(
            Arc::new(instance.kb_r.clone()),
            Arc::new(instance.kb_e.clone()),
            vec![instance.query.clone()],
            d.rules(),
        );
        for mv in d.history() {
            assert!(!state.terminated());
            let agent = state.agent_to_move();
            let legal = legal_moves(&state, agent).unwrap();
            assert!(!legal.is_empty(), "seed {}: {} stuck at {}", config.seed, agent, mv.timestep);
            state = state.with_move_unchecked(mv.clone()).unwrap();
        }
        assert!(state.terminated());
    }
}

#[test]
fn success_procedure_reconciles_without_undoing_itself() {
    let mut ctx = SolveContext::default();
    for (config, instance) in instances() {
        let d = dialogue(&instance);
        let topic = d.queried_formulas();
        let (kb, updates) = success_procedure(&mut ctx, &instance.kb_e, d.cs_r(), &topic).unwrap();
        assert!(ctx.satisfiable(&kb).unwrap(), "seed {}", config.seed);
        for f in &topic {
            assert!(ctx.entails(&kb, f).unwrap(), "seed {}: {f} not entailed", config.seed);
        }
        let mut added: HashSet<Formula> = HashSet::new();
        for u in &updates {
            for r in &u.retracted {
                assert!(!added.contains(r), "seed {}: {r} added then retracted", config.seed);
            }
            added.extend(u.argument_applied.premise.iter().cloned());
        }
        assert!(added.iter().all(|p| kb.contains(p)));
    }
}
