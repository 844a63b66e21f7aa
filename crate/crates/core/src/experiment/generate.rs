use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ExperimentConfig, ExperimentError};
use crate::engine::SolveContext;
use crate::formula::Formula;
use crate::kb::KnowledgeBase;

const GENERATION_ATTEMPTS: u64 = 64;

fn random_literal(rng: &mut ChaCha8Rng, atom: usize) -> Formula {
    Formula::literal(format!("x{atom}"), rng.random_bool(0.5))
}

/// A unit literal (one time in five) or `l1 & ... & lk -> l` with the head
/// atom outside the body.
fn random_formula(rng: &mut ChaCha8Rng, atoms: usize, max_body: usize) -> Formula {
    if atoms < 2 || rng.random_bool(0.2) {
        let atom = rng.random_range(0..atoms);
        return random_literal(rng, atom);
    }
    let body_len = rng.random_range(1..=max_body.min(atoms - 1));
    let mut picked: Vec<usize> = rand::seq::index::sample(rng, atoms, body_len + 1).into_vec();
    let head = picked.pop().expect("sampled body_len + 1 atoms");
    picked.sort_unstable();
    let body = picked
        .into_iter()
        .map(|a| random_literal(rng, a))
        .reduce(Formula::and)
        .expect("non-empty body");
    Formula::implies(body, random_literal(rng, head))
}

/// A random unsatisfiable knowledge base of exactly `config.kb_size`
/// formulas over `⌈kb_size · atom_ratio⌉` atoms.
pub fn generate_inconsistent_kb(config: &ExperimentConfig, seed: u64) -> Result<KnowledgeBase, ExperimentError> {
    config.validate()?;
    let atoms = ((config.kb_size as f64 * config.atom_ratio).ceil() as usize).max(2);
    let mut ctx = SolveContext::default();
    for attempt in 0..GENERATION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        let mut kb = KnowledgeBase::new("KB");
        let mut draws = 0usize;
        while kb.len() < config.kb_size && draws < 100 * config.kb_size {
            kb.insert(random_formula(&mut rng, atoms, config.max_premise_atoms));
            draws += 1;
        }
        if kb.len() == config.kb_size && !ctx.satisfiable(&kb)? {
            return Ok(kb);
        }
        tracing::debug!(seed, attempt, "generated knowledge base unusable, retrying");
    }
    Err(ExperimentError::Generation(format!(
        "no unsatisfiable knowledge base of size {} after {GENERATION_ATTEMPTS} attempts",
        config.kb_size
    )))
}

/// Splits an unsatisfiable knowledge base into the explainer's consistent
/// part and a conflicting explainee knowledge base. `c` sets how much of the
/// explainee's target size comes from conflicting formulas; the rest is
/// copied from the explainer.
pub fn derive_kb_pair(
    kb: &KnowledgeBase,
    c: f64,
    seed: u64,
) -> Result<(KnowledgeBase, KnowledgeBase), ExperimentError> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(ExperimentError::Config(format!("conflict fraction {c} outside (0, 1]")));
    }
    let mut ctx = SolveContext::default();
    if ctx.satisfiable(kb)? {
        return Err(ExperimentError::Generation("knowledge base is already satisfiable".into()));
    }
    let gamma = ctx.find_mcs(&[], kb.formulas())?;
    let removed: Vec<Formula> = gamma.iter().map(|&i| kb.formulas()[i].clone()).collect();
    let kb_r = kb.without(&removed).with_label("KB_r");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let conflict_target = (c * kb_r.len() as f64).ceil() as usize;
    let copy_target = ((1.0 - c) * kb_r.len() as f64).floor() as usize;

    let mut kb_e = KnowledgeBase::new("KB_e");
    let mut try_add = |kb_e: &mut KnowledgeBase, f: Formula| -> Result<bool, ExperimentError> {
        if kb_e.contains(&f) {
            return Ok(false);
        }
        let mut trial = kb_e.clone();
        trial.insert(f);
        if ctx.satisfiable(&trial)? {
            *kb_e = trial;
            return Ok(true);
        }
        Ok(false)
    };

    let mut negations: Vec<Formula> = kb_r.iter().map(|f| f.complement()).collect();
    negations.shuffle(&mut rng);
    for f in removed.into_iter().chain(negations) {
        if kb_e.len() >= conflict_target {
            break;
        }
        try_add(&mut kb_e, f)?;
    }
    // conflicts that could not be placed are made up with further copies
    let target = if copy_target == 0 { kb_e.len() } else { conflict_target + copy_target };
    let mut copies: Vec<Formula> = kb_r.formulas().to_vec();
    copies.shuffle(&mut rng);
    for f in copies {
        if kb_e.len() >= target {
            break;
        }
        try_add(&mut kb_e, f)?;
    }
    Ok((kb_r, kb_e))
}

/// Literals over the joint vocabulary that `kb_r` entails and `kb_e` does
/// not, in atom order with the positive literal first.
pub fn query_candidates(kb_r: &KnowledgeBase, kb_e: &KnowledgeBase) -> Result<Vec<Formula>, ExperimentError> {
    let mut ctx = SolveContext::default();
    let mut vocabulary = kb_r.atoms();
    vocabulary.extend(kb_e.atoms());
    let mut out = Vec::new();
    for atom in &vocabulary {
        for positive in [true, false] {
            let lit = Formula::literal(atom.clone(), positive);
            if ctx.entails(kb_r, &lit)? && !ctx.entails(kb_e, &lit)? {
                out.push(lit);
            }
        }
    }
    Ok(out)
}

pub fn select_query(kb_r: &KnowledgeBase, kb_e: &KnowledgeBase, seed: u64) -> Result<Formula, ExperimentError> {
    let candidates = query_candidates(kb_r, kb_e)?;
    if candidates.is_empty() {
        return Err(ExperimentError::NoQuery);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(candidates[rng.random_range(0..candidates.len())].clone())
}
