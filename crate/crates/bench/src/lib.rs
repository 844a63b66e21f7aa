//! Seeded inputs shared by the benchmarks.

use drhai_core::experiment::{build_instance, Instance};
use drhai_core::sat::{Lit, Solver, Var};
use drhai_core::{ExperimentConfig, KnowledgeBase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform random 3-CNF over `vars` variables.
pub fn random_3cnf(vars: u32, clauses: usize, seed: u64) -> Vec<[Lit; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..clauses)
        .map(|_| std::array::from_fn(|_| Var(rng.random_range(0..vars)).lit(rng.random_bool(0.5))))
        .collect()
}

pub fn solver_for(vars: u32, clauses: &[[Lit; 3]]) -> Solver {
    let mut s = Solver::new();
    for _ in 0..vars {
        s.new_var();
    }
    for c in clauses {
        s.add_clause(c);
    }
    s
}

/// A generated explainer/explainee pair with its query.
pub fn instance(kb_size: usize, conflict_fraction: f64, seed: u64) -> Instance {
    let config = ExperimentConfig {
        kb_size,
        conflict_fraction,
        seed,
        ..ExperimentConfig::default()
    };
    build_instance(&config, 0).expect("benchmark instance")
}

/// Both halves of an instance in one inconsistent knowledge base.
pub fn union(instance: &Instance) -> KnowledgeBase {
    let mut kb = instance.kb_r.clone();
    for f in &instance.kb_e {
        kb.insert(f.clone());
    }
    kb
}

pub fn illustrative() -> (KnowledgeBase, KnowledgeBase) {
    (
        KnowledgeBase::parse_all("KB_r", &["a", "b", "a & b -> c", "h", "h -> !e", "f", "f -> h"]),
        KnowledgeBase::parse_all("KB_e", &["e", "e -> !c", "i", "i -> !f"]),
    )
}
