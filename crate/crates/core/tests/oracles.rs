//! MUS enumeration, minimum correction sets and argument search, checked
//! against truth-table brute force over the subset lattice.

use drhai_core::{Formula, KnowledgeBase, SolveContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ATOMS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
const INSTANCES: u64 = 100;

fn random_formula(rng: &mut ChaCha8Rng, atoms: usize, depth: u32) -> Formula {
    if depth == 0 || rng.random_bool(0.35) {
        let atom = ATOMS[rng.random_range(0..atoms)];
        return Formula::literal(atom, rng.random_bool(0.5));
    }
    let l = random_formula(rng, atoms, depth - 1);
    let r = random_formula(rng, atoms, depth - 1);
    match rng.random_range(0..5) {
        0 => Formula::and(l, r),
        1 => Formula::or(l, r),
        2 => Formula::iff(l, r),
        3 => Formula::not(Formula::implies(l, r)),
        _ => Formula::implies(l, r),
    }
}

struct Instance {
    atoms: usize,
    kb: Vec<Formula>,
    claim: Formula,
}

fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = rng.random_range(2..=ATOMS.len());
    let size = rng.random_range(1..=12);
    let mut kb = KnowledgeBase::new("kb");
    for _ in 0..4 * size {
        if kb.len() == size {
            break;
        }
        kb.insert(random_formula(&mut rng, atoms, 2));
    }
    let claim = random_formula(&mut rng, atoms, 1);
    Instance {
        atoms,
        kb: kb.formulas().to_vec(),
        claim,
    }
}

/// Truth-table satisfiability of a conjunction.
fn sat(atoms: usize, fs: &[&Formula]) -> bool {
    (0u32..1 << atoms).any(|bits| {
        let value = |name: &str| {
            let i = ATOMS.iter().position(|a| *a == name).unwrap();
            bits & (1 << i) != 0
        };
        fs.iter().all(|f| f.eval(&value))
    })
}

fn members(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

fn pick<'a>(kb: &'a [Formula], idx: &[usize]) -> Vec<&'a Formula> {
    idx.iter().map(|&i| &kb[i]).collect()
}

/// Minimal `S` with `S ∪ {anchor}` unsatisfiable, as sorted index lists.
fn brute_muses(atoms: usize, kb: &[Formula], anchor: &Formula) -> Vec<Vec<usize>> {
    let n = kb.len();
    let candidates: Vec<u32> = (0u32..1 << n)
        .filter(|&m| members(m, n).iter().all(|&i| &kb[i] != anchor))
        .filter(|&m| {
            let mut fs = pick(kb, &members(m, n));
            fs.push(anchor);
            !sat(atoms, &fs)
        })
        .collect();
    let mut out: Vec<Vec<usize>> = candidates
        .iter()
        .filter(|&&m| !candidates.iter().any(|&o| o != m && o & m == o))
        .map(|&m| members(m, n))
        .collect();
    out.sort();
    out
}

/// Minimal consistent subsets entailing `claim`, ordered by size then index
/// tuple.
fn brute_arguments(atoms: usize, kb: &[Formula], claim: &Formula) -> Vec<Vec<usize>> {
    let n = kb.len();
    let negated = Formula::not(claim.clone());
    let entailing: Vec<u32> = (0u32..1 << n)
        .filter(|&m| {
            let fs = pick(kb, &members(m, n));
            let mut with = fs.clone();
            with.push(&negated);
            sat(atoms, &fs) && !sat(atoms, &with)
        })
        .collect();
    let mut out: Vec<Vec<usize>> = entailing
        .iter()
        .filter(|&&m| !entailing.iter().any(|&o| o != m && o & m == o))
        .map(|&m| members(m, n))
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Smallest removal from `soft` that makes `hard ∪ soft` satisfiable;
/// lexicographically first among the smallest.
fn brute_mcs(atoms: usize, hard: &[Formula], soft: &[Formula]) -> Vec<usize> {
    let n = soft.len();
    let mut masks: Vec<u32> = (0u32..1 << n).collect();
    masks.sort_by_key(|&m| (m.count_ones(), members(m, n)));
    masks
        .into_iter()
        .find(|&m| {
            let kept: Vec<usize> = (0..n).filter(|i| m & (1 << i) == 0).collect();
            let mut fs: Vec<&Formula> = hard.iter().collect();
            fs.extend(pick(soft, &kept));
            sat(atoms, &fs)
        })
        .map(|m| members(m, n))
        .expect("hard part is satisfiable")
}

#[test]
fn mus_enumeration_matches_subset_lattice() {
    let mut ctx = SolveContext::default();
    let mut several = 0;
    for seed in 0..INSTANCES {
        let Instance { atoms, kb, claim } = instance(seed);
        let anchor = Formula::not(claim);
        let got = ctx.enumerate_mus(&kb, &anchor, usize::MAX).unwrap();
        assert!(got.complete);
        assert_eq!(got.muses, brute_muses(atoms, &kb, &anchor), "seed {seed}: {kb:?} / {anchor}");
        several += usize::from(got.muses.len() > 1);
    }
    assert!(several >= 20, "only {several} instances with several MUSes");
}

#[test]
fn minimum_correction_sets_match_subset_lattice() {
    let mut ctx = SolveContext::default();
    let mut nonempty = 0;
    for seed in 0..INSTANCES {
        let Instance { atoms, kb, .. } = instance(seed);
        // a satisfiable prefix of up to two formulas is held fixed
        let split = (seed as usize % 3).min(kb.len());
        let (hard, soft) = kb.split_at(split);
        if !sat(atoms, &hard.iter().collect::<Vec<_>>()) {
            continue;
        }
        let got = ctx.find_mcs(hard, soft).unwrap();
        assert_eq!(got, brute_mcs(atoms, hard, soft), "seed {seed}: {hard:?} | {soft:?}");
        nonempty += usize::from(!got.is_empty());
    }
    assert!(nonempty >= 20, "only {nonempty} instances needing a repair");
}

#[test]
fn arguments_match_subset_lattice() {
    let mut ctx = SolveContext::default();
    let mut found = 0;
    for seed in 0..INSTANCES {
        let Instance { atoms, kb, claim } = instance(seed);
        let got = ctx.arguments_for(&kb, &claim, usize::MAX).unwrap();
        assert!(got.complete);
        let expected: Vec<Vec<Formula>> = brute_arguments(atoms, &kb, &claim)
            .into_iter()
            .map(|idx| idx.into_iter().map(|i| kb[i].clone()).collect())
            .collect();
        let premises: Vec<Vec<Formula>> = got.arguments.iter().map(|a| a.premise.clone()).collect();
        assert_eq!(premises, expected, "seed {seed}: {kb:?} / {claim}");
        for a in &got.arguments {
            assert!(ctx.is_argument(&kb, a).unwrap());
        }
        found += usize::from(!got.arguments.is_empty());
    }
    assert!(found >= 20, "only {found} instances with an argument");
}
