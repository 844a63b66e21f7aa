//! Clause-form compilation of formulas.
//!
//! Each guarded formula gets a selector variable `s`; its clauses are emitted
//! as `(!s | C)` so the formula only constrains a model when `s` is assumed.
//! Clause-shaped formulas (`a & b -> c`, `a | !b`) compile directly; anything
//! else is flattened through definitional auxiliary variables whose defining
//! clauses are always active (they are satisfiable for every assignment of
//! the atoms, so they never change the answer).

use std::collections::{BTreeMap, HashMap};

use crate::formula::Formula;
use crate::kb::KnowledgeBase;
use crate::sat::{Lit, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarRole {
    Atom,
    Selector,
    Auxiliary,
}

/// Allocates variables and produces clauses. Shared by [`compile`] and the
/// incremental solve context.
#[derive(Default, Debug, Clone)]
pub struct Encoder {
    roles: Vec<VarRole>,
    atoms: BTreeMap<String, Var>,
    definitions: HashMap<Formula, Lit>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.roles.len()
    }

    pub fn role(&self, v: Var) -> VarRole {
        self.roles[v.index()]
    }

    pub fn atoms(&self) -> &BTreeMap<String, Var> {
        &self.atoms
    }

    pub fn atom_var(&self, name: &str) -> Option<Var> {
        self.atoms.get(name).copied()
    }

    pub fn fresh(&mut self, role: VarRole) -> Var {
        self.roles.push(role);
        Var(self.roles.len() as u32 - 1)
    }

    fn atom(&mut self, name: &str) -> Var {
        if let Some(&v) = self.atoms.get(name) {
            return v;
        }
        let v = self.fresh(VarRole::Atom);
        self.atoms.insert(name.to_owned(), v);
        v
    }

    /// Clauses equivalent to `f` (with fresh definitions appended to
    /// `defs`), to be guarded by the caller.
    pub fn clauses_of(&mut self, f: &Formula, defs: &mut Vec<Vec<Lit>>) -> Vec<Vec<Lit>> {
        let mut out = Vec::new();
        self.cnf(f, true, &mut out, defs);
        out.retain_mut(|c| normalize(c));
        out
    }

    fn cnf(&mut self, f: &Formula, positive: bool, out: &mut Vec<Vec<Lit>>, defs: &mut Vec<Vec<Lit>>) {
        match (f, positive) {
            (Formula::Not(inner), p) => self.cnf(inner, !p, out, defs),
            (Formula::And(l, r), true) => {
                self.cnf(l, true, out, defs);
                self.cnf(r, true, out, defs);
            }
            (Formula::Or(l, r), false) => {
                self.cnf(l, false, out, defs);
                self.cnf(r, false, out, defs);
            }
            (Formula::Implies(l, r), false) => {
                self.cnf(l, true, out, defs);
                self.cnf(r, false, out, defs);
            }
            _ => {
                let mut clause = Vec::new();
                self.clause(f, positive, &mut clause, defs);
                out.push(clause);
            }
        }
    }

    fn clause(&mut self, f: &Formula, positive: bool, clause: &mut Vec<Lit>, defs: &mut Vec<Vec<Lit>>) {
        match (f, positive) {
            (Formula::Not(inner), p) => self.clause(inner, !p, clause, defs),
            (Formula::Or(l, r), true) => {
                self.clause(l, true, clause, defs);
                self.clause(r, true, clause, defs);
            }
            (Formula::And(l, r), false) => {
                self.clause(l, false, clause, defs);
                self.clause(r, false, clause, defs);
            }
            (Formula::Implies(l, r), true) => {
                self.clause(l, false, clause, defs);
                self.clause(r, true, clause, defs);
            }
            _ => {
                let lit = self.define(f, defs);
                clause.push(if positive { lit } else { !lit });
            }
        }
    }

    /// A literal equivalent to `f`, introducing an auxiliary variable for
    /// compound formulas.
    pub fn define(&mut self, f: &Formula, defs: &mut Vec<Vec<Lit>>) -> Lit {
        match f {
            Formula::Atom(name) => return self.atom(name).pos(),
            Formula::Not(inner) => return !self.define(inner, defs),
            _ => {}
        }
        if let Some(&lit) = self.definitions.get(f) {
            return lit;
        }
        let (l, r) = match f {
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Iff(l, r) => {
                (self.define(l, defs), self.define(r, defs))
            }
            _ => unreachable!(),
        };
        let x = self.fresh(VarRole::Auxiliary).pos();
        match f {
            Formula::And(..) => {
                defs.push(vec![!x, l]);
                defs.push(vec![!x, r]);
                defs.push(vec![x, !l, !r]);
            }
            Formula::Or(..) => {
                defs.push(vec![!x, l, r]);
                defs.push(vec![x, !l]);
                defs.push(vec![x, !r]);
            }
            Formula::Implies(..) => {
                defs.push(vec![!x, !l, r]);
                defs.push(vec![x, l]);
                defs.push(vec![x, !r]);
            }
            Formula::Iff(..) => {
                defs.push(vec![!x, !l, r]);
                defs.push(vec![!x, l, !r]);
                defs.push(vec![x, l, r]);
                defs.push(vec![x, !l, !r]);
            }
            _ => unreachable!(),
        }
        self.definitions.insert(f.clone(), x);
        x
    }

    /// Emits the guarded clauses of `f` under a new selector.
    pub fn guarded(&mut self, f: &Formula, sink: &mut Vec<Vec<Lit>>) -> Var {
        let mut defs = Vec::new();
        let clauses = self.clauses_of(f, &mut defs);
        let sel = self.fresh(VarRole::Selector);
        sink.append(&mut defs);
        for mut c in clauses {
            c.insert(0, sel.neg());
            sink.push(c);
        }
        sel
    }
}

/// Sorts and dedups a clause; returns `false` for tautologies.
fn normalize(c: &mut Vec<Lit>) -> bool {
    c.sort_unstable();
    c.dedup();
    !c.windows(2).any(|w| w[1] == !w[0])
}

/// The compiled form of a knowledge base plus always-active extra formulas.
#[derive(Clone, Debug)]
pub struct ClauseSet {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
    /// Selector variable for each KB formula, by KB index.
    pub selectors: Vec<Var>,
    pub atoms: BTreeMap<String, Var>,
    roles: Vec<VarRole>,
}

impl ClauseSet {
    pub fn role(&self, v: Var) -> VarRole {
        self.roles[v.index()]
    }

    pub fn selector(&self, kb_index: usize) -> Var {
        self.selectors[kb_index]
    }
}

/// Compiles `kb` with one selector per formula, and `extra` unguarded.
pub fn compile(kb: &KnowledgeBase, extra: &[Formula]) -> ClauseSet {
    let mut enc = Encoder::new();
    let mut clauses = Vec::new();
    let mut selectors = Vec::with_capacity(kb.len());
    for f in kb {
        selectors.push(enc.guarded(f, &mut clauses));
    }
    for f in extra {
        let mut defs = Vec::new();
        let cs = enc.clauses_of(f, &mut defs);
        clauses.append(&mut defs);
        clauses.extend(cs);
    }
    ClauseSet {
        num_vars: enc.num_vars(),
        clauses,
        selectors,
        atoms: enc.atoms.clone(),
        roles: enc.roles,
    }
}
