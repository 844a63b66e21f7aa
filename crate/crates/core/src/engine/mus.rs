use std::collections::HashMap;

use super::{BudgetKind, EngineError, Result, SolveContext};
use crate::formula::Formula;
use crate::sat::{Limits, Lit, Solver};

/// Result of a bounded MUS enumeration. `muses` is sorted by index tuple.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MusEnumeration {
    pub muses: Vec<Vec<usize>>,
    /// Every MUS accepted by the filter has been found.
    pub complete: bool,
    /// Set when enumeration stopped early because a solver budget ran out.
    pub interrupted: Option<BudgetKind>,
}

/// Selector bookkeeping for one `formulas` slice against an anchor.
struct Groups {
    sels: Vec<Lit>,
    anchor: Lit,
    /// Indices that can take part in a MUS (the first occurrence of each
    /// distinct formula, excluding copies of the anchor).
    universe: Vec<usize>,
    by_selector: HashMap<Lit, usize>,
}

impl Groups {
    fn new(ctx: &mut SolveContext, formulas: &[Formula], anchor: &Formula) -> Self {
        let anchor_sel = ctx.selector(anchor);
        let mut sels = Vec::with_capacity(formulas.len());
        let mut universe = Vec::new();
        let mut by_selector = HashMap::new();
        for (i, f) in formulas.iter().enumerate() {
            let s = ctx.selector(f);
            sels.push(s);
            if s != anchor_sel && !by_selector.contains_key(&s) {
                by_selector.insert(s, i);
                universe.push(i);
            }
        }
        Groups {
            sels,
            anchor: anchor_sel,
            universe,
            by_selector,
        }
    }

    fn assumptions<'a>(&self, indices: impl IntoIterator<Item = &'a usize>) -> Vec<Lit> {
        let mut out: Vec<Lit> = indices.into_iter().map(|&i| self.sels[i]).collect();
        out.push(self.anchor);
        out
    }

    /// Indices named in the last failed-assumption set, sorted.
    fn core(&self, ctx: &SolveContext) -> Vec<usize> {
        let mut out: Vec<usize> = ctx
            .failed()
            .iter()
            .filter_map(|l| self.by_selector.get(l).copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl SolveContext {
    /// A minimal subset `M` of `formulas` with `M ∪ {anchor}` unsatisfiable,
    /// as sorted indices.
    pub fn find_mus(&mut self, formulas: &[Formula], anchor: &Formula) -> Result<Vec<usize>> {
        let groups = Groups::new(self, formulas, anchor);
        if self.check(&groups.assumptions(&groups.universe))? {
            return Err(EngineError::Precondition(
                "formulas together with the anchor are satisfiable".into(),
            ));
        }
        let core = groups.core(self);
        self.shrink(&groups, core)
    }

    /// Deletion-based shrinking with clause-set refinement. `candidate` must
    /// be unsatisfiable together with the anchor.
    fn shrink(&mut self, groups: &Groups, candidate: Vec<usize>) -> Result<Vec<usize>> {
        let mut necessary: Vec<usize> = Vec::new();
        let mut unknown = candidate;
        unknown.reverse();
        while let Some(x) = unknown.pop() {
            let trial = groups.assumptions(necessary.iter().chain(unknown.iter()));
            if self.check(&trial)? {
                necessary.push(x);
            } else {
                // every later candidate outside the core can go too
                let core = groups.core(self);
                unknown.retain(|i| core.binary_search(i).is_ok());
            }
        }
        necessary.sort_unstable();
        Ok(necessary)
    }

    pub fn enumerate_mus(
        &mut self,
        formulas: &[Formula],
        anchor: &Formula,
        limit: usize,
    ) -> Result<MusEnumeration> {
        self.enumerate_mus_filtered(formulas, anchor, limit, |_, _| Ok(true))
    }

    /// MARCO-style enumeration of the MUSes of `formulas` relative to
    /// `anchor`. Only MUSes accepted by `accept` are returned and count
    /// towards `limit`; the callback gets this context back so it can run
    /// its own checks. A budget interruption ends the enumeration with
    /// `interrupted` set instead of failing.
    pub fn enumerate_mus_filtered(
        &mut self,
        formulas: &[Formula],
        anchor: &Formula,
        limit: usize,
        accept: impl FnMut(&mut SolveContext, &[usize]) -> Result<bool>,
    ) -> Result<MusEnumeration> {
        self.enumerate_mus_touching(formulas, anchor, limit, None, accept)
    }

    /// As [`enumerate_mus_filtered`](Self::enumerate_mus_filtered), but with
    /// `required` set only MUSes containing at least one index it marks are
    /// produced. Seeds are kept to subsets containing such an index, and a
    /// seed whose unmarked part is already unsatisfiable is first cleared of
    /// that part's MUS.
    pub fn enumerate_mus_touching(
        &mut self,
        formulas: &[Formula],
        anchor: &Formula,
        limit: usize,
        required: Option<&[bool]>,
        mut accept: impl FnMut(&mut SolveContext, &[usize]) -> Result<bool>,
    ) -> Result<MusEnumeration> {
        let groups = Groups::new(self, formulas, anchor);
        let mut out = MusEnumeration::default();
        if limit == 0 {
            return Ok(out);
        }
        let n = formulas.len();
        let mut map = Solver::new();
        map.set_default_polarity(true);
        let map_vars: Vec<_> = (0..n).map(|_| map.new_var()).collect();
        // indices outside the universe never take part
        for i in 0..n {
            if groups.universe.binary_search(&i).is_err() {
                map.add_clause(&[map_vars[i].neg()]);
            }
        }
        if let Some(required) = required {
            let touch: Vec<Lit> = groups
                .universe
                .iter()
                .filter(|&&i| required[i])
                .map(|&i| map_vars[i].pos())
                .collect();
            map.add_clause(&touch);
        }
        loop {
            if !map.solve(&[], &Limits::UNLIMITED).unwrap_or(false) {
                out.complete = true;
                break;
            }
            let seed: Vec<usize> = groups
                .universe
                .iter()
                .copied()
                .filter(|&i| map.model_value(map_vars[i]))
                .collect();
            let step = self.marco_step(&groups, formulas, seed, required).and_then(|step| match step {
                Step::Mus(mus) => {
                    let touches = required.is_none_or(|r| mus.iter().any(|&i| r[i]));
                    let keep = touches && accept(self, &mus)?;
                    Ok((Step::Mus(mus), keep))
                }
                other => Ok((other, true)),
            });
            match step {
                Ok((Step::Satisfiable(mss), _)) => {
                    let mut in_mss = vec![false; n];
                    for &i in &mss {
                        in_mss[i] = true;
                    }
                    let block: Vec<Lit> = groups
                        .universe
                        .iter()
                        .filter(|&&i| !in_mss[i])
                        .map(|&i| map_vars[i].pos())
                        .collect();
                    map.add_clause(&block);
                }
                Ok((Step::Mus(mus), keep)) => {
                    let block: Vec<Lit> = mus.iter().map(|&i| map_vars[i].neg()).collect();
                    map.add_clause(&block);
                    if keep {
                        out.muses.push(mus);
                        if out.muses.len() >= limit {
                            break;
                        }
                    }
                }
                Err(EngineError::BudgetExceeded(kind)) => {
                    out.interrupted = Some(kind);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        out.muses.sort();
        Ok(out)
    }

    fn marco_step(
        &mut self,
        groups: &Groups,
        formulas: &[Formula],
        seed: Vec<usize>,
        required: Option<&[bool]>,
    ) -> Result<Step> {
        if !self.check(&groups.assumptions(&seed))? {
            let mut core = groups.core(self);
            if let Some(required) = required {
                let unmarked: Vec<usize> = core.iter().copied().filter(|&i| !required[i]).collect();
                if unmarked.len() < core.len() && !self.check(&groups.assumptions(&unmarked))? {
                    core = groups.core(self);
                }
            }
            return Ok(Step::Mus(self.shrink(groups, core)?));
        }
        // grow to a maximal satisfiable subset
        let mut in_set = vec![false; formulas.len()];
        for &i in &seed {
            in_set[i] = true;
        }
        for &i in &groups.universe {
            if !in_set[i] && self.model_satisfies(&formulas[i]) {
                in_set[i] = true;
            }
        }
        for &i in &groups.universe {
            if in_set[i] {
                continue;
            }
            in_set[i] = true;
            let members: Vec<usize> = groups.universe.iter().copied().filter(|&j| in_set[j]).collect();
            if self.check(&groups.assumptions(&members))? {
                for &j in &groups.universe {
                    if !in_set[j] && self.model_satisfies(&formulas[j]) {
                        in_set[j] = true;
                    }
                }
            } else {
                in_set[i] = false;
            }
        }
        Ok(Step::Satisfiable(
            groups.universe.iter().copied().filter(|&i| in_set[i]).collect(),
        ))
    }
}

enum Step {
    Satisfiable(Vec<usize>),
    Mus(Vec<usize>),
}
