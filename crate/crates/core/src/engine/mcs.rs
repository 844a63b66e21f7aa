use std::collections::{BTreeSet, HashMap};

use super::{EngineError, Result, SolveContext};
use crate::formula::Formula;
use crate::sat::Lit;

/// Soft formulas that compile to the same selector are removed together.
struct Group {
    selector: Lit,
    weight: usize,
}

impl SolveContext {
    /// A minimum-cardinality subset `γ` of `soft` such that
    /// `hard ∪ (soft \ γ)` is satisfiable. Among the minimum ones, the
    /// lexicographically smallest sorted index tuple is returned.
    ///
    /// The search runs in a scratch context, so its counters do not stay
    /// behind in this one.
    pub fn find_mcs(&mut self, hard: &[Formula], soft: &[Formula]) -> Result<Vec<usize>> {
        let mut scratch = SolveContext::new(self.budget);
        let out = scratch.repair(hard, soft);
        self.stats.calls += scratch.stats.calls;
        self.stats.time += scratch.stats.time;
        out
    }

    fn repair(&mut self, hard: &[Formula], soft: &[Formula]) -> Result<Vec<usize>> {
        let hard_sels: Vec<Lit> = hard.iter().map(|f| self.selector(f)).collect();
        if !self.check(&hard_sels)? {
            return Err(EngineError::Precondition("hard formulas are unsatisfiable".into()));
        }
        let mut groups: Vec<Group> = Vec::new();
        let mut group_of = Vec::with_capacity(soft.len());
        let mut by_selector: HashMap<Lit, usize> = HashMap::new();
        for f in soft {
            let sel = self.selector(f);
            let g = *by_selector.entry(sel).or_insert_with(|| {
                groups.push(Group { selector: sel, weight: 0 });
                groups.len() - 1
            });
            groups[g].weight += 1;
            group_of.push(g);
        }
        let mut all = hard_sels.clone();
        all.extend(groups.iter().map(|g| g.selector));
        if self.check(&all)? {
            return Ok(Vec::new());
        }

        let all: Vec<usize> = (0..groups.len()).collect();
        let (k, mut witness) = self
            .minimum_removal(&hard_sels, &groups, &all, usize::MAX)?
            .expect("no cutoff");

        // lexicographically smallest tuple of that weight. The witness is an
        // optimal repair consistent with the decisions so far; everything
        // before its earliest removal is kept unless some optimal repair
        // removes one of those groups, and then the witness moves earlier.
        let mut order = Vec::new();
        let mut seen = vec![false; groups.len()];
        for &g in &group_of {
            if !seen[g] {
                seen[g] = true;
                order.push(g);
            }
        }
        let mut kept = hard_sels;
        let mut forced = BTreeSet::new();
        let mut next = 0;
        let mut used = 0;
        while used < k {
            let first = (next..order.len())
                .find(|&i| witness.contains(&order[i]))
                .expect("witness covers the remaining weight");
            let prefix = &order[next..first];
            let found = if prefix.is_empty() {
                None
            } else {
                let trigger = self.fresh_aux();
                let mut clause = vec![!trigger];
                clause.extend(prefix.iter().map(|&g| !groups[g].selector));
                self.add_clause(&clause);
                let mut hard = kept.clone();
                hard.push(trigger);
                let open = &order[next..];
                let found = self.minimum_removal(&hard, &groups, open, k - used)?;
                self.add_clause(&[!trigger]);
                found
            };
            match found {
                Some((_, removed)) => witness = removed,
                None => {
                    kept.extend(prefix.iter().map(|&g| groups[g].selector));
                    forced.insert(order[first]);
                    used += groups[order[first]].weight;
                    next = first + 1;
                }
            }
        }
        let gamma: Vec<usize> = (0..soft.len()).filter(|i| forced.contains(&group_of[*i])).collect();
        Ok(gamma)
    }

    /// Core-guided search for the minimum weight of `open` groups to drop
    /// so that `hard` and the rest are satisfiable. Every core raises the
    /// lower bound by its lightest member and is replaced by a counter that
    /// lets one more of its members go at the same price. Gives up with
    /// `None` once the bound passes `cutoff`; otherwise returns the optimum
    /// and the groups removed in an optimal model.
    fn minimum_removal(
        &mut self,
        hard: &[Lit],
        groups: &[Group],
        open: &[usize],
        cutoff: usize,
    ) -> Result<Option<(usize, BTreeSet<usize>)>> {
        // soft assumption literal and remaining weight
        let mut soft: Vec<(Lit, usize)> = open.iter().map(|&g| (groups[g].selector, groups[g].weight)).collect();
        let mut cost = 0;
        loop {
            let mut assumptions = hard.to_vec();
            assumptions.extend(soft.iter().filter(|s| s.1 > 0).map(|s| s.0));
            if self.check(&assumptions)? {
                let removed = open.iter().copied().filter(|&g| !self.model_lit(groups[g].selector)).collect();
                return Ok(Some((cost, removed)));
            }
            let failed: BTreeSet<Lit> = self.failed().iter().copied().collect();
            let core: Vec<usize> = (0..soft.len()).filter(|&i| soft[i].1 > 0 && failed.contains(&soft[i].0)).collect();
            let Some(lightest) = core.iter().map(|&i| soft[i].1).min() else {
                return Ok(None);
            };
            cost += lightest;
            if cost > cutoff {
                return Ok(None);
            }
            for &i in &core {
                soft[i].1 -= lightest;
            }
            if core.len() > 1 {
                let violated: Vec<Lit> = core.iter().map(|&i| !soft[i].0).collect();
                let outs = self.totalizer(&violated, violated.len());
                // outs[j]: more than j members violated; the first is forced
                for &o in &outs[1..] {
                    soft.push((!o, lightest));
                }
            }
        }
    }

    fn model_lit(&self, l: Lit) -> bool {
        self.solver.model_value(l.var()) == l.is_positive()
    }

    /// Unary counter over `inputs`: output `k` (0-based) is forced true
    /// whenever more than `k` inputs are true. Only `cap` outputs are built.
    fn totalizer(&mut self, inputs: &[Lit], cap: usize) -> Vec<Lit> {
        if inputs.len() <= 1 || cap == 0 {
            return inputs.iter().copied().take(cap).collect();
        }
        let (l, r) = inputs.split_at(inputs.len() / 2);
        let left = self.totalizer(l, cap);
        let right = self.totalizer(r, cap);
        let outs: Vec<Lit> = (0..cap.min(inputs.len())).map(|_| self.fresh_aux()).collect();
        for a in 0..=left.len() {
            for b in 0..=right.len() {
                if a + b == 0 {
                    continue;
                }
                let mut clause = Vec::with_capacity(3);
                if a > 0 {
                    clause.push(!left[a - 1]);
                }
                if b > 0 {
                    clause.push(!right[b - 1]);
                }
                clause.push(outs[(a + b).min(outs.len()) - 1]);
                self.add_clause(&clause);
            }
        }
        outs
    }
}
