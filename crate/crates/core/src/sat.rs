//! A compact conflict-driven clause-learning SAT solver with incremental
//! solving under assumptions.
//!
//! - two-watched-literal propagation with blocker literals
//! - first-UIP learning with local clause minimization
//! - activity-ordered branching with phase saving
//! - Luby restarts and activity-based learnt clause reduction
//! - final-conflict analysis: the failed subset of the assumptions
//!
//! Everything is deterministic: no randomness, ties broken by variable index.

use std::ops::Not;
use std::time::{Duration, Instant};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn lit(self, positive: bool) -> Lit {
        Lit::new(self, positive)
    }

    pub fn pos(self) -> Lit {
        Lit::new(self, true)
    }

    pub fn neg(self) -> Lit {
        Lit::new(self, false)
    }
}

/// A literal, packed as `2 * var + negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Self {
        Lit(var.0 << 1 | u32::from(!positive))
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn code(self) -> usize {
        self.0 as usize
    }

    /// DIMACS-style signed integer, variables numbered from 1.
    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.var().0) + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

/// Limits applied to a single `solve` call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_conflicts: Option<u64>,
    pub max_time: Option<Duration>,
    /// Absolute deadline, checked alongside `max_time`.
    pub deadline: Option<Instant>,
}

impl Limits {
    pub const UNLIMITED: Limits = Limits {
        max_conflicts: None,
        max_time: None,
        deadline: None,
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interrupt {
    Conflicts,
    Time,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
}

#[derive(Clone, Copy, Debug)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

#[derive(Debug)]
struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    removed: bool,
    activity: f64,
}

enum SearchResult {
    Sat,
    Unsat,
    Restart,
    Interrupted(Interrupt),
}

#[derive(Default)]
pub struct Solver {
    clauses: Vec<Clause>,
    free_crefs: Vec<u32>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<Option<bool>>,
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: VarHeap,
    polarity: Vec<bool>,
    pinned: Vec<bool>,
    default_polarity: bool,
    seen: Vec<bool>,
    ok: bool,
    model: Vec<bool>,
    failed: Vec<Lit>,
    max_learnts: f64,
    stats: Stats,
}

const VAR_DECAY: f64 = 0.95;
const CLAUSE_DECAY: f64 = 0.999;
const RESTART_BASE: u64 = 100;

impl Solver {
    pub fn new() -> Self {
        Solver {
            var_inc: 1.0,
            cla_inc: 1.0,
            ok: true,
            max_learnts: 2000.0,
            ..Default::default()
        }
    }

    /// Sets the initial phase of variables that have never been assigned.
    pub fn set_default_polarity(&mut self, positive: bool) {
        self.default_polarity = positive;
    }

    /// Branch on `v` with the given phase always, instead of the saved one.
    pub fn pin_phase(&mut self, v: Var, positive: bool) {
        self.ensure_var(v);
        self.polarity[v.index()] = positive;
        self.pinned[v.index()] = true;
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.assigns.len() as u32);
        self.assigns.push(None);
        self.level.push(0);
        self.reason.push(None);
        self.activity.push(0.0);
        self.polarity.push(self.default_polarity);
        self.pinned.push(false);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.insert(v.0, &self.activity);
        v
    }

    fn ensure_var(&mut self, v: Var) {
        while self.num_vars() <= v.index() {
            self.new_var();
        }
    }

    fn value(&self, l: Lit) -> Option<bool> {
        self.assigns[l.var().index()].map(|b| b == l.is_positive())
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    /// Adds a permanent clause. Returns `false` once the clause set is known
    /// to be unsatisfiable at the root.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        debug_assert_eq!(self.decision_level(), 0);
        if !self.ok {
            return false;
        }
        let mut c: Vec<Lit> = lits.to_vec();
        for &l in &c {
            self.ensure_var(l.var());
        }
        c.sort_unstable();
        c.dedup();
        let mut out = Vec::with_capacity(c.len());
        for (i, &l) in c.iter().enumerate() {
            if i + 1 < c.len() && c[i + 1] == !l {
                return true;
            }
            match self.value(l) {
                Some(true) => return true,
                Some(false) => {}
                None => out.push(l),
            }
        }
        match out.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(out[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.alloc_clause(out, false);
                true
            }
        }
    }

    fn alloc_clause(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let clause = Clause {
            lits,
            learnt,
            removed: false,
            activity: 0.0,
        };
        let cref = match self.free_crefs.pop() {
            Some(cref) => {
                self.clauses[cref as usize] = clause;
                cref
            }
            None => {
                self.clauses.push(clause);
                (self.clauses.len() - 1) as u32
            }
        };
        let c = &self.clauses[cref as usize];
        let (l0, l1) = (c.lits[0], c.lits[1]);
        self.watches[(!l0).code()].push(Watcher { cref, blocker: l1 });
        self.watches[(!l1).code()].push(Watcher { cref, blocker: l0 });
        if learnt {
            self.learnts.push(cref);
        }
        cref
    }

    fn enqueue(&mut self, l: Lit, reason: Option<u32>) {
        let v = l.var().index();
        self.assigns[v] = Some(l.is_positive());
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[p.code()]);
            let mut i = 0;
            let mut j = 0;
            'watchers: while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == Some(true) {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].removed {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                if first != w.blocker && self.value(first) == Some(true) {
                    ws[j] = Watcher {
                        cref: w.cref,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                for k in 2..len {
                    let lk = self.clauses[cref].lits[k];
                    if self.value(lk) != Some(false) {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[(!lk).code()].push(Watcher {
                            cref: w.cref,
                            blocker: first,
                        });
                        continue 'watchers;
                    }
                }
                ws[j] = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                j += 1;
                if self.value(first) == Some(false) {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(w.cref));
                }
            }
            ws.truncate(j);
            self.watches[p.code()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: Var) {
        let idx = v.index();
        self.activity[idx] += self.var_inc;
        if self.activity[idx] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increased(v.0, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit(0)];
        let mut to_clear = Vec::new();
        let mut path_count = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level() as u32;
        loop {
            self.bump_clause(confl);
            let start = usize::from(p.is_some());
            let lits = self.clauses[confl as usize].lits.clone();
            for &q in &lits[start..] {
                let v = q.var();
                if !self.seen[v.index()] && self.level[v.index()] > 0 {
                    self.bump_var(v);
                    self.seen[v.index()] = true;
                    to_clear.push(v);
                    if self.level[v.index()] >= current {
                        path_count += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            self.seen[lit.var().index()] = false;
            path_count -= 1;
            if path_count == 0 {
                break;
            }
            confl = self.reason[lit.var().index()].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("conflict analysis visits at least one literal");

        // local minimization: drop literals implied by the rest of the clause
        let mut kept = vec![learnt[0]];
        for &l in &learnt[1..] {
            let redundant = match self.reason[l.var().index()] {
                None => false,
                Some(r) => self.clauses[r as usize].lits[1..].iter().all(|q| {
                    self.seen[q.var().index()] || self.level[q.var().index()] == 0
                }),
            };
            if !redundant {
                kept.push(l);
            }
        }
        for v in to_clear {
            self.seen[v.index()] = false;
        }
        let mut learnt = kept;

        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var().index()] as usize;
        }
        (learnt, bt)
    }

    /// Collects the assumptions responsible for falsifying assumption `p`.
    fn analyze_final(&mut self, p: Lit) -> Vec<Lit> {
        let mut out = vec![p];
        if self.decision_level() == 0 {
            return out;
        }
        self.seen[p.var().index()] = true;
        for i in (self.trail_lim[0]..self.trail.len()).rev() {
            let x = self.trail[i].var();
            if !self.seen[x.index()] {
                continue;
            }
            match self.reason[x.index()] {
                None => out.push(self.trail[i]),
                Some(r) => {
                    let lits = &self.clauses[r as usize].lits;
                    for q in &lits[1..] {
                        if self.level[q.var().index()] > 0 {
                            self.seen[q.var().index()] = true;
                        }
                    }
                }
            }
            self.seen[x.index()] = false;
        }
        self.seen[p.var().index()] = false;
        out
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var();
            self.assigns[v.index()] = None;
            self.reason[v.index()] = None;
            if !self.pinned[v.index()] {
                self.polarity[v.index()] = l.is_positive();
            }
            if !self.heap.contains(v.0) {
                self.heap.insert(v.0, &self.activity);
            }
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            let var = Var(v);
            if self.assigns[var.index()].is_none() {
                return Some(var.lit(self.polarity[var.index()]));
            }
        }
        None
    }

    fn reduce_db(&mut self) {
        let mut candidates: Vec<u32> = self
            .learnts
            .iter()
            .copied()
            .filter(|&c| !self.clauses[c as usize].removed)
            .collect();
        candidates.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            ca.activity.total_cmp(&cb.activity).then(a.cmp(&b))
        });
        let half = candidates.len() / 2;
        let mut removed_any = false;
        for &cref in &candidates[..half] {
            let c = &self.clauses[cref as usize];
            if c.lits.len() <= 2 {
                continue;
            }
            let l0 = c.lits[0];
            let locked = self.value(l0) == Some(true) && self.reason[l0.var().index()] == Some(cref);
            if locked {
                continue;
            }
            let c = &mut self.clauses[cref as usize];
            c.removed = true;
            c.lits = Vec::new();
            removed_any = true;
        }
        if removed_any {
            let clauses = &self.clauses;
            for ws in &mut self.watches {
                ws.retain(|w| !clauses[w.cref as usize].removed);
            }
            let mut kept = Vec::with_capacity(self.learnts.len());
            for &c in &self.learnts {
                if self.clauses[c as usize].removed {
                    self.free_crefs.push(c);
                } else {
                    kept.push(c);
                }
            }
            self.learnts = kept;
        }
        self.max_learnts *= 1.1;
    }

    fn search(
        &mut self,
        conflict_quota: u64,
        assumptions: &[Lit],
        limits: &Limits,
        started: Instant,
        conflicts_at_start: u64,
    ) -> SearchResult {
        let mut conflicts_here = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts_here += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SearchResult::Unsat;
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let cref = self.alloc_clause(learnt, true);
                    self.bump_clause(cref);
                    self.enqueue(first, Some(cref));
                }
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLAUSE_DECAY;

                if let Some(max) = limits.max_conflicts {
                    if self.stats.conflicts - conflicts_at_start >= max {
                        return SearchResult::Interrupted(Interrupt::Conflicts);
                    }
                }
                if conflicts_here % 64 == 0 && self.out_of_time(limits, started) {
                    return SearchResult::Interrupted(Interrupt::Time);
                }
            } else {
                if conflicts_here >= conflict_quota {
                    self.cancel_until(0);
                    return SearchResult::Restart;
                }
                if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                }
                let mut next = None;
                while self.decision_level() < assumptions.len() {
                    let p = assumptions[self.decision_level()];
                    match self.value(p) {
                        Some(true) => self.trail_lim.push(self.trail.len()),
                        Some(false) => {
                            self.failed = self.analyze_final(p);
                            return SearchResult::Unsat;
                        }
                        None => {
                            next = Some(p);
                            break;
                        }
                    }
                }
                let next = match next {
                    Some(l) => l,
                    None => {
                        self.stats.decisions += 1;
                        if self.stats.decisions % 4096 == 0 && self.out_of_time(limits, started) {
                            return SearchResult::Interrupted(Interrupt::Time);
                        }
                        match self.pick_branch() {
                            Some(l) => l,
                            None => return SearchResult::Sat,
                        }
                    }
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, None);
            }
        }
    }

    fn out_of_time(&self, limits: &Limits, started: Instant) -> bool {
        let now = Instant::now();
        limits
            .max_time
            .is_some_and(|t| now.duration_since(started) >= t)
            || limits.deadline.is_some_and(|d| now >= d)
    }

    /// Solves under `assumptions`. `Ok(true)` means satisfiable (see
    /// [`Solver::model_value`]); `Ok(false)` means unsatisfiable under the
    /// assumptions (see [`Solver::failed_assumptions`]).
    pub fn solve(&mut self, assumptions: &[Lit], limits: &Limits) -> Result<bool, Interrupt> {
        self.model.clear();
        self.failed.clear();
        self.stats.solves += 1;
        for &a in assumptions {
            self.ensure_var(a.var());
        }
        if !self.ok {
            return Ok(false);
        }
        let started = Instant::now();
        if self.out_of_time(limits, started) {
            return Err(Interrupt::Time);
        }
        let conflicts_at_start = self.stats.conflicts;
        let mut restart = 0u32;
        loop {
            let quota = luby(restart) * RESTART_BASE;
            restart += 1;
            match self.search(quota, assumptions, limits, started, conflicts_at_start) {
                SearchResult::Restart => continue,
                SearchResult::Sat => {
                    self.model = self.assigns.iter().map(|a| a.unwrap_or(false)).collect();
                    self.cancel_until(0);
                    return Ok(true);
                }
                SearchResult::Unsat => {
                    self.cancel_until(0);
                    return Ok(false);
                }
                SearchResult::Interrupted(why) => {
                    self.cancel_until(0);
                    return Err(why);
                }
            }
        }
    }

    /// Value of `v` in the last model. Variables created after the last
    /// satisfiable call read as `false`.
    pub fn model_value(&self, v: Var) -> bool {
        self.model.get(v.index()).copied().unwrap_or(false)
    }

    /// After an unsatisfiable call: a subset of the assumptions that is
    /// already unsatisfiable with the clauses. Empty when the clauses alone
    /// are unsatisfiable.
    pub fn failed_assumptions(&self) -> &[Lit] {
        &self.failed
    }

    /// Whether the permanent clauses are still possibly satisfiable.
    pub fn is_ok(&self) -> bool {
        self.ok
    }
}

fn luby(mut x: u32) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < u64::from(x) + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut size = size;
    while size - 1 != u64::from(x) {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size as u32;
    }
    1u64 << seq
}

/// Binary max-heap of variables ordered by activity (ties: lower index first).
#[derive(Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn better(a: u32, b: u32, act: &[f64]) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn contains(&self, v: u32) -> bool {
        self.pos.get(v as usize).is_some_and(|p| p.is_some())
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.pos.len() <= v as usize {
            self.pos.resize(v as usize + 1, None);
        }
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        self.pos[v as usize] = Some(self.heap.len() - 1);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn increased(&mut self, v: u32, act: &[f64]) {
        if let Some(Some(i)) = self.pos.get(v as usize) {
            self.sift_up(*i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap.swap_remove(0);
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.pos[self.heap[0] as usize] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if !Self::better(v, self.heap[parent], act) {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i] as usize] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let left = 2 * i + 1;
            if left >= self.heap.len() {
                break;
            }
            let right = left + 1;
            let child = if right < self.heap.len() && Self::better(self.heap[right], self.heap[left], act)
            {
                right
            } else {
                left
            };
            if !Self::better(self.heap[child], v, act) {
                break;
            }
            self.heap[i] = self.heap[child];
            self.pos[self.heap[i] as usize] = Some(i);
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }
}
