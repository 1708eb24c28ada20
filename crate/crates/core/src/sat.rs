//! Small incremental CDCL SAT solver backing the guarantee analysis.
//!
//! Deliberately minimal and fully deterministic: two watched literals,
//! first-UIP learning with backjumping, fixed decision order (lowest
//! unassigned variable, false before true), no restarts, no clause
//! deletion, no activity heuristics. The formulas produced by constraint
//! collection are tiny by SAT standards, and reproducible behaviour is
//! worth more here than throughput. Learned clauses persist across calls,
//! so repeated solves under different assumptions get cheaper over time.

use std::fmt;
use std::ops::Not;

pub type Var = u32;

/// Literal encoded as `var << 1 | sign`, sign bit set for negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn positive(var: Var) -> Lit {
        Lit(var << 1)
    }

    pub fn negative(var: Var) -> Lit {
        Lit(var << 1 | 1)
    }

    pub fn with_sign(var: Var, value: bool) -> Lit {
        if value {
            Lit::positive(var)
        } else {
            Lit::negative(var)
        }
    }

    pub fn var(self) -> Var {
        self.0 >> 1
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", if self.is_positive() { "" } else { "~" }, self.var())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Sat,
    Unsat,
}

fn lit_val(values: &[Option<bool>], lit: Lit) -> Option<bool> {
    values[lit.var() as usize].map(|v| v == lit.is_positive())
}

#[derive(Debug, Default)]
pub struct Solver {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<u32>>,
    values: Vec<Option<bool>>,
    level_of: Vec<u32>,
    reason: Vec<Option<u32>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    next_search: Var,
    seen: Vec<bool>,
    model: Vec<bool>,
    unsat: bool,
}

impl Solver {
    pub fn new() -> Self {
        Solver::default()
    }

    pub fn new_var(&mut self) -> Var {
        let var = self.values.len() as Var;
        self.values.push(None);
        self.level_of.push(0);
        self.reason.push(None);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.seen.push(false);
        var
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn new_level(&mut self) {
        self.trail_lim.push(self.trail.len());
    }

    fn enqueue(&mut self, lit: Lit, reason: Option<u32>) {
        debug_assert!(lit_val(&self.values, lit).is_none());
        let var = lit.var() as usize;
        self.values[var] = Some(lit.is_positive());
        self.level_of[var] = self.decision_level();
        self.reason[var] = reason;
        self.trail.push(lit);
    }

    fn backtrack_to(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let keep = self.trail_lim[level as usize];
        for lit in self.trail.drain(keep..) {
            self.values[lit.var() as usize] = None;
            self.reason[lit.var() as usize] = None;
        }
        self.trail_lim.truncate(level as usize);
        self.qhead = self.trail.len();
        self.next_search = 0;
    }

    /// Add a clause. Must be called at decision level zero, which holds
    /// between `solve` calls. Tautologies are dropped, duplicate and
    /// already-false literals removed; an empty result marks the solver
    /// permanently unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) {
        debug_assert_eq!(self.decision_level(), 0);
        if self.unsat {
            return;
        }
        let mut clause: Vec<Lit> = lits.to_vec();
        clause.sort();
        clause.dedup();
        if clause.windows(2).any(|w| w[0].var() == w[1].var()) {
            return;
        }
        if clause.iter().any(|&l| lit_val(&self.values, l) == Some(true)) {
            return;
        }
        clause.retain(|&l| lit_val(&self.values, l).is_none());
        match clause.len() {
            0 => self.unsat = true,
            1 => {
                self.enqueue(clause[0], None);
                if self.propagate().is_some() {
                    self.unsat = true;
                }
            }
            _ => {
                self.attach(clause);
            }
        }
    }

    fn attach(&mut self, clause: Vec<Lit>) -> u32 {
        let cidx = self.clauses.len() as u32;
        self.watches[clause[0].index()].push(cidx);
        self.watches[clause[1].index()].push(cidx);
        self.clauses.push(clause);
        cidx
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let propagated = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !propagated;
            let mut ws = std::mem::take(&mut self.watches[false_lit.index()]);
            let mut i = 0;
            let mut conflict = None;
            while i < ws.len() {
                let cidx = ws[i];
                let clause = &mut self.clauses[cidx as usize];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                debug_assert_eq!(clause[1], false_lit);
                let first = clause[0];
                if lit_val(&self.values, first) == Some(true) {
                    i += 1;
                    continue;
                }
                if let Some(k) = (2..clause.len())
                    .find(|&k| lit_val(&self.values, clause[k]) != Some(false))
                {
                    clause.swap(1, k);
                    let moved = clause[1];
                    ws.swap_remove(i);
                    self.watches[moved.index()].push(cidx);
                    continue;
                }
                if lit_val(&self.values, first) == Some(false) {
                    conflict = Some(cidx);
                    break;
                }
                self.enqueue(first, Some(cidx));
                i += 1;
            }
            self.watches[false_lit.index()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    /// First-UIP conflict analysis. Returns the learned clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, conflict: u32) -> (Vec<Lit>, u32) {
        let current = self.decision_level();
        let mut learned: Vec<Lit> = vec![Lit::positive(0)];
        let mut marked: Vec<Var> = Vec::new();
        let mut pending = 0usize;
        let mut confl = conflict;
        let mut skip_head = false;
        let mut idx = self.trail.len();

        loop {
            let clause = &self.clauses[confl as usize];
            for &q in clause.iter().skip(if skip_head { 1 } else { 0 }) {
                let v = q.var() as usize;
                if !self.seen[v] && self.level_of[v] > 0 {
                    self.seen[v] = true;
                    marked.push(q.var());
                    if self.level_of[v] == current {
                        pending += 1;
                    } else {
                        learned.push(q);
                    }
                }
            }
            let lit = loop {
                idx -= 1;
                let lit = self.trail[idx];
                if self.seen[lit.var() as usize] {
                    break lit;
                }
            };
            self.seen[lit.var() as usize] = false;
            pending -= 1;
            if pending == 0 {
                learned[0] = !lit;
                break;
            }
            confl = self.reason[lit.var() as usize].expect("propagated literal has a reason");
            skip_head = true;
        }

        for v in marked {
            self.seen[v as usize] = false;
        }

        let backjump = if learned.len() == 1 {
            0
        } else {
            let max_pos = (1..learned.len())
                .max_by_key(|&i| self.level_of[learned[i].var() as usize])
                .expect("non-unit clause");
            learned.swap(1, max_pos);
            self.level_of[learned[1].var() as usize]
        };
        (learned, backjump)
    }

    fn pick_branch_var(&mut self) -> Option<Var> {
        while (self.next_search as usize) < self.values.len() {
            if self.values[self.next_search as usize].is_none() {
                return Some(self.next_search);
            }
            self.next_search += 1;
        }
        None
    }

    /// Solve under the given assumptions. The assumptions are placed as
    /// pseudo-decisions in order; `Unsat` means the clause set together
    /// with the assumptions has no model. Solver state stays reusable
    /// either way.
    pub fn solve(&mut self, assumptions: &[Lit]) -> Verdict {
        if self.unsat {
            return Verdict::Unsat;
        }
        debug_assert_eq!(self.decision_level(), 0);
        loop {
            if let Some(conflict) = self.propagate() {
                if self.decision_level() == 0 {
                    self.unsat = true;
                    return Verdict::Unsat;
                }
                let (learned, backjump) = self.analyze(conflict);
                self.backtrack_to(backjump);
                if learned.len() == 1 {
                    self.enqueue(learned[0], None);
                } else {
                    let asserting = learned[0];
                    let cidx = self.attach(learned);
                    self.enqueue(asserting, Some(cidx));
                }
                continue;
            }
            let level = self.decision_level() as usize;
            if level < assumptions.len() {
                let assumption = assumptions[level];
                match lit_val(&self.values, assumption) {
                    Some(false) => {
                        self.backtrack_to(0);
                        return Verdict::Unsat;
                    }
                    Some(true) => self.new_level(),
                    None => {
                        self.new_level();
                        self.enqueue(assumption, None);
                    }
                }
            } else if let Some(var) = self.pick_branch_var() {
                self.new_level();
                self.enqueue(Lit::negative(var), None);
            } else {
                self.model = self.values.iter().map(|v| v.expect("complete model")).collect();
                self.backtrack_to(0);
                return Verdict::Sat;
            }
        }
    }

    /// Value of a variable in the most recent satisfying model.
    pub fn model_var(&self, var: Var) -> bool {
        self.model[var as usize]
    }

    /// Value of a literal in the most recent satisfying model.
    pub fn model_lit(&self, lit: Lit) -> bool {
        self.model_var(lit.var()) == lit.is_positive()
    }
}
