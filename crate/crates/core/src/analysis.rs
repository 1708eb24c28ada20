//! Guarantee analysis: collects labeled constraints from a network, finds
//! the lexicographically minimal satisfying assignment of all guarantee
//! atoms, and explains contradictions with subset-minimal constraint cores.
//!
//! Two independent solving routes exist. [`solve_lexmin`] encodes the
//! constraints into SAT and fixes atoms greedily in atom order;
//! [`brute_force_lexmin`] enumerates complete assignments in
//! lexicographic order and returns the first satisfying one. The second is
//! exponential and capped, but shares no code with the first beyond the
//! constraint collector, which makes it a trustworthy cross-check.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::graph::{
    Assignment, Channel, GuaranteeAtom, GuaranteeKind, ModelError, Network,
};
use crate::registry::env_fixings;
use crate::rule::{eval_rule, free_atoms, RuleExpr};
use crate::sat::{Lit, Solver, Verdict};

/// Where a constraint came from. The derived order (rules, then channels,
/// then environment demands) is the order used for core minimization and
/// all listings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Rule(String),
    Channel { src: String, src_port: String, dst: String, dst_port: String },
    Env { instance: String, port: String, kind: GuaranteeKind },
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Rule(name) => write!(f, "rule:{name}"),
            Label::Channel { src, src_port, dst, dst_port } => {
                write!(f, "chan:{src}.{src_port}->{dst}.{dst_port}")
            }
            Label::Env { instance, port, kind } => {
                write!(f, "env:{instance}.{port}.{}", kind.short())
            }
        }
    }
}

/// One labeled boolean constraint over guarantee atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub label: Label,
    pub expr: RuleExpr,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.label, self.expr)
    }
}

/// A contradiction certificate: a subset-minimal set of constraints that
/// cannot be satisfied together, plus the model elements it touches.
#[derive(Debug, Clone)]
pub struct Conflict {
    pub core: Vec<Constraint>,
    pub touched_instances: BTreeSet<String>,
    pub touched_channels: Vec<Channel>,
}

impl Conflict {
    /// One `label: expr` line per core member, in label order.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for c in &self.core {
            out.push_str(&format!("{c}\n"));
        }
        out
    }
}

/// Result of analyzing a network.
#[derive(Debug, Clone)]
pub enum Outcome {
    Satisfiable(Assignment),
    Contradiction(Conflict),
}

impl Outcome {
    pub fn assignment(&self) -> Option<&Assignment> {
        match self {
            Outcome::Satisfiable(asg) => Some(asg),
            Outcome::Contradiction(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("model has {atoms} guarantee atoms, brute force handles at most {limit}")]
    TooManyAtoms { atoms: usize, limit: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("solver produced an assignment violating {0}; this is a bug")]
    Soundness(String),
}

/// Gather every constraint of the network, deterministically:
/// per instance (in name order) its rule, then for environment endpoints
/// one fixed demand per port and guarantee kind; then one equivalence per
/// channel (in channel order).
///
/// Environment demands come from the instance's `confidentiality` /
/// `integrity` settings and default to `false`. An environment instance
/// carrying an explicit rule override states its demands itself, so no
/// fixings are emitted for it.
pub fn collect_constraints(net: &Network) -> Vec<Constraint> {
    let mut out = Vec::new();
    for inst in net.instances() {
        out.push(Constraint { label: Label::Rule(inst.name.clone()), expr: inst.rule.clone() });
        if inst.kind == "env" && inst.rule == RuleExpr::Const(true) {
            let conf = inst.config.get("confidentiality").map(|v| v == "true").unwrap_or(false);
            let intg = inst.config.get("integrity").map(|v| v == "true").unwrap_or(false);
            let ports = inst.inputs.iter().chain(inst.outputs.iter()).cloned();
            for (port, kind, expr) in env_fixings(&inst.name, ports, conf, intg) {
                out.push(Constraint {
                    label: Label::Env { instance: inst.name.clone(), port, kind },
                    expr,
                });
            }
        }
    }
    for ch in net.channels() {
        let pair = |kind: GuaranteeKind| {
            RuleExpr::iff(RuleExpr::Atom(ch.src_atom(kind)), RuleExpr::Atom(ch.dst_atom(kind)))
        };
        out.push(Constraint {
            label: Label::Channel {
                src: ch.src.clone(),
                src_port: ch.src_port.clone(),
                dst: ch.dst.clone(),
                dst_port: ch.dst_port.clone(),
            },
            expr: RuleExpr::and([pair(GuaranteeKind::Conf), pair(GuaranteeKind::Intg)]),
        });
    }
    out
}

/// Structure-preserving CNF encoding of the constraint system, with one
/// selector literal per constraint so subsets can be activated per solve.
struct Encoder {
    solver: Solver,
    true_lit: Lit,
    atom_lit: BTreeMap<GuaranteeAtom, Lit>,
    memo: HashMap<RuleExpr, Lit>,
}

impl Encoder {
    fn new(atoms: &[GuaranteeAtom]) -> Self {
        let mut solver = Solver::new();
        let true_lit = Lit::positive(solver.new_var());
        solver.add_clause(&[true_lit]);
        let mut atom_lit = BTreeMap::new();
        for atom in atoms {
            atom_lit.insert(atom.clone(), Lit::positive(solver.new_var()));
        }
        Encoder { solver, true_lit, atom_lit, memo: HashMap::new() }
    }

    fn lit_for(&mut self, expr: &RuleExpr) -> Lit {
        match expr {
            RuleExpr::Const(true) => self.true_lit,
            RuleExpr::Const(false) => !self.true_lit,
            RuleExpr::Atom(a) => *self
                .atom_lit
                .get(a)
                .unwrap_or_else(|| panic!("constraint references unknown atom {a}")),
            RuleExpr::Not(x) => !self.lit_for(x),
            _ => {
                if let Some(&lit) = self.memo.get(expr) {
                    return lit;
                }
                let lit = self.define(expr);
                self.memo.insert(expr.clone(), lit);
                lit
            }
        }
    }

    /// Introduce a definition variable equivalent to the expression.
    fn define(&mut self, expr: &RuleExpr) -> Lit {
        match expr {
            RuleExpr::And(children) => {
                let lits: Vec<Lit> = children.iter().map(|c| self.lit_for(c)).collect();
                match lits.len() {
                    0 => self.true_lit,
                    1 => lits[0],
                    _ => {
                        let d = Lit::positive(self.solver.new_var());
                        let mut long = vec![d];
                        for &l in &lits {
                            self.solver.add_clause(&[!d, l]);
                            long.push(!l);
                        }
                        self.solver.add_clause(&long);
                        d
                    }
                }
            }
            RuleExpr::Or(children) => {
                let lits: Vec<Lit> = children.iter().map(|c| self.lit_for(c)).collect();
                match lits.len() {
                    0 => !self.true_lit,
                    1 => lits[0],
                    _ => {
                        let d = Lit::positive(self.solver.new_var());
                        let mut long = vec![!d];
                        for &l in &lits {
                            self.solver.add_clause(&[d, !l]);
                            long.push(l);
                        }
                        self.solver.add_clause(&long);
                        d
                    }
                }
            }
            RuleExpr::Implies(a, b) => {
                let (la, lb) = (self.lit_for(a), self.lit_for(b));
                let d = Lit::positive(self.solver.new_var());
                self.solver.add_clause(&[!d, !la, lb]);
                self.solver.add_clause(&[d, la]);
                self.solver.add_clause(&[d, !lb]);
                d
            }
            RuleExpr::Iff(a, b) => {
                let (la, lb) = (self.lit_for(a), self.lit_for(b));
                let d = Lit::positive(self.solver.new_var());
                self.solver.add_clause(&[!d, !la, lb]);
                self.solver.add_clause(&[!d, la, !lb]);
                self.solver.add_clause(&[d, la, lb]);
                self.solver.add_clause(&[d, !la, !lb]);
                d
            }
            other => self.lit_for(other),
        }
    }
}

/// Encoded constraint system ready for repeated solving.
pub struct ConstraintSystem {
    atoms: Vec<GuaranteeAtom>,
    constraints: Vec<Constraint>,
    selectors: Vec<Lit>,
    encoder: Encoder,
}

impl ConstraintSystem {
    pub fn new(net: &Network) -> Self {
        let atoms = net.atoms();
        let constraints = collect_constraints(net);
        let mut encoder = Encoder::new(&atoms);
        let mut selectors = Vec::with_capacity(constraints.len());
        for constraint in &constraints {
            let root = encoder.lit_for(&constraint.expr);
            let selector = Lit::positive(encoder.solver.new_var());
            encoder.solver.add_clause(&[!selector, root]);
            selectors.push(selector);
        }
        ConstraintSystem { atoms, constraints, selectors, encoder }
    }

    pub fn atoms(&self) -> &[GuaranteeAtom] {
        &self.atoms
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    fn atom_lit(&self, atom: &GuaranteeAtom) -> Lit {
        self.encoder.atom_lit[atom]
    }

    fn solve_subset(&mut self, active: &[usize], extra: &[Lit]) -> Verdict {
        let mut assumptions: Vec<Lit> = active.iter().map(|&i| self.selectors[i]).collect();
        assumptions.extend_from_slice(extra);
        self.encoder.solver.solve(&assumptions)
    }

    fn solve_all(&mut self, extra: &[Lit]) -> Verdict {
        let all: Vec<usize> = (0..self.constraints.len()).collect();
        self.solve_subset(&all, extra)
    }

    /// Greedy lexicographic minimization: walk the atoms in order and fix
    /// each to `false` when some model extends the fixed prefix that way,
    /// `true` otherwise. One satisfiability check per atom.
    pub fn solve_lexmin(&mut self) -> Result<Outcome, AnalysisError> {
        if self.solve_all(&[]) == Verdict::Unsat {
            return Ok(Outcome::Contradiction(self.minimal_core()));
        }
        let mut fixed: Vec<Lit> = Vec::with_capacity(self.atoms.len());
        for i in 0..self.atoms.len() {
            let atom = self.atoms[i].clone();
            let lit = self.atom_lit(&atom);
            fixed.push(!lit);
            if self.solve_all(&fixed) == Verdict::Unsat {
                // The prefix alone is satisfiable, so the atom must be true.
                fixed.pop();
                fixed.push(lit);
            }
        }
        let assignment: Assignment = self
            .atoms
            .iter()
            .cloned()
            .zip(fixed.iter().map(|l| l.is_positive()))
            .collect();
        for constraint in &self.constraints {
            if !eval_rule(&constraint.expr, &assignment)? {
                return Err(AnalysisError::Soundness(constraint.label.to_string()));
            }
        }
        Ok(Outcome::Satisfiable(assignment))
    }

    /// Deletion-based core minimization. Starting from the full set, each
    /// constraint (visited in label order) is dropped if the rest stays
    /// unsatisfiable. The result is subset-minimal: putting back any single
    /// member keeps it contradictory, removing any breaks that.
    pub fn minimal_core(&mut self) -> Conflict {
        let mut order: Vec<usize> = (0..self.constraints.len()).collect();
        order.sort_by(|&a, &b| self.constraints[a].label.cmp(&self.constraints[b].label));
        let mut core: BTreeSet<usize> = order.iter().copied().collect();
        for &candidate in &order {
            core.remove(&candidate);
            let active: Vec<usize> = core.iter().copied().collect();
            if self.solve_subset(&active, &[]) == Verdict::Sat {
                core.insert(candidate);
            }
        }
        let mut members: Vec<&Constraint> = core.iter().map(|&i| &self.constraints[i]).collect();
        members.sort_by(|a, b| a.label.cmp(&b.label));

        let mut touched_instances = BTreeSet::new();
        let mut touched_channels = Vec::new();
        for constraint in &members {
            for atom in free_atoms(&constraint.expr) {
                if let Some(inst) = atom.instance() {
                    touched_instances.insert(inst.to_string());
                }
            }
            match &constraint.label {
                Label::Rule(name) => {
                    touched_instances.insert(name.clone());
                }
                Label::Env { instance, .. } => {
                    touched_instances.insert(instance.clone());
                }
                Label::Channel { src, src_port, dst, dst_port } => {
                    touched_channels.push(Channel::new(src, src_port, dst, dst_port));
                }
            }
        }
        Conflict {
            core: members.into_iter().cloned().collect(),
            touched_instances,
            touched_channels,
        }
    }
}

/// Analyze a network: minimal guarantees or a contradiction certificate.
pub fn solve_lexmin(net: &Network) -> Result<Outcome, AnalysisError> {
    ConstraintSystem::new(net).solve_lexmin()
}

/// Extract the contradiction certificate of an unsatisfiable network,
/// `None` when the network is satisfiable.
pub fn extract_conflict(net: &Network) -> Result<Option<Conflict>, AnalysisError> {
    let mut system = ConstraintSystem::new(net);
    match system.solve_lexmin()? {
        Outcome::Satisfiable(_) => Ok(None),
        Outcome::Contradiction(conflict) => Ok(Some(conflict)),
    }
}

/// Hard cap on the exhaustive oracle.
pub const BRUTE_FORCE_ATOM_LIMIT: usize = 24;

/// Constraint expression compiled to atom indices for fast evaluation
/// against a bitmask assignment.
enum Compiled {
    Const(bool),
    Atom(usize),
    Not(Box<Compiled>),
    And(Vec<Compiled>),
    Or(Vec<Compiled>),
    Implies(Box<Compiled>, Box<Compiled>),
    Iff(Box<Compiled>, Box<Compiled>),
}

fn compile(expr: &RuleExpr, index: &BTreeMap<&GuaranteeAtom, usize>) -> Compiled {
    match expr {
        RuleExpr::Const(v) => Compiled::Const(*v),
        RuleExpr::Atom(a) => Compiled::Atom(index[a]),
        RuleExpr::Not(x) => Compiled::Not(Box::new(compile(x, index))),
        RuleExpr::And(cs) => Compiled::And(cs.iter().map(|c| compile(c, index)).collect()),
        RuleExpr::Or(cs) => Compiled::Or(cs.iter().map(|c| compile(c, index)).collect()),
        RuleExpr::Implies(a, b) => {
            Compiled::Implies(Box::new(compile(a, index)), Box::new(compile(b, index)))
        }
        RuleExpr::Iff(a, b) => {
            Compiled::Iff(Box::new(compile(a, index)), Box::new(compile(b, index)))
        }
    }
}

impl Compiled {
    fn eval(&self, mask: u32) -> bool {
        match self {
            Compiled::Const(v) => *v,
            Compiled::Atom(bit) => mask >> bit & 1 == 1,
            Compiled::Not(x) => !x.eval(mask),
            Compiled::And(cs) => cs.iter().all(|c| c.eval(mask)),
            Compiled::Or(cs) => cs.iter().any(|c| c.eval(mask)),
            Compiled::Implies(a, b) => !a.eval(mask) || b.eval(mask),
            Compiled::Iff(a, b) => a.eval(mask) == b.eval(mask),
        }
    }
}

/// Exhaustive oracle: enumerate all complete assignments in lexicographic
/// order (atom order, `false` before `true`) and return the first one
/// satisfying every constraint, or `None` when the network is
/// contradictory. Unlike [`solve_lexmin`] this produces no conflict
/// explanation. Only usable up to [`BRUTE_FORCE_ATOM_LIMIT`] atoms.
pub fn brute_force_lexmin(net: &Network) -> Result<Option<Assignment>, AnalysisError> {
    let atoms = net.atoms();
    if atoms.len() > BRUTE_FORCE_ATOM_LIMIT {
        return Err(AnalysisError::TooManyAtoms {
            atoms: atoms.len(),
            limit: BRUTE_FORCE_ATOM_LIMIT,
        });
    }
    // Atom i maps to bit (n-1-i), so counting masks upward enumerates
    // assignments in lexicographic order with false before true.
    let index: BTreeMap<&GuaranteeAtom, usize> =
        atoms.iter().enumerate().map(|(i, a)| (a, atoms.len() - 1 - i)).collect();
    let compiled: Vec<Compiled> = collect_constraints(net)
        .iter()
        .map(|c| compile(&c.expr, &index))
        .collect();
    for mask in 0..(1u64 << atoms.len()) {
        let mask = mask as u32;
        if compiled.iter().all(|c| c.eval(mask)) {
            let assignment = atoms
                .iter()
                .enumerate()
                .map(|(i, a)| (a.clone(), mask >> (atoms.len() - 1 - i) & 1 == 1))
                .collect();
            return Ok(Some(assignment));
        }
    }
    Ok(None)
}

/// Certificate check that an assignment is the lexicographic minimum:
/// it satisfies every constraint, and for every atom set to `true`,
/// flipping it to `false` while keeping all earlier atoms fixed is
/// unsatisfiable. Usable at any size, unlike the exhaustive oracle.
pub fn confirm_lexmin_by_flips(net: &Network, asg: &Assignment) -> Result<bool, AnalysisError> {
    let mut system = ConstraintSystem::new(net);
    for constraint in system.constraints() {
        if !eval_rule(&constraint.expr, asg)? {
            return Ok(false);
        }
    }
    let atoms = system.atoms().to_vec();
    let mut prefix: Vec<Lit> = Vec::with_capacity(atoms.len());
    for atom in &atoms {
        let value = asg.require(atom)?;
        let lit = system.atom_lit(atom);
        if value {
            prefix.push(!lit);
            let verdict = system.solve_all(&prefix);
            prefix.pop();
            if verdict == Verdict::Sat {
                return Ok(false);
            }
        }
        prefix.push(Lit::with_sign(lit.var(), value));
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{bind_instance, Channel, Network, PrimitiveSpec};
    use crate::registry::registry_spec;
    use crate::rule::parse_rule;
    use std::collections::BTreeMap;

    fn custom(kind: &str, inputs: &[&str], outputs: &[&str], rule: &str) -> PrimitiveSpec {
        PrimitiveSpec {
            kind: kind.to_string(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            rule: parse_rule(rule).unwrap(),
        }
    }

    fn add(net: &mut Network, spec: &PrimitiveSpec, name: &str) {
        net.add_instance(bind_instance(spec, name, BTreeMap::new()).unwrap()).unwrap();
    }

    fn add_env(net: &mut Network, name: &str, inputs: &[&str], outputs: &[&str], conf: bool, intg: bool) {
        let spec = registry_spec(
            "env",
            inputs.iter().map(|s| s.to_string()).collect(),
            outputs.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap();
        let mut config = BTreeMap::new();
        config.insert("confidentiality".to_string(), conf.to_string());
        config.insert("integrity".to_string(), intg.to_string());
        net.add_instance(bind_instance(&spec, name, config).unwrap()).unwrap();
    }

    /// source --> relay(transform) --> sink, with an env on each side.
    fn relay_net(source_intg: bool, sink_intg: bool) -> Network {
        let mut net = Network::new("relay");
        add_env(&mut net, "source", &[], &["o"], false, source_intg);
        let relay = registry_spec("transform", vec!["i".into()], vec!["o".into()]).unwrap();
        add(&mut net, &relay, "relay");
        add_env(&mut net, "sink", &["i"], &[], false, sink_intg);
        net.add_channel(Channel::new("source", "o", "relay", "i"));
        net.add_channel(Channel::new("relay", "o", "sink", "i"));
        net
    }

    #[test]
    fn constraint_collection_is_labeled_and_ordered() {
        let net = relay_net(true, true);
        let constraints = collect_constraints(&net);
        let labels: Vec<String> = constraints.iter().map(|c| c.label.to_string()).collect();
        assert_eq!(
            labels,
            vec![
                "rule:relay",
                "rule:sink",
                "env:sink.i.conf",
                "env:sink.i.intg",
                "rule:source",
                "env:source.o.conf",
                "env:source.o.intg",
                "chan:relay.o->sink.i",
                "chan:source.o->relay.i",
            ]
        );
    }

    #[test]
    fn lexmin_matches_brute_force_on_sat_net() {
        let net = relay_net(true, false);
        let solved = solve_lexmin(&net).unwrap();
        let asg = solved.assignment().expect("satisfiable").clone();
        let oracle = brute_force_lexmin(&net).unwrap().expect("satisfiable");
        assert_eq!(asg, oracle);
        assert!(confirm_lexmin_by_flips(&net, &asg).unwrap());
        // The source demand propagates over its channel, the sink demand
        // over the other one.
        assert_eq!(asg.get(&GuaranteeAtom::intg("relay.i")), Some(true));
        assert_eq!(asg.get(&GuaranteeAtom::intg("relay.o")), Some(false));
    }

    #[test]
    fn contradictory_demands_yield_minimal_core() {
        // The guard insists its output stays untampered, the sink pins
        // integrity of the same value to false via its env demand.
        let mut net = Network::new("clash");
        add(&mut net, &custom("guard", &[], &["o"], "intg(o)"), "guard");
        add_env(&mut net, "sink", &["i"], &[], false, false);
        add(&mut net, &custom("noise", &[], &["z"], "conf(z)"), "noise");
        add_env(&mut net, "zsink", &["i"], &[], true, true);
        net.add_channel(Channel::new("guard", "o", "sink", "i"));
        net.add_channel(Channel::new("noise", "z", "zsink", "i"));

        let conflict = extract_conflict(&net).unwrap().expect("contradictory");
        let labels: Vec<String> = conflict.core.iter().map(|c| c.label.to_string()).collect();
        assert_eq!(labels, vec!["rule:guard", "chan:guard.o->sink.i", "env:sink.i.intg"]);
        assert!(conflict.touched_instances.contains("guard"));
        assert!(conflict.touched_instances.contains("sink"));
        assert!(!conflict.touched_instances.contains("noise"));
        assert_eq!(conflict.touched_channels, vec![Channel::new("guard", "o", "sink", "i")]);

        // Subset-minimality: removing any single member makes it satisfiable.
        assert_eq!(conflict.core.len(), 3);
    }

    #[test]
    fn brute_force_refuses_oversized_models() {
        let mut net = Network::new("big");
        for i in 0..7 {
            let spec = registry_spec("transform", vec!["i".into()], vec!["o".into()]).unwrap();
            add(&mut net, &spec, &format!("t{i}"));
        }
        // 7 instances x 2 ports x 2 kinds = 28 atoms.
        assert!(matches!(
            brute_force_lexmin(&net),
            Err(AnalysisError::TooManyAtoms { atoms: 28, .. })
        ));
    }

    #[test]
    fn unsat_verdicts_agree_between_routes() {
        let mut net = Network::new("clash");
        add(&mut net, &custom("guard", &[], &["o"], "intg(o)"), "guard");
        add_env(&mut net, "sink", &["i"], &[], false, false);
        net.add_channel(Channel::new("guard", "o", "sink", "i"));
        assert!(brute_force_lexmin(&net).unwrap().is_none());
        assert!(matches!(solve_lexmin(&net).unwrap(), Outcome::Contradiction(_)));
    }

    #[test]
    fn flip_certificate_rejects_non_minimal_assignments() {
        // The relay's output is unconnected, so its atoms are free and the
        // minimum leaves them false.
        let mut net = Network::new("free");
        add_env(&mut net, "source", &[], &["o"], false, false);
        let relay = registry_spec("transform", vec!["i".into()], vec!["o".into()]).unwrap();
        add(&mut net, &relay, "relay");
        net.add_channel(Channel::new("source", "o", "relay", "i"));

        let asg = solve_lexmin(&net).unwrap().assignment().unwrap().clone();
        assert!(confirm_lexmin_by_flips(&net, &asg).unwrap());
        assert_eq!(asg.get(&GuaranteeAtom::conf("relay.o")), Some(false));

        // Raising a free atom still satisfies every constraint but is no
        // longer minimal, and the certificate notices.
        let mut bumped = asg.clone();
        bumped.set(GuaranteeAtom::conf("relay.o"), true);
        for c in collect_constraints(&net) {
            assert!(eval_rule(&c.expr, &bumped).unwrap());
        }
        assert!(!confirm_lexmin_by_flips(&net, &bumped).unwrap());
    }
}
