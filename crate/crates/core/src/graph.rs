//! Dataflow network model: primitives, instances, channels and protection
//! domains, plus the guarantee vocabulary shared by the whole crate.
//!
//! A network is a set of named primitive instances wired by directed
//! channels. Every port of every instance carries two boolean guarantee
//! atoms (confidentiality and integrity); analysis assigns values to those
//! atoms and partitioning groups instances into protection domains.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::rule::{free_atoms, instantiate_rule, RuleExpr};

/// The two guarantee dimensions tracked per port.
///
/// Ordering is significant: `Conf` sorts before `Intg`, which fixes the
/// global atom order used by the solver and all reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GuaranteeKind {
    Conf,
    Intg,
}

impl GuaranteeKind {
    pub fn short(self) -> &'static str {
        match self {
            GuaranteeKind::Conf => "conf",
            GuaranteeKind::Intg => "intg",
        }
    }
}

/// A single boolean variable: one guarantee kind of one port.
///
/// `port` is either a local port name (inside a rule template) or a global
/// `<instance>.<port>` name once the rule has been bound. Because neither
/// instance nor port names may contain `.`, the global form is bijective.
///
/// The derived ordering is `(port, kind)`; for global names that is
/// `(instance, port, kind)` with `conf` before `intg`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GuaranteeAtom {
    pub port: String,
    pub kind: GuaranteeKind,
}

impl GuaranteeAtom {
    pub fn conf(port: impl Into<String>) -> Self {
        GuaranteeAtom { port: port.into(), kind: GuaranteeKind::Conf }
    }

    pub fn intg(port: impl Into<String>) -> Self {
        GuaranteeAtom { port: port.into(), kind: GuaranteeKind::Intg }
    }

    pub fn global(instance: &str, port: &str, kind: GuaranteeKind) -> Self {
        GuaranteeAtom { port: format!("{instance}.{port}"), kind }
    }

    /// Instance component of a global atom, `None` for local atoms.
    pub fn instance(&self) -> Option<&str> {
        self.port.split_once('.').map(|(inst, _)| inst)
    }
}

impl fmt::Display for GuaranteeAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind.short(), self.port)
    }
}

/// Guarantee pair aggregated over one or more atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, PartialOrd, Ord, Hash)]
pub struct Guarantee {
    pub conf: bool,
    pub intg: bool,
}

impl Guarantee {
    pub fn new(conf: bool, intg: bool) -> Self {
        Guarantee { conf, intg }
    }

    pub fn or(self, other: Guarantee) -> Guarantee {
        Guarantee { conf: self.conf || other.conf, intg: self.intg || other.intg }
    }

    /// Pointwise `>=`: everything `other` requires, `self` provides.
    pub fn dominates(self, other: Guarantee) -> bool {
        (self.conf || !other.conf) && (self.intg || !other.intg)
    }
}

impl fmt::Display for Guarantee {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(conf={}, intg={})", self.conf, self.intg)
    }
}

/// Total map from guarantee atoms to booleans.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    values: BTreeMap<GuaranteeAtom, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn set(&mut self, atom: GuaranteeAtom, value: bool) {
        self.values.insert(atom, value);
    }

    pub fn get(&self, atom: &GuaranteeAtom) -> Option<bool> {
        self.values.get(atom).copied()
    }

    pub fn require(&self, atom: &GuaranteeAtom) -> Result<bool, ModelError> {
        self.get(atom).ok_or_else(|| ModelError::MissingAtom(atom.to_string()))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GuaranteeAtom, bool)> {
        self.values.iter().map(|(a, v)| (a, *v))
    }

    /// One `conf(<instance>.<port>) = true|false` line per atom, in atom
    /// order, with a trailing newline.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (atom, value) in self.iter() {
            out.push_str(&format!("{atom} = {value}\n"));
        }
        out
    }
}

impl FromIterator<(GuaranteeAtom, bool)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (GuaranteeAtom, bool)>>(iter: T) -> Self {
        Assignment { values: iter.into_iter().collect() }
    }
}

/// Reusable primitive description: port signature plus a rule over local
/// port names.
#[derive(Debug, Clone)]
pub struct PrimitiveSpec {
    pub kind: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub rule: RuleExpr,
}

/// A primitive bound into a network under a unique name. The rule is the
/// spec rule rewritten over global `<name>.<port>` atoms. `config` carries
/// opaque key/value settings (transform op, const value, env bindings).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub kind: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub rule: RuleExpr,
    pub config: BTreeMap<String, String>,
}

impl Instance {
    pub fn has_input(&self, port: &str) -> bool {
        self.inputs.iter().any(|p| p == port)
    }

    pub fn has_output(&self, port: &str) -> bool {
        self.outputs.iter().any(|p| p == port)
    }

    pub fn ports(&self) -> impl Iterator<Item = &String> {
        self.inputs.iter().chain(self.outputs.iter())
    }

    /// All guarantee atoms of this instance, sorted.
    pub fn atoms(&self) -> Vec<GuaranteeAtom> {
        let mut atoms: Vec<GuaranteeAtom> = self
            .ports()
            .flat_map(|p| {
                [
                    GuaranteeAtom::global(&self.name, p, GuaranteeKind::Conf),
                    GuaranteeAtom::global(&self.name, p, GuaranteeKind::Intg),
                ]
            })
            .collect();
        atoms.sort();
        atoms
    }
}

fn check_name(what: &str, name: &str) -> Result<(), ModelError> {
    if name.is_empty() {
        return Err(ModelError::BadName(format!("{what} name is empty")));
    }
    if name.contains('.') {
        return Err(ModelError::BadName(format!("{what} name {name:?} contains '.'")));
    }
    if name.chars().any(|c| c.is_control() || c == '"') {
        return Err(ModelError::BadName(format!("{what} name {name:?} contains forbidden characters")));
    }
    Ok(())
}

/// Bind a primitive spec to an instance name: validates names and the rule's
/// atom references, then rewrites the rule over global atoms.
pub fn bind_instance(
    spec: &PrimitiveSpec,
    name: &str,
    config: BTreeMap<String, String>,
) -> Result<Instance, ModelError> {
    check_name("instance", name)?;
    let mut seen = BTreeSet::new();
    for port in spec.inputs.iter().chain(spec.outputs.iter()) {
        check_name("port", port)?;
        if !seen.insert(port.clone()) {
            return Err(ModelError::DuplicatePort { instance: name.to_string(), port: port.clone() });
        }
    }
    for atom in free_atoms(&spec.rule) {
        if !seen.contains(&atom.port) {
            return Err(ModelError::RuleUndeclaredPort {
                kind: spec.kind.clone(),
                port: atom.port.clone(),
            });
        }
    }
    Ok(Instance {
        name: name.to_string(),
        kind: spec.kind.clone(),
        inputs: spec.inputs.clone(),
        outputs: spec.outputs.clone(),
        rule: instantiate_rule(&spec.rule, name),
        config,
    })
}

/// Directed channel from an output port to an input port.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Channel {
    pub src: String,
    pub src_port: String,
    pub dst: String,
    pub dst_port: String,
}

impl Channel {
    pub fn new(src: &str, src_port: &str, dst: &str, dst_port: &str) -> Self {
        Channel {
            src: src.to_string(),
            src_port: src_port.to_string(),
            dst: dst.to_string(),
            dst_port: dst_port.to_string(),
        }
    }

    pub fn src_atom(&self, kind: GuaranteeKind) -> GuaranteeAtom {
        GuaranteeAtom::global(&self.src, &self.src_port, kind)
    }

    pub fn dst_atom(&self, kind: GuaranteeKind) -> GuaranteeAtom {
        GuaranteeAtom::global(&self.dst, &self.dst_port, kind)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{} -> {}.{}", self.src, self.src_port, self.dst, self.dst_port)
    }
}

/// Structural validation outcome: hard errors plus advisory warnings, both
/// in deterministic (instance-sorted) order.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// The complete model graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Network {
    pub name: String,
    instances: BTreeMap<String, Instance>,
    channels: Vec<Channel>,
}

impl Network {
    pub fn new(name: impl Into<String>) -> Self {
        Network { name: name.into(), instances: BTreeMap::new(), channels: Vec::new() }
    }

    pub fn add_instance(&mut self, instance: Instance) -> Result<(), ModelError> {
        if self.instances.contains_key(&instance.name) {
            return Err(ModelError::DuplicateInstance(instance.name));
        }
        self.instances.insert(instance.name.clone(), instance);
        Ok(())
    }

    /// Insert a channel keeping the channel list sorted.
    pub fn add_channel(&mut self, channel: Channel) {
        let pos = self.channels.partition_point(|c| *c <= channel);
        self.channels.insert(pos, channel);
    }

    pub fn instance(&self, name: &str) -> Result<&Instance, ModelError> {
        self.instances.get(name).ok_or_else(|| ModelError::UnknownInstance(name.to_string()))
    }

    pub fn has_instance(&self, name: &str) -> bool {
        self.instances.contains_key(name)
    }

    /// Instances in name order.
    pub fn instances(&self) -> impl Iterator<Item = &Instance> {
        self.instances.values()
    }

    pub fn instance_count(&self) -> usize {
        self.instances.len()
    }

    /// Channels sorted by `(src, src_port, dst, dst_port)`.
    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// The channel delivering into `(instance, in_port)`, if any.
    pub fn channel_into(&self, instance: &str, in_port: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.dst == instance && c.dst_port == in_port)
    }

    /// The channel leaving `(instance, out_port)`, if any.
    pub fn channel_from(&self, instance: &str, out_port: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.src == instance && c.src_port == out_port)
    }

    /// Name of the instance feeding `(instance, in_port)`.
    pub fn predecessor(&self, instance: &str, in_port: &str) -> Result<Option<&str>, ModelError> {
        let inst = self.instance(instance)?;
        if !inst.has_input(in_port) {
            return Err(ModelError::UnknownPort {
                instance: instance.to_string(),
                port: in_port.to_string(),
            });
        }
        Ok(self.channel_into(instance, in_port).map(|c| c.src.as_str()))
    }

    /// Name of the instance fed by `(instance, out_port)`.
    pub fn successor(&self, instance: &str, out_port: &str) -> Result<Option<&str>, ModelError> {
        let inst = self.instance(instance)?;
        if !inst.has_output(out_port) {
            return Err(ModelError::UnknownPort {
                instance: instance.to_string(),
                port: out_port.to_string(),
            });
        }
        Ok(self.channel_from(instance, out_port).map(|c| c.dst.as_str()))
    }

    /// Distinct successor instances over all output ports, in port order.
    pub fn successors(&self, instance: &str) -> Vec<&str> {
        let Ok(inst) = self.instance(instance) else { return Vec::new() };
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for port in &inst.outputs {
            if let Some(c) = self.channel_from(instance, port) {
                if seen.insert(c.dst.as_str()) {
                    out.push(c.dst.as_str());
                }
            }
        }
        out
    }

    /// Distinct predecessor instances over all input ports, in port order.
    pub fn predecessors(&self, instance: &str) -> Vec<&str> {
        let Ok(inst) = self.instance(instance) else { return Vec::new() };
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for port in &inst.inputs {
            if let Some(c) = self.channel_into(instance, port) {
                if seen.insert(c.src.as_str()) {
                    out.push(c.src.as_str());
                }
            }
        }
        out
    }

    /// Neighbors for graph traversal: predecessors then successors, each in
    /// port order and deduplicated.
    pub fn neighbors(&self, instance: &str) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for n in self.predecessors(instance).into_iter().chain(self.successors(instance)) {
            if seen.insert(n) {
                out.push(n);
            }
        }
        out
    }

    /// All guarantee atoms of the network, sorted.
    pub fn atoms(&self) -> Vec<GuaranteeAtom> {
        let mut atoms: Vec<GuaranteeAtom> =
            self.instances().flat_map(|i| i.atoms()).collect();
        atoms.sort();
        atoms
    }

    /// OR of an instance's port atoms per guarantee kind.
    pub fn instance_guarantee(
        &self,
        instance: &str,
        asg: &Assignment,
    ) -> Result<Guarantee, ModelError> {
        let inst = self.instance(instance)?;
        let mut g = Guarantee::default();
        for atom in inst.atoms() {
            let v = asg.require(&atom)?;
            match atom.kind {
                GuaranteeKind::Conf => g.conf |= v,
                GuaranteeKind::Intg => g.intg |= v,
            }
        }
        Ok(g)
    }

    /// OR of the member instances' guarantees.
    pub fn domain_guarantee<'a>(
        &self,
        members: impl IntoIterator<Item = &'a String>,
        asg: &Assignment,
    ) -> Result<Guarantee, ModelError> {
        let mut g = Guarantee::default();
        for m in members {
            g = g.or(self.instance_guarantee(m, asg)?);
        }
        Ok(g)
    }

    /// Check structural invariants. Errors and warnings are emitted in a
    /// fixed order (instances sorted by name, channels in channel order) so
    /// reports are reproducible.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut incoming: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        let mut outgoing: BTreeMap<(&str, &str), usize> = BTreeMap::new();

        for c in &self.channels {
            if c.src == c.dst {
                report.errors.push(format!("channel {c}: endpoints must differ"));
            }
            match self.instances.get(&c.src) {
                None => report.errors.push(format!("channel {c}: unknown source instance {:?}", c.src)),
                Some(i) if !i.has_output(&c.src_port) => report
                    .errors
                    .push(format!("channel {c}: {} has no output port {:?}", c.src, c.src_port)),
                Some(_) => {
                    *outgoing.entry((c.src.as_str(), c.src_port.as_str())).or_default() += 1;
                }
            }
            match self.instances.get(&c.dst) {
                None => report.errors.push(format!("channel {c}: unknown sink instance {:?}", c.dst)),
                Some(i) if !i.has_input(&c.dst_port) => report
                    .errors
                    .push(format!("channel {c}: {} has no input port {:?}", c.dst, c.dst_port)),
                Some(_) => {
                    *incoming.entry((c.dst.as_str(), c.dst_port.as_str())).or_default() += 1;
                }
            }
        }

        for inst in self.instances.values() {
            for port in &inst.inputs {
                let n = incoming.get(&(inst.name.as_str(), port.as_str())).copied().unwrap_or(0);
                if n > 1 {
                    report.errors.push(format!(
                        "{}.{port}: {n} incoming channels (at most one allowed)",
                        inst.name
                    ));
                }
                if n == 0 && inst.kind != "env" {
                    report.errors.push(format!(
                        "{}.{port}: input port of a non-env primitive is unconnected",
                        inst.name
                    ));
                }
            }
            for port in &inst.outputs {
                let n = outgoing.get(&(inst.name.as_str(), port.as_str())).copied().unwrap_or(0);
                if n > 1 {
                    report.errors.push(format!(
                        "{}.{port}: {n} outgoing channels (at most one allowed; use a transform to fan out)",
                        inst.name
                    ));
                }
                if n == 0 {
                    report.warnings.push(format!("{}.{port}: output port is unconnected", inst.name));
                }
            }
        }
        report
    }
}

/// Identifier of a protection domain; rendered as `K<n>`.
pub type DomainId = u32;

pub fn domain_label(id: DomainId) -> String {
    format!("K{id}")
}

/// A partition of the network's instances into protection domains.
///
/// Invariant: every member name appears in exactly one domain and no domain
/// is empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainSet {
    domains: BTreeMap<DomainId, BTreeSet<String>>,
    next_id: DomainId,
}

impl DomainSet {
    pub fn new() -> Self {
        DomainSet { domains: BTreeMap::new(), next_id: 1 }
    }

    /// One singleton domain per instance, ids following instance name order.
    pub fn singletons(net: &Network) -> Self {
        let mut set = DomainSet::new();
        for inst in net.instances() {
            set.create([inst.name.clone()]);
        }
        set
    }

    /// Create a new domain with the given members and return its id.
    pub fn create(&mut self, members: impl IntoIterator<Item = String>) -> DomainId {
        let id = self.next_id;
        self.next_id += 1;
        self.domains.insert(id, members.into_iter().collect());
        id
    }

    /// Rebuild a domain set with explicit ids, e.g. from annotations.
    pub fn from_map(domains: BTreeMap<DomainId, BTreeSet<String>>) -> Self {
        let next_id = domains.keys().max().map(|id| id + 1).unwrap_or(1);
        DomainSet { domains, next_id }
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = DomainId> + '_ {
        self.domains.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (DomainId, &BTreeSet<String>)> {
        self.domains.iter().map(|(id, m)| (*id, m))
    }

    pub fn members(&self, id: DomainId) -> Result<&BTreeSet<String>, ModelError> {
        self.domains.get(&id).ok_or(ModelError::UnknownDomain(id))
    }

    pub fn domain_of(&self, instance: &str) -> Option<DomainId> {
        self.domains
            .iter()
            .find(|(_, members)| members.contains(instance))
            .map(|(id, _)| *id)
    }

    /// Move an instance into `target`, deleting its old domain if that
    /// leaves it empty. Moving an instance into its own domain is a no-op.
    pub fn move_instance(&mut self, instance: &str, target: DomainId) -> Result<(), ModelError> {
        if !self.domains.contains_key(&target) {
            return Err(ModelError::UnknownDomain(target));
        }
        let source = self
            .domain_of(instance)
            .ok_or_else(|| ModelError::UnassignedInstance(instance.to_string()))?;
        if source == target {
            return Ok(());
        }
        let empty = {
            let members = self.domains.get_mut(&source).expect("source domain exists");
            members.remove(instance);
            members.is_empty()
        };
        if empty {
            self.domains.remove(&source);
        }
        self.domains.get_mut(&target).expect("target domain exists").insert(instance.to_string());
        Ok(())
    }

    /// Relabel domains as K1..Kn preserving their current id order.
    pub fn renumbered(&self) -> DomainSet {
        let mut set = DomainSet::new();
        for members in self.domains.values() {
            set.create(members.iter().cloned());
        }
        set
    }

    /// True when the set is a partition of exactly the network's instances.
    pub fn covers(&self, net: &Network) -> bool {
        let mut seen = BTreeSet::new();
        for members in self.domains.values() {
            if members.is_empty() {
                return false;
            }
            for m in members {
                if !net.has_instance(m) || !seen.insert(m.clone()) {
                    return false;
                }
            }
        }
        seen.len() == net.instance_count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("duplicate instance {0:?}")]
    DuplicateInstance(String),
    #[error("unknown instance {0:?}")]
    UnknownInstance(String),
    #[error("{instance}.{port}: unknown port")]
    UnknownPort { instance: String, port: String },
    #[error("duplicate port {port:?} on instance {instance:?}")]
    DuplicatePort { instance: String, port: String },
    #[error("invalid name: {0}")]
    BadName(String),
    #[error("rule for kind {kind:?} references undeclared port {port:?}")]
    RuleUndeclaredPort { kind: String, port: String },
    #[error("assignment is missing atom {0}")]
    MissingAtom(String),
    #[error("instance {0:?} is not assigned to any domain")]
    UnassignedInstance(String),
    #[error("unknown domain K{0}")]
    UnknownDomain(DomainId),
    #[error("network is structurally invalid: {0}")]
    Invalid(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::RuleExpr;

    fn spec(kind: &str, inputs: &[&str], outputs: &[&str]) -> PrimitiveSpec {
        PrimitiveSpec {
            kind: kind.to_string(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            rule: RuleExpr::Const(true),
        }
    }

    fn toy_network() -> Network {
        let mut net = Network::new("toy");
        net.add_instance(bind_instance(&spec("const", &[], &["Const"]), "iv", BTreeMap::new()).unwrap())
            .unwrap();
        net.add_instance(bind_instance(&spec("enc_ctr", &["Key", "Ctr", "Plain"], &["Cipher"]), "enc", BTreeMap::new()).unwrap())
            .unwrap();
        net.add_instance(bind_instance(&spec("env", &["Msg"], &[]), "sink", BTreeMap::new()).unwrap())
            .unwrap();
        net.add_channel(Channel::new("iv", "Const", "enc", "Ctr"));
        net.add_channel(Channel::new("enc", "Cipher", "sink", "Msg"));
        net
    }

    #[test]
    fn atom_ordering_is_instance_port_kind() {
        let mut atoms = vec![
            GuaranteeAtom::global("enc", "Key", GuaranteeKind::Intg),
            GuaranteeAtom::global("enc", "Key", GuaranteeKind::Conf),
            GuaranteeAtom::global("enc", "Ctr", GuaranteeKind::Conf),
            GuaranteeAtom::global("iv", "Const", GuaranteeKind::Conf),
        ];
        atoms.sort();
        let names: Vec<String> = atoms.iter().map(|a| a.to_string()).collect();
        assert_eq!(names, vec!["conf(enc.Ctr)", "conf(enc.Key)", "intg(enc.Key)", "conf(iv.Const)"]);
    }

    #[test]
    fn bind_rejects_bad_names_and_undeclared_rule_ports() {
        assert!(matches!(
            bind_instance(&spec("t", &[], &["a"]), "has.dot", BTreeMap::new()),
            Err(ModelError::BadName(_))
        ));
        assert!(matches!(
            bind_instance(&spec("t", &["a", "a"], &[]), "x", BTreeMap::new()),
            Err(ModelError::DuplicatePort { .. })
        ));
        let mut s = spec("t", &["a"], &[]);
        s.rule = RuleExpr::Atom(GuaranteeAtom::conf("b"));
        assert!(matches!(
            bind_instance(&s, "x", BTreeMap::new()),
            Err(ModelError::RuleUndeclaredPort { .. })
        ));
    }

    #[test]
    fn instance_names_may_contain_spaces() {
        let inst = bind_instance(&spec("dhsec", &[], &["ssec"]), "Calculate sec", BTreeMap::new()).unwrap();
        assert_eq!(inst.atoms()[0].to_string(), "conf(Calculate sec.ssec)");
    }

    #[test]
    fn predecessor_successor_resolve_channels() {
        let net = toy_network();
        assert_eq!(net.predecessor("enc", "Ctr").unwrap(), Some("iv"));
        assert_eq!(net.predecessor("enc", "Key").unwrap(), None);
        assert_eq!(net.successor("enc", "Cipher").unwrap(), Some("sink"));
        assert!(matches!(net.predecessor("enc", "nope"), Err(ModelError::UnknownPort { .. })));
        assert!(matches!(net.predecessor("ghost", "x"), Err(ModelError::UnknownInstance(_))));
        assert_eq!(net.neighbors("enc"), vec!["iv", "sink"]);
    }

    #[test]
    fn validate_flags_structural_problems() {
        let mut net = toy_network();
        // Unconnected inputs of non-env primitives are errors.
        let report = net.validate();
        assert!(report.errors.iter().any(|e| e.contains("enc.Key")));
        assert!(report.errors.iter().any(|e| e.contains("enc.Plain")));

        net.add_channel(Channel::new("iv", "Const", "enc", "Ctr"));
        let report = net.validate();
        assert!(report.errors.iter().any(|e| e.contains("2 incoming")));
        assert!(report.errors.iter().any(|e| e.contains("2 outgoing")));

        let mut net = Network::new("loop");
        net.add_instance(
            bind_instance(&spec("transform", &["i"], &["o"]), "t", BTreeMap::new()).unwrap(),
        )
        .unwrap();
        net.add_channel(Channel::new("t", "o", "t", "i"));
        assert!(net.validate().errors.iter().any(|e| e.contains("endpoints must differ")));
    }

    #[test]
    fn validate_warns_on_dangling_outputs_only() {
        let mut net = Network::new("w");
        net.add_instance(bind_instance(&spec("const", &[], &["Const"]), "c", BTreeMap::new()).unwrap())
            .unwrap();
        let report = net.validate();
        assert!(report.is_ok());
        assert_eq!(report.warnings, vec!["c.Const: output port is unconnected"]);
    }

    #[test]
    fn guarantees_aggregate_by_or() {
        let net = toy_network();
        let mut asg = Assignment::new();
        for atom in net.atoms() {
            asg.set(atom, false);
        }
        asg.set(GuaranteeAtom::global("enc", "Key", GuaranteeKind::Conf), true);
        let g = net.instance_guarantee("enc", &asg).unwrap();
        assert_eq!(g, Guarantee::new(true, false));
        let members = vec!["enc".to_string(), "iv".to_string()];
        assert_eq!(net.domain_guarantee(&members, &asg).unwrap(), Guarantee::new(true, false));
        assert!(Guarantee::new(true, true).dominates(g));
        assert!(!Guarantee::new(false, true).dominates(g));
    }

    #[test]
    fn missing_atom_is_an_error() {
        let net = toy_network();
        let asg = Assignment::new();
        assert!(matches!(net.instance_guarantee("enc", &asg), Err(ModelError::MissingAtom(_))));
    }

    #[test]
    fn domain_moves_preserve_partition() {
        let net = toy_network();
        let mut set = DomainSet::singletons(&net);
        assert_eq!(set.len(), 3);
        // Instance order: enc, iv, sink -> K1, K2, K3.
        assert_eq!(set.domain_of("enc"), Some(1));
        assert_eq!(set.domain_of("iv"), Some(2));

        set.move_instance("iv", 1).unwrap();
        assert_eq!(set.len(), 2, "emptied domain is deleted");
        assert_eq!(set.domain_of("iv"), Some(1));
        assert!(set.covers(&net));

        set.move_instance("iv", 1).unwrap();
        assert_eq!(set.len(), 2, "self-move is a no-op");

        assert!(set.move_instance("ghost", 1).is_err());
        assert!(set.move_instance("iv", 99).is_err());

        let renumbered = set.renumbered();
        let ids: Vec<DomainId> = renumbered.ids().collect();
        assert_eq!(ids, vec![1, 2]);
        assert!(renumbered.covers(&net));
    }

    #[test]
    fn domain_guarantee_is_monotone_under_member_addition() {
        let net = toy_network();
        let mut asg = Assignment::new();
        for (i, atom) in net.atoms().into_iter().enumerate() {
            asg.set(atom, i % 3 == 0);
        }
        let small = vec!["enc".to_string()];
        let big = vec!["enc".to_string(), "iv".to_string(), "sink".to_string()];
        let g_small = net.domain_guarantee(&small, &asg).unwrap();
        let g_big = net.domain_guarantee(&big, &asg).unwrap();
        assert!(g_big.dominates(g_small));
    }
}
