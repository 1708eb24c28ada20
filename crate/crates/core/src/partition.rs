//! Protection domains: grouping instances into processes and pricing the
//! result.
//!
//! Every instance starts in its own domain. Merge strategies shrink the
//! domain count without ever weakening protection: an instance may only
//! end up in a domain whose aggregated guarantee dominates its own.
//!
//! * `none` keeps the singletons.
//! * `basic` groups adjacent instances whose guarantees are identical.
//! * `const` additionally folds a constant into the domain of its only
//!   consumer when that domain's guarantee dominates the constant's.
//! * `branch` additionally folds constant/fan-out pairs: a constant whose
//!   only consumer is a single-input transform moves, together with that
//!   transform, into the domain all of the transform's consumers share,
//!   again only under domination.
//!
//! The channel policy lists every channel crossing domain borders with the
//! guarantees it must uphold; the metrics price each domain class by
//! estimated source lines.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::graph::{
    Assignment, Channel, DomainId, DomainSet, Guarantee, GuaranteeKind, ModelError, Network,
};
use crate::registry::{default_weight, is_registry_kind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Strategy {
    None,
    Basic,
    Const,
    Branch,
}

impl Strategy {
    pub const ALL: [Strategy; 4] =
        [Strategy::None, Strategy::Basic, Strategy::Const, Strategy::Branch];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Strategy::None => "none",
            Strategy::Basic => "basic",
            Strategy::Const => "const",
            Strategy::Branch => "branch",
        };
        f.write_str(name)
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Strategy::None),
            "basic" => Ok(Strategy::Basic),
            "const" => Ok(Strategy::Const),
            "branch" => Ok(Strategy::Branch),
            other => {
                Err(format!("unknown strategy {other:?}; expected none, basic, const or branch"))
            }
        }
    }
}

/// Optional growth bound for the const and branch folds: a move is skipped
/// when it would push the target domain's total weight above the cap.
#[derive(Debug, Clone, Copy, Default)]
pub struct MergeBound<'a> {
    pub weights: Option<(&'a Weights, u64)>,
}

/// Partition the network under the given strategy. Domain ids are
/// contiguous K1..Kn, numbered in creation order of the underlying groups.
pub fn partition(
    net: &Network,
    asg: &Assignment,
    strategy: Strategy,
) -> Result<DomainSet, ModelError> {
    partition_bounded(net, asg, strategy, MergeBound::default())
}

/// [`partition`] with an optional weight cap on the folding moves.
pub fn partition_bounded(
    net: &Network,
    asg: &Assignment,
    strategy: Strategy,
    bound: MergeBound<'_>,
) -> Result<DomainSet, ModelError> {
    if strategy == Strategy::None {
        return Ok(DomainSet::singletons(net));
    }
    let mut domains = merge_basic(net, asg)?;
    if strategy >= Strategy::Const {
        fold_consts(net, asg, &mut domains, bound)?;
        domains = domains.renumbered();
    }
    if strategy >= Strategy::Branch {
        fold_branches(net, asg, &mut domains, bound)?;
        domains = domains.renumbered();
    }
    debug_assert!(domains.covers(net));
    Ok(domains)
}

/// Group connected instances with identical guarantees. Seeds are taken in
/// instance name order; each seed absorbs reachable neighbors (predecessors
/// in input-port order, then successors in output-port order) that are
/// still unassigned and carry exactly the seed's guarantee.
fn merge_basic(net: &Network, asg: &Assignment) -> Result<DomainSet, ModelError> {
    let mut domains = DomainSet::new();
    let mut assigned: BTreeSet<String> = BTreeSet::new();
    for seed in net.instances() {
        if assigned.contains(&seed.name) {
            continue;
        }
        let seed_guarantee = net.instance_guarantee(&seed.name, asg)?;
        let mut members = vec![seed.name.clone()];
        assigned.insert(seed.name.clone());
        let mut queue: VecDeque<String> = VecDeque::from([seed.name.clone()]);
        while let Some(current) = queue.pop_front() {
            for neighbor in net.neighbors(&current) {
                if assigned.contains(neighbor) {
                    continue;
                }
                if net.instance_guarantee(neighbor, asg)? == seed_guarantee {
                    assigned.insert(neighbor.to_string());
                    members.push(neighbor.to_string());
                    queue.push_back(neighbor.to_string());
                }
            }
        }
        domains.create(members);
    }
    Ok(domains)
}

fn domain_weight(
    net: &Network,
    domains: &DomainSet,
    id: DomainId,
    weights: &Weights,
) -> Result<u64, ModelError> {
    let mut sum = 0u64;
    for member in domains.members(id)? {
        sum += weights.weight(&net.instance(member)?.kind) as u64;
    }
    Ok(sum)
}

fn move_allowed(
    net: &Network,
    domains: &DomainSet,
    target: DomainId,
    moved: &[&str],
    bound: MergeBound<'_>,
) -> Result<bool, ModelError> {
    let Some((weights, cap)) = bound.weights else { return Ok(true) };
    let mut projected = domain_weight(net, domains, target, weights)?;
    for name in moved {
        projected += weights.weight(&net.instance(name)?.kind) as u64;
    }
    Ok(projected <= cap)
}

/// The single consuming instance of `name`, if there is exactly one.
fn sole_consumer<'a>(net: &'a Network, name: &str) -> Option<&'a str> {
    let successors = net.successors(name);
    let distinct: BTreeSet<&str> = successors.iter().copied().collect();
    if distinct.len() == 1 {
        successors.first().copied()
    } else {
        None
    }
}

/// Fold each constant (in name order) into the domain of its only consumer
/// when that domain dominates the constant's guarantee. Channels force a
/// constant's port to mirror its consumer's, so the domination check cannot
/// fail here; it stays as a guard for the invariant the fold relies on.
fn fold_consts(
    net: &Network,
    asg: &Assignment,
    domains: &mut DomainSet,
    bound: MergeBound<'_>,
) -> Result<(), ModelError> {
    for inst in net.instances().filter(|i| i.kind == "const") {
        let Some(consumer) = sole_consumer(net, &inst.name) else { continue };
        let target = domains.domain_of(consumer).expect("partition covers network");
        let source = domains.domain_of(&inst.name).expect("partition covers network");
        if source == target {
            continue;
        }
        let target_guarantee = net.domain_guarantee(domains.members(target)?, asg)?;
        let const_guarantee = net.instance_guarantee(&inst.name, asg)?;
        if !target_guarantee.dominates(const_guarantee) {
            continue;
        }
        if !move_allowed(net, domains, target, &[&inst.name], bound)? {
            continue;
        }
        domains.move_instance(&inst.name, target)?;
    }
    Ok(())
}

/// Fold constant/fan-out pairs: when a constant's only consumer is a
/// single-input transform whose consumers all live in one domain, and that
/// domain dominates both guarantees, both instances move there.
fn fold_branches(
    net: &Network,
    asg: &Assignment,
    domains: &mut DomainSet,
    bound: MergeBound<'_>,
) -> Result<(), ModelError> {
    for inst in net.instances().filter(|i| i.kind == "const") {
        let Some(consumer) = sole_consumer(net, &inst.name) else { continue };
        let via = net.instance(consumer)?;
        if via.kind != "transform" || via.inputs.len() != 1 {
            continue;
        }
        let downstream = net.successors(&via.name);
        let targets: BTreeSet<DomainId> = downstream
            .iter()
            .map(|s| domains.domain_of(s).expect("partition covers network"))
            .collect();
        let Some(&target) = targets.iter().next() else { continue };
        if targets.len() != 1 {
            continue;
        }
        let target_guarantee = net.domain_guarantee(domains.members(target)?, asg)?;
        let const_guarantee = net.instance_guarantee(&inst.name, asg)?;
        let via_guarantee = net.instance_guarantee(&via.name, asg)?;
        if !target_guarantee.dominates(const_guarantee)
            || !target_guarantee.dominates(via_guarantee)
        {
            continue;
        }
        let moved: Vec<&str> = [inst.name.as_str(), via.name.as_str()]
            .into_iter()
            .filter(|name| domains.domain_of(name) != Some(target))
            .collect();
        if moved.is_empty() {
            continue;
        }
        if !move_allowed(net, domains, target, &moved, bound)? {
            continue;
        }
        let via_name = via.name.clone();
        domains.move_instance(&via_name, target)?;
        domains.move_instance(&inst.name, target)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Channel policy

/// One channel crossing a domain border, with the guarantees the carrier
/// between those domains must uphold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyEntry {
    pub channel: Channel,
    pub src_domain: DomainId,
    pub dst_domain: DomainId,
    pub required: Guarantee,
}

impl fmt::Display for PolicyEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "POLICY {} [K{} -> K{}] conf={} intg={}",
            self.channel, self.src_domain, self.dst_domain, self.required.conf, self.required.intg,
        )
    }
}

/// All cross-domain channels in channel order.
pub fn channel_policy(
    net: &Network,
    asg: &Assignment,
    domains: &DomainSet,
) -> Result<Vec<PolicyEntry>, ModelError> {
    let mut entries = Vec::new();
    for channel in net.channels() {
        let src_domain = domains
            .domain_of(&channel.src)
            .ok_or_else(|| ModelError::UnassignedInstance(channel.src.clone()))?;
        let dst_domain = domains
            .domain_of(&channel.dst)
            .ok_or_else(|| ModelError::UnassignedInstance(channel.dst.clone()))?;
        if src_domain == dst_domain {
            continue;
        }
        let required = Guarantee::new(
            asg.require(&channel.src_atom(GuaranteeKind::Conf))?,
            asg.require(&channel.src_atom(GuaranteeKind::Intg))?,
        );
        entries.push(PolicyEntry { channel: channel.clone(), src_domain, dst_domain, required });
    }
    Ok(entries)
}

// ---------------------------------------------------------------------------
// Weights and metrics

/// Per-kind source line estimates. Registry kinds start at their defaults;
/// a weights file may override them and add estimates for custom kinds.
/// Kinds nobody sized fall back to the registry's unknown-kind weight.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Weights {
    overrides: BTreeMap<String, u32>,
}

impl Weights {
    pub fn weight(&self, kind: &str) -> u32 {
        self.overrides.get(kind).copied().unwrap_or_else(|| default_weight(kind))
    }

    pub fn set(&mut self, kind: impl Into<String>, weight: u32) {
        self.overrides.insert(kind.into(), weight);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WeightsError {
    #[error("weights line {line}: expected \"kind = lines\", got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("weights line {line}: weight for {kind:?} must be a non-negative integer")]
    BadValue { line: usize, kind: String },
}

/// Parse a weights file: one `kind = lines` entry per line, `#` comments.
/// Returns the weights plus a warning per kind the registry does not know;
/// such entries still apply, they are merely worth flagging.
pub fn parse_weights(text: &str) -> Result<(Weights, Vec<String>), WeightsError> {
    let mut weights = Weights::default();
    let mut warnings = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split_once('#').map(|(head, _)| head).unwrap_or(raw).trim();
        if content.is_empty() {
            continue;
        }
        let Some((kind, value)) = content.split_once('=') else {
            return Err(WeightsError::Syntax { line, text: content.to_string() });
        };
        let kind = kind.trim();
        let value = value.trim();
        if kind.is_empty() || value.is_empty() {
            return Err(WeightsError::Syntax { line, text: content.to_string() });
        }
        let parsed: i64 =
            value.parse().map_err(|_| WeightsError::BadValue { line, kind: kind.to_string() })?;
        if parsed < 0 || parsed > u32::MAX as i64 {
            return Err(WeightsError::BadValue { line, kind: kind.to_string() });
        }
        if !is_registry_kind(kind) {
            warnings.push(format!("weights line {line}: kind {kind:?} is not in the registry"));
        }
        weights.set(kind, parsed as u32);
    }
    Ok((weights, warnings))
}

/// Trusted computing base classes, by the protection a domain must provide.
/// A domain that holds confidential data belongs to the strongest class
/// whether or not it also needs integrity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcbClass {
    None,
    Intg,
    ConfIntg,
}

pub fn tcb_class(guarantee: Guarantee) -> TcbClass {
    match (guarantee.conf, guarantee.intg) {
        (false, false) => TcbClass::None,
        (false, true) => TcbClass::Intg,
        (true, _) => TcbClass::ConfIntg,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Metrics {
    pub process_count: usize,
    pub ipc_channels: usize,
    pub tcb_none: u64,
    pub tcb_intg: u64,
    pub tcb_conf_intg: u64,
}

impl Metrics {
    pub fn tcb_total(&self) -> u64 {
        self.tcb_none + self.tcb_intg + self.tcb_conf_intg
    }

    /// Stable `key=value` lines for scripting.
    pub fn kv_lines(&self) -> String {
        format!(
            "process_count={}\nipc_channels={}\ntcb_none={}\ntcb_intg={}\ntcb_conf_intg={}\n",
            self.process_count, self.ipc_channels, self.tcb_none, self.tcb_intg, self.tcb_conf_intg,
        )
    }
}

/// Price a partitioned network.
pub fn compute_metrics(
    net: &Network,
    asg: &Assignment,
    domains: &DomainSet,
    weights: &Weights,
) -> Result<Metrics, ModelError> {
    let mut metrics = Metrics {
        process_count: domains.len(),
        ipc_channels: channel_policy(net, asg, domains)?.len(),
        ..Metrics::default()
    };
    for (id, members) in domains.iter() {
        let guarantee = net.domain_guarantee(members, asg)?;
        let weight = domain_weight(net, domains, id, weights)?;
        match tcb_class(guarantee) {
            TcbClass::None => metrics.tcb_none += weight,
            TcbClass::Intg => metrics.tcb_intg += weight,
            TcbClass::ConfIntg => metrics.tcb_conf_intg += weight,
        }
    }
    Ok(metrics)
}

/// The single-process baseline: everything sits in one domain that must
/// provide the strongest protection.
pub fn monolithic_metrics(net: &Network, weights: &Weights) -> Metrics {
    let total: u64 = net.instances().map(|i| weights.weight(&i.kind) as u64).sum();
    Metrics { process_count: 1, ipc_channels: 0, tcb_conf_intg: total, ..Metrics::default() }
}

fn reduction(split: u64, mono: u64) -> String {
    if mono == 0 {
        return "-".to_string();
    }
    let pct = (1.0 - split as f64 / mono as f64) * 100.0;
    format!("{:.1}%", (pct * 10.0).round() / 10.0)
}

/// Render the TCB comparison table: one row per class plus the total, with
/// the relative reduction against the monolithic baseline.
pub fn metrics_table(split: &Metrics, mono: &Metrics) -> String {
    let rows = [
        ("none", split.tcb_none, mono.tcb_none),
        ("intg", split.tcb_intg, mono.tcb_intg),
        ("conf_intg", split.tcb_conf_intg, mono.tcb_conf_intg),
        ("total", split.tcb_total(), mono.tcb_total()),
    ];
    let mut out = format!(
        "{:<12} {:>12} {:>12} {:>10}\n",
        "tcb class", "partitioned", "monolithic", "reduction"
    );
    for (label, s, m) in rows {
        out.push_str(&format!("{label:<12} {s:>12} {m:>12} {:>10}\n", reduction(s, m)));
    }
    out
}
