//! XML model format: parsing and canonical serialization.
//!
//! A model document looks like
//!
//! ```xml
//! <model name="example">
//!   <const id="iv" value="7">
//!     <flow sarg="Const" sink="enc" darg="Ctr"/>
//!   </const>
//!   <env id="ks" confidentiality="true" code="print">
//!     <config mode="fixture"/>
//!     <arg name="data"/>
//!   </env>
//!   <enc_ctr id="enc">
//!     <flow sarg="Cipher" sink="out" darg="Msg">
//!       <assert confidentiality="false">ciphertext may travel openly</assert>
//!     </flow>
//!   </enc_ctr>
//!   ...
//! </model>
//! ```
//!
//! Each child element of `<model>` declares one instance; the tag is the
//! primitive kind, `id` the instance name. Input ports are `<arg>`
//! declarations in order; output ports are the distinct `sarg` names of the
//! element's `<flow>`s, sorted. Kinds with a fixed registry signature take
//! their ports from the registry instead. A `<rule>` child overrides the
//! registry rule; unknown kinds must carry one. `<config>` attributes
//! collect into the instance's settings. `<description>` elements and XML
//! comments are ignored everywhere.
//!
//! Serialization is canonical: instances sorted by name, fixed attribute
//! and child order, flows sorted, two-space indent, LF line ends. Feeding
//! the output back through the parser reproduces the document, including
//! the annotated variants (derived guarantees on flows and args, partition
//! labels, conflict marks).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use quick_xml::events::Event;
use quick_xml::Reader;

use crate::analysis::Conflict;
use crate::assertions::Assertion;
use crate::graph::{
    bind_instance, domain_label, Assignment, Channel, DomainId, DomainSet, GuaranteeAtom,
    GuaranteeKind, Instance, ModelError, Network, PrimitiveSpec,
};
use crate::registry::{fixed_spec, is_fixed_kind, variable_spec};
use crate::rule::{instantiate_rule, parse_rule, RuleExpr, RuleParseError};

/// A parsed model: the network plus the declarations that ride along with
/// it in the document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub net: Network,
    pub assertions: Vec<Assertion>,
    pub domains: Option<DomainSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("malformed XML at byte {position}: {message}")]
    Xml { position: u64, message: String },
    #[error("element <{element}> is missing attribute {attr:?}")]
    MissingAttr { element: String, attr: String },
    #[error("element <{element}> has unsupported attribute {attr:?}")]
    UnknownAttr { element: String, attr: String },
    #[error("attribute {attr:?} on <{element}>: {message}")]
    BadAttr { element: String, attr: String, message: String },
    #[error("instance {instance:?} has unknown kind {kind:?} and no rule")]
    UnknownKind { instance: String, kind: String },
    #[error("instance {instance:?} declares args that contradict the fixed {kind} signature")]
    FixedSignature { instance: String, kind: String },
    #[error("rule of instance {instance:?}: {source}")]
    Rule { instance: String, source: RuleParseError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("model is structurally invalid: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("partition annotations must cover all instances or none; missing on {0:?}")]
    PartialPartition(String),
}

// ---------------------------------------------------------------------------
// Generic XML tree

#[derive(Debug, Default)]
struct Element {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Element>,
    text: String,
}

impl Element {
    fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    fn require_attr(&self, name: &str) -> Result<&str, ParseError> {
        self.attr(name).ok_or_else(|| ParseError::MissingAttr {
            element: self.name.clone(),
            attr: name.to_string(),
        })
    }

    fn check_attrs(&self, allowed: &[&str]) -> Result<(), ParseError> {
        for (key, _) in &self.attrs {
            if !allowed.contains(&key.as_str()) {
                return Err(ParseError::UnknownAttr {
                    element: self.name.clone(),
                    attr: key.clone(),
                });
            }
        }
        Ok(())
    }

    fn bool_attr(&self, name: &str, default: bool) -> Result<bool, ParseError> {
        match self.attr(name) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(ParseError::BadAttr {
                element: self.name.clone(),
                attr: name.to_string(),
                message: format!("expected \"true\" or \"false\", got {other:?}"),
            }),
        }
    }
}

fn xml_err<T>(position: u64, message: impl ToString) -> Result<T, ParseError> {
    Err(ParseError::Xml { position, message: message.to_string() })
}

fn read_tree(xml: &str) -> Result<Element, ParseError> {
    let mut reader = Reader::from_str(xml);
    let mut stack: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;

    let make_element = |reader: &Reader<&[u8]>, e: &quick_xml::events::BytesStart| -> Result<Element, ParseError> {
        let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
        let mut attrs = Vec::new();
        for attr in e.attributes() {
            let attr = match attr {
                Ok(a) => a,
                Err(err) => return xml_err(reader.buffer_position(), err),
            };
            let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
            let value = match attr.unescape_value() {
                Ok(v) => v.into_owned(),
                Err(err) => return xml_err(reader.buffer_position(), err),
            };
            attrs.push((key, value));
        }
        Ok(Element { name, attrs, children: Vec::new(), text: String::new() })
    };

    loop {
        let position = reader.buffer_position();
        match reader.read_event() {
            Err(e) => return xml_err(position, e),
            Ok(Event::Start(e)) => {
                if root.is_some() && stack.is_empty() {
                    return xml_err(position, "content after the root element");
                }
                stack.push(make_element(&reader, &e)?);
            }
            Ok(Event::Empty(e)) => {
                if root.is_some() && stack.is_empty() {
                    return xml_err(position, "content after the root element");
                }
                let element = make_element(&reader, &e)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(element),
                    None => root = Some(element),
                }
            }
            Ok(Event::End(_)) => {
                let element = stack.pop().expect("matched by reader");
                match stack.last_mut() {
                    Some(parent) => parent.children.push(element),
                    None => root = Some(element),
                }
            }
            Ok(Event::Text(t)) => {
                let text = match t.unescape() {
                    Ok(v) => v,
                    Err(err) => return xml_err(position, err),
                };
                if let Some(parent) = stack.last_mut() {
                    parent.text.push_str(&text);
                } else if !text.trim().is_empty() {
                    return xml_err(position, "text outside the root element");
                }
            }
            Ok(Event::CData(c)) => {
                if let Some(parent) = stack.last_mut() {
                    parent.text.push_str(&String::from_utf8_lossy(&c));
                }
            }
            Ok(Event::Comment(_)) | Ok(Event::Decl(_)) | Ok(Event::PI(_)) | Ok(Event::DocType(_)) => {}
            Ok(Event::Eof) => break,
        }
    }
    match root {
        Some(r) if stack.is_empty() => Ok(r),
        _ => xml_err(reader.buffer_position(), "missing or unterminated root element"),
    }
}

// ---------------------------------------------------------------------------
// Parsing

const INSTANCE_ATTRS: &[&str] = &["id", "partition", "conflict"];
const ENV_ATTRS: &[&str] = &["confidentiality", "integrity", "code"];

struct RawFlow {
    flow: Channel,
    asserts: Vec<Assertion>,
}

/// Parse a model document.
pub fn parse_model(xml: &str) -> Result<Document, ParseError> {
    let root = read_tree(xml)?;
    if root.name != "model" {
        return Err(ParseError::Xml {
            position: 0,
            message: format!("expected <model> root, found <{}>", root.name),
        });
    }
    root.check_attrs(&["name"])?;
    let mut net = Network::new(root.attr("name").unwrap_or_default());
    let mut flows: Vec<RawFlow> = Vec::new();
    let mut partitions: Vec<(String, Option<DomainId>)> = Vec::new();

    for element in &root.children {
        if element.name == "description" {
            continue;
        }
        let (instance, raw_flows, partition) = parse_instance(element)?;
        partitions.push((instance.name.clone(), partition));
        net.add_instance(instance)?;
        flows.extend(raw_flows);
    }

    let mut assertions = Vec::new();
    for raw in flows {
        net.add_channel(raw.flow);
        assertions.extend(raw.asserts);
    }
    assertions.sort();

    let report = net.validate();
    if !report.is_ok() {
        return Err(ParseError::Invalid(report.errors));
    }

    let domains = rebuild_domains(&partitions)?;
    Ok(Document { net, assertions, domains })
}

fn parse_instance(element: &Element) -> Result<(Instance, Vec<RawFlow>, Option<DomainId>), ParseError> {
    let kind = element.name.clone();
    let name = element.require_attr("id")?.to_string();

    let mut allowed: Vec<&str> = INSTANCE_ATTRS.to_vec();
    match kind.as_str() {
        "env" => allowed.extend_from_slice(ENV_ATTRS),
        "const" => allowed.push("value"),
        _ => {}
    }
    element.check_attrs(&allowed)?;

    let mut config: BTreeMap<String, String> = BTreeMap::new();
    if kind == "env" {
        // Explicit "false" equals the default and is dropped so documents
        // have one canonical spelling.
        for attr in ["confidentiality", "integrity"] {
            if element.bool_attr(attr, false)? {
                config.insert(attr.to_string(), "true".to_string());
            }
        }
        if let Some(code) = element.attr("code") {
            config.insert("code".to_string(), code.to_string());
        }
    }
    if kind == "const" {
        config.insert("value".to_string(), element.require_attr("value")?.to_string());
    }

    let mut args: Vec<String> = Vec::new();
    let mut sargs: BTreeSet<String> = BTreeSet::new();
    let mut rule_text: Option<String> = None;
    let mut raw_flows: Vec<RawFlow> = Vec::new();

    for child in &element.children {
        match child.name.as_str() {
            "description" => {}
            "config" => {
                for (key, value) in &child.attrs {
                    config.insert(key.clone(), value.clone());
                }
            }
            "arg" => {
                child.check_attrs(&["name", "conf", "intg"])?;
                args.push(child.require_attr("name")?.to_string());
            }
            "rule" => {
                child.check_attrs(&[])?;
                rule_text = Some(child.text.trim().to_string());
            }
            "flow" => {
                child.check_attrs(&["sarg", "sink", "darg", "conf", "intg"])?;
                let sarg = child.require_attr("sarg")?.to_string();
                let sink = child.require_attr("sink")?.to_string();
                let darg = child.require_attr("darg")?.to_string();
                sargs.insert(sarg.clone());
                let flow = Channel::new(&name, &sarg, &sink, &darg);
                let mut asserts = Vec::new();
                for grand in &child.children {
                    if grand.name == "description" {
                        continue;
                    }
                    if grand.name != "assert" {
                        return Err(ParseError::Xml {
                            position: 0,
                            message: format!("unexpected <{}> inside <flow>", grand.name),
                        });
                    }
                    grand.check_attrs(&["confidentiality", "integrity"])?;
                    for (attr, guarantee) in [
                        ("confidentiality", GuaranteeKind::Conf),
                        ("integrity", GuaranteeKind::Intg),
                    ] {
                        if grand.attr(attr).is_some() {
                            asserts.push(Assertion {
                                channel: flow.clone(),
                                kind: guarantee,
                                expected: grand.bool_attr(attr, false)?,
                                message: grand.text.trim().to_string(),
                            });
                        }
                    }
                }
                raw_flows.push(RawFlow { flow, asserts });
            }
            other => {
                return Err(ParseError::Xml {
                    position: 0,
                    message: format!("unexpected <{other}> inside instance {name:?}"),
                });
            }
        }
    }
    let outputs: Vec<String> = sargs.into_iter().collect();
    let rule = match &rule_text {
        Some(text) => Some(
            parse_rule(text).map_err(|source| ParseError::Rule { instance: name.clone(), source })?,
        ),
        None => None,
    };

    let spec = build_spec(&name, &kind, args, outputs, rule)?;
    let instance = bind_instance(&spec, &name, config)?;

    let partition = match element.attr("partition") {
        Some(label) => Some(parse_domain_label(element, label)?),
        None => None,
    };
    Ok((instance, raw_flows, partition))
}

fn build_spec(
    name: &str,
    kind: &str,
    args: Vec<String>,
    outputs: Vec<String>,
    rule: Option<RuleExpr>,
) -> Result<PrimitiveSpec, ParseError> {
    if let Some(mut spec) = fixed_spec(kind) {
        if !args.is_empty() && args != spec.inputs {
            return Err(ParseError::FixedSignature {
                instance: name.to_string(),
                kind: kind.to_string(),
            });
        }
        if let Some(rule) = rule {
            spec.rule = rule;
        }
        return Ok(spec);
    }
    if let Some(mut spec) = variable_spec(kind, args.clone(), outputs.clone()) {
        if let Some(rule) = rule {
            spec.rule = rule;
        }
        return Ok(spec);
    }
    match rule {
        Some(rule) => Ok(PrimitiveSpec { kind: kind.to_string(), inputs: args, outputs, rule }),
        None => Err(ParseError::UnknownKind { instance: name.to_string(), kind: kind.to_string() }),
    }
}

fn parse_domain_label(element: &Element, label: &str) -> Result<DomainId, ParseError> {
    let bad = || ParseError::BadAttr {
        element: element.name.clone(),
        attr: "partition".to_string(),
        message: format!("expected a K<n> domain label, got {label:?}"),
    };
    let digits = label.strip_prefix('K').ok_or_else(bad)?;
    let id: DomainId = digits.parse().map_err(|_| bad())?;
    if id == 0 {
        return Err(bad());
    }
    Ok(id)
}

fn rebuild_domains(partitions: &[(String, Option<DomainId>)]) -> Result<Option<DomainSet>, ParseError> {
    let assigned = partitions.iter().filter(|(_, d)| d.is_some()).count();
    if assigned == 0 {
        return Ok(None);
    }
    if let Some((name, _)) = partitions.iter().find(|(_, d)| d.is_none()) {
        return Err(ParseError::PartialPartition(name.clone()));
    }
    let mut map: BTreeMap<DomainId, BTreeSet<String>> = BTreeMap::new();
    for (name, id) in partitions {
        map.entry(id.expect("checked above")).or_default().insert(name.clone());
    }
    Ok(Some(DomainSet::from_map(map)))
}

// ---------------------------------------------------------------------------
// Serialization

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

#[derive(Default, Clone, Copy)]
struct Annotations<'a> {
    assignment: Option<&'a Assignment>,
    domains: Option<&'a DomainSet>,
    conflicted: Option<&'a BTreeSet<String>>,
}

fn guarantee_attrs(asg: Option<&Assignment>, instance: &str, port: &str) -> String {
    let Some(asg) = asg else { return String::new() };
    let value = |kind| {
        asg.get(&GuaranteeAtom::global(instance, port, kind))
            .map(|v| v.to_string())
            .unwrap_or_else(|| "unknown".to_string())
    };
    format!(
        " conf=\"{}\" intg=\"{}\"",
        value(GuaranteeKind::Conf),
        value(GuaranteeKind::Intg)
    )
}

fn serialize(doc: &Document, notes: Annotations) -> String {
    let mut out = String::new();
    let name_attr = format!(" name=\"{}\"", escape(&doc.net.name));
    if doc.net.instance_count() == 0 {
        let _ = writeln!(out, "<model{name_attr}/>");
        return out;
    }
    let _ = writeln!(out, "<model{name_attr}>");

    // Assertions grouped per channel for lookup while walking flows.
    let mut asserts_by_channel: BTreeMap<&Channel, Vec<&Assertion>> = BTreeMap::new();
    for assertion in &doc.assertions {
        asserts_by_channel.entry(&assertion.channel).or_default().push(assertion);
    }

    for inst in doc.net.instances() {
        let mut attrs = format!(" id=\"{}\"", escape(&inst.name));
        if inst.kind == "env" {
            for key in ["confidentiality", "integrity", "code"] {
                if let Some(value) = inst.config.get(key) {
                    let _ = write!(attrs, " {key}=\"{}\"", escape(value));
                }
            }
        }
        if inst.kind == "const" {
            if let Some(value) = inst.config.get("value") {
                let _ = write!(attrs, " value=\"{}\"", escape(value));
            }
        }
        if let Some(domains) = notes.domains {
            if let Some(id) = domains.domain_of(&inst.name) {
                let _ = write!(attrs, " partition=\"{}\"", domain_label(id));
            }
        }
        if notes.conflicted.is_some_and(|set| set.contains(&inst.name)) {
            attrs.push_str(" conflict=\"true\"");
        }

        let config_attrs: Vec<(&String, &String)> = inst
            .config
            .iter()
            .filter(|(k, _)| !attr_backed_config_key(&inst.kind, k))
            .collect();
        let flows: Vec<&Channel> =
            doc.net.channels().iter().filter(|c| c.src == inst.name).collect();
        let rule_override = rule_is_override(inst);

        let empty =
            config_attrs.is_empty() && inst.inputs.is_empty() && flows.is_empty() && !rule_override;
        if empty {
            let _ = writeln!(out, "  <{}{attrs}/>", inst.kind);
            continue;
        }
        let _ = writeln!(out, "  <{}{attrs}>", inst.kind);
        if !config_attrs.is_empty() {
            let mut line = "    <config".to_string();
            for (key, value) in config_attrs {
                let _ = write!(line, " {key}=\"{}\"", escape(value));
            }
            let _ = writeln!(out, "{line}/>");
        }
        for port in &inst.inputs {
            let extra = guarantee_attrs(notes.assignment, &inst.name, port);
            let _ = writeln!(out, "    <arg name=\"{}\"{extra}/>", escape(port));
        }
        if rule_override {
            let _ = writeln!(out, "    <rule>{}</rule>", escape(&local_rule_text(inst)));
        }
        for flow in flows {
            let extra = guarantee_attrs(notes.assignment, &flow.src, &flow.src_port);
            let head = format!(
                "    <flow sarg=\"{}\" sink=\"{}\" darg=\"{}\"{extra}",
                escape(&flow.src_port),
                escape(&flow.dst),
                escape(&flow.dst_port),
            );
            match asserts_by_channel.get(flow) {
                None => {
                    let _ = writeln!(out, "{head}/>");
                }
                Some(asserts) => {
                    let _ = writeln!(out, "{head}>");
                    for assertion in asserts {
                        let attr = match assertion.kind {
                            GuaranteeKind::Conf => "confidentiality",
                            GuaranteeKind::Intg => "integrity",
                        };
                        let _ = writeln!(
                            out,
                            "      <assert {attr}=\"{}\">{}</assert>",
                            assertion.expected,
                            escape(&assertion.message),
                        );
                    }
                    let _ = writeln!(out, "    </flow>");
                }
            }
        }
        let _ = writeln!(out, "  </{}>", inst.kind);
    }
    out.push_str("</model>\n");
    out
}

fn attr_backed_config_key(kind: &str, key: &str) -> bool {
    match kind {
        "env" => matches!(key, "confidentiality" | "integrity" | "code"),
        "const" => key == "value",
        _ => false,
    }
}

/// True when the instance's rule differs from its registry template and
/// must be written out.
fn rule_is_override(inst: &Instance) -> bool {
    let template = if is_fixed_kind(&inst.kind) {
        fixed_spec(&inst.kind)
    } else {
        variable_spec(&inst.kind, inst.inputs.clone(), inst.outputs.clone())
    };
    match template {
        Some(spec) => instantiate_rule(&spec.rule, &inst.name) != inst.rule,
        None => true,
    }
}

/// The instance rule printed over local port names, for embedding.
fn local_rule_text(inst: &Instance) -> String {
    let prefix = format!("{}.", inst.name);
    strip_prefix_expr(&inst.rule, &prefix).to_string()
}

fn strip_prefix_expr(expr: &RuleExpr, prefix: &str) -> RuleExpr {
    match expr {
        RuleExpr::Const(v) => RuleExpr::Const(*v),
        RuleExpr::Atom(a) => {
            let port = a.port.strip_prefix(prefix).unwrap_or(&a.port);
            RuleExpr::Atom(GuaranteeAtom { port: port.to_string(), kind: a.kind })
        }
        RuleExpr::Not(x) => RuleExpr::not(strip_prefix_expr(x, prefix)),
        RuleExpr::And(cs) => RuleExpr::And(cs.iter().map(|c| strip_prefix_expr(c, prefix)).collect()),
        RuleExpr::Or(cs) => RuleExpr::Or(cs.iter().map(|c| strip_prefix_expr(c, prefix)).collect()),
        RuleExpr::Implies(a, b) => {
            RuleExpr::implies(strip_prefix_expr(a, prefix), strip_prefix_expr(b, prefix))
        }
        RuleExpr::Iff(a, b) => {
            RuleExpr::iff(strip_prefix_expr(a, prefix), strip_prefix_expr(b, prefix))
        }
    }
}

/// Canonical serialization without annotations.
pub fn serialize_model(doc: &Document) -> String {
    serialize(doc, Annotations { domains: doc.domains.as_ref(), ..Annotations::default() })
}

/// Serialization with derived guarantees on every flow and arg, and
/// partition labels when domains are given.
pub fn serialize_annotated(doc: &Document, asg: &Assignment, domains: Option<&DomainSet>) -> String {
    serialize(
        doc,
        Annotations {
            assignment: Some(asg),
            domains: domains.or(doc.domains.as_ref()),
            conflicted: None,
        },
    )
}

/// Serialization marking the instances touched by a contradiction with
/// `conflict="true"`. No guarantees are emitted; none exist.
pub fn annotate_conflict(doc: &Document, conflict: &Conflict) -> String {
    serialize(
        doc,
        Annotations {
            assignment: None,
            domains: doc.domains.as_ref(),
            conflicted: Some(&conflict.touched_instances),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"
<model name="toy">
  <!-- a constant feeding a cipher -->
  <keysrc id="ks">
    <rule>conf(Key) and intg(Key)</rule>
    <flow sarg="Key" sink="enc" darg="Key"/>
  </keysrc>
  <user id="us">
    <rule>conf(Text)</rule>
    <flow sarg="Text" sink="enc" darg="Plain">
      <assert confidentiality="true">text stays secret</assert>
    </flow>
  </user>
  <const id="iv" value="7">
    <flow sarg="Const" sink="enc" darg="Ctr"/>
  </const>
  <enc_ctr id="enc">
    <description>counter mode encryption</description>
    <flow sarg="Cipher" sink="out" darg="Msg"/>
  </enc_ctr>
  <env id="out" confidentiality="false" code="print">
    <arg name="Msg"/>
  </env>
</model>
"#;

    #[test]
    fn parses_instances_ports_and_channels() {
        let doc = parse_model(TOY).unwrap();
        assert_eq!(doc.net.name, "toy");
        assert_eq!(doc.net.instance_count(), 5);
        let enc = doc.net.instance("enc").unwrap();
        assert_eq!(enc.inputs, vec!["Key", "Ctr", "Plain"], "fixed signature from registry");
        assert_eq!(enc.outputs, vec!["Cipher"]);
        let ks = doc.net.instance("ks").unwrap();
        assert_eq!(ks.kind, "keysrc");
        assert_eq!(ks.outputs, vec!["Key"], "outputs inferred from flows");
        assert_eq!(doc.net.channels().len(), 4);
        assert_eq!(doc.net.predecessor("enc", "Ctr").unwrap(), Some("iv"));
        let out = doc.net.instance("out").unwrap();
        assert!(!out.config.contains_key("confidentiality"), "explicit false is dropped");
        assert_eq!(out.config.get("code").map(String::as_str), Some("print"));
    }

    #[test]
    fn parses_assertions_in_sorted_order() {
        let doc = parse_model(TOY).unwrap();
        assert_eq!(doc.assertions.len(), 1);
        let a = &doc.assertions[0];
        assert_eq!(a.channel, Channel::new("us", "Text", "enc", "Plain"));
        assert_eq!(a.kind, GuaranteeKind::Conf);
        assert!(a.expected);
        assert_eq!(a.message, "text stays secret");
    }

    #[test]
    fn unknown_kind_without_rule_is_rejected() {
        let xml = r#"<model name="m"><mystery id="x"><arg name="a"/></mystery></model>"#;
        assert!(matches!(parse_model(xml), Err(ParseError::UnknownKind { .. })));
    }

    #[test]
    fn env_inputs_may_stay_unconnected_but_others_must_not() {
        let missing = r#"<model name="m">
          <const id="c" value="1"><flow sarg="Const" sink="t" darg="a"/></const>
          <transform id="t"><arg name="a"/><arg name="b"/></transform>
        </model>"#;
        match parse_model(missing) {
            Err(ParseError::Invalid(errors)) => {
                assert!(errors.iter().any(|e| e.contains("t.b")), "{errors:?}");
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn structural_errors_are_collected() {
        let xml = r#"<model name="m">
          <const id="c" value="1">
            <flow sarg="Const" sink="e" darg="i"/>
            <flow sarg="Const" sink="e" darg="i"/>
          </const>
          <env id="e"><arg name="i"/></env>
        </model>"#;
        match parse_model(xml) {
            Err(ParseError::Invalid(errors)) => {
                assert!(errors.iter().any(|e| e.contains("incoming")), "{errors:?}");
                assert!(errors.iter().any(|e| e.contains("outgoing")), "{errors:?}");
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn fixed_kinds_reject_contradictory_args() {
        let xml = r#"<model name="m">
          <rng id="r"><arg name="seed"/></rng>
        </model>"#;
        assert!(matches!(parse_model(xml), Err(ParseError::FixedSignature { .. })));
    }

    #[test]
    fn unsupported_attributes_are_rejected() {
        let xml = r#"<model name="m"><const id="c" value="1" mood="blue"/></model>"#;
        assert!(matches!(parse_model(xml), Err(ParseError::UnknownAttr { .. })));
    }

    #[test]
    fn round_trip_is_stable() {
        let doc = parse_model(TOY).unwrap();
        let first = serialize_model(&doc);
        let reparsed = parse_model(&first).unwrap();
        assert_eq!(reparsed, doc);
        assert_eq!(serialize_model(&reparsed), first);
    }

    #[test]
    fn rule_text_with_operators_survives_round_trip() {
        let xml = r#"<model name="m">
          <const id="c" value="1"><flow sarg="Const" sink="g" darg="i"/></const>
          <gate id="g">
            <rule>(intg(o) -&gt; intg(i)) &amp; (conf(i) &lt;-&gt; conf(o))</rule>
            <arg name="i"/>
            <flow sarg="o" sink="s" darg="i"/>
          </gate>
          <env id="s"><arg name="i"/></env>
        </model>"#;
        let doc = parse_model(xml).unwrap();
        let text = serialize_model(&doc);
        let reparsed = parse_model(&text).unwrap();
        assert_eq!(reparsed, doc);
    }

    #[test]
    fn partition_attributes_rebuild_domains() {
        let xml = r#"<model name="m">
          <const id="a" value="1" partition="K2"><flow sarg="Const" sink="s" darg="i"/></const>
          <env id="s" partition="K1"><arg name="i"/></env>
        </model>"#;
        let doc = parse_model(xml).unwrap();
        let domains = doc.domains.expect("domains rebuilt");
        assert_eq!(domains.domain_of("a"), Some(2));
        assert_eq!(domains.domain_of("s"), Some(1));

        let partial = r#"<model name="m">
          <const id="a" value="1" partition="K2"><flow sarg="Const" sink="s" darg="i"/></const>
          <env id="s"><arg name="i"/></env>
        </model>"#;
        assert!(matches!(parse_model(partial), Err(ParseError::PartialPartition(_))));
    }

    #[test]
    fn annotated_output_reparses_to_the_same_network() {
        let doc = parse_model(TOY).unwrap();
        let asg: Assignment =
            doc.net.atoms().into_iter().map(|a| (a.clone(), a.kind == GuaranteeKind::Intg)).collect();
        let mut domains = DomainSet::singletons(&doc.net);
        let first = domains.ids().next().unwrap();
        domains.move_instance("iv", first).unwrap();
        let annotated = serialize_annotated(&doc, &asg, Some(&domains));
        assert!(annotated.contains("conf=\"false\" intg=\"true\""));
        assert!(annotated.contains("partition=\"K1\""));
        let reparsed = parse_model(&annotated).unwrap();
        assert_eq!(reparsed.net, doc.net);
        assert_eq!(reparsed.domains.unwrap().domain_of("iv"), domains.domain_of("iv"));
    }

    #[test]
    fn conflict_marks_touch_only_reported_instances() {
        let doc = parse_model(TOY).unwrap();
        let conflict = Conflict {
            core: Vec::new(),
            touched_instances: ["enc".to_string(), "iv".to_string()].into_iter().collect(),
            touched_channels: Vec::new(),
        };
        let marked = annotate_conflict(&doc, &conflict);
        let conflicted: Vec<&str> = marked
            .lines()
            .filter(|l| l.contains("conflict=\"true\""))
            .collect();
        assert_eq!(conflicted.len(), 2);
        assert!(conflicted.iter().all(|l| l.contains("\"enc\"") || l.contains("\"iv\"")));
        let reparsed = parse_model(&marked).unwrap();
        assert_eq!(reparsed.net, doc.net);
    }

    #[test]
    fn empty_model_serializes_self_closed() {
        let doc = parse_model("<model name=\"empty\"/>").unwrap();
        assert_eq!(doc.net.instance_count(), 0);
        assert_eq!(serialize_model(&doc), "<model name=\"empty\"/>\n");
    }
}
