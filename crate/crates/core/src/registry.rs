//! Built-in primitive kinds: port signatures and guarantee rule templates.
//!
//! Two families exist. Fixed kinds (ciphers, key exchange, MACs, the RNG)
//! have a canonical port signature and a rule template over those ports.
//! Variable kinds (`env`, `const`, `transform`) take their ports from the
//! model and synthesize their rule from the port lists.

use std::collections::BTreeMap;

use crate::graph::PrimitiveSpec;
use crate::rule::{parse_rule, RuleExpr};

/// Kinds with a canonical signature, in registry order.
pub const FIXED_KINDS: &[&str] = &[
    "dec_ctr", "dhpub", "dhsec", "enc_ctr", "hmac", "rng", "sign", "verify",
];

/// Kinds whose ports come from the model rather than the registry.
pub const VARIABLE_KINDS: &[&str] = &["const", "env", "transform"];

pub fn is_fixed_kind(kind: &str) -> bool {
    FIXED_KINDS.contains(&kind)
}

pub fn is_variable_kind(kind: &str) -> bool {
    VARIABLE_KINDS.contains(&kind)
}

pub fn is_registry_kind(kind: &str) -> bool {
    is_fixed_kind(kind) || is_variable_kind(kind)
}

fn fixed_template(kind: &str) -> Option<(&'static [&'static str], &'static [&'static str], &'static str)> {
    Some(match kind {
        // Counter-mode encryption: the key must be secret and untampered,
        // the counter untampered (reuse breaks the keystream), and
        // ciphertext integrity cannot exceed plaintext integrity.
        "enc_ctr" => (
            &["Key", "Ctr", "Plain"],
            &["Cipher"],
            "(intg(Cipher) -> intg(Plain)) & intg(Key) & conf(Key) & intg(Ctr)",
        ),
        // Counter-mode decryption: mirror image of encryption. Whether the
        // recovered plaintext needs confidentiality is decided by whatever
        // consumes it, not by the primitive.
        "dec_ctr" => (
            &["Key", "Ctr", "Cipher"],
            &["Plain"],
            "(intg(Plain) -> intg(Cipher)) & intg(Key) & conf(Key) & intg(Ctr)",
        ),
        // Public key half of the group exchange: parameters must be
        // untampered, the exponent is the secret.
        "dhpub" => (
            &["g", "m", "x"],
            &["pub"],
            "intg(g) & intg(m) & conf(x) & intg(x)",
        ),
        // Shared secret half: same demands as dhpub, the result is always
        // secret, and it is only trustworthy if every ingredient is.
        "dhsec" => (
            &["g", "m", "x", "pub"],
            &["ssec"],
            "intg(g) & intg(m) & conf(x) & intg(x) & conf(ssec) \
             & (intg(ssec) -> intg(pub) & intg(g) & intg(m) & intg(x))",
        ),
        // Randomness is only useful secret; a tampered length would let an
        // attacker truncate keys.
        "rng" => (&["len"], &["out"], "conf(out) & intg(len)"),
        // Keyed MAC: the key is a shared secret.
        "hmac" => (&["Key", "Msg"], &["Tag"], "intg(Key) & conf(Key)"),
        // Signing additionally needs an untampered message, otherwise the
        // signature launders the tampering.
        "sign" => (&["Key", "Msg"], &["Sig"], "intg(Key) & conf(Key) & intg(Msg)"),
        // Verification: the verdict inherits trust from the key.
        "verify" => (
            &["Key", "Msg", "Sig"],
            &["Result"],
            "intg(Key) & (intg(Result) -> intg(Key))",
        ),
        _ => return None,
    })
}

/// Canonical spec for a fixed kind.
pub fn fixed_spec(kind: &str) -> Option<PrimitiveSpec> {
    let (inputs, outputs, rule) = fixed_template(kind)?;
    Some(PrimitiveSpec {
        kind: kind.to_string(),
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        rule: parse_rule(rule).expect("registry rule template parses"),
    })
}

/// Rule for a transform with the given ports: taint in the inputs forces
/// confidentiality of every output, and integrity of any output requires
/// integrity of every input.
pub fn transform_rule(inputs: &[String], outputs: &[String]) -> RuleExpr {
    let any_conf = RuleExpr::or(inputs.iter().map(|i| RuleExpr::conf(i.clone())));
    let all_intg = RuleExpr::and(inputs.iter().map(|i| RuleExpr::intg(i.clone())));
    RuleExpr::and(outputs.iter().flat_map(|o| {
        [
            RuleExpr::implies(any_conf.clone(), RuleExpr::conf(o.clone())),
            RuleExpr::implies(RuleExpr::intg(o.clone()), all_intg.clone()),
        ]
    }))
}

/// Fixed boolean demands an environment endpoint places on all its ports.
/// Returned as one literal per (port, kind), in port order.
pub fn env_fixings(
    instance: &str,
    ports: impl IntoIterator<Item = String>,
    conf: bool,
    intg: bool,
) -> Vec<(String, crate::graph::GuaranteeKind, RuleExpr)> {
    use crate::graph::{GuaranteeAtom, GuaranteeKind};
    let mut out = Vec::new();
    for port in ports {
        for (kind, value) in [(GuaranteeKind::Conf, conf), (GuaranteeKind::Intg, intg)] {
            let atom = RuleExpr::Atom(GuaranteeAtom::global(instance, &port, kind));
            let expr = if value { atom } else { RuleExpr::not(atom) };
            out.push((port.clone(), kind, expr));
        }
    }
    out
}

/// Spec for a variable kind with the given ports. `env` and `const`
/// instances place no rule of their own here; environment demands are
/// attached during constraint collection and constants are unconstrained.
pub fn variable_spec(kind: &str, inputs: Vec<String>, outputs: Vec<String>) -> Option<PrimitiveSpec> {
    let rule = match kind {
        "env" | "const" => RuleExpr::Const(true),
        "transform" => transform_rule(&inputs, &outputs),
        _ => return None,
    };
    Some(PrimitiveSpec { kind: kind.to_string(), inputs, outputs, rule })
}

/// Spec for any registry kind. Fixed kinds ignore the supplied ports.
pub fn registry_spec(kind: &str, inputs: Vec<String>, outputs: Vec<String>) -> Option<PrimitiveSpec> {
    fixed_spec(kind).or_else(|| variable_spec(kind, inputs, outputs))
}

/// Baseline source line estimates per primitive kind, used to size trusted
/// computing bases. Calibrated against small C implementations of each
/// primitive: constants and plumbing are nearly free, symmetric crypto and
/// MACs sit around a few dozen lines plus the hash core, and the modular
/// exponentiation in the group exchange dominates everything else.
pub fn default_weight(kind: &str) -> u32 {
    match kind {
        "const" => 5,
        "transform" => 15,
        "env" => 20,
        "rng" => 30,
        "enc_ctr" | "dec_ctr" | "hmac" | "sign" | "verify" => 60,
        "dhpub" | "dhsec" => 80,
        _ => 50,
    }
}

/// Bind a registry kind directly, mostly for tests and generated networks.
pub fn bind_registry(
    kind: &str,
    name: &str,
    inputs: Vec<String>,
    outputs: Vec<String>,
) -> Option<crate::graph::Instance> {
    let spec = registry_spec(kind, inputs, outputs)?;
    crate::graph::bind_instance(&spec, name, BTreeMap::new()).ok()
}
