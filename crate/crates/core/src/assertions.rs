//! Declared guarantee expectations on channels, checked against a derived
//! assignment.
//!
//! Models can pin down what they believe the analysis will conclude about
//! a channel ("this value stays confidential"). After solving, each
//! expectation is compared with the derived guarantee of the channel's
//! source atom; mismatches are reported in a fixed, pinned line format so
//! scripts can grep for them.

use std::fmt;

use crate::graph::{Assignment, Channel, GuaranteeKind, ModelError};

/// One expectation: the given guarantee kind of the channel is expected to
/// come out as `expected`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Assertion {
    pub channel: Channel,
    pub kind: GuaranteeKind,
    pub expected: bool,
    pub message: String,
}

/// A failed assertion together with the derived value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub assertion: Assertion,
    pub actual: bool,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = &self.assertion;
        let ch = &a.channel;
        write!(
            f,
            "ASSERT FAIL {}.{} -> {}.{}: expected {kind}={}, got {kind}={} ({})",
            ch.src,
            ch.src_port,
            ch.dst,
            ch.dst_port,
            a.expected,
            self.actual,
            a.message,
            kind = a.kind.short(),
        )
    }
}

/// Check every assertion against the assignment. Returns the violations
/// sorted by channel, then guarantee kind, then message. The channel
/// constraint makes both endpoint atoms equal, so the source atom is the
/// one consulted.
pub fn check_assertions(
    assertions: &[Assertion],
    asg: &Assignment,
) -> Result<Vec<Violation>, ModelError> {
    let mut violations = Vec::new();
    for assertion in assertions {
        let actual = asg.require(&assertion.channel.src_atom(assertion.kind))?;
        if actual != assertion.expected {
            violations.push(Violation { assertion: assertion.clone(), actual });
        }
    }
    violations.sort_by(|a, b| a.assertion.cmp(&b.assertion));
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GuaranteeAtom;

    fn assertion(kind: GuaranteeKind, expected: bool, msg: &str) -> Assertion {
        Assertion {
            channel: Channel::new("us", "Text", "enc", "Plain"),
            kind,
            expected,
            message: msg.to_string(),
        }
    }

    fn assignment(conf: bool, intg: bool) -> Assignment {
        let mut asg = Assignment::new();
        asg.set(GuaranteeAtom::conf("us.Text"), conf);
        asg.set(GuaranteeAtom::intg("us.Text"), intg);
        asg.set(GuaranteeAtom::conf("enc.Plain"), conf);
        asg.set(GuaranteeAtom::intg("enc.Plain"), intg);
        asg
    }

    #[test]
    fn satisfied_assertions_stay_silent() {
        let asserts = vec![
            assertion(GuaranteeKind::Conf, true, "stays secret"),
            assertion(GuaranteeKind::Intg, false, "may be tampered"),
        ];
        let violations = check_assertions(&asserts, &assignment(true, false)).unwrap();
        assert!(violations.is_empty());
    }

    #[test]
    fn violation_line_format_is_pinned() {
        let asserts = vec![assertion(GuaranteeKind::Conf, true, "stays secret")];
        let violations = check_assertions(&asserts, &assignment(false, false)).unwrap();
        assert_eq!(violations.len(), 1);
        assert_eq!(
            violations[0].to_string(),
            "ASSERT FAIL us.Text -> enc.Plain: expected conf=true, got conf=false (stays secret)"
        );
    }

    #[test]
    fn violations_come_out_sorted() {
        let asserts = vec![
            assertion(GuaranteeKind::Intg, true, "b"),
            assertion(GuaranteeKind::Conf, true, "a"),
        ];
        let violations = check_assertions(&asserts, &assignment(false, false)).unwrap();
        let kinds: Vec<GuaranteeKind> = violations.iter().map(|v| v.assertion.kind).collect();
        assert_eq!(kinds, vec![GuaranteeKind::Conf, GuaranteeKind::Intg]);
    }

    #[test]
    fn missing_atom_is_an_error_not_a_pass() {
        let asserts = vec![Assertion {
            channel: Channel::new("ghost", "o", "enc", "Plain"),
            kind: GuaranteeKind::Conf,
            expected: true,
            message: String::new(),
        }];
        assert!(check_assertions(&asserts, &assignment(true, true)).is_err());
    }
}
