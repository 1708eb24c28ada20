//! Boolean rule expressions over guarantee atoms.
//!
//! Rules constrain the guarantee atoms of ports. The concrete syntax is
//!
//! ```text
//! expr    := iff
//! iff     := imp ( "<->" imp )*            left associative
//! imp     := or  ( "->" imp )?             right associative
//! or      := and ( ("|" | "or") and )*
//! and     := not ( ("&" | "and") not )*
//! not     := ("!" | "not") not | primary
//! primary := "true" | "false" | "conf" "(" port ")" | "intg" "(" port ")"
//!          | "(" expr ")"
//! ```
//!
//! The keyword forms `and`, `or`, `not` exist because rules are embedded in
//! XML attributes and elements where `&` and `<` are awkward to write. A
//! port token is everything up to the closing parenthesis, trimmed, so port
//! and instance names may contain spaces.

use std::collections::BTreeSet;
use std::fmt;

use crate::graph::{Assignment, GuaranteeAtom, GuaranteeKind, ModelError};

/// Rule expression tree. `And` and `Or` are n-ary; the remaining connectives
/// are fixed arity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleExpr {
    Const(bool),
    Atom(GuaranteeAtom),
    Not(Box<RuleExpr>),
    And(Vec<RuleExpr>),
    Or(Vec<RuleExpr>),
    Implies(Box<RuleExpr>, Box<RuleExpr>),
    Iff(Box<RuleExpr>, Box<RuleExpr>),
}

impl RuleExpr {
    pub fn conf(port: impl Into<String>) -> Self {
        RuleExpr::Atom(GuaranteeAtom::conf(port))
    }

    pub fn intg(port: impl Into<String>) -> Self {
        RuleExpr::Atom(GuaranteeAtom::intg(port))
    }

    pub fn not(expr: RuleExpr) -> Self {
        RuleExpr::Not(Box::new(expr))
    }

    pub fn and(children: impl IntoIterator<Item = RuleExpr>) -> Self {
        RuleExpr::And(children.into_iter().collect())
    }

    pub fn or(children: impl IntoIterator<Item = RuleExpr>) -> Self {
        RuleExpr::Or(children.into_iter().collect())
    }

    pub fn implies(lhs: RuleExpr, rhs: RuleExpr) -> Self {
        RuleExpr::Implies(Box::new(lhs), Box::new(rhs))
    }

    pub fn iff(lhs: RuleExpr, rhs: RuleExpr) -> Self {
        RuleExpr::Iff(Box::new(lhs), Box::new(rhs))
    }
}

/// Evaluate under a (total) assignment. Missing atoms are an error, never a
/// default.
pub fn eval_rule(expr: &RuleExpr, asg: &Assignment) -> Result<bool, ModelError> {
    Ok(match expr {
        RuleExpr::Const(v) => *v,
        RuleExpr::Atom(a) => asg.require(a)?,
        RuleExpr::Not(x) => !eval_rule(x, asg)?,
        RuleExpr::And(cs) => {
            let mut v = true;
            for c in cs {
                v &= eval_rule(c, asg)?;
            }
            v
        }
        RuleExpr::Or(cs) => {
            let mut v = false;
            for c in cs {
                v |= eval_rule(c, asg)?;
            }
            v
        }
        RuleExpr::Implies(a, b) => !eval_rule(a, asg)? || eval_rule(b, asg)?,
        RuleExpr::Iff(a, b) => eval_rule(a, asg)? == eval_rule(b, asg)?,
    })
}

/// All atoms referenced by the expression.
pub fn free_atoms(expr: &RuleExpr) -> BTreeSet<GuaranteeAtom> {
    fn walk(expr: &RuleExpr, acc: &mut BTreeSet<GuaranteeAtom>) {
        match expr {
            RuleExpr::Const(_) => {}
            RuleExpr::Atom(a) => {
                acc.insert(a.clone());
            }
            RuleExpr::Not(x) => walk(x, acc),
            RuleExpr::And(cs) | RuleExpr::Or(cs) => cs.iter().for_each(|c| walk(c, acc)),
            RuleExpr::Implies(a, b) | RuleExpr::Iff(a, b) => {
                walk(a, acc);
                walk(b, acc);
            }
        }
    }
    let mut acc = BTreeSet::new();
    walk(expr, &mut acc);
    acc
}

/// Rewrite local port atoms to global `<instance>.<port>` atoms.
pub fn instantiate_rule(expr: &RuleExpr, instance: &str) -> RuleExpr {
    match expr {
        RuleExpr::Const(v) => RuleExpr::Const(*v),
        RuleExpr::Atom(a) => RuleExpr::Atom(GuaranteeAtom::global(instance, &a.port, a.kind)),
        RuleExpr::Not(x) => RuleExpr::not(instantiate_rule(x, instance)),
        RuleExpr::And(cs) => RuleExpr::And(cs.iter().map(|c| instantiate_rule(c, instance)).collect()),
        RuleExpr::Or(cs) => RuleExpr::Or(cs.iter().map(|c| instantiate_rule(c, instance)).collect()),
        RuleExpr::Implies(a, b) => {
            RuleExpr::implies(instantiate_rule(a, instance), instantiate_rule(b, instance))
        }
        RuleExpr::Iff(a, b) => {
            RuleExpr::iff(instantiate_rule(a, instance), instantiate_rule(b, instance))
        }
    }
}

/// Structural normal form: nested `And`/`Or` of the same connective are
/// flattened, their children sorted and deduplicated, singleton lists
/// unwrapped and empty lists replaced by the connective's identity. No
/// other simplification happens; semantics are preserved exactly.
pub fn normalize(expr: &RuleExpr) -> RuleExpr {
    fn nary(
        children: &[RuleExpr],
        is_same: fn(&RuleExpr) -> Option<&[RuleExpr]>,
        rebuild: fn(Vec<RuleExpr>) -> RuleExpr,
        identity: bool,
    ) -> RuleExpr {
        let mut flat = Vec::new();
        for child in children {
            let child = normalize(child);
            match is_same(&child) {
                Some(nested) => flat.extend(nested.iter().cloned()),
                None => flat.push(child),
            }
        }
        flat.sort();
        flat.dedup();
        match flat.len() {
            0 => RuleExpr::Const(identity),
            1 => flat.pop().expect("one element"),
            _ => rebuild(flat),
        }
    }

    match expr {
        RuleExpr::Const(v) => RuleExpr::Const(*v),
        RuleExpr::Atom(a) => RuleExpr::Atom(a.clone()),
        RuleExpr::Not(x) => RuleExpr::not(normalize(x)),
        RuleExpr::And(cs) => nary(
            cs,
            |e| match e {
                RuleExpr::And(inner) => Some(inner),
                _ => None,
            },
            RuleExpr::And,
            true,
        ),
        RuleExpr::Or(cs) => nary(
            cs,
            |e| match e {
                RuleExpr::Or(inner) => Some(inner),
                _ => None,
            },
            RuleExpr::Or,
            false,
        ),
        RuleExpr::Implies(a, b) => RuleExpr::implies(normalize(a), normalize(b)),
        RuleExpr::Iff(a, b) => RuleExpr::iff(normalize(a), normalize(b)),
    }
}

// Binding strength, loosest first. Used for printing with minimal parens.
fn precedence(expr: &RuleExpr) -> u8 {
    match expr {
        RuleExpr::Iff(..) => 1,
        RuleExpr::Implies(..) => 2,
        RuleExpr::Or(cs) if cs.len() != 1 => 3,
        RuleExpr::And(cs) if cs.len() != 1 => 4,
        RuleExpr::Or(_) | RuleExpr::And(_) => precedence_single(),
        RuleExpr::Not(_) => 5,
        RuleExpr::Const(_) | RuleExpr::Atom(_) => 6,
    }
}

fn precedence_single() -> u8 {
    6
}

fn fmt_prec(expr: &RuleExpr, ctx: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let own = precedence(expr);
    let parens = own < ctx;
    if parens {
        write!(f, "(")?;
    }
    match expr {
        RuleExpr::Const(true) => write!(f, "true")?,
        RuleExpr::Const(false) => write!(f, "false")?,
        RuleExpr::Atom(a) => write!(f, "{a}")?,
        RuleExpr::Not(x) => {
            write!(f, "!")?;
            fmt_prec(x, 6, f)?;
        }
        RuleExpr::And(cs) => match cs.len() {
            0 => write!(f, "true")?,
            1 => fmt_prec(&cs[0], ctx.max(own), f)?,
            _ => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    fmt_prec(c, own + 1, f)?;
                }
            }
        },
        RuleExpr::Or(cs) => match cs.len() {
            0 => write!(f, "false")?,
            1 => fmt_prec(&cs[0], ctx.max(own), f)?,
            _ => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    fmt_prec(c, own + 1, f)?;
                }
            }
        },
        RuleExpr::Implies(a, b) => {
            fmt_prec(a, own + 1, f)?;
            write!(f, " -> ")?;
            fmt_prec(b, own, f)?;
        }
        RuleExpr::Iff(a, b) => {
            fmt_prec(a, own, f)?;
            write!(f, " <-> ")?;
            fmt_prec(b, own + 1, f)?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for RuleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, 0, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("rule syntax error at offset {offset}: {message}")]
pub struct RuleParseError {
    pub offset: usize,
    pub message: String,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, RuleParseError> {
    Err(RuleParseError { offset, message: message.into() })
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    True,
    False,
    Atom(GuaranteeAtom),
    Not,
    And,
    Or,
    Arrow,
    Iff,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, RuleParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        match bytes[i] {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'(' => {
                toks.push((Tok::LParen, start));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, start));
                i += 1;
            }
            b'!' => {
                toks.push((Tok::Not, start));
                i += 1;
            }
            b'&' => {
                toks.push((Tok::And, start));
                i += 1;
            }
            b'|' => {
                toks.push((Tok::Or, start));
                i += 1;
            }
            b'-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    toks.push((Tok::Arrow, start));
                    i += 2;
                } else {
                    return err(start, "expected '->'");
                }
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'-') && bytes.get(i + 2) == Some(&b'>') {
                    toks.push((Tok::Iff, start));
                    i += 3;
                } else {
                    return err(start, "expected '<->'");
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                match word {
                    "true" => toks.push((Tok::True, start)),
                    "false" => toks.push((Tok::False, start)),
                    "not" => toks.push((Tok::Not, start)),
                    "and" => toks.push((Tok::And, start)),
                    "or" => toks.push((Tok::Or, start)),
                    "conf" | "intg" => {
                        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                            i += 1;
                        }
                        if bytes.get(i) != Some(&b'(') {
                            return err(i, format!("expected '(' after {word:?}"));
                        }
                        i += 1;
                        let port_start = i;
                        while i < bytes.len() && bytes[i] != b')' && bytes[i] != b'(' {
                            i += 1;
                        }
                        if bytes.get(i) != Some(&b')') {
                            return err(port_start, "unterminated port reference");
                        }
                        let port = text[port_start..i].trim();
                        i += 1;
                        if port.is_empty() {
                            return err(port_start, "empty port reference");
                        }
                        let kind = if word == "conf" { GuaranteeKind::Conf } else { GuaranteeKind::Intg };
                        toks.push((Tok::Atom(GuaranteeAtom { port: port.to_string(), kind }), start));
                    }
                    other => return err(start, format!("unknown keyword {other:?}")),
                }
            }
            c => return err(start, format!("unexpected character {:?}", c as char)),
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let tok = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_iff(&mut self) -> Result<RuleExpr, RuleParseError> {
        let mut lhs = self.parse_implies()?;
        while self.eat(&Tok::Iff) {
            let rhs = self.parse_implies()?;
            lhs = RuleExpr::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_implies(&mut self) -> Result<RuleExpr, RuleParseError> {
        let lhs = self.parse_or()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.parse_implies()?;
            Ok(RuleExpr::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn parse_or(&mut self) -> Result<RuleExpr, RuleParseError> {
        let first = self.parse_and()?;
        let mut children = vec![first];
        while self.eat(&Tok::Or) {
            children.push(self.parse_and()?);
        }
        Ok(if children.len() == 1 { children.pop().expect("one element") } else { RuleExpr::Or(children) })
    }

    fn parse_and(&mut self) -> Result<RuleExpr, RuleParseError> {
        let first = self.parse_not()?;
        let mut children = vec![first];
        while self.eat(&Tok::And) {
            children.push(self.parse_not()?);
        }
        Ok(if children.len() == 1 { children.pop().expect("one element") } else { RuleExpr::And(children) })
    }

    fn parse_not(&mut self) -> Result<RuleExpr, RuleParseError> {
        if self.eat(&Tok::Not) {
            Ok(RuleExpr::not(self.parse_not()?))
        } else {
            self.parse_primary()
        }
    }

    fn parse_primary(&mut self) -> Result<RuleExpr, RuleParseError> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::True) => Ok(RuleExpr::Const(true)),
            Some(Tok::False) => Ok(RuleExpr::Const(false)),
            Some(Tok::Atom(a)) => Ok(RuleExpr::Atom(a)),
            Some(Tok::LParen) => {
                let inner = self.parse_iff()?;
                if !self.eat(&Tok::RParen) {
                    return err(self.offset(), "expected ')'");
                }
                Ok(inner)
            }
            Some(tok) => err(offset, format!("unexpected token {tok:?}")),
            None => err(offset, "unexpected end of rule"),
        }
    }
}

/// Parse the rule grammar described in the module docs.
pub fn parse_rule(text: &str) -> Result<RuleExpr, RuleParseError> {
    let toks = tokenize(text)?;
    let mut parser = Parser { toks: &toks, pos: 0, end: text.len() };
    let expr = parser.parse_iff()?;
    if parser.pos != toks.len() {
        return err(parser.offset(), "trailing input after rule");
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn atoms(asg: &mut Assignment, values: &[(&str, GuaranteeKind, bool)]) {
        for (port, kind, v) in values {
            asg.set(GuaranteeAtom { port: port.to_string(), kind: *kind }, *v);
        }
    }

    #[test]
    fn precedence_binds_and_over_or_over_implies() {
        let e = parse_rule("conf(a) | conf(b) & intg(c) -> conf(d)").unwrap();
        assert_eq!(
            e,
            RuleExpr::implies(
                RuleExpr::or([
                    RuleExpr::conf("a"),
                    RuleExpr::and([RuleExpr::conf("b"), RuleExpr::intg("c")]),
                ]),
                RuleExpr::conf("d"),
            )
        );
    }

    #[test]
    fn implies_is_right_associative_iff_left() {
        let e = parse_rule("conf(a) -> conf(b) -> conf(c)").unwrap();
        assert_eq!(
            e,
            RuleExpr::implies(
                RuleExpr::conf("a"),
                RuleExpr::implies(RuleExpr::conf("b"), RuleExpr::conf("c")),
            )
        );
        let e = parse_rule("conf(a) <-> conf(b) <-> conf(c)").unwrap();
        assert_eq!(
            e,
            RuleExpr::iff(
                RuleExpr::iff(RuleExpr::conf("a"), RuleExpr::conf("b")),
                RuleExpr::conf("c"),
            )
        );
    }

    #[test]
    fn keyword_aliases_match_symbols() {
        let sym = parse_rule("!conf(k) & intg(k) | true").unwrap();
        let kw = parse_rule("not conf(k) and intg(k) or true").unwrap();
        assert_eq!(sym, kw);
    }

    #[test]
    fn ports_may_contain_spaces_and_dots() {
        let e = parse_rule("intg(Calculate sec.ssec)").unwrap();
        assert_eq!(e, RuleExpr::intg("Calculate sec.ssec"));
        assert_eq!(e.to_string(), "intg(Calculate sec.ssec)");
    }

    #[test]
    fn parse_errors_carry_offsets() {
        for (text, needle) in [
            ("conf()", "empty port"),
            ("conf(a", "unterminated"),
            ("foo(a)", "unknown keyword"),
            ("conf(a) conf(b)", "trailing input"),
            ("(conf(a)", "expected ')'"),
            ("conf(a) ->", "unexpected end"),
            ("conf(a) < conf(b)", "expected '<->'"),
        ] {
            let e = parse_rule(text).unwrap_err();
            assert!(e.message.contains(needle), "{text:?} -> {e}");
        }
    }

    #[test]
    fn printer_emits_minimal_parens() {
        let e = parse_rule("(conf(a) | conf(b)) & intg(c)").unwrap();
        assert_eq!(e.to_string(), "(conf(a) | conf(b)) & intg(c)");
        let e = parse_rule("conf(a) & intg(c) | conf(b)").unwrap();
        assert_eq!(e.to_string(), "conf(a) & intg(c) | conf(b)");
        let e = parse_rule("!(conf(a) -> conf(b))").unwrap();
        assert_eq!(e.to_string(), "!(conf(a) -> conf(b))");
        let e = parse_rule("(conf(a) -> conf(b)) -> conf(c)").unwrap();
        assert_eq!(e.to_string(), "(conf(a) -> conf(b)) -> conf(c)");
    }

    #[test]
    fn eval_covers_all_connectives() {
        let mut asg = Assignment::new();
        atoms(&mut asg, &[
            ("a", GuaranteeKind::Conf, true),
            ("b", GuaranteeKind::Conf, false),
        ]);
        let t = RuleExpr::conf("a");
        let f = RuleExpr::conf("b");
        assert!(eval_rule(&RuleExpr::implies(f.clone(), t.clone()), &asg).unwrap());
        assert!(!eval_rule(&RuleExpr::implies(t.clone(), f.clone()), &asg).unwrap());
        assert!(eval_rule(&RuleExpr::iff(f.clone(), f.clone()), &asg).unwrap());
        assert!(!eval_rule(&RuleExpr::iff(t.clone(), f.clone()), &asg).unwrap());
        assert!(eval_rule(&RuleExpr::and([]), &asg).unwrap());
        assert!(!eval_rule(&RuleExpr::or([]), &asg).unwrap());
        assert!(matches!(
            eval_rule(&RuleExpr::conf("missing"), &asg),
            Err(ModelError::MissingAtom(_))
        ));
    }

    #[test]
    fn normalize_flattens_sorts_dedupes() {
        let e = RuleExpr::and([
            RuleExpr::and([RuleExpr::intg("b"), RuleExpr::conf("a")]),
            RuleExpr::conf("a"),
            RuleExpr::intg("b"),
        ]);
        assert_eq!(
            normalize(&e),
            RuleExpr::and([RuleExpr::conf("a"), RuleExpr::intg("b")])
        );
        let singleton = RuleExpr::or([RuleExpr::conf("x")]);
        assert_eq!(normalize(&singleton), RuleExpr::conf("x"));
        assert_eq!(normalize(&RuleExpr::and([])), RuleExpr::Const(true));
        let n = normalize(&e);
        assert_eq!(normalize(&n), n, "normalization is idempotent");
    }

    #[test]
    fn instantiate_prefixes_every_atom() {
        let e = parse_rule("conf(Key) -> intg(Plain) & true").unwrap();
        let bound = instantiate_rule(&e, "enc");
        let ports: Vec<String> = free_atoms(&bound).into_iter().map(|a| a.port).collect();
        assert_eq!(ports, vec!["enc.Key", "enc.Plain"]);
    }

    fn arb_expr() -> impl Strategy<Value = RuleExpr> {
        let leaf = prop_oneof![
            any::<bool>().prop_map(RuleExpr::Const),
            prop_oneof![Just("a"), Just("b"), Just("c"), Just("p q")].prop_flat_map(|p| {
                prop_oneof![
                    Just(RuleExpr::conf(p)),
                    Just(RuleExpr::intg(p)),
                ]
            }),
        ];
        leaf.prop_recursive(4, 24, 4, |inner| {
            prop_oneof![
                inner.clone().prop_map(RuleExpr::not),
                prop::collection::vec(inner.clone(), 0..4).prop_map(RuleExpr::And),
                prop::collection::vec(inner.clone(), 0..4).prop_map(RuleExpr::Or),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| RuleExpr::implies(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| RuleExpr::iff(a, b)),
            ]
        })
    }

    proptest! {
        // Printing a normalized rule and parsing it back is the identity on
        // normal forms.
        #[test]
        fn print_parse_preserves_normal_form(e in arb_expr()) {
            let n = normalize(&e);
            let reparsed = parse_rule(&n.to_string()).expect("printed rule parses");
            prop_assert_eq!(normalize(&reparsed), n);
        }

        // Normalization never changes the truth value.
        #[test]
        fn normalize_preserves_semantics(e in arb_expr(), bits in any::<u8>()) {
            let mut asg = Assignment::new();
            for (i, port) in ["a", "b", "c", "p q"].iter().enumerate() {
                asg.set(GuaranteeAtom::conf(*port), bits & (1 << (2 * i)) != 0);
                asg.set(GuaranteeAtom::intg(*port), bits & (1 << (2 * i + 1)) != 0);
            }
            let before = eval_rule(&e, &asg).unwrap();
            let after = eval_rule(&normalize(&e), &asg).unwrap();
            prop_assert_eq!(before, after);
        }
    }
}
