//! Propositional formulas: the AST, a small recursive-descent parser and a
//! minimal-parentheses printer.
//!
//! Concrete syntax, loosest binding first:
//!
//! ```text
//! iff   := imp ("<->" imp)*        left-associative
//! imp   := or ("->" imp)?          right-associative
//! or    := and ("|" and)*          left-associative
//! and   := unary ("&" unary)*      left-associative
//! unary := "!" unary | atom | "(" iff ")"
//! atom  := [a-z][a-zA-Z0-9_]*
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A propositional formula. Identity is structural: two formulas are the same
/// element of a knowledge base iff their trees are equal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Formula {
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty formula")]
    Empty,
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
}

impl ParseError {
    pub(crate) fn at_line(self, line: usize) -> Self {
        match self {
            ParseError::Syntax {
                column, message, ..
            } => ParseError::Syntax {
                line,
                column,
                message,
            },
            other => other,
        }
    }
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn iff(l: Formula, r: Formula) -> Self {
        Formula::Iff(Box::new(l), Box::new(r))
    }

    /// The logical complement: strips one outer negation if present, otherwise
    /// wraps in one. Claims of counterarguments are built with this.
    pub fn complement(&self) -> Formula {
        match self {
            Formula::Not(inner) => (**inner).clone(),
            other => Formula::not(other.clone()),
        }
    }

    /// Returns `Some((name, polarity))` when the formula is an atom or a
    /// negated atom.
    pub fn as_literal(&self) -> Option<(&str, bool)> {
        match self {
            Formula::Atom(name) => Some((name, true)),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Atom(name) => Some((name, false)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn literal(name: impl Into<String>, positive: bool) -> Formula {
        let atom = Formula::atom(name);
        if positive {
            atom
        } else {
            Formula::not(atom)
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    pub(crate) fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(name) => {
                if !out.contains(name) {
                    out.insert(name.clone());
                }
            }
            Formula::Not(inner) => inner.collect_atoms(out),
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Implies(l, r)
            | Formula::Iff(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    /// Evaluates the formula under the valuation `value`.
    pub fn eval(&self, value: &impl Fn(&str) -> bool) -> bool {
        match self {
            Formula::Atom(name) => value(name),
            Formula::Not(inner) => !inner.eval(value),
            Formula::And(l, r) => l.eval(value) && r.eval(value),
            Formula::Or(l, r) => l.eval(value) || r.eval(value),
            Formula::Implies(l, r) => !l.eval(value) || r.eval(value),
            Formula::Iff(l, r) => l.eval(value) == r.eval(value),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Iff(..) => 1,
            Formula::Implies(..) => 2,
            Formula::Or(..) => 3,
            Formula::And(..) => 4,
            Formula::Not(..) => 5,
            Formula::Atom(..) => 6,
        }
    }
}

pub fn is_atom_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Formula, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.precedence();
        let (l, r, op, right_assoc) = match self {
            Formula::Atom(name) => return f.write_str(name),
            Formula::Not(inner) => {
                f.write_str("!")?;
                return write_child(f, inner, inner.precedence() < p);
            }
            Formula::And(l, r) => (l, r, " & ", false),
            Formula::Or(l, r) => (l, r, " | ", false),
            Formula::Implies(l, r) => (l, r, " -> ", true),
            Formula::Iff(l, r) => (l, r, " <-> ", false),
        };
        let (lp, rp) = (l.precedence(), r.precedence());
        if right_assoc {
            write_child(f, l, lp <= p)?;
            f.write_str(op)?;
            write_child(f, r, rp < p)
        } else {
            write_child(f, l, lp < p)?;
            f.write_str(op)?;
            write_child(f, r, rp <= p)
        }
    }
}

/// Renders `f` with minimal parentheses. Same as `f.to_string()`.
pub fn format_formula(f: &Formula) -> String {
    f.to_string()
}

/// Parses one line of formula syntax.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        end_column: text.chars().count() + 1,
    };
    let f = parser.iff()?;
    if let Some(tok) = parser.peek() {
        return Err(syntax(tok.column, format!("unexpected {}", tok.kind)));
    }
    Ok(f)
}

impl FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_formula(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokenKind {
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(name) => write!(f, "atom '{name}'"),
            TokenKind::Not => f.write_str("'!'"),
            TokenKind::And => f.write_str("'&'"),
            TokenKind::Or => f.write_str("'|'"),
            TokenKind::Implies => f.write_str("'->'"),
            TokenKind::Iff => f.write_str("'<->'"),
            TokenKind::LParen => f.write_str("'('"),
            TokenKind::RParen => f.write_str("')'"),
        }
    }
}

#[derive(Debug)]
struct Token {
    kind: TokenKind,
    column: usize,
}

fn syntax(column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line: 1,
        column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        let (kind, width) = match c {
            _ if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '!' => (TokenKind::Not, 1),
            '&' => (TokenKind::And, 1),
            '|' => (TokenKind::Or, 1),
            '(' => (TokenKind::LParen, 1),
            ')' => (TokenKind::RParen, 1),
            '-' if chars.get(i + 1) == Some(&'>') => (TokenKind::Implies, 2),
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                (TokenKind::Iff, 3)
            }
            _ if c.is_ascii_lowercase() => {
                let start = i;
                let mut end = i + 1;
                while end < chars.len() && (chars[end].is_ascii_alphanumeric() || chars[end] == '_')
                {
                    end += 1;
                }
                let name: String = chars[start..end].iter().collect();
                (TokenKind::Ident(name), end - start)
            }
            _ => return Err(syntax(column, format!("unexpected character '{c}'"))),
        };
        tokens.push(Token { kind, column });
        i += width;
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end_column: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().is_some_and(|t| &t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.implication()?;
        while self.eat(&TokenKind::Iff) {
            let right = self.implication()?;
            left = Formula::iff(left, right);
        }
        Ok(left)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let left = self.disjunction()?;
        if self.eat(&TokenKind::Implies) {
            let right = self.implication()?;
            return Ok(Formula::implies(left, right));
        }
        Ok(left)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.conjunction()?;
        while self.eat(&TokenKind::Or) {
            let right = self.conjunction()?;
            left = Formula::or(left, right);
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.unary()?;
        while self.eat(&TokenKind::And) {
            let right = self.unary()?;
            left = Formula::and(left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let Some(tok) = self.peek() else {
            return Err(syntax(self.end_column, "unexpected end of input"));
        };
        let column = tok.column;
        match &tok.kind {
            TokenKind::Not => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            TokenKind::Ident(name) => {
                let name = name.clone();
                self.pos += 1;
                Ok(Formula::Atom(name))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.iff()?;
                if !self.eat(&TokenKind::RParen) {
                    let column = self.peek().map_or(self.end_column, |t| t.column);
                    return Err(syntax(column, "expected ')'"));
                }
                Ok(inner)
            }
            other => Err(syntax(column, format!("unexpected {other}"))),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(n: &str) -> Formula {
        Formula::atom(n)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse_formula("a & b -> c").unwrap(),
            Formula::implies(Formula::and(a("a"), a("b")), a("c"))
        );
        assert_eq!(
            parse_formula("!(!x)").unwrap(),
            Formula::not(Formula::not(a("x")))
        );
        assert_eq!(
            parse_formula("a -> b -> c").unwrap(),
            Formula::implies(a("a"), Formula::implies(a("b"), a("c")))
        );
        assert_eq!(
            parse_formula("a -> b <-> c").unwrap(),
            Formula::iff(Formula::implies(a("a"), a("b")), a("c"))
        );
        assert_eq!(
            parse_formula("a | b & !c").unwrap(),
            Formula::or(a("a"), Formula::and(a("b"), Formula::not(a("c"))))
        );
    }

    #[test]
    fn formatting_uses_minimal_parentheses() {
        let f = Formula::implies(Formula::and(a("a"), a("b")), a("c"));
        assert_eq!(format_formula(&f), "a & b -> c");
        assert_eq!(format_formula(&Formula::not(a("c"))), "!c");
        assert_eq!(
            format_formula(&Formula::or(a("a"), Formula::and(a("b"), a("c")))),
            "a | b & c"
        );
        assert_eq!(
            format_formula(&Formula::and(a("a"), Formula::and(a("b"), a("c")))),
            "a & (b & c)"
        );
        assert_eq!(
            format_formula(&Formula::implies(Formula::implies(a("a"), a("b")), a("c"))),
            "(a -> b) -> c"
        );
        assert_eq!(
            format_formula(&Formula::not(Formula::and(a("a"), a("b")))),
            "!(a & b)"
        );
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(parse_formula("   "), Err(ParseError::Empty));
        match parse_formula("a & & b") {
            Err(ParseError::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 5)),
            other => panic!("unexpected {other:?}"),
        }
        match parse_formula("(a | b") {
            Err(ParseError::Syntax { column, .. }) => assert_eq!(column, 7),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_formula("A & b").is_err());
        assert!(parse_formula("a b").is_err());
        assert!(parse_formula("a - b").is_err());
    }

    #[test]
    fn complement_strips_one_negation() {
        assert_eq!(a("c").complement(), Formula::not(a("c")));
        assert_eq!(Formula::not(a("c")).complement(), a("c"));
    }

    pub(crate) fn arb_formula(atoms: usize, depth: u32) -> impl Strategy<Value = Formula> {
        let leaf = (0..atoms).prop_map(|i| Formula::atom(format!("p{i}")));
        leaf.prop_recursive(depth, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::implies(l, r)),
                (inner.clone(), inner).prop_map(|(l, r)| Formula::iff(l, r)),
            ]
        })
    }

    proptest! {
        #[test]
        fn parse_format_round_trip(f in arb_formula(5, 5)) {
            let text = format_formula(&f);
            prop_assert_eq!(parse_formula(&text).unwrap(), f);
        }
    }
}
