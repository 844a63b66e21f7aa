use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::formula::{parse_formula, Formula, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("duplicate formula '{formula}' on line {line} (first seen on line {first_line})")]
    Duplicate {
        formula: String,
        first_line: usize,
        line: usize,
    },
    #[error("formula '{0}' is already in the knowledge base")]
    AlreadyPresent(String),
}

/// An ordered, duplicate-free set of formulas. Indices are positions in
/// insertion order.
#[derive(Clone, Debug, Default)]
pub struct KnowledgeBase {
    label: String,
    formulas: Vec<Formula>,
    index: HashMap<Formula, usize>,
}

impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.formulas == other.formulas
    }
}

impl Eq for KnowledgeBase {}

impl KnowledgeBase {
    pub fn new(label: impl Into<String>) -> Self {
        KnowledgeBase {
            label: label.into(),
            ..Default::default()
        }
    }

    /// Builds a KB from formulas, silently skipping structural duplicates.
    pub fn from_formulas(
        label: impl Into<String>,
        formulas: impl IntoIterator<Item = Formula>,
    ) -> Self {
        let mut kb = KnowledgeBase::new(label);
        for f in formulas {
            kb.insert(f);
        }
        kb
    }

    /// Parses formulas from string literals. Panics on malformed input; meant
    /// for fixtures and tests.
    pub fn parse_all(label: impl Into<String>, formulas: &[&str]) -> Self {
        KnowledgeBase::from_formulas(
            label,
            formulas
                .iter()
                .map(|s| parse_formula(s).unwrap_or_else(|e| panic!("bad formula {s:?}: {e}"))),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Formula> {
        self.formulas.iter()
    }

    pub fn get(&self, index: usize) -> Option<&Formula> {
        self.formulas.get(index)
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.index.contains_key(f)
    }

    pub fn index_of(&self, f: &Formula) -> Option<usize> {
        self.index.get(f).copied()
    }

    /// Appends `f` unless already present. Returns whether it was added.
    pub fn insert(&mut self, f: Formula) -> bool {
        if self.index.contains_key(&f) {
            return false;
        }
        self.index.insert(f.clone(), self.formulas.len());
        self.formulas.push(f);
        true
    }

    pub fn try_push(&mut self, f: Formula) -> Result<usize, KbError> {
        if self.contains(&f) {
            return Err(KbError::AlreadyPresent(f.to_string()));
        }
        self.insert(f);
        Ok(self.formulas.len() - 1)
    }

    /// A new KB holding the formulas of `self` not in `removed`, order kept.
    pub fn without<'a>(&self, removed: impl IntoIterator<Item = &'a Formula>) -> Self {
        let removed: BTreeSet<&Formula> = removed.into_iter().collect();
        KnowledgeBase::from_formulas(
            self.label.clone(),
            self.formulas
                .iter()
                .filter(|f| !removed.contains(f))
                .cloned(),
        )
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in &self.formulas {
            f.collect_atoms(&mut out);
        }
        out
    }

    /// Renders the KB in `.kb` file syntax.
    pub fn to_kb_text(&self) -> String {
        let mut out = String::new();
        for f in &self.formulas {
            out.push_str(&f.to_string());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for KnowledgeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, formula) in self.formulas.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{formula}")?;
        }
        f.write_str("}")
    }
}

impl<'a> IntoIterator for &'a KnowledgeBase {
    type Item = &'a Formula;
    type IntoIter = std::slice::Iter<'a, Formula>;

    fn into_iter(self) -> Self::IntoIter {
        self.formulas.iter()
    }
}

/// Loads a `.kb` document: one formula per line, `#` starts a comment, blank
/// lines are skipped. Duplicates are an error.
pub fn load_kb(label: impl Into<String>, text: &str) -> Result<KnowledgeBase, KbError> {
    let mut kb = KnowledgeBase::new(label);
    let mut lines_of: HashMap<Formula, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let f = parse_formula(content).map_err(|e| KbError::Parse {
            line,
            source: e.at_line(line),
        })?;
        if let Some(&first_line) = lines_of.get(&f) {
            return Err(KbError::Duplicate {
                formula: f.to_string(),
                first_line,
                line,
            });
        }
        lines_of.insert(f.clone(), line);
        kb.insert(f);
    }
    Ok(kb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_in_file_order() {
        let kb = load_kb("KB_r", "a\nb\na & b -> c").unwrap();
        assert_eq!(kb.len(), 3);
        assert_eq!(kb.index_of(&parse_formula("a & b -> c").unwrap()), Some(2));
        assert_eq!(kb.label(), "KB_r");
    }

    #[test]
    fn skips_comments_and_blanks() {
        let kb = load_kb("k", "a\n# note\n\nb   # trailing\n").unwrap();
        assert_eq!(kb.len(), 2);
    }

    #[test]
    fn rejects_duplicates_citing_both_lines() {
        let err = load_kb("k", "a\na").unwrap_err();
        assert_eq!(
            err,
            KbError::Duplicate {
                formula: "a".into(),
                first_line: 1,
                line: 2
            }
        );
        // whitespace differences do not make formulas distinct
        assert!(load_kb("k", "a&b\n a & b ").is_err());
    }

    #[test]
    fn parse_errors_report_line() {
        match load_kb("k", "a\n\nb &") {
            Err(KbError::Parse {
                line,
                source: ParseError::Syntax { line: inner, .. },
            }) => {
                assert_eq!(line, 3);
                assert_eq!(inner, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn without_keeps_order() {
        let kb = KnowledgeBase::parse_all("k", &["a", "b", "c"]);
        let b = parse_formula("b").unwrap();
        let rest = kb.without([&b]);
        assert_eq!(rest.to_kb_text(), "a\nc\n");
    }
}
