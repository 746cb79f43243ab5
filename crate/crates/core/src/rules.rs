//! Propositional rules in an ASP subset: representation, text emission,
//! parsing and a two-stratum evaluator. Programs are stratified: auxiliary
//! atoms depend only on input atoms, target atoms only on inputs and
//! auxiliaries, so negation-as-failure collapses to direct evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub atom: String,
    pub negated: bool,
}

impl Literal {
    pub fn pos(atom: impl Into<String>) -> Self {
        Literal {
            atom: atom.into(),
            negated: false,
        }
    }

    pub fn neg(atom: impl Into<String>) -> Self {
        Literal {
            atom: atom.into(),
            negated: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub head: String,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: impl Into<String>, body: Vec<Literal>) -> Result<Self> {
        let head = head.into();
        validate_atom(&head)?;
        if body.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "rule for {head} has empty body"
            )));
        }
        let mut seen_pos = BTreeSet::new();
        let mut seen_neg = BTreeSet::new();
        for lit in &body {
            validate_atom(&lit.atom)?;
            let fresh = if lit.negated {
                seen_neg.insert(lit.atom.clone())
            } else {
                seen_pos.insert(lit.atom.clone())
            };
            if !fresh {
                return Err(Error::InvalidArgument(format!(
                    "duplicate literal {} in rule for {head}",
                    lit.atom
                )));
            }
        }
        if let Some(atom) = seen_pos.intersection(&seen_neg).next() {
            return Err(Error::InvalidArgument(format!(
                "atom {atom} appears both positive and negated in rule for {head}"
            )));
        }
        Ok(Rule { head, body })
    }

    fn body_text(&self) -> String {
        self.body
            .iter()
            .map(|l| {
                if l.negated {
                    format!("not {}", l.atom)
                } else {
                    l.atom.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn validate_atom(name: &str) -> Result<()> {
    let mut chars = name.chars();
    let ok = matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("invalid atom name: {name:?}")))
    }
}

/// Lowercase a raw attribute/class name and map anything outside
/// [a-z0-9_] to underscores, producing a valid atom name.
pub fn sanitize_atom(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.to_ascii_lowercase().chars() {
        if c.is_ascii_alphanumeric() || c == '_' {
            out.push(c);
        } else {
            out.push('_');
        }
    }
    if !out.starts_with(|c: char| c.is_ascii_lowercase()) {
        out.insert(0, 'a');
    }
    out
}

/// A stratified propositional program. Auxiliary atoms are heads that also
/// appear in some body; target atoms are heads that never do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub input_atoms: BTreeSet<String>,
    pub auxiliary_atoms: BTreeSet<String>,
    pub target_atoms: BTreeSet<String>,
}

impl RuleSet {
    /// Build a rule set, classifying atoms by dependency analysis.
    /// `declared_targets` forces atoms into the target set even when they
    /// never appear as a head (targets with no rules are legal).
    pub fn new(rules: Vec<Rule>, declared_targets: &[String]) -> Result<Self> {
        let heads: BTreeSet<String> = rules.iter().map(|r| r.head.clone()).collect();
        let body_atoms: BTreeSet<String> = rules
            .iter()
            .flat_map(|r| r.body.iter().map(|l| l.atom.clone()))
            .collect();

        let mut target_atoms: BTreeSet<String> = declared_targets.iter().cloned().collect();
        let auxiliary_atoms: BTreeSet<String> = heads
            .iter()
            .filter(|h| body_atoms.contains(*h) && !target_atoms.contains(*h))
            .cloned()
            .collect();
        for h in &heads {
            if !auxiliary_atoms.contains(h) {
                target_atoms.insert(h.clone());
            }
        }
        let input_atoms: BTreeSet<String> = body_atoms
            .iter()
            .filter(|a| !heads.contains(*a) && !target_atoms.contains(*a))
            .cloned()
            .collect();

        let set = RuleSet {
            rules,
            input_atoms,
            auxiliary_atoms,
            target_atoms,
        };
        set.check_stratified()?;
        Ok(set)
    }

    fn check_stratified(&self) -> Result<()> {
        for rule in &self.rules {
            let head_is_aux = self.auxiliary_atoms.contains(&rule.head);
            for lit in &rule.body {
                if self.target_atoms.contains(&lit.atom) {
                    return Err(Error::InvalidState(format!(
                        "target atom {} used in the body of a rule for {}",
                        lit.atom, rule.head
                    )));
                }
                if head_is_aux && self.auxiliary_atoms.contains(&lit.atom) {
                    return Err(Error::InvalidState(format!(
                        "auxiliary atom {} depends on auxiliary atom {}: program not two-stratum",
                        rule.head, lit.atom
                    )));
                }
            }
        }
        Ok(())
    }

    /// Evaluate the program against a total assignment of the input atoms.
    /// Returns the set of true target atoms.
    pub fn evaluate(&self, assignment: &BTreeMap<String, bool>) -> Result<BTreeSet<String>> {
        for atom in &self.input_atoms {
            if !assignment.contains_key(atom) {
                return Err(Error::InvalidArgument(format!(
                    "assignment missing input atom {atom}"
                )));
            }
        }
        let truth = |atom: &str, derived: &BTreeSet<String>| -> bool {
            assignment.get(atom).copied().unwrap_or_else(|| derived.contains(atom))
        };
        // Stratum 1: auxiliary atoms from inputs only.
        let mut derived = BTreeSet::new();
        for rule in &self.rules {
            if self.auxiliary_atoms.contains(&rule.head)
                && rule.body.iter().all(|l| {
                    let v = assignment.get(&l.atom).copied().unwrap_or(false);
                    v != l.negated
                })
            {
                derived.insert(rule.head.clone());
            }
        }
        // Stratum 2: target atoms against the fixed lower stratum.
        let mut targets = BTreeSet::new();
        for rule in &self.rules {
            if self.target_atoms.contains(&rule.head)
                && rule
                    .body
                    .iter()
                    .all(|l| truth(&l.atom, &derived) != l.negated)
            {
                targets.insert(rule.head.clone());
            }
        }
        Ok(targets)
    }

    /// Deterministic textual form: one rule per line, sorted by head then
    /// body text, LF line endings.
    pub fn emit_asp(&self) -> String {
        let mut lines: Vec<(String, String)> = self
            .rules
            .iter()
            .map(|r| (r.head.clone(), r.body_text()))
            .collect();
        lines.sort();
        let mut out = String::new();
        for (head, body) in lines {
            if body.is_empty() {
                let _ = writeln!(out, "{head}.");
            } else {
                let _ = writeln!(out, "{head} :- {body}.");
            }
        }
        out
    }

    /// Mean and maximum body length over all rules. An auxiliary
    /// reference in a body counts as one literal; auxiliary definition
    /// rules contribute their own row.
    pub fn rule_length_stats(&self) -> Result<(f64, usize)> {
        if self.rules.is_empty() {
            return Err(Error::InvalidArgument(
                "rule_length_stats of empty rule set".into(),
            ));
        }
        let lengths: Vec<usize> = self.rules.iter().map(|r| r.body.len()).collect();
        let mean = lengths.iter().sum::<usize>() as f64 / lengths.len() as f64;
        let max = *lengths.iter().max().unwrap();
        Ok((mean, max))
    }
}

/// Parse the ASP subset produced by [`RuleSet::emit_asp`].
pub fn parse_asp(text: &str) -> Result<RuleSet> {
    parse_asp_with_targets(text, &[])
}

/// Parse with a declared target list for atom classification.
pub fn parse_asp_with_targets(text: &str, declared_targets: &[String]) -> Result<RuleSet> {
    let tokens = tokenize(text)?;
    let mut rules = Vec::new();
    let mut pos = 0;
    while pos < tokens.len() {
        let (rule, next) = parse_rule(&tokens, pos)?;
        rules.push(rule);
        pos = next;
    }
    RuleSet::new(rules, declared_targets)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Atom(String),
    Not,
    If,    // :-
    Comma,
    Dot,
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c == '%' {
                break; // comment to end of line
            } else if c == ',' {
                out.push(Spanned { tok: Tok::Comma, line: line_no, col });
                i += 1;
            } else if c == '.' {
                out.push(Spanned { tok: Tok::Dot, line: line_no, col });
                i += 1;
            } else if c == ':' {
                if chars.get(i + 1) == Some(&'-') {
                    out.push(Spanned { tok: Tok::If, line: line_no, col });
                    i += 2;
                } else {
                    return Err(Error::Parse {
                        line: line_no,
                        col,
                        msg: "expected '-' after ':'".into(),
                    });
                }
            } else if c.is_ascii_lowercase() {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                if word == "not" {
                    out.push(Spanned { tok: Tok::Not, line: line_no, col });
                } else {
                    out.push(Spanned { tok: Tok::Atom(word), line: line_no, col });
                }
            } else {
                return Err(Error::Parse {
                    line: line_no,
                    col,
                    msg: format!("unexpected character {c:?}"),
                });
            }
        }
    }
    Ok(out)
}

fn parse_rule(tokens: &[Spanned], mut pos: usize) -> Result<(Rule, usize)> {
    let err_at = |pos: usize, msg: &str| -> Error {
        match tokens.get(pos) {
            Some(t) => Error::Parse {
                line: t.line,
                col: t.col,
                msg: msg.into(),
            },
            None => {
                let (line, col) = tokens
                    .last()
                    .map(|t| (t.line, t.col))
                    .unwrap_or((1, 1));
                Error::Parse {
                    line,
                    col,
                    msg: format!("{msg} (unexpected end of input)"),
                }
            }
        }
    };

    let head = match tokens.get(pos) {
        Some(Spanned { tok: Tok::Atom(a), .. }) => a.clone(),
        _ => return Err(err_at(pos, "expected rule head atom")),
    };
    pos += 1;
    match tokens.get(pos).map(|t| &t.tok) {
        Some(Tok::Dot) => {
            // A fact: head with empty body.
            return Ok((Rule { head, body: vec![] }, pos + 1));
        }
        Some(Tok::If) => {
            pos += 1;
        }
        _ => return Err(err_at(pos, "expected ':-' or '.' after head")),
    }
    let mut body = Vec::new();
    loop {
        let negated = if matches!(tokens.get(pos).map(|t| &t.tok), Some(Tok::Not)) {
            pos += 1;
            true
        } else {
            false
        };
        let atom = match tokens.get(pos) {
            Some(Spanned { tok: Tok::Atom(a), .. }) => a.clone(),
            _ => return Err(err_at(pos, "expected body atom")),
        };
        pos += 1;
        body.push(Literal { atom, negated });
        match tokens.get(pos).map(|t| &t.tok) {
            Some(Tok::Comma) => pos += 1,
            Some(Tok::Dot) => return Ok((Rule::new(head, body)?, pos + 1)),
            _ => return Err(err_at(pos, "expected ',' or '.' in rule body")),
        }
    }
}
