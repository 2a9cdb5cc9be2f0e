//! Single-variable clause language shared by both rule learners.
//!
//! A clause body is a conjunction of three literal kinds: categorical
//! equality, its negation-as-failure form, and a closed numeric interval.
//! Literals refer to features by name so rule files are independent of a
//! particular encoding; [`Clause::bind`] resolves them against a schema for
//! fast evaluation.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::dataset::{Dataset, FeatureKind, Label, Sample, Schema, Value};

pub const DEFAULT_DECIMALS: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogicError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature `{feature}` has no value `{value}`")]
    UnknownValue { feature: String, value: String },
    #[error("feature `{0}` is used with the wrong kind of literal")]
    KindMismatch(String),
    #[error("invalid interval [{lo}, {hi}] on `{feature}`")]
    InvalidRange { feature: String, lo: f64, hi: f64 },
    #[error("clause covers no samples")]
    EmptyCoverage,
    #[error("{line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, LogicError>;

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    CatEq {
        feature: String,
        value: String,
    },
    /// Satisfied iff the sample's value differs from `value`.
    NegCatEq {
        feature: String,
        value: String,
    },
    /// Closed interval; infinite bounds make it one-sided.
    NumRange {
        feature: String,
        lo: f64,
        hi: f64,
    },
}

impl Literal {
    pub fn feature(&self) -> &str {
        match self {
            Literal::CatEq { feature, .. }
            | Literal::NegCatEq { feature, .. }
            | Literal::NumRange { feature, .. } => feature,
        }
    }

    pub fn bind(&self, schema: &Schema) -> Result<BoundLiteral> {
        let name = self.feature();
        let f = schema
            .feature_index(name)
            .ok_or_else(|| LogicError::UnknownFeature(name.to_string()))?;
        match (self, schema.kind(f)) {
            (
                Literal::CatEq { value, .. } | Literal::NegCatEq { value, .. },
                FeatureKind::Categorical { .. },
            ) => {
                let v =
                    schema
                        .category_index(f, value)
                        .ok_or_else(|| LogicError::UnknownValue {
                            feature: name.to_string(),
                            value: value.clone(),
                        })?;
                Ok(BoundLiteral::Cat {
                    feature: f,
                    value: v,
                    negated: matches!(self, Literal::NegCatEq { .. }),
                })
            }
            (Literal::NumRange { lo, hi, .. }, FeatureKind::Numeric) => {
                if lo.is_nan() || hi.is_nan() || lo > hi {
                    return Err(LogicError::InvalidRange {
                        feature: name.to_string(),
                        lo: *lo,
                        hi: *hi,
                    });
                }
                Ok(BoundLiteral::Num {
                    feature: f,
                    lo: *lo,
                    hi: *hi,
                })
            }
            _ => Err(LogicError::KindMismatch(name.to_string())),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut var = 0;
        f.write_str(&render_literal(self, DEFAULT_DECIMALS, &mut var))
    }
}

/// A literal resolved to schema indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundLiteral {
    Cat {
        feature: usize,
        value: u32,
        negated: bool,
    },
    Num {
        feature: usize,
        lo: f64,
        hi: f64,
    },
}

impl BoundLiteral {
    pub fn satisfied(&self, s: &Sample) -> bool {
        match *self {
            BoundLiteral::Cat {
                feature,
                value,
                negated,
            } => (s.values[feature] == Value::Category(value)) != negated,
            BoundLiteral::Num { feature, lo, hi } => match s.values[feature] {
                Value::Number(x) => lo <= x && x <= hi,
                Value::Category(_) => false,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub head: String,
    pub body: Vec<Literal>,
}

impl Clause {
    /// `head :- true.`
    pub fn new(head: impl Into<String>) -> Self {
        Clause {
            head: head.into(),
            body: Vec::new(),
        }
    }

    /// Adds a literal keeping the clause invariants: exact duplicates are
    /// dropped and a second interval on a feature is intersected with the
    /// first. Returns `None` when the intersection is empty.
    pub fn with_literal(&self, lit: Literal) -> Option<Clause> {
        let mut next = self.clone();
        if next.body.contains(&lit) {
            return Some(next);
        }
        if let Literal::NumRange { feature, lo, hi } = &lit {
            for existing in next.body.iter_mut() {
                if let Literal::NumRange {
                    feature: f,
                    lo: elo,
                    hi: ehi,
                } = existing
                {
                    if f == feature {
                        let (nlo, nhi) = (elo.max(*lo), ehi.min(*hi));
                        if nlo > nhi {
                            return None;
                        }
                        *elo = nlo;
                        *ehi = nhi;
                        return Some(next);
                    }
                }
            }
        }
        next.body.push(lit);
        Some(next)
    }

    pub fn bind(&self, schema: &Schema) -> Result<BoundClause> {
        Ok(BoundClause {
            literals: self
                .body
                .iter()
                .map(|l| l.bind(schema))
                .collect::<Result<_>>()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundClause {
    pub literals: Vec<BoundLiteral>,
}

impl BoundClause {
    pub fn covers(&self, s: &Sample) -> bool {
        self.literals.iter().all(|l| l.satisfied(s))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Hypothesis {
    pub clauses: Vec<Clause>,
}

impl Hypothesis {
    pub fn new(clauses: Vec<Clause>) -> Self {
        Hypothesis { clauses }
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn literal_count(&self) -> usize {
        self.clauses.iter().map(|c| c.body.len()).sum()
    }

    pub fn bind(&self, schema: &Schema) -> Result<BoundHypothesis> {
        Ok(BoundHypothesis {
            clauses: self
                .clauses
                .iter()
                .map(|c| c.bind(schema))
                .collect::<Result<_>>()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundHypothesis {
    pub clauses: Vec<BoundClause>,
}

impl BoundHypothesis {
    pub fn predict(&self, s: &Sample) -> Label {
        if self.clauses.iter().any(|c| c.covers(s)) {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

/// Predicate name for clauses describing the schema's positive class.
///
/// Boolean-like positive labels (`yes`, `true`, `1`) name the target itself,
/// their negations give `{target}_{label}`, and any other label is used as
/// the predicate directly (`red`, `malignant`).
pub fn clause_head(schema: &Schema) -> String {
    let label = schema.positive_label();
    match label.to_ascii_lowercase().as_str() {
        "yes" | "true" | "1" => schema.target_name().to_string(),
        "no" | "false" | "0" => format!("{}_{}", schema.target_name(), label),
        _ => label.to_string(),
    }
}

pub fn covers(c: &Clause, schema: &Schema, s: &Sample) -> Result<bool> {
    Ok(c.bind(schema)?.covers(s))
}

/// Indices of covered positives, covered negatives, and uncovered samples.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    pub covered_pos: Vec<usize>,
    pub covered_neg: Vec<usize>,
    pub uncovered: Vec<usize>,
}

pub fn covered_partition(c: &Clause, data: &Dataset) -> Result<Partition> {
    let bound = c.bind(data.schema())?;
    let mut p = Partition::default();
    for (i, s) in data.samples().iter().enumerate() {
        match (bound.covers(s), s.label) {
            (true, Label::Positive) => p.covered_pos.push(i),
            (true, Label::Negative) => p.covered_neg.push(i),
            (false, _) => p.uncovered.push(i),
        }
    }
    Ok(p)
}

/// Share of positives among the samples the clause covers.
pub fn clause_precision(c: &Clause, data: &Dataset) -> Result<f64> {
    let p = covered_partition(c, data)?;
    let covered = p.covered_pos.len() + p.covered_neg.len();
    if covered == 0 {
        return Err(LogicError::EmptyCoverage);
    }
    Ok(p.covered_pos.len() as f64 / covered as f64)
}

pub fn hypothesis_predict(h: &Hypothesis, schema: &Schema, s: &Sample) -> Result<Label> {
    Ok(h.bind(schema)?.predict(s))
}

// ---------------------------------------------------------------------------
// Serialization

/// Rounds to `decimals` places and drops trailing zeros: `16.10` → `16.1`.
pub fn format_number(v: f64, decimals: usize) -> String {
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn is_plain_atom(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_plain_number(s: &str) -> bool {
    let mut lx = Lexer::new(s);
    matches!(lx.next_token(), Ok(Some(Token { kind: Tok::Number(n), .. })) if n == s)
        && matches!(lx.next_token(), Ok(None))
}

fn atom(s: &str) -> String {
    if is_plain_atom(s) || is_plain_number(s) {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', "''"))
    }
}

fn render_literal(lit: &Literal, decimals: usize, var: &mut usize) -> String {
    match lit {
        Literal::CatEq { feature, value } if value == "true" => format!("{}(X)", atom(feature)),
        Literal::CatEq { feature, value } => format!("{}(X,{})", atom(feature), atom(value)),
        Literal::NegCatEq { feature, value } if value == "true" => {
            format!("not {}(X)", atom(feature))
        }
        Literal::NegCatEq { feature, value } => format!("not {}(X,{})", atom(feature), atom(value)),
        Literal::NumRange { feature, lo, hi } => {
            *var += 1;
            let v = format!("F{var}");
            let mut out = format!("{}(X,{v})", atom(feature));
            if lo.is_finite() {
                let _ = write!(out, ", {} =< {v}", format_number(*lo, decimals));
            }
            if hi.is_finite() {
                let _ = write!(out, ", {v} =< {}", format_number(*hi, decimals));
            }
            out
        }
    }
}

pub fn serialize_clause(c: &Clause, decimals: usize) -> String {
    let mut var = 0;
    let body = if c.body.is_empty() {
        "true".to_string()
    } else {
        c.body
            .iter()
            .map(|l| render_literal(l, decimals, &mut var))
            .collect::<Vec<_>>()
            .join(", ")
    };
    format!("{}(X) :- {body}.", atom(&c.head))
}

/// One clause per line, in hypothesis order.
pub fn serialize_prolog(h: &Hypothesis, decimals: usize) -> String {
    let mut out = String::new();
    for c in &h.clauses {
        out.push_str(&serialize_clause(c, decimals));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Atom(String),
    Var(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Neck,
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    kind: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, line: usize, col: usize, message: impl Into<String>) -> LogicError {
        LogicError::Parse {
            line,
            col,
            message: message.into(),
        }
    }

    fn digits(&mut self, out: &mut String) {
        while let Some(&c) = self.chars.peek() {
            if !c.is_ascii_digit() {
                break;
            }
            out.push(c);
            self.bump();
        }
    }

    fn next_token(&mut self) -> Result<Option<Token>> {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        let (line, col) = (self.line, self.col);
        let Some(c) = self.bump() else {
            return Ok(None);
        };
        let tok = |kind| Ok(Some(Token { kind, line, col }));
        match c {
            '(' => tok(Tok::LParen),
            ')' => tok(Tok::RParen),
            ',' => tok(Tok::Comma),
            '.' => tok(Tok::Dot),
            ':' if self.chars.peek() == Some(&'-') => {
                self.bump();
                tok(Tok::Neck)
            }
            '=' if self.chars.peek() == Some(&'<') => {
                self.bump();
                tok(Tok::Le)
            }
            '<' if self.chars.peek() == Some(&'=') => {
                self.bump();
                tok(Tok::Le)
            }
            '>' if self.chars.peek() == Some(&'=') => {
                self.bump();
                tok(Tok::Ge)
            }
            '\'' => {
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.err(line, col, "unterminated quoted atom")),
                        Some('\'') if self.chars.peek() == Some(&'\'') => {
                            self.bump();
                            s.push('\'');
                        }
                        Some('\'') => break,
                        Some(c) => s.push(c),
                    }
                }
                tok(Tok::Atom(s))
            }
            c if c.is_ascii_digit()
                || (c == '-' && self.chars.peek().is_some_and(|d| d.is_ascii_digit())) =>
            {
                let mut s = c.to_string();
                self.digits(&mut s);
                // a '.' only continues the number when a digit follows
                let mut look = self.chars.clone();
                if look.next() == Some('.') && look.next().is_some_and(|d| d.is_ascii_digit()) {
                    s.push('.');
                    self.bump();
                    self.digits(&mut s);
                }
                if matches!(self.chars.peek(), Some('e' | 'E')) {
                    let mut look = self.chars.clone();
                    look.next();
                    let mut n = look.next();
                    if matches!(n, Some('+' | '-')) {
                        n = look.next();
                    }
                    if n.is_some_and(|d| d.is_ascii_digit()) {
                        s.push(self.bump().unwrap());
                        if matches!(self.chars.peek(), Some('+' | '-')) {
                            s.push(self.bump().unwrap());
                        }
                        self.digits(&mut s);
                    }
                }
                tok(Tok::Number(s))
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = c.to_string();
                while let Some(&d) = self.chars.peek() {
                    if !(d.is_alphanumeric() || d == '_') {
                        break;
                    }
                    s.push(d);
                    self.bump();
                }
                if c.is_uppercase() || c == '_' {
                    tok(Tok::Var(s))
                } else {
                    tok(Tok::Atom(s))
                }
            }
            other => Err(self.err(line, col, format!("unexpected character `{other}`"))),
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

/// A numeric variable bound in the current clause body.
struct NumVar {
    name: String,
    literal: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .map_or(self.end, |t| (t.line, t.col))
    }

    fn err(&self, message: impl Into<String>) -> LogicError {
        let (line, col) = self.here();
        LogicError::Parse {
            line,
            col,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|t| t.kind.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn expect_x(&mut self) -> Result<()> {
        match self.peek() {
            Some(Tok::Var(v)) if v == "X" => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err("expected the clause variable `X`")),
        }
    }

    fn atom(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Atom(a)) => {
                let a = a.clone();
                self.pos += 1;
                Ok(a)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn number(&mut self) -> Result<f64> {
        match self.peek() {
            Some(Tok::Number(n)) => {
                let v = n.parse().map_err(|_| self.err("invalid number"))?;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err("expected a number")),
        }
    }

    fn clause(&mut self) -> Result<Clause> {
        let head = self.atom("a clause head")?;
        self.expect(Tok::LParen, "`(`")?;
        self.expect_x()?;
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Neck, "`:-`")?;
        let mut clause = Clause::new(head);
        if self.peek() == Some(&Tok::Atom("true".into()))
            && self.tokens.get(self.pos + 1).map(|t| &t.kind) == Some(&Tok::Dot)
        {
            self.pos += 2;
            return Ok(clause);
        }
        let mut vars: Vec<NumVar> = Vec::new();
        loop {
            self.body_item(&mut clause, &mut vars)?;
            match self.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::Dot) => break,
                _ => {
                    self.pos -= 1;
                    return Err(self.err("expected `,` or `.`"));
                }
            }
        }
        Ok(clause)
    }

    fn var_literal(&self, vars: &[NumVar], name: &str) -> Result<usize> {
        vars.iter()
            .find(|v| v.name == name)
            .map(|v| v.literal)
            .ok_or_else(|| self.err(format!("variable `{name}` is not bound by a feature")))
    }

    fn tighten(clause: &mut Clause, literal: usize, lower: Option<f64>, upper: Option<f64>) {
        if let Literal::NumRange { lo, hi, .. } = &mut clause.body[literal] {
            if let Some(l) = lower {
                *lo = lo.max(l);
            }
            if let Some(u) = upper {
                *hi = hi.min(u);
            }
        }
    }

    fn body_item(&mut self, clause: &mut Clause, vars: &mut Vec<NumVar>) -> Result<()> {
        let start = self.here();
        match self.peek().cloned() {
            Some(Tok::Atom(a)) if a == "not" => {
                self.pos += 1;
                let feature = self.atom("a feature name after `not`")?;
                self.expect(Tok::LParen, "`(`")?;
                self.expect_x()?;
                let value = self.optional_value()?;
                clause.body.push(Literal::NegCatEq { feature, value });
            }
            Some(Tok::Atom(feature)) => {
                self.pos += 1;
                self.expect(Tok::LParen, "`(`")?;
                self.expect_x()?;
                if self.peek() == Some(&Tok::Comma) {
                    if let Some(Tok::Var(v)) = self.tokens.get(self.pos + 1).map(|t| t.kind.clone())
                    {
                        self.pos += 2;
                        self.expect(Tok::RParen, "`)`")?;
                        if vars.iter().any(|n| n.name == v) {
                            return Err(self.err(format!("variable `{v}` bound twice")));
                        }
                        vars.push(NumVar {
                            name: v,
                            literal: clause.body.len(),
                        });
                        clause.body.push(Literal::NumRange {
                            feature,
                            lo: f64::NEG_INFINITY,
                            hi: f64::INFINITY,
                        });
                        return Ok(());
                    }
                }
                let value = self.optional_value()?;
                clause.body.push(Literal::CatEq { feature, value });
            }
            Some(Tok::Number(_)) => {
                // lo =< V  or  lo =< V =< hi
                let lo = self.number()?;
                self.expect(Tok::Le, "`=<`")?;
                let v = match self.next() {
                    Some(Tok::Var(v)) => v,
                    _ => {
                        self.pos -= 1;
                        return Err(self.err("expected a variable"));
                    }
                };
                let lit = self.var_literal(vars, &v)?;
                let mut hi = None;
                if self.peek() == Some(&Tok::Le) {
                    self.pos += 1;
                    hi = Some(self.number()?);
                }
                Self::tighten(clause, lit, Some(lo), hi);
            }
            Some(Tok::Var(v)) => {
                // V =< hi  or  V >= lo
                self.pos += 1;
                let lit = self.var_literal(vars, &v)?;
                match self.next() {
                    Some(Tok::Le) => {
                        let hi = self.number()?;
                        Self::tighten(clause, lit, None, Some(hi));
                    }
                    Some(Tok::Ge) => {
                        let lo = self.number()?;
                        Self::tighten(clause, lit, Some(lo), None);
                    }
                    _ => {
                        self.pos -= 1;
                        return Err(self.err("expected `=<` or `>=`"));
                    }
                }
            }
            _ => return Err(self.err("expected a body literal")),
        }
        if let Some(Literal::NumRange { lo, hi, feature }) = clause.body.last() {
            if lo > hi {
                return Err(LogicError::Parse {
                    line: start.0,
                    col: start.1,
                    message: format!("empty interval on `{feature}`"),
                });
            }
        }
        Ok(())
    }

    /// After `f(X`: either `)` (value `true`) or `,value)`.
    fn optional_value(&mut self) -> Result<String> {
        match self.next() {
            Some(Tok::RParen) => Ok("true".into()),
            Some(Tok::Comma) => {
                let v = match self.next() {
                    Some(Tok::Atom(a)) | Some(Tok::Number(a)) => a,
                    _ => {
                        self.pos -= 1;
                        return Err(self.err("expected a value"));
                    }
                };
                self.expect(Tok::RParen, "`)`")?;
                Ok(v)
            }
            _ => {
                self.pos -= 1;
                Err(self.err("expected `)` or `,`"))
            }
        }
    }
}

/// Parses a rule file. Accepts both `lo =< F, F =< hi` and the chained
/// `lo =< F =< hi` forms; `%` starts a comment.
pub fn parse_prolog(text: &str) -> Result<Hypothesis> {
    let mut lx = Lexer::new(text);
    let mut tokens = Vec::new();
    while let Some(t) = lx.next_token()? {
        tokens.push(t);
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        end: (lx.line, lx.col),
    };
    let mut clauses = Vec::new();
    while p.peek().is_some() {
        clauses.push(p.clause()?);
    }
    Ok(Hypothesis { clauses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureKind, Schema};

    fn cat(f: &str, v: &str) -> Literal {
        Literal::CatEq {
            feature: f.into(),
            value: v.into(),
        }
    }

    fn range(f: &str, lo: f64, hi: f64) -> Literal {
        Literal::NumRange {
            feature: f.into(),
            lo,
            hi,
        }
    }

    fn schema() -> Schema {
        Schema::new(
            vec![
                (
                    "thal".into(),
                    FeatureKind::categorical(["3", "6", "7"]).unwrap(),
                ),
                (
                    "chest_pain".into(),
                    FeatureKind::categorical(["1", "2", "3", "4"]).unwrap(),
                ),
                ("f1".into(), FeatureKind::Numeric),
            ],
            "disease",
            "yes",
            None,
        )
        .unwrap()
    }

    fn sample(s: &Schema, thal: &str, cp: &str, f1: f64) -> Sample {
        Sample {
            values: vec![
                Value::Category(s.category_index(0, thal).unwrap()),
                Value::Category(s.category_index(1, cp).unwrap()),
                Value::Number(f1),
            ],
            label: Label::Positive,
        }
    }

    #[test]
    fn coverage_examples() {
        let s = schema();
        let c = Clause {
            head: "disease".into(),
            body: vec![cat("thal", "7"), cat("chest_pain", "4")],
        };
        assert!(covers(&c, &s, &sample(&s, "7", "4", 0.0)).unwrap());
        assert!(!covers(&c, &s, &sample(&s, "7", "3", 0.0)).unwrap());
        assert!(covers(&Clause::new("disease"), &s, &sample(&s, "3", "1", 0.0)).unwrap());

        let r = Clause {
            head: "disease".into(),
            body: vec![range("f1", 12.02, 17.97)],
        };
        assert!(!covers(&r, &s, &sample(&s, "3", "1", 18.0)).unwrap());
        assert!(covers(&r, &s, &sample(&s, "3", "1", 17.97)).unwrap());

        let neg = Clause {
            head: "disease".into(),
            body: vec![Literal::NegCatEq {
                feature: "thal".into(),
                value: "7".into(),
            }],
        };
        assert!(covers(&neg, &s, &sample(&s, "3", "1", 0.0)).unwrap());
        assert!(!covers(&neg, &s, &sample(&s, "7", "1", 0.0)).unwrap());
    }

    #[test]
    fn binding_errors() {
        let s = schema();
        let bad = |l: Literal| {
            Clause {
                head: "d".into(),
                body: vec![l],
            }
            .bind(&s)
            .unwrap_err()
        };
        assert_eq!(
            bad(cat("nope", "1")),
            LogicError::UnknownFeature("nope".into())
        );
        assert!(matches!(
            bad(cat("thal", "9")),
            LogicError::UnknownValue { .. }
        ));
        assert!(matches!(bad(cat("f1", "9")), LogicError::KindMismatch(_)));
        assert!(matches!(
            bad(range("thal", 0.0, 1.0)),
            LogicError::KindMismatch(_)
        ));
        assert!(matches!(
            bad(range("f1", 2.0, 1.0)),
            LogicError::InvalidRange { .. }
        ));
    }

    #[test]
    fn hypothesis_is_a_disjunction() {
        let s = schema();
        let x = sample(&s, "6", "2", 5.0);
        let empty = Hypothesis::default();
        assert_eq!(hypothesis_predict(&empty, &s, &x).unwrap(), Label::Negative);
        let h = Hypothesis::new(vec![
            Clause {
                head: "d".into(),
                body: vec![cat("thal", "7")],
            },
            Clause {
                head: "d".into(),
                body: vec![range("f1", 4.0, 6.0)],
            },
        ]);
        assert_eq!(hypothesis_predict(&h, &s, &x).unwrap(), Label::Positive);
    }

    #[test]
    fn intervals_merge_by_intersection() {
        let c = Clause::new("d")
            .with_literal(range("f1", f64::NEG_INFINITY, 5.0))
            .unwrap()
            .with_literal(range("f1", 2.0, f64::INFINITY))
            .unwrap();
        assert_eq!(c.body, vec![range("f1", 2.0, 5.0)]);
        assert!(c.with_literal(range("f1", 6.0, f64::INFINITY)).is_none());
        assert_eq!(c.with_literal(range("f1", 2.0, 5.0)).unwrap(), c);
    }

    #[test]
    fn serialization_forms() {
        let c = Clause {
            head: "red".into(),
            body: vec![range("f1", 12.02, 17.97), range("f2", 12.25, 16.1)],
        };
        assert_eq!(
            serialize_clause(&c, 2),
            "red(X) :- f1(X,F1), 12.02 =< F1, F1 =< 17.97, f2(X,F2), 12.25 =< F2, F2 =< 16.1."
        );
        assert_eq!(serialize_clause(&Clause::new("red"), 2), "red(X) :- true.");
        let c = Clause {
            head: "h".into(),
            body: vec![
                Literal::NegCatEq {
                    feature: "major_vessels".into(),
                    value: "0".into(),
                },
                cat("angina", "true"),
                range("age", f64::NEG_INFINITY, 40.004),
                cat("colour", "Dark red"),
            ],
        };
        assert_eq!(
            serialize_clause(&c, 2),
            "h(X) :- not major_vessels(X,0), angina(X), age(X,F1), F1 =< 40, colour(X,'Dark red')."
        );
    }

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(16.1, 2), "16.1");
        assert_eq!(format_number(106.0, 2), "106");
        assert_eq!(format_number(-0.001, 2), "0");
        assert_eq!(format_number(0.125, 1), "0.1");
    }

    #[test]
    fn parses_chained_and_whitespace_variants() {
        let text = "% demo\nred(X):- f1(X,F1), 12.02 =< F1 <= 17.97,\n   f2(X,F2), 12.25 =< F2 <= 16.1 .\n";
        let h = parse_prolog(text).unwrap();
        assert_eq!(
            h.clauses[0].body,
            vec![range("f1", 12.02, 17.97), range("f2", 12.25, 16.1)]
        );
        let compact =
            parse_prolog("red(X):-f1(X,F1),12.02=<F1,F1=<17.97,f2(X,F2),12.25=<F2,F2=<16.1.")
                .unwrap();
        assert_eq!(h, compact);
    }

    #[test]
    fn parse_errors_are_positioned() {
        match parse_prolog("h(X) :- a(X,1),\n  b(X,.") {
            Err(LogicError::Parse { line, col, .. }) => assert_eq!((line, col), (2, 7)),
            other => panic!("{other:?}"),
        }
        assert!(parse_prolog("h(X) :- a(X,1)").is_err());
        assert!(parse_prolog("h(Y) :- true.").is_err());
        assert!(parse_prolog("h(X) :- 3 =< F1.").is_err());
        assert!(parse_prolog("h(X) :- a(X,F1), 5 =< F1, F1 =< 4.").is_err());
        assert!(parse_prolog("h(X) :- a(X) ; b(X).").is_err());
    }
}
