//! The `.crn` network DSL, `.dcmp.json` decomposition documents and the
//! canonical JSON report writer.
//!
//! ```text
//! # comment
//! @species S1, S2, S3, S5
//! S1 + S2 -> 2 S2 ; k = 1.0
//! 3 S3 <-> 3 S5 ; kf = 1, kr = 1
//! 0 -> S1 ; k = 0.5
//! @conserve 1*S1 + 1*S2 = 2
//! @equilibrium S1 = 1, S2 = 1
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{Complex, ConservationHint, MassActionSystem, ModelError, Reaction};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("rate constant must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("self-loop reaction")]
    SelfLoop,
    #[error("duplicate reaction (first declared on line {0})")]
    DuplicateReaction(usize),
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
    #[error("equilibrium does not list species `{0}`")]
    MissingEquilibrium(String),
    #[error("{0}")]
    Model(ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

/// A parsed `.crn` file.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDocument {
    pub system: MassActionSystem,
    /// Point given by an `@equilibrium` line, in species order.
    pub equilibrium: Option<Vec<f64>>,
}

impl NetworkDocument {
    pub fn hints(&self) -> &[ConservationHint] {
        self.system.conservation_hints()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Arrow,
    BiArrow,
    Semi,
    Eq,
    Comma,
    Directive(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn lex(line: &str, lineno: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, kind| ParseError { line: lineno, col, kind };
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '*' => Some(Tok::Star),
            ';' => Some(Tok::Semi),
            '=' => Some(Tok::Eq),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, col });
            i += 1;
            continue;
        }
        if c == '-' {
            if chars.get(i + 1) == Some(&'>') {
                out.push(Token { tok: Tok::Arrow, col });
                i += 2;
            } else {
                out.push(Token { tok: Tok::Minus, col });
                i += 1;
            }
            continue;
        }
        if c == '<' {
            if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
                out.push(Token { tok: Tok::BiArrow, col });
                i += 3;
                continue;
            }
            return Err(err(col, ParseErrorKind::UnknownToken("<".into())));
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Token { tok: Tok::Num(chars[start..i].iter().collect()), col });
            continue;
        }
        if c.is_alphabetic() || c == '_' || c == '@' {
            let start = i;
            i += 1;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.strip_prefix('@') {
                Some(d) => Tok::Directive(d.to_string()),
                None => Tok::Ident(word),
            };
            out.push(Token { tok, col });
            continue;
        }
        return Err(err(col, ParseErrorKind::UnknownToken(c.to_string())));
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn next(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.tok);
        self.pos += 1;
        t
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { line: self.line, col: self.col(), kind }
    }

    fn syntax(&self, msg: impl Into<String>) -> ParseError {
        self.error(ParseErrorKind::Syntax(msg.into()))
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<&'a str, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.syntax(format!("expected {what}"))),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let negative = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.peek() {
            Some(Tok::Num(s)) => {
                let v: f64 = s.parse().map_err(|_| self.syntax(format!("malformed number `{s}`")))?;
                if !v.is_finite() {
                    return Err(self.syntax(format!("number `{s}` out of range")));
                }
                self.pos += 1;
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.syntax("expected a number")),
        }
    }

    fn done(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.syntax("unexpected trailing input")),
        }
    }
}

type RawComplex = Vec<(String, u32)>;

struct RawReaction {
    line: usize,
    col: usize,
    reactant: RawComplex,
    product: RawComplex,
    rate: f64,
}

fn parse_complex(cur: &mut Cursor) -> Result<RawComplex, ParseError> {
    if let Some(Tok::Num(s)) = cur.peek() {
        let after = cur.toks.get(cur.pos + 1).map(|t| &t.tok);
        if s == "0" && !matches!(after, Some(Tok::Ident(_))) {
            cur.pos += 1;
            return Ok(Vec::new());
        }
    }
    let mut terms = Vec::new();
    loop {
        let coeff = match cur.peek() {
            Some(Tok::Num(s)) => {
                let c: u32 = s
                    .parse()
                    .ok()
                    .filter(|&c| c > 0)
                    .ok_or_else(|| cur.syntax(format!("stoichiometric coefficient must be a positive integer, got `{s}`")))?;
                cur.pos += 1;
                c
            }
            _ => 1,
        };
        let name = cur.ident("species name")?;
        terms.push((name.to_string(), coeff));
        if cur.peek() == Some(&Tok::Plus) {
            cur.pos += 1;
        } else {
            return Ok(terms);
        }
    }
}

fn parse_rates(cur: &mut Cursor, reversible: bool) -> Result<(f64, Option<f64>), ParseError> {
    let mut seen: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    loop {
        let col = cur.col();
        let key = cur.ident("rate name")?;
        cur.expect(&Tok::Eq, "`=`")?;
        let val_col = cur.col();
        let v = cur.number()?;
        let allowed: &[&str] = if reversible { &["kf", "kr"] } else { &["k"] };
        if !allowed.contains(&key) {
            return Err(ParseError {
                line: cur.line,
                col,
                kind: ParseErrorKind::Syntax(format!("unexpected rate `{key}`, expected {}", allowed.join(" and "))),
            });
        }
        if seen.insert(key.to_string(), (v, val_col)).is_some() {
            return Err(ParseError { line: cur.line, col, kind: ParseErrorKind::Syntax(format!("rate `{key}` given twice")) });
        }
        if cur.peek() == Some(&Tok::Comma) {
            cur.pos += 1;
        } else {
            break;
        }
    }
    cur.done()?;
    for (v, col) in seen.values() {
        if *v <= 0.0 {
            return Err(ParseError { line: cur.line, col: *col, kind: ParseErrorKind::NonPositiveRate(*v) });
        }
    }
    if reversible {
        match (seen.get("kf"), seen.get("kr")) {
            (Some(f), Some(r)) => Ok((f.0, Some(r.0))),
            _ => Err(cur.syntax("reversible reaction needs both kf and kr")),
        }
    } else {
        Ok((seen["k"].0, None))
    }
}

struct RawHint {
    line: usize,
    terms: Vec<(String, f64, usize)>,
    level: f64,
}

fn parse_conserve(cur: &mut Cursor) -> Result<RawHint, ParseError> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    if cur.peek() == Some(&Tok::Minus) {
        cur.pos += 1;
        sign = -1.0;
    }
    loop {
        let col = cur.col();
        let weight = if let Some(Tok::Num(_)) = cur.peek() {
            let w = cur.number()?;
            cur.expect(&Tok::Star, "`*`")?;
            w
        } else {
            1.0
        };
        let name = cur.ident("species name")?;
        terms.push((name.to_string(), sign * weight, col));
        match cur.peek() {
            Some(Tok::Plus) => sign = 1.0,
            Some(Tok::Minus) => sign = -1.0,
            _ => break,
        }
        cur.pos += 1;
    }
    cur.expect(&Tok::Eq, "`=`")?;
    let level = cur.number()?;
    cur.done()?;
    Ok(RawHint { line: cur.line, terms, level })
}

fn parse_equilibrium(cur: &mut Cursor) -> Result<Vec<(String, f64, usize)>, ParseError> {
    let mut out = Vec::new();
    loop {
        let col = cur.col();
        let name = cur.ident("species name")?;
        cur.expect(&Tok::Eq, "`=`")?;
        let v = cur.number()?;
        if v <= 0.0 {
            return Err(cur.syntax("equilibrium values must be positive"));
        }
        out.push((name.to_string(), v, col));
        if cur.peek() == Some(&Tok::Comma) {
            cur.pos += 1;
        } else {
            break;
        }
    }
    cur.done()?;
    Ok(out)
}

fn parse_species_list(cur: &mut Cursor) -> Result<Vec<(String, usize)>, ParseError> {
    let mut out = Vec::new();
    loop {
        let col = cur.col();
        out.push((cur.ident("species name")?.to_string(), col));
        if cur.peek() == Some(&Tok::Comma) {
            cur.pos += 1;
        } else {
            break;
        }
    }
    cur.done()?;
    Ok(out)
}

/// Parses a `.crn` document.
pub fn parse_network(text: &str) -> Result<NetworkDocument, ParseError> {
    let mut raw = Vec::new();
    let mut hints = Vec::new();
    let mut equilibrium: Option<(usize, Vec<(String, f64, usize)>)> = None;
    let mut declared: Option<(usize, Vec<(String, usize)>)> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let toks = lex(line, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor { toks: &toks, pos: 0, line: lineno, end_col: line.chars().count() + 1 };
        if let Some(Tok::Directive(d)) = cur.peek() {
            cur.pos += 1;
            match d.as_str() {
                "conserve" => hints.push(parse_conserve(&mut cur)?),
                "equilibrium" => {
                    if equilibrium.is_some() {
                        return Err(ParseError { line: lineno, col: 1, kind: ParseErrorKind::Syntax("equilibrium given twice".into()) });
                    }
                    equilibrium = Some((lineno, parse_equilibrium(&mut cur)?));
                }
                "species" => {
                    if declared.is_some() || !raw.is_empty() {
                        return Err(ParseError {
                            line: lineno,
                            col: 1,
                            kind: ParseErrorKind::Syntax("@species must come once, before any reaction".into()),
                        });
                    }
                    declared = Some((lineno, parse_species_list(&mut cur)?));
                }
                other => {
                    return Err(ParseError { line: lineno, col: 1, kind: ParseErrorKind::UnknownToken(format!("@{other}")) })
                }
            }
            continue;
        }
        let col = cur.col();
        let reactant = parse_complex(&mut cur)?;
        let reversible = match cur.next() {
            Some(Tok::Arrow) => false,
            Some(Tok::BiArrow) => true,
            _ => {
                cur.pos -= 1;
                return Err(cur.syntax("expected `->` or `<->`"));
            }
        };
        let product = parse_complex(&mut cur)?;
        cur.expect(&Tok::Semi, "`;`")?;
        let (kf, kr) = parse_rates(&mut cur, reversible)?;
        raw.push(RawReaction { line: lineno, col, reactant: reactant.clone(), product: product.clone(), rate: kf });
        if let Some(kr) = kr {
            raw.push(RawReaction { line: lineno, col, reactant: product, product: reactant, rate: kr });
        }
    }
    if raw.is_empty() {
        let line = text.lines().count().max(1);
        return Err(ParseError { line, col: 1, kind: ParseErrorKind::Model(ModelError::NoReactions) });
    }

    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    if let Some((line, list)) = &declared {
        for (name, col) in list {
            if index.insert(name.clone(), names.len()).is_some() {
                return Err(ParseError { line: *line, col: *col, kind: ParseErrorKind::Model(ModelError::DuplicateSpecies(name.clone())) });
            }
            names.push(name.clone());
        }
    }
    for r in &raw {
        for (name, _) in r.reactant.iter().chain(&r.product) {
            if declared.is_some() && !index.contains_key(name) {
                return Err(ParseError { line: r.line, col: r.col, kind: ParseErrorKind::UnknownSpecies(name.clone()) });
            }
            if !index.contains_key(name) {
                index.insert(name.clone(), names.len());
                names.push(name.clone());
            }
        }
    }
    let n = names.len();
    let densify = |c: &RawComplex| {
        let mut v = vec![0u32; n];
        for (name, k) in c {
            v[index[name]] += k;
        }
        v
    };
    let mut seen: HashMap<(Vec<u32>, Vec<u32>), usize> = HashMap::new();
    let mut reactions = Vec::new();
    for r in &raw {
        let (a, b) = (densify(&r.reactant), densify(&r.product));
        if a == b {
            return Err(ParseError { line: r.line, col: r.col, kind: ParseErrorKind::SelfLoop });
        }
        if let Some(&first) = seen.get(&(a.clone(), b.clone())) {
            return Err(ParseError { line: r.line, col: r.col, kind: ParseErrorKind::DuplicateReaction(first) });
        }
        seen.insert((a.clone(), b.clone()), r.line);
        reactions.push(Reaction::new(a, b, r.rate));
    }
    let model_err = |line, kind| ParseError { line, col: 1, kind: ParseErrorKind::Model(kind) };
    let system = MassActionSystem::new(names.clone(), reactions).map_err(|e| model_err(raw[0].line, e))?;

    let lookup = |line: usize, name: &str, col: usize| {
        index
            .get(name)
            .copied()
            .ok_or(ParseError { line, col, kind: ParseErrorKind::UnknownSpecies(name.to_string()) })
    };
    let mut built = Vec::new();
    for h in &hints {
        let mut weights = vec![0.0; n];
        for (name, w, col) in &h.terms {
            weights[lookup(h.line, name, *col)?] += w;
        }
        built.push(ConservationHint { weights, level: h.level });
    }
    let system = system.with_hints(built).map_err(|e| model_err(1, e))?;

    let equilibrium = match equilibrium {
        None => None,
        Some((line, entries)) => {
            let mut x = vec![None; n];
            for (name, v, col) in entries {
                x[lookup(line, &name, col)?] = Some(v);
            }
            let mut out = Vec::with_capacity(n);
            for (i, v) in x.into_iter().enumerate() {
                out.push(v.ok_or(ParseError {
                    line,
                    col: 1,
                    kind: ParseErrorKind::MissingEquilibrium(names[i].clone()),
                })?);
            }
            Some(out)
        }
    };
    Ok(NetworkDocument { system, equilibrium })
}

fn write_complex(out: &mut String, c: &Complex, names: &[String]) {
    let _ = write!(out, "{}", c.display(names));
}

/// Prints a network as `.crn` text. Species order is pinned with `@species`
/// and every reaction is written with `->`, so
/// `parse_network(print_network(doc))` yields the same network.
pub fn print_network(doc: &NetworkDocument) -> String {
    let names = doc.system.species_names();
    let mut out = String::new();
    let _ = writeln!(out, "@species {}", names.join(", "));
    for r in doc.system.reactions() {
        write_complex(&mut out, &r.reactant, &names);
        out.push_str(" -> ");
        write_complex(&mut out, &r.product, &names);
        let _ = writeln!(out, " ; k = {}", r.rate);
    }
    for h in doc.system.conservation_hints() {
        out.push_str("@conserve ");
        let mut first = true;
        for (w, name) in h.weights.iter().zip(&names) {
            if *w == 0.0 {
                continue;
            }
            if first {
                if *w < 0.0 {
                    out.push_str("- ");
                }
            } else {
                out.push_str(if *w < 0.0 { " - " } else { " + " });
            }
            let _ = write!(out, "{}*{}", w.abs(), name);
            first = false;
        }
        if first {
            // an all-zero hint: keep it parseable
            let _ = write!(out, "0*{}", names[0]);
        }
        let _ = writeln!(out, " = {}", h.level);
    }
    if let Some(x) = &doc.equilibrium {
        out.push_str("@equilibrium ");
        let parts: Vec<String> = names.iter().zip(x).map(|(s, v)| format!("{s} = {v}")).collect();
        out.push_str(&parts.join(", "));
        out.push('\n');
    }
    out
}

/// Subnetwork tags accepted in decomposition documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartTag {
    ComplexBalanced,
    OneDim,
    TwoSpecies,
    AutocatalyticPair,
}

impl PartTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PartTag::ComplexBalanced => "complex_balanced",
            PartTag::OneDim => "one_dim",
            PartTag::TwoSpecies => "two_species",
            PartTag::AutocatalyticPair => "autocatalytic_pair",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartDeclaration {
    pub tag: PartTag,
    pub reactions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionDocument {
    #[serde(default = "schema_version")]
    pub schema_version: u64,
    pub parts: Vec<PartDeclaration>,
}

fn schema_version() -> u64 {
    SCHEMA_VERSION
}

impl DecompositionDocument {
    pub fn new(parts: Vec<PartDeclaration>) -> Self {
        DecompositionDocument { schema_version: SCHEMA_VERSION, parts }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompositionDocError {
    #[error("invalid decomposition JSON: {0}")]
    Json(String),
    #[error("unsupported schema_version {0}")]
    Schema(u64),
    #[error("decomposition has no parts")]
    Empty,
    #[error("part {0} has no reactions")]
    EmptyPart(usize),
    #[error("part {part}: reaction index {index} out of range (network has {len} reactions)")]
    OutOfRange { part: usize, index: usize, len: usize },
    #[error("reaction {index} assigned to parts {first} and {second}")]
    Overlap { index: usize, first: usize, second: usize },
    #[error("reaction {0} is not assigned to any part")]
    Uncovered(usize),
}

/// Parses a `.dcmp.json` document against its parent network. With
/// `total`, every parent reaction must belong to some part.
pub fn parse_decomposition(
    text: &str,
    parent: &MassActionSystem,
    total: bool,
) -> Result<DecompositionDocument, DecompositionDocError> {
    let doc: DecompositionDocument = serde_json::from_str(text).map_err(|e| DecompositionDocError::Json(e.to_string()))?;
    check_decomposition(&doc, parent, total)?;
    Ok(doc)
}

pub fn check_decomposition(
    doc: &DecompositionDocument,
    parent: &MassActionSystem,
    total: bool,
) -> Result<(), DecompositionDocError> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(DecompositionDocError::Schema(doc.schema_version));
    }
    if doc.parts.is_empty() {
        return Err(DecompositionDocError::Empty);
    }
    let len = parent.num_reactions();
    let mut owner: Vec<Option<usize>> = vec![None; len];
    for (p, part) in doc.parts.iter().enumerate() {
        if part.reactions.is_empty() {
            return Err(DecompositionDocError::EmptyPart(p));
        }
        for &index in &part.reactions {
            if index >= len {
                return Err(DecompositionDocError::OutOfRange { part: p, index, len });
            }
            if let Some(first) = owner[index] {
                return Err(DecompositionDocError::Overlap { index, first, second: p });
            }
            owner[index] = Some(p);
        }
    }
    if total {
        if let Some(i) = owner.iter().position(Option::is_none) {
            return Err(DecompositionDocError::Uncovered(i));
        }
    }
    Ok(())
}

pub fn print_decomposition(doc: &DecompositionDocument) -> String {
    emit_report(doc)
}

/// Canonical JSON for any report: keys sorted, floats with 17 significant
/// digits, and a top-level `schema_version`.
pub fn emit_report<T: Serialize + ?Sized>(report: &T) -> String {
    let mut value = serde_json::to_value(report).unwrap_or(Value::Null);
    match &mut value {
        Value::Object(map) => {
            map.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
        }
        other => {
            let mut map = serde_json::Map::new();
            map.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
            map.insert("value".into(), other.take());
            value = Value::Object(map);
        }
    }
    let mut out = String::new();
    write_value(&mut out, &value, 0);
    out.push('\n');
    out
}

/// Formats a double the way reports do.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap_or_default()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&"  ".repeat(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&"  ".repeat(indent + 1));
                out.push_str(&serde_json::to_string(k).unwrap_or_default());
                out.push_str(": ");
                write_value(out, &map[*k], indent + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
    }
}

/// Species sets of each declared part, as parent species indices.
pub fn part_species(doc: &DecompositionDocument, parent: &MassActionSystem) -> Vec<Vec<usize>> {
    doc.parts
        .iter()
        .map(|p| {
            let mut set = HashSet::new();
            for &i in &p.reactions {
                let r = &parent.reactions()[i];
                for s in 0..parent.num_species() {
                    if r.reactant.coeff(s) > 0 || r.product.coeff(s) > 0 {
                        set.insert(s);
                    }
                }
            }
            let mut v: Vec<usize> = set.into_iter().collect();
            v.sort_unstable();
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::stoichiometric_matrix;

    #[test]
    fn single_reaction() {
        let doc = parse_network("S1 + S2 -> 2 S2 ; k = 1.0").unwrap();
        assert_eq!(stoichiometric_matrix(&doc.system), vec![vec![-1], vec![1]]);
    }

    #[test]
    fn reversible_expands() {
        let doc = parse_network("3 S3 <-> 3 S5 ; kf = 1, kr = 2").unwrap();
        let r = doc.system.reactions();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].reaction_vector(), vec![-3, 3]);
        assert_eq!(r[1].reaction_vector(), vec![3, -3]);
        assert_eq!(r[1].rate, 2.0);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_network("S1 -> S1 ; k = 1").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::SelfLoop);
        let e = parse_network("S1 -> S2 ; k = 0").unwrap_err();
        assert_eq!((e.line, e.col), (1, 16));
        assert!(matches!(e.kind, ParseErrorKind::NonPositiveRate(_)));
        let e = parse_network("S1 -> S2 ; k = 1\n\nS1 -> S2 ; k = 3").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateReaction(1));
        assert_eq!(e.line, 3);
        let e = parse_network("S1 => S2").unwrap_err();
        assert_eq!((e.line, e.col), (1, 5));
        let e = parse_network("S1 S2 ; k = 1").unwrap_err();
        assert_eq!((e.line, e.col), (1, 4));
        let e = parse_network("S1 -> S2 ; k = 1 $").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownToken("$".into()));
    }

    #[test]
    fn directives() {
        let doc = parse_network(
            "# iso\nS1 <-> S2 ; kf = 1, kr = 2\n@conserve 1*S1 + S2 = 3\n@equilibrium S2 = 1, S1 = 2\n",
        )
        .unwrap();
        assert_eq!(doc.hints()[0], ConservationHint { weights: vec![1.0, 1.0], level: 3.0 });
        assert_eq!(doc.equilibrium, Some(vec![2.0, 1.0]));
        assert!(parse_network("S1 -> S2 ; k = 1\n@conserve S3 = 1").is_err());
        assert!(parse_network("S1 -> S2 ; k = 1\n@equilibrium S1 = 1").is_err());
    }

    #[test]
    fn species_directive_fixes_order() {
        let doc = parse_network("@species A, B, C\nC -> B ; k = 1\nB -> A ; k = 1").unwrap();
        assert_eq!(doc.system.species_names(), vec!["A", "B", "C"]);
        let e = parse_network("@species A, B\nC -> B ; k = 1").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownSpecies("C".into()));
        assert!(parse_network("S1 -> S2 ; k = 1\n@species S1, S2").is_err());
        assert!(parse_network("@species A, A\nA -> B ; k = 1").is_err());
    }

    #[test]
    fn zero_complex() {
        let doc = parse_network("0 -> S1 ; k = 1\nS1 -> 0 ; k = 2").unwrap();
        assert!(doc.system.reactions()[0].reactant.is_zero());
    }

    #[test]
    fn print_round_trip() {
        let text = "S2 + S1 -> 2 S1 ; k = 0.1\nS3 <-> 0 ; kf = 1e-3, kr = 7\n@conserve -2*S1 + S3 = 1.5\n@equilibrium S1 = 1, S2 = 2, S3 = 3\n";
        let doc = parse_network(text).unwrap();
        let again = parse_network(&print_network(&doc)).unwrap();
        assert_eq!(doc, again);
    }

    #[test]
    fn decomposition_documents() {
        let parent = parse_network("S1 <-> S2 ; kf = 1, kr = 1\nS2 -> S3 ; k = 1").unwrap().system;
        let doc = parse_decomposition(r#"{"parts":[{"tag":"one_dim","reactions":[0,1]}]}"#, &parent, false).unwrap();
        assert_eq!(doc.parts[0].tag, PartTag::OneDim);
        assert_eq!(
            parse_decomposition(r#"{"parts":[{"tag":"one_dim","reactions":[0,1]}]}"#, &parent, true),
            Err(DecompositionDocError::Uncovered(2))
        );
        assert!(matches!(
            parse_decomposition(r#"{"parts":[{"tag":"one_dim","reactions":[0,1]},{"tag":"one_dim","reactions":[1,2]}]}"#, &parent, false),
            Err(DecompositionDocError::Overlap { index: 1, .. })
        ));
        assert_eq!(parse_decomposition(r#"{"parts":[]}"#, &parent, false), Err(DecompositionDocError::Empty));
        assert!(matches!(
            parse_decomposition(r#"{"parts":[{"tag":"one_dim","reactions":[9]}]}"#, &parent, false),
            Err(DecompositionDocError::OutOfRange { .. })
        ));
        assert!(parse_decomposition(r#"{"parts":[{"tag":"blob","reactions":[0]}]}"#, &parent, false).is_err());
        let text = print_decomposition(&doc);
        assert_eq!(parse_decomposition(&text, &parent, false).unwrap(), doc);
    }

    #[test]
    fn emitter_is_canonical() {
        #[derive(Serialize)]
        struct R {
            zeta: f64,
            alpha: Vec<i32>,
            name: &'static str,
        }
        let text = emit_report(&R { zeta: 0.1, alpha: vec![1, 2], name: "x" });
        assert_eq!(
            text,
            "{\n  \"alpha\": [\n    1,\n    2\n  ],\n  \"name\": \"x\",\n  \"schema_version\": 1,\n  \"zeta\": 1.0000000000000001e-1\n}\n"
        );
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(emit_report(&v), text);
    }
}
