//! The knowledge-base text format.
//!
//! One statement per line, `#` starts a comment, tokens are runs of
//! `[A-Za-z0-9_]`, domain paths join tokens with `@`. Eight statement heads:
//!
//! ```text
//! domain PATH
//! alias NAME = PATH
//! delta PATH , PATH -> PATH
//! tier meta PATH scope PATH          # scope * means the object-tier top
//! triple REL ( CONCEPT , CONCEPT ) @ PATH [conf=REAL]
//! meta REL PROPERTY @ PATH
//! bridge CONCEPT @ PATH ~ CONCEPT @ PATH
//! fact SUBJECT TOKEN @ PATH -> CONCEPT [conf=REAL] [freq=INT]
//! ```
//!
//! Parsing is total: malformed lines and unknown heads become per-line
//! diagnostics while the rest of the file still loads. Concept positions
//! also accept quoted strings (`"lost interest"`), which are normalized to
//! tokens and remembered in the document's symbol table.
//!
//! `serialize_kb` emits the canonical form: statements sorted by kind then
//! content, duplicates collapsed, spacing normalized, default trailers
//! omitted. Serializing is idempotent across a parse round-trip.

use std::collections::BTreeMap;
use std::fmt;

use crate::domain::DomainPath;

/// One parsed statement, in file order.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Statement {
    Domain {
        path: DomainPath,
    },
    Alias {
        name: String,
        path: DomainPath,
    },
    Delta {
        left: DomainPath,
        right: DomainPath,
        join: DomainPath,
    },
    TierMeta {
        domain: DomainPath,
        scope: DomainPath,
    },
    Meta {
        relation: String,
        property: String,
        domain: DomainPath,
    },
    Triple {
        relation: String,
        source: String,
        target: String,
        domain: DomainPath,
        conf: f64,
    },
    Bridge {
        concept1: String,
        domain1: DomainPath,
        concept2: String,
        domain2: DomainPath,
    },
    Fact {
        subject: String,
        token: String,
        domain: DomainPath,
        concept: String,
        conf: f64,
        freq: u32,
    },
}

impl Statement {
    /// Sort rank of the statement kind in canonical output. Declarations
    /// come before the data that depends on them, so a canonical file loads
    /// front to back.
    fn kind_rank(&self) -> u8 {
        match self {
            Statement::Domain { .. } => 0,
            Statement::Alias { .. } => 1,
            Statement::Delta { .. } => 2,
            Statement::TierMeta { .. } => 3,
            Statement::Meta { .. } => 4,
            Statement::Triple { .. } => 5,
            Statement::Bridge { .. } => 6,
            Statement::Fact { .. } => 7,
        }
    }

    /// The canonical single-line rendering.
    pub fn render(&self) -> String {
        match self {
            Statement::Domain { path } => format!("domain {path}"),
            Statement::Alias { name, path } => format!("alias {name} = {path}"),
            Statement::Delta { left, right, join } => {
                format!("delta {left}, {right} -> {join}")
            }
            Statement::TierMeta { domain, scope } => {
                let scope = match scope {
                    DomainPath::Top => "*".to_owned(),
                    other => other.to_string(),
                };
                format!("tier meta {domain} scope {scope}")
            }
            Statement::Meta {
                relation,
                property,
                domain,
            } => format!("meta {relation} {property} @ {domain}"),
            Statement::Triple {
                relation,
                source,
                target,
                domain,
                conf,
            } => {
                let mut line = format!("triple {relation}({source}, {target}) @ {domain}");
                if *conf != 1.0 {
                    line.push_str(&format!(" conf={}", render_real(*conf)));
                }
                line
            }
            Statement::Bridge {
                concept1,
                domain1,
                concept2,
                domain2,
            } => format!("bridge {concept1} @ {domain1} ~ {concept2} @ {domain2}"),
            Statement::Fact {
                subject,
                token,
                domain,
                concept,
                conf,
                freq,
            } => {
                let mut line = format!("fact {subject} {token} @ {domain} -> {concept}");
                if *conf != 1.0 {
                    line.push_str(&format!(" conf={}", render_real(*conf)));
                }
                if *freq != 1 {
                    line.push_str(&format!(" freq={freq}"));
                }
                line
            }
        }
    }
}

/// Confidence values without exponent notation, so every serialized real
/// re-parses. Values are canonicalized to at most 12 decimal places.
fn render_real(x: f64) -> String {
    let plain = format!("{x}");
    if !plain.contains(['e', 'E']) {
        return plain;
    }
    let fixed = format!("{x:.12}");
    let fixed = fixed.trim_end_matches('0').trim_end_matches('.');
    if fixed.is_empty() || fixed == "-0" {
        "0".to_owned()
    } else {
        fixed.to_owned()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

/// A per-line parse note. `line` is 1-based.
#[derive(Clone, Debug, serde::Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}: {}", self.line, self.severity, self.message)
    }
}

/// A parsed knowledge-base file: everything recoverable, plus diagnostics
/// for everything that was not.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct Document {
    pub statements: Vec<Statement>,
    pub diagnostics: Vec<Diagnostic>,
    /// Normalized token → original quoted spelling, for provenance.
    pub symbols: BTreeMap<String, String>,
}

impl Document {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }

    /// Statements sorted by (kind, content) with duplicates collapsed: the
    /// order `serialize_kb` emits.
    pub fn canonical_statements(&self) -> Vec<Statement> {
        let mut keyed: Vec<(u8, String, &Statement)> = self
            .statements
            .iter()
            .map(|s| (s.kind_rank(), s.render(), s))
            .collect();
        keyed.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        keyed.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        keyed.into_iter().map(|(_, _, s)| s.clone()).collect()
    }
}

/// Parses a whole file. Total: every input yields a Document, with
/// diagnostics standing in for whatever could not be read.
pub fn parse_kb(text: &str) -> Document {
    let mut doc = Document::default();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let tokens = match tokenize(line) {
            Ok(t) => t,
            Err(message) => {
                doc.diagnostics.push(Diagnostic {
                    line: line_no,
                    severity: Severity::Error,
                    message,
                });
                continue;
            }
        };
        if tokens.is_empty() {
            continue;
        }
        match parse_statement(&tokens, &mut doc.symbols) {
            Ok(statement) => doc.statements.push(statement),
            Err(message) => doc.diagnostics.push(Diagnostic {
                line: line_no,
                severity: Severity::Error,
                message,
            }),
        }
    }
    doc
}

/// Emits the canonical text form: one statement per line, sorted by kind
/// then content, duplicates collapsed. Comments do not survive; they are
/// not statements.
pub fn serialize_kb(doc: &Document) -> String {
    let lines: Vec<String> = doc.canonical_statements().iter().map(Statement::render).collect();
    if lines.is_empty() {
        String::new()
    } else {
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    LParen,
    RParen,
    Comma,
    At,
    Tilde,
    Eq,
    Star,
    Arrow,
    Dot,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Quoted(q) => write!(f, "\"{q}\""),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::At => f.write_str("`@`"),
            Tok::Tilde => f.write_str("`~`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Dot => f.write_str("`.`"),
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn tokenize(line: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '#' {
            break;
        } else if is_word_char(c) {
            let mut w = String::new();
            while let Some(&c) = chars.peek() {
                if is_word_char(c) {
                    w.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push(Tok::Word(w));
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            let mut closed = false;
            while let Some(c) = chars.next() {
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' => match chars.next() {
                        Some(escaped) => s.push(escaped),
                        None => return Err("dangling backslash in quoted string".into()),
                    },
                    other => s.push(other),
                }
            }
            if !closed {
                return Err("unterminated quoted string".into());
            }
            out.push(Tok::Quoted(s));
        } else if c == '-' {
            chars.next();
            if chars.peek() == Some(&'>') {
                chars.next();
                out.push(Tok::Arrow);
            } else {
                return Err("stray `-` (expected `->`)".into());
            }
        } else {
            chars.next();
            out.push(match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '@' => Tok::At,
                '~' => Tok::Tilde,
                '=' => Tok::Eq,
                '*' => Tok::Star,
                '.' => Tok::Dot,
                other => return Err(format!("unexpected character `{other}`")),
            });
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    tokens: &'a [Tok],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(tokens: &'a [Tok]) -> Self {
        Cursor { tokens, pos: 0 }
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&'a Tok> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok) -> Result<(), String> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(format!("expected {want}, found {t}")),
            None => Err(format!("expected {want}, found end of line")),
        }
    }

    fn word(&mut self, role: &str) -> Result<String, String> {
        match self.next() {
            Some(Tok::Word(w)) => Ok(w.clone()),
            Some(t) => Err(format!("expected {role}, found {t}")),
            None => Err(format!("expected {role}, found end of line")),
        }
    }

    /// A concept position: bare token or quoted string (normalized).
    fn concept(
        &mut self,
        role: &str,
        symbols: &mut BTreeMap<String, String>,
    ) -> Result<String, String> {
        match self.next() {
            Some(Tok::Word(w)) => Ok(w.clone()),
            Some(Tok::Quoted(q)) => Ok(normalize_quoted(q, symbols)),
            Some(t) => Err(format!("expected {role}, found {t}")),
            None => Err(format!("expected {role}, found end of line")),
        }
    }

    /// `WORD(@WORD)*` assembled into a domain path.
    fn path(&mut self, role: &str) -> Result<DomainPath, String> {
        let mut segments = vec![self.word(role)?];
        while self.peek() == Some(&Tok::At) {
            self.pos += 1;
            segments.push(self.word("path segment")?);
        }
        DomainPath::parse(&segments.join("@")).map_err(|e| e.to_string())
    }

    /// `WORD` or `WORD.WORD` as a non-negative real.
    fn real(&mut self, role: &str) -> Result<f64, String> {
        let whole = self.word(role)?;
        let text = if self.peek() == Some(&Tok::Dot) {
            self.pos += 1;
            let frac = self.word("fractional digits")?;
            format!("{whole}.{frac}")
        } else {
            whole
        };
        let value: f64 = text
            .parse()
            .map_err(|_| format!("`{text}` is not a number"))?;
        if !value.is_finite() {
            return Err(format!("`{text}` is not finite"));
        }
        Ok(value)
    }

    fn end(&mut self) -> Result<(), String> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(format!("unexpected trailing {t}")),
        }
    }
}

/// Collapses a quoted spelling into a token, remembering the original.
/// Distinct originals that collapse identically get numeric suffixes, in
/// first-seen order.
fn normalize_quoted(raw: &str, symbols: &mut BTreeMap<String, String>) -> String {
    let mut base = String::new();
    let mut last_underscore = true;
    for c in raw.chars() {
        if is_word_char(c) {
            base.push(c);
            last_underscore = false;
        } else if !last_underscore {
            base.push('_');
            last_underscore = true;
        }
    }
    while base.ends_with('_') {
        base.pop();
    }
    if base.is_empty() {
        base.push('_');
    }
    let mut candidate = base.clone();
    let mut n = 2;
    loop {
        match symbols.get(&candidate) {
            None => {
                symbols.insert(candidate.clone(), raw.to_owned());
                return candidate;
            }
            Some(original) if original == raw => return candidate,
            Some(_) => {
                candidate = format!("{base}_{n}");
                n += 1;
            }
        }
    }
}

/// `conf=` / `freq=` trailers, in either order, each at most once.
fn parse_trailers(
    cursor: &mut Cursor<'_>,
    allow_freq: bool,
) -> Result<(f64, u32), String> {
    let mut conf: Option<f64> = None;
    let mut freq: Option<u32> = None;
    while cursor.peek().is_some() {
        let key = cursor.word("trailer (conf= or freq=)")?;
        cursor.expect(&Tok::Eq)?;
        match key.as_str() {
            "conf" => {
                if conf.is_some() {
                    return Err("duplicate conf trailer".into());
                }
                conf = Some(cursor.real("confidence value")?);
            }
            "freq" if allow_freq => {
                if freq.is_some() {
                    return Err("duplicate freq trailer".into());
                }
                let digits = cursor.word("frequency value")?;
                let value: u32 = digits
                    .parse()
                    .map_err(|_| format!("`{digits}` is not a whole number"))?;
                freq = Some(value);
            }
            "freq" => return Err("freq trailer is only valid on fact statements".into()),
            other => return Err(format!("unknown trailer `{other}`")),
        }
    }
    Ok((conf.unwrap_or(1.0), freq.unwrap_or(1)))
}

fn parse_statement(
    tokens: &[Tok],
    symbols: &mut BTreeMap<String, String>,
) -> Result<Statement, String> {
    let mut c = Cursor::new(tokens);
    let head = match c.next() {
        Some(Tok::Word(w)) => w.as_str(),
        Some(t) => return Err(format!("expected a statement head, found {t}")),
        None => unreachable!("empty lines are filtered before parsing"),
    };
    match head {
        "domain" => {
            let path = c.path("domain path")?;
            c.end()?;
            Ok(Statement::Domain { path })
        }
        "alias" => {
            let name = c.word("alias name")?;
            c.expect(&Tok::Eq)?;
            let path = c.path("alias target path")?;
            c.end()?;
            Ok(Statement::Alias { name, path })
        }
        "delta" => {
            let left = c.path("left path")?;
            c.expect(&Tok::Comma)?;
            let right = c.path("right path")?;
            c.expect(&Tok::Arrow)?;
            let join = c.path("declared join path")?;
            c.end()?;
            Ok(Statement::Delta { left, right, join })
        }
        "tier" => {
            let kind = c.word("tier kind")?;
            if kind != "meta" {
                return Err(format!("unknown tier `{kind}` (only `meta` exists)"));
            }
            let domain = c.path("meta domain path")?;
            let scope_kw = c.word("`scope`")?;
            if scope_kw != "scope" {
                return Err(format!("expected `scope`, found `{scope_kw}`"));
            }
            let scope = if c.peek() == Some(&Tok::Star) {
                c.next();
                DomainPath::Top
            } else {
                c.path("scope path")?
            };
            c.end()?;
            Ok(Statement::TierMeta { domain, scope })
        }
        "meta" => {
            let relation = c.word("relation")?;
            let property = c.word("property")?;
            c.expect(&Tok::At)?;
            let domain = c.path("meta domain path")?;
            c.end()?;
            Ok(Statement::Meta {
                relation,
                property,
                domain,
            })
        }
        "triple" => {
            let relation = c.word("relation")?;
            c.expect(&Tok::LParen)?;
            let source = c.concept("source concept", symbols)?;
            c.expect(&Tok::Comma)?;
            let target = c.concept("target concept", symbols)?;
            c.expect(&Tok::RParen)?;
            c.expect(&Tok::At)?;
            let domain = c.path("domain path")?;
            let (conf, _) = parse_trailers(&mut c, false)?;
            Ok(Statement::Triple {
                relation,
                source,
                target,
                domain,
                conf,
            })
        }
        "bridge" => {
            let concept1 = c.concept("concept", symbols)?;
            c.expect(&Tok::At)?;
            let domain1 = c.path("domain path")?;
            c.expect(&Tok::Tilde)?;
            let concept2 = c.concept("concept", symbols)?;
            c.expect(&Tok::At)?;
            let domain2 = c.path("domain path")?;
            c.end()?;
            Ok(Statement::Bridge {
                concept1,
                domain1,
                concept2,
                domain2,
            })
        }
        "fact" => {
            let subject = c.concept("subject", symbols)?;
            let token = c.concept("utterance token", symbols)?;
            c.expect(&Tok::At)?;
            let domain = c.path("domain path")?;
            c.expect(&Tok::Arrow)?;
            let concept = c.concept("mapped concept", symbols)?;
            let (conf, freq) = parse_trailers(&mut c, true)?;
            Ok(Statement::Fact {
                subject,
                token,
                domain,
                concept,
                conf,
                freq,
            })
        }
        other => Err(format!("unknown statement head `{other}`")),
    }
}
