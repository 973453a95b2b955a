//! Rocq source ingestion.
//!
//! Comments are blanked out (offsets and line numbers are preserved), the
//! remaining text is cut into sentences, and every
//! `Theorem|Lemma|... name : stmt. Proof. ... Qed.` block becomes a
//! [`TheoremRecord`]. Proof bodies are segmented into tactics with the bullet
//! and brace structure kept as [`Marker`]s on the tactic that follows them.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// One `.v` file: the unit of provenance and of split disjointness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub content: String,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, content: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremKind {
    Theorem,
    Lemma,
    Fact,
    Corollary,
    Proposition,
    Remark,
    Example,
}

impl TheoremKind {
    pub const ALL: [TheoremKind; 7] = [
        TheoremKind::Theorem,
        TheoremKind::Lemma,
        TheoremKind::Fact,
        TheoremKind::Corollary,
        TheoremKind::Proposition,
        TheoremKind::Remark,
        TheoremKind::Example,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            TheoremKind::Theorem => "Theorem",
            TheoremKind::Lemma => "Lemma",
            TheoremKind::Fact => "Fact",
            TheoremKind::Corollary => "Corollary",
            TheoremKind::Proposition => "Proposition",
            TheoremKind::Remark => "Remark",
            TheoremKind::Example => "Example",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == word)
    }
}

/// Where a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Original,
    MinedSubproof,
    MinedAfterK,
}

/// A bullet symbol and how many times it is repeated (`-` is `('-', 1)`,
/// `**` is `('*', 2)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BulletKind {
    pub symbol: char,
    pub run: usize,
}

impl BulletKind {
    pub fn new(symbol: char, run: usize) -> Self {
        Self { symbol, run }
    }

    /// Canonical bullet for a 1-based branching depth: `-`, `+`, `*`, then
    /// `--`, `++`, `**`, and so on.
    pub fn for_depth(depth: usize) -> Self {
        const SYMBOLS: [char; 3] = ['-', '+', '*'];
        let d = depth.max(1) - 1;
        Self {
            symbol: SYMBOLS[d % 3],
            run: d / 3 + 1,
        }
    }
}

impl fmt::Display for BulletKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for _ in 0..self.run {
            write!(f, "{}", self.symbol)?;
        }
        Ok(())
    }
}

/// Structural token preceding a tactic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Marker {
    Bullet(BulletKind),
    OpenBrace,
    CloseBrace,
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marker::Bullet(b) => b.fmt(f),
            Marker::OpenBrace => f.write_str("{"),
            Marker::CloseBrace => f.write_str("}"),
        }
    }
}

/// A single tactic sentence. `text` is trimmed, whitespace-collapsed and
/// keeps its terminating period; an empty `markers` list is a plain tactic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tactic {
    pub text: String,
    pub markers: Vec<Marker>,
}

impl Tactic {
    pub fn plain(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            markers: Vec::new(),
        }
    }

    pub fn with_markers(text: impl Into<String>, markers: Vec<Marker>) -> Self {
        Self {
            text: text.into(),
            markers,
        }
    }

    pub fn is_plain(&self) -> bool {
        self.markers.is_empty()
    }

    /// The sentence as it appears in a script, markers included.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.markers {
            out.push_str(&m.to_string());
            out.push(' ');
        }
        out.push_str(&self.text);
        out
    }
}

/// Ordered tactic list of a proof. Closing braces after the last tactic have
/// no tactic to attach to and are kept in `trailing`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TacticSequence {
    pub tactics: Vec<Tactic>,
    pub trailing: Vec<Marker>,
}

impl TacticSequence {
    pub fn new(tactics: Vec<Tactic>) -> Self {
        Self {
            tactics,
            trailing: Vec::new(),
        }
    }

    /// Plain tactics from their texts.
    pub fn from_texts<S: AsRef<str>>(texts: &[S]) -> Self {
        Self::new(texts.iter().map(|t| Tactic::plain(t.as_ref())).collect())
    }

    pub fn len(&self) -> usize {
        self.tactics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tactics.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.tactics.iter().map(|t| t.text.as_str())
    }

    /// One string per sentence, markers included; trailing markers are
    /// emitted as their own entries.
    pub fn sentences(&self) -> Vec<String> {
        let mut out: Vec<String> = self.tactics.iter().map(Tactic::render).collect();
        out.extend(self.trailing.iter().map(Marker::to_string));
        out
    }

    /// Single-line script form, e.g. `destruct n. - left; auto. - right; auto.`
    pub fn render(&self) -> String {
        self.sentences().join(" ")
    }
}

impl fmt::Display for TacticSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl Serialize for TacticSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.sentences().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TacticSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let sentences = Vec::<String>::deserialize(deserializer)?;
        Ok(split_tactics(&sentences.join(" ")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: String,
    pub line: usize,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{}:{}: {}: {}", self.file, self.line, sev, self.message)
    }
}

/// A theorem statement with its tactic proof.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TheoremRecord {
    pub id: String,
    pub file: String,
    pub name: String,
    pub kind: TheoremKind,
    #[serde(rename = "statement")]
    pub statement_text: String,
    pub proof: TacticSequence,
    pub origin: Origin,
    pub has_goal_selectors: bool,
    #[serde(skip)]
    tokens: OnceLock<Vec<String>>,
}

impl PartialEq for TheoremRecord {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.file == other.file
            && self.name == other.name
            && self.kind == other.kind
            && self.statement_text == other.statement_text
            && self.proof == other.proof
            && self.origin == other.origin
            && self.has_goal_selectors == other.has_goal_selectors
    }
}

impl TheoremRecord {
    pub fn new(
        id: impl Into<String>,
        file: impl Into<String>,
        name: impl Into<String>,
        kind: TheoremKind,
        statement_text: impl Into<String>,
        proof: TacticSequence,
        origin: Origin,
    ) -> Self {
        let has_goal_selectors = detect_goal_selectors(&proof);
        Self {
            id: id.into(),
            file: file.into(),
            name: name.into(),
            kind,
            statement_text: statement_text.into(),
            proof,
            origin,
            has_goal_selectors,
            tokens: OnceLock::new(),
        }
    }

    /// Statement tokens, computed once.
    pub fn tokens(&self) -> &[String] {
        self.tokens
            .get_or_init(|| tokenize_statement(&self.statement_text))
    }
}

/// Parse every theorem block of a file, in source order.
pub fn parse_file(file: &SourceFile) -> (Vec<TheoremRecord>, Vec<Diagnostic>) {
    let (clean, unterminated) = strip_comments(&file.content);
    let mut diags = Vec::new();
    let line_of = |offset: usize| clean[..offset.min(clean.len())].matches('\n').count() + 1;
    let mut diag = |offset: usize, severity: Severity, message: String| {
        diags.push(Diagnostic {
            file: file.path.clone(),
            line: line_of(offset),
            severity,
            message,
        })
    };
    if let Some(offset) = unterminated {
        diag(offset, Severity::Error, "unterminated comment".to_string());
    }

    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut pos = 0;
    while let Some(sentence) = next_sentence(&clean, pos, false) {
        let (head, rest) = vernacular_head(&sentence.text);
        if let Some(kind) = TheoremKind::from_keyword(head) {
            let (name, statement) = split_header(rest);
            // `Example e := term.` has a body instead of a proof
            if rest.contains(":=")
                && !next_sentence(&clean, sentence.end, true)
                    .is_some_and(|s| first_word(&s.text) == "Proof")
            {
                pos = sentence.end;
                continue;
            }
            match scan_proof(&clean, sentence.end) {
                ProofScan::Closed {
                    body,
                    terminator,
                    next,
                } => {
                    pos = next;
                    match terminator {
                        Terminator::Qed | Terminator::Defined => {
                            let (proof, residue) = segment(&clean[body.0..body.1]);
                            if residue {
                                diag(
                                    body.1,
                                    Severity::Warning,
                                    format!("`{name}`: text after the last tactic period kept as a tactic"),
                                );
                            }
                            let count = seen.entry(name.to_string()).or_insert(0);
                            *count += 1;
                            let id = if *count == 1 {
                                format!("{}#{}", file.path, name)
                            } else {
                                format!("{}#{}~{}", file.path, name, count)
                            };
                            records.push(TheoremRecord::new(
                                id,
                                file.path.clone(),
                                name,
                                kind,
                                statement,
                                proof,
                                Origin::Original,
                            ));
                        }
                        Terminator::Admitted | Terminator::Abort => diag(
                            sentence.start,
                            Severity::Warning,
                            format!("`{name}` skipped: proof ends with {}", terminator.word()),
                        ),
                    }
                }
                ProofScan::Unterminated { resume } => {
                    diag(
                        sentence.start,
                        Severity::Error,
                        format!("`{name}` skipped: missing `Qed.`"),
                    );
                    pos = resume;
                }
            }
        } else if PROOF_BEARING.contains(&head) {
            let opens_proof = head == "Goal"
                || next_sentence(&clean, sentence.end, true)
                    .is_some_and(|s| first_word(&s.text) == "Proof");
            if opens_proof {
                let (name, _) = split_header(rest);
                match scan_proof(&clean, sentence.end) {
                    ProofScan::Closed { next, .. } => pos = next,
                    ProofScan::Unterminated { resume } => pos = resume,
                }
                diag(
                    sentence.start,
                    Severity::Warning,
                    format!("`{head} {name}` skipped: not a supported theorem kind"),
                );
            } else {
                pos = sentence.end;
            }
        } else {
            pos = sentence.end;
        }
    }
    (records, diags)
}

/// Segment a proof body (without `Proof.`/`Qed.`) into tactics.
pub fn split_tactics(proof_body: &str) -> TacticSequence {
    segment(proof_body).0
}

/// Whether any tactic starts with a goal selector (`all:`, `!:`, `par:`,
/// `2:`, `1,3:`, `2-4:`, `[name]:`).
pub fn detect_goal_selectors(seq: &TacticSequence) -> bool {
    seq.texts().any(has_selector_prefix)
}

/// Split a statement into tokens on whitespace and `( ) , : ;`.
pub fn tokenize_statement(statement_text: &str) -> Vec<String> {
    statement_text
        .split(|c: char| c.is_whitespace() || matches!(c, '(' | ')' | ',' | ':' | ';'))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn selector_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^(?:all|par|!|\[\s*[A-Za-z_][A-Za-z0-9_']*\s*\]|\d+\s*(?:-\s*\d+)?(?:\s*,\s*\d+\s*(?:-\s*\d+)?)*)\s*:",
        )
        .expect("selector regex")
    })
}

fn has_selector_prefix(text: &str) -> bool {
    match selector_regex().find(text) {
        // `2 := ...` is not a selector
        Some(m) => !text[m.end()..].starts_with('='),
        None => false,
    }
}

const PROOF_BEARING: &[&str] = &[
    "Definition",
    "Instance",
    "Fixpoint",
    "CoFixpoint",
    "Let",
    "Program",
    "Goal",
    "Add",
];

const VERNACULAR: &[&str] = &[
    "Theorem",
    "Lemma",
    "Fact",
    "Corollary",
    "Proposition",
    "Remark",
    "Example",
    "Definition",
    "Fixpoint",
    "CoFixpoint",
    "Inductive",
    "CoInductive",
    "Variant",
    "Record",
    "Structure",
    "Class",
    "Instance",
    "Section",
    "End",
    "Module",
    "Require",
    "Import",
    "Export",
    "From",
    "Notation",
    "Infix",
    "Ltac",
    "Hint",
    "Axiom",
    "Axioms",
    "Parameter",
    "Parameters",
    "Variable",
    "Variables",
    "Hypothesis",
    "Hypotheses",
    "Context",
    "Goal",
    "Program",
    "Let",
    "Arguments",
    "Implicit",
    "Scheme",
    "Canonical",
    "Coercion",
];

const LOCALITY: &[&str] = &["Local", "Global", "Polymorphic", "Monomorphic", "Private"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Terminator {
    Qed,
    Defined,
    Admitted,
    Abort,
}

impl Terminator {
    fn parse(text: &str) -> Option<Self> {
        if !text.ends_with('.') {
            return None;
        }
        match first_word(text) {
            "Qed" => Some(Terminator::Qed),
            "Defined" => Some(Terminator::Defined),
            "Admitted" => Some(Terminator::Admitted),
            "Abort" => Some(Terminator::Abort),
            _ => None,
        }
    }

    fn word(self) -> &'static str {
        match self {
            Terminator::Qed => "Qed",
            Terminator::Defined => "Defined",
            Terminator::Admitted => "Admitted",
            Terminator::Abort => "Abort",
        }
    }
}

enum ProofScan {
    Closed {
        body: (usize, usize),
        terminator: Terminator,
        next: usize,
    },
    Unterminated {
        resume: usize,
    },
}

/// Walk proof-mode sentences from `from` up to the terminator.
fn scan_proof(src: &str, from: usize) -> ProofScan {
    let mut pos = from;
    let mut body_start = from;
    let mut first = true;
    while let Some(s) = next_sentence(src, pos, true) {
        if s.text.is_empty() {
            break;
        }
        if first && s.markers.is_empty() && first_word(&s.text) == "Proof" {
            body_start = s.end;
            first = false;
            pos = s.end;
            continue;
        }
        first = false;
        if let Some(terminator) = Terminator::parse(&s.text) {
            return ProofScan::Closed {
                body: (body_start, s.text_start),
                terminator,
                next: s.end,
            };
        }
        if s.markers.is_empty() && VERNACULAR.contains(&vernacular_head(&s.text).0) {
            return ProofScan::Unterminated { resume: s.start };
        }
        pos = s.end;
    }
    ProofScan::Unterminated { resume: src.len() }
}

fn first_word(text: &str) -> &str {
    let end = text
        .find(|c: char| !(c.is_alphanumeric() || c == '_' || c == '\''))
        .unwrap_or(text.len());
    &text[..end]
}

/// Drop attributes and locality prefixes, return the command word and the rest.
fn vernacular_head(text: &str) -> (&str, &str) {
    let mut rest = text.trim_start();
    loop {
        if rest.starts_with("#[") {
            match rest.find(']') {
                Some(i) => rest = rest[i + 1..].trim_start(),
                None => return ("", rest),
            }
            continue;
        }
        let word = first_word(rest);
        if LOCALITY.contains(&word) {
            rest = rest[word.len()..].trim_start();
            continue;
        }
        return (word, rest[word.len()..].trim_start());
    }
}

/// `name (binders) : stmt.` -> (name, statement).
fn split_header(rest: &str) -> (&str, String) {
    let name = first_word(rest);
    let mut stmt = rest[name.len()..].trim();
    stmt = stmt.strip_suffix('.').unwrap_or(stmt).trim_end();
    if let Some(s) = stmt.strip_prefix(':') {
        if !s.starts_with('=') {
            stmt = s.trim_start();
        }
    }
    (name, collapse_whitespace(stmt))
}

/// Blank out `(* ... *)` comments (nested, string-aware) keeping byte offsets
/// and newlines. Returns the offset of an unterminated comment, if any.
fn strip_comments(src: &str) -> (String, Option<usize>) {
    let b = src.as_bytes();
    let n = b.len();
    let mut out = b.to_vec();
    let blank = |out: &mut Vec<u8>, i: usize| {
        if out[i] != b'\n' {
            out[i] = b' ';
        }
    };
    let mut depth = 0usize;
    let mut comment_start = 0;
    let mut in_string = false;
    let mut i = 0;
    while i < n {
        let c = b[i];
        let next = b.get(i + 1).copied();
        if in_string {
            if depth > 0 {
                blank(&mut out, i);
            }
            if c == b'"' {
                if next == Some(b'"') {
                    if depth > 0 {
                        blank(&mut out, i + 1);
                    }
                    i += 2;
                    continue;
                }
                in_string = false;
            }
            i += 1;
            continue;
        }
        if c == b'(' && next == Some(b'*') {
            if depth == 0 {
                comment_start = i;
            }
            depth += 1;
            blank(&mut out, i);
            blank(&mut out, i + 1);
            i += 2;
            continue;
        }
        if depth > 0 && c == b'*' && next == Some(b')') {
            depth -= 1;
            blank(&mut out, i);
            blank(&mut out, i + 1);
            i += 2;
            continue;
        }
        if c == b'"' {
            in_string = true;
        }
        if depth > 0 {
            blank(&mut out, i);
        }
        i += 1;
    }
    // only ASCII bytes were replaced, and only with ASCII spaces, but a
    // multi-byte char inside a comment is blanked byte by byte: still valid.
    let text = String::from_utf8(out).expect("blanking keeps utf-8 valid");
    (text, (depth > 0).then_some(comment_start))
}

#[derive(Debug)]
struct Sentence {
    markers: Vec<Marker>,
    text: String,
    start: usize,
    text_start: usize,
    end: usize,
    terminated: bool,
}

/// Next sentence at or after `pos`. In proof mode, leading bullets and braces
/// are split off as markers. Sentences end at a `.` followed by whitespace or
/// end of input, outside string literals.
fn next_sentence(src: &str, pos: usize, proof_mode: bool) -> Option<Sentence> {
    let b = src.as_bytes();
    let n = b.len();
    let skip_ws = |mut p: usize| {
        while p < n && b[p].is_ascii_whitespace() {
            p += 1;
        }
        p
    };
    let mut p = skip_ws(pos);
    if p >= n {
        return None;
    }
    let start = p;
    let mut markers = Vec::new();
    if proof_mode {
        loop {
            p = skip_ws(p);
            if p >= n {
                break;
            }
            match b[p] {
                b'{' => {
                    markers.push(Marker::OpenBrace);
                    p += 1;
                }
                b'}' => {
                    markers.push(Marker::CloseBrace);
                    p += 1;
                }
                c @ (b'-' | b'+' | b'*') => {
                    let mut run = 0;
                    while p < n && b[p] == c {
                        run += 1;
                        p += 1;
                    }
                    markers.push(Marker::Bullet(BulletKind::new(c as char, run)));
                }
                _ => break,
            }
        }
    }
    if p >= n {
        return Some(Sentence {
            markers,
            text: String::new(),
            start,
            text_start: n,
            end: n,
            terminated: false,
        });
    }
    let text_start = p;
    let mut in_string = false;
    let mut end = None;
    while p < n {
        let c = b[p];
        if in_string {
            if c == b'"' {
                if b.get(p + 1) == Some(&b'"') {
                    p += 2;
                    continue;
                }
                in_string = false;
            }
            p += 1;
            continue;
        }
        match c {
            b'"' => in_string = true,
            b'.' if b.get(p + 1).is_none_or(|x| x.is_ascii_whitespace()) => {
                end = Some(p + 1);
                break;
            }
            // `2: {` focuses a goal and ends the sentence without a period
            b'{' if proof_mode && has_selector_prefix(src[text_start..p].trim()) => {
                end = Some(p + 1);
                break;
            }
            _ => {}
        }
        p += 1;
    }
    let (end, terminated) = match end {
        Some(e) => (e, true),
        None => (n, false),
    };
    Some(Sentence {
        markers,
        text: collapse_whitespace(&src[text_start..end]),
        start,
        text_start,
        end,
        terminated,
    })
}

/// Segment a proof body; the flag reports unterminated residue at the end.
fn segment(body: &str) -> (TacticSequence, bool) {
    let mut seq = TacticSequence::default();
    let mut residue = false;
    let mut pos = 0;
    while let Some(s) = next_sentence(body, pos, true) {
        pos = s.end;
        if s.text.is_empty() {
            seq.trailing.extend(s.markers);
            break;
        }
        residue |= !s.terminated;
        seq.tactics.push(Tactic::with_markers(s.text, s.markers));
    }
    (seq, residue)
}

/// Collapse whitespace runs to single spaces outside string literals; trim.
fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_string = false;
    let mut pending_space = false;
    for c in s.trim().chars() {
        if in_string {
            out.push(c);
            if c == '"' {
                in_string = false;
            }
            continue;
        }
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        if c == '"' {
            in_string = true;
        }
        out.push(c);
    }
    out
}
