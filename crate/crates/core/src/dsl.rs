//! Text formats: world files (JSON), propositions (s-expressions) and RSA
//! scenarios (JSON referencing world and proposition files).
//!
//! Proposition grammar:
//!
//! ```text
//! prop  := "(" "let" ( "(" NAME node ")" )* node ")" | node
//! node  := quant | conj | app | "true" | "#" NAME
//! quant := "(" KIND "(" VAR+ ")" node node ")"     ; restriction, then body
//! conj  := "(" "and" node+ ")"
//! app   := "(" PRED VAR ")"
//! ```
//!
//! `;` starts a comment running to the end of the line. Let-bound nodes are
//! shared: every `#name` reference is the same node, with one threshold if
//! the node is a vague quantifier.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EngineKind;
use crate::model::{LiftScheme, ModelError, PixieSpace, SituationModel, VagueLexicon, VaguePredicate, World};
use crate::quant::QuantifierKind;
use crate::rsa::{Alpha, RsaError, RsaScenario, RsaState, Utterance};
use crate::scope::{NodeId, ScopeGraph, ScopeNode, SourcePos};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// A located message. `line` and `column` are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceDiagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: usize,
    pub column: usize,
    pub snippet: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

impl SourceDiagnostic {
    fn error(text: &str, pos: SourcePos, message: impl Into<String>) -> Self {
        let pos = clamp_pos(text, pos);
        Self {
            severity: Severity::Error,
            message: message.into(),
            line: pos.line,
            column: pos.column,
            snippet: text.lines().nth(pos.line - 1).unwrap_or("").to_string(),
            file: None,
        }
    }

    fn in_file(mut self, file: &str) -> Self {
        if self.file.is_none() {
            self.file = Some(file.to_string());
        }
        self
    }
}

impl fmt::Display for SourceDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        let file = self.file.as_deref().unwrap_or("<input>");
        writeln!(f, "{sev}: {}", self.message)?;
        writeln!(f, "  --> {file}:{}:{}", self.line, self.column)?;
        writeln!(f, "   | {}", self.snippet)?;
        write!(f, "   | {}^", " ".repeat(self.column.saturating_sub(1)))
    }
}

/// Moves a position onto an existing character (or line 1, column 1 for
/// empty input).
fn clamp_pos(text: &str, pos: SourcePos) -> SourcePos {
    let lines: Vec<&str> = text.lines().collect();
    if lines.is_empty() {
        return SourcePos { line: 1, column: 1 };
    }
    let line = pos.line.clamp(1, lines.len());
    let width = lines[line - 1].chars().count().max(1);
    SourcePos { line, column: pos.column.clamp(1, width) }
}

fn start() -> SourcePos {
    SourcePos { line: 1, column: 1 }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("custom quantifier at node {0} has no keyword in the proposition syntax")]
    CustomQuantifier(NodeId),
    #[error("cycle in scope graph")]
    Cycle,
}

// ---------------------------------------------------------------------------
// JSON value locations

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Seg {
    Key(String),
    Index(usize),
}

/// Positions of every value in a syntactically valid JSON document, keyed
/// by path.
struct JsonLocator {
    positions: HashMap<Vec<Seg>, SourcePos>,
}

impl JsonLocator {
    fn new(text: &str) -> Self {
        let mut scan = Scanner { chars: text.chars().collect(), i: 0, line: 1, col: 1 };
        let mut positions = HashMap::new();
        let mut path = Vec::new();
        scan.value(&mut path, &mut positions);
        Self { positions }
    }

    /// Position of the deepest recorded prefix of `path`.
    fn locate(&self, path: &[Seg]) -> SourcePos {
        (0..=path.len())
            .rev()
            .find_map(|n| self.positions.get(&path[..n]).copied())
            .unwrap_or_else(start)
    }
}

struct Scanner {
    chars: Vec<char>,
    i: usize,
    line: usize,
    col: usize,
}

impl Scanner {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn string(&mut self) -> String {
        let mut out = String::new();
        self.bump();
        while let Some(c) = self.bump() {
            match c {
                '"' => break,
                '\\' => {
                    if let Some(e) = self.bump() {
                        match e {
                            'n' => out.push('\n'),
                            't' => out.push('\t'),
                            'r' => out.push('\r'),
                            'b' => out.push('\u{8}'),
                            'f' => out.push('\u{c}'),
                            'u' => {
                                let hex: String = (0..4).filter_map(|_| self.bump()).collect();
                                if let Some(ch) = u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                                    out.push(ch);
                                }
                            }
                            other => out.push(other),
                        }
                    }
                }
                c => out.push(c),
            }
        }
        out
    }

    fn value(&mut self, path: &mut Vec<Seg>, out: &mut HashMap<Vec<Seg>, SourcePos>) {
        self.ws();
        out.insert(path.clone(), SourcePos { line: self.line, column: self.col });
        match self.peek() {
            Some('{') => {
                self.bump();
                loop {
                    self.ws();
                    match self.peek() {
                        Some('"') => {
                            let key = self.string();
                            self.ws();
                            self.bump(); // ':'
                            path.push(Seg::Key(key));
                            self.value(path, out);
                            path.pop();
                            self.ws();
                            if self.peek() == Some(',') {
                                self.bump();
                            }
                        }
                        Some('}') => {
                            self.bump();
                            break;
                        }
                        None => break,
                        _ => {
                            self.bump();
                        }
                    }
                }
            }
            Some('[') => {
                self.bump();
                let mut idx = 0;
                loop {
                    self.ws();
                    match self.peek() {
                        Some(']') => {
                            self.bump();
                            break;
                        }
                        None => break,
                        _ => {
                            path.push(Seg::Index(idx));
                            self.value(path, out);
                            path.pop();
                            idx += 1;
                            self.ws();
                            if self.peek() == Some(',') {
                                self.bump();
                            }
                        }
                    }
                }
            }
            Some('"') => {
                self.string();
            }
            _ => {
                while matches!(self.peek(), Some(c) if !c.is_whitespace() && !matches!(c, ',' | ']' | '}')) {
                    self.bump();
                }
            }
        }
    }
}

fn key(k: &str) -> Seg {
    Seg::Key(k.to_string())
}

fn json_syntax_error(text: &str, e: &serde_json::Error) -> SourceDiagnostic {
    let line = e.line().max(1);
    let column = e.column().max(1);
    let msg = e.to_string();
    // serde_json appends " at line L column C"; the location is reported separately
    let msg = msg.rsplit_once(" at line ").map(|(m, _)| m.to_string()).unwrap_or(msg);
    SourceDiagnostic::error(text, SourcePos { line, column }, msg)
}

// ---------------------------------------------------------------------------
// World files

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WorldDoc {
    pixies: Vec<String>,
    variables: Vec<String>,
    joint: Vec<JointDoc>,
    #[serde(default)]
    predicates: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    assign: BTreeMap<String, String>,
    prob: f64,
}

fn round_for_display(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Parses a world file, checking every model invariant. All problems found
/// are reported, each with a location.
pub fn parse_world(text: &str) -> Result<World, Vec<SourceDiagnostic>> {
    let doc: WorldDoc = serde_json::from_str(text).map_err(|e| vec![json_syntax_error(text, &e)])?;
    let loc = JsonLocator::new(text);
    let mut diags = Vec::new();
    let mut err = |path: &[Seg], msg: String| diags.push(SourceDiagnostic::error(text, loc.locate(path), msg));

    let mut pixie_set = BTreeSet::new();
    for (i, p) in doc.pixies.iter().enumerate() {
        if !pixie_set.insert(p.as_str()) {
            err(&[key("pixies"), Seg::Index(i)], format!("duplicate pixie `{p}`"));
        }
    }
    if doc.pixies.is_empty() {
        err(&[key("pixies")], "pixie space is empty".into());
    }
    let mut var_set = BTreeSet::new();
    for (i, v) in doc.variables.iter().enumerate() {
        if !var_set.insert(v.as_str()) {
            err(&[key("variables"), Seg::Index(i)], format!("duplicate variable `{v}`"));
        }
    }
    let mut seen_rows: BTreeMap<Vec<&str>, usize> = BTreeMap::new();
    let mut total = 0.0;
    for (i, row) in doc.joint.iter().enumerate() {
        let at = [key("joint"), Seg::Index(i)];
        for v in &doc.variables {
            if !row.assign.contains_key(v) {
                err(&[at[0].clone(), at[1].clone(), key("assign")], format!("joint entry {i} does not assign variable `{v}`"));
            }
        }
        for (v, p) in &row.assign {
            let here = [at[0].clone(), at[1].clone(), key("assign"), key(v)];
            if !var_set.contains(v.as_str()) {
                err(&here, format!("joint entry {i} assigns undeclared variable `{v}`"));
            }
            if !pixie_set.contains(p.as_str()) {
                err(&here, format!("unknown pixie `{p}`"));
            }
        }
        if !row.prob.is_finite() || row.prob < 0.0 {
            err(&[at[0].clone(), at[1].clone(), key("prob")], format!("negative probability {}", row.prob));
        }
        let tuple: Vec<&str> = doc.variables.iter().map(|v| row.assign.get(v).map(String::as_str).unwrap_or("")).collect();
        if let Some(first) = seen_rows.insert(tuple, i) {
            err(&at, format!("joint entry {i} repeats the assignment of entry {first}"));
        }
        total += row.prob;
    }
    if (total - 1.0).abs() > crate::model::MASS_TOLERANCE {
        err(&[key("joint")], format!("joint mass {} ≠ 1", round_for_display(total)));
    }
    for (name, table) in &doc.predicates {
        for (pixie, &value) in table {
            let here = [key("predicates"), key(name), key(pixie)];
            if !pixie_set.contains(pixie.as_str()) {
                err(&here, format!("predicate `{name}` mentions unknown pixie `{pixie}`"));
            }
            if !(0.0..=1.0).contains(&value) {
                err(&here, format!("predicate `{name}` gives pixie `{pixie}` probability {value} outside [0, 1]"));
            }
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }

    let to_diag = |e: ModelError| vec![SourceDiagnostic::error(text, start(), e.to_string())];
    let space = PixieSpace::new(doc.pixies).map_err(to_diag)?;
    let joint = doc.joint.into_iter().map(|r| (r.assign, r.prob)).collect();
    let model = SituationModel::new(space, doc.variables, joint).map_err(to_diag)?;
    let mut lexicon = VagueLexicon::new();
    for (name, table) in doc.predicates {
        lexicon.insert(VaguePredicate::new(name, table).map_err(to_diag)?);
    }
    Ok(World { model, lexicon })
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn json_num(x: f64) -> String {
    serde_json::to_string(&x).expect("finite numbers serialize")
}

/// Canonical text: pixies, joint rows and predicates in lexicographic
/// order, variables in declaration order.
pub fn serialize_world(world: &World) -> String {
    let w = world.canonical();
    let space = w.model.space();
    let vars = w.model.variables();
    let mut out = String::from("{\n");
    let pixies: Vec<String> = space.elements().iter().map(|p| json_str(p)).collect();
    out += &format!("  \"pixies\": [{}],\n", pixies.join(", "));
    let v: Vec<String> = vars.iter().map(|v| json_str(v)).collect();
    out += &format!("  \"variables\": [{}],\n", v.join(", "));
    out += "  \"joint\": [\n";
    let rows: Vec<String> = w
        .model
        .joint()
        .iter()
        .map(|(tuple, p)| {
            let mut pairs: Vec<(&String, &str)> = vars.iter().zip(tuple.iter().map(|&i| space.name(i))).collect();
            pairs.sort();
            let assign: Vec<String> = pairs.iter().map(|(k, v)| format!("{}: {}", json_str(k), json_str(v))).collect();
            format!("    {{\"assign\": {{{}}}, \"prob\": {}}}", assign.join(", "), json_num(*p))
        })
        .collect();
    out += &rows.join(",\n");
    if !rows.is_empty() {
        out += "\n";
    }
    out += "  ],\n";
    out += "  \"predicates\": {";
    let preds: Vec<String> = w
        .lexicon
        .iter()
        .map(|p| {
            let entries: Vec<String> = p.table.iter().map(|(k, v)| format!("{}: {}", json_str(k), json_num(*v))).collect();
            format!("    {}: {{{}}}", json_str(&p.name), entries.join(", "))
        })
        .collect();
    if preds.is_empty() {
        out += "}\n";
    } else {
        out += "\n";
        out += &preds.join(",\n");
        out += "\n  }\n";
    }
    out += "}\n";
    out
}

// ---------------------------------------------------------------------------
// Propositions

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
    Ref(String),
}

fn tokenize(text: &str) -> Result<Vec<(Tok, SourcePos)>, SourceDiagnostic> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1, 1);
    let advance = |c: char, line: &mut usize, col: &mut usize| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let pos = SourcePos { line, column: col };
        match c {
            c if c.is_whitespace() => {
                chars.next();
                advance(c, &mut line, &mut col);
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    advance(c, &mut line, &mut col);
                }
            }
            '(' | ')' => {
                chars.next();
                advance(c, &mut line, &mut col);
                out.push((if c == '(' { Tok::Open } else { Tok::Close }, pos));
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | ';') {
                        break;
                    }
                    word.push(c);
                    chars.next();
                    advance(c, &mut line, &mut col);
                }
                let tok = match word.strip_prefix('#') {
                    Some("") => return Err(SourceDiagnostic::error(text, pos, "`#` must be followed by a binding name")),
                    Some(name) => Tok::Ref(name.to_string()),
                    None => Tok::Atom(word),
                };
                out.push((tok, pos));
            }
        }
    }
    Ok(out)
}

const RESERVED: [&str; 3] = ["let", "and", "true"];

fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word) || QuantifierKind::KEYWORDS.contains(&word)
}

struct PropParser<'a> {
    text: &'a str,
    toks: Vec<(Tok, SourcePos)>,
    i: usize,
    nodes: Vec<ScopeNode>,
    positions: Vec<Option<SourcePos>>,
    bindings: BTreeMap<String, NodeId>,
}

type PResult<T> = Result<T, SourceDiagnostic>;

impl PropParser<'_> {
    fn end_pos(&self) -> SourcePos {
        let lines: Vec<&str> = self.text.lines().collect();
        match lines.last() {
            Some(l) => SourcePos { line: lines.len(), column: l.chars().count().max(1) },
            None => start(),
        }
    }

    fn err(&self, pos: SourcePos, msg: impl Into<String>) -> SourceDiagnostic {
        SourceDiagnostic::error(self.text, pos, msg)
    }

    fn peek(&self) -> Option<&(Tok, SourcePos)> {
        self.toks.get(self.i)
    }

    fn next(&mut self, what: &str) -> PResult<(Tok, SourcePos)> {
        match self.toks.get(self.i) {
            Some(t) => {
                self.i += 1;
                Ok(t.clone())
            }
            None => Err(self.err(self.end_pos(), format!("unexpected end of input, expected {what}"))),
        }
    }

    fn expect_close(&mut self, what: &str) -> PResult<()> {
        match self.next("`)`")? {
            (Tok::Close, _) => Ok(()),
            (_, pos) => Err(self.err(pos, format!("expected `)` to close {what}"))),
        }
    }

    fn atom(&mut self, what: &str) -> PResult<(String, SourcePos)> {
        match self.next(what)? {
            (Tok::Atom(a), pos) => Ok((a, pos)),
            (_, pos) => Err(self.err(pos, format!("expected {what}"))),
        }
    }

    fn push(&mut self, node: ScopeNode, pos: SourcePos) -> NodeId {
        self.nodes.push(node);
        self.positions.push(Some(pos));
        NodeId(self.nodes.len() - 1)
    }

    fn prop(&mut self) -> PResult<NodeId> {
        let is_let = matches!(
            (self.toks.first(), self.toks.get(1)),
            (Some((Tok::Open, _)), Some((Tok::Atom(a), _))) if a == "let"
        );
        let root = if is_let {
            self.i = 2;
            while matches!(self.peek(), Some((Tok::Open, _))) {
                // a binding is "(" NAME node ")"; a root form starts with a keyword or predicate
                let is_binding = match (self.toks.get(self.i + 1), self.toks.get(self.i + 2)) {
                    (Some((Tok::Atom(name), _)), Some((t, _))) if !is_reserved(name) => match t {
                        Tok::Open | Tok::Ref(_) => true,
                        Tok::Atom(a) => a == "true",
                        Tok::Close => false,
                    },
                    _ => false,
                };
                if !is_binding {
                    break;
                }
                self.i += 1;
                let (name, pos) = self.atom("binding name")?;
                if self.bindings.contains_key(&name) {
                    return Err(self.err(pos, format!("duplicate let name `{name}`")));
                }
                let node = self.node()?;
                self.expect_close("let binding")?;
                self.bindings.insert(name, node);
            }
            let root = self.node()?;
            self.expect_close("let")?;
            root
        } else {
            self.node()?
        };
        if let Some((_, pos)) = self.peek() {
            return Err(self.err(*pos, "unexpected input after the proposition"));
        }
        Ok(root)
    }

    fn node(&mut self) -> PResult<NodeId> {
        let (tok, pos) = self.next("a node")?;
        match tok {
            Tok::Close => Err(self.err(pos, "unexpected `)`")),
            Tok::Ref(name) => self
                .bindings
                .get(&name)
                .copied()
                .ok_or_else(|| self.err(pos, format!("unknown reference `#{name}`"))),
            Tok::Atom(a) if a == "true" => Ok(self.push(ScopeNode::Tautology, pos)),
            Tok::Atom(a) => Err(self.err(pos, format!("unexpected `{a}`, expected a node"))),
            Tok::Open => {
                let (head, head_pos) = self.atom("a quantifier, `and`, or a predicate")?;
                if head == "let" {
                    return Err(self.err(head_pos, "`let` is only allowed around the whole proposition"));
                }
                if head == "true" {
                    return Err(self.err(head_pos, "`true` cannot be applied"));
                }
                if head == "and" {
                    let mut children = Vec::new();
                    while !matches!(self.peek(), Some((Tok::Close, _)) | None) {
                        children.push(self.node()?);
                    }
                    if children.is_empty() {
                        return Err(self.err(head_pos, "`and` needs at least one conjunct"));
                    }
                    self.expect_close("`and`")?;
                    return Ok(self.push(ScopeNode::Conjunction(children), pos));
                }
                if let Ok(kind) = QuantifierKind::from_keyword(&head) {
                    match self.next("`(` opening the bound variables")? {
                        (Tok::Open, _) => {}
                        (_, p) => return Err(self.err(p, format!("expected `(` with the variables bound by `{head}`"))),
                    }
                    let mut bound = Vec::new();
                    loop {
                        match self.next("a bound variable or `)`")? {
                            (Tok::Close, p) => {
                                if bound.is_empty() {
                                    return Err(self.err(p, format!("`{head}` must bind at least one variable")));
                                }
                                break;
                            }
                            (Tok::Atom(v), p) => {
                                if is_reserved(&v) {
                                    return Err(self.err(p, format!("`{v}` is reserved and cannot be a variable")));
                                }
                                if bound.contains(&v) {
                                    return Err(self.err(p, format!("`{head}` binds `{v}` twice")));
                                }
                                bound.push(v);
                            }
                            (_, p) => return Err(self.err(p, "expected a variable name")),
                        }
                    }
                    let restriction = self.node()?;
                    let body = self.node()?;
                    self.expect_close(&format!("`{head}`"))?;
                    return Ok(self.push(ScopeNode::Quantifier { kind, bound, restriction, body }, pos));
                }
                let (var, var_pos) = match self.next("a variable")? {
                    (Tok::Atom(v), p) => (v, p),
                    (_, p) => return Err(self.err(p, format!("unknown quantifier or malformed application `{head}`"))),
                };
                if is_reserved(&var) {
                    return Err(self.err(var_pos, format!("`{var}` is reserved and cannot be a variable")));
                }
                match self.next("`)`")? {
                    (Tok::Close, _) => {}
                    (_, p) => {
                        return Err(self.err(p, format!("predicate `{head}` takes exactly one variable (or `{head}` is an unknown quantifier)")))
                    }
                }
                Ok(self.push(ScopeNode::Application { predicate: head, variable: var }, pos))
            }
        }
    }
}

/// Parses a proposition. Free-variable checks are left to
/// [`crate::scope::validate`].
pub fn parse_prop(text: &str) -> Result<ScopeGraph, Vec<SourceDiagnostic>> {
    let toks = tokenize(text).map_err(|d| vec![d])?;
    let mut p = PropParser { text, toks, i: 0, nodes: Vec::new(), positions: Vec::new(), bindings: BTreeMap::new() };
    let root = p.prop().map_err(|d| vec![d])?;
    let graph = ScopeGraph::new(p.nodes, root, p.bindings).expect("parser only references existing nodes");
    Ok(graph.with_positions(p.positions))
}

/// Canonical text. Nodes referenced more than once, or named by an alias,
/// become let-bindings (in dependency order) so sharing survives a round
/// trip.
pub fn serialize_prop(graph: &ScopeGraph) -> Result<String, DslError> {
    // post-order from the root, following children in order
    let mut order = Vec::new();
    let mut seen = vec![false; graph.len()];
    let mut open = vec![false; graph.len()];
    fn visit(g: &ScopeGraph, id: NodeId, seen: &mut [bool], open: &mut [bool], order: &mut Vec<NodeId>) -> Result<(), DslError> {
        if seen[id.0] {
            return Ok(());
        }
        if open[id.0] {
            return Err(DslError::Cycle);
        }
        open[id.0] = true;
        for c in g.node(id).children() {
            visit(g, c, seen, open, order)?;
        }
        open[id.0] = false;
        seen[id.0] = true;
        order.push(id);
        Ok(())
    }
    visit(graph, graph.root(), &mut seen, &mut open, &mut order)?;

    let mut refs = vec![0usize; graph.len()];
    for &id in &order {
        for c in graph.node(id).children() {
            refs[c.0] += 1;
        }
    }
    let mut alias_of: BTreeMap<NodeId, &str> = BTreeMap::new();
    for (name, id) in graph.aliases() {
        alias_of.entry(*id).or_insert(name.as_str());
    }
    let taken: BTreeSet<&str> = graph.aliases().keys().map(String::as_str).collect();
    let mut names: BTreeMap<NodeId, String> = BTreeMap::new();
    let mut counter = 0;
    for &id in &order {
        if id == graph.root() {
            continue;
        }
        if let Some(a) = alias_of.get(&id) {
            names.insert(id, a.to_string());
        } else if refs[id.0] > 1 {
            let name = loop {
                counter += 1;
                let candidate = format!("_n{counter}");
                if !taken.contains(candidate.as_str()) {
                    break candidate;
                }
            };
            names.insert(id, name);
        }
    }

    fn render(g: &ScopeGraph, id: NodeId, names: &BTreeMap<NodeId, String>, top: bool, out: &mut String) -> Result<(), DslError> {
        if !top {
            if let Some(n) = names.get(&id) {
                out.push('#');
                out.push_str(n);
                return Ok(());
            }
        }
        match g.node(id) {
            ScopeNode::Tautology => out.push_str("true"),
            ScopeNode::Application { predicate, variable } => {
                out.push_str(&format!("({predicate} {variable})"));
            }
            ScopeNode::Conjunction(cs) => {
                out.push_str("(and");
                for c in cs {
                    out.push(' ');
                    render(g, *c, names, false, out)?;
                }
                out.push(')');
            }
            ScopeNode::Quantifier { kind, bound, restriction, body } => {
                let kw = kind.keyword().ok_or(DslError::CustomQuantifier(id))?;
                out.push_str(&format!("({kw} ({}) ", bound.join(" ")));
                render(g, *restriction, names, false, out)?;
                out.push(' ');
                render(g, *body, names, false, out)?;
                out.push(')');
            }
        }
        Ok(())
    }

    let mut out = String::new();
    if names.is_empty() {
        render(graph, graph.root(), &names, true, &mut out)?;
        out.push('\n');
        return Ok(out);
    }
    out.push_str("(let\n");
    for &id in &order {
        if let Some(name) = names.get(&id) {
            out.push_str(&format!("  ({name} "));
            render(graph, id, &names, true, &mut out)?;
            out.push_str(")\n");
        }
    }
    out.push_str("  ");
    render(graph, graph.root(), &names, true, &mut out)?;
    out.push_str(")\n");
    Ok(out)
}

// ---------------------------------------------------------------------------
// Scenarios

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    states: Vec<StateDoc>,
    utterances: Vec<UtteranceDoc>,
    #[serde(default)]
    alpha: Option<serde_json::Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDoc {
    id: String,
    prior: f64,
    world: String,
    #[serde(default)]
    scheme: Option<String>,
    #[serde(default)]
    param: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UtteranceDoc {
    id: String,
    prop: String,
    #[serde(default)]
    cost: Option<f64>,
    #[serde(default)]
    engine: Option<String>,
}

fn is_inline_prop(s: &str) -> bool {
    let t = s.trim_start();
    t.starts_with('(') || t.starts_with('#') || t.trim_end() == "true"
}

/// Parses a scenario; world and proposition paths are resolved against
/// `base_dir`. Every utterance is validated against every state.
pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<RsaScenario, Vec<SourceDiagnostic>> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| vec![json_syntax_error(text, &e)])?;
    let loc = JsonLocator::new(text);
    let mut diags = Vec::new();
    let at = |path: &[Seg]| loc.locate(path);

    let alpha = match &doc.alpha {
        None => Alpha::Infinite,
        Some(serde_json::Value::String(s)) if s == "inf" => Alpha::Infinite,
        Some(serde_json::Value::Number(n)) => match n.as_f64() {
            Some(a) if a.is_finite() && a > 0.0 => Alpha::Finite(a),
            _ => {
                diags.push(SourceDiagnostic::error(text, at(&[key("alpha")]), "alpha must be a positive number or \"inf\""));
                Alpha::Infinite
            }
        },
        Some(_) => {
            diags.push(SourceDiagnostic::error(text, at(&[key("alpha")]), "alpha must be a positive number or \"inf\""));
            Alpha::Infinite
        }
    };
    if doc.states.is_empty() {
        diags.push(SourceDiagnostic::error(text, at(&[key("states")]), "scenario has no states"));
    }
    if doc.utterances.is_empty() {
        diags.push(SourceDiagnostic::error(text, at(&[key("utterances")]), "scenario has no utterances"));
    }

    let mut states = Vec::new();
    for (i, s) in doc.states.iter().enumerate() {
        let here = |k: &str| at(&[key("states"), Seg::Index(i), key(k)]);
        let scheme = match s.scheme.as_deref() {
            None => LiftScheme::default(),
            Some(name) => match LiftScheme::from_name(name) {
                Some(sc) => sc,
                None => {
                    diags.push(SourceDiagnostic::error(text, here("scheme"), format!("unknown scheme `{name}`")));
                    continue;
                }
            },
        };
        if !s.prior.is_finite() || s.prior < 0.0 {
            diags.push(SourceDiagnostic::error(text, here("prior"), format!("state `{}` has invalid prior {}", s.id, s.prior)));
        }
        let path = base_dir.join(&s.world);
        let world_text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                diags.push(SourceDiagnostic::error(text, here("world"), format!("cannot read world file `{}`: {e}", s.world)));
                continue;
            }
        };
        match parse_world(&world_text) {
            Ok(world) => states.push(RsaState { id: s.id.clone(), prior: s.prior, world, scheme, param: s.param }),
            Err(ds) => diags.extend(ds.into_iter().map(|d| d.in_file(&path.display().to_string()))),
        }
    }
    let total: f64 = doc.states.iter().map(|s| s.prior).sum();
    if !doc.states.is_empty() && (total - 1.0).abs() > crate::model::MASS_TOLERANCE {
        diags.push(SourceDiagnostic::error(text, at(&[key("states")]), format!("priors sum to {}, not 1", round_for_display(total))));
    }

    let mut utterances = Vec::new();
    for (i, u) in doc.utterances.iter().enumerate() {
        let here = |k: &str| at(&[key("utterances"), Seg::Index(i), key(k)]);
        let engine = match u.engine.as_deref() {
            None => EngineKind::Exact,
            Some(name) => match EngineKind::from_name(name) {
                Some(EngineKind::MonteCarlo) | None => {
                    diags.push(SourceDiagnostic::error(
                        text,
                        here("engine"),
                        format!("engine `{name}` is not available for utterances (use exact, naive or generic-fast)"),
                    ));
                    continue;
                }
                Some(e) => e,
            },
        };
        let cost = u.cost.unwrap_or(0.0);
        if !cost.is_finite() || cost < 0.0 {
            diags.push(SourceDiagnostic::error(text, here("cost"), format!("utterance `{}` has invalid cost {cost}", u.id)));
        }
        let parsed = if is_inline_prop(&u.prop) {
            parse_prop(&u.prop).map_err(|ds| {
                ds.into_iter()
                    .map(|d| SourceDiagnostic::error(text, here("prop"), format!("in utterance `{}`: {}", u.id, d.message)))
                    .collect::<Vec<_>>()
            })
        } else {
            let path = base_dir.join(&u.prop);
            match std::fs::read_to_string(&path) {
                Ok(t) => parse_prop(&t).map_err(|ds| ds.into_iter().map(|d| d.in_file(&path.display().to_string())).collect()),
                Err(e) => Err(vec![SourceDiagnostic::error(
                    text,
                    here("prop"),
                    format!("cannot read proposition file `{}`: {e}", u.prop),
                )]),
            }
        };
        match parsed {
            Ok(graph) => utterances.push(Utterance { id: u.id.clone(), graph, cost, engine }),
            Err(ds) => diags.extend(ds),
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }

    RsaScenario::new(states, utterances, alpha).map_err(|e| {
        let pos = match &e {
            RsaError::InvalidUtterance { utterance, .. } => doc
                .utterances
                .iter()
                .position(|u| &u.id == utterance)
                .map(|i| at(&[key("utterances"), Seg::Index(i)]))
                .unwrap_or_else(start),
            RsaError::DuplicateId(_) => start(),
            _ => start(),
        };
        let message = match &e {
            RsaError::InvalidUtterance { utterance, state, diagnostics } => diagnostics
                .iter()
                .map(|d| format!("utterance `{utterance}` in state `{state}`: {}", d.message))
                .collect::<Vec<_>>()
                .join("; "),
            other => other.to_string(),
        };
        vec![SourceDiagnostic::error(text, pos, message)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const RED_WORLD: &str = r#"{
  "pixies": ["x1"],
  "variables": ["X"],
  "joint": [{"assign": {"X": "x1"}, "prob": 1}],
  "predicates": {"red": {"x1": 0.7}}
}"#;

    #[test]
    fn red_world_parses() {
        let w = parse_world(RED_WORLD).unwrap();
        let m = w.model.marginal(&["X"]).unwrap();
        assert_eq!(m.entries, vec![(vec![0], 1.0)]);
        assert_eq!(w.lexicon.get("red").unwrap().prob("x1"), 0.7);
    }

    #[test]
    fn mass_violation_is_located() {
        let text = r#"{"pixies": ["a", "b"], "variables": ["X"],
 "joint": [{"assign": {"X": "a"}, "prob": 0.5}, {"assign": {"X": "b"}, "prob": 0.4}],
 "predicates": {}}"#;
        let d = parse_world(text).unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].message, "joint mass 0.9 ≠ 1");
        assert_eq!((d[0].line, d[0].column), (2, 11));
    }

    #[test]
    fn bad_probability_is_located() {
        let text = "{\"pixies\": [\"a\"], \"variables\": [\"X\"],\n \"joint\": [{\"assign\": {\"X\": \"a\"}, \"prob\": 1}],\n \"predicates\": {\"red\": {\"a\": 1.3}}}";
        let d = parse_world(text).unwrap_err();
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("1.3"), "{}", d[0].message);
        assert_eq!((d[0].line, d[0].column), (3, 30));
        assert_eq!(d[0].snippet, " \"predicates\": {\"red\": {\"a\": 1.3}}}");
    }

    #[test]
    fn unknown_keys_and_syntax_errors() {
        let d = parse_world(r#"{"pixies": ["a"], "variables": [], "joint": [], "colour": 1}"#).unwrap_err();
        assert!(d[0].message.contains("unknown field"), "{}", d[0].message);
        let d = parse_world("{\"pixies\": [\"a\",\n ]}").unwrap_err();
        assert_eq!(d[0].line, 2);
        let d = parse_world("").unwrap_err();
        assert_eq!((d[0].line, d[0].column), (1, 1));
    }

    #[test]
    fn world_round_trip_and_canonical_order() {
        let text = r#"{"pixies": ["b", "a"], "variables": ["Y", "X"],
 "joint": [{"assign": {"X": "b", "Y": "a"}, "prob": 0.25}, {"assign": {"Y": "a", "X": "a"}, "prob": 0.75}],
 "predicates": {"z": {"b": 0.5}, "red": {"b": 0.1, "a": 1}}}"#;
        let w = parse_world(text).unwrap();
        let s = serialize_world(&w);
        let back = parse_world(&s).unwrap();
        assert_eq!(back, w.canonical());
        assert_eq!(serialize_world(&back), s);
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.find("\"red\"").unwrap() < s.find("\"z\"").unwrap());
        let red = serialize_world(&parse_world(RED_WORLD).unwrap());
        assert_eq!(parse_world(&red).unwrap(), parse_world(RED_WORLD).unwrap());
    }

    const PICTURE_STORY: &str = "(every (x) (picture x) (a (z) (story z) (some (y) true (tell y))))";

    #[test]
    fn picture_story_shape() {
        let g = parse_prop(PICTURE_STORY).unwrap();
        let ScopeNode::Quantifier { kind, bound, restriction, body } = g.node(g.root()) else { panic!() };
        assert_eq!((kind, bound.as_slice()), (&QuantifierKind::Every, &["x".to_string()][..]));
        assert!(matches!(g.node(*restriction), ScopeNode::Application { predicate, .. } if predicate == "picture"));
        let ScopeNode::Quantifier { kind, body: inner, .. } = g.node(*body) else { panic!() };
        assert_eq!(kind, &QuantifierKind::Some);
        let ScopeNode::Quantifier { restriction, .. } = g.node(*inner) else { panic!() };
        assert_eq!(g.node(*restriction), &ScopeNode::Tautology);
        assert_eq!(serialize_prop(&g).unwrap(), "(every (x) (picture x) (some (z) (story z) (some (y) true (tell y))))\n");
    }

    #[test]
    fn tautology_prop() {
        let g = parse_prop("  true ; nothing else\n").unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.node(g.root()), &ScopeNode::Tautology);
    }

    pub const DONKEY: &str = "\
; every farmer who owns a donkey feeds it
(let
  (rc (and (some (y) true (own y)) (farmer x)))   ; T_RC
  (dp (and #rc (donkey z)))                         ; T_DP
  (every (x)
    (some (z) #rc (donkey z))
    (generic (z) #dp (some (w) true (feed w)))))
";

    #[test]
    fn donkey_dag_shares_nodes() {
        let g = parse_prop(DONKEY).unwrap();
        let rc = g.aliases()["rc"];
        let counts = g.reference_counts();
        assert_eq!(counts[rc.0], 2);
        let z_binders = g
            .nodes()
            .iter()
            .filter(|n| matches!(n, ScopeNode::Quantifier { bound, .. } if bound == &["z".to_string()]))
            .count();
        assert_eq!(z_binders, 2);
        let text = serialize_prop(&g).unwrap();
        let back = parse_prop(&text).unwrap();
        assert!(back.structurally_eq(&g));
        assert_eq!(serialize_prop(&back).unwrap(), text);
    }

    #[test]
    fn prop_errors_are_located() {
        let cases = [
            ("(every (x) (red x)", "end of input"),
            ("(evry (x) (red x) (red x))", "unknown quantifier"),
            ("(let (t true) (t true) #t)", "duplicate let name"),
            ("(some () true true)", "at least one variable"),
            ("(and)", "at least one conjunct"),
            ("(some (x) true #nope)", "unknown reference"),
            ("true true", "after the proposition"),
            ("(some (x) true (let (a true) #a))", "only allowed"),
            (")", "unexpected `)`"),
            ("(red x y)", "exactly one variable"),
        ];
        for (text, needle) in cases {
            let d = parse_prop(text).unwrap_err();
            assert!(d[0].message.contains(needle), "{text}: {}", d[0].message);
            assert!(d[0].line >= 1 && d[0].column >= 1);
            assert!(d[0].column <= text.lines().nth(d[0].line - 1).unwrap().chars().count());
        }
    }

    #[test]
    fn let_without_bindings_and_shared_root_alias() {
        let g = parse_prop("(let (some (x) true (red x)))").unwrap();
        assert!(matches!(g.node(g.root()), ScopeNode::Quantifier { .. }));
        let g = parse_prop("(let (q (some (x) true (red x))) #q)").unwrap();
        assert!(matches!(g.node(g.root()), ScopeNode::Quantifier { .. }));
        let back = parse_prop(&serialize_prop(&g).unwrap()).unwrap();
        assert!(back.structurally_eq(&g));
    }
}
