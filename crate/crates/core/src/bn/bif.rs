//! Discrete BIF import.
//!
//! Supports `network`, `variable ... type discrete [ n ] { ... }` and
//! `probability ( X | P1, P2 )` blocks with `table`, `default` and
//! per-configuration `( s1, s2 ) p1, p2;` entries. `property` lines are
//! skipped. A `table` over a conditional variable lists the child's states
//! slowest and the parent configurations in canonical order within each.

use std::collections::HashMap;

use super::{Network, NetworkError, RawNetwork, RawVariable};
use crate::scalar::Prob;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> NetworkError {
    NetworkError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>, NetworkError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (l, k) = (line, col);
            bump!();
            bump!();
            loop {
                if i + 1 >= chars.len() {
                    return Err(syntax(l, k, "unterminated comment"));
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
        } else if "{}()[];,|".contains(c) {
            tokens.push(Token {
                tok: Tok::Punct(c),
                line,
                column: col,
            });
            bump!();
        } else if c == '"' {
            let (l, k) = (line, col);
            bump!();
            let mut word = String::new();
            while i < chars.len() && chars[i] != '"' {
                word.push(chars[i]);
                bump!();
            }
            if i >= chars.len() {
                return Err(syntax(l, k, "unterminated string"));
            }
            bump!();
            tokens.push(Token {
                tok: Tok::Word(word),
                line: l,
                column: k,
            });
        } else {
            let (l, k) = (line, col);
            let mut word = String::new();
            while i < chars.len() && !chars[i].is_whitespace() && !"{}()[];,|\"".contains(chars[i]) {
                word.push(chars[i]);
                bump!();
            }
            tokens.push(Token {
                tok: Tok::Word(word),
                line: l,
                column: k,
            });
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

struct VarDecl {
    name: String,
    states: Vec<String>,
}

struct ProbBlock {
    child: String,
    parents: Vec<String>,
    line: usize,
    column: usize,
    table: Option<Vec<f64>>,
    default: Option<Vec<f64>>,
    entries: Vec<(Vec<String>, Vec<f64>, usize, usize)>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eof_pos(&self) -> (usize, usize) {
        self.tokens.last().map(|t| (t.line, t.column)).unwrap_or((1, 1))
    }

    fn next(&mut self) -> Result<Token, NetworkError> {
        let t = self.tokens.get(self.pos).cloned().ok_or_else(|| {
            let (l, c) = self.eof_pos();
            syntax(l, c, "unexpected end of input")
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn expect_punct(&mut self, p: char) -> Result<Token, NetworkError> {
        let t = self.next()?;
        if t.tok == Tok::Punct(p) {
            Ok(t)
        } else {
            Err(syntax(t.line, t.column, format!("expected `{p}`, found {:?}", t.tok)))
        }
    }

    fn word(&mut self) -> Result<(String, usize, usize), NetworkError> {
        let t = self.next()?;
        match t.tok {
            Tok::Word(w) => Ok((w, t.line, t.column)),
            other => Err(syntax(t.line, t.column, format!("expected a word, found {other:?}"))),
        }
    }

    fn is_punct(&self, p: char) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Punct(q), .. }) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Word(x), .. }) if x == w)
    }

    fn skip_until_semicolon(&mut self) -> Result<(), NetworkError> {
        loop {
            let t = self.next()?;
            if t.tok == Tok::Punct(';') {
                return Ok(());
            }
        }
    }

    fn number(&mut self) -> Result<f64, NetworkError> {
        let (w, l, c) = self.word()?;
        w.parse::<f64>()
            .map_err(|_| syntax(l, c, format!("expected a number, found `{w}`")))
    }

    /// Numbers separated by commas or whitespace up to `;`.
    fn numbers_until_semicolon(&mut self) -> Result<Vec<f64>, NetworkError> {
        let mut out = Vec::new();
        loop {
            if self.is_punct(';') {
                self.pos += 1;
                return Ok(out);
            }
            if self.is_punct(',') {
                self.pos += 1;
                continue;
            }
            out.push(self.number()?);
        }
    }

    fn names_in_parens(&mut self) -> Result<Vec<String>, NetworkError> {
        self.expect_punct('(')?;
        let mut out = Vec::new();
        loop {
            if self.is_punct(')') {
                self.pos += 1;
                return Ok(out);
            }
            if self.is_punct(',') {
                self.pos += 1;
                continue;
            }
            out.push(self.word()?.0);
        }
    }

    fn network_block(&mut self) -> Result<Option<String>, NetworkError> {
        let name = if self.is_punct('{') { None } else { Some(self.word()?.0) };
        self.expect_punct('{')?;
        while !self.is_punct('}') {
            self.skip_until_semicolon()?;
        }
        self.pos += 1;
        Ok(name)
    }

    fn variable_block(&mut self) -> Result<VarDecl, NetworkError> {
        let (name, ..) = self.word()?;
        self.expect_punct('{')?;
        let mut states = None;
        while !self.is_punct('}') {
            if self.is_word("type") {
                self.pos += 1;
                let (kind, l, c) = self.word()?;
                if kind != "discrete" {
                    return Err(syntax(l, c, format!("unsupported variable type `{kind}`")));
                }
                self.expect_punct('[')?;
                let (n, nl, nc) = self.word()?;
                let n: usize = n.parse().map_err(|_| syntax(nl, nc, "expected a state count"))?;
                self.expect_punct(']')?;
                self.expect_punct('{')?;
                let mut s = Vec::new();
                while !self.is_punct('}') {
                    if self.is_punct(',') {
                        self.pos += 1;
                        continue;
                    }
                    s.push(self.word()?.0);
                }
                self.pos += 1;
                self.expect_punct(';')?;
                if s.len() != n {
                    return Err(syntax(
                        nl,
                        nc,
                        format!("`{name}` declares {n} states but lists {}", s.len()),
                    ));
                }
                states = Some(s);
            } else {
                self.skip_until_semicolon()?;
            }
        }
        self.pos += 1;
        let open = &self.tokens[self.pos - 1];
        let states = states.ok_or_else(|| syntax(open.line, open.column, format!("`{name}` has no type")))?;
        Ok(VarDecl { name, states })
    }

    fn probability_block(&mut self) -> Result<ProbBlock, NetworkError> {
        let open = self.expect_punct('(')?;
        let (child, ..) = self.word()?;
        let mut parents = Vec::new();
        if self.is_punct('|') {
            self.pos += 1;
            loop {
                if self.is_punct(')') {
                    break;
                }
                if self.is_punct(',') {
                    self.pos += 1;
                    continue;
                }
                parents.push(self.word()?.0);
            }
        }
        self.expect_punct(')')?;
        self.expect_punct('{')?;
        let mut block = ProbBlock {
            child,
            parents,
            line: open.line,
            column: open.column,
            table: None,
            default: None,
            entries: Vec::new(),
        };
        while !self.is_punct('}') {
            if self.is_word("table") {
                self.pos += 1;
                block.table = Some(self.numbers_until_semicolon()?);
            } else if self.is_word("default") {
                self.pos += 1;
                block.default = Some(self.numbers_until_semicolon()?);
            } else if self.is_punct('(') {
                let t = self.peek().cloned().expect("peeked");
                let states = self.names_in_parens()?;
                let values = self.numbers_until_semicolon()?;
                block.entries.push((states, values, t.line, t.column));
            } else {
                self.skip_until_semicolon()?;
            }
        }
        self.pos += 1;
        Ok(block)
    }
}

/// Parses the discrete subset of BIF into a validated network.
pub fn parse_bif<T: Prob>(text: &str) -> Result<Network<T>, NetworkError> {
    let mut p = Parser {
        tokens: tokenize(text)?,
        pos: 0,
    };
    let mut name = None;
    let mut decls: Vec<VarDecl> = Vec::new();
    let mut blocks: Vec<ProbBlock> = Vec::new();
    while p.peek().is_some() {
        let (kw, l, c) = p.word()?;
        match kw.as_str() {
            "network" => name = p.network_block()?,
            "variable" => decls.push(p.variable_block()?),
            "probability" => blocks.push(p.probability_block()?),
            other => return Err(syntax(l, c, format!("unexpected `{other}`"))),
        }
    }

    let states: HashMap<&str, &[String]> = decls.iter().map(|d| (d.name.as_str(), d.states.as_slice())).collect();
    let mut by_child: HashMap<String, ProbBlock> = HashMap::new();
    for b in blocks {
        if !states.contains_key(b.child.as_str()) {
            return Err(syntax(b.line, b.column, format!("unknown variable `{}`", b.child)));
        }
        for par in &b.parents {
            if !states.contains_key(par.as_str()) {
                return Err(syntax(b.line, b.column, format!("unknown parent `{par}`")));
            }
        }
        if by_child.contains_key(&b.child) {
            return Err(syntax(b.line, b.column, format!("second CPT for `{}`", b.child)));
        }
        by_child.insert(b.child.clone(), b);
    }

    let mut variables = Vec::with_capacity(decls.len());
    for d in &decls {
        let block = by_child.get(&d.name);
        let parents = block.map(|b| b.parents.clone()).unwrap_or_default();
        let cpt = match block {
            None => Vec::new(),
            Some(b) => block_rows(b, &d.states, &states)?,
        };
        variables.push(RawVariable {
            name: d.name.clone(),
            states: d.states.clone(),
            parents,
            cpt: cpt
                .into_iter()
                .map(|row| row.into_iter().map(T::lit).collect())
                .collect(),
        });
    }
    Network::from_raw(RawNetwork {
        name: name.unwrap_or_else(|| "unnamed".to_string()),
        variables,
    })
}

/// Rows in canonical order. Missing rows are dropped so that validation
/// reports the row count mismatch.
fn block_rows(
    b: &ProbBlock,
    child_states: &[String],
    states: &HashMap<&str, &[String]>,
) -> Result<Vec<Vec<f64>>, NetworkError> {
    let m = child_states.len();
    let cards: Vec<usize> = b.parents.iter().map(|p| states[p.as_str()].len()).collect();
    let n_rows: usize = cards.iter().product();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; n_rows];

    if let Some(table) = &b.table {
        if table.len() != n_rows * m {
            return Err(syntax(
                b.line,
                b.column,
                format!(
                    "row count mismatch: table for `{}` has {} values, expected {}",
                    b.child,
                    table.len(),
                    n_rows * m
                ),
            ));
        }
        for (r, row) in rows.iter_mut().enumerate() {
            *row = Some((0..m).map(|s| table[s * n_rows + r]).collect());
        }
    }
    for (labels, values, line, column) in &b.entries {
        if labels.len() != b.parents.len() {
            return Err(syntax(*line, *column, "configuration arity differs from parent count"));
        }
        let mut r = 0;
        for ((label, parent), card) in labels.iter().zip(&b.parents).zip(&cards) {
            let s = states[parent.as_str()]
                .iter()
                .position(|x| x == label)
                .ok_or_else(|| syntax(*line, *column, format!("unknown state `{label}` of `{parent}`")))?;
            r = r * card + s;
        }
        rows[r] = Some(values.clone());
    }
    if let Some(default) = &b.default {
        for row in rows.iter_mut().filter(|r| r.is_none()) {
            *row = Some(default.clone());
        }
    }
    Ok(rows.into_iter().flatten().collect())
}
