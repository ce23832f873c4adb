//! Reader and writer for the line-oriented network format:
//!
//! ```text
//! # comment
//! variable gender { male, female }
//! cpt gender {
//!   0.5, 0.5
//! }
//! cpt married | gender {
//!   male: 0.7, 0.3
//!   female: 0.6, 0.4
//! }
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{BayesianNetwork, BnError, Cpt, NetworkDraft, VariableSpec};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Open,
    Close,
    Comma,
    Colon,
    Pipe,
    Newline,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '{' | '}' | ',' | ':' | '|' | '#')
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (_, c) = chars[i];
            let column = i + 1;
            let simple = match c {
                '#' => break,
                '{' => Some(Tok::Open),
                '}' => Some(Tok::Close),
                ',' => Some(Tok::Comma),
                ':' => Some(Tok::Colon),
                '|' => Some(Tok::Pipe),
                _ => None,
            };
            if let Some(tok) = simple {
                out.push(Token { tok, line: line_no, column });
                i += 1;
            } else if c.is_whitespace() {
                i += 1;
            } else {
                let start = i;
                while i < chars.len() && is_word_char(chars[i].1) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                out.push(Token {
                    tok: Tok::Word(word),
                    line: line_no,
                    column,
                });
            }
        }
        out.push(Token {
            tok: Tok::Newline,
            line: line_no,
            column: line.chars().count() + 1,
        });
    }
    let last = out.last().map_or(1, |t| t.line + 1);
    out.push(Token {
        tok: Tok::Eof,
        line: last,
        column: 1,
    });
    out
}

struct RawVariable {
    spec: VariableSpec,
    line: usize,
}

struct RawRow {
    labels: Vec<(String, usize)>,
    probs: Vec<f64>,
    line: usize,
}

struct RawCpt {
    child: String,
    line: usize,
    parents: Vec<(String, usize)>,
    rows: Vec<RawRow>,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn syntax(token: &Token, message: impl Into<String>) -> BnError {
    BnError::Syntax {
        line: token.line,
        column: token.column,
        message: message.into(),
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Word(w) => format!("`{w}`"),
        Tok::Open => "`{`".into(),
        Tok::Close => "`}`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Colon => "`:`".into(),
        Tok::Pipe => "`|`".into(),
        Tok::Newline => "end of line".into(),
        Tok::Eof => "end of input".into(),
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.pos += 1;
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, BnError> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(syntax(&t, format!("expected {what}, found {}", describe(&t.tok))))
        }
    }

    fn word(&mut self, what: &str) -> Result<(String, Token), BnError> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) => Ok((w.clone(), t.clone())),
            other => Err(syntax(&t, format!("expected {what}, found {}", describe(other)))),
        }
    }

    fn end_of_statement(&mut self) -> Result<(), BnError> {
        let t = self.next();
        match t.tok {
            Tok::Newline | Tok::Eof => Ok(()),
            ref other => Err(syntax(&t, format!("expected end of line, found {}", describe(other)))),
        }
    }

    fn variable(&mut self, line: usize) -> Result<RawVariable, BnError> {
        let (name, _) = self.word("variable name")?;
        self.expect(Tok::Open, "`{`")?;
        let mut domain = Vec::new();
        loop {
            self.skip_newlines();
            let (label, _) = self.word("domain value")?;
            domain.push(label);
            self.skip_newlines();
            let t = self.next();
            match t.tok {
                Tok::Comma => continue,
                Tok::Close => break,
                ref other => {
                    return Err(syntax(&t, format!("expected `,` or `}}`, found {}", describe(other))))
                }
            }
        }
        self.end_of_statement()?;
        Ok(RawVariable {
            spec: VariableSpec { name, domain },
            line,
        })
    }

    fn cpt(&mut self, line: usize) -> Result<RawCpt, BnError> {
        let (child, _) = self.word("variable name")?;
        let mut parents = Vec::new();
        if self.peek().tok == Tok::Pipe {
            self.next();
            loop {
                let (p, t) = self.word("parent name")?;
                parents.push((p, t.line));
                if self.peek().tok == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::Open, "`{`")?;
        let mut rows = Vec::new();
        loop {
            self.skip_newlines();
            if self.peek().tok == Tok::Close {
                self.next();
                break;
            }
            if self.peek().tok == Tok::Eof {
                return Err(syntax(self.peek(), format!("unterminated cpt for `{child}`")));
            }
            rows.push(self.row()?);
        }
        self.end_of_statement()?;
        Ok(RawCpt {
            child,
            line,
            parents,
            rows,
        })
    }

    fn row(&mut self) -> Result<RawRow, BnError> {
        let line = self.peek().line;
        let has_labels = self.tokens[self.pos..]
            .iter()
            .take_while(|t| !matches!(t.tok, Tok::Newline | Tok::Close | Tok::Eof))
            .any(|t| t.tok == Tok::Colon);
        let mut labels = Vec::new();
        if has_labels {
            loop {
                let (label, t) = self.word("parent value")?;
                labels.push((label, t.column));
                let t = self.next();
                match t.tok {
                    Tok::Comma => continue,
                    Tok::Colon => break,
                    ref other => {
                        return Err(syntax(&t, format!("expected `,` or `:`, found {}", describe(other))))
                    }
                }
            }
        }
        let mut probs = Vec::new();
        loop {
            let (literal, t) = self.word("probability")?;
            let p: f64 = literal
                .parse()
                .ok()
                .filter(|p: &f64| p.is_finite())
                .ok_or_else(|| syntax(&t, format!("`{literal}` is not a probability")))?;
            probs.push(p);
            match self.peek().tok {
                Tok::Comma => {
                    self.next();
                }
                Tok::Newline | Tok::Eof => {
                    self.next();
                    break;
                }
                Tok::Close => break,
                ref other => {
                    let msg = format!("expected `,` or end of line, found {}", describe(other));
                    return Err(syntax(self.peek(), msg));
                }
            }
        }
        Ok(RawRow { labels, probs, line })
    }
}

/// Parses a network document and validates it.
pub fn parse_bn(text: &str) -> Result<BayesianNetwork, BnError> {
    parse_draft(text)?.build()
}

/// Parses a network document without running the validation pass.
pub(crate) fn parse_draft(text: &str) -> Result<NetworkDraft, BnError> {
    let mut parser = Parser {
        tokens: tokenize(text),
        pos: 0,
    };
    let mut variables: Vec<RawVariable> = Vec::new();
    let mut cpts: Vec<RawCpt> = Vec::new();
    loop {
        parser.skip_newlines();
        let t = parser.next();
        match &t.tok {
            Tok::Eof => break,
            Tok::Word(w) if w == "variable" => variables.push(parser.variable(t.line)?),
            Tok::Word(w) if w == "cpt" => cpts.push(parser.cpt(t.line)?),
            other => {
                return Err(syntax(&t, format!("expected `variable` or `cpt`, found {}", describe(other))))
            }
        }
    }

    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, v) in variables.iter().enumerate() {
        if index.insert(v.spec.name.as_str(), i).is_some() {
            return Err(BnError::DuplicateVariable {
                name: v.spec.name.clone(),
                line: v.line,
            });
        }
    }

    let mut out_cpts = Vec::with_capacity(cpts.len());
    for raw in &cpts {
        let &child = index.get(raw.child.as_str()).ok_or_else(|| BnError::UndeclaredVariable {
            name: raw.child.clone(),
            line: raw.line,
        })?;
        let mut parent_ids = Vec::with_capacity(raw.parents.len());
        for (p, line) in &raw.parents {
            let &id = index.get(p.as_str()).ok_or_else(|| BnError::UndeclaredVariable {
                name: p.clone(),
                line: *line,
            })?;
            parent_ids.push(id);
        }
        let card = variables[child].spec.cardinality();
        let n_rows: usize = parent_ids
            .iter()
            .map(|&p| variables[p].spec.cardinality())
            .product();
        let mut filled: Vec<Option<usize>> = vec![None; n_rows];
        let mut probs = vec![0.0; n_rows * card];
        for row in &raw.rows {
            if row.labels.len() != parent_ids.len() {
                return Err(BnError::Syntax {
                    line: row.line,
                    column: 1,
                    message: format!(
                        "cpt of `{}` needs {} parent value(s) per row, found {}",
                        raw.child,
                        parent_ids.len(),
                        row.labels.len()
                    ),
                });
            }
            let mut r = 0;
            for ((label, column), &p) in row.labels.iter().zip(&parent_ids) {
                let spec = &variables[p].spec;
                let v = spec.value_index(label).ok_or_else(|| BnError::Syntax {
                    line: row.line,
                    column: *column,
                    message: format!("`{label}` is not a value of `{}`", spec.name),
                })?;
                r = r * spec.cardinality() + v;
            }
            if let Some(prev) = filled[r] {
                return Err(BnError::Syntax {
                    line: row.line,
                    column: 1,
                    message: format!("row duplicates the one on line {prev}"),
                });
            }
            if row.probs.len() != card {
                return Err(BnError::Syntax {
                    line: row.line,
                    column: 1,
                    message: format!(
                        "`{}` has {} values but the row gives {} probabilities",
                        raw.child,
                        card,
                        row.probs.len()
                    ),
                });
            }
            filled[r] = Some(row.line);
            probs[r * card..(r + 1) * card].copy_from_slice(&row.probs);
        }
        if let Some(missing) = filled.iter().position(Option::is_none) {
            let specs: Vec<&VariableSpec> = parent_ids.iter().map(|&p| &variables[p].spec).collect();
            return Err(BnError::Syntax {
                line: raw.line,
                column: 1,
                message: format!(
                    "cpt of `{}` is missing row [{}]",
                    raw.child,
                    super::row_label(&specs, missing)
                ),
            });
        }
        out_cpts.push(Cpt::new(
            raw.child.clone(),
            raw.parents.iter().map(|(p, _)| p.clone()).collect(),
            probs,
        ));
    }

    Ok(NetworkDraft::new(
        variables.into_iter().map(|v| v.spec).collect(),
        out_cpts,
    ))
}

pub(super) fn write_bn(bn: &BayesianNetwork) -> String {
    let mut out = String::new();
    for var in bn.variables() {
        let _ = writeln!(out, "variable {} {{ {} }}", var.name, var.domain.join(", "));
    }
    for (i, var) in bn.variables().iter().enumerate() {
        let cpt = bn.cpt(i);
        out.push('\n');
        if cpt.parents.is_empty() {
            let _ = writeln!(out, "cpt {} {{", var.name);
        } else {
            let _ = writeln!(out, "cpt {} | {} {{", var.name, cpt.parents.join(", "));
        }
        let parents = bn.parents(i);
        let card = var.cardinality();
        for (r, row) in cpt.probs.chunks(card).enumerate() {
            out.push_str("  ");
            if !parents.is_empty() {
                let mut labels = vec![""; parents.len()];
                let mut rest = r;
                for (slot, &p) in parents.iter().enumerate().rev() {
                    let pc = bn.cardinality(p);
                    labels[slot] = &bn.variable(p).domain[rest % pc];
                    rest /= pc;
                }
                let _ = write!(out, "{}: ", labels.join(", "));
            }
            let probs: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            out.push_str(&probs.join(", "));
            out.push('\n');
        }
        out.push_str("}\n");
    }
    out
}
