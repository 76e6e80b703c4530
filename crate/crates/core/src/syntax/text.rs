//! Line-oriented text format.
//!
//! ```text
//! # comment
//! CI: A [= some r.(B and C)
//! CI: A == B and some r.top        # split into two CIs
//! RI: r [= s
//! A: B(a)
//! A: r(a,b)
//! A: c                              # declared individual
//! Q: AQ A(a)
//! Q: IQ some r.B (a)
//! Q: IQ r(a,b)
//! Q: CQ a ; exists x y ; r(a,x), s(x,y), B(y)
//! ```
//! Unicode `⊤ ⊓ ∃ ⊑ ≡` are accepted in place of `top and some [= ==`.

use super::{ABox, Assertion, Ci, Concept, Cq, Name, Query, Ri, TBox};
use crate::error::{Error, Result};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParseOptions {
    /// Merge `A ⊑ C`, `A ⊑ D` into `A ⊑ C ⊓ D`.
    pub merge_definitions: bool,
    /// Accept `A == C` as the two CIs `A ⊑ C`, `C ⊑ A`.
    pub split_equivalences: bool,
    /// Reject TBoxes that are not terminologies.
    pub require_terminology: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { merge_definitions: true, split_equivalences: true, require_terminology: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Document {
    pub tbox: TBox,
    pub abox: ABox,
    pub queries: Vec<Query>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Dot,
    Sub,
    Equiv,
    And,
    Some,
    Top,
    Exists,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
}

fn tokenize(src: &str, line: usize, col0: usize) -> Result<Lexer> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '.' => Some(Tok::Dot),
            '⊑' => Some(Tok::Sub),
            '≡' => Some(Tok::Equiv),
            '⊓' => Some(Tok::And),
            '∃' => Some(Tok::Some),
            '⊤' => Some(Tok::Top),
            _ => None,
        };
        if let Some(t) = single {
            toks.push((t, col));
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c == '[' && chars.get(i + 1) == Some(&'=') {
            toks.push((Tok::Sub, col));
            i += 2;
        } else if c == '=' && chars.get(i + 1) == Some(&'=') {
            toks.push((Tok::Equiv, col));
            i += 2;
        } else if c.is_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "and" => Tok::And,
                "some" => Tok::Some,
                "top" => Tok::Top,
                "exists" => Tok::Exists,
                _ => {
                    if !super::is_valid_name(&word) {
                        return Err(Error::Syntax { line, col, msg: format!("invalid name `{word}`") });
                    }
                    Tok::Ident(word)
                }
            };
            toks.push((tok, col));
        } else {
            return Err(Error::Syntax { line, col, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(Lexer { toks, pos: 0, line, end_col: col0 + chars.len() })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(_, c)| *c).unwrap_or(self.end_col)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { line: self.line, col: self.col(), msg: msg.into() })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<Name> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let n = Name::from(s.as_str());
                self.pos += 1;
                Ok(n)
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn finish(&self) -> Result<()> {
        if self.at_end() {
            Ok(())
        } else {
            self.err("unexpected trailing input")
        }
    }

    fn concept(&mut self) -> Result<Concept> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(Concept::and(parts))
    }

    fn unary(&mut self) -> Result<Concept> {
        match self.peek() {
            Some(Tok::Top) => {
                self.pos += 1;
                Ok(Concept::Top)
            }
            Some(Tok::Ident(_)) => Ok(Concept::Name(self.ident("concept name")?)),
            Some(Tok::Some) => {
                self.pos += 1;
                let r = self.ident("role name")?;
                self.expect(Tok::Dot, "`.`")?;
                Ok(Concept::exists(r, self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let c = self.concept()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(c)
            }
            _ => self.err("expected a concept"),
        }
    }

    /// `Name(t)` or `role(t,t)`.
    fn atom(&mut self) -> Result<Assertion> {
        let p = self.ident("concept or role name")?;
        self.expect(Tok::LParen, "`(`")?;
        let a = self.ident("term")?;
        if self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            let b = self.ident("term")?;
            self.expect(Tok::RParen, "`)`")?;
            Ok(Assertion::Role { role: p, from: a, to: b })
        } else {
            self.expect(Tok::RParen, "`)`")?;
            Ok(Assertion::Concept { concept: p, ind: a })
        }
    }

    fn query(&mut self) -> Result<Query> {
        let kind = self.ident("AQ, IQ or CQ")?;
        match kind.as_str() {
            "AQ" => Ok(Query::Aq(self.atom()?)),
            "IQ" => {
                let is_role = matches!(
                    (self.peek(), self.peek_at(1), self.peek_at(3)),
                    (Some(Tok::Ident(_)), Some(Tok::LParen), Some(Tok::Comma))
                );
                if is_role {
                    match self.atom()? {
                        Assertion::Role { role, from, to } => Ok(Query::IqRole { role, from, to }),
                        Assertion::Concept { .. } => unreachable!(),
                    }
                } else {
                    let c = self.concept()?;
                    self.expect(Tok::LParen, "`(`")?;
                    let a = self.ident("individual")?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Query::iq(c, a))
                }
            }
            "CQ" => {
                let mut answer = Vec::new();
                while let Some(Tok::Ident(_)) = self.peek() {
                    answer.push(self.ident("individual")?);
                }
                self.expect(Tok::Semi, "`;`")?;
                let mut vars = Vec::new();
                if self.peek() == Some(&Tok::Exists) {
                    self.pos += 1;
                    while let Some(Tok::Ident(_)) = self.peek() {
                        vars.push(self.ident("variable")?);
                    }
                    self.expect(Tok::Semi, "`;`")?;
                }
                let mut atoms = vec![self.atom()?];
                while self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    atoms.push(self.atom()?);
                }
                let col = self.col();
                Cq::new(answer, vars, atoms).map(Query::Cq).map_err(|e| Error::Syntax {
                    line: self.line,
                    col,
                    msg: e.to_string(),
                })
            }
            other => self.err(format!("unknown query kind `{other}`")),
        }
    }
}

/// Parses a whole document in the line format.
pub fn parse_document(src: &str, opts: ParseOptions) -> Result<Document> {
    let mut doc = Document::default();
    let mut tbox = TBox::new();
    for (ln, raw) in src.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let Some(colon) = body.find(':') else {
            return Err(Error::Syntax { line, col: 1, msg: "expected `CI:`, `RI:`, `A:` or `Q:`".into() });
        };
        let tag = body[..colon].trim();
        let rest = &body[colon + 1..];
        let col0 = body[..colon + 1].chars().count() + 1;
        let mut lx = tokenize(rest, line, col0)?;
        match tag {
            "CI" => {
                let lhs = lx.concept()?;
                match lx.next() {
                    Some(Tok::Sub) => {
                        let rhs = lx.concept()?;
                        lx.finish()?;
                        tbox.add_ci(Ci::new(lhs, rhs));
                    }
                    Some(Tok::Equiv) if opts.split_equivalences => {
                        let rhs = lx.concept()?;
                        lx.finish()?;
                        tbox.add_ci(Ci::new(lhs.clone(), rhs.clone()));
                        tbox.add_ci(Ci::new(rhs, lhs));
                    }
                    _ => {
                        lx.pos = lx.pos.saturating_sub(1);
                        return lx.err("expected `[=`");
                    }
                }
            }
            "RI" => {
                let r = lx.ident("role name")?;
                lx.expect(Tok::Sub, "`[=`")?;
                let s = lx.ident("role name")?;
                lx.finish()?;
                tbox.add_ri(Ri::new(r, s));
            }
            "A" => {
                if lx.peek_at(1).is_none() {
                    let a = lx.ident("individual")?;
                    doc.abox.declare(a);
                } else {
                    let a = lx.atom()?;
                    lx.finish()?;
                    doc.abox.insert(a);
                }
            }
            "Q" => {
                let q = lx.query()?;
                lx.finish()?;
                doc.queries.push(q);
            }
            other => {
                return Err(Error::Syntax { line, col: 1, msg: format!("unknown line kind `{other}`") })
            }
        }
    }
    if opts.merge_definitions {
        tbox = tbox.merged();
    }
    if opts.require_terminology {
        tbox.check_terminology()?;
    }
    check_namespaces(&doc, &tbox)?;
    doc.tbox = tbox;
    Ok(doc)
}

fn check_namespaces(doc: &Document, tbox: &TBox) -> Result<()> {
    let mut sig = tbox.signature().union(&doc.abox.signature());
    for q in &doc.queries {
        sig = sig.union(&q.signature());
    }
    if let Some(n) = sig.concepts.intersection(&sig.roles).next() {
        return Err(Error::Data(format!("`{n}` used both as concept and role name")));
    }
    let inds: BTreeSet<&Name> = doc.abox.ind().iter().collect();
    if let Some(n) = inds.iter().find(|n| sig.concepts.contains(**n) || sig.roles.contains(**n)) {
        return Err(Error::Data(format!("`{n}` used both as individual and as concept or role name")));
    }
    Ok(())
}

pub fn parse_tbox(src: &str) -> Result<TBox> {
    Ok(parse_document(src, ParseOptions::default())?.tbox)
}

pub fn parse_abox(src: &str) -> Result<ABox> {
    Ok(parse_document(src, ParseOptions::default())?.abox)
}

/// Parses one query, with or without the `Q:` tag.
pub fn parse_query(src: &str) -> Result<Query> {
    let src = src.trim();
    let body = src.strip_prefix("Q:").unwrap_or(src);
    let mut lx = tokenize(body, 1, 1)?;
    let q = lx.query()?;
    lx.finish()?;
    Ok(q)
}

pub fn parse_concept(src: &str) -> Result<Concept> {
    let mut lx = tokenize(src, 1, 1)?;
    let c = lx.concept()?;
    lx.finish()?;
    Ok(c)
}

pub(crate) fn tbox_to_text(t: &TBox) -> String {
    let mut out = String::new();
    for ci in t.cis() {
        out.push_str(&format!("CI: {} [= {}\n", ci.lhs.to_ascii(), ci.rhs.to_ascii()));
    }
    for ri in t.ris() {
        out.push_str(&format!("RI: {} [= {}\n", ri.sub, ri.sup));
    }
    out
}

pub(crate) fn abox_to_text(a: &ABox) -> String {
    let mut out = String::new();
    let mut mentioned = BTreeSet::new();
    for x in a.assertions() {
        mentioned.extend(x.terms().into_iter().cloned());
        out.push_str(&format!("A: {x}\n"));
    }
    for i in a.ind().iter().filter(|i| !mentioned.contains(*i)) {
        out.push_str(&format!("A: {i}\n"));
    }
    out
}

pub(crate) fn query_to_text(q: &Query) -> String {
    match q {
        Query::Aq(a) => format!("Q: AQ {a}"),
        Query::Iq { concept, ind } => format!("Q: IQ {} ({ind})", concept.to_ascii()),
        Query::IqRole { role, from, to } => format!("Q: IQ {role}({from},{to})"),
        Query::Cq(cq) => {
            let answer: Vec<&str> = cq.answer.iter().map(Name::as_str).collect();
            let vars: Vec<&str> = cq.vars.iter().map(Name::as_str).collect();
            let atoms: Vec<String> = cq.atoms.iter().map(|a| a.to_string()).collect();
            let exists = if vars.is_empty() { String::new() } else { format!("exists {} ; ", vars.join(" ")) };
            let lead = if answer.is_empty() { String::new() } else { format!("{} ", answer.join(" ")) };
            format!("Q: CQ {lead}; {exists}{}", atoms.join(", "))
        }
    }
}
