//! Surface syntax: parsing `.cpi` text into processes and rendering them back.
//!
//! ```text
//! P      ::= "0" | prefix "." P | P "|" P | "new" ident ("," ident)* "in" P | "!" P | "(" P ")"
//! prefix ::= ident "!" "<" ident ("," ident)* ">"
//!          | ident "?" "(" ident ("," ident)* ")"
//!          | "[" ident "=" ident "]" prefix
//! ```
//!
//! `|` is the loosest operator and associates to the left; `!` and `new ... in`
//! extend as far to the right as possible; `.` binds tighter than `|`.
//! Comments run from `--` to the end of the line.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::name::{Name, NameKind, RESERVED_PREFIX};
use crate::syntax::{rename_apart, validate_cpi, Prefix, Process};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseMode {
    /// Reject terms that forward received names or bind channels in inputs.
    #[default]
    #[serde(rename = "cpi")]
    CpiStrict,
    /// Full pi-calculus: output objects are unrestricted.
    #[serde(rename = "pi")]
    PiFull,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    pub mode: ParseMode,
    /// Accept `#`-prefixed identifiers (for re-reading rendered encoder output).
    pub allow_reserved: bool,
}

impl From<ParseMode> for ParseOptions {
    fn from(mode: ParseMode) -> Self {
        ParseOptions { mode, allow_reserved: false }
    }
}

/// Parses `text` and renames binders apart.
///
/// Identifiers bound by an input are variables, identifiers bound by `new` are
/// channels, and free identifiers are channels.
pub fn parse(text: &str, options: impl Into<ParseOptions>) -> Result<Process> {
    let options = options.into();
    let tokens = lex(text, options.allow_reserved)?;
    let mut parser = Parser { tokens, pos: 0, scope: Vec::new() };
    let p = parser.par()?;
    parser.expect_end()?;
    let p = rename_apart(&p);

    let report = validate_cpi(&p);
    if let Some(v) = report.sort_errors().next() {
        return Err(Error::Sort(v.to_string()));
    }
    if options.mode == ParseMode::CpiStrict && !report.is_valid() {
        return Err(Error::CpiViolation(report));
    }
    Ok(p)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Zero,
    New,
    In,
    Bang,
    Query,
    Lt,
    Gt,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Eq,
    Comma,
    Dot,
    Pipe,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Zero => "`0`".into(),
            Tok::New => "`new`".into(),
            Tok::In => "`in`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Query => "`?`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str, allow_reserved: bool) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '-' {
            bump(&mut chars);
            if chars.peek() == Some(&'-') {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
                continue;
            }
            return Err(Error::Syntax { line: tl, col: tc, expected: "`--` comment".into() });
        }
        let single = match c {
            '0' => Some(Tok::Zero),
            '!' => Some(Tok::Bang),
            '?' => Some(Tok::Query),
            '<' => Some(Tok::Lt),
            '>' => Some(Tok::Gt),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '=' => Some(Tok::Eq),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            '|' => Some(Tok::Pipe),
            _ => None,
        };
        if let Some(tok) = single {
            bump(&mut chars);
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        if c.is_ascii_alphabetic() || c == RESERVED_PREFIX {
            let mut ident = String::new();
            ident.push(c);
            bump(&mut chars);
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' || (c == '\'' && ident.starts_with(RESERVED_PREFIX)) {
                    ident.push(c);
                    bump(&mut chars);
                } else {
                    break;
                }
            }
            if ident.starts_with(RESERVED_PREFIX) {
                if ident.len() == 1 {
                    return Err(Error::Syntax { line: tl, col: tc, expected: "identifier after `#`".into() });
                }
                if !allow_reserved {
                    return Err(Error::ReservedName(Name::channel(&ident)));
                }
            }
            let tok = match ident.as_str() {
                "new" => Tok::New,
                "in" => Tok::In,
                _ => Tok::Ident(ident),
            };
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        return Err(Error::Syntax { line: tl, col: tc, expected: format!("a token, found `{c}`") });
    }
    out.push(Token { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    scope: Vec<(String, Name)>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T> {
        let t = self.peek();
        Err(Error::Syntax {
            line: t.line,
            col: t.col,
            expected: format!("{expected}, found {}", t.tok.describe()),
        })
    }

    fn eat(&mut self, tok: Tok) -> Result<()> {
        if self.peek().tok == tok {
            self.advance();
            Ok(())
        } else {
            self.error(&tok.describe())
        }
    }

    fn expect_end(&self) -> Result<()> {
        if self.peek().tok == Tok::End {
            Ok(())
        } else {
            self.error("`|` or end of input")
        }
    }

    fn ident(&mut self) -> Result<String> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => self.error("identifier"),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<String>> {
        let mut out = vec![self.ident()?];
        while self.peek().tok == Tok::Comma {
            self.advance();
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn resolve(&self, ident: &str) -> Name {
        self.scope
            .iter()
            .rev()
            .find(|(s, _)| s == ident)
            .map(|(_, n)| n.clone())
            .unwrap_or_else(|| Name::channel(ident))
    }

    fn par(&mut self) -> Result<Process> {
        let mut p = self.unary()?;
        while self.peek().tok == Tok::Pipe {
            self.advance();
            let r = self.unary()?;
            p = Process::par(p, r);
        }
        Ok(p)
    }

    fn unary(&mut self) -> Result<Process> {
        match self.peek().tok.clone() {
            Tok::Zero => {
                self.advance();
                Ok(Process::Nil)
            }
            Tok::LParen => {
                self.advance();
                let p = self.par()?;
                self.eat(Tok::RParen)?;
                Ok(p)
            }
            Tok::Bang => {
                self.advance();
                Ok(Process::repl(self.par()?))
            }
            Tok::New => {
                self.advance();
                let idents = self.ident_list()?;
                self.eat(Tok::In)?;
                let mark = self.scope.len();
                let channels: Vec<Name> = idents.iter().map(Name::channel).collect();
                self.scope.extend(idents.into_iter().zip(channels.iter().cloned()));
                let body = self.par();
                self.scope.truncate(mark);
                Ok(Process::restrict(channels, body?))
            }
            Tok::Ident(_) | Tok::LBracket => {
                let (prefix, binders) = self.prefix()?;
                self.eat(Tok::Dot)?;
                let mark = self.scope.len();
                self.scope.extend(binders);
                let cont = self.unary();
                self.scope.truncate(mark);
                Ok(Process::prefixed(prefix, cont?))
            }
            _ => self.error("a process"),
        }
    }

    /// Returns the prefix and the scope entries it opens for its continuation.
    fn prefix(&mut self) -> Result<(Prefix, Vec<(String, Name)>)> {
        if self.peek().tok == Tok::LBracket {
            self.advance();
            let lhs = self.ident()?;
            self.eat(Tok::Eq)?;
            let rhs = self.ident()?;
            self.eat(Tok::RBracket)?;
            let (lhs, rhs) = (self.resolve(&lhs), self.resolve(&rhs));
            let (inner, binders) = self.prefix()?;
            return Ok((Prefix::guarded(lhs, rhs, inner), binders));
        }
        let subject = self.ident()?;
        let subject = self.resolve(&subject);
        match self.peek().tok {
            Tok::Bang => {
                self.advance();
                self.eat(Tok::Lt)?;
                let objects = self.ident_list()?;
                self.eat(Tok::Gt)?;
                let objects = objects.iter().map(|o| self.resolve(o)).collect();
                Ok((Prefix::send(subject, objects), Vec::new()))
            }
            Tok::Query => {
                self.advance();
                let at = self.peek().clone();
                self.eat(Tok::LParen)?;
                let idents = self.ident_list()?;
                self.eat(Tok::RParen)?;
                for (i, a) in idents.iter().enumerate() {
                    if idents[..i].contains(a) {
                        return Err(Error::Syntax {
                            line: at.line,
                            col: at.col,
                            expected: format!("pairwise distinct binders, `{a}` repeats"),
                        });
                    }
                }
                let binders: Vec<Name> = idents.iter().map(|s| Name::new(NameKind::Variable, s)).collect();
                let scope = idents.into_iter().zip(binders.iter().cloned()).collect();
                Ok((Prefix::receive(subject, binders), scope))
            }
            _ => self.error("`!<` or `?(` after the subject"),
        }
    }
}

/// Renders a process with the fewest parentheses that still parse back to it.
pub fn render(p: &Process) -> String {
    let mut out = String::new();
    render_into(p, &mut out);
    out
}

pub fn render_prefix(prefix: &Prefix) -> String {
    let mut out = String::new();
    prefix_into(prefix, &mut out);
    out
}

fn join(names: &[Name]) -> String {
    names.iter().map(|n| n.ident()).collect::<Vec<_>>().join(",")
}

fn prefix_into(prefix: &Prefix, out: &mut String) {
    match prefix {
        Prefix::Send { subject, objects } => {
            let _ = write!(out, "{subject}!<{}>", join(objects));
        }
        Prefix::Receive { subject, binders } => {
            let _ = write!(out, "{subject}?({})", join(binders));
        }
        Prefix::Match { lhs, rhs, inner } => {
            let _ = write!(out, "[{lhs}={rhs}]");
            prefix_into(inner, out);
        }
    }
}

/// Whether the rendering ends in a construct that would swallow a following `| Q`.
fn right_open(p: &Process) -> bool {
    match p {
        Process::Restrict { .. } | Process::Repl { .. } => true,
        Process::Prefixed { continuation, .. } => right_open(continuation),
        Process::Par { right, .. } => !matches!(**right, Process::Par { .. }) && right_open(right),
        Process::Nil => false,
    }
}

fn render_into(p: &Process, out: &mut String) {
    match p {
        Process::Nil => out.push('0'),
        Process::Prefixed { prefix, continuation } => {
            prefix_into(prefix, out);
            out.push('.');
            if matches!(**continuation, Process::Par { .. }) {
                out.push('(');
                render_into(continuation, out);
                out.push(')');
            } else {
                render_into(continuation, out);
            }
        }
        Process::Par { left, right } => {
            if right_open(left) {
                out.push('(');
                render_into(left, out);
                out.push(')');
            } else {
                render_into(left, out);
            }
            out.push_str(" | ");
            if matches!(**right, Process::Par { .. }) {
                out.push('(');
                render_into(right, out);
                out.push(')');
            } else {
                render_into(right, out);
            }
        }
        Process::Restrict { channels, body } => {
            let _ = write!(out, "new {} in ", channels.iter().map(|c| c.ident()).collect::<Vec<_>>().join(", "));
            render_into(body, out);
        }
        Process::Repl { body } => {
            out.push('!');
            render_into(body, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::alpha_eq;

    fn ch(s: &str) -> Name {
        Name::channel(s)
    }

    fn pi(text: &str) -> Process {
        parse(text, ParseMode::PiFull).unwrap()
    }

    #[test]
    fn parses_nil_and_restriction() {
        assert_eq!(pi("0"), Process::Nil);
        assert_eq!(
            pi("new l in k!<l>.0"),
            Process::restrict(vec![ch("l")], Process::send(ch("k"), vec![ch("l")], Process::Nil))
        );
    }

    #[test]
    fn unclosed_construct_is_a_syntax_error() {
        assert!(matches!(parse("!(k?(x).x!<", ParseMode::PiFull), Err(Error::Syntax { .. })));
        assert!(matches!(parse("(0 | 0", ParseMode::PiFull), Err(Error::Syntax { .. })));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse("k!<l>.0 |\n  k?(x)", ParseMode::PiFull).unwrap_err();
        match err {
            Error::Syntax { line, col, .. } => assert_eq!((line, col), (2, 8)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn binding_position_decides_kind() {
        let p = pi("k?(x).x!<l>.0");
        let Process::Prefixed { continuation, .. } = p else { panic!() };
        let Process::Prefixed { prefix: Prefix::Send { subject, .. }, .. } = *continuation else { panic!() };
        assert!(subject.is_variable());
    }

    #[test]
    fn strict_mode_rejects_forwarding() {
        assert!(matches!(parse("k?(x).g!<x>.0", ParseMode::CpiStrict), Err(Error::CpiViolation(_))));
        assert!(parse("k?(x).g!<x>.0", ParseMode::PiFull).is_ok());
        assert!(matches!(parse("k!<l>.0 | k!<l,m>.0", ParseMode::PiFull), Err(Error::Sort(_))));
    }

    #[test]
    fn reserved_names_need_the_relaxed_flag() {
        assert!(matches!(parse("#n_k!<l>.0", ParseMode::PiFull), Err(Error::ReservedName(_))));
        let relaxed = ParseOptions { mode: ParseMode::PiFull, allow_reserved: true };
        assert!(parse("#n_k!<l>.0", relaxed).is_ok());
    }

    #[test]
    fn comments_are_ignored() {
        assert_eq!(pi("-- nothing here\n0 -- trailing"), Process::Nil);
    }

    #[test]
    fn precedence() {
        // `.` binds tighter than `|`
        assert!(matches!(pi("k!<l>.0 | 0"), Process::Par { .. }));
        // `!` and `new` extend to the right
        assert!(matches!(pi("!k!<l>.0 | 0"), Process::Repl { .. }));
        assert!(matches!(pi("new k in 0 | 0"), Process::Restrict { .. }));
        // `|` is left associative
        let Process::Par { left, .. } = pi("0 | 0 | k!<l>.0") else { panic!() };
        assert!(matches!(*left, Process::Par { .. }));
    }

    #[test]
    fn render_examples() {
        assert_eq!(render(&Process::Nil), "0");
        assert_eq!(render(&Process::par(Process::Nil, Process::Nil)), "0 | 0");
        let guarded = Process::prefixed(
            Prefix::guarded(ch("l"), ch("l"), Prefix::send(ch("k"), vec![ch("m")])),
            Process::Nil,
        );
        assert_eq!(render(&guarded), "[l=l]k!<m>.0");
    }

    #[test]
    fn render_parenthesizes_only_when_needed() {
        let p = Process::par(Process::repl(Process::Nil), Process::Nil);
        assert_eq!(render(&p), "(!0) | 0");
        let q = Process::par(Process::Nil, Process::par(Process::Nil, Process::Nil));
        assert_eq!(render(&q), "0 | (0 | 0)");
        let r = Process::receive(ch("k"), vec![Name::variable("x")], Process::par(Process::Nil, Process::Nil));
        assert_eq!(render(&r), "k?(x).(0 | 0)");
        for p in [p, q, r] {
            assert!(alpha_eq(&pi(&render(&p)), &p));
        }
    }

    #[test]
    fn duplicate_binders_are_rejected() {
        assert!(matches!(parse("k?(x,x).0", ParseMode::PiFull), Err(Error::Syntax { .. })));
    }

    #[test]
    fn shadowed_binders_are_renamed_apart() {
        let p = pi("new l in (k!<l>.0 | new l in l!<l>.0)");
        let Process::Restrict { body, .. } = &p else { panic!() };
        let Process::Par { right, .. } = &**body else { panic!() };
        let Process::Restrict { channels, .. } = &**right else { panic!() };
        assert_ne!(channels[0], ch("l"));
    }
}
