//! Hand-rolled lexer and recursive-descent parser for `.shc` files.
//!
//! Named time constants substitute into literal delays as they are read, so
//! constants must be declared before use (the pretty-printer always emits
//! them first).

use crate::geometry::{vec3, Vec3};
use crate::network::{SchedulerPolicy, SteerRule};

use super::{
    BChan, BExpr, ModelFile, ParseError, ProcessDecl, ShapeDecl, SteerDecl, SteerTarget, SurfRef,
};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Punct(char),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line,
            column,
            message: message.into(),
            snippet: snippet_of(self.src, line),
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.pos + 1).copied()
    }

    fn tokens(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            loop {
                match self.peek() {
                    Some(c) if c.is_whitespace() => {
                        self.bump();
                    }
                    Some('#') => {
                        while let Some(c) = self.peek() {
                            if c == '\n' {
                                break;
                            }
                            self.bump();
                        }
                    }
                    _ => break,
                }
            }
            let (line, column) = (self.line, self.column);
            let Some(c) = self.peek() else {
                out.push(Token {
                    tok: Tok::Eof,
                    line,
                    column,
                });
                return Ok(out);
            };
            if c.is_ascii_digit()
                || (c == '-' && self.peek2().map_or(false, |d| d.is_ascii_digit() || d == '.'))
            {
                let mut s = String::new();
                s.push(self.bump().unwrap());
                while let Some(d) = self.peek() {
                    if d.is_ascii_digit() || d == 'e' || d == 'E' {
                        s.push(self.bump().unwrap());
                    } else if d == '.' && self.peek2().map_or(false, |e| e.is_ascii_digit()) {
                        s.push(self.bump().unwrap());
                    } else if (d == '-' || d == '+')
                        && matches!(s.chars().last(), Some('e') | Some('E'))
                    {
                        s.push(self.bump().unwrap());
                    } else {
                        break;
                    }
                }
                let value: f64 = s
                    .parse()
                    .map_err(|_| self.error(line, column, format!("malformed number `{s}`")))?;
                out.push(Token {
                    tok: Tok::Number(value),
                    line,
                    column,
                });
            } else if c.is_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(d) = self.peek() {
                    if d.is_alphanumeric() || d == '_' {
                        s.push(self.bump().unwrap());
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    tok: Tok::Ident(s),
                    line,
                    column,
                });
            } else if "={}()[]<>,.+@~".contains(c) {
                self.bump();
                out.push(Token {
                    tok: Tok::Punct(c),
                    line,
                    column,
                });
            } else {
                return Err(self.error(line, column, format!("unexpected character `{c}`")));
            }
        }
    }
}

fn snippet_of(src: &str, line: usize) -> String {
    src.lines()
        .nth(line.saturating_sub(1))
        .unwrap_or("")
        .trim_end()
        .to_string()
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(v) => format!("number {v:?}"),
        Tok::Punct(c) => format!("`{c}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    constants: Vec<(String, f64)>,
}

impl<'a> Parser<'a> {
    fn error_at(&self, t: &Token, message: impl Into<String>) -> ParseError {
        ParseError {
            line: t.line,
            column: t.column,
            message: message.into(),
            snippet: snippet_of(self.src, t.line),
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expect_punct(&mut self, c: char) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok == Tok::Punct(c) {
            Ok(())
        } else {
            Err(self.error_at(&t, format!("expected `{c}`, found {}", describe(&t.tok))))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Token), ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => {
                Err(self.error_at(&t, format!("expected identifier, found {}", describe(other))))
            }
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) if s == kw => Ok(()),
            other => Err(self.error_at(&t, format!("expected `{kw}`, found {}", describe(other)))),
        }
    }

    fn expect_number(&mut self) -> Result<f64, ParseError> {
        let t = self.next();
        match t.tok {
            Tok::Number(v) => Ok(v),
            ref other => {
                Err(self.error_at(&t, format!("expected number, found {}", describe(other))))
            }
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn vec3(&mut self) -> Result<Vec3, ParseError> {
        self.expect_punct('(')?;
        let x = self.expect_number()?;
        self.expect_punct(',')?;
        let y = self.expect_number()?;
        self.expect_punct(',')?;
        let z = self.expect_number()?;
        self.expect_punct(')')?;
        Ok(vec3(x, y, z))
    }

    fn vec3_list(&mut self, open: char, close: char) -> Result<Vec<Vec3>, ParseError> {
        self.expect_punct(open)?;
        let mut out = Vec::new();
        if self.peek().tok == Tok::Punct(close) {
            self.next();
            return Ok(out);
        }
        loop {
            out.push(self.vec3()?);
            let t = self.next();
            match t.tok {
                Tok::Punct(',') => continue,
                Tok::Punct(c) if c == close => break,
                ref other => {
                    return Err(self.error_at(
                        &t,
                        format!("expected `,` or `{close}`, found {}", describe(other)),
                    ))
                }
            }
        }
        Ok(out)
    }

    fn surf_ref(&mut self) -> Result<SurfRef, ParseError> {
        let (name, nt) = self.expect_ident()?;
        if name == "face" {
            self.expect_punct('(')?;
            let (shape, _) = self.expect_ident()?;
            self.expect_punct(',')?;
            let idx = self.expect_number()?;
            if idx < 0.0 || idx.fract() != 0.0 {
                return Err(self.error_at(&nt, format!("face index must be a non-negative integer, got {idx}")));
            }
            self.expect_punct(')')?;
            Ok(SurfRef::Face {
                shape,
                index: idx as usize,
            })
        } else {
            Ok(SurfRef::Named(name))
        }
    }

    fn channel_body(&mut self) -> Result<BChan, ParseError> {
        let complemented = if self.peek().tok == Tok::Punct('~') {
            self.next();
            true
        } else {
            false
        };
        let (name, _) = self.expect_ident()?;
        self.expect_punct(',')?;
        let surface = self.surf_ref()?;
        Ok(BChan {
            name,
            complemented,
            surface,
        })
    }

    fn channel(&mut self) -> Result<BChan, ParseError> {
        self.expect_punct('<')?;
        let c = self.channel_body()?;
        self.expect_punct('>')?;
        Ok(c)
    }

    fn delay_value(&mut self) -> Result<f64, ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Number(v) => Ok(*v),
            Tok::Ident(name) => self
                .constants
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| {
                    self.error_at(&t, format!("unknown constant `{name}` (declare it first)"))
                }),
            other => Err(self.error_at(
                &t,
                format!("expected delay or constant name, found {}", describe(other)),
            )),
        }
    }

    /// `bexpr := bterm { "+" bterm }`, left associative.
    fn bexpr(&mut self) -> Result<BExpr, ParseError> {
        let mut acc = self.bterm()?;
        while self.peek().tok == Tok::Punct('+') {
            self.next();
            let rhs = self.bterm()?;
            acc = BExpr::Sum(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn bterm(&mut self) -> Result<BExpr, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Punct('(') => {
                self.next();
                let inner = self.bexpr()?;
                self.expect_punct(')')?;
                Ok(inner)
            }
            Tok::Punct('<') => {
                let c = self.channel()?;
                self.expect_punct('.')?;
                Ok(BExpr::Prefix(c, Box::new(self.bterm()?)))
            }
            Tok::Ident(s) if s == "nil" => {
                self.next();
                Ok(BExpr::Nil)
            }
            Tok::Ident(s) if s == "w" => {
                self.next();
                self.expect_punct('(')?;
                let c = self.channel_body()?;
                self.expect_punct(')')?;
                self.expect_punct('.')?;
                Ok(BExpr::Omega(c, Box::new(self.bterm()?)))
            }
            Tok::Ident(s) if s == "rho" => {
                self.next();
                self.expect_punct('{')?;
                let mut set = vec![self.channel()?];
                while self.peek().tok == Tok::Punct(',') {
                    self.next();
                    set.push(self.channel()?);
                }
                self.expect_punct('}')?;
                self.expect_punct('.')?;
                Ok(BExpr::Rho(set, Box::new(self.bterm()?)))
            }
            Tok::Ident(s) if s == "eps" => {
                self.next();
                self.expect_punct('(')?;
                let dt = self.delay_value()?;
                self.expect_punct(')')?;
                self.expect_punct('.')?;
                Ok(BExpr::Delay(dt, Box::new(self.bterm()?)))
            }
            Tok::Ident(s) => {
                let name = s.clone();
                self.next();
                Ok(BExpr::Const(name))
            }
            other => Err(self.error_at(
                &t,
                format!("expected behaviour term, found {}", describe(other)),
            )),
        }
    }

    fn steer_rule(&mut self) -> Result<SteerRule, ParseError> {
        let (kw, kt) = self.expect_ident()?;
        Ok(match kw.as_str() {
            "zero" => SteerRule::Zero,
            "constant" => SteerRule::Constant(self.vec3()?),
            "gravity" => {
                let g = self.vec3()?;
                let v0 = if self.at_keyword("from") {
                    self.next();
                    self.vec3()?
                } else {
                    Vec3::ZERO
                };
                SteerRule::Gravity { g, v0 }
            }
            "brownian" => {
                self.expect_keyword("seed")?;
                let seed = self.expect_number()? as u64;
                self.expect_keyword("scale")?;
                let scale = self.expect_number()?;
                SteerRule::Brownian { seed, scale }
            }
            "scripted" => {
                self.expect_punct('[')?;
                let mut entries = Vec::new();
                if self.peek().tok != Tok::Punct(']') {
                    loop {
                        self.expect_punct('(')?;
                        let at = self.expect_number()?;
                        self.expect_punct(',')?;
                        let v = self.vec3()?;
                        self.expect_punct(')')?;
                        entries.push((at, v));
                        if self.peek().tok == Tok::Punct(',') {
                            self.next();
                            continue;
                        }
                        break;
                    }
                }
                self.expect_punct(']')?;
                SteerRule::Scripted(entries)
            }
            other => return Err(self.error_at(&kt, format!("unknown steer rule `{other}`"))),
        })
    }
}

/// Parses model text into a [`ModelFile`].
pub fn parse_model(src: &str) -> Result<ModelFile, ParseError> {
    let tokens = Lexer::new(src).tokens()?;
    let mut p = Parser {
        src,
        tokens,
        pos: 0,
        constants: Vec::new(),
    };
    let mut model = ModelFile::default();

    loop {
        let t = p.peek().clone();
        match &t.tok {
            Tok::Eof => break,
            Tok::Ident(kw) => match kw.as_str() {
                "const" => {
                    p.next();
                    let (name, _) = p.expect_ident()?;
                    p.expect_punct('=')?;
                    let v = p.expect_number()?;
                    p.constants.push((name.clone(), v));
                    model.constants.push((name, v));
                }
                "surface" => {
                    p.next();
                    let (name, _) = p.expect_ident()?;
                    p.expect_punct('=')?;
                    let verts = p.vec3_list('{', '}')?;
                    if verts.is_empty() {
                        return Err(p.error_at(&t, "surface needs at least one vertex"));
                    }
                    model.surfaces.push((name, verts));
                }
                "shape" => {
                    p.next();
                    let (name, _) = p.expect_ident()?;
                    p.expect_punct('{')?;
                    p.expect_keyword("verts")?;
                    p.expect_punct('=')?;
                    let verts = p.vec3_list('[', ']')?;
                    p.expect_keyword("mass")?;
                    p.expect_punct('=')?;
                    let mass = if p.at_keyword("inf") {
                        p.next();
                        f64::INFINITY
                    } else {
                        p.expect_number()?
                    };
                    p.expect_punct('}')?;
                    model.shapes.push(ShapeDecl { name, verts, mass });
                }
                "behaviour" => {
                    p.next();
                    let (name, _) = p.expect_ident()?;
                    p.expect_punct('=')?;
                    let expr = p.bexpr()?;
                    model.behaviours.push((name, expr));
                }
                "process" => {
                    p.next();
                    let (name, _) = p.expect_ident()?;
                    p.expect_punct('=')?;
                    let (shape, _) = p.expect_ident()?;
                    p.expect_punct('@')?;
                    let position = p.vec3()?;
                    p.expect_keyword("vel")?;
                    let velocity = p.vec3()?;
                    p.expect_keyword("runs")?;
                    let behaviour = p.bexpr()?;
                    model.processes.push(ProcessDecl {
                        name,
                        shape,
                        position,
                        velocity,
                        behaviour,
                    });
                }
                "steer" => {
                    p.next();
                    let target = if p.at_keyword("default") {
                        p.next();
                        SteerTarget::Default
                    } else {
                        SteerTarget::Process(p.expect_ident()?.0)
                    };
                    let rule = p.steer_rule()?;
                    model.steers.push(SteerDecl { target, rule });
                }
                "config" => {
                    p.next();
                    p.expect_punct('{')?;
                    while p.peek().tok != Tok::Punct('}') {
                        let (key, kt) = p.expect_ident()?;
                        p.expect_punct('=')?;
                        match key.as_str() {
                            "delta" => model.config.delta = Some(p.expect_number()?),
                            "seed" => model.config.seed = Some(p.expect_number()? as u64),
                            "p_omega" => model.config.p_omega = Some(p.expect_number()?),
                            "max_steps" => {
                                model.config.max_steps = Some(p.expect_number()? as u64)
                            }
                            "max_time" => model.config.max_time = Some(p.expect_number()?),
                            "policy" => {
                                let (v, vt) = p.expect_ident()?;
                                model.config.policy = Some(match v.as_str() {
                                    "canonical" => SchedulerPolicy::Canonical,
                                    "random" => SchedulerPolicy::Random,
                                    other => {
                                        return Err(
                                            p.error_at(&vt, format!("unknown policy `{other}`"))
                                        )
                                    }
                                });
                            }
                            other => {
                                return Err(p.error_at(&kt, format!("unknown config key `{other}`")))
                            }
                        }
                    }
                    p.expect_punct('}')?;
                }
                other => return Err(p.error_at(&t, format!("unknown declaration `{other}`"))),
            },
            other => {
                return Err(p.error_at(
                    &t,
                    format!("expected a declaration, found {}", describe(other)),
                ))
            }
        }
    }

    Ok(model)
}
