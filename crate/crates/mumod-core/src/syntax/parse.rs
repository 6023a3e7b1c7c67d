//! Surface-syntax parser.
//!
//! Grammar, loosest binding first: `->` (right-associative), `|`, `&`, then
//! the prefix operators `!`, `[a]`, `<a>`; `mu X.` / `nu X.` extend as far
//! right as possible.  General negation and implication are surface sugar and
//! are compiled away into negation normal form, so the arena only ever holds
//! NNF terms.  Binders are renamed apart when the input reuses a variable
//! name for two different fixed points.

use super::{AgentSet, Arena, FormulaId, NameId, SyntaxError};
use std::collections::{HashMap, HashSet};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    UpIdent(String),
    Mu,
    Nu,
    TT,
    FF,
    And,
    Or,
    Impl,
    Not,
    LBrack,
    RBrack,
    LAngle,
    RAngle,
    LParen,
    RParen,
    Dot,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

fn lex(text: &str) -> Result<Lexer, SyntaxError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
            }
            '&' => {
                toks.push((Tok::And, start));
                i += 1;
            }
            '|' => {
                toks.push((Tok::Or, start));
                i += 1;
            }
            '!' => {
                toks.push((Tok::Not, start));
                i += 1;
            }
            '[' => {
                toks.push((Tok::LBrack, start));
                i += 1;
            }
            ']' => {
                toks.push((Tok::RBrack, start));
                i += 1;
            }
            '<' => {
                toks.push((Tok::LAngle, start));
                i += 1;
            }
            '>' => {
                toks.push((Tok::RAngle, start));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, start));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, start));
                i += 1;
            }
            '.' => {
                toks.push((Tok::Dot, start));
                i += 1;
            }
            '-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    toks.push((Tok::Impl, start));
                    i += 2;
                } else {
                    return Err(SyntaxError::Parse {
                        pos: start,
                        msg: "expected `->`".into(),
                    });
                }
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len()
                    && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                let word = &text[i..j];
                let tok = match word {
                    "tt" => Tok::TT,
                    "ff" => Tok::FF,
                    "mu" => Tok::Mu,
                    "nu" => Tok::Nu,
                    _ if c.is_ascii_uppercase() => Tok::UpIdent(word.to_string()),
                    _ => Tok::Ident(word.to_string()),
                };
                toks.push((tok, start));
                i = j;
            }
            _ => {
                return Err(SyntaxError::Parse {
                    pos: start,
                    msg: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    Ok(Lexer {
        toks,
        pos: 0,
        end: text.len(),
    })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), SyntaxError> {
        let pos = self.here();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            _ => Err(SyntaxError::Parse {
                pos,
                msg: format!("expected {what}"),
            }),
        }
    }
}

// Surface tree prior to NNF compilation.
enum Raw {
    Top,
    Bottom,
    Prop(String),
    Var(String, usize),
    Not(Box<Raw>, usize),
    And(Box<Raw>, Box<Raw>),
    Or(Box<Raw>, Box<Raw>),
    Impl(Box<Raw>, Box<Raw>),
    Boxed(String, usize, Box<Raw>),
    Diamond(String, usize, Box<Raw>),
    Mu(String, Box<Raw>),
    Nu(String, Box<Raw>),
}

fn parse_expr(lx: &mut Lexer) -> Result<Raw, SyntaxError> {
    let lhs = parse_or(lx)?;
    if lx.peek() == Some(&Tok::Impl) {
        lx.bump();
        let rhs = parse_expr(lx)?;
        return Ok(Raw::Impl(Box::new(lhs), Box::new(rhs)));
    }
    Ok(lhs)
}

fn parse_or(lx: &mut Lexer) -> Result<Raw, SyntaxError> {
    let mut lhs = parse_and(lx)?;
    while lx.peek() == Some(&Tok::Or) {
        lx.bump();
        let rhs = parse_and(lx)?;
        lhs = Raw::Or(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_and(lx: &mut Lexer) -> Result<Raw, SyntaxError> {
    let mut lhs = parse_unary(lx)?;
    while lx.peek() == Some(&Tok::And) {
        lx.bump();
        let rhs = parse_unary(lx)?;
        lhs = Raw::And(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_unary(lx: &mut Lexer) -> Result<Raw, SyntaxError> {
    let pos = lx.here();
    match lx.peek() {
        Some(Tok::Not) => {
            lx.bump();
            let body = parse_unary(lx)?;
            Ok(Raw::Not(Box::new(body), pos))
        }
        Some(Tok::LBrack) => {
            lx.bump();
            let apos = lx.here();
            let agent = parse_ident(lx, "agent name")?;
            lx.expect(Tok::RBrack, "`]`")?;
            let body = parse_unary(lx)?;
            Ok(Raw::Boxed(agent, apos, Box::new(body)))
        }
        Some(Tok::LAngle) => {
            lx.bump();
            let apos = lx.here();
            let agent = parse_ident(lx, "agent name")?;
            lx.expect(Tok::RAngle, "`>`")?;
            let body = parse_unary(lx)?;
            Ok(Raw::Diamond(agent, apos, Box::new(body)))
        }
        Some(Tok::Mu) | Some(Tok::Nu) => {
            let is_mu = lx.bump() == Some(Tok::Mu);
            let vpos = lx.here();
            let var = match lx.bump() {
                Some(Tok::UpIdent(v)) => v,
                _ => {
                    return Err(SyntaxError::Parse {
                        pos: vpos,
                        msg: "expected an uppercase recursion variable".into(),
                    })
                }
            };
            lx.expect(Tok::Dot, "`.`")?;
            let body = parse_expr(lx)?;
            Ok(if is_mu {
                Raw::Mu(var, Box::new(body))
            } else {
                Raw::Nu(var, Box::new(body))
            })
        }
        _ => parse_atom(lx),
    }
}

fn parse_ident(lx: &mut Lexer, what: &str) -> Result<String, SyntaxError> {
    let pos = lx.here();
    match lx.bump() {
        Some(Tok::Ident(s)) => Ok(s),
        _ => Err(SyntaxError::Parse {
            pos,
            msg: format!("expected {what}"),
        }),
    }
}

fn parse_atom(lx: &mut Lexer) -> Result<Raw, SyntaxError> {
    let pos = lx.here();
    match lx.bump() {
        Some(Tok::TT) => Ok(Raw::Top),
        Some(Tok::FF) => Ok(Raw::Bottom),
        Some(Tok::Ident(s)) => Ok(Raw::Prop(s)),
        Some(Tok::UpIdent(s)) => Ok(Raw::Var(s, pos)),
        Some(Tok::LParen) => {
            let inner = parse_expr(lx)?;
            lx.expect(Tok::RParen, "`)`")?;
            Ok(inner)
        }
        _ => Err(SyntaxError::Parse {
            pos,
            msg: "expected a formula".into(),
        }),
    }
}

// Variable names free in a raw subtree, for rejecting non-monotone negation.
fn raw_free(raw: &Raw, bound: &mut Vec<String>, out: &mut HashSet<String>) {
    match raw {
        Raw::Top | Raw::Bottom | Raw::Prop(..) => {}
        Raw::Var(v, _) => {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        }
        Raw::Not(b, _) | Raw::Boxed(_, _, b) | Raw::Diamond(_, _, b) => raw_free(b, bound, out),
        Raw::And(l, r) | Raw::Or(l, r) | Raw::Impl(l, r) => {
            raw_free(l, bound, out);
            raw_free(r, bound, out);
        }
        Raw::Mu(v, b) | Raw::Nu(v, b) => {
            bound.push(v.clone());
            raw_free(b, bound, out);
            bound.pop();
        }
    }
}

struct Lowerer<'a> {
    arena: &'a mut Arena,
    agents: &'a AgentSet,
    // Innermost-first scope: surface name -> chosen arena name.
    scope: Vec<(String, NameId)>,
    claimed: HashSet<String>,
    all_input_names: HashSet<String>,
}

impl<'a> Lowerer<'a> {
    fn claim(&mut self, surface: &str) -> NameId {
        if !self.claimed.contains(surface) {
            self.claimed.insert(surface.to_string());
            return self.arena.name(surface);
        }
        let mut k = 1u32;
        loop {
            let candidate = format!("{surface}{k}");
            if !self.claimed.contains(&candidate) && !self.all_input_names.contains(&candidate) {
                self.claimed.insert(candidate.clone());
                return self.arena.name(&candidate);
            }
            k += 1;
        }
    }

    // `negated` tracks the parity of surface negations above this point; the
    // structural dual is built on the fly so the result is already NNF.
    fn lower(&mut self, raw: &Raw, negated: bool) -> Result<FormulaId, SyntaxError> {
        match raw {
            Raw::Top => Ok(if negated {
                self.arena.bottom()
            } else {
                self.arena.top()
            }),
            Raw::Bottom => Ok(if negated {
                self.arena.top()
            } else {
                self.arena.bottom()
            }),
            Raw::Prop(name) => {
                let p = self.arena.name(name);
                Ok(self.arena.lit(p, !negated))
            }
            Raw::Var(name, pos) => {
                let bound = self
                    .scope
                    .iter()
                    .rev()
                    .find(|(s, _)| s == name)
                    .map(|(_, id)| *id);
                match bound {
                    Some(id) => Ok(self.arena.var(id)),
                    None => Err(SyntaxError::Parse {
                        pos: *pos,
                        msg: format!("unbound recursion variable `{name}`"),
                    }),
                }
            }
            Raw::Not(body, pos) => {
                // A variable bound outside the negation would flip polarity;
                // there is no NNF for that, so reject it here.
                let mut bound = Vec::new();
                let mut free = HashSet::new();
                raw_free(body, &mut bound, &mut free);
                if self.scope.iter().any(|(s, _)| free.contains(s)) {
                    return Err(SyntaxError::Parse {
                        pos: *pos,
                        msg: "negation applied to a subformula with an externally bound \
                              recursion variable"
                            .into(),
                    });
                }
                self.lower(body, !negated)
            }
            Raw::Impl(lhs, rhs) => {
                let l = self.lower(lhs, !negated)?;
                let r = self.lower(rhs, negated)?;
                // lhs of an implication flips polarity, so the same
                // externally-bound-variable restriction applies to it.
                let mut bound = Vec::new();
                let mut free = HashSet::new();
                raw_free(lhs, &mut bound, &mut free);
                if self.scope.iter().any(|(s, _)| free.contains(s)) {
                    return Err(SyntaxError::Parse {
                        pos: 0,
                        msg: "implication antecedent uses an externally bound recursion \
                              variable"
                            .into(),
                    });
                }
                Ok(if negated {
                    self.arena.and(l, r)
                } else {
                    self.arena.or(l, r)
                })
            }
            Raw::And(lhs, rhs) => {
                let l = self.lower(lhs, negated)?;
                let r = self.lower(rhs, negated)?;
                Ok(if negated {
                    self.arena.or(l, r)
                } else {
                    self.arena.and(l, r)
                })
            }
            Raw::Or(lhs, rhs) => {
                let l = self.lower(lhs, negated)?;
                let r = self.lower(rhs, negated)?;
                Ok(if negated {
                    self.arena.and(l, r)
                } else {
                    self.arena.or(l, r)
                })
            }
            Raw::Boxed(agent, pos, body) => {
                let a = self.agent(agent, *pos)?;
                let b = self.lower(body, negated)?;
                Ok(if negated {
                    self.arena.diamond(a, b)
                } else {
                    self.arena.boxed(a, b)
                })
            }
            Raw::Diamond(agent, pos, body) => {
                let a = self.agent(agent, *pos)?;
                let b = self.lower(body, negated)?;
                Ok(if negated {
                    self.arena.boxed(a, b)
                } else {
                    self.arena.diamond(a, b)
                })
            }
            Raw::Mu(var, body) | Raw::Nu(var, body) => {
                let chosen = self.claim(var);
                self.scope.push((var.clone(), chosen));
                let b = self.lower(body, negated)?;
                self.scope.pop();
                let make_mu = matches!(raw, Raw::Mu(..)) != negated;
                Ok(if make_mu {
                    self.arena.mu(chosen, b)
                } else {
                    self.arena.nu(chosen, b)
                })
            }
        }
    }

    fn agent(&mut self, name: &str, pos: usize) -> Result<NameId, SyntaxError> {
        match self.arena.lookup_name(name) {
            Some(id) if self.agents.contains(id) => Ok(id),
            _ => Err(SyntaxError::Parse {
                pos,
                msg: format!("unknown agent `{name}`"),
            }),
        }
    }
}

fn collect_names(raw: &Raw, out: &mut HashSet<String>) {
    match raw {
        Raw::Top | Raw::Bottom => {}
        Raw::Prop(s) | Raw::Var(s, _) => {
            out.insert(s.clone());
        }
        Raw::Not(b, _) => collect_names(b, out),
        Raw::And(l, r) | Raw::Or(l, r) | Raw::Impl(l, r) => {
            collect_names(l, out);
            collect_names(r, out);
        }
        Raw::Boxed(a, _, b) | Raw::Diamond(a, _, b) => {
            out.insert(a.clone());
            collect_names(b, out);
        }
        Raw::Mu(v, b) | Raw::Nu(v, b) => {
            out.insert(v.clone());
            collect_names(b, out);
        }
    }
}

/// Parse `text` over `agents` into a normalized (NNF, uniquely bound) term.
pub fn parse(arena: &mut Arena, agents: &AgentSet, text: &str) -> Result<FormulaId, SyntaxError> {
    let mut lx = lex(text)?;
    let raw = parse_expr(&mut lx)?;
    if lx.pos < lx.toks.len() {
        return Err(SyntaxError::Parse {
            pos: lx.here(),
            msg: "unexpected trailing input".into(),
        });
    }
    let mut all_input_names = HashSet::new();
    collect_names(&raw, &mut all_input_names);
    let mut lower = Lowerer {
        arena,
        agents,
        scope: Vec::new(),
        claimed: HashSet::new(),
        all_input_names,
    };
    lower.lower(&raw, false)
}

// Keep a map handy for tests that need the chosen binder names.
#[allow(dead_code)]
fn _unused(_: &HashMap<String, NameId>) {}
