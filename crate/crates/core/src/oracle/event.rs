use std::fmt;

use crate::error::{Error, Result};
use crate::walk::{Field, FieldSet, Step, WalkState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// An event of `F_n`: a predicate on the state at time `n`, or on the first
/// steps of the path.
///
/// Unset last-zero fields compare as `-1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventSpec {
    All,
    Cmp(Field, CmpOp, i64),
    /// The path starts with exactly these steps.
    Prefix(Vec<Step>),
    And(Box<EventSpec>, Box<EventSpec>),
    Or(Box<EventSpec>, Box<EventSpec>),
    Not(Box<EventSpec>),
}

impl EventSpec {
    pub fn prefix(steps: &[Step]) -> Self {
        EventSpec::Prefix(steps.to_vec())
    }

    pub fn and(self, other: EventSpec) -> Self {
        EventSpec::And(Box::new(self), Box::new(other))
    }

    pub fn holds(&self, steps: &[Step], st: &WalkState) -> bool {
        match self {
            EventSpec::All => true,
            EventSpec::Cmp(f, op, v) => op.holds(st.field(*f), *v),
            EventSpec::Prefix(p) => steps.len() >= p.len() && steps[..p.len()] == p[..],
            EventSpec::And(a, b) => a.holds(steps, st) && b.holds(steps, st),
            EventSpec::Or(a, b) => a.holds(steps, st) || b.holds(steps, st),
            EventSpec::Not(a) => !a.holds(steps, st),
        }
    }

    pub fn needs_path(&self) -> bool {
        match self {
            EventSpec::All | EventSpec::Cmp(..) => false,
            EventSpec::Prefix(_) => true,
            EventSpec::And(a, b) | EventSpec::Or(a, b) => a.needs_path() || b.needs_path(),
            EventSpec::Not(a) => a.needs_path(),
        }
    }

    pub fn fields(&self) -> FieldSet {
        match self {
            EventSpec::All | EventSpec::Prefix(_) => FieldSet::empty(),
            EventSpec::Cmp(f, ..) => {
                if *f == Field::R {
                    FieldSet::of(&[Field::S])
                } else {
                    FieldSet::of(&[*f])
                }
            }
            EventSpec::And(a, b) | EventSpec::Or(a, b) => a.fields().union(b.fields()),
            EventSpec::Not(a) => a.fields(),
        }
    }

    /// Grammar: `expr := term ('|' term)*`, `term := factor ('&' factor)*`,
    /// `factor := '!' factor | '(' expr ')' | 'all' | 'prefix:' [+-]* | FIELD OP INT`.
    pub fn parse(s: &str) -> Result<Self> {
        let tokens = tokenize(s)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::EventParse(format!("trailing input at token {}", p.pos)));
        }
        Ok(e)
    }
}

impl fmt::Display for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventSpec::All => f.write_str("all"),
            EventSpec::Cmp(fld, op, v) => write!(f, "{}{}{}", fld.name(), op.symbol(), v),
            EventSpec::Prefix(p) => {
                f.write_str("prefix:")?;
                for s in p {
                    f.write_str(if *s == Step::Up { "+" } else { "-" })?;
                }
                Ok(())
            }
            EventSpec::And(a, b) => write!(f, "({a} & {b})"),
            EventSpec::Or(a, b) => write!(f, "({a} | {b})"),
            EventSpec::Not(a) => write!(f, "!{a}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Int(i64),
    Op(CmpOp),
    And,
    Or,
    Not,
    LParen,
    RParen,
    Prefix(Vec<Step>),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let cs: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        match c {
            ' ' | '\t' => i += 1,
            '&' => {
                out.push(Tok::And);
                i += if cs.get(i + 1) == Some(&'&') { 2 } else { 1 };
            }
            '|' => {
                out.push(Tok::Or);
                i += if cs.get(i + 1) == Some(&'|') { 2 } else { 1 };
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '!' if cs.get(i + 1) == Some(&'=') => {
                out.push(Tok::Op(CmpOp::Ne));
                i += 2;
            }
            '!' => {
                out.push(Tok::Not);
                i += 1;
            }
            '=' => {
                out.push(Tok::Op(CmpOp::Eq));
                i += if cs.get(i + 1) == Some(&'=') { 2 } else { 1 };
            }
            '<' | '>' => {
                let eq = cs.get(i + 1) == Some(&'=');
                out.push(Tok::Op(match (c, eq) {
                    ('<', true) => CmpOp::Le,
                    ('<', false) => CmpOp::Lt,
                    (_, true) => CmpOp::Ge,
                    _ => CmpOp::Gt,
                }));
                i += if eq { 2 } else { 1 };
            }
            c if c == '-' || c.is_ascii_digit() => {
                let st = i;
                i += 1;
                while i < cs.len() && cs[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = cs[st..i].iter().collect();
                let v = text.parse().map_err(|_| Error::EventParse(format!("bad integer {text:?}")))?;
                out.push(Tok::Int(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' || c == '*' => {
                let st = i;
                while i < cs.len() && (cs[i].is_ascii_alphanumeric() || cs[i] == '_' || cs[i] == '*') {
                    i += 1;
                }
                let word: String = cs[st..i].iter().collect();
                if word == "prefix" && cs.get(i) == Some(&':') {
                    i += 1;
                    let mut steps = Vec::new();
                    while i < cs.len() && (cs[i] == '+' || cs[i] == '-') {
                        steps.push(if cs[i] == '+' { Step::Up } else { Step::Down });
                        i += 1;
                    }
                    out.push(Tok::Prefix(steps));
                } else {
                    out.push(Tok::Word(word));
                }
            }
            other => return Err(Error::EventParse(format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<EventSpec> {
        let mut lhs = self.term()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            lhs = EventSpec::Or(Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<EventSpec> {
        let mut lhs = self.factor()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = EventSpec::And(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<EventSpec> {
        match self.next() {
            Some(Tok::Not) => Ok(EventSpec::Not(Box::new(self.factor()?))),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(Error::EventParse("missing ')'".into())),
                }
            }
            Some(Tok::Prefix(p)) => Ok(EventSpec::Prefix(p)),
            Some(Tok::Word(w)) if w == "all" => Ok(EventSpec::All),
            Some(Tok::Word(w)) => {
                let field = Field::parse(&w).ok_or_else(|| Error::EventParse(format!("unknown field {w:?}")))?;
                let op = match self.next() {
                    Some(Tok::Op(op)) => op,
                    _ => return Err(Error::EventParse(format!("expected comparison after {w}"))),
                };
                match self.next() {
                    Some(Tok::Int(v)) => Ok(EventSpec::Cmp(field, op, v)),
                    _ => Err(Error::EventParse(format!("expected integer after {w}{}", op.symbol()))),
                }
            }
            other => Err(Error::EventParse(format!("unexpected token {other:?}"))),
        }
    }
}
