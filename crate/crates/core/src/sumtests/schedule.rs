//! Total computable stage functions `(x, s) -> stage`.
//!
//! Expressions range over `n = |x|` and `s` with `+`, `*`, `^const`, `min`
//! and `max`; arithmetic saturates at `u64::MAX`. Tables map `(x, s)` to a
//! stage, with `*` matching any `x`, and fall back to a default expression.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::numerics::BitString;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Const(u64),
    N,
    S,
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, n: u64, s: u64) -> u64 {
        match self {
            Expr::Const(c) => *c,
            Expr::N => n,
            Expr::S => s,
            Expr::Add(a, b) => a.eval(n, s).saturating_add(b.eval(n, s)),
            Expr::Mul(a, b) => a.eval(n, s).saturating_mul(b.eval(n, s)),
            Expr::Pow(a, k) => a.eval(n, s).saturating_pow(*k),
            Expr::Min(a, b) => a.eval(n, s).min(b.eval(n, s)),
            Expr::Max(a, b) => a.eval(n, s).max(b.eval(n, s)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::N => f.write_str("n"),
            Expr::S => f.write_str("s"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Pow(a, k) => write!(f, "({a}^{k})"),
            Expr::Min(a, b) => write!(f, "min({a},{b})"),
            Expr::Max(a, b) => write!(f, "max({a},{b})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, what: &str) -> Error {
        Error::Schedule(format!("{what} at offset {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn number(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("expected integer"))
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut e = self.product()?;
        while self.eat(b'+') {
            e = Expr::Add(Box::new(e), Box::new(self.product()?));
        }
        Ok(e)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut e = self.power()?;
        while self.eat(b'*') {
            e = Expr::Mul(Box::new(e), Box::new(self.power()?));
        }
        Ok(e)
    }

    fn power(&mut self) -> Result<Expr> {
        let e = self.atom()?;
        if self.eat(b'^') {
            let k = self.number()?;
            let k = u32::try_from(k).map_err(|_| self.err("exponent too large"))?;
            return Ok(Expr::Pow(Box::new(e), k));
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        for (name, min) in [(&b"min"[..], true), (&b"max"[..], false)] {
            if rest.starts_with(name) {
                self.pos += 3;
                self.expect(b'(')?;
                let a = Box::new(self.sum()?);
                self.expect(b',')?;
                let b = Box::new(self.sum()?);
                self.expect(b')')?;
                return Ok(if min {
                    Expr::Min(a, b)
                } else {
                    Expr::Max(a, b)
                });
            }
        }
        match rest.first() {
            Some(b'n') => {
                self.pos += 1;
                Ok(Expr::N)
            }
            Some(b's') => {
                self.pos += 1;
                Ok(Expr::S)
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => Ok(Expr::Const(self.number()?)),
            _ => Err(self.err("expected expression")),
        }
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let e = p.sum()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }
}

/// `x` column of a table row: a specific string or any string.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Key {
    Exact(BitString),
    Any,
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::Exact(x) => write!(f, "{x}"),
            Key::Any => f.write_str("*"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleTable {
    pub rows: BTreeMap<(Key, u64), u64>,
    pub default: Expr,
}

impl ScheduleTable {
    pub fn new(default: Expr) -> Self {
        Self {
            rows: BTreeMap::new(),
            default,
        }
    }

    pub fn insert(&mut self, x: Key, s: u64, stage: u64) {
        self.rows.insert((x, s), stage);
    }

    pub fn lookup(&self, x: &BitString, s: u64) -> u64 {
        self.rows
            .get(&(Key::Exact(x.clone()), s))
            .or_else(|| self.rows.get(&(Key::Any, s)))
            .copied()
            .unwrap_or_else(|| self.default.eval(x.len() as u64, s))
    }

    /// CSV rows `x,s,stage` under a header, then a `default=EXPR` line.
    pub fn to_csv(&self) -> String {
        let rows = self
            .rows
            .iter()
            .map(|((x, s), v)| [x.to_string(), s.to_string(), v.to_string()]);
        let mut out = crate::report::csv_text(&["x", "s", "stage"], rows);
        out.push_str(&format!("default={}\n", self.default));
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut default = None;
        let mut body = String::new();
        for line in text.lines() {
            match line.trim().strip_prefix("default=") {
                Some(expr) => default = Some(expr.parse()?),
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let default =
            default.ok_or_else(|| Error::Schedule("table has no default= line".into()))?;
        let mut table = Self::new(default);
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Schedule(e.to_string()))?;
            let bad = || Error::Schedule(format!("bad table row {}", i + 1));
            if rec.len() != 3 {
                return Err(bad());
            }
            let key = match &rec[0] {
                "*" => Key::Any,
                x => Key::Exact(x.parse().map_err(|_| bad())?),
            };
            let s = rec[1].parse().map_err(|_| bad())?;
            let v = rec[2].parse().map_err(|_| bad())?;
            table.insert(key, s, v);
        }
        Ok(table)
    }
}

/// A schedule `h`, `f` or `g`. For the one-argument `f`, the stage `t` is
/// evaluated as `(numeral(t), t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    Expr(Expr),
    Table(ScheduleTable),
}

impl Schedule {
    pub fn expr(text: &str) -> Result<Self> {
        Ok(Schedule::Expr(text.parse()?))
    }

    pub fn constant(c: u64) -> Self {
        Schedule::Expr(Expr::Const(c))
    }

    pub fn eval(&self, x: &BitString, s: u64) -> u64 {
        match self {
            Schedule::Expr(e) => e.eval(x.len() as u64, s),
            Schedule::Table(t) => t.lookup(x, s),
        }
    }

    /// Parse either an expression or, if the text has a `default=` line, a table.
    pub fn parse(text: &str) -> Result<Self> {
        if text.lines().any(|l| l.trim().starts_with("default=")) {
            Ok(Schedule::Table(ScheduleTable::from_csv(text)?))
        } else {
            Self::expr(text.trim())
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Schedule::Expr(e) => e.to_string(),
            Schedule::Table(t) => t.to_csv(),
        }
    }

    /// `self <= other` at every probe point.
    pub fn le_on<'a>(
        &self,
        other: &Schedule,
        probes: impl IntoIterator<Item = (&'a BitString, u64)>,
    ) -> bool {
        probes
            .into_iter()
            .all(|(x, s)| self.eval(x, s) <= other.eval(x, s))
    }
}
