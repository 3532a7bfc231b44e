//! Deterministic byte encoding of sequents.
//!
//! Layout: a format byte, then a pre-order walk where each node is a
//! one-byte tag followed by its length-prefixed payload. Integers are
//! big-endian, strings are a `u32` byte count plus UTF-8. Bound variables
//! are de Bruijn indices and constants are positions in the declaration
//! list, so neither binder names nor `NEW` names reach the bytes. The tag
//! table is reproduced in `docs/canonical-encoding.md`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use super::expr::{BinOp, Definition, Expr, Hint, Layout, Level, Quant, SourcePos};
use super::value::Value;

pub const FORMAT_VERSION: u8 = 0x01;

pub mod tag {
    pub const LIT: u8 = 0x01;
    pub const VAR: u8 = 0x02;
    pub const CONST: u8 = 0x03;
    pub const BOUND: u8 = 0x04;
    pub const APPLY: u8 = 0x05;
    pub const BANG: u8 = 0x06;
    pub const NOT: u8 = 0x07;
    pub const AND: u8 = 0x08;
    pub const OR: u8 = 0x09;
    pub const IMPLIES: u8 = 0x0A;
    pub const BIN: u8 = 0x0B;
    pub const IF: u8 = 0x0C;
    pub const SET_ENUM: u8 = 0x0D;
    pub const TUPLE: u8 = 0x0E;
    pub const FUNC_LIT: u8 = 0x0F;
    pub const FUNC_APP: u8 = 0x10;
    pub const EXCEPT: u8 = 0x11;
    pub const FUNC_SET: u8 = 0x12;
    pub const DOMAIN: u8 = 0x13;
    pub const FORALL: u8 = 0x14;
    pub const EXISTS: u8 = 0x15;
    pub const PRIME: u8 = 0x16;
    pub const UNCHANGED: u8 = 0x17;
    pub const BOX_ACTION: u8 = 0x18;
    pub const ALWAYS: u8 = 0x19;

    pub const V_BOOL: u8 = 0x20;
    pub const V_INT: u8 = 0x21;
    pub const V_STR: u8 = 0x22;
    pub const V_SET: u8 = 0x23;
    pub const V_FUNC: u8 = 0x24;
    pub const V_TUPLE: u8 = 0x25;

    pub const SEQUENT: u8 = 0x30;
    pub const DECL_VAR: u8 = 0x31;
    pub const DECL_CONST: u8 = 0x32;
    pub const DEF: u8 = 0x33;
}

const BINOPS: [BinOp; 16] = [
    BinOp::Eq,
    BinOp::Neq,
    BinOp::In,
    BinOp::NotIn,
    BinOp::Lt,
    BinOp::Le,
    BinOp::Gt,
    BinOp::Ge,
    BinOp::Subseteq,
    BinOp::Range,
    BinOp::Cup,
    BinOp::Cap,
    BinOp::SetMinus,
    BinOp::Add,
    BinOp::Sub,
    BinOp::Mul,
];

fn binop_code(op: BinOp) -> u8 {
    BINOPS.iter().position(|o| *o == op).unwrap() as u8
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    Variable(String),
    Constant(String),
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Variable(n) | Decl::Constant(n) => n,
        }
    }
}

/// A closed natural-deduction sequent: declarations, the bodies of the
/// definitions it may expand, hypotheses, and a goal.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Sequent {
    pub decls: Vec<Decl>,
    pub defs: Vec<Definition>,
    pub hyps: Vec<Expr>,
    pub goal: Expr,
}

impl Default for Expr {
    fn default() -> Self {
        Expr::TRUE
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unsupported format version {0:#04x}")]
    Version(u8),
    #[error("unexpected end of input")]
    Truncated,
    #[error("unknown tag {0:#04x} at offset {1}")]
    UnknownTag(u8, usize),
    #[error("invalid UTF-8 string")]
    Utf8,
    #[error("trailing bytes after sequent")]
    Trailing,
}

struct Encoder {
    out: Vec<u8>,
    consts: HashMap<String, u32>,
}

impl Encoder {
    fn u8(&mut self, b: u8) {
        self.out.push(b);
    }
    fn u32(&mut self, n: u32) {
        self.out.extend_from_slice(&n.to_be_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("collection too large to encode"));
    }
    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.out.extend_from_slice(s.as_bytes());
    }

    fn constant(&mut self, name: &str) -> u32 {
        let next = self.consts.len() as u32;
        *self.consts.entry(name.to_string()).or_insert(next)
    }

    fn exprs(&mut self, items: &[Expr]) {
        self.len(items.len());
        for e in items {
            self.expr(e);
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Lit(v) => {
                self.u8(tag::LIT);
                encode_value_into(v, &mut self.out);
            }
            Expr::Var(n) => {
                self.u8(tag::VAR);
                self.str(n);
            }
            Expr::Const(n) => {
                self.u8(tag::CONST);
                let i = self.constant(n);
                self.u32(i);
            }
            Expr::Bound(i, _) => {
                self.u8(tag::BOUND);
                self.u32(*i);
            }
            Expr::Apply(n, args) | Expr::Bang(n, args) => {
                self.u8(if matches!(e, Expr::Apply(..)) { tag::APPLY } else { tag::BANG });
                self.str(n);
                self.exprs(args);
            }
            Expr::Not(a) => {
                self.u8(tag::NOT);
                self.expr(a);
            }
            Expr::And(items, _) => {
                self.u8(tag::AND);
                self.exprs(items);
            }
            Expr::Or(items, _) => {
                self.u8(tag::OR);
                self.exprs(items);
            }
            Expr::Implies(a, b) => {
                self.u8(tag::IMPLIES);
                self.expr(a);
                self.expr(b);
            }
            Expr::Bin(op, a, b) => {
                self.u8(tag::BIN);
                self.u8(binop_code(*op));
                self.expr(a);
                self.expr(b);
            }
            Expr::If(c, t, f) => {
                self.u8(tag::IF);
                self.expr(c);
                self.expr(t);
                self.expr(f);
            }
            Expr::SetEnum(items) => {
                self.u8(tag::SET_ENUM);
                self.exprs(items);
            }
            Expr::Tuple(items) => {
                self.u8(tag::TUPLE);
                self.exprs(items);
            }
            Expr::FuncLit(_, d, b) => {
                self.u8(tag::FUNC_LIT);
                self.expr(d);
                self.expr(b);
            }
            Expr::FuncApp(f, a) => {
                self.u8(tag::FUNC_APP);
                self.expr(f);
                self.expr(a);
            }
            Expr::Except(base, ups) => {
                self.u8(tag::EXCEPT);
                self.expr(base);
                self.len(ups.len());
                for (k, v) in ups {
                    self.expr(k);
                    self.expr(v);
                }
            }
            Expr::FuncSet(a, b) => {
                self.u8(tag::FUNC_SET);
                self.expr(a);
                self.expr(b);
            }
            Expr::Domain(a) => {
                self.u8(tag::DOMAIN);
                self.expr(a);
            }
            Expr::Quant(q, _, d, b) => {
                self.u8(match q {
                    Quant::Forall => tag::FORALL,
                    Quant::Exists => tag::EXISTS,
                });
                self.expr(d);
                self.expr(b);
            }
            Expr::Prime(a) => {
                self.u8(tag::PRIME);
                self.expr(a);
            }
            Expr::Unchanged(a) => {
                self.u8(tag::UNCHANGED);
                self.expr(a);
            }
            Expr::BoxAction(a, v) => {
                self.u8(tag::BOX_ACTION);
                self.expr(a);
                self.expr(v);
            }
            Expr::Always(a) => {
                self.u8(tag::ALWAYS);
                self.expr(a);
            }
        }
    }
}

/// Append the canonical encoding of a value.
pub fn encode_value_into(v: &Value, out: &mut Vec<u8>) {
    match v {
        Value::Bool(b) => {
            out.push(tag::V_BOOL);
            out.push(*b as u8);
        }
        Value::Int(n) => {
            out.push(tag::V_INT);
            out.extend_from_slice(&n.to_be_bytes());
        }
        Value::Str(s) => {
            out.push(tag::V_STR);
            out.extend_from_slice(&(s.len() as u32).to_be_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        Value::Set(items) => {
            out.push(tag::V_SET);
            out.extend_from_slice(&(items.len() as u32).to_be_bytes());
            for x in items {
                encode_value_into(x, out);
            }
        }
        Value::Func(map) => {
            out.push(tag::V_FUNC);
            out.extend_from_slice(&(map.len() as u32).to_be_bytes());
            for (k, x) in map {
                encode_value_into(k, out);
                encode_value_into(x, out);
            }
        }
        Value::Tuple(items) => {
            out.push(tag::V_TUPLE);
            out.extend_from_slice(&(items.len() as u32).to_be_bytes());
            for x in items {
                encode_value_into(x, out);
            }
        }
    }
}

pub fn encode_value(v: &Value) -> Vec<u8> {
    let mut out = Vec::new();
    encode_value_into(v, &mut out);
    out
}

/// Canonical bytes of a sequent, format byte included.
pub fn canonicalize(s: &Sequent) -> Vec<u8> {
    let mut enc = Encoder {
        out: vec![FORMAT_VERSION],
        consts: HashMap::new(),
    };
    for d in &s.decls {
        if let Decl::Constant(n) = d {
            enc.constant(n);
        }
    }
    enc.u8(tag::SEQUENT);
    enc.len(s.decls.len());
    for d in &s.decls {
        match d {
            Decl::Variable(n) => {
                enc.u8(tag::DECL_VAR);
                enc.str(n);
            }
            Decl::Constant(_) => enc.u8(tag::DECL_CONST),
        }
    }
    enc.len(s.defs.len());
    for d in &s.defs {
        enc.u8(tag::DEF);
        enc.str(&d.name);
        enc.len(d.params.len());
        enc.expr(&d.body);
    }
    enc.exprs(&s.hyps);
    enc.expr(&s.goal);
    enc.out
}

/// Canonical bytes of a lone expression (empty context).
pub fn canonicalize_expr(e: &Expr) -> Vec<u8> {
    canonicalize(&Sequent {
        goal: e.clone(),
        ..Sequent::default()
    })
}

struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

type DResult<T> = Result<T, DecodeError>;

impl<'a> Decoder<'a> {
    fn u8(&mut self) -> DResult<u8> {
        let b = *self.buf.get(self.pos).ok_or(DecodeError::Truncated)?;
        self.pos += 1;
        Ok(b)
    }
    fn bytes(&mut self, n: usize) -> DResult<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(DecodeError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(DecodeError::Truncated)?;
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> DResult<u32> {
        let b = self.bytes(4)?;
        Ok(u32::from_be_bytes(b.try_into().unwrap()))
    }
    fn str(&mut self) -> DResult<String> {
        let n = self.u32()? as usize;
        let b = self.bytes(n)?;
        String::from_utf8(b.to_vec()).map_err(|_| DecodeError::Utf8)
    }
    fn exprs(&mut self) -> DResult<Vec<Expr>> {
        let n = self.u32()?;
        (0..n).map(|_| self.expr()).collect()
    }

    fn value(&mut self) -> DResult<Value> {
        let at = self.pos;
        Ok(match self.u8()? {
            tag::V_BOOL => Value::Bool(self.u8()? != 0),
            tag::V_INT => Value::Int(i64::from_be_bytes(self.bytes(8)?.try_into().unwrap())),
            tag::V_STR => Value::Str(self.str()?),
            tag::V_SET => {
                let n = self.u32()?;
                Value::Set((0..n).map(|_| self.value()).collect::<DResult<BTreeSet<_>>>()?)
            }
            tag::V_FUNC => {
                let n = self.u32()?;
                let mut m = BTreeMap::new();
                for _ in 0..n {
                    let k = self.value()?;
                    m.insert(k, self.value()?);
                }
                Value::Func(m)
            }
            tag::V_TUPLE => {
                let n = self.u32()?;
                Value::Tuple((0..n).map(|_| self.value()).collect::<DResult<_>>()?)
            }
            t => return Err(DecodeError::UnknownTag(t, at)),
        })
    }

    fn expr(&mut self) -> DResult<Expr> {
        let at = self.pos;
        let b = |e: Expr| Box::new(e);
        Ok(match self.u8()? {
            tag::LIT => Expr::Lit(self.value()?),
            tag::VAR => Expr::Var(self.str()?),
            tag::CONST => Expr::Const(format!("c{}", self.u32()?)),
            tag::BOUND => {
                let i = self.u32()?;
                Expr::Bound(i, Hint(format!("x{i}")))
            }
            tag::APPLY => {
                let n = self.str()?;
                Expr::Apply(n, self.exprs()?)
            }
            tag::BANG => {
                let n = self.str()?;
                Expr::Bang(n, self.exprs()?)
            }
            tag::NOT => Expr::Not(b(self.expr()?)),
            tag::AND => Expr::And(self.exprs()?, Layout::INLINE),
            tag::OR => Expr::Or(self.exprs()?, Layout::INLINE),
            tag::IMPLIES => Expr::Implies(b(self.expr()?), b(self.expr()?)),
            tag::BIN => {
                let code = self.u8()?;
                let op = *BINOPS
                    .get(code as usize)
                    .ok_or(DecodeError::UnknownTag(code, at + 1))?;
                Expr::Bin(op, b(self.expr()?), b(self.expr()?))
            }
            tag::IF => Expr::If(b(self.expr()?), b(self.expr()?), b(self.expr()?)),
            tag::SET_ENUM => Expr::SetEnum(self.exprs()?),
            tag::TUPLE => Expr::Tuple(self.exprs()?),
            tag::FUNC_LIT => Expr::FuncLit(Hint("x".into()), b(self.expr()?), b(self.expr()?)),
            tag::FUNC_APP => Expr::FuncApp(b(self.expr()?), b(self.expr()?)),
            tag::EXCEPT => {
                let base = self.expr()?;
                let n = self.u32()?;
                let mut ups = Vec::new();
                for _ in 0..n {
                    let k = self.expr()?;
                    ups.push((k, self.expr()?));
                }
                Expr::Except(b(base), ups)
            }
            tag::FUNC_SET => Expr::FuncSet(b(self.expr()?), b(self.expr()?)),
            tag::DOMAIN => Expr::Domain(b(self.expr()?)),
            t @ (tag::FORALL | tag::EXISTS) => {
                let q = if t == tag::FORALL { Quant::Forall } else { Quant::Exists };
                Expr::Quant(q, Hint("x".into()), b(self.expr()?), b(self.expr()?))
            }
            tag::PRIME => Expr::Prime(b(self.expr()?)),
            tag::UNCHANGED => Expr::Unchanged(b(self.expr()?)),
            tag::BOX_ACTION => Expr::BoxAction(b(self.expr()?), b(self.expr()?)),
            tag::ALWAYS => Expr::Always(b(self.expr()?)),
            t => return Err(DecodeError::UnknownTag(t, at)),
        })
    }
}

/// Inverse of [`canonicalize`] up to names: constants come back as
/// `c0, c1, ...` and binder hints are synthetic.
pub fn decode(bytes: &[u8]) -> Result<Sequent, DecodeError> {
    let mut d = Decoder { buf: bytes, pos: 0 };
    let v = d.u8()?;
    if v != FORMAT_VERSION {
        return Err(DecodeError::Version(v));
    }
    let at = d.pos;
    let t = d.u8()?;
    if t != tag::SEQUENT {
        return Err(DecodeError::UnknownTag(t, at));
    }
    let n = d.u32()?;
    let mut decls = Vec::new();
    let mut nconst = 0;
    for _ in 0..n {
        let at = d.pos;
        match d.u8()? {
            tag::DECL_VAR => decls.push(Decl::Variable(d.str()?)),
            tag::DECL_CONST => {
                decls.push(Decl::Constant(format!("c{nconst}")));
                nconst += 1;
            }
            t => return Err(DecodeError::UnknownTag(t, at)),
        }
    }
    let n = d.u32()?;
    let mut defs = Vec::new();
    for _ in 0..n {
        let at = d.pos;
        let t = d.u8()?;
        if t != tag::DEF {
            return Err(DecodeError::UnknownTag(t, at));
        }
        let name = d.str()?;
        let np = d.u32()?;
        let body = d.expr()?;
        defs.push(Definition {
            name,
            params: (0..np).map(|i| format!("p{i}")).collect(),
            level: Level::Constant,
            body,
            pos: SourcePos::default(),
        });
    }
    let hyps = d.exprs()?;
    let goal = d.expr()?;
    if d.pos != bytes.len() {
        return Err(DecodeError::Trailing);
    }
    let mut s = Sequent {
        decls,
        defs,
        hyps,
        goal,
    };
    // Levels are not encoded; recompute them in order.
    for i in 0..s.defs.len() {
        let prior = s.defs[..i].to_vec();
        let lvl = s.defs[i].body.level(&prior);
        s.defs[i].level = lvl;
    }
    Ok(s)
}
