//! Method-body IR and its s-expression surface syntax.

use std::rc::Rc;

use crate::error::{RtError, RtResult};
use crate::selector::{parse_st_ruby_selector, StRubySelector, RUBY_PREFIX};
use crate::sexpr::{read_one, Sexp};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimOp {
    Concat,
    Add,
    Sub,
    Mul,
    Eq,
    Lt,
    Not,
}

#[derive(Debug, Clone)]
pub enum Ir {
    Lit(Value),
    SelfRef,
    Arg(usize),
    BlockArg(usize),
    Local(String),
    SetLocal(String, Box<Ir>),
    Ivar(String),
    IvarSet(String, Box<Ir>),
    DynIvar(String),
    DynIvarSet(String, Box<Ir>),
    /// `recv == None` is a receiverless (implicit self) call.
    Send {
        recv: Option<Box<Ir>>,
        selector: String,
        args: Vec<Ir>,
        splat: Option<Box<Ir>>,
        block: Option<Box<Ir>>,
    },
    /// Smalltalk-side call into ruby using the `@ruby1:` syntax.
    CrossSend {
        recv: Box<Ir>,
        selector: StRubySelector,
        args: Vec<Ir>,
        splat: Option<Box<Ir>>,
        block: Option<Box<Ir>>,
    },
    Super {
        args: Vec<Ir>,
        splat: Option<Box<Ir>>,
        block: Option<Box<Ir>>,
    },
    BlockLit {
        params: usize,
        body: Rc<Ir>,
    },
    BlockCall {
        block: Box<Ir>,
        args: Vec<Ir>,
    },
    Yield(Vec<Ir>),
    BlockParam,
    Seq(Vec<Ir>),
    Array(Vec<Ir>),
    Prim(PrimOp, Vec<Ir>),
    If(Box<Ir>, Box<Ir>, Box<Ir>),
}

impl Ir {
    pub fn parse(src: &str) -> RtResult<Ir> {
        let sexp = read_one(src).map_err(|e| RtError::Compile(e.0))?;
        Ir::from_sexp(&sexp)
    }

    pub fn from_sexp(s: &Sexp) -> RtResult<Ir> {
        match s {
            Sexp::Str(text) => Ok(Ir::Lit(Value::str(text))),
            Sexp::Atom(a) => atom(a),
            Sexp::List(items) => list(items),
        }
    }
}

fn err(msg: impl Into<String>) -> RtError {
    RtError::Compile(msg.into())
}

/// Literal atoms shared with the script runner.
pub fn literal_atom(a: &str) -> Option<Value> {
    match a {
        "nil" => Some(Value::Nil),
        "true" => Some(Value::Bool(true)),
        "false" => Some(Value::Bool(false)),
        _ => {
            if let Some(sym) = a.strip_prefix(':') {
                if !sym.is_empty() {
                    return Some(Value::sym(sym));
                }
            }
            a.parse::<i64>().ok().map(Value::Int)
        }
    }
}

fn atom(a: &str) -> RtResult<Ir> {
    if a == "self" {
        return Ok(Ir::SelfRef);
    }
    literal_atom(a)
        .map(Ir::Lit)
        .ok_or_else(|| err(format!("unknown atom `{a}` in method body")))
}

fn name_of(s: Option<&Sexp>, form: &str) -> RtResult<String> {
    s.and_then(Sexp::text)
        .map(|t| t.strip_prefix('@').unwrap_or(t).to_string())
        .ok_or_else(|| err(format!("`{form}` expects a name")))
}

fn index_of(s: Option<&Sexp>, form: &str) -> RtResult<usize> {
    s.and_then(Sexp::atom)
        .and_then(|a| a.parse().ok())
        .ok_or_else(|| err(format!("`{form}` expects an index")))
}

fn exact(items: &[Sexp], n: usize, form: &str) -> RtResult<()> {
    if items.len() == n + 1 {
        Ok(())
    } else {
        Err(err(format!("`{form}` expects {n} operand(s)")))
    }
}

fn boxed(s: &Sexp) -> RtResult<Box<Ir>> {
    Ir::from_sexp(s).map(Box::new)
}

type SendArgs = (Vec<Ir>, Option<Box<Ir>>, Option<Box<Ir>>);

/// Splits call arguments into positional, `(splat e)` and `(withblock e)`.
fn call_args(items: &[Sexp]) -> RtResult<SendArgs> {
    let mut args = Vec::new();
    let (mut splat, mut block) = (None, None);
    for it in items {
        if let Sexp::List(inner) = it {
            match inner.first().and_then(Sexp::atom) {
                Some("splat") => {
                    exact(inner, 1, "splat")?;
                    splat = Some(boxed(&inner[1])?);
                    continue;
                }
                Some("withblock") => {
                    exact(inner, 1, "withblock")?;
                    block = Some(boxed(&inner[1])?);
                    continue;
                }
                _ => {}
            }
        }
        if splat.is_some() || block.is_some() {
            return Err(err("positional arguments must precede splat and block"));
        }
        args.push(Ir::from_sexp(it)?);
    }
    Ok((args, splat, block))
}

fn exprs(items: &[Sexp]) -> RtResult<Vec<Ir>> {
    items.iter().map(Ir::from_sexp).collect()
}

fn seq(items: &[Sexp]) -> RtResult<Ir> {
    let mut body = exprs(items)?;
    Ok(if body.len() == 1 {
        body.remove(0)
    } else {
        Ir::Seq(body)
    })
}

fn list(items: &[Sexp]) -> RtResult<Ir> {
    let head = items
        .first()
        .and_then(Sexp::atom)
        .ok_or_else(|| err("empty or headless form in method body"))?;
    let prim = |op| Ok(Ir::Prim(op, exprs(&items[1..])?));
    match head {
        "arg" => Ok(Ir::Arg(index_of(items.get(1), head)?)),
        "barg" => Ok(Ir::BlockArg(index_of(items.get(1), head)?)),
        "local" => Ok(Ir::Local(name_of(items.get(1), head)?)),
        "let" => {
            exact(items, 2, head)?;
            Ok(Ir::SetLocal(name_of(items.get(1), head)?, boxed(&items[2])?))
        }
        "ivar" => Ok(Ir::Ivar(name_of(items.get(1), head)?)),
        "ivarset" => {
            exact(items, 2, head)?;
            Ok(Ir::IvarSet(name_of(items.get(1), head)?, boxed(&items[2])?))
        }
        "dynivar" => Ok(Ir::DynIvar(name_of(items.get(1), head)?)),
        "dynivarset" => {
            exact(items, 2, head)?;
            Ok(Ir::DynIvarSet(name_of(items.get(1), head)?, boxed(&items[2])?))
        }
        "send" => {
            if items.len() < 3 {
                return Err(err("`send` expects a receiver and a selector"));
            }
            let selector = name_of(items.get(2), head)?;
            let (args, splat, block) = call_args(&items[3..])?;
            Ok(Ir::Send {
                recv: Some(boxed(&items[1])?),
                selector,
                args,
                splat,
                block,
            })
        }
        "call" => {
            let selector = items
                .get(1)
                .and_then(Sexp::text)
                .ok_or_else(|| err("`call` expects a selector"))?
                .to_string();
            let (args, splat, block) = call_args(&items[2..])?;
            Ok(Ir::Send {
                recv: None,
                selector,
                args,
                splat,
                block,
            })
        }
        "cross" => cross(items),
        "super" => {
            let (args, splat, block) = call_args(&items[1..])?;
            Ok(Ir::Super { args, splat, block })
        }
        "block" => {
            let params = index_of(items.get(1), head)?;
            Ok(Ir::BlockLit {
                params,
                body: Rc::new(seq(&items[2..])?),
            })
        }
        "blockcall" => {
            if items.len() < 2 {
                return Err(err("`blockcall` expects a block"));
            }
            Ok(Ir::BlockCall {
                block: boxed(&items[1])?,
                args: exprs(&items[2..])?,
            })
        }
        "yield" => Ok(Ir::Yield(exprs(&items[1..])?)),
        "blockparam" => Ok(Ir::BlockParam),
        "seq" => Ok(Ir::Seq(exprs(&items[1..])?)),
        "array" => Ok(Ir::Array(exprs(&items[1..])?)),
        "concat" => prim(PrimOp::Concat),
        "+" => prim(PrimOp::Add),
        "-" => prim(PrimOp::Sub),
        "*" => prim(PrimOp::Mul),
        "=" => prim(PrimOp::Eq),
        "<" => prim(PrimOp::Lt),
        "not" => prim(PrimOp::Not),
        "if" => {
            exact(items, 3, head)?;
            Ok(Ir::If(boxed(&items[1])?, boxed(&items[2])?, boxed(&items[3])?))
        }
        other => Err(err(format!("unknown form `{other}`"))),
    }
}

/// `(cross recv @ruby1:sel: a _: b __BLOCK: blk)`
fn cross(items: &[Sexp]) -> RtResult<Ir> {
    if items.len() < 3 {
        return Err(err("`cross` expects a receiver and a ruby selector"));
    }
    let recv = boxed(&items[1])?;
    let (parts, values) = keyword_message(&items[2..])?;
    if !parts[0].starts_with(RUBY_PREFIX) {
        return Err(err(format!("`{}` does not start with {RUBY_PREFIX}", parts[0])));
    }
    let selector = parse_st_ruby_selector(&parts)?;
    let mut values = values.into_iter();
    let args = values.by_ref().take(selector.normal_args).collect();
    let splat = selector.has_splat.then(|| values.next().map(Box::new)).flatten();
    let block = selector.has_block.then(|| values.next().map(Box::new)).flatten();
    Ok(Ir::CrossSend {
        recv,
        selector,
        args,
        splat,
        block,
    })
}

/// Interleaved keyword parts and argument forms.
pub(crate) fn keyword_message(items: &[Sexp]) -> RtResult<(Vec<String>, Vec<Ir>)> {
    let mut parts = Vec::new();
    let mut values = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let kw = items[i]
            .atom()
            .ok_or_else(|| err(format!("expected a keyword, found `{}`", items[i])))?;
        parts.push(kw.to_string());
        i += 1;
        if kw.ends_with(':') {
            let v = items
                .get(i)
                .ok_or_else(|| err(format!("keyword `{kw}` needs an argument")))?;
            values.push(Ir::from_sexp(v)?);
            i += 1;
        }
    }
    Ok((parts, values))
}
