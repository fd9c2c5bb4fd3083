//! Evaluator for method-body IR.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;

use crate::bridge::Bound;
use crate::dispatch::{CallCtx, MethodCtx};
use crate::env::EnvId;
use crate::error::{RtError, RtResult};
use crate::ir::{Ir, PrimOp};
use crate::method::{MethodBody, MethodEntry};
use crate::object_space::{ObjRef, ObjectSpace};
use crate::value::{Block, Value};

/// One activation: a method body or a block body.
#[derive(Debug, Clone)]
pub struct Frame {
    pub receiver: Value,
    pub args: Vec<Value>,
    pub block: Option<Value>,
    pub block_args: Vec<Value>,
    pub locals: Rc<RefCell<BTreeMap<String, Value>>>,
    pub method: Option<MethodCtx>,
    pub env: EnvId,
}

impl Frame {
    /// A frame outside any method, as used by scripts.
    pub fn top(env: EnvId) -> Frame {
        Frame {
            receiver: Value::Nil,
            args: Vec::new(),
            block: None,
            block_args: Vec::new(),
            locals: Rc::default(),
            method: None,
            env,
        }
    }

    fn caller_class(&self) -> Option<ObjRef> {
        self.method.as_ref().map(|m| m.holder)
    }
}

fn type_error(what: &str, v: &Value) -> RtError {
    RtError::Type(format!("{what}: unexpected {v:?}"))
}

impl ObjectSpace {
    pub fn eval(&mut self, frame: &Frame, ir: &Ir) -> RtResult<Value> {
        match ir {
            Ir::Lit(v) => Ok(v.clone()),
            Ir::SelfRef => Ok(frame.receiver.clone()),
            Ir::Arg(i) => frame
                .args
                .get(*i)
                .cloned()
                .ok_or_else(|| RtError::Compile(format!("argument {i} out of range"))),
            Ir::BlockArg(i) => frame
                .block_args
                .get(*i)
                .cloned()
                .ok_or_else(|| RtError::Compile(format!("block argument {i} out of range"))),
            Ir::Local(name) => Ok(frame.locals.borrow().get(name).cloned().unwrap_or(Value::Nil)),
            Ir::SetLocal(name, e) => {
                let v = self.eval(frame, e)?;
                frame.locals.borrow_mut().insert(name.clone(), v.clone());
                Ok(v)
            }
            Ir::Ivar(name) => {
                let obj = self.self_obj(frame)?;
                self.read_ivar(obj, name, frame.env)
            }
            Ir::IvarSet(name, e) => {
                let v = self.eval(frame, e)?;
                let obj = self.self_obj(frame)?;
                self.write_ivar(obj, name, frame.env, v.clone())?;
                Ok(v)
            }
            Ir::DynIvar(name) => {
                let obj = self.self_obj(frame)?;
                Ok(self.dynamic_ivar_at(obj, name))
            }
            Ir::DynIvarSet(name, e) => {
                let v = self.eval(frame, e)?;
                let obj = self.self_obj(frame)?;
                self.dynamic_ivar_at_put(obj, name, v.clone());
                Ok(v)
            }
            Ir::Send {
                recv,
                selector,
                args,
                splat,
                block,
            } => {
                let (receiver, ctx) = match recv {
                    Some(r) => (self.eval(frame, r)?, CallCtx::explicit(frame.caller_class())),
                    None => (frame.receiver.clone(), CallCtx::implicit(frame.caller_class())),
                };
                let args = self.eval_all(frame, args)?;
                let splat = self.eval_splat(frame, splat.as_deref())?;
                let block = self.eval_opt(frame, block.as_deref())?;
                match frame.env {
                    EnvId::Ruby => self.send_ruby(&receiver, selector, args, splat, block, ctx),
                    EnvId::Smalltalk => {
                        if splat.is_some() || block.is_some() {
                            return Err(RtError::Compile(format!(
                                "smalltalk send {selector} cannot take splat or block arguments"
                            )));
                        }
                        self.send_st(&receiver, selector, args, ctx)
                    }
                }
            }
            Ir::CrossSend {
                recv,
                selector,
                args,
                splat,
                block,
            } => {
                let receiver = self.eval(frame, recv)?;
                let args = self.eval_all(frame, args)?;
                let splat = self.eval_opt(frame, splat.as_deref())?;
                let block = self.eval_opt(frame, block.as_deref())?;
                self.st_call_ruby(&receiver, selector, args, splat, block, CallCtx::explicit(frame.caller_class()))
            }
            Ir::Super { args, splat, block } => {
                let method = frame
                    .method
                    .clone()
                    .ok_or_else(|| RtError::Compile("super outside a method".into()))?;
                let args = self.eval_all(frame, args)?;
                let splat = self.eval_splat(frame, splat.as_deref())?;
                let block = self.eval_opt(frame, block.as_deref())?;
                self.super_send(&method, &frame.receiver, args, splat, block)
            }
            Ir::BlockLit { params, body } => Ok(Value::Block(Rc::new(Block {
                params: *params,
                body: body.clone(),
                frame: Rc::new(frame.clone()),
                wrap_args: false,
            }))),
            Ir::BlockCall { block, args } => {
                let b = self.eval(frame, block)?;
                let args = self.eval_all(frame, args)?;
                self.call_block(&b, args)
            }
            Ir::Yield(args) => {
                let b = frame.block.clone().ok_or(RtError::LocalJump)?;
                let args = self.eval_all(frame, args)?;
                self.call_block(&b, args)
            }
            Ir::BlockParam => Ok(frame.block.clone().unwrap_or(Value::Nil)),
            Ir::Seq(items) => {
                let mut last = Value::Nil;
                for it in items {
                    last = self.eval(frame, it)?;
                }
                Ok(last)
            }
            Ir::Array(items) => Ok(Value::array(self.eval_all(frame, items)?)),
            Ir::Prim(op, operands) => {
                let vals = self.eval_all(frame, operands)?;
                self.prim(*op, &vals)
            }
            Ir::If(c, t, e) => {
                if self.eval(frame, c)?.truthy() {
                    self.eval(frame, t)
                } else {
                    self.eval(frame, e)
                }
            }
        }
    }

    fn self_obj(&self, frame: &Frame) -> RtResult<ObjRef> {
        frame
            .receiver
            .unwrapped()
            .as_obj()
            .ok_or_else(|| type_error("instance variables need an object receiver", &frame.receiver))
    }

    fn eval_all(&mut self, frame: &Frame, items: &[Ir]) -> RtResult<Vec<Value>> {
        items.iter().map(|it| self.eval(frame, it)).collect()
    }

    fn eval_opt(&mut self, frame: &Frame, item: Option<&Ir>) -> RtResult<Option<Value>> {
        item.map(|it| self.eval(frame, it)).transpose()
    }

    fn eval_splat(&mut self, frame: &Frame, item: Option<&Ir>) -> RtResult<Option<Vec<Value>>> {
        match self.eval_opt(frame, item)? {
            None => Ok(None),
            Some(v) => match v.unwrapped() {
                Value::Array(items) => Ok(Some(items.as_ref().clone())),
                other => Ok(Some(vec![other.clone()])),
            },
        }
    }

    fn prim(&mut self, op: PrimOp, vals: &[Value]) -> RtResult<Value> {
        let int = |v: &Value| match v.unwrapped() {
            Value::Int(i) => Ok(*i),
            other => Err(type_error("integer expected", other)),
        };
        let pair = |vals: &[Value]| -> RtResult<(i64, i64)> {
            match vals {
                [a, b] => Ok((int(a)?, int(b)?)),
                _ => Err(RtError::Compile("binary primitive needs two operands".into())),
            }
        };
        let overflow = || RtError::Type("integer overflow".into());
        Ok(match op {
            PrimOp::Concat => {
                let mut out = String::new();
                for v in vals {
                    match v.unwrapped() {
                        Value::Str(s) | Value::Sym(s) => out.push_str(s),
                        Value::Int(i) => out.push_str(&i.to_string()),
                        Value::Nil => {}
                        other => return Err(type_error("cannot concatenate", other)),
                    }
                }
                Value::str(&out)
            }
            PrimOp::Add => {
                let (a, b) = pair(vals)?;
                Value::Int(a.checked_add(b).ok_or_else(overflow)?)
            }
            PrimOp::Sub => {
                let (a, b) = pair(vals)?;
                Value::Int(a.checked_sub(b).ok_or_else(overflow)?)
            }
            PrimOp::Mul => {
                let (a, b) = pair(vals)?;
                Value::Int(a.checked_mul(b).ok_or_else(overflow)?)
            }
            PrimOp::Lt => {
                let (a, b) = pair(vals)?;
                Value::Bool(a < b)
            }
            PrimOp::Eq => match vals {
                [a, b] => Value::Bool(a.unwrapped() == b.unwrapped()),
                _ => return Err(RtError::Compile("`=` needs two operands".into())),
            },
            PrimOp::Not => match vals {
                [a] => Value::Bool(!a.truthy()),
                _ => return Err(RtError::Compile("`not` needs one operand".into())),
            },
        })
    }

    /// Calls a block value with exactly its declared number of arguments.
    pub fn call_block(&mut self, block: &Value, args: Vec<Value>) -> RtResult<Value> {
        let Value::Block(b) = block.unwrapped() else {
            return Err(type_error("not a block", block));
        };
        if args.len() != b.params {
            return Err(RtError::Argument {
                given: args.len(),
                expected: b.params.to_string(),
            });
        }
        let args = if b.wrap_args {
            args.into_iter().map(|a| self.wrap_result(a)).collect()
        } else {
            args
        };
        let mut frame = (*b.frame).clone();
        frame.block_args = args;
        self.eval(&frame, &b.body)
    }

    /// Runs a method body with already-bound arguments.
    pub(crate) fn activate(
        &mut self,
        entry: &Rc<MethodEntry>,
        holder: ObjRef,
        recv: &Value,
        bound: Bound,
    ) -> RtResult<Value> {
        let sig = entry.signature.clone();
        let mut frame = Frame {
            receiver: recv.unwrapped().clone(),
            args: bound.args,
            block: bound.block,
            block_args: Vec::new(),
            locals: Rc::default(),
            method: Some(MethodCtx {
                holder,
                selector: entry.base().to_string(),
                env: entry.env,
            }),
            env: entry.env,
        };
        let first_missing = sig.optionals.len() - bound.missing_optionals;
        for (_, default) in &sig.optionals[first_missing..] {
            let v = self.eval(&frame, default)?;
            frame.args.push(v);
        }
        if let Some(rest) = bound.rest {
            frame.args.push(Value::array(rest));
        }
        match entry.body.as_ref() {
            MethodBody::Ir(ir) => self.eval(&frame, ir),
            MethodBody::Native(f) => f(self, &frame.receiver, &frame.args, frame.block.as_ref()),
            MethodBody::Smalltalk(st) => {
                let holder = st.defining_class;
                let st = st.clone();
                let bound = crate::bridge::bind(&st.signature, frame.args, None)?;
                self.activate(&st, holder, recv, bound)
            }
        }
    }
}
