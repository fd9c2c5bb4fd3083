//! Bridge-method generation and argument binding for ruby definitions.
//!
//! Every ruby definition is stored under one full selector per call shape:
//! all sixteen combinations of 0..=3 positional arguments, splat or not,
//! block or not, plus an exact-arity entry when the method takes more than
//! three positional parameters.

use std::rc::Rc;

use crate::env::EnvId;
use crate::error::{RtError, RtResult};
use crate::method::{BridgeRole, MethodBody, MethodEntry, Signature, Visibility};
use crate::object_space::ObjRef;
use crate::selector::{FullSelector, MAX_BRIDGE_ARGS};
use crate::value::Value;

/// Role of the bridge for `shape` given the definition's signature.
pub fn classify(sig: &Signature, shape: &FullSelector) -> BridgeRole {
    let n = shape.n;
    let (req, max) = (sig.required, sig.arity());
    if n > MAX_BRIDGE_ARGS {
        return BridgeRole::Real;
    }
    if sig.block_fills_last && shape.block && !shape.splat && n + 1 == max {
        return BridgeRole::Real;
    }
    if shape.splat {
        if n > max && !sig.splat {
            BridgeRole::ArgumentErrorStub
        } else {
            BridgeRole::SplatAdapter
        }
    } else if n < req {
        BridgeRole::ArgumentErrorStub
    } else if n < max {
        BridgeRole::DefaultFillingStub
    } else if n == max || sig.splat {
        BridgeRole::Real
    } else {
        BridgeRole::ArgumentErrorStub
    }
}

/// Full selectors emitted for one definition.
pub fn bridge_shapes(base: &str, sig: &Signature) -> Vec<FullSelector> {
    let mut out = Vec::with_capacity(17);
    for n in 0..=MAX_BRIDGE_ARGS {
        for splat in [false, true] {
            for block in [false, true] {
                out.push(FullSelector::new(base, n, splat, block));
            }
        }
    }
    if sig.arity() > MAX_BRIDGE_ARGS {
        out.push(FullSelector::new(base, sig.arity(), sig.splat, sig.block));
    }
    out
}

pub fn generate_bridges(
    base: &str,
    sig: Rc<Signature>,
    body: Rc<MethodBody>,
    defining_class: ObjRef,
    visibility: Visibility,
) -> Vec<MethodEntry> {
    bridge_shapes(base, &sig)
        .into_iter()
        .map(|shape| MethodEntry {
            selector: shape.render(),
            env: EnvId::Ruby,
            visibility,
            signature: sig.clone(),
            body: body.clone(),
            bridge_role: classify(&sig, &shape),
            defining_class,
            shape: Some(shape),
        })
        .collect()
}

/// Positional arguments matched against a signature.
#[derive(Debug, Clone, PartialEq)]
pub struct Bound {
    /// Required arguments followed by the optionals actually supplied.
    pub args: Vec<Value>,
    /// Trailing optionals still to be filled from their defaults.
    pub missing_optionals: usize,
    /// Splat contents; `Some` iff the signature has a splat parameter.
    pub rest: Option<Vec<Value>>,
    pub block: Option<Value>,
}

pub fn bind(sig: &Signature, mut positional: Vec<Value>, mut block: Option<Value>) -> RtResult<Bound> {
    if sig.block_fills_last && positional.len() + 1 == sig.arity() {
        if let Some(b) = block.take() {
            positional.push(b);
        }
    }
    let given = positional.len();
    if given < sig.required || (!sig.splat && given > sig.arity()) {
        return Err(RtError::Argument {
            given,
            expected: sig.describe_expected(),
        });
    }
    let supplied = (given - sig.required).min(sig.optionals.len());
    let fixed = sig.required + supplied;
    let rest = sig.splat.then(|| positional.split_off(fixed));
    Ok(Bound {
        args: positional,
        missing_optionals: sig.optionals.len() - supplied,
        rest,
        block,
    })
}
