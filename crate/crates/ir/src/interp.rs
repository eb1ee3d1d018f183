//! Reference interpreter. Plain values wrap at their type width; intrinsics
//! run on an [`RncEngine`] over the moduli recorded in the module header.

use std::collections::HashMap;

use hoacs_core::{EncodedValue, ModuliSet, RncEngine};

use crate::ast::{Instr, IrModule, Opcode, Operand, Ty};
use crate::error::{IrError, Result};

const MAX_CALL_DEPTH: usize = 64;

#[derive(Clone, Debug)]
pub enum Value {
    Plain(u64),
    Enc(EncodedValue),
}

fn trap(msg: impl Into<String>) -> IrError {
    IrError::Trap(msg.into())
}

pub struct Interpreter<'m> {
    module: &'m IrModule,
    engine: Option<RncEngine>,
    depth: usize,
}

impl<'m> Interpreter<'m> {
    /// Binds intrinsics to the moduli in the module header, if there is one;
    /// `seed` drives the runtime shifts.
    pub fn new(module: &'m IrModule, seed: u64) -> Result<Self> {
        let engine = match module.rnc_header() {
            Some((_, moduli)) => Some(RncEngine::new(ModuliSet::new(&moduli)?, seed)),
            None => None,
        };
        Ok(Self {
            module,
            engine,
            depth: 0,
        })
    }

    pub fn engine(&self) -> Option<&RncEngine> {
        self.engine.as_ref()
    }

    pub fn call(&mut self, name: &str, args: &[u64]) -> Result<u64> {
        let f = self
            .module
            .function(name)
            .ok_or_else(|| IrError::UnknownFunction(name.to_string()))?;
        if args.len() != f.params.len() {
            return Err(trap(format!("@{name} takes {} argument(s)", f.params.len())));
        }
        for (a, p) in args.iter().zip(&f.params) {
            if *a > p.ty.mask() {
                return Err(trap(format!("argument {a} does not fit {}", p.ty)));
            }
        }
        if self.depth >= MAX_CALL_DEPTH {
            return Err(trap("call depth exceeded"));
        }
        self.depth += 1;
        let out = self.run(name, args);
        self.depth -= 1;
        out
    }

    fn run(&mut self, name: &str, args: &[u64]) -> Result<u64> {
        let f = self.module.function(name).expect("checked by caller");
        let mut env: HashMap<&str, Value> = f
            .params
            .iter()
            .zip(args)
            .map(|(p, &a)| (p.name.as_str(), Value::Plain(a)))
            .collect();
        for ins in f.instrs() {
            if ins.op == Opcode::Ret {
                return plain(lookup(&env, &ins.operands[0])?, ins);
            }
            let v = self.step(ins, &env)?;
            let r = ins.result.as_deref().expect("non-ret instructions define a value");
            env.insert(r, v);
        }
        Err(trap(format!("@{name} fell off the end")))
    }

    fn step(&mut self, ins: &Instr, env: &HashMap<&str, Value>) -> Result<Value> {
        let ty = ins.ty;
        if ins.op == Opcode::Call {
            let callee = ins.callee.as_deref().unwrap_or_default();
            if let Some(intrinsic) = callee.strip_prefix("rnc.") {
                return self.intrinsic(intrinsic, ins, env);
            }
            let args = ins
                .operands
                .iter()
                .map(|o| plain(lookup(env, o)?, ins))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Value::Plain(self.call(callee, &args)?));
        }
        if ins.op == Opcode::Const {
            return Ok(Value::Plain(literal(&ins.operands[0])?));
        }
        let a = plain(lookup(env, &ins.operands[0])?, ins)?;
        let b = plain(lookup(env, &ins.operands[1])?, ins)?;
        let m = ty.mask();
        let r = match ins.op {
            Opcode::Add => a.wrapping_add(b) & m,
            Opcode::Sub => a.wrapping_sub(b) & m,
            Opcode::Mul => a.wrapping_mul(b) & m,
            Opcode::Eq => u64::from(a == b),
            Opcode::Ne => u64::from(a != b),
            Opcode::Div if b == 0 => return Err(trap("division by zero")),
            Opcode::Div => a / b,
            Opcode::Xor => a ^ b,
            Opcode::Shl if b >= u64::from(ty.bits()) => 0,
            Opcode::Shl => (a << b) & m,
            Opcode::Const | Opcode::Ret | Opcode::Call => unreachable!("handled above"),
        };
        Ok(Value::Plain(r))
    }

    fn intrinsic(&mut self, name: &str, ins: &Instr, env: &HashMap<&str, Value>) -> Result<Value> {
        let e = self
            .engine
            .as_mut()
            .ok_or_else(|| trap("intrinsic call in a module without moduli"))?;
        let enc = |o: &Operand| match lookup(env, o)? {
            Value::Enc(x) => Ok(x),
            Value::Plain(_) => Err(trap(format!("line {}: plain operand to @rnc.{name}", ins.line))),
        };
        Ok(match name {
            "encode" => match lookup(env, &ins.operands[0])? {
                Value::Plain(v) => Value::Enc(e.encode(v)?),
                Value::Enc(_) => return Err(trap("encoding an encoded value")),
            },
            "decode" => {
                let x = enc(&ins.operands[0])?;
                Value::Plain(reduce(e.decode(&x)?, e.set().range(), ins.ty))
            }
            "const" => {
                let lits = ins.operands.iter().map(literal).collect::<Result<Vec<_>>>()?;
                Value::Enc(e.set().from_components(&lits)?)
            }
            "add" | "sub" | "mul" | "eq" | "ne" => {
                let x = enc(&ins.operands[0])?;
                let y = enc(&ins.operands[1])?;
                match name {
                    "add" => Value::Enc(e.add_enc(&x, &y)?),
                    "sub" => Value::Enc(e.sub_enc(&x, &y)?),
                    "mul" => Value::Enc(e.mul_enc(&x, &y)?),
                    "eq" => Value::Plain(u64::from(e.eq_enc(&x, &y)?)),
                    _ => Value::Plain(u64::from(e.neq_enc(&x, &y)?)),
                }
            }
            _ => return Err(IrError::UnknownFunction(format!("rnc.{name}"))),
        })
    }
}

fn lookup(env: &HashMap<&str, Value>, o: &Operand) -> Result<Value> {
    match o {
        Operand::Value(n) => env
            .get(n.as_str())
            .cloned()
            .ok_or_else(|| trap(format!("%{n} is undefined"))),
        Operand::Literal(v) => Ok(Value::Plain(*v)),
    }
}

fn literal(o: &Operand) -> Result<u64> {
    match o {
        Operand::Literal(v) => Ok(*v),
        Operand::Value(n) => Err(trap(format!("%{n} where a literal is expected"))),
    }
}

fn plain(v: Value, ins: &Instr) -> Result<u64> {
    match v {
        Value::Plain(p) => Ok(p),
        Value::Enc(_) => Err(trap(format!(
            "line {}: encoded operand reaches `{}`",
            ins.line,
            ins.op.mnemonic()
        ))),
    }
}

/// Maps a decoded residue class back to a `ty` value: values in the upper
/// half of `[0, M)` stand for negatives.
pub fn reduce(v: u64, range: u64, ty: Ty) -> u64 {
    let m = ty.mask();
    if v <= m {
        v
    } else if u128::from(v) * 2 >= u128::from(range) {
        ((i128::from(v) - i128::from(range)) as u64) & m
    } else {
        v & m
    }
}

/// Runs `function` of `module` with a fixed runtime seed.
pub fn interpret(module: &IrModule, function: &str, args: &[u64]) -> Result<u64> {
    Interpreter::new(module, 0)?.call(function, args)
}
