//! The protection pass: encode sensitive parameters and constants, rewrite
//! add/sub/mul/eq/ne on sensitive operands to RNC intrinsics, and decode
//! sensitive operands right before any other use.

use std::collections::{HashMap, HashSet};

use hoacs_core::ModuliSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ast::{Instr, IrFunction, IrModule, Item, Opcode, Operand, TopItem, Ty, HEADER_PREFIX};
use crate::error::{IrError, Result};
use crate::moduli::select_moduli;
use crate::parse::defined_names;
use crate::taint::{propagate_taint, TaintSet};

/// Opcodes with a homomorphic intrinsic.
pub fn intrinsic_for(op: Opcode) -> Option<&'static str> {
    match op {
        Opcode::Add => Some("rnc.add"),
        Opcode::Sub => Some("rnc.sub"),
        Opcode::Mul => Some("rnc.mul"),
        Opcode::Eq => Some("rnc.eq"),
        Opcode::Ne => Some("rnc.ne"),
        _ => None,
    }
}

/// Rewrites `module` over `set`. Constant shifts are drawn from a generator
/// seeded with `seed`, which the output records in its header comment. A
/// module with nothing sensitive comes back unchanged.
pub fn transform(module: &IrModule, set: &ModuliSet, seed: u64) -> Result<IrModule> {
    if module.rnc_header().is_some() {
        return Err(IrError::ty(0, "module is already transformed"));
    }
    let taint = propagate_taint(module);
    if taint.is_empty() {
        return Ok(module.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let moduli: Vec<String> = set.moduli().iter().map(u64::to_string).collect();
    let mut items = vec![TopItem::Comment(format!(
        " {HEADER_PREFIX} seed={seed} moduli={}",
        moduli.join(",")
    ))];
    for item in &module.items {
        items.push(match item {
            TopItem::Comment(c) => TopItem::Comment(c.clone()),
            TopItem::Func(f) => TopItem::Func(Rewriter::new(f, &taint, set).run(&mut rng)?),
        });
    }
    Ok(IrModule { items })
}

/// [`transform`] with moduli chosen for a 32-bit dynamic range.
pub fn transform_auto(module: &IrModule, seed: u64) -> Result<IrModule> {
    transform(module, &select_moduli(32)?, seed)
}

struct Rewriter<'a> {
    f: &'a IrFunction,
    taint: &'a TaintSet,
    set: &'a ModuliSet,
    names: HashSet<String>,
    types: HashMap<String, Ty>,
    /// Values whose only usable form is encoded, and the name of the encoding.
    encoded: HashMap<String, String>,
    /// Encoded copies of plain values.
    copies: HashMap<String, String>,
    body: Vec<Item>,
}

impl<'a> Rewriter<'a> {
    fn new(f: &'a IrFunction, taint: &'a TaintSet, set: &'a ModuliSet) -> Self {
        Self {
            f,
            taint,
            set,
            names: defined_names(f).into_iter().map(str::to_string).collect(),
            types: f
                .params
                .iter()
                .map(|p| (p.name.clone(), p.ty))
                .chain(f.instrs().filter_map(|i| Some((i.result.clone()?, i.ty))))
                .collect(),
            encoded: HashMap::new(),
            copies: HashMap::new(),
            body: Vec::new(),
        }
    }

    fn tainted(&self, name: &str) -> bool {
        self.taint.contains(&self.f.name, name)
    }

    fn fresh(&mut self, base: String) -> String {
        let mut name = base.clone();
        let mut n = 1;
        while self.names.contains(&name) {
            name = format!("{base}{n}");
            n += 1;
        }
        self.names.insert(name.clone());
        name
    }

    fn emit(&mut self, ins: Instr) {
        self.body.push(Item::Instr(ins));
    }

    /// Name of an encoded form of `name`, encoding a plain value on first use.
    fn encoded_operand(&mut self, name: &str, ty: Ty) -> String {
        if let Some(e) = self.encoded.get(name).or_else(|| self.copies.get(name)) {
            return e.clone();
        }
        let e = self.fresh(format!("{name}_e"));
        self.emit(Instr::call(&e, ty, "rnc.encode", vec![Operand::Value(name.to_string())]));
        self.copies.insert(name.to_string(), e.clone());
        e
    }

    /// Operand usable by a plain opcode: encoded values get a fresh decode
    /// immediately before the use.
    fn plain_operand(&mut self, op: &Operand) -> Operand {
        match op {
            Operand::Value(name) => match self.encoded.get(name) {
                Some(e) => {
                    let e = e.clone();
                    let ty = self.types[name];
                    let d = self.fresh(format!("{name}_d"));
                    self.emit(Instr::call(&d, ty, "rnc.decode", vec![Operand::Value(e)]));
                    Operand::Value(d)
                }
                None => op.clone(),
            },
            Operand::Literal(_) => op.clone(),
        }
    }

    fn run(mut self, rng: &mut ChaCha8Rng) -> Result<IrFunction> {
        for p in &self.f.params {
            if self.tainted(&p.name) {
                let e = self.fresh(format!("{}_e", p.name));
                self.emit(Instr::call(&e, p.ty, "rnc.encode", vec![Operand::Value(p.name.clone())]));
                self.encoded.insert(p.name.clone(), e);
            }
        }
        for item in &self.f.body {
            let ins = match item {
                Item::Comment(c) => {
                    self.body.push(Item::Comment(c.clone()));
                    continue;
                }
                Item::Instr(ins) => ins,
            };
            let result = ins.result.clone().unwrap_or_default();
            let tainted = ins.result.is_some() && self.tainted(&result);
            match (ins.op, intrinsic_for(ins.op)) {
                (Opcode::Const, _) if tainted => {
                    let Some(Operand::Literal(v)) = ins.operands.first() else {
                        return Err(IrError::ty(ins.line, "`const` takes one integer literal"));
                    };
                    let canon = self.set.encode_canonical(*v)?;
                    let lits = canon
                        .components()
                        .iter()
                        .zip(self.set.moduli())
                        .map(|(&c, &m)| Operand::Literal(c + rng.gen_range(1..1u64 << 16) * m))
                        .collect();
                    self.emit(Instr::call(&result, ins.ty, "rnc.const", lits));
                    self.encoded.insert(result.clone(), result);
                }
                (op, Some(intrinsic)) if tainted => {
                    let args = ins
                        .operands
                        .iter()
                        .map(|o| match o {
                            Operand::Value(n) => Operand::Value(self.encoded_operand(n, ins.ty)),
                            Operand::Literal(_) => o.clone(),
                        })
                        .collect();
                    self.emit(Instr::call(&result, ins.ty, intrinsic, args));
                    if matches!(op, Opcode::Add | Opcode::Sub | Opcode::Mul) {
                        self.encoded.insert(result.clone(), result);
                    }
                }
                _ => {
                    let operands = ins
                        .operands
                        .iter()
                        .map(|o| self.plain_operand(o))
                        .collect();
                    let mut out = ins.clone();
                    out.operands = operands;
                    out.line = 0;
                    self.emit(out);
                }
            }
        }
        Ok(IrFunction {
            name: self.f.name.clone(),
            params: self.f.params.clone(),
            body: self.body,
            line: 0,
        })
    }
}
