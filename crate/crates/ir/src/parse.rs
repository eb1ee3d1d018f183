//! Text form of the IR.
//!
//! ```text
//! ; comment
//! func @name(%a: u8, %rnc_k: u32) {
//!   %x = add u32 %rnc_k, %k2
//!   %y = call u32 @helper %x
//!   ret u32 %y
//! }
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::ast::{Instr, IrFunction, IrModule, Item, Opcode, Operand, Param, TopItem, Ty};
use crate::error::{IrError, Result};

struct Cursor<'a> {
    line: usize,
    text: &'a str,
    pos: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

impl<'a> Cursor<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        Self { line, text, pos: 0 }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn err(&self, msg: impl Into<String>) -> IrError {
        IrError::syntax(self.line, self.col(), msg)
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start_matches([' ', '\t']);
        self.pos = self.text.len() - trimmed.len();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.rest().is_empty()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn word(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        if !rest.starts_with(is_ident_start) {
            return Err(self.err("expected identifier"));
        }
        let len = rest.find(|c| !is_ident(c)).unwrap_or(rest.len());
        self.pos += len;
        Ok(&rest[..len])
    }

    fn sigil_name(&mut self, sigil: &str) -> Result<&'a str> {
        self.skip_ws();
        if !self.rest().starts_with(sigil) {
            return Err(self.err(format!("expected `{sigil}name`")));
        }
        self.pos += sigil.len();
        if !self.rest().starts_with(is_ident_start) {
            return Err(self.err("expected identifier"));
        }
        self.word()
    }

    fn ty(&mut self) -> Result<Ty> {
        self.skip_ws();
        let col = self.col();
        let w = self.word()?;
        match w {
            "u8" => Ok(Ty::U8),
            "u32" => Ok(Ty::U32),
            _ if looks_like_type(w) => Err(IrError::UnsupportedType {
                ty: w.to_string(),
                line: self.line,
            }),
            _ => Err(IrError::syntax(self.line, col, format!("expected type, found `{w}`"))),
        }
    }

    fn operand(&mut self) -> Result<Operand> {
        self.skip_ws();
        let rest = self.rest();
        if rest.starts_with('%') {
            return Ok(Operand::Value(self.sigil_name("%")?.to_string()));
        }
        let len = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected `%name` or integer literal"));
        }
        let v = rest[..len]
            .parse()
            .map_err(|_| self.err("integer literal out of range"))?;
        self.pos += len;
        Ok(Operand::Literal(v))
    }

    fn operands(&mut self) -> Result<Vec<Operand>> {
        let mut out = Vec::new();
        if self.at_end() {
            return Ok(out);
        }
        loop {
            out.push(self.operand()?);
            if !self.eat(",") {
                break;
            }
        }
        Ok(out)
    }
}

fn looks_like_type(w: &str) -> bool {
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    matches!(w, "ptr" | "void" | "bool" | "float" | "double")
        || w.strip_prefix(['u', 'i', 'f']).is_some_and(digits)
}

fn parse_instr(cur: &mut Cursor<'_>) -> Result<Instr> {
    let result = if cur.eat("ret") {
        None
    } else {
        let name = cur.sigil_name("%")?.to_string();
        cur.expect("=")?;
        Some(name)
    };
    let op = match result {
        None => Opcode::Ret,
        Some(_) => {
            cur.skip_ws();
            let col = cur.col();
            let w = cur.word()?;
            match Opcode::from_mnemonic(w) {
                Some(Opcode::Ret) | None => {
                    return Err(IrError::syntax(cur.line, col, format!("unknown opcode `{w}`")))
                }
                Some(op) => op,
            }
        }
    };
    let ty = cur.ty()?;
    let callee = if op == Opcode::Call {
        Some(cur.sigil_name("@")?.to_string())
    } else {
        None
    };
    let operands = cur.operands()?;
    if !cur.at_end() {
        return Err(cur.err("unexpected trailing input"));
    }
    Ok(Instr {
        result,
        op,
        ty,
        callee,
        operands,
        line: cur.line,
    })
}

fn parse_header(cur: &mut Cursor<'_>) -> Result<(String, Vec<Param>)> {
    cur.expect("func")?;
    let name = cur.sigil_name("@")?.to_string();
    cur.expect("(")?;
    let mut params = Vec::new();
    if !cur.eat(")") {
        loop {
            let p = cur.sigil_name("%")?.to_string();
            cur.expect(":")?;
            let ty = cur.ty()?;
            params.push(Param { name: p, ty });
            if cur.eat(")") {
                break;
            }
            cur.expect(",")?;
        }
    }
    cur.expect("{")?;
    if !cur.at_end() {
        return Err(cur.err("unexpected trailing input"));
    }
    Ok((name, params))
}

/// Parses and validates a module.
pub fn parse_ir(text: &str) -> Result<IrModule> {
    let module = parse_unchecked(text)?;
    validate(&module)?;
    Ok(module)
}

/// Parses without the def-use and type checks.
pub fn parse_unchecked(text: &str) -> Result<IrModule> {
    let mut items = Vec::new();
    let mut current: Option<IrFunction> = None;
    let mut last_line = 0;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        last_line = line;
        let trimmed = raw.trim_start_matches([' ', '\t']);
        if trimmed.trim_end().is_empty() {
            continue;
        }
        if let Some(c) = trimmed.strip_prefix(';') {
            let c = c.trim_end().to_string();
            match current.as_mut() {
                Some(f) => f.body.push(Item::Comment(c)),
                None => items.push(TopItem::Comment(c)),
            }
            continue;
        }
        let mut cur = Cursor::new(line, raw.trim_end());
        match current.as_mut() {
            None => {
                let (name, params) = parse_header(&mut cur)?;
                current = Some(IrFunction {
                    name,
                    params,
                    body: Vec::new(),
                    line,
                });
            }
            Some(f) => {
                if cur.eat("}") {
                    if !cur.at_end() {
                        return Err(cur.err("unexpected trailing input"));
                    }
                    items.push(TopItem::Func(current.take().expect("inside a function")));
                } else {
                    f.body.push(Item::Instr(parse_instr(&mut cur)?));
                }
            }
        }
    }
    if current.is_some() {
        return Err(IrError::syntax(last_line + 1, 1, "missing `}`"));
    }
    Ok(IrModule { items })
}

const INTRINSICS: [&str; 8] = ["encode", "decode", "const", "add", "sub", "mul", "eq", "ne"];

/// Checks single assignment, def-before-use and per-opcode typing.
pub fn validate(module: &IrModule) -> Result<()> {
    let mut sigs: HashMap<&str, (&IrFunction, Option<Ty>)> = HashMap::new();
    for f in module.functions() {
        if sigs.insert(&f.name, (f, f.ret_ty())).is_some() {
            return Err(IrError::Redefinition {
                name: f.name.clone(),
                line: f.line,
            });
        }
    }
    for f in module.functions() {
        validate_function(f, &sigs)?;
    }
    Ok(())
}

fn validate_function(
    f: &IrFunction,
    sigs: &HashMap<&str, (&IrFunction, Option<Ty>)>,
) -> Result<()> {
    let mut env: HashMap<&str, Ty> = HashMap::new();
    for p in &f.params {
        if env.insert(&p.name, p.ty).is_some() {
            return Err(IrError::Redefinition {
                name: p.name.clone(),
                line: f.line,
            });
        }
    }
    let instrs: Vec<&Instr> = f.instrs().collect();
    let Some(last) = instrs.last().filter(|i| i.op == Opcode::Ret) else {
        return Err(IrError::ty(f.line, format!("@{} does not end in ret", f.name)));
    };
    for ins in &instrs {
        if ins.op == Opcode::Ret && !std::ptr::eq(*ins, *last) {
            return Err(IrError::ty(ins.line, "ret must be the last instruction"));
        }
        let mut operand_tys = Vec::new();
        for op in &ins.operands {
            if let Operand::Value(name) = op {
                let ty = env.get(name.as_str()).ok_or_else(|| IrError::UseBeforeDef {
                    name: name.clone(),
                    line: ins.line,
                })?;
                operand_tys.push(*ty);
            }
        }
        check_shape(ins, &operand_tys, sigs)?;
        if let Some(r) = &ins.result {
            if env.insert(r, ins.ty).is_some() {
                return Err(IrError::Redefinition {
                    name: r.clone(),
                    line: ins.line,
                });
            }
        }
    }
    Ok(())
}

fn check_shape(
    ins: &Instr,
    operand_tys: &[Ty],
    sigs: &HashMap<&str, (&IrFunction, Option<Ty>)>,
) -> Result<()> {
    let line = ins.line;
    let literals: Vec<u64> = ins
        .operands
        .iter()
        .filter_map(|o| match o {
            Operand::Literal(v) => Some(*v),
            Operand::Value(_) => None,
        })
        .collect();
    let all_values = |n: usize| -> Result<()> {
        if !literals.is_empty() || operand_tys.len() != n {
            return Err(IrError::ty(
                line,
                format!("`{}` takes {n} value operand(s)", ins.op.mnemonic()),
            ));
        }
        if let Some(t) = operand_tys.iter().find(|&&t| t != ins.ty) {
            return Err(IrError::ty(line, format!("operand of type {t} where {} expected", ins.ty)));
        }
        Ok(())
    };
    match ins.op {
        Opcode::Const => {
            if ins.operands.len() != 1 || literals.len() != 1 {
                return Err(IrError::ty(line, "`const` takes one integer literal"));
            }
            if literals[0] > ins.ty.mask() {
                return Err(IrError::ty(line, format!("{} does not fit {}", literals[0], ins.ty)));
            }
            Ok(())
        }
        Opcode::Ret => all_values(1),
        Opcode::Call => {
            let callee = ins.callee.as_deref().unwrap_or_default();
            if let Some(name) = callee.strip_prefix("rnc.") {
                match name {
                    "const" => {
                        if literals.is_empty() || literals.len() != ins.operands.len() {
                            return Err(IrError::ty(line, "@rnc.const takes integer literals"));
                        }
                        Ok(())
                    }
                    "encode" | "decode" => all_values(1),
                    _ if INTRINSICS.contains(&name) => all_values(2),
                    _ => Err(IrError::UnknownFunction(callee.to_string())),
                }
            } else {
                let (f, ret) = sigs
                    .get(callee)
                    .ok_or_else(|| IrError::UnknownFunction(callee.to_string()))?;
                if !literals.is_empty() || operand_tys.len() != f.params.len() {
                    return Err(IrError::ty(
                        line,
                        format!("@{callee} takes {} argument(s)", f.params.len()),
                    ));
                }
                for (t, p) in operand_tys.iter().zip(&f.params) {
                    if *t != p.ty {
                        return Err(IrError::ty(line, format!("argument %{} expects {}", p.name, p.ty)));
                    }
                }
                if *ret != Some(ins.ty) {
                    return Err(IrError::ty(line, format!("@{callee} does not return {}", ins.ty)));
                }
                Ok(())
            }
        }
        _ => all_values(2),
    }
}

fn write_instr(out: &mut String, ins: &Instr) {
    out.push_str("  ");
    if let Some(r) = &ins.result {
        let _ = write!(out, "%{r} = ");
    }
    let _ = write!(out, "{} {}", ins.op.mnemonic(), ins.ty);
    if let Some(c) = &ins.callee {
        let _ = write!(out, " @{c}");
    }
    for (i, o) in ins.operands.iter().enumerate() {
        out.push_str(if i == 0 { " " } else { ", " });
        let _ = write!(out, "{o}");
    }
    out.push('\n');
}

/// Canonical text: two-space indentation, one blank line after each
/// function that is followed by another item.
pub fn print_ir(module: &IrModule) -> String {
    let mut out = String::new();
    for (i, item) in module.items.iter().enumerate() {
        match item {
            TopItem::Comment(c) => {
                let _ = writeln!(out, ";{c}");
            }
            TopItem::Func(f) => {
                let params: Vec<String> =
                    f.params.iter().map(|p| format!("%{}: {}", p.name, p.ty)).collect();
                let _ = writeln!(out, "func @{}({}) {{", f.name, params.join(", "));
                for it in &f.body {
                    match it {
                        Item::Comment(c) => {
                            let _ = writeln!(out, "  ;{c}");
                        }
                        Item::Instr(ins) => write_instr(&mut out, ins),
                    }
                }
                out.push_str("}\n");
                if i + 1 < module.items.len() {
                    out.push('\n');
                }
            }
        }
    }
    out
}

/// Every name defined in `f`, parameters included.
pub fn defined_names(f: &IrFunction) -> HashSet<&str> {
    f.params
        .iter()
        .map(|p| p.name.as_str())
        .chain(f.instrs().filter_map(|i| i.result.as_deref()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn const_with_prefix() {
        let m = parse_ir("func @f() {\n  %rnc_a = const u8 43\n  ret u8 %rnc_a\n}\n").unwrap();
        let f = m.function("f").unwrap();
        let first = f.instrs().next().unwrap();
        assert_eq!(first.op, Opcode::Const);
        assert_eq!(first.result.as_deref(), Some("rnc_a"));
        assert_eq!(first.operands, vec![Operand::Literal(43)]);
    }

    #[test]
    fn malformed_opcode_points_at_token() {
        let err = parse_ir("func @f(%a: u8) {\n  %b = frob u8 %a\n  ret u8 %b\n}\n").unwrap_err();
        assert_eq!(
            err,
            IrError::Syntax {
                line: 2,
                col: 8,
                msg: "unknown opcode `frob`".into()
            }
        );
    }

    #[test]
    fn def_use_errors() {
        let e = parse_ir("func @f(%a: u8) {\n  %b = add u8 %a, %c\n  ret u8 %b\n}\n").unwrap_err();
        assert!(matches!(e, IrError::UseBeforeDef { ref name, line: 2 } if name == "c"));
        let e = parse_ir("func @f(%a: u8) {\n  %a = add u8 %a, %a\n  ret u8 %a\n}\n").unwrap_err();
        assert!(matches!(e, IrError::Redefinition { line: 2, .. }));
    }

    #[test]
    fn type_errors() {
        let e = parse_ir("func @f(%a: f32) {\n  ret f32 %a\n}\n").unwrap_err();
        assert!(matches!(e, IrError::UnsupportedType { ref ty, line: 1 } if ty == "f32"));
        let e = parse_ir("func @f(%a: u8, %b: u32) {\n  %c = add u8 %a, %b\n  ret u8 %c\n}\n")
            .unwrap_err();
        assert!(matches!(e, IrError::Type { line: 2, .. }));
        let e = parse_ir("func @f() {\n  %c = const u8 256\n  ret u8 %c\n}\n").unwrap_err();
        assert!(matches!(e, IrError::Type { .. }));
        let e = parse_ir("func @f(%a: u8) {\n  %c = call u8 @g %a\n  ret u8 %c\n}\n").unwrap_err();
        assert_eq!(e, IrError::UnknownFunction("g".into()));
    }

    #[test]
    fn missing_brace_and_ret() {
        assert!(matches!(parse_ir("func @f() {\n"), Err(IrError::Syntax { .. })));
        assert!(matches!(
            parse_ir("func @f(%a: u8) {\n  %b = add u8 %a, %a\n}\n"),
            Err(IrError::Type { .. })
        ));
    }

    #[test]
    fn print_is_canonical() {
        let src = "; top\nfunc @f(%a:u8,%b: u8)   {\n\n %c = add u8 %a,%b\n    ; inner\n ret u8   %c\n}\nfunc @g() {\n  %k = call u8 @rnc.const 1, 2\n  %x = call u8 @rnc.decode %k\n  ret u8 %x\n}\n";
        let m = parse_ir(src).unwrap();
        let printed = print_ir(&m);
        assert_eq!(
            printed,
            "; top\nfunc @f(%a: u8, %b: u8) {\n  %c = add u8 %a, %b\n  ; inner\n  ret u8 %c\n}\n\nfunc @g() {\n  %k = call u8 @rnc.const 1, 2\n  %x = call u8 @rnc.decode %k\n  ret u8 %x\n}\n"
        );
        assert_eq!(print_ir(&parse_ir(&printed).unwrap()), printed);
    }

    #[test]
    fn header_fields() {
        let m = parse_ir("; rnc-transform seed=9 moduli=16,17\n").unwrap();
        assert_eq!(m.rnc_header(), Some((9, vec![16, 17])));
    }
}
