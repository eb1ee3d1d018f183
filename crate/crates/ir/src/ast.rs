use std::fmt;

/// Integer type tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ty {
    U8,
    U32,
}

impl Ty {
    pub fn bits(self) -> u32 {
        match self {
            Ty::U8 => 8,
            Ty::U32 => 32,
        }
    }

    pub fn mask(self) -> u64 {
        (1u64 << self.bits()) - 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Ty::U8 => "u8",
            Ty::U32 => "u32",
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Opcode {
    Const,
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Div,
    Xor,
    Shl,
    Ret,
    Call,
}

impl Opcode {
    pub const ALL: [Opcode; 11] = [
        Opcode::Const,
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::Eq,
        Opcode::Ne,
        Opcode::Div,
        Opcode::Xor,
        Opcode::Shl,
        Opcode::Ret,
        Opcode::Call,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Const => "const",
            Opcode::Add => "add",
            Opcode::Sub => "sub",
            Opcode::Mul => "mul",
            Opcode::Eq => "eq",
            Opcode::Ne => "ne",
            Opcode::Div => "div",
            Opcode::Xor => "xor",
            Opcode::Shl => "shl",
            Opcode::Ret => "ret",
            Opcode::Call => "call",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.mnemonic() == s)
    }

    pub fn is_binary(self) -> bool {
        matches!(
            self,
            Opcode::Add
                | Opcode::Sub
                | Opcode::Mul
                | Opcode::Eq
                | Opcode::Ne
                | Opcode::Div
                | Opcode::Xor
                | Opcode::Shl
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operand {
    Value(String),
    Literal(u64),
}

impl Operand {
    pub fn value(&self) -> Option<&str> {
        match self {
            Operand::Value(n) => Some(n),
            Operand::Literal(_) => None,
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Value(n) => write!(f, "%{n}"),
            Operand::Literal(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instr {
    /// `None` only for `ret`.
    pub result: Option<String>,
    pub op: Opcode,
    pub ty: Ty,
    /// Callee name without `@`, for `call`.
    pub callee: Option<String>,
    pub operands: Vec<Operand>,
    /// 1-based source line, 0 for synthesized instructions.
    pub line: usize,
}

impl Instr {
    pub fn new(result: Option<&str>, op: Opcode, ty: Ty, operands: Vec<Operand>) -> Self {
        Self {
            result: result.map(str::to_string),
            op,
            ty,
            callee: None,
            operands,
            line: 0,
        }
    }

    pub fn call(result: &str, ty: Ty, callee: &str, operands: Vec<Operand>) -> Self {
        Self {
            callee: Some(callee.to_string()),
            ..Self::new(Some(result), Opcode::Call, ty, operands)
        }
    }

    pub fn uses(&self) -> impl Iterator<Item = &str> {
        self.operands.iter().filter_map(Operand::value)
    }

    pub fn intrinsic(&self) -> Option<&str> {
        self.callee.as_deref().and_then(|c| c.strip_prefix("rnc."))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Instr(Instr),
    Comment(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: Ty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrFunction {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Item>,
    pub line: usize,
}

impl IrFunction {
    pub fn instrs(&self) -> impl Iterator<Item = &Instr> {
        self.body.iter().filter_map(|i| match i {
            Item::Instr(instr) => Some(instr),
            Item::Comment(_) => None,
        })
    }

    pub fn ret_ty(&self) -> Option<Ty> {
        self.instrs().find(|i| i.op == Opcode::Ret).map(|i| i.ty)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TopItem {
    Func(IrFunction),
    Comment(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IrModule {
    pub items: Vec<TopItem>,
}

/// Header line the protection pass prepends to its output.
pub const HEADER_PREFIX: &str = "rnc-transform";

impl IrModule {
    pub fn functions(&self) -> impl Iterator<Item = &IrFunction> {
        self.items.iter().filter_map(|i| match i {
            TopItem::Func(f) => Some(f),
            TopItem::Comment(_) => None,
        })
    }

    pub fn function(&self, name: &str) -> Option<&IrFunction> {
        self.functions().find(|f| f.name == name)
    }

    pub fn comments(&self) -> impl Iterator<Item = &str> {
        self.items.iter().filter_map(|i| match i {
            TopItem::Comment(c) => Some(c.as_str()),
            TopItem::Func(_) => None,
        })
    }

    /// Seed and moduli recorded by the protection pass, if present.
    pub fn rnc_header(&self) -> Option<(u64, Vec<u64>)> {
        let text = self.comments().find_map(|c| c.trim().strip_prefix(HEADER_PREFIX))?;
        let mut seed = None;
        let mut moduli = None;
        for field in text.split_whitespace() {
            if let Some(v) = field.strip_prefix("seed=") {
                seed = v.parse().ok();
            } else if let Some(v) = field.strip_prefix("moduli=") {
                moduli = v.split(',').map(|m| m.parse().ok()).collect::<Option<Vec<u64>>>();
            }
        }
        Some((seed?, moduli?))
    }
}
