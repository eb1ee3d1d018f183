//! A small straight-line IR, a pass that moves `rnc_`-marked values and
//! everything derived from them into residue-coded form, and an interpreter
//! for checking that the rewrite keeps program meaning.

pub mod ast;
pub mod error;
pub mod interp;
pub mod moduli;
pub mod parse;
pub mod taint;
pub mod transform;

pub use ast::{Instr, IrFunction, IrModule, Item, Opcode, Operand, Param, TopItem, Ty};
pub use error::{IrError, Result};
pub use interp::{interpret, Interpreter, Value};
pub use moduli::select_moduli;
pub use parse::{parse_ir, print_ir, validate};
pub use taint::{propagate_taint, TaintSet, SENSITIVE_PREFIX};
pub use transform::{transform, transform_auto};
