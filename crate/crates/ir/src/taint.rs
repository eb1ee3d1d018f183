use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{IrFunction, IrModule};

/// Names marking a value as sensitive start with this.
pub const SENSITIVE_PREFIX: &str = "rnc_";

/// Sensitive value names, per function.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TaintSet {
    by_function: BTreeMap<String, BTreeSet<String>>,
}

impl TaintSet {
    pub fn contains(&self, function: &str, name: &str) -> bool {
        self.by_function
            .get(function)
            .is_some_and(|s| s.contains(name))
    }

    pub fn names(&self, function: &str) -> Option<&BTreeSet<String>> {
        self.by_function.get(function)
    }

    pub fn is_empty(&self) -> bool {
        self.by_function.values().all(BTreeSet::is_empty)
    }

    pub fn len(&self) -> usize {
        self.by_function.values().map(BTreeSet::len).sum()
    }
}

/// Least fixpoint: a value is tainted iff its name carries the prefix or any
/// operand of its defining instruction is tainted.
pub fn propagate_taint(module: &IrModule) -> TaintSet {
    let by_function = module
        .functions()
        .map(|f| (f.name.clone(), taint_function(f)))
        .collect();
    TaintSet { by_function }
}

fn taint_function(f: &IrFunction) -> BTreeSet<String> {
    let mut set: BTreeSet<String> = f
        .params
        .iter()
        .map(|p| p.name.clone())
        .chain(f.instrs().filter_map(|i| i.result.clone()))
        .filter(|n| n.starts_with(SENSITIVE_PREFIX))
        .collect();
    loop {
        let before = set.len();
        for ins in f.instrs() {
            if let Some(r) = &ins.result {
                if !set.contains(r) && ins.uses().any(|u| set.contains(u)) {
                    set.insert(r.clone());
                }
            }
        }
        if set.len() == before {
            return set;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_ir;

    #[test]
    fn one_step() {
        let m = parse_ir(
            "func @f(%rnc_a: u8, %c: u8) {\n  %b = add u8 %rnc_a, %c\n  %d = add u8 %c, %c\n  ret u8 %b\n}\n",
        )
        .unwrap();
        let t = propagate_taint(&m);
        let names: Vec<&str> = t.names("f").unwrap().iter().map(String::as_str).collect();
        assert_eq!(names, ["b", "rnc_a"]);
    }

    #[test]
    fn no_prefix_no_taint() {
        let m = parse_ir("func @f(%a: u8) {\n  %b = add u8 %a, %a\n  ret u8 %b\n}\n").unwrap();
        assert!(propagate_taint(&m).is_empty());
    }
}
