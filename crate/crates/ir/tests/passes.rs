use std::collections::{BTreeSet, HashMap, VecDeque};

use hoacs_core::rnc::gcd;
use hoacs_core::ModuliSet;
use hoacs_ir::{
    parse_ir, print_ir, propagate_taint, select_moduli, transform, transform_auto, IrError,
};
use proptest::prelude::*;

/// Exhaustive lexicographic scan over candidate pairs.
fn scan_oracle(width: u32) -> (u64, u64) {
    let start = (1u64 << (width / 2)).max(2);
    for a in start..start + 64 {
        for b in a + 1..(1u64 << width) + 2 {
            if a * b >= 1u64 << width && gcd(a, b) == 1 {
                return (a, b);
            }
        }
    }
    unreachable!()
}

#[test]
fn moduli_selection_matches_scan() {
    for width in 1..=20 {
        let set = select_moduli(width).unwrap();
        let (a, b) = scan_oracle(width);
        assert_eq!(set.moduli(), &[a, b], "width {width}");
        assert!(ModuliSet::new(set.moduli()).is_ok());
    }
    let set = select_moduli(32).unwrap();
    assert_eq!(set.moduli(), &[65536, 65537]);
    assert_eq!(set.range(), (1 << 32) + (1 << 16));
}

#[test]
fn spec_rewrites() {
    let m = parse_ir("func @f(%rnc_a: u8, %b: u8) {\n  %c = add u8 %rnc_a, %b\n  ret u8 %c\n}\n")
        .unwrap();
    let out = print_ir(&transform_auto(&m, 1).unwrap());
    assert!(out.contains("  %b_e = call u8 @rnc.encode %b\n  %c = call u8 @rnc.add %rnc_a_e, %b_e\n"));

    let m = parse_ir("func @f(%rnc_a: u8, %b: u8) {\n  %c = xor u8 %rnc_a, %b\n  ret u8 %c\n}\n")
        .unwrap();
    let out = print_ir(&transform_auto(&m, 1).unwrap());
    assert!(out.contains("  %rnc_a_d = call u8 @rnc.decode %rnc_a_e\n  %c = xor u8 %rnc_a_d, %b\n"));
}

#[test]
fn fresh_names_avoid_collisions() {
    let m = parse_ir(
        "func @f(%rnc_a: u8, %rnc_a_e: u8) {\n  %c = add u8 %rnc_a, %rnc_a_e\n  ret u8 %c\n}\n",
    )
    .unwrap();
    let out = transform_auto(&m, 1).unwrap();
    // would fail validation on a clash
    hoacs_ir::validate(&out).unwrap();
    assert!(print_ir(&out).contains("%rnc_a_e1 = call u8 @rnc.encode %rnc_a\n"));
}

#[test]
fn constant_outside_range_is_an_error() {
    let m = parse_ir("func @f() {\n  %rnc_k = const u32 70000\n  ret u32 %rnc_k\n}\n").unwrap();
    let small = ModuliSet::new(&[16, 17]).unwrap();
    assert!(matches!(transform(&m, &small, 0), Err(IrError::Rnc(_))));
}

#[test]
fn already_transformed_is_rejected() {
    let m = parse_ir("func @f(%rnc_a: u8) {\n  ret u8 %rnc_a\n}\n").unwrap();
    let once = transform_auto(&m, 1).unwrap();
    assert!(transform_auto(&once, 1).is_err());
}

/// Reachability from prefixed names over operand -> result edges.
fn reach_oracle(text: &str) -> BTreeSet<String> {
    let m = parse_ir(text).unwrap();
    let f = m.functions().next().unwrap();
    let mut edges: HashMap<String, Vec<String>> = HashMap::new();
    let mut all = Vec::new();
    for p in &f.params {
        all.push(p.name.clone());
    }
    for ins in f.instrs() {
        if let Some(r) = &ins.result {
            all.push(r.clone());
            for u in ins.uses() {
                edges.entry(u.to_string()).or_default().push(r.clone());
            }
        }
    }
    let mut seen: BTreeSet<String> = all.iter().filter(|n| n.starts_with("rnc_")).cloned().collect();
    let mut queue: VecDeque<String> = seen.iter().cloned().collect();
    while let Some(n) = queue.pop_front() {
        for next in edges.get(&n).into_iter().flatten() {
            if seen.insert(next.clone()) {
                queue.push_back(next.clone());
            }
        }
    }
    seen
}

/// Random straight-line program over `n` parameters, some marked.
fn program(marks: &[bool], picks: &[(usize, usize, u8)]) -> String {
    let mut names: Vec<String> = marks
        .iter()
        .enumerate()
        .map(|(i, &m)| if m { format!("rnc_p{i}") } else { format!("p{i}") })
        .collect();
    let params: Vec<String> = names.iter().map(|n| format!("%{n}: u8")).collect();
    let mut text = format!("func @f({}) {{\n", params.join(", "));
    for (k, &(a, b, op)) in picks.iter().enumerate() {
        let ops = ["add", "sub", "mul", "xor", "eq"];
        let r = if op >= 250 { format!("rnc_v{k}") } else { format!("v{k}") };
        let a = &names[a % names.len()];
        let b = &names[b % names.len()];
        text.push_str(&format!("  %{r} = {} u8 %{a}, %{b}\n", ops[usize::from(op) % 5]));
        names.push(r);
    }
    text.push_str(&format!("  ret u8 %{}\n}}\n", names.last().unwrap()));
    text
}

proptest! {
    #[test]
    fn taint_matches_reachability(
        marks in prop::collection::vec(any::<bool>(), 1..5),
        picks in prop::collection::vec((any::<usize>(), any::<usize>(), any::<u8>()), 1..24),
    ) {
        let text = program(&marks, &picks);
        let m = parse_ir(&text).unwrap();
        let got: BTreeSet<String> = propagate_taint(&m)
            .names("f")
            .cloned()
            .unwrap_or_default();
        prop_assert_eq!(got, reach_oracle(&text));
    }

    #[test]
    fn print_parse_fixpoint(
        marks in prop::collection::vec(any::<bool>(), 1..5),
        picks in prop::collection::vec((any::<usize>(), any::<usize>(), any::<u8>()), 1..24),
        seed: u64,
    ) {
        let m = parse_ir(&program(&marks, &picks)).unwrap();
        let printed = print_ir(&m);
        prop_assert_eq!(print_ir(&parse_ir(&printed).unwrap()), printed.clone());
        let t = print_ir(&transform_auto(&m, seed).unwrap());
        prop_assert_eq!(print_ir(&parse_ir(&t).unwrap()), t);
    }
}

#[test]
fn diamond_taint() {
    let text = "func @f(%rnc_s: u8, %p: u8) {\n  %l = add u8 %rnc_s, %p\n  %r = mul u8 %p, %p\n  %j = sub u8 %l, %r\n  %k = add u8 %r, %r\n  ret u8 %j\n}\n";
    let t = propagate_taint(&parse_ir(text).unwrap());
    let got: Vec<&str> = t.names("f").unwrap().iter().map(String::as_str).collect();
    assert_eq!(got, ["j", "l", "rnc_s"]);
    assert_eq!(reach_oracle(text), t.names("f").unwrap().clone());
}
