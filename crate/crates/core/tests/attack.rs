use hoacs_core::attack::{brute_force_cost, trojan_test_time, AttackParams, TrojanModel};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = AttackParams> {
    (0u32..=64, 1u64..10_000, 1.0e6f64..1.0e10, 1u32..64, 1u32..32).prop_map(|(b, t, hz, n, g)| {
        AttackParams {
            register_bits: b,
            exec_cycles: t,
            clock_hz: hz,
            data_registers: n,
            trojan_states: g,
        }
    })
}

proptest! {
    #[test]
    fn trojan_time_grows_with_each_cost_factor(p in params()) {
        let base = trojan_test_time(&p, TrojanModel::Combinational);
        prop_assert!(base > 0.0);
        if p.register_bits < 64 {
            let wider = AttackParams { register_bits: p.register_bits + 1, ..p };
            let t = trojan_test_time(&wider, TrojanModel::Combinational);
            prop_assert!((t / base - 2.0).abs() < 1e-9);
        }
        let longer = AttackParams { exec_cycles: p.exec_cycles + 1, ..p };
        prop_assert!(trojan_test_time(&longer, TrojanModel::Combinational) > base);
        let more = AttackParams { data_registers: p.data_registers + 1, ..p };
        prop_assert!(trojan_test_time(&more, TrojanModel::Combinational) > base);
        let faster = AttackParams { clock_hz: p.clock_hz * 2.0, ..p };
        prop_assert!(trojan_test_time(&faster, TrojanModel::Combinational) < base);
    }

    #[test]
    fn sequential_is_combinational_times_states(p in params()) {
        let c = trojan_test_time(&p, TrojanModel::Combinational);
        prop_assert_eq!(trojan_test_time(&p, TrojanModel::Sequential), c * f64::from(p.trojan_states));
        let single = AttackParams { trojan_states: 1, ..p };
        prop_assert_eq!(trojan_test_time(&single, TrojanModel::Sequential), c);
    }

    #[test]
    fn brute_force_is_monotone(m in 2u64..1_000_000, k in 1u32..8) {
        let c = brute_force_cost(m, k);
        prop_assert!(brute_force_cost(m + 1, k).log10_ops > c.log10_ops);
        prop_assert!(brute_force_cost(m, k + 1).log10_ops > c.log10_ops);
        if !c.overflow {
            prop_assert!((c.ops.log10() - c.log10_ops).abs() < 1e-9);
        }
    }
}
