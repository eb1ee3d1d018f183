//! Closed-form cost estimates: brute-forcing unknown moduli, and exhaustive
//! logic testing for a register-triggered Trojan.

use serde::{Deserialize, Serialize};

/// Brute-force estimate `M^k * k * (ln M)^2` for recovering a value from its
/// residues without knowing the moduli.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForceCost {
    /// Total operation count; `+inf` when it exceeds `f64`.
    pub ops: f64,
    /// `log10` of the total, always finite.
    pub log10_ops: f64,
    /// Cost of one CRT solve, `k * (ln M)^2`.
    pub crt_solve: f64,
    /// Candidate moduli sets, `M^k` (`+inf` when it exceeds `f64`).
    pub candidate_sets: f64,
    pub overflow: bool,
}

pub fn brute_force_cost(max_modulus: u64, k: u32) -> BruteForceCost {
    assert!(max_modulus >= 2 && k >= 1, "need M >= 2 and k >= 1");
    let m = max_modulus as f64;
    let ln_m = m.ln();
    let crt_solve = f64::from(k) * ln_m * ln_m;
    let log10_ops = f64::from(k) * m.log10() + crt_solve.log10();
    let candidate_sets = m.powi(k as i32);
    let ops = candidate_sets * crt_solve;
    let overflow = !ops.is_finite();
    BruteForceCost {
        ops: if overflow { f64::INFINITY } else { ops },
        log10_ops,
        crt_solve,
        candidate_sets,
        overflow,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrojanModel {
    Combinational,
    Sequential,
}

/// Parameters of the exhaustive Trojan-testing estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackParams {
    /// Data register width in bits.
    pub register_bits: u32,
    /// Cycles spent encoding the secret.
    pub exec_cycles: u64,
    /// Clock rate in Hz.
    pub clock_hz: f64,
    /// Number of data registers.
    pub data_registers: u32,
    /// States of a sequential Trojan.
    pub trojan_states: u32,
}

impl Default for AttackParams {
    /// 32-bit x86 at 4 GHz, 66 encoding cycles, 8 general-purpose registers,
    /// 5-state sequential Trojan.
    fn default() -> Self {
        Self {
            register_bits: 32,
            exec_cycles: 66,
            clock_hz: 4.0e9,
            data_registers: 8,
            trojan_states: 5,
        }
    }
}

impl AttackParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.register_bits > 64 {
            return Err(format!("register width {} exceeds 64 bits", self.register_bits));
        }
        if self.exec_cycles == 0 || self.data_registers == 0 || self.trojan_states == 0 {
            return Err("cycle, register and state counts must be positive".into());
        }
        if !(self.clock_hz > 0.0 && self.clock_hz.is_finite()) {
            return Err("clock rate must be positive".into());
        }
        Ok(())
    }
}

/// Seconds to drive every `b`-bit value through each of the `N_DR` registers
/// while the encoding runs: `N_DR * 2^b * T_exec / S_cpu`, times `gamma` for
/// the sequential model.
pub fn trojan_test_time(p: &AttackParams, model: TrojanModel) -> f64 {
    // 2^b * T_exec stays exact in u128 for b <= 64
    let patterns = (1u128 << p.register_bits) * u128::from(p.exec_cycles);
    let per_register = patterns as f64 / p.clock_hz;
    let combinational = per_register * f64::from(p.data_registers);
    match model {
        TrojanModel::Combinational => combinational,
        TrojanModel::Sequential => combinational * f64::from(p.trojan_states),
    }
}

/// Published figures for the default parameters, in minutes.
pub const REPORTED_COMBINATIONAL_MIN: f64 = 9.44;
pub const REPORTED_SEQUENTIAL_MIN: f64 = 2.89;
