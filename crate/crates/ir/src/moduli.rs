use hoacs_core::rnc::gcd;
use hoacs_core::ModuliSet;

use crate::error::{IrError, Result};

/// First coprime pair `(a, b)`, `a < b`, with `a * b >= 2^width`, scanning `a`
/// upward from `2^(width/2)` and `b` upward from `a + 1`.
pub fn select_moduli(width: u32) -> Result<ModuliSet> {
    if width == 0 || width > 32 {
        return Err(IrError::Width(width));
    }
    let target = 1u64 << width;
    let mut a = (1u64 << (width / 2)).max(2);
    loop {
        // smallest b that reaches the target, then the first coprime one
        let mut b = (a + 1).max(target.div_ceil(a));
        while gcd(a, b) != 1 {
            b += 1;
        }
        if b <= u64::from(u32::MAX) {
            return Ok(ModuliSet::new(&[a, b])?);
        }
        a += 1;
    }
}
