//! Homomorphic operations on [`EncodedValue`]s.
//!
//! Arithmetic follows a three-step pattern: strip the random-multiple shift,
//! operate componentwise, then re-shift the result with fresh multiples when
//! randomization is on. Comparison, division, modulus and the bitwise
//! operators are partially homomorphic: they go through mixed-radix digits but
//! never through a full decode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeroize::Zeroize;

use crate::error::{Result, RncError};
use crate::rnc::{mod_inverse, mul_mod, pow_mod, Components, EncodedValue, ModuliSet};
use crate::trace::TraceLog;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpConfig {
    /// Re-shift every encoded result with fresh random multiples.
    pub randomize: bool,
    /// Report wraparound as [`RncError::Overflow`] / [`RncError::Underflow`].
    pub checked: bool,
}

impl Default for OpConfig {
    fn default() -> Self {
        Self {
            randomize: true,
            checked: false,
        }
    }
}

/// Instrumentation counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct OpStats {
    /// Full CRT decodes performed through the engine.
    pub decodes: u64,
    /// Mixed-radix conversions (partial decodes).
    pub mixed_radix: u64,
    /// `less_than` evaluations.
    pub comparisons: u64,
    /// `eq_enc` / `neq_enc` evaluations.
    pub equalities: u64,
    /// Every public intrinsic invocation.
    pub intrinsics: u64,
}

#[derive(Clone, Copy)]
enum Arith {
    Add,
    Sub,
    Mul,
}

/// Bitwise combination of two extracted bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitOp {
    Xor,
    Or,
}

/// Evaluation context for RNC intrinsics: the moduli set, a seedable random
/// source for shifting, counters and an optional value trace.
#[derive(Clone, Debug)]
pub struct RncEngine {
    set: ModuliSet,
    rng: ChaCha8Rng,
    config: OpConfig,
    stats: OpStats,
    trace: TraceLog,
}

impl RncEngine {
    pub fn new(set: ModuliSet, seed: u64) -> Self {
        Self::with_rng(set, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(set: ModuliSet, rng: ChaCha8Rng) -> Self {
        Self {
            set,
            rng,
            config: OpConfig::default(),
            stats: OpStats::default(),
            trace: TraceLog::disabled(),
        }
    }

    pub fn with_config(mut self, config: OpConfig) -> Self {
        self.config = config;
        self
    }

    pub fn randomized(mut self, on: bool) -> Self {
        self.config.randomize = on;
        self
    }

    pub fn checked(mut self, on: bool) -> Self {
        self.config.checked = on;
        self
    }

    pub fn config(&self) -> OpConfig {
        self.config
    }

    pub fn set_config(&mut self, config: OpConfig) {
        self.config = config;
    }

    pub fn set(&self) -> &ModuliSet {
        &self.set
    }

    pub fn stats(&self) -> OpStats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = OpStats::default();
    }

    pub fn trace(&self) -> &TraceLog {
        &self.trace
    }

    pub fn trace_mut(&mut self) -> &mut TraceLog {
        &mut self.trace
    }

    /// Starts recording into a fresh enabled trace.
    pub fn start_trace(&mut self) {
        self.trace = TraceLog::new();
    }

    pub fn take_trace(&mut self) -> TraceLog {
        std::mem::take(&mut self.trace)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Zeroes the moduli and derived constants. The engine is unusable
    /// afterwards.
    pub fn wipe(mut self) {
        self.set.wipe();
        self.stats.decodes.zeroize();
    }

    fn intrinsic(&mut self, label: &'static str, operands: &[&EncodedValue]) -> Result<()> {
        self.stats.intrinsics += 1;
        for x in operands {
            self.set.check(x)?;
            self.trace.encoded(x, label);
        }
        Ok(())
    }

    fn canonical(&mut self, x: &EncodedValue, label: &'static str) -> EncodedValue {
        let c = self.set.canonical_unchecked(x);
        self.trace.encoded(&c, label);
        c
    }

    fn finish(&mut self, x: EncodedValue, label: &'static str) -> EncodedValue {
        let out = if self.config.randomize {
            self.set.add_random_shift(&x, &mut self.rng)
        } else {
            x
        };
        self.trace.encoded(&out, label);
        out
    }

    fn bind(&self, components: Components) -> EncodedValue {
        EncodedValue {
            components,
            set: self.set.id(),
        }
    }

    /// Encodes a plain value, shifting when randomization is on.
    pub fn encode(&mut self, v: u64) -> Result<EncodedValue> {
        self.stats.intrinsics += 1;
        self.trace.wide(v, "rnc.encode");
        let x = self.set.encode_canonical(v)?;
        Ok(self.finish(x, "rnc.encode"))
    }

    pub fn encode_signed(&mut self, v: i64) -> Result<EncodedValue> {
        self.stats.intrinsics += 1;
        self.trace.wide(v as u64, "rnc.encode");
        let x = self.set.encode_signed_canonical(v)?;
        Ok(self.finish(x, "rnc.encode"))
    }

    /// Full CRT decode. Counted in [`OpStats::decodes`].
    pub fn decode(&mut self, x: &EncodedValue) -> Result<u64> {
        self.intrinsic("rnc.decode", &[x])?;
        self.stats.decodes += 1;
        let v = self.set.decode(x)?;
        self.trace.wide(v, "rnc.decode");
        Ok(v)
    }

    pub fn decode_signed(&mut self, x: &EncodedValue) -> Result<i64> {
        self.intrinsic("rnc.decode", &[x])?;
        self.stats.decodes += 1;
        let v = self.set.decode_signed(x)?;
        self.trace.wide(v as u64, "rnc.decode");
        Ok(v)
    }

    /// Fresh random multiples on an existing encoding.
    pub fn reshift(&mut self, x: &EncodedValue) -> Result<EncodedValue> {
        self.set.check(x)?;
        let out = self.set.add_random_shift(x, &mut self.rng);
        self.trace.encoded(&out, "rnc.shift");
        Ok(out)
    }

    pub fn canonicalize(&mut self, x: &EncodedValue) -> Result<EncodedValue> {
        self.intrinsic("rnc.canon", &[x])?;
        Ok(self.canonical(x, "rnc.canon"))
    }

    fn arith(&mut self, op: Arith, x: &EncodedValue, y: &EncodedValue) -> EncodedValue {
        let (label, canon) = match op {
            Arith::Add => ("rnc.add", "rnc.add.canon"),
            Arith::Sub => ("rnc.sub", "rnc.sub.canon"),
            Arith::Mul => ("rnc.mul", "rnc.mul.canon"),
        };
        let a = self.canonical(x, canon);
        let b = self.canonical(y, canon);
        let components = a
            .components
            .iter()
            .zip(&b.components)
            .zip(self.set.moduli())
            .map(|((&p, &q), &m)| match op {
                Arith::Add => (p + q) % m,
                Arith::Sub => (p + m - q) % m,
                Arith::Mul => mul_mod(p, q, m),
            })
            .collect();
        let r = self.bind(components);
        self.finish(r, label)
    }

    /// `x + y mod M`.
    pub fn add_enc(&mut self, x: &EncodedValue, y: &EncodedValue) -> Result<EncodedValue> {
        self.intrinsic("rnc.add", &[x, y])?;
        let r = self.arith(Arith::Add, x, y);
        if self.config.checked && self.lt(&r, x) {
            return Err(RncError::Overflow);
        }
        Ok(r)
    }

    /// `x - y mod M`.
    pub fn sub_enc(&mut self, x: &EncodedValue, y: &EncodedValue) -> Result<EncodedValue> {
        self.intrinsic("rnc.sub", &[x, y])?;
        if self.config.checked && self.lt(x, y) {
            return Err(RncError::Underflow);
        }
        Ok(self.arith(Arith::Sub, x, y))
    }

    /// `x * y mod M`. In checked mode, debug builds verify the product against
    /// a plain-integer oracle; release builds do not check.
    pub fn mul_enc(&mut self, x: &EncodedValue, y: &EncodedValue) -> Result<EncodedValue> {
        self.intrinsic("rnc.mul", &[x, y])?;
        #[cfg(debug_assertions)]
        if self.config.checked {
            self.stats.decodes += 2;
            let a = u128::from(self.set.decode(x)?);
            let b = u128::from(self.set.decode(y)?);
            if a * b >= u128::from(self.set.range()) {
                return Err(RncError::Overflow);
            }
        }
        Ok(self.arith(Arith::Mul, x, y))
    }

    /// `x * 2^n mod M`.
    pub fn shl_enc(&mut self, x: &EncodedValue, n: u32) -> Result<EncodedValue> {
        self.intrinsic("rnc.shl", &[x])?;
        self.trace.wide(u64::from(n), "rnc.shl");
        let a = self.canonical(x, "rnc.shl.canon");
        let components = a
            .components
            .iter()
            .zip(self.set.moduli())
            .map(|(&p, &m)| mul_mod(p, pow_mod(2, u64::from(n), m), m))
            .collect();
        let r = self.bind(components);
        Ok(self.finish(r, "rnc.shl"))
    }

    fn lt(&mut self, x: &EncodedValue, y: &EncodedValue) -> bool {
        self.stats.comparisons += 1;
        self.stats.mixed_radix += 2;
        let a = self.set.mixed_radix_unchecked(x);
        let b = self.set.mixed_radix_unchecked(y);
        for &d in a.digits().iter().chain(b.digits()) {
            self.trace.wide(d, "rnc.lt.digit");
        }
        a.compare(&b).is_lt()
    }

    /// `decode x < decode y`, comparing mixed-radix digits most significant
    /// first.
    pub fn less_than(&mut self, x: &EncodedValue, y: &EncodedValue) -> Result<bool> {
        self.intrinsic("rnc.lt", &[x, y])?;
        Ok(self.lt(x, y))
    }

    fn same(&mut self, x: &EncodedValue, y: &EncodedValue) -> bool {
        self.stats.equalities += 1;
        let a = self.canonical(x, "rnc.eq.canon");
        let b = self.canonical(y, "rnc.eq.canon");
        a.components == b.components
    }

    pub fn eq_enc(&mut self, x: &EncodedValue, y: &EncodedValue) -> Result<bool> {
        self.intrinsic("rnc.eq", &[x, y])?;
        Ok(self.same(x, y))
    }

    pub fn neq_enc(&mut self, x: &EncodedValue, y: &EncodedValue) -> Result<bool> {
        self.intrinsic("rnc.ne", &[x, y])?;
        Ok(!self.same(x, y))
    }

    /// Encoding of a public constant.
    fn constant(&mut self, v: u64) -> Result<EncodedValue> {
        let x = self.set.encode_canonical(v)?;
        Ok(if self.config.randomize {
            self.set.add_random_shift(&x, &mut self.rng)
        } else {
            x
        })
    }

    fn unchecked<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let checked = self.config.checked;
        self.config.checked = false;
        let out = f(self);
        self.config.checked = checked;
        out
    }

    /// Integer division by repeated subtraction, accelerated by subtracting
    /// doubled divisors `y * 2^j`. Returns `(quotient, remainder)`.
    pub fn div_int(
        &mut self,
        x: &EncodedValue,
        y: &EncodedValue,
    ) -> Result<(EncodedValue, EncodedValue)> {
        self.intrinsic("rnc.div", &[x, y])?;
        let zero = self.set.encode_canonical(0)?;
        if self.same(y, &zero) {
            return Err(RncError::DivisionByZero);
        }
        let (q, r) = self.unchecked(|e| e.long_division(x, y))?;
        self.trace.encoded(&q, "rnc.div");
        self.trace.encoded(&r, "rnc.div");
        Ok((q, r))
    }

    fn long_division(
        &mut self,
        x: &EncodedValue,
        y: &EncodedValue,
    ) -> Result<(EncodedValue, EncodedValue)> {
        let mut chain = Vec::new();
        let mut multiple = y.clone();
        while !self.lt(x, &multiple) {
            let doubled = self.add_enc(&multiple, &multiple)?;
            let wrapped = self.lt(&doubled, &multiple);
            chain.push(multiple);
            if wrapped {
                break;
            }
            multiple = doubled;
        }
        let one = self.constant(1)?;
        let mut quotient = self.constant(0)?;
        let mut rem = x.clone();
        for (j, m) in chain.iter().enumerate().rev() {
            if !self.lt(&rem, m) {
                rem = self.sub_enc(&rem, m)?;
                let bit = self.shl_enc(&one, j as u32)?;
                quotient = self.add_enc(&quotient, &bit)?;
            }
        }
        Ok((quotient, rem))
    }

    /// Division by plain repeated subtraction, one divisor per step. Kept as
    /// the reference for [`RncEngine::div_int`]; runtime is linear in the
    /// quotient.
    pub fn div_int_linear(
        &mut self,
        x: &EncodedValue,
        y: &EncodedValue,
    ) -> Result<(EncodedValue, EncodedValue)> {
        self.intrinsic("rnc.div", &[x, y])?;
        let zero = self.set.encode_canonical(0)?;
        if self.same(y, &zero) {
            return Err(RncError::DivisionByZero);
        }
        self.unchecked(|e| {
            let one = e.constant(1)?;
            let mut quotient = e.constant(0)?;
            let mut rem = x.clone();
            while !e.lt(&rem, y) {
                rem = e.sub_enc(&rem, y)?;
                quotient = e.add_enc(&quotient, &one)?;
            }
            Ok((quotient, rem))
        })
    }

    /// Remainder of [`RncEngine::div_int`].
    pub fn mod_enc(&mut self, x: &EncodedValue, y: &EncodedValue) -> Result<EncodedValue> {
        self.div_int(x, y).map(|(_, r)| r)
    }

    /// Componentwise `x_i * y_i^-1 mod m_i`. Matches the integer quotient only
    /// when `y` divides `x` exactly; otherwise the result is the `v` with
    /// `v * y == x (mod M)`.
    pub fn div_exact(&mut self, x: &EncodedValue, y: &EncodedValue) -> Result<EncodedValue> {
        self.intrinsic("rnc.divexact", &[x, y])?;
        let a = self.canonical(x, "rnc.divexact.canon");
        let b = self.canonical(y, "rnc.divexact.canon");
        let mut components = Components::new();
        for ((&p, &q), &m) in a.components.iter().zip(&b.components).zip(self.set.moduli()) {
            let inv = mod_inverse(q, m).ok_or(RncError::NoModularInverse {
                residue: q,
                modulus: m,
            })?;
            components.push(mul_mod(p, inv, m));
        }
        let r = self.bind(components);
        Ok(self.finish(r, "rnc.divexact"))
    }

    /// `x^n mod M` by square-and-multiply over [`RncEngine::mul_enc`].
    pub fn pow_enc(&mut self, x: &EncodedValue, n: u32) -> Result<EncodedValue> {
        self.intrinsic("rnc.pow", &[x])?;
        self.trace.wide(u64::from(n), "rnc.pow");
        let mut acc = self.constant(1)?;
        for bit in (0..u32::BITS - n.leading_zeros()).rev() {
            acc = self.mul_enc(&acc, &acc)?;
            if (n >> bit) & 1 == 1 {
                acc = self.mul_enc(&acc, x)?;
            }
        }
        Ok(acc)
    }

    pub fn xor_enc(&mut self, x: &EncodedValue, y: &EncodedValue, width: u32) -> Result<EncodedValue> {
        self.bitwise(x, y, width, BitOp::Xor)
    }

    pub fn or_enc(&mut self, x: &EncodedValue, y: &EncodedValue, width: u32) -> Result<EncodedValue> {
        self.bitwise(x, y, width, BitOp::Or)
    }

    /// Bitwise operator over `width`-bit operands: extract bits homomorphically
    /// by dividing by descending powers of two, combine each bit pair
    /// arithmetically (`a + b - 2ab` for xor, `a + b - ab` for or), then
    /// recombine with shifts and additions.
    pub fn bitwise(
        &mut self,
        x: &EncodedValue,
        y: &EncodedValue,
        width: u32,
        op: BitOp,
    ) -> Result<EncodedValue> {
        let label = match op {
            BitOp::Xor => "rnc.xor",
            BitOp::Or => "rnc.or",
        };
        self.intrinsic(label, &[x, y])?;
        self.trace.wide(u64::from(width), label);
        let limit = 1u128.checked_shl(width).filter(|_| width < 64).ok_or(
            RncError::EncodedOutOfRange {
                high: u128::from(self.set.range()),
            },
        )?;
        let range = u128::from(self.set.range());
        if limit > range {
            return Err(RncError::EncodedOutOfRange { high: range });
        }
        let out = self.unchecked(|e| {
            if limit < range {
                let bound = e.constant(limit as u64)?;
                if !e.lt(x, &bound) || !e.lt(y, &bound) {
                    return Err(RncError::EncodedOutOfRange { high: limit });
                }
            }
            let xs = e.bits(x, width)?;
            let ys = e.bits(y, width)?;
            let mut acc = e.constant(0)?;
            for (k, (a, b)) in xs.iter().zip(&ys).enumerate() {
                let sum = e.add_enc(a, b)?;
                let mut prod = e.mul_enc(a, b)?;
                if op == BitOp::Xor {
                    prod = e.add_enc(&prod, &prod)?;
                }
                let bit = e.sub_enc(&sum, &prod)?;
                let placed = e.shl_enc(&bit, k as u32)?;
                acc = e.add_enc(&acc, &placed)?;
            }
            Ok(acc)
        })?;
        self.trace.encoded(&out, label);
        Ok(out)
    }

    /// Encoded bits of `x`, least significant first.
    fn bits(&mut self, x: &EncodedValue, width: u32) -> Result<Vec<EncodedValue>> {
        let mut bits = vec![None; width as usize];
        let mut rem = x.clone();
        for k in (0..width).rev() {
            let p = self.constant(1u64 << k)?;
            let (b, r) = self.div_int(&rem, &p)?;
            bits[k as usize] = Some(b);
            rem = r;
        }
        Ok(bits.into_iter().map(|b| b.expect("every bit assigned")).collect())
    }

    /// Draws a uniformly random plain value in `[0, bound)`.
    pub fn random_below(&mut self, bound: u64) -> u64 {
        self.rng.gen_range(0..bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(randomize: bool) -> RncEngine {
        RncEngine::new(ModuliSet::new(&[17, 19]).unwrap(), 7).randomized(randomize)
    }

    #[test]
    fn worked_addition() {
        let mut e = engine(false);
        let a = e.encode(29).unwrap();
        let b = e.encode(27).unwrap();
        assert_eq!(a.components(), &[12, 10]);
        assert_eq!(b.components(), &[10, 8]);
        let c = e.add_enc(&a, &b).unwrap();
        assert_eq!(c.components(), &[5, 18]);
        assert_eq!(e.decode(&c).unwrap(), 56);
    }

    #[test]
    fn small_examples() {
        let mut e = engine(true);
        let enc = |e: &mut RncEngine, v| e.encode(v).unwrap();
        let (x56, x27, x17) = (enc(&mut e, 56), enc(&mut e, 27), enc(&mut e, 17));
        let r = e.sub_enc(&x56, &x27).unwrap();
        assert_eq!(e.decode(&r).unwrap(), 29);
        let (x5, x7) = (enc(&mut e, 5), enc(&mut e, 7));
        let r = e.sub_enc(&x5, &x7).unwrap();
        assert_eq!(e.decode(&r).unwrap(), 321);

        let (x6, x7) = (enc(&mut e, 6), enc(&mut e, 7));
        let r = e.mul_enc(&x6, &x7).unwrap();
        assert_eq!(e.canonicalize(&r).unwrap().components(), &[8, 4]);

        let r = e.shl_enc(&x5, 2).unwrap();
        assert_eq!(e.canonicalize(&r).unwrap().components(), &[3, 1]);

        let (q, r) = e.div_int(&x56, &x17).unwrap();
        assert_eq!((e.decode(&q).unwrap(), e.decode(&r).unwrap()), (3, 5));
        let r = e.mod_enc(&x56, &x17).unwrap();
        assert_eq!(e.decode(&r).unwrap(), 5);

        let x42 = enc(&mut e, 42);
        let r = e.div_exact(&x42, &x6).unwrap();
        assert_eq!(e.decode(&r).unwrap(), 7);

        let x3 = enc(&mut e, 3);
        let r = e.pow_enc(&x3, 4).unwrap();
        assert_eq!(e.decode(&r).unwrap(), 81);
        let r = e.pow_enc(&x3, 0).unwrap();
        assert_eq!(e.decode(&r).unwrap(), 1);
    }

    #[test]
    fn less_than_via_digits() {
        let mut e = engine(true);
        let a = e.encode(29).unwrap();
        let b = e.encode(27).unwrap();
        assert!(!e.less_than(&a, &b).unwrap());
        assert!(e.less_than(&b, &a).unwrap());
        assert!(!e.less_than(&a, &a).unwrap());
    }

    #[test]
    fn inexact_division_diverges_from_integer_division() {
        let mut e = engine(false);
        let x56 = e.encode(56).unwrap();
        let x3 = e.encode(3).unwrap();
        let v = e.div_exact(&x56, &x3).unwrap();
        let v = e.decode(&v).unwrap();
        assert_eq!((3 * v) % 323, 56);
        assert_ne!(v, 18);
        let (q, _) = e.div_int(&x56, &x3).unwrap();
        assert_eq!(e.decode(&q).unwrap(), 18);
    }

    #[test]
    fn division_errors() {
        let mut e = engine(true);
        let x = e.encode(10).unwrap();
        let zero = e.encode(0).unwrap();
        assert_eq!(e.div_int(&x, &zero), Err(RncError::DivisionByZero));
        assert_eq!(e.mod_enc(&x, &zero), Err(RncError::DivisionByZero));
        let x17 = e.encode(17).unwrap();
        assert_eq!(
            e.div_exact(&x, &x17),
            Err(RncError::NoModularInverse {
                residue: 0,
                modulus: 17
            })
        );
    }

    #[test]
    fn bitwise_examples() {
        let mut e = engine(true);
        let a = e.encode(0x2b).unwrap();
        let b = e.encode(0x7e).unwrap();
        let r = e.xor_enc(&a, &b, 8).unwrap();
        assert_eq!(e.decode(&r).unwrap(), 0x55);
        let r = e.xor_enc(&a, &a, 8).unwrap();
        assert_eq!(e.decode(&r).unwrap(), 0);
        let lo = e.encode(0x0f).unwrap();
        let hi = e.encode(0xf0).unwrap();
        let r = e.or_enc(&lo, &hi, 8).unwrap();
        assert_eq!(e.decode(&r).unwrap(), 0xff);
    }

    #[test]
    fn bitwise_range_errors() {
        let mut e = engine(true);
        let a = e.encode(300).unwrap();
        let b = e.encode(1).unwrap();
        assert_eq!(
            e.xor_enc(&a, &b, 8),
            Err(RncError::EncodedOutOfRange { high: 256 })
        );
        assert!(matches!(
            e.xor_enc(&b, &b, 9),
            Err(RncError::EncodedOutOfRange { .. })
        ));
    }

    #[test]
    fn checked_mode_flags_wraparound() {
        let mut e = engine(true).checked(true);
        let big = e.encode(300).unwrap();
        let small = e.encode(30).unwrap();
        assert_eq!(e.add_enc(&big, &small), Err(RncError::Overflow));
        assert_eq!(e.sub_enc(&small, &big), Err(RncError::Underflow));
        let r = e.sub_enc(&big, &small).unwrap();
        assert_eq!(e.decode(&r).unwrap(), 270);
        #[cfg(debug_assertions)]
        assert_eq!(e.mul_enc(&big, &small), Err(RncError::Overflow));
        // composite ops stay usable in checked mode
        let (q, r) = e.div_int(&big, &small).unwrap();
        assert_eq!((e.decode(&q).unwrap(), e.decode(&r).unwrap()), (10, 0));
    }

    #[test]
    fn mismatched_sets_rejected() {
        let mut e = engine(true);
        let other = ModuliSet::new(&[5, 7, 11]).unwrap();
        let foreign = other.encode_canonical(4).unwrap();
        let x = e.encode(4).unwrap();
        assert_eq!(e.add_enc(&x, &foreign), Err(RncError::ModuliMismatch));
        assert_eq!(e.less_than(&foreign, &x), Err(RncError::ModuliMismatch));
        assert_eq!(e.eq_enc(&x, &foreign), Err(RncError::ModuliMismatch));
    }

    #[test]
    fn no_decode_inside_homomorphic_ops() {
        let mut e = engine(true);
        let a = e.encode(100).unwrap();
        let b = e.encode(7).unwrap();
        let before = e.stats().decodes;
        e.add_enc(&a, &b).unwrap();
        e.sub_enc(&a, &b).unwrap();
        e.mul_enc(&a, &b).unwrap();
        e.shl_enc(&b, 3).unwrap();
        e.pow_enc(&b, 2).unwrap();
        e.eq_enc(&a, &b).unwrap();
        e.neq_enc(&a, &b).unwrap();
        e.less_than(&a, &b).unwrap();
        e.div_int(&a, &b).unwrap();
        e.xor_enc(&a, &b, 8).unwrap();
        e.or_enc(&a, &b, 8).unwrap();
        assert_eq!(e.stats().decodes, before);
    }

    #[test]
    fn intrinsics_trace_operands_and_result() {
        let mut e = engine(true);
        let a = e.encode(29).unwrap();
        let b = e.encode(27).unwrap();
        e.start_trace();
        e.add_enc(&a, &b).unwrap();
        let log = e.take_trace();
        let result_events = log.events().iter().filter(|ev| ev.label == "rnc.add").count();
        // two operands plus the result, two components each
        assert_eq!(result_events, 6);
        assert!(log.events().iter().all(|ev| ev.width == crate::trace::Width::W64));
    }
}
