//! Residue number coding: moduli sets, encoding, decoding and random-multiple
//! shifting.
//!
//! A value `v` in `[0, M)` is represented by its residues `v mod m_i` over a set
//! of pairwise-coprime moduli whose product is the dynamic range `M`. Each
//! residue may additionally carry a random multiple of its modulus, which
//! changes how the component looks in a register without changing the value
//! it denotes.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use smallvec::SmallVec;
use zeroize::Zeroize;

use crate::error::{Result, RncError};

/// Residue multipliers for random-multiple shifting are drawn from `[0, 2^16)`.
pub const SHIFT_BITS: u32 = 16;
pub const SHIFT_BOUND: u64 = 1 << SHIFT_BITS;

/// Largest admissible modulus. Keeps canonical products and shifted
/// components inside a `u64`.
pub const MAX_MODULUS: u64 = u32::MAX as u64;

pub(crate) type Components = SmallVec<[u64; 4]>;

/// Identity token of a [`ModuliSet`], derived from the moduli themselves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetId(u64);

impl SetId {
    fn of(moduli: &[u64]) -> Self {
        // FNV-1a over the little-endian moduli.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for m in moduli {
            for b in m.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        SetId(h)
    }
}

/// CRT reconstruction constants for one modulus: `M_i = M / m_i` and
/// `alpha_i = M_i^-1 mod m_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrtWeight {
    pub partial_range: u64,
    pub inverse: u64,
}

/// Validated set of pairwise-coprime moduli with precomputed conversion
/// constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuliSet {
    id: SetId,
    moduli: Vec<u64>,
    range: u64,
    weights: Vec<CrtWeight>,
    // mrc_inverses[i][j] = m_j^-1 mod m_i for j < i
    mrc_inverses: Vec<Vec<u64>>,
}

impl ModuliSet {
    pub fn new(moduli: &[u64]) -> Result<Self> {
        if moduli.is_empty() {
            return Err(RncError::EmptyModuli);
        }
        for &m in moduli {
            if m < 2 {
                return Err(RncError::ModulusTooSmall(m));
            }
            if m > MAX_MODULUS {
                return Err(RncError::ModulusTooLarge(m));
            }
        }
        for (i, &a) in moduli.iter().enumerate() {
            for &b in &moduli[i + 1..] {
                if gcd(a, b) != 1 {
                    return Err(RncError::NotCoprime(a, b));
                }
            }
        }
        for pair in moduli.windows(2) {
            if pair[0] >= pair[1] {
                return Err(RncError::Unordered(pair[0], pair[1]));
            }
        }
        let range = moduli
            .iter()
            .try_fold(1u64, |acc, &m| acc.checked_mul(m))
            .ok_or(RncError::RangeTooLarge)?;

        let weights = moduli
            .iter()
            .map(|&m| {
                let partial_range = range / m;
                let inverse = mod_inverse(partial_range % m, m)
                    .expect("coprime moduli always yield a CRT inverse");
                CrtWeight {
                    partial_range,
                    inverse,
                }
            })
            .collect();
        let mrc_inverses = moduli
            .iter()
            .enumerate()
            .map(|(i, &mi)| {
                moduli[..i]
                    .iter()
                    .map(|&mj| mod_inverse(mj % mi, mi).expect("coprime moduli"))
                    .collect()
            })
            .collect();

        Ok(Self {
            id: SetId::of(moduli),
            moduli: moduli.to_vec(),
            range,
            weights,
            mrc_inverses,
        })
    }

    pub fn id(&self) -> SetId {
        self.id
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    /// Dynamic range `M`.
    pub fn range(&self) -> u64 {
        self.range
    }

    pub fn weights(&self) -> &[CrtWeight] {
        &self.weights
    }

    pub(crate) fn mrc_inverse(&self, i: usize, j: usize) -> u64 {
        self.mrc_inverses[i][j]
    }

    /// Returns an error unless `x` belongs to this set.
    pub fn check(&self, x: &EncodedValue) -> Result<()> {
        if x.set != self.id {
            return Err(RncError::ModuliMismatch);
        }
        if x.components.len() != self.moduli.len() {
            return Err(RncError::ComponentCount {
                expected: self.moduli.len(),
                got: x.components.len(),
            });
        }
        Ok(())
    }

    /// Builds an encoded value from raw components, e.g. literals emitted by
    /// a compiler pass.
    pub fn from_components(&self, components: &[u64]) -> Result<EncodedValue> {
        if components.len() != self.moduli.len() {
            return Err(RncError::ComponentCount {
                expected: self.moduli.len(),
                got: components.len(),
            });
        }
        Ok(EncodedValue {
            components: components.iter().copied().collect(),
            set: self.id,
        })
    }

    fn out_of_range(&self, value: i128) -> RncError {
        RncError::OutOfRange {
            value,
            low: 0,
            high: i128::from(self.range),
        }
    }

    /// Plain residues `v mod m_i` with no shift applied.
    pub fn encode_canonical(&self, v: u64) -> Result<EncodedValue> {
        if v >= self.range {
            return Err(self.out_of_range(i128::from(v)));
        }
        Ok(EncodedValue {
            components: self.moduli.iter().map(|&m| v % m).collect(),
            set: self.id,
        })
    }

    /// Encodes `v` and masks every residue with a random multiple of its
    /// modulus.
    pub fn encode<R: Rng + ?Sized>(&self, v: u64, rng: &mut R) -> Result<EncodedValue> {
        let x = self.encode_canonical(v)?;
        Ok(self.add_random_shift(&x, rng))
    }

    /// Signed encoding: a negative `v` is stored as `M - |v|`, so values in
    /// `[-floor(M/2), ceil(M/2))` are representable and addition and
    /// subtraction keep working modulo `M`.
    pub fn encode_signed_canonical(&self, v: i64) -> Result<EncodedValue> {
        let (low, high) = self.signed_bounds();
        let wide = i128::from(v);
        if wide < low || wide >= high {
            return Err(RncError::OutOfRange {
                value: wide,
                low,
                high,
            });
        }
        let unsigned = wide.rem_euclid(i128::from(self.range)) as u64;
        self.encode_canonical(unsigned)
    }

    pub fn encode_signed<R: Rng + ?Sized>(&self, v: i64, rng: &mut R) -> Result<EncodedValue> {
        let x = self.encode_signed_canonical(v)?;
        Ok(self.add_random_shift(&x, rng))
    }

    pub fn decode_signed(&self, x: &EncodedValue) -> Result<i64> {
        let v = self.decode(x)?;
        let (_, high) = self.signed_bounds();
        let v = i128::from(v);
        let signed = if v >= high {
            v - i128::from(self.range)
        } else {
            v
        };
        Ok(signed as i64)
    }

    /// Half-open signed interval `[-floor(M/2), ceil(M/2))`.
    pub fn signed_bounds(&self) -> (i128, i128) {
        let m = i128::from(self.range);
        (-(m / 2), m - m / 2)
    }

    /// Adds an independent random multiple `r_i * m_i`, `r_i < 2^16`, to each
    /// component.
    pub fn add_random_shift<R: Rng + ?Sized>(&self, x: &EncodedValue, rng: &mut R) -> EncodedValue {
        let components = x
            .components
            .iter()
            .zip(&self.moduli)
            .map(|(&u, &m)| (u % m) + rng.gen_range(0..SHIFT_BOUND) * m)
            .collect();
        EncodedValue {
            components,
            set: x.set,
        }
    }

    /// Shift with explicit multipliers, `u_i + r_i * m_i`.
    pub fn shift_by(&self, x: &EncodedValue, multipliers: &[u64]) -> Result<EncodedValue> {
        self.check(x)?;
        if multipliers.len() != self.moduli.len() {
            return Err(RncError::ComponentCount {
                expected: self.moduli.len(),
                got: multipliers.len(),
            });
        }
        let components = x
            .components
            .iter()
            .zip(&self.moduli)
            .zip(multipliers)
            .map(|((&u, &m), &r)| (u % m) + (r % SHIFT_BOUND) * m)
            .collect();
        Ok(EncodedValue {
            components,
            set: x.set,
        })
    }

    /// Removes random-multiple shifting. Idempotent.
    pub fn canonicalize(&self, x: &EncodedValue) -> Result<EncodedValue> {
        self.check(x)?;
        Ok(self.canonical_unchecked(x))
    }

    pub(crate) fn canonical_unchecked(&self, x: &EncodedValue) -> EncodedValue {
        EncodedValue {
            components: x
                .components
                .iter()
                .zip(&self.moduli)
                .map(|(&u, &m)| u % m)
                .collect(),
            set: x.set,
        }
    }

    /// CRT reconstruction `< sum M_i * <alpha_i u_i>_{m_i} >_M`.
    pub fn decode(&self, x: &EncodedValue) -> Result<u64> {
        self.check(x)?;
        let range = u128::from(self.range);
        let sum = x
            .components
            .iter()
            .zip(&self.moduli)
            .zip(&self.weights)
            .fold(0u128, |acc, ((&u, &m), w)| {
                let scaled = (u128::from(u % m) * u128::from(w.inverse)) % u128::from(m);
                (acc + scaled * u128::from(w.partial_range)) % range
            });
        Ok(sum as u64)
    }

    /// Two-modulus Garner reconstruction driven by the extended Euclidean
    /// algorithm. Only defined for sets of exactly two moduli; used to
    /// cross-check [`ModuliSet::decode`].
    pub fn decode_pair(&self, x: &EncodedValue) -> Result<Option<u64>> {
        self.check(x)?;
        if self.moduli.len() != 2 {
            return Ok(None);
        }
        let (m1, m2) = (self.moduli[0], self.moduli[1]);
        Ok(Some(garner_pair(x.components[0], x.components[1], m1, m2)))
    }

    /// Mixed-radix digits of the encoded value, least significant first.
    pub fn to_mixed_radix(&self, x: &EncodedValue) -> Result<MixedRadixDigits> {
        self.check(x)?;
        Ok(self.mixed_radix_unchecked(x))
    }

    pub(crate) fn mixed_radix_unchecked(&self, x: &EncodedValue) -> MixedRadixDigits {
        let mut residues: Components = x
            .components
            .iter()
            .zip(&self.moduli)
            .map(|(&u, &m)| u % m)
            .collect();
        let n = residues.len();
        let mut digits = Components::with_capacity(n);
        for i in 0..n {
            let d = residues[i];
            digits.push(d);
            for k in i + 1..n {
                let mk = self.moduli[k];
                let diff = (residues[k] + mk - d % mk) % mk;
                residues[k] = mul_mod(diff, self.mrc_inverse(k, i), mk);
            }
        }
        MixedRadixDigits { digits }
    }

    /// Overwrites the moduli and every derived constant with zeros.
    pub fn wipe(&mut self) {
        self.moduli.zeroize();
        self.range.zeroize();
        for w in &mut self.weights {
            w.partial_range.zeroize();
            w.inverse.zeroize();
        }
        for row in &mut self.mrc_inverses {
            row.zeroize();
        }
    }
}

impl fmt::Display for ModuliSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.moduli.iter().map(u64::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// A value in residue form, possibly carrying random multiples of the moduli.
///
/// The derived `PartialEq` compares representations; use
/// [`crate::RncEngine::eq_enc`] for semantic equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EncodedValue {
    pub(crate) components: Components,
    pub(crate) set: SetId,
}

impl EncodedValue {
    pub fn components(&self) -> &[u64] {
        &self.components
    }

    pub fn set_id(&self) -> SetId {
        self.set
    }

    pub fn wipe(&mut self) {
        self.components.as_mut_slice().zeroize();
    }
}

impl fmt::Display for EncodedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components.iter().map(u64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Positional digits `d_i` with weights `1, m_0, m_0*m_1, ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedRadixDigits {
    digits: Components,
}

impl MixedRadixDigits {
    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// `sum d_i * weight_i`.
    pub fn value(&self, set: &ModuliSet) -> u128 {
        let mut weight = 1u128;
        let mut total = 0u128;
        for (&d, &m) in self.digits.iter().zip(set.moduli()) {
            total += u128::from(d) * weight;
            weight *= u128::from(m);
        }
        total
    }

    /// Magnitude comparison, most significant digit first.
    pub fn compare(&self, other: &Self) -> Ordering {
        self.digits.iter().rev().cmp(other.digits.iter().rev())
    }
}

/// Extended Euclid in the recursive form: returns `(g, x, y)` with
/// `a*x + b*y = g`.
pub fn extended_gcd(a: u64, b: u64) -> (u64, i64, i64) {
    if a == 0 {
        return (b, 0, 1);
    }
    let (g, x1, y1) = extended_gcd(b % a, a);
    let q = (b / a) as i64;
    (g, y1 - q * x1, x1)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Multiplicative inverse of `a` modulo `m`, if one exists.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (g, x, _) = extended_gcd(a % m, m);
    if g != 1 {
        return None;
    }
    Some(i128::from(x).rem_euclid(i128::from(m)) as u64)
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(m)) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Garner's two-modulus reconstruction: `v1 = u1 mod m1`,
/// `v2 = (u2 - v1) * x mod m2` where `m1*x + m2*y = 1`, `v = v1 + v2*m1`.
pub fn garner_pair(u1: u64, u2: u64, m1: u64, m2: u64) -> u64 {
    let (_, x, _) = extended_gcd(m1, m2);
    let v1 = i128::from(u1 % m1);
    let mut v2 = (i128::from(u2) - v1) * i128::from(x);
    v2 = v2.rem_euclid(i128::from(m2));
    ((v1 + v2 * i128::from(m1)) % (i128::from(m1) * i128::from(m2))) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(m: &[u64]) -> ModuliSet {
        ModuliSet::new(m).unwrap()
    }

    #[test]
    fn builds_garner_example_set() {
        let s = set(&[17, 19]);
        assert_eq!(s.range(), 323);
        for (w, &m) in s.weights().iter().zip(s.moduli()) {
            assert_eq!(mul_mod(w.partial_range, w.inverse, m), 1);
        }
        assert_eq!(set(&[4, 7]).range(), 28);
    }

    #[test]
    fn rejects_bad_moduli() {
        assert_eq!(ModuliSet::new(&[12, 14, 7]), Err(RncError::NotCoprime(12, 14)));
        assert_eq!(ModuliSet::new(&[1, 7]), Err(RncError::ModulusTooSmall(1)));
        assert_eq!(ModuliSet::new(&[]), Err(RncError::EmptyModuli));
        assert_eq!(ModuliSet::new(&[19, 17]), Err(RncError::Unordered(19, 17)));
        assert_eq!(ModuliSet::new(&[7, 7]), Err(RncError::NotCoprime(7, 7)));
        assert_eq!(
            ModuliSet::new(&[1 << 33]),
            Err(RncError::ModulusTooLarge(1 << 33))
        );
        assert_eq!(
            ModuliSet::new(&[3, 4_294_967_279, 4_294_967_291]),
            Err(RncError::RangeTooLarge)
        );
    }

    #[test]
    fn extended_gcd_cases() {
        assert_eq!(extended_gcd(17, 19), (1, 9, -8));
        assert_eq!(extended_gcd(0, 7), (7, 0, 1));
        let (g, x, y) = extended_gcd(12, 14);
        assert_eq!(g, 2);
        assert_eq!(12 * x + 14 * y, 2);
        // brute-force Bezout search agrees on the gcd being reachable
        let reachable = (-20i64..=20)
            .flat_map(|x| (-20i64..=20).map(move |y| 12 * x + 14 * y))
            .filter(|&v| v > 0)
            .min();
        assert_eq!(reachable, Some(2));
    }

    #[test]
    fn encodes_without_shift() {
        let s = set(&[17, 19]);
        assert_eq!(s.encode_canonical(29).unwrap().components(), &[12, 10]);
        assert_eq!(s.encode_canonical(0).unwrap().components(), &[0, 0]);
        assert_eq!(set(&[4, 7]).encode_canonical(5).unwrap().components(), &[1, 5]);
        assert!(matches!(
            s.encode_canonical(323),
            Err(RncError::OutOfRange { value: 323, .. })
        ));
    }

    #[test]
    fn explicit_shift_and_canonicalize() {
        let s = set(&[17, 19]);
        let x = s.encode_canonical(29).unwrap();
        assert_eq!(s.shift_by(&x, &[0, 0]).unwrap(), x);
        let shifted = s.shift_by(&x, &[2, 3]).unwrap();
        assert_eq!(shifted.components(), &[46, 67]);
        assert_eq!(s.canonicalize(&shifted).unwrap().components(), &[12, 10]);
        assert_eq!(s.canonicalize(&x).unwrap(), x);
        let zero = s.encode_canonical(0).unwrap();
        assert_eq!(s.canonicalize(&zero).unwrap(), zero);
    }

    #[test]
    fn decodes_worked_sum() {
        let s = set(&[17, 19]);
        let x = s.from_components(&[5, 18]).unwrap();
        assert_eq!(s.decode(&x).unwrap(), 56);
        assert_eq!(s.decode(&s.encode_canonical(0).unwrap()).unwrap(), 0);
        assert_eq!(s.decode_pair(&x).unwrap(), Some(56));
    }

    #[test]
    fn decode_rejects_foreign_values() {
        let a = set(&[17, 19]);
        let b = set(&[5, 7, 11]);
        let x = b.encode_canonical(3).unwrap();
        assert_eq!(a.decode(&x), Err(RncError::ModuliMismatch));
        // identical moduli share an identity
        let a2 = set(&[17, 19]);
        assert_eq!(a2.decode(&a.encode_canonical(9).unwrap()), Ok(9));
    }

    #[test]
    fn mixed_radix_digits() {
        let s = set(&[17, 19]);
        let d = s.to_mixed_radix(&s.encode_canonical(56).unwrap()).unwrap();
        assert_eq!(d.digits(), &[5, 3]);
        let d = s.to_mixed_radix(&s.encode_canonical(29).unwrap()).unwrap();
        assert_eq!(d.digits(), &[12, 1]);
        let d = s.to_mixed_radix(&s.encode_canonical(0).unwrap()).unwrap();
        assert_eq!(d.digits(), &[0, 0]);
        let shifted = s.shift_by(&s.encode_canonical(56).unwrap(), &[7, 9]).unwrap();
        assert_eq!(s.to_mixed_radix(&shifted).unwrap().digits(), &[5, 3]);
    }

    #[test]
    fn signed_round_trip() {
        let s = set(&[17, 19]);
        let neg = s.encode_signed_canonical(-1).unwrap();
        assert_eq!(s.decode(&neg).unwrap(), 322);
        assert_eq!(s.decode_signed(&neg).unwrap(), -1);
        assert_eq!(s.encode_signed_canonical(0).unwrap(), s.encode_canonical(0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for v in -161..=161 {
            let x = s.encode_signed(v, &mut rng).unwrap();
            assert_eq!(s.decode_signed(&x).unwrap(), v);
        }
        assert!(s.encode_signed_canonical(162).is_err());
        assert!(s.encode_signed_canonical(-162).is_err());
    }

    #[test]
    fn wipe_zeroes_everything() {
        let mut s = set(&[17, 19]);
        s.wipe();
        assert!(s.moduli().iter().all(|&m| m == 0));
        assert_eq!(s.range(), 0);
        let mut x = set(&[17, 19]).encode_canonical(29).unwrap();
        x.wipe();
        assert_eq!(x.components(), &[0, 0]);
    }
}
