//! AES-128 encryption with an RNC-protected key expansion, plus the plain
//! reference implementation it is checked against.
//!
//! The protected path encodes the cipher key, runs the whole key schedule on
//! encoded bytes (RotWord permutes encodings, SubWord goes through an encoded
//! S-box container, every XOR is the encoded bitwise operator) and only
//! decodes the finished round keys right before the cipher rounds.

use serde::{Deserialize, Serialize};
use zeroize::Zeroize;

use crate::containers::{grid_from_table_encoded, tree_from_table_encoded, RncGrid, RncTree};
use crate::error::{Result, RncError};
use crate::ops::RncEngine;
use crate::rnc::{EncodedValue, ModuliSet};
use crate::trace::{Segment, TraceLog};

/// 32-bit words in a key.
pub const NK: usize = 4;
/// Rounds.
pub const NR: usize = 10;
pub const KEY_LEN: usize = 16;
pub const BLOCK_LEN: usize = 16;
pub const SCHEDULE_WORDS: usize = 4 * (NR + 1);
pub const SCHEDULE_LEN: usize = 4 * SCHEDULE_WORDS;

pub type Key = [u8; KEY_LEN];
pub type Block = [u8; BLOCK_LEN];
pub type Schedule = [u8; SCHEDULE_LEN];

#[rustfmt::skip]
pub const SBOX: [u8; 256] = [
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16,
];

/// Round constants; index 0 is unused.
pub const RCON: [u8; 11] = [0x8d, 0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1b, 0x36];

pub(crate) fn to_array<const N: usize>(bytes: &[u8]) -> Result<[u8; N]> {
    bytes.try_into().map_err(|_| RncError::BadLength {
        expected: N,
        got: bytes.len(),
    })
}

fn word_of(bytes: &[u8]) -> u32 {
    u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]])
}

/// Reference key schedule.
pub fn expand_key(key: &Key) -> Schedule {
    expand_key_traced(key, &mut TraceLog::disabled())
}

/// Reference key schedule, recording every word and byte it touches. The
/// first [`NK`] words land in [`Segment::KeyExpansion`], the rest in
/// [`Segment::RoundKeys`].
pub fn expand_key_traced(key: &Key, trace: &mut TraceLog) -> Schedule {
    let mut w = [0u8; SCHEDULE_LEN];
    // begin() only fails on reordering, which a fresh log never hits here
    let _ = trace.begin(Segment::KeyExpansion);
    for i in 0..NK {
        w[4 * i..4 * i + 4].copy_from_slice(&key[4 * i..4 * i + 4]);
        for &b in &w[4 * i..4 * i + 4] {
            trace.byte(b, "ks.byte");
        }
        trace.word(word_of(&w[4 * i..]), "ks.word");
    }
    let _ = trace.begin(Segment::RoundKeys);
    for i in NK..SCHEDULE_WORDS {
        let mut temp = [0u8; 4];
        temp.copy_from_slice(&w[4 * (i - 1)..4 * i]);
        trace.word(word_of(&temp), "ks.temp");
        if i % NK == 0 {
            temp.rotate_left(1);
            trace.word(word_of(&temp), "ks.rot");
            for t in &mut temp {
                trace.byte(*t, "ks.sub.in");
                *t = SBOX[usize::from(*t)];
                trace.byte(*t, "ks.sub.out");
            }
            temp[0] ^= RCON[i / NK];
            trace.word(word_of(&temp), "ks.rcon");
        }
        trace.word(word_of(&w[4 * (i - NK)..]), "ks.prev");
        for j in 0..4 {
            let prev = w[4 * (i - NK) + j];
            trace.byte(prev, "ks.byte");
            w[4 * i + j] = prev ^ temp[j];
            trace.byte(w[4 * i + j], "ks.byte");
        }
        trace.word(word_of(&w[4 * i..]), "ks.word");
    }
    w
}

fn xtime(x: u8) -> u8 {
    (x << 1) ^ (((x >> 7) & 1) * 0x1b)
}

fn add_round_key(state: &mut Block, schedule: &Schedule, round: usize, trace: &mut TraceLog) {
    let rk = &schedule[16 * round..16 * round + 16];
    for c in 0..4 {
        trace.word(word_of(&rk[4 * c..]), "ark.word");
    }
    for (s, &k) in state.iter_mut().zip(rk) {
        trace.byte(k, "ark.key");
        *s ^= k;
        trace.byte(*s, "state");
    }
}

fn sub_bytes(state: &mut Block, trace: &mut TraceLog) {
    for s in state.iter_mut() {
        *s = SBOX[usize::from(*s)];
        trace.byte(*s, "state");
    }
}

// state is column-major: byte (row r, column c) at index 4c + r
fn shift_rows(state: &mut Block) {
    let old = *state;
    for c in 0..4 {
        for r in 0..4 {
            state[4 * c + r] = old[4 * ((c + r) % 4) + r];
        }
    }
}

fn mix_columns(state: &mut Block, trace: &mut TraceLog) {
    for c in 0..4 {
        let col = [state[4 * c], state[4 * c + 1], state[4 * c + 2], state[4 * c + 3]];
        let all = col[0] ^ col[1] ^ col[2] ^ col[3];
        for r in 0..4 {
            state[4 * c + r] = col[r] ^ all ^ xtime(col[r] ^ col[(r + 1) % 4]);
            trace.byte(state[4 * c + r], "state");
        }
    }
}

/// Cipher rounds over a precomputed schedule.
pub fn encrypt_with_schedule(schedule: &Schedule, block: &Block, trace: &mut TraceLog) -> Block {
    let mut state = *block;
    add_round_key(&mut state, schedule, 0, trace);
    for round in 1..NR {
        sub_bytes(&mut state, trace);
        shift_rows(&mut state);
        mix_columns(&mut state, trace);
        add_round_key(&mut state, schedule, round, trace);
    }
    sub_bytes(&mut state, trace);
    shift_rows(&mut state);
    add_round_key(&mut state, schedule, NR, trace);
    state
}

/// Unprotected AES-128 single-block encryption.
pub fn aes128_encrypt_baseline(key: &[u8], block: &[u8]) -> Result<Block> {
    let key: Key = to_array(key)?;
    let block: Block = to_array(block)?;
    Ok(encrypt_with_schedule(
        &expand_key(&key),
        &block,
        &mut TraceLog::disabled(),
    ))
}

/// Baseline run that records into `trace` across all four segments.
pub fn baseline_traced(key: &Key, block: &Block, trace: &mut TraceLog) -> Block {
    for &b in key {
        trace.byte(b, "key.load");
    }
    for &b in block {
        trace.byte(b, "block.load");
    }
    let schedule = expand_key_traced(key, trace);
    let _ = trace.begin(Segment::Cipher);
    encrypt_with_schedule(&schedule, block, trace)
}

/// How SubWord looks up the S-box without decoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SboxVariant {
    Tree,
    Grid,
}

/// S-box keyed by encoded inputs and holding encoded outputs.
#[derive(Clone, Debug)]
pub enum EncodedSbox {
    Tree(RncTree<EncodedValue>),
    Grid(RncGrid<EncodedValue>),
}

impl EncodedSbox {
    pub fn build(engine: &mut RncEngine, variant: SboxVariant) -> Result<Self> {
        Ok(match variant {
            SboxVariant::Tree => EncodedSbox::Tree(tree_from_table_encoded(engine, &SBOX)?),
            SboxVariant::Grid => EncodedSbox::Grid(grid_from_table_encoded(engine, &SBOX)?),
        })
    }

    /// S-box output for an encoded byte, freshly re-shifted.
    pub fn substitute(&self, engine: &mut RncEngine, x: &EncodedValue) -> Result<EncodedValue> {
        let hit = match self {
            EncodedSbox::Tree(t) => t.get(engine, x)?,
            EncodedSbox::Grid(g) => g.get(engine, x)?,
        };
        let out = hit
            .cloned()
            .ok_or(RncError::EncodedOutOfRange { high: 256 })?;
        engine.reshift(&out)
    }
}

/// Encoded round keys: 176 encoded bytes, 11 round keys of 16 bytes.
#[derive(Clone, Debug)]
pub struct EncodedKeySchedule {
    bytes: Vec<EncodedValue>,
}

impl EncodedKeySchedule {
    pub fn bytes(&self) -> &[EncodedValue] {
        &self.bytes
    }

    pub fn word(&self, i: usize) -> &[EncodedValue] {
        &self.bytes[4 * i..4 * i + 4]
    }

    pub fn decode(&self, engine: &mut RncEngine) -> Result<Schedule> {
        let mut out = [0u8; SCHEDULE_LEN];
        for (o, b) in out.iter_mut().zip(&self.bytes) {
            let v = engine.decode(b)?;
            *o = u8::try_from(v).map_err(|_| RncError::OutOfRange {
                value: i128::from(v),
                low: 0,
                high: 256,
            })?;
        }
        Ok(out)
    }

    pub fn wipe(&mut self) {
        for b in &mut self.bytes {
            b.wipe();
        }
    }
}

/// Setup shared by every protected key expansion: the encoded S-box and the
/// encoded round constants, both prepared ahead of time.
#[derive(Clone, Debug)]
pub struct KeyExpansionTables {
    sbox: EncodedSbox,
    rcon: Vec<EncodedValue>,
    byte_bound: EncodedValue,
}

impl KeyExpansionTables {
    pub fn new(engine: &mut RncEngine, variant: SboxVariant) -> Result<Self> {
        let range = engine.set().range();
        if range <= 255 {
            return Err(RncError::OutOfRange {
                value: 255,
                low: 0,
                high: i128::from(range),
            });
        }
        let sbox = EncodedSbox::build(engine, variant)?;
        let rcon = RCON
            .iter()
            .map(|&c| engine.encode(u64::from(c)))
            .collect::<Result<_>>()?;
        let byte_bound = engine.encode(256.min(range - 1))?;
        Ok(Self {
            sbox,
            rcon,
            byte_bound,
        })
    }

    pub fn sbox(&self) -> &EncodedSbox {
        &self.sbox
    }
}

/// Key schedule over encoded bytes. No key byte is decoded: RotWord permutes
/// encodings, SubWord is a container lookup and every XOR is
/// [`RncEngine::xor_enc`].
pub fn key_expansion_enc(
    engine: &mut RncEngine,
    tables: &KeyExpansionTables,
    key: &[EncodedValue],
) -> Result<EncodedKeySchedule> {
    if key.len() != KEY_LEN {
        return Err(RncError::BadLength {
            expected: KEY_LEN,
            got: key.len(),
        });
    }
    for b in key {
        engine.set().check(b)?;
        if engine.set().range() > 256 && !engine.less_than(b, &tables.byte_bound)? {
            return Err(RncError::EncodedOutOfRange { high: 256 });
        }
    }

    engine.trace_mut().begin(Segment::KeyExpansion)?;
    let mut w: Vec<EncodedValue> = Vec::with_capacity(SCHEDULE_LEN);
    for b in key {
        let copy = engine.reshift(b)?;
        w.push(copy);
    }

    engine.trace_mut().begin(Segment::RoundKeys)?;
    for n in NK..SCHEDULE_WORDS {
        let mut temp: Vec<EncodedValue> = w[4 * (n - 1)..4 * n].to_vec();
        if n % NK == 0 {
            temp.rotate_left(1);
            for t in &mut temp {
                *t = tables.sbox.substitute(engine, t)?;
            }
            temp[0] = engine.xor_enc(&temp[0], &tables.rcon[n / NK], 8)?;
        }
        for (j, t) in temp.iter().enumerate() {
            let prev = w[4 * (n - NK) + j].clone();
            let next = engine.xor_enc(&prev, t, 8)?;
            w.push(next);
        }
    }
    Ok(EncodedKeySchedule { bytes: w })
}

/// Result of one protected encryption.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtectedOutcome {
    pub ciphertext: Block,
    /// Full decodes performed between key encoding and the decode stage.
    pub expansion_decodes: u64,
}

/// Protected AES-128 session: an engine plus prepared key-expansion tables,
/// reusable across encryptions.
#[derive(Debug)]
pub struct ProtectedAes {
    engine: RncEngine,
    tables: KeyExpansionTables,
}

impl ProtectedAes {
    pub fn new(set: ModuliSet, seed: u64, variant: SboxVariant) -> Result<Self> {
        Self::with_engine(RncEngine::new(set, seed), variant)
    }

    /// Builds the tables with `engine`; if its trace is enabled the setup is
    /// recorded in [`Segment::Init`].
    pub fn with_engine(mut engine: RncEngine, variant: SboxVariant) -> Result<Self> {
        let tables = KeyExpansionTables::new(&mut engine, variant)?;
        Ok(Self { engine, tables })
    }

    pub fn engine(&self) -> &RncEngine {
        &self.engine
    }

    pub fn engine_mut(&mut self) -> &mut RncEngine {
        &mut self.engine
    }

    /// Encode the key, expand it homomorphically, decode the round keys and
    /// run the cipher. Plain and encoded schedules are wiped before return.
    pub fn encrypt(&mut self, key: &[u8], block: &[u8]) -> Result<ProtectedOutcome> {
        let key: Key = to_array(key)?;
        let block: Block = to_array(block)?;
        let engine = &mut self.engine;

        for &b in &key {
            engine.trace_mut().byte(b, "key.load");
        }
        for &b in &block {
            engine.trace_mut().byte(b, "block.load");
        }
        let mut encoded_key = key
            .iter()
            .map(|&b| engine.encode(u64::from(b)))
            .collect::<Result<Vec<_>>>()?;

        let decodes_before = engine.stats().decodes;
        let mut schedule = key_expansion_enc(engine, &self.tables, &encoded_key)?;
        let expansion_decodes = engine.stats().decodes - decodes_before;

        engine.trace_mut().begin(Segment::Cipher)?;
        let mut round_keys = schedule.decode(engine)?;
        for &b in round_keys.iter() {
            engine.trace_mut().byte(b, "ks.decoded");
        }
        let ciphertext = encrypt_with_schedule(&round_keys, &block, engine.trace_mut());

        round_keys.zeroize();
        schedule.wipe();
        for b in &mut encoded_key {
            b.wipe();
        }
        Ok(ProtectedOutcome {
            ciphertext,
            expansion_decodes,
        })
    }

    /// Zeroes the moduli held by the session.
    pub fn wipe(self) {
        self.engine.wipe();
    }
}

/// One-shot protected encryption with a fresh engine that is wiped
/// afterwards.
pub fn aes128_encrypt_protected(
    key: &[u8],
    block: &[u8],
    set: &ModuliSet,
    seed: u64,
    variant: SboxVariant,
) -> Result<Block> {
    let mut session = ProtectedAes::new(set.clone(), seed, variant)?;
    let out = session.encrypt(key, block)?;
    session.wipe();
    Ok(out.ciphertext)
}

/// Parses a 32-hex-digit string into 16 bytes.
pub fn parse_hex16(s: &str) -> Option<[u8; 16]> {
    let s = s.trim();
    if s.len() != 32 || !s.is_ascii() {
        return None;
    }
    let mut out = [0u8; 16];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
    }
    Some(out)
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIPS_KEY: &str = "2b7e151628aed2a6abf7158809cf4f3c";
    const FIPS_BLOCK: &str = "3243f6a8885a308d313198a2e0370734";
    const FIPS_CT: &str = "3925841d02dc09fbdc118597196a0b32";

    #[test]
    fn sbox_spot_values() {
        assert_eq!(SBOX[0x00], 0x63);
        assert_eq!(SBOX[0x53], 0xed);
        assert_eq!(SBOX[0xff], 0x16);
    }

    #[test]
    fn fips_schedule_and_cipher() {
        let key = parse_hex16(FIPS_KEY).unwrap();
        let w = expand_key(&key);
        assert_eq!(&w[..16], &key);
        assert_eq!(to_hex(&w[16..20]), "a0fafe17");
        assert_eq!(to_hex(&w[172..176]), "b6630ca6");
        let ct = aes128_encrypt_baseline(&key, &parse_hex16(FIPS_BLOCK).unwrap()).unwrap();
        assert_eq!(to_hex(&ct), FIPS_CT);
    }

    #[test]
    fn appendix_c_vector() {
        let key = parse_hex16("000102030405060708090a0b0c0d0e0f").unwrap();
        let pt = parse_hex16("00112233445566778899aabbccddeeff").unwrap();
        let ct = aes128_encrypt_baseline(&key, &pt).unwrap();
        assert_eq!(to_hex(&ct), "69c4e0d86a7b0430d8cdb78070b4c55a");
    }

    #[test]
    fn zero_key_golden() {
        let ct = aes128_encrypt_baseline(&[0; 16], &[0; 16]).unwrap();
        assert_eq!(to_hex(&ct), "66e94bd4ef8a2c3b884cfa59ca342b2e");
    }

    #[test]
    fn length_errors() {
        assert_eq!(
            aes128_encrypt_baseline(&[0; 15], &[0; 16]),
            Err(RncError::BadLength {
                expected: 16,
                got: 15
            })
        );
    }

    #[test]
    fn protected_matches_fips() {
        let set = ModuliSet::new(&[17, 19]).unwrap();
        let key = parse_hex16(FIPS_KEY).unwrap();
        let block = parse_hex16(FIPS_BLOCK).unwrap();
        for variant in [SboxVariant::Grid, SboxVariant::Tree] {
            let mut s = ProtectedAes::new(set.clone(), 5, variant).unwrap();
            let mut e = s.engine().clone();
            let tables = KeyExpansionTables::new(&mut e, variant).unwrap();
            let enc: Vec<_> = key.iter().map(|&b| e.encode(u64::from(b)).unwrap()).collect();
            let sched = key_expansion_enc(&mut e, &tables, &enc).unwrap();
            let decoded = sched.decode(&mut e).unwrap();
            assert_eq!(decoded, expand_key(&key));
            assert_eq!(to_hex(&decoded[16..20]), "a0fafe17");

            let out = s.encrypt(&key, &block).unwrap();
            assert_eq!(to_hex(&out.ciphertext), FIPS_CT);
            assert_eq!(out.expansion_decodes, 0);
        }
    }

    #[test]
    fn small_range_rejected() {
        let set = ModuliSet::new(&[4, 7]).unwrap();
        assert!(matches!(
            ProtectedAes::new(set, 1, SboxVariant::Grid),
            Err(RncError::OutOfRange { .. })
        ));
    }

    #[test]
    fn oversized_key_byte_rejected() {
        let set = ModuliSet::new(&[17, 19]).unwrap();
        let mut e = RncEngine::new(set, 2);
        let tables = KeyExpansionTables::new(&mut e, SboxVariant::Grid).unwrap();
        let mut key: Vec<_> = (0..16).map(|b| e.encode(b).unwrap()).collect();
        key[3] = e.encode(300).unwrap();
        assert_eq!(
            key_expansion_enc(&mut e, &tables, &key).unwrap_err(),
            RncError::EncodedOutOfRange { high: 256 }
        );
    }
}
