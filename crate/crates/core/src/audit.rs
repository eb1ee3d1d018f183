//! Key-finder over value traces: which key bytes and round-key words show up
//! in which segment, and which byte hits are coincidences shared across
//! unrelated keys.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aes::{
    baseline_traced, expand_key, to_array, to_hex, Block, Key, ProtectedAes, Schedule,
    SboxVariant, KEY_LEN, SCHEDULE_WORDS,
};
use crate::error::{Result, RncError};
use crate::ops::RncEngine;
use crate::rnc::ModuliSet;
use crate::trace::{Segment, TraceLog, Width};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Baseline,
    ProtectedTree,
    ProtectedGrid,
}

impl RunMode {
    pub const ALL: [RunMode; 3] = [RunMode::Baseline, RunMode::ProtectedTree, RunMode::ProtectedGrid];

    pub fn name(self) -> &'static str {
        match self {
            RunMode::Baseline => "baseline",
            RunMode::ProtectedTree => "protected-tree",
            RunMode::ProtectedGrid => "protected-grid",
        }
    }

    pub fn is_protected(self) -> bool {
        self != RunMode::Baseline
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        RunMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?} (baseline, protected-tree, protected-grid)"))
    }
}

/// Encrypts one block in `mode`, recording a trace across all four segments.
/// Protected runs record table setup in segment 0.
pub fn run_traced(
    mode: RunMode,
    key: &[u8],
    block: &[u8],
    set: &ModuliSet,
    seed: u64,
) -> Result<(Block, TraceLog)> {
    let key: Key = to_array(key)?;
    let block: Block = to_array(block)?;
    let variant = match mode {
        RunMode::Baseline => {
            let mut log = TraceLog::new();
            let ct = baseline_traced(&key, &block, &mut log);
            return Ok((ct, log));
        }
        RunMode::ProtectedTree => SboxVariant::Tree,
        RunMode::ProtectedGrid => SboxVariant::Grid,
    };
    let mut engine = RncEngine::new(set.clone(), seed);
    engine.start_trace();
    let mut session = ProtectedAes::with_engine(engine, variant)?;
    let out = session.encrypt(&key, &block)?;
    let log = session.engine_mut().take_trace();
    session.wipe();
    Ok((out.ciphertext, log))
}

/// Hits for one trace segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentHits {
    pub segment: Segment,
    pub events: u64,
    /// Per key byte position: events carrying that byte's value.
    pub key_byte_hits: Vec<u64>,
    pub key_bytes_found: usize,
    pub key_bytes_pct: f64,
    /// Per schedule word: 32-bit events equal to the word.
    pub word_hits: Vec<u64>,
    pub words_found: usize,
    pub words_pct: f64,
    /// Events per byte value 0..=255, at any width.
    pub value_hits: Vec<u64>,
}

impl SegmentHits {
    pub fn total_word_hits(&self) -> u64 {
        self.word_hits.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakReport {
    pub key: String,
    pub mode: Option<RunMode>,
    pub segments: Vec<SegmentHits>,
    /// Byte values that also hit segments 1-2 of a run whose key lacks them.
    pub coincidences: Vec<u8>,
    /// Key bytes whose segment 1-2 hits are explained by a coincidence.
    pub false_positive_key_bytes: Vec<u8>,
}

impl LeakReport {
    pub fn segment(&self, s: Segment) -> &SegmentHits {
        &self.segments[s.index()]
    }

    /// 32-bit round-key-word hits in segments 1 and 2.
    pub fn expansion_word_hits(&self) -> u64 {
        self.segment(Segment::KeyExpansion).total_word_hits()
            + self.segment(Segment::RoundKeys).total_word_hits()
    }

    fn key_bytes(&self) -> Vec<u8> {
        crate::aes::parse_hex16(&self.key).map(|k| k.to_vec()).unwrap_or_default()
    }

    fn expansion_value_hit(&self, v: u8) -> bool {
        self.segment(Segment::KeyExpansion).value_hits[usize::from(v)] > 0
            || self.segment(Segment::RoundKeys).value_hits[usize::from(v)] > 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn pct(found: usize, total: usize) -> f64 {
    100.0 * found as f64 / total as f64
}

/// Exact-match search of `log`. Key bytes match events of any width whose
/// value equals the byte; round-key words match 32-bit events only.
pub fn find_keys(log: &TraceLog, key: &Key, schedule: &Schedule) -> LeakReport {
    let words: Vec<u32> = schedule
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let segments = Segment::ALL
        .iter()
        .map(|&segment| {
            let mut value_hits = vec![0u64; 256];
            let mut word_hits = vec![0u64; SCHEDULE_WORDS];
            let mut events = 0u64;
            for e in log.events_in(segment) {
                events += 1;
                if e.value < 256 {
                    value_hits[e.value as usize] += 1;
                }
                if e.width == Width::W32 {
                    for (h, &w) in word_hits.iter_mut().zip(&words) {
                        if u64::from(w) == e.value {
                            *h += 1;
                        }
                    }
                }
            }
            let key_byte_hits: Vec<u64> = key.iter().map(|&b| value_hits[usize::from(b)]).collect();
            let key_bytes_found = key_byte_hits.iter().filter(|&&h| h > 0).count();
            let words_found = word_hits.iter().filter(|&&h| h > 0).count();
            SegmentHits {
                segment,
                events,
                key_bytes_pct: pct(key_bytes_found, KEY_LEN),
                key_byte_hits,
                key_bytes_found,
                words_pct: pct(words_found, SCHEDULE_WORDS),
                word_hits,
                words_found,
                value_hits,
            }
        })
        .collect();
    LeakReport {
        key: to_hex(key),
        mode: None,
        segments,
        coincidences: Vec::new(),
        false_positive_key_bytes: Vec::new(),
    }
}

/// Runs `mode` and audits the trace against the reference schedule.
pub fn audit_run(
    mode: RunMode,
    key: &Key,
    block: &Block,
    set: &ModuliSet,
    seed: u64,
) -> Result<(Block, TraceLog, LeakReport)> {
    let (ct, log) = run_traced(mode, key, block, set, seed)?;
    let mut report = find_keys(&log, key, &expand_key(key));
    report.mode = Some(mode);
    Ok((ct, log, report))
}

/// Flags byte values that hit segments 1-2 in at least two runs, at least one
/// of which used a key not containing the value. Such hits cannot be key
/// leaks. Annotates every report in place.
pub fn cross_key_filter(reports: &mut [LeakReport]) -> Result<()> {
    let keys: Vec<Vec<u8>> = reports.iter().map(LeakReport::key_bytes).collect();
    let distinct: BTreeSet<&Vec<u8>> = keys.iter().collect();
    if reports.len() < 2 || distinct.len() < 2 {
        return Err(RncError::NeedTwoKeys);
    }
    let mut flagged = Vec::new();
    for v in 0..=255u8 {
        let hitting: Vec<usize> = (0..reports.len())
            .filter(|&i| reports[i].expansion_value_hit(v))
            .collect();
        if hitting.len() >= 2 && hitting.iter().any(|&i| !keys[i].contains(&v)) {
            flagged.push(v);
        }
    }
    for (report, key) in reports.iter_mut().zip(&keys) {
        let mut fp: Vec<u8> = flagged.iter().copied().filter(|v| key.contains(v)).collect();
        fp.dedup();
        report.coincidences = flagged.clone();
        report.false_positive_key_bytes = fp;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aes::parse_hex16;

    const KEY1: &str = "2b7eaffccbaed2a6abf7cf8b09cf4fd3";

    fn set() -> ModuliSet {
        ModuliSet::new(&[17, 19]).unwrap()
    }

    #[test]
    fn baseline_finds_everything() {
        let key = parse_hex16(KEY1).unwrap();
        let block = [0u8; 16];
        let (_, log, r) = audit_run(RunMode::Baseline, &key, &block, &set(), 1).unwrap();
        for s in Segment::ALL {
            assert!(log.events_in(s).any(|e| e.value == 0x2b), "segment {s:?}");
        }
        let seg1 = r.segment(Segment::KeyExpansion);
        let seg2 = r.segment(Segment::RoundKeys);
        for w in 0..SCHEDULE_WORDS {
            assert!(seg1.word_hits[w] + seg2.word_hits[w] > 0, "word {w}");
        }
    }

    #[test]
    fn protected_hides_words() {
        let key = parse_hex16(KEY1).unwrap();
        let block = [0x11u8; 16];
        let (ct, _, r) = audit_run(RunMode::ProtectedGrid, &key, &block, &set(), 3).unwrap();
        assert_eq!(ct, crate::aes::aes128_encrypt_baseline(&key, &block).unwrap());
        assert_eq!(r.expansion_word_hits(), 0);
        assert!(r.segment(Segment::Cipher).words_found > 0);
    }

    #[test]
    fn filter_needs_two_keys() {
        let key = parse_hex16(KEY1).unwrap();
        let r = find_keys(&TraceLog::new(), &key, &expand_key(&key));
        assert_eq!(cross_key_filter(&mut [r.clone()]), Err(RncError::NeedTwoKeys));
        assert_eq!(cross_key_filter(&mut [r.clone(), r]), Err(RncError::NeedTwoKeys));
    }

    #[test]
    fn synthetic_constant_is_flagged() {
        let keys = [[0x01u8; 16], [0x02u8; 16], [0xaau8; 16]];
        let mut reports: Vec<LeakReport> = keys
            .iter()
            .map(|k| {
                let mut log = TraceLog::new();
                log.begin(Segment::KeyExpansion).unwrap();
                log.wide(0xaa, "fixture");
                log.begin(Segment::RoundKeys).unwrap();
                log.wide(0x1234, "fixture");
                find_keys(&log, k, &expand_key(k))
            })
            .collect();
        cross_key_filter(&mut reports).unwrap();
        assert_eq!(reports[0].coincidences, vec![0xaa]);
        assert!(reports[0].false_positive_key_bytes.is_empty());
        assert_eq!(reports[2].false_positive_key_bytes, vec![0xaa]);
    }

    #[test]
    fn report_json_round_trip() {
        let key = parse_hex16(KEY1).unwrap();
        let (_, _, r) = audit_run(RunMode::Baseline, &key, &[0; 16], &set(), 0).unwrap();
        let back: LeakReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        for s in &r.segments {
            assert!((0.0..=100.0).contains(&s.key_bytes_pct));
            assert!((0.0..=100.0).contains(&s.words_pct));
        }
    }

    #[test]
    fn mode_names_parse() {
        for m in RunMode::ALL {
            assert_eq!(m.name().parse::<RunMode>().unwrap(), m);
        }
        assert!("grid".parse::<RunMode>().is_err());
    }
}
