//! Value traces: an ordered log of every machine-visible word observed while a
//! computation runs, split into four phase segments.

use std::borrow::Cow;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Result, RncError};
use crate::rnc::EncodedValue;

/// Execution phases of a traced AES run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Segment {
    /// Initialization, plain key and plaintext storage, key encoding.
    Init = 0,
    /// Key expansion over the first `Nk` schedule words.
    KeyExpansion = 1,
    /// Generation of the remaining round-key words.
    RoundKeys = 2,
    /// Decoding of the schedule and the cipher rounds.
    Cipher = 3,
}

impl Segment {
    pub const ALL: [Segment; 4] = [
        Segment::Init,
        Segment::KeyExpansion,
        Segment::RoundKeys,
        Segment::Cipher,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(usize::from(i)).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Width {
    W8,
    W32,
    W64,
}

impl Width {
    pub fn bits(self) -> u32 {
        match self {
            Width::W8 => 8,
            Width::W32 => 32,
            Width::W64 => 64,
        }
    }

    pub fn from_bits(bits: u32) -> Option<Self> {
        match bits {
            8 => Some(Width::W8),
            32 => Some(Width::W32),
            64 => Some(Width::W64),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub step: u64,
    pub segment: Segment,
    pub width: Width,
    pub value: u64,
    pub label: Cow<'static, str>,
}

/// Recorder for [`TraceEvent`]s. A disabled log accepts every call and keeps
/// nothing, so instrumented code paths cost little when tracing is off.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceLog {
    enabled: bool,
    segment: Segment,
    boundaries: Vec<(Segment, u64)>,
    events: Vec<TraceEvent>,
    step: u64,
}

impl Default for TraceLog {
    fn default() -> Self {
        Self::disabled()
    }
}

impl TraceLog {
    pub fn new() -> Self {
        Self {
            enabled: true,
            segment: Segment::Init,
            boundaries: vec![(Segment::Init, 0)],
            events: Vec::new(),
            step: 0,
        }
    }

    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::new()
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn segment(&self) -> Segment {
        self.segment
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Segments entered so far with the step at which each began.
    pub fn boundaries(&self) -> &[(Segment, u64)] {
        &self.boundaries
    }

    /// Moves to a later segment. Each segment is entered at most once and in
    /// order. No-op on a disabled log.
    pub fn begin(&mut self, next: Segment) -> Result<()> {
        if !self.enabled {
            return Ok(());
        }
        if next <= self.segment {
            return Err(RncError::SegmentOrder {
                current: self.segment as u8,
                next: next as u8,
            });
        }
        self.segment = next;
        self.boundaries.push((next, self.step));
        Ok(())
    }

    pub fn record(&mut self, width: Width, value: u64, label: &'static str) {
        if !self.enabled {
            return;
        }
        self.push(width, value, Cow::Borrowed(label));
    }

    fn push(&mut self, width: Width, value: u64, label: Cow<'static, str>) {
        self.events.push(TraceEvent {
            step: self.step,
            segment: self.segment,
            width,
            value,
            label,
        });
        self.step += 1;
    }

    pub fn byte(&mut self, value: u8, label: &'static str) {
        self.record(Width::W8, u64::from(value), label);
    }

    pub fn word(&mut self, value: u32, label: &'static str) {
        self.record(Width::W32, u64::from(value), label);
    }

    pub fn wide(&mut self, value: u64, label: &'static str) {
        self.record(Width::W64, value, label);
    }

    /// One 64-bit event per residue component.
    pub fn encoded(&mut self, x: &EncodedValue, label: &'static str) {
        if !self.enabled {
            return;
        }
        for &c in x.components() {
            self.push(Width::W64, c, Cow::Borrowed(label));
        }
    }

    pub fn events_in(&self, segment: Segment) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(move |e| e.segment == segment)
    }

    /// Writes `step,segment,width,hex_value,label` records, preceded by a
    /// header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "step,segment,width,hex_value,label")?;
        let mut line = String::new();
        for e in &self.events {
            line.clear();
            let digits = (e.width.bits() / 4) as usize;
            let _ = write!(
                line,
                "{},{},{},{:0digits$x},{}",
                e.step,
                e.segment as u8,
                e.width.bits(),
                e.value,
                e.label,
            );
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace CSV is ASCII")
    }

    /// Parses the CSV form produced by [`TraceLog::write_csv`].
    pub fn read_csv<R: BufRead>(input: R) -> io::Result<Self> {
        let bad = |line: usize, what: &str| {
            io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {what}"))
        };
        let mut log = TraceLog::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            if line.is_empty() || (n == 0 && line.starts_with("step,")) {
                continue;
            }
            let fields: Vec<&str> = line.splitn(5, ',').collect();
            if fields.len() != 5 {
                return Err(bad(lineno, "expected 5 fields"));
            }
            let step: u64 = fields[0].parse().map_err(|_| bad(lineno, "step"))?;
            let segment = fields[1]
                .parse::<u8>()
                .ok()
                .and_then(Segment::from_index)
                .ok_or_else(|| bad(lineno, "segment"))?;
            let width = fields[2]
                .parse::<u32>()
                .ok()
                .and_then(Width::from_bits)
                .ok_or_else(|| bad(lineno, "width"))?;
            let value = u64::from_str_radix(fields[3], 16).map_err(|_| bad(lineno, "hex_value"))?;
            if segment < log.segment {
                return Err(bad(lineno, "segment ids must be non-decreasing"));
            }
            if segment > log.segment {
                log.segment = segment;
                log.boundaries.push((segment, step));
            }
            log.events.push(TraceEvent {
                step,
                segment,
                width,
                value,
                label: Cow::Owned(fields[4].to_string()),
            });
            log.step = step + 1;
        }
        Ok(log)
    }
}
