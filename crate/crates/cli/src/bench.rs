//! Overhead microbenchmark: N plain integer ops against N encoded ops over
//! the same operand stream, repeated and averaged.

use std::collections::BTreeMap;
use std::fmt;
use std::hint::black_box;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use hoacs_core::{EncodedValue, OpConfig, RncEngine};
use hoacs_ir::{parse_ir, select_moduli, transform, Interpreter, IrModule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
}

impl BenchOp {
    pub const ALL: [BenchOp; 5] = [BenchOp::Add, BenchOp::Sub, BenchOp::Mul, BenchOp::Eq, BenchOp::Ne];

    pub fn name(self) -> &'static str {
        match self {
            BenchOp::Add => "add",
            BenchOp::Sub => "sub",
            BenchOp::Mul => "mul",
            BenchOp::Eq => "eq",
            BenchOp::Ne => "ne",
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BenchOp::Add | BenchOp::Sub | BenchOp::Mul)
    }

    /// Published overhead ratios: with randomization, without, compiler path.
    pub fn reported(self) -> [f64; 3] {
        match self {
            BenchOp::Add => [26.04, 2.57, 4.42],
            BenchOp::Sub => [26.29, 2.79, 3.97],
            BenchOp::Mul => [25.47, 2.59, 4.16],
            BenchOp::Eq => [3.31, 3.03, 5.78],
            BenchOp::Ne => [3.39, 3.26, 5.72],
        }
    }

    #[inline]
    fn plain(self, a: u32, b: u32) -> u32 {
        match self {
            BenchOp::Add => a.wrapping_add(b),
            BenchOp::Sub => a.wrapping_sub(b),
            BenchOp::Mul => a.wrapping_mul(b),
            BenchOp::Eq => u32::from(a == b),
            BenchOp::Ne => u32::from(a != b),
        }
    }
}

impl fmt::Display for BenchOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchOp {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchOp::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .with_context(|| format!("unknown op {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    WithRand,
    WithoutRand,
    IrPath,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::WithRand, Variant::WithoutRand, Variant::IrPath];

    pub fn name(self) -> &'static str {
        match self {
            Variant::WithRand => "with-rand",
            Variant::WithoutRand => "without-rand",
            Variant::IrPath => "ir-path",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .with_context(|| format!("unknown variant {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub ops: Vec<BenchOp>,
    pub counts: Vec<usize>,
    pub repetitions: usize,
    pub variants: Vec<Variant>,
    pub seed: u64,
    /// Reports go to `<output>.csv` and `<output>.json` when set.
    pub output: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            ops: BenchOp::ALL.to_vec(),
            counts: (0..=1000).step_by(100).collect(),
            repetitions: 30,
            variants: Variant::ALL.to_vec(),
            seed: 0,
            output: None,
        }
    }
}

/// Config file contents; every key optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub ops: Option<Vec<BenchOp>>,
    pub counts: Option<Vec<usize>>,
    pub repetitions: Option<usize>,
    pub variants: Option<Vec<Variant>>,
    pub randomize: Option<bool>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

fn list<T: FromStr<Err = anyhow::Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',').map(|x| x.trim().parse()).collect()
}

/// `a,b,c` or `start..=end:step`.
pub fn parse_counts(s: &str) -> Result<Vec<usize>> {
    if let Some((range, step)) = s.split_once(':') {
        let (a, b) = range
            .split_once("..=")
            .with_context(|| format!("bad count range {s:?}"))?;
        let step: usize = step.trim().parse()?;
        if step == 0 {
            bail!("count step must be positive");
        }
        return Ok((a.trim().parse()?..=b.trim().parse()?).step_by(step).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse().with_context(|| format!("bad count {x:?}")))
        .collect()
}

impl ConfigFile {
    /// JSON object or `key = value` lines (`#` comments allowed).
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return serde_json::from_str(text).context("bad JSON config");
        }
        let mut cfg = ConfigFile::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key = value", n + 1))?;
            let v = v.trim();
            match k.trim() {
                "ops" => cfg.ops = Some(list(v)?),
                "counts" => cfg.counts = Some(parse_counts(v)?),
                "repetitions" => cfg.repetitions = Some(v.parse()?),
                "variants" => cfg.variants = Some(list(v)?),
                "randomize" => cfg.randomize = Some(v.parse()?),
                "seed" => cfg.seed = Some(v.parse()?),
                "output" => cfg.output = Some(PathBuf::from(v)),
                other => bail!("line {}: unknown key {other:?}", n + 1),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn apply(self, cfg: &mut BenchConfig) {
        if let Some(v) = self.ops {
            cfg.ops = v;
        }
        if let Some(v) = self.counts {
            cfg.counts = v;
        }
        if let Some(v) = self.repetitions {
            cfg.repetitions = v;
        }
        if let Some(v) = self.variants {
            cfg.variants = v;
        }
        match self.randomize {
            Some(true) => cfg.variants.retain(|&v| v != Variant::WithoutRand),
            Some(false) => cfg.variants.retain(|&v| v != Variant::WithRand),
            None => {}
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.output {
            cfg.output = Some(v);
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            bail!("repetitions must be at least 1");
        }
        if self.ops.is_empty() || self.variants.is_empty() || self.counts.is_empty() {
            bail!("ops, variants and counts must be non-empty");
        }
        Ok(())
    }
}

/// One `(op, variant, count)` measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub op: BenchOp,
    pub variant: Variant,
    pub count: usize,
    pub mean_plain_ns: f64,
    pub mean_rnc_ns: f64,
    pub ratio: Option<f64>,
    pub median_plain_ns: f64,
    pub median_rnc_ns: f64,
    pub variance_rnc_ns2: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub repetitions: usize,
    pub rows: Vec<BenchRow>,
}

/// Mean overhead ratio per `(op, variant)` over all counts with a ratio.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub op: BenchOp,
    pub variant: Variant,
    pub mean_ratio: Option<f64>,
}

impl BenchReport {
    pub fn summary(&self) -> Vec<Summary> {
        let mut acc: BTreeMap<(BenchOp, Variant), (f64, f64, usize)> = BTreeMap::new();
        for r in &self.rows {
            let e = acc.entry((r.op, r.variant)).or_insert((0.0, 0.0, 0));
            if r.ratio.is_some() {
                e.0 += r.mean_rnc_ns;
                e.1 += r.mean_plain_ns;
                e.2 += 1;
            }
        }
        acc.into_iter()
            .map(|((op, variant), (rnc, plain, n))| Summary {
                op,
                variant,
                mean_ratio: (n > 0 && plain > 0.0).then(|| rnc / plain),
            })
            .collect()
    }

    pub fn ratio(&self, op: BenchOp, variant: Variant) -> Option<f64> {
        self.summary()
            .into_iter()
            .find(|s| s.op == op && s.variant == variant)
            .and_then(|s| s.mean_ratio)
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["op", "variant", "count", "mean_plain_ns", "mean_rnc_ns", "ratio"])?;
        for r in &self.rows {
            w.write_record([
                r.op.name().to_string(),
                r.variant.name().to_string(),
                r.count.to_string(),
                format!("{:.3}", r.mean_plain_ns),
                format!("{:.3}", r.mean_rnc_ns),
                r.ratio.map(|x| format!("{x:.4}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `<prefix>.csv` and `<prefix>.json`.
    pub fn save(&self, prefix: &Path) -> Result<(PathBuf, PathBuf)> {
        let csv_path = prefix.with_extension("csv");
        let json_path = prefix.with_extension("json");
        if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        let f = std::fs::File::create(&csv_path)
            .with_context(|| format!("writing {}", csv_path.display()))?;
        self.write_csv(f)?;
        std::fs::write(&json_path, self.to_json())
            .with_context(|| format!("writing {}", json_path.display()))?;
        Ok((csv_path, json_path))
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Operand pairs for one repetition; depends only on the seed.
pub fn operand_stream(seed: u64, op: BenchOp, count: usize, rep: usize) -> Vec<(u32, u32)> {
    let stream = (op as u64) << 48 | (count as u64) << 16 | rep as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    (0..count)
        .map(|_| {
            let a = rng.gen_range(0..1u32 << 16);
            // equal operands a fair share of the time so eq/ne see both outcomes
            let b = if rng.gen_bool(0.25) { a } else { rng.gen_range(0..1u32 << 16) };
            (a, b)
        })
        .collect()
}

fn time_plain(op: BenchOp, pairs: &[(u32, u32)]) -> f64 {
    let start = Instant::now();
    let mut acc = 0u32;
    for &(a, b) in pairs {
        acc = acc.wrapping_add(op.plain(black_box(a), black_box(b)));
    }
    black_box(acc);
    start.elapsed().as_nanos() as f64
}

fn time_engine(
    engine: &mut RncEngine,
    op: BenchOp,
    pairs: &[(EncodedValue, EncodedValue)],
) -> Result<f64> {
    let start = Instant::now();
    for (x, y) in pairs {
        match op {
            BenchOp::Add => {
                black_box(engine.add_enc(x, y)?);
            }
            BenchOp::Sub => {
                black_box(engine.sub_enc(x, y)?);
            }
            BenchOp::Mul => {
                black_box(engine.mul_enc(x, y)?);
            }
            BenchOp::Eq => {
                black_box(engine.eq_enc(x, y)?);
            }
            BenchOp::Ne => {
                black_box(engine.neq_enc(x, y)?);
            }
        }
    }
    Ok(start.elapsed().as_nanos() as f64)
}

/// One-instruction kernel per op, plain and through the protection pass.
struct IrKernel {
    plain: IrModule,
    protected: IrModule,
}

impl IrKernel {
    fn new(op: BenchOp, seed: u64) -> Result<Self> {
        let text = format!(
            "func @k(%rnc_a: u32, %b: u32) {{\n  %c = {} u32 %rnc_a, %b\n  ret u32 %c\n}}\n",
            op.name()
        );
        let plain = parse_ir(&text)?;
        let protected = transform(&plain, &select_moduli(32)?, seed)?;
        Ok(Self { plain, protected })
    }

    fn time(module: &IrModule, seed: u64, pairs: &[(u32, u32)]) -> Result<f64> {
        let mut interp = Interpreter::new(module, seed)?;
        let start = Instant::now();
        for &(a, b) in pairs {
            black_box(interp.call("k", &[u64::from(a), u64::from(b)])?);
        }
        Ok(start.elapsed().as_nanos() as f64)
    }
}

/// Runs every configured `(op, count, variant)`; each repetition times the
/// plain loop and every variant on the same operands, so the two engine
/// variants share one baseline. The IR path is compared with the interpreter
/// running the untransformed kernel. A warm-up pass per `(op, count)` is
/// discarded.
pub fn bench_run(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let set = select_moduli(32)?;
    let mut rows = Vec::new();
    for &op in &cfg.ops {
        let kernel = IrKernel::new(op, cfg.seed)?;
        let mut engines: Vec<(Variant, RncEngine)> = cfg
            .variants
            .iter()
            .filter(|&&v| v != Variant::IrPath)
            .map(|&v| {
                let config = OpConfig {
                    randomize: v == Variant::WithRand,
                    checked: false,
                };
                (v, RncEngine::new(set.clone(), cfg.seed).with_config(config))
            })
            .collect();
        for &count in &cfg.counts {
            // per variant: (baseline, protected) samples
            let mut samples: BTreeMap<Variant, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
            for rep in 0..=cfg.repetitions {
                let pairs = operand_stream(cfg.seed, op, count, rep);
                let p = time_plain(op, &pairs);
                let mut per_variant = Vec::new();
                for (v, engine) in &mut engines {
                    let encoded = pairs
                        .iter()
                        .map(|&(a, b)| Ok((engine.encode(a.into())?, engine.encode(b.into())?)))
                        .collect::<Result<Vec<_>>>()?;
                    per_variant.push((*v, p, time_engine(engine, op, &encoded)?));
                }
                if cfg.variants.contains(&Variant::IrPath) {
                    // the compiler path is measured against interpreted plain code
                    let base = IrKernel::time(&kernel.plain, cfg.seed, &pairs)?;
                    let prot = IrKernel::time(&kernel.protected, cfg.seed, &pairs)?;
                    per_variant.push((Variant::IrPath, base, prot));
                }
                if rep == 0 {
                    continue;
                }
                for (v, base, t) in per_variant {
                    let e = samples.entry(v).or_default();
                    e.0.push(base);
                    e.1.push(t);
                }
            }
            for &variant in &cfg.variants {
                let (plain_ns, rnc_ns) = &samples[&variant];
                let mean_plain = mean(plain_ns);
                let mean_rnc = mean(rnc_ns);
                let (ratio, reason) = if count == 0 {
                    (None, Some("no operations timed".to_string()))
                } else if mean_plain <= 0.0 {
                    (None, Some("plain time below timer resolution".to_string()))
                } else {
                    (Some(mean_rnc / mean_plain), None)
                };
                rows.push(BenchRow {
                    op,
                    variant,
                    count,
                    mean_plain_ns: mean_plain,
                    mean_rnc_ns: mean_rnc,
                    ratio,
                    median_plain_ns: median(plain_ns),
                    median_rnc_ns: median(rnc_ns),
                    variance_rnc_ns2: variance(rnc_ns),
                    samples: rnc_ns.len(),
                    reason,
                });
            }
        }
    }
    Ok(BenchReport {
        seed: cfg.seed,
        repetitions: cfg.repetitions,
        rows,
    })
}
