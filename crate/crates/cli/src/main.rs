use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hoacs_core::aes::{expand_key, parse_hex16, to_hex};
use hoacs_core::attack::{
    brute_force_cost, trojan_test_time, AttackParams, TrojanModel, REPORTED_COMBINATIONAL_MIN,
    REPORTED_SEQUENTIAL_MIN,
};
use hoacs_core::audit::{audit_run, cross_key_filter, find_keys, run_traced, LeakReport, RunMode};
use hoacs_core::{EncodedValue, ModuliSet, OpConfig, RncEngine, Segment};
use hoacs_cli::bench::{self, BenchConfig, BenchOp, ConfigFile, Variant};
use hoacs_cli::{parse_moduli, parse_u64_list, resolve_seed, SAMPLE_KEYS};
use hoacs_ir::{parse_ir, print_ir, transform, transform_auto};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser)]
#[command(name = "hoacs", version, about = "Residue-number coding toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode an integer into residues.
    Encode(EncodeArgs),
    /// Decode residues back to an integer.
    Decode(DecodeArgs),
    /// Run every encoded operation on two operands and check it against plain arithmetic.
    OpsDemo(OpsDemoArgs),
    /// Encrypt one AES-128 block, optionally writing a trace and leak report.
    Aes(AesArgs),
    /// Trace several keys and report which key material is visible where.
    Audit(AuditArgs),
    /// Apply the protection pass to an IR file.
    Transform(TransformArgs),
    /// Cost estimates for brute force and exhaustive Trojan testing.
    AttackCalc(AttackArgs),
    /// Overhead microbenchmark.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Common {
    /// RNG seed; falls back to $HOACS_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long, allow_hyphen_values = true)]
    value: i64,
    #[arg(long, default_value = "17,19")]
    moduli: String,
    /// Canonical residues, no random multiple shift.
    #[arg(long)]
    no_shift: bool,
    /// Complement encoding for negative values.
    #[arg(long)]
    signed: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct DecodeArgs {
    /// Comma-separated residue components.
    #[arg(long)]
    components: String,
    #[arg(long, default_value = "17,19")]
    moduli: String,
    #[arg(long)]
    signed: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct OpsDemoArgs {
    #[arg(long, default_value_t = 29)]
    a: u64,
    #[arg(long, default_value_t = 27)]
    b: u64,
    #[arg(long, default_value = "251,253,255")]
    moduli: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct AesArgs {
    /// 32 hex digits.
    #[arg(long)]
    key: String,
    /// 32 hex digits.
    #[arg(long, default_value = "3243f6a8885a308d313198a2e0370734")]
    block: String,
    #[arg(long, default_value = "protected-grid")]
    mode: RunMode,
    #[arg(long, default_value = "17,19")]
    moduli: String,
    /// Directory for trace.csv, report.json and ciphertext.txt.
    #[arg(long)]
    audit: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct AuditArgs {
    /// Comma-separated hex keys; defaults to three sample keys.
    #[arg(long, value_delimiter = ',')]
    keys: Vec<String>,
    #[arg(long, default_value = "32323232323232323232323232323232")]
    block: String,
    /// Comma-separated run modes.
    #[arg(long, value_delimiter = ',', default_value = "baseline,protected-tree,protected-grid")]
    modes: Vec<RunMode>,
    #[arg(long, default_value = "17,19")]
    moduli: String,
    /// Directory for per-run traces and reports.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TransformArgs {
    /// Input IR file, `-` for stdin.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override the automatically selected moduli pair.
    #[arg(long, requires = "m2")]
    m1: Option<u64>,
    #[arg(long, requires = "m1")]
    m2: Option<u64>,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long, default_value_t = 32)]
    bits: u32,
    #[arg(long, default_value_t = 66)]
    cycles: u64,
    #[arg(long, default_value_t = 4.0e9)]
    clock_hz: f64,
    #[arg(long, default_value_t = 8)]
    registers: u32,
    /// Sequential Trojan states.
    #[arg(long, default_value_t = 5)]
    states: u32,
    /// Largest candidate modulus for the brute-force estimate.
    #[arg(long, default_value_t = 323)]
    max_modulus: u64,
    /// Number of moduli for the brute-force estimate.
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// key=value or JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    ops: Option<Vec<BenchOp>>,
    /// `a,b,c` or `start..=end:step`.
    #[arg(long)]
    counts: Option<String>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<Variant>>,
    /// Output prefix; writes PREFIX.csv and PREFIX.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::OpsDemo(a) => ops_demo(a),
        Command::Aes(a) => aes(a),
        Command::Audit(a) => audit(a),
        Command::Transform(a) => transform_cmd(a),
        Command::AttackCalc(a) => attack(a),
        Command::Bench(a) => bench_cmd(a),
    }
}

fn join(xs: &[u64]) -> String {
    xs.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn encode(a: EncodeArgs) -> Result<()> {
    let set = parse_moduli(&a.moduli)?;
    let mut rng = ChaCha8Rng::seed_from_u64(resolve_seed(a.common.seed, None)?);
    let x = match (a.signed, a.no_shift) {
        (true, true) => set.encode_signed_canonical(a.value)?,
        (true, false) => set.encode_signed(a.value, &mut rng)?,
        (false, _) if a.value < 0 => bail!("negative value needs --signed"),
        (false, true) => set.encode_canonical(a.value as u64)?,
        (false, false) => set.encode(a.value as u64, &mut rng)?,
    };
    if a.common.json {
        print_json(&json!({
            "value": a.value,
            "moduli": set.moduli(),
            "components": x.components(),
            "shifted": !a.no_shift,
        }))
    } else {
        println!("{}", join(x.components()));
        Ok(())
    }
}

fn decode(a: DecodeArgs) -> Result<()> {
    let set = parse_moduli(&a.moduli)?;
    let x = set.from_components(&parse_u64_list(&a.components)?)?;
    let value = if a.signed {
        json!(set.decode_signed(&x)?)
    } else {
        json!(set.decode(&x)?)
    };
    if a.json {
        print_json(&json!({ "components": x.components(), "moduli": set.moduli(), "value": value }))
    } else {
        println!("{value}");
        Ok(())
    }
}

fn ops_demo(a: OpsDemoArgs) -> Result<()> {
    let set = parse_moduli(&a.moduli)?;
    let m = u128::from(set.range());
    let seed = resolve_seed(a.common.seed, None)?;
    let mut e = RncEngine::new(set.clone(), seed).with_config(OpConfig {
        randomize: true,
        checked: false,
    });
    let (pa, pb) = (a.a, a.b);
    let x = e.encode(pa)?;
    let y = e.encode(pb)?;
    let wide = |v: u128| (v % m) as u64;
    // bitwise ops run over the widest width whose values all fit below M
    let width = 63 - set.range().leading_zeros();
    let mut rows: Vec<(&str, u64, u64)> = Vec::new();
    let dec = |e: &mut RncEngine, r: EncodedValue| e.decode(&r);
    let r = e.add_enc(&x, &y)?;
    rows.push(("add", dec(&mut e, r)?, wide(u128::from(pa) + u128::from(pb))));
    let r = e.sub_enc(&x, &y)?;
    rows.push(("sub", dec(&mut e, r)?, wide(u128::from(pa) + m - u128::from(pb))));
    let r = e.mul_enc(&x, &y)?;
    rows.push(("mul", dec(&mut e, r)?, wide(u128::from(pa) * u128::from(pb))));
    let r = e.shl_enc(&x, 1)?;
    rows.push(("shl1", dec(&mut e, r)?, wide(u128::from(pa) << 1)));
    let r = e.pow_enc(&x, 2)?;
    rows.push(("pow2", dec(&mut e, r)?, wide(u128::from(pa) * u128::from(pa))));
    rows.push(("less_than", u64::from(e.less_than(&x, &y)?), u64::from(pa < pb)));
    rows.push(("eq", u64::from(e.eq_enc(&x, &y)?), u64::from(pa == pb)));
    rows.push(("neq", u64::from(e.neq_enc(&x, &y)?), u64::from(pa != pb)));
    if let (Some(pq), Some(pr)) = (pa.checked_div(pb), pa.checked_rem(pb)) {
        let (q, r) = e.div_int(&x, &y)?;
        rows.push(("div", dec(&mut e, q)?, pq));
        rows.push(("mod", dec(&mut e, r)?, pr));
    }
    if pa >> width == 0 && pb >> width == 0 {
        let r = e.xor_enc(&x, &y, width)?;
        rows.push(("xor", dec(&mut e, r)?, pa ^ pb));
        let r = e.or_enc(&x, &y, width)?;
        rows.push(("or", dec(&mut e, r)?, pa | pb));
    }
    let all_ok = rows.iter().all(|(_, got, want)| got == want);
    let stats = e.stats();
    if a.common.json {
        let ops: Vec<_> = rows
            .iter()
            .map(|(op, got, want)| json!({"op": op, "result": got, "expected": want, "ok": got == want}))
            .collect();
        print_json(&json!({
            "a": pa,
            "b": pb,
            "moduli": set.moduli(),
            "a_components": x.components(),
            "b_components": y.components(),
            "ops": ops,
            "stats": stats,
        }))?;
    } else {
        println!("a = {pa} -> ({})", join(x.components()));
        println!("b = {pb} -> ({})", join(y.components()));
        for (op, got, want) in &rows {
            let mark = if got == want { "ok" } else { "MISMATCH" };
            println!("{op:<10} {got:>12}  {mark}");
        }
        println!(
            "decodes={} mixed_radix={} comparisons={} equalities={}",
            stats.decodes, stats.mixed_radix, stats.comparisons, stats.equalities
        );
    }
    if !all_ok {
        bail!("encoded results disagree with plain arithmetic");
    }
    Ok(())
}

fn hex16(s: &str, what: &str) -> Result<[u8; 16]> {
    parse_hex16(s).with_context(|| format!("{what} must be 32 hex digits"))
}

fn aes(a: AesArgs) -> Result<()> {
    let key = hex16(&a.key, "key")?;
    let block = hex16(&a.block, "block")?;
    let set = parse_moduli(&a.moduli)?;
    let seed = resolve_seed(a.common.seed, None)?;
    let (ct, log) = run_traced(a.mode, &key, &block, &set, seed)?;
    let ct_hex = to_hex(&ct);
    let mut files = Vec::new();
    if let Some(dir) = &a.audit {
        let mut report = find_keys(&log, &key, &expand_key(&key));
        report.mode = Some(a.mode);
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        files.push(write_file(&dir.join("ciphertext.txt"), format!("{ct_hex}\n"))?);
        files.push(write_file(&dir.join("trace.csv"), log.to_csv())?);
        files.push(write_file(&dir.join("report.json"), report.to_json())?);
    }
    if a.common.json {
        print_json(&json!({
            "mode": a.mode,
            "ciphertext": ct_hex,
            "trace_events": log.len(),
            "files": files,
        }))
    } else {
        println!("{ct_hex}");
        for f in files {
            eprintln!("wrote {f}");
        }
        Ok(())
    }
}

fn write_file(path: &Path, contents: String) -> Result<String> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path.display().to_string())
}

fn audit(a: AuditArgs) -> Result<()> {
    let keys: Vec<String> = if a.keys.is_empty() {
        SAMPLE_KEYS.iter().map(|k| k.to_string()).collect()
    } else {
        a.keys.clone()
    };
    let keys = keys
        .iter()
        .map(|k| hex16(k, "key"))
        .collect::<Result<Vec<_>>>()?;
    let block = hex16(&a.block, "block")?;
    let set = parse_moduli(&a.moduli)?;
    let seed = resolve_seed(a.common.seed, None)?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut all: Vec<LeakReport> = Vec::new();
    for &mode in &a.modes {
        let mut reports = Vec::new();
        for key in &keys {
            let (_, log, report) = audit_run(mode, key, &block, &set, seed)?;
            if let Some(dir) = &a.out {
                let stem = format!("{}-{}", mode, to_hex(key));
                write_file(&dir.join(format!("{stem}.trace.csv")), log.to_csv())?;
            }
            reports.push(report);
        }
        if reports.len() >= 2 {
            cross_key_filter(&mut reports)?;
        }
        if let Some(dir) = &a.out {
            for r in &reports {
                write_file(&dir.join(format!("{}-{}.report.json", mode, r.key)), r.to_json())?;
            }
        }
        all.extend(reports);
    }
    if a.common.json {
        return print_json(&serde_json::to_value(&all)?);
    }
    println!(
        "{:<15} {:<32} {:>9} {:>9} {:>9} {:>9}  coincidences",
        "mode", "key", "seg0", "seg1", "seg2", "seg3"
    );
    for r in &all {
        let cell = |s: Segment| {
            let h = r.segment(s);
            format!("{}B/{}W", h.key_bytes_found, h.words_found)
        };
        println!(
            "{:<15} {:<32} {:>9} {:>9} {:>9} {:>9}  {:>12}",
            r.mode.map(|m| m.name()).unwrap_or("-"),
            r.key,
            cell(Segment::Init),
            cell(Segment::KeyExpansion),
            cell(Segment::RoundKeys),
            cell(Segment::Cipher),
            r.coincidences.len()
        );
    }
    println!("cells: key bytes found (of 16) / round-key words found (of 44)");
    println!("coincidences: byte values seen in segments 1-2 under keys that lack them (--json lists them)");
    Ok(())
}

fn transform_cmd(a: TransformArgs) -> Result<()> {
    let text = if a.input.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?
    };
    let module = parse_ir(&text)?;
    let seed = resolve_seed(a.seed, None)?;
    let out = match (a.m1, a.m2) {
        (Some(m1), Some(m2)) => transform(&module, &ModuliSet::new(&[m1, m2])?, seed)?,
        _ => transform_auto(&module, seed)?,
    };
    let printed = print_ir(&out);
    match &a.out {
        Some(p) => {
            write_file(p, printed)?;
        }
        None => io::stdout().write_all(printed.as_bytes())?,
    }
    Ok(())
}

fn attack(a: AttackArgs) -> Result<()> {
    let params = AttackParams {
        register_bits: a.bits,
        exec_cycles: a.cycles,
        clock_hz: a.clock_hz,
        data_registers: a.registers,
        trojan_states: a.states,
    };
    params.validate().map_err(anyhow::Error::msg)?;
    if a.max_modulus < 2 || a.k == 0 {
        bail!("brute-force estimate needs --max-modulus >= 2 and --k >= 1");
    }
    let comb = trojan_test_time(&params, TrojanModel::Combinational);
    let seq = trojan_test_time(&params, TrojanModel::Sequential);
    let bf = brute_force_cost(a.max_modulus, a.k);
    let defaults = params == AttackParams::default();
    if a.json {
        let mut v = json!({
            "params": params,
            "combinational_s": comb,
            "sequential_s": seq,
            "brute_force": {"max_modulus": a.max_modulus, "k": a.k, "cost": bf},
        });
        if defaults {
            v["reported"] = json!({
                "combinational_min": REPORTED_COMBINATIONAL_MIN,
                "sequential_min": REPORTED_SEQUENTIAL_MIN,
                "note": "published sequential figure does not follow from combinational x states",
            });
        }
        return print_json(&v);
    }
    println!("combinational: {comb:.2} s ({:.2} min)", comb / 60.0);
    println!(
        "sequential:    {seq:.2} s ({:.2} min) = combinational x {}",
        seq / 60.0,
        params.trojan_states
    );
    if defaults {
        println!(
            "note: published figures are {REPORTED_COMBINATIONAL_MIN} min and {REPORTED_SEQUENTIAL_MIN} min; \
             the sequential one is inconsistent with the x{} relation",
            params.trojan_states
        );
    }
    if bf.overflow {
        println!("brute force (M={}, k={}): 10^{:.2} ops", a.max_modulus, a.k, bf.log10_ops);
    } else {
        println!("brute force (M={}, k={}): {:.4e} ops", a.max_modulus, a.k, bf.ops);
    }
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let mut cfg = BenchConfig::default();
    let file_seed = match &a.config {
        Some(p) => {
            let file = ConfigFile::load(p)?;
            let seed = file.seed;
            file.apply(&mut cfg);
            seed
        }
        None => None,
    };
    if let Some(v) = a.ops {
        cfg.ops = v;
    }
    if let Some(c) = &a.counts {
        cfg.counts = bench::parse_counts(c)?;
    }
    if let Some(r) = a.repetitions {
        cfg.repetitions = r;
    }
    if let Some(v) = a.variants {
        cfg.variants = v;
    }
    if a.out.is_some() {
        cfg.output = a.out;
    }
    cfg.seed = resolve_seed(a.common.seed, file_seed)?;
    let report = bench::bench_run(&cfg)?;
    if let Some(prefix) = &cfg.output {
        let (c, j) = report.save(prefix)?;
        eprintln!("wrote {} and {}", c.display(), j.display());
    }
    if a.common.json {
        println!("{}", report.to_json());
        return Ok(());
    }
    println!("{:<5} {:<13} {:>10} {:>10}", "op", "variant", "ratio", "published");
    for s in report.summary() {
        let published = s.op.reported()[Variant::ALL.iter().position(|&v| v == s.variant).unwrap()];
        let ratio = s.mean_ratio.map(|r| format!("{r:.2}")).unwrap_or_else(|| "n/a".into());
        println!("{:<5} {:<13} {ratio:>10} {published:>10.2}", s.op.name(), s.variant.name());
    }
    Ok(())
}
