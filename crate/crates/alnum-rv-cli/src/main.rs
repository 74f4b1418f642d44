use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alnum_rv::catalog::Catalog;
use alnum_rv::charset::Variant;
use alnum_rv::emu::{IcacheMode, Stop};
use alnum_rv::fp::solver::{self, SolverConfig, SolverStats, B_BITS, DEFAULT_BUDGET, DEFAULT_SEED};
use alnum_rv::link::{self, LinkOptions, Linker, VerifyOptions, VerifyReport, TICK_FIRST_INSTANCE};
use alnum_rv::loadtable::{build_table, LoadTable, TableConfig};
use alnum_rv::payload::hello_world;
use alnum_rv::stage2::encode_payload;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "alnum-rv", version, about = "Alphanumeric RV64GC shellcode generator and checker")]
struct Cli {
    /// Worker threads for table building and solving (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Alnum,
    Hash,
    Slash,
    Tick,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Alnum => Variant::Alnum,
            VariantArg::Hash => Variant::Hash,
            VariantArg::Slash => Variant::Slash,
            VariantArg::Tick => Variant::Tick,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Printable bytes with `\xNN` escapes.
    Text,
    Bin,
    /// Region map and disassembly (gen only).
    Annotated,
}

#[derive(Args)]
struct EmuArgs {
    /// Trap when a stored byte is fetched without an intervening fence.i.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    strict_icache: bool,
    #[arg(long, default_value_t = 5_000_000)]
    max_steps: u64,
}

impl EmuArgs {
    fn options(&self) -> VerifyOptions {
        let icache = if self.strict_icache { IcacheMode::Strict } else { IcacheMode::Lenient };
        VerifyOptions { icache, max_steps: self.max_steps, ..VerifyOptions::default() }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Link a payload into shellcode. Without a payload file, uses the built-in hello world.
    Gen {
        payload: Option<PathBuf>,
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Trials per fmadd pair.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Smallest data pool; grows to the next usable jal.
        #[arg(long, default_value_t = 0)]
        pool_size: usize,
        /// Prebuilt load table (see `table build`).
        #[arg(long)]
        table: Option<PathBuf>,
        /// Prepend the non-alphanumeric FPU enabling gadget (tick only).
        #[arg(long)]
        fpu_gadget: bool,
        /// Skip the emulated check.
        #[arg(long)]
        no_verify: bool,
        #[command(flatten)]
        emu: EmuArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check an image: charset, then run it in the emulator.
    Verify {
        image: PathBuf,
        #[arg(long, value_enum)]
        variant: VariantArg,
        /// Require control to reach this payload.
        #[arg(long)]
        payload: Option<PathBuf>,
        /// Pass if the serial output is exactly this (escapes allowed), even if the run never exits.
        #[arg(long)]
        expect_serial: Option<String>,
        #[command(flatten)]
        emu: EmuArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Per-mnemonic counts of a variant's catalog.
    Stats {
        #[arg(long, value_enum)]
        variant: VariantArg,
        /// Also write the catalog file.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    #[command(subcommand)]
    Table(TableCmd),
    /// Solve the fmadd constants of the tick stage 2 and print the pool.
    SolveTick {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = TICK_FIRST_INSTANCE)]
        first: u64,
        #[arg(long, default_value_t = 1 << 16)]
        count: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the two-characters-per-byte encoding of a payload.
    EncodePayload { payload: PathBuf },
}

#[derive(Subcommand)]
enum TableCmd {
    /// Build a load table and write it.
    Build {
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print how many 16-bit values a table file can load.
    Coverage { file: PathBuf },
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display())),
        None => Ok(io::stdout().write_all(bytes)?),
    }
}

fn stage_variant(v: VariantArg) -> Result<Variant> {
    if v == VariantArg::Alnum {
        bail!("the plain alphanumeric subset has no store instruction; use hash, slash or tick");
    }
    Ok(v.into())
}

fn read_table(path: &Path, variant: Variant) -> Result<LoadTable> {
    let table = LoadTable::read_from(&mut io::BufReader::new(fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
        .with_context(|| format!("bad table file {}", path.display()))?;
    if table.variant != variant {
        bail!("table is for {}, not {}", table.variant.name(), variant.name());
    }
    Ok(table)
}

fn print_report(r: &VerifyReport) {
    if !r.serial.is_empty() {
        println!("serial: {:?}", String::from_utf8_lossy(&r.serial));
    }
    if let Some(stop) = &r.stop {
        println!("stop: {} after {} steps", link::describe(stop), r.steps);
    }
    for f in &r.failures {
        println!("failure: {f}");
    }
}

fn gen(cli: Cmd) -> Result<ExitCode> {
    let Cmd::Gen { payload, variant, seed, budget, pool_size, table, fpu_gadget, no_verify, emu, output, format } = cli else {
        unreachable!()
    };
    let variant = stage_variant(variant)?;
    let payload = match &payload {
        Some(p) => read(p)?,
        None => hello_world(),
    };
    if fpu_gadget && variant != Variant::Tick {
        bail!("--fpu-gadget only applies to tick");
    }
    let linker = match &table {
        Some(path) => Linker::with_parts(variant, Catalog::for_variant(variant), Some(read_table(path, variant)?))?,
        None => Linker::new(variant)?,
    };
    let opts = LinkOptions { pool_size, seed, budget, fpu_gadget, ..LinkOptions::default() };
    let image = linker.link(&payload, &opts).context("link failed")?;
    eprint!("{}", link::region_map(&image));
    let out = match format {
        Format::Text => format!("{}\n", link::escape(&image.bytes)).into_bytes(),
        Format::Bin => image.bytes.clone(),
        Format::Annotated => link::annotate(&image).into_bytes(),
    };
    write_out(output.as_deref(), &out)?;
    if no_verify {
        return Ok(ExitCode::SUCCESS);
    }
    let r = link::verify(&image, &emu.options());
    for f in &r.failures {
        eprintln!("verify: {f}");
    }
    eprintln!("verify: {} ({} bytes, {} steps)", if r.passed() { "pass" } else { "FAIL" }, image.bytes.len(), r.steps);
    Ok(if r.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn verify(cli: Cmd) -> Result<ExitCode> {
    let Cmd::Verify { image, variant, payload, expect_serial, emu, format } = cli else { unreachable!() };
    let raw = read(&image)?;
    let bytes = match format {
        Format::Bin => raw,
        Format::Text => link::unescape(std::str::from_utf8(&raw).context("image is not text")?).context("bad escape in image")?,
        Format::Annotated => bail!("annotated listings cannot be verified; use text or bin"),
    };
    let payload = payload.as_deref().map(read).transpose()?;
    let expect = expect_serial.as_deref().map(|s| link::unescape(s).context("bad escape in --expect-serial")).transpose()?;
    let mut r = link::verify_bytes(variant.into(), &bytes, payload.as_deref(), &emu.options());
    if let Some(want) = &expect {
        r.failures.retain(|f| !f.starts_with("run did not exit"));
        if matches!(r.stop, Some(Stop::Trap(_))) {
            r.failures.push(format!("run trapped: {}", link::describe(r.stop.as_ref().unwrap())));
        }
        if &r.serial != want {
            r.failures.push(format!("serial output {:?} differs from the expected {:?}", link::escape(&r.serial), link::escape(want)));
        }
    }
    print_report(&r);
    println!("{}", if r.passed() { "pass" } else { "FAIL" });
    Ok(if r.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn stats(variant: VariantArg, output: Option<PathBuf>) -> Result<ExitCode> {
    let cat = Catalog::for_variant(variant.into());
    let mut s = String::new();
    for (m, st) in cat.stats() {
        let imm = match (st.imm_min, st.imm_max) {
            (Some(a), Some(b)) => format!(" imm {a}..={b}"),
            _ => String::new(),
        };
        s.push_str(&format!("{} {} ({} compressed){imm}\n", m.name(), st.count, st.compressed));
    }
    s.push_str(&format!("total {}\n", cat.total()));
    print!("{s}");
    if let Some(p) = output {
        let mut f = io::BufWriter::new(fs::File::create(&p).with_context(|| format!("cannot create {}", p.display()))?);
        cat.write_to(&mut f)?;
        f.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn table(cmd: TableCmd) -> Result<ExitCode> {
    match cmd {
        TableCmd::Build { variant, output } => {
            let variant = stage_variant(variant)?;
            let cat = Catalog::for_variant(variant);
            let t = build_table(variant, &cat, &TableConfig::for_variant(variant));
            let mut f = io::BufWriter::new(fs::File::create(&output).with_context(|| format!("cannot create {}", output.display()))?);
            t.write_to(&mut f)?;
            f.flush()?;
            println!("coverage {} of 65536", t.coverage());
        }
        TableCmd::Coverage { file } => {
            let t = LoadTable::read_from(&mut io::BufReader::new(fs::File::open(&file).with_context(|| format!("cannot open {}", file.display()))?))
                .with_context(|| format!("bad table file {}", file.display()))?;
            println!("{} coverage {} of 65536", t.variant.name(), t.coverage());
            if t.config.nop_guard.is_some() {
                println!("with nop-like upper half {}", t.guarded_coverage());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn solve_tick(seed: u64, budget: u64, first: u64, count: u64, output: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = SolverConfig::new(seed, budget, first..first.saturating_add(count));
    let progress = |s: &SolverStats| {
        eprintln!("instances {} searches {} memo hits {} trials {}", s.instances, s.searches, s.memo_hits, s.trials);
    };
    let res = solver::solve(&link::tick_polymorphs(), B_BITS, &cfg, Some(&progress)).context("no solution in the instance range")?;
    if !res.verify() {
        bail!("solver result does not verify");
    }
    let mut s = format!("instance {}\nseed {seed:#x}\n", res.instance);
    let line = |name: String, bits: u64| format!("{name:<4} {bits:016x} {}\n", link::escape(&bits.to_le_bytes()));
    s.push_str(&line("b".into(), B_BITS));
    for (k, p) in res.pairs.iter().enumerate() {
        s.push_str(&line(format!("a{k}"), p.a));
        s.push_str(&line(format!("c{}", 2 * k), p.c0));
        if let Some(c1) = p.c1 {
            s.push_str(&line(format!("c{}", 2 * k + 1), c1));
        }
    }
    s.push_str(&format!("stage2 {}\n", link::escape(&res.program.bytes)));
    write_out(output.as_deref(), s.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
    }
    match cli.cmd {
        c @ Cmd::Gen { .. } => gen(c),
        c @ Cmd::Verify { .. } => verify(c),
        Cmd::Stats { variant, output } => stats(variant, output),
        Cmd::Table(t) => table(t),
        Cmd::SolveTick { seed, budget, first, count, output } => solve_tick(seed, budget, first, count, output),
        Cmd::EncodePayload { payload } => {
            println!("{}", link::escape(&encode_payload(&read(&payload)?)?));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
