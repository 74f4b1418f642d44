//! Puts the pieces together: header, pool, unpacker, fixup and sled, iterated
//! until the lengths agree. Also the end-to-end check of a finished image.

use std::fmt::Write as _;
use std::ops::Range;
use std::sync::Mutex;

use crate::catalog::Catalog;
use crate::charset::Variant;
use crate::emu::{EmuConfig, EmuState, IcacheMode, Stop, DEFAULT_BASE};
use crate::error::{Error, Result};
use crate::fp::solver::{self, SolverConfig, SolverResult, B_BITS, DEFAULT_BUDGET, DEFAULT_SEED};
use crate::isa::{disassemble, encode, DecodedInstr, InstrWord, Mnemonic, PreferredWidth, Reg};
use crate::loadtable::{build_table, LoadSeq, LoadTable, TableConfig, VERSION};
use crate::stage1::*;
use crate::stage2::{encode_payload, padded_len, Layout, Polymorphs, Stage2Params, Stage2Program, COMPACT_START, MAX_PAYLOAD, READ_AHEAD};

pub const MAX_ROUNDS: usize = 8;
/// Stage-2 instances tried before a value that cannot be loaded is reported.
pub const MAX_POLYMORPHS: u64 = 1 << 18;
/// Fixed decode count of the `'` stage 2, so its constants do not depend on the payload.
pub const TICK_LEN: usize = MAX_PAYLOAD;
/// First instance of the pinned `'` search range. Instances below it were all
/// found unsolvable with the default seed and budget.
pub const TICK_FIRST_INSTANCE: u64 = 1_494_784;
/// How many bytes past the payload a `#` stage 2 may decode.
pub const HASH_EXTRA_LEN: usize = 16;
/// Filler byte for unused pool space.
pub const POOL_FILL: u8 = b'B';

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkOptions {
    /// Smallest pool, in bytes. It grows to the nearest charset-valid jal.
    pub pool_size: usize,
    pub seed: u64,
    pub budget: u64,
    /// Bare-metal `'`: prepend the FPU enabling gadget.
    pub fpu_gadget: bool,
    pub tick_instances: Range<u64>,
}

impl Default for LinkOptions {
    fn default() -> Self {
        LinkOptions {
            pool_size: 0,
            seed: DEFAULT_SEED,
            budget: DEFAULT_BUDGET,
            fpu_gadget: false,
            tick_instances: TICK_FIRST_INSTANCE..TICK_FIRST_INSTANCE + (1 << 16),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShellcodeImage {
    pub variant: Variant,
    pub bytes: Vec<u8>,
    pub regions: Vec<Region>,
    pub entry_offset: usize,
    pub payload: Vec<u8>,
    /// Where the decoded payload starts, relative to the image.
    pub payload_offset: usize,
    pub stage2: Vec<u8>,
    pub stage2_offset: usize,
    pub table_version: u16,
    pub solver_seed: Option<u64>,
    pub fpu_gadget: bool,
}

impl ShellcodeImage {
    pub fn region_at(&self, offset: usize) -> Option<&Region> {
        self.regions.iter().find(|r| (r.offset..r.end()).contains(&offset))
    }
}

/// Caches what linking one variant needs: catalog, table, fixup planner, and
/// for `'` the last solver result.
pub struct Linker {
    pub variant: Variant,
    pub catalog: Catalog,
    pub table: Option<LoadTable>,
    planner: FixupPlanner,
    fence: Option<LoadSeq>,
    tick: Mutex<Option<(u64, u64, Range<u64>, SolverResult)>>,
}

struct Parts {
    prefix: Vec<u8>,
    gadget: bool,
    header: Header,
    pool: Vec<u8>,
    init: Vec<InstrWord>,
    pre: Vec<InstrWord>,
    fixup: Vec<InstrWord>,
    post: Vec<InstrWord>,
    sled: Vec<InstrWord>,
}

fn check_payload(payload: &[u8]) -> Result<()> {
    if payload.is_empty() {
        return Err(Error::EmptyPayload);
    }
    if payload.len() > MAX_PAYLOAD {
        return Err(Error::PayloadTooLarge { len: payload.len(), max: MAX_PAYLOAD });
    }
    Ok(())
}

impl Linker {
    pub fn new(variant: Variant) -> Result<Linker> {
        let catalog = Catalog::for_variant(variant);
        let table = match variant {
            Variant::Hash | Variant::Slash => Some(build_table(variant, &catalog, &TableConfig::for_variant(variant))),
            _ => None,
        };
        Linker::with_parts(variant, catalog, table)
    }

    /// Uses a prebuilt table (for instance one read from disk).
    pub fn with_parts(variant: Variant, catalog: Catalog, table: Option<LoadTable>) -> Result<Linker> {
        if variant == Variant::Alnum {
            return Err(Error::OutOfRange("the plain alphanumeric subset has no store".into()));
        }
        let planner = FixupPlanner::for_catalog(&catalog);
        let fence = match variant {
            Variant::Slash => Some(fence_i_seq(&catalog).ok_or(Error::UnloadableValue(0x100f))?),
            _ => None,
        };
        Ok(Linker { variant, catalog, table, planner, fence, tick: Mutex::new(None) })
    }

    fn table(&self) -> Result<&LoadTable> {
        self.table.as_ref().ok_or_else(|| Error::OutOfRange("no load table".into()))
    }

    pub fn planner(&self) -> &FixupPlanner {
        &self.planner
    }

    pub fn link(&self, payload: &[u8], opts: &LinkOptions) -> Result<ShellcodeImage> {
        check_payload(payload)?;
        match self.variant {
            Variant::Hash => self.link_hash(payload, opts),
            Variant::Slash => self.link_slash(payload, opts),
            _ => self.link_tick(payload, opts),
        }
    }

    /// Runs the fixup length to a fixpoint. `before` is where the chain starts
    /// and `after` the code between it and the sled. Returns the chain and the
    /// offset stage 2 lands at.
    fn fixup_for(&self, l: usize, before: usize, after: usize, store_base: i64) -> Result<(FixupChain, usize)> {
        let mut k = 0;
        for _ in 0..MAX_ROUNDS {
            let end = before + 2 * k + after;
            let chain = build_fixup(&self.planner, end as i64 - store_base - l as i64)?;
            if chain.imms.len() == k {
                let d = end + chain.nopsled_len;
                return Ok((chain, d));
            }
            k = chain.imms.len();
        }
        Err(Error::NoFixpoint)
    }

    fn header(&self, asm: &Asm, min_pool: usize, opts: &LinkOptions) -> Result<Header> {
        build_header(asm, self.variant, min_pool.max(opts.pool_size))
    }

    /// `#` layout. P_enc may sit anywhere in the pool, so a stage-2 offset is
    /// fixed first and P_enc placed where it points. When a length's `addi`
    /// cannot be loaded, a slightly longer decode is used instead.
    fn link_hash(&self, payload: &[u8], opts: &LinkOptions) -> Result<ShellcodeImage> {
        let asm = Asm::new(&self.catalog);
        let table = self.table()?;
        let l = 4;
        let max_enc = 2 * (payload.len() + HASH_EXTRA_LEN);
        let header = self.header(&asm, max_enc + 8, opts)?;
        let landing = header.offset as usize;
        let init = build_init(&asm, self.variant)?;
        let before = landing + words_to_bytes(&init).len();
        let mut last = Error::NoFixpoint;
        let lens = (payload.len()..=payload.len() + HASH_EXTRA_LEN).filter(|&n| hash_len_ok(table, n));
        for len in lens {
            let mut enc = encode_payload(payload)?;
            enc.resize(2 * len, POOL_FILL);
            // aim for P_enc right below the landing point
            let goal = (landing - enc.len()) as i64 & !3;
            let mut offset = 0i64;
            for _ in 0..MAX_ROUNDS {
                let params = Stage2Params { offset: offset as i32, len };
                let (program, unp) = match self.hash_instance(&asm, table, params) {
                    Ok(x) => x,
                    Err(e) => {
                        last = e;
                        break;
                    }
                };
                let after = words_to_bytes(&unp.post).len();
                let (chain, d) = self.fixup_for(l, before, after, STORE_BASE as i64)?;
                let sp_final = d as i64 - STORE_BASE as i64 + (BUMP as i64) * unp.bumps as i64;
                let penc = sp_final + offset + READ_AHEAD;
                if penc < l as i64 + READ_AHEAD || penc + enc.len() as i64 > landing as i64 || !hash_offset_ok(table, offset) {
                    let top = goal - READ_AHEAD - sp_final;
                    offset = (0..512).map(|i| top - 2 * i).find(|&o| hash_offset_ok(table, o)).unwrap_or(top);
                    continue;
                }
                let penc = penc as usize;
                let mut pool = vec![POOL_FILL; landing - l];
                pool[penc - l..penc - l + enc.len()].copy_from_slice(&enc);
                let parts = Parts {
                    prefix: Vec::new(),
                    gadget: false,
                    header,
                    pool,
                    init,
                    pre: unp.pre,
                    fixup: chain.words(&asm)?,
                    post: unp.post,
                    sled: nop_sled(&asm, chain.nopsled_len)?,
                };
                return Ok(self.assemble(parts, payload, penc - READ_AHEAD as usize, &program, d, None));
            }
        }
        Err(last)
    }

    fn hash_instance(&self, asm: &Asm, table: &LoadTable, params: Stage2Params) -> Result<(Stage2Program, UnpackerCode)> {
        let polys = Polymorphs::new(Layout::Flat, params, Reg::SP);
        let mut last = Error::SolverExhausted;
        for idx in 0..polys.count().min(MAX_POLYMORPHS) {
            let Some(p) = polys.get(idx) else { continue };
            match build_unpacker_hash(asm, &p.bytes, table) {
                Ok(u) => return Ok((p, u)),
                Err(e) => last = e,
            }
        }
        Err(last)
    }

    fn link_slash(&self, payload: &[u8], opts: &LinkOptions) -> Result<ShellcodeImage> {
        let asm = Asm::new(&self.catalog);
        let table = self.table()?;
        let fence = self.fence.as_ref().expect("slash linker has fence.i");
        let n = padded_len(payload.len());
        let mut enc = encode_payload(payload)?;
        enc.resize(2 * n, POOL_FILL);
        let filler = words_to_bytes(&nop_sled(&asm, 4)?);
        let l = filler.len() + 4;
        let enc_at = COMPACT_START as usize + READ_AHEAD as usize;
        let header = self.header(&asm, enc_at + enc.len() + 8, opts)?;
        let landing = filler.len() + header.offset as usize;
        let polys = Polymorphs::new(Layout::Blocks, Stage2Params { offset: 0, len: n }, Reg::A4);
        let mut found = None;
        let mut last = Error::SolverExhausted;
        for idx in 0..polys.count().min(MAX_POLYMORPHS) {
            let Some(p) = polys.get(idx) else { continue };
            match build_unpacker_slash(&asm, &p, table, fence) {
                Ok(u) => {
                    found = Some((p, u));
                    break;
                }
                Err(e) => last = e,
            }
        }
        let (program, unp) = found.ok_or(last)?;
        let init = build_init(&asm, self.variant)?;
        let before = landing + words_to_bytes(&init).len() + words_to_bytes(&unp.pre).len();
        let after = words_to_bytes(&unp.post).len();
        let (chain, d) = self.fixup_for(l, before, after, 0)?;
        let mut pool = vec![POOL_FILL; landing - l];
        for (off, bytes) in &unp.pool {
            pool[*off..off + bytes.len()].copy_from_slice(bytes);
        }
        pool[enc_at..enc_at + enc.len()].copy_from_slice(&enc);
        let parts = Parts {
            prefix: filler,
            gadget: false,
            header,
            pool,
            init,
            pre: unp.pre,
            fixup: chain.words(&asm)?,
            post: unp.post,
            sled: nop_sled(&asm, chain.nopsled_len)?,
        };
        Ok(self.assemble(parts, payload, l + COMPACT_START as usize, &program, d, None))
    }

    /// The `'` constants for the given options, solved once and cached.
    pub fn tick_constants(&self, opts: &LinkOptions) -> Result<SolverResult> {
        let mut cache = self.tick.lock().unwrap();
        if let Some((seed, budget, range, res)) = cache.as_ref() {
            if *seed == opts.seed && *budget == opts.budget && *range == opts.tick_instances {
                return Ok(res.clone());
            }
        }
        let polys = tick_polymorphs();
        let cfg = SolverConfig::new(opts.seed, opts.budget, opts.tick_instances.clone());
        let res = solver::solve(&polys, B_BITS, &cfg, None)?;
        *cache = Some((opts.seed, opts.budget, opts.tick_instances.clone(), res.clone()));
        Ok(res)
    }

    fn link_tick(&self, payload: &[u8], opts: &LinkOptions) -> Result<ShellcodeImage> {
        let asm = Asm::new(&self.catalog);
        let constants = self.tick_constants(opts)?;
        let mut enc = encode_payload(payload)?;
        enc.resize(2 * TICK_LEN, POOL_FILL);
        // keeps the link value 8-aligned
        let mut prefix = if opts.fpu_gadget { FPU_GADGET.to_vec() } else { Vec::new() };
        while prefix.len() % 8 != 4 {
            prefix.extend(words_to_bytes(&[asm.filler()?]));
        }
        let l = prefix.len() + 4;
        let enc_at = COMPACT_START as usize + READ_AHEAD as usize;
        let header = self.header(&asm, enc_at + enc.len() + 8, opts)?;
        let landing = prefix.len() + header.offset as usize;
        let plan = plan_tick(&asm, constants.triples().len())?;
        let unp = build_unpacker_tick(&asm, &plan, &constants)?;
        let init = build_init(&asm, self.variant)?;
        let before = landing + words_to_bytes(&init).len() + words_to_bytes(&unp.pre).len();
        let after = words_to_bytes(&unp.post).len();
        let (chain, d) = self.fixup_for(l, before, after, STORE_BASE as i64)?;
        let mut pool = vec![POOL_FILL; landing - l];
        for (off, bytes) in &unp.pool {
            pool[*off..off + bytes.len()].copy_from_slice(bytes);
        }
        pool[enc_at..enc_at + enc.len()].copy_from_slice(&enc);
        let parts = Parts {
            prefix,
            gadget: opts.fpu_gadget,
            header,
            pool,
            init,
            pre: unp.pre,
            fixup: chain.words(&asm)?,
            post: unp.post,
            sled: nop_sled(&asm, chain.nopsled_len)?,
        };
        Ok(self.assemble(parts, payload, l + COMPACT_START as usize, &constants.program, d, Some(opts.seed)))
    }

    fn assemble(
        &self,
        p: Parts,
        payload: &[u8],
        payload_offset: usize,
        program: &Stage2Program,
        stage2_offset: usize,
        solver_seed: Option<u64>,
    ) -> ShellcodeImage {
        let mut bytes = Vec::new();
        let mut regions = Vec::new();
        let mut put = |kind: RegionKind, data: &[u8], bytes: &mut Vec<u8>| {
            if !data.is_empty() {
                regions.push(Region { kind, offset: bytes.len(), len: data.len() });
                bytes.extend_from_slice(data);
            }
        };
        let (gadget, filler) = if p.gadget { p.prefix.split_at(FPU_GADGET.len()) } else { p.prefix.split_at(0) };
        put(RegionKind::FpuGadget, gadget, &mut bytes);
        let mut head = filler.to_vec();
        p.header.word.push_to(&mut head);
        put(RegionKind::HeaderJal, &head, &mut bytes);
        put(RegionKind::DataPool, &p.pool, &mut bytes);
        let mut unpack = words_to_bytes(&p.init);
        unpack.extend(words_to_bytes(&p.pre));
        put(RegionKind::Unpacker, &unpack, &mut bytes);
        put(RegionKind::Fixup, &words_to_bytes(&p.fixup), &mut bytes);
        put(RegionKind::Unpacker, &words_to_bytes(&p.post), &mut bytes);
        put(RegionKind::NopSled, &words_to_bytes(&p.sled), &mut bytes);
        debug_assert_eq!(bytes.len(), stage2_offset);
        ShellcodeImage {
            variant: self.variant,
            bytes,
            regions,
            entry_offset: 0,
            payload: payload.to_vec(),
            payload_offset,
            stage2: program.bytes.clone(),
            stage2_offset,
            table_version: VERSION,
            solver_seed,
            fpu_gadget: p.gadget,
        }
    }
}

fn halves_loadable(table: &LoadTable, d: DecodedInstr) -> bool {
    match encode(&d, PreferredWidth::W32) {
        Ok(w) => table.lookup(w.value() as u16).is_some() && table.lookup((w.value() >> 16) as u16).is_some(),
        Err(_) => false,
    }
}

/// Some register pair makes the flat `addi xn,xp,len` loadable.
fn hash_len_ok(table: &LoadTable, len: usize) -> bool {
    let window = [Reg::S0, Reg::S1, Reg::A0, Reg::A1, Reg::A2, Reg::A3, Reg::A4, Reg::A5];
    window.iter().any(|&xp| {
        (1..32).map(Reg::X).any(|xn| xn != xp && xn != Reg::SP && halves_loadable(table, DecodedInstr::new(Mnemonic::Addi).rd(xn).rs1(xp).imm(len as i32)))
    })
}

/// The flat `jalr zero,off(sp)` is loadable, and so is `addi xp,sp,off` for some xp.
fn hash_offset_ok(table: &LoadTable, off: i64) -> bool {
    let Ok(off) = i32::try_from(off) else { return false };
    let window = [Reg::S0, Reg::S1, Reg::A0, Reg::A1, Reg::A2, Reg::A3, Reg::A4, Reg::A5];
    halves_loadable(table, DecodedInstr::new(Mnemonic::Jalr).rd(Reg::ZERO).rs1(Reg::SP).imm(off))
        && window.iter().any(|&xp| halves_loadable(table, DecodedInstr::new(Mnemonic::Addi).rd(xp).rs1(Reg::SP).imm(off)))
}

/// Stage-2 instances the `'` solver walks through.
pub fn tick_polymorphs() -> Polymorphs {
    Polymorphs::new(Layout::Compact, Stage2Params { offset: 0, len: TICK_LEN }, Reg::A4)
}

/// One-shot link with a fresh [`Linker`].
pub fn link(variant: Variant, payload: &[u8], opts: &LinkOptions) -> Result<ShellcodeImage> {
    Linker::new(variant)?.link(payload, opts)
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub icache: IcacheMode,
    pub max_steps: u64,
    pub base: u64,
    /// Initial sp. Stage 1 never reads it, but hand-written shellcode may.
    pub sp: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { icache: IcacheMode::Strict, max_steps: 5_000_000, base: DEFAULT_BASE, sp: DEFAULT_BASE }
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    /// Offsets of bytes outside the charset (the FPU gadget excepted).
    pub bad_bytes: Vec<usize>,
    /// Offsets in code regions that do not decode.
    pub undecodable: Vec<usize>,
    pub reached_payload: bool,
    pub payload_match: bool,
    /// How the run ended after reaching the payload (or before, on failure).
    pub stop: Option<Stop>,
    pub steps: u64,
    pub serial: Vec<u8>,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn emu_config(opts: &VerifyOptions, fpu_enabled: bool) -> EmuConfig {
    EmuConfig { base: opts.base, icache: opts.icache, fpu_enabled, ..EmuConfig::default() }
}

fn load(opts: &VerifyOptions, fpu_enabled: bool, bytes: &[u8], report: &mut VerifyReport) -> Option<EmuState> {
    let cfg = emu_config(opts, fpu_enabled);
    if bytes.len() > cfg.mem_size {
        report.failures.push(format!("image of {} bytes does not fit in memory", bytes.len()));
        return None;
    }
    let mut st = EmuState::with_image(cfg, bytes);
    st.set_reg(Reg::SP, opts.sp);
    Some(st)
}

/// Charset closure, stage-1 disassembly, and an emulated run that must
/// rebuild the payload before jumping to it. The run then continues so the
/// payload's serial output is captured.
pub fn verify(image: &ShellcodeImage, opts: &VerifyOptions) -> VerifyReport {
    let mut report = VerifyReport::default();
    let charset = image.variant.charset();
    let mut covered = 0;
    for r in &image.regions {
        if r.offset != covered {
            report.failures.push(format!("regions leave a gap or overlap at {covered}"));
        }
        covered = r.end();
        let Some(data) = image.bytes.get(r.offset..r.end()) else {
            report.failures.push(format!("region {} runs past the image", r.kind.name()));
            continue;
        };
        if r.kind == RegionKind::FpuGadget {
            continue;
        }
        report.bad_bytes.extend(data.iter().enumerate().filter(|(_, b)| !charset.contains(**b)).map(|(i, _)| r.offset + i));
        if r.kind != RegionKind::DataPool {
            for (off, d) in disassemble(data) {
                if d.is_none() {
                    report.undecodable.push(r.offset + off);
                }
            }
        }
    }
    if covered != image.bytes.len() {
        report.failures.push(format!("regions cover {covered} of {} bytes", image.bytes.len()));
    }
    if !report.bad_bytes.is_empty() {
        report.failures.push(format!("{} bytes outside the charset", report.bad_bytes.len()));
    }
    if !report.undecodable.is_empty() {
        report.failures.push(format!("{} undecodable stage-1 offsets", report.undecodable.len()));
    }
    let fpu = !(image.variant == Variant::Tick && image.fpu_gadget);
    let Some(mut st) = load(opts, fpu, &image.bytes, &mut report) else { return report };
    let entry = opts.base + image.payload_offset as u64;
    match st.run_until(Some(entry), opts.max_steps) {
        Stop::Breakpoint(_) => {
            report.reached_payload = true;
            report.payload_match = st.mem(entry, image.payload.len()) == Some(&image.payload[..]);
            if !report.payload_match {
                report.failures.push("decoded payload differs from the input".into());
            }
            let left = opts.max_steps.saturating_sub(st.steps).max(1);
            report.stop = Some(st.run(left));
        }
        other => {
            report.failures.push(format!("payload entry not reached: {}", describe(&other)));
            report.stop = Some(other);
        }
    }
    report.steps = st.steps;
    report.serial = st.serial_out.clone();
    report
}

/// Checks a raw image without a region map: charset (a leading FPU gadget is
/// allowed) and an emulated run to completion. With `payload`, it also checks
/// that control reaches a copy of it.
pub fn verify_bytes(variant: Variant, bytes: &[u8], payload: Option<&[u8]>, opts: &VerifyOptions) -> VerifyReport {
    let mut report = VerifyReport::default();
    let charset = variant.charset();
    let gadget = bytes.starts_with(&FPU_GADGET);
    let skip = if gadget { FPU_GADGET.len() } else { 0 };
    report.bad_bytes = (skip..bytes.len()).filter(|&i| !charset.contains(bytes[i])).collect();
    if !report.bad_bytes.is_empty() {
        report.failures.push(format!("{} bytes outside the charset", report.bad_bytes.len()));
    }
    let Some(mut st) = load(opts, !gadget, bytes, &mut report) else { return report };
    let stop = loop {
        if let Some(p) = payload.filter(|p| !p.is_empty()) {
            if !report.reached_payload && st.mem(st.pc, p.len()) == Some(p) {
                report.reached_payload = true;
                report.payload_match = true;
            }
        }
        match st.run_until(None, 1) {
            Stop::StepBudgetExceeded if st.steps < opts.max_steps => continue,
            s => break s,
        }
    };
    if payload.is_some() && !report.reached_payload {
        report.failures.push("control never reached the payload".into());
    }
    if payload.is_none() && stop != Stop::Exit {
        report.failures.push(format!("run did not exit: {}", describe(&stop)));
    }
    report.stop = Some(stop);
    report.steps = st.steps;
    report.serial = st.serial_out.clone();
    report
}

pub fn describe(stop: &Stop) -> String {
    match stop {
        Stop::Exit => "exit".into(),
        Stop::Breakpoint(pc) => format!("breakpoint at {pc:#x}"),
        Stop::Trap(t) => format!("trap: {t}"),
        Stop::StepBudgetExceeded => "step budget exceeded".into(),
    }
}

/// Printable bytes other than space as they are, the rest as `\xNN`; backslash doubled.
pub fn escape(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len());
    for &b in bytes {
        match b {
            b'\\' => s.push_str("\\\\"),
            0x21..=0x7e => s.push(b as char),
            _ => write!(s, "\\x{b:02x}").unwrap(),
        }
    }
    s
}

/// Inverse of [`escape`]. Whitespace is dropped, so wrapped text reads back.
pub fn unescape(text: &str) -> Option<Vec<u8>> {
    let mut out = Vec::new();
    let mut it = text.bytes().filter(|b| !b.is_ascii_whitespace());
    while let Some(b) = it.next() {
        if b != b'\\' {
            out.push(b);
            continue;
        }
        match it.next()? {
            b'\\' => out.push(b'\\'),
            b'x' => {
                let hex = [it.next()?, it.next()?];
                out.push(u8::from_str_radix(std::str::from_utf8(&hex).ok()?, 16).ok()?);
            }
            _ => return None,
        }
    }
    Some(out)
}

/// Region map plus a listing of every code region.
pub fn annotate(image: &ShellcodeImage) -> String {
    let mut s = String::new();
    writeln!(s, "variant {} ({} bytes)", image.variant.name(), image.bytes.len()).unwrap();
    writeln!(s, "stage 2 at +{}, payload at +{} ({} bytes)", image.stage2_offset, image.payload_offset, image.payload.len()).unwrap();
    for r in &image.regions {
        let data = &image.bytes[r.offset..r.end()];
        writeln!(s, "\n[{}] +{} len {}", r.kind.name(), r.offset, r.len).unwrap();
        match r.kind {
            RegionKind::DataPool | RegionKind::FpuGadget => {
                let shown = &data[..data.len().min(64)];
                let more = if data.len() > shown.len() { " ..." } else { "" };
                writeln!(s, "  {}{more}", escape(shown)).unwrap();
            }
            _ => {
                for (off, d) in disassemble(data) {
                    let at = r.offset + off;
                    match d {
                        Some((w, d)) => writeln!(s, "  {at:6}  {:<4}  {d}", escape(&w.bytes())).unwrap(),
                        None => writeln!(s, "  {at:6}  ??").unwrap(),
                    }
                }
            }
        }
    }
    s
}

/// Region map, one line per region.
pub fn region_map(image: &ShellcodeImage) -> String {
    let mut s = String::new();
    for r in &image.regions {
        writeln!(s, "{:>8} {:>6}  {}", r.offset, r.len, r.kind.name()).unwrap();
    }
    s
}
