//! Stage 1: the straight-line unpacker. It finds itself with `jal`, skips the
//! data pool, moves sp to where stage 2 goes and writes stage 2 there.

use std::collections::{HashSet, VecDeque};

use crate::catalog::Catalog;
use crate::charset::Variant;
use crate::error::{Error, Result};
use crate::fp::solver::{SolverResult, B_BITS};
use crate::isa::{DecodedInstr, InstrWord, Mnemonic, Reg};
use crate::loadtable::{find_exact32, nop_like_writes, LoadSeq, LoadTable, TableConfig};
use crate::stage2::{fence_i, Layout, Stage2Program};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionKind {
    HeaderJal,
    DataPool,
    Fixup,
    Unpacker,
    NopSled,
    FpuGadget,
}

impl RegionKind {
    pub fn name(self) -> &'static str {
        match self {
            RegionKind::HeaderJal => "header_jal",
            RegionKind::DataPool => "data_pool",
            RegionKind::Fixup => "fixup",
            RegionKind::Unpacker => "unpacker",
            RegionKind::NopSled => "nopsled",
            RegionKind::FpuGadget => "fpu_gadget",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub kind: RegionKind,
    pub offset: usize,
    pub len: usize,
}

impl Region {
    pub fn end(&self) -> usize {
        self.offset + self.len
    }
}

/// `c.lui t2,2; csrw mstatus,t2`: sets mstatus.FS so the FPU comes on. Not alphanumeric.
pub const FPU_GADGET: [u8; 6] = [0x89, 0x63, 0x73, 0x90, 0x03, 0x30];

/// Store offset of the first stored chunk.
pub const STORE_BASE: i32 = 1920;
/// Last offset of the 2-byte-spaced store chain.
pub const STORE_MAX: i32 = 1938;
/// sp bump between store batches.
pub const BUMP: i32 = 16;

pub fn words_to_bytes(words: &[InstrWord]) -> Vec<u8> {
    let mut out = Vec::new();
    for w in words {
        w.push_to(&mut out);
    }
    out
}

fn op(m: Mnemonic) -> DecodedInstr {
    DecodedInstr::new(m)
}

fn fits(want: &DecodedInstr, d: &DecodedInstr) -> bool {
    fn same<T: PartialEq>(w: Option<T>, d: Option<T>) -> bool {
        w.is_none() || w == d
    }
    (!want.compressed || d.compressed)
        && same(want.rd, d.rd)
        && same(want.rs1, d.rs1)
        && same(want.rs2, d.rs2)
        && same(want.rs3, d.rs3)
        && same(want.imm, d.imm)
        && same(want.rm, d.rm)
        && same(want.csr, d.csr)
}

/// Instruction selection from a catalog.
pub struct Asm<'a> {
    pub catalog: &'a Catalog,
}

impl<'a> Asm<'a> {
    pub fn new(catalog: &'a Catalog) -> Asm<'a> {
        Asm { catalog }
    }

    /// Smallest catalog word matching every operand set in `want`; aq/rl are free.
    pub fn pick(&self, want: DecodedInstr) -> Result<InstrWord> {
        self.catalog
            .first(want.mnemonic, |d| fits(&want, d))
            .map(|e| e.0)
            .ok_or_else(|| Error::NoEncoding(want.to_string()))
    }

    pub fn sp_bump(&self, imm: i32) -> Result<InstrWord> {
        self.pick(DecodedInstr { compressed: true, ..op(Mnemonic::Addi).rd(Reg::SP).rs1(Reg::SP).imm(imm) })
    }

    /// The filler used for sleds: `c.li t1,-2`.
    pub fn filler(&self) -> Result<InstrWord> {
        self.pick(op(Mnemonic::Li).rd(Reg::T1).imm(-2))
    }
}

/// Register the header's `jal` links.
pub fn link_reg(variant: Variant) -> Reg {
    match variant {
        Variant::Slash => Reg::T5,
        Variant::Tick => Reg::A4,
        _ => Reg::T1,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub word: InstrWord,
    pub link: Reg,
    pub offset: i32,
}

/// Shortest charset-valid `jal` linking the variant's register that jumps past
/// `pool_len` bytes of data placed right after it.
pub fn build_header(asm: &Asm, variant: Variant, pool_len: usize) -> Result<Header> {
    let link = link_reg(variant);
    let min = 4 + pool_len as i64;
    asm.catalog
        .get(Mnemonic::Jal)
        .iter()
        .filter(|(_, d)| d.rd == Some(link) && d.imm.unwrap() as i64 >= min)
        .min_by_key(|(w, d)| (d.imm.unwrap(), w.value()))
        .map(|(w, d)| Header { word: *w, link, offset: d.imm.unwrap() })
        .ok_or(Error::NoValidJal(min as u64))
}

/// `sra s4,zero,s3` zeroes s4, then sp (and for `/` also a4) takes the link value.
pub fn build_init(asm: &Asm, variant: Variant) -> Result<Vec<InstrWord>> {
    let link = link_reg(variant);
    let mut out = vec![
        asm.pick(op(Mnemonic::Sra).rd(Reg::S4).rs1(Reg::ZERO).rs2(Reg::S3))?,
        asm.pick(op(Mnemonic::Sra).rd(Reg::SP).rs1(link).rs2(Reg::S4))?,
    ];
    if variant == Variant::Slash {
        out.push(asm.pick(op(Mnemonic::Sra).rd(Reg::A4).rs1(link).rs2(Reg::S4))?);
    }
    Ok(out)
}

pub fn nop_sled(asm: &Asm, len: usize) -> Result<Vec<InstrWord>> {
    if len % 2 != 0 {
        return Err(Error::OutOfRange(format!("sled of {len} bytes")));
    }
    Ok(vec![asm.filler()?; len / 2])
}

/// Immediates of the charset-valid `c.addi16sp`, largest first.
pub fn sp_increments(catalog: &Catalog) -> Vec<i32> {
    let mut v: Vec<i32> = catalog
        .find(Mnemonic::Addi, |d| d.compressed && d.rd == Some(Reg::SP) && d.rs1 == Some(Reg::SP))
        .filter_map(|(_, d)| d.imm)
        .collect();
    v.sort_unstable_by(|a, b| b.cmp(a));
    v.dedup();
    v
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixupChain {
    pub imms: Vec<i32>,
    pub nopsled_len: usize,
    pub total_delta: i64,
}

impl FixupChain {
    pub fn words(&self, asm: &Asm) -> Result<Vec<InstrWord>> {
        self.imms.iter().map(|&i| asm.sp_bump(i)).collect()
    }

    pub fn len_bytes(&self) -> usize {
        2 * self.imms.len()
    }
}

/// Breadth-first table of the fewest sp increments reaching each multiple of 16.
pub struct FixupPlanner {
    imms: Vec<i32>,
    lo: i64,
    hi: i64,
    count: Vec<u32>,
    via: Vec<i32>,
}

impl FixupPlanner {
    /// Totals up to this are planned exactly; larger ones are first cut down with the largest immediate.
    pub const EXACT_SPAN: i64 = 1 << 17;

    pub fn new(imms: &[i32]) -> FixupPlanner {
        let lo = -1024;
        let hi = Self::EXACT_SPAN + 1024;
        let n = ((hi - lo) / 16 + 1) as usize;
        let mut count = vec![u32::MAX; n];
        let mut via = vec![0; n];
        let idx = |v: i64| ((v - lo) / 16) as usize;
        let mut queue = VecDeque::from([0i64]);
        count[idx(0)] = 0;
        while let Some(v) = queue.pop_front() {
            let c = count[idx(v)];
            for &imm in imms {
                let w = v + imm as i64;
                if imm % 16 != 0 || w < lo || w > hi || count[idx(w)] != u32::MAX {
                    continue;
                }
                count[idx(w)] = c + 1;
                via[idx(w)] = imm;
                queue.push_back(w);
            }
        }
        FixupPlanner { imms: imms.to_vec(), lo, hi, count, via }
    }

    pub fn for_catalog(catalog: &Catalog) -> FixupPlanner {
        FixupPlanner::new(&sp_increments(catalog))
    }

    pub fn immediates(&self) -> &[i32] {
        &self.imms
    }

    fn exact(&self, total: i64) -> Option<Vec<i32>> {
        if total % 16 != 0 || total < self.lo || total > self.hi {
            return None;
        }
        let idx = |v: i64| ((v - self.lo) / 16) as usize;
        if self.count[idx(total)] == u32::MAX {
            return None;
        }
        let mut out = Vec::new();
        let mut v = total;
        while v != 0 {
            let imm = self.via[idx(v)];
            out.push(imm);
            v -= imm as i64;
        }
        out.sort_unstable_by(|a, b| b.cmp(a));
        Some(out)
    }

    /// Fewest increments summing exactly to `total`.
    pub fn chain(&self, total: i64) -> Option<Vec<i32>> {
        let top = *self.imms.first()? as i64;
        if total <= Self::EXACT_SPAN || top <= 0 {
            return self.exact(total);
        }
        let k = (total - Self::EXACT_SPAN + top - 1) / top;
        let mut rest = self.exact(total - k * top)?;
        let mut out = vec![top as i32; k as usize];
        out.append(&mut rest);
        Some(out)
    }

    /// Chain covering `distance` plus a sled of at most 16 bytes, with the fewest increments.
    pub fn plan(&self, distance: i64) -> Option<FixupChain> {
        let s0 = (-distance).rem_euclid(16);
        let sleds = if s0 == 0 { vec![0, 16] } else { vec![s0] };
        sleds
            .into_iter()
            .filter_map(|s| self.chain(distance + s).map(|c| (c, s)))
            .min_by_key(|(c, s)| (c.len(), *s))
            .map(|(imms, s)| FixupChain { imms, nopsled_len: s as usize, total_delta: distance + s })
    }
}

/// Fixup chain for `distance` bytes between the link value and the store base.
pub fn build_fixup(planner: &FixupPlanner, distance: i64) -> Result<FixupChain> {
    planner.plan(distance).ok_or_else(|| Error::OutOfRange(format!("fixup distance {distance}")))
}

/// Offsets for storing `count` chunks of `stride` bytes contiguously from
/// sp+1920 on; `true` marks a 16-byte sp bump before that store.
pub fn store_schedule(count: usize, stride: i32) -> Vec<(bool, i32)> {
    let mut bumps = 0;
    (0..count as i32)
        .map(|i| {
            let mut off = STORE_BASE + stride * i - BUMP * bumps;
            let bump = off > STORE_MAX;
            if bump {
                bumps += 1;
                off -= BUMP;
            }
            debug_assert!(off <= STORE_MAX);
            (bump, off)
        })
        .collect()
}

/// Stage-1 code around the fixup, plus data to place in the pool at offsets from the link value.
#[derive(Clone, Debug, Default)]
pub struct UnpackerCode {
    pub pre: Vec<InstrWord>,
    pub post: Vec<InstrWord>,
    pub pool: Vec<(usize, Vec<u8>)>,
    /// Total sp bumps made by `post`.
    pub bumps: u32,
}

/// `sd`-based unpacker: each halfword goes through its table sequence and one store.
pub fn build_unpacker_hash(asm: &Asm, stage2: &[u8], table: &LoadTable) -> Result<UnpackerCode> {
    if stage2.len() % 2 != 0 {
        return Err(Error::OutOfRange("odd stage 2 length".into()));
    }
    let mut post = Vec::new();
    let sched = store_schedule(stage2.len() / 2, 2);
    for (pair, &(bump, off)) in stage2.chunks(2).zip(&sched) {
        let v = u16::from_le_bytes([pair[0], pair[1]]);
        let seq = table.lookup(v).ok_or(Error::UnloadableValue(v))?;
        if bump {
            post.push(asm.sp_bump(BUMP)?);
        }
        post.extend_from_slice(&seq.instrs);
        post.push(asm.pick(op(Mnemonic::Sd).rs1(Reg::SP).rs2(seq.target_reg).imm(off))?);
    }
    let bumps = sched.iter().filter(|s| s.0).count() as u32;
    Ok(UnpackerCode { pre: Vec::new(), post, pool: Vec::new(), bumps })
}

/// Pool words for `/`: their AND, shifted right by 12, holds `c.j .+12` in bits 32..48.
pub const SLASH_Q0: [u8; 8] = *b"BBBBB03J";
pub const SLASH_Q2: [u8; 8] = *b"BBBBBPCJ";
pub const SLASH_Q2_OFFSET: usize = 16;

/// The 64-bit word planted in every block before its instruction is or-ed in.
pub fn block_jump_word() -> u64 {
    let q = u64::from_le_bytes(SLASH_Q0) & u64::from_le_bytes(SLASH_Q2);
    (q >> 12) & !0xFFFF_FFFF
}

pub fn fence_i_seq(catalog: &Catalog) -> Option<LoadSeq> {
    find_exact32(catalog, &TableConfig::for_variant(Variant::Slash), 0x100F)
}

/// Load sequence per stage-2 block. The upper half of a 16-bit block is
/// executed, so it must also leave the jump register alone.
pub fn slash_block_seqs(program: &Stage2Program, table: &LoadTable, fence: &LoadSeq) -> Result<Vec<LoadSeq>> {
    let fence_word = crate::isa::encode(&fence_i(), crate::isa::PreferredWidth::W32)?;
    program
        .words
        .iter()
        .map(|w| {
            if *w == fence_word {
                return Ok(fence.clone());
            }
            let v = w.value() as u16;
            let seq = table.seq_for_slash(v).ok_or(Error::UnloadableValue(v))?;
            match nop_like_writes((seq.full_value >> 16) as u16) {
                Some(Some(r)) if r == program.regs.xj => Err(Error::RegisterConflict(r)),
                _ => Ok(seq.clone()),
            }
        })
        .collect()
}

/// `amoor`-based unpacker writing one stage-2 instruction per 16-byte block.
/// The preamble builds the block word in tp from the two pool words at sp.
pub fn build_unpacker_slash(asm: &Asm, program: &Stage2Program, table: &LoadTable, fence: &LoadSeq) -> Result<UnpackerCode> {
    if program.layout != Layout::Blocks {
        return Err(Error::OutOfRange("slash unpacker needs the block layout".into()));
    }
    let seqs = slash_block_seqs(program, table, fence)?;
    let amo = |m: Mnemonic, rd: Reg, rs2: Reg| asm.pick(op(m).rd(rd).rs1(Reg::SP).rs2(rs2));
    let pre = vec![
        asm.pick(DecodedInstr { compressed: true, ..op(Mnemonic::Ld).rd(Reg::TP).rs1(Reg::SP).imm(SLASH_Q2_OFFSET as i32) })?,
        amo(Mnemonic::AmoandD, Reg::T1, Reg::TP)?,
        amo(Mnemonic::AmoandD, Reg::T1, Reg::TP)?,
        asm.pick(op(Mnemonic::Li).rd(Reg::S6).imm(12))?,
        asm.pick(op(Mnemonic::Sra).rd(Reg::TP).rs1(Reg::T1).rs2(Reg::S6))?,
        amo(Mnemonic::AmoandD, Reg::ZERO, Reg::S4)?,
        amo(Mnemonic::AmoorD, Reg::ZERO, Reg::TP)?,
        amo(Mnemonic::AmoandW, Reg::T5, Reg::S4)?,
        amo(Mnemonic::AmoorD, Reg::TP, Reg::S4)?,
    ];
    let mut post = Vec::new();
    for (i, seq) in seqs.iter().enumerate() {
        if i > 0 {
            post.push(asm.sp_bump(BUMP)?);
        }
        post.push(amo(Mnemonic::AmoandD, Reg::ZERO, Reg::S4)?);
        post.push(amo(Mnemonic::AmoorD, Reg::ZERO, Reg::TP)?);
        post.extend_from_slice(&seq.instrs);
        post.push(amo(Mnemonic::AmoorW, Reg::T5, seq.target_reg)?);
    }
    let pool = vec![(0, SLASH_Q0.to_vec()), (SLASH_Q2_OFFSET, SLASH_Q2.to_vec())];
    Ok(UnpackerCode { pre, post, pool, bumps: seqs.len().saturating_sub(1) as u32 })
}

/// Where one `'` constant lives and how it is loaded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TickSlot {
    pub reg: Reg,
    pub load: InstrWord,
    /// Offset from the link value.
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TickPlan {
    pub b: TickSlot,
    pub a: Vec<TickSlot>,
    pub c: Vec<TickSlot>,
}

/// Register holding each fmadd result before it is stored.
pub const TICK_RESULT: Reg = Reg::F(20);
const DYN: u8 = 7;

/// Picks registers and pool offsets for `b`, the shared `a`s and the `c`s so
/// that every load is a compressed `fld` and every `fmadd.d` is charset-valid.
/// Registers are chosen first, then non-overlapping slots for them.
pub fn plan_tick(asm: &Asm, equations: usize) -> Result<TickPlan> {
    let fmadds: HashSet<(Reg, Reg, Reg)> = asm
        .catalog
        .find(Mnemonic::FmaddD, |d| d.rd == Some(TICK_RESULT) && d.rm == Some(DYN))
        .map(|(_, d)| (d.rs1.unwrap(), d.rs2.unwrap(), d.rs3.unwrap()))
        .collect();
    let mut loads: Vec<TickSlot> = asm
        .catalog
        .find(Mnemonic::Fld, |d| d.compressed && matches!(d.rs1, Some(Reg::SP) | Some(Reg::A4)) && d.rd != Some(TICK_RESULT))
        .map(|(w, d)| TickSlot { reg: d.rd.unwrap(), load: *w, offset: d.imm.unwrap() as usize })
        .collect();
    loads.sort_by_key(|s| (s.reg.index(), s.offset, s.load.value()));
    let mut regs: Vec<Reg> = loads.iter().map(|s| s.reg).collect();
    regs.dedup();
    // Role per position: b, then each a_k followed by its c's.
    let mut roles = vec![Role::B];
    for k in 0..equations.div_ceil(2) {
        roles.push(Role::A);
        for _ in 2 * k..(2 * k + 2).min(equations) {
            roles.push(Role::C(k));
        }
    }
    let search = TickSearch { roles: &roles, regs: &regs, loads: &loads, fmadds: &fmadds };
    let mut picked = Vec::new();
    let mut a_pos = Vec::new();
    let slots = search.regs_dfs(&mut picked, &mut a_pos).ok_or_else(|| Error::NoEncoding("fld/fmadd.d register plan".into()))?;
    let mut plan = TickPlan { b: slots[0], a: Vec::new(), c: Vec::new() };
    for (role, slot) in roles.iter().zip(&slots).skip(1) {
        match role {
            Role::C(_) => plan.c.push(*slot),
            _ => plan.a.push(*slot),
        }
    }
    Ok(plan)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    B,
    A,
    /// A `c` using the k-th `a`.
    C(usize),
}

struct TickSearch<'a> {
    roles: &'a [Role],
    regs: &'a [Reg],
    loads: &'a [TickSlot],
    fmadds: &'a HashSet<(Reg, Reg, Reg)>,
}

impl TickSearch<'_> {
    fn regs_dfs(&self, picked: &mut Vec<Reg>, a_pos: &mut Vec<usize>) -> Option<Vec<TickSlot>> {
        let depth = picked.len();
        if depth == self.roles.len() {
            let mut slots = Vec::new();
            return self.slots_dfs(picked, &mut slots).then_some(slots);
        }
        for &r in self.regs {
            if picked.contains(&r) {
                continue;
            }
            let ok = match self.roles[depth] {
                Role::B => self.fmadds.iter().any(|t| t.1 == r),
                Role::A => self.fmadds.iter().any(|t| t.0 == r && t.1 == picked[0]),
                Role::C(k) => self.fmadds.contains(&(picked[a_pos[k]], picked[0], r)),
            };
            if !ok {
                continue;
            }
            let is_a = self.roles[depth] == Role::A;
            if is_a {
                a_pos.push(depth);
            }
            picked.push(r);
            if let Some(s) = self.regs_dfs(picked, a_pos) {
                return Some(s);
            }
            picked.pop();
            if is_a {
                a_pos.pop();
            }
        }
        None
    }

    fn slots_dfs(&self, regs: &[Reg], chosen: &mut Vec<TickSlot>) -> bool {
        let Some(&r) = regs.get(chosen.len()) else { return true };
        for s in self.loads.iter().filter(|s| s.reg == r) {
            if chosen.iter().any(|c| c.offset < s.offset + 8 && s.offset < c.offset + 8) {
                continue;
            }
            chosen.push(*s);
            if self.slots_dfs(regs, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
}

/// fmadd/fsd unpacker: loads every constant, then computes and stores each
/// `r` so that its six low bytes land contiguously.
pub fn build_unpacker_tick(asm: &Asm, plan: &TickPlan, constants: &SolverResult) -> Result<UnpackerCode> {
    let triples = constants.triples();
    if triples.len() != plan.c.len() || !constants.verify() {
        return Err(Error::OutOfRange("constants do not match the plan".into()));
    }
    let mut pre = vec![plan.b.load];
    let mut pool = vec![(plan.b.offset, B_BITS.to_le_bytes().to_vec())];
    for (k, a) in plan.a.iter().enumerate() {
        pre.push(a.load);
        pool.push((a.offset, constants.pairs[k].a.to_le_bytes().to_vec()));
        for i in 2 * k..(2 * k + 2).min(plan.c.len()) {
            pre.push(plan.c[i].load);
            pool.push((plan.c[i].offset, triples[i].c.to_bits().to_le_bytes().to_vec()));
        }
    }
    let mut post = Vec::new();
    let sched = store_schedule(triples.len(), crate::fp::solver::GROUP as i32);
    for (i, &(bump, off)) in sched.iter().enumerate() {
        if bump {
            post.push(asm.sp_bump(BUMP)?);
        }
        post.push(asm.pick(
            op(Mnemonic::FmaddD).rd(TICK_RESULT).rs1(plan.a[i / 2].reg).rs2(plan.b.reg).rs3(plan.c[i].reg).rm(DYN),
        )?);
        post.push(asm.pick(op(Mnemonic::Fsd).rs1(Reg::SP).rs2(TICK_RESULT).imm(off))?);
    }
    let bumps = sched.iter().filter(|s| s.0).count() as u32;
    Ok(UnpackerCode { pre, post, pool, bumps })
}
