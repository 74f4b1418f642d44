//! Shortest charset-valid sequences that put a chosen 16-bit value in a register.
//!
//! Sequences follow one grammar: `lui Y` (or `c.lui`), then optionally
//! `c.li Z,k; sra T,Y,Z`, then up to four `c.addiw T`. Candidates are ranked by
//! instruction count, then byte length, then the word values in order.

use std::collections::{BTreeSet, HashMap};
use std::io::{self, Read, Write};

use rayon::prelude::*;

use crate::catalog::Catalog;
use crate::charset::Variant;
use crate::isa::{decode, DecodedInstr, InstrWord, Mnemonic, Reg};

const MAX_WORDS: usize = 8;
const MAX_SETUP_ADDIW: usize = 1;

/// What the table is built for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableConfig {
    /// Registers a sequence may leave its value in.
    pub targets: Vec<Reg>,
    /// Registers `c.li` may prepare as an `sra` shift amount.
    pub shift_regs: Vec<Reg>,
    /// Registers no sequence may write.
    pub preserve: Vec<Reg>,
    pub max_addiw: usize,
    /// When set, bits 16..32 of the loaded value must form a nop-like
    /// instruction not writing any of these registers.
    pub nop_guard: Option<Vec<Reg>>,
}

impl TableConfig {
    pub fn for_variant(variant: Variant) -> TableConfig {
        match variant {
            Variant::Slash => TableConfig {
                targets: vec![Reg::T1, Reg::S6],
                shift_regs: vec![Reg::S2, Reg::S6],
                preserve: vec![Reg::ZERO, Reg::SP, Reg::TP, Reg::S4, Reg::A4],
                max_addiw: 4,
                nop_guard: Some(slash_nop_guard()),
            },
            _ => TableConfig {
                targets: vec![Reg::TP, Reg::T1, Reg::S4, Reg::S6],
                shift_regs: vec![Reg::S2, Reg::S4, Reg::S6],
                preserve: vec![Reg::ZERO, Reg::SP],
                max_addiw: 4,
                nop_guard: None,
            },
        }
    }

    fn mask(&self) -> u64 {
        if self.nop_guard.is_some() {
            0xFFFF_FFFF
        } else {
            0xFFFF
        }
    }
}

/// Registers the upper half of a slash-table word must leave alone: sp and the
/// compressed-register window used by the decoder loop, which holds the saved link.
pub fn slash_nop_guard() -> Vec<Reg> {
    let mut v = vec![Reg::SP];
    v.extend((8..16).map(Reg::X));
    v
}

/// Registers written by a 16-bit word executed as filler, or `None` when the
/// word is not harmless filler (memory, control flow, sp, float state).
pub fn nop_like_writes(half: u16) -> Option<Option<Reg>> {
    let w = InstrWord::new16(half)?;
    let d = decode(w)?;
    use Mnemonic::*;
    match d.mnemonic {
        Nop | Hint => Some(None),
        Addi | Addiw | Li | Lui | Slli | Mv | Add if d.rd != Some(Reg::SP) => Some(d.int_dest()),
        _ => None,
    }
}

pub fn is_nop_like(half: u16, guard: &[Reg]) -> bool {
    match nop_like_writes(half) {
        Some(None) => true,
        Some(Some(r)) => !guard.contains(&r),
        None => false,
    }
}

/// Ranking key; `words` is zero-padded past `count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Key {
    count: u8,
    bytes: u8,
    words: [u32; MAX_WORDS],
}

#[derive(Clone, Copy, Debug)]
struct Cand {
    key: Key,
    target: Reg,
    clobber: [Option<Reg>; 2],
    value: u64,
}

impl Cand {
    fn better(&self, other: &Cand) -> bool {
        (self.key, self.target) < (other.key, other.target)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadSeq {
    pub target_reg: Reg,
    pub target16: u16,
    pub instrs: Vec<InstrWord>,
    pub clobbers: BTreeSet<Reg>,
    pub full_value: u64,
}

impl LoadSeq {
    pub fn len_bytes(&self) -> usize {
        self.instrs.iter().map(|w| w.len()).sum()
    }

    pub fn bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for w in &self.instrs {
            w.push_to(&mut out);
        }
        out
    }

    pub fn decoded(&self) -> Vec<DecodedInstr> {
        self.instrs.iter().map(|&w| decode(w).expect("table words decode")).collect()
    }

    fn from_cand(c: &Cand) -> LoadSeq {
        let instrs: Vec<InstrWord> = c.key.words[..c.key.count as usize].iter().map(|&v| word_of(v)).collect();
        let mut clobbers: BTreeSet<Reg> = c.clobber.iter().flatten().copied().collect();
        clobbers.insert(c.target);
        LoadSeq { target_reg: c.target, target16: c.value as u16, instrs, clobbers, full_value: c.value }
    }
}

fn word_of(v: u32) -> InstrWord {
    if v & 3 == 3 {
        InstrWord::new32(v).unwrap()
    } else {
        InstrWord::new16(v as u16).unwrap()
    }
}

fn lui_value(imm: i32) -> u64 {
    ((imm as u32) << 12) as i32 as i64 as u64
}

fn sext32(v: u64) -> u64 {
    v as u32 as i32 as i64 as u64
}

/// Building blocks extracted from a catalog.
struct Parts {
    /// (dest, imm field, word) for lui and c.lui.
    lui: Vec<(Reg, i32, InstrWord)>,
    /// Best shift-amount setup (`c.li Z,k`, then up to `MAX_SETUP_ADDIW` `c.addiw Z`) per (Z, amount).
    setup: HashMap<(Reg, u32), Vec<InstrWord>>,
    /// Best `sra T,Y,Z` word per (T, Y, Z).
    sra: HashMap<(Reg, Reg, Reg), InstrWord>,
    /// addiw words per target, ascending by word value.
    addiw: HashMap<Reg, Vec<(i32, InstrWord)>>,
}

fn better_word(a: InstrWord, b: InstrWord) -> bool {
    (a.len(), a.value()) < (b.len(), b.value())
}

fn parts(catalog: &Catalog, cfg: &TableConfig) -> Parts {
    let free = |r: Option<Reg>| r.map_or(false, |r| !cfg.preserve.contains(&r));
    let mut lui = Vec::new();
    for (w, d) in catalog.get(Mnemonic::Lui) {
        if free(d.rd) {
            lui.push((d.rd.unwrap(), d.imm.unwrap(), *w));
        }
    }
    let mut sra: HashMap<(Reg, Reg, Reg), InstrWord> = HashMap::new();
    for (w, d) in catalog.get(Mnemonic::Sra) {
        let (t, y, z) = (d.rd.unwrap(), d.rs1.unwrap(), d.rs2.unwrap());
        if cfg.targets.contains(&t) && cfg.shift_regs.contains(&z) && free(Some(y)) && free(Some(t)) {
            let e = sra.entry((t, y, z)).or_insert(*w);
            if better_word(*w, *e) {
                *e = *w;
            }
        }
    }
    let mut addiw: HashMap<Reg, Vec<(i32, InstrWord)>> = HashMap::new();
    for (w, d) in catalog.get(Mnemonic::Addiw) {
        let t = d.rd.unwrap();
        if w.len() == 2 && cfg.targets.contains(&t) && free(Some(t)) {
            addiw.entry(t).or_default().push((d.imm.unwrap(), *w));
        }
    }
    for v in addiw.values_mut() {
        v.sort_by_key(|(_, w)| w.value());
    }
    let mut setup: HashMap<(Reg, u32), Vec<InstrWord>> = HashMap::new();
    let mut offer = |z: Reg, k: i64, words: Vec<InstrWord>| {
        let e = setup.entry((z, (k & 63) as u32)).or_insert_with(|| words.clone());
        if key_of(&words) < key_of(e) {
            *e = words;
        }
    };
    for (w, d) in catalog.get(Mnemonic::Li) {
        let z = d.rd.unwrap();
        if !cfg.shift_regs.contains(&z) || !free(Some(z)) {
            continue;
        }
        let k = d.imm.unwrap() as i64;
        offer(z, k, vec![*w]);
        let steps: Vec<(i32, InstrWord)> = catalog
            .find(Mnemonic::Addiw, |a| a.rd == Some(z) && a.compressed)
            .map(|(aw, a)| (a.imm.unwrap(), *aw))
            .collect();
        let mut frontier = vec![(k, vec![*w])];
        for _ in 0..MAX_SETUP_ADDIW {
            let mut next = Vec::new();
            for (k0, ws) in &frontier {
                for &(i, aw) in &steps {
                    let mut ws = ws.clone();
                    ws.push(aw);
                    let k1 = (*k0 + i as i64) as i32 as i64;
                    offer(z, k1, ws.clone());
                    next.push((k1, ws));
                }
            }
            frontier = next;
        }
    }
    Parts { lui, setup, sra, addiw }
}

fn key_of(words: &[InstrWord]) -> Key {
    let mut k = Key { count: words.len() as u8, bytes: 0, words: [0; MAX_WORDS] };
    for (i, w) in words.iter().enumerate() {
        k.bytes += w.len() as u8;
        k.words[i] = w.value();
    }
    k
}

/// Every prefix `lui` or `lui; c.li; sra`, as (low bits, candidate), keeping the best per low value and target.
fn bases(p: &Parts, cfg: &TableConfig) -> Vec<(Reg, HashMap<u64, Cand>)> {
    let mask = cfg.mask();
    cfg.targets
        .par_iter()
        .map(|&t| {
            let mut best: HashMap<u64, Cand> = HashMap::new();
            let mut offer = |c: Cand| {
                let e = best.entry(c.value & mask).or_insert(c);
                if c.better(e) {
                    *e = c;
                }
            };
            for &(y, imm, w) in &p.lui {
                if y == t {
                    offer(Cand { key: key_of(&[w]), target: t, clobber: [None, None], value: lui_value(imm) });
                }
            }
            let mut shifts: Vec<(Reg, Reg, &[InstrWord], u32, InstrWord)> = Vec::new();
            for ((z, k), ws) in &p.setup {
                for (&(tt, y, zz), &sw) in &p.sra {
                    if tt == t && zz == *z && y != *z {
                        shifts.push((y, *z, ws, *k, sw));
                    }
                }
            }
            for &(y, imm, lw) in &p.lui {
                for &(yy, z, ws, k, sw) in &shifts {
                    if yy != y {
                        continue;
                    }
                    let v = ((lui_value(imm) as i64) >> k) as u64;
                    let mut words = vec![lw];
                    words.extend_from_slice(ws);
                    words.push(sw);
                    offer(Cand { key: key_of(&words), target: t, clobber: [Some(y), Some(z)], value: v });
                }
            }
            (t, best)
        })
        .collect()
}

/// For each sum reachable with exactly `j` addiw words, the lexicographically smallest word sequence.
fn addiw_sums(words: &[(i32, InstrWord)], max: usize) -> Vec<Vec<(i32, Vec<InstrWord>)>> {
    let mut reach: Vec<BTreeSet<i32>> = vec![BTreeSet::from([0])];
    for j in 1..=max {
        let next: BTreeSet<i32> = reach[j - 1].iter().flat_map(|s| words.iter().map(move |(i, _)| s + i)).collect();
        reach.push(next);
    }
    let mut out = vec![vec![(0, Vec::new())]];
    for j in 1..=max {
        let mut level = Vec::new();
        for &s in &reach[j] {
            let mut seq = Vec::with_capacity(j);
            let mut rest = s;
            for left in (0..j).rev() {
                let &(i, w) = words.iter().find(|(i, _)| reach[left].contains(&(rest - i))).unwrap();
                seq.push(w);
                rest -= i;
            }
            level.push((s, seq));
        }
        out.push(level);
    }
    out
}

pub struct LoadTable {
    pub variant: Variant,
    pub config: TableConfig,
    entries: Vec<Option<LoadSeq>>,
    /// Guarded entries; empty unless the table has a nop guard.
    guarded: Vec<Option<LoadSeq>>,
}

type Best = Vec<Option<Cand>>;

fn offer(best: &mut Best, c: Cand) {
    let slot = &mut best[c.value as u16 as usize];
    if slot.map_or(true, |o| c.better(&o)) {
        *slot = Some(c);
    }
}

fn merge(mut a: (Best, Best), b: (Best, Best)) -> (Best, Best) {
    for (x, y) in a.0.iter_mut().zip(b.0).chain(a.1.iter_mut().zip(b.1)) {
        if let Some(y) = y {
            if x.map_or(true, |o| y.better(&o)) {
                *x = Some(y);
            }
        }
    }
    a
}

fn empty() -> (Best, Best) {
    (vec![None; 1 << 16], vec![None; 1 << 16])
}

/// Builds the table by combining every prefix with every addiw sum, keeping the
/// smallest key per value. With a nop guard, the plain entries require bits
/// 16..32 to be some 16-bit instruction and the guarded ones a nop-like one.
pub fn build_table(variant: Variant, catalog: &Catalog, cfg: &TableConfig) -> LoadTable {
    let p = parts(catalog, cfg);
    let bases = bases(&p, cfg);
    let guard = cfg.nop_guard.as_deref();
    let upper_ok: Vec<(bool, bool)> = match guard {
        Some(g) => (0..=u16::MAX)
            .map(|h| (InstrWord::new16(h).and_then(decode).is_some(), is_nop_like(h, g)))
            .collect(),
        None => Vec::new(),
    };
    let (plain, guarded) = bases
        .par_iter()
        .map(|(t, base)| {
            let sums = match p.addiw.get(t) {
                Some(ws) => addiw_sums(ws, cfg.max_addiw),
                None => vec![vec![(0, Vec::new())]],
            };
            let sums: Vec<(i32, Vec<InstrWord>)> = sums.into_iter().flatten().collect();
            let imms: Vec<Vec<i32>> =
                sums.iter().map(|(_, seq)| seq.iter().map(|w| decode(*w).unwrap().imm.unwrap()).collect()).collect();
            let list: Vec<&Cand> = base.values().collect();
            list.par_chunks(4096)
                .map(|chunk| {
                    let mut out = empty();
                    for b in chunk {
                        for ((_, seq), imms) in sums.iter().zip(&imms) {
                            let mut v = b.value;
                            for &i in imms {
                                v = sext32(v.wrapping_add(i as i64 as u64));
                            }
                            let (any, nop) = match guard {
                                Some(_) => upper_ok[(v >> 16) as u16 as usize],
                                None => (true, false),
                            };
                            if !any {
                                continue;
                            }
                            let mut key = b.key;
                            for (i, w) in seq.iter().enumerate() {
                                key.words[key.count as usize + i] = w.value();
                                key.bytes += w.len() as u8;
                            }
                            key.count += seq.len() as u8;
                            let c = Cand { key, value: v, ..**b };
                            offer(&mut out.0, c);
                            if nop {
                                offer(&mut out.1, c);
                            }
                        }
                    }
                    out
                })
                .reduce(empty, merge)
        })
        .reduce(empty, merge);
    let seqs = |v: Best| v.iter().map(|c| c.as_ref().map(LoadSeq::from_cand)).collect::<Vec<_>>();
    LoadTable {
        variant,
        config: cfg.clone(),
        entries: seqs(plain),
        guarded: if guard.is_some() { seqs(guarded) } else { Vec::new() },
    }
}

/// Shortest sequence whose low 32 bits equal `value` exactly, under the table's grammar.
pub fn find_exact32(catalog: &Catalog, cfg: &TableConfig, value: u32) -> Option<LoadSeq> {
    let p = parts(catalog, cfg);
    let cfg32 = TableConfig { nop_guard: Some(Vec::new()), ..cfg.clone() };
    let bases = bases(&p, &cfg32);
    let mut best: Option<Cand> = None;
    for (t, base) in &bases {
        let sums = match p.addiw.get(t) {
            Some(ws) => addiw_sums(ws, cfg.max_addiw),
            None => vec![vec![(0, Vec::new())]],
        };
        for level in &sums {
            for (s, seq) in level {
                let want = value.wrapping_sub(*s as u32) as u64;
                if let Some(b) = base.get(&want) {
                    let mut v = b.value;
                    let mut key = b.key;
                    for w in seq {
                        v = sext32(v.wrapping_add(decode(*w).unwrap().imm.unwrap() as i64 as u64));
                        key.words[key.count as usize] = w.value();
                        key.count += 1;
                        key.bytes += w.len() as u8;
                    }
                    let c = Cand { key, value: v, ..*b };
                    if best.map_or(true, |o| c.better(&o)) {
                        best = Some(c);
                    }
                }
            }
        }
    }
    best.map(|c| LoadSeq::from_cand(&c))
}

const MAGIC: &[u8; 4] = b"ARVT";
/// Version of the table file layout.
pub const VERSION: u16 = 1;
const RECORD: usize = 4 + 8 + 4 * MAX_WORDS;

impl LoadTable {
    pub fn lookup(&self, value: u16) -> Option<&LoadSeq> {
        self.entries[value as usize].as_ref()
    }

    /// Like `lookup`, but bits 16..32 of the loaded value also decode to a
    /// nop-like instruction under the table's guard. `None` on unguarded tables.
    pub fn seq_for_slash(&self, value: u16) -> Option<&LoadSeq> {
        self.guarded.get(value as usize)?.as_ref()
    }

    pub fn coverage(&self) -> usize {
        self.entries.iter().filter(|e| e.is_some()).count()
    }

    pub fn guarded_coverage(&self) -> usize {
        self.guarded.iter().filter(|e| e.is_some()).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LoadSeq> {
        self.entries.iter().flatten()
    }

    pub fn iter_guarded(&self) -> impl Iterator<Item = &LoadSeq> {
        self.guarded.iter().flatten()
    }

    /// Layout (little-endian): magic "ARVT", u16 version, u8 variant id, u8 guard
    /// flag, then 65536 records (twice when guarded: plain, then guarded) of 44
    /// bytes: u8 present, u8 target register index, u8 word count, u8 zero, u64
    /// full value, eight u32 words (a word whose low two bits are 11 is 32-bit,
    /// otherwise 16-bit; unused slots are 0).
    pub fn write_to(&self, out: &mut impl Write) -> io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&[self.variant.id(), self.config.nop_guard.is_some() as u8])?;
        let mut rec = [0u8; RECORD];
        for e in self.entries.iter().chain(&self.guarded) {
            rec.fill(0);
            if let Some(s) = e {
                rec[0] = 1;
                rec[1] = s.target_reg.index();
                rec[2] = s.instrs.len() as u8;
                rec[4..12].copy_from_slice(&s.full_value.to_le_bytes());
                for (i, w) in s.instrs.iter().enumerate() {
                    rec[12 + 4 * i..16 + 4 * i].copy_from_slice(&w.value().to_le_bytes());
                }
            }
            out.write_all(&rec)?;
        }
        Ok(())
    }

    pub fn read_from(input: &mut impl Read) -> io::Result<LoadTable> {
        let mut head = [0u8; 8];
        input.read_exact(&mut head)?;
        if &head[..4] != MAGIC {
            return Err(bad("not a load table"));
        }
        if u16::from_le_bytes([head[4], head[5]]) != VERSION {
            return Err(bad("unsupported table version"));
        }
        let variant = Variant::from_id(head[6]).ok_or_else(|| bad("bad variant"))?;
        let config = TableConfig::for_variant(variant);
        if config.nop_guard.is_some() != (head[7] == 1) {
            return Err(bad("table mode does not match variant"));
        }
        let entries = read_records(input)?;
        let guarded = if head[7] == 1 { read_records(input)? } else { Vec::new() };
        Ok(LoadTable { variant, config, entries, guarded })
    }
}

fn bad(m: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, m.to_string())
}

fn read_records(input: &mut impl Read) -> io::Result<Vec<Option<LoadSeq>>> {
    let mut entries = Vec::with_capacity(1 << 16);
    let mut rec = [0u8; RECORD];
    for v in 0..1u32 << 16 {
        input.read_exact(&mut rec)?;
        if rec[0] == 0 {
            entries.push(None);
            continue;
        }
        let n = rec[2] as usize;
        if n == 0 || n > MAX_WORDS {
            return Err(bad("bad word count"));
        }
        let mut instrs = Vec::with_capacity(n);
        for i in 0..n {
            let raw = u32::from_le_bytes(rec[12 + 4 * i..16 + 4 * i].try_into().unwrap());
            let w = if raw & 3 == 3 { InstrWord::new32(raw) } else { u16::try_from(raw).ok().and_then(InstrWord::new16) };
            instrs.push(w.filter(|w| decode(*w).is_some()).ok_or_else(|| bad("bad word"))?);
        }
        let full_value = u64::from_le_bytes(rec[4..12].try_into().unwrap());
        if full_value as u16 as u32 != v {
            return Err(bad("record value mismatch"));
        }
        let target_reg = Reg::X(rec[1] & 31);
        let mut clobbers = BTreeSet::from([target_reg]);
        for w in &instrs {
            if let Some(r) = decode(*w).and_then(|d| d.int_dest()) {
                clobbers.insert(r);
            }
        }
        entries.push(Some(LoadSeq { target_reg, target16: v as u16, instrs, clobbers, full_value }));
    }
    Ok(entries)
}
