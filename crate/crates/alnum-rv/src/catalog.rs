//! Exhaustive enumeration of charset-valid instructions, grouped by mnemonic.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Read, Write};

use rayon::prelude::*;

use crate::charset::{Charset, Variant};
use crate::isa::{decode, classify_width, DecodedInstr, InstrWord, Mnemonic, Reg, WidthClass};

pub type Entry = (InstrWord, DecodedInstr);

#[derive(Clone, Debug)]
pub struct Catalog {
    pub charset: Charset,
    pub entries: BTreeMap<Mnemonic, Vec<Entry>>,
}

/// Enumerates every 16- and 32-bit word whose bytes all lie in `charset` and keeps the valid ones.
pub fn enumerate(charset: &Charset) -> Catalog {
    let bytes = charset.bytes();
    let mut words: Vec<Entry> = Vec::new();
    for &b0 in &bytes {
        if classify_width(b0) != WidthClass::W16 {
            continue;
        }
        for &b1 in &bytes {
            let w = InstrWord::new16(u16::from_le_bytes([b0, b1])).unwrap();
            if let Some(d) = decode(w) {
                words.push((w, d));
            }
        }
    }
    let heads: Vec<(u8, u8)> = bytes
        .iter()
        .filter(|&&b0| classify_width(b0) == WidthClass::W32)
        .flat_map(|&b0| bytes.iter().map(move |&b1| (b0, b1)))
        .collect();
    let chunks: Vec<Vec<Entry>> = heads
        .par_iter()
        .map(|&(b0, b1)| {
            let mut out = Vec::new();
            for &b2 in &bytes {
                for &b3 in &bytes {
                    let w = InstrWord::new32(u32::from_le_bytes([b0, b1, b2, b3])).unwrap();
                    if let Some(d) = decode(w) {
                        out.push((w, d));
                    }
                }
            }
            out
        })
        .collect();
    words.extend(chunks.into_iter().flatten());
    let mut entries: BTreeMap<Mnemonic, Vec<Entry>> = BTreeMap::new();
    for (w, d) in words {
        entries.entry(d.mnemonic).or_default().push((w, d));
    }
    for list in entries.values_mut() {
        list.sort_by_key(|(w, _)| (w.value(), w.width()));
    }
    Catalog { charset: *charset, entries }
}

impl Catalog {
    pub fn for_variant(variant: Variant) -> Catalog {
        enumerate(&variant.charset())
    }

    pub fn get(&self, m: Mnemonic) -> &[Entry] {
        self.entries.get(&m).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn count(&self, m: Mnemonic) -> usize {
        self.get(m).len()
    }

    pub fn total(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Entry> {
        self.entries.values().flatten()
    }

    /// Entries of `m` whose decoded form satisfies `pred`.
    pub fn find<'a>(
        &'a self,
        m: Mnemonic,
        pred: impl Fn(&DecodedInstr) -> bool + 'a,
    ) -> impl Iterator<Item = &'a Entry> + 'a {
        self.get(m).iter().filter(move |(_, d)| pred(d))
    }

    /// The smallest word (compressed first) for `m` satisfying `pred`.
    pub fn first(&self, m: Mnemonic, pred: impl Fn(&DecodedInstr) -> bool) -> Option<Entry> {
        let mut best: Option<Entry> = None;
        for e in self.get(m) {
            if pred(&e.1) {
                let better = match best {
                    None => true,
                    Some(b) => (e.0.width(), e.0.value()) < (b.0.width(), b.0.value()),
                };
                if better {
                    best = Some(*e);
                }
            }
        }
        best
    }

    pub fn contains_word(&self, w: InstrWord) -> bool {
        match decode(w) {
            Some(d) => self.get(d.mnemonic).binary_search_by_key(&(w.value(), w.width()), |(x, _)| (x.value(), x.width())).is_ok(),
            None => false,
        }
    }

    pub fn stats(&self) -> BTreeMap<Mnemonic, MnemonicStats> {
        self.entries.iter().map(|(&m, list)| (m, MnemonicStats::of(list))).collect()
    }
}

/// Operand ranges reachable by one mnemonic within a catalog.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MnemonicStats {
    pub count: usize,
    pub compressed: usize,
    pub rd: BTreeSet<Reg>,
    pub rs1: BTreeSet<Reg>,
    pub rs2: BTreeSet<Reg>,
    pub rs3: BTreeSet<Reg>,
    pub imm_min: Option<i32>,
    pub imm_max: Option<i32>,
    pub imm_distinct: usize,
}

impl MnemonicStats {
    fn of(list: &[Entry]) -> MnemonicStats {
        let mut s = MnemonicStats { count: list.len(), ..Default::default() };
        let mut imms = BTreeSet::new();
        for (_, d) in list {
            s.compressed += d.compressed as usize;
            s.rd.extend(d.rd);
            s.rs1.extend(d.rs1);
            s.rs2.extend(d.rs2);
            s.rs3.extend(d.rs3);
            if let Some(v) = d.imm {
                imms.insert(v);
            }
        }
        s.imm_min = imms.first().copied();
        s.imm_max = imms.last().copied();
        s.imm_distinct = imms.len();
        s
    }
}

const MAGIC: &[u8; 4] = b"ARVC";
const VERSION: u16 = 1;

impl Catalog {
    /// Record layout (little-endian): magic "ARVC", u16 version, u8 variant id
    /// (0xFF for a custom set), 32-byte charset bitmap, u32 group count; then per
    /// group a u8-length-prefixed mnemonic name, u32 word count and `count`
    /// records of (u8 width in bytes, u32 value).
    pub fn write_to(&self, out: &mut impl Write) -> io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&[self.charset.variant().map_or(0xFF, Variant::id)])?;
        let mut bitmap = [0u8; 32];
        for b in self.charset.bytes() {
            bitmap[b as usize / 8] |= 1 << (b % 8);
        }
        out.write_all(&bitmap)?;
        out.write_all(&(self.entries.len() as u32).to_le_bytes())?;
        for (m, list) in &self.entries {
            let name = m.name().as_bytes();
            out.write_all(&[name.len() as u8])?;
            out.write_all(name)?;
            out.write_all(&(list.len() as u32).to_le_bytes())?;
            for (w, _) in list {
                out.write_all(&[w.len() as u8])?;
                out.write_all(&w.value().to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(input: &mut impl Read) -> io::Result<Catalog> {
        let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
        let mut head = [0u8; 4 + 2 + 1 + 32 + 4];
        input.read_exact(&mut head)?;
        if &head[..4] != MAGIC {
            return Err(bad("not a catalog file"));
        }
        if u16::from_le_bytes([head[4], head[5]]) != VERSION {
            return Err(bad("unsupported catalog version"));
        }
        let variant = Variant::from_id(head[6]);
        let mut charset = match variant {
            Some(v) => v.charset(),
            None => Charset::empty(),
        };
        if variant.is_none() {
            for b in 0..=255u8 {
                if head[7 + b as usize / 8] >> (b % 8) & 1 == 1 {
                    charset.insert(b);
                }
            }
        }
        let groups = u32::from_le_bytes(head[39..43].try_into().unwrap());
        let mut entries = BTreeMap::new();
        for _ in 0..groups {
            let mut len = [0u8; 1];
            input.read_exact(&mut len)?;
            let mut name = vec![0u8; len[0] as usize];
            input.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| bad("bad mnemonic"))?;
            let m = Mnemonic::from_name(&name).ok_or_else(|| bad("unknown mnemonic"))?;
            let mut count = [0u8; 4];
            input.read_exact(&mut count)?;
            let count = u32::from_le_bytes(count) as usize;
            let mut list = Vec::with_capacity(count);
            let mut rec = [0u8; 5];
            for _ in 0..count {
                input.read_exact(&mut rec)?;
                let v = u32::from_le_bytes(rec[1..].try_into().unwrap());
                let w = match rec[0] {
                    2 => InstrWord::new16(v as u16),
                    4 => InstrWord::new32(v),
                    _ => None,
                }
                .ok_or_else(|| bad("bad word"))?;
                let d = decode(w).filter(|d| d.mnemonic == m).ok_or_else(|| bad("word does not decode"))?;
                list.push((w, d));
            }
            entries.insert(m, list);
        }
        Ok(Catalog { charset, entries })
    }
}
