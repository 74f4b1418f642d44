//! The stage-2 decoder loop and the nibble codec it inverts.
//!
//! Each payload byte `A` becomes two alphanumeric bytes `L, K` (in that memory
//! order) with `A_lo = L_lo ^ L_hi` and `A_hi = K_lo ^ L_hi`. The loop reads a
//! halfword `K:L`, xors it with itself shifted right by four and keeps the low byte.

use crate::charset::{is_alnum, Variant};
use crate::error::{Error, Result};
use crate::isa::{encode, DecodedInstr, InstrWord, Mnemonic, PreferredWidth, Reg};

pub const MAX_PAYLOAD: usize = 512;

/// Where the stage-2 decoder finds its encoded input, relative to its start pointer.
pub const READ_AHEAD: i64 = 4;

pub fn decode_pair(k: u8, l: u8) -> u8 {
    let lo = (l ^ (l >> 4)) & 0xF;
    let hi = (k ^ (l >> 4)) & 0xF;
    hi << 4 | lo
}

const L_HI: [u8; 5] = [4, 6, 5, 7, 3];
const K_HI: [u8; 5] = [4, 5, 6, 7, 3];

/// Returns `(K, L)`. The closed form (`L_hi = 4` unless `A_lo = 4`, then 6;
/// `K_hi = 4` unless `A_lo = 0`, then 5) is tried first; when it yields a
/// non-alphanumeric byte the remaining high nibbles are scanned, `K_hi` outermost.
pub fn encode_byte(a: u8) -> (u8, u8) {
    let (a_lo, a_hi) = (a & 0xF, a >> 4);
    let lh0 = if a_lo != 4 { 4 } else { 6 };
    let kh0 = if a_lo != 0 { 4 } else { 5 };
    let ls = std::iter::once(lh0).chain(L_HI);
    for kh in std::iter::once(kh0).chain(K_HI) {
        for lh in ls.clone() {
            let l = lh << 4 | (a_lo ^ lh);
            let k = kh << 4 | (a_hi ^ lh);
            if is_alnum(k) && is_alnum(l) {
                return (k, l);
            }
        }
    }
    unreachable!("every byte has an alphanumeric encoding")
}

pub fn encode_payload(p: &[u8]) -> Result<Vec<u8>> {
    if p.len() > MAX_PAYLOAD {
        return Err(Error::PayloadTooLarge { len: p.len(), max: MAX_PAYLOAD });
    }
    let mut out = Vec::with_capacity(2 * p.len());
    for &a in p {
        let (k, l) = encode_byte(a);
        out.push(l);
        out.push(k);
    }
    Ok(out)
}

pub fn decode_payload(enc: &[u8]) -> Vec<u8> {
    enc.chunks_exact(2).map(|c| decode_pair(c[1], c[0])).collect()
}

/// How stage 2 is laid out in memory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layout {
    /// Contiguous, sp-relative, 40 bytes (`#`).
    Flat,
    /// Contiguous, compressed except `fence.i`, 42 bytes (`'`).
    Compact,
    /// The compact program spread one instruction per 16-byte block (`/`).
    Blocks,
}

impl Layout {
    pub fn for_variant(v: Variant) -> Layout {
        match v {
            Variant::Slash => Layout::Blocks,
            Variant::Tick => Layout::Compact,
            _ => Layout::Flat,
        }
    }
}

pub const BLOCK: i32 = 16;

/// Register roles. `xn` is the end pointer (flat) or the iteration counter
/// (compact); `xj` holds the jump target (compact only); `base` is what the
/// start pointer is computed from (sp for flat, the saved link otherwise).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Stage2Regs {
    pub xp: Reg,
    pub xq: Reg,
    pub xs: Reg,
    pub xt: Reg,
    pub xn: Reg,
    pub xj: Reg,
    pub base: Reg,
}

/// Instruction ordering choices: which permutation of the three init units
/// (compact only) and after how many loop instructions `XP` is advanced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    pub init_order: u8,
    pub inc_after: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Stage2Params {
    /// Flat: offset from sp to the decode start. Unused otherwise (start = base + 4096).
    pub offset: i32,
    /// Number of bytes the loop decodes.
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage2Program {
    pub layout: Layout,
    pub regs: Stage2Regs,
    pub shape: Shape,
    pub params: Stage2Params,
    pub instrs: Vec<DecodedInstr>,
    pub words: Vec<InstrWord>,
    pub bytes: Vec<u8>,
}

/// Offset of the decode start from `base` in the compact layouts.
pub const COMPACT_START: i64 = 4096;

/// Splits a compact loop count into `k << s` with `1 <= k <= 31`, `1 <= s`.
pub fn count_split(n: usize) -> Option<(i32, i32)> {
    (1..=31).find_map(|s| {
        let k = n >> s;
        (n & ((1 << s) - 1) == 0 && (1..=31).contains(&k)).then_some((k as i32, s))
    })
}

/// Smallest count `>= len` the compact init can express.
pub fn padded_len(len: usize) -> usize {
    (len.max(2)..).find(|&n| count_split(n).is_some()).unwrap()
}

const INIT_ORDERS: [[u8; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn c(d: DecodedInstr) -> DecodedInstr {
    DecodedInstr { compressed: true, ..d }
}

fn op(m: Mnemonic) -> DecodedInstr {
    DecodedInstr::new(m)
}

pub fn fence_i() -> DecodedInstr {
    op(Mnemonic::FenceI).rd(Reg::ZERO).rs1(Reg::ZERO).imm(0)
}

impl Stage2Regs {
    pub fn default_for(layout: Layout) -> Stage2Regs {
        match layout {
            Layout::Flat => Stage2Regs {
                xp: Reg::S0,
                xq: Reg::S1,
                xs: Reg::A0,
                xt: Reg::A1,
                xn: Reg::RA,
                xj: Reg::ZERO,
                base: Reg::SP,
            },
            _ => Stage2Regs {
                xp: Reg::S0,
                xq: Reg::S1,
                xs: Reg::A0,
                xt: Reg::A1,
                xn: Reg::A2,
                xj: Reg::RA,
                base: Reg::A4,
            },
        }
    }

    fn check(&self, layout: Layout) -> Result<()> {
        let mut used = vec![self.base, self.xp, self.xq, self.xs, self.xt, self.xn];
        if layout != Layout::Flat {
            used.push(self.xj);
        }
        for (i, r) in used.iter().enumerate() {
            if used[..i].contains(r) || (*r == Reg::ZERO) || (i > 0 && *r == Reg::SP) {
                return Err(Error::RegisterConflict(*r));
            }
        }
        Ok(())
    }
}

/// Builds one stage-2 instance.
pub fn build_stage2(layout: Layout, regs: Stage2Regs, shape: Shape, params: Stage2Params) -> Result<Stage2Program> {
    regs.check(layout)?;
    let Stage2Regs { xp, xq, xs, xt, xn, xj, base } = regs;
    let mut body = vec![
        c(op(Mnemonic::Lw).rd(xs).rs1(xp).imm(READ_AHEAD as i32)),
        c(op(Mnemonic::Mv).rd(xt).rs2(xs)),
        c(op(Mnemonic::Srli).rd(xt).rs1(xt).imm(4)),
        c(op(Mnemonic::Xor).rd(xs).rs1(xs).rs2(xt)),
        c(op(Mnemonic::Sw).rs1(xq).rs2(xs).imm(0)),
        c(op(Mnemonic::Addi).rd(xq).rs1(xq).imm(1)),
    ];
    if layout != Layout::Flat {
        body.push(c(op(Mnemonic::Addi).rd(xn).rs1(xn).imm(-1)));
    }
    let inc = shape.inc_after as usize;
    if inc == 0 || inc > body.len() {
        return Err(Error::OutOfRange(format!("increment placement {inc}")));
    }
    body.insert(inc, c(op(Mnemonic::Addi).rd(xp).rs1(xp).imm(2)));
    let mut instrs = Vec::new();
    match layout {
        Layout::Flat => {
            if shape.init_order != 0 {
                return Err(Error::OutOfRange("flat stage 2 has one init order".into()));
            }
            if params.len == 0 || params.len > 2047 {
                return Err(Error::OutOfRange(format!("length {}", params.len)));
            }
            instrs.push(op(Mnemonic::Addi).rd(xp).rs1(base).imm(params.offset));
            instrs.push(c(op(Mnemonic::Mv).rd(xq).rs2(xp)));
            instrs.push(op(Mnemonic::Addi).rd(xn).rs1(xp).imm(params.len as i32));
            instrs.push(fence_i());
            let back = -2 * body.len() as i32;
            instrs.extend(body);
            instrs.push(op(Mnemonic::Bltu).rs1(xq).rs2(xn).imm(back));
            instrs.push(fence_i());
            instrs.push(op(Mnemonic::Jalr).rd(Reg::ZERO).rs1(base).imm(params.offset));
        }
        Layout::Compact | Layout::Blocks => {
            let (k, s) = count_split(params.len).ok_or_else(|| Error::OutOfRange(format!("count {}", params.len)))?;
            let units: [Vec<DecodedInstr>; 3] = [
                vec![
                    c(op(Mnemonic::Lui).rd(xp).imm(1)),
                    c(op(Mnemonic::Add).rd(xp).rs1(xp).rs2(base)),
                    c(op(Mnemonic::Mv).rd(xq).rs2(xp)),
                ],
                vec![c(op(Mnemonic::Lui).rd(xj).imm(1)), c(op(Mnemonic::Add).rd(xj).rs1(xj).rs2(base))],
                vec![c(op(Mnemonic::Li).rd(xn).imm(k)), c(op(Mnemonic::Slli).rd(xn).rs1(xn).imm(s))],
            ];
            let order = INIT_ORDERS.get(shape.init_order as usize).ok_or_else(|| Error::OutOfRange("init order".into()))?;
            for &u in order {
                instrs.extend(units[u as usize].iter().copied());
            }
            instrs.push(fence_i());
            let step = if layout == Layout::Blocks { BLOCK } else { 2 };
            let back = -step * body.len() as i32;
            instrs.extend(body);
            instrs.push(c(op(Mnemonic::Bnez).rs1(xn).imm(back)));
            instrs.push(fence_i());
            instrs.push(c(op(Mnemonic::Jr).rs1(xj)));
        }
    }
    let mut words = Vec::with_capacity(instrs.len());
    let mut bytes = Vec::new();
    for d in &instrs {
        let width = if d.compressed { PreferredWidth::W16 } else { PreferredWidth::W32 };
        let w = encode(d, width)?;
        w.push_to(&mut bytes);
        words.push(w);
    }
    Ok(Stage2Program { layout, regs, shape, params, instrs, words, bytes })
}

impl Stage2Program {
    /// Address the decoded payload starts at, given the value of `base` at run time.
    pub fn decode_start(&self, base_value: u64) -> u64 {
        match self.layout {
            Layout::Flat => base_value.wrapping_add(self.params.offset as i64 as u64),
            _ => base_value.wrapping_add(COMPACT_START as u64),
        }
    }

    /// The little-endian halfwords of the flat serialization.
    pub fn halfwords(&self) -> Vec<u16> {
        self.bytes.chunks(2).map(|c| u16::from_le_bytes([c[0], *c.get(1).unwrap_or(&0)])).collect()
    }
}

/// A deterministic enumeration of semantically equivalent instances: register
/// renamings, init-unit orders and `XP` increment placements. Index 0 is the
/// default instance.
#[derive(Clone, Debug)]
pub struct Polymorphs {
    pub layout: Layout,
    pub params: Stage2Params,
    pub base: Reg,
    window: Vec<Reg>,
    xn_choices: Vec<Reg>,
    incs: Vec<u8>,
    orders: u8,
}

const WINDOW: [Reg; 8] = [Reg::S0, Reg::S1, Reg::A0, Reg::A1, Reg::A2, Reg::A3, Reg::A4, Reg::A5];

fn falling(n: u64, k: u64) -> u64 {
    (0..k).map(|i| n - i).product()
}

impl Polymorphs {
    pub fn new(layout: Layout, params: Stage2Params, base: Reg) -> Polymorphs {
        let window: Vec<Reg> = WINDOW.iter().copied().filter(|&r| r != base).collect();
        let (xn_choices, incs, orders) = match layout {
            Layout::Flat => {
                let xn = (1..32).map(Reg::X).filter(|&r| r != Reg::SP && r != base).collect();
                (xn, vec![5, 1, 2, 3, 4, 6], 1)
            }
            _ => {
                let xj = (1..32).map(Reg::X).filter(|&r| r != Reg::SP && r != base).collect();
                (xj, vec![5, 1, 2, 3, 4, 6, 7], 6)
            }
        };
        Polymorphs { layout, params, base, window, xn_choices, incs, orders }
    }

    fn window_roles(&self) -> u64 {
        if self.layout == Layout::Flat {
            4
        } else {
            5
        }
    }

    /// Register assignments, counting only those with distinct roles.
    pub fn renamings(&self) -> u64 {
        let w = self.window_roles();
        let outside = (self.xn_choices.len() as u64) - w;
        falling(self.window.len() as u64, w) * outside
    }

    pub fn count(&self) -> u64 {
        self.renamings() * self.orders as u64 * self.incs.len() as u64
    }

    /// The instance at `idx`, or `None` past the end.
    pub fn get(&self, idx: u64) -> Option<Stage2Program> {
        if idx >= self.count() {
            return None;
        }
        let mut i = idx;
        let inc = self.incs[(i % self.incs.len() as u64) as usize];
        i /= self.incs.len() as u64;
        let order = (i % self.orders as u64) as u8;
        i /= self.orders as u64;
        let mut pool = self.window.clone();
        let mut picked = Vec::new();
        let w = self.window_roles();
        let outside = (self.xn_choices.len() as u64) - w;
        let extra = i % outside;
        i /= outside;
        for left in (0..w).rev() {
            let per = falling(pool.len() as u64 - 1, left);
            let j = (i / per) as usize;
            i %= per;
            picked.push(pool.remove(j));
        }
        let free: Vec<Reg> = self.xn_choices.iter().copied().filter(|r| !picked.contains(r)).collect();
        let other = free[extra as usize];
        let regs = match self.layout {
            Layout::Flat => Stage2Regs {
                xp: picked[0],
                xq: picked[1],
                xs: picked[2],
                xt: picked[3],
                xn: other,
                xj: Reg::ZERO,
                base: self.base,
            },
            _ => Stage2Regs {
                xp: picked[0],
                xq: picked[1],
                xs: picked[2],
                xt: picked[3],
                xn: picked[4],
                xj: other,
                base: self.base,
            },
        };
        build_stage2(self.layout, regs, Shape { init_order: order, inc_after: inc }, self.params).ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = Stage2Program> + '_ {
        (0..self.count()).filter_map(move |i| self.get(i))
    }
}
