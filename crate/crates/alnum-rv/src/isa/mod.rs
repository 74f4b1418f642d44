//! RV64GC instruction words: registers, mnemonics, decoding, encoding and rendering.

mod decode;
mod encode;
mod mnemonic;
mod render;

use std::fmt;

pub use decode::decode;
pub use encode::{encode, EncodeError};
pub use mnemonic::Mnemonic;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bank {
    Int,
    Float,
}

/// An architectural register. `X(n)` is an integer register, `F(n)` a float register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reg {
    X(u8),
    F(u8),
}

const X_ABI: [&str; 32] = [
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0", "a1", "a2", "a3", "a4",
    "a5", "a6", "a7", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11", "t3", "t4",
    "t5", "t6",
];

const F_ABI: [&str; 32] = [
    "ft0", "ft1", "ft2", "ft3", "ft4", "ft5", "ft6", "ft7", "fs0", "fs1", "fa0", "fa1", "fa2",
    "fa3", "fa4", "fa5", "fa6", "fa7", "fs2", "fs3", "fs4", "fs5", "fs6", "fs7", "fs8", "fs9",
    "fs10", "fs11", "ft8", "ft9", "ft10", "ft11",
];

impl Reg {
    pub const ZERO: Reg = Reg::X(0);
    pub const RA: Reg = Reg::X(1);
    pub const SP: Reg = Reg::X(2);
    pub const GP: Reg = Reg::X(3);
    pub const TP: Reg = Reg::X(4);
    pub const T0: Reg = Reg::X(5);
    pub const T1: Reg = Reg::X(6);
    pub const T2: Reg = Reg::X(7);
    pub const S0: Reg = Reg::X(8);
    pub const S1: Reg = Reg::X(9);
    pub const A0: Reg = Reg::X(10);
    pub const A1: Reg = Reg::X(11);
    pub const A2: Reg = Reg::X(12);
    pub const A3: Reg = Reg::X(13);
    pub const A4: Reg = Reg::X(14);
    pub const A5: Reg = Reg::X(15);
    pub const A6: Reg = Reg::X(16);
    pub const A7: Reg = Reg::X(17);
    pub const S2: Reg = Reg::X(18);
    pub const S3: Reg = Reg::X(19);
    pub const S4: Reg = Reg::X(20);
    pub const S5: Reg = Reg::X(21);
    pub const S6: Reg = Reg::X(22);
    pub const S7: Reg = Reg::X(23);
    pub const S8: Reg = Reg::X(24);
    pub const S10: Reg = Reg::X(26);
    pub const T3: Reg = Reg::X(28);
    pub const T5: Reg = Reg::X(30);

    pub fn index(self) -> u8 {
        match self {
            Reg::X(i) | Reg::F(i) => i,
        }
    }

    pub fn bank(self) -> Bank {
        match self {
            Reg::X(_) => Bank::Int,
            Reg::F(_) => Bank::Float,
        }
    }

    pub fn new(bank: Bank, index: u8) -> Reg {
        debug_assert!(index < 32);
        match bank {
            Bank::Int => Reg::X(index),
            Bank::Float => Reg::F(index),
        }
    }

    pub fn abi_name(self) -> &'static str {
        match self {
            Reg::X(i) => X_ABI[i as usize & 31],
            Reg::F(i) => F_ABI[i as usize & 31],
        }
    }

    pub fn from_abi_name(name: &str) -> Option<Reg> {
        if name == "fp" {
            return Some(Reg::S0);
        }
        if let Some(i) = X_ABI.iter().position(|n| *n == name) {
            return Some(Reg::X(i as u8));
        }
        F_ABI.iter().position(|n| *n == name).map(|i| Reg::F(i as u8))
    }

    /// True for x8..x15 / f8..f15, the registers reachable from 3-bit compressed fields.
    pub fn is_compressed(self) -> bool {
        (8..16).contains(&self.index())
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abi_name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Width {
    W16,
    W32,
}

impl Width {
    pub fn bytes(self) -> usize {
        match self {
            Width::W16 => 2,
            Width::W32 => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreferredWidth {
    W16,
    W32,
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WidthClass {
    W16,
    W32,
    Other,
}

/// Instruction length from the first (lowest-address) byte.
pub fn classify_width(first_byte: u8) -> WidthClass {
    if first_byte & 0b11 != 0b11 {
        WidthClass::W16
    } else if first_byte & 0b11100 != 0b11100 {
        WidthClass::W32
    } else {
        WidthClass::Other
    }
}

/// A 16- or 32-bit instruction encoding candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstrWord {
    width: Width,
    value: u32,
}

impl InstrWord {
    pub fn new16(value: u16) -> Option<InstrWord> {
        (value & 0b11 != 0b11).then_some(InstrWord { width: Width::W16, value: value as u32 })
    }

    pub fn new32(value: u32) -> Option<InstrWord> {
        (classify_width(value as u8) == WidthClass::W32)
            .then_some(InstrWord { width: Width::W32, value })
    }

    /// Reads one instruction from the start of `bytes`.
    pub fn from_bytes(bytes: &[u8]) -> Option<InstrWord> {
        match classify_width(*bytes.first()?) {
            WidthClass::W16 if bytes.len() >= 2 => {
                InstrWord::new16(u16::from_le_bytes([bytes[0], bytes[1]]))
            }
            WidthClass::W32 if bytes.len() >= 4 => {
                InstrWord::new32(u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]))
            }
            _ => None,
        }
    }

    pub fn width(self) -> Width {
        self.width
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn len(self) -> usize {
        self.width.bytes()
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn bytes(self) -> Vec<u8> {
        self.value.to_le_bytes()[..self.len()].to_vec()
    }

    pub fn push_to(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.value.to_le_bytes()[..self.len()]);
    }
}

impl fmt::Display for InstrWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.width {
            Width::W16 => write!(f, "{:04x}", self.value),
            Width::W32 => write!(f, "{:08x}", self.value),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Extension {
    I,
    M,
    A,
    F,
    D,
    Q,
    C,
    Zifencei,
    Zicsr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Rd,
    Rs1,
    Rs2,
    Rs3,
    Imm,
    Shamt,
    Csr,
    RoundingMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Reg(Reg),
    Imm(i64),
}

/// A decoded instruction. Compressed forms carry the mnemonic of the instruction
/// they expand to (`c.lui` decodes as `lui`), except for the assembler aliases
/// `li`, `mv`, `nop`, `j`, `jr`, `beqz`, `bnez`, which have no 32-bit twin here.
///
/// Immediates are stored as the instruction's arithmetic value, except `lui`
/// and `auipc`, which hold the 20-bit field, and `hint`, which holds the raw
/// 16-bit word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DecodedInstr {
    pub mnemonic: Mnemonic,
    pub compressed: bool,
    pub rd: Option<Reg>,
    pub rs1: Option<Reg>,
    pub rs2: Option<Reg>,
    pub rs3: Option<Reg>,
    pub imm: Option<i32>,
    pub rm: Option<u8>,
    pub csr: Option<u16>,
    pub aq: bool,
    pub rl: bool,
}

impl DecodedInstr {
    pub fn new(mnemonic: Mnemonic) -> DecodedInstr {
        DecodedInstr {
            mnemonic,
            compressed: false,
            rd: None,
            rs1: None,
            rs2: None,
            rs3: None,
            imm: None,
            rm: None,
            csr: None,
            aq: false,
            rl: false,
        }
    }

    pub fn rd(mut self, r: Reg) -> Self {
        self.rd = Some(r);
        self
    }

    pub fn rs1(mut self, r: Reg) -> Self {
        self.rs1 = Some(r);
        self
    }

    pub fn rs2(mut self, r: Reg) -> Self {
        self.rs2 = Some(r);
        self
    }

    pub fn rs3(mut self, r: Reg) -> Self {
        self.rs3 = Some(r);
        self
    }

    pub fn imm(mut self, v: i32) -> Self {
        self.imm = Some(v);
        self
    }

    pub fn rm(mut self, v: u8) -> Self {
        self.rm = Some(v);
        self
    }

    pub fn csr(mut self, v: u16) -> Self {
        self.csr = Some(v);
        self
    }

    pub fn aqrl(mut self, aq: bool, rl: bool) -> Self {
        self.aq = aq;
        self.rl = rl;
        self
    }

    pub fn extension(&self) -> Extension {
        if self.compressed {
            Extension::C
        } else {
            self.mnemonic.extension()
        }
    }

    /// Operands in rendering order, tagged with their role.
    pub fn operands(&self) -> Vec<(Role, Operand)> {
        let mut out = Vec::with_capacity(5);
        let imm_role = if self.mnemonic.is_shift_imm() { Role::Shamt } else { Role::Imm };
        if let Some(r) = self.rd {
            out.push((Role::Rd, Operand::Reg(r)));
        }
        if let Some(r) = self.rs1 {
            out.push((Role::Rs1, Operand::Reg(r)));
        }
        if let Some(r) = self.rs2 {
            out.push((Role::Rs2, Operand::Reg(r)));
        }
        if let Some(r) = self.rs3 {
            out.push((Role::Rs3, Operand::Reg(r)));
        }
        if let Some(c) = self.csr {
            out.push((Role::Csr, Operand::Imm(c as i64)));
        }
        if let Some(v) = self.imm {
            out.push((imm_role, Operand::Imm(v as i64)));
        }
        if let Some(m) = self.rm {
            out.push((Role::RoundingMode, Operand::Imm(m as i64)));
        }
        out
    }

    /// Integer registers written by this instruction (x0 excluded).
    pub fn int_dest(&self) -> Option<Reg> {
        match self.rd {
            Some(Reg::X(0)) | None => None,
            Some(r @ Reg::X(_)) => Some(r),
            Some(Reg::F(_)) => None,
        }
    }
}

impl fmt::Display for DecodedInstr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        render::render(self, f)
    }
}

/// Decodes an instruction stream into (offset, word, instruction) triples. Bytes that do
/// not form a valid instruction are reported as `None` and skipped two at a time.
pub fn disassemble(bytes: &[u8]) -> Vec<(usize, Option<(InstrWord, DecodedInstr)>)> {
    let mut out = Vec::new();
    let mut off = 0;
    while off + 1 < bytes.len() {
        match InstrWord::from_bytes(&bytes[off..]) {
            Some(w) => match decode(w) {
                Some(d) => {
                    out.push((off, Some((w, d))));
                    off += w.len();
                }
                None => {
                    out.push((off, None));
                    off += 2;
                }
            },
            None => {
                out.push((off, None));
                off += 2;
            }
        }
    }
    out
}
