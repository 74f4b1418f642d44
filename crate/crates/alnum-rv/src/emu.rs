//! A small RV64IMAFDC interpreter with a serial MMIO port and an instruction-fetch
//! coherence checker for self-modifying code.

use std::collections::HashMap;
use std::fmt;

use crate::fp::{fma_flags, Binary, Rounding};
use crate::isa::{decode, DecodedInstr, InstrWord, Mnemonic, Reg};

pub const DEFAULT_BASE: u64 = 0x8000_0000;
pub const UART_ADDR: u64 = 0x1001_3000;
pub const DEFAULT_SENTINEL: u64 = 0x1000;

const MSTATUS: u16 = 0x300;
const MISA: u16 = 0x301;
const MHARTID: u16 = 0xF14;
const FS_MASK: u64 = 0b11 << 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IcacheMode {
    /// Fetching a byte stored after it was fetched, or stored since the last
    /// `fence.i` once any `fence.i` has run, traps.
    Strict,
    Lenient,
}

#[derive(Clone, Debug)]
pub struct EmuConfig {
    pub base: u64,
    pub mem_size: usize,
    pub uart: u64,
    pub sentinel: Option<u64>,
    pub icache: IcacheMode,
    /// Hosted mode: the FPU starts enabled.
    pub fpu_enabled: bool,
    pub trace: bool,
}

impl Default for EmuConfig {
    fn default() -> Self {
        EmuConfig {
            base: DEFAULT_BASE,
            mem_size: 1 << 20,
            uart: UART_ADDR,
            sentinel: Some(DEFAULT_SENTINEL),
            icache: IcacheMode::Strict,
            fpu_enabled: false,
            trace: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Trap {
    Unsupported { pc: u64, word: Option<InstrWord> },
    Misaligned { pc: u64, addr: u64 },
    OutOfRange { pc: u64, addr: u64 },
    FpuDisabled { pc: u64 },
    StaleFetch { pc: u64, addr: u64 },
    Ecall { pc: u64 },
    Ebreak { pc: u64 },
}

impl fmt::Display for Trap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trap::Unsupported { pc, word: Some(w) } => write!(f, "unsupported instruction {w} at {pc:#x}"),
            Trap::Unsupported { pc, word: None } => write!(f, "undecodable bytes at {pc:#x}"),
            Trap::Misaligned { pc, addr } => write!(f, "misaligned access to {addr:#x} at {pc:#x}"),
            Trap::OutOfRange { pc, addr } => write!(f, "access to unmapped {addr:#x} at {pc:#x}"),
            Trap::FpuDisabled { pc } => write!(f, "floating-point instruction with FPU off at {pc:#x}"),
            Trap::StaleFetch { pc, addr } => write!(f, "fetch of modified byte {addr:#x} without fence.i at {pc:#x}"),
            Trap::Ecall { pc } => write!(f, "ecall at {pc:#x}"),
            Trap::Ebreak { pc } => write!(f, "ebreak at {pc:#x}"),
        }
    }
}

impl std::error::Error for Trap {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stop {
    /// Control reached the sentinel address.
    Exit,
    /// Control reached a requested breakpoint.
    Breakpoint(u64),
    Trap(Trap),
    StepBudgetExceeded,
}

const DIRTY: u8 = 1;
const FETCHED: u8 = 2;
const STALE: u8 = 4;

#[derive(Clone, Debug)]
pub struct EmuState {
    pub x: [u64; 32],
    pub f: [u64; 32],
    pub pc: u64,
    pub serial_out: Vec<u8>,
    pub steps: u64,
    pub trace_log: Vec<String>,
    pub config: EmuConfig,
    mem: Vec<u8>,
    icache: Vec<u8>,
    fenced_once: bool,
    mstatus: u64,
    fflags: u8,
    frm: u8,
    csrs: HashMap<u16, u64>,
    reservation: Option<u64>,
}

fn sext32(v: u64) -> u64 {
    v as u32 as i32 as i64 as u64
}

fn nan_box(v: f32) -> u64 {
    0xFFFF_FFFF_0000_0000 | v.to_bits() as u64
}

fn unbox(v: u64) -> f32 {
    if v >> 32 == 0xFFFF_FFFF {
        f32::from_bits(v as u32)
    } else {
        f32::from_bits(0x7fc0_0000)
    }
}

impl EmuState {
    pub fn new(config: EmuConfig) -> EmuState {
        let mstatus = if config.fpu_enabled { 1 << 13 } else { 0 };
        EmuState {
            x: [0; 32],
            f: [0; 32],
            pc: config.base,
            serial_out: Vec::new(),
            steps: 0,
            trace_log: Vec::new(),
            mem: vec![0; config.mem_size],
            icache: vec![0; config.mem_size],
            fenced_once: false,
            mstatus,
            fflags: 0,
            frm: 0,
            csrs: HashMap::new(),
            reservation: None,
            config,
        }
    }

    /// A machine with `image` loaded at the base address and pc at its first byte.
    pub fn with_image(config: EmuConfig, image: &[u8]) -> EmuState {
        let mut st = EmuState::new(config);
        let base = st.config.base;
        st.load(base, image).expect("image larger than memory");
        st.pc = base;
        st
    }

    /// Copies bytes into memory without touching the fetch-coherence state.
    pub fn load(&mut self, addr: u64, bytes: &[u8]) -> Result<(), Trap> {
        let off = self.offset(addr, bytes.len()).ok_or(Trap::OutOfRange { pc: self.pc, addr })?;
        self.mem[off..off + bytes.len()].copy_from_slice(bytes);
        Ok(())
    }

    pub fn mem(&self, addr: u64, len: usize) -> Option<&[u8]> {
        self.offset(addr, len).map(|o| &self.mem[o..o + len])
    }

    pub fn fpu_enabled(&self) -> bool {
        self.mstatus & FS_MASK != 0
    }

    pub fn frm(&self) -> u8 {
        self.frm
    }

    pub fn reg(&self, r: Reg) -> u64 {
        match r {
            Reg::X(i) => self.x[i as usize],
            Reg::F(i) => self.f[i as usize],
        }
    }

    pub fn set_reg(&mut self, r: Reg, v: u64) {
        match r {
            Reg::X(0) => {}
            Reg::X(i) => self.x[i as usize] = v,
            Reg::F(i) => self.f[i as usize] = v,
        }
    }

    fn offset(&self, addr: u64, len: usize) -> Option<usize> {
        let off = addr.checked_sub(self.config.base)?;
        (off.checked_add(len as u64)? <= self.mem.len() as u64).then_some(off as usize)
    }

    fn is_uart(&self, addr: u64) -> bool {
        (self.config.uart..self.config.uart + 0x1000).contains(&addr)
    }

    fn read(&self, addr: u64, len: usize) -> Result<u64, Trap> {
        if self.is_uart(addr) {
            return Ok(0);
        }
        let off = self.offset(addr, len).ok_or(Trap::OutOfRange { pc: self.pc, addr })?;
        let mut buf = [0u8; 8];
        buf[..len].copy_from_slice(&self.mem[off..off + len]);
        Ok(u64::from_le_bytes(buf))
    }

    fn write(&mut self, addr: u64, len: usize, v: u64) -> Result<(), Trap> {
        if self.is_uart(addr) {
            if addr == self.config.uart {
                self.serial_out.push(v as u8);
            }
            return Ok(());
        }
        let off = self.offset(addr, len).ok_or(Trap::OutOfRange { pc: self.pc, addr })?;
        self.mem[off..off + len].copy_from_slice(&v.to_le_bytes()[..len]);
        if let Some(a) = self.reservation {
            if a < addr + len as u64 && addr < a + 8 {
                self.reservation = None;
            }
        }
        for s in &mut self.icache[off..off + len] {
            *s |= DIRTY;
            if *s & FETCHED != 0 {
                *s |= STALE;
            }
        }
        Ok(())
    }

    fn fetch(&mut self) -> Result<(InstrWord, DecodedInstr), Trap> {
        let pc = self.pc;
        let lo = self.offset(pc, 2).ok_or(Trap::OutOfRange { pc, addr: pc })?;
        let first = self.mem[lo];
        let len = match crate::isa::classify_width(first) {
            crate::isa::WidthClass::W16 => 2,
            crate::isa::WidthClass::W32 => 4,
            crate::isa::WidthClass::Other => return Err(Trap::Unsupported { pc, word: None }),
        };
        let off = self.offset(pc, len).ok_or(Trap::OutOfRange { pc, addr: pc + 2 })?;
        if self.config.icache == IcacheMode::Strict {
            for (i, s) in self.icache[off..off + len].iter_mut().enumerate() {
                if *s & STALE != 0 || (*s & DIRTY != 0 && self.fenced_once) {
                    return Err(Trap::StaleFetch { pc, addr: pc + i as u64 });
                }
                *s |= FETCHED;
            }
        }
        let w = InstrWord::from_bytes(&self.mem[off..off + len]).ok_or(Trap::Unsupported { pc, word: None })?;
        let d = decode(w).ok_or(Trap::Unsupported { pc, word: Some(w) })?;
        Ok((w, d))
    }

    fn fence_i(&mut self) {
        self.icache.iter_mut().for_each(|s| *s = 0);
        self.fenced_once = true;
    }

    fn rounding(&self, rm: Option<u8>, pc: u64, w: InstrWord) -> Result<Rounding, Trap> {
        let rm = match rm.unwrap_or(7) {
            7 => self.frm,
            r => r,
        };
        Rounding::from_rm(rm).ok_or(Trap::Unsupported { pc, word: Some(w) })
    }

    fn csr_read(&self, csr: u16) -> u64 {
        match csr {
            0x001 => self.fflags as u64,
            0x002 => self.frm as u64,
            0x003 => (self.frm as u64) << 5 | self.fflags as u64,
            MSTATUS => self.mstatus,
            MISA => 2 << 62 | 0b1_0000_0001_0001_0010_1101,
            MHARTID => 0,
            c => self.csrs.get(&c).copied().unwrap_or(0),
        }
    }

    fn csr_write(&mut self, csr: u16, v: u64) {
        match csr {
            0x001 => self.fflags = v as u8 & 0x1F,
            0x002 => self.frm = v as u8 & 7,
            0x003 => {
                self.fflags = v as u8 & 0x1F;
                self.frm = (v >> 5) as u8 & 7;
            }
            MSTATUS => self.mstatus = v,
            MISA | MHARTID => {}
            c => {
                self.csrs.insert(c, v);
            }
        }
    }

    /// Executes one instruction.
    pub fn step(&mut self) -> Result<(), Trap> {
        let pc = self.pc;
        let (w, d) = self.fetch()?;
        if self.config.trace {
            self.trace_log.push(format!("{pc:#010x}: {w:>8}  {d}"));
        }
        let next = pc.wrapping_add(w.len() as u64);
        self.steps += 1;
        self.pc = self.exec(pc, w, &d, next)?;
        Ok(())
    }

    fn x(&self, r: Option<Reg>) -> u64 {
        match r {
            Some(Reg::X(i)) => self.x[i as usize],
            _ => 0,
        }
    }

    fn wx(&mut self, r: Option<Reg>, v: u64) {
        if let Some(Reg::X(i)) = r {
            if i != 0 {
                self.x[i as usize] = v;
            }
        }
    }

    fn fr(&self, r: Option<Reg>) -> u64 {
        match r {
            Some(Reg::F(i)) => self.f[i as usize],
            _ => 0,
        }
    }

    fn wf(&mut self, r: Option<Reg>, v: u64) {
        if let Some(Reg::F(i)) = r {
            self.f[i as usize] = v;
            self.mstatus |= FS_MASK;
        }
    }

    fn exec(&mut self, pc: u64, w: InstrWord, d: &DecodedInstr, next: u64) -> Result<u64, Trap> {
        use Mnemonic::*;
        let m = d.mnemonic;
        let ext = m.extension();
        if matches!(ext, crate::isa::Extension::F | crate::isa::Extension::D) && !self.fpu_enabled() {
            return Err(Trap::FpuDisabled { pc });
        }
        let imm = d.imm.unwrap_or(0) as i64 as u64;
        let a = self.x(d.rs1);
        let b = self.x(d.rs2);
        let unsupported = Trap::Unsupported { pc, word: Some(w) };
        let addr = a.wrapping_add(imm);
        let mut target = next;
        match m {
            Lui => self.wx(d.rd, sext32(imm << 12)),
            Auipc => self.wx(d.rd, pc.wrapping_add(sext32(imm << 12))),
            Li => self.wx(d.rd, imm),
            Mv => self.wx(d.rd, b),
            Nop | Hint | Fence => {}
            FenceI => self.fence_i(),
            Jal => {
                self.wx(d.rd, next);
                target = pc.wrapping_add(imm);
            }
            J => target = pc.wrapping_add(imm),
            Jalr => {
                let t = addr & !1;
                self.wx(d.rd, next);
                target = t;
            }
            Jr => target = a & !1,
            Beq | Bne | Blt | Bge | Bltu | Bgeu | Beqz | Bnez => {
                let taken = match m {
                    Beq => a == b,
                    Bne => a != b,
                    Blt => (a as i64) < (b as i64),
                    Bge => (a as i64) >= (b as i64),
                    Bltu => a < b,
                    Bgeu => a >= b,
                    Beqz => a == 0,
                    _ => a != 0,
                };
                if taken {
                    target = pc.wrapping_add(imm);
                }
            }
            Lb => self.wx(d.rd, self.read(addr, 1)? as i8 as i64 as u64),
            Lh => self.wx(d.rd, self.read(addr, 2)? as i16 as i64 as u64),
            Lw => self.wx(d.rd, sext32(self.read(addr, 4)?)),
            Ld => self.wx(d.rd, self.read(addr, 8)?),
            Lbu => self.wx(d.rd, self.read(addr, 1)?),
            Lhu => self.wx(d.rd, self.read(addr, 2)?),
            Lwu => self.wx(d.rd, self.read(addr, 4)?),
            Sb => self.write(addr, 1, b)?,
            Sh => self.write(addr, 2, b)?,
            Sw => self.write(addr, 4, b)?,
            Sd => self.write(addr, 8, b)?,
            Addi => self.wx(d.rd, a.wrapping_add(imm)),
            Slti => self.wx(d.rd, ((a as i64) < (imm as i64)) as u64),
            Sltiu => self.wx(d.rd, (a < imm) as u64),
            Xori => self.wx(d.rd, a ^ imm),
            Ori => self.wx(d.rd, a | imm),
            Andi => self.wx(d.rd, a & imm),
            Slli => self.wx(d.rd, a << (imm & 63)),
            Srli => self.wx(d.rd, a >> (imm & 63)),
            Srai => self.wx(d.rd, ((a as i64) >> (imm & 63)) as u64),
            Addiw => self.wx(d.rd, sext32(a.wrapping_add(imm))),
            Slliw => self.wx(d.rd, sext32(a << (imm & 31))),
            Srliw => self.wx(d.rd, sext32((a as u32 >> (imm & 31)) as u64)),
            Sraiw => self.wx(d.rd, ((a as i32) >> (imm & 31)) as i64 as u64),
            Add => self.wx(d.rd, a.wrapping_add(b)),
            Sub => self.wx(d.rd, a.wrapping_sub(b)),
            Sll => self.wx(d.rd, a << (b & 63)),
            Slt => self.wx(d.rd, ((a as i64) < (b as i64)) as u64),
            Sltu => self.wx(d.rd, (a < b) as u64),
            Xor => self.wx(d.rd, a ^ b),
            Srl => self.wx(d.rd, a >> (b & 63)),
            Sra => self.wx(d.rd, ((a as i64) >> (b & 63)) as u64),
            Or => self.wx(d.rd, a | b),
            And => self.wx(d.rd, a & b),
            Addw => self.wx(d.rd, sext32(a.wrapping_add(b))),
            Subw => self.wx(d.rd, sext32(a.wrapping_sub(b))),
            Sllw => self.wx(d.rd, sext32(a << (b & 31))),
            Srlw => self.wx(d.rd, sext32((a as u32 >> (b & 31)) as u64)),
            Sraw => self.wx(d.rd, ((a as i32) >> (b & 31)) as i64 as u64),
            Mul => self.wx(d.rd, a.wrapping_mul(b)),
            Mulh => self.wx(d.rd, ((a as i64 as i128 * b as i64 as i128) >> 64) as u64),
            Mulhsu => self.wx(d.rd, ((a as i64 as i128 * b as i128) >> 64) as u64),
            Mulhu => self.wx(d.rd, ((a as u128 * b as u128) >> 64) as u64),
            Div => {
                let (x, y) = (a as i64, b as i64);
                self.wx(d.rd, if y == 0 { u64::MAX } else { x.wrapping_div(y) as u64 })
            }
            Divu => self.wx(d.rd, if b == 0 { u64::MAX } else { a / b }),
            Rem => {
                let (x, y) = (a as i64, b as i64);
                self.wx(d.rd, if y == 0 { a } else { x.wrapping_rem(y) as u64 })
            }
            Remu => self.wx(d.rd, if b == 0 { a } else { a % b }),
            Mulw => self.wx(d.rd, sext32((a as u32).wrapping_mul(b as u32) as u64)),
            Divw => {
                let (x, y) = (a as i32, b as i32);
                self.wx(d.rd, if y == 0 { u64::MAX } else { x.wrapping_div(y) as i64 as u64 })
            }
            Divuw => {
                let (x, y) = (a as u32, b as u32);
                self.wx(d.rd, if y == 0 { u64::MAX } else { sext32((x / y) as u64) })
            }
            Remw => {
                let (x, y) = (a as i32, b as i32);
                self.wx(d.rd, if y == 0 { sext32(a) } else { x.wrapping_rem(y) as i64 as u64 })
            }
            Remuw => {
                let (x, y) = (a as u32, b as u32);
                self.wx(d.rd, if y == 0 { sext32(a) } else { sext32((x % y) as u64) })
            }
            Ecall => return Err(Trap::Ecall { pc }),
            Ebreak => return Err(Trap::Ebreak { pc }),
            Csrrw | Csrrs | Csrrc | Csrrwi | Csrrsi | Csrrci => {
                let csr = d.csr.unwrap_or(0);
                if csr <= 3 && !self.fpu_enabled() {
                    return Err(Trap::FpuDisabled { pc });
                }
                let src = match m {
                    Csrrwi | Csrrsi | Csrrci => imm & 31,
                    _ => a,
                };
                let old = self.csr_read(csr);
                let new = match m {
                    Csrrw | Csrrwi => Some(src),
                    Csrrs | Csrrsi => (src != 0 || d.rs1 != Some(Reg::ZERO)).then_some(old | src),
                    _ => (src != 0 || d.rs1 != Some(Reg::ZERO)).then_some(old & !src),
                };
                if let Some(v) = new {
                    self.csr_write(csr, v);
                }
                self.wx(d.rd, old);
            }
            LrW | LrD => {
                let len = if m == LrW { 4 } else { 8 };
                if a % len as u64 != 0 {
                    return Err(Trap::Misaligned { pc, addr: a });
                }
                let v = self.read(a, len)?;
                self.reservation = Some(a);
                self.wx(d.rd, if len == 4 { sext32(v) } else { v });
            }
            ScW | ScD => {
                let len = if m == ScW { 4 } else { 8 };
                if a % len as u64 != 0 {
                    return Err(Trap::Misaligned { pc, addr: a });
                }
                if self.reservation == Some(a) {
                    self.write(a, len, b)?;
                    self.wx(d.rd, 0);
                } else {
                    self.wx(d.rd, 1);
                }
                self.reservation = None;
            }
            _ if m.is_amo() => {
                let word = m.name().ends_with(".w");
                let len = if word { 4 } else { 8 };
                if a % len as u64 != 0 {
                    return Err(Trap::Misaligned { pc, addr: a });
                }
                if self.is_uart(a) {
                    return Err(Trap::OutOfRange { pc, addr: a });
                }
                let raw = self.read(a, len)?;
                let old = if word { sext32(raw) } else { raw };
                let src = if word { sext32(b) } else { b };
                let new = match m {
                    AmoswapW | AmoswapD => src,
                    AmoaddW | AmoaddD => old.wrapping_add(src),
                    AmoxorW | AmoxorD => old ^ src,
                    AmoandW | AmoandD => old & src,
                    AmoorW | AmoorD => old | src,
                    AmominW | AmominD => (old as i64).min(src as i64) as u64,
                    AmomaxW | AmomaxD => (old as i64).max(src as i64) as u64,
                    AmominuW => (old as u32).min(src as u32) as u64,
                    AmomaxuW => (old as u32).max(src as u32) as u64,
                    AmominuD => old.min(src),
                    AmomaxuD => old.max(src),
                    _ => return Err(unsupported),
                };
                self.write(a, len, new)?;
                self.wx(d.rd, old);
            }
            Flw => {
                let v = self.read(addr, 4)?;
                self.wf(d.rd, 0xFFFF_FFFF_0000_0000 | v);
            }
            Fld => {
                let v = self.read(addr, 8)?;
                self.wf(d.rd, v);
            }
            Fsw => self.write(addr, 4, self.fr(d.rs2))?,
            Fsd => self.write(addr, 8, self.fr(d.rs2))?,
            FmaddD | FmsubD | FnmsubD | FnmaddD | FaddD | FsubD | FmulD => {
                let rm = self.rounding(d.rm, pc, w)?;
                let (x, y, z) = (f64::from_bits(self.fr(d.rs1)), f64::from_bits(self.fr(d.rs2)), f64::from_bits(self.fr(d.rs3)));
                let (r, fl) = match m {
                    FmaddD => fma_flags(x, y, z, rm),
                    FmsubD => fma_flags(x, y, -z, rm),
                    FnmsubD => fma_flags(-x, y, z, rm),
                    FnmaddD => fma_flags(-x, y, -z, rm),
                    FaddD => fma_flags(x, 1.0, y, rm),
                    FsubD => fma_flags(x, 1.0, -y, rm),
                    _ => fma_flags(x, y, -0.0, rm),
                };
                self.fflags |= fl;
                self.wf(d.rd, r.to_raw());
            }
            FmaddS | FmsubS | FnmsubS | FnmaddS | FaddS | FsubS | FmulS => {
                let rm = self.rounding(d.rm, pc, w)?;
                let (x, y, z) = (unbox(self.fr(d.rs1)), unbox(self.fr(d.rs2)), unbox(self.fr(d.rs3)));
                let (r, fl) = match m {
                    FmaddS => fma_flags(x, y, z, rm),
                    FmsubS => fma_flags(x, y, -z, rm),
                    FnmsubS => fma_flags(-x, y, z, rm),
                    FnmaddS => fma_flags(-x, y, -z, rm),
                    FaddS => fma_flags(x, 1.0, y, rm),
                    FsubS => fma_flags(x, 1.0, -y, rm),
                    _ => fma_flags(x, y, -0.0, rm),
                };
                self.fflags |= fl;
                self.wf(d.rd, nan_box(r));
            }
            FsgnjD | FsgnjnD | FsgnjxD => {
                let (x, y) = (self.fr(d.rs1), self.fr(d.rs2));
                let sign = 1u64 << 63;
                let s = match m {
                    FsgnjD => y & sign,
                    FsgnjnD => !y & sign,
                    _ => (x ^ y) & sign,
                };
                self.wf(d.rd, x & !sign | s);
            }
            FsgnjS | FsgnjnS | FsgnjxS => {
                let (x, y) = (unbox(self.fr(d.rs1)).to_bits(), unbox(self.fr(d.rs2)).to_bits());
                let sign = 1u32 << 31;
                let s = match m {
                    FsgnjS => y & sign,
                    FsgnjnS => !y & sign,
                    _ => (x ^ y) & sign,
                };
                self.wf(d.rd, nan_box(f32::from_bits(x & !sign | s)));
            }
            FmvXD => self.wx(d.rd, self.fr(d.rs1)),
            FmvDX => self.wf(d.rd, a),
            FmvXW => self.wx(d.rd, sext32(self.fr(d.rs1))),
            FmvWX => self.wf(d.rd, 0xFFFF_FFFF_0000_0000 | (a & 0xFFFF_FFFF)),
            FeqD | FltD | FleD => {
                let (x, y) = (f64::from_bits(self.fr(d.rs1)), f64::from_bits(self.fr(d.rs2)));
                if (m != FeqD && (x.is_nan() || y.is_nan())) || x.is_nan() && x.to_raw() & 1 << 51 == 0 {
                    self.fflags |= crate::fp::NV;
                }
                let r = match m {
                    FeqD => x == y,
                    FltD => x < y,
                    _ => x <= y,
                };
                self.wx(d.rd, r as u64);
            }
            _ => return Err(unsupported),
        }
        Ok(target)
    }

    fn stop_at(&self) -> Option<Stop> {
        if self.config.sentinel == Some(self.pc) {
            return Some(Stop::Exit);
        }
        None
    }

    /// Runs until the sentinel, a trap, or `max_steps` retired instructions.
    pub fn run(&mut self, max_steps: u64) -> Stop {
        self.run_until(None, max_steps)
    }

    /// Like [`run`](Self::run), also stopping when pc reaches `breakpoint`.
    pub fn run_until(&mut self, breakpoint: Option<u64>, max_steps: u64) -> Stop {
        let limit = self.steps + max_steps;
        loop {
            if let Some(s) = self.stop_at() {
                return s;
            }
            if breakpoint == Some(self.pc) {
                return Stop::Breakpoint(self.pc);
            }
            if self.steps >= limit {
                return Stop::StepBudgetExceeded;
            }
            if let Err(t) = self.step() {
                return Stop::Trap(t);
            }
        }
    }
}
