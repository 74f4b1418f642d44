use thiserror::Error;

use super::decode::{table, Fmt};
use super::{DecodedInstr, InstrWord, Mnemonic, PreferredWidth, Reg};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("{0} is not encodable in the requested width")]
    NotEncodable(String),
}

fn err(d: &DecodedInstr) -> EncodeError {
    EncodeError::NotEncodable(d.to_string())
}

/// Encodes an instruction. `Any` prefers the compressed form when one fits.
pub fn encode(d: &DecodedInstr, width: PreferredWidth) -> Result<InstrWord, EncodeError> {
    match width {
        PreferredWidth::W16 => encode16(d).and_then(InstrWord::new16).ok_or_else(|| err(d)),
        PreferredWidth::W32 => encode32(d).and_then(InstrWord::new32).ok_or_else(|| err(d)),
        PreferredWidth::Any => encode16(d)
            .and_then(InstrWord::new16)
            .or_else(|| encode32(d).and_then(InstrWord::new32))
            .ok_or_else(|| err(d)),
    }
}

fn fits_signed(v: i32, bits: u32) -> bool {
    let lim = 1i32 << (bits - 1);
    (-lim..lim).contains(&v)
}

fn reg(r: Option<Reg>, want_float: bool) -> Option<u32> {
    match (r?, want_float) {
        (Reg::X(i), false) | (Reg::F(i), true) => Some(i as u32),
        _ => None,
    }
}

fn bank_is_float(b: super::Bank) -> bool {
    b == super::Bank::Float
}

fn rm_ok(rm: Option<u8>) -> Option<u32> {
    let rm = rm? as u32;
    (rm < 8 && rm != 5 && rm != 6).then_some(rm)
}

/// Expands the compressed-only aliases to their base instruction.
fn expand_alias(d: &DecodedInstr) -> Option<DecodedInstr> {
    use Mnemonic::*;
    let base = match d.mnemonic {
        Li => DecodedInstr::new(Addi).rd(d.rd?).rs1(Reg::ZERO).imm(d.imm?),
        Mv => DecodedInstr::new(Add).rd(d.rd?).rs1(Reg::ZERO).rs2(d.rs2?),
        Nop => DecodedInstr::new(Addi).rd(Reg::ZERO).rs1(Reg::ZERO).imm(0),
        J => DecodedInstr::new(Jal).rd(Reg::ZERO).imm(d.imm?),
        Jr => DecodedInstr::new(Jalr).rd(Reg::ZERO).rs1(d.rs1?).imm(0),
        Beqz => DecodedInstr::new(Beq).rs1(d.rs1?).rs2(Reg::ZERO).imm(d.imm?),
        Bnez => DecodedInstr::new(Bne).rs1(d.rs1?).rs2(Reg::ZERO).imm(d.imm?),
        _ => return None,
    };
    Some(base)
}

fn encode32(d: &DecodedInstr) -> Option<u32> {
    if d.mnemonic == Mnemonic::Hint {
        return None;
    }
    if let Some(base) = expand_alias(d) {
        return encode32(&base);
    }
    let o = table().iter().find(|o| o.m == d.mnemonic)?;
    let mut w = o.bits;
    let rd = |w: &mut u32, v: u32| *w |= v << 7;
    let rs1 = |w: &mut u32, v: u32| *w |= v << 15;
    let rs2 = |w: &mut u32, v: u32| *w |= v << 20;
    match o.fmt {
        Fmt::R(a, b, c) => {
            rd(&mut w, reg(d.rd, bank_is_float(a))?);
            rs1(&mut w, reg(d.rs1, bank_is_float(b))?);
            rs2(&mut w, reg(d.rs2, bank_is_float(c))?);
        }
        Fmt::RRm(a, b, c) => {
            rd(&mut w, reg(d.rd, bank_is_float(a))?);
            rs1(&mut w, reg(d.rs1, bank_is_float(b))?);
            rs2(&mut w, reg(d.rs2, bank_is_float(c))?);
            w |= rm_ok(d.rm)? << 12;
        }
        Fmt::R4 => {
            rd(&mut w, reg(d.rd, true)?);
            rs1(&mut w, reg(d.rs1, true)?);
            rs2(&mut w, reg(d.rs2, true)?);
            w |= reg(d.rs3, true)? << 27;
            w |= rm_ok(d.rm)? << 12;
        }
        Fmt::Unary(a, b, has_rm) => {
            rd(&mut w, reg(d.rd, bank_is_float(a))?);
            rs1(&mut w, reg(d.rs1, bank_is_float(b))?);
            if has_rm {
                w |= rm_ok(d.rm)? << 12;
            }
        }
        Fmt::I(a) => {
            let imm = d.imm?;
            if !fits_signed(imm, 12) {
                return None;
            }
            rd(&mut w, reg(d.rd, bank_is_float(a))?);
            rs1(&mut w, reg(d.rs1, false)?);
            w |= (imm as u32 & 0xFFF) << 20;
        }
        Fmt::S(b) => {
            let imm = d.imm?;
            if !fits_signed(imm, 12) {
                return None;
            }
            let imm = imm as u32;
            rs1(&mut w, reg(d.rs1, false)?);
            rs2(&mut w, reg(d.rs2, bank_is_float(b))?);
            w |= (imm & 0x1F) << 7 | (imm >> 5 & 0x7F) << 25;
        }
        Fmt::B => {
            let imm = d.imm?;
            if imm & 1 != 0 || !fits_signed(imm, 13) {
                return None;
            }
            let i = imm as u32;
            rs1(&mut w, reg(d.rs1, false)?);
            rs2(&mut w, reg(d.rs2, false)?);
            w |= (i >> 12 & 1) << 31 | (i >> 5 & 0x3F) << 25 | (i >> 1 & 0xF) << 8 | (i >> 11 & 1) << 7;
        }
        Fmt::U => {
            let imm = d.imm?;
            if !(0..1 << 20).contains(&imm) {
                return None;
            }
            rd(&mut w, reg(d.rd, false)?);
            w |= (imm as u32) << 12;
        }
        Fmt::J => {
            let imm = d.imm?;
            if imm & 1 != 0 || !fits_signed(imm, 21) {
                return None;
            }
            let i = imm as u32;
            rd(&mut w, reg(d.rd, false)?);
            w |= (i >> 20 & 1) << 31 | (i >> 1 & 0x3FF) << 21 | (i >> 11 & 1) << 20 | (i >> 12 & 0xFF) << 12;
        }
        Fmt::Sh6 | Fmt::Sh5 => {
            let limit = if o.fmt == Fmt::Sh6 { 64 } else { 32 };
            let imm = d.imm?;
            if !(0..limit).contains(&imm) {
                return None;
            }
            rd(&mut w, reg(d.rd, false)?);
            rs1(&mut w, reg(d.rs1, false)?);
            w |= (imm as u32) << 20;
        }
        Fmt::Fence => {
            let imm = d.imm?;
            if !(0..256).contains(&imm) {
                return None;
            }
            w |= (imm as u32) << 20;
        }
        Fmt::Exact => {}
        Fmt::Csr => {
            rd(&mut w, reg(d.rd, false)?);
            rs1(&mut w, reg(d.rs1, false)?);
            w |= (d.csr? as u32 & 0xFFF) << 20;
        }
        Fmt::CsrI => {
            let imm = d.imm?;
            if !(0..32).contains(&imm) {
                return None;
            }
            rd(&mut w, reg(d.rd, false)?);
            rs1(&mut w, imm as u32);
            w |= (d.csr? as u32 & 0xFFF) << 20;
        }
        Fmt::Amo | Fmt::Lr => {
            rd(&mut w, reg(d.rd, false)?);
            rs1(&mut w, reg(d.rs1, false)?);
            if o.fmt == Fmt::Amo {
                rs2(&mut w, reg(d.rs2, false)?);
            }
            w |= (d.aq as u32) << 26 | (d.rl as u32) << 25;
        }
    }
    Some(w)
}

fn creg(r: Option<Reg>, want_float: bool) -> Option<u32> {
    let i = reg(r, want_float)?;
    (8..16).contains(&i).then(|| i - 8)
}

fn nonzero_x(r: Option<Reg>) -> Option<u32> {
    reg(r, false).filter(|&i| i != 0)
}

fn imm6(v: i32) -> Option<u32> {
    fits_signed(v, 6).then_some(v as u32 & 0x3F)
}

fn ci(f3: u32, rd: u32, imm: u32, q: u32) -> u32 {
    f3 << 13 | (imm >> 5 & 1) << 12 | rd << 7 | (imm & 0x1F) << 2 | q
}

fn encode16(d: &DecodedInstr) -> Option<u16> {
    use Mnemonic::*;
    let same_rd_rs1 = d.rd.is_some() && d.rd == d.rs1;
    let v: u32 = match d.mnemonic {
        Hint => {
            let w = d.imm? as u32;
            if w > 0xFFFF {
                return None;
            }
            w
        }
        Nop => 0x0001,
        Ebreak => 0x9002,
        Li => ci(2, nonzero_x(d.rd)?, imm6(d.imm?)?, 1),
        Lui => {
            let rd = nonzero_x(d.rd).filter(|&r| r != 2)?;
            let field = d.imm?;
            let v = if field >= 0x80000 { field - 0x100000 } else { field };
            if v == 0 {
                return None;
            }
            ci(3, rd, imm6(v)?, 1)
        }
        Addi => {
            let imm = d.imm?;
            if d.rd == Some(Reg::SP) && d.rs1 == Some(Reg::SP) && imm != 0 && imm % 16 == 0 && fits_signed(imm, 10) {
                let i = imm as u32;
                3 << 13 | (i >> 9 & 1) << 12 | 2 << 7 | (i >> 4 & 1) << 6 | (i >> 6 & 1) << 5 | (i >> 7 & 3) << 3
                    | (i >> 5 & 1) << 2 | 1
            } else if d.rs1 == Some(Reg::SP) && creg(d.rd, false).is_some() && imm > 0 && imm < 1024 && imm % 4 == 0 {
                let i = imm as u32;
                (i >> 4 & 3) << 11 | (i >> 6 & 0xF) << 7 | (i >> 2 & 1) << 6 | (i >> 3 & 1) << 5 | creg(d.rd, false)? << 2
            } else if same_rd_rs1 && imm != 0 {
                ci(0, nonzero_x(d.rd)?, imm6(imm)?, 1)
            } else {
                return None;
            }
        }
        Addiw if same_rd_rs1 => ci(1, nonzero_x(d.rd)?, imm6(d.imm?)?, 1),
        Slli if same_rd_rs1 => {
            let sh = d.imm?;
            if !(1..64).contains(&sh) {
                return None;
            }
            ci(0, nonzero_x(d.rd)?, sh as u32, 2)
        }
        Srli | Srai | Andi if same_rd_rs1 => {
            let r = creg(d.rd, false)?;
            let imm = d.imm?;
            let (f2, field) = match d.mnemonic {
                Srli if (1..64).contains(&imm) => (0, imm as u32),
                Srai if (1..64).contains(&imm) => (1, imm as u32),
                Andi => (2, imm6(imm)?),
                _ => return None,
            };
            4 << 13 | (field >> 5 & 1) << 12 | f2 << 10 | r << 7 | (field & 0x1F) << 2 | 1
        }
        Sub | Xor | Or | And | Subw | Addw if same_rd_rs1 => {
            let r = creg(d.rd, false)?;
            let s = creg(d.rs2, false)?;
            let (hi, f2) = match d.mnemonic {
                Sub => (0, 0),
                Xor => (0, 1),
                Or => (0, 2),
                And => (0, 3),
                Subw => (1, 0),
                _ => (1, 1),
            };
            4 << 13 | hi << 12 | 3 << 10 | r << 7 | f2 << 5 | s << 2 | 1
        }
        J => {
            let imm = d.imm?;
            if imm & 1 != 0 || !fits_signed(imm, 12) {
                return None;
            }
            let i = imm as u32;
            5 << 13 | (i >> 11 & 1) << 12 | (i >> 4 & 1) << 11 | (i >> 8 & 3) << 9 | (i >> 10 & 1) << 8
                | (i >> 6 & 1) << 7 | (i >> 7 & 1) << 6 | (i >> 1 & 7) << 3 | (i >> 5 & 1) << 2 | 1
        }
        Beqz | Bnez => {
            let r = creg(d.rs1, false)?;
            let imm = d.imm?;
            if imm & 1 != 0 || !fits_signed(imm, 9) {
                return None;
            }
            let i = imm as u32;
            let f3 = if d.mnemonic == Beqz { 6 } else { 7 };
            f3 << 13 | (i >> 8 & 1) << 12 | (i >> 3 & 3) << 10 | r << 7 | (i >> 6 & 3) << 5 | (i >> 1 & 3) << 3
                | (i >> 5 & 1) << 2 | 1
        }
        Jr => 4 << 13 | nonzero_x(d.rs1)? << 7 | 2,
        Jalr if d.rd == Some(Reg::RA) && d.imm == Some(0) => 4 << 13 | 1 << 12 | nonzero_x(d.rs1)? << 7 | 2,
        Mv => 4 << 13 | nonzero_x(d.rd)? << 7 | nonzero_x(d.rs2)? << 2 | 2,
        Add if same_rd_rs1 => 4 << 13 | 1 << 12 | nonzero_x(d.rd)? << 7 | nonzero_x(d.rs2)? << 2 | 2,
        Lw | Ld | Fld | Sw | Sd | Fsd => return encode16_mem(d),
        _ => return None,
    };
    Some(v as u16)
}

fn encode16_mem(d: &DecodedInstr) -> Option<u16> {
    use Mnemonic::*;
    let imm = d.imm?;
    if imm < 0 {
        return None;
    }
    let i = imm as u32;
    let is_load = matches!(d.mnemonic, Lw | Ld | Fld);
    let float = matches!(d.mnemonic, Fld | Fsd);
    let word = matches!(d.mnemonic, Lw | Sw);
    let data = if is_load { d.rd } else { d.rs2 };
    let scale = if word { 4 } else { 8 };
    if i % scale != 0 {
        return None;
    }
    let f3 = match d.mnemonic {
        Fld | Fsd => 1,
        Lw | Sw => 2,
        _ => 3,
    } | if is_load { 0 } else { 4 };
    if d.rs1 == Some(Reg::SP) {
        let v = if is_load {
            let rd = reg(data, float)?;
            if !float && rd == 0 {
                return None;
            }
            if word {
                if i >= 256 {
                    return None;
                }
                f3 << 13 | (i >> 5 & 1) << 12 | rd << 7 | (i >> 2 & 7) << 4 | (i >> 6 & 3) << 2 | 2
            } else {
                if i >= 512 {
                    return None;
                }
                f3 << 13 | (i >> 5 & 1) << 12 | rd << 7 | (i >> 3 & 3) << 5 | (i >> 6 & 7) << 2 | 2
            }
        } else {
            let rs2 = reg(data, float)?;
            if word {
                if i >= 256 {
                    return None;
                }
                f3 << 13 | (i >> 2 & 0xF) << 9 | (i >> 6 & 3) << 7 | rs2 << 2 | 2
            } else {
                if i >= 512 {
                    return None;
                }
                f3 << 13 | (i >> 3 & 7) << 10 | (i >> 6 & 7) << 7 | rs2 << 2 | 2
            }
        };
        return Some(v as u16);
    }
    let rs1 = creg(d.rs1, false)?;
    let r = creg(data, float)?;
    let f3 = f3 & 3 | if is_load { 0 } else { 4 };
    let v = if word {
        if i >= 128 {
            return None;
        }
        f3 << 13 | (i >> 3 & 7) << 10 | rs1 << 7 | (i >> 2 & 1) << 6 | (i >> 6 & 1) << 5 | r << 2
    } else {
        if i >= 256 {
            return None;
        }
        f3 << 13 | (i >> 3 & 7) << 10 | rs1 << 7 | (i >> 6 & 3) << 5 | r << 2
    };
    Some(v as u16)
}
