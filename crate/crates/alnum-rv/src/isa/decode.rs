use std::sync::OnceLock;

use super::{Bank, DecodedInstr, InstrWord, Mnemonic, Reg, Width};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) enum Fmt {
    /// rd, rs1, rs2
    R(Bank, Bank, Bank),
    /// rd, rs1, rs2 plus a rounding mode in funct3
    RRm(Bank, Bank, Bank),
    /// float rd, rs1, rs2, rs3, rounding mode
    R4,
    /// rd, rs1, optional rounding mode; rs2 is fixed by the mask
    Unary(Bank, Bank, bool),
    /// rd (given bank), integer rs1, signed 12-bit immediate
    I(Bank),
    /// integer rs1, rs2 (given bank), signed 12-bit immediate
    S(Bank),
    B,
    U,
    J,
    Sh6,
    Sh5,
    Fence,
    Exact,
    Csr,
    CsrI,
    Amo,
    Lr,
}

#[derive(Clone, Copy, Debug)]
pub(super) struct Op32 {
    pub m: Mnemonic,
    pub mask: u32,
    pub bits: u32,
    pub fmt: Fmt,
}

const MASK_F3: u32 = 0x0000_707F;
const MASK_F7F3: u32 = 0xFE00_707F;
const MASK_F7: u32 = 0xFE00_007F;
const MASK_F7RS2: u32 = 0xFFF0_007F;
const MASK_F7RS2F3: u32 = 0xFFF0_707F;

fn build_table() -> Vec<Op32> {
    use Bank::{Float as F, Int as X};
    use Mnemonic::*;
    let mut t = Vec::new();
    let mut op = |m, mask, bits, fmt| t.push(Op32 { m, mask, bits, fmt });

    op(Lui, 0x7F, 0x37, Fmt::U);
    op(Auipc, 0x7F, 0x17, Fmt::U);
    op(Jal, 0x7F, 0x6F, Fmt::J);
    op(Jalr, MASK_F3, 0x67, Fmt::I(X));
    for (m, f3) in [(Beq, 0), (Bne, 1), (Blt, 4), (Bge, 5), (Bltu, 6), (Bgeu, 7)] {
        op(m, MASK_F3, 0x63 | f3 << 12, Fmt::B);
    }
    for (m, f3) in [(Lb, 0), (Lh, 1), (Lw, 2), (Ld, 3), (Lbu, 4), (Lhu, 5), (Lwu, 6)] {
        op(m, MASK_F3, 0x03 | f3 << 12, Fmt::I(X));
    }
    for (m, f3) in [(Sb, 0), (Sh, 1), (Sw, 2), (Sd, 3)] {
        op(m, MASK_F3, 0x23 | f3 << 12, Fmt::S(X));
    }
    for (m, f3) in [(Addi, 0), (Slti, 2), (Sltiu, 3), (Xori, 4), (Ori, 6), (Andi, 7)] {
        op(m, MASK_F3, 0x13 | f3 << 12, Fmt::I(X));
    }
    op(Slli, 0xFC00_707F, 0x1013, Fmt::Sh6);
    op(Srli, 0xFC00_707F, 0x5013, Fmt::Sh6);
    op(Srai, 0xFC00_707F, 0x4000_5013, Fmt::Sh6);
    op(Addiw, MASK_F3, 0x1B, Fmt::I(X));
    op(Slliw, MASK_F7F3, 0x101B, Fmt::Sh5);
    op(Srliw, MASK_F7F3, 0x501B, Fmt::Sh5);
    op(Sraiw, MASK_F7F3, 0x4000_501B, Fmt::Sh5);
    let rr = Fmt::R(X, X, X);
    for (m, f7, f3) in [
        (Add, 0, 0), (Sub, 0x20, 0), (Sll, 0, 1), (Slt, 0, 2), (Sltu, 0, 3), (Xor, 0, 4),
        (Srl, 0, 5), (Sra, 0x20, 5), (Or, 0, 6), (And, 0, 7),
        (Mul, 1, 0), (Mulh, 1, 1), (Mulhsu, 1, 2), (Mulhu, 1, 3),
        (Div, 1, 4), (Divu, 1, 5), (Rem, 1, 6), (Remu, 1, 7),
    ] {
        op(m, MASK_F7F3, 0x33 | f3 << 12 | f7 << 25, rr);
    }
    for (m, f7, f3) in [
        (Addw, 0, 0), (Subw, 0x20, 0), (Sllw, 0, 1), (Srlw, 0, 5), (Sraw, 0x20, 5),
        (Mulw, 1, 0), (Divw, 1, 4), (Divuw, 1, 5), (Remw, 1, 6), (Remuw, 1, 7),
    ] {
        op(m, MASK_F7F3, 0x3B | f3 << 12 | f7 << 25, rr);
    }
    op(Fence, 0xF00F_FFFF, 0x0F, Fmt::Fence);
    op(FenceI, 0xFFFF_FFFF, 0x100F, Fmt::Exact);
    op(Ecall, 0xFFFF_FFFF, 0x73, Fmt::Exact);
    op(Ebreak, 0xFFFF_FFFF, 0x0010_0073, Fmt::Exact);
    for (m, f3) in [(Csrrw, 1), (Csrrs, 2), (Csrrc, 3)] {
        op(m, MASK_F3, 0x73 | f3 << 12, Fmt::Csr);
    }
    for (m, f3) in [(Csrrwi, 5), (Csrrsi, 6), (Csrrci, 7)] {
        op(m, MASK_F3, 0x73 | f3 << 12, Fmt::CsrI);
    }
    let amo = [
        [LrW, ScW, AmoswapW, AmoaddW, AmoxorW, AmoandW, AmoorW, AmominW, AmomaxW, AmominuW, AmomaxuW],
        [LrD, ScD, AmoswapD, AmoaddD, AmoxorD, AmoandD, AmoorD, AmominD, AmomaxD, AmominuD, AmomaxuD],
    ];
    let f5s = [2u32, 3, 1, 0, 4, 12, 8, 16, 20, 24, 28];
    for (width, ms) in amo.iter().enumerate() {
        let f3 = 2 + width as u32;
        for (&m, &f5) in ms.iter().zip(f5s.iter()) {
            if f5 == 2 {
                op(m, 0xF9F0_707F, 0x2F | f3 << 12 | f5 << 27, Fmt::Lr);
            } else {
                op(m, 0xF800_707F, 0x2F | f3 << 12 | f5 << 27, Fmt::Amo);
            }
        }
    }
    for (l, s, f3) in [(Flw, Fsw, 2), (Fld, Fsd, 3), (Flq, Fsq, 4)] {
        op(l, MASK_F3, 0x07 | f3 << 12, Fmt::I(F));
        op(s, MASK_F3, 0x27 | f3 << 12, Fmt::S(F));
    }

    struct FpSet {
        fmt: u32,
        fused: [Mnemonic; 4],
        arith: [Mnemonic; 4],
        sqrt: Mnemonic,
        sgnj: [Mnemonic; 3],
        minmax: [Mnemonic; 2],
        cmp: [Mnemonic; 3],
        class: Mnemonic,
        to_int: [Mnemonic; 4],
        from_int: [Mnemonic; 4],
        mv_x: Option<Mnemonic>,
        mv_f: Option<Mnemonic>,
    }
    let sets = [
        FpSet {
            fmt: 0,
            fused: [FmaddS, FmsubS, FnmsubS, FnmaddS],
            arith: [FaddS, FsubS, FmulS, FdivS],
            sqrt: FsqrtS,
            sgnj: [FsgnjS, FsgnjnS, FsgnjxS],
            minmax: [FminS, FmaxS],
            cmp: [FleS, FltS, FeqS],
            class: FclassS,
            to_int: [FcvtWS, FcvtWuS, FcvtLS, FcvtLuS],
            from_int: [FcvtSW, FcvtSWu, FcvtSL, FcvtSLu],
            mv_x: Some(FmvXW),
            mv_f: Some(FmvWX),
        },
        FpSet {
            fmt: 1,
            fused: [FmaddD, FmsubD, FnmsubD, FnmaddD],
            arith: [FaddD, FsubD, FmulD, FdivD],
            sqrt: FsqrtD,
            sgnj: [FsgnjD, FsgnjnD, FsgnjxD],
            minmax: [FminD, FmaxD],
            cmp: [FleD, FltD, FeqD],
            class: FclassD,
            to_int: [FcvtWD, FcvtWuD, FcvtLD, FcvtLuD],
            from_int: [FcvtDW, FcvtDWu, FcvtDL, FcvtDLu],
            mv_x: Some(FmvXD),
            mv_f: Some(FmvDX),
        },
        FpSet {
            fmt: 3,
            fused: [FmaddQ, FmsubQ, FnmsubQ, FnmaddQ],
            arith: [FaddQ, FsubQ, FmulQ, FdivQ],
            sqrt: FsqrtQ,
            sgnj: [FsgnjQ, FsgnjnQ, FsgnjxQ],
            minmax: [FminQ, FmaxQ],
            cmp: [FleQ, FltQ, FeqQ],
            class: FclassQ,
            to_int: [FcvtWQ, FcvtWuQ, FcvtLQ, FcvtLuQ],
            from_int: [FcvtQW, FcvtQWu, FcvtQL, FcvtQLu],
            mv_x: None,
            mv_f: None,
        },
    ];
    for s in &sets {
        let fmt = s.fmt << 25;
        for (&m, opc) in s.fused.iter().zip([0x43u32, 0x47, 0x4B, 0x4F]) {
            op(m, 0x0600_007F, opc | fmt, Fmt::R4);
        }
        let f7 = |f5: u32| (f5 << 27) | fmt | 0x53;
        for (&m, f5) in s.arith.iter().zip([0u32, 1, 2, 3]) {
            op(m, MASK_F7, f7(f5), Fmt::RRm(F, F, F));
        }
        op(s.sqrt, MASK_F7RS2, f7(0x0B), Fmt::Unary(F, F, true));
        for (&m, f3) in s.sgnj.iter().zip([0u32, 1, 2]) {
            op(m, MASK_F7F3, f7(0x04) | f3 << 12, Fmt::R(F, F, F));
        }
        for (&m, f3) in s.minmax.iter().zip([0u32, 1]) {
            op(m, MASK_F7F3, f7(0x05) | f3 << 12, Fmt::R(F, F, F));
        }
        for (&m, f3) in s.cmp.iter().zip([0u32, 1, 2]) {
            op(m, MASK_F7F3, f7(0x14) | f3 << 12, Fmt::R(X, F, F));
        }
        op(s.class, MASK_F7RS2F3, f7(0x1C) | 1 << 12, Fmt::Unary(X, F, false));
        for (&m, rs2) in s.to_int.iter().zip([0u32, 1, 2, 3]) {
            op(m, MASK_F7RS2, f7(0x18) | rs2 << 20, Fmt::Unary(X, F, true));
        }
        for (&m, rs2) in s.from_int.iter().zip([0u32, 1, 2, 3]) {
            op(m, MASK_F7RS2, f7(0x1A) | rs2 << 20, Fmt::Unary(F, X, true));
        }
        if let Some(m) = s.mv_x {
            op(m, MASK_F7RS2F3, f7(0x1C), Fmt::Unary(X, F, false));
        }
        if let Some(m) = s.mv_f {
            op(m, MASK_F7RS2F3, f7(0x1E), Fmt::Unary(F, X, false));
        }
    }
    // Conversions between formats: funct5 0x08, destination fmt in funct7, source in rs2.
    for (m, dst, src) in [
        (FcvtSD, 0u32, 1u32), (FcvtDS, 1, 0), (FcvtSQ, 0, 3), (FcvtQS, 3, 0), (FcvtDQ, 1, 3), (FcvtQD, 3, 1),
    ] {
        op(m, MASK_F7RS2, (0x08 << 27) | dst << 25 | src << 20 | 0x53, Fmt::Unary(F, F, true));
    }
    t
}

pub(super) fn table() -> &'static [Op32] {
    static T: OnceLock<Vec<Op32>> = OnceLock::new();
    T.get_or_init(build_table)
}

fn buckets() -> &'static [Vec<Op32>] {
    static B: OnceLock<Vec<Vec<Op32>>> = OnceLock::new();
    B.get_or_init(|| {
        let mut b = vec![Vec::new(); 128];
        for o in table() {
            b[(o.bits & 0x7F) as usize].push(*o);
        }
        b
    })
}

#[inline]
fn bits(w: u32, hi: u32, lo: u32) -> u32 {
    (w >> lo) & ((1 << (hi - lo + 1)) - 1)
}

#[inline]
fn sext(v: u32, width: u32) -> i32 {
    let s = 32 - width;
    ((v << s) as i32) >> s
}

fn rm_valid(rm: u32) -> bool {
    rm != 5 && rm != 6
}

/// Decodes a word; `None` means the pattern is not a defined RV64GC instruction.
pub fn decode(word: InstrWord) -> Option<DecodedInstr> {
    match word.width() {
        Width::W32 => decode32(word.value()),
        Width::W16 => decode16(word.value() as u16),
    }
}

fn decode32(w: u32) -> Option<DecodedInstr> {
    let o = buckets()[(w & 0x7F) as usize].iter().find(|o| w & o.mask == o.bits)?;
    let rd = bits(w, 11, 7) as u8;
    let rs1 = bits(w, 19, 15) as u8;
    let rs2 = bits(w, 24, 20) as u8;
    let rs3 = bits(w, 31, 27) as u8;
    let f3 = bits(w, 14, 12);
    let i_imm = sext(bits(w, 31, 20), 12);
    let mut d = DecodedInstr::new(o.m);
    match o.fmt {
        Fmt::R(a, b, c) => {
            d = d.rd(Reg::new(a, rd)).rs1(Reg::new(b, rs1)).rs2(Reg::new(c, rs2));
        }
        Fmt::RRm(a, b, c) => {
            if !rm_valid(f3) {
                return None;
            }
            d = d.rd(Reg::new(a, rd)).rs1(Reg::new(b, rs1)).rs2(Reg::new(c, rs2)).rm(f3 as u8);
        }
        Fmt::R4 => {
            if !rm_valid(f3) {
                return None;
            }
            d = d.rd(Reg::F(rd)).rs1(Reg::F(rs1)).rs2(Reg::F(rs2)).rs3(Reg::F(rs3)).rm(f3 as u8);
        }
        Fmt::Unary(a, b, has_rm) => {
            d = d.rd(Reg::new(a, rd)).rs1(Reg::new(b, rs1));
            if has_rm {
                if !rm_valid(f3) {
                    return None;
                }
                d = d.rm(f3 as u8);
            }
        }
        Fmt::I(a) => d = d.rd(Reg::new(a, rd)).rs1(Reg::X(rs1)).imm(i_imm),
        Fmt::S(b) => {
            let imm = sext(bits(w, 31, 25) << 5 | bits(w, 11, 7), 12);
            d = d.rs1(Reg::X(rs1)).rs2(Reg::new(b, rs2)).imm(imm);
        }
        Fmt::B => {
            let imm = bits(w, 31, 31) << 12 | bits(w, 7, 7) << 11 | bits(w, 30, 25) << 5 | bits(w, 11, 8) << 1;
            d = d.rs1(Reg::X(rs1)).rs2(Reg::X(rs2)).imm(sext(imm, 13));
        }
        Fmt::U => d = d.rd(Reg::X(rd)).imm(bits(w, 31, 12) as i32),
        Fmt::J => {
            let imm = bits(w, 31, 31) << 20 | bits(w, 19, 12) << 12 | bits(w, 20, 20) << 11 | bits(w, 30, 21) << 1;
            d = d.rd(Reg::X(rd)).imm(sext(imm, 21));
        }
        Fmt::Sh6 => d = d.rd(Reg::X(rd)).rs1(Reg::X(rs1)).imm(bits(w, 25, 20) as i32),
        Fmt::Sh5 => d = d.rd(Reg::X(rd)).rs1(Reg::X(rs1)).imm(bits(w, 24, 20) as i32),
        Fmt::Fence => d = d.imm(bits(w, 27, 20) as i32),
        Fmt::Exact => {}
        Fmt::Csr => d = d.rd(Reg::X(rd)).rs1(Reg::X(rs1)).csr(bits(w, 31, 20) as u16),
        Fmt::CsrI => d = d.rd(Reg::X(rd)).imm(rs1 as i32).csr(bits(w, 31, 20) as u16),
        Fmt::Amo => {
            d = d.rd(Reg::X(rd)).rs1(Reg::X(rs1)).rs2(Reg::X(rs2)).aqrl(w >> 26 & 1 == 1, w >> 25 & 1 == 1);
        }
        Fmt::Lr => d = d.rd(Reg::X(rd)).rs1(Reg::X(rs1)).aqrl(w >> 26 & 1 == 1, w >> 25 & 1 == 1),
    }
    Some(d)
}

fn c(m: Mnemonic) -> DecodedInstr {
    let mut d = DecodedInstr::new(m);
    d.compressed = true;
    d
}

fn hint(w: u16) -> Option<DecodedInstr> {
    Some(c(Mnemonic::Hint).imm(w as i32))
}

fn decode16(h: u16) -> Option<DecodedInstr> {
    use Mnemonic::*;
    let w = h as u32;
    let quadrant = w & 3;
    let f3 = bits(w, 15, 13);
    let rd = bits(w, 11, 7) as u8;
    let rs2 = bits(w, 6, 2) as u8;
    let rdp = 8 + bits(w, 4, 2) as u8;
    let rs1p = 8 + bits(w, 9, 7) as u8;
    let imm6 = sext(bits(w, 12, 12) << 5 | bits(w, 6, 2), 6);
    let shamt = (bits(w, 12, 12) << 5 | bits(w, 6, 2)) as i32;
    // Offsets of the register-based loads and stores.
    let off_w = (bits(w, 12, 10) << 3 | bits(w, 6, 6) << 2 | bits(w, 5, 5) << 6) as i32;
    let off_d = (bits(w, 12, 10) << 3 | bits(w, 6, 5) << 6) as i32;
    match (quadrant, f3) {
        (0, 0) => {
            let nzuimm = bits(w, 12, 11) << 4 | bits(w, 10, 7) << 6 | bits(w, 6, 6) << 2 | bits(w, 5, 5) << 3;
            if nzuimm == 0 {
                return None;
            }
            Some(c(Addi).rd(Reg::X(rdp)).rs1(Reg::SP).imm(nzuimm as i32))
        }
        (0, 1) => Some(c(Fld).rd(Reg::F(rdp)).rs1(Reg::X(rs1p)).imm(off_d)),
        (0, 2) => Some(c(Lw).rd(Reg::X(rdp)).rs1(Reg::X(rs1p)).imm(off_w)),
        (0, 3) => Some(c(Ld).rd(Reg::X(rdp)).rs1(Reg::X(rs1p)).imm(off_d)),
        (0, 4) => None,
        (0, 5) => Some(c(Fsd).rs1(Reg::X(rs1p)).rs2(Reg::F(rdp)).imm(off_d)),
        (0, 6) => Some(c(Sw).rs1(Reg::X(rs1p)).rs2(Reg::X(rdp)).imm(off_w)),
        (0, 7) => Some(c(Sd).rs1(Reg::X(rs1p)).rs2(Reg::X(rdp)).imm(off_d)),
        (1, 0) => {
            if rd == 0 && imm6 == 0 {
                Some(c(Nop))
            } else if rd == 0 || imm6 == 0 {
                hint(h)
            } else {
                Some(c(Addi).rd(Reg::X(rd)).rs1(Reg::X(rd)).imm(imm6))
            }
        }
        (1, 1) => (rd != 0).then(|| c(Addiw).rd(Reg::X(rd)).rs1(Reg::X(rd)).imm(imm6)),
        (1, 2) => {
            if rd == 0 {
                hint(h)
            } else {
                Some(c(Li).rd(Reg::X(rd)).imm(imm6))
            }
        }
        (1, 3) => {
            if rd == 2 {
                let nz = bits(w, 12, 12) << 9 | bits(w, 6, 6) << 4 | bits(w, 5, 5) << 6 | bits(w, 4, 3) << 7 | bits(w, 2, 2) << 5;
                if nz == 0 {
                    return None;
                }
                Some(c(Addi).rd(Reg::SP).rs1(Reg::SP).imm(sext(nz, 10)))
            } else if imm6 == 0 {
                None
            } else if rd == 0 {
                hint(h)
            } else {
                Some(c(Lui).rd(Reg::X(rd)).imm(imm6 & 0xFFFFF))
            }
        }
        (1, 4) => {
            let r = Reg::X(rs1p);
            match bits(w, 11, 10) {
                0 | 1 => {
                    if shamt == 0 {
                        return hint(h);
                    }
                    let m = if bits(w, 11, 10) == 0 { Srli } else { Srai };
                    Some(c(m).rd(r).rs1(r).imm(shamt))
                }
                2 => Some(c(Andi).rd(r).rs1(r).imm(imm6)),
                _ => {
                    let m = match (bits(w, 12, 12), bits(w, 6, 5)) {
                        (0, 0) => Sub,
                        (0, 1) => Xor,
                        (0, 2) => Or,
                        (0, 3) => And,
                        (1, 0) => Subw,
                        (1, 1) => Addw,
                        _ => return None,
                    };
                    Some(c(m).rd(r).rs1(r).rs2(Reg::X(rdp)))
                }
            }
        }
        (1, 5) => {
            let off = bits(w, 12, 12) << 11 | bits(w, 11, 11) << 4 | bits(w, 10, 9) << 8 | bits(w, 8, 8) << 10
                | bits(w, 7, 7) << 6 | bits(w, 6, 6) << 7 | bits(w, 5, 3) << 1 | bits(w, 2, 2) << 5;
            Some(c(J).imm(sext(off, 12)))
        }
        (1, 6) | (1, 7) => {
            let off = bits(w, 12, 12) << 8 | bits(w, 11, 10) << 3 | bits(w, 6, 5) << 6 | bits(w, 4, 3) << 1 | bits(w, 2, 2) << 5;
            let m = if f3 == 6 { Beqz } else { Bnez };
            Some(c(m).rs1(Reg::X(rs1p)).imm(sext(off, 9)))
        }
        (2, 0) => {
            if rd == 0 || shamt == 0 {
                hint(h)
            } else {
                Some(c(Slli).rd(Reg::X(rd)).rs1(Reg::X(rd)).imm(shamt))
            }
        }
        (2, 1) => {
            let off = bits(w, 12, 12) << 5 | bits(w, 6, 5) << 3 | bits(w, 4, 2) << 6;
            Some(c(Fld).rd(Reg::F(rd)).rs1(Reg::SP).imm(off as i32))
        }
        (2, 2) => {
            let off = bits(w, 12, 12) << 5 | bits(w, 6, 4) << 2 | bits(w, 3, 2) << 6;
            (rd != 0).then(|| c(Lw).rd(Reg::X(rd)).rs1(Reg::SP).imm(off as i32))
        }
        (2, 3) => {
            let off = bits(w, 12, 12) << 5 | bits(w, 6, 5) << 3 | bits(w, 4, 2) << 6;
            (rd != 0).then(|| c(Ld).rd(Reg::X(rd)).rs1(Reg::SP).imm(off as i32))
        }
        (2, 4) => {
            let high = bits(w, 12, 12) == 1;
            match (high, rd, rs2) {
                (false, 0, 0) => None,
                (false, _, 0) => Some(c(Jr).rs1(Reg::X(rd))),
                (false, 0, _) => hint(h),
                (false, _, _) => Some(c(Mv).rd(Reg::X(rd)).rs2(Reg::X(rs2))),
                (true, 0, 0) => Some(c(Ebreak)),
                (true, _, 0) => Some(c(Jalr).rd(Reg::RA).rs1(Reg::X(rd)).imm(0)),
                (true, 0, _) => hint(h),
                (true, _, _) => Some(c(Add).rd(Reg::X(rd)).rs1(Reg::X(rd)).rs2(Reg::X(rs2))),
            }
        }
        (2, 5) => {
            let off = bits(w, 12, 10) << 3 | bits(w, 9, 7) << 6;
            Some(c(Fsd).rs1(Reg::SP).rs2(Reg::F(rs2)).imm(off as i32))
        }
        (2, 6) => {
            let off = bits(w, 12, 9) << 2 | bits(w, 8, 7) << 6;
            Some(c(Sw).rs1(Reg::SP).rs2(Reg::X(rs2)).imm(off as i32))
        }
        (2, 7) => {
            let off = bits(w, 12, 10) << 3 | bits(w, 9, 7) << 6;
            Some(c(Sd).rs1(Reg::SP).rs2(Reg::X(rs2)).imm(off as i32))
        }
        _ => None,
    }
}
