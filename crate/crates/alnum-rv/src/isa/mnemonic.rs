use super::Extension;

macro_rules! mnemonics {
    ($($v:ident $s:literal $ext:ident,)*) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Mnemonic {
            $($v,)*
        }

        impl Mnemonic {
            pub const ALL: &'static [Mnemonic] = &[$(Mnemonic::$v,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Mnemonic::$v => $s,)*
                }
            }

            pub fn extension(self) -> Extension {
                match self {
                    $(Mnemonic::$v => Extension::$ext,)*
                }
            }
        }
    };
}

mnemonics! {
    Lui "lui" I, Auipc "auipc" I, Jal "jal" I, Jalr "jalr" I,
    Beq "beq" I, Bne "bne" I, Blt "blt" I, Bge "bge" I, Bltu "bltu" I, Bgeu "bgeu" I,
    Lb "lb" I, Lh "lh" I, Lw "lw" I, Ld "ld" I, Lbu "lbu" I, Lhu "lhu" I, Lwu "lwu" I,
    Sb "sb" I, Sh "sh" I, Sw "sw" I, Sd "sd" I,
    Addi "addi" I, Slti "slti" I, Sltiu "sltiu" I, Xori "xori" I, Ori "ori" I, Andi "andi" I,
    Slli "slli" I, Srli "srli" I, Srai "srai" I,
    Addiw "addiw" I, Slliw "slliw" I, Srliw "srliw" I, Sraiw "sraiw" I,
    Add "add" I, Sub "sub" I, Sll "sll" I, Slt "slt" I, Sltu "sltu" I, Xor "xor" I,
    Srl "srl" I, Sra "sra" I, Or "or" I, And "and" I,
    Addw "addw" I, Subw "subw" I, Sllw "sllw" I, Srlw "srlw" I, Sraw "sraw" I,
    Fence "fence" I, Ecall "ecall" I, Ebreak "ebreak" I,
    FenceI "fence.i" Zifencei,
    Csrrw "csrrw" Zicsr, Csrrs "csrrs" Zicsr, Csrrc "csrrc" Zicsr,
    Csrrwi "csrrwi" Zicsr, Csrrsi "csrrsi" Zicsr, Csrrci "csrrci" Zicsr,
    Mul "mul" M, Mulh "mulh" M, Mulhsu "mulhsu" M, Mulhu "mulhu" M,
    Div "div" M, Divu "divu" M, Rem "rem" M, Remu "remu" M,
    Mulw "mulw" M, Divw "divw" M, Divuw "divuw" M, Remw "remw" M, Remuw "remuw" M,
    LrW "lr.w" A, ScW "sc.w" A, AmoswapW "amoswap.w" A, AmoaddW "amoadd.w" A,
    AmoxorW "amoxor.w" A, AmoandW "amoand.w" A, AmoorW "amoor.w" A,
    AmominW "amomin.w" A, AmomaxW "amomax.w" A, AmominuW "amominu.w" A, AmomaxuW "amomaxu.w" A,
    LrD "lr.d" A, ScD "sc.d" A, AmoswapD "amoswap.d" A, AmoaddD "amoadd.d" A,
    AmoxorD "amoxor.d" A, AmoandD "amoand.d" A, AmoorD "amoor.d" A,
    AmominD "amomin.d" A, AmomaxD "amomax.d" A, AmominuD "amominu.d" A, AmomaxuD "amomaxu.d" A,
    Flw "flw" F, Fsw "fsw" F,
    FmaddS "fmadd.s" F, FmsubS "fmsub.s" F, FnmsubS "fnmsub.s" F, FnmaddS "fnmadd.s" F,
    FaddS "fadd.s" F, FsubS "fsub.s" F, FmulS "fmul.s" F, FdivS "fdiv.s" F, FsqrtS "fsqrt.s" F,
    FsgnjS "fsgnj.s" F, FsgnjnS "fsgnjn.s" F, FsgnjxS "fsgnjx.s" F,
    FminS "fmin.s" F, FmaxS "fmax.s" F,
    FcvtWS "fcvt.w.s" F, FcvtWuS "fcvt.wu.s" F, FcvtLS "fcvt.l.s" F, FcvtLuS "fcvt.lu.s" F,
    FmvXW "fmv.x.w" F, FeqS "feq.s" F, FltS "flt.s" F, FleS "fle.s" F, FclassS "fclass.s" F,
    FcvtSW "fcvt.s.w" F, FcvtSWu "fcvt.s.wu" F, FcvtSL "fcvt.s.l" F, FcvtSLu "fcvt.s.lu" F,
    FmvWX "fmv.w.x" F,
    Fld "fld" D, Fsd "fsd" D,
    FmaddD "fmadd.d" D, FmsubD "fmsub.d" D, FnmsubD "fnmsub.d" D, FnmaddD "fnmadd.d" D,
    FaddD "fadd.d" D, FsubD "fsub.d" D, FmulD "fmul.d" D, FdivD "fdiv.d" D, FsqrtD "fsqrt.d" D,
    FsgnjD "fsgnj.d" D, FsgnjnD "fsgnjn.d" D, FsgnjxD "fsgnjx.d" D,
    FminD "fmin.d" D, FmaxD "fmax.d" D, FcvtSD "fcvt.s.d" D, FcvtDS "fcvt.d.s" D,
    FcvtWD "fcvt.w.d" D, FcvtWuD "fcvt.wu.d" D, FcvtLD "fcvt.l.d" D, FcvtLuD "fcvt.lu.d" D,
    FmvXD "fmv.x.d" D, FeqD "feq.d" D, FltD "flt.d" D, FleD "fle.d" D, FclassD "fclass.d" D,
    FcvtDW "fcvt.d.w" D, FcvtDWu "fcvt.d.wu" D, FcvtDL "fcvt.d.l" D, FcvtDLu "fcvt.d.lu" D,
    FmvDX "fmv.d.x" D,
    Flq "flq" Q, Fsq "fsq" Q,
    FmaddQ "fmadd.q" Q, FmsubQ "fmsub.q" Q, FnmsubQ "fnmsub.q" Q, FnmaddQ "fnmadd.q" Q,
    FaddQ "fadd.q" Q, FsubQ "fsub.q" Q, FmulQ "fmul.q" Q, FdivQ "fdiv.q" Q, FsqrtQ "fsqrt.q" Q,
    FsgnjQ "fsgnj.q" Q, FsgnjnQ "fsgnjn.q" Q, FsgnjxQ "fsgnjx.q" Q,
    FminQ "fmin.q" Q, FmaxQ "fmax.q" Q, FcvtSQ "fcvt.s.q" Q, FcvtQS "fcvt.q.s" Q,
    FcvtDQ "fcvt.d.q" Q, FcvtQD "fcvt.q.d" Q,
    FcvtWQ "fcvt.w.q" Q, FcvtWuQ "fcvt.wu.q" Q, FcvtLQ "fcvt.l.q" Q, FcvtLuQ "fcvt.lu.q" Q,
    FeqQ "feq.q" Q, FltQ "flt.q" Q, FleQ "fle.q" Q, FclassQ "fclass.q" Q,
    FcvtQW "fcvt.q.w" Q, FcvtQWu "fcvt.q.wu" Q, FcvtQL "fcvt.q.l" Q, FcvtQLu "fcvt.q.lu" Q,
    Li "li" C, Mv "mv" C, Nop "nop" C, J "j" C, Jr "jr" C, Beqz "beqz" C, Bnez "bnez" C,
    Hint "hint" C,
}

impl Mnemonic {
    pub fn from_name(name: &str) -> Option<Mnemonic> {
        Mnemonic::ALL.iter().copied().find(|m| m.name() == name)
    }

    pub fn is_shift_imm(self) -> bool {
        use Mnemonic::*;
        matches!(self, Slli | Srli | Srai | Slliw | Srliw | Sraiw)
    }

    pub fn is_branch(self) -> bool {
        use Mnemonic::*;
        matches!(self, Beq | Bne | Blt | Bge | Bltu | Bgeu | Beqz | Bnez)
    }

    pub fn is_jump(self) -> bool {
        use Mnemonic::*;
        matches!(self, Jal | Jalr | J | Jr)
    }

    pub fn is_amo(self) -> bool {
        self.name().starts_with("amo") || self.name().starts_with("sc.") || self.name().starts_with("lr.")
    }

    /// Instructions that write data memory.
    pub fn writes_memory(self) -> bool {
        use Mnemonic::*;
        matches!(self, Sb | Sh | Sw | Sd | Fsw | Fsd | Fsq) || (self.is_amo() && !matches!(self, LrW | LrD))
    }

    pub fn reads_memory(self) -> bool {
        use Mnemonic::*;
        matches!(self, Lb | Lh | Lw | Ld | Lbu | Lhu | Lwu | Flw | Fld | Flq) || self.is_amo()
    }
}
