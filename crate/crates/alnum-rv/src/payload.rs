//! Small RV64 payloads for tests and demos. They are plain machine code, not
//! charset-constrained; the linker is what makes them alphanumeric.

use rand::Rng;

use crate::emu::{DEFAULT_SENTINEL, UART_ADDR};
use crate::isa::{encode, DecodedInstr, Mnemonic, PreferredWidth, Reg};

pub const HELLO: &[u8] = b"Hello world!";

fn emit(out: &mut Vec<u8>, d: DecodedInstr) {
    encode(&d, PreferredWidth::W32).expect("payload instruction encodes").push_to(out);
}

/// `lui t0,hi(addr); jr t0`. `addr` must be 4 KiB aligned.
pub fn jump_to(addr: u64) -> Vec<u8> {
    let mut out = Vec::new();
    emit(&mut out, DecodedInstr::new(Mnemonic::Lui).rd(Reg::T0).imm((addr >> 12) as i32));
    emit(&mut out, DecodedInstr::new(Mnemonic::Jalr).rd(Reg::ZERO).rs1(Reg::T0).imm(0));
    out
}

/// Writes `msg` byte by byte to the serial port, then jumps to `sentinel`.
pub fn serial_print(msg: &[u8], uart: u64, sentinel: u64) -> Vec<u8> {
    let mut out = Vec::new();
    emit(&mut out, DecodedInstr::new(Mnemonic::Lui).rd(Reg::T0).imm((uart >> 12) as i32));
    let lo = (uart & 0xfff) as i32;
    for &ch in msg {
        emit(&mut out, DecodedInstr::new(Mnemonic::Addi).rd(Reg::T1).rs1(Reg::ZERO).imm(ch as i32));
        emit(&mut out, DecodedInstr::new(Mnemonic::Sb).rs1(Reg::T0).rs2(Reg::T1).imm(lo));
    }
    out.extend(jump_to(sentinel));
    out
}

/// The hello-world payload: "Hello world!" on the default UART, then exit.
pub fn hello_world() -> Vec<u8> {
    serial_print(HELLO, UART_ADDR, DEFAULT_SENTINEL)
}

/// `len` random bytes with a jump over them to an exit tail. The tail ends the
/// payload, or sits one byte short of the end when `len` is odd. Payloads too
/// short for the jumps are all random.
pub fn random_with_exit(rng: &mut impl Rng, len: usize) -> Vec<u8> {
    let tail = jump_to(DEFAULT_SENTINEL);
    let skip_len = 4;
    let mut out = Vec::with_capacity(len);
    if len < tail.len() + skip_len {
        out.resize(len, 0);
        rng.fill(&mut out[..]);
        return out;
    }
    let body = (len - tail.len() - skip_len) & !1;
    // j over the random body
    emit(&mut out, DecodedInstr::new(Mnemonic::Jal).rd(Reg::ZERO).imm((body + skip_len) as i32));
    let start = out.len();
    out.resize(start + body, 0);
    rng.fill(&mut out[start..]);
    out.extend(tail);
    if out.len() < len {
        out.push(rng.gen());
    }
    out
}
