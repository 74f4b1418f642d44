use alnum_rv::emu::{EmuConfig, EmuState, IcacheMode, Stop, Trap, DEFAULT_BASE, DEFAULT_SENTINEL, UART_ADDR};
use alnum_rv::fp::fma_exact;
use alnum_rv::isa::Reg;
use proptest::prelude::*;

fn words(ws: &[u32]) -> Vec<u8> {
    ws.iter().flat_map(|w| w.to_le_bytes()).collect()
}

fn emu(code: &[u8]) -> EmuState {
    EmuState::with_image(EmuConfig::default(), code)
}

const ADDI_T0_7: u32 = 0x0070_0293;
const FENCE_I: u32 = 0x0000_100f;
const NOP: u32 = 0x0000_0013;
const AUIPC_T0: u32 = 0x0000_0297;

fn lui(rd: u32, imm: u32) -> u32 {
    imm << 12 | rd << 7 | 0x37
}

fn jalr(rd: u32, rs1: u32, imm: u32) -> u32 {
    imm << 20 | rs1 << 15 | rd << 7 | 0x67
}

fn store(width: u32, rs1: u32, rs2: u32, imm: u32) -> u32 {
    (imm >> 5) << 25 | rs2 << 20 | rs1 << 15 | width << 12 | (imm & 31) << 7 | 0x23
}

fn amo(funct5: u32, width: u32, rd: u32, rs1: u32, rs2: u32) -> u32 {
    funct5 << 27 | rs2 << 20 | rs1 << 15 | width << 12 | rd << 7 | 0x2f
}

fn fmadd_d(rd: u32, rs1: u32, rs2: u32, rs3: u32, rm: u32) -> u32 {
    rs3 << 27 | 1 << 25 | rs2 << 20 | rs1 << 15 | rm << 12 | rd << 7 | 0x43
}

fn exit() -> Vec<u32> {
    vec![lui(5, (DEFAULT_SENTINEL >> 12) as u32), jalr(0, 5, 0)]
}

#[test]
fn addi_and_exit() {
    let mut code = vec![ADDI_T0_7];
    code.extend(exit());
    let mut e = emu(&words(&code));
    assert_eq!(e.run(100), Stop::Exit);
    assert_eq!(e.reg(Reg::T0), DEFAULT_SENTINEL);
    assert_eq!(e.steps, 3);
    let mut e = emu(&words(&[ADDI_T0_7]));
    e.step().unwrap();
    assert_eq!(e.reg(Reg::T0), 7);
    assert_eq!(e.pc, DEFAULT_BASE + 4);
}

#[test]
fn x0_stays_zero() {
    let mut e = emu(&words(&[0x0070_0013]));
    e.step().unwrap();
    assert_eq!(e.reg(Reg::ZERO), 0);
}

#[test]
fn compressed_li() {
    let mut e = emu(b"yS");
    e.step().unwrap();
    assert_eq!(e.reg(Reg::T1), -2i64 as u64);
    assert_eq!(e.pc, DEFAULT_BASE + 2);
}

#[test]
fn amo_or_and_and() {
    let data = DEFAULT_BASE + 0x800;
    let (a0, t1, t2) = (10, 6, 7);
    let mut e = emu(&words(&[amo(0b01000, 3, t1, a0, t2), amo(0b01100, 2, t1, a0, t2)]));
    e.load(data, &0xF0F0_0000_1234_5678u64.to_le_bytes()).unwrap();
    e.set_reg(Reg::A0, data);
    e.set_reg(Reg::T2, 0x0F00_0000_8000_0001);
    e.step().unwrap();
    assert_eq!(e.reg(Reg::T1), 0xF0F0_0000_1234_5678);
    assert_eq!(e.mem(data, 8).unwrap(), &0xFFF0_0000_9234_5679u64.to_le_bytes());
    // amoand.w: sign-extended old word, low word and-ed
    e.step().unwrap();
    assert_eq!(e.reg(Reg::T1), 0xFFFF_FFFF_9234_5679);
    assert_eq!(e.mem(data, 8).unwrap(), &0xFFF0_0000_8000_0001u64.to_le_bytes());
}

#[test]
fn misaligned_amo_traps() {
    let mut e = emu(&words(&[amo(0b01000, 3, 6, 10, 7)]));
    e.set_reg(Reg::A0, DEFAULT_BASE + 0x801);
    assert!(matches!(e.run(10), Stop::Trap(Trap::Misaligned { .. })));
}

#[test]
fn unmapped_pc_traps() {
    let mut e = emu(&words(&[lui(5, 0x50000), jalr(0, 5, 0)]));
    assert!(matches!(e.run(10), Stop::Trap(Trap::OutOfRange { .. })));
}

#[test]
fn serial_output() {
    let mut code = vec![lui(5, (UART_ADDR >> 12) as u32)];
    for &c in b"ok\n" {
        code.push((c as u32) << 20 | 6 << 7 | 0x13);
        code.push(store(0, 5, 6, (UART_ADDR & 0xfff) as u32));
    }
    code.extend(exit());
    let mut e = emu(&words(&code));
    assert_eq!(e.run(100), Stop::Exit);
    assert_eq!(e.serial_out, b"ok\n");
}

/// Overwrites the word at offset 16 with a nop and falls into it.
fn self_modifying(fence_first: bool, fence_after: bool) -> Vec<u8> {
    let mut code = vec![if fence_first { FENCE_I } else { NOP }, AUIPC_T0, store(2, 5, 6, 12)];
    code.push(if fence_after { FENCE_I } else { NOP });
    code.push(0); // illegal until patched
    code.extend(exit());
    words(&code)
}

fn run_patch(code: &[u8], icache: IcacheMode) -> Stop {
    let mut e = EmuState::with_image(EmuConfig { icache, ..EmuConfig::default() }, code);
    e.set_reg(Reg::T1, NOP as u64);
    e.run(100)
}

#[test]
fn strict_icache() {
    assert!(matches!(run_patch(&self_modifying(true, false), IcacheMode::Strict), Stop::Trap(Trap::StaleFetch { .. })));
    assert_eq!(run_patch(&self_modifying(true, false), IcacheMode::Lenient), Stop::Exit);
    assert_eq!(run_patch(&self_modifying(true, true), IcacheMode::Strict), Stop::Exit);
    // never fetched and no fence.i yet: nothing stale
    assert_eq!(run_patch(&self_modifying(false, false), IcacheMode::Strict), Stop::Exit);
}

#[test]
fn refetch_after_store_traps() {
    // loop: store over the loop head after it has run once
    let code = words(&[AUIPC_T0, store(2, 5, 6, 0), jalr(0, 5, 0)]);
    let mut e = emu(&code);
    e.set_reg(Reg::T1, NOP as u64);
    assert!(matches!(e.run(10), Stop::Trap(Trap::StaleFetch { .. })));
}

#[test]
fn fpu_off_traps_and_csr_turns_it_on() {
    let code = words(&[fmadd_d(3, 1, 2, 4, 0)]);
    let mut e = emu(&code);
    assert!(matches!(e.run(10), Stop::Trap(Trap::FpuDisabled { .. })));
    // c.lui t2,2 ; csrw mstatus,t2 ; fmadd.d
    let mut code = alnum_rv::stage1::FPU_GADGET.to_vec();
    code.extend(words(&[fmadd_d(3, 1, 2, 4, 0)]));
    let mut e = emu(&code);
    e.run_until(Some(DEFAULT_BASE + code.len() as u64), 10);
    assert!(e.fpu_enabled());
}

proptest! {
    #[test]
    fn fmadd_matches_soft_fma(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let cfg = EmuConfig { fpu_enabled: true, ..EmuConfig::default() };
        let mut e = EmuState::with_image(cfg, &words(&[fmadd_d(3, 1, 2, 4, 7), fmadd_d(5, 1, 2, 4, 0)]));
        e.f[1] = a;
        e.f[2] = b;
        e.f[4] = c;
        e.step().unwrap();
        e.step().unwrap();
        let want = fma_exact(f64::from_bits(a), f64::from_bits(b), f64::from_bits(c));
        if want.is_nan() {
            prop_assert!(f64::from_bits(e.f[3]).is_nan());
        } else {
            prop_assert_eq!(e.f[3], want.to_bits());
            prop_assert_eq!(e.f[5], want.to_bits());
        }
    }

    #[test]
    fn deterministic_on_random_code(bytes in proptest::collection::vec(any::<u8>(), 64..256)) {
        let run = || {
            let mut e = emu(&bytes);
            let s = e.run(1000);
            (s, e.steps, e.x, e.pc)
        };
        prop_assert_eq!(run(), run());
    }
}
