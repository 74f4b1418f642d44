mod common;

use alnum_rv::charset::Variant;
use alnum_rv::emu::{EmuConfig, EmuState, IcacheMode, Stop, DEFAULT_BASE};
use alnum_rv::fp::solver::{solve, SolverConfig, B_BITS, DEFAULT_BUDGET, DEFAULT_SEED};
use alnum_rv::isa::{decode, DecodedInstr, InstrWord, Mnemonic, Reg};
use alnum_rv::link::{tick_polymorphs, LinkOptions};
use alnum_rv::payload::hello_world;
use alnum_rv::stage1::*;
use alnum_rv::stage2::{Layout, Polymorphs, Stage2Params, BLOCK};
use common::linker;

fn dec(bytes: &[u8]) -> (DecodedInstr, usize) {
    let w = InstrWord::from_bytes(bytes).unwrap();
    (decode(w).unwrap(), w.len())
}

const POOL: u64 = DEFAULT_BASE + 0x1000;
const DEST: u64 = DEFAULT_BASE + 0x4000;

/// Runs `pre` with sp = a4 = POOL, then moves sp to DEST and runs `post`.
fn run_unpacker(unp: &UnpackerCode, fpu: bool) -> EmuState {
    let pre = words_to_bytes(&unp.pre);
    let post = words_to_bytes(&unp.post);
    let mut code = pre.clone();
    code.extend(&post);
    let cfg = EmuConfig { icache: IcacheMode::Strict, fpu_enabled: fpu, sentinel: None, ..EmuConfig::default() };
    let mut emu = EmuState::with_image(cfg, &code);
    for (off, bytes) in &unp.pool {
        emu.load(POOL + *off as u64, bytes).unwrap();
    }
    emu.set_reg(Reg::SP, POOL);
    emu.set_reg(Reg::A4, POOL);
    emu.set_reg(Reg::S4, 0);
    let mid = DEFAULT_BASE + pre.len() as u64;
    assert_eq!(emu.run_until(Some(mid), 10_000), Stop::Breakpoint(mid));
    emu.set_reg(Reg::SP, DEST);
    let end = mid + post.len() as u64;
    assert_eq!(emu.run_until(Some(end), 100_000), Stop::Breakpoint(end));
    emu
}

#[test]
fn headers_are_the_smallest_jal() {
    for (v, text) in [(Variant::Hash, b"o#0#"), (Variant::Slash, b"o/0/"), (Variant::Tick, b"o'0'")] {
        let cat = &linker(v).catalog;
        let asm = Asm::new(cat);
        let h = build_header(&asm, v, 0).unwrap();
        assert_eq!(&words_to_bytes(&[h.word])[..], text, "{v:?}");
        assert_eq!(h.link, link_reg(v));
        let far = build_header(&asm, v, 10_000).unwrap();
        assert!(far.offset as usize >= 10_004);
        let d = decode(far.word).unwrap();
        assert_eq!((d.mnemonic, d.rd), (Mnemonic::Jal, Some(link_reg(v))));
    }
}

#[test]
fn block_jump_word_holds_a_short_jump() {
    let w = block_jump_word().to_le_bytes();
    assert_eq!(&w[..4], &[0, 0, 0, 0]);
    assert_eq!(&w[4..6], &[0x31, 0xA0]);
    let (d, len) = dec(&w[4..]);
    assert_eq!(len, 2);
    assert_eq!(d.to_string(), "j 12");
}

#[test]
fn fpu_gadget_sets_fs() {
    let cfg = EmuConfig { sentinel: None, ..EmuConfig::default() };
    let mut emu = EmuState::with_image(cfg, &FPU_GADGET);
    assert!(!emu.fpu_enabled());
    let end = DEFAULT_BASE + FPU_GADGET.len() as u64;
    assert_eq!(emu.run_until(Some(end), 10), Stop::Breakpoint(end));
    assert!(emu.fpu_enabled());
    assert!(FPU_GADGET.iter().any(|b| !b.is_ascii_alphanumeric()));
}

#[test]
fn store_schedule_batches() {
    let s = store_schedule(20, 2);
    let bumps: Vec<usize> = s.iter().enumerate().filter(|(_, s)| s.0).map(|(i, _)| i).collect();
    assert_eq!(bumps, vec![10, 18]);
    assert!(s.iter().all(|&(_, o)| (STORE_BASE..=STORE_MAX).contains(&o)));
    // contiguous in absolute terms
    let mut sp = 0;
    for (i, &(bump, off)) in s.iter().enumerate() {
        sp += if bump { BUMP } else { 0 };
        assert_eq!(sp + off, STORE_BASE + 2 * i as i32);
    }
    let s = store_schedule(7, 6);
    let mut sp = 0;
    for (i, &(bump, off)) in s.iter().enumerate() {
        sp += if bump { BUMP } else { 0 };
        assert!(off <= STORE_MAX);
        assert_eq!(sp + off, STORE_BASE + 6 * i as i32);
    }
}

#[test]
fn init_and_sled_are_charset_words() {
    for v in [Variant::Hash, Variant::Slash, Variant::Tick] {
        let asm = Asm::new(&linker(v).catalog);
        let init = words_to_bytes(&build_init(&asm, v).unwrap());
        assert!(init.iter().all(|&b| v.charset().contains(b)));
        assert_eq!(init.len(), if v == Variant::Slash { 12 } else { 8 });
        assert_eq!(words_to_bytes(&nop_sled(&asm, 6).unwrap()), b"ySySyS");
        assert!(nop_sled(&asm, 3).is_err());
    }
    let asm = Asm::new(&linker(Variant::Hash).catalog);
    assert_eq!(words_to_bytes(&build_init(&asm, Variant::Hash).unwrap()), b"3Z0A3QCA");
}

#[test]
fn hash_unpacker_writes_stage2() {
    let l = linker(Variant::Hash);
    let img = l.link(&hello_world(), &LinkOptions::default()).unwrap();
    let asm = Asm::new(&l.catalog);
    let unp = build_unpacker_hash(&asm, &img.stage2, l.table.as_ref().unwrap()).unwrap();
    assert_eq!(unp.bumps, 2);
    let emu = run_unpacker(&unp, true);
    let at = DEST + STORE_BASE as u64;
    assert_eq!(emu.mem(at, img.stage2.len()).unwrap(), &img.stage2[..]);
}

#[test]
fn slash_unpacker_writes_blocks() {
    let l = linker(Variant::Slash);
    let asm = Asm::new(&l.catalog);
    let fence = fence_i_seq(&l.catalog).unwrap();
    let polys = Polymorphs::new(Layout::Blocks, Stage2Params { offset: 0, len: 64 }, Reg::A4);
    let (program, unp) = (0..1 << 12)
        .filter_map(|i| polys.get(i))
        .find_map(|p| build_unpacker_slash(&asm, &p, l.table.as_ref().unwrap(), &fence).ok().map(|u| (p, u)))
        .unwrap();
    let emu = run_unpacker(&unp, true);
    for (i, w) in program.words.iter().enumerate() {
        let block = emu.mem(DEST + (BLOCK as usize * i) as u64, 16).unwrap();
        let want = w.value().to_le_bytes();
        let n = w.len();
        assert_eq!(&block[..n], &want[..n], "block {i}");
        assert_eq!(&block[4..6], &[0x31, 0xA0], "block {i}");
        assert_eq!(dec(block).0, decode(*w).unwrap(), "block {i}");
    }
}

#[test]
fn tick_plan_and_unpacker() {
    let l = linker(Variant::Tick);
    let asm = Asm::new(&l.catalog);
    let plan = plan_tick(&asm, 7).unwrap();
    assert_eq!((plan.a.len(), plan.c.len()), (4, 7));
    let mut slots = vec![plan.b];
    slots.extend(&plan.a);
    slots.extend(&plan.c);
    for (i, s) in slots.iter().enumerate() {
        for t in &slots[i + 1..] {
            assert_ne!(s.reg, t.reg);
            assert!(s.offset + 8 <= t.offset || t.offset + 8 <= s.offset);
        }
    }
    let cfg = SolverConfig::new(DEFAULT_SEED, DEFAULT_BUDGET, 1_494_784..1_494_912);
    let res = solve(&tick_polymorphs(), B_BITS, &cfg, None).unwrap();
    let unp = build_unpacker_tick(&asm, &plan, &res).unwrap();
    assert!(unp.pool.iter().all(|(_, b)| b.iter().all(|&x| x.is_ascii_alphanumeric())));
    let emu = run_unpacker(&unp, true);
    let at = DEST + STORE_BASE as u64;
    assert_eq!(emu.mem(at, res.program.bytes.len()).unwrap(), &res.program.bytes[..]);
}

#[test]
fn tick_unpacker_needs_the_fpu() {
    let l = linker(Variant::Tick);
    let asm = Asm::new(&l.catalog);
    let plan = plan_tick(&asm, 7).unwrap();
    let res = l.tick_constants(&LinkOptions::default()).unwrap();
    let unp = build_unpacker_tick(&asm, &plan, &res).unwrap();
    let cfg = EmuConfig { sentinel: None, ..EmuConfig::default() };
    let mut emu = EmuState::with_image(cfg, &words_to_bytes(&unp.pre));
    emu.set_reg(Reg::SP, POOL);
    emu.set_reg(Reg::A4, POOL);
    assert!(matches!(emu.run(100), Stop::Trap(alnum_rv::emu::Trap::FpuDisabled { .. })));
}
