//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::time::{Duration, Instant};

use alnum_rv::catalog::Catalog;
use alnum_rv::charset::{is_alnum, Variant};
use alnum_rv::emu::{EmuConfig, EmuState, IcacheMode, Stop, DEFAULT_BASE};
use alnum_rv::fp::solver::{expected_hit_rate, hit_rate, DEFAULT_BUDGET, DEFAULT_SEED};
use alnum_rv::isa::{decode, InstrWord, Mnemonic, Reg};
use alnum_rv::link::{verify, LinkOptions, VerifyOptions, TICK_FIRST_INSTANCE};
use alnum_rv::loadtable::{is_nop_like, slash_nop_guard, LoadSeq, LoadTable};
use alnum_rv::payload::{hello_world, random_with_exit, HELLO};
use alnum_rv::stage1::FixupPlanner;
use alnum_rv::stage2::{decode_pair, encode_byte};
use common::{hash_listing, linker};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const LUI_COUNT: usize = 238_791;
const CATALOG_TIME: Duration = Duration::from_secs(120);
const HASH_COVERAGE: usize = 63_448;
const SLASH_COVERAGE: usize = 58_174;
const TABLE_TIME: Duration = Duration::from_secs(600);
const HASH_STAGE2_LEN: usize = 40;
const HELLO_TIME: Duration = Duration::from_secs(30);
const RANDOM_PAYLOADS: usize = 64;
const SUBSET: std::ops::Range<u64> = TICK_FIRST_INSTANCE..TICK_FIRST_INSTANCE + 128;
const HIT_SAMPLES: u64 = 10_000_000;
const HIT_FACTOR: f64 = 3.0;
const FIXUP_MAX: i64 = 64 * 1024;
const SLED_MAX: usize = 16;
const REPLAY_OUTPUT: &[u8] = b"Hello, world!\n";

/// Criteria that cannot be met as written; each is analysed in the decisions ledger.
const KNOWN_GAPS: &[u32] = &[1];

struct Outcome {
    id: u32,
    ok: bool,
}

fn report(out: &mut Vec<Outcome>, id: u32, name: &str, ok: bool, detail: String) {
    println!("{} {id:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    out.push(Outcome { id, ok });
}

fn catalog_count() -> (bool, String) {
    let t = Instant::now();
    let cat = Catalog::for_variant(Variant::Alnum);
    let n = cat.count(Mnemonic::Lui);
    let el = t.elapsed();
    let wide = cat.get(Mnemonic::Lui).iter().filter(|(w, _)| w.len() == 4).count();
    (
        n == LUI_COUNT && el < CATALOG_TIME,
        format!("{n} lui encodings ({wide} wide, {} compressed), want {LUI_COUNT}; {el:.1?}", n - wide),
    )
}

fn validity_examples() -> (bool, String) {
    let w = |s: &[u8]| InstrWord::from_bytes(s).and_then(decode);
    let a = w(b"7OOT").map(|d| d.to_string());
    let b = w(b"WOOT");
    (a.as_deref() == Some("lui t5,0x544f4") && b.is_none(), format!("7OOT = {a:?}, WOOT = {b:?}"))
}

fn table_coverage(tables: &[(Variant, &LoadTable, Duration)]) -> (bool, String) {
    let (h, s) = (tables[0].1, tables[1].1);
    let ok = h.coverage() >= HASH_COVERAGE
        && s.coverage() >= SLASH_COVERAGE
        && tables.iter().all(|t| t.2 < TABLE_TIME);
    (
        ok,
        format!(
            "# {} (>= {HASH_COVERAGE}), / {} (>= {SLASH_COVERAGE}, {} with nop-like upper half); built in {:.1?} and {:.1?}",
            h.coverage(),
            s.coverage(),
            s.guarded_coverage(),
            tables[0].2,
            tables[1].2
        ),
    )
}

fn seq_sound(seq: &LoadSeq, preserve: &[Reg], seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = EmuConfig { mem_size: 64, icache: IcacheMode::Lenient, sentinel: None, ..EmuConfig::default() };
    let mut st = EmuState::new(cfg);
    let code = seq.bytes();
    if st.load(DEFAULT_BASE, &code).is_err() {
        return false;
    }
    for i in 1..32 {
        st.set_reg(Reg::X(i), rng.gen());
    }
    let start = st.x;
    for _ in &seq.instrs {
        if st.step().is_err() {
            return false;
        }
    }
    let got = st.reg(seq.target_reg);
    got as u16 == seq.target16
        && got == seq.full_value
        && preserve.iter().all(|r| st.reg(*r) == start[r.index() as usize])
}

fn table_soundness(tables: &[(Variant, &LoadTable, Duration)]) -> (bool, String) {
    let mut total = 0;
    let mut bad = 0;
    for (_, t, _) in tables {
        let entries: Vec<&LoadSeq> = t.iter().collect();
        total += entries.len();
        bad += entries
            .par_iter()
            .enumerate()
            .filter(|(i, s)| !seq_sound(s, &t.config.preserve, *i as u64))
            .count();
    }
    let s = tables[1].1;
    let guard = slash_nop_guard();
    let guarded: Vec<&LoadSeq> = s.iter_guarded().collect();
    let bad_guard = guarded.iter().filter(|q| !is_nop_like((q.full_value >> 16) as u16, &guard)).count();
    (bad == 0 && bad_guard == 0, format!("{} of {total} entries reproduce their value; {bad_guard} bad guarded", total - bad))
}

fn codec() -> (bool, String) {
    let total = (0..=255u8).all(|b| {
        let (k, l) = encode_byte(b);
        is_alnum(k) && is_alnum(l) && decode_pair(k, l) == b
    });
    let img = linker(Variant::Hash).link(&hello_world(), &LinkOptions::default());
    let n = img.as_ref().map(|i| i.stage2.len()).unwrap_or(0);
    (total && n == HASH_STAGE2_LEN, format!("256 bytes round-trip: {total}; # stage 2 is {n} bytes"))
}

fn hello() -> (bool, String) {
    let mut parts = Vec::new();
    let mut ok = true;
    for v in [Variant::Hash, Variant::Slash, Variant::Tick] {
        let l = linker(v);
        let opts = LinkOptions::default();
        if v == Variant::Tick {
            // solving is excluded from the time limit
            ok &= l.tick_constants(&opts).is_ok();
        }
        let t = Instant::now();
        let img = match l.link(&hello_world(), &opts) {
            Ok(i) => i,
            Err(e) => {
                ok = false;
                parts.push(format!("{} link error {e}", v.name()));
                continue;
            }
        };
        let r = verify(&img, &VerifyOptions::default());
        let el = t.elapsed();
        let good = r.passed() && r.serial == HELLO && r.stop == Some(Stop::Exit) && el < HELLO_TIME;
        ok &= good;
        parts.push(format!("{} {}B {:?} {el:.1?}", v.name(), img.bytes.len(), String::from_utf8_lossy(&r.serial)));
    }
    (ok, parts.join(", "))
}

fn random_payloads() -> (bool, String) {
    let mut parts = Vec::new();
    let mut ok = true;
    for v in [Variant::Hash, Variant::Slash, Variant::Tick] {
        let t = Instant::now();
        let l = linker(v);
        let passed = (0..RANDOM_PAYLOADS as u64)
            .into_par_iter()
            .filter(|&i| {
                let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0000 + i);
                let len = rng.gen_range(12..=512);
                let p = random_with_exit(&mut rng, len);
                let Ok(img) = l.link(&p, &LinkOptions::default()) else { return false };
                let r = verify(&img, &VerifyOptions::default());
                r.reached_payload && r.payload_match && r.stop == Some(Stop::Exit)
            })
            .count();
        ok &= passed == RANDOM_PAYLOADS;
        parts.push(format!("{} {passed}/{RANDOM_PAYLOADS} in {:.1?}", v.name(), t.elapsed()));
    }
    (ok, parts.join(", "))
}

fn fmadd_solver() -> (bool, String) {
    let l = linker(Variant::Tick);
    let opts = LinkOptions { seed: DEFAULT_SEED, budget: DEFAULT_BUDGET, tick_instances: SUBSET, ..LinkOptions::default() };
    let t = Instant::now();
    let Ok(res) = l.tick_constants(&opts) else { return (false, "no solution in the subset".into()) };
    let solve_time = t.elapsed();
    let Ok(img) = l.link(&hello_world(), &opts) else { return (false, "link failed".into()) };
    // run stage 1 up to stage 2 and compare what the fmadd/fsd chain wrote
    let cfg = EmuConfig { fpu_enabled: true, ..EmuConfig::default() };
    let mut st = EmuState::with_image(cfg, &img.bytes);
    let at = DEFAULT_BASE + img.stage2_offset as u64;
    let reached = st.run_until(Some(at), 1_000_000) == Stop::Breakpoint(at);
    let exact = reached && st.mem(at, res.program.bytes.len()) == Some(&res.program.bytes[..]);
    let t = Instant::now();
    let h = hit_rate(HIT_SAMPLES, DEFAULT_SEED);
    let ratio = h.rate() / expected_hit_rate();
    let within = (1.0 / HIT_FACTOR..=HIT_FACTOR).contains(&ratio);
    (
        exact && within && h.samples >= HIT_SAMPLES,
        format!(
            "instance {} solved in {solve_time:.1?}, stage 2 bit-exact: {exact}; hit rate {}/{} = 1/{:.0}, (62/256)^6 = 1/{:.0}, ratio {ratio:.2} ({:.1?})",
            res.instance,
            h.hits,
            h.samples,
            1.0 / h.rate(),
            1.0 / expected_hit_rate(),
            t.elapsed()
        ),
    )
}

/// Fewest increments for every multiple of 16 in [0, max], layer by layer.
fn layered(imms: &[i32], max: i64) -> Vec<u32> {
    let (lo, hi) = (-8192i64, max + 8192);
    let mut best = vec![u32::MAX; (max / 16 + 1) as usize];
    let mut seen = vec![false; ((hi - lo) / 16 + 1) as usize];
    let slot = |v: i64| ((v - lo) / 16) as usize;
    let mut layer = vec![0i64];
    seen[slot(0)] = true;
    let mut k = 0;
    while !layer.is_empty() {
        let mut next = Vec::new();
        for &v in &layer {
            if (0..=max).contains(&v) {
                best[(v / 16) as usize] = best[(v / 16) as usize].min(k);
            }
            for &i in imms {
                let w = v + i as i64;
                if (lo..=hi).contains(&w) && !seen[slot(w)] {
                    seen[slot(w)] = true;
                    next.push(w);
                }
            }
        }
        layer = next;
        k += 1;
    }
    best
}

fn fixup() -> (bool, String) {
    let planner = FixupPlanner::for_catalog(&linker(Variant::Hash).catalog);
    let best = layered(planner.immediates(), FIXUP_MAX + 16);
    let mut bad = 0;
    let mut max_sled = 0;
    let mut beats_nm = 0;
    for d in 0..=FIXUP_MAX {
        let Some(c) = planner.plan(d) else {
            bad += 1;
            continue;
        };
        max_sled = max_sled.max(c.nopsled_len);
        let s0 = (-d).rem_euclid(16);
        let sleds: &[i64] = if s0 == 0 { &[0, 16] } else { &[s0] };
        let want = sleds.iter().map(|s| best[((d + s) / 16) as usize]).min().unwrap();
        // the (n, m, s) chains of 464s and 448s
        let nm = sleds
            .iter()
            .flat_map(|&s| (0..=(d + s) / 464).filter_map(move |n| ((d + s - 464 * n) % 448 == 0).then(|| n + (d + s - 464 * n) / 448)))
            .min();
        let len = c.imms.len() as u32;
        let sums = c.imms.iter().map(|&i| i as i64).sum::<i64>() == d + c.nopsled_len as i64;
        if len != want || !sums || c.nopsled_len > SLED_MAX || nm.is_some_and(|k| (len as i64) > k) {
            bad += 1;
        }
        beats_nm += nm.is_some_and(|k| (len as i64) < k) as u32;
    }
    (
        bad == 0,
        format!("{} distances, {bad} non-minimal, longest sled {max_sled}, {beats_nm} shorter than any 464/448 chain", FIXUP_MAX + 1),
    )
}

fn replay() -> (bool, String) {
    let code = hash_listing();
    let mut st = EmuState::with_image(EmuConfig::default(), &code);
    st.set_reg(Reg::SP, DEFAULT_BASE);
    let stop = st.run(5_000_000);
    let out = st.serial_out.clone();
    (
        out == REPLAY_OUTPUT,
        format!("{} bytes, stop {stop:?}, serial {:?} (the listing's string)", code.len(), String::from_utf8_lossy(&out)),
    )
}

fn main() {
    let mut out = Vec::new();
    let (ok, d) = catalog_count();
    report(&mut out, 1, "catalog lui count", ok, d);
    let (ok, d) = validity_examples();
    report(&mut out, 2, "validity examples", ok, d);
    let mut tables = Vec::new();
    for v in [Variant::Hash, Variant::Slash] {
        let t = Instant::now();
        let l = linker(v);
        tables.push((v, l.table.as_ref().unwrap(), t.elapsed()));
    }
    let (ok, d) = table_coverage(&tables);
    report(&mut out, 3, "load-table coverage", ok, d);
    let (ok, d) = table_soundness(&tables);
    report(&mut out, 4, "load-table soundness", ok, d);
    let (ok, d) = codec();
    report(&mut out, 5, "stage-2 codec", ok, d);
    let (ok, d) = hello();
    report(&mut out, 6, "hello world", ok, d);
    let (ok, d) = random_payloads();
    report(&mut out, 7, "random payloads", ok, d);
    let (ok, d) = fmadd_solver();
    report(&mut out, 8, "fmadd solver", ok, d);
    let (ok, d) = fixup();
    report(&mut out, 9, "fixup minimality", ok, d);
    let (ok, d) = replay();
    report(&mut out, 10, "listing replay", ok, d);

    let failed: Vec<u32> = out.iter().filter(|o| !o.ok).map(|o| o.id).collect();
    let unexpected: Vec<u32> = failed.iter().copied().filter(|id| !KNOWN_GAPS.contains(id)).collect();
    println!("{} of {} criteria pass; known gaps failing: {:?}", out.len() - failed.len(), out.len(), failed.iter().filter(|id| KNOWN_GAPS.contains(id)).collect::<Vec<_>>());
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
