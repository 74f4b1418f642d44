//! Alphanumeric solutions of `r = a*b + c` for the `'` unpacker.
//!
//! Each `r` carries six stage-2 bytes in its low mantissa; the two high bytes
//! are fixed. `b` is shared by every equation and consecutive equations share
//! `a`. With the pinned constants below `c` always lands two binades under `r`
//! with an alphanumeric exponent byte, so only its six low bytes are left to
//! chance.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::soft::fma_exact;
use crate::charset::is_alnum;
use crate::error::{Error, Result};
use crate::stage2::{Polymorphs, Stage2Program};

/// The shared multiplier, bytes "BBBBBB9H".
pub const B_BITS: u64 = 0x4839_4242_4242_4242;
/// High bytes of every `a`: "09", exponent 0x393.
pub const A_HIGH: u64 = 0x3930 << 48;
/// High bytes of every `r`: exponent 0x417, top mantissa nibble 0xf.
pub const R_HIGH: u64 = 0x417f << 48;
pub const LOW_MASK: u64 = (1 << 48) - 1;
/// Payload bytes per equation.
pub const GROUP: usize = 6;
/// One ulp of `r` in ulps of `c`.
const ULP_RATIO: i64 = 4;

pub const DEFAULT_BUDGET: u64 = 2_000_000;
/// Seed used by the generator and the CLI unless overridden.
pub const DEFAULT_SEED: u64 = 0x5eed_0027;

const ALNUM: &[u8; 62] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";

pub fn all_alnum(bits: u64) -> bool {
    bits.to_le_bytes().iter().all(|&b| is_alnum(b))
}

fn low_alnum(bits: u64) -> bool {
    bits.to_le_bytes()[..GROUP].iter().all(|&b| is_alnum(b))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FpTriple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r: f64,
}

impl FpTriple {
    pub fn is_exact(&self) -> bool {
        fma_exact(self.a, self.b, self.c).to_bits() == self.r.to_bits()
    }
}

/// The `r` value that stores `group` (up to six bytes, zero padded).
pub fn r_for_group(group: &[u8]) -> u64 {
    let mut b = [0u8; 8];
    b[..group.len()].copy_from_slice(group);
    R_HIGH | (u64::from_le_bytes(b) & LOW_MASK)
}

/// The `r` values for a stage-2 byte string, one per six bytes.
pub fn r_values(stage2: &[u8]) -> Vec<u64> {
    stage2.chunks(GROUP).map(r_for_group).collect()
}

/// `c` with `fma(a, b, c) == r`, computed as the rounded `r - a*b` and checked.
pub fn solve_c(r: f64, a: f64, b: f64) -> Option<f64> {
    let c = fma_exact(-a, b, r);
    (c.is_finite() && fma_exact(a, b, c).to_bits() == r.to_bits()).then_some(c)
}

/// Number of 48-bit `x` with all six bytes alphanumeric such that the low 48
/// bits of `x + d` are too. Zero means no `a` can solve the pair.
pub fn pair_count(d: i64) -> u64 {
    let d = d as u64 & LOW_MASK;
    // ways[carry]
    let mut ways = [1u64, 0];
    for i in 0..GROUP {
        let db = (d >> (8 * i) & 0xff) as u32;
        let mut next = [0u64; 2];
        for (carry, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for &x in ALNUM {
                let s = x as u32 + db + carry as u32;
                if is_alnum(s as u8) {
                    next[(s >> 8) as usize] += w;
                }
            }
        }
        ways = next;
    }
    ways[0] + ways[1]
}

/// Distance between the two `c` of a pair, in ulps of `c`.
fn pair_delta(r0: u64, r1: u64) -> i64 {
    ((r1 & LOW_MASK) as i64 - (r0 & LOW_MASK) as i64) * ULP_RATIO
}

fn random_a(rng: &mut ChaCha8Rng) -> u64 {
    let mut bytes = [0u8; 8];
    for b in &mut bytes[..GROUP] {
        *b = ALNUM[rng.gen_range(0..ALNUM.len())];
    }
    A_HIGH | u64::from_le_bytes(bytes)
}

/// Memo key: one or two `r` values.
pub type PairKey = (u64, Option<u64>);

/// A solved key: `a` and the one or two `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PairSolution {
    pub a: u64,
    pub c0: u64,
    pub c1: Option<u64>,
}

fn pair_rng(seed: u64, key: PairKey) -> ChaCha8Rng {
    let mut s = [0u8; 32];
    s[..8].copy_from_slice(&seed.to_le_bytes());
    s[8..16].copy_from_slice(&key.0.to_le_bytes());
    s[16..24].copy_from_slice(&key.1.unwrap_or(u64::MAX).to_le_bytes());
    ChaCha8Rng::from_seed(s)
}

/// Random search for an `a` solving one key. Returns the solution, if any,
/// and the number of trials spent.
pub fn search_pair(key: PairKey, b: u64, seed: u64, budget: u64) -> (Option<PairSolution>, u64) {
    if let Some(r1) = key.1 {
        if pair_count(pair_delta(key.0, r1)) == 0 {
            return (None, 0);
        }
    }
    let bf = f64::from_bits(b);
    let (r0, r1) = (f64::from_bits(key.0), key.1.map(f64::from_bits));
    let mut rng = pair_rng(seed, key);
    for trial in 1..=budget {
        let a = f64::from_bits(random_a(&mut rng));
        let c0 = fma_exact(-a, bf, r0);
        if !low_alnum(c0.to_bits()) {
            continue;
        }
        let Some(c0) = solve_c(r0, a, bf).filter(|c| all_alnum(c.to_bits())) else { continue };
        let c1 = match r1 {
            None => None,
            Some(r1) => match solve_c(r1, a, bf).filter(|c| all_alnum(c.to_bits())) {
                Some(c1) => Some(c1.to_bits()),
                None => continue,
            },
        };
        return (Some(PairSolution { a: a.to_bits(), c0: c0.to_bits(), c1 }), trial);
    }
    (None, budget)
}

/// Keys of a stage-2 byte string: equations (0,1), (2,3), ... and a trailing single.
pub fn keys_for(stage2: &[u8]) -> Vec<PairKey> {
    r_values(stage2).chunks(2).map(|p| (p[0], p.get(1).copied())).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub instances: u64,
    pub searches: u64,
    pub memo_hits: u64,
    pub trials: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverResult {
    pub b: u64,
    pub pairs: Vec<PairSolution>,
    pub instance: u64,
    pub program: Stage2Program,
    pub seed: u64,
    pub stats: SolverStats,
}

impl SolverResult {
    /// Every equation in stage-2 order.
    pub fn triples(&self) -> Vec<FpTriple> {
        let b = f64::from_bits(self.b);
        let rs = r_values(&self.program.bytes);
        let mut out = Vec::new();
        for (k, p) in self.pairs.iter().enumerate() {
            let cs = std::iter::once(p.c0).chain(p.c1);
            for (j, c) in cs.enumerate() {
                out.push(FpTriple {
                    a: f64::from_bits(p.a),
                    b,
                    c: f64::from_bits(c),
                    r: f64::from_bits(rs[2 * k + j]),
                });
            }
        }
        out
    }

    /// Exactness and charset of every constant, and coverage of every stage-2 byte.
    pub fn verify(&self) -> bool {
        let t = self.triples();
        t.len() == r_values(&self.program.bytes).len()
            && all_alnum(self.b)
            && t.iter().all(|t| t.is_exact() && all_alnum(t.a.to_bits()) && all_alnum(t.c.to_bits()))
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub seed: u64,
    pub budget: u64,
    /// Polymorph indices to try, in order.
    pub instances: Range<u64>,
    /// Instances examined together per round.
    pub chunk: u64,
}

impl SolverConfig {
    pub fn new(seed: u64, budget: u64, instances: Range<u64>) -> SolverConfig {
        SolverConfig { seed, budget, instances, chunk: 64 }
    }
}

/// Memoized search over polymorphic stage-2 instances. Keys of an instance
/// are tried from the least to the most likely, so a hopeless instance costs
/// one search. The lowest solved index wins.
pub fn solve(
    polymorphs: &Polymorphs,
    b: u64,
    cfg: &SolverConfig,
    progress: Option<&(dyn Fn(&SolverStats) + Sync)>,
) -> Result<SolverResult> {
    if cfg.budget == 0 || !all_alnum(b) {
        return Err(Error::OutOfRange("solver budget or multiplier".into()));
    }
    let memo: Mutex<HashMap<PairKey, Option<PairSolution>>> = Mutex::new(HashMap::new());
    let mut stats = SolverStats::default();
    let end = cfg.instances.end.min(polymorphs.count());
    let mut start = cfg.instances.start;
    while start < end {
        let stop = (start + cfg.chunk.max(1)).min(end);
        let mut live: Vec<(u64, Stage2Program, Vec<PairKey>)> = (start..stop)
            .filter_map(|i| polymorphs.get(i).map(|p| (i, p.clone(), keys_for(&p.bytes))))
            .collect();
        for inst in &mut live {
            inst.2.sort_by_key(|k| k.1.map_or(u64::MAX, |r1| pair_count(pair_delta(k.0, r1))));
        }
        stats.instances += live.len() as u64;
        loop {
            let mut wanted: Vec<PairKey> = Vec::new();
            {
                let m = memo.lock().unwrap();
                live.retain(|(_, _, keys)| !keys.iter().any(|k| matches!(m.get(k), Some(None))));
                for (_, _, keys) in &live {
                    match keys.iter().find(|k| !m.contains_key(k)) {
                        Some(k) if !wanted.contains(k) => wanted.push(*k),
                        Some(_) => stats.memo_hits += 1,
                        None => {}
                    }
                }
            }
            if wanted.is_empty() {
                break;
            }
            let found: Vec<(PairKey, Option<PairSolution>, u64)> = wanted
                .par_iter()
                .map(|&k| {
                    let (s, n) = search_pair(k, b, cfg.seed, cfg.budget);
                    (k, s, n)
                })
                .collect();
            let mut m = memo.lock().unwrap();
            for (k, s, n) in found {
                stats.searches += 1;
                stats.trials += n;
                m.insert(k, s);
            }
            drop(m);
            if let Some(f) = progress {
                f(&stats);
            }
        }
        let m = memo.lock().unwrap();
        if let Some((i, prog, _)) = live.first() {
            let pairs = keys_for(&prog.bytes).iter().map(|k| m[k].unwrap()).collect();
            return Ok(SolverResult { b, pairs, instance: *i, program: prog.clone(), seed: cfg.seed, stats });
        }
        start = stop;
    }
    Err(Error::SolverExhausted)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HitRate {
    pub samples: u64,
    pub hits: u64,
}

impl HitRate {
    pub fn rate(&self) -> f64 {
        self.hits as f64 / self.samples as f64
    }
}

/// Independent generator streams; fixed so counts do not depend on the thread pool.
const HIT_SHARDS: u64 = 64;

/// Fraction of random (payload `r`, alphanumeric `a`) for which `c` is alphanumeric.
pub fn hit_rate(samples: u64, seed: u64) -> HitRate {
    let shards = HIT_SHARDS;
    let bf = f64::from_bits(B_BITS);
    let hits = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let n = samples / shards + (s < samples % shards) as u64;
            (0..n)
                .filter(|_| {
                    let r = f64::from_bits(R_HIGH | rng.gen::<u64>() & LOW_MASK);
                    let a = f64::from_bits(random_a(&mut rng));
                    solve_c(r, a, bf).is_some_and(|c| all_alnum(c.to_bits()))
                })
                .count() as u64
        })
        .sum();
    HitRate { samples, hits }
}

/// `(62/256)^6`, the chance six independent uniform bytes are all alphanumeric.
pub fn expected_hit_rate() -> f64 {
    (ALNUM.len() as f64 / 256.0).powi(GROUP as i32)
}
