//! Software fused multiply-add with a single rounding, generic over binary32 and binary64.

use num_traits::Float;

/// Rounding modes, numbered as in the `rm` field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rounding {
    NearestEven,
    TowardZero,
    Down,
    Up,
    NearestMaxMag,
}

impl Rounding {
    pub fn from_rm(rm: u8) -> Option<Rounding> {
        Some(match rm {
            0 => Rounding::NearestEven,
            1 => Rounding::TowardZero,
            2 => Rounding::Down,
            3 => Rounding::Up,
            4 => Rounding::NearestMaxMag,
            _ => return None,
        })
    }
}

pub const NX: u8 = 1;
pub const UF: u8 = 2;
pub const OF: u8 = 4;
pub const NV: u8 = 16;

/// An IEEE-754 binary interchange format small enough to fit its raw bits in a `u64`.
pub trait Binary: Float {
    /// Precision in bits, hidden bit included.
    const PRECISION: u32;
    const EXP_BITS: u32;
    const CANONICAL_NAN: u64;

    fn to_raw(self) -> u64;
    fn from_raw(raw: u64) -> Self;

    fn bias() -> i32 {
        (1 << (Self::EXP_BITS - 1)) - 1
    }
}

impl Binary for f32 {
    const PRECISION: u32 = 24;
    const EXP_BITS: u32 = 8;
    const CANONICAL_NAN: u64 = 0x7fc0_0000;

    fn to_raw(self) -> u64 {
        self.to_bits() as u64
    }

    fn from_raw(raw: u64) -> f32 {
        f32::from_bits(raw as u32)
    }
}

impl Binary for f64 {
    const PRECISION: u32 = 53;
    const EXP_BITS: u32 = 11;
    const CANONICAL_NAN: u64 = 0x7ff8_0000_0000_0000;

    fn to_raw(self) -> u64 {
        self.to_bits()
    }

    fn from_raw(raw: u64) -> f64 {
        f64::from_bits(raw)
    }
}

struct Parts {
    neg: bool,
    exp_field: u64,
    frac: u64,
}

fn parts<F: Binary>(x: F) -> Parts {
    let raw = x.to_raw();
    let fbits = F::PRECISION - 1;
    Parts {
        neg: raw >> (fbits + F::EXP_BITS) & 1 == 1,
        exp_field: raw >> fbits & ((1 << F::EXP_BITS) - 1),
        frac: raw & ((1 << fbits) - 1),
    }
}

/// Finite nonzero value as (mantissa, exponent of its lowest bit).
fn unpack<F: Binary>(p: &Parts) -> (u128, i32) {
    let fbits = F::PRECISION - 1;
    let emin = 1 - F::bias();
    if p.exp_field == 0 {
        (p.frac as u128, emin - fbits as i32)
    } else {
        ((p.frac | 1 << fbits) as u128, p.exp_field as i32 - F::bias() - fbits as i32)
    }
}

fn signed_zero<F: Binary>(neg: bool) -> F {
    if neg {
        F::neg_zero()
    } else {
        F::zero()
    }
}

fn is_snan<F: Binary>(p: &Parts) -> bool {
    p.exp_field == (1 << F::EXP_BITS) - 1 && p.frac != 0 && p.frac >> (F::PRECISION - 2) & 1 == 0
}

fn bit_len(x: u128) -> i32 {
    128 - x.leading_zeros() as i32
}

/// Places `m * 2^e` at the scale `2^base`, folding shifted-out bits into a sticky lsb.
fn align(m: u128, e: i32, base: i32) -> u128 {
    let shift = e - base;
    if shift >= 0 {
        m << shift
    } else if -shift >= 128 {
        (m != 0) as u128
    } else {
        let s = -shift as u32;
        (m >> s) | ((m & ((1u128 << s) - 1)) != 0) as u128
    }
}

/// Rounds `±m * 2^e` to the format, returning the value and exception flags.
fn round_pack<F: Binary>(neg: bool, m: u128, e: i32, rm: Rounding) -> (F, u8) {
    let p = F::PRECISION as i32;
    let fbits = F::PRECISION - 1;
    let emin = 1 - F::bias();
    let emax_field = (1u64 << F::EXP_BITS) - 1;
    let n = bit_len(m);
    let lsb = (e + n - p).max(emin - p + 1);
    let shift = lsb - e;
    let (mut q, rem_nonzero, round_up) = if shift <= 0 {
        (m << -shift, false, false)
    } else {
        let (q, rem, half) = if shift >= 128 {
            (0u128, m, None)
        } else {
            let s = shift as u32;
            (m >> s, m & ((1u128 << s) - 1), Some(1u128 << (s - 1)))
        };
        let above = half.map_or(false, |h| rem > h);
        let tie = half.map_or(false, |h| rem == h);
        let at_least_half = above || tie;
        let up = rem != 0
            && match rm {
                Rounding::NearestEven => above || tie && q & 1 == 1,
                Rounding::TowardZero => false,
                Rounding::Down => neg,
                Rounding::Up => !neg,
                Rounding::NearestMaxMag => at_least_half,
            };
        (q, rem != 0, up)
    };
    let mut lsb = lsb;
    if round_up {
        q += 1;
        if q >> p != 0 {
            q >>= 1;
            lsb += 1;
        }
    }
    let mut flags = if rem_nonzero { NX } else { 0 };
    let tiny = q >> fbits == 0;
    if tiny && rem_nonzero {
        flags |= UF;
    }
    let sign = (neg as u64) << (fbits + F::EXP_BITS);
    if tiny {
        return (F::from_raw(sign | q as u64), flags);
    }
    let exp_field = (lsb + fbits as i32 + F::bias()) as i64;
    if exp_field >= emax_field as i64 {
        let to_inf = match rm {
            Rounding::NearestEven | Rounding::NearestMaxMag => true,
            Rounding::TowardZero => false,
            Rounding::Down => neg,
            Rounding::Up => !neg,
        };
        let raw = if to_inf {
            emax_field << fbits
        } else {
            (emax_field - 1) << fbits | ((1 << fbits) - 1)
        };
        return (F::from_raw(sign | raw), flags | OF | NX);
    }
    let frac = q as u64 & ((1 << fbits) - 1);
    (F::from_raw(sign | (exp_field as u64) << fbits | frac), flags)
}

/// `a * b + c` with one rounding; returns the result and accrued exception flags.
pub fn fma_flags<F: Binary>(a: F, b: F, c: F, rm: Rounding) -> (F, u8) {
    let (pa, pb, pc) = (parts(a), parts(b), parts(c));
    if a.is_nan() || b.is_nan() || c.is_nan() {
        let inf_zero = (a.is_infinite() && b.is_zero()) || (a.is_zero() && b.is_infinite());
        let nv = is_snan::<F>(&pa) || is_snan::<F>(&pb) || is_snan::<F>(&pc) || inf_zero;
        return (F::from_raw(F::CANONICAL_NAN), if nv { NV } else { 0 });
    }
    let prod_neg = pa.neg ^ pb.neg;
    if a.is_infinite() || b.is_infinite() {
        if a.is_zero() || b.is_zero() || c.is_infinite() && pc.neg != prod_neg {
            return (F::from_raw(F::CANONICAL_NAN), NV);
        }
        return (if prod_neg { F::neg_infinity() } else { F::infinity() }, 0);
    }
    if c.is_infinite() {
        return (c, 0);
    }
    if a.is_zero() || b.is_zero() {
        if c.is_zero() {
            let neg = if prod_neg == pc.neg { pc.neg } else { rm == Rounding::Down };
            return (signed_zero(neg), 0);
        }
        return (c, 0);
    }
    let (ma, ea) = unpack::<F>(&pa);
    let (mb, eb) = unpack::<F>(&pb);
    let (pm, pe) = (ma * mb, ea + eb);
    if c.is_zero() {
        return round_pack::<F>(prod_neg, pm, pe, rm);
    }
    let (mc, ec) = unpack::<F>(&pc);
    let top = (pe + bit_len(pm)).max(ec + bit_len(mc));
    let base = top - 125;
    let x = align(pm, pe, base);
    let y = align(mc, ec, base);
    let (neg, m) = if prod_neg == pc.neg {
        (prod_neg, x + y)
    } else if x >= y {
        (prod_neg, x - y)
    } else {
        (pc.neg, y - x)
    };
    if m == 0 {
        return (signed_zero(rm == Rounding::Down), 0);
    }
    round_pack::<F>(neg, m, base, rm)
}

pub fn fma<F: Binary>(a: F, b: F, c: F, rm: Rounding) -> F {
    fma_flags(a, b, c, rm).0
}

/// Binary64 fused multiply-add, round to nearest even.
pub fn fma_exact(a: f64, b: f64, c: f64) -> f64 {
    fma(a, b, c, Rounding::NearestEven)
}
