use alnum_rv::fp::solver::*;
use alnum_rv::fp::{fma, fma_exact, fma_flags, Rounding, NV, NX};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn to_rational(bits: u64) -> BigRational {
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1 << 52) - 1);
    let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | 1 << 52, exp - 1075) };
    let mut q = BigRational::from_integer(BigInt::from(m));
    let two = BigRational::from_integer(BigInt::from(2));
    for _ in 0..e.abs() {
        q = if e > 0 { &q * &two } else { &q / &two };
    }
    if bits >> 63 == 1 {
        -q
    } else {
        q
    }
}

/// Round-to-nearest-even of an exact rational to binary64.
fn round_f64(q: &BigRational, negative_zero: bool) -> f64 {
    use num_traits::{Signed, Zero};
    if q.is_zero() {
        return if negative_zero { -0.0 } else { 0.0 };
    }
    let neg = q.is_negative();
    let mut x = q.abs();
    let two = BigRational::from_integer(BigInt::from(2));
    let lo = BigRational::from_integer(BigInt::from(1u64 << 52));
    let hi = BigRational::from_integer(BigInt::from(1u64 << 53));
    let mut e: i64 = 0;
    while x >= hi {
        x = &x / &two;
        e += 1;
    }
    while x < lo && e > -1074 {
        x = &x * &two;
        e -= 1;
    }
    let fl = x.floor();
    let rem = &x - &fl;
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let mut m = fl.to_integer();
    if rem > half || (rem == half && (&m % 2u32) == BigInt::from(1)) {
        m += 1;
    }
    let (_, digits) = m.to_u64_digits();
    let mut m = digits.first().copied().unwrap_or(0);
    if m == 1 << 53 {
        m >>= 1;
        e += 1;
    }
    let v = if e + 52 > 1023 {
        f64::INFINITY
    } else if m < 1 << 52 {
        f64::from_bits(m)
    } else {
        f64::from_bits(((e + 1075) as u64) << 52 | (m & ((1 << 52) - 1)))
    };
    if neg {
        -v
    } else {
        v
    }
}

fn oracle(a: f64, b: f64, c: f64) -> f64 {
    let q = to_rational(a.to_bits()) * to_rational(b.to_bits()) + to_rational(c.to_bits());
    // an exact zero sum is -0 only when both addends are -0 (round to nearest)
    let prod_neg = (a.is_sign_negative() != b.is_sign_negative()) && (a == 0.0 || b == 0.0);
    round_f64(&q, prod_neg && c.to_bits() == (-0.0f64).to_bits())
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<u64>().prop_map(f64::from_bits).prop_filter("finite", |x| x.is_finite()),
        (-1e6f64..1e6),
        (1u64..1 << 20).prop_map(f64::from_bits),
    ]
}

#[test]
fn trivial_cases() {
    assert_eq!(fma_exact(1.0, 1.0, 0.0), 1.0);
    assert_eq!(fma_exact(0.0, 7.5, -3.25), -3.25);
    assert!(fma_exact(f64::NAN, 1.0, 1.0).is_nan());
    assert!(fma_exact(f64::INFINITY, 0.0, 1.0).is_nan());
    let (_, flags) = fma_flags(f64::INFINITY, 0.0, 1.0, Rounding::NearestEven);
    assert_eq!(flags & NV, NV);
    let (_, flags) = fma_flags(1.0, 0.1, 0.0, Rounding::NearestEven);
    assert_eq!(flags & NX, 0);
    let (_, flags) = fma_flags(0.1, 0.1, 0.0, Rounding::NearestEven);
    assert_eq!(flags & NX, NX);
}

#[test]
fn single_rounding_differs_from_two() {
    let a = 1.0 + f64::EPSILON;
    let c = -(1.0 + 2.0 * f64::EPSILON);
    assert_eq!(fma_exact(a, a, c), f64::EPSILON * f64::EPSILON);
    assert_eq!(a * a + c, 0.0);
}

#[test]
fn agrees_with_hardware_fma() {
    let mut x = 0x1234_5678_9abc_def1u64;
    for _ in 0..200_000 {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        let a = f64::from_bits(x);
        let b = f64::from_bits(x.rotate_left(21));
        let c = f64::from_bits(x.rotate_left(42));
        let want = a.mul_add(b, c);
        let got = fma_exact(a, b, c);
        assert!(want.to_bits() == got.to_bits() || (want.is_nan() && got.is_nan()), "{a:e} {b:e} {c:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn matches_rational_oracle(a in finite(), b in finite(), c in finite()) {
        let want = oracle(a, b, c);
        let got = fma_exact(a, b, c);
        prop_assert_eq!(got.to_bits(), want.to_bits(), "{:e} {:e} {:e}", a, b, c);
    }

    #[test]
    fn single_precision_matches_widened_oracle(a in any::<f32>(), b in any::<f32>(), c in any::<f32>()) {
        prop_assume!(a.is_finite() && b.is_finite() && c.is_finite());
        let got = fma(a, b, c, Rounding::NearestEven);
        let want = a.mul_add(b, c);
        prop_assert!(got.to_bits() == want.to_bits() || (got.is_nan() && want.is_nan()));
    }

    #[test]
    fn solve_c_inverts_a_constructed_instance(a in finite(), b in finite(), c0 in finite()) {
        let r = fma_exact(a, b, c0);
        prop_assume!(r.is_finite());
        if let Some(c) = solve_c(r, a, b) {
            prop_assert_eq!(fma_exact(a, b, c).to_bits(), r.to_bits());
        }
    }

    #[test]
    fn pair_count_matches_a_partial_brute_force(d in 0i64..1 << 24) {
        let al: Vec<u64> = (0..=255u64).filter(|&b| (b as u8).is_ascii_alphanumeric()).collect();
        let ok = |x: u64| (0..3).all(|i| ((x >> (8 * i)) as u8).is_ascii_alphanumeric());
        let mut want = 0u64;
        for &x0 in &al {
            for &x1 in &al {
                for &x2 in &al {
                    let x = x0 | x1 << 8 | x2 << 16;
                    let s = x + d as u64;
                    if ok(s) {
                        // bytes 3..5 of d are zero: 62 ways each, or 59 for the byte taking a carry
                        want += if s >> 24 != 0 { 59 * 62 * 62 } else { 62 * 62 * 62 };
                    }
                }
            }
        }
        prop_assert_eq!(pair_count(d), want);
    }
}

#[test]
fn pinned_constants_are_alphanumeric() {
    assert!(all_alnum(B_BITS));
    assert_eq!(&B_BITS.to_le_bytes(), b"BBBBBB9H");
    assert_eq!(&A_HIGH.to_le_bytes()[6..], b"09");
}

fn subset() -> SolverConfig {
    SolverConfig::new(DEFAULT_SEED, DEFAULT_BUDGET, 1_494_784..1_494_912)
}

fn polys() -> alnum_rv::stage2::Polymorphs {
    alnum_rv::link::tick_polymorphs()
}

#[test]
fn solver_on_reduced_subset() {
    let res = solve(&polys(), B_BITS, &subset(), None).unwrap();
    assert!(res.verify());
    assert_eq!(res.instance, 1_494_865);
    assert_eq!(res.program, polys().get(res.instance).unwrap());
    let t = res.triples();
    assert_eq!(t.len(), 7);
    for (i, tr) in t.iter().enumerate() {
        assert!(tr.is_exact());
        assert_eq!(tr.a.to_bits(), res.pairs[i / 2].a, "pairs share a");
        let r = tr.r.to_bits().to_le_bytes();
        let want = &res.program.bytes[6 * i..(6 * i + 6).min(42)];
        assert_eq!(&r[..want.len()], want);
    }
    assert!(res.stats.memo_hits > 0);
    assert!(res.stats.searches < res.stats.instances * 4);
}

#[test]
fn solver_is_deterministic() {
    let a = solve(&polys(), B_BITS, &subset(), None).unwrap();
    let b = solve(&polys(), B_BITS, &subset(), None).unwrap();
    assert_eq!(a.pairs, b.pairs);
    assert_eq!(a.instance, b.instance);
}

#[test]
fn exhausted_subset_reports_it() {
    let cfg = SolverConfig::new(DEFAULT_SEED, 1000, 0..64);
    assert!(matches!(solve(&polys(), B_BITS, &cfg, None), Err(alnum_rv::error::Error::SolverExhausted)));
}

#[test]
fn hopeless_pairs_cost_nothing() {
    // every candidate byte pushed off the alphanumeric range by one
    let mut zero = None;
    for d in 0..1 << 16 {
        if pair_count(d * 4) == 0 {
            zero = Some(d);
            break;
        }
    }
    let d = zero.expect("some delta has no solution") as u64;
    let r0 = R_HIGH | 0x3030_3030_3030;
    let (sol, trials) = search_pair((r0, Some(r0 + d)), B_BITS, DEFAULT_SEED, 1000);
    assert_eq!(sol, None);
    assert_eq!(trials, 0);
}

#[test]
fn hit_rate_near_independent_bytes() {
    let h = hit_rate(2_000_000, DEFAULT_SEED);
    let ratio = h.rate() / expected_hit_rate();
    assert!((1.0 / 3.0..3.0).contains(&ratio), "{h:?} ratio {ratio}");
}
