use lpf_core::sieve::{scan, Factorization, ScanConfig};
use lpf_core::smarandache::{
    classify_non_divisor, count_n, count_n_upper_bound, divides_p_factorial, exact_sums, legendre_valuation,
    psi_over_primes, smarandache, sum_p_pow_exact, sum_p_pow_via_psi, sum_p_r_via_psi, sum_s_moments, NonDivisor,
};
use lpf_core::smooth::Buchstab;
use proptest::prelude::*;

// (x, N(x), T₀(x), Σ S(n), Σ P(n), Σ P(n)²) from an independent
// smallest-factor sieve with S computed by linear search over multiples.
const REGRESSION: [(u64, u64, u64, u64, u64, u128); 7] = [
    (10, 3, 3, 39, 32, 138),
    (100, 25, 18, 2012, 1915, 83669),
    (1_000, 127, 87, 136817, 135946, 61100250),
    (10_000, 593, 402, 10125843, 10118280, 46010614918),
    (100_000, 2806, 1893, 793183093, 793111753, 36423424821183),
    (1_000_000, 13567, 9107, 64938007616, 64937323262, 30091707684844144),
    (
        10_000_000,
        67252,
        44947,
        5494373412573,
        5494366736156,
        25671328841378097596,
    ),
];

#[test]
fn regression_constants() {
    let cfg = ScanConfig::default();
    for (x, n, t0, s, p, p2) in REGRESSION {
        let r = exact_sums(x, &[1.0], &cfg).unwrap();
        assert_eq!(r.n_x, n, "x = {x}");
        assert_eq!(r.n_x_dual, n);
        assert_eq!(r.t0, t0);
        assert_eq!(r.moments[0].sum_sr, s as f64);
        assert_eq!(r.moments[0].sum_pr, p as f64);
        assert_eq!(sum_p_pow_exact(x, 2, &cfg).unwrap(), p2);
        assert_eq!(count_n(x, &cfg).unwrap(), n);
    }
}

#[test]
fn dual_oracle_every_n_to_one_million() {
    let cfg = ScanConfig::default();
    let bad = scan(2, 1_000_001, &cfg, |s| {
        let mut mismatches = 0u64;
        s.for_each(|f| {
            let p = f.largest_prime();
            let big_s = smarandache(f);
            if divides_p_factorial(f) != (big_s == p) {
                mismatches += 1;
            }
            let log2 = 63 - f.n().leading_zeros() as u64;
            assert!(p <= big_s && big_s <= f.n());
            assert!(big_s <= p * (log2 + 1), "n = {}", f.n());
        });
        mismatches
    })
    .unwrap();
    assert_eq!(bad.iter().sum::<u64>(), 0);
}

#[test]
fn non_divisor_classification() {
    let cfg = ScanConfig::default();
    let counts = scan(2, 100_001, &cfg, |s| {
        let (mut squared, mut small) = (0u64, 0u64);
        s.for_each(|f| match classify_non_divisor(f) {
            None => assert!(divides_p_factorial(f)),
            Some(NonDivisor::LargestSquared) => {
                assert!(f.largest_prime_exponent() >= 2);
                squared += 1;
            }
            Some(NonDivisor::SmallPrimePower { q, b }) => {
                let p = f.largest_prime();
                assert_eq!(f.largest_prime_exponent(), 1);
                assert!(b >= 2 && q < p);
                assert!(q * b as u64 > p, "n = {}", f.n());
                assert!(legendre_valuation(q, p) < b as u64);
                // n = p·q^b·k with P(k) < p
                let k = f.n() / (p * q.pow(b));
                assert_eq!(k * p * q.pow(b), f.n());
                let fk = Factorization::by_trial_division(k.max(1)).unwrap();
                assert!(fk.largest_prime() < p);
                small += 1;
            }
        });
        (squared, small)
    })
    .unwrap();
    let squared: u64 = counts.iter().map(|c| c.0).sum();
    let small: u64 = counts.iter().map(|c| c.1).sum();
    assert_eq!(squared, 1893);
    assert_eq!(squared + small, 2806);
}

#[test]
fn counts_are_monotone_and_contain_t0() {
    let cfg = ScanConfig::default();
    let mut prev = exact_sums(2, &[1.0, 2.5], &cfg).unwrap();
    for x in (3..=3000).step_by(7) {
        let cur = exact_sums(x, &[1.0, 2.5], &cfg).unwrap();
        assert!(cur.n_x >= cur.t0);
        assert!(cur.n_x >= prev.n_x && cur.t0 >= prev.t0);
        for (c, p) in cur.moments.iter().zip(&prev.moments) {
            assert!(c.sum_sr >= p.sum_sr && c.sum_pr >= p.sum_pr);
            assert!(c.sum_inv_pr >= p.sum_inv_pr && c.sum_inv_sr >= p.sum_inv_sr);
            assert!(c.t_r >= p.t_r && c.sum_ratio_r >= p.sum_ratio_r);
            assert!(c.sum_inv_sr <= c.sum_inv_pr);
            assert!(c.sum_ratio_r >= (x - 1) as f64);
        }
        prev = cur;
    }
}

#[test]
fn ratio_sum_equality_case() {
    let cfg = ScanConfig::default();
    // S = P on [2, 3]; first failure at n = 4
    assert_eq!(sum_s_moments(3, 2.0, &cfg).unwrap().sum_ratio_r, 2.0);
    assert!(sum_s_moments(4, 2.0, &cfg).unwrap().sum_ratio_r > 3.0);
}

#[test]
fn psi_identities_to_one_million() {
    let cfg = ScanConfig::default();
    for x in [1_000u64, 10_000, 100_000, 1_000_000] {
        let r = exact_sums(x, &[1.0, 2.0], &cfg).unwrap();
        let psi = psi_over_primes(x);
        for m in &r.moments {
            let inv: f64 = psi.iter().map(|&(p, v)| v as f64 / (p as f64).powf(m.r)).sum();
            assert!((m.sum_inv_pr - inv).abs() <= 1e-12 * inv, "x = {x}, r = {}", m.r);
            let direct = sum_p_r_via_psi(x, m.r);
            assert!((m.sum_pr - direct).abs() <= 1e-12 * direct);
        }
        for k in [1u32, 2] {
            assert_eq!(sum_p_pow_exact(x, k, &cfg).unwrap(), sum_p_pow_via_psi(x, k));
        }
        // T₀(x) = Σ_p Ψ(x/p², p)
        let mut b = Buchstab::new(1000);
        let t0: u64 = lpf_core::sieve::primes_up_to((x as f64).sqrt() as u64)
            .into_iter()
            .map(|p| b.psi(x / (p * p), p))
            .sum();
        assert_eq!(t0, r.t0);
    }
}

#[test]
fn upper_bound_inequality() {
    let cfg = ScanConfig::default();
    for x in [1_000u64, 10_000, 100_000] {
        let n = count_n(x, &cfg).unwrap() as u128;
        let bound = count_n_upper_bound(x);
        assert!(n <= bound, "x = {x}: {n} > {bound}");
    }
}

#[test]
fn deterministic_across_segment_sizes() {
    let a = exact_sums(200_000, &[0.5, 1.0, 3.0], &ScanConfig::default()).unwrap();
    let small = ScanConfig {
        segment_len: 10_007,
        ..ScanConfig::default()
    };
    let b = exact_sums(200_000, &[0.5, 1.0, 3.0], &small).unwrap();
    assert_eq!(a.n_x, b.n_x);
    for (x, y) in a.moments.iter().zip(&b.moments) {
        // compensated sums agree to the last couple of ulps
        for (u, v) in [(x.sum_sr, y.sum_sr), (x.sum_inv_pr, y.sum_inv_pr), (x.t_r, y.t_r)] {
            assert!((u - v).abs() <= 4.0 * f64::EPSILON * u.abs());
        }
    }
}

proptest! {
    #[test]
    fn smarandache_is_minimal(n in 2u64..2_000_000) {
        let f = Factorization::by_trial_division(n).unwrap();
        let s = smarandache(&f);
        for &(p, a) in f.factors() {
            prop_assert!(legendre_valuation(p, s) >= a as u64);
        }
        prop_assert!(f.factors().iter().any(|&(p, a)| legendre_valuation(p, s - 1) < a as u64));
        prop_assert_eq!(divides_p_factorial(&f), s == f.largest_prime());
    }
}
