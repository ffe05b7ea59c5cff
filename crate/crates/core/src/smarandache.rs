//! The Smarandache function S(n), the predicate `n | P(n)!` and exact moment
//! sums over `2 ≤ n ≤ x`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sieve::{primes_up_to, scan, Factorization, ScanConfig};
use crate::smooth::Buchstab;
use crate::sum::CompensatedSum;

/// ν_p(k!) = Σ_{i≥1} ⌊k/pⁱ⌋.
pub fn legendre_valuation(p: u64, k: u64) -> u64 {
    debug_assert!(p >= 2);
    let mut v = 0;
    let mut q = k;
    while q >= p {
        q /= p;
        v += q;
    }
    v
}

/// S(p^a): the least k with ν_p(k!) ≥ a. Always a multiple of p, at most a·p.
pub fn smarandache_prime_power(p: u64, a: u32) -> u64 {
    if a <= 1 {
        return if a == 0 { 1 } else { p };
    }
    if (a as u64) <= p {
        // ν_p(m·p) = m for m ≤ p
        return a as u64 * p;
    }
    let (mut lo, mut hi) = (1u64, a as u64);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if legendre_valuation(p, mid * p) >= a as u64 {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo * p
}

/// S(n) for `n ≥ 2`; `S(1) = 1`.
pub fn smarandache(f: &Factorization) -> u64 {
    f.factors()
        .iter()
        .map(|&(p, a)| smarandache_prime_power(p, a))
        .max()
        .unwrap_or(1)
}

/// Whether `n | P(n)!`.
pub fn divides_p_factorial(f: &Factorization) -> bool {
    let big = f.largest_prime();
    f.factors()
        .iter()
        .all(|&(p, a)| a <= 1 || legendre_valuation(p, big) >= a as u64)
}

/// Why a given `n` fails to divide `P(n)!`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonDivisor {
    /// `P(n)² | n`.
    LargestSquared,
    /// `n = P(n)·q^b·k` with `b ≥ 2`, `P(k) < P(n)` and `q·b > P(n)`.
    SmallPrimePower { q: u64, b: u32 },
}

/// `None` when `n | P(n)!`, otherwise the class `n` falls into.
pub fn classify_non_divisor(f: &Factorization) -> Option<NonDivisor> {
    if f.n() < 2 || divides_p_factorial(f) {
        return None;
    }
    if f.largest_prime_exponent() >= 2 {
        return Some(NonDivisor::LargestSquared);
    }
    let big = f.largest_prime();
    f.factors()
        .iter()
        .find(|&&(q, b)| q < big && legendre_valuation(q, big) < b as u64)
        .map(|&(q, b)| NonDivisor::SmallPrimePower { q, b })
}

#[inline]
fn powr(base: f64, r: f64) -> f64 {
    if r == r.trunc() && r.abs() <= 64.0 {
        base.powi(r as i32)
    } else {
        base.powf(r)
    }
}

/// Moment sums over `2 ≤ n ≤ x` for one exponent `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSums {
    pub r: f64,
    /// Σ P(n)^{−r} over n with `P(n)² | n`.
    pub t_r: f64,
    pub sum_inv_pr: f64,
    pub sum_pr: f64,
    pub sum_inv_sr: f64,
    pub sum_sr: f64,
    /// Σ (S(n)/P(n))^r.
    pub sum_ratio_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactSumsReport {
    pub x: u64,
    /// N(x) from the divisibility predicate.
    pub n_x: u64,
    /// N(x) counted as `S(n) ≠ P(n)`; equal to `n_x` by construction of S.
    pub n_x_dual: u64,
    /// T₀(x).
    pub t0: u64,
    pub moments: Vec<MomentSums>,
}

#[derive(Clone)]
struct Partial {
    n_x: u64,
    n_x_dual: u64,
    t0: u64,
    sums: Vec<[CompensatedSum; 6]>,
}

fn check_x(op: &'static str, x: u64, cfg: &ScanConfig) -> Result<()> {
    if x < 2 {
        return Err(Error::domain(op, format!("x = {x} must be at least 2")));
    }
    cfg.check(op, x)
}

fn check_r(op: &'static str, r: f64) -> Result<()> {
    if !r.is_finite() {
        return Err(Error::domain(op, format!("r = {r} must be finite")));
    }
    Ok(())
}

/// One streaming pass over `[2, x]` accumulating every count and moment sum.
pub fn exact_sums(x: u64, rs: &[f64], cfg: &ScanConfig) -> Result<ExactSumsReport> {
    check_x("exact_sums", x, cfg)?;
    for &r in rs {
        check_r("exact_sums", r)?;
    }
    let parts = scan(2, x + 1, cfg, |s| {
        let mut part = Partial {
            n_x: 0,
            n_x_dual: 0,
            t0: 0,
            sums: vec![[CompensatedSum::new(); 6]; rs.len()],
        };
        s.for_each(|f| {
            let p = f.largest_prime();
            let sq = f.largest_prime_exponent() >= 2;
            let big_s = smarandache(f);
            if !divides_p_factorial(f) {
                part.n_x += 1;
            }
            if big_s != p {
                part.n_x_dual += 1;
            }
            if sq {
                part.t0 += 1;
            }
            let (pf, sf) = (p as f64, big_s as f64);
            for (acc, &r) in part.sums.iter_mut().zip(rs) {
                let pr = powr(pf, r);
                let sr = if big_s == p { pr } else { powr(sf, r) };
                if sq {
                    acc[0].add(1.0 / pr);
                }
                acc[1].add(1.0 / pr);
                acc[2].add(pr);
                acc[3].add(1.0 / sr);
                acc[4].add(sr);
                acc[5].add(if big_s == p { 1.0 } else { powr(sf / pf, r) });
            }
        });
        part
    })?;

    let mut n_x = 0;
    let mut n_x_dual = 0;
    let mut t0 = 0;
    let mut sums = vec![[CompensatedSum::new(); 6]; rs.len()];
    for part in &parts {
        n_x += part.n_x;
        n_x_dual += part.n_x_dual;
        t0 += part.t0;
        for (total, p) in sums.iter_mut().zip(&part.sums) {
            for (t, v) in total.iter_mut().zip(p) {
                t.merge(v);
            }
        }
    }
    let moments = rs
        .iter()
        .zip(&sums)
        .map(|(&r, s)| MomentSums {
            r,
            t_r: s[0].value(),
            sum_inv_pr: s[1].value(),
            sum_pr: s[2].value(),
            sum_inv_sr: s[3].value(),
            sum_sr: s[4].value(),
            sum_ratio_r: s[5].value(),
        })
        .collect();
    Ok(ExactSumsReport {
        x,
        n_x,
        n_x_dual,
        t0,
        moments,
    })
}

/// N(x): the number of `2 ≤ n ≤ x` with `n ∤ P(n)!`.
pub fn count_n(x: u64, cfg: &ScanConfig) -> Result<u64> {
    check_x("count_n", x, cfg)?;
    let parts = scan(2, x + 1, cfg, |s| {
        let mut c = 0u64;
        s.for_each(|f| {
            if !divides_p_factorial(f) {
                c += 1;
            }
        });
        c
    })?;
    Ok(parts.iter().sum())
}

fn single_moment(op: &'static str, x: u64, r: f64, cfg: &ScanConfig) -> Result<MomentSums> {
    check_r(op, r)?;
    check_x(op, x, cfg)?;
    Ok(exact_sums(x, &[r], cfg)?.moments[0])
}

/// T_r(x) = Σ P(n)^{−r} over `2 ≤ n ≤ x` with `P(n)² | n`.
pub fn sum_t_r(x: u64, r: f64, cfg: &ScanConfig) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::domain("sum_t_r", format!("r = {r} must be non-negative")));
    }
    Ok(single_moment("sum_t_r", x, r, cfg)?.t_r)
}

/// Σ_{2≤n≤x} P(n)^{−r}.
pub fn sum_inv_p_r(x: u64, r: f64, cfg: &ScanConfig) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::domain("sum_inv_p_r", format!("r = {r} must be positive")));
    }
    Ok(single_moment("sum_inv_p_r", x, r, cfg)?.sum_inv_pr)
}

/// Σ_{2≤n≤x} P(n)^r.
pub fn sum_p_r(x: u64, r: f64, cfg: &ScanConfig) -> Result<f64> {
    Ok(single_moment("sum_p_r", x, r, cfg)?.sum_pr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SMoments {
    pub sum_sr: f64,
    pub sum_inv_sr: f64,
    pub sum_ratio_r: f64,
}

/// Σ S(n)^r, Σ S(n)^{−r} and Σ (S(n)/P(n))^r over `2 ≤ n ≤ x`.
pub fn sum_s_moments(x: u64, r: f64, cfg: &ScanConfig) -> Result<SMoments> {
    let m = single_moment("sum_s_moments", x, r, cfg)?;
    Ok(SMoments {
        sum_sr: m.sum_sr,
        sum_inv_sr: m.sum_inv_sr,
        sum_ratio_r: m.sum_ratio_r,
    })
}

/// Ψ(x/p, p) for every prime `p ≤ x`, in increasing order of p.
pub fn psi_over_primes(x: u64) -> Vec<(u64, u64)> {
    let primes = primes_up_to(x);
    let root = (x as f64).sqrt() as u64 + 2;
    let mut b = Buchstab::new(root);
    primes
        .iter()
        .map(|&p| {
            let q = x / p;
            (p, if p >= q { q } else { b.psi(q, p) })
        })
        .collect()
}

/// Σ_{p≤x} p^r·Ψ(x/p, p), which equals Σ_{2≤n≤x} P(n)^r.
pub fn sum_p_r_via_psi(x: u64, r: f64) -> f64 {
    psi_over_primes(x)
        .into_iter()
        .map(|(p, psi)| powr(p as f64, r) * psi as f64)
        .sum::<CompensatedSum>()
        .value()
}

/// Σ_{2≤n≤x} P(n)^k in exact integer arithmetic.
pub fn sum_p_pow_exact(x: u64, k: u32, cfg: &ScanConfig) -> Result<u128> {
    check_x("sum_p_pow_exact", x, cfg)?;
    let parts = scan(2, x + 1, cfg, |s| {
        let mut acc = 0u128;
        for n in s.lo()..s.hi() {
            acc += (s.largest_prime_factor(n).expect("n in segment") as u128).pow(k);
        }
        acc
    })?;
    Ok(parts.iter().sum())
}

/// Σ_{p≤x} p^k·Ψ(x/p, p) in exact integer arithmetic.
pub fn sum_p_pow_via_psi(x: u64, k: u32) -> u128 {
    psi_over_primes(x)
        .into_iter()
        .map(|(p, psi)| (p as u128).pow(k) * psi as u128)
        .sum()
}

/// Σ_{pn≤x} p^r = Σ_{p≤x} p^r·⌊x/p⌋.
pub fn sum_pn_le_x(x: u64, r: f64) -> f64 {
    primes_up_to(x)
        .into_iter()
        .map(|p| powr(p as f64, r) * (x / p) as f64)
        .sum::<CompensatedSum>()
        .value()
}

/// Σ_{p≤x} p^k·⌊x/p⌋ exactly.
pub fn sum_pn_le_x_exact(x: u64, k: u32) -> u128 {
    primes_up_to(x)
        .into_iter()
        .map(|p| (p as u128).pow(k) * (x / p) as u128)
        .sum()
}

/// The upper bound `Σ_{r≥2} Σ_{p^r≤x} Ψ(x/p^r, p·r)` for N(x), with exact Ψ.
pub fn count_n_upper_bound(x: u64) -> u128 {
    if x < 4 {
        return 0;
    }
    let root = (x as f64).sqrt() as u64 + 1;
    let mut b = Buchstab::new(2 * root);
    let primes = primes_up_to(root);
    let mut total = 0u128;
    let mut r = 2u32;
    while 1u64 << r <= x {
        for &p in &primes {
            let Some(pr) = p.checked_pow(r) else { break };
            if pr > x {
                break;
            }
            total += b.psi(x / pr, p * r as u64) as u128;
        }
        r += 1;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(n: u64) -> Factorization {
        Factorization::by_trial_division(n).unwrap()
    }

    fn s_by_scan(n: u64) -> u64 {
        // least k with n | k!, tracking k! mod n
        let mut fact = 1u128 % n as u128;
        let mut k = 1;
        while fact != 0 {
            k += 1;
            fact = fact * k as u128 % n as u128;
        }
        k
    }

    #[test]
    fn valuations() {
        assert_eq!(legendre_valuation(5, 100), 24);
        assert_eq!(legendre_valuation(2, 1), 0);
        assert_eq!(legendre_valuation(7, 6), 0);
        assert_eq!(legendre_valuation(2, 4), 3);
    }

    #[test]
    fn prime_powers_match_linear_scan() {
        assert_eq!(smarandache_prime_power(2, 3), 4);
        assert_eq!(smarandache_prime_power(3, 2), 6);
        assert_eq!(smarandache_prime_power(101, 1), 101);
        for p in [2u64, 3, 5, 7] {
            for a in 1..=40u32 {
                let mut k = p;
                while legendre_valuation(p, k) < a as u64 {
                    k += p;
                }
                assert_eq!(smarandache_prime_power(p, a), k, "p = {p}, a = {a}");
            }
        }
    }

    #[test]
    fn small_values() {
        for (n, s) in [(6, 3), (8, 4), (9, 6), (12, 4), (97, 97), (4, 4)] {
            assert_eq!(smarandache(&f(n)), s, "n = {n}");
        }
        for n in 2..2000 {
            assert_eq!(smarandache(&f(n)), s_by_scan(n), "n = {n}");
        }
    }

    #[test]
    fn predicate() {
        assert!(divides_p_factorial(&f(6)));
        assert!(!divides_p_factorial(&f(4)));
        assert!(!divides_p_factorial(&f(12)));
        assert_eq!(classify_non_divisor(&f(6)), None);
        assert_eq!(
            classify_non_divisor(&f(12)),
            Some(NonDivisor::SmallPrimePower { q: 2, b: 2 })
        );
        assert_eq!(classify_non_divisor(&f(18)), Some(NonDivisor::LargestSquared));
    }

    #[test]
    fn small_counts() {
        let cfg = ScanConfig::default();
        assert_eq!(count_n(10, &cfg).unwrap(), 3);
        assert_eq!(count_n(3, &cfg).unwrap(), 0);
        assert_eq!(sum_t_r(10, 0.0, &cfg).unwrap(), 3.0);
        assert_eq!(sum_t_r(3, 5.0, &cfg).unwrap(), 0.0);
        assert!(count_n(1, &cfg).is_err());
        assert!(sum_inv_p_r(10, 0.0, &cfg).is_err());
    }

    #[test]
    fn small_moments() {
        let cfg = ScanConfig::default();
        assert!((sum_inv_p_r(4, 1.0, &cfg).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(sum_p_r(2, 1.0, &cfg).unwrap(), 2.0);
        let m = sum_s_moments(10, 1.0, &cfg).unwrap();
        assert_eq!(m.sum_sr, 39.0);
        let m = sum_s_moments(2, 3.5, &cfg).unwrap();
        assert_eq!(m.sum_sr, 2f64.powf(3.5));
        assert_eq!(m.sum_ratio_r, 1.0);
    }

    #[test]
    fn t1_at_100_by_enumeration() {
        let cfg = ScanConfig::default();
        let want: f64 = (2..=100u64)
            .map(f)
            .filter(|g| g.largest_prime_exponent() >= 2)
            .map(|g| 1.0 / g.largest_prime() as f64)
            .sum();
        let got = sum_t_r(100, 1.0, &cfg).unwrap();
        assert!((got - want).abs() < 1e-13, "{got} vs {want}");
    }

    #[test]
    fn identities_at_small_x() {
        let cfg = ScanConfig::default();
        for x in [2u64, 3, 10, 100, 1000] {
            for k in [0u32, 1, 2, 3] {
                assert_eq!(sum_p_pow_exact(x, k, &cfg).unwrap(), sum_p_pow_via_psi(x, k), "x = {x}");
            }
        }
    }

    #[test]
    fn upper_bound_small() {
        let cfg = ScanConfig::default();
        for x in [4u64, 10, 100, 1000] {
            assert!(count_n(x, &cfg).unwrap() as u128 <= count_n_upper_bound(x));
        }
        assert_eq!(count_n_upper_bound(3), 0);
    }
}
