//! Smooth-number counts Ψ(x, y) and their approximations.
//!
//! Ψ(x, y) counts the integers `1 ≤ n ≤ x` whose prime factors are all at most
//! `y`. The integer `n = 1` is always counted: the identities
//! `Σ_{2≤n≤x} P(n)^r = Σ_{p≤x} p^r Ψ(x/p, p)` need it for the term `n = p`.

use std::collections::HashMap;

use crate::dickman::DickmanTable;
use crate::error::{Error, Result};
use crate::sieve::{primes_up_to, scan, ScanConfig, MAX_N};

/// Largest x the direct sieve count accepts.
pub const SIEVE_MAX_X: u64 = 100_000_000;
/// Largest y the Buchstab counter keeps a prime table for.
pub const BUCHSTAB_MAX_Y: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiMethod {
    /// Scan P(n) over `[2, x]` with the factor sieve.
    Sieve,
    /// Memoized Buchstab recursion.
    Buchstab,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsiQuery {
    pub x: u64,
    pub y: u64,
    pub method: PsiMethod,
}

impl PsiQuery {
    pub fn new(x: u64, y: u64, method: PsiMethod) -> Self {
        Self { x, y, method }
    }
}

/// Exact Ψ(x, y). A `y` above `x` is treated as `y = x`.
pub fn psi_exact(q: &PsiQuery, cfg: &ScanConfig) -> Result<u64> {
    if q.y < 2 {
        return Err(Error::domain("psi_exact", format!("y = {} must be at least 2", q.y)));
    }
    if q.x >= MAX_N {
        return Err(Error::Budget {
            op: "psi_exact",
            x: q.x,
            max: MAX_N - 1,
        });
    }
    if q.y >= q.x {
        return Ok(q.x);
    }
    let method = match q.method {
        PsiMethod::Auto if q.x <= 1 << 20 => PsiMethod::Sieve,
        PsiMethod::Auto if q.y <= BUCHSTAB_MAX_Y => PsiMethod::Buchstab,
        PsiMethod::Auto => PsiMethod::Sieve,
        m => m,
    };
    match method {
        PsiMethod::Sieve => psi_by_sieve(q.x, &[q.y], cfg).map(|v| v[0]),
        _ => {
            if q.y > BUCHSTAB_MAX_Y {
                return Err(Error::Budget {
                    op: "psi_exact",
                    x: q.y,
                    max: BUCHSTAB_MAX_Y,
                });
            }
            Ok(Buchstab::new(q.y).psi(q.x, q.y))
        }
    }
}

/// Ψ(x, y) for several `y` from a single pass over `[2, x]`.
pub fn psi_by_sieve(x: u64, ys: &[u64], cfg: &ScanConfig) -> Result<Vec<u64>> {
    if x > SIEVE_MAX_X {
        return Err(Error::Budget {
            op: "psi_exact",
            x,
            max: SIEVE_MAX_X,
        });
    }
    if x == 0 {
        return Ok(vec![0; ys.len()]);
    }
    let parts = scan(2, x + 1, cfg, |s| {
        let mut counts = vec![0u64; ys.len()];
        for n in s.lo()..s.hi() {
            let p = s.largest_prime_factor(n).expect("n in segment");
            for (c, &y) in counts.iter_mut().zip(ys) {
                if p <= y {
                    *c += 1;
                }
            }
        }
        counts
    })?;
    let mut total = vec![1u64; ys.len()];
    for part in parts {
        for (t, c) in total.iter_mut().zip(part) {
            *t += c;
        }
    }
    Ok(total)
}

/// Memoized Buchstab recursion
/// `Ψ(x, p_k) = Ψ(x, p_{k−1}) + Ψ(x/p_k, p_k)`, base `Ψ(x, 2) = ⌊log₂x⌋ + 1`.
///
/// The recursion in `k` is unrolled into `Ψ(x, p_k) = Ψ(x, 2) + Σ_{2≤i≤k} Ψ(x/p_i, p_i)`;
/// memo entries are keyed on `(⌊x⌋, k)`.
#[derive(Debug, Default)]
pub struct Buchstab {
    primes: Vec<u64>,
    limit: u64,
    memo: HashMap<(u64, u32), u64>,
}

impl Buchstab {
    pub fn new(y_max: u64) -> Self {
        let limit = y_max.clamp(2, BUCHSTAB_MAX_Y);
        Self {
            primes: primes_up_to(limit),
            limit,
            memo: HashMap::new(),
        }
    }

    fn ensure(&mut self, y: u64) {
        if y > self.limit {
            self.limit = y.min(BUCHSTAB_MAX_Y).max(2 * self.limit);
            self.primes = primes_up_to(self.limit);
        }
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    /// Ψ(x, y); `y` above [`BUCHSTAB_MAX_Y`] is clamped, which is only exact when `y ≥ x`.
    pub fn psi(&mut self, x: u64, y: u64) -> u64 {
        if y >= x {
            return x;
        }
        self.ensure(y);
        let k = self.primes.partition_point(|&p| p <= y);
        self.psi_k(x, k)
    }

    fn psi_k(&mut self, x: u64, k: usize) -> u64 {
        if x <= 1 || k == 0 {
            return x.min(1);
        }
        if self.primes[k - 1] >= x {
            return x;
        }
        let base = 64 - x.leading_zeros() as u64;
        if k == 1 {
            return base;
        }
        if let Some(&v) = self.memo.get(&(x, k as u32)) {
            return v;
        }
        let mut total = base;
        for i in 1..k {
            let p = self.primes[i];
            let q = x / p;
            if q == 0 {
                break;
            }
            total += if p >= q { q } else { self.psi_k(q, i + 1) };
        }
        self.memo.insert((x, k as u32), total);
        total
    }
}

fn check_xy(op: &'static str, x: f64, y: f64) -> Result<()> {
    if !(y >= 2.0 && y <= x && x.is_finite()) {
        return Err(Error::domain(op, format!("need 2 <= y <= x, got x = {x}, y = {y}")));
    }
    Ok(())
}

/// `u = log x / log y`.
pub fn u_of(x: f64, y: f64) -> f64 {
    x.ln() / y.ln()
}

/// `x·ρ(log x/log y)`.
pub fn psi_dickman(x: f64, y: f64, table: &DickmanTable) -> Result<f64> {
    check_xy("psi_dickman", x, y)?;
    Ok(x * table.rho(u_of(x, y))?)
}

/// `x·exp(−log x/(2 log y))`, the shape of the elementary upper bound.
pub fn psi_elementary_bound(x: f64, y: f64) -> Result<f64> {
    check_xy("psi_elementary_bound", x, y)?;
    Ok(x * (-x.ln() / (2.0 * y.ln())).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dickman::DickmanTable;

    fn brute(x: u64, y: u64) -> u64 {
        (1..=x)
            .filter(|&n| {
                let mut m = n;
                let mut d = 2;
                let mut largest = 1;
                while d * d <= m {
                    while m % d == 0 {
                        m /= d;
                        largest = d;
                    }
                    d += 1;
                }
                if m > 1 {
                    largest = m;
                }
                largest <= y
            })
            .count() as u64
    }

    #[test]
    fn thirty_three_smooth() {
        let cfg = ScanConfig::default();
        for method in [PsiMethod::Sieve, PsiMethod::Buchstab, PsiMethod::Auto] {
            assert_eq!(psi_exact(&PsiQuery::new(30, 3, method), &cfg).unwrap(), 12);
        }
        assert_eq!(brute(30, 3), 12);
    }

    #[test]
    fn y_at_least_x_counts_everything() {
        let cfg = ScanConfig::default();
        assert_eq!(
            psi_exact(&PsiQuery::new(1000, 1000, PsiMethod::Buchstab), &cfg).unwrap(),
            1000
        );
        assert_eq!(
            psi_exact(&PsiQuery::new(1000, 5000, PsiMethod::Sieve), &cfg).unwrap(),
            1000
        );
        assert!(psi_exact(&PsiQuery::new(1000, 1, PsiMethod::Sieve), &cfg).is_err());
    }

    #[test]
    fn buchstab_matches_brute_force() {
        let mut b = Buchstab::new(2);
        for x in [1u64, 2, 3, 17, 100, 999, 2048] {
            for y in [2u64, 3, 5, 7, 10, 31, 97] {
                assert_eq!(b.psi(x, y), brute(x, y), "x = {x}, y = {y}");
            }
        }
    }

    #[test]
    fn sieve_budget() {
        let cfg = ScanConfig::default();
        assert!(matches!(
            psi_by_sieve(SIEVE_MAX_X + 1, &[2], &cfg),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn approximations() {
        let t = DickmanTable::build(10.0, 30).unwrap();
        assert_eq!(psi_dickman(1e5, 1e5, &t).unwrap(), 1e5);
        let v = psi_dickman(1e6, 1e3, &t).unwrap();
        assert!((v - 1e6 * (1.0 - 2f64.ln())).abs() < 1e-6, "{v}");
        let b = psi_elementary_bound(1e6, 10.0).unwrap();
        assert!((b - 1e6 * (-3f64).exp()).abs() < 1e-6);
        let b = psi_elementary_bound(50.0, 50.0).unwrap();
        assert!((b - 50.0 * (-0.5f64).exp()).abs() < 1e-12);
        assert!(psi_dickman(10.0, 20.0, &t).is_err());
    }
}
