//! Segmented factor sieves, prime enumeration and π(x).
//!
//! A [`FactorSieve`] covers one half-open segment `[lo, hi)` and stores, for
//! every integer in it, the primes `p ≤ √(hi−1)` dividing it together with
//! their exponents (a compressed-row table). The one possible prime factor
//! above `√(hi−1)` is the cofactor left after dividing those out, so a full
//! factorization costs `O(ω(n))` and never touches trial division.
//!
//! Whole-range quantities are computed by [`scan`], which splits `[lo, hi)`
//! into fixed segments, processes them on the rayon pool and returns the
//! per-segment results in segment order.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

/// Largest segment a single [`FactorSieve`] may span unless a caller asks for more.
pub const DEFAULT_SEGMENT_BUDGET: u64 = 1 << 24;

/// Segment length used by streaming scans.
pub const DEFAULT_SCAN_SEGMENT: u64 = 1 << 20;

/// Integers handled by the sieves stay below 2^53 so that every value also
/// converts to `f64` exactly.
pub const MAX_N: u64 = 1 << 53;

const CACHE_MAGIC: &[u8; 8] = b"LPFSIEVE";
const CACHE_VERSION: u32 = 1;

/// Canonical decomposition of an integer `n ≥ 1` into prime powers.
///
/// `factors` is sorted by prime; `n = 1` has no factors. By convention the
/// largest prime factor of 1 is 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Factorization {
    n: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Validates and wraps a prime–exponent list.
    ///
    /// Primality of the listed bases is not re-checked; ordering, exponents and
    /// the product are.
    pub fn new(n: u64, factors: Vec<(u64, u32)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("factorization", "n must be positive"));
        }
        let mut prod: u64 = 1;
        let mut prev = 1u64;
        for &(p, a) in &factors {
            if p <= prev || a == 0 {
                return Err(Error::domain(
                    "factorization",
                    format!("factors of {n} not strictly increasing with positive exponents"),
                ));
            }
            prev = p;
            let pa = p.checked_pow(a).ok_or(Error::Overflow { op: "factorization" })?;
            prod = prod.checked_mul(pa).ok_or(Error::Overflow { op: "factorization" })?;
        }
        if prod != n {
            return Err(Error::domain(
                "factorization",
                format!("product of factors is {prod}, expected {n}"),
            ));
        }
        Ok(Self { n, factors })
    }

    /// Factors `n` by trial division. Meant for isolated values; bulk work
    /// goes through [`FactorSieve`].
    pub fn by_trial_division(n: u64) -> Result<Self> {
        if n == 0 || n >= MAX_N {
            return Err(Error::domain("factorization", format!("n = {n} outside [1, 2^53)")));
        }
        let mut factors = Vec::new();
        let mut m = n;
        let mut d = 2u64;
        while d * d <= m {
            if m.is_multiple_of(d) {
                let mut a = 0;
                while m.is_multiple_of(d) {
                    m /= d;
                    a += 1;
                }
                factors.push((d, a));
            }
            d += if d == 2 { 1 } else { 2 };
        }
        if m > 1 {
            factors.push((m, 1));
        }
        Ok(Self { n, factors })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// P(n); 1 for n = 1.
    pub fn largest_prime(&self) -> u64 {
        self.factors.last().map_or(1, |&(p, _)| p)
    }

    /// Exponent of P(n) in n; 0 for n = 1.
    pub fn largest_prime_exponent(&self) -> u32 {
        self.factors.last().map_or(0, |&(_, a)| a)
    }

    pub fn smallest_prime(&self) -> u64 {
        self.factors.first().map_or(1, |&(p, _)| p)
    }

    fn clear(&mut self, n: u64) {
        self.n = n;
        self.factors.clear();
    }
}

/// Primes up to a fixed limit, shared by all segments of a scan.
#[derive(Debug, Clone)]
pub struct BasePrimes {
    limit: u64,
    primes: Vec<u32>,
}

impl BasePrimes {
    /// Sieve of Eratosthenes over odd numbers up to `limit`.
    pub fn up_to(limit: u64) -> Self {
        let limit = limit.min(MAX_N.isqrt());
        let mut primes = Vec::new();
        if limit >= 2 {
            primes.push(2);
        }
        if limit >= 3 {
            // index i represents 2i + 1
            let half = ((limit - 1) / 2) as usize;
            let mut composite = vec![false; half + 1];
            let mut i = 1usize;
            while (2 * i + 1) * (2 * i + 1) <= limit as usize {
                if !composite[i] {
                    let p = 2 * i + 1;
                    let mut j = (p * p) / 2;
                    while j <= half {
                        composite[j] = true;
                        j += p;
                    }
                }
                i += 1;
            }
            primes.extend((1..=half).filter(|&i| !composite[i]).map(|i| (2 * i + 1) as u32));
        }
        Self { limit, primes }
    }

    /// Base primes sufficient for sieving any segment that ends at or below `hi`.
    pub fn for_range(hi: u64) -> Self {
        Self::up_to(hi.saturating_sub(1).isqrt())
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// The primes `≤ √(hi−1)`, or an error if this table stops short of that.
    fn covering(&self, hi: u64) -> Result<&[u32]> {
        let need = (hi - 1).isqrt();
        if need > self.limit {
            return Err(Error::domain(
                "build_sieve",
                format!("base primes reach {}, segment needs {need}", self.limit),
            ));
        }
        let end = self.primes.partition_point(|&p| (p as u64) <= need);
        Ok(&self.primes[..end])
    }
}

/// Prime-factor table for the integers in `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorSieve {
    lo: u64,
    hi: u64,
    base_primes: Vec<u32>,
    offsets: Vec<u32>,
    primes: Vec<u32>,
    exps: Vec<u8>,
}

/// Builds the sieve for `[lo, hi)` under the default segment budget.
pub fn build_sieve(lo: u64, hi: u64) -> Result<FactorSieve> {
    FactorSieve::build(lo, hi)
}

impl FactorSieve {
    pub fn build(lo: u64, hi: u64) -> Result<Self> {
        Self::check_bounds(lo, hi, DEFAULT_SEGMENT_BUDGET)?;
        Self::build_with(lo, hi, &BasePrimes::for_range(hi), DEFAULT_SEGMENT_BUDGET)
    }

    fn check_bounds(lo: u64, hi: u64, budget: u64) -> Result<()> {
        if lo < 2 {
            return Err(Error::domain("build_sieve", format!("lo = {lo} must be at least 2")));
        }
        if hi <= lo {
            return Err(Error::domain("build_sieve", format!("empty segment [{lo}, {hi})")));
        }
        if hi > MAX_N {
            return Err(Error::Overflow { op: "build_sieve" });
        }
        let len = hi - lo;
        if len > budget {
            return Err(Error::SegmentBudget { lo, hi, len, budget });
        }
        Ok(())
    }

    /// Builds the sieve reusing a precomputed table of base primes.
    pub fn build_with(lo: u64, hi: u64, base: &BasePrimes, budget: u64) -> Result<Self> {
        Self::check_bounds(lo, hi, budget)?;
        let base_primes = base.covering(hi)?.to_vec();
        let len = (hi - lo) as usize;

        let mut offsets = vec![0u32; len + 1];
        for &p in &base_primes {
            let p = p as u64;
            let mut i = (lo.div_ceil(p) * p - lo) as usize;
            while i < len {
                offsets[i + 1] += 1;
                i += p as usize;
            }
        }
        for i in 0..len {
            offsets[i + 1] += offsets[i];
        }
        let total = offsets[len] as usize;

        let mut cursor = offsets[..len].to_vec();
        let mut primes = vec![0u32; total];
        let mut exps = vec![1u8; total];
        for &p in &base_primes {
            let p64 = p as u64;
            let mut i = (lo.div_ceil(p64) * p64 - lo) as usize;
            while i < len {
                primes[cursor[i] as usize] = p;
                cursor[i] += 1;
                i += p as usize;
            }
            let mut pk = p64 * p64;
            while pk < hi {
                let mut i = (lo.div_ceil(pk) * pk - lo) as usize;
                while i < len {
                    exps[cursor[i] as usize - 1] += 1;
                    i += pk as usize;
                }
                pk = match pk.checked_mul(p64) {
                    Some(v) => v,
                    None => break,
                };
            }
        }

        Ok(Self {
            lo,
            hi,
            base_primes,
            offsets,
            primes,
            exps,
        })
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }

    pub fn base_primes(&self) -> &[u32] {
        &self.base_primes
    }

    fn index(&self, n: u64) -> Result<usize> {
        if n < self.lo || n >= self.hi {
            return Err(Error::OutOfSegment {
                n,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok((n - self.lo) as usize)
    }

    /// Smallest prime factor of `n`.
    pub fn spf(&self, n: u64) -> Result<u64> {
        let i = self.index(n)?;
        let (a, b) = (self.offsets[i] as usize, self.offsets[i + 1] as usize);
        Ok(if a < b { self.primes[a] as u64 } else { n })
    }

    pub fn factorize(&self, n: u64) -> Result<Factorization> {
        let i = self.index(n)?;
        let mut f = Factorization::default();
        self.fill(i, &mut f);
        Ok(f)
    }

    /// P(n), the largest prime factor.
    pub fn largest_prime_factor(&self, n: u64) -> Result<u64> {
        let i = self.index(n)?;
        let (a, b) = (self.offsets[i] as usize, self.offsets[i + 1] as usize);
        let mut rem = n;
        for k in a..b {
            rem /= (self.primes[k] as u64).pow(self.exps[k] as u32);
        }
        Ok(if rem > 1 { rem } else { self.primes[b - 1] as u64 })
    }

    fn fill(&self, i: usize, f: &mut Factorization) {
        let n = self.lo + i as u64;
        f.clear(n);
        let (a, b) = (self.offsets[i] as usize, self.offsets[i + 1] as usize);
        let mut rem = n;
        for k in a..b {
            let p = self.primes[k] as u64;
            let e = self.exps[k] as u32;
            rem /= p.pow(e);
            f.factors.push((p, e));
        }
        if rem > 1 {
            f.factors.push((rem, 1));
        }
    }

    /// Calls `visit` with the factorization of every integer in the segment,
    /// in increasing order. The factorization buffer is reused between calls.
    pub fn for_each<F: FnMut(&Factorization)>(&self, mut visit: F) {
        let mut f = Factorization::default();
        for i in 0..self.len() {
            self.fill(i, &mut f);
            visit(&f);
        }
    }

    /// Serializes the segment (little-endian).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&self.lo.to_le_bytes())?;
        w.write_all(&self.hi.to_le_bytes())?;
        w.write_all(&(self.base_primes.len() as u64).to_le_bytes())?;
        w.write_all(&(self.primes.len() as u64).to_le_bytes())?;
        for &p in &self.base_primes {
            w.write_all(&p.to_le_bytes())?;
        }
        for &o in &self.offsets {
            w.write_all(&o.to_le_bytes())?;
        }
        for &p in &self.primes {
            w.write_all(&p.to_le_bytes())?;
        }
        w.write_all(&self.exps)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Format("not a sieve segment file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != CACHE_VERSION {
            return Err(Error::Format(format!("unsupported sieve cache version {version}")));
        }
        let lo = read_u64(&mut r)?;
        let hi = read_u64(&mut r)?;
        if lo < 2 || hi <= lo || hi > MAX_N || hi - lo > u32::MAX as u64 {
            return Err(Error::Format(format!("bad segment bounds [{lo}, {hi})")));
        }
        let nbase = read_u64(&mut r)? as usize;
        let total = read_u64(&mut r)? as usize;
        let len = (hi - lo) as usize;
        let base_primes = read_u32s(&mut r, nbase)?;
        let offsets = read_u32s(&mut r, len + 1)?;
        let primes = read_u32s(&mut r, total)?;
        let mut exps = vec![0u8; total];
        r.read_exact(&mut exps)?;
        if offsets[len] as usize != total || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Format("inconsistent factor offsets".into()));
        }
        Ok(Self {
            lo,
            hi,
            base_primes,
            offsets,
            primes,
            exps,
        })
    }

    /// Loads `[lo, hi)` from `dir` if a segment file exists there, otherwise
    /// builds it and stores it.
    pub fn cached(dir: &Path, lo: u64, hi: u64, base: &BasePrimes, budget: u64) -> Result<Self> {
        let path = segment_path(dir, lo, hi);
        if path.exists() {
            let s = Self::read_from(BufReader::new(fs::File::open(&path)?))?;
            if s.lo != lo || s.hi != hi {
                return Err(Error::Format(format!("{} holds a different segment", path.display())));
            }
            return Ok(s);
        }
        let s = Self::build_with(lo, hi, base, budget)?;
        fs::create_dir_all(dir)?;
        let tmp = path.with_extension("tmp");
        {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            s.write_to(&mut w)?;
            w.flush()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(s)
    }
}

fn segment_path(dir: &Path, lo: u64, hi: u64) -> PathBuf {
    dir.join(format!("sieve_{lo}_{hi}.bin"))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_u32s<R: Read>(r: &mut R, n: usize) -> Result<Vec<u32>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Settings shared by all streaming computations over `[2, x]`.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub segment_len: u64,
    /// Largest `x` an exact scan accepts.
    pub max_x: u64,
    pub cache_dir: Option<PathBuf>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            segment_len: DEFAULT_SCAN_SEGMENT,
            max_x: 10_000_000_000,
            cache_dir: None,
        }
    }
}

impl ScanConfig {
    pub(crate) fn check(&self, op: &'static str, x: u64) -> Result<()> {
        if x > self.max_x {
            return Err(Error::Budget { op, x, max: self.max_x });
        }
        Ok(())
    }
}

/// Runs `work` over the segments of `[lo, hi)` and returns the results in
/// segment order. Segment boundaries depend only on `lo` and the configured
/// length, never on the thread count.
pub fn scan<T, F>(lo: u64, hi: u64, cfg: &ScanConfig, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&FactorSieve) -> T + Sync,
{
    if hi <= lo {
        return Ok(Vec::new());
    }
    let seg = cfg.segment_len.max(1);
    let budget = seg.max(DEFAULT_SEGMENT_BUDGET);
    let base = BasePrimes::for_range(hi);
    let bounds: Vec<(u64, u64)> = (0..(hi - lo).div_ceil(seg))
        .map(|k| (lo + k * seg, (lo + (k + 1) * seg).min(hi)))
        .collect();
    bounds
        .into_par_iter()
        .map(|(a, b)| {
            let sieve = match &cfg.cache_dir {
                Some(dir) => FactorSieve::cached(dir, a, b, &base, budget)?,
                None => FactorSieve::build_with(a, b, &base, budget)?,
            };
            Ok(work(&sieve))
        })
        .collect()
}

/// All primes in `[lo, hi)` using the given base primes.
fn primes_in(lo: u64, hi: u64, base: &[u32]) -> Vec<u64> {
    let len = (hi - lo) as usize;
    let mut composite = vec![false; len];
    for &p in base {
        let p = p as u64;
        if p * p >= hi {
            break;
        }
        let start = (p * p).max(lo.div_ceil(p) * p);
        let mut i = (start - lo) as usize;
        while i < len {
            composite[i] = true;
            i += p as usize;
        }
    }
    (0..len)
        .filter(|&i| !composite[i] && lo + i as u64 >= 2)
        .map(|i| lo + i as u64)
        .collect()
}

/// Increasing list of the primes `≤ x`.
pub fn primes_up_to(x: u64) -> Vec<u64> {
    if x < 2 {
        return Vec::new();
    }
    let hi = x + 1;
    let base = BasePrimes::for_range(hi);
    let seg = DEFAULT_SCAN_SEGMENT;
    let chunks: Vec<Vec<u64>> = (0..hi.div_ceil(seg))
        .into_par_iter()
        .map(|k| primes_in(k * seg, ((k + 1) * seg).min(hi), base.primes()))
        .collect();
    chunks.concat()
}

/// π(x), counted by segmented sieving.
pub fn prime_count(x: u64) -> u64 {
    if x < 2 {
        return 0;
    }
    let hi = x + 1;
    let base = BasePrimes::for_range(hi);
    let seg = DEFAULT_SCAN_SEGMENT;
    (0..hi.div_ceil(seg))
        .into_par_iter()
        .map(|k| primes_in(k * seg, ((k + 1) * seg).min(hi), base.primes()).len() as u64)
        .sum()
}

/// `∫₂^x dt / log t`, the logarithmic-integral main term of π(x).
///
/// Integrated as `∫_{log 2}^{log x} e^s / s ds` with panels pre-split at unit
/// steps in `s`.
pub fn pi_approx(x: f64, quad: &Quadrature) -> Result<f64> {
    if !(x >= 2.0) {
        return Err(Error::domain("pi_approx", format!("x = {x} must be at least 2")));
    }
    let (a, b) = (2f64.ln(), x.ln());
    if b == a {
        return Ok(0.0);
    }
    let mut breaks = vec![a];
    let mut s = a.floor() + 1.0;
    while s < b {
        breaks.push(s);
        s += 1.0;
    }
    breaks.push(b);
    Ok(quad.integrate(|s| s.exp() / s, &breaks)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_spf(n: u64) -> u64 {
        (2..=n).find(|d| n.is_multiple_of(*d)).unwrap()
    }

    #[test]
    fn small_segment_spf() {
        let s = build_sieve(2, 12).unwrap();
        assert_eq!(s.spf(4).unwrap(), 2);
        assert_eq!(s.spf(9).unwrap(), 3);
        assert_eq!(s.spf(11).unwrap(), 11);
        let one = build_sieve(2, 3).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.spf(2).unwrap(), 2);
    }

    #[test]
    fn offset_segment_matches_trial_division() {
        let s = build_sieve(1_000_000, 1_000_100).unwrap();
        // 1_000_003 is prime
        assert_eq!(s.spf(1_000_003).unwrap(), naive_spf(1_000_003));
        for n in 1_000_000..1_000_100 {
            assert_eq!(s.spf(n).unwrap(), naive_spf(n), "n = {n}");
        }
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(matches!(build_sieve(1, 10), Err(Error::Domain { .. })));
        assert!(matches!(build_sieve(10, 10), Err(Error::Domain { .. })));
        assert!(matches!(
            build_sieve(2, 2 + DEFAULT_SEGMENT_BUDGET + 1),
            Err(Error::SegmentBudget { .. })
        ));
        let s = build_sieve(2, 100).unwrap();
        assert!(matches!(s.factorize(100), Err(Error::OutOfSegment { .. })));
        assert!(matches!(s.largest_prime_factor(1), Err(Error::OutOfSegment { .. })));
    }

    #[test]
    fn factorizations() {
        let s = build_sieve(2, 1000).unwrap();
        assert_eq!(s.factorize(12).unwrap().factors(), &[(2, 2), (3, 1)]);
        assert_eq!(s.factorize(97).unwrap().factors(), &[(97, 1)]);
        assert_eq!(s.factorize(720).unwrap().factors(), &[(2, 4), (3, 2), (5, 1)]);
        assert_eq!(s.largest_prime_factor(10).unwrap(), 5);
    }

    #[test]
    fn prime_powers_and_primorials() {
        let n = 1u64 << 20;
        let s = build_sieve(n, n + 1).unwrap();
        assert_eq!(s.largest_prime_factor(n).unwrap(), 2);
        assert_eq!(s.factorize(n).unwrap().factors(), &[(2, 20)]);
        let primorial = 2 * 3 * 5 * 7 * 11 * 13 * 17 * 19;
        assert_eq!(primorial, 9_699_690);
        let s = build_sieve(primorial, primorial + 1).unwrap();
        assert_eq!(s.largest_prime_factor(primorial).unwrap(), 19);
    }

    #[test]
    fn factorization_validation() {
        assert!(Factorization::new(12, vec![(2, 2), (3, 1)]).is_ok());
        assert!(Factorization::new(12, vec![(3, 1), (2, 2)]).is_err());
        assert!(Factorization::new(13, vec![(2, 2), (3, 1)]).is_err());
        assert!(Factorization::new(1, vec![]).is_ok());
        assert_eq!(Factorization::new(1, vec![]).unwrap().largest_prime(), 1);
    }

    #[test]
    fn primes_small() {
        assert_eq!(primes_up_to(10), vec![2, 3, 5, 7]);
        assert_eq!(primes_up_to(2), vec![2]);
        assert!(primes_up_to(1).is_empty());
        assert_eq!(prime_count(100), 25);
    }

    #[test]
    fn cache_roundtrip_is_exact() {
        let s = build_sieve(5_000, 9_000).unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        let back = FactorSieve::read_from(buf.as_slice()).unwrap();
        assert_eq!(s, back);
        buf[0] = b'X';
        assert!(matches!(FactorSieve::read_from(buf.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn scan_segments_are_ordered() {
        let cfg = ScanConfig {
            segment_len: 1000,
            ..ScanConfig::default()
        };
        let parts = scan(2, 10_001, &cfg, |s| (s.lo(), s.hi())).unwrap();
        assert_eq!(parts.first(), Some(&(2, 1002)));
        assert_eq!(parts.len(), 10);
        assert!(parts.windows(2).all(|w| w[0].1 == w[1].0));
        assert_eq!(parts.last().unwrap().1, 10_001);
    }
}
