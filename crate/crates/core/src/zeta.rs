//! Real ζ(s) and its derivatives, and the moment constants of Σ S(n)^r.
//!
//! ζ is evaluated by Euler–Maclaurin summation,
//!
//! ```text
//! ζ(s) = Σ_{n<N} n^{−s} + N^{1−s}/(s−1) + N^{−s}/2
//!        + Σ_{k=1}^{K} B_{2k}/(2k)! · s(s+1)…(s+2k−2) · N^{−s−2k+1},
//! ```
//!
//! carried out on truncated Taylor series in s so every derivative up to
//! order 8 comes out of the same pass.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

pub const MAX_DERIVATIVE: usize = 8;
const ORDER: usize = MAX_DERIVATIVE + 1;
const EM_N: u64 = 50;

/// B_{2k}/(2k)! for k = 1..=20.
const BERNOULLI_SCALED: [f64; 20] = [
    8.33333333333333287e-02,
    -1.38888888888888894e-03,
    3.30687830687830710e-05,
    -8.26719576719576754e-07,
    2.08767569878681002e-08,
    -5.28419013868749322e-10,
    1.33825365306846789e-11,
    -3.38968029632258272e-13,
    8.58606205627784517e-15,
    -2.17486869855806192e-16,
    5.50900282836022953e-18,
    -1.39544646858125223e-19,
    3.53470703962946728e-21,
    -8.95351742703754628e-23,
    2.26795245233768293e-24,
    -5.74479066887220246e-26,
    1.45517247561486496e-27,
    -3.68599494066531029e-29,
    9.33673425709504507e-31,
    -2.36502241570062995e-32,
];

/// Taylor coefficients `f(s+h) = Σ c_i h^i`, truncated after `h^8`.
type Jet = [f64; ORDER];

fn mul(a: &Jet, b: &Jet) -> Jet {
    let mut out = [0.0; ORDER];
    for i in 0..ORDER {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..ORDER - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

/// `n^{−(s+h)}` scaled by `scale`.
fn power_jet(n: f64, s: f64, scale: f64) -> Jet {
    let ln = n.ln();
    let mut out = [0.0; ORDER];
    let mut term = scale * n.powf(-s);
    for (i, o) in out.iter_mut().enumerate() {
        *o = term;
        term *= -ln / (i + 1) as f64;
    }
    out
}

fn check_s(op: &'static str, s: f64) -> Result<()> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::domain(op, format!("s = {s} must exceed 1")));
    }
    Ok(())
}

/// ζ^{(i)}(s)/i! for i = 0..=8.
fn zeta_jet(s: f64) -> Jet {
    let mut acc = [CompensatedSum::new(); ORDER];
    let mut push = |j: &Jet| {
        for (a, v) in acc.iter_mut().zip(j) {
            a.add(*v);
        }
    };
    for n in 1..EM_N {
        push(&power_jet(n as f64, s, 1.0));
    }
    let big_n = EM_N as f64;

    // N^{1−s−h}/(s−1+h)
    let mut inv = [0.0; ORDER];
    let mut t = 1.0 / (s - 1.0);
    for c in inv.iter_mut() {
        *c = t;
        t *= -1.0 / (s - 1.0);
    }
    push(&mul(&power_jet(big_n, s - 1.0, 1.0), &inv));
    push(&power_jet(big_n, s, 0.5));

    // rising factorial (s+h)(s+1+h)…(s+2k−2+h), extended two factors per k
    let mut rising = [0.0; ORDER];
    rising[0] = s;
    rising[1] = 1.0;
    for (k, b) in BERNOULLI_SCALED.iter().enumerate() {
        let k = k + 1;
        if k > 1 {
            for m in [2 * k - 3, 2 * k - 2] {
                let mut lin = [0.0; ORDER];
                lin[0] = s + m as f64;
                lin[1] = 1.0;
                rising = mul(&rising, &lin);
            }
        }
        let tail = power_jet(big_n, s + (2 * k - 1) as f64, *b);
        push(&mul(&rising, &tail));
    }
    let mut out = [0.0; ORDER];
    for (o, a) in out.iter_mut().zip(&acc) {
        *o = a.value();
    }
    out
}

/// ζ(s) for real `s > 1`.
pub fn zeta_real(s: f64) -> Result<f64> {
    zeta_deriv(0, s)
}

/// ζ^{(i)}(s) for `i ≤ 8`, real `s > 1`.
pub fn zeta_deriv(i: usize, s: f64) -> Result<f64> {
    check_s("zeta_deriv", s)?;
    if i > MAX_DERIVATIVE {
        return Err(Error::domain(
            "zeta_deriv",
            format!("derivative order {i} exceeds {MAX_DERIVATIVE}"),
        ));
    }
    Ok(zeta_jet(s)[i] * factorial(i as u64) as f64)
}

/// ζ^{(i)}(s) for all `i ≤ upto`.
pub fn zeta_derivs(upto: usize, s: f64) -> Result<Vec<f64>> {
    check_s("zeta_derivs", s)?;
    if upto > MAX_DERIVATIVE {
        return Err(Error::domain(
            "zeta_derivs",
            format!("derivative order {upto} exceeds {MAX_DERIVATIVE}"),
        ));
    }
    let jet = zeta_jet(s);
    Ok((0..=upto).map(|i| jet[i] * factorial(i as u64) as f64).collect())
}

fn factorial(n: u64) -> u128 {
    (1..=n as u128).product()
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut out = 1u128;
    for i in 0..k as u128 {
        out = out * (n as u128 - i) / (i + 1);
    }
    out
}

/// The generalized binomial `binom(−j, k) = (−1)^k·binom(j+k−1, k)`.
pub fn gen_binom_neg(j: u64, k: u64) -> i128 {
    if j == 0 {
        return i128::from(k == 0);
    }
    let b = binomial(j + k - 1, k) as i128;
    if k.is_multiple_of(2) {
        b
    } else {
        -b
    }
}

/// `c_{r,m} = (m−1)!·(r+1)^{−m}`.
pub fn c_rm(r: f64, m: u32) -> f64 {
    factorial(m as u64 - 1) as f64 * (r + 1.0).powi(-(m as i32))
}

/// `x^{r+1}·Σ_{m=1}^{M} c_{r,m}/log^m x`, the expansion of Σ_{p≤x} p^r.
pub fn prime_power_sum_expansion(x: f64, r: f64, m_terms: u32) -> Result<f64> {
    if !(x >= 10.0) || !(r > -1.0) || m_terms == 0 {
        return Err(Error::domain(
            "prime_power_sum_expansion",
            format!("need x >= 10, r > -1, M >= 1; got x = {x}, r = {r}, M = {m_terms}"),
        ));
    }
    let lx = x.ln();
    let s: f64 = (1..=m_terms).map(|m| c_rm(r, m) / lx.powi(m as i32)).sum();
    Ok(x.powf(r + 1.0) * s)
}

fn check_log_weighted(op: &'static str, x: f64, r: f64, j: u32) -> Result<()> {
    if !(x >= 4.0) || !(r > 0.0) || j == 0 {
        return Err(Error::domain(
            op,
            format!("need x >= 4, r > 0, j >= 1; got x = {x}, r = {r}, j = {j}"),
        ));
    }
    Ok(())
}

/// `Σ_{n≤x/2} n^{−(r+1)}·log^{−j}(x/n)`.
pub fn log_weighted_sum_exact(x: u64, r: f64, j: u32) -> Result<f64> {
    check_log_weighted("log_weighted_sum_exact", x as f64, r, j)?;
    let xf = x as f64;
    let lx = xf.ln();
    Ok((1..=x / 2)
        .map(|n| {
            let nf = n as f64;
            nf.powf(-(r + 1.0)) * (lx - nf.ln()).powi(-(j as i32))
        })
        .sum::<CompensatedSum>()
        .value())
}

/// `Σ_{k=0}^{m} ζ^{(k)}(r+1)·binom(−j,k)·log^{−(j+k)} x`.
pub fn log_weighted_sum_expansion(x: f64, r: f64, j: u32, m: u32) -> Result<f64> {
    check_log_weighted("log_weighted_sum_expansion", x, r, j)?;
    if m as usize > MAX_DERIVATIVE {
        return Err(Error::domain(
            "log_weighted_sum_expansion",
            format!("m = {m} exceeds {MAX_DERIVATIVE}"),
        ));
    }
    let z = zeta_derivs(m as usize, r + 1.0)?;
    let lx = x.ln();
    Ok((0..=m)
        .map(|k| z[k as usize] * gen_binom_neg(j as u64, k as u64) as f64 / lx.powi((j + k) as i32))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentConstants {
    pub r: f64,
    pub j: u32,
    /// `c_{r,1..J}`.
    pub c: Vec<f64>,
    /// `a_{1..J,r}`.
    pub a: Vec<f64>,
    /// `ζ^{(i)}(r+1)` for `i = 0..J−1`.
    pub zeta_derivs: Vec<f64>,
}

/// `a_{m,r} = Σ_{j+k=m, j≥1} c_{r,j}·ζ^{(k)}(r+1)·binom(−j,k)` for `m = 1..J`.
///
/// This is the coefficient of `log^{−m} x` after inserting the prime sum
/// expansion (index j) into the n-sum expansion (index k).
pub fn moment_constants(r: f64, j_max: u32) -> Result<MomentConstants> {
    if !(r > 0.0) || !r.is_finite() || j_max == 0 || j_max as usize > MAX_DERIVATIVE {
        return Err(Error::domain(
            "moment_constants",
            format!("need r > 0 and 1 <= J <= {MAX_DERIVATIVE}; got r = {r}, J = {j_max}"),
        ));
    }
    let z = zeta_derivs(j_max as usize - 1, r + 1.0)?;
    let c: Vec<f64> = (1..=j_max).map(|m| c_rm(r, m)).collect();
    let a = (1..=j_max)
        .map(|m| {
            (1..=m)
                .map(|j| {
                    let k = m - j;
                    c[j as usize - 1] * z[k as usize] * gen_binom_neg(j as u64, k as u64) as f64
                })
                .sum()
        })
        .collect();
    Ok(MomentConstants {
        r,
        j: j_max,
        c,
        a,
        zeta_derivs: z,
    })
}

/// `x^{r+1}·Σ_{j=1}^{J} a_{j,r}/log^j x`.
pub fn s_moment_expansion(x: f64, j_terms: u32, mc: &MomentConstants) -> Result<f64> {
    if !(x >= 10.0) || j_terms == 0 || j_terms > mc.j {
        return Err(Error::domain(
            "s_moment_expansion",
            format!("need x >= 10 and 1 <= J <= {}; got x = {x}, J = {j_terms}", mc.j),
        ));
    }
    let lx = x.ln();
    let s: f64 = mc.a[..j_terms as usize]
        .iter()
        .enumerate()
        .map(|(i, a)| a / lx.powi(i as i32 + 1))
        .sum();
    Ok(x.powf(mc.r + 1.0) * s)
}
