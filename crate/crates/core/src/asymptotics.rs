//! Elementary asymptotic shapes for N(x) and the related moment sums.
//!
//! Every O-term is dropped; the values are leading-order only.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::dickman::DickmanTable;
use crate::error::{Error, Result};

/// Smallest `log log log x` at which `g_r` is evaluated. The factor
/// `1 + 2/log₃x` blows up as `log₃x → 0⁺`.
pub const MIN_LOG3: f64 = 0.1;

fn log2_of(op: &'static str, x: f64) -> Result<f64> {
    if !(x > std::f64::consts::E) || !x.is_finite() {
        return Err(Error::domain(op, format!("x = {x} must exceed e")));
    }
    Ok(x.ln().ln())
}

fn log3_of(op: &'static str, x: f64) -> Result<f64> {
    let l2 = log2_of(op, x)?;
    let l3 = l2.ln();
    if !(l3 >= MIN_LOG3) {
        return Err(Error::domain(
            op,
            format!("x = {x} is out of asymptotic range (log log log x = {l3:.4} < {MIN_LOG3})"),
        ));
    }
    Ok(l3)
}

/// `L(x) = √(log x · log log x)`.
pub fn l_of(x: f64) -> Result<f64> {
    let l2 = log2_of("l_of", x)?;
    Ok((x.ln() * l2).sqrt())
}

/// `g_r(x)` with the grouping
/// `(l₃ + log(1+r) − 2 − log 2)/(2l₂)·(1 + 2/l₃) − (l₃ + log(1+r) − log 2)²/(8l₂²)`.
pub fn g_r_of(x: f64, r: f64) -> Result<f64> {
    if !(r > -1.0) {
        return Err(Error::domain("g_r_of", format!("r = {r} must exceed -1")));
    }
    let l3 = log3_of("g_r_of", x)?;
    let l2 = x.ln().ln();
    let lr = r.ln_1p();
    let first = (l3 + lr - 2.0 - LN_2) / (2.0 * l2) * (1.0 + 2.0 / l3);
    let second = (l3 + lr - LN_2).powi(2) / (8.0 * l2 * l2);
    Ok(first - second)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct U0Root {
    pub u0: f64,
    pub iterations: usize,
    /// `|u(x^{1/u²} − 1) − log x|` at the root.
    pub residual: f64,
    pub bracket: (f64, f64),
}

fn u0_residual(log_x: f64, u: f64) -> f64 {
    u * (log_x / (u * u)).exp_m1() - log_x
}

/// Leading term `√(2 log x / log log x)`.
pub fn u0_seed(x: f64) -> Result<f64> {
    let l2 = log2_of("u0_seed", x)?;
    Ok((2.0 * x.ln() / l2).sqrt())
}

/// Root of `log x = u(x^{1/u²} − 1)`.
///
/// `F(u) = u(x^{1/u²} − 1) − log x` is strictly decreasing in u, so the root is
/// bracketed first and then refined by Newton steps that fall back to
/// bisection whenever they leave the bracket.
pub fn u0_solve(x: f64) -> Result<U0Root> {
    if !(x >= 10.0) || !x.is_finite() {
        return Err(Error::domain("u0_solve", format!("x = {x} must be at least 10")));
    }
    let a = x.ln();
    let seed = u0_seed(x)?;
    let (mut lo, mut hi) = ((0.5 * seed).max(1.5), 2.0 * seed);
    let mut expansions = 0;
    while u0_residual(a, lo) < 0.0 || u0_residual(a, hi) > 0.0 {
        if expansions == 60 {
            return Err(Error::Convergence {
                op: "u0_solve",
                detail: format!("no sign change on [{lo}, {hi}] for x = {x}"),
            });
        }
        if u0_residual(a, lo) < 0.0 {
            lo *= 0.5;
        }
        if u0_residual(a, hi) > 0.0 {
            hi *= 2.0;
        }
        expansions += 1;
    }
    let bracket = (lo, hi);
    let tol = 1e-10 * a;
    let mut u = seed.clamp(lo, hi);
    for it in 1..=200 {
        let f = u0_residual(a, u);
        if f.abs() <= tol {
            return Ok(U0Root {
                u0: u,
                iterations: it,
                residual: f.abs(),
                bracket,
            });
        }
        if f > 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let t = a / (u * u);
        let df = t.exp_m1() - 2.0 * t * t.exp();
        let newton = u - f / df;
        u = if newton > lo && newton < hi && df < 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let f = u0_residual(a, u);
    if f.abs() <= tol {
        return Ok(U0Root {
            u0: u,
            iterations: 200,
            residual: f.abs(),
            bracket,
        });
    }
    Err(Error::Convergence {
        op: "u0_solve",
        detail: format!("residual {f:e} above {tol:e} at x = {x}"),
    })
}

/// `√(2 log x/l₂)·(1 − l₃/(2l₂) + log 2/(2l₂))`.
pub fn u0_series(x: f64) -> Result<f64> {
    let l2 = log2_of("u0_series", x)?;
    let l3 = l2.ln();
    if !(l3 > 0.0) {
        return Err(Error::domain("u0_series", format!("x = {x} must exceed e^e")));
    }
    Ok((2.0 * x.ln() / l2).sqrt() * (1.0 - l3 / (2.0 * l2) + LN_2 / (2.0 * l2)))
}

/// `(√π K/2^{3/4})(log x·log log x)^{3/4} x^{1−1/u₀} ρ(u₀)`, with `K = 2`
/// when `corrected` and `K = 1 + log 2` otherwise.
pub fn saddle_point_count(x: f64, table: &DickmanTable, corrected: bool) -> Result<f64> {
    let u0 = u0_solve(x)?.u0;
    let k = if corrected { 2.0 } else { 1.0 + LN_2 };
    let a = x.ln();
    let log_power = (a * a.ln()).powf(0.75);
    let rho = table.rho(u0)?;
    Ok(PI.sqrt() * k / 2f64.powf(0.75) * log_power * (a * (1.0 - 1.0 / u0)).exp() * rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentForms {
    /// `x·exp(−√2 L (1 + g₀))`.
    pub refined: f64,
    /// `x·exp(−√2 L)`.
    pub leading: f64,
    /// `x·exp(−2L)`; smaller than `leading` for every x.
    pub double_l: f64,
}

pub fn exponent_forms(x: f64) -> Result<ExponentForms> {
    let l = l_of(x)?;
    let g0 = g_r_of(x, 0.0)?;
    Ok(ExponentForms {
        refined: x * (-(2f64.sqrt()) * l * (1.0 + g0)).exp(),
        leading: x * (-(2f64.sqrt()) * l).exp(),
        double_l: x * (-2.0 * l).exp(),
    })
}

/// `x·exp(−√(2r) L (1 + g_{r−1}))`, the shape of Σ 1/S(n)^r and Σ 1/P(n)^r.
pub fn inv_moment_shape(x: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain("inv_moment_shape", format!("r = {r} must be positive")));
    }
    let l = l_of(x)?;
    let g = g_r_of(x, r - 1.0)?;
    Ok(x * (-(2.0 * r).sqrt() * l * (1.0 + g)).exp())
}

/// `x·exp(−√(2r+2) L (1 + g_r))`, the shape of T_r(x).
pub fn t_r_shape(x: f64, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain("t_r_shape", format!("r = {r} must be non-negative")));
    }
    let l = l_of(x)?;
    let g = g_r_of(x, r)?;
    Ok(x * (-(2.0 * r + 2.0).sqrt() * l * (1.0 + g)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElementaryAsymptotics {
    pub x: f64,
    pub l: f64,
    /// `(r, g_r(x))` pairs.
    pub g_r: Vec<(f64, f64)>,
    pub u0: f64,
    pub u0_series: f64,
}

pub fn elementary(x: f64, rs: &[f64]) -> Result<ElementaryAsymptotics> {
    Ok(ElementaryAsymptotics {
        x,
        l: l_of(x)?,
        g_r: rs
            .iter()
            .map(|&r| g_r_of(x, r).map(|g| (r, g)))
            .collect::<Result<_>>()?,
        u0: u0_solve(x)?.u0,
        u0_series: u0_series(x)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn l_values() {
        assert!((l_of(E.powf(E)).unwrap() - E.sqrt()).abs() < 1e-14);
        assert!((l_of(1e8).unwrap() - 7.3257).abs() < 5e-4);
        assert!(l_of(2.0).is_err());
        let mut prev = 0.0;
        for k in 1..=12 {
            let v = l_of(10f64.powi(k)).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn g_values() {
        let x = E.powf(E.powf(E));
        let want = (1.0 - 2.0 - LN_2) / (2.0 * E) * 3.0 - (1.0 - LN_2).powi(2) / (8.0 * E * E);
        let got = g_r_of(x, 0.0).unwrap();
        assert!((got - want).abs() < 1e-12, "{got}");
        assert!((got + 0.9359).abs() < 1e-4);
        assert!((g_r_of(1e8, 0.0).unwrap() + 0.8025).abs() < 1e-3);
        assert!(g_r_of(10.0, 0.0).is_err());
        assert!(g_r_of(1e8, -1.0).is_err());
    }

    #[test]
    fn u0_at_e100() {
        let root = u0_solve(E.powi(100)).unwrap();
        assert!((root.u0 - 5.88).abs() < 0.01, "{}", root.u0);
        assert!(root.residual <= 1e-10 * 100.0);
        // bisection on [4, 8] as an independent check
        let (mut lo, mut hi) = (4.0f64, 8.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if u0_residual(100.0, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((root.u0 - lo).abs() < 1e-9);
    }

    #[test]
    fn u0_grid() {
        for k in 2..=16 {
            let x = 10f64.powi(k);
            let root = u0_solve(x).unwrap();
            assert!(root.residual <= 1e-10 * x.ln());
            assert!(root.u0 > 1.0);
            let (lo, hi) = root.bracket;
            let a = x.ln();
            let mid = 0.5 * (lo + hi);
            assert!(u0_residual(a, lo) > u0_residual(a, mid));
            assert!(u0_residual(a, mid) > u0_residual(a, hi));
        }
        let r = u0_solve(1e6).unwrap().u0;
        let s = u0_series(1e6).unwrap();
        assert!((r - s).abs() / r < 0.15);
        assert!(u0_solve(5.0).is_err());
    }

    #[test]
    fn saddle_constant_ratio() {
        let t = DickmanTable::build(10.0, 30).unwrap();
        for x in [1e6, 1e9, 1e12] {
            let c = saddle_point_count(x, &t, true).unwrap();
            let o = saddle_point_count(x, &t, false).unwrap();
            assert!(c > 0.0 && c.is_finite());
            assert!((c / o - 2.0 / (1.0 + LN_2)).abs() < 1e-14);
        }
    }

    #[test]
    fn exponent_shapes() {
        let f = exponent_forms(1e8).unwrap();
        assert!(f.double_l < f.leading);
        let l = l_of(1e8).unwrap();
        let g0 = g_r_of(1e8, 0.0).unwrap();
        assert!((f.refined / 1e8 - (-(2f64.sqrt()) * l * (1.0 + g0)).exp()).abs() < 1e-15);
        assert!((f.refined.ln() - (1e8f64.ln() - 2.046)).abs() < 0.01);
        assert_eq!(inv_moment_shape(1e8, 1.0).unwrap(), f.refined);
        assert_eq!(t_r_shape(1e8, 0.0).unwrap(), f.refined);
        assert!(inv_moment_shape(1e8, 0.0).is_err());
    }
}
