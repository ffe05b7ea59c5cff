//! The Dickman–de Bruijn function ρ(u) and the saddle point ξ(u).
//!
//! ρ is the continuous solution of `u ρ'(u) = −ρ(u − 1)` with `ρ = 1` on
//! `[0, 1]`. The table stores one power series per unit interval
//! `[k, k + 1)`, expanded about the midpoint `c = k + ½`, so the local
//! variable `w = u − c` ranges over `[−½, ½]`.
//!
//! Writing the series on `[k, k+1)` as `Σ aⱼ wʲ` and the previous one as
//! `Σ bⱼ wʲ`, the delay equation gives
//!
//! ```text
//! a_{j+1} = −(b_j + j·a_j) / (c·(j + 1)),   j ≥ 0,
//! ```
//!
//! which fixes every coefficient except `a₀`. The constant comes from the
//! integral form of the equation, `c·ρ(c) = ∫_{c−1}^{c} ρ(t) dt`:
//! both pieces of the right side are positive, so `a₀` is obtained without the
//! cancellation that continuity matching (`ρ(k+1) = ρ(k) − ∫…`) suffers once
//! ρ is small. Relative accuracy therefore holds across the whole table.
//!
//! Dropping the series at degree `D` leaves the exact residual
//! `(D·a_D + b_D)·w^D` in the delay equation; its maximum over the table is
//! reported as the residual certificate.

use std::f64::consts::E;
use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const DEFAULT_U_MAX: f64 = 64.0;
pub const DEFAULT_DEGREE: usize = 30;
/// Certificate every table must meet.
pub const RESIDUAL_LIMIT: f64 = 1e-10;
/// ρ(u) underflows `f64` a little beyond this.
pub const MAX_U_MAX: f64 = 120.0;
pub const MIN_DEGREE: usize = 10;

const CACHE_MAGIC: &[u8; 8] = b"LPFRHO01";
const CACHE_VERSION: u32 = 1;

/// Piecewise power-series representation of ρ on `[0, u_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DickmanTable {
    u_max: f64,
    degree: usize,
    coeffs: Vec<f64>,
    residual_bound: f64,
}

/// Builds the ρ table; see [`DickmanTable::build`].
pub fn build_rho_table(u_max: f64, degree: usize) -> Result<DickmanTable> {
    DickmanTable::build(u_max, degree)
}

fn horner(c: &[f64], w: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * w + a)
}

impl DickmanTable {
    pub fn build(u_max: f64, degree: usize) -> Result<Self> {
        if !(2.0..=MAX_U_MAX).contains(&u_max) {
            return Err(Error::domain(
                "build_rho_table",
                format!("u_max = {u_max} outside [2, {MAX_U_MAX}]"),
            ));
        }
        if degree < MIN_DEGREE {
            return Err(Error::domain(
                "build_rho_table",
                format!("degree {degree} below {MIN_DEGREE}"),
            ));
        }
        let stride = degree + 1;
        let intervals = u_max.ceil() as usize;
        let mut coeffs = vec![0.0; intervals * stride];
        coeffs[0] = 1.0;
        let half_pow_d = 0.5f64.powi(degree as i32);
        let mut residual_bound: f64 = 0.0;

        for k in 1..intervals {
            let c = k as f64 + 0.5;
            let (done, rest) = coeffs.split_at_mut(k * stride);
            let b = &done[(k - 1) * stride..];
            let a = &mut rest[..stride];
            a[0] = 0.0;
            for j in 0..degree {
                a[j + 1] = -(b[j] + j as f64 * a[j]) / (c * (j + 1) as f64);
            }
            // ∫_0^{1/2} b(w) dw: the previous piece on [k − 1/2, k)
            let mut prev_right = 0.0;
            // ∫_{-1/2}^0 (a − a₀)(w) dw: the current piece on [k, k + 1/2) minus its constant
            let mut cur_left = 0.0;
            let mut h = 0.5;
            for j in 0..=degree {
                let m = h / (j + 1) as f64;
                prev_right += b[j] * m;
                cur_left += if j % 2 == 0 { a[j] * m } else { -a[j] * m };
                h *= 0.5;
            }
            // c·a₀ = prev_right + cur_left + a₀/2
            a[0] = (prev_right + cur_left) / k as f64;

            let tail = (degree as f64 * a[degree] + b[degree]).abs() * half_pow_d;
            let scale: f64 = b.iter().map(|v| v.abs()).sum::<f64>() + c * a.iter().map(|v| v.abs()).sum::<f64>();
            let rounding = 4.0 * stride as f64 * f64::EPSILON * scale;
            residual_bound = residual_bound.max(tail + rounding);
        }

        if residual_bound > RESIDUAL_LIMIT {
            return Err(Error::Residual {
                achieved: residual_bound,
                limit: RESIDUAL_LIMIT,
                degree,
            });
        }
        Ok(Self {
            u_max,
            degree,
            coeffs,
            residual_bound,
        })
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn residual_bound(&self) -> f64 {
        self.residual_bound
    }

    pub fn intervals(&self) -> usize {
        self.coeffs.len() / (self.degree + 1)
    }

    /// Series coefficients on `[k, k + 1)` in powers of `u − k − ½`.
    pub fn coefficients(&self, k: usize) -> &[f64] {
        let s = self.degree + 1;
        &self.coeffs[k * s..(k + 1) * s]
    }

    fn locate(&self, op: &'static str, u: f64) -> Result<(usize, f64)> {
        if u.is_nan() {
            return Err(Error::domain(op, "u is NaN"));
        }
        if u > self.u_max {
            return Err(Error::TableRange {
                op,
                u,
                u_max: self.u_max,
            });
        }
        let k = (u.floor() as usize).min(self.intervals() - 1);
        Ok((k, u - k as f64 - 0.5))
    }

    /// ρ(u): 0 for u < 0, 1 on `[0, 1]`.
    pub fn rho(&self, u: f64) -> Result<f64> {
        if u < 0.0 {
            return Ok(0.0);
        }
        if u <= 1.0 {
            return Ok(1.0);
        }
        let (k, w) = self.locate("rho", u)?;
        Ok(horner(self.coefficients(k), w))
    }

    /// ρ'(u), taken from the piece `[floor(u), floor(u) + 1)`.
    pub fn rho_prime(&self, u: f64) -> Result<f64> {
        if u < 1.0 {
            return Ok(0.0);
        }
        let (k, w) = self.locate("rho_prime", u)?;
        let c = self.coefficients(k);
        let mut acc = 0.0;
        for j in (1..c.len()).rev() {
            acc = acc * w + j as f64 * c[j];
        }
        Ok(acc)
    }

    /// `∫_a^b ρ(t) dt` from the piecewise antiderivatives.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        if b < a {
            return Ok(-self.integral(b, a)?);
        }
        self.locate("integral", b)?;
        let (mut lo, hi) = (a.max(0.0), b);
        let mut acc = 0.0;
        while lo < hi {
            let k = (lo.floor() as usize).min(self.intervals() - 1);
            let end = if k + 1 == self.intervals() {
                hi
            } else {
                hi.min(k as f64 + 1.0)
            };
            let c = self.coefficients(k);
            let anti = |w: f64| {
                let mut s = 0.0;
                for j in (0..c.len()).rev() {
                    s = s * w + c[j] / (j + 1) as f64;
                }
                s * w
            };
            let mid = k as f64 + 0.5;
            acc += anti(end - mid) - anti(lo - mid);
            lo = end;
        }
        Ok(acc)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&self.u_max.to_le_bytes())?;
        w.write_all(&(self.degree as u64).to_le_bytes())?;
        w.write_all(&self.residual_bound.to_le_bytes())?;
        w.write_all(&(self.intervals() as u64).to_le_bytes())?;
        for c in &self.coeffs {
            w.write_all(&c.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Format("not a rho table file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != CACHE_VERSION {
            return Err(Error::Format(format!("unsupported rho table version {version}")));
        }
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut b8)?;
            Ok(b8)
        };
        let u_max = f64::from_le_bytes(next(&mut r)?);
        let degree = u64::from_le_bytes(next(&mut r)?) as usize;
        let residual_bound = f64::from_le_bytes(next(&mut r)?);
        let intervals = u64::from_le_bytes(next(&mut r)?) as usize;
        if !(2.0..=MAX_U_MAX).contains(&u_max)
            || !(MIN_DEGREE..=1000).contains(&degree)
            || intervals != u_max.ceil() as usize
        {
            return Err(Error::Format("inconsistent rho table header".into()));
        }
        let mut coeffs = Vec::with_capacity(intervals * (degree + 1));
        for _ in 0..intervals * (degree + 1) {
            coeffs.push(f64::from_le_bytes(next(&mut r)?));
        }
        Ok(Self {
            u_max,
            degree,
            coeffs,
            residual_bound,
        })
    }
}

/// Result of the ξ(u) solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiRoot {
    pub xi: f64,
    pub iterations: usize,
    /// `|e^ξ − 1 − uξ|` at the returned root.
    pub residual: f64,
    pub bisected: bool,
}

/// `(e^ξ − 1 − ξ)/ξ` and its derivative, accurate for small ξ.
fn phi(xi: f64) -> (f64, f64) {
    if xi < 0.5 {
        // Σ_{k≥1} ξ^k/(k+1)!  and  Σ_{k≥1} k ξ^{k−1}/(k+1)!
        let mut term = 0.5; // ξ^{k-1}/(k+1)! at k = 1
        let mut value = 0.0;
        let mut slope = 0.0;
        for k in 1..=24 {
            value += term * xi;
            slope += k as f64 * term;
            term *= xi / (k + 2) as f64;
        }
        (value, slope)
    } else {
        let em1 = xi.exp_m1();
        let value = (em1 - xi) / xi;
        let slope = ((xi - 1.0) * em1 + xi) / (xi * xi);
        (value, slope)
    }
}

/// The positive root ξ of `e^ξ − 1 = uξ`, u > 1.
pub fn xi(u: f64) -> Result<f64> {
    xi_root(u).map(|r| r.xi)
}

/// Newton's method on `(e^ξ − 1 − ξ)/ξ = u − 1`, started to the right of the
/// root so the iterates decrease monotonically; bisection if that fails.
pub fn xi_root(u: f64) -> Result<XiRoot> {
    if !(u > 1.0) || !u.is_finite() {
        return Err(Error::domain("xi", format!("u = {u} must exceed 1")));
    }
    let target = u - 1.0;
    let h = |x: f64| phi(x).0 - target;
    let mut x = if u > E { xi_expansion(u)? } else { 2.0 * target };
    let mut expansions = 0;
    while h(x) <= 0.0 {
        x = 1.5 * x + 1e-300;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Convergence {
                op: "xi",
                detail: format!("could not bracket the root for u = {u}"),
            });
        }
    }
    let upper = x;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < 30 {
        let (v, d) = phi(x);
        let step = (v - target) / d;
        let next = x - step;
        iterations += 1;
        if !next.is_finite() || next <= 0.0 {
            break;
        }
        if step.abs() <= 4.0 * f64::EPSILON * x || h(next) <= 0.0 {
            x = if h(next) <= 0.0 && h(x).abs() < h(next).abs() {
                x
            } else {
                next
            };
            converged = true;
            break;
        }
        x = next;
    }

    let mut bisected = false;
    if !converged {
        bisected = true;
        let (mut lo, mut hi) = (0.0, upper);
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if h(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        x = hi;
    }
    let residual = (x.exp_m1() - u * x).abs();
    if residual > 1e-12 * x.exp() {
        return Err(Error::Convergence {
            op: "xi",
            detail: format!("residual {residual:e} at u = {u}"),
        });
    }
    Ok(XiRoot {
        xi: x,
        iterations,
        residual,
        bisected,
    })
}

/// `log u + log₂u + log₂u/log u`, the explicit terms of the expansion of ξ(u).
pub fn xi_expansion(u: f64) -> Result<f64> {
    if !(u > E) {
        return Err(Error::domain("xi_expansion", format!("u = {u} must exceed e")));
    }
    let l1 = u.ln();
    let l2 = l1.ln();
    Ok(l1 + l2 + l2 / l1)
}

/// `exp(−u(log u + log₂u − 1))`, the explicit part of the large-u expansion of ρ.
pub fn rho_asymptotic(u: f64) -> Result<f64> {
    if !(u > E) {
        return Err(Error::domain("rho_asymptotic", format!("u = {u} must exceed e")));
    }
    let l1 = u.ln();
    Ok((-u * (l1 + l1.ln() - 1.0)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftCheck {
    /// ρ(u − v)
    pub lhs: f64,
    /// ρ(u)·e^{vξ(u)}
    pub rhs: f64,
    pub ratio: f64,
}

/// Compares ρ(u − v) with ρ(u)e^{vξ(u)}.
pub fn rho_shift_check(table: &DickmanTable, u: f64, v: f64) -> Result<ShiftCheck> {
    if !(u > 2.0) || !(v.abs() <= 0.5 * u) {
        return Err(Error::domain(
            "rho_shift_check",
            format!("need u > 2 and |v| <= u/2, got u = {u}, v = {v}"),
        ));
    }
    if u > table.u_max() {
        return Err(Error::TableRange {
            op: "rho_shift_check",
            u,
            u_max: table.u_max(),
        });
    }
    let lhs = table.rho(u - v)?;
    let rhs = table.rho(u)? * (v * xi(u)?).exp();
    Ok(ShiftCheck {
        lhs,
        rhs,
        ratio: lhs / rhs,
    })
}
