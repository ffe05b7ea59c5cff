//! The ρ-integrals behind N(x), T₀(x) and Σ 1/P(n), and the exact-vs-formula
//! comparison.
//!
//! With `A = log x`, the substitution `t = x^{1/u}` (`dt = −t·A/u² du`) maps
//!
//! ```text
//! ∫₂^x ρ(A/log t)·log t/t² dt  =  ∫₁^{A/log 2} ρ(u)·A²/u³·e^{−A/u} du
//! ∫₂^x ρ(A/log t)/t² dt        =  ∫₁^{A/log 2} ρ(u)·A/u²·e^{−A/u} du
//! ```
//!
//! ρ decays faster than any exponential, so the u-range is cut where the
//! remaining tail is negligible against the tolerance.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::asymptotics::exponent_forms;
use crate::dickman::DickmanTable;
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::sieve::ScanConfig;
use crate::smarandache::exact_sums;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parametrization {
    TForm,
    UForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Weight {
    /// `log t/t²`
    LogOverSquare,
    /// `1/t²`
    InverseSquare,
}

impl Weight {
    /// Power of `A` in the u-form integrand.
    fn power(self) -> i32 {
        match self {
            Weight::LogOverSquare => 2,
            Weight::InverseSquare => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    pub parametrization: Parametrization,
    /// Upper u-limit actually integrated to.
    pub u_upper: f64,
    /// Bound on the discarded tail beyond `u_upper` (0 when nothing was cut).
    pub truncation_bound: f64,
}

fn u_integrand(table: &DickmanTable, a: f64, power: i32, u: f64) -> f64 {
    let rho = table.rho(u).unwrap_or(0.0);
    rho * a.powi(power) / u.powi(power + 1) * (-a / u).exp()
}

fn t_integrand(table: &DickmanTable, a: f64, weight: Weight, t: f64) -> f64 {
    let lt = t.ln();
    let rho = table.rho(a / lt).unwrap_or(0.0);
    match weight {
        Weight::LogOverSquare => rho * lt / (t * t),
        Weight::InverseSquare => rho / (t * t),
    }
}

/// Picks the u cut-off: the smallest integer `k` for which
/// `ρ(k)·A^e/(e·k^e)`, a bound on `∫_k^∞ ρ(u)A^e u^{−e−1} e^{−A/u} du`,
/// drops below `1e−3·tol` times a lower bound of the integral.
fn truncation(table: &DickmanTable, a: f64, weight: Weight, quad: &Quadrature) -> Result<(f64, f64)> {
    let u_full = a / LN_2;
    let e = weight.power();
    let head_end = u_full.min(3.0);
    let mut head_breaks = vec![1.0];
    if head_end > 2.0 {
        head_breaks.push(2.0);
    }
    head_breaks.push(head_end);
    let head = Quadrature::with_rel_tol(1e-6)
        .integrate(|u| u_integrand(table, a, e, u), &head_breaks)?
        .value;
    let target = 1e-3 * quad.rel_tol * head * (1.0 - 1e-6);
    let mut k = 2.0f64;
    while k < u_full {
        if k > table.u_max() {
            return Err(Error::TableRange {
                op: "integral truncation",
                u: k,
                u_max: table.u_max(),
            });
        }
        let bound = table.rho(k)? * a.powi(e) / (e as f64 * k.powi(e));
        if bound <= target {
            return Ok((k, bound));
        }
        k += 1.0;
    }
    Ok((u_full, 0.0))
}

fn integrate(
    x: f64,
    table: &DickmanTable,
    param: Parametrization,
    weight: Weight,
    quad: &Quadrature,
) -> Result<QuadratureResult> {
    if !(x >= 4.0) || !x.is_finite() {
        return Err(Error::domain("integral", format!("x = {x} must be at least 4")));
    }
    let a = x.ln();
    let (u_upper, truncation_bound) = truncation(table, a, weight, quad)?;
    let r = match param {
        Parametrization::UForm => {
            let mut breaks = vec![1.0];
            let mut k = 2.0;
            while k < u_upper {
                breaks.push(k);
                k += 1.0;
            }
            breaks.push(u_upper);
            let e = weight.power();
            quad.integrate(|u| u_integrand(table, a, e, u), &breaks)?
        }
        Parametrization::TForm => {
            let t_lo = if truncation_bound > 0.0 {
                (a / u_upper).exp()
            } else {
                2.0
            };
            // knots of ρ sit at t = x^{1/k}
            let mut knots = vec![t_lo];
            let mut k = u_upper.ceil() - 1.0;
            while k >= 1.0 {
                let t = (a / k).exp();
                if t > t_lo {
                    knots.push(t);
                }
                k -= 1.0;
            }
            if *knots.last().unwrap() < x {
                knots.push(x);
            }
            // geometric refinement, at most a factor 4 per panel
            let mut breaks = vec![knots[0]];
            for w in knots.windows(2) {
                let pieces = ((w[1] / w[0]).ln() / 4f64.ln()).ceil().max(1.0);
                let step = (w[1] / w[0]).powf(1.0 / pieces);
                for j in 1..pieces as usize {
                    breaks.push(w[0] * step.powi(j as i32));
                }
                breaks.push(w[1]);
            }
            quad.integrate(|t| t_integrand(table, a, weight, t), &breaks)?
        }
    };
    Ok(QuadratureResult {
        value: r.value,
        abs_error_estimate: r.abs_error,
        evaluations: r.evaluations,
        parametrization: param,
        u_upper,
        truncation_bound,
    })
}

/// `∫₂^x ρ(log x/log t)·log t/t² dt`.
pub fn integral_t0(
    x: f64,
    table: &DickmanTable,
    param: Parametrization,
    quad: &Quadrature,
) -> Result<QuadratureResult> {
    integrate(x, table, param, Weight::LogOverSquare, quad)
}

/// `∫₂^x ρ(log x/log t)/t² dt`.
pub fn integral_recip_p(
    x: f64,
    table: &DickmanTable,
    param: Parametrization,
    quad: &Quadrature,
) -> Result<QuadratureResult> {
    integrate(x, table, param, Weight::InverseSquare, quad)
}

/// `2x·∫₂^x ρ(log x/log t)·log t/t² dt`, the leading term for N(x).
pub fn n_main_term(x: f64, table: &DickmanTable, quad: &Quadrature) -> Result<f64> {
    Ok(2.0 * x * integral_t0(x, table, Parametrization::UForm, quad)?.value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub x: u64,
    pub n_exact: u64,
    pub t0_exact: u64,
    pub sum_inv_p_exact: f64,
    pub i_t0: f64,
    pub i_recip_p: f64,
    /// `2x·I_T0`.
    pub n_main: f64,
    /// `x·exp(−√2 L (1 + g₀))`; absent below the asymptotic range.
    pub n_elementary: Option<f64>,
    /// `N(x)/(2x·I_T0)`.
    pub ratio_n_main: f64,
    /// `T₀(x)/(x·I_T0)`.
    pub ratio_t0: f64,
    /// `Σ 1/P(n) / (x·I_recipP)`.
    pub ratio_recip_p: f64,
    /// `N(x)/T₀(x)`.
    pub ratio_n_t0: f64,
}

pub fn compare(x: u64, table: &DickmanTable, quad: &Quadrature, cfg: &ScanConfig) -> Result<AsymptoticReport> {
    if x < 4 {
        return Err(Error::domain("compare", format!("x = {x} must be at least 4")));
    }
    let exact = exact_sums(x, &[1.0], cfg)?;
    let xf = x as f64;
    let i_t0 = integral_t0(xf, table, Parametrization::UForm, quad)?.value;
    let i_recip_p = integral_recip_p(xf, table, Parametrization::UForm, quad)?.value;
    let sum_inv_p_exact = exact.moments[0].sum_inv_pr;
    let n_main = 2.0 * xf * i_t0;
    Ok(AsymptoticReport {
        x,
        n_exact: exact.n_x,
        t0_exact: exact.t0,
        sum_inv_p_exact,
        i_t0,
        i_recip_p,
        n_main,
        n_elementary: exponent_forms(xf).ok().map(|f| f.refined),
        ratio_n_main: exact.n_x as f64 / n_main,
        ratio_t0: exact.t0 as f64 / (xf * i_t0),
        ratio_recip_p: sum_inv_p_exact / (xf * i_recip_p),
        ratio_n_t0: exact.n_x as f64 / exact.t0 as f64,
    })
}
