//! Globally adaptive Gauss–Kronrod (7, 15) quadrature.
//!
//! Each panel is integrated with the 15-point Kronrod rule; the embedded
//! 7-point Gauss rule supplies the error estimate. The panel with the largest
//! estimate is bisected until the summed estimate meets the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evaluations: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_evaluations: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

struct Worst {
    err: f64,
    idx: usize,
}

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Worst {}

impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then_with(|| other.idx.cmp(&self.idx))
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut resabs = WGK[7] * fc.abs();
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resabs += WGK[j] * (fv1[j].abs() + fv2[j].abs());
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Panel { a, b, value, err }
}

impl Quadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    /// Integrates `f` over `[breaks[0], breaks[last]]`, starting from one
    /// panel per consecutive pair of break points.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, breaks: &[f64]) -> Result<Integral> {
        if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::domain(
                "integrate",
                "break points must be finite, increasing and at least two",
            ));
        }
        let mut panels: Vec<Panel> = Vec::new();
        let mut heap = BinaryHeap::new();
        let mut evaluations = 0usize;
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                let p = kronrod15(&f, w[0], w[1]);
                evaluations += 15;
                heap.push(Worst {
                    err: p.err,
                    idx: panels.len(),
                });
                panels.push(p);
            }
        }
        let mut total_value: f64 = panels.iter().map(|p| p.value).sum();
        let mut total_err: f64 = panels.iter().map(|p| p.err).sum();

        loop {
            let target = self.abs_tol.max(self.rel_tol * total_value.abs());
            if total_err <= target {
                break;
            }
            if !total_value.is_finite() || !total_err.is_finite() {
                return Err(Error::Tolerance {
                    requested: self.rel_tol,
                    estimate: total_err,
                    evaluations,
                });
            }
            let worst = match heap.pop() {
                Some(w) => w,
                None => {
                    return Err(Error::Tolerance {
                        requested: self.rel_tol,
                        estimate: total_err,
                        evaluations,
                    })
                }
            };
            if evaluations + 30 > self.max_evaluations {
                return Err(Error::Tolerance {
                    requested: self.rel_tol,
                    estimate: total_err,
                    evaluations,
                });
            }
            let p = panels[worst.idx];
            let mid = 0.5 * (p.a + p.b);
            if !(mid > p.a && mid < p.b) {
                // panel at floating-point resolution; leave it as is
                continue;
            }
            let left = kronrod15(&f, p.a, mid);
            let right = kronrod15(&f, mid, p.b);
            evaluations += 30;
            total_value += left.value + right.value - p.value;
            total_err += left.err + right.err - p.err;
            panels[worst.idx] = left;
            heap.push(Worst {
                err: left.err,
                idx: worst.idx,
            });
            heap.push(Worst {
                err: right.err,
                idx: panels.len(),
            });
            panels.push(right);
        }

        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
        let value: CompensatedSum = panels.iter().map(|p| p.value).sum();
        let abs_error: CompensatedSum = panels.iter().map(|p| p.err).sum();
        Ok(Integral {
            value: value.value(),
            abs_error: abs_error.value(),
            evaluations,
        })
    }
}
