use lpf_core::asymptotics::{
    elementary, exponent_forms, g_r_of, inv_moment_shape, l_of, saddle_point_count, t_r_shape, u0_seed, u0_series,
    u0_solve,
};
use lpf_core::dickman::DickmanTable;

#[test]
fn u0_series_tracks_solver() {
    let rel = |x: f64| {
        let u = u0_solve(x).unwrap().u0;
        (u0_series(x).unwrap() - u).abs() / u
    };
    let grid: Vec<f64> = (6..=12).map(|k| 10f64.powi(k)).collect();
    let errs: Vec<f64> = grid.iter().map(|&x| rel(x)).collect();
    eprintln!("u0 series relative error: {errs:?}");
    assert!(errs.last().unwrap() < errs.first().unwrap());
    for &x in &grid {
        let u = u0_solve(x).unwrap().u0;
        let l2 = x.ln().ln();
        let lead = (u0_seed(x).unwrap() - u).abs() / u;
        // the leading factor misses a term of relative order log₃x/log₂x
        assert!(lead <= 2.0 * l2.ln() / l2, "x = {x}: {lead}");
    }
}

#[test]
fn u0_residual_contract_on_grid() {
    let mut x = 100.0f64;
    while x <= 1e16 {
        let r = u0_solve(x).unwrap();
        assert!(r.residual <= 1e-10 * x.ln(), "x = {x}");
        x *= 10f64.sqrt();
    }
}

#[test]
fn saddle_versus_exponent_envelope() {
    let t = DickmanTable::build(64.0, 30).unwrap();
    let diffs: Vec<f64> = [1e8, 1e16, 1e32, 1e64]
        .iter()
        .map(|&x| {
            let saddle = saddle_point_count(x, &t, true).unwrap().ln();
            let env = exponent_forms(x).unwrap().leading.ln();
            (saddle - env).abs() / env.abs()
        })
        .collect();
    eprintln!("log saddle form vs log leading envelope: {diffs:?}");
    assert!(diffs.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn orderings_and_limits() {
    let mut prev_ratio = f64::INFINITY;
    for k in 4..=16 {
        let x = 10f64.powi(k);
        let f = exponent_forms(x).unwrap();
        assert!(f.double_l < f.leading);
        let ratio = f.refined / x;
        assert!(ratio < prev_ratio);
        prev_ratio = ratio;
    }
    // g_r − g_0 only through the log(1+r) shifts
    let x = 1e10f64;
    let l2 = x.ln().ln();
    let l3 = l2.ln();
    let r = 2.0f64;
    let shift = r.ln_1p();
    let want = shift / (2.0 * l2) * (1.0 + 2.0 / l3)
        - ((l3 + shift - 2f64.ln()).powi(2) - (l3 - 2f64.ln()).powi(2)) / (8.0 * l2 * l2);
    assert!((g_r_of(x, r).unwrap() - g_r_of(x, 0.0).unwrap() - want).abs() < 1e-14);
    // T_r shape with r = 0 equals the N(x) shape
    assert_eq!(t_r_shape(1e9, 0.0).unwrap(), exponent_forms(1e9).unwrap().refined);
    let v = inv_moment_shape(1e8, 2.0).unwrap();
    let want = 1e8 * (-(2.0f64 * 2.0).sqrt() * l_of(1e8).unwrap() * (1.0 + g_r_of(1e8, 1.0).unwrap())).exp();
    assert_eq!(v, want);
}

#[test]
fn elementary_row() {
    let e = elementary(1e8, &[0.0, 1.0]).unwrap();
    assert!(e.l > 0.0 && e.u0 > 1.0);
    assert_eq!(e.g_r.len(), 2);
    assert!(elementary(20.0, &[0.0]).is_err());
}
