//! Independent reference model of KTP and YVO4, typed in from the published
//! coefficient tables, plus brute-force helpers shared by the test targets.

#![allow(dead_code)]

use std::f64::consts::PI;

use qpm_lab::MaterialModel;

pub fn ktp() -> MaterialModel {
    MaterialModel::bundled("ktp").unwrap()
}

pub fn yvo4() -> MaterialModel {
    MaterialModel::bundled("yvo4").unwrap()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Axis {
    Y,
    Z,
}

fn sellmeier(axis: Axis, l: f64) -> f64 {
    let (a, b, c, d, e) = match axis {
        Axis::Y => (3.45018, 0.04341, 0.04597, 16.98825, 39.43799),
        Axis::Z => (4.59423, 0.06206, 0.04763, 110.80672, 86.12171),
    };
    let l2 = l * l;
    (a + b / (l2 - c) + d / (l2 - e)).sqrt()
}

fn thermo(axis: Axis, l: f64, t: f64) -> f64 {
    let (n1, n2): ([f64; 4], [f64; 4]) = match axis {
        Axis::Y => (
            [6.2897e-6, 6.3061e-6, -6.0629e-6, 2.6486e-6],
            [-0.14445e-8, 2.2244e-8, -3.5770e-8, 1.3470e-8],
        ),
        Axis::Z => (
            [9.9587e-6, 9.9228e-6, -8.9603e-6, 4.1010e-6],
            [-1.1882e-8, 10.459e-8, -9.8136e-8, 3.1481e-8],
        ),
    };
    let poly = |c: &[f64; 4]| c[0] + c[1] / l + c[2] / (l * l) + c[3] / (l * l * l);
    let dt = t - 25.0;
    poly(&n1) * dt + poly(&n2) * dt * dt
}

/// KTP index from the reference model.
pub fn n_ktp(axis: Axis, l: f64, t: f64) -> f64 {
    sellmeier(axis, l) + thermo(axis, l, t)
}

/// YVO4 index at room temperature; `ordinary` selects o or e.
pub fn n_yvo4(ordinary: bool, l: f64) -> f64 {
    let (a, b, c, d) = if ordinary {
        (3.77834, 0.069736, 0.04724, 0.0108133)
    } else {
        (4.59905, 0.110534, 0.04813, 0.0122676)
    };
    (a + b / (l * l - c) - d * l * l).sqrt()
}

/// `1 + α ΔT + β ΔT²` for KTP.
pub fn expansion(t: f64) -> f64 {
    let dt = t - 25.0;
    1.0 + 6.7e-6 * dt + 11e-9 * dt * dt
}

/// `k_p − k_s − k_i` for pump on Y, signal on Y, idler on Z.
pub fn unpoled(pump: f64, signal: f64, idler: f64, t: f64) -> f64 {
    2.0 * PI
        * (n_ktp(Axis::Y, pump, t) / pump
            - n_ktp(Axis::Y, signal, t) / signal
            - n_ktp(Axis::Z, idler, t) / idler)
}

/// Mismatch with the grating component `sign·2π/Λ(T)` subtracted.
pub fn mismatch(pump: f64, signal: f64, idler: f64, period: f64, t: f64, sign: f64) -> f64 {
    unpoled(pump, signal, idler, t) - sign * 2.0 * PI / (period * expansion(t))
}

pub fn idler(pump: f64, signal: f64) -> f64 {
    1.0 / (1.0 / pump - 1.0 / signal)
}

/// Grating sign whose component is nearest the unpoled mismatch.
pub fn nearest_sign(unpoled: f64) -> f64 {
    if unpoled < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Period on a uniform grid (step `step`) minimizing the degenerate mismatch.
pub fn grid_period(degenerate: f64, t: f64, lo: f64, hi: f64, step: f64) -> f64 {
    let pump = 0.5 * degenerate;
    let u = unpoled(pump, degenerate, degenerate, t);
    let sign = nearest_sign(u);
    let n = ((hi - lo) / step).round() as usize;
    (0..=n)
        .map(|i| lo + step * i as f64)
        .min_by(|a, b| {
            let fa = mismatch(pump, degenerate, degenerate, *a, t, sign).abs();
            let fb = mismatch(pump, degenerate, degenerate, *b, t, sign).abs();
            fa.total_cmp(&fb)
        })
        .unwrap()
}

/// Plain bisection on a sign change.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "no sign change in [{lo}, {hi}]");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Pair phase in degrees for a 10 mm-style crystal (half length `half_um`
/// after expansion) and crossed YVO4 of length `comp_um`, referenced to
/// degeneracy.
pub fn pair_phase(pump: f64, signal: f64, t: f64, half_um: f64, comp_um: f64) -> f64 {
    let raw = |s: f64| {
        let i = idler(pump, s);
        let crystal = half_um * (n_ktp(Axis::Y, s, t) / s - n_ktp(Axis::Z, i, t) / i);
        let comp = -comp_um * (n_yvo4(true, s) / s - n_yvo4(false, i) / i);
        360.0 * (crystal + comp)
    };
    raw(signal) - raw(2.0 * pump)
}
pub mod checks;
