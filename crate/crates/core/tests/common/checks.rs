//! Property checks run both by the property test target and by the
//! acceptance runner. Each uses a fixed-seed runner so reruns are identical.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use qpm_lab::compensation::{default_band, optimize_compensator_length};
use qpm_lab::polarization::{coincidence_curve, visibility_from_extremes, TwoPhotonState};
use qpm_lab::qpm::{idler_wavelength, solve_phasematched_signal, solve_poling_period, GratingOrder};
use qpm_lab::spectra::{crystal_temperature_scan, default_grid, design_order, spdc_spectrum, temperature_steps};

use super::*;

pub type CheckResult = Result<(), String>;

pub fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> CheckResult
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

fn sign(order: GratingOrder) -> f64 {
    match order {
        GratingOrder::Forward => 1.0,
        GratingOrder::Backward => -1.0,
    }
}

/// Every root returned for 100 random configurations has `|Δk| < 1e−9` under
/// the reference model, and the constructed pair is among them.
pub fn solver_residual() -> CheckResult {
    let m = ktp();
    let strategy = (0.55f64..0.85, -0.08f64..0.08, -20.0f64..200.0);
    run(100, strategy, |(pump, offset, t)| {
        let signal = 2.0 * pump * (1.0 + offset);
        let idler = idler(pump, signal);
        let u = unpoled(pump, signal, idler, t);
        let period = 2.0 * std::f64::consts::PI / (u.abs() * expansion(t));
        prop_assume!(period > 1.0 && period < 500.0);
        let roots = solve_phasematched_signal(&m, pump, period, 10_000.0, t).map_err(|e| fail(e.to_string()))?;
        for r in &roots {
            let dk = mismatch(pump, r.signal_um, r.idler_um, period, t, sign(r.order));
            prop_assert!(dk.abs() < 1e-9, "root {r:?}: reference mismatch {dk}");
        }
        prop_assert!(
            roots.iter().any(|r| (r.signal_um - signal).abs() < 1e-6),
            "constructed signal {signal} missing from {roots:?}"
        );
        Ok(())
    })
}

/// Period solver against a 1 nm scan of the period over the whole search
/// range.
pub fn period_grid_oracle() -> CheckResult {
    let m = ktp();
    run(12, (1.0f64..1.7, -20.0f64..200.0), |(degenerate, t)| {
        let solved = solve_poling_period(&m, degenerate, t).map_err(|e| fail(e.to_string()))?;
        let grid = grid_period(degenerate, t, 1.0, 500.0, 1e-3);
        prop_assert!((solved - grid).abs() <= 0.5e-3 + 1e-9, "solver {solved} vs grid {grid}");
        Ok(())
    })
}

/// Band maximum of |φ| for compensator length `comp_um`, reference model.
fn band_max(pump: f64, t: f64, length_um: f64, band: (f64, f64), comp_um: f64) -> f64 {
    let half = 0.5 * length_um * expansion(t);
    let mut samples: Vec<f64> = (0..401).map(|i| band.0 + (band.1 - band.0) * i as f64 / 400.0).collect();
    samples.push(2.0 * pump);
    samples
        .iter()
        .map(|&s| pair_phase(pump, s, t, half, comp_um).abs())
        .fold(0.0, f64::max)
}

/// Compensator optimum against a 1 µm scan using the reference phase.
pub fn compensator_grid_oracle() -> CheckResult {
    let (k, y) = (ktp(), yvo4());
    run(3, (0.62f64..0.70, 10.0f64..80.0, 5_000.0f64..15_000.0), |(pump, t, length)| {
        let band = default_band(&k, pump, t, length).map_err(|e| fail(e.to_string()))?;
        let opt = optimize_compensator_length(&k, &y, pump, t, length, band).map_err(|e| fail(e.to_string()))?;
        // The per-µm terms are linear in the compensator length, so split
        // each sample into its fixed and per-µm part once.
        let half = 0.5 * length * expansion(t);
        let mut samples: Vec<f64> = (0..401).map(|i| band.0 + (band.1 - band.0) * i as f64 / 400.0).collect();
        samples.push(2.0 * pump);
        let parts: Vec<(f64, f64)> = samples
            .iter()
            .map(|&s| {
                let a = pair_phase(pump, s, t, half, 0.0);
                (a, pair_phase(pump, s, t, half, 1.0) - a)
            })
            .collect();
        let objective = |l: f64| parts.iter().map(|(a, b)| (a + l * b).abs()).fold(0.0, f64::max);
        let best = (0..=20_000)
            .map(|i| i as f64)
            .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
            .unwrap();
        prop_assert!((opt.length_um - best).abs() <= 1.0, "optimizer {} vs grid {best}", opt.length_um);
        let direct = band_max(pump, t, length, band, opt.length_um);
        prop_assert!(
            (direct - opt.residual_deg).abs() < 1e-6,
            "residual {} vs reference {direct}",
            opt.residual_deg
        );
        prop_assert!(opt.residual_deg <= objective(best) + 1e-9);
        Ok(())
    })
}

pub fn energy_conservation() -> CheckResult {
    run(1000, (0.3f64..1.0, 1.01f64..4.0), |(pump, ratio)| {
        let signal = pump * ratio;
        let i = idler_wavelength(pump, signal).map_err(|e| fail(e.to_string()))?;
        let residual = 1.0 / pump - 1.0 / signal - 1.0 / i;
        prop_assert!(residual.abs() < 1e-12, "residual {residual}");
        Ok(())
    })
}

/// Central difference (h = 0.01 °C) of the index against the analytic slope.
pub fn thermo_optic_derivative() -> CheckResult {
    let m = ktp();
    run(500, (prop::bool::ANY, 0.45f64..3.5, -20.0f64..200.0), |(use_z, l, t)| {
        let axis = if use_z { "Z" } else { "Y" };
        let h = 0.01;
        let n = |t: f64| m.refractive_index(axis, l, t).unwrap();
        let fd = (n(t + h) - n(t - h)) / (2.0 * h);
        let analytic = m.axis(axis).unwrap().thermo.as_ref().unwrap().slope(l, t);
        prop_assert!(((fd - analytic) / analytic).abs() < 1e-6, "{axis} {l} {t}: fd {fd} analytic {analytic}");
        Ok(())
    })
}

/// Branch peaks of the default-grid spectrum coincide with the roots of the
/// spectrum's grating order to within one grid step.
pub fn peaks_match_roots() -> CheckResult {
    let m = ktp();
    run(20, (1.1f64..1.6, 0.0f64..100.0, -20.0f64..20.0, -3e-3f64..3e-3), |(degenerate, t_design, dt, dpump)| {
        let period = solve_poling_period(&m, degenerate, t_design).map_err(|e| fail(e.to_string()))?;
        let pump = 0.5 * degenerate + dpump;
        let t = t_design + dt;
        let grid = default_grid(pump);
        let step = grid[1] - grid[0];
        let spectrum = spdc_spectrum(&m, pump, period, 10_000.0, t, &grid).map_err(|e| fail(e.to_string()))?;
        let order = design_order(&m, pump, period, 10_000.0, t).map_err(|e| fail(e.to_string()))?;
        let roots: Vec<_> = match solve_phasematched_signal(&m, pump, period, 10_000.0, t) {
            Ok(r) => r.into_iter().filter(|r| r.order == order).collect(),
            Err(_) => Vec::new(),
        };
        let inside: Vec<_> = roots
            .iter()
            .filter(|r| r.signal_um > grid[0] && r.signal_um < grid[grid.len() - 1])
            .collect();
        prop_assume!(inside.len() == 1);
        let root = inside[0];
        prop_assume!(root.idler_um > grid[0] && root.idler_um < grid[grid.len() - 1]);
        let s = spectrum.signal_peak_um();
        let i = spectrum.idler_peak_um();
        prop_assert!((s - root.signal_um).abs() <= step, "signal peak {s} vs root {}", root.signal_um);
        prop_assert!((i - root.idler_um).abs() <= step, "idler peak {i} vs root {}", root.idler_um);
        Ok(())
    })
}

/// Extremes of a coincidence curve fed back through the visibility formula.
pub fn visibility_round_trip() -> CheckResult {
    let angles = prop::sample::select(vec![0.0, 45.0, -45.0, 90.0, 135.0]);
    run(500, (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, 0.1f64..1e4, angles), |(vhv, vp, vm, rate, alpha)| {
        let state = TwoPhotonState::new(vhv, vp, vm, rate).unwrap();
        let v = state.visibility_at(alpha);
        let r = coincidence_curve(&state, alpha, &[-alpha, 90.0 - alpha]);
        let (hi, lo) = (r[1].max(r[0]), r[1].min(r[0]));
        let back = visibility_from_extremes(hi, lo, 0.0, 0.0).unwrap();
        prop_assert!((back - v).abs() < 1e-12, "v {v} back {back}");
        Ok(())
    })
}

/// Bit-identical reruns and independence from the worker count.
pub fn determinism() -> CheckResult {
    let m = ktp();
    let period = solve_poling_period(&m, 1.31, 60.0).map_err(|e| e.to_string())?;
    let temps = temperature_steps(0.0, 150.0, 5.0).unwrap();
    let grid = default_grid(0.655);
    let scan = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| crystal_temperature_scan(&m, 0.655, period, 10_000.0, &temps, &grid).unwrap())
    };
    let bits = |s: &qpm_lab::spectra::TemperatureScan| -> Vec<u64> {
        s.rows.iter().flat_map(|r| r.signal_branch.iter().chain(&r.idler_branch)).map(|v| v.to_bits()).collect()
    };
    let one = bits(&scan(1));
    let four = bits(&scan(4));
    let again = bits(&scan(4));
    if one != four {
        return Err("scan differs between 1 and 4 worker threads".into());
    }
    if four != again {
        return Err("scan differs between identical reruns".into());
    }
    let a = solve_phasematched_signal(&m, 0.658, 54.05, 10_000.0, 22.0).map_err(|e| e.to_string())?;
    let b = solve_phasematched_signal(&m, 0.658, 54.05, 10_000.0, 22.0).map_err(|e| e.to_string())?;
    if a != b {
        return Err("root solver differs between reruns".into());
    }
    Ok(())
}

pub const ALL: &[(&str, fn() -> CheckResult)] = &[
    ("solver residual on 100 random configurations", solver_residual),
    ("period solver vs 1 nm grid", period_grid_oracle),
    ("compensator optimizer vs 1 um grid", compensator_grid_oracle),
    ("energy conservation to 1e-12", energy_conservation),
    ("thermo-optic finite difference to 1e-6", thermo_optic_derivative),
    ("spectrum peaks vs roots within one grid step", peaks_match_roots),
    ("visibility round trip to 1e-12", visibility_round_trip),
    ("determinism", determinism),
];
