//! Acceptance runner: one line per criterion, non-zero exit if any fails.

mod common;

use std::time::{Duration, Instant};

use qpm_lab::cli::format_sig9;
use qpm_lab::compensation::{default_band, optimize_compensator_length};
use qpm_lab::polarization::fidelity_from_visibilities;
use qpm_lab::qpm::{solve_phasematched_signal, solve_poling_period};
use qpm_lab::spectra::{
    crystal_temperature_scan, default_grid, design_order, insensitivity_report, temperature_steps,
    SCAN_TEMPERATURE_LIMITS_C,
};

use common::{checks, ktp, yvo4};

struct Outcome {
    pass: bool,
    detail: String,
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    if elapsed > limit {
        out.pass = false;
    }
    out.detail = format!("{}; {:.2} s (limit {} s)", out.detail, elapsed.as_secs_f64(), limit.as_secs());
    out
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn period_criterion(degenerate_um: f64, target: f64, tol: f64) -> Outcome {
    timed(Duration::from_secs(1), || {
        let period = solve_poling_period(&ktp(), degenerate_um, 60.0).unwrap();
        Outcome {
            pass: within(period, target, tol),
            detail: format!("period {period:.4} um, expected {target} +/- {tol}"),
        }
    })
}

fn criterion_3() -> Outcome {
    let m = ktp();
    let (period, t) = (54.05, 22.0);
    let order = design_order(&m, 0.658, period, 10_000.0, t).unwrap();
    let roots: Vec<_> = solve_phasematched_signal(&m, 0.658, period, 10_000.0, t)
        .unwrap()
        .into_iter()
        .filter(|r| r.order == order && (r.center_um() - 1.316).abs() < 0.05)
        .collect();
    let centred = !roots.is_empty()
        && roots.iter().all(|r| {
            within(r.center_um(), 1.316, 0.002) && (r.signal_um - 1.316) * (r.idler_um - 1.316) <= 0.0
        });
    let centre = roots.first().map_or(f64::NAN, |r| r.center_um());

    // Pump wavelength whose degenerate period at 22 °C is 54.05 µm.
    let residual = |pump: f64| solve_poling_period(&m, 2.0 * pump, t).unwrap() - period;
    let pump = common::bisect(residual, 0.62, 0.70, 1e-9);
    let degenerate_ok = within(pump, 0.664, 0.002);
    Outcome {
        pass: centred && degenerate_ok,
        detail: format!(
            "658 nm pump: pair centre {:.3} nm (1316 +/- 2) {}; degenerate pump {:.3} nm (664 +/- 2) {}",
            1e3 * centre,
            if centred { "ok" } else { "FAIL" },
            1e3 * pump,
            if degenerate_ok { "ok" } else { "FAIL" },
        ),
    }
}

fn criterion_4() -> Outcome {
    timed(Duration::from_secs(30), || {
        let m = ktp();
        let (lo, hi) = SCAN_TEMPERATURE_LIMITS_C;
        let temps = temperature_steps(lo, hi, 1.0).unwrap();
        let plateau = |degenerate: f64| {
            let pump = 0.5 * degenerate;
            let period = solve_poling_period(&m, degenerate, 60.0).unwrap();
            let scan = crystal_temperature_scan(&m, pump, period, 10_000.0, &temps, &default_grid(pump)).unwrap();
            insensitivity_report(&scan).unwrap().plateau
        };
        let span = |p: Option<qpm_lab::spectra::Plateau>| p.map_or(0.0, |p| p.span_c);
        let show = |p: Option<qpm_lab::spectra::Plateau>| {
            p.map_or("none".to_string(), |p| format!("{}..{} C", p.start_c, p.end_c))
        };
        let p1165 = plateau(1.165);
        let p1310 = plateau(1.310);
        let p1064 = plateau(1.064);
        let ok1165 = span(p1165) >= 100.0;
        let ok1310 = p1310.is_some_and(|p| p.start_c.min(p.end_c) <= 20.0 && p.start_c.max(p.end_c) >= 110.0);
        let ok1064 = span(p1064) < span(p1165) && span(p1064) < span(p1310);
        let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
        Outcome {
            pass: ok1165 && ok1310 && ok1064,
            detail: format!(
                "1165 nm plateau {} (>= 100 C) {}; 1310 nm plateau {} (covers 20..110 C) {}; 1064 nm plateau {} (narrowest) {}",
                show(p1165),
                mark(ok1165),
                show(p1310),
                mark(ok1310),
                show(p1064),
                mark(ok1064),
            ),
        }
    })
}

fn criterion_5() -> Outcome {
    timed(Duration::from_secs(10), || {
        let (k, y) = (ktp(), yvo4());
        let band = default_band(&k, 0.664, 22.0, 10_000.0).unwrap();
        let opt = optimize_compensator_length(&k, &y, 0.664, 22.0, 10_000.0, band).unwrap();
        let length_ok = within(opt.length_um, 4340.0, 150.0);
        let ratio = opt.uncompensated_deg / opt.residual_deg;
        Outcome {
            pass: length_ok && ratio >= 100.0 && opt.residual_deg <= 0.5,
            detail: format!(
                "L_c {:.2} um (4340 +/- 150); residual {:.4} deg (<= 0.5); uncompensated {:.1} deg, ratio {:.0} (>= 100)",
                opt.length_um, opt.residual_deg, opt.uncompensated_deg, ratio
            ),
        }
    })
}

fn criterion_6() -> Outcome {
    let shown = format_sig9(fidelity_from_visibilities(1.000, 0.954, 0.974));
    Outcome { pass: shown == "0.982000000", detail: format!("fidelity {shown}") }
}

fn criterion_7() -> Outcome {
    timed(Duration::from_secs(60), || {
        let mut failures = Vec::new();
        for (name, check) in checks::ALL {
            if let Err(e) = check() {
                failures.push(format!("{name}: {}", e.lines().next().unwrap_or("")));
            }
        }
        Outcome {
            pass: failures.is_empty(),
            detail: if failures.is_empty() {
                format!("{} property suites passed", checks::ALL.len())
            } else {
                failures.join("; ")
            },
        }
    })
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 degenerate period, 1165 nm at 60 C", || period_criterion(1.165, 102.2, 1.5)),
        ("2 degenerate period, 1310 nm at 60 C", || period_criterion(1.310, 54.6, 1.0)),
        ("3 pump tuning with a 54.05 um grating at 22 C", criterion_3),
        ("4 temperature-insensitivity plateaus", criterion_4),
        ("5 YVO4 compensator for 10 mm PPKTP", criterion_5),
        ("6 fidelity from measured visibilities", criterion_6),
        ("7 property suites", criterion_7),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let out = run();
        if !out.pass {
            failed += 1;
        }
        println!("{} criterion {name}: {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
