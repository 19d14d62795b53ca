//! Emission spectra and temperature scans.
//!
//! A spectrum is sampled on a wavelength grid twice: once treating each grid
//! point as the signal-axis photon (Y for the default axes) and once as the
//! idler-axis photon (Z), the partner wavelength always following from energy
//! conservation. Both branches are plain `sinc²(Δk·L/2)` curves.
//!
//! A spectrum follows one grating component: the one nearer to the unpoled
//! mismatch of the degenerate pair `(λ_p, 2λ_p, 2λ_p)`. Long periods (around
//! 1 µm emission in KTP) can phasematch a second, far non-degenerate pair
//! through the opposite component; that emission is left out.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::materials::MaterialModel;
use crate::qpm::{idler_wavelength, spdc_intensity, GratingOrder, QpmProcess, TypeIIAxes};

pub const DEFAULT_GRID_POINTS: usize = 2048;
pub const DEFAULT_GRID_HALF_SPAN_UM: f64 = 0.060;
/// Crystal temperatures accepted by scans, °C.
pub const SCAN_TEMPERATURE_LIMITS_C: (f64, f64) = (-20.0, 200.0);

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// 2048 points spanning ±60 nm around `2·λ_pump`.
pub fn default_grid(pump_um: f64) -> Vec<f64> {
    let center = 2.0 * pump_um;
    linspace(
        center - DEFAULT_GRID_HALF_SPAN_UM,
        center + DEFAULT_GRID_HALF_SPAN_UM,
        DEFAULT_GRID_POINTS,
    )
}

/// Inclusive temperature steps from `from` towards `to`.
pub fn temperature_steps(from_c: f64, to_c: f64, step_c: f64) -> Result<Vec<f64>> {
    if !(step_c > 0.0) || !from_c.is_finite() || !to_c.is_finite() {
        return Err(invalid("temperature step must be positive and bounds finite"));
    }
    let n = ((to_c - from_c).abs() / step_c + 1e-9).floor() as usize;
    let dir = if to_c >= from_c { 1.0 } else { -1.0 };
    Ok((0..=n).map(|i| from_c + dir * step_c * i as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumGrid {
    pub wavelengths_um: Vec<f64>,
    /// Grid point taken as the signal-axis photon.
    pub signal_branch: Vec<f64>,
    /// Grid point taken as the idler-axis photon.
    pub idler_branch: Vec<f64>,
    /// `(signal_branch + idler_branch) / 2`, so it stays within `[0, 1]`.
    pub total: Vec<f64>,
    /// Set where a branch's partner wavelength fell outside the material
    /// range; that branch carries 0 there.
    pub partner_out_of_range: Vec<bool>,
}

impl SpectrumGrid {
    /// Builds a grid from precomputed branches.
    pub fn from_branches(wavelengths_um: Vec<f64>, signal_branch: Vec<f64>, idler_branch: Vec<f64>) -> Result<Self> {
        let n = wavelengths_um.len();
        if signal_branch.len() != n || idler_branch.len() != n {
            return Err(invalid("spectrum branches must match the wavelength grid"));
        }
        let values_ok = signal_branch
            .iter()
            .chain(&idler_branch)
            .all(|v| v.is_finite() && (0.0..=1.0).contains(v));
        if !values_ok {
            return Err(invalid("spectrum intensities must lie in [0, 1]"));
        }
        let total = signal_branch.iter().zip(&idler_branch).map(|(s, i)| 0.5 * (s + i)).collect();
        Ok(Self {
            wavelengths_um,
            signal_branch,
            idler_branch,
            total,
            partner_out_of_range: vec![false; n],
        })
    }

    pub fn len(&self) -> usize {
        self.wavelengths_um.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths_um.is_empty()
    }

    pub fn signal_peak_um(&self) -> f64 {
        self.wavelengths_um[argmax(&self.signal_branch)]
    }

    pub fn idler_peak_um(&self) -> f64 {
        self.wavelengths_um[argmax(&self.idler_branch)]
    }
}

/// Index of the first maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Full width at half maximum of the peak at `argmax(values)`, from linear
/// interpolation of the half-maximum crossings. `None` if either side never
/// drops to half maximum inside the grid.
pub fn fwhm(wavelengths_um: &[f64], values: &[f64]) -> Option<f64> {
    if values.len() < 3 {
        return None;
    }
    let peak = argmax(values);
    let half = 0.5 * values[peak];
    if !(half > 0.0) {
        return None;
    }
    let cross = |a: usize, b: usize| {
        let (xa, ya, xb, yb) = (wavelengths_um[a], values[a], wavelengths_um[b], values[b]);
        xa + (half - ya) / (yb - ya) * (xb - xa)
    };
    let left = (0..peak).rev().find(|&j| values[j] <= half).map(|j| cross(j, j + 1))?;
    let right = (peak + 1..values.len()).find(|&j| values[j] <= half).map(|j| cross(j - 1, j))?;
    Some(right - left)
}

fn check_grid(grid: &[f64], pump_um: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("wavelength grid is empty"));
    }
    if grid.iter().any(|l| !l.is_finite() || *l <= pump_um) {
        return Err(invalid("wavelength grid must be finite and longer than the pump"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("wavelength grid must be strictly increasing"));
    }
    Ok(())
}

/// Grating component nearer to the unpoled mismatch of the degenerate pair.
pub fn design_order(
    material: &MaterialModel,
    pump_um: f64,
    period_um: f64,
    length_um: f64,
    temperature_c: f64,
) -> Result<GratingOrder> {
    let degenerate = 2.0 * pump_um;
    let p = QpmProcess::with_triple(
        material,
        TypeIIAxes::default(),
        [pump_um, degenerate, degenerate],
        period_um,
        length_um,
        temperature_c,
    )?;
    Ok(GratingOrder::nearest(p.unpoled_mismatch()?))
}

/// Per-branch `sinc²` spectrum of a crystal with period `period_um` and length
/// `length_um` (both at the expansion reference) at `temperature_c`.
pub fn spdc_spectrum(
    material: &MaterialModel,
    pump_um: f64,
    period_um: f64,
    length_um: f64,
    temperature_c: f64,
    grid: &[f64],
) -> Result<SpectrumGrid> {
    let axes = TypeIIAxes::default();
    check_grid(grid, pump_um)?;
    material.refractive_index(&axes.pump, pump_um, temperature_c)?;
    for &l in grid {
        material.refractive_index(&axes.signal, l, temperature_c)?;
        material.refractive_index(&axes.idler, l, temperature_c)?;
    }
    let order = design_order(material, pump_um, period_um, length_um, temperature_c)?;
    let signal_range = material.axis(&axes.signal)?.sellmeier.clone();
    let idler_range = material.axis(&axes.idler)?.sellmeier.clone();

    let n = grid.len();
    let mut signal_branch = vec![0.0; n];
    let mut idler_branch = vec![0.0; n];
    let mut flags = vec![false; n];
    for (i, &l) in grid.iter().enumerate() {
        let partner = idler_wavelength(pump_um, l)?;
        if idler_range.contains(partner) {
            let p = QpmProcess::with_triple(material, axes.clone(), [pump_um, l, partner], period_um, length_um, temperature_c)?;
            signal_branch[i] = spdc_intensity(p.delta_k_for(order)?.value(), p.expanded_length());
        } else {
            flags[i] = true;
        }
        if signal_range.contains(partner) {
            let p = QpmProcess::with_triple(material, axes.clone(), [pump_um, partner, l], period_um, length_um, temperature_c)?;
            idler_branch[i] = spdc_intensity(p.delta_k_for(order)?.value(), p.expanded_length());
        } else {
            flags[i] = true;
        }
    }
    let mut spectrum = SpectrumGrid::from_branches(grid.to_vec(), signal_branch, idler_branch)?;
    spectrum.partner_out_of_range = flags;
    Ok(spectrum)
}

/// Pump wavelength of a diode laser tuned by its temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpTuningModel {
    pub reference_temperature_c: f64,
    pub reference_wavelength_um: f64,
    pub rate_nm_per_c: f64,
}

impl PumpTuningModel {
    pub fn pump_wavelength_um(&self, laser_temperature_c: f64) -> f64 {
        self.reference_wavelength_um
            + 1e-3 * self.rate_nm_per_c * (laser_temperature_c - self.reference_temperature_c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScanKind {
    Crystal {
        pump_um: f64,
        period_um: f64,
        length_um: f64,
    },
    PumpLaser {
        tuning: PumpTuningModel,
        period_um: f64,
        length_um: f64,
        crystal_temperature_c: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemperatureScan {
    pub kind: ScanKind,
    /// Crystal or laser temperature of each row.
    pub temperatures_c: Vec<f64>,
    pub pump_um: Vec<f64>,
    pub wavelengths_um: Vec<f64>,
    pub rows: Vec<SpectrumGrid>,
}

fn check_temperatures(temperatures: &[f64]) -> Result<()> {
    if temperatures.is_empty() {
        return Err(invalid("temperature list is empty"));
    }
    let (lo, hi) = SCAN_TEMPERATURE_LIMITS_C;
    if temperatures.iter().any(|t| !(*t >= lo && *t <= hi)) {
        return Err(invalid(format!("scan temperatures must lie within [{lo}, {hi}] C")));
    }
    let increasing = temperatures.windows(2).all(|w| w[1] > w[0]);
    let decreasing = temperatures.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(invalid("scan temperatures must be strictly monotone"));
    }
    Ok(())
}

/// One spectrum per crystal temperature. Rows are computed in parallel and
/// returned in temperature order.
pub fn crystal_temperature_scan(
    material: &MaterialModel,
    pump_um: f64,
    period_um: f64,
    length_um: f64,
    temperatures_c: &[f64],
    grid: &[f64],
) -> Result<TemperatureScan> {
    check_temperatures(temperatures_c)?;
    let rows = temperatures_c
        .par_iter()
        .map(|&t| spdc_spectrum(material, pump_um, period_um, length_um, t, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(TemperatureScan {
        kind: ScanKind::Crystal { pump_um, period_um, length_um },
        temperatures_c: temperatures_c.to_vec(),
        pump_um: vec![pump_um; temperatures_c.len()],
        wavelengths_um: grid.to_vec(),
        rows,
    })
}

/// One spectrum per pump-laser temperature at a fixed crystal temperature.
pub fn pump_temperature_scan(
    material: &MaterialModel,
    tuning: PumpTuningModel,
    period_um: f64,
    length_um: f64,
    crystal_temperature_c: f64,
    laser_temperatures_c: &[f64],
    grid: &[f64],
) -> Result<TemperatureScan> {
    check_temperatures(laser_temperatures_c)?;
    if !tuning.rate_nm_per_c.is_finite() {
        return Err(invalid("tuning rate must be finite"));
    }
    let pumps: Vec<f64> = laser_temperatures_c.iter().map(|&t| tuning.pump_wavelength_um(t)).collect();
    if pumps.iter().any(|p| !(*p > 0.0)) {
        return Err(invalid("tuning model gives a non-positive pump wavelength"));
    }
    let rows = pumps
        .par_iter()
        .map(|&p| spdc_spectrum(material, p, period_um, length_um, crystal_temperature_c, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(TemperatureScan {
        kind: ScanKind::PumpLaser { tuning, period_um, length_um, crystal_temperature_c },
        temperatures_c: laser_temperatures_c.to_vec(),
        pump_um: pumps,
        wavelengths_um: grid.to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub temperature_c: f64,
    pub signal_peak_um: f64,
    pub idler_peak_um: f64,
    pub separation_um: f64,
    /// FWHM of the signal branch.
    pub fwhm_um: Option<f64>,
    pub indistinguishable: bool,
}

/// Longest contiguous run of rows whose branch separation is below the
/// single-branch FWHM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plateau {
    pub start_c: f64,
    pub end_c: f64,
    pub span_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InsensitivityReport {
    pub rows: Vec<ReportRow>,
    pub plateau: Option<Plateau>,
}

impl InsensitivityReport {
    pub fn plateau_span_c(&self) -> f64 {
        self.plateau.map_or(0.0, |p| p.span_c)
    }
}

pub fn insensitivity_report(scan: &TemperatureScan) -> Result<InsensitivityReport> {
    if !matches!(scan.kind, ScanKind::Crystal { .. }) {
        return Err(invalid("insensitivity report needs a crystal-temperature scan"));
    }
    if scan.wavelengths_um.len() < 3 {
        return Err(invalid("wavelength grid needs at least 3 samples"));
    }
    if scan.rows.len() != scan.temperatures_c.len() {
        return Err(Error::InvalidInput("scan rows do not match its temperatures".into()));
    }
    let rows: Vec<ReportRow> = scan
        .rows
        .iter()
        .zip(&scan.temperatures_c)
        .map(|(row, &t)| {
            let signal_peak_um = row.signal_peak_um();
            let idler_peak_um = row.idler_peak_um();
            let separation_um = (signal_peak_um - idler_peak_um).abs();
            let fwhm_um = fwhm(&row.wavelengths_um, &row.signal_branch);
            ReportRow {
                temperature_c: t,
                signal_peak_um,
                idler_peak_um,
                separation_um,
                fwhm_um,
                indistinguishable: fwhm_um.is_some_and(|w| separation_um < w),
            }
        })
        .collect();

    let mut plateau: Option<Plateau> = None;
    let mut start: Option<usize> = None;
    for (i, row) in rows.iter().enumerate() {
        if !row.indistinguishable {
            start = None;
            continue;
        }
        let s = *start.get_or_insert(i);
        let span_c = (row.temperature_c - rows[s].temperature_c).abs();
        if plateau.map_or(true, |p| span_c > p.span_c) {
            plateau = Some(Plateau { start_c: rows[s].temperature_c, end_c: row.temperature_c, span_c });
        }
    }
    Ok(InsensitivityReport { rows, plateau })
}
