//! Longitudinal phase between the orthogonally polarized pair photons and
//! its cancellation with a second birefringent crystal.
//!
//! Pairs are taken to be born at the centre of the poled crystal, so they
//! travel half its (thermally expanded) length before reaching the
//! compensator.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::materials::MaterialModel;
use crate::qpm::{idler_wavelength, solve_poling_period, TypeIIAxes};
use crate::roots::golden_section;
use crate::spectra::{default_grid, spdc_spectrum, SpectrumGrid};

/// Compensator lengths searched, µm.
pub const COMPENSATOR_SEARCH_UM: (f64, f64) = (0.0, 20_000.0);
/// Spectral weight (fraction of the peak) bounding the default band.
pub const DEFAULT_BAND_FRACTION: f64 = 0.1;

const COARSE_STEP_UM: f64 = 10.0;
const REFINE_TOL_UM: f64 = 1e-6;
const BAND_SAMPLES: usize = 401;

pub const ORDINARY_AXIS: &str = "o";
pub const EXTRAORDINARY_AXIS: &str = "e";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    /// Compensator extraordinary axis perpendicular to the poled crystal's
    /// extraordinary axis.
    Crossed,
    Parallel,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::Crossed => -1.0,
            Orientation::Parallel => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompensatorSpec<'a> {
    pub material: &'a MaterialModel,
    pub length_um: f64,
    pub orientation: Orientation,
}

impl<'a> CompensatorSpec<'a> {
    pub fn crossed(material: &'a MaterialModel, length_um: f64) -> Result<Self> {
        if !(length_um >= 0.0) || !length_um.is_finite() {
            return Err(invalid(format!("compensator length {length_um} um must be >= 0")));
        }
        material.has_axes(&[ORDINARY_AXIS, EXTRAORDINARY_AXIS])?;
        Ok(Self { material, length_um, orientation: Orientation::Crossed })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseProfile {
    pub wavelengths_um: Vec<f64>,
    /// Degrees, zero at `reference_um`.
    pub phase_deg: Vec<f64>,
    pub reference_um: f64,
}

impl PhaseProfile {
    /// Linear interpolation, clamped to the end values outside the samples.
    pub fn at(&self, wavelength_um: f64) -> f64 {
        let x = &self.wavelengths_um;
        let y = &self.phase_deg;
        if wavelength_um <= x[0] {
            return y[0];
        }
        if wavelength_um >= x[x.len() - 1] {
            return y[y.len() - 1];
        }
        let j = x.partition_point(|v| *v <= wavelength_um);
        let (x0, x1, y0, y1) = (x[j - 1], x[j], y[j - 1], y[j]);
        y0 + (y1 - y0) * (wavelength_um - x0) / (x1 - x0)
    }

    pub fn max_abs_deg(&self) -> f64 {
        self.phase_deg.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Phase split into the poled-crystal term and the per-µm compensator term,
/// both in degrees and unreferenced.
struct PhaseTerms {
    crystal: f64,
    compensator_per_um: f64,
}

fn phase_terms(
    ktp: &MaterialModel,
    comp: Option<(&MaterialModel, Orientation)>,
    signal_um: f64,
    pump_um: f64,
    temperature_c: f64,
    length_um: f64,
) -> Result<PhaseTerms> {
    let axes = TypeIIAxes::default();
    let idler_um = idler_wavelength(pump_um, signal_um)?;
    let half_length = 0.5 * ktp.expanded_length(length_um, temperature_c);
    let ns = ktp.refractive_index(&axes.signal, signal_um, temperature_c)?;
    let ni = ktp.refractive_index(&axes.idler, idler_um, temperature_c)?;
    let crystal = 360.0 * half_length * (ns / signal_um - ni / idler_um);
    let compensator_per_um = match comp {
        None => 0.0,
        Some((m, orientation)) => {
            let t = m.reference_temperature_c();
            let no = m.refractive_index(ORDINARY_AXIS, signal_um, t)?;
            let ne = m.refractive_index(EXTRAORDINARY_AXIS, idler_um, t)?;
            360.0 * orientation.sign() * (no / signal_um - ne / idler_um)
        }
    };
    Ok(PhaseTerms { crystal, compensator_per_um })
}

/// Relative phase (degrees) of a pair with signal wavelength `signal_um`,
/// referenced to the degenerate pair at `2·pump_um`.
pub fn pair_phase(
    ktp: &MaterialModel,
    signal_um: f64,
    pump_um: f64,
    temperature_c: f64,
    length_um: f64,
    comp: Option<&CompensatorSpec<'_>>,
) -> Result<f64> {
    if !(length_um > 0.0) {
        return Err(invalid("crystal length must be positive"));
    }
    let comp_parts = comp.map(|c| (c.material, c.orientation));
    let comp_length = comp.map_or(0.0, |c| c.length_um);
    let at = phase_terms(ktp, comp_parts, signal_um, pump_um, temperature_c, length_um)?;
    let reference = phase_terms(ktp, comp_parts, 2.0 * pump_um, pump_um, temperature_c, length_um)?;
    Ok((at.crystal + comp_length * at.compensator_per_um)
        - (reference.crystal + comp_length * reference.compensator_per_um))
}

pub fn phase_profile(
    ktp: &MaterialModel,
    wavelengths_um: &[f64],
    pump_um: f64,
    temperature_c: f64,
    length_um: f64,
    comp: Option<&CompensatorSpec<'_>>,
) -> Result<PhaseProfile> {
    if wavelengths_um.is_empty() || wavelengths_um.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("phase profile wavelengths must be non-empty and increasing"));
    }
    let phase_deg = wavelengths_um
        .iter()
        .map(|&l| pair_phase(ktp, l, pump_um, temperature_c, length_um, comp))
        .collect::<Result<_>>()?;
    Ok(PhaseProfile {
        wavelengths_um: wavelengths_um.to_vec(),
        phase_deg,
        reference_um: 2.0 * pump_um,
    })
}

/// Wavelength interval where the total spectrum is at least `fraction` of its
/// peak.
pub fn spectral_band(spectrum: &SpectrumGrid, fraction: f64) -> Result<(f64, f64)> {
    let peak = spectrum.total.iter().fold(0.0f64, |m, v| m.max(*v));
    if !(peak > 0.0) {
        return Err(invalid("spectrum is zero everywhere"));
    }
    let threshold = fraction * peak;
    let inside = |i: &usize| spectrum.total[*i] >= threshold;
    let first = (0..spectrum.len()).find(inside).expect("peak is above threshold");
    let last = (0..spectrum.len()).rev().find(inside).expect("peak is above threshold");
    Ok((spectrum.wavelengths_um[first], spectrum.wavelengths_um[last]))
}

/// Spectrum of a crystal poled for degeneracy at `2·pump_um` and
/// `temperature_c`, on the default grid.
pub fn degenerate_spectrum(ktp: &MaterialModel, pump_um: f64, temperature_c: f64, length_um: f64) -> Result<SpectrumGrid> {
    let period = solve_poling_period(ktp, 2.0 * pump_um, temperature_c)?;
    spdc_spectrum(ktp, pump_um, period, length_um, temperature_c, &default_grid(pump_um))
}

/// Default optimization band: 10 % of peak of [`degenerate_spectrum`].
pub fn default_band(ktp: &MaterialModel, pump_um: f64, temperature_c: f64, length_um: f64) -> Result<(f64, f64)> {
    spectral_band(&degenerate_spectrum(ktp, pump_um, temperature_c, length_um)?, DEFAULT_BAND_FRACTION)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompensatorOptimum {
    pub length_um: f64,
    /// `max |φ|` over the band at the optimum, degrees.
    pub residual_deg: f64,
    /// `max |φ|` over the band without a compensator, degrees.
    pub uncompensated_deg: f64,
    pub band_um: (f64, f64),
}

/// Band-sampled phase as `crystal + L_c·per_um`, so the minimax objective is
/// cheap to evaluate for any compensator length.
pub struct BandPhase {
    crystal: Vec<f64>,
    per_um: Vec<f64>,
}

impl BandPhase {
    pub fn new(
        ktp: &MaterialModel,
        comp_material: &MaterialModel,
        orientation: Orientation,
        pump_um: f64,
        temperature_c: f64,
        length_um: f64,
        band_um: (f64, f64),
    ) -> Result<Self> {
        let (lo, hi) = band_um;
        let degenerate = 2.0 * pump_um;
        if !(lo < hi) {
            return Err(invalid(format!("band [{lo}, {hi}] um is degenerate")));
        }
        if !(lo <= degenerate && degenerate <= hi) {
            return Err(invalid(format!("band [{lo}, {hi}] um must contain {degenerate} um")));
        }
        if !(length_um > 0.0) {
            return Err(invalid("crystal length must be positive"));
        }
        comp_material.has_axes(&[ORDINARY_AXIS, EXTRAORDINARY_AXIS])?;
        let comp = Some((comp_material, orientation));
        let reference = phase_terms(ktp, comp, degenerate, pump_um, temperature_c, length_um)?;
        let mut samples: Vec<f64> = (0..BAND_SAMPLES)
            .map(|i| lo + (hi - lo) * i as f64 / (BAND_SAMPLES - 1) as f64)
            .collect();
        samples.push(degenerate);
        let mut crystal = Vec::with_capacity(samples.len());
        let mut per_um = Vec::with_capacity(samples.len());
        for l in samples {
            let t = phase_terms(ktp, comp, l, pump_um, temperature_c, length_um)?;
            crystal.push(t.crystal - reference.crystal);
            per_um.push(t.compensator_per_um - reference.compensator_per_um);
        }
        Ok(Self { crystal, per_um })
    }

    /// `max |φ|` over the band for compensator length `length_um`.
    pub fn max_abs(&self, length_um: f64) -> f64 {
        self.crystal
            .iter()
            .zip(&self.per_um)
            .fold(0.0, |m, (a, b)| m.max((a + length_um * b).abs()))
    }
}

/// Compensator length minimizing the band maximum of `|φ|`: a coarse scan
/// over [`COMPENSATOR_SEARCH_UM`] brackets the optimum, golden-section search
/// refines it.
pub fn optimize_compensator_length(
    ktp: &MaterialModel,
    comp_material: &MaterialModel,
    pump_um: f64,
    temperature_c: f64,
    length_um: f64,
    band_um: (f64, f64),
) -> Result<CompensatorOptimum> {
    let band = BandPhase::new(
        ktp,
        comp_material,
        Orientation::Crossed,
        pump_um,
        temperature_c,
        length_um,
        band_um,
    )?;
    let (lo, hi) = COMPENSATOR_SEARCH_UM;
    let steps = ((hi - lo) / COARSE_STEP_UM).round() as usize;
    let coarse = (0..=steps)
        .map(|i| lo + COARSE_STEP_UM * i as f64)
        .map(|l| (l, band.max_abs(l)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty scan");
    let bracket = ((coarse.0 - COARSE_STEP_UM).max(lo), (coarse.0 + COARSE_STEP_UM).min(hi));
    let (length, residual) = golden_section(|l| band.max_abs(l), bracket.0, bracket.1, REFINE_TOL_UM);
    let (length_um_opt, residual_deg) = if residual <= coarse.1 { (length, residual) } else { coarse };
    Ok(CompensatorOptimum {
        length_um: length_um_opt,
        residual_deg,
        uncompensated_deg: band.max_abs(0.0),
        band_um,
    })
}
