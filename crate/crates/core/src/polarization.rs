//! Polarization correlations of the post-selected `Ψ⁺ = (|H₁V₂⟩ + |V₁H₂⟩)/√2`
//! state.

use serde::Serialize;

use crate::compensation::PhaseProfile;
use crate::error::{invalid, Result};
use crate::spectra::SpectrumGrid;

/// Fringe visibilities of a (possibly imperfect) `Ψ⁺` source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoPhotonState {
    /// H/V basis.
    pub visibility_production: f64,
    /// Idler analyzer at +45°.
    pub visibility_diag_plus: f64,
    /// Idler analyzer at −45°.
    pub visibility_diag_minus: f64,
    /// Coincidence rate averaged over the signal analyzer angle.
    pub mean_rate: f64,
}

impl TwoPhotonState {
    pub fn new(v_hv: f64, v_plus: f64, v_minus: f64, mean_rate: f64) -> Result<Self> {
        for v in [v_hv, v_plus, v_minus] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("visibility {v} must lie in [0, 1]")));
            }
        }
        if !(mean_rate >= 0.0) || !mean_rate.is_finite() {
            return Err(invalid("mean rate must be finite and non-negative"));
        }
        Ok(Self {
            visibility_production: v_hv,
            visibility_diag_plus: v_plus,
            visibility_diag_minus: v_minus,
            mean_rate,
        })
    }

    pub fn ideal(mean_rate: f64) -> Self {
        Self {
            visibility_production: 1.0,
            visibility_diag_plus: 1.0,
            visibility_diag_minus: 1.0,
            mean_rate,
        }
    }

    /// Visibility seen with the idler analyzer at `idler_angle_deg`. H/V and
    /// the diagonals are the measured bases; in between the two are mixed
    /// with weights `cos²2α` and `sin²2α`.
    pub fn visibility_at(&self, idler_angle_deg: f64) -> f64 {
        let two_alpha = (2.0 * idler_angle_deg).to_radians();
        let (s, c) = two_alpha.sin_cos();
        let diagonal = if s >= 0.0 { self.visibility_diag_plus } else { self.visibility_diag_minus };
        self.visibility_production * c * c + diagonal * s * s
    }
}

/// Coincidence rate `R·½·[1 − V·cos 2(θ + α)]` versus the signal analyzer
/// angle θ for idler analyzer angle α, degrees.
pub fn coincidence_curve(state: &TwoPhotonState, idler_angle_deg: f64, signal_angles_deg: &[f64]) -> Vec<f64> {
    let v = state.visibility_at(idler_angle_deg);
    signal_angles_deg
        .iter()
        .map(|theta| {
            let arg = (2.0 * (theta + idler_angle_deg)).to_radians();
            state.mean_rate * 0.5 * (1.0 - v * arg.cos())
        })
        .collect()
}

/// Fringe visibility after subtracting the accidental coincidences measured
/// at the maximum and minimum.
pub fn visibility_from_extremes(rate_max: f64, rate_min: f64, accidental_max: f64, accidental_min: f64) -> Result<f64> {
    if !(rate_max >= rate_min && rate_min >= 0.0) {
        return Err(invalid("rates must satisfy max >= min >= 0"));
    }
    if !(accidental_max >= 0.0 && accidental_max <= rate_max && accidental_min >= 0.0 && accidental_min <= rate_min) {
        return Err(invalid("accidentals must be non-negative and not exceed their rates"));
    }
    let hi = rate_max - accidental_max;
    let lo = rate_min - accidental_min;
    let denom = hi + lo;
    if denom == 0.0 {
        return Err(invalid("no coincidences left after accidental subtraction"));
    }
    Ok((hi - lo) / denom)
}

/// Diagonal-basis visibility left after averaging the pair phase over the
/// spectrum: `|Σ S·e^{iφ}| / Σ S`, weighted by the total spectrum. The phase
/// profile is resampled onto the spectrum grid by linear interpolation.
pub fn visibility_from_phase(spectrum: &SpectrumGrid, phase: &PhaseProfile) -> Result<f64> {
    if phase.wavelengths_um.is_empty() || phase.wavelengths_um.len() != phase.phase_deg.len() {
        return Err(invalid("phase profile is empty or malformed"));
    }
    let (mut re, mut im, mut weight) = (0.0, 0.0, 0.0);
    for (&l, &s) in spectrum.wavelengths_um.iter().zip(&spectrum.total) {
        let (sin, cos) = phase.at(l).to_radians().sin_cos();
        re += s * cos;
        im += s * sin;
        weight += s;
    }
    if !(weight > 0.0) {
        return Err(invalid("spectrum is zero everywhere"));
    }
    Ok((re.hypot(im) / weight).min(1.0))
}

/// `F = (1 + V_HV + V₊₄₅ + V₋₄₅) / 4`.
pub fn fidelity_from_visibilities(v_hv: f64, v_plus45: f64, v_minus45: f64) -> f64 {
    (1.0 + v_hv + v_plus45 + v_minus45) / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilitySet {
    pub v_hv: f64,
    pub v_plus45: f64,
    pub v_minus45: f64,
    pub fidelity: f64,
}

impl VisibilitySet {
    pub fn new(v_hv: f64, v_plus45: f64, v_minus45: f64) -> Result<Self> {
        for v in [v_hv, v_plus45, v_minus45] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("visibility {v} must lie in [0, 1]")));
            }
        }
        Ok(Self { v_hv, v_plus45, v_minus45, fidelity: fidelity_from_visibilities(v_hv, v_plus45, v_minus45) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_curves() {
        let state = TwoPhotonState::ideal(2.0);
        let r = coincidence_curve(&state, 0.0, &[0.0, 90.0]);
        assert!(r[0].abs() < 1e-15);
        assert!((r[1] - 2.0).abs() < 1e-15);
        let r = coincidence_curve(&state, 45.0, &[45.0, -45.0]);
        assert!((r[0] - 2.0).abs() < 1e-15);
        assert!(r[1].abs() < 1e-15);
    }

    #[test]
    fn zero_visibility_is_flat() {
        let state = TwoPhotonState::new(0.0, 0.0, 0.0, 3.0).unwrap();
        let angles: Vec<f64> = (0..36).map(|i| 10.0 * i as f64).collect();
        assert!(coincidence_curve(&state, 45.0, &angles).iter().all(|r| (r - 1.5).abs() < 1e-15));
    }

    #[test]
    fn extremes() {
        assert_eq!(visibility_from_extremes(100.0, 0.0, 0.0, 0.0).unwrap(), 1.0);
        assert!((visibility_from_extremes(100.0, 50.0, 0.0, 0.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        // (102 − 2 − (2 − 2)) / (102 − 2 + 2 − 2) = 1
        assert_eq!(visibility_from_extremes(102.0, 2.0, 2.0, 2.0).unwrap(), 1.0);
        assert!(visibility_from_extremes(2.0, 2.0, 2.0, 2.0).is_err());
        assert!(visibility_from_extremes(1.0, 2.0, 0.0, 0.0).is_err());
        assert!(visibility_from_extremes(10.0, 2.0, 0.0, 3.0).is_err());
    }

    #[test]
    fn fidelity_examples() {
        assert!((fidelity_from_visibilities(1.0, 0.954, 0.974) - 0.982).abs() < 1e-12);
        assert_eq!(fidelity_from_visibilities(1.0, 1.0, 1.0), 1.0);
        assert_eq!(fidelity_from_visibilities(0.0, 0.0, 0.0), 0.25);
        assert!(VisibilitySet::new(1.1, 0.0, 0.0).is_err());
    }

    fn flat_spectrum(n: usize) -> SpectrumGrid {
        let x = crate::spectra::linspace(1.3, 1.35, n);
        SpectrumGrid::from_branches(x, vec![1.0; n], vec![1.0; n]).unwrap()
    }

    #[test]
    fn phase_visibility() {
        let s = flat_spectrum(100);
        let zero = PhaseProfile { wavelengths_um: s.wavelengths_um.clone(), phase_deg: vec![0.0; 100], reference_um: 1.325 };
        assert_eq!(visibility_from_phase(&s, &zero).unwrap(), 1.0);

        let half: Vec<f64> = (0..100).map(|i| if i < 50 { 180.0 } else { 0.0 }).collect();
        let split = PhaseProfile { wavelengths_um: s.wavelengths_um.clone(), phase_deg: half, reference_um: 1.325 };
        assert!(visibility_from_phase(&s, &split).unwrap() < 1e-12);

        let dark = SpectrumGrid::from_branches(s.wavelengths_um.clone(), vec![0.0; 100], vec![0.0; 100]).unwrap();
        assert!(visibility_from_phase(&dark, &zero).is_err());
    }
}
