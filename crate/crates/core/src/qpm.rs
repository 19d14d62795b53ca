//! Collinear Type II quasi-phasematching.
//!
//! The mismatch of a pump → signal + idler process in a poled crystal is
//!
//! ```text
//! Δk = k_p − k_s − k_i − σ·2π/Λ(T)
//! ```
//!
//! where `σ = ±1` selects which first-order Fourier component of the domain
//! grating is used. A square poling pattern carries both, so the physical
//! mismatch is the one whose grating component lies nearer to the unpoled
//! mismatch `k_p − k_s − k_i`. For x-cut KTP with a Y pump this is `σ = +1`
//! below roughly 1.1 µm degenerate emission and `σ = −1` above it.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::materials::MaterialModel;
use crate::roots::bisect;

/// Lower/upper poling period searched by [`solve_poling_period`], µm.
pub const PERIOD_SEARCH_UM: (f64, f64) = (1.0, 500.0);
/// Roots closer than this are reported as a single (degenerate) pair, µm.
pub const MERGE_DISTANCE_UM: f64 = 1e-4;

const PERIOD_TOL_UM: f64 = 1e-10;
const WAVELENGTH_TOL_UM: f64 = 1e-12;
const SIGNAL_SCAN_STEP_UM: f64 = 1e-4;

/// Polarization axes of the three fields. Type II default is a Y pump, Y
/// signal and Z idler.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeIIAxes {
    pub pump: String,
    pub signal: String,
    pub idler: String,
}

impl Default for TypeIIAxes {
    fn default() -> Self {
        Self { pump: "Y".into(), signal: "Y".into(), idler: "Z".into() }
    }
}

impl TypeIIAxes {
    /// Signal and idler axes exchanged.
    pub fn swapped(&self) -> Self {
        Self { pump: self.pump.clone(), signal: self.idler.clone(), idler: self.signal.clone() }
    }
}

/// Sign of the grating vector used to close the mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GratingOrder {
    /// `Δk = k_p − k_s − k_i − 2π/Λ`
    Forward,
    /// `Δk = k_p − k_s − k_i + 2π/Λ`
    Backward,
}

impl GratingOrder {
    pub fn sign(self) -> f64 {
        match self {
            GratingOrder::Forward => 1.0,
            GratingOrder::Backward => -1.0,
        }
    }

    /// The order whose grating component lies nearer to `unpoled`.
    pub fn nearest(unpoled: f64) -> Self {
        if unpoled < 0.0 {
            GratingOrder::Backward
        } else {
            GratingOrder::Forward
        }
    }
}

/// Phase mismatch in rad/µm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct PhaseMismatch(pub f64);

impl PhaseMismatch {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `1/(1/λ_p − 1/λ_s)`: the idler wavelength allowed by energy conservation.
pub fn idler_wavelength(pump_um: f64, signal_um: f64) -> Result<f64> {
    if !(pump_um > 0.0) || !signal_um.is_finite() {
        return Err(invalid(format!("pump {pump_um} um and signal {signal_um} um must be positive")));
    }
    let inv = 1.0 / pump_um - 1.0 / signal_um;
    if !(inv > 0.0) {
        return Err(invalid(format!(
            "signal {signal_um} um must be longer than pump {pump_um} um"
        )));
    }
    let idler = 1.0 / inv;
    if !idler.is_finite() {
        return Err(invalid("idler wavelength is not finite"));
    }
    Ok(idler)
}

/// `sinc²(Δk·L/2)`, normalized to 1 at perfect phasematching.
pub fn spdc_intensity(delta_k: f64, length_um: f64) -> f64 {
    let x = 0.5 * delta_k * length_um;
    if x == 0.0 {
        1.0
    } else {
        let s = x.sin() / x;
        s * s
    }
}

/// A fully specified collinear Type II process.
///
/// `period_um` and `length_um` are stated at the material's expansion
/// reference temperature; they are expanded to `temperature_c` whenever the
/// mismatch is evaluated.
#[derive(Debug, Clone)]
pub struct QpmProcess<'a> {
    pub material: &'a MaterialModel,
    pub axes: TypeIIAxes,
    pub pump_um: f64,
    pub signal_um: f64,
    pub idler_um: f64,
    pub period_um: f64,
    pub length_um: f64,
    pub temperature_c: f64,
}

impl<'a> QpmProcess<'a> {
    /// Process with the idler fixed by energy conservation and default axes.
    pub fn new(
        material: &'a MaterialModel,
        pump_um: f64,
        signal_um: f64,
        period_um: f64,
        length_um: f64,
        temperature_c: f64,
    ) -> Result<Self> {
        let idler_um = idler_wavelength(pump_um, signal_um)?;
        Self::with_triple(
            material,
            TypeIIAxes::default(),
            [pump_um, signal_um, idler_um],
            period_um,
            length_um,
            temperature_c,
        )
    }

    /// Process from an explicit wavelength triple `[pump, signal, idler]`.
    ///
    /// The signal is the photon on `axes.signal`; it may be longer or shorter
    /// than the idler.
    pub fn with_triple(
        material: &'a MaterialModel,
        axes: TypeIIAxes,
        [pump_um, signal_um, idler_um]: [f64; 3],
        period_um: f64,
        length_um: f64,
        temperature_c: f64,
    ) -> Result<Self> {
        material.has_axes(&[&axes.pump, &axes.signal, &axes.idler])?;
        if !(period_um > 0.0) {
            return Err(invalid(format!("poling period {period_um} um must be positive")));
        }
        if !(length_um > 0.0) || !length_um.is_finite() {
            return Err(invalid(format!("crystal length {length_um} um must be positive")));
        }
        if !(pump_um > 0.0 && signal_um > pump_um && idler_um > pump_um) {
            return Err(invalid("signal and idler must be longer than the pump"));
        }
        if !temperature_c.is_finite() {
            return Err(invalid("temperature must be finite"));
        }
        Ok(Self { material, axes, pump_um, signal_um, idler_um, period_um, length_um, temperature_c })
    }

    /// `|1/λ_p − 1/λ_s − 1/λ_i|` in µm⁻¹.
    pub fn energy_residual(&self) -> f64 {
        (1.0 / self.pump_um - 1.0 / self.signal_um - 1.0 / self.idler_um).abs()
    }

    /// `k_p − k_s − k_i` without the grating term.
    pub fn unpoled_mismatch(&self) -> Result<f64> {
        let m = self.material;
        let t = self.temperature_c;
        let kp = m.wavevector(&self.axes.pump, self.pump_um, t)?;
        let ks = m.wavevector(&self.axes.signal, self.signal_um, t)?;
        let ki = m.wavevector(&self.axes.idler, self.idler_um, t)?;
        Ok(kp - ks - ki)
    }

    /// `2π/Λ(T)` with the period thermally expanded.
    pub fn grating_wavevector(&self) -> f64 {
        2.0 * PI / self.material.expanded_length(self.period_um, self.temperature_c)
    }

    /// Crystal length at the process temperature.
    pub fn expanded_length(&self) -> f64 {
        self.material.expanded_length(self.length_um, self.temperature_c)
    }

    pub fn delta_k_for(&self, order: GratingOrder) -> Result<PhaseMismatch> {
        Ok(PhaseMismatch(self.unpoled_mismatch()? - order.sign() * self.grating_wavevector()))
    }

    /// Mismatch using the nearer grating component.
    pub fn delta_k(&self) -> Result<PhaseMismatch> {
        let unpoled = self.unpoled_mismatch()?;
        let order = GratingOrder::nearest(unpoled);
        Ok(PhaseMismatch(unpoled - order.sign() * self.grating_wavevector()))
    }

    /// `sinc²(Δk·L/2)` with the expanded crystal length.
    pub fn intensity(&self) -> Result<f64> {
        Ok(spdc_intensity(self.delta_k()?.value(), self.expanded_length()))
    }
}

/// `Δk` for an explicit configuration. Convenience wrapper over
/// [`QpmProcess`].
pub fn delta_k(process: &QpmProcess<'_>) -> Result<PhaseMismatch> {
    process.delta_k()
}

/// Poling period (at the expansion reference temperature) phasematching the
/// degenerate triple `(λ/2, λ, λ)` at `temperature_c`.
pub fn solve_poling_period(material: &MaterialModel, degenerate_um: f64, temperature_c: f64) -> Result<f64> {
    solve_poling_period_with_axes(material, &TypeIIAxes::default(), degenerate_um, temperature_c)
}

pub fn solve_poling_period_with_axes(
    material: &MaterialModel,
    axes: &TypeIIAxes,
    degenerate_um: f64,
    temperature_c: f64,
) -> Result<f64> {
    if !(degenerate_um > 0.0) {
        return Err(invalid("degenerate wavelength must be positive"));
    }
    let pump = 0.5 * degenerate_um;
    let triple = [pump, degenerate_um, degenerate_um];
    let probe = |period: f64| {
        QpmProcess::with_triple(material, axes.clone(), triple, period, 1.0, temperature_c)
    };
    let reference = probe(1.0)?;
    let unpoled = reference.unpoled_mismatch()?;
    let order = GratingOrder::nearest(unpoled);
    // |unpoled| − 2π/Λ(T) increases monotonically with Λ.
    let residual = |period: f64| -> f64 {
        let grating = 2.0 * PI / material.expanded_length(period, temperature_c);
        unpoled.abs() - grating
    };
    let (lo, hi) = PERIOD_SEARCH_UM;
    let period = bisect(residual, lo, hi, PERIOD_TOL_UM).ok_or_else(|| {
        Error::NoRoot(format!(
            "no poling period in [{lo}, {hi}] um phasematches {degenerate_um} um at {temperature_c} C"
        ))
    })?;
    let dk = probe(period)?.delta_k_for(order)?;
    debug_assert!(dk.value().abs() < 1e-9, "residual {dk:?}");
    Ok(period)
}

/// A phasematched signal/idler pair. The signal is the photon on the signal
/// axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalIdlerPair {
    pub signal_um: f64,
    pub idler_um: f64,
    pub order: GratingOrder,
    pub delta_k: f64,
}

impl SignalIdlerPair {
    pub fn center_um(&self) -> f64 {
        0.5 * (self.signal_um + self.idler_um)
    }

    pub fn is_degenerate(&self) -> bool {
        (self.signal_um - self.idler_um).abs() < MERGE_DISTANCE_UM
    }
}

/// Signal wavelengths for which `λ_s` and its energy-conserving partner are
/// inside the signal and idler axis ranges, intersected with
/// `[1.5·λ_p, 4·λ_p]`.
pub fn signal_search_window(material: &MaterialModel, axes: &TypeIIAxes, pump_um: f64) -> Result<(f64, f64)> {
    let signal_range = material.axis(&axes.signal)?.sellmeier.range_um;
    let idler_range = material.axis(&axes.idler)?.sellmeier.range_um;
    let mut lo = (1.5 * pump_um).max(signal_range.0);
    let mut hi = (4.0 * pump_um).min(signal_range.1);
    // λ_i decreases as λ_s grows.
    let inv_hi_idler = 1.0 / pump_um - 1.0 / idler_range.1;
    if inv_hi_idler > 0.0 {
        lo = lo.max(1.0 / inv_hi_idler);
    }
    let inv_lo_idler = 1.0 / pump_um - 1.0 / idler_range.0;
    if inv_lo_idler > 0.0 {
        hi = hi.min(1.0 / inv_lo_idler);
    }
    if !(lo < hi) {
        return Err(invalid(format!("no valid signal window for pump {pump_um} um")));
    }
    Ok((lo, hi))
}

/// All signal wavelengths phasematched by a crystal of period `period_um`,
/// sorted by signal wavelength.
pub fn solve_phasematched_signal(
    material: &MaterialModel,
    pump_um: f64,
    period_um: f64,
    length_um: f64,
    temperature_c: f64,
) -> Result<Vec<SignalIdlerPair>> {
    solve_phasematched_signal_with_axes(
        material,
        &TypeIIAxes::default(),
        pump_um,
        period_um,
        length_um,
        temperature_c,
    )
}

pub fn solve_phasematched_signal_with_axes(
    material: &MaterialModel,
    axes: &TypeIIAxes,
    pump_um: f64,
    period_um: f64,
    length_um: f64,
    temperature_c: f64,
) -> Result<Vec<SignalIdlerPair>> {
    let (lo, hi) = signal_search_window(material, axes, pump_um)?;
    let at = |signal: f64| {
        let idler = idler_wavelength(pump_um, signal)?;
        QpmProcess::with_triple(
            material,
            axes.clone(),
            [pump_um, signal, idler],
            period_um,
            length_um,
            temperature_c,
        )
    };
    // Validate once so later evaluations cannot fail on inputs.
    at(lo)?.unpoled_mismatch()?;
    let grating = at(lo)?.grating_wavevector();

    let steps = ((hi - lo) / SIGNAL_SCAN_STEP_UM).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| if i == steps { hi } else { lo + (hi - lo) * i as f64 / steps as f64 })
        .collect();
    let unpoled: Vec<f64> = grid
        .iter()
        .map(|&s| at(s).and_then(|p| p.unpoled_mismatch()))
        .collect::<Result<_>>()?;

    let mut roots: Vec<SignalIdlerPair> = Vec::new();
    for order in [GratingOrder::Forward, GratingOrder::Backward] {
        let offset = order.sign() * grating;
        let f = |s: f64| at(s).and_then(|p| p.unpoled_mismatch()).map(|u| u - offset).unwrap_or(f64::NAN);
        for i in 0..steps {
            let (fa, fb) = (unpoled[i] - offset, unpoled[i + 1] - offset);
            let crosses = fa == 0.0 || ((fa < 0.0) != (fb < 0.0) && fb != 0.0);
            if !crosses {
                continue;
            }
            let Some(signal) = bisect(f, grid[i], grid[i + 1], WAVELENGTH_TOL_UM) else { continue };
            let process = at(signal)?;
            roots.push(SignalIdlerPair {
                signal_um: signal,
                idler_um: process.idler_um,
                order,
                delta_k: process.delta_k_for(order)?.value(),
            });
        }
        // A root sitting exactly on the last grid point.
        if unpoled[steps] - offset == 0.0 {
            let process = at(hi)?;
            roots.push(SignalIdlerPair { signal_um: hi, idler_um: process.idler_um, order, delta_k: 0.0 });
        }
    }
    roots.sort_by(|a, b| a.signal_um.total_cmp(&b.signal_um));

    let mut merged: Vec<SignalIdlerPair> = Vec::with_capacity(roots.len());
    for root in roots {
        match merged.last_mut() {
            Some(last) if (root.signal_um - last.signal_um).abs() < MERGE_DISTANCE_UM => {
                if root.delta_k.abs() < last.delta_k.abs() {
                    *last = root;
                }
            }
            _ => merged.push(root),
        }
    }
    if merged.is_empty() {
        return Err(Error::NoRoot(format!(
            "no phasematched signal in [{lo:.6}, {hi:.6}] um for pump {pump_um} um, period {period_um} um"
        )));
    }
    Ok(merged)
}
