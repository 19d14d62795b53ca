//! `qpm-lab` command line.
//!
//! Every subcommand produces one or more tables. CSV output starts each table
//! with a `#`-prefixed header naming the columns and units; numbers are
//! printed with 9 significant digits. JSON output maps table names to arrays
//! of row objects, with numbers rounded to 9 significant digits.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::compensation::{
    default_band, degenerate_spectrum, optimize_compensator_length, phase_profile, CompensatorSpec,
};
use crate::error::{Error, Result};
use crate::materials::MaterialModel;
use crate::polarization::{
    coincidence_curve, fidelity_from_visibilities, visibility_from_extremes, visibility_from_phase,
    TwoPhotonState,
};
use crate::qpm::{solve_phasematched_signal, solve_poling_period, GratingOrder, QpmProcess};
use crate::spectra::{
    crystal_temperature_scan, insensitivity_report, linspace, pump_temperature_scan, spdc_spectrum,
    temperature_steps, PumpTuningModel, TemperatureScan,
};

/// Environment variable naming a directory of `<name>.mat` material files.
pub const DATA_DIR_ENV: &str = "QPM_LAB_DATA_DIR";

/// Library operations reached by each subcommand.
pub const DISPATCH: &[(&str, &[&str])] = &[
    ("index", &["load_material", "refractive_index", "wavevector"]),
    ("period", &["load_material", "solve_poling_period", "expanded_length", "delta_k"]),
    (
        "spectrum",
        &[
            "spdc_spectrum",
            "idler_wavelength",
            "delta_k",
            "spdc_intensity",
            "solve_phasematched_signal",
            "solve_poling_period",
        ],
    ),
    ("scan-crystal", &["crystal_temperature_scan", "insensitivity_report", "solve_poling_period"]),
    ("scan-pump", &["pump_temperature_scan"]),
    ("compensate", &["pair_phase", "optimize_compensator_length", "spdc_spectrum"]),
    (
        "visibility",
        &["coincidence_curve", "visibility_from_extremes", "visibility_from_phase", "pair_phase"],
    ),
    ("fidelity", &["fidelity_from_visibilities"]),
];

#[derive(Debug, Parser)]
#[command(name = "qpm-lab", version, about = "Type II quasi-phasematched SPDC design toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Refractive index and wavevector table.
    Index(IndexArgs),
    /// Poling period for degenerate emission.
    Period(PeriodArgs),
    /// Emission spectrum or phasematched signal/idler pairs.
    Spectrum(SpectrumArgs),
    /// Spectra versus crystal temperature, or the insensitivity report.
    ScanCrystal(ScanCrystalArgs),
    /// Spectra versus pump-laser temperature.
    ScanPump(ScanPumpArgs),
    /// Optimal compensator length and the pair phase profile.
    Compensate(CompensateArgs),
    /// Coincidence curves and visibilities.
    Visibility(VisibilityArgs),
    /// Bell-state fidelity from three fringe visibilities.
    Fidelity(FidelityArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct IndexArgs {
    #[arg(long, default_value = "ktp")]
    material: String,
    /// Axis label; all axes when omitted.
    #[arg(long)]
    axis: Option<String>,
    #[arg(long, default_value_t = 1000.0)]
    from_nm: f64,
    #[arg(long, default_value_t = 1600.0)]
    to_nm: f64,
    #[arg(long, default_value_t = 10.0)]
    step_nm: f64,
    #[arg(long, default_value_t = 25.0)]
    temp_c: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct PeriodArgs {
    #[arg(long, default_value = "ktp")]
    material: String,
    #[arg(long)]
    degenerate_nm: f64,
    #[arg(long, default_value_t = 60.0)]
    temp_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpectrumEmit {
    Spectrum,
    Roots,
}

/// Crystal period: given directly, or solved for degeneracy.
#[derive(Debug, Args)]
struct PeriodChoice {
    /// Poling period at the expansion reference temperature.
    #[arg(long, conflicts_with = "degenerate_nm")]
    period_um: Option<f64>,
    /// Solve the period for degenerate emission at this wavelength.
    #[arg(long)]
    degenerate_nm: Option<f64>,
    /// Temperature the period is designed for when solving.
    #[arg(long, default_value_t = 60.0)]
    design_temp_c: f64,
}

impl PeriodChoice {
    fn resolve(&self, material: &MaterialModel) -> Result<f64> {
        match (self.period_um, self.degenerate_nm) {
            (Some(p), _) => Ok(p),
            (None, Some(d)) => solve_poling_period(material, d * 1e-3, self.design_temp_c),
            (None, None) => Err(usage("one of --period-um or --degenerate-nm is required")),
        }
    }

    fn pump_or_half_degenerate(&self, pump_nm: Option<f64>) -> Result<f64> {
        pump_nm
            .or(self.degenerate_nm.map(|d| d / 2.0))
            .map(|p| p * 1e-3)
            .ok_or_else(|| usage("--pump-nm is required unless --degenerate-nm is given"))
    }
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Grid centre; twice the pump wavelength when omitted.
    #[arg(long)]
    center_nm: Option<f64>,
    /// Half width of the wavelength grid.
    #[arg(long, default_value_t = 60.0)]
    span_nm: f64,
    #[arg(long, default_value_t = 2048)]
    points: usize,
}

impl GridArgs {
    fn grid(&self, pump_um: f64) -> Result<Vec<f64>> {
        if self.points < 1 || !(self.span_nm > 0.0) {
            return Err(Error::InvalidInput("grid needs points >= 1 and span > 0".into()));
        }
        let center = self.center_nm.map_or(2.0 * pump_um, |c| c * 1e-3);
        let half = self.span_nm * 1e-3;
        Ok(linspace(center - half, center + half, self.points))
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct SpectrumArgs {
    #[arg(long, default_value = "ktp")]
    material: String,
    #[arg(long)]
    pump_nm: Option<f64>,
    #[command(flatten)]
    period: PeriodChoice,
    #[arg(long, default_value_t = 10.0)]
    length_mm: f64,
    #[arg(long, default_value_t = 25.0)]
    temp_c: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = SpectrumEmit::Spectrum)]
    emit: SpectrumEmit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScanEmit {
    Scan,
    Report,
}

#[derive(Debug, Args)]
struct ScanRange {
    #[arg(long, default_value_t = 20.0)]
    from_c: f64,
    #[arg(long, default_value_t = 110.0)]
    to_c: f64,
    #[arg(long, default_value_t = 1.0)]
    step_c: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct ScanCrystalArgs {
    #[arg(long, default_value = "ktp")]
    material: String,
    #[arg(long)]
    pump_nm: Option<f64>,
    #[command(flatten)]
    period: PeriodChoice,
    #[arg(long, default_value_t = 10.0)]
    length_mm: f64,
    #[command(flatten)]
    range: ScanRange,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = ScanEmit::Scan)]
    emit: ScanEmit,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct ScanPumpArgs {
    #[arg(long, default_value = "ktp")]
    material: String,
    /// Laser temperature at which the pump wavelength is `--ref-nm`.
    #[arg(long, default_value_t = 60.2)]
    ref_temp_c: f64,
    #[arg(long, default_value_t = 664.0)]
    ref_nm: f64,
    #[arg(long, default_value_t = 0.18)]
    rate_nm_per_c: f64,
    #[arg(long)]
    period_um: f64,
    #[arg(long, default_value_t = 10.0)]
    length_mm: f64,
    #[arg(long, default_value_t = 22.0)]
    crystal_temp_c: f64,
    #[command(flatten)]
    range: ScanRange,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CompensateEmit {
    Optimum,
    Profile,
}

#[derive(Debug, Args)]
struct CompensationSetup {
    #[arg(long, default_value = "ktp")]
    material: String,
    #[arg(long, default_value = "yvo4")]
    compensator: String,
    #[arg(long, default_value_t = 664.0)]
    pump_nm: f64,
    #[arg(long, default_value_t = 22.0)]
    temp_c: f64,
    /// Full poled-crystal length; pairs are born at its centre.
    #[arg(long, default_value_t = 10.0)]
    length_mm: f64,
    /// Optimization band; defaults to where the spectrum exceeds 10 % of peak.
    #[arg(long, requires = "band_to_nm")]
    band_from_nm: Option<f64>,
    #[arg(long, requires = "band_from_nm")]
    band_to_nm: Option<f64>,
    /// Fixed compensator length instead of the optimum.
    #[arg(long)]
    comp_length_mm: Option<f64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct CompensateArgs {
    #[command(flatten)]
    setup: CompensationSetup,
    #[arg(long, value_enum, default_value_t = CompensateEmit::Optimum)]
    emit: CompensateEmit,
    #[arg(long, default_value_t = 201)]
    points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VisibilityMode {
    Curve,
    Phase,
    Extremes,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct VisibilityArgs {
    #[arg(long, value_enum)]
    mode: VisibilityMode,

    #[arg(long, default_value_t = 1.0)]
    v_hv: f64,
    #[arg(long, default_value_t = 1.0)]
    v_plus: f64,
    #[arg(long, default_value_t = 1.0)]
    v_minus: f64,
    #[arg(long, default_value_t = 1.0)]
    mean_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    idler_deg: f64,
    #[arg(long, default_value_t = 0.0)]
    from_deg: f64,
    #[arg(long, default_value_t = 180.0)]
    to_deg: f64,
    #[arg(long, default_value_t = 5.0)]
    step_deg: f64,

    #[arg(long)]
    max: Option<f64>,
    #[arg(long)]
    min: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    acc_max: f64,
    #[arg(long, default_value_t = 0.0)]
    acc_min: f64,

    #[command(flatten)]
    setup: CompensationSetup,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct FidelityArgs {
    #[arg(long)]
    v_hv: f64,
    #[arg(long)]
    v_plus: f64,
    #[arg(long)]
    v_minus: f64,
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(ref m) if m.starts_with(USAGE_PREFIX) => {
                Failure::Usage(m[USAGE_PREFIX.len()..].to_string())
            }
            other => Failure::Domain(other),
        }
    }
}

const USAGE_PREFIX: &str = "usage: ";

fn usage(message: &str) -> Error {
    Error::InvalidInput(format!("{USAGE_PREFIX}{message}"))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// `x` with 9 significant digits; fixed notation for moderate magnitudes.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let exponent: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..9).contains(&exponent) {
        format!("{x:.*}", (8 - exponent) as usize)
    } else {
        sci
    }
}

fn round_sig9(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.8e}").parse().unwrap()
    } else {
        x
    }
}

fn render_csv(tables: &[Table]) -> String {
    let mut out = String::new();
    for (i, table) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("# ");
        out.push_str(&table.columns.join(","));
        out.push('\n');
        for row in &table.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format_sig9(*v),
                    Cell::Text(s) => s.clone(),
                    Cell::Bool(b) => b.to_string(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    out
}

/// Column name without its unit suffix in parentheses.
fn json_key(column: &str) -> &str {
    column.split(" (").next().unwrap_or(column)
}

fn render_json(tables: &[Table]) -> String {
    let mut root = Map::new();
    for table in tables {
        let rows: Vec<Value> = table
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = table
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(col, cell)| {
                        let v = match cell {
                            Cell::Num(x) => serde_json::Number::from_f64(round_sig9(*x))
                                .map_or(Value::Null, Value::Number),
                            Cell::Text(s) => Value::String(s.clone()),
                            Cell::Bool(b) => Value::Bool(*b),
                        };
                        (json_key(col).to_string(), v)
                    })
                    .collect();
                Value::Object(obj)
            })
            .collect();
        root.insert(table.name.clone(), Value::Array(rows));
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("serializable");
    s.push('\n');
    s
}

/// Loads `name` from a path, the data directory in [`DATA_DIR_ENV`], or the
/// bundled set, in that order.
pub fn resolve_material(name: &str) -> Result<MaterialModel> {
    let looks_like_path = name.contains(std::path::MAIN_SEPARATOR) || name.contains('/') || name.ends_with(".mat");
    if looks_like_path {
        return MaterialModel::from_file(Path::new(name));
    }
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        let path = Path::new(&dir).join(format!("{}.mat", name.to_ascii_lowercase()));
        return MaterialModel::from_file(path);
    }
    MaterialModel::bundled(name)
}

fn run_index(a: &IndexArgs) -> Result<Vec<Table>> {
    let m = resolve_material(&a.material)?;
    let axes: Vec<String> = match &a.axis {
        Some(axis) => {
            m.axis(axis)?;
            vec![axis.clone()]
        }
        None => m.axes.keys().cloned().collect(),
    };
    let wavelengths_nm = temperature_steps(a.from_nm, a.to_nm, a.step_nm)?;
    let mut t = Table::new(
        "index",
        &["axis", "wavelength (um)", "temperature (C)", "n", "k (rad/um)"],
    );
    for axis in &axes {
        for &nm in &wavelengths_nm {
            let l = nm * 1e-3;
            let n = m.refractive_index(axis, l, a.temp_c)?;
            let k = m.wavevector(axis, l, a.temp_c)?;
            t.push(vec![axis.as_str().into(), l.into(), a.temp_c.into(), n.into(), k.into()]);
        }
    }
    Ok(vec![t])
}

fn run_period(a: &PeriodArgs) -> Result<Vec<Table>> {
    let m = resolve_material(&a.material)?;
    let deg = a.degenerate_nm * 1e-3;
    let period = solve_poling_period(&m, deg, a.temp_c)?;
    let process = QpmProcess::new(&m, deg / 2.0, deg, period, 1.0, a.temp_c)?;
    let dk = process.delta_k()?.value();
    let mut t = Table::new(
        "period",
        &[
            "degenerate (um)",
            "temperature (C)",
            "period (um)",
            "period at temperature (um)",
            "delta_k (rad/um)",
        ],
    );
    t.push(vec![
        deg.into(),
        a.temp_c.into(),
        period.into(),
        m.expanded_length(period, a.temp_c).into(),
        dk.into(),
    ]);
    Ok(vec![t])
}

fn order_name(order: GratingOrder) -> &'static str {
    match order {
        GratingOrder::Forward => "forward",
        GratingOrder::Backward => "backward",
    }
}

fn run_spectrum(a: &SpectrumArgs) -> Result<Vec<Table>> {
    let m = resolve_material(&a.material)?;
    let pump = a.period.pump_or_half_degenerate(a.pump_nm)?;
    let period = a.period.resolve(&m)?;
    let length = a.length_mm * 1e3;
    match a.emit {
        SpectrumEmit::Roots => {
            let pairs = solve_phasematched_signal(&m, pump, period, length, a.temp_c)?;
            let mut t = Table::new(
                "roots",
                &["signal (um)", "idler (um)", "center (um)", "grating", "delta_k (rad/um)"],
            );
            for p in pairs {
                t.push(vec![
                    p.signal_um.into(),
                    p.idler_um.into(),
                    p.center_um().into(),
                    order_name(p.order).into(),
                    p.delta_k.into(),
                ]);
            }
            Ok(vec![t])
        }
        SpectrumEmit::Spectrum => {
            let grid = a.grid.grid(pump)?;
            let s = spdc_spectrum(&m, pump, period, length, a.temp_c, &grid)?;
            let mut t = Table::new(
                "spectrum",
                &["wavelength (um)", "signal_branch", "idler_branch", "total", "partner_out_of_range"],
            );
            for i in 0..s.len() {
                t.push(vec![
                    s.wavelengths_um[i].into(),
                    s.signal_branch[i].into(),
                    s.idler_branch[i].into(),
                    s.total[i].into(),
                    s.partner_out_of_range[i].into(),
                ]);
            }
            Ok(vec![t])
        }
    }
}

fn long_format(scan: &TemperatureScan, temperature_column: &str) -> Table {
    let mut t = Table::new(
        "scan",
        &[temperature_column, "pump (um)", "wavelength (um)", "branch", "intensity"],
    );
    for ((row, &temp), &pump) in scan.rows.iter().zip(&scan.temperatures_c).zip(&scan.pump_um) {
        for (branch, values) in [("signal", &row.signal_branch), ("idler", &row.idler_branch)] {
            for (l, v) in row.wavelengths_um.iter().zip(values.iter()) {
                t.push(vec![temp.into(), pump.into(), (*l).into(), branch.into(), (*v).into()]);
            }
        }
    }
    t
}

fn run_scan_crystal(a: &ScanCrystalArgs) -> Result<Vec<Table>> {
    let m = resolve_material(&a.material)?;
    let pump = a.period.pump_or_half_degenerate(a.pump_nm)?;
    let period = a.period.resolve(&m)?;
    let temps = temperature_steps(a.range.from_c, a.range.to_c, a.range.step_c)?;
    let grid = a.grid.grid(pump)?;
    let scan = crystal_temperature_scan(&m, pump, period, a.length_mm * 1e3, &temps, &grid)?;
    match a.emit {
        ScanEmit::Scan => Ok(vec![long_format(&scan, "crystal temperature (C)")]),
        ScanEmit::Report => {
            let report = insensitivity_report(&scan)?;
            let mut rows = Table::new(
                "report",
                &[
                    "crystal temperature (C)",
                    "signal peak (um)",
                    "idler peak (um)",
                    "separation (nm)",
                    "fwhm (nm)",
                    "indistinguishable",
                ],
            );
            for r in &report.rows {
                rows.push(vec![
                    r.temperature_c.into(),
                    r.signal_peak_um.into(),
                    r.idler_peak_um.into(),
                    (r.separation_um * 1e3).into(),
                    r.fwhm_um.map_or(f64::NAN, |w| w * 1e3).into(),
                    r.indistinguishable.into(),
                ]);
            }
            let mut plateau = Table::new(
                "plateau",
                &["period (um)", "start (C)", "end (C)", "span (C)"],
            );
            let p = report.plateau;
            plateau.push(vec![
                period.into(),
                p.map_or(f64::NAN, |p| p.start_c).into(),
                p.map_or(f64::NAN, |p| p.end_c).into(),
                report.plateau_span_c().into(),
            ]);
            Ok(vec![rows, plateau])
        }
    }
}

fn run_scan_pump(a: &ScanPumpArgs) -> Result<Vec<Table>> {
    let m = resolve_material(&a.material)?;
    let tuning = PumpTuningModel {
        reference_temperature_c: a.ref_temp_c,
        reference_wavelength_um: a.ref_nm * 1e-3,
        rate_nm_per_c: a.rate_nm_per_c,
    };
    let temps = temperature_steps(a.range.from_c, a.range.to_c, a.range.step_c)?;
    let grid = a.grid.grid(tuning.reference_wavelength_um)?;
    let scan = pump_temperature_scan(&m, tuning, a.period_um, a.length_mm * 1e3, a.crystal_temp_c, &temps, &grid)?;
    Ok(vec![long_format(&scan, "laser temperature (C)")])
}

struct CompensationInputs {
    ktp: MaterialModel,
    comp: MaterialModel,
    pump_um: f64,
    length_um: f64,
    band_um: (f64, f64),
}

fn compensation_inputs(s: &CompensationSetup) -> Result<CompensationInputs> {
    let ktp = resolve_material(&s.material)?;
    let comp = resolve_material(&s.compensator)?;
    let pump_um = s.pump_nm * 1e-3;
    let length_um = s.length_mm * 1e3;
    let band_um = match (s.band_from_nm, s.band_to_nm) {
        (Some(lo), Some(hi)) => (lo * 1e-3, hi * 1e-3),
        _ => default_band(&ktp, pump_um, s.temp_c, length_um)?,
    };
    Ok(CompensationInputs { ktp, comp, pump_um, length_um, band_um })
}

fn compensator_length(s: &CompensationSetup, inputs: &CompensationInputs) -> Result<(f64, Option<f64>)> {
    match s.comp_length_mm {
        Some(mm) => Ok((mm * 1e3, None)),
        None => {
            let opt = optimize_compensator_length(
                &inputs.ktp,
                &inputs.comp,
                inputs.pump_um,
                s.temp_c,
                inputs.length_um,
                inputs.band_um,
            )?;
            Ok((opt.length_um, Some(opt.residual_deg)))
        }
    }
}

fn run_compensate(a: &CompensateArgs) -> Result<Vec<Table>> {
    let s = &a.setup;
    let inputs = compensation_inputs(s)?;
    match a.emit {
        CompensateEmit::Optimum => {
            let opt = optimize_compensator_length(
                &inputs.ktp,
                &inputs.comp,
                inputs.pump_um,
                s.temp_c,
                inputs.length_um,
                inputs.band_um,
            )?;
            let mut t = Table::new(
                "optimum",
                &[
                    "compensator length (um)",
                    "residual (deg)",
                    "uncompensated (deg)",
                    "band start (um)",
                    "band end (um)",
                ],
            );
            t.push(vec![
                opt.length_um.into(),
                opt.residual_deg.into(),
                opt.uncompensated_deg.into(),
                opt.band_um.0.into(),
                opt.band_um.1.into(),
            ]);
            Ok(vec![t])
        }
        CompensateEmit::Profile => {
            if a.points < 2 {
                return Err(usage("--points must be at least 2"));
            }
            let (lc, _) = compensator_length(s, &inputs)?;
            let spec = CompensatorSpec::crossed(&inputs.comp, lc)?;
            let grid = linspace(inputs.band_um.0, inputs.band_um.1, a.points);
            let bare = phase_profile(&inputs.ktp, &grid, inputs.pump_um, s.temp_c, inputs.length_um, None)?;
            let comp = phase_profile(&inputs.ktp, &grid, inputs.pump_um, s.temp_c, inputs.length_um, Some(&spec))?;
            let mut t = Table::new(
                "profile",
                &["signal (um)", "uncompensated (deg)", "compensated (deg)", "compensator length (um)"],
            );
            for i in 0..grid.len() {
                t.push(vec![grid[i].into(), bare.phase_deg[i].into(), comp.phase_deg[i].into(), lc.into()]);
            }
            Ok(vec![t])
        }
    }
}

fn run_visibility(a: &VisibilityArgs) -> Result<Vec<Table>> {
    match a.mode {
        VisibilityMode::Curve => {
            let state = TwoPhotonState::new(a.v_hv, a.v_plus, a.v_minus, a.mean_rate)?;
            let angles = temperature_steps(a.from_deg, a.to_deg, a.step_deg)?;
            let rates = coincidence_curve(&state, a.idler_deg, &angles);
            let mut t = Table::new("curve", &["idler angle (deg)", "signal angle (deg)", "rate"]);
            for (theta, r) in angles.iter().zip(rates) {
                t.push(vec![a.idler_deg.into(), (*theta).into(), r.into()]);
            }
            Ok(vec![t])
        }
        VisibilityMode::Extremes => {
            let (max, min) = match (a.max, a.min) {
                (Some(max), Some(min)) => (max, min),
                _ => return Err(usage("--mode extremes needs --max and --min")),
            };
            let v = visibility_from_extremes(max, min, a.acc_max, a.acc_min)?;
            let mut t = Table::new("visibility", &["visibility"]);
            t.push(vec![v.into()]);
            Ok(vec![t])
        }
        VisibilityMode::Phase => {
            let s = &a.setup;
            let inputs = compensation_inputs(s)?;
            let (lc, _) = compensator_length(s, &inputs)?;
            let spectrum = degenerate_spectrum(&inputs.ktp, inputs.pump_um, s.temp_c, inputs.length_um)?;
            let spec = CompensatorSpec::crossed(&inputs.comp, lc)?;
            let profile = phase_profile(
                &inputs.ktp,
                &spectrum.wavelengths_um,
                inputs.pump_um,
                s.temp_c,
                inputs.length_um,
                Some(&spec),
            )?;
            let bare = phase_profile(
                &inputs.ktp,
                &spectrum.wavelengths_um,
                inputs.pump_um,
                s.temp_c,
                inputs.length_um,
                None,
            )?;
            let mut t = Table::new(
                "visibility",
                &["compensator length (um)", "visibility", "uncompensated visibility"],
            );
            t.push(vec![
                lc.into(),
                visibility_from_phase(&spectrum, &profile)?.into(),
                visibility_from_phase(&spectrum, &bare)?.into(),
            ]);
            Ok(vec![t])
        }
    }
}

fn run_fidelity(a: &FidelityArgs) -> Result<Vec<Table>> {
    for v in [a.v_hv, a.v_plus, a.v_minus] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidInput(format!("visibility {v} must lie in [0, 1]")));
        }
    }
    let mut t = Table::new("fidelity", &["fidelity"]);
    t.push(vec![fidelity_from_visibilities(a.v_hv, a.v_plus, a.v_minus).into()]);
    Ok(vec![t])
}

fn dispatch(command: &Command) -> Result<Vec<Table>> {
    match command {
        Command::Index(a) => run_index(a),
        Command::Period(a) => run_period(a),
        Command::Spectrum(a) => run_spectrum(a),
        Command::ScanCrystal(a) => run_scan_crystal(a),
        Command::ScanPump(a) => run_scan_pump(a),
        Command::Compensate(a) => run_compensate(a),
        Command::Visibility(a) => run_visibility(a),
        Command::Fidelity(a) => run_fidelity(a),
    }
}

/// Runs the command line and returns the process exit status: 0 on success,
/// 1 on a domain error, 2 on a usage error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    let tables = match dispatch(&cli.command).map_err(Failure::from) {
        Ok(t) => t,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            return 2;
        }
        Err(Failure::Domain(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
    };
    let text = match cli.format {
        Format::Csv => render_csv(&tables),
        Format::Json => render_json(&tables),
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, text.as_bytes()).map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}
