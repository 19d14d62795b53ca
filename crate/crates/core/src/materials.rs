//! Temperature-dependent refractive index models for birefringent crystals.
//!
//! A material is described by a small line-oriented text file (see
//! [`load_material`]). Each axis carries a room-temperature dispersion
//! formula, an optional thermo-optic polynomial and the wavelength window the
//! fit is valid in. An optional expansion section scales lengths (poling
//! period, crystal length) with temperature.
//!
//! Evaluation outside an axis' fit window is an error: Sellmeier fits diverge
//! quickly outside the data they were fitted to.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};

/// Reference temperature used when a file does not state one.
pub const DEFAULT_REFERENCE_C: f64 = 25.0;

const DEFAULT_OPERATING_RANGE_C: (f64, f64) = (-20.0, 200.0);
const MAX_THERMO_SHIFT: f64 = 0.01;

const BUNDLED: &[(&str, &str)] = &[
    ("ktp", include_str!("../data/ktp.mat")),
    ("yvo4", include_str!("../data/yvo4.mat")),
];

/// Functional form of the room-temperature dispersion, wavelength in µm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DispersionForm {
    /// `n² = A + B/(λ² − C) + D/(λ² − E)`
    TwoPole { a: f64, b: f64, c: f64, d: f64, e: f64 },
    /// `n² = A + B/(λ² − C) − D·λ²`
    SinglePoleIr { a: f64, b: f64, c: f64, d: f64 },
}

impl DispersionForm {
    pub const IDS: [&'static str; 2] = ["two-pole", "single-pole-ir"];

    fn from_coefficients(form_id: &str, coefficients: &[f64]) -> Option<Result<Self>> {
        let expected = match form_id {
            "two-pole" => 5,
            "single-pole-ir" => 4,
            _ => return None,
        };
        if coefficients.len() != expected {
            return Some(Err(Error::Validation(format!(
                "form `{form_id}` takes {expected} coefficients, got {}",
                coefficients.len()
            ))));
        }
        let c = coefficients;
        Some(Ok(match form_id {
            "two-pole" => DispersionForm::TwoPole { a: c[0], b: c[1], c: c[2], d: c[3], e: c[4] },
            _ => DispersionForm::SinglePoleIr { a: c[0], b: c[1], c: c[2], d: c[3] },
        }))
    }

    pub fn id(&self) -> &'static str {
        match self {
            DispersionForm::TwoPole { .. } => "two-pole",
            DispersionForm::SinglePoleIr { .. } => "single-pole-ir",
        }
    }

    fn n_squared(&self, wavelength_um: f64) -> f64 {
        let l2 = wavelength_um * wavelength_um;
        match *self {
            DispersionForm::TwoPole { a, b, c, d, e } => a + b / (l2 - c) + d / (l2 - e),
            DispersionForm::SinglePoleIr { a, b, c, d } => a + b / (l2 - c) - d * l2,
        }
    }
}

/// Dispersion at the reference temperature plus its fit window.
#[derive(Debug, Clone, PartialEq)]
pub struct SellmeierSet {
    pub form: DispersionForm,
    pub range_um: (f64, f64),
}

impl SellmeierSet {
    pub fn contains(&self, wavelength_um: f64) -> bool {
        wavelength_um >= self.range_um.0 && wavelength_um <= self.range_um.1
    }

    /// Index without range checking.
    fn eval(&self, wavelength_um: f64) -> f64 {
        self.form.n_squared(wavelength_um).sqrt()
    }
}

/// `Δn(λ,T) = n₁(λ)(T − t_ref) + n₂(λ)(T − t_ref)²`, with
/// `n₁,₂(λ) = Σ_m a_m / λ^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermoOpticSet {
    pub t_ref_c: f64,
    pub first_order: Vec<f64>,
    pub second_order: Vec<f64>,
}

fn inverse_poly(coefficients: &[f64], wavelength_um: f64) -> f64 {
    let inv = 1.0 / wavelength_um;
    coefficients.iter().rev().fold(0.0, |acc, &a| acc * inv + a)
}

impl ThermoOpticSet {
    pub fn delta_n(&self, wavelength_um: f64, temperature_c: f64) -> f64 {
        let dt = temperature_c - self.t_ref_c;
        inverse_poly(&self.first_order, wavelength_um) * dt
            + inverse_poly(&self.second_order, wavelength_um) * dt * dt
    }

    /// Analytic `∂Δn/∂T`.
    pub fn slope(&self, wavelength_um: f64, temperature_c: f64) -> f64 {
        let dt = temperature_c - self.t_ref_c;
        inverse_poly(&self.first_order, wavelength_um)
            + 2.0 * inverse_poly(&self.second_order, wavelength_um) * dt
    }
}

/// `L(T) = L₀·(1 + α(T − t_ref) + β(T − t_ref)²)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionSet {
    pub t_ref_c: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ExpansionSet {
    pub fn factor(&self, temperature_c: f64) -> f64 {
        let dt = temperature_c - self.t_ref_c;
        1.0 + self.alpha * dt + self.beta * dt * dt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisModel {
    pub sellmeier: SellmeierSet,
    pub thermo: Option<ThermoOpticSet>,
}

impl AxisModel {
    fn eval(&self, wavelength_um: f64, temperature_c: f64) -> f64 {
        let base = self.sellmeier.eval(wavelength_um);
        match &self.thermo {
            Some(t) => base + t.delta_n(wavelength_um, temperature_c),
            None => base,
        }
    }
}

/// A validated crystal model. Immutable once loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    pub name: String,
    pub axes: BTreeMap<String, AxisModel>,
    pub expansion: Option<ExpansionSet>,
    pub operating_range_c: (f64, f64),
}

impl MaterialModel {
    /// One of the materials shipped with the crate (`ktp`, `yvo4`).
    pub fn bundled(name: &str) -> Result<Self> {
        let key = name.to_ascii_lowercase();
        BUNDLED
            .iter()
            .find(|(n, _)| *n == key)
            .ok_or_else(|| Error::InvalidInput(format!("no bundled material named `{name}`")))
            .and_then(|(_, src)| load_material(src))
    }

    pub fn bundled_names() -> impl Iterator<Item = &'static str> {
        BUNDLED.iter().map(|(n, _)| *n)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        load_material(&src)
    }

    pub fn axis(&self, label: &str) -> Result<&AxisModel> {
        self.axes
            .get(label)
            .ok_or_else(|| Error::UnknownAxis(label.to_string()))
    }

    pub fn has_axes(&self, labels: &[&str]) -> Result<()> {
        for label in labels {
            if !self.axes.contains_key(*label) {
                return Err(Error::Validation(format!(
                    "material {} has no axis `{label}`",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Temperature at which evaluations without a thermo-optic set are
    /// meaningful: the expansion reference, or the default.
    pub fn reference_temperature_c(&self) -> f64 {
        self.expansion
            .map(|e| e.t_ref_c)
            .unwrap_or(DEFAULT_REFERENCE_C)
    }

    pub fn refractive_index(&self, axis: &str, wavelength_um: f64, temperature_c: f64) -> Result<f64> {
        let model = self.axis(axis)?;
        let range = model.sellmeier.range_um;
        if !wavelength_um.is_finite() || !model.sellmeier.contains(wavelength_um) {
            return Err(Error::OutOfRange {
                axis: axis.to_string(),
                wavelength_um,
                lo: range.0,
                hi: range.1,
            });
        }
        if !temperature_c.is_finite() {
            return Err(Error::InvalidInput(format!("temperature {temperature_c} is not finite")));
        }
        Ok(model.eval(wavelength_um, temperature_c))
    }

    /// `k = 2π·n/λ` in rad/µm.
    pub fn wavevector(&self, axis: &str, wavelength_um: f64, temperature_c: f64) -> Result<f64> {
        let n = self.refractive_index(axis, wavelength_um, temperature_c)?;
        Ok(2.0 * PI * n / wavelength_um)
    }

    /// Length at `temperature_c` of a sample that measures `length_um` at the
    /// expansion reference temperature. Identity without an expansion set.
    pub fn expanded_length(&self, length_um: f64, temperature_c: f64) -> f64 {
        match &self.expansion {
            Some(e) => length_um * e.factor(temperature_c),
            None => length_um,
        }
    }

    /// Intersection of all axis fit windows.
    pub fn common_range_um(&self) -> (f64, f64) {
        self.axes.values().fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), a| {
            (lo.max(a.sellmeier.range_um.0), hi.min(a.sellmeier.range_um.1))
        })
    }

    fn validate(&self, declared: &[String]) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::Validation("no [axis.<LABEL>] section".into()));
        }
        for label in declared {
            if !self.axes.contains_key(label) {
                return Err(Error::Validation(format!(
                    "declared axis `{label}` has no [axis.{label}] section"
                )));
            }
        }
        let (t_lo, t_hi) = self.operating_range_c;
        if !(t_lo < t_hi) {
            return Err(Error::Validation("operating_range_c must be increasing".into()));
        }
        for (label, axis) in &self.axes {
            let (lo, hi) = axis.sellmeier.range_um;
            if !(lo > 0.0 && lo < hi) {
                return Err(Error::Validation(format!(
                    "axis {label}: range_um must satisfy 0 < lo < hi"
                )));
            }
            const SAMPLES: usize = 512;
            for i in 0..=SAMPLES {
                let l = lo + (hi - lo) * i as f64 / SAMPLES as f64;
                let n = axis.sellmeier.eval(l);
                if !(n > 1.0 && n < 3.0) {
                    return Err(Error::Validation(format!(
                        "axis {label}: index {n} at {l} um is outside (1, 3)"
                    )));
                }
            }
            if let Some(thermo) = &axis.thermo {
                const T_SAMPLES: usize = 32;
                for i in 0..=T_SAMPLES {
                    let l = lo + (hi - lo) * i as f64 / T_SAMPLES as f64;
                    for j in 0..=T_SAMPLES {
                        let t = t_lo + (t_hi - t_lo) * j as f64 / T_SAMPLES as f64;
                        let dn = thermo.delta_n(l, t);
                        if !(dn.abs() < MAX_THERMO_SHIFT) {
                            return Err(Error::Validation(format!(
                                "axis {label}: thermo-optic shift {dn:e} at {l} um, {t} C exceeds {MAX_THERMO_SHIFT}"
                            )));
                        }
                    }
                }
            }
        }
        let (lo, hi) = self.common_range_um();
        if !(lo < hi) {
            return Err(Error::Validation("axis ranges do not overlap".into()));
        }
        if let Some(e) = &self.expansion {
            for j in 0..=64 {
                let t = t_lo + (t_hi - t_lo) * j as f64 / 64.0;
                if !(e.factor(t) > 0.0) {
                    return Err(Error::Validation(format!(
                        "expansion factor is not positive at {t} C"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Str(String),
    Numbers(Vec<f64>),
}

#[derive(Debug)]
struct Entry {
    line: usize,
    value: Value,
}

#[derive(Debug, Default)]
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn string(&mut self, key: &str) -> Result<Option<(usize, String)>> {
        match self.take(key) {
            None => Ok(None),
            Some(Entry { line, value: Value::Str(s) }) => Ok(Some((line, s))),
            Some(Entry { line, .. }) => Err(Error::Parse {
                line,
                message: format!("`{key}` must be a quoted string"),
            }),
        }
    }

    fn numbers(&mut self, key: &str) -> Result<Option<(usize, Vec<f64>)>> {
        match self.take(key) {
            None => Ok(None),
            Some(Entry { line, value: Value::Numbers(v) }) => Ok(Some((line, v))),
            Some(Entry { line, .. }) => Err(Error::Parse {
                line,
                message: format!("`{key}` must be a number or number list"),
            }),
        }
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>> {
        match self.numbers(key)? {
            None => Ok(None),
            Some((_, v)) if v.len() == 1 => Ok(Some(v[0])),
            Some((line, _)) => Err(Error::Parse {
                line,
                message: format!("`{key}` must be a single number"),
            }),
        }
    }

    fn pair(&mut self, key: &str) -> Result<Option<(f64, f64)>> {
        match self.numbers(key)? {
            None => Ok(None),
            Some((_, v)) if v.len() == 2 => Ok(Some((v[0], v[1]))),
            Some((line, _)) => Err(Error::Parse {
                line,
                message: format!("`{key}` must be two numbers"),
            }),
        }
    }

    fn finish(self, name: &str) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, entry)) => Err(Error::Parse {
                line: entry.line,
                message: format!("unknown key `{key}` in [{name}]"),
            }),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_value(raw: &str, line: usize) -> Result<Value> {
    if let Some(rest) = raw.strip_prefix('"') {
        return match rest.strip_suffix('"') {
            Some(s) if !s.contains('"') => Ok(Value::Str(s.to_string())),
            _ => Err(Error::Parse { line, message: "unterminated string".into() }),
        };
    }
    raw.split(',')
        .map(|tok| {
            let tok = tok.trim();
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse { line, message: format!("invalid number `{tok}`") }),
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(Value::Numbers)
}

fn parse_sections(source: &str) -> Result<Vec<(String, Section)>> {
    let mut sections: Vec<(String, Section)> = Vec::new();
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let text = strip_comment(raw).trim();
        if text.is_empty() {
            continue;
        }
        if let Some(header) = text.strip_prefix('[') {
            let name = header
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse { line, message: "unterminated section header".into() })?
                .trim();
            let known = name == "material"
                || name == "expansion"
                || name.strip_prefix("axis.").is_some_and(|l| !l.is_empty());
            if !known {
                return Err(Error::Parse { line, message: format!("unknown section [{name}]") });
            }
            if sections.iter().any(|(n, _)| n == name) {
                return Err(Error::Parse { line, message: format!("duplicate section [{name}]") });
            }
            sections.push((name.to_string(), Section { line, ..Default::default() }));
            continue;
        }
        let (key, value) = text
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, message: "expected `key = value`".into() })?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Parse { line, message: format!("invalid key `{key}`") });
        }
        let value = parse_value(value.trim(), line)?;
        let (_, section) = sections
            .last_mut()
            .ok_or_else(|| Error::Parse { line, message: "key outside of any section".into() })?;
        if section.entries.contains_key(key) {
            return Err(Error::Parse { line, message: format!("duplicate key `{key}`") });
        }
        section.entries.insert(key.to_string(), Entry { line, value });
    }
    Ok(sections)
}

fn missing(section: &str, key: &str, line: usize) -> Error {
    Error::Parse { line, message: format!("[{section}] is missing required key `{key}`") }
}

/// Parse and validate a material file.
///
/// ```text
/// # comment
/// [material]
/// name = "KTP"
/// axes = "Y, Z"                 # optional: labels that must be present
/// operating_range_c = -20, 200  # optional
///
/// [expansion]                   # optional
/// t_ref_c = 25
/// alpha = 6.7e-6
/// beta = 11e-9
///
/// [axis.Y]
/// form = "two-pole"
/// coefficients = 3.45018, 0.04341, 0.04597, 16.98825, 39.43799
/// range_um = 0.43, 3.54
/// thermo_t_ref_c = 25           # optional
/// thermo_first = ...            # optional, coefficients of 1/λ^m
/// thermo_second = ...           # optional
/// ```
pub fn load_material(source: &str) -> Result<MaterialModel> {
    let mut name = None;
    let mut declared = Vec::new();
    let mut operating_range_c = DEFAULT_OPERATING_RANGE_C;
    let mut expansion = None;
    let mut axes = BTreeMap::new();

    for (section_name, mut section) in parse_sections(source)? {
        let header_line = section.line;
        if section_name == "material" {
            let (_, n) = section
                .string("name")?
                .ok_or_else(|| missing("material", "name", header_line))?;
            name = Some(n);
            if let Some((_, list)) = section.string("axes")? {
                declared = list
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
            }
            if let Some(r) = section.pair("operating_range_c")? {
                operating_range_c = r;
            }
        } else if section_name == "expansion" {
            expansion = Some(ExpansionSet {
                t_ref_c: section.number("t_ref_c")?.unwrap_or(DEFAULT_REFERENCE_C),
                alpha: section.number("alpha")?.unwrap_or(0.0),
                beta: section.number("beta")?.unwrap_or(0.0),
            });
        } else {
            let label = section_name["axis.".len()..].to_string();
            let (form_line, form_id) = section
                .string("form")?
                .ok_or_else(|| missing(&section_name, "form", header_line))?;
            let (_, coefficients) = section
                .numbers("coefficients")?
                .ok_or_else(|| missing(&section_name, "coefficients", header_line))?;
            let range_um = section
                .pair("range_um")?
                .ok_or_else(|| missing(&section_name, "range_um", header_line))?;
            let form = DispersionForm::from_coefficients(&form_id, &coefficients)
                .ok_or(Error::UnknownForm { line: form_line, form: form_id })??;
            let thermo_t_ref = section.number("thermo_t_ref_c")?;
            let first = section.numbers("thermo_first")?.map(|(_, v)| v);
            let second = section.numbers("thermo_second")?.map(|(_, v)| v);
            let thermo = if first.is_some() || second.is_some() {
                Some(ThermoOpticSet {
                    t_ref_c: thermo_t_ref.unwrap_or(DEFAULT_REFERENCE_C),
                    first_order: first.unwrap_or_default(),
                    second_order: second.unwrap_or_default(),
                })
            } else {
                None
            };
            axes.insert(
                label,
                AxisModel { sellmeier: SellmeierSet { form, range_um }, thermo },
            );
        }
        section.finish(&section_name)?;
    }

    let model = MaterialModel {
        name: name.ok_or_else(|| missing("material", "name", 0))?,
        axes,
        expansion,
        operating_range_c,
    };
    model.validate(&declared)?;
    Ok(model)
}
