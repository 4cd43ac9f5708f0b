//! Experiment configuration: a sectioned TOML file with every key checked.
//!
//! ```toml
//! kind = "nonlinear-decay"
//! seed = 7
//!
//! [grid]
//! dim = 3
//! points = 64
//! box_length = 32.0
//!
//! [initial]
//! kind = "gaussian"
//! amplitude = 0.2
//! ```
//!
//! Omitted keys take their defaults. Unknown sections or keys are errors,
//! and all problems are reported together.

use std::fmt;
use std::str::FromStr;

use nlslab_core::ensemble::Randomization;
use nlslab_core::solver::SolverConfig;
use nlslab_core::{Grid, ModelSpec, Sign, Symbol};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    LinearDecay,
    NonlinearDecay,
    ScatteringRate,
    SpacetimeTail,
    Duhamel,
    PcEnergy,
    L6Decay,
    Morawetz,
    Ensemble,
    AmplitudeSweep,
    ConvergenceGate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 11] = [
        Self::LinearDecay,
        Self::NonlinearDecay,
        Self::ScatteringRate,
        Self::SpacetimeTail,
        Self::Duhamel,
        Self::PcEnergy,
        Self::L6Decay,
        Self::Morawetz,
        Self::Ensemble,
        Self::AmplitudeSweep,
        Self::ConvergenceGate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LinearDecay => "linear-decay",
            Self::NonlinearDecay => "nonlinear-decay",
            Self::ScatteringRate => "scattering-rate",
            Self::SpacetimeTail => "spacetime-tail",
            Self::Duhamel => "duhamel",
            Self::PcEnergy => "pc-energy",
            Self::L6Decay => "l6-decay",
            Self::Morawetz => "morawetz",
            Self::Ensemble => "ensemble",
            Self::AmplitudeSweep => "amplitude-sweep",
            Self::ConvergenceGate => "convergence-gate",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.as_str()).collect();
                format!(
                    "unknown experiment kind {s:?} (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub dim: usize,
    pub points: usize,
    pub box_length: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            dim: 3,
            points: 32,
            box_length: 16.0,
        }
    }
}

impl GridParams {
    pub fn build(&self) -> nlslab_core::Result<Grid> {
        Grid::new(self.dim, self.points, self.box_length)
    }
}

/// Where the initial field comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`.
    Gaussian {
        amplitude: f64,
        width: f64,
        center: [f64; 3],
    },
    /// A Gaussian times the on-grid plane wave with integer `modes`.
    PlaneModulated {
        amplitude: f64,
        width: f64,
        center: [f64; 3],
        modes: [i64; 3],
    },
    /// Last snapshot of a snapshot container on the same grid.
    File { path: String },
}

impl Default for InitialData {
    fn default() -> Self {
        Self::Gaussian {
            amplitude: 0.2,
            width: 1.0,
            center: [0.0; 3],
        }
    }
}

impl InitialData {
    pub fn amplitude(&self) -> Option<f64> {
        match *self {
            Self::Gaussian { amplitude, .. } | Self::PlaneModulated { amplitude, .. } => {
                Some(amplitude)
            }
            Self::File { .. } => None,
        }
    }

    /// The same descriptor with another amplitude (not available for files).
    pub fn with_amplitude(&self, value: f64) -> Option<Self> {
        let mut out = self.clone();
        match &mut out {
            Self::Gaussian { amplitude, .. } | Self::PlaneModulated { amplitude, .. } => {
                *amplitude = value;
                Some(out)
            }
            Self::File { .. } => None,
        }
    }
}

/// Analysis knobs; empty lists mean "derive from the run".
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisParams {
    /// Lower end of decay-fit windows (the upper end is the horizon).
    pub fit_t_min: f64,
    pub extraction_times: Vec<f64>,
    pub extraction_tolerance: f64,
    pub tail_starts: Vec<f64>,
    pub probe_times: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            fit_t_min: 2.0,
            extraction_times: Vec::new(),
            extraction_tolerance: 1e-2,
            tail_starts: Vec::new(),
            probe_times: Vec::new(),
            amplitudes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleParams {
    pub n_samples: usize,
    pub lattice_spacing: f64,
    pub randomization: Randomization,
    pub lambda_multiples: Vec<f64>,
    /// Also compute the weighted linear norm of each sample.
    pub weighted_norm: bool,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self {
            n_samples: 64,
            lattice_spacing: 2.0,
            randomization: Randomization::Gaussian,
            lambda_multiples: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            weighted_norm: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub output_dir: String,
    pub grid: GridParams,
    pub model: ModelSpec,
    pub solver: SolverConfig,
    pub initial: InitialData,
    pub analysis: AnalysisParams,
    pub ensemble: EnsembleParams,
}

impl ExperimentConfig {
    /// Defaults for `kind`.
    pub fn new(kind: ExperimentKind) -> Self {
        let model = if kind == ExperimentKind::LinearDecay {
            ModelSpec::linear()
        } else {
            ModelSpec::cubic()
        };
        Self {
            kind,
            seed: 0,
            output_dir: "runs".into(),
            grid: GridParams::default(),
            model,
            solver: SolverConfig::default(),
            initial: InitialData::default(),
            analysis: AnalysisParams::default(),
            ensemble: EnsembleParams::default(),
        }
    }

    /// Canonical TOML text: every field present, keys sorted.
    pub fn to_toml(&self) -> String {
        let mut root = self.hashed_table();
        root.insert("output_dir".into(), Value::String(self.output_dir.clone()));
        toml::to_string(&root).expect("config tables always serialize")
    }

    /// Hex SHA-256 of the canonical text without `output_dir`, so moving the
    /// output elsewhere keeps the hash.
    pub fn hash(&self) -> String {
        let text = toml::to_string(&self.hashed_table()).expect("config tables always serialize");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// `<kind>-<first 12 hex digits of the hash>`.
    pub fn run_id(&self) -> String {
        format!("{}-{}", self.kind, &self.hash()[..12])
    }

    fn hashed_table(&self) -> Table {
        let mut root = Table::new();
        root.insert("kind".into(), self.kind.as_str().into());
        root.insert("seed".into(), Value::Integer(self.seed as i64));

        let mut grid = Table::new();
        grid.insert("dim".into(), Value::Integer(self.grid.dim as i64));
        grid.insert("points".into(), Value::Integer(self.grid.points as i64));
        grid.insert("box_length".into(), self.grid.box_length.into());
        root.insert("grid".into(), grid.into());

        let mut model = Table::new();
        let symbol = match self.model.symbol {
            Symbol::Schrodinger => "schrodinger",
            Symbol::Biharmonic => "biharmonic",
            Symbol::Fractional { alpha } => {
                model.insert("alpha".into(), alpha.into());
                "fractional"
            }
        };
        model.insert("symbol".into(), symbol.into());
        model.insert("power".into(), Value::Integer(self.model.power as i64));
        let sign = match self.model.sign {
            Sign::Off => "off",
            Sign::Defocusing => "defocusing",
        };
        model.insert("sign".into(), sign.into());
        root.insert("model".into(), model.into());

        let s = &self.solver;
        let mut solver = Table::new();
        solver.insert("dt".into(), s.dt.into());
        solver.insert("t_end".into(), s.t_end.into());
        solver.insert("dealias_ratio".into(), s.dealias_ratio.into());
        solver.insert(
            "snapshot_stride".into(),
            Value::Integer(s.snapshot_stride as i64),
        );
        solver.insert(
            "sample_stride".into(),
            Value::Integer(s.sample_stride as i64),
        );
        solver.insert(
            "boundary_shell_fraction".into(),
            s.boundary_shell_fraction.into(),
        );
        solver.insert("boundary_mass_tol".into(), s.boundary_mass_tol.into());
        root.insert("solver".into(), solver.into());

        let mut initial = Table::new();
        match &self.initial {
            InitialData::Gaussian {
                amplitude,
                width,
                center,
            } => {
                initial.insert("kind".into(), "gaussian".into());
                initial.insert("amplitude".into(), (*amplitude).into());
                initial.insert("width".into(), (*width).into());
                initial.insert("center".into(), floats(center));
            }
            InitialData::PlaneModulated {
                amplitude,
                width,
                center,
                modes,
            } => {
                initial.insert("kind".into(), "plane-modulated".into());
                initial.insert("amplitude".into(), (*amplitude).into());
                initial.insert("width".into(), (*width).into());
                initial.insert("center".into(), floats(center));
                initial.insert(
                    "modes".into(),
                    Value::Array(modes.iter().map(|&m| Value::Integer(m)).collect()),
                );
            }
            InitialData::File { path } => {
                initial.insert("kind".into(), "file".into());
                initial.insert("path".into(), path.as_str().into());
            }
        }
        root.insert("initial".into(), initial.into());

        let a = &self.analysis;
        let mut analysis = Table::new();
        analysis.insert("fit_t_min".into(), a.fit_t_min.into());
        analysis.insert("extraction_times".into(), floats(&a.extraction_times));
        analysis.insert("extraction_tolerance".into(), a.extraction_tolerance.into());
        analysis.insert("tail_starts".into(), floats(&a.tail_starts));
        analysis.insert("probe_times".into(), floats(&a.probe_times));
        analysis.insert("amplitudes".into(), floats(&a.amplitudes));
        root.insert("analysis".into(), analysis.into());

        let e = &self.ensemble;
        let mut ensemble = Table::new();
        ensemble.insert("n_samples".into(), Value::Integer(e.n_samples as i64));
        ensemble.insert("lattice_spacing".into(), e.lattice_spacing.into());
        let mode = match e.randomization {
            Randomization::Gaussian => "gaussian",
            Randomization::AllOnes => "all-ones",
        };
        ensemble.insert("randomization".into(), mode.into());
        ensemble.insert("lambda_multiples".into(), floats(&e.lambda_multiples));
        ensemble.insert("weighted_norm".into(), e.weighted_norm.into());
        root.insert("ensemble".into(), ensemble.into());
        root
    }
}

fn floats(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&v| Value::Float(v)).collect())
}

/// Parses and validates a config, reporting every violation found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let root: Table = toml::from_str(text)
        .map_err(|e: toml::de::Error| HarnessError::Config(vec![format!("syntax: {e}")]))?;
    let mut errors = Vec::new();
    let mut top = Section::new("", &root, &mut errors);

    let kind = match top.take_str("kind", None) {
        Some(s) => match s.parse::<ExperimentKind>() {
            Ok(k) => Some(k),
            Err(e) => {
                top.errors.push(format!("kind: {e}"));
                None
            }
        },
        None => None,
    };
    let kind = kind.unwrap_or(ExperimentKind::LinearDecay);
    let mut config = ExperimentConfig::new(kind);
    config.seed = top.take_u64("seed", 0);
    config.output_dir = top.take_str("output_dir", Some("runs")).unwrap_or_default();
    let sections = ["grid", "model", "solver", "initial", "analysis", "ensemble"];
    let mut subtables = Vec::new();
    for name in sections {
        subtables.push(top.take_table(name));
    }
    top.finish();

    let empty = Table::new();
    let table = |i: usize| subtables[i].as_ref().unwrap_or(&empty);

    let mut s = Section::new("grid", table(0), &mut errors);
    config.grid.dim = s.take_usize("dim", 3, 1, 3);
    config.grid.points = s.take_usize("points", 32, 4, 1 << 12);
    if !config.grid.points.is_power_of_two() {
        s.errors.push(format!(
            "grid.points: must be a power of two >= 4 (got {})",
            config.grid.points
        ));
    }
    config.grid.box_length = s.take_f64("box_length", 16.0, Range::Positive);
    s.finish();

    let mut s = Section::new("model", table(1), &mut errors);
    let default_sign = if kind == ExperimentKind::LinearDecay {
        "off"
    } else {
        "defocusing"
    };
    let symbol = s
        .take_str("symbol", Some("schrodinger"))
        .unwrap_or_default();
    let alpha = s.take_opt_f64("alpha");
    config.model.symbol = match (symbol.as_str(), alpha) {
        ("schrodinger", None) => Symbol::Schrodinger,
        ("biharmonic", None) => Symbol::Biharmonic,
        ("fractional", Some(alpha)) => Symbol::Fractional { alpha },
        ("fractional", None) => {
            s.errors
                .push("model.alpha: required for the fractional symbol, range (0.5, 1)".into());
            Symbol::Schrodinger
        }
        ("schrodinger" | "biharmonic", Some(_)) => {
            s.errors
                .push("model.alpha: only allowed with symbol = \"fractional\"".into());
            Symbol::Schrodinger
        }
        (other, _) => {
            s.errors.push(format!(
                "model.symbol: unknown symbol {other:?} (expected schrodinger, biharmonic or fractional)"
            ));
            Symbol::Schrodinger
        }
    };
    config.model.power = s.take_usize("power", 3, 3, 5) as u32;
    config.model.sign = match s.take_str("sign", Some(default_sign)).as_deref() {
        Some("defocusing") => Sign::Defocusing,
        Some("off") => Sign::Off,
        Some(other) => {
            s.errors.push(format!(
                "model.sign: unknown sign {other:?} (expected defocusing or off)"
            ));
            Sign::Defocusing
        }
        None => Sign::Defocusing,
    };
    if let Err(e) = config.model.validate() {
        s.errors.push(format!("model: {e}"));
    }
    s.finish();

    let mut s = Section::new("solver", table(2), &mut errors);
    let d = SolverConfig::default();
    config.solver = SolverConfig {
        dt: s.take_f64("dt", d.dt, Range::Open(0.0, 1.0)),
        t_end: s.take_f64("t_end", d.t_end, Range::Positive),
        dealias_ratio: s.take_f64("dealias_ratio", d.dealias_ratio, Range::LeftOpen(0.0, 1.0)),
        snapshot_stride: s.take_usize("snapshot_stride", d.snapshot_stride, 1, usize::MAX),
        sample_stride: s.take_usize("sample_stride", d.sample_stride, 1, usize::MAX),
        boundary_shell_fraction: s.take_f64(
            "boundary_shell_fraction",
            d.boundary_shell_fraction,
            Range::Open(0.0, 1.0),
        ),
        boundary_mass_tol: s.take_f64(
            "boundary_mass_tol",
            d.boundary_mass_tol,
            Range::Open(0.0, 1.0),
        ),
    };
    s.finish();

    let mut s = Section::new("initial", table(3), &mut errors);
    let initial_kind = s.take_str("kind", Some("gaussian")).unwrap_or_default();
    config.initial = match initial_kind.as_str() {
        "gaussian" | "plane-modulated" => {
            let amplitude = s.take_f64("amplitude", 0.2, Range::Positive);
            let width = s.take_f64("width", 1.0, Range::Positive);
            let center = s.take_f64_array3("center");
            if initial_kind == "gaussian" {
                InitialData::Gaussian {
                    amplitude,
                    width,
                    center,
                }
            } else {
                InitialData::PlaneModulated {
                    amplitude,
                    width,
                    center,
                    modes: s.take_i64_array3("modes"),
                }
            }
        }
        "file" => match s.take_str("path", None) {
            Some(path) => InitialData::File { path },
            None => InitialData::default(),
        },
        other => {
            s.errors.push(format!(
                "initial.kind: unknown initial data {other:?} (expected gaussian, plane-modulated or file)"
            ));
            InitialData::default()
        }
    };
    s.finish();

    let mut s = Section::new("analysis", table(4), &mut errors);
    let a = AnalysisParams::default();
    config.analysis = AnalysisParams {
        fit_t_min: s.take_f64("fit_t_min", a.fit_t_min, Range::Positive),
        extraction_times: s.take_f64_list("extraction_times", true),
        extraction_tolerance: s.take_f64(
            "extraction_tolerance",
            a.extraction_tolerance,
            Range::Positive,
        ),
        tail_starts: s.take_f64_list("tail_starts", true),
        probe_times: s.take_f64_list("probe_times", true),
        amplitudes: s.take_f64_list("amplitudes", false),
    };
    if config.analysis.amplitudes.iter().any(|&a| !(a > 0.0)) {
        s.errors
            .push("analysis.amplitudes: every amplitude must be positive".into());
    }
    s.finish();

    let mut s = Section::new("ensemble", table(5), &mut errors);
    let e = EnsembleParams::default();
    config.ensemble = EnsembleParams {
        n_samples: s.take_usize("n_samples", e.n_samples, 1, 1 << 20),
        lattice_spacing: s.take_f64("lattice_spacing", e.lattice_spacing, Range::Positive),
        randomization: match s.take_str("randomization", Some("gaussian")).as_deref() {
            Some("all-ones") => Randomization::AllOnes,
            Some("gaussian") | None => Randomization::Gaussian,
            Some(other) => {
                s.errors.push(format!(
                    "ensemble.randomization: unknown mode {other:?} (expected gaussian or all-ones)"
                ));
                Randomization::Gaussian
            }
        },
        lambda_multiples: {
            let v = s.take_f64_list("lambda_multiples", true);
            if v.is_empty() {
                e.lambda_multiples
            } else {
                v
            }
        },
        weighted_norm: s.take_bool("weighted_norm", e.weighted_norm),
    };
    s.finish();

    cross_checks(&config, &mut errors);
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(HarnessError::Config(errors))
    }
}

fn cross_checks(config: &ExperimentConfig, errors: &mut Vec<String>) {
    use ExperimentKind::*;
    let nonlinear = !config.model.is_linear();
    match config.kind {
        NonlinearDecay | ScatteringRate | SpacetimeTail | Duhamel | PcEnergy | L6Decay
        | Morawetz | ConvergenceGate
            if !nonlinear =>
        {
            errors.push(format!(
                "model.sign: {} needs a nonlinear model (sign = \"defocusing\")",
                config.kind
            ));
        }
        _ => {}
    }
    if config.kind == PcEnergy && config.model.symbol != Symbol::Schrodinger {
        errors.push("model.symbol: pc-energy is defined for the schrodinger symbol only".into());
    }
    if config.kind == Duhamel && !config.solver.snapshot_stride.is_multiple_of(2) {
        errors.push(format!(
            "solver.snapshot_stride: duhamel halves the stride, so it must be even (got {})",
            config.solver.snapshot_stride
        ));
    }
    if matches!(config.kind, AmplitudeSweep | Morawetz)
        && matches!(config.initial, InitialData::File { .. })
    {
        errors.push(format!(
            "initial.kind: {} rescales the amplitude and cannot use file data",
            config.kind
        ));
    }
    if config.kind == Ensemble && config.ensemble.lambda_multiples.iter().any(|&m| !(m > 0.0)) {
        errors.push("ensemble.lambda_multiples: multiples must be positive".into());
    }
}

/// Admissible range of a real parameter.
#[derive(Debug, Clone, Copy)]
enum Range {
    Positive,
    Open(f64, f64),
    LeftOpen(f64, f64),
}

impl Range {
    fn contains(self, v: f64) -> bool {
        match self {
            Range::Positive => v > 0.0 && v.is_finite(),
            Range::Open(a, b) => v > a && v < b,
            Range::LeftOpen(a, b) => v > a && v <= b,
        }
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Range::Positive => write!(f, "(0, inf)"),
            Range::Open(a, b) => write!(f, "({a}, {b})"),
            Range::LeftOpen(a, b) => write!(f, "({a}, {b}]"),
        }
    }
}

/// One table being consumed key by key; leftovers are reported as unknown.
struct Section<'a> {
    name: &'static str,
    table: Table,
    errors: &'a mut Vec<String>,
}

impl<'a> Section<'a> {
    fn new(name: &'static str, table: &Table, errors: &'a mut Vec<String>) -> Self {
        Self {
            name,
            table: table.clone(),
            errors,
        }
    }

    fn path(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.name)
        }
    }

    fn finish(self) {
        for key in self.table.keys() {
            let path = if self.name.is_empty() {
                key.clone()
            } else {
                format!("{}.{key}", self.name)
            };
            self.errors.push(format!("{path}: unknown key"));
        }
    }

    fn take_table(&mut self, key: &str) -> Option<Table> {
        match self.table.remove(key)? {
            Value::Table(t) => Some(t),
            _ => {
                self.errors
                    .push(format!("{key}: expected a [{key}] section"));
                None
            }
        }
    }

    fn take_str(&mut self, key: &str, default: Option<&str>) -> Option<String> {
        match self.table.remove(key) {
            Some(Value::String(s)) => Some(s),
            Some(_) => {
                self.errors
                    .push(format!("{}: expected a string", self.path(key)));
                default.map(str::to_string)
            }
            None => {
                if default.is_none() {
                    self.errors.push(format!("{}: required", self.path(key)));
                }
                default.map(str::to_string)
            }
        }
    }

    fn take_bool(&mut self, key: &str, default: bool) -> bool {
        match self.table.remove(key) {
            Some(Value::Boolean(b)) => b,
            Some(_) => {
                self.errors
                    .push(format!("{}: expected true or false", self.path(key)));
                default
            }
            None => default,
        }
    }

    fn take_u64(&mut self, key: &str, default: u64) -> u64 {
        match self.table.remove(key) {
            Some(Value::Integer(i)) if i >= 0 => i as u64,
            Some(_) => {
                self.errors.push(format!(
                    "{}: expected a nonnegative integer, range [0, {}]",
                    self.path(key),
                    i64::MAX
                ));
                default
            }
            None => default,
        }
    }

    fn take_usize(&mut self, key: &str, default: usize, min: usize, max: usize) -> usize {
        match self.table.remove(key) {
            Some(Value::Integer(i)) if i >= 0 && (min..=max).contains(&(i as usize)) => i as usize,
            Some(v) => {
                let max_text = if max == usize::MAX {
                    "inf".to_string()
                } else {
                    max.to_string()
                };
                self.errors.push(format!(
                    "{}: got {v}, expected an integer in [{min}, {max_text}]",
                    self.path(key)
                ));
                default
            }
            None => default,
        }
    }

    fn take_opt_f64(&mut self, key: &str) -> Option<f64> {
        match self.table.remove(key) {
            Some(Value::Float(f)) => Some(f),
            Some(Value::Integer(i)) => Some(i as f64),
            Some(_) => {
                self.errors
                    .push(format!("{}: expected a number", self.path(key)));
                None
            }
            None => None,
        }
    }

    fn take_f64(&mut self, key: &str, default: f64, range: Range) -> f64 {
        match self.table.remove(key) {
            Some(v) => match number(&v) {
                Some(x) if range.contains(x) => x,
                Some(x) => {
                    self.errors.push(format!(
                        "{}: got {x}, expected a value in {range}",
                        self.path(key)
                    ));
                    default
                }
                None => {
                    self.errors
                        .push(format!("{}: expected a number in {range}", self.path(key)));
                    default
                }
            },
            None => default,
        }
    }

    fn take_array(&mut self, key: &str) -> Option<Vec<Value>> {
        match self.table.remove(key)? {
            Value::Array(a) => Some(a),
            _ => {
                self.errors
                    .push(format!("{}: expected an array", self.path(key)));
                None
            }
        }
    }

    /// A list of numbers; `increasing` also demands strictly increasing positive entries.
    fn take_f64_list(&mut self, key: &str, increasing: bool) -> Vec<f64> {
        let Some(items) = self.take_array(key) else {
            return Vec::new();
        };
        let values: Option<Vec<f64>> = items.iter().map(number).collect();
        let Some(values) = values else {
            self.errors
                .push(format!("{}: expected an array of numbers", self.path(key)));
            return Vec::new();
        };
        if increasing
            && (values.windows(2).any(|w| w[1] <= w[0]) || values.iter().any(|&v| !(v > 0.0)))
        {
            self.errors.push(format!(
                "{}: entries must be positive and strictly increasing",
                self.path(key)
            ));
            return Vec::new();
        }
        values
    }

    fn take_f64_array3(&mut self, key: &str) -> [f64; 3] {
        let Some(items) = self.take_array(key) else {
            return [0.0; 3];
        };
        let values: Option<Vec<f64>> = items.iter().map(number).collect();
        match values {
            Some(v) if v.len() == 3 => [v[0], v[1], v[2]],
            _ => {
                self.errors.push(format!(
                    "{}: expected an array of 3 numbers",
                    self.path(key)
                ));
                [0.0; 3]
            }
        }
    }

    fn take_i64_array3(&mut self, key: &str) -> [i64; 3] {
        let Some(items) = self.take_array(key) else {
            return [1, 0, 0];
        };
        let values: Option<Vec<i64>> = items.iter().map(Value::as_integer).collect();
        match values {
            Some(v) if v.len() == 3 => [v[0], v[1], v[2]],
            _ => {
                self.errors.push(format!(
                    "{}: expected an array of 3 integers",
                    self.path(key)
                ));
                [1, 0, 0]
            }
        }
    }
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config("kind = \"linear-decay\"").unwrap();
        assert_eq!(c.kind, ExperimentKind::LinearDecay);
        assert!(c.model.is_linear());
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(
            c.run_id(),
            parse_config("kind = \"linear-decay\"").unwrap().run_id()
        );
    }

    #[test]
    fn zero_dt_names_field_and_range() {
        let err = parse_config("kind = \"nonlinear-decay\"\n[solver]\ndt = 0.0\n").unwrap_err();
        let HarnessError::Config(list) = err else {
            panic!("expected config error")
        };
        assert_eq!(list.len(), 1);
        assert!(
            list[0].contains("solver.dt") && list[0].contains("(0, 1)"),
            "{list:?}"
        );
    }

    #[test]
    fn all_violations_are_reported() {
        let text = "kind = \"duhamel\"\ncolour = 1\n[grid]\npoints = 48\n[solver]\ndt = -1\nsnapshot_stride = 3\ntypo = true\n";
        let HarnessError::Config(list) = parse_config(text).unwrap_err() else {
            panic!("expected config error")
        };
        for needle in [
            "colour",
            "grid.points",
            "solver.dt",
            "solver.typo",
            "snapshot_stride",
        ] {
            assert!(
                list.iter().any(|e| e.contains(needle)),
                "{needle} missing from {list:?}"
            );
        }
    }

    #[test]
    fn serialization_round_trips() {
        let text = r#"
kind = "ensemble"
seed = 11
[model]
symbol = "fractional"
alpha = 0.75
[initial]
kind = "plane-modulated"
modes = [2, 0, -1]
center = [0.5, 0, 0]
[analysis]
amplitudes = [0.1, 0.3]
[ensemble]
randomization = "all-ones"
"#;
        let c = parse_config(text).unwrap();
        let again = parse_config(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
    }

    #[test]
    fn output_dir_does_not_change_hash() {
        let mut a = ExperimentConfig::new(ExperimentKind::NonlinearDecay);
        let h = a.hash();
        a.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), h);
        a.seed = 3;
        assert_ne!(a.hash(), h);
    }
}
