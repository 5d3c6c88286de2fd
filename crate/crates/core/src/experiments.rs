//! Scenario files, parameter sweeps and deterministic CSV/JSON tables.
//!
//! A scenario is one JSON document. Every sweep point becomes one row that echoes its
//! inputs, followed by outputs, tolerances, pass/fail flags and a status cell.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::algebra::{verify_deformed_algebra, AlgebraReport};
use crate::bell::{
    bell_diagonal, bell_state, chsh_closed_form, chsh_value, classical_threshold, horodecki_bound,
    mean_x_squared, optimize_settings, pauli_assemble, random_state, standard_settings,
    BellDiagonalWeights, BellKind, OptimizerConfig, PositionalFactors, StateDescriptor,
    ThresholdReport, TwoQubitState, TSIRELSON,
};
use crate::deformation::{uncertainty_report, DeformationModel};
use crate::error::{Error, Result};
use crate::grid::{gaussian_packet, Grid, WaveFunction, TRUNCATION_WIDTHS};

/// Tolerance on the deformed uncertainty gap.
pub const GAP_TOLERANCE: f64 = 1e-6;
/// Tolerance between the trace path and the closed form.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-10;
/// Slack on `S ≤ 2√2 g_A g_B`.
pub const BOUND_TOLERANCE: f64 = 1e-9;
/// Agreement between the optimizer and the Horodecki value.
pub const HORODECKI_TOLERANCE: f64 = 1e-6;
/// Slack on `S(optimized) ≥ S(fixed settings)`.
pub const STANDARD_SETTINGS_TOLERANCE: f64 = 1e-9;
/// Tolerance on `S = 2` at the threshold.
pub const THRESHOLD_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    VerifyAlgebra,
    UncertaintySweep,
    Chsh,
    Threshold,
    Optimize,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ScenarioKind::VerifyAlgebra => "verify-algebra",
            ScenarioKind::UncertaintySweep => "uncertainty-sweep",
            ScenarioKind::Chsh => "chsh",
            ScenarioKind::Threshold => "threshold",
            ScenarioKind::Optimize => "optimize",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub alpha_tilde: f64,
    pub length_scale_m: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha_tilde: 0.0,
            length_scale_m: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub dims: usize,
    pub points_per_axis: usize,
    pub extent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketParams {
    pub center: Vec<f64>,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Bell {
        bell: BellKind,
    },
    BellDiagonal {
        weights: [f64; 4],
    },
    Generic {
        pauli_coeffs: [[f64; 4]; 4],
    },
    /// `count` mixed states drawn from the scenario seed.
    Random {
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    AlphaTilde,
    /// First coordinate of party A's packet center.
    DistanceA,
    /// First coordinate of party B's packet center.
    DistanceB,
    WidthA,
    WidthB,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SweepParameter::AlphaTilde => "alpha_tilde",
            SweepParameter::DistanceA => "distance_a",
            SweepParameter::DistanceB => "distance_b",
            SweepParameter::WidthA => "width_a",
            SweepParameter::WidthB => "width_b",
        };
        f.write_str(name)
    }
}

/// Inclusive linear range with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        (0..self.steps)
            .map(|k| self.start + span * k as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerParams {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            restarts: d.restarts,
            max_iter: d.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub kind: Option<ScenarioKind>,
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default)]
    pub grid: Option<GridParams>,
    #[serde(default)]
    pub party_a: Option<PacketParams>,
    #[serde(default)]
    pub party_b: Option<PacketParams>,
    #[serde(default)]
    pub state: Option<StateSpec>,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub optimizer: Option<OptimizerParams>,
    /// Axis (0-based) of the uncertainty relation.
    #[serde(default)]
    pub axis: Option<usize>,
    #[serde(default)]
    pub max_alpha_order: Option<u8>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Built-in scenario used when no configuration file is given.
    pub fn default_for(kind: ScenarioKind) -> Self {
        let mut s = Scenario {
            kind: Some(kind),
            model: ModelParams::default(),
            grid: None,
            party_a: None,
            party_b: None,
            state: None,
            sweep: Vec::new(),
            seed: 0,
            optimizer: None,
            axis: None,
            max_alpha_order: None,
            output: None,
        };
        match kind {
            ScenarioKind::VerifyAlgebra => s.max_alpha_order = Some(2),
            ScenarioKind::UncertaintySweep => {
                s.model.alpha_tilde = 1e-3;
                s.grid = Some(GridParams {
                    dims: 3,
                    points_per_axis: 32,
                    extent: 19.5,
                });
                s.party_a = Some(PacketParams {
                    center: vec![0.0; 3],
                    width: 1.0,
                });
                s.axis = Some(0);
            }
            ScenarioKind::Chsh | ScenarioKind::Optimize => {
                s.state = Some(StateSpec::Bell {
                    bell: BellKind::PsiMinus,
                });
            }
            ScenarioKind::Threshold => s.model.alpha_tilde = -1e-52,
        }
        s
    }

    pub fn kind(&self) -> Result<ScenarioKind> {
        self.kind
            .ok_or_else(|| Error::Validation(vec!["scenario kind is missing".into()]))
    }
}

/// One sweep point with every swept parameter substituted.
#[derive(Debug, Clone, PartialEq)]
struct Point {
    alpha_tilde: f64,
    party_a: Option<PacketParams>,
    party_b: Option<PacketParams>,
}

fn allowed_parameters(kind: ScenarioKind) -> &'static [SweepParameter] {
    use SweepParameter::*;
    match kind {
        ScenarioKind::VerifyAlgebra => &[],
        ScenarioKind::Threshold => &[AlphaTilde],
        ScenarioKind::UncertaintySweep => &[AlphaTilde, DistanceA, WidthA],
        ScenarioKind::Chsh | ScenarioKind::Optimize => {
            &[AlphaTilde, DistanceA, DistanceB, WidthA, WidthB]
        }
    }
}

fn apply_parameter(point: &mut Point, parameter: SweepParameter, value: f64) {
    let set_center = |p: &mut Option<PacketParams>| {
        if let Some(p) = p {
            if let Some(c) = p.center.first_mut() {
                *c = value;
            }
        }
    };
    match parameter {
        SweepParameter::AlphaTilde => point.alpha_tilde = value,
        SweepParameter::DistanceA => set_center(&mut point.party_a),
        SweepParameter::DistanceB => set_center(&mut point.party_b),
        SweepParameter::WidthA => {
            if let Some(p) = &mut point.party_a {
                p.width = value;
            }
        }
        SweepParameter::WidthB => {
            if let Some(p) = &mut point.party_b {
                p.width = value;
            }
        }
    }
}

fn describe(assignment: &[(SweepParameter, f64)]) -> String {
    assignment
        .iter()
        .map(|(p, v)| format!("{p}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn check_packet(
    name: &str,
    packet: &PacketParams,
    grid: &GridParams,
    errors: &mut Vec<String>,
    context: &str,
) {
    if packet.center.len() != grid.dims {
        errors.push(format!(
            "{context}{name}.center has {} components for a {}-dimensional grid",
            packet.center.len(),
            grid.dims
        ));
        return;
    }
    if !(packet.width.is_finite() && packet.width > 0.0) {
        errors.push(format!(
            "{context}{name}.width must be positive, got {}",
            packet.width
        ));
        return;
    }
    let half = 0.5 * grid.extent;
    for (axis, c) in packet.center.iter().enumerate() {
        let reach = c.abs() + TRUNCATION_WIDTHS * packet.width;
        if !c.is_finite() || reach > half {
            errors.push(format!(
                "{context}{name} violates the truncation guard on axis {axis}: |c| + {TRUNCATION_WIDTHS}w = {reach} > extent/2 = {half}"
            ));
        }
    }
}

/// Validated scenario ready to run.
struct Plan {
    kind: ScenarioKind,
    grid: Option<Grid>,
    points: Vec<(Vec<(SweepParameter, f64)>, Point)>,
    states: Vec<(String, TwoQubitState, Option<StateDescriptor>)>,
}

fn resolve_states(
    spec: &StateSpec,
    seed: u64,
) -> Result<Vec<(String, TwoQubitState, Option<StateDescriptor>)>> {
    Ok(match spec {
        StateSpec::Bell { bell } => vec![(bell.to_string(), bell_state(*bell), None)],
        StateSpec::BellDiagonal { weights } => {
            let w = BellDiagonalWeights::new(*weights)?;
            vec![(
                "bell_diagonal".into(),
                bell_diagonal(&w),
                Some(StateDescriptor::BellDiagonal { weights: w }),
            )]
        }
        StateSpec::Generic { pauli_coeffs } => vec![(
            "generic".into(),
            pauli_assemble(pauli_coeffs)?,
            Some(StateDescriptor::Generic {
                pauli_coeffs: *pauli_coeffs,
            }),
        )],
        StateSpec::Random { count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..*count)
                .map(|k| (format!("random_{k}"), random_state(&mut rng), None))
                .collect()
        }
    })
}

/// Checks every parameter of the scenario, reporting all problems at once.
fn plan(scenario: &Scenario) -> Result<Plan> {
    let kind = scenario.kind()?;
    let mut errors = Vec::new();
    let m = scenario.model;
    if !(m.length_scale_m.is_finite() && m.length_scale_m > 0.0) {
        errors.push(format!(
            "model.length_scale_m must be positive, got {}",
            m.length_scale_m
        ));
    }
    let grid = match (&scenario.grid, kind) {
        (Some(g), ScenarioKind::Chsh | ScenarioKind::Optimize | ScenarioKind::UncertaintySweep) => {
            match Grid::new(g.dims, g.points_per_axis, g.extent) {
                Ok(grid) => Some(grid),
                Err(e) => {
                    errors.push(format!("grid: {e}"));
                    None
                }
            }
        }
        (Some(_), _) => {
            errors.push(format!("grid is not used by {kind} scenarios"));
            None
        }
        (None, _) => None,
    };
    if kind == ScenarioKind::UncertaintySweep {
        match &scenario.grid {
            None => errors.push("uncertainty-sweep requires a grid".into()),
            Some(g) if g.dims != 3 => errors.push(format!(
                "uncertainty-sweep requires a 3D grid, got dims={}",
                g.dims
            )),
            _ => {}
        }
        if scenario.party_a.is_none() {
            errors.push("uncertainty-sweep requires party_a".into());
        }
        if scenario.party_b.is_some() {
            errors.push("party_b is not used by uncertainty-sweep".into());
        }
        if let Some(axis) = scenario.axis {
            if axis >= 3 {
                errors.push(format!("axis {axis} out of range 0..3"));
            }
        }
    } else if scenario.axis.is_some() {
        errors.push(format!("axis is not used by {kind} scenarios"));
    }
    if matches!(kind, ScenarioKind::Chsh | ScenarioKind::Optimize) {
        let packets = [scenario.party_a.is_some(), scenario.party_b.is_some()];
        if scenario.grid.is_some() != (packets == [true, true]) || packets[0] != packets[1] {
            errors.push("grid, party_a and party_b must be given together".into());
        }
    } else if kind != ScenarioKind::UncertaintySweep
        && (scenario.party_a.is_some() || scenario.party_b.is_some())
    {
        errors.push(format!("party packets are not used by {kind} scenarios"));
    }
    if kind == ScenarioKind::VerifyAlgebra {
        if let Some(order) = scenario.max_alpha_order {
            if order > 2 {
                errors.push(format!("max_alpha_order must be at most 2, got {order}"));
            }
        }
    } else if scenario.max_alpha_order.is_some() {
        errors.push(format!("max_alpha_order is not used by {kind} scenarios"));
    }
    let states = match (&scenario.state, kind) {
        (Some(spec), ScenarioKind::Chsh | ScenarioKind::Optimize) => {
            match resolve_states(spec, scenario.seed) {
                Ok(s) if s.is_empty() => {
                    errors.push("state: random count must be at least 1".into());
                    Vec::new()
                }
                Ok(s) => s,
                Err(e) => {
                    errors.push(format!("state: {e}"));
                    Vec::new()
                }
            }
        }
        (None, ScenarioKind::Chsh | ScenarioKind::Optimize) => {
            errors.push(format!("{kind} requires a state"));
            Vec::new()
        }
        (Some(_), _) => {
            errors.push(format!("state is not used by {kind} scenarios"));
            Vec::new()
        }
        (None, _) => Vec::new(),
    };
    if let Some(opt) = &scenario.optimizer {
        if kind != ScenarioKind::Optimize {
            errors.push(format!("optimizer is not used by {kind} scenarios"));
        }
        if opt.restarts == 0 {
            errors.push("optimizer.restarts must be at least 1".into());
        }
        if opt.max_iter == 0 {
            errors.push("optimizer.max_iter must be at least 1".into());
        }
    }

    let allowed = allowed_parameters(kind);
    let mut axes_ok = true;
    for (k, axis) in scenario.sweep.iter().enumerate() {
        if !allowed.contains(&axis.parameter) {
            errors.push(format!(
                "sweep[{k}]: parameter {} is not sweepable for {kind}",
                axis.parameter
            ));
            axes_ok = false;
        }
        if axis.steps == 0 || !axis.start.is_finite() || !axis.stop.is_finite() {
            errors.push(format!(
                "sweep[{k}]: needs finite bounds and at least one step"
            ));
            axes_ok = false;
        }
        if scenario.sweep[..k]
            .iter()
            .any(|a| a.parameter == axis.parameter)
        {
            errors.push(format!(
                "sweep[{k}]: parameter {} swept twice",
                axis.parameter
            ));
            axes_ok = false;
        }
    }

    let base = Point {
        alpha_tilde: m.alpha_tilde,
        party_a: scenario.party_a.clone(),
        party_b: scenario.party_b.clone(),
    };
    let mut points = vec![(Vec::new(), base)];
    if axes_ok {
        for axis in &scenario.sweep {
            let values = axis.values();
            points = points
                .into_iter()
                .flat_map(|(assignment, point)| {
                    values.iter().map(move |v| {
                        let mut next = point.clone();
                        apply_parameter(&mut next, axis.parameter, *v);
                        let mut a = assignment.clone();
                        a.push((axis.parameter, *v));
                        (a, next)
                    })
                })
                .collect();
        }
    }

    for (assignment, point) in &points {
        let context = if assignment.is_empty() {
            String::new()
        } else {
            format!("sweep point ({}): ", describe(assignment))
        };
        let model = if kind == ScenarioKind::Threshold {
            if !point.alpha_tilde.is_finite() {
                errors.push(format!("{context}alpha_tilde must be finite"));
            }
            None
        } else {
            match DeformationModel::new(point.alpha_tilde, m.length_scale_m.max(f64::MIN_POSITIVE))
            {
                Ok(model) => Some(model),
                Err(e) => {
                    errors.push(format!("{context}{e}"));
                    None
                }
            }
        };
        if let Some(g) = &scenario.grid {
            for (name, packet) in [("party_a", &point.party_a), ("party_b", &point.party_b)] {
                if let Some(packet) = packet {
                    check_packet(name, packet, g, &mut errors, &context);
                }
            }
        }
        if matches!(kind, ScenarioKind::Chsh | ScenarioKind::Optimize)
            && scenario.grid.is_none()
            && point.alpha_tilde != 0.0
        {
            errors.push(format!(
                "{context}a deformed {kind} scenario needs grid, party_a and party_b"
            ));
        }
        if kind == ScenarioKind::UncertaintySweep {
            if let (Some(model), Some(grid)) = (model, &grid) {
                if let Err(e) = model.check_grid(grid) {
                    errors.push(format!("{context}{e}"));
                }
            }
        }
    }
    if !errors.is_empty() {
        return Err(Error::Validation(errors));
    }
    Ok(Plan {
        kind,
        grid,
        points,
        states,
    })
}

/// Checks a scenario without running it.
pub fn validate_scenario(scenario: &Scenario) -> Result<()> {
    plan(scenario).map(|_| ())
}

/// Cell of a result table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Number(f64),
    Integer(i64),
    Text(String),
    Flag(bool),
    Vector(Vec<f64>),
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Empty => serializer.serialize_none(),
            Cell::Number(v) if v.is_finite() => serializer.serialize_f64(*v),
            Cell::Number(v) => serializer.serialize_str(&format_significant(*v)),
            Cell::Integer(v) => serializer.serialize_i64(*v),
            Cell::Text(s) => serializer.serialize_str(s),
            Cell::Flag(b) => serializer.serialize_bool(*b),
            Cell::Vector(v) => v.serialize(serializer),
        }
    }
}

impl Cell {
    fn csv_text(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Number(v) => format_significant(*v),
            Cell::Integer(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
            Cell::Vector(v) => v
                .iter()
                .map(|x| format_significant(*x))
                .collect::<Vec<_>>()
                .join(";"),
        }
    }
}

/// `%.15g`-style formatting: 15 significant digits, trailing zeros trimmed.
pub fn format_significant(value: f64) -> String {
    const DIGITS: i32 = 15;
    if value.is_nan() {
        return "nan".into();
    }
    if value.is_infinite() {
        return if value > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if value == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, value);
    let (mantissa, exponent) = sci.split_once('e').expect("exponent present");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exponent < -5 || exponent >= DIGITS {
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exponent.abs())
    } else {
        let decimals = (DIGITS - 1 - exponent).max(0) as usize;
        trim(&format!("{value:.decimals$}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnGroup {
    Input,
    Output,
    Tolerance,
    Flag,
    Status,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: &'static str,
    pub group: ColumnGroup,
}

/// Rows in sweep order, columns fixed per scenario kind.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub algebra_report: Option<AlgebraReport>,
}

struct JsonRow<'a> {
    columns: &'a [Column],
    cells: &'a [Cell],
}

impl Serialize for JsonRow<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.columns.len()))?;
        for (c, v) in self.columns.iter().zip(self.cells) {
            map.serialize_entry(c.name, v)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct JsonTable<'a> {
    kind: ScenarioKind,
    seed: u64,
    columns: &'a [Column],
    rows: Vec<JsonRow<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    algebra_report: Option<&'a AlgebraReport>,
    contract_failures: usize,
}

impl ResultTable {
    fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Cells of one column.
    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.column_index(name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    /// Numeric values of one column; non-numeric cells become NaN.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        Some(
            self.column(name)?
                .into_iter()
                .map(|c| match c {
                    Cell::Number(v) => *v,
                    Cell::Integer(v) => *v as f64,
                    _ => f64::NAN,
                })
                .collect(),
        )
    }

    /// Failed flags plus rows whose status is not `ok`.
    pub fn contract_failures(&self) -> usize {
        let mut failures = 0;
        for row in &self.rows {
            for (c, v) in self.columns.iter().zip(row) {
                match (c.group, v) {
                    (ColumnGroup::Flag, Cell::Flag(false)) => failures += 1,
                    (ColumnGroup::Status, Cell::Text(s)) if s != "ok" => failures += 1,
                    _ => {}
                }
            }
        }
        if let Some(report) = &self.algebra_report {
            if !report.all_passed() {
                failures += 1;
            }
        }
        failures
    }

    pub fn all_passed(&self) -> bool {
        self.contract_failures() == 0
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| Error::Config(format!("csv output failed: {e}"));
        writer
            .write_record(self.columns.iter().map(|c| c.name))
            .map_err(io)?;
        for row in &self.rows {
            writer
                .write_record(row.iter().map(Cell::csv_text))
                .map_err(io)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::Config(format!("csv output failed: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Config(format!("csv output is not UTF-8: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        let table = JsonTable {
            kind: self.kind,
            seed: self.seed,
            columns: &self.columns,
            rows: self
                .rows
                .iter()
                .map(|cells| JsonRow {
                    columns: &self.columns,
                    cells,
                })
                .collect(),
            algebra_report: self.algebra_report.as_ref(),
            contract_failures: self.contract_failures(),
        };
        let mut text = serde_json::to_string_pretty(&table)
            .map_err(|e| Error::Config(format!("json output failed: {e}")))?;
        text.push('\n');
        Ok(text)
    }
}

fn columns(kind: ScenarioKind) -> Vec<Column> {
    use ColumnGroup::*;
    let spec: &[(&'static str, ColumnGroup)] = match kind {
        ScenarioKind::VerifyAlgebra => &[
            ("seed", Input),
            ("max_alpha_order", Input),
            ("identity", Input),
            ("indices", Input),
            ("alpha_order", Input),
            ("required_zero", Input),
            ("residual_terms", Output),
            ("residual", Output),
            ("theta_coefficient", Output),
            ("passed", Flag),
            ("status", Status),
        ],
        ScenarioKind::UncertaintySweep => &[
            ("seed", Input),
            ("alpha_tilde", Input),
            ("length_scale_m", Input),
            ("dims", Input),
            ("points_per_axis", Input),
            ("extent", Input),
            ("axis", Input),
            ("center_a", Input),
            ("width_a", Input),
            ("delta_x", Output),
            ("delta_p", Output),
            ("product", Output),
            ("bound", Output),
            ("commutator_bound", Output),
            ("gap", Output),
            ("commutator_gap", Output),
            ("tol_gap", Tolerance),
            ("gap_ok", Flag),
            ("commutator_ok", Flag),
            ("status", Status),
        ],
        ScenarioKind::Chsh => &[
            ("seed", Input),
            ("state", Input),
            ("alpha_tilde", Input),
            ("length_scale_m", Input),
            ("dims", Input),
            ("points_per_axis", Input),
            ("extent", Input),
            ("center_a", Input),
            ("width_a", Input),
            ("center_b", Input),
            ("width_b", Input),
            ("x_sq_a", Output),
            ("x_sq_b", Output),
            ("g_a", Output),
            ("g_b", Output),
            ("s_value", Output),
            ("s_closed_form", Output),
            ("s_bound", Output),
            ("alpha_x_sq_b", Output),
            ("nonlocal", Output),
            ("within_max_length", Output),
            ("tol_closed_form", Tolerance),
            ("tol_bound", Tolerance),
            ("closed_form_ok", Flag),
            ("bound_ok", Flag),
            ("status", Status),
        ],
        ScenarioKind::Threshold => &[
            ("seed", Input),
            ("alpha_tilde", Input),
            ("length_scale_m", Input),
            ("result", Output),
            ("x_squared_internal", Output),
            ("distance_internal", Output),
            ("distance_si_m", Output),
            ("s_at_threshold", Output),
            ("tol_threshold", Tolerance),
            ("crossing_ok", Flag),
            ("status", Status),
        ],
        ScenarioKind::Optimize => &[
            ("seed", Input),
            ("state", Input),
            ("alpha_tilde", Input),
            ("length_scale_m", Input),
            ("dims", Input),
            ("points_per_axis", Input),
            ("extent", Input),
            ("center_a", Input),
            ("width_a", Input),
            ("center_b", Input),
            ("width_b", Input),
            ("restarts", Input),
            ("max_iter", Input),
            ("g_a", Output),
            ("g_b", Output),
            ("s_optimal", Output),
            ("s_fixed_settings", Output),
            ("horodecki", Output),
            ("iterations", Output),
            ("certified", Output),
            ("a", Output),
            ("a_prime", Output),
            ("b", Output),
            ("b_prime", Output),
            ("tol_horodecki", Tolerance),
            ("tol_fixed_settings", Tolerance),
            ("horodecki_ok", Flag),
            ("fixed_settings_ok", Flag),
            ("status", Status),
        ],
    };
    spec.iter()
        .map(|&(name, group)| Column { name, group })
        .collect()
}

/// Orders named cells by the column list; absent names become empty cells.
fn assemble(columns: &[Column], mut cells: Vec<(&'static str, Cell)>) -> Vec<Cell> {
    debug_assert!(
        cells
            .iter()
            .all(|(n, _)| columns.iter().any(|c| c.name == *n)),
        "cell without column"
    );
    columns
        .iter()
        .map(|c| {
            cells
                .iter()
                .position(|(n, _)| *n == c.name)
                .map(|k| cells.swap_remove(k).1)
                .unwrap_or(Cell::Empty)
        })
        .collect()
}

fn num(v: f64) -> Cell {
    Cell::Number(v)
}

fn int(v: usize) -> Cell {
    Cell::Integer(v as i64)
}

fn seed_cell(seed: u64) -> Cell {
    Cell::Integer(seed as i64)
}

fn grid_inputs(grid: &Option<Grid>, cells: &mut Vec<(&'static str, Cell)>) {
    if let Some(g) = grid {
        cells.push(("dims", int(g.dims())));
        cells.push(("points_per_axis", int(g.points_per_axis())));
        cells.push(("extent", num(g.extent())));
    }
}

fn packet_inputs(point: &Point, cells: &mut Vec<(&'static str, Cell)>) {
    if let Some(p) = &point.party_a {
        cells.push(("center_a", Cell::Vector(p.center.clone())));
        cells.push(("width_a", num(p.width)));
    }
    if let Some(p) = &point.party_b {
        cells.push(("center_b", Cell::Vector(p.center.clone())));
        cells.push(("width_b", num(p.width)));
    }
}

fn packets(grid: &Grid, point: &Point) -> Result<(WaveFunction, WaveFunction)> {
    let a = point
        .party_a
        .as_ref()
        .ok_or_else(|| Error::Usage("party_a missing".into()))?;
    let b = point
        .party_b
        .as_ref()
        .ok_or_else(|| Error::Usage("party_b missing".into()))?;
    Ok((
        gaussian_packet(grid, &a.center, a.width)?,
        gaussian_packet(grid, &b.center, b.width)?,
    ))
}

/// Positional factors and `<x²>` per party; undeformed when no packets are configured.
fn factors_for(
    model: &DeformationModel,
    grid: &Option<Grid>,
    point: &Point,
) -> Result<(PositionalFactors, Option<(f64, f64)>)> {
    match grid {
        None => Ok((PositionalFactors::UNDEFORMED, None)),
        Some(grid) => {
            let (a, b) = packets(grid, point)?;
            Ok((
                PositionalFactors::from_packets(model, &a, &b),
                Some((mean_x_squared(&a), mean_x_squared(&b))),
            ))
        }
    }
}

fn finish(
    columns: &[Column],
    mut inputs: Vec<(&'static str, Cell)>,
    outcome: Result<Vec<(&'static str, Cell)>>,
) -> Vec<Cell> {
    match outcome {
        Ok(outputs) => {
            inputs.extend(outputs);
            inputs.push(("status", Cell::Text("ok".into())));
        }
        Err(e) => inputs.push(("status", Cell::Text(format!("error: {e}")))),
    }
    assemble(columns, inputs)
}

fn uncertainty_row(
    scenario: &Scenario,
    plan: &Plan,
    point: &Point,
    columns: &[Column],
) -> Vec<Cell> {
    let axis = scenario.axis.unwrap_or(0);
    let mut inputs = vec![
        ("seed", seed_cell(scenario.seed)),
        ("alpha_tilde", num(point.alpha_tilde)),
        ("length_scale_m", num(scenario.model.length_scale_m)),
        ("axis", int(axis)),
    ];
    grid_inputs(&plan.grid, &mut inputs);
    packet_inputs(point, &mut inputs);
    let outcome = (|| {
        let grid = plan
            .grid
            .as_ref()
            .ok_or_else(|| Error::Usage("grid missing".into()))?;
        let model = DeformationModel::new(point.alpha_tilde, scenario.model.length_scale_m)?;
        let a = point
            .party_a
            .as_ref()
            .ok_or_else(|| Error::Usage("party_a missing".into()))?;
        let psi = gaussian_packet(grid, &a.center, a.width)?;
        let r = uncertainty_report(&model, &psi, axis)?;
        let product = r.delta_x * r.delta_p;
        Ok(vec![
            ("delta_x", num(r.delta_x)),
            ("delta_p", num(r.delta_p)),
            ("product", num(product)),
            ("bound", num(r.bound)),
            ("commutator_bound", num(r.commutator_bound)),
            ("gap", num(r.gap)),
            ("commutator_gap", num(product - r.commutator_bound)),
            ("tol_gap", num(GAP_TOLERANCE)),
            ("gap_ok", Cell::Flag(r.gap >= -GAP_TOLERANCE)),
            (
                "commutator_ok",
                Cell::Flag(product - r.commutator_bound >= -GAP_TOLERANCE),
            ),
        ])
    })();
    finish(columns, inputs, outcome)
}

fn state_inputs(
    scenario: &Scenario,
    plan: &Plan,
    point: &Point,
    label: &str,
) -> Vec<(&'static str, Cell)> {
    let mut inputs = vec![
        ("seed", seed_cell(scenario.seed)),
        ("state", Cell::Text(label.to_string())),
        ("alpha_tilde", num(point.alpha_tilde)),
        ("length_scale_m", num(scenario.model.length_scale_m)),
    ];
    grid_inputs(&plan.grid, &mut inputs);
    packet_inputs(point, &mut inputs);
    inputs
}

fn chsh_row(
    scenario: &Scenario,
    plan: &Plan,
    point: &Point,
    state: &(String, TwoQubitState, Option<StateDescriptor>),
    columns: &[Column],
) -> Vec<Cell> {
    let inputs = state_inputs(scenario, plan, point, &state.0);
    let outcome = (|| {
        let model = DeformationModel::new(point.alpha_tilde, scenario.model.length_scale_m)?;
        let (factors, x_sq) = factors_for(&model, &plan.grid, point)?;
        let rho = &state.1;
        let s = chsh_value(rho, &standard_settings(), factors);
        let descriptor = state.2.unwrap_or(StateDescriptor::Generic {
            pauli_coeffs: *rho.pauli_coeffs(),
        });
        // S carries an absolute value, so the factors enter through |g_A g_B|.
        let closed = factors.product().abs() * chsh_closed_form(&descriptor);
        let bound = TSIRELSON * factors.product();
        let mut out = vec![
            ("g_a", num(factors.g_a)),
            ("g_b", num(factors.g_b)),
            ("s_value", num(s)),
            ("s_closed_form", num(closed)),
            ("s_bound", num(bound)),
            ("nonlocal", Cell::Flag(s > 2.0)),
            (
                "within_max_length",
                Cell::Flag(factors.g_a > 0.0 && factors.g_b > 0.0),
            ),
            ("tol_closed_form", num(CLOSED_FORM_TOLERANCE)),
            ("tol_bound", num(BOUND_TOLERANCE)),
            (
                "closed_form_ok",
                Cell::Flag((s - closed).abs() <= CLOSED_FORM_TOLERANCE),
            ),
            ("bound_ok", Cell::Flag(s <= bound.abs() + BOUND_TOLERANCE)),
        ];
        if let Some((xa, xb)) = x_sq {
            out.push(("x_sq_a", num(xa)));
            out.push(("x_sq_b", num(xb)));
            out.push(("alpha_x_sq_b", num(model.alpha().abs() * xb)));
        }
        Ok(out)
    })();
    finish(columns, inputs, outcome)
}

fn optimize_row(
    scenario: &Scenario,
    plan: &Plan,
    point: &Point,
    state: &(String, TwoQubitState, Option<StateDescriptor>),
    columns: &[Column],
) -> Vec<Cell> {
    let params = scenario.optimizer.unwrap_or_default();
    let mut inputs = state_inputs(scenario, plan, point, &state.0);
    inputs.push(("restarts", int(params.restarts)));
    inputs.push(("max_iter", int(params.max_iter)));
    let outcome = (|| {
        let model = DeformationModel::new(point.alpha_tilde, scenario.model.length_scale_m)?;
        let (factors, _) = factors_for(&model, &plan.grid, point)?;
        let config = OptimizerConfig {
            restarts: params.restarts,
            max_iter: params.max_iter,
            seed: scenario.seed,
            ..OptimizerConfig::default()
        };
        let rho = &state.1;
        let best = optimize_settings(rho, factors, &config)?;
        let fixed = chsh_value(rho, &standard_settings(), factors);
        let horodecki = horodecki_bound(rho, factors);
        Ok(vec![
            ("g_a", num(factors.g_a)),
            ("g_b", num(factors.g_b)),
            ("s_optimal", num(best.value)),
            ("s_fixed_settings", num(fixed)),
            ("horodecki", num(horodecki)),
            ("iterations", int(best.iterations)),
            ("certified", Cell::Flag(best.certified)),
            ("a", Cell::Vector(best.settings.a.to_vec())),
            ("a_prime", Cell::Vector(best.settings.a_prime.to_vec())),
            ("b", Cell::Vector(best.settings.b.to_vec())),
            ("b_prime", Cell::Vector(best.settings.b_prime.to_vec())),
            ("tol_horodecki", num(HORODECKI_TOLERANCE)),
            ("tol_fixed_settings", num(STANDARD_SETTINGS_TOLERANCE)),
            (
                "horodecki_ok",
                Cell::Flag((best.value - horodecki).abs() <= HORODECKI_TOLERANCE),
            ),
            (
                "fixed_settings_ok",
                Cell::Flag(best.value >= fixed - STANDARD_SETTINGS_TOLERANCE),
            ),
        ])
    })();
    finish(columns, inputs, outcome)
}

fn threshold_row(scenario: &Scenario, point: &Point, columns: &[Column]) -> Vec<Cell> {
    let inputs = vec![
        ("seed", seed_cell(scenario.seed)),
        ("alpha_tilde", num(point.alpha_tilde)),
        ("length_scale_m", num(scenario.model.length_scale_m)),
    ];
    let outcome =
        classical_threshold(point.alpha_tilde, scenario.model.length_scale_m).map(|report| {
            match report {
                ThresholdReport::Threshold {
                    x_squared_internal,
                    distance_internal,
                    distance_si_m,
                } => {
                    let s = TSIRELSON * (1.0 + point.alpha_tilde * x_squared_internal);
                    vec![
                        ("result", Cell::Text("threshold".into())),
                        ("x_squared_internal", num(x_squared_internal)),
                        ("distance_internal", num(distance_internal)),
                        ("distance_si_m", num(distance_si_m)),
                        ("s_at_threshold", num(s)),
                        ("tol_threshold", num(THRESHOLD_TOLERANCE)),
                        (
                            "crossing_ok",
                            Cell::Flag((s - 2.0).abs() <= THRESHOLD_TOLERANCE),
                        ),
                    ]
                }
                ThresholdReport::NoThreshold => vec![("result", Cell::Text("no-threshold".into()))],
            }
        });
    finish(columns, inputs, outcome)
}

fn algebra_rows(
    scenario: &Scenario,
    columns: &[Column],
) -> Result<(Vec<Vec<Cell>>, AlgebraReport)> {
    let order = scenario.max_alpha_order.unwrap_or(2);
    let report = verify_deformed_algebra(order)?;
    let rows = report
        .checks
        .iter()
        .map(|check| {
            let mut cells = vec![
                ("seed", seed_cell(scenario.seed)),
                ("max_alpha_order", int(order as usize)),
                ("identity", Cell::Text(check.kind.to_string())),
                (
                    "indices",
                    Cell::Text(
                        check
                            .indices
                            .iter()
                            .map(|i| i.to_string())
                            .collect::<Vec<_>>()
                            .join(";"),
                    ),
                ),
                ("alpha_order", int(check.alpha_order as usize)),
                ("required_zero", Cell::Flag(check.required_zero)),
                ("residual_terms", int(check.residual.len())),
                ("residual", Cell::Text(check.residual.to_string())),
                ("passed", Cell::Flag(check.passed())),
                ("status", Cell::Text("ok".into())),
            ];
            if let (crate::algebra::IdentityKind::ThetaClosure, Some(theta)) =
                (check.kind, &report.theta)
            {
                cells.push((
                    "theta_coefficient",
                    Cell::Text(theta.coefficient.to_string()),
                ));
            }
            assemble(columns, cells)
        })
        .collect();
    Ok((rows, report))
}

/// Runs a validated scenario. Sweep points are evaluated concurrently and emitted in
/// sweep order; failures inside a point are recorded in that row's status.
pub fn run_scenario(scenario: &Scenario) -> Result<ResultTable> {
    let plan = plan(scenario)?;
    let columns = columns(plan.kind);
    let mut algebra_report = None;
    let rows: Vec<Vec<Cell>> = match plan.kind {
        ScenarioKind::VerifyAlgebra => {
            let (rows, report) = algebra_rows(scenario, &columns)?;
            algebra_report = Some(report);
            rows
        }
        ScenarioKind::Threshold => plan
            .points
            .par_iter()
            .map(|(_, p)| threshold_row(scenario, p, &columns))
            .collect(),
        ScenarioKind::UncertaintySweep => plan
            .points
            .par_iter()
            .map(|(_, p)| uncertainty_row(scenario, &plan, p, &columns))
            .collect(),
        ScenarioKind::Chsh | ScenarioKind::Optimize => {
            let jobs: Vec<(&Point, &(String, TwoQubitState, Option<StateDescriptor>))> = plan
                .points
                .iter()
                .flat_map(|(_, p)| plan.states.iter().map(move |s| (p, s)))
                .collect();
            jobs.par_iter()
                .map(|(p, s)| {
                    if plan.kind == ScenarioKind::Chsh {
                        chsh_row(scenario, &plan, p, s, &columns)
                    } else {
                        optimize_row(scenario, &plan, p, s, &columns)
                    }
                })
                .collect()
        }
    };
    Ok(ResultTable {
        kind: plan.kind,
        seed: scenario.seed,
        columns,
        rows,
        algebra_report,
    })
}
