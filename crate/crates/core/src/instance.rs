//! Problem input: time grid, prices, PV forecast and realisation scenarios,
//! and the physical parameters of the battery, electrolyzer and grid link.
//!
//! Instances are stored as one JSON document; realised system-deviation
//! directions live in a separate CSV file with one day per row.

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the scenario probability sum before the loader gives up.
pub const PROBABILITY_RENORMALISE_TOL: f64 = 1e-6;
/// Tolerance on the probability sum once stored.
pub const PROBABILITY_SUM_TOL: f64 = 1e-9;

pub const DEFAULT_CHARGE_CURVE_R: [f64; 4] = [0.0, 0.5, 0.8, 1.0];
pub const DEFAULT_CHARGE_CURVE_F: [f64; 4] = [1.0, 1.0, 0.6, 0.2];
pub const DEFAULT_WATER_PER_KG: f64 = 0.010;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub n_periods: usize,
    /// Period length in hours.
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceData {
    /// Day-ahead price per period, EUR/MWh. May be negative.
    #[serde(rename = "da")]
    pub da_price: Vec<f64>,
    /// EUR/kg
    #[serde(rename = "hydrogen")]
    pub hydrogen_price: f64,
    /// EUR/m3
    #[serde(rename = "water")]
    pub water_price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvData {
    /// Planned output per period, MW.
    pub forecast: Vec<f64>,
    /// Realised output, indexed `[scenario][period]`, MW.
    pub scenarios: Vec<Vec<f64>>,
    /// Scenario weights. Uniform when omitted from the file.
    #[serde(default)]
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryParams {
    /// MWh
    pub capacity: f64,
    /// MW
    pub rated_power: f64,
    /// Applied to charging; its inverse to discharging.
    pub eta: f64,
    #[serde(default)]
    pub initial_soe: f64,
    /// Breakpoints on the normalised state-of-energy axis.
    #[serde(default = "default_curve_r")]
    pub charge_curve_r: Vec<f64>,
    /// Normalised admissible charge energy at each breakpoint.
    #[serde(default = "default_curve_f")]
    pub charge_curve_f: Vec<f64>,
}

fn default_curve_r() -> Vec<f64> {
    DEFAULT_CHARGE_CURVE_R.to_vec()
}

fn default_curve_f() -> Vec<f64> {
    DEFAULT_CHARGE_CURVE_F.to_vec()
}

fn default_water_per_kg() -> f64 {
    DEFAULT_WATER_PER_KG
}

impl BatteryParams {
    pub fn n_segments(&self) -> usize {
        self.charge_curve_r.len().saturating_sub(1)
    }

    /// Energy width of each charging segment, MWh.
    pub fn segment_widths(&self) -> Vec<f64> {
        self.charge_curve_r
            .windows(2)
            .map(|w| (w[1] - w[0]) * self.capacity)
            .collect()
    }

    /// Reduction of charge ability per MWh stored in each segment,
    /// `(F_j - F_{j+1}) / (R_{j+1} - R_j)`.
    pub fn segment_slopes(&self) -> Vec<f64> {
        self.charge_curve_r
            .windows(2)
            .zip(self.charge_curve_f.windows(2))
            .map(|(r, f)| (f[0] - f[1]) / (r[1] - r[0]))
            .collect()
    }

    /// Splits `soe` over the segments filling them in index order.
    pub fn fill_segments_in_order(&self, soe: f64) -> Vec<f64> {
        let mut remaining = soe.max(0.0);
        self.segment_widths()
            .into_iter()
            .map(|w| {
                let take = remaining.min(w);
                remaining -= take;
                take
            })
            .collect()
    }

    /// True when every F equals one, i.e. the charging curve imposes nothing.
    pub fn is_flat_curve(&self) -> bool {
        self.charge_curve_f.iter().all(|&f| f == 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectrolyzerParams {
    /// MW
    pub rated_power: f64,
    pub min_stable_fraction: f64,
    /// MW per kg/h of hydrogen.
    pub power_per_kg: f64,
    pub alpha: f64,
    pub beta: f64,
    /// m3 of water per kg of hydrogen.
    #[serde(default = "default_water_per_kg")]
    pub water_per_kg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImbalanceParams {
    pub kappa: f64,
    /// Number of hours per scenario that may settle in the unfavourable direction.
    #[serde(default)]
    pub gamma: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    /// MW
    pub connection_limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub time: TimeGrid,
    pub prices: PriceData,
    pub pv: PvData,
    pub battery: BatteryParams,
    pub electrolyzer: ElectrolyzerParams,
    pub imbalance: ImbalanceParams,
    pub grid: GridParams,
}

impl Instance {
    pub fn n_periods(&self) -> usize {
        self.time.n_periods
    }

    pub fn n_scenarios(&self) -> usize {
        self.pv.scenarios.len()
    }

    /// Parses a JSON document, fills defaults and validates every invariant.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut instance: Instance = serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "instance".into(),
            message: e.to_string(),
        })?;
        instance.normalise_probabilities()?;
        instance.validate()?;
        Ok(instance)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialises")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    fn normalise_probabilities(&mut self) -> Result<()> {
        let n = self.pv.scenarios.len();
        if self.pv.probabilities.is_empty() && n > 0 {
            self.pv.probabilities = vec![1.0 / n as f64; n];
            return Ok(());
        }
        let sum: f64 = self.pv.probabilities.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > PROBABILITY_RENORMALISE_TOL {
            return Err(Error::validation(
                "pv.probabilities",
                format!("probabilities sum to {sum}, expected 1"),
            ));
        }
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
            for p in &mut self.pv.probabilities {
                *p /= sum;
            }
        }
        Ok(())
    }

    /// Checks every documented invariant, reporting the first violation
    /// with the path of the offending field.
    pub fn validate(&self) -> Result<()> {
        let t = &self.time;
        if t.n_periods < 1 {
            return Err(Error::validation("time.n_periods", "must be at least 1"));
        }
        if !(t.dt.is_finite() && t.dt > 0.0) {
            return Err(Error::validation("time.dt", "must be positive"));
        }
        let n = t.n_periods;

        let p = &self.prices;
        check_len("prices.da", p.da_price.len(), n)?;
        check_all("prices.da", &p.da_price, |v| v.is_finite(), "must be finite")?;
        check_value("prices.hydrogen", p.hydrogen_price, |v| v >= 0.0)?;
        check_value("prices.water", p.water_price, |v| v >= 0.0)?;

        let pv = &self.pv;
        check_len("pv.forecast", pv.forecast.len(), n)?;
        check_all("pv.forecast", &pv.forecast, |v| v >= 0.0, "must be finite and >= 0")?;
        if pv.scenarios.is_empty() {
            return Err(Error::validation("pv.scenarios", "at least one scenario required"));
        }
        for (s, row) in pv.scenarios.iter().enumerate() {
            let field = format!("pv.scenarios[{s}]");
            check_len(&field, row.len(), n)?;
            check_all(&field, row, |v| v >= 0.0, "must be finite and >= 0")?;
        }
        check_len("pv.probabilities", pv.probabilities.len(), pv.scenarios.len())?;
        check_all("pv.probabilities", &pv.probabilities, |v| v >= 0.0, "must be >= 0")?;
        let sum: f64 = pv.probabilities.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(Error::validation(
                "pv.probabilities",
                format!("probabilities sum to {sum}, expected 1"),
            ));
        }

        let b = &self.battery;
        check_value("battery.capacity", b.capacity, |v| v >= 0.0)?;
        check_value("battery.rated_power", b.rated_power, |v| v >= 0.0)?;
        check_value("battery.eta", b.eta, |v| v > 0.0 && v <= 1.0)?;
        check_value("battery.initial_soe", b.initial_soe, |v| {
            v >= 0.0 && v <= b.capacity
        })?;
        let (r, f) = (&b.charge_curve_r, &b.charge_curve_f);
        if r.len() != f.len() {
            return Err(Error::validation(
                "battery.charge_curve_f",
                format!("has {} points, charge_curve_r has {}", f.len(), r.len()),
            ));
        }
        if r.len() < 2 {
            return Err(Error::validation("battery.charge_curve_r", "needs at least two points"));
        }
        check_all("battery.charge_curve_r", r, |v| v.is_finite(), "must be finite")?;
        check_all("battery.charge_curve_f", f, |v| v >= 0.0, "must be finite and >= 0")?;
        if r[0] != 0.0 || r[r.len() - 1] != 1.0 {
            return Err(Error::validation(
                "battery.charge_curve_r",
                "must start at 0 and end at 1",
            ));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation(
                "battery.charge_curve_r",
                "must be strictly increasing",
            ));
        }
        if f[0] > 1.0 {
            return Err(Error::validation("battery.charge_curve_f", "first value must be <= 1"));
        }
        if f.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::validation("battery.charge_curve_f", "must be non-increasing"));
        }

        let e = &self.electrolyzer;
        check_value("electrolyzer.rated_power", e.rated_power, |v| v >= 0.0)?;
        check_value("electrolyzer.min_stable_fraction", e.min_stable_fraction, |v| {
            (0.0..1.0).contains(&v)
        })?;
        check_value("electrolyzer.power_per_kg", e.power_per_kg, |v| v > 0.0)?;
        check_value("electrolyzer.alpha", e.alpha, |v| v > 0.0 && v <= 1.0)?;
        check_value("electrolyzer.beta", e.beta, |v| v >= 0.0)?;
        check_value("electrolyzer.water_per_kg", e.water_per_kg, |v| v >= 0.0)?;

        check_value("imbalance.kappa", self.imbalance.kappa, |v| (0.0..1.0).contains(&v))?;
        if self.imbalance.gamma > n {
            return Err(Error::validation(
                "imbalance.gamma",
                format!("{} exceeds n_periods {n}", self.imbalance.gamma),
            ));
        }
        check_value("grid.connection_limit", self.grid.connection_limit, |v| v > 0.0)?;
        Ok(())
    }

    /// Same instance with a different uncertainty budget.
    pub fn with_gamma(&self, gamma: usize) -> Result<Self> {
        if gamma > self.n_periods() {
            return Err(Error::validation(
                "imbalance.gamma",
                format!("{gamma} exceeds n_periods {}", self.n_periods()),
            ));
        }
        let mut out = self.clone();
        out.imbalance.gamma = gamma;
        Ok(out)
    }
}

fn check_len(field: &str, found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::validation(
            field,
            format!("has length {found}, expected {expected}"),
        ));
    }
    Ok(())
}

fn check_value(field: &str, value: f64, ok: impl Fn(f64) -> bool) -> Result<()> {
    if !value.is_finite() || !ok(value) {
        return Err(Error::validation(field, format!("{value} is out of range")));
    }
    Ok(())
}

fn check_all(field: &str, values: &[f64], ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
    match values.iter().position(|&v| !v.is_finite() || !ok(v)) {
        Some(i) => Err(Error::validation(format!("{field}[{i}]"), what.to_string())),
        None => Ok(()),
    }
}

/// Reads and validates an instance file.
pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Instance::from_json_str(&text)
}

/// Direction in which the whole power system deviates during one hour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Overproduction; imbalance price is `(1 - kappa) * da`.
    SystemSurplus,
    /// Underproduction; imbalance price is `(1 + kappa) * da`.
    SystemShortage,
}

impl Direction {
    pub fn token(self) -> &'static str {
        match self {
            Direction::SystemSurplus => "+",
            Direction::SystemShortage => "-",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token.trim() {
            "+" => Some(Direction::SystemSurplus),
            "-" => Some(Direction::SystemShortage),
            _ => None,
        }
    }

    /// Multiplier applied to the day-ahead price.
    pub fn price_factor(self, kappa: f64) -> f64 {
        match self {
            Direction::SystemSurplus => 1.0 - kappa,
            Direction::SystemShortage => 1.0 + kappa,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionSequence {
    pub directions: Vec<Direction>,
}

impl DirectionSequence {
    pub fn new(directions: Vec<Direction>) -> Self {
        Self { directions }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Parses direction rows from any reader. Blank lines are skipped.
pub fn read_direction_sequences<R: Read>(
    reader: R,
    n_periods: usize,
) -> Result<Vec<DirectionSequence>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (row, record) in csv.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            what: "directions".into(),
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let directions = record
            .iter()
            .enumerate()
            .map(|(col, token)| {
                Direction::from_token(token).ok_or_else(|| Error::Parse {
                    what: "directions".into(),
                    message: format!("row {row}, column {col}: unknown token `{token}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if directions.len() != n_periods {
            return Err(Error::LengthMismatch {
                what: format!("directions row {row}"),
                expected: n_periods,
                found: directions.len(),
            });
        }
        out.push(DirectionSequence { directions });
    }
    Ok(out)
}

pub fn load_direction_sequences(
    path: impl AsRef<Path>,
    n_periods: usize,
) -> Result<Vec<DirectionSequence>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_direction_sequences(file, n_periods)
}

pub fn write_direction_sequences(
    path: impl AsRef<Path>,
    sequences: &[DirectionSequence],
) -> Result<()> {
    let path = path.as_ref();
    let text: String = sequences
        .iter()
        .map(|seq| {
            let row: Vec<&str> = seq.directions.iter().map(|d| d.token()).collect();
            row.join(",") + "\n"
        })
        .collect();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn minimal_json() -> String {
        r#"{
            "time": {"n_periods": 1, "dt": 1.0},
            "prices": {"da": [50.0], "hydrogen": 2.0, "water": 0.397},
            "pv": {"forecast": [1.0], "scenarios": [[1.0]]},
            "battery": {"capacity": 1.0, "rated_power": 1.0, "eta": 0.92},
            "electrolyzer": {"rated_power": 1.0, "min_stable_fraction": 0.1,
                             "power_per_kg": 0.0394, "alpha": 0.689, "beta": 0.011},
            "imbalance": {"kappa": 0.4, "gamma": 0},
            "grid": {"connection_limit": 20.0}
        }"#
        .to_string()
    }

    #[test]
    fn minimal_instance_loads_with_defaults() {
        let inst = Instance::from_json_str(&minimal_json()).unwrap();
        assert_eq!(inst.n_periods(), 1);
        assert_eq!(inst.pv.probabilities, vec![1.0]);
        assert_eq!(inst.battery.initial_soe, 0.0);
        assert_eq!(inst.battery.charge_curve_r, DEFAULT_CHARGE_CURVE_R.to_vec());
        assert_eq!(inst.battery.charge_curve_f, DEFAULT_CHARGE_CURVE_F.to_vec());
        assert_eq!(inst.electrolyzer.water_per_kg, DEFAULT_WATER_PER_KG);
    }

    #[test]
    fn probabilities_far_from_one_are_rejected() {
        let text = minimal_json().replace(
            r#""scenarios": [[1.0]]"#,
            r#""scenarios": [[1.0]], "probabilities": [0.8]"#,
        );
        match Instance::from_json_str(&text) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "pv.probabilities"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn probabilities_close_to_one_are_renormalised() {
        let text = minimal_json().replace(
            r#""scenarios": [[1.0]]"#,
            r#""scenarios": [[1.0], [2.0]], "probabilities": [0.5000004, 0.5]"#,
        );
        let inst = Instance::from_json_str(&text).unwrap();
        let sum: f64 = inst.pv.probabilities.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(
            Instance::from_json_str("{ not json"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn series_length_is_checked() {
        let text = minimal_json().replace(r#""da": [50.0]"#, r#""da": [50.0, 60.0]"#);
        match Instance::from_json_str(&text) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "prices.da"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn charge_curve_shape_is_checked() {
        let text = minimal_json().replace(
            r#""eta": 0.92"#,
            r#""eta": 0.92, "charge_curve_r": [0.0, 0.6, 0.5, 1.0]"#,
        );
        assert!(matches!(
            Instance::from_json_str(&text),
            Err(Error::Validation { ref field, .. }) if field == "battery.charge_curve_r"
        ));
        let text = minimal_json().replace(
            r#""eta": 0.92"#,
            r#""eta": 0.92, "charge_curve_f": [1.0, 0.5, 0.7, 0.2]"#,
        );
        assert!(matches!(
            Instance::from_json_str(&text),
            Err(Error::Validation { ref field, .. }) if field == "battery.charge_curve_f"
        ));
    }

    #[test]
    fn segment_geometry_of_default_curve() {
        let inst = Instance::from_json_str(&minimal_json().replace(
            r#""capacity": 1.0"#,
            r#""capacity": 5.0"#,
        ))
        .unwrap();
        let widths = inst.battery.segment_widths();
        assert_eq!(widths.len(), 3);
        approx::assert_abs_diff_eq!(widths[0], 2.5, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(widths[1], 1.5, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(widths[2], 1.0, epsilon = 1e-12);
        let slopes = inst.battery.segment_slopes();
        approx::assert_abs_diff_eq!(slopes[0], 0.0, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(slopes[1], 0.4 / 0.3, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(slopes[2], 2.0, epsilon = 1e-12);
        let fill = inst.battery.fill_segments_in_order(3.0);
        approx::assert_abs_diff_eq!(fill[0], 2.5, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(fill[1], 0.5, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(fill[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn directions_parse_and_check_length() {
        let seqs = read_direction_sequences("+,-,+\n-,-,-\n".as_bytes(), 3).unwrap();
        assert_eq!(seqs.len(), 2);
        assert_eq!(seqs[0].directions[1], Direction::SystemShortage);
        assert!(read_direction_sequences("".as_bytes(), 24).unwrap().is_empty());
        assert!(matches!(
            read_direction_sequences("+,+\n".as_bytes(), 3),
            Err(Error::LengthMismatch { expected: 3, found: 2, .. })
        ));
        assert!(matches!(
            read_direction_sequences("+,x,+\n".as_bytes(), 3),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn gamma_beyond_horizon_is_rejected() {
        let inst = Instance::from_json_str(&minimal_json()).unwrap();
        assert!(inst.with_gamma(1).is_ok());
        assert!(inst.with_gamma(2).is_err());
    }
}
