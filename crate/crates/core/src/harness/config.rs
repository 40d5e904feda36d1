use std::collections::{BTreeMap, BTreeSet};

use serde::{Serialize, Serializer};
use toml::de::{DeTable, DeValue};
use toml::{Table, Value};

use crate::analog::{BeampatternGrid, HybridSystem, OptimizerConfig, SystemParts};
use crate::digital::UserChannels;
use crate::error::{Error, Result};
use crate::holography::{build_pattern_bank, Direction};
use crate::linksim::{FrameSpec, LinkSimConfig, RadarWaveform, RangeConvention};
use crate::metrics::{Architecture, PowerModel};
use crate::rhs::{build_layout, reference_wave_matrix, Point3, Quantization, RhsLayout, SPEED_OF_LIGHT};

/// Keys without a default.
pub const REQUIRED_KEYS: [&str; 2] = ["rhs.elements", "rhs.frequency_hz"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RhsConfig {
    /// Total element count M.
    pub elements: usize,
    pub rows: usize,
    pub frequency_hz: f64,
    pub spacing_wavelengths: f64,
    pub refractive_index: f64,
    pub feeds: usize,
    pub attenuation_np_per_m: f64,
    #[serde(serialize_with = "display")]
    pub quantization: Quantization,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UserConfig {
    pub angle_deg: f64,
    pub distance_m: f64,
    /// bit/s/Hz.
    pub capacity_floor: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TargetConfig {
    pub angle_deg: f64,
    pub delay_us: f64,
    /// Echo amplitude toward a beam peak.
    pub echo_gain: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub step_deg: f64,
    pub beamwidth_deg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerConfig {
    pub total_w: f64,
    pub radar_fraction: f64,
    pub noise_w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizerSettings {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub randomization_count: usize,
    pub capacity_floor: f64,
    pub sdr_solver_tolerance: f64,
    pub max_solver_iterations: usize,
    pub polish_iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RadarKind {
    Lfm,
    Tone,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinkConfig {
    pub sample_rate_hz: f64,
    pub symbol_rate_hz: f64,
    pub duration_us: f64,
    pub radar_waveform: RadarKind,
    pub chirp_bandwidth_hz: f64,
    pub tone_frequency_hz: f64,
    pub comm_amplitude: f64,
    pub radar_amplitude: f64,
    pub echo_noise_w: f64,
    pub range_convention: RangeConvention,
    pub detection_threshold_db: f64,
    pub receive_window_samples: Option<usize>,
    pub dump_iq: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineConfig {
    pub elements: usize,
    pub spacing_wavelengths: f64,
    pub directions_deg: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerModels {
    pub rhs: PowerModel,
    pub pa: PowerModel,
}

/// A validated experiment description with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub seed: u64,
    pub rhs: RhsConfig,
    pub users: Vec<UserConfig>,
    pub targets: Vec<TargetConfig>,
    pub pattern_directions_deg: Vec<f64>,
    pub grid: GridConfig,
    pub power: PowerConfig,
    pub optimizer: OptimizerSettings,
    pub link: LinkConfig,
    pub baseline: BaselineConfig,
    pub power_model: PowerModels,
}

fn display<S: Serializer, D: std::fmt::Display>(v: &D, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn parse_error(key: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        key: key.to_string(),
        line,
        message: message.into(),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset.min(text.len())].iter().filter(|&&b| b == b'\n').count() + 1
}

fn collect_lines(text: &str, table: &DeTable<'_>, prefix: &str, out: &mut BTreeMap<String, usize>) {
    for (k, v) in table.iter() {
        let path = if prefix.is_empty() {
            k.get_ref().to_string()
        } else {
            format!("{prefix}.{}", k.get_ref())
        };
        out.entry(path.clone()).or_insert_with(|| line_of(text, k.span().start));
        if let DeValue::Table(t) = v.get_ref() {
            collect_lines(text, t, &path, out);
        }
    }
}

fn flatten(table: &Table, prefix: &str, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(t, &path, out),
            v => {
                out.insert(path, v.clone());
            }
        }
    }
}

/// Flattened document with the line of every key.
struct Reader {
    values: BTreeMap<String, Value>,
    lines: BTreeMap<String, usize>,
    used: BTreeSet<String>,
}

impl Reader {
    fn new(text: &str) -> Result<Self> {
        let table: Table = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| line_of(text, s.start));
            parse_error("", line, e.message().to_string())
        })?;
        let mut values = BTreeMap::new();
        flatten(&table, "", &mut values);
        let mut lines = BTreeMap::new();
        if let Ok(doc) = DeTable::parse(text) {
            collect_lines(text, doc.get_ref(), "", &mut lines);
        }
        Ok(Self {
            values,
            lines,
            used: BTreeSet::new(),
        })
    }

    fn line(&self, key: &str) -> usize {
        self.lines.get(key).copied().unwrap_or(0)
    }

    fn err(&self, key: &str, message: impl Into<String>) -> Error {
        parse_error(key, self.line(key), message)
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        let v = self.values.get(key).cloned();
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    fn number(&self, key: &str, v: &Value) -> Result<f64> {
        match v {
            Value::Integer(i) => Ok(*i as f64),
            Value::Float(f) if f.is_finite() => Ok(*f),
            Value::Float(_) => Err(self.err(key, "value must be finite")),
            other => Err(self.err(key, format!("expected a number, found {}", other.type_str()))),
        }
    }

    fn count(&self, key: &str, v: &Value) -> Result<usize> {
        match v {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            Value::Integer(_) => Err(self.err(key, "value must be >= 0")),
            other => Err(self.err(key, format!("expected an integer, found {}", other.type_str()))),
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            Some(v) => self.number(key, &v),
            None => Ok(default),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            Some(v) => self.count(key, &v),
            None => Ok(default),
        }
    }

    fn opt_usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.take(key).map(|v| self.count(key, &v)).transpose()
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key) {
            Some(Value::Boolean(b)) => Ok(b),
            Some(other) => Err(self.err(key, format!("expected a boolean, found {}", other.type_str()))),
            None => Ok(default),
        }
    }

    fn string(&mut self, key: &str, default: &str) -> Result<String> {
        match self.take(key) {
            Some(Value::String(s)) => Ok(s),
            Some(other) => Err(self.err(key, format!("expected a string, found {}", other.type_str()))),
            None => Ok(default.to_string()),
        }
    }

    fn numbers(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            Some(Value::Array(items)) => items.iter().map(|v| self.number(key, v)).collect::<Result<_>>().map(Some),
            Some(other) => Err(self.err(key, format!("expected an array of numbers, found {}", other.type_str()))),
            None => Ok(None),
        }
    }

    fn unknown(&self) -> Option<&str> {
        self.values.keys().find(|k| !self.used.contains(*k)).map(String::as_str)
    }
}

fn check(r: &Reader, key: &str, ok: bool, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(r.err(key, message))
    }
}

fn check_angles(r: &Reader, key: &str, angles: &[f64]) -> Result<()> {
    match angles.iter().find(|a| !(-90.0..=90.0).contains(*a)) {
        Some(a) => Err(r.err(key, format!("angle {a}° is outside the grid range [-90°, 90°]"))),
        None => Ok(()),
    }
}

fn same_len(r: &Reader, key: &str, got: usize, want: usize, of: &str) -> Result<()> {
    check(
        r,
        key,
        got == want,
        &format!("has {got} entries but {of} has {want}"),
    )
}

fn power_model(r: &mut Reader, prefix: &str, base: PowerModel) -> Result<PowerModel> {
    let mut m = base;
    for (name, slot) in [
        ("rf_chain", &mut m.rf_chain),
        ("phase_shifter", &mut m.phase_shifter),
        ("power_amplifier", &mut m.power_amplifier),
        ("element_bias", &mut m.element_bias),
        ("static_power", &mut m.static_power),
    ] {
        let key = format!("{prefix}.{name}");
        *slot = r.f64(&key, *slot)?;
        check(r, &key, *slot >= 0.0, "power must be >= 0")?;
    }
    Ok(m)
}

/// Parses a scenario document. See the README for the key reference.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut r = Reader::new(text)?;
    let missing: Vec<&str> = REQUIRED_KEYS.iter().copied().filter(|k| !r.has(k)).collect();
    if !missing.is_empty() {
        return Err(parse_error(
            &missing.join(", "),
            0,
            format!("missing required keys: {}", missing.join(", ")),
        ));
    }

    let seed = match r.take("seed") {
        Some(Value::Integer(i)) if i >= 0 => i as u64,
        // Seeds above i64::MAX are written as strings.
        Some(Value::String(t)) if t.parse::<u64>().is_ok() => t.parse().unwrap_or(0),
        Some(_) => return Err(r.err("seed", "seed must be a non-negative integer")),
        None => 0,
    };

    let opt_default = OptimizerConfig::<f64>::default();
    let optimizer = OptimizerSettings {
        epsilon: r.f64("optimizer.epsilon", opt_default.epsilon)?,
        max_iterations: r.usize("optimizer.max_iterations", opt_default.max_iterations)?,
        randomization_count: r.usize("optimizer.randomization_count", opt_default.randomization_count)?,
        capacity_floor: r.f64("optimizer.capacity_floor", opt_default.capacity_floor)?,
        sdr_solver_tolerance: r.f64("optimizer.sdr_solver_tolerance", opt_default.sdr_solver_tolerance)?,
        max_solver_iterations: r.usize("optimizer.max_solver_iterations", opt_default.max_solver_iterations)?,
        polish_iterations: r.usize("optimizer.polish_iterations", opt_default.polish_iterations)?,
    };
    check(&r, "optimizer.epsilon", optimizer.epsilon > 0.0, "must be positive")?;
    check(&r, "optimizer.max_iterations", optimizer.max_iterations >= 1, "must be >= 1")?;
    check(&r, "optimizer.randomization_count", optimizer.randomization_count >= 1, "must be >= 1")?;
    check(&r, "optimizer.capacity_floor", optimizer.capacity_floor >= 0.0, "must be >= 0")?;
    check(&r, "optimizer.sdr_solver_tolerance", optimizer.sdr_solver_tolerance > 0.0, "must be positive")?;
    check(&r, "optimizer.max_solver_iterations", optimizer.max_solver_iterations >= 1, "must be >= 1")?;

    let quantization = match r.take("rhs.quantization") {
        None => Quantization::Continuous,
        Some(Value::String(s)) => s.parse().map_err(|e: Error| r.err("rhs.quantization", e.to_string()))?,
        Some(Value::Integer(i)) => i
            .to_string()
            .parse()
            .map_err(|e: Error| r.err("rhs.quantization", e.to_string()))?,
        Some(other) => {
            return Err(r.err(
                "rhs.quantization",
                format!("expected `continuous` or a bit count, found {}", other.type_str()),
            ))
        }
    };
    let rhs = RhsConfig {
        elements: r.usize("rhs.elements", 0)?,
        rows: r.usize("rhs.rows", 1)?,
        frequency_hz: r.f64("rhs.frequency_hz", 0.0)?,
        spacing_wavelengths: r.f64("rhs.spacing_wavelengths", 0.4)?,
        refractive_index: r.f64("rhs.refractive_index", 1.3)?,
        feeds: r.usize("rhs.feeds", 1)?,
        attenuation_np_per_m: r.f64("rhs.attenuation_np_per_m", 0.0)?,
        quantization,
    };
    check(&r, "rhs.elements", rhs.elements >= 1, "must be >= 1")?;
    check(&r, "rhs.rows", rhs.rows >= 1 && rhs.elements % rhs.rows == 0, "must divide rhs.elements")?;
    check(&r, "rhs.frequency_hz", rhs.frequency_hz > 0.0, "must be positive")?;
    check(&r, "rhs.spacing_wavelengths", rhs.spacing_wavelengths > 0.0, "must be positive")?;
    check(&r, "rhs.refractive_index", rhs.refractive_index > 1.0, "must exceed 1")?;
    check(&r, "rhs.feeds", rhs.feeds >= 1, "must be >= 1")?;
    check(&r, "rhs.attenuation_np_per_m", rhs.attenuation_np_per_m >= 0.0, "must be >= 0")?;

    let user_angles = r.numbers("users.angles_deg")?.unwrap_or_default();
    check_angles(&r, "users.angles_deg", &user_angles)?;
    let distances = r.numbers("users.distances_m")?.unwrap_or_default();
    same_len(&r, "users.distances_m", distances.len(), user_angles.len(), "users.angles_deg")?;
    check(&r, "users.distances_m", distances.iter().all(|d| *d > 0.0), "distances must be positive")?;
    let floors = r
        .numbers("users.capacity_floors")?
        .unwrap_or_else(|| vec![optimizer.capacity_floor; user_angles.len()]);
    same_len(&r, "users.capacity_floors", floors.len(), user_angles.len(), "users.angles_deg")?;
    check(&r, "users.capacity_floors", floors.iter().all(|f| *f >= 0.0), "floors must be >= 0")?;
    check(
        &r,
        "users.angles_deg",
        user_angles.len() <= rhs.feeds,
        &format!("{} users need at least as many feeds (rhs.feeds = {})", user_angles.len(), rhs.feeds),
    )?;
    let users: Vec<UserConfig> = (0..user_angles.len())
        .map(|i| UserConfig {
            angle_deg: user_angles[i],
            distance_m: distances[i],
            capacity_floor: floors[i],
        })
        .collect();

    let target_angles = r.numbers("targets.angles_deg")?.unwrap_or_default();
    check_angles(&r, "targets.angles_deg", &target_angles)?;
    let delays = r.numbers("targets.delays_us")?.unwrap_or_default();
    same_len(&r, "targets.delays_us", delays.len(), target_angles.len(), "targets.angles_deg")?;
    check(&r, "targets.delays_us", delays.iter().all(|d| *d >= 0.0), "delays must be >= 0")?;
    let gains = r
        .numbers("targets.echo_gains")?
        .unwrap_or_else(|| vec![1.0; target_angles.len()]);
    same_len(&r, "targets.echo_gains", gains.len(), target_angles.len(), "targets.angles_deg")?;
    check(&r, "targets.echo_gains", gains.iter().all(|g| *g >= 0.0), "gains must be >= 0")?;
    let targets: Vec<TargetConfig> = (0..target_angles.len())
        .map(|i| TargetConfig {
            angle_deg: target_angles[i],
            delay_us: delays[i],
            echo_gain: gains[i],
        })
        .collect();
    if users.is_empty() && targets.is_empty() {
        return Err(parse_error(
            "users.angles_deg, targets.angles_deg",
            0,
            "at least one user or one target is required",
        ));
    }

    let pattern_directions_deg = match r.numbers("patterns.directions_deg")? {
        Some(d) => d,
        None => {
            let mut d: Vec<f64> = Vec::new();
            for a in user_angles.iter().chain(&target_angles) {
                if !d.contains(a) {
                    d.push(*a);
                }
            }
            d
        }
    };
    check(&r, "patterns.directions_deg", !pattern_directions_deg.is_empty(), "must not be empty")?;
    check_angles(&r, "patterns.directions_deg", &pattern_directions_deg)?;

    let grid = GridConfig {
        step_deg: r.f64("grid.step_deg", 0.5)?,
        beamwidth_deg: r.f64("grid.beamwidth_deg", 10.0)?,
    };
    let steps = 180.0 / grid.step_deg;
    check(
        &r,
        "grid.step_deg",
        grid.step_deg > 0.0 && (steps - steps.round()).abs() < 1e-9,
        "must be positive and divide 180",
    )?;
    check(&r, "grid.beamwidth_deg", grid.beamwidth_deg >= 0.0, "must be >= 0")?;

    let power = PowerConfig {
        total_w: r.f64("power.total_w", 1.0)?,
        radar_fraction: r.f64("power.radar_fraction", 0.5)?,
        noise_w: r.f64("power.noise_w", opt_default.noise_power)?,
    };
    check(&r, "power.total_w", power.total_w > 0.0, "must be positive")?;
    check(&r, "power.radar_fraction", (0.0..=1.0).contains(&power.radar_fraction), "must be in [0, 1]")?;
    check(&r, "power.noise_w", power.noise_w > 0.0, "must be positive")?;

    let frame = FrameSpec::<f64>::default();
    let link_default = LinkSimConfig::<f64>::default();
    let radar_waveform = match r.string("link.radar_waveform", "lfm")?.as_str() {
        "lfm" => RadarKind::Lfm,
        "tone" => RadarKind::Tone,
        other => return Err(r.err("link.radar_waveform", format!("expected `lfm` or `tone`, found `{other}`"))),
    };
    let range_convention = match r.string("link.range_convention", "one_way")?.as_str() {
        "one_way" => RangeConvention::OneWay,
        "two_way" => RangeConvention::TwoWay,
        other => {
            return Err(r.err(
                "link.range_convention",
                format!("expected `one_way` or `two_way`, found `{other}`"),
            ))
        }
    };
    let link = LinkConfig {
        sample_rate_hz: r.f64("link.sample_rate_hz", frame.sample_rate)?,
        symbol_rate_hz: r.f64("link.symbol_rate_hz", frame.symbol_rate)?,
        duration_us: r.f64("link.duration_us", frame.duration * 1e6)?,
        radar_waveform,
        chirp_bandwidth_hz: r.f64("link.chirp_bandwidth_hz", 10e6)?,
        tone_frequency_hz: r.f64("link.tone_frequency_hz", 1e6)?,
        comm_amplitude: r.f64("link.comm_amplitude", frame.comm_amplitude)?,
        radar_amplitude: r.f64("link.radar_amplitude", frame.radar_amplitude)?,
        echo_noise_w: r.f64("link.echo_noise_w", link_default.echo_noise_power)?,
        range_convention,
        detection_threshold_db: r.f64("link.detection_threshold_db", link_default.detection_threshold_db)?,
        receive_window_samples: r.opt_usize("link.receive_window_samples")?,
        dump_iq: r.bool("link.dump_iq", false)?,
    };
    check(&r, "link.sample_rate_hz", link.sample_rate_hz > 0.0, "must be positive")?;
    check(
        &r,
        "link.symbol_rate_hz",
        link.symbol_rate_hz > 0.0 && link.sample_rate_hz >= 2.0 * link.symbol_rate_hz,
        "must be positive and at most half the sample rate",
    )?;
    check(&r, "link.duration_us", link.duration_us > 0.0, "must be positive")?;
    check(&r, "link.chirp_bandwidth_hz", link.chirp_bandwidth_hz >= 0.0, "must be >= 0")?;
    check(&r, "link.comm_amplitude", link.comm_amplitude >= 0.0, "must be >= 0")?;
    check(&r, "link.radar_amplitude", link.radar_amplitude >= 0.0, "must be >= 0")?;
    check(&r, "link.echo_noise_w", link.echo_noise_w >= 0.0, "must be >= 0")?;

    let baseline = BaselineConfig {
        elements: r.usize("baseline.elements", 5)?,
        spacing_wavelengths: r.f64("baseline.spacing_wavelengths", 0.5)?,
        directions_deg: r.numbers("baseline.directions_deg")?.unwrap_or_else(|| vec![0.0, -30.0]),
    };
    check(&r, "baseline.elements", baseline.elements >= 1, "must be >= 1")?;
    check(&r, "baseline.spacing_wavelengths", baseline.spacing_wavelengths > 0.0, "must be positive")?;
    check(&r, "baseline.directions_deg", !baseline.directions_deg.is_empty(), "must not be empty")?;
    check_angles(&r, "baseline.directions_deg", &baseline.directions_deg)?;

    let power_model = PowerModels {
        rhs: power_model(&mut r, "power_model.rhs", PowerModel::rhs_default())?,
        pa: power_model(&mut r, "power_model.pa", PowerModel::phased_array_default())?,
    };

    if let Some(key) = r.unknown() {
        return Err(r.err(key, "unknown key"));
    }

    Ok(Scenario {
        seed,
        rhs,
        users,
        targets,
        pattern_directions_deg,
        grid,
        power,
        optimizer,
        link,
        baseline,
        power_model,
    })
}

fn radians(deg: &[f64]) -> Vec<f64> {
    deg.iter().map(|d| d.to_radians()).collect()
}

impl Scenario {
    /// Elements on a centered grid at `spacing_wavelengths · λ0`; feeds
    /// spread along x starting half a pitch before the first column.
    pub fn layout(&self) -> Result<RhsLayout> {
        let r = &self.rhs;
        let d = r.spacing_wavelengths * SPEED_OF_LIGHT / r.frequency_hz;
        let cols = r.elements / r.rows;
        let x0 = -(cols as f64 - 1.0) / 2.0 * d - d / 2.0;
        let span = cols as f64 * d;
        let feeds = (0..r.feeds)
            .map(|k| Point3::on_x(x0 + span * k as f64 / r.feeds as f64))
            .collect();
        build_layout((cols, r.rows), d, feeds, r.frequency_hz, r.refractive_index)
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        let o = &self.optimizer;
        OptimizerConfig {
            epsilon: o.epsilon,
            max_iterations: o.max_iterations,
            randomization_count: o.randomization_count,
            capacity_floor: o.capacity_floor,
            noise_power: self.power.noise_w,
            sdr_solver_tolerance: o.sdr_solver_tolerance,
            max_solver_iterations: o.max_solver_iterations,
            polish_iterations: o.polish_iterations,
            seed: self.seed,
        }
    }

    /// Hybrid system with a bank over `directions_deg`, the desired pattern
    /// peaked at the same directions, and the users when `with_users`.
    pub fn system_for(&self, directions_deg: &[f64], with_users: bool) -> Result<HybridSystem> {
        let layout = self.layout()?;
        let reference = reference_wave_matrix(&layout, self.rhs.attenuation_np_per_m);
        let dirs: Vec<Direction> = radians(directions_deg).into_iter().map(Direction::planar).collect();
        let bank = build_pattern_bank(&layout, &reference, &dirs)?;
        let (users, capacity_floors) = if with_users && !self.users.is_empty() {
            let u: Vec<(f64, f64)> = self.users.iter().map(|u| (u.angle_deg.to_radians(), u.distance_m)).collect();
            (
                Some(UserChannels::line_of_sight(&layout, &u)?),
                self.users.iter().map(|u| u.capacity_floor).collect(),
            )
        } else {
            (None, Vec::new())
        };
        let grid = BeampatternGrid::uniform(
            self.grid.step_deg,
            radians(directions_deg),
            self.grid.beamwidth_deg.to_radians(),
        )?;
        HybridSystem::new(SystemParts {
            layout,
            reference,
            bank,
            users,
            capacity_floors,
            grid,
            total_power: self.power.total_w,
            radar_fraction: self.power.radar_fraction,
        })
    }

    /// The ISAC system over the pattern directions.
    pub fn system(&self) -> Result<HybridSystem> {
        self.system_for(&self.pattern_directions_deg, true)
    }

    pub fn frame_spec(&self) -> FrameSpec {
        let l = &self.link;
        FrameSpec {
            sample_rate: l.sample_rate_hz,
            symbol_rate: l.symbol_rate_hz,
            duration: l.duration_us * 1e-6,
            radar: match l.radar_waveform {
                RadarKind::Lfm => RadarWaveform::LfmChirp {
                    bandwidth: l.chirp_bandwidth_hz,
                },
                RadarKind::Tone => RadarWaveform::Tone {
                    frequency: l.tone_frequency_hz,
                },
            },
            comm_amplitude: l.comm_amplitude,
            radar_amplitude: l.radar_amplitude,
        }
    }

    pub fn link_config(&self) -> LinkSimConfig {
        LinkSimConfig {
            frame: self.frame_spec(),
            echo_noise_power: self.link.echo_noise_w,
            range_convention: self.link.range_convention,
            receive_window: self.link.receive_window_samples,
            detection_threshold_db: self.link.detection_threshold_db,
        }
    }
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
}

fn section(entries: Vec<(&str, Value)>) -> Value {
    Value::Table(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn int(n: usize) -> Value {
    Value::Integer(n as i64)
}

fn model_section(m: &PowerModel) -> Value {
    section(vec![
        ("rf_chain", Value::Float(m.rf_chain)),
        ("phase_shifter", Value::Float(m.phase_shifter)),
        ("power_amplifier", Value::Float(m.power_amplifier)),
        ("element_bias", Value::Float(m.element_bias)),
        ("static_power", Value::Float(m.static_power)),
    ])
}

impl Scenario {
    /// Every setting, defaults included, as a scenario document that parses
    /// back to `self`.
    pub fn to_document(&self) -> String {
        let r = &self.rhs;
        let quantization = match r.quantization {
            Quantization::Continuous => Value::String("continuous".into()),
            Quantization::Bits(b) => Value::Integer(i64::from(b)),
        };
        let col = |f: fn(&UserConfig) -> f64| floats(&self.users.iter().map(f).collect::<Vec<_>>());
        let tcol = |f: fn(&TargetConfig) -> f64| floats(&self.targets.iter().map(f).collect::<Vec<_>>());
        let o = &self.optimizer;
        let l = &self.link;
        let mut link = vec![
            ("sample_rate_hz", Value::Float(l.sample_rate_hz)),
            ("symbol_rate_hz", Value::Float(l.symbol_rate_hz)),
            ("duration_us", Value::Float(l.duration_us)),
            (
                "radar_waveform",
                Value::String(match l.radar_waveform {
                    RadarKind::Lfm => "lfm".into(),
                    RadarKind::Tone => "tone".into(),
                }),
            ),
            ("chirp_bandwidth_hz", Value::Float(l.chirp_bandwidth_hz)),
            ("tone_frequency_hz", Value::Float(l.tone_frequency_hz)),
            ("comm_amplitude", Value::Float(l.comm_amplitude)),
            ("radar_amplitude", Value::Float(l.radar_amplitude)),
            ("echo_noise_w", Value::Float(l.echo_noise_w)),
            (
                "range_convention",
                Value::String(match l.range_convention {
                    RangeConvention::OneWay => "one_way".into(),
                    RangeConvention::TwoWay => "two_way".into(),
                }),
            ),
            ("detection_threshold_db", Value::Float(l.detection_threshold_db)),
            ("dump_iq", Value::Boolean(l.dump_iq)),
        ];
        if let Some(w) = l.receive_window_samples {
            link.push(("receive_window_samples", int(w)));
        }
        let doc = section(vec![
            (
                "seed",
                i64::try_from(self.seed).map_or_else(|_| Value::String(self.seed.to_string()), Value::Integer),
            ),
            (
                "rhs",
                section(vec![
                    ("elements", int(r.elements)),
                    ("rows", int(r.rows)),
                    ("frequency_hz", Value::Float(r.frequency_hz)),
                    ("spacing_wavelengths", Value::Float(r.spacing_wavelengths)),
                    ("refractive_index", Value::Float(r.refractive_index)),
                    ("feeds", int(r.feeds)),
                    ("attenuation_np_per_m", Value::Float(r.attenuation_np_per_m)),
                    ("quantization", quantization),
                ]),
            ),
            (
                "users",
                section(vec![
                    ("angles_deg", col(|u| u.angle_deg)),
                    ("distances_m", col(|u| u.distance_m)),
                    ("capacity_floors", col(|u| u.capacity_floor)),
                ]),
            ),
            (
                "targets",
                section(vec![
                    ("angles_deg", tcol(|t| t.angle_deg)),
                    ("delays_us", tcol(|t| t.delay_us)),
                    ("echo_gains", tcol(|t| t.echo_gain)),
                ]),
            ),
            ("patterns", section(vec![("directions_deg", floats(&self.pattern_directions_deg))])),
            (
                "grid",
                section(vec![
                    ("step_deg", Value::Float(self.grid.step_deg)),
                    ("beamwidth_deg", Value::Float(self.grid.beamwidth_deg)),
                ]),
            ),
            (
                "power",
                section(vec![
                    ("total_w", Value::Float(self.power.total_w)),
                    ("radar_fraction", Value::Float(self.power.radar_fraction)),
                    ("noise_w", Value::Float(self.power.noise_w)),
                ]),
            ),
            (
                "optimizer",
                section(vec![
                    ("epsilon", Value::Float(o.epsilon)),
                    ("max_iterations", int(o.max_iterations)),
                    ("randomization_count", int(o.randomization_count)),
                    ("capacity_floor", Value::Float(o.capacity_floor)),
                    ("sdr_solver_tolerance", Value::Float(o.sdr_solver_tolerance)),
                    ("max_solver_iterations", int(o.max_solver_iterations)),
                    ("polish_iterations", int(o.polish_iterations)),
                ]),
            ),
            ("link", section(link)),
            (
                "baseline",
                section(vec![
                    ("elements", int(self.baseline.elements)),
                    ("spacing_wavelengths", Value::Float(self.baseline.spacing_wavelengths)),
                    ("directions_deg", floats(&self.baseline.directions_deg)),
                ]),
            ),
            (
                "power_model",
                section(vec![
                    ("rhs", model_section(&self.power_model.rhs)),
                    ("pa", model_section(&self.power_model.pa)),
                ]),
            ),
        ]);
        toml::to_string(&doc).expect("scenario document serializes")
    }
}

impl PowerModels {
    pub fn model(&self, architecture: Architecture) -> &PowerModel {
        match architecture {
            Architecture::Rhs => &self.rhs,
            Architecture::PhasedArray => &self.pa,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "rhs.elements = 16\nrhs.frequency_hz = 12e9\ntargets.angles_deg = [0]\ntargets.delays_us = [20]\n";

    fn parse_err(text: &str) -> (String, usize, String) {
        match parse_scenario(text) {
            Err(Error::Parse { key, line, message }) => (key, line, message),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_document_fills_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.seed, 0);
        assert_eq!(s.rhs.rows, 1);
        assert_eq!(s.rhs.spacing_wavelengths, 0.4);
        assert_eq!(s.grid.step_deg, 0.5);
        assert_eq!(s.pattern_directions_deg, vec![0.0]);
        assert_eq!(s.targets[0].echo_gain, 1.0);
        assert_eq!(s.baseline.directions_deg, vec![0.0, -30.0]);
        assert_eq!(s.power_model.rhs, PowerModel::rhs_default());
        assert_eq!(s.link.range_convention, RangeConvention::OneWay);
    }

    #[test]
    fn empty_document_lists_required_keys() {
        let (key, line, message) = parse_err("");
        assert_eq!(line, 0);
        for k in REQUIRED_KEYS {
            assert!(key.contains(k) && message.contains(k));
        }
    }

    #[test]
    fn target_outside_grid_names_key_and_line() {
        let text = "rhs.elements = 16\nrhs.frequency_hz = 12e9\n\n[targets]\nangles_deg = [10, 95]\ndelays_us = [1, 2]\n";
        let (key, line, message) = parse_err(text);
        assert_eq!(key, "targets.angles_deg");
        assert_eq!(line, 5);
        assert!(message.contains("95"));
    }

    #[test]
    fn unknown_key_rejected() {
        let (key, line, _) = parse_err(&format!("{MINIMAL}rhs.element_count = 3\n"));
        assert_eq!(key, "rhs.element_count");
        assert_eq!(line, 5);
    }

    #[test]
    fn syntax_error_has_line() {
        let (_, line, _) = parse_err("rhs.elements = 16\nrhs.frequency_hz = = 1\n");
        assert_eq!(line, 2);
    }

    #[test]
    fn wrong_type_rejected() {
        let (key, _, message) = parse_err(&format!("{MINIMAL}grid.step_deg = \"fine\"\n"));
        assert_eq!(key, "grid.step_deg");
        assert!(message.contains("number"));
    }

    #[test]
    fn nothing_to_serve_rejected() {
        let (key, _, _) = parse_err("rhs.elements = 16\nrhs.frequency_hz = 12e9\n");
        assert!(key.contains("users.angles_deg"));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let (key, _, _) = parse_err("rhs.elements = 16\nrhs.frequency_hz = 12e9\nusers.angles_deg = [60]\n");
        assert_eq!(key, "users.distances_m");
    }

    #[test]
    fn quantization_forms() {
        let s = parse_scenario(&format!("{MINIMAL}rhs.quantization = 1\n")).unwrap();
        assert_eq!(s.rhs.quantization, Quantization::Bits(1));
        let s = parse_scenario(&format!("{MINIMAL}rhs.quantization = \"continuous\"\n")).unwrap();
        assert_eq!(s.rhs.quantization, Quantization::Continuous);
        assert!(parse_scenario(&format!("{MINIMAL}rhs.quantization = 0\n")).is_err());
    }

    #[test]
    fn default_directions_are_users_then_targets() {
        let s = parse_scenario(
            "rhs.elements = 8\nrhs.frequency_hz = 12e9\nusers.angles_deg = [60]\nusers.distances_m = [1.7]\n\
             targets.angles_deg = [-50, 60]\ntargets.delays_us = [1, 2]\n",
        )
        .unwrap();
        assert_eq!(s.pattern_directions_deg, vec![60.0, -50.0]);
        assert_eq!(s.users[0].capacity_floor, 1.0);
    }

    #[test]
    fn document_round_trip() {
        let s = parse_scenario(crate::harness::PROTOTYPE_EXPERIMENT).unwrap();
        assert_eq!(parse_scenario(&s.to_document()).unwrap(), s);
        let big = Scenario { seed: u64::MAX, ..s };
        assert_eq!(parse_scenario(&big.to_document()).unwrap().seed, u64::MAX);
    }

    #[test]
    fn layout_matches_config() {
        let s = parse_scenario(MINIMAL).unwrap();
        let l = s.layout().unwrap();
        let d = 0.4 * SPEED_OF_LIGHT / 12e9;
        assert_eq!(l.element_count(), 16);
        assert!((l.element_positions()[1].x - l.element_positions()[0].x - d).abs() < 1e-12);
        assert!((l.feed_positions()[0].x - (l.element_positions()[0].x - d / 2.0)).abs() < 1e-12);
    }
}
