use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::analog::{alternating_optimize, AlternatingOutcome, HybridSystem, StopReason};
use crate::baseline::{gain_comparison, gain_comparison_csv, pa_multibeam_phases, pa_pattern, GainRow, PhasedArrayLayout};
use crate::digital::effective_channel;
use crate::error::{Error, Result};
use crate::harness::config::Scenario;
use crate::linksim::{derive_seed, run_cycle, CycleTarget, LinkReport, UserLink};
use crate::metrics::{power_consumption, Architecture, HardwareCounts};
use crate::rhs::{quantize_amplitudes, Quantization, SPEED_OF_LIGHT};

/// Bumped whenever a report key changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Parse { .. } => EXIT_PARSE,
        Error::Infeasible { .. } => EXIT_INFEASIBLE,
        _ => EXIT_RUNTIME,
    }
}

/// `--seed` beats `HOLO_ISAC_SEED`, which beats the scenario.
pub fn resolve_seed(scenario_seed: u64, env: Option<&str>, flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        Some(v) => v.trim().parse().map_err(|_| Error::Parse {
            key: "HOLO_ISAC_SEED".into(),
            line: 0,
            message: format!("`{v}` is not an unsigned 64-bit integer"),
        }),
        None => Ok(scenario_seed),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizerSummary {
    pub iterations: usize,
    pub stop_reason: String,
    pub alpha: f64,
    pub mse: f64,
    pub weights: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UserReport {
    pub angle_deg: f64,
    pub sinr: f64,
    pub sinr_db: f64,
    pub capacity: f64,
    pub capacity_floor: f64,
    pub ber: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerSummary {
    pub rhs_w: f64,
    pub pa_w: f64,
    pub delta_w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleReport {
    pub cycle: usize,
    pub target_angle_deg: f64,
    pub echo_gain: f64,
    pub true_delay_us: f64,
    pub estimated_delay_us: f64,
    pub estimated_range_m: f64,
    pub peak_to_noise_db: f64,
    pub detected: bool,
    pub ber: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinkSummary {
    pub bits_sent: usize,
    pub overall_ber: Option<f64>,
    pub bit_rate_bps: f64,
}

/// Everything written to `metrics.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub seed: u64,
    pub status: String,
    pub error: Option<ErrorReport>,
    pub config: Scenario,
    pub optimizer: Option<OptimizerSummary>,
    pub users: Vec<UserReport>,
    pub power: PowerSummary,
    pub gains: Vec<GainRow>,
    pub cycles: Vec<CycleReport>,
    pub link: Option<LinkSummary>,
}

/// Per-architecture summary used for RHS vs phased-array comparisons.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArchitectureReport {
    pub schema_version: u32,
    pub architecture: Architecture,
    pub power_w: f64,
    /// Directive gain in dB keyed by steered direction in degrees.
    pub gain_db: BTreeMap<String, f64>,
}

/// A finished run: the report, the exit status and the output files by
/// relative path.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub report: RunReport,
    pub exit_code: i32,
    pub files: BTreeMap<String, Vec<u8>>,
}

impl RunOutput {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, bytes)?;
        }
        Ok(())
    }
}

fn degrees(rad: &[f64]) -> impl Iterator<Item = f64> + '_ {
    rad.iter().map(|r| r.to_degrees())
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

fn pattern_csv(angles: &[f64], rhs: &[f64], pa: &[f64]) -> String {
    let mut out = String::from("angle_deg,rhs_power,pa_power\n");
    for ((a, r), p) in degrees(angles).zip(rhs).zip(pa) {
        let _ = writeln!(out, "{a},{r},{p}");
    }
    out
}

const CYCLES_HEADER: &str =
    "cycle,target_angle_deg,echo_gain,true_delay_us,estimated_delay_us,estimated_range_m,peak_to_noise_db,detected,ber\n";

fn cycles_csv(cycles: &[CycleReport]) -> String {
    let mut out = String::from(CYCLES_HEADER);
    for c in cycles {
        let ber = c.ber.map_or_else(String::new, |b| b.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.cycle,
            c.target_angle_deg,
            c.echo_gain,
            c.true_delay_us,
            c.estimated_delay_us,
            c.estimated_range_m,
            c.peak_to_noise_db,
            c.detected,
            ber
        );
    }
    out
}

fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::Converged => "converged",
        StopReason::Stalled => "stalled",
        StopReason::MaxIterations => "max_iterations",
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e.root() {
        Error::InvalidArgument(_) => "invalid_argument",
        Error::DegenerateField { .. } => "degenerate_field",
        Error::SingularChannel { .. } => "singular_channel",
        Error::DegenerateConfiguration(_) => "degenerate_configuration",
        Error::Infeasible { .. } => "infeasible",
        Error::OutOfWindow { .. } => "out_of_window",
        Error::EmptyFrame => "empty_frame",
        Error::Parse { .. } => "parse",
        Error::Version(_) => "version",
        Error::AtIteration { .. } => "at_iteration",
        Error::Io(_) => "io",
    }
}

/// Deployed amplitudes, pattern and link of an optimized system after
/// amplitude quantization.
struct Deployed {
    amplitudes: Vec<f64>,
    pattern: Vec<f64>,
    digital: crate::digital::DigitalBeamformer,
    link: Option<crate::metrics::LinkMetrics>,
}

fn deploy(system: &HybridSystem, out: &AlternatingOutcome, q: Quantization, noise: f64) -> Result<Deployed> {
    if q == Quantization::Continuous {
        return Ok(Deployed {
            amplitudes: out.analog.amplitudes.clone(),
            pattern: out.pattern.clone(),
            digital: out.digital.clone(),
            link: out.link.clone(),
        });
    }
    let a = quantize_amplitudes(&out.analog.amplitudes, q)?;
    if a.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateConfiguration(
            "quantization switched every element off".into(),
        ));
    }
    let digital = system.digital_step(&a)?;
    let eval = system.evaluate(&a, &digital, noise)?;
    Ok(Deployed {
        amplitudes: a,
        pattern: eval.pattern,
        digital,
        link: eval.link,
    })
}

fn pa_layout(s: &Scenario, directions_deg: &[f64]) -> Result<PhasedArrayLayout> {
    let lambda = SPEED_OF_LIGHT / s.rhs.frequency_hz;
    let pa = PhasedArrayLayout::new(s.baseline.elements, s.baseline.spacing_wavelengths * lambda, lambda)?;
    let dirs: Vec<f64> = directions_deg.iter().map(|d| d.to_radians()).collect();
    let phases = pa_multibeam_phases(&pa, &dirs)?;
    pa.with_phases(phases)
}

fn direction_key(deg: f64) -> String {
    format!("{deg}")
}

struct Computed {
    optimizer: OptimizerSummary,
    users: Vec<UserReport>,
    gains: Vec<GainRow>,
    cycles: Vec<CycleReport>,
    link: LinkSummary,
    files: BTreeMap<String, Vec<u8>>,
}

fn compute(s: &Scenario, power: PowerSummary) -> Result<Computed> {
    let mut files = BTreeMap::new();
    let cfg = s.optimizer_config();
    let noise = s.power.noise_w;

    let system = s.system()?;
    let outcome = alternating_optimize(&system, &cfg)?;
    let deployed = deploy(&system, &outcome, s.rhs.quantization, noise)?;
    if let Some(l) = &deployed.link {
        let shortfall = system.shortfall(Some(l));
        if shortfall > 1e-9 {
            return Err(Error::Infeasible {
                weights: outcome.analog.weights.clone(),
                shortfall,
            });
        }
    }
    let angles = system.grid().angles().to_vec();
    let pa_main = pa_pattern(&pa_layout(s, &s.pattern_directions_deg)?, &angles);
    files.insert(
        "beampattern.csv".into(),
        pattern_csv(&angles, &deployed.pattern, &pa_main).into_bytes(),
    );
    files.insert("convergence.csv".into(), outcome.report.to_csv().into_bytes());

    // Two-beam RHS vs phased-array comparison, sensing only.
    let cmp_system = s.system_for(&s.baseline.directions_deg, false)?;
    let cmp_outcome = alternating_optimize(&cmp_system, &cfg)?;
    let cmp = deploy(&cmp_system, &cmp_outcome, s.rhs.quantization, noise)?;
    let cmp_angles = cmp_system.grid().angles().to_vec();
    let pa_cmp = pa_pattern(&pa_layout(s, &s.baseline.directions_deg)?, &cmp_angles);
    let cmp_dirs: Vec<f64> = s.baseline.directions_deg.iter().map(|d| d.to_radians()).collect();
    let mut gains = gain_comparison(&cmp.pattern, &pa_cmp, &cmp_angles, &cmp_dirs, power.rhs_w, power.pa_w)?;
    for (g, d) in gains.iter_mut().zip(&s.baseline.directions_deg) {
        g.direction_deg = *d;
    }
    files.insert("gain_comparison.csv".into(), gain_comparison_csv(&gains).into_bytes());
    files.insert(
        "comparison_pattern.csv".into(),
        pattern_csv(&cmp_angles, &cmp.pattern, &pa_cmp).into_bytes(),
    );
    for (arch, power_w, col) in [
        (Architecture::Rhs, power.rhs_w, 0),
        (Architecture::PhasedArray, power.pa_w, 1),
    ] {
        let gain_db = gains
            .iter()
            .map(|g| (direction_key(g.direction_deg), if col == 0 { g.rhs_gain_db } else { g.pa_gain_db }))
            .collect();
        let name = match arch {
            Architecture::Rhs => "rhs_report.json",
            Architecture::PhasedArray => "pa_report.json",
        };
        files.insert(
            name.into(),
            json(&ArchitectureReport {
                schema_version: SCHEMA_VERSION,
                architecture: arch,
                power_w,
                gain_db,
            }),
        );
    }

    // Link simulation: every user receives one data frame; the first user
    // also rides along each sensing cycle.
    let link_cfg = s.link_config();
    let bit_rate = s.frame_spec().bit_capacity() as f64 / (s.link.duration_us * 1e-6);
    let user_links: Vec<UserLink> = match system.users() {
        Some(h) => {
            let h_eff = effective_channel(h, &deployed.amplitudes, system.reference())?;
            let g = h_eff.matmul(&deployed.digital.vc);
            (0..h.user_count())
                .map(|u| UserLink {
                    channel: g[(u, u)],
                    noise_power: noise,
                })
                .collect()
        }
        None => Vec::new(),
    };
    let mut users = Vec::with_capacity(s.users.len());
    for (u, cfg_u) in s.users.iter().enumerate() {
        let comm = run_cycle(&[], Some(&user_links[u]), &link_cfg, derive_seed(s.seed, 1000 + u as u64))?;
        let metrics = deployed.link.as_ref().expect("users imply link metrics");
        users.push(UserReport {
            angle_deg: cfg_u.angle_deg,
            sinr: metrics.sinr[u],
            sinr_db: 10.0 * metrics.sinr[u].log10(),
            capacity: metrics.capacity[u],
            capacity_floor: cfg_u.capacity_floor,
            ber: comm.overall_ber,
        });
    }

    let peak = deployed.pattern.iter().copied().fold(0.0, f64::max);
    let targets = s
        .targets
        .iter()
        .map(|t| {
            let p = crate::metrics::interpolate(&deployed.pattern, &angles, t.angle_deg.to_radians())?;
            let rel = if peak > 0.0 { (p / peak).sqrt() } else { 0.0 };
            Ok(CycleTarget {
                angle: t.angle_deg.to_radians(),
                delay: t.delay_us * 1e-6,
                gain: t.echo_gain * rel,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report: LinkReport = if targets.is_empty() {
        LinkReport {
            cycles: Vec::new(),
            overall_ber: None,
            bits_sent: 0,
        }
    } else {
        run_cycle(&targets, user_links.first(), &link_cfg, derive_seed(s.seed, 1))?
    };
    let cycles: Vec<CycleReport> = report
        .cycles
        .iter()
        .zip(targets.iter().zip(&s.targets))
        .map(|(c, (t, tc))| CycleReport {
            cycle: c.index,
            target_angle_deg: tc.angle_deg,
            echo_gain: t.gain,
            true_delay_us: tc.delay_us,
            estimated_delay_us: c.sense.estimated_delay * 1e6,
            estimated_range_m: c.sense.estimated_range,
            peak_to_noise_db: c.sense.peak_to_noise,
            detected: c.sense.detected,
            ber: c.ber,
        })
        .collect();
    files.insert("cycles.csv".into(), cycles_csv(&cycles).into_bytes());
    if s.link.dump_iq {
        for c in &report.cycles {
            files.insert(format!("iq/cycle{}_tx.iq", c.index), c.tx.to_iq_bytes());
            files.insert(format!("iq/cycle{}_rx.iq", c.index), c.echo.to_iq_bytes());
        }
    }

    Ok(Computed {
        optimizer: OptimizerSummary {
            iterations: outcome.iterations,
            stop_reason: stop_name(outcome.stop).into(),
            alpha: outcome.report.alpha,
            mse: outcome.report.mse,
            weights: outcome.analog.weights.clone(),
            amplitudes: deployed.amplitudes,
        },
        users,
        gains,
        cycles,
        link: LinkSummary {
            bits_sent: report.bits_sent,
            overall_ber: report.overall_ber,
            bit_rate_bps: bit_rate,
        },
        files,
    })
}

/// Power draw of both architectures from the scenario's power models.
pub fn power_summary(s: &Scenario) -> Result<PowerSummary> {
    s.power_model.rhs.validate()?;
    s.power_model.pa.validate()?;
    let rhs_w = power_consumption(
        &s.power_model.rhs,
        HardwareCounts {
            elements: s.rhs.elements,
            rf_chains: s.rhs.feeds,
        },
    );
    let pa_w = power_consumption(
        &s.power_model.pa,
        HardwareCounts {
            elements: s.baseline.elements,
            rf_chains: 1,
        },
    );
    Ok(PowerSummary {
        rhs_w,
        pa_w,
        delta_w: rhs_w - pa_w,
    })
}

/// Runs the full experiment in memory. Module errors are recorded in the
/// report and reflected in the exit code.
pub fn execute(scenario: &Scenario) -> RunOutput {
    let power = power_summary(scenario).unwrap_or(PowerSummary {
        rhs_w: f64::NAN,
        pa_w: f64::NAN,
        delta_w: f64::NAN,
    });
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        seed: scenario.seed,
        status: "ok".into(),
        error: None,
        config: scenario.clone(),
        optimizer: None,
        users: Vec::new(),
        power,
        gains: Vec::new(),
        cycles: Vec::new(),
        link: None,
    };
    let (mut files, exit) = match power_summary(scenario).and_then(|p| compute(scenario, p)) {
        Ok(c) => {
            report.optimizer = Some(c.optimizer);
            report.users = c.users;
            report.gains = c.gains;
            report.cycles = c.cycles;
            report.link = Some(c.link);
            (c.files, EXIT_OK)
        }
        Err(e) => {
            report.status = "error".into();
            report.error = Some(ErrorReport {
                kind: error_kind(&e).into(),
                message: e.to_string(),
            });
            (BTreeMap::new(), exit_code(&e))
        }
    };
    files.insert("metrics.json".into(), json(&report));
    files.insert("config.conf".into(), scenario.to_document().into_bytes());
    RunOutput {
        report,
        exit_code: exit,
        files,
    }
}

/// [`execute`] and write every output file under `out_dir`.
pub fn run(scenario: &Scenario, out_dir: &Path) -> Result<RunOutput> {
    std::fs::create_dir_all(out_dir)?;
    let out = execute(scenario);
    out.write_to(out_dir)?;
    Ok(out)
}
