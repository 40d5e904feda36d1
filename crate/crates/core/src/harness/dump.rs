use std::fmt::Write as _;

use crate::analog::transmit_beampattern;
use crate::digital::radar_only_beamformer;
use crate::error::Result;
use crate::harness::config::Scenario;
use crate::holography::{build_pattern_bank, Direction, PatternBank};
use crate::rhs::{quantize_amplitudes, reference_wave_matrix};

fn bank(s: &Scenario) -> Result<PatternBank> {
    let layout = s.layout()?;
    let q = reference_wave_matrix(&layout, s.rhs.attenuation_np_per_m);
    let dirs: Vec<Direction> = s
        .pattern_directions_deg
        .iter()
        .map(|d| Direction::planar(d.to_radians()))
        .collect();
    build_pattern_bank(&layout, &q, &dirs)
}

/// The holographic pattern bank of the scenario as CSV.
pub fn bank_dump(s: &Scenario) -> Result<String> {
    Ok(bank(s)?.to_csv())
}

/// Beampattern of every bank pattern used alone (after quantization), one
/// column per pattern.
pub fn pattern_dump(s: &Scenario) -> Result<String> {
    let layout = s.layout()?;
    let q = reference_wave_matrix(&layout, s.rhs.attenuation_np_per_m);
    let bank = bank(s)?;
    let angles = crate::analog::uniform_angles(s.grid.step_deg)?;
    let mut columns = Vec::with_capacity(bank.len());
    let mut out = String::from("angle_deg");
    let k = bank.feed_count();
    for (i, p) in bank.patterns().iter().enumerate() {
        let _ = write!(out, ",theta{}_feed{}", s.pattern_directions_deg[i / k], p.feed_index);
        let a = quantize_amplitudes(&p.amplitudes, s.rhs.quantization)?;
        let v = radar_only_beamformer(&a, &q, s.power.total_w)?;
        columns.push(transmit_beampattern(&layout, &a, &q, &v, &angles)?);
    }
    out.push('\n');
    for (g, t) in angles.iter().enumerate() {
        let _ = write!(out, "{}", t.to_degrees());
        for c in &columns {
            let _ = write!(out, ",{}", c[g]);
        }
        out.push('\n');
    }
    Ok(out)
}
