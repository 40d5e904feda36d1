use holo_isac::harness::{
    compare, execute, parse_scenario, run, RadarKind, Scenario, EXIT_OK, PROTOTYPE_EXPERIMENT,
};
use holo_isac::linksim::RangeConvention;
use holo_isac::rhs::Quantization;
use proptest::prelude::*;

fn bundled() -> Scenario {
    parse_scenario(PROTOTYPE_EXPERIMENT).unwrap()
}

#[test]
fn bundled_scenario_layout() {
    let s = bundled();
    let l = s.layout().unwrap();
    assert_eq!(l.element_count(), 16);
    assert_eq!(l.feed_count(), 1);
    assert_eq!(s.users.len(), 1);
    assert_eq!((s.users[0].angle_deg, s.users[0].distance_m), (60.0, 1.7));
    let t: Vec<f64> = s.targets.iter().map(|t| t.angle_deg).collect();
    assert_eq!(t, vec![-50.0, 0.0, 20.0]);
    assert_eq!(s.baseline.elements, 5);
    assert_eq!(s.rhs.quantization, Quantization::Bits(1));
    assert_eq!(s.link.range_convention, RangeConvention::OneWay);
}

#[test]
fn bundled_run_reproduces_ranges_and_power() {
    let out = execute(&bundled());
    assert_eq!(out.exit_code, EXIT_OK, "{:?}", out.report.error);
    let r = &out.report;
    assert_eq!((r.power.rhs_w, r.power.pa_w), (0.16, 5.0));
    let ranges: Vec<f64> = r.cycles.iter().map(|c| c.estimated_range_m).collect();
    for (got, want) in ranges.iter().zip([6000.0, 9000.0, 8010.0]) {
        assert!((got - want).abs() <= 20.0, "{got} vs {want}");
    }
    assert!(r.cycles.iter().all(|c| c.detected && c.ber == Some(0.0)));
    let link = r.link.as_ref().unwrap();
    assert_eq!(link.bit_rate_bps, 5e6);
    assert_eq!(link.overall_ber, Some(0.0));
    let cycles = String::from_utf8(out.files["cycles.csv"].clone()).unwrap();
    assert_eq!(cycles.lines().count(), 4);
}

#[test]
fn written_files_are_byte_identical() {
    let s = bundled();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run(&s, a.path()).unwrap();
    run(&s, b.path()).unwrap();
    for name in ra.files.keys() {
        let fa = std::fs::read(a.path().join(name)).unwrap();
        let fb = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(fa, fb, "{name} differs");
    }
}

#[test]
fn zero_targets_header_only() {
    let s = parse_scenario(
        "rhs.elements = 16\nrhs.frequency_hz = 12e9\nusers.angles_deg = [60]\nusers.distances_m = [1.7]\n",
    )
    .unwrap();
    let out = execute(&s);
    assert_eq!(out.exit_code, EXIT_OK);
    let cycles = String::from_utf8(out.files["cycles.csv"].clone()).unwrap();
    assert_eq!(cycles.lines().count(), 1);
    assert!(out.files.contains_key("beampattern.csv"));
    assert_eq!(out.report.users[0].ber, Some(0.0));
}

#[test]
fn sensing_only_scenario_runs() {
    let s = parse_scenario("rhs.elements = 8\nrhs.frequency_hz = 12e9\ntargets.angles_deg = [10]\ntargets.delays_us = [4]\n")
        .unwrap();
    let out = execute(&s);
    assert_eq!(out.exit_code, EXIT_OK, "{:?}", out.report.error);
    assert!(out.report.users.is_empty());
    assert_eq!(out.report.cycles.len(), 1);
    assert_eq!(out.report.cycles[0].ber, None);
}

#[test]
fn report_comparisons() {
    let out = execute(&bundled());
    let parse = |name: &str| serde_json::from_slice::<serde_json::Value>(&out.files[name]).unwrap();
    let metrics = parse("metrics.json");
    let same = compare(&metrics, &metrics).unwrap();
    assert!(!same.deltas.is_empty());
    assert!(same.deltas.iter().all(|d| d.absolute == 0.0));

    let c = compare(&parse("rhs_report.json"), &parse("pa_report.json")).unwrap();
    assert!((c.delta("power_w").unwrap().absolute + 4.84).abs() < 1e-12);
    for dir in ["0", "-30"] {
        let d = c.delta(&format!("gain_db.{dir}")).unwrap();
        assert!(d.absolute >= -0.5, "{dir}: {}", d.absolute);
    }
}

#[test]
fn quantization_override_changes_amplitudes() {
    let mut s = bundled();
    s.rhs.quantization = Quantization::Continuous;
    let out = execute(&s);
    let amps = &out.report.optimizer.as_ref().unwrap().amplitudes;
    assert!(amps.iter().any(|a| *a > 0.0 && *a < 1.0));
}

fn scenario_strategy() -> impl Strategy<Value = Scenario> {
    (
        any::<u64>(),
        (1usize..5, 1usize..4),
        prop::collection::vec(-80.0f64..80.0, 0..3),
        prop::collection::vec((-80.0f64..80.0, 0.0f64..40.0), 1..4),
        (0.1f64..1.0, 1e-14f64..1e-10),
        prop::bool::ANY,
        prop_oneof![Just(Quantization::Continuous), (1u32..4).prop_map(Quantization::Bits)],
    )
        .prop_map(|(seed, (cols, rows), users, targets, (frac, noise), tone, q)| {
            let mut s = bundled();
            s.seed = seed;
            s.rhs.elements = cols * 4 * rows;
            s.rhs.rows = rows;
            s.rhs.feeds = users.len().max(1);
            s.rhs.quantization = q;
            s.users = users
                .iter()
                .map(|&a| holo_isac::harness::UserConfig {
                    angle_deg: a,
                    distance_m: 2.0,
                    capacity_floor: 0.5,
                })
                .collect();
            s.targets = targets
                .iter()
                .map(|&(a, d)| holo_isac::harness::TargetConfig {
                    angle_deg: a,
                    delay_us: d,
                    echo_gain: 0.5,
                })
                .collect();
            s.pattern_directions_deg = targets.iter().map(|t| t.0).collect();
            s.power.radar_fraction = frac;
            s.power.noise_w = noise;
            if tone {
                s.link.radar_waveform = RadarKind::Tone;
                s.link.receive_window_samples = Some(2000);
            }
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_echo_reparses_to_the_same_scenario(s in scenario_strategy()) {
        let doc = s.to_document();
        prop_assert_eq!(parse_scenario(&doc).unwrap(), s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn runs_are_determined_by_scenario_and_seed(seed in any::<u64>()) {
        let s = Scenario { seed, ..bundled() };
        let a = execute(&s);
        let b = execute(&s);
        prop_assert_eq!(a.files, b.files);
    }
}
