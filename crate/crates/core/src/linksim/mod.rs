//! Sample-level transmit/listen cycles: frame synthesis, delayed target
//! echoes, matched-filter ranging and QPSK reception.

mod echo;
mod frame;
mod qpsk;

pub use echo::{estimate_range, matched_filter, target_echo, EchoConfig, RangeConvention, SenseResult};
pub use frame::{generate_isac_frame, radar_samples, FrameSpec, IsacFrame, RadarWaveform, Waveform};
pub use qpsk::{demodulate_ber, qpsk_demap, qpsk_map, Demodulated};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Circularly symmetric Gaussian sample with `E|n|² = power`.
pub(crate) fn complex_gaussian<T: Real, R: Rng>(rng: &mut R, power: T) -> Complex<T> {
    let s = (power.as_f64() / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(re * s), T::lit(im * s))
}

/// SplitMix64 finalizer over `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkSimConfig<T = f64> {
    pub frame: FrameSpec<T>,
    pub echo_noise_power: T,
    pub range_convention: RangeConvention,
    pub receive_window: Option<usize>,
    pub detection_threshold_db: f64,
}

impl<T: Real> Default for LinkSimConfig<T> {
    fn default() -> Self {
        Self {
            frame: FrameSpec::default(),
            echo_noise_power: T::lit(0.01),
            range_convention: RangeConvention::OneWay,
            receive_window: None,
            detection_threshold_db: 10.0,
        }
    }
}

/// One sensing direction of the time-division schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleTarget<T = f64> {
    pub angle: T,
    /// Seconds.
    pub delay: T,
    /// Echo amplitude, including the transmit beam gain toward the target.
    pub gain: T,
}

/// Baseband channel to the user for the data stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UserLink<T = f64> {
    pub channel: Complex<T>,
    /// Watts per complex sample.
    pub noise_power: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CycleRecord<T = f64> {
    pub index: usize,
    pub target_angle: T,
    pub true_delay: T,
    pub sense: SenseResult,
    /// `None` without a user.
    pub ber: Option<f64>,
    pub tx: Waveform<T>,
    pub echo: Waveform<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkReport<T = f64> {
    pub cycles: Vec<CycleRecord<T>>,
    /// Bit errors over all frames sent to the user.
    pub overall_ber: Option<f64>,
    pub bits_sent: usize,
}

struct Reception {
    ber: f64,
    bits: usize,
}

fn receive<T: Real>(frame: &IsacFrame<T>, bits: &[bool], spec: &FrameSpec<T>, user: &UserLink<T>, seed: u64) -> Result<Reception> {
    // The radar streams are nulled at the user.
    let h = user.channel * spec.comm_amplitude;
    let rx = Waveform::new(frame.data.samples.iter().map(|s| s * h).collect(), spec.sample_rate);
    let d = demodulate_ber(bits, &rx, frame.samples_per_symbol, h, user.noise_power, seed)?;
    Ok(Reception { ber: d.ber, bits: bits.len() })
}

/// One transmit/listen cycle per target; every frame also carries data to
/// the user. Without targets a single data-only frame is sent. Cycle `i`
/// draws its randomness from `derive_seed(seed, i)`.
pub fn run_cycle<T: Real>(
    targets: &[CycleTarget<T>],
    user: Option<&UserLink<T>>,
    cfg: &LinkSimConfig<T>,
    seed: u64,
) -> Result<LinkReport<T>> {
    cfg.frame.validate()?;
    if let Some(u) = user {
        if u.channel.norm() == T::zero() {
            return Err(Error::invalid("user channel gain is zero"));
        }
    }
    let capacity = if user.is_some() { cfg.frame.bit_capacity() } else { 0 };
    let mut cycles = Vec::with_capacity(targets.len());
    let (mut errors, mut bits_sent) = (0.0, 0);
    let frames = targets.len().max(usize::from(user.is_some()));
    for i in 0..frames {
        let cycle_seed = derive_seed(seed, i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(cycle_seed);
        let bits: Vec<bool> = (0..capacity).map(|_| rng.random()).collect();
        let frame = generate_isac_frame(&bits, &cfg.frame)?;
        let ber = match user {
            Some(u) => {
                let r = receive(&frame, &bits, &cfg.frame, u, derive_seed(cycle_seed, 2))?;
                errors += r.ber * r.bits as f64;
                bits_sent += r.bits;
                Some(r.ber)
            }
            None => None,
        };
        let Some(t) = targets.get(i) else { continue };
        let echo_cfg = EchoConfig {
            delay: t.delay,
            gain: t.gain,
            noise_power: cfg.echo_noise_power,
            range_convention: cfg.range_convention,
            receive_window: cfg.receive_window,
        };
        let echo = target_echo(&frame.combined, &echo_cfg, derive_seed(cycle_seed, 1))?;
        let sense = estimate_range(&frame.combined, &echo, &echo_cfg, cfg.detection_threshold_db)?;
        cycles.push(CycleRecord {
            index: i,
            target_angle: t.angle,
            true_delay: t.delay,
            sense,
            ber,
            tx: frame.combined,
            echo,
        });
    }
    Ok(LinkReport {
        cycles,
        overall_ber: (bits_sent > 0).then(|| errors / bits_sent as f64),
        bits_sent,
    })
}
