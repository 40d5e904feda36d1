use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linksim::complex_gaussian;
use crate::linksim::frame::Waveform;
use crate::rhs::SPEED_OF_LIGHT;
use crate::scalar::{norm_sqr, Real};

/// How a delay maps to a range.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeConvention {
    /// `c·τ`
    #[default]
    OneWay,
    /// `c·τ/2`
    TwoWay,
}

impl RangeConvention {
    pub fn range<T: Real>(self, delay: T) -> T {
        let r = T::lit(SPEED_OF_LIGHT) * delay;
        match self {
            RangeConvention::OneWay => r,
            RangeConvention::TwoWay => r / T::lit(2.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EchoConfig<T = f64> {
    /// Seconds.
    pub delay: T,
    /// Linear amplitude.
    pub gain: T,
    /// Watts per complex sample.
    pub noise_power: T,
    pub range_convention: RangeConvention,
    /// Received samples; `None` fits the delayed frame exactly.
    pub receive_window: Option<usize>,
}

impl<T: Real> EchoConfig<T> {
    pub fn delay_samples(&self, sample_rate: T) -> usize {
        (self.delay * sample_rate).round().to_usize().unwrap_or(usize::MAX)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SenseResult {
    pub estimated_delay: f64,
    pub estimated_range: f64,
    /// dB.
    pub peak_to_noise: f64,
    pub detected: bool,
}

/// `gain · frame` shifted by `round(delay · fs)` samples, plus complex AWGN.
pub fn target_echo<T: Real>(frame: &Waveform<T>, cfg: &EchoConfig<T>, seed: u64) -> Result<Waveform<T>> {
    if !(cfg.delay >= T::zero()) || !cfg.delay.is_finite() {
        return Err(Error::invalid("echo delay must be finite and >= 0"));
    }
    if !(cfg.gain >= T::zero()) || !cfg.gain.is_finite() {
        return Err(Error::invalid("echo gain must be finite and >= 0"));
    }
    if !(cfg.noise_power >= T::zero()) || !cfg.noise_power.is_finite() {
        return Err(Error::invalid("noise power must be finite and >= 0"));
    }
    let shift = cfg.delay_samples(frame.sample_rate);
    let needed = shift.saturating_add(frame.len());
    let window = cfg.receive_window.unwrap_or(needed);
    if needed > window {
        return Err(Error::OutOfWindow {
            delay_samples: shift,
            window_samples: window,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = Complex::new(T::zero(), T::zero());
    let samples = (0..window)
        .map(|i| {
            let clean = if i >= shift && i < needed { frame.samples[i - shift] * cfg.gain } else { zero };
            if cfg.noise_power > T::zero() {
                clean + complex_gaussian(&mut rng, cfg.noise_power)
            } else {
                clean
            }
        })
        .collect();
    Ok(Waveform::new(samples, frame.sample_rate))
}

/// `|Σ_n rx[n + l] · conj(tx[n])|²` for every lag with full overlap.
pub fn matched_filter<T: Real>(tx: &[Complex<T>], rx: &[Complex<T>]) -> Vec<T> {
    if rx.len() < tx.len() {
        return Vec::new();
    }
    (0..=rx.len() - tx.len())
        .map(|l| {
            let c = tx
                .iter()
                .zip(&rx[l..])
                .fold(Complex::new(T::zero(), T::zero()), |acc, (t, r)| acc + r * t.conj());
            norm_sqr(c)
        })
        .collect()
}

/// Delay and range from the matched-filter peak. Peak-to-noise compares the
/// peak with the median correlation power.
pub fn estimate_range<T: Real>(
    tx: &Waveform<T>,
    rx: &Waveform<T>,
    cfg: &EchoConfig<T>,
    detection_threshold_db: f64,
) -> Result<SenseResult> {
    if tx.is_empty() || rx.len() < tx.len() {
        return Err(Error::invalid(format!(
            "received {} samples for a {}-sample frame",
            rx.len(),
            tx.len()
        )));
    }
    if tx.sample_rate != rx.sample_rate {
        return Err(Error::invalid("transmit and receive sample rates differ"));
    }
    if tx.energy() == T::zero() {
        return Err(Error::invalid("transmitted frame is all zeros"));
    }
    let corr: Vec<f64> = matched_filter(&tx.samples, &rx.samples).into_iter().map(Real::as_f64).collect();
    let (lag, peak) = corr
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    let mut sorted = corr.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let peak_to_noise = if peak <= 0.0 {
        f64::NEG_INFINITY
    } else if median <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak / median).log10()
    };
    let estimated_delay = lag as f64 / tx.sample_rate.as_f64();
    Ok(SenseResult {
        estimated_delay,
        estimated_range: cfg.range_convention.range(estimated_delay),
        peak_to_noise,
        detected: peak_to_noise >= detection_threshold_db,
    })
}
