use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linksim::qpsk::qpsk_map;
use crate::scalar::{cis, norm_sqr, Real};

/// Complex baseband samples at a fixed rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform<T = f64> {
    pub samples: Vec<Complex<T>>,
    pub sample_rate: T,
    /// Seconds.
    pub duration: T,
}

impl<T: Real> Waveform<T> {
    /// Duration is inferred from the sample count.
    pub fn new(samples: Vec<Complex<T>>, sample_rate: T) -> Self {
        let duration = T::from_usize(samples.len()) / sample_rate;
        Self {
            samples,
            sample_rate,
            duration,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> T {
        self.samples.iter().map(|s| norm_sqr(*s)).sum()
    }

    /// Interleaved I/Q as little-endian `f32`.
    pub fn to_iq_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.samples.len() * 8);
        for s in &self.samples {
            out.extend_from_slice(&(s.re.as_f64() as f32).to_le_bytes());
            out.extend_from_slice(&(s.im.as_f64() as f32).to_le_bytes());
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadarWaveform<T = f64> {
    /// Complex exponential at `frequency` Hz offset from the carrier.
    Tone { frequency: T },
    /// Linear sweep from `-bandwidth/2` to `+bandwidth/2` over the frame.
    LfmChirp { bandwidth: T },
}

/// Frame timing and stream weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameSpec<T = f64> {
    pub sample_rate: T,
    pub symbol_rate: T,
    pub duration: T,
    pub radar: RadarWaveform<T>,
    /// Amplitude of the unit-power data stream in the sum.
    pub comm_amplitude: T,
    /// Amplitude of the unit-power radar stream in the sum.
    pub radar_amplitude: T,
}

impl<T: Real> Default for FrameSpec<T> {
    fn default() -> Self {
        Self {
            sample_rate: T::lit(25e6),
            symbol_rate: T::lit(2.5e6),
            duration: T::lit(12e-6),
            radar: RadarWaveform::LfmChirp {
                bandwidth: T::lit(10e6),
            },
            comm_amplitude: T::one(),
            radar_amplitude: T::one(),
        }
    }
}

impl<T: Real> FrameSpec<T> {
    pub fn sample_count(&self) -> usize {
        (self.duration * self.sample_rate).round().to_usize().unwrap_or(0)
    }

    pub fn samples_per_symbol(&self) -> usize {
        (self.sample_rate / self.symbol_rate).round().to_usize().unwrap_or(0)
    }

    /// Bits that fill the frame with whole symbols.
    pub fn bit_capacity(&self) -> usize {
        match self.samples_per_symbol() {
            0 => 0,
            sps => 2 * (self.sample_count() / sps),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > T::zero()) || !self.sample_rate.is_finite() {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if !(self.symbol_rate > T::zero()) || self.sample_rate < T::lit(2.0) * self.symbol_rate {
            return Err(Error::invalid("sample rate must be at least twice the symbol rate"));
        }
        if !(self.duration > T::zero()) || self.sample_count() == 0 {
            return Err(Error::invalid("frame must contain at least one sample"));
        }
        if !(self.comm_amplitude >= T::zero()) || !(self.radar_amplitude >= T::zero()) {
            return Err(Error::invalid("stream amplitudes must be >= 0"));
        }
        match self.radar {
            RadarWaveform::Tone { frequency } if !frequency.is_finite() => {
                Err(Error::invalid("tone frequency must be finite"))
            }
            RadarWaveform::LfmChirp { bandwidth } if !(bandwidth >= T::zero()) || !bandwidth.is_finite() => {
                Err(Error::invalid("chirp bandwidth must be finite and >= 0"))
            }
            _ => Ok(()),
        }
    }
}

/// A generated frame with its components.
#[derive(Clone, Debug, PartialEq)]
pub struct IsacFrame<T = f64> {
    /// `comm_amplitude · data + radar_amplitude · radar`.
    pub combined: Waveform<T>,
    pub data: Waveform<T>,
    pub radar: Waveform<T>,
    pub symbols: Vec<Complex<T>>,
    pub samples_per_symbol: usize,
}

/// Unit-modulus radar samples.
pub fn radar_samples<T: Real>(radar: RadarWaveform<T>, n: usize, sample_rate: T) -> Vec<Complex<T>> {
    let span = T::from_usize(n) / sample_rate;
    (0..n)
        .map(|i| {
            let t = T::from_usize(i) / sample_rate;
            match radar {
                RadarWaveform::Tone { frequency } => cis(T::TAU() * frequency * t),
                RadarWaveform::LfmChirp { bandwidth } => {
                    let tc = t - span / T::lit(2.0);
                    cis(T::PI() * bandwidth / span * tc * tc)
                }
            }
        })
        .collect()
}

/// QPSK data, one symbol per `samples_per_symbol` samples from the start of
/// the frame, plus the radar waveform. Samples past the last symbol carry
/// radar only.
pub fn generate_isac_frame<T: Real>(bits: &[bool], spec: &FrameSpec<T>) -> Result<IsacFrame<T>> {
    spec.validate()?;
    if bits.is_empty() && spec.radar_amplitude == T::zero() {
        return Err(Error::EmptyFrame);
    }
    let symbols = qpsk_map(bits)?;
    let n = spec.sample_count();
    let sps = spec.samples_per_symbol();
    if symbols.len() * sps > n {
        return Err(Error::invalid(format!(
            "{} bits exceed the frame capacity of {} bits",
            bits.len(),
            spec.bit_capacity()
        )));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut data = vec![zero; n];
    for (k, s) in symbols.iter().enumerate() {
        data[k * sps..(k + 1) * sps].fill(*s);
    }
    let radar = radar_samples(spec.radar, n, spec.sample_rate);
    let combined = data
        .iter()
        .zip(&radar)
        .map(|(d, r)| d * spec.comm_amplitude + r * spec.radar_amplitude)
        .collect();
    let wave = |samples| Waveform {
        samples,
        sample_rate: spec.sample_rate,
        duration: spec.duration,
    };
    Ok(IsacFrame {
        combined: wave(combined),
        data: wave(data),
        radar: wave(radar),
        symbols,
        samples_per_symbol: sps,
    })
}
