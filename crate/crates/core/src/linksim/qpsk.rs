use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linksim::frame::Waveform;
use crate::linksim::complex_gaussian;
use crate::scalar::Real;

/// Gray map: 00 → (1+j)/√2, 01 → (−1+j)/√2, 11 → (−1−j)/√2, 10 → (1−j)/√2.
pub fn qpsk_map<T: Real>(bits: &[bool]) -> Result<Vec<Complex<T>>> {
    if bits.len() % 2 != 0 {
        return Err(Error::invalid(format!("QPSK needs an even bit count, got {}", bits.len())));
    }
    let h = T::FRAC_1_SQRT_2();
    Ok(bits
        .chunks_exact(2)
        .map(|b| {
            let re = if b[1] { -h } else { h };
            let im = if b[0] { -h } else { h };
            Complex::new(re, im)
        })
        .collect())
}

/// Hard decisions, inverse of [`qpsk_map`].
pub fn qpsk_demap<T: Real>(symbols: &[Complex<T>]) -> Vec<bool> {
    symbols.iter().flat_map(|s| [s.im < T::zero(), s.re < T::zero()]).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Demodulated {
    pub bits: Vec<bool>,
    pub ber: f64,
}

/// Adds complex AWGN of `noise_power` per sample to `rx`, removes the known
/// channel, averages each symbol's samples and slices. The frame is assumed
/// aligned with `rx[0]`.
pub fn demodulate_ber<T: Real>(
    tx_bits: &[bool],
    rx: &Waveform<T>,
    samples_per_symbol: usize,
    channel: Complex<T>,
    noise_power: T,
    seed: u64,
) -> Result<Demodulated> {
    if tx_bits.len() % 2 != 0 || samples_per_symbol == 0 {
        return Err(Error::invalid("need an even bit count and samples_per_symbol >= 1"));
    }
    let n_sym = tx_bits.len() / 2;
    if rx.len() < n_sym * samples_per_symbol {
        return Err(Error::invalid(format!(
            "{} bits need {} samples, received {}",
            tx_bits.len(),
            n_sym * samples_per_symbol,
            rx.len()
        )));
    }
    if !(noise_power >= T::zero()) || !noise_power.is_finite() {
        return Err(Error::invalid("noise power must be finite and >= 0"));
    }
    if channel.norm() == T::zero() {
        return Err(Error::invalid("channel gain is zero"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let derotate = channel.conj();
    let scale = T::from_usize(samples_per_symbol);
    let symbols: Vec<Complex<T>> = rx.samples[..n_sym * samples_per_symbol]
        .chunks_exact(samples_per_symbol)
        .map(|chunk| {
            let acc = chunk
                .iter()
                .fold(Complex::new(T::zero(), T::zero()), |acc, s| acc + s + complex_gaussian(&mut rng, noise_power));
            acc * derotate / scale
        })
        .collect();
    let bits = qpsk_demap(&symbols);
    let errors = bits.iter().zip(tx_bits).filter(|(a, b)| a != b).count();
    let ber = if tx_bits.is_empty() { 0.0 } else { errors as f64 / tx_bits.len() as f64 };
    Ok(Demodulated { bits, ber })
}
