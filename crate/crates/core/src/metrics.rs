//! Link and hardware figures of merit.

use serde::{Deserialize, Serialize};

use crate::digital::{effective_channel, DigitalBeamformer, UserChannels};
use crate::error::{Error, Result};
use crate::rhs::ReferenceField;
use crate::scalar::{norm_sqr, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct LinkMetrics<T = f64> {
    pub sinr: Vec<T>,
    pub capacity: Vec<T>,
}

impl<T: Real> LinkMetrics<T> {
    /// Smallest per-user capacity, `+∞` with no users.
    pub fn min_capacity(&self) -> T {
        self.capacity.iter().copied().fold(T::infinity(), T::min)
    }
}

/// Per-user SINR and `log2(1 + SINR)`.
pub fn sinr_and_capacity<T: Real>(
    h: &UserChannels<T>,
    a: &[T],
    q: &ReferenceField<T>,
    v: &DigitalBeamformer<T>,
    noise_power: T,
) -> Result<LinkMetrics<T>> {
    if !(noise_power > T::zero()) {
        return Err(Error::invalid(format!("noise power must be positive, got {noise_power}")));
    }
    let u = h.user_count();
    if v.vc.cols() != u || v.vc.rows() != q.feed_count() || v.vr.rows() != q.feed_count() {
        return Err(Error::invalid(format!(
            "precoder has {} streams for {u} users",
            v.vc.cols()
        )));
    }
    let h_eff = effective_channel(h, a, q)?;
    let gc = h_eff.matmul(&v.vc);
    let gr = h_eff.matmul(&v.vr);
    let mut sinr = Vec::with_capacity(u);
    for user in 0..u {
        let signal = norm_sqr(gc[(user, user)]);
        let inter_users: T = (0..u).filter(|&j| j != user).map(|j| norm_sqr(gc[(user, j)])).sum();
        let radar: T = gr.row(user).iter().map(|z| norm_sqr(*z)).sum();
        sinr.push(signal / (inter_users + radar + noise_power));
    }
    let capacity = sinr.iter().map(|s| (T::one() + *s).log2()).collect();
    Ok(LinkMetrics { sinr, capacity })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Rhs,
    PhasedArray,
}

/// Per-component power draw in watts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub architecture: Architecture,
    pub rf_chain: f64,
    pub phase_shifter: f64,
    pub power_amplifier: f64,
    pub element_bias: f64,
    pub static_power: f64,
}

impl PowerModel {
    /// 10 mW bias per element, nothing else.
    pub fn rhs_default() -> Self {
        Self {
            architecture: Architecture::Rhs,
            rf_chain: 0.0,
            phase_shifter: 0.0,
            power_amplifier: 0.0,
            element_bias: 0.01,
            static_power: 0.0,
        }
    }

    /// 0.5 W phase shifter plus 0.5 W amplifier per element.
    pub fn phased_array_default() -> Self {
        Self {
            architecture: Architecture::PhasedArray,
            rf_chain: 0.0,
            phase_shifter: 0.5,
            power_amplifier: 0.5,
            element_bias: 0.0,
            static_power: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [
            ("rf_chain", self.rf_chain),
            ("phase_shifter", self.phase_shifter),
            ("power_amplifier", self.power_amplifier),
            ("element_bias", self.element_bias),
            ("static_power", self.static_power),
        ];
        match parts.iter().find(|(_, v)| !(*v >= 0.0) || !v.is_finite()) {
            Some((name, v)) => Err(Error::invalid(format!("{name} power must be >= 0, got {v}"))),
            None => Ok(()),
        }
    }
}

/// Element and RF-chain counts of one architecture.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HardwareCounts {
    pub elements: usize,
    pub rf_chains: usize,
}

/// Total draw in watts.
pub fn power_consumption(model: &PowerModel, counts: HardwareCounts) -> f64 {
    let n = counts.elements as f64;
    let rf = counts.rf_chains as f64 * model.rf_chain;
    match model.architecture {
        Architecture::PhasedArray => n * (model.phase_shifter + model.power_amplifier) + rf + model.static_power,
        Architecture::Rhs => n * model.element_bias + rf + model.static_power,
    }
}

/// Power level an isotropic radiator would produce: the `cos θ`-weighted
/// grid mean, i.e. the sphere average of a pattern that is rotationally
/// symmetric about the array axis.
pub fn isotropic_level<T: Real>(pattern: &[T], angles: &[T]) -> Result<T> {
    if pattern.len() != angles.len() || pattern.len() < 2 {
        return Err(Error::invalid("pattern and grid lengths differ or grid too small"));
    }
    let (mut num, mut den) = (T::zero(), T::zero());
    for (&p, &t) in pattern.iter().zip(angles) {
        let w = t.cos().max(T::zero());
        num += p * w;
        den += w;
    }
    let iso = num / den;
    if !(iso > T::zero()) {
        return Err(Error::invalid("pattern radiates no power"));
    }
    Ok(iso)
}

/// Linear interpolation of `pattern` at `angle`.
pub fn interpolate<T: Real>(pattern: &[T], angles: &[T], angle: T) -> Result<T> {
    let (lo, hi) = match (angles.first(), angles.last()) {
        (Some(&lo), Some(&hi)) if pattern.len() == angles.len() => (lo, hi),
        _ => return Err(Error::invalid("pattern and grid lengths differ")),
    };
    let slack = T::lit(1e-9);
    if !(angle >= lo - slack && angle <= hi + slack) {
        return Err(Error::invalid(format!(
            "angle {}° outside grid [{}°, {}°]",
            angle.to_degrees(),
            lo.to_degrees(),
            hi.to_degrees()
        )));
    }
    let i = angles.partition_point(|&t| t <= angle).clamp(1, angles.len() - 1);
    let (t0, t1) = (angles[i - 1], angles[i]);
    let f = ((angle - t0) / (t1 - t0)).max(T::zero()).min(T::one());
    Ok(pattern[i - 1] + (pattern[i] - pattern[i - 1]) * f)
}

/// `10 log10(P(angle) / P_iso)`.
pub fn directive_gain<T: Real>(pattern: &[T], angles: &[T], angle: T) -> Result<T> {
    let iso = isotropic_level(pattern, angles)?;
    let p = interpolate(pattern, angles, angle)?;
    Ok(T::lit(10.0) * (p / iso).log10())
}

/// Gray-coded QPSK bit error rate over AWGN at symbol SNR `es_n0` (linear).
pub fn qpsk_ber_theory(es_n0: f64) -> f64 {
    0.5 * statrs::function::erf::erfc((es_n0 / 2.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digital::{digital_beamformer, power_normalize};
    use crate::linalg::CMatrix;
    use num_complex::Complex;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn grid(step_deg: f64) -> Vec<f64> {
        let n = (180.0 / step_deg).round() as usize;
        (0..=n).map(|i| (-90.0 + step_deg * i as f64).to_radians()).collect()
    }

    fn ula_pattern(n: usize, spacing_wl: f64, angles: &[f64]) -> Vec<f64> {
        angles
            .iter()
            .map(|t| {
                let s: Complex<f64> = (0..n)
                    .map(|k| Complex::from_polar(1.0, 2.0 * core::f64::consts::PI * spacing_wl * k as f64 * t.sin()))
                    .sum();
                s.norm_sqr()
            })
            .collect()
    }

    #[test]
    fn capacity_of_unit_snr_is_one_bit() {
        let h = UserChannels::new(CMatrix::from_row_major(1, 1, vec![c(1.0, 0.0)]), vec![0.0], vec![1.0]).unwrap();
        let q = ReferenceField::from_matrix(CMatrix::from_row_major(1, 1, vec![c(1.0, 0.0)]));
        let v = DigitalBeamformer {
            vc: CMatrix::from_row_major(1, 1, vec![c(0.0, 0.5)]),
            vr: CMatrix::zeros(1, 0),
            total_power: 0.25,
        };
        let m = sinr_and_capacity(&h, &[1.0], &q, &v, 0.25).unwrap();
        assert!((m.sinr[0] - 1.0).abs() < 1e-15);
        assert!((m.capacity[0] - 1.0).abs() < 1e-15);
        assert!(sinr_and_capacity(&h, &[1.0], &q, &v, 0.0).is_err());
    }

    #[test]
    fn zf_capacities_match_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut g = || c(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let (m, k) = (6, 3);
        let h = UserChannels::new(CMatrix::from_fn(2, m, |_, _| g()), vec![0.0, 0.1], vec![1.0, 1.0]).unwrap();
        let q = ReferenceField::from_matrix(CMatrix::from_fn(m, k, |_, _| g()));
        let a: Vec<f64> = (0..m).map(|i| 0.3 + 0.1 * i as f64).collect();
        let v = digital_beamformer(&h, &a, &q, 2.0, 0.4).unwrap();
        let noise = 0.05;
        let got = sinr_and_capacity(&h, &a, &q, &v, noise).unwrap();
        // Direct sums over elements and feeds.
        let w = v.stacked();
        for u in 0..2 {
            let mut gains = vec![c(0.0, 0.0); w.cols()];
            for (col, gain) in gains.iter_mut().enumerate() {
                for e in 0..m {
                    for f in 0..k {
                        *gain += h.matrix()[(u, e)] * a[e] * q.matrix()[(e, f)] * w[(f, col)];
                    }
                }
            }
            let signal = gains[u].norm_sqr();
            let rest: f64 = gains.iter().enumerate().filter(|(j, _)| *j != u).map(|(_, z)| z.norm_sqr()).sum();
            assert!(rest < 1e-12 * signal);
            let sinr = signal / (rest + noise);
            assert!((got.sinr[u] - sinr).abs() <= 1e-10 * sinr);
            assert!((got.capacity[u] - (1.0 + sinr).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn power_model_calibration() {
        let rhs = power_consumption(&PowerModel::rhs_default(), HardwareCounts { elements: 16, rf_chains: 1 });
        assert_eq!(rhs, 0.16);
        let pa = power_consumption(&PowerModel::phased_array_default(), HardwareCounts { elements: 5, rf_chains: 1 });
        assert_eq!(pa, 5.0);
        let zero = PowerModel {
            element_bias: 0.0,
            ..PowerModel::rhs_default()
        };
        assert_eq!(power_consumption(&zero, HardwareCounts { elements: 16, rf_chains: 1 }), 0.0);
        assert!(PowerModel { rf_chain: -1.0, ..zero }.validate().is_err());
        assert!(PowerModel::rhs_default().validate().is_ok());
    }

    #[test]
    fn power_model_with_rf_and_static() {
        let m = PowerModel {
            architecture: Architecture::Rhs,
            rf_chain: 2.0,
            phase_shifter: 9.0,
            power_amplifier: 9.0,
            element_bias: 0.5,
            static_power: 1.0,
        };
        assert_eq!(power_consumption(&m, HardwareCounts { elements: 4, rf_chains: 3 }), 4.0 * 0.5 + 6.0 + 1.0);
        let pa = PowerModel { architecture: Architecture::PhasedArray, ..m };
        assert_eq!(power_consumption(&pa, HardwareCounts { elements: 4, rf_chains: 3 }), 4.0 * 18.0 + 6.0 + 1.0);
    }

    #[test]
    fn gain_examples() {
        let g = grid(0.5);
        let flat = vec![3.0; g.len()];
        assert!(directive_gain(&flat, &g, 0.3).unwrap().abs() < 1e-12);
        let p = ula_pattern(16, 0.5, &g);
        let doubled: Vec<f64> = p.iter().map(|v| 2.0 * v).collect();
        let g0 = directive_gain(&p, &g, 0.0).unwrap();
        assert!((g0 - directive_gain(&doubled, &g, 0.0).unwrap()).abs() < 1e-12);
        assert!((g0 - 10.0 * 16f64.log10()).abs() < 0.5, "{g0}");
        let p5 = ula_pattern(5, 0.5, &g);
        assert!((directive_gain(&p5, &g, 0.0).unwrap() - 10.0 * 5f64.log10()).abs() < 0.5);
        assert!(directive_gain(&p, &g, 1.6).is_err());
        assert!(directive_gain(&vec![0.0; g.len()], &g, 0.0).is_err());
    }

    #[test]
    fn interpolation_between_grid_points() {
        let g = vec![0.0, 1.0, 2.0];
        let p = vec![1.0, 3.0, 2.0];
        assert_eq!(interpolate(&p, &g, 0.5).unwrap(), 2.0);
        assert_eq!(interpolate(&p, &g, 2.0).unwrap(), 2.0);
        assert_eq!(interpolate(&p, &g, 0.0).unwrap(), 1.0);
        assert_eq!(interpolate(&p, &g, 1.75).unwrap(), 2.25);
    }

    #[test]
    fn ber_theory_reference_points() {
        assert!((qpsk_ber_theory(0.0) - 0.5).abs() < 1e-15);
        // Es/N0 = 10 dB: Q(sqrt(10)) = 7.827e-4.
        assert!((qpsk_ber_theory(10.0) - 7.827e-4).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn capacity_monotone_in_noise(seed in any::<u64>(), n1 in 1e-4f64..1.0, n2 in 1e-4f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = || c(rng.sample(StandardNormal), rng.sample(StandardNormal));
            let h = UserChannels::new(CMatrix::from_fn(2, 4, |_, _| g()), vec![0.0; 2], vec![1.0; 2]).unwrap();
            let q = ReferenceField::from_matrix(CMatrix::from_fn(4, 3, |_, _| g()));
            let vc = CMatrix::from_fn(3, 2, |_, _| g());
            let vr = CMatrix::from_fn(3, 1, |_, _| g());
            let a = [0.2, 0.9, 0.5, 0.7];
            let v = power_normalize(&vc, &vr, &a, &q, 1.0, 0.3).unwrap();
            let (lo, hi) = if n1 < n2 { (n1, n2) } else { (n2, n1) };
            let x = sinr_and_capacity(&h, &a, &q, &v, lo).unwrap();
            let y = sinr_and_capacity(&h, &a, &q, &v, hi).unwrap();
            for u in 0..2 {
                prop_assert!(x.capacity[u] >= y.capacity[u]);
                prop_assert_eq!(x.capacity[u], (1.0 + x.sinr[u]).log2());
            }
        }

        #[test]
        fn power_is_linear_in_counts(n in 0usize..200, k in 0usize..8, bias in 0.0f64..1.0, rf in 0.0f64..2.0) {
            let m = PowerModel { rf_chain: rf, element_bias: bias, ..PowerModel::rhs_default() };
            let one = power_consumption(&m, HardwareCounts { elements: n, rf_chains: k });
            let two = power_consumption(&m, HardwareCounts { elements: 2 * n, rf_chains: 2 * k });
            prop_assert!((two - 2.0 * one).abs() <= 1e-12 * two.max(1.0));
        }

        #[test]
        fn gain_is_scale_invariant(s in 1e-6f64..1e6, angle in -1.5f64..1.5) {
            let g = grid(1.0);
            let p = ula_pattern(7, 0.4, &g);
            let ps: Vec<f64> = p.iter().map(|v| v * s).collect();
            let a = directive_gain(&p, &g, angle).unwrap();
            let b = directive_gain(&ps, &g, angle).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
