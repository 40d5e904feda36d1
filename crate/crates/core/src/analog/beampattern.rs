use num_complex::Complex;

use crate::digital::DigitalBeamformer;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::rhs::{free_space_steering, ReferenceField, RhsLayout};
use crate::scalar::{norm_sqr, Real};

/// Angular grid with the desired (indicator) pattern over it.
#[derive(Clone, Debug, PartialEq)]
pub struct BeampatternGrid<T = f64> {
    angles: Vec<T>,
    desired: Vec<T>,
    target_angles: Vec<T>,
    beamwidth: T,
}

impl<T: Real> BeampatternGrid<T> {
    pub fn new(angles: Vec<T>, target_angles: Vec<T>, beamwidth: T) -> Result<Self> {
        if angles.len() < 2 {
            return Err(Error::invalid("grid needs at least two angles"));
        }
        if angles.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid angles must be strictly increasing"));
        }
        let desired = desired_pattern(&target_angles, beamwidth, &angles)?;
        Ok(Self {
            angles,
            desired,
            target_angles,
            beamwidth,
        })
    }

    /// Uniform grid over [-90°, 90°].
    pub fn uniform(step_deg: T, target_angles: Vec<T>, beamwidth: T) -> Result<Self> {
        Self::new(uniform_angles(step_deg)?, target_angles, beamwidth)
    }

    pub fn angles(&self) -> &[T] {
        &self.angles
    }

    pub fn desired(&self) -> &[T] {
        &self.desired
    }

    pub fn target_angles(&self) -> &[T] {
        &self.target_angles
    }

    pub fn beamwidth(&self) -> T {
        self.beamwidth
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// `-90°, -90° + step, .., 90°` in radians; `step` must divide 180°.
pub fn uniform_angles<T: Real>(step_deg: T) -> Result<Vec<T>> {
    let step = step_deg.as_f64();
    if !(step > 0.0) || step > 180.0 {
        return Err(Error::invalid(format!("grid step must be in (0°, 180°], got {step}°")));
    }
    let n = (180.0 / step).round();
    if (n * step - 180.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("grid step {step}° does not divide 180°")));
    }
    Ok((0..=n as usize)
        .map(|i| T::lit((-90.0 + step * i as f64).to_radians()))
        .collect())
}

/// Indicator of `|θ_g - θ_t| <= Δ/2`; each target also marks its nearest
/// grid point so that narrow beams never vanish.
pub fn desired_pattern<T: Real>(target_angles: &[T], beamwidth: T, angles: &[T]) -> Result<Vec<T>> {
    let (lo, hi) = match (angles.first(), angles.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Error::invalid("empty grid")),
    };
    if !(beamwidth >= T::zero()) {
        return Err(Error::invalid(format!("beamwidth must be >= 0, got {beamwidth}")));
    }
    // Absorbs degree-to-radian rounding at plateau edges.
    let slack = T::lit(1e-9);
    let mut d = vec![T::zero(); angles.len()];
    for (t, &target) in target_angles.iter().enumerate() {
        if !(target >= lo - slack && target <= hi + slack) {
            return Err(Error::invalid(format!(
                "target {t} at {}° is outside the grid [{}°, {}°]",
                target.to_degrees(),
                lo.to_degrees(),
                hi.to_degrees()
            )));
        }
        let half = beamwidth * T::lit(0.5) + slack;
        let mut nearest = 0;
        for (g, &theta) in angles.iter().enumerate() {
            if (theta - target).abs() <= half {
                d[g] = T::one();
            }
            if (theta - target).abs() < (angles[nearest] - target).abs() {
                nearest = g;
            }
        }
        d[nearest] = T::one();
    }
    Ok(d)
}

/// `G x M` matrix of `conj(a_fs(θ_g))`, so that row `g` times `W` is the
/// far field toward `θ_g`.
pub fn steering_table<T: Real>(layout: &RhsLayout<T>, angles: &[T]) -> CMatrix<T> {
    let rows: Vec<Complex<T>> = angles
        .iter()
        .flat_map(|&t| free_space_steering(layout, t, T::zero()).0.into_iter().map(|z| z.conj()))
        .collect();
    CMatrix::from_row_major(angles.len(), layout.element_count(), rows)
}

/// `P(θ_g) = ‖W^H a_fs(θ_g)‖²` with `W = diag(a) Q [Vc Vr]`.
pub fn transmit_beampattern<T: Real>(
    layout: &RhsLayout<T>,
    a: &[T],
    q: &ReferenceField<T>,
    v: &DigitalBeamformer<T>,
    angles: &[T],
) -> Result<Vec<T>> {
    beampattern_from_table(&steering_table(layout, angles), a, q, v)
}

/// As [`transmit_beampattern`] with a precomputed [`steering_table`].
pub fn beampattern_from_table<T: Real>(
    steering: &CMatrix<T>,
    a: &[T],
    q: &ReferenceField<T>,
    v: &DigitalBeamformer<T>,
) -> Result<Vec<T>> {
    let m = q.element_count();
    if a.len() != m || steering.cols() != m || v.vc.rows() != q.feed_count() || v.vr.rows() != q.feed_count() {
        return Err(Error::invalid("beampattern dimensions disagree"));
    }
    let w = q.matrix().scale_rows(a).matmul(&v.stacked());
    let field = steering.matmul(&w);
    Ok((0..field.rows())
        .map(|g| field.row(g).iter().map(|z| norm_sqr(*z)).sum::<T>().max(T::zero()))
        .collect())
}

/// Optimal scale `α >= 0` and the resulting mean squared error
/// `(1/G) Σ (α d_g - P_g)²`.
pub fn mismatch_error<T: Real>(p: &[T], d: &[T]) -> Result<(T, T)> {
    if p.len() != d.len() || p.is_empty() {
        return Err(Error::invalid("pattern and desired pattern lengths differ"));
    }
    let dd: T = d.iter().map(|v| *v * *v).sum();
    if dd == T::zero() {
        return Err(Error::invalid("desired pattern is identically zero"));
    }
    let dp: T = d.iter().zip(p).map(|(a, b)| *a * *b).sum();
    let alpha = (dp / dd).max(T::zero());
    let mse = d
        .iter()
        .zip(p)
        .map(|(&dg, &pg)| {
            let r = alpha * dg - pg;
            r * r
        })
        .sum::<T>()
        / T::from_usize(p.len());
    Ok((alpha, mse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digital::{power_normalize, radiated_power};
    use crate::holography::{build_pattern_bank, superpose, Direction};
    use crate::rhs::{build_layout, reference_wave_matrix, Point3, SPEED_OF_LIGHT};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn deg(v: f64) -> f64 {
        v.to_radians()
    }

    fn layout(m: usize, spacing_wl: f64) -> RhsLayout<f64> {
        let lam = SPEED_OF_LIGHT / 12e9;
        let d = spacing_wl * lam;
        let x0 = -(m as f64 - 1.0) / 2.0 * d - d / 2.0;
        build_layout((m, 1), d, vec![Point3::on_x(x0)], 12e9, 1.3).unwrap()
    }

    fn unit_v() -> DigitalBeamformer<f64> {
        DigitalBeamformer {
            vc: CMatrix::from_row_major(1, 1, vec![c(1.0, 0.0)]),
            vr: CMatrix::zeros(1, 0),
            total_power: 1.0,
        }
    }

    #[test]
    fn uniform_grid_shape() {
        let g = uniform_angles(0.5f64).unwrap();
        assert_eq!(g.len(), 361);
        assert_eq!(g[0], deg(-90.0));
        assert_eq!(g[360], deg(90.0));
        assert_eq!(uniform_angles(1.0f64).unwrap().len(), 181);
        assert!(uniform_angles(0.7f64).is_err());
        assert!(uniform_angles(0.0f64).is_err());
    }

    #[test]
    fn desired_examples() {
        let g = uniform_angles(1.0f64).unwrap();
        let d = desired_pattern(&[0.0], deg(10.0), &g).unwrap();
        let ones: Vec<usize> = (0..g.len()).filter(|&i| d[i] == 1.0).collect();
        assert_eq!(ones, (85..=95).collect::<Vec<_>>());
        let d3 = desired_pattern(&[deg(-50.0), 0.0, deg(20.0)], deg(10.0), &g).unwrap();
        assert_eq!(d3.iter().filter(|v| **v == 1.0).count(), 33);
        let mut plateaus = 0;
        for i in 1..g.len() {
            if d3[i] == 1.0 && d3[i - 1] == 0.0 {
                plateaus += 1;
            }
        }
        assert_eq!(plateaus, 3);
        let narrow = desired_pattern(&[deg(20.2)], deg(0.1), &g).unwrap();
        let ones: Vec<usize> = (0..g.len()).filter(|&i| narrow[i] == 1.0).collect();
        assert_eq!(ones, vec![110]);
        assert!(desired_pattern(&[deg(95.0)], deg(10.0), &g).is_err());
        assert!(BeampatternGrid::new(vec![0.0], vec![], 0.1).is_err());
    }

    #[test]
    fn zero_amplitudes_radiate_nothing() {
        let l = layout(8, 0.4);
        let q = reference_wave_matrix(&l, 0.0);
        let g = uniform_angles(1.0).unwrap();
        let p = transmit_beampattern(&l, &[0.0; 8], &q, &unit_v(), &g).unwrap();
        assert!(p.iter().all(|v| *v == 0.0));
        assert!(transmit_beampattern(&l, &[0.0; 7], &q, &unit_v(), &g).is_err());
    }

    #[test]
    fn single_element_is_isotropic() {
        let l = layout(1, 0.4);
        let q = reference_wave_matrix(&l, 0.0);
        let g = uniform_angles(1.0).unwrap();
        let p = transmit_beampattern(&l, &[1.0], &q, &unit_v(), &g).unwrap();
        for v in p {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_beam_has_main_lobe_near_twenty_degrees() {
        let l = layout(16, 0.4);
        let q = reference_wave_matrix(&l, 0.0);
        let bank = build_pattern_bank(&l, &q, &[Direction::planar(deg(20.0))]).unwrap();
        let ab = superpose(&bank, &[1.0]).unwrap();
        let g = uniform_angles(1.0).unwrap();
        let p = transmit_beampattern(&l, &ab.amplitudes, &q, &unit_v(), &g).unwrap();
        let peak = p.iter().cloned().fold(0.0, f64::max);
        // The mirror lobe near -14 degrees is almost as strong.
        let lobe = (1..g.len() - 1)
            .filter(|&i| p[i] >= p[i - 1] && p[i] >= p[i + 1])
            .find(|&i| (g[i].to_degrees() - 20.0).abs() <= 3.0)
            .expect("no lobe near 20 degrees");
        assert!(p[lobe] >= 0.95 * peak, "{} vs {peak}", p[lobe]);
    }

    #[test]
    fn matches_direct_double_sum() {
        let l = layout(5, 0.4);
        let q = reference_wave_matrix(&l, 0.0);
        let a = [0.1, 0.9, 0.4, 0.6, 0.3];
        let v = unit_v();
        let g = vec![deg(-40.0), deg(10.0), deg(33.0)];
        let p = transmit_beampattern(&l, &a, &q, &v, &g).unwrap();
        let k0 = l.wavenumber();
        for (i, &t) in g.iter().enumerate() {
            let mut f = c(0.0, 0.0);
            for (m, pos) in l.element_positions().iter().enumerate() {
                // conj(exp(-j k x sinθ)) = exp(+j k x sinθ).
                f += Complex::from_polar(1.0, k0 * pos.x * t.sin()) * a[m] * q.matrix()[(m, 0)];
            }
            assert!((p[i] - f.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn power_consistency_on_half_wave_grid() {
        // Cos-weighted grid mean approximates the sphere average, which
        // equals radiated power for half-wave spacing.
        let l = layout(16, 0.5);
        let q = reference_wave_matrix(&l, 0.0);
        let bank = build_pattern_bank(&l, &q, &[Direction::planar(deg(-30.0)), Direction::planar(deg(25.0))]).unwrap();
        let a = superpose(&bank, &[0.4, 0.6]).unwrap().amplitudes;
        let v = power_normalize(&unit_v().vc, &unit_v().vr, &a, &q, 2.5, 0.5).unwrap();
        assert!((radiated_power(&a, &q, &v.vc) - 2.5).abs() < 1e-9);
        let g = uniform_angles(0.5).unwrap();
        let p = transmit_beampattern(&l, &a, &q, &v, &g).unwrap();
        let (num, den) = p.iter().zip(&g).fold((0.0, 0.0), |(n, d), (pv, t)| (n + pv * t.cos(), d + t.cos()));
        let avg = num / den;
        assert!((avg - 2.5).abs() / 2.5 < 0.02, "{avg}");
    }

    #[test]
    fn mismatch_examples() {
        let g = uniform_angles(1.0).unwrap();
        let d = desired_pattern(&[0.0], deg(10.0), &g).unwrap();
        let (a, e) = mismatch_error(&d, &d).unwrap();
        assert_eq!((a, e), (1.0, 0.0));
        let p2: Vec<f64> = d.iter().map(|v| 2.0 * v).collect();
        let (a, e) = mismatch_error(&p2, &d).unwrap();
        assert_eq!((a, e), (2.0, 0.0));
        let mut bump = d.clone();
        bump[10] += 1.0;
        let (a, e) = mismatch_error(&bump, &d).unwrap();
        assert_eq!(a, 1.0);
        assert!((e - 1.0 / 181.0).abs() < 1e-15);
        assert!(mismatch_error(&d, &vec![0.0; d.len()]).is_err());
        assert!(mismatch_error(&d[..3], &d).is_err());
    }

    proptest! {
        #[test]
        fn alpha_matches_numeric_minimization(p in prop::collection::vec(0.0f64..5.0, 20), mask in prop::collection::vec(any::<bool>(), 20)) {
            let d: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            prop_assume!(d.iter().any(|v| *v > 0.0));
            let (alpha, mse) = mismatch_error(&p, &d).unwrap();
            let f = |a: f64| p.iter().zip(&d).map(|(pg, dg)| (a * dg - pg).powi(2)).sum::<f64>() / 20.0;
            // Bisection on the sign of a central-difference slope over [0, 10].
            let slope = |a: f64| f(a + 1e-3) - f(a - 1e-3);
            let (mut lo, mut hi) = (0.0f64, 10.0f64);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if slope(mid) > 0.0 { hi = mid } else { lo = mid }
            }
            let a_num = 0.5 * (lo + hi);
            prop_assert!((alpha - a_num).abs() < 1e-9);
            prop_assert!((mse - f(a_num)).abs() < 1e-9);
        }

        #[test]
        fn pattern_is_nonnegative(amps in prop::collection::vec(0.0f64..1.0, 6), re in -1.0f64..1.0, im in -1.0f64..1.0) {
            let l = layout(6, 0.4);
            let q = reference_wave_matrix(&l, 0.3);
            let v = DigitalBeamformer { vc: CMatrix::from_row_major(1, 1, vec![c(re, im)]), vr: CMatrix::zeros(1, 0), total_power: 1.0 };
            let g = uniform_angles(2.0).unwrap();
            for p in transmit_beampattern(&l, &amps, &q, &v, &g).unwrap() {
                prop_assert!(p >= 0.0);
            }
        }
    }
}
