//! Geometry and field model of a reconfigurable holographic surface.
//!
//! Elements sit on the `z = 0` plane; feeds inject a guided reference wave
//! that travels with wavenumber `n * 2π/λ0` to every element. Angles follow
//! the broadside convention: `theta` is measured from the surface normal,
//! `phi` is the azimuth in the surface plane.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{cis, Real};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Cartesian position in meters.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Point3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn on_x(x: T) -> Self {
        Self::new(x, T::zero(), T::zero())
    }

    pub fn distance(&self, other: &Self) -> T {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RhsLayout<T = f64> {
    element_positions: Vec<Point3<T>>,
    feed_positions: Vec<Point3<T>>,
    carrier_frequency: T,
    refractive_index: T,
}

impl<T: Real> RhsLayout<T> {
    /// Validates and assembles a layout from explicit positions.
    pub fn new(
        element_positions: Vec<Point3<T>>,
        feed_positions: Vec<Point3<T>>,
        carrier_frequency: T,
        refractive_index: T,
    ) -> Result<Self> {
        if element_positions.is_empty() {
            return Err(Error::invalid("layout needs at least one element"));
        }
        if feed_positions.is_empty() {
            return Err(Error::invalid("layout needs at least one feed"));
        }
        if !(carrier_frequency > T::zero()) || !carrier_frequency.is_finite() {
            return Err(Error::invalid("carrier frequency must be positive"));
        }
        if !(refractive_index > T::one()) || !refractive_index.is_finite() {
            return Err(Error::invalid("waveguide refractive index must exceed 1"));
        }
        if element_positions.iter().chain(&feed_positions).any(|p| !p.is_finite()) {
            return Err(Error::invalid("positions must be finite"));
        }
        if element_positions.iter().any(|p| p.z != T::zero()) {
            return Err(Error::invalid("elements must lie on the z = 0 plane"));
        }
        if feed_positions.iter().any(|p| p.z > T::zero()) {
            return Err(Error::invalid("feeds must lie on or under the element plane"));
        }
        for (i, a) in element_positions.iter().enumerate() {
            if element_positions[..i].iter().any(|b| b == a) {
                return Err(Error::invalid(format!("element {i} duplicates an earlier position")));
            }
        }
        Ok(Self {
            element_positions,
            feed_positions,
            carrier_frequency,
            refractive_index,
        })
    }

    pub fn element_positions(&self) -> &[Point3<T>] {
        &self.element_positions
    }

    pub fn feed_positions(&self) -> &[Point3<T>] {
        &self.feed_positions
    }

    pub fn carrier_frequency(&self) -> T {
        self.carrier_frequency
    }

    pub fn refractive_index(&self) -> T {
        self.refractive_index
    }

    /// M.
    pub fn element_count(&self) -> usize {
        self.element_positions.len()
    }

    /// K.
    pub fn feed_count(&self) -> usize {
        self.feed_positions.len()
    }

    /// Free-space wavelength λ0 in meters.
    pub fn wavelength(&self) -> T {
        T::lit(SPEED_OF_LIGHT) / self.carrier_frequency
    }

    /// Free-space wavenumber 2π/λ0.
    pub fn wavenumber(&self) -> T {
        T::TAU() / self.wavelength()
    }

    /// Guided wavenumber inside the waveguide.
    pub fn guided_wavenumber(&self) -> T {
        self.wavenumber() * self.refractive_index
    }
}

/// Places `shape.0 x shape.1` elements on a regular grid centered at the
/// origin. Element `m = iy * nx + ix`.
pub fn build_layout<T: Real>(
    grid_shape: (usize, usize),
    element_spacing: T,
    feed_positions: Vec<Point3<T>>,
    carrier_frequency: T,
    refractive_index: T,
) -> Result<RhsLayout<T>> {
    let (nx, ny) = grid_shape;
    if nx == 0 || ny == 0 {
        return Err(Error::invalid("grid shape must be at least 1x1"));
    }
    if !(element_spacing > T::zero()) {
        return Err(Error::invalid("element spacing must be positive"));
    }
    if feed_positions.is_empty() {
        return Err(Error::invalid("at least one feed is required"));
    }
    let half = T::lit(0.5);
    let cx = (T::from_usize(nx) - T::one()) * half;
    let cy = (T::from_usize(ny) - T::one()) * half;
    let elements = (0..ny)
        .flat_map(|iy| {
            (0..nx).map(move |ix| {
                Point3::new(
                    (T::from_usize(ix) - cx) * element_spacing,
                    (T::from_usize(iy) - cy) * element_spacing,
                    T::zero(),
                )
            })
        })
        .collect();
    RhsLayout::new(elements, feed_positions, carrier_frequency, refractive_index)
}

/// Guided reference wave `Q` (M x K): entry `(m, k)` is the wave from feed
/// `k` observed at element `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceField<T = f64> {
    q: CMatrix<T>,
}

impl<T: Real> ReferenceField<T> {
    pub fn from_matrix(q: CMatrix<T>) -> Self {
        Self { q }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.q
    }

    /// Column `k`: the reference wave of one feed across all elements.
    pub fn feed_column(&self, k: usize) -> Vec<Complex<T>> {
        self.q.column(k)
    }

    pub fn element_count(&self) -> usize {
        self.q.rows()
    }

    pub fn feed_count(&self) -> usize {
        self.q.cols()
    }
}

/// `Q[m,k] = exp(-α d) exp(-j k_g d)` with `d` the feed-to-element distance.
pub fn reference_wave_matrix<T: Real>(layout: &RhsLayout<T>, attenuation_per_meter: T) -> ReferenceField<T> {
    let kg = layout.guided_wavenumber();
    let q = CMatrix::from_fn(layout.element_count(), layout.feed_count(), |m, k| {
        let d = layout.element_positions[m].distance(&layout.feed_positions[k]);
        cis(-kg * d) * (-attenuation_per_meter * d).exp()
    });
    ReferenceField { q }
}

/// Far-field propagation phases toward one direction.
#[derive(Clone, Debug, PartialEq)]
pub struct SteeringVector<T = f64>(pub Vec<Complex<T>>);

impl<T> SteeringVector<T> {
    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.0
    }
}

/// Unit propagation direction for broadside angle `theta` and azimuth `phi`.
pub fn direction_cosines<T: Real>(theta: T, phi: T) -> (T, T, T) {
    let st = theta.sin();
    (st * phi.cos(), st * phi.sin(), theta.cos())
}

/// `a[m] = exp(-j k0 r_m · u(θ, φ))`.
pub fn free_space_steering<T: Real>(layout: &RhsLayout<T>, theta: T, phi: T) -> SteeringVector<T> {
    let k0 = layout.wavenumber();
    let (ux, uy, uz) = direction_cosines(theta, phi);
    SteeringVector(
        layout
            .element_positions
            .iter()
            .map(|p| cis(-k0 * (p.x * ux + p.y * uy + p.z * uz)))
            .collect(),
    )
}

/// Amplitude resolution of the element hardware.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Quantization {
    #[default]
    Continuous,
    /// `2^bits` uniformly spaced levels on [0, 1].
    Bits(u32),
}

impl core::fmt::Display for Quantization {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Quantization::Continuous => f.write_str("continuous"),
            Quantization::Bits(b) => write!(f, "{b}"),
        }
    }
}

impl core::str::FromStr for Quantization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("continuous") {
            return Ok(Quantization::Continuous);
        }
        match s.parse::<u32>() {
            Ok(b) if (1..=31).contains(&b) => Ok(Quantization::Bits(b)),
            _ => Err(Error::invalid(format!(
                "quantization must be `continuous` or a bit count in 1..=31, got `{s}`"
            ))),
        }
    }
}

/// Maps each amplitude to the nearest quantization level; midpoints round up.
pub fn quantize_amplitudes<T: Real>(amplitudes: &[T], quantization: Quantization) -> Result<Vec<T>> {
    if let Some((i, a)) = amplitudes
        .iter()
        .enumerate()
        .find(|(_, &a)| !(a >= T::zero() && a <= T::one()))
    {
        return Err(Error::invalid(format!("amplitude {a} at element {i} outside [0, 1]")));
    }
    match quantization {
        Quantization::Continuous => Ok(amplitudes.to_vec()),
        Quantization::Bits(0) => Err(Error::invalid("bit depth must be positive")),
        Quantization::Bits(bits) => {
            let steps = T::lit(((1u64 << bits) - 1) as f64);
            Ok(amplitudes
                .iter()
                .map(|&a| {
                    // floor(x + 0.5) sends exact midpoints to the upper level.
                    let level = (a * steps + T::lit(0.5)).floor().min(steps);
                    level / steps
                })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const F: f64 = 12e9;

    fn lambda() -> f64 {
        SPEED_OF_LIGHT / F
    }

    fn edge_feed(n: usize, d: f64) -> Point3<f64> {
        Point3::on_x(-(n as f64 - 1.0) / 2.0 * d - d / 2.0)
    }

    #[test]
    fn prototype_layout_has_sixteen_elements() {
        let d = 0.4 * lambda();
        let l = build_layout((16, 1), d, vec![edge_feed(16, d)], F, 1.3).unwrap();
        assert_eq!(l.element_count(), 16);
        assert_eq!(l.feed_count(), 1);
        assert!((l.wavelength() - 0.024982704833333333).abs() < 1e-15);
        let xs: Vec<f64> = l.element_positions().iter().map(|p| p.x).collect();
        assert!((xs[0] + xs[15]).abs() < 1e-15, "centered at origin");
    }

    #[test]
    fn single_element_sits_at_origin() {
        let l = build_layout((1, 1), 0.01, vec![Point3::on_x(0.0)], F, 1.5).unwrap();
        assert_eq!(l.element_count(), 1);
        assert_eq!(l.element_positions()[0], Point3::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn aperture_spans_three_spacings_for_four_elements() {
        let d = 0.007;
        let l = build_layout((4, 1), d, vec![Point3::on_x(0.0)], F, 1.5).unwrap();
        let p = l.element_positions();
        assert!((p[3].x - p[0].x - 3.0 * d).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_layout((4, 1), 0.0, vec![Point3::on_x(0.0)], F, 1.5).is_err());
        assert!(build_layout::<f64>((4, 1), 0.01, vec![], F, 1.5).is_err());
        assert!(build_layout((0, 1), 0.01, vec![Point3::on_x(0.0)], F, 1.5).is_err());
        assert!(build_layout((4, 1), 0.01, vec![Point3::on_x(0.0)], F, 0.9).is_err());
        assert!(build_layout((4, 1), 0.01, vec![Point3::new(0.0, 0.0, 1.0)], F, 1.5).is_err());
    }

    #[test]
    fn coincident_feed_gives_unit_reference() {
        let l = RhsLayout::new(vec![Point3::on_x(0.0)], vec![Point3::on_x(0.0)], F, 1.7).unwrap();
        let q = reference_wave_matrix(&l, 0.0);
        assert_eq!(q.matrix()[(0, 0)], Complex::new(1.0, 0.0));
    }

    #[test]
    fn one_guided_wavelength_returns_to_unity() {
        let n = 1.7;
        let lg = lambda() / n;
        let l = RhsLayout::new(vec![Point3::on_x(lg)], vec![Point3::on_x(0.0)], F, n).unwrap();
        let z = reference_wave_matrix(&l, 0.0).matrix()[(0, 0)];
        assert!((z - Complex::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn half_guided_wavelength_flips_sign() {
        let n = 1.7;
        let lg = lambda() / n;
        let l = RhsLayout::new(vec![Point3::on_x(lg / 2.0)], vec![Point3::on_x(0.0)], F, n).unwrap();
        let z = reference_wave_matrix(&l, 0.0).matrix()[(0, 0)];
        assert!((z - Complex::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn broadside_steering_is_all_ones() {
        let d = 0.4 * lambda();
        let l = build_layout((4, 3), d, vec![Point3::on_x(0.0)], F, 1.5).unwrap();
        for z in free_space_steering(&l, 0.0, 0.3).0 {
            assert!((z - Complex::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn endfire_half_wave_pair_has_pi_phase_step() {
        let d = lambda() / 2.0;
        let l = build_layout((2, 1), d, vec![Point3::on_x(0.0)], F, 1.5).unwrap();
        let a = free_space_steering(&l, core::f64::consts::FRAC_PI_2, 0.0).0;
        let step = (a[1] / a[0]).arg();
        assert!((step.abs() - core::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn quantization_examples() {
        let b1 = Quantization::Bits(1);
        assert_eq!(quantize_amplitudes(&[0.7], b1).unwrap(), vec![1.0]);
        assert_eq!(quantize_amplitudes(&[0.5], b1).unwrap(), vec![1.0]);
        assert_eq!(quantize_amplitudes(&[0.49], b1).unwrap(), vec![0.0]);
        let v = [0.0, 0.123, 0.5, 1.0];
        assert_eq!(quantize_amplitudes(&v, Quantization::Continuous).unwrap(), v.to_vec());
        assert_eq!(quantize_amplitudes(&[0.5], Quantization::Bits(2)).unwrap(), vec![2.0 / 3.0]);
        assert!(quantize_amplitudes(&[1.2], b1).is_err());
        assert!(quantize_amplitudes(&[-0.1], Quantization::Continuous).is_err());
    }

    #[test]
    fn quantization_parses() {
        assert_eq!("continuous".parse::<Quantization>().unwrap(), Quantization::Continuous);
        assert_eq!("1".parse::<Quantization>().unwrap(), Quantization::Bits(1));
        assert!("0".parse::<Quantization>().is_err());
        assert!("many".parse::<Quantization>().is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let d = 0.4f32 * (SPEED_OF_LIGHT as f32 / 12e9f32);
        let l = build_layout((8, 1), d, vec![Point3::on_x(-2.0 * d)], 12e9f32, 1.3).unwrap();
        let q = reference_wave_matrix(&l, 0.0);
        for m in 0..8 {
            assert!((q.matrix()[(m, 0)].norm() - 1.0).abs() < 1e-6);
        }
    }

    fn random_line_layout(xs: Vec<f64>, feed: f64) -> Option<RhsLayout<f64>> {
        let mut xs = xs;
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        RhsLayout::new(
            xs.into_iter().map(Point3::on_x).collect(),
            vec![Point3::new(feed, 0.0, -0.001)],
            F,
            1.4,
        )
        .ok()
    }

    proptest! {
        #[test]
        fn lossless_reference_is_unit_modulus(xs in prop::collection::vec(-0.2f64..0.2, 1..12), feed in -0.3f64..0.3) {
            if let Some(l) = random_line_layout(xs, feed) {
                let q = reference_wave_matrix(&l, 0.0);
                for m in 0..l.element_count() {
                    prop_assert!((q.matrix()[(m, 0)].norm() - 1.0).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn attenuation_composes(xs in prop::collection::vec(-0.2f64..0.2, 1..10), a1 in 0.0f64..5.0, a2 in 0.0f64..5.0) {
            if let Some(l) = random_line_layout(xs, 0.25) {
                let q1 = reference_wave_matrix(&l, a1);
                let q2 = reference_wave_matrix(&l, a2);
                let q12 = reference_wave_matrix(&l, a1 + a2);
                let q0 = reference_wave_matrix(&l, 0.0);
                for m in 0..l.element_count() {
                    let (z1, z2, z12, z0) = (q1.matrix()[(m, 0)], q2.matrix()[(m, 0)], q12.matrix()[(m, 0)], q0.matrix()[(m, 0)]);
                    prop_assert!((z12.norm() - z1.norm() * z2.norm()).abs() < 1e-12);
                    prop_assert!((z12 - z0 * (z1.norm() * z2.norm())).norm() < 1e-12);
                    prop_assert!(z12.norm() <= 1.0 + 1e-15);
                }
            }
        }

        #[test]
        fn steering_is_unit_modulus_and_mirror_conjugate(n in 1usize..20, theta in -1.5f64..1.5) {
            let d = 0.4 * lambda();
            let l = build_layout((n, 1), d, vec![Point3::on_x(0.0)], F, 1.3).unwrap();
            let plus = free_space_steering(&l, theta, 0.0).0;
            let minus = free_space_steering(&l, -theta, 0.0).0;
            for (p, m) in plus.iter().zip(&minus) {
                prop_assert!((p.norm() - 1.0).abs() < 1e-12);
                prop_assert!((p.conj() - m).norm() < 1e-12);
            }
        }

        #[test]
        fn quantization_is_idempotent(v in prop::collection::vec(0.0f64..=1.0, 1..20), bits in 1u32..6) {
            let q = quantize_amplitudes(&v, Quantization::Bits(bits)).unwrap();
            let qq = quantize_amplitudes(&q, Quantization::Bits(bits)).unwrap();
            prop_assert_eq!(q, qq);
        }
    }
}
