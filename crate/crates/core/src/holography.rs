//! Holographic pattern synthesis.
//!
//! A pattern records the interference between a feed's reference wave and
//! the object wave of one radiation direction as a real amplitude per
//! element: `(1 + cos Δφ) / 2`, which is 1 where the two waves are in phase
//! and 0 where they are opposed. A bank holds one pattern per
//! (direction, feed) pair, direction-major; analog beamformers are convex
//! combinations of the bank.

use std::fmt::Write as _;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rhs::{free_space_steering, ReferenceField, RhsLayout};
use crate::scalar::Real;

/// Radiation direction (radians, broadside convention).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Direction<T = f64> {
    pub theta: T,
    pub phi: T,
}

impl<T: Real> Direction<T> {
    pub fn new(theta: T, phi: T) -> Self {
        Self { theta, phi }
    }

    /// In-plane direction (`phi = 0`).
    pub fn planar(theta: T) -> Self {
        Self::new(theta, T::zero())
    }
}

/// Desired free-space wave sampled at the elements.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectField<T = f64>(pub Vec<Complex<T>>);

#[derive(Clone, Debug, PartialEq)]
pub struct InterferencePattern<T = f64>(pub Vec<Complex<T>>);

#[derive(Clone, Debug, PartialEq)]
pub struct HolographicPattern<T = f64> {
    pub amplitudes: Vec<T>,
    pub direction: Direction<T>,
    pub feed_index: usize,
}

pub fn object_wave<T: Real>(layout: &RhsLayout<T>, theta0: T, phi0: T) -> ObjectField<T> {
    ObjectField(free_space_steering(layout, theta0, phi0).0)
}

/// `x_ref ⊙ conj(x_obj)`.
pub fn interference_pattern<T: Real>(
    x_ref: &[Complex<T>],
    x_obj: &ObjectField<T>,
) -> Result<InterferencePattern<T>> {
    if x_ref.len() != x_obj.0.len() {
        return Err(Error::invalid(format!(
            "reference has {} entries, object wave {}",
            x_ref.len(),
            x_obj.0.len()
        )));
    }
    Ok(InterferencePattern(
        x_ref.iter().zip(&x_obj.0).map(|(r, o)| r * o.conj()).collect(),
    ))
}

pub fn holographic_pattern<T: Real>(
    x_ref: &[Complex<T>],
    x_obj: &ObjectField<T>,
    direction: Direction<T>,
    feed_index: usize,
) -> Result<HolographicPattern<T>> {
    let x_int = interference_pattern(x_ref, x_obj)?;
    let half = T::lit(0.5);
    let amplitudes = x_int
        .0
        .iter()
        .enumerate()
        .map(|(m, z)| {
            let r = z.norm();
            if r == T::zero() || !r.is_finite() {
                return Err(Error::DegenerateField { element: m });
            }
            // Clamp guards the ±1 rounding of re/|z|.
            Ok(((T::one() + z.re / r) * half).max(T::zero()).min(T::one()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HolographicPattern {
        amplitudes,
        direction,
        feed_index,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternBank<T = f64> {
    patterns: Vec<HolographicPattern<T>>,
    directions: Vec<Direction<T>>,
    feed_count: usize,
}

/// Builds the `D x K` bank; pattern `p = d * K + k`.
pub fn build_pattern_bank<T: Real>(
    layout: &RhsLayout<T>,
    reference: &ReferenceField<T>,
    directions: &[Direction<T>],
) -> Result<PatternBank<T>> {
    if directions.is_empty() {
        return Err(Error::invalid("pattern bank needs at least one direction"));
    }
    if reference.element_count() != layout.element_count() {
        return Err(Error::invalid("reference field and layout disagree on element count"));
    }
    let feeds: Vec<Vec<Complex<T>>> = (0..reference.feed_count())
        .map(|k| reference.feed_column(k))
        .collect();
    let mut patterns = Vec::with_capacity(directions.len() * feeds.len());
    for &dir in directions {
        let obj = object_wave(layout, dir.theta, dir.phi);
        for (k, x_ref) in feeds.iter().enumerate() {
            patterns.push(holographic_pattern(x_ref, &obj, dir, k)?);
        }
    }
    Ok(PatternBank {
        patterns,
        directions: directions.to_vec(),
        feed_count: feeds.len(),
    })
}

impl<T: Real> PatternBank<T> {
    pub fn patterns(&self) -> &[HolographicPattern<T>] {
        &self.patterns
    }

    pub fn directions(&self) -> &[Direction<T>] {
        &self.directions
    }

    pub fn feed_count(&self) -> usize {
        self.feed_count
    }

    /// D·K.
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn element_count(&self) -> usize {
        self.patterns.first().map_or(0, |p| p.amplitudes.len())
    }

    /// `B` (M x D·K): pattern `p` as column `p`.
    pub fn matrix(&self) -> Matrix<T> {
        Matrix::from_fn(self.element_count(), self.len(), |m, p| self.patterns[p].amplitudes[m])
    }

    /// `1 / (D·K)` on every pattern.
    pub fn equal_weights(&self) -> Vec<T> {
        vec![T::one() / T::from_usize(self.len()); self.len()]
    }

    /// One row per pattern: `theta_deg,phi_deg,feed,a0,..,a{M-1}`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta_deg,phi_deg,feed");
        for m in 0..self.element_count() {
            let _ = write!(out, ",a{m}");
        }
        out.push('\n');
        for p in &self.patterns {
            let _ = write!(
                out,
                "{},{},{}",
                p.direction.theta.to_degrees(),
                p.direction.phi.to_degrees(),
                p.feed_index
            );
            for a in &p.amplitudes {
                let _ = write!(out, ",{a}");
            }
            out.push('\n');
        }
        out
    }
}

/// Pattern weights on the probability simplex and the element amplitudes
/// they produce.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalogBeamformer<T = f64> {
    pub weights: Vec<T>,
    pub amplitudes: Vec<T>,
}

/// Tolerance on `Σ w = 1` before renormalization.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// `a = Σ_p w[p] · pattern_p`.
pub fn superpose<T: Real>(bank: &PatternBank<T>, weights: &[T]) -> Result<AnalogBeamformer<T>> {
    if weights.len() != bank.len() {
        return Err(Error::invalid(format!(
            "{} weights for a bank of {} patterns",
            weights.len(),
            bank.len()
        )));
    }
    if let Some((p, w)) = weights.iter().enumerate().find(|(_, &w)| !(w >= T::zero())) {
        return Err(Error::invalid(format!("weight {p} is negative or NaN ({w})")));
    }
    let sum: T = weights.iter().copied().sum();
    if sum == T::zero() {
        return Err(Error::invalid("weights sum to zero"));
    }
    if (sum - T::one()).abs() > T::lit(WEIGHT_SUM_TOLERANCE).max(T::epsilon() * T::lit(16.0)) {
        return Err(Error::invalid(format!("weights sum to {sum}, expected 1")));
    }
    let weights: Vec<T> = weights.iter().map(|&w| w / sum).collect();
    let mut amplitudes = vec![T::zero(); bank.element_count()];
    for (w, pat) in weights.iter().zip(&bank.patterns) {
        for (a, &v) in amplitudes.iter_mut().zip(&pat.amplitudes) {
            *a += *w * v;
        }
    }
    for a in &mut amplitudes {
        *a = a.max(T::zero()).min(T::one());
    }
    Ok(AnalogBeamformer { weights, amplitudes })
}
