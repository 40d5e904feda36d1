//! Phase-shifter phased array used as the comparison baseline.
//!
//! Elements sit on the x axis, centered on the origin, each with unit
//! amplitude and a tunable phase. Multiple beams are formed by taking the
//! phase of the superposed single-beam weights.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::metrics::directive_gain;
use crate::scalar::{cis, norm_sqr, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct PhasedArrayLayout<T = f64> {
    positions: Vec<T>,
    spacing: T,
    wavelength: T,
    phases: Vec<T>,
}

impl<T: Real> PhasedArrayLayout<T> {
    /// `n` elements at `spacing` meters, all phases zero.
    pub fn new(n: usize, spacing: T, wavelength: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("phased array needs at least one element"));
        }
        if !(spacing > T::zero()) || !(wavelength > T::zero()) {
            return Err(Error::invalid("spacing and wavelength must be positive"));
        }
        let mid = T::from_usize(n - 1) / T::lit(2.0);
        let positions = (0..n).map(|i| (T::from_usize(i) - mid) * spacing).collect();
        Ok(Self {
            positions,
            spacing,
            wavelength,
            phases: vec![T::zero(); n],
        })
    }

    /// Half-wavelength spacing.
    pub fn half_wavelength(n: usize, wavelength: T) -> Result<Self> {
        Self::new(n, wavelength / T::lit(2.0), wavelength)
    }

    /// Replaces the phases; each is wrapped into `[0, 2π)`.
    pub fn with_phases(mut self, phases: Vec<T>) -> Result<Self> {
        if phases.len() != self.positions.len() {
            return Err(Error::invalid(format!(
                "{} phases for {} elements",
                phases.len(),
                self.positions.len()
            )));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("phases must be finite"));
        }
        self.phases = phases.into_iter().map(wrap_phase).collect();
        Ok(self)
    }

    pub fn element_count(&self) -> usize {
        self.positions.len()
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn wavelength(&self) -> T {
        self.wavelength
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn phases(&self) -> &[T] {
        &self.phases
    }

    /// Unit-modulus element weights `exp(j φ_n)`.
    pub fn weights(&self) -> Vec<Complex<T>> {
        self.phases.iter().map(|&p| cis(p)).collect()
    }

    /// `exp(-j k0 x_n sin θ)`.
    pub fn steering(&self, theta: T) -> Vec<Complex<T>> {
        let k0 = T::TAU() / self.wavelength;
        let s = theta.sin();
        self.positions.iter().map(|&x| cis(-k0 * x * s)).collect()
    }
}

fn wrap_phase<T: Real>(p: T) -> T {
    let tau = T::TAU();
    let r = p % tau;
    let r = if r < T::zero() { r + tau } else { r };
    // `-tiny + 2π` can round to exactly 2π.
    if r >= tau {
        T::zero()
    } else {
        r
    }
}

/// Phases of `Σ_d conj(a(θ_d))`, wrapped into `[0, 2π)`.
pub fn pa_multibeam_phases<T: Real>(layout: &PhasedArrayLayout<T>, directions: &[T]) -> Result<Vec<T>> {
    if directions.is_empty() {
        return Err(Error::invalid("at least one beam direction is required"));
    }
    let mut sum = vec![Complex::new(T::zero(), T::zero()); layout.element_count()];
    for &t in directions {
        for (s, a) in sum.iter_mut().zip(layout.steering(t)) {
            *s += a.conj();
        }
    }
    Ok(sum.into_iter().map(|s| wrap_phase(s.im.atan2(s.re))).collect())
}

/// `|Σ_n exp(j φ_n) a_n(θ)|²` on `angles`.
pub fn pa_pattern<T: Real>(layout: &PhasedArrayLayout<T>, angles: &[T]) -> Vec<T> {
    let w = layout.weights();
    angles
        .iter()
        .map(|&t| {
            let f = w
                .iter()
                .zip(layout.steering(t))
                .fold(Complex::new(T::zero(), T::zero()), |acc, (wi, a)| acc + wi * a);
            norm_sqr(f)
        })
        .collect()
}

/// One row of the RHS vs phased-array comparison.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct GainRow {
    pub direction_deg: f64,
    pub rhs_gain_db: f64,
    pub pa_gain_db: f64,
    pub rhs_watts: f64,
    pub pa_watts: f64,
}

/// Directive gains of both patterns at each direction. Both patterns must
/// be sampled on `angles`.
pub fn gain_comparison<T: Real>(
    rhs_pattern: &[T],
    pa_pattern: &[T],
    angles: &[T],
    directions: &[T],
    rhs_watts: f64,
    pa_watts: f64,
) -> Result<Vec<GainRow>> {
    directions
        .iter()
        .map(|&d| {
            Ok(GainRow {
                direction_deg: d.to_degrees().as_f64(),
                rhs_gain_db: directive_gain(rhs_pattern, angles, d)?.as_f64(),
                pa_gain_db: directive_gain(pa_pattern, angles, d)?.as_f64(),
                rhs_watts,
                pa_watts,
            })
        })
        .collect()
}

/// `direction_deg,rhs_gain_db,pa_gain_db,rhs_watts,pa_watts`.
pub fn gain_comparison_csv(rows: &[GainRow]) -> String {
    let mut out = String::from("direction_deg,rhs_gain_db,pa_gain_db,rhs_watts,pa_watts\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.direction_deg, r.rhs_gain_db, r.pa_gain_db, r.rhs_watts, r.pa_watts
        ));
    }
    out
}
