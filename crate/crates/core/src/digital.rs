//! Digital precoding: zero-forcing communication precoder, radar precoder on
//! the null space of the effective channel, and power normalization.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_pd_inverse, null_space, singular_values, CMatrix};
use crate::rhs::{free_space_steering, ReferenceField, RhsLayout};
use crate::scalar::{norm_sqr, Real};

/// Channels are declared singular above this condition number.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Downlink channels, one row per user.
#[derive(Clone, Debug, PartialEq)]
pub struct UserChannels<T = f64> {
    h: CMatrix<T>,
    angles: Vec<T>,
    distances: Vec<T>,
}

impl<T: Real> UserChannels<T> {
    pub fn new(h: CMatrix<T>, angles: Vec<T>, distances: Vec<T>) -> Result<Self> {
        let u = h.rows();
        if u == 0 {
            return Err(Error::invalid("at least one user is required"));
        }
        if angles.len() != u || distances.len() != u {
            return Err(Error::invalid("user angles/distances must match channel rows"));
        }
        if let Some(r) = (0..u).find(|&r| h.row(r).iter().all(|z| *z == Complex::new(T::zero(), T::zero()))) {
            return Err(Error::invalid(format!("channel row {r} is zero")));
        }
        Ok(Self { h, angles, distances })
    }

    /// Pure line-of-sight channels for `(angle, distance)` pairs.
    pub fn line_of_sight(layout: &RhsLayout<T>, users: &[(T, T)]) -> Result<Self> {
        let rows = users
            .iter()
            .map(|&(theta, d)| los_channel(layout, theta, d))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(layout.element_count(), rows, users)
    }

    /// Rician channels; `k_factor = ∞` gives [`Self::line_of_sight`].
    pub fn rician<R: Rng + ?Sized>(
        layout: &RhsLayout<T>,
        users: &[(T, T)],
        k_factor: T,
        rng: &mut R,
    ) -> Result<Self> {
        let rows = users
            .iter()
            .map(|&(theta, d)| rician_channel(layout, theta, d, k_factor, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(layout.element_count(), rows, users)
    }

    fn from_rows(m: usize, rows: Vec<Vec<Complex<T>>>, users: &[(T, T)]) -> Result<Self> {
        let data = rows.into_iter().flatten().collect();
        Self::new(
            CMatrix::from_row_major(users.len(), m, data),
            users.iter().map(|u| u.0).collect(),
            users.iter().map(|u| u.1).collect(),
        )
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.h
    }

    pub fn angles(&self) -> &[T] {
        &self.angles
    }

    pub fn distances(&self) -> &[T] {
        &self.distances
    }

    pub fn user_count(&self) -> usize {
        self.h.rows()
    }
}

/// `conj(a_fs(θ)) · λ0 / (4π d)`.
pub fn los_channel<T: Real>(layout: &RhsLayout<T>, user_angle: T, user_distance: T) -> Result<Vec<Complex<T>>> {
    if !(user_distance > T::zero()) || !user_distance.is_finite() {
        return Err(Error::invalid(format!("user distance must be positive, got {user_distance}")));
    }
    let amp = layout.wavelength() / (T::lit(4.0) * T::PI() * user_distance);
    Ok(free_space_steering(layout, user_angle, T::zero())
        .0
        .into_iter()
        .map(|z| z.conj() * amp)
        .collect())
}

/// LoS plus scattered component with Rician factor `k_factor` (linear).
pub fn rician_channel<T: Real, R: Rng + ?Sized>(
    layout: &RhsLayout<T>,
    user_angle: T,
    user_distance: T,
    k_factor: T,
    rng: &mut R,
) -> Result<Vec<Complex<T>>> {
    let los = los_channel(layout, user_angle, user_distance)?;
    if k_factor.is_infinite() && k_factor > T::zero() {
        return Ok(los);
    }
    if !(k_factor >= T::zero()) {
        return Err(Error::invalid(format!("Rician factor must be >= 0, got {k_factor}")));
    }
    let amp = layout.wavelength() / (T::lit(4.0) * T::PI() * user_distance);
    let w_los = (k_factor / (k_factor + T::one())).sqrt();
    let w_nlos = (T::one() / (k_factor + T::one())).sqrt() * amp * T::FRAC_1_SQRT_2();
    Ok(los
        .into_iter()
        .map(|z| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            z * w_los + Complex::new(T::lit(re), T::lit(im)) * w_nlos
        })
        .collect())
}

/// `H · diag(a) · Q`.
pub fn effective_channel<T: Real>(h: &UserChannels<T>, a: &[T], q: &ReferenceField<T>) -> Result<CMatrix<T>> {
    let hm = h.matrix();
    if a.len() != hm.cols() || q.element_count() != hm.cols() {
        return Err(Error::invalid(format!(
            "channel has {} elements, amplitudes {}, reference field {}",
            hm.cols(),
            a.len(),
            q.element_count()
        )));
    }
    Ok(hm.scale_cols(a).matmul(q.matrix()))
}

/// Ratio of largest to smallest singular value.
fn condition_number<T: Real>(h: &CMatrix<T>) -> f64 {
    let sv = singular_values(h);
    let hi = sv.first().map_or(0.0, |v| v.as_f64());
    let lo = sv.last().map_or(0.0, |v| v.as_f64());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `H^H (H H^H)^{-1}` with unit-norm columns; one stream per user.
pub fn zf_comm_precoder<T: Real>(h_eff: &CMatrix<T>) -> Result<CMatrix<T>> {
    let (u, k) = h_eff.shape();
    if u > k {
        return Err(Error::invalid(format!("{u} users exceed {k} RF chains")));
    }
    if u == 0 {
        return Ok(CMatrix::zeros(k, 0));
    }
    let condition = condition_number(h_eff);
    let limit = SINGULAR_CONDITION;
    let singular = |condition| Error::SingularChannel { condition, limit };
    if !(condition <= limit) {
        return Err(singular(condition));
    }
    let gram = h_eff.matmul(&h_eff.adjoint());
    let inv = hermitian_pd_inverse(&gram).ok_or_else(|| singular(f64::INFINITY))?;
    let vc = h_eff.adjoint().matmul(&inv);
    let norms: Vec<T> = (0..u)
        .map(|j| vc.column(j).iter().map(|z| norm_sqr(*z)).sum::<T>().sqrt())
        .collect();
    Ok(CMatrix::from_fn(k, u, |i, j| vc[(i, j)] / norms[j]))
}

/// Orthonormal basis of `null(H_eff)`, `K x (K - rank)`.
pub fn radar_nullspace_precoder<T: Real>(h_eff: &CMatrix<T>) -> Result<CMatrix<T>> {
    let (u, k) = h_eff.shape();
    if u > k {
        return Err(Error::invalid(format!("{u} users exceed {k} RF chains")));
    }
    Ok(null_space(h_eff))
}

/// Scaled precoders and the budget they were scaled to.
#[derive(Clone, Debug, PartialEq)]
pub struct DigitalBeamformer<T = f64> {
    pub vc: CMatrix<T>,
    pub vr: CMatrix<T>,
    pub total_power: T,
}

impl<T: Real> DigitalBeamformer<T> {
    /// `[Vc Vr]`.
    pub fn stacked(&self) -> CMatrix<T> {
        self.vc.hstack(&self.vr)
    }

    pub fn stream_count(&self) -> usize {
        self.vc.cols()
    }

    pub fn feed_count(&self) -> usize {
        self.vc.rows()
    }
}

/// `‖diag(a) Q V‖_F²`.
pub fn radiated_power<T: Real>(a: &[T], q: &ReferenceField<T>, v: &CMatrix<T>) -> T {
    q.matrix().scale_rows(a).matmul(v).frobenius_sqr()
}

/// Scales `Vc` to `(1 - f) P` and `Vr` to `f P` of radiated power. An empty
/// precoder hands its share to the other one.
pub fn power_normalize<T: Real>(
    vc: &CMatrix<T>,
    vr: &CMatrix<T>,
    a: &[T],
    q: &ReferenceField<T>,
    total_power: T,
    radar_fraction: T,
) -> Result<DigitalBeamformer<T>> {
    if !(total_power >= T::zero()) || !total_power.is_finite() {
        return Err(Error::invalid(format!("power budget must be >= 0, got {total_power}")));
    }
    if !(T::zero()..=T::one()).contains(&radar_fraction) {
        return Err(Error::invalid(format!("radar fraction must be in [0, 1], got {radar_fraction}")));
    }
    if a.len() != q.element_count() || vc.rows() != q.feed_count() || vr.rows() != q.feed_count() {
        return Err(Error::invalid("precoder, amplitude and reference dimensions disagree"));
    }
    let (pc, pr) = match (vc.cols(), vr.cols()) {
        (0, 0) => return Err(Error::DegenerateConfiguration("no precoder columns".into())),
        (_, 0) => (total_power, T::zero()),
        (0, _) => (T::zero(), total_power),
        _ => ((T::one() - radar_fraction) * total_power, radar_fraction * total_power),
    };
    let scaled = |v: &CMatrix<T>, target: T| -> Result<CMatrix<T>> {
        if v.cols() == 0 || target == T::zero() {
            return Ok(v.scale(T::zero()));
        }
        let p = radiated_power(a, q, v);
        if !(p > T::zero()) {
            return Err(Error::DegenerateConfiguration(
                "precoder radiates no power (all amplitudes zero?)".into(),
            ));
        }
        Ok(v.scale((target / p).sqrt()))
    };
    Ok(DigitalBeamformer {
        vc: scaled(vc, pc)?,
        vr: scaled(vr, pr)?,
        total_power,
    })
}

/// ZF + null-space precoders for amplitudes `a`, power-normalized.
pub fn digital_beamformer<T: Real>(
    h: &UserChannels<T>,
    a: &[T],
    q: &ReferenceField<T>,
    total_power: T,
    radar_fraction: T,
) -> Result<DigitalBeamformer<T>> {
    let h_eff = effective_channel(h, a, q)?;
    let vc = zf_comm_precoder(&h_eff)?;
    let vr = radar_nullspace_precoder(&h_eff)?;
    power_normalize(&vc, &vr, a, q, total_power, radar_fraction)
}

/// Radar-only beamformer (no users): `Vr = I_K`.
pub fn radar_only_beamformer<T: Real>(a: &[T], q: &ReferenceField<T>, total_power: T) -> Result<DigitalBeamformer<T>> {
    let k = q.feed_count();
    power_normalize(&CMatrix::zeros(k, 0), &CMatrix::identity(k), a, q, total_power, T::one())
}
