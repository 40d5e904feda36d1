use crate::analog::beampattern::{beampattern_from_table, mismatch_error, steering_table, BeampatternGrid};
use crate::digital::{digital_beamformer, radar_only_beamformer, DigitalBeamformer, UserChannels};
use crate::error::{Error, Result};
use crate::holography::PatternBank;
use crate::linalg::{CMatrix, Matrix};
use crate::metrics::{sinr_and_capacity, LinkMetrics};
use crate::rhs::{ReferenceField, RhsLayout};
use crate::scalar::Real;

/// Inputs of a hybrid beamforming problem.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParts<T = f64> {
    pub layout: RhsLayout<T>,
    pub reference: ReferenceField<T>,
    pub bank: PatternBank<T>,
    /// `None` for a sensing-only system.
    pub users: Option<UserChannels<T>>,
    /// Per-user floor in bit/s/Hz.
    pub capacity_floors: Vec<T>,
    pub grid: BeampatternGrid<T>,
    pub total_power: T,
    pub radar_fraction: T,
}

/// Validated [`SystemParts`] with cached steering and bank matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridSystem<T = f64> {
    parts: SystemParts<T>,
    steering: CMatrix<T>,
    bank_matrix: Matrix<T>,
}

/// Beampattern, mismatch and link quality of one `(a, V)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairEvaluation<T = f64> {
    pub pattern: Vec<T>,
    pub alpha: T,
    pub mse: T,
    pub link: Option<LinkMetrics<T>>,
}

impl<T: Real> HybridSystem<T> {
    pub fn new(parts: SystemParts<T>) -> Result<Self> {
        let m = parts.layout.element_count();
        let k = parts.layout.feed_count();
        if parts.reference.element_count() != m || parts.reference.feed_count() != k {
            return Err(Error::invalid("reference field does not match the layout"));
        }
        if parts.bank.element_count() != m || parts.bank.is_empty() {
            return Err(Error::invalid("pattern bank does not match the layout"));
        }
        let u = parts.users.as_ref().map_or(0, UserChannels::user_count);
        if let Some(h) = &parts.users {
            if h.matrix().cols() != m {
                return Err(Error::invalid("user channels do not match the layout"));
            }
            if u > k {
                return Err(Error::invalid(format!("{u} users need at least {u} feeds, layout has {k}")));
            }
        }
        if parts.capacity_floors.len() != u {
            return Err(Error::invalid(format!(
                "{} capacity floors for {u} users",
                parts.capacity_floors.len()
            )));
        }
        if parts.capacity_floors.iter().any(|c| !(*c >= T::zero()) || !c.is_finite()) {
            return Err(Error::invalid("capacity floors must be finite and >= 0"));
        }
        if !(parts.total_power > T::zero()) || !parts.total_power.is_finite() {
            return Err(Error::invalid("total power must be positive"));
        }
        if !(T::zero()..=T::one()).contains(&parts.radar_fraction) {
            return Err(Error::invalid("radar fraction must be in [0, 1]"));
        }
        let steering = steering_table(&parts.layout, parts.grid.angles());
        let bank_matrix = parts.bank.matrix();
        Ok(Self {
            parts,
            steering,
            bank_matrix,
        })
    }

    pub fn parts(&self) -> &SystemParts<T> {
        &self.parts
    }

    pub fn layout(&self) -> &RhsLayout<T> {
        &self.parts.layout
    }

    pub fn reference(&self) -> &ReferenceField<T> {
        &self.parts.reference
    }

    pub fn bank(&self) -> &PatternBank<T> {
        &self.parts.bank
    }

    pub fn users(&self) -> Option<&UserChannels<T>> {
        self.parts.users.as_ref()
    }

    pub fn user_count(&self) -> usize {
        self.parts.users.as_ref().map_or(0, UserChannels::user_count)
    }

    pub fn grid(&self) -> &BeampatternGrid<T> {
        &self.parts.grid
    }

    /// `G x M` rows of `conj(a_fs(θ_g))`.
    pub fn steering(&self) -> &CMatrix<T> {
        &self.steering
    }

    /// `M x (D·K)`.
    pub fn bank_matrix(&self) -> &Matrix<T> {
        &self.bank_matrix
    }

    /// Element amplitudes `B w`.
    pub fn amplitudes(&self, w: &[T]) -> Vec<T> {
        self.bank_matrix
            .matvec(w)
            .into_iter()
            .map(|a| a.max(T::zero()).min(T::one()))
            .collect()
    }

    /// ZF and null-space precoders for `a` (identity radar precoder when
    /// there are no users), power-normalized.
    pub fn digital_step(&self, a: &[T]) -> Result<DigitalBeamformer<T>> {
        let p = &self.parts;
        match &p.users {
            Some(h) => digital_beamformer(h, a, &p.reference, p.total_power, p.radar_fraction),
            None => radar_only_beamformer(a, &p.reference, p.total_power),
        }
    }

    pub fn evaluate(&self, a: &[T], v: &DigitalBeamformer<T>, noise_power: T) -> Result<PairEvaluation<T>> {
        let pattern = beampattern_from_table(&self.steering, a, &self.parts.reference, v)?;
        let (alpha, mse) = mismatch_error(&pattern, self.parts.grid.desired())?;
        let link = match &self.parts.users {
            Some(h) => Some(sinr_and_capacity(h, a, &self.parts.reference, v, noise_power)?),
            None => None,
        };
        Ok(PairEvaluation {
            pattern,
            alpha,
            mse,
            link,
        })
    }

    /// Largest per-user capacity deficit below its floor (0 when all met).
    pub fn shortfall(&self, link: Option<&LinkMetrics<T>>) -> T {
        match link {
            None => T::zero(),
            Some(l) => l
                .capacity
                .iter()
                .zip(&self.parts.capacity_floors)
                .fold(T::zero(), |s, (c, f)| s.max(*f - *c)),
        }
    }
}
