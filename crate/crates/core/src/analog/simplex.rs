use crate::scalar::Real;

/// Euclidean projection onto `{w >= 0, Σ w = 1}` (sort-and-threshold).
/// Ties are broken by index through a stable sort.
pub fn project_to_simplex<T: Real>(y: &[T]) -> Vec<T> {
    if y.is_empty() {
        return Vec::new();
    }
    let mut sorted: Vec<T> = y.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let mut cumsum = T::zero();
    let mut tau = T::zero();
    for (i, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - T::one()) / T::from_usize(i + 1);
        if v - t > T::zero() {
            tau = t;
        }
    }
    let mut w: Vec<T> = y.iter().map(|&v| (v - tau).max(T::zero())).collect();
    // Renormalize away rounding.
    let s: T = w.iter().copied().sum();
    if s > T::zero() {
        for v in &mut w {
            *v /= s;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(project_to_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        assert_eq!(project_to_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(project_to_simplex(&[0.0, 0.0]), vec![0.5, 0.5]);
        assert_eq!(project_to_simplex(&[5.0]), vec![1.0]);
        let w = project_to_simplex(&[1.0, 1.0, -3.0]);
        assert_eq!(w, vec![0.5, 0.5, 0.0]);
    }

    proptest! {
        #[test]
        fn lands_on_simplex_and_is_nearest(y in prop::collection::vec(-3.0f64..3.0, 1..8), probe in prop::collection::vec(0.0f64..1.0, 8)) {
            let w = project_to_simplex(&y);
            prop_assert!(w.iter().all(|v| *v >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            // No other simplex point is closer.
            let s: f64 = probe[..y.len()].iter().sum();
            prop_assume!(s > 1e-9);
            let other: Vec<f64> = probe[..y.len()].iter().map(|v| v / s).collect();
            let d = |u: &[f64]| u.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            prop_assert!(d(&w) <= d(&other) + 1e-12);
        }

        #[test]
        fn idempotent(y in prop::collection::vec(-3.0f64..3.0, 1..8)) {
            let w = project_to_simplex(&y);
            let w2 = project_to_simplex(&w);
            for (a, b) in w.iter().zip(&w2) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
