use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::Add;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

/// Real scalar used by the generic parts of the crate.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static {
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }
    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// ln(Σ e^{xᵢ}) without overflow.
pub fn log_sum_exp<F: Scalar>(xs: &[F]) -> F {
    let m = xs.iter().copied().fold(F::neg_infinity(), F::max);
    if m == F::neg_infinity() || m == F::infinity() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).fold(F::zero(), |s, t| s + t).ln()
}

pub fn lse2<F: Scalar>(a: F, b: F) -> F {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn lse3<F: Scalar>(a: F, b: F, c: F) -> F {
    let m = a.max(b).max(c);
    m + ((a - m).exp() + (b - m).exp() + (c - m).exp()).ln()
}

/// Extended real: a finite value or +∞. Sums saturate at +∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Energy<F> {
    Finite(F),
    Infinite,
}

impl<F: Scalar> Energy<F> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Energy::Infinite)
    }

    pub fn finite(self) -> Option<F> {
        match self {
            Energy::Finite(v) => Some(v),
            Energy::Infinite => None,
        }
    }

    /// e^{-E}, zero at +∞.
    pub fn boltzmann(self) -> F {
        match self {
            Energy::Finite(v) => (-v).exp(),
            Energy::Infinite => F::zero(),
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Energy::Finite(v) => v.f64(),
            Energy::Infinite => f64::INFINITY,
        }
    }

    pub fn map(self, f: impl FnOnce(F) -> F) -> Self {
        match self {
            Energy::Finite(v) => Energy::Finite(f(v)),
            Energy::Infinite => Energy::Infinite,
        }
    }
}

impl<F: Scalar> Add for Energy<F> {
    type Output = Energy<F>;
    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (Energy::Finite(a), Energy::Finite(b)) => Energy::Finite(a + b),
            _ => Energy::Infinite,
        }
    }
}

impl<F: Scalar> Add<F> for Energy<F> {
    type Output = Energy<F>;
    fn add(self, rhs: F) -> Self {
        self.map(|v| v + rhs)
    }
}

impl<F: Scalar> PartialOrd for Energy<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Energy::Finite(a), Energy::Finite(b)) => a.partial_cmp(b),
            (Energy::Finite(_), Energy::Infinite) => Some(Ordering::Less),
            (Energy::Infinite, Energy::Finite(_)) => Some(Ordering::Greater),
            (Energy::Infinite, Energy::Infinite) => Some(Ordering::Equal),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_is_stable() {
        assert!((lse3(1000.0, 1000.0, 1000.0) - (1000.0 + 3f64.ln())).abs() < 1e-12);
        assert!((lse2(-800.0f64, -800.0) - (-800.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_sum_exp(&[0.0f32, 0.0]) - 2f32.ln()).abs() < 1e-6);
    }

    #[test]
    fn energy_saturates() {
        let e = Energy::Finite(1.0) + Energy::Infinite;
        assert!(e.is_infinite());
        assert_eq!(e.boltzmann(), 0.0);
        assert!(Energy::Finite(1e300) < Energy::<f64>::Infinite);
        assert_eq!((Energy::Finite(1.0) + 2.0).finite(), Some(3.0));
    }
}
