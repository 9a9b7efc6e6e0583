//! Numeric traits the statistics are generic over.
//!
//! [`Scalar`] covers field arithmetic only, so overlap counts, expected overlap
//! and kappa can be evaluated exactly over rationals. [`Real`] adds the square
//! root needed by the feasibility bounds.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num};

/// Ordered field element: f32, f64 or an exact rational.
pub trait Scalar: Num + Copy + PartialOrd + FromPrimitive + Debug {
    fn from_count(count: usize) -> Self {
        Self::from_usize(count).expect("count representable in scalar type")
    }

    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).expect("value representable in scalar type")
    }

    /// True when `self` lies in the closed unit interval. NaN is rejected.
    fn is_fraction(&self) -> bool {
        *self >= Self::zero() && *self <= Self::one()
    }
}

impl<T> Scalar for T where T: Num + Copy + PartialOrd + FromPrimitive + Debug {}

/// Floating-point scalar with `sqrt`.
pub trait Real: Scalar + Float {}

impl<T> Real for T where T: Scalar + Float {}
