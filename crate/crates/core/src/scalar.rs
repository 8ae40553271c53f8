//! Numeric scalar abstraction shared by the LP solver and the linear-system code.

use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// A field element the solvers can run on.
///
/// Floating-point types carry small positive tolerances; exact types use zero
/// tolerances so every comparison is decided exactly.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Threshold below which pivots, reduced costs and ratios count as zero.
    fn eps() -> Self;
    /// Threshold for primal feasibility checks.
    fn feas_tol() -> Self;
    /// Distance from an integer that still counts as integral.
    fn int_tol() -> Self;
    /// Magnitude below which tableau entries are flushed to zero.
    fn drop_tol() -> Self;

    /// Converts a literal. Exact types convert the binary value exactly.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::zero)
    }

    /// Lossy conversion for reporting.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn round_nearest(&self) -> Self;
}

impl Scalar for f64 {
    fn eps() -> Self {
        1e-9
    }
    fn feas_tol() -> Self {
        1e-7
    }
    fn int_tol() -> Self {
        1e-6
    }
    fn drop_tol() -> Self {
        1e-13
    }
    fn round_nearest(&self) -> Self {
        self.round()
    }
}

impl Scalar for f32 {
    fn eps() -> Self {
        1e-5
    }
    fn feas_tol() -> Self {
        1e-4
    }
    fn int_tol() -> Self {
        1e-4
    }
    fn drop_tol() -> Self {
        1e-7
    }
    fn round_nearest(&self) -> Self {
        self.round()
    }
}

impl Scalar for BigRational {
    fn eps() -> Self {
        Self::from_integer(0.into())
    }
    fn feas_tol() -> Self {
        Self::from_integer(0.into())
    }
    fn int_tol() -> Self {
        Self::from_integer(0.into())
    }
    fn drop_tol() -> Self {
        Self::from_integer(0.into())
    }
    fn round_nearest(&self) -> Self {
        self.round()
    }
}

/// Builds an exact rational `num / den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}
