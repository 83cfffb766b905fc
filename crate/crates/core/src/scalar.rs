//! Cost scalars.
//!
//! Search costs, tree edit distances and clustering distances are generic over
//! [`Scalar`]. `f64` is the default everywhere; `f32` works for memory-bound
//! runs, and [`Fixed`] gives exact, order-independent sums, which is what the
//! oracle tests use when they compare against brute force with zero tolerance.

use std::fmt::{self, Debug, Display};
use std::ops::{Add, Div, Mul, Rem, Sub};

use num_traits::{Float, Num, One, Zero};

/// Numeric type used for additive costs.
///
/// Costs are non-negative and may be infinite; `sat_add` must saturate at
/// [`Scalar::infinity`] instead of overflowing or producing NaN.
pub trait Scalar: Num + Copy + PartialOrd + Debug + Display + Send + Sync + 'static {
    fn infinity() -> Self;
    fn is_finite(self) -> bool;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;

    fn sat_add(self, other: Self) -> Self {
        if !self.is_finite() || !other.is_finite() {
            Self::infinity()
        } else {
            self + other
        }
    }

    /// `-ln(clamp(prior, epsilon, 1))`.
    fn neg_ln_prior(prior: f64, epsilon: f64) -> Self {
        let p = if prior.is_nan() { epsilon } else { prior.clamp(epsilon, 1.0) };
        Self::from_f64(-p.ln())
    }

    /// Total order used for ranking; incomparable values sort as equal.
    fn total_cmp_cost(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).unwrap_or(std::cmp::Ordering::Equal)
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn infinity() -> Self {
                <$t as Float>::infinity()
            }
            fn is_finite(self) -> bool {
                <$t as Float>::is_finite(self)
            }
            fn from_f64(x: f64) -> Self {
                x as $t
            }
            fn to_f64(self) -> f64 {
                self as f64
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

/// Fixed-point cost with 10⁻⁹ resolution stored in an `i64`.
///
/// `i64::MAX` is infinity and every arithmetic operation saturates there.
/// Addition is exact and associative, so sums do not depend on evaluation
/// order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fixed(i64);

impl Fixed {
    pub const SCALE: i64 = 1_000_000_000;
    pub const INFINITY: Fixed = Fixed(i64::MAX);

    pub const fn from_raw(raw: i64) -> Self {
        Fixed(raw)
    }

    pub const fn raw(self) -> i64 {
        self.0
    }

    fn is_inf(self) -> bool {
        self.0 == i64::MAX
    }
}

impl Debug for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inf() {
            write!(f, "Fixed(inf)")
        } else {
            write!(f, "Fixed({})", self.to_f64())
        }
    }
}

impl Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inf() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.to_f64())
        }
    }
}

impl Add for Fixed {
    type Output = Fixed;
    fn add(self, rhs: Fixed) -> Fixed {
        if self.is_inf() || rhs.is_inf() {
            return Fixed::INFINITY;
        }
        Fixed(self.0.saturating_add(rhs.0))
    }
}

impl Sub for Fixed {
    type Output = Fixed;
    fn sub(self, rhs: Fixed) -> Fixed {
        if self.is_inf() {
            return Fixed::INFINITY;
        }
        Fixed(self.0.saturating_sub(rhs.0).min(i64::MAX - 1))
    }
}

impl Mul for Fixed {
    type Output = Fixed;
    fn mul(self, rhs: Fixed) -> Fixed {
        if self.is_inf() || rhs.is_inf() {
            return Fixed::INFINITY;
        }
        let wide = (self.0 as i128 * rhs.0 as i128) / Fixed::SCALE as i128;
        Fixed(wide.clamp(i64::MIN as i128, i64::MAX as i128) as i64)
    }
}

impl Div for Fixed {
    type Output = Fixed;
    fn div(self, rhs: Fixed) -> Fixed {
        if self.is_inf() || rhs.0 == 0 {
            return Fixed::INFINITY;
        }
        if rhs.is_inf() {
            return Fixed(0);
        }
        let wide = (self.0 as i128 * Fixed::SCALE as i128) / rhs.0 as i128;
        Fixed(wide.clamp(i64::MIN as i128, i64::MAX as i128) as i64)
    }
}

impl Rem for Fixed {
    type Output = Fixed;
    fn rem(self, rhs: Fixed) -> Fixed {
        if self.is_inf() || rhs.0 == 0 {
            return Fixed::INFINITY;
        }
        Fixed(self.0 % rhs.0)
    }
}

impl Zero for Fixed {
    fn zero() -> Self {
        Fixed(0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl One for Fixed {
    fn one() -> Self {
        Fixed(Fixed::SCALE)
    }
}

impl Num for Fixed {
    type FromStrRadixErr = std::num::ParseFloatError;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        if radix != 10 {
            // only decimal literals make sense for a decimal fixed point
            return "invalid radix".parse::<f64>().map(Fixed::from_f64);
        }
        s.parse::<f64>().map(Fixed::from_f64)
    }
}

impl Scalar for Fixed {
    fn infinity() -> Self {
        Fixed::INFINITY
    }
    fn is_finite(self) -> bool {
        !self.is_inf()
    }
    fn from_f64(x: f64) -> Self {
        if !x.is_finite() || x >= (i64::MAX / Fixed::SCALE) as f64 {
            return Fixed::INFINITY;
        }
        Fixed((x * Fixed::SCALE as f64).round() as i64)
    }
    fn to_f64(self) -> f64 {
        if self.is_inf() {
            f64::INFINITY
        } else {
            self.0 as f64 / Fixed::SCALE as f64
        }
    }
    fn sat_add(self, other: Self) -> Self {
        self + other
    }
}
