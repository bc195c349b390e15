//! Floating point abstraction shared by the profiler, the catalog and the matcher.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// floating point: f32 or f64
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Display
    + LowerExp
    + FromStr
    + Debug
    + Default
    + Send
    + Sync
    + 'static
{
    /// Significant decimal digits needed to round-trip a value through text.
    const SIGNIFICANT_DIGITS: usize;
    /// Short type tag used in persisted files.
    const NAME: &'static str;

    /// Lossy conversion from `f64`; every finite `f64` maps to a value.
    fn of(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(Self::nan)
    }

    /// Conversion from a count.
    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).unwrap_or_else(Self::infinity)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Formats with [`Self::SIGNIFICANT_DIGITS`] digits in scientific notation.
    fn to_exact_string(self) -> String {
        format!("{:.*e}", Self::SIGNIFICANT_DIGITS - 1, self)
    }
}

impl Scalar for f32 {
    const SIGNIFICANT_DIGITS: usize = 9;
    const NAME: &'static str = "f32";
}

impl Scalar for f64 {
    const SIGNIFICANT_DIGITS: usize = 17;
    const NAME: &'static str = "f64";
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_string_round_trips() {
        for v in [0.1f64, -1.0 / 3.0, 1e-300, 123456789.12345679, f64::MIN_POSITIVE] {
            let s = v.to_exact_string();
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        for v in [0.1f32, -1.0 / 3.0, 1e-30, 16777217.0] {
            let s = v.to_exact_string();
            assert_eq!(s.parse::<f32>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }
}
