//! Signed real numbers stored as `(sign, ln |value|)`.
//!
//! Volumes of the sets studied here behave like `exp(-K^{2β})`, which leaves
//! the range of `f64` long before the interesting regime. Every quantity that
//! can underflow is carried as a [`LogValue`] and only exponentiated at the
//! reporting boundary, if at all.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "-1")]
    Negative,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "+1")]
    Positive,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Zero => 0.0,
            Sign::Positive => 1.0,
        }
    }

    fn flip(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }

    fn times(self, other: Sign) -> Sign {
        match (self, other) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        }
    }
}

/// A real number `sign · exp(log_abs)`.
///
/// The zero value has `log_abs = -inf`. Arithmetic never leaves log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    sign: Sign,
    log_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        sign: Sign::Zero,
        log_abs: f64::NEG_INFINITY,
    };
    pub const ONE: LogValue = LogValue {
        sign: Sign::Positive,
        log_abs: 0.0,
    };

    /// A positive value `exp(log_abs)`. `-inf` yields zero.
    pub fn from_log(log_abs: f64) -> LogValue {
        if log_abs == f64::NEG_INFINITY {
            LogValue::ZERO
        } else {
            LogValue {
                sign: Sign::Positive,
                log_abs,
            }
        }
    }

    pub fn from_parts(sign: Sign, log_abs: f64) -> LogValue {
        if sign == Sign::Zero || log_abs == f64::NEG_INFINITY {
            LogValue::ZERO
        } else {
            LogValue { sign, log_abs }
        }
    }

    pub fn from_f64(x: f64) -> LogValue {
        if x == 0.0 {
            LogValue::ZERO
        } else if x > 0.0 {
            LogValue {
                sign: Sign::Positive,
                log_abs: x.ln(),
            }
        } else {
            LogValue {
                sign: Sign::Negative,
                log_abs: (-x).ln(),
            }
        }
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn log_abs(&self) -> f64 {
        self.log_abs
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    pub fn is_positive(&self) -> bool {
        self.sign == Sign::Positive
    }

    /// May underflow to `0.0` or overflow to `inf`.
    pub fn to_f64(&self) -> f64 {
        self.sign.as_f64() * self.log_abs.exp()
    }

    pub fn abs(&self) -> LogValue {
        LogValue::from_parts(if self.is_zero() { Sign::Zero } else { Sign::Positive }, self.log_abs)
    }

    /// Multiply by `exp(shift)`.
    pub fn scale_log(&self, shift: f64) -> LogValue {
        LogValue::from_parts(self.sign, self.log_abs + shift)
    }

    pub fn powf(&self, exponent: f64) -> LogValue {
        assert!(self.sign != Sign::Negative, "powf of a negative LogValue");
        if self.is_zero() {
            return if exponent == 0.0 { LogValue::ONE } else { LogValue::ZERO };
        }
        LogValue::from_log(self.log_abs * exponent)
    }

    /// `ln(x)` for positive `x`, `NaN` otherwise.
    pub fn ln(&self) -> f64 {
        match self.sign {
            Sign::Positive => self.log_abs,
            Sign::Zero => f64::NEG_INFINITY,
            Sign::Negative => f64::NAN,
        }
    }

    /// Relative difference `|a - b| / max(|a|, |b|)` computed in log space.
    pub fn rel_diff(&self, other: &LogValue) -> f64 {
        let diff = (*self - *other).abs();
        let scale = self.log_abs.max(other.log_abs);
        if diff.is_zero() {
            0.0
        } else {
            (diff.log_abs - scale).exp()
        }
    }

    /// Sum of many values with a single rescaling.
    pub fn sum<'a, I: IntoIterator<Item = &'a LogValue>>(values: I) -> LogValue {
        let values: Vec<&LogValue> = values.into_iter().filter(|v| !v.is_zero()).collect();
        let Some(max) = values.iter().map(|v| v.log_abs).max_by(|a, b| a.total_cmp(b)) else {
            return LogValue::ZERO;
        };
        let total: f64 = values.iter().map(|v| v.sign.as_f64() * (v.log_abs - max).exp()).sum();
        LogValue::from_f64(total).scale_log(max)
    }
}

/// `ln(exp(a) + exp(b))` for `a >= b`.
fn log_add_ordered(a: f64, b: f64) -> f64 {
    a + (b - a).exp().ln_1p()
}

/// `ln(exp(a) - exp(b))` for `a >= b`.
fn log_sub_ordered(a: f64, b: f64) -> f64 {
    let d = b - a;
    // ln(1 - e^d), split at ln 2 for accuracy
    if d > -std::f64::consts::LN_2 {
        a + (-d.exp_m1()).ln()
    } else {
        a + (-d.exp()).ln_1p()
    }
}

impl Add for LogValue {
    type Output = LogValue;

    fn add(self, rhs: LogValue) -> LogValue {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.log_abs >= rhs.log_abs {
            (self, rhs)
        } else {
            (rhs, self)
        };
        if big.sign == small.sign {
            LogValue::from_parts(big.sign, log_add_ordered(big.log_abs, small.log_abs))
        } else if big.log_abs == small.log_abs {
            LogValue::ZERO
        } else {
            LogValue::from_parts(big.sign, log_sub_ordered(big.log_abs, small.log_abs))
        }
    }
}

impl Neg for LogValue {
    type Output = LogValue;

    fn neg(self) -> LogValue {
        LogValue::from_parts(self.sign.flip(), self.log_abs)
    }
}

impl Sub for LogValue {
    type Output = LogValue;

    fn sub(self, rhs: LogValue) -> LogValue {
        self + (-rhs)
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for LogValue {
    type Output = LogValue;

    fn mul(self, rhs: LogValue) -> LogValue {
        LogValue::from_parts(self.sign.times(rhs.sign), self.log_abs + rhs.log_abs)
    }
}

impl Div for LogValue {
    type Output = LogValue;

    fn div(self, rhs: LogValue) -> LogValue {
        assert!(!rhs.is_zero(), "division of a LogValue by zero");
        LogValue::from_parts(self.sign.times(rhs.sign), self.log_abs - rhs.log_abs)
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &LogValue) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                Sign::Zero => Some(Ordering::Equal),
                Sign::Positive => self.log_abs.partial_cmp(&other.log_abs),
                Sign::Negative => other.log_abs.partial_cmp(&self.log_abs),
            },
            ord => Some(ord),
        }
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            Sign::Zero => write!(f, "0"),
            Sign::Positive => write!(f, "exp({})", self.log_abs),
            Sign::Negative => write!(f, "-exp({})", self.log_abs),
        }
    }
}

// JSON has no -inf, so zero is written with a null log.
#[derive(Serialize, Deserialize)]
struct LogValueRepr {
    sign: Sign,
    log_abs: Option<f64>,
}

impl Serialize for LogValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        LogValueRepr {
            sign: self.sign,
            log_abs: (!self.is_zero()).then_some(self.log_abs),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LogValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<LogValue, D::Error> {
        let repr = LogValueRepr::deserialize(deserializer)?;
        match (repr.sign, repr.log_abs) {
            (Sign::Zero, _) | (_, None) => Ok(LogValue::ZERO),
            (sign, Some(l)) => Ok(LogValue::from_parts(sign, l)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn arithmetic_matches_reals_far_below_underflow() {
        let a = LogValue::from_log(-900.0);
        let b = LogValue::from_log(-901.0);
        let s = a + b;
        assert!((s.log_abs() - (-900.0 + (-1.0f64).exp().ln_1p())).abs() < 1e-13);
        let d = a - b;
        assert!((d.log_abs() - (-900.0 + (-(-1.0f64).exp()).ln_1p())).abs() < 1e-13);
        assert_eq!((b - a).sign(), Sign::Negative);
        assert!((a * b).log_abs() == -1801.0);
        assert!(b < a);
        assert!(-a < b);
        assert!(LogValue::ZERO < b);
    }

    #[test]
    fn cancellation_gives_exact_zero() {
        let a = LogValue::from_log(-5.0);
        assert!((a - a).is_zero());
        assert!((a + LogValue::ZERO) == a);
    }

    #[test]
    fn json_round_trip_including_zero() {
        for v in [LogValue::ZERO, LogValue::from_f64(-2.5), LogValue::from_log(-1234.5)] {
            let s = serde_json::to_string(&v).unwrap();
            let back: LogValue = serde_json::from_str(&s).unwrap();
            assert_eq!(v, back);
        }
        assert_eq!(
            serde_json::to_string(&LogValue::ZERO).unwrap(),
            r#"{"sign":"0","log_abs":null}"#
        );
    }

    proptest! {
        #[test]
        fn add_sub_mul_agree_with_f64(x in -1e3f64..1e3, y in -1e3f64..1e3) {
            let (a, b) = (LogValue::from_f64(x), LogValue::from_f64(y));
            let tol = 1e-12 * (x.abs() + y.abs()).max(1e-300);
            prop_assert!(((a + b).to_f64() - (x + y)).abs() <= tol * 4.0);
            prop_assert!(((a - b).to_f64() - (x - y)).abs() <= tol * 4.0);
            prop_assert!(((a * b).to_f64() - x * y).abs() <= 1e-12 * (x * y).abs());
            prop_assert_eq!(a.partial_cmp(&b), x.partial_cmp(&y));
        }
    }
}
