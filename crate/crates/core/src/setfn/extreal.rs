use std::fmt;
use std::ops::Add;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// A real number or `+∞`.
///
/// Set-function values are nonnegative; contractions of non-monotone
/// functions are the one place a negative finite value can arise.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const INFINITY: ExtReal = ExtReal(f64::INFINITY);
    pub const ZERO: ExtReal = ExtReal(0.0);

    pub fn new(v: f64) -> Result<Self> {
        if v.is_nan() || v == f64::NEG_INFINITY {
            Err(Error::InvalidArgument(format!("{v} is not a valid extended real")))
        } else {
            Ok(ExtReal(v))
        }
    }

    pub(crate) fn raw(v: f64) -> Self {
        debug_assert!(!v.is_nan() && v != f64::NEG_INFINITY);
        ExtReal(v)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// `self − other`; `∞ − ∞` and `finite − ∞` are errors.
    pub fn checked_sub(self, other: ExtReal) -> Result<ExtReal> {
        if other.0.is_infinite() {
            return Err(Error::InvalidArgument(format!(
                "cannot subtract +inf from {self}"
            )));
        }
        Ok(ExtReal(self.0 - other.0))
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, o: ExtReal) -> ExtReal {
        ExtReal(self.0 + o.0)
    }
}

impl From<ExtReal> for f64 {
    fn from(v: ExtReal) -> f64 {
        v.0
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = ExtReal;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtReal, E> {
                ExtReal::new(v).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtReal, E> {
                match v {
                    "inf" | "+inf" | "Infinity" => Ok(ExtReal::INFINITY),
                    _ => v
                        .parse::<f64>()
                        .map_err(E::custom)
                        .and_then(|x| ExtReal::new(x).map_err(E::custom)),
                }
            }
        }
        d.deserialize_any(V)
    }
}
