use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the engine computes in.
///
/// Every algorithm in the crate is written against this trait so that the
/// same code runs in `f64` (the default, see the aliases at the crate root)
/// and in `f32` for cheaper sweeps.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Bit-level key used for exact agreement and for merging identical atoms.
    /// `-0.0` and `0.0` map to the same key.
    fn exact_key(self) -> u64 {
        let v = self.as_f64();
        if v == 0.0 {
            0
        } else {
            v.to_bits()
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
