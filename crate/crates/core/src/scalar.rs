//! Scalar abstractions shared by the weighting and accumulator code.

use std::fmt::{Debug, Display};

use num_traits::{Bounded, CheckedAdd, Float, FromPrimitive, NumCast, PrimInt, ToPrimitive, Unsigned};

/// Real-valued weight type (`f32` or `f64`).
pub trait Weight: Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync {}

impl<T> Weight for T where T: Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync {}

/// Unsigned accumulator cell (`u16` or `u32`).
pub trait AccumulatorCell:
    PrimInt + Unsigned + CheckedAdd + Bounded + NumCast + Default + Debug + Send + Sync
{
    /// Cell width in bits.
    const BITS: u32;
}

impl AccumulatorCell for u16 {
    const BITS: u32 = 16;
}

impl AccumulatorCell for u32 {
    const BITS: u32 = 32;
}

impl AccumulatorCell for u64 {
    const BITS: u32 = 64;
}
