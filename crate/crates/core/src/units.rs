//! Decibel conversions shared by every module.

/// Power ratio in dB to linear.
#[inline]
pub fn to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to dB. Zero maps to `-inf`.
#[inline]
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Sums powers expressed in dB in the linear domain.
pub fn db_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    to_db(terms.into_iter().map(to_linear).sum())
}

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
