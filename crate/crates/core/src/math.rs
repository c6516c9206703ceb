//! Float helpers backed by `libm` so results are identical with and without
//! `std`, and unit conversions used across the radio code.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn exp2(x: f64) -> f64 {
    libm::exp2(x)
}

#[inline]
pub fn exp_m1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub fn pow10(x: f64) -> f64 {
    libm::exp10(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// 10^(db/10).
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    pow10(db / 10.0)
}

#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * log10(x)
}

#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    pow10(dbm / 10.0) / 1000.0
}

#[inline]
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * log10(w * 1000.0)
}

/// Wraps an angle in degrees to (-180, 180].
pub fn wrap_degrees(deg: f64) -> f64 {
    let mut d = deg - 360.0 * floor(deg / 360.0);
    if d > 180.0 {
        d -= 360.0;
    }
    d
}
