//! Thin wrappers over `libm` so the crate builds without `std`.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn sin_cos(x: f64) -> (f64, f64) {
    libm::sincos(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

/// `e^{-i x}` as a complex number.
#[inline]
pub(crate) fn cis_neg(x: f64) -> num_complex::Complex64 {
    let (s, c) = sin_cos(x);
    num_complex::Complex64::new(c, -s)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}
