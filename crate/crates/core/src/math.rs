//! Scalar helpers backed by `libm` so results are identical with or without `std`.

pub use num_complex::Complex64 as C64;

use core::f64::consts::PI;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
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
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// `exp(-j 2π k / n)`.
#[inline]
pub fn twiddle(k: usize, n: usize) -> C64 {
    let phase = -2.0 * PI * (k % n) as f64 / n as f64;
    C64::new(libm::cos(phase), libm::sin(phase))
}

/// Table of `exp(-j 2π m / n)` for `m in 0..n`.
pub fn twiddle_table(n: usize) -> alloc::vec::Vec<C64> {
    (0..n).map(|m| twiddle(m, n)).collect()
}

/// Decibels to linear power ratio. `+inf` maps to `+inf`, `-inf` to 0.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    powf(10.0, db / 10.0)
}

/// Linear power ratio to decibels.
#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * log10(x)
}

/// Arithmetic mean; `None` on empty input.
pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Median of a copy of `xs` (average of the two middle values for even length).
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v: alloc::vec::Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}
