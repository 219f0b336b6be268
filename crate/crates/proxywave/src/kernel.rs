//! Layer-potential kernels of the 2D Helmholtz equation.
//!
//! Fundamental solution G(x - y) = (i/4) H_0^(1)(k |x - y|); the double-layer
//! kernel is its normal derivative in y for a normal pointing out of the
//! scatterer: dG/dn(y) = -(i k / 4) H_1^(1)(k r) (n(y) . (y - x)) / r.

use num_complex::Complex64;

use crate::bessel::hankel1_01;
use crate::error::Result;
use crate::geometry::Point;

const I_QUARTER: Complex64 = Complex64::new(0.0, 0.25);

/// Single-layer kernel value G_k(x - y).
#[inline]
pub fn single_layer(k: f64, x: Point, y: Point) -> Result<Complex64> {
    let r = x.dist(y);
    let (h0, _) = hankel1_01(k * r)?;
    Ok(I_QUARTER * h0)
}

/// Double-layer kernel value dG_k(x - y)/dn(y).
#[inline]
pub fn double_layer(k: f64, x: Point, y: Point, normal_y: Point) -> Result<Complex64> {
    let r = x.dist(y);
    let (_, h1) = hankel1_01(k * r)?;
    let ndot = normal_y.dot(y.sub(x)) / r;
    Ok(-I_QUARTER * k * ndot * h1)
}

/// Both kernels at once; they share one Hankel evaluation, which is what the
/// per-pair evaluation loops want.
#[inline]
pub fn layer_pair(k: f64, x: Point, y: Point, normal_y: Point) -> Result<(Complex64, Complex64)> {
    let r = x.dist(y);
    let (h0, h1) = hankel1_01(k * r)?;
    let ndot = normal_y.dot(y.sub(x)) / r;
    Ok((I_QUARTER * h0, -I_QUARTER * k * ndot * h1))
}
