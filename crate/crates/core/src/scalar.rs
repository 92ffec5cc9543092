//! Scalar abstraction shared by every backend.
//!
//! All amplitudes are `Complex<T>` for a real type `T: Real`. Only `f32` and
//! `f64` implement it; each carries the tolerances that are meaningful at its
//! precision.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type usable as the real part of an amplitude.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Max-norm tolerance for unitarity of constructed gates.
    const CONSTRUCTION_TOL: Self;
    /// Tolerance for norms and fidelities after evolution.
    const EVOLUTION_TOL: Self;
    /// Singular values above this count toward a Schmidt rank.
    const RANK_TOL: f64;
    /// Short type name recorded in output metadata.
    const NAME: &'static str;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }
}

impl Real for f64 {
    const CONSTRUCTION_TOL: Self = 1e-12;
    const EVOLUTION_TOL: Self = 1e-10;
    const RANK_TOL: f64 = 1e-8;
    const NAME: &'static str = "f64";
}

impl Real for f32 {
    const CONSTRUCTION_TOL: Self = 1e-5;
    const EVOLUTION_TOL: Self = 1e-4;
    const RANK_TOL: f64 = 1e-3;
    const NAME: &'static str = "f32";
}

pub(crate) fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub(crate) fn zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

pub(crate) fn one<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

/// e^{iθ}
pub(crate) fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Euclidean norm of an amplitude vector.
pub fn norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr()).sqrt()
}

/// ⟨a|b⟩
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(zero(), |acc, (x, y)| acc + x.conj() * y)
}

/// Basis vector |index⟩ of the given dimension.
pub fn basis<T: Real>(dim: usize, index: usize) -> Vec<Complex<T>> {
    let mut v = vec![zero(); dim];
    v[index] = one();
    v
}

/// Kronecker product with `low` occupying the least significant index bits.
pub fn kron_vec<T: Real>(high: &[Complex<T>], low: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut out = Vec::with_capacity(high.len() * low.len());
    for h in high {
        for l in low {
            out.push(h * l);
        }
    }
    out
}
