//! Adaptive Gauss-Kronrod (7/15) quadrature with a global error queue.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::num::{lit, to_f64, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Map used to fold `[a, ∞)` onto a finite interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SemiInfiniteTransform {
    /// `u = a + s·t/(1-t)`, `t ∈ [0, 1)`.
    Rational,
    /// `u = a - s·ln(1-t)`, suited to exponentially decaying integrands.
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub transform: SemiInfiniteTransform,
    /// Length scale `s` of the semi-infinite map.
    pub scale: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            transform: SemiInfiniteTransform::Rational,
            scale: 1.0,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::input("QuadratureSpec", "tolerances must be > 0"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::input("QuadratureSpec", "max_subdivisions must be >= 1"));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::input("QuadratureSpec", "scale must be finite and > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_error: T,
    pub subdivisions: usize,
}

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half: T = lit(0.5);
    let centre = half * (a + b);
    let radius = half * (b - a);
    let fc = f(centre);
    let mut k = fc * lit(WGK[7]);
    let mut g = fc * lit(WG[3]);
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = radius * lit(x);
        let pair = f(centre - dx) + f(centre + dx);
        k = k + pair * lit(w);
        if j % 2 == 1 {
            g = g + pair * lit(WG[j / 2]);
        }
    }
    let value = k * radius;
    let error = ((k - g) * radius).abs();
    (value, error)
}

/// Integrates `f` over the finite interval `[a, b]`.
///
/// Stops once the summed error estimate is within `max(abs_tol, rel_tol·|I|)`.
/// Exceeding `max_subdivisions` returns [`Error::Quadrature`] carrying the
/// best estimate so far. Non-finite integrand values are treated as zero so
/// that removable endpoint singularities of transformed integrands are harmless.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, spec: &QuadratureSpec) -> Result<QuadResult<T>> {
    spec.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::input("integrate", format!("limits must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: T::zero(), abs_error: T::zero(), subdivisions: 0 });
    }
    if b < a {
        let r = integrate(f, b, a, spec)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }
    let guarded = |x: T| {
        let y = f(x);
        if y.is_finite() {
            y
        } else {
            T::zero()
        }
    };
    let abs_tol: T = lit(spec.abs_tol);
    let rel_tol: T = lit(spec.rel_tol);
    let (v0, e0) = kronrod(&guarded, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v0, error: e0 });
    let mut total = v0;
    let mut total_err = e0;
    let mut subdivisions = 0usize;
    // Segments too short to split further; their error is final.
    let mut frozen_err = T::zero();
    let mut frozen_val = T::zero();
    loop {
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let half: T = lit(0.5);
        let mid = half * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) <= T::epsilon() * lit(64.0) * mid.abs() {
            frozen_err = frozen_err + worst.error;
            frozen_val = frozen_val + worst.value;
            continue;
        }
        if subdivisions >= spec.max_subdivisions {
            heap.push(worst);
            return Err(Error::Quadrature {
                estimate: to_f64(total),
                error: to_f64(total_err),
                subdivisions,
            });
        }
        subdivisions += 1;
        let (vl, el) = kronrod(&guarded, worst.a, mid);
        let (vr, er) = kronrod(&guarded, mid, worst.b);
        total = total - worst.value + vl + vr;
        total_err = total_err - worst.error + el + er;
        heap.push(Segment { a: worst.a, b: mid, value: vl, error: el });
        heap.push(Segment { a: mid, b: worst.b, value: vr, error: er });
    }
    // Re-sum to shed the drift of the running updates.
    let mut value = frozen_val;
    let mut error = frozen_err;
    for s in heap.iter() {
        value = value + s.value;
        error = error + s.error;
    }
    Ok(QuadResult { value, abs_error: error, subdivisions })
}

/// Integrates `f` over `[a, ∞)` after mapping onto `[0, 1)`.
pub fn integrate_semi_infinite<T: Real, F: Fn(T) -> T>(f: F, a: T, spec: &QuadratureSpec) -> Result<QuadResult<T>> {
    spec.validate()?;
    if !a.is_finite() {
        return Err(Error::input("integrate_semi_infinite", format!("lower limit must be finite, got {a}")));
    }
    let s: T = lit(spec.scale);
    match spec.transform {
        SemiInfiniteTransform::Rational => integrate(
            |t: T| {
                let om = T::one() - t;
                if om <= T::zero() {
                    return T::zero();
                }
                let u = a + s * t / om;
                f(u) * s / (om * om)
            },
            T::zero(),
            T::one(),
            spec,
        ),
        SemiInfiniteTransform::Exponential => integrate(
            |t: T| {
                let om = T::one() - t;
                if om <= T::zero() {
                    return T::zero();
                }
                let u = a - s * om.ln();
                f(u) * s / om
            },
            T::zero(),
            T::one(),
            spec,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x: f64| 3.0 * x * x, 0.0, 2.0, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(r.value, 8.0, max_relative = 1e-14);
        assert_eq!(r.subdivisions, 0);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = integrate(|x: f64| x.exp(), 1.0, 0.0, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(r.value, 1.0 - std::f64::consts::E, max_relative = 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-8);
    }

    #[test]
    fn semi_infinite_transforms_agree() {
        let spec = QuadratureSpec::default();
        let want = 0.5;
        let r = integrate_semi_infinite(|x: f64| (-2.0 * x).exp(), 0.0, &spec).unwrap();
        assert_relative_eq!(r.value, want, max_relative = 1e-9);
        let spec = QuadratureSpec { transform: SemiInfiniteTransform::Exponential, ..spec };
        let r = integrate_semi_infinite(|x: f64| (-2.0 * x).exp(), 0.0, &spec).unwrap();
        assert_relative_eq!(r.value, want, max_relative = 1e-9);
        // ∫ 1/(1+x)^2 from 0 to ∞
        let r = integrate_semi_infinite(|x: f64| 1.0 / ((1.0 + x) * (1.0 + x)), 0.0, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn non_convergence_carries_estimate() {
        let spec = QuadratureSpec::default().with_max_subdivisions(3);
        let err = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &spec).unwrap_err();
        match err {
            Error::Quadrature { estimate, subdivisions, .. } => {
                assert!(estimate.is_finite());
                assert_eq!(subdivisions, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn more_subdivisions_do_not_move_converged_result() {
        let f = |x: f64| (-x).exp() / (1.0 + x);
        let a = integrate_semi_infinite(f, 0.0, &QuadratureSpec::default()).unwrap();
        let b = integrate_semi_infinite(f, 0.0, &QuadratureSpec::default().with_max_subdivisions(20_000)).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn invalid_spec_rejected() {
        let spec = QuadratureSpec { abs_tol: 0.0, ..QuadratureSpec::default() };
        assert!(integrate(|x: f64| x, 0.0, 1.0, &spec).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let spec = QuadratureSpec::default().with_tolerances(1e-6, 1e-6);
        let r = integrate(|x: f32| x.cos(), 0.0, 1.0, &spec).unwrap();
        assert_relative_eq!(r.value, 1f32.sin(), max_relative = 1e-5);
    }
}
