//! Error-free transformations of a floating-point sum.
//!
//! Both routines return the rounded sum `s = fl(a + b)` and a correction `t`
//! holding the bits lost by that rounding. The three-operation form is exact
//! when `|a| >= |b|`; the six-operation form is exact for any ordering.

use crate::precision::{round_to, Format, PScalar, Precision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SumVariant {
    Op3,
    Op6,
}

impl std::str::FromStr for SumVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "op3" | "3op" | "sum_3op" => Ok(SumVariant::Op3),
            "op6" | "6op" | "sum_6op" => Ok(SumVariant::Op6),
            other => Err(format!("unknown compensated-sum variant `{other}`")),
        }
    }
}

impl std::fmt::Display for SumVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SumVariant::Op3 => "op3",
            SumVariant::Op6 => "op6",
        })
    }
}

/// Rounded sum and its compensation term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumResult {
    pub s: PScalar,
    pub t: PScalar,
}

impl SumResult {
    pub fn zero(format: Format) -> Self {
        let z = round_to(format, 0.0);
        SumResult { s: z, t: z }
    }

    pub fn is_finite(&self) -> bool {
        self.s.value().is_finite() && self.t.value().is_finite()
    }
}

/// `s = a + b; z = s - a; t = b - z`.
#[inline]
pub fn two_sum_3op_work<P: Precision>(a: P::Work, b: P::Work) -> (P::Work, P::Work) {
    let s = P::wadd(a, b);
    let z = P::wsub(s, a);
    let t = P::wsub(b, z);
    (s, t)
}

/// `s = a + b; p_a = s - b; p_b = s - p_a; d_a = a - p_a; d_b = b - p_b; t = d_a + d_b`.
#[inline]
pub fn two_sum_6op_work<P: Precision>(a: P::Work, b: P::Work) -> (P::Work, P::Work) {
    let s = P::wadd(a, b);
    let p_a = P::wsub(s, b);
    let p_b = P::wsub(s, p_a);
    let d_a = P::wsub(a, p_a);
    let d_b = P::wsub(b, p_b);
    let t = P::wadd(d_a, d_b);
    (s, t)
}

#[inline]
pub fn two_sum_work<P: Precision>(variant: SumVariant, a: P::Work, b: P::Work) -> (P::Work, P::Work) {
    match variant {
        SumVariant::Op3 => two_sum_3op_work::<P>(a, b),
        SumVariant::Op6 => two_sum_6op_work::<P>(a, b),
    }
}

#[inline]
pub fn two_sum_3op<P: Precision>(a: P::Elem, b: P::Elem) -> (P::Elem, P::Elem) {
    let (s, t) = two_sum_3op_work::<P>(P::load(a), P::load(b));
    (P::store(s), P::store(t))
}

#[inline]
pub fn two_sum_6op<P: Precision>(a: P::Elem, b: P::Elem) -> (P::Elem, P::Elem) {
    let (s, t) = two_sum_6op_work::<P>(P::load(a), P::load(b));
    (P::store(s), P::store(t))
}

#[inline]
pub fn two_sum<P: Precision>(variant: SumVariant, a: P::Elem, b: P::Elem) -> (P::Elem, P::Elem) {
    let (s, t) = two_sum_work::<P>(variant, P::load(a), P::load(b));
    (P::store(s), P::store(t))
}

macro_rules! dispatch_format {
    ($format:expr, $func:ident, $a:expr, $b:expr) => {{
        use crate::precision::{Fp16, Fp32, Fp64};
        fn lift<P: Precision>(format: Format, a: f64, b: f64) -> SumResult {
            let (s, t) = $func::<P>(P::round(a), P::round(b));
            SumResult {
                s: round_to(format, P::widen(s)),
                t: round_to(format, P::widen(t)),
            }
        }
        match $format {
            Format::Fp64 => lift::<Fp64>($format, $a, $b),
            Format::Fp32 => lift::<Fp32>($format, $a, $b),
            Format::Fp16 => lift::<Fp16>($format, $a, $b),
        }
    }};
}

pub fn sum_3op(format: Format, a: PScalar, b: PScalar) -> SumResult {
    debug_assert!(a.format() == format && b.format() == format);
    dispatch_format!(format, two_sum_3op, a.value(), b.value())
}

pub fn sum_6op(format: Format, a: PScalar, b: PScalar) -> SumResult {
    debug_assert!(a.format() == format && b.format() == format);
    dispatch_format!(format, two_sum_6op, a.value(), b.value())
}

pub fn sum_eft(format: Format, variant: SumVariant, a: PScalar, b: PScalar) -> SumResult {
    match variant {
        SumVariant::Op3 => sum_3op(format, a, b),
        SumVariant::Op6 => sum_6op(format, a, b),
    }
}

/// One step of compensated recursive summation.
///
/// The carried compensation is folded into the increment first, then the
/// corrected increment is added to the running sum with an error-free
/// transformation whose residual becomes the new compensation.
pub fn compensated_accumulate(
    format: Format,
    running: SumResult,
    increment: PScalar,
    variant: SumVariant,
) -> SumResult {
    let corrected = crate::precision::p_add(format, increment, running.t);
    sum_eft(format, variant, running.s, corrected)
}

/// Compensated recursive sum of a sequence, starting from zero.
pub fn compensated_sum(format: Format, values: &[f64], variant: SumVariant) -> SumResult {
    values.iter().fold(SumResult::zero(format), |acc, &x| {
        compensated_accumulate(format, acc, round_to(format, x), variant)
    })
}

/// Plain recursive summation, the control path.
pub fn naive_sum(format: Format, values: &[f64]) -> PScalar {
    values.iter().fold(round_to(format, 0.0), |acc, &x| {
        crate::precision::p_add(format, acc, round_to(format, x))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(x: f64) -> PScalar {
        round_to(Format::Fp16, x)
    }

    #[test]
    fn tie_case_recovers_lost_bit() {
        let r = sum_3op(Format::Fp16, h(1.0), h(2f64.powi(-11)));
        assert_eq!(r.s.value(), 1.0);
        assert_eq!(r.t.value(), 2f64.powi(-11));
    }

    #[test]
    fn six_op_handles_reversed_order() {
        let r = sum_6op(Format::Fp16, h(2f64.powi(-11)), h(1.0));
        assert_eq!(r.s.value(), 1.0);
        assert_eq!(r.t.value(), 2f64.powi(-11));
    }

    #[test]
    fn three_op_fails_on_reversed_order() {
        // |a| < |b| and s - a is inexact, so the 3op residual misses bits; 6op does not.
        let (a, b) = (h(0.001), h(1.0));
        let exact = a.value() + b.value();
        let r3 = sum_3op(Format::Fp16, a, b);
        assert_eq!(r3.s.value(), 1.0009765625);
        assert_ne!(r3.s.value() + r3.t.value(), exact);
        let r6 = sum_6op(Format::Fp16, a, b);
        assert_eq!(r6.s.value() + r6.t.value(), exact);
    }

    #[test]
    fn increment_below_half_ulp() {
        for variant in [SumVariant::Op3, SumVariant::Op6] {
            let r = sum_eft(Format::Fp16, variant, h(2048.0), h(1.0));
            assert_eq!((r.s.value(), r.t.value()), (2048.0, 1.0));
        }
    }

    #[test]
    fn zero_inputs() {
        let r = sum_6op(Format::Fp32, round_to(Format::Fp32, 0.0), round_to(Format::Fp32, 0.0));
        assert_eq!((r.s.value(), r.t.value()), (0.0, 0.0));
        let x = round_to(Format::Fp64, 0.3);
        let r = sum_3op(Format::Fp64, x, round_to(Format::Fp64, 0.0));
        assert_eq!((r.s.value(), r.t.value()), (0.3, 0.0));
    }

    #[test]
    fn single_element_accumulation() {
        let r = compensated_sum(Format::Fp16, &[0.1], SumVariant::Op3);
        assert_eq!(r.s.value(), h(0.1).value());
        assert_eq!(r.t.value(), 0.0);
    }

    #[test]
    fn overflow_is_visible() {
        let r = sum_3op(Format::Fp16, h(65504.0), h(65504.0));
        assert!(!r.is_finite());
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("op6".parse::<SumVariant>().unwrap(), SumVariant::Op6);
        assert_eq!("sum_3op".parse::<SumVariant>().unwrap(), SumVariant::Op3);
        assert!("op9".parse::<SumVariant>().is_err());
    }
}
