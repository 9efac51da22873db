use halfwave::efsum::{compensated_sum, naive_sum, sum_3op, sum_6op};
use halfwave::precision::round_to;
use halfwave::{Format, Half, SumVariant};
use proptest::prelude::*;

const U16: f64 = 1.0 / 2048.0;

fn half(bits: u16) -> Option<f64> {
    let h = Half::from_bits(bits);
    h.is_finite().then(|| h.to_f64())
}

fn fp16(x: f64) -> halfwave::PScalar {
    round_to(Format::Fp16, x)
}

/// Sums of binary16 values are exact in binary64, so this is the true sum.
fn exact(values: &[f64]) -> f64 {
    values.iter().sum()
}

#[test]
fn four_thousand_ones_saturate_only_the_plain_sum() {
    let ones = vec![1.0; 4096];
    let oracle = 4096i64;
    assert_eq!(naive_sum(Format::Fp16, &ones).value(), 2048.0);
    for variant in [SumVariant::Op3, SumVariant::Op6] {
        let r = compensated_sum(Format::Fp16, &ones, variant);
        let total = r.s.value() + r.t.value();
        assert_eq!(total, oracle as f64, "{variant}");
        assert_eq!(r.s.value(), 4096.0, "{variant}");
    }
}

#[test]
fn wider_formats_do_not_saturate_at_that_size() {
    let ones = vec![1.0; 4096];
    assert_eq!(naive_sum(Format::Fp32, &ones).value(), 4096.0);
    assert_eq!(naive_sum(Format::Fp64, &ones).value(), 4096.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4000))]

    #[test]
    fn six_op_is_exact_for_any_order(a in any::<u16>(), b in any::<u16>()) {
        let (Some(a), Some(b)) = (half(a), half(b)) else { return Ok(()) };
        prop_assume!((a + b).abs() < 65504.0);
        let r = sum_6op(Format::Fp16, fp16(a), fp16(b));
        prop_assert_eq!(r.s.value() + r.t.value(), a + b);
        prop_assert_eq!(r.s.value(), fp16(a + b).value());
    }

    #[test]
    fn three_op_is_exact_when_the_larger_comes_first(a in any::<u16>(), b in any::<u16>()) {
        let (Some(a), Some(b)) = (half(a), half(b)) else { return Ok(()) };
        let (a, b) = if a.abs() >= b.abs() { (a, b) } else { (b, a) };
        prop_assume!((a + b).abs() < 65504.0);
        let r = sum_3op(Format::Fp16, fp16(a), fp16(b));
        prop_assert_eq!(r.s.value() + r.t.value(), a + b);
    }

    #[test]
    fn correction_is_below_half_an_ulp_of_the_sum(a in -1.0e3f64..1.0e3, b in -1.0e3f64..1.0e3) {
        let r = sum_6op(Format::Fp16, fp16(a), fp16(b));
        prop_assert!(r.t.value().abs() <= U16 * r.s.value().abs());
    }

    #[test]
    fn compensated_error_is_bounded(values in prop::collection::vec(-1.0f64..1.0, 1..300)) {
        let values: Vec<f64> = values.iter().map(|&v| fp16(v).value()).collect();
        let n = values.len() as f64;
        let magnitude: f64 = values.iter().map(|v| v.abs()).sum();
        let truth = exact(&values);
        for variant in [SumVariant::Op3, SumVariant::Op6] {
            let s = compensated_sum(Format::Fp16, &values, variant).s.value();
            let bound = (2.0 * U16 + 4.0 * n * U16 * U16) * magnitude + 2f64.powi(-24);
            prop_assert!((s - truth).abs() <= bound, "{variant}: {s} vs {truth}, bound {bound}");
        }
        let plain = naive_sum(Format::Fp16, &values).value();
        prop_assert!((plain - truth).abs() <= (n - 1.0) * U16 * magnitude * (1.0 + U16).powf(n) + 2f64.powi(-24));
    }
}
