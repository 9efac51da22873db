//! Floating-point formats and correctly rounded scalar arithmetic.
//!
//! binary64 and binary32 use the host's native IEEE arithmetic. binary16 is
//! emulated: values are stored in their 16-bit encoding, operands are widened
//! exactly to binary32, the operation is performed there, and the result is
//! rounded once to binary16 with round-to-nearest-even and gradual underflow.
//!
//! Rounding through binary32 is equivalent to a single correct rounding.
//! binary32 carries 24 significant bits, and 24 >= 2 * 11 + 2, which is the
//! condition under which double rounding through a wider format is harmless
//! for `+`, `-`, `*` and `/`. The tests check this against an exact oracle.

use std::fmt;

/// The three supported IEEE 754 binary interchange formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Format {
    Fp64,
    Fp32,
    Fp16,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Fp64, Format::Fp32, Format::Fp16];

    pub fn name(self) -> &'static str {
        match self {
            Format::Fp64 => "fp64",
            Format::Fp32 => "fp32",
            Format::Fp16 => "fp16",
        }
    }

    pub fn constants(self) -> FloatFormat {
        format_constants(self)
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fp64" | "f64" | "binary64" | "double" => Ok(Format::Fp64),
            "fp32" | "f32" | "binary32" | "single" => Ok(Format::Fp32),
            "fp16" | "f16" | "binary16" | "half" => Ok(Format::Fp16),
            other => Err(format!("unknown precision `{other}` (expected fp64, fp32 or fp16)")),
        }
    }
}

/// Metadata describing one binary floating-point format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatFormat {
    pub name: Format,
    pub exponent_bits: u32,
    /// Stored fraction bits, excluding the hidden bit.
    pub fraction_bits: u32,
    pub unit_roundoff: f64,
    pub max_finite: f64,
    pub min_positive_normal: f64,
    pub min_positive_subnormal: f64,
}

impl FloatFormat {
    /// Significant bits including the hidden bit.
    pub fn precision_bits(&self) -> u32 {
        self.fraction_bits + 1
    }

    pub fn min_exponent(&self) -> i32 {
        2 - (1 << (self.exponent_bits - 1))
    }

    pub fn max_exponent(&self) -> i32 {
        (1 << (self.exponent_bits - 1)) - 1
    }
}

/// Returns the populated metadata record for `format`.
pub fn format_constants(format: Format) -> FloatFormat {
    let (exponent_bits, fraction_bits) = match format {
        Format::Fp64 => (11u32, 52u32),
        Format::Fp32 => (8, 23),
        Format::Fp16 => (5, 10),
    };
    let emax = (1i32 << (exponent_bits - 1)) - 1;
    let emin = 1 - emax;
    let p = fraction_bits as i32 + 1;
    // (2 - 2^(1-p)) * 2^emax, written so that fp64 does not overflow.
    let max_finite = (2.0 - exp2i(1 - p)) * exp2i(emax - 1) * 2.0;
    FloatFormat {
        name: format,
        exponent_bits,
        fraction_bits,
        unit_roundoff: exp2i(-p),
        max_finite,
        min_positive_normal: exp2i(emin),
        min_positive_subnormal: exp2i(emin - (p - 1)),
    }
}

/// Exact power of two for any exponent in the binary64 range, subnormals included.
fn exp2i(e: i32) -> f64 {
    if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else {
        f64::from_bits(1u64 << (e + 1074))
    }
}

/// A binary16 value stored in its 16-bit interchange encoding.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Half(u16);

impl Half {
    pub const ZERO: Half = Half(0);
    pub const INFINITY: Half = Half(0x7c00);
    pub const MAX: Half = Half(0x7bff);

    pub const fn from_bits(bits: u16) -> Self {
        Half(bits)
    }

    pub const fn to_bits(self) -> u16 {
        self.0
    }

    /// Rounds a binary64 value to the nearest binary16 value, ties to even.
    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Half(f64_to_half_bits_fast(x))
    }

    /// Exact widening to binary64.
    #[inline]
    pub fn to_f64(self) -> f64 {
        half_bits_to_f32(self.0) as f64
    }

    /// Rounds a binary32 value to binary16, ties to even.
    #[inline]
    pub fn from_f32(x: f32) -> Self {
        Half(f32_to_half_bits(x))
    }

    /// Exact widening to binary32.
    #[inline]
    pub fn to_f32(self) -> f32 {
        half_bits_to_f32(self.0)
    }

    pub fn is_finite(self) -> bool {
        self.0 & 0x7c00 != 0x7c00
    }

    pub fn is_nan(self) -> bool {
        self.0 & 0x7c00 == 0x7c00 && self.0 & 0x03ff != 0
    }
}

impl fmt::Debug for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}h", self.to_f64())
    }
}

/// Encodes a binary32 value that already lies on the binary16 grid.
#[inline]
fn encode_half_grid(x: f32) -> u16 {
    const MIN_NORMAL: u32 = 0x3880_0000;
    const INF: u32 = 0x7f80_0000;
    let u = x.to_bits();
    let sign = ((u >> 16) & 0x8000) as u16;
    let a = u & 0x7fff_ffff;
    let mag = if a.wrapping_sub(MIN_NORMAL) < INF - MIN_NORMAL {
        (a.wrapping_sub(112 << 23) >> 13) as u16
    } else if a < MIN_NORMAL {
        (f32::from_bits(a) * 16_777_216.0) as u16
    } else if a > INF {
        0x7e00
    } else {
        0x7c00
    };
    sign | mag
}

#[inline]
fn f32_to_half_bits(x: f32) -> u16 {
    encode_half_grid(round_f32_to_half(x))
}

/// Bit patterns of every binary16 value widened to binary32.
static HALF_TO_F32: [u32; 65536] = {
    let mut table = [0u32; 65536];
    let mut h = 0usize;
    while h < 65536 {
        table[h] = widen_bits(h as u16);
        h += 1;
    }
    table
};

const fn widen_bits(h: u16) -> u32 {
    let sign = ((h & 0x8000) as u32) << 16;
    let exp = ((h >> 10) & 0x1f) as u32;
    let mut frac = (h & 0x03ff) as u32;
    let mag = if exp == 0x1f {
        0x7f80_0000 | (frac << 13)
    } else if exp != 0 {
        ((exp + 112) << 23) | (frac << 13)
    } else if frac == 0 {
        0
    } else {
        let mut e = 113u32;
        while frac & 0x0400 == 0 {
            frac <<= 1;
            e -= 1;
        }
        (e << 23) | ((frac & 0x03ff) << 13)
    };
    sign | mag
}

#[inline]
fn half_bits_to_f32(h: u16) -> f32 {
    f32::from_bits(HALF_TO_F32[h as usize])
}

/// Rounds binary64 to binary16 through binary32 with round-to-odd: the
/// binary32 intermediate keeps a sticky last bit whenever the conversion was
/// inexact, and with 24 >= 11 + 2 bits the final rounding is then correct.
#[inline]
fn f64_to_half_bits_fast(x: f64) -> u16 {
    let t = x as f32;
    if t as f64 == x || x.is_nan() {
        return f32_to_half_bits(t);
    }
    let mut b = t.to_bits();
    if (t as f64).abs() > x.abs() {
        b -= 1;
    }
    f32_to_half_bits(f32::from_bits(b | 1))
}

/// Compile-time arithmetic for one operating precision.
///
/// Solvers are generic over this trait; `Elem` is the storage type, so a
/// binary16 field really occupies two bytes per entry.
pub trait Precision: Copy + Send + Sync + fmt::Debug + Default + 'static {
    /// Storage type.
    type Elem: Copy + Send + Sync + Default + PartialEq + fmt::Debug + 'static;
    /// Register type used while computing. Every `Work` value produced by the
    /// `w*` operations is exactly representable in this precision, so
    /// `store` never rounds.
    type Work: Copy + Send + Sync + PartialEq + fmt::Debug;
    const FORMAT: Format;

    fn round(x: f64) -> Self::Elem;
    fn widen(x: Self::Elem) -> f64;
    fn load(x: Self::Elem) -> Self::Work;
    fn store(x: Self::Work) -> Self::Elem;
    fn wadd(a: Self::Work, b: Self::Work) -> Self::Work;
    fn wsub(a: Self::Work, b: Self::Work) -> Self::Work;
    fn wmul(a: Self::Work, b: Self::Work) -> Self::Work;
    fn wdiv(a: Self::Work, b: Self::Work) -> Self::Work;
    fn wneg(a: Self::Work) -> Self::Work;
    fn is_finite(x: Self::Elem) -> bool;

    #[inline]
    fn add(a: Self::Elem, b: Self::Elem) -> Self::Elem {
        Self::store(Self::wadd(Self::load(a), Self::load(b)))
    }
    #[inline]
    fn sub(a: Self::Elem, b: Self::Elem) -> Self::Elem {
        Self::store(Self::wsub(Self::load(a), Self::load(b)))
    }
    #[inline]
    fn mul(a: Self::Elem, b: Self::Elem) -> Self::Elem {
        Self::store(Self::wmul(Self::load(a), Self::load(b)))
    }
    #[inline]
    fn div(a: Self::Elem, b: Self::Elem) -> Self::Elem {
        Self::store(Self::wdiv(Self::load(a), Self::load(b)))
    }
    #[inline]
    fn neg(a: Self::Elem) -> Self::Elem {
        Self::store(Self::wneg(Self::load(a)))
    }

    fn zero() -> Self::Elem {
        Self::Elem::default()
    }

    /// Converts a value held in another precision, rounding once. A
    /// same-precision conversion is a plain copy.
    #[inline]
    fn convert<Q: Precision>(x: Q::Elem) -> Self::Elem {
        if let Some(&same) = (&x as &dyn std::any::Any).downcast_ref::<Self::Elem>() {
            return same;
        }
        Self::round(Q::widen(x))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Fp64;
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Fp32;
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Fp16;

macro_rules! native_precision {
    ($name:ident, $t:ty, $format:expr) => {
        impl Precision for $name {
            type Elem = $t;
            type Work = $t;
            const FORMAT: Format = $format;

            #[inline]
            fn round(x: f64) -> $t {
                x as $t
            }
            #[inline]
            fn widen(x: $t) -> f64 {
                x as f64
            }
            #[inline]
            fn load(x: $t) -> $t {
                x
            }
            #[inline]
            fn store(x: $t) -> $t {
                x
            }
            #[inline]
            fn wadd(a: $t, b: $t) -> $t {
                a + b
            }
            #[inline]
            fn wsub(a: $t, b: $t) -> $t {
                a - b
            }
            #[inline]
            fn wmul(a: $t, b: $t) -> $t {
                a * b
            }
            #[inline]
            fn wdiv(a: $t, b: $t) -> $t {
                a / b
            }
            #[inline]
            fn wneg(a: $t) -> $t {
                -a
            }
            #[inline]
            fn is_finite(x: $t) -> bool {
                x.is_finite()
            }
        }
    };
}

native_precision!(Fp64, f64, Format::Fp64);
native_precision!(Fp32, f32, Format::Fp32);

/// Rounds a binary32 value to the nearest binary16 value, ties to even,
/// keeping the result in binary32.
///
/// In the normal binary16 range the fraction is rounded on the bit pattern
/// (a carry into the exponent is correct, and a result reaching 2^16 becomes
/// infinity). Below 2^-14 the grid is uniform with spacing 2^-24, which is
/// exactly the binary32 spacing on [1/2, 1), so adding and subtracting 1/2
/// rounds onto it.
#[inline]
pub fn round_f32_to_half(x: f32) -> f32 {
    const MIN_NORMAL: u32 = 0x3880_0000;
    const TWO_POW_16: u32 = 0x4780_0000;
    const INF: u32 = 0x7f80_0000;
    let u = x.to_bits();
    let sign = u & 0x8000_0000;
    let a = u ^ sign;
    let r = if a >= INF {
        a
    } else if a >= MIN_NORMAL {
        let r = (a + 0xfff + ((a >> 13) & 1)) & !0x1fff;
        if r >= TWO_POW_16 {
            INF
        } else {
            r
        }
    } else {
        (f32::from_bits(a) + 0.5 - 0.5).to_bits()
    };
    f32::from_bits(r | sign)
}

/// Arithmetic is carried out in binary32 and rounded once to binary16. With
/// 24 >= 2 * 11 + 2 significand bits the intermediate rounding can never
/// change the final result, for normal and subnormal outputs alike, so this
/// matches rounding the exact result directly.
impl Precision for Fp16 {
    type Elem = Half;
    type Work = f32;
    const FORMAT: Format = Format::Fp16;

    #[inline]
    fn round(x: f64) -> Half {
        Half::from_f64(x)
    }
    #[inline]
    fn widen(x: Half) -> f64 {
        x.to_f64()
    }
    #[inline]
    fn load(x: Half) -> f32 {
        x.to_f32()
    }
    #[inline]
    fn store(x: f32) -> Half {
        Half(encode_half_grid(x))
    }
    #[inline]
    fn wadd(a: f32, b: f32) -> f32 {
        round_f32_to_half(a + b)
    }
    #[inline]
    fn wsub(a: f32, b: f32) -> f32 {
        round_f32_to_half(a - b)
    }
    #[inline]
    fn wmul(a: f32, b: f32) -> f32 {
        round_f32_to_half(a * b)
    }
    #[inline]
    fn wdiv(a: f32, b: f32) -> f32 {
        round_f32_to_half(a / b)
    }
    #[inline]
    fn wneg(a: f32) -> f32 {
        -a
    }
    #[inline]
    fn is_finite(x: Half) -> bool {
        x.is_finite()
    }
    #[inline]
    fn neg(a: Half) -> Half {
        Half(a.0 ^ 0x8000)
    }
}

/// A value carried in binary64 that is exactly representable in `format`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PScalar {
    value: f64,
    format: Format,
}

impl PScalar {
    pub fn value(self) -> f64 {
        self.value
    }

    pub fn format(self) -> Format {
        self.format
    }

    /// Bitwise identity, so that NaN compares equal to itself and `-0 != +0`.
    pub fn same_bits(self, other: PScalar) -> bool {
        self.format == other.format && self.value.to_bits() == other.value.to_bits()
    }
}

/// Rounds `x` to the nearest value of `format`, ties to even.
pub fn round_to(format: Format, x: f64) -> PScalar {
    let value = match format {
        Format::Fp64 => x,
        Format::Fp32 => x as f32 as f64,
        Format::Fp16 => Half::from_f64(x).to_f64(),
    };
    PScalar { value, format }
}

fn binary_op(format: Format, a: PScalar, b: PScalar, op: impl Fn(f64, f64) -> f64) -> PScalar {
    debug_assert_eq!(a.format, format);
    debug_assert_eq!(b.format, format);
    match format {
        Format::Fp64 => PScalar { value: op(a.value, b.value), format },
        // 53 >= 2 * 24 + 2, so binary32 is also safe to round through binary64.
        Format::Fp32 | Format::Fp16 => round_to(format, op(a.value, b.value)),
    }
}

pub fn p_add(format: Format, a: PScalar, b: PScalar) -> PScalar {
    binary_op(format, a, b, |x, y| x + y)
}

pub fn p_sub(format: Format, a: PScalar, b: PScalar) -> PScalar {
    binary_op(format, a, b, |x, y| x - y)
}

pub fn p_mul(format: Format, a: PScalar, b: PScalar) -> PScalar {
    binary_op(format, a, b, |x, y| x * y)
}

pub fn p_div(format: Format, a: PScalar, b: PScalar) -> PScalar {
    binary_op(format, a, b, |x, y| x / y)
}
