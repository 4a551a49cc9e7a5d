//! Exact non-negative dyadic rationals `k / 2^N`.

use core::cmp::Ordering;
use core::fmt;
use core::ops::Add;

/// The value `numerator * 2^(-scale_exp)`.
///
/// Equality and ordering compare values, so `1/2` equals `2/4`. Addition and
/// comparison never round; addition reports overflow instead of wrapping.
#[derive(Clone, Copy, Debug)]
pub struct DyadicValue {
    numerator: u128,
    scale_exp: u32,
}

impl DyadicValue {
    pub const ZERO: DyadicValue = DyadicValue {
        numerator: 0,
        scale_exp: 0,
    };
    pub const ONE: DyadicValue = DyadicValue {
        numerator: 1,
        scale_exp: 0,
    };

    pub const fn new(numerator: u128, scale_exp: u32) -> Self {
        DyadicValue {
            numerator,
            scale_exp,
        }
    }

    /// `2^(-exp)`.
    pub const fn pow2_neg(exp: u32) -> Self {
        DyadicValue {
            numerator: 1,
            scale_exp: exp,
        }
    }

    #[inline]
    pub const fn numerator(self) -> u128 {
        self.numerator
    }

    #[inline]
    pub const fn scale_exp(self) -> u32 {
        self.scale_exp
    }

    pub const fn is_zero(self) -> bool {
        self.numerator == 0
    }

    /// Same value written over `2^scale_exp`, if that is exact and fits.
    pub fn rescale(self, scale_exp: u32) -> Option<Self> {
        if scale_exp >= self.scale_exp {
            let shift = scale_exp - self.scale_exp;
            let numerator = shl_checked(self.numerator, shift)?;
            Some(DyadicValue::new(numerator, scale_exp))
        } else {
            let shift = self.scale_exp - scale_exp;
            if shift >= 128 {
                return (self.numerator == 0).then_some(DyadicValue::new(0, scale_exp));
            }
            if self.numerator & ((1u128 << shift) - 1) != 0 {
                return None;
            }
            Some(DyadicValue::new(self.numerator >> shift, scale_exp))
        }
    }

    /// Lowest-terms form: odd numerator, or zero over `2^0`.
    pub fn reduced(self) -> Self {
        if self.numerator == 0 {
            return DyadicValue::ZERO;
        }
        let tz = self.numerator.trailing_zeros().min(self.scale_exp);
        DyadicValue::new(self.numerator >> tz, self.scale_exp - tz)
    }

    pub fn checked_add(self, other: Self) -> Option<Self> {
        let scale = self.scale_exp.max(other.scale_exp);
        let a = self.rescale(scale)?;
        let b = other.rescale(scale)?;
        Some(DyadicValue::new(a.numerator.checked_add(b.numerator)?, scale))
    }

    pub fn to_f64(self) -> f64 {
        scale_by_pow2_neg(self.numerator as f64, self.scale_exp)
    }

    /// The exact value of a finite non-negative float, if it fits in `u128`.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() || x < 0.0 {
            return None;
        }
        if x == 0.0 {
            return Some(DyadicValue::ZERO);
        }
        let bits = x.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exp) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        if exp >= 0 {
            let numerator = shl_checked(mantissa as u128, exp as u32)?;
            Some(DyadicValue::new(numerator, 0))
        } else {
            Some(DyadicValue::new(mantissa as u128, exp.unsigned_abs()).reduced())
        }
    }
}

fn shl_checked(x: u128, shift: u32) -> Option<u128> {
    if x == 0 {
        return Some(0);
    }
    if shift >= 128 || x.leading_zeros() < shift {
        return None;
    }
    Some(x << shift)
}

/// `x * 2^(-exp)`, exact whenever the result is a normal float.
pub(crate) fn scale_by_pow2_neg(mut x: f64, mut exp: u32) -> f64 {
    // 2^-60, exactly representable
    const STEP: f64 = 1.0 / (1u64 << 60) as f64;
    while exp > 60 {
        x *= STEP;
        exp -= 60;
    }
    x / (1u64 << exp) as f64
}

impl PartialEq for DyadicValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for DyadicValue {}

impl Ord for DyadicValue {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.scale_exp == other.scale_exp {
            return self.numerator.cmp(&other.numerator);
        }
        // Lift the coarser one to the finer scale; if it does not fit it is
        // necessarily the larger (unless zero).
        if self.scale_exp < other.scale_exp {
            match shl_checked(self.numerator, other.scale_exp - self.scale_exp) {
                Some(lifted) => lifted.cmp(&other.numerator),
                None => Ordering::Greater,
            }
        } else {
            match shl_checked(other.numerator, self.scale_exp - other.scale_exp) {
                Some(lifted) => self.numerator.cmp(&lifted),
                None => Ordering::Less,
            }
        }
    }
}

impl PartialOrd for DyadicValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for DyadicValue {
    type Output = DyadicValue;

    /// Panics on overflow; use [`DyadicValue::checked_add`] to handle it.
    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).expect("dyadic addition overflowed u128")
    }
}

impl Default for DyadicValue {
    fn default() -> Self {
        DyadicValue::ZERO
    }
}

impl fmt::Display for DyadicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.reduced();
        if r.scale_exp == 0 {
            write!(f, "{}", r.numerator)
        } else {
            write!(f, "{}/2^{}", r.numerator, r.scale_exp)
        }
    }
}
