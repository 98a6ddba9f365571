//! Scalar field modulo the P-192 group order.

use crate::mont::{mont_fns, Modulus, Words};
use crate::{FieldBytes, FieldBytesEncoding, NistP192, Uint, ORDER_HEX};
use core::{
    fmt::{self, Debug},
    iter::{Product, Sum},
    ops::{AddAssign, MulAssign, Neg, Shr, ShrAssign, SubAssign},
};
use elliptic_curve::{
    bigint::Limb,
    ff::{helpers::sqrt_tonelli_shanks, PrimeField},
    ops::{Invert, Reduce},
    scalar::{FromUintUnchecked, IsHigh},
    subtle::{Choice, ConditionallySelectable, ConstantTimeEq, ConstantTimeGreater, CtOption},
    Curve as _, Error, Result, ScalarPrimitive,
};

const MD: Modulus = Modulus::new(NistP192::ORDER);

const N_MINUS_2: [u64; 3] = [0x146b_c9b1_b4d2_282f, 0xffff_ffff_99de_f836, 0xffff_ffff_ffff_ffff];
const T_MINUS_1_OVER_2: [u64; 3] = [0xb0a3_5e4d_8da6_9141, 0xffff_ffff_fcce_f7c1, 0x07ff_ffff_ffff_ffff];

mont_fns!(MD, sc_from_mont, sc_to_mont, sc_add, sc_sub, sc_mul, sc_neg, sc_square);

/// Integer modulo the order of the P-192 group, in Montgomery form.
#[derive(Clone, Copy, PartialOrd, Ord)]
pub struct Scalar(Uint);

primeorder::impl_mont_field_element!(
    NistP192,
    Scalar,
    FieldBytes,
    Uint,
    NistP192::ORDER,
    Words,
    sc_from_mont,
    sc_to_mont,
    sc_add,
    sc_sub,
    sc_mul,
    sc_neg,
    sc_square
);

impl Scalar {
    pub fn invert(&self) -> CtOption<Self> {
        CtOption::new(self.invert_unchecked(), !self.is_zero())
    }

    const fn invert_unchecked(&self) -> Self {
        self.pow_vartime(&N_MINUS_2)
    }

    pub fn sqrt(&self) -> CtOption<Self> {
        sqrt_tonelli_shanks(self, T_MINUS_1_OVER_2)
    }

    pub const fn shr_vartime(&self, shift: usize) -> Scalar {
        Self::from_uint_unchecked(self.to_canonical().shr_vartime(shift))
    }
}

impl AsRef<Scalar> for Scalar {
    fn as_ref(&self) -> &Scalar {
        self
    }
}

impl FromUintUnchecked for Scalar {
    type Uint = Uint;

    fn from_uint_unchecked(uint: Self::Uint) -> Self {
        Self::from_uint_unchecked(uint)
    }
}

impl Invert for Scalar {
    type Output = CtOption<Self>;

    fn invert(&self) -> CtOption<Self> {
        self.invert()
    }
}

impl IsHigh for Scalar {
    fn is_high(&self) -> Choice {
        const MODULUS_SHR1: Uint = NistP192::ORDER.shr_vartime(1);
        self.to_canonical().ct_gt(&MODULUS_SHR1)
    }
}

impl Shr<usize> for Scalar {
    type Output = Self;

    fn shr(self, rhs: usize) -> Self::Output {
        self.shr_vartime(rhs)
    }
}

impl Shr<usize> for &Scalar {
    type Output = Scalar;

    fn shr(self, rhs: usize) -> Self::Output {
        self.shr_vartime(rhs)
    }
}

impl ShrAssign<usize> for Scalar {
    fn shr_assign(&mut self, rhs: usize) {
        *self = *self >> rhs;
    }
}

impl PrimeField for Scalar {
    type Repr = FieldBytes;

    const MODULUS: &'static str = ORDER_HEX;
    const NUM_BITS: u32 = 192;
    const CAPACITY: u32 = 191;
    const TWO_INV: Self = Self::from_u64(2).invert_unchecked();
    const MULTIPLICATIVE_GENERATOR: Self = Self::from_u64(3);
    const S: u32 = 4;
    const ROOT_OF_UNITY: Self = Self::from_hex("5c1fbd92d24b720fc3eee409e29f6b56b4db11947185a1bc");
    const ROOT_OF_UNITY_INV: Self = Self::ROOT_OF_UNITY.invert_unchecked();
    const DELTA: Self = Self::from_u64(0x0290_d741);

    fn from_repr(bytes: FieldBytes) -> CtOption<Self> {
        Self::from_bytes(&bytes)
    }

    fn to_repr(&self) -> FieldBytes {
        self.to_bytes()
    }

    fn is_odd(&self) -> Choice {
        self.is_odd()
    }
}

impl Reduce<Uint> for Scalar {
    type Bytes = FieldBytes;

    fn reduce(w: Uint) -> Self {
        let (r, underflow) = w.sbb(&NistP192::ORDER, Limb::ZERO);
        let underflow = Choice::from((underflow.0 >> (Limb::BITS - 1)) as u8);
        Self::from_uint_unchecked(Uint::conditional_select(&w, &r, !underflow))
    }

    fn reduce_bytes(bytes: &FieldBytes) -> Self {
        Self::reduce(<Uint as FieldBytesEncoding<NistP192>>::decode_field_bytes(bytes))
    }
}

impl From<ScalarPrimitive<NistP192>> for Scalar {
    fn from(w: ScalarPrimitive<NistP192>) -> Self {
        Scalar::from(&w)
    }
}

impl From<&ScalarPrimitive<NistP192>> for Scalar {
    fn from(w: &ScalarPrimitive<NistP192>) -> Scalar {
        Scalar::from_uint_unchecked(*w.as_uint())
    }
}

impl From<Scalar> for ScalarPrimitive<NistP192> {
    fn from(scalar: Scalar) -> ScalarPrimitive<NistP192> {
        ScalarPrimitive::from(&scalar)
    }
}

impl From<&Scalar> for ScalarPrimitive<NistP192> {
    fn from(scalar: &Scalar) -> ScalarPrimitive<NistP192> {
        ScalarPrimitive::new(scalar.into()).unwrap()
    }
}

impl From<Scalar> for FieldBytes {
    fn from(scalar: Scalar) -> Self {
        scalar.to_repr()
    }
}

impl From<&Scalar> for FieldBytes {
    fn from(scalar: &Scalar) -> Self {
        scalar.to_repr()
    }
}

impl From<Scalar> for Uint {
    fn from(scalar: Scalar) -> Uint {
        Uint::from(&scalar)
    }
}

impl From<&Scalar> for Uint {
    fn from(scalar: &Scalar) -> Uint {
        scalar.to_canonical()
    }
}

impl TryFrom<Uint> for Scalar {
    type Error = Error;

    fn try_from(w: Uint) -> Result<Self> {
        Option::from(Self::from_uint(w)).ok_or(Error)
    }
}

impl Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar(0x{:X})", &self.to_canonical())
    }
}

#[cfg(test)]
mod tests {
    use super::Scalar;
    use elliptic_curve::ff::PrimeField;
    use primeorder::{impl_field_identity_tests, impl_field_invert_tests, impl_field_sqrt_tests, impl_primefield_tests};

    const T: [u64; 3] = [0x6146_bc9b_1b4d_2283, 0xffff_ffff_f99d_ef83, 0x0fff_ffff_ffff_ffff];

    impl_field_identity_tests!(Scalar);
    impl_field_invert_tests!(Scalar);
    impl_field_sqrt_tests!(Scalar);
    impl_primefield_tests!(Scalar, T);
}
