//! Base field modulo p = 2^192 - 2^64 - 1.

use crate::mont::{mont_fns, Modulus, Words};
use crate::{FieldBytes, NistP192, Uint};
use core::{
    fmt::{self, Debug},
    iter::{Product, Sum},
    ops::{AddAssign, MulAssign, Neg, SubAssign},
};
use elliptic_curve::{
    ff::PrimeField,
    subtle::{Choice, ConstantTimeEq, CtOption},
};

const MODULUS_HEX: &str = "fffffffffffffffffffffffffffffffeffffffffffffffff";
const MODULUS: Uint = Uint::from_be_hex(MODULUS_HEX);
const MD: Modulus = Modulus::new(MODULUS);

const P_MINUS_2: [u64; 3] = [0xffff_ffff_ffff_fffd, 0xffff_ffff_ffff_fffe, 0xffff_ffff_ffff_ffff];
const P_PLUS_1_OVER_4: [u64; 3] = [0xc000_0000_0000_0000, 0xffff_ffff_ffff_ffff, 0x3fff_ffff_ffff_ffff];

mont_fns!(MD, fe_from_mont, fe_to_mont, fe_add, fe_sub, fe_mul, fe_neg, fe_square);

/// Element of the P-192 base field, in Montgomery form.
#[derive(Clone, Copy)]
pub struct FieldElement(pub(super) Uint);

primeorder::impl_mont_field_element!(
    NistP192,
    FieldElement,
    FieldBytes,
    Uint,
    MODULUS,
    Words,
    fe_from_mont,
    fe_to_mont,
    fe_add,
    fe_sub,
    fe_mul,
    fe_neg,
    fe_square
);

impl FieldElement {
    pub fn invert(&self) -> CtOption<Self> {
        CtOption::new(self.invert_unchecked(), !self.is_zero())
    }

    /// Fermat inversion; the exponent is public, so the ladder is fixed.
    const fn invert_unchecked(&self) -> Self {
        self.pow_vartime(&P_MINUS_2)
    }

    /// p = 3 mod 4, so a root is x^((p+1)/4) when one exists.
    pub fn sqrt(&self) -> CtOption<Self> {
        let r = self.pow_vartime(&P_PLUS_1_OVER_4);
        CtOption::new(r, r.square().ct_eq(self))
    }
}

impl PrimeField for FieldElement {
    type Repr = FieldBytes;

    const MODULUS: &'static str = MODULUS_HEX;
    const NUM_BITS: u32 = 192;
    const CAPACITY: u32 = 191;
    const TWO_INV: Self = Self::from_u64(2).invert_unchecked();
    const MULTIPLICATIVE_GENERATOR: Self = Self::from_u64(11);
    const S: u32 = 1;
    const ROOT_OF_UNITY: Self = Self::from_hex("fffffffffffffffffffffffffffffffefffffffffffffffe");
    const ROOT_OF_UNITY_INV: Self = Self::ROOT_OF_UNITY.invert_unchecked();
    const DELTA: Self = Self::from_u64(121);

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

impl Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldElement(0x{:X})", &self.to_canonical())
    }
}

#[cfg(test)]
mod tests {
    use super::FieldElement;
    use elliptic_curve::ff::PrimeField;
    use primeorder::{impl_field_identity_tests, impl_field_invert_tests, impl_field_sqrt_tests, impl_primefield_tests};

    const T: [u64; 3] = [0x7fff_ffff_ffff_ffff, 0xffff_ffff_ffff_ffff, 0x7fff_ffff_ffff_ffff];

    impl_field_identity_tests!(FieldElement);
    impl_field_invert_tests!(FieldElement);
    impl_field_sqrt_tests!(FieldElement);
    impl_primefield_tests!(FieldElement, T);
}
