//! NIST P-192 (secp192r1) as a `primeorder` curve.
//!
//! Point arithmetic, encoding and scalar multiplication come from
//! `primeorder`; this crate supplies the two prime fields.

#![no_std]
#![forbid(unsafe_code)]
#![allow(deprecated)]

mod field;
mod mont;
mod scalar;

pub use elliptic_curve;
pub use scalar::Scalar;

use elliptic_curve::{
    bigint::U192 as Uint, consts::U24, CurveArithmetic, FieldBytesEncoding, PrimeCurveArithmetic,
};
use field::FieldElement;
use primeorder::{point_arithmetic, PrimeCurveParams};

const ORDER_HEX: &str = "ffffffffffffffffffffffff99def836146bc9b1b4d22831";

#[derive(Copy, Clone, Debug, Default, Eq, PartialEq, PartialOrd, Ord)]
pub struct NistP192;

impl elliptic_curve::Curve for NistP192 {
    type FieldBytesSize = U24;
    type Uint = Uint;

    const ORDER: Uint = Uint::from_be_hex(ORDER_HEX);
}

impl elliptic_curve::PrimeCurve for NistP192 {}

impl elliptic_curve::point::PointCompression for NistP192 {
    const COMPRESS_POINTS: bool = false;
}

impl FieldBytesEncoding<NistP192> for Uint {}

pub type FieldBytes = elliptic_curve::FieldBytes<NistP192>;
pub type AffinePoint = primeorder::AffinePoint<NistP192>;
pub type ProjectivePoint = primeorder::ProjectivePoint<NistP192>;

impl CurveArithmetic for NistP192 {
    type AffinePoint = AffinePoint;
    type ProjectivePoint = ProjectivePoint;
    type Scalar = Scalar;
}

impl PrimeCurveArithmetic for NistP192 {
    type CurveGroup = ProjectivePoint;
}

impl PrimeCurveParams for NistP192 {
    type FieldElement = FieldElement;
    type PointArithmetic = point_arithmetic::EquationAIsMinusThree;

    const EQUATION_A: FieldElement = FieldElement::from_u64(3).neg();
    const EQUATION_B: FieldElement = FieldElement::from_hex("64210519e59c80e70fa7e9ab72243049feb8deecc146b9b1");
    const GENERATOR: (FieldElement, FieldElement) = (
        FieldElement::from_hex("188da80eb03090f67cbf20eb43a18800f4ff0afd82ff1012"),
        FieldElement::from_hex("07192b95ffc8da78631011ed6b24cdd573f977a11e794811"),
    );
}
