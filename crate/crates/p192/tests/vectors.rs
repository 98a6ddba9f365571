#![allow(deprecated)]

use elliptic_curve::group::{Group, GroupEncoding};
use elliptic_curve::ff::PrimeField;
use p192::{elliptic_curve, ProjectivePoint, Scalar};

// (k, compressed k*G), computed with textbook affine arithmetic
const VECTORS: [(&str, &str); 5] = [
    ("000000000000000000000000000000000000000000000001", "03188da80eb03090f67cbf20eb43a18800f4ff0afd82ff1012"),
    ("000000000000000000000000000000000000000000000002", "03dafebf5828783f2ad35534631588a3f629a70fb16982a888"),
    ("000000000000000000000000000000000000000000000003", "0376e32a2557599e6edcd283201fb2b9aadfd0d359cbb263da"),
    ("deadbeefcafebabe0123456789abcdef0011223344556677", "0277c569bfe2ba8f8f02951ee5e9bd5ceb38c71c93a6bd9ebd"),
    ("ffffffffffffffffffffffff99def836146bc9b1b4d22830", "02188da80eb03090f67cbf20eb43a18800f4ff0afd82ff1012"),
];

fn scalar(hex_str: &str) -> Scalar {
    let bytes = hex::decode(hex_str).unwrap();
    Scalar::from_repr(p192::FieldBytes::clone_from_slice(&bytes)).unwrap()
}

#[test]
fn scalar_multiples_of_the_generator() {
    for (k, expected) in VECTORS {
        let p = ProjectivePoint::generator() * scalar(k);
        assert_eq!(hex::encode(p.to_bytes()), expected, "k = {k}");
        let decoded = ProjectivePoint::from_bytes(&p.to_bytes()).unwrap();
        assert_eq!(decoded, p);
    }
}

#[test]
fn group_order_annihilates_the_generator() {
    let n_minus_1 = scalar(VECTORS[4].0);
    let g = ProjectivePoint::generator();
    assert!(bool::from((g * n_minus_1 + g).is_identity()));
    assert_eq!(n_minus_1 + Scalar::ONE, Scalar::ZERO);
}

#[test]
fn out_of_range_encodings_are_rejected() {
    let order = hex::decode("ffffffffffffffffffffffff99def836146bc9b1b4d22831").unwrap();
    assert!(bool::from(Scalar::from_repr(p192::FieldBytes::clone_from_slice(&order)).is_none()));
    let mut bad = hex::decode(VECTORS[1].1).unwrap();
    bad[0] = 0x04;
    assert!(bool::from(ProjectivePoint::from_bytes(bad.as_slice().try_into().unwrap()).is_none()));
    // x = 1 has no point on the curve
    let mut off = hex::decode("03000000000000000000000000000000000000000000000001").unwrap();
    assert!(bool::from(ProjectivePoint::from_bytes(off.as_slice().try_into().unwrap()).is_none()));
    off[0] = 0x02;
    assert!(bool::from(ProjectivePoint::from_bytes(off.as_slice().try_into().unwrap()).is_none()));
}

#[test]
fn scalar_arithmetic_is_consistent() {
    let mut seed = 0x1234_5678_9abc_def0_u64;
    let mut next = || {
        let mut b = [0u8; 24];
        for chunk in b.chunks_mut(8) {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            chunk.copy_from_slice(&seed.to_be_bytes());
        }
        b[0] &= 0x7f;
        Scalar::from_repr(b.into()).unwrap()
    };
    let g = ProjectivePoint::generator();
    for _ in 0..50 {
        let (a, b) = (next(), next());
        assert_eq!(g * (a + b), g * a + g * b);
        assert_eq!(g * (a * b), (g * a) * b);
        assert_eq!(a * a.invert().unwrap(), Scalar::ONE);
        assert_eq!(a.square().sqrt().unwrap().square(), a.square());
        assert_eq!(-(-a), a);
        assert_eq!(a - b + b, a);
    }
}
