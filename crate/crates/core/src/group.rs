//! Prime-order group abstraction.
//!
//! Every protocol in this crate is generic over [`PrimeGroup`]. The three
//! implementations map the supported security levels onto fixed NIST curves:
//!
//! | level | curve | order bits | element encoding |
//! |-------|-------|------------|------------------|
//! | 96    | P-192 | 192        | 25 bytes         |
//! | 112   | P-224 | 224        | 29 bytes         |
//! | 128   | P-256 | 256        | 33 bytes         |
//!
//! Elements are encoded as compressed SEC1 points; the identity is the
//! all-zero string of the same length. Scalars are fixed-length big-endian.

use std::collections::HashMap;
use std::fmt::{self, Debug};
use std::sync::OnceLock;

use ff::{Field, PrimeField};
use group::{Group, GroupEncoding};
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use subtle::{ConditionallySelectable, ConstantTimeEq};

use crate::Error;

/// Bit length of Fiat-Shamir and signature challenges.
pub const CHALLENGE_BITS: u32 = 128;

/// Largest window accepted by [`bounded_dlog`].
pub const MAX_DLOG_RANGE: u64 = 1 << 32;

/// Ranges narrower than this are solved by linear scan.
const LINEAR_SCAN_LIMIT: u64 = 1024;

/// Supported security strengths in bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SecurityLevel {
    Bits96,
    Bits112,
    Bits128,
}

impl SecurityLevel {
    pub const ALL: [SecurityLevel; 3] = [Self::Bits96, Self::Bits112, Self::Bits128];

    pub fn from_bits(bits: u32) -> Result<Self, Error> {
        match bits {
            96 => Ok(Self::Bits96),
            112 => Ok(Self::Bits112),
            128 => Ok(Self::Bits128),
            other => Err(Error::UnsupportedLevel(other)),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Self::Bits96 => 96,
            Self::Bits112 => 112,
            Self::Bits128 => 128,
        }
    }
}

impl fmt::Display for SecurityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits())
    }
}

/// Static description of the group used at one security level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupParams {
    pub level: SecurityLevel,
    pub curve_name: &'static str,
    pub order_bits: u32,
    pub encoding_len: usize,
    pub scalar_len: usize,
}

pub fn params_for_level(level: SecurityLevel) -> GroupParams {
    match level {
        SecurityLevel::Bits96 => P192::params(),
        SecurityLevel::Bits112 => P224::params(),
        SecurityLevel::Bits128 => P256::params(),
    }
}

/// A cyclic group of prime order together with its scalar field.
pub trait PrimeGroup: Copy + Debug + Send + Sync + 'static {
    type Scalar: PrimeField + Send + Sync;
    type Element: Group<Scalar = Self::Scalar> + GroupEncoding + ConditionallySelectable + Debug + Send + Sync;

    const LEVEL: SecurityLevel;
    const CURVE_NAME: &'static str;
    const ENCODING_LEN: usize;
    const SCALAR_LEN: usize;

    /// Shared table of generator multiples, built on first use.
    fn generator_table() -> &'static BaseTable<Self>;

    fn params() -> GroupParams {
        GroupParams {
            level: Self::LEVEL,
            curve_name: Self::CURVE_NAME,
            order_bits: Self::Scalar::NUM_BITS,
            encoding_len: Self::ENCODING_LEN,
            scalar_len: Self::SCALAR_LEN,
        }
    }
}

macro_rules! nist_group {
    ($name:ident, $krate:ident, $level:expr, $curve:literal, $enc:literal, $scalar:literal) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq)]
        pub struct $name;

        impl PrimeGroup for $name {
            type Scalar = $krate::Scalar;
            type Element = $krate::ProjectivePoint;

            const LEVEL: SecurityLevel = $level;
            const CURVE_NAME: &'static str = $curve;
            const ENCODING_LEN: usize = $enc;
            const SCALAR_LEN: usize = $scalar;

            fn generator_table() -> &'static BaseTable<Self> {
                static TABLE: OnceLock<BaseTable<$name>> = OnceLock::new();
                TABLE.get_or_init(|| BaseTable::new(&generator::<$name>()))
            }
        }
    };
}

nist_group!(P192, p192, SecurityLevel::Bits96, "P-192", 25, 24);
nist_group!(P224, p224, SecurityLevel::Bits112, "P-224", 29, 28);
nist_group!(P256, p256, SecurityLevel::Bits128, "P-256", 33, 32);

/// Runs `$body` with `$g` bound to the group type for a runtime level.
#[macro_export]
macro_rules! with_group {
    ($level:expr, $g:ident => $body:expr) => {
        match $level {
            $crate::group::SecurityLevel::Bits96 => {
                type $g = $crate::group::P192;
                $body
            }
            $crate::group::SecurityLevel::Bits112 => {
                type $g = $crate::group::P224;
                $body
            }
            $crate::group::SecurityLevel::Bits128 => {
                type $g = $crate::group::P256;
                $body
            }
        }
    };
}

pub type Scalar<G> = <G as PrimeGroup>::Scalar;
pub type Element<G> = <G as PrimeGroup>::Element;

pub fn generator<G: PrimeGroup>() -> Element<G> {
    Element::<G>::generator()
}

pub fn identity<G: PrimeGroup>() -> Element<G> {
    Element::<G>::identity()
}

pub fn random_scalar<G: PrimeGroup, R: RngCore + CryptoRng>(rng: &mut R) -> Scalar<G> {
    Scalar::<G>::random(rng)
}

/// Uniform over the nonzero scalars; used for blinding values and secret keys.
pub fn random_nonzero_scalar<G: PrimeGroup, R: RngCore + CryptoRng>(rng: &mut R) -> Scalar<G> {
    loop {
        let s = Scalar::<G>::random(&mut *rng);
        if !bool::from(s.is_zero()) {
            return s;
        }
    }
}

/// Embeds a signed integer as `m mod q`.
pub fn scalar_from_i64<G: PrimeGroup>(m: i64) -> Scalar<G> {
    let s = Scalar::<G>::from(m.unsigned_abs());
    if m < 0 {
        -s
    } else {
        s
    }
}

/// `g^m` for a signed exponent.
pub fn g_pow<G: PrimeGroup>(m: i64) -> Element<G> {
    mul_g::<G>(&scalar_from_i64::<G>(m))
}

/// `g * s` through the precomputed generator table. Constant time in `s`.
pub fn mul_g<G: PrimeGroup>(s: &Scalar<G>) -> Element<G> {
    G::generator_table().mul(s)
}

/// `j * 16^i * base` for every 4-bit window `i` of a scalar and `j < 16`, so
/// a multiplication costs one addition per window and no doublings.
pub struct BaseTable<G: PrimeGroup> {
    windows: Vec<[Element<G>; 16]>,
}

impl<G: PrimeGroup> BaseTable<G> {
    pub fn new(base: &Element<G>) -> Self {
        let count = 2 * Scalar::<G>::ZERO.to_repr().as_ref().len();
        let mut windows = Vec::with_capacity(count);
        let mut b = *base;
        for _ in 0..count {
            let mut t = [identity::<G>(); 16];
            for j in 1..16 {
                t[j] = t[j - 1] + b;
            }
            b = t[15] + b;
            windows.push(t);
        }
        Self { windows }
    }

    /// Every table entry is touched for every window; the scalar only drives
    /// constant-time selects.
    pub fn mul(&self, s: &Scalar<G>) -> Element<G> {
        let repr = s.to_repr();
        let bytes = repr.as_ref();
        let mut acc = identity::<G>();
        for (i, t) in self.windows.iter().enumerate() {
            let byte = bytes[bytes.len() - 1 - i / 2];
            let nibble = (byte >> (4 * (i % 2))) & 15;
            let mut pick = identity::<G>();
            for (j, entry) in t.iter().enumerate().skip(1) {
                pick.conditional_assign(entry, (j as u8).ct_eq(&nibble));
            }
            acc += pick;
        }
        acc
    }
}

/// `x * a + y * b` by interleaved 4-bit windows. Variable time: only for
/// public inputs such as verification equations.
pub fn lincomb_vartime<G: PrimeGroup>(
    x: &Element<G>,
    a: &Scalar<G>,
    y: &Element<G>,
    b: &Scalar<G>,
) -> Element<G> {
    let table = |p: &Element<G>| {
        let mut t = [identity::<G>(); 16];
        for i in 1..16 {
            t[i] = t[i - 1] + p;
        }
        t
    };
    let (tx, ty) = (table(x), table(y));
    let (ra, rb) = (a.to_repr(), b.to_repr());
    let mut acc = identity::<G>();
    let mut started = false;
    for (&ba, &bb) in ra.as_ref().iter().zip(rb.as_ref()) {
        for shift in [4, 0] {
            if started {
                for _ in 0..4 {
                    acc = acc.double();
                }
            }
            let (na, nb) = (((ba >> shift) & 15) as usize, ((bb >> shift) & 15) as usize);
            if na != 0 {
                acc += tx[na];
                started = true;
            }
            if nb != 0 {
                acc += ty[nb];
                started = true;
            }
        }
    }
    acc
}

/// `x * a`, variable time.
pub fn mul_vartime<G: PrimeGroup>(x: &Element<G>, a: &Scalar<G>) -> Element<G> {
    lincomb_vartime::<G>(x, a, &identity::<G>(), &Scalar::<G>::ZERO)
}

pub fn encode_element<G: PrimeGroup>(e: &Element<G>) -> Vec<u8> {
    let bytes = e.to_bytes();
    let bytes = bytes.as_ref();
    debug_assert_eq!(bytes.len(), G::ENCODING_LEN);
    bytes.to_vec()
}

pub fn decode_element<G: PrimeGroup>(bytes: &[u8]) -> Result<Element<G>, Error> {
    if bytes.len() != G::ENCODING_LEN {
        return Err(Error::Decode("element length"));
    }
    if bytes.iter().all(|&b| b == 0) {
        return Ok(identity::<G>());
    }
    let mut repr = <Element<G> as GroupEncoding>::Repr::default();
    repr.as_mut().copy_from_slice(bytes);
    let e: Option<Element<G>> = Element::<G>::from_bytes(&repr).into();
    let e = e.ok_or(Error::Decode("point not on curve"))?;
    // reject anything that does not re-encode to the same bytes
    if e.to_bytes().as_ref() != bytes {
        return Err(Error::Decode("non-canonical point"));
    }
    Ok(e)
}

pub fn encode_scalar<G: PrimeGroup>(s: &Scalar<G>) -> Vec<u8> {
    s.to_repr().as_ref().to_vec()
}

pub fn decode_scalar<G: PrimeGroup>(bytes: &[u8]) -> Result<Scalar<G>, Error> {
    if bytes.len() != G::SCALAR_LEN {
        return Err(Error::Decode("scalar length"));
    }
    let mut repr = <Scalar<G> as PrimeField>::Repr::default();
    repr.as_mut().copy_from_slice(bytes);
    Option::from(Scalar::<G>::from_repr(repr)).ok_or(Error::Decode("non-canonical scalar"))
}

/// A `t`-bit Fiat-Shamir or signature challenge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Challenge(pub u128);

impl Challenge {
    pub const ENCODED_LEN: usize = 16;

    pub fn to_scalar<G: PrimeGroup>(self) -> Scalar<G> {
        Scalar::<G>::from_u128(self.0)
    }

    pub fn to_bytes(self) -> [u8; 16] {
        self.0.to_be_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, Error> {
        let arr: [u8; 16] = bytes.try_into().map_err(|_| Error::Decode("challenge length"))?;
        Ok(Challenge(u128::from_be_bytes(arr)))
    }
}

/// Hash of a domain tag and a sequence of byte strings, truncated to
/// [`CHALLENGE_BITS`] bits. Every input is length-prefixed.
pub fn hash_challenge<I, B>(domain_tag: &[u8], inputs: I) -> Challenge
where
    I: IntoIterator<Item = B>,
    B: AsRef<[u8]>,
{
    let mut h = Sha256::new();
    h.update((domain_tag.len() as u32).to_be_bytes());
    h.update(domain_tag);
    for input in inputs {
        let input = input.as_ref();
        h.update((input.len() as u32).to_be_bytes());
        h.update(input);
    }
    let digest = h.finalize();
    let mut head = [0u8; 16];
    head.copy_from_slice(&digest[..16]);
    Challenge(u128::from_be_bytes(head))
}

/// Finds `m` in `[lo, hi]` with `base^m == target`.
pub fn bounded_dlog<G: PrimeGroup>(
    base: &Element<G>,
    target: &Element<G>,
    lo: i64,
    hi: i64,
) -> Result<i64, Error> {
    DlogTable::<G>::new(*base, lo, hi)?.solve(target)
}

/// Precomputed baby-step table for repeated dlogs over one window.
pub struct DlogTable<G: PrimeGroup> {
    base: Element<G>,
    lo: i64,
    hi: i64,
    /// `base^lo`, the starting point of every search.
    start: Element<G>,
    strategy: Strategy<G>,
}

enum Strategy<G: PrimeGroup> {
    Linear,
    BabyGiant {
        step: u64,
        baby: HashMap<Vec<u8>, u64>,
        giant: Element<G>,
    },
}

impl<G: PrimeGroup> DlogTable<G> {
    pub fn new(base: Element<G>, lo: i64, hi: i64) -> Result<Self, Error> {
        if hi < lo {
            return Err(Error::InvalidRange { lo, hi });
        }
        let width = (hi as i128 - lo as i128) as u128;
        if width > MAX_DLOG_RANGE as u128 {
            return Err(Error::InvalidRange { lo, hi });
        }
        let count = width as u64 + 1;
        let start = base * scalar_from_i64::<G>(lo);
        let strategy = if count < LINEAR_SCAN_LIMIT {
            Strategy::Linear
        } else {
            let step = (count as f64).sqrt().ceil() as u64;
            let mut baby = HashMap::with_capacity(step as usize);
            let mut acc = identity::<G>();
            for j in 0..step {
                baby.entry(encode_element::<G>(&acc)).or_insert(j);
                acc += base;
            }
            // acc == base^step here
            Strategy::BabyGiant {
                step,
                baby,
                giant: -acc,
            }
        };
        Ok(DlogTable {
            base,
            lo,
            hi,
            start,
            strategy,
        })
    }

    pub fn solve(&self, target: &Element<G>) -> Result<i64, Error> {
        let not_found = Error::NotInRange {
            lo: self.lo,
            hi: self.hi,
        };
        let count = (self.hi as i128 - self.lo as i128) as u64 + 1;
        match &self.strategy {
            Strategy::Linear => {
                let mut acc = self.start;
                for i in 0..count {
                    if acc == *target {
                        return Ok(self.lo + i as i64);
                    }
                    acc += self.base;
                }
                Err(not_found)
            }
            Strategy::BabyGiant { step, baby, giant } => {
                // target * base^-lo = base^(i*step + j)
                let mut gamma = *target - self.start;
                let giants = count.div_ceil(*step);
                for i in 0..giants {
                    if let Some(&j) = baby.get(&encode_element::<G>(&gamma)) {
                        let offset = i * step + j;
                        if offset < count {
                            return Ok(self.lo + offset as i64);
                        }
                    }
                    gamma += giant;
                }
                Err(not_found)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn levels_map_to_fixed_curves() {
        assert_eq!(params_for_level(SecurityLevel::Bits128).order_bits, 256);
        assert_eq!(params_for_level(SecurityLevel::Bits96).order_bits, 192);
        assert_eq!(params_for_level(SecurityLevel::Bits112).order_bits, 224);
        assert_eq!(params_for_level(SecurityLevel::Bits128).curve_name, "P-256");
        assert!(matches!(
            SecurityLevel::from_bits(80),
            Err(Error::UnsupportedLevel(80))
        ));
    }

    fn roundtrips<G: PrimeGroup>() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let id = identity::<G>();
        let enc = encode_element::<G>(&id);
        assert_eq!(enc, vec![0u8; G::ENCODING_LEN]);
        assert_eq!(decode_element::<G>(&enc).unwrap(), id);
        let g = generator::<G>();
        assert_eq!(decode_element::<G>(&encode_element::<G>(&g)).unwrap(), g);
        for _ in 0..20 {
            let e = g * random_scalar::<G, _>(&mut rng);
            let b = encode_element::<G>(&e);
            assert_eq!(b.len(), G::ENCODING_LEN);
            let d = decode_element::<G>(&b).unwrap();
            assert_eq!(d, e);
            assert_eq!(encode_element::<G>(&d), b);
            let s = random_scalar::<G, _>(&mut rng);
            assert_eq!(decode_scalar::<G>(&encode_scalar::<G>(&s)).unwrap(), s);
        }
    }

    #[test]
    fn encoding_roundtrips_all_levels() {
        roundtrips::<P192>();
        roundtrips::<P224>();
        roundtrips::<P256>();
    }

    fn lincomb_matches<G: PrimeGroup>() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let g = generator::<G>();
        for i in 0..50 {
            let x = g * random_scalar::<G, _>(&mut rng);
            let y = g * random_scalar::<G, _>(&mut rng);
            let a = random_scalar::<G, _>(&mut rng);
            let b = match i % 3 {
                0 => random_scalar::<G, _>(&mut rng),
                1 => Scalar::<G>::ZERO,
                _ => Challenge(rng.gen()).to_scalar::<G>(),
            };
            assert_eq!(lincomb_vartime::<G>(&x, &a, &y, &b), x * a + y * b);
        }
        assert_eq!(lincomb_vartime::<G>(&g, &Scalar::<G>::ZERO, &g, &Scalar::<G>::ZERO), identity::<G>());
        assert_eq!(lincomb_vartime::<G>(&g, &-Scalar::<G>::ONE, &g, &Scalar::<G>::ONE), identity::<G>());
    }

    fn base_table_matches<G: PrimeGroup>() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let g = generator::<G>();
        let mut scalars = vec![Scalar::<G>::ZERO, Scalar::<G>::ONE, -Scalar::<G>::ONE, scalar_from_i64::<G>(16)];
        scalars.extend((0..30).map(|_| random_scalar::<G, _>(&mut rng)));
        let h = g * random_scalar::<G, _>(&mut rng);
        let table = BaseTable::<G>::new(&h);
        for s in scalars {
            assert_eq!(mul_g::<G>(&s), g * s);
            assert_eq!(table.mul(&s), h * s);
            assert_eq!(mul_vartime::<G>(&h, &s), h * s);
        }
    }

    #[test]
    fn base_table_matches_naive_all_levels() {
        base_table_matches::<P192>();
        base_table_matches::<P224>();
        base_table_matches::<P256>();
    }

    #[test]
    fn lincomb_matches_naive_all_levels() {
        lincomb_matches::<P192>();
        lincomb_matches::<P224>();
        lincomb_matches::<P256>();
    }

    #[test]
    fn random_bytes_are_rejected_quickly() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let mut rejected = false;
        for _ in 0..64 {
            let mut b = [0u8; 33];
            rng.fill_bytes(&mut b);
            if decode_element::<P256>(&b).is_err() {
                rejected = true;
                break;
            }
        }
        assert!(rejected);
        assert!(decode_element::<P256>(&[2u8; 32]).is_err());
    }

    #[test]
    fn seeded_scalars_reproduce() {
        let a: Vec<_> = {
            let mut rng = ChaCha20Rng::seed_from_u64(3);
            (0..4).map(|_| random_scalar::<P256, _>(&mut rng)).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha20Rng::seed_from_u64(3);
            (0..4).map(|_| random_scalar::<P256, _>(&mut rng)).collect()
        };
        assert_eq!(a, b);
        let mut other = ChaCha20Rng::seed_from_u64(4);
        assert_ne!(a[0], random_scalar::<P256, _>(&mut other));
    }

    #[test]
    fn nonzero_scalar_never_zero() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            assert!(!bool::from(
                random_nonzero_scalar::<P192, _>(&mut rng).is_zero()
            ));
        }
    }

    #[test]
    fn dlog_examples() {
        let g = generator::<P256>();
        assert_eq!(bounded_dlog::<P256>(&g, &identity::<P256>(), -100, 100).unwrap(), 0);
        assert_eq!(bounded_dlog::<P256>(&g, &g_pow::<P256>(-53), -100, 100).unwrap(), -53);
        assert!(matches!(
            bounded_dlog::<P256>(&g, &g_pow::<P256>(500), -100, 100),
            Err(Error::NotInRange { .. })
        ));
    }

    #[test]
    fn dlog_exhaustive_small_window() {
        let g = generator::<P192>();
        let table = DlogTable::<P192>::new(g, -200, 200).unwrap();
        for m in -200..=200 {
            assert_eq!(table.solve(&g_pow::<P192>(m)).unwrap(), m);
        }
    }

    #[test]
    fn dlog_baby_giant_window() {
        let g = generator::<P256>();
        let table = DlogTable::<P256>::new(g, -5000, 7000).unwrap();
        for m in [-5000, -4999, -1, 0, 1, 1234, 6999, 7000] {
            assert_eq!(table.solve(&g_pow::<P256>(m)).unwrap(), m);
        }
        assert!(table.solve(&g_pow::<P256>(7001)).is_err());
        assert!(table.solve(&g_pow::<P256>(-5001)).is_err());
    }

    #[test]
    fn dlog_rejects_oversized_window() {
        let g = generator::<P256>();
        assert!(matches!(
            bounded_dlog::<P256>(&g, &g, 0, (1i64 << 32) + 1),
            Err(Error::InvalidRange { .. })
        ));
    }

    #[test]
    fn challenge_hash_properties() {
        let a = hash_challenge(b"helr/plain", [b"abc".as_slice(), b"def"]);
        assert_eq!(a, hash_challenge(b"helr/plain", [b"abc".as_slice(), b"def"]));
        assert_ne!(a, hash_challenge(b"helr/blind", [b"abc".as_slice(), b"def"]));
        // framing: moving a byte across the boundary changes the hash
        assert_ne!(a, hash_challenge(b"helr/plain", [b"abcd".as_slice(), b"ef"]));
    }

    #[test]
    fn challenge_hash_avalanche() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let mut x = [0u8; 40];
            rng.fill_bytes(&mut x);
            let mut y = x;
            let pos = (rng.next_u32() as usize) % x.len();
            y[pos] ^= 1 << (rng.next_u32() % 8);
            assert_ne!(hash_challenge(b"t", [x]), hash_challenge(b"t", [y]));
        }
    }

    #[test]
    fn challenge_scalar_fits_t_bits() {
        let c = hash_challenge(b"t", [b"x"]);
        let s = c.to_scalar::<P192>();
        let bytes = encode_scalar::<P192>(&s);
        // top 8 of 24 bytes stay zero for a 128-bit value
        assert!(bytes[..8].iter().all(|&b| b == 0));
        assert_eq!(Challenge::from_bytes(&c.to_bytes()).unwrap(), c);
    }
}
