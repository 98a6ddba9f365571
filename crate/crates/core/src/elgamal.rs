//! Additive (exponent-encoded) ElGamal and its (2,2)-threshold variant.
//!
//! `[m] = (g^r, g^m * k^r)`. Every encryption takes its randomness from the
//! caller so that two parties can derive byte-identical ciphertexts; the
//! `*_random` wrappers draw it from an rng.

use ff::Field;
use group::Group;
use rand::{CryptoRng, RngCore};

use crate::group::{
    g_pow, mul_g,
    decode_element, encode_element, generator, identity, random_nonzero_scalar, random_scalar,
    DlogTable, Element, PrimeGroup, Scalar,
};
use crate::Error;

/// One of the two online parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Party {
    Client,
    Server,
}

/// Which key decrypts a ciphertext. Bookkeeping only; never serialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KeyTag {
    Client,
    Server,
    Joint,
    PartialByServer,
    PartialByClient,
}

impl KeyTag {
    fn owner(party: Party) -> Self {
        match party {
            Party::Client => KeyTag::Client,
            Party::Server => KeyTag::Server,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyPair<G: PrimeGroup> {
    secret: Scalar<G>,
    public: Element<G>,
    party: Party,
}

impl<G: PrimeGroup> KeyPair<G> {
    pub fn generate<R: RngCore + CryptoRng>(party: Party, rng: &mut R) -> Self {
        let secret = random_nonzero_scalar::<G, _>(rng);
        Self {
            secret,
            public: mul_g::<G>(&secret),
            party,
        }
    }

    pub fn from_secret(party: Party, secret: Scalar<G>) -> Result<Self, Error> {
        if bool::from(secret.is_zero()) {
            return Err(Error::ZeroKey);
        }
        Ok(Self {
            secret,
            public: mul_g::<G>(&secret),
            party,
        })
    }

    pub fn secret(&self) -> &Scalar<G> {
        &self.secret
    }

    pub fn public(&self) -> &Element<G> {
        &self.public
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn encryption_key(&self) -> EncryptionKey<G> {
        EncryptionKey {
            element: self.public,
            tag: KeyTag::owner(self.party),
        }
    }
}

/// A public key together with the tag its ciphertexts carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncryptionKey<G: PrimeGroup> {
    pub element: Element<G>,
    pub tag: KeyTag,
}

impl<G: PrimeGroup> EncryptionKey<G> {
    pub fn new(element: Element<G>, tag: KeyTag) -> Self {
        Self { element, tag }
    }
}

/// `pk_joint = pk_client * pk_server`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JointPublicKey<G: PrimeGroup> {
    pub joint: Element<G>,
    pub client: Element<G>,
    pub server: Element<G>,
}

impl<G: PrimeGroup> JointPublicKey<G> {
    pub fn from_publics(client: Element<G>, server: Element<G>) -> Result<Self, Error> {
        if bool::from(client.is_identity()) || bool::from(server.is_identity()) {
            return Err(Error::ZeroKey);
        }
        let joint = client + server;
        if bool::from(joint.is_identity()) {
            return Err(Error::ZeroKey);
        }
        Ok(Self {
            joint,
            client,
            server,
        })
    }

    pub fn encryption_key(&self) -> EncryptionKey<G> {
        EncryptionKey {
            element: self.joint,
            tag: KeyTag::Joint,
        }
    }
}

pub fn joint_keygen<G: PrimeGroup>(
    client: &KeyPair<G>,
    server: &KeyPair<G>,
) -> Result<JointPublicKey<G>, Error> {
    JointPublicKey::from_publics(client.public, server.public)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ciphertext<G: PrimeGroup> {
    pub u: Element<G>,
    pub v: Element<G>,
    pub tag: KeyTag,
}

impl<G: PrimeGroup> Ciphertext<G> {
    pub const fn encoded_len() -> usize {
        2 * G::ENCODING_LEN
    }

    /// `encode(u) || encode(v)`; the key tag is not part of the encoding.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = encode_element::<G>(&self.u);
        out.extend_from_slice(&encode_element::<G>(&self.v));
        out
    }

    pub fn from_bytes(bytes: &[u8], tag: KeyTag) -> Result<Self, Error> {
        if bytes.len() != Self::encoded_len() {
            return Err(Error::Decode("ciphertext length"));
        }
        let (u, v) = bytes.split_at(G::ENCODING_LEN);
        Ok(Self {
            u: decode_element::<G>(u)?,
            v: decode_element::<G>(v)?,
            tag,
        })
    }

    /// The encryption of zero with zero randomness; neutral for [`add`].
    pub fn neutral(tag: KeyTag) -> Self {
        Self {
            u: identity::<G>(),
            v: identity::<G>(),
            tag,
        }
    }

    /// `v * u^-sk`, i.e. `g^m` when `sk` decrypts this ciphertext.
    pub fn unmask(&self, sk: &Scalar<G>) -> Element<G> {
        self.v - self.u * sk
    }
}

pub fn encrypt<G: PrimeGroup>(key: &EncryptionKey<G>, m: i64, r: &Scalar<G>) -> Ciphertext<G> {
    Ciphertext {
        u: mul_g::<G>(r),
        v: g_pow::<G>(m) + key.element * r,
        tag: key.tag,
    }
}

pub fn encrypt_random<G: PrimeGroup, R: RngCore + CryptoRng>(
    key: &EncryptionKey<G>,
    m: i64,
    rng: &mut R,
) -> Ciphertext<G> {
    encrypt(key, m, &random_scalar::<G, _>(rng))
}

pub fn decrypt<G: PrimeGroup>(
    sk: &Scalar<G>,
    c: &Ciphertext<G>,
    lo: i64,
    hi: i64,
) -> Result<i64, Error> {
    DlogTable::<G>::new(generator::<G>(), lo, hi)?.solve(&c.unmask(sk))
}

/// Decryption against a prebuilt dlog table, for repeated use over one window.
pub fn decrypt_with<G: PrimeGroup>(
    table: &DlogTable<G>,
    sk: &Scalar<G>,
    c: &Ciphertext<G>,
) -> Result<i64, Error> {
    table.solve(&c.unmask(sk))
}

/// True iff `c` decrypts to zero under `sk`. Never computes a dlog.
pub fn is_zero<G: PrimeGroup>(sk: &Scalar<G>, c: &Ciphertext<G>) -> bool {
    bool::from(c.unmask(sk).is_identity())
}

fn same_key<G: PrimeGroup>(a: &Ciphertext<G>, b: &Ciphertext<G>) -> Result<(), Error> {
    if a.tag != b.tag {
        return Err(Error::KeyTagMismatch(a.tag, b.tag));
    }
    Ok(())
}

/// `[m1] * [m2] = [m1 + m2]`.
pub fn add<G: PrimeGroup>(a: &Ciphertext<G>, b: &Ciphertext<G>) -> Result<Ciphertext<G>, Error> {
    same_key(a, b)?;
    Ok(Ciphertext {
        u: a.u + b.u,
        v: a.v + b.v,
        tag: a.tag,
    })
}

/// `[m1] * [m2]^-1 = [m1 - m2]`.
pub fn sub<G: PrimeGroup>(a: &Ciphertext<G>, b: &Ciphertext<G>) -> Result<Ciphertext<G>, Error> {
    same_key(a, b)?;
    Ok(Ciphertext {
        u: a.u - b.u,
        v: a.v - b.v,
        tag: a.tag,
    })
}

/// Homomorphic sum of a non-empty sequence, folded left to right.
pub fn sum<'a, G: PrimeGroup>(
    mut cts: impl Iterator<Item = &'a Ciphertext<G>>,
) -> Result<Ciphertext<G>, Error> {
    let first = *cts.next().ok_or(Error::InsufficientData("empty ciphertext sum"))?;
    cts.try_fold(first, |acc, c| add(&acc, c))
}

/// `[m]^rd = [rd * m]`.
pub fn blind<G: PrimeGroup>(c: &Ciphertext<G>, rd: &Scalar<G>) -> Result<Ciphertext<G>, Error> {
    if bool::from(rd.is_zero()) {
        return Err(Error::ZeroBlinder);
    }
    Ok(Ciphertext {
        u: c.u * rd,
        v: c.v * rd,
        tag: c.tag,
    })
}

/// `[m] * [0]` with randomness `r0`.
pub fn rerandomize<G: PrimeGroup>(
    key: &EncryptionKey<G>,
    c: &Ciphertext<G>,
    r0: &Scalar<G>,
) -> Ciphertext<G> {
    let zero = encrypt(key, 0, r0);
    Ciphertext {
        u: c.u + zero.u,
        v: c.v + zero.v,
        tag: c.tag,
    }
}

/// Removes one key share from a joint ciphertext. The result is an ordinary
/// ciphertext under the other party's key.
pub fn partial_decrypt<G: PrimeGroup>(kp: &KeyPair<G>, c: &Ciphertext<G>) -> Ciphertext<G> {
    Ciphertext {
        u: c.u,
        v: c.unmask(&kp.secret),
        tag: match kp.party {
            Party::Client => KeyTag::PartialByClient,
            Party::Server => KeyTag::PartialByServer,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{P192, P256};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type G = P256;

    fn setup() -> (ChaCha20Rng, KeyPair<G>) {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let kp = KeyPair::<G>::generate(Party::Client, &mut rng);
        (rng, kp)
    }

    #[test]
    fn encrypt_decrypt_examples() {
        let (mut rng, kp) = setup();
        let key = kp.encryption_key();
        let r = random_scalar::<G, _>(&mut rng);
        assert_eq!(decrypt(kp.secret(), &encrypt(&key, 0, &r), -10, 10).unwrap(), 0);
        assert_eq!(decrypt(kp.secret(), &encrypt(&key, 14, &r), -100, 100).unwrap(), 14);
        let r2 = random_scalar::<G, _>(&mut rng);
        assert_ne!(encrypt(&key, 5, &r), encrypt(&key, 5, &r2));
        assert_eq!(encrypt(&key, 5, &r).to_bytes(), encrypt(&key, 5, &r).to_bytes());
    }

    #[test]
    fn wrong_key_falls_outside_window() {
        let (mut rng, kp) = setup();
        let key = kp.encryption_key();
        for _ in 0..50 {
            let wrong = random_nonzero_scalar::<G, _>(&mut rng);
            let c = encrypt_random(&key, 5, &mut rng);
            assert!(matches!(
                decrypt(&wrong, &c, -100, 100),
                Err(Error::NotInRange { .. })
            ));
        }
    }

    #[test]
    fn homomorphic_ops() {
        let (mut rng, kp) = setup();
        let key = kp.encryption_key();
        let sk = kp.secret();
        let c2 = encrypt_random(&key, 2, &mut rng);
        let c3 = encrypt_random(&key, 3, &mut rng);
        assert_eq!(decrypt(sk, &add(&c2, &c3).unwrap(), -10, 10).unwrap(), 5);
        let c5 = encrypt_random(&key, 5, &mut rng);
        let c5b = encrypt_random(&key, 5, &mut rng);
        assert!(is_zero(sk, &sub(&c5, &c5b).unwrap()));
        let z = sub(&c5, &c5).unwrap();
        assert_eq!(z, Ciphertext::neutral(KeyTag::Client));
        assert!(is_zero(sk, &z));
        let zero = encrypt_random(&key, 0, &mut rng);
        assert_eq!(decrypt(sk, &add(&c3, &zero).unwrap(), -10, 10).unwrap(), 3);
    }

    #[test]
    fn key_tag_mismatch_rejected() {
        let (mut rng, kp) = setup();
        let other = KeyPair::<G>::generate(Party::Server, &mut rng);
        let a = encrypt_random(&kp.encryption_key(), 1, &mut rng);
        let b = encrypt_random(&other.encryption_key(), 1, &mut rng);
        assert_eq!(
            add(&a, &b),
            Err(Error::KeyTagMismatch(KeyTag::Client, KeyTag::Server))
        );
        assert!(sub(&a, &b).is_err());
    }

    #[test]
    fn blinding() {
        let (mut rng, kp) = setup();
        let key = kp.encryption_key();
        let sk = kp.secret();
        let c0 = encrypt_random(&key, 0, &mut rng);
        let c1 = encrypt_random(&key, 1, &mut rng);
        for _ in 0..100 {
            let a = random_nonzero_scalar::<G, _>(&mut rng);
            assert!(is_zero(sk, &blind(&c0, &a).unwrap()));
            assert!(!is_zero(sk, &blind(&c1, &a).unwrap()));
            assert!(decrypt(sk, &blind(&c1, &a).unwrap(), -1000, 1000).is_err());
        }
        let a = random_nonzero_scalar::<G, _>(&mut rng);
        let inv = a.invert().unwrap();
        assert_eq!(blind(&blind(&c1, &a).unwrap(), &inv).unwrap(), c1);
        assert_eq!(blind(&c1, &Scalar::<G>::ZERO), Err(Error::ZeroBlinder));
    }

    #[test]
    fn rerandomize_keeps_plaintext() {
        let (mut rng, kp) = setup();
        let key = kp.encryption_key();
        let c = encrypt_random(&key, -7, &mut rng);
        let r0 = random_nonzero_scalar::<G, _>(&mut rng);
        let d = rerandomize(&key, &c, &r0);
        assert_ne!(d.u, c.u);
        assert_ne!(d.v, c.v);
        assert_eq!(decrypt(kp.secret(), &d, -10, 10).unwrap(), -7);
    }

    #[test]
    fn threshold_roundtrip() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let clt = KeyPair::<P192>::generate(Party::Client, &mut rng);
        let ser = KeyPair::<P192>::generate(Party::Server, &mut rng);
        let joint = joint_keygen(&clt, &ser).unwrap();
        assert_eq!(joint.joint, clt.public() + ser.public());
        let key = joint.encryption_key();
        for m in [-100, -1, 0, 1, 37, 100] {
            let c = encrypt_random(&key, m, &mut rng);
            // a single share is not enough
            assert!(decrypt(clt.secret(), &c, -100, 100).is_err());
            let by_ser = partial_decrypt(&ser, &c);
            assert_eq!(by_ser.tag, KeyTag::PartialByServer);
            assert_eq!(decrypt(clt.secret(), &by_ser, -100, 100).unwrap(), m);
            let by_clt = partial_decrypt(&clt, &c);
            assert_eq!(decrypt(ser.secret(), &by_clt, -100, 100).unwrap(), m);
            // either order yields the same final element
            assert_eq!(
                partial_decrypt(&clt, &by_ser).v,
                partial_decrypt(&ser, &by_clt).v
            );
        }
        let z = encrypt_random(&key, 0, &mut rng);
        assert!(is_zero(clt.secret(), &partial_decrypt(&ser, &z)));
    }

    #[test]
    fn degenerate_keys_rejected() {
        assert_eq!(
            KeyPair::<G>::from_secret(Party::Client, Scalar::<G>::ZERO),
            Err(Error::ZeroKey)
        );
        let one = KeyPair::<G>::from_secret(Party::Client, Scalar::<G>::ONE).unwrap();
        let minus = KeyPair::<G>::from_secret(Party::Server, -Scalar::<G>::ONE).unwrap();
        assert_eq!(joint_keygen(&one, &minus), Err(Error::ZeroKey));
    }

    #[test]
    fn encoding_roundtrip() {
        let (mut rng, kp) = setup();
        let c = encrypt_random(&kp.encryption_key(), 3, &mut rng);
        let b = c.to_bytes();
        assert_eq!(b.len(), Ciphertext::<G>::encoded_len());
        assert_eq!(Ciphertext::<G>::from_bytes(&b, KeyTag::Client).unwrap(), c);
        assert!(Ciphertext::<G>::from_bytes(&b[1..], KeyTag::Client).is_err());
    }

    #[test]
    fn sum_folds_in_order() {
        let (mut rng, kp) = setup();
        let key = kp.encryption_key();
        let cts: Vec<_> = (1..=4).map(|m| encrypt_random(&key, m, &mut rng)).collect();
        assert_eq!(decrypt(kp.secret(), &sum(cts.iter()).unwrap(), 0, 20).unwrap(), 10);
        assert!(sum::<G>(std::iter::empty()).is_err());
    }
}
