//! Schnorr signatures over the protocol group, used by the enrollment server
//! to bind template components to a user identity.

use ff::Field;
use rand::{CryptoRng, RngCore};

use crate::group::{
    mul_g,
    decode_scalar, encode_element, encode_scalar, generator, hash_challenge, lincomb_vartime,
    random_nonzero_scalar, Challenge, Element, PrimeGroup, Scalar,
};
use crate::Error;

pub const TAG_SIG: &[u8] = b"helr/sig";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SigKeyPair<G: PrimeGroup> {
    signing_key: Scalar<G>,
    verification_key: Element<G>,
}

impl<G: PrimeGroup> SigKeyPair<G> {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let signing_key = random_nonzero_scalar::<G, _>(rng);
        Self {
            signing_key,
            verification_key: mul_g::<G>(&signing_key),
        }
    }

    pub fn from_signing_key(signing_key: Scalar<G>) -> Result<Self, Error> {
        if bool::from(signing_key.is_zero()) {
            return Err(Error::ZeroKey);
        }
        Ok(Self {
            signing_key,
            verification_key: mul_g::<G>(&signing_key),
        })
    }

    pub fn signing_key(&self) -> &Scalar<G> {
        &self.signing_key
    }

    pub fn verification_key(&self) -> &Element<G> {
        &self.verification_key
    }

    pub fn sign<R: RngCore + CryptoRng>(&self, message: &[u8], rng: &mut R) -> Signature<G> {
        sign(&self.signing_key, message, rng)
    }
}

/// `(e, z)` with `e = H(vk, g^k, msg)` and `z = k + e * sk`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature<G: PrimeGroup> {
    pub challenge: Challenge,
    pub response: Scalar<G>,
}

impl<G: PrimeGroup> Signature<G> {
    pub fn encoded_len() -> usize {
        Challenge::ENCODED_LEN + G::SCALAR_LEN
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.challenge.to_bytes().to_vec();
        out.extend_from_slice(&encode_scalar::<G>(&self.response));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, Error> {
        if bytes.len() != Self::encoded_len() {
            return Err(Error::Decode("signature length"));
        }
        let (c, z) = bytes.split_at(Challenge::ENCODED_LEN);
        Ok(Self {
            challenge: Challenge::from_bytes(c)?,
            response: decode_scalar::<G>(z)?,
        })
    }
}

fn challenge<G: PrimeGroup>(vk: &Element<G>, nonce_point: &Element<G>, message: &[u8]) -> Challenge {
    hash_challenge(
        TAG_SIG,
        [
            encode_element::<G>(vk).as_slice(),
            encode_element::<G>(nonce_point).as_slice(),
            message,
        ],
    )
}

pub fn sign<G: PrimeGroup, R: RngCore + CryptoRng>(
    sk: &Scalar<G>,
    message: &[u8],
    rng: &mut R,
) -> Signature<G> {
    let vk = mul_g::<G>(sk);
    let k = random_nonzero_scalar::<G, _>(rng);
    let e = challenge::<G>(&vk, &mul_g::<G>(&k), message);
    Signature {
        challenge: e,
        response: k + e.to_scalar::<G>() * sk,
    }
}

pub fn verify<G: PrimeGroup>(vk: &Element<G>, message: &[u8], sig: &Signature<G>) -> bool {
    let nonce_point =
        lincomb_vartime::<G>(&generator::<G>(), &sig.response, &-*vk, &sig.challenge.to_scalar::<G>());
    challenge::<G>(vk, &nonce_point, message) == sig.challenge
}

/// Appends `len (u32 BE) || bytes` to `out`.
pub(crate) fn push_framed(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(bytes);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::P224;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type G = P224;

    #[test]
    fn sign_verify_roundtrip_and_mutations() {
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let keys = SigKeyPair::<G>::generate(&mut rng);
        let other = SigKeyPair::<G>::generate(&mut rng);
        let msg = b"component 3 of user alice".to_vec();
        let sig = keys.sign(&msg, &mut rng);
        assert!(verify(keys.verification_key(), &msg, &sig));
        assert!(!verify(other.verification_key(), &msg, &sig));
        for bit in 0..msg.len() * 8 {
            let mut m = msg.clone();
            m[bit / 8] ^= 1 << (bit % 8);
            assert!(!verify(keys.verification_key(), &m, &sig));
        }
        let b = sig.to_bytes();
        assert_eq!(b.len(), Signature::<G>::encoded_len());
        assert_eq!(Signature::<G>::from_bytes(&b).unwrap(), sig);
    }

    #[test]
    fn mutated_response_never_verifies() {
        let mut rng = ChaCha20Rng::seed_from_u64(78);
        let keys = SigKeyPair::<G>::generate(&mut rng);
        let sig = keys.sign(b"m", &mut rng);
        for _ in 0..1000 {
            let mut s = sig;
            s.response += Scalar::<G>::random(&mut rng);
            assert!(!verify(keys.verification_key(), b"m", &s));
        }
    }
}
