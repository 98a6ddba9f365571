//! Keyed small-domain permutations over `[0, n-1]`.
//!
//! Each permutation is a Fisher-Yates shuffle driven by ChaCha20 seeded with
//! `SHA-256(master || len(uid) || uid || index)`, so a client holding the
//! master key can re-derive `pi_i` for any user and feature.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub const PRP_KEY_LEN: usize = 32;

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct PrpKey(pub [u8; PRP_KEY_LEN]);

impl std::fmt::Debug for PrpKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("PrpKey(..)")
    }
}

impl PrpKey {
    pub fn generate<R: rand::RngCore + rand::CryptoRng>(rng: &mut R) -> Self {
        let mut k = [0u8; PRP_KEY_LEN];
        rng.fill_bytes(&mut k);
        Self(k)
    }

    /// `pi` for feature `index` of user `uid`.
    pub fn permutation(&self, uid: &[u8], index: u32, n: usize) -> Permutation {
        let mut h = Sha256::new();
        h.update(self.0);
        h.update((uid.len() as u32).to_be_bytes());
        h.update(uid);
        h.update(index.to_be_bytes());
        let mut rng = ChaCha20Rng::from_seed(h.finalize().into());
        let mut forward: Vec<u32> = (0..n as u32).collect();
        forward.shuffle(&mut rng);
        Permutation::from_forward(forward)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<u32>,
    inverse: Vec<u32>,
}

impl Permutation {
    /// Panics if `forward` is not a permutation of `0..len`.
    pub fn from_forward(forward: Vec<u32>) -> Self {
        let mut inverse = vec![u32::MAX; forward.len()];
        for (i, &p) in forward.iter().enumerate() {
            assert!(inverse[p as usize] == u32::MAX, "not a permutation");
            inverse[p as usize] = i as u32;
        }
        Self { forward, inverse }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn apply(&self, x: usize) -> u32 {
        self.forward[x]
    }

    pub fn invert(&self, y: u32) -> usize {
        self.inverse[y as usize] as usize
    }
}
