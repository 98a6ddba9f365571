//! On-disk layout of a store directory:
//!
//! ```text
//! server.key           level (1 byte) || ElGamal secret || signing secret
//! sh/, mal/            server-side records, one file per user
//! client/sh/, client/mal/
//!                      client credentials (kept beside the server state so a
//!                      single directory can drive both ends)
//! ref/<uid hex>.feat   reference features of synthetically enrolled users
//! ```

use std::path::{Path, PathBuf};

use helr::elgamal::{KeyPair, Party};
use helr::group::{decode_scalar, encode_scalar, PrimeGroup, SecurityLevel};
use helr::protocol::malicious::{EnrollmentServer, MalClientCredential, MalServerRecord};
use helr::protocol::semi_honest::{ShClientCredential, ShServerRecord};
use helr::signature::SigKeyPair;
use helr::store::FileStore;
use helr::Error;
use rand_chacha::ChaCha20Rng;

pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl AsRef<Path>) -> Self {
        Self { root: root.as_ref().to_path_buf() }
    }

    pub fn server_key(&self) -> PathBuf {
        self.root.join("server.key")
    }

    pub fn reference(&self, uid: &[u8]) -> PathBuf {
        self.root.join("ref").join(format!("{}.feat", hex::encode(uid)))
    }

    pub fn sh_records<G: PrimeGroup>(&self) -> Result<FileStore<ShServerRecord<G>>, Error> {
        FileStore::open(self.root.join("sh"))
    }

    pub fn mal_records<G: PrimeGroup>(&self) -> Result<FileStore<MalServerRecord<G>>, Error> {
        FileStore::open(self.root.join("mal"))
    }

    pub fn sh_credentials<G: PrimeGroup>(&self) -> Result<FileStore<ShClientCredential<G>>, Error> {
        FileStore::open(self.root.join("client").join("sh"))
    }

    pub fn mal_credentials<G: PrimeGroup>(&self) -> Result<FileStore<MalClientCredential<G>>, Error> {
        FileStore::open(self.root.join("client").join("mal"))
    }
}

pub struct ServerKeys<G: PrimeGroup> {
    pub elgamal: KeyPair<G>,
    pub enrollment: EnrollmentServer<G>,
}

impl<G: PrimeGroup> ServerKeys<G> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![G::LEVEL.bits().div_ceil(8) as u8];
        out.extend(encode_scalar::<G>(self.elgamal.secret()));
        out.extend(encode_scalar::<G>(self.enrollment.keys().signing_key()));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, Error> {
        let n = G::SCALAR_LEN;
        if bytes.len() != 1 + 2 * n {
            return Err(Error::Decode("server key length"));
        }
        if bytes[0] as u32 * 8 != G::LEVEL.bits() {
            return Err(Error::UnsupportedLevel(bytes[0] as u32 * 8));
        }
        let sk = decode_scalar::<G>(&bytes[1..1 + n])?;
        let sig = decode_scalar::<G>(&bytes[1 + n..])?;
        Ok(Self {
            elgamal: KeyPair::from_secret(Party::Server, sk)?,
            enrollment: EnrollmentServer::from_keys(SigKeyPair::from_signing_key(sig)?),
        })
    }

    pub fn load(layout: &Layout) -> Result<Self, Error> {
        Self::from_bytes(&std::fs::read(layout.server_key())?)
    }

    /// Loads the server keys, generating and saving them on first use.
    pub fn load_or_create(layout: &Layout, rng: &mut ChaCha20Rng) -> Result<Self, Error> {
        match std::fs::read(layout.server_key()) {
            Ok(bytes) => Self::from_bytes(&bytes),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                let keys = Self {
                    elgamal: KeyPair::generate(Party::Server, rng),
                    enrollment: EnrollmentServer::generate(rng),
                };
                if let Some(dir) = layout.server_key().parent() {
                    std::fs::create_dir_all(dir)?;
                }
                std::fs::write(layout.server_key(), keys.to_bytes())?;
                Ok(keys)
            }
            Err(e) => Err(e.into()),
        }
    }
}

/// Level recorded in an existing store, if any.
pub fn stored_level(layout: &Layout) -> Result<Option<SecurityLevel>, Error> {
    match std::fs::read(layout.server_key()) {
        Ok(bytes) if !bytes.is_empty() => SecurityLevel::from_bits(bytes[0] as u32 * 8).map(Some),
        Ok(_) => Err(Error::Decode("empty server key")),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use helr::group::P256;
    use rand::SeedableRng;

    #[test]
    fn server_keys_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let layout = Layout::new(dir.path());
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = ServerKeys::<P256>::load_or_create(&layout, &mut rng).unwrap();
        let b = ServerKeys::<P256>::load_or_create(&layout, &mut rng).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_eq!(stored_level(&layout).unwrap(), Some(SecurityLevel::Bits128));
    }
}
