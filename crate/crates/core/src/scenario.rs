//! A complete deployment in one process: tables, server keys, enrolled users
//! and ready-made endpoints. Used by the attack scripts, benchmarks and demos.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::classifier::{synth_probe_for, FeatureModel, LookupTableSet, QuantizedVector};
use crate::elgamal::{JointPublicKey, KeyPair, Party};
use crate::group::PrimeGroup;
use crate::protocol::malicious::{
    enroll_user, EnrollmentServer, MalClient, MalClientCredential, MalServer, MalServerRecord,
};
use crate::protocol::semi_honest::{
    accept_enrollment_sh, enroll_sh, ShClient, ShClientCredential, ShServer, ShServerRecord,
};
use crate::protocol::Protocol;
use crate::store::{MemoryStore, TemplateStore};
use crate::transport::{run_in_memory, SessionError, SessionResult};
use crate::Error;

pub struct User<G: PrimeGroup> {
    pub uid: Vec<u8>,
    pub reference: Vec<f64>,
    pub sh: Option<ShClientCredential<G>>,
    pub mal: Option<MalClientCredential<G>>,
}

pub struct Scenario<G: PrimeGroup> {
    pub tables: Arc<LookupTableSet>,
    pub model: FeatureModel,
    pub server: KeyPair<G>,
    pub enrollment: EnrollmentServer<G>,
    pub sh_store: Arc<MemoryStore<ShServerRecord<G>>>,
    pub mal_store: Arc<MemoryStore<MalServerRecord<G>>>,
    pub users: Vec<User<G>>,
}

/// Seeds a fresh ChaCha20 stream from a parent rng.
pub fn child_rng<R: Rng>(rng: &mut R) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(rng.gen())
}

impl<G: PrimeGroup> Scenario<G> {
    pub fn new(tables: LookupTableSet, model: FeatureModel, rng: &mut ChaCha20Rng) -> Result<Self, Error> {
        if model.k() != tables.k() {
            return Err(Error::LengthMismatch { expected: tables.k(), got: model.k() });
        }
        Ok(Self {
            tables: Arc::new(tables),
            model,
            server: KeyPair::generate(Party::Server, rng),
            enrollment: EnrollmentServer::generate(rng),
            sh_store: Arc::new(MemoryStore::new()),
            mal_store: Arc::new(MemoryStore::new()),
            users: Vec::new(),
        })
    }

    /// A reference sample drawn from the model's marginal.
    pub fn random_features(&self, rng: &mut ChaCha20Rng) -> Vec<f64> {
        (0..self.model.k()).map(|_| rng.sample(StandardNormal)).collect()
    }

    /// Enrolls a user for the given protocols and returns its index.
    pub fn enroll(
        &mut self,
        uid: &[u8],
        reference: Vec<f64>,
        protocols: &[Protocol],
        rng: &mut ChaCha20Rng,
    ) -> Result<usize, Error> {
        let mut user = User { uid: uid.to_vec(), reference, sh: None, mal: None };
        if protocols.contains(&Protocol::SemiHonest) {
            let kp = KeyPair::<G>::generate(Party::Client, rng);
            let joint = JointPublicKey::from_publics(*kp.public(), *self.server.public())?;
            let template = enroll_sh(uid, &user.reference, &self.tables, &joint, rng)?;
            accept_enrollment_sh(&*self.sh_store, &self.tables, template, *kp.public())?;
            user.sh = Some(ShClientCredential { uid: uid.to_vec(), keypair: kp, joint });
        }
        if protocols.contains(&Protocol::Malicious) {
            let (record, credential) = enroll_user(
                uid,
                &user.reference,
                &self.tables,
                *self.server.public(),
                &self.enrollment,
                rng,
            )?;
            self.mal_store.put(uid, record)?;
            user.mal = Some(credential);
        }
        self.users.push(user);
        Ok(self.users.len() - 1)
    }

    pub fn quantize(&self, features: &[f64]) -> Result<QuantizedVector, Error> {
        self.tables.quantize(features)
    }

    /// Plaintext score of a probe against a user's reference.
    pub fn plaintext_score(&self, user: usize, probe: &QuantizedVector) -> Result<i64, Error> {
        let reference = self.quantize(&self.users[user].reference)?;
        self.tables.score(&reference, probe)
    }

    /// What the encrypted protocols decide: `theta <= S <= S_max`.
    pub fn expected_match(&self, score: i64) -> bool {
        self.tables.decide(score) && score <= self.tables.s_max() as i64
    }

    /// A fresh genuine sample for `user`.
    pub fn genuine_sample(&self, user: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
        synth_probe_for(&self.model, &self.users[user].reference, rng)
    }

    /// A quantized probe whose plaintext decision is `want_match`, found by
    /// rejection sampling from genuine (for matches) or independent samples.
    pub fn probe_with_decision(
        &self,
        user: usize,
        want_match: bool,
        rng: &mut ChaCha20Rng,
    ) -> Result<QuantizedVector, Error> {
        for _ in 0..10_000 {
            let f = if want_match {
                self.genuine_sample(user, rng)
            } else {
                self.random_features(rng)
            };
            let q = self.quantize(&f)?;
            if self.expected_match(self.plaintext_score(user, &q)?) == want_match {
                return Ok(q);
            }
        }
        if want_match {
            let q = self.quantize(&self.users[user].reference)?;
            if self.expected_match(self.plaintext_score(user, &q)?) {
                return Ok(q);
            }
        }
        Err(Error::InsufficientData("no probe with the requested decision"))
    }

    fn credential_sh(&self, user: usize) -> Result<ShClientCredential<G>, Error> {
        self.users[user].sh.clone().ok_or(Error::InvalidParameter("user not enrolled for sh".into()))
    }

    fn credential_mal(&self, user: usize) -> Result<MalClientCredential<G>, Error> {
        self.users[user].mal.clone().ok_or(Error::InvalidParameter("user not enrolled for mal".into()))
    }

    pub fn sh_client(&self, user: usize, probe: QuantizedVector, rng: ChaCha20Rng) -> Result<ShClient<G>, Error> {
        Ok(ShClient::with_quantized(self.credential_sh(user)?, self.tables.clone(), probe, rng))
    }

    pub fn sh_server(&self, rng: ChaCha20Rng) -> ShServer<G> {
        ShServer::new(self.server.clone(), self.tables.clone(), self.sh_store.clone(), rng)
    }

    pub fn mal_client(&self, user: usize, probe: QuantizedVector, rng: ChaCha20Rng) -> Result<MalClient<G>, Error> {
        Ok(MalClient::with_quantized(self.credential_mal(user)?, self.tables.clone(), probe, rng))
    }

    pub fn mal_server(&self, rng: ChaCha20Rng) -> MalServer<G> {
        MalServer::new(self.server.clone(), self.tables.clone(), self.mal_store.clone(), rng)
    }

    /// One honest in-memory session.
    pub fn run(
        &self,
        protocol: Protocol,
        user: usize,
        probe: &QuantizedVector,
        rng: &mut ChaCha20Rng,
    ) -> Result<Result<SessionResult, SessionError>, Error> {
        let (crng, srng) = (child_rng(rng), child_rng(rng));
        Ok(match protocol {
            Protocol::SemiHonest => {
                let mut c = self.sh_client(user, probe.clone(), crng)?;
                let mut s = self.sh_server(srng);
                run_in_memory::<G, _, _>(&mut c, &mut s)
            }
            Protocol::Malicious => {
                let mut c = self.mal_client(user, probe.clone(), crng)?;
                let mut s = self.mal_server(srng);
                run_in_memory::<G, _, _>(&mut c, &mut s)
            }
        })
    }
}
