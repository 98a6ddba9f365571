//! Semi-honest verification: the server returns the encrypted template, the
//! client sums the selected scores, and the server answers with a blinded,
//! shuffled, partially decrypted comparison vector.
//!
//! Secure only against parties that follow the protocol; see
//! [`crate::attacks`].

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha20Rng;

use super::{abort, preamble, AbortReason, Decision, Endpoint, Outcome};
use crate::classifier::{LookupTableSet, QuantizedVector};
use crate::elgamal::{
    blind, encrypt, is_zero, partial_decrypt, rerandomize, sub, sum, Ciphertext, JointPublicKey,
    KeyPair,
};
use crate::group::{random_nonzero_scalar, random_scalar, Element, PrimeGroup, Scalar};
use crate::store::TemplateStore;
use crate::wire::Message;
use crate::{par_map, Error};

/// One encrypted lookup-table row per feature, under the joint key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateSh<G: PrimeGroup> {
    pub uid: Vec<u8>,
    pub rows: Vec<Vec<Ciphertext<G>>>,
}

impl<G: PrimeGroup> TemplateSh<G> {
    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    fn check_shape(&self, k: usize, n: usize) -> Result<(), Error> {
        if self.k() != k {
            return Err(Error::LengthMismatch { expected: k, got: self.k() });
        }
        match self.rows.iter().find(|r| r.len() != n) {
            Some(r) => Err(Error::LengthMismatch { expected: n, got: r.len() }),
            None => Ok(()),
        }
    }
}

/// What the verification server keeps per user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShServerRecord<G: PrimeGroup> {
    pub template: TemplateSh<G>,
    pub client_public: Element<G>,
}

/// What the client device keeps.
#[derive(Clone, Debug)]
pub struct ShClientCredential<G: PrimeGroup> {
    pub uid: Vec<u8>,
    pub keypair: KeyPair<G>,
    pub joint: JointPublicKey<G>,
}

pub fn enroll_sh<G: PrimeGroup>(
    uid: &[u8],
    features: &[f64],
    tables: &LookupTableSet,
    joint: &JointPublicKey<G>,
    rng: &mut ChaCha20Rng,
) -> Result<TemplateSh<G>, Error> {
    let q = tables.quantize(features)?;
    let key = joint.encryption_key();
    let n = tables.n();
    let randomness: Vec<Scalar<G>> = (0..tables.k() * n).map(|_| random_scalar::<G, _>(rng)).collect();
    let rows = (0..tables.k())
        .map(|i| {
            let row = tables.row(i, q.0[i]);
            let r = &randomness[i * n..(i + 1) * n];
            let cells: Vec<(i32, Scalar<G>)> = row.iter().copied().zip(r.iter().copied()).collect();
            par_map(&cells, |(s, r)| encrypt(&key, *s as i64, r))
        })
        .collect();
    Ok(TemplateSh { uid: uid.to_vec(), rows })
}

/// Sum of the cells selected by the probe, re-randomized.
pub fn client_score_sh<G: PrimeGroup>(
    template: &TemplateSh<G>,
    probe: &QuantizedVector,
    joint: &JointPublicKey<G>,
    rng: &mut ChaCha20Rng,
) -> Result<Ciphertext<G>, Error> {
    template.check_shape(probe.len(), template.n())?;
    let n = template.n();
    if let Some(&value) = probe.0.iter().find(|&&b| b >= n) {
        return Err(Error::OutOfRange { value, n });
    }
    let s = sum(template.rows.iter().zip(&probe.0).map(|(row, &b)| &row[b]))?;
    Ok(rerandomize(&joint.encryption_key(), &s, &random_scalar::<G, _>(rng)))
}

/// `a_t * (S - t)` for every `t` in `[theta, s_max]`, shuffled, with the
/// server's key share removed.
pub fn server_compare_sh<G: PrimeGroup>(
    score: &Ciphertext<G>,
    theta: i32,
    s_max: i32,
    joint: &JointPublicKey<G>,
    server: &KeyPair<G>,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<Ciphertext<G>>, Error> {
    if theta > s_max {
        return Err(Error::InvalidParameter(format!("theta {theta} > S_max {s_max}")));
    }
    let key = joint.encryption_key();
    let mut work: Vec<(i64, Scalar<G>, Scalar<G>)> = (theta..=s_max)
        .map(|t| (t as i64, random_scalar::<G, _>(rng), random_nonzero_scalar::<G, _>(rng)))
        .collect();
    work.shuffle(rng);
    par_map(&work, |(t, r, a)| {
        let c = blind(&sub(score, &encrypt(&key, *t, r))?, a)?;
        Ok(partial_decrypt(server, &c))
    })
    .into_iter()
    .collect()
}

/// Scans the whole vector unless `early_exit` is set.
pub fn client_decide_sh<G: PrimeGroup>(
    vector: &[Ciphertext<G>],
    sk: &Scalar<G>,
    early_exit: bool,
) -> Decision {
    if early_exit {
        return Decision::from_bool(vector.iter().any(|c| is_zero(sk, c)));
    }
    let zeros = vector.iter().filter(|c| is_zero(sk, c)).count();
    Decision::from_bool(zeros > 0)
}

/// Server side of enrollment.
pub fn accept_enrollment_sh<G: PrimeGroup>(
    store: &dyn TemplateStore<ShServerRecord<G>>,
    tables: &LookupTableSet,
    template: TemplateSh<G>,
    client_public: Element<G>,
) -> Result<(), Error> {
    template.check_shape(tables.k(), tables.n())?;
    let uid = template.uid.clone();
    store.put(&uid, ShServerRecord { template, client_public })
}

enum ClientPhase {
    AwaitTemplate,
    AwaitVector,
    Done,
}

pub struct ShClient<G: PrimeGroup> {
    credential: ShClientCredential<G>,
    tables: Arc<LookupTableSet>,
    probe: QuantizedVector,
    rng: ChaCha20Rng,
    early_exit: bool,
    phase: ClientPhase,
    outcome: Outcome,
}

impl<G: PrimeGroup> ShClient<G> {
    pub fn new(
        credential: ShClientCredential<G>,
        tables: Arc<LookupTableSet>,
        probe: &[f64],
        rng: ChaCha20Rng,
    ) -> Result<Self, Error> {
        let probe = tables.quantize(probe)?;
        Ok(Self::with_quantized(credential, tables, probe, rng))
    }

    pub fn with_quantized(
        credential: ShClientCredential<G>,
        tables: Arc<LookupTableSet>,
        probe: QuantizedVector,
        rng: ChaCha20Rng,
    ) -> Self {
        Self {
            credential,
            tables,
            probe,
            rng,
            early_exit: false,
            phase: ClientPhase::AwaitTemplate,
            outcome: Outcome::Pending,
        }
    }

    /// Stop scanning at the first zero.
    pub fn early_exit(mut self, on: bool) -> Self {
        self.early_exit = on;
        self
    }
}

impl<G: PrimeGroup> Endpoint<G> for ShClient<G> {
    fn start(&mut self) -> Vec<Message<G>> {
        vec![Message::VerifyRequest { uid: self.credential.uid.clone() }]
    }

    fn on_message(&mut self, msg: Message<G>) -> Vec<Message<G>> {
        if let Some(out) = preamble(&mut self.outcome, &msg) {
            return out;
        }
        match (&self.phase, msg) {
            (ClientPhase::AwaitTemplate, Message::TemplateReply { rows }) => {
                let template = TemplateSh { uid: self.credential.uid.clone(), rows };
                if template.check_shape(self.tables.k(), self.tables.n()).is_err() {
                    return abort(&mut self.outcome, AbortReason::Shape);
                }
                match client_score_sh(&template, &self.probe, &self.credential.joint, &mut self.rng) {
                    Ok(s) => {
                        self.phase = ClientPhase::AwaitVector;
                        vec![Message::FinalScore(s)]
                    }
                    Err(_) => abort(&mut self.outcome, AbortReason::Shape),
                }
            }
            (ClientPhase::AwaitVector, Message::ComparisonVector(v)) => {
                if v.is_empty() {
                    return abort(&mut self.outcome, AbortReason::Shape);
                }
                let d = client_decide_sh(&v, self.credential.keypair.secret(), self.early_exit);
                self.phase = ClientPhase::Done;
                self.outcome = Outcome::Decided(d);
                Vec::new()
            }
            _ => abort(&mut self.outcome, AbortReason::UnexpectedMessage),
        }
    }

    fn outcome(&self) -> Outcome {
        self.outcome
    }
}

enum ServerPhase<G: PrimeGroup> {
    AwaitRequest,
    AwaitScore(JointPublicKey<G>),
    Done,
}

pub struct ShServer<G: PrimeGroup> {
    keypair: KeyPair<G>,
    tables: Arc<LookupTableSet>,
    store: Arc<dyn TemplateStore<ShServerRecord<G>>>,
    rng: ChaCha20Rng,
    phase: ServerPhase<G>,
    outcome: Outcome,
}

impl<G: PrimeGroup> ShServer<G> {
    pub fn new(
        keypair: KeyPair<G>,
        tables: Arc<LookupTableSet>,
        store: Arc<dyn TemplateStore<ShServerRecord<G>>>,
        rng: ChaCha20Rng,
    ) -> Self {
        Self {
            keypair,
            tables,
            store,
            rng,
            phase: ServerPhase::AwaitRequest,
            outcome: Outcome::Pending,
        }
    }
}

impl<G: PrimeGroup> Endpoint<G> for ShServer<G> {
    fn start(&mut self) -> Vec<Message<G>> {
        Vec::new()
    }

    fn on_message(&mut self, msg: Message<G>) -> Vec<Message<G>> {
        if let Some(out) = preamble(&mut self.outcome, &msg) {
            return out;
        }
        match (&self.phase, msg) {
            (ServerPhase::AwaitRequest, Message::VerifyRequest { uid }) => {
                let record = match self.store.get(&uid) {
                    Ok(Some(r)) => r,
                    _ => return abort(&mut self.outcome, AbortReason::UnknownUser),
                };
                if record.template.check_shape(self.tables.k(), self.tables.n()).is_err() {
                    return abort(&mut self.outcome, AbortReason::Shape);
                }
                let joint = match JointPublicKey::from_publics(record.client_public, *self.keypair.public()) {
                    Ok(j) => j,
                    Err(_) => return abort(&mut self.outcome, AbortReason::Shape),
                };
                self.phase = ServerPhase::AwaitScore(joint);
                vec![Message::TemplateReply { rows: record.template.rows }]
            }
            (ServerPhase::AwaitScore(joint), Message::FinalScore(s)) => {
                let joint = *joint;
                let (theta, s_max) = (self.tables.theta(), self.tables.s_max());
                match server_compare_sh(&s, theta, s_max, &joint, &self.keypair, &mut self.rng) {
                    Ok(v) => {
                        self.phase = ServerPhase::Done;
                        self.outcome = Outcome::Completed;
                        vec![Message::ComparisonVector(v)]
                    }
                    Err(_) => abort(&mut self.outcome, AbortReason::Shape),
                }
            }
            _ => abort(&mut self.outcome, AbortReason::UnexpectedMessage),
        }
    }

    fn outcome(&self) -> Outcome {
        self.outcome
    }
}
