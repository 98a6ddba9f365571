//! Verification secure against malicious parties.
//!
//! Enrollment is run by a trusted enrollment server that signs every template
//! component and publishes a shuffled encrypted threshold vector. Online
//! verification takes four steps:
//!
//! 1. client → server: user id.
//! 2. client → server: encrypted quantized probe `[P]` under the client's
//!    probe key, the requested component indexes `R_i = pi_i(f_i)`, and a
//!    proof of plaintext knowledge for every `[P_i]`.
//! 3. server → client: first component halves `(r, [j], sigma)`; the client
//!    checks `sigma` and proves `[P_i] - [j_i]` decrypts to zero.
//! 4. server → client: second halves `([j], [[s]], alpha)`, then the blinded
//!    and partially decrypted comparison vector with proofs. Both parties
//!    derive `[[S]]` and `[[C]]` deterministically from the same inputs.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha20Rng;

use super::{abort, preamble, AbortReason, Decision, Endpoint, Outcome};
use crate::classifier::{LookupTableSet, QuantizedVector};
use crate::elgamal::{
    blind, encrypt, is_zero, partial_decrypt, sub, sum, Ciphertext, JointPublicKey, KeyPair, KeyTag,
    Party,
};
use crate::group::{random_nonzero_scalar, random_scalar, scalar_from_i64, Element, PrimeGroup, Scalar};
use crate::prp::PrpKey;
use crate::sigma::{and_compose, verify_and, AndProof, Statement, Witness};
use crate::signature::{push_framed, verify, SigKeyPair, Signature};
use crate::store::TemplateStore;
use crate::wire::Message;
use crate::{par_map, Error};

/// One signed template component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Component<G: PrimeGroup> {
    pub index: u32,
    /// `[j]` under the client's probe key.
    pub col: Ciphertext<G>,
    /// `[[s_{f,j}]]` under the joint key.
    pub score: Ciphertext<G>,
    pub sigma: Signature<G>,
    pub alpha: Signature<G>,
}

/// Per feature, `n` components sorted by index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateMal<G: PrimeGroup> {
    pub uid: Vec<u8>,
    pub features: Vec<Vec<Component<G>>>,
}

impl<G: PrimeGroup> TemplateMal<G> {
    pub fn k(&self) -> usize {
        self.features.len()
    }

    pub fn n(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    fn has_shape(&self, k: usize, n: usize) -> bool {
        self.k() == k && self.features.iter().all(|f| f.len() == n)
    }

    fn lookup(&self, feature: usize, index: u32) -> Option<&Component<G>> {
        let comps = self.features.get(feature)?;
        comps
            .binary_search_by_key(&index, |c| c.index)
            .ok()
            .map(|p| &comps[p])
    }
}

/// Joint-key encryptions of `theta..=s_max` in an order only the enrollment
/// server ever knew.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdVector<G: PrimeGroup>(pub Vec<Ciphertext<G>>);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FirstHalf<G: PrimeGroup> {
    pub index: u32,
    pub col: Ciphertext<G>,
    pub sigma: Signature<G>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SecondHalf<G: PrimeGroup> {
    pub col: Ciphertext<G>,
    pub score: Ciphertext<G>,
    pub alpha: Signature<G>,
}

/// A component as built by the client before signing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnsignedComponent<G: PrimeGroup> {
    pub index: u32,
    pub col: Ciphertext<G>,
    pub score: Ciphertext<G>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MalServerRecord<G: PrimeGroup> {
    pub template: TemplateMal<G>,
    pub theta: ThresholdVector<G>,
    pub client_public: Element<G>,
    pub probe_public: Element<G>,
}

/// The client's long-term secrets: its threshold key share, the separate
/// probe key, and the PRP master key.
#[derive(Clone, Debug)]
pub struct MalClientKeys<G: PrimeGroup> {
    pub threshold: KeyPair<G>,
    pub probe: KeyPair<G>,
    pub prp: PrpKey,
}

impl<G: PrimeGroup> MalClientKeys<G> {
    pub fn generate(rng: &mut ChaCha20Rng) -> Self {
        Self {
            threshold: KeyPair::generate(Party::Client, rng),
            probe: KeyPair::generate(Party::Client, rng),
            prp: PrpKey::generate(rng),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MalClientCredential<G: PrimeGroup> {
    pub uid: Vec<u8>,
    pub keys: MalClientKeys<G>,
    pub joint: JointPublicKey<G>,
    pub theta: ThresholdVector<G>,
    pub enrollment_key: Element<G>,
}

pub fn sigma_message<G: PrimeGroup>(index: u32, col: &Ciphertext<G>, uid: &[u8]) -> Vec<u8> {
    let mut m = Vec::new();
    push_framed(&mut m, &index.to_be_bytes());
    push_framed(&mut m, &col.to_bytes());
    push_framed(&mut m, uid);
    m
}

pub fn alpha_message<G: PrimeGroup>(col: &Ciphertext<G>, score: &Ciphertext<G>, uid: &[u8]) -> Vec<u8> {
    let mut m = Vec::new();
    push_framed(&mut m, &col.to_bytes());
    push_framed(&mut m, &score.to_bytes());
    push_framed(&mut m, uid);
    m
}

/// The client's share of enrollment: for every feature `i` and column `j`,
/// `(pi_i(j), [j], [[s_{f_i,j}]])`, sorted by index.
pub fn client_template<G: PrimeGroup>(
    uid: &[u8],
    features: &[f64],
    tables: &LookupTableSet,
    joint: &JointPublicKey<G>,
    keys: &MalClientKeys<G>,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<Vec<UnsignedComponent<G>>>, Error> {
    let q = tables.quantize(features)?;
    let n = tables.n();
    let joint_key = joint.encryption_key();
    let probe_key = keys.probe.encryption_key();
    let mut out = Vec::with_capacity(tables.k());
    for (i, &f) in q.0.iter().enumerate() {
        let pi = keys.prp.permutation(uid, i as u32, n);
        let row = tables.row(i, f);
        let work: Vec<(usize, Scalar<G>, Scalar<G>)> = (0..n)
            .map(|j| (j, random_scalar::<G, _>(rng), random_scalar::<G, _>(rng)))
            .collect();
        let mut comps = par_map(&work, |(j, r1, r2)| UnsignedComponent {
            index: pi.apply(*j),
            col: encrypt(&probe_key, *j as i64, r1),
            score: encrypt(&joint_key, row[*j] as i64, r2),
        });
        comps.sort_by_key(|c| c.index);
        out.push(comps);
    }
    Ok(out)
}

/// The trusted signer. Only used at enrollment time.
pub struct EnrollmentServer<G: PrimeGroup> {
    keys: SigKeyPair<G>,
}

impl<G: PrimeGroup> EnrollmentServer<G> {
    pub fn generate(rng: &mut ChaCha20Rng) -> Self {
        Self { keys: SigKeyPair::generate(rng) }
    }

    pub fn from_keys(keys: SigKeyPair<G>) -> Self {
        Self { keys }
    }

    pub fn verification_key(&self) -> Element<G> {
        *self.keys.verification_key()
    }

    pub fn keys(&self) -> &SigKeyPair<G> {
        &self.keys
    }

    /// Signs every component and builds the shuffled threshold vector.
    pub fn certify(
        &self,
        uid: &[u8],
        unsigned: Vec<Vec<UnsignedComponent<G>>>,
        tables: &LookupTableSet,
        joint: &JointPublicKey<G>,
        rng: &mut ChaCha20Rng,
    ) -> Result<(TemplateMal<G>, ThresholdVector<G>), Error> {
        if unsigned.len() != tables.k() {
            return Err(Error::LengthMismatch { expected: tables.k(), got: unsigned.len() });
        }
        let mut features = Vec::with_capacity(unsigned.len());
        for comps in unsigned {
            if comps.len() != tables.n() {
                return Err(Error::LengthMismatch { expected: tables.n(), got: comps.len() });
            }
            if comps.windows(2).any(|w| w[0].index >= w[1].index) {
                return Err(Error::InvalidParameter("components not sorted by index".into()));
            }
            features.push(
                comps
                    .into_iter()
                    .map(|c| Component {
                        index: c.index,
                        col: c.col,
                        score: c.score,
                        sigma: self.keys.sign(&sigma_message(c.index, &c.col, uid), rng),
                        alpha: self.keys.sign(&alpha_message(&c.col, &c.score, uid), rng),
                    })
                    .collect(),
            );
        }
        let key = joint.encryption_key();
        let mut theta: Vec<Ciphertext<G>> = (tables.theta()..=tables.s_max())
            .map(|t| encrypt(&key, t as i64, &random_scalar::<G, _>(rng)))
            .collect();
        theta.shuffle(rng);
        Ok((TemplateMal { uid: uid.to_vec(), features }, ThresholdVector(theta)))
    }
}

pub fn enroll_mal<G: PrimeGroup>(
    uid: &[u8],
    features: &[f64],
    tables: &LookupTableSet,
    joint: &JointPublicKey<G>,
    keys: &MalClientKeys<G>,
    enrollment: &EnrollmentServer<G>,
    rng: &mut ChaCha20Rng,
) -> Result<(TemplateMal<G>, ThresholdVector<G>), Error> {
    let unsigned = client_template(uid, features, tables, joint, keys, rng)?;
    enrollment.certify(uid, unsigned, tables, joint, rng)
}

/// Enrolls a user end to end and returns the server record and the client
/// credential.
pub fn enroll_user<G: PrimeGroup>(
    uid: &[u8],
    features: &[f64],
    tables: &LookupTableSet,
    server_public: Element<G>,
    enrollment: &EnrollmentServer<G>,
    rng: &mut ChaCha20Rng,
) -> Result<(MalServerRecord<G>, MalClientCredential<G>), Error> {
    let keys = MalClientKeys::<G>::generate(rng);
    let joint = JointPublicKey::from_publics(*keys.threshold.public(), server_public)?;
    let (template, theta) = enroll_mal(uid, features, tables, &joint, &keys, enrollment, rng)?;
    let record = MalServerRecord {
        template,
        theta: theta.clone(),
        client_public: *keys.threshold.public(),
        probe_public: *keys.probe.public(),
    };
    let credential = MalClientCredential {
        uid: uid.to_vec(),
        keys,
        joint,
        theta,
        enrollment_key: enrollment.verification_key(),
    };
    Ok((record, credential))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step2<G: PrimeGroup> {
    pub probe: Vec<Ciphertext<G>>,
    pub indexes: Vec<u32>,
    pub proof: AndProof<G>,
}

pub fn plain_statements<G: PrimeGroup>(key: &Element<G>, probe: &[Ciphertext<G>]) -> Vec<Statement<G>> {
    probe
        .iter()
        .map(|c| Statement::Plain { key: *key, u: c.u, v: c.v })
        .collect()
}

pub fn client_step2<G: PrimeGroup>(
    uid: &[u8],
    probe: &QuantizedVector,
    n: usize,
    keys: &MalClientKeys<G>,
    rng: &mut ChaCha20Rng,
) -> Result<Step2<G>, Error> {
    if let Some(&value) = probe.0.iter().find(|&&b| b >= n) {
        return Err(Error::OutOfRange { value, n });
    }
    let key = keys.probe.encryption_key();
    let mut cts = Vec::with_capacity(probe.len());
    let mut witnesses = Vec::with_capacity(probe.len());
    for &f in &probe.0 {
        let r = random_scalar::<G, _>(rng);
        cts.push(encrypt(&key, f as i64, &r));
        witnesses.push(Witness::Plain { m: scalar_from_i64::<G>(f as i64), r });
    }
    let indexes = probe
        .0
        .iter()
        .enumerate()
        .map(|(i, &f)| keys.prp.permutation(uid, i as u32, n).apply(f))
        .collect();
    let proof = and_compose(&plain_statements(keys.probe.public(), &cts), &witnesses, rng)?;
    Ok(Step2 { probe: cts, indexes, proof })
}

pub fn server_check_step2<G: PrimeGroup>(probe_public: &Element<G>, step2: &Step2<G>) -> bool {
    verify_and(&plain_statements(probe_public, &step2.probe), &step2.proof)
}

/// Locates the first half of the component with index `R_i` in every feature.
pub fn server_step3<G: PrimeGroup>(
    template: &TemplateMal<G>,
    indexes: &[u32],
) -> Result<Vec<FirstHalf<G>>, AbortReason> {
    if indexes.len() != template.k() {
        return Err(AbortReason::Shape);
    }
    indexes
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let c = template.lookup(i, r).ok_or(AbortReason::UnknownIndex)?;
            Ok(FirstHalf { index: c.index, col: c.col, sigma: c.sigma })
        })
        .collect()
}

/// `sigma` of every first half, and that each half answers the request.
pub fn verify_first_halves<G: PrimeGroup>(
    enrollment_key: &Element<G>,
    uid: &[u8],
    indexes: &[u32],
    halves: &[FirstHalf<G>],
) -> bool {
    halves.len() == indexes.len()
        && halves.iter().zip(indexes).all(|(h, &r)| {
            h.index == r && verify(enrollment_key, &sigma_message(h.index, &h.col, uid), &h.sigma)
        })
}

pub fn dec_zero_statements<G: PrimeGroup>(
    probe_public: &Element<G>,
    probe: &[Ciphertext<G>],
    cols: &[Ciphertext<G>],
) -> Result<Vec<Statement<G>>, Error> {
    if probe.len() != cols.len() {
        return Err(Error::LengthMismatch { expected: probe.len(), got: cols.len() });
    }
    probe
        .iter()
        .zip(cols)
        .map(|(p, c)| {
            let d = sub(p, c)?;
            Ok(Statement::DecZero { key: *probe_public, u: d.u, v: d.v })
        })
        .collect()
}

/// Proves `[P_i] - [j_i]` decrypts to zero under the probe key, for all `i`.
pub fn client_step3_proof<G: PrimeGroup>(
    probe: &[Ciphertext<G>],
    cols: &[Ciphertext<G>],
    probe_key: &KeyPair<G>,
    rng: &mut ChaCha20Rng,
) -> Result<AndProof<G>, Error> {
    let stmts = dec_zero_statements(probe_key.public(), probe, cols)?;
    let witnesses = vec![Witness::DecZero(*probe_key.secret()); stmts.len()];
    and_compose(&stmts, &witnesses, rng)
}

pub fn server_check_step3<G: PrimeGroup>(
    probe_public: &Element<G>,
    probe: &[Ciphertext<G>],
    halves: &[FirstHalf<G>],
    proof: &AndProof<G>,
) -> bool {
    let cols: Vec<_> = halves.iter().map(|h| h.col).collect();
    match dec_zero_statements(probe_public, probe, &cols) {
        Ok(stmts) => verify_and(&stmts, proof),
        Err(_) => false,
    }
}

/// Second halves for indexes already resolved by [`server_step3`].
pub fn server_step4_halves<G: PrimeGroup>(
    template: &TemplateMal<G>,
    indexes: &[u32],
) -> Result<Vec<SecondHalf<G>>, AbortReason> {
    indexes
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let c = template.lookup(i, r).ok_or(AbortReason::UnknownIndex)?;
            Ok(SecondHalf { col: c.col, score: c.score, alpha: c.alpha })
        })
        .collect()
}

/// `alpha` of every second half, and that each belongs to the same column
/// ciphertext as the first half already proven against the probe.
pub fn verify_second_halves<G: PrimeGroup>(
    enrollment_key: &Element<G>,
    uid: &[u8],
    first: &[FirstHalf<G>],
    second: &[SecondHalf<G>],
) -> bool {
    first.len() == second.len()
        && first.iter().zip(second).all(|(f, s)| {
            f.col.to_bytes() == s.col.to_bytes()
                && verify(enrollment_key, &alpha_message(&s.col, &s.score, uid), &s.alpha)
        })
}

/// `[[S]]` as the product of scores in ascending feature order, and
/// `[[C_t]] = [[S]] - Theta_t` in stored order. No fresh randomness.
pub fn both_step4_accumulate<G: PrimeGroup>(
    scores: &[Ciphertext<G>],
    theta: &ThresholdVector<G>,
) -> Result<(Ciphertext<G>, Vec<Ciphertext<G>>), Error> {
    let s = sum(scores.iter())?;
    let c = theta.0.iter().map(|t| sub(&s, t)).collect::<Result<_, _>>()?;
    Ok((s, c))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step4b<G: PrimeGroup> {
    pub blinded: Vec<Ciphertext<G>>,
    /// Second components of the partial decryptions of `blinded`.
    pub partials: Vec<Element<G>>,
    pub blind_proof: AndProof<G>,
    pub partial_proof: AndProof<G>,
}

pub fn blind_statements<G: PrimeGroup>(
    c: &[Ciphertext<G>],
    blinded: &[Ciphertext<G>],
) -> Vec<Statement<G>> {
    c.iter()
        .zip(blinded)
        .map(|(c, b)| Statement::Blind { u: c.u, v: c.v, a: b.u, b: b.v })
        .collect()
}

pub fn partial_statements<G: PrimeGroup>(
    blinded: &[Ciphertext<G>],
    partials: &[Element<G>],
    server_public: &Element<G>,
) -> Vec<Statement<G>> {
    blinded
        .iter()
        .zip(partials)
        .map(|(b, p)| Statement::Partial { u: b.u, v: b.v, c: *p, pk: *server_public })
        .collect()
}

pub fn server_step4_blind_partial<G: PrimeGroup>(
    c: &[Ciphertext<G>],
    server: &KeyPair<G>,
    rng: &mut ChaCha20Rng,
) -> Result<Step4b<G>, Error> {
    let blinders: Vec<Scalar<G>> = c.iter().map(|_| random_nonzero_scalar::<G, _>(rng)).collect();
    let pairs: Vec<(Ciphertext<G>, Scalar<G>)> = c.iter().copied().zip(blinders.iter().copied()).collect();
    let blinded = par_map(&pairs, |(c, a)| blind(c, a)).into_iter().collect::<Result<Vec<_>, _>>()?;
    let partials: Vec<Element<G>> = par_map(&blinded, |b| partial_decrypt(server, b).v);
    let blind_proof = and_compose(
        &blind_statements(c, &blinded),
        &blinders.iter().map(|a| Witness::Blind(*a)).collect::<Vec<_>>(),
        rng,
    )?;
    let partial_proof = and_compose(
        &partial_statements(&blinded, &partials, server.public()),
        &vec![Witness::Partial(*server.secret()); c.len()],
        rng,
    )?;
    Ok(Step4b { blinded, partials, blind_proof, partial_proof })
}

pub fn client_step4_decide<G: PrimeGroup>(
    c: &[Ciphertext<G>],
    step4b: &Step4b<G>,
    server_public: &Element<G>,
    client_secret: &Scalar<G>,
) -> Result<Decision, AbortReason> {
    if step4b.blinded.len() != c.len() || step4b.partials.len() != c.len() {
        return Err(AbortReason::Shape);
    }
    if !verify_and(&blind_statements(c, &step4b.blinded), &step4b.blind_proof) {
        return Err(AbortReason::BlindProof);
    }
    let partial_stmts = partial_statements(&step4b.blinded, &step4b.partials, server_public);
    if !verify_and(&partial_stmts, &step4b.partial_proof) {
        return Err(AbortReason::PartialProof);
    }
    let zeros = step4b
        .blinded
        .iter()
        .zip(&step4b.partials)
        .filter(|(b, p)| {
            let partial = Ciphertext::<G> { u: b.u, v: **p, tag: KeyTag::PartialByServer };
            is_zero(client_secret, &partial)
        })
        .count();
    Ok(Decision::from_bool(zeros > 0))
}

enum ClientPhase<G: PrimeGroup> {
    Start,
    AwaitStep3a { probe: Vec<Ciphertext<G>>, indexes: Vec<u32> },
    AwaitStep4a { first: Vec<FirstHalf<G>> },
    AwaitStep4b { c: Vec<Ciphertext<G>> },
    Done,
}

pub struct MalClient<G: PrimeGroup> {
    credential: MalClientCredential<G>,
    tables: Arc<LookupTableSet>,
    probe: QuantizedVector,
    rng: ChaCha20Rng,
    phase: ClientPhase<G>,
    outcome: Outcome,
    accumulated: Option<(Ciphertext<G>, Vec<Ciphertext<G>>)>,
}

impl<G: PrimeGroup> MalClient<G> {
    pub fn new(
        credential: MalClientCredential<G>,
        tables: Arc<LookupTableSet>,
        probe: &[f64],
        rng: ChaCha20Rng,
    ) -> Result<Self, Error> {
        let probe = tables.quantize(probe)?;
        Ok(Self::with_quantized(credential, tables, probe, rng))
    }

    pub fn with_quantized(
        credential: MalClientCredential<G>,
        tables: Arc<LookupTableSet>,
        probe: QuantizedVector,
        rng: ChaCha20Rng,
    ) -> Self {
        Self {
            credential,
            tables,
            probe,
            rng,
            phase: ClientPhase::Start,
            outcome: Outcome::Pending,
            accumulated: None,
        }
    }

    /// `([[S]], [[C]])` once step 4 has been reached.
    pub fn accumulated(&self) -> Option<&(Ciphertext<G>, Vec<Ciphertext<G>>)> {
        self.accumulated.as_ref()
    }
}

impl<G: PrimeGroup> Endpoint<G> for MalClient<G> {
    fn start(&mut self) -> Vec<Message<G>> {
        let uid = self.credential.uid.clone();
        match client_step2(&uid, &self.probe, self.tables.n(), &self.credential.keys, &mut self.rng) {
            Ok(step2) => {
                self.phase = ClientPhase::AwaitStep3a {
                    probe: step2.probe.clone(),
                    indexes: step2.indexes.clone(),
                };
                vec![Message::Step1 { uid: uid.clone() }, Message::Step2 { uid, step2 }]
            }
            Err(_) => abort(&mut self.outcome, AbortReason::Shape),
        }
    }

    fn on_message(&mut self, msg: Message<G>) -> Vec<Message<G>> {
        if let Some(out) = preamble(&mut self.outcome, &msg) {
            return out;
        }
        let cred = &self.credential;
        match (std::mem::replace(&mut self.phase, ClientPhase::Done), msg) {
            (ClientPhase::AwaitStep3a { probe, indexes }, Message::Step3a(first)) => {
                if first.len() != probe.len() {
                    return abort(&mut self.outcome, AbortReason::Shape);
                }
                if !verify_first_halves(&cred.enrollment_key, &cred.uid, &indexes, &first) {
                    return abort(&mut self.outcome, AbortReason::Sigma);
                }
                let cols: Vec<_> = first.iter().map(|h| h.col).collect();
                match client_step3_proof(&probe, &cols, &cred.keys.probe, &mut self.rng) {
                    Ok(proof) => {
                        self.phase = ClientPhase::AwaitStep4a { first };
                        vec![Message::Step3b(proof)]
                    }
                    Err(_) => abort(&mut self.outcome, AbortReason::Shape),
                }
            }
            (ClientPhase::AwaitStep4a { first }, Message::Step4a(second)) => {
                if !verify_second_halves(&cred.enrollment_key, &cred.uid, &first, &second) {
                    return abort(&mut self.outcome, AbortReason::Alpha);
                }
                let scores: Vec<_> = second.iter().map(|h| h.score).collect();
                match both_step4_accumulate(&scores, &cred.theta) {
                    Ok(acc) => {
                        self.phase = ClientPhase::AwaitStep4b { c: acc.1.clone() };
                        self.accumulated = Some(acc);
                        Vec::new()
                    }
                    Err(_) => abort(&mut self.outcome, AbortReason::Shape),
                }
            }
            (ClientPhase::AwaitStep4b { c }, Message::Step4b(step4b)) => {
                match client_step4_decide(
                    &c,
                    &step4b,
                    &cred.joint.server,
                    cred.keys.threshold.secret(),
                ) {
                    Ok(d) => {
                        self.outcome = Outcome::Decided(d);
                        Vec::new()
                    }
                    Err(reason) => abort(&mut self.outcome, reason),
                }
            }
            _ => abort(&mut self.outcome, AbortReason::UnexpectedMessage),
        }
    }

    fn outcome(&self) -> Outcome {
        self.outcome
    }
}

enum ServerPhase<G: PrimeGroup> {
    AwaitStep1,
    AwaitStep2 { record: Box<MalServerRecord<G>> },
    AwaitStep3b {
        record: Box<MalServerRecord<G>>,
        probe: Vec<Ciphertext<G>>,
        indexes: Vec<u32>,
        first: Vec<FirstHalf<G>>,
    },
    Done,
}

pub struct MalServer<G: PrimeGroup> {
    keypair: KeyPair<G>,
    tables: Arc<LookupTableSet>,
    store: Arc<dyn TemplateStore<MalServerRecord<G>>>,
    rng: ChaCha20Rng,
    phase: ServerPhase<G>,
    outcome: Outcome,
    accumulated: Option<(Ciphertext<G>, Vec<Ciphertext<G>>)>,
}

impl<G: PrimeGroup> MalServer<G> {
    pub fn new(
        keypair: KeyPair<G>,
        tables: Arc<LookupTableSet>,
        store: Arc<dyn TemplateStore<MalServerRecord<G>>>,
        rng: ChaCha20Rng,
    ) -> Self {
        Self {
            keypair,
            tables,
            store,
            rng,
            phase: ServerPhase::AwaitStep1,
            outcome: Outcome::Pending,
            accumulated: None,
        }
    }

    pub fn accumulated(&self) -> Option<&(Ciphertext<G>, Vec<Ciphertext<G>>)> {
        self.accumulated.as_ref()
    }

    fn record_matches_tables(&self, r: &MalServerRecord<G>) -> bool {
        r.template.has_shape(self.tables.k(), self.tables.n())
            && r.theta.0.len() == self.tables.window_len()
    }
}

impl<G: PrimeGroup> Endpoint<G> for MalServer<G> {
    fn start(&mut self) -> Vec<Message<G>> {
        Vec::new()
    }

    fn on_message(&mut self, msg: Message<G>) -> Vec<Message<G>> {
        if let Some(out) = preamble(&mut self.outcome, &msg) {
            return out;
        }
        match (std::mem::replace(&mut self.phase, ServerPhase::Done), msg) {
            (ServerPhase::AwaitStep1, Message::Step1 { uid }) => {
                let record = match self.store.get(&uid) {
                    Ok(Some(r)) => r,
                    _ => return abort(&mut self.outcome, AbortReason::UnknownUser),
                };
                if !self.record_matches_tables(&record) {
                    return abort(&mut self.outcome, AbortReason::Shape);
                }
                self.phase = ServerPhase::AwaitStep2 { record: Box::new(record) };
                Vec::new()
            }
            (ServerPhase::AwaitStep2 { record }, Message::Step2 { uid, step2 }) => {
                let k = record.template.k();
                if uid != record.template.uid
                    || step2.probe.len() != k
                    || step2.indexes.len() != k
                    || step2.proof.len() != k
                {
                    return abort(&mut self.outcome, AbortReason::Shape);
                }
                if !server_check_step2(&record.probe_public, &step2) {
                    return abort(&mut self.outcome, AbortReason::PlainProof);
                }
                match server_step3(&record.template, &step2.indexes) {
                    Ok(first) => {
                        self.phase = ServerPhase::AwaitStep3b {
                            record,
                            probe: step2.probe,
                            indexes: step2.indexes,
                            first: first.clone(),
                        };
                        vec![Message::Step3a(first)]
                    }
                    Err(reason) => abort(&mut self.outcome, reason),
                }
            }
            (ServerPhase::AwaitStep3b { record, probe, indexes, first }, Message::Step3b(proof)) => {
                if !server_check_step3(&record.probe_public, &probe, &first, &proof) {
                    return abort(&mut self.outcome, AbortReason::DecZeroProof);
                }
                let second = match server_step4_halves(&record.template, &indexes) {
                    Ok(s) => s,
                    Err(reason) => return abort(&mut self.outcome, reason),
                };
                let scores: Vec<_> = second.iter().map(|h| h.score).collect();
                let acc = match both_step4_accumulate(&scores, &record.theta) {
                    Ok(acc) => acc,
                    Err(_) => return abort(&mut self.outcome, AbortReason::Shape),
                };
                let step4b = match server_step4_blind_partial(&acc.1, &self.keypair, &mut self.rng) {
                    Ok(s) => s,
                    Err(_) => return abort(&mut self.outcome, AbortReason::Shape),
                };
                self.accumulated = Some(acc);
                self.outcome = Outcome::Completed;
                vec![Message::Step4a(second), Message::Step4b(step4b)]
            }
            _ => abort(&mut self.outcome, AbortReason::UnexpectedMessage),
        }
    }

    fn outcome(&self) -> Outcome {
        self.outcome
    }
}
