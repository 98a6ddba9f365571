//! Scripted adversaries run against both protocols.
//!
//! Every attack is a [`Hook`] wrapped around an honest endpoint: it rewrites
//! or observes the messages the honest code produces, so the protocol logic
//! itself is never forked.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::classifier::{build_tables, FeatureModel, QuantizedVector};
use crate::elgamal::{
    decrypt, encrypt_random, partial_decrypt, Ciphertext, EncryptionKey, JointPublicKey,
    KeyPair, KeyTag,
};
use crate::group::{generator, DlogTable, Element, PrimeGroup, Scalar};
use crate::protocol::malicious::{
    blind_statements, both_step4_accumulate, partial_statements, sigma_message, FirstHalf, Step4b,
    ThresholdVector,
};
use crate::protocol::{AbortReason, Decision, Endpoint, Outcome, Protocol};
use crate::scenario::{child_rng, Scenario};
use crate::sigma::{and_compose, Statement, Witness};
use crate::signature::SigKeyPair;
use crate::transport::run_in_memory;
use crate::wire::Message;
use crate::Error;

/// Message interception around an honest endpoint.
pub trait Hook<G: PrimeGroup>: Send {
    fn outgoing(&mut self, msgs: Vec<Message<G>>) -> Vec<Message<G>> {
        msgs
    }

    fn incoming(&mut self, msg: Message<G>) -> Message<G> {
        msg
    }
}

pub struct Hooked<E, H> {
    pub inner: E,
    pub hook: H,
}

impl<G: PrimeGroup, E: Endpoint<G>, H: Hook<G>> Endpoint<G> for Hooked<E, H> {
    fn start(&mut self) -> Vec<Message<G>> {
        let out = self.inner.start();
        self.hook.outgoing(out)
    }

    fn on_message(&mut self, msg: Message<G>) -> Vec<Message<G>> {
        let msg = self.hook.incoming(msg);
        let out = self.inner.on_message(msg);
        self.hook.outgoing(out)
    }

    fn outcome(&self) -> Outcome {
        self.inner.outcome()
    }
}

/// Client: replaces its final score with a fresh encryption of `theta`.
pub struct ThetaInjector<G: PrimeGroup> {
    pub key: EncryptionKey<G>,
    pub theta: i32,
    pub rng: ChaCha20Rng,
    pub injected: bool,
}

impl<G: PrimeGroup> Hook<G> for ThetaInjector<G> {
    fn outgoing(&mut self, msgs: Vec<Message<G>>) -> Vec<Message<G>> {
        msgs.into_iter()
            .map(|m| match m {
                Message::FinalScore(_) => {
                    self.injected = true;
                    Message::FinalScore(encrypt_random(&self.key, self.theta as i64, &mut self.rng))
                }
                other => other,
            })
            .collect()
    }
}

/// Server: sends a template whose row `target` is `(1, ..., n)` and all
/// other rows zero, then keeps the client's encrypted score.
pub struct TemplateCrafter<G: PrimeGroup> {
    pub joint: JointPublicKey<G>,
    pub target: usize,
    pub rng: ChaCha20Rng,
    pub captured: Option<Ciphertext<G>>,
}

impl<G: PrimeGroup> Hook<G> for TemplateCrafter<G> {
    fn outgoing(&mut self, msgs: Vec<Message<G>>) -> Vec<Message<G>> {
        let key = self.joint.encryption_key();
        msgs.into_iter()
            .map(|m| match m {
                Message::TemplateReply { rows } => {
                    let rows = rows
                        .iter()
                        .enumerate()
                        .map(|(i, row)| {
                            (0..row.len())
                                .map(|j| {
                                    let m = if i == self.target { j as i64 + 1 } else { 0 };
                                    encrypt_random(&key, m, &mut self.rng)
                                })
                                .collect()
                        })
                        .collect();
                    Message::TemplateReply { rows }
                }
                other => other,
            })
            .collect()
    }

    fn incoming(&mut self, msg: Message<G>) -> Message<G> {
        if let Message::FinalScore(c) = &msg {
            self.captured = Some(*c);
        }
        msg
    }
}

/// Server: answers step 3 with components it signed itself.
pub struct ComponentForger<G: PrimeGroup> {
    pub forger: SigKeyPair<G>,
    pub uid: Vec<u8>,
    pub probe_key: EncryptionKey<G>,
    pub rng: ChaCha20Rng,
}

impl<G: PrimeGroup> Hook<G> for ComponentForger<G> {
    fn outgoing(&mut self, msgs: Vec<Message<G>>) -> Vec<Message<G>> {
        msgs.into_iter()
            .map(|m| match m {
                Message::Step3a(halves) => Message::Step3a(
                    halves
                        .iter()
                        .map(|h| {
                            let col = encrypt_random(&self.probe_key, 0, &mut self.rng);
                            let sigma = self.forger.sign(&sigma_message(h.index, &col, &self.uid), &mut self.rng);
                            FirstHalf { index: h.index, col, sigma }
                        })
                        .collect(),
                ),
                other => other,
            })
            .collect()
    }
}

/// Server: replaces the comparison vector with encryptions of nonzero values.
pub struct FakeComparison<G: PrimeGroup> {
    pub client_key: EncryptionKey<G>,
    pub joint_key: EncryptionKey<G>,
    pub rng: ChaCha20Rng,
}

impl<G: PrimeGroup> FakeComparison<G> {
    fn nonzero(&mut self, key: &EncryptionKey<G>) -> Ciphertext<G> {
        let m = self.rng.gen_range(1..=1_000_000);
        encrypt_random(key, m, &mut self.rng)
    }
}

impl<G: PrimeGroup> Hook<G> for FakeComparison<G> {
    fn outgoing(&mut self, msgs: Vec<Message<G>>) -> Vec<Message<G>> {
        let (ck, jk) = (self.client_key, self.joint_key);
        msgs.into_iter()
            .map(|m| match m {
                Message::ComparisonVector(v) => {
                    Message::ComparisonVector(v.iter().map(|_| self.nonzero(&ck)).collect())
                }
                Message::Step4b(mut s) => {
                    // keep the honest proofs; they are for other statements
                    for i in 0..s.blinded.len() {
                        s.blinded[i] = self.nonzero(&jk);
                        s.partials[i] = self.nonzero(&ck).v;
                    }
                    Message::Step4b(s)
                }
                other => other,
            })
            .collect()
    }
}

/// Client: after step 2, proves decryption-to-zero for a different probe.
pub struct ProbeSubstitution<G: PrimeGroup> {
    pub probe_key: KeyPair<G>,
    pub probe: QuantizedVector,
    pub n: usize,
    /// Features whose value is replaced by `(f + 1) mod n`.
    pub targets: Vec<usize>,
    pub rng: ChaCha20Rng,
    sent_probe: Option<Vec<Ciphertext<G>>>,
    cols: Option<Vec<Ciphertext<G>>>,
}

impl<G: PrimeGroup> ProbeSubstitution<G> {
    pub fn new(probe_key: KeyPair<G>, probe: QuantizedVector, n: usize, targets: Vec<usize>, rng: ChaCha20Rng) -> Self {
        Self { probe_key, probe, n, targets, rng, sent_probe: None, cols: None }
    }
}

impl<G: PrimeGroup> Hook<G> for ProbeSubstitution<G> {
    fn outgoing(&mut self, msgs: Vec<Message<G>>) -> Vec<Message<G>> {
        msgs.into_iter()
            .map(|m| match m {
                Message::Step2 { uid, step2 } => {
                    self.sent_probe = Some(step2.probe.clone());
                    Message::Step2 { uid, step2 }
                }
                Message::Step3b(honest) => {
                    let (Some(probe), Some(cols)) = (&self.sent_probe, &self.cols) else {
                        return Message::Step3b(honest);
                    };
                    let key = self.probe_key.encryption_key();
                    let stmts: Vec<Statement<G>> = probe
                        .iter()
                        .zip(cols)
                        .enumerate()
                        .map(|(i, (p, c))| {
                            let p = if self.targets.contains(&i) {
                                let f = (self.probe.0[i] + 1) % self.n;
                                encrypt_random(&key, f as i64, &mut self.rng)
                            } else {
                                *p
                            };
                            Statement::DecZero { key: key.element, u: p.u - c.u, v: p.v - c.v }
                        })
                        .collect();
                    let w = vec![Witness::DecZero(*self.probe_key.secret()); stmts.len()];
                    match and_compose(&stmts, &w, &mut self.rng) {
                        Ok(p) => Message::Step3b(p),
                        Err(_) => Message::Step3b(honest),
                    }
                }
                other => other,
            })
            .collect()
    }

    fn incoming(&mut self, msg: Message<G>) -> Message<G> {
        if let Message::Step3a(halves) = &msg {
            self.cols = Some(halves.iter().map(|h| h.col).collect());
        }
        msg
    }
}

/// Server: "blinds" every comparison entry with 1 and proves it honestly.
pub struct SkipBlinding<G: PrimeGroup> {
    pub server: KeyPair<G>,
    pub theta: ThresholdVector<G>,
    pub rng: ChaCha20Rng,
}

impl<G: PrimeGroup> Hook<G> for SkipBlinding<G> {
    fn outgoing(&mut self, msgs: Vec<Message<G>>) -> Vec<Message<G>> {
        let scores: Option<Vec<Ciphertext<G>>> = msgs.iter().find_map(|m| match m {
            Message::Step4a(h) => Some(h.iter().map(|h| h.score).collect()),
            _ => None,
        });
        msgs.into_iter()
            .map(|m| match (m, &scores) {
                (Message::Step4b(honest), Some(scores)) => {
                    match unblinded_step4b(scores, &self.theta, &self.server, &mut self.rng) {
                        Ok(s) => Message::Step4b(s),
                        Err(_) => Message::Step4b(honest),
                    }
                }
                (other, _) => other,
            })
            .collect()
    }
}

fn unblinded_step4b<G: PrimeGroup>(
    scores: &[Ciphertext<G>],
    theta: &ThresholdVector<G>,
    server: &KeyPair<G>,
    rng: &mut ChaCha20Rng,
) -> Result<Step4b<G>, Error> {
    let (_, c) = both_step4_accumulate(scores, theta)?;
    let one = Scalar::<G>::from(1u64);
    let partials: Vec<Element<G>> = c.iter().map(|x| partial_decrypt(server, x).v).collect();
    let blind_proof = and_compose(&blind_statements(&c, &c), &vec![Witness::Blind(one); c.len()], rng)?;
    let partial_proof = and_compose(
        &partial_statements(&c, &partials, server.public()),
        &vec![Witness::Partial(*server.secret()); c.len()],
        rng,
    )?;
    Ok(Step4b { blinded: c, partials, blind_proof, partial_proof })
}

/// Client: keeps a copy of the step-4 comparison message.
pub struct Step4Recorder<G: PrimeGroup> {
    pub seen: Option<Step4b<G>>,
}

impl<G: PrimeGroup> Default for Step4Recorder<G> {
    fn default() -> Self {
        Self { seen: None }
    }
}

impl<G: PrimeGroup> Hook<G> for Step4Recorder<G> {
    fn incoming(&mut self, msg: Message<G>) -> Message<G> {
        if let Message::Step4b(s) = &msg {
            self.seen = Some(s.clone());
        }
        msg
    }
}

/// Number of nonzero comparison entries whose plaintext the client can read
/// directly, i.e. that decrypt into `[-bound, bound]`. Properly blinded
/// entries never do, except with negligible probability.
pub fn leaked_entries<G: PrimeGroup>(step4b: &Step4b<G>, client_secret: &Scalar<G>, bound: i64) -> Result<usize, Error> {
    let table = DlogTable::<G>::new(generator::<G>(), -bound, bound)?;
    Ok(step4b
        .blinded
        .iter()
        .zip(&step4b.partials)
        .filter(|(b, p)| {
            let partial = Ciphertext { u: b.u, v: **p, tag: KeyTag::PartialByServer };
            matches!(crate::elgamal::decrypt_with(&table, client_secret, &partial), Ok(m) if m != 0)
        })
        .count())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Script {
    EncryptTheta,
    CraftedTemplate,
    FakeComparison,
    UnprovenPartial,
    SkipBlinding,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttackOutcome {
    /// The adversary reached its goal.
    Succeeded,
    /// The victim aborted with this reason.
    Aborted(AbortReason),
    /// The protocol offers no point to mount the attack.
    Inapplicable,
    /// The attack ran to completion without reaching its goal.
    Failed,
}

impl std::fmt::Display for AttackOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AttackOutcome::Succeeded => f.write_str("succeeded"),
            AttackOutcome::Aborted(r) => write!(f, "abort:{}", r.code()),
            AttackOutcome::Inapplicable => f.write_str("inapplicable"),
            AttackOutcome::Failed => f.write_str("failed"),
        }
    }
}

impl Script {
    pub const ALL: [Script; 5] = [
        Script::EncryptTheta,
        Script::CraftedTemplate,
        Script::FakeComparison,
        Script::UnprovenPartial,
        Script::SkipBlinding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Script::EncryptTheta => "encrypt-theta",
            Script::CraftedTemplate => "crafted-template",
            Script::FakeComparison => "fake-comparison",
            Script::UnprovenPartial => "unproven-partial",
            Script::SkipBlinding => "skip-blinding",
        }
    }

    pub fn expected(self, protocol: Protocol) -> AttackOutcome {
        use AttackOutcome::*;
        match (self, protocol) {
            (Script::EncryptTheta, Protocol::SemiHonest) => Succeeded,
            (Script::EncryptTheta, Protocol::Malicious) => Inapplicable,
            (Script::CraftedTemplate, Protocol::SemiHonest) => Succeeded,
            (Script::CraftedTemplate, Protocol::Malicious) => Aborted(AbortReason::Sigma),
            (Script::FakeComparison, Protocol::SemiHonest) => Succeeded,
            (Script::FakeComparison, Protocol::Malicious) => Aborted(AbortReason::BlindProof),
            (Script::UnprovenPartial, Protocol::SemiHonest) => Inapplicable,
            (Script::UnprovenPartial, Protocol::Malicious) => Aborted(AbortReason::DecZeroProof),
            (Script::SkipBlinding, Protocol::SemiHonest) => Inapplicable,
            (Script::SkipBlinding, Protocol::Malicious) => Succeeded,
        }
    }
}

impl std::str::FromStr for Script {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Script::ALL
            .into_iter()
            .find(|x| x.name() == s || x.name().replace('-', "_") == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown attack script {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct AttackParams {
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub rho: f64,
    /// Feature attacked by the crafted template, or every feature if `None`.
    pub target_feature: Option<usize>,
    /// Substitute every probe feature instead of only the first.
    pub substitute_all: bool,
}

impl Default for AttackParams {
    fn default() -> Self {
        Self {
            k: 8,
            n: 4,
            delta: 0.5,
            rho: 0.9,
            target_feature: None,
            substitute_all: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AttackReport {
    pub script: Script,
    pub protocol: Protocol,
    pub seed: u64,
    pub outcome: AttackOutcome,
    /// Client outcome of the same probe in an unmodified session.
    pub control: Outcome,
    pub client: Outcome,
    pub server: Outcome,
    /// `(recovered, actual)` quantized probe values for the crafted template.
    pub recovered: Option<(Vec<usize>, Vec<usize>)>,
    pub leaked_entries: Option<usize>,
}

impl AttackReport {
    pub fn as_expected(&self) -> bool {
        self.outcome == self.script.expected(self.protocol)
    }

    /// Line-oriented `key=value` report.
    pub fn to_kv(&self) -> String {
        let mut lines = vec![
            format!("script={}", self.script.name()),
            format!("protocol={}", self.protocol.as_str()),
            format!("seed={}", self.seed),
            format!("outcome={}", self.outcome),
            format!("expected={}", self.script.expected(self.protocol)),
            format!("as_expected={}", self.as_expected()),
            format!("control={}", self.control),
            format!("client={}", self.client),
            format!("server={}", self.server),
        ];
        if let Some(step) = self.outcome_step() {
            lines.push(format!("abort_step={step}"));
        }
        if let Some((rec, act)) = &self.recovered {
            let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            lines.push(format!("recovered={}", join(rec)));
            lines.push(format!("actual={}", join(act)));
        }
        if let Some(l) = self.leaked_entries {
            lines.push(format!("leaked_entries={l}"));
        }
        lines.join("\n")
    }

    fn outcome_step(&self) -> Option<u8> {
        match self.outcome {
            AttackOutcome::Aborted(r) => r.step(),
            _ => None,
        }
    }
}

fn session_err(e: crate::transport::SessionError) -> Error {
    Error::Session(e.to_string())
}

/// The victim's abort reason, ignoring the echo of a peer abort.
fn victim_abort(outcomes: [Outcome; 2]) -> Option<AbortReason> {
    outcomes
        .into_iter()
        .filter_map(Outcome::abort_reason)
        .find(|r| *r != AbortReason::PeerAbort)
}

pub fn run_attack<G: PrimeGroup>(
    script: Script,
    protocol: Protocol,
    seed: u64,
    params: &AttackParams,
) -> Result<AttackReport, Error> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let model = FeatureModel::uniform(params.k, params.rho)?;
    let tables = build_tables(&model, params.n, params.delta)?;
    let mut world = Scenario::<G>::new(tables, model, &mut rng)?;
    let reference = world.random_features(&mut rng);
    let user = world.enroll(b"victim", reference, &[protocol], &mut rng)?;

    let want_match = !matches!(script, Script::EncryptTheta);
    let probe = world.probe_with_decision(user, want_match, &mut rng)?;
    let control = world
        .run(protocol, user, &probe, &mut rng)?
        .map_err(session_err)?
        .client;

    let mut report = AttackReport {
        script,
        protocol,
        seed,
        outcome: AttackOutcome::Inapplicable,
        control,
        client: Outcome::Pending,
        server: Outcome::Pending,
        recovered: None,
        leaked_entries: None,
    };
    let (crng, srng) = (child_rng(&mut rng), child_rng(&mut rng));
    let mut hrng = child_rng(&mut rng);

    match (script, protocol) {
        (Script::EncryptTheta, Protocol::SemiHonest) => {
            let joint = world.users[user].sh.as_ref().unwrap().joint;
            let mut c = Hooked {
                inner: world.sh_client(user, probe, crng)?,
                hook: ThetaInjector { key: joint.encryption_key(), theta: world.tables.theta(), rng: hrng, injected: false },
            };
            let mut s = world.sh_server(srng);
            let r = run_in_memory::<G, _, _>(&mut c, &mut s).map_err(session_err)?;
            report.client = r.client;
            report.server = r.server;
            report.outcome = match r.client {
                Outcome::Decided(Decision::Match) if c.hook.injected => AttackOutcome::Succeeded,
                _ => AttackOutcome::Failed,
            };
        }
        (Script::EncryptTheta, Protocol::Malicious) => {
            let joint = world.users[user].mal.as_ref().unwrap().joint;
            let mut c = Hooked {
                inner: world.mal_client(user, probe, crng)?,
                hook: ThetaInjector { key: joint.encryption_key(), theta: world.tables.theta(), rng: hrng, injected: false },
            };
            let mut s = world.mal_server(srng);
            let r = run_in_memory::<G, _, _>(&mut c, &mut s).map_err(session_err)?;
            report.client = r.client;
            report.server = r.server;
            report.outcome = if c.hook.injected {
                match r.client {
                    Outcome::Decided(Decision::Match) => AttackOutcome::Succeeded,
                    _ => AttackOutcome::Failed,
                }
            } else {
                AttackOutcome::Inapplicable
            };
        }
        (Script::CraftedTemplate, Protocol::SemiHonest) => {
            let cred = world.users[user].sh.clone().unwrap();
            let n = world.tables.n();
            let targets: Vec<usize> = match params.target_feature {
                Some(i) if i < params.k => vec![i],
                Some(i) => return Err(Error::OutOfRange { value: i, n: params.k }),
                None => (0..params.k).collect(),
            };
            let mut recovered = Vec::with_capacity(targets.len());
            for &target in &targets {
                let mut c = world.sh_client(user, probe.clone(), child_rng(&mut rng))?;
                let mut s = Hooked {
                    inner: world.sh_server(child_rng(&mut rng)),
                    hook: TemplateCrafter { joint: cred.joint, target, rng: child_rng(&mut hrng), captured: None },
                };
                let r = run_in_memory::<G, _, _>(&mut c, &mut s).map_err(session_err)?;
                report.client = r.client;
                report.server = r.server;
                let captured = s.hook.captured.ok_or(Error::Session("no final score observed".into()))?;
                // decryption oracle: the client's key share is removed on request
                let oracle = partial_decrypt(&cred.keypair, &captured);
                let value = decrypt(world.server.secret(), &oracle, 1, n as i64)?;
                recovered.push((value - 1) as usize);
            }
            let actual: Vec<usize> = targets.iter().map(|&i| probe.0[i]).collect();
            report.outcome = if recovered == actual {
                AttackOutcome::Succeeded
            } else {
                AttackOutcome::Failed
            };
            report.recovered = Some((recovered, actual));
        }
        (Script::CraftedTemplate, Protocol::Malicious) => {
            let record = world.mal_store_record(user)?;
            let mut c = world.mal_client(user, probe, crng)?;
            let mut s = Hooked {
                inner: world.mal_server(srng),
                hook: ComponentForger {
                    forger: SigKeyPair::generate(&mut hrng),
                    uid: world.users[user].uid.clone(),
                    probe_key: EncryptionKey::new(record.probe_public, KeyTag::Client),
                    rng: hrng,
                },
            };
            let r = run_in_memory::<G, _, _>(&mut c, &mut s).map_err(session_err)?;
            report.client = r.client;
            report.server = r.server;
            report.outcome = classify_server_attack(r.client);
        }
        (Script::FakeComparison, _) => {
            let joint = world.joint(user)?;
            let hook = FakeComparison {
                client_key: EncryptionKey::new(joint.client, KeyTag::PartialByServer),
                joint_key: joint.encryption_key(),
                rng: hrng,
            };
            let r = match protocol {
                Protocol::SemiHonest => {
                    let mut c = world.sh_client(user, probe, crng)?;
                    let mut s = Hooked { inner: world.sh_server(srng), hook };
                    run_in_memory::<G, _, _>(&mut c, &mut s)
                }
                Protocol::Malicious => {
                    let mut c = world.mal_client(user, probe, crng)?;
                    let mut s = Hooked { inner: world.mal_server(srng), hook };
                    run_in_memory::<G, _, _>(&mut c, &mut s)
                }
            }
            .map_err(session_err)?;
            report.client = r.client;
            report.server = r.server;
            report.outcome = classify_server_attack(r.client);
        }
        (Script::UnprovenPartial, Protocol::Malicious) => {
            let cred = world.users[user].mal.clone().unwrap();
            let targets = if params.substitute_all { (0..params.k).collect() } else { vec![0] };
            let mut c = Hooked {
                inner: world.mal_client(user, probe.clone(), crng)?,
                hook: ProbeSubstitution::new(cred.keys.probe.clone(), probe, world.tables.n(), targets, hrng),
            };
            let mut s = world.mal_server(srng);
            let r = run_in_memory::<G, _, _>(&mut c, &mut s).map_err(session_err)?;
            report.client = r.client;
            report.server = r.server;
            report.outcome = match victim_abort([r.server, r.client]) {
                Some(reason) => AttackOutcome::Aborted(reason),
                None => AttackOutcome::Failed,
            };
        }
        (Script::SkipBlinding, Protocol::Malicious) => {
            let record = world.mal_store_record(user)?;
            let cred = world.users[user].mal.clone().unwrap();
            let mut c = Hooked { inner: world.mal_client(user, probe, crng)?, hook: Step4Recorder::default() };
            let mut s = Hooked {
                inner: world.mal_server(srng),
                hook: SkipBlinding { server: world.server.clone(), theta: record.theta, rng: hrng },
            };
            let r = run_in_memory::<G, _, _>(&mut c, &mut s).map_err(session_err)?;
            report.client = r.client;
            report.server = r.server;
            let bound = world.tables.s_max() as i64 - world.tables.min_score();
            let seen = c.hook.seen.as_ref();
            let leaked = match seen {
                Some(s) => leaked_entries(s, cred.keys.threshold.secret(), bound)?,
                None => 0,
            };
            report.leaked_entries = Some(leaked);
            let nonzero = seen.map_or(0, |s| s.blinded.len()).saturating_sub(usize::from(matches!(r.client, Outcome::Decided(Decision::Match))));
            report.outcome = match r.client {
                Outcome::Aborted(reason) => AttackOutcome::Aborted(reason),
                _ if leaked > 0 && leaked == nonzero => AttackOutcome::Succeeded,
                _ => AttackOutcome::Failed,
            };
        }
        (Script::UnprovenPartial | Script::SkipBlinding, Protocol::SemiHonest) => {}
    }
    Ok(report)
}

/// Server-side attacks aim at the client's decision; a client abort means
/// the attack was caught.
fn classify_server_attack(client: Outcome) -> AttackOutcome {
    match client {
        Outcome::Aborted(r) => AttackOutcome::Aborted(r),
        Outcome::Decided(Decision::NoMatch) => AttackOutcome::Succeeded,
        _ => AttackOutcome::Failed,
    }
}

impl<G: PrimeGroup> Scenario<G> {
    fn mal_store_record(&self, user: usize) -> Result<crate::protocol::malicious::MalServerRecord<G>, Error> {
        use crate::store::TemplateStore;
        self.mal_store
            .get(&self.users[user].uid)?
            .ok_or(Error::InvalidParameter("user not enrolled for mal".into()))
    }

    fn joint(&self, user: usize) -> Result<JointPublicKey<G>, Error> {
        let u = &self.users[user];
        u.sh.as_ref()
            .map(|c| c.joint)
            .or(u.mal.as_ref().map(|c| c.joint))
            .ok_or(Error::InvalidParameter("user not enrolled".into()))
    }
}
