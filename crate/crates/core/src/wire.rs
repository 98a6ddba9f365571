//! Canonical byte encodings: protocol messages, frames and stored records.
//!
//! Frame: `version (1) | msg_type (1) | body_len (4, BE) | body`. Bodies are
//! fixed-field concatenations; lists carry a `u32` BE count and byte strings
//! a `u32` BE length.

use thiserror::Error;

use crate::elgamal::{Ciphertext, KeyPair, KeyTag, JointPublicKey, Party};
use crate::group::{decode_element, decode_scalar, encode_element, encode_scalar, Element, PrimeGroup};
use crate::prp::{PrpKey, PRP_KEY_LEN};
use crate::protocol::malicious::{
    Component, FirstHalf, MalClientCredential, MalClientKeys, MalServerRecord, SecondHalf, Step2,
    Step4b, TemplateMal, ThresholdVector,
};
use crate::protocol::semi_honest::{ShClientCredential, ShServerRecord, TemplateSh};
use crate::sigma::{AndProof, Relation};
use crate::signature::Signature;

pub const WIRE_VERSION: u8 = 1;
pub const FRAME_HEADER_LEN: usize = 6;
pub const MAX_FRAME_BODY: usize = 16 * 1024 * 1024;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("frame truncated")]
    Truncated,
    #[error("unsupported wire version {0}")]
    Version(u8),
    #[error("unknown message type {0:#04x}")]
    UnknownType(u8),
    #[error("frame body of {0} bytes exceeds the cap")]
    TooLarge(usize),
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("invalid field: {0}")]
    Field(&'static str),
}

impl From<crate::Error> for WireError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Decode(what) => WireError::Field(what),
            _ => WireError::Field("invalid value"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageType {
    EnrollSh = 0x01,
    VerifyRequest = 0x02,
    TemplateReply = 0x03,
    FinalScore = 0x04,
    ComparisonVector = 0x05,
    Step1 = 0x11,
    Step2 = 0x12,
    Step3a = 0x13,
    Step3b = 0x14,
    Step4a = 0x15,
    Step4b = 0x16,
    Abort = 0xff,
}

impl MessageType {
    pub const ALL: [MessageType; 12] = [
        MessageType::EnrollSh,
        MessageType::VerifyRequest,
        MessageType::TemplateReply,
        MessageType::FinalScore,
        MessageType::ComparisonVector,
        MessageType::Step1,
        MessageType::Step2,
        MessageType::Step3a,
        MessageType::Step3b,
        MessageType::Step4a,
        MessageType::Step4b,
        MessageType::Abort,
    ];

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|t| *t as u8 == b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message<G: PrimeGroup> {
    EnrollSh { template: TemplateSh<G>, client_public: Element<G> },
    VerifyRequest { uid: Vec<u8> },
    TemplateReply { rows: Vec<Vec<Ciphertext<G>>> },
    FinalScore(Ciphertext<G>),
    ComparisonVector(Vec<Ciphertext<G>>),
    Step1 { uid: Vec<u8> },
    Step2 { uid: Vec<u8>, step2: Step2<G> },
    Step3a(Vec<FirstHalf<G>>),
    Step3b(AndProof<G>),
    Step4a(Vec<SecondHalf<G>>),
    Step4b(Step4b<G>),
    /// Carries no reason.
    Abort,
}

impl<G: PrimeGroup> Message<G> {
    pub fn message_type(&self) -> MessageType {
        match self {
            Message::EnrollSh { .. } => MessageType::EnrollSh,
            Message::VerifyRequest { .. } => MessageType::VerifyRequest,
            Message::TemplateReply { .. } => MessageType::TemplateReply,
            Message::FinalScore(_) => MessageType::FinalScore,
            Message::ComparisonVector(_) => MessageType::ComparisonVector,
            Message::Step1 { .. } => MessageType::Step1,
            Message::Step2 { .. } => MessageType::Step2,
            Message::Step3a(_) => MessageType::Step3a,
            Message::Step3b(_) => MessageType::Step3b,
            Message::Step4a(_) => MessageType::Step4a,
            Message::Step4b(_) => MessageType::Step4b,
            Message::Abort => MessageType::Abort,
        }
    }

    pub fn encode_body(&self) -> Vec<u8> {
        let mut w = Writer::default();
        match self {
            Message::EnrollSh { template, client_public } => {
                w.template_sh(template);
                w.element::<G>(client_public);
            }
            Message::VerifyRequest { uid } | Message::Step1 { uid } => w.bytes(uid),
            Message::TemplateReply { rows } => w.matrix(rows),
            Message::FinalScore(c) => w.ciphertext(c),
            Message::ComparisonVector(v) => w.ciphertexts(v),
            Message::Step2 { uid, step2 } => {
                w.bytes(uid);
                w.ciphertexts(&step2.probe);
                for r in &step2.indexes {
                    w.u32(*r);
                }
                w.raw(&step2.proof.to_bytes());
            }
            Message::Step3a(halves) => {
                w.u32(halves.len() as u32);
                for h in halves {
                    w.u32(h.index);
                    w.ciphertext(&h.col);
                    w.raw(&h.sigma.to_bytes());
                }
            }
            Message::Step3b(proof) => {
                w.u32(proof.len() as u32);
                w.raw(&proof.to_bytes());
            }
            Message::Step4a(halves) => {
                w.u32(halves.len() as u32);
                for h in halves {
                    w.ciphertext(&h.col);
                    w.ciphertext(&h.score);
                    w.raw(&h.alpha.to_bytes());
                }
            }
            Message::Step4b(s) => {
                w.ciphertexts(&s.blinded);
                for p in &s.partials {
                    w.element::<G>(p);
                }
                w.raw(&s.blind_proof.to_bytes());
                w.raw(&s.partial_proof.to_bytes());
            }
            Message::Abort => {}
        }
        w.0
    }

    pub fn decode_body(ty: MessageType, body: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(body);
        let msg = match ty {
            MessageType::EnrollSh => Message::EnrollSh {
                template: r.template_sh()?,
                client_public: r.element::<G>()?,
            },
            MessageType::VerifyRequest => Message::VerifyRequest { uid: r.bytes()? },
            MessageType::Step1 => Message::Step1 { uid: r.bytes()? },
            MessageType::TemplateReply => Message::TemplateReply { rows: r.matrix(KeyTag::Joint)? },
            MessageType::FinalScore => Message::FinalScore(r.ciphertext(KeyTag::Joint)?),
            MessageType::ComparisonVector => {
                Message::ComparisonVector(r.ciphertexts(KeyTag::PartialByServer)?)
            }
            MessageType::Step2 => {
                let uid = r.bytes()?;
                let probe = r.ciphertexts(KeyTag::Client)?;
                let k = probe.len();
                if k == 0 {
                    return Err(WireError::Field("empty probe"));
                }
                let indexes = (0..k).map(|_| r.u32()).collect::<Result<_, _>>()?;
                let proof = r.and_proof(Relation::Plain, k)?;
                Message::Step2 { uid, step2: Step2 { probe, indexes, proof } }
            }
            MessageType::Step3a => {
                let per = 4 + Ciphertext::<G>::encoded_len() + Signature::<G>::encoded_len();
                let k = r.count(per)?;
                let halves = (0..k)
                    .map(|_| {
                        Ok(FirstHalf {
                            index: r.u32()?,
                            col: r.ciphertext(KeyTag::Client)?,
                            sigma: r.signature()?,
                        })
                    })
                    .collect::<Result<_, WireError>>()?;
                Message::Step3a(halves)
            }
            MessageType::Step3b => {
                let k = r.u32()? as usize;
                if k == 0 || k > body.len() {
                    return Err(WireError::Field("proof count"));
                }
                Message::Step3b(r.and_proof(Relation::DecZero, k)?)
            }
            MessageType::Step4a => {
                let per = 2 * Ciphertext::<G>::encoded_len() + Signature::<G>::encoded_len();
                let k = r.count(per)?;
                let halves = (0..k)
                    .map(|_| {
                        Ok(SecondHalf {
                            col: r.ciphertext(KeyTag::Client)?,
                            score: r.ciphertext(KeyTag::Joint)?,
                            alpha: r.signature()?,
                        })
                    })
                    .collect::<Result<_, WireError>>()?;
                Message::Step4a(halves)
            }
            MessageType::Step4b => {
                let blinded = r.ciphertexts(KeyTag::Joint)?;
                let m = blinded.len();
                if m == 0 {
                    return Err(WireError::Field("empty comparison vector"));
                }
                let partials = (0..m).map(|_| r.element::<G>()).collect::<Result<_, _>>()?;
                let blind_proof = r.and_proof(Relation::Blind, m)?;
                let partial_proof = r.and_proof(Relation::Partial, m)?;
                Message::Step4b(Step4b { blinded, partials, blind_proof, partial_proof })
            }
            MessageType::Abort => Message::Abort,
        };
        r.finish()?;
        Ok(msg)
    }

    pub fn to_frame(&self) -> Vec<u8> {
        let body = self.encode_body();
        let mut out = Vec::with_capacity(FRAME_HEADER_LEN + body.len());
        out.push(WIRE_VERSION);
        out.push(self.message_type() as u8);
        out.extend_from_slice(&(body.len() as u32).to_be_bytes());
        out.extend_from_slice(&body);
        out
    }

    pub fn from_frame(frame: &[u8]) -> Result<Self, WireError> {
        let (ty, len) = parse_header(frame)?;
        let body = &frame[FRAME_HEADER_LEN..];
        if body.len() < len {
            return Err(WireError::Truncated);
        }
        if body.len() > len {
            return Err(WireError::Trailing(body.len() - len));
        }
        Self::decode_body(ty, body)
    }
}

/// Validates a frame header and returns the message type and body length.
pub fn parse_header(frame: &[u8]) -> Result<(MessageType, usize), WireError> {
    if frame.len() < FRAME_HEADER_LEN {
        return Err(WireError::Truncated);
    }
    if frame[0] != WIRE_VERSION {
        return Err(WireError::Version(frame[0]));
    }
    let ty = MessageType::from_byte(frame[1]).ok_or(WireError::UnknownType(frame[1]))?;
    let len = u32::from_be_bytes(frame[2..6].try_into().unwrap()) as usize;
    if len > MAX_FRAME_BODY {
        return Err(WireError::TooLarge(len));
    }
    Ok((ty, len))
}

#[derive(Default)]
pub(crate) struct Writer(pub Vec<u8>);

impl Writer {
    pub fn u32(&mut self, x: u32) {
        self.0.extend_from_slice(&x.to_be_bytes());
    }

    pub fn raw(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.u32(b.len() as u32);
        self.raw(b);
    }

    pub fn element<G: PrimeGroup>(&mut self, e: &Element<G>) {
        self.raw(&encode_element::<G>(e));
    }

    pub fn ciphertext<G: PrimeGroup>(&mut self, c: &Ciphertext<G>) {
        self.raw(&c.to_bytes());
    }

    pub fn ciphertexts<G: PrimeGroup>(&mut self, v: &[Ciphertext<G>]) {
        self.u32(v.len() as u32);
        for c in v {
            self.ciphertext(c);
        }
    }

    pub fn matrix<G: PrimeGroup>(&mut self, rows: &[Vec<Ciphertext<G>>]) {
        self.u32(rows.len() as u32);
        self.u32(rows.first().map_or(0, Vec::len) as u32);
        for c in rows.iter().flatten() {
            self.ciphertext(c);
        }
    }

    pub fn template_sh<G: PrimeGroup>(&mut self, t: &TemplateSh<G>) {
        self.bytes(&t.uid);
        self.matrix(&t.rows);
    }

    pub fn keypair<G: PrimeGroup>(&mut self, kp: &KeyPair<G>) {
        self.raw(&encode_scalar::<G>(kp.secret()));
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, at: 0 }
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.at
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if n > self.remaining() {
            return Err(WireError::Truncated);
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    pub fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>, WireError> {
        let n = self.u32()? as usize;
        Ok(self.take(n)?.to_vec())
    }

    /// A `u32` count of items of at least `min_size` bytes each, checked
    /// against the remaining input before anything is allocated.
    pub fn count(&mut self, min_size: usize) -> Result<usize, WireError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_size) > self.remaining() {
            return Err(WireError::Truncated);
        }
        Ok(n)
    }

    pub fn element<G: PrimeGroup>(&mut self) -> Result<Element<G>, WireError> {
        Ok(decode_element::<G>(self.take(G::ENCODING_LEN)?)?)
    }

    pub fn ciphertext<G: PrimeGroup>(&mut self, tag: KeyTag) -> Result<Ciphertext<G>, WireError> {
        Ok(Ciphertext::from_bytes(self.take(Ciphertext::<G>::encoded_len())?, tag)?)
    }

    pub fn ciphertexts<G: PrimeGroup>(&mut self, tag: KeyTag) -> Result<Vec<Ciphertext<G>>, WireError> {
        let n = self.count(Ciphertext::<G>::encoded_len())?;
        (0..n).map(|_| self.ciphertext(tag)).collect()
    }

    pub fn matrix<G: PrimeGroup>(&mut self, tag: KeyTag) -> Result<Vec<Vec<Ciphertext<G>>>, WireError> {
        let k = self.u32()? as usize;
        let n = self.u32()? as usize;
        let total = k.checked_mul(n).ok_or(WireError::Field("matrix size"))?;
        if k == 0 || n == 0 || total.saturating_mul(Ciphertext::<G>::encoded_len()) > self.remaining() {
            return Err(WireError::Truncated);
        }
        (0..k)
            .map(|_| (0..n).map(|_| self.ciphertext(tag)).collect())
            .collect()
    }

    pub fn signature<G: PrimeGroup>(&mut self) -> Result<Signature<G>, WireError> {
        Ok(Signature::from_bytes(self.take(Signature::<G>::encoded_len())?)?)
    }

    pub fn and_proof<G: PrimeGroup>(&mut self, rel: Relation, count: usize) -> Result<AndProof<G>, WireError> {
        let len = AndProof::<G>::encoded_len(rel, count);
        Ok(AndProof::from_bytes(rel, count, self.take(len)?)?)
    }

    pub fn template_sh<G: PrimeGroup>(&mut self) -> Result<TemplateSh<G>, WireError> {
        Ok(TemplateSh { uid: self.bytes()?, rows: self.matrix(KeyTag::Joint)? })
    }

    pub fn keypair<G: PrimeGroup>(&mut self, party: Party) -> Result<KeyPair<G>, WireError> {
        let s = decode_scalar::<G>(self.take(G::SCALAR_LEN)?)?;
        Ok(KeyPair::from_secret(party, s)?)
    }

    pub fn finish(&self) -> Result<(), WireError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(WireError::Trailing(n)),
        }
    }
}

/// Types persisted by [`crate::store`].
pub trait Record: Sized + Clone + Send + Sync + 'static {
    fn encode(&self) -> Vec<u8>;
    fn decode(bytes: &[u8]) -> Result<Self, WireError>;
}

impl<G: PrimeGroup> Record for ShServerRecord<G> {
    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.template_sh(&self.template);
        w.element::<G>(&self.client_public);
        w.0
    }

    fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let rec = ShServerRecord { template: r.template_sh()?, client_public: r.element::<G>()? };
        r.finish()?;
        Ok(rec)
    }
}

impl<G: PrimeGroup> TemplateSh<G> {
    /// Size of the template as sent in a template reply.
    pub fn encoded_len(&self) -> usize {
        8 + self.k() * self.n() * Ciphertext::<G>::encoded_len()
    }
}

fn component_len<G: PrimeGroup>() -> usize {
    4 + 2 * Ciphertext::<G>::encoded_len() + 2 * Signature::<G>::encoded_len()
}

impl<G: PrimeGroup> TemplateMal<G> {
    /// Size of the encoded template (all components of all features).
    pub fn encoded_len(&self) -> usize {
        8 + self.k() * self.n() * component_len::<G>()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        self.write(&mut w);
        w.0
    }

    fn write(&self, w: &mut Writer) {
        w.bytes(&self.uid);
        w.u32(self.k() as u32);
        w.u32(self.n() as u32);
        for c in self.features.iter().flatten() {
            w.u32(c.index);
            w.ciphertext(&c.col);
            w.ciphertext(&c.score);
            w.raw(&c.sigma.to_bytes());
            w.raw(&c.alpha.to_bytes());
        }
    }

    fn read(r: &mut Reader) -> Result<Self, WireError> {
        let uid = r.bytes()?;
        let k = r.u32()? as usize;
        let n = r.u32()? as usize;
        let total = k.checked_mul(n).ok_or(WireError::Field("template size"))?;
        if k == 0 || n == 0 || total.saturating_mul(component_len::<G>()) > r.remaining() {
            return Err(WireError::Truncated);
        }
        let features = (0..k)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        Ok(Component {
                            index: r.u32()?,
                            col: r.ciphertext(KeyTag::Client)?,
                            score: r.ciphertext(KeyTag::Joint)?,
                            sigma: r.signature()?,
                            alpha: r.signature()?,
                        })
                    })
                    .collect::<Result<Vec<_>, WireError>>()
            })
            .collect::<Result<_, _>>()?;
        Ok(TemplateMal { uid, features })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let t = Self::read(&mut r)?;
        r.finish()?;
        Ok(t)
    }
}

impl<G: PrimeGroup> ThresholdVector<G> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.ciphertexts(&self.0);
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let v = ThresholdVector(r.ciphertexts(KeyTag::Joint)?);
        r.finish()?;
        Ok(v)
    }
}

impl<G: PrimeGroup> Record for MalServerRecord<G> {
    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        self.template.write(&mut w);
        w.ciphertexts(&self.theta.0);
        w.element::<G>(&self.client_public);
        w.element::<G>(&self.probe_public);
        w.0
    }

    fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let rec = MalServerRecord {
            template: TemplateMal::read(&mut r)?,
            theta: ThresholdVector(r.ciphertexts(KeyTag::Joint)?),
            client_public: r.element::<G>()?,
            probe_public: r.element::<G>()?,
        };
        r.finish()?;
        Ok(rec)
    }
}

impl<G: PrimeGroup> Record for ShClientCredential<G> {
    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(&self.uid);
        w.keypair(&self.keypair);
        w.element::<G>(&self.joint.server);
        w.0
    }

    fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let uid = r.bytes()?;
        let keypair = r.keypair::<G>(Party::Client)?;
        let server = r.element::<G>()?;
        r.finish()?;
        let joint = JointPublicKey::from_publics(*keypair.public(), server)?;
        Ok(ShClientCredential { uid, keypair, joint })
    }
}

impl<G: PrimeGroup> Record for MalClientCredential<G> {
    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(&self.uid);
        w.keypair(&self.keys.threshold);
        w.keypair(&self.keys.probe);
        w.raw(&self.keys.prp.0);
        w.element::<G>(&self.joint.server);
        w.ciphertexts(&self.theta.0);
        w.element::<G>(&self.enrollment_key);
        w.0
    }

    fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let uid = r.bytes()?;
        let threshold = r.keypair::<G>(Party::Client)?;
        let probe = r.keypair::<G>(Party::Client)?;
        let prp = PrpKey(r.take(PRP_KEY_LEN)?.try_into().unwrap());
        let server = r.element::<G>()?;
        let theta = ThresholdVector(r.ciphertexts(KeyTag::Joint)?);
        let enrollment_key = r.element::<G>()?;
        r.finish()?;
        let joint = JointPublicKey::from_publics(*threshold.public(), server)?;
        Ok(MalClientCredential {
            uid,
            keys: MalClientKeys { threshold, probe, prp },
            joint,
            theta,
            enrollment_key,
        })
    }
}
