//! Sigma protocols over ElGamal ciphertexts, their Fiat-Shamir compilation,
//! and AND-composition under one shared challenge.
//!
//! | relation | statement                      | witness      |
//! |----------|--------------------------------|--------------|
//! | Plain    | `(u, v) = (g^r, g^m k^r)`, `k` | `(m, r)`     |
//! | DecZero  | `v = u^s`, `k = g^s`           | `s`          |
//! | Blind    | `(a, b) = (u^r, v^r)`          | `r`          |
//! | Partial  | `c = v u^-sk`, `pk = g^sk`     | `sk`         |
//!
//! The Fiat-Shamir challenge hashes the domain tag, the full statement and
//! the commitments, in that order.

use ff::Field;
use rand::{CryptoRng, RngCore};

use crate::group::{
    decode_element, decode_scalar, encode_element, encode_scalar, generator, hash_challenge,
    lincomb_vartime, mul_g, mul_vartime,
    random_scalar, Challenge, Element, PrimeGroup, Scalar,
};
use crate::Error;

pub const TAG_PLAIN: &[u8] = b"helr/plain";
pub const TAG_DEC_ZERO: &[u8] = b"helr/deczero";
pub const TAG_BLIND: &[u8] = b"helr/blind";
pub const TAG_PARTIAL: &[u8] = b"helr/partial";
pub const TAG_AND: &[u8] = b"helr/and";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Plain,
    DecZero,
    Blind,
    Partial,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::Plain,
        Relation::DecZero,
        Relation::Blind,
        Relation::Partial,
    ];

    pub fn domain_tag(self) -> &'static [u8] {
        match self {
            Relation::Plain => TAG_PLAIN,
            Relation::DecZero => TAG_DEC_ZERO,
            Relation::Blind => TAG_BLIND,
            Relation::Partial => TAG_PARTIAL,
        }
    }

    pub fn response_count(self) -> usize {
        match self {
            Relation::Plain => 2,
            _ => 1,
        }
    }

    pub fn statement_arity(self) -> usize {
        match self {
            Relation::Plain | Relation::DecZero => 3,
            Relation::Blind | Relation::Partial => 4,
        }
    }

    fn id(self) -> u8 {
        match self {
            Relation::Plain => 1,
            Relation::DecZero => 2,
            Relation::Blind => 3,
            Relation::Partial => 4,
        }
    }

    /// Encoded size of one NIZK for this relation.
    pub fn proof_len<G: PrimeGroup>(self) -> usize {
        2 * G::ENCODING_LEN + Challenge::ENCODED_LEN + self.response_count() * G::SCALAR_LEN
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statement<G: PrimeGroup> {
    /// Knowledge of the plaintext of `(u, v)` under `key`.
    Plain {
        key: Element<G>,
        u: Element<G>,
        v: Element<G>,
    },
    /// `(u, v)` decrypts to zero under `key`.
    DecZero {
        key: Element<G>,
        u: Element<G>,
        v: Element<G>,
    },
    /// `(a, b)` is `(u, v)` raised to a common exponent.
    Blind {
        u: Element<G>,
        v: Element<G>,
        a: Element<G>,
        b: Element<G>,
    },
    /// `(u, c)` is the partial decryption of `(u, v)` under the share of `pk`.
    Partial {
        u: Element<G>,
        v: Element<G>,
        c: Element<G>,
        pk: Element<G>,
    },
}

impl<G: PrimeGroup> Statement<G> {
    pub fn relation(&self) -> Relation {
        match self {
            Statement::Plain { .. } => Relation::Plain,
            Statement::DecZero { .. } => Relation::DecZero,
            Statement::Blind { .. } => Relation::Blind,
            Statement::Partial { .. } => Relation::Partial,
        }
    }

    pub fn elements(&self) -> Vec<Element<G>> {
        match *self {
            Statement::Plain { key, u, v } | Statement::DecZero { key, u, v } => vec![key, u, v],
            Statement::Blind { u, v, a, b } => vec![u, v, a, b],
            Statement::Partial { u, v, c, pk } => vec![u, v, c, pk],
        }
    }

    pub fn from_elements(relation: Relation, e: &[Element<G>]) -> Result<Self, Error> {
        if e.len() != relation.statement_arity() {
            return Err(Error::StatementShape(relation));
        }
        Ok(match relation {
            Relation::Plain => Statement::Plain {
                key: e[0],
                u: e[1],
                v: e[2],
            },
            Relation::DecZero => Statement::DecZero {
                key: e[0],
                u: e[1],
                v: e[2],
            },
            Relation::Blind => Statement::Blind {
                u: e[0],
                v: e[1],
                a: e[2],
                b: e[3],
            },
            Relation::Partial => Statement::Partial {
                u: e[0],
                v: e[1],
                c: e[2],
                pk: e[3],
            },
        })
    }

    fn encoded_elements(&self) -> impl Iterator<Item = Vec<u8>> {
        self.elements().into_iter().map(|e| encode_element::<G>(&e))
    }

    /// Whether `witness` satisfies this statement.
    pub fn holds(&self, witness: &Witness<G>) -> bool {
        let g = generator::<G>();
        match (*self, *witness) {
            (Statement::Plain { key, u, v }, Witness::Plain { m, r }) => {
                u == g * r && v == g * m + key * r
            }
            (Statement::DecZero { key, u, v }, Witness::DecZero(s)) => key == g * s && v == u * s,
            (Statement::Blind { u, v, a, b }, Witness::Blind(r)) => a == u * r && b == v * r,
            (Statement::Partial { u, v, c, pk }, Witness::Partial(sk)) => {
                pk == g * sk && c == v - u * sk
            }
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Witness<G: PrimeGroup> {
    Plain { m: Scalar<G>, r: Scalar<G> },
    DecZero(Scalar<G>),
    Blind(Scalar<G>),
    Partial(Scalar<G>),
}

impl<G: PrimeGroup> Witness<G> {
    fn relation(&self) -> Relation {
        match self {
            Witness::Plain { .. } => Relation::Plain,
            Witness::DecZero(_) => Relation::DecZero,
            Witness::Blind(_) => Relation::Blind,
            Witness::Partial(_) => Relation::Partial,
        }
    }

    fn secrets(&self) -> Vec<Scalar<G>> {
        match *self {
            // response order: z_r, z_m
            Witness::Plain { m, r } => vec![r, m],
            Witness::DecZero(s) | Witness::Blind(s) | Witness::Partial(s) => vec![s],
        }
    }
}

/// The first move of a sigma protocol: commitment pair under fresh nonces.
fn commit<G: PrimeGroup>(stmt: &Statement<G>, nonces: &[Scalar<G>]) -> [Element<G>; 2] {
    match *stmt {
        Statement::Plain { key, .. } => {
            let (rr, rm) = (nonces[0], nonces[1]);
            [mul_g::<G>(&rr), mul_g::<G>(&rm) + key * rr]
        }
        Statement::DecZero { u, .. } | Statement::Partial { u, .. } => {
            [mul_g::<G>(&nonces[0]), u * nonces[0]]
        }
        Statement::Blind { u, v, .. } => [u * nonces[0], v * nonces[0]],
    }
}

/// Verification equations for one transcript.
pub fn check<G: PrimeGroup>(
    stmt: &Statement<G>,
    commitments: &[Element<G>; 2],
    e: &Scalar<G>,
    responses: &[Scalar<G>],
) -> bool {
    if responses.len() != stmt.relation().response_count() {
        return false;
    }
    let [c0, c1] = *commitments;
    // each side as `base * z - X * e`, compared with the commitment
    let eq = |base: Element<G>, z: &Scalar<G>, x: Element<G>, c: Element<G>| {
        lincomb_vartime::<G>(&base, z, &-x, e) == c
    };
    let eq_g = |z: &Scalar<G>, x: Element<G>, c: Element<G>| {
        mul_g::<G>(z) + mul_vartime::<G>(&-x, e) == c
    };
    match *stmt {
        Statement::Plain { key, u, v } => {
            let (zr, zm) = (responses[0], responses[1]);
            eq_g(&zr, u, c0) && lincomb_vartime::<G>(&key, &zr, &-v, e) + mul_g::<G>(&zm) == c1
        }
        Statement::DecZero { key, u, v } => {
            let z = responses[0];
            eq_g(&z, key, c0) && eq(u, &z, v, c1)
        }
        Statement::Blind { u, v, a, b } => {
            let z = responses[0];
            eq(u, &z, a, c0) && eq(v, &z, b, c1)
        }
        Statement::Partial { u, v, c, pk } => {
            let z = responses[0];
            eq_g(&z, pk, c0) && eq(u, &z, v - c, c1)
        }
    }
}

/// Interactive prover holding its nonces between commitment and response.
pub struct Prover<G: PrimeGroup> {
    statement: Statement<G>,
    witness: Witness<G>,
    nonces: Vec<Scalar<G>>,
    commitments: [Element<G>; 2],
}

impl<G: PrimeGroup> Prover<G> {
    pub fn commit<R: RngCore + CryptoRng>(
        statement: Statement<G>,
        witness: Witness<G>,
        rng: &mut R,
    ) -> Result<Self, Error> {
        let relation = statement.relation();
        if witness.relation() != relation {
            return Err(Error::StatementShape(relation));
        }
        let nonces: Vec<_> = (0..relation.response_count())
            .map(|_| random_scalar::<G, _>(rng))
            .collect();
        let commitments = commit(&statement, &nonces);
        Ok(Self {
            statement,
            witness,
            nonces,
            commitments,
        })
    }

    pub fn commitments(&self) -> &[Element<G>; 2] {
        &self.commitments
    }

    pub fn statement(&self) -> &Statement<G> {
        &self.statement
    }

    /// `z = r' + e * secret` for each secret.
    pub fn respond(&self, e: &Scalar<G>) -> Vec<Scalar<G>> {
        self.nonces
            .iter()
            .zip(self.witness.secrets())
            .map(|(n, s)| *n + *e * s)
            .collect()
    }

    pub fn transcript(&self, e: Scalar<G>) -> Transcript<G> {
        Transcript {
            commitments: self.commitments,
            challenge: e,
            responses: self.respond(&e),
        }
    }
}

/// An interactive transcript with an arbitrary scalar challenge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript<G: PrimeGroup> {
    pub commitments: [Element<G>; 2],
    pub challenge: Scalar<G>,
    pub responses: Vec<Scalar<G>>,
}

impl<G: PrimeGroup> Transcript<G> {
    pub fn verifies(&self, stmt: &Statement<G>) -> bool {
        check(stmt, &self.commitments, &self.challenge, &self.responses)
    }
}

/// Honest-verifier simulator: picks responses first, then solves for the
/// commitments that make the transcript accept under `e`.
pub fn simulate<G: PrimeGroup, R: RngCore + CryptoRng>(
    stmt: &Statement<G>,
    e: Scalar<G>,
    rng: &mut R,
) -> Transcript<G> {
    let g = mul_g::<G>;
    let responses: Vec<_> = (0..stmt.relation().response_count())
        .map(|_| random_scalar::<G, _>(rng))
        .collect();
    let commitments = match *stmt {
        Statement::Plain { key, u, v } => {
            let (zr, zm) = (responses[0], responses[1]);
            [g(&zr) - u * e, g(&zm) + key * zr - v * e]
        }
        Statement::DecZero { key, u, v } => {
            let z = responses[0];
            [g(&z) - key * e, u * z - v * e]
        }
        Statement::Blind { u, v, a, b } => {
            let z = responses[0];
            [u * z - a * e, v * z - b * e]
        }
        Statement::Partial { u, v, c, pk } => {
            let z = responses[0];
            [g(&z) - pk * e, u * z - (v - c) * e]
        }
    };
    Transcript {
        commitments,
        challenge: e,
        responses,
    }
}

/// Special-soundness extractor: two accepting transcripts sharing their
/// commitments under distinct challenges yield `(z1 - z2) / (e1 - e2)`.
pub fn extract<G: PrimeGroup>(
    stmt: &Statement<G>,
    t1: &Transcript<G>,
    t2: &Transcript<G>,
) -> Option<Witness<G>> {
    if t1.commitments != t2.commitments || !t1.verifies(stmt) || !t2.verifies(stmt) {
        return None;
    }
    let de: Option<Scalar<G>> = (t1.challenge - t2.challenge).invert().into();
    let de = de?;
    let solve = |i: usize| (t1.responses[i] - t2.responses[i]) * de;
    Some(match stmt.relation() {
        Relation::Plain => Witness::Plain {
            r: solve(0),
            m: solve(1),
        },
        Relation::DecZero => Witness::DecZero(solve(0)),
        Relation::Blind => Witness::Blind(solve(0)),
        Relation::Partial => Witness::Partial(solve(0)),
    })
}

fn encode_commitments<G: PrimeGroup>(c: &[Element<G>; 2]) -> [Vec<u8>; 2] {
    [encode_element::<G>(&c[0]), encode_element::<G>(&c[1])]
}

fn single_challenge<G: PrimeGroup>(stmt: &Statement<G>, commitments: &[Element<G>; 2]) -> Challenge {
    let inputs = stmt
        .encoded_elements()
        .chain(encode_commitments::<G>(commitments));
    hash_challenge(stmt.relation().domain_tag(), inputs)
}

/// A non-interactive proof for one statement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NizkProof<G: PrimeGroup> {
    pub commitments: [Element<G>; 2],
    pub challenge: Challenge,
    pub responses: Vec<Scalar<G>>,
}

impl<G: PrimeGroup> NizkProof<G> {
    /// Commitments, then challenge, then responses; all fixed length.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for c in encode_commitments::<G>(&self.commitments) {
            out.extend_from_slice(&c);
        }
        out.extend_from_slice(&self.challenge.to_bytes());
        for z in &self.responses {
            out.extend_from_slice(&encode_scalar::<G>(z));
        }
        out
    }

    pub fn from_bytes(relation: Relation, bytes: &[u8]) -> Result<Self, Error> {
        if bytes.len() != relation.proof_len::<G>() {
            return Err(Error::Decode("proof length"));
        }
        let el = G::ENCODING_LEN;
        let commitments = [
            decode_element::<G>(&bytes[..el])?,
            decode_element::<G>(&bytes[el..2 * el])?,
        ];
        let rest = &bytes[2 * el..];
        let challenge = Challenge::from_bytes(&rest[..Challenge::ENCODED_LEN])?;
        let responses = rest[Challenge::ENCODED_LEN..]
            .chunks(G::SCALAR_LEN)
            .map(decode_scalar::<G>)
            .collect::<Result<_, _>>()?;
        Ok(Self {
            commitments,
            challenge,
            responses,
        })
    }
}

pub fn prove<G: PrimeGroup, R: RngCore + CryptoRng>(
    stmt: &Statement<G>,
    witness: &Witness<G>,
    rng: &mut R,
) -> Result<NizkProof<G>, Error> {
    let prover = Prover::commit(*stmt, *witness, rng)?;
    let challenge = single_challenge(stmt, prover.commitments());
    Ok(NizkProof {
        commitments: prover.commitments,
        challenge,
        responses: prover.respond(&challenge.to_scalar::<G>()),
    })
}

pub fn verify<G: PrimeGroup>(stmt: &Statement<G>, proof: &NizkProof<G>) -> bool {
    single_challenge(stmt, &proof.commitments) == proof.challenge
        && check(
            stmt,
            &proof.commitments,
            &proof.challenge.to_scalar::<G>(),
            &proof.responses,
        )
}

pub fn prove_plain<G: PrimeGroup, R: RngCore + CryptoRng>(
    key: Element<G>,
    (u, v): (Element<G>, Element<G>),
    m: Scalar<G>,
    r: Scalar<G>,
    rng: &mut R,
) -> NizkProof<G> {
    prove(&Statement::Plain { key, u, v }, &Witness::Plain { m, r }, rng)
        .expect("witness shape matches")
}

pub fn prove_dec_zero<G: PrimeGroup, R: RngCore + CryptoRng>(
    key: Element<G>,
    (u, v): (Element<G>, Element<G>),
    s: Scalar<G>,
    rng: &mut R,
) -> NizkProof<G> {
    prove(&Statement::DecZero { key, u, v }, &Witness::DecZero(s), rng)
        .expect("witness shape matches")
}

pub fn prove_blind<G: PrimeGroup, R: RngCore + CryptoRng>(
    (u, v): (Element<G>, Element<G>),
    (a, b): (Element<G>, Element<G>),
    r: Scalar<G>,
    rng: &mut R,
) -> NizkProof<G> {
    prove(&Statement::Blind { u, v, a, b }, &Witness::Blind(r), rng)
        .expect("witness shape matches")
}

pub fn prove_partial<G: PrimeGroup, R: RngCore + CryptoRng>(
    (u, v): (Element<G>, Element<G>),
    c: Element<G>,
    pk: Element<G>,
    sk: Scalar<G>,
    rng: &mut R,
) -> NizkProof<G> {
    prove(&Statement::Partial { u, v, c, pk }, &Witness::Partial(sk), rng)
        .expect("witness shape matches")
}

/// Several sigma proofs bound by one challenge.
///
/// A batch of one is encoded and hashed exactly like the single [`NizkProof`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AndProof<G: PrimeGroup> {
    pub commitments: Vec<[Element<G>; 2]>,
    pub challenge: Challenge,
    pub responses: Vec<Vec<Scalar<G>>>,
}

fn and_challenge<G: PrimeGroup>(
    statements: &[Statement<G>],
    commitments: &[[Element<G>; 2]],
) -> Challenge {
    if let ([stmt], [c]) = (statements, commitments) {
        return single_challenge(stmt, c);
    }
    let mut inputs: Vec<Vec<u8>> = Vec::with_capacity(statements.len() * 7);
    for stmt in statements {
        inputs.push(vec![stmt.relation().id()]);
        inputs.extend(stmt.encoded_elements());
    }
    for c in commitments {
        inputs.extend(encode_commitments::<G>(c));
    }
    hash_challenge(TAG_AND, inputs)
}

pub fn and_compose<G: PrimeGroup, R: RngCore + CryptoRng>(
    statements: &[Statement<G>],
    witnesses: &[Witness<G>],
    rng: &mut R,
) -> Result<AndProof<G>, Error> {
    if statements.len() != witnesses.len() {
        return Err(Error::LengthMismatch {
            expected: statements.len(),
            got: witnesses.len(),
        });
    }
    if statements.is_empty() {
        return Err(Error::InsufficientData("empty AND proof"));
    }
    // all commitments must exist before the shared challenge is hashed
    let provers = statements
        .iter()
        .zip(witnesses)
        .map(|(s, w)| Prover::commit(*s, *w, rng))
        .collect::<Result<Vec<_>, _>>()?;
    let commitments: Vec<_> = provers.iter().map(|p| p.commitments).collect();
    let challenge = and_challenge(statements, &commitments);
    let e = challenge.to_scalar::<G>();
    let responses = provers.iter().map(|p| p.respond(&e)).collect();
    Ok(AndProof {
        commitments,
        challenge,
        responses,
    })
}

pub fn verify_and<G: PrimeGroup>(statements: &[Statement<G>], proof: &AndProof<G>) -> bool {
    if statements.is_empty()
        || statements.len() != proof.commitments.len()
        || statements.len() != proof.responses.len()
    {
        return false;
    }
    if and_challenge(statements, &proof.commitments) != proof.challenge {
        return false;
    }
    let e = proof.challenge.to_scalar::<G>();
    statements
        .iter()
        .zip(&proof.commitments)
        .zip(&proof.responses)
        .all(|((s, c), z)| check(s, c, &e, z))
}

impl<G: PrimeGroup> AndProof<G> {
    pub fn len(&self) -> usize {
        self.commitments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commitments.is_empty()
    }

    /// For a batch of one, identical to the single proof encoding. Otherwise
    /// `count (u32 BE) || commitments || challenge || responses`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        if self.len() != 1 {
            out.extend_from_slice(&(self.len() as u32).to_be_bytes());
        }
        for c in &self.commitments {
            for e in encode_commitments::<G>(c) {
                out.extend_from_slice(&e);
            }
        }
        out.extend_from_slice(&self.challenge.to_bytes());
        for z in self.responses.iter().flatten() {
            out.extend_from_slice(&encode_scalar::<G>(z));
        }
        out
    }

    /// Decodes a homogeneous batch of `count` proofs for `relation`.
    pub fn from_bytes(relation: Relation, count: usize, bytes: &[u8]) -> Result<Self, Error> {
        if count == 0 {
            return Err(Error::Decode("empty AND proof"));
        }
        if count == 1 {
            let p = NizkProof::<G>::from_bytes(relation, bytes)?;
            return Ok(Self {
                commitments: vec![p.commitments],
                challenge: p.challenge,
                responses: vec![p.responses],
            });
        }
        let el = G::ENCODING_LEN;
        let per = relation.response_count();
        let expected = 4 + count * (2 * el + per * G::SCALAR_LEN) + Challenge::ENCODED_LEN;
        if bytes.len() != expected {
            return Err(Error::Decode("AND proof length"));
        }
        let declared = u32::from_be_bytes(bytes[..4].try_into().unwrap()) as usize;
        if declared != count {
            return Err(Error::Decode("AND proof count"));
        }
        let mut at = 4;
        let mut commitments = Vec::with_capacity(count);
        for _ in 0..count {
            let c0 = decode_element::<G>(&bytes[at..at + el])?;
            let c1 = decode_element::<G>(&bytes[at + el..at + 2 * el])?;
            commitments.push([c0, c1]);
            at += 2 * el;
        }
        let challenge = Challenge::from_bytes(&bytes[at..at + Challenge::ENCODED_LEN])?;
        at += Challenge::ENCODED_LEN;
        let mut responses = Vec::with_capacity(count);
        for _ in 0..count {
            let z = (0..per)
                .map(|i| {
                    let s = at + i * G::SCALAR_LEN;
                    decode_scalar::<G>(&bytes[s..s + G::SCALAR_LEN])
                })
                .collect::<Result<Vec<_>, _>>()?;
            at += per * G::SCALAR_LEN;
            responses.push(z);
        }
        Ok(Self {
            commitments,
            challenge,
            responses,
        })
    }

    pub fn encoded_len(relation: Relation, count: usize) -> usize {
        if count == 1 {
            relation.proof_len::<G>()
        } else {
            4 + count * (2 * G::ENCODING_LEN + relation.response_count() * G::SCALAR_LEN)
                + Challenge::ENCODED_LEN
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elgamal::{
        blind, encrypt, encrypt_random, partial_decrypt, sub, KeyPair, Party,
    };
    use crate::group::{random_nonzero_scalar, scalar_from_i64, P256};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type G = P256;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(2024)
    }

    fn dec_zero_statement(rng: &mut ChaCha20Rng, a: i64, b: i64) -> (Statement<G>, Scalar<G>) {
        let kp = KeyPair::<G>::generate(Party::Client, rng);
        let key = kp.encryption_key();
        let d = sub(&encrypt_random(&key, a, rng), &encrypt_random(&key, b, rng)).unwrap();
        (
            Statement::DecZero {
                key: *kp.public(),
                u: d.u,
                v: d.v,
            },
            *kp.secret(),
        )
    }

    #[test]
    fn plain_completeness_and_wrong_witness() {
        let mut rng = rng();
        let kp = KeyPair::<G>::generate(Party::Client, &mut rng);
        let r = random_scalar::<G, _>(&mut rng);
        let c = encrypt(&kp.encryption_key(), 9, &r);
        let m = scalar_from_i64::<G>(9);
        let p = prove_plain::<G, _>(*kp.public(), (c.u, c.v), m, r, &mut rng);
        let stmt = Statement::<G>::Plain {
            key: *kp.public(),
            u: c.u,
            v: c.v,
        };
        assert!(verify(&stmt, &p));
        let bad = prove_plain::<G, _>(*kp.public(), (c.u, c.v), scalar_from_i64::<G>(8), r, &mut rng);
        assert!(!verify(&stmt, &bad));
    }

    #[test]
    fn dec_zero_completeness_and_negative() {
        let mut rng = rng();
        let (stmt, s) = dec_zero_statement(&mut rng, 7, 7);
        let p = prove(&stmt, &Witness::DecZero(s), &mut rng).unwrap();
        assert!(verify(&stmt, &p));
        let (stmt, s) = dec_zero_statement(&mut rng, 7, 8);
        let p = prove(&stmt, &Witness::DecZero(s), &mut rng).unwrap();
        assert!(!verify(&stmt, &p));
    }

    #[test]
    fn blind_negative_with_mixed_exponents() {
        let mut rng = rng();
        let kp = KeyPair::<G>::generate(Party::Server, &mut rng);
        let c = encrypt_random(&kp.encryption_key(), 3, &mut rng);
        let r1 = random_nonzero_scalar::<G, _>(&mut rng);
        let r2 = random_nonzero_scalar::<G, _>(&mut rng);
        let good = blind(&c, &r1).unwrap();
        assert!(verify::<G>(
            &Statement::Blind {
                u: c.u,
                v: c.v,
                a: good.u,
                b: good.v
            },
            &prove_blind((c.u, c.v), (good.u, good.v), r1, &mut rng)
        ));
        let (a, b) = (c.u * r1, c.v * r2);
        let p = prove_blind::<G, _>((c.u, c.v), (a, b), r1, &mut rng);
        assert!(!verify(&Statement::Blind { u: c.u, v: c.v, a, b }, &p));
    }

    #[test]
    fn partial_negative_with_other_key() {
        let mut rng = rng();
        let ser = KeyPair::<G>::generate(Party::Server, &mut rng);
        let c = encrypt_random(&ser.encryption_key(), 1, &mut rng);
        let pd = partial_decrypt(&ser, &c);
        let stmt = Statement::<G>::Partial {
            u: c.u,
            v: c.v,
            c: pd.v,
            pk: *ser.public(),
        };
        assert!(verify(
            &stmt,
            &prove_partial((c.u, c.v), pd.v, *ser.public(), *ser.secret(), &mut rng)
        ));
        let other = random_nonzero_scalar::<G, _>(&mut rng);
        let forged = c.v - c.u * other;
        let stmt = Statement::<G>::Partial {
            u: c.u,
            v: c.v,
            c: forged,
            pk: *ser.public(),
        };
        let p = prove_partial((c.u, c.v), forged, *ser.public(), *ser.secret(), &mut rng);
        assert!(!verify(&stmt, &p));
    }

    #[test]
    fn extractor_recovers_dec_zero_key() {
        let mut rng = rng();
        let (stmt, s) = dec_zero_statement(&mut rng, 4, 4);
        let prover = Prover::commit(stmt, Witness::DecZero(s), &mut rng).unwrap();
        let t1 = prover.transcript(random_scalar::<G, _>(&mut rng));
        let t2 = prover.transcript(random_scalar::<G, _>(&mut rng));
        assert_eq!(extract(&stmt, &t1, &t2), Some(Witness::DecZero(s)));
        // identical challenges are useless
        assert_eq!(extract(&stmt, &t1, &t1), None);
    }

    #[test]
    fn simulated_transcripts_verify() {
        let mut rng = rng();
        let (stmt, _) = dec_zero_statement(&mut rng, 2, 2);
        let e = random_scalar::<G, _>(&mut rng);
        assert!(simulate(&stmt, e, &mut rng).verifies(&stmt));
    }

    #[test]
    fn mismatched_witness_shape_is_error() {
        let mut rng = rng();
        let (stmt, s) = dec_zero_statement(&mut rng, 1, 1);
        assert_eq!(
            prove(&stmt, &Witness::Blind(s), &mut rng),
            Err(Error::StatementShape(Relation::DecZero))
        );
    }

    #[test]
    fn and_of_one_equals_single() {
        let mut rng = rng();
        let (stmt, s) = dec_zero_statement(&mut rng, 5, 5);
        let mut r1 = ChaCha20Rng::seed_from_u64(1);
        let mut r2 = ChaCha20Rng::seed_from_u64(1);
        let single = prove(&stmt, &Witness::DecZero(s), &mut r1).unwrap();
        let batch = and_compose(&[stmt], &[Witness::DecZero(s)], &mut r2).unwrap();
        assert_eq!(batch.to_bytes(), single.to_bytes());
        assert!(verify_and(&[stmt], &batch));
    }

    #[test]
    fn and_batch_with_corruption_fails() {
        let mut rng = rng();
        let mut stmts = Vec::new();
        let mut wits = Vec::new();
        for i in 0..5 {
            let (st, s) = dec_zero_statement(&mut rng, i, i);
            stmts.push(st);
            wits.push(Witness::DecZero(s));
        }
        let mut proof = and_compose(&stmts, &wits, &mut rng).unwrap();
        assert!(verify_and(&stmts, &proof));
        let bytes = proof.to_bytes();
        assert_eq!(bytes.len(), AndProof::<G>::encoded_len(Relation::DecZero, 5));
        assert_eq!(
            AndProof::<G>::from_bytes(Relation::DecZero, 5, &bytes).unwrap(),
            proof
        );
        proof.responses[3][0] += Scalar::<G>::ONE;
        assert!(!verify_and(&stmts, &proof));
        assert!(!verify_and(&stmts[..4], &proof));
    }

    #[test]
    fn proof_bytes_roundtrip() {
        let mut rng = rng();
        let kp = KeyPair::<G>::generate(Party::Client, &mut rng);
        let r = random_scalar::<G, _>(&mut rng);
        let c = encrypt(&kp.encryption_key(), 1, &r);
        let p = prove_plain(*kp.public(), (c.u, c.v), scalar_from_i64::<G>(1), r, &mut rng);
        let b = p.to_bytes();
        assert_eq!(b.len(), Relation::Plain.proof_len::<G>());
        assert_eq!(NizkProof::<G>::from_bytes(Relation::Plain, &b).unwrap(), p);
        assert!(NizkProof::<G>::from_bytes(Relation::DecZero, &b).is_err());
    }
}
