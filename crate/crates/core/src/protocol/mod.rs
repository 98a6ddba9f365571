//! Enrollment and verification protocols as sans-IO state machines.
//!
//! An [`Endpoint`] consumes decoded messages and returns the messages it
//! wants sent; [`crate::transport`] moves them between the two parties.

pub mod malicious;
pub mod semi_honest;

use crate::group::PrimeGroup;
use crate::wire::Message;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Protocol {
    SemiHonest,
    Malicious,
}

impl Protocol {
    pub const ALL: [Protocol; 2] = [Protocol::SemiHonest, Protocol::Malicious];

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::SemiHonest => "sh",
            Protocol::Malicious => "mal",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sh" => Ok(Protocol::SemiHonest),
            "mal" => Ok(Protocol::Malicious),
            _ => Err(crate::Error::InvalidParameter(format!("unknown protocol {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Decision {
    Match,
    NoMatch,
}

impl Decision {
    pub fn from_bool(matched: bool) -> Self {
        if matched {
            Decision::Match
        } else {
            Decision::NoMatch
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Match => "match",
            Decision::NoMatch => "no_match",
        }
    }
}

/// Which check failed. Kept local; the peer only sees a bare abort.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AbortReason {
    UnexpectedMessage,
    PeerAbort,
    UnknownUser,
    /// A message with the wrong number of entries or a mismatched user id.
    Shape,
    PlainProof,
    UnknownIndex,
    Sigma,
    DecZeroProof,
    Alpha,
    BlindProof,
    PartialProof,
}

impl AbortReason {
    /// The verification step whose check failed, where one applies.
    pub fn step(self) -> Option<u8> {
        match self {
            AbortReason::PlainProof => Some(2),
            AbortReason::UnknownIndex | AbortReason::Sigma | AbortReason::DecZeroProof => Some(3),
            AbortReason::Alpha | AbortReason::BlindProof | AbortReason::PartialProof => Some(4),
            _ => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            AbortReason::UnexpectedMessage => "unexpected_message",
            AbortReason::PeerAbort => "peer_abort",
            AbortReason::UnknownUser => "unknown_user",
            AbortReason::Shape => "shape",
            AbortReason::PlainProof => "plain_proof",
            AbortReason::UnknownIndex => "unknown_index",
            AbortReason::Sigma => "sigma_signature",
            AbortReason::DecZeroProof => "deczero_proof",
            AbortReason::Alpha => "alpha_signature",
            AbortReason::BlindProof => "blind_proof",
            AbortReason::PartialProof => "partial_proof",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pending,
    /// Client terminal state.
    Decided(Decision),
    /// Server terminal state; the server never learns the decision.
    Completed,
    Aborted(AbortReason),
}

impl Outcome {
    pub fn is_terminal(self) -> bool {
        !matches!(self, Outcome::Pending)
    }

    pub fn decision(self) -> Option<Decision> {
        match self {
            Outcome::Decided(d) => Some(d),
            _ => None,
        }
    }

    pub fn abort_reason(self) -> Option<AbortReason> {
        match self {
            Outcome::Aborted(r) => Some(r),
            _ => None,
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Pending => f.write_str("pending"),
            Outcome::Decided(d) => f.write_str(d.as_str()),
            Outcome::Completed => f.write_str("completed"),
            Outcome::Aborted(r) => write!(f, "abort:{}", r.code()),
        }
    }
}

pub trait Endpoint<G: PrimeGroup>: Send {
    /// Messages sent before anything is received.
    fn start(&mut self) -> Vec<Message<G>>;

    /// Handles one incoming message. Input after a terminal state is ignored.
    fn on_message(&mut self, msg: Message<G>) -> Vec<Message<G>>;

    fn outcome(&self) -> Outcome;
}

impl<G: PrimeGroup, E: Endpoint<G> + ?Sized> Endpoint<G> for Box<E> {
    fn start(&mut self) -> Vec<Message<G>> {
        (**self).start()
    }

    fn on_message(&mut self, msg: Message<G>) -> Vec<Message<G>> {
        (**self).on_message(msg)
    }

    fn outcome(&self) -> Outcome {
        (**self).outcome()
    }
}

/// Sets `outcome` to an abort and returns the bare wire abort.
pub(crate) fn abort<G: PrimeGroup>(outcome: &mut Outcome, reason: AbortReason) -> Vec<Message<G>> {
    *outcome = Outcome::Aborted(reason);
    vec![Message::Abort]
}

/// Common handling of input in a terminal state and of a peer abort.
/// Returns `None` when the message should be processed normally.
pub(crate) fn preamble<G: PrimeGroup>(outcome: &mut Outcome, msg: &Message<G>) -> Option<Vec<Message<G>>> {
    if outcome.is_terminal() {
        return Some(Vec::new());
    }
    if matches!(msg, Message::Abort) {
        *outcome = Outcome::Aborted(AbortReason::PeerAbort);
        return Some(Vec::new());
    }
    None
}
