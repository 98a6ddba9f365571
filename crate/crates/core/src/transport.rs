//! Moving frames between the two parties and driving sessions to completion.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Mutex;
use std::time::Duration;

use thiserror::Error;

use crate::elgamal::Party;
use crate::group::PrimeGroup;
use crate::protocol::{Endpoint, Outcome};
use crate::wire::{parse_header, Message, WireError, FRAME_HEADER_LEN};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    #[error("timed out waiting for a frame")]
    Timeout,
    #[error("peer closed the channel")]
    Closed,
    #[error("malformed frame: {0}")]
    Malformed(WireError),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Reliable, in-order frame delivery for one session.
pub trait Channel: Send {
    fn send(&mut self, frame: &[u8]) -> Result<(), TransportError>;
    fn recv(&mut self, timeout: Duration) -> Result<Vec<u8>, TransportError>;
}

pub struct MemoryChannel {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

/// Two connected in-process endpoints.
pub fn memory_pair() -> (MemoryChannel, MemoryChannel) {
    let (a_tx, b_rx) = mpsc::channel();
    let (b_tx, a_rx) = mpsc::channel();
    (MemoryChannel { tx: a_tx, rx: a_rx }, MemoryChannel { tx: b_tx, rx: b_rx })
}

impl Channel for MemoryChannel {
    fn send(&mut self, frame: &[u8]) -> Result<(), TransportError> {
        self.tx.send(frame.to_vec()).map_err(|_| TransportError::Closed)
    }

    fn recv(&mut self, timeout: Duration) -> Result<Vec<u8>, TransportError> {
        self.rx.recv_timeout(timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => TransportError::Timeout,
            RecvTimeoutError::Disconnected => TransportError::Closed,
        })
    }
}

/// Length-prefixed frames over a TCP stream.
pub struct TcpChannel {
    stream: TcpStream,
}

impl TcpChannel {
    pub fn new(stream: TcpStream) -> Result<Self, TransportError> {
        stream.set_nodelay(true).map_err(io_err)?;
        Ok(Self { stream })
    }

    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, TransportError> {
        Self::new(TcpStream::connect(addr).map_err(io_err)?)
    }
}

fn io_err(e: std::io::Error) -> TransportError {
    match e.kind() {
        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut => TransportError::Timeout,
        std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::ConnectionReset => {
            TransportError::Closed
        }
        _ => TransportError::Io(e.to_string()),
    }
}

impl Channel for TcpChannel {
    fn send(&mut self, frame: &[u8]) -> Result<(), TransportError> {
        self.stream.write_all(frame).map_err(io_err)
    }

    fn recv(&mut self, timeout: Duration) -> Result<Vec<u8>, TransportError> {
        self.stream.set_read_timeout(Some(timeout)).map_err(io_err)?;
        let mut frame = vec![0u8; FRAME_HEADER_LEN];
        self.stream.read_exact(&mut frame).map_err(io_err)?;
        let (_, len) = parse_header(&frame).map_err(TransportError::Malformed)?;
        frame.resize(FRAME_HEADER_LEN + len, 0);
        self.stream.read_exact(&mut frame[FRAME_HEADER_LEN..]).map_err(io_err)?;
        Ok(frame)
    }
}

/// Silently discards the `drop_at`-th frame sent (0-based).
pub struct Lossy<C> {
    inner: C,
    drop_at: usize,
    sent: usize,
}

impl<C: Channel> Lossy<C> {
    pub fn new(inner: C, drop_at: usize) -> Self {
        Self { inner, drop_at, sent: 0 }
    }
}

impl<C: Channel> Channel for Lossy<C> {
    fn send(&mut self, frame: &[u8]) -> Result<(), TransportError> {
        let i = self.sent;
        self.sent += 1;
        if i == self.drop_at {
            return Ok(());
        }
        self.inner.send(frame)
    }

    fn recv(&mut self, timeout: Duration) -> Result<Vec<u8>, TransportError> {
        self.inner.recv(timeout)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    ClientToServer,
    ServerToClient,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub direction: Direction,
    pub frame: Vec<u8>,
}

/// Every frame sent in a session, in send order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn frames(&self, direction: Direction) -> impl Iterator<Item = &[u8]> {
        self.entries
            .iter()
            .filter(move |e| e.direction == direction)
            .map(|e| e.frame.as_slice())
    }

    /// Number of maximal runs of frames in one direction.
    pub fn flights(&self) -> usize {
        let mut n = 0;
        let mut last = None;
        for e in &self.entries {
            if last != Some(e.direction) {
                n += 1;
                last = Some(e.direction);
            }
        }
        n
    }

    pub fn total_bytes(&self) -> usize {
        self.entries.iter().map(|e| e.frame.len()).sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("{0:?} timed out")]
    Timeout(Party),
    #[error("{0:?} received a malformed frame: {1}")]
    Malformed(Party, WireError),
    #[error("{0:?} transport failure: {1}")]
    Transport(Party, String),
}

impl SessionError {
    fn rank(&self) -> u8 {
        match self {
            SessionError::Malformed(..) => 0,
            SessionError::Timeout(_) => 1,
            SessionError::Transport(..) => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionResult {
    pub client: Outcome,
    pub server: Outcome,
    pub transcript: Transcript,
}

fn drive<G: PrimeGroup, E: Endpoint<G> + ?Sized>(
    endpoint: &mut E,
    channel: &mut dyn Channel,
    timeout: Duration,
    party: Party,
    log: &Mutex<Vec<TranscriptEntry>>,
) -> Result<(), SessionError> {
    let direction = match party {
        Party::Client => Direction::ClientToServer,
        Party::Server => Direction::ServerToClient,
    };
    // a terminal endpoint may find the peer already gone; its last frames
    // (typically an abort notice) are then dropped
    let send = |msgs: Vec<Message<G>>, channel: &mut dyn Channel, terminal: bool| -> Result<(), SessionError> {
        for m in msgs {
            let frame = m.to_frame();
            // log before sending so the transcript order matches causality
            log.lock().unwrap().push(TranscriptEntry { direction, frame: frame.clone() });
            match channel.send(&frame) {
                Ok(()) => {}
                Err(TransportError::Closed) if terminal => return Ok(()),
                Err(e) => return Err(SessionError::Transport(party, e.to_string())),
            }
        }
        Ok(())
    };
    let first = endpoint.start();
    send(first, channel, endpoint.outcome().is_terminal())?;
    while !endpoint.outcome().is_terminal() {
        let frame = channel.recv(timeout).map_err(|e| match e {
            TransportError::Timeout => SessionError::Timeout(party),
            TransportError::Malformed(w) => SessionError::Malformed(party, w),
            other => SessionError::Transport(party, other.to_string()),
        })?;
        let msg = Message::<G>::from_frame(&frame).map_err(|w| SessionError::Malformed(party, w))?;
        let reply = endpoint.on_message(msg);
        send(reply, channel, endpoint.outcome().is_terminal())?;
    }
    Ok(())
}

/// Runs client and server on their own threads until both reach a terminal
/// state. Aborts are outcomes; timeouts and malformed frames are errors.
pub fn run_session<G, C, S>(
    client: &mut C,
    server: &mut S,
    mut client_channel: impl Channel,
    mut server_channel: impl Channel,
    timeout: Duration,
) -> Result<SessionResult, SessionError>
where
    G: PrimeGroup,
    C: Endpoint<G> + ?Sized,
    S: Endpoint<G> + ?Sized,
{
    let log = Mutex::new(Vec::new());
    let server_ref = &mut *server;
    let (rc, rs) = std::thread::scope(|s| {
        let log = &log;
        let hs = s.spawn(move || {
            let r = drive::<G, S>(server_ref, &mut server_channel, timeout, Party::Server, log);
            drop(server_channel);
            r
        });
        let rc = drive::<G, C>(client, &mut client_channel, timeout, Party::Client, log);
        drop(client_channel);
        (rc, hs.join().expect("server thread panicked"))
    });
    let mut errors: Vec<SessionError> = [rc, rs].into_iter().filter_map(Result::err).collect();
    errors.sort_by_key(SessionError::rank);
    if let Some(e) = errors.into_iter().next() {
        return Err(e);
    }
    Ok(SessionResult {
        client: client.outcome(),
        server: server.outcome(),
        transcript: Transcript { entries: log.into_inner().unwrap() },
    })
}

/// Runs a session on the calling thread, delivering frames one at a time in
/// send order. Frames addressed to a party that already finished are dropped,
/// as a closed channel would. Suited to targets without threads.
pub fn run_lockstep<G, C, S>(client: &mut C, server: &mut S) -> Result<SessionResult, SessionError>
where
    G: PrimeGroup,
    C: Endpoint<G> + ?Sized,
    S: Endpoint<G> + ?Sized,
{
    let mut log = Vec::new();
    let mut queue = VecDeque::new();
    let mut post = |direction: Direction, msgs: Vec<Message<G>>, queue: &mut VecDeque<(Direction, Vec<u8>)>| {
        for m in msgs {
            let frame = m.to_frame();
            log.push(TranscriptEntry { direction, frame: frame.clone() });
            queue.push_back((direction, frame));
        }
    };
    post(Direction::ClientToServer, client.start(), &mut queue);
    post(Direction::ServerToClient, server.start(), &mut queue);
    while let Some((direction, frame)) = queue.pop_front() {
        let (party, reply_dir) = match direction {
            Direction::ClientToServer => (Party::Server, Direction::ServerToClient),
            Direction::ServerToClient => (Party::Client, Direction::ClientToServer),
        };
        let msg = Message::<G>::from_frame(&frame).map_err(|w| SessionError::Malformed(party, w))?;
        let reply = match party {
            Party::Server if !server.outcome().is_terminal() => server.on_message(msg),
            Party::Client if !client.outcome().is_terminal() => client.on_message(msg),
            _ => continue,
        };
        post(reply_dir, reply, &mut queue);
    }
    for (party, outcome) in [(Party::Client, client.outcome()), (Party::Server, server.outcome())] {
        if !outcome.is_terminal() {
            return Err(SessionError::Timeout(party));
        }
    }
    Ok(SessionResult {
        client: client.outcome(),
        server: server.outcome(),
        transcript: Transcript { entries: log },
    })
}

/// [`run_session`] over an in-process channel pair.
pub fn run_in_memory<G, C, S>(client: &mut C, server: &mut S) -> Result<SessionResult, SessionError>
where
    G: PrimeGroup,
    C: Endpoint<G> + ?Sized,
    S: Endpoint<G> + ?Sized,
{
    let (a, b) = memory_pair();
    run_session::<G, C, S>(client, server, a, b, DEFAULT_TIMEOUT)
}

/// [`run_session`] over a loopback TCP connection.
pub fn run_over_tcp<G, C, S>(client: &mut C, server: &mut S) -> Result<SessionResult, SessionError>
where
    G: PrimeGroup,
    C: Endpoint<G> + ?Sized,
    S: Endpoint<G> + ?Sized,
{
    let tcp = |e: std::io::Error| SessionError::Transport(Party::Server, e.to_string());
    let listener = TcpListener::bind("127.0.0.1:0").map_err(tcp)?;
    let addr = listener.local_addr().map_err(tcp)?;
    let client_channel = TcpChannel::connect(addr)
        .map_err(|e| SessionError::Transport(Party::Client, e.to_string()))?;
    let (stream, _) = listener.accept().map_err(tcp)?;
    let server_channel =
        TcpChannel::new(stream).map_err(|e| SessionError::Transport(Party::Server, e.to_string()))?;
    run_session::<G, C, S>(client, server, client_channel, server_channel, DEFAULT_TIMEOUT)
}

/// Feeds the server-to-client frames of a recorded session into a fresh
/// client and returns its outcome.
pub fn replay_client<G: PrimeGroup, E: Endpoint<G> + ?Sized>(
    client: &mut E,
    transcript: &Transcript,
) -> Result<Outcome, WireError> {
    client.start();
    for frame in transcript.frames(Direction::ServerToClient) {
        client.on_message(Message::<G>::from_frame(frame)?);
    }
    Ok(client.outcome())
}
