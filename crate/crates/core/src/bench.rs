//! Wall-clock benchmarks of genuine verifications and template sizes.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::classifier::{build_tables, FeatureModel};
use crate::elgamal::Ciphertext;
use crate::group::{PrimeGroup, SecurityLevel};
use crate::protocol::{Outcome, Protocol};
use crate::scenario::Scenario;
use crate::signature::Signature;
use crate::{with_group, Error};

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub level: SecurityLevel,
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub rho: f64,
    pub sessions: usize,
    pub protocols: Vec<Protocol>,
    pub seed: u64,
    /// Worker threads for the parallel parts of each session; `None` keeps
    /// the global pool.
    pub threads: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            level: SecurityLevel::Bits128,
            k: 94,
            n: 64,
            delta: 1.5,
            rho: 0.85,
            sessions: 10,
            protocols: Protocol::ALL.to_vec(),
            seed: 0,
            threads: None,
        }
    }
}

/// Median and quartiles of a set of durations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub q1: Duration,
    pub median: Duration,
    pub q3: Duration,
}

impl Summary {
    pub fn of(samples: &[Duration]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_unstable();
        let at = |q: f64| {
            let pos = q * (s.len() - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            let frac = pos - lo as f64;
            s[lo].mul_f64(1.0 - frac) + s[hi].mul_f64(frac)
        };
        Some(Self { q1: at(0.25), median: at(0.5), q3: at(0.75) })
    }
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub level: SecurityLevel,
    pub protocol: Protocol,
    pub sessions: usize,
    pub matches: usize,
    pub timing: Summary,
    pub template_bytes: usize,
    pub mean_transcript_bytes: usize,
}

impl BenchRow {
    pub fn to_kv(&self) -> String {
        let ms = |d: Duration| format!("{:.3}", d.as_secs_f64() * 1e3);
        format!(
            "level={} protocol={} sessions={} matches={} median_ms={} q1_ms={} q3_ms={} template_bytes={} transcript_bytes={}",
            self.level.bits(),
            self.protocol.as_str(),
            self.sessions,
            self.matches,
            ms(self.timing.median),
            ms(self.timing.q1),
            ms(self.timing.q3),
            self.template_bytes,
            self.mean_transcript_bytes,
        )
    }
}

/// Encoded template size without the user id.
pub fn sh_template_bytes<G: PrimeGroup>(k: usize, n: usize) -> usize {
    8 + k * n * Ciphertext::<G>::encoded_len()
}

/// Encoded template size without the user id.
pub fn mal_template_bytes<G: PrimeGroup>(k: usize, n: usize) -> usize {
    8 + k * n * (4 + 2 * Ciphertext::<G>::encoded_len() + 2 * Signature::<G>::encoded_len())
}

pub fn template_bytes(level: SecurityLevel, protocol: Protocol, k: usize, n: usize) -> usize {
    with_group!(level, G => match protocol {
        Protocol::SemiHonest => sh_template_bytes::<G>(k, n),
        Protocol::Malicious => mal_template_bytes::<G>(k, n),
    })
}

fn bench_group<G: PrimeGroup>(cfg: &BenchConfig) -> Result<Vec<BenchRow>, Error> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let model = FeatureModel::uniform(cfg.k, cfg.rho)?;
    let tables = build_tables(&model, cfg.n, cfg.delta)?;
    let mut world = Scenario::<G>::new(tables, model, &mut rng)?;
    let reference = world.random_features(&mut rng);
    let user = world.enroll(b"bench", reference, &cfg.protocols, &mut rng)?;

    let mut rows = Vec::new();
    for &protocol in &cfg.protocols {
        let mut samples = Vec::with_capacity(cfg.sessions);
        let mut matches = 0;
        let mut transcript_bytes = 0;
        for _ in 0..cfg.sessions {
            let probe = world.quantize(&world.genuine_sample(user, &mut rng))?;
            let started = Instant::now();
            let result = world
                .run(protocol, user, &probe, &mut rng)?
                .map_err(|e| Error::Session(e.to_string()))?;
            samples.push(started.elapsed());
            transcript_bytes += result.transcript.total_bytes();
            match result.client {
                Outcome::Decided(crate::protocol::Decision::Match) => matches += 1,
                Outcome::Decided(_) => {}
                other => return Err(Error::Session(format!("honest session ended in {other}"))),
            }
        }
        rows.push(BenchRow {
            level: G::LEVEL,
            protocol,
            sessions: cfg.sessions,
            matches,
            timing: Summary::of(&samples).ok_or(Error::InsufficientData("no sessions"))?,
            template_bytes: template_bytes(G::LEVEL, protocol, cfg.k, cfg.n),
            mean_transcript_bytes: transcript_bytes / cfg.sessions.max(1),
        });
    }
    Ok(rows)
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, Error> {
    let run = || with_group!(cfg.level, G => bench_group::<G>(cfg));
    match cfg.threads {
        #[cfg(feature = "parallel")]
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(run),
        _ => run(),
    }
}
