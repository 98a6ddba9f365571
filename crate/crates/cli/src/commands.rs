use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use helr::attacks::{run_attack, AttackOutcome, AttackParams, Script};
use helr::bench::{run_bench, BenchConfig};
use helr::classifier::files::{read_features, read_tables, write_features, write_tables};
use helr::classifier::{
    build_tables, calibrate_threshold, det_metrics, estimate_model, exact_llr, synth_pairs,
    synth_probe_for, FeatureModel, LabeledPair, FeaturePair, LookupTableSet, Provenance,
};
use helr::elgamal::{JointPublicKey, KeyPair, Party};
use helr::group::{PrimeGroup, SecurityLevel};
use helr::protocol::malicious::{enroll_user, MalClient, MalServer};
use helr::protocol::semi_honest::{accept_enrollment_sh, enroll_sh, ShClient, ShClientCredential, ShServer};
use helr::protocol::{Decision, Endpoint, Outcome, Protocol};
use helr::scenario::{child_rng, Scenario};
use helr::store::TemplateStore;
use helr::transport::{run_in_memory, run_over_tcp, SessionError, SessionResult};
use helr::with_group;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::config::{Config, ConfigError, TransportKind};
use crate::state::{stored_level, Layout, ServerKeys};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok,
    NoMatch,
    Abort,
    Deviation,
}

impl From<Exit> for ExitCode {
    fn from(e: Exit) -> Self {
        ExitCode::from(match e {
            Exit::Ok => 0,
            Exit::NoMatch => 3,
            Exit::Abort => 4,
            Exit::Deviation => 5,
        })
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration: {m}"),
            CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<helr::Error> for CliError {
    fn from(e: helr::Error) -> Self {
        use helr::Error as E;
        match e {
            E::InvalidParameter(_)
            | E::UnsupportedLevel(_)
            | E::LengthMismatch { .. }
            | E::OutOfRange { .. }
            | E::InvalidRange { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub enum ModelSource {
    Rho(Vec<f64>),
    RhoRange(f64, f64),
    Training(PathBuf),
}

pub fn model_path(tables: &Path) -> PathBuf {
    let mut p = tables.as_os_str().to_owned();
    p.push(".model");
    PathBuf::from(p)
}

fn build_model(k: usize, source: ModelSource, rng: &mut ChaCha20Rng) -> Result<FeatureModel, CliError> {
    match source {
        ModelSource::Rho(r) if r.len() == 1 => Ok(FeatureModel::uniform(k, r[0])?),
        ModelSource::Rho(r) if r.len() == k => Ok(FeatureModel::new(r, Provenance::Synthetic)?),
        ModelSource::Rho(r) => Err(CliError::Config(format!("--rho has {} values, k is {k}", r.len()))),
        ModelSource::RhoRange(lo, hi) => {
            let u = Uniform::new_inclusive(lo, hi);
            Ok(FeatureModel::new((0..k).map(|_| u.sample(rng)).collect(), Provenance::Synthetic)?)
        }
        ModelSource::Training(path) => {
            let (dim, rows) = read_features(&path).map_err(with_path(&path))?;
            if dim != k {
                return Err(CliError::Config(format!("training file has {dim} features, k is {k}")));
            }
            let pairs: Vec<LabeledPair> = rows
                .chunks_exact(2)
                .map(|c| LabeledPair { pair: FeaturePair { a: c[0].clone(), b: c[1].clone() }, genuine: true })
                .collect();
            Ok(estimate_model(&pairs)?)
        }
    }
}

fn with_path(path: &Path) -> impl Fn(helr::Error) -> CliError + '_ {
    move |e| match e {
        helr::Error::Io(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => CliError::Runtime(format!("{}: {other}", path.display())),
    }
}

fn load_tables(path: &Path) -> Result<LookupTableSet, CliError> {
    read_tables(path).map_err(with_path(path))
}

fn load_model(path: &Path) -> Result<FeatureModel, CliError> {
    let (_, rows) = read_features(path).map_err(with_path(path))?;
    let rho = rows.into_iter().next().ok_or(CliError::Config("empty model file".into()))?;
    Ok(FeatureModel::new(rho, Provenance::Synthetic)?)
}

fn first_row(path: &Path, k: usize) -> Result<Vec<f64>, CliError> {
    let (dim, rows) = read_features(path).map_err(with_path(path))?;
    if dim != k {
        return Err(CliError::Config(format!("{} has {dim} features, tables expect {k}", path.display())));
    }
    rows.into_iter().next().ok_or_else(|| CliError::Config(format!("{} has no rows", path.display())))
}

pub fn gen_tables(
    cfg: &Config,
    source: ModelSource,
    impostors: usize,
    theta: Option<i32>,
) -> Result<Exit, CliError> {
    cfg.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let model = build_model(cfg.k, source, &mut rng)?;
    let tables = build_tables(&model, cfg.n, cfg.delta)?;
    let tables = match theta {
        Some(t) => tables.with_threshold(t)?,
        None => calibrate_threshold(tables, &model, cfg.target_fmr, impostors, &mut rng)?,
    };
    write_tables(&cfg.tables, &tables)?;
    write_features(model_path(&cfg.tables), cfg.k, &[model.rho().to_vec()])?;

    println!("tables={}", cfg.tables.display());
    println!("model={}", model_path(&cfg.tables).display());
    println!("k={} n={} delta={}", tables.k(), tables.n(), tables.delta().value());
    println!("theta={} s_max={} window={}", tables.theta(), tables.s_max(), tables.window_len());
    println!("min_score={} max_score={}", tables.min_score(), tables.max_score());
    for i in 0..tables.k() {
        let t = tables.table(i);
        println!(
            "table={i} rho={:.4} min={} max={}",
            model.rho()[i],
            t.iter().min().unwrap(),
            t.iter().max().unwrap()
        );
    }
    Ok(Exit::Ok)
}

/// Refuses to mix levels within one store.
fn check_store_level(layout: &Layout, level: SecurityLevel) -> Result<(), CliError> {
    match stored_level(layout)? {
        Some(l) if l != level => Err(CliError::Config(format!("store was created at level {l}, not {level}"))),
        _ => Ok(()),
    }
}

pub fn enroll(cfg: &Config, uid: &[u8], protocols: &[Protocol], features: Option<&Path>) -> Result<Exit, CliError> {
    let layout = Layout::new(&cfg.store);
    check_store_level(&layout, cfg.level)?;
    let tables = load_tables(&cfg.tables)?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let reference = match features {
        Some(p) => first_row(p, tables.k())?,
        None => {
            let r: Vec<f64> = (0..tables.k()).map(|_| rand::Rng::sample(&mut rng, StandardNormal)).collect();
            std::fs::create_dir_all(layout.reference(uid).parent().unwrap()).map_err(helr::Error::from)?;
            write_features(layout.reference(uid), tables.k(), &[r.clone()])?;
            r
        }
    };
    with_group!(cfg.level, G => enroll_g::<G>(&layout, &tables, uid, &reference, protocols, &mut rng))?;
    println!("uid={}", String::from_utf8_lossy(uid));
    println!("level={}", cfg.level);
    for p in protocols {
        println!(
            "enrolled={} template_bytes={}",
            p.as_str(),
            helr::bench::template_bytes(cfg.level, *p, tables.k(), tables.n())
        );
    }
    Ok(Exit::Ok)
}

fn enroll_g<G: PrimeGroup>(
    layout: &Layout,
    tables: &LookupTableSet,
    uid: &[u8],
    reference: &[f64],
    protocols: &[Protocol],
    rng: &mut ChaCha20Rng,
) -> Result<(), CliError> {
    let server = ServerKeys::<G>::load_or_create(layout, rng)?;
    for p in protocols {
        match p {
            Protocol::SemiHonest => {
                let kp = KeyPair::<G>::generate(Party::Client, rng);
                let joint = JointPublicKey::from_publics(*kp.public(), *server.elgamal.public())?;
                let template = enroll_sh(uid, reference, tables, &joint, rng)?;
                accept_enrollment_sh(&layout.sh_records::<G>()?, tables, template, *kp.public())?;
                layout
                    .sh_credentials::<G>()?
                    .put(uid, ShClientCredential { uid: uid.to_vec(), keypair: kp, joint })?;
            }
            Protocol::Malicious => {
                let (record, credential) =
                    enroll_user(uid, reference, tables, *server.elgamal.public(), &server.enrollment, rng)?;
                layout.mal_records::<G>()?.put(uid, record)?;
                layout.mal_credentials::<G>()?.put(uid, credential)?;
            }
        }
    }
    Ok(())
}

pub enum ProbeSource {
    File(PathBuf),
    Genuine,
    Impostor,
}

pub fn verify(
    cfg: &Config,
    uid: &[u8],
    protocols: &[Protocol],
    probe: ProbeSource,
    early_exit: bool,
) -> Result<Exit, CliError> {
    let layout = Layout::new(&cfg.store);
    match stored_level(&layout)? {
        None => return Err(CliError::Config(format!("no store at {}", cfg.store.display()))),
        Some(l) if l != cfg.level => {
            return Err(CliError::Config(format!("store was created at level {l}, not {}", cfg.level)))
        }
        _ => {}
    }
    let tables = Arc::new(load_tables(&cfg.tables)?);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let features = match probe {
        ProbeSource::File(p) => first_row(&p, tables.k())?,
        ProbeSource::Impostor => (0..tables.k()).map(|_| rand::Rng::sample(&mut rng, StandardNormal)).collect(),
        ProbeSource::Genuine => {
            let reference = first_row(&layout.reference(uid), tables.k()).map_err(|_| {
                CliError::Config("--genuine needs a synthetically enrolled user".into())
            })?;
            let model = load_model(&model_path(&cfg.tables))?;
            synth_probe_for(&model, &reference, &mut rng)
        }
    };
    let probe = tables.quantize(&features)?;
    let reference_score = match first_row(&layout.reference(uid), tables.k()) {
        Ok(r) => Some(tables.score(&tables.quantize(&r)?, &probe)?),
        Err(_) => None,
    };
    println!("uid={}", String::from_utf8_lossy(uid));
    println!("transport={}", cfg.transport);
    if let Some(s) = reference_score {
        println!("plaintext_score={s} theta={}", tables.theta());
    }

    let mut exit = Exit::Ok;
    for &p in protocols {
        let start = Instant::now();
        let res = with_group!(cfg.level, G => verify_g::<G>(&layout, &tables, uid, p, probe.clone(), early_exit, cfg.transport, &mut rng))?;
        let elapsed = start.elapsed();
        println!(
            "protocol={} decision={} server={} flights={} bytes={} elapsed_ms={:.3}",
            p.as_str(),
            res.client,
            res.server,
            res.transcript.flights(),
            res.transcript.total_bytes(),
            elapsed.as_secs_f64() * 1e3
        );
        let this = match (res.client, res.server) {
            (Outcome::Aborted(_), _) | (_, Outcome::Aborted(_)) => Exit::Abort,
            (Outcome::Decided(Decision::NoMatch), _) => Exit::NoMatch,
            _ => Exit::Ok,
        };
        exit = worse(exit, this);
    }
    Ok(exit)
}

fn worse(a: Exit, b: Exit) -> Exit {
    let rank = |e| match e {
        Exit::Ok => 0,
        Exit::NoMatch => 1,
        Exit::Abort => 2,
        Exit::Deviation => 3,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

#[allow(clippy::too_many_arguments)]
fn verify_g<G: PrimeGroup>(
    layout: &Layout,
    tables: &Arc<LookupTableSet>,
    uid: &[u8],
    protocol: Protocol,
    probe: helr::classifier::QuantizedVector,
    early_exit: bool,
    transport: TransportKind,
    rng: &mut ChaCha20Rng,
) -> Result<SessionResult, CliError> {
    let server = ServerKeys::<G>::load(layout)?;
    let (crng, srng) = (child_rng(rng), child_rng(rng));
    let not_enrolled =
        || CliError::Config(format!("{} is not enrolled for {}", String::from_utf8_lossy(uid), protocol.as_str()));
    let (mut client, mut srv): (Box<dyn Endpoint<G>>, Box<dyn Endpoint<G>>) = match protocol {
        Protocol::SemiHonest => {
            let cred = layout.sh_credentials::<G>()?.get(uid)?.ok_or_else(not_enrolled)?;
            let store: Arc<dyn TemplateStore<_>> = Arc::new(layout.sh_records::<G>()?);
            (
                Box::new(ShClient::with_quantized(cred, tables.clone(), probe, crng).early_exit(early_exit)),
                Box::new(ShServer::new(server.elgamal, tables.clone(), store, srng)),
            )
        }
        Protocol::Malicious => {
            let cred = layout.mal_credentials::<G>()?.get(uid)?.ok_or_else(not_enrolled)?;
            let store: Arc<dyn TemplateStore<_>> = Arc::new(layout.mal_records::<G>()?);
            (
                Box::new(MalClient::with_quantized(cred, tables.clone(), probe, crng)),
                Box::new(MalServer::new(server.elgamal, tables.clone(), store, srng)),
            )
        }
    };
    Ok(match transport {
        TransportKind::InProcess => run_in_memory::<G, _, _>(&mut *client, &mut *srv)?,
        TransportKind::Tcp => run_over_tcp::<G, _, _>(&mut *client, &mut *srv)?,
    })
}

pub struct DetArgs {
    pub tables: PathBuf,
    pub model: PathBuf,
    pub genuine: usize,
    pub impostor: usize,
    pub csv: Option<PathBuf>,
    pub encrypted: usize,
    pub level: SecurityLevel,
    pub seed: u64,
}

pub fn det(a: &DetArgs) -> Result<Exit, CliError> {
    if a.genuine == 0 || a.impostor == 0 {
        return Err(CliError::Config("need at least one genuine and one impostor pair".into()));
    }
    let tables = load_tables(&a.tables)?;
    let model = load_model(&a.model)?;
    if model.k() != tables.k() {
        return Err(CliError::Config(format!("model has {} features, tables {}", model.k(), tables.k())));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(a.seed);
    let gen_pairs = synth_pairs(&model, a.genuine, true, &mut rng);
    let imp_pairs = synth_pairs(&model, a.impostor, false, &mut rng);
    let helr_scores = |pairs: &[FeaturePair]| -> Result<Vec<f64>, CliError> {
        Ok(helr::classifier::plaintext_scores(&tables, pairs)?.into_iter().map(|s| s as f64).collect())
    };
    let llr_scores =
        |pairs: &[FeaturePair]| -> Vec<f64> { pairs.iter().map(|p| exact_llr(&model, &p.a, &p.b)).collect() };

    let curve = det_metrics(&helr_scores(&gen_pairs)?, &helr_scores(&imp_pairs)?)?;
    let llr = det_metrics(&llr_scores(&gen_pairs), &llr_scores(&imp_pairs))?;
    let theta = tables.theta() as f64;
    let gen_scores = helr_scores(&gen_pairs)?;
    let imp_scores = helr_scores(&imp_pairs)?;
    let fnmr_theta = gen_scores.iter().filter(|&&s| s < theta).count() as f64 / gen_scores.len() as f64;
    let fmr_theta = imp_scores.iter().filter(|&&s| s >= theta).count() as f64 / imp_scores.len() as f64;

    println!("genuine={} impostor={}", a.genuine, a.impostor);
    println!("eer={:.6}", curve.eer);
    println!("llr_eer={:.6}", llr.eer);
    println!("fnmr_at_fmr_0.001={:.6}", curve.fnmr_at_fmr(1e-3));
    println!("theta={} fmr_at_theta={:.6} fnmr_at_theta={:.6}", tables.theta(), fmr_theta, fnmr_theta);

    if a.encrypted > 0 {
        let discrepancies = with_group!(a.level, G => encrypted_check::<G>(tables.clone(), model.clone(), a.encrypted, &mut rng))?;
        println!("encrypted_sessions={} encrypted_discrepancies={discrepancies}", a.encrypted * 2 * Protocol::ALL.len());
    }

    match &a.csv {
        Some(path) => {
            std::fs::write(path, curve.to_csv()).map_err(helr::Error::from)?;
            println!("det_csv={}", path.display());
        }
        None => {
            println!();
            print!("{}", curve.to_csv());
        }
    }
    Ok(Exit::Ok)
}

/// Runs genuine and impostor sessions for both protocols and counts
/// decisions that differ from the plaintext rule.
fn encrypted_check<G: PrimeGroup>(
    tables: LookupTableSet,
    model: FeatureModel,
    sessions: usize,
    rng: &mut ChaCha20Rng,
) -> Result<usize, CliError> {
    let mut world = Scenario::<G>::new(tables, model, rng)?;
    let reference = world.random_features(rng);
    let user = world.enroll(b"det", reference, &Protocol::ALL, rng)?;
    let mut wrong = 0;
    for i in 0..2 * sessions {
        let features = if i % 2 == 0 { world.genuine_sample(user, rng) } else { world.random_features(rng) };
        let probe = world.quantize(&features)?;
        let expected = Decision::from_bool(world.expected_match(world.plaintext_score(user, &probe)?));
        for p in Protocol::ALL {
            let res = world.run(p, user, &probe, rng)??;
            if res.client != Outcome::Decided(expected) {
                wrong += 1;
            }
        }
    }
    Ok(wrong)
}

#[allow(clippy::too_many_arguments)]
pub fn bench(
    levels: &[SecurityLevel],
    k: usize,
    n: usize,
    delta: f64,
    rho: f64,
    sessions: usize,
    threads: Option<usize>,
    protocols: Vec<Protocol>,
    seed: u64,
) -> Result<Exit, CliError> {
    Config {
        level: SecurityLevel::Bits128,
        n,
        k,
        delta,
        target_fmr: 0.5,
        tables: PathBuf::new(),
        store: PathBuf::new(),
        transport: TransportKind::InProcess,
        seed,
    }
    .validate()?;
    if sessions == 0 {
        return Err(CliError::Config("sessions must be positive".into()));
    }
    if threads == Some(0) {
        return Err(CliError::Config("threads must be positive".into()));
    }
    for &level in levels {
        let cfg = BenchConfig { level, k, n, delta, rho, sessions, protocols: protocols.clone(), seed, threads };
        for row in run_bench(&cfg)? {
            println!("{}", row.to_kv());
        }
    }
    Ok(Exit::Ok)
}

pub fn attack(
    script: Script,
    protocol: Protocol,
    level: SecurityLevel,
    seed: u64,
    params: &AttackParams,
) -> Result<Exit, CliError> {
    let report = with_group!(level, G => run_attack::<G>(script, protocol, seed, params))?;
    println!("level={level}");
    println!("{}", report.to_kv());
    Ok(match (report.as_expected(), report.outcome) {
        (false, _) => Exit::Deviation,
        (true, AttackOutcome::Aborted(_)) => Exit::Abort,
        (true, _) => Exit::Ok,
    })
}
