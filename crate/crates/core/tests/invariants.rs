use std::time::Duration;

use helr::classifier::files::{decode_features, encode_features};
use helr::classifier::tables::{build_tables, FeatureModel, QuantizedVector};
use helr::elgamal::{
    add, blind, decrypt, encrypt_random, is_zero, joint_keygen, partial_decrypt, rerandomize, sub, KeyPair, Party,
};
use helr::group::{random_nonzero_scalar, random_scalar, P256};
use helr::prp::PrpKey;
use helr::protocol::semi_honest::ShServerRecord;
use helr::protocol::{Decision, Outcome, Protocol};
use helr::scenario::{child_rng, Scenario};
use helr::store::{FileStore, MemoryStore, TemplateStore};
use helr::transport::{
    memory_pair, replay_client, run_in_memory, run_lockstep, run_over_tcp, run_session, Lossy, SessionError,
};
use helr::wire::{parse_header, Message, Record};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type G = P256;

fn small_world(seed: u64, k: usize, n: usize) -> (Scenario<G>, usize, ChaCha20Rng) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let model = FeatureModel::uniform(k, 0.85).unwrap();
    let tables = build_tables(&model, n, 0.5).unwrap();
    let mut world = Scenario::<G>::new(tables, model, &mut rng).unwrap();
    let reference = world.random_features(&mut rng);
    let user = world.enroll(b"alice", reference, &Protocol::ALL, &mut rng).unwrap();
    (world, user, rng)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn homomorphism_matches_integer_arithmetic(a in -5000i64..5000, b in -5000i64..5000, seed: u64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let kp = KeyPair::<G>::generate(Party::Client, &mut rng);
        let key = kp.encryption_key();
        let (ca, cb) = (encrypt_random(&key, a, &mut rng), encrypt_random(&key, b, &mut rng));
        prop_assert_eq!(decrypt(kp.secret(), &add(&ca, &cb).unwrap(), -10_000, 10_000).unwrap(), a + b);
        prop_assert_eq!(decrypt(kp.secret(), &sub(&ca, &cb).unwrap(), -10_000, 10_000).unwrap(), a - b);
        let fresh = rerandomize(&key, &ca, &random_scalar::<G, _>(&mut rng));
        prop_assert_ne!(fresh, ca);
        prop_assert_eq!(decrypt(kp.secret(), &fresh, -10_000, 10_000).unwrap(), a);
    }

    #[test]
    fn blinding_preserves_exactly_zero(m in -300i64..300, seed: u64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let kp = KeyPair::<G>::generate(Party::Client, &mut rng);
        let c = encrypt_random(&kp.encryption_key(), m, &mut rng);
        let b = blind(&c, &random_nonzero_scalar::<G, _>(&mut rng)).unwrap();
        prop_assert_eq!(is_zero(kp.secret(), &b), m == 0);
    }

    #[test]
    fn threshold_decryption_in_either_order(m in -1000i64..1000, seed: u64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let client = KeyPair::<G>::generate(Party::Client, &mut rng);
        let server = KeyPair::<G>::generate(Party::Server, &mut rng);
        let joint = joint_keygen(&client, &server).unwrap();
        let c = encrypt_random(&joint.encryption_key(), m, &mut rng);
        prop_assert_eq!(decrypt(client.secret(), &partial_decrypt(&server, &c), -1000, 1000).unwrap(), m);
        prop_assert_eq!(decrypt(server.secret(), &partial_decrypt(&client, &c), -1000, 1000).unwrap(), m);
        prop_assert!(decrypt(client.secret(), &c, -1000, 1000).is_err() || m == 0);
    }

    #[test]
    fn scores_are_table_sums_within_extrema(
        k in 1usize..6, n in 2usize..9, rho in 0.05f64..0.95, seed: u64,
    ) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let tables = build_tables(&FeatureModel::uniform(k, rho).unwrap(), n, 0.5).unwrap();
        let a = QuantizedVector((0..k).map(|_| rng.gen_range(0..n)).collect());
        let b = QuantizedVector((0..k).map(|_| rng.gen_range(0..n)).collect());
        let s = tables.score(&a, &b).unwrap();
        let by_hand: i64 = (0..k).map(|i| tables.cell(i, a.0[i], b.0[i]) as i64).sum();
        prop_assert_eq!(s, by_hand);
        prop_assert!(tables.min_score() <= s && s <= tables.max_score());
        prop_assert_eq!(s, tables.score(&b, &a).unwrap());
    }

    #[test]
    fn window_length_is_span(theta in -50i32..50, extra in 0i32..60) {
        let tables = build_tables(&FeatureModel::uniform(3, 0.8).unwrap(), 4, 0.5).unwrap();
        let t = tables.with_window(theta, theta + extra).unwrap();
        prop_assert_eq!(t.window_len(), extra as usize + 1);
    }

    #[test]
    fn quantization_is_monotone(x in -6.0f64..6.0, y in -6.0f64..6.0, n in 2usize..64) {
        let tables = build_tables(&FeatureModel::uniform(1, 0.5).unwrap(), n, 1.0).unwrap();
        let (qx, qy) = (tables.quantize(&[x]).unwrap().0[0], tables.quantize(&[y]).unwrap().0[0]);
        prop_assert!(qx < n && qy < n);
        if x <= y {
            prop_assert!(qx <= qy);
        }
    }

    #[test]
    fn prp_is_an_invertible_permutation(n in 1usize..200, index: u32, uid: Vec<u8>, key: [u8; 32]) {
        let p = PrpKey(key).permutation(&uid, index, n);
        let mut seen = vec![false; n];
        for x in 0..n {
            let y = p.apply(x) as usize;
            prop_assert!(y < n && !seen[y]);
            seen[y] = true;
            prop_assert_eq!(p.invert(y as u32), x);
        }
    }

    #[test]
    fn feature_files_roundtrip(k in 1usize..8, rows in 0usize..6, seed: u64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let data: Vec<Vec<f64>> = (0..rows).map(|_| (0..k).map(|_| rng.gen_range(-1e6..1e6)).collect()).collect();
        let bytes = encode_features(k, &data).unwrap();
        prop_assert_eq!(decode_features(&bytes).unwrap(), (k, data));
    }

    #[test]
    fn random_bytes_never_panic_the_decoder(bytes in proptest::collection::vec(any::<u8>(), 0..300)) {
        let _ = Message::<G>::from_frame(&bytes);
        let _ = parse_header(&bytes);
    }
}

#[test]
fn fuzzed_frames_are_rejected_or_roundtrip() {
    let (world, user, mut rng) = small_world(11, 3, 4);
    let mut frames = Vec::new();
    for p in Protocol::ALL {
        let probe = world.quantize(&world.genuine_sample(user, &mut rng)).unwrap();
        let res = world.run(p, user, &probe, &mut rng).unwrap().unwrap();
        frames.extend(res.transcript.entries.into_iter().map(|e| e.frame));
    }
    let mut accepted = 0;
    for i in 0..10_000 {
        let mut f = frames[i % frames.len()].clone();
        match rng.gen_range(0..4) {
            0 => {
                let at = rng.gen_range(0..f.len());
                f[at] ^= rng.gen_range(1..=255u8);
            }
            1 => f.truncate(rng.gen_range(0..f.len())),
            2 => f.extend((0..rng.gen_range(1..8)).map(|_| rng.gen::<u8>())),
            _ => f = (0..rng.gen_range(0..64)).map(|_| rng.gen()).collect(),
        }
        if let Ok(m) = Message::<G>::from_frame(&f) {
            accepted += 1;
            assert_eq!(m.to_frame(), f, "accepted frame must be canonical");
        }
    }
    assert!(accepted < 10_000);
}

#[test]
fn replaying_server_frames_reproduces_the_client() {
    let (world, user, mut rng) = small_world(12, 4, 4);
    let probe = world.quantize(&world.genuine_sample(user, &mut rng)).unwrap();
    let seed: [u8; 32] = rng.gen();
    let mut c = world.sh_client(user, probe.clone(), ChaCha20Rng::from_seed(seed)).unwrap();
    let mut s = world.sh_server(child_rng(&mut rng));
    let res = run_in_memory::<G, _, _>(&mut c, &mut s).unwrap();
    let mut fresh = world.sh_client(user, probe, ChaCha20Rng::from_seed(seed)).unwrap();
    assert_eq!(replay_client::<G, _>(&mut fresh, &res.transcript).unwrap(), res.client);
}

#[test]
fn lockstep_matches_threaded_driver() {
    let (world, user, mut rng) = small_world(13, 3, 4);
    let probe = world.quantize(&world.genuine_sample(user, &mut rng)).unwrap();
    let (cs, ss): ([u8; 32], [u8; 32]) = (rng.gen(), rng.gen());
    let run = |lockstep: bool| {
        let mut c = world.mal_client(user, probe.clone(), ChaCha20Rng::from_seed(cs)).unwrap();
        let mut s = world.mal_server(ChaCha20Rng::from_seed(ss));
        if lockstep {
            run_lockstep::<G, _, _>(&mut c, &mut s).unwrap()
        } else {
            run_in_memory::<G, _, _>(&mut c, &mut s).unwrap()
        }
    };
    let (a, b) = (run(true), run(false));
    assert_eq!(a.client, b.client);
    assert_eq!(a.server, b.server);
    assert_eq!(a.transcript, b.transcript);
}

#[test]
fn tcp_and_memory_agree() {
    let (world, user, mut rng) = small_world(14, 3, 4);
    let probe = world.quantize(&world.genuine_sample(user, &mut rng)).unwrap();
    let mut c = world.sh_client(user, probe.clone(), child_rng(&mut rng)).unwrap();
    let mut s = world.sh_server(child_rng(&mut rng));
    let tcp = run_over_tcp::<G, _, _>(&mut c, &mut s).unwrap();
    let expected = world.expected_match(world.plaintext_score(user, &probe).unwrap());
    assert_eq!(tcp.client, Outcome::Decided(Decision::from_bool(expected)));
    assert_eq!(tcp.transcript.flights(), 4);
}

#[test]
fn dropped_frame_times_out() {
    let (world, user, mut rng) = small_world(15, 2, 3);
    let probe = world.quantize(&world.genuine_sample(user, &mut rng)).unwrap();
    for drop_at in 0..2 {
        let mut c = world.sh_client(user, probe.clone(), child_rng(&mut rng)).unwrap();
        let mut s = world.sh_server(child_rng(&mut rng));
        let (a, b) = memory_pair();
        let err = run_session::<G, _, _>(&mut c, &mut s, Lossy::new(a, drop_at), b, Duration::from_millis(300))
            .unwrap_err();
        assert!(matches!(err, SessionError::Timeout(_)), "{err}");
    }
}

#[test]
fn stores_roundtrip_records() {
    let (world, _, _) = small_world(16, 3, 4);
    let record = world.sh_store.get(b"alice").unwrap().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = FileStore::<ShServerRecord<G>>::open(dir.path()).unwrap();
    assert!(files.get(b"alice").unwrap().is_none());
    files.put(b"alice", record.clone()).unwrap();
    assert_eq!(files.get(b"alice").unwrap().unwrap().encode(), record.encode());
    let reopened = FileStore::<ShServerRecord<G>>::open(dir.path()).unwrap();
    assert_eq!(reopened.get(b"alice").unwrap().unwrap().encode(), record.encode());

    std::fs::write(files.path_for(b"alice"), b"garbage").unwrap();
    assert!(files.get(b"alice").is_err());

    let memory = MemoryStore::new();
    memory.put(b"bob", record.clone()).unwrap();
    assert_eq!(memory.get(b"bob").unwrap().unwrap().encode(), record.encode());
    assert_eq!(memory.len(), 1);
}
