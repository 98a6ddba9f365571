//! Browser bindings for the demo page in `www/`. Every export returns a JSON
//! string; the `*_json` functions hold the logic and are usable natively.

use helr::classifier::{
    bin_borders, build_tables, det_metrics, exact_llr, plaintext_scores, synth_pairs,
    DetCurve, FeatureModel, ScoreStep,
};
use helr::classifier::tables::llr_table;
use helr::group::P256;
use helr::protocol::{Outcome, Protocol};
use helr::scenario::Scenario;
use helr::transport::run_lockstep;
use helr::wire::parse_header;
use helr::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Keeps the page responsive; the protocols themselves have no such limit.
const MAX_SESSION_CELLS: usize = 32 * 32;
const MAX_PLOT_POINTS: usize = 400;

/// One quantized lookup table next to its real-valued LLR matrix.
pub fn lookup_table_json(rho: f64, n: usize, delta: f64) -> Result<String, Error> {
    let model = FeatureModel::uniform(1, rho)?;
    let tables = build_tables(&model, n, delta)?;
    let borders = bin_borders(n)?;
    let exact = llr_table(rho, &borders)?;
    Ok(json!({
        "n": n,
        "delta": ScoreStep::from_f64(delta)?.value(),
        "cells": tables.table(0),
        "llr": exact,
        "borders": borders.borders(),
        "min": tables.min_score(),
        "max": tables.max_score(),
    })
    .to_string())
}

fn curve_json(c: &DetCurve) -> Value {
    let step = c.points.len().div_ceil(MAX_PLOT_POINTS).max(1);
    let pts: Vec<[f64; 2]> = c
        .points
        .iter()
        .step_by(step)
        .chain(c.points.last())
        .map(|p| [p.fmr, p.fnmr])
        .collect();
    json!({ "eer": c.eer, "points": pts })
}

/// DET curves of the quantized tables and of the exact LLR on the same
/// synthetic pairs.
pub fn det_json(rho: f64, k: usize, n: usize, delta: f64, pairs: usize, seed: u64) -> Result<String, Error> {
    if pairs == 0 {
        return Err(Error::InvalidParameter("pairs must be positive".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let model = FeatureModel::uniform(k, rho)?;
    let tables = build_tables(&model, n, delta)?;
    let genuine = synth_pairs(&model, pairs, true, &mut rng);
    let impostor = synth_pairs(&model, pairs, false, &mut rng);
    let as_f64 = |v: Vec<i64>| v.into_iter().map(|s| s as f64).collect::<Vec<_>>();
    let helr = det_metrics(
        &as_f64(plaintext_scores(&tables, &genuine)?),
        &as_f64(plaintext_scores(&tables, &impostor)?),
    )?;
    let llr_of = |ps: &[helr::classifier::FeaturePair]| -> Vec<f64> {
        ps.iter().map(|p| exact_llr(&model, &p.a, &p.b)).collect()
    };
    let llr = det_metrics(&llr_of(&genuine), &llr_of(&impostor))?;
    Ok(json!({ "helr": curve_json(&helr), "llr": curve_json(&llr) }).to_string())
}

#[allow(clippy::too_many_arguments)]
/// One enrollment and one verification at 128-bit security, run on the
/// calling thread. `genuine` picks a probe from the enrolled user or an
/// independent one.
pub fn session_json(
    protocol: &str,
    k: usize,
    n: usize,
    delta: f64,
    rho: f64,
    theta: i32,
    genuine: bool,
    seed: u64,
) -> Result<String, Error> {
    let protocol: Protocol = protocol.parse()?;
    if k * n > MAX_SESSION_CELLS {
        return Err(Error::InvalidParameter(format!("k * n above {MAX_SESSION_CELLS}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let model = FeatureModel::uniform(k, rho)?;
    let tables = build_tables(&model, n, delta)?.with_threshold(theta)?;
    let mut world = Scenario::<P256>::new(tables, model, &mut rng)?;
    let reference = world.random_features(&mut rng);
    let user = world.enroll(b"demo", reference, &[protocol], &mut rng)?;
    let features = if genuine { world.genuine_sample(user, &mut rng) } else { world.random_features(&mut rng) };
    let probe = world.quantize(&features)?;
    let score = world.plaintext_score(user, &probe)?;

    let (crng, srng) = (helr::scenario::child_rng(&mut rng), helr::scenario::child_rng(&mut rng));
    let session = |e: helr::transport::SessionError| Error::Session(e.to_string());
    let res = match protocol {
        Protocol::SemiHonest => {
            let mut c = world.sh_client(user, probe, crng)?;
            let mut s = world.sh_server(srng);
            run_lockstep::<P256, _, _>(&mut c, &mut s).map_err(session)?
        }
        Protocol::Malicious => {
            let mut c = world.mal_client(user, probe, crng)?;
            let mut s = world.mal_server(srng);
            run_lockstep::<P256, _, _>(&mut c, &mut s).map_err(session)?
        }
    };
    let frames: Vec<Value> = res
        .transcript
        .entries
        .iter()
        .map(|e| {
            let ty = parse_header(&e.frame).map(|(t, _)| format!("{t:?}")).unwrap_or_default();
            json!({
                "from": match e.direction {
                    helr::transport::Direction::ClientToServer => "client",
                    helr::transport::Direction::ServerToClient => "server",
                },
                "type": ty,
                "bytes": e.frame.len(),
            })
        })
        .collect();
    let tables = &world.tables;
    Ok(json!({
        "protocol": protocol.as_str(),
        "score": score,
        "theta": tables.theta(),
        "s_max": tables.s_max(),
        "expected": if world.expected_match(score) { "match" } else { "no_match" },
        "decision": res.client.to_string(),
        "server": res.server.to_string(),
        "agrees": matches!(res.client, Outcome::Decided(d) if (d == helr::protocol::Decision::Match) == world.expected_match(score)),
        "frames": frames,
    })
    .to_string())
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn lookup_table(rho: f64, n: usize, delta: f64) -> Result<String, JsError> {
    lookup_table_json(rho, n, delta).map_err(js)
}

#[wasm_bindgen]
pub fn det_curves(rho: f64, k: usize, n: usize, delta: f64, pairs: usize, seed: u64) -> Result<String, JsError> {
    det_json(rho, k, n, delta, pairs, seed).map_err(js)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn run_session(
    protocol: &str,
    k: usize,
    n: usize,
    delta: f64,
    rho: f64,
    theta: i32,
    genuine: bool,
    seed: u64,
) -> Result<String, JsError> {
    session_json(protocol, k, n, delta, rho, theta, genuine, seed).map_err(js)
}
