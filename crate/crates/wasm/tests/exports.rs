use helr_wasm::{det_json, lookup_table_json, session_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn lookup_table_shape() {
    let v = parse(lookup_table_json(0.85, 8, 0.5).unwrap());
    assert_eq!(v["cells"].as_array().unwrap().len(), 64);
    assert_eq!(v["llr"].as_array().unwrap().len(), 64);
    assert_eq!(v["borders"].as_array().unwrap().len(), 7);
    assert!(lookup_table_json(0.85, 8, 0.0).is_err());
}

#[test]
fn det_curves_for_both_scores() {
    let v = parse(det_json(0.8, 6, 4, 0.5, 500, 3).unwrap());
    for key in ["helr", "llr"] {
        let eer = v[key]["eer"].as_f64().unwrap();
        assert!((0.0..0.5).contains(&eer), "{key} {eer}");
        assert!(v[key]["points"].as_array().unwrap().len() <= 401);
    }
    assert_eq!(det_json(0.8, 6, 4, 0.5, 500, 3).unwrap(), det_json(0.8, 6, 4, 0.5, 500, 3).unwrap());
}

#[test]
fn sessions_agree_with_plaintext() {
    for protocol in ["sh", "mal"] {
        for genuine in [true, false] {
            let v = parse(session_json(protocol, 6, 4, 0.5, 0.9, 0, genuine, 11).unwrap());
            assert_eq!(v["agrees"], Value::Bool(true), "{v}");
            assert_eq!(v["decision"].as_str().unwrap(), v["expected"].as_str().unwrap());
            assert!(!v["frames"].as_array().unwrap().is_empty());
        }
    }
    assert!(session_json("mal", 64, 64, 1.0, 0.9, 0, true, 1).is_err());
    assert!(session_json("xyz", 4, 4, 1.0, 0.9, 0, true, 1).is_err());
}
