use levelset_wasm::{classify, heatmap, profile};
use serde_json::Value;

#[test]
fn heatmap_is_normalized_at_the_origin() {
    let h = heatmap(64, 32).unwrap();
    assert_eq!(h.len(), 32 * 32);
    assert!((h[0] - 1.0).abs() < 1e-5);
    assert!(h.iter().all(|&v| (0.0..=1.0 + 1e-5).contains(&v)));
    // t = 1/2 sits on a denominator-2 arc, far below the peak.
    assert!(h[16 * 32] < 0.1);
    assert!(heatmap(4096, 8).is_err() && heatmap(64, 0).is_err());
}

#[test]
fn constant_profile_peaks_at_root_n() {
    let v: Value = serde_json::from_str(&profile("constant", 256, 0.0, 4, 4.0).unwrap()).unwrap();
    assert_eq!(v["sup"].as_array().unwrap().len(), 256);
    assert!(v["max"].as_f64().unwrap() >= 16.0 - 1e-9);
    let m = v["measure"].as_f64().unwrap();
    assert!(m > 0.0 && m <= 1.0);
    assert!(profile("unknown", 256, 0.0, 4, 4.0).is_err());
    assert!(profile("prime", 256, 0.3, 4, 4.0).is_ok());
}

#[test]
fn classification_of_a_seventh() {
    let v: Value = serde_json::from_str(&classify("1/7", "1/7", 64, 4, 2, false).unwrap()).unwrap();
    assert_eq!(v["label"], serde_json::json!({"q": 7, "a": 1, "b": 1}));
    assert_eq!(v["dirichlet"]["fraction"], "1/7");
    let v: Value = serde_json::from_str(&classify("1/3", "0", 64, 4, 0, false).unwrap()).unwrap();
    assert!(v["label"].is_null());
    assert!(classify("x", "0", 64, 4, 0, false).is_err());
}
