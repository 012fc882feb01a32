use oim_demo::{regret_curves_json, spectrum_json, surrogate_curve_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn spectrum_has_one_feature_row_per_node() {
    let v = parse(spectrum_json(5, 3, 4).unwrap());
    assert_eq!(v["nodes"], 32);
    assert_eq!(v["features"].as_array().unwrap().len(), 32);
    assert_eq!(v["features"][0].as_array().unwrap().len(), 4);
    let eig: Vec<f64> = serde_json::from_value(v["eigenvalues"].clone()).unwrap();
    assert_eq!(eig.len(), 4);
    assert!(eig[0].abs() < 1e-9);
    assert!(eig.windows(2).all(|w| w[0] <= w[1] + 1e-12));
}

#[test]
fn surrogate_curve_rows_match_k_range() {
    let v = parse(surrogate_curve_json(4, 1, 0.3, 3).unwrap());
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r["k"], i + 1);
        assert!(r["mean_surrogate"].as_f64().unwrap() <= r["mean_spread"].as_f64().unwrap() + 0.5);
    }
}

#[test]
fn regret_curves_are_deterministic_and_full_length() {
    let a = regret_curves_json(4, 2, 2, 30, "dilinucb-tabular, cucb").unwrap();
    assert_eq!(a, regret_curves_json(4, 2, 2, 30, "dilinucb-tabular,cucb").unwrap());
    let v = parse(a);
    let curves = v.as_array().unwrap();
    assert_eq!(curves.len(), 2);
    assert_eq!(curves[1]["algorithm"], "cucb");
    assert_eq!(curves[0]["cumulative_regret"].as_array().unwrap().len(), 30);
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(spectrum_json(0, 1, 2).is_err());
    assert!(spectrum_json(9, 1, 2).is_err());
    assert!(spectrum_json(3, 1, 9).is_err());
    assert!(regret_curves_json(4, 1, 2, 10, "greedy").is_err());
    assert!(regret_curves_json(3, 1, 20, 10, "cucb").is_err());
}
