use hullprice_demo::{generate_json, price_json, self_schedule_json};

#[test]
fn generated_instance_prices_with_opt_at_the_bottom() {
    let inst = generate_json(3, 6, 4).unwrap();
    let v: serde_json::Value = serde_json::from_str(&price_json(&inst).unwrap()).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 7);
    let uplift = |name: &str| {
        rows.iter().find(|r| r["algorithm"] == name).unwrap()["uplift"].as_f64().unwrap()
    };
    assert!(uplift("LMP") >= uplift("OPT") - 1e-6);
    assert!(uplift("TLP") >= uplift("OPT") - 1e-6);
    assert!(v["table"].as_str().unwrap().contains("OPT"));
}

#[test]
fn self_schedule_reports_exact_and_relaxed_values() {
    let inst = generate_json(5, 4, 3).unwrap();
    let v: serde_json::Value =
        serde_json::from_str(&self_schedule_json(&inst, "g1", &[30.0, 45.0, 20.0]).unwrap()).unwrap();
    assert_eq!(v["on"].as_array().unwrap().len(), 3);
    // A relaxation can only undercut the exact minimum.
    assert!(v["relaxed_value"].as_f64().unwrap() <= v["value"].as_f64().unwrap() + 1e-6);
}

#[test]
fn bad_requests_are_errors() {
    assert!(generate_json(1, 0, 4).is_err());
    assert!(generate_json(1, 50, 4).is_err());
    assert!(price_json("{").is_err());
    let inst = generate_json(5, 4, 3).unwrap();
    assert!(self_schedule_json(&inst, "nope", &[1.0; 3]).is_err());
    assert!(self_schedule_json(&inst, "g1", &[1.0; 2]).is_err());
}
