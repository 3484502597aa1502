use std::path::PathBuf;

use cptforge_core::bn::{parse_bif, parse_native, serialize_native};
use cptforge_core::inference::{posterior, Evidence};
use cptforge_core::Network;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[test]
fn native_fixtures_round_trip_byte_for_byte() {
    let dir = fixtures().join("networks");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let net: Network = parse_native(&text).unwrap();
        assert_eq!(serialize_native(&net), text);
        seen += 1;
    }
    assert_eq!(seen, 10);
}

#[test]
fn bif_fixture_matches_hand_read_tables() {
    let net: Network = parse_bif(&std::fs::read_to_string(fixtures().join("weather.bif")).unwrap()).unwrap();
    assert_eq!(net.name(), "weather");
    let s = net.structure();
    assert_eq!(s.topological_names(), ["Cloudy", "Rain", "Traffic"]);
    assert_eq!(s.variable(1).states, ["none", "light", "heavy"]);
    let rows = |v: usize| -> Vec<Vec<f64>> { net.cpt(v).rows.iter().map(|r| r.probs().to_vec()).collect() };
    assert_eq!(rows(0), [[0.4, 0.6]]);
    assert_eq!(rows(1), [vec![0.3, 0.5, 0.2], vec![0.85, 0.125, 0.025]]);
    assert_eq!(
        rows(2),
        [
            [0.2, 0.8],
            [0.45, 0.55],
            [0.9, 0.1],
            [0.1, 0.9],
            [0.375, 0.625],
            [0.75, 0.25]
        ]
    );
}

#[test]
fn bif_fixture_inference_matches_hand_sums() {
    let net: Network = Network::load(fixtures().join("weather.bif")).unwrap();
    let jam = 0.4 * (0.3 * 0.2 + 0.5 * 0.45 + 0.2 * 0.9) + 0.6 * (0.85 * 0.1 + 0.125 * 0.375 + 0.025 * 0.75);
    let t = posterior(&net, "Traffic", &Evidence::new()).unwrap();
    assert!((t.probs()[0] - jam).abs() < 1e-12);
    let c = posterior(&net, "Cloudy", &Evidence::new().with("Traffic", 0)).unwrap();
    let yes = 0.4 * (0.3 * 0.2 + 0.5 * 0.45 + 0.2 * 0.9);
    assert!((c.probs()[0] - yes / jam).abs() < 1e-12);
}
