use mcvd::scenario_file::{load_scenario, parse_scenario, save_scenario, scenario_to_toml};
use mcvd::AppError;
use mcvd_core::scenario::default_scenario;

fn default_text() -> String {
    scenario_to_toml(&default_scenario())
}

fn expect_validation(text: &str, field: &str) {
    match parse_scenario(text, "test.toml") {
        Err(e @ AppError::Validation(_)) => {
            assert!(e.to_string().contains(field), "`{e}` does not name {field}");
            assert_eq!(e.exit_code(), 2);
        }
        other => panic!("expected a validation error naming {field}, got {other:?}"),
    }
}

#[test]
fn save_then_load_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("default.toml");
    let original = default_scenario();
    save_scenario(&original, &path).unwrap();
    let loaded = load_scenario(&path).unwrap();
    assert_eq!(loaded.molecules, original.molecules);
    assert_eq!(loaded.weights, original.weights);
    assert_eq!(
        (loaded.slot, loaded.isi_depth, loaded.budget, loaded.prior1),
        (
            original.slot,
            original.isi_depth,
            original.budget,
            original.prior1
        )
    );
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
    for (a, b) in loaded
        .topology
        .transmitters()
        .iter()
        .zip(original.topology.transmitters())
    {
        assert!(close(a.x, b.x) && close(a.y, b.y) && close(a.z, b.z));
    }
    for (a, b) in loaded
        .topology
        .receivers()
        .iter()
        .zip(original.topology.receivers())
    {
        assert!(
            close(a.center.x, b.center.x)
                && close(a.center.y, b.center.y)
                && close(a.center.z, b.center.z)
        );
        assert!(close(a.radius, b.radius));
        assert_eq!(a.molecule, b.molecule);
    }
    for s in 0..4 {
        for k in 0..4 {
            let (d1, d2) = (
                loaded.topology.geometry(s, k).distance(),
                original.topology.geometry(s, k).distance(),
            );
            assert!(close(d1, d2));
        }
    }
}

#[test]
fn text_is_stable_across_round_trips() {
    let once = default_text();
    let twice = scenario_to_toml(&parse_scenario(&once, "a").unwrap());
    assert_eq!(once, twice);
}

#[test]
fn zero_radius_names_the_field() {
    let text = default_text().replacen("radius_um = 7.0", "radius_um = 0.0", 1);
    expect_validation(&text, "receivers[0].radius_um");
}

#[test]
fn transmitter_inside_receiver_is_rejected() {
    let text = default_text().replacen(
        "position_um = [0.0, 0.0, 0.0]",
        "position_um = [30.0, 0.0, 0.0]",
        1,
    );
    expect_validation(&text, "transmitters[0]");
}

#[test]
fn negative_isi_depth_is_rejected() {
    expect_validation(
        &default_text().replace("isi_depth = 10", "isi_depth = -1"),
        "isi_depth",
    );
}

#[test]
fn duplicate_receiver_types_are_rejected() {
    let text = default_text().replacen("molecule = \"L-Alanine\"", "molecule = \"Glycine\"", 1);
    expect_validation(&text, "Glycine");
}

#[test]
fn weights_must_sum_to_one() {
    let text = default_text().replace(
        "weights = [0.25, 0.25, 0.25, 0.25]",
        "weights = [0.25, 0.25, 0.25, 0.3]",
    );
    expect_validation(&text, "weights");
    let text = default_text().replace("weights = [0.25, 0.25, 0.25, 0.25]", "weights = [0.5, 0.5]");
    expect_validation(&text, "weights");
}

#[test]
fn weights_and_prior_default_when_absent() {
    let text = default_text()
        .replace("weights = [0.25, 0.25, 0.25, 0.25]\n", "")
        .replace("prior1 = 0.5\n", "");
    let s = parse_scenario(&text, "t").unwrap();
    assert_eq!(s.prior1, 0.5);
    assert_eq!(s.weights, default_scenario().weights);
}

#[test]
fn unit_suffix_is_required() {
    for (from, to, field) in [
        ("slot_s = 10.0", "slot = 10.0", "slot"),
        ("radius_um = 7.0", "radius = 7.0", "receivers[0].radius"),
        (
            "radius_um = 7.0",
            "radius_nm = 7000.0",
            "receivers[0].radius_nm",
        ),
        ("diffusion_m2_per_s", "diffusion", "molecules[0].diffusion"),
        ("position_um", "position_m", "transmitters[0].position_m"),
    ] {
        let text = default_text().replacen(from, to, 1);
        match parse_scenario(&text, "t") {
            Err(AppError::Unit { field: f, .. }) => assert_eq!(f, field),
            other => panic!("{to}: expected a unit error, got {other:?}"),
        }
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let text = default_text().replace("isi_depth = 10", "isi_depth = 10\ntemperature_k = 310.0");
    assert!(matches!(
        parse_scenario(&text, "t"),
        Err(AppError::Parse { .. })
    ));
    let text = default_text().replacen(
        "molecule = \"Glycine\"",
        "molecule = \"Glycine\"\ncolor = \"red\"",
        1,
    );
    assert!(matches!(
        parse_scenario(&text, "t"),
        Err(AppError::Parse { .. })
    ));
}

#[test]
fn malformed_and_versioned_input() {
    assert!(matches!(
        parse_scenario("schema_version = ", "t"),
        Err(AppError::Parse { .. })
    ));
    expect_validation(
        &default_text().replace("schema_version = 1", "schema_version = 2"),
        "schema_version",
    );
    let missing = std::path::Path::new("/nonexistent/scenario.toml");
    assert!(matches!(load_scenario(missing), Err(AppError::Read { .. })));
}
