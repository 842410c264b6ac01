//! End-to-end scenario runs and their exported form.

use bimetric_core::field_dynamics::{Boundary, Interval, Potential};
use bimetric_core::scenarios::*;
use bimetric_core::signal_propagation::PropagationMode;
use bimetric_core::Execution;
use std::f64::consts::SQRT_2;

const C0: f64 = 2.997_924_58e8;

/// 2 km between the detectors on 1024 sites, width 40 m.
fn reduced(mass: f64) -> ScenarioConfig {
    ScenarioConfig {
        name: "reduced".into(),
        separation: 2000.0,
        profile_width: 40.0,
        potential: Potential::free(mass).unwrap(),
        lattice: LatticeSpec {
            num_points: 1024,
            ..LatticeSpec::default()
        },
        ..ScenarioConfig::default()
    }
}

fn distances(sep: f64) -> Vec<f64> {
    let mut d = vec![1e-9 * sep];
    d.extend((1..=10).map(|k| sep * k as f64 / 10.0));
    d
}

#[test]
fn geneva_timing_bound_reproduces_arithmetic() {
    let config = ScenarioConfig {
        target_factor: Some(1.5e4),
        ..ScenarioConfig::default()
    };
    let r = run_timing_bound(&config).unwrap();
    let row = r.rows[0];
    let expected = 11_000.0 / (1.5e4 * C0);
    assert!((row.arrival_time_s - expected).abs() / expected < 1e-4);
    assert!((row.superluminal_factor - 1.5e4).abs() / 1.5e4 <= 1e-6);
    assert_eq!(r.metadata.consistent_with_window, Some(true));
    // deterministic calibration
    assert_eq!(run_timing_bound(&config).unwrap(), r);
}

#[test]
fn ten_million_needs_the_temporal_relation() {
    let mut config = ScenarioConfig {
        target_factor: Some(1e7),
        ..ScenarioConfig::default()
    };
    assert!(matches!(
        run_timing_bound(&config),
        Err(ScenarioError::Calibration { .. })
    ));
    config.mode = PropagationMode::Temporal;
    let r = run_timing_bound(&config).unwrap();
    let row = r.rows[0];
    assert!(row.arrival_time_s.is_finite() && row.arrival_time_s > 0.0);
    assert!((row.superluminal_factor - 1e7).abs() / 1e7 <= 1e-6);
    assert_eq!(r.metadata.consistent_with_window, Some(true));
    assert_eq!(r.metadata.mode, PropagationMode::Temporal);
}

#[test]
fn full_mode_calibrates_like_spatial() {
    let spatial = run_timing_bound(&ScenarioConfig {
        target_factor: Some(50.0),
        ..reduced(0.0)
    })
    .unwrap();
    let full = run_timing_bound(&ScenarioConfig {
        target_factor: Some(50.0),
        mode: PropagationMode::Full,
        ..reduced(0.0)
    })
    .unwrap();
    let (a, b) = (spatial.rows[0].arrival_time_s, full.rows[0].arrival_time_s);
    assert!((a - b).abs() / a < 2e-6);
}

#[test]
fn unit_target_arrives_at_light_speed() {
    let r = run_timing_bound(&ScenarioConfig {
        target_factor: Some(1.0),
        ..ScenarioConfig::default()
    })
    .unwrap();
    let t = r.rows[0].arrival_time_s;
    assert!((t - 11_000.0 / C0).abs() / t < 1e-10);
    assert!((t - 3.669e-5).abs() / t < 1e-3);
}

#[test]
fn massive_decay_is_monotone_toward_two() {
    let config = reduced(0.05);
    let r = run_distance_decay(&config, &distances(config.separation)).unwrap();
    let chsh: Vec<f64> = r.rows.iter().map(|row| row.chsh_max).collect();
    println!("{chsh:?}");
    assert!((chsh[0] - 2.0 * SQRT_2).abs() < 1e-6);
    assert!(chsh.windows(2).all(|w| w[1] <= w[0]));
    assert!(chsh[chsh.len() - 1] - 2.0 < 1e-3);
    assert!(chsh
        .iter()
        .all(|c| (2.0 * (1.0 - 1e-9)..=2.0 * SQRT_2 * (1.0 + 1e-9)).contains(c)));
    assert!(r.rows.iter().all(|row| row.superluminal_factor >= 1.0));
}

#[test]
fn massless_decay_is_weaker_on_a_periodic_box() {
    let periodic = |mass| ScenarioConfig {
        separation: 400.0,
        profile_width: 10.0,
        potential: Potential::free(mass).unwrap(),
        lattice: LatticeSpec {
            num_points: 512,
            boundary: Boundary::Periodic,
            ..LatticeSpec::default()
        },
        ..ScenarioConfig::default()
    };
    let ds = [40.0, 80.0, 120.0];
    let free = run_distance_decay(&periodic(0.0), &ds).unwrap();
    let heavy = run_distance_decay(&periodic(0.2), &ds).unwrap();
    for (f, h) in free.rows.iter().zip(&heavy.rows) {
        assert!(f.chsh_max > h.chsh_max, "{} vs {}", f.chsh_max, h.chsh_max);
    }
}

#[test]
fn intervening_mass_screens_the_far_detector() {
    let config = reduced(0.01);
    let resolved = config.resolve().unwrap();
    let region = default_region(&resolved);
    let r = run_intervening_mass(&config, region, 10.0).unwrap();
    let (control, treated) = r.pairs().next().unwrap();
    assert_eq!(control.distance_m, config.separation);
    assert!(treated.phi_peak < control.phi_peak);
    assert!(treated.chsh_max < control.chsh_max);

    let null = run_intervening_mass(&config, region, 1.0).unwrap();
    for (c, t) in null.pairs() {
        assert_eq!(c, t);
    }
}

#[test]
fn mass_beyond_the_detector_changes_nothing_there() {
    let config = reduced(0.01);
    let resolved = config.resolve().unwrap();
    let b = resolved.detector_b.position;
    // far enough past B that no reflection can return inside B's window
    let region = Interval::new(b + 200.0, b + 240.0);
    let r = run_intervening_mass(&config, region, 10.0).unwrap();
    let (c, t) = r.pairs().next().unwrap();
    assert!((c.phi_peak - t.phi_peak).abs() < 1e-10);
    assert!((c.chsh_max - t.chsh_max).abs() < 1e-10);
    assert!(r
        .metadata
        .notes
        .iter()
        .any(|n| n.contains("not strictly between")));
}

#[test]
fn intervening_mass_requires_a_massive_field() {
    let config = reduced(0.0);
    let region = default_region(&config.resolve().unwrap());
    assert!(matches!(
        run_intervening_mass(&config, region, 10.0),
        Err(ScenarioError::Config { field, .. }) if field == "potential.mass"
    ));
}

#[test]
fn sequential_and_parallel_runs_agree_bitwise() {
    let config = reduced(0.05);
    let ds = distances(config.separation);
    let seq = run_distance_decay_with(&config, &ds, Execution::Sequential).unwrap();
    let par = run_distance_decay_with(&config, &ds, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    let region = default_region(&config.resolve().unwrap());
    let seq = run_intervening_mass_with(&config, region, 4.0, Execution::Sequential).unwrap();
    let par = run_intervening_mass_with(&config, region, 4.0, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn dispatch_uses_config_scenario() {
    let mut config = reduced(0.05);
    config.scenario = ScenarioKind::DistanceDecay;
    let r = run(&config).unwrap();
    assert_eq!(r.metadata.scenario, ScenarioKind::DistanceDecay);
    assert_eq!(r.rows.len(), 21);
    assert!(r.headline().contains("chsh_max"));
}

#[test]
fn exports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_timing_bound(&ScenarioConfig {
        target_factor: Some(1.5e4),
        ..ScenarioConfig::default()
    })
    .unwrap();
    for format in [ExportFormat::Csv, ExportFormat::Json] {
        let p1 = dir.path().join(format!("one.{format:?}"));
        let p2 = dir.path().join(format!("two.{format:?}"));
        export(&r, format, &p1).unwrap();
        export(&r, format, &p2).unwrap();
        let (b1, b2) = (std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        assert_eq!(b1, b2);
        assert!(!b1.contains(&b'\r'));
    }
    let csv = std::fs::read_to_string(dir.path().join("one.Csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("one.Json")).unwrap())
            .unwrap();
    assert_eq!(json["rows"][0]["distance_m"], 11000.0);
    assert_eq!(json["metadata"]["code_version"], bimetric_core::VERSION);
    // only the two exported files; no temporaries left behind
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 4);
}

#[test]
fn config_round_trips_through_json() {
    let config = reduced(0.05);
    let text = serde_json::to_string(&config).unwrap();
    assert_eq!(ScenarioConfig::from_json(&text).unwrap(), config);
}
