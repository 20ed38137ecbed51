use std::io::BufReader;

use proptest::prelude::*;
use swarm3d::harness::config::{RegionConfig, ShapeConfig};
use swarm3d::harness::{
    batch_run, export_trajectories, presets, run_scenario, summarize, write_outputs, Mode, ScenarioConfig, StopKind,
};
use swarm3d::trace::TrajectoryLog;

fn small_coverage() -> ScenarioConfig {
    let mut c = presets::scenario("coverage").unwrap();
    c.region = Some(presets::cells(3));
    c
}

#[test]
fn every_preset_config_round_trips() {
    for name in presets::SCENARIO_PRESETS {
        let cfg = presets::scenario(name).unwrap();
        let text = cfg.to_toml().unwrap();
        let back = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg, "{name}");
        assert_eq!(back.to_toml().unwrap(), text, "{name}");
        assert!(cfg.validate().is_ok(), "{name}");
    }
}

#[test]
fn sparse_file_reaches_canonical_form() {
    let text = r#"
mode = "shape"
[region]
min_corner_m = [-5.0, -5.0, -5.0]
max_corner_m = [5.0, 5.0, 5.0]
[shape]
kind = "torus"
tube_radius_m = 1.0
ring_radius_m = 3.0
"#;
    let cfg = ScenarioConfig::from_toml(text).unwrap();
    assert_eq!(cfg.shape, Some(ShapeConfig::Torus { tube_radius_m: 1.0, ring_radius_m: 3.0 }));
    let canonical = cfg.to_toml().unwrap();
    let again = ScenarioConfig::from_toml(&canonical).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(again.to_toml().unwrap(), canonical);
}

#[test]
fn reruns_write_identical_files() {
    for name in ["coverage", "search", "moving-targets"] {
        let cfg = presets::scenario(name).unwrap().with_seed(3);
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        write_outputs(a.path(), &cfg, &run_scenario(&cfg).unwrap()).unwrap();
        write_outputs(b.path(), &cfg, &run_scenario(&cfg).unwrap()).unwrap();
        for f in ["trajectory.csv", "metrics.json", "metadata.json"] {
            let (x, y) = (std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
            assert!(x == y, "{name}/{f} differs");
        }
    }
}

#[test]
fn seeds_change_the_run() {
    let cfg = small_coverage();
    let a = run_scenario(&cfg.with_seed(1)).unwrap();
    let b = run_scenario(&cfg.with_seed(2)).unwrap();
    assert_ne!(a.trajectory, b.trajectory);
}

#[test]
fn trajectory_rows_are_ticks_times_agents() {
    let out = run_scenario(&small_coverage()).unwrap();
    let m = &out.metrics;
    assert_eq!(out.trajectory.rows.len() as u64, (m.steps_to_stop + 1) * m.agents as u64);
    assert_eq!(out.trajectory.tick_count() as u64, m.steps_to_stop + 1);
    let ticks: Vec<u64> = out.trajectory.rows.iter().map(|r| r.tick).collect();
    assert!(ticks.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn thinning_keeps_multiples() {
    let mut cfg = small_coverage();
    cfg.output.log_every_ticks = 5;
    let out = run_scenario(&cfg).unwrap();
    assert!(out.trajectory.rows.iter().all(|r| r.tick % 5 == 0));
    assert_eq!(out.metrics.coverage_series.len() as u64, out.metrics.steps_to_stop / 5 + 1);
}

#[test]
fn exported_file_reimports_exactly() {
    for name in ["coverage", "formation-tetrahedron"] {
        let mut cfg = presets::scenario(name).unwrap();
        if cfg.mode == Mode::Formation {
            cfg.horizon_ticks = 300;
            cfg.output.log_every_ticks = 7;
        }
        let out = run_scenario(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        export_trajectories(&out.trajectory, &path).unwrap();
        let back = TrajectoryLog::read_csv(BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
        assert_eq!(back, out.trajectory, "{name}");
        assert_eq!(back.final_positions(), out.trajectory.final_positions());
    }
}

#[test]
fn empty_log_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    export_trajectories(&TrajectoryLog::new(&["ey"]), &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "tick,agent_id,x,y,z,ey\n");
}

#[test]
fn unwritable_path_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    let err = export_trajectories(&TrajectoryLog::new(&[]), &file.join("under-a-file.csv"));
    assert!(err.is_err());
}

#[test]
fn warnings_reach_the_metadata() {
    let mut cfg = small_coverage();
    cfg.grid.r_c_m = Some(1.0);
    let out = run_scenario(&cfg).unwrap();
    assert_eq!(out.warnings.len(), 1);
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &cfg, &out).unwrap();
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["warnings"].as_array().unwrap().len(), 1);
    assert_eq!(meta["seed"], 0);
    assert_eq!(meta["config"]["grid"]["r_c_m"], 1.0);
}

#[test]
fn single_seed_batch_equals_the_run() {
    let cfg = small_coverage().with_seed(8);
    let b = batch_run(&cfg, &[8]).unwrap();
    let m = run_scenario(&cfg).unwrap().metrics;
    assert_eq!(b.runs, vec![m.clone()]);
    let s = m.steps_to_stop as f64;
    assert_eq!((b.steps.mean, b.steps.median, b.steps.iqr), (s, s, 0.0));
}

#[test]
fn batch_median_ignores_seed_order() {
    let cfg = small_coverage();
    let a = batch_run(&cfg, &[0, 1, 2, 3, 4, 5]).unwrap();
    let b = batch_run(&cfg, &[5, 3, 1, 0, 4, 2]).unwrap();
    assert_eq!(a.steps, b.steps);
    assert_eq!(b.runs[0].seed, 5);
}

#[test]
fn shape_preset_fills_the_sphere() {
    let out = run_scenario(&presets::scenario("shape-sphere").unwrap()).unwrap();
    assert_eq!(out.metrics.stop_reason, StopKind::Complete);
    assert!(out.metrics.consensus_ticks.unwrap() > 0);
}

#[test]
fn more_searchers_find_targets_sooner() {
    let seeds: Vec<u64> = (0..20).collect();
    let rows = presets::sensors_vs_time(&seeds).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].steps.mean < w[0].steps.mean, "{} agents: {} vs {} agents: {}", w[0].agents, w[0].steps.mean, w[1].agents, w[1].steps.mean);
    }
    assert!(rows.iter().all(|r| r.completed == seeds.len()));
}

#[test]
fn search_metrics_record_each_detection() {
    let out = run_scenario(&presets::scenario("search").unwrap()).unwrap();
    let m = out.metrics;
    assert_eq!(m.stop_reason, StopKind::AllTargetsFound);
    assert_eq!(m.detection_ticks.len(), 3);
    assert!(m.detection_ticks.iter().all(|t| t.is_some_and(|t| t <= m.steps_to_stop)));
    assert_eq!(m.detection_ticks.iter().flatten().max(), Some(&m.steps_to_stop));
}

#[test]
fn formation_rejects_bad_gain() {
    let mut cfg = presets::scenario("formation-tetrahedron").unwrap();
    cfg.formation.as_mut().unwrap().c0_m = 1.0;
    assert!(cfg.validate().is_err());
}

#[test]
fn region_is_required_outside_formation() {
    let mut cfg = ScenarioConfig::new(Mode::Coverage);
    assert!(cfg.validate().is_err());
    cfg.region = Some(RegionConfig { min_corner_m: [0.0; 3], max_corner_m: [0.0, 1.0, 1.0] });
    assert!(cfg.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn summary_is_order_free(mut xs in prop::collection::vec(0.0..1e4f64, 1..40), rot in 0usize..40) {
        let a = summarize(&xs).unwrap();
        let k = rot % xs.len();
        xs.rotate_left(k);
        xs.reverse();
        let b = summarize(&xs).unwrap();
        prop_assert_eq!(a.median, b.median);
        prop_assert_eq!(a.iqr, b.iqr);
        prop_assert!((a.mean - b.mean).abs() < 1e-9);
        prop_assert!(a.min <= a.q1 && a.q1 <= a.median && a.median <= a.q3 && a.q3 <= a.max);
    }

    #[test]
    fn same_seed_same_metrics(seed in any::<u64>()) {
        let cfg = small_coverage().with_seed(seed);
        prop_assert_eq!(run_scenario(&cfg).unwrap().metrics, run_scenario(&cfg).unwrap().metrics);
    }
}
