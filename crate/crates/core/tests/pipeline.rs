use netshift::cli::main_with_args;
use netshift::detect::DetectionReport;
use netshift::eval::*;
use netshift::synth::{builtin_spec, generate_series};
use proptest::prelude::*;
use std::path::Path;

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("netshift").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn planted_densities_match_the_block_matrix() {
    // 40 snapshots of each phase: block densities should sit near Q.
    let mut spec = builtin_spec("2c-cp").unwrap().with_seed(11);
    for ph in &mut spec.phases {
        ph.duration = 40;
    }
    let series = generate_series(&spec).unwrap();
    assert_eq!(series.truth.change_points, vec![40]);
    let sizes = [20usize, 30];
    let block = |u: usize| usize::from(u >= sizes[0]);
    for (phase, range) in [(0, 0..40), (1, 40..80)] {
        let q = spec.phases[phase].q.rows();
        let mut links = [[0.0f64; 2]; 2];
        for s in &series.network.snapshots()[range] {
            for e in s.edges() {
                let (r, c) = (block(e.u as usize), block(e.v as usize));
                links[r.min(c)][r.max(c)] += e.count as f64;
            }
        }
        for r in 0..2 {
            for c in r..2 {
                let pairs = if r == c {
                    (sizes[r] * (sizes[r] - 1) / 2) as f64
                } else {
                    (sizes[r] * sizes[c]) as f64
                };
                let trials = 40.0 * pairs;
                let dens = links[r][c] / trials;
                let sd = (q[r][c] * (1.0 - q[r][c]) / trials).sqrt();
                assert!((dens - q[r][c]).abs() < 5.0 * sd + 1e-12, "phase {phase} ({r},{c}): {dens} vs {}", q[r][c]);
            }
        }
    }
}

#[test]
fn simulate_detect_evaluate_plot() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"phases": [
            {"Q": [[0.6, 0.05], [0.05, 0.6]], "block_sizes": [6, 6], "duration": 4},
            {"Q": [[0.05, 0.6], [0.6, 0.05]], "block_sizes": [6, 6], "duration": 4}
        ]}"#,
    )
    .unwrap();
    let sim = dir.path().join("sim");
    assert_eq!(run(&["simulate", "--spec", p(&spec), "--runs", "2", "--seed", "5", "--output-dir", p(&sim)]), 0);
    for f in ["run_000.csv", "run_000.sidecar.json", "run_001.truth.json", "manifest.json"] {
        assert!(sim.join(f).is_file(), "{f} missing");
    }

    let mut reports = Vec::new();
    for r in 0..2 {
        let stem = dir.path().join(format!("det_{r}"));
        let code = run(&[
            "detect",
            "--input",
            p(&sim.join(format!("run_00{r}.csv"))),
            "--window",
            "4",
            "--bootstrap",
            "9",
            "--k",
            "2",
            "--restarts",
            "1",
            "--max-outer",
            "5",
            "--max-sweeps",
            "20",
            "--seed",
            "1",
            "--output",
            p(&stem),
        ]);
        assert_eq!(code, 0);
        let report = DetectionReport::read_json(std::fs::File::open(stem.with_extension("json")).unwrap()).unwrap();
        assert_eq!(report.horizon, 8);
        assert_eq!(report.windows.len(), 5);
        assert!(stem.with_extension("csv").is_file());
        reports.push(stem.with_extension("json"));
    }
    let base = dir.path().join("base");
    assert_eq!(
        run(&["detect", "--input", p(&sim.join("run_000.csv")), "--detector", "mean_degree", "--window", "3", "--output", p(&base)]),
        0
    );

    let eval = dir.path().join("eval");
    let (base_csv, truth) = (base.with_extension("csv"), sim.join("run_000.truth.json"));
    let args = [
        "evaluate",
        "--reports",
        p(&reports[0]),
        p(&reports[1]),
        p(&base_csv),
        "--truth",
        p(&truth),
        "--output-dir",
        p(&eval),
    ];
    assert_eq!(run(&args), 0);
    let summary: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(eval.join("evaluation.json")).unwrap()).unwrap();
    assert_eq!(summary["horizon"], 8);
    assert_eq!(summary["detection_rate"].as_array().unwrap().len(), 8);
    let pr = std::fs::read_to_string(eval.join("precision_recall.csv")).unwrap();
    assert_eq!(pr.lines().count(), 1 + 3 * 8);

    let svg = dir.path().join("curves.svg");
    assert_eq!(run(&["plot", "--input", p(&eval.join("curves.csv")), "--output", p(&svg), "--kind", "lines"]), 0);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn fit_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.csv");
    std::fs::write(&edges, "# t,u,v\n0,0,1\n0,1,2\n0,2,0\n0,3,4\n0,4,5\n0,5,3\n").unwrap();
    let out = dir.path().join("fit.json");
    assert_eq!(run(&["fit", "--input", p(&edges), "--k", "2", "--seed", "2", "--output", p(&out)]), 0);
    let v: serde_json::Value = serde_json::from_reader(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(v["fit"]["K"], 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(run(&["simulate", "--spec", "er-2c", "--runs", "0", "--output-dir", p(&out)]), 2);
    assert_eq!(run(&["simulate", "--spec", "nope", "--output-dir", p(&out)]), 2);
    assert_eq!(run(&["frobnicate"]), 2);
    let missing = dir.path().join("missing.csv");
    assert_eq!(run(&["fit", "--input", p(&missing)]), 3);
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "0,0,1\nlater,1,2\n").unwrap();
    assert_eq!(run(&["fit", "--input", p(&bad)]), 3);
    let small = dir.path().join("small.csv");
    std::fs::write(&small, "0,0,1\n1,0,1\n").unwrap();
    assert_eq!(run(&["detect", "--input", p(&small), "--window", "4"]), 2);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn scores_grow_with_tolerance(
        found in proptest::collection::btree_set(0usize..40, 0..8),
        known in proptest::collection::btree_set(0usize..40, 1..5),
    ) {
        let found: Vec<usize> = found.into_iter().collect();
        let known: Vec<usize> = known.into_iter().collect();
        let table = precision_recall_table(&found, &known, 10);
        prop_assert_eq!(table.len(), 11);
        for pair in table.windows(2) {
            prop_assert!(pair[1].precision.value >= pair[0].precision.value);
            prop_assert!(pair[1].recall.value >= pair[0].recall.value);
        }
        for row in &table {
            prop_assert!((0.0..=1.0).contains(&row.precision.value));
            prop_assert!((0.0..=1.0).contains(&row.recall.value));
        }
        // Direct count for the exact-match row.
        let hits = found.iter().filter(|t| known.contains(t)).count();
        if !found.is_empty() {
            prop_assert!((table[0].precision.value - hits as f64 / found.len() as f64).abs() < 1e-12);
        }
        prop_assert!((table[0].recall.value - hits as f64 / known.len() as f64).abs() < 1e-12);
    }
}
