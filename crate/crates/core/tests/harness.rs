use std::fs;

use dfw_core::harness::{
    exit_code, run_experiment, ExperimentConfig, Mode, EXIT_CONFIG, TRACE_COLUMNS,
};
use dfw_core::Error;

fn config(mode: Mode) -> ExperimentConfig {
    ExperimentConfig {
        mode,
        dataset: "synth:30:80:0.3:0.05".into(),
        topology: "tree:2:5".into(),
        epsilon: 1e-3,
        max_iter: 300,
        seed: 4,
        ..ExperimentConfig::default()
    }
}

fn read_csv(path: &std::path::Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

#[test]
fn simplex_quadratic_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        dataset: "identity:10".into(),
        simplex: true,
        step: dfw_core::fw::StepRule::LineSearch,
        epsilon: 1e-6,
        out: Some(dir.path().to_path_buf()),
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg).unwrap();
    assert!(report.summary.converged);
    assert!((report.summary.final_objective - 0.1).abs() <= 1e-6);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(json["converged"], true);
    assert_eq!(json["rounds"], report.summary.rounds);
    let (header, rows) = read_csv(&dir.path().join("trace.csv"));
    assert_eq!(header, TRACE_COLUMNS);
    assert_eq!(rows.len(), report.trace.records.len());
}

#[test]
fn distributed_trace_matches_centralized_except_communication() {
    let run = |mode| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            out: Some(dir.path().to_path_buf()),
            ..config(mode)
        };
        run_experiment(&cfg).unwrap();
        read_csv(&dir.path().join("trace.csv"))
    };
    let (h1, central) = run(Mode::Solve);
    let (h2, dist) = run(Mode::Dfw);
    assert_eq!(h1, h2);
    assert_eq!(central.len(), dist.len());
    let col = |name: &str| h1.iter().position(|h| h == name).unwrap();
    for (a, b) in central.iter().zip(&dist) {
        for name in ["iter", "selected_atom", "owner_node"] {
            assert_eq!(a[col(name)], b[col(name)], "{name}");
        }
        for name in ["objective", "gap"] {
            let (x, y): (f64, f64) = (a[col(name)].parse().unwrap(), b[col(name)].parse().unwrap());
            assert!((x - y).abs() <= 1e-9, "{name}: {x} vs {y}");
        }
        assert_eq!(a[col("cum_reals")], "0");
    }
    let reals: Vec<u64> = dist
        .iter()
        .map(|r| r[col("cum_reals")].parse().unwrap())
        .collect();
    assert!(reals.windows(2).all(|w| w[0] <= w[1]));
    assert!(reals[0] > 0);
}

#[test]
fn drop_runs_add_node_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        drop: Some(0.4),
        max_iter: 50,
        out: Some(dir.path().to_path_buf()),
        ..config(Mode::Dfw)
    };
    let report = run_experiment(&cfg).unwrap();
    let (header, rows) = read_csv(&dir.path().join("trace.csv"));
    assert_eq!(&header[..7], TRACE_COLUMNS);
    let nodes: Vec<&String> = header[7..].iter().collect();
    assert_eq!(
        nodes,
        [
            "node0_objective",
            "node1_objective",
            "node2_objective",
            "node3_objective",
            "node4_objective"
        ]
    );
    assert_eq!(rows.len(), 51);
    assert!(report.summary.average_objective.is_some());
}

#[test]
fn baseline_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        baseline: "localfw".into(),
        baseline_m: vec![1, 3],
        out: Some(dir.path().to_path_buf()),
        ..config(Mode::Baseline)
    };
    run_experiment(&cfg).unwrap();
    let (header, rows) = read_csv(&dir.path().join("curve.csv"));
    assert_eq!(header, ["m", "cum_reals", "objective", "shipped_atoms"]);
    assert_eq!(rows.len(), 2);
}

#[test]
fn toml_config_round_trip_and_rejection() {
    let cfg = ExperimentConfig::from_toml(
        r#"
        mode = "approx"
        objective = "lasso"
        dataset = "synth:20:60:0.3:0.1"
        topology = "star:4"
        centers = "fixed:3"
        certify = true
        epsilon = 0.01
        seed = 2
        "#,
    )
    .unwrap();
    assert_eq!(cfg.mode, Mode::Approx);
    assert!(run_experiment(&cfg).is_ok());

    let err = ExperimentConfig::from_toml("topolgy = \"star:4\"").unwrap_err();
    assert_eq!(exit_code(&err), EXIT_CONFIG);
    for bad in [
        ExperimentConfig {
            topology: "ring:4".into(),
            ..config(Mode::Dfw)
        },
        ExperimentConfig {
            drop: Some(1.0),
            ..config(Mode::Dfw)
        },
        ExperimentConfig {
            drop: Some(0.1),
            ..config(Mode::Solve)
        },
        ExperimentConfig {
            beta: Some(1.0),
            simplex: true,
            ..config(Mode::Solve)
        },
    ] {
        let err = run_experiment(&bad).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_CONFIG, "{err}");
    }
}

#[test]
fn numerical_failures_map_to_exit_three() {
    assert_eq!(exit_code(&Error::Protocol("x".into())), 3);
    assert_eq!(
        exit_code(&Error::NonFinite {
            iteration: 2,
            value: f64::NAN
        }),
        3
    );
}
