use gdpa_core::gdpa::solve_with_observer;
use gdpa_core::harness::{build_problem, read_trace, run_solve, RunConfig, SolverSpec, Summary};
use gdpa_core::metrics::{kkt_residual, weighted_average};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn check(config: &str) {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::from_json(config).unwrap();
    cfg.output_dir = tmp.path().to_path_buf();
    cfg.record_every = Some(1);
    let in_memory = run_solve(&cfg).unwrap();
    let text = std::fs::read_to_string(tmp.path().join("summary.json")).unwrap();
    let summary: Summary = serde_json::from_str(&text).unwrap();
    assert_eq!(summary.kkt_avg, in_memory.kkt_avg);
    let trace = read_trace(&tmp.path().join("trace.csv")).unwrap();
    assert_eq!(trace.len(), summary.iterations);

    let built = build_problem(&cfg.problem, cfg.seed).unwrap();
    let SolverSpec::Gdpa(gcfg) = cfg.effective_solver(&cfg.solver) else {
        unreachable!()
    };
    let mut xs = Vec::new();
    let mut ls = Vec::new();
    solve_with_observer(built.problem.as_ref(), &gcfg, &built.default_x0, None, |s| {
        xs.push(s.x.to_vec());
        ls.push(s.lambda.to_vec());
    })
    .unwrap();
    assert_eq!(xs.len(), trace.len());

    let xw: Vec<(Vec<f64>, f64)> = xs.into_iter().zip(&trace).map(|(x, rec)| (x, rec.beta)).collect();
    let lw: Vec<(Vec<f64>, f64)> = ls.into_iter().zip(&trace).map(|(l, rec)| (l, rec.beta)).collect();
    let x_avg = weighted_average(&xw).unwrap();
    let l_avg = weighted_average(&lw).unwrap();
    for (a, b) in summary.x_avg.iter().zip(&x_avg).chain(summary.lambda_avg.iter().zip(&l_avg)) {
        assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
    }

    let expected = kkt_residual(built.problem.as_ref(), &x_avg, &l_avg, summary.kkt_alpha).unwrap();
    let got = summary.kkt_avg.unwrap();
    for (name, a, b) in [
        ("stationarity", got.stationarity, expected.stationarity),
        ("feasibility", got.feasibility, expected.feasibility),
        ("slackness", got.slackness, expected.slackness),
    ] {
        assert!(a == b || rel(a, b) <= 1e-8, "{name}: {a} vs {b}");
    }
}

#[test]
fn averaged_kkt_residuals_match_trace_recomputation() {
    check(
        r#"{"problem": {"kind": "analytic", "id": "circle-exterior"},
            "solver": {"kind": "gdpa", "max_iters": 4000, "eps_stat": 1e-300}}"#,
    );
    check(
        r#"{"problem": {"kind": "qcqp", "dim": 5, "num_constraints": 3, "problem_seed": 2},
            "solver": {"kind": "gdpa", "max_iters": 3000, "eps_stat": 1e-300}, "seed": 5}"#,
    );
    check(
        r#"{"problem": {"kind": "cmdp", "num_states": 6, "num_actions": 3, "num_constraints": 1,
                        "gamma": 0.9, "thresholds": [0.4], "model_seed": 1},
            "solver": {"kind": "gdpa", "beta0": 0.5, "alpha01": 50.0, "max_iters": 1500, "eps_stat": 1e-300}}"#,
    );
}
