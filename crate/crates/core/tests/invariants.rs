use gdpa_core::baselines::{solve_alm, solve_penalty, AlmConfig, PenaltyConfig};
use gdpa_core::gdpa::{schedule, solve_with_observer};
use gdpa_core::linalg::{positive_part, Projection};
use gdpa_core::metrics::{perturbed_lagrangian, stationarity_measure, weighted_average};
use gdpa_core::problem::{check_gradients, effective_constants, sample_points};
use gdpa_core::problems::{
    build_analytic, build_cmdp, build_mnpc, build_nn_budget, generate_synthetic_mnpc, halfspace_quadratic,
    AnalyticId, RandomQcqp, TabularCmdp,
};
use gdpa_core::{ConstrainedProblem, FnProblem, GdpaConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn projections(d: usize) -> Vec<Projection> {
    vec![
        Projection::Identity,
        Projection::new_box(vec![-1.0; d], (0..d).map(|i| i as f64 * 0.5).collect()).unwrap(),
        Projection::new_ball(vec![0.3; d], 1.7).unwrap(),
        Projection::NonnegativeOrthant,
        Projection::new_simplex_blocks(3).unwrap(),
    ]
}

#[test]
fn projections_are_nonexpansive_and_idempotent() {
    let d = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for p in projections(d) {
        for _ in 0..10_000 {
            let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
            let u: Vec<f64> = (0..d).map(|_| scale * rng.gen_range(-3.0..3.0)).collect();
            let v: Vec<f64> = (0..d).map(|_| scale * rng.gen_range(-3.0..3.0)).collect();
            let (pu, pv) = (p.project(&u).unwrap(), p.project(&v).unwrap());
            assert!(dist(&pu, &pv) <= dist(&u, &v) * (1.0 + 1e-12) + 1e-15, "{p:?}");
            let ppu = p.project(&pu).unwrap();
            assert!(pu.iter().zip(&ppu).all(|(a, b)| (a - b).abs() <= 1e-12), "{p:?}");
        }
    }
}

#[test]
fn weighted_average_stays_in_convex_sets() {
    let d = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for p in projections(d) {
        for _ in 0..200 {
            let entries: Vec<(Vec<f64>, f64)> = (0..rng.gen_range(1..30))
                .map(|_| {
                    let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
                    (p.project(&v).unwrap(), rng.gen_range(0.01..100.0))
                })
                .collect();
            let avg = weighted_average(&entries).unwrap();
            assert!(dist(&avg, &p.project(&avg).unwrap()) <= 1e-10, "{p:?}");
        }
    }
}

proptest! {
    #[test]
    fn positive_part_is_nonnegative_and_idempotent(v in proptest::collection::vec(-1e6f64..1e6, 0..20)) {
        let p = positive_part(&v);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert_eq!(positive_part(&p), p);
    }

    #[test]
    fn schedules_are_monotone_and_coupled(
        tau in 0.01f64..0.99,
        beta0 in 1e-4f64..1e3,
        a1 in 1e-3f64..1e3,
        a2 in 1e-3f64..1e3,
        a3 in 1e-3f64..1e3,
        r in 1usize..1_000_000,
    ) {
        let cfg = GdpaConfig { tau, beta0, alpha01: a1, alpha02: a2, alpha03: a3, ..Default::default() };
        let (s, t) = (schedule(&cfg, r), schedule(&cfg, r + 1));
        prop_assert!(s.beta > 0.0 && s.alpha > 0.0 && s.gamma > 0.0);
        prop_assert!(t.beta >= s.beta && t.alpha <= s.alpha && t.gamma <= s.gamma);
        prop_assert_eq!(s.gamma, tau / s.beta);
        prop_assert!((s.gamma * s.beta - tau).abs() <= 2.0 * tau * f64::EPSILON);
    }

    #[test]
    fn stationarity_matches_an_explicit_expansion(
        seed in 0u64..500,
        alpha in 1e-3f64..10.0,
        beta in 1e-3f64..10.0,
    ) {
        let p = RandomQcqp::generate(seed, 4, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-6.0..6.0)).collect();
        let x = p.projection().project(&x).unwrap();
        let lambda: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..3.0)).collect();
        let (v, sq) = stationarity_measure(&p, &x, &lambda, alpha, beta).unwrap();

        let (grad, g, jac) = (p.gradient(&x), p.constraints(&x), p.jacobian(&x));
        let mut grad_l = grad.clone();
        for i in 0..3 {
            for j in 0..4 {
                grad_l[j] += jac[i * 4 + j] * lambda[i];
            }
        }
        let trial: Vec<f64> = (0..4).map(|j| x[j] - alpha * grad_l[j]).collect();
        let proj = p.projection().project(&trial).unwrap();
        let mut expected: Vec<f64> = (0..4).map(|j| (x[j] - proj[j]) / alpha).collect();
        let dual_proj = positive_part(&(0..3).map(|i| lambda[i] + beta * g[i]).collect::<Vec<_>>());
        expected.extend((0..3).map(|i| (lambda[i] - dual_proj[i]) / beta));
        for (a, b) in v.iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        let esq: f64 = expected.iter().map(|e| e * e).sum();
        prop_assert!((sq - esq).abs() <= 1e-12 * (1.0 + esq));
    }

    #[test]
    fn perturbed_lagrangian_is_f_when_feasible_and_unweighted(
        x in proptest::collection::vec(-0.5f64..0.5, 2),
        beta in 1e-3f64..1e3,
        tau in 0.01f64..0.99,
    ) {
        let inst = build_analytic(AnalyticId::CircleExterior);
        // circle-exterior needs ‖x‖ ≥ 1, so push the point outward
        let x: Vec<f64> = x.iter().map(|v| v + 2.0_f64.copysign(*v)).collect();
        prop_assume!(inst.problem.constraints(&x)[0] <= 0.0);
        let value = perturbed_lagrangian(&inst.problem, &x, &[0.0], beta, tau).unwrap();
        prop_assert_eq!(value, inst.problem.objective(&x));
    }
}

#[test]
fn effective_constants_are_deterministic() {
    let data = generate_synthetic_mnpc(3, 3, 4, 6, 0.4).unwrap();
    let problems: Vec<Box<dyn ConstrainedProblem>> = vec![
        Box::new(build_analytic(AnalyticId::CircleExterior).problem),
        Box::new(RandomQcqp::generate(5, 4, 2).unwrap()),
        Box::new(build_mnpc(&data, 0.1, &[0.8, 0.8]).unwrap()),
    ];
    for p in &problems {
        let a = effective_constants(p.as_ref(), 32, 9).unwrap();
        let b = effective_constants(p.as_ref(), 32, 9).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn dual_iterates_stay_nonnegative_on_random_problems() {
    for seed in 0..20 {
        let p = RandomQcqp::generate(seed, 4, 3).unwrap();
        let cfg = GdpaConfig {
            max_iters: 100_000,
            eps_stat: 1e-300,
            eps_feas: 1e-300,
            ..Default::default()
        };
        let x0 = sample_points(&p, 1, seed).unwrap().remove(0);
        let mut count = 0usize;
        let res = solve_with_observer(&p, &cfg, &x0, None, |s| {
            assert!(s.lambda_next.iter().all(|&l| l >= 0.0), "seed {seed} r {}", s.r);
            count += 1;
        })
        .unwrap();
        assert_eq!(count, 100_000);
        assert!(res.lambda_final.iter().all(|&l| l >= 0.0));
    }
}

#[test]
fn averages_match_observer_recomputation() {
    for seed in 0..5 {
        let p = RandomQcqp::generate(seed, 5, 2).unwrap();
        let cfg = GdpaConfig {
            max_iters: 5000,
            eps_stat: 1e-300,
            ..Default::default()
        };
        let x0 = vec![0.5; 5];
        let mut xs = Vec::new();
        let mut ls = Vec::new();
        let res = solve_with_observer(&p, &cfg, &x0, None, |s| {
            xs.push((s.x.to_vec(), s.steps.beta));
            ls.push((s.lambda.to_vec(), s.steps.beta));
        })
        .unwrap();
        assert_eq!(res.iterations, xs.len());
        for (avg, entries) in [(&res.x_avg, &xs), (&res.lambda_avg, &ls)] {
            let re = weighted_average(entries).unwrap();
            for (a, b) in avg.iter().zip(&re) {
                assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "seed {seed}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn baselines_share_the_trace_schema_and_keep_duals_nonnegative() {
    let p = build_analytic(AnalyticId::Scaled1d).problem;
    let pen = solve_penalty(&p, &PenaltyConfig::default(), &[0.0]).unwrap();
    let alm = solve_alm(&p, &AlmConfig::default(), &[0.0], None).unwrap();
    for res in [&pen, &alm] {
        assert!(!res.trace.is_empty());
        for rec in &res.trace {
            assert!(rec.feasibility >= 0.0 && rec.slackness >= 0.0 && rec.stationarity_sq >= 0.0);
            assert!(rec.alpha > 0.0 && rec.beta > 0.0);
        }
    }
    assert!(pen.trace.iter().all(|r| r.lambda_norm == 0.0));
    assert!(alm.lambda_final.iter().all(|&l| l >= 0.0));
}

#[test]
fn all_three_solvers_agree_on_the_scaled_problem() {
    let p = build_analytic(AnalyticId::Scaled1d).problem;
    let gd = gdpa_core::solve(&p, &GdpaConfig::default(), &[0.0], None).unwrap();
    let pen = solve_penalty(&p, &PenaltyConfig::default(), &[0.0]).unwrap();
    let alm = solve_alm(&p, &AlmConfig::default(), &[0.0], None).unwrap();
    for (name, res) in [("gdpa", &gd), ("penalty", &pen), ("alm", &alm)] {
        assert!((res.x_final[0] - 1.0).abs() <= 5e-2, "{name}: {}", res.x_final[0]);
    }
}

#[test]
fn every_bundled_problem_passes_the_gradient_check() {
    let data = generate_synthetic_mnpc(11, 3, 7, 8, 0.5).unwrap();
    let mut problems: Vec<(String, Box<dyn ConstrainedProblem>)> = AnalyticId::ALL
        .iter()
        .map(|&id| (id.name().to_string(), Box::new(build_analytic(id).problem) as Box<dyn ConstrainedProblem>))
        .collect();
    problems.push(("halfspace-5".into(), Box::new(halfspace_quadratic(5).problem)));
    problems.push(("mnpc".into(), Box::new(build_mnpc(&data, 0.05, &[0.7, 0.7]).unwrap())));
    problems.push(("nn".into(), Box::new(build_nn_budget(&data, 5, &[0.2, 0.3]).unwrap())));
    problems.push((
        "cmdp".into(),
        Box::new(build_cmdp(TabularCmdp::random(4, 6, 3, 2, 0.8).unwrap()).unwrap()),
    ));
    problems.push(("qcqp".into(), Box::new(RandomQcqp::generate(8, 6, 3).unwrap())));
    for (name, p) in &problems {
        let pts = sample_points(p.as_ref(), 20, 123).unwrap();
        let report = check_gradients(p.as_ref(), &pts, 1e-6).unwrap();
        assert!(report.passes(1e-5), "{name}: {report:?}");
    }
}

#[test]
fn fn_problem_with_box_runs_end_to_end() {
    // min (x-3)² s.t. x ≤ 2 on [0, 10]
    let p = FnProblem::new(1, |x| (x[0] - 3.0).powi(2), |x| vec![2.0 * (x[0] - 3.0)])
        .with_constraints(1, |x| vec![x[0] - 2.0], |_| vec![1.0])
        .with_projection(Projection::new_box(vec![0.0], vec![10.0]).unwrap())
        .unwrap();
    let cfg = GdpaConfig {
        beta0: 10.0,
        alpha01: 0.5,
        alpha03: 10.0,
        max_iters: 50_000,
        ..Default::default()
    };
    let res = gdpa_core::solve(&p, &cfg, &[9.0], None).unwrap();
    assert!((res.x_final[0] - 2.0).abs() < 1e-2, "{:?}", res.x_final);
    assert!((res.lambda_final[0] - 2.0).abs() < 5e-2, "{:?}", res.lambda_final);
}
