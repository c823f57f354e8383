use proptest::prelude::*;

use qvi::diagnostics::{correction_step_audit, fejer_audit, update_rule_audit};
use qvi::experiments::{gen_recovery, run_recovery, ExampleId, RecoveryParams, TableSpec};
use qvi::geometry::ProjectionContext;
use qvi::linalg::norm;
use qvi::{solve, SolveStatus, SolverConfig, StoppingRule, TraceLevel};

fn spec_for(example: ExampleId) -> TableSpec {
    match example {
        ExampleId::Sine => TableSpec::sine(),
        _ => TableSpec {
            example,
            ..TableSpec::cubic()
        },
    }
}

fn example() -> impl Strategy<Value = ExampleId> {
    prop_oneof![
        Just(ExampleId::Cubic),
        Just(ExampleId::Sine),
        Just(ExampleId::Piecewise)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn trace_invariants_hold(ex in example(), u1 in -5.0f64..5.0, tol in prop_oneof![Just(1e-6), Just(1e-8)]) {
        let spec = spec_for(ex);
        let f = ex.mapping();
        let set = ex.feasible_set();
        let cfg = spec.config(tol).unwrap().with_trace(TraceLevel::Full);
        let r = solve(&f, &set, &[u1], &cfg).unwrap();
        let trace = r.trace.as_ref().unwrap();
        prop_assert_eq!(trace.len(), r.iterations);
        prop_assert_eq!(trace.records.last().unwrap().u_next.clone(), r.final_point.clone());

        // Tseng identity and update rule
        prop_assert!(correction_step_audit(trace, &f).unwrap() <= 1e-12);
        prop_assert!(update_rule_audit(trace, &f, spec.mu).unwrap() <= 1e-12);

        // z_n stays feasible, records chain, iterates stay finite and bounded
        let b = set.as_box().unwrap();
        for w in trace.records.windows(2) {
            prop_assert_eq!(&w[0].u_next, &w[1].u);
            prop_assert_eq!(w[0].lambda_next, w[1].lambda);
        }
        for rec in &trace.records {
            prop_assert!(b.contains(&rec.z, 0.0));
            prop_assert!(rec.u_next[0].is_finite() && rec.u_next[0].abs() < 1e6);
        }

        for u in f.known_dual_solutions() {
            prop_assert!(fejer_audit(trace, &f, u, spec.mu).unwrap() <= 1e-9);
        }

        if r.status == SolveStatus::Converged {
            let res: Vec<f64> = trace.records.iter().map(|rec| rec.residual).collect();
            let last = *res.last().unwrap();
            prop_assert!(last < 1e-3);
            // short runs are still inside the transient over their last 10 steps
            if res.len() >= 30 {
                let tail = res.iter().rev().take(10).fold(0.0f64, |a, b| a.max(*b));
                prop_assert!(tail < 1e-2);
            }
        }
    }

    #[test]
    fn stepsize_never_exceeds_growth_cap(ex in example(), u1 in -5.0f64..5.0) {
        let spec = spec_for(ex);
        let cfg = spec.config(1e-8).unwrap().with_trace(TraceLevel::Full);
        let r = solve(&ex.mapping(), &ex.feasible_set(), &[u1], &cfg).unwrap();
        let bound = spec.lambda1 + spec.xi.total_bound(cfg.max_iters);
        for l in r.trace.unwrap().lambdas() {
            prop_assert!(l > 0.0 && l <= bound + 1e-9);
        }
    }
}

#[test]
fn squared_rule_never_needs_more_steps_than_norm_rule() {
    for ex in [ExampleId::Cubic, ExampleId::Sine] {
        let spec = spec_for(ex);
        for start in &spec.starts {
            let u1 = [start.value()];
            let norm_cfg = spec.config(1e-6).unwrap();
            let sq_cfg = SolverConfig {
                stop: StoppingRule::SquaredStep { tol: 1e-6 },
                ..norm_cfg.clone()
            };
            let a = solve(&ex.mapping(), &ex.feasible_set(), &u1, &norm_cfg).unwrap();
            let b = solve(&ex.mapping(), &ex.feasible_set(), &u1, &sq_cfg).unwrap();
            assert!(b.iterations <= a.iterations, "{ex:?} u1={}", u1[0]);
        }
    }
}

#[test]
fn recovery_iterates_respect_the_relaxed_halfspace() {
    let inst = gen_recovery(32, 64, 4, 11).unwrap();
    let params = RecoveryParams::default();
    let run = run_recovery(&inst, &params.config(&inst).unwrap()).unwrap();
    let f = inst.mapping().unwrap();
    let trace = run.result.trace.as_ref().unwrap();
    assert!(correction_step_audit(trace, &f).unwrap() <= 1e-9);
    assert!(update_rule_audit(trace, &f, params.mu).unwrap() <= 1e-9);
    for rec in &trace.records {
        let ctx = ProjectionContext::new(&rec.u);
        if ctx.subgradient().iter().any(|s| *s != 0.0) {
            assert!(ctx.halfspace_slack(&rec.z, inst.omega) >= -1e-10 * (1.0 + inst.omega));
        }
    }
    assert!(run.result.status == SolveStatus::Converged);
    assert!(norm(&run.result.final_point).is_finite());
    let errs = &run.mse_series;
    assert!(errs.last().unwrap() < &1e-6);
}
