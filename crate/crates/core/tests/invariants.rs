use moblend_core::blender::nondominated_in;
use moblend_core::env::gridworld::{GridworldEnv, GridworldTask, PERFORMANT_ARM, SAFE_ARM};
use moblend_core::env::synthetic::{NoiseCoupling, SyntheticConfig, SyntheticLinearEnv};
use moblend_core::linalg::norm2;
use moblend_core::*;
use proptest::prelude::*;

fn synthetic_runner(seed: u64, mode: SelectionMode) -> Runner<SyntheticLinearEnv> {
    let env = SyntheticLinearEnv::random(SyntheticConfig::default(), seed).unwrap();
    Runner::new(env, EstimatorConfig::with_defaults(4, 2), mode, Policy::Blend, seed).unwrap()
}

#[test]
fn every_pull_is_nondominated_among_its_ucb_rows() {
    for mode in [SelectionMode::Faithful, SelectionMode::FreshContext] {
        let mut r = synthetic_runner(11, mode);
        for _ in 0..2_000 {
            let o = r.step().unwrap();
            assert!(o.record.candidates.contains(&o.record.arm));
            assert!(assert_nondominated_pick(&o.record));
        }
    }
}

#[test]
fn gridworld_feedback_and_contexts_stay_bounded() {
    let task = GridworldTask::new(GridworldEnv::fixture(300));
    let mut r = Runner::new(
        task,
        EstimatorConfig::with_defaults(3, 2),
        SelectionMode::Faithful,
        Policy::UniformRandom,
        5,
    )
    .unwrap();
    r.run_episode(300, |o| {
        assert!(o.record.feedback.iter().all(|&y| (0.0..=1.0).contains(&y)));
        assert!(norm2(&o.record.context_pulled) <= 1.0);
        assert_eq!(o.record.feedback, o.true_means[o.record.arm.0]);
        Ok(())
    })
    .unwrap();
    assert_eq!(r.blender().estimator().norm_violations(), 0);
}

#[test]
fn safe_rollout_costs_nothing_performant_does() {
    let cfg = EstimatorConfig::with_defaults(3, 2);
    let cost_of = |arm| {
        let task = GridworldTask::new(GridworldEnv::fixture(1_000));
        let mut r = Runner::new(task, cfg, SelectionMode::Faithful, Policy::Fixed(arm), 0).unwrap();
        let mut cost = 0.0;
        r.run_episode(1_000, |o| {
            cost += 1.0 - o.record.feedback[1];
            Ok(())
        })
        .unwrap();
        cost
    };
    assert_eq!(cost_of(SAFE_ARM), 0.0);
    assert!(cost_of(PERFORMANT_ARM) > 0.0);
}

#[test]
fn shared_noise_hits_every_objective_equally() {
    let cfg = SyntheticConfig {
        coupling: NoiseCoupling::Shared,
        ..SyntheticConfig::default()
    };
    let mut env = SyntheticLinearEnv::random(cfg, 3).unwrap();
    for _ in 0..100 {
        let means = env.true_means();
        let tr = env.step(ArmId(1)).unwrap();
        let r0 = tr.feedback[0] - means[1][0];
        let r1 = tr.feedback[1] - means[1][1];
        assert!((r0 - r1).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn metric_series_invariants(seed in any::<u64>(), fresh in any::<bool>()) {
        let mode = if fresh { SelectionMode::FreshContext } else { SelectionMode::Faithful };
        let mut r = synthetic_runner(seed, mode);
        let mut trace = RunTrace::new(*r.blender().estimator().config());
        for _ in 0..150 {
            let o = r.step().unwrap();
            trace.push(o.record, o.true_means);
        }
        let s = metric_series(&trace).unwrap();
        for t in 0..trace.len() {
            prop_assert!(s.psg[t] >= 0.0 && s.maximal_loss[t] >= s.psg[t]);
            prop_assert!(s.pr_cum[t] <= s.cml_cum[t]);
            if t > 0 {
                prop_assert!(s.pr_cum[t] >= s.pr_cum[t - 1]);
                prop_assert!(s.cml_cum[t] >= s.cml_cum[t - 1]);
                prop_assert!(s.pr_theory[t] >= s.pr_theory[t - 1]);
            }
            let expect = nondominated_in(&trace.true_means[t], trace.records[t].arm);
            prop_assert_eq!(s.correct_pick[t], expect);
        }
        let rate = correct_pick_rate(&trace).unwrap();
        prop_assert!((0.0..=1.0).contains(&rate));
    }

    #[test]
    fn estimator_matches_batch_after_blended_run(seed in any::<u64>()) {
        let mut r = synthetic_runner(seed, SelectionMode::Faithful);
        let mut ctx = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..300 {
            let o = r.step().unwrap();
            ctx.push(o.record.context_pulled);
            ys.push(o.record.feedback);
        }
        let est = r.blender().estimator();
        for i in 0..2 {
            let targets: Vec<f64> = ys.iter().map(|y| y[i]).collect();
            let batch = batch_solve(&ctx, &targets, 4, 1.0).unwrap();
            for (a, b) in batch.iter().zip(&est.theta_hat()[i]) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }
    }
}
