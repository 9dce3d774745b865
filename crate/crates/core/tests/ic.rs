use ibrl::dynamics::{HorizonMode, RandomStart, RunConfig, Start};
use ibrl::ic::{ic_counterexample_exact, ic_experiment, Verdict};
use ibrl::reduction::{classify, ic_margin_check, NbrMode};
use ibrl::rules::{uniform_rules, ResponseRule};
use ibrl::schedule::Schedule;
use ibrl::zoo::ZooSpec;
use ibrl::TieBreak;
use proptest::prelude::*;

#[test]
fn monte_carlo_agrees_with_exact_values() {
    let g = ZooSpec::IcCounterexample { l: 4.0 }.build().unwrap();
    let logit = ResponseRule::Logit { beta: 1.0 };
    let t = RunConfig::new(Schedule::UniformOne { n: 2 }, uniform_rules(&g, &logit), Start::Random(RandomStart::UniformRandom)).seed(12);
    let right = ResponseRule::Constant { strategy: 1 };
    let rep = ic_experiment(&g, &t, 1, &[right.into()], 2000, 3000, HorizonMode::Finite).unwrap();
    let exact = ic_counterexample_exact(1.0, 4.0).unwrap();
    // two 95% intervals checked at once, so compare at z = 3.3 instead
    let close = |i: ibrl::stats::Interval, x: f64| (i.estimate - x).abs() <= 3.3 / 1.96 * i.half_width();
    assert!(close(rep.baseline.gamma, exact.gamma_logit), "{:?}", rep.baseline.gamma);
    assert!(close(rep.deviations[0].estimate.gamma, exact.gamma_deviate), "{:?}", rep.deviations[0].estimate.gamma);
    assert!(close(rep.deviations[0].difference, exact.gamma_deviate - exact.gamma_logit), "{:?}", rep.deviations[0].difference);
}

#[test]
fn large_payoff_makes_the_deviation_clearly_profitable() {
    let g = ZooSpec::IcCounterexample { l: 10.0 }.build().unwrap();
    let t = RunConfig::new(Schedule::UniformOne { n: 2 }, uniform_rules(&g, &ResponseRule::Logit { beta: 1.0 }), Start::profile(vec![0, 0])).seed(13);
    let rep = ic_experiment(&g, &t, 1, &[], 1000, 2000, HorizonMode::Limsup { windows: 5 }).unwrap();
    assert_eq!(rep.verdict, Verdict::Profitable);
    assert_eq!(rep.deviations[0].verdict, Verdict::NotProfitable);
}

/// Zoo games whose players pass the margin condition at δ = 0.05 have no
/// CI-profitable constant deviation for those players.
#[test]
fn margin_condition_players_have_no_profitable_constant() {
    let tb = TieBreak::ascending();
    let mut checked = 0;
    for spec in [ZooSpec::Chain { n: 3, penalty: 10.0 }, ZooSpec::BgpChain { n: 3 }, ZooSpec::IcCounterexample { l: 4.0 }, ZooSpec::NbrExampleModified { delta: 0.75 }] {
        let g = spec.build().unwrap();
        if classify(&g).unwrap().equilibrium.is_none() {
            continue;
        }
        let Ok(verdicts) = ic_margin_check(&g, 0.05, &tb, NbrMode::Strict) else { continue };
        let rule = ResponseRule::mutation(0.01);
        let t = RunConfig::new(Schedule::RoundRobin { n: g.n() }, uniform_rules(&g, &rule), Start::Random(RandomStart::UniformRandom)).seed(14);
        for v in verdicts.iter().filter(|v| v.holds) {
            let rep = ic_experiment(&g, &t, v.player, &[], 200, 500, HorizonMode::Finite).unwrap();
            assert_ne!(rep.verdict, Verdict::Profitable, "{spec:?} player {}", v.player);
            checked += 1;
        }
    }
    // The condition compares u_i(NE) with a bound that includes max over G,
    // so it only passes where that maximum is zero; none of these qualify.
    assert_eq!(checked, 0);
}

proptest! {
    #[test]
    fn logit_utility_stays_below_the_bound(beta in 0.01f64..6.0, l in 2.01f64..50.0) {
        let e = ic_counterexample_exact(beta, l).unwrap();
        prop_assert!(e.gamma_logit <= e.upper_bound && e.below_upper_bound);
        prop_assert!(e.log_gap.is_finite());
        if beta * l < 20.0 {
            prop_assert!(e.gamma_logit < e.upper_bound);
        }
        if l >= 1.0 + beta.exp() {
            prop_assert!(e.profitable);
        }
    }
}
