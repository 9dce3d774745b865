use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ibrl::schedule::{estimate_fairness, observation_holds, sigma_player, sigma_sequence, Schedule};

#[test]
fn uniform_one_miss_rate_matches_closed_form() {
    let n = 4;
    let r = 8;
    let est = estimate_fairness(&Schedule::UniformOne { n }, r, 20_000, 3).unwrap();
    let exact = (1.0 - 1.0 / n as f64).powi(r as i32);
    assert!(est.epsilon.contains(exact), "{:?} vs {exact}", est.epsilon);
}

#[test]
fn deterministic_schedules_meet_their_declared_fairness() {
    for sched in [Schedule::RoundRobin { n: 5 }, Schedule::SigmaAdversarial { n: 5 }, Schedule::Concurrent { n: 5 }, Schedule::ExplicitList { n: 3, list: vec![2, 0, 1, 0] }] {
        let f = sched.declared_fairness().unwrap();
        let est = estimate_fairness(&sched, f.r, 500, 9).unwrap();
        assert_eq!(est.epsilon.estimate, 0.0, "{sched:?}");
        if f.r > 1 {
            let short = estimate_fairness(&sched, f.r - 1, 500, 9).unwrap();
            assert!(short.epsilon.estimate > 0.0, "{sched:?}");
        }
    }
}

#[test]
fn sigma_schedule_follows_the_sequence() {
    let n = 6;
    let seq = sigma_sequence(n).unwrap();
    assert!(observation_holds(&seq, n, true));
    let sched = Schedule::SigmaAdversarial { n };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::new();
    for t in 0..3 * seq.len() as u64 {
        sched.select(t, &mut rng, &mut out);
        assert_eq!(out, [seq[t as usize % seq.len()] - 1]);
        assert_eq!(out[0], sigma_player(n, t));
    }
}

#[test]
fn concurrent_selects_everyone() {
    let sched = Schedule::Concurrent { n: 3 };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::new();
    sched.select(17, &mut rng, &mut out);
    assert_eq!(out, [0, 1, 2]);
    assert_eq!(sched.eta(), 3);
}
