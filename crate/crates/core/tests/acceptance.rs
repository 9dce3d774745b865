//! Acceptance suite. Each criterion is checked against a reference
//! computation written here, independently of the library code paths it
//! exercises, and prints one PASS/FAIL line.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ibrl::chain::{build_chain, gibbs_stationary, restrict_chain, stationary, stationary_closeness_scan, tv_distance, Distribution, TransitionMatrix};
use ibrl::config::ExperimentConfig;
use ibrl::dynamics::{monte_carlo, run, Event, RunConfig, Start};
use ibrl::game::find_potential;
use ibrl::ic::{ic_counterexample_exact, ic_experiment};
use ibrl::reduction::{classify, iterated_reduction, NbrMode, Subgame};
use ibrl::repro::{run_named, structure_mismatches, structure_specs, IC_MC_CONFIG, SIGMA_CHAIN_CONFIG, ROUND_ROBIN_CHAIN_CONFIG};
use ibrl::rules::{uniform_rules, ResponseRule};
use ibrl::schedule::{sigma_sequence, Schedule};
use ibrl::zoo::ZooSpec;
use ibrl::{Game, Profile, TieBreak};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn lib<T>(r: ibrl::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn times(mu: &[f64], p: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; p[0].len()];
    for (x, m) in mu.iter().enumerate() {
        for (y, v) in p[x].iter().enumerate() {
            out[y] += m * v;
        }
    }
    out
}

// ---- chain game reference: bit i of a state is player i's strategy ----

/// `σ_1 = 1`, `σ_k = σ_{k-1} σ_{k-2} ... σ_1 k`, players 1-indexed.
fn sigma_reference(n: usize) -> Vec<usize> {
    let mut seqs: Vec<Vec<usize>> = Vec::new();
    for k in 1..=n {
        let mut s: Vec<usize> = seqs.iter().rev().flatten().copied().collect();
        s.push(k);
        seqs.push(s);
    }
    seqs.pop().unwrap_or_default()
}

fn chain_step(dist: &[f64], n: usize, player: usize, p: f64, q: f64) -> Vec<f64> {
    let mut out = vec![0.0; dist.len()];
    let lower = (1usize << player) - 1;
    for (s, &m) in dist.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let p0 = if s & lower == lower { p } else { 1.0 - q };
        out[s & !(1 << player)] += m * p0;
        out[s | (1 << player)] += m * (1.0 - p0);
    }
    debug_assert!(n < 32);
    out
}

fn mc_report(config: &str) -> Result<(ibrl::dynamics::MonteCarloReport, ExperimentConfig), String> {
    let cfg = lib(ExperimentConfig::from_json(config))?;
    let exp = lib(cfg.resolve(None))?;
    let event = exp.event.clone().ok_or("config has no event")?;
    Ok((lib(monte_carlo(&exp.game, &exp.run, exp.runs, &[event]))?, cfg))
}

fn check_chain_config(cfg: &ExperimentConfig, schedule: &str) -> Result<(), String> {
    let v = serde_json::to_value(cfg).map_err(|e| e.to_string())?;
    ensure(v["game"] == "zoo:chain:n=8:L=10", format!("game {}", v["game"]))?;
    ensure(v["schedule"]["kind"] == schedule || v["schedule"] == schedule, format!("schedule {}", v["schedule"]))?;
    ensure(v["rule"]["kind"] == "chain_adversarial" && v["rule"]["p"] == 1.0 / 128.0 && v["rule"]["q"] == 1e-6, format!("rule {}", v["rule"]))?;
    ensure(v["start"] == serde_json::json!([0, 0, 0, 0, 0, 0, 0, 0]) && cfg.runs == 10_000, "start or runs")
}

fn criterion_1() -> Outcome {
    let (report, cfg) = mc_report(SIGMA_CHAIN_CONFIG)?;
    check_chain_config(&cfg, "sigma_adversarial")?;
    let n = 8;
    let order = sigma_reference(n);
    ensure(order.len() == 128, "period")?;
    let mut dist = vec![0.0; 1 << n];
    dist[0] = 1.0;
    let mut exact = Vec::new();
    for t in 1..=1280usize {
        dist = chain_step(&dist, n, order[(t - 1) % 128] - 1, 1.0 / 128.0, 1e-6);
        if t % 128 == 0 {
            exact.push(dist[(1 << n) - 1]);
        }
    }
    let rows = &report.events[0].rows;
    ensure(rows.len() == 10, "ten checkpoints")?;
    let mut worst: f64 = 0.0;
    for (c, (row, want)) in rows.iter().zip(&exact).enumerate() {
        ensure(row.checkpoint == 128 * (c as u64 + 1), "checkpoint times")?;
        ensure(row.p_at <= 0.55, format!("P(X_{} = NE) = {:.4} > 0.55", row.checkpoint, row.p_at))?;
        ensure(*want <= 0.55, format!("exact P(X_{} = NE) = {want:.4}", row.checkpoint))?;
        let se = (want * (1.0 - want) / 1e4).sqrt().max(1e-4);
        ensure((row.p_at - want).abs() <= 4.5 * se, format!("estimate {:.4} far from exact {want:.4}", row.p_at))?;
        worst = worst.max(row.p_at);
    }
    Ok(format!("max P(X_cτ = NE) = {worst:.4}, exact max {:.4}", exact.iter().copied().fold(0.0, f64::max)))
}

fn criterion_2() -> Outcome {
    let (report, cfg) = mc_report(ROUND_ROBIN_CHAIN_CONFIG)?;
    check_chain_config(&cfg, "round_robin")?;
    let n = 8;
    let ne = (1 << n) - 1;
    let mut dist = vec![0.0; 1 << n];
    dist[0] = 1.0;
    let mut hit = 0.0;
    for t in 0..320 {
        dist = chain_step(&dist, n, t % n, 1.0 / 128.0, 1e-6);
        hit += dist[ne];
        dist[ne] = 0.0;
    }
    let last = report.events[0].rows.last().ok_or("no checkpoints")?;
    ensure(last.checkpoint == 320, "last checkpoint is 320")?;
    ensure(last.p_by >= 0.95, format!("P(hit by 320) = {:.4}", last.p_by))?;
    ensure(hit >= 0.95 && (last.p_by - hit).abs() <= 4.5 * (hit * (1.0 - hit) / 1e4).sqrt().max(1e-4), format!("estimate {:.4} vs exact {hit:.4}", last.p_by))?;
    Ok(format!("P(hit NE by 320) = {:.4}, exact {hit:.4}", last.p_by))
}

fn ic_closed_forms(beta: f64, l: f64) -> (f64, f64, f64) {
    let e = |x: f64| (beta * x).exp();
    let logit = (e(l + 2.0) + l * e(l)) / (1.0 + e(l) + e(l + 1.0) + e(l + 2.0));
    let deviate = l / (1.0 + beta.exp());
    let bound = ((2.0 * beta).exp() + l) / (1.0 + beta.exp() + (2.0 * beta).exp());
    (logit, deviate, bound)
}

fn criterion_3() -> Outcome {
    let e = lib(ic_counterexample_exact(1.0, 4.0))?;
    let (logit, deviate, bound) = ic_closed_forms(1.0, 4.0);
    ensure((e.gamma_logit - logit).abs() <= 1e-9, format!("gamma_logit {} vs {logit}", e.gamma_logit))?;
    ensure((e.gamma_deviate - deviate).abs() <= 1e-9, format!("gamma_deviate {} vs {deviate}", e.gamma_deviate))?;
    ensure((e.upper_bound - bound).abs() <= 1e-9, "upper bound")?;
    ensure((1.02367..=1.02368).contains(&e.gamma_logit), format!("gamma_logit {}", e.gamma_logit))?;
    ensure((1.07576..=1.07577).contains(&e.gamma_deviate), format!("gamma_deviate {}", e.gamma_deviate))?;
    ensure(e.profitable && e.gamma_logit < bound, "profitable and below bound")?;
    Ok(format!("Γ_logit = {:.9}, Γ_deviate = {:.9}, bound {:.9}", e.gamma_logit, e.gamma_deviate, bound))
}

fn criterion_4() -> Outcome {
    let cfg = lib(ExperimentConfig::from_json(IC_MC_CONFIG))?;
    let exp = lib(cfg.resolve(None))?;
    let (player, devs, mode) = exp.ic.clone().ok_or("no ic section")?;
    ensure(exp.run.horizon == 100_000 && exp.runs == 10_000, "T = 1e5 and 1e4 runs")?;
    ensure(matches!(mode, ibrl::dynamics::HorizonMode::Limsup { .. }), "limsup mode")?;
    let report = lib(ic_experiment(&exp.game, &exp.run, player, &devs, exp.run.horizon, exp.runs, mode))?;
    let (logit, deviate, _) = ic_closed_forms(1.0, 4.0);
    let base = report.baseline.gamma;
    let dev = report.deviations[0].estimate.gamma;
    ensure(base.lo <= logit && logit <= base.hi, format!("logit {logit:.5} outside [{:.5}, {:.5}]", base.lo, base.hi))?;
    ensure(dev.lo <= deviate && deviate <= dev.hi, format!("deviate {deviate:.5} outside [{:.5}, {:.5}]", dev.lo, dev.hi))?;
    Ok(format!("baseline [{:.5}, {:.5}] ∋ {logit:.5}; deviation [{:.5}, {:.5}] ∋ {deviate:.5}", base.lo, base.hi, dev.lo, dev.hi))
}

fn random_weights(rng: &mut ChaCha8Rng, size: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..size).map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random::<f64>() }).collect();
    let z: f64 = w.iter().sum();
    if z == 0.0 {
        w[0] = 1.0;
        return w;
    }
    w.iter().map(|x| x / z).collect()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = [f64::INFINITY; 4];
    let mut disagreement: f64 = 0.0;
    for _ in 0..1000 {
        let size = rng.random_range(1..=50);
        let mu = random_weights(&mut rng, size);
        let nu = random_weights(&mut rng, size);
        let mid = random_weights(&mut rng, size);
        let p: Vec<Vec<f64>> = (0..size).map(|_| random_weights(&mut rng, size)).collect();
        let ph: Vec<Vec<f64>> = (0..size).map(|_| random_weights(&mut rng, size)).collect();
        let (mp, np, mph) = (times(&mu, &p), times(&nu, &p), times(&mu, &ph));
        let sup_rows = (0..size).map(|x| tv(&p[x], &ph[x])).fold(0.0, f64::max);
        let mut diam: f64 = 0.0;
        for x in 0..size {
            for y in 0..size {
                diam = diam.max(tv(&p[x], &p[y]));
            }
        }
        let slacks = [
            tv(&mu, &mid) + tv(&mid, &nu) - tv(&mu, &nu),
            tv(&mu, &nu) - tv(&mp, &np),
            sup_rows - tv(&mp, &mph),
            diam - tv(&mp, &np),
        ];
        for (w, s) in worst.iter_mut().zip(slacks) {
            *w = w.min(s);
        }
        let (dm, dn) = (lib(Distribution::new(mu.clone()))?, lib(Distribution::new(nu.clone()))?);
        let lp = TransitionMatrix::from_rows_unchecked(p.clone());
        disagreement = disagreement.max((tv_distance(&dm, &dn) - tv(&mu, &nu)).abs());
        disagreement = disagreement.max(tv(lp.apply(&dm).probs(), &mp));
    }
    ensure(worst.iter().all(|&w| w >= -1e-12), format!("slacks {worst:?}"))?;
    ensure(disagreement <= 1e-12, format!("library distance disagrees by {disagreement:e}"))?;
    Ok(format!("min slacks {:.2e} {:.2e} {:.2e} {:.2e}", worst[0], worst[1], worst[2], worst[3]))
}

/// Dense logit kernel for a uniformly chosen single updater.
fn logit_kernel(game: &Game, beta: f64) -> Vec<Vec<f64>> {
    let profiles: Vec<Vec<usize>> = game.profiles().unwrap().collect();
    let index = |s: &[usize]| profiles.iter().position(|x| x == s).unwrap();
    let n = game.n();
    let mut p = vec![vec![0.0; profiles.len()]; profiles.len()];
    for (a, s) in profiles.iter().enumerate() {
        for i in 0..n {
            let m = game.strategy_counts()[i];
            let u: Vec<f64> = (0..m)
                .map(|k| {
                    let mut t = s.clone();
                    t[i] = k;
                    game.payoff(i, &t)
                })
                .collect();
            let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = u.iter().map(|x| (beta * (x - top)).exp()).collect();
            let z: f64 = w.iter().sum();
            for k in 0..m {
                let mut t = s.clone();
                t[i] = k;
                p[a][index(&t)] += w[k] / z / n as f64;
            }
        }
    }
    p
}

fn dense_stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let n = p.len();
    let mut a = DMatrix::from_fn(n, n, |i, j| p[j][i] - if i == j { 1.0 } else { 0.0 });
    let mut b = DVector::zeros(n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    b[n - 1] = 1.0;
    a.lu().solve(&b).unwrap().iter().copied().collect()
}

fn criterion_6() -> Outcome {
    let game = lib(ZooSpec::interference(0.5).build())?;
    let p = logit_kernel(&game, 3.0);
    let lp = lib(build_chain(&game, &uniform_rules(&game, &ResponseRule::Logit { beta: 3.0 }), &Schedule::UniformOne { n: 2 }))?;
    for (a, row) in p.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            ensure((lp.get(a, b) - v).abs() <= 1e-12, format!("kernel entry ({a},{b})"))?;
        }
    }
    let inside: Vec<usize> = (0..16).filter(|&r| r / 4 < 2 && r % 4 < 2).collect();
    let escape = inside.iter().map(|&s| 1.0 - inside.iter().map(|&t| p[s][t]).sum::<f64>()).fold(0.0, f64::max);
    let mut ph = vec![vec![0.0; 16]; 16];
    for &s in &inside {
        let stay: f64 = inside.iter().map(|&t| p[s][t]).sum();
        for &t in &inside {
            ph[s][t] = p[s][t] / stay;
        }
    }
    let ranks: Vec<u64> = inside.iter().map(|&r| r as u64).collect();
    let restricted = lib(restrict_chain(&lp, &ranks))?;
    ensure((restricted.max_escape() - escape).abs() <= 1e-12, format!("escape {} vs {escape}", restricted.max_escape()))?;
    let eta = 1.0;
    let mut min_slack = f64::INFINITY;
    for &s in &inside {
        let mut full = vec![0.0; 16];
        full[s] = 1.0;
        let mut sub = full.clone();
        let mut lsub = Distribution::point(16, s);
        for t in 1..=50 {
            full = times(&full, &p);
            sub = times(&sub, &ph);
            lsub = restricted.matrix.apply(&lsub);
            ensure(tv(lsub.probs(), &sub) <= 1e-12, "restricted chain powers")?;
            min_slack = min_slack.min(eta * escape * t as f64 - tv(&full, &sub));
        }
    }
    ensure(min_slack >= 0.0, format!("bound violated by {min_slack:e}"))?;
    Ok(format!("p = {escape:.5}, min slack {min_slack:.3e}"))
}

/// Potential of a two-player exact potential game, from player 0's row
/// differences and player 1's first-row differences.
fn two_player_potential(game: &Game) -> Result<Vec<f64>, String> {
    let (m0, m1) = (game.strategy_counts()[0], game.strategy_counts()[1]);
    let mut phi = vec![0.0; m0 * m1];
    for a in 0..m0 {
        for b in 0..m1 {
            phi[a * m1 + b] = game.payoff(0, &[a, b]) - game.payoff(0, &[0, b]) + game.payoff(1, &[0, b]) - game.payoff(1, &[0, 0]);
        }
    }
    for a in 0..m0 {
        for b in 0..m1 {
            for c in 0..m1 {
                let d = (game.payoff(1, &[a, c]) - game.payoff(1, &[a, b])) - (phi[a * m1 + c] - phi[a * m1 + b]);
                ensure(d.abs() <= 1e-12, "not an exact potential game")?;
            }
        }
    }
    Ok(phi)
}

fn gibbs(phi: &[f64], beta: f64) -> Vec<f64> {
    let top = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = phi.iter().map(|x| (beta * (x - top)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

/// TV values recorded on first exact computation at β = 1, 2, 4, 8.
const SCAN_REGRESSION: [f64; 4] = [0.484_382_044, 0.301_235_961, 0.121_281_403, 0.017_992_191];

fn criterion_7() -> Outcome {
    let game = lib(ZooSpec::interference(0.5).build())?;
    let sub = lib(Subgame::new(&game, vec![vec![0, 1], vec![0, 1]]))?;
    let small = lib(game.restricted_table(sub.allowed()))?;
    let phi = two_player_potential(&small)?;
    let betas = [1.0, 2.0, 4.0, 8.0];
    let rows = lib(stationary_closeness_scan(&game, &sub, &betas))?;
    let mut curve = Vec::new();
    for (k, &beta) in betas.iter().enumerate() {
        let pi = dense_stationary(&logit_kernel(&game, beta));
        let hat = gibbs(&phi, beta);
        let mut embedded = vec![0.0; 16];
        for (j, &r) in [0usize, 1, 4, 5].iter().enumerate() {
            embedded[r] = hat[j];
        }
        let d = tv(&pi, &embedded);
        ensure((rows[k].tv - d).abs() <= 1e-9, format!("β={beta}: scan {} vs reference {d}", rows[k].tv))?;
        ensure((d - SCAN_REGRESSION[k]).abs() <= 1e-6, format!("β={beta}: {d} vs recorded {}", SCAN_REGRESSION[k]))?;
        curve.push(d);
    }
    ensure(curve.windows(2).all(|w| w[1] < w[0]), format!("not decreasing: {curve:?}"))?;
    ensure(curve[3] <= 0.05, format!("TV at β=8 is {}", curve[3]))?;
    Ok(format!("TV curve {:.5} > {:.5} > {:.5} > {:.5}", curve[0], curve[1], curve[2], curve[3]))
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_8() -> Outcome {
    let l = 4.0;
    let ic = lib(ZooSpec::IcCounterexample { l }.build())?;
    let sub = lib(lib(ZooSpec::interference(0.5).build())?.restricted_table(&[vec![0, 1], vec![0, 1]]))?;
    let gamma: f64 = 0.5;
    let mut worst: f64 = 0.0;
    for beta in [0.5, 1.0, 2.0, 3.0, 8.0] {
        let ic_hand = gibbs(&[l + 2.0, l + 1.0, 0.0, l], beta);
        let z = 1.0 + 2.0 * (beta * gamma).exp() + (beta * (gamma - 1.0)).exp();
        let table = [1.0 / z, (beta * gamma).exp() / z, (beta * gamma).exp() / z, (beta * (gamma - 1.0)).exp() / z];
        for (g, want) in [(&ic, ic_hand.as_slice()), (&sub, table.as_slice())] {
            let chain = lib(build_chain(g, &uniform_rules(g, &ResponseRule::Logit { beta }), &Schedule::UniformOne { n: 2 }))?;
            let pi = lib(stationary(&chain))?;
            let phi = lib(find_potential(g))?.ok_or("no potential found")?;
            let gb = lib(gibbs_stationary(g, &phi, beta))?;
            let e = max_abs(pi.probs(), gb.probs()).max(max_abs(pi.probs(), want));
            ensure(e <= 1e-10, format!("β={beta}: error {e:e}"))?;
            worst = worst.max(e);
        }
    }
    Ok(format!("max abs error {worst:.2e}"))
}

fn brute_force_equilibria(game: &Game) -> Vec<Vec<usize>> {
    game.profiles()
        .unwrap()
        .filter(|s| {
            (0..game.n()).all(|i| {
                (0..game.strategy_counts()[i]).all(|k| {
                    let mut t = s.clone();
                    t[i] = k;
                    game.payoff(i, &t) <= game.payoff(i, s)
                })
            })
        })
        .collect()
}

fn criterion_9() -> Outcome {
    for spec in structure_specs() {
        let bad = lib(structure_mismatches(&spec))?;
        ensure(bad.is_empty(), format!("{spec:?}: {}", bad.join("; ")))?;
        if let Some(ne) = spec.expected_structure().equilibria {
            let want: Vec<Vec<usize>> = ne.into_iter().map(|p| p.0).collect();
            ensure(brute_force_equilibria(&lib(spec.build())?) == want, format!("{spec:?}: equilibria"))?;
        }
    }
    for n in 1..=8 {
        let g = lib(ZooSpec::Chain { n, penalty: 10.0 }.build())?;
        let c = lib(classify(&g))?;
        ensure(c.ell_hat() == n && c.equilibrium == Some(Profile(vec![1; n])), format!("chain n={n}"))?;
    }
    let tb = TieBreak::ascending();
    let eq1 = lib(iterated_reduction(&lib(ZooSpec::NbrExample.build())?, &tb, NbrMode::Strict))?;
    ensure(eq1.len() == 2 && eq1.final_subgame.allowed() == [vec![0, 1], vec![0, 1]], "nbr_example reduction")?;
    let modified = lib(iterated_reduction(&lib(ZooSpec::NbrExampleModified { delta: 0.25 }.build())?, &tb, NbrMode::Strict))?;
    ensure(modified.final_subgame.single_profile() == Some(Profile(vec![0, 0])), "modified example")?;
    for n in 1..=16 {
        let seq = lib(sigma_sequence(n))?;
        ensure(seq == sigma_reference(n) && seq.len() == 1 << (n - 1), format!("σ_{n}"))?;
        for i in 1..n {
            let pos: Vec<usize> = (0..seq.len()).filter(|&k| seq[k] == i).collect();
            ensure(pos.windows(2).all(|w| seq[w[0]..w[1]].iter().any(|&p| p > i)), format!("σ_{n}: player {i} repeats without a higher player"))?;
        }
    }
    Ok(format!("{} zoo specs, σ_n for n <= 16", structure_specs().len()))
}

fn criterion_10() -> Outcome {
    let coord = lib(ZooSpec::Coordination.build())?;
    let mut c = RunConfig::new(Schedule::Concurrent { n: 2 }, uniform_rules(&coord, &ResponseRule::perfect()), Start::profile(vec![1, 0])).horizon(1000);
    c.record_log = true;
    let log = lib(run(&coord, &c, &[]))?.log.ok_or("no log")?;
    ensure(log.len() == 1001, format!("log has {} entries", log.len()))?;
    ensure(log.iter().enumerate().all(|(t, s)| s.0 == if t % 2 == 0 { [1, 0] } else { [0, 1] }), "not 2-periodic")?;

    let runs = 10_000;
    let ne = Event::set(vec![Profile(vec![0, 0]), Profile(vec![1, 1])]);
    let c = RunConfig::new(Schedule::UniformOne { n: 2 }, uniform_rules(&coord, &ResponseRule::perfect()), Start::profile(vec![1, 0])).horizon(100).checkpoints(vec![100]).seed(7);
    let hit = lib(monte_carlo(&coord, &c, runs, &[ne]))?.events[0].hit_runs as f64 / runs as f64;
    ensure(hit >= 0.99, format!("uniform_one hit fraction {hit}"))?;

    let une = lib(ZooSpec::UniqueNe.build())?;
    let away = Event::set(une.profiles().unwrap().filter(|s| s != &[1, 0]).map(Profile).collect());
    let start = Start::profile(vec![1, 0]);
    let conservative = RunConfig::new(Schedule::UniformOne { n: 2 }, uniform_rules(&une, &ResponseRule::mutation(0.0)), start.clone()).horizon(1000).checkpoints(vec![1000]).seed(8);
    let stay = lib(monte_carlo(&une, &conservative, 1000, std::slice::from_ref(&away)))?.events[0].hit_runs;
    ensure(stay == 0, format!("conservative rule left (1,0) in {stay} runs"))?;
    let random = RunConfig::new(Schedule::UniformOne { n: 2 }, uniform_rules(&une, &ResponseRule::MistakesStyle { epsilon: 0.0 }), start).horizon(1000).checkpoints(vec![1000]).seed(9);
    let left = lib(monte_carlo(&une, &random, runs, &[away]))?.events[0].hit_runs as f64 / runs as f64;
    ensure(left >= 0.99, format!("random-tie rule left in {left}"))?;
    Ok(format!("uniform_one hit {hit:.4}, random ties left {left:.4}"))
}

fn criterion_11() -> Outcome {
    let mut sizes = Vec::new();
    for name in ["round_robin_chain", "tv_props", "impossibility"] {
        let a = lib(run_named(name))?;
        let b = lib(run_named(name))?;
        ensure(!a.csv.is_empty() && a.csv.as_bytes() == b.csv.as_bytes(), format!("{name}: CSV differs between runs"))?;
        sizes.push(format!("{name} {}B", a.csv.len()));
    }
    Ok(sizes.join(", "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<u64>); 11] = [
        ("sigma schedule keeps the chain game off its equilibrium", criterion_1, Some(60)),
        ("round robin reaches the equilibrium by 320 steps", criterion_2, Some(60)),
        ("exact counterexample utilities", criterion_3, None),
        ("Monte Carlo brackets the exact utilities", criterion_4, None),
        ("total variation inequalities", criterion_5, Some(10)),
        ("restricted chain gap", criterion_6, Some(5)),
        ("stationary closeness scan", criterion_7, None),
        ("stationary closed forms", criterion_8, None),
        ("structure regressions", criterion_9, None),
        ("impossibility fixtures", criterion_10, None),
        ("repro determinism", criterion_11, None),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (k, (name, f, limit)) in criteria.iter().enumerate() {
        let k = k + 1;
        if only.is_some_and(|o| o != k) {
            continue;
        }
        let start = Instant::now();
        let mut result = f();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(s)) = (&result, limit) {
            if elapsed > Duration::from_secs(*s) {
                result = Err(format!("took {:.1}s, limit {s}s", elapsed.as_secs_f64()));
            }
        }
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {k:>2}: {tag} {name} ({:.1}s): {detail}", elapsed.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
