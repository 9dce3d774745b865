//! Named end-to-end experiments with fixed seeds, each producing a CSV
//! artifact, a JSON summary and a list of pass/fail checks.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::chain::{build_chain, gibbs_stationary, restrict_chain, stationary, stationary_closeness_scan, tv_distance, Distribution, TransitionMatrix};
use crate::config::ExperimentConfig;
use crate::dynamics::{monte_carlo, run, Event, RunConfig, Start};
use crate::error::{Error, Result};
use crate::game::{find_potential, pure_nash_equilibria, Game, Profile};
use crate::ic::{ic_counterexample_exact, ic_experiment};
use crate::reduction::{classify, iterated_reduction, NbrMode, Subgame};
use crate::rules::{uniform_rules, ResponseRule};
use crate::schedule::{observation_holds, sigma_sequence, Schedule};
use crate::stats::wilson;
use crate::zoo::ZooSpec;
use crate::TieBreak;

/// Names accepted by [`run_named`], in acceptance order.
pub const EXPERIMENTS: [&str; 10] =
    ["sigma_chain", "round_robin_chain", "ic_exact", "ic_mc", "tv_props", "restricted", "closeness", "stationary", "structure", "impossibility"];

pub const SIGMA_CHAIN_CONFIG: &str = include_str!("../configs/sigma_chain.json");
pub const ROUND_ROBIN_CHAIN_CONFIG: &str = include_str!("../configs/round_robin_chain.json");
pub const IC_MC_CONFIG: &str = include_str!("../configs/ic_mc.json");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
        Check { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReproOutcome {
    pub name: String,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub csv: String,
    pub summary: serde_json::Value,
    pub seconds: f64,
}

impl ReproOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Writes `<name>.csv` and `<name>.json` into `dir`.
    pub fn write_artifacts(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.csv", self.name)), &self.csv)?;
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join(format!("{}.json", self.name)), json + "\n")?;
        Ok(())
    }
}

pub fn run_named(name: &str) -> Result<ReproOutcome> {
    let start = Instant::now();
    let (checks, csv, summary) = match name {
        "sigma_chain" => sigma_chain()?,
        "round_robin_chain" => round_robin_chain()?,
        "ic_exact" => ic_exact()?,
        "ic_mc" => ic_mc()?,
        "tv_props" => tv_props()?,
        "restricted" => restricted()?,
        "closeness" => closeness()?,
        "stationary" => stationary_forms()?,
        "structure" => structure()?,
        "impossibility" => impossibility()?,
        other => return Err(Error::input(format!("unknown experiment {other:?}; known: {}", EXPERIMENTS.join(", ")))),
    };
    Ok(ReproOutcome { name: name.into(), checks, csv, summary, seconds: start.elapsed().as_secs_f64() })
}

type Parts = (Vec<Check>, String, serde_json::Value);

fn mc_experiment(config: &str) -> Result<(crate::dynamics::MonteCarloReport, String)> {
    let exp = ExperimentConfig::from_json(config)?.resolve(None)?;
    let event = exp.event.ok_or_else(|| Error::input("experiment config needs an event"))?;
    let report = monte_carlo(&exp.game, &exp.run, exp.runs, &[event])?;
    let mut buf = Vec::new();
    report.write_csv(0, &mut buf)?;
    Ok((report, String::from_utf8(buf).expect("csv is utf-8")))
}

/// Sigma schedule with the adversarial chain rule: the equilibrium is rarely
/// occupied at period boundaries.
fn sigma_chain() -> Result<Parts> {
    let (report, csv) = mc_experiment(SIGMA_CHAIN_CONFIG)?;
    let checks = report.events[0]
        .rows
        .iter()
        .map(|r| Check::new(format!("P(X_{} = NE) <= 0.55", r.checkpoint), r.p_at <= 0.55, format!("{:.4} [{:.4}, {:.4}]", r.p_at, r.p_at_lo, r.p_at_hi)))
        .collect();
    Ok((checks, csv, serde_json::to_value(&report)?))
}

/// Round-robin schedule with the same rule converges quickly.
fn round_robin_chain() -> Result<Parts> {
    let (report, csv) = mc_experiment(ROUND_ROBIN_CHAIN_CONFIG)?;
    let last = report.events[0].rows.last().ok_or_else(|| Error::input("round_robin_chain config has no checkpoints"))?;
    let checks = vec![Check::new(
        format!("P(hit NE by {}) >= 0.95", last.checkpoint),
        last.p_by >= 0.95,
        format!("{:.4} [{:.4}, {:.4}]", last.p_by, last.p_by_lo, last.p_by_hi),
    )];
    Ok((checks, csv, serde_json::to_value(&report)?))
}

fn ic_exact() -> Result<Parts> {
    let mut csv = String::from("beta,L,gamma_logit,upper_bound,gamma_deviate,profitable,margin\n");
    let mut rows = Vec::new();
    for beta in [0.5, 1.0, 2.0] {
        for l in [2.0, 4.0, 8.0] {
            let e = ic_counterexample_exact(beta, l)?;
            writeln!(csv, "{},{},{},{},{},{},{}", beta, l, e.gamma_logit, e.upper_bound, e.gamma_deviate, e.profitable, e.margin).unwrap();
            rows.push(e);
        }
    }
    let e = ic_counterexample_exact(1.0, 4.0)?;
    let e1 = 1f64.exp();
    let bound = (e1 * e1 + 4.0) / (1.0 + e1 + e1 * e1);
    let checks = vec![
        Check::new("gamma_logit in [1.02367, 1.02368]", (1.02367..=1.02368).contains(&e.gamma_logit), format!("{:.9}", e.gamma_logit)),
        Check::new("gamma_deviate in [1.07576, 1.07577]", (1.07576..=1.07577).contains(&e.gamma_deviate), format!("{:.9}", e.gamma_deviate)),
        Check::new("deviation profitable", e.profitable, format!("{} > {}", e.gamma_deviate, e.gamma_logit)),
        Check::new("gamma_logit below (e^2+4)/(1+e+e^2)", e.gamma_logit < bound && (e.upper_bound - bound).abs() < 1e-9, format!("{:.9} < {:.9}", e.gamma_logit, bound)),
    ];
    Ok((checks, csv, json!({ "at_beta1_l4": e, "grid": rows })))
}

fn ic_mc() -> Result<Parts> {
    let exp = ExperimentConfig::from_json(IC_MC_CONFIG)?.resolve(None)?;
    let (player, devs, mode) = exp.ic.clone().ok_or_else(|| Error::input("ic_mc config needs an ic section"))?;
    let report = ic_experiment(&exp.game, &exp.run, player, &devs, exp.run.horizon, exp.runs, mode)?;
    let exact = ic_counterexample_exact(1.0, 4.0)?;
    let base = report.baseline.gamma;
    let dev = report.deviations[0].estimate.gamma;
    let mut csv = String::from("rule,estimate,lo,hi,exact\n");
    writeln!(csv, "baseline,{},{},{},{}", base.estimate, base.lo, base.hi, exact.gamma_logit).unwrap();
    writeln!(csv, "deviation,{},{},{},{}", dev.estimate, dev.lo, dev.hi, exact.gamma_deviate).unwrap();
    let checks = vec![
        Check::new("baseline CI contains exact logit utility", base.contains(exact.gamma_logit), format!("{:.5} in [{:.5}, {:.5}]", exact.gamma_logit, base.lo, base.hi)),
        Check::new("deviation CI contains exact deviation utility", dev.contains(exact.gamma_deviate), format!("{:.5} in [{:.5}, {:.5}]", exact.gamma_deviate, dev.lo, dev.hi)),
    ];
    let verdict = report.verdict;
    Ok((checks, csv, json!({ "report": report, "verdict": verdict, "exact": exact })))
}

/// Random probability vector of length `size`; about a fifth of the weights
/// are zeroed so that supports differ between draws.
fn random_weights(rng: &mut impl Rng, size: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..size).map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random() }).collect();
    let z: f64 = w.iter().sum();
    if z == 0.0 {
        w[rng.random_range(0..size)] = 1.0;
        return w;
    }
    w.iter_mut().for_each(|x| *x /= z);
    w
}

fn random_distribution(rng: &mut impl Rng, size: usize) -> Distribution {
    Distribution::new_unchecked(random_weights(rng, size))
}

fn random_kernel(rng: &mut impl Rng, size: usize) -> Vec<Vec<f64>> {
    (0..size).map(|_| random_weights(rng, size)).collect()
}

/// Slacks (right side minus left side) of the four distance inequalities on
/// one random fixture: triangle, contraction under a common kernel, kernel
/// perturbation, and the kernel-diameter bound.
pub fn tv_property_slacks(rng: &mut impl Rng, size: usize) -> [f64; 4] {
    let mu = random_distribution(rng, size);
    let nu = random_distribution(rng, size);
    let mu2 = random_distribution(rng, size);
    let p_rows = random_kernel(rng, size);
    let q_rows = random_kernel(rng, size);
    let row = |m: &[Vec<f64>], x: usize| Distribution::new_unchecked(m[x].clone());
    let sup_pq = (0..size).map(|x| tv_distance(&row(&p_rows, x), &row(&q_rows, x))).fold(0.0, f64::max);
    let mut diam: f64 = 0.0;
    for x in 0..size {
        for y in 0..size {
            diam = diam.max(tv_distance(&row(&p_rows, x), &row(&p_rows, y)));
        }
    }
    let p = TransitionMatrix::from_rows_unchecked(p_rows);
    let q = TransitionMatrix::from_rows_unchecked(q_rows);
    let (mp, np, mq) = (p.apply(&mu), p.apply(&nu), q.apply(&mu));
    [
        tv_distance(&mu, &mu2) + tv_distance(&mu2, &nu) - tv_distance(&mu, &nu),
        tv_distance(&mu, &nu) - tv_distance(&mp, &np),
        sup_pq - tv_distance(&mp, &mq),
        diam - tv_distance(&mp, &np),
    ]
}

const TV_FIXTURES: u64 = 1000;
const TV_SEED: u64 = 5;

fn tv_props() -> Result<Parts> {
    let mut csv = String::from("fixture,size,triangle,contraction,kernel_perturbation,kernel_diameter\n");
    let mut worst = [f64::INFINITY; 4];
    for k in 0..TV_FIXTURES {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::stats::mix64(TV_SEED, k));
        let size = rng.random_range(1..=50);
        let s = tv_property_slacks(&mut rng, size);
        for (w, v) in worst.iter_mut().zip(s) {
            *w = w.min(v);
        }
        writeln!(csv, "{k},{size},{},{},{},{}", s[0], s[1], s[2], s[3]).unwrap();
    }
    let names = ["triangle", "contraction", "kernel_perturbation", "kernel_diameter"];
    let checks = names.iter().zip(worst).map(|(n, w)| Check::new(format!("{n} slack >= -1e-12"), w >= -1e-12, format!("min slack {w:e}"))).collect();
    Ok((checks, csv, json!({ "fixtures": TV_FIXTURES, "min_slack": worst })))
}

fn interference_logit(beta: f64) -> Result<(Game, TransitionMatrix, Vec<u64>)> {
    let g = ZooSpec::interference(0.5).build()?;
    let p = build_chain(&g, &uniform_rules(&g, &ResponseRule::Logit { beta }), &Schedule::UniformOne { n: 2 })?;
    let ranks = classify(&g)?.reduced().ranks(&g);
    Ok((g, p, ranks))
}

fn restricted() -> Result<Parts> {
    let (_, p, ranks) = interference_logit(3.0)?;
    let r = restrict_chain(&p, &ranks)?;
    let escape = r.max_escape();
    let eta = 1.0;
    let mut csv = String::from("state,t,tv,bound\n");
    let mut worst = f64::INFINITY;
    for &s in &ranks {
        let mut full = Distribution::point(p.len(), s as usize);
        let mut sub = full.clone();
        for t in 1..=50u64 {
            full = p.apply(&full);
            sub = r.matrix.apply(&sub);
            let tv = tv_distance(&full, &sub);
            let bound = eta * escape * t as f64;
            worst = worst.min(bound - tv);
            writeln!(csv, "{s},{t},{tv},{bound}").unwrap();
        }
    }
    let checks = vec![Check::new("TV(P^t, restricted P^t) <= eta p t for t <= 50", worst >= 0.0, format!("p = {escape:.6}, min slack {worst:e}"))];
    Ok((checks, csv, json!({ "p": escape, "eta": eta, "min_slack": worst })))
}

fn closeness() -> Result<Parts> {
    let g = ZooSpec::interference(0.5).build()?;
    let sub = Subgame::new(&g, vec![vec![0, 1], vec![0, 1]])?;
    let rows = stationary_closeness_scan(&g, &sub, &[1.0, 2.0, 4.0, 8.0])?;
    let mut csv = String::from("beta,tv,tv_restricted,p_beta,tau_hat,hypothesis\n");
    for r in &rows {
        writeln!(csv, "{},{},{},{},{},{}", r.beta, r.tv, r.tv_restricted, r.p_beta, r.tau_hat, r.hypothesis).unwrap();
    }
    let decreasing = rows.windows(2).all(|w| w[1].tv < w[0].tv);
    let last = rows.last().unwrap().tv;
    let curve: Vec<String> = rows.iter().map(|r| format!("{:.5}", r.tv)).collect();
    let checks = vec![
        Check::new("TV strictly decreasing in beta", decreasing, curve.join(" > ")),
        Check::new("TV <= 0.05 at beta = 8", last <= 0.05, format!("{last:.5}")),
    ];
    Ok((checks, csv, serde_json::to_value(&rows)?))
}

fn stationary_forms() -> Result<Parts> {
    let mut csv = String::from("game,beta,max_abs_error\n");
    let mut checks = Vec::new();
    let ic = ZooSpec::IcCounterexample { l: 4.0 }.build()?;
    let sub = ZooSpec::interference(0.5).build()?.restricted_table(&[vec![0, 1], vec![0, 1]])?;
    for (name, g) in [("ic_counterexample", &ic), ("interference_subgame", &sub)] {
        let phi = find_potential(g)?.ok_or_else(|| Error::Precondition(format!("{name} has no potential")))?;
        for beta in [0.5, 1.0, 2.0, 3.0] {
            let chain = build_chain(g, &uniform_rules(g, &ResponseRule::Logit { beta }), &Schedule::UniformOne { n: 2 })?;
            let a = stationary(&chain)?;
            let b = gibbs_stationary(g, &phi, beta)?;
            let err = max_abs(&a, &b);
            writeln!(csv, "{name},{beta},{err}").unwrap();
            checks.push(Check::new(format!("{name} beta={beta}: chain stationary = Gibbs"), err <= 1e-10, format!("{err:e}")));
        }
    }
    let gamma = 0.5f64;
    for beta in [0.5, 1.0, 2.0, 3.0] {
        let chain = build_chain(&sub, &uniform_rules(&sub, &ResponseRule::Logit { beta }), &Schedule::UniformOne { n: 2 })?;
        let a = stationary(&chain)?;
        let z = 1.0 + 2.0 * (beta * gamma).exp() + (beta * (gamma - 1.0)).exp();
        let table = Distribution::new_unchecked(vec![1.0 / z, (beta * gamma).exp() / z, (beta * gamma).exp() / z, (beta * (gamma - 1.0)).exp() / z]);
        let err = max_abs(&a, &table);
        writeln!(csv, "interference_table,{beta},{err}").unwrap();
        checks.push(Check::new(format!("subgame beta={beta}: closed-form table"), err <= 1e-10, format!("{err:e}")));
    }
    Ok((checks, csv, json!({})))
}

fn max_abs(a: &Distribution, b: &Distribution) -> f64 {
    a.probs().iter().zip(b.probs()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Differences between a zoo game's computed structure and its expected structure.
pub fn structure_mismatches(spec: &ZooSpec) -> Result<Vec<String>> {
    let g = spec.build()?;
    let want = spec.expected_structure();
    let got = classify(&g)?;
    let mut out = Vec::new();
    if got.classification != want.classification {
        out.push(format!("classification {:?} != {:?}", got.classification, want.classification));
    }
    if let Some(l) = want.ell_hat {
        if got.ell_hat() != l {
            out.push(format!("ell_hat {} != {l}", got.ell_hat()));
        }
    }
    if let Some(r) = &want.reduced {
        if got.reduced().allowed() != r.as_slice() {
            out.push(format!("reduced {:?} != {r:?}", got.reduced().allowed()));
        }
    }
    if let Some(ne) = &want.equilibria {
        let computed = pure_nash_equilibria(&g)?;
        if &computed != ne {
            out.push(format!("equilibria {computed:?} != {ne:?}"));
        }
    }
    if let Some(has) = want.potential {
        if find_potential(&g)?.is_some() != has {
            out.push(format!("potential existence != {has}"));
        }
    }
    if let Some(has) = want.reduced_potential {
        let reduced = g.restricted_table(got.reduced().allowed())?;
        if find_potential(&reduced)?.is_some() != has {
            out.push(format!("reduced potential existence != {has}"));
        }
    }
    Ok(out)
}

/// Zoo specs covered by the structure regression.
pub fn structure_specs() -> Vec<ZooSpec> {
    let mut specs: Vec<ZooSpec> = (1..=8).map(|n| ZooSpec::Chain { n, penalty: 10.0 }).collect();
    specs.extend((1..=8).map(|n| ZooSpec::BgpChain { n }));
    specs.extend([
        ZooSpec::IcCounterexample { l: 4.0 },
        ZooSpec::IcCounterexample { l: 10.0 },
        ZooSpec::Coordination,
        ZooSpec::UniqueNe,
        ZooSpec::interference(0.5),
        ZooSpec::interference(0.25),
        ZooSpec::NbrExample,
        ZooSpec::NbrExampleModified { delta: 0.25 },
        ZooSpec::NbrExampleModified { delta: 0.75 },
    ]);
    specs
}

fn structure() -> Result<Parts> {
    let mut csv = String::from("game,params,mismatches\n");
    let mut checks = Vec::new();
    for spec in structure_specs() {
        let bad = structure_mismatches(&spec)?;
        let params = serde_json::to_string(&spec)?.replace(',', ";");
        writeln!(csv, "{},{},{}", spec.name(), params, bad.len()).unwrap();
        checks.push(Check::new(format!("{} {params}", spec.name()), bad.is_empty(), bad.join("; ")));
    }
    let tb = TieBreak::ascending();
    let eq1 = iterated_reduction(&ZooSpec::NbrExample.build()?, &tb, NbrMode::Strict)?;
    checks.push(Check::new(
        "nbr_example: 2 steps to the upper-left 2x2 block",
        eq1.len() == 2 && eq1.final_subgame.allowed() == [vec![0, 1], vec![0, 1]],
        format!("{:?}", eq1.steps),
    ));
    let modified = iterated_reduction(&ZooSpec::NbrExampleModified { delta: 0.25 }.build()?, &tb, NbrMode::Strict)?;
    checks.push(Check::new(
        "modified game reduces to (0,0)",
        modified.final_subgame.single_profile() == Some(Profile(vec![0, 0])),
        format!("{:?}", modified.final_subgame.allowed()),
    ));
    let mut sigma_ok = true;
    for n in 1..=16 {
        let seq = sigma_sequence(n)?;
        sigma_ok &= seq.len() == 1 << (n - 1) && observation_holds(&seq, n, false);
    }
    checks.push(Check::new("sigma_n length and interleaving for n <= 16", sigma_ok, ""));
    Ok((checks, csv, json!({})))
}

fn impossibility() -> Result<Parts> {
    let mut csv = String::from("fixture,value\n");
    let mut checks = Vec::new();

    let coord = ZooSpec::Coordination.build()?;
    let mut c = RunConfig::new(Schedule::Concurrent { n: 2 }, uniform_rules(&coord, &ResponseRule::perfect()), Start::profile(vec![1, 0])).horizon(1000);
    c.record_log = true;
    let log = run(&coord, &c, &[])?.log.expect("log requested");
    let periodic = log.iter().enumerate().all(|(t, s)| s.0 == if t % 2 == 0 { [1, 0] } else { [0, 1] });
    writeln!(csv, "concurrent_perfect_periodic,{periodic}").unwrap();
    checks.push(Check::new("concurrent perfect play cycles (1,0),(0,1) for 1000 steps", periodic, ""));

    let runs = 10_000u64;
    let ne = Event::set(pure_nash_equilibria(&coord)?);
    let c = RunConfig::new(Schedule::UniformOne { n: 2 }, uniform_rules(&coord, &ResponseRule::perfect()), Start::profile(vec![1, 0])).horizon(100).seed(101);
    let hit = count_hits(&coord, &c, &ne, runs)?;
    let w = wilson(hit, runs, crate::stats::Z95);
    writeln!(csv, "uniform_one_perfect_hits,{}", w.estimate).unwrap();
    checks.push(Check::new("uniform_one perfect play reaches an NE within 100 steps in >= 99% of runs", w.estimate >= 0.99, format!("{:.4}", w.estimate)));

    let une = ZooSpec::UniqueNe.build()?;
    let away = Event::set(une.profiles()?.filter(|s| s != &[1, 0]).map(Profile).collect());
    let conservative = RunConfig::new(Schedule::UniformOne { n: 2 }, uniform_rules(&une, &ResponseRule::mutation(0.0)), Start::profile(vec![1, 0])).horizon(1000).seed(102);
    let left = count_hits(&une, &conservative, &away, 1000)?;
    writeln!(csv, "conservative_ties_left,{left}").unwrap();
    checks.push(Check::new("conservative ties never leave (1,0) in 1000 steps", left == 0, format!("{left} of 1000 runs left")));

    let random = RunConfig::new(Schedule::UniformOne { n: 2 }, uniform_rules(&une, &ResponseRule::MistakesStyle { epsilon: 0.0 }), Start::profile(vec![1, 0])).horizon(1000).seed(103);
    let left = count_hits(&une, &random, &away, runs)?;
    let frac = left as f64 / runs as f64;
    writeln!(csv, "random_ties_left,{frac}").unwrap();
    checks.push(Check::new("random ties leave (1,0) within 1000 steps in >= 99% of runs", frac >= 0.99, format!("{frac:.4}")));
    Ok((checks, csv, json!({})))
}

fn count_hits(game: &Game, config: &RunConfig, event: &Event, runs: u64) -> Result<u64> {
    let report = monte_carlo(game, &config.clone().checkpoints(vec![config.horizon]), runs, std::slice::from_ref(event))?;
    Ok(report.events[0].hit_runs)
}
