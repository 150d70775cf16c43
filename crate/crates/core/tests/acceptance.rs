//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails or overruns its time budget.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use bcdp::audit::{
    self, audit, compose_product, conditional_tv, coordinatewise, exact_bcdp_levels, exact_bdp_level,
    exact_cdp_levels, exact_ldp_level, ht_tradeoff_check, postprocess, DiscretePrior, FiniteMechanism,
    ProductDomain, TradeoffCheck,
};
use bcdp::calibration::{calibrate_budgets, cdp_to_bcdp_bound, feasibility_matrix, verify_budget, PrivacyDemand};
use bcdp::harness::{cli, run_mean_experiment, run_ols_experiment, ExperimentConfig, MechanismTag};
use bcdp::mechanisms::{ball_channel_bound, ball_channel_sample, rr_kernel, LdpChannelSpec};
use bcdp::regression::{privatize_pairs, surrogate_gradient, ExactRisk, FeasibleSet, RegressionDataset, SurrogateObjective};

type Outcome = Result<String, String>;

const SEED: u64 = 7;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_prior(domain: ProductDomain, rng: &mut ChaCha8Rng) -> DiscretePrior {
    loop {
        let mut pmf: Vec<f64> = (0..domain.len())
            .map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random::<f64>() })
            .collect();
        let total: f64 = pmf.iter().sum();
        if total == 0.0 {
            continue;
        }
        pmf.iter_mut().for_each(|p| *p /= total);
        return DiscretePrior::new(domain, pmf).expect("normalized");
    }
}

fn random_domain(rng: &mut ChaCha8Rng, max_dim: usize) -> ProductDomain {
    let d = rng.random_range(1..=max_dim);
    ProductDomain::new((0..d).map(|_| rng.random_range(2..=3)).collect()).expect("non-empty")
}

fn random_mechanism(domain: ProductDomain, rng: &mut ChaCha8Rng) -> FiniteMechanism {
    let outputs = rng.random_range(2..=4);
    let mut kernel = Vec::with_capacity(domain.len() * outputs);
    for _ in 0..domain.len() {
        let mut row: Vec<f64> = (0..outputs)
            .map(|_| if rng.random::<f64>() < 0.15 { 0.0 } else { rng.random::<f64>() + 0.01 })
            .collect();
        if row.iter().all(|p| *p == 0.0) {
            row[0] = 1.0;
        }
        let total: f64 = row.iter().sum();
        kernel.extend(row.iter().map(|p| p / total));
    }
    FiniteMechanism::new(domain, outputs, kernel).expect("stochastic rows")
}

fn random_pairs() -> Vec<(FiniteMechanism, DiscretePrior)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..1000)
        .map(|_| {
            let domain = random_domain(&mut rng, 3);
            let m = random_mechanism(domain.clone(), &mut rng);
            (m, random_prior(domain, &mut rng))
        })
        .collect()
}

fn leq(a: f64, b: f64, slack: f64) -> bool {
    a <= b + slack || (a.is_infinite() && b.is_infinite())
}

fn criterion_1() -> Outcome {
    let m = audit::fixtures::table_mechanism(0.5, 0.5, 0.5).map_err(|e| e.to_string())?;
    let r = audit(&m, &audit::fixtures::bernoulli_product(2)).map_err(|e| e.to_string())?;
    let ln2 = 2f64.ln();
    check(
        r.bcdp_levels.iter().all(|l| (l - ln2).abs() < 1e-9) && r.ldp_level == f64::INFINITY,
        format!("bcdp = {:?}, ldp = {}", r.bcdp_levels, r.ldp_level),
    )
}

fn criterion_2() -> Outcome {
    let m = audit::fixtures::xor_mechanism();
    let prior = audit::fixtures::bernoulli_product(3);
    let once = exact_bcdp_levels(&m, &prior).map_err(|e| e.to_string())?[0];
    let twice = compose_product(&m, &m).map_err(|e| e.to_string())?;
    let composed = exact_bcdp_levels(&twice, &prior).map_err(|e| e.to_string())?[0];
    check(
        once.abs() < 1e-12 && composed == f64::INFINITY,
        format!("coordinate 1: single {once}, composed {composed}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_refined = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let d = rng.random_range(1..=4);
        let factors: Vec<FiniteMechanism> = (0..d)
            .map(|_| rr_kernel(rng.random_range(2..=3), rng.random_range(0.0..3.0)).expect("valid"))
            .collect();
        let m = coordinatewise(&factors).map_err(|e| e.to_string())?;
        let prior = random_prior(m.domain().clone(), &mut rng);
        let levels = exact_bcdp_levels(&m, &prior).map_err(|e| e.to_string())?;
        let c = exact_cdp_levels(&m);
        let q: Vec<f64> = (0..d).map(|i| conditional_tv(&prior, i).min(1.0)).collect();
        let eps = exact_ldp_level(&m);
        let bound = cdp_to_bcdp_bound(&c, &q, None).map_err(|e| e.to_string())?;
        let refined = cdp_to_bcdp_bound(&c, &q, Some(eps)).map_err(|e| e.to_string())?;
        for i in 0..d {
            worst = worst.max(levels[i] - bound[i]);
            worst_refined = worst_refined.max(levels[i] - refined[i]);
        }
    }
    check(
        worst <= 1e-9 && worst_refined <= 1e-9,
        format!("max(level - bound) = {worst:.3e}, refined {worst_refined:.3e}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let d = rng.random_range(1..=5);
        let delta: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..3.0)).collect();
        let q: Vec<f64> = (0..d).map(|_| rng.random_range(0.01..=1.0)).collect();
        let a = feasibility_matrix(&delta, &q).map_err(|e| e.to_string())?;
        let dir: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let load = a.apply(&dir).map_err(|e| e.to_string())?.into_iter().fold(0.0, f64::max);
        let scale = rng.random_range(0.0..=1.0) / load;
        let c: Vec<f64> = dir.iter().map(|v| v * scale).collect();
        if !a.is_feasible(&c).map_err(|e| e.to_string())? {
            continue;
        }
        let bound = cdp_to_bcdp_bound(&c, &q, None).map_err(|e| e.to_string())?;
        for i in 0..d {
            worst = worst.max(bound[i] - delta[i]);
            if bound[i] > delta[i] + 1e-12 {
                violations += 1;
            }
        }
    }
    check(violations == 0, format!("{violations} violations, max excess {worst:.3e}"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let radius = 5f64.sqrt();
    let vs: Vec<Vec<f64>> = (0..20)
        .map(|_| loop {
            let v: Vec<f64> = (0..5).map(|_| rng.random_range(-radius..radius)).collect();
            if v.iter().map(|x| x * x).sum::<f64>() <= 5.0 {
                break v;
            }
        })
        .collect();
    let jobs: Vec<(usize, f64)> = (0..20).flat_map(|i| [0.2, 1.0, 3.0].map(|a| (i, a))).collect();
    let n = 1_000_000usize;
    let results: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(i, alpha)| {
            let spec = LdpChannelSpec::new(alpha, 5, radius).expect("valid");
            let b = ball_channel_bound(&spec).expect("positive alpha");
            let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ ((i as u64) << 8) ^ alpha.to_bits());
            let mut mean = [0.0; 5];
            let mut norm_err = 0.0f64;
            for _ in 0..n {
                let z = ball_channel_sample(&vs[i], &spec, &mut rng).expect("inside ball").value;
                let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
                norm_err = norm_err.max((norm - b).abs() / b);
                mean.iter_mut().zip(&z).for_each(|(m, x)| *m += x);
            }
            let gate = 4.0 * b / (n as f64).sqrt();
            let dev = mean
                .iter()
                .zip(&vs[i])
                .map(|(m, v)| (m / n as f64 - v).abs() / gate)
                .fold(0.0, f64::max);
            (dev, norm_err)
        })
        .collect();
    let dev = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let norm = results.iter().map(|r| r.1).fold(0.0, f64::max);
    check(
        dev <= 1.0 && norm <= 1e-9,
        format!("max |mean - v| = {dev:.3} x gate, max norm error {norm:.2e}"),
    )
}

fn levels_of(m: &FiniteMechanism, p: &DiscretePrior) -> Result<(f64, f64, Vec<f64>, Vec<f64>), String> {
    Ok((
        exact_ldp_level(m),
        exact_bdp_level(m, p).map_err(|e| e.to_string())?,
        exact_cdp_levels(m),
        exact_bcdp_levels(m, p).map_err(|e| e.to_string())?,
    ))
}

fn criterion_6(pairs: &[(FiniteMechanism, DiscretePrior)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut failures = 0;
    for (m, p) in pairs {
        let (ldp, bdp, cdp, bcdp) = levels_of(m, p)?;
        let ordered = bcdp.iter().all(|&l| leq(l, bdp, 1e-9)) && leq(bdp, ldp, 1e-9);
        let map: Vec<usize> = (0..m.outputs()).map(|_| rng.random_range(0..m.outputs())).collect();
        let post = postprocess(m, &map).map_err(|e| e.to_string())?;
        let (pl, pb, pc, pbc) = levels_of(&post, p)?;
        let shrinks = leq(pl, ldp, 1e-9)
            && leq(pb, bdp, 1e-9)
            && pc.iter().zip(&cdp).all(|(a, b)| leq(*a, *b, 1e-9))
            && pbc.iter().zip(&bcdp).all(|(a, b)| leq(*a, *b, 1e-9));
        if !(ordered && shrinks) {
            failures += 1;
        }
    }
    check(failures == 0, format!("{failures} of {} pairs violate ordering or post-processing", pairs.len()))
}

fn criterion_7(pairs: &[(FiniteMechanism, DiscretePrior)]) -> Outcome {
    let mut loose = 0;
    let mut slack = 0;
    let mut reductions = 0;
    for (m, p) in pairs {
        let levels = exact_bcdp_levels(m, p).map_err(|e| e.to_string())?;
        if !ht_tradeoff_check(m, p, &levels).map_err(|e| e.to_string())?.holds() {
            loose += 1;
        }
        for i in 0..levels.len() {
            if !levels[i].is_finite() {
                continue;
            }
            let mut reduced = levels.clone();
            reduced[i] -= 1e-6;
            reductions += 1;
            match ht_tradeoff_check(m, p, &reduced).map_err(|e| e.to_string())? {
                TradeoffCheck::Violated(w) if w.coordinate == i => {}
                _ => slack += 1,
            }
        }
    }
    check(
        loose == 0 && slack == 0,
        format!("{loose} pairs fail at their levels, {slack} of {reductions} reductions not detected"),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut bad = 0;
    for _ in 0..100_000 {
        let d = rng.random_range(1..=10);
        let epsilon = rng.random_range(0.1..5.0);
        let delta: Vec<f64> = (0..d)
            .map(|_| if rng.random::<f64>() < 0.05 { 0.0 } else { rng.random_range(0.0..6.0) })
            .collect();
        let q = if rng.random::<f64>() < 0.1 { 0.0 } else { rng.random_range(0.0..=1.0) };
        let zeta = rng.random_range(0.01..=1.0);
        let demand = PrivacyDemand::new(epsilon, delta, q, zeta).map_err(|e| e.to_string())?;
        let c = calibrate_budgets(&demand).map_err(|e| e.to_string())?;
        let internal = c.internal();
        let top = demand.effective_delta().into_iter().fold(0.0, f64::max).min(epsilon);
        let ok = internal.windows(2).all(|w| w[0] <= w[1])
            && c.ldp_level() <= top + 1e-12
            && verify_budget(&demand, &c, 1e-12).is_ok();
        if !ok {
            bad += 1;
        }
    }
    let mut exact = true;
    for d in 1..=10 {
        for &eps in &[0.1, 0.5, 2.0, 4.0] {
            for &q in &[0.0, 0.3, 1.0] {
                let demand = PrivacyDemand::new(eps, vec![eps; d], q, 1.0).map_err(|e| e.to_string())?;
                let c = calibrate_budgets(&demand).map_err(|e| e.to_string())?;
                exact &= c.in_caller_order().iter().all(|v| *v == eps);
            }
        }
    }
    check(bad == 0 && exact, format!("{bad} failing demands, zeta = 1 uniform exact: {exact}"))
}

fn criterion_9() -> Outcome {
    let config = ExperimentConfig {
        seed: Some(SEED),
        ..ExperimentConfig::mean_default()
    };
    let out = run_mean_experiment(&config).map_err(|e| e.to_string())?;
    let n = config.n.expect("default n");
    let med = |q: f64, t: MechanismTag| out.median(q, t, n).expect("summarized");
    let ratio = med(0.0, MechanismTag::LdpBaseline) / med(0.0, MechanismTag::Bcdp);
    let curve: Vec<f64> = config.q_grid.iter().map(|&q| med(q, MechanismTag::Bcdp)).collect();
    let monotone = curve.windows(2).all(|w| w[1] >= 0.9 * w[0]);
    check(
        ratio >= 2.0 && monotone,
        format!("baseline / bcdp at q = 0: {ratio:.2}; bcdp medians {curve:.3?}"),
    )
}

fn criterion_10() -> Outcome {
    let config = ExperimentConfig {
        seed: Some(SEED),
        ..ExperimentConfig::ols_default()
    };
    let private = run_ols_experiment(&config).map_err(|e| e.to_string())?;
    let medians: Vec<f64> = private.summary.iter().map(|s| s.median).collect();
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let identity = run_ols_experiment(&ExperimentConfig {
        identity_channel: true,
        ..config
    })
    .map_err(|e| e.to_string())?;
    let worst = identity
        .records
        .iter()
        .map(|r| r.error - 1.0 / r.n as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    check(
        decreasing && worst <= 1e-6,
        format!("median excess risk {medians:.4?}; identity max(risk - 1/n) = {worst:.2e}"),
    )
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let star = [0.3, -0.2, 0.1, 0.25];
    let n = 10;
    let z: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect();
    let l = z
        .iter()
        .map(|r| (r.iter().zip(&star).map(|(a, b)| a * b).sum::<f64>() + rng.random_range(-0.2..0.2)).clamp(-1.0, 1.0))
        .collect();
    let data = RegressionDataset::new(z, l).map_err(|e| e.to_string())?;
    let demand = PrivacyDemand::new(2.0, vec![0.5, 0.5, 2.0, 2.0, 2.0], 0.0, 0.5).map_err(|e| e.to_string())?;
    let c = calibrate_budgets(&demand).map_err(|e| e.to_string())?;
    let theta = [0.5, -0.5, 0.2, 0.1];
    let truth = ExactRisk::new(&data, &FeasibleSet::for_features(4)).gradient(&theta);

    let draws = 100_000u64;
    let grads: Vec<Vec<f64>> = (0..draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED);
            rng.set_stream(k);
            let copies = privatize_pairs(&data, &c, &mut rng).expect("valid data");
            let s = SurrogateObjective::from_copies(&copies).expect("non-empty");
            surrogate_gradient(&s, &theta).expect("dimension")
        })
        .collect();
    let nf = draws as f64;
    let mut worst = 0.0f64;
    for j in 0..4 {
        let mean = grads.iter().map(|g| g[j]).sum::<f64>() / nf;
        let var = grads.iter().map(|g| (g[j] - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        worst = worst.max((mean - truth[j]).abs() / (var / nf).sqrt());
    }
    check(worst <= 4.0, format!("max |mean - grad f| = {worst:.2} standard errors"))
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |sub: &str, tag: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let out = dir.path().join(tag);
        let args = ["bcdp", sub, "--seed", "7", "--out", out.to_str().expect("utf-8 path")];
        let code = cli::run_with(args, &mut std::io::sink(), &mut std::io::sink());
        if code != 0 {
            return Err(format!("{sub} exited with {code}"));
        }
        let prefix = if sub == "mean-sim" { "mean" } else { "ols" };
        let read = |name: &str| std::fs::read(out.join(format!("{prefix}_{name}.csv"))).map_err(|e| e.to_string());
        Ok((read("raw")?, read("summary")?))
    };
    let same_mean = run("mean-sim", "m1")? == run("mean-sim", "m2")?;
    let same_ols = run("ols-sim", "o1")? == run("ols-sim", "o2")?;
    check(same_mean && same_ols, format!("mean-sim identical: {same_mean}, ols-sim identical: {same_ols}"))
}

fn main() {
    let pairs = random_pairs();
    let criteria: Vec<(u32, &str, Duration, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, "table mechanism audit", Duration::from_secs(1), Box::new(criterion_1)),
        (2, "xor composition", Duration::from_secs(1), Box::new(criterion_2)),
        (3, "cdp-to-bcdp soundness", Duration::from_secs(30), Box::new(criterion_3)),
        (4, "linear relaxation", Duration::from_secs(10), Box::new(criterion_4)),
        (5, "ball channel statistics", Duration::from_secs(120), Box::new(criterion_5)),
        (6, "level ordering and post-processing", Duration::from_secs(30), Box::new(|| criterion_6(&pairs))),
        (7, "hypothesis-testing tightness", Duration::from_secs(30), Box::new(|| criterion_7(&pairs))),
        (8, "calibration algebra", Duration::from_secs(10), Box::new(criterion_8)),
        (9, "mean-estimation experiment", Duration::from_secs(600), Box::new(criterion_9)),
        (10, "least-squares scaling", Duration::from_secs(600), Box::new(criterion_10)),
        (11, "surrogate gradient unbiasedness", Duration::from_secs(120), Box::new(criterion_11)),
        (12, "cli determinism", Duration::from_secs(600), Box::new(criterion_12)),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in &criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if elapsed <= *budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over time budget {budget:?}")),
            Err(d) => ("FAIL", d),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {id:>2} {status} {name}: {detail} [{:.2}s]", elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
