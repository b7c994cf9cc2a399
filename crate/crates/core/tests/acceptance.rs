//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use nkgame::exact::full::{full_decision_probabilities, full_decision_probability};
use nkgame::exact::rational::decision_probability_exact;
use nkgame::exact::{
    build_chain, geometric_decision_law, normal_approx_p, one_step_w_drift, one_step_z_drift,
    poisson_binomial_tail, verify_lemma7, ClassLayout, LumpedState,
};
use nkgame::formulas::{expected_w0, theorem1_bound, theorem2_bound, z_drift};
use nkgame::montecarlo::estimate;
use nkgame::{GameConfig, Mode, Population, Role};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ratio(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn population(groups: &[(usize, Role)]) -> Population {
    Population::from_groups(groups).unwrap()
}

fn async_config(groups: &[(usize, Role)], k: usize) -> GameConfig {
    GameConfig::new(population(groups), k, Mode::Asynchronous, 0).unwrap()
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    if took <= limit {
        Ok(took)
    } else {
        Err(format!("runtime {took:.2?} exceeds {limit:?}"))
    }
}

/// Rejectors, consentors and `nf` followers of one kind, for every split of `n`.
fn shapes(n: usize, min_followers: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for nc in 0..=n {
        for nr in 0..=(n - nc) {
            let nf = n - nc - nr;
            if nf >= min_followers {
                out.push((nc, nr, nf));
            }
        }
    }
    out
}

fn z_drift_identity() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let mut max_float_err: f64 = 0.0;
    for n in 2..=12usize {
        for nr in 0..n {
            let cfg = async_config(&[(nr, Role::Rejector), (n - nr, Role::RandomFollower)], n);
            let layout = ClassLayout::new(cfg.population(), 1 << 20).unwrap();
            for z in 0..=(n - nr) {
                let state = LumpedState { counts: vec![z] };
                let exact = one_step_z_drift(&cfg, &state).map_err(|e| e.to_string())?;
                let closed = z_drift(n, nr, z);
                let closed = ratio(*closed.numer(), *closed.denom());
                if exact != closed {
                    return Err(format!("n={n} n_r={nr} z={z}: {exact} != {closed}"));
                }
                let here = layout.z(&state) as f64;
                let float: f64 = layout
                    .moves::<f64>(&state)
                    .iter()
                    .map(|(t, p)| p * (layout.z(&layout.decode(*t)) as f64 - here))
                    .sum();
                let target = -((nr * z) as f64) / (n * (n - 1)) as f64;
                max_float_err = max_float_err.max((float - target).abs());
                checked += 1;
            }
        }
    }
    if max_float_err >= 1e-14 {
        return Err(format!("float drift error {max_float_err:e}"));
    }
    let took = within(Duration::from_secs(1), start)?;
    Ok(format!(
        "{checked} states exact, max float error {max_float_err:e}, {took:.2?}"
    ))
}

fn random_follower_bound() -> Outcome {
    let start = Instant::now();
    let mut rows = 0;
    let mut tightest = f64::INFINITY;
    for n in 3..=10usize {
        for nr in 1..=(n - 2) {
            for k in 1..=(n - nr) {
                let cfg = async_config(&[(nr, Role::Rejector), (n - nr, Role::RandomFollower)], k);
                let chain = build_chain(&cfg).map_err(|e| e.to_string())?;
                let p = chain.absorption_from_start().unwrap().p_decision;
                let bound = theorem1_bound(n, nr, k).unwrap().value();
                if p > bound + 1e-12 {
                    return Err(format!("n={n} n_r={nr} k={k}: p={p} > bound {bound}"));
                }
                tightest = tightest.min(bound - p);
                rows += 1;
            }
        }
    }
    let spot = decision_probability_exact(&async_config(
        &[(1, Role::Rejector), (2, Role::RandomFollower)],
        2,
    ))
    .unwrap();
    if spot != ratio(5, 12) {
        return Err(format!("spot n=3 n_r=1 k=2 gives {spot}, expected 5/12"));
    }
    let took = within(Duration::from_secs(10), start)?;
    Ok(format!(
        "{rows} configs within bound (min slack {tightest:.3e}), spot 5/12 exact, {took:.2?}"
    ))
}

fn majority_bound() -> Outcome {
    let start = Instant::now();
    let mut rows = 0;
    for n in 3..=10usize {
        for (nc, nr, nf) in shapes(n, 2) {
            if nc == 0 {
                continue;
            }
            for k in (nc + 1)..=(n - nr) {
                let cfg = async_config(
                    &[
                        (nc, Role::Consentor),
                        (nr, Role::Rejector),
                        (nf, Role::MajorityFollower),
                    ],
                    k,
                );
                let chain = build_chain(&cfg).map_err(|e| e.to_string())?;
                let q = chain.absorption_from_start().unwrap().p_no_decision;
                let bound = theorem2_bound(n, nc, nr).unwrap().value();
                if q > bound + 1e-12 {
                    return Err(format!("n={n} n_c={nc} n_r={nr} k={k}: {q} > {bound}"));
                }
                rows += 1;
            }
        }
    }
    let took = within(Duration::from_secs(10), start)?;
    // spot value as stated: n=4, one consentor, one rejector, k=2, p_no_decision = 1/2
    let cfg = async_config(
        &[
            (1, Role::Consentor),
            (1, Role::Rejector),
            (2, Role::MajorityFollower),
        ],
        2,
    );
    let q = BigRational::one() - decision_probability_exact(&cfg).unwrap();
    let bound = theorem2_bound(4, 1, 1).unwrap();
    if q != ratio(1, 2) {
        return Err(format!(
            "{rows} sweep configs within bound in {took:.2?}, but spot n=4 n_c=1 n_r=1 k=2 \
             gives p_no_decision = {q}, expected 1/2 (bound {})",
            bound.exact
        ));
    }
    Ok(format!(
        "{rows} configs within bound, spot 1/2 <= 14/12, {took:.2?}"
    ))
}

fn expected_w0_enumeration() -> Outcome {
    let mut rows = 0;
    for n in 1..=12usize {
        for (nc, nr, nf) in shapes(n, 0) {
            // agents: consentors, rejectors, then followers
            let mut total: u64 = 0;
            for mask in 0u32..(1 << nf) {
                let x: Vec<bool> = (0..n)
                    .map(|i| {
                        if i < nc {
                            true
                        } else if i < nc + nr {
                            false
                        } else {
                            mask >> (i - nc - nr) & 1 == 1
                        }
                    })
                    .collect();
                for i in 0..n {
                    for j in 0..n {
                        total += u64::from(x[i] != x[j]);
                    }
                }
            }
            let formula = expected_w0(n, nc, nr).unwrap();
            if formula << nf != total {
                return Err(format!(
                    "n={n} n_c={nc} n_r={nr}: {formula} vs {total}/2^{nf}"
                ));
            }
            rows += 1;
        }
    }
    if expected_w0(4, 1, 1).unwrap() != 7 {
        return Err("spot (4,1,1) != 7".into());
    }
    Ok(format!("{rows} partitions exact, spot (4,1,1) = 7"))
}

fn w_drift_signs() -> Outcome {
    let mut states = 0;
    for n in 2..=10usize {
        for (nc, nr, nf) in shapes(n, 1) {
            for (role, sign) in [(Role::MajorityFollower, -1), (Role::MinorityFollower, 1)] {
                let cfg = async_config(
                    &[(nc, Role::Consentor), (nr, Role::Rejector), (nf, role)],
                    n,
                );
                for m in 0..=nf {
                    let d = one_step_w_drift(&cfg, &LumpedState { counts: vec![m] })
                        .map_err(|e| e.to_string())?;
                    let bad = if sign < 0 {
                        d.is_positive()
                    } else {
                        d.is_negative()
                    };
                    if bad {
                        return Err(format!("{role:?} n={n} n_c={nc} n_r={nr} m={m}: drift {d}"));
                    }
                    states += 1;
                }
            }
        }
    }
    Ok(format!(
        "{states} lumped states, majority <= 0, minority >= 0"
    ))
}

fn almost_sure_decision() -> Outcome {
    let mut rows = 0;
    let mut worst_residual: f64 = 0.0;
    for n in 2..=10usize {
        for (nc, nr, nf) in shapes(n, 1) {
            if nc == 0 {
                continue;
            }
            for k in (nc + 1)..=(n - nr) {
                let cfg = async_config(
                    &[
                        (nc, Role::Consentor),
                        (nr, Role::Rejector),
                        (nf, Role::RandomFollower),
                    ],
                    k,
                );
                let chain = build_chain(&cfg).map_err(|e| e.to_string())?;
                let a = chain.absorption_from_start().unwrap();
                worst_residual = worst_residual.max(a.residual);
                if (a.p_decision - 1.0).abs() >= 1e-10 || a.residual >= 1e-10 {
                    return Err(format!(
                        "n={n} n_c={nc} n_r={nr} k={k}: p={} residual={:e}",
                        a.p_decision, a.residual
                    ));
                }
                rows += 1;
            }
        }
    }
    // synchronous Bernoulli agents with positive probabilities
    let palette = [0.05, 0.5, 0.9, 1.0];
    let mut sync_rows = 0;
    for n in 1..=10usize {
        for nr in 0..n {
            for shift in 0..palette.len() {
                let mut roles = vec![Role::Rejector; nr];
                roles.extend(
                    (0..n - nr).map(|i| match palette[(i + shift) % palette.len()] {
                        1.0 => Role::Consentor,
                        p => Role::Bernoulli(p),
                    }),
                );
                let pop = Population::new(roles).unwrap();
                for k in 1..=n {
                    let cfg = GameConfig::new(pop.clone(), k, Mode::Synchronous, 0).unwrap();
                    let law = geometric_decision_law(&cfg).map_err(|e| e.to_string())?;
                    let expect = if k <= n - nr { 1.0 } else { 0.0 };
                    if law.p_decision != expect {
                        return Err(format!("sync n={n} n_r={nr} k={k}: {law:?}"));
                    }
                    sync_rows += 1;
                }
            }
        }
    }
    Ok(format!(
        "{rows} async configs decide a.s. (max residual {worst_residual:e}), \
         {sync_rows} sync configs decide iff k <= n - n_r"
    ))
}

fn majority_census() -> Outcome {
    let mut chains = 0;
    for n in 3..=10usize {
        for (nc, nr, nf) in shapes(n, 2) {
            if nc == 0 {
                continue;
            }
            for k in (nc + 1)..=(n - nr) {
                let cfg = async_config(
                    &[
                        (nc, Role::Consentor),
                        (nr, Role::Rejector),
                        (nf, Role::MajorityFollower),
                    ],
                    k,
                );
                let chain = build_chain(&cfg).map_err(|e| e.to_string())?;
                if !verify_lemma7(&chain).map_err(|e| e.to_string())? {
                    return Err(format!("n={n} n_c={nc} n_r={nr} k={k}: follower holds 1"));
                }
                if !chain.absorbs_almost_surely() {
                    return Err(format!("n={n} n_c={nc} n_r={nr} k={k}: not absorbing"));
                }
                chains += 1;
            }
        }
    }
    Ok(format!(
        "{chains} chains: no-decision absorbing states have all followers at 0"
    ))
}

fn geometric_law_large() -> Outcome {
    let start = Instant::now();
    let cfg = GameConfig::new(
        population(&[(10_000, Role::NEUTRALIST)]),
        5000,
        Mode::Synchronous,
        0,
    )
    .unwrap();
    let law = geometric_decision_law(&cfg).map_err(|e| e.to_string())?;
    let took = within(Duration::from_secs(5), start)?;
    let rounds = 1.0 / law.p;
    if !(1.96..=2.00).contains(&rounds) {
        return Err(format!("1/p = {rounds}"));
    }
    Ok(format!("p = {:.6}, 1/p = {rounds:.6}, {took:.2?}", law.p))
}

fn normal_approximation() -> Outcome {
    let exact = poisson_binomial_tail(&[0.5; 400], 210).unwrap();
    let approx = normal_approx_p(400, 0.5, 210.0).unwrap();
    let err = (approx - exact).abs();
    if err > 0.03 {
        return Err(format!("exact {exact}, normal {approx}, error {err}"));
    }
    Ok(format!(
        "exact {exact:.6}, normal {approx:.6}, error {err:.4}"
    ))
}

fn monte_carlo_coverage() -> Outcome {
    let start = Instant::now();
    let spots = [
        async_config(&[(1, Role::Rejector), (2, Role::RandomFollower)], 2),
        async_config(
            &[
                (1, Role::Consentor),
                (1, Role::Rejector),
                (2, Role::MajorityFollower),
            ],
            2,
        ),
    ];
    let mut report = Vec::new();
    for cfg in &spots {
        let exact = build_chain(cfg)
            .and_then(|c| c.absorption_from_start())
            .map_err(|e| e.to_string())?
            .p_decision;
        let covers = (1..=20u64)
            .filter(|&seed| {
                let (lo, hi) = estimate(&cfg.with_seed(seed), 100_000).wilson_ci_99;
                lo <= exact && exact <= hi
            })
            .count();
        if covers < 19 {
            return Err(format!(
                "{}: {covers}/20 intervals cover {exact}",
                cfg.population()
            ));
        }
        report.push(format!(
            "{}: {covers}/20 cover {exact:.6}",
            cfg.population()
        ));
    }
    let took = within(Duration::from_secs(60), start)?;
    Ok(format!("{}, {took:.2?}", report.join("; ")))
}

fn determinism() -> Outcome {
    let cfg = GameConfig::new(
        "1*rejector,1*consentor,3*majority,2*random,1*neutralist"
            .parse()
            .unwrap(),
        5,
        Mode::Asynchronous,
        0xDEC1DE,
    )
    .unwrap();
    let outputs: Vec<String> = [1, 4, 8]
        .iter()
        .map(|&w| {
            serde_json::to_string(&nkgame::montecarlo::estimate_with_workers(&cfg, 20_000, w))
                .unwrap()
        })
        .collect();
    if outputs.windows(2).any(|w| w[0] != w[1]) {
        return Err(format!("outputs differ: {outputs:?}"));
    }
    Ok(format!(
        "{} bytes identical across 1, 4, 8 workers",
        outputs[0].len()
    ))
}

fn lumped_matches_full() -> Outcome {
    let start = Instant::now();
    let kinds = [
        Role::Rejector,
        Role::Consentor,
        Role::RandomFollower,
        Role::MajorityFollower,
        Role::MinorityFollower,
        Role::NEUTRALIST,
    ];
    let mut configs = 0;
    let mut worst: f64 = 0.0;
    for n in 1..=8usize {
        // every composition of n over the six kinds
        let mut counts = vec![0usize; kinds.len()];
        counts[0] = n;
        loop {
            let groups: Vec<(usize, Role)> =
                counts.iter().zip(kinds).map(|(&c, r)| (c, r)).collect();
            let pop = population(&groups);
            for k in 1..=n {
                let Ok(cfg) = GameConfig::new(pop.clone(), k, Mode::Asynchronous, 0) else {
                    continue;
                };
                let chain = build_chain(&cfg).map_err(|e| e.to_string())?;
                let full = full_decision_probabilities(&cfg).map_err(|e| e.to_string())?;
                let layout = chain.layout();
                for (mask, &h) in full.iter().enumerate() {
                    let x: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                    let pinned_ok = pop.roles().iter().zip(&x).all(|(r, &v)| match r {
                        Role::Rejector => !v,
                        Role::Consentor => v,
                        _ => true,
                    });
                    if !pinned_ok {
                        continue;
                    }
                    let lumped = chain.p_decision()[layout.encode(&layout.lump(&x))];
                    worst = worst.max((lumped - h).abs());
                }
                let p_full = full_decision_probability(&cfg).unwrap();
                let p_lumped = chain.absorption_from_start().unwrap().p_decision;
                worst = worst.max((p_full - p_lumped).abs());
                if worst >= 1e-10 {
                    return Err(format!("{pop} k={k}: deviation {worst:e}"));
                }
                configs += 1;
            }
            if !next_composition(&mut counts) {
                break;
            }
        }
    }
    let took = start.elapsed();
    Ok(format!(
        "{configs} configs, max deviation {worst:e}, {took:.2?}"
    ))
}

/// Steps through compositions of a fixed total in reverse lexicographic order.
fn next_composition(counts: &mut [usize]) -> bool {
    let last = counts.len() - 1;
    // find the rightmost non-zero entry before the last slot
    let Some(i) = (0..last).rev().find(|&i| counts[i] > 0) else {
        return false;
    };
    let tail = counts[last];
    counts[last] = 0;
    counts[i] -= 1;
    counts[i + 1] = tail + 1;
    true
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("Z drift equals -n_r z / (n(n-1))", z_drift_identity),
        (
            "random-follower decision bound sweep",
            random_follower_bound,
        ),
        ("majority-follower no-decision bound sweep", majority_bound),
        ("E[W_0] closed form vs enumeration", expected_w0_enumeration),
        ("W drift signs", w_drift_signs),
        ("almost-sure decision", almost_sure_decision),
        ("majority followers at 0 when undecided", majority_census),
        ("geometric law, 10^4 neutralists", geometric_law_large),
        ("normal approximation at n = 400", normal_approximation),
        ("Monte Carlo Wilson coverage", monte_carlo_coverage),
        ("determinism across worker counts", determinism),
        ("lumped chain vs full chain", lumped_matches_full),
    ];
    // optional criterion numbers on the command line restrict the run
    let only: Vec<usize> = std::env::args().filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        match outcome {
            Ok(detail) => println!("[PASS] criterion {:>2}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] criterion {:>2}: {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
