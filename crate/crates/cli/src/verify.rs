//! Grid cross-checks between exact chain solutions, closed forms and Monte
//! Carlo estimates.

use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use nkgame::exact::full::{full_decision_probabilities, full_decision_probability};
use nkgame::exact::{
    build_chain, one_step_w_drift, one_step_z_drift, verify_lemma7, LumpedState, StateClass,
};
use nkgame::formulas::{expected_w0, theorem1_bound, theorem2_bound, z_drift};
use nkgame::montecarlo::{estimate, estimate_with_workers};
use nkgame::{GameConfig, Mode, Population, Role};

use crate::output::{emit_rows, round12};
use crate::{parse_population, CliError, VerifyArgs, EXIT_VERIFY_FAILED};

const DEFAULT_GRID: &str = r#"
[[check]]
kind = "theorem1"
n = [3, 8]

[[check]]
kind = "theorem2"
n = [3, 8]

[[check]]
kind = "majority_census"
n = [3, 8]

[[check]]
kind = "sure_decision"
n = [2, 8]

[[check]]
kind = "z_drift"
n = [2, 12]

[[check]]
kind = "w_drift"
n = [2, 10]

[[check]]
kind = "expected_w0"
n = [1, 12]

[[check]]
kind = "lumping"
n = [1, 5]

[[check]]
kind = "montecarlo"
pop = "1*rejector,2*random"
k = 2
trials = 20000

[[check]]
kind = "montecarlo"
pop = "1*consentor,1*rejector,2*majority"
k = 2
trials = 20000
"#;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Grid {
    #[serde(default)]
    check: Vec<Check>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum Kind {
    /// Random-follower decision probability against its upper bound.
    Theorem1,
    /// Majority-follower no-decision probability against its upper bound.
    Theorem2,
    /// Undecided absorbing states have every majority follower at 0.
    MajorityCensus,
    /// Consentors with random followers decide almost surely.
    SureDecision,
    ZDrift,
    WDrift,
    ExpectedW0,
    /// Lumped chain against the full 2^n chain.
    Lumping,
    Montecarlo,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Check {
    kind: Kind,
    n: Option<[usize; 2]>,
    pop: Option<String>,
    k: Option<usize>,
    trials: Option<u64>,
    seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct Row {
    check: &'static str,
    config: String,
    exact: Option<f64>,
    bound: Option<f64>,
    mc: Option<f64>,
    ci_lo: Option<f64>,
    ci_hi: Option<f64>,
    pass: bool,
}

impl Row {
    fn new(check: &'static str, config: String, pass: bool) -> Self {
        Row {
            check,
            config,
            exact: None,
            bound: None,
            mc: None,
            ci_lo: None,
            ci_hi: None,
            pass,
        }
    }

    fn exact(mut self, x: f64) -> Self {
        self.exact = Some(x);
        self
    }

    fn bound(mut self, x: f64) -> Self {
        self.bound = Some(x);
        self
    }
}

fn config(groups: &[(usize, Role)], k: usize) -> GameConfig {
    let population = Population::from_groups(groups).expect("grid populations are non-empty");
    GameConfig::new(population, k, Mode::Asynchronous, 0).expect("grid thresholds are in range")
}

fn label(cfg: &GameConfig) -> String {
    format!("{} k={}", cfg.population(), cfg.k())
}

/// `(n_c, n_r, n_f)` splits of `n` with at least `min_followers` followers.
fn splits(n: usize, min_followers: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..=n).flat_map(move |nc| {
        (0..=(n - nc)).filter_map(move |nr| {
            let nf = n - nc - nr;
            (nf >= min_followers).then_some((nc, nr, nf))
        })
    })
}

fn theorem1(ns: RangeInclusive<usize>) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for n in ns.filter(|&n| n >= 3) {
        for nr in 1..=(n - 2) {
            for k in 1..=(n - nr) {
                let cfg = config(&[(nr, Role::Rejector), (n - nr, Role::RandomFollower)], k);
                let p = build_chain(&cfg)?.absorption_from_start()?.p_decision;
                let bound = theorem1_bound(n, nr, k)?.value();
                rows.push(
                    Row::new("theorem1", label(&cfg), p <= bound + 1e-12)
                        .exact(p)
                        .bound(bound),
                );
            }
        }
    }
    Ok(rows)
}

fn majority_configs(ns: RangeInclusive<usize>) -> Vec<(GameConfig, usize, usize)> {
    let mut out = Vec::new();
    for n in ns {
        for (nc, nr, nf) in splits(n, 2).filter(|s| s.0 >= 1) {
            for k in (nc + 1)..=(n - nr) {
                let groups = [
                    (nc, Role::Consentor),
                    (nr, Role::Rejector),
                    (nf, Role::MajorityFollower),
                ];
                out.push((config(&groups, k), nc, nr));
            }
        }
    }
    out
}

fn theorem2(ns: RangeInclusive<usize>) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for (cfg, nc, nr) in majority_configs(ns) {
        let q = build_chain(&cfg)?.absorption_from_start()?.p_no_decision;
        let bound = theorem2_bound(cfg.n(), nc, nr)?.value();
        rows.push(
            Row::new("theorem2", label(&cfg), q <= bound + 1e-12)
                .exact(q)
                .bound(bound),
        );
    }
    Ok(rows)
}

fn majority_census(ns: RangeInclusive<usize>) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for (cfg, _, _) in majority_configs(ns) {
        let chain = build_chain(&cfg)?;
        let stuck = chain
            .classification()
            .iter()
            .filter(|c| **c == StateClass::AbsorbingNoDecision)
            .count();
        let pass = verify_lemma7(&chain)? && chain.absorbs_almost_surely();
        rows.push(Row::new("majority_census", label(&cfg), pass).exact(stuck as f64));
    }
    Ok(rows)
}

fn sure_decision(ns: RangeInclusive<usize>) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for n in ns {
        for (nc, nr, nf) in splits(n, 1).filter(|s| s.0 >= 1) {
            for k in (nc + 1)..=(n - nr) {
                let groups = [
                    (nc, Role::Consentor),
                    (nr, Role::Rejector),
                    (nf, Role::RandomFollower),
                ];
                let cfg = config(&groups, k);
                let a = build_chain(&cfg)?.absorption_from_start()?;
                let pass = (a.p_decision - 1.0).abs() < 1e-10 && a.residual < 1e-10;
                rows.push(
                    Row::new("sure_decision", label(&cfg), pass)
                        .exact(a.p_decision)
                        .bound(1.0),
                );
            }
        }
    }
    Ok(rows)
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn z_drift_rows(ns: RangeInclusive<usize>) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for n in ns.filter(|&n| n >= 2) {
        for nr in 0..n {
            let cfg = config(&[(nr, Role::Rejector), (n - nr, Role::RandomFollower)], n);
            for z in 0..=(n - nr) {
                let exact = one_step_z_drift(&cfg, &LumpedState { counts: vec![z] })?;
                let closed = z_drift(n, nr, z);
                let closed =
                    BigRational::new(BigInt::from(*closed.numer()), BigInt::from(*closed.denom()));
                let config = format!("{} z={z}", cfg.population());
                rows.push(
                    Row::new("z_drift", config, exact == closed)
                        .exact(to_f64(&exact))
                        .bound(to_f64(&closed)),
                );
            }
        }
    }
    Ok(rows)
}

/// Extreme W drift over all lumped states: the largest for majority
/// followers (must be <= 0), the smallest for minority followers (>= 0).
fn w_drift_rows(ns: RangeInclusive<usize>) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for n in ns.filter(|&n| n >= 2) {
        for (nc, nr, nf) in splits(n, 1) {
            for role in [Role::MajorityFollower, Role::MinorityFollower] {
                let cfg = config(
                    &[(nc, Role::Consentor), (nr, Role::Rejector), (nf, role)],
                    n,
                );
                let mut drifts = Vec::new();
                for m in 0..=nf {
                    drifts.push(one_step_w_drift(&cfg, &LumpedState { counts: vec![m] })?);
                }
                let (extreme, pass) = if role == Role::MajorityFollower {
                    let hi = drifts.iter().max().unwrap().clone();
                    let ok = !hi.is_positive();
                    (hi, ok)
                } else {
                    let lo = drifts.iter().min().unwrap().clone();
                    let ok = !lo.is_negative();
                    (lo, ok)
                };
                rows.push(
                    Row::new("w_drift", cfg.population().to_string(), pass)
                        .exact(to_f64(&extreme))
                        .bound(0.0),
                );
            }
        }
    }
    Ok(rows)
}

fn expected_w0_rows(ns: RangeInclusive<usize>) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for n in ns.filter(|&n| n >= 1) {
        for (nc, nr, nf) in splits(n, 0) {
            if nf > 20 {
                return Err(CliError::usage(
                    "expected_w0 enumeration is limited to 20 followers",
                ));
            }
            let total: u64 = (0u64..1 << nf)
                .map(|mask| {
                    let z = (nc + mask.count_ones() as usize) as u64;
                    2 * z * (n as u64 - z)
                })
                .sum();
            let formula = expected_w0(n, nc, nr)?;
            let config = format!("n={n} n_c={nc} n_r={nr}");
            rows.push(
                Row::new("expected_w0", config, formula << nf == total)
                    .exact(total as f64 / (1u64 << nf) as f64)
                    .bound(formula as f64),
            );
        }
    }
    Ok(rows)
}

/// Compositions of `n` over `parts` slots.
fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![n]];
    }
    (0..=n)
        .rev()
        .flat_map(|first| {
            compositions(n - first, parts - 1)
                .into_iter()
                .map(move |mut rest| {
                    rest.insert(0, first);
                    rest
                })
        })
        .collect()
}

/// Lumped decision probability in `exact`, full-chain value in `bound`;
/// passes when every opinion vector agrees within 1e-10.
fn lumping(ns: RangeInclusive<usize>) -> Result<Vec<Row>, CliError> {
    let kinds = [
        Role::Rejector,
        Role::Consentor,
        Role::RandomFollower,
        Role::MajorityFollower,
        Role::MinorityFollower,
        Role::NEUTRALIST,
    ];
    let mut rows = Vec::new();
    for n in ns.filter(|&n| n >= 1) {
        for counts in compositions(n, kinds.len()) {
            let groups: Vec<(usize, Role)> = counts.into_iter().zip(kinds).collect();
            let population = Population::from_groups(&groups)?;
            for k in 1..=n {
                let Ok(cfg) = GameConfig::new(population.clone(), k, Mode::Asynchronous, 0) else {
                    continue;
                };
                let chain = build_chain(&cfg)?;
                let full = full_decision_probabilities(&cfg)?;
                let layout = chain.layout();
                let mut worst: f64 = 0.0;
                for (mask, &h) in full.iter().enumerate() {
                    let x: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                    let consistent = population.roles().iter().zip(&x).all(|(r, &v)| match r {
                        Role::Rejector => !v,
                        Role::Consentor => v,
                        _ => true,
                    });
                    if consistent {
                        let lumped = chain.p_decision()[layout.encode(&layout.lump(&x))];
                        worst = worst.max((lumped - h).abs());
                    }
                }
                let p_lumped = chain.absorption_from_start()?.p_decision;
                let p_full = full_decision_probability(&cfg)?;
                worst = worst.max((p_lumped - p_full).abs());
                rows.push(
                    Row::new("lumping", label(&cfg), worst < 1e-10)
                        .exact(p_lumped)
                        .bound(p_full),
                );
            }
        }
    }
    Ok(rows)
}

fn montecarlo(check: &Check, seed: u64, workers: usize) -> Result<Vec<Row>, CliError> {
    let (Some(pop), Some(k)) = (&check.pop, check.k) else {
        return Err(CliError::usage("montecarlo checks need `pop` and `k`"));
    };
    let cfg = GameConfig::new(
        parse_population(pop)?,
        k,
        Mode::Asynchronous,
        check.seed.unwrap_or(seed),
    )?;
    let exact = build_chain(&cfg)?.absorption_from_start()?.p_decision;
    let trials = check.trials.unwrap_or(20_000);
    let est = if workers == 0 {
        estimate(&cfg, trials)
    } else {
        estimate_with_workers(&cfg, trials, workers)
    };
    let (lo, hi) = est.wilson_ci_99;
    let mut row = Row::new(
        "montecarlo",
        format!("{} seed={}", label(&cfg), cfg.master_seed()),
        lo <= exact && exact <= hi,
    )
    .exact(exact);
    row.mc = Some(est.p_decision_hat);
    row.ci_lo = Some(lo);
    row.ci_hi = Some(hi);
    Ok(vec![row])
}

fn run_check(check: &Check, args: &VerifyArgs) -> Result<Vec<Row>, CliError> {
    let ns = match check.n {
        Some([lo, hi]) if lo <= hi => lo..=hi,
        Some([lo, hi]) => return Err(CliError::usage(format!("empty range n = [{lo}, {hi}]"))),
        None if check.kind == Kind::Montecarlo => 0..=0,
        None => {
            return Err(CliError::usage(format!(
                "{:?} check needs an `n` range",
                check.kind
            )))
        }
    };
    match check.kind {
        Kind::Theorem1 => theorem1(ns),
        Kind::Theorem2 => theorem2(ns),
        Kind::MajorityCensus => majority_census(ns),
        Kind::SureDecision => sure_decision(ns),
        Kind::ZDrift => z_drift_rows(ns),
        Kind::WDrift => w_drift_rows(ns),
        Kind::ExpectedW0 => expected_w0_rows(ns),
        Kind::Lumping => lumping(ns),
        Kind::Montecarlo => montecarlo(check, args.seed, args.workers),
    }
}

fn load_grid(args: &VerifyArgs) -> Result<Grid, CliError> {
    let text = match &args.grid {
        Some(path) => std::fs::read_to_string(path)?,
        None => DEFAULT_GRID.to_string(),
    };
    toml::from_str(&text).map_err(|e| CliError::usage(format!("invalid grid: {e}")))
}

pub fn run(args: &VerifyArgs) -> Result<u8, CliError> {
    let grid = load_grid(args)?;
    let mut rows = Vec::new();
    for check in &grid.check {
        rows.extend(run_check(check, args)?);
    }
    let offenders: Vec<&Row> = rows.iter().filter(|r| !r.pass).collect();
    for r in &offenders {
        let show = |x: Option<f64>| x.map_or("-".to_string(), |v| round12(v).to_string());
        eprintln!(
            "FAIL {} [{}]: exact={} bound={} mc={}",
            r.check,
            r.config,
            show(r.exact),
            show(r.bound),
            show(r.mc)
        );
    }
    eprintln!("verify: {} rows, {} failed", rows.len(), offenders.len());
    let failed = !offenders.is_empty();
    let values = rows
        .iter()
        .map(serde_json::to_value)
        .collect::<Result<Vec<_>, _>>()?;
    emit_rows("verify", values, args.format, args.out.as_deref())?;
    Ok(if failed { EXIT_VERIFY_FAILED } else { 0 })
}
