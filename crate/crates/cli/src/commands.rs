use std::fs::File;

use serde_json::{json, Value};

use nkgame::exact::{
    build_chain_with_cap, geometric_decision_law, lemma2_bounds, verify_lemma7, ChainAnalysis,
};
use nkgame::formulas::{expected_w0, theorem1_bound, theorem2_bound};
use nkgame::montecarlo::{run_trials, run_trials_with_workers, summarize};
use nkgame::{GameConfig, Mode, Role};

use crate::output::{applicable, emit, num, SCHEMA_VERSION};
use crate::{CliError, ExactArgs, RunArgs, SimulateArgs, EXIT_TRUNCATED};

fn config_value(config: &GameConfig) -> Value {
    json!({
        "population": config.population().to_string(),
        "n": config.n(),
        "k": config.k(),
        "mode": config.mode().to_string(),
        "seed": config.master_seed(),
        "max_steps": config.max_steps(),
    })
}

fn bound_value(b: nkgame::formulas::Bound) -> Value {
    json!({ "value": num(b.value()), "exact": b.exact.to_string(), "vacuous": b.is_vacuous() })
}

/// Every closed-form quantity whose preconditions the population meets.
pub fn bounds_value(config: &GameConfig) -> Value {
    let census = config.population().census();
    let (n, k) = (config.n(), config.k());
    let (nc, nr) = (census.consentors, census.rejectors);
    let others = |allowed: usize| n - nc - nr - allowed;

    let theorem1 = if nc > 0 || others(census.random) > 0 {
        Err("needs rejectors and random followers only".to_string())
    } else {
        theorem1_bound(n, nr, k)
            .map(bound_value)
            .map_err(|e| e.to_string())
    };
    let theorem2 = if others(census.majority) > 0 {
        Err("needs consentors, rejectors and majority followers only".to_string())
    } else if k > n - nr {
        Err(format!(
            "threshold {k} exceeds the {} non-rejectors",
            n - nr
        ))
    } else {
        theorem2_bound(n, nc, nr)
            .map(bound_value)
            .map_err(|e| e.to_string())
    };
    let half_start = config.population().roles().iter().all(|r| {
        matches!(r, Role::Rejector | Role::Consentor) || r.initial_one_probability() == 0.5
    });
    let w0 = if half_start {
        expected_w0(n, nc, nr)
            .map(Value::from)
            .map_err(|e| e.to_string())
    } else {
        Err("free agents must start with probability 1/2".to_string())
    };
    let geometric = geometric_decision_law(config)
        .map(|law| {
            json!({
                "regime": law.regime,
                "p": num(law.p),
                "rounds": num(law.expected_rounds),
                "expected_t": num(law.expected_t),
                "p_decision": num(law.p_decision),
            })
        })
        .map_err(|e| e.to_string());
    let rounds = lemma2_bounds(config)
        .map(|b| {
            json!({
                "p_max": num(b.p_max),
                "p_min": num(b.p_min),
                "rounds_low": num(b.rounds_low),
                "rounds_high": num(b.rounds_high),
            })
        })
        .map_err(|e| e.to_string());
    json!({
        "theorem1": applicable(theorem1),
        "theorem2": applicable(theorem2),
        "expected_w0": applicable(w0),
        "geometric": applicable(geometric),
        "round_bounds": applicable(rounds),
    })
}

fn chain_value(chain: &ChainAnalysis) -> Result<Value, CliError> {
    let a = chain.absorption_from_start()?;
    let census = chain.census();
    let majority = match verify_lemma7(chain) {
        Ok(holds) => json!({ "status": "ok", "followers_at_zero": holds }),
        Err(e) => applicable(Err(e.to_string())),
    };
    Ok(json!({
        "p_decision": num(a.p_decision),
        "p_no_decision": num(a.p_no_decision),
        "expected_steps": num(a.expected_steps),
        "residual": num(a.residual),
        "census": census,
        "majority_census": majority,
    }))
}

pub fn simulate(args: &SimulateArgs) -> Result<u8, CliError> {
    let config = args.run.config()?;
    let outcomes = if args.workers == 0 {
        run_trials(&config, args.trials)
    } else {
        run_trials_with_workers(&config, args.trials, args.workers)
    };
    let est = summarize(&outcomes);
    if let Some(path) = &args.records {
        let mut w = csv::Writer::from_writer(File::create(path)?);
        w.write_record([
            "trial",
            "decided",
            "decision_time",
            "frozen",
            "freeze_time",
            "truncated",
            "final_z",
        ])?;
        let opt = |x: Option<u64>| x.map_or(String::new(), |v| v.to_string());
        for (i, o) in outcomes.iter().enumerate() {
            w.write_record([
                i.to_string(),
                o.decided.to_string(),
                opt(o.decision_time),
                o.frozen.to_string(),
                opt(o.freeze_time),
                o.truncated.to_string(),
                o.final_z.to_string(),
            ])?;
        }
        w.flush()?;
    }
    let exact = if args.exact {
        let chain = build_chain_with_cap(&config, nkgame::exact::DEFAULT_STATE_CAP)?;
        chain_value(&chain)?
    } else {
        Value::Null
    };
    let mut cfg = config_value(&config);
    cfg["trials"] = args.trials.into();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "config": cfg,
        "p_decision": est.p_decision_hat,
        "ci99": { "lo": est.wilson_ci_99.0, "hi": est.wilson_ci_99.1 },
        "decided": est.decided,
        "mean_decision_time": est.mean_decision_time,
        "frozen_rate": est.frozen_rate,
        "mean_freeze_time": est.mean_freeze_time,
        "truncation_rate": est.truncation_rate,
        "bounds": bounds_value(&config),
        "exact": exact,
    });
    emit(doc, args.run.output.format, args.run.output.out.as_deref())?;
    if est.truncation_rate > 0.1 {
        eprintln!(
            "warning: {:.1}% of trials hit max_steps",
            100.0 * est.truncation_rate
        );
        return Ok(EXIT_TRUNCATED);
    }
    Ok(0)
}

pub fn exact(args: &ExactArgs) -> Result<u8, CliError> {
    let config = args.run.config()?;
    let mut cfg = config_value(&config);
    let (p_decision, exact) = match config.mode() {
        Mode::Asynchronous => {
            cfg["max_states"] = args.max_states.into();
            let chain = build_chain_with_cap(&config, args.max_states)?;
            if let Some(path) = &args.dump {
                serde_json::to_writer_pretty(File::create(path)?, &chain.dump())?;
            }
            let value = chain_value(&chain)?;
            (value["p_decision"].clone(), value)
        }
        Mode::Synchronous => {
            let law = geometric_decision_law(&config).map_err(|e| {
                CliError::usage(format!(
                    "synchronous exact analysis covers rejector, consentor and Bernoulli agents only: {e}"
                ))
            })?;
            let value = json!({
                "regime": law.regime,
                "p_round": num(law.p),
                "p_decision": num(law.p_decision),
                "expected_rounds": num(law.expected_rounds),
                "expected_t": num(law.expected_t),
            });
            (value["p_decision"].clone(), value)
        }
    };
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "exact",
        "config": cfg,
        "p_decision": p_decision,
        "exact": exact,
    });
    emit(doc, args.run.output.format, args.run.output.out.as_deref())?;
    Ok(0)
}

pub fn bounds(args: &RunArgs) -> Result<u8, CliError> {
    let config = args.config()?;
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "bounds",
        "config": config_value(&config),
        "bounds": bounds_value(&config),
    });
    emit(doc, args.output.format, args.output.out.as_deref())?;
    Ok(0)
}
