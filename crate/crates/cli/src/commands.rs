use rayon::prelude::*;

use harq_power::optimizer::{geometric_allocation, optimize as run_optimizer, Objective, OptimizerConfig};
use harq_power::rng::derive_seed;
use harq_power::simulator::{simulate, SimConfig};
use harq_power::{from_db, to_db, Metrics64, PowerPolicy};

use crate::error::CliError;
use crate::table::{Cell, Table};
use crate::{or_default, Method, Params};

pub const DEFAULT_PACKETS: usize = 1_000_000;

fn power_columns(width: usize) -> Vec<String> {
    (1..=width).map(|k| format!("P{k}_db")).collect()
}

fn power_cells(policy: &PowerPolicy<f64>, width: usize) -> Vec<Cell> {
    let p = policy.powers();
    (0..width).map(|k| p.get(k).map(|&x| to_db(x)).into()).collect()
}

fn collect<T: Send>(items: Vec<Result<T, CliError>>) -> Result<Vec<T>, CliError> {
    items.into_iter().collect()
}

#[derive(Debug, Clone, Copy)]
struct EvalPoint {
    rate: f64,
    m: usize,
    epsilon: Option<f64>,
    beta: f64,
}

pub fn evaluate(p: &Params) -> Result<Table, CliError> {
    let protocol = p.protocol();
    let model = p.model();
    let rates = or_default(&p.r, &[1.0]);
    let betas = or_default(&p.beta, &[1.0]);
    let mut points = Vec::new();
    if !p.power.is_empty() {
        if !p.epsilon.is_empty() {
            return Err(CliError::Config("evaluate takes --power or --epsilon, not both".into()));
        }
        let m = p.power.len() - 1;
        if p.m.iter().any(|&x| x != m) {
            return Err(CliError::Config(format!("--power lists {} rounds but --M asks for M = {:?}", m + 1, p.m)));
        }
        for &rate in &rates {
            for &beta in &betas {
                points.push(EvalPoint {
                    rate,
                    m,
                    epsilon: None,
                    beta,
                });
            }
        }
    } else {
        if p.epsilon.is_empty() {
            return Err(CliError::Config("evaluate needs --power (dB per round) or --epsilon".into()));
        }
        for &rate in &rates {
            for &m in &or_default(&p.m, &[1]) {
                for &eps in &p.epsilon {
                    for &beta in &betas {
                        points.push(EvalPoint {
                            rate,
                            m,
                            epsilon: Some(eps),
                            beta,
                        });
                    }
                }
            }
        }
    }
    let width = points.iter().map(|pt| pt.m + 1).max().unwrap_or(1);
    let packets = p.packets(DEFAULT_PACKETS)?;

    let rows = collect(
        points
            .par_iter()
            .enumerate()
            .map(|(i, pt)| -> Result<Vec<Cell>, CliError> {
                let scheme = protocol.scheme(pt.rate, pt.m)?;
                let fading = p.fading(pt.beta)?;
                let policy = match pt.epsilon {
                    None => PowerPolicy::new(p.power.iter().map(|&db| from_db(db)).collect())?,
                    Some(eps) => PowerPolicy::uniform(scheme.short_term_power(eps, &p.fading(1.0)?)?, pt.m + 1)?,
                };
                let (metrics, estimator): (Metrics64, _) = if fading.canonical().is_block() {
                    (scheme.metrics(&policy, &fading, model.into())?, "closed-form")
                } else {
                    let cfg = SimConfig::new(
                        scheme,
                        model.into(),
                        policy.clone(),
                        fading,
                        packets,
                        derive_seed(p.seed(), &[i as u64]),
                    );
                    (simulate(&cfg)?.metrics(), "monte-carlo")
                };
                let mut row: Vec<Cell> = vec![
                    protocol.name().into(),
                    model.name().into(),
                    pt.m.into(),
                    pt.rate.into(),
                    pt.epsilon.into(),
                    pt.beta.into(),
                ];
                row.extend(power_cells(&policy, width));
                row.extend([
                    to_db(metrics.avg_power).into(),
                    metrics.outage.into(),
                    metrics.throughput.into(),
                    metrics.expected_rounds.into(),
                    estimator.into(),
                ]);
                Ok(row)
            })
            .collect(),
    )?;

    let mut table = Table::new(["protocol", "model", "M", "R", "epsilon", "beta"].map(String::from));
    table.columns.extend(power_columns(width));
    table
        .columns
        .extend(["avg_power_db", "outage", "throughput", "expected_rounds", "estimator"].map(String::from));
    table.rows = rows;
    Ok(table)
}

pub fn optimize(p: &Params) -> Result<Table, CliError> {
    let protocol = p.protocol();
    let model = p.model();
    let method = p.method.unwrap_or(Method::Alg1);
    let mut points = Vec::new();
    for &rate in &or_default(&p.r, &[1.0]) {
        for &m in &or_default(&p.m, &[1]) {
            for &eps in &or_default(&p.epsilon, &[1e-3]) {
                for &beta in &or_default(&p.beta, &[1.0]) {
                    points.push((rate, m, eps, beta));
                }
            }
        }
    }
    let width = points.iter().map(|pt| pt.1 + 1).max().unwrap_or(1);

    let results = collect(
        points
            .par_iter()
            .enumerate()
            .map(|(i, &(rate, m, eps, beta))| -> Result<(Vec<Cell>, f64), CliError> {
                let scheme = protocol.scheme(rate, m)?;
                let fading = p.fading(beta)?;
                let obj = Objective::new(scheme.clone(), model.into(), fading, eps)?;
                let (policy, converged, residual) = match method {
                    Method::Alg1 => {
                        let cfg = OptimizerConfig::default().with_seed(derive_seed(p.seed(), &[i as u64]));
                        let r = run_optimizer(&obj, &cfg)?;
                        (r.best_policy, Some(if r.converged { "true" } else { "false" }), None)
                    }
                    Method::Geometric => {
                        let g = geometric_allocation(&scheme, eps, &fading)?;
                        let worst = g.residuals().into_iter().fold(0.0f64, f64::max);
                        (g.policy, None, Some(worst))
                    }
                    Method::ShortTerm => (obj.baseline_policy()?, None, None),
                };
                let metrics = obj.evaluate(&policy)?;
                let baseline = obj.baseline_power()?;
                let delta_phi = if m == 0 {
                    0.0
                } else {
                    to_db(baseline) - to_db(metrics.avg_power)
                };
                let mut row: Vec<Cell> = vec![
                    protocol.name().into(),
                    model.name().into(),
                    method.name().into(),
                    m.into(),
                    rate.into(),
                    eps.into(),
                    beta.into(),
                ];
                row.extend(power_cells(&policy, width));
                row.extend([
                    to_db(metrics.avg_power).into(),
                    to_db(baseline).into(),
                    delta_phi.into(),
                    metrics.outage.into(),
                    metrics.throughput.into(),
                    metrics.expected_rounds.into(),
                    converged.into(),
                    residual.into(),
                ]);
                Ok((row, delta_phi))
            })
            .collect(),
    )?;

    let mut table = Table::new(["protocol", "model", "method", "M", "R", "epsilon", "beta"].map(String::from));
    table.columns.extend(power_columns(width));
    table.columns.extend(
        [
            "avg_power_db",
            "baseline_db",
            "delta_phi_db",
            "outage",
            "throughput",
            "expected_rounds",
            "converged",
            "max_residual",
        ]
        .map(String::from),
    );
    for ((rate, m, eps, _), (row, delta_phi)) in points.iter().zip(results) {
        eprintln!(
            "{} {} M={m} R={rate} epsilon={eps}: delta_phi = {delta_phi:.3} dB",
            protocol.name(),
            model.name()
        );
        table.push(row);
    }
    Ok(table)
}
