//! Data behind the figures. Each table has one row per x value (epsilon,
//! or beta for figure 13) and one column per curve.

use rayon::prelude::*;

use harq_power::optimizer::{
    optimize, power_efficiency_of, relative_throughput_loss_of, HarqScheme, Objective, OptimizationResult,
    OptimizerConfig,
};
use harq_power::rng::derive_seed;
use harq_power::simulator::{
    simulate_reinforcement, static_uniform_power, tune_reinforcement, CorrelatedSaa, ReinforcementGrid,
    ReinforcementPolicy,
};
use harq_power::{from_db, to_db, HarqError, PowerPolicy, RtdSpec};

use crate::error::CliError;
use crate::table::{Cell, Table};
use crate::{or_default, ModelArg, Params, ProtocolArg};

const EPS_GRID: [f64; 12] = [1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2, 0.5];
const SAA_EPS_GRID: [f64; 8] = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2];
const BETA_GRID: [f64; 8] = [0.0, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 1.0];
const SAA_SAMPLES: usize = 200_000;

const PROTOCOLS: [ProtocolArg; 2] = [ProtocolArg::Rtd, ProtocolArg::Inr];
const MODELS: [ModelArg; 2] = [ModelArg::Bursting, ModelArg::Continuous];

type Curve<'a> = (Vec<String>, Box<dyn Fn(usize, f64) -> Result<Vec<Cell>, CliError> + Sync + 'a>);

fn db_cells(policy: &PowerPolicy<f64>) -> Vec<Cell> {
    policy.powers().iter().map(|&x| to_db(x).into()).collect()
}

fn round_columns(m: usize, prefix: &str) -> Vec<String> {
    (1..=m + 1).map(|k| format!("{prefix}P{k}_db")).collect()
}

fn short_term(p: &Params, protocol: ProtocolArg, rate: f64, m: usize, eps: f64) -> Result<f64, CliError> {
    Ok(protocol.scheme(rate, m)?.short_term_power(eps, &p.fading(1.0)?)?)
}

struct Optimum {
    objective: Objective<f64>,
    result: OptimizationResult<f64>,
}

fn optimum(
    p: &Params,
    protocol: ProtocolArg,
    model: ModelArg,
    rate: f64,
    m: usize,
    eps: f64,
    idx: usize,
) -> Result<Optimum, CliError> {
    let objective = Objective::new(protocol.scheme(rate, m)?, model.into(), p.fading(1.0)?, eps)?;
    let cfg = OptimizerConfig::default().with_seed(derive_seed(p.seed(), &[idx as u64]));
    let result = optimize(&objective, &cfg)?;
    Ok(Optimum { objective, result })
}

fn sweep(x_name: &str, xs: &[f64], curves: Vec<Curve<'_>>) -> Result<Table, CliError> {
    let mut table = Table::new([x_name.to_owned()]);
    for (cols, _) in &curves {
        table.columns.extend(cols.iter().cloned());
    }
    let rows: Vec<Result<Vec<Cell>, CliError>> = xs
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut row = vec![Cell::from(x)];
            for (_, f) in &curves {
                row.extend(f(i, x)?);
            }
            Ok(row)
        })
        .collect();
    for row in rows {
        table.push(row?);
    }
    Ok(table)
}

pub fn figure(id: u32, p: &Params) -> Result<Table, CliError> {
    let eps = or_default(&p.epsilon, &EPS_GRID);
    let rate = p.r.first().copied().unwrap_or(1.0);
    let m = p.m.first().copied().unwrap_or(1);
    let protocol = p.protocol();
    let model = p.model();
    match id {
        3 | 4 => {
            let rates = if id == 3 { or_default(&p.r, &[1.0, 0.5]) } else { vec![rate] };
            let mut curves: Vec<Curve> = Vec::new();
            for r in rates {
                let tag = if id == 3 { format!("_R{r}") } else { String::new() };
                let mut cols = vec![format!("short_term{tag}_db"), format!("long_term{tag}_db")];
                cols.extend(round_columns(m, "").into_iter().map(|c| c.replace("_db", &format!("{tag}_db"))));
                curves.push((
                    cols,
                    Box::new(move |i, e| {
                        let o = optimum(p, protocol, model, r, m, e, i)?;
                        let mut row = vec![to_db(short_term(p, protocol, r, m, e)?).into(), to_db(o.result.objective()).into()];
                        row.extend(db_cells(&o.result.best_policy));
                        Ok(row)
                    }),
                ));
            }
            sweep("epsilon", &eps, curves)
        }
        5 => {
            let curves = or_default(&p.m, &[1, 2, 3])
                .into_iter()
                .map(|mm| -> Curve {
                    (
                        vec![format!("delta_phi_M{mm}_db")],
                        Box::new(move |i, e| {
                            let o = optimum(p, protocol, model, rate, mm, e, i)?;
                            Ok(vec![power_efficiency_of(&o.objective, &o.result)?.into()])
                        }),
                    )
                })
                .collect();
            sweep("epsilon", &eps, curves)
        }
        6 | 7 | 9 | 10 => {
            let mut curves: Vec<Curve> = Vec::new();
            for proto in PROTOCOLS {
                let name = proto.name();
                if id == 6 {
                    curves.push((
                        vec![format!("{name}_short_term_db")],
                        Box::new(move |_, e| Ok(vec![to_db(short_term(p, proto, rate, m, e)?).into()])),
                    ));
                }
                for md in MODELS {
                    let prefix = format!("{name}_{}_", md.name());
                    let cols = match id {
                        6 => vec![format!("{prefix}db")],
                        7 => round_columns(m, &prefix),
                        9 => vec![format!("{prefix}short_term_throughput")],
                        _ => vec![format!("{prefix}long_term_throughput"), format!("{prefix}short_term_throughput")],
                    };
                    curves.push((
                        cols,
                        Box::new(move |i, e| {
                            let short = || -> Result<f64, CliError> {
                                let scheme = proto.scheme(rate, m)?;
                                let policy = PowerPolicy::uniform(short_term(p, proto, rate, m, e)?, m + 1)?;
                                Ok(scheme.metrics(&policy, &p.fading(1.0)?, md.into())?.throughput)
                            };
                            Ok(match id {
                                6 => vec![to_db(optimum(p, proto, md, rate, m, e, i)?.result.objective()).into()],
                                7 => db_cells(&optimum(p, proto, md, rate, m, e, i)?.result.best_policy),
                                9 => vec![short()?.into()],
                                _ => vec![
                                    optimum(p, proto, md, rate, m, e, i)?.result.achieved.throughput.into(),
                                    short()?.into(),
                                ],
                            })
                        }),
                    ));
                }
            }
            sweep("epsilon", &eps, curves)
        }
        8 => {
            let mut curves: Vec<Curve> = Vec::new();
            for mm in or_default(&p.m, &[1, 2]) {
                for proto in PROTOCOLS {
                    curves.push((
                        vec![format!("{}_M{mm}_short_term_db", proto.name())],
                        Box::new(move |_, e| Ok(vec![to_db(short_term(p, proto, rate, mm, e)?).into()])),
                    ));
                }
            }
            sweep("epsilon", &eps, curves)
        }
        11 => {
            let curves = MODELS
                .into_iter()
                .map(|md| -> Curve {
                    (
                        vec![format!("{}_delta_phi_db", md.name()), format!("{}_delta_eta", md.name())],
                        Box::new(move |i, e| {
                            let o = optimum(p, protocol, md, rate, m, e, i)?;
                            Ok(vec![
                                power_efficiency_of(&o.objective, &o.result)?.into(),
                                relative_throughput_loss_of(&o.objective, &o.result)?.into(),
                            ])
                        }),
                    )
                })
                .collect();
            sweep("epsilon", &eps, curves)
        }
        12 => figure_12(p, protocol, rate),
        13 => figure_13(p, protocol, rate),
        14 => figure_14(p, rate),
        _ => Err(CliError::Config(format!("no figure {id}; figures are 3 to 14"))),
    }
}

/// Sample-average minimum power against epsilon, one curve per beta.
/// Points where the sample problem has no solution are left empty.
fn figure_12(p: &Params, protocol: ProtocolArg, rate: f64) -> Result<Table, CliError> {
    let eps = or_default(&p.epsilon, &SAA_EPS_GRID);
    let betas = or_default(&p.beta, &[0.0, 0.5, 0.9, 1.0]);
    let n = p.packets(SAA_SAMPLES)?;
    let mut table = Table::new(["epsilon".to_owned()]);
    let mut columns = Vec::new();
    for (j, &beta) in betas.iter().enumerate() {
        table.columns.push(format!("beta_{beta}_db"));
        let saa = CorrelatedSaa::new(protocol.scheme(rate, 1)?, p.fading(beta)?, n, derive_seed(p.seed(), &[j as u64]))?;
        let col: Vec<Result<Cell, CliError>> = eps
            .par_iter()
            .map(|&e| match saa.min_power(e) {
                Ok(s) => Ok(to_db(s.avg_power).into()),
                Err(HarqError::Infeasible(_)) => Ok(Cell::Empty),
                Err(err) => Err(err.into()),
            })
            .collect();
        columns.push(col.into_iter().collect::<Result<Vec<_>, _>>()?);
    }
    for (i, &e) in eps.iter().enumerate() {
        let mut row = vec![Cell::from(e)];
        row.extend(columns.iter().map(|c| c[i].clone()));
        table.push(row);
    }
    Ok(table)
}

/// Outage of the optimal and of the uniform allocation at a fixed average
/// power budget (`--power`, default 10 dB) against beta.
fn figure_13(p: &Params, protocol: ProtocolArg, rate: f64) -> Result<Table, CliError> {
    let betas = or_default(&p.beta, &BETA_GRID);
    let budget = from_db(p.power.first().copied().unwrap_or(10.0));
    let n = p.packets(SAA_SAMPLES)?;
    let curve: Curve = (
        ["optimal_outage", "uniform_outage", "outage_ratio_db", "optimal_P1_db", "optimal_P2_db"]
            .map(String::from)
            .to_vec(),
        Box::new(move |i, beta| {
            let saa = CorrelatedSaa::new(protocol.scheme(rate, 1)?, p.fading(beta)?, n, derive_seed(p.seed(), &[i as u64]))?;
            let opt = saa.min_outage(budget)?;
            let uni = saa.uniform_outage(budget)?;
            let mut row = vec![opt.outage.into(), uni.outage.into(), to_db(uni.outage / opt.outage).into()];
            row.extend(db_cells(&opt.policy));
            Ok(row)
        }),
    );
    sweep("beta", &betas, vec![curve])
}

/// Correlated RTD with one retransmission: best static uniform power, the
/// sample-average optimal static allocation and the tuned reinforcement
/// scheme. Static and adaptive schemes are tuned on one seed and reported on
/// a fresh one.
fn figure_14(p: &Params, rate: f64) -> Result<Table, CliError> {
    if p.protocol() != ProtocolArg::Rtd {
        return Err(CliError::Config("figure 14 is defined for rtd only".into()));
    }
    let eps = or_default(&p.epsilon, &[1e-2, 2e-2, 5e-2, 0.1]);
    let beta = p.beta.first().copied().unwrap_or(0.9);
    let n = p.packets(SAA_SAMPLES)?;
    let spec = RtdSpec::new(rate, 1)?;
    let fading = p.fading(beta)?;
    let mut table = Table::new(
        [
            "epsilon",
            "static_uniform_db",
            "static_outage",
            "saa_optimal_db",
            "saa_outage",
            "reinforcement_db",
            "reinforcement_outage",
            "p_initial_db",
            "d1",
            "d2",
            "d3",
            "d4",
        ]
        .map(String::from),
    );
    for (i, &e) in eps.iter().enumerate() {
        let tune_seed = derive_seed(p.seed(), &[i as u64, 0]);
        let eval_seed = derive_seed(p.seed(), &[i as u64, 1]);
        let (static_power, _) = static_uniform_power(&spec, &fading, e, n, tune_seed)?;
        let static_eval = simulate_reinforcement(&ReinforcementPolicy::fixed(static_power), &spec, &fading, n, eval_seed)?;
        let saa = CorrelatedSaa::new(HarqScheme::Rtd(spec), fading, n, tune_seed)?.min_power(e)?;
        let tuned = tune_reinforcement(&spec, &fading, e, &ReinforcementGrid::around(static_power), n, tune_seed)?;
        let eval = simulate_reinforcement(&tuned.policy, &spec, &fading, n, eval_seed)?;
        let mut row: Vec<Cell> = vec![
            e.into(),
            to_db(static_eval.estimates.avg_power.mean).into(),
            static_eval.estimates.outage.mean.into(),
            to_db(saa.avg_power).into(),
            saa.outage.into(),
            to_db(eval.estimates.avg_power.mean).into(),
            eval.estimates.outage.mean.into(),
            to_db(tuned.policy.p_initial).into(),
        ];
        row.extend(tuned.policy.d.iter().map(|&d| Cell::from(d)));
        table.push(row);
    }
    Ok(table)
}
