use mqm_core::pointer::{score_vs_delta, suboptimality_epsilon_bound, thermal_mqm_score};
use mqm_core::thermal::ThermalSpec;
use mqm_core::weak::{tmax_scan, weak1d_analytic_score, weak1d_curve, TmaxRow};
use mqm_core::{Execution, HalfInt};

use crate::config::{default_rounds, ExperimentConfig, ExperimentKind, SweepTarget};
use crate::table::{Metadata, ResultTable};
use crate::RunError;

/// Runs `config` after filling preset defaults and validating it.
pub fn run(config: &ExperimentConfig, exec: Execution) -> Result<ResultTable, RunError> {
    let config = config.clone().with_defaults();
    config.validate()?;
    let meta = Metadata::new(config.clone());
    match (config.experiment, config.target()?) {
        (_, SweepTarget::Pointer) => pointer(&config, meta, exec),
        (_, SweepTarget::Thermal) => thermal(&config, meta, exec),
        (_, SweepTarget::Weak1d) => weak1d(&config, meta, exec),
        (ExperimentKind::Fig5, SweepTarget::Weak3d) => weak3d_summary(&config, meta, exec, true),
        (ExperimentKind::Fig4, SweepTarget::Weak3d) => weak3d_curves(&config, meta, exec),
        (_, SweepTarget::Weak3d) => weak3d_summary(&config, meta, exec, false),
    }
}

fn spins(config: &ExperimentConfig) -> Vec<HalfInt> {
    config
        .j_list
        .iter()
        .flatten()
        .map(|&j| HalfInt::from_f64(j).expect("validated"))
        .collect()
}

fn pointer(
    config: &ExperimentConfig,
    meta: Metadata,
    exec: Execution,
) -> Result<ResultTable, RunError> {
    let mut table = ResultTable::new(meta, &["J", "delta", "G", "G_opt", "eps_J", "eps_oj_bound"]);
    for total in spins(config) {
        let deltas = widths(config, total.twice() as f64)?;
        for p in score_vs_delta(total, &deltas, exec)? {
            table.push(vec![
                total.value(),
                p.delta,
                p.score,
                p.optimal_score,
                p.epsilon,
                suboptimality_epsilon_bound(total, p.top_moment),
            ]);
        }
    }
    Ok(table)
}

fn widths(config: &ExperimentConfig, n_particles: f64) -> Result<Vec<f64>, RunError> {
    config
        .delta
        .iter()
        .flatten()
        .map(|d| d.eval(n_particles))
        .collect()
}

fn thermal(
    config: &ExperimentConfig,
    meta: Metadata,
    exec: Execution,
) -> Result<ResultTable, RunError> {
    let figure = config.experiment == ExperimentKind::Fig2;
    let columns: &[&str] = if figure {
        &["J", "beta", "J_dG"]
    } else {
        &[
            "J",
            "beta",
            "polarization",
            "J_eq",
            "delta",
            "G",
            "G_opt",
            "J_dG",
        ]
    };
    let mut table = ResultTable::new(meta, columns);
    for total in spins(config) {
        let specs: Vec<ThermalSpec> = match (&config.beta, &config.polarization) {
            (Some(b), _) => b
                .iter()
                .map(|&beta| ThermalSpec::new(total, beta))
                .collect::<Result<_, _>>()?,
            (None, Some(p)) => p
                .iter()
                .map(|&c| ThermalSpec::with_polarization(total, c))
                .collect::<Result<_, _>>()?,
            (None, None) => unreachable!("validated"),
        };
        for spec in specs {
            let r = thermal_mqm_score(spec, exec)?;
            if figure {
                table.push(vec![total.value(), spec.beta, r.scaled_gap]);
            } else {
                let polarization = if spec.beta.is_infinite() {
                    spec.beta.signum()
                } else {
                    (0.5 * spec.beta).tanh()
                };
                table.push(vec![
                    total.value(),
                    spec.beta,
                    polarization,
                    r.j_eq,
                    r.delta,
                    r.breakdown.score,
                    r.breakdown.optimal_score,
                    r.scaled_gap,
                ]);
            }
        }
    }
    Ok(table)
}

fn weak1d(
    config: &ExperimentConfig,
    meta: Metadata,
    exec: Execution,
) -> Result<ResultTable, RunError> {
    let mut table = ResultTable::new(
        meta,
        &[
            "J",
            "delta",
            "t",
            "sqrt_t_over_delta",
            "G_analytic",
            "G_simulated",
            "stderr",
        ],
    );
    let ts = config.t_list.clone().expect("validated");
    let tau = *ts.iter().max().expect("validated");
    let n_traj = config.n_trajectories.expect("validated");
    let seed = config.seed.expect("validated");
    for total in spins(config) {
        for delta in widths(config, total.twice() as f64)? {
            let curve = weak1d_curve(total, tau, delta, n_traj, seed, exec)?;
            for &t in &ts {
                let est = curve[t as usize - 1];
                table.push(vec![
                    total.value(),
                    delta,
                    t as f64,
                    (t as f64).sqrt() / delta,
                    weak1d_analytic_score(total, t, delta),
                    est.mean,
                    est.stderr,
                ]);
            }
        }
    }
    Ok(table)
}

/// One scan per `(N, Δ)`, each with its own round count.
fn scans(config: &ExperimentConfig, exec: Execution) -> Result<Vec<(u64, TmaxRow)>, RunError> {
    let n_traj = config.n_trajectories.expect("validated");
    let seed = config.seed.expect("validated");
    let mut out = Vec::new();
    for &n in config.n_list.iter().flatten() {
        for delta in widths(config, n as f64)? {
            let tau = config.t_max.unwrap_or_else(|| default_rounds(n, delta));
            let row = tmax_scan(n as usize, &[delta], tau, n_traj, seed, exec)?.remove(0);
            out.push((n, row));
        }
    }
    Ok(out)
}

fn weak3d_curves(
    config: &ExperimentConfig,
    meta: Metadata,
    exec: Execution,
) -> Result<ResultTable, RunError> {
    let mut table = ResultTable::new(meta, &["N", "delta", "t", "G", "stderr", "t_max", "ratio"]);
    for (n, row) in scans(config, exec)? {
        for (t, est) in row.curve.iter().enumerate() {
            table.push(vec![
                n as f64,
                row.delta,
                (t + 1) as f64,
                est.mean,
                est.stderr,
                row.t_max as f64,
                row.ratio,
            ]);
        }
    }
    Ok(table)
}

fn weak3d_summary(
    config: &ExperimentConfig,
    meta: Metadata,
    exec: Execution,
    figure: bool,
) -> Result<ResultTable, RunError> {
    let columns: &[&str] = if figure {
        &["N", "delta", "t_max", "G_max", "eps_N"]
    } else {
        &[
            "N",
            "delta",
            "rounds",
            "t_max",
            "G_max",
            "ratio",
            "saturated",
        ]
    };
    let mut table = ResultTable::new(meta, columns);
    for (n, row) in scans(config, exec)? {
        let nf = n as f64;
        if figure {
            table.push(vec![
                nf,
                row.delta,
                row.t_max as f64,
                row.g_max,
                0.5 * nf * (1.0 - row.g_max),
            ]);
        } else {
            let saturated = if row.saturated { 1.0 } else { 0.0 };
            table.push(vec![
                nf,
                row.delta,
                row.curve.len() as f64,
                row.t_max as f64,
                row.g_max,
                row.ratio,
                saturated,
            ]);
        }
    }
    Ok(table)
}
